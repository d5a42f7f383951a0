//! The `migra` command line.
//!
//! Exit codes: 0 success, 1 semantic failure (invalid metamodel, failed
//! assumption, failed verification, unsupported construct, models differ),
//! 2 usage, parse or I/O error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use migra_core::activity::print_stmt;
use migra_core::engine::{
    compile_constraint, execute_chain, order_phases, parse_usecases, EngineError, RunOptions, UseCase,
};
use migra_core::expr::{evaluate, parse_expr, Env};
use migra_core::gmf;
use migra_core::metamodel::{parse_metamodel, validate, Metamodel, MetamodelError};
use migra_core::model::{isomorphic, parse_model, Isomorphism, Model, ModelError};

#[derive(Debug, Parser)]
#[command(name = "migra", version, about = "Constraint-driven in-place model migration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    /// The GMF figure migration: its metamodel and the createTarget and
    /// cleanup use cases.
    Gmf,
}

#[derive(Debug, Args)]
pub struct MetamodelArgs {
    /// Metamodel file.
    #[arg(long, value_name = "FILE")]
    pub metamodel: Option<PathBuf>,
    /// Use bundled assets instead of files.
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a metamodel and optionally a model against it.
    Validate {
        #[command(flatten)]
        mm: MetamodelArgs,
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
    },
    /// Run a chain of use cases on a model.
    Run {
        #[command(flatten)]
        mm: MetamodelArgs,
        /// Use-case file; repeat to chain several files.
        #[arg(long, value_name = "FILE")]
        spec: Vec<PathBuf>,
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long = "out", value_name = "FILE")]
        output: PathBuf,
        /// Keep intermediate models here instead of a temporary directory.
        #[arg(long, value_name = "DIR")]
        intermediate_dir: Option<PathBuf>,
        #[arg(long)]
        no_verify: bool,
        /// Run even when assumptions fail.
        #[arg(long)]
        force: bool,
    },
    /// Write the activity of every constraint and the phase order.
    Compile {
        #[command(flatten)]
        mm: MetamodelArgs,
        #[arg(long, value_name = "FILE")]
        spec: Vec<PathBuf>,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Evaluate an expression on a model.
    Eval {
        #[command(flatten)]
        mm: MetamodelArgs,
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(short = 'e', value_name = "EXPR", allow_hyphen_values = true)]
        expr: String,
    },
    /// Compare two models up to object renaming.
    Diff {
        #[command(flatten)]
        mm: MetamodelArgs,
        a: PathBuf,
        b: PathBuf,
    },
}

/// A failed command and its exit code.
#[derive(Debug)]
pub enum Failure {
    /// Exit 1.
    Semantic(String),
    /// Exit 2.
    Usage(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Semantic(_) => 1,
            Failure::Usage(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Semantic(m) | Failure::Usage(m) => m,
        }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Syntax(_) | EngineError::Invalid(_) | EngineError::Io(_) | EngineError::Model(_) => {
                Failure::Usage(e.to_string())
            }
            EngineError::Unsupported { .. }
            | EngineError::Assumptions { .. }
            | EngineError::Exec { .. }
            | EngineError::Verification(_) => Failure::Semantic(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn in_file(path: &Path) -> impl Fn(String) -> String + '_ {
    move |m| format!("{}: {m}", path.display())
}

fn load_metamodel(args: &MetamodelArgs) -> Result<Arc<Metamodel>, Failure> {
    match (&args.metamodel, args.builtin) {
        (Some(path), _) => parse_metamodel(&read(path)?).map(Arc::new).map_err(|e| match e {
            MetamodelError::Syntax(_) => Failure::Usage(in_file(path)(e.to_string())),
            other => Failure::Semantic(in_file(path)(other.to_string())),
        }),
        (None, Some(Builtin::Gmf)) => Ok(gmf::bundled_metamodel()),
        (None, None) => Err(Failure::Usage("either --metamodel or --builtin is required".into())),
    }
}

fn load_model(mm: &Arc<Metamodel>, path: &Path) -> Result<Model, Failure> {
    parse_model(Arc::clone(mm), &read(path)?).map_err(|e: ModelError| Failure::Usage(in_file(path)(e.to_string())))
}

fn load_usecases(mm: &Metamodel, specs: &[PathBuf], builtin: Option<Builtin>) -> Result<Vec<UseCase>, Failure> {
    if specs.is_empty() {
        return match builtin {
            Some(Builtin::Gmf) => {
                let (create, cleanup) = gmf::bundled_usecases(mm);
                Ok(vec![create, cleanup])
            }
            None => Err(Failure::Usage("either --spec or --builtin is required".into())),
        };
    }
    let mut out = Vec::new();
    for path in specs {
        let ucs = parse_usecases(mm, &read(path)?).map_err(|e| match Failure::from(e) {
            Failure::Usage(m) => Failure::Usage(in_file(path)(m)),
            Failure::Semantic(m) => Failure::Semantic(in_file(path)(m)),
        })?;
        out.extend(ucs);
    }
    if out.is_empty() {
        return Err(Failure::Usage("the spec files contain no use case".into()));
    }
    Ok(out)
}

fn cmd_validate(mm: &MetamodelArgs, model: Option<&Path>, out: &mut dyn Write) -> Result<(), Failure> {
    let meta = load_metamodel(mm)?;
    let mut problems = validate(&meta);
    if let Some(path) = model {
        let m = load_model(&meta, path)?;
        problems.extend(m.check_conformance());
    }
    if problems.is_empty() {
        let _ = writeln!(out, "valid");
        return Ok(());
    }
    for p in &problems {
        let _ = writeln!(out, "{p}");
    }
    Err(Failure::Semantic(format!("{} problem(s) found", problems.len())))
}

struct RunArgs<'a> {
    specs: &'a [PathBuf],
    input: &'a Path,
    output: &'a Path,
    intermediate_dir: Option<&'a Path>,
    opts: RunOptions,
}

fn cmd_run(mm: &MetamodelArgs, args: RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let meta = load_metamodel(mm)?;
    let usecases = load_usecases(&meta, args.specs, mm.builtin)?;
    // Without --intermediate-dir, intermediates live in a temporary
    // directory that is removed on success and kept on failure.
    let temp = match args.intermediate_dir {
        Some(_) => None,
        None => Some(
            tempfile::Builder::new()
                .prefix("migra-")
                .tempdir()
                .map_err(|e| Failure::Usage(format!("temporary directory: {e}")))?,
        ),
    };
    let dir: PathBuf = match &temp {
        Some(t) => t.path().into(),
        None => args.intermediate_dir.expect("given when no temporary directory").into(),
    };
    let result = execute_chain(&usecases, Arc::clone(&meta), args.input, args.output, &dir, args.opts);
    let failure = match result {
        Ok(reports) => {
            for r in &reports {
                let _ = write!(out, "{r}");
            }
            return Ok(());
        }
        Err(EngineError::Verification(report)) => {
            let _ = write!(out, "{report}");
            Failure::Semantic(format!("use case {}: post-verification failed", report.usecase))
        }
        Err(e) => e.into(),
    };
    if let Some(t) = temp {
        let kept = t.keep();
        if std::fs::read_dir(&kept).is_ok_and(|mut d| d.next().is_some()) {
            let _ = writeln!(err, "intermediate models kept in {}", kept.display());
        } else {
            let _ = std::fs::remove_dir(&kept);
        }
    }
    Err(failure)
}

fn cmd_compile(mm: &MetamodelArgs, specs: &[PathBuf], out_dir: &Path, err: &mut dyn Write) -> Result<(), Failure> {
    let meta = load_metamodel(mm)?;
    let usecases = load_usecases(&meta, specs, mm.builtin)?;
    let mut compiled = Vec::new();
    for uc in &usecases {
        let phases = uc.constraints.iter().map(|c| compile_constraint(c, &meta)).collect::<Result<Vec<_>, _>>()?;
        compiled.push((uc, phases));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Failure::Usage(format!("{}: {e}", out_dir.display())))?;
    let mut order = String::new();
    for (uc, phases) in &compiled {
        for p in phases {
            let file = format!("{}.{}.act", uc.name, p.constraint.name);
            write(&out_dir.join(&file), &format!("{}\n", print_stmt(&p.activity)))?;
        }
        let po = order_phases(&phases.iter().map(|p| &p.frames).collect::<Vec<_>>());
        if po.cyclic {
            let _ = writeln!(err, "warning: {}: cyclic phase dependencies, declaration order used", uc.name);
        }
        for i in po.order {
            order.push_str(&format!("{}.{}.act\n", uc.name, phases[i].constraint.name));
        }
    }
    write(&out_dir.join("order.txt"), &order)
}

fn cmd_eval(mm: &MetamodelArgs, model: &Path, expr: &str, out: &mut dyn Write) -> Result<(), Failure> {
    let meta = load_metamodel(mm)?;
    let m = load_model(&meta, model)?;
    let e = parse_expr(expr).map_err(|e| Failure::Usage(format!("-e: {e}")))?;
    let v = evaluate(&e, &Env::new(&m)).map_err(|e| Failure::Semantic(e.to_string()))?;
    let _ = writeln!(out, "{}", m.render(&v));
    Ok(())
}

fn cmd_diff(mm: &MetamodelArgs, a: &Path, b: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let meta = load_metamodel(mm)?;
    let (ma, mb) = (load_model(&meta, a)?, load_model(&meta, b)?);
    let iso = isomorphic(&ma, &mb);
    match &iso {
        Isomorphism::Isomorphic(_) => {
            let _ = writeln!(out, "isomorphic");
            Ok(())
        }
        Isomorphism::Mismatch { reason, .. } => {
            let _ = writeln!(out, "mismatch: {reason}");
            let pairs = iso.labelled(&ma, &mb);
            if !pairs.is_empty() {
                let _ = writeln!(out, "partial witness:");
                for (x, y) in pairs {
                    let _ = writeln!(out, "  {x} -> {y}");
                }
            }
            Err(Failure::Semantic("models differ".into()))
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    match &cli.command {
        Command::Validate { mm, model } => cmd_validate(mm, model.as_deref(), out),
        Command::Run { mm, spec, input, output, intermediate_dir, no_verify, force } => cmd_run(
            mm,
            RunArgs {
                specs: spec,
                input,
                output,
                intermediate_dir: intermediate_dir.as_deref(),
                opts: RunOptions { force: *force, verify: !no_verify },
            },
            out,
            err,
        ),
        Command::Compile { mm, spec, out_dir } => cmd_compile(mm, spec, out_dir, err),
        Command::Eval { mm, model, expr } => cmd_eval(mm, model, expr, out),
        Command::Diff { mm, a, b } => cmd_diff(mm, a, b, out),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}
