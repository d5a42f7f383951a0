use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use super::compile::{compile_constraint, order_phases};
use super::{Constraint, EngineError, Phase, UseCase, SELF};
use crate::activity::Interpreter;
use crate::expr::{evaluate, evaluate_boolean, Env, FrameItem, Frames};
use crate::metamodel::Metamodel;
use crate::model::{parse_model, write_model, Model, Mutation};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Run even when assumptions fail.
    pub force: bool,
    /// Re-check every constraint on the result.
    pub verify: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { force: false, verify: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PhaseReport {
    pub name: String,
    /// Instances of the scope class visited (1 for a global constraint).
    pub iterations: usize,
    pub created: BTreeMap<String, usize>,
    pub deleted: BTreeMap<String, usize>,
    pub links_changed: usize,
    pub attributes_changed: usize,
    /// Mutations outside the phase's computed write frame.
    pub frame_violations: Vec<String>,
    /// `None` when verification was skipped; otherwise the failures found.
    pub verification: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunReport {
    pub usecase: String,
    pub assumption_failures: Vec<String>,
    pub cyclic_order: bool,
    pub phases: Vec<PhaseReport>,
}

impl RunReport {
    pub fn verified(&self) -> bool {
        self.phases.iter().all(|p| p.verification.as_ref().is_none_or(Vec::is_empty))
    }

    pub fn order(&self) -> Vec<&str> {
        self.phases.iter().map(|p| p.name.as_str()).collect()
    }
}

fn counts(m: &BTreeMap<String, usize>) -> String {
    if m.is_empty() {
        return "none".into();
    }
    m.iter().map(|(c, n)| format!("{c} {n}")).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "use case {}", self.usecase)?;
        for a in &self.assumption_failures {
            writeln!(f, "  assumption FAILED (forced): {a}")?;
        }
        if self.cyclic_order {
            writeln!(f, "  warning: cyclic phase dependencies, declaration order used")?;
        }
        for p in &self.phases {
            writeln!(f, "  phase {}: {} iteration(s)", p.name, p.iterations)?;
            writeln!(f, "    created: {}", counts(&p.created))?;
            if !p.deleted.is_empty() {
                writeln!(f, "    deleted: {}", counts(&p.deleted))?;
            }
            writeln!(f, "    links changed: {}, attributes changed: {}", p.links_changed, p.attributes_changed)?;
            for v in &p.frame_violations {
                writeln!(f, "    warning: write outside frame: {v}")?;
            }
            match &p.verification {
                None => writeln!(f, "    verification: skipped")?,
                Some(fails) if fails.is_empty() => writeln!(f, "    verification: PASS")?,
                Some(fails) => {
                    writeln!(f, "    verification: FAIL")?;
                    for x in fails {
                        writeln!(f, "      {x}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Failed assumptions and conformance problems; empty when the use case
/// may run on `m`.
pub fn check_asm(uc: &UseCase, m: &Model) -> Vec<String> {
    let mut out = m.check_conformance();
    let env = Env::new(m);
    for a in &uc.assumptions {
        match evaluate_boolean(a, &env) {
            Ok(true) => {}
            Ok(false) => out.push(a.to_string()),
            Err(e) => out.push(format!("{a} ({e})")),
        }
    }
    out
}

/// Mutations in `log` that fall outside `frames.writes`.
pub fn frame_violations(frames: &Frames, log: &[Mutation], mm: &Metamodel) -> Vec<String> {
    let mut out = Vec::new();
    for m in log {
        let ok = match m {
            Mutation::Created(c) | Mutation::Deleted(c) => {
                frames.writes.iter().any(|w| matches!(w, FrameItem::Extent(e) if mm.conforms(c, e)))
            }
            Mutation::Attribute { owner, feature } => frames.writes.contains(&FrameItem::feature(owner, feature)),
            Mutation::Link { owner, role } => frames.writes.contains(&FrameItem::feature(owner, role)),
        };
        let text = match m {
            Mutation::Created(c) => format!("created {c}"),
            Mutation::Deleted(c) => format!("deleted {c}"),
            Mutation::Attribute { owner, feature } => format!("{owner}.{feature}"),
            Mutation::Link { owner, role } => format!("{owner}.{role}"),
        };
        if !ok && !out.contains(&text) {
            out.push(text);
        }
    }
    out
}

/// Evaluates `antecedent => succedent` for every binding of the
/// constraint's variables and describes each binding where it fails.
pub fn verify_constraint(c: &Constraint, m: &Model, pre: Option<&Model>) -> Vec<String> {
    let mut env = Env::new(m);
    env.pre_model = pre;
    let mut failures = Vec::new();
    let scope: Vec<Value> = match &c.scope {
        Some(s) => match m.extent(s) {
            Ok(objs) => objs.into_iter().map(Value::Obj).collect(),
            Err(e) => return vec![e.to_string()],
        },
        None => vec![Value::Bool(true)],
    };
    for s in scope {
        if c.scope.is_some() {
            env.bindings.insert(SELF.to_string(), s);
        }
        verify_from(c, 0, &mut env, &mut failures);
    }
    failures
}

fn describe(c: &Constraint, env: &Env) -> String {
    let mut names: Vec<&str> = Vec::new();
    if c.scope.is_some() {
        names.push(SELF);
    }
    names.extend(c.quantifiers.iter().map(|(v, _)| v.as_str()));
    let parts: Vec<String> =
        names.iter().filter_map(|n| env.bindings.get(*n).map(|v| format!("{n} = {}", env.model.render(v)))).collect();
    if parts.is_empty() {
        c.name.clone()
    } else {
        format!("{} with {}", c.name, parts.join(", "))
    }
}

fn verify_from(c: &Constraint, depth: usize, env: &mut Env, failures: &mut Vec<String>) {
    if let Some((v, range)) = c.quantifiers.get(depth) {
        let items = match evaluate(range, env) {
            Ok(Value::Set(items) | Value::Seq(items)) => items,
            Ok(other) => vec![other],
            Err(e) => {
                failures.push(format!("{}: {e}", describe(c, env)));
                return;
            }
        };
        for item in items {
            env.bindings.insert(v.clone(), item);
            verify_from(c, depth + 1, env, failures);
        }
        env.bindings.remove(v);
        return;
    }
    let holds = match &c.antecedent {
        Some(a) => {
            evaluate_boolean(a, env).and_then(|ok| if ok { evaluate_boolean(&c.succedent, env) } else { Ok(true) })
        }
        None => evaluate_boolean(&c.succedent, env),
    };
    match holds {
        Ok(true) => {}
        Ok(false) => failures.push(format!("{} does not hold", describe(c, env))),
        Err(e) => failures.push(format!("{}: {e}", describe(c, env))),
    }
}

/// Compiles and orders the phases of a use case.
pub(crate) fn plan(uc: &UseCase, mm: &Metamodel) -> Result<(Vec<Phase>, bool), EngineError> {
    let phases = uc.constraints.iter().map(|c| compile_constraint(c, mm)).collect::<Result<Vec<_>, _>>()?;
    let order = order_phases(&phases.iter().map(|p| &p.frames).collect::<Vec<_>>());
    let mut slots: Vec<Option<Phase>> = phases.into_iter().map(Some).collect();
    let ordered = order.order.iter().map(|&i| slots[i].take().expect("permutation")).collect();
    Ok((ordered, order.cyclic))
}

/// Runs the phases of `uc` on `m` in dependency order, then verifies every
/// constraint on the final model.
pub fn execute_usecase(uc: &UseCase, m: &mut Model, opts: RunOptions) -> Result<RunReport, EngineError> {
    let failed = check_asm(uc, m);
    if !failed.is_empty() && !opts.force {
        return Err(EngineError::Assumptions { usecase: uc.name.clone(), failed });
    }
    let mm = Arc::clone(m.metamodel_arc());
    let (phases, cyclic) = plan(uc, &mm)?;
    let mut report =
        RunReport { usecase: uc.name.clone(), assumption_failures: failed, cyclic_order: cyclic, phases: Vec::new() };
    let mut pres = Vec::with_capacity(phases.len());

    for phase in &phases {
        let c = &phase.constraint;
        let pre = m.snapshot();
        let iterations = match &c.scope {
            Some(s) => m.extent(s)?.len(),
            None => 1,
        };
        m.start_log();
        let result = {
            let mut interp = Interpreter::new(m);
            interp.set_pre(pre.clone());
            interp.run(&phase.activity, BTreeMap::new())
        };
        let log = m.take_log();
        result.map_err(|source| EngineError::Exec { phase: c.name.clone(), source: Box::new(source) })?;

        let mut pr = PhaseReport { name: c.name.clone(), iterations, ..PhaseReport::default() };
        for entry in &log {
            match entry {
                Mutation::Created(class) => *pr.created.entry(class.clone()).or_default() += 1,
                Mutation::Deleted(class) => *pr.deleted.entry(class.clone()).or_default() += 1,
                Mutation::Link { .. } => pr.links_changed += 1,
                Mutation::Attribute { .. } => pr.attributes_changed += 1,
            }
        }
        pr.frame_violations = frame_violations(&phase.frames, &log, &mm);
        report.phases.push(pr);
        pres.push(pre);
    }

    if opts.verify {
        for ((phase, pr), pre) in phases.iter().zip(&mut report.phases).zip(&pres) {
            pr.verification = Some(verify_constraint(&phase.constraint, m, Some(pre)));
        }
        if !report.verified() {
            return Err(EngineError::Verification(Box::new(report)));
        }
    }
    Ok(report)
}

/// Runs use cases one after another. Between use cases the model is written
/// out and parsed back, exactly as when chaining through files.
pub fn run_chain(usecases: &[UseCase], model: Model, opts: RunOptions) -> Result<(Model, Vec<RunReport>), EngineError> {
    let mm = Arc::clone(model.metamodel_arc());
    let mut m = model;
    let mut reports = Vec::new();
    for (i, uc) in usecases.iter().enumerate() {
        if i > 0 {
            m = parse_model(Arc::clone(&mm), &write_model(&m))?;
        }
        reports.push(execute_usecase(uc, &mut m, opts)?);
    }
    Ok((m, reports))
}

/// File-mediated chain: the result of each use case but the last is written
/// to `intermediate_dir` and read back as the next input. Intermediate files
/// are left in place, including when a later use case fails.
pub fn execute_chain(
    usecases: &[UseCase],
    mm: Arc<Metamodel>,
    input: &Path,
    output: &Path,
    intermediate_dir: &Path,
    opts: RunOptions,
) -> Result<Vec<RunReport>, EngineError> {
    if usecases.is_empty() {
        return Err(EngineError::Invalid("a chain needs at least one use case".into()));
    }
    let io = |p: &Path, e: std::io::Error| EngineError::Io(format!("{}: {e}", p.display()));
    let mut text = std::fs::read_to_string(input).map_err(|e| io(input, e))?;
    let mut reports = Vec::new();
    for (i, uc) in usecases.iter().enumerate() {
        let mut m = parse_model(Arc::clone(&mm), &text)?;
        reports.push(execute_usecase(uc, &mut m, opts)?);
        text = write_model(&m);
        let target = if i + 1 == usecases.len() {
            output.to_path_buf()
        } else {
            std::fs::create_dir_all(intermediate_dir).map_err(|e| io(intermediate_dir, e))?;
            intermediate_dir.join(format!("{}-{}.txt", i + 1, uc.name))
        };
        std::fs::write(&target, &text).map_err(|e| io(&target, e))?;
    }
    Ok(reports)
}
