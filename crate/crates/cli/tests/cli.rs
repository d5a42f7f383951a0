use std::path::{Path, PathBuf};
use std::process::Command;

use migra_core::gmf::{bundled_metamodel, EXAMPLE_OUTPUT};
use migra_core::model::{isomorphic, parse_model};

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/assets/gmf")
}

fn asset(name: &str) -> String {
    assets().join(name).to_string_lossy().into_owned()
}

struct Outcome {
    code: i32,
    out: String,
    err: String,
}

fn migra(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = migra_cli::run(std::iter::once("migra").chain(args.iter().copied()), &mut out, &mut err);
    Outcome { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_exit_codes() {
    let r = migra(&["validate", "--metamodel", &asset("gmf.mm"), "--model", &asset("gmf1.txt")]);
    assert_eq!(r.code, 0, "{}", r.err);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mm");
    std::fs::write(&bad, "class A {}\nclass B extends A {}\n").unwrap();
    let r = migra(&["validate", "--metamodel", s(&bad)]);
    assert_eq!(r.code, 1);
    assert_eq!(r.out.lines().count(), 1, "{}", r.out);
    assert!(r.out.contains("non-leaf class A must be abstract"));

    let r = migra(&["validate", "--metamodel", s(&dir.path().join("missing.mm"))]);
    assert_eq!(r.code, 2);
    assert_eq!(migra(&["validate"]).code, 2);
    assert_eq!(migra(&["frobnicate"]).code, 2);
    assert_eq!(migra(&["--help"]).code, 0);
}

#[test]
fn run_builtin_matches_expected_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.txt");
    let inter = dir.path().join("steps");
    let r = migra(&[
        "run",
        "--builtin",
        "gmf",
        "--in",
        &asset("gmf1.txt"),
        "--out",
        s(&out),
        "--intermediate-dir",
        s(&inter),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("phase C1"));
    assert!(r.out.contains("verification: PASS"));
    assert!(!r.out.contains("FAIL"));
    assert!(inter.join("1-createTarget.txt").exists());
    let mm = bundled_metamodel();
    let got = parse_model(mm.clone(), &std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(isomorphic(&got, &parse_model(mm, EXAMPLE_OUTPUT).unwrap()).is_isomorphic());

    let r = migra(&["diff", "--builtin", "gmf", s(&out), &asset("gmf1_expected.txt")]);
    assert_eq!(r.code, 0, "{}", r.out);

    // The same through explicit files.
    let out2 = dir.path().join("out2.txt");
    let r = migra(&[
        "run",
        "--metamodel",
        &asset("gmf.mm"),
        "--spec",
        &asset("createTarget.tl"),
        "--spec",
        &asset("cleanup.tl"),
        "--in",
        &asset("gmf1.txt"),
        "--out",
        s(&out2),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), std::fs::read_to_string(&out2).unwrap());
}

#[test]
fn run_gates_on_assumptions() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.txt");
    let gmf1 = std::fs::read_to_string(asset("gmf1.txt")).unwrap();
    std::fs::write(&input, format!("{gmf1}x : RealFigure\nx.name = \"zz\"\n")).unwrap();
    let out = dir.path().join("out.txt");
    let r = migra(&["run", "--builtin", "gmf", "--in", s(&input), "--out", s(&out)]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("Figure1 = {}"), "{}", r.err);
    assert!(!out.exists());

    let r = migra(&["run", "--builtin", "gmf", "--in", s(&input), "--out", s(&out), "--force"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("assumption FAILED (forced): Figure1 = {}"));
    assert!(out.exists());
}

#[test]
fn run_on_empty_model() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.txt");
    std::fs::write(&input, "").unwrap();
    let out = dir.path().join("out.txt");
    let r = migra(&["run", "--builtin", "gmf", "--in", s(&input), "--out", s(&out), "--no-verify"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "");
    assert!(r.out.contains("verification: skipped"));
    assert_eq!(migra(&["run", "--builtin", "gmf", "--in", s(&dir.path().join("no.txt")), "--out", s(&out)]).code, 2);
}

#[test]
fn compile_writes_activities_and_order() {
    let dir = tempfile::tempdir().unwrap();
    let r = migra(&["compile", "--builtin", "gmf", "--out-dir", s(dir.path())]);
    assert_eq!(r.code, 0, "{}", r.err);
    let mut acts: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".act"))
        .collect();
    acts.sort();
    assert_eq!(
        acts,
        [
            "cleanup.cleanModel.act",
            "createTarget.C1.act",
            "createTarget.C2.act",
            "createTarget.C3.act",
            "createTarget.C4.act"
        ]
    );
    let order = std::fs::read_to_string(dir.path().join("order.txt")).unwrap();
    assert_eq!(order.lines().next(), Some("createTarget.C1.act"));
    let c1 = std::fs::read_to_string(dir.path().join("createTarget.C1.act")).unwrap();
    assert!(c1.starts_with("for self : Figure do"), "{c1}");

    let spec = dir.path().join("one.tl");
    std::fs::write(&spec, "usecase one { constraint K : Figure :: 1 = 1; }").unwrap();
    let single = dir.path().join("single");
    let r = migra(&["compile", "--builtin", "gmf", "--spec", s(&spec), "--out-dir", s(&single)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(std::fs::read_dir(&single).unwrap().count(), 2);

    std::fs::write(&spec, "usecase one { constraint K : Figure :: children->size() > 0 or name = \"a\"; }").unwrap();
    let r = migra(&["compile", "--builtin", "gmf", "--spec", s(&spec), "--out-dir", s(&single)]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("unsupported") && r.err.contains("or"), "{}", r.err);
}

#[test]
fn eval_prints_values() {
    let m = asset("gmf1.txt");
    let r = migra(&["eval", "--builtin", "gmf", "--model", &m, "-e", "Figure->size()"]);
    assert_eq!((r.code, r.out.as_str()), (0, "2\n"));
    let r = migra(&["eval", "--builtin", "gmf", "--model", &m, "-e", "{}"]);
    assert_eq!(r.out, "{}\n");
    let r = migra(&["eval", "--builtin", "gmf", "--model", &m, "-e", "Figure->select(name = \"f1\")->size()"]);
    assert_eq!(r.out, "1\n");
    let r = migra(&["eval", "--builtin", "gmf", "--model", &m, "-e", "f1.children"]);
    assert_eq!(r.code, 1, "{}", r.out);
    let r = migra(&["eval", "--builtin", "gmf", "--model", &m, "-e", "Figure[\"f1\"].children"]);
    assert_eq!(r.out, "{f2}\n");
    assert_eq!(migra(&["eval", "--builtin", "gmf", "--model", &m, "-e", "1 +"]).code, 2);
}

#[test]
fn diff_detects_a_missing_link() {
    let dir = tempfile::tempdir().unwrap();
    let expected = asset("gmf1_expected.txt");
    assert_eq!(migra(&["diff", "--builtin", "gmf", &expected, &expected]).code, 0);
    let text = std::fs::read_to_string(&expected).unwrap().replace("rf2 : rf1.children\n", "");
    let edited = dir.path().join("edited.txt");
    std::fs::write(&edited, text).unwrap();
    let r = migra(&["diff", "--builtin", "gmf", &expected, s(&edited)]);
    assert_eq!(r.code, 1);
    assert!(r.out.starts_with("mismatch: "), "{}", r.out);
}

#[test]
fn binary_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = Command::new(env!("CARGO_BIN_EXE_migra"))
            .args(["run", "--builtin", "gmf", "--in", &asset("gmf1.txt"), "--out", s(&out)])
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        (o.stdout, std::fs::read(&out).unwrap())
    };
    assert_eq!(run("a.txt"), run("b.txt"));
}
