use std::sync::Arc;

use migra_core::engine::{
    check_asm, compile_constraint, execute_chain, execute_usecase, order_phases, parse_usecases, EngineError,
    RunOptions,
};
use migra_core::expr::evaluate;
use migra_core::expr::{parse_expr, Env};
use migra_core::gmf::{bundled_metamodel, bundled_usecases, EXAMPLE_INPUT, EXAMPLE_OUTPUT};
use migra_core::model::{isomorphic, parse_model, write_model, Model};
use migra_core::value::Value;

fn gmf1() -> Model {
    parse_model(bundled_metamodel(), EXAMPLE_INPUT).unwrap()
}

fn size(m: &Model, expr: &str) -> i64 {
    match evaluate(&parse_expr(expr).unwrap(), &Env::new(m)).unwrap() {
        Value::Int(n) => n,
        other => panic!("{expr}: {other:?}"),
    }
}

#[test]
fn asm_holds_on_example_and_empty_model() {
    let mm = bundled_metamodel();
    let (create, cleanup) = bundled_usecases(&mm);
    assert!(check_asm(&create, &gmf1()).is_empty());
    assert!(check_asm(&create, &Model::new(Arc::clone(&mm))).is_empty());
    assert!(check_asm(&cleanup, &Model::new(mm)).is_empty());
}

#[test]
fn injected_real_figure_fails_asm() {
    let mm = bundled_metamodel();
    let (create, _) = bundled_usecases(&mm);
    let text = format!("{EXAMPLE_INPUT}x : RealFigure\nx.name = \"zz\"\n");
    let mut m = parse_model(mm, &text).unwrap();
    assert_eq!(check_asm(&create, &m), ["Figure1 = {}"]);
    match execute_usecase(&create, &mut m, RunOptions::default()) {
        Err(EngineError::Assumptions { failed, .. }) => assert_eq!(failed, ["Figure1 = {}"]),
        other => panic!("{other:?}"),
    }
    assert_eq!(size(&m, "RealFigure->size()"), 1);

    let report = execute_usecase(&create, &mut m, RunOptions { force: true, verify: true }).unwrap();
    assert_eq!(report.assumption_failures, ["Figure1 = {}"]);
    assert_eq!(size(&m, "RealFigure->size()"), 3);
}

#[test]
fn create_target_counts_and_verification() {
    let mm = bundled_metamodel();
    let (create, cleanup) = bundled_usecases(&mm);
    let mut m = gmf1();
    let report = execute_usecase(&create, &mut m, RunOptions::default()).unwrap();
    assert!(report.verified());
    let created: usize = report.phases.iter().flat_map(|p| p.created.values()).sum();
    assert_eq!(created, 5);
    assert_eq!(report.phases[0].created.get("RealFigure"), Some(&2));
    assert_eq!(report.phases[0].created.get("FigureDescriptor"), Some(&2));
    assert!(report.phases.iter().all(|p| p.frame_violations.is_empty()), "{report}");
    assert_eq!(size(&m, "ChildAccess->size()"), 1);

    let report = execute_usecase(&cleanup, &mut m, RunOptions::default()).unwrap();
    assert!(report.verified());
    assert_eq!(report.phases[0].deleted.get("Figure"), Some(&2));
    assert_eq!(size(&m, "Figure->size()"), 0);
    assert_eq!(size(&m, "FigureGallery.figures->size()"), 0);
    let text = report.to_string();
    assert!(text.contains("phase cleanModel: 1 iteration(s)"), "{text}");
    assert!(text.contains("verification: PASS"), "{text}");
}

#[test]
fn empty_model_sees_no_changes() {
    let mm = bundled_metamodel();
    let (create, cleanup) = bundled_usecases(&mm);
    for uc in [&create, &cleanup] {
        let mut m = Model::new(Arc::clone(&mm));
        let report = execute_usecase(uc, &mut m, RunOptions::default()).unwrap();
        for p in &report.phases {
            assert!(p.created.is_empty() && p.deleted.is_empty(), "{report}");
            assert_eq!(p.links_changed + p.attributes_changed, 0, "{report}");
        }
        assert!(m.is_empty());
    }
}

#[test]
fn construction_is_idempotent() {
    let mm = bundled_metamodel();
    let (create, _) = bundled_usecases(&mm);
    let mut once = gmf1();
    execute_usecase(&create, &mut once, RunOptions::default()).unwrap();
    let mut twice = once.snapshot();
    let report = execute_usecase(&create, &mut twice, RunOptions { force: true, verify: true }).unwrap();
    assert!(report.phases.iter().all(|p| p.created.is_empty()), "{report}");
    assert!(isomorphic(&once, &twice).is_isomorphic());
}

#[test]
fn cleanup_rerun_is_noop() {
    let mm = bundled_metamodel();
    let (_, cleanup) = bundled_usecases(&mm);
    let mut m = gmf1();
    execute_usecase(&cleanup, &mut m, RunOptions::default()).unwrap();
    let before = m.snapshot();
    let report = execute_usecase(&cleanup, &mut m, RunOptions::default()).unwrap();
    assert!(report.phases[0].deleted.is_empty());
    assert!(isomorphic(&before, &m).is_isomorphic());
}

#[test]
fn reordered_declarations_still_put_c1_first() {
    let mm = bundled_metamodel();
    let (create, _) = bundled_usecases(&mm);
    let mut shuffled = create.clone();
    shuffled.constraints = [2, 3, 1, 0].iter().map(|&i| create.constraints[i].clone()).collect();
    let phases: Vec<_> = shuffled.constraints.iter().map(|c| compile_constraint(c, &mm).unwrap()).collect();
    let order = order_phases(&phases.iter().map(|p| &p.frames).collect::<Vec<_>>());
    assert!(!order.cyclic);
    let names: Vec<_> = order.order.iter().map(|&i| shuffled.constraints[i].name.as_str()).collect();
    assert_eq!(names, ["C1", "C3", "C4", "C2"]);

    let mut a = gmf1();
    let mut b = gmf1();
    execute_usecase(&create, &mut a, RunOptions::default()).unwrap();
    execute_usecase(&shuffled, &mut b, RunOptions::default()).unwrap();
    assert!(isomorphic(&a, &b).is_isomorphic());
}

#[test]
fn trivial_constraint_leaves_model_alone() {
    let mm = bundled_metamodel();
    let ucs = parse_usecases(&mm, "usecase t { constraint K : Figure :: 1 = 1; }").unwrap();
    let mut m = gmf1();
    let before = m.snapshot();
    let report = execute_usecase(&ucs[0], &mut m, RunOptions::default()).unwrap();
    assert_eq!(report.phases[0].iterations, 2);
    assert!(isomorphic(&before, &m).is_isomorphic());
}

#[test]
fn failing_check_aborts_the_phase() {
    let mm = bundled_metamodel();
    let ucs = parse_usecases(&mm, "usecase t { constraint K : Figure :: Figure->size() = 1; }").unwrap();
    let err = execute_usecase(&ucs[0], &mut gmf1(), RunOptions::default()).unwrap_err();
    assert!(matches!(err, EngineError::Exec { ref phase, .. } if phase == "K"), "{err}");
    assert!(err.to_string().contains("does not hold"), "{err}");
}

#[test]
fn chain_through_files() {
    let mm = bundled_metamodel();
    let (create, cleanup) = bundled_usecases(&mm);
    let dir = std::env::temp_dir().join(format!("migra-chain-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let input = dir.join("in.txt");
    let output = dir.join("out.txt");
    let inter = dir.join("steps");
    std::fs::write(&input, EXAMPLE_INPUT).unwrap();

    let reports = execute_chain(
        &[create.clone(), cleanup.clone()],
        Arc::clone(&mm),
        &input,
        &output,
        &inter,
        RunOptions::default(),
    )
    .unwrap();
    assert_eq!(reports.len(), 2);
    let got = parse_model(Arc::clone(&mm), &std::fs::read_to_string(&output).unwrap()).unwrap();
    let want = parse_model(Arc::clone(&mm), EXAMPLE_OUTPUT).unwrap();
    assert!(isomorphic(&got, &want).is_isomorphic());
    let step =
        parse_model(Arc::clone(&mm), &std::fs::read_to_string(inter.join("1-createTarget.txt")).unwrap()).unwrap();
    assert_eq!(size(&step, "Figure->size()"), 2);

    // Single use case: same as running it directly and writing the result.
    let single = dir.join("single.txt");
    execute_chain(std::slice::from_ref(&create), Arc::clone(&mm), &input, &single, &inter, RunOptions::default())
        .unwrap();
    let mut direct = gmf1();
    execute_usecase(&create, &mut direct, RunOptions::default()).unwrap();
    let from_file = parse_model(Arc::clone(&mm), &std::fs::read_to_string(&single).unwrap()).unwrap();
    assert!(isomorphic(&from_file, &direct).is_isomorphic());

    // The second use case's assumptions fail: the intermediate file survives.
    let gate = parse_usecases(&mm, "usecase gate { assume RealFigure = {}; }").unwrap().remove(0);
    let failing = dir.join("failing");
    let err = execute_chain(
        &[create, gate],
        Arc::clone(&mm),
        &input,
        &dir.join("never.txt"),
        &failing,
        RunOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, EngineError::Assumptions { .. }));
    assert!(failing.join("1-createTarget.txt").exists());
    assert!(!dir.join("never.txt").exists());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn verification_failure_is_reported() {
    // Independent phases run in declaration order, so Z undoes A.
    let mm = bundled_metamodel();
    let ucs = parse_usecases(
        &mm,
        "usecase t {
           constraint A : FigureGallery :: figures1 = {};
           constraint B : Figure :: RealFigure->exists1(rf | rf.name = name);
           constraint Z : FigureGallery :: figures1 = RealFigure;
         }",
    )
    .unwrap();
    match execute_usecase(&ucs[0], &mut gmf1(), RunOptions::default()) {
        Err(EngineError::Verification(report)) => {
            assert!(!report.verified());
            assert_eq!(report.order(), ["A", "B", "Z"]);
            assert_eq!(report.phases[0].verification.as_ref().unwrap().len(), 1);
            assert!(report.to_string().contains("verification: FAIL"));
        }
        other => panic!("{other:?}"),
    }
    let report = execute_usecase(&ucs[0], &mut gmf1(), RunOptions { force: false, verify: false }).unwrap();
    assert!(report.phases.iter().all(|p| p.verification.is_none()));
    assert!(write_model(&gmf1()).contains("f1 : Figure"));
}
