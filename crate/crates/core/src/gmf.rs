//! The bundled GMF 1.0 to 2.1 figure migration.

use std::sync::Arc;

use crate::engine::{parse_usecases, run_chain, EngineError, RunOptions, RunReport, UseCase};
use crate::metamodel::{parse_metamodel, Metamodel};
use crate::model::{parse_model, write_model};

pub const METAMODEL: &str = include_str!("../assets/gmf/gmf.mm");
pub const CREATE_TARGET: &str = include_str!("../assets/gmf/createTarget.tl");
pub const CLEANUP: &str = include_str!("../assets/gmf/cleanup.tl");
pub const EXAMPLE_INPUT: &str = include_str!("../assets/gmf/gmf1.txt");
pub const EXAMPLE_OUTPUT: &str = include_str!("../assets/gmf/gmf1_expected.txt");

pub fn bundled_metamodel() -> Arc<Metamodel> {
    Arc::new(parse_metamodel(METAMODEL).expect("bundled metamodel parses"))
}

/// The construction and cleanup use cases, in chain order.
pub fn bundled_usecases(mm: &Metamodel) -> (UseCase, UseCase) {
    let mut create = parse_usecases(mm, CREATE_TARGET).expect("bundled createTarget parses");
    let mut cleanup = parse_usecases(mm, CLEANUP).expect("bundled cleanup parses");
    (create.remove(0), cleanup.remove(0))
}

/// Migrates a model given in the text format and returns the result in the
/// same format.
pub fn migrate(input: &str) -> Result<(String, Vec<RunReport>), EngineError> {
    let mm = bundled_metamodel();
    let (create, cleanup) = bundled_usecases(&mm);
    let model = parse_model(Arc::clone(&mm), input)?;
    let (out, reports) = run_chain(&[create, cleanup], model, RunOptions::default())?;
    Ok((write_model(&out), reports))
}
