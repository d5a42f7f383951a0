pub mod activity;
pub mod engine;
pub mod expr;
pub mod gmf;
pub mod lexer;
pub mod metamodel;
pub mod model;
pub mod value;
