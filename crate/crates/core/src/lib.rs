//! Metamodel-driven grammar tooling: generate an Xtext-style grammar from a
//! class model, rewrite it with configured optimization rules, and parse,
//! print and sample programs under any resulting grammar.

pub mod grammar;
pub mod metamodel;
pub mod generate;
pub mod optimize;
pub mod style;
pub mod instance;
pub mod inference;
pub mod evolution;
