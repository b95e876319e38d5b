//! Bag semantics for Datalog and warded Datalog± with stratified negation.

pub mod analysis;
pub mod chase;
pub mod cli;
pub mod model;
pub mod mra;
pub mod multiplicity;
pub mod parser;
#[cfg(test)]
mod properties;
pub(crate) mod resolution;
pub mod transform;
pub mod trees;
