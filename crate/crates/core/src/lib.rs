//! Defect measurement, property testing and exact repair of permutation
//! tuples that almost satisfy the relations of a finitely generated abelian
//! group `Z^m / K`.

pub mod action_space;
pub mod bounded_addition;
pub mod cli;
pub mod config;
pub mod error;
pub mod instance_gen;
pub mod lattice;
pub mod oracle;
pub mod presentation;
pub mod rational;
pub mod report;
pub mod stability_tools;
pub mod testing_harness;
pub mod tiling_engine;

pub use action_space::ActionSpace;
pub use error::{Error, Result};
pub use presentation::{AbelianPresentation, EquationSet, Word};
