//! Tempered exponential measures, their conformal Bregman divergences, and
//! clustering with the resulting population minimizers.

pub mod cluster;
pub mod deformed;
pub mod diagram;
pub mod divergence;
pub mod error;
pub mod experiment;
pub mod family;
pub mod minimizer;
pub mod quadrature;
pub mod report;

pub use deformed::Temper;
pub use error::{Result, TemError};
pub use family::{ExpectationParam, FamilyDescriptor, FamilyKind, NaturalParam, TemFamily};
