//! Multi-objective land-use allocation.
//!
//! A grid [`instance::Instance`] holds urban, agricultural and fixed cells.
//! Solutions choose which agricultural cells become urban so that exactly
//! `T` are converted, minimising lost soil value (LAP) and total edge length
//! (TEL). The crate provides the encoding, region-mask crossovers, repair and
//! mutation operators, NSGA-II and MOEA/D engines, front quality metrics and
//! an experiment harness.

pub mod engines;
pub mod error;
pub mod fixtures;
pub mod genotype;
pub mod harness;
pub mod instance;
pub mod metrics;
pub mod objectives;
pub mod operators;

pub use error::{Error, Result};
pub use genotype::{DecodedMap, Genotype, MaskSet};
pub use instance::{CellIndex, GeneratorParams, Instance};
pub use objectives::{FfeCounter, ObjectivePoint, TelMode};
