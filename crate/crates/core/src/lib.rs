//! Fitness landscape analysis for NAS-style cell search spaces.
//!
//! Cells (small DAGs labelled with one of three operators) are encoded as
//! 289-bit genotypes over an operator-expanded 17-node graph. On top of that
//! representation the crate provides seeded samplers, random walks over the
//! Hamming-1 neighborhood, pluggable fitness sources (tabular evaluation
//! records, NK landscapes, ones-count), and the landscape metrics that make up
//! a footprint:
//!
//! * fitness distribution statistics and maximum-likelihood distribution fits
//!   ([`distfit`]),
//! * fitness-distance correlation, walk ruggedness and local optima
//!   ([`metrics`]),
//! * top/bottom rank persistence across training budgets ([`persistence`]),
//! * the assembled footprint and cross-source comparison ([`footprint`]).
//!
//! Batch computations (exhaustive enumeration, FDC distances, neighbor
//! scans) run on rayon when the `parallel` feature is enabled, which it is by
//! default. See [`Execution`].

pub mod bits;
pub mod cellspace;
pub mod distfit;
pub mod fitness;
pub mod footprint;
pub mod metrics;
pub mod persistence;
pub mod sampling;
pub mod seed;

mod par;

pub use bits::{BitString, LengthMismatch, SmallBits};
pub use cellspace::{
    decode, encode, hamming, neighbors, validate_cell, CellSpec, DecodeError, Genotype,
    NeighborMode, Op, ValidationReport, ViolationCode,
};
pub use fitness::{FitnessSource, SourceId, SourceKind};
pub use par::Execution;

/// Version tag written into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;
