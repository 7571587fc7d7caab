//! Cluster-expansion approximation of the log-partition function of
//! (long-range) Bose-Hubbard models at high temperature.
//!
//! The approximation is `f_beta = log Z_W^(q) + T_m`: the on-site partition
//! function of the boson-number-truncated model plus the abstract polymer
//! cluster expansion truncated at total cluster size `m`. An exact
//! diagonalization [`oracle`] over number-conserving sectors serves as
//! ground truth for small lattices.
//!
//! Module map:
//! - [`lattice`]: geometry, graph distance, coupling matrices, the model.
//! - [`fock`]: truncated Fock space sectors and block traces of `exp(-beta H)`.
//! - [`polymer`]: connected edge-set polymers and polymer clusters.
//! - [`ursell`]: Ursell functions of incompatibility graphs.
//! - [`weight`]: polymer weights by inclusion-exclusion.
//! - [`expansion`]: the truncated series, on-site reference and diagnostics.
//! - [`oracle`]: exact thermal states and observables.
//! - [`config`] / [`report`] / [`commands`]: the batch CLI surface.

pub mod commands;
pub mod config;
pub mod error;
pub mod expansion;
pub mod fock;
pub mod lattice;
pub mod numeric;
pub mod oracle;
pub mod polymer;
pub mod report;
pub mod ursell;
pub mod weight;

pub use error::{Error, Result};
pub use expansion::{approximate_log_partition, ExpansionConfig, ExpansionReport, QPolicy};
pub use lattice::{CouplingMatrix, CouplingSpec, Lattice, ModelInstance, OnsiteParams};
pub use oracle::{thermalize, ThermalState};

/// Version of the JSON/CSV output schema written by the CLI.
pub const SCHEMA_VERSION: u32 = 1;
