//! Numerical construction and verification of topological conjugacies for
//! iterated function systems on the line and diagonal systems on R^m.
//!
//! Modules, roughly bottom-up:
//!
//! * [`maps`], [`sequence`], [`ifs`]: the map catalog, symbol sequences and
//!   orbit composition along a sequence.
//! * [`conjugacy1d`]: fundamental-domain conjugacies between linear maps and
//!   weak conjugacies between linear IFSs.
//! * [`linearization`]: linear parts, Koenigs linearization of nonlinear
//!   contractions, the geometric decay bound and the fate of mixed systems.
//! * [`multidim`]: componentwise and similarity conjugacies of diagonal IFSs.
//! * [`stability`]: C0/C1 distances, hyperbolicity audit, perturbation probe.
//! * [`attractor`]: chaos-game sampling.
//! * [`config`]: the JSON document format shared with the command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod interp;
pub mod roots;

pub mod maps;
pub mod sequence;
pub mod ifs;

pub mod conjugacy1d;
pub mod linearization;
pub mod multidim;
pub mod stability;
pub mod attractor;
pub mod config;

pub use error::{IfsError, Obstruction, Result};
pub use ifs::{
    classify_slope_interval, compose_orbit, effective_slope, estimate_lipschitz, IfsDescriptor, SlopeInterval,
};
pub use maps::{Domain, MapKind, Perturbation, PerturbationShape, ScalarMap, SmoothFamily, WorkingInterval};
pub use sequence::{count_symbols, PositionRule, SymbolSequence};
pub use conjugacy1d::{
    build_linear_conjugacy, same_interval_test, verify_conjugacy, weak_conjugacy_linear, BridgeKind,
    ConjugacyReport, Homeomorphism1D,
};
pub use linearization::{
    classify_sequence_fate, decay_bound_check, koenigs_conjugacy, linear_part, Fate, HgCase, LinearPartResult,
    Linearization, SequenceFateReport,
};
pub use multidim::{
    componentwise_conjugacy, diag_compose, similarity_conjugacy, DiagonalMap, SimilarityIfs, VectorHomeomorphism,
};
pub use stability::{hyperbolicity_audit, ifs_distance, perturbation_probe, rho0, rho1, HyperbolicityAudit, Level};
pub use attractor::{chaos_game, chaos_game_diag, AttractorSample};
pub use config::Document;

/// Tolerances shared across modules.
pub mod tol {
    /// Absolute part of the default float comparison.
    pub const ATOL: f64 = 1e-9;
    /// Relative part of the default float comparison.
    pub const RTOL: f64 = 1e-9;

    pub fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= ATOL + RTOL * b.abs()
    }
}
