//! Near-surface wind extrapolation for steady, axisymmetric vortices.
//!
//! A parametric tangential velocity `v(r, z)` fitted to observations aloft
//! fixes the vertical and radial vorticity fields. With zero viscosity the
//! tangential momentum balance `ζ u − η w = 0` becomes a first-order
//! hyperbolic equation for the streamfunction `Ψ`, whose characteristics are
//! the level curves of the circulation `Γ = r v`. Streamfunction values on
//! the minimum observable height (MOH) line are carried down along those
//! curves into the unobservable surface layer, and `u`, `w` follow by
//! differentiation. Points whose characteristic never meets the MOH line
//! form the information void and are reported, never filled.
//!
//! The crate is `no_std` (with `alloc`). Enable `std` for `std` error
//! integration and `parallel` to spread per-node work over a rayon pool.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod characteristics;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod grid;
pub mod model;
pub mod profile;
pub mod retrieval;
pub mod roots;
pub mod simplex;
pub mod void;

mod par;

pub use characteristics::{trace_full, trace_rk, CharCurve, CurveSample, Termination, TraceOptions};
pub use error::{Error, FitError, ModelError, RetrievalError, TraceError};
pub use experiments::{
    generate_truth, make_pseudo_obs, run_ensemble, run_ensemble_with, run_twin, truth_scalars,
    EnsembleMember, EnsembleResult, EnsembleSpread, MemberSummary, Scalars, Spread, TopProfile,
    TwinConfig, TwinErrors, TwinOutcome, TwinTruth,
};
pub use fit::{fit_model, FitBounds, FitOptions, FitResult, VelocityObservation};
pub use grid::Grid;
pub use model::{validate_assumption1, AssumptionReport, Domain, TangentialModel, WoodWhiteVortex};
pub use profile::WoodWhiteProfile;
pub use retrieval::{
    build_moh_boundary, differentiate, residuals, retrieve, MohBoundary, Propagation, Residuals,
    RetrieveOptions, RetrievedField,
};
pub use void::{
    classify, detect_multiple_moh_intersections, min_unreachable_height, moh_intersection_bisect,
    NodeFlag, VoidMap,
};
