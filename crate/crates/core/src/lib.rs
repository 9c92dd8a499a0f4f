//! Ultra-weak discontinuous Galerkin methods for nonlinear Schrödinger
//! equations, with the flux-adapted projection used in their error analysis.

pub mod basis;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod flux;
pub mod imex;
pub mod measure;
pub mod mesh;
pub mod operator;
pub mod problems;
pub mod projection;
pub mod study;

pub use basis::Basis;
pub use diagnostics::{
    diagnose, diagnose_mesh, evaluate_bound, predict_order, OrderPrediction, ProjectionCase,
    ProjectionDiagnostics,
};
pub use error::{Error, Result};
pub use field::{DGFunction, Traces};
pub use flux::{check_stability, BetaLaw, FluxFamily, FluxParams, RealFlux, StabilityClass, StabilityLabel};
pub use imex::{evolve, solve_shifted, step, EvolutionRecord, IMEXTableau, Integrator, ShiftedSolver};
pub use measure::{measure_error, measure_error_with, measure_order, ErrorReport, OrderTriple};
pub use mesh::Mesh1D;
pub use operator::{
    apply_nonlinear, assemble_linear, energy, mass_inner, nonlinear_modes, LinearOperator, NonlinearTerm,
};
pub use problems::BuiltinProblem;
pub use projection::{l2_project, project_p1, project_p2, project_star, project_star_local, SmoothFunction};
