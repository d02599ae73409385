//! Optimization-based controllers as parametric convex programs.
//!
//! The crate builds feedback laws of the form
//!
//! ```text
//!     u*(x) = argmin_u 1/2 u^T Q(x) u + c(x)^T u   s.t.  A(x) u >= b(x)
//! ```
//!
//! with polynomial dependence on the state, solves them pointwise with KKT
//! certificates, diagnoses constraint qualifications at a state, estimates
//! the regularity class of the map `x -> u*(x)` by sampling, and simulates
//! the closed loop with forward-invariance monitoring.
//!
//! Modules follow that pipeline:
//!
//! - [`model`]: polynomials, parametric programs, the problem-spec format
//! - [`solver`]: active-set QP and two-phase simplex LP with certificates
//! - [`cqcheck`]: LICQ / MFCQ / Slater / SCS / constant-rank / boundedness
//!   verdicts with numerical certificates
//! - [`regprobe`]: Lipschitz, Hoelder, directional, jump, and boundedness
//!   probes of a controller map
//! - [`gallery`]: registered reference problems with closed-form twins
//! - [`closedloop`]: safety-filter / CLF-CBF / safe-gradient-flow builders,
//!   RK4 integration, candidate-solution residual checks, invariance
//!   monitors
//!
//! Core numeric code is generic over the scalar type through [`Real`];
//! the aliases below fix `f64`, which is what the command-line tool and the
//! shipped tolerances assume.

pub mod closedloop;
pub mod cqcheck;
pub mod gallery;
pub mod linalg;
pub mod model;
pub mod regprobe;
pub mod sample;
pub mod scalar;
pub mod solver;

pub use scalar::Real;

/// `f64` aliases for the main types.
pub type PolyExpr = model::PolyExpr<f64>;
pub type ParametricQp = model::ParametricQp<f64>;
pub type ControlAffineSystem = model::ControlAffineSystem<f64>;
pub type QpInstance = solver::QpInstance<f64>;
pub type KktSolution = solver::KktSolution<f64>;
pub type SolveOptions = solver::SolveOptions<f64>;
pub type LpSolution = solver::LpSolution<f64>;
pub type CqReport = cqcheck::CqReport<f64>;
pub type CqOptions = cqcheck::CqOptions<f64>;
pub type ControllerMap = regprobe::ControllerMap<f64>;
pub type RegularityEstimate = regprobe::RegularityEstimate<f64>;
pub type GalleryEntry = gallery::GalleryEntry<f64>;
pub type ClosedLoopSystem = closedloop::ClosedLoopSystem<f64>;
pub type Trajectory = closedloop::Trajectory<f64>;
pub type InvarianceReport = closedloop::InvarianceReport<f64>;
