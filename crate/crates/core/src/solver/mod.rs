//! Pointwise solution of the frozen convex programs: a primal active-set
//! method for the QPs and a two-phase simplex for the LPs, both returning
//! certificates (multipliers, active sets, Farkas rays) rather than bare
//! optimizers.

mod lp;
mod qp;

pub use lp::{solve_lp, LpSense, LpSolution, LpStatus};
pub use qp::solve_qp;

use crate::linalg::Mat;
use crate::model::{ModelError, ParametricQp};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    Dimension(String),
    /// Q fails the symmetry check at construction.
    NonSymmetric {
        max_asymmetry: f64,
    },
    /// Q has an eigenvalue below -eig_tol.
    Indefinite {
        min_eig: f64,
    },
    /// Same, attributed to the state where the program was frozen.
    IndefiniteAt {
        min_eig: f64,
        x: Vec<f64>,
    },
    Model(ModelError),
}

impl std::fmt::Display for SolverError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolverError::Dimension(m) => write!(f, "dimension mismatch: {m}"),
            SolverError::NonSymmetric { max_asymmetry } => {
                write!(f, "Q is not symmetric (max |Q - Q^T| = {max_asymmetry:e})")
            }
            SolverError::Indefinite { min_eig } => {
                write!(
                    f,
                    "Q is not positive semidefinite (smallest eigenvalue {min_eig:e})"
                )
            }
            SolverError::IndefiniteAt { min_eig, x } => write!(
                f,
                "Q(x) is not positive semidefinite at x = {x:?} (smallest eigenvalue {min_eig:e})"
            ),
            SolverError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SolverError {}

impl From<ModelError> for SolverError {
    fn from(e: ModelError) -> Self {
        SolverError::Model(e)
    }
}

/// A quadratic program frozen at one state:
/// minimize `1/2 u^T Q u + c^T u` subject to `A u >= b`.
#[derive(Debug, Clone)]
pub struct QpInstance<T> {
    pub q: Mat<T>,
    pub c: Vec<T>,
    pub a: Mat<T>,
    pub b: Vec<T>,
}

impl<T: Real> QpInstance<T> {
    pub fn new(q: Mat<T>, c: Vec<T>, a: Mat<T>, b: Vec<T>) -> Result<Self, SolverError> {
        let m = c.len();
        if q.rows != m || q.cols != m {
            return Err(SolverError::Dimension(format!(
                "Q is {}x{}, expected {m}x{m}",
                q.rows, q.cols
            )));
        }
        if a.rows != b.len() {
            return Err(SolverError::Dimension("A row count != b length".into()));
        }
        if a.rows > 0 && a.cols != m {
            return Err(SolverError::Dimension(
                "A column count != input dimension".into(),
            ));
        }
        let mut asym = T::zero();
        for i in 0..m {
            for j in i + 1..m {
                asym = asym.max((q[(i, j)] - q[(j, i)]).abs());
            }
        }
        let sym_tol = q.max_abs().max(T::one()) * T::of(1e-12);
        if asym > sym_tol {
            return Err(SolverError::NonSymmetric {
                max_asymmetry: asym.to_f64_lossy(),
            });
        }
        Ok(QpInstance { q, c, a, b })
    }

    /// Freeze a parametric program at `x`.
    pub fn from_program(program: &ParametricQp<T>, x: &[T]) -> Result<Self, SolverError> {
        QpInstance::new(
            program.q_at(x)?,
            program.c_at(x)?,
            program.a_at(x)?,
            program.b_at(x)?,
        )
    }

    pub fn input_dim(&self) -> usize {
        self.c.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.b.len()
    }

    pub fn objective(&self, u: &[T]) -> T {
        let qu = self.q.matvec(u);
        crate::scalar::dot(u, &qu) * T::of(0.5) + crate::scalar::dot(&self.c, u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
}

/// Solver tolerances. The defaults leave double-precision headroom at the
/// scales of the shipped problems.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions<T> {
    pub kkt_tol: T,
    pub eig_tol: T,
    pub lp_tol: T,
    pub max_iter: usize,
    /// Activity tolerance, relative to `1 + ||b||_inf`.
    pub act_tol: T,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            kkt_tol: T::of(1e-8),
            eig_tol: T::of(1e-10),
            lp_tol: T::of(1e-9),
            max_iter: 200,
            act_tol: T::of(1e-7),
        }
    }
}

/// KKT point returned by the solver, with residuals measured at the
/// returned primal-dual pair.
///
/// Residuals are relative: stationarity against the gradient scale
/// `1 + ||Q u + c||`, complementarity per row against `1 + lambda (1 + |b|)`,
/// feasibility against `1 + ||b||`. At unit scales they agree with the
/// absolute quantities; on badly scaled instances (multipliers of 1e15 and
/// beyond show up near the gallery's infeasibility cliffs) absolute
/// residuals would drown in representation error.
#[derive(Debug, Clone)]
pub struct KktSolution<T> {
    pub status: SolveStatus,
    pub u_star: Vec<T>,
    pub lambda_star: Vec<T>,
    /// Indices (0-based) of constraints active at `u_star`.
    pub active_set: Vec<usize>,
    pub objective: T,
    pub stationarity_residual: T,
    pub complementarity_residual: T,
    pub feasibility_violation: T,
    /// Objective value at the start of each active-set iteration.
    pub objective_trace: Vec<T>,
    /// Farkas ray `y >= 0` with `A^T y = 0`, `b^T y = 1` when infeasible.
    pub infeasibility_certificate: Option<Vec<T>>,
    pub iterations: usize,
}

impl<T: Real> KktSolution<T> {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Evaluate the parametric controller at a state: freeze the program data
/// at `x`, then solve the resulting QP. PSD failures are reported with the
/// offending state attached.
pub fn evaluate_controller<T: Real>(
    program: &ParametricQp<T>,
    x: &[T],
    opts: &SolveOptions<T>,
) -> Result<KktSolution<T>, SolverError> {
    if x.len() != program.state_dim() {
        return Err(SolverError::Dimension(format!(
            "state has dimension {}, program expects {}",
            x.len(),
            program.state_dim()
        )));
    }
    let inst = QpInstance::from_program(program, x)?;
    solve_qp(&inst, opts).map_err(|e| match e {
        SolverError::Indefinite { min_eig } => SolverError::IndefiniteAt {
            min_eig,
            x: x.iter().map(|v| v.to_f64_lossy()).collect(),
        },
        other => other,
    })
}
