//! Problem data: polynomials, parametric programs, control-affine systems.

mod io;
mod poly;
mod program;

pub use io::{load_problem, save_problem, LoadError};
pub use poly::{lie_derivative, PolyExpr, Term};
pub use program::{ControlAffineSystem, ParametricQp};

/// Maximum total degree accepted when loading problem documents. Guards
/// against accidental blow-up in Lie-derivative chains.
pub const MAX_DEGREE: u32 = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    PowersLength { expected: usize, got: usize },
    NonFiniteCoefficient,
    PointDimension { expected: usize, got: usize },
    MixedArity { left: usize, right: usize },
    VariableIndex { index: usize, num_vars: usize },
    FieldDimension { expected: usize, got: usize },
    Shape(String),
}

impl std::fmt::Display for ModelError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelError::PowersLength { expected, got } => {
                write!(f, "powers vector has length {got}, expected {expected}")
            }
            ModelError::NonFiniteCoefficient => write!(f, "non-finite coefficient"),
            ModelError::PointDimension { expected, got } => {
                write!(
                    f,
                    "evaluation point has dimension {got}, expected {expected}"
                )
            }
            ModelError::MixedArity { left, right } => {
                write!(
                    f,
                    "polynomials over {left} and {right} variables cannot be combined"
                )
            }
            ModelError::VariableIndex { index, num_vars } => {
                write!(
                    f,
                    "variable index {index} out of range for {num_vars} variables"
                )
            }
            ModelError::FieldDimension { expected, got } => {
                write!(f, "vector field has {got} components, expected {expected}")
            }
            ModelError::Shape(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for ModelError {}
