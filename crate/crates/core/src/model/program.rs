//! Parametric programs and control-affine dynamics.

use crate::linalg::Mat;
use crate::scalar::Real;

use super::{ModelError, PolyExpr};

/// A parametric quadratic program in the input `u`, with data depending
/// polynomially on the state `x`:
///
/// ```text
///     minimize    1/2 u^T Q(x) u + c(x)^T u
///     subject to  A(x) u >= b(x)
/// ```
///
/// `Q(x)` is stored as its upper triangle and mirrored on evaluation, so it
/// is symmetric by construction. Positive semidefiniteness is a property of
/// each evaluated state and is checked at solve time.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricQp<T> {
    pub name: String,
    state_dim: usize,
    input_dim: usize,
    num_constraints: usize,
    /// Row-major upper triangle of Q: entry (i, j) with i <= j at
    /// index `i*m - i*(i-1)/2 + (j - i)`.
    q_upper: Vec<PolyExpr<T>>,
    c: Vec<PolyExpr<T>>,
    /// Row-major p x m.
    a: Vec<PolyExpr<T>>,
    b: Vec<PolyExpr<T>>,
}

impl<T: Real> ParametricQp<T> {
    /// An all-zero program skeleton; fill entries with the setters.
    pub fn new(
        name: impl Into<String>,
        state_dim: usize,
        input_dim: usize,
        num_constraints: usize,
    ) -> Self {
        assert!(
            state_dim >= 1 && input_dim >= 1,
            "state and input dimensions must be positive"
        );
        let m = input_dim;
        ParametricQp {
            name: name.into(),
            state_dim,
            input_dim,
            num_constraints,
            q_upper: vec![PolyExpr::zero(state_dim); m * (m + 1) / 2],
            c: vec![PolyExpr::zero(state_dim); m],
            a: vec![PolyExpr::zero(state_dim); num_constraints * m],
            b: vec![PolyExpr::zero(state_dim); num_constraints],
        }
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_constraints(&self) -> usize {
        self.num_constraints
    }

    fn upper_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j < self.input_dim);
        i * self.input_dim - i * (i + 1) / 2 + j
    }

    pub fn set_q(&mut self, i: usize, j: usize, p: PolyExpr<T>) -> Result<(), ModelError> {
        if i > j {
            return Err(ModelError::Shape(format!(
                "Q entry ({i},{j}) is below the diagonal; specify the upper triangle only"
            )));
        }
        self.check_entry(&p, j < self.input_dim && i < self.input_dim, "Q")?;
        let idx = self.upper_index(i, j);
        self.q_upper[idx] = p;
        Ok(())
    }

    pub fn set_c(&mut self, i: usize, p: PolyExpr<T>) -> Result<(), ModelError> {
        self.check_entry(&p, i < self.input_dim, "c")?;
        self.c[i] = p;
        Ok(())
    }

    pub fn set_a(&mut self, row: usize, col: usize, p: PolyExpr<T>) -> Result<(), ModelError> {
        self.check_entry(&p, row < self.num_constraints && col < self.input_dim, "A")?;
        self.a[row * self.input_dim + col] = p;
        Ok(())
    }

    pub fn set_b(&mut self, row: usize, p: PolyExpr<T>) -> Result<(), ModelError> {
        self.check_entry(&p, row < self.num_constraints, "b")?;
        self.b[row] = p;
        Ok(())
    }

    fn check_entry(&self, p: &PolyExpr<T>, in_range: bool, what: &str) -> Result<(), ModelError> {
        if !in_range {
            return Err(ModelError::Shape(format!(
                "{what} entry index out of range"
            )));
        }
        if p.num_vars() != self.state_dim {
            return Err(ModelError::MixedArity {
                left: self.state_dim,
                right: p.num_vars(),
            });
        }
        Ok(())
    }

    pub fn q_entry(&self, i: usize, j: usize) -> &PolyExpr<T> {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.q_upper[self.upper_index(i, j)]
    }

    pub fn c_entry(&self, i: usize) -> &PolyExpr<T> {
        &self.c[i]
    }

    pub fn a_entry(&self, row: usize, col: usize) -> &PolyExpr<T> {
        &self.a[row * self.input_dim + col]
    }

    pub fn b_entry(&self, row: usize) -> &PolyExpr<T> {
        &self.b[row]
    }

    /// Q(x), mirrored from the stored upper triangle.
    pub fn q_at(&self, x: &[T]) -> Result<Mat<T>, ModelError> {
        let m = self.input_dim;
        let mut q = Mat::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = self.q_entry(i, j).eval(x)?;
                q[(i, j)] = v;
                q[(j, i)] = v;
            }
        }
        Ok(q)
    }

    pub fn c_at(&self, x: &[T]) -> Result<Vec<T>, ModelError> {
        self.c.iter().map(|p| p.eval(x)).collect()
    }

    pub fn a_at(&self, x: &[T]) -> Result<Mat<T>, ModelError> {
        let (p, m) = (self.num_constraints, self.input_dim);
        let mut a = Mat::zeros(p, m);
        for i in 0..p {
            for j in 0..m {
                a[(i, j)] = self.a_entry(i, j).eval(x)?;
            }
        }
        Ok(a)
    }

    pub fn b_at(&self, x: &[T]) -> Result<Vec<T>, ModelError> {
        self.b.iter().map(|p| p.eval(x)).collect()
    }

    /// The affine constraint data of row `i` as `(g0, g1)` with
    /// `g_i(x, u) = g0(x)^T u + g1(x) <= 0`, i.e. `g0 = -A_i` and `g1 = b_i`.
    pub fn constraint_affine_parts(&self, row: usize) -> (Vec<PolyExpr<T>>, PolyExpr<T>) {
        let g0 = (0..self.input_dim)
            .map(|j| self.a_entry(row, j).neg())
            .collect();
        (g0, self.b_entry(row).clone())
    }

    /// Largest total degree over all data polynomials.
    pub fn max_degree(&self) -> u32 {
        self.q_upper
            .iter()
            .chain(&self.c)
            .chain(&self.a)
            .chain(&self.b)
            .map(PolyExpr::degree)
            .max()
            .unwrap_or(0)
    }
}

/// Control-affine dynamics `xdot = F0(x) + sum_i u_i Fi(x)` with polynomial
/// component fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlAffineSystem<T> {
    state_dim: usize,
    input_dim: usize,
    drift: Vec<PolyExpr<T>>,
    inputs: Vec<Vec<PolyExpr<T>>>,
}

impl<T: Real> ControlAffineSystem<T> {
    pub fn new(drift: Vec<PolyExpr<T>>, inputs: Vec<Vec<PolyExpr<T>>>) -> Result<Self, ModelError> {
        let n = drift.len();
        if n == 0 {
            return Err(ModelError::Shape(
                "drift field must have at least one component".into(),
            ));
        }
        for p in &drift {
            if p.num_vars() != n {
                return Err(ModelError::MixedArity {
                    left: n,
                    right: p.num_vars(),
                });
            }
        }
        for f in &inputs {
            if f.len() != n {
                return Err(ModelError::FieldDimension {
                    expected: n,
                    got: f.len(),
                });
            }
            for p in f {
                if p.num_vars() != n {
                    return Err(ModelError::MixedArity {
                        left: n,
                        right: p.num_vars(),
                    });
                }
            }
        }
        Ok(ControlAffineSystem {
            state_dim: n,
            input_dim: inputs.len(),
            drift,
            inputs,
        })
    }

    /// Single integrator `xdot = u` in `n` dimensions.
    pub fn integrator(n: usize) -> Self {
        let drift = vec![PolyExpr::zero(n); n];
        let inputs = (0..n)
            .map(|i| {
                (0..n)
                    .map(|k| {
                        if k == i {
                            PolyExpr::constant(n, T::one())
                        } else {
                            PolyExpr::zero(n)
                        }
                    })
                    .collect()
            })
            .collect();
        ControlAffineSystem::new(drift, inputs).unwrap()
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn drift(&self) -> &[PolyExpr<T>] {
        &self.drift
    }

    pub fn input_field(&self, i: usize) -> &[PolyExpr<T>] {
        &self.inputs[i]
    }

    /// Evaluate `F(x, u)`.
    pub fn field_at(&self, x: &[T], u: &[T]) -> Result<Vec<T>, ModelError> {
        if u.len() != self.input_dim {
            return Err(ModelError::FieldDimension {
                expected: self.input_dim,
                got: u.len(),
            });
        }
        let mut out: Vec<T> = self
            .drift
            .iter()
            .map(|p| p.eval(x))
            .collect::<Result<_, _>>()?;
        for (ui, f) in u.iter().zip(&self.inputs) {
            for (o, p) in out.iter_mut().zip(f) {
                *o += *ui * p.eval(x)?;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_is_mirrored_from_upper_triangle() {
        let mut qp = ParametricQp::<f64>::new("t", 2, 2, 0);
        qp.set_q(0, 0, PolyExpr::constant(2, 2.0)).unwrap();
        qp.set_q(0, 1, PolyExpr::var(2, 0)).unwrap();
        qp.set_q(1, 1, PolyExpr::constant(2, 3.0)).unwrap();
        let q = qp.q_at(&[5.0, 0.0]).unwrap();
        assert_eq!(q[(0, 1)], 5.0);
        assert_eq!(q[(1, 0)], 5.0);
        assert_eq!(q[(1, 1)], 3.0);
    }

    #[test]
    fn lower_triangle_entry_rejected() {
        let mut qp = ParametricQp::<f64>::new("t", 2, 2, 0);
        assert!(qp.set_q(1, 0, PolyExpr::constant(2, 1.0)).is_err());
    }

    #[test]
    fn integrator_field() {
        let sys = ControlAffineSystem::<f64>::integrator(2);
        let f = sys.field_at(&[0.0, 0.0], &[0.5, -1.0]).unwrap();
        assert_eq!(f, vec![0.5, -1.0]);
    }

    #[test]
    fn constraint_affine_parts_flip_sign() {
        let mut qp = ParametricQp::<f64>::new("t", 1, 1, 1);
        qp.set_a(0, 0, PolyExpr::constant(1, 2.0)).unwrap();
        qp.set_b(0, PolyExpr::var(1, 0)).unwrap();
        let (g0, g1) = qp.constraint_affine_parts(0);
        assert_eq!(g0[0].eval(&[0.0]).unwrap(), -2.0);
        assert_eq!(g1.eval(&[3.0]).unwrap(), 3.0);
    }
}
