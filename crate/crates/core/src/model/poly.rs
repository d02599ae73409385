//! Multivariate polynomials in the state variables.
//!
//! `PolyExpr` is the common currency for problem data: objective terms,
//! constraint rows, barrier functions, and vector fields are all polynomial
//! in the state, which keeps Lie derivatives closed under the calculus here.

use crate::scalar::Real;

use super::ModelError;

/// A polynomial in `num_vars` variables, stored in canonical form: terms
/// sorted by exponent vector, duplicate monomials merged, zero coefficients
/// dropped. Structural equality of canonical forms is semantic equality.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyExpr<T> {
    num_vars: usize,
    terms: Vec<Term<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term<T> {
    pub coeff: T,
    pub powers: Vec<u32>,
}

impl<T: Real> PolyExpr<T> {
    /// Build from raw terms, normalizing to canonical form.
    /// Fails on power-vector length mismatches and non-finite coefficients.
    pub fn new(num_vars: usize, terms: Vec<(T, Vec<u32>)>) -> Result<Self, ModelError> {
        for (c, p) in &terms {
            if p.len() != num_vars {
                return Err(ModelError::PowersLength {
                    expected: num_vars,
                    got: p.len(),
                });
            }
            if !c.is_finite() {
                return Err(ModelError::NonFiniteCoefficient);
            }
        }
        let mut canon: Vec<Term<T>> = terms
            .into_iter()
            .map(|(coeff, powers)| Term { coeff, powers })
            .collect();
        canon.sort_by(|a, b| a.powers.cmp(&b.powers));
        let mut merged: Vec<Term<T>> = Vec::with_capacity(canon.len());
        for t in canon {
            match merged.last_mut() {
                Some(last) if last.powers == t.powers => last.coeff += t.coeff,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != T::zero());
        Ok(PolyExpr {
            num_vars,
            terms: merged,
        })
    }

    pub fn zero(num_vars: usize) -> Self {
        PolyExpr {
            num_vars,
            terms: Vec::new(),
        }
    }

    pub fn constant(num_vars: usize, c: T) -> Self {
        PolyExpr::new(num_vars, vec![(c, vec![0; num_vars])]).expect("constant is well formed")
    }

    /// The variable `x[index]` (0-based) as a polynomial.
    pub fn var(num_vars: usize, index: usize) -> Self {
        assert!(index < num_vars, "variable index out of range");
        let mut p = vec![0u32; num_vars];
        p[index] = 1;
        PolyExpr::new(num_vars, vec![(T::one(), p)]).unwrap()
    }

    /// Single monomial `c * x^powers`.
    pub fn monomial(num_vars: usize, c: T, powers: Vec<u32>) -> Result<Self, ModelError> {
        PolyExpr::new(num_vars, vec![(c, powers)])
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.powers.iter().sum())
            .max()
            .unwrap_or(0)
    }

    /// Evaluate at `x`.
    pub fn eval(&self, x: &[T]) -> Result<T, ModelError> {
        if x.len() != self.num_vars {
            return Err(ModelError::PointDimension {
                expected: self.num_vars,
                got: x.len(),
            });
        }
        let mut acc = T::zero();
        for t in &self.terms {
            let mut m = t.coeff;
            for (xi, &p) in x.iter().zip(&t.powers) {
                if p > 0 {
                    m *= xi.powi(p as i32);
                }
            }
            acc += m;
        }
        Ok(acc)
    }

    pub fn add(&self, other: &Self) -> Result<Self, ModelError> {
        self.check_same_vars(other)?;
        let mut terms: Vec<(T, Vec<u32>)> = self
            .terms
            .iter()
            .map(|t| (t.coeff, t.powers.clone()))
            .collect();
        terms.extend(other.terms.iter().map(|t| (t.coeff, t.powers.clone())));
        PolyExpr::new(self.num_vars, terms)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, ModelError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        PolyExpr {
            num_vars: self.num_vars,
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: -t.coeff,
                    powers: t.powers.clone(),
                })
                .collect(),
        }
    }

    pub fn scale(&self, c: T) -> Self {
        PolyExpr::new(
            self.num_vars,
            self.terms
                .iter()
                .map(|t| (t.coeff * c, t.powers.clone()))
                .collect(),
        )
        .expect("scaling preserves shape")
    }

    pub fn mul(&self, other: &Self) -> Result<Self, ModelError> {
        self.check_same_vars(other)?;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let powers: Vec<u32> = a
                    .powers
                    .iter()
                    .zip(&b.powers)
                    .map(|(&x, &y)| x + y)
                    .collect();
                terms.push((a.coeff * b.coeff, powers));
            }
        }
        PolyExpr::new(self.num_vars, terms)
    }

    /// Partial derivative with respect to variable `var_index` (0-based).
    pub fn partial(&self, var_index: usize) -> Result<Self, ModelError> {
        if var_index >= self.num_vars {
            return Err(ModelError::VariableIndex {
                index: var_index,
                num_vars: self.num_vars,
            });
        }
        let mut terms = Vec::new();
        for t in &self.terms {
            let p = t.powers[var_index];
            if p == 0 {
                continue;
            }
            let mut powers = t.powers.clone();
            powers[var_index] = p - 1;
            terms.push((t.coeff * T::of(p as f64), powers));
        }
        PolyExpr::new(self.num_vars, terms)
    }

    /// Gradient as a vector of polynomials.
    pub fn gradient(&self) -> Vec<Self> {
        (0..self.num_vars)
            .map(|i| self.partial(i).unwrap())
            .collect()
    }

    fn check_same_vars(&self, other: &Self) -> Result<(), ModelError> {
        if self.num_vars != other.num_vars {
            return Err(ModelError::MixedArity {
                left: self.num_vars,
                right: other.num_vars,
            });
        }
        Ok(())
    }
}

/// Lie derivative of `h` along a polynomial vector field: grad(h)^T field.
pub fn lie_derivative<T: Real>(
    h: &PolyExpr<T>,
    field: &[PolyExpr<T>],
) -> Result<PolyExpr<T>, ModelError> {
    if field.len() != h.num_vars() {
        return Err(ModelError::FieldDimension {
            expected: h.num_vars(),
            got: field.len(),
        });
    }
    let mut acc = PolyExpr::zero(h.num_vars());
    for (i, f) in field.iter().enumerate() {
        acc = acc.add(&h.partial(i)?.mul(f)?)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> (PolyExpr<f64>, PolyExpr<f64>) {
        (PolyExpr::var(2, 0), PolyExpr::var(2, 1))
    }

    #[test]
    fn eval_monomial() {
        // 2*x1*x2 at (3, 4) = 24
        let p = PolyExpr::monomial(2, 2.0, vec![1, 1]).unwrap();
        assert_eq!(p.eval(&[3.0, 4.0]).unwrap(), 24.0);
    }

    #[test]
    fn eval_constant_one() {
        let p = PolyExpr::constant(3, 1.0);
        assert_eq!(p.eval(&[5.0, -2.0, 0.1]).unwrap(), 1.0);
    }

    #[test]
    fn eval_unbounded_sc_slack_polynomial() {
        // a(x) = 2 x1 x2 + x2^2 (1 - x1^2 - x2^2), a(1, eps) = 2 eps - eps^4
        let a = unbounded_slack();
        for &eps in &[0.1, 1e-3, 1e-6] {
            let v = a.eval(&[1.0, eps]).unwrap();
            assert!((v - (2.0 * eps - eps.powi(4))).abs() < 1e-15 * (1.0 + v.abs()));
        }
    }

    fn unbounded_slack() -> PolyExpr<f64> {
        PolyExpr::new(
            2,
            vec![
                (2.0, vec![1, 1]),
                (1.0, vec![0, 2]),
                (-1.0, vec![2, 2]),
                (-1.0, vec![0, 4]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn partial_power_rule() {
        let p = PolyExpr::monomial(1, 1.0, vec![2]).unwrap();
        let d = p.partial(0).unwrap();
        assert_eq!(d, PolyExpr::monomial(1, 2.0, vec![1]).unwrap());
    }

    #[test]
    fn mul_variables() {
        let (x1, x2) = xy();
        assert_eq!(
            x1.mul(&x2).unwrap(),
            PolyExpr::monomial(2, 1.0, vec![1, 1]).unwrap()
        );
    }

    #[test]
    fn add_cancels_to_zero() {
        let (x1, _) = xy();
        let s = x1.add(&x1.neg()).unwrap();
        assert!(s.is_zero());
        assert_eq!(s, PolyExpr::zero(2));
    }

    #[test]
    fn canonical_form_merges_duplicates() {
        let p = PolyExpr::new(1, vec![(1.0, vec![1]), (2.0, vec![1]), (0.0, vec![3])]).unwrap();
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.terms()[0].coeff, 3.0);
    }

    #[test]
    fn rejects_bad_terms() {
        assert!(PolyExpr::new(2, vec![(1.0, vec![1])]).is_err());
        assert!(PolyExpr::new(1, vec![(f64::NAN, vec![1])]).is_err());
        let p = PolyExpr::<f64>::var(2, 0);
        assert!(p.eval(&[1.0]).is_err());
    }

    #[test]
    fn lie_derivative_constant_field() {
        let (_, x2) = xy();
        let ld = lie_derivative(&x2, &[PolyExpr::zero(2), PolyExpr::constant(2, 1.0)]).unwrap();
        assert_eq!(ld, PolyExpr::constant(2, 1.0));
    }

    #[test]
    fn lie_derivative_rotation_preserves_norm() {
        let (x1, x2) = xy();
        let h = x1.mul(&x1).unwrap().add(&x2.mul(&x2).unwrap()).unwrap();
        let ld = lie_derivative(&h, &[x2.clone(), x1.neg()]).unwrap();
        assert!(ld.is_zero());
    }

    #[test]
    fn lie_derivative_orthogonal_drift() {
        // h = -x2, field = (1/2, 0): grad h = (0,-1) so the derivative is 0;
        // cross-checked against a central finite difference below.
        let (_, x2) = xy();
        let h = x2.neg();
        let field = [PolyExpr::constant(2, 0.5), PolyExpr::zero(2)];
        let ld = lie_derivative(&h, &field).unwrap();
        assert!(ld.is_zero());

        let x = [0.3, -0.7];
        let eps = 1e-6;
        let dir = [field[0].eval(&x).unwrap(), field[1].eval(&x).unwrap()];
        let hp = h.eval(&[x[0] + eps * dir[0], x[1] + eps * dir[1]]).unwrap();
        let hm = h.eval(&[x[0] - eps * dir[0], x[1] - eps * dir[1]]).unwrap();
        assert!(((hp - hm) / (2.0 * eps)).abs() < 1e-9);
    }

    #[test]
    fn generic_scalar_compiles_f32() {
        let p = PolyExpr::<f32>::monomial(2, 2.0, vec![1, 1]).unwrap();
        assert_eq!(p.eval(&[3.0, 4.0]).unwrap(), 24.0f32);
    }
}
