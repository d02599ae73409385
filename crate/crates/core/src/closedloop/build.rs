//! Optimization-based controller builders.
//!
//! All three constructions share the min-norm shape `Q = I` with rows built
//! from Lie derivatives, so the resulting programs stay polynomial in the
//! state and load/save through the document format like any other program.

use crate::model::{lie_derivative, ControlAffineSystem, ModelError, ParametricQp, PolyExpr};
use crate::regprobe::ControllerMap;
use crate::scalar::Real;
use crate::solver::SolveOptions;

use super::{Barrier, ClosedLoopSystem};

fn identity_objective<T: Real>(qp: &mut ParametricQp<T>, m: usize) {
    let n = qp.state_dim();
    for i in 0..m {
        qp.set_q(i, i, PolyExpr::constant(n, T::one()))
            .expect("diagonal in range");
    }
}

/// Min-norm projection of the nominal controller `k` onto the barrier
/// half-space:
///
/// ```text
///     min 1/2 ||u - k(x)||^2
///     s.t. [L_F1 h ... L_Fm h] u >= -alpha_gain h - L_F0 h
/// ```
pub fn build_safety_filter<T: Real>(
    dynamics: &ControlAffineSystem<T>,
    h: &PolyExpr<T>,
    alpha_gain: T,
    nominal: &[PolyExpr<T>],
) -> Result<ParametricQp<T>, ModelError> {
    let n = dynamics.state_dim();
    let m = dynamics.input_dim();
    if h.num_vars() != n {
        return Err(ModelError::MixedArity {
            left: n,
            right: h.num_vars(),
        });
    }
    if nominal.len() != m {
        return Err(ModelError::FieldDimension {
            expected: m,
            got: nominal.len(),
        });
    }
    let mut qp = ParametricQp::new("safety_filter", n, m, 1);
    identity_objective(&mut qp, m);
    for (i, k) in nominal.iter().enumerate() {
        qp.set_c(i, k.neg())?;
    }
    for i in 0..m {
        qp.set_a(0, i, lie_derivative(h, dynamics.input_field(i))?)?;
    }
    let drift_term = lie_derivative(h, dynamics.drift())?;
    qp.set_b(0, h.scale(-alpha_gain).sub(&drift_term)?)?;
    Ok(qp)
}

/// Safety filter with an additional stability row:
///
/// ```text
///     s.t.  [L_F1 h ... ] u >= -alpha_gain h - L_F0 h
///          -[L_F1 V ... ] u >=  W + L_F0 V
/// ```
///
/// `V` is the user's Lyapunov certificate and `W` the required decay rate;
/// neither is checked for positive definiteness here.
pub fn build_clf_cbf<T: Real>(
    dynamics: &ControlAffineSystem<T>,
    h: &PolyExpr<T>,
    v: &PolyExpr<T>,
    w: &PolyExpr<T>,
    alpha_gain: T,
    nominal: &[PolyExpr<T>],
) -> Result<ParametricQp<T>, ModelError> {
    let n = dynamics.state_dim();
    let m = dynamics.input_dim();
    if v.num_vars() != n || w.num_vars() != n {
        return Err(ModelError::MixedArity {
            left: n,
            right: v.num_vars(),
        });
    }
    let base = build_safety_filter(dynamics, h, alpha_gain, nominal)?;
    let mut qp = ParametricQp::new("clf_cbf", n, m, 2);
    identity_objective(&mut qp, m);
    for i in 0..m {
        qp.set_c(i, base.c_entry(i).clone())?;
        qp.set_a(0, i, base.a_entry(0, i).clone())?;
        qp.set_a(1, i, lie_derivative(v, dynamics.input_field(i))?.neg())?;
    }
    qp.set_b(0, base.b_entry(0).clone())?;
    let drift_v = lie_derivative(v, dynamics.drift())?;
    qp.set_b(1, w.add(&drift_v)?)?;
    Ok(qp)
}

/// Projection of the negative gradient onto the constraint-compatible
/// half-spaces:
///
/// ```text
///     min 1/2 ||xi + grad f(x)||^2
///     s.t. -(d g_i/d x) xi >= alpha_gain g_i(x)
/// ```
///
/// The optimization variable is the state velocity, so the program has
/// `m = n` and closes the loop on a single integrator.
pub fn build_sgf<T: Real>(
    objective: &PolyExpr<T>,
    constraints: &[PolyExpr<T>],
    alpha_gain: T,
) -> Result<ParametricQp<T>, ModelError> {
    let n = objective.num_vars();
    for g in constraints {
        if g.num_vars() != n {
            return Err(ModelError::MixedArity {
                left: n,
                right: g.num_vars(),
            });
        }
    }
    let mut qp = ParametricQp::new("safe_gradient_flow", n, n, constraints.len());
    identity_objective(&mut qp, n);
    for j in 0..n {
        qp.set_c(j, objective.partial(j)?)?;
    }
    for (i, g) in constraints.iter().enumerate() {
        for j in 0..n {
            qp.set_a(i, j, g.partial(j)?.neg())?;
        }
        qp.set_b(i, g.scale(alpha_gain))?;
    }
    Ok(qp)
}

/// The safe gradient flow as a closed loop: integrator dynamics driven by
/// the projected gradient, with `h_i = -g_i` registered as the barriers of
/// the feasible set.
pub fn sgf_system<T: Real>(
    objective: &PolyExpr<T>,
    constraints: &[PolyExpr<T>],
    alpha_gain: T,
    solve: SolveOptions<T>,
) -> Result<ClosedLoopSystem<T>, ModelError> {
    let n = objective.num_vars();
    let qp = build_sgf(objective, constraints, alpha_gain)?;
    let controller = ControllerMap::from_program(qp, solve);
    let barriers = constraints
        .iter()
        .map(|g| Barrier {
            h: g.neg(),
            alpha_gain,
        })
        .collect();
    ClosedLoopSystem::new(
        "safe_gradient_flow",
        ControlAffineSystem::integrator(n),
        controller,
        barriers,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{evaluate_controller, SolveStatus};

    fn integrator1() -> ControlAffineSystem<f64> {
        ControlAffineSystem::integrator(1)
    }

    #[test]
    fn safety_filter_scalar_projection() {
        // xdot = u, h = -x, k = 1, alpha = 1: row -u >= x, i.e. u <= -x.
        // Hand KKT: u* = min(1, -x).
        let h = PolyExpr::var(1, 0).neg();
        let k = vec![PolyExpr::constant(1, 1.0)];
        let qp = build_safety_filter(&integrator1(), &h, 1.0, &k).unwrap();
        let opts = SolveOptions::default();
        let at = |x: f64| evaluate_controller(&qp, &[x], &opts).unwrap().u_star[0];
        assert!((at(-2.0) - 1.0).abs() < 1e-9); // nominal feasible
        assert!(at(0.0).abs() < 1e-9); // projected to the boundary
        assert!((at(0.5) + 0.5).abs() < 1e-9);
    }

    #[test]
    fn safety_filter_inactive_constraint_returns_nominal() {
        // h = 1 - x^2 on a double integrator-ish field: anywhere the row is
        // slack the projection is the identity
        let n = 2;
        let h = PolyExpr::constant(n, 1.0)
            .sub(&PolyExpr::var(n, 0).mul(&PolyExpr::var(n, 0)).unwrap())
            .unwrap();
        let k: Vec<PolyExpr<f64>> = vec![PolyExpr::constant(n, 0.3), PolyExpr::var(n, 1)];
        let dyn2 = ControlAffineSystem::integrator(2);
        let qp = build_safety_filter(&dyn2, &h, 1.0, &k).unwrap();
        let sol = evaluate_controller(&qp, &[0.0, 0.7], &SolveOptions::default()).unwrap();
        assert!((sol.u_star[0] - 0.3).abs() < 1e-9);
        assert!((sol.u_star[1] - 0.7).abs() < 1e-9);
        assert!(sol.active_set.is_empty());
    }

    #[test]
    fn safety_filter_zero_fields_degenerate_row() {
        // F1 = 0 makes the row all-zero: feasible iff -alpha h - L_F0 h <= 0
        let drift = vec![PolyExpr::constant(1, 1.0)];
        let inputs = vec![vec![PolyExpr::zero(1)]];
        let sys = ControlAffineSystem::new(drift, inputs).unwrap();
        let h = PolyExpr::var(1, 0); // h = x, L_F0 h = 1
        let qp = build_safety_filter(&sys, &h, 1.0, &[PolyExpr::zero(1)]).unwrap();
        // at x = 0: row 0 >= -1 always true -> u* = 0
        let sol = evaluate_controller(&qp, &[0.0], &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        // at x = -2: row 0 >= 2 - 1 = 1 infeasible
        let sol = evaluate_controller(&qp, &[-2.0], &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn clf_cbf_scalar_example() {
        // integrator, V = x^2, W = x^2, h = 1 - x^2, k = 0, alpha = 1
        let x = PolyExpr::<f64>::var(1, 0);
        let x2 = x.mul(&x).unwrap();
        let h = PolyExpr::constant(1, 1.0).sub(&x2).unwrap();
        let qp = build_clf_cbf(&integrator1(), &h, &x2, &x2, 1.0, &[PolyExpr::zero(1)]).unwrap();
        let opts = SolveOptions::default();
        // at x = 0.5: CLF row forces u <= -0.25, CBF row allows u <= 0.75
        let sol = evaluate_controller(&qp, &[0.5], &opts).unwrap();
        assert!((sol.u_star[0] + 0.25).abs() < 1e-9, "{}", sol.u_star[0]);
        // at x = 0 both rows are vacuous: u* = k(0) = 0
        let sol = evaluate_controller(&qp, &[0.0], &opts).unwrap();
        assert!(sol.u_star[0].abs() < 1e-12);
    }

    #[test]
    fn clf_cbf_infeasible_pair_reported() {
        // rows u <= -1 and u >= 1 cannot both hold
        let mut qp = ParametricQp::<f64>::new("conflict", 1, 1, 2);
        qp.set_q(0, 0, PolyExpr::constant(1, 1.0)).unwrap();
        qp.set_a(0, 0, PolyExpr::constant(1, -1.0)).unwrap();
        qp.set_b(0, PolyExpr::constant(1, 1.0)).unwrap();
        qp.set_a(1, 0, PolyExpr::constant(1, 1.0)).unwrap();
        qp.set_b(1, PolyExpr::constant(1, 1.0)).unwrap();
        let sol = evaluate_controller(&qp, &[0.0], &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn sgf_rows_and_values() {
        // f = x^2, g = 1 - x (feasible set x >= 1), alpha = 1
        let x = PolyExpr::<f64>::var(1, 0);
        let f = x.mul(&x).unwrap();
        let g = PolyExpr::constant(1, 1.0).sub(&x).unwrap();
        let qp = build_sgf(&f, &[g], 1.0).unwrap();
        let opts = SolveOptions::default();
        // at the optimizer x = 1 of min x^2 s.t. x >= 1: row xi >= 0 and
        // gradient 2 push against it: xi* = 0 (equilibrium)
        let sol = evaluate_controller(&qp, &[1.0], &opts).unwrap();
        assert!(sol.u_star[0].abs() < 1e-10);
        // with a large gain the row at x = 2 is slack: pure gradient flow
        let qp10 = build_sgf(&f, &[PolyExpr::constant(1, 1.0).sub(&x).unwrap()], 10.0).unwrap();
        let sol = evaluate_controller(&qp10, &[2.0], &opts).unwrap();
        assert!((sol.u_star[0] + 4.0).abs() < 1e-9, "{}", sol.u_star[0]);
        assert!(sol.active_set.is_empty());
        // with alpha = 1 the same state saturates the decay row instead
        let sol = evaluate_controller(&qp, &[2.0], &opts).unwrap();
        assert!((sol.u_star[0] + 1.0).abs() < 1e-9, "{}", sol.u_star[0]);
    }

    #[test]
    fn sgf_unconstrained_linear_objective() {
        // f = 3 x1: xi* = -grad f = -3 everywhere
        let f = PolyExpr::<f64>::monomial(1, 3.0, vec![1]).unwrap();
        let qp = build_sgf(&f, &[], 1.0).unwrap();
        let sol = evaluate_controller(&qp, &[5.0], &SolveOptions::default()).unwrap();
        assert!((sol.u_star[0] + 3.0).abs() < 1e-12);
    }
}
