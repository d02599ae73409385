//! Primal active-set method for convex QPs.
//!
//! The working set holds a linearly independent subset of the active rows.
//! Each iteration solves the equality-constrained subproblem on the working
//! set, steps to the nearest blocking constraint, and adds or drops rows by
//! Bland's lowest-index rule. Multipliers at the candidate optimum are
//! recovered by nonnegative least squares over the *full* active set, so
//! degenerate geometries (more active rows than inputs) do not require LICQ
//! to certify optimality.

use crate::linalg::{cholesky, cholesky_solve, lstsq, lu_solve, nnls, svd, sym_eigen, Mat};
use crate::scalar::{dot, norm_inf, Real};

use super::{
    solve_lp, KktSolution, LpSense, LpStatus, QpInstance, SolveOptions, SolveStatus, SolverError,
};

pub fn solve_qp<T: Real>(
    inst: &QpInstance<T>,
    opts: &SolveOptions<T>,
) -> Result<KktSolution<T>, SolverError> {
    let m = inst.input_dim();

    let (eigvals, _) = sym_eigen(&inst.q);
    let min_eig = eigvals[0];
    if min_eig < -opts.eig_tol {
        return Err(SolverError::Indefinite {
            min_eig: min_eig.to_f64_lossy(),
        });
    }
    let chol = cholesky(&inst.q, opts.eig_tol);

    let act_abs = opts.act_tol * (T::one() + norm_inf(&inst.b));

    // feasible start
    let mut u = match feasible_start(inst, opts)? {
        FeasibleStart::Point(u) => u,
        FeasibleStart::Infeasible {
            violation,
            certificate,
        } => {
            return Ok(infeasible_solution(inst, violation, certificate));
        }
    };

    let mut working: Vec<usize> = independent_active_subset(inst, &u, act_abs, m);
    let mut trace: Vec<T> = Vec::new();
    let mut iterations = 0usize;
    let mut stalled = 0usize;

    for iter in 0..opts.max_iter {
        iterations = iter + 1;
        let obj = inst.objective(&u);
        if let Some(&prev) = trace.last() {
            // an ill-conditioned working set can turn the pinned step into
            // numerical noise; no objective progress routes the iteration
            // to the multiplier logic instead of creeping forever
            if obj > prev - T::of(1e-14) * (T::one() + prev.abs()) {
                stalled += 1;
            } else {
                stalled = 0;
            }
        }
        trace.push(obj);
        let g: Vec<T> = {
            let mut g = inst.q.matvec(&u);
            for (gi, &ci) in g.iter_mut().zip(&inst.c) {
                *gi += ci;
            }
            g
        };

        // a full independent working set pins the step to zero exactly
        let step = if working.len() == m || stalled >= 2 {
            EqpStep::Direction(vec![T::zero(); m])
        } else {
            equality_step(inst, &g, &working, chol.as_ref(), opts)
        };
        let d = match step {
            EqpStep::Direction(d) => d,
            EqpStep::Unbounded(ray) => {
                // descend along the objective's recession direction until a
                // constraint blocks; a free ray means the QP is unbounded
                match blocking_constraint(inst, &u, &ray, &working) {
                    Some((alpha, idx)) => {
                        for (ui, ri) in u.iter_mut().zip(&ray) {
                            *ui += alpha * *ri;
                        }
                        insert_sorted(&mut working, idx);
                        continue;
                    }
                    None => {
                        let mut sol = infeasible_solution(inst, T::zero(), None);
                        sol.status = SolveStatus::Unbounded;
                        sol.u_star = u;
                        sol.objective_trace = trace;
                        sol.iterations = iterations;
                        return Ok(sol);
                    }
                }
            }
        };

        let d_tol = T::of(1e-11) * (T::one() + norm_inf(&u));
        if norm_inf(&d) <= d_tol {
            // candidate optimum for the working set
            let active = active_rows(inst, &u, act_abs);
            let (lambda, stat_res) = multipliers_nnls(inst, &g, &active);
            if stat_res <= opts.kkt_tol {
                return Ok(assemble_optimal(
                    inst, u, lambda, active, stat_res, trace, iterations,
                ));
            }
            // stationarity fails: drop the lowest-index working row whose
            // equality multiplier is negative
            let mu = working_multipliers(inst, &g, &working);
            let drop = working
                .iter()
                .zip(&mu)
                .find(|(_, &mk)| mk < -opts.kkt_tol)
                .map(|(&idx, _)| idx);
            match drop {
                Some(idx) => {
                    working.retain(|&k| k != idx);
                    stalled = 0;
                }
                None => {
                    // numerically stuck: accept the best certificate we have
                    let mut sol =
                        assemble_optimal(inst, u, lambda, active, stat_res, trace, iterations);
                    sol.status = SolveStatus::MaxIterations;
                    return Ok(sol);
                }
            }
        } else {
            match blocking_constraint(inst, &u, &d, &working) {
                Some((alpha, idx)) if alpha < T::one() => {
                    for (ui, di) in u.iter_mut().zip(&d) {
                        *ui += alpha * *di;
                    }
                    insert_sorted(&mut working, idx);
                }
                _ => {
                    for (ui, di) in u.iter_mut().zip(&d) {
                        *ui += *di;
                    }
                }
            }
        }
    }

    // iteration budget exhausted
    let g: Vec<T> = {
        let mut g = inst.q.matvec(&u);
        for (gi, &ci) in g.iter_mut().zip(&inst.c) {
            *gi += ci;
        }
        g
    };
    let active = active_rows(inst, &u, act_abs);
    let (lambda, stat_res) = multipliers_nnls(inst, &g, &active);
    let mut sol = assemble_optimal(inst, u, lambda, active, stat_res, trace, iterations);
    sol.status = SolveStatus::MaxIterations;
    Ok(sol)
}

enum FeasibleStart<T> {
    Point(Vec<T>),
    Infeasible {
        violation: T,
        certificate: Option<Vec<T>>,
    },
}

/// Phase 1: minimize the total constraint violation `sum t_i` over
/// `A u + t >= b`, `t >= 0`. Zero optimum yields a feasible start; a
/// positive one is converted into a Farkas ray.
fn feasible_start<T: Real>(
    inst: &QpInstance<T>,
    opts: &SolveOptions<T>,
) -> Result<FeasibleStart<T>, SolverError> {
    let m = inst.input_dim();
    let p = inst.num_constraints();
    if p == 0 {
        return Ok(FeasibleStart::Point(vec![T::zero(); m]));
    }
    let vars = m + p;
    let mut rows: Vec<Vec<T>> = Vec::with_capacity(2 * p);
    let mut rhs: Vec<T> = Vec::with_capacity(2 * p);
    for i in 0..p {
        let mut row = vec![T::zero(); vars];
        row[..m].copy_from_slice(inst.a.row(i));
        row[m + i] = T::one();
        rows.push(row);
        rhs.push(inst.b[i]);
    }
    for i in 0..p {
        let mut row = vec![T::zero(); vars];
        row[m + i] = T::one();
        rows.push(row);
        rhs.push(T::zero());
    }
    let a_ineq = Mat::from_rows(&rows);
    let mut objective = vec![T::zero(); vars];
    for i in 0..p {
        objective[m + i] = T::one();
    }
    let lp = solve_lp(
        &Mat::zeros(0, vars),
        &[],
        &a_ineq,
        &rhs,
        &objective,
        LpSense::Minimize,
    )?;
    let feas_tol = opts.lp_tol * (T::one() + norm_inf(&inst.b));
    match lp.status {
        LpStatus::Optimal if lp.value <= feas_tol => {
            Ok(FeasibleStart::Point(lp.optimum[..m].to_vec()))
        }
        LpStatus::Optimal => Ok(FeasibleStart::Infeasible {
            violation: lp.value,
            certificate: farkas_certificate(inst),
        }),
        // phase-1 objective is bounded below by zero; anything else is a
        // numerical breakdown surfaced as infeasibility without certificate
        _ => Ok(FeasibleStart::Infeasible {
            violation: T::infinity(),
            certificate: None,
        }),
    }
}

/// Search for `y >= 0` with `A^T y = 0` and `b^T y = 1`: a certificate that
/// `A u >= b` has no solution.
fn farkas_certificate<T: Real>(inst: &QpInstance<T>) -> Option<Vec<T>> {
    let m = inst.input_dim();
    let p = inst.num_constraints();
    let mut eq_rows: Vec<Vec<T>> = Vec::with_capacity(m + 1);
    let mut eq_rhs: Vec<T> = Vec::with_capacity(m + 1);
    for j in 0..m {
        eq_rows.push(inst.a.col(j));
        eq_rhs.push(T::zero());
    }
    eq_rows.push(inst.b.clone());
    eq_rhs.push(T::one());
    let a_eq = Mat::from_rows(&eq_rows);
    let a_ineq = Mat::identity(p);
    let zeros = vec![T::zero(); p];
    match solve_lp(&a_eq, &eq_rhs, &a_ineq, &zeros, &zeros, LpSense::Minimize) {
        Ok(sol) if sol.status == LpStatus::Optimal => Some(sol.optimum),
        _ => None,
    }
}

fn infeasible_solution<T: Real>(
    inst: &QpInstance<T>,
    violation: T,
    certificate: Option<Vec<T>>,
) -> KktSolution<T> {
    KktSolution {
        status: SolveStatus::Infeasible,
        u_star: vec![T::zero(); inst.input_dim()],
        lambda_star: vec![T::zero(); inst.num_constraints()],
        active_set: Vec::new(),
        objective: T::zero(),
        stationarity_residual: T::infinity(),
        complementarity_residual: T::zero(),
        feasibility_violation: violation,
        objective_trace: Vec::new(),
        infeasibility_certificate: certificate,
        iterations: 0,
    }
}

fn active_rows<T: Real>(inst: &QpInstance<T>, u: &[T], act_abs: T) -> Vec<usize> {
    (0..inst.num_constraints())
        .filter(|&i| (dot(inst.a.row(i), u) - inst.b[i]).abs() <= act_abs)
        .collect()
}

/// Greedy independent subset of the active rows (ascending row order), used
/// to seed the working set.
fn independent_active_subset<T: Real>(
    inst: &QpInstance<T>,
    u: &[T],
    act_abs: T,
    m: usize,
) -> Vec<usize> {
    let mut subset: Vec<usize> = Vec::new();
    for i in active_rows(inst, u, act_abs) {
        if subset.len() == m {
            break;
        }
        let mut candidate = subset.clone();
        candidate.push(i);
        let mat = inst.a.select_rows(&candidate);
        if crate::linalg::rank(&mat, T::of(1e-10)) == candidate.len() {
            subset = candidate;
        }
    }
    subset
}

enum EqpStep<T> {
    Direction(Vec<T>),
    /// Unbounded descent direction of the equality subproblem.
    Unbounded(Vec<T>),
}

/// Solve the equality-constrained subproblem
/// `min 1/2 (u+d)^T Q (u+d) + c^T (u+d)  s.t.  A_W d = 0`
/// and return the step `d`.
fn equality_step<T: Real>(
    inst: &QpInstance<T>,
    g: &[T],
    working: &[usize],
    chol: Option<&Mat<T>>,
    opts: &SolveOptions<T>,
) -> EqpStep<T> {
    let m = inst.input_dim();
    let w = working.len();
    if w == 0 {
        if let Some(l) = chol {
            let neg_g: Vec<T> = g.iter().map(|&v| -v).collect();
            return EqpStep::Direction(cholesky_solve(l, &neg_g));
        }
        return singular_unconstrained_step(inst, g, opts);
    }
    let aw = inst.a.select_rows(working);
    let dim = m + w;
    let mut k = Mat::zeros(dim, dim);
    for i in 0..m {
        for j in 0..m {
            k[(i, j)] = inst.q[(i, j)];
        }
    }
    for (r, _) in working.iter().enumerate() {
        for j in 0..m {
            k[(j, m + r)] = -aw[(r, j)];
            k[(m + r, j)] = aw[(r, j)];
        }
    }
    let mut rhs = vec![T::zero(); dim];
    for i in 0..m {
        rhs[i] = -g[i];
    }
    match lu_solve(&k, &rhs) {
        Some(sol) => EqpStep::Direction(sol[..m].to_vec()),
        None => {
            // KKT matrix singular: Q is only PSD and its null space meets
            // the working-set kernel. Look for a descent ray there.
            let mut stacked_rows: Vec<Vec<T>> = (0..m).map(|i| inst.q.row(i).to_vec()).collect();
            for r in 0..w {
                stacked_rows.push(aw.row(r).to_vec());
            }
            let stacked = Mat::from_rows(&stacked_rows);
            let s = svd(&stacked);
            let smax = s.sigma.first().copied().unwrap_or(T::zero()).max(T::one());
            for j in (0..s.sigma.len()).rev() {
                if s.sigma[j] > smax * T::of(1e-10) {
                    break;
                }
                let v = s.v.col(j);
                let slope = dot(g, &v);
                if slope.abs() > opts.kkt_tol {
                    let ray: Vec<T> = v
                        .iter()
                        .map(|&vi| if slope > T::zero() { -vi } else { vi })
                        .collect();
                    return EqpStep::Unbounded(ray);
                }
            }
            // consistent singular system: take the minimum-norm step
            let sol = lstsq(&k, &rhs, T::of(1e-12));
            EqpStep::Direction(sol[..m].to_vec())
        }
    }
}

fn singular_unconstrained_step<T: Real>(
    inst: &QpInstance<T>,
    g: &[T],
    opts: &SolveOptions<T>,
) -> EqpStep<T> {
    // Q singular and no working constraints: either c is consistent with
    // range(Q) (minimum-norm Newton step) or the objective recedes along a
    // null direction.
    let (vals, vecs) = sym_eigen(&inst.q);
    let m = inst.input_dim();
    let scale = vals[m - 1].max(T::one());
    for j in 0..m {
        if vals[j] > scale * T::of(1e-10) {
            break;
        }
        let v = vecs.col(j);
        let slope = dot(g, &v);
        if slope.abs() > opts.kkt_tol {
            let ray: Vec<T> = v
                .iter()
                .map(|&vi| if slope > T::zero() { -vi } else { vi })
                .collect();
            return EqpStep::Unbounded(ray);
        }
    }
    let neg_g: Vec<T> = g.iter().map(|&v| -v).collect();
    EqpStep::Direction(lstsq(&inst.q, &neg_g, T::of(1e-12)))
}

/// Largest step along `d` keeping all non-working rows feasible. Returns the
/// blocking row of lowest index when the step is below 1.
fn blocking_constraint<T: Real>(
    inst: &QpInstance<T>,
    u: &[T],
    d: &[T],
    working: &[usize],
) -> Option<(T, usize)> {
    let dir_tol = T::of(1e-13) * (T::one() + inst.a.max_abs()) * (T::one() + norm_inf(d));
    let mut alpha = T::one();
    let mut blocker: Option<usize> = None;
    for i in 0..inst.num_constraints() {
        if working.contains(&i) {
            continue;
        }
        let ad = dot(inst.a.row(i), d);
        if ad < -dir_tol {
            let slack = dot(inst.a.row(i), u) - inst.b[i];
            let ai = (slack.max(T::zero())) / (-ad);
            if ai < alpha {
                alpha = ai;
                blocker = Some(i);
            }
        }
    }
    blocker.map(|i| (alpha, i))
}

/// Multipliers for the rows in the working set from the stationarity system
/// `A_W^T mu = g`, by minimum-norm least squares.
fn working_multipliers<T: Real>(inst: &QpInstance<T>, g: &[T], working: &[usize]) -> Vec<T> {
    if working.is_empty() {
        return Vec::new();
    }
    let awt = inst.a.select_rows(working).transpose();
    lstsq(&awt, g, T::of(1e-12))
}

/// Nonnegative multipliers over the full active set. Returns the multipliers
/// and the stationarity residual `||g - A_act^T lambda||_inf` relative to
/// the gradient scale.
fn multipliers_nnls<T: Real>(inst: &QpInstance<T>, g: &[T], active: &[usize]) -> (Vec<T>, T) {
    let scale = T::one() + norm_inf(g);
    if active.is_empty() {
        return (Vec::new(), norm_inf(g) / scale);
    }
    let awt = inst.a.select_rows(active).transpose();
    let lambda = nnls(&awt, g);
    let mut resid = awt.matvec(&lambda);
    for (r, &gi) in resid.iter_mut().zip(g) {
        *r -= gi;
    }
    (lambda, norm_inf(&resid) / scale)
}

fn assemble_optimal<T: Real>(
    inst: &QpInstance<T>,
    u: Vec<T>,
    lambda_active: Vec<T>,
    active: Vec<usize>,
    stat_res: T,
    mut trace: Vec<T>,
    iterations: usize,
) -> KktSolution<T> {
    let p = inst.num_constraints();
    let mut lambda = vec![T::zero(); p];
    for (&i, &l) in active.iter().zip(&lambda_active) {
        lambda[i] = l;
    }
    let b_scale = T::one() + norm_inf(&inst.b);
    let mut feas = T::zero();
    let mut compl = T::zero();
    for i in 0..p {
        let slack = dot(inst.a.row(i), &u) - inst.b[i];
        feas = feas.max(-slack / b_scale);
        let row_scale = T::one() + lambda[i] * (T::one() + inst.b[i].abs());
        compl = compl.max((lambda[i] * slack).abs() / row_scale);
    }
    let objective = inst.objective(&u);
    trace.push(objective);
    KktSolution {
        status: SolveStatus::Optimal,
        u_star: u,
        lambda_star: lambda,
        active_set: active,
        objective,
        stationarity_residual: stat_res,
        complementarity_residual: compl,
        feasibility_violation: feas.max(T::zero()),
        objective_trace: trace,
        infeasibility_certificate: None,
        iterations,
    }
}

fn insert_sorted(v: &mut Vec<usize>, x: usize) {
    match v.binary_search(&x) {
        Ok(_) => {}
        Err(pos) => v.insert(pos, x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::load_problem;
    use crate::model::ParametricQp;
    use crate::solver::evaluate_controller;

    fn robinson() -> ParametricQp<f64> {
        load_problem(include_str!("../../specs/robinson.spec")).unwrap()
    }

    fn opts() -> SolveOptions<f64> {
        SolveOptions::default()
    }

    #[test]
    fn unconstrained_returns_nominal() {
        // min 1/2||u - k||^2 with no rows: u* = k
        let k = vec![0.3, -1.2, 4.0];
        let inst = QpInstance::new(
            Mat::identity(3),
            k.iter().map(|v| -v).collect(),
            Mat::zeros(0, 3),
            vec![],
        )
        .unwrap();
        let sol = solve_qp(&inst, &opts()).unwrap();
        assert!(sol.is_optimal());
        for (a, b) in sol.u_star.iter().zip(&k) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn robinson_origin_solution() {
        // frozen from the feasible-grid search oracle (resolution 0.05 over
        // [-2,2]^4): u* = (0, 0, 1, 0), objective 1/2. Rows 1+2 force
        // u3 >= 1, and u = e3 attains it.
        let sol = evaluate_controller(&robinson(), &[0.0, 0.0], &opts()).unwrap();
        assert!(sol.is_optimal());
        let expect = [0.0, 0.0, 1.0, 0.0];
        for (a, b) in sol.u_star.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-9, "{:?}", sol.u_star);
        }
        assert!((sol.objective - 0.5).abs() < 1e-9);
        assert_eq!(sol.active_set, vec![0, 1, 2, 3]);
        assert!(sol.stationarity_residual <= 1e-8);
        assert!(sol.feasibility_violation <= 1e-8);
        assert!(sol.complementarity_residual <= 1e-8);
        assert!(sol.lambda_star.iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn robinson_fourth_component_examples() {
        // closed-form values of u4 on each branch
        let qp = robinson();
        let cases = [
            ([1.0, 1.0], 2.0 / 3.0), // interior branch x1(x2+1)/(x1^2+2)
            ([0.7, 0.0], 0.0),       // x2 <= 0 branch along the x1-axis
            ([0.4, 0.08], 0.2),      // parabola branch x2/x1
        ];
        for (x, want) in cases {
            let sol = evaluate_controller(&qp, &x, &opts()).unwrap();
            assert!(sol.is_optimal());
            assert!(
                (sol.u_star[3] - want).abs() < 1e-8,
                "x={x:?} got {} want {want}",
                sol.u_star[3]
            );
        }
    }

    #[test]
    fn discontinuous_program_jumps_across_zero() {
        let qp: ParametricQp<f64> =
            load_problem(include_str!("../../specs/discontinuous_sc.spec")).unwrap();
        let left = evaluate_controller(&qp, &[-1.0], &opts()).unwrap();
        let right = evaluate_controller(&qp, &[1.0], &opts()).unwrap();
        assert!((left.u_star[0] - 2.0).abs() < 1e-9);
        assert!(right.u_star[0].abs() < 1e-9);
    }

    #[test]
    fn infeasible_rows_yield_certificate() {
        // u <= -1 and u >= 1
        let inst = QpInstance::new(
            Mat::identity(1),
            vec![0.0],
            Mat::from_rows(&[vec![-1.0], vec![1.0]]),
            vec![1.0, 1.0],
        )
        .unwrap();
        let sol = solve_qp(&inst, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert!(sol.feasibility_violation > 0.5);
        let y = sol.infeasibility_certificate.expect("Farkas ray");
        // A^T y = 0 and b^T y = 1
        assert!((y[0] - y[1]).abs() < 1e-9);
        assert!((y[0] + y[1] - 1.0).abs() < 1e-9);
        assert!(y.iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn unbounded_when_q_singular_along_feasible_recession() {
        // min -u2 direction: Q = diag(1, 0), c = (0, -1), u2 >= 0
        let inst = QpInstance::new(
            Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]),
            vec![0.0, -1.0],
            Mat::from_rows(&[vec![0.0, 1.0]]),
            vec![0.0],
        )
        .unwrap();
        let sol = solve_qp(&inst, &opts()).unwrap();
        assert_eq!(sol.status, SolveStatus::Unbounded);
    }

    #[test]
    fn indefinite_q_rejected_with_report() {
        let inst = QpInstance::new(
            Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, -2.0]]),
            vec![0.0, 0.0],
            Mat::zeros(0, 2),
            vec![],
        )
        .unwrap();
        match solve_qp(&inst, &opts()) {
            Err(SolverError::Indefinite { min_eig }) => assert!((min_eig + 2.0).abs() < 1e-9),
            other => panic!("expected indefinite error, got {other:?}"),
        }
    }

    #[test]
    fn objective_trace_is_non_increasing() {
        let qp = robinson();
        for x in [[0.0, 0.0], [1.0, 1.0], [-0.3, 0.7], [0.2, -0.9]] {
            let sol = evaluate_controller(&qp, &x, &opts()).unwrap();
            for w in sol.objective_trace.windows(2) {
                assert!(
                    w[1] <= w[0] + 1e-10,
                    "trace not monotone: {:?}",
                    sol.objective_trace
                );
            }
        }
    }

    #[test]
    fn evaluate_controller_checks_state_dimension() {
        assert!(matches!(
            evaluate_controller(&robinson(), &[0.0], &opts()),
            Err(SolverError::Dimension(_))
        ));
    }

    #[test]
    fn psd_failure_reports_state() {
        let mut qp = ParametricQp::<f64>::new("sign", 1, 1, 0);
        // Q(x) = x: indefinite for x < 0
        qp.set_q(0, 0, crate::model::PolyExpr::var(1, 0)).unwrap();
        match evaluate_controller(&qp, &[-2.0], &opts()) {
            Err(SolverError::IndefiniteAt { x, .. }) => assert_eq!(x, vec![-2.0]),
            other => panic!("expected indefinite-at error, got {other:?}"),
        }
    }
}
