//! Independent reference implementations used as test oracles.
//!
//! Nothing here shares code with the solver under test: the QP reference is
//! a cyclic projected dual iteration (Hildreth's method), the second opinion
//! for specific points is a pruned dense grid search over the feasible set,
//! and derivatives are checked against plain central differences. These
//! routines trade speed for being obviously correct.

use optctl::linalg::Mat;
use optctl::solver::QpInstance;

use rand::Rng;

// local dense Cholesky so the oracle shares no numeric code with the
// solver under test (the shared Mat type is plain storage)
fn chol_lower(q: &Mat<f64>) -> Option<Vec<Vec<f64>>> {
    let n = q.rows;
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = q[(i, j)];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 1e-12 {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

fn chol_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut y = b.to_vec();
    for i in 0..n {
        for j in 0..i {
            y[i] -= l[i][j] * y[j];
        }
        y[i] /= l[i][i];
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            y[i] -= l[j][i] * y[j];
        }
        y[i] /= l[i][i];
    }
    y
}

fn objective_of(inst: &QpInstance<f64>, u: &[f64]) -> f64 {
    let m = u.len();
    let mut quad = 0.0;
    for i in 0..m {
        for j in 0..m {
            quad += u[i] * inst.q[(i, j)] * u[j];
        }
    }
    0.5 * quad + dotf(&inst.c, u)
}

/// Result of the reference QP solve.
#[derive(Debug, Clone)]
pub struct RefSolution {
    pub u: Vec<f64>,
    pub lambda: Vec<f64>,
    pub sweeps: usize,
}

/// Projected dual coordinate iteration (Hildreth) for
/// `min 1/2 u^T Q u + c^T u  s.t.  A u >= b` with `Q` positive definite.
///
/// Each sweep performs one pass of coordinate-wise projected minimization of
/// the dual, which only ever needs the trivial projection `max(0, .)`.
/// Returns `None` when the iteration fails to reach the tolerance (e.g. the
/// primal is infeasible, which drives the dual to infinity).
pub fn hildreth_qp(inst: &QpInstance<f64>, tol: f64, max_sweeps: usize) -> Option<RefSolution> {
    let m = inst.input_dim();
    let p = inst.num_constraints();
    let l = chol_lower(&inst.q)?;
    let qinv = |v: &[f64]| chol_solve(&l, v);

    // dual data: minimize 1/2 lam^T P lam + d^T lam over lam >= 0 with
    // P = A Q^-1 A^T and d = -(A Q^-1 c + b)
    let qinv_at: Vec<Vec<f64>> = (0..p).map(|i| qinv(inst.a.row(i))).collect();
    let mut pm = Mat::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            pm[(i, j)] = dotf(inst.a.row(i), &qinv_at[j]);
        }
    }
    let qinv_c = qinv(&inst.c);
    let d: Vec<f64> = (0..p)
        .map(|i| -(dotf(inst.a.row(i), &qinv_c) + inst.b[i]))
        .collect();

    // primal recovery u = Q^-1 (A^T lam - c)
    let primal = |lam: &[f64]| -> Vec<f64> {
        let mut rhs = vec![0.0; m];
        for i in 0..p {
            for j in 0..m {
                rhs[j] += inst.a[(i, j)] * lam[i];
            }
        }
        for j in 0..m {
            rhs[j] -= inst.c[j];
        }
        qinv(&rhs)
    };
    let violation = |u: &[f64]| -> f64 {
        (0..p).fold(0.0f64, |v, i| v.max(inst.b[i] - dotf(inst.a.row(i), u)))
    };

    let mut lam = vec![0.0; p];
    let mut sweeps = 0;
    let mut converged = false;
    let b_scale = 1.0 + inst.b.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    for sweep in 0..max_sweeps {
        sweeps = sweep + 1;
        for i in 0..p {
            if pm[(i, i)] <= 0.0 {
                continue; // zero row: the dual cannot act on it
            }
            let grad = dotf(pm.row(i), &lam) + d[i];
            lam[i] = (lam[i] - grad / pm[(i, i)]).max(0.0);
        }
        // stationarity holds by construction for u(lam) and lam >= 0 by the
        // projection, so the pair is optimal exactly when it is feasible and
        // complementary; testing the KKT system cannot stop on a stall
        if sweep % 8 == 7 || sweep + 1 == max_sweeps {
            let u = primal(&lam);
            if violation(&u) > tol.max(1e-10) * b_scale {
                continue;
            }
            let comp_ok = (0..p).all(|i| {
                let slack = dotf(inst.a.row(i), &u) - inst.b[i];
                (lam[i] * slack).abs() <= tol.max(1e-10) * (1.0 + lam[i]) * b_scale
            });
            if comp_ok {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return None;
    }
    let u = primal(&lam);
    Some(RefSolution {
        u,
        lambda: lam,
        sweeps,
    })
}

fn dotf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pruned dense grid search for
/// `min 1/2 u^T Q u + c^T u  s.t.  A u >= b` over a uniform grid on
/// `[lo, hi]^m`. Returns the best feasible grid point, if any.
pub fn grid_search_qp(
    inst: &QpInstance<f64>,
    lo: f64,
    hi: f64,
    steps_per_axis: usize,
) -> Option<(Vec<f64>, f64)> {
    assert!(steps_per_axis >= 2);
    let m = inst.input_dim();
    let delta = (hi - lo) / (steps_per_axis - 1) as f64;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut u = vec![lo; m];
    let mut idx = vec![0usize; m];
    loop {
        let obj = objective_of(inst, &u);
        let improves = best.as_ref().is_none_or(|(_, b)| obj < *b);
        if improves && feasible(inst, &u) {
            best = Some((u.clone(), obj));
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == m {
                return best;
            }
            idx[k] += 1;
            if idx[k] < steps_per_axis {
                u[k] = lo + delta * idx[k] as f64;
                break;
            }
            idx[k] = 0;
            u[k] = lo;
            k += 1;
        }
    }
}

fn feasible(inst: &QpInstance<f64>, u: &[f64]) -> bool {
    let tol = 1e-12;
    (0..inst.num_constraints()).all(|i| {
        let row = inst.a.row(i);
        dotf(row, u) - inst.b[i] >= -tol
    })
}

/// Central difference of a scalar function along coordinate `i`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += h;
    xm[i] -= h;
    (f(&xp) - f(&xm)) / (2.0 * h)
}

/// A random strongly convex instance `Q = M^T M + I` with `p` rows made
/// feasible by construction: `b = A u0 - slack` for a random interior point
/// `u0` and nonnegative slacks (a third of them zero, so degenerate active
/// sets show up too).
pub fn random_strongly_convex_qp(
    rng: &mut impl Rng,
    m_max: usize,
    p_max: usize,
) -> QpInstance<f64> {
    let m = rng.gen_range(1..=m_max);
    let p = rng.gen_range(0..=p_max);
    let mut mm = Mat::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            mm[(i, j)] = rng.gen_range(-1.0..1.0);
        }
    }
    let mut q = Mat::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let mut s = 0.0;
            for k in 0..m {
                s += mm[(k, i)] * mm[(k, j)];
            }
            q[(i, j)] = s + if i == j { 1.0 } else { 0.0 };
        }
    }
    let c: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let u0: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut a = Mat::zeros(p, m);
    let mut b = vec![0.0; p];
    for i in 0..p {
        // resample rows that are nearly parallel to an earlier one: they
        // only ill-condition the comparison, not the geometry
        'row: for _attempt in 0..64 {
            let mut norm = 0.0;
            for j in 0..m {
                let v: f64 = rng.gen_range(-1.0..1.0);
                a[(i, j)] = v;
                norm += v * v;
            }
            let norm = norm.sqrt();
            if norm < 1e-2 {
                continue;
            }
            for j in 0..m {
                a[(i, j)] /= norm;
            }
            for k in 0..i {
                if dotf(a.row(i), a.row(k)).abs() > 0.95 {
                    continue 'row;
                }
            }
            break;
        }
        let slack = if rng.gen_bool(0.3) {
            0.0
        } else {
            rng.gen_range(0.1..1.0)
        };
        b[i] = dotf(a.row(i), &u0) - slack;
    }
    QpInstance::new(q, c, a, b).expect("constructed instance is well formed")
}
