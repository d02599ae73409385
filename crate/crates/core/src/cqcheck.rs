//! Constraint qualifications and conditions at a state, with numerical
//! certificates.
//!
//! Verdicts drive downstream regularity claims, so borderline numerics
//! report `Inconclusive` rather than guessing: LICQ and SCS switch to
//! inconclusive within a factor 10 of their decision tolerance, and the
//! Slater check runs two independent methods that must agree.

use crate::linalg::{svd, Mat};
use crate::model::ParametricQp;
use crate::regprobe::{boundedness_sweep, ControllerMap, Verdict};
use crate::sample::ball_points;
use crate::scalar::{norm_inf, Real};
use crate::solver::{solve_lp, KktSolution, LpSense, LpStatus, SolveOptions, SolverError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    Licq,
    Mfcq,
    Slater,
    Scs,
    Cr,
    LcfBounded,
}

impl Condition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::Licq => "LICQ",
            Condition::Mfcq => "MFCQ",
            Condition::Slater => "SLATER",
            Condition::Scs => "SCS",
            Condition::Cr => "CR",
            Condition::LcfBounded => "LCF_BOUNDED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CqVerdict {
    Holds,
    Fails,
    Inconclusive,
}

impl CqVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            CqVerdict::Holds => "holds",
            CqVerdict::Fails => "fails",
            CqVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// Verdict for one condition plus the certificate that produced it.
#[derive(Debug, Clone)]
pub struct CqEntry<T> {
    pub condition: Condition,
    pub verdict: CqVerdict,
    /// Scalar certificate: LP margin, singular-value ratio, sup ratio.
    pub margin: Option<T>,
    /// Vector certificate: strict-descent direction, strictly feasible
    /// point, or witnessing sample.
    pub witness: Option<Vec<T>>,
    /// Witnessing constraint subset (constant-rank check).
    pub subset: Option<Vec<usize>>,
    /// Per-radius sup data (boundedness sweep).
    pub sweep: Vec<(T, T)>,
    pub detail: String,
}

impl<T> CqEntry<T> {
    fn new(condition: Condition, verdict: CqVerdict, detail: String) -> Self {
        CqEntry {
            condition,
            verdict,
            margin: None,
            witness: None,
            subset: None,
            sweep: Vec::new(),
            detail,
        }
    }
}

#[derive(Debug)]
pub enum CqError {
    /// Subset enumeration is exponential; refuse large constraint counts.
    TooManyConstraints {
        p: usize,
    },
    Solver(SolverError),
    /// The controller could not be evaluated at the state.
    NotSolvable(String),
}

impl std::fmt::Display for CqError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CqError::TooManyConstraints { p } => {
                write!(f, "constant-rank enumeration rejected: p = {p} exceeds 12")
            }
            CqError::Solver(e) => write!(f, "{e}"),
            CqError::NotSolvable(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CqError {}

impl From<SolverError> for CqError {
    fn from(e: SolverError) -> Self {
        CqError::Solver(e)
    }
}

/// Tolerances and sampling parameters for the checks.
#[derive(Debug, Clone)]
pub struct CqOptions<T> {
    /// Activity tolerance, relative to `1 + ||b(x)||_inf`.
    pub act_tol: T,
    pub rank_tol: T,
    pub margin_tol: T,
    pub slater_tol: T,
    pub scs_tol: T,
    pub cr_samples: usize,
    pub cr_radius: T,
    pub cr_seed: u64,
    pub lcf_radii: Vec<T>,
    pub lcf_samples: usize,
    pub lcf_seed: u64,
    pub divergence_factor: T,
    pub solve: SolveOptions<T>,
}

impl<T: Real> Default for CqOptions<T> {
    fn default() -> Self {
        CqOptions {
            act_tol: T::of(1e-7),
            rank_tol: T::of(1e-8),
            margin_tol: T::of(1e-8),
            slater_tol: T::of(1e-8),
            scs_tol: T::of(1e-8),
            cr_samples: 64,
            cr_radius: T::of(1e-3),
            cr_seed: 0,
            lcf_radii: vec![T::of(1e-1), T::of(1e-2), T::of(1e-3), T::of(1e-4)],
            lcf_samples: 32,
            lcf_seed: 0,
            divergence_factor: T::of(1e3),
            solve: SolveOptions::default(),
        }
    }
}

/// Report over all six conditions at one state.
#[derive(Debug, Clone)]
pub struct CqReport<T> {
    pub x: Vec<T>,
    pub entries: Vec<CqEntry<T>>,
}

impl<T: Real> CqReport<T> {
    pub fn get(&self, c: Condition) -> &CqEntry<T> {
        self.entries
            .iter()
            .find(|e| e.condition == c)
            .expect("all conditions present")
    }

    /// Run every check at `x`, given the KKT solution there. Enforces the
    /// report-level consistency rule: with affine-in-u constraints, strict
    /// feasibility implies a strict-descent direction exists, so a Slater
    /// `holds` can never stand next to an MFCQ `fails` - such a pair is
    /// downgraded to inconclusive.
    pub fn analyze(
        program: &ParametricQp<T>,
        x: &[T],
        sol: &KktSolution<T>,
        opts: &CqOptions<T>,
    ) -> Result<Self, CqError> {
        let licq = check_licq(program, x, sol, opts.rank_tol)?;
        let mut mfcq = check_mfcq(program, x, sol, opts.margin_tol)?;
        let slater = check_slater(program, x, opts.slater_tol)?;
        let scs = check_scs(sol, opts.scs_tol);
        let cr = check_cr(
            program,
            x,
            sol,
            opts.cr_samples,
            opts.cr_radius,
            opts.rank_tol,
            opts.cr_seed,
        )?;
        let lcf = check_lcf_bounded(program, x, &opts.lcf_radii, opts.lcf_samples, opts)?;

        if slater.verdict == CqVerdict::Holds && mfcq.verdict == CqVerdict::Fails {
            mfcq.verdict = CqVerdict::Inconclusive;
            mfcq.detail.push_str(
                "; downgraded: strict feasibility holds at this state, which implies a strict-descent direction for affine constraints",
            );
        }

        Ok(CqReport {
            x: x.to_vec(),
            entries: vec![licq, mfcq, slater, scs, cr, lcf],
        })
    }
}

fn active_gradient_rows<T: Real>(
    program: &ParametricQp<T>,
    x: &[T],
    active: &[usize],
) -> Result<Mat<T>, CqError> {
    let a = program.a_at(x).map_err(SolverError::from)?;
    Ok(a.select_rows(active))
}

/// Linear independence of the active constraint gradients, decided by the
/// singular values of the active rows of A(x).
pub fn check_licq<T: Real>(
    program: &ParametricQp<T>,
    x: &[T],
    sol: &KktSolution<T>,
    rank_tol: T,
) -> Result<CqEntry<T>, CqError> {
    let active = &sol.active_set;
    if active.is_empty() {
        let mut e = CqEntry::new(
            Condition::Licq,
            CqVerdict::Holds,
            "no active constraints: the empty gradient family is independent".into(),
        );
        e.margin = Some(T::one());
        return Ok(e);
    }
    let rows = active_gradient_rows(program, x, active)?;
    let sigma = svd(&rows).sigma;
    let smax = sigma[0];
    let smin = sigma[sigma.len() - 1];
    if smax == T::zero() {
        let mut e = CqEntry::new(
            Condition::Licq,
            CqVerdict::Fails,
            format!("all {} active gradients vanish", active.len()),
        );
        e.margin = Some(T::zero());
        return Ok(e);
    }
    let ratio = smin / smax;
    // the verdict flips at rank_tol; within a factor 10 of it, refuse to call
    let near = ratio > rank_tol / T::of(10.0) && ratio < rank_tol * T::of(10.0);
    let rank = sigma.iter().filter(|&&s| s > rank_tol * smax).count();
    let verdict = if near {
        CqVerdict::Inconclusive
    } else if rank == active.len() {
        CqVerdict::Holds
    } else {
        CqVerdict::Fails
    };
    let mut e = CqEntry::new(
        Condition::Licq,
        verdict,
        format!(
            "rank {} of {} active gradient rows (sigma_min/sigma_max = {:.3e})",
            rank,
            active.len(),
            ratio
        ),
    );
    e.margin = Some(ratio);
    Ok(e)
}

/// Strict-descent direction for the active constraints: maximize `t` over
/// `A_i(x) z >= t`, `|z_j| <= 1`. Holds when the optimum exceeds the margin
/// tolerance; the witness is `z*`.
pub fn check_mfcq<T: Real>(
    program: &ParametricQp<T>,
    x: &[T],
    sol: &KktSolution<T>,
    margin_tol: T,
) -> Result<CqEntry<T>, CqError> {
    let active = &sol.active_set;
    if active.is_empty() {
        let mut e = CqEntry::new(
            Condition::Mfcq,
            CqVerdict::Holds,
            "no active constraints: any direction works".into(),
        );
        e.margin = Some(T::infinity());
        return Ok(e);
    }
    let rows = active_gradient_rows(program, x, active)?;
    let m = rows.cols;
    let vars = m + 1;
    let mut ineq_rows: Vec<Vec<T>> = Vec::new();
    let mut ineq_rhs: Vec<T> = Vec::new();
    for i in 0..rows.rows {
        let mut r = vec![T::zero(); vars];
        r[..m].copy_from_slice(rows.row(i));
        r[m] = -T::one();
        ineq_rows.push(r);
        ineq_rhs.push(T::zero());
    }
    for j in 0..m {
        let mut lo = vec![T::zero(); vars];
        lo[j] = T::one();
        ineq_rows.push(lo);
        ineq_rhs.push(-T::one());
        let mut hi = vec![T::zero(); vars];
        hi[j] = -T::one();
        ineq_rows.push(hi);
        ineq_rhs.push(-T::one());
    }
    let mut objective = vec![T::zero(); vars];
    objective[m] = T::one();
    let lp = solve_lp(
        &Mat::zeros(0, vars),
        &[],
        &Mat::from_rows(&ineq_rows),
        &ineq_rhs,
        &objective,
        LpSense::Maximize,
    )?;
    if lp.status != LpStatus::Optimal {
        return Err(CqError::NotSolvable(format!(
            "MFCQ screen LP ended with {:?}",
            lp.status
        )));
    }
    let t = lp.value;
    let z = lp.optimum[..m].to_vec();
    let verdict = if t > margin_tol {
        CqVerdict::Holds
    } else {
        CqVerdict::Fails
    };
    let mut e = CqEntry::new(
        Condition::Mfcq,
        verdict,
        format!("best uniform descent margin t* = {t:.6e} over the unit box"),
    );
    e.margin = Some(t);
    e.witness = Some(z);
    Ok(e)
}

/// Strict feasibility at `x`, decided twice: a slack-minimization LP
/// (`min t` s.t. `A(x) u + t >= b(x)`) and the normalized dual-cone
/// feasibility test. The two must agree; disagreement is inconclusive.
pub fn check_slater<T: Real>(
    program: &ParametricQp<T>,
    x: &[T],
    slater_tol: T,
) -> Result<CqEntry<T>, CqError> {
    let p = program.num_constraints();
    if p == 0 {
        let mut e = CqEntry::new(
            Condition::Slater,
            CqVerdict::Holds,
            "no constraints: strict feasibility is vacuous".into(),
        );
        e.margin = Some(T::neg_infinity());
        return Ok(e);
    }
    let a = program.a_at(x).map_err(SolverError::from)?;
    let b = program.b_at(x).map_err(SolverError::from)?;
    let m = program.input_dim();

    // primary: minimize the uniform slack t; bounded below artificially so
    // the LP always terminates (any t* below -slater_tol already decides)
    let t_floor = T::of(2.0) * (T::one() + norm_inf(&b));
    let vars = m + 1;
    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut rhs: Vec<T> = Vec::new();
    for i in 0..p {
        let mut r = vec![T::zero(); vars];
        r[..m].copy_from_slice(a.row(i));
        r[m] = T::one();
        rows.push(r);
        rhs.push(b[i]);
    }
    let mut bound = vec![T::zero(); vars];
    bound[m] = T::one();
    rows.push(bound);
    rhs.push(-t_floor);
    let mut objective = vec![T::zero(); vars];
    objective[m] = T::one();
    let lp = solve_lp(
        &Mat::zeros(0, vars),
        &[],
        &Mat::from_rows(&rows),
        &rhs,
        &objective,
        LpSense::Minimize,
    )?;
    if lp.status != LpStatus::Optimal {
        return Err(CqError::NotSolvable(format!(
            "Slater slack LP ended with {:?}",
            lp.status
        )));
    }
    let primary_holds = lp.value < -slater_tol;
    let u_hat = lp.optimum[..m].to_vec();

    // cross-check: the normalized slice {mu >= 0, sum mu = 1,
    // sum mu_i g_i^0(x) = 0, sum mu_i g_i^1(x) = 0} is nonempty exactly when
    // strict feasibility fails (g^0 = -A row, g^1 = b)
    let mut eq_rows: Vec<Vec<T>> = Vec::new();
    let mut eq_rhs: Vec<T> = Vec::new();
    eq_rows.push(vec![T::one(); p]);
    eq_rhs.push(T::one());
    for j in 0..m {
        eq_rows.push((0..p).map(|i| -a[(i, j)]).collect());
        eq_rhs.push(T::zero());
    }
    eq_rows.push(b.clone());
    eq_rhs.push(T::zero());
    let zeros = vec![T::zero(); p];
    let cone = solve_lp(
        &Mat::from_rows(&eq_rows),
        &eq_rhs,
        &Mat::identity(p),
        &zeros,
        &zeros,
        LpSense::Minimize,
    )?;
    let cross_holds = cone.status == LpStatus::Infeasible;

    let verdict = match (primary_holds, cross_holds) {
        (true, true) => CqVerdict::Holds,
        (false, false) => CqVerdict::Fails,
        _ => CqVerdict::Inconclusive,
    };
    let mut e = CqEntry::new(
        Condition::Slater,
        verdict,
        match verdict {
            CqVerdict::Holds => format!("slack LP t* = {:.6e}; dual-cone slice empty", lp.value),
            CqVerdict::Fails => format!(
                "slack LP t* = {:.6e}; dual-cone slice nonempty (certificate mu attached)",
                lp.value
            ),
            CqVerdict::Inconclusive => format!(
                "methods disagree: slack LP t* = {:.6e} vs dual-cone {}",
                lp.value,
                if cross_holds { "empty" } else { "nonempty" }
            ),
        },
    );
    e.margin = Some(lp.value);
    e.witness = Some(if verdict == CqVerdict::Fails {
        cone.optimum
    } else {
        u_hat
    });
    Ok(e)
}

/// Strict complementary slackness: no constraint both active and with a
/// zero multiplier. Reports inconclusive when the smallest active
/// multiplier sits within a factor 10 of the tolerance.
pub fn check_scs<T: Real>(sol: &KktSolution<T>, scs_tol: T) -> CqEntry<T> {
    if sol.active_set.is_empty() {
        let mut e = CqEntry::new(
            Condition::Scs,
            CqVerdict::Holds,
            "no active constraints: strict complementarity is vacuous".into(),
        );
        e.margin = Some(T::infinity());
        return e;
    }
    let mut min_lambda = T::infinity();
    let mut offender = None;
    for &i in &sol.active_set {
        let l = sol.lambda_star[i];
        if l < min_lambda {
            min_lambda = l;
            offender = Some(i);
        }
    }
    let verdict = if min_lambda <= scs_tol {
        CqVerdict::Fails
    } else if min_lambda <= scs_tol * T::of(10.0) {
        CqVerdict::Inconclusive
    } else {
        CqVerdict::Holds
    };
    let mut e = CqEntry::new(
        Condition::Scs,
        verdict,
        match verdict {
            CqVerdict::Fails => format!(
                "constraint {} is active with multiplier {:.3e}",
                offender.unwrap() + 1,
                min_lambda
            ),
            _ => format!("smallest active multiplier {min_lambda:.3e}"),
        },
    );
    e.margin = Some(min_lambda);
    e
}

/// Constant rank: every subset of the active gradient family keeps its rank
/// on sampled points around `x` (the center is always included). Fails with
/// the first witnessing subset in enumeration order.
pub fn check_cr<T: Real>(
    program: &ParametricQp<T>,
    x: &[T],
    sol: &KktSolution<T>,
    num_samples: usize,
    radius: T,
    rank_tol: T,
    seed: u64,
) -> Result<CqEntry<T>, CqError> {
    let p = program.num_constraints();
    if p > 12 {
        return Err(CqError::TooManyConstraints { p });
    }
    let active = &sol.active_set;
    if active.is_empty() {
        let mut e = CqEntry::new(
            Condition::Cr,
            CqVerdict::Holds,
            "no active constraints: nothing to keep constant".into(),
        );
        e.margin = Some(T::one());
        return Ok(e);
    }
    let samples = ball_points(x, radius, num_samples, seed);
    let k = active.len();
    for mask in 1u32..(1u32 << k) {
        let subset: Vec<usize> = (0..k)
            .filter(|&j| mask & (1 << j) != 0)
            .map(|j| active[j])
            .collect();
        let rank_at = |y: &[T]| -> Result<usize, CqError> {
            let rows = active_gradient_rows(program, y, &subset)?;
            Ok(crate::linalg::rank(&rows, rank_tol))
        };
        let r0 = rank_at(x)?;
        for y in &samples {
            let ry = rank_at(y)?;
            if ry != r0 {
                let mut e = CqEntry::new(
                    Condition::Cr,
                    CqVerdict::Fails,
                    format!(
                        "subset {:?} has rank {} at the center but {} at a sampled point (radius {:.1e})",
                        subset.iter().map(|i| i + 1).collect::<Vec<_>>(),
                        r0,
                        ry,
                        radius
                    ),
                );
                e.subset = Some(subset);
                e.witness = Some(y.clone());
                return Ok(e);
            }
        }
    }
    let mut e = CqEntry::new(
        Condition::Cr,
        CqVerdict::Holds,
        format!(
            "all {} subsets of the active family keep constant rank over {} samples (radius {:.1e})",
            (1u32 << k) - 1,
            num_samples,
            radius
        ),
    );
    e.margin = Some(T::one());
    Ok(e)
}

/// Heuristic boundedness screen for local compact feasibility: sweeps
/// `sup ||u*(y)||` over shrinking balls. A stabilizing sup is consistent
/// with a compact feasible selection nearby; growth past the divergence
/// factor refutes it. Always labeled a heuristic: finitely many samples
/// cannot certify the property.
pub fn check_lcf_bounded<T: Real>(
    program: &ParametricQp<T>,
    x: &[T],
    radii: &[T],
    grid_per_radius: usize,
    opts: &CqOptions<T>,
) -> Result<CqEntry<T>, CqError> {
    let map = ControllerMap::from_program(program.clone(), opts.solve);
    let est = boundedness_sweep(
        &map,
        x,
        radii,
        grid_per_radius,
        opts.lcf_seed,
        None,
        opts.divergence_factor,
    )
    .map_err(|e| CqError::NotSolvable(e.to_string()))?;
    let verdict = match est.verdict {
        Verdict::Consistent => CqVerdict::Holds,
        Verdict::Violated => CqVerdict::Fails,
    };
    let sup_max = est.sups.iter().fold(T::zero(), |m, &(_, s)| m.max(s));
    let mut e = CqEntry::new(
        Condition::LcfBounded,
        verdict,
        format!(
            "heuristic: sampled sup ||u*|| per radius {:?} -> {:?}; max {sup_max:.3e}; {} infeasible samples skipped",
            est.sups.iter().map(|&(r, _)| r.to_f64_lossy()).collect::<Vec<_>>(),
            est.sups.iter().map(|&(_, s)| s.to_f64_lossy()).collect::<Vec<_>>(),
            est.skipped_infeasible
        ),
    );
    e.margin = Some(sup_max);
    e.sweep = est.sups;
    Ok(e)
}

/// Regularity implications licensed by the verdicts, stated only when their
/// hypotheses were verified numerically. `strongly_convex` refers to the
/// smallest eigenvalue of Q(x) clearing the strict-convexity tolerance.
pub fn implication_summary<T: Real>(
    report: &CqReport<T>,
    strongly_convex: bool,
    input_dim: usize,
) -> Vec<String> {
    let holds = |c: Condition| report.get(c).verdict == CqVerdict::Holds;
    let mut out = Vec::new();
    if holds(Condition::Slater) && strongly_convex {
        out.push(
            "strict feasibility + strong convexity => point-Lipschitz on a neighborhood, Hoelder and directionally differentiable at the state"
                .to_string(),
        );
    }
    if holds(Condition::Slater) && input_dim == 1 {
        out.push(
            "strict feasibility with a scalar input => locally Lipschitz at the state".to_string(),
        );
    }
    if holds(Condition::Licq) {
        out.push(
            "LICQ => locally Lipschitz at the state (MFCQ and constant rank follow)".to_string(),
        );
    }
    if holds(Condition::Mfcq) && holds(Condition::Cr) {
        out.push("MFCQ + constant rank => locally Lipschitz at the state".to_string());
    }
    if holds(Condition::Mfcq) {
        out.push("MFCQ => continuous at the state".to_string());
    }
    if holds(Condition::Licq) && holds(Condition::Scs) {
        out.push(
            "LICQ + strict complementarity => continuously differentiable near the state"
                .to_string(),
        );
    }
    if holds(Condition::LcfBounded) {
        out.push(
            "bounded feasible selections nearby (heuristic) => locally bounded at the state"
                .to_string(),
        );
    }
    if report.get(Condition::Slater).verdict == CqVerdict::Fails {
        out.push(
            "strict feasibility fails: the optimizer may be discontinuous or unbounded at the state"
                .to_string(),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::get_gallery;
    use crate::solver::evaluate_controller;

    fn analyzed(name: &str, x: &[f64]) -> CqReport<f64> {
        let program = get_gallery::<f64>(name).unwrap().program.unwrap();
        let opts = CqOptions::default();
        let sol = evaluate_controller(&program, x, &opts.solve).unwrap();
        CqReport::analyze(&program, x, &sol, &opts).unwrap()
    }

    #[test]
    fn robinson_origin_certificates() {
        let r = analyzed("robinson", &[0.0, 0.0]);
        // active gradients have a zero fourth column: rank 3 of 4
        assert_eq!(r.get(Condition::Licq).verdict, CqVerdict::Fails);
        assert!(r.get(Condition::Licq).detail.contains("rank 3 of 4"));
        // z = (0,0,1,0) gives margin 1 on every active row
        let mfcq = r.get(Condition::Mfcq);
        assert_eq!(mfcq.verdict, CqVerdict::Holds);
        assert!((mfcq.margin.unwrap() - 1.0).abs() <= 1e-8);
        assert_eq!(r.get(Condition::Slater).verdict, CqVerdict::Holds);
        // the full active family loses rank only at x1 = 0, i.e. exactly at
        // the center; sampled points witness rank 4
        let cr = r.get(Condition::Cr);
        assert_eq!(cr.verdict, CqVerdict::Fails);
        assert_eq!(cr.subset.as_ref().unwrap(), &vec![0, 1, 2, 3]);
        assert_eq!(r.get(Condition::LcfBounded).verdict, CqVerdict::Holds);
    }

    #[test]
    fn single_nonzero_gradient_gives_licq() {
        let r = analyzed("scalar_qp_halfspace", &[1.0, 1.0]);
        // at (1,1): target 2 vs floor 1: constraint inactive -> vacuous
        assert_eq!(r.get(Condition::Licq).verdict, CqVerdict::Holds);
        assert_eq!(r.get(Condition::Mfcq).verdict, CqVerdict::Holds);
        // make it active: floor above target at (1.5, 1.5)
        let r = analyzed("scalar_qp_halfspace", &[1.5, 1.5]);
        assert_eq!(r.get(Condition::Licq).verdict, CqVerdict::Holds);
        assert_eq!(r.get(Condition::Cr).verdict, CqVerdict::Holds);
    }

    #[test]
    fn discontinuous_origin_fails_slater_and_mfcq() {
        let r = analyzed("discontinuous_sc", &[0.0]);
        let slater = r.get(Condition::Slater);
        assert_eq!(slater.verdict, CqVerdict::Fails);
        let mfcq = r.get(Condition::Mfcq);
        // gradient of the single active row vanishes: t* = 0
        assert_eq!(mfcq.verdict, CqVerdict::Fails);
        assert!(mfcq.margin.unwrap().abs() <= 1e-8);
        // away from zero strict feasibility returns
        let r = analyzed("discontinuous_sc", &[0.5]);
        assert_eq!(r.get(Condition::Slater).verdict, CqVerdict::Holds);
    }

    #[test]
    fn unbounded_example_fails_slater_at_corner() {
        let r = analyzed("unbounded_sc", &[1.0, 0.0]);
        assert_eq!(r.get(Condition::Slater).verdict, CqVerdict::Fails);
        // the heuristic boundedness screen sees the blow-up
        assert_eq!(r.get(Condition::LcfBounded).verdict, CqVerdict::Fails);
        assert!(r.get(Condition::LcfBounded).detail.contains("heuristic"));
    }

    #[test]
    fn robinson_slater_holds_off_origin_and_methods_agree() {
        for x in [[0.3, -0.8], [-1.0, 0.5], [2.0, 2.0]] {
            let r = analyzed("robinson", &x);
            assert_eq!(r.get(Condition::Slater).verdict, CqVerdict::Holds);
        }
    }

    #[test]
    fn scs_detects_zero_multiplier_on_active_row() {
        // active constraint with lambda = 0: u* at a constraint touching the
        // unconstrained optimum. min 1/2 u^2 s.t. u >= 0: u* = 0, lambda = 0.
        let mut program = ParametricQp::<f64>::new("touch", 1, 1, 1);
        program
            .set_q(0, 0, crate::model::PolyExpr::constant(1, 1.0))
            .unwrap();
        program
            .set_a(0, 0, crate::model::PolyExpr::constant(1, 1.0))
            .unwrap();
        let sol = evaluate_controller(&program, &[0.0], &SolveOptions::default()).unwrap();
        let e = check_scs(&sol, 1e-8);
        assert_eq!(e.verdict, CqVerdict::Fails);
    }

    #[test]
    fn scs_holds_with_strong_multipliers() {
        // min 1/2 u^2 - 2u s.t. -u >= -1 (u <= 1): u* = 1, lambda = 1
        let mut program = ParametricQp::<f64>::new("bind", 1, 1, 1);
        program
            .set_q(0, 0, crate::model::PolyExpr::constant(1, 1.0))
            .unwrap();
        program
            .set_c(0, crate::model::PolyExpr::constant(1, -2.0))
            .unwrap();
        program
            .set_a(0, 0, crate::model::PolyExpr::constant(1, -1.0))
            .unwrap();
        program
            .set_b(0, crate::model::PolyExpr::constant(1, -1.0))
            .unwrap();
        let sol = evaluate_controller(&program, &[0.0], &SolveOptions::default()).unwrap();
        let e = check_scs(&sol, 1e-8);
        assert_eq!(e.verdict, CqVerdict::Holds);
        assert!((e.margin.unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn scs_ignores_inactive_rows_with_zero_multiplier() {
        // robinson at (0, -1): row 4 is inactive with lambda_4 = 0, which is
        // complementarity, not an SCS violation. (SCS still fails here, but
        // through row 3: active with a zero multiplier.)
        let program = get_gallery::<f64>("robinson").unwrap().program.unwrap();
        let sol = evaluate_controller(&program, &[0.0, -1.0], &SolveOptions::default()).unwrap();
        assert!((sol.u_star[3]).abs() < 1e-9); // closed form: u4 = 0 here
        assert!(!sol.active_set.contains(&3));
        assert!(sol.lambda_star[3].abs() < 1e-12);
        let e = check_scs(&sol, 1e-8);
        assert_eq!(e.verdict, CqVerdict::Fails);
        assert!(
            e.detail.contains("constraint 3"),
            "offender mislabeled: {}",
            e.detail
        );
        assert!(!e.detail.contains("constraint 4"));
    }

    #[test]
    fn licq_near_threshold_is_inconclusive() {
        // two active rows at angle ~1e-8: the singular-value ratio lands in
        // the factor-10 band around rank_tol, so the checker refuses to call
        let mut program = ParametricQp::<f64>::new("nearly", 1, 2, 2);
        for i in 0..2 {
            program
                .set_q(i, i, crate::model::PolyExpr::constant(1, 1.0))
                .unwrap();
        }
        program
            .set_a(0, 0, crate::model::PolyExpr::constant(1, 1.0))
            .unwrap();
        program
            .set_a(1, 0, crate::model::PolyExpr::constant(1, 1.0))
            .unwrap();
        program
            .set_a(1, 1, crate::model::PolyExpr::constant(1, 2e-8))
            .unwrap();
        let sol = evaluate_controller(&program, &[0.0], &SolveOptions::default()).unwrap();
        assert_eq!(sol.active_set, vec![0, 1]);
        let e = check_licq(&program, &[0.0], &sol, 1e-8).unwrap();
        assert_eq!(e.verdict, CqVerdict::Inconclusive);
    }

    #[test]
    fn cr_constant_matrix_always_holds() {
        // scalar_qp_box has constant gradient rows (+1/-1)
        let r = analyzed("scalar_qp_box", &[0.7]);
        assert_eq!(r.get(Condition::Cr).verdict, CqVerdict::Holds);
    }

    #[test]
    fn cr_subset_of_robinson_origin_passes_alone() {
        // subset {4} has gradient (1, 0, 1, x1): rank 1 for every x
        let program = get_gallery::<f64>("robinson").unwrap().program.unwrap();
        let opts = CqOptions::default();
        let sol = evaluate_controller(&program, &[0.0, 0.0], &opts.solve).unwrap();
        let e = check_cr(&program, &[0.0, 0.0], &sol, 64, 1e-3, 1e-8, 0).unwrap();
        // the failing subset is the full family, not {4}
        assert_eq!(e.verdict, CqVerdict::Fails);
        assert_eq!(e.subset.as_ref().unwrap().len(), 4);
    }

    #[test]
    fn lcf_heuristic_verdicts_across_gallery() {
        // bounded-but-discontinuous map: sup stabilizes at 2
        let r = analyzed("discontinuous_sc", &[0.0]);
        let e = r.get(Condition::LcfBounded);
        assert_eq!(e.verdict, CqVerdict::Holds);
        assert!(e.margin.unwrap() <= 2.0 + 1e-9);
        // robinson near the origin: bounded by a small constant
        let r = analyzed("robinson", &[0.0, 0.0]);
        assert!(r.get(Condition::LcfBounded).margin.unwrap() <= 2.0);
    }

    #[test]
    fn rejects_large_subset_enumeration() {
        let program = ParametricQp::<f64>::new("big", 1, 1, 13);
        let sol = evaluate_controller(&program, &[0.0], &SolveOptions::default()).unwrap();
        assert!(matches!(
            check_cr(&program, &[0.0], &sol, 4, 1e-3, 1e-8, 0),
            Err(CqError::TooManyConstraints { p: 13 })
        ));
    }

    #[test]
    fn implication_lines_match_verdicts() {
        let r = analyzed("robinson", &[0.0, 0.0]);
        let lines = implication_summary(&r, true, 4);
        assert!(lines.iter().any(|l| l.contains("point-Lipschitz")));
        assert!(!lines.iter().any(|l| l.contains("LICQ =>")));
        let r = analyzed("discontinuous_sc", &[0.0]);
        let lines = implication_summary(&r, true, 1);
        assert!(lines.iter().any(|l| l.contains("may be discontinuous")));
    }
}
