//! Sampling probes for the regularity class of a controller map.
//!
//! Each probe evaluates the map on a deterministic, seed-indexed sample set
//! and reports whether the data is *consistent with* or *violates* a stated
//! hypothesis. Finite sampling refutes; it never proves, and the verdicts
//! are worded accordingly.

use std::sync::Arc;

use crate::sample::ball_points;
use crate::scalar::{norm2, vsub, Real};
use crate::solver::{evaluate_controller, SolveOptions, SolveStatus, SolverError};

/// Default radius ladder for shrinking-ball sweeps.
pub const DEFAULT_RADII: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
/// Sup-quotient growth beyond this factor across the ladder reads as
/// divergence for the point-Lipschitz probe.
pub const GROWTH_CAP: f64 = 1e2;
/// Sup-norm growth beyond this factor reads as local unboundedness.
pub const DIVERGENCE_FACTOR: f64 = 1e3;

/// Evaluation failure of a controller map at a state.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    /// The frozen program has an empty feasible set at this state.
    Infeasible,
    Failed(String),
}

impl std::fmt::Display for EvalError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EvalError::Infeasible => write!(f, "program infeasible at this state"),
            EvalError::Failed(m) => write!(f, "evaluation failed: {m}"),
        }
    }
}

impl std::error::Error for EvalError {}

/// A deterministic map from states to inputs: a solver-backed parametric
/// program, a closed-form gallery controller, or any test closure.
#[derive(Clone)]
pub struct ControllerMap<T> {
    pub name: String,
    pub state_dim: usize,
    pub input_dim: usize,
    eval: Arc<dyn Fn(&[T]) -> Result<Vec<T>, EvalError> + Send + Sync>,
}

impl<T: Real> ControllerMap<T> {
    pub fn from_fn(
        name: impl Into<String>,
        state_dim: usize,
        input_dim: usize,
        f: impl Fn(&[T]) -> Result<Vec<T>, EvalError> + Send + Sync + 'static,
    ) -> Self {
        ControllerMap {
            name: name.into(),
            state_dim,
            input_dim,
            eval: Arc::new(f),
        }
    }

    /// Solver-backed map `x -> u*(x)`.
    pub fn from_program(program: crate::model::ParametricQp<T>, opts: SolveOptions<T>) -> Self {
        let name = program.name.clone();
        let (n, m) = (program.state_dim(), program.input_dim());
        ControllerMap::from_fn(name, n, m, move |x| {
            match evaluate_controller(&program, x, &opts) {
                Ok(sol) => match sol.status {
                    SolveStatus::Optimal => Ok(sol.u_star),
                    SolveStatus::Infeasible => Err(EvalError::Infeasible),
                    other => Err(EvalError::Failed(format!("solver status {other:?}"))),
                },
                Err(SolverError::Model(e)) => Err(EvalError::Failed(e.to_string())),
                Err(e) => Err(EvalError::Failed(e.to_string())),
            }
        })
    }

    pub fn eval(&self, x: &[T]) -> Result<Vec<T>, EvalError> {
        if x.len() != self.state_dim {
            return Err(EvalError::Failed(format!(
                "state has dimension {}, map expects {}",
                x.len(),
                self.state_dim
            )));
        }
        (self.eval)(x)
    }
}

impl<T> std::fmt::Debug for ControllerMap<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ControllerMap")
            .field("name", &self.name)
            .field("state_dim", &self.state_dim)
            .field("input_dim", &self.input_dim)
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProbeError {
    CoincidentPair {
        index: usize,
    },
    ZeroDirection,
    TooFewPoints,
    DegenerateFit,
    /// The map could not be evaluated at a required point (e.g. the center).
    Evaluation(EvalError),
    BadParams(String),
}

impl std::fmt::Display for ProbeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProbeError::CoincidentPair { index } => write!(f, "pair {index} has coincident points"),
            ProbeError::ZeroDirection => write!(f, "direction vector must be nonzero"),
            ProbeError::TooFewPoints => write!(f, "not enough sample points"),
            ProbeError::DegenerateFit => write!(f, "sample distances do not span a fit range"),
            ProbeError::Evaluation(e) => write!(f, "{e}"),
            ProbeError::BadParams(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for ProbeError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    LocalLipschitz,
    PointLipschitz,
    Holder,
    Directional,
    Jump,
    Boundedness,
}

impl ProbeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProbeKind::LocalLipschitz => "local_lipschitz",
            ProbeKind::PointLipschitz => "point_lipschitz",
            ProbeKind::Holder => "holder",
            ProbeKind::Directional => "directional",
            ProbeKind::Jump => "jump",
            ProbeKind::Boundedness => "boundedness",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Violated,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Consistent => "consistent",
            Verdict::Violated => "violated",
        }
    }
}

/// One evaluated sample: the ball radius it came from, its distance to the
/// probe center (or segment parameter), and the measured value (quotient,
/// norm, or difference, depending on the probe).
#[derive(Debug, Clone, Copy)]
pub struct SampleRecord<T> {
    pub radius: T,
    pub distance: T,
    pub value: T,
}

#[derive(Debug, Clone)]
pub struct JumpLocation<T> {
    /// Parameter in `[0,1]` along the scanned segment.
    pub parameter: T,
    pub position: Vec<T>,
    pub magnitude: T,
}

#[derive(Debug, Clone)]
pub struct HolderFit<T> {
    pub alpha: T,
    pub constant: T,
    /// RMS residual of the log-log fit.
    pub residual: T,
}

/// Outcome of a probe: the verdict against the stated hypothesis plus the
/// full sample record needed to reproduce it (`seed` + parameters).
#[derive(Debug, Clone)]
pub struct RegularityEstimate<T> {
    pub kind: ProbeKind,
    pub map_name: String,
    /// Probed component (0-based), or the full vector norm when `None`.
    pub component: Option<usize>,
    pub hypothesis: String,
    pub verdict: Verdict,
    pub seed: u64,
    pub lipschitz_constant: Option<T>,
    pub holder: Option<HolderFit<T>>,
    pub derivative: Option<Vec<T>>,
    pub jumps: Vec<JumpLocation<T>>,
    /// Per-radius suprema, in the radius order used by the sweep.
    pub sups: Vec<(T, T)>,
    pub samples: Vec<SampleRecord<T>>,
    pub skipped_infeasible: usize,
}

impl<T: Real> RegularityEstimate<T> {
    fn new(kind: ProbeKind, map_name: &str, component: Option<usize>, seed: u64) -> Self {
        RegularityEstimate {
            kind,
            map_name: map_name.to_string(),
            component,
            hypothesis: String::new(),
            verdict: Verdict::Consistent,
            seed,
            lipschitz_constant: None,
            holder: None,
            derivative: None,
            jumps: Vec::new(),
            sups: Vec::new(),
            samples: Vec::new(),
            skipped_infeasible: 0,
        }
    }

    /// CSV dump, one row per sample.
    pub fn csv(&self) -> String {
        let comp = self
            .component
            .map_or("norm".to_string(), |c| (c + 1).to_string());
        let mut out = String::from("radius,distance,value,component\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{}\n",
                s.radius, s.distance, s.value, comp
            ));
        }
        out
    }
}

fn measure<T: Real>(diff: &[T], component: Option<usize>) -> T {
    match component {
        Some(k) => diff[k].abs(),
        None => norm2(diff),
    }
}

/// Difference quotients `||u(y) - u(z)|| / ||y - z||` for explicit pairs.
pub fn lipschitz_quotient<T: Real>(
    map: &ControllerMap<T>,
    pairs: &[(Vec<T>, Vec<T>)],
    component: Option<usize>,
) -> Result<Vec<T>, ProbeError> {
    let mut out = Vec::with_capacity(pairs.len());
    for (idx, (y, z)) in pairs.iter().enumerate() {
        let dist = norm2(&vsub(y, z));
        if dist <= T::epsilon() {
            return Err(ProbeError::CoincidentPair { index: idx });
        }
        let uy = map.eval(y).map_err(ProbeError::Evaluation)?;
        let uz = map.eval(z).map_err(ProbeError::Evaluation)?;
        out.push(measure(&vsub(&uy, &uz), component) / dist);
    }
    Ok(out)
}

fn descending<T: Real>(radii: &[T]) -> Result<Vec<T>, ProbeError> {
    if radii.is_empty() {
        return Err(ProbeError::BadParams("radius ladder is empty".into()));
    }
    if radii.iter().any(|&r| r <= T::zero()) {
        return Err(ProbeError::BadParams("radii must be positive".into()));
    }
    let mut r = radii.to_vec();
    r.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(r)
}

/// Shared shrinking-ball sweep: per radius, the supremum of a per-sample
/// value. `value(dist, u_y)` computes the measured quantity.
fn ball_sweep<T: Real>(
    map: &ControllerMap<T>,
    x0: &[T],
    radii: &[T],
    samples_per_radius: usize,
    seed: u64,
    est: &mut RegularityEstimate<T>,
    mut value: impl FnMut(T, &[T]) -> T,
) -> Result<(), ProbeError> {
    if samples_per_radius == 0 {
        return Err(ProbeError::TooFewPoints);
    }
    for &r in radii {
        let mut sup = T::zero();
        for y in ball_points(x0, r, samples_per_radius, seed) {
            let dist = norm2(&vsub(&y, x0));
            if dist <= T::epsilon() {
                continue;
            }
            match map.eval(&y) {
                Ok(u) => {
                    let v = value(dist, &u);
                    est.samples.push(SampleRecord {
                        radius: r,
                        distance: dist,
                        value: v,
                    });
                    sup = sup.max(v);
                }
                Err(EvalError::Infeasible) => est.skipped_infeasible += 1,
                Err(e) => return Err(ProbeError::Evaluation(e)),
            }
        }
        est.sups.push((r, sup));
    }
    Ok(())
}

/// Does the sup sequence grow (weakly monotonically) beyond `cap` as the
/// radius shrinks? `sups` is ordered by descending radius.
fn diverges<T: Real>(sups: &[(T, T)], cap: T) -> bool {
    let nonzero: Vec<T> = sups
        .iter()
        .map(|&(_, s)| s)
        .filter(|&s| s > T::zero())
        .collect();
    if nonzero.len() < 2 {
        return false;
    }
    let max = nonzero.iter().fold(T::zero(), |m, &s| m.max(s));
    let min = nonzero.iter().fold(T::infinity(), |m, &s| m.min(s));
    if max < cap * min {
        return false;
    }
    let slack = T::of(0.9);
    sups.windows(2).all(|w| w[1].1 >= slack * w[0].1)
}

/// Sup of `||u(y) - u(x0)|| / ||y - x0||` over shrinking balls around `x0`.
/// Consistent with point-Lipschitz continuity when the sups stay within
/// `growth_cap` of each other; violated when they grow past it.
pub fn point_lipschitz_estimate<T: Real>(
    map: &ControllerMap<T>,
    x0: &[T],
    radii: &[T],
    samples_per_radius: usize,
    seed: u64,
    component: Option<usize>,
    growth_cap: T,
) -> Result<RegularityEstimate<T>, ProbeError> {
    let radii = descending(radii)?;
    let u0 = map.eval(x0).map_err(ProbeError::Evaluation)?;
    let mut est = RegularityEstimate::new(ProbeKind::PointLipschitz, &map.name, component, seed);
    est.hypothesis = format!(
        "point-Lipschitz at the center: sup quotients bounded across radii (growth cap {growth_cap:e})"
    );
    ball_sweep(
        map,
        x0,
        &radii,
        samples_per_radius,
        seed,
        &mut est,
        |dist, u| measure(&vsub(u, &u0), component) / dist,
    )?;
    est.lipschitz_constant = Some(est.sups.iter().fold(T::zero(), |m, &(_, s)| m.max(s)));
    est.verdict = if diverges(&est.sups, growth_cap) {
        Verdict::Violated
    } else {
        Verdict::Consistent
    };
    Ok(est)
}

/// Log-log least-squares fit of `||u(y) - u(x0)||` against `||y - x0||`,
/// returning the fitted Hoelder exponent and constant. Consistent when the
/// exponent lies in (0, 1] up to the fit tolerance.
pub fn holder_fit<T: Real>(
    map: &ControllerMap<T>,
    x0: &[T],
    radii: &[T],
    samples_per_radius: usize,
    seed: u64,
    component: Option<usize>,
) -> Result<RegularityEstimate<T>, ProbeError> {
    let radii = descending(radii)?;
    let u0 = map.eval(x0).map_err(ProbeError::Evaluation)?;
    let mut est = RegularityEstimate::new(ProbeKind::Holder, &map.name, component, seed);
    est.hypothesis = "Hoelder at the center: fitted exponent in (0, 1]".into();
    ball_sweep(
        map,
        x0,
        &radii,
        samples_per_radius,
        seed,
        &mut est,
        |_dist, u| measure(&vsub(u, &u0), component),
    )?;
    // fit log(value) = log C + alpha log(distance) over nonzero samples
    let pts: Vec<(T, T)> = est
        .samples
        .iter()
        .filter(|s| s.value > T::zero() && s.distance > T::zero())
        .map(|s| (s.distance.ln(), s.value.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(ProbeError::TooFewPoints);
    }
    let nf = T::of(pts.len() as f64);
    let mx = pts.iter().fold(T::zero(), |s, p| s + p.0) / nf;
    let my = pts.iter().fold(T::zero(), |s, p| s + p.1) / nf;
    let sxx = pts
        .iter()
        .fold(T::zero(), |s, p| s + (p.0 - mx) * (p.0 - mx));
    if sxx <= T::of(1e-12) {
        return Err(ProbeError::DegenerateFit);
    }
    let sxy = pts
        .iter()
        .fold(T::zero(), |s, p| s + (p.0 - mx) * (p.1 - my));
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let mut ss = T::zero();
    for (x, y) in &pts {
        let e = *y - (intercept + alpha * *x);
        ss += e * e;
    }
    let residual = (ss / nf).sqrt();
    est.holder = Some(HolderFit {
        alpha,
        constant: intercept.exp(),
        residual,
    });
    let fit_slack = T::of(0.05);
    est.verdict = if alpha > T::zero() && alpha <= T::one() + fit_slack {
        Verdict::Consistent
    } else {
        Verdict::Violated
    };
    Ok(est)
}

/// One-sided difference quotients `(u(x0 + h v) - u(x0)) / h` down a step
/// ladder. Consistent when the quotient sequence is Cauchy; the limit
/// estimate is the quotient at the smallest step.
pub fn directional_derivative<T: Real>(
    map: &ControllerMap<T>,
    x0: &[T],
    v: &[T],
    steps: &[T],
) -> Result<RegularityEstimate<T>, ProbeError> {
    if norm2(v) <= T::epsilon() {
        return Err(ProbeError::ZeroDirection);
    }
    let steps = descending(steps)?;
    if steps.len() < 2 {
        return Err(ProbeError::TooFewPoints);
    }
    let u0 = map.eval(x0).map_err(ProbeError::Evaluation)?;
    let mut est = RegularityEstimate::new(ProbeKind::Directional, &map.name, None, 0);
    est.hypothesis = "one-sided directional derivative exists: quotients are Cauchy".into();
    let mut quotients: Vec<Vec<T>> = Vec::new();
    for &h in &steps {
        let y: Vec<T> = x0.iter().zip(v).map(|(&xi, &vi)| xi + h * vi).collect();
        match map.eval(&y) {
            Ok(u) => {
                let q: Vec<T> = u.iter().zip(&u0).map(|(&a, &b)| (a - b) / h).collect();
                est.samples.push(SampleRecord {
                    radius: h,
                    distance: h,
                    value: norm2(&q),
                });
                quotients.push(q);
            }
            Err(EvalError::Infeasible) => est.skipped_infeasible += 1,
            Err(e) => return Err(ProbeError::Evaluation(e)),
        }
    }
    if quotients.len() < 2 {
        return Err(ProbeError::TooFewPoints);
    }
    let diffs: Vec<T> = quotients
        .windows(2)
        .map(|w| norm2(&vsub(&w[1], &w[0])))
        .collect();
    let last = quotients.last().unwrap().clone();
    let scale = T::one() + norm2(&last);
    // the absolute floor absorbs the cancellation noise of difference
    // quotients at small steps (it grows like eps/h)
    let cauchy = diffs.last().is_none_or(|&d| d <= T::of(1e-4) * scale)
        && diffs
            .windows(2)
            .all(|w| w[1] <= w[0] * T::of(1.5) + T::of(1e-7) * scale);
    est.derivative = Some(last);
    est.verdict = if cauchy {
        Verdict::Consistent
    } else {
        Verdict::Violated
    };
    Ok(est)
}

/// Scan a segment for discontinuities: flag consecutive-sample gaps above
/// `jump_tol * (1 + local scale)` and refine each flagged bracket once by
/// bisection. Consistent means no jump found.
pub fn jump_scan<T: Real>(
    map: &ControllerMap<T>,
    a: &[T],
    b: &[T],
    num_points: usize,
    jump_tol: T,
    component: Option<usize>,
) -> Result<RegularityEstimate<T>, ProbeError> {
    if num_points < 2 {
        return Err(ProbeError::TooFewPoints);
    }
    let span = norm2(&vsub(b, a));
    if span <= T::epsilon() {
        return Err(ProbeError::BadParams("segment endpoints coincide".into()));
    }
    let mut est = RegularityEstimate::new(ProbeKind::Jump, &map.name, component, 0);
    est.hypothesis = format!("continuous along the segment (jump tolerance {jump_tol:e})");
    let at = |t: T| -> Vec<T> {
        a.iter()
            .zip(b)
            .map(|(&ai, &bi)| ai + t * (bi - ai))
            .collect()
    };
    let nf = T::of((num_points - 1) as f64);
    let mut evals: Vec<(T, Vec<T>)> = Vec::with_capacity(num_points);
    for i in 0..num_points {
        let t = T::of(i as f64) / nf;
        match map.eval(&at(t)) {
            Ok(u) => {
                let val = measure(&u, component);
                est.samples.push(SampleRecord {
                    radius: T::zero(),
                    distance: t,
                    value: val,
                });
                evals.push((t, u));
            }
            Err(EvalError::Infeasible) => est.skipped_infeasible += 1,
            Err(e) => return Err(ProbeError::Evaluation(e)),
        }
    }
    if evals.len() < 2 {
        return Err(ProbeError::TooFewPoints);
    }
    for w in evals.windows(2) {
        let (t0, u0) = (&w[0].0, &w[0].1);
        let (t1, u1) = (&w[1].0, &w[1].1);
        let gap = measure(&vsub(u1, u0), component);
        let scale = T::one() + measure(u0, component).max(measure(u1, component));
        if gap <= jump_tol * scale {
            continue;
        }
        // one bisection round localizes the jump to half the bracket
        let tm = (*t0 + *t1) * T::of(0.5);
        let (param, magnitude) = match map.eval(&at(tm)) {
            Ok(um) => {
                let g0 = measure(&vsub(&um, u0), component);
                let g1 = measure(&vsub(u1, &um), component);
                if g0 >= g1 {
                    ((*t0 + tm) * T::of(0.5), g0.max(gap))
                } else {
                    ((tm + *t1) * T::of(0.5), g1.max(gap))
                }
            }
            Err(_) => (tm, gap),
        };
        est.jumps.push(JumpLocation {
            parameter: param,
            position: at(param),
            magnitude,
        });
    }
    est.verdict = if est.jumps.is_empty() {
        Verdict::Consistent
    } else {
        Verdict::Violated
    };
    Ok(est)
}

/// Sup of `||u(y)||` over shrinking balls. Violated when the sup grows past
/// `divergence_factor` as the radius shrinks (local unboundedness).
pub fn boundedness_sweep<T: Real>(
    map: &ControllerMap<T>,
    x0: &[T],
    radii: &[T],
    samples_per_radius: usize,
    seed: u64,
    component: Option<usize>,
    divergence_factor: T,
) -> Result<RegularityEstimate<T>, ProbeError> {
    let radii = descending(radii)?;
    let mut est = RegularityEstimate::new(ProbeKind::Boundedness, &map.name, component, seed);
    est.hypothesis = format!(
        "locally bounded at the center: sup norms stay within a factor {divergence_factor:e} across radii"
    );
    ball_sweep(
        map,
        x0,
        &radii,
        samples_per_radius,
        seed,
        &mut est,
        |_dist, u| measure(u, component),
    )?;
    est.verdict = if diverges(&est.sups, divergence_factor) {
        Verdict::Violated
    } else {
        Verdict::Consistent
    };
    Ok(est)
}

/// Least-squares slope of `log(sup)` against `log(radius)`; `None` when
/// fewer than two nonzero sups exist.
pub fn log_log_slope<T: Real>(sups: &[(T, T)]) -> Option<T> {
    let pts: Vec<(T, T)> = sups
        .iter()
        .filter(|&&(r, s)| r > T::zero() && s > T::zero())
        .map(|&(r, s)| (r.ln(), s.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let nf = T::of(pts.len() as f64);
    let mx = pts.iter().fold(T::zero(), |s, p| s + p.0) / nf;
    let my = pts.iter().fold(T::zero(), |s, p| s + p.1) / nf;
    let sxx = pts
        .iter()
        .fold(T::zero(), |s, p| s + (p.0 - mx) * (p.0 - mx));
    if sxx <= T::epsilon() {
        return None;
    }
    let sxy = pts
        .iter()
        .fold(T::zero(), |s, p| s + (p.0 - mx) * (p.1 - my));
    Some(sxy / sxx)
}
