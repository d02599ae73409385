//! Fixed-step RK4 integration of closed loops and residual certification of
//! candidate analytic solutions.
//!
//! The step size is fixed on purpose: adaptive control would hide which
//! branch a non-unique trajectory follows, and reproducibility of the
//! counterexample runs matters more than efficiency here.

use crate::regprobe::EvalError;
use crate::scalar::{norm2, vsub, Real};

use super::{ClosedLoopSystem, EventKind, TrajEvent, Trajectory};

#[derive(Debug, Clone, Copy, Default)]
pub struct IntegrateOptions {
    /// Retry a failed step with half the step size (a few times) before
    /// recording the failure and halting.
    pub refine_on_reject: bool,
}

#[derive(Debug)]
pub enum IntegrateError {
    BadParams(String),
    /// The controller cannot be evaluated at the initial state.
    StartInfeasible(EvalError),
}

impl std::fmt::Display for IntegrateError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IntegrateError::BadParams(m) => write!(f, "{m}"),
            IntegrateError::StartInfeasible(e) => {
                write!(f, "controller unavailable at the initial state: {e}")
            }
        }
    }
}

impl std::error::Error for IntegrateError {}

/// Integrate `xdot = F(x, u*(x))` from `x0` to `t_end` with fixed-step RK4,
/// re-evaluating the controller at every stage point. Infeasible solves and
/// barrier sign changes are recorded as events; an unrecoverable infeasible
/// stage halts the run at the last accepted state.
pub fn integrate<T: Real>(
    system: &ClosedLoopSystem<T>,
    x0: &[T],
    t_end: T,
    dt: T,
    opts: IntegrateOptions,
) -> Result<Trajectory<T>, IntegrateError> {
    if dt <= T::zero() || t_end <= T::zero() {
        return Err(IntegrateError::BadParams(
            "t_end and dt must be positive".into(),
        ));
    }
    let u0 = system
        .controller
        .eval(x0)
        .map_err(IntegrateError::StartInfeasible)?;

    let mut traj = Trajectory {
        times: vec![T::zero()],
        states: vec![x0.to_vec()],
        inputs: vec![u0],
        events: Vec::new(),
    };
    let mut barrier_signs: Vec<bool> = system
        .barriers
        .iter()
        .map(|b| b.h.eval(x0).map(|v| v >= T::zero()).unwrap_or(true))
        .collect();

    let mut x = x0.to_vec();
    let mut t = T::zero();
    let t_tol = dt * T::of(1e-9);
    while t < t_end - t_tol {
        let step = (t_end - t).min(dt);
        match rk4_step(system, &x, t, step, &opts, &mut traj.events) {
            StepOutcome::Accepted { state, taken } => {
                t += taken;
                x = state;
                let u = match system.controller.eval(&x) {
                    Ok(u) => u,
                    Err(EvalError::Infeasible) => {
                        traj.events.push(TrajEvent {
                            time: t,
                            kind: EventKind::SolverInfeasible,
                            detail: "controller infeasible at accepted state".into(),
                        });
                        break;
                    }
                    Err(e) => {
                        traj.events.push(TrajEvent {
                            time: t,
                            kind: EventKind::StepRejected,
                            detail: e.to_string(),
                        });
                        break;
                    }
                };
                if x.iter().any(|v| !v.is_finite()) {
                    traj.events.push(TrajEvent {
                        time: t,
                        kind: EventKind::StepRejected,
                        detail: "non-finite state".into(),
                    });
                    break;
                }
                for (bi, b) in system.barriers.iter().enumerate() {
                    if let Ok(v) = b.h.eval(&x) {
                        let sign = v >= T::zero();
                        if sign != barrier_signs[bi] {
                            traj.events.push(TrajEvent {
                                time: t,
                                kind: EventKind::BarrierCrossed { barrier: bi },
                                detail: format!("h{} changed sign to {v:.3e}", bi + 1),
                            });
                            barrier_signs[bi] = sign;
                        }
                    }
                }
                traj.times.push(t);
                traj.states.push(x.clone());
                traj.inputs.push(u);
            }
            StepOutcome::Halted => break,
        }
    }
    Ok(traj)
}

enum StepOutcome<T> {
    Accepted { state: Vec<T>, taken: T },
    Halted,
}

fn rk4_step<T: Real>(
    system: &ClosedLoopSystem<T>,
    x: &[T],
    t: T,
    dt: T,
    opts: &IntegrateOptions,
    events: &mut Vec<TrajEvent<T>>,
) -> StepOutcome<T> {
    let mut step = dt;
    let max_refinements = if opts.refine_on_reject { 6 } else { 0 };
    for attempt in 0..=max_refinements {
        match try_rk4(system, x, step) {
            Ok(state) => return StepOutcome::Accepted { state, taken: step },
            Err(EvalError::Infeasible) if attempt < max_refinements => {
                events.push(TrajEvent {
                    time: t,
                    kind: EventKind::StepRejected,
                    detail: format!(
                        "infeasible stage; retrying with dt = {:.3e}",
                        step * T::of(0.5)
                    ),
                });
                step *= T::of(0.5);
            }
            Err(EvalError::Infeasible) => {
                events.push(TrajEvent {
                    time: t,
                    kind: EventKind::SolverInfeasible,
                    detail: "controller infeasible at a stage point".into(),
                });
                return StepOutcome::Halted;
            }
            Err(e) => {
                events.push(TrajEvent {
                    time: t,
                    kind: EventKind::StepRejected,
                    detail: e.to_string(),
                });
                return StepOutcome::Halted;
            }
        }
    }
    StepOutcome::Halted
}

fn try_rk4<T: Real>(system: &ClosedLoopSystem<T>, x: &[T], dt: T) -> Result<Vec<T>, EvalError> {
    let half = dt * T::of(0.5);
    let k1 = system.field_at(x)?;
    let k2 = system.field_at(&shifted(x, &k1, half))?;
    let k3 = system.field_at(&shifted(x, &k2, half))?;
    let k4 = system.field_at(&shifted(x, &k3, dt))?;
    let sixth = dt / T::of(6.0);
    Ok(x.iter()
        .enumerate()
        .map(|(i, &xi)| xi + sixth * (k1[i] + T::of(2.0) * (k2[i] + k3[i]) + k4[i]))
        .collect())
}

fn shifted<T: Real>(x: &[T], k: &[T], h: T) -> Vec<T> {
    x.iter().zip(k).map(|(&xi, &ki)| xi + h * ki).collect()
}

#[derive(Debug)]
pub enum ResidualError {
    TooFewSamples,
    BadParams(String),
    Evaluation(EvalError),
}

impl std::fmt::Display for ResidualError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ResidualError::TooFewSamples => write!(f, "curve too short for finite differencing"),
            ResidualError::BadParams(m) => write!(f, "{m}"),
            ResidualError::Evaluation(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ResidualError {}

/// Certify a candidate solution curve by residual: the maximum over sample
/// times of `||xdot_fd(t) - F(x(t), u*(x(t)))||`, with `xdot_fd` a central
/// difference at spacing `h_fd`. A candidate passes when the residual is
/// below the caller's tolerance.
pub fn residual_check<T: Real>(
    system: &ClosedLoopSystem<T>,
    curve: impl Fn(T) -> Vec<T>,
    t0: T,
    t1: T,
    h_fd: T,
) -> Result<T, ResidualError> {
    if h_fd <= T::zero() || t1 <= t0 {
        return Err(ResidualError::BadParams("need t1 > t0 and h_fd > 0".into()));
    }
    let steps = ((t1 - t0) / h_fd).to_f64_lossy().floor() as usize;
    if steps < 3 {
        return Err(ResidualError::TooFewSamples);
    }
    let mut max_resid = T::zero();
    for j in 1..steps {
        let t = t0 + h_fd * T::of(j as f64);
        if t + h_fd > t1 {
            break;
        }
        let x = curve(t);
        let xp = curve(t + h_fd);
        let xm = curve(t - h_fd);
        let fd: Vec<T> = xp
            .iter()
            .zip(&xm)
            .map(|(&a, &b)| (a - b) / (T::of(2.0) * h_fd))
            .collect();
        let f = system.field_at(&x).map_err(ResidualError::Evaluation)?;
        max_resid = max_resid.max(norm2(&vsub(&fd, &f)));
    }
    Ok(max_resid)
}
