//! Closed-loop construction, integration, and invariance monitoring.
//!
//! Builders turn dynamics + certificates into parametric programs
//! (safety filter, CLF-CBF, safe gradient flow); `integrate` runs the loop
//! with a fixed-step scheme so counterexample trajectories are reproducible;
//! `residual_check` certifies candidate analytic solutions by finite
//! differencing; the monitors test sub-tangentiality, the minimal-barrier
//! inequality, and the set-valued boundary condition on sampled points.

mod build;
mod integrate;
mod monitor;

pub use build::{build_clf_cbf, build_safety_filter, build_sgf, sgf_system};
pub use integrate::{integrate, residual_check, IntegrateOptions, ResidualError};
pub use monitor::{
    filippov_hull_condition, minimal_bf_monitor, nagumo_monitor, InvarianceReport, MonitorError,
    MonitorKind, MonitorSample,
};

use crate::model::{ControlAffineSystem, ModelError, PolyExpr};
use crate::regprobe::{ControllerMap, EvalError};
use crate::scalar::Real;

/// A barrier function `h` with its linear class-K gain: the safe set is
/// `{x : h(x) >= 0}` and decay is bounded by `alpha_gain * h`.
#[derive(Debug, Clone)]
pub struct Barrier<T> {
    pub h: PolyExpr<T>,
    pub alpha_gain: T,
}

/// Dynamics closed with a controller map, plus the barriers to monitor.
pub struct ClosedLoopSystem<T> {
    pub name: String,
    pub dynamics: ControlAffineSystem<T>,
    pub controller: ControllerMap<T>,
    pub barriers: Vec<Barrier<T>>,
}

impl<T: Real> ClosedLoopSystem<T> {
    pub fn new(
        name: impl Into<String>,
        dynamics: ControlAffineSystem<T>,
        controller: ControllerMap<T>,
        barriers: Vec<Barrier<T>>,
    ) -> Result<Self, ModelError> {
        if controller.state_dim != dynamics.state_dim() {
            return Err(ModelError::Shape(format!(
                "controller reads {} states, dynamics has {}",
                controller.state_dim,
                dynamics.state_dim()
            )));
        }
        if controller.input_dim != dynamics.input_dim() {
            return Err(ModelError::Shape(format!(
                "controller produces {} inputs, dynamics takes {}",
                controller.input_dim,
                dynamics.input_dim()
            )));
        }
        for b in &barriers {
            if b.h.num_vars() != dynamics.state_dim() {
                return Err(ModelError::MixedArity {
                    left: dynamics.state_dim(),
                    right: b.h.num_vars(),
                });
            }
        }
        Ok(ClosedLoopSystem {
            name: name.into(),
            dynamics,
            controller,
            barriers,
        })
    }

    /// Closed-loop field `F(x, u*(x))`.
    pub fn field_at(&self, x: &[T]) -> Result<Vec<T>, EvalError> {
        let u = self.controller.eval(x)?;
        self.dynamics
            .field_at(x, &u)
            .map_err(|e| EvalError::Failed(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    SolverInfeasible,
    BarrierCrossed { barrier: usize },
    StepRejected,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::SolverInfeasible => "solver_infeasible",
            EventKind::BarrierCrossed { .. } => "barrier_crossed",
            EventKind::StepRejected => "step_rejected",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrajEvent<T> {
    pub time: T,
    pub kind: EventKind,
    pub detail: String,
}

/// Time-stamped closed-loop run. `times` is strictly increasing and
/// `states`/`inputs` are parallel to it.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
    pub inputs: Vec<Vec<T>>,
    pub events: Vec<TrajEvent<T>>,
}

impl<T: Real> Trajectory<T> {
    /// Wrap an externally sampled curve (no inputs, no events), e.g. a
    /// candidate analytic solution to feed into a monitor.
    pub fn from_states(times: Vec<T>, states: Vec<Vec<T>>) -> Self {
        assert_eq!(times.len(), states.len());
        let inputs = vec![Vec::new(); times.len()];
        Trajectory {
            times,
            states,
            inputs,
            events: Vec::new(),
        }
    }

    pub fn last_state(&self) -> &[T] {
        self.states
            .last()
            .expect("trajectory holds at least the initial state")
    }

    pub fn last_time(&self) -> T {
        *self
            .times
            .last()
            .expect("trajectory holds at least the initial state")
    }

    /// Minimum of a barrier polynomial along the trajectory, with the time
    /// where it is attained.
    pub fn min_barrier(&self, h: &PolyExpr<T>) -> Result<(T, T), ModelError> {
        let mut min = T::infinity();
        let mut at = self.times[0];
        for (t, x) in self.times.iter().zip(&self.states) {
            let v = h.eval(x)?;
            if v < min {
                min = v;
                at = *t;
            }
        }
        Ok((min, at))
    }

    /// CSV dump: `t, x1..xn, u1..um, h1..hk`, then `#event` comment lines.
    pub fn csv(&self, barriers: &[Barrier<T>]) -> String {
        let n = self.states.first().map_or(0, Vec::len);
        let m = self.inputs.iter().map(Vec::len).max().unwrap_or(0);
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",x{i}"));
        }
        for i in 1..=m {
            out.push_str(&format!(",u{i}"));
        }
        for i in 1..=barriers.len() {
            out.push_str(&format!(",h{i}"));
        }
        out.push('\n');
        for ((t, x), u) in self.times.iter().zip(&self.states).zip(&self.inputs) {
            out.push_str(&format!("{t:.16e}"));
            for v in x {
                out.push_str(&format!(",{v:.16e}"));
            }
            for i in 0..m {
                match u.get(i) {
                    Some(v) => out.push_str(&format!(",{v:.16e}")),
                    None => out.push(','),
                }
            }
            for b in barriers {
                let v = b.h.eval(x).unwrap_or_else(|_| T::nan());
                out.push_str(&format!(",{v:.16e}"));
            }
            out.push('\n');
        }
        for e in &self.events {
            out.push_str(&format!(
                "#event,{:.16e},{},{}\n",
                e.time,
                e.kind.as_str(),
                e.detail
            ));
        }
        out
    }
}
