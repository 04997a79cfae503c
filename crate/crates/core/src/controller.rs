//! Finite-time feedback law built on the barrier gradient.
//!
//! With `g = grad_xi B`, the command for a kinetic agent away from its goal is
//!
//! ```text
//! v_i = -k1 |g|^(alpha - 1) g + (1 - 2 (x_i - tau_i).v_j / (x0 g.v_j)) v_j
//! ```
//!
//! The second term cancels the neighbor's contribution to `dB/dt`, leaving
//! `dB/dt = -k1 |g|^(alpha + 1)`. It divides by `g.v_j`, so it is dropped when
//! the neighbor is at rest or the product is ill-conditioned.

use serde::{Deserialize, Serialize};

use crate::barrier::{barrier_value, BarrierEvaluation};
use crate::error::{Error, Result};
use crate::model::{AgentState, BarrierParams, ControlParams, RealVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Guard {
    None,
    AtGoal,
    NeighborStatic,
    DotProductSmall,
    GradSpuriousZero,
}

impl Guard {
    pub fn as_str(self) -> &'static str {
        match self {
            Guard::None => "none",
            Guard::AtGoal => "at_goal",
            Guard::NeighborStatic => "neighbor_static",
            Guard::DotProductSmall => "dot_product_small",
            Guard::GradSpuriousZero => "grad_spurious_zero",
        }
    }

    /// Guards under which `dB/dt = -k1 |g|^(alpha+1)` still holds exactly.
    pub fn preserves_descent_identity(self) -> bool {
        matches!(self, Guard::None | Guard::NeighborStatic | Guard::AtGoal)
    }
}

impl std::str::FromStr for Guard {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "none" => Guard::None,
            "at_goal" => Guard::AtGoal,
            "neighbor_static" => Guard::NeighborStatic,
            "dot_product_small" => Guard::DotProductSmall,
            "grad_spurious_zero" => Guard::GradSpuriousZero,
            other => return Err(format!("unknown guard `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlDecision {
    pub velocity_command: RealVec,
    pub guard_fired: Guard,
    /// `V_i = B_i` at the current state.
    pub lyapunov_value: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FtsEstimate {
    pub beta: f64,
    pub c: f64,
    pub settling_time_bound: f64,
    pub c0_estimate: f64,
}

/// `-k1 |g|^(alpha-1) g`, evaluated as `-k1 |g|^alpha g/|g|` and zero at `g = 0`.
pub fn damping_term(grad: &RealVec, cp: &ControlParams) -> RealVec {
    let norm = grad.norm();
    if norm == 0.0 {
        return RealVec::zeros(grad.dim());
    }
    grad.scale(-cp.gain * norm.powf(cp.alpha) / norm)
}

pub fn control_law(
    agent: &AgentState,
    neighbor: &AgentState,
    bp: &BarrierParams,
    cp: &ControlParams,
) -> Result<ControlDecision> {
    if !agent.is_kinetic() {
        return Err(Error::InvalidArgument(format!(
            "agent {} is static and has no control input",
            agent.id
        )));
    }
    let eval = barrier_value(&agent.position, &agent.goal, &neighbor.position, bp)?;
    Ok(decide(agent, neighbor, &eval, cp))
}

fn decide(agent: &AgentState, neighbor: &AgentState, eval: &BarrierEvaluation, cp: &ControlParams) -> ControlDecision {
    let dim = agent.position.dim();
    let error = &agent.position - &agent.goal;
    let grad = &eval.grad_xi;
    let grad_norm = grad.norm();

    if error.is_zero() {
        return ControlDecision {
            velocity_command: RealVec::zeros(dim),
            guard_fired: Guard::AtGoal,
            lyapunov_value: eval.value,
            grad_norm,
        };
    }

    let v_j = &neighbor.velocity;
    let mut command = damping_term(grad, cp);
    let mut guard = if v_j.is_zero() {
        Guard::NeighborStatic
    } else {
        let dot = grad.dot(v_j);
        if dot.abs() < cp.dot_guard_tol * grad_norm * v_j.norm() {
            Guard::DotProductSmall
        } else {
            let coefficient = 1.0 - 2.0 * error.dot(v_j) / (eval.x0 * dot);
            command = command.add_scaled(coefficient, v_j);
            Guard::None
        }
    };

    if grad_norm < cp.grad_zero_tol && error.norm() > 1.0e3 * cp.grad_zero_tol {
        let offset = &agent.position - &neighbor.position;
        let tangent = offset.rotate_quarter();
        let sign = if agent.id.is_multiple_of(2) { 1.0 } else { -1.0 };
        let tangent_norm = tangent.norm();
        if tangent_norm > 0.0 {
            command = command.add_scaled(sign * cp.grad_zero_tol / tangent_norm, &tangent);
        }
        guard = Guard::GradSpuriousZero;
    }

    ControlDecision {
        velocity_command: command,
        guard_fired: guard,
        lyapunov_value: eval.value,
        grad_norm,
    }
}

/// `dB_i/dt = grad_xi . v_i + grad_xj . v_j` under the closed-loop command.
pub fn lyapunov_rate(agent: &AgentState, neighbor: &AgentState, bp: &BarrierParams, cp: &ControlParams) -> Result<f64> {
    let eval = barrier_value(&agent.position, &agent.goal, &neighbor.position, bp)?;
    let decision = decide(agent, neighbor, &eval, cp);
    Ok(eval.grad_xi.dot(&decision.velocity_command) + eval.grad_xj.dot(&neighbor.velocity))
}

/// Finite-time constants from `dV/dt <= -c V^beta`:
/// `beta = (alpha+1)/2`, `c = k1 c0^(alpha+1) / eps^beta`, and settling time
/// at most `V0^(1-beta) / (c (1-beta))`.
pub fn fts_estimate(v0: f64, cp: &ControlParams, bp: &BarrierParams, c0: f64) -> Result<FtsEstimate> {
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(Error::InvalidConstant(format!("c0 = {c0} must be positive")));
    }
    if !(v0 >= 0.0) {
        return Err(Error::InvalidConstant(format!("V0 = {v0} must be non-negative")));
    }
    let beta = (cp.alpha + 1.0) / 2.0;
    let c = cp.gain * c0.powf(cp.alpha + 1.0) / bp.epsilon.powf(beta);
    let settling_time_bound = if v0 == 0.0 {
        0.0
    } else {
        v0.powf(1.0 - beta) / (c * (1.0 - beta))
    };
    Ok(FtsEstimate {
        beta,
        c,
        settling_time_bound,
        c0_estimate: c0,
    })
}
