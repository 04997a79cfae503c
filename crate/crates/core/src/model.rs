//! Domain types shared by the barrier, controller, world and simulation
//! modules.
//!
//! Everything here is a plain value type. Positions are in meters, velocities
//! in meters per second, time in seconds.

use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

/// Default spatial dimension of generated scenarios.
pub const DEFAULT_DIM: usize = 2;

/// A point or direction in `R^n`.
///
/// Stored inline for `n <= 4`, which covers every scenario the simulator
/// builds; larger dimensions spill to the heap and keep working.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RealVec(SmallVec<[f64; 4]>);

impl RealVec {
    pub fn new(components: &[f64]) -> Self {
        RealVec(SmallVec::from_slice(components))
    }

    pub fn zeros(dim: usize) -> Self {
        RealVec(SmallVec::from_elem(0.0, dim))
    }

    pub fn xy(x: f64, y: f64) -> Self {
        RealVec::new(&[x, y])
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize) -> f64) -> Self {
        RealVec((0..dim).map(f).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> + '_ {
        self.0.iter()
    }

    pub fn dot(&self, other: &RealVec) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(&self, other: &RealVec) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, factor: f64) -> RealVec {
        RealVec(self.0.iter().map(|a| a * factor).collect())
    }

    /// `self + factor * other`
    pub fn add_scaled(&self, factor: f64, other: &RealVec) -> RealVec {
        debug_assert_eq!(self.dim(), other.dim());
        RealVec(self.0.iter().zip(other.0.iter()).map(|(a, b)| a + factor * b).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    /// Rotates the first two components by +90 degrees, leaving the others
    /// untouched. Exact in floating point.
    pub fn rotate_quarter(&self) -> RealVec {
        let mut out = self.clone();
        if self.dim() >= 2 {
            out.0[0] = -self.0[1];
            out.0[1] = self.0[0];
        }
        out
    }

    pub fn with_component(&self, index: usize, value: f64) -> RealVec {
        let mut out = self.clone();
        out.0[index] = value;
        out
    }
}

impl fmt::Debug for RealVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl Index<usize> for RealVec {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

impl Add for &RealVec {
    type Output = RealVec;

    fn add(self, rhs: &RealVec) -> RealVec {
        self.add_scaled(1.0, rhs)
    }
}

impl Sub for &RealVec {
    type Output = RealVec;

    fn sub(self, rhs: &RealVec) -> RealVec {
        debug_assert_eq!(self.dim(), rhs.dim());
        RealVec(self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a - b).collect())
    }
}

impl Mul<f64> for &RealVec {
    type Output = RealVec;

    fn mul(self, rhs: f64) -> RealVec {
        self.scale(rhs)
    }
}

impl Neg for &RealVec {
    type Output = RealVec;

    fn neg(self) -> RealVec {
        RealVec(self.0.iter().map(|a| -a).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Kinetic,
    Static,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Kinetic => "kinetic",
            AgentKind::Static => "static",
        }
    }
}

impl std::str::FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kinetic" => Ok(AgentKind::Kinetic),
            "static" => Ok(AgentKind::Static),
            other => Err(format!("unknown agent kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: usize,
    pub position: RealVec,
    pub velocity: RealVec,
    pub goal: RealVec,
    pub kind: AgentKind,
}

impl AgentState {
    /// A kinetic agent at rest at `position`, heading for `goal`.
    pub fn kinetic(id: usize, position: RealVec, goal: RealVec) -> Self {
        let velocity = RealVec::zeros(position.dim());
        AgentState {
            id,
            position,
            velocity,
            goal,
            kind: AgentKind::Kinetic,
        }
    }

    /// A static agent: zero velocity, goal pinned to its position.
    pub fn fixed(id: usize, position: RealVec) -> Self {
        AgentState {
            id,
            velocity: RealVec::zeros(position.dim()),
            goal: position.clone(),
            position,
            kind: AgentKind::Static,
        }
    }

    pub fn is_kinetic(&self) -> bool {
        self.kind == AgentKind::Kinetic
    }

    pub fn distance_to_goal(&self) -> f64 {
        self.position.distance(&self.goal)
    }
}

/// Parameters of the barrier function `B = |x - tau|^2 / (|x - x_j| - d_c + 1/eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierParams {
    /// Minimum allowed center-to-center distance `d_c`.
    pub clearance: f64,
    pub epsilon: f64,
    /// Smallest denominator the barrier will evaluate.
    pub x0_floor: f64,
}

impl Default for BarrierParams {
    fn default() -> Self {
        BarrierParams {
            clearance: 2.0,
            epsilon: 1.0e4,
            x0_floor: 1.0e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlParams {
    /// Gain `k1` on the finite-time descent term.
    pub gain: f64,
    /// Exponent `alpha` in `(0, 1)`.
    pub alpha: f64,
    /// Relative threshold on `|grad . v_j| / (|grad| |v_j|)` below which the
    /// neighbor-velocity correction is dropped.
    pub dot_guard_tol: f64,
    pub grad_zero_tol: f64,
}

impl Default for ControlParams {
    fn default() -> Self {
        ControlParams {
            gain: 1.0,
            alpha: 1.0 / 3.0,
            dot_guard_tol: 1.0e-6,
            grad_zero_tol: 1.0e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    /// Radius `R` of the circular arena.
    pub arena_radius: f64,
    /// Physical radius `r` of every agent.
    pub agent_radius: f64,
    /// Kinetic agents followed by static (boundary) agents.
    pub agents: Vec<AgentState>,
    pub barrier: BarrierParams,
    pub control: ControlParams,
    pub seed: u64,
}

impl WorldConfig {
    pub fn kinetic(&self) -> impl Iterator<Item = &AgentState> + '_ {
        self.agents.iter().filter(|a| a.is_kinetic())
    }

    pub fn statics(&self) -> impl Iterator<Item = &AgentState> + '_ {
        self.agents.iter().filter(|a| !a.is_kinetic())
    }

    /// Kinetic agent count `N`.
    pub fn kinetic_count(&self) -> usize {
        self.kinetic().count()
    }

    /// Boundary agent count `M`.
    pub fn static_count(&self) -> usize {
        self.statics().count()
    }

    pub fn dim(&self) -> usize {
        self.agents.first().map_or(DEFAULT_DIM, |a| a.position.dim())
    }

    /// Applies an exact quarter-turn rotation to every position, velocity and
    /// goal.
    pub fn rotated_quarter(&self) -> WorldConfig {
        let mut out = self.clone();
        for agent in &mut out.agents {
            agent.position = agent.position.rotate_quarter();
            agent.velocity = agent.velocity.rotate_quarter();
            agent.goal = agent.goal.rotate_quarter();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    NonFinite,
    DimensionMismatch,
    DuplicateId,
    InvalidParameter,
    StaticMoving,
    Containment,
    GoalContainment,
    PairwiseDistance,
    GoalDistance,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::NonFinite => "non-finite value",
            ViolationKind::DimensionMismatch => "dimension mismatch",
            ViolationKind::DuplicateId => "duplicate agent id",
            ViolationKind::InvalidParameter => "invalid parameter",
            ViolationKind::StaticMoving => "static agent not at rest",
            ViolationKind::Containment => "position outside R - r",
            ViolationKind::GoalContainment => "goal outside R - r",
            ViolationKind::PairwiseDistance => "pairwise distance <= d_c",
            ViolationKind::GoalDistance => "goal distance <= d_c",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub agents: Vec<usize>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (agents {:?}): {}", self.kind.as_str(), self.agents, self.detail)
    }
}

/// Checks every precondition the barrier, controller and simulator rely on at
/// `t = 0`. An empty result means the configuration is valid.
pub fn validate_config(cfg: &WorldConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut param = |name: &str, ok: bool, detail: String| {
        if !ok {
            out.push(Violation {
                kind: ViolationKind::InvalidParameter,
                agents: Vec::new(),
                detail: format!("{name}: {detail}"),
            });
        }
    };

    let (r_arena, r_agent) = (cfg.arena_radius, cfg.agent_radius);
    let bp = &cfg.barrier;
    let cp = &cfg.control;
    param(
        "R",
        r_arena.is_finite() && r_arena > 0.0,
        format!("R = {r_arena} must be > 0"),
    );
    param(
        "r",
        r_agent.is_finite() && r_agent > 0.0,
        format!("r = {r_agent} must be > 0"),
    );
    param(
        "d_c",
        bp.clearance > 2.0 * r_agent,
        format!("d_c = {} must exceed 2r = {}", bp.clearance, 2.0 * r_agent),
    );
    param(
        "epsilon",
        bp.epsilon >= 1.0 && 1.0 / bp.epsilon < bp.clearance,
        format!("epsilon = {} must be >= 1 with 1/epsilon < d_c", bp.epsilon),
    );
    param("x0_floor", bp.x0_floor > 0.0, format!("{} must be > 0", bp.x0_floor));
    param(
        "k1",
        cp.gain > 0.0 && cp.gain.is_finite(),
        format!("k1 = {} must be > 0", cp.gain),
    );
    param(
        "alpha",
        cp.alpha > 0.0 && cp.alpha < 1.0,
        format!("alpha = {} must lie in (0, 1)", cp.alpha),
    );
    param(
        "dot_guard_tol",
        cp.dot_guard_tol > 0.0,
        format!("{} must be > 0", cp.dot_guard_tol),
    );
    param(
        "grad_zero_tol",
        cp.grad_zero_tol > 0.0,
        format!("{} must be > 0", cp.grad_zero_tol),
    );

    let dim = cfg.dim();
    let mut seen = std::collections::HashSet::new();
    for a in &cfg.agents {
        if !seen.insert(a.id) {
            out.push(violation(ViolationKind::DuplicateId, vec![a.id], "id reused".into()));
        }
        let dims = [a.position.dim(), a.velocity.dim(), a.goal.dim()];
        if dims.iter().any(|&d| d != dim) {
            out.push(violation(
                ViolationKind::DimensionMismatch,
                vec![a.id],
                format!("dims {dims:?}, scenario dim {dim}"),
            ));
            continue;
        }
        if !(a.position.is_finite() && a.velocity.is_finite() && a.goal.is_finite()) {
            out.push(violation(
                ViolationKind::NonFinite,
                vec![a.id],
                "NaN or Inf component".into(),
            ));
            continue;
        }
        match a.kind {
            AgentKind::Static => {
                if !a.velocity.is_zero() || a.goal != a.position {
                    out.push(violation(
                        ViolationKind::StaticMoving,
                        vec![a.id],
                        "static agents need zero velocity and goal == position".into(),
                    ));
                }
            }
            AgentKind::Kinetic => {
                let limit = r_arena - r_agent;
                let radius = a.position.norm();
                if radius >= limit {
                    out.push(violation(
                        ViolationKind::Containment,
                        vec![a.id],
                        format!("|x| = {radius} >= R - r = {limit}"),
                    ));
                }
                let goal_radius = a.goal.norm();
                if goal_radius >= limit {
                    out.push(violation(
                        ViolationKind::GoalContainment,
                        vec![a.id],
                        format!("|tau| = {goal_radius} >= R - r = {limit}"),
                    ));
                }
            }
        }
    }
    if out
        .iter()
        .any(|v| matches!(v.kind, ViolationKind::DimensionMismatch | ViolationKind::NonFinite))
    {
        return out;
    }

    let agents = &cfg.agents;
    for (i, a) in agents.iter().enumerate() {
        for b in &agents[i + 1..] {
            if !a.is_kinetic() && !b.is_kinetic() {
                continue;
            }
            let d = a.position.distance(&b.position);
            if d <= bp.clearance {
                out.push(violation(
                    ViolationKind::PairwiseDistance,
                    vec![a.id, b.id],
                    format!("distance {d} <= d_c = {}", bp.clearance),
                ));
            }
            // A kinetic goal parked within d_c of any other agent's goal (a
            // static agent's goal is its position) can never be reached.
            let g = a.goal.distance(&b.goal);
            if g <= bp.clearance {
                out.push(violation(
                    ViolationKind::GoalDistance,
                    vec![a.id, b.id],
                    format!("goal distance {g} <= d_c = {}", bp.clearance),
                ));
            }
        }
    }
    out
}

fn violation(kind: ViolationKind, agents: Vec<usize>, detail: String) -> Violation {
    Violation { kind, agents, detail }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(agents: Vec<AgentState>) -> WorldConfig {
        WorldConfig {
            arena_radius: 98.0,
            agent_radius: 0.99,
            agents,
            barrier: BarrierParams::default(),
            control: ControlParams::default(),
            seed: 0,
        }
    }

    #[test]
    fn quarter_rotation_is_exact() {
        let v = RealVec::xy(0.1, -3.7);
        let r = v.rotate_quarter();
        assert_eq!(r, RealVec::xy(3.7, 0.1));
        assert_eq!(r.norm(), v.norm());
        let four = r.rotate_quarter().rotate_quarter().rotate_quarter();
        assert_eq!(four, v);
    }

    #[test]
    fn coincident_agents_give_one_distance_violation() {
        let cfg = config(vec![
            AgentState::kinetic(0, RealVec::xy(1.0, 1.0), RealVec::xy(10.0, 0.0)),
            AgentState::kinetic(1, RealVec::xy(1.0, 1.0), RealVec::xy(-10.0, 0.0)),
        ]);
        let v = validate_config(&cfg);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].kind, ViolationKind::PairwiseDistance);
        assert_eq!(v[0].agents, vec![0, 1]);
    }

    #[test]
    fn agent_on_arena_edge_gives_containment_violation() {
        let cfg = config(vec![AgentState::kinetic(
            0,
            RealVec::xy(98.0, 0.0),
            RealVec::xy(0.0, 0.0),
        )]);
        let v = validate_config(&cfg);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].kind, ViolationKind::Containment);
    }

    #[test]
    fn bad_parameters_are_reported() {
        let mut cfg = config(vec![AgentState::kinetic(
            0,
            RealVec::xy(1.0, 0.0),
            RealVec::xy(0.0, 0.0),
        )]);
        cfg.barrier.clearance = 1.5; // < 2r
        cfg.control.alpha = 1.0;
        let v = validate_config(&cfg);
        assert_eq!(v.len(), 2, "{v:?}");
        assert!(v.iter().all(|v| v.kind == ViolationKind::InvalidParameter));
    }

    #[test]
    fn non_finite_and_dimension_errors_short_circuit() {
        let cfg = config(vec![
            AgentState::kinetic(0, RealVec::xy(f64::NAN, 0.0), RealVec::xy(0.0, 0.0)),
            AgentState::kinetic(1, RealVec::new(&[1.0, 2.0, 3.0]), RealVec::xy(0.0, 0.0)),
        ]);
        let kinds: Vec<_> = validate_config(&cfg).into_iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![ViolationKind::NonFinite, ViolationKind::DimensionMismatch]);
    }

    #[test]
    fn validation_is_pure() {
        let cfg = config(vec![
            AgentState::kinetic(0, RealVec::xy(1.0, 1.0), RealVec::xy(1.5, 0.0)),
            AgentState::kinetic(1, RealVec::xy(1.0, 1.0), RealVec::xy(1.0, 0.0)),
        ]);
        assert_eq!(validate_config(&cfg), validate_config(&cfg));
    }
}
