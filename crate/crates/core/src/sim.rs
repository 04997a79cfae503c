//! Fixed-step explicit Euler integration of `dx_i/dt = v_i` under the
//! barrier controller, with event detection and trajectory recording.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::controller::{control_law, ControlDecision, Guard};
use crate::error::{Error, Result};
use crate::model::{validate_config, AgentState, BarrierParams, ControlParams};
use crate::world::{nearest_with_distance, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_max: f64,
    /// Goal-reach radius.
    pub conv_tol: f64,
    pub abort_on_collision: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1.0e-3,
            t_max: 50.0,
            conv_tol: 1.0e-2,
            abort_on_collision: false,
        }
    }
}

impl SimConfig {
    pub fn max_steps(&self) -> usize {
        (self.t_max / self.dt + 1.0e-9).floor() as usize
    }
}

/// One kinetic agent's decision within a step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDecision {
    pub agent: usize,
    pub neighbor: usize,
    pub neighbor_distance: f64,
    pub decision: ControlDecision,
}

/// What the recorder keeps of a [`StepDecision`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepInfo {
    pub neighbor: usize,
    pub guard: Guard,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Collision { a: usize, b: usize, distance: f64 },
    Converged { agent: usize },
    Guard { agent: usize, guard: Guard },
    NeighborSwitch { agent: usize, from: usize, to: usize },
    ContainmentBreach { agent: usize, radius: f64 },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Collision { .. } => "collision",
            EventKind::Converged { .. } => "converged",
            EventKind::Guard { .. } => "guard",
            EventKind::NeighborSwitch { .. } => "neighbor_switch",
            EventKind::ContainmentBreach { .. } => "containment_breach",
        }
    }

    pub fn agent(&self) -> usize {
        match *self {
            EventKind::Collision { a, .. } => a,
            EventKind::Converged { agent }
            | EventKind::Guard { agent, .. }
            | EventKind::NeighborSwitch { agent, .. }
            | EventKind::ContainmentBreach { agent, .. } => agent,
        }
    }

    pub fn detail(&self) -> String {
        match self {
            EventKind::Collision { b, distance, .. } => format!("with={b} distance={distance}"),
            EventKind::Converged { .. } => String::new(),
            EventKind::Guard { guard, .. } => guard.as_str().to_string(),
            EventKind::NeighborSwitch { from, to, .. } => format!("from={from} to={to}"),
            EventKind::ContainmentBreach { radius, .. } => format!("radius={radius}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "t={} {} agent={} {}",
            self.time,
            self.kind.name(),
            self.kind.agent(),
            self.kind.detail()
        )
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Converged,
    TimeLimit,
    CollisionAbort,
    /// A step could not be evaluated, typically because an agent ended up
    /// inside its neighbor's clearance disk. The record holds every sample
    /// before the failing step.
    Fault {
        time: f64,
        message: String,
    },
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::TimeLimit => "time_limit",
            Termination::CollisionAbort => "collision_abort",
            Termination::Fault { .. } => "fault",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Fault { time, message } => write!(f, "fault at t={time}: {message}"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub sim: SimConfig,
    /// `times[k] = k * dt`.
    pub times: Vec<f64>,
    /// Kinetic agents at each sample, in roster order.
    pub frames: Vec<Vec<AgentState>>,
    /// Static agents; they never move, so they are stored once.
    pub statics: Vec<AgentState>,
    /// Minimum distance over pairs involving at least one kinetic agent.
    pub pairwise_min_distance: Vec<f64>,
    /// `steps[k][i]`: neighbor and guard of kinetic agent `i` during the step
    /// from `times[k]` to `times[k + 1]`.
    pub steps: Vec<Vec<StepInfo>>,
    pub events: Vec<Event>,
    /// First time each kinetic agent came within `conv_tol` of its goal.
    pub convergence_times: Vec<Option<f64>>,
    pub termination: Termination,
}

impl TrajectoryRecord {
    /// Full roster (kinetic then static) at sample `k`.
    pub fn roster(&self, k: usize) -> Vec<AgentState> {
        self.frames[k].iter().chain(&self.statics).cloned().collect()
    }

    pub fn kinetic_ids(&self) -> Vec<usize> {
        self.frames[0].iter().map(|a| a.id).collect()
    }

    pub fn kinetic_index(&self, id: usize) -> Option<usize> {
        self.frames[0].iter().position(|a| a.id == id)
    }

    pub fn all_converged(&self) -> bool {
        self.convergence_times.iter().all(Option::is_some)
    }

    /// Whether every kinetic agent sits within `conv_tol` of its goal in the
    /// final sample.
    pub fn finished_at_goals(&self) -> bool {
        let last = self.frames.last().expect("record has at least one frame");
        last.iter().all(|a| a.distance_to_goal() <= self.sim.conv_tol)
    }

    pub fn min_distance(&self) -> f64 {
        self.pairwise_min_distance.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_radius(&self) -> f64 {
        self.frames
            .iter()
            .flatten()
            .map(|a| a.position.norm())
            .fold(0.0, f64::max)
    }

    pub fn events_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Event> + 'a {
        self.events.iter().filter(move |e| e.kind.name() == name)
    }
}

/// Advances every kinetic agent by one Euler step. All decisions are taken
/// against the same snapshot, using each neighbor's velocity from that
/// snapshot.
pub fn step(
    roster: &[AgentState],
    bp: &BarrierParams,
    cp: &ControlParams,
    dt: f64,
) -> Result<(Vec<AgentState>, Vec<StepDecision>)> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt = {dt} must be positive")));
    }
    let mut decisions = Vec::new();
    let mut next = Vec::with_capacity(roster.len());
    for agent in roster {
        if !agent.is_kinetic() {
            next.push(agent.clone());
            continue;
        }
        let (neighbor, distance) = nearest_with_distance(agent, roster).map_err(|e| e.for_agent(agent.id))?;
        let decision = control_law(agent, neighbor, bp, cp).map_err(|e| e.for_agent(agent.id))?;
        let mut moved = agent.clone();
        moved.position = agent.position.add_scaled(dt, &decision.velocity_command);
        moved.velocity = decision.velocity_command.clone();
        next.push(moved);
        decisions.push(StepDecision {
            agent: agent.id,
            neighbor: neighbor.id,
            neighbor_distance: distance,
            decision,
        });
    }
    Ok((next, decisions))
}

struct FrameScan {
    min_distance: f64,
    /// Pairs at distance `<= d_c`, smaller id first.
    colliding: Vec<(usize, usize, f64)>,
}

fn scan_frame(roster: &[AgentState], clearance: f64) -> FrameScan {
    let mut min_distance = f64::INFINITY;
    let mut colliding = Vec::new();
    for (i, a) in roster.iter().enumerate() {
        if !a.is_kinetic() {
            continue;
        }
        for (j, b) in roster.iter().enumerate() {
            if i == j || (b.is_kinetic() && j < i) {
                continue;
            }
            let d = a.position.distance(&b.position);
            min_distance = min_distance.min(d);
            if d <= clearance {
                colliding.push((a.id.min(b.id), a.id.max(b.id), d));
            }
        }
    }
    FrameScan {
        min_distance,
        colliding,
    }
}

pub fn run(scenario: &Scenario, sc: &SimConfig) -> Result<TrajectoryRecord> {
    let cfg = &scenario.config;
    let violations = validate_config(cfg);
    if let Some(v) = violations.first() {
        return Err(Error::InvalidArgument(format!("invalid scenario: {v}")));
    }
    if !(sc.dt > 0.0 && sc.dt <= sc.t_max && sc.conv_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("invalid sim config {sc:?}")));
    }
    let bp = &cfg.barrier;
    let cp = &cfg.control;

    // Kinetic agents first so frame indices line up with the roster.
    let mut roster: Vec<AgentState> = cfg.kinetic().chain(cfg.statics()).cloned().collect();
    let n = cfg.kinetic_count();
    let statics = roster[n..].to_vec();

    let mut rec = TrajectoryRecord {
        sim: *sc,
        times: vec![0.0],
        frames: vec![roster[..n].to_vec()],
        statics,
        pairwise_min_distance: Vec::new(),
        steps: Vec::new(),
        events: Vec::new(),
        convergence_times: vec![None; n],
        termination: Termination::TimeLimit,
    };

    let mut colliding: HashSet<(usize, usize)> = HashSet::new();
    let mut breached: HashSet<usize> = HashSet::new();
    let mut neighbors: Vec<Option<usize>> = vec![None; n];
    let mut guards: Vec<Guard> = vec![Guard::None; n];

    let mut collided = inspect_frame(
        &roster[..],
        0.0,
        cfg.arena_radius,
        bp,
        sc,
        &mut rec,
        &mut colliding,
        &mut breached,
    );

    for k in 0..sc.max_steps() {
        if rec.frames[k].iter().all(|a| a.distance_to_goal() <= sc.conv_tol) {
            rec.termination = Termination::Converged;
            break;
        }
        if collided && sc.abort_on_collision {
            rec.termination = Termination::CollisionAbort;
            break;
        }
        let t = k as f64 * sc.dt;
        let (next, decisions) = match step(&roster, bp, cp, sc.dt) {
            Ok(out) => out,
            Err(e) => {
                rec.termination = Termination::Fault {
                    time: t,
                    message: e.to_string(),
                };
                break;
            }
        };
        let mut infos = Vec::with_capacity(n);
        for (i, d) in decisions.iter().enumerate() {
            if let Some(prev) = neighbors[i] {
                if prev != d.neighbor {
                    rec.events.push(Event {
                        time: t,
                        kind: EventKind::NeighborSwitch {
                            agent: d.agent,
                            from: prev,
                            to: d.neighbor,
                        },
                    });
                }
            }
            neighbors[i] = Some(d.neighbor);
            let guard = d.decision.guard_fired;
            if guard != guards[i] && !matches!(guard, Guard::None | Guard::NeighborStatic) {
                rec.events.push(Event {
                    time: t,
                    kind: EventKind::Guard { agent: d.agent, guard },
                });
            }
            guards[i] = guard;
            infos.push(StepInfo {
                neighbor: d.neighbor,
                guard,
            });
        }
        rec.steps.push(infos);
        roster = next;
        let t_next = (k + 1) as f64 * sc.dt;
        rec.times.push(t_next);
        rec.frames.push(roster[..n].to_vec());
        collided |= inspect_frame(
            &roster,
            t_next,
            cfg.arena_radius,
            bp,
            sc,
            &mut rec,
            &mut colliding,
            &mut breached,
        );
    }
    if rec.termination == Termination::TimeLimit && rec.finished_at_goals() {
        rec.termination = Termination::Converged;
    }
    Ok(rec)
}

/// Records distance, collision, containment and convergence events for the
/// frame just pushed. Returns whether any pair is in collision.
#[allow(clippy::too_many_arguments)]
fn inspect_frame(
    roster: &[AgentState],
    t: f64,
    arena_radius: f64,
    bp: &BarrierParams,
    sc: &SimConfig,
    rec: &mut TrajectoryRecord,
    colliding: &mut HashSet<(usize, usize)>,
    breached: &mut HashSet<usize>,
) -> bool {
    let scan = scan_frame(roster, bp.clearance);
    rec.pairwise_min_distance.push(scan.min_distance);
    let now: HashSet<(usize, usize)> = scan.colliding.iter().map(|&(a, b, _)| (a, b)).collect();
    for &(a, b, distance) in &scan.colliding {
        if !colliding.contains(&(a, b)) {
            rec.events.push(Event {
                time: t,
                kind: EventKind::Collision { a, b, distance },
            });
        }
    }
    *colliding = now;

    for (i, agent) in roster.iter().filter(|a| a.is_kinetic()).enumerate() {
        let radius = agent.position.norm();
        if radius > arena_radius {
            if breached.insert(agent.id) {
                rec.events.push(Event {
                    time: t,
                    kind: EventKind::ContainmentBreach {
                        agent: agent.id,
                        radius,
                    },
                });
            }
        } else {
            breached.remove(&agent.id);
        }
        if rec.convergence_times[i].is_none() && agent.distance_to_goal() <= sc.conv_tol {
            rec.convergence_times[i] = Some(t);
            rec.events.push(Event {
                time: t,
                kind: EventKind::Converged { agent: agent.id },
            });
        }
    }
    !colliding.is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RealVec, WorldConfig};

    fn lone_agent(start: (f64, f64), goal: (f64, f64), obstacle: (f64, f64)) -> Scenario {
        Scenario {
            config: WorldConfig {
                arena_radius: 98.0,
                agent_radius: 0.99,
                agents: vec![
                    AgentState::kinetic(0, RealVec::xy(start.0, start.1), RealVec::xy(goal.0, goal.1)),
                    AgentState::fixed(1, RealVec::xy(obstacle.0, obstacle.1)),
                ],
                barrier: BarrierParams::default(),
                control: ControlParams::default(),
                seed: 0,
            },
            label: "lone".into(),
        }
    }

    #[test]
    fn single_euler_step() {
        let roster = vec![
            AgentState::kinetic(0, RealVec::xy(1.0, 0.0), RealVec::xy(0.0, 0.0)),
            AgentState::fixed(1, RealVec::xy(4.0, 0.0)),
        ];
        let (next, decisions) = step(&roster, &BarrierParams::default(), &ControlParams::default(), 1e-3).unwrap();
        // 1 - 1e-3 * 2.99960006^(1/3), evaluated independently.
        assert!((next[0].position[0] - 0.998_557_814_524_489_4).abs() < 1e-9);
        assert_eq!(next[0].position[1], 0.0);
        assert_eq!(next[1], roster[1]);
        assert_eq!(decisions.len(), 1);
        assert_eq!(decisions[0].neighbor, 1);
        assert_eq!(next[0].velocity, decisions[0].decision.velocity_command);
    }

    #[test]
    fn agent_at_goal_does_not_move() {
        let roster = vec![
            AgentState::kinetic(0, RealVec::xy(2.0, 2.0), RealVec::xy(2.0, 2.0)),
            AgentState::fixed(1, RealVec::xy(9.0, 0.0)),
        ];
        let (next, _) = step(&roster, &BarrierParams::default(), &ControlParams::default(), 1e-3).unwrap();
        assert_eq!(next, roster);
    }

    #[test]
    fn static_only_roster_is_unchanged() {
        let roster = vec![
            AgentState::fixed(0, RealVec::xy(2.0, 2.0)),
            AgentState::fixed(1, RealVec::xy(9.0, 0.0)),
        ];
        let (next, d) = step(&roster, &BarrierParams::default(), &ControlParams::default(), 1e-3).unwrap();
        assert_eq!(next, roster);
        assert!(d.is_empty());
    }

    #[test]
    fn step_is_order_independent() {
        let scenario = crate::world::preset("example1", 3).unwrap();
        let mut roster = scenario.config.agents.clone();
        let bp = scenario.config.barrier;
        let cp = scenario.config.control;
        for _ in 0..5 {
            roster = step(&roster, &bp, &cp, 1e-3).unwrap().0;
        }
        let (a, _) = step(&roster, &bp, &cp, 1e-3).unwrap();
        let mut reversed = roster.clone();
        reversed.reverse();
        let (mut b, _) = step(&reversed, &bp, &cp, 1e-3).unwrap();
        b.reverse();
        assert_eq!(a, b);
    }

    #[test]
    fn lone_agent_converges_monotonically() {
        let scenario = lone_agent((10.0, 0.0), (0.0, 0.0), (0.0, 30.0));
        let rec = run(&scenario, &SimConfig::default()).unwrap();
        assert!(rec.all_converged());
        assert!(rec.finished_at_goals());
        assert_eq!(rec.termination, Termination::Converged);
        assert_eq!(rec.events_named("collision").count(), 0);
        let bp = BarrierParams::default();
        let v: Vec<f64> = rec
            .frames
            .iter()
            .map(|f| {
                crate::barrier::barrier_value(&f[0].position, &f[0].goal, &rec.statics[0].position, &bp)
                    .unwrap()
                    .value
            })
            .collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]), "B must strictly decrease");
        for (k, &t) in rec.times.iter().enumerate() {
            assert_eq!(t, k as f64 * 1e-3);
        }
    }

    #[test]
    fn starting_at_goal_converges_at_zero() {
        let scenario = lone_agent((5.0, 5.0), (5.0, 5.0), (0.0, 30.0));
        let rec = run(&scenario, &SimConfig::default()).unwrap();
        assert_eq!(rec.convergence_times, vec![Some(0.0)]);
        assert_eq!(rec.frames.len(), 1);
        assert!(rec.steps.is_empty());
    }

    #[test]
    fn overshooting_into_an_obstacle_ends_in_a_fault() {
        // |v| is about 4 at the start, so one 3 s step carries the agent from
        // x = 10 past its goal and into the clearance disk around x = -3.
        let mut scenario = lone_agent((10.0, 0.0), (0.0, 0.0), (-3.0, 0.0));
        scenario.config.control.gain = 4.0;
        let sc = SimConfig {
            dt: 3.0,
            t_max: 30.0,
            ..SimConfig::default()
        };
        let rec = run(&scenario, &sc).unwrap();
        assert!(
            matches!(rec.termination, Termination::Fault { .. }),
            "{}",
            rec.termination
        );
        assert_eq!(rec.frames.len(), rec.steps.len() + 1);
        assert_eq!(rec.events_named("collision").count(), 1);
    }

    #[test]
    fn invalid_scenarios_are_rejected() {
        let scenario = lone_agent((1.0, 0.0), (5.0, 5.0), (2.0, 0.0));
        assert!(matches!(
            run(&scenario, &SimConfig::default()),
            Err(Error::InvalidArgument(_))
        ));
    }
}
