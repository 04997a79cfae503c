//! Scenario construction: the static boundary ring, nearest-neighbor sensing,
//! the two reference presets and seeded random scenarios.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{validate_config, AgentState, BarrierParams, ControlParams, RealVec, WorldConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: WorldConfig,
    pub label: String,
}

/// Geometry and parameters shared by presets and random scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    pub arena_radius: f64,
    pub agent_radius: f64,
    pub barrier: BarrierParams,
    pub control: ControlParams,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            arena_radius: 98.0,
            agent_radius: 0.99,
            barrier: BarrierParams::default(),
            control: ControlParams::default(),
        }
    }
}

/// Radius of the circle the presets start on, as a fraction of `R`.
pub const PRESET_START_FRACTION: f64 = 0.6;

/// Maximum angular jitter of preset start positions, as a fraction of the
/// angular spacing `2 pi / N`.
pub const PRESET_JITTER_FRACTION: f64 = 0.1;

const MAX_ATTEMPTS_PER_AGENT: usize = 10_000;

/// Static agents evenly spaced on the circle of radius `arena_radius`, with
/// `M = ceil(2 pi R / d_c)` so that adjacent centers are at most `d_c` apart.
/// Ids start at `first_id`.
pub fn build_boundary_ring(
    arena_radius: f64,
    agent_radius: f64,
    clearance: f64,
    first_id: usize,
) -> Result<Vec<AgentState>> {
    if !(arena_radius > agent_radius && agent_radius > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "need R > r > 0, got R = {arena_radius}, r = {agent_radius}"
        )));
    }
    if !(clearance > 2.0 * agent_radius) {
        return Err(Error::InvalidGeometry(format!(
            "need d_c > 2r, got d_c = {clearance}, r = {agent_radius}"
        )));
    }
    let count = (2.0 * PI * arena_radius / clearance).ceil() as usize;
    Ok((0..count)
        .map(|k| {
            let angle = 2.0 * PI * k as f64 / count as f64;
            let position = RealVec::xy(arena_radius * angle.cos(), arena_radius * angle.sin());
            AgentState::fixed(first_id + k, position)
        })
        .collect())
}

/// The agent in `others` closest to `agent`, ignoring `agent` itself; ties go
/// to the lowest id.
pub fn nearest_neighbor<'a>(agent: &AgentState, others: &'a [AgentState]) -> Result<&'a AgentState> {
    nearest_with_distance(agent, others).map(|(a, _)| a)
}

pub(crate) fn nearest_with_distance<'a>(agent: &AgentState, others: &'a [AgentState]) -> Result<(&'a AgentState, f64)> {
    let mut best: Option<(&AgentState, f64)> = None;
    for other in others {
        if other.id == agent.id {
            continue;
        }
        let d = agent.position.distance(&other.position);
        best = match best {
            Some((b, bd)) if bd < d || (bd == d && b.id < other.id) => Some((b, bd)),
            _ => Some((other, d)),
        };
    }
    best.ok_or(Error::EmptyRoster)
}

pub fn preset(label: &str, seed: u64) -> Result<Scenario> {
    preset_with(label, seed, &ScenarioParams::default())
}

/// A preset with its geometry and gains replaced by `params`. The agent count
/// and placement rule still come from the label.
pub fn preset_with(label: &str, seed: u64, params: &ScenarioParams) -> Result<Scenario> {
    let (count, label) = match label {
        "example1" => (4, "example1"),
        "example2" => (20, "example2"),
        other => return Err(Error::UnknownLabel(other.to_string())),
    };
    crossing_scenario(count, seed, params, label)
}

/// Integration step the preset is meant to be run with.
pub fn preset_time_step(label: &str) -> Result<f64> {
    match label {
        "example1" => Ok(1.0e-3),
        "example2" => Ok(2.0e-3),
        other => Err(Error::UnknownLabel(other.to_string())),
    }
}

/// `count` agents on the circle of radius `0.6 R`, each heading for the
/// antipodal point. Start angles are evenly spaced with a small seeded jitter
/// so that the agents do not all reach the center at the same instant.
pub fn crossing_scenario(count: usize, seed: u64, params: &ScenarioParams, label: &str) -> Result<Scenario> {
    if count == 0 {
        return Err(Error::InvalidArgument("scenario needs at least one agent".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = PRESET_START_FRACTION * params.arena_radius;
    let spacing = 2.0 * PI / count as f64;
    let agents = (0..count).map(|k| {
        let jitter = PRESET_JITTER_FRACTION * spacing * rng.random_range(-1.0..1.0);
        let angle = spacing * k as f64 + jitter;
        let start = RealVec::xy(radius * angle.cos(), radius * angle.sin());
        let goal = -&start;
        AgentState::kinetic(k, start, goal)
    });
    assemble(agents.collect(), params, seed, label)
}

/// Rejection-samples `count` starts and goals inside radius `R - r - d_c`
/// with every pairwise distance above `2 d_c`.
pub fn random_scenario(count: usize, seed: u64, params: &ScenarioParams) -> Result<Scenario> {
    if count == 0 {
        return Err(Error::InvalidArgument("scenario needs at least one agent".into()));
    }
    let clearance = params.barrier.clearance;
    let placement_radius = params.arena_radius - params.agent_radius - clearance;
    if !(placement_radius > 0.0) {
        return Err(Error::InvalidGeometry("arena too small for any placement".into()));
    }
    let separation = 2.0 * clearance;

    // Disks of radius `separation / 2` around accepted points are disjoint and
    // lie inside radius `placement_radius + separation / 2`.
    let half = separation / 2.0;
    let capacity = ((placement_radius + half) / half).powi(2);
    if count as f64 > capacity {
        return Err(Error::PlacementFailure {
            requested: count,
            attempts: 0,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts = sample_separated(&mut rng, count, placement_radius, separation)?;
    let goals = sample_separated(&mut rng, count, placement_radius, separation)?;
    let agents = starts
        .into_iter()
        .zip(goals)
        .enumerate()
        .map(|(id, (start, goal))| AgentState::kinetic(id, start, goal))
        .collect();
    assemble(agents, params, seed, "random")
}

fn sample_separated(rng: &mut ChaCha8Rng, count: usize, radius: f64, separation: f64) -> Result<Vec<RealVec>> {
    let mut points: Vec<RealVec> = Vec::with_capacity(count);
    let mut attempts = 0;
    while points.len() < count {
        if attempts >= MAX_ATTEMPTS_PER_AGENT * count {
            return Err(Error::PlacementFailure {
                requested: count,
                attempts,
            });
        }
        attempts += 1;
        let r = radius * rng.random::<f64>().sqrt();
        let theta = 2.0 * PI * rng.random::<f64>();
        let candidate = RealVec::xy(r * theta.cos(), r * theta.sin());
        if points.iter().all(|p| p.distance(&candidate) > separation) {
            points.push(candidate);
        }
    }
    Ok(points)
}

fn assemble(mut agents: Vec<AgentState>, params: &ScenarioParams, seed: u64, label: &str) -> Result<Scenario> {
    let ring = build_boundary_ring(
        params.arena_radius,
        params.agent_radius,
        params.barrier.clearance,
        agents.len(),
    )?;
    agents.extend(ring);
    let config = WorldConfig {
        arena_radius: params.arena_radius,
        agent_radius: params.agent_radius,
        agents,
        barrier: params.barrier,
        control: params.control,
        seed,
    };
    let violations = validate_config(&config);
    if let Some(v) = violations.first() {
        return Err(Error::InvalidGeometry(format!(
            "generated scenario is invalid ({} violations, first: {v})",
            violations.len()
        )));
    }
    Ok(Scenario {
        config,
        label: label.to_string(),
    })
}
