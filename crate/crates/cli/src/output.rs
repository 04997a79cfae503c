//! Run directories: executing a run, writing its CSV files, plots and
//! manifest, and reading them back.
//!
//! `trajectories.csv` has one row per kinetic agent per written sample
//! (`t, agent_id, kind, x0.., v0.., dist_to_goal`) plus one row per static
//! agent at `t = 0`. The velocity on a row is the command that moved the
//! agent to that position. Floats are written in shortest round-trip form, so
//! reading them back gives the recorded bits.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use ftmp_core::analysis::replay_steps;
use ftmp_core::sim::{run, Event, EventKind, Termination, TrajectoryRecord};
use ftmp_core::world::{preset_with, random_scenario, Scenario};
use ftmp_core::{AgentKind, AgentState, RealVec, WorldConfig};
use serde::{Deserialize, Serialize};

use crate::config::RunSettings;
use crate::digest::{digest_parts, event_rows, record_digest, EventRow};
use crate::plot;
use crate::{CliError, Result};

pub const TRAJECTORIES: &str = "trajectories.csv";
pub const DISTANCES: &str = "distances.csv";
pub const EVENTS: &str = "events.csv";
pub const MANIFEST: &str = "manifest.json";
pub const DISTANCE_PLOT: &str = "distances.svg";
pub const SNAPSHOT_PLOT: &str = "snapshots.svg";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub termination: String,
    /// Fault message, empty unless the run stopped on a fault.
    pub fault: String,
    pub steps: usize,
    pub simulated_time: f64,
    pub kinetic_agents: usize,
    pub converged_agents: usize,
    pub last_convergence: Option<f64>,
    pub min_distance: f64,
    pub max_radius: f64,
    pub collisions: usize,
    pub containment_breaches: usize,
    pub wall_seconds: f64,
}

impl RunSummary {
    fn of(rec: &TrajectoryRecord, wall_seconds: f64) -> Self {
        RunSummary {
            termination: rec.termination.name().to_string(),
            fault: match &rec.termination {
                Termination::Fault { message, .. } => message.clone(),
                _ => String::new(),
            },
            steps: rec.steps.len(),
            simulated_time: *rec.times.last().expect("record has a first sample"),
            kinetic_agents: rec.convergence_times.len(),
            converged_agents: rec.convergence_times.iter().flatten().count(),
            last_convergence: rec
                .convergence_times
                .iter()
                .copied()
                .collect::<Option<Vec<f64>>>()
                .map(|ts| ts.into_iter().fold(0.0, f64::max)),
            min_distance: rec.min_distance(),
            max_radius: rec.max_radius(),
            collisions: rec.events_named("collision").count(),
            containment_breaches: rec.events_named("containment_breach").count(),
            wall_seconds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub label: String,
    pub seed: u64,
    pub settings: RunSettings,
    /// Initial state of every agent, including goals and the static ring.
    pub world: WorldConfig,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<String>,
    pub record_digest: String,
    pub summary: RunSummary,
}

pub fn build_scenario(settings: &RunSettings) -> Result<Scenario> {
    let params = settings.scenario_params();
    Ok(match settings.scenario.as_str() {
        "random" => random_scenario(settings.n, settings.seed, &params)?,
        label => preset_with(label, settings.seed, &params)?,
    })
}

/// Runs the scenario described by `settings` and writes the run directory.
pub fn execute_run(settings: &RunSettings) -> Result<(RunManifest, TrajectoryRecord)> {
    let scenario = build_scenario(settings)?;
    let started = unix_now();
    let clock = Instant::now();
    let rec = run(&scenario, &settings.sim)?;
    let wall = clock.elapsed().as_secs_f64();

    let dir = &settings.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let frames = written_frames(rec.frames.len(), settings.stride);
    write_trajectories(&dir.join(TRAJECTORIES), &rec, &frames)?;
    write_distances(&dir.join(DISTANCES), &rec, &frames)?;
    write_events(&dir.join(EVENTS), &event_rows(&rec))?;
    write_text(
        &dir.join(DISTANCE_PLOT),
        &plot::distance_plot(&rec, scenario.config.barrier.clearance),
    )?;
    write_text(
        &dir.join(SNAPSHOT_PLOT),
        &plot::snapshot_plot(&rec, &scenario.config, &settings.snapshots),
    )?;

    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        label: scenario.label.clone(),
        seed: settings.seed,
        settings: settings.clone(),
        world: scenario.config.clone(),
        started_unix: started,
        finished_unix: unix_now(),
        outputs: [TRAJECTORIES, DISTANCES, EVENTS, DISTANCE_PLOT, SNAPSHOT_PLOT, MANIFEST]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        record_digest: record_digest(&rec),
        summary: RunSummary::of(&rec, wall),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_text(&dir.join(MANIFEST), &(json + "\n"))?;
    Ok((manifest, rec))
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Sample indices that go to the CSV files.
pub fn written_frames(count: usize, stride: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..count).step_by(stride.max(1)).collect();
    if out.last() != Some(&(count - 1)) {
        out.push(count - 1);
    }
    out
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::malformed(path, format!("{other:?}")),
    }
}

fn trajectory_row(t: f64, a: &AgentState) -> Vec<String> {
    let mut row = vec![t.to_string(), a.id.to_string(), a.kind.as_str().to_string()];
    row.extend(a.position.iter().map(|c| c.to_string()));
    row.extend(a.velocity.iter().map(|c| c.to_string()));
    row.push(a.distance_to_goal().to_string());
    row
}

pub fn write_trajectories(path: &Path, rec: &TrajectoryRecord, frames: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let dim = rec.frames[0]
        .first()
        .or(rec.statics.first())
        .map_or(2, |a| a.position.dim());
    let mut header = vec!["t".to_string(), "agent_id".into(), "kind".into()];
    header.extend((0..dim).map(|d| format!("x{d}")));
    header.extend((0..dim).map(|d| format!("v{d}")));
    header.push("dist_to_goal".into());
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for &k in frames {
        let t = rec.times[k];
        for a in &rec.frames[k] {
            w.write_record(trajectory_row(t, a)).map_err(|e| csv_error(path, e))?;
        }
        if k == 0 {
            for a in &rec.statics {
                w.write_record(trajectory_row(t, a)).map_err(|e| csv_error(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// One row per pair of kinetic agents per written sample. `min_distance` is
/// the smallest distance at that sample over all pairs that involve a
/// kinetic agent, static agents included. With a single kinetic agent the
/// pair columns are empty.
pub fn write_distances(path: &Path, rec: &TrajectoryRecord, frames: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["t", "id_a", "id_b", "distance", "min_distance"])
        .map_err(|e| csv_error(path, e))?;
    for &k in frames {
        let t = rec.times[k].to_string();
        let min = rec.pairwise_min_distance[k].to_string();
        let frame = &rec.frames[k];
        if frame.len() < 2 {
            w.write_record([t.as_str(), "", "", "", min.as_str()])
                .map_err(|e| csv_error(path, e))?;
            continue;
        }
        for (i, a) in frame.iter().enumerate() {
            for b in &frame[i + 1..] {
                let (lo, hi) = if a.id < b.id { (a, b) } else { (b, a) };
                w.write_record([
                    t.clone(),
                    lo.id.to_string(),
                    hi.id.to_string(),
                    a.position.distance(&b.position).to_string(),
                    min.clone(),
                ])
                .map_err(|e| csv_error(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_events(path: &Path, events: &[EventRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["t", "kind", "agent_id", "detail"])
        .map_err(|e| csv_error(path, e))?;
    for e in events {
        w.write_record([
            e.time.to_string(),
            e.kind.clone(),
            e.agent.to_string(),
            e.detail.clone(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// A run directory read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    /// Samples present in `trajectories.csv`.
    pub times: Vec<f64>,
    pub frames: Vec<Vec<AgentState>>,
    pub statics: Vec<AgentState>,
    pub events: Vec<EventRow>,
}

impl LoadedRun {
    /// Whether every simulated sample was written, so that consecutive frames
    /// are consecutive Euler steps.
    pub fn is_complete(&self) -> bool {
        self.frames.len() == self.manifest.summary.steps + 1
    }

    pub fn digest(&self) -> String {
        digest_parts(&self.times, &self.frames, &self.statics, &self.events)
    }

    /// Rebuilds a [`TrajectoryRecord`]. Per-step neighbors and guards are not
    /// stored on disk, so they are recomputed by replaying each step; the
    /// returned deviation is the largest gap between a replayed position and
    /// the one read from disk. Needs a complete run.
    pub fn to_record(&self) -> Result<(TrajectoryRecord, f64)> {
        if !self.is_complete() {
            return Err(CliError::Usage(format!(
                "{} holds {} of {} samples; rerun with stride 1 to audit step by step",
                self.dir.display(),
                self.frames.len(),
                self.manifest.summary.steps + 1
            )));
        }
        let world = &self.manifest.world;
        let sim = self.manifest.settings.sim;
        let mut pairwise_min_distance = Vec::with_capacity(self.frames.len());
        for frame in &self.frames {
            pairwise_min_distance.push(frame_min_distance(frame, &self.statics));
        }
        let mut convergence_times = vec![None; self.frames[0].len()];
        for (k, frame) in self.frames.iter().enumerate() {
            for (i, a) in frame.iter().enumerate() {
                if convergence_times[i].is_none() && a.distance_to_goal() <= sim.conv_tol {
                    convergence_times[i] = Some(self.times[k]);
                }
            }
        }
        let events = self
            .events
            .iter()
            .map(|e| parse_event(e).map_err(|m| CliError::malformed(&self.dir.join(EVENTS), m)))
            .collect::<Result<Vec<_>>>()?;
        let summary = &self.manifest.summary;
        let termination = match summary.termination.as_str() {
            "converged" => Termination::Converged,
            "time_limit" => Termination::TimeLimit,
            "collision_abort" => Termination::CollisionAbort,
            "fault" => Termination::Fault {
                time: *self.times.last().expect("at least one sample"),
                message: summary.fault.clone(),
            },
            other => {
                return Err(CliError::malformed(
                    &self.dir.join(MANIFEST),
                    format!("unknown termination `{other}`"),
                ))
            }
        };
        let mut rec = TrajectoryRecord {
            sim,
            times: self.times.clone(),
            frames: self.frames.clone(),
            statics: self.statics.clone(),
            pairwise_min_distance,
            steps: Vec::new(),
            events,
            convergence_times,
            termination,
        };
        let (steps, deviation) = replay_steps(&rec, &world.barrier, &world.control)?;
        rec.steps = steps;
        Ok((rec, deviation))
    }
}

fn frame_min_distance(frame: &[AgentState], statics: &[AgentState]) -> f64 {
    let mut min = f64::INFINITY;
    for (i, a) in frame.iter().enumerate() {
        for b in frame[i + 1..].iter().chain(statics) {
            min = min.min(a.position.distance(&b.position));
        }
    }
    min
}

fn field<'a>(record: &'a csv::StringRecord, index: usize, path: &Path) -> Result<&'a str> {
    record
        .get(index)
        .ok_or_else(|| CliError::malformed(path, format!("row {record:?} has no column {index}")))
}

fn number<T: std::str::FromStr>(text: &str, path: &Path) -> Result<T> {
    text.parse()
        .map_err(|_| CliError::malformed(path, format!("`{text}` is not a number")))
}

pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    let manifest_path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| CliError::io(&manifest_path, e))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| CliError::malformed(&manifest_path, e.to_string()))?;

    let goals: std::collections::HashMap<usize, RealVec> =
        manifest.world.agents.iter().map(|a| (a.id, a.goal.clone())).collect();
    let path = dir.join(TRAJECTORIES);
    let file = File::open(&path).map_err(|e| CliError::io(&path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let header = reader.headers().map_err(|e| csv_error(&path, e))?.clone();
    let dim = header.iter().filter(|h| h.starts_with('x')).count();
    if dim == 0 || header.len() != 4 + 2 * dim {
        return Err(CliError::malformed(&path, format!("unexpected header {header:?}")));
    }

    let mut times: Vec<f64> = Vec::new();
    let mut frames: Vec<Vec<AgentState>> = Vec::new();
    let mut statics = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(&path, e))?;
        let t: f64 = number(field(&row, 0, &path)?, &path)?;
        let id: usize = number(field(&row, 1, &path)?, &path)?;
        let kind: AgentKind = field(&row, 2, &path)?
            .parse()
            .map_err(|e: String| CliError::malformed(&path, e))?;
        let mut values = Vec::with_capacity(2 * dim);
        for c in 0..2 * dim {
            values.push(number::<f64>(field(&row, 3 + c, &path)?, &path)?);
        }
        let position = RealVec::new(&values[..dim]);
        let velocity = RealVec::new(&values[dim..]);
        let goal = goals
            .get(&id)
            .cloned()
            .ok_or_else(|| CliError::malformed(&path, format!("agent {id} is not in the manifest")))?;
        let agent = AgentState {
            id,
            position,
            velocity,
            goal,
            kind,
        };
        if kind == AgentKind::Static {
            statics.push(agent);
            continue;
        }
        if times.last() != Some(&t) {
            times.push(t);
            frames.push(Vec::new());
        }
        frames.last_mut().expect("frame was just pushed").push(agent);
    }
    if frames.is_empty() {
        return Err(CliError::malformed(&path, "no kinetic rows"));
    }

    let path = dir.join(EVENTS);
    let file = File::open(&path).map_err(|e| CliError::io(&path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut events = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(&path, e))?;
        events.push(EventRow {
            time: number(field(&row, 0, &path)?, &path)?,
            kind: field(&row, 1, &path)?.to_string(),
            agent: number(field(&row, 2, &path)?, &path)?,
            detail: field(&row, 3, &path)?.to_string(),
        });
    }

    Ok(LoadedRun {
        dir: dir.to_path_buf(),
        manifest,
        times,
        frames,
        statics,
        events,
    })
}

fn detail_value<T: std::str::FromStr>(detail: &str, key: &str) -> std::result::Result<T, String> {
    detail
        .split_whitespace()
        .find_map(|part| part.strip_prefix(key).and_then(|rest| rest.strip_prefix('=')))
        .ok_or_else(|| format!("detail `{detail}` has no `{key}`"))?
        .parse()
        .map_err(|_| format!("bad `{key}` in `{detail}`"))
}

/// Inverse of the `(kind, agent, detail)` encoding used in `events.csv`.
pub fn parse_event(row: &EventRow) -> std::result::Result<Event, String> {
    let agent = row.agent;
    let d = row.detail.as_str();
    let kind = match row.kind.as_str() {
        "collision" => EventKind::Collision {
            a: agent,
            b: detail_value(d, "with")?,
            distance: detail_value(d, "distance")?,
        },
        "converged" => EventKind::Converged { agent },
        "guard" => EventKind::Guard {
            agent,
            guard: d.parse()?,
        },
        "neighbor_switch" => EventKind::NeighborSwitch {
            agent,
            from: detail_value(d, "from")?,
            to: detail_value(d, "to")?,
        },
        "containment_breach" => EventKind::ContainmentBreach {
            agent,
            radius: detail_value(d, "radius")?,
        },
        other => return Err(format!("unknown event kind `{other}`")),
    };
    Ok(Event { time: row.time, kind })
}
