//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails. Runs without the libtest harness so the lines always show.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use ftmp_core::analysis::{
    barrier_bound_audit, canonical_grid_check, estimate_c0, fts_order_fit, fts_order_fit_series, gradient_oracle_sweep,
    halving_study, single_neighbor_scenario, synthetic_fts_series, Domain, HalvingStudy, GRADIENT_ORACLE_STATES,
    HALVING_STEPS,
};
use ftmp_core::barrier::barrier_value;
use ftmp_core::controller::fts_estimate;
use ftmp_core::sim::{run, SimConfig, TrajectoryRecord};
use ftmp_core::world::{preset, preset_time_step, Scenario, ScenarioParams};
use ftmp_core::{BarrierParams, RealVec};

const SEED: u64 = 1;
const T_MAX: f64 = 50.0;
const CONV_TOL: f64 = 1.0e-2;
const CLEARANCE: f64 = 2.0;
const ARENA: f64 = 98.0;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Outcome::new(false, format!("error: {e}"))
    }
}

fn report(number: usize, name: &str, started: Instant, outcome: &Outcome) {
    println!(
        "criterion {number} {name}: {} ({:.2} s) {}",
        if outcome.pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64(),
        outcome.detail
    );
}

fn sim_config(dt: f64) -> SimConfig {
    SimConfig {
        dt,
        t_max: T_MAX,
        conv_tol: CONV_TOL,
        abort_on_collision: false,
    }
}

fn run_preset(label: &str) -> ftmp_core::Result<(Scenario, TrajectoryRecord)> {
    let scenario = preset(label, SEED)?;
    let rec = run(&scenario, &sim_config(preset_time_step(label)?))?;
    Ok((scenario, rec))
}

fn gradient_oracle() -> Outcome {
    match gradient_oracle_sweep(SEED, GRADIENT_ORACLE_STATES, &BarrierParams::default()) {
        Ok((worst, at)) => Outcome::new(
            worst <= 1.0e-5,
            format!(
                "worst relative error {worst:.3e} at ({:.4}, {:.4}), tol 1e-5",
                at[0], at[1]
            ),
        ),
        Err(e) => Outcome::error(e),
    }
}

fn residual_halving(study: &ftmp_core::Result<HalvingStudy>) -> Outcome {
    match study {
        Ok(s) => {
            let pass = s.ratios.len() == HALVING_STEPS.len() - 1 && s.ratios.iter().all(|r| (1.7..=2.3).contains(r));
            let maxima: Vec<String> = s.maxima.iter().map(|m| format!("{m:.4e}")).collect();
            let ratios: Vec<String> = s.ratios.iter().map(|r| format!("{r:.4}")).collect();
            Outcome::new(
                pass,
                format!(
                    "max residuals [{}], ratios [{}], band [1.7, 2.3]",
                    maxima.join(", "),
                    ratios.join(", ")
                ),
            )
        }
        Err(e) => Outcome::error(e),
    }
}

fn barrier_bound(records: &[(&str, &TrajectoryRecord, &BarrierParams)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, rec, bp) in records {
        match barrier_bound_audit(rec, bp) {
            Ok(a) => {
                pass &= a.violations == 0 && a.checked > 0;
                parts.push(format!("{name}: {} checked, {} violations", a.checked, a.violations));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name}: error {e}"));
            }
        }
    }
    Outcome::new(pass, parts.join("; "))
}

fn stationary_grid() -> Outcome {
    let bp = BarrierParams::default();
    match canonical_grid_check(&bp) {
        Ok(g) => {
            let far_root = RealVec::xy(11.9998, 0.0);
            let cell = 30.0 / 400.0;
            let far_found = g
                .low_minima
                .iter()
                .any(|(x, _)| x.distance(&far_root) <= cell * 2f64.sqrt());
            let pass = g.unexplained.is_empty() && g.found_all && far_found && g.printed_root_grad > 0.5;
            Outcome::new(
                pass,
                format!(
                    "{} low minima, {} unexplained, far root found {far_found}, |grad B| at ({:.4}, {:.4}) = {:.4} > 0.5",
                    g.low_minima.len(),
                    g.unexplained.len(),
                    g.printed_root[0],
                    g.printed_root[1],
                    g.printed_root_grad
                ),
            )
        }
        Err(e) => Outcome::error(e),
    }
}

fn reproduction(rec: &TrajectoryRecord) -> Outcome {
    let converged_in_time = rec.convergence_times.iter().all(|t| t.is_some_and(|t| t < T_MAX));
    let at_goals = rec.finished_at_goals();
    let min_distance = rec.min_distance();
    let max_radius = rec.max_radius();
    let pass = converged_in_time && at_goals && min_distance > CLEARANCE && max_radius < ARENA;
    Outcome::new(
        pass,
        format!(
            "{}/{} converged, ended {} at t={:.3}, min distance {:.4} (> {CLEARANCE}), max radius {:.4} (< {ARENA})",
            rec.convergence_times.iter().flatten().count(),
            rec.convergence_times.len(),
            rec.termination,
            rec.times.last().copied().unwrap_or(0.0),
            min_distance,
            max_radius
        ),
    )
}

fn fts_regime(study: &ftmp_core::Result<HalvingStudy>) -> Outcome {
    let (times, values) = synthetic_fts_series(1.0, 1.0, 2.0 / 3.0, 1.0e-3);
    let synthetic = match fts_order_fit_series(&times, &values, 1.0e-6) {
        Ok(b) => b,
        Err(e) => return Outcome::error(e),
    };
    let Ok(study) = study else {
        return Outcome::new(false, "single-neighbor run unavailable");
    };
    let rec = &study.records[0];
    let scenario = single_neighbor_scenario(&ScenarioParams::default());
    let bp = scenario.config.barrier;
    let cp = scenario.config.control;
    let agent = &scenario.config.agents[0];
    let neighbor = &scenario.config.agents[1];

    let fitted = match fts_order_fit(rec, agent.id, &bp) {
        Ok(b) => b,
        Err(e) => return Outcome::error(e),
    };
    let bound = estimate_c0(
        &agent.goal,
        &neighbor.position,
        &bp,
        &Domain::new(RealVec::xy(-20.0, -20.0), RealVec::xy(20.0, 20.0)),
        0.5,
        20_000,
    )
    .and_then(|c0| {
        let v0 = barrier_value(&agent.position, &agent.goal, &neighbor.position, &bp)?.value;
        fts_estimate(v0, &cp, &bp, c0)
    });
    let bound = match bound {
        Ok(b) => b,
        Err(e) => return Outcome::error(e),
    };
    let t_conv = rec.convergence_times[0];
    let pass = (synthetic - 2.0 / 3.0).abs() <= 1.0e-2
        && (0.5..=0.85).contains(&fitted)
        && t_conv.is_some_and(|t| t <= bound.settling_time_bound);
    Outcome::new(
        pass,
        format!(
            "synthetic beta {synthetic:.5} (2/3 +- 1e-2), run beta {fitted:.4} in [0.5, 0.85], convergence {} <= bound {:.4} (c0 {:.4e})",
            t_conv.map_or("never".into(), |t| format!("{t:.3}")),
            bound.settling_time_bound,
            bound.c0_estimate
        ),
    )
}

/// The `ftmp` binary next to this test's `deps` directory, built on demand
/// when the suite runs on its own.
fn cli_binary() -> Result<PathBuf, String> {
    let exe = std::env::current_exe().map_err(|e| e.to_string())?;
    let profile_dir = exe
        .parent()
        .and_then(Path::parent)
        .ok_or("cannot locate the target directory")?;
    let bin = profile_dir.join(format!("ftmp{}", std::env::consts::EXE_SUFFIX));
    if !bin.exists() {
        let cargo = std::env::var_os("CARGO").unwrap_or_else(|| "cargo".into());
        let mut build = Command::new(cargo);
        build.args(["build", "-q", "-p", "ftmp", "--bin", "ftmp"]);
        if profile_dir.file_name().is_some_and(|n| n == "release") {
            build.arg("--release");
        }
        let status = build.status().map_err(|e| e.to_string())?;
        if !status.success() || !bin.exists() {
            return Err(format!("could not build {}", bin.display()));
        }
    }
    Ok(bin)
}

fn cli_run(bin: &Path, out: &Path) -> Result<(), String> {
    let status = Command::new(bin)
        .args(["run", "--scenario", "example1", "--seed", "1", "--out"])
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(format!(
            "exit {:?}: {}",
            status.status.code(),
            String::from_utf8_lossy(&status.stderr)
        ))
    }
}

fn manifest_digest(dir: &Path) -> Result<String, String> {
    let text = std::fs::read_to_string(dir.join("manifest.json")).map_err(|e| e.to_string())?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    value["record_digest"]
        .as_str()
        .map(str::to_owned)
        .ok_or_else(|| "manifest has no record_digest".into())
}

fn determinism() -> Outcome {
    let result = (|| -> Result<Outcome, String> {
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
        let bin = cli_binary()?;
        cli_run(&bin, &a)?;
        cli_run(&bin, &b)?;
        let ta = std::fs::read(a.join("trajectories.csv")).map_err(|e| e.to_string())?;
        let tb = std::fs::read(b.join("trajectories.csv")).map_err(|e| e.to_string())?;
        let (da, db) = (manifest_digest(&a)?, manifest_digest(&b)?);
        Ok(Outcome::new(
            ta == tb && da == db,
            format!(
                "trajectories.csv {} bytes, identical {}; digests equal {} ({}...)",
                ta.len(),
                ta == tb,
                da == db,
                &da[..16.min(da.len())]
            ),
        ))
    })();
    result.unwrap_or_else(Outcome::error)
}

fn equivariance(original: &TrajectoryRecord) -> Outcome {
    let mut scenario = match preset("example1", SEED) {
        Ok(s) => s,
        Err(e) => return Outcome::error(e),
    };
    scenario.config = scenario.config.rotated_quarter();
    let rotated = match run(&scenario, &sim_config(1.0e-3)) {
        Ok(r) => r,
        Err(e) => return Outcome::error(e),
    };
    let inverse = |v: &RealVec| v.rotate_quarter().rotate_quarter().rotate_quarter();

    let neighbor_mismatch = original
        .steps
        .iter()
        .zip(&rotated.steps)
        .position(|(a, b)| a.iter().zip(b).any(|(p, q)| p.neighbor != q.neighbor));
    let compared = neighbor_mismatch.map_or(original.frames.len().min(rotated.frames.len()), |k| k + 1);
    let mut deviation: f64 = 0.0;
    for (fa, fb) in original.frames.iter().zip(&rotated.frames).take(compared) {
        for (a, b) in fa.iter().zip(fb) {
            deviation = deviation.max(a.position.distance(&inverse(&b.position)));
        }
    }
    let same_length = original.frames.len() == rotated.frames.len();
    let pass = deviation <= 1.0e-9 && (neighbor_mismatch.is_some() || same_length);
    Outcome::new(
        pass,
        format!(
            "{compared} samples compared, max deviation {deviation:.3e} (tol 1e-9), neighbor tie-break divergence {}",
            neighbor_mismatch.map_or("none".into(), |k| format!("at step {k}"))
        ),
    )
}

fn main() -> ExitCode {
    let mut outcomes = Vec::new();

    let t = Instant::now();
    let o = gradient_oracle();
    let o = if t.elapsed().as_secs_f64() < 5.0 {
        o
    } else {
        Outcome::new(false, format!("{} (over 5 s)", o.detail))
    };
    report(1, "gradient oracle", t, &o);
    outcomes.push(o);

    let t = Instant::now();
    let scenario = single_neighbor_scenario(&ScenarioParams::default());
    let study = halving_study(&scenario, &sim_config(HALVING_STEPS[0]), &HALVING_STEPS);
    let o = residual_halving(&study);
    let o = if t.elapsed().as_secs_f64() < 30.0 {
        o
    } else {
        Outcome::new(false, format!("{} (over 30 s)", o.detail))
    };
    report(2, "descent identity halving", t, &o);
    outcomes.push(o);

    let t = Instant::now();
    let example1 = run_preset("example1");
    let e1_time = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let example2 = run_preset("example2");
    let e2_time = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let o = match (&study, &example1, &example2) {
        (Ok(s), Ok((s1, r1)), Ok((s2, r2))) => {
            let mut records: Vec<(&str, &TrajectoryRecord, &BarrierParams)> = s
                .records
                .iter()
                .map(|r| ("single_neighbor", r, &scenario.config.barrier))
                .collect();
            records.push(("example1", r1, &s1.config.barrier));
            records.push(("example2", r2, &s2.config.barrier));
            barrier_bound(&records)
        }
        _ => Outcome::new(false, "a prerequisite run failed"),
    };
    report(3, "barrier upper bound", t, &o);
    outcomes.push(o);

    let t = Instant::now();
    let o = stationary_grid();
    let o = if t.elapsed().as_secs_f64() < 10.0 {
        o
    } else {
        Outcome::new(false, format!("{} (over 10 s)", o.detail))
    };
    report(4, "stationary points", t, &o);
    outcomes.push(o);

    for (number, name, result, elapsed, limit) in [
        (5, "example1 reproduction", &example1, e1_time, 120.0),
        (6, "example2 reproduction", &example2, e2_time, 300.0),
    ] {
        let o = match result {
            Ok((_, rec)) => reproduction(rec),
            Err(e) => Outcome::error(e),
        };
        let o = if elapsed < limit {
            o
        } else {
            Outcome::new(false, format!("{} (over {limit} s)", o.detail))
        };
        println!(
            "criterion {number} {name}: {} ({elapsed:.2} s) {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        outcomes.push(o);
    }

    let t = Instant::now();
    let o = fts_regime(&study);
    report(7, "finite-time regime", t, &o);
    outcomes.push(o);

    let t = Instant::now();
    let o = determinism();
    report(8, "determinism", t, &o);
    outcomes.push(o);

    let t = Instant::now();
    let o = match &example1 {
        Ok((_, rec)) => equivariance(rec),
        Err(e) => Outcome::error(e),
    };
    report(9, "rotation equivariance", t, &o);
    outcomes.push(o);

    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("acceptance: {passed}/{} criteria pass", outcomes.len());
    if passed == outcomes.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
