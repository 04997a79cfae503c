//! Browser bindings: an interactive simulation, a barrier heat map with its
//! stationary points, and the settling-time bound for a single agent.
//!
//! Every export is a thin wrapper over a plain function in this file, so the
//! logic is tested natively.

use ftmp_core::analysis::{estimate_c0, Domain};
use ftmp_core::barrier::{barrier_value, stationary_points};
use ftmp_core::controller::fts_estimate;
use ftmp_core::sim::step;
use ftmp_core::world::{preset_with, random_scenario, ScenarioParams};
use ftmp_core::{AgentState, BarrierParams, ControlParams, RealVec, WorldConfig};
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
pub struct Simulation {
    roster: Vec<AgentState>,
    barrier: BarrierParams,
    control: ControlParams,
    arena_radius: f64,
    dt: f64,
    time: f64,
    status: String,
}

impl Simulation {
    pub fn build(scenario: &str, count: usize, seed: u64, gain: f64, dt: f64) -> Result<Simulation, String> {
        if !(dt > 0.0 && gain > 0.0) {
            return Err("gain and dt must be positive".into());
        }
        let mut params = ScenarioParams::default();
        params.control.gain = gain;
        let built = match scenario {
            "random" => random_scenario(count, seed, &params),
            label => preset_with(label, seed, &params),
        }
        .map_err(|e| e.to_string())?;
        let WorldConfig {
            agents,
            barrier,
            control,
            arena_radius,
            ..
        } = built.config;
        Ok(Simulation {
            roster: agents,
            barrier,
            control,
            arena_radius,
            dt,
            time: 0.0,
            status: "running".into(),
        })
    }

    /// Advances up to `steps` Euler steps and stops early on a fault.
    pub fn advance(&mut self, steps: usize) {
        for _ in 0..steps {
            if self.status != "running" {
                return;
            }
            match step(&self.roster, &self.barrier, &self.control, self.dt) {
                Ok((next, _)) => {
                    self.roster = next;
                    self.time += self.dt;
                    if self
                        .roster
                        .iter()
                        .filter(|a| a.is_kinetic())
                        .all(|a| a.distance_to_goal() <= 1.0e-2)
                    {
                        self.status = "converged".into();
                    }
                }
                Err(e) => self.status = format!("fault: {e}"),
            }
        }
    }

    fn flatten(&self, kinetic: bool, pick: impl Fn(&AgentState) -> &RealVec) -> Vec<f64> {
        self.roster
            .iter()
            .filter(|a| a.is_kinetic() == kinetic)
            .flat_map(|a| pick(a).as_slice()[..2].to_vec())
            .collect()
    }

    fn closest_pair(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.roster.iter().enumerate() {
            for b in &self.roster[i + 1..] {
                if a.is_kinetic() || b.is_kinetic() {
                    best = best.min(a.position.distance(&b.position));
                }
            }
        }
        best
    }
}

#[wasm_bindgen]
impl Simulation {
    /// `scenario` is `example1`, `example2` or `random` (which uses `count`).
    #[wasm_bindgen(constructor)]
    pub fn new(scenario: &str, count: usize, seed: u64, gain: f64, dt: f64) -> Result<Simulation, JsError> {
        Simulation::build(scenario, count, seed, gain, dt).map_err(|e| JsError::new(&e))
    }

    pub fn step(&mut self, steps: usize) {
        self.advance(steps);
    }

    /// Kinetic positions as `[x0, y0, x1, y1, ...]`.
    pub fn positions(&self) -> Vec<f64> {
        self.flatten(true, |a| &a.position)
    }

    pub fn goals(&self) -> Vec<f64> {
        self.flatten(true, |a| &a.goal)
    }

    pub fn statics(&self) -> Vec<f64> {
        self.flatten(false, |a| &a.position)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn status(&self) -> String {
        self.status.clone()
    }

    pub fn arena_radius(&self) -> f64 {
        self.arena_radius
    }

    pub fn clearance(&self) -> f64 {
        self.barrier.clearance
    }

    pub fn min_distance(&self) -> f64 {
        self.closest_pair()
    }
}

/// `log10(B)` on an `n x n` grid over `[-extent, extent]^2`, row-major from
/// the top-left corner. Cells inside the clearance disk are NaN.
pub fn barrier_grid(goal: (f64, f64), neighbor: (f64, f64), extent: f64, n: usize) -> Vec<f64> {
    let bp = BarrierParams::default();
    let tau = RealVec::xy(goal.0, goal.1);
    let x_j = RealVec::xy(neighbor.0, neighbor.1);
    let cell = 2.0 * extent / n as f64;
    let mut out = Vec::with_capacity(n * n);
    for row in 0..n {
        let y = extent - (row as f64 + 0.5) * cell;
        for col in 0..n {
            let x = RealVec::xy(-extent + (col as f64 + 0.5) * cell, y);
            let value = match barrier_value(&x, &tau, &x_j, &bp) {
                Ok(e) if e.in_safe_region => e.value.max(1.0e-6).log10(),
                _ => f64::NAN,
            };
            out.push(value);
        }
    }
    out
}

/// Non-goal zeros of the barrier gradient as `[x0, y0, ...]`.
pub fn spurious_points(goal: (f64, f64), neighbor: (f64, f64)) -> Result<Vec<f64>, String> {
    let points = stationary_points(
        &RealVec::xy(goal.0, goal.1),
        &RealVec::xy(neighbor.0, neighbor.1),
        &BarrierParams::default(),
    )
    .map_err(|e| e.to_string())?;
    Ok(points.iter().flat_map(|p| [p.location[0], p.location[1]]).collect())
}

/// `[beta, c0, c, V0, settling time bound]` for an agent at `start`.
pub fn settling_bound(
    start: (f64, f64),
    goal: (f64, f64),
    neighbor: (f64, f64),
    gain: f64,
) -> Result<Vec<f64>, String> {
    let bp = BarrierParams::default();
    let cp = ControlParams {
        gain,
        ..ControlParams::default()
    };
    let tau = RealVec::xy(goal.0, goal.1);
    let x_j = RealVec::xy(neighbor.0, neighbor.1);
    let x = RealVec::xy(start.0, start.1);
    let half = 2.0 * x.distance(&tau).max(x_j.distance(&tau)) + 2.0 * bp.clearance;
    let domain = Domain::new(
        RealVec::xy(goal.0 - half, goal.1 - half),
        RealVec::xy(goal.0 + half, goal.1 + half),
    );
    let result = (|| {
        let c0 = estimate_c0(&tau, &x_j, &bp, &domain, 0.5, 20_000)?;
        let v0 = barrier_value(&x, &tau, &x_j, &bp)?.value;
        let fts = fts_estimate(v0, &cp, &bp, c0)?;
        Ok::<_, ftmp_core::Error>(vec![fts.beta, c0, fts.c, v0, fts.settling_time_bound])
    })();
    result.map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = barrierGrid)]
pub fn barrier_grid_js(gx: f64, gy: f64, nx: f64, ny: f64, extent: f64, n: usize) -> Vec<f64> {
    barrier_grid((gx, gy), (nx, ny), extent, n)
}

#[wasm_bindgen(js_name = spuriousPoints)]
pub fn spurious_points_js(gx: f64, gy: f64, nx: f64, ny: f64) -> Result<Vec<f64>, JsError> {
    spurious_points((gx, gy), (nx, ny)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = settlingBound)]
pub fn settling_bound_js(sx: f64, sy: f64, gx: f64, gy: f64, nx: f64, ny: f64, gain: f64) -> Result<Vec<f64>, JsError> {
    settling_bound((sx, sy), (gx, gy), (nx, ny), gain).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulation_steps_and_reports() {
        let mut sim = Simulation::build("random", 1, 3, 1.0, 0.01).unwrap();
        assert_eq!(sim.positions().len(), 2);
        assert_eq!(sim.statics().len(), 2 * 308);
        let start = sim.positions();
        sim.advance(10);
        assert!((sim.time() - 0.1).abs() < 1e-12);
        assert_ne!(sim.positions(), start);
        sim.advance(5000);
        assert_eq!(sim.status(), "converged");
        let t = sim.time();
        sim.advance(10);
        assert_eq!(sim.time(), t);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(Simulation::build("example9", 4, 1, 1.0, 1e-3).is_err());
        assert!(Simulation::build("example1", 4, 1, 1.0, 0.0).is_err());
        assert!(Simulation::build("random", 0, 1, 1.0, 1e-3).is_err());
    }

    #[test]
    fn grid_is_zero_free_and_masks_the_neighbor() {
        let grid = barrier_grid((0.0, 0.0), (4.0, 0.0), 10.0, 40);
        assert_eq!(grid.len(), 1600);
        // Cell centred at (4.25, 0.25) lies inside the clearance disk.
        let masked = 19 * 40 + 28;
        assert!(grid[masked].is_nan());
        assert!(grid.iter().filter(|v| v.is_finite()).count() > 1500);
    }

    #[test]
    fn canonical_spurious_point() {
        let p = spurious_points((0.0, 0.0), (4.0, 0.0)).unwrap();
        assert_eq!(p.len(), 2);
        assert!((p[0] - 11.9998).abs() < 1e-9 && p[1].abs() < 1e-12);
        assert!(spurious_points((1.0, 1.0), (1.0, 1.0)).is_err());
    }

    #[test]
    fn settling_bound_matches_core() {
        let v = settling_bound((10.0, 0.0), (0.0, 0.0), (-5.0, 3.0), 1.0).unwrap();
        assert!((v[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!(v[1] > 0.0 && v[4] > 0.0 && v[4].is_finite());
        let faster = settling_bound((10.0, 0.0), (0.0, 0.0), (-5.0, 3.0), 2.0).unwrap();
        assert!((faster[4] - v[4] / 2.0).abs() < 1e-9 * v[4]);
    }
}
