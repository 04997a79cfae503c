//! Numerical audits of the barrier and controller: finite-difference gradient
//! oracles, the descent-identity residual scan, the `B <= eps |x - tau|^2`
//! audit, sampling estimates of the gradient lower bound `c0`, finite-time
//! exponent fits and a grid search for stationary points.
//!
//! [`verify_lemmas`] bundles the simulation-free checks into one battery.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::barrier::{barrier_value, lemma3_bound_holds, raw_gradient, stationary_points};
use crate::controller::{control_law, damping_term, lyapunov_rate, Guard};
use crate::error::{Error, Result};
use crate::model::{AgentState, BarrierParams, ControlParams, RealVec, WorldConfig};
use crate::sim::{run, step, SimConfig, StepInfo, TrajectoryRecord};
use crate::world::{nearest_neighbor, Scenario, ScenarioParams};

/// Only samples with `V <= TAIL_FRACTION * V(0)` enter the exponent fit, so
/// the fit sees the regime close to the goal.
pub const TAIL_FRACTION: f64 = 0.1;

pub const MIN_FIT_SAMPLES: usize = 50;

/// Central differences of a scalar field, one component at a time.
pub fn finite_difference_gradient<F>(f: F, x: &RealVec, h: f64) -> Result<RealVec>
where
    F: Fn(&RealVec) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step h = {h} must be positive")));
    }
    let mut out = Vec::with_capacity(x.dim());
    for i in 0..x.dim() {
        let plus = f(&x.with_component(i, x[i] + h)).map_err(|_| Error::StencilOutOfDomain { component: i })?;
        let minus = f(&x.with_component(i, x[i] - h)).map_err(|_| Error::StencilOutOfDomain { component: i })?;
        out.push((plus - minus) / (2.0 * h));
    }
    Ok(RealVec::new(&out))
}

/// Finite-difference versions of `grad_xi` and `grad_xj`.
pub fn barrier_gradient_oracle(
    x_i: &RealVec,
    tau_i: &RealVec,
    x_j: &RealVec,
    bp: &BarrierParams,
    h: f64,
) -> Result<(RealVec, RealVec)> {
    let gi = finite_difference_gradient(|x| barrier_value(x, tau_i, x_j, bp).map(|e| e.value), x_i, h)?;
    let gj = finite_difference_gradient(|x| barrier_value(x_i, tau_i, x, bp).map(|e| e.value), x_j, h)?;
    Ok((gi, gj))
}

fn neighbor_position(rec: &TrajectoryRecord, k: usize, id: usize) -> Option<&AgentState> {
    rec.frames[k]
        .iter()
        .find(|a| a.id == id)
        .or_else(|| rec.statics.iter().find(|a| a.id == id))
}

/// `B_i` at samples `k` and `k + 1`, both against the neighbor used in step `k`.
fn step_values(
    rec: &TrajectoryRecord,
    k: usize,
    i: usize,
    bp: &BarrierParams,
) -> Result<(crate::barrier::BarrierEvaluation, f64)> {
    let info = rec.steps[k][i];
    let missing = || Error::InvalidArgument(format!("neighbor {} missing from record", info.neighbor));
    let before = &rec.frames[k][i];
    let after = &rec.frames[k + 1][i];
    let j_before = neighbor_position(rec, k, info.neighbor).ok_or_else(missing)?;
    let j_after = neighbor_position(rec, k + 1, info.neighbor).ok_or_else(missing)?;
    let e0 = barrier_value(&before.position, &before.goal, &j_before.position, bp)?;
    let e1 = barrier_value(&after.position, &after.goal, &j_after.position, bp)?;
    Ok((e0, e1.value))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub agent: usize,
    pub step: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualScan {
    pub residuals: Vec<Residual>,
    pub max: f64,
    pub mean: f64,
    /// `C` in `residual <= C dt`.
    pub coefficient: f64,
    pub excluded_switch: usize,
    pub excluded_guard: usize,
    /// Steps where either endpoint sat outside the barrier's domain.
    pub excluded_domain: usize,
}

/// Per-step residual of the descent identity,
/// `|(B(t + dt) - B(t)) / dt + k1 |grad B(t)|^(alpha + 1)|`.
///
/// Steps where the agent switched neighbor, where a guard broke the identity
/// or where the barrier is undefined at either end are skipped and counted.
pub fn lemma2_residual_scan(rec: &TrajectoryRecord, bp: &BarrierParams, cp: &ControlParams) -> Result<ResidualScan> {
    let dt = rec.sim.dt;
    let mut residuals = Vec::new();
    let (mut excluded_switch, mut excluded_guard, mut excluded_domain) = (0, 0, 0);
    for k in 0..rec.steps.len() {
        for i in 0..rec.steps[k].len() {
            let info = rec.steps[k][i];
            if k > 0 && rec.steps[k - 1][i].neighbor != info.neighbor {
                excluded_switch += 1;
                continue;
            }
            if !info.guard.preserves_descent_identity() {
                excluded_guard += 1;
                continue;
            }
            let (e0, v1) = match step_values(rec, k, i, bp) {
                Ok(values) => values,
                Err(Error::DenominatorUnderflow { .. } | Error::CoincidentAgents) => {
                    excluded_domain += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let predicted = -cp.gain * e0.grad_xi.norm().powf(cp.alpha + 1.0);
            let value = ((v1 - e0.value) / dt - predicted).abs();
            residuals.push(Residual {
                agent: rec.frames[k][i].id,
                step: k,
                value,
            });
        }
    }
    let max = residuals.iter().map(|r| r.value).fold(0.0, f64::max);
    let mean = if residuals.is_empty() {
        0.0
    } else {
        residuals.iter().map(|r| r.value).sum::<f64>() / residuals.len() as f64
    };
    Ok(ResidualScan {
        residuals,
        max,
        mean,
        coefficient: max / dt,
        excluded_switch,
        excluded_guard,
        excluded_domain,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierBoundAudit {
    pub checked: usize,
    pub violations: usize,
    /// Samples where the nearest neighbor sat inside `d_c`, outside the
    /// bound's domain.
    pub out_of_domain: usize,
    /// Largest `B / (eps |x - tau|^2)` seen.
    pub worst_ratio: f64,
}

/// Checks `B <= eps |x - tau|^2` for every kinetic agent at every sample,
/// against its nearest neighbor at that sample.
pub fn barrier_bound_audit(rec: &TrajectoryRecord, bp: &BarrierParams) -> Result<BarrierBoundAudit> {
    let mut audit = BarrierBoundAudit {
        checked: 0,
        violations: 0,
        out_of_domain: 0,
        worst_ratio: 0.0,
    };
    for k in 0..rec.frames.len() {
        let roster = rec.roster(k);
        for agent in &rec.frames[k] {
            let j = nearest_neighbor(agent, &roster)?;
            match lemma3_bound_holds(&agent.position, &agent.goal, &j.position, bp) {
                Ok(ok) => {
                    audit.checked += 1;
                    if !ok {
                        audit.violations += 1;
                    }
                    let d2 = agent.distance_to_goal().powi(2);
                    if d2 > 0.0 {
                        let b = barrier_value(&agent.position, &agent.goal, &j.position, bp)?.value;
                        audit.worst_ratio = audit.worst_ratio.max(b / (bp.epsilon * d2));
                    }
                }
                Err(Error::DomainViolation { .. }) | Err(Error::DenominatorUnderflow { .. }) => {
                    audit.out_of_domain += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(audit)
}

/// Axis-aligned sampling box.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub lo: RealVec,
    pub hi: RealVec,
}

impl Domain {
    pub fn new(lo: RealVec, hi: RealVec) -> Self {
        Domain { lo, hi }
    }

    pub fn contains(&self, x: &RealVec) -> bool {
        (0..x.dim()).all(|i| self.lo[i] <= x[i] && x[i] <= self.hi[i])
    }
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut fraction = 1.0 / base as f64;
    while index > 0 {
        result += (index % base) as f64 * fraction;
        index /= base;
        fraction /= base as f64;
    }
    result
}

/// `index`-th point of the Halton sequence in `domain` (index 0 is skipped,
/// it maps to the lower corner).
pub fn halton_point(domain: &Domain, index: u64) -> RealVec {
    RealVec::from_fn(domain.lo.dim(), |i| {
        let u = radical_inverse(index + 1, PRIMES[i % PRIMES.len()]);
        domain.lo[i] + u * (domain.hi[i] - domain.lo[i])
    })
}

/// Sampling estimate of the constant in `|grad B| >= c0 |x - tau_i|`.
///
/// Samples are drawn from a Halton sequence, so a larger sample count always
/// sees a superset of the points. Balls of `exclusion_radius` around the
/// stationary points are skipped, as is everything within
/// `d_c + exclusion_radius` of the neighbor.
pub fn estimate_c0(
    tau_i: &RealVec,
    x_j: &RealVec,
    bp: &BarrierParams,
    domain: &Domain,
    exclusion_radius: f64,
    samples: usize,
) -> Result<f64> {
    if !domain.contains(tau_i) {
        return Err(Error::InvalidArgument("sampling domain must contain the goal".into()));
    }
    if !(exclusion_radius > 0.0) {
        return Err(Error::InvalidArgument("exclusion radius must be positive".into()));
    }
    if samples < 10_000 {
        return Err(Error::InvalidArgument(format!(
            "need at least 10^4 samples, got {samples}"
        )));
    }
    let excluded: Vec<RealVec> = stationary_points(tau_i, x_j, bp)?
        .into_iter()
        .map(|s| s.location)
        .collect();
    let mut best = f64::INFINITY;
    for index in 0..samples as u64 {
        let x = halton_point(domain, index);
        if x.distance(x_j) <= bp.clearance + exclusion_radius
            || excluded.iter().any(|s| s.distance(&x) < exclusion_radius)
        {
            continue;
        }
        let offset = x.distance(tau_i);
        if offset == 0.0 {
            continue;
        }
        let grad = barrier_value(&x, tau_i, x_j, bp)?.grad_xi.norm();
        best = best.min(grad / offset);
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::DegenerateDomain)
    }
}

/// Least-squares slope of `log(-dV/dt)` against `log V` over the tail of a
/// descending series. `floor` drops samples that have effectively converged.
pub fn fts_order_fit_series(times: &[f64], values: &[f64], floor: f64) -> Result<f64> {
    let pairs: Vec<(f64, f64, f64)> = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| (t[1] - t[0], v[0], v[1]))
        .collect();
    fit_pairs(&pairs, floor)
}

/// `(dt, V_k, V_{k+1})` triples; both values are taken against the same
/// neighbor.
fn fit_pairs(pairs: &[(f64, f64, f64)], floor: f64) -> Result<f64> {
    let start = pairs
        .first()
        .map(|p| p.1)
        .ok_or_else(|| Error::InsufficientData("empty series".into()))?;
    let cap = TAIL_FRACTION * start;
    let points: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|&&(_, v0, v1)| v1 < v0 && v1 > floor && v0 <= cap)
        .map(|&(dt, v0, v1)| (((v0 + v1) / 2.0).ln(), ((v0 - v1) / dt).ln()))
        .collect();
    if points.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} descending tail samples, need {MIN_FIT_SAMPLES}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("no spread in log V".into()));
    }
    Ok(sxy / sxx)
}

/// Fitted exponent `beta` in `dV/dt = -c V^beta` for one agent of a record.
pub fn fts_order_fit(rec: &TrajectoryRecord, agent: usize, bp: &BarrierParams) -> Result<f64> {
    let i = rec
        .kinetic_index(agent)
        .ok_or_else(|| Error::InvalidArgument(format!("agent {agent} is not kinetic in this record")))?;
    if rec.convergence_times[i].is_none() {
        return Err(Error::InsufficientData(format!("agent {agent} never converged")));
    }
    let mut pairs = Vec::with_capacity(rec.steps.len());
    for k in 0..rec.steps.len() {
        match step_values(rec, k, i, bp) {
            Ok((e0, v1)) => pairs.push((rec.sim.dt, e0.value, v1)),
            Err(Error::DenominatorUnderflow { .. } | Error::CoincidentAgents) => break,
            Err(e) => return Err(e),
        }
    }
    fit_pairs(&pairs, rec.sim.conv_tol.powi(2))
}

/// Recomputes the per-step neighbor and guard of a record by replaying
/// [`step`] on every sample. Also returns the largest deviation between the
/// replayed and recorded next positions, which is exactly zero for an
/// untouched record.
pub fn replay_steps(
    rec: &TrajectoryRecord,
    bp: &BarrierParams,
    cp: &ControlParams,
) -> Result<(Vec<Vec<StepInfo>>, f64)> {
    let mut steps = Vec::with_capacity(rec.frames.len().saturating_sub(1));
    let mut deviation: f64 = 0.0;
    for k in 0..rec.frames.len().saturating_sub(1) {
        let (next, decisions) = step(&rec.roster(k), bp, cp, rec.sim.dt)?;
        for (replayed, recorded) in next.iter().zip(&rec.frames[k + 1]) {
            deviation = deviation.max(replayed.position.distance(&recorded.position));
        }
        steps.push(
            decisions
                .iter()
                .map(|d| StepInfo {
                    neighbor: d.neighbor,
                    guard: d.decision.guard_fired,
                })
                .collect(),
        );
    }
    Ok((steps, deviation))
}

/// Interior local minima of `|grad_xi|` on an `n x n` grid over a planar box.
/// Nodes inside the clearance disk are skipped, as are nodes with a skipped
/// neighbor. Returns `(location, |grad|)` pairs.
pub fn grid_gradient_minima(
    tau_i: &RealVec,
    x_j: &RealVec,
    bp: &BarrierParams,
    domain: &Domain,
    n: usize,
) -> Vec<(RealVec, f64)> {
    let hx = (domain.hi[0] - domain.lo[0]) / n as f64;
    let hy = (domain.hi[1] - domain.lo[1]) / n as f64;
    let node = |i: usize, j: usize| RealVec::xy(domain.lo[0] + i as f64 * hx, domain.lo[1] + j as f64 * hy);
    let field: Vec<Option<f64>> = (0..n * n)
        .map(|idx| {
            let x = node(idx / n, idx % n);
            match barrier_value(&x, tau_i, x_j, bp) {
                Ok(e) if e.in_safe_region => Some(e.grad_xi.norm()),
                _ => None,
            }
        })
        .collect();
    let at = |i: usize, j: usize| field[i * n + j];
    let mut minima = Vec::new();
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let Some(center) = at(i, j) else { continue };
            let mut is_min = true;
            'scan: for di in [-1i64, 0, 1] {
                for dj in [-1i64, 0, 1] {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    match at((i as i64 + di) as usize, (j as i64 + dj) as usize) {
                        Some(v) if v >= center => {}
                        _ => {
                            is_min = false;
                            break 'scan;
                        }
                    }
                }
            }
            if is_min {
                minima.push((node(i, j), center));
            }
        }
    }
    minima
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Info,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
        }
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// One line of an audit report.
#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub check: String,
    pub status: Status,
    pub worst: f64,
    pub location: String,
}

impl Finding {
    pub fn new(check: &str, ok: bool, worst: f64, location: impl Into<String>) -> Self {
        Finding {
            check: check.to_string(),
            status: Status::from_bool(ok),
            worst,
            location: location.into(),
        }
    }

    pub fn info(check: &str, worst: f64, location: impl Into<String>) -> Self {
        Finding {
            check: check.to_string(),
            status: Status::Info,
            worst,
            location: location.into(),
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} worst={:e} at={}",
            self.check,
            self.status.as_str(),
            self.worst,
            self.location
        )
    }
}

pub fn all_pass(findings: &[Finding]) -> bool {
    findings.iter().all(|f| f.status != Status::Fail)
}

/// Random state with `|x_i - x_j| >= d_c + margin`, all inside `[-20, 20]^2`.
fn random_safe_state(rng: &mut ChaCha8Rng, bp: &BarrierParams, margin: f64) -> (RealVec, RealVec, RealVec) {
    let point = |rng: &mut ChaCha8Rng| RealVec::xy(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
    loop {
        let x_i = point(rng);
        let tau = point(rng);
        let x_j = point(rng);
        if x_i.distance(&x_j) >= bp.clearance + margin {
            return (x_i, tau, x_j);
        }
    }
}

fn rotate(v: &RealVec, angle: f64) -> RealVec {
    let (s, c) = angle.sin_cos();
    RealVec::xy(c * v[0] - s * v[1], s * v[0] + c * v[1])
}

fn fmt_vec(v: &RealVec) -> String {
    let parts: Vec<String> = v.iter().map(|c| format!("{c:.6}")).collect();
    format!("({})", parts.join(","))
}

pub const GRADIENT_ORACLE_STATES: usize = 1000;
pub const GRADIENT_ORACLE_STEP: f64 = 1.0e-6;
pub const GRADIENT_ORACLE_TOL: f64 = 1.0e-5;

/// `(worst relative error, location)` of analytic vs finite-difference
/// gradients over `count` random safe-region states.
pub fn gradient_oracle_sweep(seed: u64, count: usize, bp: &BarrierParams) -> Result<(f64, RealVec)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = (0.0, RealVec::zeros(2));
    for _ in 0..count {
        let (x_i, tau, x_j) = random_safe_state(&mut rng, bp, 0.05);
        let e = barrier_value(&x_i, &tau, &x_j, bp)?;
        let (fd_i, fd_j) = barrier_gradient_oracle(&x_i, &tau, &x_j, bp, GRADIENT_ORACLE_STEP)?;
        let err_i = (&e.grad_xi - &fd_i).norm() / e.grad_xi.norm().max(f64::MIN_POSITIVE);
        let err_j = (&e.grad_xj - &fd_j).norm() / e.grad_xj.norm().max(f64::MIN_POSITIVE);
        let err = err_i.max(err_j);
        if err > worst.0 {
            worst = (err, x_i);
        }
    }
    Ok(worst)
}

/// Canonical stationary-point instance: goal at the origin, neighbor at
/// `(4, 0)`.
pub fn canonical_grid_check(bp: &BarrierParams) -> Result<GridCheck> {
    let tau = RealVec::xy(0.0, 0.0);
    let x_j = RealVec::xy(4.0, 0.0);
    let domain = Domain::new(RealVec::xy(-12.0, -15.0), RealVec::xy(18.0, 15.0));
    let n = 400;
    let cell = (domain.hi[0] - domain.lo[0]) / n as f64;
    let roots: Vec<RealVec> = stationary_points(&tau, &x_j, bp)?
        .into_iter()
        .map(|s| s.location)
        .collect();
    let mut known = vec![tau.clone()];
    known.extend(roots.iter().cloned());
    let minima = grid_gradient_minima(&tau, &x_j, bp, &domain, n);
    let low: Vec<_> = minima.iter().filter(|(_, g)| *g < 1.0e-3).cloned().collect();
    let reach = cell * 2f64.sqrt();
    let unexplained: Vec<RealVec> = low
        .iter()
        .filter(|(x, _)| known.iter().all(|k| k.distance(x) > reach))
        .map(|(x, _)| x.clone())
        .collect();
    let found_all = known.iter().all(|k| low.iter().any(|(x, _)| x.distance(k) <= reach));

    let d = x_j.distance(&tau);
    let printed = x_j.add_scaled(2.0 * (d + bp.clearance - 1.0 / bp.epsilon) / d, &(&tau - &x_j));
    let printed_grad = barrier_value(&printed, &tau, &x_j, bp)?.grad_xi.norm();
    Ok(GridCheck {
        roots,
        low_minima: low,
        unexplained,
        found_all,
        printed_root: printed,
        printed_root_grad: printed_grad,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCheck {
    pub roots: Vec<RealVec>,
    pub low_minima: Vec<(RealVec, f64)>,
    pub unexplained: Vec<RealVec>,
    pub found_all: bool,
    /// `x_j + 2 (|tau - x_j| + d_c - 1/eps) (tau - x_j)/|tau - x_j|`.
    pub printed_root: RealVec,
    pub printed_root_grad: f64,
}

/// Simulation-free verification battery. Deterministic in `seed`.
pub fn verify_lemmas(seed: u64) -> Result<Vec<Finding>> {
    let bp = BarrierParams::default();
    let cp = ControlParams::default();
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (worst, at) = gradient_oracle_sweep(seed, GRADIENT_ORACLE_STATES, &bp)?;
    out.push(Finding::new(
        "gradient_oracle",
        worst <= GRADIENT_ORACLE_TOL,
        worst,
        fmt_vec(&at),
    ));

    // B <= eps |x - tau|^2, including states on the clearance circle.
    let mut worst_ratio: f64 = 0.0;
    let mut violations = 0;
    for k in 0..1000 {
        let (mut x_i, tau, x_j) = random_safe_state(&mut rng, &bp, 0.0);
        if k % 10 == 0 {
            let dir = &x_i - &x_j;
            x_i = x_j.add_scaled(bp.clearance / dir.norm(), &dir);
        }
        if x_i.distance(&x_j) < bp.clearance {
            continue;
        }
        if !lemma3_bound_holds(&x_i, &tau, &x_j, &bp)? {
            violations += 1;
        }
        let d2 = x_i.distance(&tau).powi(2);
        if d2 > 0.0 {
            worst_ratio = worst_ratio.max(barrier_value(&x_i, &tau, &x_j, &bp)?.value / (bp.epsilon * d2));
        }
    }
    out.push(Finding::new(
        "barrier_bound",
        violations == 0,
        worst_ratio,
        format!("{violations} violations"),
    ));

    // Descent identity: exact cancellation and a flow-based finite difference.
    let mut worst_cancel: f64 = 0.0;
    let mut worst_flow: f64 = 0.0;
    let mut samples = 0;
    while samples < 500 {
        let (x_i, tau, x_j) = random_safe_state(&mut rng, &bp, 0.5);
        let agent = AgentState::kinetic(0, x_i, tau);
        let mut neighbor = AgentState::kinetic(1, x_j.clone(), x_j);
        neighbor.velocity = RealVec::xy(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let decision = control_law(&agent, &neighbor, &bp, &cp)?;
        if decision.guard_fired != Guard::None {
            continue;
        }
        samples += 1;
        let rate = lyapunov_rate(&agent, &neighbor, &bp, &cp)?;
        let ideal = -cp.gain * decision.grad_norm.powf(cp.alpha + 1.0);
        worst_cancel = worst_cancel.max((rate - ideal).abs() / ideal.abs().max(1e-300));

        let h = 1.0e-6;
        let at = |s: f64| {
            barrier_value(
                &agent.position.add_scaled(s, &decision.velocity_command),
                &agent.goal,
                &neighbor.position.add_scaled(s, &neighbor.velocity),
                &bp,
            )
            .map(|e| e.value)
        };
        if let (Ok(plus), Ok(minus)) = (at(h), at(-h)) {
            let fd = (plus - minus) / (2.0 * h);
            let scale = 1.0 + rate.abs() + decision.lyapunov_value;
            worst_flow = worst_flow.max((fd - rate).abs() / scale);
        }
    }
    out.push(Finding::new(
        "correction_cancellation",
        worst_cancel <= 1e-9,
        worst_cancel,
        "500 states",
    ));
    out.push(Finding::new(
        "descent_flow_difference",
        worst_flow <= 1e-5,
        worst_flow,
        "500 states",
    ));

    // Zero set of B on the safe region.
    let mut zero_ok = true;
    for _ in 0..200 {
        let (x_i, tau, x_j) = random_safe_state(&mut rng, &bp, 0.0);
        let e = barrier_value(&x_i, &tau, &x_j, &bp)?;
        zero_ok &= (e.value == 0.0) == (x_i == tau);
        if tau.distance(&x_j) > bp.clearance {
            let at_goal = barrier_value(&tau, &tau, &x_j, &bp)?;
            zero_ok &= at_goal.value == 0.0 && at_goal.grad_xi.is_zero();
        }
    }
    out.push(Finding::new("barrier_zero_set", zero_ok, 0.0, "200 states"));

    // Rigid-motion invariance.
    let mut worst_rigid: f64 = 0.0;
    for _ in 0..200 {
        let (x_i, tau, x_j) = random_safe_state(&mut rng, &bp, 0.1);
        let angle = rng.random_range(0.0..2.0 * PI);
        let shift = RealVec::xy(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
        let base = barrier_value(&x_i, &tau, &x_j, &bp)?;
        let rot = barrier_value(&rotate(&x_i, angle), &rotate(&tau, angle), &rotate(&x_j, angle), &bp)?;
        let moved = barrier_value(&(&x_i + &shift), &(&tau + &shift), &(&x_j + &shift), &bp)?;
        let scale = 1.0 + base.value.abs();
        let gscale = 1.0 + base.grad_xi.norm();
        worst_rigid = worst_rigid
            .max((rot.value - base.value).abs() / scale)
            .max((&rot.grad_xi - &rotate(&base.grad_xi, angle)).norm() / gscale)
            .max((moved.value - base.value).abs() / scale)
            .max((&moved.grad_xi - &base.grad_xi).norm() / gscale);
    }
    out.push(Finding::new(
        "barrier_rigid_invariance",
        worst_rigid <= 1e-9,
        worst_rigid,
        "200 states",
    ));

    // Closed-form stationary points re-verified.
    let mut worst_residual: f64 = 0.0;
    for _ in 0..200 {
        let (_, tau, x_j) = random_safe_state(&mut rng, &bp, 0.0);
        for s in stationary_points(&tau, &x_j, &bp)? {
            let r = raw_gradient(&s.location, &tau, &x_j, &bp).norm() / (1.0 + s.location.distance(&tau));
            worst_residual = worst_residual.max(r);
        }
    }
    out.push(Finding::new(
        "stationary_residual",
        worst_residual <= 1e-8,
        worst_residual,
        "200 instances",
    ));

    let grid = canonical_grid_check(&bp)?;
    out.push(Finding::new(
        "stationary_grid_oracle",
        grid.unexplained.is_empty() && grid.found_all,
        grid.unexplained.len() as f64,
        format!("{} low minima", grid.low_minima.len()),
    ));
    out.push(Finding::new(
        "printed_second_root_not_zero",
        grid.printed_root_grad > 0.5,
        grid.printed_root_grad,
        fmt_vec(&grid.printed_root),
    ));

    // Continuity of the command at the goal along a fixed ray.
    let mut continuity_ok = true;
    let mut last_norm = f64::INFINITY;
    let neighbor = {
        let mut n = AgentState::kinetic(1, RealVec::xy(6.0, 1.0), RealVec::xy(6.0, 1.0));
        n.velocity = RealVec::xy(-0.4, 0.9);
        n
    };
    let ray = RealVec::xy(0.6, -0.8);
    for p in 1..=6 {
        let s = 10f64.powi(-2 * p);
        let agent = AgentState::kinetic(0, ray.scale(s), RealVec::xy(0.0, 0.0));
        let d = control_law(&agent, &neighbor, &bp, &cp)?;
        let norm = d.velocity_command.norm();
        if d.guard_fired == Guard::None {
            continuity_ok &= norm < last_norm;
            last_norm = norm;
        }
    }
    out.push(Finding::new(
        "gradient_continuity",
        continuity_ok,
        last_norm,
        "s = 1e-12",
    ));

    // Homogeneity of the damping term.
    let mut worst_homog: f64 = 0.0;
    for _ in 0..200 {
        let g = RealVec::xy(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let lambda = rng.random_range(0.01..100.0f64);
        let lhs = damping_term(&g.scale(lambda), &cp);
        let rhs = damping_term(&g, &cp).scale(lambda.powf(cp.alpha));
        worst_homog = worst_homog.max((&lhs - &rhs).norm() / (1.0 + rhs.norm()));
    }
    out.push(Finding::new(
        "damping_homogeneity",
        worst_homog <= 1e-12,
        worst_homog,
        "200 gradients",
    ));

    let c0 = estimate_c0(
        &RealVec::xy(0.0, 0.0),
        &RealVec::xy(4.0, 0.0),
        &bp,
        &Domain::new(RealVec::xy(-20.0, -20.0), RealVec::xy(20.0, 20.0)),
        0.5,
        20_000,
    )?;
    out.push(Finding::new("c0_positive", c0 > 0.0, c0, "tau=(0,0) x_j=(4,0)"));

    let (times, values) = synthetic_fts_series(1.0, 1.0, 2.0 / 3.0, 1.0e-3);
    let beta = fts_order_fit_series(&times, &values, 1.0e-6)?;
    out.push(Finding::new(
        "fts_synthetic_fit",
        (beta - 2.0 / 3.0).abs() <= 1e-2,
        (beta - 2.0 / 3.0).abs(),
        format!("beta_hat={beta:.6}"),
    ));
    Ok(out)
}

/// One kinetic agent and one static neighbor, no boundary ring. The agent
/// starts at `(10, 0)`, its goal is the origin and the neighbor sits at
/// `(-5, 3)`, close enough to bend the path.
pub fn single_neighbor_scenario(params: &ScenarioParams) -> Scenario {
    Scenario {
        config: WorldConfig {
            arena_radius: params.arena_radius,
            agent_radius: params.agent_radius,
            agents: vec![
                AgentState::kinetic(0, RealVec::xy(10.0, 0.0), RealVec::xy(0.0, 0.0)),
                AgentState::fixed(1, RealVec::xy(-5.0, 3.0)),
            ],
            barrier: params.barrier,
            control: params.control,
            seed: 0,
        },
        label: "single_neighbor".into(),
    }
}

pub const HALVING_STEPS: [f64; 3] = [1.0e-3, 5.0e-4, 2.5e-4];

#[derive(Debug, Clone, PartialEq)]
pub struct HalvingStudy {
    pub dts: Vec<f64>,
    /// Largest descent-identity residual at each step size.
    pub maxima: Vec<f64>,
    /// `maxima[k] / maxima[k + 1]`.
    pub ratios: Vec<f64>,
    pub records: Vec<TrajectoryRecord>,
}

/// Runs `scenario` once per step size and tracks how the largest residual of
/// `dB/dt = -k1 |grad B|^(alpha+1)` shrinks.
pub fn halving_study(scenario: &Scenario, base: &SimConfig, dts: &[f64]) -> Result<HalvingStudy> {
    let bp = &scenario.config.barrier;
    let cp = &scenario.config.control;
    let mut study = HalvingStudy {
        dts: dts.to_vec(),
        maxima: Vec::new(),
        ratios: Vec::new(),
        records: Vec::new(),
    };
    for &dt in dts {
        let rec = run(scenario, &SimConfig { dt, ..*base })?;
        study.maxima.push(lemma2_residual_scan(&rec, bp, cp)?.max);
        study.records.push(rec);
    }
    study.ratios = study.maxima.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(study)
}

/// Exact solution of `dV/dt = -c V^beta` from `V(0) = v0`, sampled every `dt`
/// until it reaches zero.
pub fn synthetic_fts_series(v0: f64, c: f64, beta: f64, dt: f64) -> (Vec<f64>, Vec<f64>) {
    let exponent = 1.0 - beta;
    let settle = v0.powf(exponent) / (c * exponent);
    let steps = (settle / dt).floor() as usize;
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    let values = times
        .iter()
        .map(|&t| (v0.powf(exponent) - c * exponent * t).max(0.0).powf(1.0 / exponent))
        .collect();
    (times, values)
}
