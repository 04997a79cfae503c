//! Re-checks a run directory from its files: the record digest, a step-by-step
//! replay, the barrier bound and descent identity, safety, containment and
//! convergence. Runs written with a stride above 1 can only be checked on the
//! samples that were kept.

use std::fmt::Write;
use std::path::Path;

use ftmp_core::analysis::{
    all_pass, barrier_bound_audit, fts_order_fit, lemma2_residual_scan, BarrierBoundAudit, Finding, Status,
};
use ftmp_core::sim::Termination;

use crate::output::{load_run, LoadedRun};
use crate::{CliError, Result};

pub const REPORT: &str = "audit.txt";

/// Largest tolerated gap between replayed and stored positions.
pub const REPLAY_TOL: f64 = 1.0e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub findings: Vec<Finding>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        all_pass(&self.findings)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for f in &self.findings {
            let _ = writeln!(out, "{f}");
        }
        let _ = writeln!(out, "overall {}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }

    fn get(&self, check: &str) -> Option<&Finding> {
        self.findings.iter().find(|f| f.check == check)
    }

    pub fn status(&self, check: &str) -> Option<Status> {
        self.get(check).map(|f| f.status)
    }
}

/// Audits the run in `dir` and writes `audit.txt` next to it.
pub fn audit_run(dir: &Path) -> Result<AuditReport> {
    let loaded = load_run(dir)?;
    let report = audit_loaded(&loaded)?;
    let path = dir.join(REPORT);
    std::fs::write(&path, report.render()).map_err(|e| CliError::io(&path, e))?;
    Ok(report)
}

pub fn audit_loaded(loaded: &LoadedRun) -> Result<AuditReport> {
    let manifest = &loaded.manifest;
    let world = &manifest.world;
    let bp = &world.barrier;
    let cp = &world.control;
    let summary = &manifest.summary;
    let mut findings = Vec::new();

    if loaded.is_complete() {
        let digest = loaded.digest();
        findings.push(Finding::new(
            "record_digest",
            digest == manifest.record_digest,
            0.0,
            digest,
        ));
        let (rec, deviation) = loaded.to_record()?;
        findings.push(Finding::new(
            "replay",
            deviation <= REPLAY_TOL,
            deviation,
            format!("{} steps", rec.steps.len()),
        ));

        let bound: BarrierBoundAudit = barrier_bound_audit(&rec, bp)?;
        findings.push(Finding::new(
            "barrier_bound",
            bound.violations == 0,
            bound.worst_ratio,
            format!(
                "{} checked, {} violations, {} outside d_c",
                bound.checked, bound.violations, bound.out_of_domain
            ),
        ));

        let scan = lemma2_residual_scan(&rec, bp, cp)?;
        findings.push(Finding::new(
            "descent_residual",
            scan.coefficient.is_finite(),
            scan.max,
            format!(
                "C={:.6e} mean={:.6e} n={} skipped switch={} guard={} domain={}",
                scan.coefficient,
                scan.mean,
                scan.residuals.len(),
                scan.excluded_switch,
                scan.excluded_guard,
                scan.excluded_domain
            ),
        ));

        findings.push(Finding::new(
            "safety",
            rec.min_distance() > bp.clearance,
            rec.min_distance(),
            format!("d_c={}", bp.clearance),
        ));
        findings.push(Finding::new(
            "containment",
            rec.max_radius() <= world.arena_radius,
            rec.max_radius(),
            format!("R={}", world.arena_radius),
        ));
        findings.push(Finding::new(
            "convergence",
            rec.finished_at_goals(),
            rec.frames
                .last()
                .expect("record has samples")
                .iter()
                .map(|a| a.distance_to_goal())
                .fold(0.0, f64::max),
            format!(
                "{}/{} agents within {}",
                rec.convergence_times.iter().flatten().count(),
                rec.convergence_times.len(),
                rec.sim.conv_tol
            ),
        ));
        findings.push(Finding::new(
            "termination",
            !matches!(rec.termination, Termination::Fault { .. }),
            0.0,
            rec.termination.to_string(),
        ));

        let mut betas: Vec<(usize, f64)> = Vec::new();
        for (i, agent) in rec.frames[0].iter().enumerate() {
            if rec.convergence_times[i].is_some() {
                if let Ok(beta) = fts_order_fit(&rec, agent.id, bp) {
                    betas.push((agent.id, beta));
                }
            }
        }
        let expected = (cp.alpha + 1.0) / 2.0;
        let listed: Vec<String> = betas.iter().map(|(id, b)| format!("{id}:{b:.4}")).collect();
        let worst = betas.iter().map(|(_, b)| (b - expected).abs()).fold(0.0, f64::max);
        findings.push(Finding::info(
            "fts_order",
            worst,
            format!(
                "expected {expected:.4}; fitted {}",
                if listed.is_empty() {
                    "none".into()
                } else {
                    listed.join(" ")
                }
            ),
        ));
    } else {
        let note = format!("{} of {} samples on disk", loaded.frames.len(), summary.steps + 1);
        for check in [
            "record_digest",
            "replay",
            "barrier_bound",
            "descent_residual",
            "fts_order",
        ] {
            findings.push(Finding::info(check, f64::NAN, format!("skipped: {note}")));
        }
        findings.push(Finding::new(
            "safety",
            summary.min_distance > bp.clearance,
            summary.min_distance,
            "from manifest",
        ));
        findings.push(Finding::new(
            "containment",
            summary.max_radius <= world.arena_radius,
            summary.max_radius,
            "from manifest",
        ));
        let last = loaded.frames.last().expect("at least one frame");
        let worst = last.iter().map(|a| a.distance_to_goal()).fold(0.0, f64::max);
        findings.push(Finding::new(
            "convergence",
            worst <= manifest.settings.sim.conv_tol,
            worst,
            "last sample",
        ));
        findings.push(Finding::new(
            "termination",
            summary.termination != "fault",
            0.0,
            summary.termination.clone(),
        ));
    }
    Ok(AuditReport { findings })
}
