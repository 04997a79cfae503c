//! The Lyapunov barrier function of one agent against its nearest neighbor,
//!
//! ```text
//! B(x_i, x_j) = |x_i - tau_i|^2 / x0,    x0 = |x_i - x_j| - d_c + 1/eps
//! ```
//!
//! together with its analytic gradients, the `B <= eps |x - tau|^2` audit and
//! the closed-form set of spurious stationary points.

use crate::error::{Error, Result};
use crate::model::{BarrierParams, RealVec};

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierEvaluation {
    pub value: f64,
    /// Gradient with respect to the agent's own position.
    pub grad_xi: RealVec,
    /// Gradient with respect to the neighbor's position.
    pub grad_xj: RealVec,
    /// Denominator `|x_i - x_j| - d_c + 1/eps`.
    pub x0: f64,
    pub in_safe_region: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPoint {
    pub location: RealVec,
    pub in_safe_region: bool,
    /// `|grad_xi|` re-evaluated at `location`.
    pub residual: f64,
}

pub fn denominator(x_i: &RealVec, x_j: &RealVec, p: &BarrierParams) -> f64 {
    x_i.distance(x_j) - p.clearance + 1.0 / p.epsilon
}

pub fn barrier_value(x_i: &RealVec, tau_i: &RealVec, x_j: &RealVec, p: &BarrierParams) -> Result<BarrierEvaluation> {
    check_dims(x_i, tau_i)?;
    check_dims(x_i, x_j)?;
    let offset = x_i - x_j;
    let separation = offset.norm();
    if separation == 0.0 {
        return Err(Error::CoincidentAgents);
    }
    let x0 = separation - p.clearance + 1.0 / p.epsilon;
    if !(x0 >= p.x0_floor) {
        return Err(Error::DenominatorUnderflow { x0, floor: p.x0_floor });
    }

    let error = x_i - tau_i;
    let numerator = error.norm_squared();
    let repulsion = numerator / (x0 * x0) / separation;
    let grad_xj = offset.scale(repulsion);
    let grad_xi = error.scale(2.0 / x0).add_scaled(-1.0, &grad_xj);

    Ok(BarrierEvaluation {
        value: numerator / x0,
        grad_xi,
        grad_xj,
        x0,
        in_safe_region: separation > p.clearance,
    })
}

/// `grad_xi` straight from the formula, with no domain checks. Only used to
/// re-verify stationary points, some of which sit where `x0 < 0`.
pub fn raw_gradient(x: &RealVec, tau_i: &RealVec, x_j: &RealVec, p: &BarrierParams) -> RealVec {
    let offset = x - x_j;
    let separation = offset.norm();
    let x0 = separation - p.clearance + 1.0 / p.epsilon;
    let error = x - tau_i;
    let numerator = error.norm_squared();
    error
        .scale(2.0 / x0)
        .add_scaled(-numerator / (x0 * x0) / separation, &offset)
}

/// Runtime audit of `B <= eps |x_i - tau_i|^2` on `|x_i - x_j| >= d_c`.
pub fn lemma3_bound_holds(x_i: &RealVec, tau_i: &RealVec, x_j: &RealVec, p: &BarrierParams) -> Result<bool> {
    let distance = x_i.distance(x_j);
    if distance < p.clearance {
        return Err(Error::DomainViolation {
            distance,
            clearance: p.clearance,
        });
    }
    let eval = barrier_value(x_i, tau_i, x_j, p)?;
    let bound = p.epsilon * x_i.distance(tau_i).powi(2);
    Ok(eval.value <= bound + 1.0e-9 * p.epsilon)
}

/// Every non-goal zero of `grad_xi` for fixed `tau_i` and `x_j`.
///
/// `grad_xi = 0` forces `x - tau_i` parallel to `x - x_j`, so roots lie on the
/// line `x = tau_i + s w`, `w = (x_j - tau_i)/d`. On that line the condition
/// reduces to `2 x0 = s sign(s - d)`, which has one root per side of `x_j`:
///
/// * far side (`s > d`): `s = 2(d + d_c - 1/eps)`, always valid;
/// * near side (`s < d`): `s = 2(d - d_c + 1/eps)`, valid only when it really
///   is below `d`.
pub fn stationary_points(tau_i: &RealVec, x_j: &RealVec, p: &BarrierParams) -> Result<Vec<StationaryPoint>> {
    check_dims(tau_i, x_j)?;
    let axis = x_j - tau_i;
    let d = axis.norm();
    if d == 0.0 {
        return Err(Error::DegenerateGeometry("goal coincides with neighbor"));
    }
    let w = axis.scale(1.0 / d);
    let inv_eps = 1.0 / p.epsilon;

    let far = 2.0 * (d + p.clearance - inv_eps);
    let near = 2.0 * (d - p.clearance + inv_eps);
    let candidates = [Some(far), (near < d && near != 0.0).then_some(near)];

    let mut out = Vec::new();
    for s in candidates.into_iter().flatten() {
        let location = tau_i.add_scaled(s, &w);
        let separation = (s - d).abs();
        let residual = raw_gradient(&location, tau_i, x_j, p).norm();
        let scale = 1.0 + location.distance(tau_i);
        if residual.is_finite() && residual <= 1.0e-8 * scale {
            out.push(StationaryPoint {
                location,
                in_safe_region: separation > p.clearance,
                residual,
            });
        }
    }
    Ok(out)
}

fn check_dims(a: &RealVec, b: &RealVec) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}
