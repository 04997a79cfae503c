use ftmp_core::analysis::finite_difference_gradient;
use ftmp_core::barrier::{barrier_value, lemma3_bound_holds, stationary_points};
use ftmp_core::controller::{control_law, damping_term, lyapunov_rate, Guard};
use ftmp_core::sim::step;
use ftmp_core::world::nearest_neighbor;
use ftmp_core::{AgentState, BarrierParams, ControlParams, RealVec};
use proptest::prelude::*;

fn point(span: f64) -> impl Strategy<Value = RealVec> {
    (-span..span, -span..span).prop_map(|(x, y)| RealVec::xy(x, y))
}

/// Agent position, goal and neighbor position with the agent outside the
/// neighbor's clearance disk.
fn safe_state() -> impl Strategy<Value = (RealVec, RealVec, RealVec)> {
    (point(20.0), point(20.0), point(20.0))
        .prop_filter("outside the clearance disk", |(x, _, xj)| x.distance(xj) >= 2.05)
}

fn rotate(v: &RealVec, angle: f64) -> RealVec {
    let (s, c) = angle.sin_cos();
    RealVec::xy(c * v[0] - s * v[1], s * v[0] + c * v[1])
}

fn kinetic(id: usize, position: RealVec, goal: RealVec, velocity: RealVec) -> AgentState {
    let mut a = AgentState::kinetic(id, position, goal);
    a.velocity = velocity;
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn gradients_match_central_differences((x, tau, xj) in safe_state()) {
        let bp = BarrierParams::default();
        let e = barrier_value(&x, &tau, &xj, &bp).unwrap();
        let fd_i = finite_difference_gradient(|p| barrier_value(p, &tau, &xj, &bp).map(|e| e.value), &x, 1e-6).unwrap();
        let fd_j = finite_difference_gradient(|p| barrier_value(&x, &tau, p, &bp).map(|e| e.value), &xj, 1e-6).unwrap();
        prop_assert!((&e.grad_xi - &fd_i).norm() <= 1e-5 * e.grad_xi.norm().max(1e-3));
        prop_assert!((&e.grad_xj - &fd_j).norm() <= 1e-5 * e.grad_xj.norm().max(1e-3));
    }

    #[test]
    fn barrier_is_nonnegative_and_vanishes_only_at_the_goal((x, tau, xj) in safe_state()) {
        let bp = BarrierParams::default();
        let e = barrier_value(&x, &tau, &xj, &bp).unwrap();
        prop_assert!(e.value >= 0.0);
        prop_assert_eq!(e.value == 0.0, x == tau);
        prop_assert!(e.in_safe_region);
        if tau.distance(&xj) > bp.clearance {
            prop_assert_eq!(barrier_value(&tau, &tau, &xj, &bp).unwrap().value, 0.0);
        }
    }

    #[test]
    fn barrier_is_bounded_by_scaled_goal_distance((x, tau, xj) in safe_state()) {
        prop_assert!(lemma3_bound_holds(&x, &tau, &xj, &BarrierParams::default()).unwrap());
    }

    #[test]
    fn barrier_is_invariant_under_rigid_motions(
        (x, tau, xj) in safe_state(),
        angle in 0.0..std::f64::consts::TAU,
        shift in point(50.0),
    ) {
        let bp = BarrierParams::default();
        let e = barrier_value(&x, &tau, &xj, &bp).unwrap();
        let moved = |v: &RealVec| &rotate(v, angle) + &shift;
        let m = barrier_value(&moved(&x), &moved(&tau), &moved(&xj), &bp).unwrap();
        prop_assert!((m.value - e.value).abs() <= 1e-9 * e.value.max(1.0));
        let g = rotate(&e.grad_xi, angle);
        prop_assert!((&m.grad_xi - &g).norm() <= 1e-9 * g.norm().max(1.0));
    }

    #[test]
    fn stationary_points_are_zeros_of_the_gradient(tau in point(10.0), xj in point(10.0)) {
        prop_assume!(tau.distance(&xj) > 0.1);
        let bp = BarrierParams::default();
        for s in stationary_points(&tau, &xj, &bp).unwrap() {
            prop_assert!(s.residual <= 1e-9 * (1.0 + s.location.distance(&tau)));
        }
    }

    #[test]
    fn damping_is_homogeneous_of_degree_alpha(g in point(5.0), lambda in 0.01..100.0f64) {
        prop_assume!(!g.is_zero());
        let cp = ControlParams::default();
        let lhs = damping_term(&g.scale(lambda), &cp);
        let rhs = damping_term(&g, &cp).scale(lambda.powf(cp.alpha));
        prop_assert!((&lhs - &rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        prop_assert!(lhs.dot(&g) < 0.0);
    }

    #[test]
    fn static_neighbor_gives_pure_descent((x, tau, xj) in safe_state()) {
        prop_assume!(x.distance(&tau) > 1e-3);
        let bp = BarrierParams::default();
        let cp = ControlParams::default();
        let agent = AgentState::kinetic(0, x, tau);
        let neighbor = AgentState::fixed(1, xj);
        let d = control_law(&agent, &neighbor, &bp, &cp).unwrap();
        prop_assert_eq!(d.guard_fired, Guard::NeighborStatic);
        let rate = lyapunov_rate(&agent, &neighbor, &bp, &cp).unwrap();
        let expected = -cp.gain * d.grad_norm.powf(cp.alpha + 1.0);
        prop_assert!(rate <= 0.0);
        prop_assert!((rate - expected).abs() <= 1e-9 * expected.abs().max(1e-12));
    }

    #[test]
    fn moving_neighbor_correction_cancels((x, tau, xj) in safe_state(), vj in point(3.0)) {
        let bp = BarrierParams::default();
        let cp = ControlParams::default();
        let agent = AgentState::kinetic(0, x, tau);
        let neighbor = kinetic(1, xj.clone(), xj, vj);
        let d = control_law(&agent, &neighbor, &bp, &cp).unwrap();
        prop_assume!(d.guard_fired == Guard::None);
        let e = barrier_value(&agent.position, &agent.goal, &neighbor.position, &bp).unwrap();
        let rate = lyapunov_rate(&agent, &neighbor, &bp, &cp).unwrap();
        let expected = -cp.gain * d.grad_norm.powf(cp.alpha + 1.0);
        let scale = e.grad_xi.dot(&d.velocity_command).abs() + e.grad_xj.dot(&neighbor.velocity).abs();
        prop_assert!((rate - expected).abs() <= 1e-9 * scale.max(expected.abs()));
    }

    #[test]
    fn nearest_neighbor_has_the_smallest_distance(me in point(10.0), others in prop::collection::vec(point(10.0), 1..12)) {
        let agent = AgentState::kinetic(0, me, RealVec::xy(0.0, 0.0));
        let roster: Vec<AgentState> = others.into_iter().enumerate().map(|(k, p)| AgentState::fixed(k + 1, p)).collect();
        let nearest = nearest_neighbor(&agent, &roster).unwrap();
        let d = agent.position.distance(&nearest.position);
        prop_assert!(roster.iter().all(|o| agent.position.distance(&o.position) >= d));
    }

    #[test]
    fn steps_commute_with_quarter_rotation(
        positions in prop::collection::vec((point(30.0), point(30.0)), 2..6),
        statics in prop::collection::vec(point(30.0), 0..4),
        dt in 1e-4..1e-2f64,
    ) {
        let mut roster: Vec<AgentState> = positions
            .into_iter()
            .enumerate()
            .map(|(k, (p, g))| AgentState::kinetic(k, p, g))
            .collect();
        let n = roster.len();
        roster.extend(statics.into_iter().enumerate().map(|(k, p)| AgentState::fixed(n + k, p)));
        for (i, a) in roster.iter().enumerate() {
            for b in &roster[i + 1..] {
                prop_assume!(a.position.distance(&b.position) > 2.1);
            }
        }
        let bp = BarrierParams::default();
        let cp = ControlParams::default();
        let turn = |a: &AgentState| {
            let mut r = a.clone();
            r.position = a.position.rotate_quarter();
            r.goal = a.goal.rotate_quarter();
            r.velocity = a.velocity.rotate_quarter();
            r
        };
        let (first, _) = step(&roster, &bp, &cp, dt).unwrap();
        let (rotated, _) = step(&roster.iter().map(turn).collect::<Vec<_>>(), &bp, &cp, dt).unwrap();
        for (a, b) in first.iter().zip(&rotated) {
            prop_assert_eq!(&turn(a), b);
        }
    }
}
