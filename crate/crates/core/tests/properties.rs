use std::sync::Arc;

use proptest::prelude::*;
use uniopt::accel::{bb_stepsize, run_uag, run_upfag, InitPolicy, UagParams, UpfagParams};
use uniopt::level::{run_uapl, run_ufapl, LevelParams};
use uniopt::prox::{project_polyhedron, prox_step, Halfspace};
use uniopt::testbed::{gen_convex_quadratic, gen_scad_instance, random_point_in_ball};
use uniopt::{gamma_sequence, CompositeProblem, CompositeTerm, FeasibleSet, Point, StoppingRule};

fn vec_in(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = Point> {
    prop::collection::vec(lo..hi, n).prop_map(Point::from_vec)
}

fn prox_objective(g: &Point, c: &Point, tau: f64, x: &CompositeTerm, u: &Point) -> f64 {
    let d = u - c;
    g.dot(u) + d.dot(&d) / (2.0 * tau) + x.value(u)
}

#[derive(Debug, Clone)]
enum SetKind {
    Whole,
    Box,
    Ball,
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Strong convexity: `φ(y) ≥ φ(p) + ‖y − p‖²/(2τ)` for every feasible `y`.
    #[test]
    fn prox_point_is_optimal(
        (g, c, ys) in (1usize..6).prop_flat_map(|n| (
            vec_in(n, -3.0, 3.0),
            vec_in(n, -2.0, 2.0),
            prop::collection::vec(vec_in(n, -1.0, 1.0), 8),
        )),
        tau in 0.05f64..5.0,
        w in 0.0f64..2.0,
        kind in prop_oneof![Just(SetKind::Whole), Just(SetKind::Box), Just(SetKind::Ball)],
    ) {
        let n = g.len();
        let (set, term) = match kind {
            SetKind::Whole => (FeasibleSet::WholeSpace, CompositeTerm::weighted_l1(w).unwrap()),
            SetKind::Box => (
                FeasibleSet::boxed(Point::from_elem(n, -1.0), Point::from_elem(n, 1.0)).unwrap(),
                CompositeTerm::weighted_l1(w).unwrap(),
            ),
            SetKind::Ball => (FeasibleSet::ball(Point::zeros(n), 1.0).unwrap(), CompositeTerm::Zero),
        };
        let p = prox_step(&g, &c, tau, &term, &set).unwrap();
        prop_assert!(set.contains(&p, 1e-12));
        let fp = prox_objective(&g, &c, tau, &term, &p);
        for y in ys {
            let y = set.project(&y);
            let d = &y - &p;
            let lhs = prox_objective(&g, &c, tau, &term, &y);
            prop_assert!(lhs >= fp + d.dot(&d) / (2.0 * tau) - 1e-9 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn bb_stepsize_respects_floor(
        (s, y) in (1usize..6).prop_flat_map(|n| (vec_in(n, -5.0, 5.0), vec_in(n, -5.0, 5.0))),
        sigma in 1e-3f64..1.0,
    ) {
        let v = bb_stepsize(&s, &y, sigma);
        prop_assert!(v >= sigma && v.is_finite());
    }

    /// The projection is feasible and no feasible point makes an acute angle
    /// with `x0 − p` at `p`.
    #[test]
    fn polyhedron_projection_variational_inequality(
        (x0, anchor, normals, slacks, probes) in (1usize..7, 1usize..5).prop_flat_map(|(n, p)| (
            vec_in(n, -3.0, 3.0),
            vec_in(n, -1.0, 1.0),
            prop::collection::vec(vec_in(n, -1.0, 1.0), p),
            prop::collection::vec(0.0f64..1.0, p),
            prop::collection::vec(vec_in(n, -0.2, 0.2), 6),
        )),
    ) {
        // every cut contains `anchor`, so the polyhedron is nonempty
        let cuts: Vec<Halfspace> = normals
            .iter()
            .zip(&slacks)
            .filter(|(a, _)| a.dot(*a) > 1e-6)
            .map(|(a, s)| Halfspace::new(a.clone(), a.dot(&anchor) + s).unwrap())
            .collect();
        let proj = project_polyhedron(&x0, &cuts).unwrap();
        let p = proj.point().expect("nonempty polyhedron");
        for h in &cuts {
            prop_assert!(h.contains(p, 1e-9));
        }
        for d in probes {
            let y = &anchor + &d;
            if cuts.iter().all(|h| h.contains(&y, 0.0)) {
                let vi = (&x0 - p).dot(&(&y - p));
                prop_assert!(vi <= 1e-8 * (1.0 + (&x0 - p).dot(&(&x0 - p))), "vi = {}", vi);
            }
        }
    }

    #[test]
    fn gamma_sequence_decreasing(alphas in prop::collection::vec(0.01f64..0.99, 1..30)) {
        let mut a = vec![1.0];
        a.extend(alphas);
        let gs = gamma_sequence(&a, a.len()).unwrap();
        prop_assert_eq!(gs.gamma(1), 1.0);
        prop_assert!(gs.gammas.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn upfag_monotone_on_scad(seed in 0u64..10_000, warm in any::<bool>()) {
        let inst = gen_scad_instance(20, 30, seed).unwrap();
        let l = inst.lipschitz;
        let init = if warm { InitPolicy::WarmStart } else { InitPolicy::Bb };
        let params = UpfagParams::default().with_init(init, 1.0 / l, 1.0 / l);
        let tr = run_upfag(&inst.problem(), &Point::zeros(30), &params, &StoppingRule::iterations(200)).unwrap();
        let vals: Vec<f64> = tr.values().collect();
        prop_assert!(vals.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(tr.iterations.iter().all(|r| r.tau1 <= 60 && r.tau2 <= 60));
    }

    /// l1 term over a box with a nonconvex smooth part.
    #[test]
    fn upfag_monotone_with_l1_on_box(seed in 0u64..10_000, w in 0.0f64..0.5) {
        let inst = gen_scad_instance(15, 10, seed).unwrap();
        let set = FeasibleSet::boxed(Point::from_elem(10, -0.5), Point::from_elem(10, 0.5)).unwrap();
        let problem = CompositeProblem::new(
            Arc::new(inst.oracle()),
            CompositeTerm::weighted_l1(w).unwrap(),
            set,
        ).unwrap();
        let x0 = random_point_in_ball(&Point::zeros(10), 0.5, seed).mapv(|v| v.clamp(-0.5, 0.5));
        let tr = run_upfag(&problem, &x0, &UpfagParams::default(), &StoppingRule::iterations(150)).unwrap();
        let vals: Vec<f64> = tr.values().collect();
        prop_assert!(vals.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn uag_convex_bound(seed in 0u64..10_000, big in any::<bool>()) {
        let n = if big { 100 } else { 10 };
        let q = gen_convex_quadratic(n, 5.0, 1.0, seed).unwrap();
        let x0 = random_point_in_ball(&Point::zeros(n), 1.0, seed);
        let r2 = (&x0 - &q.x_star).dot(&(&x0 - &q.x_star));
        let tr = run_uag(&q.ball_problem(), &x0, &UagParams::new(5.0).unwrap(), &StoppingRule::iterations(200)).unwrap();
        for rec in &tr.iterations {
            let k = rec.k as f64;
            prop_assert!(rec.value <= 2.0 * 5.0 * r2 / (k * (k + 1.0)));
        }
    }

    /// Lower bounds never exceed the optimum value 0 of a convex quadratic.
    #[test]
    fn level_lower_bounds_valid(seed in 0u64..10_000, eta in 0.2f64..0.8) {
        let q = gen_convex_quadratic(8, 4.0, 1.0, seed).unwrap();
        let x0 = random_point_in_ball(&Point::zeros(8), 1.0, seed + 1);
        let params = LevelParams { eta, initial_beta: 0.25, ..LevelParams::default() };
        let stop = StoppingRule::iterations(400).with_gap_tol(1e-6);
        for run in [
            run_uapl(&q.ball_problem(), &x0, &params, &stop).unwrap(),
            run_ufapl(&q.ball_problem(), &x0, &params, &stop).unwrap(),
        ] {
            for ph in &run.phases {
                prop_assert!(ph.start_lower <= 0.0 && ph.end_lower <= 0.0);
                prop_assert!(ph.end_lower >= ph.start_lower);
                prop_assert!(ph.end_upper <= ph.start_upper);
            }
            prop_assert!(run.trace.iterations.iter().filter_map(|r| r.lower_bound).all(|lb| lb <= 0.0));
        }
    }
}
