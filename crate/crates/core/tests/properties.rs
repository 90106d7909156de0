use num_rational::Rational64;
use proptest::prelude::*;

use cbf_synth::barrier::{
    cbf_constraint, convergence_time, fcbf_constraint, gamma_for_deadline, AffineBarrier, AlphaFn,
    Barrier, BarrierRegistry, FcbfParams, HalfspaceConstraint, RegistryEntry,
};
use cbf_synth::contract::{check_intersection, check_subset};
use cbf_synth::qp::{solve_qp, InputBox, QpError};
use cbf_synth::sim::{LinearSystem, StateBox, Trace};
use cbf_synth::stl::{
    eventually_to_globally, group_tasks, monitor_trace, PredicateRef, SatisfactionWindow,
    StlFormula, StlSpec, TimeInterval,
};

fn halfspaces(m: usize, max: usize) -> impl Strategy<Value = Vec<HalfspaceConstraint<f64>>> {
    prop::collection::vec(
        (prop::collection::vec(-1.0..1.0f64, m), -0.5..1.0f64),
        0..=max,
    )
    .prop_map(|v| v.into_iter().map(|(a, b)| HalfspaceConstraint::new(a, b)).collect())
}

fn unit_box(m: usize) -> InputBox<f64> {
    InputBox::new(vec![-1.0; m], vec![1.0; m]).unwrap()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn glob(s: f64, e: f64, id: &str) -> StlFormula<f64> {
    StlFormula::Globally(TimeInterval::new(s, e).unwrap(), PredicateRef::new(id))
}

fn intervals() -> impl Strategy<Value = Vec<(u32, u32)>> {
    prop::collection::vec((0u32..80, 1u32..25), 1..30)
}

fn affine(w: [f64; 2], c: f64, id: &str) -> Barrier<f64> {
    Barrier::new(id, AffineBarrier::constant(w.to_vec(), c))
}

proptest! {
    #[test]
    fn qp_output_is_feasible_and_idempotent(
        (m, cons) in (1usize..=3).prop_flat_map(|m| (Just(m), halfspaces(m, 4))),
        seed in prop::collection::vec(-3.0..3.0f64, 3),
    ) {
        let bx = unit_box(m);
        let u_nom = &seed[..m];
        match solve_qp(u_nom, &cons, &bx) {
            Ok(u) => {
                prop_assert!(bx.contains(&u));
                for c in &cons {
                    prop_assert!(c.residual(&u) <= 1e-9, "residual {}", c.residual(&u));
                }
                let again = solve_qp(&u, &cons, &bx).unwrap();
                prop_assert!(dist2(&u, &again).sqrt() <= 1e-9);
            }
            Err(e) => prop_assert_eq!(e, QpError::Infeasible),
        }
    }

    #[test]
    fn qp_returns_feasible_nominal_unchanged(
        u in prop::collection::vec(-1.0..1.0f64, 2),
        cons in halfspaces(2, 4),
    ) {
        let bx = unit_box(2);
        let loose: Vec<_> = cons
            .into_iter()
            .map(|c| {
                let need = c.a[0] * u[0] + c.a[1] * u[1];
                HalfspaceConstraint::new(c.a, need + c.b.abs())
            })
            .collect();
        prop_assert_eq!(solve_qp(&u, &loose, &bx).unwrap(), u);
    }

    #[test]
    fn qp_beats_sampled_feasible_points(
        cons in halfspaces(2, 3),
        u_nom in prop::collection::vec(-3.0..3.0f64, 2),
        probes in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 2), 64),
    ) {
        let bx = unit_box(2);
        if let Ok(u) = solve_qp(&u_nom, &cons, &bx) {
            let d = dist2(&u, &u_nom);
            for p in probes.iter().filter(|p| cons.iter().all(|c| c.residual(p) <= 0.0)) {
                prop_assert!(d <= dist2(p, &u_nom) + 1e-9);
            }
        }
    }

    #[test]
    fn rational_qp_is_exactly_feasible(
        rows in prop::collection::vec((prop::collection::vec(-4i64..=4, 2), -4i64..=8), 0..4),
        nom in prop::collection::vec(-12i64..=12, 2),
    ) {
        let r = |n: i64| Rational64::new(n, 4);
        let cons: Vec<HalfspaceConstraint<Rational64>> = rows
            .iter()
            .map(|(a, b)| HalfspaceConstraint { a: a.iter().map(|&v| r(v)).collect(), b: r(*b) })
            .collect();
        let bx = InputBox::new(vec![r(-4); 2], vec![r(4); 2]).unwrap();
        let u_nom: Vec<Rational64> = nom.iter().map(|&v| r(v)).collect();
        if let Ok(u) = solve_qp(&u_nom, &cons, &bx) {
            prop_assert!(bx.contains(&u));
            for c in &cons {
                let lhs = c.a[0] * u[0] + c.a[1] * u[1];
                prop_assert!(lhs <= c.b);
            }
            prop_assert_eq!(solve_qp(&u, &cons, &bx).unwrap(), u);
        }
    }

    #[test]
    fn qp_agrees_between_f32_and_f64(
        cons in halfspaces(1, 3),
        u_nom in -3.0..3.0f64,
    ) {
        let wide: Result<Vec<f64>, _> = solve_qp(&[u_nom], &cons, &unit_box(1));
        let narrow_cons: Vec<HalfspaceConstraint<f32>> = cons
            .iter()
            .map(|c| HalfspaceConstraint::new(vec![c.a[0] as f32], c.b as f32))
            .collect();
        let bx32 = InputBox::new(vec![-1.0f32], vec![1.0f32]).unwrap();
        if let (Ok(a), Ok(b)) = (wide, solve_qp(&[u_nom as f32], &narrow_cons, &bx32)) {
            prop_assert!((a[0] - b[0] as f64).abs() <= 1e-3);
        }
    }

    #[test]
    fn grouping_partitions_predicates(iv in intervals()) {
        let tasks = iv
            .iter()
            .enumerate()
            .map(|(i, &(s, d))| glob(s as f64, (s + d) as f64, &format!("p{i}")))
            .collect();
        let spec = StlSpec { tasks, horizon: 120.0 };
        let groups = group_tasks(&spec).unwrap();
        let mut seen: Vec<String> = groups
            .iter()
            .flat_map(|g| g.predicates.iter().map(|p| p.predicate.barrier_id.clone()))
            .collect();
        seen.sort();
        let mut want: Vec<String> = (0..iv.len()).map(|i| format!("p{i}")).collect();
        want.sort();
        prop_assert_eq!(seen, want);
        prop_assert!(groups.iter().all(|g| g.is_well_formed()));
    }

    #[test]
    fn eventually_conversion_is_idempotent(
        items in prop::collection::vec((0u32..50, 2u32..20, 0.0..1.0f64, 0.05..1.0f64), 1..10),
    ) {
        let tasks = items
            .iter()
            .enumerate()
            .map(|(i, &(s, d, at, frac))| {
                let (s, e) = (s as f64, (s + d) as f64);
                let ts = s + at * (e - s - 0.5);
                let eps = frac * (e - ts);
                StlFormula::Eventually {
                    interval: TimeInterval::new(s, e).unwrap(),
                    predicate: PredicateRef::new(format!("p{i}")),
                    satisfaction: Some(SatisfactionWindow { at: ts, epsilon: eps }),
                }
            })
            .collect();
        let spec = StlSpec { tasks, horizon: 80.0 };
        let once = eventually_to_globally(&spec).unwrap();
        let twice = eventually_to_globally(&once).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(once.predicate_count(), spec.predicate_count());
        for (orig, conv) in spec.tasks.iter().zip(&once.tasks) {
            match (orig, conv) {
                (StlFormula::Eventually { interval, .. }, StlFormula::Globally(w, _)) => {
                    prop_assert!(w.start() >= interval.start() && w.end() <= interval.end());
                }
                _ => prop_assert!(false, "unexpected shape {conv}"),
            }
        }
    }

    #[test]
    fn monitor_of_conjunction_is_conjunction_of_monitors(
        xs in prop::collection::vec(-2.0..2.0f64, 21),
        c1 in -1.0..1.0f64,
        c2 in -1.0..1.0f64,
        (s1, s2) in (0u32..10, 0u32..10),
    ) {
        let mut reg = BarrierRegistry::new();
        reg.insert(RegistryEntry::new(Barrier::new("a", AffineBarrier::constant(vec![1.0], c1)))).unwrap();
        reg.insert(RegistryEntry::new(Barrier::new("b", AffineBarrier::constant(vec![-1.0], c2)))).unwrap();
        let trace = Trace::from_states(xs.iter().enumerate().map(|(k, &x)| (k as f64, vec![x])).collect());
        let fa = glob(s1 as f64, 20.0, "a");
        let fb = glob(s2 as f64, 20.0, "b");
        let run = |tasks| monitor_trace(&trace, &StlSpec { tasks, horizon: 20.0 }, &reg, 0.0).unwrap();
        let both = run(vec![StlFormula::And(vec![fa.clone(), fb.clone()])]);
        let a = run(vec![fa]);
        let b = run(vec![fb]);
        prop_assert_eq!(both.satisfied, a.satisfied && b.satisfied);
    }

    #[test]
    fn gamma_for_deadline_inverts_convergence_time(
        h in -50.0..-1e-3f64,
        rho in 0.0..0.95f64,
        target in 0.01..100.0f64,
    ) {
        let g = gamma_for_deadline(h, rho, target).unwrap();
        let t = convergence_time(h, &FcbfParams::new(rho, g).unwrap());
        prop_assert!((t - target).abs() <= 1e-9 * target.max(1.0));
    }

    #[test]
    fn cbf_boundary_input_gives_zero_residual(
        w in prop::collection::vec(-2.0..2.0f64, 2),
        c in -3.0..3.0f64,
        x in prop::collection::vec(-3.0..3.0f64, 2),
        kappa in 0.1..5.0f64,
    ) {
        let sys = LinearSystem::new(
            vec![vec![0.0, 1.0], vec![0.0, -0.3]],
            vec![vec![0.0], vec![1.0]],
            StateBox::new(vec![-1e3; 2], vec![1e3; 2]).unwrap(),
        )
        .unwrap();
        let h = Barrier::new("h", AffineBarrier::constant(w.clone(), c));
        let alpha = AlphaFn::scaled(kappa).unwrap();
        let con = cbf_constraint(&h, &sys, &alpha, 0.0, &x);
        prop_assume!(con.a[0].abs() > 1e-6);
        let u = con.b / con.a[0];
        let xdot = [x[1], -0.3 * x[1] + u];
        let hdot = w[0] * xdot[0] + w[1] * xdot[1];
        let hval = w[0] * x[0] + w[1] * x[1] + c;
        prop_assert!((hdot + kappa * hval).abs() <= 1e-9 * (1.0 + u.abs()));

        let p = FcbfParams::new(0.5, kappa).unwrap();
        let f = fcbf_constraint(&h, &sys, &p, 0.0, &x);
        prop_assert_eq!(&f.a, &con.a);
        let lhs_at_zero = f.b - con.b;
        let want = kappa * hval.signum() * hval.abs().powf(0.5) - kappa * hval;
        prop_assert!((lhs_at_zero - want).abs() <= 1e-9 * (1.0 + want.abs()));
    }

    #[test]
    fn subset_is_transitive(
        cs in prop::collection::vec(-2.0..2.0f64, 3),
        w in prop::array::uniform2(-1.0..1.0f64),
    ) {
        prop_assume!(w[0].abs() + w[1].abs() > 0.1);
        let domain = StateBox::new(vec![-3.0, -3.0], vec![3.0, 3.0]).unwrap();
        let b: Vec<_> = cs.iter().enumerate().map(|(i, &c)| affine(w, c, &format!("b{i}"))).collect();
        let ab = check_subset(&b[0], &b[1], 0.0, &domain).unwrap().holds;
        let bc = check_subset(&b[1], &b[2], 0.0, &domain).unwrap().holds;
        let ac = check_subset(&b[0], &b[2], 0.0, &domain).unwrap().holds;
        prop_assert!(!(ab && bc) || ac);
    }

    #[test]
    fn intersection_witness_lies_in_both_sets(
        w1 in prop::array::uniform2(-1.0..1.0f64),
        w2 in prop::array::uniform2(-1.0..1.0f64),
        c1 in -2.0..2.0f64,
        c2 in -2.0..2.0f64,
        probes in prop::collection::vec(prop::array::uniform2(-3.0..3.0f64), 64),
    ) {
        let domain = StateBox::new(vec![-3.0, -3.0], vec![3.0, 3.0]).unwrap();
        let (p, n) = (affine(w1, c1, "p"), affine(w2, c2, "n"));
        let verdict = check_intersection(&p, &n, 0.0, &domain).unwrap();
        match verdict.witness {
            Some(x) => {
                prop_assert!(domain.contains(&x));
                prop_assert!(p.value(0.0, &x) >= -1e-9 && n.value(0.0, &x) >= -1e-9);
            }
            None => {
                for q in &probes {
                    prop_assert!(!(p.value(0.0, q) > 1e-9 && n.value(0.0, q) > 1e-9),
                        "common point {q:?} missed");
                }
            }
        }
        let sub = check_subset(&p, &n, 0.0, &domain).unwrap();
        if sub.holds {
            for q in probes.iter().filter(|q| p.value(0.0, q.as_slice()) >= 0.0) {
                prop_assert!(n.value(0.0, q) >= -1e-9);
            }
        }
    }
}
