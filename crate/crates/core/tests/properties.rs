use proptest::prelude::*;
use rand::SeedableRng;

use hermlab::connections::{
    christoffel, compatibility_residual, AffineTheta, ChernData, ConnectionSpec, ThetaField,
};
use hermlab::curvature::{
    chern_ricci, first_ricci_theta_formula, gauduchon_curvature, ricci, theta_curvature,
};
use hermlab::dsl::{evaluate, parse_expr, wirtinger_diff, Direction, Expr};
use hermlab::hodge::{form_pack, inner_with_omega};
use hermlab::metric::{real_metric_from_h, ChartPoint, HermitianForm, MetricField, MetricJet2};
use hermlab::models::RadialModel;
use hermlab::sampling::random_jet;
use hermlab::solver::{family_by_name, solve, AnsatzProblem, ObjectiveKind};
use hermlab::tensor::{mat_max_diff, CMat, C64};

fn jet_strategy() -> impl Strategy<Value = MetricJet2> {
    (1usize..=4, any::<u64>(), 0.05f64..0.6).prop_map(|(n, seed, scale)| random_jet(n, seed, scale))
}

fn point_strategy(n: usize) -> impl Strategy<Value = ChartPoint> {
    proptest::collection::vec((-1.5f64..1.5, -1.5f64..1.5), n).prop_filter_map("near origin", |v| {
        let z: Vec<C64> = v.into_iter().map(|(a, b)| C64::new(a, b)).collect();
        let r: f64 = z.iter().map(|c| c.norm_sqr()).sum();
        (r > 0.1).then(|| ChartPoint::new(z).unwrap())
    })
}

fn source_strategy() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("z1".to_string()),
        Just("z2".to_string()),
        Just("conj(z1)".to_string()),
        Just("conj(z2)".to_string()),
        Just("abs2(z)".to_string()),
        Just("i".to_string()),
        (1u32..40).prop_map(|k| format!("{}", k as f64 / 8.0)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a}*{b}")),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| format!("({a})/(2 + abs2(z) + {b}*conj({b}))")),
            (inner.clone(), 2i32..4).prop_map(|(a, k)| format!("({a})^{k}")),
            inner.clone().prop_map(|a| format!("exp(0.1*({a}))")),
            inner.clone().prop_map(|a| format!("conj({a})")),
            inner.prop_map(|a| format!("-({a})")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn real_metric_invariants(n in 1usize..=4, seed in any::<u64>()) {
        let h = random_jet(n, seed, 0.5).h().clone();
        let g = real_metric_from_h(&h).unwrap();
        prop_assert!(g.invariant_residual() < 1e-12);
        prop_assert!(g.is_positive());
    }

    #[test]
    fn torsion_is_exactly_antisymmetric(jet in jet_strategy()) {
        let cd = ChernData::new(&jet).unwrap();
        prop_assert_eq!(cd.torsion().antisymmetry_defect(), 0.0);
    }

    #[test]
    fn gauduchon_family_is_affine(jet in jet_strategy()) {
        let cd = ChernData::new(&jet).unwrap();
        let g = |t| christoffel(&cd, &ConnectionSpec::Gauduchon(t)).unwrap();
        let (g0, gh, g1) = (g(0.0), g(0.5), g(1.0));
        let half = C64::new(0.5, 0.0);
        let mid = g0.gamma_holo.add(&g1.gamma_holo).scale(half);
        prop_assert!(gh.gamma_holo.max_diff(&mid) < 1e-13);
        let mid = g0.gamma_anti.add(&g1.gamma_anti).scale(half);
        prop_assert!(gh.gamma_anti.max_diff(&mid) < 1e-13);
    }

    #[test]
    fn chern_line_is_compatible(jet in jet_strategy(), lambda in -2.0f64..2.0) {
        let cd = ChernData::new(&jet).unwrap();
        let spec = ConnectionSpec::LambdaMu(lambda, lambda - 0.5);
        prop_assert!(compatibility_residual(&jet, &christoffel(&cd, &spec).unwrap()) <= 1e-11);
    }

    #[test]
    fn curvature_is_quadratic_in_t(jet in jet_strategy()) {
        let cd = ChernData::new(&jet).unwrap();
        let r = |t| gauduchon_curvature(&cd, t).0;
        let (r0, r1, r2, r5) = (r(0.0), r(1.0), r(2.0), r(5.0));
        // Lagrange weights at t = 5 for nodes 0, 1, 2
        let lagrange = r0.combine(6.0, &r1, -15.0).combine(1.0, &r2, 10.0);
        let scale = r5.max_abs().max(1.0);
        prop_assert!(lagrange.max_diff(&r5) / scale < 1e-10);
    }

    #[test]
    fn first_ricci_of_random_theta(jet in jet_strategy(), seed in any::<u64>()) {
        let cd = ChernData::new(&jet).unwrap();
        let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let field = AffineTheta::random(cd.dim(), 0.3, &mut g);
        let th = field.theta(cd.point()).unwrap();
        let (r11, _) = theta_curvature(&cd, &th);
        prop_assert!(mat_max_diff(&ricci(&cd, &r11).ric1, &first_ricci_theta_formula(&cd, &th)) < 1e-10);
    }

    #[test]
    fn hodge_identities(jet in jet_strategy()) {
        let cd = ChernData::new(&jet).unwrap();
        let f = form_pack(&cd);
        let rp = chern_ricci(&cd);
        prop_assert!(mat_max_diff(&f.dd_star, &f.dbardbar_star.adjoint()) < 1e-12);
        let both: CMat = &f.dd_star + &f.dbardbar_star;
        for t in [0.25, 0.5, 1.0] {
            let r = ricci(&cd, &gauduchon_curvature(&cd, t)).ric1;
            prop_assert!(mat_max_diff(&r, &(&rp.ric1 - &both * C64::new(t, 0.0))) < 1e-9);
        }
        prop_assert!(mat_max_diff(&rp.ric3, &(&rp.ric1 - &f.dd_star)) < 1e-9);
        prop_assert!(mat_max_diff(&rp.ric4, &(&rp.ric1 - &f.dbardbar_star)) < 1e-9);
        let r2 = &rp.ric1 - &f.lam_ddbar - &both + &f.boxdot;
        prop_assert!(mat_max_diff(&rp.ric2, &r2) < 1e-9);
        let pairing = inner_with_omega(&cd, &f.dbardbar_star) - C64::new(f.norm_del_star2 - f.scal_ddbar, 0.0);
        prop_assert!(pairing.norm() < 1e-8);
    }

    #[test]
    fn scalar_identities(jet in jet_strategy(), t in -2.0f64..2.0) {
        let cd = ChernData::new(&jet).unwrap();
        let f = form_pack(&cd);
        let sc = C64::new(chern_ricci(&cd).sc.unwrap(), 0.0);
        let dd = inner_with_omega(&cd, &f.dd_star);
        let r = ricci(&cd, &gauduchon_curvature(&cd, t));
        prop_assert!((r.s1 - (sc - dd * (2.0 * t))).norm() < 1e-8);
        let s2 = sc - dd * (1.0 - 2.0 * t) - t * t * (2.0 * f.norm_del_omega2 + f.norm_del_star2);
        prop_assert!((r.s2 - s2).norm() < 1e-8);
    }

    #[test]
    fn kahler_jets_collapse(n in 1usize..=4, seed in any::<u64>()) {
        let z = ChartPoint::real(&vec![0.3; n]).unwrap();
        let h = HermitianForm::new(random_jet(n, seed, 0.5).h().matrix().clone()).unwrap();
        let jet = MetricJet2::constant(z, h).unwrap();
        let cd = ChernData::new(&jet).unwrap();
        let chern = christoffel(&cd, &ConnectionSpec::Chern).unwrap();
        for spec in ["bismut", "lc", "gauduchon:-1.5", "lambda-mu:0.4,2"] {
            let c = christoffel(&cd, &ConnectionSpec::parse(spec).unwrap()).unwrap();
            prop_assert!(c.max_diff(&chern) <= 1e-12);
        }
    }

    #[test]
    fn hopf_positivity(lambda in -0.99f64..5.0, z in point_strategy(3)) {
        let m = RadialModel::hopf(3, lambda).unwrap();
        prop_assert!(HermitianForm::new(m.metric(&z).unwrap()).unwrap().min_eigenvalue() > 0.0);
    }

    #[test]
    fn hopf_first_chern_ricci_is_lambda_free(l1 in -0.9f64..4.0, l2 in -0.9f64..4.0, z in point_strategy(2)) {
        let r = |l| chern_ricci(&ChernData::new(&RadialModel::hopf(2, l).unwrap().jet(&z).unwrap()).unwrap()).ric1;
        prop_assert!(mat_max_diff(&r(l1), &r(l2)) < 1e-10);
    }

    #[test]
    fn parser_round_trip(src in source_strategy()) {
        let e = parse_expr(&src, 2).unwrap();
        let again = parse_expr(&e.to_string(), 2).unwrap();
        prop_assert_eq!(again, e);
    }

    #[test]
    fn wirtinger_conj_commutes(src in source_strategy(), z in point_strategy(2), k in 0usize..2) {
        let e = parse_expr(&src, 2).unwrap();
        let lhs = evaluate(&wirtinger_diff(&Expr::Conj(Box::new(e.clone())), k, Direction::Holo), &z);
        let rhs = evaluate(&wirtinger_diff(&e, k, Direction::Anti), &z);
        if let (Ok(a), Ok(b)) = (lhs, rhs) {
            prop_assert!((a - b.conj()).norm() <= 1e-12 * (1.0 + a.norm()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn solver_is_deterministic(seed in any::<u64>(), t in 0.25f64..2.0) {
        let fam = family_by_name("hopf", 2).unwrap();
        let p = AnsatzProblem::new(fam, ObjectiveKind::GauduchonFlat(t), seed);
        let (a, b) = (solve(&p).unwrap(), solve(&p).unwrap());
        prop_assert_eq!(&a.trace, &b.trace);
        prop_assert!((a.params[0] - (t - 1.0)).abs() < 1e-6);
    }
}
