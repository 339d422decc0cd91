//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line
//! to stderr (uncaptured) and the test fails if any criterion fails.

use std::io::Write;
use std::sync::Arc;

use rand::Rng;

use hermlab::connections::{connection_jet, ChernData, ConnectionSpec};
use hermlab::curvature::{chern_ricci, connection_curvature, gauduchon_curvature, ricci};
use hermlab::dsl::{parse_scalar, CompiledScalar, DslMetric};
use hermlab::hodge::{form_pack, NORM_DEL_OMEGA, NORM_DEL_STAR_OMEGA, NORM_T};
use hermlab::metric::{ChartPoint, MetricField};
use hermlab::models::{resolve_model, ConformalModel, ModelParams, RadialModel, TorusModel};
use hermlab::sampling::{hopf_annulus, rng};
use hermlab::solver::{family_by_name, solve, AnsatzProblem, ObjectiveKind};
use hermlab::suite::{run_suite, Report, SuiteConfig};
use hermlab::tensor::{mat_max_abs, mat_max_diff, CMat, C64};

const POINTS: usize = 100;
const SEED: u64 = 20_240_601;

struct Outcome {
    lines: Vec<(usize, bool)>,
}

impl Outcome {
    fn record(&mut self, k: usize, name: &str, value: f64, tol: f64, pass: bool, extra: &str) {
        let tag = if pass { "PASS" } else { "FAIL" };
        let line =
            format!("{tag} [{k:2}] {name}: max residual {value:.3e} (tol {tol:.0e}){extra}\n");
        // bypass the test harness capture so the lines land in the log
        let _ = std::io::stderr().write_all(line.as_bytes());
        self.lines.push((k, pass));
    }

    fn upper(&mut self, k: usize, name: &str, value: f64, tol: f64) {
        self.record(k, name, value, tol, value <= tol, "");
    }
}

fn worst(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn points(n: usize) -> Vec<ChartPoint> {
    hopf_annulus(n, POINTS, SEED)
}

/// `a·Id + B B†` with random affine entries in `z`, `z̄` and one quadratic term.
fn random_metric_source(n: usize, seed: u64) -> String {
    let mut g = rng(seed);
    let mut coef = |s: f64| -> f64 { g.random_range(-s..s) };
    let mut b = vec![vec![String::new(); n]; n];
    for row in b.iter_mut() {
        for e in row.iter_mut() {
            let mut s = format!("{:.4}", 0.5 + coef(0.5).abs());
            for m in 1..=n {
                s.push_str(&format!(
                    " + ({:.4})*z{m} + ({:.4})*conj(z{m})",
                    coef(0.3),
                    coef(0.3)
                ));
            }
            s.push_str(&format!(" + ({:.4})*z1*conj(z{n})", coef(0.2)));
            *e = s;
        }
    }
    let mut out = format!("dim = {n}\nname = random-{seed}\n");
    for i in 0..n {
        for j in i..n {
            let mut terms = Vec::new();
            if i == j {
                terms.push("1.5".to_string());
            }
            for (bi, bj) in b[i].iter().zip(&b[j]) {
                terms.push(format!("({bi})*conj({bj})"));
            }
            out.push_str(&format!(
                "h[{}][{}] = {}\n",
                i + 1,
                j + 1,
                terms.join(" + ")
            ));
        }
    }
    out
}

fn random_metrics() -> Vec<Arc<dyn MetricField>> {
    (0..5)
        .map(|s| {
            let n = if s == 4 { 3 } else { 2 };
            Arc::new(DslMetric::from_text(&random_metric_source(n, 100 + s)).unwrap())
                as Arc<dyn MetricField>
        })
        .collect()
}

const EXPONENTS: [&str; 5] = [
    "0.3*z1*conj(z1) - 0.2*(z2 + conj(z2))",
    "0.1*(z1*z2 + conj(z1*z2))",
    "log(1 + z2*conj(z2))",
    "0.2*exp(0.5*(z1 + conj(z1)))",
    "0.25*abs2(z) - 0.05*(z1*conj(z2) + z2*conj(z1))",
];

fn suite(model: &str, n: usize, tweak: impl FnOnce(&mut SuiteConfig)) -> Report {
    let mut cfg = SuiteConfig {
        model: model.into(),
        n,
        points: POINTS,
        seed: SEED,
        ..SuiteConfig::default()
    };
    tweak(&mut cfg);
    run_suite(&cfg).unwrap_or_else(|e| panic!("{model}: {e}"))
}

fn check_value(r: &Report, id: &str) -> f64 {
    r.check(id)
        .unwrap_or_else(|| panic!("{} has no check {id}", r.model))
        .max_residual
}

/// `n(δ_ij/|z|² − z̄_i z_j/|z|⁴)`.
fn hopf_ricci_closed_form(z: &ChartPoint) -> CMat {
    let n = z.dim();
    let s = z.norm_sqr();
    let w = z.coords();
    CMat::from_fn(n, n, |i, j| {
        let d = if i == j { 1.0 / s } else { 0.0 };
        (C64::new(d, 0.0) - w[i].conj() * w[j] / (s * s)) * n as f64
    })
}

/// Wirtinger `∂f/∂z_m` by central differences with one Richardson level.
fn del_fd(f: &CompiledScalar, z: &[C64], m: usize) -> C64 {
    let val = |dz: C64| {
        let mut w = z.to_vec();
        w[m] += dz;
        f.value(&w).unwrap()
    };
    let central = |h: f64, dir: C64| (val(dir * h) - val(-dir * h)) / (2.0 * h);
    let rich = |dir: C64| {
        let (a, b) = (central(1e-3, dir), central(5e-4, dir));
        (b * 4.0 - a) / 3.0
    };
    (rich(C64::new(1.0, 0.0)) - C64::new(0.0, 1.0) * rich(C64::new(0.0, 1.0))) * 0.5
}

#[test]
fn acceptance_criteria() {
    let mut out = Outcome { lines: Vec::new() };

    // 1. Gauduchon-flat Hopf metrics, closed form and generic engine.
    let mut c1: f64 = 0.0;
    for n in [2, 3] {
        for t in [0.25, 0.5, 1.0, 2.0] {
            let lambda = 2.0 * (n as f64 - 1.0) * t / n as f64 - 1.0;
            let m = RadialModel::hopf(n, lambda).unwrap();
            for z in points(n) {
                let cd = ChernData::new(&m.jet(&z).unwrap()).unwrap();
                let closed = ricci(&cd, &gauduchon_curvature(&cd, t)).ric1;
                let cj = connection_jet(&cd, &ConnectionSpec::Gauduchon(t)).unwrap();
                let engine = ricci(&cd, &connection_curvature(&cj).lowered11(&cd)).ric1;
                c1 = worst(c1, mat_max_abs(&closed).max(mat_max_abs(&engine)));
            }
        }
    }
    out.upper(
        1,
        "t-Gauduchon Ricci-flat Hopf metrics, n in {2,3}, t in {1/4,1/2,1,2}",
        c1,
        1e-9,
    );

    // 2. First Chern-Ricci form of the perturbed Hopf family.
    let mut c2: f64 = 0.0;
    for n in [2, 3] {
        for lambda in [-0.5, 0.0, 1.0, 3.0] {
            let m = RadialModel::hopf(n, lambda).unwrap();
            for z in points(n) {
                let cd = ChernData::new(&m.jet(&z).unwrap()).unwrap();
                c2 = worst(
                    c2,
                    mat_max_diff(&chern_ricci(&cd).ric1, &hopf_ricci_closed_form(&z)),
                );
            }
        }
    }
    out.upper(
        2,
        "first Chern-Ricci form of the perturbed Hopf metrics is lambda-independent",
        c2,
        1e-10,
    );

    // 3. Real Chern-Ricci flat Hopf metric, from the radial model and from
    //    a metric file written from the potential.
    let mut c3: f64 = 0.0;
    for n in [2, 3] {
        let radial = resolve_model("hopf-real-chern-flat", &ModelParams::new(n)).unwrap();
        let c = 4.0 / n as f64;
        let mut src = format!("dim = {n}\nexclude = abs2(z)\n");
        for i in 1..=n {
            for j in i..=n {
                let diag = if i == j {
                    format!("{} / abs2(z) + ", 4.0 - c)
                } else {
                    String::new()
                };
                src.push_str(&format!(
                    "h[{i}][{j}] = {diag}{c}*conj(z{i})*z{j}/abs2(z)^2\n"
                ));
            }
        }
        let dsl = DslMetric::from_text(&src).unwrap();
        for z in points(n) {
            for m in [radial.as_ref(), &dsl as &dyn MetricField] {
                let cd = ChernData::new(&m.jet(&z).unwrap()).unwrap();
                let f = form_pack(&cd);
                let r1 = chern_ricci(&cd).ric1;
                c3 = worst(
                    c3,
                    mat_max_diff(&r1, &f.dd_star).max(mat_max_diff(&r1, &f.dbardbar_star)),
                );
            }
        }
    }
    out.upper(3, "real Chern-Ricci flat Hopf metric, n in {2,3}", c3, 1e-9);

    // Suite reports shared by the remaining criteria.
    let mut reports = vec![
        suite("hopf", 2, |_| {}),
        suite("hopf", 3, |_| {}),
        suite("hopf-perturbed", 2, |c| c.lambda = Some(1.5)),
        suite("hopf-gauduchon-flat", 3, |c| c.t = Some(0.5)),
        suite("hopf-real-chern-flat", 2, |_| {}),
        suite("torus", 2, |_| {}),
        suite("fubini-study", 2, |_| {}),
        suite("fubini-study", 1, |c| c.scale = Some(2.0)),
    ];
    let dir = tempfile::tempdir().unwrap();
    for s in 0..5u64 {
        let n = if s == 4 { 3 } else { 2 };
        let p = dir.path().join(format!("random{s}.hmet"));
        std::fs::write(&p, random_metric_source(n, 100 + s)).unwrap();
        reports.push(suite(&format!("dsl:{}", p.display()), n, |_| {}));
    }
    let mut conformal = Vec::new();
    for (k, f) in EXPONENTS.iter().enumerate() {
        let p = dir.path().join(format!("f{k}.fn"));
        std::fs::write(&p, format!("f = {f}\n")).unwrap();
        for base in ["hopf", "torus"] {
            conformal.push(suite(
                &format!("conformal:{base}:{}", p.display()),
                2,
                |_| {},
            ));
        }
    }
    let all: Vec<&Report> = reports.iter().chain(&conformal).collect();
    let max_of = |rs: &[&Report], id: &str| rs.iter().map(|r| check_value(r, id)).fold(0.0, worst);

    // 4. Closed-form vs general-θ vs generic-engine curvature.
    let mut c4 = max_of(&all, "curvature-routes");
    for m in random_metrics().into_iter().chain([
        Arc::new(TorusModel::standard(2).unwrap()) as Arc<dyn MetricField>,
        Arc::new(RadialModel::fubini_study(3, 0.7).unwrap()),
        Arc::new(RadialModel::hopf(2, 0.0).unwrap()),
    ]) {
        for z in points(m.dim()).into_iter().take(20) {
            let cd = ChernData::new(&m.jet(&z).unwrap()).unwrap();
            for t in [-1.0, 0.0, 0.25, 0.5, 1.0, 2.0] {
                let cj = connection_jet(&cd, &ConnectionSpec::Gauduchon(t)).unwrap();
                let engine = connection_curvature(&cj).lowered11(&cd);
                c4 = worst(c4, gauduchon_curvature(&cd, t).max_diff(&engine));
            }
        }
    }
    out.upper(
        4,
        "closed-form Gauduchon curvature vs general theta curvature",
        c4,
        1e-10,
    );

    // 5, 6. Ricci relations on every model.
    out.upper(
        5,
        "Ricci curvature of Gauduchon connections, t in {1/4,1/2,1}",
        max_of(&all, "ricci-relation"),
        1e-9,
    );
    out.upper(
        6,
        "Chern-Ricci identities for the second, third and fourth traces",
        max_of(&all, "chern-ricci-identities"),
        1e-9,
    );

    // 7. Scalar identities and the Riemannian scalar curvature.
    let s_an = max_of(&all, "scalar-identities");
    let s_fd = max_of(&all, "riemannian-scalar");
    let extra = format!(
        "; riemannian {s_fd:.3e} (tol 1e-4); norms |T|^2 x{NORM_T}, |del omega|^2 x{NORM_DEL_OMEGA}, |del* omega|^2 x{NORM_DEL_STAR_OMEGA}"
    );
    out.record(
        7,
        "scalar curvature identities",
        s_an,
        1e-8,
        s_an <= 1e-8 && s_fd <= 1e-4,
        &extra,
    );

    // 8. Real-side correspondence.
    let lm = max_of(&all, "lambda-mu-christoffels");
    let ric = max_of(&all, "real-chern-ricci");
    let j_in = max_of(&all, "nabla-j-compatible");
    let j_detect = all
        .iter()
        .all(|r| r.check("nabla-j-detection").is_some_and(|c| c.pass));
    let extra = format!("; real Chern-Ricci {ric:.3e} (tol 1e-4); nabla J on the Chern line {j_in:.3e}; off-line detection {j_detect}");
    out.record(
        8,
        "complexified lambda-mu connections and real Chern-Ricci",
        lm,
        1e-5,
        lm <= 1e-5 && ric <= 1e-4 && j_in <= 1e-6 && j_detect,
        &extra,
    );

    // 9. Solver recovery.
    let mut c9: f64 = 0.0;
    for n in [2, 3] {
        let fam = family_by_name("hopf", n).unwrap();
        for t in [0.25, 0.5, 0.75, 1.0, 2.0] {
            let prob = AnsatzProblem::new(fam.clone(), ObjectiveKind::GauduchonFlat(t), SEED);
            let sol = solve(&prob).unwrap();
            let want = 2.0 * (n as f64 - 1.0) * t / n as f64 - 1.0;
            c9 = worst(c9, (sol.params[0] - want).abs());
        }
    }
    let fs = AnsatzProblem::new(
        family_by_name("fubini-study", 1).unwrap(),
        ObjectiveKind::RealChernEinstein(None),
        SEED,
    )
    .fix_parameter(0, 1.0);
    let fs_err = (solve(&fs).unwrap().params[1] - 2.0).abs();
    let extra = format!("; Fubini-Study Einstein constant error {fs_err:.3e} (tol 1e-8)");
    out.record(
        9,
        "solver recovers the flat Hopf parameter",
        c9,
        1e-6,
        c9 <= 1e-6 && fs_err <= 1e-8,
        &extra,
    );

    // 10. Oracle coherence.
    let jets = max_of(&all, "jet-fd-oracle");
    let slope = all
        .iter()
        .filter_map(|r| r.check("fd-order"))
        .map(|c| c.max_residual)
        .fold(0.0, worst);
    let extra = format!("; |slope - 2| {slope:.3e} (tol 0.2)");
    out.record(
        10,
        "analytic jets vs finite differences, relative to max(1, |h|)",
        jets,
        1e-6,
        jets <= 1e-6 && slope <= 0.2,
        &extra,
    );

    // 11. Structural invariants.
    let tors = max_of(&all, "torsion-antisymmetry");
    let c20 = max_of(&all, "curvature20-antisymmetry");
    let pair = max_of(&all, "hermitian-pair-symmetry");
    let bianchi = max_of(&all, "lc-first-bianchi");
    let kahler: Vec<&Report> = all.iter().copied().filter(|r| r.kahler).collect();
    let collapse = max_of(&kahler, "kahler-collapse");
    let kahler_models = kahler
        .iter()
        .filter(|r| r.config.model == "torus" || r.config.model == "fubini-study")
        .count();
    let pass = tors == 0.0
        && c20 <= 1e-12
        && pair <= 1e-10
        && bianchi <= 1e-4
        && collapse <= 1e-10
        && kahler_models == 3;
    let extra = format!(
        "; torsion {tors:e}, (2,0) {c20:.1e}, pair {pair:.1e}, Bianchi {bianchi:.1e}, Kahler collapse {collapse:.1e} on {kahler_models} Kahler models"
    );
    out.record(
        11,
        "structural invariants",
        tors.max(c20).max(pair),
        1e-10,
        pass,
        &extra,
    );

    // 12. Conformal shift, against finite differences of f.
    let mut c12: f64 = 0.0;
    for f in EXPONENTS {
        let n = 2;
        let expr = parse_scalar(f, n).unwrap();
        let compiled = CompiledScalar::new(expr.clone(), n).unwrap();
        for base in [
            Arc::new(RadialModel::hopf(n, 0.0).unwrap()) as Arc<dyn MetricField>,
            Arc::new(TorusModel::standard(n).unwrap()),
        ] {
            let cm = ConformalModel::new(base.clone(), expr.clone()).unwrap();
            for z in points(n).into_iter().take(25) {
                let b = form_pack(&ChernData::new(&base.jet(&z).unwrap()).unwrap());
                let s = form_pack(&ChernData::new(&cm.jet(&z).unwrap()).unwrap());
                for m in 0..n {
                    let df = del_fd(&compiled, z.coords(), m);
                    let want = b.dbar_star_omega[m] + C64::new(0.0, 1.0) * df * (n as f64 - 1.0);
                    c12 = worst(c12, (s.dbar_star_omega[m] - want).norm());
                }
            }
        }
    }
    c12 = worst(
        c12,
        max_of(&conformal.iter().collect::<Vec<_>>(), "conformal-shift"),
    );
    out.upper(12, "conformal change of the adjoint form", c12, 1e-9);

    assert_eq!(out.lines.len(), 12);
    let failed: Vec<usize> = out.lines.iter().filter(|l| !l.1).map(|l| l.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
    for r in &all {
        assert!(r.passed, "{}: {:?}", r.model, r.failures());
    }
}
