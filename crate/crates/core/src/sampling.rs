//! Seeded sample generators.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)`. A point in
//! an annulus `r_min ≤ |z| ≤ r_max` is drawn as follows: `2n` standard
//! normal reals `(x_1..x_n, y_1..y_n)` give the direction `z_k = x_k + √−1 y_k`
//! after normalization, then one uniform `u ∈ [0,1)` sets the radius
//! `r = r_min·(r_max/r_min)^u`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::metric::{ChartPoint, HermitianForm, MetricJet2};
use crate::tensor::{CMat, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn annulus_point<R: Rng>(n: usize, r_min: f64, r_max: f64, rng: &mut R) -> ChartPoint {
    loop {
        let v: Vec<f64> = (0..2 * n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        let u: f64 = rng.random();
        let r = r_min * (r_max / r_min).powf(u);
        let z = (0..n)
            .map(|k| C64::new(v[k], v[n + k]) * (r / norm))
            .collect();
        return ChartPoint::new(z).expect("dimension checked by caller");
    }
}

/// `count` points in the annulus, reproducible from `seed`.
pub fn annulus_points(
    n: usize,
    count: usize,
    r_min: f64,
    r_max: f64,
    seed: u64,
) -> Vec<ChartPoint> {
    let mut g = rng(seed);
    (0..count)
        .map(|_| annulus_point(n, r_min, r_max, &mut g))
        .collect()
}

/// The default sample region `½ ≤ |z| ≤ 2`.
pub fn hopf_annulus(n: usize, count: usize, seed: u64) -> Vec<ChartPoint> {
    annulus_points(n, count, 0.5, 2.0, seed)
}

/// Random jet satisfying every [`MetricJet2`] symmetry. Each block has
/// Gaussian entries of size `scale`; `h = AA† + Id`. Any such jet is the
/// 2-jet of a quadratic polynomial metric, so it is a valid test input for
/// every pointwise identity.
pub fn random_jet(n: usize, seed: u64, scale: f64) -> MetricJet2 {
    let mut g = rng(seed);
    let mut c = || C64::new(g.sample(StandardNormal), g.sample(StandardNormal)) * scale;
    let a = CMat::from_fn(n, n, |_, _| c());
    let h = &a * a.adjoint() + CMat::identity(n, n);
    let dh: Vec<CMat> = (0..n).map(|_| CMat::from_fn(n, n, |_, _| c())).collect();
    let mut holo = vec![CMat::zeros(n, n); n * n];
    let mut mixed = vec![CMat::zeros(n, n); n * n];
    for i in 0..n {
        for j in i..n {
            let b = CMat::from_fn(n, n, |_, _| c());
            holo[i * n + j] = b.clone();
            holo[j * n + i] = b;
            let m = CMat::from_fn(n, n, |_, _| c());
            if i == j {
                mixed[i * n + i] = (&m + m.adjoint()) * C64::new(0.5, 0.0);
            } else {
                mixed[j * n + i] = m.adjoint();
                mixed[i * n + j] = m;
            }
        }
    }
    let z = ChartPoint::real(&vec![0.5; n]).expect("n within range");
    let h = HermitianForm::new((&h + h.adjoint()) * C64::new(0.5, 0.0)).expect("Hermitian");
    MetricJet2::new(z, h, dh, mixed, holo).expect("consistent shapes")
}
