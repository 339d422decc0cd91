//! Hermitian forms, metric jets and the finite-difference jet oracle.
//!
//! Coordinates are holomorphic `z^i = x^i + √−1 x^I` on a single chart. The
//! real coordinate vector is laid out as `(x^1..x^n, x^{1'}..x^{n'})`, so the
//! imaginary part of `z^i` sits at index `n + i`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::{CMat, C64, I};

pub const MAX_DIM: usize = 6;

/// Pivot tolerance of the Hermitian factorization used for positivity.
pub const PIVOT_TOL: f64 = 1e-12;

/// Default symmetry tolerance for [`HermitianForm`] construction.
pub const SYM_TOL: f64 = 1e-10;

pub fn check_dim(n: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(Error::Dimension(n))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartPoint {
    z: Vec<C64>,
}

impl ChartPoint {
    pub fn new(z: Vec<C64>) -> Result<Self> {
        check_dim(z.len())?;
        if z.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { z })
    }

    /// Point with purely real coordinates, handy for tests and examples.
    pub fn real(xs: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Builds a point from real coordinates `(Re z, Im z)`.
    pub fn from_real(x: &[f64]) -> Result<Self> {
        if !x.len().is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                expected: x.len() + 1,
                got: x.len(),
            });
        }
        let n = x.len() / 2;
        Self::new((0..n).map(|i| C64::new(x[i], x[n + i])).collect())
    }

    pub fn to_real(&self) -> Vec<f64> {
        let mut x: Vec<f64> = self.z.iter().map(|c| c.re).collect();
        x.extend(self.z.iter().map(|c| c.im));
        x
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.z.len()
    }

    #[inline]
    pub fn coords(&self) -> &[C64] {
        &self.z
    }

    #[inline]
    pub fn coord(&self, i: usize) -> C64 {
        self.z[i]
    }

    /// `|z|² = Σ z_k z̄_k`.
    pub fn norm_sqr(&self) -> f64 {
        self.z.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Lower-triangular factor `L` with `H = L L†`.
#[derive(Debug, Clone)]
pub struct HermitianFactor {
    l: CMat,
}

impl HermitianFactor {
    /// Solves `H X = B`.
    pub fn solve(&self, b: &CMat) -> CMat {
        let n = self.l.nrows();
        let mut x = b.clone();
        for col in 0..b.ncols() {
            for i in 0..n {
                let mut s = x[(i, col)];
                for k in 0..i {
                    s -= self.l[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = s / self.l[(i, i)];
            }
            for i in (0..n).rev() {
                let mut s = x[(i, col)];
                for k in i + 1..n {
                    s -= self.l[(k, i)].conj() * x[(k, col)];
                }
                x[(i, col)] = s / self.l[(i, i)].conj();
            }
        }
        x
    }

    pub fn inverse(&self) -> CMat {
        let n = self.l.nrows();
        self.solve(&CMat::identity(n, n))
    }

    pub fn lower(&self) -> &CMat {
        &self.l
    }
}

/// Cholesky factorization of a Hermitian matrix. Fails when a pivot drops
/// below `pivot_tol` relative to the largest diagonal entry.
pub fn hermitian_factorization(h: &CMat, pivot_tol: f64) -> Result<HermitianFactor> {
    let n = h.nrows();
    let scale = (0..n)
        .map(|i| h[(i, i)].re.abs())
        .fold(0.0, f64::max)
        .max(1.0);
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = h[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !d.is_finite() || d <= pivot_tol * scale {
            return Err(Error::NotPositive { pivot: j, value: d });
        }
        let dj = d.sqrt();
        l[(j, j)] = C64::new(dj, 0.0);
        for i in j + 1..n {
            let mut s = h[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / dj;
        }
    }
    Ok(HermitianFactor { l })
}

/// `max |H − H†| ≤ tol`.
pub fn hermitian_check(h: &CMat, tol: f64) -> bool {
    h.is_square() && hermitian_defect(h) <= tol
}

pub fn hermitian_defect(h: &CMat) -> f64 {
    let n = h.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Matrix `H[(i, j)] = h_{i j̄}` known to be Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianForm(CMat);

impl HermitianForm {
    pub fn new(m: CMat) -> Result<Self> {
        Self::with_tolerance(m, SYM_TOL)
    }

    pub fn with_tolerance(m: CMat, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        check_dim(m.nrows())?;
        if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let defect = hermitian_defect(&m);
        let scale = m.iter().map(|v| v.norm()).fold(1.0, f64::max);
        if defect > tol * scale {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(CMat::identity(n, n))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    #[inline]
    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn factor(&self) -> Result<HermitianFactor> {
        hermitian_factorization(&self.0, PIVOT_TOL)
    }

    pub fn is_positive(&self) -> bool {
        self.factor().is_ok()
    }

    /// Smallest eigenvalue, for diagnostics only.
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.dim();
        // Real 2n×2n embedding has the same spectrum (each value twice).
        let mut r = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let v = self.0[(i, j)];
                r[(i, j)] = v.re;
                r[(n + i, n + j)] = v.re;
                r[(i, n + j)] = -v.im;
                r[(n + i, j)] = v.im;
            }
        }
        r.symmetric_eigenvalues().min()
    }
}

/// Value and first/second Wirtinger derivatives of `h_{k l̄}` at a point.
///
/// Only holomorphic first derivatives are stored; `∂h_{k l̄}/∂z̄^j` is
/// `conj(∂h_{l k̄}/∂z^j)`.
#[derive(Debug, Clone)]
pub struct MetricJet2 {
    point: ChartPoint,
    h: HermitianForm,
    dh: Vec<CMat>,
    d2h_mixed: Vec<CMat>,
    d2h_holo: Vec<CMat>,
}

impl MetricJet2 {
    /// `dh[i]` is `∂h/∂z^i`; `d2h_mixed[i*n+j]` is `∂²h/∂z^i∂z̄^j`;
    /// `d2h_holo[i*n+j]` is `∂²h/∂z^i∂z^j`.
    pub fn new(
        point: ChartPoint,
        h: HermitianForm,
        dh: Vec<CMat>,
        d2h_mixed: Vec<CMat>,
        d2h_holo: Vec<CMat>,
    ) -> Result<Self> {
        let n = h.dim();
        if point.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: point.dim(),
            });
        }
        let shapes_ok = dh.len() == n
            && d2h_mixed.len() == n * n
            && d2h_holo.len() == n * n
            && dh
                .iter()
                .chain(&d2h_mixed)
                .chain(&d2h_holo)
                .all(|m| m.nrows() == n && m.ncols() == n);
        if !shapes_ok {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: dh.len(),
            });
        }
        let finite = dh
            .iter()
            .chain(&d2h_mixed)
            .chain(&d2h_holo)
            .all(|m| m.iter().all(|v| v.re.is_finite() && v.im.is_finite()));
        if !finite {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            point,
            h,
            dh,
            d2h_mixed,
            d2h_holo,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn point(&self) -> &ChartPoint {
        &self.point
    }

    pub fn h(&self) -> &HermitianForm {
        &self.h
    }

    /// `h_{k l̄}`.
    #[inline]
    pub fn metric(&self, k: usize, l: usize) -> C64 {
        self.h.get(k, l)
    }

    /// `∂h_{k l̄}/∂z^m`.
    #[inline]
    pub fn d(&self, m: usize, k: usize, l: usize) -> C64 {
        self.dh[m][(k, l)]
    }

    /// `∂h_{k l̄}/∂z̄^m`, recovered by conjugate symmetry.
    #[inline]
    pub fn dbar(&self, m: usize, k: usize, l: usize) -> C64 {
        self.dh[m][(l, k)].conj()
    }

    /// `∂²h_{k l̄}/∂z^i∂z̄^j`.
    #[inline]
    pub fn mixed(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        self.d2h_mixed[i * self.dim() + j][(k, l)]
    }

    /// `∂²h_{k l̄}/∂z^i∂z^j`.
    #[inline]
    pub fn holo(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        self.d2h_holo[i * self.dim() + j][(k, l)]
    }

    pub fn dh_block(&self, m: usize) -> &CMat {
        &self.dh[m]
    }

    /// `∂h/∂z̄^m` as a matrix, i.e. `(∂h/∂z^m)†`.
    pub fn dbar_block(&self, m: usize) -> CMat {
        self.dh[m].adjoint()
    }

    pub fn mixed_block(&self, i: usize, j: usize) -> &CMat {
        &self.d2h_mixed[i * self.dim() + j]
    }

    pub fn holo_block(&self, i: usize, j: usize) -> &CMat {
        &self.d2h_holo[i * self.dim() + j]
    }

    /// Largest violation of the jet symmetry invariants: symmetry of the
    /// holomorphic Hessian and conj-transpose consistency of the mixed one.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let a = (self.holo(i, j, k, l) - self.holo(j, i, k, l)).norm();
                        let b = (self.mixed(i, j, k, l) - self.mixed(j, i, l, k).conj()).norm();
                        worst = worst.max(a).max(b);
                    }
                }
            }
        }
        worst.max(hermitian_defect(self.h.matrix()))
    }

    /// Largest entrywise difference over all four jet blocks.
    pub fn max_diff(&self, other: &MetricJet2) -> f64 {
        let blocks = |j: &MetricJet2| -> Vec<C64> {
            let mut v: Vec<C64> = j.h.matrix().iter().copied().collect();
            for m in j.dh.iter().chain(&j.d2h_mixed).chain(&j.d2h_holo) {
                v.extend(m.iter().copied());
            }
            v
        };
        crate::tensor::max_abs_diff(&blocks(self), &blocks(other))
    }

    /// Jet of the constant metric `h` (all derivatives zero).
    pub fn constant(point: ChartPoint, h: HermitianForm) -> Result<Self> {
        let n = h.dim();
        let z = CMat::zeros(n, n);
        Self::new(
            point,
            h,
            vec![z.clone(); n],
            vec![z.clone(); n * n],
            vec![z; n * n],
        )
    }
}

/// A Hermitian metric field on a chart, evaluated pointwise.
pub trait MetricField: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// Whether `z` avoids the singular locus.
    fn admissible(&self, z: &ChartPoint) -> bool;

    /// Distance from `z` to the singular locus, if known.
    fn admissible_radius(&self, _z: &ChartPoint) -> f64 {
        f64::INFINITY
    }

    /// The matrix `h_{i j̄}(z)`.
    fn metric(&self, z: &ChartPoint) -> Result<CMat>;

    /// Exact jet at `z`.
    fn jet(&self, z: &ChartPoint) -> Result<MetricJet2>;
}

/// Jet assembled from central differences of `h` in the `2n` real
/// directions, with Wirtinger combinations `∂/∂z = ½(∂/∂x − √−1 ∂/∂y)`.
/// Error is `O(step²)`.
pub fn jet_fd_oracle(field: &dyn MetricField, z: &ChartPoint, step: f64) -> Result<MetricJet2> {
    let n = field.dim();
    if z.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: z.dim(),
        });
    }
    if !field.admissible(z) {
        return Err(Error::SingularLocus(field.name().to_string()));
    }
    if !(step > 0.0) || step >= field.admissible_radius(z) / 4.0 {
        return Err(Error::InvalidStep(step));
    }
    let x0 = z.to_real();
    let eval = |shifts: &[(usize, f64)]| -> Result<CMat> {
        let mut x = x0.clone();
        for &(a, s) in shifts {
            x[a] += s;
        }
        let p = ChartPoint::from_real(&x)?;
        if !field.admissible(&p) {
            return Err(Error::SingularLocus(field.name().to_string()));
        }
        let m = field.metric(&p)?;
        if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(m)
    };

    let m = 2 * n;
    let h0 = eval(&[])?;
    let mut first = Vec::with_capacity(m);
    let mut plus = Vec::with_capacity(m);
    let mut minus = Vec::with_capacity(m);
    for a in 0..m {
        let hp = eval(&[(a, step)])?;
        let hm = eval(&[(a, -step)])?;
        first.push((&hp - &hm) / C64::new(2.0 * step, 0.0));
        plus.push(hp);
        minus.push(hm);
    }
    // Real Hessian blocks second[a*m + b].
    let mut second = vec![CMat::zeros(n, n); m * m];
    let s2 = C64::new(step * step, 0.0);
    for a in 0..m {
        second[a * m + a] = (&plus[a] - &h0 * C64::new(2.0, 0.0) + &minus[a]) / s2;
        for b in a + 1..m {
            let pp = eval(&[(a, step), (b, step)])?;
            let pm = eval(&[(a, step), (b, -step)])?;
            let mp = eval(&[(a, -step), (b, step)])?;
            let mm = eval(&[(a, -step), (b, -step)])?;
            let v = (pp - pm - mp + mm) / (s2 * 4.0);
            second[b * m + a] = v.clone();
            second[a * m + b] = v;
        }
    }

    let half = C64::new(0.5, 0.0);
    let quarter = C64::new(0.25, 0.0);
    let dh: Vec<CMat> = (0..n)
        .map(|i| (&first[i] - &first[n + i] * I) * half)
        .collect();
    let hess = |a: usize, b: usize| &second[a * m + b];
    let mut mixed = Vec::with_capacity(n * n);
    let mut holo = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (xi, yi, xj, yj) = (i, n + i, j, n + j);
            let mx = (hess(xi, xj) + hess(xi, yj) * I - hess(yi, xj) * I + hess(yi, yj)) * quarter;
            let hx = (hess(xi, xj) - hess(xi, yj) * I - hess(yi, xj) * I - hess(yi, yj)) * quarter;
            mixed.push(mx);
            holo.push(hx);
        }
    }
    // FD noise leaves h0 Hermitian only to rounding; symmetrize the value.
    let hv = (&h0 + h0.adjoint()) * half;
    MetricJet2::new(z.clone(), HermitianForm::new(hv)?, dh, mixed, holo)
}

/// Real metric `g` and complex structure `J` over `{∂/∂x^i, ∂/∂x^I}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMetric {
    pub g: DMatrix<f64>,
    pub j: DMatrix<f64>,
}

impl RealMetric {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// Largest violation among: symmetry of g, J² = −Id, g(JX, JY) = g(X, Y).
    pub fn invariant_residual(&self) -> f64 {
        let m = self.dim();
        let sym = (&self.g - self.g.transpose()).abs().max();
        let jj = (&self.j * &self.j + DMatrix::<f64>::identity(m, m))
            .abs()
            .max();
        let jinv = (self.j.transpose() * &self.g * &self.j - &self.g)
            .abs()
            .max();
        sym.max(jj).max(jinv)
    }

    pub fn is_positive(&self) -> bool {
        self.g.clone().cholesky().is_some()
    }
}

/// Standard complex structure in real coordinates: `J∂/∂x^i = ∂/∂x^I`,
/// `J∂/∂x^I = −∂/∂x^i`. Column `a` holds the components of `J e_a`.
pub fn standard_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(n + i, i)] = 1.0;
        j[(i, n + i)] = -1.0;
    }
    j
}

/// Real metric from `h_{i j̄} = ½(g_{ij} + √−1 g_{iJ})` with the remaining
/// blocks fixed by J-invariance.
pub fn real_metric_from_h(h: &HermitianForm) -> Result<RealMetric> {
    h.factor()?;
    Ok(real_metric_from_matrix(h.matrix()))
}

/// Same as [`real_metric_from_h`] without the positivity check.
pub fn real_metric_from_matrix(h: &CMat) -> RealMetric {
    let n = h.nrows();
    let mut g = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = h[(i, j)];
            g[(i, j)] = 2.0 * v.re;
            g[(n + i, n + j)] = 2.0 * v.re;
            g[(i, n + j)] = 2.0 * v.im;
            g[(n + i, j)] = -2.0 * v.im;
        }
    }
    RealMetric {
        g,
        j: standard_j(n),
    }
}

/// Inverse of [`real_metric_from_h`].
pub fn h_from_real(g: &RealMetric) -> CMat {
    let n = g.dim() / 2;
    CMat::from_fn(n, n, |i, j| {
        C64::new(0.5 * g.g[(i, j)], 0.5 * g.g[(i, n + j)])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::ZERO;

    struct Flat(usize);

    impl MetricField for Flat {
        fn name(&self) -> &str {
            "flat"
        }
        fn dim(&self) -> usize {
            self.0
        }
        fn admissible(&self, _z: &ChartPoint) -> bool {
            true
        }
        fn metric(&self, _z: &ChartPoint) -> Result<CMat> {
            Ok(CMat::identity(self.0, self.0))
        }
        fn jet(&self, z: &ChartPoint) -> Result<MetricJet2> {
            MetricJet2::constant(z.clone(), HermitianForm::identity(self.0))
        }
    }

    #[test]
    fn flat_fd_jet_has_zero_derivatives() {
        let z = ChartPoint::new(vec![C64::new(0.3, -0.1), C64::new(1.2, 0.4)]).unwrap();
        let jet = jet_fd_oracle(&Flat(2), &z, 1e-3).unwrap();
        let exact = Flat(2).jet(&z).unwrap();
        assert!(jet.max_diff(&exact) <= 1e-10);
    }

    #[test]
    fn hermitian_check_cases() {
        assert!(hermitian_check(&CMat::identity(3, 3), 0.0));
        let m = CMat::from_row_slice(2, 2, &[ZERO, I, I, ZERO]);
        assert!(!hermitian_check(&m, 1e-12));
    }

    #[test]
    fn real_metric_of_identity() {
        let g = real_metric_from_h(&HermitianForm::identity(1)).unwrap();
        assert_eq!(g.g, DMatrix::from_diagonal_element(2, 2, 2.0));
        assert!(g.invariant_residual() == 0.0);
    }

    #[test]
    fn real_metric_round_trip() {
        let h = CMat::from_row_slice(
            2,
            2,
            &[
                C64::new(2.0, 0.0),
                C64::new(0.3, 0.7),
                C64::new(0.3, -0.7),
                C64::new(1.5, 0.0),
            ],
        );
        let hf = HermitianForm::new(h.clone()).unwrap();
        let g = real_metric_from_h(&hf).unwrap();
        assert!(g.invariant_residual() <= 1e-15);
        assert!(g.is_positive());
        assert!(crate::tensor::mat_max_diff(&h_from_real(&g), &h) <= 1e-14);
    }

    #[test]
    fn non_positive_is_rejected() {
        let h = CMat::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(2.0, 0.0),
                C64::new(2.0, 0.0),
                C64::new(1.0, 0.0),
            ],
        );
        let hf = HermitianForm::new(h).unwrap();
        assert!(!hf.is_positive());
        assert!(hf.min_eigenvalue() < 0.0);
        assert!(matches!(
            real_metric_from_h(&hf),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn factor_inverse() {
        let h = CMat::from_row_slice(
            2,
            2,
            &[
                C64::new(3.0, 0.0),
                C64::new(0.5, 1.0),
                C64::new(0.5, -1.0),
                C64::new(2.0, 0.0),
            ],
        );
        let inv = hermitian_factorization(&h, PIVOT_TOL).unwrap().inverse();
        let id = &h * &inv;
        assert!(crate::tensor::mat_max_diff(&id, &CMat::identity(2, 2)) < 1e-14);
    }

    #[test]
    fn dimension_limits() {
        assert!(ChartPoint::new(vec![]).is_err());
        assert!(ChartPoint::new(vec![ZERO; 7]).is_err());
        assert!(ChartPoint::new(vec![ZERO; 6]).is_ok());
    }
}
