//! Built-in metric families with exact jets, and the model registry.

use std::path::Path;
use std::sync::Arc;

use crate::dsl::{self, CompiledScalar, DslMetric};
use crate::error::{Error, Result};
use crate::metric::{check_dim, ChartPoint, HermitianForm, MetricField, MetricJet2};
use crate::tensor::{CMat, C64};

/// Radial profile `h_{i j̄} = α(s)δ_{ij} + β(s) z̄_i z_j`, `s = |z|²`, with
/// derivatives `[f, f', f'']` in `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Profile {
    /// `α = 4(1+λ)/s`, `β = −4λ/s²`.
    Hopf { lambda: f64 },
    /// `α = c/(1+s)`, `β = −c/(1+s)²`.
    FubiniStudy { scale: f64 },
}

impl Profile {
    fn alpha_beta(&self, s: f64) -> ([f64; 3], [f64; 3]) {
        match *self {
            Profile::Hopf { lambda } => {
                let a = 4.0 * (1.0 + lambda);
                let b = 4.0 * lambda;
                (
                    [a / s, -a / (s * s), 2.0 * a / (s * s * s)],
                    [
                        -b / (s * s),
                        2.0 * b / (s * s * s),
                        -6.0 * b / (s * s * s * s),
                    ],
                )
            }
            Profile::FubiniStudy { scale: c } => {
                let u = 1.0 + s;
                (
                    [c / u, -c / (u * u), 2.0 * c / (u * u * u)],
                    [
                        -c / (u * u),
                        2.0 * c / (u * u * u),
                        -6.0 * c / (u * u * u * u),
                    ],
                )
            }
        }
    }
}

/// Hopf-type and Fubini–Study metrics with hand-coded jets.
#[derive(Debug, Clone)]
pub struct RadialModel {
    name: String,
    n: usize,
    profile: Profile,
}

impl RadialModel {
    /// `ω_λ = ω₀ + 4λ√−1∂∂̄log|z|²`; requires `λ > −1`.
    pub fn hopf(n: usize, lambda: f64) -> Result<Self> {
        check_dim(n)?;
        if !(lambda > -1.0) || !lambda.is_finite() {
            return Err(Error::ParameterDomain("λ > −1".into()));
        }
        Ok(Self {
            name: if lambda == 0.0 {
                "hopf".into()
            } else {
                format!("hopf-perturbed(λ={lambda})")
            },
            n,
            profile: Profile::Hopf { lambda },
        })
    }

    /// `c·ω_FS` on the affine chart; requires `c > 0`.
    pub fn fubini_study(n: usize, scale: f64) -> Result<Self> {
        check_dim(n)?;
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::ParameterDomain("c > 0".into()));
        }
        Ok(Self {
            name: "fubini-study".into(),
            n,
            profile: Profile::FubiniStudy { scale },
        })
    }

    fn check(&self, z: &ChartPoint) -> Result<f64> {
        if z.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: z.dim(),
            });
        }
        if !self.admissible(z) {
            return Err(Error::SingularLocus(self.name.clone()));
        }
        Ok(z.norm_sqr())
    }
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

impl MetricField for RadialModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn admissible(&self, z: &ChartPoint) -> bool {
        match self.profile {
            Profile::Hopf { .. } => z.norm_sqr() > 0.0,
            Profile::FubiniStudy { .. } => true,
        }
    }

    fn admissible_radius(&self, z: &ChartPoint) -> f64 {
        match self.profile {
            Profile::Hopf { .. } => z.norm_sqr().sqrt(),
            Profile::FubiniStudy { .. } => f64::INFINITY,
        }
    }

    fn metric(&self, z: &ChartPoint) -> Result<CMat> {
        let s = self.check(z)?;
        let ([a, _, _], [b, _, _]) = self.profile.alpha_beta(s);
        let w = z.coords();
        Ok(CMat::from_fn(self.n, self.n, |i, j| {
            w[i].conj() * w[j] * b + delta(i, j) * a
        }))
    }

    fn jet(&self, z: &ChartPoint) -> Result<MetricJet2> {
        let s = self.check(z)?;
        let n = self.n;
        let ([a0, a1, a2], [b0, b1, b2]) = self.profile.alpha_beta(s);
        let w = z.coords();
        let zb = |k: usize| w[k].conj();
        let h = CMat::from_fn(n, n, |i, j| zb(i) * w[j] * b0 + delta(i, j) * a0);
        let dh = (0..n)
            .map(|m| {
                CMat::from_fn(n, n, |i, j| {
                    zb(m) * delta(i, j) * a1 + zb(m) * zb(i) * w[j] * b1 + zb(i) * delta(j, m) * b0
                })
            })
            .collect();
        let mut mixed = Vec::with_capacity(n * n);
        let mut holo = Vec::with_capacity(n * n);
        for m in 0..n {
            for p in 0..n {
                // ∂_m ∂_{p̄}
                mixed.push(CMat::from_fn(n, n, |i, j| {
                    (w[p] * zb(m) * a2 + delta(m, p) * a1) * delta(i, j)
                        + w[p] * zb(m) * zb(i) * w[j] * b2
                        + (zb(i) * w[j] * delta(m, p) + zb(m) * w[j] * delta(i, p)) * b1
                        + w[p] * zb(i) * delta(j, m) * b1
                        + C64::new(delta(i, p) * delta(j, m) * b0, 0.0)
                }));
                // ∂_p ∂_m
                holo.push(CMat::from_fn(n, n, |i, j| {
                    zb(p) * zb(m) * delta(i, j) * a2
                        + zb(p) * zb(m) * zb(i) * w[j] * b2
                        + zb(m) * zb(i) * delta(j, p) * b1
                        + zb(p) * zb(i) * delta(j, m) * b1
                }));
            }
        }
        let hf = HermitianForm::new((&h + h.adjoint()) * C64::new(0.5, 0.0))?;
        MetricJet2::new(z.clone(), hf, dh, mixed, holo)
    }
}

/// Constant metric on the flat torus `ℂⁿ/Λ`.
#[derive(Debug, Clone)]
pub struct TorusModel {
    h: HermitianForm,
}

impl TorusModel {
    pub fn standard(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self {
            h: HermitianForm::identity(n),
        })
    }

    pub fn with_metric(h: HermitianForm) -> Result<Self> {
        h.factor()?;
        Ok(Self { h })
    }
}

impl MetricField for TorusModel {
    fn name(&self) -> &str {
        "torus"
    }

    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn admissible(&self, _z: &ChartPoint) -> bool {
        true
    }

    fn metric(&self, z: &ChartPoint) -> Result<CMat> {
        if z.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.dim(),
            });
        }
        Ok(self.h.matrix().clone())
    }

    fn jet(&self, z: &ChartPoint) -> Result<MetricJet2> {
        self.metric(z)?;
        MetricJet2::constant(z.clone(), self.h.clone())
    }
}

/// `e^f·h` for a real function `f` given as a DSL expression.
pub struct ConformalModel {
    name: String,
    base: Arc<dyn MetricField>,
    f: CompiledScalar,
}

/// Largest imaginary part tolerated in the conformal exponent.
const F_IMAG_TOL: f64 = 1e-12;

impl ConformalModel {
    pub fn new(base: Arc<dyn MetricField>, f: dsl::Expr) -> Result<Self> {
        let f = CompiledScalar::new(f, base.dim())?;
        Ok(Self {
            name: format!("conformal({}, {})", base.name(), f.expr()),
            base,
            f,
        })
    }

    pub fn base(&self) -> &Arc<dyn MetricField> {
        &self.base
    }

    pub fn exponent(&self) -> &CompiledScalar {
        &self.f
    }

    fn factor(&self, z: &ChartPoint) -> Result<f64> {
        let v = self.f.value(z.coords())?;
        if v.im.abs() > F_IMAG_TOL * v.re.abs().max(1.0) {
            return Err(Error::SpecFile(format!(
                "conformal exponent is not real: {v}"
            )));
        }
        Ok(v.re.exp())
    }
}

impl MetricField for ConformalModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn admissible(&self, z: &ChartPoint) -> bool {
        self.base.admissible(z) && matches!(self.factor(z), Ok(e) if e.is_finite() && e > 0.0)
    }

    fn admissible_radius(&self, z: &ChartPoint) -> f64 {
        self.base.admissible_radius(z)
    }

    fn metric(&self, z: &ChartPoint) -> Result<CMat> {
        let e = self.factor(z)?;
        Ok(self.base.metric(z)? * C64::new(e, 0.0))
    }

    fn jet(&self, z: &ChartPoint) -> Result<MetricJet2> {
        let n = self.dim();
        let b = self.base.jet(z)?;
        let f = self.f.jet(z.coords())?;
        let ef = C64::new(self.factor(z)?, 0.0);
        let h = b.h().matrix();
        let dh: Vec<CMat> = (0..n).map(|m| (h * f.d[m] + b.dh_block(m)) * ef).collect();
        let mut mixed = Vec::with_capacity(n * n);
        let mut holo = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let fi = f.d[i];
                let fjb = f.dbar[j];
                mixed.push(
                    (h * (fi * fjb + f.mixed[i * n + j])
                        + b.dh_block(i) * fjb
                        + b.dbar_block(j) * fi
                        + b.mixed_block(i, j))
                        * ef,
                );
                let fj = f.d[j];
                holo.push(
                    (h * (fi * fj + f.holo[i * n + j])
                        + b.dh_block(i) * fj
                        + b.dh_block(j) * fi
                        + b.holo_block(i, j))
                        * ef,
                );
            }
        }
        let hf = HermitianForm::new(h * ef)?;
        MetricJet2::new(z.clone(), hf, dh, mixed, holo)
    }
}

/// `λ* = 2(n−1)t/n − 1`, the perturbation making `ω_λ` t-Gauduchon-Ricci flat.
pub fn hopf_flat_parameter(n: usize, t: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::ParameterDomain("n ≥ 2".into()));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::ParameterDomain("t > 0".into()));
    }
    Ok(2.0 * (n as f64 - 1.0) * t / n as f64 - 1.0)
}

/// `λ = −1/n`: the real Chern-Ricci flat metric `ω₀ − (4/n)√−1∂∂̄log|z|²`.
pub fn hopf_real_chern_flat_parameter(n: usize) -> f64 {
    -1.0 / n as f64
}

/// Parameters consulted by the registry.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub n: usize,
    pub lambda: Option<f64>,
    pub t: Option<f64>,
    pub scale: Option<f64>,
}

impl ModelParams {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            lambda: None,
            t: None,
            scale: None,
        }
    }
}

pub const MODEL_NAMES: &[&str] = &[
    "hopf",
    "hopf-perturbed",
    "hopf-gauduchon-flat",
    "hopf-real-chern-flat",
    "hopf-dsl",
    "torus",
    "fubini-study",
    "dsl:<path>",
    "conformal:<base>:<path>",
];

fn read(path: &str) -> Result<String> {
    std::fs::read_to_string(Path::new(path)).map_err(|e| Error::Io(format!("{path}: {e}")))
}

/// Resolves a model by registry name.
pub fn resolve_model(name: &str, p: &ModelParams) -> Result<Arc<dyn MetricField>> {
    check_dim(p.n)?;
    if let Some(rest) = name.strip_prefix("conformal:") {
        let (base, path) = rest
            .rsplit_once(':')
            .ok_or_else(|| Error::UnknownModel(name.to_string()))?;
        let base = resolve_model(base, p)?;
        let f = dsl::parse_scalar(&read(path)?, base.dim())?;
        return Ok(Arc::new(ConformalModel::new(base, f)?));
    }
    if let Some(path) = name.strip_prefix("dsl:") {
        return Ok(Arc::new(DslMetric::from_text(&read(path)?)?));
    }
    Ok(match name {
        "hopf" => Arc::new(RadialModel::hopf(p.n, 0.0)?),
        "hopf-perturbed" => Arc::new(RadialModel::hopf(p.n, p.lambda.unwrap_or(0.0))?),
        "hopf-gauduchon-flat" => {
            let lambda = hopf_flat_parameter(p.n, p.t.unwrap_or(1.0))?;
            Arc::new(RadialModel::hopf(p.n, lambda)?)
        }
        "hopf-real-chern-flat" => {
            Arc::new(RadialModel::hopf(p.n, hopf_real_chern_flat_parameter(p.n))?)
        }
        "hopf-dsl" => {
            let lambda = p.lambda.unwrap_or(0.0);
            if !(lambda > -1.0) {
                return Err(Error::ParameterDomain("λ > −1".into()));
            }
            Arc::new(DslMetric::from_text(&dsl::hopf_source(p.n, lambda))?)
        }
        "torus" => Arc::new(TorusModel::standard(p.n)?),
        "fubini-study" => Arc::new(RadialModel::fubini_study(p.n, p.scale.unwrap_or(1.0))?),
        _ => return Err(Error::UnknownModel(name.to_string())),
    })
}
