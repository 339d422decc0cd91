//! Christoffel data of Hermitian connections on the holomorphic tangent
//! bundle: Chern, the Gauduchon line, the real (λ,μ)-family projected to
//! `T^{1,0}`, general θ-twists and the restricted Levi-Civita connection.
//!
//! Index layout: `gamma_holo.get(i, j, k)` is `Γ_{ij}^k`, the `∂_k`
//! coefficient of `∇_{∂_i}∂_j`; `gamma_anti.get(i, j, k)` is `Γ_{īj}^k`,
//! the `∂_k` coefficient of `∇_{∂̄_i}∂_j`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dsl::CompiledScalar;
use crate::error::{Error, Result};
use crate::metric::{ChartPoint, MetricJet2};
use crate::tensor::{CMat, Tensor3, C64, ZERO};

/// A 3-index tensor field with its holomorphic and antiholomorphic first
/// derivatives: `d[m]` is `∂/∂z^m`, `dbar[m]` is `∂/∂z̄^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorJet3 {
    pub value: Tensor3,
    pub d: Vec<Tensor3>,
    pub dbar: Vec<Tensor3>,
}

/// θ = θ_{ij}^k dz^i ⊗ dz^j ⊗ ∂_k with its first derivatives.
pub type ThetaJet = TensorJet3;

impl TensorJet3 {
    pub fn zeros(n: usize) -> Self {
        Self {
            value: Tensor3::zeros(n),
            d: vec![Tensor3::zeros(n); n],
            dbar: vec![Tensor3::zeros(n); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.value.dim()
    }

    pub fn scale(&self, s: f64) -> Self {
        let c = C64::new(s, 0.0);
        Self {
            value: self.value.scale(c),
            d: self.d.iter().map(|t| t.scale(c)).collect(),
            dbar: self.dbar.iter().map(|t| t.scale(c)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            value: self.value.add(&other.value),
            d: self.d.iter().zip(&other.d).map(|(a, b)| a.add(b)).collect(),
            dbar: self
                .dbar
                .iter()
                .zip(&other.dbar)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    /// Largest entrywise difference over value and derivative blocks.
    pub fn max_diff(&self, other: &Self) -> f64 {
        let mut m = self.value.max_diff(&other.value);
        for (a, b) in self
            .d
            .iter()
            .zip(&other.d)
            .chain(self.dbar.iter().zip(&other.dbar))
        {
            m = m.max(a.max_diff(b));
        }
        m
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.dim() != n || self.d.len() != n || self.dbar.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.dim(),
            });
        }
        let finite = std::iter::once(&self.value)
            .chain(&self.d)
            .chain(&self.dbar)
            .all(|t| {
                t.as_slice()
                    .iter()
                    .all(|v| v.re.is_finite() && v.im.is_finite())
            });
        if finite {
            Ok(())
        } else {
            Err(Error::ThetaUndefined("non-finite θ value".into()))
        }
    }
}

/// Inverse metric and Chern connection data at a point, computed once and
/// shared by every downstream formula.
#[derive(Debug, Clone)]
pub struct ChernData {
    jet: MetricJet2,
    minv: CMat,
    dminv: Vec<CMat>,
    dbar_minv: Vec<CMat>,
    gamma: TensorJet3,
    torsion: TensorJet3,
}

impl ChernData {
    pub fn new(jet: &MetricJet2) -> Result<Self> {
        let n = jet.dim();
        let minv = jet.h().factor()?.inverse();
        let dminv: Vec<CMat> = (0..n).map(|m| -(&minv * jet.dh_block(m) * &minv)).collect();
        let dbar_minv: Vec<CMat> = (0..n)
            .map(|m| -(&minv * jet.dbar_block(m) * &minv))
            .collect();

        // Γ_i = dh_i · M⁻¹ indexed [j][k].
        let blocks: Vec<CMat> = (0..n).map(|i| jet.dh_block(i) * &minv).collect();
        let value = Tensor3::from_fn(n, |i, j, k| blocks[i][(j, k)]);
        let mut d = Vec::with_capacity(n);
        let mut dbar = Vec::with_capacity(n);
        for m in 0..n {
            let dm: Vec<CMat> = (0..n)
                .map(|i| jet.holo_block(m, i) * &minv + jet.dh_block(i) * &dminv[m])
                .collect();
            let dbm: Vec<CMat> = (0..n)
                .map(|i| jet.mixed_block(i, m) * &minv + jet.dh_block(i) * &dbar_minv[m])
                .collect();
            d.push(Tensor3::from_fn(n, |i, j, k| dm[i][(j, k)]));
            dbar.push(Tensor3::from_fn(n, |i, j, k| dbm[i][(j, k)]));
        }
        let gamma = TensorJet3 { value, d, dbar };
        let anti = |t: &Tensor3| Tensor3::from_fn(n, |i, j, k| t.get(i, j, k) - t.get(j, i, k));
        let torsion = TensorJet3 {
            value: anti(&gamma.value),
            d: gamma.d.iter().map(anti).collect(),
            dbar: gamma.dbar.iter().map(anti).collect(),
        };
        Ok(Self {
            jet: jet.clone(),
            minv,
            dminv,
            dbar_minv,
            gamma,
            torsion,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.jet.dim()
    }

    pub fn jet(&self) -> &MetricJet2 {
        &self.jet
    }

    pub fn point(&self) -> &ChartPoint {
        self.jet.point()
    }

    /// `h_{k l̄}`.
    #[inline]
    pub fn h(&self, k: usize, l: usize) -> C64 {
        self.jet.metric(k, l)
    }

    /// `h^{k l̄}`, normalized by `Σ_l h^{k l̄} h_{j l̄} = δ_{jk}`.
    #[inline]
    pub fn hinv(&self, k: usize, l: usize) -> C64 {
        self.minv[(l, k)]
    }

    /// `∂h^{k l̄}/∂z^m`.
    #[inline]
    pub fn d_hinv(&self, m: usize, k: usize, l: usize) -> C64 {
        self.dminv[m][(l, k)]
    }

    /// `∂h^{k l̄}/∂z̄^m`.
    #[inline]
    pub fn dbar_hinv(&self, m: usize, k: usize, l: usize) -> C64 {
        self.dbar_minv[m][(l, k)]
    }

    pub fn inverse_matrix(&self) -> &CMat {
        &self.minv
    }

    /// Chern Christoffel symbols `Γ_{ij}^k = h^{k l̄} ∂_i h_{j l̄}` with derivatives.
    pub fn gamma(&self) -> &TensorJet3 {
        &self.gamma
    }

    /// Chern torsion `T_{ij}^k = Γ_{ij}^k − Γ_{ji}^k` with derivatives.
    pub fn torsion(&self) -> Torsion<'_> {
        Torsion(&self.torsion)
    }

    /// `Σ_{p,q} h_{j q̄} h^{k p̄} conj(X_{ip}^q)`: the antiholomorphic block
    /// dual to a holomorphic `(1,0)`-valued endomorphism `X`.
    pub fn dual_block(&self, x: &Tensor3) -> Tensor3 {
        let n = self.dim();
        Tensor3::from_fn(n, |i, j, k| {
            let mut s = ZERO;
            for p in 0..n {
                for q in 0..n {
                    s += self.h(j, q) * self.hinv(k, p) * x.get(i, p, q).conj();
                }
            }
            s
        })
    }

    /// [`Self::dual_block`] together with its derivatives.
    pub fn dual_block_jet(&self, x: &TensorJet3) -> TensorJet3 {
        let n = self.dim();
        let jet = &self.jet;
        let value = self.dual_block(&x.value);
        let mut d = Vec::with_capacity(n);
        let mut dbar = Vec::with_capacity(n);
        for m in 0..n {
            d.push(Tensor3::from_fn(n, |i, j, k| {
                let mut s = ZERO;
                for p in 0..n {
                    for q in 0..n {
                        let xc = x.value.get(i, p, q).conj();
                        s += jet.d(m, j, q) * self.hinv(k, p) * xc
                            + self.h(j, q) * self.d_hinv(m, k, p) * xc
                            + self.h(j, q) * self.hinv(k, p) * x.dbar[m].get(i, p, q).conj();
                    }
                }
                s
            }));
            dbar.push(Tensor3::from_fn(n, |i, j, k| {
                let mut s = ZERO;
                for p in 0..n {
                    for q in 0..n {
                        let xc = x.value.get(i, p, q).conj();
                        s += jet.dbar(m, j, q) * self.hinv(k, p) * xc
                            + self.h(j, q) * self.dbar_hinv(m, k, p) * xc
                            + self.h(j, q) * self.hinv(k, p) * x.d[m].get(i, p, q).conj();
                    }
                }
                s
            }));
        }
        TensorJet3 { value, d, dbar }
    }
}

/// Borrowed view of the Chern torsion.
#[derive(Debug, Clone, Copy)]
pub struct Torsion<'a>(&'a TensorJet3);

impl<'a> Torsion<'a> {
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> C64 {
        self.0.value.get(i, j, k)
    }

    pub fn tensor(&self) -> &'a Tensor3 {
        &self.0.value
    }

    pub fn jet(&self) -> &'a TensorJet3 {
        self.0
    }

    /// `∂T_{ij}^k/∂z^m`.
    #[inline]
    pub fn d(&self, m: usize, i: usize, j: usize, k: usize) -> C64 {
        self.0.d[m].get(i, j, k)
    }

    /// `∂T_{ij}^k/∂z̄^m`.
    #[inline]
    pub fn dbar(&self, m: usize, i: usize, j: usize, k: usize) -> C64 {
        self.0.dbar[m].get(i, j, k)
    }

    /// Trace `τ_i = T_{ik}^k`.
    pub fn trace(&self) -> Vec<C64> {
        trace1(&self.0.value)
    }

    /// `∂τ_i/∂z^m` as `[m][i]`.
    pub fn trace_d(&self) -> Vec<Vec<C64>> {
        self.0.d.iter().map(trace1).collect()
    }

    /// `∂τ_i/∂z̄^m` as `[m][i]`.
    pub fn trace_dbar(&self) -> Vec<Vec<C64>> {
        self.0.dbar.iter().map(trace1).collect()
    }

    /// `max |T_{ij}^k + T_{ji}^k|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let t = &self.0.value;
        let n = t.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((t.get(i, j, k) + t.get(j, i, k)).norm());
                }
            }
        }
        worst
    }
}

/// `x_i = X_{ik}^k`.
pub fn trace1(x: &Tensor3) -> Vec<C64> {
    let n = x.dim();
    (0..n)
        .map(|i| (0..n).map(|k| x.get(i, k, k)).sum())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelPair {
    pub gamma_holo: Tensor3,
    pub gamma_anti: Tensor3,
}

impl ChristoffelPair {
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.gamma_holo
            .max_diff(&other.gamma_holo)
            .max(self.gamma_anti.max_diff(&other.gamma_anti))
    }
}

/// A θ field evaluated pointwise.
pub trait ThetaField: Send + Sync {
    fn name(&self) -> String;
    fn theta(&self, z: &ChartPoint) -> Result<ThetaJet>;
}

/// A `(1,0)`-form `η = η_i dz^i` evaluated pointwise.
pub trait OneFormField: Send + Sync {
    fn name(&self) -> String;
    fn eta(&self, z: &ChartPoint) -> Result<OneFormJet>;
}

/// `value[i] = η_i`, `d[m][i] = ∂η_i/∂z^m`, `dbar[m][i] = ∂η_i/∂z̄^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormJet {
    pub value: Vec<C64>,
    pub d: Vec<Vec<C64>>,
    pub dbar: Vec<Vec<C64>>,
}

/// θ affine in `z` and `z̄`: `θ = c + Σ_m (a_m z^m + b_m z̄^m)`.
#[derive(Debug, Clone)]
pub struct AffineTheta {
    pub c: Tensor3,
    pub a: Vec<Tensor3>,
    pub b: Vec<Tensor3>,
}

impl AffineTheta {
    pub fn zero(n: usize) -> Self {
        Self {
            c: Tensor3::zeros(n),
            a: vec![Tensor3::zeros(n); n],
            b: vec![Tensor3::zeros(n); n],
        }
    }

    /// Coefficients drawn from a standard complex Gaussian times `scale`.
    pub fn random<R: Rng>(n: usize, scale: f64, rng: &mut R) -> Self {
        let mut draw = || {
            Tensor3::from_fn(n, |_, _, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                C64::new(re, im) * scale
            })
        };
        let c = draw();
        let a = (0..n).map(|_| draw()).collect();
        let b = (0..n).map(|_| draw()).collect();
        Self { c, a, b }
    }
}

impl ThetaField for AffineTheta {
    fn name(&self) -> String {
        "affine".into()
    }

    fn theta(&self, z: &ChartPoint) -> Result<ThetaJet> {
        let n = self.c.dim();
        if z.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: z.dim(),
            });
        }
        let mut value = self.c.clone();
        for m in 0..n {
            value = value
                .add(&self.a[m].scale(z.coord(m)))
                .add(&self.b[m].scale(z.coord(m).conj()));
        }
        Ok(ThetaJet {
            value,
            d: self.a.clone(),
            dbar: self.b.clone(),
        })
    }
}

/// η given by one DSL expression per component.
#[derive(Debug, Clone)]
pub struct ExprOneForm {
    comps: Vec<CompiledScalar>,
}

impl ExprOneForm {
    pub fn new(comps: Vec<CompiledScalar>) -> Self {
        Self { comps }
    }
}

impl OneFormField for ExprOneForm {
    fn name(&self) -> String {
        let parts: Vec<String> = self.comps.iter().map(|c| c.expr().to_string()).collect();
        format!("[{}]", parts.join(", "))
    }

    fn eta(&self, z: &ChartPoint) -> Result<OneFormJet> {
        let n = self.comps.len();
        if z.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: z.dim(),
            });
        }
        let jets = self
            .comps
            .iter()
            .map(|c| c.jet(z.coords()))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::ThetaUndefined(e.to_string()))?;
        Ok(OneFormJet {
            value: jets.iter().map(|j| j.value).collect(),
            d: (0..n)
                .map(|m| jets.iter().map(|j| j.d[m]).collect())
                .collect(),
            dbar: (0..n)
                .map(|m| jets.iter().map(|j| j.dbar[m]).collect())
                .collect(),
        })
    }
}

#[derive(Clone)]
pub enum ConnectionSpec {
    Chern,
    Gauduchon(f64),
    LambdaMu(f64, f64),
    General(Arc<dyn ThetaField>),
    /// `θ_{ij}^k = t·η_i δ_j^k`.
    EtaId(f64, Arc<dyn OneFormField>),
}

impl fmt::Debug for ConnectionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConnectionSpec::Chern => write!(f, "Chern"),
            ConnectionSpec::Gauduchon(t) => write!(f, "Gauduchon({t})"),
            ConnectionSpec::LambdaMu(l, m) => write!(f, "LambdaMu({l}, {m})"),
            ConnectionSpec::General(th) => write!(f, "General({})", th.name()),
            ConnectionSpec::EtaId(t, eta) => write!(f, "EtaId({t}, {})", eta.name()),
        }
    }
}

impl fmt::Display for ConnectionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConnectionSpec::Chern => write!(f, "chern"),
            ConnectionSpec::Gauduchon(t) => write!(f, "gauduchon:{t}"),
            ConnectionSpec::LambdaMu(l, m) => write!(f, "lambda-mu:{l},{m}"),
            ConnectionSpec::General(th) => write!(f, "general:{}", th.name()),
            ConnectionSpec::EtaId(t, eta) => write!(f, "eta-id:{t}:{}", eta.name()),
        }
    }
}

impl ConnectionSpec {
    pub fn strominger_bismut() -> Self {
        ConnectionSpec::Gauduchon(1.0)
    }

    pub fn levi_civita() -> Self {
        ConnectionSpec::Gauduchon(0.5)
    }

    /// Gauduchon parameter of the `T^{1,0}` projection, when one exists.
    pub fn gauduchon_parameter(&self) -> Option<f64> {
        match self {
            ConnectionSpec::Chern => Some(0.0),
            ConnectionSpec::Gauduchon(t) => Some(*t),
            ConnectionSpec::LambdaMu(l, m) => Some(l + m + 0.5),
            _ => None,
        }
    }

    /// Parses `chern`, `bismut`, `lc`, `gauduchon:<t>` or `lambda-mu:<λ>,<μ>`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::ParameterDomain(format!("unrecognized connection `{s}`"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
        match s.split_once(':') {
            None => match s {
                "chern" => Ok(ConnectionSpec::Chern),
                "bismut" | "strominger-bismut" => Ok(Self::strominger_bismut()),
                "lc" | "levi-civita" => Ok(Self::levi_civita()),
                _ => Err(bad()),
            },
            Some(("gauduchon", t)) => Ok(ConnectionSpec::Gauduchon(num(t)?)),
            Some(("lambda-mu", rest)) => {
                let (l, m) = rest.split_once(',').ok_or_else(bad)?;
                Ok(ConnectionSpec::LambdaMu(num(l)?, num(m)?))
            }
            _ => Err(bad()),
        }
    }
}

/// `Γ_{ij}^k = h^{k l̄} ∂_i h_{j l̄}`, `Γ_{īj}^k = 0`.
pub fn chern_christoffel(cd: &ChernData) -> ChristoffelPair {
    let n = cd.dim();
    ChristoffelPair {
        gamma_holo: cd.gamma().value.clone(),
        gamma_anti: Tensor3::zeros(n),
    }
}

fn gauduchon_pair(cd: &ChernData, t: f64) -> ChristoffelPair {
    let n = cd.dim();
    let tt = cd.torsion();
    let gamma_holo = Tensor3::from_fn(n, |i, j, k| {
        cd.gamma().value.get(i, j, k) - tt.get(i, j, k) * t
    });
    let gamma_anti = Tensor3::from_fn(n, |i, j, k| {
        let mut s = ZERO;
        for m in 0..n {
            for l in 0..n {
                s += cd.hinv(k, m) * cd.h(j, l) * tt.get(i, m, l).conj();
            }
        }
        s * t
    });
    ChristoffelPair {
        gamma_holo,
        gamma_anti,
    }
}

fn theta_pair(cd: &ChernData, theta: &Tensor3) -> ChristoffelPair {
    ChristoffelPair {
        gamma_holo: cd.gamma().value.add(theta),
        gamma_anti: cd.dual_block(theta).scale(C64::new(-1.0, 0.0)),
    }
}

/// Christoffel symbols of `spec` on `T^{1,0}`. For `LambdaMu` off the
/// `J`-compatible line this is the projection onto `T^{1,0}`; the mixing
/// block is returned by [`lambda_mu_mixing`].
pub fn christoffel(cd: &ChernData, spec: &ConnectionSpec) -> Result<ChristoffelPair> {
    match spec {
        ConnectionSpec::Chern => Ok(chern_christoffel(cd)),
        ConnectionSpec::Gauduchon(t) => Ok(gauduchon_pair(cd, *t)),
        ConnectionSpec::LambdaMu(l, m) => Ok(gauduchon_pair(cd, l + m + 0.5)),
        ConnectionSpec::General(_) | ConnectionSpec::EtaId(..) => {
            let th = theta_of(spec, cd)?;
            Ok(theta_pair(cd, &th.value))
        }
    }
}

/// `Γ_{īj}^{k̄}` of the complexified `∇^{λ,μ}`:
/// `(−λ+μ+½) h^{m k̄} h_{n ī} T_{jm}^n`.
pub fn lambda_mu_mixing(cd: &ChernData, lambda: f64, mu: f64) -> Tensor3 {
    let n = cd.dim();
    let c = -lambda + mu + 0.5;
    let tt = cd.torsion();
    Tensor3::from_fn(n, |i, j, k| {
        let mut s = ZERO;
        for m in 0..n {
            for q in 0..n {
                s += cd.hinv(m, k) * cd.h(q, i) * tt.get(j, m, q);
            }
        }
        s * c
    })
}

/// Tolerance below which the torsion counts as zero (Kähler point).
pub const KAHLER_TOL: f64 = 1e-12;

/// θ with `christoffel(General(θ)) = christoffel(spec)`.
pub fn theta_of(spec: &ConnectionSpec, cd: &ChernData) -> Result<ThetaJet> {
    let n = cd.dim();
    match spec {
        ConnectionSpec::Chern => Ok(ThetaJet::zeros(n)),
        ConnectionSpec::Gauduchon(t) => Ok(cd.torsion().jet().scale(-t)),
        ConnectionSpec::LambdaMu(l, m) => {
            let off = -l + m + 0.5;
            if off != 0.0 && cd.torsion().tensor().max_abs() > KAHLER_TOL {
                return Err(Error::NotJCompatible(off));
            }
            Ok(cd.torsion().jet().scale(-(l + m + 0.5)))
        }
        ConnectionSpec::General(field) => {
            let th = field.theta(cd.point())?;
            th.check(n)?;
            Ok(th)
        }
        ConnectionSpec::EtaId(t, eta) => {
            let e = eta.eta(cd.point())?;
            if e.value.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: e.value.len(),
                });
            }
            let build =
                |v: &[C64]| Tensor3::from_fn(n, |i, j, k| if j == k { v[i] * *t } else { ZERO });
            Ok(ThetaJet {
                value: build(&e.value),
                d: e.d.iter().map(|v| build(v)).collect(),
                dbar: e.dbar.iter().map(|v| build(v)).collect(),
            })
        }
    }
}

/// Both Christoffel blocks with their first derivatives; the input of the
/// generic curvature engine.
#[derive(Debug, Clone)]
pub struct ConnectionJet {
    pub holo: TensorJet3,
    pub anti: TensorJet3,
}

/// Connection jet of `Γ + θ` with its dual antiholomorphic block.
pub fn theta_connection_jet(cd: &ChernData, theta: &ThetaJet) -> ConnectionJet {
    ConnectionJet {
        holo: cd.gamma().add(theta),
        anti: cd.dual_block_jet(theta).scale(-1.0),
    }
}

pub fn connection_jet(cd: &ChernData, spec: &ConnectionSpec) -> Result<ConnectionJet> {
    let th = theta_of(spec, cd)?;
    Ok(theta_connection_jet(cd, &th))
}

/// `Γ̂_{ij}^k = ½h^{k l̄}(∂_i h_{j l̄} + ∂_j h_{i l̄})`,
/// `Γ̂_{īj}^k = ½h^{k l̄}(∂_{ī} h_{j l̄} − ∂_{l̄} h_{j ī})`.
pub fn lc_hat_christoffel(cd: &ChernData) -> ChristoffelPair {
    let j = lc_hat_jet(cd);
    ChristoffelPair {
        gamma_holo: j.holo.value,
        gamma_anti: j.anti.value,
    }
}

/// [`lc_hat_christoffel`] with derivatives, assembled directly from the
/// metric jet rather than through the Gauduchon formula.
pub fn lc_hat_jet(cd: &ChernData) -> ConnectionJet {
    let n = cd.dim();
    let jet = cd.jet();
    let g = cd.gamma();
    let sym = |t: &Tensor3| Tensor3::from_fn(n, |i, j, k| (t.get(i, j, k) + t.get(j, i, k)) * 0.5);
    let holo = TensorJet3 {
        value: sym(&g.value),
        d: g.d.iter().map(sym).collect(),
        dbar: g.dbar.iter().map(sym).collect(),
    };

    // W_{ijl} = ∂_{ī}h_{j l̄} − ∂_{l̄}h_{j ī}
    let w = |i: usize, jj: usize, l: usize| jet.dbar(i, jj, l) - jet.dbar(l, jj, i);
    let dw = |m: usize, i: usize, jj: usize, l: usize| {
        jet.mixed(i, m, l, jj).conj() - jet.mixed(l, m, i, jj).conj()
    };
    let dbw = |m: usize, i: usize, jj: usize, l: usize| {
        jet.holo(m, i, l, jj).conj() - jet.holo(m, l, i, jj).conj()
    };
    let value = Tensor3::from_fn(n, |i, jj, k| {
        (0..n).map(|l| cd.hinv(k, l) * w(i, jj, l)).sum::<C64>() * 0.5
    });
    let d = (0..n)
        .map(|m| {
            Tensor3::from_fn(n, |i, jj, k| {
                (0..n)
                    .map(|l| cd.d_hinv(m, k, l) * w(i, jj, l) + cd.hinv(k, l) * dw(m, i, jj, l))
                    .sum::<C64>()
                    * 0.5
            })
        })
        .collect();
    let dbar = (0..n)
        .map(|m| {
            Tensor3::from_fn(n, |i, jj, k| {
                (0..n)
                    .map(|l| cd.dbar_hinv(m, k, l) * w(i, jj, l) + cd.hinv(k, l) * dbw(m, i, jj, l))
                    .sum::<C64>()
                    * 0.5
            })
        })
        .collect();
    ConnectionJet {
        holo,
        anti: TensorJet3 { value, d, dbar },
    }
}

/// `max |∂_i h_{j l̄} − Γ_{ij}^p h_{p l̄} − h_{j q̄} conj(Γ_{īl}^q)|`, the
/// defect of `∇h = 0` along `∂_i`.
pub fn compatibility_residual(jet: &MetricJet2, cp: &ChristoffelPair) -> f64 {
    let n = jet.dim();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let mut r = jet.d(i, j, l);
                for p in 0..n {
                    r -= cp.gamma_holo.get(i, j, p) * jet.metric(p, l);
                    r -= jet.metric(j, p) * cp.gamma_anti.get(i, l, p).conj();
                }
                worst = worst.max(r.norm());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_jet(n: usize, seed: u64) -> MetricJet2 {
        crate::sampling::random_jet(n, seed, 0.3)
    }

    #[test]
    fn inverse_convention() {
        let cd = ChernData::new(&random_jet(3, 2)).unwrap();
        for k in 0..3 {
            for j in 0..3 {
                let s: C64 = (0..3).map(|l| cd.hinv(k, l) * cd.h(j, l)).sum();
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((s - want).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn chern_is_compatible() {
        let jet = random_jet(3, 3);
        let cd = ChernData::new(&jet).unwrap();
        assert!(compatibility_residual(&jet, &chern_christoffel(&cd)) < 1e-12);
    }

    #[test]
    fn gauduchon_line_is_compatible_and_affine() {
        let jet = random_jet(3, 4);
        let cd = ChernData::new(&jet).unwrap();
        for t in [-1.0, 0.25, 0.5, 1.0, 2.0] {
            let cp = christoffel(&cd, &ConnectionSpec::Gauduchon(t)).unwrap();
            assert!(compatibility_residual(&jet, &cp) < 1e-11);
        }
        let g0 = christoffel(&cd, &ConnectionSpec::Gauduchon(0.0)).unwrap();
        let g1 = christoffel(&cd, &ConnectionSpec::Gauduchon(1.0)).unwrap();
        let gh = christoffel(&cd, &ConnectionSpec::Gauduchon(0.5)).unwrap();
        let mid = ChristoffelPair {
            gamma_holo: g0.gamma_holo.add(&g1.gamma_holo).scale(C64::new(0.5, 0.0)),
            gamma_anti: g0.gamma_anti.add(&g1.gamma_anti).scale(C64::new(0.5, 0.0)),
        };
        assert!(gh.max_diff(&mid) < 1e-13);
    }

    #[test]
    fn zeroed_anti_block_breaks_compatibility() {
        let jet = random_jet(2, 5);
        let cd = ChernData::new(&jet).unwrap();
        let mut cp = christoffel(&cd, &ConnectionSpec::Gauduchon(1.0)).unwrap();
        cp.gamma_anti = Tensor3::zeros(2);
        assert!(compatibility_residual(&jet, &cp) > 1e-3);
    }

    #[test]
    fn theta_route_matches_spec() {
        let jet = random_jet(3, 6);
        let cd = ChernData::new(&jet).unwrap();
        for spec in [
            ConnectionSpec::Chern,
            ConnectionSpec::Gauduchon(0.3),
            ConnectionSpec::LambdaMu(0.1, -0.4),
        ] {
            let th = theta_of(&spec, &cd).unwrap();
            let via = theta_pair(&cd, &th.value);
            let direct = christoffel(&cd, &spec).unwrap();
            assert!(via.max_diff(&direct) < 1e-13, "{spec:?}");
        }
        let bad = ConnectionSpec::LambdaMu(0.0, 0.0);
        assert!(matches!(theta_of(&bad, &cd), Err(Error::NotJCompatible(_))));
    }

    #[test]
    fn lc_hat_is_half_gauduchon() {
        let jet = random_jet(3, 7);
        let cd = ChernData::new(&jet).unwrap();
        let lc = lc_hat_christoffel(&cd);
        let g = christoffel(&cd, &ConnectionSpec::Gauduchon(0.5)).unwrap();
        assert!(lc.max_diff(&g) < 1e-12);
        let cj = connection_jet(&cd, &ConnectionSpec::Gauduchon(0.5)).unwrap();
        let lj = lc_hat_jet(&cd);
        assert!(cj.holo.max_diff(&lj.holo) < 1e-12);
        assert!(cj.anti.max_diff(&lj.anti) < 1e-12);
    }

    #[test]
    fn spec_parsing() {
        assert!(matches!(
            ConnectionSpec::parse("chern"),
            Ok(ConnectionSpec::Chern)
        ));
        assert!(matches!(
            ConnectionSpec::parse("gauduchon:0.5"),
            Ok(ConnectionSpec::Gauduchon(t)) if t == 0.5
        ));
        assert!(matches!(
            ConnectionSpec::parse("lambda-mu:0.25,-0.5"),
            Ok(ConnectionSpec::LambdaMu(l, m)) if l == 0.25 && m == -0.5
        ));
        assert!(ConnectionSpec::parse("foo:1").is_err());
    }

    #[test]
    fn torsion_antisymmetry_is_exact() {
        let cd = ChernData::new(&random_jet(4, 8)).unwrap();
        assert_eq!(cd.torsion().antisymmetry_defect(), 0.0);
    }
}
