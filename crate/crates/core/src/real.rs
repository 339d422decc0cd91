//! The real-coordinate side: Levi-Civita and `(λ,μ)` connections of
//! `g = Re h` by finite differences, their curvature and Ricci traces.
//!
//! Coordinates are `x = (x^1..x^n, x^{n+1}..x^{2n})` with
//! `z^i = x^i + √−1 x^{n+i}`. Christoffels are stored as
//! `∇_{e_a} e_b = Γ_{ab}^c e_c`, curvature as
//! `R(X,Y,Z,W) = g(∇_X∇_Y Z − ∇_Y∇_X Z − ∇_{[X,Y]}Z, W)`.
//! Every derivative is a central difference with one Richardson level,
//! `D = (4D(h/2) − D(h))/3`.

use nalgebra::DMatrix;

use crate::connections::ChernData;
use crate::curvature::chern_ricci;
use crate::error::{Error, Result};
use crate::hodge::second_adjoint_forms;
use crate::metric::{real_metric_from_matrix, ChartPoint, MetricField, MetricJet2, RealMetric};
use crate::tensor::{mat_max_abs, CMat, Tensor3, Tensor4, C64, I, ZERO};

/// Default real-side difference step.
pub const REAL_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RealConnectionKind {
    LeviCivita,
    LambdaMu(f64, f64),
}

impl RealConnectionKind {
    /// `(λ,μ) = (0,−½)`.
    pub fn real_chern() -> Self {
        Self::LambdaMu(0.0, -0.5)
    }

    /// The Gauduchon line `(λ,μ) = (t/2, (t−1)/2)`.
    pub fn gauduchon(t: f64) -> Self {
        Self::LambdaMu(0.5 * t, 0.5 * (t - 1.0))
    }

    fn coefficients(&self) -> (f64, f64) {
        match *self {
            Self::LeviCivita => (0.0, 0.0),
            Self::LambdaMu(l, m) => (l, m),
        }
    }
}

fn central_richardson<F>(f: &F, x: &[f64], a: usize, h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let central = |s: f64| -> Result<Vec<f64>> {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[a] += s;
        xm[a] -= s;
        let p = f(&xp)?;
        let m = f(&xm)?;
        Ok(p.iter().zip(&m).map(|(p, m)| (p - m) / (2.0 * s)).collect())
    };
    let coarse = central(h)?;
    let fine = central(0.5 * h)?;
    Ok(fine
        .iter()
        .zip(&coarse)
        .map(|(f, c)| (4.0 * f - c) / 3.0)
        .collect())
}

fn check_step(field: &dyn MetricField, z: &ChartPoint, step: f64) -> Result<()> {
    if !field.admissible(z) {
        return Err(Error::SingularLocus(field.name().to_string()));
    }
    if !(step > 0.0) || step >= field.admissible_radius(z) / 4.0 {
        return Err(Error::InvalidStep(step));
    }
    Ok(())
}

fn real_g(field: &dyn MetricField, x: &[f64]) -> Result<Vec<f64>> {
    let z = ChartPoint::from_real(x)?;
    if !field.admissible(&z) {
        return Err(Error::SingularLocus(field.name().to_string()));
    }
    Ok(real_metric_from_matrix(&field.metric(&z)?)
        .g
        .as_slice()
        .to_vec())
}

/// `g` and its coordinate derivatives `∂_a g` at `z`.
pub fn metric_derivatives(
    field: &dyn MetricField,
    z: &ChartPoint,
    step: f64,
) -> Result<(RealMetric, Vec<DMatrix<f64>>)> {
    check_step(field, z, step)?;
    let x = z.to_real();
    let m = x.len();
    let g = real_metric_from_matrix(&field.metric(z)?);
    let f = |y: &[f64]| real_g(field, y);
    let dg = (0..m)
        .map(|a| central_richardson(&f, &x, a, step).map(|v| DMatrix::from_vec(m, m, v)))
        .collect::<Result<Vec<_>>>()?;
    Ok((g, dg))
}

/// `dω_{abc} = ∂_a ω_{bc} − ∂_b ω_{ac} + ∂_c ω_{ab}` with `ω(X,Y) = g(JX,Y)`.
fn d_omega(j: &DMatrix<f64>, dg: &[DMatrix<f64>]) -> Vec<f64> {
    let m = dg.len();
    let domega: Vec<DMatrix<f64>> = dg.iter().map(|d| j.transpose() * d).collect();
    let mut out = vec![0.0; m * m * m];
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                out[(a * m + b) * m + c] =
                    domega[a][(b, c)] - domega[b][(a, c)] + domega[c][(a, b)];
            }
        }
    }
    out
}

/// Christoffel symbols of a real connection at a point.
#[derive(Debug, Clone)]
pub struct RealConnection {
    kind: RealConnectionKind,
    metric: RealMetric,
    dg: Vec<DMatrix<f64>>,
    gamma: Vec<f64>,
}

impl RealConnection {
    pub fn kind(&self) -> RealConnectionKind {
        self.kind
    }

    /// Real dimension `2n`.
    pub fn dim(&self) -> usize {
        self.dg.len()
    }

    pub fn metric(&self) -> &RealMetric {
        &self.metric
    }

    /// `Γ_{ab}^c`.
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        let m = self.dim();
        self.gamma[(a * m + b) * m + c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.gamma
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        self.gamma
            .iter()
            .zip(&other.gamma)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `max |Γ_{ab}^c − Γ_{ba}^c|`.
    pub fn torsion_defect(&self) -> f64 {
        let m = self.dim();
        let mut worst: f64 = 0.0;
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    worst = worst.max((self.get(a, b, c) - self.get(b, a, c)).abs());
                }
            }
        }
        worst
    }

    /// `max |(∇_a g)_{bc}|`.
    pub fn metric_residual(&self) -> f64 {
        let m = self.dim();
        let g = &self.metric.g;
        let mut worst: f64 = 0.0;
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let mut r = self.dg[a][(b, c)];
                    for d in 0..m {
                        r -= self.get(a, b, d) * g[(d, c)] + self.get(a, c, d) * g[(b, d)];
                    }
                    worst = worst.max(r.abs());
                }
            }
        }
        worst
    }

    /// `max |(∇_a J)e_b|` (J is constant in these coordinates).
    pub fn j_residual(&self) -> f64 {
        let m = self.dim();
        let j = &self.metric.j;
        let mut worst: f64 = 0.0;
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let mut r = 0.0;
                    for d in 0..m {
                        r += self.get(a, d, c) * j[(d, b)] - self.get(a, b, d) * j[(c, d)];
                    }
                    worst = worst.max(r.abs());
                }
            }
        }
        worst
    }

    /// Christoffels in the frame `(∂_1..∂_n, ∂̄_1..∂̄_n)`.
    pub fn complexify(&self) -> Tensor3 {
        let m = self.dim();
        let (p, q) = complex_frame(m / 2);
        Tensor3::from_fn(m, |s, t, r| {
            let mut acc = ZERO;
            for a in 0..m {
                if p[(a, s)] == ZERO {
                    continue;
                }
                for b in 0..m {
                    if p[(b, t)] == ZERO {
                        continue;
                    }
                    let w = p[(a, s)] * p[(b, t)];
                    for c in 0..m {
                        acc += w * q[(r, c)] * self.get(a, b, c);
                    }
                }
            }
            acc
        })
    }
}

/// `P` with `f_p = Σ_a P_{ap} e_a` for `f_i = ∂/∂z^i`, `f_{n+i} = ∂/∂z̄^i`,
/// and `Q = P⁻¹`.
pub fn complex_frame(n: usize) -> (CMat, CMat) {
    let half = C64::new(0.5, 0.0);
    let mut p = CMat::zeros(2 * n, 2 * n);
    let mut q = CMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        p[(i, i)] = half;
        p[(n + i, i)] = -I * half;
        p[(i, n + i)] = half;
        p[(n + i, n + i)] = I * half;
        q[(i, i)] = C64::new(1.0, 0.0);
        q[(n + i, i)] = C64::new(1.0, 0.0);
        q[(i, n + i)] = I;
        q[(n + i, n + i)] = -I;
    }
    (p, q)
}

fn connection_from_derivatives(
    kind: RealConnectionKind,
    metric: RealMetric,
    dg: Vec<DMatrix<f64>>,
) -> Result<RealConnection> {
    let m = dg.len();
    let ginv = metric
        .g
        .clone()
        .cholesky()
        .ok_or(Error::NotPositive {
            pivot: 0,
            value: f64::NAN,
        })?
        .inverse();
    let (lambda, mu) = kind.coefficients();
    let dw = if lambda != 0.0 || mu != 0.0 {
        Some(d_omega(&metric.j, &dg))
    } else {
        None
    };
    let j = &metric.j;
    let dw_at = |a: usize, b: usize, c: usize| dw.as_ref().map_or(0.0, |v| v[(a * m + b) * m + c]);
    // J e_a = Σ_p J[p][a] e_p, and dω is trilinear.
    let lowered = |a: usize, b: usize, d: usize| {
        let mut s = 0.5 * (dg[a][(b, d)] + dg[b][(a, d)] - dg[d][(a, b)]);
        if dw.is_some() {
            for p in 0..m {
                let ja = j[(p, a)];
                if ja == 0.0 {
                    continue;
                }
                s += mu * ja * dw_at(p, b, d);
                if lambda != 0.0 {
                    for qi in 0..m {
                        let jb = j[(qi, b)];
                        if jb == 0.0 {
                            continue;
                        }
                        for r in 0..m {
                            let jd = j[(r, d)];
                            if jd != 0.0 {
                                s += lambda * ja * jb * jd * dw_at(p, qi, r);
                            }
                        }
                    }
                }
            }
        }
        s
    };
    let mut gamma = vec![0.0; m * m * m];
    for a in 0..m {
        for b in 0..m {
            let low: Vec<f64> = (0..m).map(|d| lowered(a, b, d)).collect();
            for c in 0..m {
                gamma[(a * m + b) * m + c] = (0..m).map(|d| ginv[(c, d)] * low[d]).sum();
            }
        }
    }
    Ok(RealConnection {
        kind,
        metric,
        dg,
        gamma,
    })
}

/// Levi-Civita connection of `g` at `z`.
pub fn real_levi_civita(
    field: &dyn MetricField,
    z: &ChartPoint,
    step: f64,
) -> Result<RealConnection> {
    let (g, dg) = metric_derivatives(field, z, step)?;
    connection_from_derivatives(RealConnectionKind::LeviCivita, g, dg)
}

/// `g(∇_X Y, Z) = g(∇^{LC}_X Y, Z) + λ dω(JX,JY,JZ) + μ dω(JX,Y,Z)`.
pub fn real_connection(
    field: &dyn MetricField,
    z: &ChartPoint,
    lambda: f64,
    mu: f64,
    step: f64,
) -> Result<RealConnection> {
    let (g, dg) = metric_derivatives(field, z, step)?;
    connection_from_derivatives(RealConnectionKind::LambdaMu(lambda, mu), g, dg)
}

/// Either kind at `z`.
pub fn connection_of_kind(
    field: &dyn MetricField,
    z: &ChartPoint,
    kind: RealConnectionKind,
    step: f64,
) -> Result<RealConnection> {
    let (g, dg) = metric_derivatives(field, z, step)?;
    connection_from_derivatives(kind, g, dg)
}

/// Fully covariant `R_{abcd} = R(e_a, e_b, e_c, e_d)`.
#[derive(Debug, Clone)]
pub struct RealCurvature {
    m: usize,
    data: Vec<f64>,
}

impl RealCurvature {
    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let m = self.m;
        self.data[((a * m + b) * m + c) * m + d]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |w, v| w.max(v.abs()))
    }

    /// Defect of antisymmetry in `(X,Y)` and in `(Z,W)`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let m = self.m;
        let mut worst: f64 = 0.0;
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for d in 0..m {
                        let v = self.get(a, b, c, d);
                        worst = worst
                            .max((v + self.get(b, a, c, d)).abs())
                            .max((v + self.get(a, b, d, c)).abs());
                    }
                }
            }
        }
        worst
    }

    /// `max |R_{abcd} − R_{cdab}|`.
    pub fn pair_symmetry_defect(&self) -> f64 {
        let m = self.m;
        let mut worst: f64 = 0.0;
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for d in 0..m {
                        worst = worst.max((self.get(a, b, c, d) - self.get(c, d, a, b)).abs());
                    }
                }
            }
        }
        worst
    }

    /// `R(f_p, f_q, f_r, f_s)` in the frame of [`complex_frame`].
    pub fn complexify(&self) -> Tensor4 {
        let m = self.m;
        let (p, _) = complex_frame(m / 2);
        // contract one slot at a time; P has two nonzero entries per column
        let mut cur: Vec<C64> = self.data.iter().map(|v| C64::new(*v, 0.0)).collect();
        for slot in 0..4 {
            let mut next = vec![ZERO; cur.len()];
            let stride = m.pow(3 - slot as u32);
            for (idx, out) in next.iter_mut().enumerate() {
                let target = (idx / stride) % m;
                let base = idx - target * stride;
                let mut s = ZERO;
                for a in 0..m {
                    let w = p[(a, target)];
                    if w != ZERO {
                        s += w * cur[base + a * stride];
                    }
                }
                *out = s;
            }
            cur = next;
        }
        Tensor4::from_fn(m, |a, b, c, d| cur[((a * m + b) * m + c) * m + d])
    }
}

/// Curvature of a connection field by differencing its Christoffels at `z`.
pub fn real_curvature<F>(conn: F, z: &ChartPoint, step: f64) -> Result<RealCurvature>
where
    F: Fn(&ChartPoint) -> Result<RealConnection>,
{
    if !(step > 0.0) {
        return Err(Error::InvalidStep(step));
    }
    let base = conn(z)?;
    let m = base.dim();
    let x = z.to_real();
    let f = |y: &[f64]| conn(&ChartPoint::from_real(y)?).map(|c| c.gamma);
    let dgamma = (0..m)
        .map(|a| central_richardson(&f, &x, a, step))
        .collect::<Result<Vec<_>>>()?;
    let dg = |a: usize, b: usize, c: usize, e: usize| dgamma[a][(b * m + c) * m + e];
    let g = &base.metric.g;
    let mut data = vec![0.0; m * m * m * m];
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                // R_{abc}^e
                let raised: Vec<f64> = (0..m)
                    .map(|e| {
                        let mut s = dg(a, b, c, e) - dg(b, a, c, e);
                        for d in 0..m {
                            s += base.get(b, c, d) * base.get(a, d, e)
                                - base.get(a, c, d) * base.get(b, d, e);
                        }
                        s
                    })
                    .collect();
                for w in 0..m {
                    data[((a * m + b) * m + c) * m + w] =
                        (0..m).map(|e| raised[e] * g[(e, w)]).sum();
                }
            }
        }
    }
    Ok(RealCurvature { m, data })
}

/// [`real_curvature`] of a named connection of `field`.
pub fn real_curvature_of(
    field: &dyn MetricField,
    z: &ChartPoint,
    kind: RealConnectionKind,
    step: f64,
) -> Result<RealCurvature> {
    check_step(field, z, 2.0 * step)?;
    real_curvature(|w| connection_of_kind(field, w, kind, step), z, step)
}

/// `Ric(X,Y) = Σ_i R(X, e_i, e_i, Y)` over a g-orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RealRicci {
    pub ric: DMatrix<f64>,
}

impl RealRicci {
    pub fn symmetry_defect(&self) -> f64 {
        (&self.ric - self.ric.transpose()).abs().max()
    }

    /// `max |Ric(JX,JY) − Ric(X,Y)|`.
    pub fn j_invariance_defect(&self, j: &DMatrix<f64>) -> f64 {
        (j.transpose() * &self.ric * j - &self.ric).abs().max()
    }

    /// `Ric(f_p, f_q)` in the frame of [`complex_frame`].
    pub fn complexify(&self) -> CMat {
        let m = self.ric.nrows();
        let (p, _) = complex_frame(m / 2);
        let r = self.ric.map(|v| C64::new(v, 0.0));
        p.transpose() * r * p
    }

    /// `(Ric(∂_i, ∂̄_j), Ric(∂̄_j, ∂_i))` as `n×n` matrices indexed `[i][j]`.
    pub fn mixed_blocks(&self) -> (CMat, CMat) {
        let c = self.complexify();
        let n = c.nrows() / 2;
        (
            CMat::from_fn(n, n, |i, j| c[(i, n + j)]),
            CMat::from_fn(n, n, |i, j| c[(n + j, i)]),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.ric.abs().max()
    }
}

/// Orthonormal frame from the Cholesky factor `g = LLᵀ`: columns of `L⁻ᵀ`.
pub fn orthonormal_frame(g: &RealMetric) -> Result<DMatrix<f64>> {
    let chol = g.g.clone().cholesky().ok_or(Error::NotPositive {
        pivot: 0,
        value: f64::NAN,
    })?;
    let l = chol.l();
    let m = l.nrows();
    let linv = l
        .solve_lower_triangular(&DMatrix::identity(m, m))
        .ok_or(Error::NonFinite)?;
    Ok(linv.transpose())
}

pub fn real_ricci(curv: &RealCurvature, g: &RealMetric) -> Result<RealRicci> {
    let m = curv.dim();
    if g.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: g.dim(),
        });
    }
    let e = orthonormal_frame(g)?;
    let ric = DMatrix::from_fn(m, m, |a, b| {
        let mut s = 0.0;
        for i in 0..m {
            for c in 0..m {
                for d in 0..m {
                    s += e[(c, i)] * e[(d, i)] * curv.get(a, c, d, b);
                }
            }
        }
        s
    });
    Ok(RealRicci { ric })
}

/// `g^{ab} Ric^{LC}_{ab}` from the FD Levi-Civita curvature.
pub fn riemannian_scalar(field: &dyn MetricField, z: &ChartPoint, step: f64) -> Result<f64> {
    let curv = real_curvature_of(field, z, RealConnectionKind::LeviCivita, step)?;
    let g = real_metric_from_matrix(&field.metric(z)?);
    let ric = real_ricci(&curv, &g)?;
    let ginv = g.g.clone().cholesky().ok_or(Error::NonFinite)?.inverse();
    Ok((&ginv * &ric.ric).trace())
}

/// `Θ^(1) − ∂∂*ω` at the jet's point.
pub fn real_chern_ricci_form(jet: &MetricJet2) -> Result<CMat> {
    let cd = ChernData::new(jet)?;
    let (dd, _) = second_adjoint_forms(&cd);
    Ok(chern_ricci(&cd).ric1 - dd)
}

/// `max |Θ^(1) − ∂∂*ω − λh|` over coefficient entries.
pub fn einstein_residual(jet: &MetricJet2, lambda: f64) -> Result<f64> {
    let e = real_chern_ricci_form(jet)? - jet.h().matrix() * C64::new(lambda, 0.0);
    Ok(mat_max_abs(&e))
}

/// Complexified Levi-Civita curvature against the curvature `𝔯` of the
/// restricted connection, as maximal entry differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcComparison {
    /// `R_{i j k l̄}` vs `𝔯_{i j k l̄}`.
    pub block20: f64,
    /// `R_{ī j̄ k l̄}` vs `𝔯_{ī j̄ k l̄}`.
    pub block02: f64,
    /// `R_{i j̄ k l̄}` vs `𝔯_{i j̄ k l̄} + C`, with `C` built from the
    /// `∂̄`-components `Γ_{j̄k}^{s̄}conj(Γ_{īs}^{l̄})` of the real connection.
    pub mixed: f64,
    /// Same with `C` replaced by `Γ̂_{s̄ i}^l conj(Γ̂_{k̄ j}^s)` built from the
    /// restricted connection.
    pub mixed_restricted: f64,
}

/// Compares a Levi-Civita curvature computed at `cd.point()` with `𝔯`.
pub fn compare_lc_curvature(cd: &ChernData, lc: &RealCurvature) -> LcComparison {
    use crate::connections::{lambda_mu_mixing, lc_hat_christoffel};
    use crate::curvature::lc_hat_curvature;
    let n = cd.dim();
    let rc = lc.complexify();
    let hat = lc_hat_curvature(cd);
    let (r11, r20, r02) = (hat.lowered11(cd), hat.lowered20(cd), hat.lowered02(cd));
    let mix = lambda_mu_mixing(cd, 0.0, 0.0);
    let anti = lc_hat_christoffel(cd).gamma_anti;
    let mut out = LcComparison {
        block20: 0.0,
        block02: 0.0,
        mixed: 0.0,
        mixed_restricted: 0.0,
    };
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let (mut c, mut p) = (ZERO, ZERO);
                    for s in 0..n {
                        for q in 0..n {
                            c += mix.get(j, k, s) * mix.get(i, s, q).conj() * cd.h(q, l);
                            p += anti.get(s, i, q) * anti.get(k, j, s).conj() * cd.h(q, l);
                        }
                    }
                    let base = rc.get(i, n + j, k, n + l) - r11.get(i, j, k, l);
                    out.mixed = out.mixed.max((base - c).norm());
                    out.mixed_restricted = out.mixed_restricted.max((base - p).norm());
                    out.block20 = out
                        .block20
                        .max((rc.get(i, j, k, n + l) - r20.get(i, j, k, l)).norm());
                    out.block02 = out
                        .block02
                        .max((rc.get(n + i, n + j, k, n + l) - r02.get(i, j, k, l)).norm());
                }
            }
        }
    }
    out
}

/// `max |R(a,b,c,d) + R(a,c,d,b) + R(a,d,b,c)|` over complexified indices.
pub fn first_bianchi_defect(curv: &RealCurvature) -> f64 {
    let rc = curv.complexify();
    let m = curv.dim();
    let mut worst: f64 = 0.0;
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let s = rc.get(a, b, c, d) + rc.get(a, c, d, b) + rc.get(a, d, b, c);
                    worst = worst.max(s.norm());
                }
            }
        }
    }
    worst
}

/// Wirtinger `∂_k` of a matrix-valued function by central differences.
fn holomorphic_derivatives<F>(f: F, z: &ChartPoint, step: f64) -> Result<Vec<CMat>>
where
    F: Fn(&ChartPoint) -> Result<CMat>,
{
    let n = z.dim();
    let x = z.to_real();
    let flat = |y: &[f64]| -> Result<Vec<f64>> {
        let m = f(&ChartPoint::from_real(y)?)?;
        Ok(m.iter().flat_map(|c| [c.re, c.im]).collect())
    };
    let rows = f(z)?.nrows();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let dx = central_richardson(&flat, &x, k, step)?;
        let dy = central_richardson(&flat, &x, n + k, step)?;
        let entry = |v: &[f64], idx: usize| C64::new(v[2 * idx], v[2 * idx + 1]);
        // nalgebra stores column-major; iter() follows storage order
        out.push(CMat::from_fn(rows, rows, |i, j| {
            let idx = j * rows + i;
            (entry(&dx, idx) - I * entry(&dy, idx)) * 0.5
        }));
    }
    Ok(out)
}

/// `max |∂_k A_{i j̄} − ∂_i A_{k j̄}|` for a `(1,1)`-form field `A`.
fn del_norm(d: &[CMat]) -> f64 {
    let n = d.len();
    let mut worst: f64 = 0.0;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((d[k][(i, j)] - d[i][(k, j)]).norm());
            }
        }
    }
    worst
}

/// `(‖∂(Θ^(1) − ∂∂*ω)‖, ‖∂E‖, ‖∂ω‖)` at `z`, where `E = Θ^(1) − ∂∂*ω − λω`
/// and norms are coefficient maxima of `∂_k A_{i j̄} − ∂_i A_{k j̄}`.
/// `Θ^(1) − ∂∂*ω` is `∂`-closed, so `∂E = −λ∂ω` and `‖∂ω‖ = ‖∂E‖/|λ|`.
pub fn einstein_closedness(
    field: &dyn MetricField,
    z: &ChartPoint,
    lambda: f64,
    step: f64,
) -> Result<(f64, f64, f64)> {
    check_step(field, z, 2.0 * step)?;
    let form = |w: &ChartPoint| real_chern_ricci_form(&field.jet(w)?);
    let df = holomorphic_derivatives(form, z, step)?;
    let jet = field.jet(z)?;
    let n = z.dim();
    let dh: Vec<CMat> = (0..n).map(|k| jet.dh_block(k).clone()).collect();
    let de: Vec<CMat> = df
        .iter()
        .zip(&dh)
        .map(|(a, b)| a - b * C64::new(lambda, 0.0))
        .collect();
    Ok((del_norm(&df), del_norm(&de), del_norm(&dh)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connections::{
        chern_christoffel, christoffel, lambda_mu_mixing, lc_hat_christoffel, ConnectionSpec,
    };
    use crate::curvature::{chern_curvature, lc_hat_curvature};
    use crate::models::{RadialModel, TorusModel};
    use crate::sampling::annulus_points;
    use crate::tensor::mat_max_diff;

    fn hopf(n: usize, lambda: f64) -> RadialModel {
        RadialModel::hopf(n, lambda).unwrap()
    }

    fn unit(n: usize) -> ChartPoint {
        let mut x = vec![0.0; n];
        x[0] = 1.0;
        ChartPoint::real(&x).unwrap()
    }

    #[test]
    fn frame_matrices_are_inverse() {
        let (p, q) = complex_frame(3);
        assert!(mat_max_diff(&(&p * &q), &CMat::identity(6, 6)) < 1e-15);
    }

    #[test]
    fn flat_torus_is_flat() {
        let t = TorusModel::standard(2).unwrap();
        let z = unit(2);
        let lc = real_levi_civita(&t, &z, REAL_STEP).unwrap();
        assert_eq!(
            lc.as_slice().iter().fold(0.0f64, |w, v| w.max(v.abs())),
            0.0
        );
        let r = real_curvature_of(&t, &z, RealConnectionKind::LeviCivita, REAL_STEP).unwrap();
        assert_eq!(r.max_abs(), 0.0);
        assert_eq!(riemannian_scalar(&t, &z, REAL_STEP).unwrap(), 0.0);
    }

    #[test]
    fn levi_civita_is_torsion_free_and_metric() {
        let m = hopf(2, 0.4);
        for z in annulus_points(2, 3, 0.8, 1.25, 1) {
            let lc = real_levi_civita(&m, &z, REAL_STEP).unwrap();
            assert!(lc.torsion_defect() < 1e-10);
            assert!(lc.metric_residual() < 1e-6);
        }
    }

    #[test]
    fn lc_complexified_matches_lc_hat() {
        let m = hopf(2, 0.0);
        let z = ChartPoint::new(vec![C64::new(0.7, 0.2), C64::new(-0.3, 0.5)]).unwrap();
        let cd = ChernData::new(&m.jet(&z).unwrap()).unwrap();
        let hat = lc_hat_christoffel(&cd);
        let c = real_levi_civita(&m, &z, REAL_STEP).unwrap().complexify();
        let n = 2;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    assert!((c.get(i, j, k) - hat.gamma_holo.get(i, j, k)).norm() < 1e-5);
                    assert!((c.get(n + i, j, k) - hat.gamma_anti.get(i, j, k)).norm() < 1e-5);
                }
            }
        }
        let g = christoffel(&cd, &ConnectionSpec::Gauduchon(0.5)).unwrap();
        assert!(hat.max_diff(&g) < 1e-12);
    }

    #[test]
    fn lambda_mu_christoffel_relations() {
        let m = hopf(3, 0.3);
        let z = ChartPoint::new(vec![
            C64::new(0.6, -0.2),
            C64::new(0.1, 0.4),
            C64::new(-0.5, 0.3),
        ])
        .unwrap();
        let cd = ChernData::new(&m.jet(&z).unwrap()).unwrap();
        let n = 3;
        for (l, mu) in [
            (0.0, -0.5),
            (0.3, 0.1),
            (-0.7, 0.45),
            (1.2, -0.9),
            (0.0, 0.0),
        ] {
            let c = real_connection(&m, &z, l, mu, REAL_STEP)
                .unwrap()
                .complexify();
            assert!(
                real_connection(&m, &z, l, mu, REAL_STEP)
                    .unwrap()
                    .metric_residual()
                    < 1e-6
            );
            let pair = christoffel(&cd, &ConnectionSpec::Gauduchon(l + mu + 0.5)).unwrap();
            let mix = lambda_mu_mixing(&cd, l, mu);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        assert!((c.get(i, j, k) - pair.gamma_holo.get(i, j, k)).norm() < 1e-5);
                        assert!(c.get(i, j, n + k).norm() < 1e-5);
                        assert!((c.get(n + i, j, k) - pair.gamma_anti.get(i, j, k)).norm() < 1e-5);
                        assert!(
                            (c.get(n + i, j, n + k) - mix.get(i, j, k)).norm() < 1e-5,
                            "({l},{mu}) {} vs {}",
                            c.get(n + i, j, n + k),
                            mix.get(i, j, k)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn j_parallel_iff_on_the_chern_line() {
        let m = hopf(2, 0.0);
        let z = unit(2);
        let ch = real_connection(&m, &z, 0.0, -0.5, REAL_STEP).unwrap();
        assert!(ch.j_residual() < 1e-6);
        assert!(
            real_connection(&m, &z, 0.25, -0.25, REAL_STEP)
                .unwrap()
                .j_residual()
                < 1e-6
        );
        assert!(
            real_connection(&m, &z, 0.0, 0.0, REAL_STEP)
                .unwrap()
                .j_residual()
                > 1e-3
        );
        let t = TorusModel::standard(2).unwrap();
        assert!(
            real_connection(&t, &z, 0.0, 0.0, REAL_STEP)
                .unwrap()
                .j_residual()
                < 1e-12
        );
        // Chern: ∇_{∂̄_i}∂_j = 0
        let c = ch.complexify();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..4 {
                    assert!(c.get(2 + i, j, k).norm() < 1e-6);
                }
            }
        }
        let cd = ChernData::new(&m.jet(&z).unwrap()).unwrap();
        let cc = chern_christoffel(&cd);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert!((c.get(i, j, k) - cc.gamma_holo.get(i, j, k)).norm() < 1e-5);
                }
            }
        }
    }

    #[test]
    fn real_chern_curvature_is_theta() {
        let m = hopf(2, 0.5);
        let z = ChartPoint::new(vec![C64::new(0.8, 0.1), C64::new(0.2, -0.4)]).unwrap();
        let r = real_curvature_of(&m, &z, RealConnectionKind::real_chern(), REAL_STEP).unwrap();
        assert!(r.antisymmetry_defect() < 1e-6);
        let rc = r.complexify();
        let th = chern_curvature(&ChernData::new(&m.jet(&z).unwrap()).unwrap());
        let n = 2;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let d = rc.get(i, n + j, k, n + l) - th.get(i, j, k, l);
                        assert!(d.norm() < 1e-4, "{d}");
                    }
                }
            }
        }
    }

    #[test]
    fn lc_curvature_blocks() {
        let m = hopf(2, 0.0);
        let z = ChartPoint::new(vec![C64::new(0.9, 0.3), C64::new(-0.2, 0.5)]).unwrap();
        let cd = ChernData::new(&m.jet(&z).unwrap()).unwrap();
        let r = real_curvature_of(&m, &z, RealConnectionKind::LeviCivita, REAL_STEP).unwrap();
        assert!(r.pair_symmetry_defect() < 1e-6);
        let rc = r.complexify();
        let hat = lc_hat_curvature(&cd);
        let r20 = hat.lowered20(&cd);
        let r02 = hat.lowered02(&cd);
        let r11 = hat.lowered11(&cd);
        let mix = lambda_mu_mixing(&cd, 0.0, 0.0);
        let n = 2;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        assert!((rc.get(i, j, k, n + l) - r20.get(i, j, k, l)).norm() < 1e-4);
                        assert!(
                            (rc.get(n + i, n + j, k, n + l) - r02.get(i, j, k, l)).norm() < 1e-4
                        );
                        // (1,1) block: 𝔯 plus Σ_s Γ_{j̄k}^{s̄} conj(Γ_{īs}^{l̄}), lowered
                        let mut corr = ZERO;
                        for s in 0..n {
                            for p in 0..n {
                                corr += mix.get(j, k, s) * mix.get(i, s, p).conj() * cd.h(p, l);
                            }
                        }
                        let d = rc.get(i, n + j, k, n + l) - r11.get(i, j, k, l) - corr;
                        assert!(d.norm() < 1e-4, "{d}");
                    }
                }
            }
        }
    }

    #[test]
    fn lc_mixed_block_correction_both_forms() {
        use crate::dsl::parse_expr;
        use crate::models::ConformalModel;
        use std::sync::Arc;
        let base: Arc<dyn MetricField> = Arc::new(hopf(2, 0.3));
        let f = parse_expr("0.2*z1*conj(z2) + 0.2*z2*conj(z1) - 0.1*abs2(z)", 2).unwrap();
        let conf = ConformalModel::new(base, f).unwrap();
        let z = ChartPoint::new(vec![C64::new(0.9, 0.3), C64::new(-0.2, 0.5)]).unwrap();
        for m in [&hopf(2, 0.0) as &dyn MetricField, &conf] {
            let cd = ChernData::new(&m.jet(&z).unwrap()).unwrap();
            let lc = real_curvature_of(m, &z, RealConnectionKind::LeviCivita, REAL_STEP).unwrap();
            let c = compare_lc_curvature(&cd, &lc);
            assert!(c.block20 < 1e-4 && c.block02 < 1e-4, "{c:?}");
            assert!(c.mixed < 1e-4 && c.mixed_restricted < 1e-4, "{c:?}");
            assert!(first_bianchi_defect(&lc) < 1e-4);
        }
    }

    #[test]
    fn real_chern_ricci_complexification() {
        let m = hopf(2, 0.0);
        let z = unit(2);
        let jet = m.jet(&z).unwrap();
        let cd = ChernData::new(&jet).unwrap();
        let rp = chern_ricci(&cd);
        let r = real_curvature_of(&m, &z, RealConnectionKind::real_chern(), REAL_STEP).unwrap();
        let ric = real_ricci(&r, &real_metric_from_matrix(jet.h().matrix())).unwrap();
        let (a, b) = ric.mixed_blocks();
        assert!(mat_max_diff(&a, &rp.ric3) < 1e-4, "{a} vs {}", rp.ric3);
        assert!(mat_max_diff(&b, &rp.ric4) < 1e-4, "{b} vs {}", rp.ric4);
        let c = ric.complexify();
        for i in 0..2 {
            for j in 0..2 {
                assert!(c[(i, j)].norm() < 1e-4 && c[(2 + i, 2 + j)].norm() < 1e-4);
            }
        }
    }

    #[test]
    fn real_chern_ricci_flat_hopf() {
        for n in [2, 3] {
            let m = hopf(n, -1.0 / n as f64);
            for z in annulus_points(n, 2, 0.8, 1.25, 4) {
                let r =
                    real_curvature_of(&m, &z, RealConnectionKind::real_chern(), REAL_STEP).unwrap();
                let g = real_metric_from_matrix(&m.metric(&z).unwrap());
                assert!(real_ricci(&r, &g).unwrap().max_abs() < 1e-4);
                assert!(einstein_residual(&m.jet(&z).unwrap(), 0.0).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn einstein_residual_examples() {
        let fs = RadialModel::fubini_study(2, 1.0).unwrap();
        let z = ChartPoint::new(vec![C64::new(0.3, 0.1), C64::new(-0.6, 0.2)]).unwrap();
        assert!(einstein_residual(&fs.jet(&z).unwrap(), 3.0).unwrap() < 1e-10);
        let h0 = hopf(2, 0.0);
        assert!(einstein_residual(&h0.jet(&unit(2)).unwrap(), 0.0).unwrap() > 0.1);
    }

    #[test]
    fn riemannian_scalar_values() {
        let h0 = hopf(2, 0.0);
        assert!((riemannian_scalar(&h0, &unit(2), REAL_STEP).unwrap() - 0.75).abs() < 1e-5);
        let fs = RadialModel::fubini_study(1, 1.0).unwrap();
        let z = ChartPoint::new(vec![C64::new(0.4, 0.3)]).unwrap();
        assert!((riemannian_scalar(&fs, &z, REAL_STEP).unwrap() - 4.0).abs() < 1e-5);
    }

    #[test]
    fn closedness_of_real_chern_ricci_form() {
        let m = hopf(2, 0.6);
        let z = ChartPoint::new(vec![C64::new(0.7, 0.2), C64::new(0.3, -0.6)]).unwrap();
        for lambda in [0.5, -2.0] {
            let (df, de, dw) = einstein_closedness(&m, &z, lambda, REAL_STEP).unwrap();
            assert!(df < 1e-7, "{df}");
            assert!((de - lambda.abs() * dw).abs() < 1e-7);
        }
    }

    #[test]
    fn singular_locus_is_rejected() {
        let m = hopf(2, 0.0);
        let z = ChartPoint::real(&[0.0, 0.0]).unwrap();
        assert!(matches!(
            real_levi_civita(&m, &z, REAL_STEP),
            Err(Error::SingularLocus(_))
        ));
        let near = ChartPoint::real(&[1e-3, 0.0]).unwrap();
        assert!(matches!(
            real_levi_civita(&m, &near, REAL_STEP),
            Err(Error::InvalidStep(_))
        ));
    }
}
