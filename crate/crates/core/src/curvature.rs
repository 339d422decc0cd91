//! Curvature tensors of Hermitian connections and their Ricci contractions.
//!
//! `Curvature11::get(i, j, k, l)` is `R_{i j̄ k l̄}` and
//! `Curvature20::get(i, j, k, l)` is `R_{i j k l̄}`, both lowered with
//! `h_{s l̄}` in the last slot. Ricci matrices are coefficients of
//! `√−1 dz^i ∧ dz̄^j` with the `√−1` left implicit.

use serde::Serialize;

use crate::connections::{lc_hat_jet, trace1, ChernData, ConnectionJet, ThetaJet};
use crate::error::Result;
use crate::metric::HermitianForm;
use crate::tensor::{CMat, Tensor4, C64, ZERO};

#[derive(Debug, Clone, PartialEq)]
pub struct Curvature11(pub Tensor4);

#[derive(Debug, Clone, PartialEq)]
pub struct Curvature20(pub Tensor4);

impl Curvature11 {
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        self.0.get(i, j, k, l)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        self.0.max_diff(&other.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }

    /// `max |R_{i j̄ k l̄} − conj(R_{j ī l k̄})|`.
    pub fn pair_symmetry_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let d = self.get(i, j, k, l) - self.get(j, i, l, k).conj();
                        worst = worst.max(d.norm());
                    }
                }
            }
        }
        worst
    }
}

impl Curvature20 {
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        self.0.get(i, j, k, l)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        self.0.max_diff(&other.0)
    }

    /// `max |R_{i j k l̄} + R_{j i k l̄}|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.0.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        worst = worst.max((self.get(i, j, k, l) + self.get(j, i, k, l)).norm());
                    }
                }
            }
        }
        worst
    }
}

/// Curvature of a connection on `T^{1,0}` with both Christoffel blocks, as
/// raised tensors: `r11 = R_{i j̄ k}^l`, `r20 = R_{i j k}^l`,
/// `r02 = R_{ī j̄ k}^l`.
#[derive(Debug, Clone, PartialEq)]
pub struct LCHatCurvature {
    pub r11: Tensor4,
    pub r20: Tensor4,
    pub r02: Tensor4,
}

impl LCHatCurvature {
    pub fn lowered11(&self, cd: &ChernData) -> Curvature11 {
        Curvature11(lower(&self.r11, cd))
    }

    pub fn lowered20(&self, cd: &ChernData) -> Curvature20 {
        Curvature20(lower(&self.r20, cd))
    }

    pub fn lowered02(&self, cd: &ChernData) -> Tensor4 {
        lower(&self.r02, cd)
    }
}

/// `X_{abc l̄} = X_{abc}^s h_{s l̄}`.
pub fn lower(x: &Tensor4, cd: &ChernData) -> Tensor4 {
    let n = cd.dim();
    Tensor4::from_fn(n, |a, b, c, l| {
        (0..n).map(|s| x.get(a, b, c, s) * cd.h(s, l)).sum()
    })
}

/// `X_{abc}^l = X_{abc m̄} h^{l m̄}`.
pub fn raise(x: &Tensor4, cd: &ChernData) -> Tensor4 {
    let n = cd.dim();
    Tensor4::from_fn(n, |a, b, c, l| {
        (0..n).map(|m| x.get(a, b, c, m) * cd.hinv(l, m)).sum()
    })
}

/// `Θ_{i j̄ k l̄} = −∂_i∂_{j̄} h_{k l̄} + h^{p q̄} ∂_{j̄}h_{p l̄} ∂_i h_{k q̄}`.
pub fn chern_curvature(cd: &ChernData) -> Curvature11 {
    let n = cd.dim();
    let jet = cd.jet();
    Curvature11(Tensor4::from_fn(n, |i, j, k, l| {
        let mut s = -jet.mixed(i, j, k, l);
        for p in 0..n {
            for q in 0..n {
                s += cd.hinv(p, q) * jet.dbar(j, p, l) * jet.d(i, k, q);
            }
        }
        s
    }))
}

/// Curvature of `Γ + θ` from the θ-twisted closed formulas.
pub fn theta_curvature(cd: &ChernData, theta: &ThetaJet) -> (Curvature11, Curvature20) {
    let n = cd.dim();
    let th = &theta.value;
    let chern = chern_curvature(cd);
    let r11 = Tensor4::from_fn(n, |i, j, k, l| {
        let mut s = chern.get(i, j, k, l);
        for p in 0..n {
            s -= cd.h(k, p) * theta.dbar[i].get(j, l, p).conj();
            s -= cd.h(p, l) * theta.dbar[j].get(i, k, p);
            for q in 0..n {
                s += th.get(i, k, p) * th.get(j, l, q).conj() * cd.h(p, q);
                let mut inner = ZERO;
                for m in 0..n {
                    for nn in 0..n {
                        inner += cd.hinv(m, nn) * th.get(i, m, p) * th.get(j, nn, q).conj();
                    }
                }
                s -= inner * cd.h(p, l) * cd.h(k, q);
            }
        }
        s
    });
    let g = &cd.gamma().value;
    let raised = Tensor4::from_fn(n, |i, j, k, l| {
        let mut s = theta.d[i].get(j, k, l) - theta.d[j].get(i, k, l);
        for m in 0..n {
            s += g.get(j, k, m) * th.get(i, m, l) - g.get(j, m, l) * th.get(i, k, m)
                + g.get(i, m, l) * th.get(j, k, m)
                - g.get(i, k, m) * th.get(j, m, l);
            s += th.get(j, k, m) * th.get(i, m, l) - th.get(i, k, m) * th.get(j, m, l);
        }
        s
    });
    (Curvature11(r11), Curvature20(lower(&raised, cd)))
}

/// Torsion-quadratic part `Q` of the Gauduchon curvature.
fn gauduchon_quadratic(cd: &ChernData) -> Tensor4 {
    let n = cd.dim();
    let t = cd.torsion();
    Tensor4::from_fn(n, |i, j, k, l| {
        let mut s = ZERO;
        for p in 0..n {
            for q in 0..n {
                s += t.get(i, k, p) * t.get(j, l, q).conj() * cd.h(p, q);
                let mut inner = ZERO;
                for m in 0..n {
                    for nn in 0..n {
                        inner += cd.h(m, l) * cd.h(k, nn) * t.get(i, p, m) * t.get(j, q, nn).conj();
                    }
                }
                s -= cd.hinv(p, q) * inner;
            }
        }
        s
    })
}

/// Closed form of the `(1,1)`-curvature of `∇^t`, quadratic in `t`.
pub fn gauduchon_curvature(cd: &ChernData, t: f64) -> Curvature11 {
    let n = cd.dim();
    let th = chern_curvature(cd);
    let q = gauduchon_quadratic(cd);
    Curvature11(Tensor4::from_fn(n, |i, j, k, l| {
        let lin = th.get(i, l, k, j) + th.get(k, j, i, l) - th.get(i, j, k, l) * 2.0;
        th.get(i, j, k, l) + lin * t + q.get(i, j, k, l) * (t * t)
    }))
}

/// Raised curvature blocks of a connection given by its Christoffel jets.
pub fn connection_curvature(cj: &ConnectionJet) -> LCHatCurvature {
    let a = &cj.holo;
    let b = &cj.anti;
    let n = a.dim();
    let r11 = Tensor4::from_fn(n, |i, j, k, l| {
        let mut s = b.d[i].get(j, k, l) - a.dbar[j].get(i, k, l);
        for m in 0..n {
            s += b.value.get(j, k, m) * a.value.get(i, m, l)
                - a.value.get(i, k, m) * b.value.get(j, m, l);
        }
        s
    });
    let r20 = Tensor4::from_fn(n, |i, j, k, l| {
        let mut s = a.d[i].get(j, k, l) - a.d[j].get(i, k, l);
        for m in 0..n {
            s += a.value.get(j, k, m) * a.value.get(i, m, l)
                - a.value.get(i, k, m) * a.value.get(j, m, l);
        }
        s
    });
    let r02 = Tensor4::from_fn(n, |i, j, k, l| {
        let mut s = b.dbar[i].get(j, k, l) - b.dbar[j].get(i, k, l);
        for m in 0..n {
            s += b.value.get(j, k, m) * b.value.get(i, m, l)
                - b.value.get(i, k, m) * b.value.get(j, m, l);
        }
        s
    });
    LCHatCurvature { r11, r20, r02 }
}

/// Curvature `𝔯` of the restricted Levi-Civita connection `Γ̂`.
pub fn lc_hat_curvature(cd: &ChernData) -> LCHatCurvature {
    connection_curvature(&lc_hat_jet(cd))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RicciPack {
    #[serde(serialize_with = "ser_mat")]
    pub ric1: CMat,
    #[serde(serialize_with = "ser_mat")]
    pub ric2: CMat,
    #[serde(serialize_with = "ser_mat")]
    pub ric3: CMat,
    #[serde(serialize_with = "ser_mat")]
    pub ric4: CMat,
    #[serde(serialize_with = "ser_c64")]
    pub s1: C64,
    #[serde(serialize_with = "ser_c64")]
    pub s2: C64,
    /// Chern scalar curvatures, present only when the input is `Θ`.
    pub sc: Option<f64>,
    pub sc2: Option<f64>,
}

pub(crate) fn ser_c64<S: serde::Serializer>(c: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [c.re, c.im].serialize(s)
}

pub(crate) fn ser_mat<S: serde::Serializer>(
    m: &CMat,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    mat_rows(m).serialize(s)
}

/// Row-major `[re, im]` pairs.
pub fn mat_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

/// The four Ricci contractions and two scalar traces of `r`.
pub fn ricci_and_scalars(r: &Curvature11, h: &HermitianForm) -> Result<RicciPack> {
    let minv = h.factor()?.inverse();
    Ok(ricci_with_inverse(r, &minv))
}

pub(crate) fn ricci_with_inverse(r: &Curvature11, minv: &CMat) -> RicciPack {
    let n = r.dim();
    let hinv = |k: usize, l: usize| minv[(l, k)];
    let mut ric = [
        CMat::zeros(n, n),
        CMat::zeros(n, n),
        CMat::zeros(n, n),
        CMat::zeros(n, n),
    ];
    for i in 0..n {
        for j in 0..n {
            let mut s = [ZERO; 4];
            for k in 0..n {
                for l in 0..n {
                    let w = hinv(k, l);
                    s[0] += w * r.get(i, j, k, l);
                    s[1] += w * r.get(k, l, i, j);
                    s[2] += w * r.get(i, l, k, j);
                    s[3] += w * r.get(k, j, i, l);
                }
            }
            for (m, v) in ric.iter_mut().zip(s) {
                m[(i, j)] = v;
            }
        }
    }
    let mut s1 = ZERO;
    let mut s2 = ZERO;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = r.get(i, j, k, l);
                    s1 += hinv(i, j) * hinv(k, l) * v;
                    s2 += hinv(i, l) * hinv(k, j) * v;
                }
            }
        }
    }
    let [ric1, ric2, ric3, ric4] = ric;
    RicciPack {
        ric1,
        ric2,
        ric3,
        ric4,
        s1,
        s2,
        sc: None,
        sc2: None,
    }
}

/// Ricci pack of `Θ` with the Chern scalar curvatures filled in.
pub fn chern_ricci(cd: &ChernData) -> RicciPack {
    let mut p = ricci_with_inverse(&chern_curvature(cd), cd.inverse_matrix());
    p.sc = Some(p.s1.re);
    p.sc2 = Some(p.s2.re);
    p
}

/// Ricci pack of any `(1,1)`-curvature at the metric of `cd`.
pub fn ricci(cd: &ChernData, r: &Curvature11) -> RicciPack {
    ricci_with_inverse(r, cd.inverse_matrix())
}

/// `h^{i j̄} A_{i j̄}`.
pub fn trace_h(cd: &ChernData, a: &CMat) -> C64 {
    let n = cd.dim();
    let mut s = ZERO;
    for i in 0..n {
        for j in 0..n {
            s += cd.hinv(i, j) * a[(i, j)];
        }
    }
    s
}

/// First Ricci curvature of `Γ + θ` from the trace formula
/// `Θ^(1) − ∂_i conj(θ₁_j) − ∂_{j̄} θ₁_i` with `θ₁_i = θ_{ik}^k`.
pub fn first_ricci_theta_formula(cd: &ChernData, theta: &ThetaJet) -> CMat {
    let n = cd.dim();
    let base = chern_ricci(cd).ric1;
    let dbar_tr: Vec<Vec<C64>> = theta.dbar.iter().map(trace1).collect();
    CMat::from_fn(n, n, |i, j| {
        base[(i, j)] - dbar_tr[i][j].conj() - dbar_tr[j][i]
    })
}

/// `max |∂_{j̄}T_{ik}^l + Θ_{i j̄ k}^l − Θ_{k j̄ i}^l|`.
pub fn torsion_derivative_identity_residual(cd: &ChernData) -> f64 {
    let n = cd.dim();
    let theta = raise(&chern_curvature(cd).0, cd);
    let t = cd.torsion();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let r = t.dbar(j, i, k, l) + theta.get(i, j, k, l) - theta.get(k, j, i, l);
                    worst = worst.max(r.norm());
                }
            }
        }
    }
    worst
}
