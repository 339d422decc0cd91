//! Pointwise Hodge-type quantities of the fundamental form `ω`.
//!
//! One-forms are stored as coefficient vectors (`dz^i` or `dz̄^i`), and
//! `(1,1)`-forms as coefficient matrices of `√−1 dz^i ∧ dz̄^j` with the
//! `√−1` left implicit, as in the curvature module.

use serde::Serialize;

use crate::connections::ChernData;
use crate::curvature::{ser_mat, trace_h};
use crate::tensor::{CMat, C64, I, ZERO};

/// Global sign `σ` in `∂̄*ω = σ·√−1·τ_i dz^i`.
pub const ADJOINT_SIGN: f64 = 1.0;
/// `|T|² = c_T·h^{i ā}h^{j b̄}h_{k c̄}T_{ij}^k conj(T_{ab}^c)`.
pub const NORM_T: f64 = 1.0;
/// `|∂ω|² = c·h^{i ā}h^{j b̄}h_{k c̄}T_{ij}^k conj(T_{ab}^c)`.
pub const NORM_DEL_OMEGA: f64 = 0.5;
/// `|∂*ω|² = c·h^{i j̄}τ_i conj(τ_j)`.
pub const NORM_DEL_STAR_OMEGA: f64 = 1.0;
/// Scale of the `√−1Λ∂∂̄ω` coefficient relative to the raw contraction.
pub const LAMBDA_DDBAR_SCALE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormPack {
    #[serde(serialize_with = "ser_vec")]
    pub tau: Vec<C64>,
    /// `(0,1)`-form coefficients of `∂*ω`.
    #[serde(serialize_with = "ser_vec")]
    pub del_star_omega: Vec<C64>,
    /// `(1,0)`-form coefficients of `∂̄*ω`.
    #[serde(serialize_with = "ser_vec")]
    pub dbar_star_omega: Vec<C64>,
    #[serde(serialize_with = "ser_mat")]
    pub dd_star: CMat,
    #[serde(serialize_with = "ser_mat")]
    pub dbardbar_star: CMat,
    #[serde(serialize_with = "ser_mat")]
    pub lam_ddbar: CMat,
    /// `√−1∂*∂̄*ω` (real part; the imaginary part is round-off).
    pub scal_ddbar: f64,
    pub norm_t2: f64,
    pub norm_del_omega2: f64,
    pub norm_del_star2: f64,
    #[serde(serialize_with = "ser_mat")]
    pub boxdot: CMat,
}

fn ser_vec<S: serde::Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let pairs: Vec<[f64; 2]> = v.iter().map(|c| [c.re, c.im]).collect();
    pairs.serialize(s)
}

/// First-order entries: `τ`, `∂*ω`, `∂̄*ω`.
pub fn adjoint_forms(cd: &ChernData) -> (Vec<C64>, Vec<C64>, Vec<C64>) {
    let tau = cd.torsion().trace();
    let sigma = C64::new(ADJOINT_SIGN, 0.0);
    let dbar_star = tau.iter().map(|t| sigma * I * t).collect();
    let del_star = tau.iter().map(|t| -sigma * I * t.conj()).collect();
    (tau, del_star, dbar_star)
}

/// `∂∂*ω` and `∂̄∂̄*ω` coefficient matrices.
pub fn second_adjoint_forms(cd: &ChernData) -> (CMat, CMat) {
    let n = cd.dim();
    // dtau[m][i] = ∂τ_i/∂z̄^m
    let dtau = cd.torsion().trace_dbar();
    let s = ADJOINT_SIGN;
    let dd = CMat::from_fn(n, n, |i, j| -dtau[i][j].conj() * s);
    let dbdb = CMat::from_fn(n, n, |i, j| -dtau[j][i] * s);
    (dd, dbdb)
}

/// `√−1Λ∂∂̄ω` from the mixed second derivatives of `h`.
pub fn lambda_ddbar(cd: &ChernData) -> CMat {
    let n = cd.dim();
    let jet = cd.jet();
    CMat::from_fn(n, n, |i, j| {
        let mut s = ZERO;
        for k in 0..n {
            for l in 0..n {
                s += cd.hinv(k, l)
                    * (jet.mixed(k, l, i, j) - jet.mixed(i, l, k, j) - jet.mixed(k, j, i, l)
                        + jet.mixed(i, j, k, l));
            }
        }
        s * LAMBDA_DDBAR_SCALE
    })
}

/// `√−1∂*∂̄*ω = h^{j ī}∂_{ī}τ_j + |τ|²` as a complex number.
pub fn scal_ddbar_complex(cd: &ChernData) -> C64 {
    let n = cd.dim();
    let tau = cd.torsion().trace();
    let dtau = cd.torsion().trace_dbar();
    let mut s = ZERO;
    for i in 0..n {
        for j in 0..n {
            s += cd.hinv(j, i) * dtau[i][j] + cd.hinv(i, j) * tau[i] * tau[j].conj();
        }
    }
    s
}

/// `h^{i ā}h^{j b̄}h_{k c̄}T_{ij}^k conj(T_{ab}^c)` (unnormalized).
fn torsion_square(cd: &ChernData) -> f64 {
    let n = cd.dim();
    let t = cd.torsion();
    let mut s = ZERO;
    for i in 0..n {
        for a in 0..n {
            for j in 0..n {
                for b in 0..n {
                    let w = cd.hinv(i, a) * cd.hinv(j, b);
                    for k in 0..n {
                        for c in 0..n {
                            s += w * cd.h(k, c) * t.get(i, j, k) * t.get(a, b, c).conj();
                        }
                    }
                }
            }
        }
    }
    s.re
}

/// `(|T|², |∂ω|², |∂*ω|², T⊡T̄)`.
pub fn torsion_norms(cd: &ChernData) -> (f64, f64, f64, CMat) {
    let n = cd.dim();
    let t = cd.torsion();
    let raw = torsion_square(cd);
    let tau = t.trace();
    let mut tau2 = ZERO;
    for i in 0..n {
        for j in 0..n {
            tau2 += cd.hinv(i, j) * tau[i] * tau[j].conj();
        }
    }
    let boxdot = CMat::from_fn(n, n, |i, j| {
        let mut s = ZERO;
        for p in 0..n {
            for q in 0..n {
                let w = cd.hinv(p, q);
                for k in 0..n {
                    for l in 0..n {
                        s += w * cd.h(k, l) * t.get(i, p, k) * t.get(j, q, l).conj();
                    }
                }
            }
        }
        s
    });
    (
        NORM_T * raw,
        NORM_DEL_OMEGA * raw,
        NORM_DEL_STAR_OMEGA * tau2.re,
        boxdot,
    )
}

pub fn form_pack(cd: &ChernData) -> FormPack {
    let (tau, del_star_omega, dbar_star_omega) = adjoint_forms(cd);
    let (dd_star, dbardbar_star) = second_adjoint_forms(cd);
    let (norm_t2, norm_del_omega2, norm_del_star2, boxdot) = torsion_norms(cd);
    FormPack {
        tau,
        del_star_omega,
        dbar_star_omega,
        dd_star,
        dbardbar_star,
        lam_ddbar: lambda_ddbar(cd),
        scal_ddbar: scal_ddbar_complex(cd).re,
        norm_t2,
        norm_del_omega2,
        norm_del_star2,
        boxdot,
    }
}

/// Pointwise inner product `⟨α, ω⟩ = h^{i j̄}α_{i j̄}`.
pub fn inner_with_omega(cd: &ChernData, alpha: &CMat) -> C64 {
    trace_h(cd, alpha)
}

/// Residual of `∂̄*_f ω_f − ∂̄*ω = (n−1)√−1∂f`, given `∂f` at the point.
pub fn conformal_shift_residual(base: &FormPack, shifted: &FormPack, df: &[C64]) -> f64 {
    let n = df.len() as f64;
    base.dbar_star_omega
        .iter()
        .zip(&shifted.dbar_star_omega)
        .zip(df)
        .map(|((b, s), d)| (s - b - I * d * (n - 1.0)).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{chern_ricci, gauduchon_curvature, ricci};
    use crate::sampling::random_jet;
    use crate::tensor::{mat_max_abs, mat_max_diff};

    fn cd(seed: u64) -> ChernData {
        ChernData::new(&random_jet(3, seed, 0.4)).unwrap()
    }

    #[test]
    fn duality_of_second_order_forms() {
        let p = form_pack(&cd(1));
        assert!(mat_max_diff(&p.dd_star, &p.dbardbar_star.adjoint()) < 1e-12);
        for (a, b) in p.del_star_omega.iter().zip(&p.dbar_star_omega) {
            assert!((a - b.conj()).norm() < 1e-15);
        }
        assert!(p.norm_t2 >= 0.0 && p.norm_del_star2 >= 0.0);
    }

    #[test]
    fn chern_ricci_relations() {
        for seed in 2..5 {
            let c = cd(seed);
            let p = form_pack(&c);
            let r = chern_ricci(&c);
            assert!(mat_max_diff(&r.ric3, &(&r.ric1 - &p.dd_star)) < 1e-10);
            assert!(mat_max_diff(&r.ric4, &(&r.ric1 - &p.dbardbar_star)) < 1e-10);
            let rhs = &r.ric1 - &p.lam_ddbar - (&p.dd_star + &p.dbardbar_star) + &p.boxdot;
            assert!(mat_max_diff(&r.ric2, &rhs) < 1e-10);
        }
    }

    #[test]
    fn gauduchon_ricci_and_scalars() {
        let c = cd(6);
        let p = form_pack(&c);
        let r0 = chern_ricci(&c);
        let sc = r0.sc.unwrap();
        let dd_w = inner_with_omega(&c, &p.dd_star);
        for t in [0.25, 0.5, 1.0, -0.7] {
            let r = ricci(&c, &gauduchon_curvature(&c, t));
            let want = &r0.ric1 - (&p.dd_star + &p.dbardbar_star) * C64::new(t, 0.0);
            assert!(mat_max_diff(&r.ric1, &want) < 1e-10);
            let s1 = C64::new(sc, 0.0) - dd_w * (2.0 * t);
            assert!((r.s1 - s1).norm() < 1e-9);
            let s2 = C64::new(sc, 0.0)
                - dd_w * (1.0 - 2.0 * t)
                - t * t * (2.0 * p.norm_del_omega2 + p.norm_del_star2);
            assert!((r.s2 - s2).norm() < 1e-9, "{} vs {}", r.s2, s2);
        }
    }

    #[test]
    fn adjoint_pairing_pointwise() {
        let c = cd(7);
        let p = form_pack(&c);
        let lhs = inner_with_omega(&c, &p.dbardbar_star);
        let rhs = p.norm_del_star2 - p.scal_ddbar;
        assert!((lhs - rhs).norm() < 1e-10);
        assert!(scal_ddbar_complex(&c).im.abs() < 1e-12);
    }

    #[test]
    fn kahler_point_has_no_forms() {
        let jet = crate::metric::MetricJet2::constant(
            crate::metric::ChartPoint::real(&[0.1, 0.2]).unwrap(),
            crate::metric::HermitianForm::identity(2),
        )
        .unwrap();
        let p = form_pack(&ChernData::new(&jet).unwrap());
        assert_eq!(mat_max_abs(&p.dd_star), 0.0);
        assert_eq!(p.norm_t2, 0.0);
    }
}
