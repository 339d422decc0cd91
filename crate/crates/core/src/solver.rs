//! Derivative-free recovery of explicit solutions: minimize Einstein-type
//! residuals over low-dimensional metric families.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::connections::ChernData;
use crate::curvature::{gauduchon_curvature, ricci};
use crate::error::{Error, Result};
use crate::metric::{ChartPoint, MetricField, MetricJet2};
use crate::models::RadialModel;
use crate::real::real_chern_ricci_form;
use crate::sampling::hopf_annulus;
use crate::tensor::{frobenius, C64, ZERO};

/// A metric family indexed by a real parameter vector.
pub trait ParametricFamily: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn parameter_names(&self) -> Vec<&'static str>;
    fn bounds(&self) -> Vec<(f64, f64)>;
    fn model(&self, p: &[f64]) -> Result<Arc<dyn MetricField>>;
}

/// `ω_λ = ω₀ + 4λ√−1∂∂̄log|z|²`, parameter `λ`.
#[derive(Debug, Clone)]
pub struct HopfFamily {
    pub n: usize,
}

impl ParametricFamily for HopfFamily {
    fn name(&self) -> &str {
        "hopf"
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn parameter_names(&self) -> Vec<&'static str> {
        vec!["lambda"]
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(-0.999, 4.0)]
    }

    fn model(&self, p: &[f64]) -> Result<Arc<dyn MetricField>> {
        Ok(Arc::new(RadialModel::hopf(self.n, p[0])?))
    }
}

/// `c·ω_FS`, parameter `c`.
#[derive(Debug, Clone)]
pub struct FubiniStudyScale {
    pub n: usize,
}

impl ParametricFamily for FubiniStudyScale {
    fn name(&self) -> &str {
        "fubini-study"
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn parameter_names(&self) -> Vec<&'static str> {
        vec!["scale"]
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.05, 20.0)]
    }

    fn model(&self, p: &[f64]) -> Result<Arc<dyn MetricField>> {
        Ok(Arc::new(RadialModel::fubini_study(self.n, p[0])?))
    }
}

pub fn family_by_name(name: &str, n: usize) -> Result<Arc<dyn ParametricFamily>> {
    match name {
        "hopf" => Ok(Arc::new(HopfFamily { n })),
        "fubini-study" => Ok(Arc::new(FubiniStudyScale { n })),
        _ => Err(Error::UnknownModel(name.to_string())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ObjectiveKind {
    /// `Ric^(1)(ω(p), t) = 0`.
    GauduchonFlat(f64),
    /// `Θ^(1) − ∂∂*ω = λω`; with `None`, `λ` is appended to the parameters.
    RealChernEinstein(Option<f64>),
}

#[derive(Clone)]
pub struct AnsatzProblem {
    pub family: Arc<dyn ParametricFamily>,
    pub objective: ObjectiveKind,
    pub samples: Vec<ChartPoint>,
    /// Per-sample weights; the aggregate is `max_i w_i·N·r_i`, so uniform
    /// weights give the plain maximum.
    pub weights: Vec<f64>,
    /// Box over the full parameter vector; `lo == hi` fixes a parameter.
    pub bounds: Vec<(f64, f64)>,
    pub tolerance: f64,
    pub max_iterations: usize,
}

/// Number of sample points in the default sample set.
pub const DEFAULT_SAMPLES: usize = 32;

impl AnsatzProblem {
    /// Default problem: 32 seeded points in `½ ≤ |z| ≤ 2`, family bounds,
    /// and `λ ∈ [−10, 10]` when it is free.
    pub fn new(family: Arc<dyn ParametricFamily>, objective: ObjectiveKind, seed: u64) -> Self {
        let samples = hopf_annulus(family.dim(), DEFAULT_SAMPLES, seed);
        let mut bounds = family.bounds();
        if objective == ObjectiveKind::RealChernEinstein(None) {
            bounds.push((-10.0, 10.0));
        }
        let w = 1.0 / samples.len() as f64;
        Self {
            family,
            objective,
            weights: vec![w; samples.len()],
            samples,
            bounds,
            tolerance: 1e-6,
            max_iterations: 500,
        }
    }

    pub fn fix_parameter(mut self, index: usize, value: f64) -> Self {
        self.bounds[index] = (value, value);
        self
    }

    pub fn parameter_names(&self) -> Vec<&'static str> {
        let mut names = self.family.parameter_names();
        if self.objective == ObjectiveKind::RealChernEinstein(None) {
            names.push("einstein_constant");
        }
        names
    }

    fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::Infeasible("empty sample set".into()));
        }
        if self.weights.len() != self.samples.len() {
            return Err(Error::DimensionMismatch {
                expected: self.samples.len(),
                got: self.weights.len(),
            });
        }
        if self.bounds.iter().any(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::Infeasible("empty parameter box".into()));
        }
        Ok(())
    }
}

fn pointwise_residual(jet: &MetricJet2, kind: ObjectiveKind, lambda: f64) -> Result<f64> {
    match kind {
        ObjectiveKind::GauduchonFlat(t) => {
            let cd = ChernData::new(jet)?;
            Ok(frobenius(&ricci(&cd, &gauduchon_curvature(&cd, t)).ric1))
        }
        ObjectiveKind::RealChernEinstein(_) => {
            let e = real_chern_ricci_form(jet)? - jet.h().matrix() * C64::new(lambda, 0.0);
            Ok(frobenius(&e))
        }
    }
}

/// Max over samples of the weighted pointwise Frobenius residual; `+∞`
/// when `p` is outside the family's positivity domain at any sample.
pub fn objective(prob: &AnsatzProblem, p: &[f64]) -> f64 {
    let k = prob.family.parameter_names().len();
    let lambda = match prob.objective {
        ObjectiveKind::RealChernEinstein(Some(l)) => l,
        ObjectiveKind::RealChernEinstein(None) => p[k],
        ObjectiveKind::GauduchonFlat(_) => 0.0,
    };
    let model = match prob.family.model(&p[..k]) {
        Ok(m) => m,
        Err(_) => return f64::INFINITY,
    };
    let count = prob.samples.len() as f64;
    prob.samples
        .par_iter()
        .zip(prob.weights.par_iter())
        .map(|(z, w)| {
            model
                .jet(z)
                .and_then(|j| pointwise_residual(&j, prob.objective, lambda))
                .map(|r| r * w * count)
                .unwrap_or(f64::INFINITY)
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub params: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub method: &'static str,
    pub params: Vec<f64>,
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search on `[a, b]` down to bracket width `xtol`.
pub fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    xtol: f64,
    max_iter: usize,
    trace: &mut Vec<TraceEntry>,
) -> (f64, f64, usize) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut it = 0;
    while (b - a).abs() > xtol && it < max_iter {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        it += 1;
        let (x, v) = if fc <= fd { (c, fc) } else { (d, fd) };
        trace.push(TraceEntry {
            iteration: it,
            params: vec![x],
            value: v,
        });
    }
    if fc <= fd {
        (c, fc, it)
    } else {
        (d, fd, it)
    }
}

/// Brent's method (golden section with parabolic interpolation) on `[a, b]`.
pub fn brent<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    xtol: f64,
    max_iter: usize,
) -> (f64, f64, usize) {
    const CGOLD: f64 = 1.0 - INV_PHI;
    let mut x = a + CGOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e): (f64, f64) = (0.0, 0.0);
    for it in 0..max_iter {
        let xm = 0.5 * (a + b);
        let tol1 = xtol * 0.5 + 1e-15 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            return (x, fx, it);
        }
        let mut golden = true;
        if e.abs() > tol1 && fx.is_finite() && fw.is_finite() && fv.is_finite() {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx, max_iter)
}

/// Compass search in a box, starting at the box center.
pub fn compass_search<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    bounds: &[(f64, f64)],
    xtol: f64,
    max_iter: usize,
    trace: &mut Vec<TraceEntry>,
) -> (Vec<f64>, f64, usize) {
    let dim = bounds.len();
    let mut x: Vec<f64> = bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
    let mut fx = f(&x);
    let mut step = bounds
        .iter()
        .map(|(lo, hi)| 0.25 * (hi - lo))
        .fold(0.0, f64::max);
    let mut it = 0;
    while step > xtol && it < max_iter {
        it += 1;
        let mut improved = false;
        'dirs: for k in 0..dim {
            let (lo, hi) = bounds[k];
            if lo == hi {
                continue;
            }
            for s in [step, -step] {
                let mut y = x.clone();
                y[k] = (y[k] + s).clamp(lo, hi);
                if y[k] == x[k] {
                    continue;
                }
                let fy = f(&y);
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                    break 'dirs;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
        trace.push(TraceEntry {
            iteration: it,
            params: x.clone(),
            value: fx,
        });
    }
    (x, fx, it)
}

/// Width below which the search stops; far below the reported tolerances.
const XTOL: f64 = 1e-11;

/// Minimizes the objective over the box. One free parameter uses golden
/// section, more use compass search.
pub fn solve(prob: &AnsatzProblem) -> Result<Solution> {
    prob.validate()?;
    let free: Vec<usize> = (0..prob.bounds.len())
        .filter(|&k| prob.bounds[k].0 < prob.bounds[k].1)
        .collect();
    let base: Vec<f64> = prob.bounds.iter().map(|(lo, _)| *lo).collect();
    let mut trace = Vec::new();
    let (params, residual, iterations, method) = match free.as_slice() {
        [] => {
            let v = objective(prob, &base);
            (base, v, 0, "fixed")
        }
        [k] => {
            let k = *k;
            let (lo, hi) = prob.bounds[k];
            let eval = |x: f64| {
                let mut p = base.clone();
                p[k] = x;
                objective(prob, &p)
            };
            let (x, v, it) = golden_section(eval, lo, hi, XTOL, prob.max_iterations, &mut trace);
            let mut p = base.clone();
            p[k] = x;
            (p, v, it, "golden-section")
        }
        _ => {
            let (p, v, it) = compass_search(
                |p| objective(prob, p),
                &prob.bounds,
                XTOL,
                prob.max_iterations,
                &mut trace,
            );
            (p, v, it, "compass")
        }
    };
    if !residual.is_finite() {
        return Err(Error::Infeasible(
            "objective is infinite throughout the search".into(),
        ));
    }
    Ok(Solution {
        method,
        params,
        residual,
        converged: residual <= prob.tolerance,
        iterations,
        trace,
    })
}

/// Least-squares `λ̂ = Re⟨Θ^(1) − ∂∂*ω, h⟩/⟨h, h⟩` at a point.
pub fn estimate_einstein_constant(jet: &MetricJet2) -> Result<f64> {
    let f = real_chern_ricci_form(jet)?;
    let h = jet.h().matrix();
    let mut num = ZERO;
    let mut den = 0.0;
    for (a, b) in f.iter().zip(h.iter()) {
        num += a * b.conj();
        den += b.norm_sqr();
    }
    Ok(num.re / den)
}
