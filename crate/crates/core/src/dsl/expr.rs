use std::fmt;

use crate::error::{Error, Result};
use crate::metric::ChartPoint;
use crate::tensor::C64;

/// Expression tree in the chart variables `z_k` and `zbar_k`.
///
/// Variable indices are 0-based internally and 1-based in source text.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(C64),
    Var {
        index: usize,
        conj: bool,
    },
    /// `Σ_k z_k zbar_k`.
    Abs2,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, i32),
    Log(Box<Expr>),
    Exp(Box<Expr>),
    Conj(Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Holo,
    Anti,
}

impl Direction {
    fn flip(self) -> Self {
        match self {
            Direction::Holo => Direction::Anti,
            Direction::Anti => Direction::Holo,
        }
    }
}

impl Expr {
    pub fn real(x: f64) -> Self {
        Expr::Lit(C64::new(x, 0.0))
    }

    pub fn z(index: usize) -> Self {
        Expr::Var { index, conj: false }
    }

    pub fn zbar(index: usize) -> Self {
        Expr::Var { index, conj: true }
    }

    fn is_lit(&self, v: f64) -> bool {
        matches!(self, Expr::Lit(c) if c.re == v && c.im == 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.is_lit(0.0)
    }

    /// Largest variable index plus one (0 for variable-free trees).
    pub fn arity(&self) -> usize {
        match self {
            Expr::Lit(_) | Expr::Abs2 => 0,
            Expr::Var { index, .. } => index + 1,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.arity().max(b.arity())
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Log(a) | Expr::Exp(a) | Expr::Conj(a) => {
                a.arity()
            }
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Expr::Lit(_) | Expr::Abs2 | Expr::Var { .. } => 1,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.size() + b.size()
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Log(a) | Expr::Exp(a) | Expr::Conj(a) => {
                1 + a.size()
            }
        }
    }
}

// Pruning constructors used by the differentiator.

fn add(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        b
    } else if b.is_zero() {
        a
    } else {
        Expr::Add(Box::new(a), Box::new(b))
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    if b.is_zero() {
        a
    } else if a.is_zero() {
        neg(b)
    } else {
        Expr::Sub(Box::new(a), Box::new(b))
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if a.is_zero() || b.is_zero() {
        Expr::real(0.0)
    } else if a.is_lit(1.0) {
        b
    } else if b.is_lit(1.0) {
        a
    } else {
        Expr::Mul(Box::new(a), Box::new(b))
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        Expr::real(0.0)
    } else if b.is_lit(1.0) {
        a
    } else {
        Expr::Div(Box::new(a), Box::new(b))
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Lit(c) => Expr::Lit(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn pow(a: Expr, p: i32) -> Expr {
    match p {
        0 => Expr::real(1.0),
        1 => a,
        _ => Expr::Pow(Box::new(a), p),
    }
}

fn conj(a: Expr) -> Expr {
    match a {
        Expr::Lit(c) => Expr::Lit(c.conj()),
        Expr::Var { index, conj } => Expr::Var { index, conj: !conj },
        Expr::Abs2 => Expr::Abs2,
        Expr::Conj(inner) => *inner,
        other => Expr::Conj(Box::new(other)),
    }
}

/// Wirtinger derivative `∂e/∂z_k` (`Holo`) or `∂e/∂zbar_k` (`Anti`),
/// with `k` 0-based.
pub fn wirtinger_diff(e: &Expr, k: usize, dir: Direction) -> Expr {
    match e {
        Expr::Lit(_) => Expr::real(0.0),
        Expr::Var { index, conj } => {
            let hit = *index == k && *conj == (dir == Direction::Anti);
            Expr::real(if hit { 1.0 } else { 0.0 })
        }
        Expr::Abs2 => match dir {
            Direction::Holo => Expr::zbar(k),
            Direction::Anti => Expr::z(k),
        },
        Expr::Add(a, b) => add(wirtinger_diff(a, k, dir), wirtinger_diff(b, k, dir)),
        Expr::Sub(a, b) => sub(wirtinger_diff(a, k, dir), wirtinger_diff(b, k, dir)),
        Expr::Mul(a, b) => add(
            mul(wirtinger_diff(a, k, dir), (**b).clone()),
            mul((**a).clone(), wirtinger_diff(b, k, dir)),
        ),
        Expr::Div(a, b) => {
            let da = wirtinger_diff(a, k, dir);
            let db = wirtinger_diff(b, k, dir);
            if db.is_zero() {
                div(da, (**b).clone())
            } else {
                div(
                    sub(mul(da, (**b).clone()), mul((**a).clone(), db)),
                    pow((**b).clone(), 2),
                )
            }
        }
        Expr::Neg(a) => neg(wirtinger_diff(a, k, dir)),
        Expr::Pow(a, p) => {
            let da = wirtinger_diff(a, k, dir);
            if *p == 0 || da.is_zero() {
                return Expr::real(0.0);
            }
            mul(mul(Expr::real(*p as f64), pow((**a).clone(), p - 1)), da)
        }
        Expr::Log(a) => div(wirtinger_diff(a, k, dir), (**a).clone()),
        Expr::Exp(a) => mul(e.clone(), wirtinger_diff(a, k, dir)),
        Expr::Conj(a) => conj(wirtinger_diff(a, k, dir.flip())),
    }
}

/// Relative tolerance deciding whether a `log` argument is real.
const LOG_IMAG_TOL: f64 = 1e-12;

/// Evaluates `e` at `z` in double-precision complex arithmetic.
pub fn evaluate(e: &Expr, z: &ChartPoint) -> Result<C64> {
    eval_slice(e, z.coords())
}

pub(crate) fn eval_slice(e: &Expr, z: &[C64]) -> Result<C64> {
    Ok(match e {
        Expr::Lit(c) => *c,
        Expr::Var { index, conj } => {
            let v = *z.get(*index).ok_or(Error::IndexOutOfRange {
                index: index + 1,
                dim: z.len(),
            })?;
            if *conj {
                v.conj()
            } else {
                v
            }
        }
        Expr::Abs2 => C64::new(z.iter().map(|c| c.norm_sqr()).sum(), 0.0),
        Expr::Add(a, b) => eval_slice(a, z)? + eval_slice(b, z)?,
        Expr::Sub(a, b) => eval_slice(a, z)? - eval_slice(b, z)?,
        Expr::Mul(a, b) => eval_slice(a, z)? * eval_slice(b, z)?,
        Expr::Div(a, b) => {
            let d = eval_slice(b, z)?;
            if d.re == 0.0 && d.im == 0.0 {
                return Err(Error::DivisionByZero);
            }
            eval_slice(a, z)? / d
        }
        Expr::Neg(a) => -eval_slice(a, z)?,
        Expr::Pow(a, p) => {
            let b = eval_slice(a, z)?;
            if *p < 0 && b.re == 0.0 && b.im == 0.0 {
                return Err(Error::DivisionByZero);
            }
            b.powi(*p)
        }
        Expr::Log(a) => {
            let v = eval_slice(a, z)?;
            if !(v.re > 0.0) || v.im.abs() > LOG_IMAG_TOL * v.re.abs().max(1.0) {
                return Err(Error::LogDomain(format!("{v}")));
            }
            C64::new(v.re.ln(), 0.0)
        }
        Expr::Exp(a) => eval_slice(a, z)?.exp(),
        Expr::Conj(a) => eval_slice(a, z)?.conj(),
    })
}

fn fmt_real(x: f64) -> String {
    format!("{x}")
}

impl fmt::Display for Expr {
    /// Fully parenthesized source text that reparses to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(c) => {
                if c.im == 0.0 {
                    if c.re.is_sign_negative() {
                        write!(f, "(-{})", fmt_real(-c.re))
                    } else {
                        write!(f, "{}", fmt_real(c.re))
                    }
                } else {
                    let re = if c.re.is_sign_negative() {
                        format!("-{}", fmt_real(-c.re))
                    } else {
                        fmt_real(c.re)
                    };
                    let (op, im) = if c.im.is_sign_negative() {
                        ('-', -c.im)
                    } else {
                        ('+', c.im)
                    };
                    write!(f, "({re}{op}{}i)", fmt_real(im))
                }
            }
            Expr::Var { index, conj } => {
                if *conj {
                    write!(f, "conj(z{})", index + 1)
                } else {
                    write!(f, "z{}", index + 1)
                }
            }
            Expr::Abs2 => write!(f, "abs2(z)"),
            Expr::Add(a, b) => write!(f, "({a}+{b})"),
            Expr::Sub(a, b) => write!(f, "({a}-{b})"),
            Expr::Mul(a, b) => write!(f, "({a}*{b})"),
            Expr::Div(a, b) => write!(f, "({a}/{b})"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Pow(a, p) => {
                if *p < 0 {
                    write!(f, "({a}^(-{}))", -(*p as i64))
                } else {
                    write!(f, "({a}^{p})")
                }
            }
            Expr::Log(a) => write!(f, "log({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Conj(a) => write!(f, "conj({a})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::ZERO;

    fn pt(v: &[(f64, f64)]) -> ChartPoint {
        ChartPoint::new(v.iter().map(|&(a, b)| C64::new(a, b)).collect()).unwrap()
    }

    #[test]
    fn abs2_derivative_is_zbar() {
        assert_eq!(
            wirtinger_diff(&Expr::Abs2, 1, Direction::Holo),
            Expr::zbar(1)
        );
        assert_eq!(wirtinger_diff(&Expr::Abs2, 0, Direction::Anti), Expr::z(0));
    }

    #[test]
    fn hopf_quotient_rule() {
        let e = Expr::Div(Box::new(Expr::real(4.0)), Box::new(Expr::Abs2));
        let d = wirtinger_diff(&e, 0, Direction::Holo);
        let z = pt(&[(0.7, -0.2), (0.1, 0.9)]);
        let s = z.norm_sqr();
        let want = -4.0 * z.coord(0).conj() / (s * s);
        assert!((evaluate(&d, &z).unwrap() - want).norm() < 1e-14);
    }

    #[test]
    fn division_and_log_errors() {
        let z = pt(&[(0.0, 0.0), (0.0, 0.0)]);
        let e = Expr::Div(Box::new(Expr::real(1.0)), Box::new(Expr::Abs2));
        assert_eq!(evaluate(&e, &z), Err(Error::DivisionByZero));
        let l = Expr::Log(Box::new(Expr::z(0)));
        let w = pt(&[(0.0, 1.0)]);
        assert!(matches!(evaluate(&l, &w), Err(Error::LogDomain(_))));
        let m = Expr::Log(Box::new(Expr::real(-1.0)));
        assert!(matches!(evaluate(&m, &w), Err(Error::LogDomain(_))));
    }

    #[test]
    fn out_of_range_variable() {
        let z = pt(&[(1.0, 0.0)]);
        assert!(matches!(
            evaluate(&Expr::z(3), &z),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn pruning_keeps_zero_small() {
        let d = wirtinger_diff(&Expr::zbar(0), 0, Direction::Holo);
        assert_eq!(d, Expr::Lit(ZERO));
    }
}
