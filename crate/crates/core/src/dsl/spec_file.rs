use crate::error::{Error, Result};
use crate::metric::{ChartPoint, HermitianForm, MetricField, MetricJet2};
use crate::tensor::{CMat, C64};

use super::expr::{eval_slice, wirtinger_diff, Direction, Expr};
use super::parser::parse_expr_at;

/// Parsed `.hmet` metric file. Only entries with `i ≤ j` are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpecFile {
    pub dim: usize,
    pub name: String,
    pub exclude: Option<Expr>,
    /// `upper[i][j - i]` holds `h[i][j]` for `j ≥ i` (0-based).
    upper: Vec<Vec<Expr>>,
}

impl MetricSpecFile {
    pub fn entry(&self, i: usize, j: usize) -> Option<&Expr> {
        if j >= i {
            self.upper.get(i).and_then(|r| r.get(j - i))
        } else {
            None
        }
    }

    /// Full entry `h[i][j]`, expressed as `conj(h[j][i])` below the diagonal.
    pub fn full_entry(&self, i: usize, j: usize) -> Expr {
        if j >= i {
            self.upper[i][j - i].clone()
        } else {
            Expr::Conj(Box::new(self.upper[j][i - j].clone()))
        }
    }
}

struct Line<'a> {
    no: usize,
    key: &'a str,
    value: &'a str,
    value_col: usize,
}

fn split_lines(text: &str) -> Result<Vec<Line<'_>>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let Some(eq) = body.find('=') else {
            return Err(Error::Syntax {
                line: no,
                column: 1,
                message: "expected `key = value`".into(),
            });
        };
        let value = &body[eq + 1..];
        let lead = value.len() - value.trim_start().len();
        out.push(Line {
            no,
            key: body[..eq].trim(),
            value: value.trim(),
            value_col: body[..eq + 1 + lead].chars().count() + 1,
        });
    }
    Ok(out)
}

fn parse_entry_key(key: &str) -> Option<(usize, usize)> {
    let rest = key.strip_prefix("h[")?;
    let (i, rest) = rest.split_once("][")?;
    let j = rest.strip_suffix(']')?;
    Some((i.trim().parse().ok()?, j.trim().parse().ok()?))
}

/// Parses a metric file:
///
/// ```text
/// dim = 2
/// name = hopf
/// exclude = abs2(z)
/// h[1][1] = 4/abs2(z)
/// h[2][2] = 4/abs2(z)
/// ```
pub fn parse(text: &str) -> Result<MetricSpecFile> {
    let lines = split_lines(text)?;
    let mut dim = None;
    let mut name = String::from("dsl");
    for l in &lines {
        match l.key {
            "dim" => {
                let n: usize = l.value.parse().map_err(|_| Error::Syntax {
                    line: l.no,
                    column: l.value_col,
                    message: format!("dimension must be an integer, got `{}`", l.value),
                })?;
                crate::metric::check_dim(n)?;
                dim = Some(n);
            }
            "name" => name = l.value.to_string(),
            _ => {}
        }
    }
    let dim = dim.ok_or_else(|| Error::SpecFile("missing `dim = n` header".into()))?;
    let mut exclude = None;
    let mut slots: Vec<Vec<Option<Expr>>> = (0..dim).map(|i| vec![None; dim - i]).collect();
    for l in &lines {
        match l.key {
            "dim" | "name" => {}
            "exclude" => exclude = Some(parse_expr_at(l.value, dim, l.no, l.value_col)?),
            key => {
                let Some((i, j)) = parse_entry_key(key) else {
                    return Err(Error::UnknownIdentifier {
                        name: key.to_string(),
                        line: l.no,
                        column: 1,
                    });
                };
                for k in [i, j] {
                    if k == 0 || k > dim {
                        return Err(Error::IndexOutOfRange { index: k, dim });
                    }
                }
                if i > j {
                    return Err(Error::SpecFile(format!(
                        "line {}: h[{i}][{j}] lies below the diagonal; it is conj(h[{j}][{i}])",
                        l.no
                    )));
                }
                let slot = &mut slots[i - 1][j - i];
                if slot.is_some() {
                    return Err(Error::SpecFile(format!(
                        "line {}: duplicate h[{i}][{j}]",
                        l.no
                    )));
                }
                *slot = Some(parse_expr_at(l.value, dim, l.no, l.value_col)?);
            }
        }
    }
    let mut upper = Vec::with_capacity(dim);
    for (i, row) in slots.into_iter().enumerate() {
        let mut r = Vec::with_capacity(row.len());
        for (off, e) in row.into_iter().enumerate() {
            match e {
                Some(e) => r.push(e),
                None if off == 0 => {
                    return Err(Error::SpecFile(format!(
                        "missing diagonal entry h[{0}][{0}]",
                        i + 1
                    )))
                }
                None => r.push(Expr::real(0.0)),
            }
        }
        upper.push(r);
    }
    Ok(MetricSpecFile {
        dim,
        name,
        exclude,
        upper,
    })
}

/// Parses a scalar function file: either a bare expression or `f = <expr>`
/// (comments and blank lines allowed).
pub fn parse_scalar(text: &str, dim: usize) -> Result<Expr> {
    let mut found = None;
    for (idx, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let (src, col) = match body.split_once('=') {
            Some((k, v)) if k.trim() == "f" => {
                let lead = v.len() - v.trim_start().len();
                (v.trim(), k.chars().count() + 2 + lead)
            }
            Some((k, _)) if k.trim() == "dim" => continue,
            _ => {
                let lead = body.len() - body.trim_start().len();
                (body.trim(), lead + 1)
            }
        };
        if found.is_some() {
            return Err(Error::SpecFile(format!(
                "line {}: more than one expression",
                idx + 1
            )));
        }
        found = Some(parse_expr_at(src, dim, idx + 1, col)?);
    }
    found.ok_or_else(|| Error::SpecFile("no expression found".into()))
}

/// Value and first/second Wirtinger derivatives of a scalar at a point.
#[derive(Debug, Clone)]
pub struct ScalarJet {
    pub value: C64,
    /// `∂/∂z_m`
    pub d: Vec<C64>,
    /// `∂/∂zbar_m`
    pub dbar: Vec<C64>,
    /// `[i*n + j]` = `∂²/∂z_i∂zbar_j`
    pub mixed: Vec<C64>,
    /// `[i*n + j]` = `∂²/∂z_i∂z_j`
    pub holo: Vec<C64>,
}

/// An expression together with its symbolic derivatives up to order two.
#[derive(Debug, Clone)]
pub struct CompiledScalar {
    n: usize,
    e: Expr,
    d: Vec<Expr>,
    dbar: Vec<Expr>,
    mixed: Vec<Expr>,
    holo: Vec<Expr>,
}

impl CompiledScalar {
    pub fn new(e: Expr, n: usize) -> Result<Self> {
        if e.arity() > n {
            return Err(Error::IndexOutOfRange {
                index: e.arity(),
                dim: n,
            });
        }
        let d: Vec<Expr> = (0..n)
            .map(|m| wirtinger_diff(&e, m, Direction::Holo))
            .collect();
        let dbar: Vec<Expr> = (0..n)
            .map(|m| wirtinger_diff(&e, m, Direction::Anti))
            .collect();
        let mut mixed = Vec::with_capacity(n * n);
        let mut holo = vec![Expr::real(0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                mixed.push(wirtinger_diff(&d[i], j, Direction::Anti));
            }
            for j in i..n {
                let h = wirtinger_diff(&d[i], j, Direction::Holo);
                holo[j * n + i] = h.clone();
                holo[i * n + j] = h;
            }
        }
        Ok(Self {
            n,
            e,
            d,
            dbar,
            mixed,
            holo,
        })
    }

    pub fn expr(&self) -> &Expr {
        &self.e
    }

    pub fn value(&self, z: &[C64]) -> Result<C64> {
        eval_slice(&self.e, z)
    }

    pub fn jet(&self, z: &[C64]) -> Result<ScalarJet> {
        let ev = |v: &[Expr]| {
            v.iter()
                .map(|e| eval_slice(e, z))
                .collect::<Result<Vec<_>>>()
        };
        debug_assert_eq!(z.len(), self.n);
        Ok(ScalarJet {
            value: eval_slice(&self.e, z)?,
            d: ev(&self.d)?,
            dbar: ev(&self.dbar)?,
            mixed: ev(&self.mixed)?,
            holo: ev(&self.holo)?,
        })
    }
}

/// Metric field defined by a [`MetricSpecFile`], with jets obtained by
/// symbolic differentiation.
#[derive(Debug, Clone)]
pub struct DslMetric {
    spec: MetricSpecFile,
    entries: Vec<CompiledScalar>,
}

impl DslMetric {
    pub fn new(spec: MetricSpecFile) -> Result<Self> {
        let n = spec.dim;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(CompiledScalar::new(spec.full_entry(i, j), n)?);
            }
        }
        Ok(Self { spec, entries })
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::new(parse(text)?)
    }

    pub fn spec(&self) -> &MetricSpecFile {
        &self.spec
    }

    fn check_point(&self, z: &ChartPoint) -> Result<()> {
        if z.dim() != self.spec.dim {
            return Err(Error::DimensionMismatch {
                expected: self.spec.dim,
                got: z.dim(),
            });
        }
        if !self.admissible(z) {
            return Err(Error::SingularLocus(self.spec.name.clone()));
        }
        Ok(())
    }
}

impl MetricField for DslMetric {
    fn name(&self) -> &str {
        &self.spec.name
    }

    fn dim(&self) -> usize {
        self.spec.dim
    }

    fn admissible(&self, z: &ChartPoint) -> bool {
        match &self.spec.exclude {
            None => true,
            Some(e) => {
                matches!(eval_slice(e, z.coords()), Ok(v) if v.norm() != 0.0 && v.norm().is_finite())
            }
        }
    }

    fn metric(&self, z: &ChartPoint) -> Result<CMat> {
        self.check_point(z)?;
        let n = self.spec.dim;
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.entries[i * n + j].value(z.coords())?;
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
            let d = m[(i, i)];
            if d.im.abs() > 1e-10 * d.re.abs().max(1.0) {
                return Err(Error::NotHermitian(d.im.abs()));
            }
            m[(i, i)] = C64::new(d.re, 0.0);
        }
        Ok(m)
    }

    fn jet(&self, z: &ChartPoint) -> Result<MetricJet2> {
        let h = HermitianForm::new(self.metric(z)?)?;
        let n = self.spec.dim;
        let jets: Vec<ScalarJet> = self
            .entries
            .iter()
            .map(|c| c.jet(z.coords()))
            .collect::<Result<_>>()?;
        let block = |f: &dyn Fn(&ScalarJet) -> C64| CMat::from_fn(n, n, |k, l| f(&jets[k * n + l]));
        let dh = (0..n).map(|m| block(&|s| s.d[m])).collect();
        let mut mixed = Vec::with_capacity(n * n);
        let mut holo = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                mixed.push(block(&|s| s.mixed[i * n + j]));
                holo.push(block(&|s| s.holo[i * n + j]));
            }
        }
        MetricJet2::new(z.clone(), h, dh, mixed, holo)
    }
}

/// Source text of the perturbed Hopf metric
/// `h = 4[(1+λ)δ/|z|² − λ z̄_i z_j/|z|⁴]` for the DSL.
pub fn hopf_source(n: usize, lambda: f64) -> String {
    let mut s = format!("dim = {n}\nname = hopf-dsl\nexclude = abs2(z)\n");
    let a = 4.0 * (1.0 + lambda);
    let b = 4.0 * lambda;
    for i in 1..=n {
        for j in i..=n {
            let diag = if i == j {
                format!("{a}/abs2(z) - ")
            } else {
                "-".to_string()
            };
            s.push_str(&format!(
                "h[{i}][{j}] = {diag}{b}*conj(z{i})*z{j}/abs2(z)^2\n"
            ));
        }
    }
    s
}
