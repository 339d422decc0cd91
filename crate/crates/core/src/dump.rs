//! Serialization of curvature tensors at one point.

use serde::Serialize;

use crate::connections::{theta_of, ChernData, ConnectionSpec};
use crate::curvature::{
    chern_curvature, gauduchon_curvature, ricci, theta_curvature, Curvature11, RicciPack,
};
use crate::error::{Error, Result};
use crate::hodge::{form_pack, FormPack};
use crate::metric::{ChartPoint, MetricField};
use crate::tensor::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumpFormat {
    Json,
    Csv,
}

impl std::str::FromStr for DumpFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(DumpFormat::Json),
            "csv" => Ok(DumpFormat::Csv),
            _ => Err(Error::ParameterDomain(format!(
                "format json|csv, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConnectionDump {
    pub connection: String,
    /// `R_{i j̄ k l̄}` as `[i][j][k][l] = [re, im]`.
    pub curvature: Vec<Vec<Vec<Vec<[f64; 2]>>>>,
    pub ricci: RicciPack,
}

#[derive(Debug, Clone, Serialize)]
pub struct TensorDump {
    pub model: String,
    pub point: Vec<[f64; 2]>,
    pub connections: Vec<ConnectionDump>,
    pub forms: FormPack,
}

/// `(1,1)`-curvature of a connection, by the cheapest available route.
pub fn curvature_for(cd: &ChernData, spec: &ConnectionSpec) -> Result<Curvature11> {
    Ok(match spec {
        ConnectionSpec::Chern => chern_curvature(cd),
        ConnectionSpec::Gauduchon(t) => gauduchon_curvature(cd, *t),
        ConnectionSpec::LambdaMu(..) => {
            // rejects members outside the Hermitian family
            theta_of(spec, cd)?;
            gauduchon_curvature(cd, spec.gauduchon_parameter().unwrap_or(0.0))
        }
        _ => theta_curvature(cd, &theta_of(spec, cd)?).0,
    })
}

fn nested(r: &Curvature11) -> Vec<Vec<Vec<Vec<[f64; 2]>>>> {
    let n = r.dim();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n)
                        .map(|k| {
                            (0..n)
                                .map(|l| {
                                    let v = r.get(i, j, k, l);
                                    [v.re, v.im]
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Curvature, Ricci traces and Hodge-type forms of `model` at `z`.
pub fn tensor_dump(
    model: &dyn MetricField,
    z: &ChartPoint,
    specs: &[ConnectionSpec],
) -> Result<TensorDump> {
    if !model.admissible(z) {
        return Err(Error::SingularLocus(model.name().to_string()));
    }
    let cd = ChernData::new(&model.jet(z)?)?;
    let connections = specs
        .iter()
        .map(|spec| {
            let r = curvature_for(&cd, spec)?;
            Ok(ConnectionDump {
                connection: spec.to_string(),
                curvature: nested(&r),
                ricci: ricci(&cd, &r),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TensorDump {
        model: model.name().to_string(),
        point: z.coords().iter().map(|c| [c.re, c.im]).collect(),
        connections,
        forms: form_pack(&cd),
    })
}

fn t_label(spec: &ConnectionSpec) -> String {
    match spec {
        ConnectionSpec::Gauduchon(_) | ConnectionSpec::Chern | ConnectionSpec::LambdaMu(..) => {
            format!("{}", spec.gauduchon_parameter().unwrap_or(0.0))
        }
        other => other.to_string(),
    }
}

/// `t,i,j,k,l,re,im` rows, 0-based indices, ordered by index tuple and then
/// by the order of `specs`.
pub fn curvature_csv(
    model: &dyn MetricField,
    z: &ChartPoint,
    specs: &[ConnectionSpec],
) -> Result<String> {
    if !model.admissible(z) {
        return Err(Error::SingularLocus(model.name().to_string()));
    }
    let cd = ChernData::new(&model.jet(z)?)?;
    let n = cd.dim();
    let tensors = specs
        .iter()
        .map(|s| Ok((t_label(s), curvature_for(&cd, s)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::from("t,i,j,k,l,re,im\n");
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    for (t, r) in &tensors {
                        let v: C64 = r.get(i, j, k, l);
                        out.push_str(&format!("{t},{i},{j},{k},{l},{:e},{:e}\n", v.re, v.im));
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn dump_tensors(
    model: &dyn MetricField,
    z: &ChartPoint,
    specs: &[ConnectionSpec],
    format: DumpFormat,
) -> Result<String> {
    match format {
        DumpFormat::Csv => curvature_csv(model, z, specs),
        DumpFormat::Json => {
            let d = tensor_dump(model, z, specs)?;
            let mut s = serde_json::to_string_pretty(&d).map_err(|e| Error::Io(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
    }
}
