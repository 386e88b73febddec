//! CSV and JSON forms of kernels and objects.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::TimeExpr;

use super::delta::{Coeff, DeltaSeries};
use super::grid::Grid;
use super::kernel::Kernel;
use super::object::StarObject;
use super::tri::Tri;

/// Writes the lower triangle row by row; row `i` holds `i + 1` values.
pub fn write_tri_csv<W: Write>(t: &Tri, w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().flexible(true).has_headers(false).from_writer(w);
    for i in 0..t.n() {
        out.write_record(t.row(i).iter().map(|v| v.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_tri_csv<R: Read>(r: R) -> Result<Tri> {
    let mut rd = csv::ReaderBuilder::new().flexible(true).has_headers(false).from_reader(r);
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Io(format!("bad number `{s}`: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Tri::from_rows(&rows)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct KernelEnvelope {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub source: Option<TimeExpr>,
    /// Lower triangle, row `i` holding `i + 1` samples.
    pub samples: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CoeffEnvelope {
    pub order: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub expr: Option<TimeExpr>,
    pub samples: Vec<f64>,
}

/// Grid metadata plus whichever parts an object has.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ObjectEnvelope {
    pub grid: Grid,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kernel: Option<KernelEnvelope>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub deltas: Vec<CoeffEnvelope>,
    /// Matrix of a discrete-algebra object, halved diagonal included.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub discrete: Option<Vec<Vec<f64>>>,
}

impl KernelEnvelope {
    pub fn from_kernel(k: &Kernel) -> KernelEnvelope {
        KernelEnvelope { source: k.source().cloned(), samples: k.samples().to_rows() }
    }
}

impl ObjectEnvelope {
    pub fn from_object(o: &StarObject) -> Result<ObjectEnvelope> {
        let g = *o.grid();
        if let Some(m) = o.discrete_matrix() {
            return Ok(ObjectEnvelope { grid: g, kernel: None, deltas: Vec::new(), discrete: Some(m.to_rows()) });
        }
        let mut deltas = Vec::new();
        if let Some(d) = o.deltas() {
            for (m, c) in d.coeffs().iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                deltas.push(CoeffEnvelope { order: m, expr: c.expr().cloned(), samples: c.samples(&g)? });
            }
        }
        Ok(ObjectEnvelope { grid: g, kernel: o.kernel().map(KernelEnvelope::from_kernel), deltas, discrete: None })
    }

    pub fn to_object(&self) -> Result<StarObject> {
        let g = Grid::new(self.grid.a, self.grid.b, self.grid.n_points)?;
        if let Some(rows) = &self.discrete {
            return Ok(StarObject::discrete(&g, checked(&g, Tri::from_rows(rows)?)?));
        }
        let kernel = match &self.kernel {
            Some(KernelEnvelope { source: Some(e), .. }) => Some(Kernel::from_expr(e, &g)?),
            Some(KernelEnvelope { source: None, samples }) => {
                Some(Kernel::from_samples(&g, checked(&g, Tri::from_rows(samples)?)?))
            }
            None => None,
        };
        let top = self.deltas.iter().map(|c| c.order + 1).max().unwrap_or(0);
        let mut coeffs = vec![Coeff::zero(); top];
        for c in &self.deltas {
            coeffs[c.order] = match &c.expr {
                Some(e) => Coeff::Expr(e.clone()),
                None if c.samples.len() == g.n() => Coeff::from_samples(c.samples.clone()),
                None => return Err(Error::Invalid(format!("δ^({}) coefficient has the wrong length", c.order))),
            };
        }
        Ok(StarObject::new(&g, kernel, Some(DeltaSeries::new(coeffs))))
    }
}

fn checked(g: &Grid, t: Tri) -> Result<Tri> {
    if t.n() != g.n() {
        return Err(Error::GridMismatch);
    }
    Ok(t)
}
