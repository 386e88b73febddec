use crate::error::{Error, Result};
use crate::expr::{TimeExpr, Var};
use crate::par;
use crate::star_core::{discrete, star_identity, star_product_capped, Grid, StarObject};

/// Square matrix of ∗-objects on one grid.
#[derive(Clone, Debug)]
pub struct StarMatrix {
    grid: Grid,
    dim: usize,
    entries: Vec<StarObject>,
    exprs: Option<Vec<TimeExpr>>,
}

impl StarMatrix {
    /// `ã_{ij}(t′)Θ` from one-variable expressions; an entry written in `t`
    /// alone is read as a function of the left time.
    pub fn from_exprs(rows: &[Vec<TimeExpr>], g: &Grid) -> Result<StarMatrix> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Invalid("matrix is empty".into()));
        }
        let mut exprs = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Invalid(format!("matrix row {i} has {} entries, expected {dim}", row.len())));
            }
            for (j, e) in row.iter().enumerate() {
                let e = match (e.depends_on(Var::Tp), e.depends_on(Var::T)) {
                    (true, true) => {
                        return Err(Error::Invalid(format!("matrix[{i}][{j}] = `{e}` depends on both times")))
                    }
                    (false, true) => e.t_as_tp(),
                    _ => e.clone(),
                };
                exprs.push(e);
            }
        }
        let entries = exprs
            .iter()
            .map(|e| if e.is_zero() { Ok(StarObject::zero(g)) } else { StarObject::from_expr(e, g) })
            .collect::<Result<Vec<_>>>()?;
        Ok(StarMatrix { grid: *g, dim, entries, exprs: Some(exprs) })
    }

    pub fn from_objects(dim: usize, entries: Vec<StarObject>) -> Result<StarMatrix> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::Invalid(format!("{} entries do not form a {dim}×{dim} matrix", entries.len())));
        }
        let grid = *entries[0].grid();
        for e in &entries {
            grid.check_same(e.grid())?;
        }
        Ok(StarMatrix { grid, dim, entries, exprs: None })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn get(&self, i: usize, j: usize) -> &StarObject {
        &self.entries[i * self.dim + j]
    }

    /// Entry expressions in `tp`, row-major, when built from expressions.
    pub fn exprs(&self) -> Option<&[TimeExpr]> {
        self.exprs.as_deref()
    }

    pub fn is_discrete(&self) -> bool {
        self.entries.iter().any(StarObject::is_discrete)
    }

    pub fn to_discrete(&self) -> Result<StarMatrix> {
        let entries = self.entries.iter().map(StarObject::as_discrete).collect::<Result<Vec<_>>>()?;
        Ok(StarMatrix { grid: self.grid, dim: self.dim, entries, exprs: self.exprs.clone() })
    }

    /// `A ∗ v`.
    pub fn mul_vec(&self, v: &[StarObject], m_max: usize) -> Result<Vec<StarObject>> {
        self.check_len(v.len())?;
        par::map_range(self.dim, |i| {
            let row: Vec<&StarObject> = (0..self.dim).map(|j| self.get(i, j)).collect();
            sum_products(&self.grid, row.into_iter().zip(v.iter()), m_max)
        })
        .into_iter()
        .collect()
    }

    /// `wᴴ ∗ A` (real entries, so no conjugation).
    pub fn vec_mul(&self, w: &[StarObject], m_max: usize) -> Result<Vec<StarObject>> {
        self.check_len(w.len())?;
        par::map_range(self.dim, |j| {
            let col: Vec<&StarObject> = (0..self.dim).map(|i| self.get(i, j)).collect();
            sum_products(&self.grid, w.iter().zip(col), m_max)
        })
        .into_iter()
        .collect()
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.dim {
            return Err(Error::Invalid(format!("vector of length {n} against a {}×{} matrix", self.dim, self.dim)));
        }
        Ok(())
    }
}

fn is_null(o: &StarObject) -> bool {
    o.is_empty()
}

fn sum_products<'a>(
    g: &Grid,
    pairs: impl Iterator<Item = (&'a StarObject, &'a StarObject)>,
    m_max: usize,
) -> Result<StarObject> {
    let mut acc = StarObject::zero(g);
    for (a, b) in pairs {
        if is_null(a) || is_null(b) {
            continue;
        }
        acc = acc.add(&star_product_capped(a, b, m_max)?)?;
    }
    Ok(acc)
}

/// `Σ_i w_i ∗ v_i`.
pub fn dot(w: &[StarObject], v: &[StarObject], m_max: usize) -> Result<StarObject> {
    if w.len() != v.len() || w.is_empty() {
        return Err(Error::Invalid("vectors of different lengths".into()));
    }
    sum_products(w[0].grid(), w.iter().zip(v), m_max)
}

/// `x_i · 1_*`, in matrix form when `discrete`.
pub fn scalar_vector(x: &[f64], g: &Grid, discrete_form: bool) -> Vec<StarObject> {
    x.iter()
        .map(|&c| {
            if c == 0.0 {
                StarObject::zero(g)
            } else if discrete_form {
                StarObject::discrete(g, discrete::identity(g).scale(c))
            } else {
                star_identity(g).scale(c)
            }
        })
        .collect()
}
