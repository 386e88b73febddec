use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::settings::Settings;
use crate::star_core::{discrete, star_identity, star_product_capped, Grid, ObjectEnvelope, StarObject};
use crate::star_inverse::{invert_discrete, invert_kernel_resolvent};

use super::matrix::{dot, scalar_vector, StarMatrix};

/// How `β_j^{∗−1}` is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaMode {
    /// Everything in the discrete algebra; β inverted as a triangular matrix.
    Numeric,
    /// Kernel-plus-delta objects; β inverted through Volterra resolvents.
    Resolvent,
}

impl FromStr for BetaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<BetaMode> {
        match s {
            "numeric" => Ok(BetaMode::Numeric),
            "resolvent" => Ok(BetaMode::Resolvent),
            _ => Err(Error::Invalid(format!("unknown beta mode `{s}` (expected numeric or resolvent)"))),
        }
    }
}

impl fmt::Display for BetaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BetaMode::Numeric => "numeric",
            BetaMode::Resolvent => "resolvent",
        })
    }
}

/// What was measured while inverting one β.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepDiagnostic {
    pub index: usize,
    pub beta_magnitude: f64,
    pub scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cond: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<usize>,
    /// Distance of the δ part of `γ_j` from `1_*`, for the resolvent route.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_gap: Option<f64>,
}

/// `T_n`: diagonal α_0…α_{n−1}, subdiagonal β_1…β_{n−1}, superdiagonal 1_*.
#[derive(Clone, Debug)]
pub struct TridiagonalStar {
    pub alphas: Vec<StarObject>,
    pub betas: Vec<StarObject>,
    pub mode: BetaMode,
    /// Index of the β that could not be inverted.
    pub breakdown: Option<usize>,
    pub diagnostics: Vec<StepDiagnostic>,
}

impl TridiagonalStar {
    pub fn n(&self) -> usize {
        self.alphas.len()
    }

    pub fn grid(&self) -> &Grid {
        self.alphas[0].grid()
    }

    /// Fails with the breakdown, if one occurred.
    pub fn complete(self) -> Result<TridiagonalStar> {
        match self.breakdown {
            Some(index) => Err(Error::Breakdown { index }),
            None => Ok(self),
        }
    }

    /// The n×n ∗-matrix, in matrix form when `discrete`.
    pub fn as_matrix(&self, discrete_form: bool) -> Result<StarMatrix> {
        let g = *self.grid();
        let n = self.n();
        let conv = |o: &StarObject| if discrete_form { o.as_discrete() } else { Ok(o.clone()) };
        let one = if discrete_form { StarObject::discrete(&g, discrete::identity(&g)) } else { star_identity(&g) };
        let mut entries = vec![StarObject::zero(&g); n * n];
        for i in 0..n {
            entries[i * n + i] = conv(&self.alphas[i])?;
            if i + 1 < n {
                entries[i * n + i + 1] = one.clone();
                entries[(i + 1) * n + i] = conv(&self.betas[i])?;
            }
        }
        StarMatrix::from_objects(n, entries)
    }

    pub fn to_envelope(&self) -> Result<TridiagonalEnvelope> {
        Ok(TridiagonalEnvelope {
            mode: self.mode,
            n: self.n(),
            breakdown: self.breakdown,
            alphas: self.alphas.iter().map(ObjectEnvelope::from_object).collect::<Result<_>>()?,
            betas: self.betas.iter().map(ObjectEnvelope::from_object).collect::<Result<_>>()?,
            diagnostics: self.diagnostics.clone(),
        })
    }
}

/// JSON form of `T_n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TridiagonalEnvelope {
    pub mode: BetaMode,
    pub n: usize,
    pub breakdown: Option<usize>,
    pub alphas: Vec<ObjectEnvelope>,
    pub betas: Vec<ObjectEnvelope>,
    pub diagnostics: Vec<StepDiagnostic>,
}

/// Vectors carried between iterations.
#[derive(Clone, Debug)]
pub struct LanczosState {
    pub v_prev: Vec<StarObject>,
    pub v_curr: Vec<StarObject>,
    pub w_prev: Vec<StarObject>,
    pub w_curr: Vec<StarObject>,
    pub step: usize,
    pub breakdown: Option<usize>,
}

fn axpy(x: &[StarObject], y: &[StarObject]) -> Result<Vec<StarObject>> {
    x.iter().zip(y).map(|(a, b)| a.sub(b)).collect()
}

fn left_scale(c: &StarObject, v: &[StarObject], m_max: usize) -> Result<Vec<StarObject>> {
    v.iter().map(|x| if x.is_empty() { Ok(x.clone()) } else { star_product_capped(c, x, m_max) }).collect()
}

fn right_scale(v: &[StarObject], c: &StarObject, m_max: usize) -> Result<Vec<StarObject>> {
    v.iter().map(|x| if x.is_empty() { Ok(x.clone()) } else { star_product_capped(x, c, m_max) }).collect()
}

struct Inverter<'a> {
    mode: BetaMode,
    settings: &'a Settings,
}

impl Inverter<'_> {
    fn pruned(&self, o: &StarObject, scale: f64) -> Result<StarObject> {
        o.prune_deltas(self.settings.tau_diag * scale)
    }

    fn invert(&self, beta: &StarObject, gamma: Option<&StarObject>, diag: &mut StepDiagnostic) -> Result<StarObject> {
        let s = self.settings;
        match self.mode {
            BetaMode::Numeric => {
                let inv = invert_discrete(beta, s)?;
                diag.cond = Some(inv.cond);
                diag.excluded = inv.excluded;
                Ok(inv.object)
            }
            BetaMode::Resolvent => {
                let g = *beta.grid();
                if let Some(gamma) = gamma {
                    // w_{j−2}ᴴAv_{j−1} is 1_* exactly, so γ_j = 1_* + β_j; the product
                    // form only contributes its discretization residual, reported here.
                    let gap = gamma.sub(&star_identity(&g))?.sub(beta)?;
                    diag.gamma_gap = Some(gap.magnitude()?);
                }
                let b = self.pruned(beta, beta.magnitude()?)?;
                // −R_*(1_* + β) = β^{∗−1}
                let inv = invert_kernel_resolvent(&b, s)?;
                diag.excluded = inv.excluded;
                Ok(inv.object)
            }
        }
    }
}

/// Runs `n` steps of the ∗-Lanczos recurrence on `(A, w, v)`.
///
/// A β whose magnitude falls below `τ_bd` times the running scale stops the
/// recurrence; the returned `T` then carries the breakdown index and only the
/// coefficients computed before it.
pub fn run_lanczos(
    a: &StarMatrix,
    w: &[f64],
    v: &[f64],
    n: usize,
    mode: BetaMode,
    settings: &Settings,
) -> Result<TridiagonalStar> {
    run_lanczos_with_state(a, w, v, n, mode, settings).map(|(t, _)| t)
}

/// [`run_lanczos`], also returning the recurrence vectors at exit.
///
/// In numeric mode the vectors live in the discrete algebra of `A`.
pub fn run_lanczos_with_state(
    a: &StarMatrix,
    w: &[f64],
    v: &[f64],
    n: usize,
    mode: BetaMode,
    settings: &Settings,
) -> Result<(TridiagonalStar, LanczosState)> {
    let dim = a.dim();
    if w.len() != dim || v.len() != dim {
        return Err(Error::Invalid(format!("w and v must have length {dim}")));
    }
    let wv: f64 = w.iter().zip(v).map(|(x, y)| x * y).sum();
    if (wv - 1.0).abs() > settings.bilinear_tol {
        return Err(Error::Invalid(format!("wᴴv = {wv} differs from 1")));
    }
    if n == 0 || n > dim {
        return Err(Error::Invalid(format!("iteration count {n} must lie in 1..={dim}")));
    }
    let m = settings.m_max;
    let g = *a.grid();
    let numeric = mode == BetaMode::Numeric;
    let a = if numeric { a.to_discrete()? } else { a.clone() };
    let inverter = Inverter { mode, settings };

    let w0 = scalar_vector(w, &g, numeric);
    let v0 = scalar_vector(v, &g, numeric);
    let av = a.mul_vec(&v0, m)?;
    let alpha0 = dot(&w0, &av, m)?;
    let mut t = TridiagonalStar {
        alphas: vec![alpha0.clone()],
        betas: Vec::new(),
        mode,
        breakdown: None,
        diagnostics: Vec::new(),
    };
    if n == 1 {
        let state =
            LanczosState { v_prev: Vec::new(), v_curr: v0, w_prev: Vec::new(), w_curr: w0, step: 0, breakdown: None };
        return Ok((t, state));
    }

    let wa = a.vec_mul(&w0, m)?;
    let w1 = axpy(&wa, &left_scale(&alpha0, &w0, m)?)?;
    let v1_hat = axpy(&av, &right_scale(&v0, &alpha0, m)?)?;
    let wa2v = dot(&wa, &av, m)?;
    let alpha_sq = star_product_capped(&alpha0, &alpha0, m)?;
    let beta1 = wa2v.sub(&alpha_sq)?;
    let mut scale = wa2v.magnitude()?.max(alpha_sq.magnitude()?);

    let mut state = LanczosState { v_prev: v0, v_curr: Vec::new(), w_prev: w0, w_curr: w1, step: 1, breakdown: None };
    let mut beta = beta1;
    let mut v_hat = v1_hat;
    let mut gamma: Option<StarObject> = None;
    loop {
        let j = state.step;
        let mag = beta.magnitude()?;
        let mut diag =
            StepDiagnostic { index: j, beta_magnitude: mag, scale, cond: None, excluded: Vec::new(), gamma_gap: None };
        if mag <= settings.tau_bd * scale {
            state.breakdown = Some(j);
            t.breakdown = Some(j);
            t.diagnostics.push(diag);
            return Ok((t, state));
        }
        let inv = match inverter.invert(&beta, gamma.as_ref(), &mut diag) {
            Ok(x) => x,
            Err(e) => {
                t.diagnostics.push(diag);
                return Err(e);
            }
        };
        t.diagnostics.push(diag);
        scale = scale.max(mag);
        let v_j = right_scale(&v_hat, &inv, m)?;
        t.betas.push(beta.clone());
        if j == 1 {
            state.v_curr = v_j;
        } else {
            state.v_prev = std::mem::replace(&mut state.v_curr, v_j);
        }

        // α_j = w_jᴴ A v_j
        let av = a.mul_vec(&state.v_curr, m)?;
        let alpha = dot(&state.w_curr, &av, m)?;
        t.alphas.push(alpha.clone());
        if t.alphas.len() == n {
            return Ok((t, state));
        }
        let beta_prev = t.betas.last().expect("β pushed above");
        let wa = a.vec_mul(&state.w_curr, m)?;
        let w_next =
            axpy(&axpy(&wa, &left_scale(&alpha, &state.w_curr, m)?)?, &left_scale(beta_prev, &state.w_prev, m)?)?;
        v_hat = axpy(&axpy(&av, &right_scale(&state.v_curr, &alpha, m)?)?, &state.v_prev)?;
        beta = dot(&w_next, &av, m)?;
        gamma = if numeric {
            None
        } else {
            let sum: Vec<StarObject> =
                w_next.iter().zip(&state.w_prev).map(|(x, y)| x.add(y)).collect::<Result<_>>()?;
            Some(dot(&sum, &av, m)?)
        };
        state.w_prev = std::mem::replace(&mut state.w_curr, w_next);
        state.step += 1;
    }
}
