use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use starlanczos::evolution::{ordered_exponential, rk4_reference};
use starlanczos::green::{fundamental_residual, green_operator_from_kernel};
use starlanczos::star_core::io::write_tri_csv;
use starlanczos::star_core::{discrete, Grid, ObjectEnvelope, StarObject};
use starlanczos::star_inverse::verify::smooth_suite;
use starlanczos::star_inverse::verify::two_sided_residual;
use starlanczos::star_inverse::{
    build_annihilator, invert_kernel_resolvent, invert_left_variable, invert_numeric, invert_polynomial,
    invert_right_variable, invert_separable, Inverse,
};
use starlanczos::star_lanczos::{run_lanczos, verify_moments, BetaMode, StarMatrix, TridiagonalStar};
use starlanczos::{Kernel, Settings, Var};

use crate::output::Staged;
use crate::problem::{parse_problem, Method, Output, ProblemSpec};
use crate::suite::example_suite;
use crate::{Cli, CliError, Command};

/// Written by every command next to its reports.
#[derive(Serialize)]
struct Summary<'a> {
    command: &'a str,
    grid: Grid,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_mode: Option<BetaMode>,
    settings: Settings,
    metrics: BTreeMap<&'static str, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
    files: Vec<String>,
}

#[derive(Serialize)]
struct InverseReport {
    method: &'static str,
    residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    cond: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    excluded: Vec<usize>,
    inverse: ObjectEnvelope,
}

struct Context {
    spec: ProblemSpec,
    grid: Grid,
    settings: Settings,
    mode: BetaMode,
    tol: Option<f64>,
}

impl Context {
    fn new(cli: &Cli) -> Result<Context, CliError> {
        let settings = cli.settings()?;
        let path = cli.problem.as_ref().ok_or_else(|| CliError::Validation("--problem is required".into()))?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        let spec = parse_problem(&text, settings.bilinear_tol)?;
        let grid = spec.grid(cli.grid)?;
        let mode = cli.beta_mode.map(BetaMode::from).unwrap_or(spec.beta_mode);
        Ok(Context { spec, grid, settings, mode, tol: cli.tol })
    }

    fn check(&self, what: &str, value: f64) -> Result<(), CliError> {
        match self.tol {
            Some(t) if !(value <= t) => {
                Err(CliError::Numerical(format!("{what} {value:.3e} exceeds the tolerance {t:.3e}")))
            }
            _ => Ok(()),
        }
    }

    fn summary(
        &self,
        command: &'static str,
        metrics: BTreeMap<&'static str, f64>,
        staged: &Staged,
    ) -> Summary<'static> {
        let mut files: Vec<String> = staged.names().iter().map(|s| s.to_string()).collect();
        files.push("summary.json".into());
        Summary {
            command,
            grid: self.grid,
            beta_mode: matches!(command, "lanczos" | "evolve").then_some(self.mode),
            settings: self.settings,
            metrics,
            tol: self.tol,
            files,
        }
    }

    fn lanczos(&self) -> Result<(StarMatrix, TridiagonalStar), CliError> {
        let a = StarMatrix::from_exprs(&self.spec.matrix, &self.grid)?;
        let n = self.spec.lanczos_n.unwrap_or(self.spec.dim());
        let t = run_lanczos(&a, &self.spec.w, &self.spec.v, n, self.mode, &self.settings)?.complete()?;
        Ok((a, t))
    }
}

fn out_dir(cli: &Cli) -> Result<&Path, CliError> {
    cli.out.as_deref().ok_or_else(|| CliError::Validation("--out is required".into()))
}

fn finish<W: Write>(
    ctx: &Context,
    cli: &Cli,
    command: &'static str,
    metrics: BTreeMap<&'static str, f64>,
    mut staged: Staged,
    out: &mut W,
) -> Result<(), CliError> {
    let dir = out_dir(cli)?;
    let summary = ctx.summary(command, metrics.clone(), &staged);
    staged.add_json("summary.json", &summary)?;
    let written = staged.commit(dir)?;
    for (k, v) in &metrics {
        let _ = writeln!(out, "{k} = {v:.6e}");
    }
    for p in written {
        let _ = writeln!(out, "wrote {}", p.display());
    }
    Ok(())
}

pub fn run<W: Write>(cli: &Cli, out: &mut W) -> Result<(), CliError> {
    if cli.command == Command::Verify {
        return verify(cli, out);
    }
    // Refuse before doing any work.
    out_dir(cli)?;
    let ctx = Context::new(cli)?;
    match cli.command {
        Command::Invert => invert(&ctx, cli, out),
        Command::Lanczos => lanczos(&ctx, cli, out),
        Command::Evolve => evolve(&ctx, cli, out),
        Command::Green => green(&ctx, cli, out),
        Command::Verify => unreachable!(),
    }
}

fn pick_method(ctx: &Context) -> Result<Method, CliError> {
    let f = ctx.spec.kernel()?;
    Ok(match ctx.spec.method {
        Method::Auto => {
            let (tp, t) = (f.depends_on(Var::Tp), f.depends_on(Var::T));
            if !t {
                Method::Left
            } else if !tp {
                Method::Right
            } else if f.degree_in(Var::Tp, ctx.settings.m_max).is_some() {
                Method::Polynomial
            } else if !ctx.spec.basis.is_empty() {
                Method::Separable
            } else {
                Method::Numeric
            }
        }
        m => m,
    })
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Auto => "auto",
        Method::Left => "left",
        Method::Right => "right",
        Method::Polynomial => "polynomial",
        Method::Separable => "separable",
        Method::Numeric => "numeric",
        Method::Resolvent => "resolvent",
    }
}

fn exact(object: StarObject) -> Inverse {
    Inverse { object, excluded: Vec::new(), x_tilde: None, stages: 0 }
}

fn invert<W: Write>(ctx: &Context, cli: &Cli, out: &mut W) -> Result<(), CliError> {
    let f = ctx.spec.kernel()?;
    let g = ctx.grid;
    let s = &ctx.settings;
    let method = pick_method(ctx)?;
    let fo = StarObject::from_expr(f, &g)?;
    let (inv, cond) = match method {
        Method::Left => (exact(invert_left_variable(f, &g)?), None),
        Method::Right => (exact(invert_right_variable(f, &g)?), None),
        Method::Polynomial => (invert_polynomial(f, &g, s)?, None),
        Method::Separable => {
            if ctx.spec.basis.is_empty() {
                return Err(CliError::Validation("basis: required by the separable method".into()));
            }
            let l = build_annihilator(&ctx.spec.basis, &g, s)?;
            (invert_separable(f, &l, &g, s)?, None)
        }
        Method::Resolvent => (invert_kernel_resolvent(&fo, s)?, None),
        Method::Numeric => {
            let k = Kernel::from_expr(f, &g)?;
            let n = invert_numeric(&k, s)?;
            (Inverse { object: n.object, excluded: n.excluded, x_tilde: None, stages: 0 }, Some(n.cond))
        }
        Method::Auto => unreachable!("resolved by pick_method"),
    };
    let residual = if inv.object.is_discrete() {
        // X⋆F against the discrete identity I/h, relative.
        let x = inv.object.to_discrete()?;
        let fd = fo.to_discrete()?;
        let left = discrete::product(&x, &fd, &g).sub(&discrete::identity(&g)).max_abs();
        let right = discrete::product(&fd, &x, &g).sub(&discrete::identity(&g)).max_abs();
        left.max(right) * g.h()
    } else {
        let (l, r) = two_sided_residual(&fo, &inv.object, &smooth_suite(), &inv.excluded)?;
        l.max(r)
    };
    ctx.check("two-sided residual", residual)?;

    let mut staged = Staged::new();
    let all = [Output::Envelope, Output::Kernel];
    if ctx.spec.wants(Output::Envelope, &all) {
        let report = InverseReport {
            method: method_name(method),
            residual,
            cond,
            excluded: inv.excluded.clone(),
            inverse: ObjectEnvelope::from_object(&inv.object)?,
        };
        staged.add_json("inverse.json", &report)?;
    }
    if ctx.spec.wants(Output::Kernel, &all) {
        let k = inv.object.kernel_samples();
        staged.add_with("inverse_kernel.csv", |b| write_tri_csv(&k, b))?;
    }
    let mut metrics = BTreeMap::from([("residual", residual)]);
    if let Some(c) = cond {
        metrics.insert("cond", c);
    }
    finish(ctx, cli, "invert", metrics, staged, out)
}

fn lanczos<W: Write>(ctx: &Context, cli: &Cli, out: &mut W) -> Result<(), CliError> {
    let (a, t) = ctx.lanczos()?;
    let (lo, hi) = ctx.spec.interval;
    let at = ctx.spec.eval_at.unwrap_or((hi, lo));
    let rep = verify_moments(&a, &ctx.spec.w, &ctx.spec.v, &t, at, &ctx.settings)?;
    ctx.check("moment discrepancy", rep.max_rel_err())?;

    let mut staged = Staged::new();
    let all = [Output::Tridiagonal, Output::Moments];
    if ctx.spec.wants(Output::Tridiagonal, &all) {
        staged.add_json("tridiagonal.json", &t.to_envelope()?)?;
    }
    if ctx.spec.wants(Output::Moments, &all) {
        staged.add_with("moments.csv", |b| rep.write_csv(b))?;
    }
    let metrics = BTreeMap::from([("n", t.n() as f64), ("max_rel_err", rep.max_rel_err())]);
    finish(ctx, cli, "lanczos", metrics, staged, out)
}

fn evolve<W: Write>(ctx: &Context, cli: &Cli, out: &mut W) -> Result<(), CliError> {
    let (_, t) = ctx.lanczos()?;
    let s = &ctx.settings;
    let u = ordered_exponential(&t, ctx.grid.a, s)?;
    let r = rk4_reference(&ctx.spec.matrix, &ctx.spec.w, &ctx.spec.v, &ctx.grid, s.substeps)?;
    let u = u.with_reference(r)?;
    let err = u.max_error().unwrap_or(f64::NAN);
    ctx.check("max |u − u_ref|", err)?;

    let mut staged = Staged::new();
    let all = [Output::Evolution];
    if ctx.spec.wants(Output::Evolution, &all) {
        staged.add_with("evolution.csv", |b| u.write_csv(b))?;
    }
    if ctx.spec.wants(Output::Tridiagonal, &all) {
        staged.add_json("tridiagonal.json", &t.to_envelope()?)?;
    }
    let metrics = BTreeMap::from([("n", t.n() as f64), ("max_abs_err", err)]);
    finish(ctx, cli, "evolve", metrics, staged, out)
}

fn green<W: Write>(ctx: &Context, cli: &Cli, out: &mut W) -> Result<(), CliError> {
    let gt = ctx.spec.kernel()?;
    if ctx.spec.basis.is_empty() {
        return Err(CliError::Validation("basis: required by green".into()));
    }
    let d = green_operator_from_kernel(gt, &ctx.spec.basis, &ctx.grid, &ctx.settings)?;
    let res = fundamental_residual(&d, gt, &smooth_suite())?;
    ctx.check("fundamental-solution residual", res)?;

    let mut staged = Staged::new();
    if ctx.spec.wants(Output::Green, &[Output::Green]) {
        staged.add_with("green.json", |b| d.write_json(b))?;
        staged.add_with("green_r_minus1.csv", |b| d.write_r_minus1_csv(b))?;
    }
    let metrics = BTreeMap::from([("order", d.order as f64), ("fundamental_residual", res)]);
    finish(ctx, cli, "green", metrics, staged, out)
}

fn verify<W: Write>(cli: &Cli, out: &mut W) -> Result<(), CliError> {
    let settings = cli.settings()?;
    let checks = example_suite(&settings)?;
    let mut failed = 0;
    for c in &checks {
        let tag = if c.pass { "PASS" } else { "FAIL" };
        let rel = if c.at_most { "≤" } else { "≥" };
        let _ = writeln!(out, "{tag} {}: {} = {:.3e} ({rel} {:.1e})", c.example, c.name, c.value, c.bound);
        failed += usize::from(!c.pass);
    }
    if failed > 0 {
        return Err(CliError::Numerical(format!("{failed} of {} checks failed", checks.len())));
    }
    if let Some(dir) = &cli.out {
        let mut staged = Staged::new();
        staged.add_json("verify.json", &checks)?;
        for p in staged.commit(dir)? {
            let _ = writeln!(out, "wrote {}", p.display());
        }
    }
    Ok(())
}
