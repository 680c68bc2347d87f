use std::io::Write;

use serde_json::{json, Value};

use dnlslab_core::estimates::{
    commutator_scaling, verify_apriori, verify_bilinear, verify_data_gauge, verify_gauge_leibniz,
    verify_inhomogeneous, verify_nonlinear, verify_smoothing_maximal, verify_strichartz, EstimateReport,
    QuadratureConfig,
};
use dnlslab_core::gauge::{duhamel_mismatch, gauge_residual, gauge_transform, GaugeParams};
use dnlslab_core::littlewood_paley::{DyadicIndex, WindowFamily, WindowProfile};
use dnlslab_core::norms::{xt_norm, yt_norm_breakdown, XtNormBreakdown};
use dnlslab_core::solver::io::{write_binary, write_csv};
use dnlslab_core::solver::{solve, Trajectory};
use dnlslab_core::spectral::{Grid, GridSpec};
use dnlslab_core::LabError;

use crate::config::{EstimatePlan, GaugePlan, Target, TrajectoryPlan};
use crate::output::OutDir;

/// Failure while computing or writing.
#[derive(Debug)]
pub enum RunError {
    Lab(LabError),
    Io(std::io::Error),
}

impl From<LabError> for RunError {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Io(e) => RunError::Io(e),
            other => RunError::Lab(other),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Lab(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "I/O error: {e}"),
        }
    }
}

pub type RunResult<T> = Result<T, RunError>;

/// Named acceptance condition `value ≤ limit` (or `≥` when `at_least`).
pub struct Gate {
    name: &'static str,
    value: f64,
    limit: f64,
    at_least: bool,
}

impl Gate {
    fn at_most(name: &'static str, value: f64, limit: f64) -> Self {
        Self { name, value, limit, at_least: false }
    }

    fn at_least(name: &'static str, value: f64, limit: f64) -> Self {
        Self { name, value, limit, at_least: true }
    }

    fn pass(&self) -> bool {
        if self.at_least {
            self.value >= self.limit
        } else {
            self.value <= self.limit
        }
    }
}

/// Outcome of a command: results for the summary and whether every gate passed.
pub struct Outcome {
    pub results: Value,
    pub pass: bool,
    pub text: String,
}

impl Outcome {
    fn gated(mut results: Value, gates: &[Gate]) -> Self {
        let mut text = String::new();
        let mut pass = true;
        let mut list = Vec::new();
        for g in gates {
            let ok = g.pass();
            pass &= ok;
            let rel = if g.at_least { ">=" } else { "<=" };
            text.push_str(&format!(
                "{} {} = {:.4e} ({rel} {:.1e})\n",
                if ok { "PASS" } else { "FAIL" },
                g.name,
                g.value,
                g.limit
            ));
            list.push(json!({ "name": g.name, "value": number(g.value), "limit": g.limit, "relation": rel, "pass": ok }));
        }
        results["checks"] = Value::Array(list);
        Self { results, pass, text }
    }
}

/// JSON number, or a string for non-finite values.
fn number(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

fn run(plan: &TrajectoryPlan, spec: &GridSpec) -> RunResult<Trajectory> {
    let grid = Grid::new(*spec)?;
    let u0 = plan.data.build(&grid)?;
    Ok(solve(&u0, plan.lambda, plan.k, spec, plan.store_every)?)
}

fn windows(traj: &Trajectory) -> RunResult<WindowFamily> {
    Ok(WindowFamily::build(traj.grid(), WindowProfile::SmoothBump)?)
}

fn write_trajectory(out: &mut OutDir, traj: &Trajectory, format: &str) -> RunResult<()> {
    match format {
        "csv" => out.write("trajectory.csv", |w| Ok::<_, RunError>(write_csv(&traj.data, w)?)),
        "binary" => out.write("trajectory.bin", |w| Ok::<_, RunError>(write_binary(traj, w)?)),
        _ => Ok(()),
    }
}

fn run_summary(traj: &Trajectory) -> Value {
    let last = traj.last();
    json!({
        "levels": traj.data.levels(),
        "final_time": traj.data.horizon(),
        "mass_initial": traj.masses()[0],
        "relative_mass_drift": number(traj.relative_mass_drift()),
        "final_l2": last.l2_norm(),
        "final_sup": last.sup_norm(),
    })
}

pub fn simulate(plan: &TrajectoryPlan, format: &str, out: &mut OutDir) -> RunResult<Outcome> {
    let traj = run(plan, &plan.spec)?;
    let mut results = run_summary(&traj);
    let mut gates = vec![Gate::at_most("relative_mass_drift", traj.relative_mass_drift(), 1e-8)];
    if plan.lambda == 0.0 {
        let u0 = traj.initial();
        let mut err = 0.0f64;
        for (n, &t) in traj.data.times().iter().enumerate() {
            err = err.max(traj.data.field(n).sub(&u0.propagate(t))?.sup_norm());
        }
        results["linear_flow_error"] = number(err);
        gates.push(Gate::at_most("linear_flow_error", err, 1e-10));
    }
    write_trajectory(out, &traj, format)?;
    Ok(Outcome::gated(results, &gates))
}

struct GaugeRung {
    nx: usize,
    dt: f64,
    modulus_error: f64,
    residual: f64,
    mismatch: f64,
}

fn gauge_rung(plan: &GaugePlan, params: &GaugeParams, spec: &GridSpec) -> RunResult<GaugeRung> {
    let traj = run(&plan.run, spec)?;
    let w = windows(&traj)?;
    let v = gauge_transform(&traj.data, params, &w)?;
    let block = w.project_spacetime(&traj.data, plan.band)?;
    let modulus_error = v
        .values()
        .iter()
        .zip(block.values())
        .map(|(a, b)| (a.norm() - b.norm()).abs())
        .fold(0.0, f64::max);
    Ok(GaugeRung {
        nx: spec.nx,
        dt: spec.dt,
        modulus_error,
        residual: gauge_residual(&traj.data, params, &w)?,
        mismatch: duhamel_mismatch(&traj.data, params, &w, traj.data.horizon())?,
    })
}

pub fn gauge_check(plan: &GaugePlan, out: &mut OutDir) -> RunResult<Outcome> {
    let run = &plan.run;
    let params = if run.lambda == 0.0 {
        GaugeParams::linear(run.k, plan.band)?
    } else {
        GaugeParams::new(run.lambda, run.k, plan.band)?
    };
    let mut rungs = vec![gauge_rung(plan, &params, &run.spec)?];
    if plan.refine {
        let fine = GridSpec::new(2 * run.spec.nx, run.spec.length, run.spec.dt / 2.0, run.spec.horizon)?;
        rungs.push(gauge_rung(plan, &params, &fine)?);
    }
    out.write("gauge_check.csv", |w| {
        writeln!(w, "nx,dt,modulus_error,residual,duhamel_mismatch")?;
        for r in &rungs {
            writeln!(w, "{},{:e},{:e},{:e},{:e}", r.nx, r.dt, r.modulus_error, r.residual, r.mismatch)?;
        }
        Ok::<_, RunError>(())
    })?;

    let coarse = &rungs[0];
    let modulus = rungs.iter().map(|r| r.modulus_error).fold(0.0, f64::max);
    let mut results = json!({
        "band": plan.band.to_string(),
        "rungs": rungs.iter().map(|r| json!({
            "nx": r.nx,
            "dt": r.dt,
            "modulus_error": number(r.modulus_error),
            "residual": number(r.residual),
            "duhamel_mismatch": number(r.mismatch),
        })).collect::<Vec<_>>(),
    });
    let mut gates = vec![Gate::at_most("modulus_error", modulus, 1e-12)];
    if run.lambda == 0.0 {
        let worst = rungs.iter().map(|r| r.residual).fold(0.0, f64::max);
        gates.push(Gate::at_most("linear_residual", worst, 1e-8));
    } else if let Some(fine) = rungs.get(1) {
        let residual_reduction = coarse.residual / fine.residual;
        let mismatch_reduction = coarse.mismatch / fine.mismatch;
        results["residual_reduction"] = number(residual_reduction);
        results["mismatch_reduction"] = number(mismatch_reduction);
        gates.push(Gate::at_least("residual_reduction", residual_reduction, 6.0));
        gates.push(Gate::at_least("mismatch_reduction", mismatch_reduction, 3.0));
    }
    Ok(Outcome::gated(results, &gates))
}

fn reports_in(r: &EstimateReport) -> Vec<&EstimateReport> {
    let mut all = vec![r];
    for s in &r.sub_reports {
        all.extend(reports_in(s));
    }
    all
}

pub fn estimates(plan: &EstimatePlan, out: &mut OutDir) -> RunResult<Outcome> {
    let (suite, fam) = (&plan.suite, &plan.family);
    let report = match plan.target {
        Target::Strichartz => verify_strichartz(suite, fam, plan.theta)?,
        Target::Smoothing(kind) => verify_smoothing_maximal(suite, fam, kind, plan.theta)?,
        Target::Inhomogeneous(which) => verify_inhomogeneous(suite, fam, which, plan.theta)?,
        Target::GaugeLeibniz => verify_gauge_leibniz(suite, fam, plan.alpha, plan.leibniz)?,
        Target::Commutator => commutator_scaling(suite, fam, &plan.bands, &QuadratureConfig::default())?,
        Target::Bilinear => verify_bilinear(suite, fam, plan.physics, plan.p)?,
        Target::Nonlinear => verify_nonlinear(suite, fam, plan.physics, &plan.terms)?,
        Target::DataGauge => verify_data_gauge(suite, fam, plan.physics)?,
        Target::Apriori => verify_apriori(suite, fam, plan.physics, plan.c_high)?,
    };
    for r in reports_in(&report) {
        if !r.members.is_empty() {
            out.write(&format!("{}.csv", r.id), |w| Ok::<_, RunError>(r.write_csv(w)?))?;
        }
    }
    Ok(Outcome {
        results: report.summary_json(),
        pass: report.pass,
        text: report.render(),
    })
}

pub fn decompose(plan: &TrajectoryPlan, format: &str, out: &mut OutDir) -> RunResult<Outcome> {
    let traj = run(plan, &plan.spec)?;
    let w = windows(&traj)?;
    let indices = w.indices();
    let dx = traj.grid().dx();
    let mut rows = Vec::new();
    let mut reconstruction = 0.0f64;
    for (n, &t) in traj.data.times().iter().enumerate() {
        let u = traj.data.field(n);
        let mut sum = dnlslab_core::spectral::Field::zeros(std::sync::Arc::clone(traj.grid()));
        for &idx in &indices {
            let block = w.project(&u, idx)?;
            let energy: f64 = block.values().iter().map(|z| z.norm_sqr()).sum::<f64>() * dx;
            rows.push((t, idx, energy));
            sum = sum.add(&block)?;
        }
        let scale = u.sup_norm().max(f64::MIN_POSITIVE);
        reconstruction = reconstruction.max(sum.sub(&u)?.sup_norm() / scale);
    }
    out.write("block_energies.csv", |f| {
        writeln!(f, "t,band,energy")?;
        for (t, idx, e) in &rows {
            writeln!(f, "{t:e},{idx},{e:e}")?;
        }
        Ok::<_, RunError>(())
    })?;
    write_trajectory(out, &traj, format)?;
    let mut results = run_summary(&traj);
    results["bands"] = json!(indices.iter().map(|i| i.to_string()).collect::<Vec<_>>());
    results["reconstruction_error"] = number(reconstruction);
    Ok(Outcome::gated(results, &[Gate::at_most("reconstruction_error", reconstruction, 1e-10)]))
}

fn breakdown_json(b: &XtNormBreakdown) -> Value {
    json!({
        "sup_sobolev": number(b.sup_sobolev),
        "smoothing": number(b.smoothing),
        "maximal_l2": number(b.maximal_l2),
        "maximal_l4": number(b.maximal_l4),
        "total": number(b.total),
    })
}

pub fn norms(plan: &TrajectoryPlan, format: &str, out: &mut OutDir) -> RunResult<Outcome> {
    let traj = run(plan, &plan.spec)?;
    let w = windows(&traj)?;
    let x = xt_norm(&traj.data, &w, true)?;
    let mut rows: Vec<(&str, String, XtNormBreakdown)> = vec![("x_t", "all".into(), x)];
    let (mut block_sq, mut gauged_sq) = (0.0, 0.0);
    for idx in w.indices() {
        if idx == DyadicIndex::Low {
            continue;
        }
        let block = yt_norm_breakdown(&w.project_spacetime(&traj.data, idx)?);
        block_sq += block.total.powi(2);
        rows.push(("y_t_block", idx.to_string(), block));
        if plan.lambda != 0.0 {
            let params = GaugeParams::new(plan.lambda, plan.k, idx)?;
            let gauged = yt_norm_breakdown(&gauge_transform(&traj.data, &params, &w)?);
            gauged_sq += gauged.total.powi(2);
            rows.push(("y_t_gauged", idx.to_string(), gauged));
        }
    }
    out.write("norms.csv", |f| {
        writeln!(f, "quantity,band,sup_sobolev,smoothing,maximal_l2,maximal_l4,total")?;
        for (q, band, b) in &rows {
            writeln!(
                f,
                "{q},{band},{:e},{:e},{:e},{:e},{:e}",
                b.sup_sobolev, b.smoothing, b.maximal_l2, b.maximal_l4, b.total
            )?;
        }
        Ok::<_, RunError>(())
    })?;
    write_trajectory(out, &traj, format)?;
    let mut results = run_summary(&traj);
    results["x_t"] = breakdown_json(&x);
    results["y_t_blocks_l2"] = number(block_sq.sqrt());
    if plan.lambda != 0.0 {
        results["y_t_gauged_l2"] = number(gauged_sq.sqrt());
    }
    let finite = rows.iter().all(|(_, _, b)| b.total.is_finite());
    Ok(Outcome::gated(results, &[Gate::at_most("non_finite_norms", if finite { 0.0 } else { 1.0 }, 0.0)]))
}
