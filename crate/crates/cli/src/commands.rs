//! Implementations of the five subcommands.
//!
//! Each command loads a [`RunConfig`], runs the corresponding library
//! routines, writes its data files through the shared [`Emitter`] and prints
//! a one-line outcome on stdout.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use taxflow_core::observables::{
    class_delta, convergence_norm, convergence_time, gini, tax_revenue,
};
use taxflow_core::{
    find_equilibrium, find_gini_minimum, find_phase_threshold, integrate, make_initial,
    mean_income, run_sweep, CoefficientSet, Distribution, EquilibriumReport, Error as CoreError,
    SweepResult, Trajectory,
};

use crate::config::{OutputFormat, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{write_summary, Cell, Emitter};

/// Where and how a command writes its files.
pub struct OutputContext {
    pub dir: PathBuf,
    pub emitter: Emitter,
}

/// Resolves the output directory and emitter from the configuration and the
/// command-line overrides, creating the directory if needed.
pub fn prepare_output(
    run: &RunConfig,
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
    precision: Option<usize>,
) -> Result<OutputContext> {
    let dir = out
        .or_else(|| run.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(OutputContext {
        dir,
        emitter: Emitter {
            format: format.unwrap_or(run.output.format),
            precision: precision.or(run.output.precision),
        },
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!("cannot read configuration {}: {e}", path.display()))
    })?;
    RunConfig::parse(&text)
}

/// Archives the effective configuration (defaults filled in) next to the
/// outputs, so a result directory is reproducible on its own.
fn archive_config(run: &RunConfig, dir: &Path, stem: &str) -> Result<()> {
    fs::write(dir.join(format!("{stem}.toml")), run.emit())?;
    Ok(())
}

/// Builds the model and integrates the configured run.
fn integrate_run(run: &RunConfig) -> Result<(Trajectory, EquilibriumReport, CoefficientSet)> {
    let cfg = run.model()?;
    let coeffs = CoefficientSet::build(&cfg)?;
    let x0 = make_initial(&run.initial()?, &cfg.incomes)?;
    let (traj, report) = integrate(&x0, &coeffs, &run.integrator())?;
    Ok((traj, report, coeffs))
}

fn equilibrium_summary(report: &EquilibriumReport, coeffs: &CoefficientSet) -> Value {
    let x = &report.equilibrium;
    json!({
        "converged": report.converged,
        "t_reached": report.t_reached,
        "final_residual": report.final_residual,
        "gini": gini(x, coeffs.incomes()),
        "mean_income": mean_income(x.fractions(), coeffs.incomes()),
        "tax_revenue": tax_revenue(x, coeffs),
        "sum_drift": report.sum_drift,
        "mu_drift": report.mu_drift,
    })
}

fn histogram_rows(x: &Distribution, incomes: &[f64]) -> Vec<Vec<Cell>> {
    x.fractions()
        .iter()
        .zip(incomes)
        .enumerate()
        .map(|(i, (f, r))| vec![Cell::Int(i + 1), Cell::Float(*r), Cell::Float(*f)])
        .collect()
}

fn outcome_line(report: &EquilibriumReport) -> String {
    if report.converged {
        format!("reached equilibrium at t = {}", report.t_reached)
    } else {
        format!(
            "horizon exhausted at t = {} (residual {:.3e}); results are non-stationary",
            report.t_reached, report.final_residual
        )
    }
}

/// `simulate`: full trajectory plus an equilibrium summary.
pub fn simulate(run: &RunConfig, ctx: &OutputContext) -> Result<()> {
    let (traj, report, coeffs) = integrate_run(run)?;
    archive_config(run, &ctx.dir, "config_used")?;

    let mut columns = vec!["t".to_string()];
    columns.extend((1..=coeffs.n()).map(|i| format!("x_{i}")));
    columns.extend(["sum_drift", "mu_drift", "rhs_norm"].map(String::from));
    let names: Vec<&str> = columns.iter().map(String::as_str).collect();

    let rows: Vec<Vec<Cell>> = traj
        .times()
        .iter()
        .zip(traj.states())
        .zip(traj.diagnostics())
        .map(|((t, state), diag)| {
            let mut row = Vec::with_capacity(names.len());
            row.push(Cell::Float(*t));
            row.extend(state.iter().map(|v| Cell::Float(*v)));
            row.extend([
                Cell::Float(diag.sum_drift),
                Cell::Float(diag.mu_drift),
                Cell::Float(diag.rhs_norm),
            ]);
            row
        })
        .collect();

    let table = ctx.emitter.write_table(&ctx.dir, "trajectory", &names, &rows)?;
    let summary = write_summary(&ctx.dir, "summary", &equilibrium_summary(&report, &coeffs))?;
    println!(
        "{}; {} samples -> {}, summary -> {}",
        outcome_line(&report),
        traj.len(),
        table.display(),
        summary.display()
    );
    Ok(())
}

/// `equilibrium`: like `simulate` but emits only the final histogram.
pub fn equilibrium(run: &RunConfig, ctx: &OutputContext) -> Result<()> {
    let cfg = run.model()?;
    let coeffs = CoefficientSet::build(&cfg)?;
    let x0 = make_initial(&run.initial()?, &cfg.incomes)?;
    let report = find_equilibrium(&x0, &coeffs, &run.integrator())?;
    archive_config(run, &ctx.dir, "config_used")?;

    let rows = histogram_rows(&report.equilibrium, coeffs.incomes());
    let table =
        ctx.emitter
            .write_table(&ctx.dir, "equilibrium", &["class", "income", "fraction"], &rows)?;
    let summary = write_summary(&ctx.dir, "summary", &equilibrium_summary(&report, &coeffs))?;
    println!(
        "{}; histogram -> {}, summary -> {}",
        outcome_line(&report),
        table.display(),
        summary.display()
    );
    Ok(())
}

/// `compare`: equilibria of two configurations sharing the class structure
/// and the initial mean income, with per-class deltas.
pub fn compare(run_a: &RunConfig, run_b: &RunConfig, ctx: &OutputContext) -> Result<()> {
    let cfg_a = run_a.model()?;
    let cfg_b = run_b.model()?;
    if cfg_a.n != cfg_b.n {
        return Err(CliError::Config(format!(
            "configurations disagree on the class count: {} vs {}",
            cfg_a.n, cfg_b.n
        )));
    }
    if cfg_a.incomes != cfg_b.incomes {
        return Err(CliError::Config(
            "configurations disagree on the income grid".into(),
        ));
    }

    let x0_a = make_initial(&run_a.initial()?, &cfg_a.incomes)?;
    let x0_b = make_initial(&run_b.initial()?, &cfg_b.incomes)?;
    let mu_a = mean_income(x0_a.fractions(), &cfg_a.incomes);
    let mu_b = mean_income(x0_b.fractions(), &cfg_b.incomes);
    if (mu_a - mu_b).abs() > 1e-9 * mu_a.abs().max(1.0) {
        return Err(CliError::Config(format!(
            "configurations disagree on the initial mean income: {mu_a} vs {mu_b}"
        )));
    }

    let coeffs_a = CoefficientSet::build(&cfg_a)?;
    let coeffs_b = CoefficientSet::build(&cfg_b)?;
    let report_a = find_equilibrium(&x0_a, &coeffs_a, &run_a.integrator())?;
    let report_b = find_equilibrium(&x0_b, &coeffs_b, &run_b.integrator())?;
    archive_config(run_a, &ctx.dir, "config_a_used")?;
    archive_config(run_b, &ctx.dir, "config_b_used")?;

    let histogram = ["class", "income", "fraction"];
    ctx.emitter.write_table(
        &ctx.dir,
        "histogram_a",
        &histogram,
        &histogram_rows(&report_a.equilibrium, &cfg_a.incomes),
    )?;
    ctx.emitter.write_table(
        &ctx.dir,
        "histogram_b",
        &histogram,
        &histogram_rows(&report_b.equilibrium, &cfg_b.incomes),
    )?;

    let delta = class_delta(&report_a.equilibrium, &report_b.equilibrium);
    let delta_rows: Vec<Vec<Cell>> = delta
        .absolute
        .iter()
        .zip(&delta.percent)
        .enumerate()
        .map(|(i, (abs, pct))| {
            vec![
                Cell::Int(i + 1),
                Cell::Float(cfg_a.incomes[i]),
                Cell::Float(*abs),
                Cell::from(*pct),
            ]
        })
        .collect();
    ctx.emitter.write_table(
        &ctx.dir,
        "delta",
        &["class", "income", "absolute", "percent"],
        &delta_rows,
    )?;

    let gini_a = gini(&report_a.equilibrium, &cfg_a.incomes);
    let gini_b = gini(&report_b.equilibrium, &cfg_b.incomes);
    let summary = json!({
        "mean_income": mu_a,
        "converged_a": report_a.converged,
        "converged_b": report_b.converged,
        "gini_a": gini_a,
        "gini_b": gini_b,
        "gini_delta": gini_b - gini_a,
        "tax_revenue_a": tax_revenue(&report_a.equilibrium, &coeffs_a),
        "tax_revenue_b": tax_revenue(&report_b.equilibrium, &coeffs_b),
    });
    let path = write_summary(&ctx.dir, "summary", &summary)?;
    println!(
        "gini: {gini_a} vs {gini_b} (delta {}); tables and {} written",
        gini_b - gini_a,
        path.display()
    );
    Ok(())
}

/// Command-line switches of the `sweep` subcommand.
pub struct SweepMode {
    /// Replaces the coupled ratio from the file.
    pub ratio: Option<f64>,
    /// Threshold-search bracket; its presence selects the search mode.
    pub bracket: Option<(f64, f64)>,
    /// Final bracket width of the threshold search.
    pub tol: f64,
    /// Also dump every converged equilibrium histogram.
    pub dump_states: bool,
}

/// `sweep`: tabulate a parameter grid, or bisect for the coupling-ratio
/// threshold when a bracket is given.
pub fn sweep(run: &RunConfig, mode: &SweepMode, ctx: &OutputContext) -> Result<()> {
    archive_config(run, &ctx.dir, "config_used")?;
    if let Some((lo, hi)) = mode.bracket {
        let spec = run.sweep_spec(mode.ratio)?;
        let found = find_phase_threshold(&spec, lo, hi, mode.tol)?;
        let summary = json!({
            "mode": "threshold",
            "ratio": found.ratio,
            "bracket": [found.bracket.0, found.bracket.1],
            "sweeps": found.sweeps,
        });
        let path = write_summary(&ctx.dir, "summary", &summary)?;
        println!(
            "threshold ratio = {} (bracket [{}, {}] after {} sweeps) -> {}",
            found.ratio,
            found.bracket.0,
            found.bracket.1,
            found.sweeps,
            path.display()
        );
        return Ok(());
    }

    let spec = run.sweep_spec(mode.ratio)?;
    let result = run_sweep(&spec)?;
    write_sweep_table(&result, ctx)?;
    if mode.dump_states {
        write_sweep_states(&result, &spec.base.incomes, ctx)?;
    }

    let minimum = match find_gini_minimum(&result) {
        Ok(m) => json!({
            "index": m.index,
            "tau_max": m.tau_max,
            "q": m.q,
            "gini": m.gini,
            "interior": m.interior,
        }),
        Err(_) => Value::Null,
    };
    let converged = result.converged_rows().count();
    let summary = json!({
        "mode": "grid",
        "mean_income": result.mean_income,
        "rows": result.rows.len(),
        "converged_rows": converged,
        "gini_minimum": minimum,
    });
    let path = write_summary(&ctx.dir, "summary", &summary)?;
    println!(
        "{converged}/{} rows converged; table and {} written",
        result.rows.len(),
        path.display()
    );

    if converged == 0 {
        return Err(CliError::Runtime(
            "no sweep row reached equilibrium; see the emitted table for per-row errors".into(),
        ));
    }
    Ok(())
}

fn write_sweep_table(result: &SweepResult, ctx: &OutputContext) -> Result<()> {
    let columns = [
        "index",
        "tau_max",
        "q",
        "converged",
        "gini",
        "tax_revenue",
        "residual",
        "t_reached",
        "error",
    ];
    let rows: Vec<Vec<Cell>> = result
        .rows
        .iter()
        .map(|row| {
            let mut cells = vec![
                Cell::Int(row.index),
                Cell::Float(row.tau_max),
                Cell::Float(row.q),
            ];
            match &row.outcome {
                Ok(point) => cells.extend([
                    Cell::Bool(point.converged),
                    Cell::Float(point.gini),
                    Cell::Float(point.tax_revenue),
                    Cell::Float(point.residual),
                    Cell::Float(point.t_reached),
                    Cell::Empty,
                ]),
                Err(e) => cells.extend([
                    Cell::Bool(false),
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Text(e.to_string()),
                ]),
            }
            cells
        })
        .collect();
    ctx.emitter.write_table(&ctx.dir, "sweep", &columns, &rows)?;
    Ok(())
}

fn write_sweep_states(result: &SweepResult, incomes: &[f64], ctx: &OutputContext) -> Result<()> {
    let columns = ["index", "tau_max", "q", "class", "income", "fraction"];
    let mut rows = Vec::new();
    for row in &result.rows {
        let Ok(point) = &row.outcome else { continue };
        for (i, (f, r)) in point.equilibrium.fractions().iter().zip(incomes).enumerate() {
            rows.push(vec![
                Cell::Int(row.index),
                Cell::Float(row.tau_max),
                Cell::Float(row.q),
                Cell::Int(i + 1),
                Cell::Float(*r),
                Cell::Float(*f),
            ]);
        }
    }
    ctx.emitter.write_table(&ctx.dir, "sweep_states", &columns, &rows)?;
    Ok(())
}

/// `convergence`: delayed self-distance series, decay fit and the first time
/// the distance falls to `eps`.
pub fn convergence(run: &RunConfig, xi: f64, eps: f64, ctx: &OutputContext) -> Result<()> {
    let opts = run.integrator();
    if !xi.is_finite() || xi <= 0.0 || xi >= opts.t_max {
        return Err(CliError::Config(format!(
            "the comparison delay must satisfy 0 < xi < t_max = {}, got {xi}",
            opts.t_max
        )));
    }

    let (traj, report, _) = integrate_run(run)?;
    archive_config(run, &ctx.dir, "config_used")?;
    let series = convergence_norm(&traj, xi)?;
    let t_converge = match convergence_time(&series, eps) {
        Ok(t) => Some(t),
        Err(CoreError::ThresholdNotReached { .. }) => None,
        Err(e) => return Err(e.into()),
    };

    let rows: Vec<Vec<Cell>> = series
        .times
        .iter()
        .zip(&series.values)
        .map(|(t, f)| {
            let ln_f = if *f > 0.0 { Some(f.ln()) } else { None };
            vec![Cell::Float(*t), Cell::Float(*f), Cell::from(ln_f)]
        })
        .collect();
    let table = ctx
        .emitter
        .write_table(&ctx.dir, "series", &["t", "f", "ln_f"], &rows)?;

    let summary = json!({
        "xi": xi,
        "eps": eps,
        "reached": t_converge.is_some(),
        "t_converge": t_converge,
        "fitted_rate": series.fitted_rate,
        "fit_r2": series.fit_r2,
        "converged": report.converged,
        "t_reached": report.t_reached,
    });
    let path = write_summary(&ctx.dir, "summary", &summary)?;
    match t_converge {
        Some(t) => println!(
            "distance fell to {eps:e} at t = {t}; series -> {}, summary -> {}",
            table.display(),
            path.display()
        ),
        None => println!(
            "threshold {eps:e} not reached within the horizon; series -> {}, summary -> {}",
            table.display(),
            path.display()
        ),
    }
    Ok(())
}
