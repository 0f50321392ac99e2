use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use dividend_core::pipeline::{default_step, optimal_barrier, plan_grid, GridPlan};
use dividend_core::scale::solve_scale;
use dividend_core::tables::{table, TableSpec};
use dividend_core::{
    barrier_solution_at, simulate_gerber_shiu, simulate_two_sided, simulate_value, validate_model,
    value_function, verify_optimality, BarrierSolution, ModelParams, SimulationConfig,
    SimulationEstimate,
};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{numerical, CliError, CliResult};
use crate::output::{csv_field, csv_number, Run};
use crate::Functional;

fn load(path: &Path) -> CliResult<(Vec<u8>, ModelParams)> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let params = ModelParams::from_json(text).map_err(|e| CliError::Validation(e.to_string()))?;
    Ok((bytes, params))
}

fn require_valid(params: &ModelParams, horizon: f64) -> CliResult<()> {
    let report =
        validate_model(params, horizon).map_err(|e| CliError::Validation(e.to_string()))?;
    if report.passed() {
        return Ok(());
    }
    let reasons: Vec<String> = report
        .failures()
        .iter()
        .map(|c| format!("{}: {}", c.name, c.message))
        .collect();
    Err(CliError::Validation(reasons.join("; ")))
}

fn plan(params: &ModelParams, dx: Option<f64>, xmax: Option<f64>) -> CliResult<GridPlan> {
    match xmax {
        Some(x_max) => Ok(GridPlan {
            dx: dx.unwrap_or_else(|| default_step(params)),
            x_max,
        }),
        None => plan_grid(params, dx).map_err(numerical),
    }
}

fn solve(
    params: &ModelParams,
    dx: Option<f64>,
    xmax: Option<f64>,
) -> CliResult<(GridPlan, BarrierSolution)> {
    let grid = plan(params, dx, xmax)?;
    optimal_barrier(params, Some(grid)).map_err(numerical)
}

fn barrier_document(grid: GridPlan, solution: &BarrierSolution) -> Value {
    let mut doc = serde_json::to_value(solution.summary()).expect("summary serializes");
    doc["x_max_requested"] = json!(grid.x_max);
    doc
}

pub fn barrier(
    config: &Path,
    dx: Option<f64>,
    xmax: Option<f64>,
    horizon: f64,
    out: &Path,
) -> CliResult<()> {
    let (bytes, params) = load(config)?;
    require_valid(&params, horizon)?;
    let (grid, solution) = solve(&params, dx, xmax)?;
    let mut run = Run::new("barrier", &bytes, out);
    run.write_json("barrier.json", &barrier_document(grid, &solution))?;
    run.write("h_profile.csv", solution.h_profile.to_csv().as_bytes())?;
    run.write("v_curve.csv", solution.v.to_csv().as_bytes())?;
    run.finish()?;
    for w in &solution.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "a* = {:.6}  v(a*) = {:.6}",
        solution.a_star, solution.v_at_barrier
    );
    Ok(())
}

fn table_csv(spec: &TableSpec, dx: Option<f64>) -> (String, Vec<String>) {
    let rows: Vec<(f64, f64, Result<f64, String>)> = spec
        .cases()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(value, reference, params)| {
            let result = plan_grid(&params, dx)
                .and_then(|g| optimal_barrier(&params, Some(g)))
                .map(|(_, s)| s.a_star)
                .map_err(|e| e.to_string());
            (value, reference, result)
        })
        .collect();
    let mut csv = String::from("param,a_star,a_star_paper,abs_diff,note\n");
    let mut lines = Vec::new();
    for (value, reference, result) in rows {
        let (a, note) = match &result {
            Ok(a) => (*a, String::new()),
            Err(reason) => (f64::NAN, reason.clone()),
        };
        let diff = (a - reference).abs();
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            csv_number(value),
            csv_number(a),
            csv_number(reference),
            csv_number(diff),
            csv_field(&note)
        ));
        let status = if diff <= spec.tolerance {
            "match"
        } else {
            "differs"
        };
        lines.push(format!(
            "table {} {}={:<6} a*={:>9.4} reference={:>6.2} |diff|={:.4} {status}{}",
            spec.number,
            spec.sweep.name(),
            value,
            a,
            reference,
            diff,
            if note.is_empty() {
                String::new()
            } else {
                format!(" ({note})")
            }
        ));
    }
    (csv, lines)
}

pub fn tables(which: &[u8], dx: Option<f64>, out: &Path) -> CliResult<()> {
    let numbers: BTreeSet<usize> = if which.is_empty() {
        (1..=6).collect()
    } else {
        which.iter().map(|n| *n as usize).collect()
    };
    let request = format!("tables {numbers:?} dx={dx:?}");
    let mut run = Run::new("tables", request.as_bytes(), out);
    let specs: Vec<&TableSpec> = numbers.iter().filter_map(|n| table(*n)).collect();
    let results: Vec<(usize, String, Vec<String>)> = specs
        .par_iter()
        .map(|spec| {
            let (csv, lines) = table_csv(spec, dx);
            (spec.number, csv, lines)
        })
        .collect();
    for (number, csv, lines) in results {
        run.write(&format!("table{number}.csv"), csv.as_bytes())?;
        for line in lines {
            println!("{line}");
        }
    }
    run.finish()
}

pub fn verify(
    config: &Path,
    barrier: Option<f64>,
    dx: Option<f64>,
    xmax: Option<f64>,
    horizon: f64,
    out: &Path,
) -> CliResult<()> {
    let (bytes, params) = load(config)?;
    require_valid(&params, horizon)?;
    let solution = match barrier {
        None => solve(&params, dx, xmax)?.1,
        Some(a) => {
            let mut grid = plan(&params, dx, xmax)?;
            if xmax.is_none() {
                grid.x_max = grid.x_max.max(a + 10.0 * params.mean_claim());
            }
            let scale = solve_scale(&params, grid.dx, grid.x_max).map_err(numerical)?;
            barrier_solution_at(&scale, a).map_err(numerical)?
        }
    };
    let report = verify_optimality(&solution, &params).map_err(numerical)?;
    let mut run = Run::new("verify", &bytes, out);
    run.write_json("optimality.json", &report)?;
    run.write("residual.csv", report.residual_profile.to_csv().as_bytes())?;
    run.finish()?;
    println!(
        "barrier {:.6}: max (A-q)v above = {:.3e} (tolerance {:.3e}) -> {}",
        report.a_star,
        report.max_residual_above,
        report.tolerance,
        if report.necessary_sufficient_pass {
            "optimal"
        } else {
            "not optimal"
        }
    );
    if report.necessary_sufficient_pass {
        Ok(())
    } else {
        let positive = report
            .residual_profile
            .xs()
            .zip(report.residual_profile.values())
            .find(|(_, r)| **r > report.tolerance);
        let region = positive
            .map(|(x, _)| format!(" from x = {x:.4}"))
            .unwrap_or_default();
        Err(CliError::Numerical(format!(
            "HJB inequality violated: positive residual {:.3e}{region}",
            report.max_residual_above
        )))
    }
}

pub struct SimulateRequest {
    pub x: f64,
    pub functional: Functional,
    pub paths: u64,
    pub seed: u64,
    pub horizon: Option<f64>,
    pub streams: usize,
    pub barrier: Option<f64>,
    pub solution: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
struct SavedBarrier {
    a_star: f64,
    dx: f64,
    domain_end: f64,
}

fn read_solution(path: &Path) -> CliResult<SavedBarrier> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Long enough that discounting shrinks the envelope far below the mean.
fn default_horizon(
    params: &ModelParams,
    functional: Functional,
    level: Option<f64>,
) -> CliResult<f64> {
    if params.q == 0.0 {
        return Ok(1000.0 / params.lambda);
    }
    let envelope = params.penalty_envelope().map_err(numerical)?;
    let scale = match functional {
        Functional::Value => params.premium.rate(level.unwrap_or(0.0)) / params.q + envelope,
        Functional::GerberShiu => envelope,
        Functional::TwoSided => 1.0,
    };
    Ok((1e8 * scale.max(1.0)).ln() / params.q)
}

fn analytic(
    params: &ModelParams,
    saved: &SavedBarrier,
    functional: Functional,
    x: f64,
    level: Option<f64>,
) -> CliResult<f64> {
    let scale = solve_scale(params, saved.dx, saved.domain_end).map_err(numerical)?;
    match functional {
        Functional::Value => {
            value_function(&scale, level.unwrap_or(saved.a_star), x).map_err(numerical)
        }
        Functional::GerberShiu => scale.g.smooth_value_at(x).map_err(numerical),
        Functional::TwoSided => {
            let a = level.unwrap_or(saved.a_star);
            let w = |z: f64| scale.w.smooth_value_at(z).map_err(numerical);
            Ok(w(x)? / w(a)?)
        }
    }
}

pub fn simulate(config: &Path, request: &SimulateRequest, out: &Path) -> CliResult<()> {
    let (bytes, params) = load(config)?;
    let saved = request.solution.as_deref().map(read_solution).transpose()?;
    let level = match request.functional {
        Functional::GerberShiu => None,
        _ => match (request.barrier, &saved) {
            (Some(a), _) => Some(a),
            (None, Some(s)) => Some(s.a_star),
            (None, None) if request.functional == Functional::Value => {
                Some(solve(&params, None, None)?.1.a_star)
            }
            (None, None) => {
                return Err(CliError::Usage(
                    "two-sided needs --barrier or --solution".into(),
                ))
            }
        },
    };
    let horizon = match request.horizon {
        Some(h) => h,
        None => default_horizon(&params, request.functional, level)?,
    };
    let mut cfg =
        SimulationConfig::new(request.paths, horizon, request.seed).with_streams(request.streams);
    let estimate: SimulationEstimate = match request.functional {
        Functional::Value => {
            cfg = cfg.with_barrier(level.expect("value mode has a level"));
            simulate_value(&params, request.x, &cfg)
        }
        Functional::GerberShiu => simulate_gerber_shiu(&params, request.x, &cfg),
        Functional::TwoSided => simulate_two_sided(
            &params,
            request.x,
            level.expect("two-sided has a level"),
            &cfg,
        ),
    }
    .map_err(|e| match e {
        dividend_core::SimulationError::InvalidConfig(m) => CliError::Usage(m),
        other => numerical(other),
    })?;

    let mut doc = serde_json::to_value(&estimate).expect("estimate serializes");
    doc["functional"] = json!(format!("{:?}", request.functional).to_lowercase());
    doc["x"] = json!(request.x);
    doc["horizon"] = json!(horizon);
    if let Some(a) = level {
        doc["barrier"] = json!(a);
    }
    if let Some(saved) = &saved {
        let value = analytic(&params, saved, request.functional, request.x, level)?;
        let z = if estimate.std_error > 0.0 {
            (estimate.mean - value) / estimate.std_error
        } else {
            0.0
        };
        doc["comparison"] = json!({ "analytic": value, "z_score": z });
        println!("analytic {value:.6}  z = {z:.3}");
    }
    let mut run = Run::new("simulate", &bytes, out);
    run.write_json("simulation.json", &doc)?;
    run.finish()?;
    println!(
        "mean {:.6} +- {:.6} ({} paths)",
        estimate.mean, estimate.std_error, estimate.paths
    );
    Ok(())
}

pub fn validate(config: &Path, horizon: f64, out: &Path) -> CliResult<()> {
    let (bytes, params) = load(config)?;
    let report =
        validate_model(&params, horizon).map_err(|e| CliError::Validation(e.to_string()))?;
    let mut run = Run::new("validate", &bytes, out);
    run.write_json("validation.json", &report)?;
    run.finish()?;
    for c in &report.checks {
        println!(
            "{:<24} {}  {}",
            c.name,
            if c.passed { "pass" } else { "FAIL" },
            c.message
        );
    }
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{} check(s) failed",
            report.failures().len()
        )))
    }
}
