use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sofim::harness::output::{
    sweep_summary_text, write_run_csv, write_run_summary, write_scaling_csv,
};
use sofim::harness::{
    run_experiment, scaling_probe, sweep, ExperimentConfig, OptimizerId, OptimizerSpec,
    SweepResult, DEFAULT_ETA_GRID, DEFAULT_RHO_GRID,
};
use sofim::problems::gradcheck::default_suite;

use crate::config::{ConfigError, ExperimentFile};

pub const EFFECTIVE_CONFIG: &str = "effective_config.toml";

/// A fully resolved command: configuration errors have all been raised by
/// the time one of these exists.
pub enum Plan {
    Run(ExperimentConfig),
    Sweep {
        grid: Vec<ExperimentConfig>,
        summary: &'static str,
    },
}

pub fn plan_run(file: &ExperimentFile) -> Result<Plan, ConfigError> {
    Ok(Plan::Run(file.experiment(file.optimizer_spec()?)?))
}

/// η grid of the chosen optimizer, crossed with the ρ grid when the
/// optimizer is SOFIM and `[grid] rho` is given.
pub fn plan_sweep(file: &ExperimentFile) -> Result<Plan, ConfigError> {
    let base = file.optimizer_spec()?;
    let etas = file
        .grid
        .eta
        .clone()
        .unwrap_or_else(|| DEFAULT_ETA_GRID.to_vec());
    let rhos = match (base, &file.grid.rho) {
        (OptimizerSpec::Sofim { .. }, Some(rhos)) => rhos.clone(),
        (_, Some(_)) => {
            return Err(ConfigError(
                "[grid] rho applies only to optimizer \"sofim\"".into(),
            ))
        }
        (_, None) => Vec::new(),
    };
    let mut specs = Vec::new();
    for &eta in &etas {
        let spec = base.with_eta(eta);
        if rhos.is_empty() {
            specs.push(spec);
        }
        for &rho in &rhos {
            if let OptimizerSpec::Sofim { eta, beta, .. } = spec {
                specs.push(OptimizerSpec::Sofim { eta, rho, beta });
            }
        }
    }
    grid_plan(file, specs, "sweep_summary.txt")
}

pub fn plan_rho_sweep(file: &ExperimentFile) -> Result<Plan, ConfigError> {
    let OptimizerSpec::Sofim { eta, beta, .. } = file.optimizer_spec()? else {
        return Err(ConfigError("rho-sweep needs optimizer = \"sofim\"".into()));
    };
    let rhos = file
        .grid
        .rho
        .clone()
        .unwrap_or_else(|| DEFAULT_RHO_GRID.to_vec());
    let specs = rhos
        .iter()
        .map(|&rho| OptimizerSpec::Sofim { eta, rho, beta })
        .collect();
    grid_plan(file, specs, "rho_sweep_summary.txt")
}

fn grid_plan(
    file: &ExperimentFile,
    specs: Vec<OptimizerSpec>,
    summary: &'static str,
) -> Result<Plan, ConfigError> {
    if specs.is_empty() {
        return Err(ConfigError("[grid] is empty".into()));
    }
    let grid = specs
        .into_iter()
        .map(|spec| file.experiment(spec))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Plan::Sweep { grid, summary })
}

fn prepare(dir: &Path, file: &ExperimentFile) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let effective = file.effective(dir)?;
    let path = dir.join(EFFECTIVE_CONFIG);
    fs::write(&path, effective.to_toml())
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn execute(plan: Plan, file: &ExperimentFile, dir: &Path) -> Result<()> {
    prepare(dir, file)?;
    match plan {
        Plan::Run(cfg) => {
            let record = run_experiment(&cfg)?;
            let csv = write_run_csv(dir, &cfg, &record)?;
            let summary = write_run_summary(dir, &cfg, &record)?;
            print!("{}", fs::read_to_string(&summary)?);
            println!("wrote {}", csv.display());
        }
        Plan::Sweep { grid, summary } => {
            let result = sweep(&grid)?;
            let summary_path = write_sweep(dir, &result, summary)?;
            print!("{}", fs::read_to_string(&summary_path)?);
        }
    }
    Ok(())
}

fn write_sweep(dir: &Path, result: &SweepResult, summary: &str) -> Result<PathBuf> {
    for (cfg, record) in &result.points {
        write_run_csv(dir, cfg, record)?;
        write_run_summary(dir, cfg, record)?;
    }
    let path = dir.join(summary);
    fs::write(&path, sweep_summary_text(result))?;
    Ok(path)
}

pub fn scaling(
    optimizers: &[OptimizerId],
    dims: &[usize],
    repeats: usize,
    dir: &Path,
) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    for &optimizer in optimizers {
        let rows = scaling_probe(optimizer, dims, repeats)?;
        let id = optimizer.spec().id();
        let path = dir.join(format!("scaling_{id}.csv"));
        write_scaling_csv(&path, &rows)?;
        println!("{id}:");
        let mut previous: Option<f64> = None;
        for row in &rows {
            let ratio = previous.map_or(String::new(), |p| {
                format!("  x{:.2}", row.median_step_ns / p)
            });
            println!("  d={:<9} {:>12.1} ns{ratio}", row.dim, row.median_step_ns);
            previous = Some(row.median_step_ns);
        }
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn gradcheck(points: usize, seed: u64) -> Result<()> {
    let reports = default_suite(points, seed)?;
    let mut failed = Vec::new();
    for r in &reports {
        println!(
            "{:<10} points={} max_relative_error={:.3e} tolerance={:.0e} {}",
            r.problem,
            r.points,
            r.max_relative_error,
            r.tolerance,
            if r.passed() { "ok" } else { "FAILED" }
        );
        if !r.passed() {
            failed.push(r.problem.as_str());
        }
    }
    if !failed.is_empty() {
        bail!("gradient check failed for {}", failed.join(", "));
    }
    Ok(())
}
