use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use tracechain::mosco::{
    adjoint_identities_check, convergence_sweep, energy_upper_bound_check, project, AdjointReport, ConvergenceReport,
    EnergyBoundReport, SweepOptions,
};
use tracechain::simulator::{dynkin_martingale_residual, first_hitting_time, path_stats, simulate_replica, Estimate, PathStats};
use tracechain::{capacity, ChainSpec, GridFunction, Partition, TestFunction};

use crate::config::LoadedConfig;
use crate::output::Sink;
use crate::CliError;

pub struct Context {
    pub loaded: LoadedConfig,
    pub out: PathBuf,
    pub seed: u64,
    pub timestamp: bool,
}

impl Context {
    fn sink(&self, command: &'static str) -> Result<Sink, CliError> {
        Sink::new(&self.out, command, &self.loaded, self.seed, self.timestamp)
    }

    fn chain(&self) -> Result<(Partition, ChainSpec), CliError> {
        let c = &self.loaded.config;
        let p = c.partition()?;
        let chain = ChainSpec::build(&p, &c.scale()?, &c.speed()?)?;
        Ok((p, chain))
    }
}

pub fn build(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let (_, chain) = ctx.chain()?;
    Ok(vec![ctx.sink("build")?.json("chain.json", &chain)?])
}

pub fn simulate(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let c = &ctx.loaded.config;
    let (_, chain) = ctx.chain()?;
    let sim = &c.simulation;
    let sink = ctx.sink("simulate")?;
    let mut written = Vec::new();
    for r in 0..c.outputs.export_paths.min(sim.replicas) {
        let path = simulate_replica(&chain, c.init(), sim.horizon, ctx.seed, r as u64)?;
        written.push(sink.csv(&format!("path_{r:04}.csv"), |w| path.write_csv(&chain, w))?);
    }
    let stats: PathStats = path_stats(&chain, c.init(), sim.horizon, sim.replicas, ctx.seed)?;
    written.push(sink.json("stats.json", &stats)?);
    Ok(written)
}

#[derive(Serialize)]
struct ConvergenceEntry {
    test_function: usize,
    lambda: f64,
    report: ConvergenceReport,
}

#[derive(Serialize)]
struct EnergyEntry {
    test_function: usize,
    report: EnergyBoundReport,
}

#[derive(Serialize)]
struct ConvergeResult {
    reference: tracechain::mosco::Reference,
    convergence: Vec<ConvergenceEntry>,
    energy_bounds: Vec<EnergyEntry>,
}

pub fn converge(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let c = &ctx.loaded.config;
    let scale = c.scale()?;
    let speed = c.speed()?;
    let family = c.grid_family();
    let reference = c.reference(&scale, &speed);
    let opts = SweepOptions {
        family,
        reference,
        timing: ctx.timestamp,
    };
    let tests = c.test_functions(&scale)?;
    let sink = ctx.sink("converge")?;
    let mut written = Vec::new();
    let mut convergence = Vec::new();
    for (i, u) in tests.iter().enumerate() {
        for (j, &lambda) in c.lambdas()?.iter().enumerate() {
            let report = convergence_sweep(&scale, &speed, u, lambda, &c.resolutions, opts)?;
            written.push(sink.csv(&format!("convergence_u{i}_l{j}.csv"), |w| report.write_csv(w))?);
            convergence.push(ConvergenceEntry {
                test_function: i,
                lambda,
                report,
            });
        }
    }
    let partitions = c
        .resolutions
        .iter()
        .map(|&r| family.partition(r))
        .collect::<Result<Vec<_>, _>>()?;
    let energy_bounds = tests
        .iter()
        .enumerate()
        .filter(|(_, u)| matches!(u, TestFunction::SAdapted { .. }))
        .map(|(i, u)| {
            Ok(EnergyEntry {
                test_function: i,
                report: energy_upper_bound_check(&scale, &speed, u, &partitions)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    written.push(sink.json(
        "converge.json",
        &ConvergeResult {
            reference,
            convergence,
            energy_bounds,
        },
    )?);
    Ok(written)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Serialize)]
struct VerifyResult {
    passed: bool,
    checks: Vec<Check>,
    identities: AdjointReport,
}

fn check(name: impl Into<String>, pass: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        pass,
        detail,
    }
}

/// Runs the property suite; returns the written files and the checks, and
/// fails with an assertion error after writing the report if any check fails.
pub fn verify(ctx: &Context) -> Result<(Vec<PathBuf>, Vec<Check>), CliError> {
    let c = &ctx.loaded.config;
    let v = &c.verify;
    let scale = c.scale()?;
    let speed = c.speed()?;
    let (p, chain) = ctx.chain()?;
    let n = chain.len();
    let l = chain.generator();
    let mut checks = Vec::new();

    let identities = adjoint_identities_check(&p, &speed, v.identity_trials, ctx.seed)?;
    checks.push(check(
        "adjoint_identities",
        identities.max_deviation() <= v.tolerance,
        format!(
            "adjoint {:.3e}, left inverse {:.3e}, isometry {:.3e}",
            identities.adjoint, identities.left_inverse, identities.isometry
        ),
    ));

    let rows = (0..n).map(|i| l.row_sum(i).abs()).fold(0.0, f64::max);
    let balance = (0..n.saturating_sub(1))
        .map(|i| {
            let a = chain.masses[i] * l.sup[i];
            (a - chain.masses[i + 1] * l.sub[i + 1]).abs() / a.abs().max(1.0)
        })
        .fold(0.0, f64::max);
    let mut resolvent: f64 = 0.0;
    for &lambda in c.lambdas()? {
        let g = l.solve_shifted(lambda, &GridFunction::constant(n, 1.0))?;
        resolvent = resolvent.max(g.values().iter().map(|x| (lambda * x - 1.0).abs()).fold(0.0, f64::max));
    }
    let mass = (chain.total_mass() - speed.total()).abs();
    let worst = rows.max(balance).max(resolvent).max(mass);
    checks.push(check(
        "generator_invariants",
        worst <= v.tolerance,
        format!("row sums {rows:.3e}, detailed balance {balance:.3e}, lambda G 1 {resolvent:.3e}, mass {mass:.3e}"),
    ));

    let (lo, hi) = v.capacity_window;
    let set: Vec<usize> = (0..n).filter(|&i| (lo..=hi).contains(&chain.grid()[i])).collect();
    if set.is_empty() {
        return Err(CliError::Validation(format!(
            "verify: no grid point lies in the capacity window [{lo}, {hi}]"
        )));
    }
    let (cap, _) = capacity(&chain, &set)?;
    for &t in &v.capacity_horizons {
        let hits = (0..v.capacity_replicas as u64)
            .into_par_iter()
            .map(|r| {
                first_hitting_time(&chain, tracechain::simulator::InitialLaw::Stationary, &set, t, ctx.seed, r)
                    .map(|h| if h.is_some() { 1.0 } else { 0.0 })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let est = Estimate::from_samples(&hits);
        let bound = t.exp() * speed.total().sqrt() * cap.sqrt();
        checks.push(check(
            format!("capacity_bound_T{t}"),
            est.mean <= bound + v.sigmas * est.std_err,
            format!(
                "P = {:.4} +- {:.4}, bound {bound:.4} (Cap {cap:.4e}, {} states)",
                est.mean,
                est.std_err,
                set.len()
            ),
        ));
    }

    let u = c
        .test_functions(&scale)?
        .into_iter()
        .next()
        .unwrap_or_else(|| TestFunction::cosine(1));
    let lambda = c.lambdas()?[0];
    let f = l.solve_shifted(lambda, &project(&p, &speed, &u)?)?;
    let dynkin = dynkin_martingale_residual(&chain, &f, v.dynkin_time, v.dynkin_replicas, ctx.seed)?;
    checks.push(check(
        "martingale_residual",
        dynkin.within(0.0, v.sigmas),
        format!("{:.3e} +- {:.3e}", dynkin.mean, dynkin.std_err),
    ));

    let passed = checks.iter().all(|c| c.pass);
    let path = ctx.sink("verify")?.json(
        "verify.json",
        &VerifyResult {
            passed,
            checks: checks.clone(),
            identities,
        },
    )?;
    Ok((vec![path], checks))
}

pub fn read_config(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    LoadedConfig::parse(&text)
}
