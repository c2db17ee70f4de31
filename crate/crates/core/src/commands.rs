//! The four CLI verbs as library functions.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use log::{info, warn};

use crate::config::{ScenarioConfig, Units};
use crate::error::Error;
use crate::optimizer::trace::simplex_grid;
use crate::optimizer::{dual_solve, dual_solve_at, sum_rate, trace_boundary, RewardVector, Scenario, TracePoint};
use crate::output::{self, Comparison, Manifest};
use crate::plot::{line_plot, Series};
use crate::region::{RateVector, ReceiverModel};
use crate::simulator::{run_boundary, SimStats};
use crate::validate;

/// `ideal`, `ts`, `ps` or `all`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    One(ReceiverModel),
    All,
}

impl ModelChoice {
    pub fn models(self) -> Vec<ReceiverModel> {
        match self {
            ModelChoice::One(m) => vec![m],
            ModelChoice::All => ReceiverModel::ALL.to_vec(),
        }
    }
}

impl FromStr for ModelChoice {
    type Err = Error;

    fn from_str(s: &str) -> std::result::Result<Self, Error> {
        if s == "all" {
            Ok(ModelChoice::All)
        } else {
            s.parse().map(ModelChoice::One)
        }
    }
}

impl fmt::Display for ModelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelChoice::One(m) => write!(f, "{m}"),
            ModelChoice::All => f.write_str("all"),
        }
    }
}

/// Which scenario parameter a sweep moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Receiver deficit; consumption moves, ambient harvest stays.
    Deficit,
    /// Common mean harvest of every transmitter.
    Harvest,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> std::result::Result<Self, Error> {
        match s {
            "deficit" => Ok(SweepAxis::Deficit),
            "harvest" => Ok(SweepAxis::Harvest),
            _ => Err(Error::InvalidParameter(format!("unknown sweep axis '{s}'"))),
        }
    }
}

/// `a:b:steps` with optional units on `a` and `b`; returns J/slot values.
/// `steps` is the point count, and `a == b` always gives a single point.
pub fn parse_range(text: &str, units: &Units) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        bail!("range must look like a:b:steps, got '{text}'");
    }
    let a = units.parse(parts[0])?;
    let b = units.parse(parts[1])?;
    let n: usize = parts[2].trim().parse().with_context(|| format!("bad step count in '{text}'"))?;
    if a == b {
        return Ok(vec![a]);
    }
    if n < 2 {
        bail!("a range with distinct ends needs at least two steps");
    }
    Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect())
}

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))
}

fn rel(out: &Path, p: &Path) -> String {
    p.strip_prefix(out).unwrap_or(p).display().to_string()
}

/// Traced boundary of one model (or baseline).
#[derive(Debug, Clone)]
pub struct ModelTrace {
    pub name: String,
    pub scenario: Scenario,
    pub points: Vec<TracePoint>,
}

#[derive(Debug, Clone)]
pub struct RegionReport {
    pub traces: Vec<ModelTrace>,
    pub files: Vec<PathBuf>,
}

fn trace_curve(t: &ModelTrace) -> Series {
    Series {
        label: t.name.clone(),
        points: t
            .points
            .iter()
            .filter_map(|p| p.point())
            .map(|b| (b.avg_rates[0], b.avg_rates.as_slice().get(1).copied().unwrap_or(0.0)))
            .collect(),
    }
}

/// Trace the region boundary of each model; with `baselines`, also the ideal
/// receiver without minimum rates and the receiver powered only by its
/// ambient harvest (no RF transfer).
pub fn cmd_region(
    cfg: &ScenarioConfig,
    models: ModelChoice,
    out: &Path,
    mu_grid: Option<usize>,
    baselines: bool,
) -> Result<RegionReport> {
    prepare(out)?;
    let grid = mu_grid.unwrap_or(cfg.mu_grid);
    let opts = &cfg.solver;
    let mut traces = Vec::new();
    for model in models.models() {
        let scenario = cfg.scenario(model)?;
        info!("tracing {model} boundary with {grid} reward vectors");
        let points = trace_boundary(&scenario, grid, opts)?;
        traces.push(ModelTrace { name: model.short_name().into(), scenario, points });
    }
    if baselines {
        let ideal = cfg.scenario(ReceiverModel::Ideal)?;
        let free = ideal.with_rho(RateVector::zeros(ideal.num_users()));
        let points = trace_boundary(&free, grid, opts)?;
        traces.push(ModelTrace { name: "ideal_rho0".into(), scenario: free, points });

        // the receiver decodes only in the slots its ambient harvest can pay for
        let en = ideal.energetics;
        let off = if en.mean_consumption_rx > 0.0 { ideal.deficit() / en.mean_consumption_rx } else { 0.0 };
        let no_rf = cfg.scenario(ReceiverModel::TimeSwitching)?.with_deficit(0.0);
        let points = simplex_grid(no_rf.num_users(), grid)?
            .into_iter()
            .map(|(theta, mu)| {
                let result = dual_solve_at(&no_rf, &mu, opts, off);
                TracePoint { theta, mu, result }
            })
            .collect();
        traces.push(ModelTrace { name: "no_rf".into(), scenario: no_rf, points });
    }

    let mut files = Vec::new();
    for t in &traces {
        let l = t.scenario.num_users();
        let path = out.join(format!("boundary_{}.csv", t.name));
        output::write_boundary(&path, l, &t.points)?;
        files.push(path);
        let path = out.join(format!("bounds_{}.csv", t.name));
        output::write_bounds(&path, &t.scenario, &t.points)?;
        files.push(path);
        let failed = t.points.iter().filter(|p| p.result.is_err()).count();
        if failed > 0 {
            warn!("{}: {failed} of {} reward vectors failed", t.name, t.points.len());
        }
    }
    if traces.iter().all(|t| t.scenario.num_users() <= 2) {
        let path = out.join("region.svg");
        let series: Vec<Series> = traces.iter().map(trace_curve).collect();
        line_plot(&path, "Capacity region boundary", "R1 (bits/channel use)", "R2 (bits/channel use)", &series)?;
        files.push(path);
    }
    let mut manifest = Manifest::new("region", cfg.simulation.seed, cfg.hash());
    manifest.files = files.iter().map(|p| rel(out, p)).collect();
    files.push(manifest.write(out)?);
    Ok(RegionReport { traces, files })
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub params: Vec<f64>,
    pub models: Vec<ReceiverModel>,
    /// `sum_rates[k][m]`: sweep point `k`, model `m`; `None` when infeasible.
    pub sum_rates: Vec<Vec<Option<f64>>>,
    pub files: Vec<PathBuf>,
}

fn sweep_scenario(base: &Scenario, axis: SweepAxis, value: f64) -> Scenario {
    match axis {
        SweepAxis::Deficit => base.with_deficit(value),
        SweepAxis::Harvest => {
            let mut s = base.clone();
            s.mean_harvest_tx.iter_mut().for_each(|y| *y = value);
            s
        }
    }
}

/// Sum rate at the uniform reward vector across one swept parameter.
pub fn cmd_sweep(
    cfg: &ScenarioConfig,
    axis: SweepAxis,
    values: &[f64],
    models: ModelChoice,
    out: &Path,
) -> Result<SweepReport> {
    prepare(out)?;
    // fixed column order: ideal, ps, ts
    let models: Vec<ReceiverModel> = ReceiverModel::ALL.into_iter().filter(|m| models.models().contains(m)).collect();
    let bases = models.iter().map(|&m| cfg.scenario(m)).collect::<crate::Result<Vec<_>>>()?;
    let mut sum_rates = Vec::with_capacity(values.len());
    for &v in values {
        let row = bases
            .iter()
            .map(|base| {
                let s = sweep_scenario(base, axis, v);
                match sum_rate(&s, &cfg.solver) {
                    Ok(r) => Some(r),
                    Err(e) => {
                        warn!("{} at {v:e}: {e}", s.model);
                        None
                    }
                }
            })
            .collect();
        sum_rates.push(row);
    }
    let names: Vec<&str> = models.iter().map(|m| m.short_name()).collect();
    let csv_path = out.join("sweep.csv");
    let rows: Vec<(f64, Vec<Option<f64>>)> = values.iter().copied().zip(sum_rates.iter().cloned()).collect();
    output::write_sweep(&csv_path, &names, &rows)?;
    let svg_path = out.join("sweep.svg");
    let (label, scale) = match axis {
        SweepAxis::Deficit => ("receiver deficit (J/slot)", 1.0),
        SweepAxis::Harvest => ("mean transmitter harvest (J/slot)", 1.0),
    };
    let series: Vec<Series> = names
        .iter()
        .enumerate()
        .map(|(m, name)| Series {
            label: name.to_string(),
            points: values
                .iter()
                .zip(&sum_rates)
                .filter_map(|(&v, row)| row[m].map(|r| (v * scale, r)))
                .collect(),
        })
        .collect();
    line_plot(&svg_path, "Sum rate", label, "sum rate (bits/channel use)", &series)?;
    let mut files = vec![csv_path, svg_path];
    let mut manifest = Manifest::new("sweep", cfg.simulation.seed, cfg.hash());
    manifest.files = files.iter().map(|p| rel(out, p)).collect();
    files.push(manifest.write(out)?);
    Ok(SweepReport { params: values.to_vec(), models, sum_rates, files })
}

#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub model: ReceiverModel,
    pub stats: SimStats,
    pub comparison: Vec<Comparison>,
}

#[derive(Debug, Clone)]
pub struct SimulateReport {
    pub runs: Vec<SimulationRun>,
    pub files: Vec<PathBuf>,
}

/// Solve the uniform-reward boundary point with the configured backoff and
/// simulate its policy.
pub fn cmd_simulate(
    cfg: &ScenarioConfig,
    models: ModelChoice,
    horizon: Option<u64>,
    seed: Option<u64>,
    out: &Path,
) -> Result<SimulateReport> {
    prepare(out)?;
    let mut sim = cfg.sim_options()?;
    if let Some(h) = horizon {
        sim.horizon = h;
    }
    if let Some(s) = seed {
        sim.seed = s;
    }
    let mut solver = cfg.solver.clone();
    solver.backoff = cfg.simulation.backoff;
    let mut runs = Vec::new();
    let mut files = Vec::new();
    for model in models.models() {
        let scenario = cfg.scenario(model)?;
        let mu = RewardVector::uniform(scenario.num_users());
        let point = dual_solve(&scenario, &mu, &solver)
            .with_context(|| format!("{model}: no boundary point to simulate"))?;
        info!("simulating {model} for {} slots", sim.horizon);
        let stats = run_boundary(&scenario, &point, &sim)?;

        // time switching erases a fraction pi_e of the slots; power splitting
        // diverts that fraction of every slot's RF energy instead
        let (erasure_analytic, delivered_analytic) = match model {
            ReceiverModel::Ideal => (0.0, point.delivered),
            ReceiverModel::TimeSwitching => (point.pi_e, point.pi_e * point.delivered),
            ReceiverModel::PowerSplitting => (0.0, point.pi_e * point.delivered),
        };
        let mut comparison = vec![
            Comparison { quantity: "erasure_fraction".into(), analytic: erasure_analytic, empirical: stats.erasure_fraction },
            Comparison { quantity: "delivered".into(), analytic: delivered_analytic, empirical: stats.avg_delivered },
            Comparison { quantity: "rf_energy".into(), analytic: point.delivered, empirical: stats.avg_rf },
        ];
        if model == ReceiverModel::PowerSplitting && stats.avg_rf > 0.0 {
            comparison.push(Comparison {
                quantity: "split_fraction".into(),
                analytic: point.pi_e,
                empirical: stats.avg_delivered / stats.avg_rf,
            });
        }
        for i in 0..scenario.num_users() {
            comparison.push(Comparison {
                quantity: format!("avg_power_{}", i + 1),
                analytic: point.avg_powers[i],
                empirical: stats.avg_tx_power[i],
            });
        }
        for i in 0..scenario.num_users() {
            comparison.push(Comparison {
                quantity: format!("rate_{}", i + 1),
                analytic: point.avg_rates[i],
                empirical: stats.achieved_rate_estimate[i],
            });
        }
        let name = model.short_name();
        let p = out.join(format!("sim_{name}.csv"));
        output::write_sim_stats(&p, &stats)?;
        files.push(p);
        let p = out.join(format!("compare_{name}.csv"));
        output::write_comparison(&p, &comparison)?;
        files.push(p);
        if !stats.trace.is_empty() {
            let p = out.join(format!("trace_{name}.csv"));
            output::write_slot_trace(&p, &stats)?;
            files.push(p);
        }
        runs.push(SimulationRun { model, stats, comparison });
    }
    let mut manifest = Manifest::new("simulate", sim.seed, cfg.hash());
    manifest.files = files.iter().map(|p| rel(out, p)).collect();
    files.push(manifest.write(out)?);
    Ok(SimulateReport { runs, files })
}

/// Run the randomized oracle and property suite.
pub fn cmd_validate(cfg: &ScenarioConfig, instances: usize, seed: u64) -> Result<validate::Report> {
    validate::run_suite(cfg, instances, seed)
}
