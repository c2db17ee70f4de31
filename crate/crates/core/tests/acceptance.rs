//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use swipt_mac::commands::{cmd_region, cmd_simulate, ModelChoice};
use swipt_mac::config::ScenarioConfig;
use swipt_mac::optimizer::{
    dual_solve, sum_rate, trace_boundary, BoundaryPoint, RewardVector, Scenario, TracePoint,
};
use swipt_mac::region::{
    ergodic_bounds, feasible_min_rates, region_contains_tol, PolicyTable, RateVector, ReceiverModel,
};
use swipt_mac::simulator::{self, run_boundary, SimOptions, SwitchRule};
use swipt_mac::validate::oracle_gaps;
use swipt_mac::Error;

const TOL: f64 = 1e-6;
const MU_GRID: usize = 21;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

fn solved(points: &[TracePoint]) -> Vec<&BoundaryPoint> {
    points.iter().filter_map(|p| p.point()).collect()
}

fn failures(points: &[TracePoint]) -> usize {
    points.iter().filter(|p| p.result.is_err()).count()
}

/// Largest violation of `mu . r <= mu . R(mu)` over the traced reward
/// vectors, where `R(mu)` is the outer trace's optimum. Only meaningful when
/// the outer trace solves each weighted sum exactly (the ideal receiver).
fn support_violation(inner: &[&BoundaryPoint], outer: &[TracePoint]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for o in outer {
        let Some(best) = o.point() else { continue };
        let h = o.mu.dot(best.avg_rates.as_slice());
        for p in inner {
            worst = worst.max(o.mu.dot(p.avg_rates.as_slice()) - h);
        }
    }
    worst
}

/// Whether the policy behind `p` also achieves its rates under `outer` at
/// erasure fraction `pi_e`.
fn witnessed(p: &BoundaryPoint, s: &Scenario, outer: ReceiverModel, pi_e: f64) -> Result<bool, Error> {
    let bounds = ergodic_bounds(&p.policy, &s.fading, s.sigma2, outer, pi_e)?;
    Ok(region_contains_tol(&p.avg_rates, &bounds, &s.rho, TOL))
}

struct Traces {
    scenarios: Vec<Scenario>,
    traces: Vec<Vec<TracePoint>>,
    elapsed: Duration,
}

impl Traces {
    fn of(&self, model: ReceiverModel) -> (&Scenario, &[TracePoint]) {
        let k = ReceiverModel::ALL.iter().position(|&m| m == model).unwrap();
        (&self.scenarios[k], &self.traces[k])
    }
}

fn trace_all(cfg: &ScenarioConfig, delta: Option<f64>, grid: usize) -> Result<Traces, Error> {
    let t0 = Instant::now();
    let mut scenarios = Vec::new();
    let mut traces = Vec::new();
    for model in ReceiverModel::ALL {
        let mut s = cfg.scenario(model)?;
        if let Some(d) = delta {
            s = s.with_deficit(d);
        }
        traces.push(trace_boundary(&s, grid, &cfg.solver)?);
        scenarios.push(s);
    }
    Ok(Traces { scenarios, traces, elapsed: t0.elapsed() })
}

fn c1_oracle() -> Result<Outcome, Error> {
    let t0 = Instant::now();
    let g = oracle_gaps(1000, 2024)?;
    let secs = t0.elapsed().as_secs_f64();
    let passed = g.compared >= 900
        && g.equal_grid <= 1e-12
        && g.refined <= 1e-3
        && g.oracle_excess <= 1e-6
        && g.single_user <= 1e-9
        && g.single_user_grid <= 1.0
        && secs < 60.0;
    Ok(Outcome::new(
        passed,
        format!(
            "{} instances; equal-grid gap {:.1e}, continuous-oracle gap {:.1e} (solver short by {:.1e}), single-user error {:.1e} (grid {:.3} steps), {secs:.1} s",
            g.compared, g.equal_grid, g.refined.max(0.0), g.oracle_excess.max(0.0), g.single_user, g.single_user_grid
        ),
    ))
}

fn c2_nesting(t: &Traces) -> Result<Outcome, Error> {
    let (ideal_s, ideal) = t.of(ReceiverModel::Ideal);
    let (ps_s, ps) = t.of(ReceiverModel::PowerSplitting);
    let (ts_s, ts) = t.of(ReceiverModel::TimeSwitching);
    let failed = failures(ideal) + failures(ps) + failures(ts);

    let mut outside = 0;
    for p in solved(ts) {
        outside += !witnessed(p, ts_s, ReceiverModel::PowerSplitting, p.pi_e)? as usize;
    }
    for p in solved(ps) {
        outside += !witnessed(p, ps_s, ReceiverModel::Ideal, 0.0)? as usize;
    }
    let mut inner = solved(ps);
    inner.extend(solved(ts));
    let support = support_violation(&inner, ideal);

    let mut best_gain = f64::NEG_INFINITY;
    for (a, b) in ps.iter().zip(ts) {
        if let (Some(a), Some(b)) = (a.point(), b.point()) {
            if b.pi_e > 0.0 {
                best_gain = best_gain.max(a.sum_rate() - b.sum_rate());
            }
        }
    }
    let states = ideal_s.fading.num_states();
    let secs = t.elapsed.as_secs_f64();
    let passed = failed == 0 && outside == 0 && support <= TOL && best_gain > TOL && secs < 300.0;
    Ok(Outcome::new(
        passed,
        format!(
            "{states} states, mu-grid {MU_GRID}; {failed} unsolved, {outside} points outside, ideal support excess {support:.1e}, max PS-TS sum-rate gain {best_gain:.4}, {secs:.1} s"
        ),
    ))
}

fn c3_collapse(cfg: &ScenarioConfig) -> Result<Outcome, Error> {
    let t = trace_all(cfg, Some(0.0), MU_GRID)?;
    let (_, ideal) = t.of(ReceiverModel::Ideal);
    let mut worst = 0.0f64;
    let mut failed = 0;
    for model in [ReceiverModel::PowerSplitting, ReceiverModel::TimeSwitching] {
        let (_, other) = t.of(model);
        for (a, b) in ideal.iter().zip(other) {
            match (a.point(), b.point()) {
                (Some(a), Some(b)) => {
                    for (x, y) in a.avg_rates.as_slice().iter().zip(b.avg_rates.as_slice()) {
                        worst = worst.max((x - y).abs());
                    }
                }
                _ => failed += 1,
            }
        }
    }
    Ok(Outcome::new(
        failed == 0 && worst <= TOL,
        format!("max pointwise difference {worst:.1e} bits, {failed} unsolved"),
    ))
}

fn c4_shrinkage(cfg: &ScenarioConfig) -> Result<Outcome, Error> {
    let units = cfg.units()?;
    let deltas: Vec<f64> = [0.0, 10.0, 20.0, 30.0, 40.0]
        .iter()
        .map(|uw| units.parse(&format!("{uw} uW")))
        .collect::<Result<_, _>>()?;
    let grid = 11;
    let mut sums: Vec<Vec<f64>> = Vec::new();
    let mut traces: Vec<Traces> = Vec::new();
    for &d in &deltas {
        let mut row = Vec::new();
        for model in ReceiverModel::ALL {
            row.push(sum_rate(&cfg.scenario(model)?.with_deficit(d), &cfg.solver)?);
        }
        sums.push(row);
        traces.push(trace_all(cfg, Some(d), grid)?);
    }

    let mut rise = f64::NEG_INFINITY;
    for w in sums.windows(2) {
        for (now, before) in w[1].iter().zip(&w[0]) {
            rise = rise.max(now - before);
        }
    }
    let mut outside = 0;
    let mut unsolved = 0;
    let mut support = f64::NEG_INFINITY;
    for k in 1..deltas.len() {
        for model in ReceiverModel::ALL {
            let (s, larger) = traces[k].of(model);
            let (_, smaller) = traces[k - 1].of(model);
            unsolved += failures(larger);
            for p in solved(larger) {
                // the same policy meets the smaller deficit with fewer erasures
                let pi = if model.uses_erasures() { deltas[k - 1] / p.delivered } else { 0.0 };
                outside += !witnessed(p, s, model, pi)? as usize;
            }
            if model == ReceiverModel::Ideal {
                support = support.max(support_violation(&solved(larger), smaller));
            }
        }
    }
    let table: Vec<String> = sums.iter().map(|r| format!("{:.4}/{:.4}/{:.4}", r[0], r[1], r[2])).collect();
    Ok(Outcome::new(
        rise <= TOL && outside == 0 && unsolved == 0 && support <= TOL,
        format!(
            "sum rates ideal/ps/ts {}; max rise {rise:.1e}, {outside} points outside, ideal support excess {support:.1e}",
            table.join(" ")
        ),
    ))
}

fn c5_min_rates(cfg: &ScenarioConfig, t: &Traces) -> Result<Outcome, Error> {
    let mut rate_violations = 0;
    let mut state_violations = 0;
    let mut worst_margin = f64::INFINITY;
    for model in ReceiverModel::ALL {
        let (s, points) = t.of(model);
        let rho = s.rho.as_slice();
        for p in solved(points) {
            for (r, q) in p.avg_rates.as_slice().iter().zip(rho) {
                worst_margin = worst_margin.min(r - q);
                rate_violations += (*r < q - 1e-9) as usize;
            }
            for st in 0..s.fading.num_states() {
                let h = s.fading.state(st);
                let ok = feasible_min_rates(h, p.policy.row(st), &s.rho, s.sigma2, model, p.pi_e)?
                    && p.rates.row(st).iter().zip(rho).all(|(r, q)| *r >= q - 1e-9);
                state_violations += !ok as usize;
            }
        }
    }
    let (ideal_s, ideal) = t.of(ReceiverModel::Ideal);
    let free = ideal_s.with_rho(RateVector::zeros(ideal_s.num_users()));
    let free_trace = trace_boundary(&free, MU_GRID, &cfg.solver)?;
    let support = support_violation(&solved(ideal), &free_trace);
    Ok(Outcome::new(
        rate_violations == 0 && state_violations == 0 && support <= TOL && failures(&free_trace) == 0,
        format!(
            "{rate_violations} average and {state_violations} per-state violations, min margin {worst_margin:.4}; support excess over rho=0 region {support:.1e}"
        ),
    ))
}

fn sim_options(cfg: &ScenarioConfig) -> Result<SimOptions, Error> {
    let mut o = cfg.sim_options()?;
    o.horizon = 1_000_000;
    o.switch_rule = SwitchRule::Bernoulli;
    Ok(o)
}

fn c6_simulator(cfg: &ScenarioConfig) -> Result<Outcome, Error> {
    let t0 = Instant::now();
    let eps = cfg.simulation.backoff;
    let s = cfg.scenario(ReceiverModel::TimeSwitching)?;
    let delta = s.deficit();
    let targets: Vec<f64> = s.mean_harvest_tx.iter().map(|y| (1.0 - eps) * y).collect();
    let opts = sim_options(cfg)?;

    let mut solver = cfg.solver.clone();
    solver.backoff = eps;
    let point = dual_solve(&s, &RewardVector::uniform(s.num_users()), &solver)?;
    let optimized = run_boundary(&s, &point, &opts)?;

    // every state transmits the backed-off mean
    let constant = PolicyTable::constant(s.fading.num_states(), &targets)?;
    let rf: f64 = s.energetics.eta
        * targets.iter().zip(s.fading.marginals()).map(|(t, m)| t * m.mean()).sum::<f64>();
    let pi_const = delta / rf;
    let reference = simulator::run(&s, &constant, None, pi_const, &opts)?;

    let mut passed = true;
    let mut parts = Vec::new();
    for (name, pi, stats) in [("optimized", point.pi_e, &optimized), ("constant", pi_const, &reference)] {
        let pi_err = (stats.erasure_fraction - pi).abs();
        let power_err = stats
            .avg_tx_power
            .iter()
            .zip(&targets)
            .map(|(p, t)| (p / t - 1.0).abs())
            .fold(0.0, f64::max);
        let short = 1.0 - stats.avg_delivered / delta;
        passed &= pi_err < 0.01 && power_err < 0.01 && short <= 0.02;
        parts.push(format!(
            "{name}: pi {pi:.4} vs {:.4}, power error {:.2}%, delivered/deficit {:.4}",
            stats.erasure_fraction,
            100.0 * power_err,
            stats.avg_delivered / delta
        ));
    }
    let secs = t0.elapsed().as_secs_f64();
    passed &= secs < 60.0;
    Ok(Outcome::new(passed, format!("{}; {secs:.1} s", parts.join("; "))))
}

fn c7_buffer_growth(cfg: &ScenarioConfig) -> Result<Outcome, Error> {
    let s = cfg.scenario(ReceiverModel::TimeSwitching)?;
    let mut solver = cfg.solver.clone();
    solver.backoff = cfg.simulation.backoff;
    let point = dual_solve(&s, &RewardVector::uniform(s.num_users()), &solver)?;
    let seeds = 20;
    let l = s.num_users();
    let mut grew = 0;
    let mut clip_early = vec![0.0; l];
    let mut clip_late = vec![0.0; l];
    for seed in 1..=seeds {
        let mut opts = sim_options(cfg)?;
        opts.seed = seed;
        opts.checkpoints = vec![10_000, 1_000_000];
        let stats = run_boundary(&s, &point, &opts)?;
        let (a, b) = (&stats.checkpoints[0], &stats.checkpoints[1]);
        grew += a.tx_buffers.iter().zip(&b.tx_buffers).all(|(x, y)| y > x) as usize;
        for i in 0..l {
            clip_early[i] += a.clip_fraction[i] / seeds as f64;
            clip_late[i] += b.clip_fraction[i] / seeds as f64;
        }
    }
    let decreasing = clip_early.iter().zip(&clip_late).all(|(e, l)| l < e);
    let fmt = |v: &[f64]| v.iter().map(|c| format!("{c:.2e}")).collect::<Vec<_>>().join(",");
    Ok(Outcome::new(
        grew * 100 >= 95 * seeds as usize && decreasing,
        format!(
            "buffers grew on {grew}/{seeds} seeds; mean clip fraction at 1e4 [{}] vs 1e6 [{}]",
            fmt(&clip_early),
            fmt(&clip_late)
        ),
    ))
}

const CONSTANT_GAINS: &str = r#"
power_unit = "W"
slot_duration = 1e-6
sigma2 = 1.0

[transmitters]
mean_harvest = [5.0, 3.0]

[fading]
kind = "constant"
gains = [0.1, 0.1]

[receiver]
mean_harvest = "10 uW"
mean_consumption = "20 uW"
eta = 1e-5
"#;

fn c8_infeasible() -> Result<Outcome, Error> {
    let cfg = ScenarioConfig::from_toml(CONSTANT_GAINS)?;
    let s = cfg.scenario(ReceiverModel::Ideal)?;
    let reach: f64 = s.fading.state(0).iter().zip(&s.mean_harvest_tx).map(|(g, y)| g * y).sum();
    let ratio = s.deficit() / s.energetics.eta / reach;

    let mut raised = 0;
    let mut total = 0;
    for model in ReceiverModel::ALL {
        let sc = cfg.scenario(model)?;
        total += 1;
        raised += matches!(sum_rate(&sc, &cfg.solver), Err(Error::InfeasibleEnergy(_))) as usize;
    }
    let dir = tempfile::tempdir().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let report = cmd_region(&cfg, ModelChoice::All, dir.path(), Some(5), false)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut region_points = 0;
    for t in &report.traces {
        for p in &t.points {
            total += 1;
            match &p.result {
                Err(Error::InfeasibleEnergy(_)) => raised += 1,
                Ok(_) => region_points += 1,
                Err(_) => {}
            }
        }
    }
    // control: ten times the gain is reachable
    let feasible = ScenarioConfig::from_toml(&CONSTANT_GAINS.replace("[0.1, 0.1]", "[1.0, 1.0]"))?;
    let control = sum_rate(&feasible.scenario(ReceiverModel::TimeSwitching)?, &feasible.solver).is_ok();
    Ok(Outcome::new(
        ratio > 1.0 && raised == total && region_points == 0 && control,
        format!("deficit/eta is {ratio:.3}x the reachable energy; {raised}/{total} calls raised infeasible energy; feasible control solved: {control}"),
    ))
}

fn read_csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn c9_determinism(cfg: &ScenarioConfig) -> Result<Outcome, Error> {
    let run = |seed: u64| {
        let dir = tempfile::tempdir().unwrap();
        cmd_simulate(cfg, ModelChoice::All, Some(200_000), Some(seed), dir.path()).unwrap();
        read_csvs(dir.path())
    };
    let (a, b, c) = (run(11), run(11), run(12));
    let identical = !a.is_empty() && a == b;
    let differs = a != c;
    Ok(Outcome::new(
        identical && differs,
        format!("{} CSV files byte-identical: {identical}; another seed differs: {differs}", a.len()),
    ))
}

fn main() {
    let cfg = ScenarioConfig::reference();
    let mut all = true;
    let mut report = |n: usize, name: &str, r: Result<Outcome, Error>| {
        let o = r.unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        all &= o.passed;
        println!("{} [{n}] {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
    };

    report(1, "oracle equivalence", c1_oracle());
    let reference = trace_all(&cfg, None, MU_GRID);
    match &reference {
        Ok(t) => {
            report(2, "region nesting", c2_nesting(t));
        }
        Err(e) => report(2, "region nesting", Err(e.clone())),
    }
    report(3, "zero-deficit collapse", c3_collapse(&cfg));
    report(4, "monotone shrinkage", c4_shrinkage(&cfg));
    match &reference {
        Ok(t) => report(5, "minimum-rate enforcement", c5_min_rates(&cfg, t)),
        Err(e) => report(5, "minimum-rate enforcement", Err(e.clone())),
    }
    report(6, "simulator agreement", c6_simulator(&cfg));
    report(7, "buffer growth", c7_buffer_growth(&cfg));
    report(8, "infeasibility detection", c8_infeasible());
    report(9, "determinism", c9_determinism(&cfg));

    if !all {
        std::process::exit(1);
    }
}
