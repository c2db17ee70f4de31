//! Multiplier search for one reward vector.
//!
//! Transmitter multipliers are found by Gauss-Seidel sweeps: each sweep solves
//! `E[T_i](lambda_s(i)) = target_i` for one user at a time with a bracketed
//! Illinois iteration in `ln(lambda_s(i) - lambda_r h_max(i))`. The receiver
//! multiplier stays at zero unless the RF delivery falls short of the deficit,
//! in which case it is located by an outer root search. For erasure-based
//! receivers the whole search runs inside a damped fixed-point iteration on
//! the erasure fraction.

use log::{debug, trace};

use crate::error::{invalid, Error, Result};
use crate::region::{allocate_rates, CapacityScaling, PolicyTable, RateVector, ReceiverModel};

use super::state::ExactSolver;
use super::{BoundaryPoint, Multipliers, RewardVector, Scenario, SolverOptions};

const MAX_BRACKET_STEPS: usize = 200;
const MAX_ROOT_ITER: usize = 200;
const U_WIDTH_TOL: f64 = 1e-13;

/// Solve for the boundary point selected by `mu`.
pub fn dual_solve(scenario: &Scenario, mu: &RewardVector, opts: &SolverOptions) -> Result<BoundaryPoint> {
    let l = scenario.num_users();
    if mu.len() != l {
        return Err(Error::DimensionMismatch(format!("{} rewards for {l} users", mu.len())));
    }
    if !(0.0..1.0).contains(&opts.backoff) {
        return Err(invalid("backoff must lie in [0, 1)"));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(invalid("damping must lie in (0, 1]"));
    }
    let mut ctx = DualContext::new(scenario, mu, opts);
    ctx.check_energy_reachable()?;

    let delta = scenario.deficit();
    let model = scenario.model;
    if !model.uses_erasures() || delta == 0.0 {
        let pi_e = 0.0;
        ctx.solve_at(pi_e)?;
        return ctx.finish(pi_e);
    }

    let eta = scenario.energetics.eta;
    let constant_delivery: f64 = (0..l)
        .map(|i| ctx.targets[i] * scenario.fading.marginals()[i].mean())
        .sum::<f64>()
        * eta;
    let mut pi_e = (delta / constant_delivery).min(0.99);
    for iter in 0..opts.max_fixed_point_iter {
        let delivered = ctx.solve_at(pi_e)?;
        let implied = delta / delivered;
        if implied > 1.0 + 1e-12 {
            return Err(Error::InfeasibleEnergy(format!(
                "erasure fraction would exceed one ({implied:.6})"
            )));
        }
        let residual = (pi_e - implied).abs();
        trace!("fixed point {iter}: pi_e = {pi_e:.9}, implied = {implied:.9}");
        if residual <= opts.fixed_point_tol {
            debug!("erasure fraction converged to {pi_e:.9} after {} iterations", iter + 1);
            return ctx.finish(pi_e);
        }
        pi_e = ((1.0 - opts.damping) * pi_e + opts.damping * implied).min(1.0);
    }
    Err(Error::NoFixedPoint(format!(
        "erasure fraction did not settle within {} iterations",
        opts.max_fixed_point_iter
    )))
}

/// Boundary point at a prescribed erasure fraction instead of the
/// self-consistent one. The receiver energy constraint is still enforced.
pub fn dual_solve_at(
    scenario: &Scenario,
    mu: &RewardVector,
    opts: &SolverOptions,
    pi_e: f64,
) -> Result<BoundaryPoint> {
    if mu.len() != scenario.num_users() {
        return Err(Error::DimensionMismatch("reward vector length".into()));
    }
    let mut ctx = DualContext::new(scenario, mu, opts);
    ctx.check_energy_reachable()?;
    ctx.solve_at(pi_e)?;
    ctx.finish(pi_e)
}

/// Sum of average rates at the uniform reward vector.
pub fn sum_rate(scenario: &Scenario, opts: &SolverOptions) -> Result<f64> {
    let mu = RewardVector::uniform(scenario.num_users());
    Ok(dual_solve(scenario, &mu, opts)?.sum_rate())
}

struct DualContext<'a> {
    scenario: &'a Scenario,
    mu: &'a RewardVector,
    opts: &'a SolverOptions,
    effective_mu: Vec<f64>,
    targets: Vec<f64>,
    max_gain: Vec<f64>,
    lambda: Vec<f64>,
    lambda_rx: f64,
    policy: PolicyTable,
    solver: ExactSolver,
    costs: Vec<f64>,
    scaling: CapacityScaling,
    avg_powers: Vec<f64>,
    received: f64,
}

impl<'a> DualContext<'a> {
    fn new(scenario: &'a Scenario, mu: &'a RewardVector, opts: &'a SolverOptions) -> Self {
        let l = scenario.num_users();
        let top = mu.as_slice().iter().copied().fold(0.0, f64::max);
        let effective_mu: Vec<f64> =
            mu.as_slice().iter().map(|&m| m.max(top * opts.reward_floor)).collect();
        let targets: Vec<f64> =
            scenario.mean_harvest_tx.iter().map(|y| y * (1.0 - opts.backoff)).collect();
        let max_gain: Vec<f64> = (0..l).map(|i| scenario.fading.max_gain(i)).collect();
        // water-filling level as a starting point: lambda ~ mu / (2 ln2 (P + sigma2 / E[h]))
        let lambda = (0..l)
            .map(|i| {
                let mean_h = scenario.fading.marginals()[i].mean();
                effective_mu[i]
                    / (2.0 * std::f64::consts::LN_2 * (targets[i] + scenario.sigma2 / mean_h))
            })
            .collect();
        Self {
            scenario,
            mu,
            opts,
            effective_mu,
            targets,
            max_gain,
            lambda,
            lambda_rx: 0.0,
            policy: PolicyTable::zeros(scenario.fading.num_states(), l),
            solver: ExactSolver::new(l),
            costs: vec![0.0; l],
            scaling: CapacityScaling { prelog: 1.0, snr_scale: 1.0 },
            avg_powers: vec![0.0; l],
            received: 0.0,
        }
    }

    fn num_users(&self) -> usize {
        self.targets.len()
    }

    /// Remark-style upper bound: every joule sent in the best fade state.
    fn check_energy_reachable(&self) -> Result<()> {
        let delta = self.scenario.deficit();
        if delta == 0.0 {
            return Ok(());
        }
        let eta = self.scenario.energetics.eta;
        let ceiling: f64 =
            eta * (0..self.num_users()).map(|i| self.max_gain[i] * self.targets[i]).sum::<f64>();
        if delta > ceiling * (1.0 + 1e-12) {
            return Err(Error::InfeasibleEnergy(format!(
                "deficit {delta:e} J/slot exceeds the largest deliverable RF energy {ceiling:e} J/slot"
            )));
        }
        Ok(())
    }

    /// Evaluate the per-state optimum at the current multipliers, filling the
    /// policy, average powers and received power.
    fn evaluate(&mut self) -> Result<()> {
        let l = self.num_users();
        let table = &self.scenario.fading;
        self.avg_powers.iter_mut().for_each(|p| *p = 0.0);
        self.received = 0.0;
        for s in 0..table.num_states() {
            let h = table.state(s);
            for i in 0..l {
                self.costs[i] = (self.lambda[i] - self.lambda_rx * h[i]) / h[i];
                if !(self.costs[i] > 0.0) {
                    return Err(Error::UnboundedObjective(format!(
                        "user {} has non-positive transmit cost",
                        i + 1
                    )));
                }
            }
            let row = self.policy.row_mut(s);
            self.solver.solve(
                h,
                &self.effective_mu,
                self.scenario.rho.as_slice(),
                &self.costs,
                self.scenario.sigma2,
                self.scaling,
                row,
            )?;
            let p = table.prob(s);
            for i in 0..l {
                self.avg_powers[i] += p * row[i];
                self.received += p * h[i] * row[i];
            }
        }
        Ok(())
    }

    fn residual(&self, user: usize) -> f64 {
        self.avg_powers[user] / self.targets[user] - 1.0
    }

    fn floor(&self, user: usize) -> f64 {
        self.lambda_rx * self.max_gain[user]
    }

    /// Single-user lower bound on the power the minimum rate needs.
    fn check_min_rates(&self) -> Result<()> {
        let table = &self.scenario.fading;
        for i in 0..self.num_users() {
            let rho = self.scenario.rho[i];
            if rho == 0.0 {
                continue;
            }
            let need = table.expect(|h| {
                self.scaling.required_power(rho, self.scenario.sigma2) / h[i]
            });
            if !(need <= self.targets[i]) {
                return Err(Error::InfeasibleScenario(format!(
                    "user {} needs {need:e} J/slot on average for its minimum rate but has {:e}",
                    i + 1,
                    self.targets[i]
                )));
            }
        }
        Ok(())
    }

    /// Set `lambda_s(i) = floor + e^u` and re-solve. With `nested`, the users
    /// after `i` are re-balanced first so the residual of `i` is monotone in `u`.
    fn eval_at(&mut self, i: usize, floor: f64, u: f64, nested: bool) -> Result<f64> {
        self.lambda[i] = floor + u.exp();
        if nested && i + 1 < self.num_users() {
            self.solve_user(i + 1, true)?;
        } else {
            self.evaluate()?;
        }
        Ok(self.residual(i))
    }

    /// Root of `E[T_i] = target_i` in `lambda_s(i)`.
    fn solve_user(&mut self, i: usize, nested: bool) -> Result<()> {
        let floor = self.floor(i);
        let mut u = (self.lambda[i] - floor).max(self.lambda[i] * 1e-3).max(f64::MIN_POSITIVE).ln();
        let mut f = self.eval_at(i, floor, u, nested)?;
        if f.abs() <= self.opts.power_tol {
            return Ok(());
        }
        // f is decreasing in u
        let (mut a, mut fa, mut b, mut fb);
        let dir = if f > 0.0 { 1.0 } else { -1.0 };
        let mut step = 0.5;
        let mut steps = 0;
        loop {
            let u_next = u + dir * step;
            let f_next = self.eval_at(i, floor, u_next, nested)?;
            if f_next.abs() <= self.opts.power_tol {
                return Ok(());
            }
            if (f_next > 0.0) != (f > 0.0) {
                if dir > 0.0 {
                    (a, fa, b, fb) = (u, f, u_next, f_next);
                } else {
                    (a, fa, b, fb) = (u_next, f_next, u, f);
                }
                break;
            }
            u = u_next;
            f = f_next;
            step *= 2.0;
            steps += 1;
            if steps >= MAX_BRACKET_STEPS || u.abs() > 700.0 {
                return Err(if dir > 0.0 {
                    Error::InfeasibleScenario(format!(
                        "user {} cannot lower its average power to {:e} J/slot",
                        i + 1,
                        self.targets[i]
                    ))
                } else {
                    Error::NoConvergence(format!(
                        "user {} cannot raise its average power to {:e} J/slot",
                        i + 1,
                        self.targets[i]
                    ))
                });
            }
        }
        // Illinois on [a, b] with fa > 0 > fb
        let mut side = 0i8;
        let mut best = if fa.abs() < fb.abs() { a } else { b };
        let mut best_f = fa.abs().min(fb.abs());
        for _ in 0..MAX_ROOT_ITER {
            let mut c = (a * fb - b * fa) / (fb - fa);
            if !(c > a && c < b) {
                c = 0.5 * (a + b);
            }
            let fc = self.eval_at(i, floor, c, nested)?;
            if fc.abs() <= self.opts.power_tol {
                return Ok(());
            }
            if fc.abs() < best_f {
                best = c;
                best_f = fc.abs();
            }
            if fc > 0.0 {
                a = c;
                fa = fc;
                if side == 1 {
                    fb *= 0.5;
                }
                side = 1;
            } else {
                b = c;
                fb = fc;
                if side == -1 {
                    fa *= 0.5;
                }
                side = -1;
            }
            if b - a <= U_WIDTH_TOL * (1.0 + a.abs().max(b.abs())) {
                break;
            }
        }
        // the map can be steep enough that the bracket closes before the
        // tolerance is met; settle on the best point seen
        self.eval_at(i, floor, best, nested)?;
        trace!("user {} bracket closed with residual {:e}", i + 1, self.residual(i));
        Ok(())
    }

    fn worst_residual(&self) -> f64 {
        (0..self.num_users()).map(|i| self.residual(i).abs()).fold(0.0, f64::max)
    }

    /// Transmitter multipliers at the current receiver multiplier.
    ///
    /// Gauss-Seidel sweeps are cheap but crawl when the power map is nearly
    /// discontinuous (many fade states tie in decoding order at once); after
    /// `max_sweeps` the search falls back to nested root finding.
    fn sweep(&mut self) -> Result<()> {
        let l = self.num_users();
        for round in 0..self.opts.max_sweeps {
            for i in 0..l {
                self.solve_user(i, false)?;
            }
            if self.worst_residual() <= self.opts.power_tol {
                trace!("sweeps converged after {} rounds", round + 1);
                return Ok(());
            }
        }
        if l > 1 {
            debug!("sweeps stalled at {:e}; nested search", self.worst_residual());
            self.solve_user(0, true)?;
        }
        let worst = self.worst_residual();
        if worst <= self.opts.power_accept_tol {
            return Ok(());
        }
        Err(Error::NoConvergence(format!("power targets missed by {worst:e} (relative)")))
    }

    fn delivered(&self) -> f64 {
        self.scenario.energetics.eta * self.received
    }

    /// Multipliers and policy at a fixed erasure fraction; returns the delivered RF energy.
    fn solve_at(&mut self, pi_e: f64) -> Result<f64> {
        self.scaling = CapacityScaling::new(self.scenario.model, pi_e)?;
        self.check_min_rates()?;
        let delta = self.scenario.deficit();

        self.lambda_rx = 0.0;
        self.sweep()?;
        if self.delivered() >= delta {
            return Ok(self.delivered());
        }

        debug!("RF delivery {:e} below deficit {delta:e}; activating receiver multiplier", self.delivered());
        // g(lambda_r) = delivered - delta is increasing in lambda_r
        let scale = (0..self.num_users())
            .map(|i| self.lambda[i] / self.max_gain[i])
            .fold(f64::INFINITY, f64::min);
        let (mut lo, mut g_lo) = (0.0, self.delivered() - delta);
        let mut hi = 0.25 * scale;
        let mut g_hi;
        let mut expansions = 0;
        loop {
            self.lambda_rx = hi;
            self.sweep()?;
            g_hi = self.delivered() - delta;
            if g_hi >= 0.0 {
                break;
            }
            lo = hi;
            g_lo = g_hi;
            hi *= 2.0;
            expansions += 1;
            if expansions > 80 {
                return Err(Error::InfeasibleEnergy(format!(
                    "RF delivery saturates at {:e} J/slot below the deficit {delta:e}",
                    self.delivered()
                )));
            }
        }
        let mut side = 0i8;
        for _ in 0..MAX_ROOT_ITER {
            let mut c = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
            if !(c > lo && c < hi) {
                c = 0.5 * (lo + hi);
            }
            self.lambda_rx = c;
            self.sweep()?;
            let g = self.delivered() - delta;
            if g >= 0.0 && g <= self.opts.power_tol * delta {
                break;
            }
            if g < 0.0 {
                lo = c;
                g_lo = g;
                if side == -1 {
                    g_hi *= 0.5;
                }
                side = -1;
            } else {
                hi = c;
                g_hi = g;
                if side == 1 {
                    g_lo *= 0.5;
                }
                side = 1;
            }
            if hi - lo <= 1e-14 * hi {
                self.lambda_rx = hi;
                self.sweep()?;
                break;
            }
        }
        if self.delivered() < delta * (1.0 - 1e-9) {
            return Err(Error::NoConvergence("receiver multiplier search stalled".into()));
        }
        Ok(self.delivered())
    }

    fn finish(self, pi_e: f64) -> Result<BoundaryPoint> {
        let table = &self.scenario.fading;
        let l = self.num_users();
        let mut rates = PolicyTable::zeros(table.num_states(), l);
        let mut avg_rates = vec![0.0; l];
        for s in 0..table.num_states() {
            let h = table.state(s);
            let r = allocate_rates(
                h,
                self.policy.row(s),
                &self.effective_mu,
                self.scenario.rho.as_slice(),
                self.scenario.sigma2,
                self.scaling,
            )
            .ok_or_else(|| {
                Error::InfeasibleMinRate(format!("state {s} misses the minimum rates"))
            })?;
            for i in 0..l {
                avg_rates[i] += table.prob(s) * r[i];
            }
            rates.row_mut(s).copy_from_slice(&r);
        }
        let delivered = self.delivered();
        Ok(BoundaryPoint {
            mu: self.mu.clone(),
            avg_rates: RateVector::new(avg_rates)?,
            policy: self.policy,
            rates,
            multipliers: Multipliers { lambda_tx: self.lambda, lambda_rx: self.lambda_rx },
            pi_e: if self.scenario.model == ReceiverModel::Ideal { 0.0 } else { pi_e },
            delivered,
            avg_powers: self.avg_powers,
            model: self.scenario.model,
        })
    }
}
