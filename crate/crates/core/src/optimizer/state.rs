//! Per-fade-state Lagrangian problem.
//!
//! For a fade vector `h` the inner problem is
//!
//! ```text
//! max_t  max_{r in C(h,t), r >= rho}  sum_i mu(i) r(i) - w(i) t(i),   w(i) = lambda_s(i) - lambda_r h(i)
//! ```
//!
//! Writing received powers `p(i) = h(i) t(i)`, the powers that support a rate
//! vector `r` form a contrapolymatroid, and the cheapest vertex decodes users in
//! order of decreasing cost `w(i)/h(i)`. With that order fixed the problem is
//! separable in the prefix sums `x_k` of the rates, concave, and subject only
//! to the chain `x_k - x_{k-1} >= rho`. Pool-adjacent-violators solves it in
//! closed form because every pooled block has an explicit stationary point.

use crate::error::{Error, Result};
use crate::region::{allocate_rates, CapacityScaling, ReceiverModel};

use super::Multipliers;

/// Relative cost gap below which two users count as tied. Inside the band the
/// solution is blended between both decoding orders so that average powers
/// move continuously with the multipliers.
pub const TIE_BAND: f64 = 1e-7;

/// Uniform grid over per-user transmit energies `{0, cap/(n-1), .., cap}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerGrid {
    pub caps: Vec<f64>,
    pub points: usize,
}

impl PowerGrid {
    pub fn new(caps: Vec<f64>, points: usize) -> Result<Self> {
        if points < 1 || caps.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
            return Err(Error::InvalidParameter("grid needs >= 1 point and finite caps".into()));
        }
        Ok(Self { caps, points })
    }

    pub fn step(&self, user: usize) -> f64 {
        if self.points == 1 {
            self.caps[user]
        } else {
            self.caps[user] / (self.points - 1) as f64
        }
    }

    /// Grid coordinate `k` of `user`. A one-point grid sits at the cap.
    pub fn value(&self, user: usize, k: usize) -> f64 {
        if self.points == 1 {
            self.caps[user]
        } else {
            self.caps[user] * k as f64 / (self.points - 1) as f64
        }
    }
}

/// How [`per_state_solve`] searches the power space.
#[derive(Debug, Clone, PartialEq)]
pub enum PowerSearch {
    /// Closed-form optimum over all nonnegative powers.
    Exact,
    /// Best point of a finite grid.
    Grid(PowerGrid),
}

/// Inputs of one per-state problem.
#[derive(Debug, Clone, Copy)]
pub struct StateProblem<'a> {
    pub h: &'a [f64],
    pub mu: &'a [f64],
    pub multipliers: &'a Multipliers,
    pub rho: &'a [f64],
    pub sigma2: f64,
    pub model: ReceiverModel,
    pub pi_e: f64,
}

impl StateProblem<'_> {
    pub fn num_users(&self) -> usize {
        self.h.len()
    }

    /// Net transmit cost `lambda_s(i) - lambda_r h(i)` per unit energy.
    pub fn weight(&self, user: usize) -> f64 {
        self.multipliers.lambda_tx[user] - self.multipliers.lambda_rx * self.h[user]
    }

    fn validate(&self) -> Result<CapacityScaling> {
        let l = self.h.len();
        if l == 0
            || self.mu.len() != l
            || self.rho.len() != l
            || self.multipliers.lambda_tx.len() != l
        {
            return Err(Error::DimensionMismatch("per-state inputs disagree in length".into()));
        }
        if !(self.sigma2 > 0.0) {
            return Err(Error::InvalidParameter("noise variance must be positive".into()));
        }
        CapacityScaling::new(self.model, self.pi_e)
    }

    /// Lagrangian value of a power vector, `-inf` if the minimum rates do not fit.
    pub fn objective(&self, t: &[f64]) -> f64 {
        let scaling = match CapacityScaling::new(self.model, self.pi_e) {
            Ok(s) => s,
            Err(_) => return f64::NEG_INFINITY,
        };
        match allocate_rates(self.h, t, self.mu, self.rho, self.sigma2, scaling) {
            Some(r) => self.value(&r, t),
            None => f64::NEG_INFINITY,
        }
    }

    fn value(&self, r: &[f64], t: &[f64]) -> f64 {
        (0..self.h.len()).map(|i| self.mu[i] * r[i] - self.weight(i) * t[i]).sum()
    }
}

/// Optimal powers, rates and Lagrangian value of one fade state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSolution {
    pub powers: Vec<f64>,
    pub rates: Vec<f64>,
    pub objective: f64,
}

/// Solve the per-state Lagrangian problem.
pub fn per_state_solve(problem: &StateProblem<'_>, search: &PowerSearch) -> Result<StateSolution> {
    let scaling = problem.validate()?;
    let powers = match search {
        PowerSearch::Exact => {
            let mut solver = ExactSolver::new(problem.num_users());
            let costs: Vec<f64> = (0..problem.num_users())
                .map(|i| problem.weight(i) / problem.h[i])
                .collect();
            if let Some(i) = costs.iter().position(|&c| !(c > 0.0)) {
                return Err(Error::UnboundedObjective(format!(
                    "user {} has non-positive transmit cost",
                    i + 1
                )));
            }
            let mut t = vec![0.0; problem.num_users()];
            solver.solve(problem.h, problem.mu, problem.rho, &costs, problem.sigma2, scaling, &mut t)?;
            t
        }
        PowerSearch::Grid(grid) => grid_search(problem, grid)?,
    };
    let rates = allocate_rates(problem.h, &powers, problem.mu, problem.rho, problem.sigma2, scaling)
        .ok_or_else(|| Error::InfeasibleMinRate("optimal powers miss the minimum rates".into()))?;
    let objective = problem.value(&rates, &powers);
    Ok(StateSolution { powers, rates, objective })
}

fn grid_search(problem: &StateProblem<'_>, grid: &PowerGrid) -> Result<Vec<f64>> {
    let l = problem.num_users();
    if grid.caps.len() != l {
        return Err(Error::DimensionMismatch("grid caps do not match user count".into()));
    }
    let n = grid.points;
    let last = l - 1;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut t = vec![0.0; l];
    let mut outer = vec![0usize; last];
    let outer_count = n.pow(last as u32);
    for _ in 0..outer_count {
        for (u, &k) in outer.iter().enumerate() {
            t[u] = grid.value(u, k);
        }
        let eval = |k: usize, t: &mut Vec<f64>| {
            t[last] = grid.value(last, k);
            problem.objective(t)
        };
        // feasibility is monotone in the last coordinate
        if eval(n - 1, &mut t).is_finite() {
            let (mut lo, mut hi) = (0usize, n - 1);
            while lo < hi {
                let mid = (lo + hi) / 2;
                if eval(mid, &mut t).is_finite() {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            // concave along the line: bisect on the sign of the forward difference
            let mut hi = n - 1;
            while lo < hi {
                let mid = (lo + hi) / 2;
                if eval(mid + 1, &mut t) > eval(mid, &mut t) {
                    lo = mid + 1;
                } else {
                    hi = mid;
                }
            }
            let value = eval(lo, &mut t);
            if best.as_ref().is_none_or(|(v, _)| value > *v) {
                best = Some((value, t.clone()));
            }
        }
        for u in (0..last).rev() {
            outer[u] += 1;
            if outer[u] < n {
                break;
            }
            outer[u] = 0;
        }
    }
    let (_, t) = best.ok_or_else(|| {
        Error::InfeasibleMinRate("no grid point satisfies the minimum rates".into())
    })?;
    for i in 0..l {
        if problem.weight(i) <= 0.0 && n > 1 && t[i] >= grid.caps[i] {
            return Err(Error::UnboundedObjective(format!(
                "user {} has non-positive cost and sits at the grid cap",
                i + 1
            )));
        }
    }
    Ok(t)
}

/// Closed-form per-state solver with reusable scratch space.
#[derive(Debug, Clone)]
pub struct ExactSolver {
    order: Vec<usize>,
    swapped: Vec<usize>,
    tied_costs: Vec<f64>,
    prefix: Vec<f64>,
    blocks: Vec<Block>,
    alt: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Block {
    start: usize,
    end: usize,
    reward: f64,
    /// log-sum-exp accumulator of `ln d_k + alpha P_k`: value `shift + ln(sum)`
    shift: f64,
    sum: f64,
    y: f64,
}

impl Block {
    fn optimum(&mut self, ln_k: f64, alpha: f64) {
        self.y = if self.reward <= 0.0 {
            f64::NEG_INFINITY
        } else if self.sum == 0.0 {
            f64::INFINITY
        } else {
            (self.reward.ln() - ln_k - (self.shift + self.sum.ln())) / alpha
        };
    }

    fn absorb(&mut self, other: &Block) {
        self.end = other.end;
        self.reward += other.reward;
        if other.sum == 0.0 {
            return;
        }
        if self.sum == 0.0 {
            self.shift = other.shift;
            self.sum = other.sum;
        } else if other.shift > self.shift {
            self.sum = self.sum * (self.shift - other.shift).exp() + other.sum;
            self.shift = other.shift;
        } else {
            self.sum += other.sum * (other.shift - self.shift).exp();
        }
    }
}

impl ExactSolver {
    pub fn new(num_users: usize) -> Self {
        Self {
            order: Vec::with_capacity(num_users),
            swapped: Vec::with_capacity(num_users),
            tied_costs: Vec::with_capacity(num_users),
            prefix: Vec::with_capacity(num_users + 1),
            blocks: Vec::with_capacity(num_users),
            alt: vec![0.0; num_users],
        }
    }

    /// Optimal powers for positive per-unit-received-power costs `costs[i] = w(i)/h(i)`.
    #[allow(clippy::too_many_arguments)]
    pub fn solve(
        &mut self,
        h: &[f64],
        mu: &[f64],
        rho: &[f64],
        costs: &[f64],
        sigma2: f64,
        scaling: CapacityScaling,
        out: &mut [f64],
    ) -> Result<()> {
        let l = h.len();
        if scaling.prelog == 0.0 || scaling.snr_scale == 0.0 {
            if rho.iter().any(|&r| r > 0.0) {
                return Err(Error::InfeasibleMinRate(
                    "receiver keeps no signal for decoding".into(),
                ));
            }
            out.iter_mut().for_each(|t| *t = 0.0);
            return Ok(());
        }
        self.order.clear();
        self.order.extend(0..l);
        self.order.sort_by(|&a, &b| costs[b].total_cmp(&costs[a]).then(a.cmp(&b)));
        let order = std::mem::take(&mut self.order);
        self.solve_order(&order, h, mu, rho, costs, sigma2, scaling, out);

        // blend near-tied neighbours toward the swapped decoding order
        let mut weights = 0.0;
        let mut pairs = 0usize;
        for k in 0..l.saturating_sub(1) {
            let (hi, lo) = (costs[order[k]], costs[order[k + 1]]);
            let gap = (hi - lo) / hi;
            if gap < TIE_BAND {
                pairs += 1;
                weights += 0.5 * (1.0 - gap / TIE_BAND);
            }
        }
        if pairs > 0 {
            let norm = weights.max(1.0);
            let mut base_share = 1.0;
            let mut blended = out.to_vec();
            for k in 0..l - 1 {
                let (a, b) = (order[k], order[k + 1]);
                let gap = (costs[a] - costs[b]) / costs[a];
                if gap >= TIE_BAND {
                    continue;
                }
                let w = 0.5 * (1.0 - gap / TIE_BAND) / norm;
                self.swapped.clear();
                self.swapped.extend_from_slice(&order);
                self.swapped.swap(k, k + 1);
                self.tied_costs.clear();
                self.tied_costs.extend_from_slice(costs);
                let mid = 0.5 * (costs[a] + costs[b]);
                self.tied_costs[a] = mid;
                self.tied_costs[b] = mid;
                let swapped = std::mem::take(&mut self.swapped);
                let tied = std::mem::take(&mut self.tied_costs);
                let mut alt = std::mem::take(&mut self.alt);
                self.solve_order(&swapped, h, mu, rho, &tied, sigma2, scaling, &mut alt);
                for i in 0..l {
                    blended[i] += w * (alt[i] - out[i]);
                }
                base_share -= w;
                self.swapped = swapped;
                self.tied_costs = tied;
                self.alt = alt;
            }
            debug_assert!(base_share >= 0.0);
            out.copy_from_slice(&blended);
        }
        self.order = order;
        Ok(())
    }

    /// Optimum when users are decoded in the fixed order `order`
    /// (most expensive first in the prefix, i.e. decoded last).
    #[allow(clippy::too_many_arguments)]
    fn solve_order(
        &mut self,
        order: &[usize],
        h: &[f64],
        mu: &[f64],
        rho: &[f64],
        costs: &[f64],
        sigma2: f64,
        scaling: CapacityScaling,
        out: &mut [f64],
    ) {
        let l = order.len();
        let alpha = 2.0 * std::f64::consts::LN_2 / scaling.prelog;
        let base = sigma2 / scaling.snr_scale;
        let ln_k = (base * alpha).ln();

        self.prefix.clear();
        self.prefix.push(0.0);
        for &i in order {
            let p = *self.prefix.last().unwrap() + rho[i];
            self.prefix.push(p);
        }

        self.blocks.clear();
        for k in 0..l {
            let (cur, next) = (order[k], order.get(k + 1).copied());
            let reward = mu[cur] - next.map_or(0.0, |j| mu[j]);
            let d = (costs[cur] - next.map_or(0.0, |j| costs[j])).max(0.0);
            let mut block = Block {
                start: k,
                end: k,
                reward,
                shift: if d > 0.0 { d.ln() + alpha * self.prefix[k + 1] } else { 0.0 },
                sum: if d > 0.0 { 1.0 } else { 0.0 },
                y: 0.0,
            };
            block.optimum(ln_k, alpha);
            while let Some(prev) = self.blocks.last() {
                if prev.y > block.y {
                    let mut merged = *prev;
                    merged.absorb(&block);
                    merged.optimum(ln_k, alpha);
                    self.blocks.pop();
                    block = merged;
                } else {
                    break;
                }
            }
            self.blocks.push(block);
        }

        let mut prev_x = 0.0f64;
        for block in &self.blocks {
            let y = block.y.max(0.0);
            for k in block.start..=block.end {
                let x = y + self.prefix[k + 1];
                let i = order[k];
                // g(x) - g(prev_x) with g(x) = base (e^{alpha x} - 1)
                let p = base * (alpha * prev_x).exp() * (alpha * (x - prev_x)).exp_m1();
                out[i] = p / h[i];
                prev_x = x;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{per_state_oracle, single_user_optimum};

    fn problem<'a>(
        h: &'a [f64],
        mu: &'a [f64],
        lam: &'a Multipliers,
        rho: &'a [f64],
        model: ReceiverModel,
        pi_e: f64,
    ) -> StateProblem<'a> {
        StateProblem { h, mu, multipliers: lam, rho, sigma2: 1.0, model, pi_e }
    }

    #[test]
    fn single_user_water_filling_closed_form() {
        let lam = Multipliers { lambda_tx: vec![0.4], lambda_rx: 0.0 };
        let p = problem(&[2.0], &[1.0], &lam, &[0.0], ReceiverModel::Ideal, 0.0);
        let sol = per_state_solve(&p, &PowerSearch::Exact).unwrap();
        let expected = 1.0 / (2.0 * 0.4 * std::f64::consts::LN_2) - 0.5;
        assert!((sol.powers[0] - expected).abs() < 1e-12);
        assert!((sol.powers[0] - single_user_optimum(&p)).abs() < 1e-12);
    }

    #[test]
    fn zero_reward_zero_floor_spends_nothing() {
        let lam = Multipliers { lambda_tx: vec![1.0, 2.0], lambda_rx: 0.1 };
        let p = problem(&[1.0, 3.0], &[0.0, 0.0], &lam, &[0.0, 0.0], ReceiverModel::Ideal, 0.0);
        let sol = per_state_solve(&p, &PowerSearch::Exact).unwrap();
        assert_eq!(sol.powers, vec![0.0, 0.0]);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn non_positive_cost_is_unbounded() {
        let lam = Multipliers { lambda_tx: vec![1.0], lambda_rx: 1.0 };
        let p = problem(&[2.0], &[1.0], &lam, &[0.0], ReceiverModel::Ideal, 0.0);
        assert!(matches!(
            per_state_solve(&p, &PowerSearch::Exact),
            Err(Error::UnboundedObjective(_))
        ));
        let grid = PowerGrid::new(vec![10.0], 101).unwrap();
        assert!(matches!(
            per_state_solve(&p, &PowerSearch::Grid(grid)),
            Err(Error::UnboundedObjective(_))
        ));
    }

    #[test]
    fn single_grid_point_is_returned() {
        let lam = Multipliers { lambda_tx: vec![0.5, 0.5], lambda_rx: 0.0 };
        let p = problem(&[1.0, 1.0], &[0.5, 0.5], &lam, &[0.1, 0.1], ReceiverModel::Ideal, 0.0);
        let grid = PowerGrid::new(vec![1.0, 1.0], 1).unwrap();
        let sol = per_state_solve(&p, &PowerSearch::Grid(grid.clone())).unwrap();
        assert_eq!(sol.powers, vec![1.0, 1.0]);
        let o = per_state_oracle(&p, &grid).unwrap();
        assert_eq!(o.powers, vec![1.0, 1.0]);
    }

    #[test]
    fn infeasible_grid_is_reported() {
        let lam = Multipliers { lambda_tx: vec![0.5], lambda_rx: 0.0 };
        let p = problem(&[1.0], &[1.0], &lam, &[3.0], ReceiverModel::Ideal, 0.0);
        let grid = PowerGrid::new(vec![1.0], 11).unwrap();
        assert!(matches!(
            per_state_solve(&p, &PowerSearch::Grid(grid)),
            Err(Error::InfeasibleMinRate(_))
        ));
    }

    #[test]
    fn exact_meets_floors_and_beats_grid() {
        let lam = Multipliers { lambda_tx: vec![0.3, 0.6], lambda_rx: 0.05 };
        for model in ReceiverModel::ALL {
            let p = problem(&[1.5, 0.7], &[0.3, 0.7], &lam, &[0.3, 0.2], model, 0.2);
            let exact = per_state_solve(&p, &PowerSearch::Exact).unwrap();
            assert!(exact.rates[0] >= 0.3 - 1e-12 && exact.rates[1] >= 0.2 - 1e-12);
            let grid = PowerGrid::new(vec![8.0, 8.0], 161).unwrap();
            let g = per_state_solve(&p, &PowerSearch::Grid(grid.clone())).unwrap();
            let o = per_state_oracle(&p, &grid).unwrap();
            assert!((g.objective - o.objective).abs() < 1e-12, "{model}");
            assert!(o.objective <= exact.objective + 1e-12, "{model}");
            let fine = crate::oracle::refined_oracle(&p, &[8.0, 8.0], 41, 4, 2).unwrap();
            assert!(fine.objective <= exact.objective + 1e-12, "{model}");
            assert!(exact.objective - fine.objective < 1e-4, "{model}");
        }
    }

    #[test]
    fn tied_costs_blend_continuously() {
        let mut solver = ExactSolver::new(2);
        let s = CapacityScaling::new(ReceiverModel::Ideal, 0.0).unwrap();
        let h = [1.0, 2.0];
        let mu = [0.5, 0.5];
        let rho = [0.2, 0.1];
        let mut t_hi = [0.0; 2];
        let mut t_mid = [0.0; 2];
        let mut t_lo = [0.0; 2];
        let c = 1.0;
        solver.solve(&h, &mu, &rho, &[c * (1.0 + 2.0 * TIE_BAND), c], 1.0, s, &mut t_hi).unwrap();
        solver.solve(&h, &mu, &rho, &[c, c], 1.0, s, &mut t_mid).unwrap();
        solver.solve(&h, &mu, &rho, &[c * (1.0 - 2.0 * TIE_BAND), c], 1.0, s, &mut t_lo).unwrap();
        // outside the band the decoding order differs, at the tie we sit halfway
        assert!((t_hi[0] - t_lo[0]).abs() > 1e-3);
        assert!((t_mid[0] - 0.5 * (t_hi[0] + t_lo[0])).abs() < 1e-5);
        let mut near = [0.0; 2];
        solver.solve(&h, &mu, &rho, &[c * (1.0 + 1e-12), c], 1.0, s, &mut near).unwrap();
        assert!((near[0] - t_mid[0]).abs() < 1e-4);
    }
}
