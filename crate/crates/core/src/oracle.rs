//! Brute-force references for the per-state problem.
//!
//! Nothing here shares code with the closed-form solver: the rate step
//! enumerates every vertex of `{r >= rho, r(A) <= c_A}` by solving all square
//! subsystems of active constraints, and the power step scans the full grid.

use crate::error::{Error, Result};
use crate::optimizer::state::{PowerGrid, StateProblem, StateSolution};
use crate::region::UserSet;

const VERTEX_TOL: f64 = 1e-10;

fn subset_capacity(problem: &StateProblem<'_>, set: UserSet, t: &[f64]) -> f64 {
    let received: f64 = set.users().map(|i| problem.h[i] * t[i]).sum();
    let keep = 1.0 - problem.pi_e;
    let (prelog, snr) = match problem.model {
        crate::region::ReceiverModel::Ideal => (1.0, 1.0),
        crate::region::ReceiverModel::TimeSwitching => (keep, 1.0),
        crate::region::ReceiverModel::PowerSplitting => (1.0, keep),
    };
    prelog * 0.5 * (1.0 + snr * received / problem.sigma2).log2()
}

/// Solve `a x = b` for a small dense system, `None` if singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for k in col..n {
                        a[row][k] -= f * a[col][k];
                    }
                    b[row] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Best `sum mu r` over the rate polytope at powers `t`, by vertex enumeration.
pub fn best_rate_vertex(problem: &StateProblem<'_>, t: &[f64]) -> Option<(f64, Vec<f64>)> {
    let l = problem.num_users();
    // rows: (coefficients, rhs, is_upper)
    let mut rows: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    for i in 0..l {
        let mut a = vec![0.0; l];
        a[i] = 1.0;
        rows.push((a, problem.rho[i], false));
    }
    for set in UserSet::all_nonempty(l) {
        let a = (0..l).map(|i| if set.contains(i) { 1.0 } else { 0.0 }).collect();
        rows.push((a, subset_capacity(problem, set, t), true));
    }
    let feasible = |r: &[f64]| {
        rows.iter().all(|(a, b, upper)| {
            let v: f64 = a.iter().zip(r).map(|(x, y)| x * y).sum();
            if *upper {
                v <= b + VERTEX_TOL
            } else {
                v >= b - VERTEX_TOL
            }
        })
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    combinations(rows.len(), l, &mut |idx| {
        let a = idx.iter().map(|&k| rows[k].0.clone()).collect();
        let b = idx.iter().map(|&k| rows[k].1).collect();
        if let Some(r) = solve_dense(a, b) {
            if feasible(&r) {
                let v: f64 = r.iter().zip(problem.mu).map(|(x, m)| x * m).sum();
                if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                    best = Some((v, r));
                }
            }
        }
    });
    best
}

fn lagrangian(problem: &StateProblem<'_>, t: &[f64]) -> Option<(f64, Vec<f64>)> {
    let (reward, r) = best_rate_vertex(problem, t)?;
    let cost: f64 = (0..t.len()).map(|i| problem.weight(i) * t[i]).sum();
    Some((reward - cost, r))
}

/// Exhaustive search over every point of `grid`.
pub fn per_state_oracle(problem: &StateProblem<'_>, grid: &PowerGrid) -> Result<StateSolution> {
    let l = problem.num_users();
    if grid.caps.len() != l {
        return Err(Error::DimensionMismatch("grid caps do not match user count".into()));
    }
    let mut idx = vec![0usize; l];
    let mut t = vec![0.0; l];
    let mut best: Option<StateSolution> = None;
    for _ in 0..grid.points.pow(l as u32) {
        for u in 0..l {
            t[u] = grid.value(u, idx[u]);
        }
        if let Some((v, r)) = lagrangian(problem, &t) {
            if best.as_ref().is_none_or(|b| v > b.objective) {
                best = Some(StateSolution { powers: t.clone(), rates: r, objective: v });
            }
        }
        for u in (0..l).rev() {
            idx[u] += 1;
            if idx[u] < grid.points {
                break;
            }
            idx[u] = 0;
        }
    }
    let best = best.ok_or_else(|| {
        Error::InfeasibleMinRate("no grid point satisfies the minimum rates".into())
    })?;
    for i in 0..l {
        if problem.weight(i) <= 0.0 && grid.points > 1 && best.powers[i] >= grid.caps[i] {
            return Err(Error::UnboundedObjective(format!("user {} at grid cap", i + 1)));
        }
    }
    Ok(best)
}

/// Repeated exhaustive search over a moving window. When the best point sits
/// on an inner edge of the window the window slides there at the same width;
/// otherwise it shrinks to `+-window` cells around the best point. `rounds`
/// counts the shrinking rounds.
pub fn refined_oracle(
    problem: &StateProblem<'_>,
    caps: &[f64],
    points: usize,
    rounds: usize,
    window: usize,
) -> Result<StateSolution> {
    const MAX_SLIDES: usize = 200;
    let l = problem.num_users();
    let mut lo = vec![0.0; l];
    let mut hi = caps.to_vec();
    let mut best: Option<StateSolution> = None;
    let (mut shrinks, mut slides) = (0, 0);
    while shrinks < rounds {
        let widths: Vec<f64> = (0..l).map(|i| hi[i] - lo[i]).collect();
        let grid = PowerGrid::new(widths.clone(), points)?;
        let shifted = OffsetGrid { lo: &lo, grid: &grid };
        let sol = shifted.search(problem)?;
        let on_edge = (0..l).any(|i| {
            let tol = 1e-9 * grid.step(i).max(f64::MIN_POSITIVE);
            (lo[i] > 0.0 && sol.powers[i] <= lo[i] + tol) || (hi[i] < caps[i] && sol.powers[i] >= hi[i] - tol)
        });
        if on_edge && slides < MAX_SLIDES {
            slides += 1;
            for i in 0..l {
                lo[i] = (sol.powers[i] - 0.5 * widths[i]).max(0.0);
                hi[i] = (lo[i] + widths[i]).min(caps[i]);
                lo[i] = (hi[i] - widths[i]).max(0.0);
            }
        } else {
            shrinks += 1;
            for i in 0..l {
                let step = grid.step(i);
                lo[i] = (sol.powers[i] - window as f64 * step).max(0.0);
                hi[i] = (sol.powers[i] + window as f64 * step).min(caps[i]);
            }
        }
        if best.as_ref().is_none_or(|b| sol.objective > b.objective) {
            best = Some(sol);
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("refinement needs at least one round".into()))
}

/// Continuous optimum by nested line searches.
///
/// The per-state objective is jointly concave in `t` on its feasible set, and
/// feasibility is monotone in every coordinate, so maximizing out the later
/// users leaves a concave function of the earlier ones. Each coordinate gets a
/// bisection for its feasibility threshold followed by golden-section search.
pub fn concave_oracle(problem: &StateProblem<'_>, caps: &[f64]) -> Result<StateSolution> {
    let l = problem.num_users();
    if caps.len() != l {
        return Err(Error::DimensionMismatch("caps do not match user count".into()));
    }
    let mut t = caps.to_vec();
    let sol = nested_search(problem, caps, 0, &mut t)
        .ok_or_else(|| Error::InfeasibleMinRate("minimum rates unreachable within the caps".into()))?;
    Ok(sol)
}

fn nested_search(problem: &StateProblem<'_>, caps: &[f64], k: usize, t: &mut Vec<f64>) -> Option<StateSolution> {
    const ITER: usize = 48;
    if k == caps.len() {
        let (v, r) = lagrangian(problem, t)?;
        return Some(StateSolution { powers: t.clone(), rates: r, objective: v });
    }
    let feasible = |t: &mut Vec<f64>, x: f64| {
        t[k] = x;
        t[k + 1..].copy_from_slice(&caps[k + 1..]);
        lagrangian(problem, t).is_some()
    };
    if !feasible(t, caps[k]) {
        return None;
    }
    let mut a = 0.0;
    if !feasible(t, 0.0) {
        let (mut lo, mut hi) = (0.0, caps[k]);
        for _ in 0..ITER {
            let mid = 0.5 * (lo + hi);
            if feasible(t, mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        a = hi;
    }
    let eval = |x: f64, t: &mut Vec<f64>| {
        t[k] = x;
        nested_search(problem, caps, k + 1, t)
    };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (a, caps[k]);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = eval(x1, t);
    let mut f2 = eval(x2, t);
    let score = |f: &Option<StateSolution>| f.as_ref().map_or(f64::NEG_INFINITY, |s| s.objective);
    for _ in 0..ITER {
        if score(&f1) < score(&f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = eval(x2, t);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = eval(x1, t);
        }
    }
    // the ends are candidates too: optima often sit on a bound
    [f1, f2, eval(a, t), eval(caps[k], t)]
        .into_iter()
        .flatten()
        .max_by(|x, y| x.objective.total_cmp(&y.objective))
}

struct OffsetGrid<'a> {
    lo: &'a [f64],
    grid: &'a PowerGrid,
}

impl OffsetGrid<'_> {
    fn search(&self, problem: &StateProblem<'_>) -> Result<StateSolution> {
        let l = problem.num_users();
        let mut idx = vec![0usize; l];
        let mut t = vec![0.0; l];
        let mut best: Option<StateSolution> = None;
        for _ in 0..self.grid.points.pow(l as u32) {
            for u in 0..l {
                t[u] = self.lo[u] + self.grid.value(u, idx[u]);
            }
            if let Some((v, r)) = lagrangian(problem, &t) {
                if best.as_ref().is_none_or(|b| v > b.objective) {
                    best = Some(StateSolution { powers: t.clone(), rates: r, objective: v });
                }
            }
            for u in (0..l).rev() {
                idx[u] += 1;
                if idx[u] < self.grid.points {
                    break;
                }
                idx[u] = 0;
            }
        }
        best.ok_or_else(|| Error::InfeasibleMinRate("no feasible point in window".into()))
    }
}

/// Closed-form single-user optimum: water-filling level clipped from below by
/// the power that meets the minimum rate.
pub fn single_user_optimum(problem: &StateProblem<'_>) -> f64 {
    assert_eq!(problem.num_users(), 1, "single-user reduction only");
    let keep = 1.0 - problem.pi_e;
    let (prelog, snr) = match problem.model {
        crate::region::ReceiverModel::Ideal => (1.0, 1.0),
        crate::region::ReceiverModel::TimeSwitching => (keep, 1.0),
        crate::region::ReceiverModel::PowerSplitting => (1.0, keep),
    };
    let h = problem.h[0];
    let w = problem.weight(0);
    let level = problem.mu[0] * prelog / (2.0 * std::f64::consts::LN_2 * w)
        - problem.sigma2 / (snr * h);
    let floor = problem.sigma2 / (snr * h) * (2f64.powf(2.0 * problem.rho[0] / prelog) - 1.0);
    level.max(0.0).max(floor)
}
