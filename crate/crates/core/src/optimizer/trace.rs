use log::warn;

use crate::error::{invalid, Error, Result};

use super::{dual_solve, BoundaryPoint, RewardVector, Scenario, SolverOptions};

/// One reward vector of a boundary sweep and its outcome.
#[derive(Debug, Clone)]
pub struct TracePoint {
    /// Sweep coordinate; `mu(1)` for two users, the lattice index otherwise.
    pub theta: f64,
    pub mu: RewardVector,
    pub result: std::result::Result<BoundaryPoint, Error>,
}

impl TracePoint {
    pub fn point(&self) -> Option<&BoundaryPoint> {
        self.result.as_ref().ok()
    }
}

/// Reward vectors on the unit simplex with `mu_grid` points per edge.
///
/// Two users get `(theta, 1 - theta)` with `theta` running from 1 down to 0,
/// which walks the boundary from the user-1 corner to the user-2 corner.
pub fn simplex_grid(num_users: usize, mu_grid: usize) -> Result<Vec<(f64, RewardVector)>> {
    if num_users == 0 {
        return Err(invalid("no users"));
    }
    if mu_grid < 2 {
        return Err(invalid("mu grid needs at least two points"));
    }
    if num_users == 1 {
        return Ok(vec![(1.0, RewardVector::new(vec![1.0])?)]);
    }
    let steps = mu_grid - 1;
    if num_users == 2 {
        return (0..mu_grid)
            .map(|k| {
                let theta = (steps - k) as f64 / steps as f64;
                Ok((theta, RewardVector::new(vec![theta, 1.0 - theta])?))
            })
            .collect();
    }
    let mut out = Vec::new();
    let mut counts = vec![0usize; num_users];
    compositions(steps, num_users, 0, &mut counts, &mut |c| {
        let mu = c.iter().map(|&k| k as f64 / steps as f64).collect();
        out.push(mu);
    });
    out.into_iter()
        .enumerate()
        .map(|(k, mu)| Ok((k as f64, RewardVector::new(mu)?)))
        .collect()
}

fn compositions(total: usize, parts: usize, at: usize, cur: &mut [usize], f: &mut impl FnMut(&[usize])) {
    if at == parts - 1 {
        cur[at] = total;
        f(cur);
        return;
    }
    for k in (0..=total).rev() {
        cur[at] = k;
        compositions(total - k, parts, at + 1, cur, f);
    }
}

/// Solve every reward vector of the simplex grid. Failures are kept per point.
pub fn trace_boundary(scenario: &Scenario, mu_grid: usize, opts: &SolverOptions) -> Result<Vec<TracePoint>> {
    let grid = simplex_grid(scenario.num_users(), mu_grid)?;
    Ok(grid
        .into_iter()
        .map(|(theta, mu)| {
            let result = dual_solve(scenario, &mu, opts);
            if let Err(e) = &result {
                warn!("{} at mu = {:?}: {e}", scenario.model, mu.as_slice());
            }
            TracePoint { theta, mu, result }
        })
        .collect())
}
