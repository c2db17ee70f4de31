//! Boundary of the minimum-rate capacity region.
//!
//! A boundary point maximizes `sum mu(i) E[R_i]` subject to the per-user
//! average power budgets, the per-state minimum rates and the receiver's RF
//! energy requirement. The per-state Lagrangian problem is solved in
//! [`state`]; [`dual`] searches the multipliers and, for the time-switching and
//! power-splitting receivers, the self-consistent erasure fraction; [`trace`]
//! sweeps the reward vector.

pub mod dual;
pub mod state;
pub mod trace;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fading::JointFadeTable;
use crate::region::{deficit, PolicyTable, RateTable, RateVector, ReceiverEnergetics, ReceiverModel};

pub use dual::{dual_solve, dual_solve_at, sum_rate};
pub use state::{per_state_solve, PowerGrid, PowerSearch, StateProblem, StateSolution};
pub use trace::{trace_boundary, TracePoint};

/// Full problem instance. Energies are joules per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub mean_harvest_tx: Vec<f64>,
    pub fading: JointFadeTable,
    pub rho: RateVector,
    pub sigma2: f64,
    pub energetics: ReceiverEnergetics,
    pub model: ReceiverModel,
}

impl Scenario {
    pub fn new(
        mean_harvest_tx: Vec<f64>,
        fading: JointFadeTable,
        rho: RateVector,
        sigma2: f64,
        energetics: ReceiverEnergetics,
        model: ReceiverModel,
    ) -> Result<Self> {
        let l = mean_harvest_tx.len();
        if l == 0 {
            return Err(invalid("scenario needs at least one user"));
        }
        if l > crate::region::MAX_USERS {
            return Err(invalid(format!("at most {} users are supported", crate::region::MAX_USERS)));
        }
        if fading.num_users() != l || rho.len() != l {
            return Err(invalid(format!(
                "user count mismatch: {l} harvest means, {} fading users, {} minimum rates",
                fading.num_users(),
                rho.len()
            )));
        }
        if mean_harvest_tx.iter().any(|&y| !(y >= 0.0) || !y.is_finite()) {
            return Err(invalid("harvest means must be finite and nonnegative"));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(invalid("noise variance must be positive"));
        }
        Ok(Self { mean_harvest_tx, fading, rho, sigma2, energetics, model })
    }

    pub fn num_users(&self) -> usize {
        self.mean_harvest_tx.len()
    }

    pub fn deficit(&self) -> f64 {
        deficit(&self.energetics)
    }

    pub fn with_model(&self, model: ReceiverModel) -> Self {
        Self { model, ..self.clone() }
    }

    /// Copy with the receiver consumption moved so the deficit equals `delta`.
    pub fn with_deficit(&self, delta: f64) -> Self {
        let mut s = self.clone();
        s.energetics.mean_consumption_rx = s.energetics.mean_harvest_rx + delta.max(0.0);
        s
    }

    pub fn with_rho(&self, rho: RateVector) -> Self {
        Self { rho, ..self.clone() }
    }
}

/// Rate reward vector selecting a boundary point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardVector(Vec<f64>);

impl RewardVector {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() || mu.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(invalid("rewards must be finite and nonnegative"));
        }
        if mu.iter().all(|&m| m == 0.0) {
            return Err(invalid("reward vector is all zero"));
        }
        Ok(Self(mu))
    }

    pub fn uniform(num_users: usize) -> Self {
        Self(vec![1.0 / num_users as f64; num_users])
    }

    /// Scaled to sum to one.
    pub fn normalized(&self) -> Self {
        let total: f64 = self.0.iter().sum();
        Self(self.0.iter().map(|m| m / total).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, rates: &[f64]) -> f64 {
        self.0.iter().zip(rates).map(|(m, r)| m * r).sum()
    }
}

/// Dual variables: one per transmitter power budget plus the receiver's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub lambda_tx: Vec<f64>,
    pub lambda_rx: f64,
}

impl Multipliers {
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            lambda_tx: self.lambda_tx.iter().map(|l| l * c).collect(),
            lambda_rx: self.lambda_rx * c,
        }
    }
}

/// Tuning of the dual search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Power backoff as a fraction of each mean harvest; the policy targets
    /// `E[T_i] = (1 - backoff) E[Y_i]`.
    pub backoff: f64,
    /// Relative tolerance on the average power targets.
    pub power_tol: f64,
    /// Residual accepted when the power map is too steep to reach `power_tol`.
    pub power_accept_tol: f64,
    /// Gauss-Seidel rounds before switching to nested root finding.
    pub max_sweeps: usize,
    /// Damping of the erasure-fraction iteration.
    pub damping: f64,
    pub fixed_point_tol: f64,
    pub max_fixed_point_iter: usize,
    /// Rewards below this fraction of the largest reward are raised to it, so
    /// that a user without reward still spends its budget (Pareto tie-break).
    pub reward_floor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            backoff: 0.0,
            power_tol: 1e-9,
            power_accept_tol: 1e-6,
            max_sweeps: 40,
            damping: 0.5,
            fixed_point_tol: 1e-6,
            max_fixed_point_iter: 100,
            reward_floor: 1e-9,
        }
    }
}

/// One solved point of the region boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    pub mu: RewardVector,
    /// `E_H[R_i(H)]`.
    pub avg_rates: RateVector,
    pub policy: PolicyTable,
    /// Per-state rate allocation `r*(h)`.
    pub rates: RateTable,
    pub multipliers: Multipliers,
    /// Erasure fraction the rates were computed with (0 for the ideal receiver).
    pub pi_e: f64,
    /// `eta * sum_i E[H(i) T_i(H)]`, J/slot.
    pub delivered: f64,
    pub avg_powers: Vec<f64>,
    pub model: ReceiverModel,
}

impl BoundaryPoint {
    pub fn sum_rate(&self) -> f64 {
        self.avg_rates.sum()
    }
}
