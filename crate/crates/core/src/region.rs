//! Rate bounds of the minimum-rate capacity region.
//!
//! Per fade state the achievable rates form a polymatroid cut by the minimum
//! rates; averaging the subset bounds over the fade table gives the ergodic
//! region of a fixed energy management policy. The three receiver
//! architectures differ only in how the erasure fraction enters the subset
//! capacity, see [`ReceiverModel`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fading::JointFadeTable;

/// Largest user count for which all `2^L - 1` subset bounds are enumerated.
pub const MAX_USERS: usize = 16;

const FEAS_TOL: f64 = 1e-12;

/// Receiver architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReceiverModel {
    /// Harvests and decodes the same symbol without distortion.
    Ideal,
    /// Harvests on a fraction `pi_e` of the slots, which are erased.
    #[serde(rename = "ts")]
    TimeSwitching,
    /// Diverts a constant fraction `pi_e` of the received power to the rectenna.
    #[serde(rename = "ps")]
    PowerSplitting,
}

impl ReceiverModel {
    pub const ALL: [ReceiverModel; 3] = [
        ReceiverModel::Ideal,
        ReceiverModel::PowerSplitting,
        ReceiverModel::TimeSwitching,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            ReceiverModel::Ideal => "ideal",
            ReceiverModel::TimeSwitching => "ts",
            ReceiverModel::PowerSplitting => "ps",
        }
    }

    /// Whether the erasure fraction affects the rates of this model.
    pub fn uses_erasures(self) -> bool {
        !matches!(self, ReceiverModel::Ideal)
    }
}

impl fmt::Display for ReceiverModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ReceiverModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ideal" => Ok(ReceiverModel::Ideal),
            "ts" | "time-switching" | "time_switching" => Ok(ReceiverModel::TimeSwitching),
            "ps" | "power-splitting" | "power_splitting" => Ok(ReceiverModel::PowerSplitting),
            other => Err(invalid(format!("unknown receiver model `{other}`"))),
        }
    }
}

/// How a receiver model turns a received SNR into a subset capacity:
/// `prelog * 0.5 * log2(1 + snr_scale * sum_A h t / sigma2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityScaling {
    pub prelog: f64,
    pub snr_scale: f64,
}

impl CapacityScaling {
    pub fn new(model: ReceiverModel, pi_e: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&pi_e) {
            return Err(invalid(format!("erasure fraction {pi_e} outside [0, 1]")));
        }
        let keep = 1.0 - pi_e;
        Ok(match model {
            ReceiverModel::Ideal => Self { prelog: 1.0, snr_scale: 1.0 },
            ReceiverModel::TimeSwitching => Self { prelog: keep, snr_scale: 1.0 },
            ReceiverModel::PowerSplitting => Self { prelog: 1.0, snr_scale: keep },
        })
    }

    /// Capacity for a received power sum `sum_A h(i) t(i)`.
    #[inline]
    pub fn capacity(&self, received: f64, sigma2: f64) -> f64 {
        if self.prelog == 0.0 {
            return 0.0;
        }
        0.5 * self.prelog * (self.snr_scale * received / sigma2).ln_1p() / std::f64::consts::LN_2
    }

    /// Smallest received power sum supporting `rate` bits, `inf` if none does.
    #[inline]
    pub fn required_power(&self, rate: f64, sigma2: f64) -> f64 {
        if rate <= 0.0 {
            return 0.0;
        }
        if self.prelog == 0.0 || self.snr_scale == 0.0 {
            return f64::INFINITY;
        }
        sigma2 / self.snr_scale * ((2.0 * rate / self.prelog) * std::f64::consts::LN_2).exp_m1()
    }
}

/// Energies that fix the receiver's RF requirement, all in joules per slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverEnergetics {
    pub mean_harvest_rx: f64,
    pub mean_consumption_rx: f64,
    /// Rectenna efficiency in `(0, 1]`.
    pub eta: f64,
}

impl ReceiverEnergetics {
    pub fn new(mean_harvest_rx: f64, mean_consumption_rx: f64, eta: f64) -> Result<Self> {
        if !(mean_harvest_rx >= 0.0) || !(mean_consumption_rx >= 0.0) {
            return Err(invalid("receiver energies must be nonnegative"));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(invalid(format!("efficiency {eta} outside (0, 1]")));
        }
        Ok(Self { mean_harvest_rx, mean_consumption_rx, eta })
    }
}

/// Average energy the receiver must extract from the RF stream per slot.
pub fn deficit(energetics: &ReceiverEnergetics) -> f64 {
    (energetics.mean_consumption_rx - energetics.mean_harvest_rx).max(0.0)
}

/// Nonnegative per-user rates in bits per channel use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateVector(Vec<f64>);

impl RateVector {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
            return Err(invalid("rates must be finite and nonnegative"));
        }
        Ok(Self(rates))
    }

    pub fn zeros(num_users: usize) -> Self {
        Self(vec![0.0; num_users])
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

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// `sum_{i in set} rate(i)`.
    pub fn subset_sum(&self, set: UserSet) -> f64 {
        set.users().map(|i| self.0[i]).sum()
    }
}

impl std::ops::Index<usize> for RateVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A set of users encoded as a bit mask (bit `i` is user `i`, zero-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UserSet(pub u32);

impl UserSet {
    pub fn full(num_users: usize) -> Self {
        UserSet(((1u64 << num_users) - 1) as u32)
    }

    pub fn singleton(user: usize) -> Self {
        UserSet(1 << user)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, user: usize) -> bool {
        self.0 >> user & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn users(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..32).filter(move |i| bits >> i & 1 == 1)
    }

    /// Every nonempty subset of `{0, .., num_users-1}` in mask order.
    pub fn all_nonempty(num_users: usize) -> impl Iterator<Item = UserSet> {
        (1..(1u32 << num_users)).map(UserSet)
    }

    pub fn union(self, other: UserSet) -> UserSet {
        UserSet(self.0 | other.0)
    }

    pub fn intersection(self, other: UserSet) -> UserSet {
        UserSet(self.0 & other.0)
    }
}

impl fmt::Display for UserSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.users().map(|i| (i + 1).to_string()).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

fn check_users(num_users: usize) -> Result<()> {
    if num_users == 0 || num_users > MAX_USERS {
        return Err(invalid(format!("user count {num_users} outside 1..={MAX_USERS}")));
    }
    Ok(())
}

/// Transmit energy per joint fade state and user, joules per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    num_users: usize,
    powers: Vec<f64>,
}

impl PolicyTable {
    pub fn from_rows(num_users: usize, powers: Vec<f64>) -> Result<Self> {
        check_users(num_users)?;
        if !powers.len().is_multiple_of(num_users) {
            return Err(Error::DimensionMismatch(format!(
                "{} entries do not split into rows of {num_users}",
                powers.len()
            )));
        }
        if powers.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
            return Err(invalid("policy powers must be finite and nonnegative"));
        }
        Ok(Self { num_users, powers })
    }

    /// The same power vector in every fade state.
    pub fn constant(num_states: usize, powers: &[f64]) -> Result<Self> {
        let rows = powers.iter().copied().cycle().take(num_states * powers.len()).collect();
        Self::from_rows(powers.len(), rows)
    }

    pub fn zeros(num_states: usize, num_users: usize) -> Self {
        Self { num_users, powers: vec![0.0; num_states * num_users] }
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_states(&self) -> usize {
        self.powers.len() / self.num_users
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.powers[state * self.num_users..(state + 1) * self.num_users]
    }

    pub fn row_mut(&mut self, state: usize) -> &mut [f64] {
        &mut self.powers[state * self.num_users..(state + 1) * self.num_users]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.powers
    }

    pub fn check_against(&self, table: &JointFadeTable) -> Result<()> {
        if self.num_users != table.num_users() || self.num_states() != table.num_states() {
            return Err(Error::DimensionMismatch(format!(
                "policy is {}x{} but fade table is {}x{}",
                self.num_states(),
                self.num_users,
                table.num_states(),
                table.num_users()
            )));
        }
        Ok(())
    }

    /// `E_H[T_i(H)]` per user.
    pub fn average_powers(&self, table: &JointFadeTable) -> Result<Vec<f64>> {
        self.check_against(table)?;
        Ok((0..self.num_users)
            .map(|i| table.expect_indexed(|s, _| self.row(s)[i]))
            .collect())
    }
}

/// Per-state rate allocation of a policy, same layout as [`PolicyTable`].
pub type RateTable = PolicyTable;

/// `eta * sum_i E_H[H(i) T_i(H)]`, the mean RF energy reaching the rectenna.
pub fn delivered_rf_power(policy: &PolicyTable, table: &JointFadeTable, eta: f64) -> Result<f64> {
    policy.check_against(table)?;
    let received = table.expect_indexed(|s, h| {
        h.iter().zip(policy.row(s)).map(|(g, t)| g * t).sum::<f64>()
    });
    Ok(eta * received)
}

/// Fraction of slots (or of power) the receiver must devote to harvesting.
///
/// Fails with [`Error::InfeasibleEnergy`] when even harvesting in every slot
/// cannot cover the deficit.
pub fn erasure_fraction(deficit: f64, delivered: f64) -> Result<f64> {
    if deficit <= 0.0 {
        return Ok(0.0);
    }
    if !(delivered > 0.0) || deficit > delivered * (1.0 + 1e-12) {
        return Err(Error::InfeasibleEnergy(format!(
            "deficit {deficit:e} J/slot exceeds deliverable RF energy {delivered:e} J/slot"
        )));
    }
    Ok((deficit / delivered).min(1.0))
}

fn received_sum(set: UserSet, h: &[f64], t: &[f64]) -> f64 {
    set.users().map(|i| h[i] * t[i]).sum()
}

/// Capacity bound of a user subset in one fade state, bits per channel use.
pub fn state_capacity(
    set: UserSet,
    h: &[f64],
    t: &[f64],
    sigma2: f64,
    model: ReceiverModel,
    pi_e: f64,
) -> Result<f64> {
    if set.is_empty() {
        return Err(invalid("user subset is empty"));
    }
    if !(sigma2 > 0.0) {
        return Err(invalid("noise variance must be positive"));
    }
    if h.len() != t.len() || set.users().any(|i| i >= h.len()) {
        return Err(Error::DimensionMismatch("fade and power vectors disagree".into()));
    }
    let scaling = CapacityScaling::new(model, pi_e)?;
    Ok(scaling.capacity(received_sum(set, h, t), sigma2))
}

/// One value per nonempty user subset, indexed by mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetBounds {
    num_users: usize,
    values: Vec<f64>,
}

impl SubsetBounds {
    pub fn from_fn(num_users: usize, mut f: impl FnMut(UserSet) -> f64) -> Self {
        let mut values = vec![0.0; 1 << num_users];
        for set in UserSet::all_nonempty(num_users) {
            values[set.0 as usize] = f(set);
        }
        Self { num_users, values }
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn get(&self, set: UserSet) -> f64 {
        self.values[set.0 as usize]
    }

    /// Number of nonempty subsets.
    pub fn len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (UserSet, f64)> + '_ {
        UserSet::all_nonempty(self.num_users).map(move |s| (s, self.get(s)))
    }
}

/// `E_H[C_A(H)]` for every nonempty subset `A`.
pub fn ergodic_bounds(
    policy: &PolicyTable,
    table: &JointFadeTable,
    sigma2: f64,
    model: ReceiverModel,
    pi_e: f64,
) -> Result<SubsetBounds> {
    policy.check_against(table)?;
    check_users(table.num_users())?;
    if !(sigma2 > 0.0) {
        return Err(invalid("noise variance must be positive"));
    }
    let scaling = CapacityScaling::new(model, pi_e)?;
    let l = table.num_users();
    let mut acc = SubsetBounds::from_fn(l, |_| 0.0);
    for (s, (h, p)) in table.states().enumerate() {
        let t = policy.row(s);
        for set in UserSet::all_nonempty(l) {
            acc.values[set.0 as usize] += p * scaling.capacity(received_sum(set, h, t), sigma2);
        }
    }
    Ok(acc)
}

/// `rho(A) <= R(A) <= bound(A)` for every nonempty `A`.
pub fn region_contains(rates: &RateVector, bounds: &SubsetBounds, rho: &RateVector) -> bool {
    region_contains_tol(rates, bounds, rho, 0.0)
}

/// [`region_contains`] with every inequality relaxed by `tol` bits.
pub fn region_contains_tol(
    rates: &RateVector,
    bounds: &SubsetBounds,
    rho: &RateVector,
    tol: f64,
) -> bool {
    if rates.len() != bounds.num_users() || rho.len() != rates.len() {
        return false;
    }
    bounds.iter().all(|(set, bound)| {
        let r = rates.subset_sum(set);
        rho.subset_sum(set) <= r + tol && r <= bound + tol
    })
}

/// Whether `rho` lies inside the per-state region `C(h, t)`.
pub fn feasible_min_rates(
    h: &[f64],
    t: &[f64],
    rho: &RateVector,
    sigma2: f64,
    model: ReceiverModel,
    pi_e: f64,
) -> Result<bool> {
    let scaling = CapacityScaling::new(model, pi_e)?;
    if !(sigma2 > 0.0) {
        return Err(invalid("noise variance must be positive"));
    }
    check_users(h.len())?;
    if h.len() != t.len() || rho.len() != h.len() {
        return Err(Error::DimensionMismatch("fade, power and rate vectors disagree".into()));
    }
    Ok(UserSet::all_nonempty(h.len()).all(|set| {
        rho.subset_sum(set) <= scaling.capacity(received_sum(set, h, t), sigma2) + FEAS_TOL
    }))
}

/// Maximizes `sum mu(i) r(i)` over `{r >= rho, r(A) <= c_A(h, t)}`.
///
/// The slack `c_A - rho(A)` is submodular; its superset minimum is a
/// polymatroid rank function on which the greedy order by decreasing reward is
/// optimal. Ties in `mu` go to the lower index. Returns `None` when the minimum
/// rates do not fit.
pub fn allocate_rates(
    h: &[f64],
    t: &[f64],
    mu: &[f64],
    rho: &[f64],
    sigma2: f64,
    scaling: CapacityScaling,
) -> Option<Vec<f64>> {
    let l = h.len();
    let full = 1usize << l;
    let mut slack = vec![0.0; full];
    for mask in 1..full {
        let set = UserSet(mask as u32);
        let cap = scaling.capacity(received_sum(set, h, t), sigma2);
        let need: f64 = set.users().map(|i| rho[i]).sum();
        let s = cap - need;
        if s < -FEAS_TOL * (1.0 + need) {
            return None;
        }
        slack[mask] = s.max(0.0);
    }
    // superset minimum
    for bit in 0..l {
        for mask in 0..full {
            if mask >> bit & 1 == 0 {
                let up = slack[mask | 1 << bit];
                if up < slack[mask] {
                    slack[mask] = up;
                }
            }
        }
    }
    slack[0] = 0.0;
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| mu[b].total_cmp(&mu[a]).then(a.cmp(&b)));
    let mut rates = rho.to_vec();
    let mut prefix = 0usize;
    for &i in &order {
        let next = prefix | 1 << i;
        rates[i] += (slack[next] - slack[prefix]).max(0.0);
        prefix = next;
    }
    Some(rates)
}
