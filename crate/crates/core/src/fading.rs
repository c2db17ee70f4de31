//! Discrete fading distributions.
//!
//! A [`MarginalFading`] is the per-user law of the channel power gain and a
//! [`JointFadeTable`] enumerates every joint fade state of the users with its
//! probability. Fading is independent across users, so joint probabilities are
//! products of the marginals.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

const PMF_SUM_TOL: f64 = 1e-12;

/// Distribution of a single user's channel power gain over a finite support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalFading {
    support: Vec<f64>,
    pmf: Vec<f64>,
}

impl MarginalFading {
    pub fn new(support: Vec<f64>, pmf: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(invalid("fading support is empty"));
        }
        if support.len() != pmf.len() {
            return Err(invalid(format!(
                "support has {} points but pmf has {}",
                support.len(),
                pmf.len()
            )));
        }
        if support.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
            return Err(invalid("fade gains must be finite and strictly positive"));
        }
        if support.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("fade support must be strictly increasing"));
        }
        if pmf.iter().any(|&p| !(p >= 0.0)) {
            return Err(invalid("pmf entries must be nonnegative"));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > PMF_SUM_TOL {
            return Err(invalid(format!("pmf sums to {total}, expected 1")));
        }
        Ok(Self { support, pmf })
    }

    /// A channel with a single deterministic gain.
    pub fn constant(gain: f64) -> Result<Self> {
        Self::new(vec![gain], vec![1.0])
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.pmf).map(|(h, p)| h * p).sum()
    }

    pub fn max_gain(&self) -> f64 {
        *self.support.last().expect("support is nonempty")
    }
}

/// Rayleigh CDF `1 - exp(-x^2 / (2 scale^2))`, returned as its complement to
/// keep precision in the tail.
fn rayleigh_survival(x: f64, scale: f64) -> f64 {
    (-(x * x) / (2.0 * scale * scale)).exp()
}

/// Quantize a Rayleigh law onto the grid `{q, 2q, ..., floor(h_max/q) q}`.
///
/// Point `i` carries the probability of `((i-1) q, i q]`. The tail beyond the
/// last grid point is folded into that point so the pmf is proper.
pub fn quantize_rayleigh(scale: f64, q: f64, h_max: f64) -> Result<MarginalFading> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(invalid("rayleigh scale must be positive"));
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(invalid("quantization step must be positive"));
    }
    if !(h_max >= q) || !h_max.is_finite() {
        return Err(invalid("h_max must be at least the quantization step"));
    }
    // 5.0 / 0.1 evaluates just below 50.
    let n = ((h_max / q) * (1.0 + 1e-12)).floor() as usize;
    let support: Vec<f64> = (1..=n).map(|i| i as f64 * q).collect();
    let mut pmf: Vec<f64> = (1..=n)
        .map(|i| {
            rayleigh_survival((i - 1) as f64 * q, scale) - rayleigh_survival(i as f64 * q, scale)
        })
        .collect();
    pmf[n - 1] = rayleigh_survival((n - 1) as f64 * q, scale);
    MarginalFading::new(support, pmf)
}

/// All joint fade states of `L` independent users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointFadeTable {
    num_users: usize,
    /// Row-major `states x num_users`.
    gains: Vec<f64>,
    probs: Vec<f64>,
    marginals: Vec<MarginalFading>,
}

/// Enumerate the Cartesian product of the marginal supports.
///
/// States are ordered lexicographically: user 1's support index varies slowest.
pub fn joint_states(marginals: &[MarginalFading]) -> Result<JointFadeTable> {
    if marginals.is_empty() {
        return Err(invalid("at least one marginal is required"));
    }
    let num_users = marginals.len();
    let count: usize = marginals.iter().map(MarginalFading::len).product();
    let mut gains = Vec::with_capacity(count * num_users);
    let mut probs = Vec::with_capacity(count);
    let mut index = vec![0usize; num_users];
    for _ in 0..count {
        let mut p = 1.0;
        for (u, m) in marginals.iter().enumerate() {
            gains.push(m.support[index[u]]);
            p *= m.pmf[index[u]];
        }
        probs.push(p);
        // odometer increment, last user fastest
        for u in (0..num_users).rev() {
            index[u] += 1;
            if index[u] < marginals[u].len() {
                break;
            }
            index[u] = 0;
        }
    }
    Ok(JointFadeTable {
        num_users,
        gains,
        probs,
        marginals: marginals.to_vec(),
    })
}

impl JointFadeTable {
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_states(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, state: usize) -> f64 {
        self.probs[state]
    }

    /// Fade vector of one joint state.
    pub fn state(&self, state: usize) -> &[f64] {
        &self.gains[state * self.num_users..(state + 1) * self.num_users]
    }

    pub fn states(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.gains.chunks_exact(self.num_users).zip(self.probs.iter().copied())
    }

    pub fn marginals(&self) -> &[MarginalFading] {
        &self.marginals
    }

    /// Largest gain user `user` can experience.
    pub fn max_gain(&self, user: usize) -> f64 {
        self.marginals[user].max_gain()
    }

    /// Joint state index for per-user support indices (lexicographic order).
    pub fn index_of(&self, support_index: &[usize]) -> usize {
        support_index
            .iter()
            .zip(&self.marginals)
            .fold(0, |acc, (&i, m)| acc * m.len() + i)
    }

    /// `E_H[f(H)]` over the joint table.
    pub fn expect<F>(&self, mut f: F) -> f64
    where
        F: FnMut(&[f64]) -> f64,
    {
        self.states().map(|(h, p)| p * f(h)).sum()
    }

    /// Like [`expect`](Self::expect) but the closure also receives the state index.
    pub fn expect_indexed<F>(&self, mut f: F) -> f64
    where
        F: FnMut(usize, &[f64]) -> f64,
    {
        self.states().enumerate().map(|(s, (h, p))| p * f(s, h)).sum()
    }
}

/// Free-function form of [`JointFadeTable::expect`].
pub fn expect<F>(table: &JointFadeTable, f: F) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    table.expect(f)
}
