//! Slotted Monte Carlo simulation of the transmitter and receiver energy buffers.
//!
//! Each slot draws a joint fade state, the ambient harvests, the receiver's
//! consumption, a switching coin and (in sampled mode) one unit-variance code
//! symbol per user, always in that order, so a given seed fixes the whole
//! sample path regardless of the receiver model.

use rand::distr::{Distribution, Uniform};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{weighted::WeightedIndex, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::optimizer::{BoundaryPoint, Scenario};
use crate::region::{PolicyTable, RateTable, ReceiverModel};

/// Distribution family of an i.i.d. energy arrival process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum HarvestKind {
    Constant,
    #[default]
    Exponential,
    /// Uniform on `[0, 2 mean]`.
    Uniform,
    /// `0` or `2 mean` with equal probability.
    TwoPoint,
}

impl std::str::FromStr for HarvestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Self::Constant),
            "exponential" => Ok(Self::Exponential),
            "uniform" => Ok(Self::Uniform),
            "two-point" => Ok(Self::TwoPoint),
            _ => Err(invalid(format!("unknown harvest process '{s}'"))),
        }
    }
}

/// An i.i.d. nonnegative energy process with the given mean (J/slot).
#[derive(Debug, Clone)]
pub struct HarvestProcess {
    kind: HarvestKind,
    mean: f64,
}

impl HarvestProcess {
    pub fn new(kind: HarvestKind, mean: f64) -> Result<Self> {
        if !(mean >= 0.0) || !mean.is_finite() {
            return Err(invalid("harvest mean must be finite and nonnegative"));
        }
        Ok(Self { kind, mean })
    }

    pub fn kind(&self) -> HarvestKind {
        self.kind
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // one uniform draw per call for every kind keeps streams aligned
        let u: f64 = rng.random();
        match self.kind {
            HarvestKind::Constant => self.mean,
            // inverse transform
            HarvestKind::Exponential => -self.mean * (1.0 - u).ln(),
            HarvestKind::Uniform => 2.0 * self.mean * u,
            HarvestKind::TwoPoint => {
                if u < 0.5 {
                    0.0
                } else {
                    2.0 * self.mean
                }
            }
        }
    }
}

/// How the RF energy of a slot is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RfMode {
    /// `eta sum h t`, the mean over code symbols.
    Expectation,
    /// `eta (sum sqrt(h t) x)^2` with standard normal symbols.
    #[default]
    Sampled,
}

/// Switching rule of the time-switching receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SwitchRule {
    /// Harvest whenever the buffer cannot cover the slot's consumption.
    BufferThreshold,
    /// Harvest with probability `pi_e`, independently of everything else.
    #[default]
    Bernoulli,
}

/// Spend the nominal energy unless the buffer cannot cover it. Returns the
/// number of users that were clipped.
pub fn truncated_policy_step(nominal: &[f64], available: &[f64], actual: &mut [f64]) -> usize {
    let mut clipped = 0;
    for ((a, &n), &e) in actual.iter_mut().zip(nominal).zip(available) {
        if n > e {
            *a = e;
            clipped += 1;
        } else {
            *a = n;
        }
    }
    clipped
}

pub fn rf_energy_expected(h: &[f64], t: &[f64], eta: f64) -> f64 {
    eta * h.iter().zip(t).map(|(h, t)| h * t).sum::<f64>()
}

/// `eta (sum_i sqrt(h(i) t(i)) x(i))^2` for given code symbols `x`.
pub fn rf_energy_sampled(h: &[f64], t: &[f64], eta: f64, symbols: &[f64]) -> f64 {
    let amp: f64 = h.iter().zip(t).zip(symbols).map(|((h, t), x)| (h * t).sqrt() * x).sum();
    eta * amp * amp
}

/// RF energy of a slot; `symbols` is required in sampled mode.
pub fn rf_energy(h: &[f64], t: &[f64], eta: f64, mode: RfMode, symbols: Option<&[f64]>) -> f64 {
    match (mode, symbols) {
        (RfMode::Sampled, Some(x)) => rf_energy_sampled(h, t, eta, x),
        _ => rf_energy_expected(h, t, eta),
    }
}

/// Energy held in the buffers at the start of a slot (J).
#[derive(Debug, Clone, PartialEq)]
pub struct BufferState {
    pub tx: Vec<f64>,
    pub rx: f64,
}

/// Everything random about one slot, already drawn.
#[derive(Debug, Clone, Copy)]
pub struct SlotInputs<'a> {
    pub h: &'a [f64],
    /// Policy energies for this fade state.
    pub nominal: &'a [f64],
    pub harvest_tx: &'a [f64],
    pub harvest_rx: f64,
    pub consumption_rx: f64,
    /// Uniform draw on `[0, 1)` for the Bernoulli switching rule.
    pub coin: f64,
    /// Code symbols; `None` means expectation mode.
    pub symbols: Option<&'a [f64]>,
    pub eta: f64,
}

/// Outcome of one slot.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SlotRecord {
    pub actual: Vec<f64>,
    pub clipped: usize,
    pub xi: f64,
    /// RF energy credited to the receiver buffer.
    pub banked: f64,
    pub erasure: bool,
    pub rx_outage: bool,
}

impl SlotRecord {
    pub fn new(num_users: usize) -> Self {
        Self { actual: vec![0.0; num_users], ..Self::default() }
    }

    pub fn decoded(&self) -> bool {
        !self.erasure && !self.rx_outage
    }
}

fn transmitters(state: &mut BufferState, inputs: &SlotInputs<'_>, record: &mut SlotRecord) {
    for (e, y) in state.tx.iter_mut().zip(inputs.harvest_tx) {
        *e += y;
    }
    record.clipped = truncated_policy_step(inputs.nominal, &state.tx, &mut record.actual);
    for (e, t) in state.tx.iter_mut().zip(&record.actual) {
        *e = (*e - t).max(0.0);
    }
    record.xi = match inputs.symbols {
        Some(x) => rf_energy_sampled(inputs.h, &record.actual, inputs.eta, x),
        None => rf_energy_expected(inputs.h, &record.actual, inputs.eta),
    };
}

/// Time-switching receiver: a slot either harvests (an erasure) or decodes.
pub fn step_time_switching(
    state: &mut BufferState,
    inputs: &SlotInputs<'_>,
    rule: SwitchRule,
    pi_e: f64,
    record: &mut SlotRecord,
) {
    transmitters(state, inputs, record);
    let available = state.rx + inputs.harvest_rx;
    let harvest = match rule {
        SwitchRule::BufferThreshold => available < inputs.consumption_rx,
        SwitchRule::Bernoulli => inputs.coin < pi_e,
    };
    record.rx_outage = false;
    if harvest {
        record.erasure = true;
        record.banked = record.xi;
        state.rx = available + record.xi;
    } else if available >= inputs.consumption_rx {
        record.erasure = false;
        record.banked = 0.0;
        state.rx = available - inputs.consumption_rx;
    } else {
        record.erasure = false;
        record.rx_outage = true;
        record.banked = 0.0;
        state.rx = available;
    }
}

/// Power-splitting receiver. A fraction `pi_e` of the RF energy always goes to
/// the rectenna; a slot the receiver cannot power is an erasure, and then the
/// full RF energy is banked (or only the split fraction with `strict_split`).
pub fn step_power_splitting(
    state: &mut BufferState,
    inputs: &SlotInputs<'_>,
    pi_e: f64,
    strict_split: bool,
    record: &mut SlotRecord,
) {
    transmitters(state, inputs, record);
    let available = state.rx + inputs.harvest_rx;
    let split = pi_e * record.xi;
    record.rx_outage = false;
    if available + split < inputs.consumption_rx {
        record.erasure = true;
        record.banked = if strict_split { split } else { record.xi };
        state.rx = available + record.banked;
    } else {
        record.erasure = false;
        record.banked = split;
        state.rx = available + split - inputs.consumption_rx;
    }
}

/// Ideal receiver: harvests the full RF energy and decodes in the same slot.
pub fn step_ideal(state: &mut BufferState, inputs: &SlotInputs<'_>, record: &mut SlotRecord) {
    transmitters(state, inputs, record);
    let available = state.rx + inputs.harvest_rx + record.xi;
    record.banked = record.xi;
    record.rx_outage = false;
    if available >= inputs.consumption_rx {
        record.erasure = false;
        state.rx = available - inputs.consumption_rx;
    } else {
        record.erasure = true;
        state.rx = available;
    }
}

/// Run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimOptions {
    pub horizon: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub tx_harvest: HarvestKind,
    pub rx_harvest: HarvestKind,
    pub rx_consumption: HarvestKind,
    pub rf_mode: RfMode,
    pub switch_rule: SwitchRule,
    pub strict_split: bool,
    /// Initial transmitter buffers (J); empty means all zero.
    pub initial_tx: Vec<f64>,
    /// Initial receiver buffer (J); `None` means the mean consumption.
    pub initial_rx: Option<f64>,
    /// Slot counts at which buffer snapshots are taken.
    pub checkpoints: Vec<u64>,
    /// Number of leading slots kept in the slot trace.
    pub trace_len: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            horizon: 1_000_000,
            burn_in: 0,
            seed: 1,
            tx_harvest: HarvestKind::Exponential,
            rx_harvest: HarvestKind::Exponential,
            rx_consumption: HarvestKind::Constant,
            rf_mode: RfMode::Sampled,
            switch_rule: SwitchRule::Bernoulli,
            strict_split: false,
            initial_tx: Vec::new(),
            initial_rx: None,
            checkpoints: Vec::new(),
            trace_len: 0,
        }
    }
}

/// Buffer snapshot after `slot` slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub slot: u64,
    pub tx_buffers: Vec<f64>,
    pub rx_buffer: f64,
    /// Clip fraction per user over the measured slots so far.
    pub clip_fraction: Vec<f64>,
}

/// One row of the slot trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub slot: u64,
    pub state: usize,
    pub actual: Vec<f64>,
    pub xi: f64,
    pub erasure: bool,
    pub rx_outage: bool,
    pub tx_buffers: Vec<f64>,
    pub rx_buffer: f64,
}

/// Empirical results; averages cover the slots after burn-in.
#[derive(Debug, Clone, PartialEq)]
pub struct SimStats {
    pub slots: u64,
    pub erasure_fraction: f64,
    pub avg_tx_power: Vec<f64>,
    /// RF energy banked at the receiver per slot.
    pub avg_delivered: f64,
    /// RF energy arriving at the receiver per slot, banked or not.
    pub avg_rf: f64,
    pub rx_outage_fraction: f64,
    pub tx_clip_fraction: Vec<f64>,
    pub final_tx_buffers: Vec<f64>,
    pub final_rx_buffer: f64,
    pub achieved_rate_estimate: Vec<f64>,
    pub checkpoints: Vec<Checkpoint>,
    pub trace: Vec<TraceRow>,
}

/// Simulate `policy` on `scenario`. `rates` is the per-state allocation used
/// for the rate estimate; `pi_e` is the analytic erasure fraction the rates
/// were computed with.
pub fn run(
    scenario: &Scenario,
    policy: &PolicyTable,
    rates: Option<&RateTable>,
    pi_e: f64,
    opts: &SimOptions,
) -> Result<SimStats> {
    let l = scenario.num_users();
    let table = &scenario.fading;
    policy.check_against(table)?;
    if let Some(r) = rates {
        r.check_against(table)?;
    }
    if opts.horizon == 0 || opts.burn_in >= opts.horizon {
        return Err(invalid("horizon must exceed burn-in"));
    }
    if !(0.0..=1.0).contains(&pi_e) {
        return Err(invalid("erasure fraction outside [0, 1]"));
    }
    if !opts.initial_tx.is_empty() && opts.initial_tx.len() != l {
        return Err(Error::DimensionMismatch("initial transmitter buffers".into()));
    }
    let en = &scenario.energetics;
    let tx: Vec<HarvestProcess> = scenario
        .mean_harvest_tx
        .iter()
        .map(|&m| HarvestProcess::new(opts.tx_harvest, m))
        .collect::<Result<_>>()?;
    let rx_harvest = HarvestProcess::new(opts.rx_harvest, en.mean_harvest_rx)?;
    let rx_use = HarvestProcess::new(opts.rx_consumption, en.mean_consumption_rx)?;
    let states = WeightedIndex::new(table.probs()).map_err(|e| invalid(e.to_string()))?;
    let unit = Uniform::new(0.0, 1.0).map_err(|e| invalid(e.to_string()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut buffers = BufferState {
        tx: if opts.initial_tx.is_empty() { vec![0.0; l] } else { opts.initial_tx.clone() },
        rx: opts.initial_rx.unwrap_or(en.mean_consumption_rx),
    };
    let mut record = SlotRecord::new(l);
    let mut harvest = vec![0.0; l];
    let mut symbols = vec![0.0; l];
    let sampled = opts.rf_mode == RfMode::Sampled;
    let credit = match scenario.model {
        ReceiverModel::TimeSwitching if pi_e < 1.0 => 1.0 / (1.0 - pi_e),
        _ => 1.0,
    };

    let mut measured = 0u64;
    let mut erasures = 0u64;
    let mut outages = 0u64;
    let mut delivered = 0.0;
    let mut rf = 0.0;
    let mut power = vec![0.0; l];
    let mut clips = vec![0u64; l];
    let mut rate = vec![0.0; l];
    let mut checkpoints = Vec::new();
    let mut pending: Vec<u64> = opts.checkpoints.clone();
    pending.sort_unstable();
    pending.dedup();
    let mut next_cp = 0;
    let mut trace = Vec::new();

    for slot in 0..opts.horizon {
        let s = states.sample(&mut rng);
        for (y, p) in harvest.iter_mut().zip(&tx) {
            *y = p.sample(&mut rng);
        }
        let y_r = rx_harvest.sample(&mut rng);
        let t_r = rx_use.sample(&mut rng);
        let coin = unit.sample(&mut rng);
        if sampled {
            for x in symbols.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
        }
        let inputs = SlotInputs {
            h: table.state(s),
            nominal: policy.row(s),
            harvest_tx: &harvest,
            harvest_rx: y_r,
            consumption_rx: t_r,
            coin,
            symbols: sampled.then_some(&symbols[..]),
            eta: en.eta,
        };
        match scenario.model {
            ReceiverModel::Ideal => step_ideal(&mut buffers, &inputs, &mut record),
            ReceiverModel::TimeSwitching => {
                step_time_switching(&mut buffers, &inputs, opts.switch_rule, pi_e, &mut record)
            }
            ReceiverModel::PowerSplitting => {
                step_power_splitting(&mut buffers, &inputs, pi_e, opts.strict_split, &mut record)
            }
        }
        debug_assert!(buffers.rx >= 0.0 && buffers.tx.iter().all(|&e| e >= 0.0));

        if trace.len() < opts.trace_len {
            trace.push(TraceRow {
                slot,
                state: s,
                actual: record.actual.clone(),
                xi: record.xi,
                erasure: record.erasure,
                rx_outage: record.rx_outage,
                tx_buffers: buffers.tx.clone(),
                rx_buffer: buffers.rx,
            });
        }
        if slot >= opts.burn_in {
            measured += 1;
            erasures += record.erasure as u64;
            outages += record.rx_outage as u64;
            delivered += record.banked;
            rf += record.xi;
            for i in 0..l {
                power[i] += record.actual[i];
                clips[i] += (record.actual[i] < policy.row(s)[i]) as u64;
            }
            if record.decoded() {
                if let Some(r) = rates {
                    for (acc, v) in rate.iter_mut().zip(r.row(s)) {
                        *acc += v * credit;
                    }
                }
            }
        }
        while next_cp < pending.len() && pending[next_cp] == slot + 1 {
            let denom = measured.max(1) as f64;
            checkpoints.push(Checkpoint {
                slot: slot + 1,
                tx_buffers: buffers.tx.clone(),
                rx_buffer: buffers.rx,
                clip_fraction: clips.iter().map(|&c| c as f64 / denom).collect(),
            });
            next_cp += 1;
        }
    }

    let n = measured as f64;
    Ok(SimStats {
        slots: measured,
        erasure_fraction: erasures as f64 / n,
        avg_tx_power: power.iter().map(|p| p / n).collect(),
        avg_delivered: delivered / n,
        avg_rf: rf / n,
        rx_outage_fraction: outages as f64 / n,
        tx_clip_fraction: clips.iter().map(|&c| c as f64 / n).collect(),
        final_tx_buffers: buffers.tx,
        final_rx_buffer: buffers.rx,
        achieved_rate_estimate: rate.iter().map(|r| r / n).collect(),
        checkpoints,
        trace,
    })
}

/// Simulate the policy of a solved boundary point.
pub fn run_boundary(scenario: &Scenario, point: &BoundaryPoint, opts: &SimOptions) -> Result<SimStats> {
    if point.model != scenario.model {
        return Err(invalid("boundary point was solved for a different receiver model"));
    }
    run(scenario, &point.policy, Some(&point.rates), point.pi_e, opts)
}
