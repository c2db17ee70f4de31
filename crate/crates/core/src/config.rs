//! TOML scenario files.
//!
//! Power-like quantities are either bare numbers in the file's `power_unit`
//! or strings with an explicit unit: `"5 W"`, `"10 uW"`, `"-20 dBm"`, or an
//! energy per slot such as `"1e-11 J"`. Everything is converted to joules per
//! slot with `slot_duration` at load.
//!
//! ```toml
//! power_unit = "W"
//! slot_duration = 1e-6
//! sigma2 = 1.0
//!
//! [transmitters]
//! mean_harvest = [5.0, 3.0]
//! min_rate = [0.3, 0.2]
//!
//! [fading]
//! kind = "rayleigh"
//! scale = 1.0
//! q = 0.1
//! h_max = 5.0
//!
//! [receiver]
//! mean_harvest = "10 uW"
//! mean_consumption = "20 uW"
//! eta = 1e-5
//! ```

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Result};
use crate::fading::{joint_states, quantize_rayleigh, MarginalFading};
use crate::optimizer::{Scenario, SolverOptions};
use crate::region::{RateVector, ReceiverEnergetics, ReceiverModel};
use crate::simulator::{HarvestKind, RfMode, SimOptions, SwitchRule};

/// The reference two-user scenario shipped with the tool.
pub const REFERENCE_SCENARIO: &str = include_str!("../scenarios/reference.toml");

/// A number in the file's power unit or a string carrying its own unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

impl From<f64> for Quantity {
    fn from(v: f64) -> Self {
        Quantity::Number(v)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Number(v) => write!(f, "{v}"),
            Quantity::Text(s) => f.write_str(s),
        }
    }
}

/// Power units accepted for bare numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
enum PowerUnit {
    Watts(f64),
    Dbm,
    Dbw,
    /// Already an energy per slot, scaled to joules.
    Joules(f64),
}

fn parse_unit(unit: &str) -> Result<PowerUnit> {
    Ok(match unit {
        "W" => PowerUnit::Watts(1.0),
        "mW" => PowerUnit::Watts(1e-3),
        "uW" | "µW" | "μW" => PowerUnit::Watts(1e-6),
        "nW" => PowerUnit::Watts(1e-9),
        "pW" => PowerUnit::Watts(1e-12),
        "dBm" => PowerUnit::Dbm,
        "dBW" => PowerUnit::Dbw,
        "J" => PowerUnit::Joules(1.0),
        "mJ" => PowerUnit::Joules(1e-3),
        "uJ" | "µJ" | "μJ" => PowerUnit::Joules(1e-6),
        "nJ" => PowerUnit::Joules(1e-9),
        "pJ" => PowerUnit::Joules(1e-12),
        _ => return Err(invalid(format!("unknown unit '{unit}'"))),
    })
}

/// Unit context of a config file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Units {
    default: PowerUnit,
    slot: f64,
}

impl Units {
    pub fn new(power_unit: &str, slot_duration: f64) -> Result<Self> {
        if !(slot_duration > 0.0) || !slot_duration.is_finite() {
            return Err(invalid("slot duration must be positive"));
        }
        Ok(Self { default: parse_unit(power_unit)?, slot: slot_duration })
    }

    fn to_joules(self, value: f64, unit: PowerUnit) -> Result<f64> {
        let j = match unit {
            PowerUnit::Watts(s) => value * s * self.slot,
            PowerUnit::Dbm => 10f64.powf(value / 10.0) * 1e-3 * self.slot,
            PowerUnit::Dbw => 10f64.powf(value / 10.0) * self.slot,
            PowerUnit::Joules(s) => value * s,
        };
        if !j.is_finite() {
            return Err(invalid(format!("quantity {value} does not convert to a finite energy")));
        }
        Ok(j)
    }

    /// Energy per slot of a quantity.
    pub fn joules(&self, q: &Quantity) -> Result<f64> {
        match q {
            Quantity::Number(v) => self.to_joules(*v, self.default),
            Quantity::Text(s) => self.parse(s),
        }
    }

    /// Parse `"<number> [unit]"`; a missing unit means the default one.
    pub fn parse(&self, text: &str) -> Result<f64> {
        let text = text.trim();
        let split = text
            .char_indices()
            .find(|&(i, c)| {
                c.is_alphabetic() && !((c == 'e' || c == 'E') && is_exponent(text, i))
            })
            .map(|(i, _)| i)
            .unwrap_or(text.len());
        let (num, unit) = text.split_at(split);
        let value: f64 = num
            .trim()
            .parse()
            .map_err(|_| invalid(format!("cannot read a number from '{text}'")))?;
        let unit = unit.trim();
        let unit = if unit.is_empty() { self.default } else { parse_unit(unit)? };
        self.to_joules(value, unit)
    }
}

fn is_exponent(text: &str, i: usize) -> bool {
    let bytes = text.as_bytes();
    i > 0
        && bytes[i - 1].is_ascii_digit()
        && bytes
            .get(i + 1)
            .is_some_and(|&b| b.is_ascii_digit() || b == b'-' || b == b'+')
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmitterSection {
    pub mean_harvest: Vec<Quantity>,
    #[serde(default)]
    pub min_rate: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FadingSection {
    /// Quantized Rayleigh gain, identical for every user.
    Rayleigh { scale: f64, q: f64, h_max: f64 },
    /// One explicit law shared by every user.
    Discrete { support: Vec<f64>, pmf: Vec<f64> },
    /// Deterministic gain per user.
    Constant { gains: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverSection {
    pub mean_harvest: Quantity,
    pub mean_consumption: Quantity,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub horizon: u64,
    pub burn_in: u64,
    pub seed: u64,
    /// Power backoff as a fraction of each mean harvest.
    pub backoff: f64,
    pub tx_harvest: HarvestKind,
    pub rx_harvest: HarvestKind,
    pub rx_consumption: HarvestKind,
    pub rf_mode: RfMode,
    pub switch_rule: SwitchRule,
    pub strict_split: bool,
    pub initial_tx: Option<Vec<Quantity>>,
    pub initial_rx: Option<Quantity>,
    pub trace_len: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let d = SimOptions::default();
        Self {
            horizon: d.horizon,
            burn_in: d.burn_in,
            seed: d.seed,
            backoff: 1e-3,
            tx_harvest: d.tx_harvest,
            rx_harvest: d.rx_harvest,
            rx_consumption: d.rx_consumption,
            rf_mode: d.rf_mode,
            switch_rule: d.switch_rule,
            strict_split: d.strict_split,
            initial_tx: None,
            initial_rx: None,
            trace_len: d.trace_len,
        }
    }
}

fn default_power_unit() -> String {
    "W".into()
}

fn default_slot() -> f64 {
    1e-6
}

fn default_sigma2() -> Quantity {
    Quantity::Number(1.0)
}

fn default_mu_grid() -> usize {
    21
}

/// A parsed scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_power_unit")]
    pub power_unit: String,
    /// Seconds.
    #[serde(default = "default_slot")]
    pub slot_duration: f64,
    /// Noise variance, read like any other power quantity.
    #[serde(default = "default_sigma2")]
    pub sigma2: Quantity,
    #[serde(default = "default_mu_grid")]
    pub mu_grid: usize,
    pub transmitters: TransmitterSection,
    pub fading: FadingSection,
    pub receiver: ReceiverSection,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub simulation: SimulationSection,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn reference() -> Self {
        Self::from_toml(REFERENCE_SCENARIO).expect("bundled scenario parses")
    }

    /// Canonical serialization: stable key order, every field spelled out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn units(&self) -> Result<Units> {
        Units::new(&self.power_unit, self.slot_duration)
    }

    pub fn num_users(&self) -> usize {
        self.transmitters.mean_harvest.len()
    }

    fn validate(&self) -> Result<()> {
        let l = self.num_users();
        if l == 0 {
            return Err(invalid("config lists no transmitters"));
        }
        if let Some(rho) = &self.transmitters.min_rate {
            if rho.len() != l {
                return Err(invalid(format!("{} minimum rates for {l} transmitters", rho.len())));
            }
        }
        if let FadingSection::Constant { gains } = &self.fading {
            if gains.len() != l {
                return Err(invalid(format!("{} constant gains for {l} transmitters", gains.len())));
            }
        }
        if let Some(init) = &self.simulation.initial_tx {
            if init.len() != l {
                return Err(invalid("initial_tx length differs from the transmitter count"));
            }
        }
        if self.mu_grid < 2 {
            return Err(invalid("mu_grid must be at least 2"));
        }
        self.units()?;
        Ok(())
    }

    /// Build the scenario for one receiver model.
    pub fn scenario(&self, model: ReceiverModel) -> Result<Scenario> {
        let units = self.units()?;
        let l = self.num_users();
        let harvest = self
            .transmitters
            .mean_harvest
            .iter()
            .map(|q| units.joules(q))
            .collect::<Result<Vec<_>>>()?;
        let marginals: Vec<MarginalFading> = match &self.fading {
            FadingSection::Rayleigh { scale, q, h_max } => {
                vec![quantize_rayleigh(*scale, *q, *h_max)?; l]
            }
            FadingSection::Discrete { support, pmf } => {
                vec![MarginalFading::new(support.clone(), pmf.clone())?; l]
            }
            FadingSection::Constant { gains } => {
                gains.iter().map(|&g| MarginalFading::constant(g)).collect::<Result<_>>()?
            }
        };
        let rho = RateVector::new(self.transmitters.min_rate.clone().unwrap_or_else(|| vec![0.0; l]))?;
        let energetics = ReceiverEnergetics::new(
            units.joules(&self.receiver.mean_harvest)?,
            units.joules(&self.receiver.mean_consumption)?,
            self.receiver.eta,
        )?;
        Scenario::new(harvest, joint_states(&marginals)?, rho, units.joules(&self.sigma2)?, energetics, model)
    }

    /// Simulation options with the file's settings; checkpoints are left empty.
    pub fn sim_options(&self) -> Result<SimOptions> {
        let units = self.units()?;
        let s = &self.simulation;
        Ok(SimOptions {
            horizon: s.horizon,
            burn_in: s.burn_in,
            seed: s.seed,
            tx_harvest: s.tx_harvest,
            rx_harvest: s.rx_harvest,
            rx_consumption: s.rx_consumption,
            rf_mode: s.rf_mode,
            switch_rule: s.switch_rule,
            strict_split: s.strict_split,
            initial_tx: match &s.initial_tx {
                Some(v) => v.iter().map(|q| units.joules(q)).collect::<Result<_>>()?,
                None => Vec::new(),
            },
            initial_rx: s.initial_rx.as_ref().map(|q| units.joules(q)).transpose()?,
            checkpoints: Vec::new(),
            trace_len: s.trace_len,
        })
    }
}
