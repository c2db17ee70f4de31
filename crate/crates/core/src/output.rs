//! CSV tables and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::optimizer::TracePoint;
use crate::region::{ergodic_bounds, UserSet};
use crate::simulator::SimStats;

/// `%.9g`: nine significant digits, fixed or scientific by magnitude,
/// trailing zeros dropped. Always uses `.` as the decimal point.
pub fn fmt_g(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))
}

/// `theta, mu1..muL, R1..RL, pi_e, lambda1..lambdaL, lambda_r`; failed points
/// keep their reward columns and leave the rest empty.
pub fn write_boundary(path: &Path, num_users: usize, points: &[TracePoint]) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["theta".to_string()];
    header.extend((1..=num_users).map(|i| format!("mu{i}")));
    header.extend((1..=num_users).map(|i| format!("R{i}")));
    header.push("pi_e".into());
    header.extend((1..=num_users).map(|i| format!("lambda{i}")));
    header.push("lambda_r".into());
    w.write_record(&header)?;
    for p in points {
        let mut row = vec![fmt_g(p.theta)];
        row.extend(p.mu.as_slice().iter().map(|&m| fmt_g(m)));
        match p.point() {
            Some(b) => {
                row.extend(b.avg_rates.as_slice().iter().map(|&r| fmt_g(r)));
                row.push(fmt_g(b.pi_e));
                row.extend(b.multipliers.lambda_tx.iter().map(|&l| fmt_g(l)));
                row.push(fmt_g(b.multipliers.lambda_rx));
            }
            None => row.extend(std::iter::repeat_n(String::new(), 2 * num_users + 2)),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Ergodic subset bounds of every solved boundary point: `theta, subset, bound, rate_sum`.
pub fn write_bounds(path: &Path, scenario: &crate::optimizer::Scenario, points: &[TracePoint]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["theta", "subset", "bound", "rate_sum"])?;
    for p in points {
        let Some(b) = p.point() else { continue };
        let bounds = ergodic_bounds(&b.policy, &scenario.fading, scenario.sigma2, b.model, b.pi_e)?;
        for (set, bound) in bounds.iter() {
            w.write_record([
                fmt_g(p.theta),
                subset_label(set),
                fmt_g(bound),
                fmt_g(b.avg_rates.subset_sum(set)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn subset_label(set: UserSet) -> String {
    set.users().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join("+")
}

/// `param, sum_rate_<model>...` with empty cells for failed points.
pub fn write_sweep(path: &Path, models: &[&str], rows: &[(f64, Vec<Option<f64>>)]) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["param".to_string()];
    header.extend(models.iter().map(|m| format!("sum_rate_{m}")));
    w.write_record(&header)?;
    for (param, values) in rows {
        let mut row = vec![fmt_g(*param)];
        row.extend(values.iter().map(|&v| opt(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// SimStats as `metric, user, value` rows.
pub fn write_sim_stats(path: &Path, stats: &SimStats) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["metric", "user", "value"])?;
    let mut put = |m: &str, user: Option<usize>, v: f64| {
        w.write_record([m.to_string(), user.map(|u| (u + 1).to_string()).unwrap_or_default(), fmt_g(v)])
    };
    put("slots", None, stats.slots as f64)?;
    put("erasure_fraction", None, stats.erasure_fraction)?;
    put("rx_outage_fraction", None, stats.rx_outage_fraction)?;
    put("avg_delivered", None, stats.avg_delivered)?;
    put("avg_rf", None, stats.avg_rf)?;
    put("final_rx_buffer", None, stats.final_rx_buffer)?;
    for (i, v) in stats.avg_tx_power.iter().enumerate() {
        put("avg_tx_power", Some(i), *v)?;
    }
    for (i, v) in stats.tx_clip_fraction.iter().enumerate() {
        put("tx_clip_fraction", Some(i), *v)?;
    }
    for (i, v) in stats.final_tx_buffers.iter().enumerate() {
        put("final_tx_buffer", Some(i), *v)?;
    }
    for (i, v) in stats.achieved_rate_estimate.iter().enumerate() {
        put("achieved_rate", Some(i), *v)?;
    }
    w.flush()?;
    Ok(())
}

/// One analytic-versus-empirical comparison row.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub quantity: String,
    pub analytic: f64,
    pub empirical: f64,
}

pub fn write_comparison(path: &Path, rows: &[Comparison]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["quantity", "analytic", "empirical", "relative_error"])?;
    for r in rows {
        let rel = if r.analytic != 0.0 { (r.empirical - r.analytic) / r.analytic.abs() } else { f64::NAN };
        w.write_record([r.quantity.clone(), fmt_g(r.analytic), fmt_g(r.empirical), fmt_g(rel)])?;
    }
    w.flush()?;
    Ok(())
}

/// Bounded slot trace for debugging.
pub fn write_slot_trace(path: &Path, stats: &SimStats) -> Result<()> {
    let mut w = writer(path)?;
    let l = stats.avg_tx_power.len();
    let mut header = vec!["slot".to_string(), "state".to_string()];
    header.extend((1..=l).map(|i| format!("t{i}")));
    header.extend(["xi", "erasure", "rx_outage"].map(String::from));
    header.extend((1..=l).map(|i| format!("E{i}")));
    header.push("E_r".into());
    w.write_record(&header)?;
    for r in &stats.trace {
        let mut row = vec![r.slot.to_string(), r.state.to_string()];
        row.extend(r.actual.iter().map(|&t| fmt_g(t)));
        row.push(fmt_g(r.xi));
        row.push((r.erasure as u8).to_string());
        row.push((r.rx_outage as u8).to_string());
        row.extend(r.tx_buffers.iter().map(|&e| fmt_g(e)));
        row.push(fmt_g(r.rx_buffer));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config_hash: String) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config_hash,
            files: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.toml");
        fs::write(&path, toml::to_string(self)?).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::fmt_g;

    #[test]
    fn g_formatting() {
        assert_eq!(fmt_g(0.0), "0");
        assert_eq!(fmt_g(1.0), "1");
        assert_eq!(fmt_g(0.5), "0.5");
        assert_eq!(fmt_g(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_g(123456789.0), "123456789");
        assert_eq!(fmt_g(1234567890.0), "1.23456789e+09");
        assert_eq!(fmt_g(1e-11), "1e-11");
        assert_eq!(fmt_g(-2.5e-6), "-2.5e-06");
        assert_eq!(fmt_g(0.0001), "0.0001");
        assert_eq!(fmt_g(99999.99999), "100000");
    }
}
