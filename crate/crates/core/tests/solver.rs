use swipt_mac::commands::{cmd_sweep, ModelChoice, SweepAxis};
use swipt_mac::config::ScenarioConfig;
use swipt_mac::fading::{joint_states, MarginalFading};
use swipt_mac::optimizer::{dual_solve, dual_solve_at, sum_rate, RewardVector, Scenario, SolverOptions};
use swipt_mac::region::{RateVector, ReceiverEnergetics, ReceiverModel};
use swipt_mac::validate::water_filling_rate;
use swipt_mac::Error;

fn reference(model: ReceiverModel) -> Scenario {
    ScenarioConfig::reference().scenario(model).unwrap()
}

// Regression values produced by this solver on the bundled scenario.
#[test]
fn reference_sum_rates() {
    let opts = SolverOptions::default();
    for (model, expected) in [
        (ReceiverModel::Ideal, 1.843947),
        (ReceiverModel::PowerSplitting, 1.788288),
        (ReceiverModel::TimeSwitching, 1.697571),
    ] {
        let r = sum_rate(&reference(model), &opts).unwrap();
        assert!((r - expected).abs() < 1e-5, "{model}: {r}");
    }
}

#[test]
fn boundary_point_meets_its_constraints() {
    let opts = SolverOptions::default();
    for model in ReceiverModel::ALL {
        let s = reference(model);
        let p = dual_solve(&s, &RewardVector::new(vec![0.7, 0.3]).unwrap(), &opts).unwrap();
        for (got, want) in p.avg_powers.iter().zip(&s.mean_harvest_tx) {
            assert!((got / want - 1.0).abs() <= opts.power_accept_tol, "{model}: power {got} vs {want}");
        }
        let delta = s.deficit();
        match model {
            ReceiverModel::Ideal => {
                assert_eq!(p.pi_e, 0.0);
                assert!(p.delivered >= delta * (1.0 - 1e-9));
                // slack receiver constraint: no price on harvested energy
                if p.delivered > delta * 1.001 {
                    assert_eq!(p.multipliers.lambda_rx, 0.0);
                }
            }
            _ => {
                assert!(p.pi_e > 0.0 && p.pi_e < 1.0);
                assert!((p.pi_e - delta / p.delivered).abs() <= opts.fixed_point_tol * 2.0, "{model}: pi {}", p.pi_e);
            }
        }
        for (r, q) in p.avg_rates.as_slice().iter().zip(s.rho.as_slice()) {
            assert!(*r >= q - 1e-9);
        }
    }
}

#[test]
fn reward_vector_length_is_checked() {
    let s = reference(ReceiverModel::Ideal);
    let r = dual_solve(&s, &RewardVector::new(vec![1.0]).unwrap(), &SolverOptions::default());
    assert!(matches!(r, Err(Error::DimensionMismatch(_))));
}

#[test]
fn unreachable_deficit_is_infeasible_energy() {
    let s = reference(ReceiverModel::TimeSwitching).with_deficit(1e-6);
    let r = sum_rate(&s, &SolverOptions::default());
    assert!(matches!(r, Err(Error::InfeasibleEnergy(_))), "{r:?}");
}

#[test]
fn unsustainable_minimum_rates_are_reported() {
    let s = reference(ReceiverModel::Ideal).with_rho(RateVector::new(vec![3.0, 3.0]).unwrap());
    let r = sum_rate(&s, &SolverOptions::default());
    assert!(matches!(r, Err(Error::InfeasibleScenario(_) | Error::InfeasibleMinRate(_))), "{r:?}");
}

#[test]
fn single_user_reduces_to_water_filling() {
    let base = reference(ReceiverModel::Ideal);
    let m = base.fading.marginals()[0].clone();
    let s = Scenario::new(
        vec![5e-6],
        joint_states(std::slice::from_ref(&m)).unwrap(),
        RateVector::zeros(1),
        base.sigma2,
        ReceiverEnergetics::new(1e-11, 1e-11, 1e-5).unwrap(),
        ReceiverModel::Ideal,
    )
    .unwrap();
    let r = sum_rate(&s, &SolverOptions::default()).unwrap();
    let expected = water_filling_rate(&m, 5e-6, base.sigma2);
    assert!((r - expected).abs() < 1e-6, "{r} vs {expected}");
}

#[test]
fn constant_channel_has_the_gaussian_rate() {
    // one state, no reward floor effects: rate 0.5 log2(1 + P h / sigma2)
    let m = MarginalFading::constant(2.0).unwrap();
    let s = Scenario::new(
        vec![1.5],
        joint_states(&[m]).unwrap(),
        RateVector::zeros(1),
        1.0,
        ReceiverEnergetics::new(0.0, 0.0, 1e-5).unwrap(),
        ReceiverModel::Ideal,
    )
    .unwrap();
    let r = sum_rate(&s, &SolverOptions::default()).unwrap();
    assert!((r - 0.5 * 4f64.log2()).abs() < 1e-9, "{r}");
}

#[test]
fn fixed_erasure_fraction_scales_time_switching_rates() {
    let s = reference(ReceiverModel::TimeSwitching).with_deficit(0.0);
    let mu = RewardVector::uniform(2);
    let opts = SolverOptions::default();
    let free = dual_solve(&s, &mu, &opts).unwrap();
    let half = dual_solve_at(&s, &mu, &opts, 0.5).unwrap();
    assert_eq!(half.pi_e, 0.5);
    // with no floors and no deficit the policy is unchanged and rates halve
    let s0 = s.with_rho(RateVector::zeros(2));
    let free0 = dual_solve(&s0, &mu, &opts).unwrap();
    let half0 = dual_solve_at(&s0, &mu, &opts, 0.5).unwrap();
    assert!((half0.sum_rate() - 0.5 * free0.sum_rate()).abs() < 1e-6);
    assert!(half.sum_rate() < free.sum_rate());
}

#[test]
fn deficit_sweep_is_ordered_and_nonincreasing() {
    let cfg = ScenarioConfig::reference();
    let dir = tempfile::tempdir().unwrap();
    let units = cfg.units().unwrap();
    let values: Vec<f64> = ["0 uW", "15 uW", "30 uW"].iter().map(|v| units.parse(v).unwrap()).collect();
    let report = cmd_sweep(&cfg, SweepAxis::Deficit, &values, ModelChoice::All, dir.path()).unwrap();
    let rows: Vec<Vec<f64>> = report.sum_rates.iter().map(|r| r.iter().map(|v| v.unwrap()).collect()).collect();
    for row in &rows {
        // columns: ideal, ps, ts
        assert!(row[0] >= row[1] - 1e-6 && row[1] >= row[2] - 1e-6, "{row:?}");
    }
    for w in rows.windows(2) {
        for (now, before) in w[1].iter().zip(&w[0]) {
            assert!(*now <= before + 1e-6);
        }
    }
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "param,sum_rate_ideal,sum_rate_ps,sum_rate_ts");
    assert_eq!(csv.lines().count(), 4);
    assert!(dir.path().join("sweep.svg").exists());
    assert!(dir.path().join("manifest.toml").exists());
}

#[test]
fn harvest_sweep_is_nondecreasing() {
    let cfg = ScenarioConfig::reference();
    let dir = tempfile::tempdir().unwrap();
    let values = [2e-6, 4e-6, 8e-6];
    let model = ModelChoice::One(ReceiverModel::PowerSplitting);
    let report = cmd_sweep(&cfg, SweepAxis::Harvest, &values, model, dir.path()).unwrap();
    let rates: Vec<f64> = report.sum_rates.iter().map(|r| r[0].unwrap()).collect();
    assert!(rates.windows(2).all(|w| w[1] >= w[0] - 1e-6), "{rates:?}");
}
