use std::ffi::{CStr, CString};
use std::ptr;

use swipt_mac_ffi::*;

fn last_error() -> String {
    let p = swipt_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn reference() -> *mut SwiptScenario {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { swipt_scenario_reference(&mut s) }, SwiptStatus::Ok);
    assert!(!s.is_null());
    s
}

#[test]
fn version_and_status_names() {
    let v = unsafe { CStr::from_ptr(swipt_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let name = unsafe { CStr::from_ptr(swipt_status_name(SwiptStatus::InfeasibleEnergy as i32)) };
    assert_eq!(name.to_str().unwrap(), "infeasible energy");
    let name = unsafe { CStr::from_ptr(swipt_status_name(99)) };
    assert_eq!(name.to_str().unwrap(), "unknown status");
}

#[test]
fn scenario_queries() {
    let s = reference();
    let mut l = 0usize;
    let mut n = 0usize;
    let mut d = 0.0;
    unsafe {
        assert_eq!(swipt_scenario_num_users(s, &mut l), SwiptStatus::Ok);
        assert_eq!(swipt_scenario_num_states(s, &mut n), SwiptStatus::Ok);
        assert_eq!(swipt_scenario_deficit(s, &mut d), SwiptStatus::Ok);
    }
    assert_eq!(l, 2);
    assert_eq!(n, 2500);
    assert!((d - 1e-11).abs() < 1e-20);

    unsafe {
        assert_eq!(swipt_scenario_set_deficit(s, 2e-11), SwiptStatus::Ok);
        assert_eq!(swipt_scenario_deficit(s, &mut d), SwiptStatus::Ok);
        assert_eq!(swipt_scenario_set_deficit(s, -1.0), SwiptStatus::InvalidArgument);
        swipt_scenario_free(s);
    }
    assert!((d - 2e-11).abs() < 1e-20);
}

#[test]
fn null_arguments_are_reported() {
    let mut l = 0usize;
    unsafe {
        assert_eq!(swipt_scenario_num_users(ptr::null(), &mut l), SwiptStatus::NullPointer);
        assert_eq!(swipt_scenario_reference(ptr::null_mut()), SwiptStatus::NullPointer);
        assert_eq!(swipt_scenario_from_toml(ptr::null(), ptr::null_mut()), SwiptStatus::NullPointer);
        swipt_scenario_free(ptr::null_mut());
        swipt_point_free(ptr::null_mut());
        swipt_trace_free(ptr::null_mut());
        swipt_sim_free(ptr::null_mut());
    }
    assert!(last_error().contains("null"));
}

#[test]
fn bad_config_is_a_config_error() {
    let text = CString::new("power_unit = \"W\"\nbogus = 1\n").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { swipt_scenario_from_toml(text.as_ptr(), &mut s) }, SwiptStatus::ConfigError);
    assert!(s.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn constant_gains_without_enough_rf_are_infeasible() {
    let text = CString::new(
        r#"
power_unit = "W"
slot_duration = 1e-6
sigma2 = 1.0

[transmitters]
mean_harvest = [5.0, 3.0]

[fading]
kind = "constant"
gains = [0.1, 0.1]

[receiver]
mean_harvest = "10 uW"
mean_consumption = "30 uW"
eta = 1e-5
"#,
    )
    .unwrap();
    let mut s = ptr::null_mut();
    let mut r = 0.0;
    unsafe {
        assert_eq!(swipt_scenario_from_toml(text.as_ptr(), &mut s), SwiptStatus::Ok);
        assert_eq!(swipt_sum_rate(s, SwiptModel::TimeSwitching as i32, &mut r), SwiptStatus::InfeasibleEnergy);
        swipt_scenario_free(s);
    }
    assert!(last_error().contains("infeasible energy"));
}

#[test]
fn ideal_sum_rate_and_point() {
    let s = reference();
    let mut r = 0.0;
    assert_eq!(unsafe { swipt_sum_rate(s, SwiptModel::Ideal as i32, &mut r) }, SwiptStatus::Ok);
    assert!((r - 1.843947).abs() < 1e-5, "{r}");

    let mu = [0.5, 0.5];
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { swipt_dual_solve(s, 0, mu.as_ptr(), 2, &mut p) }, SwiptStatus::Ok);

    let mut n = 0usize;
    let mut rates = [0.0; 2];
    let mut small = [0.0; 1];
    let mut lambdas = [0.0; 3];
    let mut powers = [0.0; 2];
    let (mut pi, mut delivered) = (1.0, 0.0);
    unsafe {
        assert_eq!(swipt_point_rates(p, ptr::null_mut(), 0, &mut n), SwiptStatus::Ok);
        assert_eq!(n, 2);
        assert_eq!(swipt_point_rates(p, small.as_mut_ptr(), 1, &mut n), SwiptStatus::BufferTooSmall);
        assert_eq!(swipt_point_rates(p, rates.as_mut_ptr(), 2, ptr::null_mut()), SwiptStatus::Ok);
        assert_eq!(swipt_point_multipliers(p, lambdas.as_mut_ptr(), 3, &mut n), SwiptStatus::Ok);
        assert_eq!(n, 3);
        assert_eq!(swipt_point_powers(p, powers.as_mut_ptr(), 2, ptr::null_mut()), SwiptStatus::Ok);
        assert_eq!(swipt_point_pi_e(p, &mut pi), SwiptStatus::Ok);
        assert_eq!(swipt_point_delivered(p, &mut delivered), SwiptStatus::Ok);
        swipt_point_free(p);
    }
    assert!((rates[0] + rates[1] - r).abs() < 1e-6);
    assert!(rates.iter().all(|&x| x > 0.0));
    assert!(lambdas[..2].iter().all(|&x| x > 0.0));
    assert!((powers[0] - 5e-6).abs() < 5e-6 * 1e-6);
    assert!((powers[1] - 3e-6).abs() < 3e-6 * 1e-6);
    assert_eq!(pi, 0.0);
    assert!(delivered >= 1e-11 * (1.0 - 1e-6));
    unsafe { swipt_scenario_free(s) };
}

#[test]
fn dual_solve_rejects_wrong_reward_length() {
    let s = reference();
    let mu = [1.0, 0.0, 0.0];
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(swipt_dual_solve(s, 0, mu.as_ptr(), 3, &mut p), SwiptStatus::DimensionMismatch);
        assert_eq!(swipt_dual_solve(s, 7, mu.as_ptr(), 2, &mut p), SwiptStatus::InvalidArgument);
        swipt_scenario_free(s);
    }
    assert!(p.is_null());
}

#[test]
fn ideal_trace() {
    let s = reference();
    let mut t = ptr::null_mut();
    let mut len = 0usize;
    assert_eq!(unsafe { swipt_trace(s, 0, 3, &mut t) }, SwiptStatus::Ok);
    unsafe { swipt_trace_len(t, &mut len) };
    assert_eq!(len, 3);
    let mut prev_r1 = f64::INFINITY;
    for k in 0..len {
        let mut st = SwiptStatus::Panic;
        let mut mu = [0.0; 2];
        let mut r = [0.0; 2];
        unsafe {
            assert_eq!(swipt_trace_point_status(t, k, &mut st), SwiptStatus::Ok);
            assert_eq!(st, SwiptStatus::Ok);
            assert_eq!(swipt_trace_mu(t, k, mu.as_mut_ptr(), 2, ptr::null_mut()), SwiptStatus::Ok);
            assert_eq!(swipt_trace_rates(t, k, r.as_mut_ptr(), 2, ptr::null_mut()), SwiptStatus::Ok);
        }
        assert!((mu[0] + mu[1] - 1.0).abs() < 1e-12);
        assert!(r[0] <= prev_r1 + 1e-9);
        prev_r1 = r[0];
    }
    let mut st = SwiptStatus::Ok;
    assert_eq!(unsafe { swipt_trace_point_status(t, 3, &mut st) }, SwiptStatus::InvalidArgument);
    unsafe {
        swipt_trace_free(t);
        swipt_scenario_free(s);
    }
}

#[test]
fn short_simulation() {
    let s = reference();
    let mut st = ptr::null_mut();
    let (mut erasure, mut pi, mut delivered) = (0.0, 0.0, 0.0);
    let mut powers = [0.0; 2];
    let mut rates = [0.0; 2];
    unsafe {
        assert_eq!(swipt_simulate(s, SwiptModel::TimeSwitching as i32, 200_000, 3, &mut st), SwiptStatus::Ok);
        swipt_sim_erasure_fraction(st, &mut erasure);
        swipt_sim_analytic_pi_e(st, &mut pi);
        swipt_sim_avg_delivered(st, &mut delivered);
        swipt_sim_avg_tx_power(st, powers.as_mut_ptr(), 2, ptr::null_mut());
        swipt_sim_rates(st, rates.as_mut_ptr(), 2, ptr::null_mut());
        swipt_sim_free(st);
        swipt_scenario_free(s);
    }
    assert!((erasure - pi).abs() < 0.01, "{erasure} vs {pi}");
    assert!(delivered > 0.9e-11);
    assert!((powers[0] / 5e-6 - 1.0).abs() < 0.02);
    assert!((powers[1] / 3e-6 - 1.0).abs() < 0.02);
    assert!(rates.iter().all(|&r| r > 0.0));
}
