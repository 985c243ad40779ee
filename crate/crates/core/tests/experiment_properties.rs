use std::f64::consts::TAU;

use multilevel_control::dynamics::IntegratorConfig;
use multilevel_control::experiments::{
    injected_epsilon, measure_fidelity_vs_n, run_scenario, static_error_infidelity, Method, NoiseParams, ScenarioConfig,
};
use multilevel_control::measurement::MeasurementModel;
use multilevel_control::waveforms::AdiabaticParams;
use proptest::prelude::*;

fn small_config() -> ScenarioConfig {
    ScenarioConfig { ns: vec![2, 4, 8], quadrature_nodes: 8, ..ScenarioConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn reruns_are_bit_identical(seed in any::<u64>(), scenario in prop::sample::select(vec!["fig4b", "fig2e", "ramsey"])) {
        let cfg = ScenarioConfig { trajectory_points: 50, ramsey_ns: vec![0, 4], ..ScenarioConfig::default() };
        let a = serde_json::to_string(&run_scenario(scenario, &cfg, seed).unwrap()).unwrap();
        let b = serde_json::to_string(&run_scenario(scenario, &cfg, seed).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn static_errors_order_the_infidelity() {
    let p = AdiabaticParams::reference();
    let ic = IntegratorConfig::default();
    let along = |f: &dyn Fn(f64) -> (f64, f64)| -> Vec<f64> {
        [0.0, 0.5, 1.0]
            .iter()
            .map(|&s| {
                let (m, d) = f(s);
                static_error_infidelity(&p, m, d, &ic).unwrap()
            })
            .collect()
    };
    for ray in
        [along(&|s| (0.015 * s, 0.0)), along(&|s| (0.0, TAU * 30.0 * s)), along(&|s| (0.015 * s, TAU * 30.0 * s))]
    {
        assert!(ray[0] <= ray[1] && ray[1] <= ray[2], "{ray:?}");
    }
}

fn epsilon_along(method: Method, ray: fn(f64) -> NoiseParams) -> Vec<f64> {
    let cfg = small_config();
    [0.0, 0.5, 1.0].iter().map(|&s| injected_epsilon(method, &cfg, &ray(s), &cfg.ns).unwrap()).collect()
}

#[test]
fn noise_orders_the_per_operation_infidelity() {
    let rays: [fn(f64) -> NoiseParams; 4] = [
        |s| NoiseParams { zeeman_sigma: TAU * 400.0 * s, ..NoiseParams::default() },
        |s| NoiseParams { rabi_mismatch: 0.01 * s, ..NoiseParams::default() },
        |s| NoiseParams { static_detuning: TAU * 30.0 * s, ..NoiseParams::default() },
        |s| NoiseParams { common_rabi_error: -TAU * 10e3 * s, ..NoiseParams::default() },
    ];
    for (i, ray) in rays.into_iter().enumerate() {
        for method in [Method::Adiabatic, Method::Tbb1] {
            if i == 3 && method == Method::Adiabatic {
                continue;
            }
            let eps = epsilon_along(method, ray);
            assert!(eps[0] <= eps[1] && eps[1] <= eps[2], "{method:?}, ray {i}: {eps:?}");
        }
    }
}

#[test]
fn adiabatic_transfer_is_insensitive_to_common_rabi_error() {
    // the coherent non-adiabatic floor moves with ΔΩ in either direction, so only a bound holds
    for sign in [-1.0, 1.0] {
        let ray: fn(f64) -> NoiseParams = if sign < 0.0 {
            |s| NoiseParams { common_rabi_error: -TAU * 10e3 * s, ..NoiseParams::default() }
        } else {
            |s| NoiseParams { common_rabi_error: TAU * 10e3 * s, ..NoiseParams::default() }
        };
        let eps = epsilon_along(Method::Adiabatic, ray);
        assert!(eps.iter().all(|e| (e - eps[0]).abs() < eps[0]), "{eps:?}");
    }
}

#[test]
fn measured_fidelity_matches_the_simulated_state() {
    let cfg = small_config();
    let noise = NoiseParams { zeeman_sigma: TAU * 300.0, ..NoiseParams::default() };
    let m = MeasurementModel::ideal(100_000_000, 5);
    let res = measure_fidelity_vs_n(Method::Adiabatic, &cfg.ns, Some(&m), &noise, &cfg).unwrap();
    for p in &res.points {
        assert!((p.fitted_raw - p.exact).abs() < 1e-4, "N = {}: {} vs {}", p.n, p.fitted_raw, p.exact);
    }
    let exact = measure_fidelity_vs_n(Method::Adiabatic, &cfg.ns, None, &noise, &cfg).unwrap();
    assert!((exact.fit.epsilon - exact.injected).abs() < 1e-9 * exact.injected.max(1e-6) + 1e-12);
}

#[test]
fn recovered_epsilon_covers_the_injected_value() {
    let cfg = ScenarioConfig::default();
    let noise = NoiseParams { zeeman_sigma: TAU * 340.0, ..NoiseParams::default() };
    let runs = 20;
    let covered = (0..runs)
        .filter(|&seed| {
            let r =
                measure_fidelity_vs_n(Method::Adiabatic, &cfg.ns, Some(&cfg.measurement(seed)), &noise, &cfg).unwrap();
            ((r.fit.epsilon - r.injected) / r.fit.sigma).abs() <= 3.0
        })
        .count();
    assert!(covered >= runs as usize - 1, "{covered}/{runs}");
}
