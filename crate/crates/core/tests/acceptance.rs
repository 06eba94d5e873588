//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p spinq-core --test acceptance`.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use spinq_core::device::{larmor_frequency, thermal_up_probability, zeeman_splitting, DotParams};
use spinq_core::esr::{evolve_bloch, evolve_bloch_vector, min_observable_f1, rabi_frequency, BlochSettings, EsrPulse};
use spinq_core::exchange::{
    operator_norm, propagator, sqrt_swap_gate, swap_demo_experiment, swap_gate, swap_time, ExchangePulse,
};
use spinq_core::harness::{error_per_gate_budget, run_protocol_with, DeviceParams, ProtocolStep, RunOptions};
use spinq_core::init::InitMethod;
use spinq_core::microwave::{cavity_power_estimate, ohmic_power, required_current, wire_field, WireGeometry};
use spinq_core::readout::{
    analytic_fidelity, outcome_spin_mutual_information, simulate_shot, simulate_shot_for_spin, timing_chain_check,
    DetectorModel, ReadoutConfig, ReadoutRecord,
};
use spinq_core::rng::StreamFactory;
use spinq_core::state::BlochVector;
use spinq_core::{Qubit, Spin, SpinState};

// Reference constants, typed in independently of the library.
const MU_B: f64 = 5.788_381_806_0e-5; // eV/T
const K_B: f64 = 8.617_333_262e-5; // eV/K
const H: f64 = 4.135_667_696e-15; // eV s

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn zeeman_scale() -> Check {
    let e = zeeman_splitting(0.44, 1.0).map_err(err)?;
    let oracle = 0.44 * MU_B;
    ensure(rel(e, oracle) < 1e-12, format!("{e} vs oracle {oracle}"))?;
    ensure((e * 1e6 - 25.5).abs() < 0.05, format!("{:.3} μeV is not 25.5 μeV", e * 1e6))?;
    ensure(rel(e, 25e-6) < 0.02, format!("{:.3} μeV is not within 2% of 25 μeV", e * 1e6))?;
    Ok(format!("ΔE_z(0.44, 1 T) = {:.3} μeV", e * 1e6))
}

fn thermal_initialization() -> Check {
    let oracle = |de: f64, t: f64| 1.0 / (1.0 + (-de / (K_B * t)).exp());
    // Temperature at which the reference device's splitting is exactly 5 k_B T.
    let t5 = 0.44 * MU_B * 5.0 / (5.0 * K_B);
    let p5 = thermal_up_probability(0.44, 5.0, t5).map_err(err)?;
    ensure((p5 - 0.99331).abs() < 1e-5, format!("p(5 kT) = {p5}"))?;
    ensure((p5 - 1.0 / (1.0 + (-5.0f64).exp())).abs() < 1e-12, "differs from logistic(5)")?;
    ensure(p5 > 0.99, "does not exceed 99%")?;
    let p300 = thermal_up_probability(0.44, 5.0, 0.3).map_err(err)?;
    ensure((p300 - 0.9928).abs() < 5e-4, format!("p(300 mK) = {p300}"))?;
    ensure((p300 - oracle(0.44 * MU_B * 5.0, 0.3)).abs() < 1e-12, "differs from Boltzmann oracle")?;
    Ok(format!("p(5 kT) = {p5:.6}, p(0.44, 5 T, 300 mK) = {p300:.5}"))
}

fn resonance_frequency() -> Check {
    let f = larmor_frequency(0.44, 5.0).map_err(err)?;
    let oracle = 0.44 * MU_B * 5.0 / H;
    ensure(rel(f, oracle) < 1e-12, format!("{f} vs oracle {oracle}"))?;
    ensure((f / 1e9 - 30.8).abs() < 0.05, format!("{:.3} GHz", f / 1e9))?;
    ensure(rel(f, 30e9) < 0.05, "not within 5% of 30 GHz")?;
    Ok(format!("f_L(0.44, 5 T) = {:.3} GHz", f / 1e9))
}

fn cw_saturation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let t1 = 10f64.powf(rng.random_range(-6.0..-5.0));
        let t2 = 10f64.powf(rng.random_range(-8.0..-6.8)).min(2.0 * t1);
        let s = 10f64.powf(rng.random_range(-1.0..1.0));
        let f1 = (s / (t1 * t2)).sqrt() / (2.0 * PI);
        let b1 = f1 * H / (0.44 * MU_B);
        let dot = DotParams {
            temperature: 0.01,
            t1,
            t2,
            ..DotParams::reference_device()
        };
        let pulse = EsrPulse::resonant(&dot, b1, 25.0 * t1);
        let settings = BlochSettings::auto(&pulse, &dot);
        let m = evolve_bloch_vector(BlochVector::new(0.0, 0.0, 1.0), &pulse, &dot, &settings).map_err(err)?;
        let numeric = 0.5 * (1.0 + m.mz);
        let closed = 0.5 * (1.0 + 1.0 / (1.0 + (2.0 * PI * f1).powi(2) * t1 * t2));
        worst = worst.max((numeric - closed).abs());
    }
    ensure(worst < 1e-4, format!("max deviation {worst:e}"))?;
    let fmin = min_observable_f1(100e-6, 100e-9).map_err(err)?;
    let oracle = 1.0 / (2.0 * PI * (100e-6f64 * 100e-9).sqrt());
    ensure(rel(fmin, oracle) < 1e-12, format!("{fmin} vs oracle {oracle}"))?;
    ensure((fmin / 1e3 - 50.3).abs() < 0.05, format!("{:.2} kHz", fmin / 1e3))?;
    ensure(rel(fmin, 50e3) < 0.01, "not within 1% of 50 kHz")?;
    Ok(format!("20 triples, max |Δ| = {worst:.1e}; min f1 = {:.2} kHz", fmin / 1e3))
}

fn rabi_dynamics() -> Check {
    let dot = DotParams {
        t1: f64::INFINITY,
        t2: f64::INFINITY,
        ..DotParams::reference_device()
    };
    let b1 = 1e-3;
    let f1 = 0.44 * MU_B * b1 / H;
    ensure(rel(rabi_frequency(0.44, b1).map_err(err)?, f1) < 1e-12, "Rabi frequency")?;
    let mut worst = 0.0f64;
    for k in 0..=300 {
        let t = 3.0 * k as f64 / 300.0 / f1;
        let pulse = EsrPulse::resonant(&dot, b1, t);
        let out = evolve_bloch(&SpinState::pure_up(), &pulse, &dot, &BlochSettings::auto(&pulse, &dot)).map_err(err)?;
        let expected = (PI * f1 * t).sin().powi(2);
        worst = worst.max((out.probability_down(Qubit::First) - expected).abs());
    }
    ensure(worst < 1e-4, format!("max error {worst:e}"))?;
    let pi = EsrPulse::resonant(&dot, b1, 0.5 / f1);
    let flipped = evolve_bloch(&SpinState::pure_up(), &pi, &dot, &BlochSettings::auto(&pi, &dot)).map_err(err)?;
    let d = flipped.max_abs_diff(&SpinState::pure_down());
    ensure(d < 1e-6, format!("π pulse leaves {d:e}"))?;
    Ok(format!("max |Pr[↓] - sin²| = {worst:.1e} over 3 periods; π-pulse error {d:.1e}"))
}

fn wire_field_anchors() -> Check {
    let far = WireGeometry::new(200e-6, 0.0).map_err(err)?;
    let near = WireGeometry::new(200e-9, 0.0).map_err(err)?;
    let b_far = wire_field(1.0, &far).map_err(err)?;
    let b_near = wire_field(1e-3, &near).map_err(err)?;
    let mt = |b: f64| format!("{:.3}", b * 1e3);
    ensure(mt(b_far) == "1.000", format!("1 A at 200 μm gives {} mT", mt(b_far)))?;
    ensure(mt(b_near) == "1.000", format!("1 mA at 200 nm gives {} mT", mt(b_near)))?;
    let i = required_current(1e-5, &far).map_err(err)?;
    ensure(rel(i, 10e-3) < 1e-6, format!("required current {i}"))?;
    Ok(format!("{} mT, {} mT, {:.3} mA", mt(b_far), mt(b_near), i * 1e3))
}

fn power_budget() -> Check {
    let g = WireGeometry::new(200e-9, 20.0).map_err(err)?;
    let p = ohmic_power(1e-3, &g).map_err(err)?;
    ensure(rel(p, 10e-6) < 1e-12, format!("ohmic power {p}"))?;
    let c1 = cavity_power_estimate(1e-3).map_err(err)?;
    let c2 = cavity_power_estimate(1e-5).map_err(err)?;
    ensure(rel(c1, 1.0) < 0.01, format!("cavity at 1 mT: {c1}"))?;
    ensure(rel(c2, 100e-6) < 0.01, format!("cavity at 0.01 mT: {c2}"))?;
    Ok(format!("ohmic {:.2} μW; cavity {c1:.3} W and {:.1} μW", p * 1e6, c2 * 1e6))
}

fn monte_carlo_fidelity(config: &ReadoutConfig, detector: &DetectorModel, spin: Spin, shots: u64, seed: u64) -> f64 {
    let factory = StreamFactory::new(seed);
    let correct: u64 = (0..shots)
        .into_par_iter()
        .map(|i| {
            let r = simulate_shot_for_spin(spin, config, detector, &mut factory.stream(i, 0)).expect("valid config");
            (r.declared == Some(spin)) as u64
        })
        .sum();
    correct as f64 / shots as f64
}

fn readout_oracle() -> Check {
    const SHOTS: u64 = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_z = 0.0f64;
    for k in 0..10 {
        let t_m = 10f64.powf(rng.random_range(-6.5..-5.0));
        let gamma_up = 10f64.powf(rng.random_range(5.5..7.5));
        let gamma_down = gamma_up * 10f64.powf(rng.random_range(-5.0..-1.0));
        let sigma = if k % 3 == 0 { 0.0 } else { rng.random_range(0.05..0.5) };
        let config = if k % 4 == 3 {
            ReadoutConfig::energy_threshold(gamma_up, t_m)
        } else {
            ReadoutConfig::rate_selective(gamma_up, gamma_down, t_m)
        }
        .map_err(err)?;
        let detector = DetectorModel::with_noise(sigma);
        let (fu, fd) = analytic_fidelity(&config, &detector).map_err(err)?;
        for (spin, f) in [(Spin::Up, fu), (Spin::Down, fd)] {
            let mc = monte_carlo_fidelity(&config, &detector, spin, SHOTS, 100 + k);
            let sd = (f * (1.0 - f) / SHOTS as f64).sqrt();
            let z = if sd > 0.0 { (mc - f).abs() / sd } else if mc == f { 0.0 } else { f64::INFINITY };
            worst_z = worst_z.max(z);
            ensure(
                z <= 3.0,
                format!("config {k} {spin:?}: MC {mc} vs analytic {f} ({z:.2} σ)"),
            )?;
        }
    }
    let reference = ReadoutConfig::reference_rate_selective();
    for detector in [DetectorModel::noiseless(), DetectorModel::with_noise(0.1)] {
        let (fu, fd) = analytic_fidelity(&reference, &detector).map_err(err)?;
        let mu = monte_carlo_fidelity(&reference, &detector, Spin::Up, SHOTS, 1);
        let md = monte_carlo_fidelity(&reference, &detector, Spin::Down, SHOTS, 2);
        ensure(fu > 0.99 && fd > 0.99 && mu > 0.99 && md > 0.99, format!("reference regime: {fu} {fd} {mu} {md}"))?;
    }
    let (fu, fd) = analytic_fidelity(&reference, &DetectorModel::noiseless()).map_err(err)?;
    Ok(format!("10 configs within {worst_z:.2} σ; reference regime F↑ = {fu:.5}, F↓ = {fd:.5}"))
}

fn broken_null_result() -> Check {
    let config = ReadoutConfig::broken_midgap_ef(1e7, 1e7, 5e-6).map_err(err)?;
    let factory = StreamFactory::new(21);
    let records: Vec<ReadoutRecord> = (0..100_000u64)
        .into_par_iter()
        .map(|i| simulate_shot(0.5, &config, &DetectorModel::noiseless(), &mut factory.stream(i, 0)).expect("valid"))
        .collect();
    let mi = outcome_spin_mutual_information(&records).map_err(err)?;
    ensure(mi < 0.01, format!("mutual information {mi} bit"))?;
    let ones = records.iter().filter(|r| r.final_charge() == 1).count();
    ensure(ones == records.len(), format!("{} of {} trajectories end with one electron", ones, records.len()))?;
    Ok(format!("I(spin; outcome) = {mi:.2e} bit, final charge 1 in {ones}/{}", records.len()))
}

fn timing_chain() -> Check {
    let dot = DotParams::reference_device();
    let reference = ReadoutConfig::reference_rate_selective();
    let report = timing_chain_check(&reference, &dot);
    ensure(report.all_passed(), format!("reference numbers fail {:?}", report.failed()))?;
    let mutations: [(&str, ReadoutConfig, DotParams); 4] = [
        ("T_t < T_m", ReadoutConfig { gamma_up_out: 1e5, ..reference }, dot),
        ("T_m < T_1", reference, DotParams { t1: 1e-6, ..dot }),
        ("T_m < T_1", ReadoutConfig { measurement_window: 500e-6, ..reference }, dot),
        ("T_m < T_nt", ReadoutConfig { gamma_down_out: 1e6, ..reference }, dot),
    ];
    for (link, config, d) in mutations {
        let failed = timing_chain_check(&config, &d).failed().iter().map(|s| s.to_string()).collect::<Vec<_>>();
        ensure(failed == vec![link.to_string()], format!("mutating {link} reported {failed:?}"))?;
    }
    Ok("reference numbers pass; 4 single-link mutations each fail exactly one link".into())
}

fn swap_demo() -> Check {
    let demo = swap_demo_experiment(0.5, 10_000, ReadoutConfig::ideal(), 2024).map_err(err)?;
    let [[b1, b2], [a1, a2]] = demo.up_fractions();
    ensure(b1 == 1.0, format!("before: q1 = {b1}"))?;
    ensure((b2 - 0.5).abs() <= 0.015, format!("before: q2 = {b2}"))?;
    ensure(a2 == 1.0, format!("after: q2 = {a2}"))?;
    ensure((a1 - 0.5).abs() <= 0.015, format!("after: q1 = {a1}"))?;
    let sq = sqrt_swap_gate();
    let d_gate = operator_norm(&(sq * sq - swap_gate()));
    ensure(d_gate < 1e-12, format!("sqrt_swap² - swap = {d_gate:e}"))?;
    let j = H * 20e9;
    let half = propagator(&ExchangePulse::sqrt_swap(j).map_err(err)?, 0.44, 0.44, 5.0).map_err(err)?;
    let full = propagator(&ExchangePulse::swap(j).map_err(err)?, 0.44, 0.44, 5.0).map_err(err)?;
    let d_exchange = operator_norm(&(half * half - full));
    ensure(d_exchange < 1e-12, format!("exchange √SWAP² - SWAP = {d_exchange:e}"))?;
    let t = swap_time(j).map_err(err)?;
    ensure(rel(t, 25e-12) < 1e-12 && t < 100e-12, format!("swap time {t}"))?;
    Ok(format!(
        "before ({b1:.4}, {b2:.4}) after ({a1:.4}, {a2:.4}); ‖√SWAP² - SWAP‖ = {d_gate:.1e}; t_SWAP = {:.1} ps",
        t * 1e12
    ))
}

fn error_budget() -> Check {
    let e = error_per_gate_budget(10e-9, 100e-6).map_err(err)?;
    ensure(rel(e, 1e-4) < 1e-12, format!("{e}"))?;
    Ok(format!("error_per_gate(10 ns, 100 μs) = {e:e}"))
}

/// Protocols covering every step kind and readout path.
fn protocol_suite() -> Vec<(&'static str, Vec<ProtocolStep>, DeviceParams)> {
    let device = DeviceParams::reference_device();
    let noisy = DeviceParams {
        detector: DetectorModel::with_noise(0.3),
        ..device.clone()
    };
    let two = DeviceParams {
        qubits: vec![DotParams::reference_device(), DotParams { g_d: 0.4, ..DotParams::reference_device() }],
        ..noisy.clone()
    };
    let dot = device.qubits[0];
    let pi_half = EsrPulse::resonant(&dot, 1e-3, 0.25 / rabi_frequency(0.44, 1e-3).unwrap());
    let j = H * 20e9;
    let readout = ReadoutConfig::reference_rate_selective();
    let measure = |qubit| ProtocolStep::Measure { qubit, readout };
    vec![
        (
            "noisy readout of a mixture",
            vec![ProtocolStep::init_mixed(Qubit::First, 0.3), measure(Qubit::First)],
            noisy.clone(),
        ),
        (
            "thermal init, Rabi burst, wait",
            vec![
                ProtocolStep::Init {
                    qubit: Qubit::First,
                    method: InitMethod::ThermalEquilibration { wait_time: 500e-6 },
                },
                ProtocolStep::EsrBurst {
                    qubit: Qubit::First,
                    pulse: pi_half,
                    settings: None,
                },
                ProtocolStep::Wait { duration: 50e-9 },
                measure(Qubit::First),
            ],
            noisy.clone(),
        ),
        (
            "sqrt-swap entangler with repeated readout",
            vec![
                ProtocolStep::init_up(Qubit::First),
                ProtocolStep::init_mixed(Qubit::Second, 0.0),
                ProtocolStep::ExchangePulse(ExchangePulse::sqrt_swap(j).unwrap()),
                measure(Qubit::First),
                ProtocolStep::Init {
                    qubit: Qubit::First,
                    method: InitMethod::TunnelFromPolarizedLeads { tunnel_time: 0.1e-6 },
                },
                measure(Qubit::Second),
                measure(Qubit::First),
            ],
            two,
        ),
        (
            "midgap configuration",
            vec![
                ProtocolStep::init_mixed(Qubit::First, 0.5),
                ProtocolStep::Measure {
                    qubit: Qubit::First,
                    readout: ReadoutConfig::broken_midgap_ef(1e7, 1e7, 5e-6).unwrap(),
                },
            ],
            noisy,
        ),
    ]
}

fn determinism() -> Check {
    const SHOTS: u64 = 20_000;
    let mut total = 0;
    for (name, steps, device) in protocol_suite() {
        let mut outputs = Vec::new();
        for workers in [1, 8, 1, 8] {
            let options = RunOptions {
                workers: Some(workers),
                collect_records: false,
            };
            let (result, _) = run_protocol_with(&steps, &device, SHOTS, 0xACCE_1A7E, &options).map_err(err)?;
            ensure(result.outcome_counts.values().sum::<u64>() == SHOTS, format!("{name}: counts do not sum"))?;
            outputs.push(result.to_json());
        }
        ensure(outputs.iter().all(|o| o == &outputs[0]), format!("{name}: JSON differs between runs"))?;
        total += 1;
    }
    let demo = |workers| {
        let r = swap_demo_experiment(0.5, SHOTS, ReadoutConfig::reference_rate_selective(), 77);
        r.map(|d| serde_json::to_string(&d).unwrap()).map_err(err).map(|s| (workers, s))
    };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| demo(1))?;
    let eight = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap().install(|| demo(8))?;
    ensure(one.1 == eight.1, "swap demo differs between 1 and 8 workers")?;
    Ok(format!("{} protocols plus the SWAP demo byte-identical at 1 and 8 workers", total))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 13] = [
        ("Zeeman scale", zeeman_scale),
        ("Thermal initialization", thermal_initialization),
        ("Resonance frequency", resonance_frequency),
        ("CW saturation", cw_saturation),
        ("Rabi dynamics", rabi_dynamics),
        ("Wire field", wire_field_anchors),
        ("Power budget", power_budget),
        ("Readout oracle equivalence", readout_oracle),
        ("Broken-scheme null result", broken_null_result),
        ("Timing chain", timing_chain),
        ("SWAP demo", swap_demo),
        ("Error budget", error_budget),
        ("Determinism", determinism),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({secs:.2} s)", i + 1),
            Err(why) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {why} ({secs:.2} s)", i + 1)
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed in {:.1} s",
        criteria.len() - failures,
        start.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
