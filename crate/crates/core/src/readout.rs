//! Single-shot spin-to-charge readout.
//!
//! Tunneling is a memoryless Poisson process for each spin species. The
//! charge detector reports the time-averaged dot charge over the measurement
//! window plus white Gaussian noise, and the outcome is declared by comparing
//! that average with a threshold.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::device::DotParams;
use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::state::Spin;
use crate::units::serde_quantity;

/// Reload rate used when none is given.
pub const DEFAULT_GAMMA_IN: f64 = 1e7;

/// Singlet–triplet splitting above which the two-electron scheme is
/// considered robust (the same scale as the exchange-enhanced lead splitting).
pub const ROBUST_SPLITTING: f64 = 0.5e-3;

/// Minimum record count for the mutual-information estimate.
pub const MIN_MI_RECORDS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutScheme {
    /// `|↑⟩` tunnels out much faster than `|↓⟩`.
    RateSelective,
    /// Only `|↑⟩` can tunnel out; `|↓⟩` has no empty lead state to go to.
    EnergyThreshold,
    /// A second electron enters only if it can form a singlet with the qubit.
    SingletTriplet,
    /// Both dot levels below the Fermi level: the electron never leaves.
    BrokenBothBelowEf,
    /// Fermi level between the levels: a `|↓⟩` electron leaves and is
    /// immediately replaced by a `|↑⟩` one.
    BrokenMidgapEf,
    /// Equal tunnel rates for both spins.
    BrokenUnselective,
    /// Coulomb blockade: no tunneling and no measurement.
    Off,
}

impl fmt::Display for ReadoutScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ReadoutScheme::RateSelective => "rate_selective",
            ReadoutScheme::EnergyThreshold => "energy_threshold",
            ReadoutScheme::SingletTriplet => "singlet_triplet",
            ReadoutScheme::BrokenBothBelowEf => "broken_both_below_ef",
            ReadoutScheme::BrokenMidgapEf => "broken_midgap_ef",
            ReadoutScheme::BrokenUnselective => "broken_unselective",
            ReadoutScheme::Off => "off",
        };
        f.write_str(s)
    }
}

fn default_gamma_in() -> f64 {
    DEFAULT_GAMMA_IN
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutConfig {
    pub scheme: ReadoutScheme,
    #[serde(default, deserialize_with = "serde_quantity::frequency::deserialize")]
    pub gamma_up_out: f64,
    #[serde(default, deserialize_with = "serde_quantity::frequency::deserialize")]
    pub gamma_down_out: f64,
    #[serde(default = "default_gamma_in", deserialize_with = "serde_quantity::frequency::deserialize")]
    pub gamma_in: f64,
    #[serde(deserialize_with = "serde_quantity::time::deserialize")]
    pub measurement_window: f64,
    #[serde(default, deserialize_with = "serde_quantity::energy::deserialize")]
    pub singlet_triplet_splitting: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Robustness {
    Robust,
    Marginal,
}

impl ReadoutConfig {
    fn base(scheme: ReadoutScheme, measurement_window: f64) -> Self {
        ReadoutConfig {
            scheme,
            gamma_up_out: 0.0,
            gamma_down_out: 0.0,
            gamma_in: DEFAULT_GAMMA_IN,
            measurement_window,
            singlet_triplet_splitting: 0.0,
        }
    }

    pub fn rate_selective(gamma_up_out: f64, gamma_down_out: f64, measurement_window: f64) -> Result<Self> {
        let c = ReadoutConfig {
            gamma_up_out,
            gamma_down_out,
            ..Self::base(ReadoutScheme::RateSelective, measurement_window)
        };
        c.validate()?;
        Ok(c)
    }

    /// Rate-selective readout whose `|↓⟩` rate is suppressed by the extra
    /// tunnel distance: `γ↓ = γ↑ exp(-2 Δd / ξ)`.
    pub fn from_tunnel_distances(
        gamma_up_out: f64,
        extra_distance: f64,
        decay_length: f64,
        measurement_window: f64,
    ) -> Result<Self> {
        require_non_negative("extra_distance", extra_distance)?;
        require_positive("decay_length", decay_length)?;
        let ratio = (-2.0 * extra_distance / decay_length).exp();
        Self::rate_selective(gamma_up_out, gamma_up_out * ratio, measurement_window)
    }

    pub fn energy_threshold(gamma_up_out: f64, measurement_window: f64) -> Result<Self> {
        let c = ReadoutConfig {
            gamma_up_out,
            ..Self::base(ReadoutScheme::EnergyThreshold, measurement_window)
        };
        c.validate()?;
        Ok(c)
    }

    pub fn singlet_triplet(gamma_in: f64, measurement_window: f64, splitting: f64) -> Result<Self> {
        let c = ReadoutConfig {
            gamma_in,
            singlet_triplet_splitting: splitting,
            ..Self::base(ReadoutScheme::SingletTriplet, measurement_window)
        };
        c.validate()?;
        Ok(c)
    }

    pub fn broken_both_below_ef(measurement_window: f64) -> Result<Self> {
        let c = Self::base(ReadoutScheme::BrokenBothBelowEf, measurement_window);
        c.validate()?;
        Ok(c)
    }

    pub fn broken_midgap_ef(gamma_down_out: f64, gamma_in: f64, measurement_window: f64) -> Result<Self> {
        let c = ReadoutConfig {
            gamma_down_out,
            gamma_in,
            ..Self::base(ReadoutScheme::BrokenMidgapEf, measurement_window)
        };
        c.validate()?;
        Ok(c)
    }

    pub fn broken_unselective(gamma_out: f64, measurement_window: f64) -> Result<Self> {
        let c = ReadoutConfig {
            gamma_up_out: gamma_out,
            gamma_down_out: gamma_out,
            ..Self::base(ReadoutScheme::BrokenUnselective, measurement_window)
        };
        c.validate()?;
        Ok(c)
    }

    pub fn off(measurement_window: f64) -> Self {
        Self::base(ReadoutScheme::Off, measurement_window)
    }

    /// Energy-threshold readout so fast that it never errs at zero noise.
    pub fn ideal() -> Self {
        ReadoutConfig {
            gamma_up_out: 1e12,
            ..Self::base(ReadoutScheme::EnergyThreshold, 5e-6)
        }
    }

    /// Reference operating point: T_t = 0.1 μs, T_m = 5 μs, T_nt = 10 ms.
    pub fn reference_rate_selective() -> Self {
        ReadoutConfig {
            gamma_up_out: 1e7,
            gamma_down_out: 1e2,
            ..Self::base(ReadoutScheme::RateSelective, 5e-6)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidReadout(msg));
        for (name, v) in [
            ("gamma_up_out", self.gamma_up_out),
            ("gamma_down_out", self.gamma_down_out),
            ("gamma_in", self.gamma_in),
        ] {
            if v.is_nan() || v < 0.0 {
                return bad(format!("{name} must be >= 0, got {v}"));
            }
        }
        if self.measurement_window.is_nan() || self.measurement_window <= 0.0 {
            return bad(format!("measurement_window must be > 0, got {}", self.measurement_window));
        }
        match self.scheme {
            ReadoutScheme::RateSelective if self.gamma_up_out <= self.gamma_down_out => bad(format!(
                "rate-selective readout needs gamma_up_out > gamma_down_out ({} <= {})",
                self.gamma_up_out, self.gamma_down_out
            )),
            ReadoutScheme::EnergyThreshold if self.gamma_down_out != 0.0 => {
                bad("energy-threshold readout forbids spin-down tunneling (gamma_down_out must be 0)".into())
            }
            ReadoutScheme::SingletTriplet if self.singlet_triplet_splitting <= 0.0 => {
                bad("singlet-triplet readout needs a positive singlet_triplet_splitting".into())
            }
            ReadoutScheme::BrokenMidgapEf if self.gamma_down_out <= 0.0 || self.gamma_in <= 0.0 => {
                bad("midgap configuration needs positive gamma_down_out and gamma_in".into())
            }
            ReadoutScheme::BrokenUnselective if self.gamma_up_out != self.gamma_down_out => {
                bad("unselective configuration has equal tunnel rates for both spins".into())
            }
            _ => Ok(()),
        }
    }

    /// Singlet–triplet robustness label; `None` for other schemes.
    pub fn robustness(&self) -> Option<Robustness> {
        (self.scheme == ReadoutScheme::SingletTriplet).then(|| {
            if self.singlet_triplet_splitting >= ROBUST_SPLITTING {
                Robustness::Robust
            } else {
                Robustness::Marginal
            }
        })
    }

    /// Exit rate for a qubit electron of the given spin.
    fn exit_rate(&self, spin: Spin) -> f64 {
        match (self.scheme, spin) {
            (ReadoutScheme::RateSelective | ReadoutScheme::EnergyThreshold, Spin::Up) => self.gamma_up_out,
            (ReadoutScheme::RateSelective | ReadoutScheme::EnergyThreshold, Spin::Down) => self.gamma_down_out,
            (ReadoutScheme::BrokenUnselective, _) => self.gamma_up_out,
            (ReadoutScheme::BrokenMidgapEf, Spin::Down) => self.gamma_down_out,
            _ => 0.0,
        }
    }
}

/// Charge detector (quantum point contact) abstraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorModel {
    /// Expected signal for 0, 1 and 2 electrons on the dot.
    #[serde(default = "default_levels")]
    pub charge_levels: [f64; 3],
    /// Standard deviation of the window-averaged signal for a 1 μs window.
    /// This value is an assumption; it is not fixed by any device data.
    #[serde(default)]
    pub noise_sigma_at_1us: f64,
    /// Decision level as a fraction of the step between adjacent charge levels.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_levels() -> [f64; 3] {
    [0.0, 1.0, 2.0]
}

fn default_threshold() -> f64 {
    0.5
}

impl DetectorModel {
    pub fn noiseless() -> Self {
        DetectorModel {
            charge_levels: default_levels(),
            noise_sigma_at_1us: 0.0,
            threshold: 0.5,
        }
    }

    pub fn with_noise(noise_sigma_at_1us: f64) -> Self {
        DetectorModel {
            noise_sigma_at_1us,
            ..Self::noiseless()
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_non_negative("noise_sigma_at_1us", self.noise_sigma_at_1us)?;
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::param("threshold", format!("must lie in (0, 1), got {}", self.threshold)));
        }
        let l = self.charge_levels;
        if !(l[0] < l[1] && l[1] < l[2]) {
            return Err(Error::param("charge_levels", "must be strictly increasing"));
        }
        Ok(())
    }

    /// Noise of the window average for window `t_m`: `σ₁ √(1 μs / T_m)`.
    pub fn noise_sigma(&self, t_m: f64) -> f64 {
        self.noise_sigma_at_1us * (1e-6 / t_m).sqrt()
    }

    fn level(&self, charge: u8) -> f64 {
        self.charge_levels[charge as usize]
    }

    /// Decision level between `low` and `low + 1` electrons.
    pub fn boundary(&self, low: u8) -> f64 {
        let a = self.level(low);
        a + self.threshold * (self.level(low + 1) - a)
    }
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self::noiseless()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargeEvent {
    pub time: f64,
    pub charge: u8,
}

/// One simulated measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutRecord {
    pub true_spin: Spin,
    /// Time the qubit electron left the dot, if within the window.
    pub tunnel_out_time: Option<f64>,
    /// Time a second electron entered the dot, if any.
    pub reload_time: Option<f64>,
    pub window_avg_signal: f64,
    /// `None` when the measurement is switched off.
    pub declared: Option<Spin>,
    /// Charge after each event; starts with `(0, 1)`.
    pub charge_trajectory: Vec<ChargeEvent>,
}

impl ReadoutRecord {
    pub fn final_charge(&self) -> u8 {
        self.charge_trajectory.last().map_or(1, |e| e.charge)
    }

    pub fn charge_at(&self, t: f64) -> u8 {
        self.charge_trajectory
            .iter()
            .take_while(|e| e.time <= t)
            .last()
            .map_or(1, |e| e.charge)
    }

    pub fn is_correct(&self) -> bool {
        self.declared == Some(self.true_spin)
    }
}

fn exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    let e: f64 = rng.sample(Exp1);
    e / rate
}

fn draw_spin<R: Rng + ?Sized>(rng: &mut R, p_up: f64) -> Spin {
    let u: f64 = rng.random();
    if u < p_up {
        Spin::Up
    } else {
        Spin::Down
    }
}

fn window_average(trajectory: &[ChargeEvent], detector: &DetectorModel, t_m: f64) -> f64 {
    let mut total = 0.0;
    for (i, ev) in trajectory.iter().enumerate() {
        if ev.time >= t_m {
            break;
        }
        let end = trajectory.get(i + 1).map_or(t_m, |next| next.time.min(t_m));
        total += detector.level(ev.charge) * (end - ev.time);
    }
    total / t_m
}

fn noisy<R: Rng + ?Sized>(rng: &mut R, clean: f64, sigma: f64) -> f64 {
    if sigma > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        clean + sigma * z
    } else {
        clean
    }
}

/// Simulate one spin-to-charge measurement of a spin that is `|↑⟩` with
/// probability `p_up`.
pub fn simulate_shot<R: Rng + ?Sized>(
    p_up: f64,
    config: &ReadoutConfig,
    detector: &DetectorModel,
    rng: &mut R,
) -> Result<ReadoutRecord> {
    let spin = draw_spin(rng, p_up);
    simulate_shot_for_spin(spin, config, detector, rng)
}

/// Like [`simulate_shot`] with the true spin already known.
pub fn simulate_shot_for_spin<R: Rng + ?Sized>(
    spin: Spin,
    config: &ReadoutConfig,
    detector: &DetectorModel,
    rng: &mut R,
) -> Result<ReadoutRecord> {
    config.validate()?;
    if config.scheme == ReadoutScheme::SingletTriplet {
        return singlet_triplet_for_spin(spin, config, detector, rng);
    }
    let t_m = config.measurement_window;
    let mut trajectory = vec![ChargeEvent { time: 0.0, charge: 1 }];

    if config.scheme == ReadoutScheme::Off {
        return Ok(ReadoutRecord {
            true_spin: spin,
            tunnel_out_time: None,
            reload_time: None,
            window_avg_signal: detector.level(1),
            declared: None,
            charge_trajectory: trajectory,
        });
    }

    let tau = exponential(rng, config.exit_rate(spin));
    let mut tunnel_out_time = None;
    let mut reload_time = None;
    if config.scheme == ReadoutScheme::BrokenMidgapEf {
        // The refilled |↑⟩ level sits below the Fermi level, so the dot is
        // always refilled; the trajectory is followed until it does.
        if tau.is_finite() {
            let back = tau + exponential(rng, config.gamma_in);
            trajectory.push(ChargeEvent { time: tau, charge: 0 });
            trajectory.push(ChargeEvent { time: back, charge: 1 });
            tunnel_out_time = (tau < t_m).then_some(tau);
            reload_time = (back < t_m).then_some(back);
        }
    } else if tau < t_m {
        trajectory.push(ChargeEvent { time: tau, charge: 0 });
        tunnel_out_time = Some(tau);
    }

    let signal = noisy(rng, window_average(&trajectory, detector, t_m), detector.noise_sigma(t_m));
    let declared = if signal < detector.boundary(0) {
        Spin::Up
    } else {
        Spin::Down
    };
    Ok(ReadoutRecord {
        true_spin: spin,
        tunnel_out_time,
        reload_time,
        window_avg_signal: signal,
        declared: Some(declared),
        charge_trajectory: trajectory,
    })
}

/// Two-electron readout: a second (`|↑⟩`) electron can enter only when the
/// qubit is `|↓⟩`, forming a singlet.
pub fn simulate_singlet_triplet_shot<R: Rng + ?Sized>(
    p_up: f64,
    config: &ReadoutConfig,
    detector: &DetectorModel,
    rng: &mut R,
) -> Result<ReadoutRecord> {
    if config.scheme != ReadoutScheme::SingletTriplet {
        return Err(Error::UnsupportedScheme(config.scheme.to_string()));
    }
    let spin = draw_spin(rng, p_up);
    singlet_triplet_for_spin(spin, config, detector, rng)
}

fn singlet_triplet_for_spin<R: Rng + ?Sized>(
    spin: Spin,
    config: &ReadoutConfig,
    detector: &DetectorModel,
    rng: &mut R,
) -> Result<ReadoutRecord> {
    config.validate()?;
    let t_m = config.measurement_window;
    let mut trajectory = vec![ChargeEvent { time: 0.0, charge: 1 }];
    let rate = if spin == Spin::Down { config.gamma_in } else { 0.0 };
    let tau = exponential(rng, rate);
    let mut reload_time = None;
    if tau < t_m {
        trajectory.push(ChargeEvent { time: tau, charge: 2 });
        reload_time = Some(tau);
    }
    let signal = noisy(rng, window_average(&trajectory, detector, t_m), detector.noise_sigma(t_m));
    let declared = if signal >= detector.boundary(1) {
        Spin::Down
    } else {
        Spin::Up
    };
    Ok(ReadoutRecord {
        true_spin: spin,
        tunnel_out_time: None,
        reload_time,
        window_avg_signal: signal,
        declared: Some(declared),
        charge_trajectory: trajectory,
    })
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `Pr[declared ↑]` for an electron leaving at rate `rate` during a window `t_m`.
fn prob_declared_up(rate: f64, t_m: f64, detector: &DetectorModel) -> f64 {
    let l0 = detector.level(0);
    let l1 = detector.level(1);
    let boundary = detector.boundary(0);
    let sigma = detector.noise_sigma(t_m);
    let lambda = rate * t_m;
    // Signal when the electron leaves at fraction u of the window.
    let signal = |u: f64| l1 * u + l0 * (1.0 - u);
    if sigma == 0.0 {
        // Declared ↑ iff the electron left before fraction `threshold` of the window.
        return if lambda > 0.0 {
            -(-lambda * detector.threshold).exp_m1()
        } else {
            0.0
        };
    }
    let up_given = |u: f64| normal_cdf((boundary - signal(u)) / sigma);
    let stay = (-lambda).exp() * up_given(1.0);
    if lambda == 0.0 {
        return stay;
    }
    // Split at the decision point where the integrand changes fastest.
    let integrand = |u: f64| lambda * (-lambda * u).exp() * up_given(u);
    let knot = detector.threshold;
    let mut breaks = vec![0.0, knot];
    // The exponential density is concentrated within a few 1/λ of zero.
    let scale = 1.0 / lambda;
    for k in [1.0, 5.0, 20.0] {
        let x = k * scale;
        if x < 1.0 {
            breaks.push(x);
        }
    }
    breaks.push(1.0);
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup();
    let moved: f64 = breaks
        .windows(2)
        .map(|w| adaptive_simpson(&integrand, w[0], w[1], 1e-13))
        .sum();
    (moved + stay).clamp(0.0, 1.0)
}

/// Closed-form fidelities `(F↑, F↓)` for the single-electron schemes.
pub fn analytic_fidelity(config: &ReadoutConfig, detector: &DetectorModel) -> Result<(f64, f64)> {
    config.validate()?;
    detector.validate()?;
    match config.scheme {
        ReadoutScheme::RateSelective | ReadoutScheme::EnergyThreshold => {
            let t_m = config.measurement_window;
            let f_up = prob_declared_up(config.gamma_up_out, t_m, detector);
            let f_down = 1.0 - prob_declared_up(config.gamma_down_out, t_m, detector);
            Ok((f_up, f_down))
        }
        other => Err(Error::UnsupportedScheme(other.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingLink {
    pub relation: String,
    pub shorter: f64,
    pub longer: f64,
    pub passed: bool,
    /// `longer / shorter`; above 1 when the link holds.
    pub margin: f64,
}

/// Verdict on the ordering `T_t < T_m < T_1, T_nt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub tunnel_time: f64,
    pub measurement_window: f64,
    pub t1: f64,
    pub no_tunnel_time: f64,
    pub links: Vec<TimingLink>,
}

impl TimingReport {
    pub fn all_passed(&self) -> bool {
        self.links.iter().all(|l| l.passed)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.links.iter().filter(|l| !l.passed).map(|l| l.relation.as_str()).collect()
    }
}

fn inverse_rate(rate: f64) -> f64 {
    if rate > 0.0 {
        1.0 / rate
    } else {
        f64::INFINITY
    }
}

pub fn timing_chain_check(config: &ReadoutConfig, dot: &DotParams) -> TimingReport {
    let t_t = inverse_rate(config.gamma_up_out);
    let t_nt = inverse_rate(config.gamma_down_out);
    let t_m = config.measurement_window;
    let link = |relation: &str, shorter: f64, longer: f64| TimingLink {
        relation: relation.to_string(),
        shorter,
        longer,
        passed: shorter < longer,
        margin: if longer.is_infinite() { f64::INFINITY } else { longer / shorter },
    };
    TimingReport {
        tunnel_time: t_t,
        measurement_window: t_m,
        t1: dot.t1,
        no_tunnel_time: t_nt,
        links: vec![
            link("T_t < T_m", t_t, t_m),
            link("T_m < T_1", t_m, dot.t1),
            link("T_m < T_nt", t_m, t_nt),
        ],
    }
}

/// Plug-in mutual information (bits) between true spin and declared outcome.
pub fn outcome_spin_mutual_information(records: &[ReadoutRecord]) -> Result<f64> {
    if records.len() < MIN_MI_RECORDS {
        return Err(Error::InsufficientSamples {
            needed: MIN_MI_RECORDS,
            got: records.len(),
        });
    }
    let mut joint: BTreeMap<(Spin, Option<Spin>), usize> = BTreeMap::new();
    for r in records {
        *joint.entry((r.true_spin, r.declared)).or_default() += 1;
    }
    Ok(mutual_information_from_counts(&joint))
}

pub(crate) fn mutual_information_from_counts<A: Ord + Copy, B: Ord + Copy>(joint: &BTreeMap<(A, B), usize>) -> f64 {
    let n: usize = joint.values().sum();
    let n = n as f64;
    let mut pa: BTreeMap<A, f64> = BTreeMap::new();
    let mut pb: BTreeMap<B, f64> = BTreeMap::new();
    for (&(a, b), &c) in joint {
        *pa.entry(a).or_default() += c as f64 / n;
        *pb.entry(b).or_default() += c as f64 / n;
    }
    joint
        .iter()
        .filter(|(_, &c)| c > 0)
        .map(|(&(a, b), &c)| {
            let p = c as f64 / n;
            p * (p / (pa[&a] * pb[&b])).log2()
        })
        .sum::<f64>()
        .max(0.0)
}

/// Empirical `(F↑, F↓)` from records; NaN when a spin never occurred.
pub fn empirical_fidelity(records: &[ReadoutRecord]) -> (f64, f64) {
    let mut counts = [[0usize; 2]; 2];
    for r in records {
        let i = (r.true_spin == Spin::Down) as usize;
        counts[i][0] += 1;
        if r.is_correct() {
            counts[i][1] += 1;
        }
    }
    let frac = |c: [usize; 2]| if c[0] == 0 { f64::NAN } else { c[1] as f64 / c[0] as f64 };
    (frac(counts[0]), frac(counts[1]))
}

/// Per-shot CSV header and row: `shot,true_spin,tunnel_out_time,signal,declared`.
pub const RECORD_CSV_HEADER: &str = "shot,true_spin,tunnel_out_time,signal,declared";

pub fn record_csv_row(shot: u64, r: &ReadoutRecord) -> String {
    format!(
        "{},{},{},{},{}",
        shot,
        r.true_spin.symbol(),
        r.tunnel_out_time.map_or_else(String::new, |t| format!("{t:e}")),
        r.window_avg_signal,
        r.declared.map_or("none", Spin::symbol)
    )
}
