use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Binomial proportion with its Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub count: u64,
    pub trials: u64,
    pub p: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    pub fn wilson(count: u64, trials: u64) -> Self {
        if trials == 0 {
            return Estimate {
                count,
                trials,
                p: f64::NAN,
                ci_low: 0.0,
                ci_high: 1.0,
            };
        }
        let n = trials as f64;
        let p = count as f64 / n;
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        Estimate {
            count,
            trials,
            p,
            ci_low: (center - half).max(0.0).min(p),
            ci_high: (center + half).min(1.0).max(p),
        }
    }

    /// Binomial standard error at the point estimate.
    pub fn sigma(&self) -> f64 {
        (self.p * (1.0 - self.p) / self.trials as f64).sqrt()
    }
}
