//! Counting estimators for Monte Carlo runs.

/// z for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// `successes` out of `trials` Bernoulli draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64) -> Self {
        debug_assert!(successes <= trials);
        Proportion { successes, trials }
    }

    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }

    /// Binomial standard error at the observed rate.
    pub fn std_error(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        let p = self.rate();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// Wilson score interval at the given z.
    pub fn wilson(&self, z: f64) -> (f64, f64) {
        if self.trials == 0 {
            return (0.0, 1.0);
        }
        let n = self.trials as f64;
        let p = self.rate();
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        ((centre - half).max(0.0), (centre + half).min(1.0))
    }

    pub fn wilson95(&self) -> (f64, f64) {
        self.wilson(Z95)
    }
}

/// Two proportions agree within `k` pooled standard errors.
///
/// When both proportions are exactly equal this is true regardless of `k`.
pub fn agree_within_sigma(a: Proportion, b: Proportion, k: f64) -> bool {
    let diff = (a.rate() - b.rate()).abs();
    if diff == 0.0 {
        return true;
    }
    let pooled = Proportion::new(a.successes + b.successes, a.trials + b.trials).rate();
    let se = (pooled * (1.0 - pooled) * (1.0 / a.trials as f64 + 1.0 / b.trials as f64)).sqrt();
    diff <= k * se
}

/// True if `rates` is non-increasing except for at most `allowed` steps that
/// rise by more than two standard errors of the pair.
pub fn non_increasing_with_slack(points: &[Proportion], allowed: usize) -> bool {
    let mut inversions = 0;
    for pair in points.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b.rate() <= a.rate() {
            continue;
        }
        let se = (a.std_error().powi(2) + b.std_error().powi(2)).sqrt();
        if b.rate() - a.rate() > 2.0 * se {
            inversions += 1;
        }
    }
    inversions <= allowed
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_brackets_rate() {
        let p = Proportion::new(30, 100);
        let (lo, hi) = p.wilson95();
        assert!(lo < 0.3 && 0.3 < hi);
        // Reference values from the closed form at z=1.96.
        assert!((lo - 0.2189).abs() < 1e-3, "lo={lo}");
        assert!((hi - 0.3958).abs() < 1e-3, "hi={hi}");
        let (lo, hi) = Proportion::new(0, 50).wilson95();
        assert!(lo < 1e-12, "lo={lo}");
        assert!(hi > 0.0 && hi < 0.1);
    }

    #[test]
    fn monotone_slack() {
        let pts = [Proportion::new(100, 100), Proportion::new(60, 100), Proportion::new(10, 100)];
        assert!(non_increasing_with_slack(&pts, 0));
        let bumpy = [Proportion::new(10, 100), Proportion::new(60, 100), Proportion::new(90, 100)];
        assert!(!non_increasing_with_slack(&bumpy, 1));
    }
}
