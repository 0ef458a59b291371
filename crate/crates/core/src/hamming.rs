//! The distance-threshold messageless code.
//!
//! The key is a uniform string `sk` and the honest codeword is `sk` itself.
//! The decoder splits the space into three regions by Hamming distance from
//! the key: distance 0 is `valid`, distance in `(0, t]` is `tampered`, and
//! anything farther is `invalid`, where `t = n (1 - 1/q) (1 - delta)`.
//!
//! Soundness needs a large alphabet: with `q` at least `n` (for example
//! `q = n^2`) a uniform string essentially never lands within `t` of the key.
//! Tamper detection is deterministic for every change budget up to `t`.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::RngCore;

use crate::code::MessagelessCode;
use crate::error::{Error, Result};
use crate::types::{hamming_distance, uniform_codeword, Alphabet, Codeword, DecodeOutcome, Delta, SecurityParams};

/// `t = n (1 - 1/q) (1 - delta)`.
pub fn threshold(n: usize, q: u64, delta: f64) -> Result<f64> {
    if n == 0 || q < 2 || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("threshold needs n>=1, q>=2, 0<delta<1 (got n={n}, q={q}, delta={delta})")));
    }
    Ok(n as f64 * (1.0 - 1.0 / q as f64) * (1.0 - delta))
}

/// `exp(-delta^2 n / (2q))`: the Chernoff bound on a uniform string matching
/// the key in at least `n (1 + delta) / q` positions.
pub fn soundness_bound(n: usize, q: u64, delta: f64) -> f64 {
    (-delta * delta * n as f64 / (2.0 * q as f64)).exp()
}

/// `exp(-delta^2 n (1 - 1/q) / 3)`: the Chernoff bound on the full-resample
/// channel changing more than `(1 + delta) n (1 - 1/q)` positions.
pub fn impossibility_bound(n: usize, q: u64, delta: f64) -> f64 {
    (-delta * delta / 3.0 * n as f64 * (1.0 - 1.0 / q as f64)).exp()
}

/// Floor on the tamper-detection error of any code that is allowed a
/// soundness error of `epsilon`, against independent tampering at rate
/// `(1 - 1/q)(1 + delta)`: `(1 - epsilon)(1 - impossibility_bound)`.
pub fn relaxed_tamper_error_floor(epsilon: f64, n: usize, q: u64, delta: f64) -> f64 {
    (1.0 - epsilon) * (1.0 - impossibility_bound(n, q, delta))
}

/// Exact form of `dist <= t` without floating point.
///
/// With `delta = a / b`, `dist <= n (q-1)/q (1 - a/b)` is
/// `dist * q * b <= n * (q - 1) * (b - a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdRule {
    n: usize,
    q: u64,
    delta: Delta,
}

impl ThresholdRule {
    pub fn new(params: &SecurityParams) -> Self {
        ThresholdRule {
            n: params.n,
            q: params.q(),
            delta: params.delta,
        }
    }

    pub fn within(&self, dist: usize) -> bool {
        let lhs = dist as u128 * u128::from(self.q) * u128::from(self.delta.den());
        let rhs = self.n as u128 * u128::from(self.q - 1) * u128::from(self.delta.den() - self.delta.num());
        lhs <= rhs
    }

    /// Largest integer distance still classified as tampered.
    pub fn max_tampered_distance(&self) -> usize {
        let rhs = self.n as u128 * u128::from(self.q - 1) * u128::from(self.delta.den() - self.delta.num());
        let per = u128::from(self.q) * u128::from(self.delta.den());
        (rhs / per) as usize
    }

    pub fn classify(&self, dist: usize) -> DecodeOutcome {
        if dist == 0 {
            DecodeOutcome::Valid
        } else if self.within(dist) {
            DecodeOutcome::Tampered
        } else {
            DecodeOutcome::Invalid
        }
    }

    pub fn value(&self) -> f64 {
        self.n as f64 * (1.0 - 1.0 / self.q as f64) * (1.0 - self.delta.value())
    }
}

/// Secret key: the honest codeword plus the parameters it was drawn for.
#[derive(Clone, PartialEq, Eq)]
pub struct HammingCodeKey {
    sk: Codeword,
    params: SecurityParams,
    rule: ThresholdRule,
}

impl fmt::Debug for HammingCodeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HammingCodeKey")
            .field("params", &self.params)
            .field("t", &self.rule.value())
            .finish_non_exhaustive()
    }
}

const KEY_HEADER: &str = "TAMPERLOCK-HK v1";

impl HammingCodeKey {
    pub fn from_secret(sk: Codeword, params: SecurityParams) -> Result<Self> {
        sk.expect_shape(params.n, params.alphabet)?;
        Ok(HammingCodeKey {
            sk,
            params,
            rule: ThresholdRule::new(&params),
        })
    }

    pub fn secret(&self) -> &Codeword {
        &self.sk
    }

    pub fn params(&self) -> &SecurityParams {
        &self.params
    }

    pub fn threshold(&self) -> f64 {
        self.rule.value()
    }

    pub fn rule(&self) -> &ThresholdRule {
        &self.rule
    }

    /// Two-line key file: header with parameters, then the codeword.
    pub fn to_key_file(&self) -> String {
        format!(
            "{KEY_HEADER} lambda={} n={} q={} delta={}\n{}\n",
            self.params.lambda,
            self.params.n,
            self.params.q(),
            self.params.delta,
            self.sk.to_text()
        )
    }

    pub fn from_key_file(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse("empty key file"))?;
        let fields = header
            .strip_prefix(KEY_HEADER)
            .ok_or_else(|| Error::parse(format!("key file must start with {KEY_HEADER:?}")))?;
        let (mut lambda, mut n, mut q, mut delta) = (None, None, None, None);
        for field in fields.split_whitespace() {
            match field.split_once('=') {
                Some(("lambda", v)) => {
                    lambda = Some(v.parse::<u32>().map_err(|e| Error::parse(format!("lambda: {e}")))?)
                }
                Some(("n", v)) => n = Some(v.parse::<usize>().map_err(|e| Error::parse(format!("n: {e}")))?),
                Some(("q", v)) => q = Some(v.parse::<u64>().map_err(|e| Error::parse(format!("q: {e}")))?),
                Some(("delta", v)) => delta = Some(v.parse::<Delta>()?),
                _ => return Err(Error::parse(format!("unexpected key header field {field:?}"))),
            }
        }
        let (lambda, n, q, delta) = match (lambda, n, q, delta) {
            (Some(l), Some(n), Some(q), Some(d)) => (l, n, q, d),
            _ => return Err(Error::parse("key header needs lambda, n, q and delta")),
        };
        let params = SecurityParams::new(lambda, n, q, delta)?;
        let body = lines.next().ok_or_else(|| Error::parse("key file has no codeword line"))?;
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(Error::parse("trailing data after key codeword"));
        }
        HammingCodeKey::from_secret(Codeword::from_text(body, params.alphabet)?, params)
    }

    /// Writes the key file; on Unix the file is created with mode 0600.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut opts = fs::OpenOptions::new();
        opts.write(true).create(true).truncate(true);
        #[cfg(unix)]
        {
            use std::os::unix::fs::OpenOptionsExt;
            opts.mode(0o600);
        }
        let mut file = opts.open(path)?;
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            file.set_permissions(fs::Permissions::from_mode(0o600))?;
        }
        file.write_all(self.to_key_file().as_bytes())?;
        file.sync_all()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        HammingCodeKey::from_key_file(&fs::read_to_string(path)?)
    }
}

/// The distance-threshold code for fixed parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HammingCode {
    params: SecurityParams,
}

impl HammingCode {
    pub fn new(params: SecurityParams) -> Self {
        HammingCode { params }
    }

    /// Parameters with the recommended alphabet `q = n^2`.
    pub fn with_square_alphabet(lambda: u32, n: usize, delta: Delta) -> Result<Self> {
        let q = (n as u64)
            .checked_mul(n as u64)
            .filter(|&q| q >= 2)
            .ok_or_else(|| Error::param(format!("n^2 for n={n} is not a usable alphabet size")))?;
        Ok(HammingCode::new(SecurityParams::new(lambda, n, q, delta)?))
    }

    pub fn params(&self) -> &SecurityParams {
        &self.params
    }

    pub fn threshold(&self) -> f64 {
        ThresholdRule::new(&self.params).value()
    }

    pub fn kgen<R: RngCore + ?Sized>(&self, rng: &mut R) -> HammingCodeKey {
        let sk = uniform_codeword(self.params.n, self.params.alphabet, rng).expect("params validated on construction");
        HammingCodeKey {
            sk,
            params: self.params,
            rule: ThresholdRule::new(&self.params),
        }
    }

    pub fn enc(&self, key: &HammingCodeKey) -> Codeword {
        key.sk.clone()
    }

    pub fn dec(&self, key: &HammingCodeKey, gamma: &Codeword) -> Result<DecodeOutcome> {
        let dist = hamming_distance(&key.sk, gamma)?;
        Ok(key.rule.classify(dist))
    }
}

impl MessagelessCode for HammingCode {
    type Key = HammingCodeKey;
    type Word = Codeword;

    fn codeword_len(&self) -> usize {
        self.params.n
    }

    fn alphabet(&self) -> Alphabet {
        self.params.alphabet
    }

    fn keygen(&self, rng: &mut dyn RngCore) -> Result<HammingCodeKey> {
        Ok(self.kgen(rng))
    }

    fn encode(&self, key: &HammingCodeKey, _rng: &mut dyn RngCore) -> Result<Codeword> {
        Ok(self.enc(key))
    }

    fn decode(&self, key: &HammingCodeKey, word: &Codeword) -> Result<DecodeOutcome> {
        self.dec(key, word)
    }

    fn deterministic_encoder(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::types::Symbol;

    fn code(n: usize, q: u64, delta: &str) -> HammingCode {
        HammingCode::new(SecurityParams::new(128, n, q, delta.parse().unwrap()).unwrap())
    }

    /// `P[Bin(n, p) >= k]` summed in log space; independent of the decoder.
    fn binom_upper_tail(n: u64, p: f64, k: u64) -> f64 {
        let ln_choose = |n: u64, k: u64| -> f64 {
            (1..=k).map(|i| ((n - k + i) as f64).ln() - (i as f64).ln()).sum()
        };
        (k..=n)
            .map(|j| (ln_choose(n, j) + j as f64 * p.ln() + (n - j) as f64 * (1.0 - p).ln()).exp())
            .sum()
    }

    #[test]
    fn threshold_examples() {
        assert!((threshold(4, 16, 0.5).unwrap() - 1.875).abs() < 1e-12);
        assert!((threshold(512, 2, 0.1).unwrap() - 230.4).abs() < 1e-9);
        assert!(threshold(4, 16, 0.999_999).unwrap() < 1e-5);
        assert!((threshold(64, 4096, 0.5).unwrap() - 64.0 * (4095.0 / 4096.0) * 0.5).abs() < 1e-12);
        assert!(threshold(0, 2, 0.5).is_err());
        assert!(threshold(4, 1, 0.5).is_err());
        assert!(threshold(4, 2, 1.0).is_err());
        assert!(threshold(4, 2, 0.0).is_err());
    }

    #[test]
    fn rational_rule_matches_float_away_from_boundary() {
        let rule = ThresholdRule::new(code(4, 16, "0.5").params());
        assert_eq!(rule.classify(0), DecodeOutcome::Valid);
        assert_eq!(rule.classify(1), DecodeOutcome::Tampered);
        assert_eq!(rule.classify(2), DecodeOutcome::Invalid);
        assert_eq!(rule.max_tampered_distance(), 1);

        // t = 10 * (1/2) * (1 - 0.2) = 4 exactly; 4 is still tampered.
        let rule = ThresholdRule::new(code(10, 2, "0.2").params());
        assert_eq!(rule.classify(4), DecodeOutcome::Tampered);
        assert_eq!(rule.classify(5), DecodeOutcome::Invalid);

        // t = 30 * (2/3) * 0.9 = 18 exactly, where 1 - 0.1 is inexact in f64.
        let rule = ThresholdRule::new(code(30, 3, "0.1").params());
        assert_eq!(rule.max_tampered_distance(), 18);
        assert_eq!(rule.classify(18), DecodeOutcome::Tampered);
    }

    #[test]
    fn kgen_is_deterministic_and_keys_differ_across_seeds() {
        let c = code(64, 4096, "0.5");
        assert_eq!(c.kgen(&mut rng_from_seed(5)), c.kgen(&mut rng_from_seed(5)));
        assert_ne!(c.kgen(&mut rng_from_seed(5)).secret(), c.kgen(&mut rng_from_seed(6)).secret());
        assert!((c.kgen(&mut rng_from_seed(5)).threshold() - 31.9921875).abs() < 1e-9);
    }

    #[test]
    fn enc_is_the_key_and_decodes_valid() {
        let c = code(16, 256, "0.5");
        let key = c.kgen(&mut rng_from_seed(1));
        assert_eq!(&c.enc(&key), key.secret());
        assert_eq!(c.enc(&key), c.enc(&key));
        assert_eq!(c.dec(&key, &c.enc(&key)).unwrap(), DecodeOutcome::Valid);
    }

    #[test]
    fn dec_examples_at_small_threshold() {
        let c = code(4, 16, "0.5");
        let key = HammingCodeKey::from_secret(
            Codeword::new(vec![1, 2, 3, 4], Alphabet::new(16).unwrap()).unwrap(),
            *c.params(),
        )
        .unwrap();
        let at = |s: &[Symbol]| c.dec(&key, &Codeword::new(s.to_vec(), Alphabet::new(16).unwrap()).unwrap()).unwrap();
        assert_eq!(at(&[1, 2, 3, 4]), DecodeOutcome::Valid);
        assert_eq!(at(&[0, 2, 3, 4]), DecodeOutcome::Tampered);
        assert_eq!(at(&[0, 0, 3, 4]), DecodeOutcome::Invalid);
        assert!(c.dec(&key, &Codeword::new(vec![1, 2, 3], Alphabet::new(16).unwrap()).unwrap()).is_err());
    }

    #[test]
    fn uniform_inputs_are_invalid_at_square_alphabet() {
        let c = HammingCode::with_square_alphabet(128, 64, "0.5".parse().unwrap()).unwrap();
        let key = c.kgen(&mut rng_from_seed(2));
        let mut rng = rng_from_seed(3);
        let trials = 10_000;
        let invalid = (0..trials)
            .filter(|_| {
                let w = uniform_codeword(64, c.params().alphabet, &mut rng).unwrap();
                c.dec(&key, &w).unwrap() == DecodeOutcome::Invalid
            })
            .count();
        assert!(invalid as f64 / trials as f64 >= 0.999);
    }

    /// Enumerates all of Σ^n for small n, q: the three labels partition the
    /// space, and every nonzero distance up to t is tampered.
    #[test]
    fn exhaustive_trichotomy_and_tamper_detection() {
        for (n, q, delta) in [(4usize, 2u64, "0.25"), (6, 3, "0.5"), (5, 4, "0.1"), (8, 2, "0.5")] {
            let c = code(n, q, delta);
            let key = c.kgen(&mut rng_from_seed(n as u64 * 31 + q));
            let alpha = c.params().alphabet;
            let t = c.threshold();
            let total = alpha.space_size(n) as u64;
            let mut counts = [0u64; 3];
            for idx in 0..total {
                let mut rest = idx;
                let symbols: Vec<Symbol> = (0..n)
                    .map(|_| {
                        let s = (rest % q) as Symbol;
                        rest /= q;
                        s
                    })
                    .collect();
                let w = Codeword::new(symbols, alpha).unwrap();
                let dist = hamming_distance(&w, key.secret()).unwrap();
                let label = c.dec(&key, &w).unwrap();
                counts[label as usize] += 1;
                if dist > 0 && (dist as f64) <= t {
                    assert_eq!(label, DecodeOutcome::Tampered, "n={n} q={q} dist={dist}");
                }
                if dist as f64 > t {
                    assert_eq!(label, DecodeOutcome::Invalid);
                }
            }
            assert_eq!(counts.iter().sum::<u64>(), total);
            assert_eq!(counts[DecodeOutcome::Valid as usize], 1);
        }
    }

    #[test]
    fn bound_formulas() {
        assert!((soundness_bound(100, 2, 0.2) - (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(soundness_bound(100, 2, 0.0), 1.0);
        assert!((soundness_bound(10_000, 100, 0.5) - (-12.5f64).exp()).abs() < 1e-15);
        assert!((impossibility_bound(300, 2, 0.2) - (-2.0f64).exp()).abs() < 1e-12);
        assert!((impossibility_bound(300, u64::MAX, 0.2) - (-4.0f64).exp()).abs() < 1e-9);
        assert_eq!(impossibility_bound(300, 2, 0.0), 1.0);
        // Tamper error floor of a code that gives up all soundness is zero.
        assert_eq!(relaxed_tamper_error_floor(1.0, 300, 2, 0.2), 0.0);
        assert!((relaxed_tamper_error_floor(0.0, 300, 2, 0.2) - (1.0 - (-2.0f64).exp())).abs() < 1e-12);
    }

    /// Binary alphabets: the decoder's escape probability for a uniform input
    /// is the exact tail `P[Bin(n, 1/2) >= n - floor(t)]` of the match count,
    /// which is small for constant delta, and the Monte Carlo estimate agrees
    /// with it.
    #[test]
    fn binary_soundness_matches_exact_binomial_tail() {
        let n = 64;
        let c = code(n, 2, "0.25");
        let key = c.kgen(&mut rng_from_seed(9));
        let floor_t = ThresholdRule::new(c.params()).max_tampered_distance() as u64;
        assert_eq!(floor_t, 24);
        let exact = binom_upper_tail(n as u64, 0.5, n as u64 - floor_t);
        let trials = 20_000u64;
        let mut rng = rng_from_seed(10);
        let escaped = (0..trials)
            .filter(|_| {
                let w = uniform_codeword(n, Alphabet::BINARY, &mut rng).unwrap();
                c.dec(&key, &w).unwrap() != DecodeOutcome::Invalid
            })
            .count() as f64;
        let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
        assert!((escaped / trials as f64 - exact).abs() <= 3.0 * sigma + 1.0 / trials as f64, "exact={exact}");
        assert!(exact < soundness_bound(n, 2, 0.25));
    }

    #[test]
    fn key_file_round_trip() {
        let c = code(8, 4096, "0.25");
        let key = c.kgen(&mut rng_from_seed(12));
        let text = key.to_key_file();
        assert!(text.starts_with("TAMPERLOCK-HK v1 lambda=128 n=8 q=4096 delta=0.25\n"));
        assert_eq!(HammingCodeKey::from_key_file(&text).unwrap(), key);
        assert!(HammingCodeKey::from_key_file("TAMPERLOCK-HK v2 lambda=128 n=8 q=4 delta=0.5\n0:0:0:0:0:0:0:0\n").is_err());
        assert!(HammingCodeKey::from_key_file("TAMPERLOCK-HK v1 lambda=128 n=3 q=4 delta=0.5\n0:0\n").is_err());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k.key");
        key.save(&path).unwrap();
        assert_eq!(HammingCodeKey::load(&path).unwrap(), key);
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            assert_eq!(fs::metadata(&path).unwrap().permissions().mode() & 0o777, 0o600);
        }
    }
}
