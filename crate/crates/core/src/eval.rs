//! Monte Carlo and exact evaluation of messageless codes.
//!
//! Trial `i` of a run with master seed `s` draws everything from
//! [`trial_rng(s, i)`](crate::rng::trial_rng), so results do not depend on
//! the thread pool.

use rayon::prelude::*;

use crate::channels::TamperChannel;
use crate::code::MessagelessCode;
use crate::error::{Error, Result};
use crate::rng::{trial_rng, SimRng};
use crate::stats::Proportion;
use crate::types::{uniform_codeword, Alphabet, Codeword, DecodeOutcome, Symbol};

/// Default cap on `q^n` for exhaustive enumeration.
pub const EXACT_STATE_LIMIT: u128 = 1 << 20;

/// How many inputs received each label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelCounts {
    pub valid: u64,
    pub invalid: u64,
    pub tampered: u64,
}

impl LabelCounts {
    pub fn record(&mut self, outcome: DecodeOutcome) {
        match outcome {
            DecodeOutcome::Valid => self.valid += 1,
            DecodeOutcome::Invalid => self.invalid += 1,
            DecodeOutcome::Tampered => self.tampered += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.valid + self.invalid + self.tampered
    }

    pub fn get(&self, outcome: DecodeOutcome) -> u64 {
        match outcome {
            DecodeOutcome::Valid => self.valid,
            DecodeOutcome::Invalid => self.invalid,
            DecodeOutcome::Tampered => self.tampered,
        }
    }

    pub fn proportion(&self, outcome: DecodeOutcome) -> Proportion {
        Proportion::new(self.get(outcome), self.total())
    }

    /// Inputs not labelled invalid.
    pub fn accepted(&self) -> Proportion {
        Proportion::new(self.valid + self.tampered, self.total())
    }

    fn merge(self, other: LabelCounts) -> LabelCounts {
        LabelCounts {
            valid: self.valid + other.valid,
            invalid: self.invalid + other.invalid,
            tampered: self.tampered + other.tampered,
        }
    }
}

/// Runs `f` once per trial on that trial's generator and tallies the labels;
/// `None` skips the trial.
pub fn trial_labels<F>(trials: u64, seed: u64, f: F) -> Result<LabelCounts>
where
    F: Fn(&mut SimRng) -> Result<Option<DecodeOutcome>> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut counts = LabelCounts::default();
            if let Some(o) = f(&mut trial_rng(seed, i))? {
                counts.record(o);
            }
            Ok(counts)
        })
        .try_reduce(LabelCounts::default, |a, b| Ok(a.merge(b)))
}

/// Labels of `trials` uniform words under one fixed decoder.
pub fn uniform_labels<D>(n: usize, alphabet: Alphabet, trials: u64, seed: u64, decode: D) -> Result<LabelCounts>
where
    D: Fn(&Codeword) -> Result<DecodeOutcome> + Sync,
{
    trial_labels(trials, seed, |rng| {
        let w = uniform_codeword(n, alphabet, rng)?;
        decode(&w).map(Some)
    })
}

/// Labels of uniform words, with a fresh key drawn in every trial.
pub fn soundness_labels<C>(code: &C, trials: u64, seed: u64) -> Result<LabelCounts>
where
    C: MessagelessCode<Word = Codeword> + Sync,
{
    trial_labels(trials, seed, |rng| {
        let key = code.keygen(rng)?;
        let w = uniform_codeword(code.codeword_len(), code.alphabet(), rng)?;
        code.decode(&key, &w).map(Some)
    })
}

/// Outcome of a tamper-detection run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TamperStats {
    pub trials: u64,
    /// Trials where the channel returned the honest codeword unchanged; these
    /// are excluded from `labels`.
    pub unchanged: u64,
    /// Labels of the changed words.
    pub labels: LabelCounts,
}

impl TamperStats {
    pub fn detected(&self) -> Proportion {
        self.labels.proportion(DecodeOutcome::Tampered)
    }

    pub fn miss_rate(&self) -> f64 {
        1.0 - self.detected().rate()
    }
}

/// Encodes under a fresh key, tampers with `channel`, decodes.
pub fn tamper_run<C>(code: &C, channel: &TamperChannel, trials: u64, seed: u64) -> Result<TamperStats>
where
    C: MessagelessCode<Word = Codeword> + Sync,
{
    let unchanged = std::sync::atomic::AtomicU64::new(0);
    let labels = trial_labels(trials, seed, |rng| {
        let key = code.keygen(rng)?;
        let gamma = code.encode(&key, rng)?;
        let tampered = channel.apply(&gamma, rng)?;
        if tampered == gamma {
            unchanged.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            return Ok(None);
        }
        code.decode(&key, &tampered).map(Some)
    })?;
    Ok(TamperStats {
        trials,
        unchanged: unchanged.into_inner(),
        labels,
    })
}

/// Every word of `Σ^n` in lexicographic order, first position most significant.
pub fn enumerate_words(n: usize, alphabet: Alphabet, limit: u128) -> Result<impl Iterator<Item = Codeword>> {
    let states = alphabet.space_size(n);
    if states > limit {
        return Err(Error::StateSpace { states, limit });
    }
    let q = alphabet.q();
    Ok((0..states as u64).map(move |mut idx| {
        let mut symbols = vec![0 as Symbol; n];
        for s in symbols.iter_mut().rev() {
            *s = (idx % q) as Symbol;
            idx /= q;
        }
        Codeword::from_vec_unchecked(symbols, alphabet)
    }))
}

/// Labels of every word in `Σ^n`.
pub fn exact_labels<D>(n: usize, alphabet: Alphabet, limit: u128, decode: D) -> Result<LabelCounts>
where
    D: Fn(&Codeword) -> Result<DecodeOutcome>,
{
    let mut counts = LabelCounts::default();
    for w in enumerate_words(n, alphabet, limit)? {
        counts.record(decode(&w)?);
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::FlipStrategy;
    use crate::hamming::HammingCode;
    use crate::rng::rng_from_seed;
    use crate::types::SecurityParams;

    fn code(n: usize, q: u64, delta: &str) -> HammingCode {
        HammingCode::new(SecurityParams::new(128, n, q, delta.parse().unwrap()).unwrap())
    }

    #[test]
    fn enumeration_order_and_limit() {
        let words: Vec<String> = enumerate_words(2, Alphabet::new(3).unwrap(), 100)
            .unwrap()
            .map(|w| w.to_text())
            .collect();
        assert_eq!(words, ["0:0", "0:1", "0:2", "1:0", "1:1", "1:2", "2:0", "2:1", "2:2"]);
        assert!(matches!(
            enumerate_words(21, Alphabet::BINARY, EXACT_STATE_LIMIT),
            Err(Error::StateSpace { .. })
        ));
    }

    #[test]
    fn exact_labels_of_small_binary_code() {
        let c = code(8, 2, "0.5");
        let key = c.kgen(&mut rng_from_seed(0));
        let counts = exact_labels(8, Alphabet::BINARY, EXACT_STATE_LIMIT, |w| c.dec(&key, w)).unwrap();
        // t = 2: one word at distance 0, C(8,1)+C(8,2) = 36 within.
        assert_eq!((counts.valid, counts.tampered, counts.invalid), (1, 36, 219));
    }

    #[test]
    fn runs_are_thread_independent() {
        let c = code(16, 5, "0.3");
        let a = soundness_labels(&c, 500, 9).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| soundness_labels(&c, 500, 9).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.total(), 500);
    }

    #[test]
    fn zero_budget_is_excluded_not_failed() {
        let c = code(16, 256, "0.5");
        let ch = TamperChannel::WorstCase { budget: 0, strategy: FlipStrategy::Prefix };
        let stats = tamper_run(&c, &ch, 100, 1).unwrap();
        assert_eq!(stats.unchanged, 100);
        assert_eq!(stats.labels.total(), 0);
    }

    #[test]
    fn fixed_key_and_fresh_key_soundness_agree() {
        let c = code(12, 3, "0.2");
        let fresh = soundness_labels(&c, 20_000, 2).unwrap();
        let key = c.kgen(&mut rng_from_seed(3));
        let fixed = uniform_labels(12, Alphabet::new(3).unwrap(), 20_000, 4, |w| c.dec(&key, w)).unwrap();
        assert!(crate::stats::agree_within_sigma(
            fresh.proportion(DecodeOutcome::Invalid),
            fixed.proportion(DecodeOutcome::Invalid),
            4.0
        ));
    }
}
