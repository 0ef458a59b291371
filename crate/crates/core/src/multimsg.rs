//! Codes that carry a message, and the fixed-message reduction to the
//! messageless interface.

use rand::RngCore;
use rayon::prelude::*;

use crate::channels::TamperChannel;
use crate::code::MessagelessCode;
use crate::error::{Error, Result};
use crate::ldpc_prc::{bp_decode, prc_detect, prc_encode, PrcKey, PrcParams};
use crate::prf_mask::PrfKey;
use crate::rng::trial_rng;
use crate::stats::Proportion;
use crate::types::{Alphabet, Codeword, DecodeOutcome, Symbol};

/// What a multi-message decoder returns.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MessageOutcome {
    Message(Vec<Symbol>),
    Invalid,
    Tampered,
}

/// A keyed code over messages in `Σ^m`.
pub trait MultiMessageCode {
    type Key;

    fn message_len(&self) -> usize;
    fn codeword_len(&self) -> usize;
    fn alphabet(&self) -> Alphabet;
    fn keygen(&self, rng: &mut dyn RngCore) -> Result<Self::Key>;
    fn encode(&self, key: &Self::Key, message: &[Symbol], rng: &mut dyn RngCore) -> Result<Codeword>;
    fn decode(&self, key: &Self::Key, word: &Codeword) -> Result<MessageOutcome>;

    fn check_message(&self, message: &[Symbol]) -> Result<()> {
        if message.len() != self.message_len() {
            return Err(Error::Dimension(format!(
                "message has {} symbols, code carries {}",
                message.len(),
                self.message_len()
            )));
        }
        let alphabet = self.alphabet();
        if let Some(&s) = message.iter().find(|&&s| !alphabet.contains(s)) {
            return Err(Error::Alphabet {
                expected: alphabet.q(),
                actual: u64::from(s) + 1,
            });
        }
        Ok(())
    }
}

/// The messageless code obtained by always encoding one message `mu_star`.
///
/// It decodes to valid exactly when the inner decoder returns `mu_star`, and
/// to invalid otherwise.
#[derive(Debug, Clone)]
pub struct FixedMessage<C> {
    inner: C,
    mu_star: Vec<Symbol>,
}

pub fn fix_message<C: MultiMessageCode>(code: C, mu_star: Vec<Symbol>) -> Result<FixedMessage<C>> {
    code.check_message(&mu_star)?;
    Ok(FixedMessage { inner: code, mu_star })
}

impl<C: MultiMessageCode> FixedMessage<C> {
    pub fn inner(&self) -> &C {
        &self.inner
    }

    pub fn message(&self) -> &[Symbol] {
        &self.mu_star
    }
}

impl<C: MultiMessageCode> MessagelessCode for FixedMessage<C> {
    type Key = C::Key;
    type Word = Codeword;

    fn codeword_len(&self) -> usize {
        self.inner.codeword_len()
    }

    fn alphabet(&self) -> Alphabet {
        self.inner.alphabet()
    }

    fn keygen(&self, rng: &mut dyn RngCore) -> Result<C::Key> {
        self.inner.keygen(rng)
    }

    fn encode(&self, key: &C::Key, rng: &mut dyn RngCore) -> Result<Codeword> {
        self.inner.encode(key, &self.mu_star, rng)
    }

    fn decode(&self, key: &C::Key, word: &Codeword) -> Result<DecodeOutcome> {
        Ok(match self.inner.decode(key, word)? {
            MessageOutcome::Message(m) if m == self.mu_star => DecodeOutcome::Valid,
            _ => DecodeOutcome::Invalid,
        })
    }
}

/// Failures of `dec(f(enc(mu))) == mu` over trials where `f` changed the word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ErrorCorrectionReport {
    pub trials: u64,
    /// Trials where the channel left the codeword unchanged; excluded.
    pub unchanged: u64,
    pub failures: Proportion,
}

impl ErrorCorrectionReport {
    pub fn failure_rate(&self) -> f64 {
        self.failures.rate()
    }
}

/// Empirical `P[dec(f(enc(mu))) != mu | f(enc(mu)) != enc(mu)]`, fresh key per trial.
pub fn check_error_correction<C>(
    code: &C,
    channel: &TamperChannel,
    mu: &[Symbol],
    trials: u64,
    seed: u64,
) -> Result<ErrorCorrectionReport>
where
    C: MultiMessageCode + Sync,
{
    if trials == 0 {
        return Err(Error::param("trials must be at least 1"));
    }
    code.check_message(mu)?;
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let key = code.keygen(&mut rng)?;
            let gamma = code.encode(&key, mu, &mut rng)?;
            let tampered = channel.apply(&gamma, &mut rng)?;
            if tampered == gamma {
                return Ok(None);
            }
            Ok(Some(code.decode(&key, &tampered)? != MessageOutcome::Message(mu.to_vec())))
        })
        .collect::<Result<Vec<Option<bool>>>>()?;
    let changed: Vec<bool> = per_trial.iter().flatten().copied().collect();
    Ok(ErrorCorrectionReport {
        trials,
        unchanged: trials - changed.len() as u64,
        failures: Proportion::new(changed.iter().filter(|&&f| f).count() as u64, changed.len() as u64),
    })
}

/// The zero-bit LDPC code as a multi-message code with an empty message:
/// decode runs BP, then the detector, and returns the empty message when the
/// detector fires.
#[derive(Debug, Clone, Copy)]
pub struct LdpcZeroBit {
    pub params: PrcParams,
}

impl LdpcZeroBit {
    pub fn new(params: PrcParams) -> Self {
        LdpcZeroBit { params }
    }
}

fn bits_of(word: &Codeword) -> Vec<u8> {
    word.symbols().iter().map(|&s| s as u8).collect()
}

impl MultiMessageCode for LdpcZeroBit {
    type Key = PrcKey;

    fn message_len(&self) -> usize {
        0
    }

    fn codeword_len(&self) -> usize {
        self.params.n
    }

    fn alphabet(&self) -> Alphabet {
        Alphabet::BINARY
    }

    fn keygen(&self, rng: &mut dyn RngCore) -> Result<PrcKey> {
        PrcKey::generate(&self.params, rng)
    }

    fn encode(&self, key: &PrcKey, message: &[Symbol], rng: &mut dyn RngCore) -> Result<Codeword> {
        self.check_message(message)?;
        Codeword::from_bits(&prc_encode(key, rng))
    }

    fn decode(&self, key: &PrcKey, word: &Codeword) -> Result<MessageOutcome> {
        word.expect_shape(self.params.n, Alphabet::BINARY)?;
        let bp = bp_decode(key, &bits_of(word), key.max_iters())?;
        Ok(if prc_detect(key, &bp.corrected)?.watermarked {
            MessageOutcome::Message(Vec::new())
        } else {
            MessageOutcome::Invalid
        })
    }
}

/// A keyed repetition code: each message symbol is repeated `reps` times,
/// the whole word masked by a keyed pad, and decoded by strict majority.
/// A position group with no strict majority decodes to invalid.
#[derive(Debug, Clone, Copy)]
pub struct RepetitionCode {
    pub message_len: usize,
    pub reps: usize,
    pub alphabet: Alphabet,
}

impl MultiMessageCode for RepetitionCode {
    type Key = PrfKey;

    fn message_len(&self) -> usize {
        self.message_len
    }

    fn codeword_len(&self) -> usize {
        self.message_len * self.reps
    }

    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn keygen(&self, rng: &mut dyn RngCore) -> Result<PrfKey> {
        PrfKey::generate(128, rng)
    }

    fn encode(&self, key: &PrfKey, message: &[Symbol], _rng: &mut dyn RngCore) -> Result<Codeword> {
        self.check_message(message)?;
        let q = self.alphabet.q();
        let pad = key.expand_labeled(b"rep", self.codeword_len(), self.alphabet);
        let symbols = message
            .iter()
            .flat_map(|&s| std::iter::repeat_n(s, self.reps))
            .zip(pad)
            .map(|(s, p)| ((u64::from(s) + u64::from(p)) % q) as Symbol)
            .collect();
        Codeword::new(symbols, self.alphabet)
    }

    fn decode(&self, key: &PrfKey, word: &Codeword) -> Result<MessageOutcome> {
        word.expect_shape(self.codeword_len(), self.alphabet)?;
        let q = self.alphabet.q();
        let pad = key.expand_labeled(b"rep", self.codeword_len(), self.alphabet);
        let plain: Vec<Symbol> = word
            .symbols()
            .iter()
            .zip(pad)
            .map(|(&s, p)| ((u64::from(s) + q - u64::from(p)) % q) as Symbol)
            .collect();
        let mut message = Vec::with_capacity(self.message_len);
        for group in plain.chunks(self.reps) {
            let mut sorted = group.to_vec();
            sorted.sort_unstable();
            let mut best = (0, sorted[0]);
            for run in sorted.chunk_by(|a, b| a == b) {
                if run.len() > best.0 {
                    best = (run.len(), run[0]);
                }
            }
            if 2 * best.0 <= self.reps {
                return Ok(MessageOutcome::Invalid);
            }
            message.push(best.1);
        }
        Ok(MessageOutcome::Message(message))
    }
}
