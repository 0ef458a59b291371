//! Watermarking schemes as messageless codes, and back.
//!
//! Fixing a prompt turns a watermarked model into an encoder, and the
//! detector into a decoder that answers `tampered` when the watermark is
//! present and `invalid` otherwise. That decoder never answers `valid`.

use std::sync::Arc;

use rand::RngCore;

use crate::channels::TamperChannel;
use crate::code::MessagelessCode;
use crate::error::{Error, Result};
use crate::eval::{soundness_labels, tamper_run};
use crate::ldpc_prc::{gen_parity, prc_detect, prc_encode, PrcKey, PrcParams};
use crate::prf_mask::PrfKey;
use crate::stats::Proportion;
use crate::types::{uniform_codeword, Alphabet, Codeword, DecodeOutcome, Symbol};

/// A conditional generator of fixed-length strings over one alphabet.
pub trait GenerativeModel {
    fn alphabet(&self) -> Alphabet;
    fn output_len(&self) -> usize;
    fn generate(&self, prompt: &[Symbol], rng: &mut dyn RngCore) -> Result<Codeword>;
}

pub trait WatermarkScheme {
    type Key;
    type Base: GenerativeModel;
    type Marked: GenerativeModel;

    fn watermark(&self, lambda: u32, model: &Self::Base, rng: &mut dyn RngCore) -> Result<(Self::Key, Self::Marked)>;

    /// Deterministic in `(key, prompt, output)`.
    fn detect(&self, key: &Self::Key, prompt: &[Symbol], output: &Codeword) -> Result<bool>;
}

/// The prompt every derived encoding uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedPrompt {
    symbols: Vec<Symbol>,
    alphabet: Alphabet,
}

impl FixedPrompt {
    pub fn new(symbols: Vec<Symbol>, alphabet: Alphabet) -> Result<Self> {
        if let Some(&s) = symbols.iter().find(|&&s| !alphabet.contains(s)) {
            return Err(Error::param(format!("prompt symbol {s} is outside alphabet {alphabet}")));
        }
        Ok(FixedPrompt { symbols, alphabet })
    }

    pub fn empty(alphabet: Alphabet) -> Self {
        FixedPrompt {
            symbols: Vec::new(),
            alphabet,
        }
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }
}

/// Ignores the prompt and emits uniform strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformModel {
    pub n: usize,
    pub alphabet: Alphabet,
}

impl GenerativeModel for UniformModel {
    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn output_len(&self) -> usize {
        self.n
    }

    fn generate(&self, _prompt: &[Symbol], rng: &mut dyn RngCore) -> Result<Codeword> {
        uniform_codeword(self.n, self.alphabet, rng)
    }
}

/// Key of a derived code: the detection key and the watermarked model.
pub struct WatermarkKey<S: WatermarkScheme> {
    pub kappa: S::Key,
    pub model: S::Marked,
}

impl<S: WatermarkScheme> Clone for WatermarkKey<S>
where
    S::Key: Clone,
    S::Marked: Clone,
{
    fn clone(&self) -> Self {
        WatermarkKey {
            kappa: self.kappa.clone(),
            model: self.model.clone(),
        }
    }
}

/// The messageless code obtained from a scheme, a base model and a prompt.
pub struct WatermarkCode<S: WatermarkScheme> {
    scheme: S,
    model: S::Base,
    prompt: FixedPrompt,
    lambda: u32,
}

pub fn code_from_watermark<S: WatermarkScheme>(
    scheme: S,
    model: S::Base,
    prompt: FixedPrompt,
    lambda: u32,
) -> Result<WatermarkCode<S>> {
    if prompt.alphabet() != model.alphabet() {
        return Err(Error::Alphabet {
            expected: model.alphabet().q(),
            actual: prompt.alphabet().q(),
        });
    }
    Ok(WatermarkCode {
        scheme,
        model,
        prompt,
        lambda,
    })
}

impl<S: WatermarkScheme> WatermarkCode<S> {
    pub fn scheme(&self) -> &S {
        &self.scheme
    }

    pub fn prompt(&self) -> &FixedPrompt {
        &self.prompt
    }
}

impl<S: WatermarkScheme> MessagelessCode for WatermarkCode<S> {
    type Key = WatermarkKey<S>;
    type Word = Codeword;

    fn codeword_len(&self) -> usize {
        self.model.output_len()
    }

    fn alphabet(&self) -> Alphabet {
        self.model.alphabet()
    }

    fn keygen(&self, rng: &mut dyn RngCore) -> Result<WatermarkKey<S>> {
        let (kappa, model) = self.scheme.watermark(self.lambda, &self.model, rng)?;
        Ok(WatermarkKey { kappa, model })
    }

    fn encode(&self, key: &WatermarkKey<S>, rng: &mut dyn RngCore) -> Result<Codeword> {
        key.model.generate(self.prompt.symbols(), rng)
    }

    fn decode(&self, key: &WatermarkKey<S>, word: &Codeword) -> Result<DecodeOutcome> {
        word.expect_shape(self.codeword_len(), self.alphabet())?;
        Ok(if self.scheme.detect(&key.kappa, self.prompt.symbols(), word)? {
            DecodeOutcome::Tampered
        } else {
            DecodeOutcome::Invalid
        })
    }
}

/// A code packaged as a watermark: the marked model ignores its prompt and
/// emits encodings, and detection fires on `valid` or `tampered`.
pub struct CodeWatermark<C> {
    code: Arc<C>,
}

pub struct CodeModel<C: MessagelessCode> {
    code: Arc<C>,
    key: C::Key,
}

impl<C> GenerativeModel for CodeModel<C>
where
    C: MessagelessCode<Word = Codeword>,
{
    fn alphabet(&self) -> Alphabet {
        self.code.alphabet()
    }

    fn output_len(&self) -> usize {
        self.code.codeword_len()
    }

    fn generate(&self, _prompt: &[Symbol], rng: &mut dyn RngCore) -> Result<Codeword> {
        self.code.encode(&self.key, rng)
    }
}

impl<C> WatermarkScheme for CodeWatermark<C>
where
    C: MessagelessCode<Word = Codeword>,
    C::Key: Clone,
{
    type Key = C::Key;
    type Base = UniformModel;
    type Marked = CodeModel<C>;

    fn watermark(&self, _lambda: u32, model: &UniformModel, rng: &mut dyn RngCore) -> Result<(C::Key, CodeModel<C>)> {
        if model.n != self.code.codeword_len() || model.alphabet != self.code.alphabet() {
            return Err(Error::Dimension(format!(
                "model emits {} symbols over {}, code has {} over {}",
                model.n,
                model.alphabet,
                self.code.codeword_len(),
                self.code.alphabet()
            )));
        }
        let key = self.code.keygen(rng)?;
        let marked = CodeModel {
            code: Arc::clone(&self.code),
            key: key.clone(),
        };
        Ok((key, marked))
    }

    fn detect(&self, key: &C::Key, _prompt: &[Symbol], output: &Codeword) -> Result<bool> {
        Ok(self.code.decode(key, output)? != DecodeOutcome::Invalid)
    }
}

pub fn watermark_from_code<C>(code: C) -> (CodeWatermark<C>, UniformModel)
where
    C: MessagelessCode<Word = Codeword>,
{
    let model = UniformModel {
        n: code.codeword_len(),
        alphabet: code.alphabet(),
    };
    (CodeWatermark { code: Arc::new(code) }, model)
}

/// Toy scheme: the watermarked model emits fresh LDPC codewords and the
/// detector is the parity-check score.
#[derive(Debug, Clone, Copy)]
pub struct PrcWatermark {
    pub params: PrcParams,
}

/// Emits a fresh codeword on every call, whatever the prompt.
#[derive(Debug, Clone)]
pub struct PrcModel {
    key: PrcKey,
}

impl GenerativeModel for PrcModel {
    fn alphabet(&self) -> Alphabet {
        Alphabet::BINARY
    }

    fn output_len(&self) -> usize {
        self.key.n()
    }

    fn generate(&self, _prompt: &[Symbol], rng: &mut dyn RngCore) -> Result<Codeword> {
        Codeword::from_bits(&prc_encode(&self.key, rng))
    }
}

pub fn toy_prc_watermarked_model(prc_key: PrcKey, output_len: usize) -> Result<PrcModel> {
    if output_len != prc_key.n() {
        return Err(Error::Dimension(format!(
            "output length {output_len} differs from block length {}",
            prc_key.n()
        )));
    }
    Ok(PrcModel { key: prc_key })
}

fn bits_of(word: &Codeword) -> Vec<u8> {
    word.symbols().iter().map(|&s| s as u8).collect()
}

impl WatermarkScheme for PrcWatermark {
    type Key = PrcKey;
    type Base = UniformModel;
    type Marked = PrcModel;

    fn watermark(&self, lambda: u32, model: &UniformModel, rng: &mut dyn RngCore) -> Result<(PrcKey, PrcModel)> {
        if model.alphabet != Alphabet::BINARY {
            return Err(Error::Alphabet {
                expected: 2,
                actual: model.alphabet.q(),
            });
        }
        let p = &self.params;
        let h = gen_parity(p.n, p.r, p.row_weight, rng.next_u64())?;
        let key = PrcKey::new(h, &PrfKey::generate(lambda, rng)?, p.detect_threshold)?
            .with_bp_prior(p.bp_prior)?
            .with_max_iters(p.max_iters)?;
        let marked = toy_prc_watermarked_model(key.clone(), model.n)?;
        Ok((key, marked))
    }

    fn detect(&self, key: &PrcKey, _prompt: &[Symbol], output: &Codeword) -> Result<bool> {
        output.expect_shape(key.n(), Alphabet::BINARY)?;
        Ok(prc_detect(key, &bits_of(output))?.watermarked)
    }
}

/// The toy LDPC watermark as a messageless code with an empty prompt.
pub fn toy_prc_code(params: PrcParams, lambda: u32) -> Result<WatermarkCode<PrcWatermark>> {
    code_from_watermark(
        PrcWatermark { params },
        UniformModel {
            n: params.n,
            alphabet: Alphabet::BINARY,
        },
        FixedPrompt::empty(Alphabet::BINARY),
        lambda,
    )
}

/// Soundness error (uniform strings detected) and full-resample miss rate
/// (resampled outputs not detected) of a derived code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessReport {
    pub soundness_error: Proportion,
    pub resample_miss: f64,
}

impl WitnessReport {
    pub fn sum(&self) -> f64 {
        self.soundness_error.rate() + self.resample_miss
    }
}

pub fn soundness_robustness_witness<S>(code: &WatermarkCode<S>, trials: u64, seed: u64) -> Result<WitnessReport>
where
    S: WatermarkScheme + Sync,
    S::Base: Sync,
{
    let labels = soundness_labels(code, trials, seed)?;
    let resampled = tamper_run(code, &TamperChannel::FullResample, trials, seed ^ 0x5eed)?;
    Ok(WitnessReport {
        soundness_error: labels.accepted(),
        resample_miss: resampled.miss_rate(),
    })
}
