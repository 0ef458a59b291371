//! Pseudorandom masking of a deterministic code under a public counter.
//!
//! The masked codeword is `enc(sk) + F(kappa, pi)` symbol-wise mod `q`
//! (XOR for binary), with `pi` a fresh counter value that travels in the
//! clear next to the body. For each `pi` the mask is a bijection on `Σ^n`,
//! so the decoder's label distribution on uniform inputs is exactly that of
//! the inner code.

mod counter;
mod prf;

pub use counter::{Counter, CounterStore, MemoryCounter};
pub use prf::{counter_label, prf_expand, symbol_width, PrfKey, PrfStream};

use std::fmt;
use std::sync::Mutex;

use rand::RngCore;

use crate::code::MessagelessCode;
use crate::error::{Error, Result};
use crate::types::{Alphabet, Codeword, DecodeOutcome, Symbol};

/// Something that yields a per-counter pad.
pub trait PadSource {
    fn pad(&self, pi: u64, len: usize, alphabet: Alphabet) -> Vec<Symbol>;
}

impl PadSource for PrfKey {
    fn pad(&self, pi: u64, len: usize, alphabet: Alphabet) -> Vec<Symbol> {
        self.expand_labeled(&counter_label(pi), len, alphabet)
    }
}

/// A masked body with the counter value that keyed it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MaskedCodeword {
    pub body: Codeword,
    pub pi: u64,
}

impl MaskedCodeword {
    /// `pi=<int>;<codeword text>`.
    pub fn to_wire(&self) -> String {
        format!("pi={};{}", self.pi, self.body.to_text())
    }

    pub fn from_wire(text: &str, alphabet: Alphabet) -> Result<Self> {
        let rest = text
            .trim()
            .strip_prefix("pi=")
            .ok_or_else(|| Error::parse("masked codeword must start with `pi=`"))?;
        let (pi, body) = rest
            .split_once(';')
            .ok_or_else(|| Error::parse("masked codeword must be `pi=<int>;<codeword>`"))?;
        let pi = pi
            .parse()
            .map_err(|e| Error::parse(format!("bad counter value {pi:?}: {e}")))?;
        Ok(MaskedCodeword {
            body: Codeword::from_text(body, alphabet)?,
            pi,
        })
    }
}

impl fmt::Display for MaskedCodeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_wire())
    }
}

fn add_mod(a: Symbol, b: Symbol, q: u64) -> Symbol {
    ((u64::from(a) + u64::from(b)) % q) as Symbol
}

fn sub_mod(a: Symbol, b: Symbol, q: u64) -> Symbol {
    ((u64::from(a) + q - u64::from(b)) % q) as Symbol
}

/// Adds the pad for `pi` to `gamma`.
pub fn mask<P: PadSource + ?Sized>(kappa: &P, pi: u64, gamma: &Codeword) -> MaskedCodeword {
    let q = gamma.q();
    let pad = kappa.pad(pi, gamma.len(), gamma.alphabet());
    let body = gamma.symbols().iter().zip(&pad).map(|(&g, &p)| add_mod(g, p, q)).collect();
    MaskedCodeword {
        body: Codeword::from_vec_unchecked(body, gamma.alphabet()),
        pi,
    }
}

/// Removes the pad for `masked.pi`.
pub fn unmask<P: PadSource + ?Sized>(kappa: &P, masked: &MaskedCodeword) -> Codeword {
    let body = &masked.body;
    let q = body.q();
    let pad = kappa.pad(masked.pi, body.len(), body.alphabet());
    let symbols = body.symbols().iter().zip(&pad).map(|(&m, &p)| sub_mod(m, p, q)).collect();
    Codeword::from_vec_unchecked(symbols, body.alphabet())
}

/// Key of a masked code: the inner key and the PRF key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedKey<K> {
    pub inner: K,
    pub prf: PrfKey,
}

/// A deterministic code upgraded with a counter-keyed pseudorandom mask.
pub struct PrfMaskedCode<C, K = CounterStore> {
    inner: C,
    lambda: u32,
    counter: Mutex<K>,
}

/// Wraps `inner` so that each encoding is masked under a fresh counter value.
pub fn wrap_code<C, K>(inner: C, lambda: u32, counter: K) -> Result<PrfMaskedCode<C, K>>
where
    C: MessagelessCode<Word = Codeword>,
    K: Counter,
{
    if !inner.deterministic_encoder() {
        return Err(Error::param("counter masking requires an inner code with a deterministic encoder"));
    }
    if lambda == 0 || !lambda.is_multiple_of(8) {
        return Err(Error::param(format!("PRF key length {lambda} must be a positive multiple of 8 bits")));
    }
    Ok(PrfMaskedCode {
        inner,
        lambda,
        counter: Mutex::new(counter),
    })
}

impl<C, K> PrfMaskedCode<C, K>
where
    C: MessagelessCode<Word = Codeword>,
    K: Counter,
{
    pub fn inner(&self) -> &C {
        &self.inner
    }

    pub fn into_parts(self) -> (C, K) {
        (self.inner, self.counter.into_inner().unwrap_or_else(|e| e.into_inner()))
    }

    /// Decodes a body received alongside the public value `pi`.
    pub fn decode_at(&self, key: &MaskedKey<C::Key>, body: &Codeword, pi: u64) -> Result<DecodeOutcome> {
        body.expect_shape(self.inner.codeword_len(), self.inner.alphabet())?;
        self.inner.decode(&key.inner, &unmask(&key.prf, &MaskedCodeword { body: body.clone(), pi }))
    }
}

impl<C, K> MessagelessCode for PrfMaskedCode<C, K>
where
    C: MessagelessCode<Word = Codeword>,
    K: Counter,
{
    type Key = MaskedKey<C::Key>;
    type Word = MaskedCodeword;

    fn codeword_len(&self) -> usize {
        self.inner.codeword_len()
    }

    fn alphabet(&self) -> Alphabet {
        self.inner.alphabet()
    }

    fn keygen(&self, rng: &mut dyn RngCore) -> Result<Self::Key> {
        Ok(MaskedKey {
            inner: self.inner.keygen(rng)?,
            prf: PrfKey::generate(self.lambda, rng)?,
        })
    }

    fn encode(&self, key: &Self::Key, rng: &mut dyn RngCore) -> Result<MaskedCodeword> {
        let pi = self
            .counter
            .lock()
            .map_err(|_| Error::Counter("counter lock poisoned".into()))?
            .next_value()?;
        let gamma = self.inner.encode(&key.inner, rng)?;
        Ok(mask(&key.prf, pi, &gamma))
    }

    fn decode(&self, key: &Self::Key, word: &MaskedCodeword) -> Result<DecodeOutcome> {
        self.decode_at(key, &word.body, word.pi)
    }
}
