//! HMAC-SHA256 in counter mode, and symbol extraction from its bitstream.
//!
//! Block `i` of the stream for a label is
//!
//! ```text
//! HMAC-SHA256(kappa, "tamperlock/prf/v1" || 0x00 || label || be64(i))
//! ```
//!
//! and blocks are concatenated. Symbols over an alphabet of size `q` are read
//! MSB-first in chunks of `w = ceil(log2 q)` bits. A chunk `v >= q` is
//! discarded, so symbols stay exactly uniform when `q` is not a power of two;
//! for `q = 2^w` nothing is ever discarded and each binary symbol is one bit.
//!
//! The counter label for `prf_expand(kappa, pi, ..)` is `"ctr" || be64(pi)`.

use std::fmt;

use hmac::{Hmac, Mac};
use rand::RngCore;
use sha2::Sha256;

use crate::error::{Error, Result};
use crate::types::{Alphabet, Symbol};

type HmacSha256 = Hmac<Sha256>;

const DOMAIN: &[u8] = b"tamperlock/prf/v1\x00";

/// The λ-bit PRF key.
#[derive(Clone, PartialEq, Eq)]
pub struct PrfKey {
    bytes: Vec<u8>,
}

impl fmt::Debug for PrfKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PrfKey({} bits)", self.lambda())
    }
}

impl PrfKey {
    pub fn generate<R: RngCore + ?Sized>(lambda: u32, rng: &mut R) -> Result<Self> {
        if lambda == 0 || !lambda.is_multiple_of(8) {
            return Err(Error::param(format!("PRF key length {lambda} must be a positive multiple of 8 bits")));
        }
        let mut bytes = vec![0u8; lambda as usize / 8];
        rng.fill_bytes(&mut bytes);
        Ok(PrfKey { bytes })
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self> {
        if bytes.is_empty() {
            return Err(Error::param("PRF key must not be empty"));
        }
        Ok(PrfKey { bytes })
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn lambda(&self) -> u32 {
        (self.bytes.len() * 8) as u32
    }

    /// Raw keystream for `label`.
    pub fn stream(&self, label: &[u8]) -> PrfStream {
        let mac = HmacSha256::new_from_slice(&self.bytes).expect("HMAC accepts keys of any length");
        PrfStream {
            mac,
            label: label.to_vec(),
            block: 0,
            buf: [0; 32],
            bit_pos: 256,
        }
    }

    /// `out_len` uniform symbols from the stream for `label`.
    pub fn expand_labeled(&self, label: &[u8], out_len: usize, alphabet: Alphabet) -> Vec<Symbol> {
        let mut stream = self.stream(label);
        let q = alphabet.q();
        let width = symbol_width(q);
        let mut out = Vec::with_capacity(out_len);
        while out.len() < out_len {
            let v = stream.next_bits(width);
            if v < q {
                out.push(v as Symbol);
            }
        }
        out
    }
}

/// Bits per candidate symbol: `ceil(log2 q)`.
pub fn symbol_width(q: u64) -> u32 {
    debug_assert!(q >= 2);
    64 - (q - 1).leading_zeros()
}

/// Label for the counter-keyed pad.
pub fn counter_label(pi: u64) -> [u8; 11] {
    let mut label = [0u8; 11];
    label[..3].copy_from_slice(b"ctr");
    label[3..].copy_from_slice(&pi.to_be_bytes());
    label
}

/// `F(kappa, pi)` as `out_len` symbols.
pub fn prf_expand(kappa: &PrfKey, pi: u64, out_len: usize, alphabet: Alphabet) -> Result<Vec<Symbol>> {
    if out_len == 0 {
        return Err(Error::param("prf_expand needs out_len >= 1"));
    }
    Ok(kappa.expand_labeled(&counter_label(pi), out_len, alphabet))
}

/// Keystream reader; see the module docs for the block layout.
pub struct PrfStream {
    mac: HmacSha256,
    label: Vec<u8>,
    block: u64,
    buf: [u8; 32],
    bit_pos: usize,
}

impl PrfStream {
    fn refill(&mut self) {
        let mut mac = self.mac.clone();
        mac.update(DOMAIN);
        mac.update(&self.label);
        mac.update(&self.block.to_be_bytes());
        self.buf.copy_from_slice(&mac.finalize().into_bytes());
        self.block += 1;
        self.bit_pos = 0;
    }

    pub fn next_bit(&mut self) -> u64 {
        if self.bit_pos == 256 {
            self.refill();
        }
        let byte = self.buf[self.bit_pos / 8];
        let bit = (byte >> (7 - self.bit_pos % 8)) & 1;
        self.bit_pos += 1;
        u64::from(bit)
    }

    /// Next `width` bits, most significant first.
    pub fn next_bits(&mut self, width: u32) -> u64 {
        debug_assert!(width <= 64);
        (0..width).fold(0u64, |acc, _| (acc << 1) | self.next_bit())
    }

    pub fn fill_bytes(&mut self, out: &mut [u8]) {
        for b in out {
            *b = self.next_bits(8) as u8;
        }
    }
}
