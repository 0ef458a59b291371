//! Alphabets, codewords, decoder outcomes, and their text forms.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};

pub type Symbol = u32;

/// Largest supported alphabet, 2^32, so every symbol fits in a [`Symbol`].
pub const MAX_Q: u64 = 1 << 32;

/// An alphabet `{0, .., q-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Alphabet(u64);

impl Alphabet {
    pub const BINARY: Alphabet = Alphabet(2);

    pub fn new(q: u64) -> Result<Self> {
        if !(2..=MAX_Q).contains(&q) {
            return Err(Error::param(format!("alphabet size q={q} outside [2, 2^32]")));
        }
        Ok(Alphabet(q))
    }

    pub fn q(self) -> u64 {
        self.0
    }

    pub fn contains(self, s: Symbol) -> bool {
        u64::from(s) < self.0
    }

    /// Number of strings of length `n`, saturating at `u128::MAX`.
    pub fn space_size(self, n: usize) -> u128 {
        let mut acc: u128 = 1;
        for _ in 0..n {
            acc = match acc.checked_mul(u128::from(self.0)) {
                Some(v) => v,
                None => return u128::MAX,
            };
        }
        acc
    }

    pub fn sample<R: RngCore + ?Sized>(self, rng: &mut R) -> Symbol {
        rng.gen_range(0..self.0) as Symbol
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q={}", self.0)
    }
}

/// A length-`n` string over an [`Alphabet`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Codeword {
    symbols: Vec<Symbol>,
    alphabet: Alphabet,
}

impl Codeword {
    pub fn new(symbols: Vec<Symbol>, alphabet: Alphabet) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::param("codeword length must be at least 1"));
        }
        if let Some((i, s)) = symbols.iter().enumerate().find(|(_, s)| !alphabet.contains(**s)) {
            return Err(Error::param(format!(
                "symbol {s} at position {i} is outside alphabet {alphabet}"
            )));
        }
        Ok(Codeword { symbols, alphabet })
    }

    /// Binary codeword from 0/1 values; any nonzero byte is a 1.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        Codeword::new(bits.iter().map(|&b| Symbol::from(b != 0)).collect(), Alphabet::BINARY)
    }

    pub(crate) fn from_vec_unchecked(symbols: Vec<Symbol>, alphabet: Alphabet) -> Self {
        debug_assert!(!symbols.is_empty());
        debug_assert!(symbols.iter().all(|s| alphabet.contains(*s)));
        Codeword { symbols, alphabet }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn q(&self) -> u64 {
        self.alphabet.q()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn into_symbols(self) -> Vec<Symbol> {
        self.symbols
    }

    pub fn is_binary(&self) -> bool {
        self.alphabet == Alphabet::BINARY
    }

    pub(crate) fn check_same_shape(&self, other: &Codeword) -> Result<()> {
        if self.alphabet != other.alphabet {
            return Err(Error::Alphabet {
                expected: self.q(),
                actual: other.q(),
            });
        }
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "lengths differ: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn expect_shape(&self, n: usize, alphabet: Alphabet) -> Result<()> {
        if self.alphabet != alphabet {
            return Err(Error::Alphabet {
                expected: alphabet.q(),
                actual: self.q(),
            });
        }
        if self.len() != n {
            return Err(Error::Dimension(format!("expected length {n}, got {}", self.len())));
        }
        Ok(())
    }

    /// Decimal symbols joined by `:`, e.g. `0:3:1:2`.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.len() * 2);
        for (i, s) in self.symbols.iter().enumerate() {
            if i > 0 {
                out.push(':');
            }
            out.push_str(&s.to_string());
        }
        out
    }

    /// Parses the `:`-joined decimal form, or the `hex:<bits>:<digits>` form
    /// for binary codewords.
    pub fn from_text(text: &str, alphabet: Alphabet) -> Result<Self> {
        let text = text.trim();
        if text.starts_with("hex:") {
            let word = Codeword::from_hex(text)?;
            if alphabet != Alphabet::BINARY {
                return Err(Error::Alphabet {
                    expected: alphabet.q(),
                    actual: 2,
                });
            }
            return Ok(word);
        }
        let symbols = text
            .split(':')
            .map(|tok| {
                tok.parse::<Symbol>()
                    .map_err(|e| Error::parse(format!("bad symbol {tok:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Codeword::new(symbols, alphabet)
    }

    /// Hex form of a binary codeword: `hex:<bit length>:<digits>`.
    ///
    /// Bit `i` is stored in byte `i / 8` at bit position `i % 8` (least
    /// significant first); unused high bits of the last byte are zero.
    pub fn to_hex(&self) -> Result<String> {
        if !self.is_binary() {
            return Err(Error::Alphabet {
                expected: 2,
                actual: self.q(),
            });
        }
        let mut bytes = vec![0u8; self.len().div_ceil(8)];
        for (i, &s) in self.symbols.iter().enumerate() {
            bytes[i / 8] |= (s as u8) << (i % 8);
        }
        let digits: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
        Ok(format!("hex:{}:{}", self.len(), digits))
    }

    pub fn from_hex(text: &str) -> Result<Self> {
        let rest = text
            .trim()
            .strip_prefix("hex:")
            .ok_or_else(|| Error::parse("hex codeword must start with `hex:`"))?;
        let (len, digits) = rest
            .split_once(':')
            .ok_or_else(|| Error::parse("hex codeword must be `hex:<bits>:<digits>`"))?;
        let n: usize = len
            .parse()
            .map_err(|e| Error::parse(format!("bad bit length {len:?}: {e}")))?;
        if digits.len() != 2 * n.div_ceil(8) {
            return Err(Error::parse(format!(
                "expected {} hex digits for {n} bits, got {}",
                2 * n.div_ceil(8),
                digits.len()
            )));
        }
        let mut bits = Vec::with_capacity(n);
        for i in 0..n {
            let byte = u8::from_str_radix(&digits[2 * (i / 8)..2 * (i / 8) + 2], 16)
                .map_err(|e| Error::parse(format!("bad hex digits: {e}")))?;
            bits.push(Symbol::from((byte >> (i % 8)) & 1));
        }
        for i in n..8 * n.div_ceil(8) {
            let byte = u8::from_str_radix(&digits[2 * (i / 8)..2 * (i / 8) + 2], 16)
                .map_err(|e| Error::parse(format!("bad hex digits: {e}")))?;
            if (byte >> (i % 8)) & 1 != 0 {
                return Err(Error::parse("nonzero padding bits in hex codeword"));
            }
        }
        Codeword::new(bits, Alphabet::BINARY)
    }
}

impl fmt::Display for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// The decoder's entire output contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DecodeOutcome {
    Valid,
    Invalid,
    Tampered,
}

impl DecodeOutcome {
    pub const ALL: [DecodeOutcome; 3] = [DecodeOutcome::Valid, DecodeOutcome::Invalid, DecodeOutcome::Tampered];

    pub fn as_str(self) -> &'static str {
        match self {
            DecodeOutcome::Valid => "valid",
            DecodeOutcome::Invalid => "invalid",
            DecodeOutcome::Tampered => "tampered",
        }
    }
}

impl fmt::Display for DecodeOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DecodeOutcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "valid" => Ok(DecodeOutcome::Valid),
            "invalid" => Ok(DecodeOutcome::Invalid),
            "tampered" => Ok(DecodeOutcome::Tampered),
            other => Err(Error::parse(format!("unknown outcome {other:?}"))),
        }
    }
}

/// A real parameter in (0, 1) held as an exact decimal fraction `num / den`.
///
/// Decoders compare Hamming distances against thresholds that involve delta,
/// so delta is kept as a rational to make `dist <= t` exact at the boundary.
/// `0.1` is the fraction 1/10, not the nearest binary double.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Delta {
    num: u64,
    den: u64,
}

/// Fractional digits accepted in a delta; keeps threshold products in u128.
const DELTA_MAX_DIGITS: usize = 15;

impl Delta {
    pub fn from_fraction(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num == 0 || num >= den {
            return Err(Error::param(format!("delta {num}/{den} must lie strictly in (0, 1)")));
        }
        if den > 10u64.pow(DELTA_MAX_DIGITS as u32) {
            return Err(Error::param(format!("delta denominator {den} too large")));
        }
        Ok(Delta { num, den })
    }

    /// Uses the shortest decimal representation of `x`.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::param(format!("delta {x} is not finite")));
        }
        format!("{x}").parse()
    }

    pub fn num(self) -> u64 {
        self.num
    }

    pub fn den(self) -> u64 {
        self.den
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl FromStr for Delta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int != "0" && !int.is_empty() {
            return Err(Error::param(format!("delta {s} must lie strictly in (0, 1)")));
        }
        if frac.is_empty() || frac.len() > DELTA_MAX_DIGITS || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::parse(format!(
                "delta {s:?} must be a decimal 0.d with 1..={DELTA_MAX_DIGITS} digits"
            )));
        }
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            return Err(Error::param("delta must be positive"));
        }
        let num: u64 = frac.parse().map_err(|e| Error::parse(format!("{e}")))?;
        Delta::from_fraction(num, 10u64.pow(frac.len() as u32))
    }
}

impl fmt::Display for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Denominators built by this type are powers of ten or user fractions.
        let mut den = self.den;
        let mut digits = 0;
        while den.is_multiple_of(10) && den > 1 {
            den /= 10;
            digits += 1;
        }
        if den == 1 {
            write!(f, "0.{:0width$}", self.num, width = digits)
        } else {
            write!(f, "{}", self.value())
        }
    }
}

/// Parameters shared by a code instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SecurityParams {
    pub lambda: u32,
    pub n: usize,
    pub alphabet: Alphabet,
    pub delta: Delta,
}

impl SecurityParams {
    pub fn new(lambda: u32, n: usize, q: u64, delta: Delta) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("codeword length n must be at least 1"));
        }
        Ok(SecurityParams {
            lambda,
            n,
            alphabet: Alphabet::new(q)?,
            delta,
        })
    }

    pub fn q(&self) -> u64 {
        self.alphabet.q()
    }
}

/// Number of positions where `a` and `b` differ.
pub fn hamming_distance(a: &Codeword, b: &Codeword) -> Result<usize> {
    a.check_same_shape(b)?;
    Ok(a.symbols.iter().zip(&b.symbols).filter(|(x, y)| x != y).count())
}

/// A codeword with i.i.d. uniform symbols.
pub fn uniform_codeword<R: RngCore + ?Sized>(n: usize, alphabet: Alphabet, rng: &mut R) -> Result<Codeword> {
    if n == 0 {
        return Err(Error::param("codeword length n must be at least 1"));
    }
    let symbols = (0..n).map(|_| alphabet.sample(rng)).collect();
    Ok(Codeword::from_vec_unchecked(symbols, alphabet))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    fn word(symbols: &[Symbol], q: u64) -> Codeword {
        Codeword::new(symbols.to_vec(), Alphabet::new(q).unwrap()).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(hamming_distance(&word(&[0, 1, 2, 3], 4), &word(&[0, 1, 2, 3], 4)).unwrap(), 0);
        assert_eq!(hamming_distance(&word(&[0, 0, 0, 0], 2), &word(&[1, 1, 1, 1], 2)).unwrap(), 4);
        assert_eq!(hamming_distance(&word(&[0, 1, 0, 1], 2), &word(&[0, 1, 1, 1], 2)).unwrap(), 1);
    }

    #[test]
    fn distance_rejects_mismatched_shapes() {
        assert!(matches!(
            hamming_distance(&word(&[0, 1], 2), &word(&[0, 1, 0], 2)),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            hamming_distance(&word(&[0, 1], 2), &word(&[0, 1], 3)),
            Err(Error::Alphabet { .. })
        ));
    }

    #[test]
    fn constructor_validation() {
        assert!(Alphabet::new(1).is_err());
        assert!(Alphabet::new(MAX_Q).is_ok());
        assert!(Alphabet::new(MAX_Q + 1).is_err());
        assert!(Codeword::new(vec![], Alphabet::BINARY).is_err());
        assert!(Codeword::new(vec![0, 2], Alphabet::BINARY).is_err());
        assert!(SecurityParams::new(128, 0, 2, "0.5".parse().unwrap()).is_err());
    }

    #[test]
    fn uniform_codeword_is_deterministic() {
        let a = uniform_codeword(4, Alphabet::BINARY, &mut rng_from_seed(11)).unwrap();
        let b = uniform_codeword(4, Alphabet::BINARY, &mut rng_from_seed(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_codeword_frequencies_within_five_sigma() {
        let n = 100_000;
        let w = uniform_codeword(n, Alphabet::BINARY, &mut rng_from_seed(3)).unwrap();
        let ones = w.symbols().iter().filter(|&&s| s == 1).count() as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((ones - n as f64 / 2.0).abs() < 5.0 * sigma, "ones={ones}");
    }

    #[test]
    fn single_symbol_seed_sweep_covers_both_values() {
        let mut seen = [false; 2];
        for seed in 0..10_000 {
            let w = uniform_codeword(1, Alphabet::BINARY, &mut rng_from_seed(seed)).unwrap();
            seen[w.symbols()[0] as usize] = true;
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn text_forms() {
        let w = word(&[0, 3, 1, 2], 4);
        assert_eq!(w.to_text(), "0:3:1:2");
        assert_eq!(Codeword::from_text("0:3:1:2", Alphabet::new(4).unwrap()).unwrap(), w);
        assert!(Codeword::from_text("0:4", Alphabet::new(4).unwrap()).is_err());
        assert!(Codeword::from_text("0::1", Alphabet::new(4).unwrap()).is_err());

        let b = word(&[1, 0, 1, 1, 0, 0, 0, 0, 1, 1], 2);
        assert_eq!(b.to_hex().unwrap(), "hex:10:0d03");
        assert_eq!(Codeword::from_text("hex:10:0d03", Alphabet::BINARY).unwrap(), b);
        assert!(Codeword::from_hex("hex:10:0d07").is_err());
        assert!(w.to_hex().is_err());
    }

    #[test]
    fn delta_is_exact_decimal() {
        let d: Delta = "0.1".parse().unwrap();
        assert_eq!((d.num(), d.den()), (1, 10));
        let quarter = Delta::from_f64(0.25).unwrap();
        assert_eq!((quarter.num(), quarter.den()), (25, 100));
        assert_eq!(Delta::from_f64(0.5).unwrap().to_string(), "0.5");
        assert_eq!("0.050".parse::<Delta>().unwrap().to_string(), "0.05");
        assert!("0".parse::<Delta>().is_err());
        assert!("1.0".parse::<Delta>().is_err());
        assert!("0.0".parse::<Delta>().is_err());
        assert!(Delta::from_f64(1.5).is_err());
    }

    fn triple() -> impl Strategy<Value = (Vec<u32>, Vec<u32>, Vec<u32>)> {
        (1usize..24).prop_flat_map(|n| {
            (
                prop::collection::vec(0u32..5, n),
                prop::collection::vec(0u32..5, n),
                prop::collection::vec(0u32..5, n),
            )
        })
    }

    proptest! {
        #[test]
        fn distance_is_a_metric((a, b, c) in triple()) {
            let q = Alphabet::new(5).unwrap();
            let (a, b, c) = (
                Codeword::new(a, q).unwrap(),
                Codeword::new(b, q).unwrap(),
                Codeword::new(c, q).unwrap(),
            );
            let ab = hamming_distance(&a, &b).unwrap();
            let ba = hamming_distance(&b, &a).unwrap();
            let bc = hamming_distance(&b, &c).unwrap();
            let ac = hamming_distance(&a, &c).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert_eq!(ab == 0, a == b);
            prop_assert!(ac <= ab + bc);
        }

        #[test]
        fn text_round_trip(symbols in prop::collection::vec(0u32..1000, 1..40)) {
            let w = Codeword::new(symbols, Alphabet::new(1000).unwrap()).unwrap();
            prop_assert_eq!(Codeword::from_text(&w.to_text(), w.alphabet()).unwrap(), w.clone());
        }

        #[test]
        fn hex_round_trip(bits in prop::collection::vec(0u8..2, 1..70)) {
            let w = Codeword::from_bits(&bits).unwrap();
            prop_assert_eq!(Codeword::from_hex(&w.to_hex().unwrap()).unwrap(), w);
        }
    }
}
