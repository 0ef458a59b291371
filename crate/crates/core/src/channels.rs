//! Length-preserving tampering channels.
//!
//! All channels draw from a caller-supplied RNG, so a channel applied with a
//! seeded generator is a pure function of `(input, seed)`.

use std::fmt;
use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::types::{hamming_distance, Alphabet, Codeword, Symbol};

/// Key-aware adversary: given the honest codeword and a budget, returns the
/// `(position, new_symbol)` edits to make.
pub type FlipCallback = dyn Fn(&Codeword, usize, &mut dyn RngCore) -> Vec<(usize, Symbol)> + Send + Sync;

/// How [`worst_case_flip`] picks positions and replacement symbols.
#[derive(Clone)]
pub enum FlipStrategy {
    /// Uniform set of `budget` positions, each set to a uniform different symbol.
    RandomPositions,
    /// The first `budget` positions, each mapped to `(s + 1) mod q`.
    Prefix,
    /// Caller-provided edits; validated to change exactly `budget` positions.
    Adversarial(Arc<FlipCallback>),
}

impl FlipStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            FlipStrategy::RandomPositions => "random",
            FlipStrategy::Prefix => "prefix",
            FlipStrategy::Adversarial(_) => "adversarial",
        }
    }
}

impl fmt::Debug for FlipStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub enum TamperChannel {
    /// Each position, with probability `beta`, is replaced by a uniform symbol.
    IndependentResample { beta: f64 },
    /// Exactly `budget` positions change.
    WorstCase { budget: usize, strategy: FlipStrategy },
    /// Every input maps to `target`.
    Constant { target: Codeword },
    /// Every position is replaced by a uniform symbol.
    FullResample,
}

impl TamperChannel {
    pub fn independent(beta: f64) -> Result<Self> {
        check_unit("beta", beta)?;
        Ok(TamperChannel::IndependentResample { beta })
    }

    /// Expected (or maximal) fraction of positions changed on a length-`n`
    /// word over `alphabet`.
    pub fn declared_alpha(&self, n: usize, alphabet: Alphabet) -> f64 {
        let keep = 1.0 / alphabet.q() as f64;
        match self {
            TamperChannel::IndependentResample { beta } => beta * (1.0 - keep),
            TamperChannel::WorstCase { budget, .. } => *budget as f64 / n as f64,
            TamperChannel::Constant { .. } => 1.0,
            TamperChannel::FullResample => 1.0 - keep,
        }
    }

    pub fn apply<R: RngCore + ?Sized>(&self, gamma: &Codeword, rng: &mut R) -> Result<Codeword> {
        match self {
            TamperChannel::IndependentResample { beta } => independent_resample(gamma, *beta, rng),
            TamperChannel::WorstCase { budget, strategy } => worst_case_flip(gamma, *budget, strategy, rng),
            TamperChannel::Constant { target } => {
                target.expect_shape(gamma.len(), gamma.alphabet())?;
                Ok(target.clone())
            }
            TamperChannel::FullResample => Ok(full_resample(gamma, rng)),
        }
    }

    pub fn apply_seeded(&self, gamma: &Codeword, seed: u64) -> Result<Codeword> {
        self.apply(gamma, &mut rng_from_seed(seed))
    }

    /// Parses `ind:beta=<x>`, `full`, `worst:budget=<k>[:strategy=random|prefix]`
    /// or `const:<codeword>`.
    pub fn parse(spec: &str, alphabet: Alphabet) -> Result<Self> {
        let spec = spec.trim();
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        match kind {
            "full" if rest.is_empty() => Ok(TamperChannel::FullResample),
            "ind" => {
                let beta = rest
                    .strip_prefix("beta=")
                    .ok_or_else(|| Error::parse(format!("expected ind:beta=<x>, got {spec:?}")))?;
                let beta = beta.parse().map_err(|e| Error::parse(format!("beta {beta:?}: {e}")))?;
                TamperChannel::independent(beta)
            }
            "worst" => {
                let mut budget = None;
                let mut strategy = FlipStrategy::RandomPositions;
                for field in rest.split(':') {
                    match field.split_once('=') {
                        Some(("budget", v)) => {
                            budget = Some(v.parse().map_err(|e| Error::parse(format!("budget {v:?}: {e}")))?)
                        }
                        Some(("strategy", "random")) => strategy = FlipStrategy::RandomPositions,
                        Some(("strategy", "prefix")) => strategy = FlipStrategy::Prefix,
                        _ => return Err(Error::parse(format!("bad worst-case field {field:?}"))),
                    }
                }
                let budget = budget.ok_or_else(|| Error::parse("worst-case channel needs budget=<k>"))?;
                Ok(TamperChannel::WorstCase { budget, strategy })
            }
            "const" => Ok(TamperChannel::Constant {
                target: Codeword::from_text(rest, alphabet)?,
            }),
            _ => Err(Error::parse(format!("unknown channel spec {spec:?}"))),
        }
    }
}

impl fmt::Display for TamperChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TamperChannel::IndependentResample { beta } => write!(f, "ind:beta={beta}"),
            TamperChannel::WorstCase { budget, strategy } => {
                write!(f, "worst:budget={budget}:strategy={}", strategy.name())
            }
            TamperChannel::Constant { target } => write!(f, "const:{}", target.to_text()),
            TamperChannel::FullResample => f.write_str("full"),
        }
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::param(format!("{name}={x} must lie in [0, 1]")))
    }
}

pub fn independent_resample<R: RngCore + ?Sized>(gamma: &Codeword, beta: f64, rng: &mut R) -> Result<Codeword> {
    check_unit("beta", beta)?;
    let alphabet = gamma.alphabet();
    let out = gamma
        .symbols()
        .iter()
        .map(|&s| if rng.gen_bool(beta) { alphabet.sample(rng) } else { s })
        .collect();
    Ok(Codeword::from_vec_unchecked(out, alphabet))
}

/// Resamples every position; the output is uniform on `Σ^n` whatever the input.
pub fn full_resample<R: RngCore + ?Sized>(gamma: &Codeword, rng: &mut R) -> Codeword {
    let alphabet = gamma.alphabet();
    let out = (0..gamma.len()).map(|_| alphabet.sample(rng)).collect();
    Codeword::from_vec_unchecked(out, alphabet)
}

/// A uniform symbol different from `s`.
fn other_symbol<R: RngCore + ?Sized>(s: Symbol, q: u64, rng: &mut R) -> Symbol {
    let r = rng.gen_range(0..q - 1);
    (if r >= u64::from(s) { r + 1 } else { r }) as Symbol
}

/// Changes exactly `budget` positions.
pub fn worst_case_flip<R: RngCore + ?Sized>(
    gamma: &Codeword,
    budget: usize,
    strategy: &FlipStrategy,
    rng: &mut R,
) -> Result<Codeword> {
    let n = gamma.len();
    if budget > n {
        return Err(Error::param(format!("budget {budget} exceeds length {n}")));
    }
    let q = gamma.q();
    let mut out = gamma.symbols().to_vec();
    match strategy {
        FlipStrategy::RandomPositions => {
            for i in index::sample(rng, n, budget) {
                out[i] = other_symbol(out[i], q, rng);
            }
        }
        FlipStrategy::Prefix => {
            for s in &mut out[..budget] {
                *s = ((u64::from(*s) + 1) % q) as Symbol;
            }
        }
        FlipStrategy::Adversarial(callback) => {
            let mut rng = rng;
            let edits = callback(gamma, budget, &mut rng);
            if edits.len() != budget {
                return Err(Error::param(format!("adversary made {} edits, budget is {budget}", edits.len())));
            }
            let mut touched = vec![false; n];
            for (i, v) in edits {
                if i >= n || touched[i] {
                    return Err(Error::param(format!("adversary edit at invalid or repeated position {i}")));
                }
                if !gamma.alphabet().contains(v) || v == gamma.symbols()[i] {
                    return Err(Error::param(format!("adversary edit at {i} must change the symbol within Σ")));
                }
                touched[i] = true;
                out[i] = v;
            }
        }
    }
    Ok(Codeword::from_vec_unchecked(out, gamma.alphabet()))
}

/// The channel mapping every input to `target`.
pub fn constant_channel(target: Codeword) -> TamperChannel {
    TamperChannel::Constant { target }
}

/// `hamming_distance / n`.
pub fn realized_change_fraction(original: &Codeword, tampered: &Codeword) -> Result<f64> {
    if original.is_empty() {
        return Err(Error::Dimension("empty codeword".into()));
    }
    Ok(hamming_distance(original, tampered)? as f64 / original.len() as f64)
}
