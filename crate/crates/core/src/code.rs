use rand::RngCore;

use crate::error::Result;
use crate::types::{Alphabet, DecodeOutcome};

/// A keyed code with no payload: `keygen`, `encode`, and a deterministic
/// three-way `decode`.
///
/// `Word` is the unit handed from encoder to decoder. For most codes it is a
/// [`Codeword`](crate::Codeword); the counter-masked code carries the public
/// counter alongside the body.
pub trait MessagelessCode {
    type Key;
    type Word;

    fn codeword_len(&self) -> usize;

    fn alphabet(&self) -> Alphabet;

    fn keygen(&self, rng: &mut dyn RngCore) -> Result<Self::Key>;

    fn encode(&self, key: &Self::Key, rng: &mut dyn RngCore) -> Result<Self::Word>;

    fn decode(&self, key: &Self::Key, word: &Self::Word) -> Result<DecodeOutcome>;

    /// True when `encode` ignores its randomness.
    fn deterministic_encoder(&self) -> bool {
        false
    }
}
