//! Messageless codes with tamper detection, their PRF-masked variants, and
//! simulations of the conflict between soundness and tamper detection.

pub mod channels;
pub mod code;
pub mod error;
pub mod eval;
pub mod experiments;
pub mod gf2;
pub mod hamming;
pub mod latent_attack;
pub mod ldpc_prc;
pub mod multimsg;
pub mod prf_mask;
pub mod rng;
pub mod stats;
pub mod types;
pub mod watermark;

pub use code::MessagelessCode;
pub use error::{Error, Result};
pub use types::{Alphabet, Codeword, DecodeOutcome, Delta, SecurityParams, Symbol};
