//! A zero-bit pseudorandom code on sparse parity checks, with a sum-product
//! belief-propagation decoder.
//!
//! A codeword is a uniform solution `x` of `H x = 0` over GF(2), XORed with a
//! secret pad. Detection counts the checks satisfied by `bits XOR pad`; on a
//! uniform string each check holds with probability 1/2, so the score
//! `(2 * satisfied - r) / sqrt(r)` is approximately standard normal.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, RngCore};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gf2::{BitRow, NullSpace};
use crate::prf_mask::PrfKey;
use crate::rng::rng_from_seed;
use crate::types::Alphabet;

const MATRIX_HEADER: &str = "TAMPERLOCK-H v1";

/// Sparse parity-check matrix; each row lists the columns of one check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityMatrix {
    n: usize,
    row_weight: usize,
    rows: Vec<Vec<usize>>,
}

/// Samples `r` checks of `row_weight` distinct columns each.
pub fn gen_parity(n: usize, r: usize, row_weight: usize, seed: u64) -> Result<ParityMatrix> {
    if row_weight < 3 || row_weight > n {
        return Err(Error::param(format!("row weight {row_weight} must be in [3, n={n}]")));
    }
    if r == 0 || 2 * r > n {
        return Err(Error::param(format!("need 1 <= r <= n/2, got r={r}, n={n}")));
    }
    let mut rng = rng_from_seed(seed);
    let rows = (0..r)
        .map(|_| {
            let mut cols = index::sample(&mut rng, n, row_weight).into_vec();
            cols.sort_unstable();
            cols
        })
        .collect();
    Ok(ParityMatrix { n, row_weight, rows })
}

impl ParityMatrix {
    pub fn from_rows(n: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let row_weight = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || rows.len() >= n {
            return Err(Error::param(format!("need 1 <= r < n, got r={}, n={n}", rows.len())));
        }
        let mut sorted = Vec::with_capacity(rows.len());
        for mut row in rows {
            row.sort_unstable();
            row.dedup();
            if row.len() != row_weight || row.last().is_some_and(|&c| c >= n) {
                return Err(Error::param(format!("every row needs {row_weight} distinct columns below {n}")));
            }
            sorted.push(row);
        }
        Ok(ParityMatrix {
            n,
            row_weight,
            rows: sorted,
        })
    }

    pub fn block_length(&self) -> usize {
        self.n
    }

    pub fn num_checks(&self) -> usize {
        self.rows.len()
    }

    pub fn row_weight(&self) -> usize {
        self.row_weight
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn column_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for row in &self.rows {
            for &c in row {
                deg[c] += 1;
            }
        }
        deg
    }

    /// Number of checks with even parity on `bits`.
    pub fn satisfied(&self, bits: &[u8]) -> usize {
        self.rows
            .iter()
            .filter(|row| row.iter().fold(0u8, |acc, &c| acc ^ bits[c]) == 0)
            .count()
    }

    fn null_space(&self) -> NullSpace {
        let dense: Vec<BitRow> = self.rows.iter().map(|r| BitRow::from_indices(self.n, r)).collect();
        NullSpace::new(&dense, self.n)
    }

    /// Header line, then one row of space-separated column indices per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("{MATRIX_HEADER} n={} r={} w={}\n", self.n, self.rows.len(), self.row_weight);
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(usize::to_string).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    /// SHA-256 of the text form.
    pub fn digest(&self) -> [u8; 32] {
        Sha256::digest(self.to_text().as_bytes()).into()
    }
}

impl fmt::Display for ParityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for ParityMatrix {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse("empty matrix file"))?;
        let fields = header
            .strip_prefix(MATRIX_HEADER)
            .ok_or_else(|| Error::parse(format!("matrix file must start with {MATRIX_HEADER:?}")))?;
        let (mut n, mut r, mut w) = (None, None, None);
        for field in fields.split_whitespace() {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| Error::parse(format!("bad header field {field:?}")))?;
            let v: usize = v.parse().map_err(|e| Error::parse(format!("{k}: {e}")))?;
            match k {
                "n" => n = Some(v),
                "r" => r = Some(v),
                "w" => w = Some(v),
                _ => return Err(Error::parse(format!("unknown header field {k:?}"))),
            }
        }
        let (Some(n), Some(r), Some(w)) = (n, r, w) else {
            return Err(Error::parse("matrix header needs n, r and w"));
        };
        let rows = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split_whitespace()
                    .map(|c| c.parse().map_err(|e| Error::parse(format!("column {c:?}: {e}"))))
                    .collect::<Result<Vec<usize>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if rows.len() != r {
            return Err(Error::parse(format!("header says r={r}, found {} rows", rows.len())));
        }
        let m = ParityMatrix::from_rows(n, rows)?;
        if m.row_weight != w {
            return Err(Error::parse(format!("header says w={w}, rows have {}", m.row_weight)));
        }
        Ok(m)
    }
}

/// Code and decoder parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrcParams {
    pub n: usize,
    pub r: usize,
    pub row_weight: usize,
    pub max_iters: usize,
    pub detect_threshold: f64,
    /// Flip rate the decoder assumes, independent of the real channel.
    pub bp_prior: f64,
}

impl Default for PrcParams {
    fn default() -> Self {
        PrcParams::with_length(512)
    }
}

impl PrcParams {
    /// Defaults scaled to block length `n`: `r = ceil(n/4)`.
    pub fn with_length(n: usize) -> Self {
        PrcParams {
            n,
            r: n.div_ceil(4),
            row_weight: 6,
            max_iters: 100,
            detect_threshold: 4.0,
            bp_prior: 0.15,
        }
    }
}

#[derive(Clone)]
pub struct PrcKey {
    h: ParityMatrix,
    pad: Vec<u8>,
    detect_threshold: f64,
    bp_prior: f64,
    max_iters: usize,
    null_space: NullSpace,
}

impl fmt::Debug for PrcKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PrcKey")
            .field("n", &self.h.n)
            .field("r", &self.h.rows.len())
            .field("w", &self.h.row_weight)
            .field("detect_threshold", &self.detect_threshold)
            .finish_non_exhaustive()
    }
}

impl PrcKey {
    /// Builds a key from a matrix; the pad is the PRF stream for
    /// `"ldpc-pad" || sha256(matrix)`.
    pub fn new(h: ParityMatrix, prf: &PrfKey, detect_threshold: f64) -> Result<Self> {
        if detect_threshold.is_nan() || detect_threshold <= 0.0 {
            return Err(Error::param(format!("detect threshold {detect_threshold} must be positive")));
        }
        let mut label = b"ldpc-pad".to_vec();
        label.extend_from_slice(&h.digest());
        let pad = prf
            .expand_labeled(&label, h.n, Alphabet::BINARY)
            .into_iter()
            .map(|b| b as u8)
            .collect();
        let null_space = h.null_space();
        Ok(PrcKey {
            h,
            pad,
            detect_threshold,
            bp_prior: PrcParams::default().bp_prior,
            max_iters: PrcParams::default().max_iters,
            null_space,
        })
    }

    /// Fresh matrix and PRF key from `rng`.
    pub fn generate<R: RngCore + ?Sized>(params: &PrcParams, rng: &mut R) -> Result<Self> {
        let h = gen_parity(params.n, params.r, params.row_weight, rng.next_u64())?;
        let prf = PrfKey::generate(128, rng)?;
        PrcKey::new(h, &prf, params.detect_threshold)?
            .with_bp_prior(params.bp_prior)?
            .with_max_iters(params.max_iters)
    }

    pub fn from_seed(params: &PrcParams, seed: u64) -> Result<Self> {
        PrcKey::generate(params, &mut rng_from_seed(seed))
    }

    pub fn with_bp_prior(mut self, p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 0.5) {
            return Err(Error::param(format!("BP prior {p} must lie in (0, 0.5)")));
        }
        self.bp_prior = p;
        Ok(self)
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Result<Self> {
        if max_iters == 0 {
            return Err(Error::param("max_iters must be at least 1"));
        }
        self.max_iters = max_iters;
        Ok(self)
    }

    pub fn matrix(&self) -> &ParityMatrix {
        &self.h
    }

    pub fn n(&self) -> usize {
        self.h.n
    }

    pub fn pad(&self) -> &[u8] {
        &self.pad
    }

    pub fn detect_threshold(&self) -> f64 {
        self.detect_threshold
    }

    pub fn bp_prior(&self) -> f64 {
        self.bp_prior
    }

    pub fn max_iters(&self) -> usize {
        self.max_iters
    }

    pub fn null_space_dim(&self) -> usize {
        self.null_space.dim()
    }

    fn unmask(&self, bits: &[u8]) -> Vec<u8> {
        bits.iter().zip(&self.pad).map(|(b, p)| b ^ p).collect()
    }

    fn check_len(&self, bits: &[u8]) -> Result<()> {
        if bits.len() != self.h.n {
            return Err(Error::Dimension(format!("expected {} bits, got {}", self.h.n, bits.len())));
        }
        Ok(())
    }
}

/// A fresh codeword: a uniform solution of the parity checks, masked by the pad.
pub fn prc_encode<R: RngCore + ?Sized>(key: &PrcKey, rng: &mut R) -> Vec<u8> {
    let x = key.null_space.sample(rng).to_bits();
    key.unmask(&x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub score: f64,
    pub watermarked: bool,
}

pub fn detection_score(satisfied: usize, r: usize) -> f64 {
    (2.0 * satisfied as f64 - r as f64) / (r as f64).sqrt()
}

pub fn prc_detect(key: &PrcKey, bits: &[u8]) -> Result<Detection> {
    key.check_len(bits)?;
    let sat = key.h.satisfied(&key.unmask(bits));
    let score = detection_score(sat, key.h.rows.len());
    Ok(Detection {
        score,
        watermarked: score >= key.detect_threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpResult {
    /// Hard decision, re-masked with the pad.
    pub corrected: Vec<u8>,
    pub converged: bool,
    pub iterations_used: usize,
}

impl BpResult {
    /// Fraction of positions where `corrected` differs from `reference`.
    pub fn post_error_vs(&self, reference: &[u8]) -> f64 {
        bit_error_rate(&self.corrected, reference)
    }
}

pub fn bit_error_rate(a: &[u8], b: &[u8]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).filter(|(x, y)| x != y).count() as f64 / a.len() as f64
}

const LLR_CLAMP: f64 = 30.0;

/// Sum-product decoding in the log-likelihood domain with a flooding
/// schedule. Iteration 0 is the channel hard decision; the decoder stops at
/// the first iteration whose hard decision satisfies every check.
pub fn bp_decode(key: &PrcKey, bits: &[u8], max_iters: usize) -> Result<BpResult> {
    key.check_len(bits)?;
    if max_iters == 0 {
        return Err(Error::param("max_iters must be at least 1"));
    }
    let h = &key.h;
    let y = key.unmask(bits);
    if h.satisfied(&y) == h.rows.len() {
        return Ok(BpResult {
            corrected: bits.to_vec(),
            converged: true,
            iterations_used: 0,
        });
    }

    let p = key.bp_prior;
    let l0 = ((1.0 - p) / p).ln();
    let channel: Vec<f64> = y.iter().map(|&b| if b == 0 { l0 } else { -l0 }).collect();

    // Edge e of check c lives at offsets[c] + k; var_edges[v] lists the edges at v.
    let mut offsets = Vec::with_capacity(h.rows.len() + 1);
    let mut edge_var = Vec::new();
    offsets.push(0);
    for row in &h.rows {
        edge_var.extend_from_slice(row);
        offsets.push(edge_var.len());
    }
    let mut var_edges = vec![Vec::new(); h.n];
    for (e, &v) in edge_var.iter().enumerate() {
        var_edges[v].push(e);
    }

    let mut v2c: Vec<f64> = edge_var.iter().map(|&v| channel[v]).collect();
    let mut c2v = vec![0.0; edge_var.len()];
    let mut hard = y.clone();
    let mut converged = false;
    let mut iterations_used = 0;
    let mut prefix = Vec::new();

    for iter in 1..=max_iters {
        iterations_used = iter;
        for c in 0..h.rows.len() {
            let (lo, hi) = (offsets[c], offsets[c + 1]);
            let t: Vec<f64> = v2c[lo..hi].iter().map(|m| (m / 2.0).tanh()).collect();
            prefix.clear();
            let mut acc = 1.0;
            for &x in &t {
                prefix.push(acc);
                acc *= x;
            }
            let mut suffix = 1.0;
            for k in (0..t.len()).rev() {
                let prod = (prefix[k] * suffix).clamp(-1.0 + 1e-15, 1.0 - 1e-15);
                c2v[lo + k] = (2.0 * prod.atanh()).clamp(-LLR_CLAMP, LLR_CLAMP);
                suffix *= t[k];
            }
        }
        for v in 0..h.n {
            let total = channel[v] + var_edges[v].iter().map(|&e| c2v[e]).sum::<f64>();
            hard[v] = u8::from(total < 0.0);
            for &e in &var_edges[v] {
                v2c[e] = (total - c2v[e]).clamp(-LLR_CLAMP, LLR_CLAMP);
            }
        }
        if h.satisfied(&hard) == h.rows.len() {
            converged = true;
            break;
        }
    }

    Ok(BpResult {
        corrected: key.unmask(&hard),
        converged,
        iterations_used,
    })
}

/// Binary symmetric channel.
pub fn bsc<R: RngCore + ?Sized>(bits: &[u8], flip_rate: f64, rng: &mut R) -> Result<Vec<u8>> {
    if !(0.0..=1.0).contains(&flip_rate) {
        return Err(Error::param(format!("flip rate {flip_rate} must lie in [0, 1]")));
    }
    Ok(bits.iter().map(|&b| b ^ u8::from(rng.gen_bool(flip_rate))).collect())
}
