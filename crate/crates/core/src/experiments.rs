//! Experiment runners behind the command-line front end.
//!
//! Each subcommand has a table of default settings. A run's effective
//! settings are the defaults, overridden by a `key=value` config file,
//! overridden by flags. Every CSV row carries the seed and a hash of the
//! effective settings, and floats are printed with fixed decimals, so a rerun
//! with the same settings writes the same bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::channels::{FlipStrategy, TamperChannel};
use crate::code::MessagelessCode;
use crate::error::{Error, Result};
use crate::eval::{exact_labels, soundness_labels, tamper_run, trial_labels, uniform_labels, LabelCounts, EXACT_STATE_LIMIT};
use crate::hamming::{soundness_bound, HammingCode, HammingCodeKey};
use crate::latent_attack::{find_scenario, report_record, run_scenario, threshold_scan, AttackReport, SCAN_CSV_HEADER};
use crate::ldpc_prc::{gen_parity, PrcKey, PrcParams};
use crate::prf_mask::{unmask, wrap_code, Counter, CounterStore, MemoryCounter};
use crate::rng::{derive_seed, rng_from_seed};
use crate::stats::Proportion;
use crate::types::{uniform_codeword, Alphabet, DecodeOutcome, Delta, SecurityParams};

pub const SUBCOMMANDS: [&str; 7] = [
    "verify-impossibility",
    "sweep",
    "soundness",
    "bp-curve",
    "attack",
    "keygen",
    "mask-demo",
];

const LDPC_KEYS: [(&str, &str); 6] = [
    ("n", "512"),
    ("rows", "auto"),
    ("row-weight", "6"),
    ("max-iters", "100"),
    ("threshold", "4.0"),
    ("bp-prior", "0.15"),
];

/// Default settings of a subcommand. Only these keys (and `out`) are accepted.
pub fn defaults(subcommand: &str) -> Result<Vec<(&'static str, &'static str)>> {
    let common_code = [("n", "64"), ("q", "4096"), ("delta", "0.5"), ("lambda", "128"), ("seed", "0")];
    let mut d: Vec<(&str, &str)> = match subcommand {
        "verify-impossibility" => vec![
            ("n", "8"),
            ("q", "2"),
            ("delta", "0.5"),
            ("lambda", "128"),
            ("seed", "0"),
            ("code", "hamming"),
            ("exact", "true"),
            ("trials", "100000"),
        ],
        "sweep" => {
            let mut v = common_code.to_vec();
            v.extend([
                ("alphas", "0.05,0.10,0.15,0.20,0.25,0.30,0.35,0.40,0.45,0.50,0.55,0.60,0.65,0.70,0.75,0.80,0.85,0.90,0.95"),
                ("trials", "1000"),
            ]);
            v
        }
        "soundness" => {
            let mut v = common_code.to_vec();
            v.extend([("code", "hamming"), ("trials", "10000")]);
            v
        }
        "bp-curve" => {
            let mut v = LDPC_KEYS.to_vec();
            v.extend([
                ("q", "2"),
                ("seed", "0"),
                ("trials", "200"),
                ("grid", "0.00,0.05,0.10,0.15,0.20,0.25,0.30,0.35,0.40,0.45,0.4807,0.50"),
            ]);
            v
        }
        "attack" => {
            let mut v = LDPC_KEYS.to_vec();
            v.extend([("q", "2"), ("seed", "0"), ("trials", "200"), ("scenario", "inversion_only")]);
            v
        }
        "keygen" => {
            let mut v = common_code.to_vec();
            v.extend([("code", "hamming"), ("rows", "auto"), ("row-weight", "6")]);
            v
        }
        "mask-demo" => vec![
            ("n", "16"),
            ("q", "256"),
            ("delta", "0.5"),
            ("lambda", "128"),
            ("seed", "0"),
            ("count", "3"),
            ("counter", ""),
        ],
        other => {
            return Err(Error::param(format!(
                "unknown subcommand {other:?}; expected one of {}",
                SUBCOMMANDS.join(", ")
            )))
        }
    };
    d.sort_by_key(|(k, _)| *k);
    Ok(d)
}

/// Parses `key=value` lines; blank lines and lines starting with `#` are skipped.
pub fn parse_config_file(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| Error::parse(format!("config line {}: expected key=value, got {l:?}", i + 1)))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

/// The effective settings of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    subcommand: String,
    values: BTreeMap<String, String>,
    out: Option<String>,
}

impl RunConfig {
    /// Defaults, then `file` entries, then `flags`; later sources win.
    pub fn resolve(subcommand: &str, file: &[(String, String)], flags: &[(String, String)]) -> Result<Self> {
        let mut values: BTreeMap<String, String> =
            defaults(subcommand)?.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        let mut out = None;
        for (k, v) in file.iter().chain(flags) {
            if k == "out" {
                out = Some(v.clone());
            } else if let Some(slot) = values.get_mut(k) {
                *slot = v.clone();
            } else {
                return Err(Error::param(format!("setting {k:?} does not apply to {subcommand}")));
            }
        }
        Ok(RunConfig {
            subcommand: subcommand.to_string(),
            values,
            out,
        })
    }

    pub fn subcommand(&self) -> &str {
        &self.subcommand
    }

    pub fn out(&self) -> Option<&str> {
        self.out.as_deref()
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map_or("", String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key);
        raw.parse()
            .map_err(|e| Error::parse(format!("setting {key}={raw:?}: {e}")))
    }

    pub fn get_list(&self, key: &str) -> Result<Vec<f64>> {
        self.raw(key)
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|e| Error::parse(format!("setting {key}: value {s:?}: {e}")))
            })
            .collect()
    }

    /// `key=value` lines in key order, preceded by the subcommand.
    pub fn canonical(&self) -> String {
        let mut s = format!("subcommand={}\n", self.subcommand);
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    /// First 16 hex digits of SHA-256 over [`canonical`](Self::canonical).
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn seed(&self) -> Result<u64> {
        self.get("seed")
    }

    fn trials(&self) -> Result<u64> {
        let t: u64 = self.get("trials")?;
        if t == 0 {
            return Err(Error::param("trials must be at least 1"));
        }
        Ok(t)
    }

    fn security_params(&self) -> Result<SecurityParams> {
        SecurityParams::new(self.get("lambda")?, self.get("n")?, self.get("q")?, self.get::<Delta>("delta")?)
    }

    fn prc_params(&self) -> Result<PrcParams> {
        if self.get::<u64>("q")? != 2 {
            return Err(Error::param("LDPC commands work over q=2 only"));
        }
        let n: usize = self.get("n")?;
        let mut p = PrcParams::with_length(n);
        if self.raw("rows") != "auto" {
            p.r = self.get("rows")?;
        }
        p.row_weight = self.get("row-weight")?;
        p.max_iters = self.get("max-iters")?;
        p.detect_threshold = self.get("threshold")?;
        p.bp_prior = self.get("bp-prior")?;
        Ok(p)
    }
}

/// Result of a subcommand: whether its built-in assertion held, and a short
/// human-readable summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub ok: bool,
    pub summary: String,
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn csv_writer<W: Write>(out: W, header: &str) -> Result<csv::Writer<W>> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header.split(','))?;
    Ok(w)
}

/// Runs a resolved configuration, writing its CSV (or key file) to `out`.
pub fn run<W: Write>(config: &RunConfig, out: W) -> Result<Outcome> {
    match config.subcommand() {
        "verify-impossibility" => cmd_verify_impossibility(config, out),
        "sweep" => cmd_sweep_threshold(config, out),
        "soundness" => cmd_soundness_mc(config, out),
        "bp-curve" => cmd_bp_curve(config, out),
        "attack" => cmd_attack(config, out),
        "keygen" => cmd_keygen(config, out),
        "mask-demo" => cmd_mask_demo(config, out),
        other => Err(Error::param(format!("unknown subcommand {other:?}"))),
    }
}

/// Label masses of uniform inputs under one fixed key.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConflictReport {
    pub counts: LabelCounts,
    pub exact: bool,
    pub p_invalid_uniform: f64,
    pub p_tampered_uniform: f64,
    /// `p_invalid + p_tampered - 1`; never positive.
    pub conflict_margin: f64,
    /// Rate at which uniform inputs are rejected as invalid.
    pub soundness_claim_rate: f64,
    /// Rate at which full-resample outputs, which are uniform, are flagged
    /// as tampered.
    pub tamper_claim_rate: f64,
}

impl ConflictReport {
    pub fn from_counts(counts: LabelCounts, exact: bool) -> Self {
        let total = counts.total() as f64;
        let p_invalid = counts.invalid as f64 / total;
        let p_tampered = counts.tampered as f64 / total;
        ConflictReport {
            counts,
            exact,
            p_invalid_uniform: p_invalid,
            p_tampered_uniform: p_tampered,
            conflict_margin: p_invalid + p_tampered - 1.0,
            soundness_claim_rate: p_invalid,
            tamper_claim_rate: p_tampered,
        }
    }

    /// Soundness error on uniform inputs.
    pub fn soundness_error(&self) -> f64 {
        1.0 - self.p_invalid_uniform
    }

    /// Full-resample tamper-detection error.
    pub fn tamper_miss(&self) -> f64 {
        1.0 - self.p_tampered_uniform
    }

    /// The partition identity, checked on integer counts.
    pub fn partition_holds(&self) -> bool {
        self.counts.invalid + self.counts.tampered <= self.counts.total()
    }

    /// At least one of the two errors is one half or more.
    pub fn conflict_holds(&self) -> bool {
        self.partition_holds() && 2 * (self.counts.total() - self.counts.invalid.min(self.counts.tampered)) >= self.counts.total()
    }
}

/// Labels every word of `Σ^n` (or `trials` uniform samples) under `decode`.
pub fn conflict_report<D>(
    n: usize,
    alphabet: Alphabet,
    exact: bool,
    trials: u64,
    seed: u64,
    decode: D,
) -> Result<ConflictReport>
where
    D: Fn(&crate::types::Codeword) -> Result<DecodeOutcome> + Sync,
{
    let counts = if exact {
        exact_labels(n, alphabet, EXACT_STATE_LIMIT, decode)?
    } else {
        uniform_labels(n, alphabet, trials, seed, decode)?
    };
    Ok(ConflictReport::from_counts(counts, exact))
}

pub const VERIFY_CSV_HEADER: &str =
    "code,n,q,delta,mode,inputs,valid,invalid,tampered,p_invalid,p_tampered,conflict_margin,soundness_error,tamper_miss,seed,config_hash";

pub fn cmd_verify_impossibility<W: Write>(config: &RunConfig, out: W) -> Result<Outcome> {
    let params = config.security_params()?;
    let seed = config.seed()?;
    let exact: bool = config.get("exact")?;
    let trials = config.trials()?;
    let which = config.raw("code").to_string();
    let hamming = HammingCode::new(params);
    let alphabet = params.alphabet;
    let report = match which.as_str() {
        "hamming" => {
            let key = hamming.kgen(&mut rng_from_seed(derive_seed(seed, 0)));
            conflict_report(params.n, alphabet, exact, trials, seed, |w| hamming.dec(&key, w))?
        }
        "prf-hamming" => {
            let code = wrap_code(hamming, params.lambda, MemoryCounter::default())?;
            let key = code.keygen(&mut rng_from_seed(derive_seed(seed, 0)))?;
            conflict_report(params.n, alphabet, exact, trials, seed, |w| code.decode_at(&key, w, 0))?
        }
        other => return Err(Error::param(format!("unknown code {other:?}; expected hamming or prf-hamming"))),
    };
    let mut w = csv_writer(out, VERIFY_CSV_HEADER)?;
    let c = report.counts;
    w.write_record([
        which.clone(),
        params.n.to_string(),
        params.q().to_string(),
        params.delta.to_string(),
        (if exact { "exact" } else { "sampled" }).to_string(),
        c.total().to_string(),
        c.valid.to_string(),
        c.invalid.to_string(),
        c.tampered.to_string(),
        f6(report.p_invalid_uniform),
        f6(report.p_tampered_uniform),
        f6(report.conflict_margin),
        f6(report.soundness_error()),
        f6(report.tamper_miss()),
        seed.to_string(),
        config.hash(),
    ])?;
    w.flush()?;
    let ok = report.partition_holds() && report.conflict_holds();
    Ok(Outcome {
        ok,
        summary: format!(
            "p_invalid={:.6} p_tampered={:.6} max(soundness_error, tamper_miss)={:.6} {}",
            report.p_invalid_uniform,
            report.p_tampered_uniform,
            report.soundness_error().max(report.tamper_miss()),
            if ok { "conflict holds" } else { "CONFLICT VIOLATED" }
        ),
    })
}

pub const SWEEP_CSV_HEADER: &str = "n,q,delta,alpha,budget,threshold,worst_changed,worst_detect,worst_lo,worst_hi,ind_beta,ind_changed,ind_detect,ind_lo,ind_hi,soundness,sound_lo,sound_hi,trials,seed,config_hash";

/// One row of a threshold sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub budget: usize,
    pub worst: Proportion,
    pub ind_beta: f64,
    pub ind: Proportion,
    pub soundness: Proportion,
}

/// Tamper detection under `worst_case_flip(floor(alpha n))` and under the
/// independent channel with expected change fraction `alpha`, plus the
/// uniform-input invalid rate, for each `alpha`.
pub fn sweep_threshold(params: SecurityParams, alphas: &[f64], trials: u64, seed: u64) -> Result<Vec<SweepRow>> {
    let code = HammingCode::new(params);
    let keep = 1.0 / params.q() as f64;
    alphas
        .iter()
        .enumerate()
        .map(|(g, &alpha)| {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::param(format!("alpha {alpha} must lie in (0, 1)")));
            }
            let g = g as u64;
            let budget = (alpha * params.n as f64).floor() as usize;
            let worst = tamper_run(
                &code,
                &TamperChannel::WorstCase {
                    budget,
                    strategy: FlipStrategy::RandomPositions,
                },
                trials,
                derive_seed(seed, 3 * g),
            )?;
            let ind_beta = (alpha / (1.0 - keep)).min(1.0);
            let ind = tamper_run(&code, &TamperChannel::independent(ind_beta)?, trials, derive_seed(seed, 3 * g + 1))?;
            let sound = soundness_labels(&code, trials, derive_seed(seed, 3 * g + 2))?;
            Ok(SweepRow {
                alpha,
                budget,
                worst: worst.detected(),
                ind_beta,
                ind: ind.detected(),
                soundness: sound.proportion(DecodeOutcome::Invalid),
            })
        })
        .collect()
}

pub fn cmd_sweep_threshold<W: Write>(config: &RunConfig, out: W) -> Result<Outcome> {
    let params = config.security_params()?;
    let seed = config.seed()?;
    let trials = config.trials()?;
    let rows = sweep_threshold(params, &config.get_list("alphas")?, trials, seed)?;
    let t = HammingCode::new(params).threshold();
    let mut w = csv_writer(out, SWEEP_CSV_HEADER)?;
    for r in &rows {
        let (wl, wh) = r.worst.wilson95();
        let (il, ih) = r.ind.wilson95();
        let (sl, sh) = r.soundness.wilson95();
        w.write_record([
            params.n.to_string(),
            params.q().to_string(),
            params.delta.to_string(),
            format!("{:.4}", r.alpha),
            r.budget.to_string(),
            f6(t),
            r.worst.trials.to_string(),
            f6(r.worst.rate()),
            f6(wl),
            f6(wh),
            f6(r.ind_beta),
            r.ind.trials.to_string(),
            f6(r.ind.rate()),
            f6(il),
            f6(ih),
            f6(r.soundness.rate()),
            f6(sl),
            f6(sh),
            trials.to_string(),
            seed.to_string(),
            config.hash(),
        ])?;
    }
    w.flush()?;
    Ok(Outcome {
        ok: true,
        summary: format!("{} alpha points, threshold t={t:.6}", rows.len()),
    })
}

pub const SOUNDNESS_CSV_HEADER: &str = "code,n,q,delta,trials,escapes,rate,lo,hi,bound,seed,config_hash";

/// Escapes (uniform inputs not labelled invalid), fresh key per trial.
pub fn soundness_escapes(which: &str, params: SecurityParams, trials: u64, seed: u64) -> Result<Proportion> {
    let hamming = HammingCode::new(params);
    let labels = match which {
        "hamming" => soundness_labels(&hamming, trials, seed)?,
        "prf-hamming" => {
            let code = wrap_code(hamming, params.lambda, MemoryCounter::default())?;
            trial_labels(trials, seed, |rng| {
                let key = code.keygen(rng)?;
                let body = uniform_codeword(params.n, params.alphabet, rng)?;
                code.decode_at(&key, &body, rand::RngCore::next_u64(rng)).map(Some)
            })?
        }
        other => return Err(Error::param(format!("unknown code {other:?}; expected hamming or prf-hamming"))),
    };
    Ok(labels.accepted())
}

pub fn cmd_soundness_mc<W: Write>(config: &RunConfig, out: W) -> Result<Outcome> {
    let params = config.security_params()?;
    let seed = config.seed()?;
    let trials: u64 = config.trials()?;
    if trials < 100 {
        return Err(Error::param("soundness needs at least 100 trials"));
    }
    let which = config.raw("code").to_string();
    let escapes = soundness_escapes(&which, params, trials, seed)?;
    let bound = soundness_bound(params.n, params.q(), params.delta.value());
    let (lo, hi) = escapes.wilson95();
    let mut w = csv_writer(out, SOUNDNESS_CSV_HEADER)?;
    w.write_record([
        which,
        params.n.to_string(),
        params.q().to_string(),
        params.delta.to_string(),
        trials.to_string(),
        escapes.successes.to_string(),
        f6(escapes.rate()),
        f6(lo),
        f6(hi),
        format!("{bound:.6e}"),
        seed.to_string(),
        config.hash(),
    ])?;
    w.flush()?;
    Ok(Outcome {
        ok: true,
        summary: format!(
            "escape rate {:.6} [{lo:.6}, {hi:.6}] vs bound {bound:.6e}",
            escapes.rate()
        ),
    })
}

fn ldpc_key(config: &RunConfig) -> Result<PrcKey> {
    PrcKey::from_seed(&config.prc_params()?, derive_seed(config.seed()?, u64::MAX >> 1))
}

fn write_reports<W: Write>(reports: &[AttackReport], config: &RunConfig, out: W) -> Result<()> {
    let mut w = csv_writer(out, &format!("{SCAN_CSV_HEADER},config_hash"))?;
    for r in reports {
        let mut rec = report_record(r);
        rec.push(config.hash());
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_bp_curve<W: Write>(config: &RunConfig, out: W) -> Result<Outcome> {
    let key = ldpc_key(config)?;
    let reports = threshold_scan(&key, &config.get_list("grid")?, config.trials()?, config.seed()?)?;
    write_reports(&reports, config, out)?;
    let curve: Vec<String> = reports
        .iter()
        .map(|r| format!("{:.4}:{:.3}", r.flip_rate, r.detection_rate()))
        .collect();
    Ok(Outcome {
        ok: true,
        summary: format!("detection by flip rate {}", curve.join(" ")),
    })
}

pub fn cmd_attack<W: Write>(config: &RunConfig, out: W) -> Result<Outcome> {
    let scenario = find_scenario(config.raw("scenario"))?;
    let key = ldpc_key(config)?;
    let report = run_scenario(&scenario, &key, config.trials()?, config.seed()?)?;
    write_reports(std::slice::from_ref(&report), config, out)?;
    Ok(Outcome {
        ok: true,
        summary: format!(
            "{}: flip {:.4}, detection {:.4}, pre-BP error {:.4}, post-BP error {:.4}, BP converged {}/{}",
            report.scenario,
            report.flip_rate,
            report.detection_rate(),
            report.mean_pre_bp_error,
            report.mean_post_bp_error,
            report.converged,
            report.trials
        ),
    })
}

/// Writes a Hamming key file, or an LDPC matrix file for `code=ldpc`.
pub fn cmd_keygen<W: Write>(config: &RunConfig, mut out: W) -> Result<Outcome> {
    let seed = config.seed()?;
    match config.raw("code") {
        "hamming" => {
            let params = config.security_params()?;
            let key = HammingCode::new(params).kgen(&mut rng_from_seed(seed));
            out.write_all(key.to_key_file().as_bytes())?;
            Ok(Outcome {
                ok: true,
                summary: format!("Hamming key n={} q={} t={:.6}", params.n, params.q(), key.threshold()),
            })
        }
        "ldpc" => {
            if config.get::<u64>("q")? != 2 {
                return Err(Error::param("LDPC keys work over q=2 only"));
            }
            let n: usize = config.get("n")?;
            let r = if config.raw("rows") == "auto" {
                n.div_ceil(4)
            } else {
                config.get("rows")?
            };
            let h = gen_parity(n, r, config.get("row-weight")?, seed)?;
            out.write_all(h.to_text().as_bytes())?;
            Ok(Outcome {
                ok: true,
                summary: format!("parity matrix n={n} r={r} w={}", h.row_weight()),
            })
        }
        other => Err(Error::param(format!("unknown code {other:?}; expected hamming or ldpc"))),
    }
}

pub const MASK_CSV_HEADER: &str = "index,pi,masked,label,unmasked_is_key,seed,config_hash";

pub fn cmd_mask_demo<W: Write>(config: &RunConfig, out: W) -> Result<Outcome> {
    let counter_path = config.raw("counter").to_string();
    if counter_path.is_empty() {
        mask_demo(config, MemoryCounter::default(), out)
    } else {
        mask_demo(config, CounterStore::open(Path::new(&counter_path))?, out)
    }
}

fn mask_demo<K: Counter, W: Write>(config: &RunConfig, counter: K, out: W) -> Result<Outcome> {
    let params = config.security_params()?;
    let seed = config.seed()?;
    let count: u64 = config.get("count")?;
    let code = wrap_code(HammingCode::new(params), params.lambda, counter)?;
    let mut rng = rng_from_seed(seed);
    let key = code.keygen(&mut rng)?;
    let mut w = csv_writer(out, MASK_CSV_HEADER)?;
    let mut all_ok = true;
    for i in 0..count {
        let masked = code.encode(&key, &mut rng)?;
        let label = code.decode(&key, &masked)?;
        let recovered = unmask(&key.prf, &masked) == *key.inner.secret();
        all_ok &= recovered && label == DecodeOutcome::Valid;
        w.write_record([
            i.to_string(),
            masked.pi.to_string(),
            masked.body.to_text(),
            label.to_string(),
            recovered.to_string(),
            seed.to_string(),
            config.hash(),
        ])?;
    }
    w.flush()?;
    Ok(Outcome {
        ok: all_ok,
        summary: format!("{count} masked encodings, all decode valid: {all_ok}"),
    })
}

/// Loads a key file written by `keygen`.
pub fn load_hamming_key(path: &Path) -> Result<HammingCodeKey> {
    HammingCodeKey::load(path)
}
