//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! gating criterion fails.

use std::collections::HashSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::RngCore;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF};
use tamperlock::channels::{full_resample, FlipStrategy, TamperChannel};
use tamperlock::eval::{enumerate_words, exact_labels, soundness_labels, tamper_run, EXACT_STATE_LIMIT};
use tamperlock::experiments::{soundness_escapes, ConflictReport};
use tamperlock::hamming::{impossibility_bound, soundness_bound, HammingCode};
use tamperlock::latent_attack::threshold_scan;
use tamperlock::ldpc_prc::{PrcKey, PrcParams};
use tamperlock::multimsg::{fix_message, RepetitionCode};
use tamperlock::prf_mask::{mask, unmask, wrap_code, CounterStore, MemoryCounter, PrfKey};
use tamperlock::rng::{rng_from_seed, trial_rng};
use tamperlock::stats::agree_within_sigma;
use tamperlock::types::{hamming_distance, uniform_codeword};
use tamperlock::watermark::{
    code_from_watermark, soundness_robustness_witness, toy_prc_code, watermark_from_code, FixedPrompt, GenerativeModel,
    WatermarkScheme,
};
use tamperlock::{Alphabet, Codeword, DecodeOutcome, MessagelessCode, Result, SecurityParams};

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Check {
    Check {
        pass,
        detail: detail.into(),
    }
}

fn params(n: usize, q: u64, delta: &str) -> SecurityParams {
    SecurityParams::new(128, n, q, delta.parse().unwrap()).unwrap()
}

fn all(checks: &[Check]) -> Check {
    check(
        checks.iter().all(|c| c.pass),
        checks
            .iter()
            .map(|c| format!("{}{}", if c.pass { "" } else { "!" }, c.detail))
            .collect::<Vec<_>>()
            .join("; "),
    )
}

fn conflict(name: &str, counts: tamperlock::eval::LabelCounts) -> Check {
    let r = ConflictReport::from_counts(counts, true);
    let worst = r.soundness_error().max(r.tamper_miss());
    check(
        counts.total() == 256 && r.partition_holds() && worst >= 0.5,
        format!("{name}: {}+{}<=256 max err {worst:.3}", counts.invalid, counts.tampered),
    )
}

fn c1_impossibility_law() -> Result<Check> {
    let mut checks = Vec::new();
    for delta in ["0.1", "0.5", "0.9"] {
        let code = HammingCode::new(params(8, 2, delta));
        let key = code.kgen(&mut rng_from_seed(0));
        let counts = exact_labels(8, Alphabet::BINARY, EXACT_STATE_LIMIT, |w| code.dec(&key, w))?;
        checks.push(conflict(&format!("hamming d={delta}"), counts));
    }

    let masked = wrap_code(HammingCode::new(params(8, 2, "0.5")), 128, MemoryCounter::default())?;
    let key = masked.keygen(&mut rng_from_seed(1))?;
    let counts = exact_labels(8, Alphabet::BINARY, EXACT_STATE_LIMIT, |w| masked.decode_at(&key, w, 5))?;
    checks.push(conflict("prf-hamming", counts));

    let rep = fix_message(
        RepetitionCode {
            message_len: 2,
            reps: 4,
            alphabet: Alphabet::BINARY,
        },
        vec![1, 0],
    )?;
    let key = rep.keygen(&mut rng_from_seed(2))?;
    let counts = exact_labels(8, Alphabet::BINARY, EXACT_STATE_LIMIT, |w| rep.decode(&key, w))?;
    checks.push(conflict("fixed repetition", counts));

    let prc = toy_prc_code(
        PrcParams {
            n: 8,
            r: 2,
            row_weight: 3,
            detect_threshold: 1.0,
            ..PrcParams::default()
        },
        128,
    )?;
    let key = prc.keygen(&mut rng_from_seed(3))?;
    let counts = exact_labels(8, Alphabet::BINARY, EXACT_STATE_LIMIT, |w| prc.decode(&key, w))?;
    checks.push(conflict("toy prc", counts));
    Ok(all(&checks))
}

fn c2_resample_uniformity() -> Result<Check> {
    let trials = 1_000_000u64;
    let alphabet = Alphabet::BINARY;
    let histogram = |input: [u32; 2], seed: u64| -> [u64; 4] {
        let gamma = Codeword::new(input.to_vec(), alphabet).unwrap();
        let mut rng = rng_from_seed(seed);
        let mut h = [0u64; 4];
        for _ in 0..trials {
            let s = full_resample(&gamma, &mut rng).into_symbols();
            h[(s[0] * 2 + s[1]) as usize] += 1;
        }
        h
    };
    let a = histogram([0, 0], 20);
    let b = histogram([1, 1], 21);
    let tv = 0.5 * a.iter().map(|&c| (c as f64 / trials as f64 - 0.25).abs()).sum::<f64>();

    let mut stat = 0.0;
    for k in 0..4 {
        let col = (a[k] + b[k]) as f64;
        let expect = col / 2.0;
        stat += (a[k] as f64 - expect).powi(2) / expect + (b[k] as f64 - expect).powi(2) / expect;
    }
    let p = ChiSquared::new(3.0).unwrap().sf(stat);
    Ok(check(tv < 0.01 && p > 0.001, format!("TV {tv:.5}, two-sample chi2 p {p:.4}")))
}

fn c3_achievability() -> Result<Check> {
    let p = params(64, 4096, "0.5");
    let code = HammingCode::new(p);
    let t = code.threshold().floor() as usize;
    let mut tampered = 0;
    let mut total = 0;
    for budget in 1..=t {
        let ch = TamperChannel::WorstCase {
            budget,
            strategy: FlipStrategy::RandomPositions,
        };
        let stats = tamper_run(&code, &ch, 1000, 30 + budget as u64)?;
        tampered += stats.labels.tampered;
        total += stats.labels.total();
    }
    let labels = soundness_labels(&code, 10_000, 31)?;
    let invalid = labels.proportion(DecodeOutcome::Invalid);
    let exact_escape = Binomial::new(1.0 - 1.0 / 4096.0, 64).unwrap().cdf(t as u64);
    let (lo, hi) = labels.accepted().wilson95();
    Ok(all(&[
        check(
            tampered == total && total == 1000 * t as u64,
            format!("(a) budgets 1..={t}: {tampered}/{total} tampered"),
        ),
        check(
            invalid.rate() >= 0.999 && lo <= exact_escape && exact_escape <= hi,
            format!(
                "(b) invalid {:.4}, escape CI [{lo:.2e}, {hi:.2e}] vs exact {exact_escape:.2e}",
                invalid.rate()
            ),
        ),
    ]))
}

const CHERNOFF_GRID: [(usize, u64, &str); 12] = [
    (100, 2, "0.2"),
    (300, 2, "0.2"),
    (64, 2, "0.5"),
    (200, 3, "0.3"),
    (128, 4, "0.5"),
    (256, 16, "0.5"),
    (64, 64, "0.5"),
    (64, 4096, "0.5"),
    (100, 100, "0.9"),
    (1000, 10, "0.3"),
    (500, 5, "0.2"),
    (1024, 32, "0.6"),
];

fn c4_chernoff() -> Result<Check> {
    let s = soundness_bound(100, 2, 0.2);
    let i = impossibility_bound(300, 2, 0.2);
    let formulas = (s - (-1.0f64).exp()).abs() < 1e-12 && (i - (-2.0f64).exp()).abs() < 1e-12;

    let trials = 10_000u64;
    let mut worst_ratio: f64 = 0.0;
    let mut exceeded = Vec::new();
    for (g, &(n, q, delta)) in CHERNOFF_GRID.iter().enumerate() {
        let p = params(n, q, delta);
        let d = p.delta.value();
        let code = HammingCode::new(p);
        let key = code.kgen(&mut rng_from_seed(40 + g as u64));
        let far = (1.0 + d) * (1.0 - 1.0 / q as f64) * n as f64;
        let mut escapes = 0u64;
        let mut far_hits = 0u64;
        for k in 0..trials {
            let w = uniform_codeword(n, p.alphabet, &mut trial_rng(50 + g as u64, k))?;
            if code.dec(&key, &w)? != DecodeOutcome::Invalid {
                escapes += 1;
            }
            if hamming_distance(&w, key.secret())? as f64 >= far {
                far_hits += 1;
            }
        }
        let low_tail = escapes as f64 / trials as f64;
        let high_tail = far_hits as f64 / trials as f64;
        let sb = soundness_bound(n, q, d);
        let ib = impossibility_bound(n, q, d);
        worst_ratio = worst_ratio.max(low_tail / sb).max(high_tail / ib);
        if low_tail > sb || high_tail > ib {
            exceeded.push(format!("(n={n},q={q},d={delta})"));
        }
    }
    Ok(all(&[
        check(formulas, format!("bounds {s:.6}=e^-1, {i:.6}=e^-2")),
        check(
            exceeded.is_empty(),
            format!("12-point grid: max tail/bound {worst_ratio:.3} {}", exceeded.join(" ")),
        ),
    ]))
}

fn c5_prf_wrap() -> Result<Check> {
    let p = params(16, 3, "0.3");
    let plain = soundness_escapes("hamming", p, 10_000, 60)?;
    let masked = soundness_escapes("prf-hamming", p, 10_000, 61)?;
    let agree = agree_within_sigma(plain, masked, 3.0);

    let mut rng = rng_from_seed(62);
    let mut identity = 0;
    for _ in 0..1000 {
        let q = 2 + rng.next_u64() % 1000;
        let n = 1 + (rng.next_u64() % 64) as usize;
        let kappa = PrfKey::generate(128, &mut rng)?;
        let gamma = uniform_codeword(n, Alphabet::new(q)?, &mut rng)?;
        let pi = rng.next_u64();
        if unmask(&kappa, &mask(&kappa, pi, &gamma)) == gamma {
            identity += 1;
        }
    }

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("counter");
    let tmp = dir.path().join("counter.tmp");
    let mut seen = HashSet::new();
    let mut issued = 0u64;
    let mut duplicates = 0u64;
    for restart in 0..100u64 {
        let mut store = CounterStore::open(&path)?;
        for _ in 0..(rng.next_u64() % 5) {
            issued += 1;
            if !seen.insert(store.counter_next()?) {
                duplicates += 1;
            }
        }
        drop(store);
        // Every third restart dies in the middle of writing the next record.
        if restart % 3 == 0 {
            std::fs::write(&tmp, "TAMPERLOCK-CTR v1 nex")?;
        }
    }
    Ok(all(&[
        check(
            agree,
            format!("invalid rate plain {:.4} masked {:.4}", 1.0 - plain.rate(), 1.0 - masked.rate()),
        ),
        check(identity == 1000, format!("mask/unmask {identity}/1000")),
        check(
            duplicates == 0,
            format!("100 restarts, {issued} values, {duplicates} duplicates"),
        ),
    ]))
}

fn bp_cliff(n: usize) -> Result<Check> {
    let key = PrcKey::from_seed(&PrcParams::with_length(n), 70)?;
    let r = threshold_scan(&key, &[0.10, 0.4807], 200, 71)?;
    let (light, heavy) = (&r[0], &r[1]);
    Ok(all(&[
        check(
            light.detection_rate() >= 0.95,
            format!("n={n} detection at 0.10: {:.3}", light.detection_rate()),
        ),
        check(
            heavy.detection_rate() <= 0.05,
            format!("at 0.4807: {:.3}", heavy.detection_rate()),
        ),
        check(
            (0.45..=0.55).contains(&heavy.mean_post_bp_error)
                && heavy.mean_post_bp_error >= heavy.mean_pre_bp_error - 0.01,
            format!(
                "post-BP {:.4} vs pre-BP {:.4}",
                heavy.mean_post_bp_error, heavy.mean_pre_bp_error
            ),
        ),
    ]))
}

fn c6_bp_cliff() -> Result<Check> {
    bp_cliff(512)
}

fn c6_supplementary() -> Result<Check> {
    bp_cliff(2048)
}

fn c7_reduction() -> Result<Check> {
    let code = toy_prc_code(PrcParams::default(), 128)?;
    let labels = soundness_labels(&code, 10_000, 80)?;
    let invalid = labels.proportion(DecodeOutcome::Invalid).rate();
    let mut rng = rng_from_seed(81);
    let key = code.keygen(&mut rng)?;
    let mut clean_tampered = 0;
    for _ in 0..1000 {
        if code.decode(&key, &code.encode(&key, &mut rng)?)? == DecodeOutcome::Tampered {
            clean_tampered += 1;
        }
    }

    // Scheme -> code -> scheme on a 12-bit instance: detection must agree on
    // every string.
    let small = PrcParams {
        n: 12,
        r: 6,
        row_weight: 3,
        detect_threshold: 2.0,
        ..PrcParams::default()
    };
    let derived = toy_prc_code(small, 128)?;
    let original = *derived.scheme();
    let (scheme, model) = watermark_from_code(derived);
    let (wkey, _) = scheme.watermark(128, &model, &mut rng_from_seed(82))?;
    let mut mismatches = 0;
    let mut detected = 0;
    for w in enumerate_words(12, Alphabet::BINARY, EXACT_STATE_LIMIT)? {
        let a = original.detect(&wkey.kappa, &[], &w)?;
        let b = scheme.detect(&wkey, &[], &w)?;
        mismatches += u32::from(a != b);
        detected += u32::from(a);
    }

    // Code -> scheme -> code: labels collapse to invalid / not invalid.
    let hamming = HammingCode::new(params(12, 2, "0.5"));
    let (scheme, model) = watermark_from_code(hamming);
    let back = code_from_watermark(scheme, model, FixedPrompt::empty(Alphabet::BINARY), 128)?;
    let key = back.keygen(&mut rng_from_seed(83))?;
    let mut collapse_mismatches = 0;
    for w in enumerate_words(12, Alphabet::BINARY, EXACT_STATE_LIMIT)? {
        let inner = hamming.dec(&key.kappa, &w)? != DecodeOutcome::Invalid;
        let outer = back.decode(&key, &w)? == DecodeOutcome::Tampered;
        collapse_mismatches += u32::from(inner != outer);
    }
    let marked = key.model.generate(&[], &mut rng)?;
    let own_detected = back.scheme().detect(&key.kappa, &[], &marked)?;

    Ok(all(&[
        check(invalid >= 0.99, format!("uniform invalid {invalid:.4}")),
        check(clean_tampered == 1000, format!("clean tampered {clean_tampered}/1000")),
        check(
            mismatches == 0 && collapse_mismatches == 0 && own_detected,
            format!("n=12 round trips: {mismatches}+{collapse_mismatches} mismatches over 4096 ({detected} detected)"),
        ),
    ]))
}

fn c8_witness() -> Result<Check> {
    let code = toy_prc_code(PrcParams::default(), 128)?;
    let r = soundness_robustness_witness(&code, 2000, 90)?;
    Ok(check(
        r.sum() >= 0.9,
        format!(
            "soundness error {:.4} + resample miss {:.4} = {:.4}",
            r.soundness_error.rate(),
            r.resample_miss,
            r.sum()
        ),
    ))
}

fn cli_output(args: &[&str], out: &Path) -> Result<Vec<u8>> {
    let status = Command::new(env!("CARGO_BIN_EXE_tamperlock"))
        .args(args)
        .arg("--out")
        .arg(out)
        .stderr(std::process::Stdio::null())
        .status()?;
    if !status.success() {
        return Err(tamperlock::Error::Io(std::io::Error::other(format!(
            "{args:?} exited with {status}"
        ))));
    }
    Ok(std::fs::read(out)?)
}

fn c9_reproducibility() -> Result<Check> {
    let dir = tempfile::tempdir()?;
    let conf = dir.path().join("attack.conf");
    std::fs::write(&conf, "# same settings as the flags\nscenario = jpeg15\ntrials = 50\n")?;
    let conf = conf.to_str().unwrap().to_string();
    let runs: Vec<Vec<&str>> = vec![
        vec!["verify-impossibility"],
        vec!["verify-impossibility", "--code", "prf-hamming", "--q", "256", "--exact", "false", "--trials", "20000"],
        vec!["sweep"],
        vec!["soundness"],
        vec!["soundness", "--code", "prf-hamming", "--n", "16", "--q", "3", "--delta", "0.3"],
        vec!["bp-curve"],
        vec!["attack", "--scenario", "jpeg15", "--trials", "50"],
        vec!["attack", "--config", &conf],
        vec!["keygen"],
        vec!["keygen", "--code", "ldpc", "--n", "512", "--q", "2"],
        vec!["mask-demo"],
    ];
    let mut differing = Vec::new();
    let mut outputs = Vec::new();
    for (i, args) in runs.iter().enumerate() {
        let a = cli_output(args, &dir.path().join(format!("{i}a")))?;
        let b = cli_output(args, &dir.path().join(format!("{i}b")))?;
        if a != b || a.is_empty() {
            differing.push(args.join(" "));
        }
        outputs.push(a);
    }
    // Flags and an equivalent config file give the same bytes.
    let same_source = outputs[6] == outputs[7];
    Ok(all(&[
        check(
            differing.is_empty(),
            format!("{} runs byte-identical {}", runs.len(), differing.join(", ")),
        ),
        check(same_source, "config file == flags"),
    ]))
}

type Criterion = (&'static str, fn() -> Result<Check>, Duration, bool);

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 impossibility law", c1_impossibility_law, Duration::from_secs(1), true),
        ("2 resample uniformity", c2_resample_uniformity, Duration::from_secs(10), true),
        ("3 achievability", c3_achievability, Duration::from_secs(30), true),
        ("4 Chernoff calculators", c4_chernoff, Duration::from_secs(120), true),
        ("5 PRF wrap", c5_prf_wrap, Duration::from_secs(30), true),
        ("6 BP threshold cliff", c6_bp_cliff, Duration::from_secs(180), true),
        ("6s BP cliff at n=2048 (supplementary)", c6_supplementary, Duration::from_secs(180), false),
        ("7 reduction transfer", c7_reduction, Duration::from_secs(60), true),
        ("8 witness", c8_witness, Duration::from_secs(30), true),
        ("9 reproducibility", c9_reproducibility, Duration::from_secs(600), true),
    ];
    let mut failed = 0;
    for (name, run, budget, gating) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(c) => (c.pass && elapsed <= budget, c.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let tag = match (pass, gating) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "INFO-FAIL",
        };
        println!(
            "criterion {name}: {tag} ({:.2}s of {}s) {detail}",
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        if !pass && gating {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
