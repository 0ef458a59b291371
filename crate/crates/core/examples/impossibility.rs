//! Exhaustive labelling of all binary words of length 8: the invalid and
//! tampered masses of uniform inputs cannot both be large.
use tamperlock::channels::TamperChannel;
use tamperlock::eval::{exact_labels, tamper_run, EXACT_STATE_LIMIT};
use tamperlock::experiments::ConflictReport;
use tamperlock::hamming::HammingCode;
use tamperlock::rng::rng_from_seed;
use tamperlock::{Alphabet, SecurityParams};

fn main() -> tamperlock::Result<()> {
    for delta in ["0.1", "0.5", "0.9"] {
        let code = HammingCode::new(SecurityParams::new(128, 8, 2, delta.parse()?)?);
        let key = code.kgen(&mut rng_from_seed(0));
        let counts = exact_labels(8, Alphabet::BINARY, EXACT_STATE_LIMIT, |w| code.dec(&key, w))?;
        let r = ConflictReport::from_counts(counts, true);
        println!(
            "delta={delta}: valid={} invalid={} tampered={}  soundness error {:.3}  resample miss {:.3}",
            counts.valid,
            counts.invalid,
            counts.tampered,
            r.soundness_error(),
            r.tamper_miss()
        );
    }

    // Against full resampling the tampered rate is just the tampered mass of
    // a uniform word.
    let code = HammingCode::new(SecurityParams::new(128, 8, 2, "0.5".parse()?)?);
    let stats = tamper_run(&code, &TamperChannel::FullResample, 20_000, 3)?;
    println!("full resample, 20000 trials: detected {:.4}", stats.detected().rate());
    Ok(())
}
