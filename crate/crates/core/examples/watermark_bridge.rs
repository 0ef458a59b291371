//! A watermark turned into a messageless code and back.
use tamperlock::hamming::HammingCode;
use tamperlock::ldpc_prc::PrcParams;
use tamperlock::rng::rng_from_seed;
use tamperlock::watermark::{soundness_robustness_witness, toy_prc_code, watermark_from_code, WatermarkScheme};
use tamperlock::{MessagelessCode, SecurityParams};

fn main() -> tamperlock::Result<()> {
    let code = toy_prc_code(PrcParams::with_length(256), 128)?;
    let mut rng = rng_from_seed(5);
    let key = code.keygen(&mut rng)?;
    let w = code.encode(&key, &mut rng)?;
    println!("watermarked output decodes as {}", code.decode(&key, &w)?);

    let report = soundness_robustness_witness(&code, 2000, 9)?;
    println!(
        "soundness error {:.4} + resample miss {:.4} = {:.4}",
        report.soundness_error.rate(),
        report.resample_miss,
        report.sum()
    );

    // The other direction: a Hamming code as a watermark on uniform strings.
    let hamming = HammingCode::new(SecurityParams::new(128, 32, 1024, "0.5".parse()?)?);
    let (scheme, model) = watermark_from_code(hamming);
    let (wkey, marked) = scheme.watermark(128, &model, &mut rng)?;
    use tamperlock::watermark::GenerativeModel;
    let out = marked.generate(&[], &mut rng)?;
    let plain = model.generate(&[], &mut rng)?;
    println!(
        "marked output detected: {}  plain output detected: {}",
        scheme.detect(&wkey, &[], &out)?,
        scheme.detect(&wkey, &[], &plain)?
    );
    Ok(())
}
