//! Key generation, encoding and the three decoder labels of the Hamming-ball code.
use tamperlock::channels::{independent_resample, worst_case_flip, FlipStrategy};
use tamperlock::hamming::{impossibility_bound, soundness_bound, HammingCode};
use tamperlock::rng::rng_from_seed;
use tamperlock::types::{hamming_distance, uniform_codeword};
use tamperlock::{Delta, SecurityParams};

fn main() -> tamperlock::Result<()> {
    let params = SecurityParams::new(128, 64, 4096, Delta::from_fraction(1, 2)?)?;
    let code = HammingCode::new(params);
    let mut rng = rng_from_seed(7);
    let key = code.kgen(&mut rng);
    let gamma = code.enc(&key);
    println!("n=64 q=4096 delta=0.5  threshold t = {:.4}", code.threshold());

    println!("honest word        -> {}", code.dec(&key, &gamma)?);
    for budget in [1, 10, 31, 32, 50] {
        let w = worst_case_flip(&gamma, budget, &FlipStrategy::RandomPositions, &mut rng)?;
        println!("flip {budget:>2} positions   -> {}", code.dec(&key, &w)?);
    }
    let noisy = independent_resample(&gamma, 0.3, &mut rng)?;
    println!(
        "resample at 0.3    -> {} (distance {})",
        code.dec(&key, &noisy)?,
        hamming_distance(&gamma, &noisy)?
    );
    let stranger = uniform_codeword(64, params.alphabet, &mut rng)?;
    println!("uniform word       -> {}", code.dec(&key, &stranger)?);

    println!("soundness bound      {:.3e}", soundness_bound(64, 4096, 0.5));
    println!("impossibility bound  {:.3e}", impossibility_bound(64, 4096, 0.5));
    Ok(())
}
