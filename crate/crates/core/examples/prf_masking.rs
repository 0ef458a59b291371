//! PRF masking of a Hamming code, with a durable counter that survives restarts.
use tamperlock::hamming::HammingCode;
use tamperlock::prf_mask::{mask, unmask, wrap_code, CounterStore, PrfKey};
use tamperlock::rng::rng_from_seed;
use tamperlock::{Alphabet, Codeword, MessagelessCode, SecurityParams};

fn main() -> tamperlock::Result<()> {
    // Masking by hand: the pad for counter 3 is added mod q.
    let mut rng = rng_from_seed(1);
    let kappa = PrfKey::generate(128, &mut rng)?;
    let gamma = Codeword::new(vec![0, 1, 2, 3, 4], Alphabet::new(5)?)?;
    let masked = mask(&kappa, 3, &gamma);
    println!("gamma  {gamma}");
    println!("masked {}", masked.to_wire());
    assert_eq!(unmask(&kappa, &masked), gamma);

    let dir = std::env::temp_dir().join(format!("tamperlock-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let counter_path = dir.join("counter");

    let params = SecurityParams::new(128, 16, 256, "0.5".parse()?)?;
    let key = {
        let code = wrap_code(HammingCode::new(params), 128, CounterStore::open(&counter_path)?)?;
        let key = code.keygen(&mut rng)?;
        for _ in 0..3 {
            let w = code.encode(&key, &mut rng)?;
            println!("pi={} label={}", w.pi, code.decode(&key, &w)?);
        }
        key
    };
    // A new process reopens the same counter and continues where it stopped.
    let code = wrap_code(HammingCode::new(params), 128, CounterStore::open(&counter_path)?)?;
    let w = code.encode(&key, &mut rng)?;
    println!("after reopen: pi={} label={}", w.pi, code.decode(&key, &w)?);

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
