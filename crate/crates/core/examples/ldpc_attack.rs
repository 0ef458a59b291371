//! LDPC watermark bits under the preset sign-flip attacks.
use tamperlock::latent_attack::{builtin_scenarios, run_scenario};
use tamperlock::ldpc_prc::{prc_detect, prc_encode, PrcKey, PrcParams};
use tamperlock::rng::rng_from_seed;

fn main() -> tamperlock::Result<()> {
    let n = std::env::args().nth(1).map_or(Ok(512), |s| s.parse()).expect("block length");
    let key = PrcKey::from_seed(&PrcParams::with_length(n), 42)?;
    let x = prc_encode(&key, &mut rng_from_seed(1));
    println!(
        "n={n} checks={} clean score {:.2}",
        key.matrix().num_checks(),
        prc_detect(&key, &x)?.score
    );
    println!("{:<15} {:>6} {:>8} {:>8} {:>8} {:>9}", "scenario", "flip", "detect", "pre", "post", "converged");
    for s in builtin_scenarios() {
        let r = run_scenario(&s, &key, 100, 0)?;
        println!(
            "{:<15} {:>6.4} {:>8.3} {:>8.4} {:>8.4} {:>5}/{}",
            r.scenario, r.flip_rate, r.detection_rate(), r.mean_pre_bp_error, r.mean_post_bp_error, r.converged, r.trials
        );
    }
    Ok(())
}
