//! Detection against worst-case and independent tampering across change
//! fractions, written as CSV to stdout.
use tamperlock::experiments::{run, RunConfig};

fn main() -> tamperlock::Result<()> {
    let flags = vec![
        ("alphas".to_string(), "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9".to_string()),
        ("trials".to_string(), "500".to_string()),
    ];
    let config = RunConfig::resolve("sweep", &[], &flags)?;
    eprintln!("{}", config.canonical());
    let outcome = run(&config, std::io::stdout().lock())?;
    eprintln!("{}", outcome.summary);
    Ok(())
}
