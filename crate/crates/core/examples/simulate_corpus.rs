//! Generates the desk-scale simulated corpus, writes it to disk, and prints the
//! split shapes and class balance.
//!
//! `cargo run --release --example simulate_corpus [out_dir] [seed]`

use std::path::PathBuf;

use stdim::simgen::{read_corpus, write_corpus, SimCorpus, SimCorpusConfig};

fn main() -> stdim::Result<()> {
    let arg = |i: usize| std::env::args().nth(i);
    let out = PathBuf::from(arg(1).unwrap_or_else(|| "target/sim_corpus".into()));
    let seed: u64 = arg(2).and_then(|a| a.parse().ok()).unwrap_or(0);
    let cfg = SimCorpusConfig {
        master_seed: seed,
        ..SimCorpusConfig::desk()
    };
    let corpus = SimCorpus::generate(&cfg)?;
    let manifest = write_corpus(&out, &corpus)?;
    for s in &manifest.splits {
        println!("{:<20} shape {:?}  var {:>4}  svar {:>4}", s.name, s.shape, s.n_var, s.n_svar);
    }
    let back = read_corpus(&out)?;
    println!("reloaded identical: {}", back == corpus);
    Ok(())
}
