use std::path::PathBuf;

use anyhow::Context;
use billmap::ingest::{write_corpus, Schema};
use billmap_oracles::{generate_corpus, SyntheticSpec};
use clap::Parser;

/// Write a synthetic bill corpus as CSV.
#[derive(Parser)]
struct Args {
    #[arg(long, default_value_t = 300)]
    n_pre: usize,
    #[arg(long, default_value_t = 150)]
    n_covid: usize,
    #[arg(long, default_value_t = 4)]
    blobs: usize,
    #[arg(long, default_value_t = 0.9)]
    separation: f64,
    #[arg(long, default_value_t = 1.0)]
    time_signal: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> anyhow::Result<()> {
    let a = Args::parse();
    let corpus = generate_corpus(&SyntheticSpec {
        n_pre: a.n_pre,
        n_covid: a.n_covid,
        blobs: a.blobs,
        separation: a.separation,
        time_signal: a.time_signal,
        seed: a.seed,
        ..SyntheticSpec::default()
    });
    let file = std::fs::File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_corpus(&corpus, file, &Schema::default())?;
    Ok(())
}
