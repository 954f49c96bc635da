//! Write a seeded synthetic corpus to a file, optionally with malformed lines,
//! for use with `monitor run --input`.
//!
//! cargo run --release --example synth_corpus -- out.jsonl [events] [malformed_every]

use std::fs::File;
use std::io::BufWriter;

use kdewatch::synth::{write_jsonl, Corpus, CorpusSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "corpus.jsonl".to_owned());
    let events: usize = args
        .next()
        .map(|a| a.parse())
        .transpose()?
        .unwrap_or(1_000_000);
    let malformed_every: Option<usize> = args.next().map(|a| a.parse()).transpose()?;

    let spec = CorpusSpec {
        events,
        ..CorpusSpec::default()
    };
    println!(
        "{} events, {} users, {} weeks from {}, seed {}",
        spec.events,
        spec.users,
        spec.weeks,
        spec.first_week.code(),
        spec.seed
    );
    let mut out = BufWriter::new(File::create(&path)?);
    let bad = write_jsonl(Corpus::new(spec), &mut out, malformed_every)?;
    println!("wrote {path} ({bad} malformed lines)");
    Ok(())
}
