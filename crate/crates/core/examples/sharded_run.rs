//! Compare single-shard and multi-shard runs over the same synthetic corpus.
//!
//! cargo run --release --example sharded_run -- [events] [workers]

use kdewatch::detector::AlertRecord;
use kdewatch::detector::DetectorConfig;
use kdewatch::stream::{Monitor, RunOptions};
use kdewatch::synth::{event_line, Corpus, CorpusSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let events: usize = args
        .next()
        .map(|a| a.parse())
        .transpose()?
        .unwrap_or(200_000);
    let workers: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(4);

    let spec = CorpusSpec {
        events,
        ..CorpusSpec::default()
    };
    let input: String = Corpus::new(spec).map(|e| event_line(&e) + "\n").collect();

    let mut by_user = Vec::new();
    for w in [1, workers] {
        let mut monitor = Monitor::new(DetectorConfig::default(), w)?;
        let mut alerts: Vec<AlertRecord> = Vec::new();
        let stats = monitor.run(input.as_bytes(), &mut alerts, RunOptions::default())?;
        println!("workers={w}: {stats}");
        alerts.sort_by(|a, b| a.user_id.cmp(&b.user_id));
        by_user.push(alerts);
    }
    println!(
        "per-user alert streams identical: {}",
        by_user[0] == by_user[1]
    );
    Ok(())
}
