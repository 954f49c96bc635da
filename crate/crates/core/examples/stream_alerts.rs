//! Stream line-delimited JSON through a monitor and collect alert lines.
//!
//! cargo run --example stream_alerts

use kdewatch::detector::DetectorConfig;
use kdewatch::stream::{JsonLinesSink, Monitor, RunOptions};
use kdewatch::synth::{event_line, Corpus, CorpusSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = CorpusSpec {
        events: 20_000,
        users: 10,
        weeks: 6,
        off_hours_rate: 0.01,
        ..CorpusSpec::default()
    };
    let mut input: String = Corpus::new(spec).map(|e| event_line(&e) + "\n").collect();
    input.push_str("{\"ID\":\"broken\"\n\n");

    let mut monitor = Monitor::new(DetectorConfig::default(), 1)?;
    let mut sink = JsonLinesSink::new(Vec::new());
    let stats = monitor.run(input.as_bytes(), &mut sink, RunOptions::default())?;
    let alerts = String::from_utf8(sink.into_inner()?)?;

    println!("{stats}");
    for line in alerts.lines().take(5) {
        println!("{line}");
    }
    println!("... {} alert lines in total", alerts.lines().count());
    Ok(())
}
