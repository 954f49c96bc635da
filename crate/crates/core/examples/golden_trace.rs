//! Feed the fourteen-event walkthrough through the detector one event at a
//! time and print the window after each step.
//!
//! cargo run --example golden_trace

use kdewatch::detector::trace::{golden_events, reference_config, TraceRecorder, USER};
use kdewatch::detector::Engine;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut engine = Engine::new(reference_config())?;
    let mut recorder = TraceRecorder::new();
    for (i, event) in golden_events().into_iter().enumerate() {
        let label = format!("{} {}", event.id, event.creation);
        let outcome = engine.process(event)?;
        recorder.record(i + 1, &engine, &outcome);
        let state = engine.entity(USER).expect("user exists");
        let used: Vec<u32> = state.used_periods.iter().map(|p| p.code()).collect();
        let acc: Vec<u32> = state.accumulated_periods.iter().map(|p| p.code()).collect();
        print!("{label}: Used={used:?} Acc={acc:?}");
        if let Some(summary) = outcome.profiles.first() {
            print!(
                " profile({} samples, h={:.2})",
                summary.sample_count, summary.bandwidth
            );
        }
        for alert in &outcome.alerts {
            print!(" ALERT density={:.2e}", alert.density);
        }
        println!();
    }
    for c in &recorder.checkpoints {
        println!(
            "{} {}",
            c.id,
            if c.passed() { "matches" } else { "DIFFERS" }
        );
    }
    for note in &recorder.divergences {
        println!("note: {note}");
    }
    Ok(())
}
