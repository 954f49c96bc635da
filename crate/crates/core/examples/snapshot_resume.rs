//! Dump detector state halfway through the walkthrough, restore it, and show
//! that the resumed run ends where an uninterrupted run does.
//!
//! cargo run --example snapshot_resume

use kdewatch::detector::trace::{golden_events, reference_config, USER};
use kdewatch::detector::Engine;
use kdewatch::stream::{dump_state, restore_state};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let events = golden_events();

    let mut straight = Engine::new(reference_config())?;
    for e in events.iter().cloned() {
        straight.process(e)?;
    }

    let mut first = Engine::new(reference_config())?;
    for e in events[..7].iter().cloned() {
        first.process(e)?;
    }
    let snapshot = dump_state(&first);
    println!("snapshot after 7 events: {} bytes", snapshot.len());

    let mut resumed = restore_state(&snapshot)?;
    for e in events[7..].iter().cloned() {
        resumed.process(e)?;
    }
    let same = resumed.entity(USER) == straight.entity(USER);
    println!("resumed state equals uninterrupted state: {same}");

    match restore_state(&snapshot[..snapshot.len() / 3]) {
        Ok(_) => println!("truncated snapshot unexpectedly restored"),
        Err(e) => println!("truncated snapshot: {e}"),
    }
    Ok(())
}
