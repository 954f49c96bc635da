//! ISO week periods, minute-of-day extraction and the sliding period list.
//!
//! cargo run --example week_periods

use kdewatch::calendar::{insert_period, week_distance, Period, Timestamp, DEFAULT_MAX_GAP_WEEKS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for text in [
        "2022-06-22T10:15:00Z",
        "2021-01-03T23:59:59Z",
        "2020-12-31T00:00:00Z",
        "2026-01-01T08:30:00Z",
    ] {
        let ts = Timestamp::parse(text)?;
        println!(
            "{text} -> week {} minute {} ({})",
            ts.period().code(),
            ts.minute().get(),
            ts.minute()
        );
    }

    let a = Period::from_code(202052)?;
    let b = Period::from_code(202101)?;
    println!(
        "distance {} -> {} = {} week(s)",
        a.code(),
        b.code(),
        week_distance(a, b)
    );

    let mut used = Vec::new();
    for code in [202225, 202227, 202226, 202221, 202228, 202227] {
        let period = Period::from_code(code)?;
        let accepted = insert_period(&mut used, period, DEFAULT_MAX_GAP_WEEKS);
        let list: Vec<u32> = used.iter().map(|p| p.code()).collect();
        println!(
            "insert {code}: {} -> {list:?}",
            if accepted { "added" } else { "not added" }
        );
    }
    Ok(())
}
