//! Fit a time-of-day profile and classify a few minutes against it.
//!
//! cargo run --example kde_profile

use kdewatch::calendar::MinuteOfDay;
use kdewatch::kde::{fit_profile, select_bandwidth, Boundary, TrainingSample};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sample: TrainingSample = [
        (9, 2),
        (9, 30),
        (10, 15),
        (9, 10),
        (9, 55),
        (10, 5),
        (9, 20),
        (9, 40),
        (10, 0),
        (10, 25),
    ]
    .into_iter()
    .map(|(h, m)| MinuteOfDay::from_hm(h, m))
    .collect::<Result<_, _>>()?;

    let h = select_bandwidth(&sample)?;
    println!("{} samples, Silverman bandwidth {h:.3} min", sample.len());

    for boundary in [Boundary::Linear, Boundary::Circular] {
        let profile = fit_profile(&sample, h, boundary)?;
        println!(
            "{boundary:?}: peak at {}, total mass {:.9}",
            profile.peak(),
            profile.mass()
        );
        for (hh, mm) in [(9, 45), (8, 30), (12, 0), (3, 12)] {
            let minute = MinuteOfDay::from_hm(hh, mm)?;
            println!(
                "  {minute}: density {:.3e} -> {:?}",
                profile.density_at(minute),
                profile.classify(minute, 0.001)
            );
        }
    }
    Ok(())
}
