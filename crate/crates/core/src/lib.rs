//! Per-user behavioural anomaly detection over audit event streams.
//!
//! Each user's event times of day are grouped by ISO week ([`calendar`]),
//! a sliding window of recent weeks trains a Gaussian kernel density profile
//! over the minutes of the day ([`kde`]), and events landing in low-density
//! regions raise alerts. The per-user logic is expressed as an algebraic state
//! machine composition executed by a small interpreter ([`astd`]), assembled
//! in [`detector`] and driven from line-delimited JSON by [`stream`].

pub mod astd;
pub mod calendar;
pub mod detector;
pub mod event;
pub mod kde;
pub mod stream;
pub mod synth;
