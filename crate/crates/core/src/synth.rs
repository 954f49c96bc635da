//! Seeded synthetic audit corpora for load and robustness runs.
//!
//! Every user gets a habitual time of day and spread; most events fall near
//! that habit and a small fraction land at uniformly random minutes. Weeks are
//! emitted in chronological order, events inside a week in random order.

use std::io::{self, Write};

use chrono::{Duration, TimeDelta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::calendar::{Period, Timestamp, MINUTES_PER_DAY};
use crate::event::AuditEvent;

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub events: usize,
    pub users: usize,
    pub weeks: u32,
    pub first_week: Period,
    pub seed: u64,
    /// Probability that an event ignores the user's habit.
    pub off_hours_rate: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            events: 1_000_000,
            users: 100,
            weeks: 12,
            first_week: Period::new(2022, 1).expect("valid week"),
            seed: 7,
            off_hours_rate: 0.002,
        }
    }
}

#[derive(Debug, Clone)]
struct Habit {
    center: f64,
    spread: Normal<f64>,
}

/// Iterator over the events of a [`CorpusSpec`].
pub struct Corpus {
    spec: CorpusSpec,
    rng: ChaCha8Rng,
    habits: Vec<Habit>,
    emitted: usize,
}

impl Corpus {
    pub fn new(spec: CorpusSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let habits = (0..spec.users.max(1))
            .map(|_| {
                let center = rng.random_range(7.0 * 60.0..18.0 * 60.0);
                let sd = rng.random_range(20.0..90.0);
                Habit {
                    center,
                    spread: Normal::new(0.0, sd).expect("positive spread"),
                }
            })
            .collect();
        Corpus {
            spec,
            rng,
            habits,
            emitted: 0,
        }
    }

    pub fn spec(&self) -> &CorpusSpec {
        &self.spec
    }

    pub fn user_name(index: usize) -> String {
        format!("user-{index:04}")
    }

    fn week_of(&self, index: usize) -> u32 {
        let weeks = self.spec.weeks.max(1) as usize;
        ((index * weeks) / self.spec.events.max(1)) as u32
    }
}

impl Iterator for Corpus {
    type Item = AuditEvent;

    fn next(&mut self) -> Option<AuditEvent> {
        if self.emitted >= self.spec.events {
            return None;
        }
        let index = self.emitted;
        self.emitted += 1;

        let user = self.rng.random_range(0..self.habits.len());
        let minute = if self.rng.random_bool(self.spec.off_hours_rate) {
            self.rng.random_range(0..MINUTES_PER_DAY) as i64
        } else {
            let habit = &self.habits[user];
            let m = habit.center + habit.spread.sample(&mut self.rng);
            (m.round() as i64).clamp(0, MINUTES_PER_DAY as i64 - 1)
        };
        let day = self.rng.random_range(0..7i64);
        let second = self.rng.random_range(0..60i64);
        let monday =
            self.spec.first_week.monday() + Duration::weeks(i64::from(self.week_of(index)));
        let time = monday
            .and_hms_opt(0, 0, 0)
            .expect("midnight exists")
            .and_utc()
            + TimeDelta::days(day)
            + TimeDelta::minutes(minute)
            + TimeDelta::seconds(second);
        Some(AuditEvent::new(
            format!("evt-{index:08}"),
            Timestamp::from_datetime(time),
            Self::user_name(user),
        ))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.spec.events - self.emitted;
        (left, Some(left))
    }
}

/// One input line for `event`, in the audit record shape.
pub fn event_line(event: &AuditEvent) -> String {
    serde_json::json!({
        "ID": event.id,
        "CreationTime": event.creation.to_string(),
        "UserId": event.user_id,
        "Operation": "FileAccessed",
    })
    .to_string()
}

/// A malformed line of one of several kinds, chosen by `variant`.
pub fn malformed_line(event: &AuditEvent, variant: usize) -> String {
    match variant % 5 {
        0 => format!("{{\"ID\":\"{}\",\"CreationTime\":", event.id),
        1 => format!(
            "{{\"ID\":\"{}\",\"UserId\":\"{}\"}}",
            event.id, event.user_id
        ),
        2 => format!(
            "{{\"ID\":\"{}\",\"CreationTime\":\"{}\",\"UserId\":\"{}\"}}",
            event.id,
            event.creation.as_datetime().format("%Y-%m-%d %H:%M"),
            event.user_id
        ),
        3 => format!(
            "{{\"ID\":\"{}\",\"CreationTime\":\"{}\",\"UserId\":\"\"}}",
            event.id, event.creation
        ),
        _ => "[1,2,3]".to_owned(),
    }
}

/// Writes `events` as line-delimited JSON. With `malformed_every = Some(n)`,
/// every n-th line is replaced by a malformed one. Returns the number of
/// malformed lines written.
pub fn write_jsonl<W: Write>(
    events: impl IntoIterator<Item = AuditEvent>,
    out: &mut W,
    malformed_every: Option<usize>,
) -> io::Result<usize> {
    let mut malformed = 0;
    for (i, event) in events.into_iter().enumerate() {
        let line = match malformed_every {
            Some(n) if n > 0 && (i + 1) % n == 0 => {
                malformed += 1;
                malformed_line(&event, malformed - 1)
            }
            _ => event_line(&event),
        };
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(malformed)
}
