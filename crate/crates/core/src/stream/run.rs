use std::io::{self, BufRead};
use std::sync::mpsc;
use std::time::Instant;

use crate::detector::{AlertRecord, DetectorBuildError, DetectorConfig, Engine, EngineError};
use crate::event::AuditEvent;

use super::record::parse_record;
use super::sink::AlertSink;
use super::snapshot::{Snapshot, SnapshotError};
use super::stats::{peak_rss_bytes, RunStats};

pub const DEFAULT_BATCH_SIZE: usize = 1024;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("reading input failed: {0}")]
    Io(#[source] io::Error),
    #[error("writing alerts failed: {0}")]
    Sink(#[source] io::Error),
    #[error(transparent)]
    Build(#[from] DetectorBuildError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Events handed to a shard at a time; the alert sink is flushed after each batch.
    pub batch_size: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }
}

/// Stable shard index for a user: FNV-1a over the id bytes.
pub fn shard_of(user: &str, shards: usize) -> usize {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in user.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    (hash % shards.max(1) as u64) as usize
}

/// One or more detector engines, each owning a disjoint set of users.
pub struct Monitor {
    config: DetectorConfig,
    shards: Vec<Engine>,
}

impl Monitor {
    pub fn new(config: DetectorConfig, workers: usize) -> Result<Self, DetectorBuildError> {
        let shards = (0..workers.max(1))
            .map(|_| Engine::new(config.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Monitor { config, shards })
    }

    /// Restores users from a snapshot, using the snapshot's configuration.
    pub fn from_snapshot(snapshot: Snapshot, workers: usize) -> Result<Self, SnapshotError> {
        let config = snapshot.config.clone();
        let shards = snapshot.into_engines(workers, shard_of)?;
        Ok(Monitor { config, shards })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn shards(&self) -> &[Engine] {
        &self.shards
    }

    pub fn workers(&self) -> usize {
        self.shards.len()
    }

    pub fn engine_for(&self, user: &str) -> &Engine {
        &self.shards[shard_of(user, self.shards.len())]
    }

    pub fn user_count(&self) -> usize {
        self.shards.iter().map(Engine::user_count).sum()
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot::capture(&self.config, &self.shards)
    }

    /// Streams `input` through the engines and forwards alerts to `sink`.
    pub fn run<R: BufRead>(
        &mut self,
        input: R,
        sink: &mut dyn AlertSink,
        options: RunOptions,
    ) -> Result<RunStats, RunError> {
        self.run_observed(input, sink, options, 0, |_, _| {})
    }

    /// Like [`Monitor::run`], calling `observe(processed, engine)` after every
    /// `every` processed events. Observation needs a single shard; with more
    /// workers `observe` is never called.
    pub fn run_observed<R: BufRead>(
        &mut self,
        input: R,
        sink: &mut dyn AlertSink,
        options: RunOptions,
        every: u64,
        mut observe: impl FnMut(u64, &Engine),
    ) -> Result<RunStats, RunError> {
        let started = Instant::now();
        let before = self.counters();
        let mut stats = RunStats::default();
        let batch_size = options.batch_size.max(1);

        if self.shards.len() == 1 {
            let engine = &mut self.shards[0];
            let mut since_flush = 0usize;
            let mut processed = 0u64;
            for_each_record(input, &mut stats, |event| {
                let outcome = engine.process(event)?;
                for alert in &outcome.alerts {
                    sink.emit(alert).map_err(RunError::Sink)?;
                }
                processed += 1;
                if every > 0 && processed.is_multiple_of(every) {
                    observe(processed, engine);
                }
                since_flush += 1;
                if since_flush >= batch_size {
                    sink.flush().map_err(RunError::Sink)?;
                    since_flush = 0;
                }
                Ok(())
            })?;
        } else {
            run_sharded(&mut self.shards, input, sink, batch_size, &mut stats)?;
        }
        sink.flush().map_err(RunError::Sink)?;

        let after = self.counters();
        stats.events_processed = after.0 - before.0;
        stats.profiles_computed = after.1 - before.1;
        stats.alerts_emitted = after.2 - before.2;
        stats.users_seen = self.user_count() as u64;
        stats.state_bytes = self
            .shards
            .iter()
            .map(|e| e.state_bytes_estimate() as u64)
            .sum();
        stats.wall_time_secs = started.elapsed().as_secs_f64();
        stats.peak_rss_bytes = peak_rss_bytes();
        Ok(stats)
    }

    fn counters(&self) -> (u64, u64, u64) {
        self.shards.iter().fold((0, 0, 0), |acc, e| {
            (
                acc.0 + e.events_processed(),
                acc.1 + e.profiles_computed(),
                acc.2 + e.alerts_emitted(),
            )
        })
    }
}

/// Runs a fresh monitor over `input` and returns its statistics.
pub fn run_monitor<R: BufRead>(
    input: R,
    config: DetectorConfig,
    sink: &mut dyn AlertSink,
    workers: usize,
) -> Result<(RunStats, Monitor), RunError> {
    let mut monitor = Monitor::new(config, workers)?;
    let stats = monitor.run(input, sink, RunOptions::default())?;
    Ok((stats, monitor))
}

/// Reads lines, counts them in `stats`, and hands each parsed event to `f`.
/// Blank lines are skipped; undecodable or malformed lines are counted.
fn for_each_record<R: BufRead>(
    mut input: R,
    stats: &mut RunStats,
    mut f: impl FnMut(AuditEvent) -> Result<(), RunError>,
) -> Result<(), RunError> {
    let mut buf = Vec::with_capacity(256);
    let mut line_no = 0u64;
    loop {
        buf.clear();
        if input.read_until(b'\n', &mut buf).map_err(RunError::Io)? == 0 {
            return Ok(());
        }
        line_no += 1;
        if buf.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        stats.events_read += 1;
        let parsed = std::str::from_utf8(&buf)
            .map_err(|_| "invalid UTF-8".to_owned())
            .and_then(|line| parse_record(line.trim_end()).map_err(|m| m.reason));
        match parsed {
            Ok(event) => f(event)?,
            Err(reason) => {
                stats.events_malformed += 1;
                tracing::debug!(line = line_no, %reason, "skipping malformed record");
            }
        }
    }
}

fn run_sharded<R: BufRead>(
    shards: &mut [Engine],
    input: R,
    sink: &mut dyn AlertSink,
    batch_size: usize,
    stats: &mut RunStats,
) -> Result<(), RunError> {
    let count = shards.len();
    let (alert_tx, alert_rx) = mpsc::channel::<Vec<AlertRecord>>();

    std::thread::scope(|scope| {
        let mut senders = Vec::with_capacity(count);
        let mut handles = Vec::with_capacity(count);
        for engine in shards.iter_mut() {
            let (tx, rx) = mpsc::sync_channel::<Vec<AuditEvent>>(4);
            let alerts = alert_tx.clone();
            senders.push(tx);
            handles.push(scope.spawn(move || -> Result<(), EngineError> {
                for batch in rx {
                    let mut out = Vec::new();
                    for event in batch {
                        out.extend(engine.process(event)?.alerts);
                    }
                    if !out.is_empty() && alerts.send(out).is_err() {
                        break;
                    }
                }
                Ok(())
            }));
        }
        drop(alert_tx);

        let mut pending: Vec<Vec<AuditEvent>> = (0..count).map(|_| Vec::new()).collect();
        let drain = |sink: &mut dyn AlertSink, rx: &mpsc::Receiver<Vec<AlertRecord>>| {
            for batch in rx.try_iter() {
                for alert in &batch {
                    sink.emit(alert).map_err(RunError::Sink)?;
                }
            }
            Ok::<(), RunError>(())
        };

        let read = for_each_record(input, stats, |event| {
            let shard = shard_of(&event.user_id, count);
            pending[shard].push(event);
            if pending[shard].len() >= batch_size {
                let batch = std::mem::replace(&mut pending[shard], Vec::with_capacity(batch_size));
                // a closed channel means the worker failed; its error surfaces on join
                let _ = senders[shard].send(batch);
                drain(sink, &alert_rx)?;
                sink.flush().map_err(RunError::Sink)?;
            }
            Ok(())
        });
        for (shard, batch) in pending.into_iter().enumerate() {
            if !batch.is_empty() {
                let _ = senders[shard].send(batch);
            }
        }
        drop(senders);

        let mut sink_result = Ok(());
        for batch in alert_rx.iter() {
            for alert in &batch {
                if sink_result.is_ok() {
                    sink_result = sink.emit(alert).map_err(RunError::Sink);
                }
            }
        }
        for handle in handles {
            handle.join().expect("shard worker panicked")?;
        }
        read?;
        sink_result
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::trace::{golden_events, reference_config};

    fn trace_lines() -> String {
        golden_events()
            .iter()
            .map(|e| {
                format!(
                    "{{\"ID\":\"{}\",\"CreationTime\":\"{}\",\"UserId\":\"{}\"}}\n",
                    e.id, e.creation, e.user_id
                )
            })
            .collect()
    }

    #[test]
    fn empty_input_gives_zero_stats() {
        let mut alerts = Vec::new();
        let (stats, _) = run_monitor(&b""[..], DetectorConfig::default(), &mut alerts, 1).unwrap();
        assert_eq!(stats.events_read, 0);
        assert_eq!(stats.events_processed, 0);
        assert_eq!(stats.users_seen, 0);
        assert!(alerts.is_empty());
    }

    #[test]
    fn trace_file_computes_a_profile() {
        let mut alerts: Vec<AlertRecord> = Vec::new();
        let (stats, _) =
            run_monitor(trace_lines().as_bytes(), reference_config(), &mut alerts, 1).unwrap();
        assert_eq!(stats.users_seen, 1);
        assert!(stats.profiles_computed >= 1);
        assert_eq!(stats.events_processed, 14);
        assert_eq!(alerts.len(), 1);
        assert_eq!(alerts[0].event_id, "evt-13");
    }

    #[test]
    fn malformed_and_blank_lines() {
        let text = format!(
            "{}\n\nnot json\n{{\"ID\":\"x\",\"UserId\":\"u\"}}\n\u{0}\n",
            trace_lines().trim_end()
        );
        let mut input = text.into_bytes();
        input.extend_from_slice(b"\xff\xfe\n");
        let mut alerts: Vec<AlertRecord> = Vec::new();
        let (stats, _) = run_monitor(&input[..], reference_config(), &mut alerts, 1).unwrap();
        assert_eq!(stats.events_read, 18);
        assert_eq!(stats.events_malformed, 4);
        assert_eq!(
            stats.events_processed,
            stats.events_read - stats.events_malformed
        );
    }

    #[test]
    fn sharded_run_matches_single_shard_per_user() {
        let mut lines = String::new();
        for user in ["a", "b", "c", "d", "e"] {
            lines.push_str(&trace_lines().replace("user-1", user));
        }
        let mut single: Vec<AlertRecord> = Vec::new();
        let (s1, m1) = run_monitor(lines.as_bytes(), reference_config(), &mut single, 1).unwrap();
        let mut sharded: Vec<AlertRecord> = Vec::new();
        let mut m4 = Monitor::new(reference_config(), 4).unwrap();
        let s4 = m4
            .run(lines.as_bytes(), &mut sharded, RunOptions { batch_size: 3 })
            .unwrap();
        assert_eq!(s1.events_processed, s4.events_processed);
        assert_eq!(s1.alerts_emitted, s4.alerts_emitted);
        assert_eq!(s4.users_seen, 5);
        assert_eq!(m1.snapshot(), m4.snapshot());
        sharded.sort_by(|x, y| x.user_id.cmp(&y.user_id));
        assert_eq!(single, sharded);
    }

    #[test]
    fn shard_assignment_is_stable() {
        assert_eq!(shard_of("user-1", 1), 0);
        let a = shard_of("user-1", 8);
        assert_eq!(a, shard_of("user-1", 8));
        assert!(a < 8);
    }
}
