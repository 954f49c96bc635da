//! Line-delimited JSON ingestion, alert output, run statistics and state
//! snapshots around the detector engine.

mod record;
mod run;
mod sink;
mod snapshot;
mod stats;

pub use record::{parse_record, Malformed};
pub use run::{run_monitor, shard_of, Monitor, RunError, RunOptions, DEFAULT_BATCH_SIZE};
pub use sink::{AlertSink, JsonLinesSink, NullSink};
pub use snapshot::{dump_state, restore_state, Snapshot, SnapshotError, SNAPSHOT_SCHEMA};
pub use stats::{peak_rss_bytes, RunStats};
