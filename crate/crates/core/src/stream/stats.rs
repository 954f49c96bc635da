use std::fmt;

use serde::{Deserialize, Serialize};

/// Counters for one monitoring run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    /// Non-blank input lines.
    pub events_read: u64,
    pub events_malformed: u64,
    pub events_processed: u64,
    /// Users with a detector at the end of the run, including restored ones.
    pub users_seen: u64,
    pub profiles_computed: u64,
    pub alerts_emitted: u64,
    pub wall_time_secs: f64,
    /// Process high-water mark of resident memory, where the OS reports it.
    pub peak_rss_bytes: Option<u64>,
    /// Estimated bytes held in per-user state at the end of the run.
    pub state_bytes: u64,
}

impl RunStats {
    pub fn events_per_second(&self) -> f64 {
        if self.wall_time_secs > 0.0 {
            self.events_processed as f64 / self.wall_time_secs
        } else {
            0.0
        }
    }
}

impl fmt::Display for RunStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "read={} malformed={} processed={} users={} profiles={} alerts={} time={:.3}s ({:.0} ev/s)",
            self.events_read,
            self.events_malformed,
            self.events_processed,
            self.users_seen,
            self.profiles_computed,
            self.alerts_emitted,
            self.wall_time_secs,
            self.events_per_second()
        )?;
        if let Some(rss) = self.peak_rss_bytes {
            write!(f, " peak_rss={:.1}MB", rss as f64 / (1024.0 * 1024.0))?;
        }
        Ok(())
    }
}

/// Peak resident set size of this process (`VmHWM`), Linux only.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find_map(|line| line.strip_prefix("VmHWM:"))
        .and_then(|rest| rest.trim().strip_suffix("kB"))
        .and_then(|kb| kb.trim().parse::<u64>().ok())
        .map(|kb| kb * 1024)
}
