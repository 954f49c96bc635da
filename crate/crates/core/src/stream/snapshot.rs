use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::detector::{
    ConfigError, DetectorBuildError, DetectorConfig, Engine, EngineError, EntityState,
};

/// Schema tag written into every snapshot.
pub const SNAPSHOT_SCHEMA: &str = "kdewatch/state-snapshot/v1";

/// All per-user detector state plus the configuration it was built with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub schema: String,
    pub config: DetectorConfig,
    pub users: BTreeMap<String, EntityState>,
}

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("snapshot is not valid JSON at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported snapshot schema {found:?}, expected {SNAPSHOT_SCHEMA:?}")]
    Schema { found: String },
    #[error("snapshot config is invalid: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Build(#[from] DetectorBuildError),
    #[error(transparent)]
    User(#[from] EngineError),
}

impl Snapshot {
    pub fn new(config: DetectorConfig) -> Self {
        Snapshot {
            schema: SNAPSHOT_SCHEMA.to_owned(),
            config,
            users: BTreeMap::new(),
        }
    }

    /// Collects the state of every user across `engines`.
    pub fn capture<'e>(
        config: &DetectorConfig,
        engines: impl IntoIterator<Item = &'e Engine>,
    ) -> Self {
        let mut snapshot = Snapshot::new(config.clone());
        for engine in engines {
            snapshot.users.extend(engine.entities());
        }
        snapshot
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot values always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, SnapshotError> {
        let snapshot: Snapshot = serde_json::from_str(text).map_err(|e| SnapshotError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if snapshot.schema != SNAPSHOT_SCHEMA {
            return Err(SnapshotError::Schema {
                found: snapshot.schema,
            });
        }
        snapshot.config.validate()?;
        Ok(snapshot)
    }

    /// Rebuilds engines, placing each user on the shard given by `shard_of`.
    pub fn into_engines(
        self,
        shards: usize,
        shard_of: impl Fn(&str, usize) -> usize,
    ) -> Result<Vec<Engine>, SnapshotError> {
        let shards = shards.max(1);
        let mut engines = (0..shards)
            .map(|_| Engine::new(self.config.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        for (user, state) in self.users {
            let shard = shard_of(&user, shards);
            engines[shard].restore_entity(&user, state)?;
        }
        Ok(engines)
    }
}

/// Serializes every user's state held by `engine`.
pub fn dump_state(engine: &Engine) -> String {
    Snapshot::capture(engine.config(), [engine]).to_json()
}

/// Parses a snapshot and rebuilds a single engine from it.
pub fn restore_state(text: &str) -> Result<Engine, SnapshotError> {
    let mut engines = Snapshot::from_json(text)?.into_engines(1, |_, _| 0)?;
    Ok(engines.remove(0))
}
