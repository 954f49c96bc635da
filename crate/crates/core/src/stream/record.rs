//! Parsing of line-delimited audit records.

use std::borrow::Cow;
use std::fmt;

use serde::Deserialize;

use crate::calendar::Timestamp;
use crate::event::AuditEvent;

/// Why a line was not turned into an event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Malformed {
    pub reason: String,
}

impl Malformed {
    fn new(reason: impl Into<String>) -> Self {
        Malformed {
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Malformed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.reason)
    }
}

// Only the three fields the detector needs; everything else is skipped.
#[derive(Deserialize)]
struct RawEventRecord<'a> {
    #[serde(rename = "ID", alias = "Id", borrow, default)]
    id: Option<Cow<'a, str>>,
    #[serde(rename = "CreationTime", borrow, default)]
    creation_time: Option<Cow<'a, str>>,
    #[serde(rename = "UserId", borrow, default)]
    user_id: Option<Cow<'a, str>>,
}

fn required<'a>(value: Option<Cow<'a, str>>, name: &str) -> Result<Cow<'a, str>, Malformed> {
    match value {
        None => Err(Malformed::new(format!("missing {name}"))),
        Some(v) if v.trim().is_empty() => Err(Malformed::new(format!("empty {name}"))),
        Some(v) => Ok(v),
    }
}

/// Parses one JSON object line. Accepts `ID` or `Id`.
pub fn parse_record(line: &str) -> Result<AuditEvent, Malformed> {
    let raw: RawEventRecord<'_> =
        serde_json::from_str(line).map_err(|e| Malformed::new(format!("bad JSON: {e}")))?;
    let id = required(raw.id, "ID")?;
    let creation = required(raw.creation_time, "CreationTime")?;
    let user = required(raw.user_id, "UserId")?;
    let creation = Timestamp::parse(&creation).map_err(|_| Malformed::new("bad timestamp"))?;
    Ok(AuditEvent::new(
        id.into_owned(),
        creation,
        user.into_owned(),
    ))
}
