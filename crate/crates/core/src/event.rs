use serde::{Deserialize, Serialize};

use crate::astd::Payload;
use crate::calendar::Timestamp;

/// One audit record after ingestion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEvent {
    pub id: String,
    pub creation: Timestamp,
    pub user_id: String,
}

impl AuditEvent {
    pub fn new(id: impl Into<String>, creation: Timestamp, user_id: impl Into<String>) -> Self {
        AuditEvent {
            id: id.into(),
            creation,
            user_id: user_id.into(),
        }
    }
}

impl Payload for AuditEvent {
    fn param(&self, name: &str) -> Option<&str> {
        match name {
            "userId" | "UserId" => Some(&self.user_id),
            "ID" | "Id" => Some(&self.id),
            _ => None,
        }
    }
}
