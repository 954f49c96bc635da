use crate::astd::{EventMessage, Fired, Machine, StepError};
use crate::event::AuditEvent;

use super::{
    build_detector, read_state, write_state, AlertRecord, Detector, DetectorBuildError,
    DetectorConfig, DetectorOutput, EntityState, ProfileSummary, EVENT_LABEL,
};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Step(#[from] StepError),
    #[error("state for user {user:?} is invalid: {reason}")]
    InvalidState { user: String, reason: String },
}

/// What one event did.
#[derive(Debug, Default)]
pub struct ProcessOutcome {
    pub executed: bool,
    pub log: Vec<Fired>,
    pub alerts: Vec<AlertRecord>,
    pub profiles: Vec<ProfileSummary>,
}

/// A built detector plus running counters.
pub struct Engine {
    machine: Machine<Detector>,
    config: DetectorConfig,
    events_processed: u64,
    profiles_computed: u64,
    alerts_emitted: u64,
}

impl Engine {
    pub fn new(config: DetectorConfig) -> Result<Self, DetectorBuildError> {
        let machine = build_detector(&config)?;
        Ok(Engine {
            machine,
            config,
            events_processed: 0,
            profiles_computed: 0,
            alerts_emitted: 0,
        })
    }

    pub fn process(&mut self, event: AuditEvent) -> Result<ProcessOutcome, EngineError> {
        let report = self.machine.step(&EventMessage::new(EVENT_LABEL, event))?;
        self.events_processed += 1;
        let mut outcome = ProcessOutcome {
            executed: report.executed,
            log: report.log,
            ..ProcessOutcome::default()
        };
        for output in report.outputs {
            match output {
                DetectorOutput::Alert(alert) => {
                    self.alerts_emitted += 1;
                    outcome.alerts.push(alert);
                }
                DetectorOutput::ProfileComputed { summary, .. } => {
                    self.profiles_computed += 1;
                    outcome.profiles.push(summary);
                }
            }
        }
        Ok(outcome)
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn machine(&self) -> &Machine<Detector> {
        &self.machine
    }

    pub fn user_count(&self) -> usize {
        self.machine.instance().child_count()
    }

    pub fn users(&self) -> impl Iterator<Item = &str> {
        self.machine.instance().children().map(|(k, _)| k)
    }

    /// A copy of the user's state.
    pub fn entity(&self, user: &str) -> Option<EntityState> {
        read_state(self.machine.instance().child(user)?.attributes())
    }

    /// Copies of every user's state, ordered by user id.
    pub fn entities(&self) -> Vec<(String, EntityState)> {
        self.machine
            .instance()
            .children()
            .filter_map(|(user, child)| Some((user.to_owned(), read_state(child.attributes())?)))
            .collect()
    }

    /// Installs `state` for `user`, replacing any existing state.
    pub fn restore_entity(&mut self, user: &str, state: EntityState) -> Result<(), EngineError> {
        state
            .check_invariants()
            .map_err(|reason| EngineError::InvalidState {
                user: user.to_owned(),
                reason,
            })?;
        let child = self
            .machine
            .spawn_child(user)
            .expect("detector root is an interleave");
        write_state(child.attributes_mut(), state);
        Ok(())
    }

    /// Training minutes held across all users.
    pub fn stored_minutes(&self) -> usize {
        self.machine
            .instance()
            .children()
            .filter_map(
                |(_, child)| match child.attributes().get(super::names::EVENTS_BY_WEEK) {
                    Some(super::AttrValue::Weeks(weeks)) => {
                        Some(weeks.values().map(Vec::len).sum::<usize>())
                    }
                    _ => None,
                },
            )
            .sum()
    }

    /// Rough size of all per-user state in bytes.
    pub fn state_bytes_estimate(&self) -> usize {
        let per_minute = std::mem::size_of::<crate::calendar::MinuteOfDay>();
        let profile = crate::calendar::MINUTES_PER_DAY * std::mem::size_of::<f64>();
        self.machine
            .instance()
            .children()
            .filter_map(|(user, child)| Some((user, read_state_sizes(child.attributes())?)))
            .map(|(user, (minutes, periods, has_profile, alert_bytes))| {
                user.len()
                    + minutes * per_minute
                    + periods * 32
                    + if has_profile { profile } else { 0 }
                    + alert_bytes
                    + 512
            })
            .sum()
    }

    pub fn events_processed(&self) -> u64 {
        self.events_processed
    }

    pub fn profiles_computed(&self) -> u64 {
        self.profiles_computed
    }

    pub fn alerts_emitted(&self) -> u64 {
        self.alerts_emitted
    }

    /// Drops a user's detector. The engine never does this on its own.
    pub fn evict(&mut self, user: &str) -> bool {
        self.machine.evict(user)
    }
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("config", &self.config)
            .field("users", &self.user_count())
            .field("events_processed", &self.events_processed)
            .field("profiles_computed", &self.profiles_computed)
            .field("alerts_emitted", &self.alerts_emitted)
            .finish()
    }
}

fn read_state_sizes(
    attrs: &crate::astd::Attributes<super::AttrValue>,
) -> Option<(usize, usize, bool, usize)> {
    use super::names::*;
    use super::AttrValue;
    let AttrValue::Weeks(weeks) = attrs.get(EVENTS_BY_WEEK)? else {
        return None;
    };
    let minutes = weeks.values().map(Vec::len).sum();
    let periods = weeks.len();
    let has_profile = matches!(attrs.get(USER_KDE), Some(AttrValue::Profile(Some(_))));
    let alert_bytes = match attrs.get(ALERTS) {
        Some(AttrValue::Ids(ids)) => ids.iter().map(|s| s.len() + 24).sum(),
        _ => 0,
    };
    Some((minutes, periods, has_profile, alert_bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::Timestamp;
    use crate::detector::names;

    fn event(id: &str, time: &str, user: &str) -> AuditEvent {
        AuditEvent::new(id, Timestamp::parse(time).unwrap(), user)
    }

    #[test]
    fn counts_users_and_events() {
        let mut engine = Engine::new(DetectorConfig::default()).unwrap();
        engine
            .process(event("1", "2022-06-22T10:00:00Z", "a"))
            .unwrap();
        engine
            .process(event("2", "2022-06-22T11:00:00Z", "b"))
            .unwrap();
        engine
            .process(event("3", "2022-06-22T12:00:00Z", "a"))
            .unwrap();
        assert_eq!(engine.user_count(), 2);
        assert_eq!(engine.users().collect::<Vec<_>>(), ["a", "b"]);
        assert_eq!(engine.events_processed(), 3);
        assert_eq!(engine.stored_minutes(), 3);
        assert_eq!(engine.entity("a").unwrap().stored_minutes(), 2);
        assert!(engine.entity("c").is_none());
        assert!(engine.state_bytes_estimate() > 0);
    }

    #[test]
    fn every_step_logs_actions_bottom_up() {
        let mut engine = Engine::new(DetectorConfig::new(1, 2, 0.001)).unwrap();
        let times = [
            "2022-06-20T09:00:00Z",
            "2022-06-21T09:10:00Z",
            "2022-06-27T09:05:00Z",
            "2022-06-28T03:00:00Z",
        ];
        let mut saw_alerting = false;
        for (i, t) in times.iter().enumerate() {
            let outcome = engine.process(event(&i.to_string(), t, "u")).unwrap();
            let actions: Vec<_> = outcome.log.iter().filter_map(Fired::action_name).collect();
            assert_eq!(&actions[..2], [names::ADD_EVENT, names::COMPUTATION_KDE]);
            if actions.len() == 3 {
                assert_eq!(actions[2], names::ALERT);
                saw_alerting = true;
            }
        }
        assert!(saw_alerting);
        assert_eq!(engine.profiles_computed(), 1);
        assert_eq!(engine.alerts_emitted(), 1);
    }

    #[test]
    fn restore_rejects_broken_state() {
        let mut engine = Engine::new(DetectorConfig::default()).unwrap();
        let mut state = EntityState::new(engine.config());
        state.start_kde = true;
        assert!(matches!(
            engine.restore_entity("x", state),
            Err(EngineError::InvalidState { .. })
        ));
        assert_eq!(engine.user_count(), 0);
        engine
            .restore_entity("x", EntityState::new(&DetectorConfig::default()))
            .unwrap();
        assert_eq!(engine.user_count(), 1);
        assert!(engine.evict("x"));
    }
}
