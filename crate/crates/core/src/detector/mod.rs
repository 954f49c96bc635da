//! Per-user activity-time anomaly detector.
//!
//! The composition is a quantified interleave over `userId` whose child is a
//! flow of two single-state automata sharing the child's attributes:
//!
//! ```text
//! ||| userId :
//!     Detect_Anomalous_Event_Times  (flow, holds every per-user attribute)
//!     ├── Computation   e / addEvent          node action: Computation_KDE
//!     └── Alerting      e [g3] / alert
//! ```
//!
//! Computation runs first, so a profile built by an event is already used to
//! classify that same event.

mod config;
mod engine;
mod state;
pub mod trace;

use serde::{Deserialize, Serialize};

use crate::astd::{
    ActionContext, ActionError, AttrView, BuildError, Domain, Machine, Node, Registry, Scope,
    TransitionSpec,
};
use crate::calendar::{EventsByWeek, MinuteOfDay, Period};
use crate::event::AuditEvent;
use crate::kde::KdeProfile;

pub use config::{BandwidthSection, ConfigError, ConfigFile, DetectorConfig};
pub use engine::{Engine, EngineError, ProcessOutcome};
pub use state::{AddEventOutcome, EntityState, Placement, ProfileSummary, StateError};

/// Label of the single event type the detector consumes.
pub const EVENT_LABEL: &str = "e";
/// Quantified variable of the top-level interleave.
pub const USER_VARIABLE: &str = "userId";

pub mod names {
    //! Node, attribute and callable names used in the composition.

    pub const ROOT: &str = "Users";
    pub const FLOW: &str = "Detect_Anomalous_Event_Times";
    pub const COMPUTATION: &str = "Computation";
    pub const ALERTING: &str = "Alerting";
    pub const STATE: &str = "S0";

    pub const EVENTS_BY_WEEK: &str = "EventsByWeek";
    pub const N: &str = "n";
    pub const K: &str = "k";
    pub const THRESHOLD: &str = "threshold";
    pub const USED_PERIODS: &str = "UsedPeriods";
    pub const ACCUMULATED_PERIODS: &str = "AccumulatedPeriods";
    pub const START_KDE: &str = "startKDE";
    pub const USER_KDE: &str = "UserKDE";
    pub const ALERTS: &str = "Alerts";

    pub const ADD_EVENT: &str = "addEvent";
    pub const COMPUTATION_KDE: &str = "Computation_KDE";
    pub const ALERT: &str = "alert";
    pub const G3: &str = "g3";
}

/// A suspicious event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertRecord {
    pub event_id: String,
    pub user_id: String,
    pub period: Period,
    pub minute: MinuteOfDay,
    pub density: f64,
    pub threshold: f64,
}

/// Records the detector actions hand back from a step.
#[derive(Debug, Clone, PartialEq)]
pub enum DetectorOutput {
    Alert(AlertRecord),
    ProfileComputed {
        user_id: String,
        summary: ProfileSummary,
    },
}

/// Attribute values of the detector composition.
#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    Weeks(EventsByWeek),
    Count(usize),
    Real(f64),
    Periods(Vec<Period>),
    Flag(bool),
    Profile(Option<KdeProfile>),
    Ids(Vec<String>),
}

pub struct Detector;

impl Domain for Detector {
    type Value = AttrValue;
    type Payload = AuditEvent;
    type Output = DetectorOutput;
}

/// The composition, with every callable referenced by name.
pub fn detector_spec() -> Node {
    use names::*;
    let computation = Node::automaton(
        COMPUTATION,
        &[STATE],
        STATE,
        vec![TransitionSpec::looping(STATE, crate::detector::EVENT_LABEL).action(ADD_EVENT)],
    )
    .action(COMPUTATION_KDE);
    let alerting = Node::automaton(
        ALERTING,
        &[STATE],
        STATE,
        vec![TransitionSpec::looping(STATE, crate::detector::EVENT_LABEL)
            .guard(G3)
            .action(ALERT)],
    );
    let flow = [
        EVENTS_BY_WEEK,
        N,
        K,
        THRESHOLD,
        USED_PERIODS,
        ACCUMULATED_PERIODS,
        START_KDE,
        USER_KDE,
        ALERTS,
    ]
    .into_iter()
    .fold(Node::flow(FLOW, computation, alerting), |node, attr| {
        node.attribute(attr, format!("init_{attr}"))
    });
    Node::interleave(ROOT, USER_VARIABLE, flow)
}

/// Guards, actions and initializers for [`detector_spec`].
pub fn detector_registry(config: &DetectorConfig) -> Registry<Detector> {
    use names::*;
    let (n, k, threshold) = (config.n, config.k, config.threshold);
    let max_gap = config.max_gap_weeks;
    let (bandwidth, boundary) = (config.bandwidth, config.boundary);

    Registry::new()
        .initializer(format!("init_{EVENTS_BY_WEEK}"), |_| {
            AttrValue::Weeks(EventsByWeek::new())
        })
        .initializer(format!("init_{N}"), move |_| AttrValue::Count(n))
        .initializer(format!("init_{K}"), move |_| AttrValue::Count(k))
        .initializer(format!("init_{THRESHOLD}"), move |_| {
            AttrValue::Real(threshold)
        })
        .initializer(format!("init_{USED_PERIODS}"), |_| {
            AttrValue::Periods(Vec::new())
        })
        .initializer(format!("init_{ACCUMULATED_PERIODS}"), |_| {
            AttrValue::Periods(Vec::new())
        })
        .initializer(format!("init_{START_KDE}"), |_| AttrValue::Flag(false))
        .initializer(format!("init_{USER_KDE}"), |_| AttrValue::Profile(None))
        .initializer(format!("init_{ALERTS}"), |_| AttrValue::Ids(Vec::new()))
        .guard(G3, |_, attrs: &dyn AttrView<AttrValue>| {
            matches!(attrs.lookup(USER_KDE), Some(AttrValue::Profile(Some(_))))
        })
        .action(ADD_EVENT, move |ctx| {
            with_state(ctx, |state, event| {
                state.add_event(event.creation, max_gap);
                Ok(None)
            })
        })
        .action(COMPUTATION_KDE, move |ctx| {
            with_state(ctx, |state, event| {
                let summary = state
                    .computation_kde(bandwidth, boundary)
                    .map_err(|e| ActionError::new(e.to_string()))?;
                Ok(summary.map(|summary| DetectorOutput::ProfileComputed {
                    user_id: event.user_id.clone(),
                    summary,
                }))
            })
        })
        .action(ALERT, |ctx| {
            with_state(ctx, |state, event| {
                Ok(state
                    .alert_check(&event.id, &event.user_id, event.creation)
                    .map(DetectorOutput::Alert))
            })
        })
}

/// Builds a fresh detector with no users.
pub fn build_detector(config: &DetectorConfig) -> Result<Machine<Detector>, DetectorBuildError> {
    config.validate()?;
    Ok(Machine::build(
        &detector_spec(),
        &detector_registry(config),
    )?)
}

#[derive(Debug, thiserror::Error)]
pub enum DetectorBuildError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Build(#[from] BuildError),
}

// Moves the per-user attributes into an EntityState for the duration of `f`.
fn with_state<F>(ctx: &mut ActionContext<'_, '_, Detector>, f: F) -> Result<(), ActionError>
where
    F: FnOnce(&mut EntityState, &AuditEvent) -> Result<Option<DetectorOutput>, ActionError>,
{
    let mut state = take_state(ctx.scope)?;
    let result = f(&mut state, ctx.payload);
    put_state(ctx.scope, state);
    if let Some(output) = result? {
        ctx.emit(output);
    }
    Ok(())
}

fn missing(name: &str) -> ActionError {
    ActionError::new(format!(
        "attribute {name} is not visible or has the wrong type"
    ))
}

macro_rules! take_attr {
    ($scope:expr, $name:expr, $variant:ident) => {
        match $scope.get_mut($name) {
            Some(AttrValue::$variant(value)) => std::mem::take(value),
            _ => return Err(missing($name)),
        }
    };
}

macro_rules! put_attr {
    ($scope:expr, $name:expr, $variant:ident, $value:expr) => {
        if let Some(slot) = $scope.get_mut($name) {
            *slot = AttrValue::$variant($value);
        }
    };
}

fn take_state(scope: &mut Scope<'_, AttrValue>) -> Result<EntityState, ActionError> {
    use names::*;
    let copy = |scope: &Scope<'_, AttrValue>, name: &str| -> Result<AttrValue, ActionError> {
        scope.get(name).cloned().ok_or_else(|| missing(name))
    };
    let (
        AttrValue::Count(n),
        AttrValue::Count(k),
        AttrValue::Real(threshold),
        AttrValue::Flag(start_kde),
    ) = (
        copy(scope, N)?,
        copy(scope, K)?,
        copy(scope, THRESHOLD)?,
        copy(scope, START_KDE)?,
    )
    else {
        return Err(missing("n/k/threshold/startKDE"));
    };
    Ok(EntityState {
        events_by_week: take_attr!(scope, EVENTS_BY_WEEK, Weeks),
        n,
        k,
        threshold,
        used_periods: take_attr!(scope, USED_PERIODS, Periods),
        accumulated_periods: take_attr!(scope, ACCUMULATED_PERIODS, Periods),
        start_kde,
        user_kde: take_attr!(scope, USER_KDE, Profile),
        alerts: take_attr!(scope, ALERTS, Ids),
    })
}

fn put_state(scope: &mut Scope<'_, AttrValue>, state: EntityState) {
    use names::*;
    put_attr!(scope, EVENTS_BY_WEEK, Weeks, state.events_by_week);
    put_attr!(scope, N, Count, state.n);
    put_attr!(scope, K, Count, state.k);
    put_attr!(scope, THRESHOLD, Real, state.threshold);
    put_attr!(scope, USED_PERIODS, Periods, state.used_periods);
    put_attr!(
        scope,
        ACCUMULATED_PERIODS,
        Periods,
        state.accumulated_periods
    );
    put_attr!(scope, START_KDE, Flag, state.start_kde);
    put_attr!(scope, USER_KDE, Profile, state.user_kde);
    put_attr!(scope, ALERTS, Ids, state.alerts);
}

/// Reads a user's attributes back into an [`EntityState`].
pub fn read_state(attrs: &crate::astd::Attributes<AttrValue>) -> Option<EntityState> {
    use names::*;
    macro_rules! read {
        ($name:expr, $variant:ident) => {
            match attrs.get($name)? {
                AttrValue::$variant(v) => v.clone(),
                _ => return None,
            }
        };
    }
    Some(EntityState {
        events_by_week: read!(EVENTS_BY_WEEK, Weeks),
        n: read!(N, Count),
        k: read!(K, Count),
        threshold: read!(THRESHOLD, Real),
        used_periods: read!(USED_PERIODS, Periods),
        accumulated_periods: read!(ACCUMULATED_PERIODS, Periods),
        start_kde: read!(START_KDE, Flag),
        user_kde: read!(USER_KDE, Profile),
        alerts: read!(ALERTS, Ids),
    })
}

/// Overwrites a user's attributes from an [`EntityState`].
pub fn write_state(attrs: &mut crate::astd::Attributes<AttrValue>, state: EntityState) {
    use names::*;
    attrs.insert(EVENTS_BY_WEEK, AttrValue::Weeks(state.events_by_week));
    attrs.insert(N, AttrValue::Count(state.n));
    attrs.insert(K, AttrValue::Count(state.k));
    attrs.insert(THRESHOLD, AttrValue::Real(state.threshold));
    attrs.insert(USED_PERIODS, AttrValue::Periods(state.used_periods));
    attrs.insert(
        ACCUMULATED_PERIODS,
        AttrValue::Periods(state.accumulated_periods),
    );
    attrs.insert(START_KDE, AttrValue::Flag(state.start_kde));
    attrs.insert(USER_KDE, AttrValue::Profile(state.user_kde));
    attrs.insert(ALERTS, AttrValue::Ids(state.alerts));
}
