//! Per-user training window and the three detector actions as plain
//! functions over [`EntityState`].

use serde::{Deserialize, Serialize};

use crate::calendar::{
    compute_minute, compute_period, count_events, insert_period, EventsByWeek, MinuteOfDay, Period,
    Timestamp,
};
use crate::kde::{fit_profile, fuse_samples, BandwidthPolicy, Boundary, KdeError, KdeProfile};

use super::config::DetectorConfig;
use super::AlertRecord;

/// Everything one user's detector remembers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityState {
    #[serde(rename = "EventsByWeek")]
    pub events_by_week: EventsByWeek,
    pub n: usize,
    pub k: usize,
    pub threshold: f64,
    #[serde(rename = "UsedPeriods")]
    pub used_periods: Vec<Period>,
    #[serde(rename = "AccumulatedPeriods")]
    pub accumulated_periods: Vec<Period>,
    #[serde(rename = "startKDE")]
    pub start_kde: bool,
    #[serde(rename = "UserKDE")]
    pub user_kde: Option<KdeProfile>,
    #[serde(rename = "Alerts")]
    pub alerts: Vec<String>,
}

/// Where [`EntityState::add_event`] put the event's period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// Inserted into the training window.
    Used,
    /// Inserted into the accumulator for the next window.
    Accumulated,
    /// Already present in the list it was routed to.
    Known,
    /// Too old relative to the head of the list it was routed to.
    RejectedStale,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AddEventOutcome {
    pub period: Period,
    pub minute: MinuteOfDay,
    pub placement: Placement,
    pub start_kde_raised: bool,
    /// The period dropped from the head of the window, when it slid.
    pub renewed_from: Option<Period>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSummary {
    pub sample_count: usize,
    pub bandwidth: f64,
    pub periods: Vec<Period>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StateError {
    #[error("startKDE raised but the training window holds no events")]
    EmptyWindow,
    #[error(transparent)]
    Kde(#[from] KdeError),
}

impl EntityState {
    pub fn new(config: &DetectorConfig) -> Self {
        EntityState {
            events_by_week: EventsByWeek::new(),
            n: config.n,
            k: config.k,
            threshold: config.threshold,
            used_periods: Vec::new(),
            accumulated_periods: Vec::new(),
            start_kde: false,
            user_kde: None,
            alerts: Vec::new(),
        }
    }

    /// Records the event's minute and manages the training window.
    pub fn add_event(&mut self, creation: Timestamp, max_gap_weeks: u32) -> AddEventOutcome {
        let period = compute_period(creation);
        let minute = compute_minute(creation);
        self.events_by_week.entry(period).or_default().push(minute);

        let mut outcome = AddEventOutcome {
            period,
            minute,
            placement: Placement::Known,
            start_kde_raised: false,
            renewed_from: None,
        };

        // Still filling the window, or a late event for a period the window
        // already covers.
        let window_open = match self.used_periods.last() {
            None => true,
            Some(&last) => {
                count_events(&self.events_by_week, &self.used_periods) < self.k
                    || self.used_periods.len() < self.n
                    || period <= last
            }
        };

        if window_open {
            if !self.used_periods.contains(&period) {
                outcome.placement = if insert_period(&mut self.used_periods, period, max_gap_weeks)
                {
                    Placement::Used
                } else {
                    Placement::RejectedStale
                };
            }
        } else if !self.used_periods.contains(&period) {
            if self.accumulated_periods.is_empty() {
                self.start_kde = true;
                outcome.start_kde_raised = true;
            }
            if !self.accumulated_periods.contains(&period) {
                outcome.placement =
                    if insert_period(&mut self.accumulated_periods, period, max_gap_weeks) {
                        Placement::Accumulated
                    } else {
                        Placement::RejectedStale
                    };
            }
        }

        if self.renewal_ready() {
            let dropped = self.used_periods.remove(0);
            self.events_by_week.remove(&dropped);
            self.used_periods.append(&mut self.accumulated_periods);
            outcome.renewed_from = Some(dropped);
        }
        outcome
    }

    /// The window minus its oldest period, followed by the accumulator.
    pub fn next_window(&self) -> Vec<Period> {
        self.used_periods
            .iter()
            .skip(1)
            .chain(&self.accumulated_periods)
            .copied()
            .collect()
    }

    /// Whether the next window can replace the current one.
    pub fn renewal_ready(&self) -> bool {
        let tail = self.used_periods.get(1..).unwrap_or(&[]);
        let accumulated = count_events(&self.events_by_week, &self.accumulated_periods);
        count_events(&self.events_by_week, tail) + accumulated >= self.k
            && accumulated >= 2
            && self.used_periods.len() >= self.n
    }

    /// Refits the profile when `start_kde` is raised. Weeks outside the
    /// window and accumulator are discarded first.
    pub fn computation_kde(
        &mut self,
        bandwidth: BandwidthPolicy,
        boundary: Boundary,
    ) -> Result<Option<ProfileSummary>, StateError> {
        if !self.start_kde {
            return Ok(None);
        }
        self.user_kde = None;
        let (used, accumulated) = (&self.used_periods, &self.accumulated_periods);
        self.events_by_week
            .retain(|p, _| used.contains(p) || accumulated.contains(p));

        let sample = fuse_samples(&self.events_by_week, &self.used_periods);
        if sample.is_empty() {
            return Err(StateError::EmptyWindow);
        }
        let h = bandwidth.select(&sample)?;
        let profile = fit_profile(&sample, h, boundary)?;
        self.user_kde = Some(profile);
        self.start_kde = false;
        Ok(Some(ProfileSummary {
            sample_count: sample.len(),
            bandwidth: h,
            periods: self.used_periods.clone(),
        }))
    }

    /// Classifies the event's minute against the current profile. Does
    /// nothing without a profile.
    pub fn alert_check(
        &mut self,
        event_id: &str,
        user_id: &str,
        creation: Timestamp,
    ) -> Option<AlertRecord> {
        let profile = self.user_kde.as_ref()?;
        let minute = compute_minute(creation);
        let density = profile.density_at(minute);
        if density > self.threshold {
            return None;
        }
        self.alerts.push(event_id.to_owned());
        Some(AlertRecord {
            event_id: event_id.to_owned(),
            user_id: user_id.to_owned(),
            period: compute_period(creation),
            minute,
            density,
            threshold: self.threshold,
        })
    }

    pub fn event_count(&self, period: Period) -> usize {
        self.events_by_week.get(&period).map_or(0, Vec::len)
    }

    /// Minutes currently held across all weeks.
    pub fn stored_minutes(&self) -> usize {
        self.events_by_week.values().map(Vec::len).sum()
    }

    /// Weeks held in `events_by_week` that belong to neither list.
    pub fn orphan_periods(&self) -> Vec<Period> {
        self.events_by_week
            .keys()
            .filter(|p| !self.used_periods.contains(p) && !self.accumulated_periods.contains(p))
            .copied()
            .collect()
    }

    /// Checks the structural invariants that hold between steps.
    pub fn check_invariants(&self) -> Result<(), String> {
        let ascending = |list: &[Period]| list.windows(2).all(|w| w[0] < w[1]);
        if !ascending(&self.used_periods) {
            return Err(format!(
                "UsedPeriods not strictly ascending: {:?}",
                self.used_periods
            ));
        }
        if !ascending(&self.accumulated_periods) {
            return Err(format!(
                "AccumulatedPeriods not strictly ascending: {:?}",
                self.accumulated_periods
            ));
        }
        if let Some(first) = self.accumulated_periods.first() {
            match self.used_periods.last() {
                Some(last) if first > last => {}
                _ => {
                    return Err(format!(
                        "AccumulatedPeriods {:?} must follow UsedPeriods {:?}",
                        self.accumulated_periods, self.used_periods
                    ))
                }
            }
        }
        if self.start_kde {
            return Err("startKDE left raised between steps".into());
        }
        if let Some(profile) = &self.user_kde {
            if profile.densities().len() != crate::calendar::MINUTES_PER_DAY {
                return Err("UserKDE has the wrong grid length".into());
            }
        }
        Ok(())
    }
}
