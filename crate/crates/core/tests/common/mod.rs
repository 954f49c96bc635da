//! Shared test-side oracles and generators.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use kdewatch::calendar::{week_distance, Period, Timestamp};
use kdewatch::detector::{names, DetectorConfig, Engine, EntityState};
use kdewatch::event::AuditEvent;
use kdewatch::kde::Boundary;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn phi(u: f64) -> f64 {
    (-u * u / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn naive_density_at(sample: &[u16], h: f64, at: u16, circular: bool) -> f64 {
    let total: f64 = sample
        .iter()
        .map(|&x| {
            let mut d = (f64::from(at) - f64::from(x)).abs();
            if circular {
                d = d.min(1440.0 - d);
            }
            phi(d / h)
        })
        .sum();
    total / (sample.len() as f64 * h)
}

pub fn silverman_oracle(sample: &[u16]) -> f64 {
    if sample.len() < 2 {
        return 1.0;
    }
    let xs: Vec<f64> = sample.iter().map(|&x| f64::from(x)).collect();
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0);
    let mut sorted = xs;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pct = |q: f64| {
        let pos = q * (sorted.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        sorted[lo] * (1.0 - (pos - lo as f64)) + sorted[hi] * (pos - lo as f64)
    };
    let iqr = pct(0.75) - pct(0.25);
    (0.9 * var.sqrt().min(iqr / 1.34) * m.powf(-0.2)).max(1.0)
}

/// Straight-line transcription of the per-user window algorithm.
#[derive(Debug, Clone, Default)]
pub struct OracleUser {
    pub events: BTreeMap<Period, Vec<u16>>,
    pub used: Vec<Period>,
    pub acc: Vec<Period>,
    pub profile: Option<(Vec<u16>, f64)>,
    pub alerts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleStep {
    pub refit: bool,
    pub alert_density: Option<f64>,
}

impl OracleUser {
    fn count(&self, periods: &[Period]) -> usize {
        periods
            .iter()
            .map(|p| self.events.get(p).map_or(0, Vec::len))
            .sum()
    }

    fn insert(list: &mut Vec<Period>, p: Period, gap: u32) {
        if let Some(&head) = list.first() {
            if p < head && week_distance(p, head) > i64::from(gap) {
                return;
            }
        }
        if !list.contains(&p) {
            list.push(p);
            list.sort();
        }
    }

    pub fn step(&mut self, id: &str, creation: Timestamp, cfg: &DetectorConfig) -> OracleStep {
        let period = creation.period();
        let value = creation.minute().get();
        self.events.entry(period).or_default().push(value);

        let mut start = false;
        let open = self.used.is_empty()
            || self.count(&self.used) < cfg.k
            || self.used.len() < cfg.n
            || period <= *self.used.last().unwrap();
        if open {
            if !self.used.contains(&period) {
                Self::insert(&mut self.used, period, cfg.max_gap_weeks);
            }
        } else if !self.used.contains(&period) {
            if self.acc.is_empty() {
                start = true;
            }
            if !self.acc.contains(&period) {
                Self::insert(&mut self.acc, period, cfg.max_gap_weeks);
            }
        }

        if !self.used.is_empty() {
            let new: Vec<Period> = self.used[1..].iter().chain(&self.acc).copied().collect();
            if self.count(&new) >= cfg.k && self.count(&self.acc) >= 2 && self.used.len() >= cfg.n {
                self.events.remove(&self.used[0]);
                self.used = new;
                self.acc.clear();
            }
        }

        if start {
            let keep: BTreeSet<Period> = self.used.iter().chain(&self.acc).copied().collect();
            self.events.retain(|p, _| keep.contains(p));
            let sample: Vec<u16> = self
                .used
                .iter()
                .flat_map(|p| self.events.get(p).into_iter().flatten().copied())
                .collect();
            let h = silverman_oracle(&sample);
            self.profile = Some((sample, h));
        }

        let mut alert_density = None;
        if let Some((sample, h)) = &self.profile {
            let d = naive_density_at(sample, *h, value, cfg.boundary == Boundary::Circular);
            if d <= cfg.threshold {
                self.alerts.push(id.to_owned());
                alert_density = Some(d);
            }
        }
        OracleStep {
            refit: start,
            alert_density,
        }
    }

    /// Differences from the engine's view of the same user.
    pub fn compare(&self, state: &EntityState) -> Result<(), String> {
        if state.used_periods != self.used {
            return Err(format!(
                "Used {:?} vs oracle {:?}",
                state.used_periods, self.used
            ));
        }
        if state.accumulated_periods != self.acc {
            return Err(format!(
                "Acc {:?} vs oracle {:?}",
                state.accumulated_periods, self.acc
            ));
        }
        let engine_weeks: BTreeMap<Period, Vec<u16>> = state
            .events_by_week
            .iter()
            .map(|(p, v)| (*p, v.iter().map(|m| m.get()).collect()))
            .collect();
        if engine_weeks != self.events {
            return Err("EventsByWeek differs".into());
        }
        match (&state.user_kde, &self.profile) {
            (None, None) => {}
            (Some(p), Some((sample, h))) => {
                if p.sample_count() != sample.len() || (p.bandwidth() - h).abs() > 1e-9 * h {
                    return Err(format!(
                        "profile m={} h={} vs oracle m={} h={}",
                        p.sample_count(),
                        p.bandwidth(),
                        sample.len(),
                        h
                    ));
                }
            }
            (a, b) => {
                return Err(format!(
                    "profile presence {} vs oracle {}",
                    a.is_some(),
                    b.is_some()
                ))
            }
        }
        if state.alerts != self.alerts {
            return Err(format!(
                "alerts {:?} vs oracle {:?}",
                state.alerts, self.alerts
            ));
        }
        Ok(())
    }
}

/// A random multi-user stream: weeks mostly advance, sometimes arrive late,
/// minutes cluster around a per-user habit with occasional off-hours events.
pub fn random_sequence(seed: u64, users: usize, len: usize) -> Vec<AuditEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = Period::from_code(202210).unwrap().monday();
    let habits: Vec<i64> = (0..users).map(|_| rng.random_range(420..1080)).collect();
    let mut week = 0i64;
    (0..len)
        .map(|i| {
            if rng.random_bool(0.15) {
                week += 1;
            }
            let lateness = if rng.random_bool(0.1) {
                rng.random_range(1..7)
            } else {
                0
            };
            let w = (week - lateness).max(0);
            let user = rng.random_range(0..users);
            let minute = if rng.random_bool(0.05) {
                rng.random_range(0..1440)
            } else {
                (habits[user] + rng.random_range(-90..=90)).clamp(0, 1439)
            };
            let day = rng.random_range(0..7);
            let ts = base.and_hms_opt(0, 0, 0).unwrap().and_utc()
                + chrono::TimeDelta::weeks(w)
                + chrono::TimeDelta::days(day)
                + chrono::TimeDelta::minutes(minute)
                + chrono::TimeDelta::seconds(rng.random_range(0..60));
            AuditEvent::new(
                format!("e{i}"),
                Timestamp::from_datetime(ts),
                format!("u{user}"),
            )
        })
        .collect()
}

/// Small windows so that profiles and renewals occur in short sequences.
pub fn small_config(seed: u64) -> DetectorConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    DetectorConfig::new(rng.random_range(1..=3), rng.random_range(2..=8), 0.001)
}

#[derive(Debug, Default)]
pub struct SequenceReport {
    pub alerts: usize,
    pub profiles: usize,
}

fn expected_actions(alerting: bool) -> Vec<&'static str> {
    let mut v = vec![names::ADD_EVENT, names::COMPUTATION_KDE];
    if alerting {
        v.push(names::ALERT);
    }
    v
}

/// Runs every runtime-semantics check on one interleaved sequence:
/// per-user isolation, bottom-up action order, no alert before the first
/// profile, state invariants after every step, and replay determinism.
pub fn check_sequence(
    events: &[AuditEvent],
    config: &DetectorConfig,
) -> Result<SequenceReport, String> {
    let mut engine = Engine::new(config.clone()).map_err(|e| e.to_string())?;
    let mut oracles: HashMap<String, OracleUser> = HashMap::new();
    let mut profiled: BTreeSet<String> = BTreeSet::new();
    let mut delivered: HashMap<String, BTreeSet<String>> = HashMap::new();
    let mut alert_stream = Vec::new();
    let mut report = SequenceReport::default();

    for (i, event) in events.iter().enumerate() {
        let user = event.user_id.clone();
        delivered
            .entry(user.clone())
            .or_default()
            .insert(event.id.clone());
        let outcome = engine.process(event.clone()).map_err(|e| e.to_string())?;
        let oracle = oracles.entry(user.clone()).or_default();
        let expected = oracle.step(&event.id, event.creation, config);

        // action order: addEvent, then the Computation node action, then alert
        let actions: Vec<&str> = outcome.log.iter().filter_map(|f| f.action_name()).collect();
        let had_profile = profiled.contains(&user) || expected.refit;
        if actions != expected_actions(had_profile) {
            return Err(format!("step {i}: action order {actions:?}"));
        }
        if expected.refit {
            profiled.insert(user.clone());
        }
        if outcome.profiles.len() != usize::from(expected.refit) {
            return Err(format!("step {i}: refit mismatch"));
        }

        for alert in &outcome.alerts {
            if !profiled.contains(&alert.user_id) {
                return Err(format!("step {i}: alert before first profile"));
            }
            if alert.density > alert.threshold {
                return Err(format!("step {i}: alert density above threshold"));
            }
        }
        match (outcome.alerts.as_slice(), expected.alert_density) {
            ([], None) => {}
            ([a], Some(d)) if (a.density - d).abs() <= 1e-12 => {}
            (got, want) => {
                return Err(format!(
                    "step {i}: alerts {got:?} vs oracle density {want:?}"
                ))
            }
        }
        report.alerts += outcome.alerts.len();
        report.profiles += outcome.profiles.len();
        alert_stream.extend(
            outcome
                .alerts
                .iter()
                .map(|a| serde_json::to_string(a).unwrap()),
        );

        for (u, state) in engine.entities() {
            state
                .check_invariants()
                .map_err(|e| format!("step {i}, user {u}: {e}"))?;
            independent_invariants(&state, &delivered[&u])
                .map_err(|e| format!("step {i}, user {u}: {e}"))?;
        }
        let state = engine.entity(&user).ok_or("user missing")?;
        oracles[&user]
            .compare(&state)
            .map_err(|e| format!("step {i}, user {user}: {e}"))?;
    }

    // isolation: each user's subsequence alone gives the same state
    for (user, _) in engine.entities() {
        let mut alone = Engine::new(config.clone()).map_err(|e| e.to_string())?;
        for e in events.iter().filter(|e| e.user_id == user) {
            alone.process(e.clone()).map_err(|e| e.to_string())?;
        }
        if alone.entity(&user) != engine.entity(&user) || alone.user_count() != 1 {
            return Err(format!(
                "user {user}: interleaved state differs from solo replay"
            ));
        }
    }

    // determinism: a second run emits byte-identical alerts
    let mut again = Engine::new(config.clone()).map_err(|e| e.to_string())?;
    let mut second = Vec::new();
    for e in events {
        let outcome = again.process(e.clone()).map_err(|e| e.to_string())?;
        second.extend(
            outcome
                .alerts
                .iter()
                .map(|a| serde_json::to_string(a).unwrap()),
        );
    }
    if second != alert_stream || again.entities() != engine.entities() {
        return Err("replay is not deterministic".into());
    }
    Ok(report)
}

/// The entity invariants, checked without the library's own checker.
pub fn independent_invariants(
    state: &EntityState,
    delivered: &BTreeSet<String>,
) -> Result<(), String> {
    let ascending = |l: &[Period]| l.windows(2).all(|w| w[0] < w[1]);
    if !ascending(&state.used_periods) || !ascending(&state.accumulated_periods) {
        return Err("lists not strictly ascending".into());
    }
    if state
        .used_periods
        .iter()
        .any(|p| state.accumulated_periods.contains(p))
    {
        return Err("lists overlap".into());
    }
    if let (Some(last), Some(first)) =
        (state.used_periods.last(), state.accumulated_periods.first())
    {
        if first <= last {
            return Err("accumulated period not after the window".into());
        }
    }
    if state.start_kde {
        return Err("startKDE left raised".into());
    }
    if let Some(p) = &state.user_kde {
        if p.densities().len() != 1440 {
            return Err("profile grid size".into());
        }
    }
    if let Some(id) = state.alerts.iter().find(|id| !delivered.contains(*id)) {
        return Err(format!("alert id {id} was never delivered"));
    }
    Ok(())
}
