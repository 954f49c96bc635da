//! Calendar arithmetic over audit timestamps.
//!
//! Events are bucketed by ISO-8601 week (`YYYYWW`) and by minute of the day.
//! Week distances are always computed through a week serial number so that
//! `202252 -> 202301` is one week, not 49.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, Timelike, Utc, Weekday};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Number of minutes in a day; the length of every density grid.
pub const MINUTES_PER_DAY: usize = 1440;

/// Default gap (in weeks) beyond which a period older than the head of a
/// window is treated as stale.
pub const DEFAULT_MAX_GAP_WEEKS: u32 = 3;

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalendarError {
    #[error("bad timestamp {0:?}: expected YYYY-mm-ddTHH:MM:ssZ")]
    BadTimestamp(String),
    #[error("timestamp {0} predates 1970")]
    BeforeEpoch(String),
    #[error("invalid period {0}: expected YYYYWW with an existing ISO week")]
    InvalidPeriod(u32),
    #[error("minute {0} outside 0..=1439")]
    InvalidMinute(u32),
}

/// A UTC instant as carried by an audit record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(DateTime<Utc>);

impl Timestamp {
    /// Parses the strict `YYYY-mm-ddTHH:MM:ssZ` form. Anything else, including
    /// fractional seconds or offsets, is rejected.
    pub fn parse(text: &str) -> Result<Self, CalendarError> {
        let bytes = text.as_bytes();
        let shape_ok = bytes.len() == 20
            && bytes.iter().enumerate().all(|(i, b)| match i {
                4 | 7 => *b == b'-',
                10 => *b == b'T',
                13 | 16 => *b == b':',
                19 => *b == b'Z',
                _ => b.is_ascii_digit(),
            });
        if !shape_ok {
            return Err(CalendarError::BadTimestamp(text.to_owned()));
        }
        let naive = NaiveDateTime::parse_from_str(text, TIMESTAMP_FORMAT)
            .map_err(|_| CalendarError::BadTimestamp(text.to_owned()))?;
        if naive.year() < 1970 {
            return Err(CalendarError::BeforeEpoch(text.to_owned()));
        }
        Ok(Timestamp(naive.and_utc()))
    }

    pub fn from_datetime(dt: DateTime<Utc>) -> Self {
        Timestamp(dt.with_nanosecond(0).unwrap_or(dt))
    }

    pub fn as_datetime(&self) -> DateTime<Utc> {
        self.0
    }

    /// ISO week of this instant.
    pub fn period(&self) -> Period {
        compute_period(*self)
    }

    pub fn minute(&self) -> MinuteOfDay {
        compute_minute(*self)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format(TIMESTAMP_FORMAT))
    }
}

impl FromStr for Timestamp {
    type Err = CalendarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Timestamp::parse(s)
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Timestamp::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// An ISO-8601 week, encoded as `year * 100 + week`.
///
/// Integer order of the encoding matches chronological order, but the
/// difference of two encodings is not a week count. Use [`week_distance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Period(u32);

impl Period {
    pub fn new(iso_year: i32, week: u32) -> Result<Self, CalendarError> {
        let code = u32::try_from(iso_year)
            .ok()
            .and_then(|y| y.checked_mul(100))
            .and_then(|y| y.checked_add(week))
            .unwrap_or(0);
        Period::from_code(code)
    }

    /// Validates a `YYYYWW` code. Week 53 is only accepted for ISO years
    /// that have one.
    pub fn from_code(code: u32) -> Result<Self, CalendarError> {
        let year = code / 100;
        let week = code % 100;
        if year < 1970 || !(1..=53).contains(&week) {
            return Err(CalendarError::InvalidPeriod(code));
        }
        NaiveDate::from_isoywd_opt(year as i32, week, Weekday::Mon)
            .ok_or(CalendarError::InvalidPeriod(code))?;
        Ok(Period(code))
    }

    pub fn code(self) -> u32 {
        self.0
    }

    pub fn iso_year(self) -> i32 {
        (self.0 / 100) as i32
    }

    pub fn week(self) -> u32 {
        self.0 % 100
    }

    /// Monday that opens this week.
    pub fn monday(self) -> NaiveDate {
        NaiveDate::from_isoywd_opt(self.iso_year(), self.week(), Weekday::Mon)
            .expect("validated at construction")
    }

    /// Weeks elapsed since the ISO week that contains 1970-01-05.
    pub fn week_serial(self) -> i64 {
        let epoch_monday = NaiveDate::from_ymd_opt(1970, 1, 5).expect("valid date");
        (self.monday() - epoch_monday).num_days().div_euclid(7)
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<u32> for Period {
    type Error = CalendarError;

    fn try_from(code: u32) -> Result<Self, Self::Error> {
        Period::from_code(code)
    }
}

impl<'de> Deserialize<'de> for Period {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let code = u32::deserialize(deserializer)?;
        Period::from_code(code).map_err(serde::de::Error::custom)
    }
}

/// Minute of the UTC day, `0..=1439`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct MinuteOfDay(u16);

impl MinuteOfDay {
    pub fn new(value: u32) -> Result<Self, CalendarError> {
        if value as usize >= MINUTES_PER_DAY {
            return Err(CalendarError::InvalidMinute(value));
        }
        Ok(MinuteOfDay(value as u16))
    }

    pub fn from_hm(hour: u32, minute: u32) -> Result<Self, CalendarError> {
        if minute >= 60 {
            return Err(CalendarError::InvalidMinute(hour * 60 + minute));
        }
        MinuteOfDay::new(hour * 60 + minute)
    }

    pub fn get(self) -> u16 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for MinuteOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.0 / 60, self.0 % 60)
    }
}

impl<'de> Deserialize<'de> for MinuteOfDay {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = u32::deserialize(deserializer)?;
        MinuteOfDay::new(value).map_err(serde::de::Error::custom)
    }
}

/// Minutes of the day recorded per week.
pub type EventsByWeek = BTreeMap<Period, Vec<MinuteOfDay>>;

pub fn compute_period(ts: Timestamp) -> Period {
    let iso = ts.0.iso_week();
    Period::new(iso.year(), iso.week()).expect("chrono yields valid ISO weeks")
}

/// Hour and minute of `ts`; seconds are truncated.
pub fn compute_minute(ts: Timestamp) -> MinuteOfDay {
    MinuteOfDay((ts.0.hour() * 60 + ts.0.minute()) as u16)
}

/// Signed number of weeks from `earlier` to `later`.
pub fn week_distance(earlier: Period, later: Period) -> i64 {
    later.week_serial() - earlier.week_serial()
}

/// Inserts `period` into the strictly ascending `list`, keeping it sorted.
///
/// A period that would become the new head is refused when it lies more than
/// `max_gap_weeks` before the current head. Returns whether it was inserted.
/// Callers check membership beforehand; a duplicate is ignored.
pub fn insert_period(list: &mut Vec<Period>, period: Period, max_gap_weeks: u32) -> bool {
    let at = list.partition_point(|p| *p <= period);
    if at > 0 && list[at - 1] == period {
        return false;
    }
    if at == 0 {
        if let Some(&head) = list.first() {
            if week_distance(period, head) > i64::from(max_gap_weeks) {
                return false;
            }
        }
    }
    list.insert(at, period);
    true
}

/// Number of recorded minutes across `periods`; absent keys count zero.
pub fn count_events(events_by_week: &EventsByWeek, periods: &[Period]) -> usize {
    periods
        .iter()
        .filter_map(|p| events_by_week.get(p))
        .map(Vec::len)
        .sum()
}
