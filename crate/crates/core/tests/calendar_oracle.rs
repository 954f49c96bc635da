//! Calendar functions against an ISO-week oracle built from plain day-count
//! arithmetic, plus the period-list properties.

use std::collections::BTreeMap;

use kdewatch::calendar::{
    compute_minute, compute_period, count_events, insert_period, week_distance, EventsByWeek,
    MinuteOfDay, Period, Timestamp,
};
use proptest::prelude::*;

// 1970-01-01 .. 2199-12-31
const MAX_DAY: i64 = 84_005;

/// Days since 1970-01-01 to (year, month, day), proleptic Gregorian.
fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    let y = yoe + era * 400 + i64::from(m <= 2);
    (y, m, d)
}

fn days_from_civil(y: i64, m: u32, d: u32) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let mp = (i64::from(m) + 9) % 12;
    let doy = (153 * mp + 2) / 5 + i64::from(d) - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

/// Monday = 0. 1970-01-01 was a Thursday.
fn weekday(days: i64) -> i64 {
    (days + 3).rem_euclid(7)
}

/// Thursday of the ISO week containing `days`; it fixes the ISO year.
fn thursday_of(days: i64) -> i64 {
    days - weekday(days) + 3
}

fn iso_week_oracle(days: i64) -> (i64, u32) {
    let thu = thursday_of(days);
    let (year, _, _) = civil_from_days(thu);
    let ordinal = thu - days_from_civil(year, 1, 1);
    (year, (ordinal / 7 + 1) as u32)
}

fn period_of_day(days: i64) -> Period {
    let (y, w) = iso_week_oracle(days);
    Period::new(y as i32, w).expect("oracle week is valid")
}

fn timestamp_text(secs: i64) -> String {
    let days = secs.div_euclid(86_400);
    let rem = secs.rem_euclid(86_400);
    let (y, m, d) = civil_from_days(days);
    format!(
        "{y:04}-{m:02}-{d:02}T{:02}:{:02}:{:02}Z",
        rem / 3600,
        rem / 60 % 60,
        rem % 60
    )
}

#[test]
fn oracle_agrees_with_known_weeks() {
    assert_eq!(iso_week_oracle(days_from_civil(2022, 6, 22)), (2022, 25));
    assert_eq!(iso_week_oracle(days_from_civil(2021, 1, 3)), (2020, 53));
    assert_eq!(iso_week_oracle(days_from_civil(2024, 12, 30)), (2025, 1));
    assert_eq!(iso_week_oracle(days_from_civil(1970, 1, 1)), (1970, 1));
}

#[test]
fn every_day_from_1970_through_2199() {
    // exhaustive over the supported range, day by day
    for days in 0..MAX_DAY {
        let ts = Timestamp::parse(&timestamp_text(days * 86_400 + 43_200)).unwrap();
        let (y, w) = iso_week_oracle(days);
        assert_eq!(
            compute_period(ts).code(),
            (y as u32) * 100 + w,
            "day {days}"
        );
    }
}

#[test]
fn year_boundary_distance() {
    let a = Period::from_code(202252).unwrap();
    let b = Period::from_code(202301).unwrap();
    assert_eq!(week_distance(a, b), 1);
    let c = Period::from_code(202053).unwrap();
    let d = Period::from_code(202101).unwrap();
    assert_eq!(week_distance(c, d), 1);
}

fn period_strategy() -> impl Strategy<Value = Period> {
    (3i64..MAX_DAY).prop_map(period_of_day)
}

proptest! {
    #[test]
    fn period_and_minute_match_oracle(secs in 0i64..MAX_DAY * 86_400) {
        let text = timestamp_text(secs);
        let ts = Timestamp::parse(&text).unwrap();
        let (y, w) = iso_week_oracle(secs.div_euclid(86_400));
        prop_assert_eq!(compute_period(ts).code(), (y as u32) * 100 + w);
        let minute = compute_minute(ts).get();
        prop_assert_eq!(i64::from(minute), secs.rem_euclid(86_400) / 60);
        prop_assert!(minute <= 1439);
        prop_assert_eq!(ts.to_string(), text);
    }

    #[test]
    fn distance_matches_thursday_arithmetic(a in 3i64..MAX_DAY, b in 3i64..MAX_DAY) {
        let expected = (thursday_of(b) - thursday_of(a)) / 7;
        prop_assert_eq!(week_distance(period_of_day(a), period_of_day(b)), expected);
    }

    #[test]
    fn distance_is_antisymmetric_and_additive(
        a in period_strategy(),
        b in period_strategy(),
        c in period_strategy(),
    ) {
        prop_assert_eq!(week_distance(a, b), -week_distance(b, a));
        prop_assert_eq!(week_distance(a, a), 0);
        prop_assert_eq!(week_distance(a, c), week_distance(a, b) + week_distance(b, c));
    }

    #[test]
    fn code_order_is_chronological(a in period_strategy(), b in period_strategy()) {
        prop_assert_eq!(a.code().cmp(&b.code()), week_distance(b, a).cmp(&0));
    }

    #[test]
    fn insert_keeps_order_and_rejects_exactly_stale_heads(
        start in 2_000i64..80_000,
        offsets in proptest::collection::vec(-60i64..60, 1..40),
        max_gap in 0u32..6,
    ) {
        let mut list: Vec<Period> = Vec::new();
        for off in offsets {
            let p = period_of_day(start + off * 7);
            let before = list.clone();
            let accepted = insert_period(&mut list, p, max_gap);

            prop_assert!(list.windows(2).all(|w| w[0] < w[1]));
            // existing elements untouched and kept in place relative to each other
            let mut it = list.iter();
            prop_assert!(before.iter().all(|old| it.any(|x| x == old)));

            let stale = before
                .first()
                .is_some_and(|&head| p < head && week_distance(p, head) > i64::from(max_gap));
            prop_assert_eq!(!accepted && !before.contains(&p), stale);
            if stale {
                prop_assert_eq!(&list, &before);
            } else {
                prop_assert!(list.contains(&p));
                prop_assert_eq!(list.len(), before.len() + usize::from(!before.contains(&p)));
            }
        }
    }

    #[test]
    fn counting_is_additive_over_disjoint_lists(
        weeks in proptest::collection::btree_map(1u32..53, 0usize..20, 0..30),
        split in proptest::collection::vec(any::<bool>(), 53),
    ) {
        let mut map: EventsByWeek = BTreeMap::new();
        for (w, count) in &weeks {
            let p = Period::new(2015, *w).unwrap();
            map.insert(p, vec![MinuteOfDay::new(600).unwrap(); *count]);
        }
        let all: Vec<Period> = (1..=53).map(|w| Period::new(2015, w).unwrap()).collect();
        let (p1, p2): (Vec<Period>, Vec<Period>) =
            all.iter().partition(|p| split[p.week() as usize - 1]);
        let joined: Vec<Period> = p1.iter().chain(p2.iter()).copied().collect();
        prop_assert_eq!(
            count_events(&map, &joined),
            count_events(&map, &p1) + count_events(&map, &p2)
        );
        prop_assert_eq!(count_events(&map, &all), weeks.values().sum::<usize>());
    }
}
