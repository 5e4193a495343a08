//! The pseudo-week calendar.
//!
//! Each calendar month is split into four fixed buckets (days 1–7, 8–14,
//! 15–21, 22–end), so every month has exactly 4 pseudo-weeks, every
//! quarter 12, and every year 48. The fourth bucket absorbs the variable
//! tail of the month (7–10 days). Irregularly spaced daily observations
//! are aggregated into these buckets: stock series by the within-bucket
//! mean, flow series by the within-bucket sum.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{Datelike, NaiveDate};

use crate::error::{Error, Result};

/// Number of pseudo-weeks per year.
pub const WEEKS_PER_YEAR: usize = 48;
/// Number of pseudo-weeks per quarter.
pub const WEEKS_PER_QUARTER: usize = 12;
/// Number of pseudo-weeks per month.
pub const WEEKS_PER_MONTH: usize = 4;

/// A point on the 48-weeks-per-year pseudo-week calendar.
///
/// Ordering is lexicographic in `(year, month, week)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PseudoWeekStamp {
    year: i32,
    month: u32,
    week: u32,
}

impl PseudoWeekStamp {
    /// Builds a stamp, validating `month ∈ 1..=12` and `week ∈ 1..=4`.
    pub fn new(year: i32, month: u32, week: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::Input(format!("month {month} out of range 1..=12")));
        }
        if !(1..=4).contains(&week) {
            return Err(Error::Input(format!("week {week} out of range 1..=4")));
        }
        Ok(Self { year, month, week })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> u32 {
        self.month
    }

    pub fn week(&self) -> u32 {
        self.week
    }

    /// The stamp immediately after this one.
    pub fn next(&self) -> Self {
        let (mut y, mut m, mut w) = (self.year, self.month, self.week);
        w += 1;
        if w > 4 {
            w = 1;
            m += 1;
            if m > 12 {
                m = 1;
                y += 1;
            }
        }
        Self {
            year: y,
            month: m,
            week: w,
        }
    }

    /// The stamp `steps` positions after this one.
    pub fn advance(&self, steps: usize) -> Self {
        let total = self.linear() + steps as i64;
        Self::from_linear(total)
    }

    /// First calendar day covered by this pseudo-week (day 1, 8, 15 or 22).
    pub fn first_day(&self) -> NaiveDate {
        let day = [1, 8, 15, 22][(self.week - 1) as usize];
        NaiveDate::from_ymd_opt(self.year, self.month, day)
            .expect("stamp fields validated on construction")
    }

    /// True for the last pseudo-week of a month.
    pub fn is_month_end(&self) -> bool {
        self.week == 4
    }

    /// True for the last pseudo-week of a quarter-ending month.
    pub fn is_quarter_end(&self) -> bool {
        self.week == 4 && matches!(self.month, 3 | 6 | 9 | 12)
    }

    fn linear(&self) -> i64 {
        self.year as i64 * 48 + (self.month as i64 - 1) * 4 + (self.week as i64 - 1)
    }

    fn from_linear(v: i64) -> Self {
        let year = v.div_euclid(48);
        let rem = v.rem_euclid(48);
        Self {
            year: year as i32,
            month: (rem / 4 + 1) as u32,
            week: (rem % 4 + 1) as u32,
        }
    }
}

impl fmt::Display for PseudoWeekStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}w{}", self.year, self.month, self.week)
    }
}

/// Whether a series measures a level at a point in time or activity
/// accumulated over time. The two aggregate differently within a bucket.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesKind {
    Stock,
    Flow,
}

/// One raw observation: a calendar date and a value. Dates need not be
/// equally spaced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DailyRecord {
    pub date: NaiveDate,
    pub value: f64,
}

/// Maps a calendar date to its pseudo-week: days 1–7 → week 1, 8–14 →
/// week 2, 15–21 → week 3, 22–end → week 4.
pub fn stamp_of_date(date: NaiveDate) -> PseudoWeekStamp {
    let week = match date.day() {
        1..=7 => 1,
        8..=14 => 2,
        15..=21 => 3,
        _ => 4,
    };
    PseudoWeekStamp {
        year: date.year(),
        month: date.month(),
        week,
    }
}

/// Position of `stamp` on the weekly spine anchored at `origin`:
/// `48·Δyear + 4·Δmonth + Δweek`. The origin itself maps to 0 and
/// consecutive stamps differ by 1.
pub fn stamp_index(stamp: PseudoWeekStamp, origin: PseudoWeekStamp) -> Result<usize> {
    if stamp < origin {
        return Err(Error::Ordering(format!(
            "stamp {stamp} precedes origin {origin}"
        )));
    }
    Ok((stamp.linear() - origin.linear()) as usize)
}

/// Aggregates irregular daily records into pseudo-weekly buckets.
///
/// Stock series take the within-bucket mean, flow series the
/// within-bucket sum. Buckets between the first and last record that
/// received no records are filled with 0 when `kind` is `Flow` and
/// `zero_fill` is set (days without recorded transactions are genuine
/// zeros for such series); otherwise they are simply absent from the map.
pub fn aggregate_daily(
    records: &[DailyRecord],
    kind: SeriesKind,
    zero_fill: bool,
) -> BTreeMap<PseudoWeekStamp, f64> {
    let mut sums: BTreeMap<PseudoWeekStamp, (f64, usize)> = BTreeMap::new();
    for rec in records {
        let entry = sums.entry(stamp_of_date(rec.date)).or_insert((0.0, 0));
        entry.0 += rec.value;
        entry.1 += 1;
    }

    let mut out: BTreeMap<PseudoWeekStamp, f64> = sums
        .iter()
        .map(|(&stamp, &(sum, count))| {
            let v = match kind {
                SeriesKind::Stock => sum / count as f64,
                SeriesKind::Flow => sum,
            };
            (stamp, v)
        })
        .collect();

    if zero_fill && kind == SeriesKind::Flow && !out.is_empty() {
        let first = *out.keys().next().unwrap();
        let last = *out.keys().next_back().unwrap();
        let mut stamp = first;
        while stamp <= last {
            out.entry(stamp).or_insert(0.0);
            stamp = stamp.next();
        }
    }

    out
}

/// All stamps from `first` to `last`, inclusive.
pub fn spine(first: PseudoWeekStamp, last: PseudoWeekStamp) -> Vec<PseudoWeekStamp> {
    let mut out = Vec::new();
    let mut stamp = first;
    while stamp <= last {
        out.push(stamp);
        stamp = stamp.next();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn st(y: i32, m: u32, w: u32) -> PseudoWeekStamp {
        PseudoWeekStamp::new(y, m, w).unwrap()
    }

    #[test]
    fn stamp_of_date_examples() {
        assert_eq!(stamp_of_date(d(2020, 3, 5)), st(2020, 3, 1));
        assert_eq!(stamp_of_date(d(2020, 2, 29)), st(2020, 2, 4));
        assert_eq!(stamp_of_date(d(2024, 12, 21)), st(2024, 12, 3));
    }

    #[test]
    fn stamp_index_examples() {
        let origin = st(2004, 1, 1);
        assert_eq!(stamp_index(origin, origin).unwrap(), 0);
        assert_eq!(stamp_index(st(2005, 1, 1), origin).unwrap(), 48);
        assert_eq!(stamp_index(st(2004, 4, 1), origin).unwrap(), 12);
    }

    #[test]
    fn stamp_index_rejects_reversed_order() {
        let err = stamp_index(st(2004, 1, 1), st(2004, 1, 2)).unwrap_err();
        assert!(matches!(err, Error::Ordering(_)));
    }

    #[test]
    fn invalid_stamp_fields() {
        assert!(PseudoWeekStamp::new(2020, 13, 1).is_err());
        assert!(PseudoWeekStamp::new(2020, 0, 1).is_err());
        assert!(PseudoWeekStamp::new(2020, 6, 5).is_err());
        assert!(PseudoWeekStamp::new(2020, 6, 0).is_err());
    }

    #[test]
    fn aggregate_stock_means_within_bucket() {
        let recs = [
            DailyRecord {
                date: d(2020, 1, 2),
                value: 2.0,
            },
            DailyRecord {
                date: d(2020, 1, 5),
                value: 4.0,
            },
        ];
        let out = aggregate_daily(&recs, SeriesKind::Stock, false);
        assert_eq!(out[&st(2020, 1, 1)], 3.0);
    }

    #[test]
    fn aggregate_flow_sums_within_bucket() {
        let recs = [
            DailyRecord {
                date: d(2020, 1, 2),
                value: 2.0,
            },
            DailyRecord {
                date: d(2020, 1, 5),
                value: 4.0,
            },
        ];
        let out = aggregate_daily(&recs, SeriesKind::Flow, false);
        assert_eq!(out[&st(2020, 1, 1)], 6.0);
    }

    #[test]
    fn aggregate_flow_zero_fills_empty_buckets() {
        // Records in week 1 and week 3; week 2 has no transactions.
        let recs = [
            DailyRecord {
                date: d(2020, 1, 2),
                value: 1.0,
            },
            DailyRecord {
                date: d(2020, 1, 16),
                value: 5.0,
            },
        ];
        let filled = aggregate_daily(&recs, SeriesKind::Flow, true);
        assert_eq!(filled[&st(2020, 1, 2)], 0.0);
        let unfilled = aggregate_daily(&recs, SeriesKind::Flow, false);
        assert!(!unfilled.contains_key(&st(2020, 1, 2)));
    }

    #[test]
    fn aggregate_empty_input() {
        assert!(aggregate_daily(&[], SeriesKind::Flow, true).is_empty());
        assert!(aggregate_daily(&[], SeriesKind::Stock, false).is_empty());
    }

    #[test]
    fn every_month_has_four_buckets_and_every_day_is_covered() {
        for year in [2020, 2021, 2024] {
            for month in 1..=12 {
                let mut seen = [0usize; 4];
                for day in 1..=31 {
                    let Some(date) = NaiveDate::from_ymd_opt(year, month, day) else {
                        continue;
                    };
                    let stamp = stamp_of_date(date);
                    assert_eq!(stamp.year(), year);
                    assert_eq!(stamp.month(), month);
                    seen[(stamp.week() - 1) as usize] += 1;
                }
                assert_eq!(seen[0], 7);
                assert_eq!(seen[1], 7);
                assert_eq!(seen[2], 7);
                assert!(seen[3] >= 7 && seen[3] <= 10);
            }
        }
    }

    #[test]
    fn spine_lengths() {
        assert_eq!(spine(st(2010, 1, 1), st(2010, 12, 4)).len(), 48);
        assert_eq!(spine(st(2010, 1, 1), st(2010, 3, 4)).len(), 12);
        assert_eq!(spine(st(2010, 5, 1), st(2010, 5, 4)).len(), 4);
    }

    proptest! {
        #[test]
        fn index_is_a_bijection_on_stamps_after_origin(
            oy in 1990i32..2030, om in 1u32..=12, ow in 1u32..=4, steps in 0usize..500,
        ) {
            let origin = st(oy, om, ow);
            let stamp = origin.advance(steps);
            prop_assert_eq!(stamp_index(stamp, origin).unwrap(), steps);
            prop_assert_eq!(stamp_index(stamp.next(), origin).unwrap(), steps + 1);
        }

        #[test]
        fn stock_mean_invariant_to_duplicating_records(
            values in prop::collection::vec(-1e3f64..1e3, 1..20),
        ) {
            let recs: Vec<DailyRecord> = values
                .iter()
                .map(|&v| DailyRecord { date: d(2020, 6, 3), value: v })
                .collect();
            let doubled: Vec<DailyRecord> =
                recs.iter().chain(recs.iter()).copied().collect();
            let one = aggregate_daily(&recs, SeriesKind::Stock, false);
            let two = aggregate_daily(&doubled, SeriesKind::Stock, false);
            let a = one[&st(2020, 6, 1)];
            let b = two[&st(2020, 6, 1)];
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }

        #[test]
        fn flow_sum_is_additive_over_record_splits(
            values in prop::collection::vec(-1e3f64..1e3, 2..20),
            split in 1usize..19,
        ) {
            let split = split.min(values.len() - 1);
            let recs: Vec<DailyRecord> = values
                .iter()
                .map(|&v| DailyRecord { date: d(2020, 6, 10), value: v })
                .collect();
            let whole = aggregate_daily(&recs, SeriesKind::Flow, false)[&st(2020, 6, 2)];
            let left = aggregate_daily(&recs[..split], SeriesKind::Flow, false)[&st(2020, 6, 2)];
            let right = aggregate_daily(&recs[split..], SeriesKind::Flow, false)[&st(2020, 6, 2)];
            prop_assert!((whole - (left + right)).abs() <= 1e-9 * (1.0 + whole.abs()));
        }
    }
}
