//! The pseudo-week calendar: mapping dates to stamps and aggregating
//! irregular daily observations into weekly buckets.
//!
//! Run with: `cargo run --example calendar_pseudo_weeks`

use chrono::NaiveDate;
use hfei::calendar::{
    aggregate_daily, spine, stamp_index, stamp_of_date, DailyRecord, PseudoWeekStamp, SeriesKind,
};

fn main() -> hfei::Result<()> {
    // Every month splits into four fixed buckets: days 1-7, 8-14,
    // 15-21, and 22 to the end of the month.
    for day in [1u32, 7, 8, 21, 22, 29] {
        let date = NaiveDate::from_ymd_opt(2024, 2, day).unwrap();
        println!("{date} -> {}", stamp_of_date(date));
    }

    // 48 stamps per year, 12 per quarter, 4 per month.
    let origin = PseudoWeekStamp::new(2020, 1, 1)?;
    for (label, stamp) in [
        ("one month later ", PseudoWeekStamp::new(2020, 2, 1)?),
        ("one quarter later", PseudoWeekStamp::new(2020, 4, 1)?),
        ("one year later   ", PseudoWeekStamp::new(2021, 1, 1)?),
    ] {
        println!("{label}: index {}", stamp_index(stamp, origin)?);
    }

    // Stock series average within a bucket, flow series sum; empty
    // buckets of a zero-filled flow series become genuine zeros.
    let records: Vec<DailyRecord> = [
        (NaiveDate::from_ymd_opt(2024, 3, 4).unwrap(), 10.0),
        (NaiveDate::from_ymd_opt(2024, 3, 6).unwrap(), 14.0),
        // nothing recorded in week 2
        (NaiveDate::from_ymd_opt(2024, 3, 18).unwrap(), 30.0),
        (NaiveDate::from_ymd_opt(2024, 3, 25).unwrap(), 8.0),
    ]
    .into_iter()
    .map(|(date, value)| DailyRecord { date, value })
    .collect();

    let stock = aggregate_daily(&records, SeriesKind::Stock, false);
    let flow = aggregate_daily(&records, SeriesKind::Flow, true);
    println!("\nbucket     stock(mean)  flow(sum, zero-filled)");
    for stamp in spine(
        PseudoWeekStamp::new(2024, 3, 1)?,
        PseudoWeekStamp::new(2024, 3, 4)?,
    ) {
        let s = stock
            .get(&stamp)
            .map(|v| format!("{v:>6.1}"))
            .unwrap_or_else(|| "  miss".into());
        let f = flow
            .get(&stamp)
            .map(|v| format!("{v:>6.1}"))
            .unwrap_or_else(|| "  miss".into());
        println!("{stamp}   {s}       {f}");
    }
    Ok(())
}
