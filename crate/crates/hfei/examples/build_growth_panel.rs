//! Building the mixed-frequency growth panel from raw observations:
//! bucketing, gap imputation from a monthly anchor, and year-over-year
//! log growth rates.
//!
//! Run with: `cargo run --example build_growth_panel`

use chrono::NaiveDate;
use hfei::panel::{build_panel, parse_metadata, parse_observations, quality_report, yoy_transform};

fn main() -> hfei::Result<()> {
    // Three years of synthetic raw data: a daily flow series (weekly
    // bucket target), its monthly aggregate used as an imputation
    // anchor, and a quarterly series.
    let day0 = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap();
    let mut raw = String::new();
    for day in 0..1095i64 {
        let date = day0 + chrono::Duration::days(day);
        // A missing stretch: no bulletins published for two weeks.
        if (400..414).contains(&day) {
            continue;
        }
        let level = 200.0 + 30.0 * (day as f64 / 365.25 * std::f64::consts::TAU).sin()
            + day as f64 * 0.05;
        raw.push_str(&format!("credit,{date},{level:.3}\n"));
    }
    for month in 0..36u32 {
        let (y, m) = (2018 + month / 12, month % 12 + 1);
        let date = NaiveDate::from_ymd_opt(y as i32, m, 28).unwrap();
        let level = 205.0 + 30.0 * (month as f64 / 12.0 * std::f64::consts::TAU).sin()
            + month as f64 * 1.5;
        raw.push_str(&format!("credit_monthly,{date},{level:.3}\n"));
    }
    for quarter in 0..12u32 {
        let (y, q) = (2018 + quarter / 4, quarter % 4);
        let date = NaiveDate::from_ymd_opt(y as i32, q * 3 + 3, 25).unwrap();
        let level = 1000.0 + quarter as f64 * 12.0;
        raw.push_str(&format!("gdp,{date},{level:.3}\n"));
    }

    let meta = "\
series_id,frequency,kind,zero_fill,anchor
gdp,quarterly,stock,false,
credit,weekly,stock,false,credit_monthly
credit_monthly,monthly,stock,false,
";

    let observations = parse_observations(&raw)?;
    let configs = parse_metadata(meta)?;
    let (panel, quality) = build_panel(&observations, &configs)?;
    print!("{}", quality_report(&quality, &panel));

    let growth = yoy_transform(&panel)?;
    println!("\nseries order: {:?}", growth.meta.iter().map(|m| m.id.as_str()).collect::<Vec<_>>());
    println!("\nfirst defined growth values:");
    for (i, meta) in growth.meta.iter().enumerate() {
        let first = growth.columns[i]
            .iter()
            .enumerate()
            .find(|(_, v)| v.is_finite());
        if let Some((pos, v)) = first {
            println!(
                "  {}: {} at {} ({:.2}% year over year)",
                meta.id,
                v,
                growth.spine[pos],
                v * 100.0
            );
        }
    }
    Ok(())
}
