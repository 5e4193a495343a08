//! The publishable weekly index: the factor rescaled to the sample mean
//! and standard deviation of observed GDP growth, with 68% credible
//! bands, plus the delimited exports downstream charting consumes.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::calendar::PseudoWeekStamp;
use crate::error::{Error, Result};
use crate::panel::fmt_f64;

/// Scaled index with per-stamp posterior summaries.
#[derive(Clone, Debug)]
pub struct IndexSeries {
    pub stamps: Vec<PseudoWeekStamp>,
    pub mean: Vec<f64>,
    pub median: Vec<f64>,
    pub p16: Vec<f64>,
    pub p84: Vec<f64>,
}

fn sample_mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / (n - 1.0);
    (mean, var.sqrt())
}

/// Linear-interpolation quantile of a sorted slice.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Rescales factor draws so the posterior-mean path matches the sample
/// mean and standard deviation of observed GDP growth, then summarises
/// each stamp across the transformed draws.
///
/// Every draw goes through the same affine map
/// `x ↦ m_g + s_g (x − m_f)/s_f`, where `(m_f, s_f)` are the
/// posterior-mean path's sample moments, so the credible bands scale
/// coherently with the path.
pub fn scale_index(
    factor_draws: &Array2<f64>,
    stamps: &[PseudoWeekStamp],
    gdp_growth: &[f64],
) -> Result<IndexSeries> {
    let kept = factor_draws.nrows();
    let t_len = factor_draws.ncols();
    if stamps.len() != t_len {
        return Err(Error::Build(format!(
            "{} stamps for {} factor positions",
            stamps.len(),
            t_len
        )));
    }
    if kept == 0 {
        return Err(Error::InsufficientData("no factor draws".into()));
    }
    if gdp_growth.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "index scaling needs at least 8 GDP growth observations, got {}",
            gdp_growth.len()
        )));
    }
    let mean_path: Vec<f64> = (0..t_len)
        .map(|t| factor_draws.column(t).sum() / kept as f64)
        .collect();
    let (m_f, s_f) = sample_mean_std(&mean_path);
    if !(s_f.is_finite() && s_f > 0.0) {
        return Err(Error::Numeric(
            "factor path has zero variance; cannot scale".into(),
        ));
    }
    let (m_g, s_g) = sample_mean_std(gdp_growth);
    let rescale = |x: f64| m_g + s_g * (x - m_f) / s_f;

    let mut out = IndexSeries {
        stamps: stamps.to_vec(),
        mean: Vec::with_capacity(t_len),
        median: Vec::with_capacity(t_len),
        p16: Vec::with_capacity(t_len),
        p84: Vec::with_capacity(t_len),
    };
    let mut column = vec![0.0; kept];
    for t in 0..t_len {
        for (k, v) in column.iter_mut().enumerate() {
            *v = rescale(factor_draws[[k, t]]);
        }
        out.mean.push(column.iter().sum::<f64>() / kept as f64);
        column.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
        out.p16.push(quantile_sorted(&column, 0.16));
        out.median.push(quantile_sorted(&column, 0.5));
        out.p84.push(quantile_sorted(&column, 0.84));
    }
    Ok(out)
}

/// Writes the index table: `date,week,mean,median,p16,p84`, dates being
/// the first calendar day of each pseudo-week.
pub fn write_index(series: &IndexSeries, path: &Path) -> Result<()> {
    let mut out = String::from("date,week,mean,median,p16,p84\n");
    for (pos, stamp) in series.stamps.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            stamp.first_day(),
            stamp.week(),
            fmt_f64(series.mean[pos]),
            fmt_f64(series.median[pos]),
            fmt_f64(series.p16[pos]),
            fmt_f64(series.p84[pos]),
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads an index table written by [`write_index`].
pub fn read_index(path: &Path) -> Result<IndexSeries> {
    let text = std::fs::read_to_string(path)?;
    let mut out = IndexSeries {
        stamps: Vec::new(),
        mean: Vec::new(),
        median: Vec::new(),
        p16: Vec::new(),
        p84: Vec::new(),
    };
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 6 {
            return Err(Error::Input(format!(
                "index line {}: expected 6 fields",
                lineno + 1
            )));
        }
        let date: chrono::NaiveDate = parts[0]
            .parse()
            .map_err(|_| Error::Input(format!("index line {}: bad date", lineno + 1)))?;
        out.stamps.push(crate::calendar::stamp_of_date(date));
        let cell = |k: usize| -> Result<f64> {
            parts[k]
                .trim()
                .parse()
                .map_err(|_| Error::Input(format!("index line {}: bad value", lineno + 1)))
        };
        out.mean.push(cell(2)?);
        out.median.push(cell(3)?);
        out.p16.push(cell(4)?);
        out.p84.push(cell(5)?);
    }
    Ok(out)
}

/// Writes the companion table aligning observed quarterly GDP growth to
/// quarter-end stamps for plotting against the index.
pub fn write_gdp_companion(
    stamps: &[PseudoWeekStamp],
    gdp_column: &[f64],
    path: &Path,
) -> Result<()> {
    let mut out = String::from("date,week,gdp_growth\n");
    for (pos, stamp) in stamps.iter().enumerate() {
        if gdp_column[pos].is_finite() {
            let _ = writeln!(
                out,
                "{},{},{}",
                stamp.first_day(),
                stamp.week(),
                fmt_f64(gdp_column[pos])
            );
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn stamps(n: usize) -> Vec<PseudoWeekStamp> {
        let start = PseudoWeekStamp::new(2012, 1, 1).unwrap();
        (0..n).map(|k| start.advance(k)).collect()
    }

    fn fake_draws(kept: usize, t_len: usize) -> Array2<f64> {
        let mut draws = Array2::<f64>::zeros((kept, t_len));
        for k in 0..kept {
            for t in 0..t_len {
                draws[[k, t]] = (t as f64 * 0.37).sin() + 0.01 * k as f64
                    + 0.3 * ((k * 7 + t * 3) % 11) as f64 / 11.0;
            }
        }
        draws
    }

    #[test]
    fn scaled_mean_path_matches_gdp_moments() {
        let draws = fake_draws(40, 96);
        let gdp: Vec<f64> = (0..12).map(|k| 0.02 + 0.015 * (k as f64 * 0.8).sin()).collect();
        let series = scale_index(&draws, &stamps(96), &gdp).unwrap();
        let (m, s) = sample_mean_std(&series.mean);
        let (mg, sg) = sample_mean_std(&gdp);
        assert_abs_diff_eq!(m, mg, epsilon = 1e-10);
        assert_abs_diff_eq!(s, sg, epsilon = 1e-10);
    }

    #[test]
    fn trough_location_is_invariant_under_scaling() {
        let draws = fake_draws(25, 96);
        let kept = draws.nrows();
        let unscaled_mean: Vec<f64> = (0..96)
            .map(|t| draws.column(t).sum() / kept as f64)
            .collect();
        let trough = unscaled_mean
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(t, _)| t)
            .unwrap();
        let gdp: Vec<f64> = (0..10).map(|k| 0.03 + 0.02 * (k as f64).cos()).collect();
        let series = scale_index(&draws, &stamps(96), &gdp).unwrap();
        let scaled_trough = series
            .mean
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(t, _)| t)
            .unwrap();
        assert_eq!(trough, scaled_trough);
    }

    #[test]
    fn standardized_factor_gets_exact_affine_form() {
        // A standardized posterior-mean path maps to m_g + s_g * factor.
        let t_len = 200;
        let mut raw: Vec<f64> = (0..t_len).map(|t| (t as f64 * 0.11).sin()).collect();
        let (m, s) = sample_mean_std(&raw);
        for v in raw.iter_mut() {
            *v = (*v - m) / s;
        }
        let mut draws = Array2::<f64>::zeros((1, t_len));
        for t in 0..t_len {
            draws[[0, t]] = raw[t];
        }
        let gdp: Vec<f64> = (0..16).map(|k| 0.03 + 0.02 * (k as f64 * 1.3).sin()).collect();
        let (mg, sg) = sample_mean_std(&gdp);
        let series = scale_index(&draws, &stamps(t_len), &gdp).unwrap();
        for t in 0..t_len {
            assert_abs_diff_eq!(series.mean[t], mg + sg * raw[t], epsilon = 1e-12);
        }
    }

    #[test]
    fn needs_eight_gdp_observations_and_variance() {
        let draws = fake_draws(5, 60);
        let gdp = vec![0.02; 7];
        assert!(matches!(
            scale_index(&draws, &stamps(60), &gdp),
            Err(Error::InsufficientData(_))
        ));
        let flat = Array2::<f64>::ones((5, 60));
        let gdp = vec![0.02; 12];
        assert!(matches!(
            scale_index(&flat, &stamps(60), &gdp),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn export_roundtrips_bit_for_bit() {
        let dir = tempfile::tempdir().unwrap();
        let draws = fake_draws(30, 48);
        let gdp: Vec<f64> = (0..9).map(|k| 0.01 * k as f64 - 0.03).collect();
        let series = scale_index(&draws, &stamps(48), &gdp).unwrap();
        let path = dir.path().join("index.csv");
        write_index(&series, &path).unwrap();
        let back = read_index(&path).unwrap();
        assert_eq!(back.stamps, series.stamps);
        for t in 0..48 {
            assert_eq!(back.mean[t].to_bits(), series.mean[t].to_bits());
            assert_eq!(back.median[t].to_bits(), series.median[t].to_bits());
            assert_eq!(back.p16[t].to_bits(), series.p16[t].to_bits());
            assert_eq!(back.p84[t].to_bits(), series.p84[t].to_bits());
        }
    }

    proptest! {
        #[test]
        fn bands_are_ordered_and_affine_equivariant(
            shift in -0.5f64..0.5, spread in 0.01f64..0.05,
        ) {
            let draws = fake_draws(20, 30);
            let gdp: Vec<f64> = (0..10)
                .map(|k| shift + spread * (k as f64 * 0.9).sin())
                .collect();
            prop_assume!(sample_mean_std(&gdp).1 > 1e-9);
            let series = scale_index(&draws, &stamps(30), &gdp).unwrap();
            for t in 0..30 {
                prop_assert!(series.p16[t] <= series.median[t] + 1e-12);
                prop_assert!(series.median[t] <= series.p84[t] + 1e-12);
            }
            // Affine equivariance: scaling the GDP target rescales the
            // quantiles by exactly the same affine map.
            let gdp2: Vec<f64> = gdp.iter().map(|g| 2.0 * g + 0.1).collect();
            let series2 = scale_index(&draws, &stamps(30), &gdp2).unwrap();
            for t in 0..30 {
                prop_assert!((series2.median[t] - (2.0 * series.median[t] + 0.1)).abs() < 1e-9);
                prop_assert!((series2.p16[t] - (2.0 * series.p16[t] + 0.1)).abs() < 1e-9);
                prop_assert!((series2.p84[t] - (2.0 * series.p84[t] + 0.1)).abs() < 1e-9);
            }
        }
    }
}
