//! The unbalanced mixed-frequency panel.
//!
//! Raw observations arrive as `series_id, date, value` rows plus a
//! metadata sidecar naming each series' frequency, stock/flow kind, and
//! zero-fill behaviour. Daily rows of weekly series are bucketed by the
//! pseudo-week calendar; monthly and quarterly observations attach to
//! the fourth pseudo-week of their month (the twelfth of their quarter).
//! Weekly gaps can be imputed from a monthly anchor series and by
//! neighbour averaging, sparse monthly series can be filled from a dense
//! proxy through a least-squares relation with a structural-break dummy,
//! and the assembled level panel is converted to year-over-year log
//! growth rates (lag 48 on the weekly spine for every frequency, which
//! is one year of pseudo-weeks).
//!
//! Missing values are represented by NaN throughout.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use ndarray::Array2;

use crate::calendar::{
    aggregate_daily, spine, stamp_index, stamp_of_date, DailyRecord, PseudoWeekStamp, SeriesKind,
};
use crate::error::{Error, Result};
use crate::statespace::FreqClass;

/// Static description of one series.
#[derive(Clone, Debug)]
pub struct SeriesMeta {
    pub id: String,
    pub frequency: FreqClass,
    pub kind: SeriesKind,
    pub first_obs: PseudoWeekStamp,
    /// Empty buckets of a flow series are genuine zeros.
    pub zero_fill: bool,
}

/// The level panel on the weekly spine, series ordered quarterly,
/// monthly, weekly.
#[derive(Clone, Debug)]
pub struct MixedPanel {
    pub spine: Vec<PseudoWeekStamp>,
    /// One column per series, aligned to the spine; NaN marks missing.
    pub columns: Vec<Vec<f64>>,
    pub meta: Vec<SeriesMeta>,
}

/// Year-over-year log growth panel, same shape as the level panel.
#[derive(Clone, Debug)]
pub struct GrowthPanel {
    pub spine: Vec<PseudoWeekStamp>,
    pub columns: Vec<Vec<f64>>,
    pub meta: Vec<SeriesMeta>,
    /// Per-series mean subtracted by [`GrowthPanel::demean`]; zero until
    /// demeaning runs.
    pub means: Vec<f64>,
}

/// What the imputation pass did to one weekly column.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ImputationLog {
    /// Spine positions filled from the monthly anchor.
    pub anchored: Vec<usize>,
    /// Spine positions filled by neighbour averaging.
    pub averaged: Vec<usize>,
    /// Spine positions that stayed missing for lack of a neighbour.
    pub unfilled: Vec<usize>,
}

impl MixedPanel {
    /// Assembles a panel, reordering series quarterly → monthly → weekly
    /// (stable within class) and validating observation timing.
    pub fn new(
        spine_stamps: Vec<PseudoWeekStamp>,
        mut series: Vec<(SeriesMeta, Vec<f64>)>,
    ) -> Result<Self> {
        if spine_stamps.is_empty() {
            return Err(Error::Input("empty panel spine".into()));
        }
        let mut ids = std::collections::BTreeSet::new();
        for (meta, _) in &series {
            if !ids.insert(meta.id.clone()) {
                return Err(Error::Input(format!("duplicate series id '{}'", meta.id)));
            }
        }
        let class_rank = |f: FreqClass| match f {
            FreqClass::Quarterly => 0,
            FreqClass::Monthly => 1,
            FreqClass::Weekly => 2,
        };
        series.sort_by_key(|(meta, _)| class_rank(meta.frequency));
        for (meta, column) in &series {
            if column.len() != spine_stamps.len() {
                return Err(Error::Input(format!(
                    "series '{}' has {} values for a spine of {}",
                    meta.id,
                    column.len(),
                    spine_stamps.len()
                )));
            }
            for (pos, v) in column.iter().enumerate() {
                if v.is_nan() {
                    continue;
                }
                let stamp = spine_stamps[pos];
                let ok = match meta.frequency {
                    FreqClass::Weekly => true,
                    FreqClass::Monthly => stamp.is_month_end(),
                    FreqClass::Quarterly => stamp.is_quarter_end(),
                };
                if !ok {
                    return Err(Error::Input(format!(
                        "series '{}' has a value at {} which is not a period-end stamp",
                        meta.id, stamp
                    )));
                }
            }
        }
        let (meta, columns) = series.into_iter().unzip();
        Ok(Self {
            spine: spine_stamps,
            columns,
            meta,
        })
    }

    pub fn n_series(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.spine.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spine.is_empty()
    }

    pub fn series_index(&self, id: &str) -> Option<usize> {
        self.meta.iter().position(|m| m.id == id)
    }
}

impl GrowthPanel {
    pub fn n_series(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.spine.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spine.is_empty()
    }

    pub fn series_index(&self, id: &str) -> Option<usize> {
        self.meta.iter().position(|m| m.id == id)
    }

    /// Count of series per frequency class, in panel order.
    pub fn counts(&self) -> (usize, usize, usize) {
        let n_q = self
            .meta
            .iter()
            .filter(|m| m.frequency == FreqClass::Quarterly)
            .count();
        let n_m = self
            .meta
            .iter()
            .filter(|m| m.frequency == FreqClass::Monthly)
            .count();
        (n_q, n_m, self.n_series() - n_q - n_m)
    }

    /// The n × T data matrix the filter consumes.
    pub fn data_matrix(&self) -> Array2<f64> {
        let n = self.n_series();
        let t_len = self.len();
        let mut m = Array2::<f64>::from_elem((n, t_len), f64::NAN);
        for (i, col) in self.columns.iter().enumerate() {
            for (t, v) in col.iter().enumerate() {
                m[[i, t]] = *v;
            }
        }
        m
    }

    /// Subtracts each series' observed mean in place and records it.
    pub fn demean(&mut self) {
        for (i, col) in self.columns.iter_mut().enumerate() {
            let (mut sum, mut count) = (0.0, 0usize);
            for v in col.iter() {
                if v.is_finite() {
                    sum += *v;
                    count += 1;
                }
            }
            if count == 0 {
                continue;
            }
            let mean = sum / count as f64;
            for v in col.iter_mut() {
                if v.is_finite() {
                    *v -= mean;
                }
            }
            self.means[i] += mean;
        }
    }

    /// Observed (stamp position, value) pairs of one series.
    pub fn observed(&self, series: usize) -> Vec<(usize, f64)> {
        self.columns[series]
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(t, v)| (t, *v))
            .collect()
    }
}

/// Year-over-year log growth: value at spine position t is
/// `ln y_t − ln y_{t−48}` wherever both levels are observed. Monthly and
/// quarterly series sit on period-end stamps, so 48 spine steps is one
/// year for every frequency. Fails on a non-positive observed level.
pub fn yoy_transform(panel: &MixedPanel) -> Result<GrowthPanel> {
    let t_len = panel.len();
    let mut columns = Vec::with_capacity(panel.n_series());
    for (meta, col) in panel.meta.iter().zip(&panel.columns) {
        for (pos, v) in col.iter().enumerate() {
            if v.is_finite() && *v <= 0.0 {
                return Err(Error::Transform {
                    series: meta.id.clone(),
                    stamp: panel.spine[pos].to_string(),
                    value: *v,
                });
            }
        }
        let mut growth = vec![f64::NAN; t_len];
        for t in 48..t_len {
            let now = col[t];
            let ago = col[t - 48];
            if now.is_finite() && ago.is_finite() {
                growth[t] = now.ln() - ago.ln();
            }
        }
        columns.push(growth);
    }
    let n = panel.n_series();
    Ok(GrowthPanel {
        spine: panel.spine.clone(),
        columns,
        meta: panel.meta.clone(),
        means: vec![0.0; n],
    })
}

/// Fills gaps in a weekly column.
///
/// First pass: a missing fourth-week value whose monthly anchor is
/// observed takes the anchor value. Second pass: every remaining gap
/// with an observed value on both sides takes the mean of the nearest
/// preceding and following observations. Gaps at the series boundary
/// keep missing and are reported. Only positions inside the observed
/// span of the column are touched.
pub fn impute_weekly_gaps(
    spine_stamps: &[PseudoWeekStamp],
    weekly: &[f64],
    monthly_anchor: Option<&[f64]>,
) -> (Vec<f64>, ImputationLog) {
    let mut out = weekly.to_vec();
    let mut log = ImputationLog::default();
    let first = weekly.iter().position(|v| v.is_finite());
    let last = weekly.iter().rposition(|v| v.is_finite());
    let (Some(first), Some(last)) = (first, last) else {
        return (out, log);
    };

    if let Some(anchor) = monthly_anchor {
        for pos in first..=last {
            if out[pos].is_nan() && spine_stamps[pos].is_month_end() && anchor[pos].is_finite() {
                out[pos] = anchor[pos];
                log.anchored.push(pos);
            }
        }
    }

    let snapshot = out.clone();
    for pos in first..=last {
        if !snapshot[pos].is_nan() {
            continue;
        }
        let prev = snapshot[..pos].iter().rposition(|v| v.is_finite());
        let next = snapshot[pos + 1..]
            .iter()
            .position(|v| v.is_finite())
            .map(|o| pos + 1 + o);
        match (prev, next) {
            (Some(p), Some(n)) => {
                out[pos] = 0.5 * (snapshot[p] + snapshot[n]);
                log.averaged.push(pos);
            }
            _ => log.unfilled.push(pos),
        }
    }
    (out, log)
}

/// Fills missing entries of a sparse column from a dense proxy.
///
/// Fits `target = a + b·proxy + c·1{t ≥ break}` by least squares on the
/// positions where both are observed, then writes fitted values into the
/// missing target positions (observed values pass through unchanged).
/// The break dummy is dropped when it does not vary over the fitted
/// positions. Needs at least 4 observed pairs.
pub fn proxy_interpolate(target: &[f64], proxy: &[f64], break_pos: usize) -> Result<Vec<f64>> {
    let pairs: Vec<usize> = (0..target.len())
        .filter(|&t| target[t].is_finite() && proxy[t].is_finite())
        .collect();
    if pairs.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "proxy interpolation needs at least 4 observed pairs, got {}",
            pairs.len()
        )));
    }
    let dummy = |t: usize| if t >= break_pos { 1.0 } else { 0.0 };
    let dummy_varies = {
        let first = dummy(pairs[0]);
        pairs.iter().any(|&t| dummy(t) != first)
    };
    let k = if dummy_varies { 3 } else { 2 };
    let mut xtx = Array2::<f64>::zeros((k, k));
    let mut xty = ndarray::Array1::<f64>::zeros(k);
    for &t in &pairs {
        let row = if dummy_varies {
            vec![1.0, proxy[t], dummy(t)]
        } else {
            vec![1.0, proxy[t]]
        };
        for a in 0..k {
            xty[a] += row[a] * target[t];
            for b in 0..=a {
                xtx[[a, b]] += row[a] * row[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            xtx[[b, a]] = xtx[[a, b]];
        }
    }
    // A touch of ridge keeps a collinear proxy from aborting the fill.
    for a in 0..k {
        xtx[[a, a]] += 1e-10;
    }
    let beta = crate::linalg::solve_spd(&xtx, &xty)
        .map_err(|e| Error::Numeric(format!("proxy regression: {e}")))?;
    let mut out = target.to_vec();
    for t in 0..target.len() {
        if out[t].is_nan() && proxy[t].is_finite() {
            let mut fit = beta[0] + beta[1] * proxy[t];
            if dummy_varies {
                fit += beta[2] * dummy(t);
            }
            out[t] = fit;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Raw input parsing and panel assembly
// ---------------------------------------------------------------------------

/// One parsed metadata row.
#[derive(Clone, Debug)]
pub struct SeriesConfig {
    pub id: String,
    pub frequency: FreqClass,
    pub kind: SeriesKind,
    pub zero_fill: bool,
    /// Optional monthly anchor series for weekly gap imputation.
    pub anchor: Option<String>,
    /// Optional proxy series plus break date for interpolation of sparse
    /// monthly targets.
    pub proxy: Option<(String, NaiveDate)>,
}

/// Per-series ingestion notes for the data-quality report.
#[derive(Clone, Debug, Default)]
pub struct SeriesQuality {
    pub id: String,
    pub n_raw: usize,
    pub n_observed: usize,
    pub n_gaps_in_span: usize,
    pub imputed_anchor: usize,
    pub imputed_average: usize,
    pub unfilled: usize,
    pub proxy_filled: usize,
}

/// Parses the observation file: one `series_id,date,value` row per
/// observation, ISO-8601 dates, `#` comments and blank lines skipped.
/// Duplicate (series, date) pairs are a hard error listing every
/// offender with its line number.
pub fn parse_observations(text: &str) -> Result<BTreeMap<String, Vec<DailyRecord>>> {
    let mut out: BTreeMap<String, Vec<DailyRecord>> = BTreeMap::new();
    let mut seen: BTreeMap<(String, NaiveDate), usize> = BTreeMap::new();
    let mut duplicates = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if lineno == 0 && line.to_ascii_lowercase().starts_with("series_id,") {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Input(format!(
                "line {}: expected 'series_id,date,value', got '{}'",
                lineno + 1,
                line
            )));
        }
        let date: NaiveDate = parts[1].parse().map_err(|_| {
            Error::Input(format!("line {}: invalid date '{}'", lineno + 1, parts[1]))
        })?;
        let value: f64 = parts[2].parse().map_err(|_| {
            Error::Input(format!("line {}: invalid value '{}'", lineno + 1, parts[2]))
        })?;
        if !value.is_finite() {
            return Err(Error::Input(format!(
                "line {}: non-finite value",
                lineno + 1
            )));
        }
        let key = (parts[0].to_string(), date);
        if let Some(first_line) = seen.get(&key) {
            duplicates.push(format!(
                "({}, {}) at lines {} and {}",
                key.0,
                key.1,
                first_line,
                lineno + 1
            ));
        } else {
            seen.insert(key, lineno + 1);
            out.entry(parts[0].to_string())
                .or_default()
                .push(DailyRecord { date, value });
        }
    }
    if !duplicates.is_empty() {
        return Err(Error::Input(format!(
            "duplicate (series, date) rows: {}",
            duplicates.join("; ")
        )));
    }
    if out.is_empty() {
        return Err(Error::Input("no observations in input".into()));
    }
    Ok(out)
}

/// Parses the metadata sidecar: `series_id,frequency,kind,zero_fill`
/// with optional `anchor`, `proxy`, `proxy_break` columns. A header row
/// is required so optional columns can be located by name.
pub fn parse_metadata(text: &str) -> Result<Vec<SeriesConfig>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| {
        let l = l.trim();
        !l.is_empty() && !l.starts_with('#')
    });
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Input("empty metadata file".into()))?;
    let cols: Vec<String> = header
        .split(',')
        .map(|c| c.trim().to_ascii_lowercase())
        .collect();
    let find = |name: &str| cols.iter().position(|c| c == name);
    let (Some(c_id), Some(c_freq), Some(c_kind)) =
        (find("series_id"), find("frequency"), find("kind"))
    else {
        return Err(Error::Input(
            "metadata header must contain series_id, frequency, kind".into(),
        ));
    };
    let c_zero = find("zero_fill");
    let c_anchor = find("anchor");
    let c_proxy = find("proxy");
    let c_break = find("proxy_break");

    let mut out = Vec::new();
    for (lineno, line) in lines {
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |idx: Option<usize>| idx.and_then(|i| parts.get(i)).copied().unwrap_or("");
        let id = get(Some(c_id));
        if id.is_empty() {
            return Err(Error::Input(format!(
                "line {}: empty series id",
                lineno + 1
            )));
        }
        let frequency = match get(Some(c_freq)).to_ascii_lowercase().as_str() {
            "weekly" => FreqClass::Weekly,
            "monthly" => FreqClass::Monthly,
            "quarterly" => FreqClass::Quarterly,
            other => {
                return Err(Error::Input(format!(
                    "line {}: unknown frequency '{other}'",
                    lineno + 1
                )))
            }
        };
        let kind = match get(Some(c_kind)).to_ascii_lowercase().as_str() {
            "stock" => SeriesKind::Stock,
            "flow" => SeriesKind::Flow,
            other => {
                return Err(Error::Input(format!(
                    "line {}: unknown kind '{other}'",
                    lineno + 1
                )))
            }
        };
        let zero_fill = match get(c_zero).to_ascii_lowercase().as_str() {
            "" | "false" | "0" | "no" => false,
            "true" | "1" | "yes" => true,
            other => {
                return Err(Error::Input(format!(
                    "line {}: unknown zero_fill flag '{other}'",
                    lineno + 1
                )))
            }
        };
        let anchor = match get(c_anchor) {
            "" => None,
            a => Some(a.to_string()),
        };
        let proxy = match (get(c_proxy), get(c_break)) {
            ("", _) => None,
            (p, "") => {
                return Err(Error::Input(format!(
                    "line {}: proxy '{p}' given without proxy_break date",
                    lineno + 1
                )))
            }
            (p, b) => {
                let date: NaiveDate = b.parse().map_err(|_| {
                    Error::Input(format!("line {}: invalid proxy_break '{b}'", lineno + 1))
                })?;
                Some((p.to_string(), date))
            }
        };
        out.push(SeriesConfig {
            id: id.to_string(),
            frequency,
            kind,
            zero_fill,
            anchor,
            proxy,
        });
    }
    if out.is_empty() {
        return Err(Error::Input("metadata file lists no series".into()));
    }
    Ok(out)
}

/// Builds the level panel from parsed observations and metadata, runs
/// the imputation passes, and reports per-series quality notes.
pub fn build_panel(
    observations: &BTreeMap<String, Vec<DailyRecord>>,
    configs: &[SeriesConfig],
) -> Result<(MixedPanel, Vec<SeriesQuality>)> {
    // Bucket every series.
    let mut bucketed: Vec<(SeriesConfig, BTreeMap<PseudoWeekStamp, f64>, usize)> = Vec::new();
    for cfg in configs {
        let records = observations
            .get(&cfg.id)
            .ok_or_else(|| Error::Input(format!("series '{}' has no observations", cfg.id)))?;
        let values = match cfg.frequency {
            FreqClass::Weekly => aggregate_daily(records, cfg.kind, cfg.zero_fill),
            FreqClass::Monthly | FreqClass::Quarterly => {
                let mut map = BTreeMap::new();
                for rec in records {
                    let stamp = stamp_of_date(rec.date);
                    let period_end = match cfg.frequency {
                        FreqClass::Monthly => PseudoWeekStamp::new(stamp.year(), stamp.month(), 4)?,
                        _ => {
                            let qm = ((stamp.month() - 1) / 3) * 3 + 3;
                            PseudoWeekStamp::new(stamp.year(), qm, 4)?
                        }
                    };
                    if map.insert(period_end, rec.value).is_some() {
                        return Err(Error::Input(format!(
                            "series '{}': multiple observations for period {}",
                            cfg.id, period_end
                        )));
                    }
                }
                map
            }
        };
        if values.is_empty() {
            return Err(Error::Input(format!(
                "series '{}' produced no bucketed values",
                cfg.id
            )));
        }
        bucketed.push((cfg.clone(), values, records.len()));
    }

    // Weekly spine covering every series.
    let first = bucketed
        .iter()
        .map(|(_, v, _)| *v.keys().next().unwrap())
        .min()
        .unwrap();
    let last = bucketed
        .iter()
        .map(|(_, v, _)| *v.keys().next_back().unwrap())
        .max()
        .unwrap();
    let spine_stamps = spine(first, last);
    let origin = spine_stamps[0];

    let column_of = |values: &BTreeMap<PseudoWeekStamp, f64>| -> Vec<f64> {
        let mut col = vec![f64::NAN; spine_stamps.len()];
        for (stamp, v) in values {
            let pos = stamp_index(*stamp, origin).expect("stamp inside spine");
            col[pos] = *v;
        }
        col
    };

    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (cfg, values, _) in &bucketed {
        columns.insert(cfg.id.clone(), column_of(values));
    }

    // Proxy interpolation for sparse targets.
    let mut proxy_filled: BTreeMap<String, usize> = BTreeMap::new();
    for (cfg, _, _) in &bucketed {
        if let Some((proxy_id, break_date)) = &cfg.proxy {
            let proxy_col = columns
                .get(proxy_id)
                .ok_or_else(|| {
                    Error::Input(format!(
                        "series '{}': proxy '{}' not in the panel",
                        cfg.id, proxy_id
                    ))
                })?
                .clone();
            let target = columns.get(&cfg.id).unwrap().clone();
            let break_stamp = stamp_of_date(*break_date);
            let break_pos = if break_stamp <= origin {
                0
            } else {
                stamp_index(break_stamp, origin).unwrap_or(usize::MAX)
            };
            let before: usize = target.iter().filter(|v| v.is_finite()).count();
            let filled = proxy_interpolate(&target, &proxy_col, break_pos)?;
            let after: usize = filled.iter().filter(|v| v.is_finite()).count();
            proxy_filled.insert(cfg.id.clone(), after - before);
            columns.insert(cfg.id.clone(), filled);
        }
    }

    // Weekly gap imputation.
    let mut quality = Vec::new();
    let mut series = Vec::new();
    for (cfg, _, n_raw) in &bucketed {
        let mut col = columns.remove(&cfg.id).unwrap();
        let mut q = SeriesQuality {
            id: cfg.id.clone(),
            n_raw: *n_raw,
            proxy_filled: proxy_filled.get(&cfg.id).copied().unwrap_or(0),
            ..Default::default()
        };
        if cfg.frequency == FreqClass::Weekly {
            let anchor_col = match cfg.anchor.as_ref() {
                Some(aid) => Some(columns.get(aid).cloned().ok_or_else(|| {
                    Error::Input(format!(
                        "series '{}': anchor '{}' must appear later in the metadata \
                         so its column is still available",
                        cfg.id, aid
                    ))
                })?),
                None => None,
            };
            let gaps_before = count_gaps_in_span(&col);
            let (imputed, log) = impute_weekly_gaps(&spine_stamps, &col, anchor_col.as_deref());
            col = imputed;
            q.n_gaps_in_span = gaps_before;
            q.imputed_anchor = log.anchored.len();
            q.imputed_average = log.averaged.len();
            q.unfilled = log.unfilled.len();
        } else {
            q.n_gaps_in_span = count_gaps_in_span(&col);
        }
        q.n_observed = col.iter().filter(|v| v.is_finite()).count();
        let first_pos = col.iter().position(|v| v.is_finite()).unwrap();
        let meta = SeriesMeta {
            id: cfg.id.clone(),
            frequency: cfg.frequency,
            kind: cfg.kind,
            first_obs: spine_stamps[first_pos],
            zero_fill: cfg.zero_fill,
        };
        quality.push(q);
        series.push((meta, col));
    }

    let panel = MixedPanel::new(spine_stamps, series)?;
    // Keep the quality entries aligned with the panel's series order.
    let mut ordered = Vec::with_capacity(quality.len());
    for meta in &panel.meta {
        let idx = quality.iter().position(|q| q.id == meta.id).unwrap();
        ordered.push(quality[idx].clone());
    }
    Ok((panel, ordered))
}

fn count_gaps_in_span(col: &[f64]) -> usize {
    let first = col.iter().position(|v| v.is_finite());
    let last = col.iter().rposition(|v| v.is_finite());
    match (first, last) {
        (Some(f), Some(l)) => col[f..=l].iter().filter(|v| v.is_nan()).count(),
        _ => 0,
    }
}

/// Renders the data-quality report for `prepare`.
pub fn quality_report(quality: &[SeriesQuality], panel: &MixedPanel) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "panel: {} series, {} pseudo-weeks ({} .. {})",
        panel.n_series(),
        panel.len(),
        panel.spine[0],
        panel.spine[panel.len() - 1]
    );
    for q in quality {
        let _ = writeln!(
            out,
            "{}: raw_rows={} observed={} gaps_in_span={} imputed_anchor={} \
             imputed_average={} unfilled={} proxy_filled={}",
            q.id,
            q.n_raw,
            q.n_observed,
            q.n_gaps_in_span,
            q.imputed_anchor,
            q.imputed_average,
            q.unfilled,
            q.proxy_filled
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Growth-panel file format
// ---------------------------------------------------------------------------

/// Formats a value with 17 significant digits so the file round-trips
/// bit for bit.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the growth panel as a wide delimited table: `date,week` then
/// one column per series; empty cells are missing.
pub fn write_growth_panel(panel: &GrowthPanel, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str("date,week");
    for meta in &panel.meta {
        let _ = write!(out, ",{}", meta.id);
    }
    out.push('\n');
    for (pos, stamp) in panel.spine.iter().enumerate() {
        let _ = write!(out, "{},{}", stamp.first_day(), stamp.week());
        for col in &panel.columns {
            if col[pos].is_finite() {
                let _ = write!(out, ",{}", fmt_f64(col[pos]));
            } else {
                out.push(',');
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes the sidecar describing the growth panel's series.
pub fn write_panel_meta(panel: &GrowthPanel, path: &Path) -> Result<()> {
    let mut out = String::from("series_id,frequency,kind,mean\n");
    for (meta, mean) in panel.meta.iter().zip(&panel.means) {
        let freq = match meta.frequency {
            FreqClass::Quarterly => "quarterly",
            FreqClass::Monthly => "monthly",
            FreqClass::Weekly => "weekly",
        };
        let kind = match meta.kind {
            SeriesKind::Stock => "stock",
            SeriesKind::Flow => "flow",
        };
        let _ = writeln!(out, "{},{},{},{}", meta.id, freq, kind, fmt_f64(*mean));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a growth panel written by [`write_growth_panel`] plus its
/// sidecar.
pub fn read_growth_panel(data_path: &Path, meta_path: &Path) -> Result<GrowthPanel> {
    let meta_text = std::fs::read_to_string(meta_path)?;
    let mut freq_of: BTreeMap<String, (FreqClass, SeriesKind, f64)> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for (lineno, line) in meta_text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() < 3 {
            return Err(Error::Input(format!(
                "panel meta line {}: expected series_id,frequency,kind[,mean]",
                lineno + 1
            )));
        }
        let freq = match parts[1] {
            "quarterly" => FreqClass::Quarterly,
            "monthly" => FreqClass::Monthly,
            "weekly" => FreqClass::Weekly,
            other => {
                return Err(Error::Input(format!(
                    "panel meta line {}: unknown frequency '{other}'",
                    lineno + 1
                )))
            }
        };
        let kind = match parts[2] {
            "stock" => SeriesKind::Stock,
            "flow" => SeriesKind::Flow,
            other => {
                return Err(Error::Input(format!(
                    "panel meta line {}: unknown kind '{other}'",
                    lineno + 1
                )))
            }
        };
        let mean = if parts.len() > 3 && !parts[3].is_empty() {
            parts[3]
                .parse()
                .map_err(|_| Error::Input(format!("panel meta line {}: bad mean", lineno + 1)))?
        } else {
            0.0
        };
        freq_of.insert(parts[0].to_string(), (freq, kind, mean));
        order.push(parts[0].to_string());
    }

    let text = std::fs::read_to_string(data_path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Input("empty panel file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 3 || cols[0] != "date" || cols[1] != "week" {
        return Err(Error::Input(
            "panel header must start with date,week".into(),
        ));
    }
    let ids: Vec<String> = cols[2..].iter().map(|s| s.to_string()).collect();
    if ids != order {
        return Err(Error::Input(
            "panel columns do not match the metadata sidecar order".into(),
        ));
    }
    let mut spine_stamps = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); ids.len()];
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != ids.len() + 2 {
            return Err(Error::Input(format!(
                "panel line {}: expected {} fields, got {}",
                lineno + 2,
                ids.len() + 2,
                parts.len()
            )));
        }
        let date: NaiveDate = parts[0]
            .trim()
            .parse()
            .map_err(|_| Error::Input(format!("panel line {}: bad date", lineno + 2)))?;
        spine_stamps.push(stamp_of_date(date));
        for (i, cell) in parts[2..].iter().enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                columns[i].push(f64::NAN);
            } else {
                let v: f64 = cell.parse().map_err(|_| {
                    Error::Input(format!("panel line {}: bad value '{cell}'", lineno + 2))
                })?;
                columns[i].push(v);
            }
        }
    }
    if spine_stamps.is_empty() {
        return Err(Error::Input("panel file has no rows".into()));
    }
    let mut meta = Vec::new();
    let mut means = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        let (freq, kind, mean) = freq_of
            .get(id)
            .copied()
            .ok_or_else(|| Error::Input(format!("series '{id}' missing from sidecar")))?;
        let first_pos = columns[i].iter().position(|v| v.is_finite()).unwrap_or(0);
        meta.push(SeriesMeta {
            id: id.clone(),
            frequency: freq,
            kind,
            first_obs: spine_stamps[first_pos],
            zero_fill: false,
        });
        means.push(mean);
    }
    Ok(GrowthPanel {
        spine: spine_stamps,
        columns,
        meta,
        means,
    })
}
