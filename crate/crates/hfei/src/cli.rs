//! Batch commands wiring the pipeline together.
//!
//! Five commands: `prepare` turns raw observations into a growth panel,
//! `estimate` runs the Gibbs sampler and writes the draw store plus the
//! scaled index, `grid` runs the eight-specification comparison,
//! `regime` fits the recession model to the stored factor, and
//! `export-index` regenerates the index tables from a draw store.
//!
//! Configuration is a flat `key = value` text file; command-line flags
//! override file values. All randomness flows from the single `seed`
//! key, and re-running any command with identical inputs and seed
//! produces byte-identical outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::estimator::{
    best_cell, grid_table, load_draws, run_gibbs, run_grid, save_draws, split_half_diagnostics,
};
use crate::index::{scale_index, write_gdp_companion, write_index};
use crate::panel::{
    build_panel, fmt_f64, parse_metadata, parse_observations, quality_report, read_growth_panel,
    write_growth_panel, write_panel_meta, yoy_transform, GrowthPanel,
};
use crate::regime::{fit_regime, RegimeSpec};
use crate::statespace::{FreqClass, ModelSpec};

/// Flat key-value run configuration. Later `set` calls override earlier
/// values, so load the file first and apply flags on top.
#[derive(Clone, Debug, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses a `key = value` file; blank lines and `#` comments are
    /// skipped.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim());
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Config(format!("missing required key '{key}'")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(text) => text
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("key '{key}': cannot parse '{text}'"))),
        }
    }

    fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    pub fn seed(&self) -> Result<u64> {
        self.parse_or("seed", 1)
    }

    pub fn threads(&self) -> Result<usize> {
        self.parse_or("threads", 1)
    }

    pub fn out_dir(&self) -> Result<PathBuf> {
        Ok(PathBuf::from(self.require("out")?))
    }

    /// Builds the model spec for a panel: counts come from the panel,
    /// everything else from configuration keys (`p_f`, `p_q`, `s`,
    /// `sv_factor`, `sv_idio`, `iterations`, `burn_in`, prior keys), and
    /// `gdp_series` names the quarterly series with the unit loading.
    pub fn model_spec(&self, panel: &GrowthPanel) -> Result<ModelSpec> {
        let (n_q, n_m, n_w) = panel.counts();
        let mut spec = ModelSpec::new(n_q, n_m, n_w);
        spec.p_f = self.parse_or("p_f", spec.p_f)?;
        spec.p_q = self.parse_or("p_q", spec.p_q)?;
        spec.s = self.parse_or("s", spec.s)?;
        spec.sv_factor = self.parse_or("sv_factor", spec.sv_factor)?;
        spec.sv_idio = self.parse_or("sv_idio", spec.sv_idio)?;
        spec.chain.iterations = self.parse_or("iterations", spec.chain.iterations)?;
        spec.chain.burn_in = self.parse_or("burn_in", spec.chain.burn_in)?;
        spec.priors.minnesota_gamma =
            self.parse_or("minnesota_gamma", spec.priors.minnesota_gamma)?;
        spec.priors.factor_ar_mean =
            self.parse_or("factor_ar_mean", spec.priors.factor_ar_mean)?;
        spec.priors.loading_var = self.parse_or("loading_var", spec.priors.loading_var)?;
        spec.priors.omega_nu = self.parse_or("omega_nu", spec.priors.omega_nu)?;
        spec.priors.omega_s2 = self.parse_or("omega_s2", spec.priors.omega_s2)?;
        spec.priors.const_var_nu = self.parse_or("const_var_nu", spec.priors.const_var_nu)?;
        spec.priors.const_var_s2 = self.parse_or("const_var_s2", spec.priors.const_var_s2)?;

        let gdp_id = self.require("gdp_series")?;
        let idx = panel
            .series_index(gdp_id)
            .ok_or_else(|| Error::Config(format!("gdp_series '{gdp_id}' not in the panel")))?;
        if panel.meta[idx].frequency != FreqClass::Quarterly {
            return Err(Error::Config(format!(
                "gdp_series '{gdp_id}' must be a quarterly series"
            )));
        }
        spec.gdp_index = idx; // quarterly series come first in the panel
        spec.validate()?;
        Ok(spec)
    }

    pub fn regime_spec(&self) -> Result<RegimeSpec> {
        let mut spec = RegimeSpec::default();
        spec.mean_rec_prior.0 = self.parse_or("regime_mean_rec", spec.mean_rec_prior.0)?;
        spec.mean_rec_prior.1 = self.parse_or("regime_var_rec", spec.mean_rec_prior.1)?;
        spec.mean_exp_prior.0 = self.parse_or("regime_mean_exp", spec.mean_exp_prior.0)?;
        spec.mean_exp_prior.1 = self.parse_or("regime_var_exp", spec.mean_exp_prior.1)?;
        spec.stay_exp_prior.0 = self.parse_or("regime_stay_exp_a", spec.stay_exp_prior.0)?;
        spec.stay_exp_prior.1 = self.parse_or("regime_stay_exp_b", spec.stay_exp_prior.1)?;
        spec.stay_rec_prior.0 = self.parse_or("regime_stay_rec_a", spec.stay_rec_prior.0)?;
        spec.stay_rec_prior.1 = self.parse_or("regime_stay_rec_b", spec.stay_rec_prior.1)?;
        spec.precision_prior.0 =
            self.parse_or("regime_precision_shape", spec.precision_prior.0)?;
        spec.precision_prior.1 = self.parse_or("regime_precision_rate", spec.precision_prior.1)?;
        spec.iterations = self.parse_or("regime_iterations", spec.iterations)?;
        spec.burn_in = self.parse_or("regime_burn_in", spec.burn_in)?;
        spec.enforce_mean_ordering =
            self.parse_or("regime_mean_ordering", spec.enforce_mean_ordering)?;
        spec.validate()?;
        Ok(spec)
    }
}

fn load_panel(cfg: &RunConfig) -> Result<GrowthPanel> {
    let data = cfg.require("panel")?;
    let meta = cfg.require("panel_meta")?;
    read_growth_panel(Path::new(data), Path::new(meta))
}

/// `prepare`: raw observations plus metadata → growth panel files and a
/// data-quality report.
pub fn cmd_prepare(cfg: &RunConfig) -> Result<()> {
    let data_path = cfg.require("data")?;
    let meta_path = cfg.require("meta")?;
    let out = cfg.out_dir()?;
    std::fs::create_dir_all(&out)?;

    let observations = parse_observations(&std::fs::read_to_string(data_path)?)?;
    let configs = parse_metadata(&std::fs::read_to_string(meta_path)?)?;
    let (panel, quality) = build_panel(&observations, &configs)?;
    let growth = yoy_transform(&panel)?;

    write_growth_panel(&growth, &out.join("panel.csv"))?;
    write_panel_meta(&growth, &out.join("panel_meta.csv"))?;
    std::fs::write(out.join("quality_report.txt"), quality_report(&quality, &panel))?;
    Ok(())
}

/// `estimate`: growth panel → draw store plus index tables.
pub fn cmd_estimate(cfg: &RunConfig) -> Result<()> {
    let out = cfg.out_dir()?;
    std::fs::create_dir_all(&out)?;
    let panel = load_panel(cfg)?;
    let spec = cfg.model_spec(&panel)?;
    let seed = cfg.seed()?;
    let draws = run_gibbs(&spec, &panel, seed)?;
    save_draws(&draws, seed, &out.join("draws"))?;

    let mut diag = String::from("parameter,split_half_rhat\n");
    for (name, rhat) in split_half_diagnostics(&draws) {
        let _ = writeln!(diag, "{name},{rhat:.4}");
    }
    std::fs::write(out.join("diagnostics.csv"), diag)?;

    export_index_files(cfg, &panel, &draws.factor, &draws.spine, &out)?;
    Ok(())
}

fn export_index_files(
    cfg: &RunConfig,
    panel: &GrowthPanel,
    factor_draws: &ndarray::Array2<f64>,
    spine: &[crate::calendar::PseudoWeekStamp],
    out: &Path,
) -> Result<()> {
    let gdp_id = cfg.require("gdp_series")?;
    let gdp_idx = panel
        .series_index(gdp_id)
        .ok_or_else(|| Error::Config(format!("gdp_series '{gdp_id}' not in the panel")))?;
    let gdp_column = &panel.columns[gdp_idx];
    let gdp_values: Vec<f64> = gdp_column.iter().copied().filter(|v| v.is_finite()).collect();
    let series = scale_index(factor_draws, spine, &gdp_values)?;
    write_index(&series, &out.join("index.csv"))?;
    write_gdp_companion(&panel.spine, gdp_column, &out.join("index_gdp.csv"))?;
    Ok(())
}

/// `grid`: the eight-specification DIC comparison, written as a 4 × 2
/// table plus a detailed per-cell listing.
pub fn cmd_grid(cfg: &RunConfig) -> Result<()> {
    let out = cfg.out_dir()?;
    std::fs::create_dir_all(&out)?;
    let panel = load_panel(cfg)?;
    let spec = cfg.model_spec(&panel)?;
    let cells = run_grid(&panel, &spec, cfg.seed()?, cfg.threads()?)?;

    std::fs::write(out.join("dic_table.csv"), grid_table(&cells))?;
    let mut detail = String::from(
        "s,sv_factor,sv_idio,seed,mean_deviance,deviance_at_mean,p_d,dic,status\n",
    );
    for cell in &cells {
        match &cell.report {
            Ok(r) => {
                let _ = writeln!(
                    detail,
                    "{},{},{},{},{},{},{},{},ok",
                    cell.s,
                    cell.sv_factor,
                    cell.sv_idio,
                    cell.seed,
                    fmt_f64(r.mean_deviance),
                    fmt_f64(r.deviance_at_mean),
                    fmt_f64(r.p_d),
                    fmt_f64(r.dic),
                );
            }
            Err(e) => {
                let _ = writeln!(
                    detail,
                    "{},{},{},{},,,,,failed: {}",
                    cell.s,
                    cell.sv_factor,
                    cell.sv_idio,
                    cell.seed,
                    e.replace(',', ";"),
                );
            }
        }
    }
    if let Some(best) = best_cell(&cells) {
        let _ = writeln!(
            detail,
            "# best: s={} sv_factor={} sv_idio={}",
            best.s, best.sv_factor, best.sv_idio
        );
    }
    std::fs::write(out.join("dic_cells.csv"), detail)?;
    Ok(())
}

/// `regime`: recession probabilities and dated recessions from the
/// posterior-mean unscaled factor of a draw store.
pub fn cmd_regime(cfg: &RunConfig) -> Result<()> {
    let out = cfg.out_dir()?;
    std::fs::create_dir_all(&out)?;
    let draws_dir = PathBuf::from(cfg.require("draws")?);
    let (draws, _) = load_draws(&draws_dir)?;
    let spec = cfg.regime_spec()?;
    let factor = draws.factor_mean();
    let posterior = fit_regime(&factor, &spec, cfg.seed()?)?;

    // Period table.
    let mut table = String::from("date,week,recession_prob,in_recession,episode_id\n");
    for (pos, stamp) in draws.spine.iter().enumerate() {
        let episode = posterior
            .episodes
            .iter()
            .position(|e| pos >= e.start && pos < e.end.unwrap_or(draws.spine.len()));
        let _ = writeln!(
            table,
            "{},{},{},{},{}",
            stamp.first_day(),
            stamp.week(),
            fmt_f64(posterior.recession_prob[pos]),
            u8::from(episode.is_some()),
            episode.map_or(0, |k| k + 1),
        );
    }
    std::fs::write(out.join("recession_probability.csv"), table)?;

    // Episode table.
    let mut episodes = String::from("episode,start,call,end,end_call\n");
    for (k, e) in posterior.episodes.iter().enumerate() {
        let stamp_text = |pos: Option<usize>| -> String {
            match pos {
                Some(p) => {
                    let s = draws.spine[p];
                    format!("{},{}", s.first_day(), s.week())
                }
                None => String::from(","),
            }
        };
        let _ = writeln!(
            episodes,
            "{},\"{}\",\"{}\",\"{}\",\"{}\"",
            k + 1,
            stamp_text(Some(e.start)),
            stamp_text(Some(e.call)),
            stamp_text(e.end),
            stamp_text(e.end_call),
        );
    }
    std::fs::write(out.join("recessions.csv"), episodes)?;
    Ok(())
}

/// `export-index`: regenerates the index tables from a stored draw
/// store and the growth panel.
pub fn cmd_export_index(cfg: &RunConfig) -> Result<()> {
    let out = cfg.out_dir()?;
    std::fs::create_dir_all(&out)?;
    let draws_dir = PathBuf::from(cfg.require("draws")?);
    let (draws, _) = load_draws(&draws_dir)?;
    let panel = load_panel(cfg)?;
    export_index_files(cfg, &panel, &draws.factor, &draws.spine, &out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::PseudoWeekStamp;
    use crate::simulate::{simulate_panel, TrueParams};

    fn write_weekly_stock_fixture(dir: &Path) -> (PathBuf, PathBuf) {
        // One weekly stock series with two years of daily data.
        let mut data = String::new();
        let start = chrono::NaiveDate::from_ymd_opt(2018, 1, 1).unwrap();
        for day in 0..730 {
            let date = start + chrono::Duration::days(day);
            let value = 100.0 + (day as f64 * 0.01).sin() * 5.0 + day as f64 * 0.01;
            data.push_str(&format!("sales,{date},{value}\n"));
        }
        let meta = "series_id,frequency,kind,zero_fill\nsales,weekly,stock,false\n";
        let data_path = dir.join("raw.csv");
        let meta_path = dir.join("meta.csv");
        std::fs::write(&data_path, data).unwrap();
        std::fs::write(&meta_path, meta).unwrap();
        (data_path, meta_path)
    }

    #[test]
    fn prepare_builds_expected_panel_shape() {
        let dir = tempfile::tempdir().unwrap();
        let (data_path, meta_path) = write_weekly_stock_fixture(dir.path());
        let mut cfg = RunConfig::new();
        cfg.set("data", data_path.to_str().unwrap());
        cfg.set("meta", meta_path.to_str().unwrap());
        cfg.set("out", dir.path().join("out").to_str().unwrap());
        cmd_prepare(&cfg).unwrap();

        let growth = read_growth_panel(
            &dir.path().join("out/panel.csv"),
            &dir.path().join("out/panel_meta.csv"),
        )
        .unwrap();
        // Two calendar years of daily data: 96 pseudo-weeks, the first
        // 48 growth values undefined by construction.
        assert_eq!(growth.len(), 96);
        let defined = growth.columns[0].iter().filter(|v| v.is_finite()).count();
        assert_eq!(defined, 48);
        assert!(dir.path().join("out/quality_report.txt").exists());
    }

    #[test]
    fn prepare_rejects_duplicates_and_empty_input() {
        let dir = tempfile::tempdir().unwrap();
        let data_path = dir.path().join("raw.csv");
        let meta_path = dir.path().join("meta.csv");
        std::fs::write(&data_path, "a,2020-01-01,1.0\na,2020-01-01,2.0\n").unwrap();
        std::fs::write(
            &meta_path,
            "series_id,frequency,kind,zero_fill\na,weekly,stock,false\n",
        )
        .unwrap();
        let mut cfg = RunConfig::new();
        cfg.set("data", data_path.to_str().unwrap());
        cfg.set("meta", meta_path.to_str().unwrap());
        cfg.set("out", dir.path().join("out").to_str().unwrap());
        let err = cmd_prepare(&cfg).unwrap_err();
        assert!(err.to_string().contains("duplicate"));

        std::fs::write(&data_path, "# nothing here\n").unwrap();
        let err = cmd_prepare(&cfg).unwrap_err();
        assert_eq!(err.category(), "input");
    }

    #[test]
    fn config_file_parsing_and_flag_override() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# comment\nseed = 42\nthreads = 3\n").unwrap();
        let mut cfg = RunConfig::from_file(&path).unwrap();
        assert_eq!(cfg.seed().unwrap(), 42);
        assert_eq!(cfg.threads().unwrap(), 3);
        cfg.set("seed", "7");
        assert_eq!(cfg.seed().unwrap(), 7);
        assert!(RunConfig::from_file(&path).unwrap().get("missing").is_none());
    }

    /// Writes a simulated growth panel to disk in the prepare output
    /// format so estimate/grid/regime can be exercised end to end.
    fn write_simulated_panel(dir: &Path, seed: u64) -> (PathBuf, PathBuf) {
        let mut spec = ModelSpec::new(1, 1, 2);
        spec.p_q = 1;
        let mut params = TrueParams::baseline(&spec);
        params.phi = vec![0.8, 0.0];
        params.sigma_idio = vec![0.4; 4];
        let (panel, _) = simulate_panel(&params, &spec, 192, seed).unwrap();
        let data_path = dir.join("panel.csv");
        let meta_path = dir.join("panel_meta.csv");
        write_growth_panel(&panel, &data_path).unwrap();
        write_panel_meta(&panel, &meta_path).unwrap();
        (data_path, meta_path)
    }

    #[test]
    fn estimate_writes_draws_and_index_deterministically() {
        let dir = tempfile::tempdir().unwrap();
        let (panel_path, meta_path) = write_simulated_panel(dir.path(), 3);
        let mut cfg = RunConfig::new();
        cfg.set("panel", panel_path.to_str().unwrap());
        cfg.set("panel_meta", meta_path.to_str().unwrap());
        cfg.set("gdp_series", "q0");
        cfg.set("seed", "11");
        cfg.set("iterations", "30");
        cfg.set("burn_in", "10");
        cfg.set("p_q", "1");

        let out_a = dir.path().join("a");
        cfg.set("out", out_a.to_str().unwrap());
        cmd_estimate(&cfg).unwrap();
        let out_b = dir.path().join("b");
        cfg.set("out", out_b.to_str().unwrap());
        cmd_estimate(&cfg).unwrap();

        for file in [
            "index.csv",
            "index_gdp.csv",
            "diagnostics.csv",
            "draws/manifest.txt",
            "draws/factor.bin",
            "draws/loglik.bin",
        ] {
            let a = std::fs::read(out_a.join(file)).unwrap();
            let b = std::fs::read(out_b.join(file)).unwrap();
            assert_eq!(a, b, "{file} differs between identical runs");
        }
        let diag = std::fs::read_to_string(out_a.join("diagnostics.csv")).unwrap();
        assert!(diag.lines().count() > 5);
        for line in diag.lines().skip(1) {
            let rhat: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert!(rhat.is_finite() && rhat > 0.5 && rhat < 10.0);
        }
    }

    #[test]
    fn grid_and_regime_commands_produce_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        let (panel_path, meta_path) = write_simulated_panel(dir.path(), 5);
        let mut cfg = RunConfig::new();
        cfg.set("panel", panel_path.to_str().unwrap());
        cfg.set("panel_meta", meta_path.to_str().unwrap());
        cfg.set("gdp_series", "q0");
        cfg.set("seed", "2");
        cfg.set("iterations", "14");
        cfg.set("burn_in", "6");
        cfg.set("p_q", "1");
        let out = dir.path().join("grid_out");
        cfg.set("out", out.to_str().unwrap());
        cmd_grid(&cfg).unwrap();
        let table = std::fs::read_to_string(out.join("dic_table.csv")).unwrap();
        assert_eq!(table.lines().count(), 5, "4 volatility rows plus header");
        let detail = std::fs::read_to_string(out.join("dic_cells.csv")).unwrap();
        let cell_rows = detail
            .lines()
            .skip(1)
            .filter(|l| !l.starts_with('#') && !l.is_empty())
            .count();
        assert_eq!(cell_rows, 8);

        // Estimate, then run the regime command on the stored draws.
        let est_out = dir.path().join("est_out");
        cfg.set("out", est_out.to_str().unwrap());
        cmd_estimate(&cfg).unwrap();
        let mut regime_cfg = RunConfig::new();
        regime_cfg.set("draws", est_out.join("draws").to_str().unwrap());
        regime_cfg.set("seed", "4");
        regime_cfg.set("regime_iterations", "200");
        regime_cfg.set("regime_burn_in", "50");
        let reg_out = dir.path().join("reg_out");
        regime_cfg.set("out", reg_out.to_str().unwrap());
        cmd_regime(&regime_cfg).unwrap();
        let prob = std::fs::read_to_string(reg_out.join("recession_probability.csv")).unwrap();
        assert_eq!(prob.lines().count(), 192 + 1);
        assert!(reg_out.join("recessions.csv").exists());

        // export-index reproduces the estimate's index byte for byte.
        let mut export_cfg = RunConfig::new();
        export_cfg.set("draws", est_out.join("draws").to_str().unwrap());
        export_cfg.set("panel", panel_path.to_str().unwrap());
        export_cfg.set("panel_meta", meta_path.to_str().unwrap());
        export_cfg.set("gdp_series", "q0");
        let exp_out = dir.path().join("exp_out");
        export_cfg.set("out", exp_out.to_str().unwrap());
        cmd_export_index(&export_cfg).unwrap();
        let a = std::fs::read(est_out.join("index.csv")).unwrap();
        let b = std::fs::read(exp_out.join("index.csv")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn spine_stamps_survive_the_draw_store() {
        let dir = tempfile::tempdir().unwrap();
        let (panel_path, meta_path) = write_simulated_panel(dir.path(), 6);
        let growth =
            read_growth_panel(&panel_path, &meta_path).unwrap();
        let mut cfg = RunConfig::new();
        cfg.set("panel", panel_path.to_str().unwrap());
        cfg.set("panel_meta", meta_path.to_str().unwrap());
        cfg.set("gdp_series", "q0");
        cfg.set("iterations", "12");
        cfg.set("burn_in", "5");
        cfg.set("p_q", "1");
        let out = dir.path().join("out");
        cfg.set("out", out.to_str().unwrap());
        cmd_estimate(&cfg).unwrap();
        let (draws, _) = load_draws(&out.join("draws")).unwrap();
        assert_eq!(draws.spine, growth.spine);
        let first: Vec<PseudoWeekStamp> = growth.spine.iter().take(3).copied().collect();
        assert_eq!(&draws.spine[..3], &first[..]);
    }
}
