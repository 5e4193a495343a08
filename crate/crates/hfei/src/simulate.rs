//! Synthetic panels drawn from the model's own data-generating process.
//!
//! A weekly factor and per-series idiosyncratic components are simulated
//! (optionally with stochastic volatility, optionally with a two-regime
//! shifting mean on the factor), assembled into weekly latent series
//! through the loading polynomial, and observed as weekly values,
//! 4-week averages at month-end stamps, and 12-week averages at
//! quarter-end stamps. The hidden truth comes back alongside the panel
//! so recovery tests can score against it.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::calendar::PseudoWeekStamp;
use crate::error::{Error, Result};
use crate::linalg::is_stationary;
use crate::panel::{GrowthPanel, SeriesMeta};
use crate::statespace::{FreqClass, ModelSpec};

/// Two-regime mean structure for the simulated factor.
#[derive(Clone, Copy, Debug)]
pub struct RegimeTruth {
    pub mu_recession: f64,
    pub mu_expansion: f64,
    /// P(stay in expansion).
    pub stay_expansion: f64,
    /// P(stay in recession).
    pub stay_recession: f64,
}

/// Generating parameters for a synthetic panel.
#[derive(Clone, Debug)]
pub struct TrueParams {
    /// n × (s+1) loadings, ordered like the panel (q, m, w).
    pub loadings: Array2<f64>,
    pub phi: Vec<f64>,
    /// n × p_q idiosyncratic AR coefficients.
    pub rho: Array2<f64>,
    /// Factor innovation standard deviation (initial level under SV).
    pub sigma_factor: f64,
    /// Per-series idiosyncratic innovation standard deviations.
    pub sigma_idio: Vec<f64>,
    /// Log-variance random-walk innovation variance of the factor
    /// volatility; 0 keeps it constant.
    pub omega2_factor: f64,
    /// Same for every idiosyncratic volatility; 0 keeps them constant.
    pub omega2_idio: f64,
    /// Leading spine positions masked per series, mimicking series that
    /// start late in the sample.
    pub leading_missing: Vec<usize>,
    /// Optional regime-switching mean added to the factor.
    pub regime: Option<RegimeTruth>,
}

impl TrueParams {
    /// Parameters with unit loadings, moderate persistence, and no
    /// stochastic volatility, sized for `spec`.
    pub fn baseline(spec: &ModelSpec) -> Self {
        let n = spec.n_series();
        Self {
            loadings: Array2::ones((n, spec.s + 1)),
            phi: {
                let mut phi = vec![0.0; spec.p_f];
                phi[0] = 0.8;
                phi
            },
            rho: Array2::zeros((n, spec.p_q)),
            sigma_factor: 1.0,
            sigma_idio: vec![0.5; n],
            omega2_factor: 0.0,
            omega2_idio: 0.0,
            leading_missing: vec![0; n],
            regime: None,
        }
    }
}

/// Everything hidden from the estimator, returned for scoring.
#[derive(Clone, Debug)]
pub struct SimTruth {
    /// In-sample factor path f_1..f_T.
    pub factor: Vec<f64>,
    /// In-sample factor volatility path σ_t.
    pub sigma_factor_path: Vec<f64>,
    /// Weekly latent observation value per series before masking (n × T).
    pub latent_weekly: Array2<f64>,
    /// Regime indicator per period (0 = recession) when a regime
    /// structure was simulated.
    pub regimes: Option<Vec<u8>>,
}

fn simulate_ar_sv<R: Rng + ?Sized>(
    coefs: &[f64],
    sigma0: f64,
    omega2: f64,
    len: usize,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let p = coefs.len();
    let mut x = vec![0.0; len];
    let mut sig = vec![sigma0.max(0.0); len];
    let mut h = if sigma0 > 0.0 {
        (sigma0 * sigma0).ln()
    } else {
        f64::NEG_INFINITY
    };
    for t in 0..len {
        if t > 0 && omega2 > 0.0 && h.is_finite() {
            let z: f64 = rng.sample(StandardNormal);
            h += omega2.sqrt() * z;
            sig[t] = (0.5 * h).exp();
        } else if t > 0 {
            sig[t] = sig[t - 1];
        }
        let mut mean = 0.0;
        for (lag, &c) in coefs.iter().enumerate() {
            if t > lag {
                mean += c * x[t - lag - 1];
            }
        }
        let z: f64 = rng.sample(StandardNormal);
        x[t] = mean + sig[t] * z;
        let _ = p;
    }
    (x, sig)
}

/// Simulates a growth panel of length `t_len` plus its hidden truth.
///
/// Counts, lag orders, and the heterogeneity order come from `spec`;
/// the series are named `q0.., m0.., w0..` and the spine starts at the
/// first pseudo-week of 2010.
pub fn simulate_panel(
    params: &TrueParams,
    spec: &ModelSpec,
    t_len: usize,
    seed: u64,
) -> Result<(GrowthPanel, SimTruth)> {
    spec.validate()?;
    let n = spec.n_series();
    if params.loadings.nrows() != n || params.loadings.ncols() != spec.s + 1 {
        return Err(Error::Build(format!(
            "loadings are {}x{}, expected {}x{}",
            params.loadings.nrows(),
            params.loadings.ncols(),
            n,
            spec.s + 1
        )));
    }
    if params.phi.len() != spec.p_f || params.rho.nrows() != n || params.rho.ncols() != spec.p_q {
        return Err(Error::Build("AR coefficient dimensions mismatch".into()));
    }
    if params.sigma_idio.len() != n || params.leading_missing.len() != n {
        return Err(Error::Build("per-series parameter length mismatch".into()));
    }
    if !is_stationary(&params.phi) {
        return Err(Error::Spec("explosive factor AR coefficients".into()));
    }
    for i in 0..n {
        let coefs: Vec<f64> = params.rho.row(i).to_vec();
        if !is_stationary(&coefs) {
            return Err(Error::Spec(format!(
                "explosive idiosyncratic AR coefficients for series {i}"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let burn = 192;
    let full = burn + t_len;

    // Factor path, optionally around a regime-switching mean.
    let (cycle, sigma_f_full) = simulate_ar_sv(
        &params.phi,
        params.sigma_factor,
        params.omega2_factor,
        full,
        &mut rng,
    );
    let mut factor_full = cycle;
    let mut regimes_full: Option<Vec<u8>> = None;
    if let Some(regime) = params.regime {
        let mut states = vec![1u8; full];
        let mut s = 1u8;
        for (t, slot) in states.iter_mut().enumerate() {
            if t > 0 {
                let stay = if s == 1 {
                    regime.stay_expansion
                } else {
                    regime.stay_recession
                };
                if rng.random::<f64>() > stay {
                    s = 1 - s;
                }
            }
            *slot = s;
        }
        for (t, f) in factor_full.iter_mut().enumerate() {
            *f += if states[t] == 0 {
                regime.mu_recession
            } else {
                regime.mu_expansion
            };
        }
        regimes_full = Some(states);
    }

    // Idiosyncratic paths and weekly latent series.
    let mut latent_full = Array2::<f64>::zeros((n, full));
    for i in 0..n {
        let coefs: Vec<f64> = params.rho.row(i).to_vec();
        let (u, _) = simulate_ar_sv(
            &coefs,
            params.sigma_idio[i],
            params.omega2_idio,
            full,
            &mut rng,
        );
        for t in 0..full {
            let mut v = u[t];
            for a in 0..=spec.s {
                if t >= a {
                    v += params.loadings[[i, a]] * factor_full[t - a];
                }
            }
            latent_full[[i, t]] = v;
        }
    }

    // Spine and observables.
    let origin = PseudoWeekStamp::new(2010, 1, 1)?;
    let spine: Vec<PseudoWeekStamp> = (0..t_len).map(|k| origin.advance(k)).collect();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut meta: Vec<SeriesMeta> = Vec::with_capacity(n);
    for i in 0..n {
        let class = if i < spec.n_q {
            FreqClass::Quarterly
        } else if i < spec.n_q + spec.n_m {
            FreqClass::Monthly
        } else {
            FreqClass::Weekly
        };
        let window = match class {
            FreqClass::Quarterly => 12,
            FreqClass::Monthly => 4,
            FreqClass::Weekly => 1,
        };
        let mut col = vec![f64::NAN; t_len];
        for (pos, stamp) in spine.iter().enumerate() {
            let observed = match class {
                FreqClass::Weekly => true,
                FreqClass::Monthly => stamp.is_month_end(),
                FreqClass::Quarterly => stamp.is_quarter_end(),
            };
            if !observed || pos < params.leading_missing[i] {
                continue;
            }
            let t_full = burn + pos;
            let mut acc = 0.0;
            for j in 0..window {
                acc += latent_full[[i, t_full - j]];
            }
            col[pos] = acc / window as f64;
        }
        let first_pos = col.iter().position(|v| v.is_finite()).ok_or_else(|| {
            Error::Build(format!("series {i} has no observed stamps at T={t_len}"))
        })?;
        let id = match class {
            FreqClass::Quarterly => format!("q{i}"),
            FreqClass::Monthly => format!("m{}", i - spec.n_q),
            FreqClass::Weekly => format!("w{}", i - spec.n_q - spec.n_m),
        };
        meta.push(SeriesMeta {
            id,
            frequency: class,
            kind: crate::calendar::SeriesKind::Stock,
            first_obs: spine[first_pos],
            zero_fill: false,
        });
        columns.push(col);
    }

    let panel = GrowthPanel {
        spine,
        columns,
        meta,
        means: vec![0.0; n],
    };
    let truth = SimTruth {
        factor: factor_full[burn..].to_vec(),
        sigma_factor_path: sigma_f_full[burn..].to_vec(),
        latent_weekly: latent_full.slice(ndarray::s![.., burn..]).to_owned(),
        regimes: regimes_full.map(|r| r[burn..].to_vec()),
    };
    Ok((panel, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(n_q: usize, n_m: usize, n_w: usize) -> ModelSpec {
        ModelSpec::new(n_q, n_m, n_w)
    }

    #[test]
    fn weekly_observable_equals_factor_when_idiosyncratic_is_zero() {
        let spec = spec(0, 0, 1);
        let mut params = TrueParams::baseline(&spec);
        params.sigma_idio = vec![0.0];
        let (panel, truth) = simulate_panel(&params, &spec, 96, 1).unwrap();
        for t in 0..96 {
            assert_abs_diff_eq!(panel.columns[0][t], truth.factor[t], epsilon = 1e-12);
        }
    }

    #[test]
    fn monthly_observable_is_four_week_mean_of_latents() {
        let spec = spec(0, 1, 1);
        let params = TrueParams::baseline(&spec);
        let (panel, truth) = simulate_panel(&params, &spec, 192, 2).unwrap();
        for (pos, stamp) in panel.spine.iter().enumerate() {
            let v = panel.columns[0][pos];
            if !v.is_finite() {
                continue;
            }
            assert!(stamp.is_month_end());
            assert!(pos >= 3);
            let mean = (0..4).map(|j| truth.latent_weekly[[0, pos - j]]).sum::<f64>() / 4.0;
            assert_abs_diff_eq!(v, mean, epsilon = 1e-12);
        }
    }

    #[test]
    fn quarterly_observable_is_twelve_week_mean_of_latents() {
        let spec = spec(1, 0, 1);
        let params = TrueParams::baseline(&spec);
        let (panel, truth) = simulate_panel(&params, &spec, 192, 3).unwrap();
        let mut seen = 0;
        for (pos, stamp) in panel.spine.iter().enumerate() {
            let v = panel.columns[0][pos];
            if !v.is_finite() {
                continue;
            }
            assert!(stamp.is_quarter_end());
            let mean =
                (0..12).map(|j| truth.latent_weekly[[0, pos - j]]).sum::<f64>() / 12.0;
            assert_abs_diff_eq!(v, mean, epsilon = 1e-12);
            seen += 1;
        }
        assert_eq!(seen, 192 / 12);
    }

    #[test]
    fn innovation_variance_matches_at_large_t() {
        let spec = spec(0, 0, 1);
        let mut params = TrueParams::baseline(&spec);
        params.phi = vec![0.6, 0.2];
        let (_, truth) = simulate_panel(&params, &spec, 5000, 4).unwrap();
        let f = &truth.factor;
        let mut ss = 0.0;
        let mut count = 0;
        for t in 2..f.len() {
            let e = f[t] - 0.6 * f[t - 1] - 0.2 * f[t - 2];
            ss += e * e;
            count += 1;
        }
        let var = ss / count as f64;
        assert!(
            (var - 1.0).abs() < 0.05,
            "innovation variance {var}, expected 1 within 5%"
        );
    }

    #[test]
    fn leading_mask_hides_early_stamps() {
        let spec = spec(0, 0, 2);
        let mut params = TrueParams::baseline(&spec);
        params.leading_missing = vec![10, 0];
        let (panel, _) = simulate_panel(&params, &spec, 96, 5).unwrap();
        for t in 0..10 {
            assert!(panel.columns[0][t].is_nan());
        }
        assert!(panel.columns[0][10].is_finite());
        assert!(panel.columns[1][0].is_finite());
    }

    #[test]
    fn explosive_parameters_are_rejected() {
        let spec = spec(0, 0, 1);
        let mut params = TrueParams::baseline(&spec);
        params.phi = vec![1.05, 0.0];
        assert!(matches!(
            simulate_panel(&params, &spec, 96, 6),
            Err(Error::Spec(_))
        ));
    }

    #[test]
    fn regime_truth_shifts_the_factor_mean() {
        let spec = spec(0, 0, 1);
        let mut params = TrueParams::baseline(&spec);
        params.phi = vec![0.3, 0.0];
        params.sigma_factor = 0.5;
        params.regime = Some(RegimeTruth {
            mu_recession: -2.0,
            mu_expansion: 2.0,
            stay_expansion: 0.95,
            stay_recession: 0.95,
        });
        let (_, truth) = simulate_panel(&params, &spec, 500, 7).unwrap();
        let regimes = truth.regimes.unwrap();
        let mut sums = [0.0f64; 2];
        let mut counts = [0usize; 2];
        for (f, s) in truth.factor.iter().zip(&regimes) {
            sums[*s as usize] += *f;
            counts[*s as usize] += 1;
        }
        assert!(counts[0] > 20 && counts[1] > 20);
        let mean_rec = sums[0] / counts[0] as f64;
        let mean_exp = sums[1] / counts[1] as f64;
        assert!(mean_rec < -1.0, "recession mean {mean_rec}");
        assert!(mean_exp > 1.0, "expansion mean {mean_exp}");
    }
}
