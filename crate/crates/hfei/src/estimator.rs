//! The Gibbs sampler, posterior storage, and model comparison.
//!
//! One iteration draws, in order: the full state path (factor and
//! idiosyncratic components) from the simulation smoother, the loadings
//! by GLS, the idiosyncratic AR coefficients, the factor AR
//! coefficients, and the innovation volatilities (stochastic-volatility
//! paths where switched on, constant variances otherwise). The filter
//! pass that feeds the smoother also yields the conditional
//! log-likelihood of the previous iteration's parameters, which is what
//! the conditional deviance information criterion consumes.
//!
//! The eight-specification grid crosses the heterogeneity order
//! s ∈ {0, 1} with four volatility configurations (none, factor only,
//! idiosyncratic only, both).

use std::fmt::Write as _;
use std::io::{Read, Write as IoWrite};
use std::path::Path;

use ndarray::{Array2, Array3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::calendar::PseudoWeekStamp;
use crate::error::{Error, Result};
use crate::panel::GrowthPanel;
use crate::samplers::{
    draw_ar_factor, draw_ar_idio, draw_const_variance, draw_loadings, draw_volpath, FactorPath,
    VolPath,
};
use crate::ssmfilter::{kalman_filter, simulation_smoother, InitialState};
use crate::statespace::{build_layout, ModelSpec, StateLayout, StateSpaceSystem};

/// Stored Gibbs output. All post-burn-in draws are kept, unthinned.
#[derive(Clone, Debug)]
pub struct PosteriorDraws {
    pub spec: ModelSpec,
    pub spine: Vec<PseudoWeekStamp>,
    /// Per-series means removed from the growth panel before estimation.
    pub means: Vec<f64>,
    /// Factor path per kept iteration (kept × T).
    pub factor: Array2<f64>,
    /// Loadings per kept iteration (kept × n × (s+1)).
    pub loadings: Array3<f64>,
    /// Factor AR coefficients (kept × p_f).
    pub phi: Array2<f64>,
    /// Idiosyncratic AR coefficients (kept × n × p_q).
    pub rho: Array3<f64>,
    /// Factor innovation volatility path (kept × T).
    pub sigma_factor: Array2<f64>,
    /// Volatility-of-volatility draws for the factor.
    pub omega2_factor: Vec<f64>,
    /// Idiosyncratic volatility paths (kept × n × T).
    pub sigma_idio: Array3<f64>,
    /// Volatility-of-volatility draws per series (kept × n).
    pub omega2_idio: Array2<f64>,
    /// Conditional log-likelihood log f(y | volatilities, θ) per kept
    /// iteration.
    pub loglik: Vec<f64>,
}

impl PosteriorDraws {
    pub fn kept(&self) -> usize {
        self.factor.nrows()
    }

    pub fn t_len(&self) -> usize {
        self.factor.ncols()
    }

    /// Posterior-mean factor path.
    pub fn factor_mean(&self) -> Vec<f64> {
        let kept = self.kept() as f64;
        (0..self.t_len())
            .map(|t| self.factor.column(t).sum() / kept)
            .collect()
    }

    /// The σ matrix (factor row first) of one kept draw, as the filter
    /// consumes it.
    pub fn sigma_matrix_of(&self, k: usize) -> Array2<f64> {
        let n = self.spec.n_series();
        let t_len = self.t_len();
        let mut m = Array2::<f64>::zeros((n + 1, t_len));
        for t in 0..t_len {
            m[[0, t]] = self.sigma_factor[[k, t]];
            for i in 0..n {
                m[[i + 1, t]] = self.sigma_idio[[k, i, t]];
            }
        }
        m
    }

    /// Loadings, factor AR, and idiosyncratic AR of one kept draw.
    pub fn params_of(&self, k: usize) -> (Array2<f64>, Vec<f64>, Array2<f64>) {
        let n = self.spec.n_series();
        let mut loadings = Array2::<f64>::zeros((n, self.spec.s + 1));
        let mut rho = Array2::<f64>::zeros((n, self.spec.p_q));
        for i in 0..n {
            for a in 0..=self.spec.s {
                loadings[[i, a]] = self.loadings[[k, i, a]];
            }
            for h in 0..self.spec.p_q {
                rho[[i, h]] = self.rho[[k, i, h]];
            }
        }
        let phi: Vec<f64> = (0..self.spec.p_f).map(|h| self.phi[[k, h]]).collect();
        (loadings, phi, rho)
    }
}

/// Conditional DIC decomposition.
#[derive(Clone, Copy, Debug)]
pub struct DicReport {
    /// Mean deviance over kept draws.
    pub mean_deviance: f64,
    /// Deviance at the posterior-mean parameters.
    pub deviance_at_mean: f64,
    /// Effective number of parameters.
    pub p_d: f64,
    pub dic: f64,
}

/// Mutable sampler state carried across iterations.
struct ChainState {
    loadings: Array2<f64>,
    phi: Vec<f64>,
    rho: Array2<f64>,
    vol_factor: VolPath,
    vol_idio: Vec<VolPath>,
}

fn sigma_matrix(state: &ChainState, t_len: usize) -> Array2<f64> {
    let n = state.vol_idio.len();
    let mut m = Array2::<f64>::zeros((n + 1, t_len));
    for t in 0..t_len {
        m[[0, t]] = state.vol_factor.sigma[t];
    }
    for (i, vol) in state.vol_idio.iter().enumerate() {
        for t in 0..t_len {
            m[[i + 1, t]] = vol.sigma[t];
        }
    }
    m
}

/// Extracts the extended factor path (pre-sample lags from the first
/// state, contemporaneous values afterwards).
fn factor_from_draw(layout: &StateLayout, states: &Array2<f64>) -> FactorPath {
    let pre = layout.factor_len - 1;
    let t_len = states.ncols();
    let mut values = vec![0.0; t_len + pre];
    for lag in 0..layout.factor_len {
        values[pre - lag] = states[[lag, 0]];
    }
    for t in 1..t_len {
        values[pre + t] = states[[0, t]];
    }
    FactorPath { values, pre }
}

fn idio_from_draw(layout: &StateLayout, states: &Array2<f64>, series: usize) -> Vec<f64> {
    let (offset, _) = layout.idio_block(series);
    (0..states.ncols()).map(|t| states[[offset, t]]).collect()
}

/// AR residuals e_t = x_t − Σ_h c_h x_{t−h} for t = p..len-1.
fn ar_residuals(path: &[f64], coefs: &[f64]) -> Vec<f64> {
    let p = coefs.len();
    (p..path.len())
        .map(|t| {
            let mut e = path[t];
            for (h, &c) in coefs.iter().enumerate() {
                e -= c * path[t - h - 1];
            }
            e
        })
        .collect()
}

/// Updates a volatility state from residuals aligned at offset `p`:
/// the refreshed path covers positions p..T-1 and the head is padded
/// with the first refreshed value.
fn update_vol<R: Rng + ?Sized>(
    residuals: &[f64],
    current: &VolPath,
    p: usize,
    t_len: usize,
    stochastic: bool,
    priors: &crate::samplers::Priors,
    rng: &mut R,
) -> Result<VolPath> {
    if stochastic {
        let window = VolPath {
            sigma: current.sigma[p..].to_vec(),
            omega2: current.omega2,
        };
        let refreshed = draw_volpath(residuals, &window, priors, rng)?;
        let mut sigma = vec![refreshed.sigma[0]; t_len];
        sigma[p..].copy_from_slice(&refreshed.sigma);
        Ok(VolPath {
            sigma,
            omega2: refreshed.omega2,
        })
    } else {
        let var = draw_const_variance(residuals, priors, rng)?;
        Ok(VolPath::constant(var.sqrt(), t_len))
    }
}

fn initial_state(spec: &ModelSpec, data: &Array2<f64>, t_len: usize) -> ChainState {
    let n = spec.n_series();
    let mut loadings = Array2::<f64>::zeros((n, spec.s + 1));
    for i in 0..n {
        loadings[[i, 0]] = 1.0;
    }
    let mut phi = vec![0.0; spec.p_f];
    phi[0] = spec.priors.factor_ar_mean;
    let rho = Array2::<f64>::zeros((n, spec.p_q));
    let mut stds = Vec::with_capacity(n);
    for i in 0..n {
        let obs: Vec<f64> = (0..t_len)
            .map(|t| data[[i, t]])
            .filter(|v| v.is_finite())
            .collect();
        let std = if obs.len() > 1 {
            let mean = obs.iter().sum::<f64>() / obs.len() as f64;
            let var =
                obs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (obs.len() - 1) as f64;
            var.sqrt().max(1e-4)
        } else {
            1.0
        };
        stds.push(std);
    }
    let avg_std = stds.iter().sum::<f64>() / n as f64;
    ChainState {
        loadings,
        phi,
        rho,
        vol_factor: VolPath::constant(avg_std, t_len),
        vol_idio: stds
            .iter()
            .map(|s| VolPath::constant(*s, t_len))
            .collect(),
    }
}

/// Runs the Gibbs sampler over a growth panel. The panel is demeaned
/// internally; series ordering must already be quarterly, monthly,
/// weekly (as [`crate::panel::MixedPanel::new`] produces). Reproducible:
/// the same spec, panel, and seed give bitwise-identical draws.
pub fn run_gibbs(spec: &ModelSpec, panel: &GrowthPanel, seed: u64) -> Result<PosteriorDraws> {
    spec.validate()?;
    let (n_q, n_m, n_w) = panel.counts();
    if (n_q, n_m, n_w) != (spec.n_q, spec.n_m, spec.n_w) {
        return Err(Error::Spec(format!(
            "spec counts ({}, {}, {}) do not match panel counts ({n_q}, {n_m}, {n_w})",
            spec.n_q, spec.n_m, spec.n_w
        )));
    }
    let n = spec.n_series();
    let mut demeaned = panel.clone();
    demeaned.demean();
    let data = demeaned.data_matrix();
    let t_len = data.ncols();
    if t_len < 60 {
        return Err(Error::InsufficientData(format!(
            "panel spans only {t_len} pseudo-weeks"
        )));
    }

    let layout = build_layout(spec)?;
    let init = InitialState::diffuse(layout.n_s);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = initial_state(spec, &data, t_len);

    let kept_n = spec.chain.iterations - spec.chain.burn_in;
    let mut out = PosteriorDraws {
        spec: spec.clone(),
        spine: panel.spine.clone(),
        means: demeaned.means.clone(),
        factor: Array2::zeros((kept_n, t_len)),
        loadings: Array3::zeros((kept_n, n, spec.s + 1)),
        phi: Array2::zeros((kept_n, spec.p_f)),
        rho: Array3::zeros((kept_n, n, spec.p_q)),
        sigma_factor: Array2::zeros((kept_n, t_len)),
        omega2_factor: vec![0.0; kept_n],
        sigma_idio: Array3::zeros((kept_n, n, t_len)),
        omega2_idio: Array2::zeros((kept_n, n)),
        loglik: vec![0.0; kept_n],
    };

    let gdp_row = Some(spec.gdp_index);
    for iter in 0..spec.chain.iterations {
        let step = |e: Error| Error::Estimation {
            iteration: iter,
            message: e.to_string(),
        };

        // States given θ^{j-1}; the filter side-product is the
        // conditional log-likelihood of θ^{j-1}.
        let system = StateSpaceSystem::assemble(&layout, &state.loadings, &state.phi, &state.rho)
            .map_err(step)?;
        let sigmas = sigma_matrix(&state, t_len);
        let (draw, loglik_prev) =
            simulation_smoother(&system, &sigmas, &data, &init, &mut rng).map_err(step)?;
        if iter > spec.chain.burn_in {
            out.loglik[iter - spec.chain.burn_in - 1] = loglik_prev;
        }

        let factor = factor_from_draw(&layout, &draw.states);
        let idio: Vec<Vec<f64>> = (0..n)
            .map(|i| idio_from_draw(&layout, &draw.states, i))
            .collect();

        // Loadings by GLS.
        let sigma_idio_mat = {
            let mut m = Array2::<f64>::zeros((n, t_len));
            for (i, vol) in state.vol_idio.iter().enumerate() {
                for t in 0..t_len {
                    m[[i, t]] = vol.sigma[t];
                }
            }
            m
        };
        state.loadings = draw_loadings(
            &layout,
            &factor,
            &data,
            &sigma_idio_mat,
            &state.rho,
            &spec.priors,
            gdp_row,
            &mut rng,
        )
        .map_err(step)?;

        // Idiosyncratic AR coefficients.
        for i in 0..n {
            let coefs = draw_ar_idio(
                &idio[i],
                &state.vol_idio[i].sigma,
                spec.p_q,
                &spec.priors,
                &mut rng,
            )
            .map_err(step)?;
            for (h, c) in coefs.iter().enumerate() {
                state.rho[[i, h]] = *c;
            }
        }

        // Factor AR coefficients.
        state.phi = draw_ar_factor(
            factor.in_sample(),
            &state.vol_factor.sigma,
            spec.p_f,
            &spec.priors,
            &mut rng,
        )
        .map_err(step)?;

        // Volatilities.
        let factor_resid = ar_residuals(factor.in_sample(), &state.phi);
        state.vol_factor = update_vol(
            &factor_resid,
            &state.vol_factor,
            spec.p_f,
            t_len,
            spec.sv_factor,
            &spec.priors,
            &mut rng,
        )
        .map_err(step)?;
        for i in 0..n {
            let rho_i: Vec<f64> = state.rho.row(i).to_vec();
            let resid = ar_residuals(&idio[i], &rho_i);
            state.vol_idio[i] = update_vol(
                &resid,
                &state.vol_idio[i],
                spec.p_q,
                t_len,
                spec.sv_idio,
                &spec.priors,
                &mut rng,
            )
            .map_err(step)?;
        }

        // Keep post-burn-in draws.
        if iter >= spec.chain.burn_in {
            let k = iter - spec.chain.burn_in;
            for t in 0..t_len {
                out.factor[[k, t]] = factor.in_sample()[t];
                out.sigma_factor[[k, t]] = state.vol_factor.sigma[t];
            }
            for i in 0..n {
                for a in 0..=spec.s {
                    out.loadings[[k, i, a]] = state.loadings[[i, a]];
                }
                for h in 0..spec.p_q {
                    out.rho[[k, i, h]] = state.rho[[i, h]];
                }
                out.omega2_idio[[k, i]] = state.vol_idio[i].omega2;
                for t in 0..t_len {
                    out.sigma_idio[[k, i, t]] = state.vol_idio[i].sigma[t];
                }
            }
            for h in 0..spec.p_f {
                out.phi[[k, h]] = state.phi[h];
            }
            out.omega2_factor[k] = state.vol_factor.omega2;
        }
    }

    // Conditional log-likelihood of the final kept draw.
    let system = StateSpaceSystem::assemble(&layout, &state.loadings, &state.phi, &state.rho)?;
    let sigmas = sigma_matrix(&state, t_len);
    let res = kalman_filter(&system, &sigmas, &data, &init)?;
    out.loglik[kept_n - 1] = res.loglik;

    Ok(out)
}

/// Conditional DIC: mean deviance over kept draws plus the effective
/// parameter count, with the deviance at the posterior mean evaluated by
/// one filter pass at the posterior-mean loadings, AR coefficients, and
/// volatility paths.
pub fn compute_dic(draws: &PosteriorDraws, panel: &GrowthPanel) -> Result<DicReport> {
    let kept = draws.kept();
    if kept == 0 {
        return Err(Error::InsufficientData("no kept draws".into()));
    }
    let spec = &draws.spec;
    let n = spec.n_series();
    let t_len = draws.t_len();

    let mean_loglik = draws.loglik.iter().sum::<f64>() / kept as f64;
    let mean_deviance = -2.0 * mean_loglik;

    // Posterior means of the conditioning parameters.
    let mut loadings = Array2::<f64>::zeros((n, spec.s + 1));
    for i in 0..n {
        for a in 0..=spec.s {
            let mut acc = 0.0;
            for k in 0..kept {
                acc += draws.loadings[[k, i, a]];
            }
            loadings[[i, a]] = acc / kept as f64;
        }
    }
    let phi: Vec<f64> = (0..spec.p_f)
        .map(|h| draws.phi.column(h).sum() / kept as f64)
        .collect();
    let mut rho = Array2::<f64>::zeros((n, spec.p_q));
    for i in 0..n {
        for h in 0..spec.p_q {
            let mut acc = 0.0;
            for k in 0..kept {
                acc += draws.rho[[k, i, h]];
            }
            rho[[i, h]] = acc / kept as f64;
        }
    }
    let mut sigmas = Array2::<f64>::zeros((n + 1, t_len));
    for t in 0..t_len {
        sigmas[[0, t]] = draws.sigma_factor.column(t).sum() / kept as f64;
        for i in 0..n {
            let mut acc = 0.0;
            for k in 0..kept {
                acc += draws.sigma_idio[[k, i, t]];
            }
            sigmas[[i + 1, t]] = acc / kept as f64;
        }
    }

    let mut demeaned = panel.clone();
    demeaned.demean();
    let data = demeaned.data_matrix();
    let layout = build_layout(spec)?;
    let system = StateSpaceSystem::assemble(&layout, &loadings, &phi, &rho)?;
    let init = InitialState::diffuse(layout.n_s);
    let res = kalman_filter(&system, &sigmas, &data, &init)?;
    let deviance_at_mean = -2.0 * res.loglik;

    let p_d = mean_deviance - deviance_at_mean;
    Ok(DicReport {
        mean_deviance,
        deviance_at_mean,
        p_d,
        dic: mean_deviance + p_d,
    })
}

/// Split-half potential-scale-reduction diagnostics: the kept chain is
/// cut in two and each scalar parameter's between/within-half variance
/// ratio is reported. Values near 1 are consistent with a settled
/// chain.
pub fn split_half_diagnostics(draws: &PosteriorDraws) -> Vec<(String, f64)> {
    let spec = &draws.spec;
    let kept = draws.kept();
    let n = spec.n_series();
    let mut out = Vec::new();
    let mut push = |name: String, series: Vec<f64>| {
        out.push((name, split_rhat(&series)));
    };
    for h in 0..spec.p_f {
        push(
            format!("phi{}", h + 1),
            (0..kept).map(|k| draws.phi[[k, h]]).collect(),
        );
    }
    for i in 0..n {
        for a in 0..=spec.s {
            if i == spec.gdp_index && a == 0 {
                continue; // fixed at 1
            }
            push(
                format!("lambda{i}_{a}"),
                (0..kept).map(|k| draws.loadings[[k, i, a]]).collect(),
            );
        }
        for h in 0..spec.p_q {
            push(
                format!("rho{i}_{}", h + 1),
                (0..kept).map(|k| draws.rho[[k, i, h]]).collect(),
            );
        }
    }
    push(
        "sigma_factor_mid".to_string(),
        (0..kept)
            .map(|k| draws.sigma_factor[[k, draws.t_len() / 2]])
            .collect(),
    );
    out
}

fn split_rhat(series: &[f64]) -> f64 {
    let m = series.len() / 2;
    if m < 2 {
        return f64::NAN;
    }
    let halves = [&series[..m], &series[series.len() - m..]];
    let means: Vec<f64> = halves
        .iter()
        .map(|h| h.iter().sum::<f64>() / m as f64)
        .collect();
    let vars: Vec<f64> = halves
        .iter()
        .zip(&means)
        .map(|(h, mu)| h.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (m - 1) as f64)
        .collect();
    let grand = 0.5 * (means[0] + means[1]);
    let b = m as f64
        * ((means[0] - grand) * (means[0] - grand) + (means[1] - grand) * (means[1] - grand));
    let w = 0.5 * (vars[0] + vars[1]);
    if w <= 0.0 {
        return 1.0;
    }
    let var_plus = (m as f64 - 1.0) / m as f64 * w + b / m as f64;
    (var_plus / w).sqrt()
}

/// One cell of the specification grid.
#[derive(Clone, Debug)]
pub struct GridCell {
    pub s: usize,
    pub sv_factor: bool,
    pub sv_idio: bool,
    pub seed: u64,
    pub report: std::result::Result<DicReport, String>,
}

/// SplitMix64 step, used to derive independent per-cell seeds.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Volatility configurations in grid order.
pub const VOL_CONFIGS: [(bool, bool, &str); 4] = [
    (false, false, "none"),
    (true, false, "factor"),
    (false, true, "idiosyncratic"),
    (true, true, "both"),
];

/// Runs the eight-cell grid: s ∈ {0, 1} × four volatility
/// configurations. Cell failures are recorded without stopping the
/// grid. `threads` caps concurrent cells; each cell's seed derives from
/// the base seed and its index, so results do not depend on scheduling.
pub fn run_grid(
    panel: &GrowthPanel,
    base_spec: &ModelSpec,
    seed: u64,
    threads: usize,
) -> Result<Vec<GridCell>> {
    base_spec.validate()?;
    let mut cells: Vec<(ModelSpec, u64)> = Vec::with_capacity(8);
    let mut idx = 0u64;
    for s in 0..=1usize {
        for (sv_factor, sv_idio, _) in VOL_CONFIGS {
            let mut spec = base_spec.clone();
            spec.s = s;
            spec.sv_factor = sv_factor;
            spec.sv_idio = sv_idio;
            cells.push((spec, derive_seed(seed, idx)));
            idx += 1;
        }
    }

    let threads = threads.clamp(1, cells.len());
    let mut reports: Vec<Option<GridCell>> = vec![None; cells.len()];
    {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let reports_mutex = std::sync::Mutex::new(&mut reports);
        std::thread::scope(|scope| {
            for _ in 0..threads {
                scope.spawn(|| loop {
                    let k = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if k >= cells.len() {
                        break;
                    }
                    let (spec, cell_seed) = &cells[k];
                    let report = run_gibbs(spec, panel, *cell_seed)
                        .and_then(|draws| compute_dic(&draws, panel))
                        .map_err(|e| e.to_string());
                    let cell = GridCell {
                        s: spec.s,
                        sv_factor: spec.sv_factor,
                        sv_idio: spec.sv_idio,
                        seed: *cell_seed,
                        report,
                    };
                    let mut guard = reports_mutex.lock().expect("no poisoned lock");
                    guard[k] = Some(cell);
                });
            }
        });
    }
    Ok(reports.into_iter().map(|c| c.expect("cell ran")).collect())
}

/// The grid cell with the lowest DIC (lower is better).
pub fn best_cell(cells: &[GridCell]) -> Option<&GridCell> {
    cells
        .iter()
        .filter_map(|c| c.report.as_ref().ok().map(|r| (c, r.dic)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite DIC"))
        .map(|(c, _)| c)
}

/// Renders the grid as a 4 × 2 table (rows: volatility configuration,
/// columns: heterogeneity order).
pub fn grid_table(cells: &[GridCell]) -> String {
    let mut out = String::from("volatility,s=0,s=1\n");
    for (sv_factor, sv_idio, name) in VOL_CONFIGS {
        let mut row = vec![name.to_string()];
        for s in 0..=1usize {
            let cell = cells
                .iter()
                .find(|c| c.s == s && c.sv_factor == sv_factor && c.sv_idio == sv_idio);
            let text = match cell {
                Some(GridCell { report: Ok(r), .. }) => format!("{:.3}", r.dic),
                Some(GridCell { report: Err(e), .. }) => format!("failed: {e}"),
                None => "missing".to_string(),
            };
            row.push(text);
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

// ---------------------------------------------------------------------------
// Draw store
// ---------------------------------------------------------------------------

const STORE_VERSION: u32 = 1;

/// FNV-1a over the canonical spec description; pins stored draws to the
/// exact configuration that produced them.
pub fn spec_hash(spec: &ModelSpec) -> u64 {
    let text = format!(
        "pf={};pq={};s={};svf={};svi={};nq={};nm={};nw={};gdp={};it={};burn={};\
         gamma={};farm={};lvar={};onu={};os2={};cnu={};cs2={}",
        spec.p_f,
        spec.p_q,
        spec.s,
        spec.sv_factor,
        spec.sv_idio,
        spec.n_q,
        spec.n_m,
        spec.n_w,
        spec.gdp_index,
        spec.chain.iterations,
        spec.chain.burn_in,
        spec.priors.minnesota_gamma,
        spec.priors.factor_ar_mean,
        spec.priors.loading_var,
        spec.priors.omega_nu,
        spec.priors.omega_s2,
        spec.priors.const_var_nu,
        spec.priors.const_var_s2,
    );
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn write_block(dir: &Path, name: &str, data: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(data.len() * 8);
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = std::fs::File::create(dir.join(format!("{name}.bin")))?;
    f.write_all(&bytes)?;
    Ok(())
}

fn read_block(dir: &Path, name: &str, expect: usize) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    std::fs::File::open(dir.join(format!("{name}.bin")))?.read_to_end(&mut bytes)?;
    if bytes.len() != expect * 8 {
        return Err(Error::Input(format!(
            "block '{name}' holds {} bytes, expected {}",
            bytes.len(),
            expect * 8
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

/// Writes the draw store: one flat little-endian f64 array per block
/// plus a plain-text manifest with dimensions, seed, and spec hash.
pub fn save_draws(draws: &PosteriorDraws, seed: u64, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let spec = &draws.spec;
    let n = spec.n_series();
    let kept = draws.kept();
    let t_len = draws.t_len();
    let start = draws.spine[0];

    let mut manifest = String::new();
    let _ = writeln!(manifest, "format_version={STORE_VERSION}");
    let _ = writeln!(manifest, "seed={seed}");
    let _ = writeln!(manifest, "spec_hash={:016x}", spec_hash(spec));
    let _ = writeln!(manifest, "p_f={}", spec.p_f);
    let _ = writeln!(manifest, "p_q={}", spec.p_q);
    let _ = writeln!(manifest, "s={}", spec.s);
    let _ = writeln!(manifest, "sv_factor={}", spec.sv_factor);
    let _ = writeln!(manifest, "sv_idio={}", spec.sv_idio);
    let _ = writeln!(manifest, "n_q={}", spec.n_q);
    let _ = writeln!(manifest, "n_m={}", spec.n_m);
    let _ = writeln!(manifest, "n_w={}", spec.n_w);
    let _ = writeln!(manifest, "gdp_index={}", spec.gdp_index);
    let _ = writeln!(manifest, "iterations={}", spec.chain.iterations);
    let _ = writeln!(manifest, "burn_in={}", spec.chain.burn_in);
    let _ = writeln!(manifest, "kept={kept}");
    let _ = writeln!(manifest, "t_len={t_len}");
    let _ = writeln!(
        manifest,
        "spine_start={},{}",
        start.first_day(),
        start.week()
    );
    let blocks: Vec<(&str, Vec<usize>)> = vec![
        ("factor", vec![kept, t_len]),
        ("loadings", vec![kept, n, spec.s + 1]),
        ("phi", vec![kept, spec.p_f]),
        ("rho", vec![kept, n, spec.p_q]),
        ("sigma_factor", vec![kept, t_len]),
        ("omega2_factor", vec![kept]),
        ("sigma_idio", vec![kept, n, t_len]),
        ("omega2_idio", vec![kept, n]),
        ("loglik", vec![kept]),
        ("means", vec![n]),
    ];
    for (name, shape) in &blocks {
        let shape_text: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
        let _ = writeln!(manifest, "block={name}:{}", shape_text.join("x"));
    }
    std::fs::write(dir.join("manifest.txt"), manifest)?;

    write_block(dir, "factor", draws.factor.as_slice().expect("contiguous"))?;
    write_block(
        dir,
        "loadings",
        draws.loadings.as_slice().expect("contiguous"),
    )?;
    write_block(dir, "phi", draws.phi.as_slice().expect("contiguous"))?;
    write_block(dir, "rho", draws.rho.as_slice().expect("contiguous"))?;
    write_block(
        dir,
        "sigma_factor",
        draws.sigma_factor.as_slice().expect("contiguous"),
    )?;
    write_block(dir, "omega2_factor", &draws.omega2_factor)?;
    write_block(
        dir,
        "sigma_idio",
        draws.sigma_idio.as_slice().expect("contiguous"),
    )?;
    write_block(
        dir,
        "omega2_idio",
        draws.omega2_idio.as_slice().expect("contiguous"),
    )?;
    write_block(dir, "loglik", &draws.loglik)?;
    write_block(dir, "means", &draws.means)?;
    Ok(())
}

fn manifest_value<'a>(manifest: &'a str, key: &str) -> Result<&'a str> {
    manifest
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .ok_or_else(|| Error::Input(format!("manifest is missing '{key}'")))
}

fn manifest_parse<T: std::str::FromStr>(manifest: &str, key: &str) -> Result<T> {
    manifest_value(manifest, key)?
        .parse()
        .map_err(|_| Error::Input(format!("manifest value for '{key}' is malformed")))
}

/// Reads a draw store written by [`save_draws`]. Returns the draws and
/// the seed recorded in the manifest.
pub fn load_draws(dir: &Path) -> Result<(PosteriorDraws, u64)> {
    let manifest = std::fs::read_to_string(dir.join("manifest.txt"))?;
    let version: u32 = manifest_parse(&manifest, "format_version")?;
    if version != STORE_VERSION {
        return Err(Error::Input(format!(
            "draw store version {version} unsupported"
        )));
    }
    let seed: u64 = manifest_parse(&manifest, "seed")?;
    let mut spec = ModelSpec::new(
        manifest_parse(&manifest, "n_q")?,
        manifest_parse(&manifest, "n_m")?,
        manifest_parse(&manifest, "n_w")?,
    );
    spec.p_f = manifest_parse(&manifest, "p_f")?;
    spec.p_q = manifest_parse(&manifest, "p_q")?;
    spec.s = manifest_parse(&manifest, "s")?;
    spec.sv_factor = manifest_parse(&manifest, "sv_factor")?;
    spec.sv_idio = manifest_parse(&manifest, "sv_idio")?;
    spec.gdp_index = manifest_parse(&manifest, "gdp_index")?;
    spec.chain.iterations = manifest_parse(&manifest, "iterations")?;
    spec.chain.burn_in = manifest_parse(&manifest, "burn_in")?;
    let kept: usize = manifest_parse(&manifest, "kept")?;
    let t_len: usize = manifest_parse(&manifest, "t_len")?;
    let n = spec.n_series();

    let spine_start = manifest_value(&manifest, "spine_start")?;
    let (date_text, _week_text) = spine_start
        .split_once(',')
        .ok_or_else(|| Error::Input("spine_start must be 'date,week'".into()))?;
    let date: chrono::NaiveDate = date_text
        .parse()
        .map_err(|_| Error::Input("bad spine_start date".into()))?;
    let start = crate::calendar::stamp_of_date(date);
    let spine: Vec<PseudoWeekStamp> = (0..t_len).map(|k| start.advance(k)).collect();

    let factor = Array2::from_shape_vec((kept, t_len), read_block(dir, "factor", kept * t_len)?)
        .expect("shape");
    let loadings = Array3::from_shape_vec(
        (kept, n, spec.s + 1),
        read_block(dir, "loadings", kept * n * (spec.s + 1))?,
    )
    .expect("shape");
    let phi = Array2::from_shape_vec((kept, spec.p_f), read_block(dir, "phi", kept * spec.p_f)?)
        .expect("shape");
    let rho = Array3::from_shape_vec(
        (kept, n, spec.p_q),
        read_block(dir, "rho", kept * n * spec.p_q)?,
    )
    .expect("shape");
    let sigma_factor = Array2::from_shape_vec(
        (kept, t_len),
        read_block(dir, "sigma_factor", kept * t_len)?,
    )
    .expect("shape");
    let omega2_factor = read_block(dir, "omega2_factor", kept)?;
    let sigma_idio = Array3::from_shape_vec(
        (kept, n, t_len),
        read_block(dir, "sigma_idio", kept * n * t_len)?,
    )
    .expect("shape");
    let omega2_idio = Array2::from_shape_vec((kept, n), read_block(dir, "omega2_idio", kept * n)?)
        .expect("shape");
    let loglik = read_block(dir, "loglik", kept)?;
    let means = read_block(dir, "means", n)?;

    Ok((
        PosteriorDraws {
            spec,
            spine,
            means,
            factor,
            loadings,
            phi,
            rho,
            sigma_factor,
            omega2_factor,
            sigma_idio,
            omega2_idio,
            loglik,
        },
        seed,
    ))
}
