//! Missing-data Kalman filter and simulation smoother.
//!
//! The observation equation carries no measurement noise (the
//! idiosyncratic components live in the state), so the innovation
//! structure is exactly singular; observed rows are processed one at a
//! time with a Joseph-form covariance update and a small jitter on the
//! scalar prediction variance. Missing entries are skipped (row
//! deletion), so a fully missing period is a pure prediction step.
//!
//! State draws come from the mean-correction simulation smoother: a
//! forward simulation of the model is combined with the smoothed mean of
//! the artificial residual series, which yields an exact draw from the
//! conditional distribution of the states given the observed data.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::cholesky;
use crate::statespace::StateSpaceSystem;

/// Initial-state covariance scale used for the approximately diffuse
/// prior ξ_1 ~ N(0, κI).
pub const DIFFUSE_KAPPA: f64 = 1e6;

/// Jitter added to the scalar observation prediction variance before
/// inverting, guarding exactly singular directions.
pub const OBS_JITTER: f64 = 1e-10;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Prior for the initial state.
#[derive(Clone, Debug)]
pub struct InitialState {
    pub mean: Array1<f64>,
    pub cov: Array2<f64>,
}

impl InitialState {
    /// Mean zero, covariance κI.
    pub fn diffuse(n_state: usize) -> Self {
        Self {
            mean: Array1::zeros(n_state),
            cov: Array2::eye(n_state) * DIFFUSE_KAPPA,
        }
    }
}

/// Output of a full filter pass over one data stream.
#[derive(Clone, Debug)]
pub struct FilterResult {
    /// a_{t|t-1}, one column per period.
    pub predicted_means: Array2<f64>,
    /// a_{t|t}, one column per period.
    pub updated_means: Array2<f64>,
    /// P_{t|t-1} per period.
    pub predicted_covs: Vec<Array2<f64>>,
    /// P_{t|t} per period.
    pub updated_covs: Vec<Array2<f64>>,
    /// Log-likelihood contribution per period (0 where nothing observed).
    pub loglik_per_period: Vec<f64>,
    /// Total Gaussian log-likelihood of the observed entries.
    pub loglik: f64,
}

/// One sampled state trajectory, n_s × T.
#[derive(Clone, Debug)]
pub struct StateDraw {
    pub states: Array2<f64>,
}

/// Forward-pass records, stored struct-of-arrays so the hot loop never
/// allocates per scalar step.
struct CorePass {
    /// Per-stream total log-likelihood.
    loglik: Vec<f64>,
    /// Per-stream per-period contributions.
    loglik_per_period: Vec<Vec<f64>>,
    /// Number of scalar updates consumed per period.
    steps_per_period: Vec<usize>,
    /// Observation row of each scalar step.
    step_rows: Vec<usize>,
    /// Innovation variance of each scalar step.
    step_f: Vec<f64>,
    /// Updated-form gains, n_s values per scalar step.
    step_k: Vec<f64>,
    /// Innovations, one per stream per scalar step.
    step_v: Vec<f64>,
    /// Predicted means per stream (n_s × T each).
    pred_means: Vec<Array2<f64>>,
    /// Flat storage of P_{t|t-1}, T × n_s × n_s.
    pred_covs: Vec<f64>,
    /// Updated means/covs, only kept when `store_updated`.
    upd_means: Option<Array2<f64>>,
    upd_covs: Option<Vec<Array2<f64>>>,
}

fn validate_inputs(
    system: &StateSpaceSystem,
    sigmas: &Array2<f64>,
    streams: &[&Array2<f64>],
    init: &InitialState,
) -> Result<(usize, usize)> {
    let n_s = system.n_state();
    let n = system.n_obs();
    let t_len = streams
        .first()
        .map(|d| d.ncols())
        .ok_or_else(|| Error::Build("no data stream supplied".into()))?;
    for d in streams {
        if d.nrows() != n || d.ncols() != t_len {
            return Err(Error::Build(format!(
                "data is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                n,
                t_len
            )));
        }
        for v in d.iter() {
            if v.is_infinite() {
                return Err(Error::Numeric("data contains non-finite values".into()));
            }
        }
    }
    if sigmas.nrows() != system.shock_slots.len() || sigmas.ncols() != t_len {
        return Err(Error::Build(format!(
            "sigma paths are {}x{}, expected {}x{}",
            sigmas.nrows(),
            sigmas.ncols(),
            system.shock_slots.len(),
            t_len
        )));
    }
    if sigmas.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::Numeric(
            "sigma paths must be strictly positive and finite".into(),
        ));
    }
    if init.mean.len() != n_s || init.cov.nrows() != n_s || init.cov.ncols() != n_s {
        return Err(Error::Build("initial state dimensions mismatch".into()));
    }
    Ok((n_s, t_len))
}

/// Shared forward pass. Covariance recursion runs once; each data stream
/// has its own mean/innovation recursion against the common gains.
///
/// The scalar rank-1 covariance update `P ← P − cc'/F` is the Joseph
/// form specialized to a noiseless scalar observation; it preserves
/// exact symmetry, so only the transition step needs re-symmetrizing.
fn filter_core(
    system: &StateSpaceSystem,
    sigmas: &Array2<f64>,
    streams: &[&Array2<f64>],
    init: &InitialState,
    store_updated: bool,
) -> Result<CorePass> {
    let (n_s, t_len) = validate_inputs(system, sigmas, streams, init)?;
    let n_streams = streams.len();
    let n_obs = system.n_obs();

    let mut p: Vec<f64> = init.cov.as_slice().expect("contiguous").to_vec();
    let mut a: Vec<Vec<f64>> = (0..n_streams)
        .map(|_| init.mean.as_slice().expect("contiguous").to_vec())
        .collect();

    let mut out = CorePass {
        loglik: vec![0.0; n_streams],
        loglik_per_period: vec![vec![0.0; t_len]; n_streams],
        steps_per_period: Vec::with_capacity(t_len),
        step_rows: Vec::with_capacity(t_len * n_obs),
        step_f: Vec::with_capacity(t_len * n_obs),
        step_k: Vec::with_capacity(t_len * n_obs * n_s),
        step_v: Vec::with_capacity(t_len * n_obs * n_streams),
        pred_means: (0..n_streams)
            .map(|_| Array2::zeros((n_s, t_len)))
            .collect(),
        pred_covs: vec![0.0; t_len * n_s * n_s],
        upd_means: store_updated.then(|| Array2::zeros((n_s, t_len))),
        upd_covs: store_updated.then(Vec::new),
    };

    let mut c = vec![0.0f64; n_s];
    let mut a_next = vec![0.0f64; n_s];
    let mut scales = vec![0.0f64; system.shock_slots.len()];
    for t in 0..t_len {
        if t > 0 {
            // Predict: a ← F a, P ← F P F' + Q_t.
            for a_s in a.iter_mut() {
                system.apply_f_vec(a_s, &mut a_next);
                a_s.copy_from_slice(&a_next);
            }
            for (dst, src) in scales.iter_mut().zip(sigmas.column(t)) {
                *dst = *src;
            }
            system.predict_cov_flat(&mut p, n_s, &scales);
            crate::linalg::symmetrize_flat(&mut p, n_s);
        }
        for (s, a_s) in a.iter().enumerate() {
            for (dst, src) in out.pred_means[s].column_mut(t).iter_mut().zip(a_s) {
                *dst = *src;
            }
        }
        out.pred_covs[t * n_s * n_s..(t + 1) * n_s * n_s].copy_from_slice(&p);

        // Sequential scalar updates over observed rows.
        let mut steps_t = 0usize;
        for row in 0..n_obs {
            let missing_everywhere = streams.iter().all(|d| d[[row, t]].is_nan());
            if missing_everywhere {
                continue;
            }
            if streams.iter().any(|d| d[[row, t]].is_nan()) {
                return Err(Error::Build(format!(
                    "data streams disagree on missingness at row {row}, period {t}"
                )));
            }
            let h_row = system.h_row(row);
            // c = P Z', f = Z c + jitter; rows of P are contiguous.
            for (i, ci) in c.iter_mut().enumerate() {
                let prow = &p[i * n_s..(i + 1) * n_s];
                let mut acc = 0.0;
                for &(col, w) in h_row {
                    acc += w * prow[col];
                }
                *ci = acc;
            }
            let mut f = OBS_JITTER;
            for &(col, w) in h_row {
                f += w * c[col];
            }
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::Numeric(format!(
                    "non-positive innovation variance at period {t}, row {row}"
                )));
            }
            let f_inv = 1.0 / f;
            out.step_rows.push(row);
            out.step_f.push(f);
            out.step_k.extend(c.iter().map(|ci| ci * f_inv));
            for (s, d) in streams.iter().enumerate() {
                let mut pred = 0.0;
                for &(col, w) in h_row {
                    pred += w * a[s][col];
                }
                let v = d[[row, t]] - pred;
                if !v.is_finite() {
                    return Err(Error::Numeric(format!(
                        "non-finite innovation at period {t}, row {row}"
                    )));
                }
                let gain = v * f_inv;
                for (ai, ci) in a[s].iter_mut().zip(&c) {
                    *ai += ci * gain;
                }
                let contrib = -0.5 * (LN_2PI + f.ln() + v * v * f_inv);
                out.loglik[s] += contrib;
                out.loglik_per_period[s][t] += contrib;
                out.step_v.push(v);
            }
            // P ← P − cc'/F, symmetric by construction.
            for i in 0..n_s {
                let ci = c[i];
                if ci == 0.0 {
                    continue;
                }
                let scale = ci * f_inv;
                let prow = &mut p[i * n_s..(i + 1) * n_s];
                for (pj, cj) in prow.iter_mut().zip(&c) {
                    *pj -= scale * cj;
                }
            }
            steps_t += 1;
        }
        out.steps_per_period.push(steps_t);
        if let Some(um) = out.upd_means.as_mut() {
            for (dst, src) in um.column_mut(t).iter_mut().zip(&a[0]) {
                *dst = *src;
            }
        }
        if let Some(uc) = out.upd_covs.as_mut() {
            uc.push(Array2::from_shape_vec((n_s, n_s), p.clone()).expect("square"));
        }
    }
    Ok(out)
}

/// Runs the missing-data Kalman filter over one data stream (n × T,
/// NaN marks a missing entry) and returns means, covariances, and the
/// exact Gaussian log-likelihood of the observed entries.
pub fn kalman_filter(
    system: &StateSpaceSystem,
    sigmas: &Array2<f64>,
    data: &Array2<f64>,
    init: &InitialState,
) -> Result<FilterResult> {
    let core = filter_core(system, sigmas, &[data], init, true)?;
    let n_s = system.n_state();
    let t_len = data.ncols();
    let predicted_covs = (0..t_len)
        .map(|t| {
            Array2::from_shape_vec(
                (n_s, n_s),
                core.pred_covs[t * n_s * n_s..(t + 1) * n_s * n_s].to_vec(),
            )
            .expect("stored covariance is square")
        })
        .collect();
    Ok(FilterResult {
        predicted_means: core.pred_means[0].clone(),
        updated_means: core.upd_means.expect("requested"),
        predicted_covs,
        updated_covs: core.upd_covs.expect("requested"),
        loglik_per_period: core.loglik_per_period[0].clone(),
        loglik: core.loglik[0],
    })
}

/// Backward disturbance-smoothing pass for one stream of a completed
/// forward pass; returns the smoothed state means (n_s × T).
fn smooth_stream(system: &StateSpaceSystem, core: &CorePass, stream: usize) -> Array2<f64> {
    let n_s = system.n_state();
    let n_streams = core.loglik.len();
    let t_len = core.steps_per_period.len();
    let mut smoothed = Array2::<f64>::zeros((n_s, t_len));
    let mut r = vec![0.0f64; n_s];
    let mut r_next = vec![0.0f64; n_s];
    let mut step_end = core.step_rows.len();
    for t in (0..t_len).rev() {
        let step_start = step_end - core.steps_per_period[t];
        for step in (step_start..step_end).rev() {
            // r ← r + Z'(v/F - K'r)
            let k = &core.step_k[step * n_s..(step + 1) * n_s];
            let mut kr = 0.0;
            for (ki, ri) in k.iter().zip(&r) {
                kr += ki * ri;
            }
            let v = core.step_v[step * n_streams + stream];
            let coef = v / core.step_f[step] - kr;
            for &(col, w) in system.h_row(core.step_rows[step]) {
                r[col] += w * coef;
            }
        }
        step_end = step_start;
        // Smoothed mean: a_{t|t-1} + P_{t|t-1} r.
        let cov = &core.pred_covs[t * n_s * n_s..(t + 1) * n_s * n_s];
        let pred = core.pred_means[stream].column(t);
        let mut col = smoothed.column_mut(t);
        for i in 0..n_s {
            let mut acc = pred[i];
            let row = &cov[i * n_s..(i + 1) * n_s];
            for (pij, rj) in row.iter().zip(&r) {
                acc += pij * rj;
            }
            col[i] = acc;
        }
        // r_{t-1, end} = F' r_{t,0}.
        if t > 0 {
            system.apply_f_t_vec(&r, &mut r_next);
            std::mem::swap(&mut r, &mut r_next);
        }
    }
    smoothed
}

/// Smoothed state means E[ξ_t | data] for every period.
pub fn smoothed_means(
    system: &StateSpaceSystem,
    sigmas: &Array2<f64>,
    data: &Array2<f64>,
    init: &InitialState,
) -> Result<Array2<f64>> {
    let core = filter_core(system, sigmas, &[data], init, false)?;
    Ok(smooth_stream(system, &core, 0))
}

/// Draws one trajectory of the full state vector from its conditional
/// distribution given the observed data, and returns the log-likelihood
/// of the data as a by-product of the shared forward pass.
pub fn simulation_smoother<R: Rng + ?Sized>(
    system: &StateSpaceSystem,
    sigmas: &Array2<f64>,
    data: &Array2<f64>,
    init: &InitialState,
    rng: &mut R,
) -> Result<(StateDraw, f64)> {
    let (n_s, t_len) = validate_inputs(system, sigmas, &[data], init)?;

    // Forward-simulate states and observations from the model.
    let init_chol = cholesky(&init.cov)
        .map_err(|e| Error::Numeric(format!("initial covariance: {e}")))?;
    let mut plus = Array2::<f64>::zeros((n_s, t_len));
    {
        let z: Vec<f64> = (0..n_s).map(|_| rng.sample(StandardNormal)).collect();
        let mut col = plus.column_mut(0);
        for i in 0..n_s {
            let mut acc = init.mean[i];
            for j in 0..=i {
                acc += init_chol[[i, j]] * z[j];
            }
            col[i] = acc;
        }
    }
    let mut cur = vec![0.0f64; n_s];
    let mut next = vec![0.0f64; n_s];
    for t in 1..t_len {
        for (i, v) in plus.column(t - 1).iter().enumerate() {
            cur[i] = *v;
        }
        system.apply_f_vec(&cur, &mut next);
        for (slot, sig) in system.shock_slots.iter().zip(sigmas.column(t).iter()) {
            let z: f64 = rng.sample(StandardNormal);
            next[*slot] += sig * z;
        }
        let mut col = plus.column_mut(t);
        for i in 0..n_s {
            col[i] = next[i];
        }
    }

    // Artificial residual stream y* = y - H ξ⁺ over the observed pattern.
    let mut ystar = Array2::<f64>::from_elem(data.dim(), f64::NAN);
    for t in 0..t_len {
        for row in 0..system.n_obs() {
            let y = data[[row, t]];
            if y.is_nan() {
                continue;
            }
            let mut pred = 0.0;
            for &(col, w) in system.h_row(row) {
                pred += w * plus[[col, t]];
            }
            ystar[[row, t]] = y - pred;
        }
    }

    let core = filter_core(system, sigmas, &[data, &ystar], init, false)?;
    let smoothed_star = smooth_stream(system, &core, 1);
    let states = smoothed_star + &plus;
    Ok((StateDraw { states }, core.loglik[0]))
}
