//! Conditional posterior draws for the Gibbs sampler.
//!
//! Four families of draws, all conditional on the latest state draw:
//! factor loadings by GLS equation by equation, idiosyncratic AR
//! coefficients, factor AR coefficients (both with non-stationary draws
//! rejected), and innovation volatilities: either a constant variance
//! or a full stochastic-volatility path sampled with the 7-component
//! normal-mixture approximation to the log-χ²(1) distribution.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, cholesky, solve_lower, solve_lower_t};
use crate::ssmfilter::DIFFUSE_KAPPA;
use crate::statespace::{FreqClass, StateLayout};

/// Prior hyperparameters.
///
/// AR coefficients get Minnesota-style shrinkage: lag h has prior
/// variance `gamma / h²`; the factor's first lag is centred at 0.9 and
/// everything else at zero. Loadings are Normal(0, `loading_var`). The
/// volatility-of-volatility ω² gets an inverse gamma with `omega_nu`
/// degrees of freedom and scale `omega_s2`, which shrinks the
/// stochastic-volatility paths toward constancy. Constant (homoskedastic)
/// innovation variances get a weak inverse gamma.
#[derive(Clone, Copy, Debug)]
pub struct Priors {
    pub minnesota_gamma: f64,
    pub factor_ar_mean: f64,
    pub loading_var: f64,
    pub omega_nu: f64,
    pub omega_s2: f64,
    pub const_var_nu: f64,
    pub const_var_s2: f64,
}

impl Default for Priors {
    fn default() -> Self {
        Self {
            minnesota_gamma: 0.2,
            factor_ar_mean: 0.9,
            loading_var: 10.0,
            omega_nu: 1.0,
            omega_s2: 0.0001,
            const_var_nu: 2.0,
            const_var_s2: 0.01,
        }
    }
}

impl Priors {
    /// Minnesota prior mean and variance per lag for the factor AR block.
    pub fn factor_ar(&self, p: usize) -> (Vec<f64>, Vec<f64>) {
        let mut mean = vec![0.0; p];
        mean[0] = self.factor_ar_mean;
        let var = (1..=p)
            .map(|h| self.minnesota_gamma / (h * h) as f64)
            .collect();
        (mean, var)
    }

    /// Minnesota prior mean and variance per lag for an idiosyncratic AR.
    pub fn idio_ar(&self, p: usize) -> (Vec<f64>, Vec<f64>) {
        let mean = vec![0.0; p];
        let var = (1..=p)
            .map(|h| self.minnesota_gamma / (h * h) as f64)
            .collect();
        (mean, var)
    }
}

/// One innovation-volatility state: per-period standard deviations and
/// the log-variance random-walk innovation variance.
#[derive(Clone, Debug)]
pub struct VolPath {
    /// σ_t, strictly positive, one entry per period the path covers.
    pub sigma: Vec<f64>,
    /// Random-walk innovation variance of ln σ²_t.
    pub omega2: f64,
}

impl VolPath {
    pub fn constant(sigma: f64, len: usize) -> Self {
        Self {
            sigma: vec![sigma; len],
            omega2: 0.0,
        }
    }
}

/// Gaussian regression posterior moments under independent Normal priors.
///
/// Rows of `x` are regressors, `y` the targets, `weight[r]` multiplies
/// row r (pass 1/σ_r for heteroskedastic errors). Returns the posterior
/// mean and the Cholesky factor of the posterior precision, from which
/// `draw_from_posterior` samples.
fn regression_posterior(
    x: &Array2<f64>,
    y: &Array1<f64>,
    weight: &[f64],
    prior_mean: &[f64],
    prior_var: &[f64],
) -> Result<(Array1<f64>, Array2<f64>)> {
    let k = x.ncols();
    let mut a = Array2::<f64>::zeros((k, k));
    let mut b = Array1::<f64>::zeros(k);
    for (j, (&m0, &v0)) in prior_mean.iter().zip(prior_var).enumerate() {
        a[[j, j]] = 1.0 / v0;
        b[j] = m0 / v0;
    }
    for r in 0..x.nrows() {
        let w2 = weight[r] * weight[r];
        for j in 0..k {
            let xj = x[[r, j]];
            b[j] += w2 * xj * y[r];
            for l in 0..=j {
                a[[j, l]] += w2 * xj * x[[r, l]];
            }
        }
    }
    for j in 0..k {
        for l in 0..j {
            a[[l, j]] = a[[j, l]];
        }
    }
    let l = cholesky(&a).map_err(|_| {
        Error::Degenerate("regression posterior precision is not positive definite".into())
    })?;
    let mean = solve_lower_t(&l, &solve_lower(&l, &b));
    Ok((mean, l))
}

/// Samples from N(mean, A⁻¹) given the Cholesky factor of A.
fn draw_from_posterior<R: Rng + ?Sized>(
    mean: &Array1<f64>,
    prec_chol: &Array2<f64>,
    rng: &mut R,
) -> Array1<f64> {
    let k = mean.len();
    let z = Array1::from_iter((0..k).map(|_| rng.sample::<f64, _>(StandardNormal)));
    mean + &solve_lower_t(prec_chol, &z)
}

/// Mean and weighted cross-products of a GLS problem solved through a
/// dense error covariance: `Λ | data ~ N` with precision
/// `X' Ω⁻¹ X + V₀⁻¹`.
fn gls_posterior(
    x: &Array2<f64>,
    y: &Array1<f64>,
    omega: &Array2<f64>,
    prior_mean: &[f64],
    prior_var: &[f64],
) -> Result<(Array1<f64>, Array2<f64>)> {
    let k = x.ncols();
    let lo = cholesky(omega)
        .map_err(|e| Error::Numeric(format!("aggregated error covariance: {e}")))?;
    // Whiten: rows of X and y premultiplied by L⁻¹.
    let mut xw = Array2::<f64>::zeros((x.nrows(), k));
    for j in 0..k {
        let col = solve_lower(&lo, &x.column(j).to_owned());
        xw.column_mut(j).assign(&col);
    }
    let yw = solve_lower(&lo, y);
    let mut a = Array2::<f64>::zeros((k, k));
    let mut b = Array1::<f64>::zeros(k);
    for (j, (&m0, &v0)) in prior_mean.iter().zip(prior_var).enumerate() {
        a[[j, j]] = 1.0 / v0;
        b[j] = m0 / v0;
    }
    for r in 0..xw.nrows() {
        for j in 0..k {
            b[j] += xw[[r, j]] * yw[r];
            for l in 0..=j {
                a[[j, l]] += xw[[r, j]] * xw[[r, l]];
            }
        }
    }
    for j in 0..k {
        for l in 0..j {
            a[[l, j]] = a[[j, l]];
        }
    }
    let l = cholesky(&a).map_err(|_| {
        Error::Degenerate("loading posterior precision is not positive definite".into())
    })?;
    let mean = solve_lower_t(&l, &solve_lower(&l, &b));
    Ok((mean, l))
}

/// Regression pieces of one series' loading draw: design matrix,
/// targets, and the dense error covariance for aggregated series (the
/// weekly branch folds its weights into the rows instead).
type RegressionParts = (Array2<f64>, Array1<f64>, Option<Array2<f64>>);

/// Extended factor path: `values[k]` holds the factor at time
/// `k - pre + 1`, so times `1-pre ..= T` are covered. The pre-sample
/// head comes from the lag positions of the first state draw.
#[derive(Clone, Debug)]
pub struct FactorPath {
    pub values: Vec<f64>,
    pub pre: usize,
}

impl FactorPath {
    /// Factor value at (1-based) time τ, which may reach back to `1-pre`.
    pub fn at(&self, time: i64) -> f64 {
        self.values[(time + self.pre as i64 - 1) as usize]
    }

    pub fn len_in_sample(&self) -> usize {
        self.values.len() - self.pre
    }

    /// The in-sample path f_1..f_T.
    pub fn in_sample(&self) -> &[f64] {
        &self.values[self.pre..]
    }
}

/// Aggregated factor regressor for series `i` at spine time `t`:
/// element `a` is the window average of the factor at polynomial lag `a`.
fn factor_regressor(layout: &StateLayout, factor: &FactorPath, series: usize, t: usize) -> Vec<f64> {
    let m = layout.window(series) as i64;
    let scale = 1.0 / m as f64;
    (0..=layout.s)
        .map(|a| {
            let mut acc = 0.0;
            for j in 0..m {
                acc += factor.at(t as i64 - j - a as i64);
            }
            acc * scale
        })
        .collect()
}

/// Draws the loading row of every series by GLS, equation by equation.
///
/// Weekly series are quasi-differenced with their AR coefficients and
/// weighted by 1/σ_t, which is exact GLS for serially correlated
/// heteroskedastic errors. Monthly and quarterly series observe a window
/// average of the idiosyncratic component, so their GLS runs through the
/// model-implied covariance of the aggregated error (built from the AR
/// recursion with the same diffuse initial condition the filter uses).
/// The contemporaneous loading of the designated GDP row is fixed at 1
/// and never sampled; with dynamic heterogeneity its lagged loading is
/// still drawn.
#[allow(clippy::too_many_arguments)]
pub fn draw_loadings<R: Rng + ?Sized>(
    layout: &StateLayout,
    factor: &FactorPath,
    data: &Array2<f64>,
    sigma_idio: &Array2<f64>,
    rho: &Array2<f64>,
    priors: &Priors,
    gdp_row: Option<usize>,
    rng: &mut R,
) -> Result<Array2<f64>> {
    let n = layout.n_series();
    let t_len = data.ncols();
    let n_coef = layout.s + 1;
    let mut loadings = Array2::<f64>::zeros((n, n_coef));

    for i in 0..n {
        let is_gdp = gdp_row == Some(i);
        let rho_i: Vec<f64> = rho.row(i).to_vec();
        let (x, y, omega) = match layout.freq_class(i) {
            FreqClass::Weekly => {
                weekly_regression(layout, factor, data, sigma_idio, &rho_i, i, t_len)?
            }
            _ => aggregated_regression(layout, factor, data, sigma_idio, &rho_i, i, t_len)?,
        };

        // Regressor columns and prior depend on whether the first
        // loading is pinned at one.
        let (x_eff, y_eff, k) = if is_gdp {
            if n_coef == 1 {
                loadings[[i, 0]] = 1.0;
                continue;
            }
            let mut y2 = y.clone();
            for r in 0..x.nrows() {
                y2[r] -= x[[r, 0]];
            }
            let x2 = x.slice(ndarray::s![.., 1..]).to_owned();
            (x2, y2, n_coef - 1)
        } else {
            (x.clone(), y.clone(), n_coef)
        };

        if x_eff.nrows() < k {
            return Err(Error::InsufficientData(format!(
                "series {i}: {} usable observations for {k} loadings",
                x_eff.nrows()
            )));
        }
        let ss: f64 = x_eff.iter().map(|v| v * v).sum();
        if ss == 0.0 {
            return Err(Error::Degenerate(format!(
                "series {i}: zero regressor variance in loading draw"
            )));
        }

        let prior_mean = vec![0.0; k];
        let prior_var = vec![priors.loading_var; k];
        let (mean, prec_chol) = match omega {
            Some(om) => gls_posterior(&x_eff, &y_eff, &om, &prior_mean, &prior_var)?,
            None => {
                // Weekly branch already folded the weights into x/y.
                let w = vec![1.0; x_eff.nrows()];
                regression_posterior(&x_eff, &y_eff, &w, &prior_mean, &prior_var)?
            }
        };
        let draw = draw_from_posterior(&mean, &prec_chol, rng);
        if is_gdp {
            loadings[[i, 0]] = 1.0;
            for a in 1..n_coef {
                loadings[[i, a]] = draw[a - 1];
            }
        } else {
            for a in 0..n_coef {
                loadings[[i, a]] = draw[a];
            }
        }
    }
    Ok(loadings)
}

/// Quasi-differenced, precision-weighted regression rows for a weekly
/// series. Rows require the p_q previous observations to be present and
/// the whole regressor window to lie inside the sample.
fn weekly_regression(
    layout: &StateLayout,
    factor: &FactorPath,
    data: &Array2<f64>,
    sigma_idio: &Array2<f64>,
    rho_i: &[f64],
    series: usize,
    t_len: usize,
) -> Result<RegressionParts> {
    let p = rho_i.len();
    let n_coef = layout.s + 1;
    debug_assert!(n_coef <= 2);
    let mut rows_x: Vec<[f64; 2]> = Vec::with_capacity(t_len);
    let mut rows_y: Vec<f64> = Vec::with_capacity(t_len);
    for t in (p + layout.s + 1)..=t_len {
        let all_present = (0..=p).all(|h| data[[series, t - h - 1]].is_finite());
        if !all_present {
            continue;
        }
        let mut x = [0.0f64; 2];
        for (a, slot) in x.iter_mut().take(n_coef).enumerate() {
            *slot = factor.at(t as i64 - a as i64);
        }
        let mut y = data[[series, t - 1]];
        for (h, &r) in rho_i.iter().enumerate() {
            let tl = (t - h - 1) as i64;
            for (a, slot) in x.iter_mut().take(n_coef).enumerate() {
                *slot -= r * factor.at(tl - a as i64);
            }
            y -= r * data[[series, t - h - 2]];
        }
        let w = 1.0 / sigma_idio[[series, t - 1]];
        rows_x.push([x[0] * w, x[1] * w]);
        rows_y.push(y * w);
    }
    let nr = rows_x.len();
    let mut x = Array2::<f64>::zeros((nr, n_coef));
    let mut y = Array1::<f64>::zeros(nr);
    for (r, (xi, yi)) in rows_x.iter().zip(&rows_y).enumerate() {
        for a in 0..n_coef {
            x[[r, a]] = xi[a];
        }
        y[r] = *yi;
    }
    Ok((x, y, None))
}

/// Regression rows for a monthly or quarterly series plus the dense
/// covariance of the window-averaged idiosyncratic error at the
/// observed stamps.
fn aggregated_regression(
    layout: &StateLayout,
    factor: &FactorPath,
    data: &Array2<f64>,
    sigma_idio: &Array2<f64>,
    rho_i: &[f64],
    series: usize,
    t_len: usize,
) -> Result<RegressionParts> {
    let m = layout.window(series);
    let n_coef = layout.s + 1;
    let obs: Vec<usize> = ((m + layout.s)..=t_len)
        .filter(|&t| data[[series, t - 1]].is_finite())
        .collect();
    let nr = obs.len();
    let mut x = Array2::<f64>::zeros((nr, n_coef));
    let mut y = Array1::<f64>::zeros(nr);
    for (r, &t) in obs.iter().enumerate() {
        let xr = factor_regressor(layout, factor, series, t);
        for a in 0..n_coef {
            x[[r, a]] = xr[a];
        }
        y[r] = data[[series, t - 1]];
    }

    // Covariance of u over extended times (1-p ..= T): the first p+1
    // positions carry the diffuse initial variance, later ones follow
    // the AR recursion with the per-period innovation variance. Row
    // tau is a coefficient combination of the p preceding rows, whose
    // first tau entries are already complete, so the bulk of the work
    // is contiguous accumulation.
    let p = rho_i.len();
    let ext = t_len + p;
    let mut cov = vec![0.0f64; ext * ext];
    for j in 0..=p {
        cov[j * ext + j] = DIFFUSE_KAPPA;
    }
    let mut acc_row = vec![0.0f64; ext];
    for tau in (p + 1)..ext {
        acc_row[..tau].iter_mut().for_each(|v| *v = 0.0);
        for (h, &r) in rho_i.iter().enumerate() {
            if r == 0.0 {
                continue;
            }
            let src = &cov[(tau - h - 1) * ext..(tau - h - 1) * ext + tau];
            for (dst, v) in acc_row[..tau].iter_mut().zip(src) {
                *dst += r * v;
            }
        }
        let mut var = 0.0;
        for (h, &r) in rho_i.iter().enumerate() {
            var += r * acc_row[tau - h - 1];
        }
        // Extended index tau corresponds to spine time tau - p + 1.
        let sigma = sigma_idio[[series, tau - p]];
        acc_row[tau] = var + sigma * sigma;
        cov[tau * ext..tau * ext + tau + 1].copy_from_slice(&acc_row[..tau + 1]);
        for (j, v) in acc_row[..tau].iter().enumerate() {
            cov[j * ext + tau] = *v;
        }
    }

    let scale = 1.0 / (m * m) as f64;
    let mut omega = Array2::<f64>::zeros((nr, nr));
    for r1 in 0..nr {
        for r2 in 0..=r1 {
            let mut acc = 0.0;
            for j1 in 0..m {
                let e1 = obs[r1] - j1 + p - 1;
                let row = &cov[e1 * ext..(e1 + 1) * ext];
                let e2_last = obs[r2] + p - 1;
                acc += row[e2_last + 1 - m..=e2_last].iter().sum::<f64>();
            }
            omega[[r1, r2]] = acc * scale;
            omega[[r2, r1]] = acc * scale;
        }
    }
    Ok((x, y, Some(omega)))
}

/// Draws AR coefficients from the heteroskedasticity-weighted Normal
/// conditional, rejecting draws whose companion eigenvalues leave the
/// unit circle. After 100 rejections the prior mean is returned and a
/// warning is emitted.
fn draw_ar<R: Rng + ?Sized>(
    path: &[f64],
    sigma: &[f64],
    p: usize,
    prior_mean: &[f64],
    prior_var: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let t_len = path.len();
    if t_len <= p {
        return Err(Error::InsufficientData(format!(
            "AR({p}) draw needs more than {p} observations, got {t_len}"
        )));
    }
    let nr = t_len - p;
    let mut x = Array2::<f64>::zeros((nr, p));
    let mut y = Array1::<f64>::zeros(nr);
    let mut w = vec![0.0; nr];
    for r in 0..nr {
        let t = p + r; // 0-based target index
        for h in 0..p {
            x[[r, h]] = path[t - h - 1];
        }
        y[r] = path[t];
        w[r] = 1.0 / sigma[t];
    }
    let (mean, prec_chol) = regression_posterior(&x, &y, &w, prior_mean, prior_var)?;
    for _ in 0..100 {
        let draw = draw_from_posterior(&mean, &prec_chol, rng);
        let coefs: Vec<f64> = draw.to_vec();
        if linalg::is_stationary(&coefs) {
            return Ok(coefs);
        }
    }
    eprintln!("warning: AR draw rejected 100 times; falling back to the prior mean");
    Ok(prior_mean.to_vec())
}

/// Idiosyncratic AR draw for one series, Minnesota prior centred at zero.
pub fn draw_ar_idio<R: Rng + ?Sized>(
    idio_path: &[f64],
    sigma_path: &[f64],
    p: usize,
    priors: &Priors,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let (mean, var) = priors.idio_ar(p);
    draw_ar(idio_path, sigma_path, p, &mean, &var, rng)
}

/// Factor AR draw, Minnesota prior centred at 0.9 on the first lag.
pub fn draw_ar_factor<R: Rng + ?Sized>(
    factor_path: &[f64],
    sigma_path: &[f64],
    p: usize,
    priors: &Priors,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let (mean, var) = priors.factor_ar(p);
    draw_ar(factor_path, sigma_path, p, &mean, &var, rng)
}

/// Seven-component normal mixture approximating ln χ²(1): component
/// probabilities, means (before the -1.2704 offset), and variances.
const KSC_PROB: [f64; 7] = [
    0.00730, 0.10556, 0.00002, 0.04395, 0.34001, 0.24566, 0.25750,
];
const KSC_MEAN: [f64; 7] = [
    -10.12999, -3.97281, -8.56686, 2.77786, 0.61942, 1.79518, -1.08819,
];
const KSC_VAR: [f64; 7] = [
    5.79596, 2.61369, 5.17950, 0.16735, 0.64009, 0.34023, 1.26261,
];
const KSC_OFFSET: f64 = -1.2704;

/// Guard against exact zero residuals inside the log.
const LOG_SQ_OFFSET: f64 = 1e-6;

/// Prior for the initial log-variance level, N(0, 100), wide enough to
/// be dominated by a handful of observations at any realistic scale.
const H1_PRIOR_VAR: f64 = 100.0;

/// One sweep of the stochastic-volatility block for a single shock
/// series: mixture indicators given the current path, a linear-Gaussian
/// forward-filter backward-sample pass on the log-variance random walk,
/// then the inverse-gamma draw of ω².
///
/// `residuals[t]` are the structural shocks implied by the current
/// states and AR coefficients, aligned with `current.sigma`.
pub fn draw_volpath<R: Rng + ?Sized>(
    residuals: &[f64],
    current: &VolPath,
    priors: &Priors,
    rng: &mut R,
) -> Result<VolPath> {
    let t_len = residuals.len();
    if t_len == 0 {
        return Err(Error::InsufficientData("empty residual vector".into()));
    }
    if current.sigma.len() != t_len {
        return Err(Error::Build(format!(
            "volatility path length {} does not match {} residuals",
            current.sigma.len(),
            t_len
        )));
    }
    let ystar: Vec<f64> = residuals
        .iter()
        .map(|r| (r * r + LOG_SQ_OFFSET).ln())
        .collect();
    let h_cur: Vec<f64> = current.sigma.iter().map(|s| 2.0 * s.ln()).collect();

    // Mixture indicators.
    let mut comp_mean = vec![0.0; t_len];
    let mut comp_var = vec![0.0; t_len];
    for t in 0..t_len {
        let mut weights = [0.0f64; 7];
        let mut total = 0.0;
        for j in 0..7 {
            let mu = h_cur[t] + KSC_MEAN[j] + KSC_OFFSET;
            let d = ystar[t] - mu;
            let w = KSC_PROB[j] * (-0.5 * d * d / KSC_VAR[j]).exp() / KSC_VAR[j].sqrt();
            weights[j] = w;
            total += w;
        }
        let mut u: f64 = rng.random::<f64>() * total;
        let mut pick = 6;
        for (j, w) in weights.iter().enumerate() {
            if u < *w {
                pick = j;
                break;
            }
            u -= *w;
        }
        comp_mean[t] = KSC_MEAN[pick] + KSC_OFFSET;
        comp_var[t] = KSC_VAR[pick];
    }

    // Forward filter on h_t = h_{t-1} + N(0, ω²), observation
    // ystar_t = h_t + comp_mean_t + N(0, comp_var_t).
    let omega2 = current.omega2;
    let mut filt_mean = vec![0.0; t_len];
    let mut filt_var = vec![0.0; t_len];
    let mut pred_mean = 0.0;
    let mut pred_var = H1_PRIOR_VAR;
    for t in 0..t_len {
        if t > 0 {
            pred_mean = filt_mean[t - 1];
            pred_var = filt_var[t - 1] + omega2;
        }
        let s = pred_var + comp_var[t];
        let k = pred_var / s;
        let v = ystar[t] - comp_mean[t] - pred_mean;
        filt_mean[t] = pred_mean + k * v;
        filt_var[t] = pred_var * (1.0 - k);
    }

    // Backward sample.
    let mut h = vec![0.0; t_len];
    let z: f64 = rng.sample(StandardNormal);
    h[t_len - 1] = filt_mean[t_len - 1] + filt_var[t_len - 1].sqrt() * z;
    for t in (0..t_len - 1).rev() {
        let denom = filt_var[t] + omega2;
        let (m, v) = if denom > 0.0 {
            let g = filt_var[t] / denom;
            (
                filt_mean[t] + g * (h[t + 1] - filt_mean[t]),
                filt_var[t] * (1.0 - g),
            )
        } else {
            (filt_mean[t], filt_var[t])
        };
        let z: f64 = rng.sample(StandardNormal);
        h[t] = m + v.max(0.0).sqrt() * z;
    }

    // ω² | h from its inverse-gamma conditional.
    let ss: f64 = h.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
    let shape = (priors.omega_nu + (t_len - 1) as f64) / 2.0;
    let rate = (priors.omega_nu * priors.omega_s2 + ss) / 2.0;
    let omega2_new = draw_inverse_gamma(shape, rate, rng);

    Ok(VolPath {
        sigma: h.iter().map(|v| (0.5 * v).exp()).collect(),
        omega2: omega2_new,
    })
}

/// Constant-variance draw for the homoskedastic configurations:
/// σ² | residuals ~ IG((ν₀+n)/2, (ν₀s₀² + Σr²)/2).
pub fn draw_const_variance<R: Rng + ?Sized>(
    residuals: &[f64],
    priors: &Priors,
    rng: &mut R,
) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::InsufficientData("empty residual vector".into()));
    }
    let ss: f64 = residuals.iter().map(|r| r * r).sum();
    let shape = (priors.const_var_nu + residuals.len() as f64) / 2.0;
    let rate = (priors.const_var_nu * priors.const_var_s2 + ss) / 2.0;
    Ok(draw_inverse_gamma(shape, rate, rng))
}

/// Draws from an inverse gamma with the given shape and rate (the rate
/// appears as exp(-rate/x) in the density).
pub fn draw_inverse_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    let g = Gamma::new(shape, 1.0 / rate).expect("valid gamma parameters");
    1.0 / g.sample(rng)
}

/// Exposes the posterior moments of an AR regression for tests.
#[cfg(test)]
fn ar_posterior_mean(
    path: &[f64],
    sigma: &[f64],
    p: usize,
    prior_mean: &[f64],
    prior_var: &[f64],
) -> Array1<f64> {
    let t_len = path.len();
    let nr = t_len - p;
    let mut x = Array2::<f64>::zeros((nr, p));
    let mut y = Array1::<f64>::zeros(nr);
    let mut w = vec![0.0; nr];
    for r in 0..nr {
        let t = p + r;
        for h in 0..p {
            x[[r, h]] = path[t - h - 1];
        }
        y[r] = path[t];
        w[r] = 1.0 / sigma[t];
    }
    regression_posterior(&x, &y, &w, prior_mean, prior_var)
        .unwrap()
        .0
}
