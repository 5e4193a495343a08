//! State-space assembly for the mixed-frequency factor model.
//!
//! All variables are modelled at the weekly frequency. The state vector
//! stacks the factor with enough lags to reconstruct quarterly (12-week)
//! and monthly (4-week) averages, followed by one lag block of the
//! idiosyncratic component per series, ordered quarterly, monthly, weekly:
//!
//! ```text
//! ξ_t = [ f_t .. f_{t-11-s} | u^q blocks (12 lags) | u^m blocks (d+1 lags)
//!         | u^w blocks (p_q+1 lags) ]      d = max(p_q, 4)
//! ```
//!
//! The observation equation `y_t = H ξ_t` carries no measurement noise:
//! quarterly rows average the loaded factor and the own idiosyncratic
//! lags with weight 1/12, monthly rows with weight 1/4, weekly rows load
//! contemporaneously. The transition is block-diagonal companion form,
//! and only n+1 state positions receive innovations (the contemporaneous
//! factor and idiosyncratic slots), with time-varying standard deviations
//! when stochastic volatility is switched on.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::samplers::Priors;

/// Frequency class of a series, which fixes its block size and the
/// aggregation weights in its observation row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FreqClass {
    Quarterly,
    Monthly,
    Weekly,
}

/// Chain schedule for the Gibbs sampler.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainSpec {
    pub iterations: usize,
    pub burn_in: usize,
}

impl Default for ChainSpec {
    fn default() -> Self {
        Self {
            iterations: 7_500,
            burn_in: 2_500,
        }
    }
}

/// Full model configuration: lag orders, heterogeneity order,
/// stochastic-volatility switches, series counts, priors, chain lengths,
/// and which quarterly series carries the unit-loading normalization.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    /// Factor AR order (1 ≤ p_f < 12).
    pub p_f: usize,
    /// Idiosyncratic AR order (1 ≤ p_q < 12), shared across series.
    pub p_q: usize,
    /// Heterogeneity order of the loading polynomial, 0 or 1.
    pub s: usize,
    /// Stochastic volatility on the factor innovation.
    pub sv_factor: bool,
    /// Stochastic volatility on the idiosyncratic innovations.
    pub sv_idio: bool,
    pub n_q: usize,
    pub n_m: usize,
    pub n_w: usize,
    /// Index within the quarterly block of the series whose
    /// contemporaneous loading is fixed at 1.
    pub gdp_index: usize,
    pub priors: Priors,
    pub chain: ChainSpec,
}

impl ModelSpec {
    /// A spec with the default lag orders (p_f = 2, p_q = 3), no
    /// heterogeneity, no stochastic volatility, and default priors.
    pub fn new(n_q: usize, n_m: usize, n_w: usize) -> Self {
        Self {
            p_f: 2,
            p_q: 3,
            s: 0,
            sv_factor: false,
            sv_idio: false,
            n_q,
            n_m,
            n_w,
            gdp_index: 0,
            priors: Priors::default(),
            chain: ChainSpec::default(),
        }
    }

    pub fn n_series(&self) -> usize {
        self.n_q + self.n_m + self.n_w
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_f == 0 || self.p_f >= 12 {
            return Err(Error::Spec(format!("p_f = {} outside 1..12", self.p_f)));
        }
        if self.p_q == 0 || self.p_q >= 12 {
            return Err(Error::Spec(format!("p_q = {} outside 1..12", self.p_q)));
        }
        if self.s > 1 {
            return Err(Error::Spec(format!("s = {} not in {{0, 1}}", self.s)));
        }
        if self.n_series() == 0 {
            return Err(Error::Spec("model needs at least one series".into()));
        }
        if self.n_q > 0 && self.gdp_index >= self.n_q {
            return Err(Error::Spec(format!(
                "gdp_index {} out of range for {} quarterly series",
                self.gdp_index, self.n_q
            )));
        }
        if self.chain.burn_in >= self.chain.iterations {
            return Err(Error::Spec(format!(
                "burn_in {} must be below iterations {}",
                self.chain.burn_in, self.chain.iterations
            )));
        }
        Ok(())
    }
}

/// Positions of the factor block and each series' idiosyncratic block
/// inside the state vector.
#[derive(Clone, Debug)]
pub struct StateLayout {
    pub p_f: usize,
    pub p_q: usize,
    pub s: usize,
    pub n_q: usize,
    pub n_m: usize,
    pub n_w: usize,
    /// Length of the factor block, 12 + s.
    pub factor_len: usize,
    /// (offset, length) of each series' block, ordered q, m, w.
    blocks: Vec<(usize, usize)>,
    /// Total state dimension.
    pub n_s: usize,
}

/// Identifies a state position as a lag of the factor or of one series'
/// idiosyncratic component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateSlot {
    Factor { lag: usize },
    Idio { series: usize, lag: usize },
}

impl StateLayout {
    /// Builds an arbitrary layout directly from block geometry. Intended
    /// for small bespoke systems in tests and oracles; ordinary model
    /// construction goes through [`build_layout`].
    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        p_f: usize,
        p_q: usize,
        s: usize,
        n_q: usize,
        n_m: usize,
        n_w: usize,
        factor_len: usize,
        blocks: Vec<(usize, usize)>,
    ) -> Self {
        let n_s = blocks
            .iter()
            .map(|&(off, len)| off + len)
            .max()
            .unwrap_or(factor_len);
        Self {
            p_f,
            p_q,
            s,
            n_q,
            n_m,
            n_w,
            factor_len,
            blocks,
            n_s,
        }
    }

    pub fn n_series(&self) -> usize {
        self.n_q + self.n_m + self.n_w
    }

    /// Longest monthly lag, d = max(p_q, 4).
    pub fn d(&self) -> usize {
        self.p_q.max(4)
    }

    pub fn freq_class(&self, series: usize) -> FreqClass {
        if series < self.n_q {
            FreqClass::Quarterly
        } else if series < self.n_q + self.n_m {
            FreqClass::Monthly
        } else {
            FreqClass::Weekly
        }
    }

    /// Aggregation window length of a series' observation row.
    pub fn window(&self, series: usize) -> usize {
        match self.freq_class(series) {
            FreqClass::Quarterly => 12,
            FreqClass::Monthly => 4,
            FreqClass::Weekly => 1,
        }
    }

    /// (offset, length) of series `i`'s idiosyncratic block.
    pub fn idio_block(&self, series: usize) -> (usize, usize) {
        self.blocks[series]
    }

    /// State positions receiving innovations: the contemporaneous factor
    /// slot followed by each series' contemporaneous idiosyncratic slot.
    pub fn shock_slots(&self) -> Vec<usize> {
        let mut slots = Vec::with_capacity(1 + self.n_series());
        slots.push(0);
        for &(offset, _) in &self.blocks {
            slots.push(offset);
        }
        slots
    }

    /// Classifies a state position.
    pub fn slot(&self, position: usize) -> Result<StateSlot> {
        if position < self.factor_len {
            return Ok(StateSlot::Factor { lag: position });
        }
        for (i, &(offset, len)) in self.blocks.iter().enumerate() {
            if position >= offset && position < offset + len {
                return Ok(StateSlot::Idio {
                    series: i,
                    lag: position - offset,
                });
            }
        }
        Err(Error::Build(format!(
            "position {position} outside state vector of size {}",
            self.n_s
        )))
    }

    /// Inverse of [`StateLayout::slot`].
    pub fn position(&self, slot: StateSlot) -> Result<usize> {
        match slot {
            StateSlot::Factor { lag } => {
                if lag < self.factor_len {
                    Ok(lag)
                } else {
                    Err(Error::Build(format!(
                        "factor lag {lag} exceeds block length {}",
                        self.factor_len
                    )))
                }
            }
            StateSlot::Idio { series, lag } => {
                let (offset, len) = *self
                    .blocks
                    .get(series)
                    .ok_or_else(|| Error::Build(format!("series {series} out of range")))?;
                if lag < len {
                    Ok(offset + lag)
                } else {
                    Err(Error::Build(format!(
                        "lag {lag} exceeds block length {len} of series {series}"
                    )))
                }
            }
        }
    }
}

/// Derives the state layout from a model spec.
///
/// The state dimension is `(12+s) + 12·n_q + (d+1)·n_m + (p_q+1)·n_w`
/// with `d = max(p_q, 4)`; `s = 1` adds exactly one factor lag.
pub fn build_layout(spec: &ModelSpec) -> Result<StateLayout> {
    spec.validate()?;
    let factor_len = 12 + spec.s;
    let d = spec.p_q.max(4);
    let mut blocks = Vec::with_capacity(spec.n_series());
    let mut offset = factor_len;
    for _ in 0..spec.n_q {
        blocks.push((offset, 12));
        offset += 12;
    }
    for _ in 0..spec.n_m {
        blocks.push((offset, d + 1));
        offset += d + 1;
    }
    for _ in 0..spec.n_w {
        blocks.push((offset, spec.p_q + 1));
        offset += spec.p_q + 1;
    }
    Ok(StateLayout {
        p_f: spec.p_f,
        p_q: spec.p_q,
        s: spec.s,
        n_q: spec.n_q,
        n_m: spec.n_m,
        n_w: spec.n_w,
        factor_len,
        blocks,
        n_s: offset,
    })
}

/// Observation matrix for given loadings.
///
/// `loadings` is n × (s+1): contemporaneous and (when s = 1) lagged
/// loading per series. Quarterly and monthly rows average the loading
/// polynomial over their 12- or 4-week window, so the weight on factor
/// lag j is `Σ_a Λ_a / m` over the a ∈ 0..=s with j − a inside the
/// window. Idiosyncratic weights are 1/12 over 12 lags (quarterly),
/// 1/4 over the first 4 lags (monthly), and 1 contemporaneously (weekly).
pub fn build_h(layout: &StateLayout, loadings: &Array2<f64>) -> Result<Array2<f64>> {
    let n = layout.n_series();
    if loadings.nrows() != n || loadings.ncols() != layout.s + 1 {
        return Err(Error::Build(format!(
            "loadings are {}x{}, expected {}x{}",
            loadings.nrows(),
            loadings.ncols(),
            n,
            layout.s + 1
        )));
    }
    let mut h = Array2::<f64>::zeros((n, layout.n_s));
    for i in 0..n {
        let window = layout.window(i);
        let scale = 1.0 / window as f64;
        // Factor weights: moving average of the loading polynomial.
        for j in 0..(window + layout.s) {
            let mut w = 0.0;
            for a in 0..=layout.s {
                if j >= a && j - a < window {
                    w += loadings[[i, a]];
                }
            }
            if w != 0.0 {
                h[[i, j]] = w * scale;
            }
        }
        // Own idiosyncratic weights.
        let (offset, len) = layout.idio_block(i);
        match layout.freq_class(i) {
            FreqClass::Quarterly => {
                for lag in 0..12 {
                    h[[i, offset + lag]] = 1.0 / 12.0;
                }
            }
            FreqClass::Monthly => {
                for lag in 0..4 {
                    h[[i, offset + lag]] = 0.25;
                }
            }
            FreqClass::Weekly => {
                h[[i, offset]] = 1.0;
            }
        }
        debug_assert!(len >= layout.window(i).min(4));
    }
    Ok(h)
}

/// Transition matrix: block-diagonal companion blocks for the factor and
/// each idiosyncratic component.
pub fn build_f(layout: &StateLayout, phi: &[f64], rho: &Array2<f64>) -> Result<Array2<f64>> {
    if phi.len() != layout.p_f {
        return Err(Error::Build(format!(
            "phi has {} coefficients, expected {}",
            phi.len(),
            layout.p_f
        )));
    }
    let n = layout.n_series();
    if rho.nrows() != n || rho.ncols() != layout.p_q {
        return Err(Error::Build(format!(
            "rho is {}x{}, expected {}x{}",
            rho.nrows(),
            rho.ncols(),
            n,
            layout.p_q
        )));
    }
    let mut f = Array2::<f64>::zeros((layout.n_s, layout.n_s));
    fill_companion(&mut f, 0, layout.factor_len, phi);
    for i in 0..n {
        let (offset, len) = layout.idio_block(i);
        let coefs: Vec<f64> = rho.row(i).to_vec();
        fill_companion(&mut f, offset, len, &coefs);
    }
    Ok(f)
}

fn fill_companion(f: &mut Array2<f64>, offset: usize, len: usize, coefs: &[f64]) {
    for (h, &c) in coefs.iter().enumerate() {
        f[[offset, offset + h]] = c;
    }
    for r in 1..len {
        f[[offset + r, offset + r - 1]] = 1.0;
    }
}

/// Innovation standard deviations per shock slot at one period:
/// `sigma_f` for the factor slot, `sigma_idio[i]` for series i's
/// contemporaneous slot. All other state positions receive none.
pub fn build_rt(layout: &StateLayout, sigma_f: f64, sigma_idio: &[f64]) -> Result<Vec<f64>> {
    if sigma_idio.len() != layout.n_series() {
        return Err(Error::Build(format!(
            "{} idiosyncratic sigmas, expected {}",
            sigma_idio.len(),
            layout.n_series()
        )));
    }
    if sigma_f <= 0.0 || sigma_idio.iter().any(|s| *s <= 0.0) {
        return Err(Error::Build("innovation scales must be positive".into()));
    }
    let mut scales = Vec::with_capacity(1 + sigma_idio.len());
    scales.push(sigma_f);
    scales.extend_from_slice(sigma_idio);
    Ok(scales)
}

/// A fully assembled system: dense H and F for inspection and oracles,
/// plus the sparse structure the filter's hot loops use.
#[derive(Clone, Debug)]
pub struct StateSpaceSystem {
    pub layout: StateLayout,
    pub h: Array2<f64>,
    pub f: Array2<f64>,
    /// Nonzero (column, weight) pairs per observation row.
    h_rows: Vec<Vec<(usize, f64)>>,
    /// Companion blocks as (offset, length, coefficients).
    companions: Vec<(usize, usize, Vec<f64>)>,
    /// State positions receiving innovations (factor slot first).
    pub shock_slots: Vec<usize>,
}

impl StateSpaceSystem {
    /// Builds the system from a layout, loadings, and AR coefficients.
    pub fn assemble(
        layout: &StateLayout,
        loadings: &Array2<f64>,
        phi: &[f64],
        rho: &Array2<f64>,
    ) -> Result<Self> {
        let h = build_h(layout, loadings)?;
        let f = build_f(layout, phi, rho)?;
        Ok(Self::from_parts(layout.clone(), h, f))
    }

    /// Wraps pre-built matrices; `h` and `f` must match the layout's
    /// dimensions. Used directly by tests that exercise arbitrary
    /// small systems.
    pub fn from_parts(layout: StateLayout, h: Array2<f64>, f: Array2<f64>) -> Self {
        let h_rows = h
            .rows()
            .into_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j, *v))
                    .collect()
            })
            .collect();
        let mut companions = Vec::new();
        companions.push((0usize, layout.factor_len, f_row_coefs(&f, 0, layout.p_f)));
        for i in 0..layout.n_series() {
            let (offset, len) = layout.idio_block(i);
            companions.push((offset, len, f_row_coefs(&f, offset, layout.p_q)));
        }
        let shock_slots = layout.shock_slots();
        Self {
            layout,
            h,
            f,
            h_rows,
            companions,
            shock_slots,
        }
    }

    pub fn n_obs(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_state(&self) -> usize {
        self.layout.n_s
    }

    /// Sparse row of H: nonzero (column, weight) pairs.
    pub fn h_row(&self, row: usize) -> &[(usize, f64)] {
        &self.h_rows[row]
    }

    /// `out = F v`, exploiting the companion structure.
    pub fn apply_f_vec(&self, v: &[f64], out: &mut [f64]) {
        for &(offset, len, ref coefs) in &self.companions {
            let mut head = 0.0;
            for (h, &c) in coefs.iter().enumerate() {
                head += c * v[offset + h];
            }
            // Shift down, then write the new contemporaneous value.
            for lag in (1..len).rev() {
                out[offset + lag] = v[offset + lag - 1];
            }
            out[offset] = head;
        }
    }

    /// `P ← F P F' + diag(shock variances)` in place, where `scales`
    /// holds the innovation standard deviation per shock slot.
    pub fn predict_cov(&self, p: &mut Array2<f64>, scales: &[f64]) {
        let n = self.n_state();
        self.predict_cov_flat(p.as_slice_mut().expect("contiguous"), n, scales);
    }

    /// Flat-buffer core of [`StateSpaceSystem::predict_cov`]: `p` is the
    /// row-major n × n covariance.
    ///
    /// Both multiplications exploit the companion structure. F·P
    /// transforms row blocks (new head row = coefficient combination of
    /// the block's rows, the rest shift down), all on contiguous rows;
    /// ·F' then applies the same pattern within each row.
    pub fn predict_cov_flat(&self, p: &mut [f64], n: usize, scales: &[f64]) {
        debug_assert_eq!(p.len(), n * n);
        let mut head = vec![0.0f64; n];
        // Left: P ← F P, row operations.
        for &(offset, len, ref coefs) in &self.companions {
            head.iter_mut().for_each(|v| *v = 0.0);
            for (h, &c) in coefs.iter().enumerate() {
                if c != 0.0 {
                    let row = &p[(offset + h) * n..(offset + h + 1) * n];
                    for (acc, v) in head.iter_mut().zip(row) {
                        *acc += c * v;
                    }
                }
            }
            for lag in (1..len).rev() {
                p.copy_within(
                    (offset + lag - 1) * n..(offset + lag) * n,
                    (offset + lag) * n,
                );
            }
            p[offset * n..(offset + 1) * n].copy_from_slice(&head);
        }
        // Right: P ← P F', the same transform inside every row.
        let mut seg = vec![0.0f64; n];
        for row in 0..n {
            let r = &mut p[row * n..(row + 1) * n];
            for &(offset, len, ref coefs) in &self.companions {
                seg[..len].copy_from_slice(&r[offset..offset + len]);
                let mut h0 = 0.0;
                for (h, &c) in coefs.iter().enumerate() {
                    h0 += c * seg[h];
                }
                r[offset + 1..offset + len].copy_from_slice(&seg[..len - 1]);
                r[offset] = h0;
            }
        }
        for (slot, scale) in self.shock_slots.iter().zip(scales) {
            p[slot * n + slot] += scale * scale;
        }
    }

    /// `out = F' v`.
    pub fn apply_f_t_vec(&self, v: &[f64], out: &mut [f64]) {
        for &(offset, len, ref coefs) in &self.companions {
            let head = v[offset];
            for lag in 0..len {
                let mut acc = 0.0;
                if lag < coefs.len() {
                    acc += coefs[lag] * head;
                }
                if lag + 1 < len {
                    acc += v[offset + lag + 1];
                }
                out[offset + lag] = acc;
            }
        }
    }
}

fn f_row_coefs(f: &Array2<f64>, offset: usize, p: usize) -> Vec<f64> {
    (0..p).map(|h| f[[offset, offset + h]]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array1};
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn spec(n_q: usize, n_m: usize, n_w: usize, p_q: usize, s: usize) -> ModelSpec {
        let mut spec = ModelSpec::new(n_q, n_m, n_w);
        spec.p_q = p_q;
        spec.s = s;
        spec
    }

    #[test]
    fn layout_dimension_examples() {
        // d = max(3, 4) = 4: 12 + 12 + 5 + 4 = 33.
        let layout = build_layout(&spec(1, 1, 1, 3, 0)).unwrap();
        assert_eq!(layout.n_s, 33);

        let layout = build_layout(&spec(0, 0, 1, 1, 0)).unwrap();
        assert_eq!(layout.n_s, 14);

        let s0 = build_layout(&spec(2, 3, 4, 3, 0)).unwrap();
        let s1 = build_layout(&spec(2, 3, 4, 3, 1)).unwrap();
        assert_eq!(s1.n_s, s0.n_s + 1);
    }

    #[test]
    fn layout_formula_over_grid() {
        for n_q in 0..3 {
            for n_m in 0..3 {
                for n_w in 1..4 {
                    for p_q in 1..7 {
                        for s in 0..2 {
                            let layout = build_layout(&spec(n_q, n_m, n_w, p_q, s)).unwrap();
                            let d = p_q.max(4);
                            let want =
                                12 + s + 12 * n_q + (d + 1) * n_m + (p_q + 1) * n_w;
                            assert_eq!(layout.n_s, want);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn layout_rejects_large_lag_orders() {
        let mut bad = spec(1, 1, 1, 3, 0);
        bad.p_f = 12;
        assert!(build_layout(&bad).is_err());
        let mut bad = spec(1, 1, 1, 12, 0);
        bad.p_q = 12;
        assert!(build_layout(&bad).is_err());
    }

    #[test]
    fn slot_position_roundtrip() {
        let layout = build_layout(&spec(2, 1, 2, 3, 1)).unwrap();
        for pos in 0..layout.n_s {
            let slot = layout.slot(pos).unwrap();
            assert_eq!(layout.position(slot).unwrap(), pos);
        }
    }

    #[test]
    fn weekly_only_h_is_unit_loadings() {
        let layout = build_layout(&spec(0, 0, 1, 1, 0)).unwrap();
        let loadings = array![[1.0]];
        let h = build_h(&layout, &loadings).unwrap();
        assert_eq!(h.shape(), &[1, 14]);
        assert_abs_diff_eq!(h[[0, 0]], 1.0);
        assert_abs_diff_eq!(h[[0, 12]], 1.0);
        let nonzeros: usize = h.iter().filter(|v| **v != 0.0).count();
        assert_eq!(nonzeros, 2);
    }

    #[test]
    fn quarterly_row_spreads_one_twelfth() {
        let layout = build_layout(&spec(1, 0, 0, 3, 0)).unwrap();
        let loadings = array![[1.0]];
        let h = build_h(&layout, &loadings).unwrap();
        for j in 0..12 {
            assert_abs_diff_eq!(h[[0, j]], 1.0 / 12.0, epsilon = 1e-15);
            assert_abs_diff_eq!(h[[0, 12 + j]], 1.0 / 12.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn monthly_row_spreads_one_fourth() {
        let layout = build_layout(&spec(0, 1, 0, 3, 0)).unwrap();
        let loadings = array![[2.0]];
        let h = build_h(&layout, &loadings).unwrap();
        for j in 0..4 {
            assert_abs_diff_eq!(h[[0, j]], 0.5, epsilon = 1e-15);
        }
        // Idiosyncratic weight 1/4 on the first four lags, none beyond.
        let (offset, len) = layout.idio_block(0);
        assert_eq!(len, 5);
        for lag in 0..4 {
            assert_abs_diff_eq!(h[[0, offset + lag]], 0.25, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(h[[0, offset + 4]], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn h_rejects_dimension_mismatch() {
        let layout = build_layout(&spec(1, 0, 0, 3, 0)).unwrap();
        let loadings = array![[1.0, 0.5]]; // s = 0 expects one column
        assert!(build_h(&layout, &loadings).is_err());
    }

    #[test]
    fn f_zero_coefficients_is_pure_shift() {
        let layout = build_layout(&spec(0, 0, 1, 2, 0)).unwrap();
        let rho = Array2::zeros((1, 2));
        let f = build_f(&layout, &[0.0, 0.0], &rho).unwrap();
        // Nilpotent within blocks: applying it factor_len times kills
        // the factor block.
        let mut power = f.clone();
        for _ in 0..layout.n_s {
            power = power.dot(&f);
        }
        for v in power.iter() {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn f_top_left_is_first_factor_coefficient() {
        let layout = build_layout(&spec(1, 1, 1, 3, 0)).unwrap();
        let rho = Array2::zeros((3, 3));
        let f = build_f(&layout, &[0.9, 0.0], &rho).unwrap();
        assert_abs_diff_eq!(f[[0, 0]], 0.9, epsilon = 1e-15);
    }

    #[test]
    fn f_rejects_dimension_mismatch() {
        let layout = build_layout(&spec(1, 0, 0, 3, 0)).unwrap();
        let rho = Array2::zeros((1, 2)); // expects p_q = 3 columns
        assert!(build_f(&layout, &[0.5, 0.1], &rho).is_err());
    }

    #[test]
    fn companion_blocks_stationary_coefficients_stay_inside_unit_circle() {
        // Sample stationary AR(2) coefficients from the triangle and
        // confirm the companion eigenvalue moduli stay below one.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let c2: f64 = rng.random_range(-0.95..0.95);
            let c1: f64 = rng.random_range((c2 - 0.99)..(0.99 - c2));
            let moduli = crate::linalg::companion_root_moduli(&[c1, c2]);
            assert!(moduli.iter().all(|m| *m < 1.0), "({c1}, {c2}): {moduli:?}");
        }
    }

    #[test]
    fn rt_scales() {
        let layout = build_layout(&spec(1, 1, 1, 3, 0)).unwrap();
        let scales = build_rt(&layout, 1.0, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(scales, vec![1.0; 4]);
        // Doubling the factor scale quadruples the implied variance.
        let doubled = build_rt(&layout, 2.0, &[1.0, 1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(doubled[0] * doubled[0], 4.0 * scales[0] * scales[0]);
        assert!(build_rt(&layout, 0.0, &[1.0, 1.0, 1.0]).is_err());
        assert!(build_rt(&layout, 1.0, &[1.0, -1.0, 1.0]).is_err());
    }

    /// Builds the stacked state vector at time t from a factor path and
    /// zero idiosyncratic components.
    fn state_from_factor(layout: &StateLayout, path: &[f64], t: usize) -> Array1<f64> {
        let mut xi = Array1::<f64>::zeros(layout.n_s);
        for lag in 0..layout.factor_len {
            xi[lag] = path[t - lag];
        }
        xi
    }

    #[test]
    fn aggregation_identity_for_both_heterogeneity_orders() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for s in 0..2usize {
            let layout = build_layout(&spec(1, 1, 1, 3, s)).unwrap();
            let mut loadings = Array2::<f64>::zeros((3, s + 1));
            for v in loadings.iter_mut() {
                *v = rng.random_range(0.5..2.0);
            }
            let h = build_h(&layout, &loadings).unwrap();
            let path: Vec<f64> = (0..60).map(|_| rng.random_range(-1.0..1.0)).collect();
            for t in 30..60 {
                let xi = state_from_factor(&layout, &path, t);
                let y = h.dot(&xi);
                // Loaded weekly latent value at lag j.
                let loaded = |series: usize, j: usize| -> f64 {
                    (0..=s).map(|a| loadings[[series, a]] * path[t - j - a]).sum()
                };
                let quarterly: f64 = (0..12).map(|j| loaded(0, j)).sum::<f64>() / 12.0;
                let monthly: f64 = (0..4).map(|j| loaded(1, j)).sum::<f64>() / 4.0;
                let weekly: f64 = loaded(2, 0);
                assert_abs_diff_eq!(y[0], quarterly, epsilon = 1e-12);
                assert_abs_diff_eq!(y[1], monthly, epsilon = 1e-12);
                assert_abs_diff_eq!(y[2], weekly, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn h_rows_touch_only_own_idio_block() {
        let layout = build_layout(&spec(2, 2, 2, 3, 1)).unwrap();
        let loadings = Array2::<f64>::ones((6, 2));
        let h = build_h(&layout, &loadings).unwrap();
        for i in 0..6 {
            let (own_off, own_len) = layout.idio_block(i);
            for j in layout.factor_len..layout.n_s {
                if h[[i, j]] != 0.0 {
                    assert!(j >= own_off && j < own_off + own_len);
                }
            }
        }
    }

    #[test]
    fn sparse_f_application_matches_dense() {
        let layout = build_layout(&spec(1, 1, 2, 3, 1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let loadings = Array2::<f64>::ones((4, 2));
        let phi = [0.6, -0.1];
        let mut rho = Array2::<f64>::zeros((4, 3));
        for v in rho.iter_mut() {
            *v = rng.random_range(-0.3..0.3);
        }
        let sys = StateSpaceSystem::assemble(&layout, &loadings, &phi, &rho).unwrap();
        let v: Vec<f64> = (0..layout.n_s).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dense = sys.f.dot(&Array1::from_vec(v.clone()));
        let mut sparse = vec![0.0; layout.n_s];
        sys.apply_f_vec(&v, &mut sparse);
        for i in 0..layout.n_s {
            assert_abs_diff_eq!(dense[i], sparse[i], epsilon = 1e-13);
        }
        let dense_t = sys.f.t().dot(&Array1::from_vec(v.clone()));
        let mut sparse_t = vec![0.0; layout.n_s];
        sys.apply_f_t_vec(&v, &mut sparse_t);
        for i in 0..layout.n_s {
            assert_abs_diff_eq!(dense_t[i], sparse_t[i], epsilon = 1e-13);
        }
    }

    #[test]
    fn sparse_cov_prediction_matches_dense() {
        let layout = build_layout(&spec(1, 0, 1, 2, 0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let loadings = Array2::<f64>::ones((2, 1));
        let phi = [0.5, 0.2];
        let mut rho = Array2::<f64>::zeros((2, 2));
        for v in rho.iter_mut() {
            *v = rng.random_range(-0.3..0.3);
        }
        let sys = StateSpaceSystem::assemble(&layout, &loadings, &phi, &rho).unwrap();
        let n = layout.n_s;
        let mut p = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let v = rng.random_range(-0.5..0.5);
                p[[i, j]] = v;
                p[[j, i]] = v;
            }
            p[[i, i]] += n as f64; // keep it PD-ish
        }
        let scales: Vec<f64> = sys.shock_slots.iter().map(|_| 0.7).collect();
        let mut dense = sys.f.dot(&p).dot(&sys.f.t());
        for (slot, sc) in sys.shock_slots.iter().zip(&scales) {
            dense[[*slot, *slot]] += sc * sc;
        }
        let mut fast = p.clone();
        sys.predict_cov(&mut fast, &scales);
        for i in 0..n {
            for j in 0..n {
                assert_abs_diff_eq!(fast[[i, j]], dense[[i, j]], epsilon = 1e-11);
            }
        }
    }

    proptest! {
        #[test]
        fn shapes_hold_over_spec_grid(
            n_q in 0usize..3, n_m in 0usize..3, n_w in 1usize..4,
            p_q in 1usize..6, s in 0usize..2,
        ) {
            let layout = build_layout(&spec(n_q, n_m, n_w, p_q, s)).unwrap();
            let n = n_q + n_m + n_w;
            let loadings = Array2::<f64>::ones((n, s + 1));
            let rho = Array2::<f64>::zeros((n, p_q));
            let h = build_h(&layout, &loadings).unwrap();
            let f = build_f(&layout, &[0.5, 0.1], &rho).unwrap();
            prop_assert_eq!(h.shape(), &[n, layout.n_s]);
            prop_assert_eq!(f.shape(), &[layout.n_s, layout.n_s]);
        }
    }
}
