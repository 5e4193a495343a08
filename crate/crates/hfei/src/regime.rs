//! Second-stage Markov-switching recession model.
//!
//! The estimated factor path is decomposed into a two-state
//! (recession/expansion) mean plus Gaussian noise, where every
//! contiguous episode of a regime carries its own mean level, so deep and
//! mild recessions are not forced to share one. A Gibbs sampler
//! alternates a forward-filter backward-sample pass on the regime path,
//! conjugate Normal draws of the episode means, Beta draws of the
//! transition probabilities, and a Gamma draw of the noise precision.
//!
//! Recessions are dated from the posterior recession probabilities:
//! called when the probability first exceeds 0.65 and dated from the
//! first prior crossing of 0.5; ended when it drops below 0.35 and
//! dated to the first crossing below 0.5.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};

/// Call threshold for entering a recession.
pub const CALL_THRESHOLD: f64 = 0.65;
/// Dating threshold for the start/end of a recession.
pub const DATE_THRESHOLD: f64 = 0.5;
/// Call threshold for leaving a recession.
pub const END_THRESHOLD: f64 = 0.35;

/// Priors and chain lengths for the switching model.
#[derive(Clone, Copy, Debug)]
pub struct RegimeSpec {
    /// Normal prior (mean, variance) for recession-episode means.
    pub mean_rec_prior: (f64, f64),
    /// Normal prior (mean, variance) for expansion-episode means.
    pub mean_exp_prior: (f64, f64),
    /// Beta prior on the probability of staying in expansion.
    pub stay_exp_prior: (f64, f64),
    /// Beta prior on the probability of staying in recession.
    pub stay_rec_prior: (f64, f64),
    /// Gamma prior (shape, rate) on the noise precision 1/σ².
    pub precision_prior: (f64, f64),
    pub iterations: usize,
    pub burn_in: usize,
    /// Reject episode-mean draws where a recession mean reaches any
    /// expansion mean.
    pub enforce_mean_ordering: bool,
}

impl Default for RegimeSpec {
    fn default() -> Self {
        Self {
            mean_rec_prior: (-1.0, 1.0),
            mean_exp_prior: (1.0, 1.0),
            stay_exp_prior: (9.0, 1.0),
            stay_rec_prior: (9.0, 1.0),
            precision_prior: (2.0, 0.5),
            iterations: 4_000,
            burn_in: 1_000,
            enforce_mean_ordering: true,
        }
    }
}

impl RegimeSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.mean_rec_prior.1,
            self.mean_exp_prior.1,
            self.stay_exp_prior.0,
            self.stay_exp_prior.1,
            self.stay_rec_prior.0,
            self.stay_rec_prior.1,
            self.precision_prior.0,
            self.precision_prior.1,
        ];
        if positive.iter().any(|v| *v <= 0.0) {
            return Err(Error::Spec(
                "regime prior hyperparameters must be positive".into(),
            ));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::Spec(format!(
                "regime burn_in {} must be below iterations {}",
                self.burn_in, self.iterations
            )));
        }
        Ok(())
    }
}

/// A recession located on the probability path; positions index the
/// path. `end`/`end_call` stay empty when the recession is still open
/// at the end of the sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DatedRecession {
    /// First position of the contiguous run above 0.5 that led to the call.
    pub start: usize,
    /// First position where the probability exceeded 0.65.
    pub call: usize,
    /// First position of the closing run below 0.5.
    pub end: Option<usize>,
    /// First position where the probability dropped below 0.35.
    pub end_call: Option<usize>,
}

/// Posterior summary of the switching model.
#[derive(Clone, Debug)]
pub struct RegimePosterior {
    /// P(recession) per period, averaged over kept draws.
    pub recession_prob: Vec<f64>,
    /// Kept draws of the stay-in-expansion probability.
    pub stay_exp: Vec<f64>,
    /// Kept draws of the stay-in-recession probability.
    pub stay_rec: Vec<f64>,
    /// Kept draws of the noise variance.
    pub sigma2: Vec<f64>,
    /// Recession-episode means per kept draw (empty when the draw had no
    /// recession episode).
    pub rec_episode_means: Vec<Vec<f64>>,
    /// Expansion-episode means per kept draw.
    pub exp_episode_means: Vec<Vec<f64>>,
    /// Prior draws used for a regime absent from the path, per kept draw.
    pub absent_regime_prior_draws: Vec<f64>,
    /// Recessions dated on the posterior mean probability path.
    pub episodes: Vec<DatedRecession>,
}

/// Contiguous episodes of a regime path: (regime, start, end inclusive).
fn episodes_of(path: &[u8]) -> Vec<(u8, usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0usize;
    for t in 1..=path.len() {
        if t == path.len() || path[t] != path[start] {
            out.push((path[start], start, t - 1));
            start = t;
        }
    }
    out
}

/// Transition counts (n11, n10, n00, n01): stays in expansion, exits
/// from expansion, stays in recession, exits from recession.
pub fn transition_counts(path: &[u8]) -> (usize, usize, usize, usize) {
    let (mut n11, mut n10, mut n00, mut n01) = (0, 0, 0, 0);
    for w in path.windows(2) {
        match (w[0], w[1]) {
            (1, 1) => n11 += 1,
            (1, 0) => n10 += 1,
            (0, 0) => n00 += 1,
            (0, 1) => n01 += 1,
            _ => {}
        }
    }
    (n11, n10, n00, n01)
}

/// Beta posterior parameters for (stay-expansion, stay-recession) given
/// a regime path: the conjugate update adds stays to the first shape and
/// exits to the second.
pub fn beta_posteriors(
    path: &[u8],
    stay_exp_prior: (f64, f64),
    stay_rec_prior: (f64, f64),
) -> ((f64, f64), (f64, f64)) {
    let (n11, n10, n00, n01) = transition_counts(path);
    (
        (
            stay_exp_prior.0 + n11 as f64,
            stay_exp_prior.1 + n10 as f64,
        ),
        (
            stay_rec_prior.0 + n00 as f64,
            stay_rec_prior.1 + n01 as f64,
        ),
    )
}

/// Per-period mean surfaces for both regimes: inside an episode the
/// episode's mean applies; elsewhere the time-nearest episode of that
/// regime; the fallback value where the regime never occurs.
fn mean_surfaces(
    t_len: usize,
    episodes: &[(u8, usize, usize)],
    means: &[f64],
    fallback: [f64; 2],
) -> (Vec<f64>, Vec<f64>) {
    let mut surfaces = [vec![fallback[0]; t_len], vec![fallback[1]; t_len]];
    for regime in 0..2u8 {
        let idx: Vec<usize> = episodes
            .iter()
            .enumerate()
            .filter(|(_, e)| e.0 == regime)
            .map(|(k, _)| k)
            .collect();
        if idx.is_empty() {
            continue;
        }
        for t in 0..t_len {
            // Nearest episode of this regime by gap to [start, end].
            let mut best = f64::INFINITY;
            let mut value = fallback[regime as usize];
            for &k in &idx {
                let (_, start, end) = episodes[k];
                let dist = if t < start {
                    (start - t) as f64
                } else if t > end {
                    (t - end) as f64
                } else {
                    0.0
                };
                if dist < best {
                    best = dist;
                    value = means[k];
                }
            }
            surfaces[regime as usize][t] = value;
        }
    }
    let [rec, exp] = surfaces;
    (rec, exp)
}

/// Fits the switching model to a factor path by Gibbs sampling.
pub fn fit_regime(factor: &[f64], spec: &RegimeSpec, seed: u64) -> Result<RegimePosterior> {
    spec.validate()?;
    let t_len = factor.len();
    if t_len < 10 {
        return Err(Error::InsufficientData(format!(
            "regime model needs more than 10 periods, got {t_len}"
        )));
    }
    if factor.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("factor path contains non-finite values".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Initialize the path by thresholding at the sample mean.
    let mean_f = factor.iter().sum::<f64>() / t_len as f64;
    let mut path: Vec<u8> = factor.iter().map(|f| u8::from(*f >= mean_f)).collect();
    let var_f = factor
        .iter()
        .map(|f| (f - mean_f) * (f - mean_f))
        .sum::<f64>()
        / (t_len - 1) as f64;
    let mut sigma2 = (var_f / 2.0).max(1e-8);
    let mut stay_exp = 0.9f64;
    let mut stay_rec = 0.9f64;
    let mut episode_means: Vec<f64>;
    let mut surfaces = {
        let eps = episodes_of(&path);
        let means: Vec<f64> = eps
            .iter()
            .map(|&(_, s, e)| factor[s..=e].iter().sum::<f64>() / (e - s + 1) as f64)
            .collect();
        mean_surfaces(
            t_len,
            &eps,
            &means,
            [spec.mean_rec_prior.0, spec.mean_exp_prior.0],
        )
    };

    let kept = spec.iterations - spec.burn_in;
    let mut out = RegimePosterior {
        recession_prob: vec![0.0; t_len],
        stay_exp: Vec::with_capacity(kept),
        stay_rec: Vec::with_capacity(kept),
        sigma2: Vec::with_capacity(kept),
        rec_episode_means: Vec::with_capacity(kept),
        exp_episode_means: Vec::with_capacity(kept),
        absent_regime_prior_draws: Vec::new(),
        episodes: Vec::new(),
    };

    let mut filtered = vec![[0.0f64; 2]; t_len];
    for iter in 0..spec.iterations {
        // (i) Regime path by forward filter, backward sample.
        let trans = [[stay_rec, 1.0 - stay_rec], [1.0 - stay_exp, stay_exp]];
        let stat_rec = (1.0 - stay_exp) / ((1.0 - stay_exp) + (1.0 - stay_rec));
        let mut prior = [stat_rec, 1.0 - stat_rec];
        for t in 0..t_len {
            if t > 0 {
                let prev = filtered[t - 1];
                prior = [
                    prev[0] * trans[0][0] + prev[1] * trans[1][0],
                    prev[0] * trans[0][1] + prev[1] * trans[1][1],
                ];
            }
            let like = |mu: f64| {
                let d = factor[t] - mu;
                (-0.5 * d * d / sigma2).exp()
            };
            let w0 = prior[0] * like(surfaces.0[t]).max(1e-300);
            let w1 = prior[1] * like(surfaces.1[t]).max(1e-300);
            let total = w0 + w1;
            filtered[t] = [w0 / total, w1 / total];
        }
        path[t_len - 1] = u8::from(rng.random::<f64>() < filtered[t_len - 1][1]);
        for t in (0..t_len - 1).rev() {
            let next = path[t + 1] as usize;
            let w0 = filtered[t][0] * trans[0][next];
            let w1 = filtered[t][1] * trans[1][next];
            path[t] = u8::from(rng.random::<f64>() < w1 / (w0 + w1));
        }

        // (ii) Episode means from their Normal conditionals, with the
        // ordering rejection when enabled.
        let eps = episodes_of(&path);
        let mut fallback_draw: Option<f64> = None;
        let has_rec = eps.iter().any(|e| e.0 == 0);
        let has_exp = eps.iter().any(|e| e.0 == 1);
        let mut accepted: Option<Vec<f64>> = None;
        for _try in 0..100 {
            let mut means = Vec::with_capacity(eps.len());
            for &(regime, start, end) in &eps {
                let (m0, v0) = if regime == 0 {
                    spec.mean_rec_prior
                } else {
                    spec.mean_exp_prior
                };
                let n_e = (end - start + 1) as f64;
                let sum: f64 = factor[start..=end].iter().sum();
                let v_post = 1.0 / (1.0 / v0 + n_e / sigma2);
                let m_post = v_post * (m0 / v0 + sum / sigma2);
                let z: f64 = rng.sample(StandardNormal);
                means.push(m_post + v_post.sqrt() * z);
            }
            if spec.enforce_mean_ordering && has_rec && has_exp {
                let max_rec = eps
                    .iter()
                    .zip(&means)
                    .filter(|(e, _)| e.0 == 0)
                    .map(|(_, m)| *m)
                    .fold(f64::NEG_INFINITY, f64::max);
                let min_exp = eps
                    .iter()
                    .zip(&means)
                    .filter(|(e, _)| e.0 == 1)
                    .map(|(_, m)| *m)
                    .fold(f64::INFINITY, f64::min);
                if max_rec >= min_exp {
                    continue;
                }
            }
            accepted = Some(means);
            break;
        }
        episode_means = match accepted {
            Some(m) => m,
            None => {
                // Heavily overlapping regimes: fall back to the
                // conditional means without the ordering constraint.
                eps.iter()
                    .map(|&(regime, start, end)| {
                        let (m0, v0) = if regime == 0 {
                            spec.mean_rec_prior
                        } else {
                            spec.mean_exp_prior
                        };
                        let n_e = (end - start + 1) as f64;
                        let sum: f64 = factor[start..=end].iter().sum();
                        let v_post = 1.0 / (1.0 / v0 + n_e / sigma2);
                        v_post * (m0 / v0 + sum / sigma2)
                    })
                    .collect()
            }
        };
        // A regime absent from the whole path gets a prior draw as its
        // surface fallback.
        let mut fallback = [spec.mean_rec_prior.0, spec.mean_exp_prior.0];
        if !has_rec {
            let z: f64 = rng.sample(StandardNormal);
            let d = spec.mean_rec_prior.0 + spec.mean_rec_prior.1.sqrt() * z;
            fallback[0] = d;
            fallback_draw = Some(d);
        }
        if !has_exp {
            let z: f64 = rng.sample(StandardNormal);
            let d = spec.mean_exp_prior.0 + spec.mean_exp_prior.1.sqrt() * z;
            fallback[1] = d;
            fallback_draw = Some(d);
        }
        surfaces = mean_surfaces(t_len, &eps, &episode_means, fallback);

        // (iii) Transition probabilities from their Beta conditionals.
        let (exp_post, rec_post) =
            beta_posteriors(&path, spec.stay_exp_prior, spec.stay_rec_prior);
        stay_exp = Beta::new(exp_post.0, exp_post.1)
            .expect("valid beta parameters")
            .sample(&mut rng);
        stay_rec = Beta::new(rec_post.0, rec_post.1)
            .expect("valid beta parameters")
            .sample(&mut rng);

        // (iv) Noise precision from its Gamma conditional.
        let mut ss = 0.0;
        for (k, &(_, start, end)) in eps.iter().enumerate() {
            for t in start..=end {
                let d = factor[t] - episode_means[k];
                ss += d * d;
            }
        }
        let shape = spec.precision_prior.0 + t_len as f64 / 2.0;
        let rate = spec.precision_prior.1 + ss / 2.0;
        let precision = Gamma::new(shape, 1.0 / rate)
            .expect("valid gamma parameters")
            .sample(&mut rng);
        sigma2 = (1.0 / precision).max(1e-12);

        if iter >= spec.burn_in {
            for t in 0..t_len {
                if path[t] == 0 {
                    out.recession_prob[t] += 1.0;
                }
            }
            out.stay_exp.push(stay_exp);
            out.stay_rec.push(stay_rec);
            out.sigma2.push(sigma2);
            let mut rec_means = Vec::new();
            let mut exp_means = Vec::new();
            for (k, e) in eps.iter().enumerate() {
                if e.0 == 0 {
                    rec_means.push(episode_means[k]);
                } else {
                    exp_means.push(episode_means[k]);
                }
            }
            out.rec_episode_means.push(rec_means);
            out.exp_episode_means.push(exp_means);
            if let Some(d) = fallback_draw {
                out.absent_regime_prior_draws.push(d);
            }
        }
    }
    for p in out.recession_prob.iter_mut() {
        *p /= kept as f64;
    }
    out.episodes = date_recessions(&out.recession_prob);
    Ok(out)
}

/// Dates recessions on a probability path.
///
/// A recession is called when the probability first exceeds 0.65 and
/// dated to begin at the first crossing above 0.5 of the run containing
/// the call; it is called over when the probability first drops below
/// 0.35 afterwards and dated to end at the first crossing below 0.5 of
/// the run containing that exit. Emitted episodes are ordered and
/// pairwise disjoint.
pub fn date_recessions(prob: &[f64]) -> Vec<DatedRecession> {
    let mut out = Vec::new();
    let mut t = 0usize;
    while t < prob.len() {
        if prob[t] > CALL_THRESHOLD {
            let call = t;
            let mut start = call;
            while start > 0 && prob[start - 1] > DATE_THRESHOLD {
                start -= 1;
            }
            // Find the end call.
            let mut end_call = None;
            let mut u = call + 1;
            while u < prob.len() {
                if prob[u] < END_THRESHOLD {
                    end_call = Some(u);
                    break;
                }
                u += 1;
            }
            let end = end_call.map(|ec| {
                let mut e = ec;
                while e > call && prob[e - 1] < DATE_THRESHOLD {
                    e -= 1;
                }
                e
            });
            out.push(DatedRecession {
                start,
                call,
                end,
                end_call,
            });
            match end_call {
                Some(ec) => t = ec + 1,
                None => break,
            }
        } else {
            t += 1;
        }
    }
    out
}
