//! Two-block sampler: Metropolis-Hastings on θ given σ², then a conjugate
//! inverse-gamma Gibbs draw of σ² given θ, with covariance and scale
//! adaptation restricted to the burn-in phase.
//!
//! Block 1 accepts a proposal θ* with log-probability
//! `min(loglik(θ*) − ||θ*||²/(2σ²) − loglik(θ) + ||θ||²/(2σ²), 0)`.
//! Block 2 draws `σ² ~ Inv-Gamma(a + S/2, b + ||θ||²/2)`.
//!
//! The proposal covariance is the empirical covariance of a strided
//! subsample of the past chain plus jitter, scaled by an s² factor that
//! chases a 0.234 acceptance rate. After burn-in both are frozen so the
//! proposal density stays symmetric and the chain targets the conditional
//! exactly.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::rng::{sample_inv_gamma, InvGammaParams, RngHandle};

/// Tuning constants for one chain.
#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    /// Variance of the θ^{(1)} draw.
    pub sigma_init2: f64,
    /// Stride δ between history points entering the proposal covariance.
    pub stride: usize,
    /// Window Δ: number of strided points kept once the chain is long.
    pub window: usize,
    /// Jitter ε added to the empirical covariance diagonal.
    pub jitter: f64,
    /// Adaptation decay exponent κ in γ_j = j^{−κ}, 0.5 < κ < 1.
    pub kappa: f64,
    /// Hyperprior Inv-Gamma(a, b) on σ².
    pub hyper_a: f64,
    pub hyper_b: f64,
    /// Initial proposal scale (s²)^{(0)}.
    pub s2_init: f64,
    /// Acceptance rate the scale adaptation chases.
    pub target_accept: f64,
    /// Pin σ² to a constant and skip Block 2. Used to run the MH block
    /// against a known target (a huge value makes the prior term vanish).
    pub fixed_sigma2: Option<f64>,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iterations: 100_000,
            burn_in: 20_000,
            sigma_init2: 1.0,
            stride: 1000,
            window: 100,
            jitter: 1e-6,
            kappa: 0.6,
            hyper_a: 1e-6,
            hyper_b: 1e-6,
            s2_init: 1.0,
            target_accept: 0.234,
            fixed_sigma2: None,
        }
    }
}

impl ChainConfig {
    fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::InvalidParameter(format!(
                "burn_in {} must be < iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if self.stride == 0 || self.window == 0 {
            return Err(Error::InvalidParameter("stride and window must be >= 1".into()));
        }
        if !(self.sigma_init2 > 0.0) || !(self.s2_init > 0.0) || !(self.jitter > 0.0) {
            return Err(Error::InvalidParameter(
                "sigma_init2, s2_init and jitter must be positive".into(),
            ));
        }
        if self.hyper_a < 0.0 || self.hyper_b < 0.0 {
            return Err(Error::InvalidParameter("hyperprior a, b must be >= 0".into()));
        }
        Ok(())
    }
}

/// How the chain obtains θ^{(1)}.
#[derive(Debug, Clone)]
pub enum ChainInit {
    /// θ^{(1)} ~ MVN(0, σ²_Init I_dim).
    Draw { dim: usize },
    /// Start from a supplied vector (shared-start comparisons).
    Fixed(Vec<f64>),
}

/// Everything a finished chain reports.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    /// Post-burn-in θ samples, one row per iteration burn_in+1..=iterations.
    pub samples: Vec<Vec<f64>>,
    /// Post-burn-in σ² draws aligned with `samples`.
    pub sigma2_samples: Vec<f64>,
    /// Full-resolution traces over iterations 1..=iterations.
    pub log_cond_post: Vec<f64>,
    pub theta_norm2: Vec<f64>,
    pub sigma2_trace: Vec<f64>,
    pub loglik_trace: Vec<f64>,
    /// Whether iteration j arose from an accepted proposal (j = 1 counts as
    /// accepted: it is the initial draw).
    pub accepted: Vec<bool>,
    pub burn_in: usize,
    /// θ with the highest recorded log-likelihood across all iterations.
    pub best_theta: Vec<f64>,
    pub best_loglik: f64,
    /// Proposal covariance frozen at the end of burn-in.
    pub frozen_proposal_cov: DMatrix<f64>,
    pub post_burn_accept_rate: f64,
}

impl ChainOutput {
    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }
}

/// `log α_θ` of Block 1. When both log-likelihoods are −∞ the ratio term is
/// taken as 0 and the prior decides alone, which keeps the chain mobile
/// where the objective is flat at zero.
pub fn log_accept_ratio(
    ll_new: f64,
    ll_cur: f64,
    norm2_new: f64,
    norm2_cur: f64,
    sigma2: f64,
) -> f64 {
    let ratio = if ll_new == f64::NEG_INFINITY && ll_cur == f64::NEG_INFINITY {
        0.0
    } else {
        ll_new - ll_cur
    };
    let prior = (norm2_cur - norm2_new) / (2.0 * sigma2);
    (ratio + prior).min(0.0)
}

/// Log conditional posterior `loglik − ||θ||²/(2σ²) − (S/2)·log(2πσ²)`.
pub fn log_cond_posterior(loglik: f64, norm2: f64, sigma2: f64, dim: usize) -> f64 {
    loglik - norm2 / (2.0 * sigma2)
        - dim as f64 / 2.0 * (2.0 * std::f64::consts::PI * sigma2).ln()
}

/// Block 2: one conjugate draw σ² ~ Inv-Gamma(a + S/2, b + ||θ||²/2).
pub fn block2_draw(norm2: f64, dim: usize, a: f64, b: f64, rng: &mut RngHandle) -> Result<f64> {
    let params = InvGammaParams::new(a + dim as f64 / 2.0, b + norm2 / 2.0)?;
    Ok(sample_inv_gamma(params, rng))
}

/// 1-based iteration indices whose θ values enter the proposal covariance at
/// iteration `j`: all of them early on, then every δ-th aligned to the
/// current phase, then only the last Δ strided points, always plus the
/// current iterate.
pub fn strided_indices(j: usize, stride: usize, window: usize) -> Vec<usize> {
    let d = stride;
    if j <= d {
        return (1..=j).collect();
    }
    let mut idx: Vec<usize> = if j <= d * window {
        let m = j / d;
        let r = j - m * d;
        (0..m).map(|k| r + k * d).filter(|&i| i >= 1).collect()
    } else {
        (0..window).map(|k| j - d * window + k * d).collect()
    };
    idx.push(j);
    idx
}

/// Empirical covariance (n−1 denominator) of the strided history subsample
/// plus ε·I. With fewer than two points this falls back to the identity,
/// i.e. an isotropic s²·I proposal.
pub fn adapt_covariance(
    history: &[DVector<f64>],
    stride: usize,
    window: usize,
    jitter: f64,
    j: usize,
) -> DMatrix<f64> {
    debug_assert!(j <= history.len());
    let dim = history[0].len();
    let idx = strided_indices(j, stride, window);
    if idx.len() < 2 {
        return DMatrix::identity(dim, dim);
    }
    let n = idx.len() as f64;
    let mut mean = DVector::zeros(dim);
    for &i in &idx {
        mean += &history[i - 1];
    }
    mean /= n;
    let mut cov = DMatrix::zeros(dim, dim);
    for &i in &idx {
        let d = &history[i - 1] - &mean;
        cov.syger(1.0 / (n - 1.0), &d, &d, 1.0);
    }
    // syger fills the lower triangle; mirror it.
    for r in 0..dim {
        for c in (r + 1)..dim {
            cov[(r, c)] = cov[(c, r)];
        }
    }
    for i in 0..dim {
        cov[(i, i)] += jitter;
    }
    cov
}

/// Multiplicative scale update `s² ← s²·exp(j^{−κ}(α_j − target))`.
pub fn adapt_scale(s2: f64, observed_rate: f64, j: usize, kappa: f64, target: f64) -> f64 {
    s2 * ((j as f64).powf(-kappa) * (observed_rate - target)).exp()
}

fn propose(
    theta: &DVector<f64>,
    s: f64,
    chol: &Cholesky<f64, Dyn>,
    rng: &mut RngHandle,
) -> DVector<f64> {
    let z = DVector::from_fn(theta.len(), |_, _| rng.standard_normal());
    theta + chol.l() * z * s
}

/// Outcome of one Block-1 step.
#[derive(Debug, Clone)]
pub struct Block1Outcome {
    pub theta: DVector<f64>,
    pub loglik: f64,
    pub accepted: bool,
}

/// One Metropolis step on θ | σ², D with proposal N(θ, s²·Σ) given through
/// its Cholesky factor. A NaN log-likelihood aborts with a diagnostic.
pub fn block1_step<L>(
    theta: &DVector<f64>,
    loglik_cur: f64,
    sigma2: f64,
    s2: f64,
    prop_chol: &Cholesky<f64, Dyn>,
    loglik: &L,
    iteration: usize,
    rng: &mut RngHandle,
) -> Result<Block1Outcome>
where
    L: Fn(&[f64]) -> f64 + ?Sized,
{
    let cand = propose(theta, s2.sqrt(), prop_chol, rng);
    let ll_new = loglik(cand.as_slice());
    if ll_new.is_nan() {
        return Err(Error::NanLogLikelihood { iteration });
    }
    let log_alpha = log_accept_ratio(
        ll_new,
        loglik_cur,
        cand.norm_squared(),
        theta.norm_squared(),
        sigma2,
    );
    let accept = rng.uniform().ln() < log_alpha;
    Ok(if accept {
        Block1Outcome {
            theta: cand,
            loglik: ll_new,
            accepted: true,
        }
    } else {
        Block1Outcome {
            theta: theta.clone(),
            loglik: loglik_cur,
            accepted: false,
        }
    })
}

/// Window of recent accept/reject flags backing the observed rate α_j.
/// The paper leaves the averaging window unspecified; it is pinned to the
/// last min(j, 500) proposals for reproducibility.
const ACCEPT_WINDOW: usize = 500;

struct AcceptRing {
    flags: Vec<bool>,
    next: usize,
    filled: usize,
    accepted: usize,
}

impl AcceptRing {
    fn new() -> Self {
        Self {
            flags: vec![false; ACCEPT_WINDOW],
            next: 0,
            filled: 0,
            accepted: 0,
        }
    }

    fn push(&mut self, flag: bool) {
        if self.filled == ACCEPT_WINDOW {
            if self.flags[self.next] {
                self.accepted -= 1;
            }
        } else {
            self.filled += 1;
        }
        self.flags[self.next] = flag;
        if flag {
            self.accepted += 1;
        }
        self.next = (self.next + 1) % ACCEPT_WINDOW;
    }

    fn rate(&self) -> f64 {
        if self.filled == 0 {
            0.0
        } else {
            self.accepted as f64 / self.filled as f64
        }
    }
}

/// Run the two-block chain. The log-likelihood callback must be
/// deterministic for a fixed seed discipline; it is invoked once per
/// proposal.
pub fn run_two_block<L>(
    cfg: &ChainConfig,
    init: ChainInit,
    loglik: &L,
    rng: &mut RngHandle,
) -> Result<ChainOutput>
where
    L: Fn(&[f64]) -> f64 + ?Sized,
{
    cfg.validate()?;
    let mut theta = match init {
        ChainInit::Fixed(v) => DVector::from_vec(v),
        ChainInit::Draw { dim } => {
            DVector::from_fn(dim, |_, _| rng.standard_normal() * cfg.sigma_init2.sqrt())
        }
    };
    let dim = theta.len();
    let mut ll = loglik(theta.as_slice());
    if ll.is_nan() {
        return Err(Error::NanLogLikelihood { iteration: 1 });
    }
    let mut sigma2 = match cfg.fixed_sigma2 {
        Some(v) => v,
        None => block2_draw(theta.norm_squared(), dim, cfg.hyper_a, cfg.hyper_b, rng)?,
    };
    let mut s2 = cfg.s2_init;

    let n = cfg.iterations;
    let mut out = ChainOutput {
        samples: Vec::with_capacity(n - cfg.burn_in),
        sigma2_samples: Vec::with_capacity(n - cfg.burn_in),
        log_cond_post: Vec::with_capacity(n),
        theta_norm2: Vec::with_capacity(n),
        sigma2_trace: Vec::with_capacity(n),
        loglik_trace: Vec::with_capacity(n),
        accepted: Vec::with_capacity(n),
        burn_in: cfg.burn_in,
        best_theta: theta.as_slice().to_vec(),
        best_loglik: ll,
        frozen_proposal_cov: DMatrix::identity(dim, dim),
        post_burn_accept_rate: 0.0,
    };

    let record = |out: &mut ChainOutput, theta: &DVector<f64>, ll: f64, sigma2: f64, acc: bool, post_burn: bool| {
        let norm2 = theta.norm_squared();
        out.theta_norm2.push(norm2);
        out.sigma2_trace.push(sigma2);
        out.loglik_trace.push(ll);
        out.log_cond_post
            .push(log_cond_posterior(ll, norm2, sigma2, dim));
        out.accepted.push(acc);
        if ll > out.best_loglik {
            out.best_loglik = ll;
            out.best_theta = theta.as_slice().to_vec();
        }
        if post_burn {
            out.samples.push(theta.as_slice().to_vec());
            out.sigma2_samples.push(sigma2);
        }
    };

    record(&mut out, &theta, ll, sigma2, true, cfg.burn_in == 0);

    let mut history: Vec<DVector<f64>> = Vec::with_capacity(cfg.burn_in.max(1));
    history.push(theta.clone());
    let mut ring = AcceptRing::new();
    let identity = DMatrix::identity(dim, dim);
    let mut frozen: Option<(DMatrix<f64>, Cholesky<f64, Dyn>)> = if cfg.burn_in == 0 {
        Some((identity.clone(), identity.clone().cholesky().unwrap()))
    } else {
        None
    };
    let mut current_chol = identity.cholesky().unwrap();

    for j in 1..n {
        // Proposal covariance for the step producing iteration j+1: adapt
        // while the current iteration count is within burn-in, else reuse
        // the frozen factor.
        let chol = if j <= cfg.burn_in {
            let cov = adapt_covariance(&history, cfg.stride, cfg.window, cfg.jitter, j);
            let ch = cov.clone().cholesky().ok_or(Error::DegenerateCovariance)?;
            if j == cfg.burn_in {
                frozen = Some((cov, ch.clone()));
            }
            current_chol = ch;
            &current_chol
        } else {
            &frozen.as_ref().expect("frozen at end of burn-in").1
        };

        let step = block1_step(&theta, ll, sigma2, s2, chol, loglik, j + 1, rng)?;
        theta = step.theta;
        ll = step.loglik;
        ring.push(step.accepted);
        if j <= cfg.burn_in {
            s2 = adapt_scale(s2, ring.rate(), j, cfg.kappa, cfg.target_accept);
        }
        if cfg.fixed_sigma2.is_none() {
            sigma2 = block2_draw(theta.norm_squared(), dim, cfg.hyper_a, cfg.hyper_b, rng)?;
        }
        let iter_index = j + 1;
        record(
            &mut out,
            &theta,
            ll,
            sigma2,
            step.accepted,
            iter_index > cfg.burn_in,
        );
        if iter_index <= cfg.burn_in {
            history.push(theta.clone());
        }
    }

    if let Some((cov, _)) = frozen {
        out.frozen_proposal_cov = cov;
    }
    let post: &[bool] = &out.accepted[cfg.burn_in..];
    out.post_burn_accept_rate = if post.is_empty() {
        0.0
    } else {
        post.iter().filter(|&&a| a).count() as f64 / post.len() as f64
    };
    Ok(out)
}

/// The sampled θ maximizing the recorded log conditional posterior among the
/// post-burn-in samples (ties break to the earliest iteration).
pub fn map_estimate(output: &ChainOutput) -> Result<(Vec<f64>, f64)> {
    if output.samples.is_empty() {
        return Err(Error::EmptyChain);
    }
    let mut best_i = 0usize;
    let mut best = f64::NEG_INFINITY;
    for (i, _) in output.samples.iter().enumerate() {
        let lcp = output.log_cond_post[output.burn_in + i];
        if lcp > best {
            best = lcp;
            best_i = i;
        }
    }
    Ok((output.samples[best_i].clone(), best))
}

/// Joint state for the single-block variant that proposes (θ, σ²) together.
#[derive(Debug, Clone)]
pub struct JointState {
    pub theta: DVector<f64>,
    pub sigma2: f64,
    pub loglik: f64,
}

/// `log α` for the joint move, including the Hastings correction of the
/// asymmetric Inv-Gamma(a_Q, b_Q) proposal on σ².
#[allow(clippy::too_many_arguments)]
pub fn joint_log_accept_ratio(
    ll_new: f64,
    ll_cur: f64,
    norm2_new: f64,
    norm2_cur: f64,
    sigma2_new: f64,
    sigma2_cur: f64,
    dim: usize,
    a: f64,
    b: f64,
    a_q: f64,
    b_q: f64,
) -> f64 {
    let ratio = if ll_new == f64::NEG_INFINITY && ll_cur == f64::NEG_INFINITY {
        0.0
    } else {
        ll_new - ll_cur
    };
    // grouped as exact pairwise differences so identical states cancel
    let s = dim as f64;
    let dlog = sigma2_cur.ln() - sigma2_new.ln();
    let dinv = 1.0 / sigma2_cur - 1.0 / sigma2_new;
    let log_alpha = ratio
        + s / 2.0 * dlog
        + norm2_cur / (2.0 * sigma2_cur)
        - norm2_new / (2.0 * sigma2_new)
        + (a + 1.0) * dlog
        + b * dinv
        - (a_q + 1.0) * dlog
        - b_q * dinv;
    log_alpha.min(0.0)
}

/// One joint MH step: θ* from the Gaussian walk, σ²* from an independent
/// inverse-gamma proposal, accepted or rejected together.
#[allow(clippy::too_many_arguments)]
pub fn joint_mh_step<L>(
    state: &JointState,
    loglik: &L,
    prop_chol: &Cholesky<f64, Dyn>,
    s2: f64,
    a: f64,
    b: f64,
    a_q: f64,
    b_q: f64,
    iteration: usize,
    rng: &mut RngHandle,
) -> Result<(JointState, bool)>
where
    L: Fn(&[f64]) -> f64 + ?Sized,
{
    let cand_theta = propose(&state.theta, s2.sqrt(), prop_chol, rng);
    let cand_sigma2 = sample_inv_gamma(InvGammaParams::new(a_q, b_q)?, rng);
    let ll_new = loglik(cand_theta.as_slice());
    if ll_new.is_nan() {
        return Err(Error::NanLogLikelihood { iteration });
    }
    let log_alpha = joint_log_accept_ratio(
        ll_new,
        state.loglik,
        cand_theta.norm_squared(),
        state.theta.norm_squared(),
        cand_sigma2,
        state.sigma2,
        state.theta.len(),
        a,
        b,
        a_q,
        b_q,
    );
    if rng.uniform().ln() < log_alpha {
        Ok((
            JointState {
                theta: cand_theta,
                sigma2: cand_sigma2,
                loglik: ll_new,
            },
            true,
        ))
    } else {
        Ok((state.clone(), false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_chol(dim: usize) -> Cholesky<f64, Dyn> {
        DMatrix::identity(dim, dim).cholesky().unwrap()
    }

    #[test]
    fn log_alpha_plugin_values() {
        // equal likelihoods, σ² = 1: log α = (4 − 2)/2 = 1 → clamped to 0
        assert_eq!(log_accept_ratio(-3.0, -3.0, 2.0, 4.0, 1.0), 0.0);
        // ||θ*||² = 6: log α = (4 − 6)/2 = −1
        assert!((log_accept_ratio(-3.0, -3.0, 6.0, 4.0, 1.0) + 1.0).abs() < 1e-15);
        // −∞ proposal against a finite current: reject always
        assert_eq!(
            log_accept_ratio(f64::NEG_INFINITY, -1.0, 1.0, 1.0, 1.0),
            f64::NEG_INFINITY
        );
        // both −∞: prior decides
        assert_eq!(
            log_accept_ratio(f64::NEG_INFINITY, f64::NEG_INFINITY, 2.0, 4.0, 1.0),
            0.0
        );
    }

    #[test]
    fn acceptance_probability_e_minus_one() {
        // log α = −1 ⇒ empirical acceptance ≈ e^{−1}
        let mut rng = RngHandle::new(7);
        let theta = DVector::from_vec(vec![2.0]); // ||θ||² = 4
        let chol = unit_chol(1);
        let trials = 200_000;
        let mut accepted = 0;
        for i in 0..trials {
            // force ||θ*||² − ||θ||² = 2 by a likelihood offset instead of
            // relying on the random proposal: use loglik(θ*) − loglik(θ) = −1
            let step = block1_step(
                &theta,
                0.0,
                1.0,
                1e-12, // tiny proposal step: cand ≈ θ, norms cancel
                &chol,
                &|_t: &[f64]| -1.0,
                i,
                &mut rng,
            )
            .unwrap();
            if step.accepted {
                accepted += 1;
            }
        }
        let rate = accepted as f64 / trials as f64;
        let expected = (-1.0f64).exp();
        assert!(
            (rate - expected).abs() < 0.005,
            "rate {rate} vs e^-1 {expected}"
        );
    }

    #[test]
    fn block1_nan_loglik_aborts() {
        let mut rng = RngHandle::new(1);
        let theta = DVector::zeros(2);
        let chol = unit_chol(2);
        let err = block1_step(&theta, 0.0, 1.0, 1.0, &chol, &|_t: &[f64]| f64::NAN, 5, &mut rng);
        assert!(matches!(err, Err(Error::NanLogLikelihood { iteration: 5 })));
    }

    #[test]
    fn block2_conjugate_parameters_and_moments() {
        let mut rng = RngHandle::new(2);
        // S = 10, ||θ||² = 4, a = b = 1e-6 → Inv-Gamma(5.000001, 2.000001)
        let p = InvGammaParams::new(1e-6 + 5.0, 1e-6 + 2.0).unwrap();
        assert!((p.shape - 5.000001).abs() < 1e-12);
        assert!((p.rate - 2.000001).abs() < 1e-12);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| block2_draw(4.0, 10, 1e-6, 1e-6, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        let expected = p.mean();
        assert!(
            (mean - expected).abs() / expected < 0.02,
            "mean {mean} vs {expected}"
        );
    }

    #[test]
    fn strided_selector_cases() {
        // middle case, from the three-case selector evaluated literally
        assert_eq!(strided_indices(2500, 1000, 100), vec![500, 1500, 2500]);
        // early case: everything
        assert_eq!(strided_indices(3, 1000, 100), vec![1, 2, 3]);
        // exact multiple of δ: the zero index is dropped
        assert_eq!(strided_indices(2000, 1000, 100), vec![1000, 2000]);
        // late case: Δ strided points plus current
        let idx = strided_indices(250_001, 1000, 100);
        assert_eq!(idx.len(), 101);
        assert_eq!(idx[0], 150_001);
        assert_eq!(*idx.last().unwrap(), 250_001);
    }

    #[test]
    fn adapt_covariance_identical_points_gives_jitter() {
        let h = vec![DVector::from_vec(vec![1.0, 2.0]); 2];
        let cov = adapt_covariance(&h, 1, 100, 1e-6, 2);
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![1e-6, 1e-6]));
        assert_eq!(cov, expected);
    }

    #[test]
    fn adapt_covariance_hand_computed() {
        let pts = [[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]];
        let h: Vec<DVector<f64>> = pts.iter().map(|p| DVector::from_vec(p.to_vec())).collect();
        let cov = adapt_covariance(&h, 1, 100, 1e-6, 4);
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { 4.0 / 3.0 + 1e-6 } else { 0.0 };
                assert!((cov[(i, j)] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn adapt_covariance_single_point_is_identity() {
        let h = vec![DVector::from_vec(vec![3.0, -1.0])];
        let cov = adapt_covariance(&h, 1000, 100, 1e-6, 1);
        assert_eq!(cov, DMatrix::identity(2, 2));
    }

    #[test]
    fn adapt_scale_values() {
        // on-target rate leaves s² unchanged
        assert_eq!(adapt_scale(2.5, 0.234, 17, 0.6, 0.234), 2.5);
        // j = 1, κ = 0.6, rate 0.5: s² = exp(0.266)
        let s = adapt_scale(1.0, 0.5, 1, 0.6, 0.234);
        assert!((s - 0.266f64.exp()).abs() < 1e-12);
        assert!((s - 1.30474).abs() < 1e-5);
        // update factor shrinks toward 1 as j grows
        let f1 = adapt_scale(1.0, 0.5, 10, 0.6, 0.234);
        let f2 = adapt_scale(1.0, 0.5, 10_000, 0.6, 0.234);
        assert!((f2 - 1.0).abs() < (f1 - 1.0).abs());
    }

    #[test]
    fn joint_log_alpha_identity_and_prior_only() {
        // identical states: log α = 0
        let v = joint_log_accept_ratio(-2.0, -2.0, 3.0, 3.0, 1.5, 1.5, 4, 1e-6, 1e-6, 2.0, 2.0);
        assert_eq!(v, 0.0);
        // flat likelihood, σ²* = σ², smaller proposal norm: always accept
        let v = joint_log_accept_ratio(0.0, 0.0, 1.0, 4.0, 2.0, 2.0, 4, 1e-6, 1e-6, 2.0, 2.0);
        assert_eq!(v, 0.0);
        // finite vs −∞ likelihood: reject
        let v = joint_log_accept_ratio(
            f64::NEG_INFINITY,
            -1.0,
            1.0,
            1.0,
            2.0,
            2.0,
            4,
            1e-6,
            1e-6,
            2.0,
            2.0,
        );
        assert_eq!(v, f64::NEG_INFINITY);
    }

    #[test]
    fn joint_step_identical_state_always_accepts_itself() {
        // θ* = θ, σ²* = σ² cannot be forced through the random proposal, so
        // check the ratio directly plus one mechanical step call.
        let mut rng = RngHandle::new(3);
        let state = JointState {
            theta: DVector::zeros(3),
            sigma2: 1.0,
            loglik: 0.0,
        };
        let chol = unit_chol(3);
        let (next, _) = joint_mh_step(
            &state,
            &|_t: &[f64]| 0.0,
            &chol,
            1.0,
            1e-6,
            1e-6,
            3.0,
            2.0,
            1,
            &mut rng,
        )
        .unwrap();
        assert_eq!(next.theta.len(), 3);
        assert!(next.sigma2 > 0.0);
    }

    #[test]
    fn map_estimate_picks_recorded_maximum() {
        let mut out = ChainOutput {
            samples: vec![vec![1.0], vec![2.0], vec![3.0]],
            sigma2_samples: vec![1.0; 3],
            log_cond_post: vec![-10.0, -5.0, -3.0, -5.0],
            theta_norm2: vec![0.0; 4],
            sigma2_trace: vec![1.0; 4],
            loglik_trace: vec![0.0; 4],
            accepted: vec![true; 4],
            burn_in: 1,
            best_theta: vec![0.0],
            best_loglik: 0.0,
            frozen_proposal_cov: DMatrix::identity(1, 1),
            post_burn_accept_rate: 1.0,
        };
        let (theta, lcp) = map_estimate(&out).unwrap();
        assert_eq!(theta, vec![2.0]);
        assert_eq!(lcp, -3.0);
        // tie → earliest
        out.log_cond_post = vec![-10.0, -3.0, -7.0, -3.0];
        let (theta, _) = map_estimate(&out).unwrap();
        assert_eq!(theta, vec![1.0]);
        out.samples.clear();
        assert!(matches!(map_estimate(&out), Err(Error::EmptyChain)));
    }

    #[test]
    fn single_sample_chain_map_is_that_sample() {
        let out = ChainOutput {
            samples: vec![vec![4.0, 5.0]],
            sigma2_samples: vec![1.0],
            log_cond_post: vec![-1.0, -2.0],
            theta_norm2: vec![0.0; 2],
            sigma2_trace: vec![1.0; 2],
            loglik_trace: vec![0.0; 2],
            accepted: vec![true; 2],
            burn_in: 1,
            best_theta: vec![0.0],
            best_loglik: 0.0,
            frozen_proposal_cov: DMatrix::identity(2, 2),
            post_burn_accept_rate: 1.0,
        };
        assert_eq!(map_estimate(&out).unwrap().0, vec![4.0, 5.0]);
    }

    #[test]
    fn frozen_proposal_after_burn_in() {
        let cfg = ChainConfig {
            iterations: 2000,
            burn_in: 500,
            stride: 10,
            window: 10,
            fixed_sigma2: Some(1e12),
            ..ChainConfig::default()
        };
        let mut rng = RngHandle::new(10);
        let target = |t: &[f64]| -0.5 * t.iter().map(|x| x * x).sum::<f64>();
        let out = run_two_block(&cfg, ChainInit::Draw { dim: 2 }, &target, &mut rng).unwrap();
        // the frozen matrix is exactly what adapt_covariance produced at
        // j = burn_in; re-running the chain reproduces it bit for bit
        let mut rng2 = RngHandle::new(10);
        let out2 = run_two_block(&cfg, ChainInit::Draw { dim: 2 }, &target, &mut rng2).unwrap();
        assert_eq!(out.frozen_proposal_cov, out2.frozen_proposal_cov);
        assert_eq!(out.samples.len(), 1500);
    }

    #[test]
    fn gaussian_target_moments_and_acceptance() {
        // 2-D standard normal target with the prior term switched off via a
        // huge pinned σ².
        let cfg = ChainConfig {
            iterations: 50_000,
            burn_in: 10_000,
            stride: 100,
            window: 100,
            fixed_sigma2: Some(1e12),
            ..ChainConfig::default()
        };
        let mut rng = RngHandle::new(2024);
        let target = |t: &[f64]| -0.5 * t.iter().map(|x| x * x).sum::<f64>();
        let out = run_two_block(&cfg, ChainInit::Draw { dim: 2 }, &target, &mut rng).unwrap();
        assert!(
            out.post_burn_accept_rate > 0.184 && out.post_burn_accept_rate < 0.284,
            "acceptance {}",
            out.post_burn_accept_rate
        );
        let n = out.samples.len() as f64;
        let mean: Vec<f64> = (0..2)
            .map(|d| out.samples.iter().map(|s| s[d]).sum::<f64>() / n)
            .collect();
        assert!(mean[0].abs() < 0.05 && mean[1].abs() < 0.05, "mean {mean:?}");
        let mut cov = [[0.0f64; 2]; 2];
        for s in &out.samples {
            for r in 0..2 {
                for c in 0..2 {
                    cov[r][c] += (s[r] - mean[r]) * (s[c] - mean[c]);
                }
            }
        }
        for r in 0..2 {
            for c in 0..2 {
                cov[r][c] /= n - 1.0;
                let expected = if r == c { 1.0 } else { 0.0 };
                assert!(
                    (cov[r][c] - expected).abs() < 0.1,
                    "cov[{r}][{c}] = {}",
                    cov[r][c]
                );
            }
        }
    }

    #[test]
    fn discrete_three_state_frequencies() {
        // Indicator log-likelihood over three unit intervals emulating a
        // discrete target (0.2, 0.3, 0.5); long-run region frequencies must
        // match within 1%.
        let weights = [0.2f64, 0.3, 0.5];
        let target = move |t: &[f64]| {
            let x = t[0];
            if !(0.0..3.0).contains(&x) {
                return f64::NEG_INFINITY;
            }
            weights[x as usize].ln()
        };
        let cfg = ChainConfig {
            iterations: 1_000_000,
            burn_in: 100_000,
            stride: 100,
            window: 100,
            fixed_sigma2: Some(1e12),
            ..ChainConfig::default()
        };
        let mut rng = RngHandle::new(55);
        let out = run_two_block(&cfg, ChainInit::Fixed(vec![1.5]), &target, &mut rng).unwrap();
        let mut counts = [0usize; 3];
        for s in &out.samples {
            counts[s[0] as usize] += 1;
        }
        let n = out.samples.len() as f64;
        for (i, w) in weights.iter().enumerate() {
            let freq = counts[i] as f64 / n;
            assert!(
                (freq - w).abs() < 0.01,
                "state {i}: freq {freq} vs weight {w}"
            );
        }
    }

    /// Numerical check of the marginal prior: integrating the Gaussian prior
    /// against the inverse-gamma hyperprior over σ² reproduces the closed
    /// form multivariate Student-t with 2a degrees of freedom and scale
    /// (b/a)·I.
    #[test]
    fn student_t_marginal_quadrature() {
        use crate::likelihood::ln_gamma;
        let (a, b) = (2.0f64, 2.0f64);
        let s = 2usize;
        let t_log_density = |theta: &[f64]| {
            let nu = 2.0 * a;
            let scale = b / a;
            let q: f64 = theta.iter().map(|x| x * x).sum::<f64>() / scale;
            ln_gamma((nu + s as f64) / 2.0)
                - ln_gamma(nu / 2.0)
                - (s as f64 / 2.0) * (nu * std::f64::consts::PI * scale).ln()
                - (nu + s as f64) / 2.0 * (1.0 + q / nu).ln()
        };
        // ∫ N(θ; 0, σ²I)·InvGamma(σ²; a, b) dσ² via composite Simpson on
        // log σ².
        let integrand = |theta: &[f64], sigma2: f64| -> f64 {
            let norm2: f64 = theta.iter().map(|x| x * x).sum();
            let log_n = -(s as f64) / 2.0 * (2.0 * std::f64::consts::PI * sigma2).ln()
                - norm2 / (2.0 * sigma2);
            let log_ig = a * b.ln() - ln_gamma(a) - (a + 1.0) * sigma2.ln() - b / sigma2;
            (log_n + log_ig).exp()
        };
        let quadrature = |theta: &[f64]| -> f64 {
            // substitute σ² = e^u, dσ² = e^u du, u ∈ [-40, 40]
            let (lo, hi) = (-40.0f64, 40.0f64);
            let n = 20_000usize; // even
            let h = (hi - lo) / n as f64;
            let mut sum = 0.0;
            for i in 0..=n {
                let u = lo + i as f64 * h;
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                sum += w * integrand(theta, u.exp()) * u.exp();
            }
            sum * h / 3.0
        };
        let mut rng = RngHandle::new(9);
        for _ in 0..20 {
            let theta = [rng.uniform_in(-3.0, 3.0), rng.uniform_in(-3.0, 3.0)];
            let numeric = quadrature(&theta);
            let exact = t_log_density(&theta).exp();
            let rel = (numeric - exact).abs() / exact;
            assert!(rel < 1e-5, "θ = {theta:?}: rel err {rel}");
        }
    }
}
