//! Tempered pseudo-likelihood families, exposed uniformly in log space.
//!
//! Each family turns a success count (or score ratio) into a log
//! pseudo-likelihood that is monotone nondecreasing in its argument, so the
//! sampler only ever climbs toward better objective values. The sharpness
//! exponent β scales the log-likelihood linearly. All computation goes
//! through log-gamma because the binomial coefficient overflows for trial
//! counts beyond ~170.

use crate::error::{Error, Result};

/// Natural log of the gamma function via the Lanczos approximation
/// (g = 7, n = 9 coefficients), accurate to ~1e-13 relative over the
/// positive reals used here.
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x < 0.5 {
        // reflection: Γ(x)Γ(1−x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return pi.ln() - (pi * x).sin().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Pseudo-likelihood family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Binomial,
    Beta,
    Exponential,
}

/// A tempered pseudo-likelihood: family, sharpness β > 0 and the trial count
/// (T drones or K games).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodSpec {
    pub family: Family,
    pub beta_sharp: f64,
    pub trials: u32,
}

impl LikelihoodSpec {
    pub fn new(family: Family, beta_sharp: f64, trials: u32) -> Result<Self> {
        if !(beta_sharp > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sharpness must be positive, got {beta_sharp}"
            )));
        }
        if trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        Ok(Self {
            family,
            beta_sharp,
            trials,
        })
    }
}

/// Argument to [`log_pseudo_likelihood`]: an integer success count for the
/// count-based families, or a raw score ratio (e.g. an ROI) for the
/// exponential family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Score {
    Successes(u32),
    Ratio(f64),
}

/// log f(x) for the raw binomial form C(T,x)(x/T)^x(1−x/T)^{T−x}, with the
/// 0⁰ = 1 convention at the endpoints. `x` may be fractional (used at the
/// junction point T/2 for odd T).
fn binomial_log_f(x: f64, t: f64) -> f64 {
    let ln_binom = ln_gamma(t + 1.0) - ln_gamma(x + 1.0) - ln_gamma(t - x + 1.0);
    let a = if x == 0.0 { 0.0 } else { x * (x / t).ln() };
    let b = if x == t {
        0.0
    } else {
        (t - x) * (1.0 - x / t).ln()
    };
    ln_binom + a + b
}

/// log f(x) for the rescaled (beta) form Γ(2)/(Γ(x+1)Γ(2−x))·x^x(1−x)^{1−x}
/// on x ∈ [0, 1].
fn beta_log_f(x: f64) -> f64 {
    let ln_ratio = -ln_gamma(x + 1.0) - ln_gamma(2.0 - x);
    let a = if x == 0.0 { 0.0 } else { x * x.ln() };
    let b = if x == 1.0 { 0.0 } else { (1.0 - x) * (1.0 - x).ln() };
    ln_ratio + a + b
}

/// β·log h(k) for the binomial-based family. `h` equals the raw binomial
/// form above the midpoint T/2 and the continuity-preserving linear ramp
/// a·x with a = (2/T)·f(T/2) below it; k = 0 maps to −∞.
pub fn binomial_log_h(k: u32, spec: &LikelihoodSpec) -> Result<f64> {
    let t = spec.trials;
    if k > t {
        return Err(Error::Domain(format!("k = {k} outside 0..={t}")));
    }
    if k == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let (kf, tf) = (k as f64, t as f64);
    let log_h = if kf < tf / 2.0 {
        // log a + log k with a = (2/T) f(T/2)
        (2.0 / tf).ln() + binomial_log_f(tf / 2.0, tf) + kf.ln()
    } else {
        binomial_log_f(kf, tf)
    };
    Ok(spec.beta_sharp * log_h)
}

/// β·log h(k/T) for the beta-based family; k = 0 maps to −∞.
pub fn beta_log_h(k: u32, spec: &LikelihoodSpec) -> Result<f64> {
    let t = spec.trials;
    if k > t {
        return Err(Error::Domain(format!("k = {k} outside 0..={t}")));
    }
    if k == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let x = k as f64 / t as f64;
    let log_h = if x < 0.5 {
        2.0f64.ln() + beta_log_f(0.5) + x.ln()
    } else {
        beta_log_f(x)
    };
    Ok(spec.beta_sharp * log_h)
}

/// β·ratio: the log of exp(β·ratio). For count objectives the ratio is
/// k/T ∈ [0, 1]; for blackjack the same formula applies to an ROI, which may
/// be negative.
pub fn exp_log_h(ratio: f64, spec: &LikelihoodSpec) -> f64 {
    spec.beta_sharp * ratio
}

/// Dispatch on the family. Count-based families require a success count;
/// a raw [`Score::Ratio`] is accepted only by the exponential family.
pub fn log_pseudo_likelihood(spec: &LikelihoodSpec, score: Score) -> Result<f64> {
    match (spec.family, score) {
        (Family::Binomial, Score::Successes(k)) => binomial_log_h(k, spec),
        (Family::Beta, Score::Successes(k)) => beta_log_h(k, spec),
        (Family::Exponential, Score::Successes(k)) => {
            if k > spec.trials {
                return Err(Error::Domain(format!(
                    "k = {k} outside 0..={}",
                    spec.trials
                )));
            }
            Ok(exp_log_h(k as f64 / spec.trials as f64, spec))
        }
        (Family::Exponential, Score::Ratio(r)) => Ok(exp_log_h(r, spec)),
        (family, Score::Ratio(r)) => Err(Error::Domain(format!(
            "family {family:?} takes a success count, not the raw ratio {r}"
        ))),
    }
}
