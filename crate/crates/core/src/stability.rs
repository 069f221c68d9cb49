//! Equilibrium, linearization, parameter assumptions and decay-rate constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, OptimalVelocityShape};
use crate::roots;

/// Tolerance in `h` for extremum searches.
const H_TOL: f64 = 1e-10;

/// Headway `h* = V^{-1}(v*)` of the unique equilibrium behind a leader at `v*`.
pub fn equilibrium(params: &ModelParams, v_star: f64) -> Result<(f64, f64)> {
    Ok((params.v_opt_inverse(v_star)?, v_star))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

/// Roots of `lambda^2 + trace lambda + det = 0`.
pub fn quadratic_roots(trace: f64, det: f64) -> [Complex; 2] {
    let disc = trace * trace - 4.0 * det;
    if disc >= 0.0 {
        let q = -0.5 * (trace + disc.sqrt());
        let other = if q != 0.0 { det / q } else { 0.0 };
        [Complex { re: q, im: 0.0 }, Complex { re: other, im: 0.0 }]
    } else {
        let im = 0.5 * (-disc).sqrt();
        let re = -0.5 * trace;
        [Complex { re, im }, Complex { re, im: -im }]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linearization {
    pub h_star: f64,
    pub v_star: f64,
    /// Jacobian of `(h, v)` dynamics at the equilibrium, row major.
    pub jacobian: [[f64; 2]; 2],
    pub eigenvalues: [Complex; 2],
    pub locally_stable: bool,
}

pub fn linearize(params: &ModelParams, v_star: f64) -> Result<Linearization> {
    let (h_star, _) = equilibrium(params, v_star)?;
    let slope = params.ov_prime(h_star);
    let damping = params.alpha + params.beta / (h_star * h_star);
    let eigenvalues = quadratic_roots(damping, params.alpha * slope);
    Ok(Linearization {
        h_star,
        v_star,
        jacobian: [[0.0, 1.0], [-params.alpha * slope, -damping]],
        locally_stable: eigenvalues.iter().all(|l| l.re < 0.0),
        eigenvalues,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BetaVerdict {
    Satisfied { max_f: f64, argmax: f64 },
    Violated { max_f: f64, argmax: f64 },
}

impl BetaVerdict {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, BetaVerdict::Satisfied { .. })
    }

    pub fn max_f(&self) -> f64 {
        match self {
            BetaVerdict::Satisfied { max_f, .. } | BetaVerdict::Violated { max_f, .. } => *max_f,
        }
    }

    pub fn argmax(&self) -> f64 {
        match self {
            BetaVerdict::Satisfied { argmax, .. } | BetaVerdict::Violated { argmax, .. } => *argmax,
        }
    }
}

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if lo > 0.0 && hi >= lo && hi.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(
            "interval lower end",
            lo,
            format!("0 < lo <= hi, hi = {hi}"),
        ))
    }
}

/// Critical point of `V'(h) h^2` for the tanh shape, the root of `c h tanh(c h - d_s) = 1` beyond `d_s / c`.
pub fn tanh_critical_point(c: f64, d_s: f64) -> f64 {
    let g = |h: f64| {
        let t = (c * h - d_s).tanh();
        (c * h * t - 1.0, c * t + c * c * h * (1.0 - t * t))
    };
    let lo = d_s / c;
    let mut hi = lo + 1.0 / c;
    while g(hi).0 <= 0.0 {
        hi = lo + 2.0 * (hi - lo);
    }
    roots::safeguarded_newton(g, lo, hi, H_TOL).expect("g changes sign on the bracket")
}

/// Maximum of `F(h) = V'(h) h^2` on `[lo, hi]` and its location.
pub fn max_f(params: &ModelParams, lo: f64, hi: f64) -> Result<(f64, f64)> {
    check_interval(lo, hi)?;
    let f = |h: f64| params.ov_prime(h) * h * h;
    Ok(match &params.shape {
        OptimalVelocityShape::Tanh { c, d_s } => {
            // F increases up to the critical point and decreases after it.
            let h = tanh_critical_point(*c, *d_s).clamp(lo, hi);
            (h, f(h))
        }
        OptimalVelocityShape::Tabulated(_) => roots::grid_max(f, lo, hi, H_TOL),
    })
}

pub fn check_assumption_beta(params: &ModelParams, lo: f64, hi: f64) -> Result<BetaVerdict> {
    let (argmax, max_f) = max_f(params, lo, hi)?;
    Ok(if params.beta >= max_f {
        BetaVerdict::Satisfied { max_f, argmax }
    } else {
        BetaVerdict::Violated { max_f, argmax }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaCheck {
    /// `sup max{V', beta / h^2}` over the interval.
    pub lower: f64,
    /// `inf (V' / 2 + beta / h^2)` over the interval.
    pub upper: f64,
    pub satisfied: bool,
}

impl AlphaCheck {
    pub fn window(&self) -> Option<(f64, f64)> {
        (self.lower < self.upper).then_some((self.lower, self.upper))
    }
}

/// Feasible range for `alpha` on `[lo, hi]` and whether `params.alpha` lies strictly inside it.
pub fn check_assumption_alpha(params: &ModelParams, lo: f64, hi: f64) -> Result<AlphaCheck> {
    check_interval(lo, hi)?;
    let beta = params.beta;
    let (_, lower) = roots::grid_max(|h| params.ov_prime(h).max(beta / (h * h)), lo, hi, H_TOL);
    let (_, upper) = roots::grid_min(|h| 0.5 * params.ov_prime(h) + beta / (h * h), lo, hi, H_TOL);
    Ok(AlphaCheck {
        lower,
        upper,
        satisfied: lower < params.alpha && params.alpha < upper,
    })
}

/// Exponential rate `min{alpha + beta / h0^2, beta / h*^2}` for trajectories confined to regions B or E.
pub fn decay_rate_be(params: &ModelParams, h0: f64, v_star: f64) -> Result<f64> {
    if !(h0 > 0.0) {
        return Err(Error::domain("h0", h0, "h0 > 0"));
    }
    let (h_star, _) = equilibrium(params, v_star)?;
    Ok((params.alpha + params.beta / (h0 * h0)).min(params.beta / (h_star * h_star)))
}

/// Rate `alpha - beta / h_min^2` of the energy decay, when positive.
pub fn decay_rate_f(params: &ModelParams, h_min: f64) -> Option<f64> {
    let r = params.alpha - params.beta / (h_min * h_min);
    (h_min > 0.0 && r > 0.0).then_some(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub v_star: f64,
    pub h_star: f64,
    pub jacobian: [[f64; 2]; 2],
    pub eigenvalues: [Complex; 2],
    pub locally_stable: bool,
    /// Headway interval on which the assumptions were checked.
    pub interval: (f64, f64),
    pub beta_verdict: BetaVerdict,
    pub alpha_interval: Option<(f64, f64)>,
    pub alpha_satisfied: bool,
    pub decay_rate_be: f64,
    pub decay_rate_f: Option<f64>,
}

/// Full report for a two-vehicle configuration with initial headway `h0`.
pub fn report(params: &ModelParams, v_star: f64, interval: (f64, f64), h0: f64) -> Result<StabilityReport> {
    let lin = linearize(params, v_star)?;
    let (lo, hi) = interval;
    let beta_verdict = check_assumption_beta(params, lo, hi)?;
    let alpha = check_assumption_alpha(params, lo, hi)?;
    Ok(StabilityReport {
        v_star,
        h_star: lin.h_star,
        jacobian: lin.jacobian,
        eigenvalues: lin.eigenvalues,
        locally_stable: lin.locally_stable,
        interval,
        beta_verdict,
        alpha_interval: alpha.window(),
        alpha_satisfied: alpha.satisfied,
        decay_rate_be: decay_rate_be(params, h0, v_star)?,
        decay_rate_f: decay_rate_f(params, lo),
    })
}
