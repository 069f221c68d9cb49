use serde::Serialize;

use super::energy::energy_f;
use super::region::{region_labels, Region, DEFAULT_EPS};
use super::{require_constant_leader, require_two_vehicles};
use crate::error::Result;
use crate::sim::Trajectory;
use crate::stability::{check_assumption_alpha, check_assumption_beta, equilibrium};
use crate::Verdict;

/// Relative slack for the exact two-sided bound.
const BE_REL: f64 = 1e-6;
/// Absolute floor below which both sides of the two-sided bound are roundoff.
const BE_ABS: f64 = 1e-12;
/// Relative slack for the energy and decay envelopes.
const DECAY_REL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub verdict: Verdict,
    /// Region the bound was checked in, `B` or `E`.
    pub region: Option<Region>,
    /// Sample time at which the envelope clock starts.
    pub t_entry: Option<f64>,
    /// Time of the first violated sample.
    pub t_fail: Option<f64>,
    pub rate_fast: f64,
    pub rate_slow: f64,
}

/// Two-sided exponential bound on `|v - v*|` while the first follower stays in region B or E.
///
/// The clock starts at the first sample labelled `B` or `E`, with the headway there as `h0`.
/// Leaving for any other open region voids the hypothesis and gives INCONCLUSIVE.
pub fn envelope_check_be(traj: &Trajectory, v_star: f64) -> Result<EnvelopeReport> {
    require_two_vehicles(traj)?;
    require_constant_leader(traj, v_star)?;
    let p = &traj.params;
    let (h_star, _) = equilibrium(p, v_star)?;
    let labels = region_labels(traj, v_star, DEFAULT_EPS);
    let mut report = EnvelopeReport {
        verdict: Verdict::Inconclusive,
        region: None,
        t_entry: None,
        t_fail: None,
        rate_fast: 0.0,
        rate_slow: 0.0,
    };

    let Some(k0) = labels.iter().position(|r| matches!(r, Region::B | Region::E)) else {
        if labels.iter().all(|r| *r == Region::Equilibrium) {
            report.verdict = Verdict::Pass;
        }
        return Ok(report);
    };
    if labels[..k0].iter().any(|r| r.is_open()) {
        return Ok(report);
    }
    let region = labels[k0];
    let t0 = traj.samples[k0].t;
    let h0 = traj.headways[k0][0];
    let g0 = p.beta / (h0 * h0);
    let g_star = p.beta / (h_star * h_star);
    // In B the headway grows from h0 towards h*, in E it shrinks, so the FtL gain is bracketed accordingly.
    let (fast, slow) = match region {
        Region::B => (p.alpha + g0, g_star),
        _ => (p.alpha + g_star, g0),
    };
    report.region = Some(region);
    report.t_entry = Some(t0);
    report.rate_fast = fast;
    report.rate_slow = slow;

    let w = |k: usize| {
        let v = traj.samples[k].v[1];
        if region == Region::B {
            v_star - v
        } else {
            v - v_star
        }
    };
    let w0 = w(k0);
    let mut failed = None;
    for (k, label) in labels.iter().enumerate().skip(k0) {
        if label.is_open() && *label != region {
            return Ok(report);
        }
        let tau = traj.samples[k].t - t0;
        let (lower, upper) = (w0 * (-fast * tau).exp(), w0 * (-slow * tau).exp());
        let wk = w(k);
        let ok = lower <= wk + BE_REL * wk.abs() + BE_ABS && wk <= upper + BE_REL * upper.abs() + BE_ABS;
        if !ok && failed.is_none() {
            failed = Some(traj.samples[k].t);
        }
    }
    report.t_fail = failed;
    report.verdict = if failed.is_some() { Verdict::Fail } else { Verdict::Pass };
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub verdict: Verdict,
    pub rate: Option<f64>,
    /// Largest ratio of `F(t)` to `F(0) exp(-rate t)`.
    pub max_energy_ratio: f64,
    /// Largest ratio of `|v - v*|` to its envelope.
    pub max_velocity_ratio: f64,
    /// Largest ratio of `|h - h*|` to its envelope.
    pub max_headway_ratio: f64,
    pub reason: Option<String>,
}

/// Energy, velocity and headway envelopes of a two-vehicle run with rate `alpha - beta / h_min^2`.
///
/// The assumptions on `alpha` and `beta` are checked on `[h_min, observed max]`;
/// when they fail, or the run dips below `h_min`, the verdict is INCONCLUSIVE.
pub fn decay_envelope_check(traj: &Trajectory, v_star: f64, h_min: f64) -> Result<DecayReport> {
    require_two_vehicles(traj)?;
    require_constant_leader(traj, v_star)?;
    let p = &traj.params;
    let (lo, hi) = traj.headway_range(2);
    let mut report = DecayReport {
        verdict: Verdict::Inconclusive,
        rate: None,
        max_energy_ratio: 0.0,
        max_velocity_ratio: 0.0,
        max_headway_ratio: 0.0,
        reason: None,
    };
    if lo < h_min {
        report.reason = Some(format!("observed headway {lo} falls below h_min = {h_min}"));
        return Ok(report);
    }
    let hi = hi.max(h_min);
    if !check_assumption_beta(p, h_min, hi)?.is_satisfied() {
        report.reason = Some(format!("beta assumption fails on [{h_min}, {hi}]"));
        return Ok(report);
    }
    let alpha = check_assumption_alpha(p, h_min, hi)?;
    if !alpha.satisfied {
        report.reason = Some(format!(
            "alpha = {} outside the feasible window ({}, {})",
            p.alpha, alpha.lower, alpha.upper
        ));
        return Ok(report);
    }
    let rate = p.alpha - p.beta / (h_min * h_min);
    report.rate = Some(rate);

    let (h_star, _) = equilibrium(p, v_star)?;
    let f = energy_f(traj, v_star)?;
    let (h0, v0) = (traj.headways[0][0], traj.samples[0].v[1]);
    let ov0 = p.ov(h0);
    let c0 = (ov0 - v_star).abs() + (v0 - v_star).abs() + (ov0 - v0).abs();
    let ratio = |obs: f64, env: f64| {
        if obs == 0.0 {
            0.0
        } else {
            obs / env
        }
    };
    for (k, s) in traj.samples.iter().enumerate() {
        let t = s.t;
        let decay = (-0.5 * rate * t).exp();
        report.max_energy_ratio = report.max_energy_ratio.max(ratio(f[k], f[0] * decay * decay));
        report.max_velocity_ratio = report
            .max_velocity_ratio
            .max(ratio((s.v[1] - v_star).abs(), c0 * decay));
        let h = traj.headways[k][0];
        report.max_headway_ratio = report
            .max_headway_ratio
            .max(ratio((h - h_star).abs(), 2.0 * c0 / rate * decay));
    }
    let limit = 1.0 + DECAY_REL;
    report.verdict = if report.max_energy_ratio <= limit
        && report.max_velocity_ratio <= limit
        && report.max_headway_ratio <= limit
    {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(report)
}
