//! Closed-form uniform headway bounds and their verification on trajectories.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::sim::Trajectory;
use crate::Verdict;

/// Absolute slack on every trajectory-versus-certificate comparison.
pub const SLACK: f64 = 1e-6;

/// Which initial headway enters the recursive platoon bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecursionMode {
    /// Vehicle `i+1` uses its own initial headway `h_{i+1,0}`.
    #[default]
    TheoremConsistent,
    /// Vehicle `i+1` uses its predecessor's initial headway `h_{i,0}`.
    PaperLiteral,
}

impl RecursionMode {
    pub fn other(self) -> Self {
        match self {
            RecursionMode::TheoremConsistent => RecursionMode::PaperLiteral,
            RecursionMode::PaperLiteral => RecursionMode::TheoremConsistent,
        }
    }
}

/// Positive root of `alpha r^2 - a r - beta = 0`, in a form that does not cancel for `a < 0`.
pub fn root_term(alpha: f64, beta: f64, a: f64) -> f64 {
    let s = (a * a + 4.0 * alpha * beta).sqrt();
    if a >= 0.0 {
        (a + s) / (2.0 * alpha)
    } else {
        2.0 * beta / (s - a)
    }
}

fn a0(params: &ModelParams, h0: f64) -> f64 {
    -params.v_max + params.alpha * h0 - params.beta / h0
}

fn check_h0(h0: f64) -> Result<()> {
    if h0 > 0.0 && h0.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("initial headway", h0, "h0 > 0"))
    }
}

/// `V^{-1}(v_min)`, taken as infinite when `v_min` reaches the saturation level.
fn inverse_floor(params: &ModelParams, v_min: f64) -> Result<f64> {
    if v_min >= params.v_max {
        return Ok(f64::INFINITY);
    }
    params.v_opt_inverse(v_min)
}

/// Uniform-in-time lower bound on the headway of a single follower.
pub fn h_min_two_vehicle(params: &ModelParams, h0: f64, v_min: f64) -> Result<f64> {
    check_h0(h0)?;
    let cap = inverse_floor(params, v_min)?;
    let root = root_term(params.alpha, params.beta, a0(params, h0));
    Ok(root.min(h0).min(cap))
}

/// Uniform-in-time upper bound on the headway of a single follower whose leader never exceeds `v_bar_max`.
pub fn h_max_two_vehicle(params: &ModelParams, h0: f64, v_bar_max: f64) -> Result<f64> {
    check_h0(h0)?;
    if !(v_bar_max < params.v_max) {
        return Err(Error::domain(
            "v_bar_max",
            v_bar_max,
            format!("v_bar_max < v_max = {}", params.v_max),
        ));
    }
    let cap = params.v_opt_inverse(v_bar_max)?;
    let b0 = v_bar_max + params.alpha * h0 - params.beta / h0;
    Ok(root_term(params.alpha, params.beta, b0).max(h0).max(cap))
}

/// Per-follower lower bounds `h_{i,min}`, `i = 2..=N+1`.
pub fn h_min_sequence(
    params: &ModelParams,
    initial_headways: &[f64],
    v_min: f64,
    mode: RecursionMode,
) -> Result<Vec<f64>> {
    if initial_headways.is_empty() {
        return Err(Error::Config("no initial headways".into()));
    }
    for &h in initial_headways {
        check_h0(h)?;
    }
    let mut out = Vec::with_capacity(initial_headways.len());
    out.push(h_min_two_vehicle(params, initial_headways[0], v_min)?);
    for k in 1..initial_headways.len() {
        let h0 = match mode {
            RecursionMode::TheoremConsistent => initial_headways[k],
            RecursionMode::PaperLiteral => initial_headways[k - 1],
        };
        let root = root_term(params.alpha, params.beta, a0(params, h0));
        out.push(root.min(out[k - 1]));
    }
    Ok(out)
}

/// Bound valid for every follower of a fleet whose initial headways are all at least `h_lower0`.
pub fn h_min_uniform_fleet(params: &ModelParams, h_lower0: f64, v_min: f64) -> Result<f64> {
    check_h0(h_lower0)?;
    let cap = inverse_floor(params, v_min)?;
    Ok(root_term(params.alpha, params.beta, a0(params, h_lower0)).min(cap))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsCertificate {
    /// `h_{i,min}` per follower in the selected mode.
    pub h_min: Vec<f64>,
    /// The sequence in the other mode, present only when it differs.
    pub h_min_alt: Option<Vec<f64>>,
    pub h_max: Option<f64>,
    /// `V(h_{i,min})` per follower.
    pub velocity_floor: Vec<f64>,
    /// `alpha v_max + beta v_max / h_{i,min}^2` per follower.
    pub acc_bound: Vec<f64>,
    pub mode: RecursionMode,
    pub params_digest: String,
    pub initial_headways: Vec<f64>,
}

/// SHA-256 of the canonical JSON encoding of the parameters and initial headways.
pub fn params_digest(params: &ModelParams, initial_headways: &[f64]) -> String {
    let canonical = serde_json::to_string(&(params, initial_headways)).expect("plain data always serializes");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Builds the certificate for a platoon. `v_bar_max` adds the upper bound for a single follower.
pub fn certify(
    params: &ModelParams,
    initial_headways: &[f64],
    mode: RecursionMode,
    v_bar_max: Option<f64>,
) -> Result<BoundsCertificate> {
    params.validate()?;
    let h_min = h_min_sequence(params, initial_headways, params.v_min, mode)?;
    let alt = h_min_sequence(params, initial_headways, params.v_min, mode.other())?;
    let h_max = match (v_bar_max, initial_headways.len()) {
        (Some(vb), 1) => Some(h_max_two_vehicle(params, initial_headways[0], vb)?),
        _ => None,
    };
    let velocity_floor = h_min.iter().map(|&h| params.ov(h)).collect();
    let acc_bound = h_min
        .iter()
        .map(|&h| params.alpha * params.v_max + params.beta * params.v_max / (h * h))
        .collect();
    Ok(BoundsCertificate {
        h_min_alt: (alt != h_min).then_some(alt),
        h_min,
        h_max,
        velocity_floor,
        acc_bound,
        mode,
        params_digest: params_digest(params, initial_headways),
        initial_headways: initial_headways.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VehicleObservation {
    pub vehicle: usize,
    pub min_headway: f64,
    pub t_min_headway: f64,
    pub max_headway: f64,
    pub max_abs_acc: f64,
    pub v_lo: f64,
    pub v_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub vehicle: usize,
    pub t: f64,
    pub quantity: &'static str,
    pub observed: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub verdict: Verdict,
    pub vehicles: Vec<VehicleObservation>,
    pub violations: Vec<Violation>,
}

/// Compares observed extrema of `traj` with `cert`; fails on size or input-digest mismatch.
pub fn verify_certificate(traj: &Trajectory, cert: &BoundsCertificate) -> Result<CertificateReport> {
    let n = traj.followers();
    if cert.h_min.len() != n || cert.velocity_floor.len() != n || cert.acc_bound.len() != n {
        return Err(Error::Mismatch(format!(
            "certificate covers {} followers, trajectory has {n}",
            cert.h_min.len()
        )));
    }
    let first = traj
        .headways
        .first()
        .ok_or_else(|| Error::Mismatch("empty trajectory".into()))?;
    if params_digest(&traj.params, first) != cert.params_digest {
        return Err(Error::Mismatch(
            "certificate was issued for different parameters or initial headways".into(),
        ));
    }

    let v_max = traj.params.v_max;
    let mut vehicles = Vec::with_capacity(n);
    let mut violations = Vec::new();
    for i in 0..n {
        let vehicle = i + 2;
        let mut obs = VehicleObservation {
            vehicle,
            min_headway: f64::INFINITY,
            t_min_headway: 0.0,
            max_headway: f64::NEG_INFINITY,
            max_abs_acc: 0.0,
            v_lo: f64::INFINITY,
            v_hi: f64::NEG_INFINITY,
        };
        let mut worst: [Option<Violation>; 5] = Default::default();
        let floor_applies = traj.samples[0].v[i + 1] >= cert.velocity_floor[i];
        let mut note = |slot: usize, quantity: &'static str, t: f64, observed: f64, bound: f64, excess: f64| {
            let keep = match &worst[slot] {
                None => true,
                Some(w) => excess > (w.observed - w.bound).abs(),
            };
            if keep {
                worst[slot] = Some(Violation {
                    vehicle,
                    t,
                    quantity,
                    observed,
                    bound,
                });
            }
        };
        for (k, s) in traj.samples.iter().enumerate() {
            let h = traj.headways[k][i];
            let v = s.v[i + 1];
            let a = traj.accelerations[k][i + 1].abs();
            if h < obs.min_headway {
                obs.min_headway = h;
                obs.t_min_headway = s.t;
            }
            obs.max_headway = obs.max_headway.max(h);
            obs.max_abs_acc = obs.max_abs_acc.max(a);
            obs.v_lo = obs.v_lo.min(v);
            obs.v_hi = obs.v_hi.max(v);

            if h < cert.h_min[i] - SLACK {
                note(0, "headway", s.t, h, cert.h_min[i], cert.h_min[i] - h);
            }
            if let Some(hm) = cert.h_max.filter(|_| n == 1) {
                if h > hm + SLACK {
                    note(1, "headway_max", s.t, h, hm, h - hm);
                }
            }
            if a > cert.acc_bound[i] + SLACK {
                note(2, "acceleration", s.t, a, cert.acc_bound[i], a - cert.acc_bound[i]);
            }
            if v > v_max + SLACK || v < -SLACK {
                note(3, "velocity", s.t, v, v_max, (v - v_max).max(-v));
            }
            if floor_applies && v < cert.velocity_floor[i] - SLACK {
                note(
                    4,
                    "velocity_floor",
                    s.t,
                    v,
                    cert.velocity_floor[i],
                    cert.velocity_floor[i] - v,
                );
            }
        }
        violations.extend(worst.into_iter().flatten());
        vehicles.push(obs);
    }
    let verdict = if violations.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(CertificateReport {
        verdict,
        vehicles,
        violations,
    })
}
