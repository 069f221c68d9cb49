use serde::Serialize;

use super::region::{region_labels, Region, DEFAULT_EPS};
use super::{require_constant_leader, require_two_vehicles};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::sim::Trajectory;

fn e_term(ov: f64, v_star: f64) -> f64 {
    0.5 * (ov - v_star).powi(2)
}

fn f_term(ov: f64, v: f64, v_star: f64) -> f64 {
    0.5 * (ov - v_star).powi(2) + 0.5 * (v - v_star).powi(2) + 0.5 * (ov - v).powi(2)
}

/// `E = (V(h) - v*)^2 / 2` for follower `i` at every sample.
fn follower_e(traj: &Trajectory, i: usize, v_star: f64) -> Vec<f64> {
    traj.headways
        .iter()
        .map(|h| e_term(traj.params.ov(h[i - 2]), v_star))
        .collect()
}

/// Three-term energy of follower `i` at every sample.
fn follower_f(traj: &Trajectory, i: usize, v_star: f64) -> Vec<f64> {
    traj.samples
        .iter()
        .zip(&traj.headways)
        .map(|(s, h)| f_term(traj.params.ov(h[i - 2]), s.v[i - 1], v_star))
        .collect()
}

pub fn energy_e(traj: &Trajectory, v_star: f64) -> Result<Vec<f64>> {
    require_two_vehicles(traj)?;
    require_constant_leader(traj, v_star)?;
    Ok(follower_e(traj, 2, v_star))
}

pub fn energy_f(traj: &Trajectory, v_star: f64) -> Result<Vec<f64>> {
    require_two_vehicles(traj)?;
    require_constant_leader(traj, v_star)?;
    Ok(follower_f(traj, 2, v_star))
}

/// `F_i` for every follower `i = 2..=N+1`, outer index by follower.
pub fn energy_f_chain(traj: &Trajectory, v_star: f64) -> Result<Vec<Vec<f64>>> {
    require_constant_leader(traj, v_star)?;
    Ok((2..=traj.vehicles()).map(|i| follower_f(traj, i, v_star)).collect())
}

/// Energy columns for output: `E` and `F` of the first follower, plus `F_i` per follower for platoons.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySeries {
    pub t: Vec<f64>,
    pub e: Vec<f64>,
    pub f: Vec<f64>,
    /// Empty for a single follower.
    pub chain: Vec<Vec<f64>>,
}

pub fn energy_series(traj: &Trajectory, v_star: f64) -> Result<EnergySeries> {
    require_constant_leader(traj, v_star)?;
    let chain = if traj.followers() >= 2 {
        energy_f_chain(traj, v_star)?
    } else {
        Vec::new()
    };
    Ok(EnergySeries {
        t: traj.times().collect(),
        e: follower_e(traj, 2, v_star),
        f: follower_f(traj, 2, v_star),
        chain,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GronwallResidual {
    /// Largest `dF_i/dt + p_i F_i - q_i` over interior samples.
    pub max_residual: f64,
    pub t_at_max: f64,
    pub samples: usize,
}

/// Checks the differential inequality `dF_i/dt + p_i F_i <= q_i` with
/// `p_i = alpha - beta / h_i^2` and the source `q_i` driven by the predecessor's
/// velocity error. `dF_i/dt` is a centred difference; endpoints are skipped.
pub fn gronwall_residual(traj: &Trajectory, i: usize, v_star: f64) -> Result<GronwallResidual> {
    require_constant_leader(traj, v_star)?;
    if i < 3 || i > traj.vehicles() {
        return Err(Error::Config(format!(
            "the residual needs a follower with a perturbed predecessor, i in 3..={}, got {i}",
            traj.vehicles()
        )));
    }
    let p: &ModelParams = &traj.params;
    let f = follower_f(traj, i, v_star);
    let n = f.len();
    let mut best = GronwallResidual {
        max_residual: f64::NEG_INFINITY,
        t_at_max: 0.0,
        samples: n.saturating_sub(2),
    };
    for k in 1..n.saturating_sub(1) {
        let s = &traj.samples[k];
        let dt = traj.samples[k + 1].t - traj.samples[k - 1].t;
        let dfdt = (f[k + 1] - f[k - 1]) / dt;
        let h = traj.headways[k][i - 2];
        let (v, ov, slope) = (s.v[i - 1], p.ov(h), p.ov_prime(h));
        let g = p.beta / (h * h);
        let sigma = s.v[i - 2] - v_star;
        let q = ((2.0 * ov - v_star - v) * slope + g * (2.0 * v - v_star - ov)) * sigma;
        let r = dfdt + (p.alpha - g) * f[k] - q;
        if r > best.max_residual {
            best.max_residual = r;
            best.t_at_max = s.t;
        }
    }
    if best.samples == 0 {
        best.max_residual = 0.0;
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    /// First time after which every label lies in `A`, `D` or the equilibrium.
    pub entry_time: Option<f64>,
    /// Whether `E` is nonincreasing from the entry time on.
    pub tail_monotone: bool,
    /// Samples before entry at which `E` increased; recorded, not failed.
    pub early_increases: usize,
}

/// Monotonicity of `E` on the tail of a two-vehicle run that settles in `A` or `D`.
pub fn tail_monotone_after_entry(traj: &Trajectory, v_star: f64) -> Result<TailReport> {
    let e = energy_e(traj, v_star)?;
    let labels = region_labels(traj, v_star, DEFAULT_EPS);
    let settled = |r: &Region| matches!(r, Region::A | Region::D | Region::Equilibrium | Region::Boundary(_));
    let bad = labels.iter().rposition(|r| !settled(r));
    let entry = match bad {
        None => Some(0),
        Some(k) if k + 1 < labels.len() => Some(k + 1),
        Some(_) => None,
    };
    let increases = |from: usize, to: usize| {
        (from..to)
            .filter(|&k| k + 1 < e.len() && e[k + 1] > e[k] * (1.0 + 1e-9) + 1e-24)
            .count()
    };
    Ok(match entry {
        Some(k) => TailReport {
            entry_time: Some(traj.samples[k].t),
            tail_monotone: increases(k, e.len()) == 0,
            early_increases: increases(0, k),
        },
        None => TailReport {
            entry_time: None,
            tail_monotone: false,
            early_increases: increases(0, e.len()),
        },
    })
}
