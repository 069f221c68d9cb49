use std::fmt;

use serde::{Serialize, Serializer};

use super::{require_constant_leader, require_two_vehicles};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::sim::Trajectory;
use crate::stability::check_assumption_beta;
use crate::Verdict;

/// Default labelling margin in m/s.
pub const DEFAULT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    /// `v = v*`
    VelocityAtTarget,
    /// `V(h) = v*`
    OptimalAtTarget,
    /// `v = V(h)`
    VelocityAtOptimal,
}

/// Ordering of `(v, V(h), v*)` in the phase plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// `v* > v > V`
    A,
    /// `v* > V > v`
    B,
    /// `V > v* > v`
    C,
    /// `V > v > v*`
    D,
    /// `v > V > v*`
    E,
    /// `v > v* > V`
    F,
    Boundary(BoundaryKind),
    Equilibrium,
}

impl Region {
    pub fn is_open(self) -> bool {
        !matches!(self, Region::Boundary(_) | Region::Equilibrium)
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Region::A => "A",
            Region::B => "B",
            Region::C => "C",
            Region::D => "D",
            Region::E => "E",
            Region::F => "F",
            Region::Boundary(BoundaryKind::VelocityAtTarget) => "Boundary(v=v*)",
            Region::Boundary(BoundaryKind::OptimalAtTarget) => "Boundary(V=v*)",
            Region::Boundary(BoundaryKind::VelocityAtOptimal) => "Boundary(v=V)",
            Region::Equilibrium => "Equilibrium",
        };
        f.write_str(s)
    }
}

impl Serialize for Region {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn near(d: f64, eps: f64) -> bool {
    d == 0.0 || d.abs() < eps
}

/// Label of the phase point `(v, V(h))` relative to `v*`.
pub fn classify(v: f64, ov: f64, v_star: f64, eps: f64) -> Region {
    let (dv, dov, dvo) = (v - v_star, ov - v_star, v - ov);
    match (near(dv, eps), near(dov, eps)) {
        (true, true) => return Region::Equilibrium,
        (true, false) => return Region::Boundary(BoundaryKind::VelocityAtTarget),
        (false, true) => return Region::Boundary(BoundaryKind::OptimalAtTarget),
        _ => {}
    }
    if near(dvo, eps) {
        return Region::Boundary(BoundaryKind::VelocityAtOptimal);
    }
    match (dv < 0.0, dov < 0.0, dvo > 0.0) {
        (true, true, true) => Region::A,
        (true, true, false) => Region::B,
        (true, false, _) => Region::C,
        (false, false, false) => Region::D,
        (false, false, true) => Region::E,
        (false, true, _) => Region::F,
    }
}

/// Labels of the first follower at every stored sample.
pub fn region_labels(traj: &Trajectory, v_star: f64, eps: f64) -> Vec<Region> {
    let p = &traj.params;
    traj.samples
        .iter()
        .zip(&traj.headways)
        .map(|(s, h)| classify(s.v[1], p.ov(h[0]), v_star, eps))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transition {
    pub t: f64,
    pub from: Region,
    pub to: Region,
}

/// Changes of label with boundary samples merged into the region that follows them.
pub(crate) fn transitions(times: impl Iterator<Item = f64>, labels: &[Region]) -> Vec<Transition> {
    let mut out = Vec::new();
    let mut current: Option<Region> = None;
    for (t, &label) in times.zip(labels) {
        if matches!(label, Region::Boundary(_)) {
            continue;
        }
        match current {
            None => current = Some(label),
            Some(c) if c != label => {
                out.push(Transition { t, from: c, to: label });
                current = Some(label);
            }
            _ => {}
        }
    }
    out
}

/// Region changes of the first follower, for a pair or a platoon.
pub fn transition_log(traj: &Trajectory, v_star: f64, eps: f64) -> Vec<Transition> {
    transitions(traj.times(), &region_labels(traj, v_star, eps))
}

fn allowed(from: Region, to: Region) -> bool {
    use Region::*;
    matches!(
        (from, to),
        (B, A) | (B, C) | (C, D) | (E, D) | (E, F) | (F, A) | (A, Equilibrium) | (D, Equilibrium)
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub verdict: Verdict,
    pub initial: Region,
    pub transitions: Vec<Transition>,
    pub forbidden: Vec<Transition>,
}

/// Logs region changes of a two-vehicle run and checks them against the proven transition graph.
/// The verdict is INCONCLUSIVE unless the beta assumption holds on the observed headway range.
pub fn region_transition_audit(traj: &Trajectory, v_star: f64, eps: f64) -> Result<AuditReport> {
    require_two_vehicles(traj)?;
    require_constant_leader(traj, v_star)?;
    let labels = region_labels(traj, v_star, eps);
    let log = transitions(traj.times(), &labels);
    let forbidden: Vec<Transition> = log.iter().copied().filter(|tr| !allowed(tr.from, tr.to)).collect();
    let (lo, hi) = traj.headway_range(2);
    let verdict = if !check_assumption_beta(&traj.params, lo, hi)?.is_satisfied() {
        Verdict::Inconclusive
    } else if forbidden.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(AuditReport {
        verdict,
        initial: labels[0],
        transitions: log,
        forbidden,
    })
}

/// Time by which a run starting in region C or F must have left it.
pub fn escape_time_bound(params: &ModelParams, h0: f64, v0: f64, v_star: f64, region: Region) -> Result<f64> {
    if !matches!(region, Region::C | Region::F) {
        return Err(Error::Config(format!(
            "escape bound exists for regions C and F only, not {region}"
        )));
    }
    let ov = params.v_opt(h0)?;
    let actual = classify(v0, ov, v_star, 0.0);
    if actual != region {
        return Err(Error::domain(
            "initial velocity",
            v0,
            format!("a start in region {region}, found {actual}"),
        ));
    }
    Ok((v_star - v0) / (params.alpha * (ov - v_star)))
}

/// Signed distance to the edge of `region`, positive inside it.
fn margin(region: Region, v: f64, ov: f64, v_star: f64) -> f64 {
    match region {
        Region::A => (v_star - v).min(v - ov),
        Region::B => (v_star - ov).min(ov - v),
        Region::C => (ov - v_star).min(v_star - v),
        Region::D => (ov - v).min(v - v_star),
        Region::E => (v - ov).min(ov - v_star),
        Region::F => (v - v_star).min(v_star - ov),
        _ => 0.0,
    }
}

/// First time the first follower leaves `region`, linearly interpolated between samples.
/// `None` if the run starts outside the region or never leaves it.
pub fn region_exit_time(traj: &Trajectory, v_star: f64, region: Region) -> Option<f64> {
    let p = &traj.params;
    let m: Vec<f64> = traj
        .samples
        .iter()
        .zip(&traj.headways)
        .map(|(s, h)| margin(region, s.v[1], p.ov(h[0]), v_star))
        .collect();
    if !(m.first()? > &0.0) {
        return None;
    }
    let k = m.iter().position(|&x| x <= 0.0)?;
    let (t0, t1) = (traj.samples[k - 1].t, traj.samples[k].t);
    Some(t0 + (t1 - t0) * m[k - 1] / (m[k - 1] - m[k]))
}
