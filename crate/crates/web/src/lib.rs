//! Browser bindings: each export returns a JSON string for the page to plot.

use bftl::harness::{execute, FigurePreset};
use bftl::lyapunov::{classify, DEFAULT_EPS};
use bftl::sim::{simulate, LeaderProfile, PlatoonState};
use bftl::stability::{check_assumption_beta, linearize, max_f};
use bftl::ModelParams;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Plotted series are thinned to about this many points.
const PLOT_POINTS: usize = 1500;

fn thin<T: Clone>(xs: &[T]) -> Vec<T> {
    let step = xs.len().div_ceil(PLOT_POINTS).max(1);
    let mut out: Vec<T> = xs.iter().step_by(step).cloned().collect();
    if !(xs.len() - 1).is_multiple_of(step) {
        out.push(xs[xs.len() - 1].clone());
    }
    out
}

#[derive(Serialize)]
struct PresetRun {
    preset: String,
    t: Vec<f64>,
    /// Outer index by follower.
    headways: Vec<Vec<f64>>,
    velocities: Vec<Vec<f64>>,
    h_min: Vec<f64>,
    h_max: Option<f64>,
    observed_min: Vec<f64>,
    certificate: String,
    beta_satisfied: Option<bool>,
}

pub fn preset_run(id: &str, alpha: f64, beta: f64, t_end: f64) -> Result<String, String> {
    let preset: FigurePreset = id.parse().map_err(|e: bftl::Error| e.to_string())?;
    let mut cfg = preset.config();
    cfg.params = cfg.params.with_alpha_beta(alpha, beta);
    cfg.t_end = t_end;
    let out = execute(&cfg).map_err(|e| e.to_string())?;
    let traj = &out.trajectory;
    let followers = 2..=traj.vehicles();
    let run = PresetRun {
        preset: preset.id().into(),
        t: thin(&traj.times().collect::<Vec<_>>()),
        headways: followers.clone().map(|i| thin(&traj.headway_series(i))).collect(),
        velocities: (1..=traj.vehicles()).map(|i| thin(&traj.velocity_series(i))).collect(),
        h_min: out.certificate.h_min.clone(),
        h_max: out.certificate.h_max,
        observed_min: followers.map(|i| traj.headway_range(i).0).collect(),
        certificate: out.certificate_report.verdict.to_string(),
        beta_satisfied: out.stability.as_ref().map(|s| s.beta_verdict.is_satisfied()),
    };
    serde_json::to_string(&run).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Phase {
    /// `V(h(t))` of the follower.
    ov: Vec<f64>,
    v: Vec<f64>,
    regions: Vec<String>,
    v_star: f64,
    h_star: f64,
    beta_satisfied: bool,
}

pub fn phase_run(alpha: f64, beta: f64, v_star: f64, h0: f64, v0: f64, t_end: f64) -> Result<String, String> {
    let p = ModelParams::reference().with_alpha_beta(alpha, beta);
    let init = PlatoonState::from_headways(v_star, &[h0], &[v0], p.length).map_err(|e| e.to_string())?;
    let traj =
        simulate(&init, &LeaderProfile::Constant { velocity: v_star }, &p, 1e-3, t_end).map_err(|e| e.to_string())?;
    let lin = linearize(&p, v_star).map_err(|e| e.to_string())?;
    let ov: Vec<f64> = traj.headway_series(2).iter().map(|&h| p.ov(h)).collect();
    let v = traj.velocity_series(2);
    let regions = ov
        .iter()
        .zip(&v)
        .map(|(&o, &v)| classify(v, o, v_star, DEFAULT_EPS).to_string())
        .collect::<Vec<_>>();
    let (lo, hi) = traj.headway_range(2);
    let phase = Phase {
        ov: thin(&ov),
        v: thin(&v),
        regions: thin(&regions),
        v_star,
        h_star: lin.h_star,
        beta_satisfied: check_assumption_beta(&p, lo, hi)
            .map_err(|e| e.to_string())?
            .is_satisfied(),
    };
    serde_json::to_string(&phase).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct BetaCurve {
    h: Vec<f64>,
    f: Vec<f64>,
    argmax: f64,
    max_f: f64,
}

pub fn beta_curve_json(c: f64, d_s: f64, v_max: f64, lo: f64, hi: f64) -> Result<String, String> {
    let mut p = ModelParams::tanh(1.0, 1.0, 4.5, v_max, v_max, c, d_s);
    p.v_min = 0.5 * (p.ov(0.0) + v_max);
    p.validate().map_err(|e| e.to_string())?;
    let (argmax, best) = max_f(&p, lo, hi).map_err(|e| e.to_string())?;
    let n = 400;
    let h: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    let f = h.iter().map(|&h| p.ov_prime(h) * h * h).collect();
    serde_json::to_string(&BetaCurve {
        h,
        f,
        argmax,
        max_f: best,
    })
    .map_err(|e| e.to_string())
}

/// Runs a figure preset with the given gains.
#[wasm_bindgen]
pub fn simulate_preset(id: &str, alpha: f64, beta: f64, t_end: f64) -> Result<String, JsValue> {
    preset_run(id, alpha, beta, t_end).map_err(|e| JsValue::from_str(&e))
}

/// Two-vehicle run behind a constant leader, as a curve in the `(V(h), v)` plane.
#[wasm_bindgen]
pub fn phase_portrait(alpha: f64, beta: f64, v_star: f64, h0: f64, v0: f64, t_end: f64) -> Result<String, JsValue> {
    phase_run(alpha, beta, v_star, h0, v0, t_end).map_err(|e| JsValue::from_str(&e))
}

/// `V'(h) h^2` on `[lo, hi]` with its maximiser.
#[wasm_bindgen]
pub fn beta_curve(c: f64, d_s: f64, v_max: f64, lo: f64, hi: f64) -> Result<String, JsValue> {
    beta_curve_json(c, d_s, v_max, lo, hi).map_err(|e| JsValue::from_str(&e))
}
