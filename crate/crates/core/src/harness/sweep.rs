use std::io::{self, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{execute, ScenarioConfig};
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::lyapunov::decay_envelope_check;
use crate::model::OptimalVelocityShape;
use crate::stability::{check_assumption_alpha, check_assumption_beta};
use crate::Verdict;

/// Values per swept parameter; absent axes keep the template value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
    #[serde(default)]
    pub beta: Option<Vec<f64>>,
    #[serde(default)]
    pub c: Option<Vec<f64>>,
    #[serde(default)]
    pub d_s: Option<Vec<f64>>,
    #[serde(default)]
    pub v_max: Option<Vec<f64>>,
    #[serde(default)]
    pub v_min: Option<Vec<f64>>,
    #[serde(default)]
    pub length: Option<Vec<f64>>,
    /// When set, two-vehicle constant-leader rows also run the decay envelope check with this `h_min`.
    #[serde(default)]
    pub decay_h_min: Option<f64>,
}

pub const AXES: [&str; 7] = ["alpha", "beta", "c", "d_s", "v_max", "v_min", "length"];

impl SweepGrid {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn axes(&self) -> [Option<&Vec<f64>>; 7] {
        [
            self.alpha.as_ref(),
            self.beta.as_ref(),
            self.c.as_ref(),
            self.d_s.as_ref(),
            self.v_max.as_ref(),
            self.v_min.as_ref(),
            self.length.as_ref(),
        ]
    }

    /// Grid points in row-major order over `AXES`, last axis fastest.
    pub fn points(&self, template: &ScenarioConfig) -> Result<Vec<[f64; 7]>> {
        let base = template_values(template);
        let axes = self.axes();
        if axes.iter().flatten().any(|v| v.is_empty()) {
            return Err(Error::Config("sweep axes must not be empty".into()));
        }
        let mut points = vec![base];
        for (a, values) in axes.iter().enumerate() {
            let Some(values) = values else { continue };
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&x| {
                        let mut q = p;
                        q[a] = x;
                        q
                    })
                })
                .collect();
        }
        Ok(points)
    }
}

fn template_values(cfg: &ScenarioConfig) -> [f64; 7] {
    let p = &cfg.params;
    let (c, d_s) = match p.shape {
        OptimalVelocityShape::Tanh { c, d_s } => (c, d_s),
        OptimalVelocityShape::Tabulated(_) => (f64::NAN, f64::NAN),
    };
    [p.alpha, p.beta, c, d_s, p.v_max, p.v_min, p.length]
}

fn apply(template: &ScenarioConfig, point: &[f64; 7]) -> Result<ScenarioConfig> {
    let mut cfg = template.clone();
    let p = &mut cfg.params;
    p.alpha = point[0];
    p.beta = point[1];
    p.v_max = point[4];
    p.v_min = point[5];
    p.length = point[6];
    match &mut p.shape {
        OptimalVelocityShape::Tanh { c, d_s } => {
            *c = point[2];
            *d_s = point[3];
        }
        OptimalVelocityShape::Tabulated(_) => {
            if !(point[2].is_nan() && point[3].is_nan()) {
                return Err(Error::Config("c and d_s apply to the tanh shape only".into()));
            }
        }
    }
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub point: [f64; 7],
    /// `ok`, or the error that stopped this row.
    pub status: String,
    pub min_headway: Option<f64>,
    pub max_headway: Option<f64>,
    pub terminal_dv: Option<f64>,
    pub terminal_dh: Option<f64>,
    pub beta_ok: Option<bool>,
    pub alpha_ok: Option<bool>,
    pub certificate: Option<Verdict>,
    pub decay: Option<Verdict>,
}

fn evaluate(index: usize, point: [f64; 7], template: &ScenarioConfig, decay_h_min: Option<f64>) -> SweepRow {
    let mut row = SweepRow {
        index,
        point,
        status: "ok".into(),
        min_headway: None,
        max_headway: None,
        terminal_dv: None,
        terminal_dh: None,
        beta_ok: None,
        alpha_ok: None,
        certificate: None,
        decay: None,
    };
    let result = (|| -> Result<()> {
        let cfg = apply(template, &point)?;
        let out = execute(&cfg)?;
        let traj = &out.trajectory;
        let p = &cfg.params;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 2..=traj.vehicles() {
            let (a, b) = traj.headway_range(i);
            lo = lo.min(a);
            hi = hi.max(b);
        }
        row.min_headway = Some(lo);
        row.max_headway = Some(hi);
        row.certificate = Some(out.certificate_report.verdict);
        let (lo2, hi2) = traj.headway_range(2);
        row.beta_ok = Some(check_assumption_beta(p, lo2, hi2)?.is_satisfied());
        row.alpha_ok = Some(check_assumption_alpha(p, lo2, hi2)?.satisfied);
        if let Some(v_star) = cfg.leader.constant_velocity() {
            if v_star > p.ov(0.0) && v_star < p.v_max {
                let h_star = p.v_opt_inverse(v_star)?;
                let last = &traj.final_state;
                let h_last = crate::sim::headways(last, p.length);
                row.terminal_dv = Some(last.v[1..].iter().map(|v| (v - v_star).abs()).fold(0.0, f64::max));
                row.terminal_dh = Some(h_last.iter().map(|h| (h - h_star).abs()).fold(0.0, f64::max));
                if let (Some(h_min), 2) = (decay_h_min, traj.vehicles()) {
                    row.decay = Some(decay_envelope_check(traj, v_star, h_min)?.verdict);
                }
            }
        }
        Ok(())
    })();
    if let Err(e) = result {
        row.status = e.to_string();
    }
    row
}

/// Runs every grid point on up to `jobs` threads. Rows come back sorted by grid index;
/// a failing row records its error and never stops the others.
pub fn sweep(template: &ScenarioConfig, grid: &SweepGrid, jobs: usize) -> Result<Vec<SweepRow>> {
    let points = grid.points(template)?;
    let next = AtomicUsize::new(0);
    let rows = Mutex::new(Vec::with_capacity(points.len()));
    let workers = jobs.clamp(1, points.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&point) = points.get(k) else { break };
                let row = evaluate(k, point, template, grid.decay_h_min);
                rows.lock().expect("no worker panics while holding the lock").push(row);
            });
        }
    });
    let mut rows = rows.into_inner().expect("workers finished");
    rows.sort_by_key(|r| r.index);
    Ok(rows)
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn write_sweep_csv(out: &mut impl Write, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(
        out,
        "index,{},status,min_h,max_h,terminal_dv,terminal_dh,beta_ok,alpha_ok,certificate,decay",
        AXES.join(",")
    )?;
    for r in rows {
        let mut cells = vec![r.index.to_string()];
        cells.extend(
            r.point
                .iter()
                .map(|&x| if x.is_nan() { String::new() } else { fmt_f64(x) }),
        );
        cells.push(r.status.replace([',', '\n'], ";"));
        cells.extend([
            opt_f64(r.min_headway),
            opt_f64(r.max_headway),
            opt_f64(r.terminal_dv),
            opt_f64(r.terminal_dh),
        ]);
        cells.extend([r.beta_ok, r.alpha_ok].map(|b| b.map(|b| b.to_string()).unwrap_or_default()));
        cells.extend([r.certificate, r.decay].map(|v| v.map(|v| v.to_string()).unwrap_or_default()));
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}
