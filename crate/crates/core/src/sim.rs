//! Fixed-step RK4 integration of a platoon behind a prescribed leader.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Headway at or below which an RK4 stage aborts the run.
pub const H_GUARD: f64 = 1e-9;

/// Default cap on stored samples per trajectory.
pub const DEFAULT_MAX_SAMPLES: usize = 20_001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LeaderProfile {
    Constant {
        velocity: f64,
    },
    /// Acceleration `-amplitude * sin(omega t)`.
    Sinusoid {
        initial_velocity: f64,
        amplitude: f64,
        omega: f64,
    },
    /// `velocities[k]` holds on `[times[k], times[k+1])`; the last value holds forever.
    PiecewiseConstant {
        times: Vec<f64>,
        velocities: Vec<f64>,
    },
    /// Linear interpolation between samples, held constant past the last one.
    Sampled {
        times: Vec<f64>,
        velocities: Vec<f64>,
    },
}

impl LeaderProfile {
    pub fn validate(&self) -> Result<()> {
        let table = |times: &[f64], velocities: &[f64]| -> Result<()> {
            if times.is_empty() || times.len() != velocities.len() {
                return Err(Error::Config(
                    "leader table needs equal, nonempty times and velocities".into(),
                ));
            }
            if times[0] != 0.0 {
                return Err(Error::Config("leader table must start at t = 0".into()));
            }
            if !times.windows(2).all(|w| w[1] > w[0]) {
                return Err(Error::Config("leader table times must be strictly increasing".into()));
            }
            if times.iter().chain(velocities).any(|x| !x.is_finite()) {
                return Err(Error::Config("leader table values must be finite".into()));
            }
            Ok(())
        };
        match self {
            LeaderProfile::Constant { velocity } if velocity.is_finite() => Ok(()),
            LeaderProfile::Constant { .. } => Err(Error::Config("leader velocity must be finite".into())),
            LeaderProfile::Sinusoid {
                initial_velocity,
                amplitude,
                omega,
            } => {
                if initial_velocity.is_finite() && amplitude.is_finite() && omega.is_finite() && *omega > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Config(
                        "sinusoid leader needs finite values and omega > 0".into(),
                    ))
                }
            }
            LeaderProfile::PiecewiseConstant { times, velocities } | LeaderProfile::Sampled { times, velocities } => {
                table(times, velocities)
            }
        }
    }

    pub fn velocity(&self, t: f64) -> f64 {
        match self {
            LeaderProfile::Constant { velocity } => *velocity,
            LeaderProfile::Sinusoid {
                initial_velocity,
                amplitude,
                omega,
            } => initial_velocity + amplitude / omega * ((omega * t).cos() - 1.0),
            LeaderProfile::PiecewiseConstant { times, velocities } => velocities[segment(times, t)],
            LeaderProfile::Sampled { times, velocities } => {
                let k = segment(times, t);
                if k + 1 == times.len() {
                    velocities[k]
                } else {
                    let s = (t - times[k]) / (times[k + 1] - times[k]);
                    velocities[k] + s * (velocities[k + 1] - velocities[k])
                }
            }
        }
    }

    pub fn acceleration(&self, t: f64) -> f64 {
        match self {
            LeaderProfile::Constant { .. } | LeaderProfile::PiecewiseConstant { .. } => 0.0,
            LeaderProfile::Sinusoid { amplitude, omega, .. } => -amplitude * (omega * t).sin(),
            LeaderProfile::Sampled { times, velocities } => {
                let k = segment(times, t);
                if k + 1 == times.len() {
                    0.0
                } else {
                    (velocities[k + 1] - velocities[k]) / (times[k + 1] - times[k])
                }
            }
        }
    }

    /// Displacement since `t = 0`.
    pub fn displacement(&self, t: f64) -> f64 {
        match self {
            LeaderProfile::Constant { velocity } => velocity * t,
            LeaderProfile::Sinusoid {
                initial_velocity,
                amplitude,
                omega,
            } => (initial_velocity - amplitude / omega) * t + amplitude / (omega * omega) * (omega * t).sin(),
            LeaderProfile::PiecewiseConstant { times, velocities } => {
                let k = segment(times, t);
                let whole: f64 = (0..k).map(|j| velocities[j] * (times[j + 1] - times[j])).sum();
                whole + velocities[k] * (t - times[k])
            }
            LeaderProfile::Sampled { times, velocities } => {
                let k = segment(times, t);
                let whole: f64 = (0..k)
                    .map(|j| 0.5 * (velocities[j] + velocities[j + 1]) * (times[j + 1] - times[j]))
                    .sum();
                let tail = t - times[k];
                if k + 1 == times.len() {
                    whole + velocities[k] * tail
                } else {
                    let slope = (velocities[k + 1] - velocities[k]) / (times[k + 1] - times[k]);
                    whole + velocities[k] * tail + 0.5 * slope * tail * tail
                }
            }
        }
    }

    pub fn constant_velocity(&self) -> Option<f64> {
        match self {
            LeaderProfile::Constant { velocity } => Some(*velocity),
            _ => None,
        }
    }
}

fn segment(times: &[f64], t: f64) -> usize {
    times.partition_point(|&s| s <= t).saturating_sub(1)
}

/// Positions and velocities of all vehicles, leader first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatoonState {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl PlatoonState {
    /// Places the leader at `x = 0` and each follower `headway + length` behind its predecessor.
    pub fn from_headways(
        leader_velocity: f64,
        headways: &[f64],
        follower_velocities: &[f64],
        length: f64,
    ) -> Result<Self> {
        if headways.len() != follower_velocities.len() {
            return Err(Error::Config(format!(
                "{} headways but {} follower velocities",
                headways.len(),
                follower_velocities.len()
            )));
        }
        let mut x = Vec::with_capacity(headways.len() + 1);
        x.push(0.0);
        for h in headways {
            let last = *x.last().unwrap();
            x.push(last - h - length);
        }
        let mut v = Vec::with_capacity(x.len());
        v.push(leader_velocity);
        v.extend_from_slice(follower_velocities);
        Ok(PlatoonState { t: 0.0, x, v })
    }

    pub fn vehicles(&self) -> usize {
        self.x.len()
    }

    pub fn followers(&self) -> usize {
        self.x.len().saturating_sub(1)
    }

    /// The first `k` vehicles.
    pub fn truncate(&self, k: usize) -> PlatoonState {
        PlatoonState {
            t: self.t,
            x: self.x[..k].to_vec(),
            v: self.v[..k].to_vec(),
        }
    }

    pub fn check_admissible(&self, params: &ModelParams) -> Result<()> {
        if self.x.len() != self.v.len() || self.x.len() < 2 {
            return Err(Error::Inadmissible(
                "a platoon needs a leader and at least one follower".into(),
            ));
        }
        if self.x.iter().chain(&self.v).any(|z| !z.is_finite()) {
            return Err(Error::Inadmissible("state contains non-finite values".into()));
        }
        for (i, h) in headways(self, params.length).into_iter().enumerate() {
            if !(h > 0.0) {
                return Err(Error::Inadmissible(format!(
                    "vehicle {} starts with headway {h} <= 0",
                    i + 2
                )));
            }
        }
        for (i, &v) in self.v.iter().enumerate().skip(1) {
            if !(0.0..=params.v_max).contains(&v) {
                return Err(Error::Inadmissible(format!(
                    "vehicle {} starts with velocity {v} outside [0, {}]",
                    i + 1,
                    params.v_max
                )));
            }
        }
        Ok(())
    }
}

/// Bumper-to-bumper gaps `x_{i-1} - x_i - l` for every follower.
pub fn headways(state: &PlatoonState, length: f64) -> Vec<f64> {
    state.x.windows(2).map(|w| w[0] - w[1] - length).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub max_samples: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            max_samples: DEFAULT_MAX_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub params: ModelParams,
    pub leader: LeaderProfile,
    pub dt: f64,
    /// Integration steps between stored samples.
    pub stride: usize,
    pub samples: Vec<PlatoonState>,
    /// State after the last integration step, stored or not.
    pub final_state: PlatoonState,
    /// Per sample, `h_i` for each follower.
    pub headways: Vec<Vec<f64>>,
    /// Per sample, `v_{i-1} - v_i` for each follower.
    pub rel_velocities: Vec<Vec<f64>>,
    /// Per sample, accelerations of all vehicles (leader first).
    pub accelerations: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn vehicles(&self) -> usize {
        self.final_state.vehicles()
    }

    pub fn followers(&self) -> usize {
        self.final_state.followers()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    /// Headway series of follower `i` (vehicle number, `2..=N+1`).
    pub fn headway_series(&self, i: usize) -> Vec<f64> {
        self.headways.iter().map(|h| h[i - 2]).collect()
    }

    /// Velocity series of vehicle `i` (`1..=N+1`).
    pub fn velocity_series(&self, i: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.v[i - 1]).collect()
    }

    /// Smallest and largest headway of follower `i` over the stored samples.
    pub fn headway_range(&self, i: usize) -> (f64, f64) {
        self.headways
            .iter()
            .map(|h| h[i - 2])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), h| (lo.min(h), hi.max(h)))
    }

    fn derive(params: &ModelParams, leader: &LeaderProfile, s: &PlatoonState) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let h = headways(s, params.length);
        let dv: Vec<f64> = s.v.windows(2).map(|w| w[0] - w[1]).collect();
        let mut a = Vec::with_capacity(s.vehicles());
        a.push(leader.acceleration(s.t));
        for i in 1..s.vehicles() {
            a.push(params.acc_unchecked(h[i - 1], s.v[i], s.v[i - 1]));
        }
        (h, dv, a)
    }
}

/// Follower accelerations at time `t` given follower positions/velocities and the exact leader state.
fn rates(params: &ModelParams, leader: (f64, f64), x: &[f64], v: &[f64], t: f64, dvdt: &mut [f64]) -> Result<()> {
    for i in 0..x.len() {
        let (xp, vp) = if i == 0 { leader } else { (x[i - 1], v[i - 1]) };
        let h = xp - x[i] - params.length;
        if !(h > H_GUARD) {
            if h.is_nan() {
                return Err(Error::Blowup { vehicle: i + 2, t });
            }
            return Err(Error::Collision {
                vehicle: i + 2,
                t,
                headway: h,
            });
        }
        dvdt[i] = params.acc_unchecked(h, v[i], vp);
    }
    Ok(())
}

struct Stepper<'a> {
    params: &'a ModelParams,
    leader: &'a LeaderProfile,
    x_offset: f64,
    kx: [Vec<f64>; 4],
    kv: [Vec<f64>; 4],
    xs: Vec<f64>,
    vs: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(params: &'a ModelParams, leader: &'a LeaderProfile, x_offset: f64, n: usize) -> Self {
        let z = || vec![0.0; n];
        Stepper {
            params,
            leader,
            x_offset,
            kx: [z(), z(), z(), z()],
            kv: [z(), z(), z(), z()],
            xs: z(),
            vs: z(),
        }
    }

    fn leader_at(&self, t: f64) -> (f64, f64) {
        (self.x_offset + self.leader.displacement(t), self.leader.velocity(t))
    }

    /// One RK4 step of the followers from `t` to `t_next`; `x`, `v` exclude the leader.
    fn step(&mut self, t: f64, t_next: f64, x: &mut [f64], v: &mut [f64]) -> Result<()> {
        let dt = t_next - t;
        let half = t + 0.5 * dt;
        let n = x.len();

        self.kx[0].copy_from_slice(v);
        rates(self.params, self.leader_at(t), x, v, t, &mut self.kv[0])?;
        for s in 1..4 {
            let (c, ts) = if s == 3 { (dt, t_next) } else { (0.5 * dt, half) };
            for i in 0..n {
                self.xs[i] = x[i] + c * self.kx[s - 1][i];
                self.vs[i] = v[i] + c * self.kv[s - 1][i];
            }
            self.kx[s].copy_from_slice(&self.vs);
            let lead = self.leader_at(ts);
            rates(self.params, lead, &self.xs, &self.vs, ts, &mut self.kv[s])?;
        }
        for i in 0..n {
            x[i] += dt / 6.0 * (self.kx[0][i] + 2.0 * self.kx[1][i] + 2.0 * self.kx[2][i] + self.kx[3][i]);
            v[i] += dt / 6.0 * (self.kv[0][i] + 2.0 * self.kv[1][i] + 2.0 * self.kv[2][i] + self.kv[3][i]);
        }
        for i in 0..n {
            if !(x[i].is_finite() && v[i].is_finite()) {
                return Err(Error::Blowup {
                    vehicle: i + 2,
                    t: t_next,
                });
            }
            if v[i] < 0.0 {
                return Err(Error::NegativeVelocity {
                    vehicle: i + 2,
                    t: t_next,
                    velocity: v[i],
                });
            }
        }
        let (xl, _) = self.leader_at(t_next);
        for i in 0..n {
            let xp = if i == 0 { xl } else { x[i - 1] };
            let h = xp - x[i] - self.params.length;
            if !(h > 0.0) {
                return Err(Error::Collision {
                    vehicle: i + 2,
                    t: t_next,
                    headway: h,
                });
            }
        }
        Ok(())
    }
}

/// Leader displacement offset such that `x_1(0) = state.x[0]` when `state.t = 0`.
fn leader_offset(state: &PlatoonState, leader: &LeaderProfile) -> f64 {
    state.x[0] - leader.displacement(state.t)
}

/// Advances `state` by one RK4 step of size `dt`; the leader moves along its closed-form profile.
pub fn step(state: &PlatoonState, leader: &LeaderProfile, params: &ModelParams, dt: f64) -> Result<PlatoonState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    state.check_admissible(params)?;
    let offset = leader_offset(state, leader);
    let mut x = state.x[1..].to_vec();
    let mut v = state.v[1..].to_vec();
    let mut stepper = Stepper::new(params, leader, offset, x.len());
    let t_next = state.t + dt;
    stepper.step(state.t, t_next, &mut x, &mut v)?;
    let (xl, vl) = stepper.leader_at(t_next);
    Ok(assemble(t_next, (xl, vl), &x, &v))
}

fn assemble(t: f64, leader: (f64, f64), x: &[f64], v: &[f64]) -> PlatoonState {
    let mut xs = Vec::with_capacity(x.len() + 1);
    xs.push(leader.0);
    xs.extend_from_slice(x);
    let mut vs = Vec::with_capacity(v.len() + 1);
    vs.push(leader.1);
    vs.extend_from_slice(v);
    PlatoonState { t, x: xs, v: vs }
}

/// Smallest stride dividing `n` that keeps at most `max_samples` samples; falls back to the plain ceiling.
fn choose_stride(n: usize, max_samples: usize) -> usize {
    let intervals = max_samples.saturating_sub(1).max(1);
    let base = n.div_ceil(intervals).max(1);
    (base..=2 * base).find(|&d| n.is_multiple_of(d)).unwrap_or(base)
}

pub fn simulate(
    init: &PlatoonState,
    leader: &LeaderProfile,
    params: &ModelParams,
    dt: f64,
    t_end: f64,
) -> Result<Trajectory> {
    simulate_with(init, leader, params, dt, t_end, SimOptions::default())
}

/// Integrates on the grid `t_k = k dt`, `k = 0..=round(t_end / dt)`, starting from `init` at `t = 0`.
pub fn simulate_with(
    init: &PlatoonState,
    leader: &LeaderProfile,
    params: &ModelParams,
    dt: f64,
    t_end: f64,
    options: SimOptions,
) -> Result<Trajectory> {
    params.validate()?;
    leader.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Config(format!("t_end must be >= 0, got {t_end}")));
    }
    if init.t != 0.0 {
        return Err(Error::Config("initial state must sit at t = 0".into()));
    }
    init.check_admissible(params)?;
    let v_lead0 = leader.velocity(0.0);
    if (init.v[0] - v_lead0).abs() > 1e-12 * v_lead0.abs().max(1.0) {
        return Err(Error::Inadmissible(format!(
            "initial leader velocity {} disagrees with the profile value {v_lead0}",
            init.v[0]
        )));
    }

    let n_steps = (t_end / dt).round() as usize;
    let stride = choose_stride(n_steps, options.max_samples.max(2));
    let offset = leader_offset(init, leader);
    let mut x = init.x[1..].to_vec();
    let mut v = init.v[1..].to_vec();
    let mut stepper = Stepper::new(params, leader, offset, x.len());

    let band = |t: f64| -> Result<()> {
        let vl = leader.velocity(t);
        if vl < params.v_min || vl > params.v_max {
            return Err(Error::LeaderOutOfBand {
                t,
                velocity: vl,
                v_min: params.v_min,
                v_max: params.v_max,
            });
        }
        Ok(())
    };
    band(0.0)?;

    let first = assemble(0.0, stepper.leader_at(0.0), &x, &v);
    let mut samples = Vec::with_capacity(n_steps / stride + 1);
    samples.push(first);
    for k in 0..n_steps {
        let t = k as f64 * dt;
        let t_next = (k + 1) as f64 * dt;
        stepper.step(t, t_next, &mut x, &mut v)?;
        band(t_next)?;
        if (k + 1) % stride == 0 {
            samples.push(assemble(t_next, stepper.leader_at(t_next), &x, &v));
        }
    }
    let t_final = n_steps as f64 * dt;
    let final_state = assemble(t_final, stepper.leader_at(t_final), &x, &v);

    let mut hs = Vec::with_capacity(samples.len());
    let mut dvs = Vec::with_capacity(samples.len());
    let mut accs = Vec::with_capacity(samples.len());
    for s in &samples {
        let (h, dv, a) = Trajectory::derive(params, leader, s);
        hs.push(h);
        dvs.push(dv);
        accs.push(a);
    }
    Ok(Trajectory {
        params: params.clone(),
        leader: leader.clone(),
        dt,
        stride,
        samples,
        final_state,
        headways: hs,
        rel_velocities: dvs,
        accelerations: accs,
    })
}
