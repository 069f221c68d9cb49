//! Scenario configuration, figure presets, single runs and parameter sweeps.

mod presets;
mod sweep;

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use presets::FigurePreset;
pub use sweep::{sweep, write_sweep_csv, SweepGrid, SweepRow};

use crate::bounds::{certify, verify_certificate, BoundsCertificate, CertificateReport, RecursionMode};
use crate::error::{Error, Result};
use crate::io;
use crate::lyapunov::{energy_series, transition_log, DEFAULT_EPS};
use crate::model::ModelParams;
use crate::sim::{headways, simulate, LeaderProfile, PlatoonState, Trajectory};
use crate::stability::{self, StabilityReport};
use crate::Verdict;

pub const DEFAULT_DT: f64 = 1e-3;

fn default_dt() -> f64 {
    DEFAULT_DT
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Trajectory,
    Energies,
    Phase,
    Certificate,
    Stability,
    Transitions,
}

impl OutputKind {
    pub fn file_name(self) -> &'static str {
        match self {
            OutputKind::Trajectory => "trajectory.csv",
            OutputKind::Energies => "energies.csv",
            OutputKind::Phase => "phase.csv",
            OutputKind::Certificate => "certificate.json",
            OutputKind::Stability => "stability.json",
            OutputKind::Transitions => "transitions.json",
        }
    }

    /// Outputs that need a constant-velocity leader.
    fn needs_constant_leader(self) -> bool {
        matches!(
            self,
            OutputKind::Energies | OutputKind::Phase | OutputKind::Stability | OutputKind::Transitions
        )
    }
}

/// Follower headways and velocities at `t = 0`, nearest the leader first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub headways: Vec<f64>,
    pub velocities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub params: ModelParams,
    pub leader: LeaderProfile,
    pub initial: InitialState,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_end: f64,
    /// Files to emit; every applicable output when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<BTreeSet<OutputKind>>,
    #[serde(default)]
    pub mode: RecursionMode,
    /// Upper edge of the leader velocity, enabling the two-vehicle upper headway bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_bar_max: Option<f64>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data always serializes") + "\n"
    }

    pub fn initial_state(&self) -> Result<PlatoonState> {
        PlatoonState::from_headways(
            self.leader.velocity(0.0),
            &self.initial.headways,
            &self.initial.velocities,
            self.params.length,
        )
    }

    /// Requested outputs, or every output the leader profile supports.
    pub fn resolved_outputs(&self) -> Result<BTreeSet<OutputKind>> {
        let constant = self.leader.constant_velocity().is_some();
        match &self.outputs {
            Some(set) => {
                if let Some(bad) = set.iter().find(|k| k.needs_constant_leader() && !constant) {
                    return Err(Error::Config(format!(
                        "output {:?} needs a constant-velocity leader",
                        bad
                    )));
                }
                Ok(set.clone())
            }
            None => Ok([
                OutputKind::Trajectory,
                OutputKind::Energies,
                OutputKind::Phase,
                OutputKind::Certificate,
                OutputKind::Stability,
                OutputKind::Transitions,
            ]
            .into_iter()
            .filter(|k| constant || !k.needs_constant_leader())
            .collect()),
        }
    }

    /// Checks everything that can be checked without integrating.
    pub fn validate(&self) -> Result<PlatoonState> {
        self.params.validate()?;
        self.leader.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        self.resolved_outputs()?;
        let init = self.initial_state()?;
        init.check_admissible(&self.params)?;
        if let Some(vb) = self.v_bar_max {
            if !(vb < self.params.v_max) {
                return Err(Error::Config(format!("v_bar_max = {vb} must stay below v_max")));
            }
        }
        Ok(init)
    }
}

/// Everything computed by one run, before any file is written.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub certificate: BoundsCertificate,
    pub certificate_report: CertificateReport,
    pub stability: Option<StabilityReport>,
}

impl RunOutcome {
    /// Reasons a strict run fails: a violated certificate or a violated beta assumption.
    pub fn strict_failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.certificate_report.verdict == Verdict::Fail {
            for v in &self.certificate_report.violations {
                out.push(format!(
                    "certificate violated: vehicle {} {} = {} vs bound {} at t = {}",
                    v.vehicle, v.quantity, v.observed, v.bound, v.t
                ));
            }
        }
        if let Some(s) = &self.stability {
            if !s.beta_verdict.is_satisfied() {
                out.push(format!(
                    "beta assumption violated: max V'(h) h^2 = {} at h = {} exceeds beta = {}",
                    s.beta_verdict.max_f(),
                    s.beta_verdict.argmax(),
                    self.trajectory.params.beta
                ));
            }
        }
        out
    }
}

/// Simulates the scenario and evaluates certificate and stability reports.
pub fn execute(config: &ScenarioConfig) -> Result<RunOutcome> {
    let init = config.validate()?;
    let trajectory = simulate(&init, &config.leader, &config.params, config.dt, config.t_end)?;
    let certificate = certify(
        &config.params,
        &headways(&init, config.params.length),
        config.mode,
        config.v_bar_max,
    )?;
    let certificate_report = verify_certificate(&trajectory, &certificate)?;
    let stability = match config.leader.constant_velocity() {
        Some(v_star) if v_star > config.params.ov(0.0) && v_star < config.params.v_max => {
            let interval = trajectory.headway_range(2);
            Some(stability::report(
                &config.params,
                v_star,
                interval,
                trajectory.headways[0][0],
            )?)
        }
        _ => None,
    };
    Ok(RunOutcome {
        trajectory,
        certificate,
        certificate_report,
        stability,
    })
}

fn create(dir: &Path, kind: OutputKind) -> Result<(PathBuf, BufWriter<File>)> {
    let path = dir.join(kind.file_name());
    let file = File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok((path, BufWriter::new(file)))
}

/// Writes the requested artifacts of `outcome` into `out_dir`.
pub fn emit(config: &ScenarioConfig, outcome: &RunOutcome, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let outputs = config.resolved_outputs()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
    let traj = &outcome.trajectory;
    let v_star = config.leader.constant_velocity();
    let mut written = Vec::new();
    for kind in outputs {
        let (path, mut w) = create(out_dir, kind)?;
        match kind {
            OutputKind::Trajectory => io::write_trajectory_csv(&mut w, traj)?,
            OutputKind::Energies => io::write_energy_csv(&mut w, &energy_series(traj, v_star.unwrap())?)?,
            OutputKind::Phase => io::write_phase_csv(&mut w, traj)?,
            OutputKind::Certificate => io::write_json(&mut w, &outcome.certificate)?,
            OutputKind::Stability => io::write_json(&mut w, &outcome.stability)?,
            OutputKind::Transitions => {
                io::write_transitions_json(&mut w, &transition_log(traj, v_star.unwrap(), DEFAULT_EPS))?
            }
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

/// Runs the scenario and writes its artifacts. Nothing is written when the run fails.
pub fn run(config: &ScenarioConfig, out_dir: &Path) -> Result<(RunOutcome, Vec<PathBuf>)> {
    let outcome = execute(config)?;
    let files = emit(config, &outcome, out_dir)?;
    Ok((outcome, files))
}

/// Process exit status for an error: 3 for integration failures, 2 for everything else.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_integration_failure() {
        3
    } else {
        2
    }
}

pub const EXIT_STRICT: i32 = 4;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_unknown_keys_and_accepts_scientific_numbers() {
        let cfg = FigurePreset::FigLower.config();
        let mut value: serde_json::Value = serde_json::from_str(&cfg.to_json()).unwrap();
        value["params"]["alpha"] = serde_json::json!(5e-1);
        let text = value.to_string().replace("\"alpha\":0.5", "\"alpha\":5e-1");
        assert_eq!(ScenarioConfig::from_json(&text).unwrap(), cfg);
        value["dtt"] = serde_json::json!(1.0);
        assert!(ScenarioConfig::from_json(&value.to_string()).is_err());
    }

    #[test]
    fn negative_headway_is_a_config_error() {
        let mut cfg = FigurePreset::FigLower.config();
        cfg.initial.headways[0] = -1.0;
        let err = cfg.validate().unwrap_err();
        assert_eq!(exit_code(&err), 2);
    }

    #[test]
    fn energies_need_constant_leader() {
        let mut cfg = FigurePreset::FigLower.config();
        assert!(!cfg.resolved_outputs().unwrap().contains(&OutputKind::Energies));
        cfg.outputs = Some([OutputKind::Energies].into());
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            exit_code(&Error::Collision {
                vehicle: 2,
                t: 0.0,
                headway: 0.0
            }),
            3
        );
        assert_eq!(
            exit_code(&Error::LeaderOutOfBand {
                t: 0.0,
                velocity: 0.0,
                v_min: 1.0,
                v_max: 2.0
            }),
            2
        );
    }
}
