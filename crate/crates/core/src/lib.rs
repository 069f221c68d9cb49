//! Simulation and certification toolkit for the Bando follow-the-leader
//! car-following model.
//!
//! A platoon is a leader (vehicle 1) followed by `N` followers (vehicles
//! `2..=N+1`). Each follower accelerates by
//! `alpha (V(h) - v) + beta (v_lead - v) / h^2`.
//! The crate integrates the platoon, evaluates closed-form headway bounds,
//! analyses the equilibrium and checks the energy decay envelopes along
//! simulated trajectories.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod harness;
pub mod io;
pub mod lyapunov;
pub mod model;
pub(crate) mod roots;
pub mod sim;
pub mod stability;

pub use bounds::{BoundsCertificate, RecursionMode};
pub use error::{Error, Result};
pub use model::{ModelParams, MonotoneTable, OptimalVelocityShape};
pub use sim::{LeaderProfile, PlatoonState, SimOptions, Trajectory};
pub use stability::StabilityReport;

/// Outcome of a check whose hypotheses may not hold on the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}
