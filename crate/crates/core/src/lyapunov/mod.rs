//! Energy functions, phase-plane regions and decay envelopes along trajectories.

mod energy;
mod envelope;
mod region;

pub use energy::{
    energy_e, energy_f, energy_f_chain, energy_series, gronwall_residual, tail_monotone_after_entry, EnergySeries,
    GronwallResidual, TailReport,
};
pub use envelope::{decay_envelope_check, envelope_check_be, DecayReport, EnvelopeReport};
pub use region::{
    classify, escape_time_bound, region_exit_time, region_labels, region_transition_audit, transition_log, AuditReport,
    BoundaryKind, Region, Transition, DEFAULT_EPS,
};

use crate::error::{Error, Result};
use crate::sim::Trajectory;

pub(crate) fn require_constant_leader(traj: &Trajectory, v_star: f64) -> Result<()> {
    match traj.leader.constant_velocity() {
        Some(v) if v == v_star => Ok(()),
        Some(v) => Err(Error::Config(format!("leader drives at {v}, not at v* = {v_star}"))),
        None => Err(Error::Config("this analysis needs a constant-velocity leader".into())),
    }
}

pub(crate) fn require_two_vehicles(traj: &Trajectory) -> Result<()> {
    if traj.vehicles() == 2 {
        Ok(())
    } else {
        Err(Error::Mismatch(format!(
            "two-vehicle analysis applied to a platoon of {}",
            traj.vehicles()
        )))
    }
}
