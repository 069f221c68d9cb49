use std::fmt;
use std::str::FromStr;

use super::{InitialState, ScenarioConfig, DEFAULT_DT};
use crate::bounds::RecursionMode;
use crate::error::Error;
use crate::model::ModelParams;
use crate::sim::LeaderProfile;

/// Reproducible scenarios behind the reference figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigurePreset {
    /// Fast follower closing on a slowly oscillating leader.
    FigLower,
    /// Nearly stopped follower behind a leader at 99% of `v_max`.
    FigUpper,
    /// Five vehicles behind the oscillating leader.
    FigFive,
    /// Two vehicles behind a constant leader at 15 m/s.
    FigTwoConstant,
    /// Five vehicles behind a constant leader at 15 m/s.
    FigFiveConstant,
    /// The two-vehicle constant-leader run over a longer horizon for the energy plots.
    FigEnergy,
    /// Two vehicles starting in region D of the phase plane.
    FigPhase,
}

const FIVE_HEADWAYS: [f64; 4] = [10.0, 8.0, 6.0, 5.0];
const FIVE_VELOCITIES: [f64; 4] = [16.0, 22.0, 26.0, 30.0];

impl FigurePreset {
    pub const ALL: [FigurePreset; 7] = [
        FigurePreset::FigLower,
        FigurePreset::FigUpper,
        FigurePreset::FigFive,
        FigurePreset::FigTwoConstant,
        FigurePreset::FigFiveConstant,
        FigurePreset::FigEnergy,
        FigurePreset::FigPhase,
    ];

    pub fn id(self) -> &'static str {
        match self {
            FigurePreset::FigLower => "fig-lower",
            FigurePreset::FigUpper => "fig-upper",
            FigurePreset::FigFive => "fig-five",
            FigurePreset::FigTwoConstant => "fig-two-constant",
            FigurePreset::FigFiveConstant => "fig-five-constant",
            FigurePreset::FigEnergy => "fig-energy",
            FigurePreset::FigPhase => "fig-phase",
        }
    }

    pub fn t_end(self) -> f64 {
        match self {
            FigurePreset::FigLower | FigurePreset::FigFive | FigurePreset::FigEnergy => 25.0,
            FigurePreset::FigUpper => 20.0,
            FigurePreset::FigTwoConstant | FigurePreset::FigPhase => 7.0,
            FigurePreset::FigFiveConstant => 8.0,
        }
    }

    pub fn config(self) -> ScenarioConfig {
        let params = ModelParams::reference();
        let v_max = params.v_max;
        let oscillating = LeaderProfile::Sinusoid {
            initial_velocity: 0.35 * v_max,
            amplitude: 2.0,
            omega: 1.0,
        };
        let cruise = LeaderProfile::Constant { velocity: 15.0 };
        let (leader, headways, velocities, v_bar_max) = match self {
            FigurePreset::FigLower => (oscillating, vec![10.0], vec![v_max], None),
            FigurePreset::FigUpper => (
                LeaderProfile::Constant { velocity: 0.99 * v_max },
                vec![2.0],
                vec![0.005 * v_max],
                Some(0.99 * v_max),
            ),
            FigurePreset::FigFive => (oscillating, FIVE_HEADWAYS.to_vec(), FIVE_VELOCITIES.to_vec(), None),
            FigurePreset::FigTwoConstant | FigurePreset::FigEnergy => (cruise, vec![10.0], vec![5.0], None),
            FigurePreset::FigFiveConstant => (cruise, FIVE_HEADWAYS.to_vec(), FIVE_VELOCITIES.to_vec(), None),
            FigurePreset::FigPhase => (cruise, vec![5.0], vec![25.0], None),
        };
        ScenarioConfig {
            params,
            leader,
            initial: InitialState { headways, velocities },
            dt: DEFAULT_DT,
            t_end: self.t_end(),
            outputs: None,
            mode: RecursionMode::default(),
            v_bar_max,
        }
    }
}

impl fmt::Display for FigurePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for FigurePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        FigurePreset::ALL.into_iter().find(|p| p.id() == s).ok_or_else(|| {
            let ids: Vec<&str> = FigurePreset::ALL.iter().map(|p| p.id()).collect();
            Error::Config(format!("unknown preset {s:?}, expected one of {}", ids.join(", ")))
        })
    }
}
