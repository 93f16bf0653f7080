//! Polarization state generator: a fixed polarizer followed by two
//! liquid-crystal variable retarders with axes at 45° and 22.5°.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::mueller::MuellerMatrix;
use crate::stokes::StokesVector;

/// One LCVR: a fixed axis and a retardance expressed in waves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LcvrSetting {
    pub axis_angle: f64,
    pub retardance: f64,
}

impl LcvrSetting {
    pub fn mueller(&self) -> MuellerMatrix {
        MuellerMatrix::linear_retarder(self.axis_angle, TAU * self.retardance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsgConfig {
    pub polarizer_angle: f64,
    pub lcvr1: LcvrSetting,
    pub lcvr2: LcvrSetting,
}

impl Default for PsgConfig {
    fn default() -> Self {
        PsgConfig {
            polarizer_angle: 0.0,
            lcvr1: LcvrSetting {
                axis_angle: PI / 4.0,
                retardance: 1.0,
            },
            lcvr2: LcvrSetting {
                axis_angle: PI / 8.0,
                retardance: 1.0,
            },
        }
    }
}

impl PsgConfig {
    pub fn with_retardances(mut self, ret1: f64, ret2: f64) -> Self {
        self.lcvr1.retardance = ret1;
        self.lcvr2.retardance = ret2;
        self
    }
}

/// Polarizer, then LCVR-1, then LCVR-2.
pub fn psg_mueller(cfg: &PsgConfig) -> MuellerMatrix {
    let polarizer = MuellerMatrix::linear_polarizer(cfg.polarizer_angle);
    cfg.lcvr2.mueller() * (cfg.lcvr1.mueller() * polarizer)
}

/// State leaving the generator for unpolarized input, renormalized to `s0 = 1`.
pub fn psg_state(cfg: &PsgConfig, ret1: f64, ret2: f64) -> StokesVector {
    let out = psg_mueller(&cfg.with_retardances(ret1, ret2)).apply(StokesVector::UNPOLARIZED);
    out.scale(1.0 / out.s0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsgRow {
    pub label: &'static str,
    pub ret1: f64,
    pub ret2: f64,
    pub state: StokesVector,
}

/// LCVR settings (in waves) and target state for the six-state protocol.
pub const TABLE1: [(&str, f64, f64, StokesVector); 6] = [
    ("H", 1.0, 1.0, StokesVector::H),
    ("V", 0.5, 1.0, StokesVector::V),
    ("D", 1.0, 0.5, StokesVector::D),
    ("A", 0.5, 0.5, StokesVector::A),
    ("+", 0.25, 1.0, StokesVector::PLUS),
    ("-", 0.75, 1.0, StokesVector::MINUS),
];

/// The six labeled settings with their target basis states.
pub fn table1_states() -> Vec<PsgRow> {
    TABLE1
        .iter()
        .map(|&(label, ret1, ret2, state)| PsgRow {
            label,
            ret1,
            ret2,
            state,
        })
        .collect()
}

/// The six states as actually produced by the default generator model.
pub fn generated_states(cfg: &PsgConfig) -> Vec<PsgRow> {
    TABLE1
        .iter()
        .map(|&(label, ret1, ret2, _)| PsgRow {
            label,
            ret1,
            ret2,
            state: psg_state(cfg, ret1, ret2),
        })
        .collect()
}
