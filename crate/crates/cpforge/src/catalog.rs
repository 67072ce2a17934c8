//! Built-in catalog of tabulated composite sequences (two population
//! transfers and three gates) plus the parameter-regime constants they were
//! designed for.
//!
//! The tabulated tuples list pulses in reverse application order: the
//! composed product only reproduces the published figures of merit when the
//! last listed pulse acts first, so the sequence builder reverses them. The
//! tuples themselves are stored verbatim for display and diffing.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::metrics::{TargetGate, TransferTarget};
use crate::model::{Pulse, SystemParams};
use crate::sequence::CompositeSequence;

/// What a catalog sequence implements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CatalogTarget {
    FullTransfer,
    HalfTransfer,
    GateX,
    GateH,
    GateT,
}

impl CatalogTarget {
    pub fn all() -> [CatalogTarget; 5] {
        [
            CatalogTarget::FullTransfer,
            CatalogTarget::HalfTransfer,
            CatalogTarget::GateX,
            CatalogTarget::GateH,
            CatalogTarget::GateT,
        ]
    }

    /// Short name used on the command line and in exported file names.
    pub fn cli_name(&self) -> &'static str {
        match self {
            CatalogTarget::FullTransfer => "P1",
            CatalogTarget::HalfTransfer => "half",
            CatalogTarget::GateX => "X",
            CatalogTarget::GateH => "H",
            CatalogTarget::GateT => "T",
        }
    }

    pub fn from_cli_name(name: &str) -> Result<Self> {
        Self::all()
            .into_iter()
            .find(|t| t.cli_name().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::UnknownCatalogEntry(name.to_string()))
    }

    /// Target unitary for the gate entries.
    pub fn gate(&self) -> Option<TargetGate> {
        match self {
            CatalogTarget::GateX => Some(TargetGate::x()),
            CatalogTarget::GateH => Some(TargetGate::h()),
            CatalogTarget::GateT => Some(TargetGate::t()),
            _ => None,
        }
    }

    /// Target populations for the transfer entries.
    pub fn transfer(&self) -> Option<TransferTarget> {
        match self {
            CatalogTarget::FullTransfer => Some(TransferTarget::full_transfer()),
            CatalogTarget::HalfTransfer => Some(TransferTarget::half_transfer()),
            _ => None,
        }
    }
}

impl fmt::Display for CatalogTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self {
            CatalogTarget::FullTransfer => "P1=1",
            CatalogTarget::HalfTransfer => "P1=1/2",
            CatalogTarget::GateX => "X",
            CatalogTarget::GateH => "H",
            CatalogTarget::GateT => "T",
        };
        f.write_str(label)
    }
}

/// One tabulated sequence together with its published presentation.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    target: CatalogTarget,
    sequence: CompositeSequence,
    published_area_over_pi: f64,
    published_phases_over_pi: &'static [f64],
    published_rabi_over_pi: &'static [f64],
}

impl CatalogEntry {
    pub fn target(&self) -> CatalogTarget {
        self.target
    }

    /// The sequence with pulses in application order.
    pub fn sequence(&self) -> &CompositeSequence {
        &self.sequence
    }

    /// Total area quoted alongside the tabulated tuples, in units of pi.
    pub fn published_area_over_pi(&self) -> f64 {
        self.published_area_over_pi
    }

    /// Phases exactly as tabulated (units of pi, reverse application order).
    pub fn published_phases_over_pi(&self) -> &[f64] {
        self.published_phases_over_pi
    }

    /// Rabi amplitudes exactly as tabulated (units of pi/T).
    pub fn published_rabi_over_pi(&self) -> &[f64] {
        self.published_rabi_over_pi
    }

    /// |computed area − published area| in units of pi.
    pub fn area_deviation_over_pi(&self) -> f64 {
        (self.sequence.total_area_over_pi() - self.published_area_over_pi).abs()
    }

    /// The published area is quoted to two decimals; accept 0.01 pi slack.
    pub fn area_ok(&self) -> bool {
        self.area_deviation_over_pi() <= 0.01
    }
}

const P1_PHASES: [f64; 6] = [0.0, 0.5350, 1.9143, 1.9720, 0.2462, 1.3857];
const P1_RABI: [f64; 6] = [0.1586, 0.6205, 0.4461, 0.4994, 1.0982, 0.8116];

const HALF_PHASES: [f64; 7] = [0.0, 0.5003, 1.1833, 1.1037, 1.5215, 0.6296, 0.4988];
const HALF_RABI: [f64; 7] = [0.2997, 0.4086, 0.4242, 0.6462, 0.6771, 0.7331, 0.8712];

// The X row is the one row tabulated with amplitudes first: only that
// reading sums to the published 6.96 pi, so the tuples are stored under
// their consistent meaning rather than their printed position.
const X_RABI: [f64; 8] = [0.4318, 0.6684, 0.6746, 0.6175, 1.3619, 0.8914, 1.4236, 0.8910];
const X_PHASES: [f64; 8] = [0.0, 1.1391, 1.5009, 1.7673, 1.0754, 1.5435, 1.0983, 0.0282];

const H_PHASES: [f64; 7] = [0.0, 0.6513, 0.1231, 0.5530, 0.8964, 0.0692, 0.4831];
const H_RABI: [f64; 7] = [0.8289, 0.9549, 1.1362, 1.2669, 0.8429, 1.4784, 1.0455];

const T_PHASES: [f64; 7] = [0.0, 0.9232, 1.5599, 1.9209, 0.2637, 1.1305, 0.9090];
const T_RABI: [f64; 7] = [0.2647, 0.1738, 0.6147, 0.8168, 0.1897, 0.6416, 0.7425];

fn build_entry(
    target: CatalogTarget,
    phases_over_pi: &'static [f64],
    rabi_over_pi: &'static [f64],
    published_area_over_pi: f64,
) -> CatalogEntry {
    let params = SystemParams::new(regime_defaults().delta_t_composite)
        .expect("composite-regime anharmonicity is positive");
    let pulses = phases_over_pi
        .iter()
        .zip(rabi_over_pi)
        .rev()
        .map(|(&ph, &om)| Pulse::unit(om * PI, ph * PI).expect("tabulated pulse is valid"))
        .collect();
    let sequence = CompositeSequence::new(pulses, params)
        .expect("tabulated sequences are non-empty")
        .with_name(target.cli_name());
    CatalogEntry {
        target,
        sequence,
        published_area_over_pi,
        published_phases_over_pi: phases_over_pi,
        published_rabi_over_pi: rabi_over_pi,
    }
}

/// All five tabulated sequences, in tabulated order.
pub fn load_catalog() -> Vec<CatalogEntry> {
    vec![
        build_entry(CatalogTarget::FullTransfer, &P1_PHASES, &P1_RABI, 3.63),
        build_entry(CatalogTarget::HalfTransfer, &HALF_PHASES, &HALF_RABI, 4.06),
        build_entry(CatalogTarget::GateX, &X_PHASES, &X_RABI, 6.96),
        build_entry(CatalogTarget::GateH, &H_PHASES, &H_RABI, 7.55),
        build_entry(CatalogTarget::GateT, &T_PHASES, &T_RABI, 3.44),
    ]
}

/// Looks up one catalog entry by its short name.
pub fn catalog_entry(name: &str) -> Result<CatalogEntry> {
    let target = CatalogTarget::from_cli_name(name)?;
    Ok(load_catalog()
        .into_iter()
        .find(|e| e.target == target)
        .expect("catalog covers every target"))
}

/// Anharmonicity regimes the sequences were designed for.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeDefaults {
    /// deltaT used when judging one-pulse references.
    pub delta_t_single: f64,
    /// deltaT used for the composite sequences.
    pub delta_t_composite: f64,
    /// Duration ratio between the two regimes.
    pub speedup_single: f64,
}

impl RegimeDefaults {
    /// Net speed-up of a composite sequence with the given total area
    /// (radians) over the slow-regime single pulse.
    pub fn effective_speedup(&self, total_area: f64) -> f64 {
        self.speedup_single / (total_area / PI)
    }
}

pub fn regime_defaults() -> RegimeDefaults {
    RegimeDefaults { delta_t_single: 20.0, delta_t_composite: 0.5, speedup_single: 40.0 }
}
