//! Composite sequences: ordered pulse trains over a fixed ladder, their
//! composed propagators, and a JSON interchange format.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, propagate, Propagator3, Pulse, SystemParams};

/// An ordered train of pulses applied to one ladder; `pulses[0]` acts first.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeSequence {
    pulses: Vec<Pulse>,
    params: SystemParams,
    name: Option<String>,
}

impl CompositeSequence {
    pub fn new(pulses: Vec<Pulse>, params: SystemParams) -> Result<Self> {
        if pulses.is_empty() {
            return Err(Error::EmptySequence);
        }
        Ok(Self { pulses, params, name: None })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Total evolution operator at relative amplitude error `eps`: the
    /// product of segment propagators with the first pulse rightmost.
    pub fn compose(&self, eps: f64) -> Result<Propagator3> {
        let mut acc = nalgebra::Matrix3::identity();
        for pulse in &self.pulses {
            let h = build_hamiltonian(pulse, eps, &self.params)?;
            let u = propagate(&h, pulse.duration())?;
            acc = u.matrix() * acc;
        }
        Propagator3::from_matrix(acc)
    }

    /// Integrated drive area sum(rabi_k * duration_k), in radians.
    pub fn total_area(&self) -> f64 {
        self.pulses.iter().map(|p| p.rabi() * p.duration()).sum()
    }

    /// Total area in units of pi.
    pub fn total_area_over_pi(&self) -> f64 {
        self.total_area() / PI
    }

    /// Sum of pulse durations, in units of T.
    pub fn total_duration(&self) -> f64 {
        self.pulses.iter().map(Pulse::duration).sum()
    }

    /// Same sequence with every carrier phase shifted by `chi`.
    pub fn shift_all_phases(&self, chi: f64) -> Self {
        Self {
            pulses: self.pulses.iter().map(|p| p.shifted(chi)).collect(),
            params: self.params,
            name: self.name.clone(),
        }
    }

    /// Appends `other` after this sequence; both must share the ladder
    /// parameters.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.params != other.params {
            return Err(Error::MismatchedParams);
        }
        let mut pulses = self.pulses.clone();
        pulses.extend_from_slice(&other.pulses);
        Ok(Self { pulses, params: self.params, name: None })
    }

    pub fn to_json(&self) -> Result<String> {
        let file = SequenceFile {
            name: self.name.clone(),
            delta_t: self.params.delta(),
            pulses: self
                .pulses
                .iter()
                .map(|p| PulseSpec {
                    rabi_over_pi: p.rabi() / PI,
                    phase_over_pi: p.phase() / PI,
                    duration_t: p.duration(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SequenceFile = serde_json::from_str(text)?;
        let params = SystemParams::new(file.delta_t)?;
        let pulses = file
            .pulses
            .iter()
            .map(|p| Pulse::new(p.rabi_over_pi * PI, p.phase_over_pi * PI, p.duration_t))
            .collect::<Result<Vec<_>>>()?;
        let seq = Self::new(pulses, params)?;
        Ok(match file.name {
            Some(name) => seq.with_name(name),
            None => seq,
        })
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk form; amplitudes and phases in units of pi, durations in T.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(rename = "delta_T")]
    delta_t: f64,
    pulses: Vec<PulseSpec>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PulseSpec {
    rabi_over_pi: f64,
    phase_over_pi: f64,
    #[serde(rename = "duration_T")]
    duration_t: f64,
}
