//! Sweeps of figures of merit over the relative amplitude error, robustness
//! summaries, and CSV emission.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{
    gate_fidelity, populations_from_ground, PopulationTriple, TargetGate,
};
use crate::sequence::CompositeSequence;

/// Uniform closed grid over the relative amplitude error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct EpsilonGrid {
    lo: f64,
    hi: f64,
    n_points: usize,
}

impl EpsilonGrid {
    /// A grid with at least two points; the drive must stay physical, so
    /// `lo` has to exceed -1.
    pub fn new(lo: f64, hi: f64, n_points: usize) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidGrid("endpoints must be finite".into()));
        }
        if !(lo < hi) {
            return Err(Error::InvalidGrid(format!("need lo < hi, got {lo}:{hi}")));
        }
        if n_points < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points for a range, got {n_points}"
            )));
        }
        if lo <= -1.0 {
            return Err(Error::InvalidGrid(format!("lo = {lo} crosses the eps > -1 domain")));
        }
        Ok(Self { lo, hi, n_points })
    }

    /// A degenerate one-point grid, for merits at a single error value.
    pub fn single(eps: f64) -> Result<Self> {
        if !eps.is_finite() || eps <= -1.0 {
            return Err(Error::InvalidGrid(format!("eps = {eps} outside the eps > -1 domain")));
        }
        Ok(Self { lo: eps, hi: eps, n_points: 1 })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Grid nodes, ascending; both endpoints are exact.
    pub fn points(&self) -> Vec<f64> {
        if self.n_points == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.n_points - 1) as f64;
        let mut pts: Vec<f64> = (0..self.n_points).map(|i| self.lo + i as f64 * step).collect();
        *pts.last_mut().expect("n_points >= 1") = self.hi;
        pts
    }

    /// Whether the closed range brackets eps = 0.
    pub fn brackets_zero(&self) -> bool {
        self.lo <= 0.0 && self.hi >= 0.0
    }

    /// Whether some node sits at eps = 0 up to rounding.
    pub fn has_zero_node(&self) -> bool {
        self.points().iter().any(|e| e.abs() <= 1e-12)
    }
}

impl Default for EpsilonGrid {
    fn default() -> Self {
        Self { lo: -0.5, hi: 0.5, n_points: 201 }
    }
}

impl fmt::Display for EpsilonGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.n_points)
    }
}

/// `lo:hi:n` (a one-point grid needs lo == hi and n == 1).
impl FromStr for EpsilonGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidGrid(format!("expected lo:hi:n, got {s:?}")));
        }
        let lo: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| Error::InvalidGrid(format!("bad lower endpoint {:?}", parts[0])))?;
        let hi: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| Error::InvalidGrid(format!("bad upper endpoint {:?}", parts[1])))?;
        let n: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| Error::InvalidGrid(format!("bad point count {:?}", parts[2])))?;
        if n == 1 && lo == hi {
            Self::single(lo)
        } else {
            Self::new(lo, hi, n)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    lo: f64,
    hi: f64,
    n_points: usize,
}

impl TryFrom<RawGrid> for EpsilonGrid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        if raw.n_points == 1 && raw.lo == raw.hi {
            Self::single(raw.lo)
        } else {
            Self::new(raw.lo, raw.hi, raw.n_points)
        }
    }
}

impl From<EpsilonGrid> for RawGrid {
    fn from(g: EpsilonGrid) -> Self {
        Self { lo: g.lo, hi: g.hi, n_points: g.n_points }
    }
}

/// Per-node records of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub enum ProfileData {
    Populations(Vec<PopulationTriple>),
    Fidelity(Vec<f64>),
}

/// Identifying metadata carried into CSV output.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileMeta {
    pub sequence_name: String,
    pub target: String,
    pub delta_t: f64,
}

/// A swept figure of merit with its grid and provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonProfile {
    grid: EpsilonGrid,
    eps: Vec<f64>,
    data: ProfileData,
    meta: ProfileMeta,
}

impl EpsilonProfile {
    pub fn grid(&self) -> &EpsilonGrid {
        &self.grid
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn data(&self) -> &ProfileData {
        &self.data
    }

    pub fn meta(&self) -> &ProfileMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    /// Relabels the target recorded in the metadata.
    pub fn with_target(mut self, label: impl Into<String>) -> Self {
        self.meta.target = label.into();
        self
    }

    /// Scalar merit per node: excited-state population for population scans,
    /// fidelity for gate scans.
    pub fn merits(&self) -> Vec<f64> {
        match &self.data {
            ProfileData::Populations(rows) => rows.iter().map(|p| p.p1).collect(),
            ProfileData::Fidelity(rows) => rows.clone(),
        }
    }

    fn mode_token(&self) -> &'static str {
        match self.data {
            ProfileData::Populations(_) => "populations",
            ProfileData::Fidelity(_) => "fidelity",
        }
    }

    /// Writes the profile as CSV: one `#` metadata line, a header, then one
    /// row per grid node with 12 significant digits.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(
            w,
            "# sequence={} target={} delta_T={} mode={}",
            self.meta.sequence_name,
            self.meta.target,
            self.meta.delta_t,
            self.mode_token()
        )?;
        match &self.data {
            ProfileData::Populations(rows) => {
                writeln!(w, "epsilon,p0,p1,p2")?;
                for (e, p) in self.eps.iter().zip(rows) {
                    writeln!(w, "{e:.11e},{:.11e},{:.11e},{:.11e}", p.p0, p.p1, p.p2)?;
                }
            }
            ProfileData::Fidelity(rows) => {
                writeln!(w, "epsilon,fidelity")?;
                for (e, f) in self.eps.iter().zip(rows) {
                    writeln!(w, "{e:.11e},{f:.11e}")?;
                }
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("CSV output is ASCII"))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        self.write_csv(&mut file)?;
        Ok(())
    }
}

fn meta_for(seq: &CompositeSequence, target: &str) -> ProfileMeta {
    ProfileMeta {
        sequence_name: seq.name().unwrap_or("unnamed").to_string(),
        target: target.to_string(),
        delta_t: seq.params().delta(),
    }
}

/// Level populations from the ground state at every grid node.
pub fn scan_populations(seq: &CompositeSequence, grid: &EpsilonGrid) -> Result<EpsilonProfile> {
    let eps = grid.points();
    let mut rows = Vec::with_capacity(eps.len());
    for &e in &eps {
        let pops = populations_from_ground(&seq.compose(e)?);
        assert!(
            (pops.sum() - 1.0).abs() < 1e-10,
            "populations must stay normalized (sum deviation {})",
            (pops.sum() - 1.0).abs()
        );
        rows.push(pops);
    }
    Ok(EpsilonProfile {
        grid: *grid,
        eps,
        data: ProfileData::Populations(rows),
        meta: meta_for(seq, "populations"),
    })
}

/// Gate fidelity against `gate` at every grid node.
pub fn scan_fidelity(
    seq: &CompositeSequence,
    gate: &TargetGate,
    grid: &EpsilonGrid,
) -> Result<EpsilonProfile> {
    let eps = grid.points();
    let mut rows = Vec::with_capacity(eps.len());
    for &e in &eps {
        rows.push(gate_fidelity(&seq.compose(e)?, gate));
    }
    Ok(EpsilonProfile {
        grid: *grid,
        eps,
        data: ProfileData::Fidelity(rows),
        meta: meta_for(seq, "gate"),
    })
}

/// Robustness numbers extracted from a profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobustnessSummary {
    /// Extent in eps of the contiguous above-threshold run containing the
    /// node nearest 0.
    pub width: f64,
    /// Minimum merit over the whole grid.
    pub worst: f64,
    /// Merit at the node nearest 0.
    pub center: f64,
}

/// Summarizes how flat and wide a merit profile is around eps = 0.
pub fn robustness_summary(profile: &EpsilonProfile, threshold: f64) -> Result<RobustnessSummary> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidThreshold(threshold));
    }
    if !profile.grid().brackets_zero() {
        return Err(Error::GridExcludesZero);
    }
    let eps = profile.eps();
    let merits = profile.merits();
    let center_idx = eps
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.abs().total_cmp(&b.abs()))
        .map(|(i, _)| i)
        .expect("grids are non-empty");
    let worst = merits.iter().copied().fold(f64::INFINITY, f64::min);
    let center = merits[center_idx];
    let width = if center < threshold {
        0.0
    } else {
        let mut left = center_idx;
        while left > 0 && merits[left - 1] >= threshold {
            left -= 1;
        }
        let mut right = center_idx;
        while right + 1 < merits.len() && merits[right + 1] >= threshold {
            right += 1;
        }
        eps[right] - eps[left]
    };
    Ok(RobustnessSummary { width, worst, center })
}
