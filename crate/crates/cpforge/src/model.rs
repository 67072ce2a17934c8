//! Physical types and exact single-pulse propagators for the driven
//! three-level ladder in the rotating frame.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Entrywise Hermiticity tolerance for accepted Hamiltonians.
pub const HERMITICITY_TOL: f64 = 1e-14;
/// Max-norm unitarity tolerance for accepted propagators.
pub const UNITARITY_TOL: f64 = 1e-12;

/// System parameters: the anharmonicity `delta` in units of 1/T (the pulse
/// duration T is the time unit; hbar = 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    delta: f64,
}

impl SystemParams {
    /// Creates parameters with a positive anharmonicity.
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::NonPositiveDelta(delta));
        }
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// One rectangular drive segment: Rabi amplitude (rad/T, non-negative),
/// carrier phase (rad, stored unwrapped) and duration (units of T).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pulse {
    rabi: f64,
    phase: f64,
    duration: f64,
}

impl Pulse {
    pub fn new(rabi: f64, phase: f64, duration: f64) -> Result<Self> {
        if !(rabi >= 0.0) || !rabi.is_finite() {
            return Err(Error::NegativeRabi(rabi));
        }
        if !phase.is_finite() {
            return Err(Error::NegativeRabi(phase));
        }
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::NonPositiveDuration(duration));
        }
        Ok(Self { rabi, phase, duration })
    }

    /// A pulse of the default unit duration T = 1.
    pub fn unit(rabi: f64, phase: f64) -> Result<Self> {
        Self::new(rabi, phase, 1.0)
    }

    pub fn rabi(&self) -> f64 {
        self.rabi
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Copy of this pulse with the phase shifted by `chi`.
    pub fn shifted(&self, chi: f64) -> Self {
        Self { phase: self.phase + chi, ..*self }
    }
}

/// Rotating-frame Hamiltonian of the driven ladder (3x3 Hermitian).
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian3(Matrix3<Complex64>);

impl Hamiltonian3 {
    /// Wraps a matrix, rejecting non-Hermitian input.
    pub fn from_matrix(m: Matrix3<Complex64>) -> Result<Self> {
        let mut dev = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if dev > HERMITICITY_TOL {
            return Err(Error::NonHermitian(dev));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix3<Complex64> {
        &self.0
    }
}

/// Unitary 3x3 evolution operator.
#[derive(Clone, Debug, PartialEq)]
pub struct Propagator3(Matrix3<Complex64>);

impl Propagator3 {
    /// Wraps a matrix, rejecting non-unitary input.
    pub fn from_matrix(m: Matrix3<Complex64>) -> Result<Self> {
        let dev = unitarity_defect(&m);
        let det_dev = (m.determinant().norm() - 1.0).abs();
        if dev > UNITARITY_TOL || det_dev > UNITARITY_TOL {
            return Err(Error::NonUnitary(dev.max(det_dev)));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix3<Complex64> {
        &self.0
    }

    /// ||U†U - I|| in max norm.
    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.0)
    }
}

/// Max-norm deviation of `m` from unitarity.
pub fn unitarity_defect(m: &Matrix3<Complex64>) -> f64 {
    let gram = m.adjoint() * m;
    let mut dev = 0.0_f64;
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::default() };
            dev = dev.max((gram[(i, j)] - target).norm());
        }
    }
    dev
}

/// Ladder level frequency: (omega + delta/2)·n - (delta/2)·n².
///
/// `n` is the level index; the unsigned type makes negative levels
/// unrepresentable.
pub fn level_frequency(n: u32, omega: f64, delta: f64) -> f64 {
    let n = f64::from(n);
    (omega + delta / 2.0) * n - (delta / 2.0) * n * n
}

/// Builds the driven-ladder Hamiltonian for a pulse with a common relative
/// amplitude error `eps`:
/// H = (1/2)·[[0, W, 0], [W*, 0, √2·W], [0, √2·W*, -2δ]], W = Ω(1+eps)e^{iφ}.
pub fn build_hamiltonian(pulse: &Pulse, eps: f64, params: &SystemParams) -> Result<Hamiltonian3> {
    if !(eps > -1.0) || !eps.is_finite() {
        return Err(Error::EpsOutOfRange(eps));
    }
    let drive = Complex64::from_polar(pulse.rabi() * (1.0 + eps) / 2.0, pulse.phase());
    let sqrt2 = 2.0_f64.sqrt();
    let z = Complex64::default();
    let m = Matrix3::new(
        z,
        drive,
        z,
        drive.conj(),
        z,
        sqrt2 * drive,
        z,
        sqrt2 * drive.conj(),
        Complex64::new(-params.delta(), 0.0),
    );
    Ok(Hamiltonian3(m))
}

/// Evolution operator U = exp(-iHt) via spectral decomposition of the
/// Hermitian matrix.
pub fn propagate(h: &Hamiltonian3, t: f64) -> Result<Propagator3> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::NonPositiveTime(t));
    }
    let eig = h.0.symmetric_eigen();
    let phases = Vector3::from_iterator(
        eig.eigenvalues.iter().map(|&w| Complex64::from_polar(1.0, -w * t)),
    );
    let u = &eig.eigenvectors * Matrix3::from_diagonal(&phases) * eig.eigenvectors.adjoint();
    Propagator3::from_matrix(u)
}

/// Diagonal frame change D(chi) = diag(1, e^{-i chi}, e^{-2i chi}); shifting
/// every pulse phase by chi conjugates the propagator by this matrix.
pub fn phase_frame(chi: f64) -> Matrix3<Complex64> {
    Matrix3::from_diagonal(&Vector3::new(
        Complex64::new(1.0, 0.0),
        Complex64::from_polar(1.0, -chi),
        Complex64::from_polar(1.0, -2.0 * chi),
    ))
}
