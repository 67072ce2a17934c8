//! Figures of merit: level populations from the ground state, transfer cost
//! against target populations, and qubit-subspace gate fidelity.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Propagator3, Pulse, SystemParams, UNITARITY_TOL};
use crate::sequence::CompositeSequence;

/// Populations of the three levels after the evolution acts on |0>.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PopulationTriple {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
}

impl PopulationTriple {
    pub fn sum(&self) -> f64 {
        self.p0 + self.p1 + self.p2
    }

    /// Population left outside the qubit subspace.
    pub fn leakage(&self) -> f64 {
        self.p2
    }
}

/// p_i = |<i|U|0>|^2.
pub fn populations_from_ground(u: &Propagator3) -> PopulationTriple {
    let m = u.matrix();
    PopulationTriple {
        p0: m[(0, 0)].norm_sqr(),
        p1: m[(1, 0)].norm_sqr(),
        p2: m[(2, 0)].norm_sqr(),
    }
}

/// Target ground/excited-state populations for a transfer problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferTarget {
    p0: f64,
    p1: f64,
}

impl TransferTarget {
    pub fn new(p0: f64, p1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) || !(0.0..=1.0).contains(&p1) {
            return Err(Error::InvalidTransferTarget(p0, p1));
        }
        Ok(Self { p0, p1 })
    }

    /// Complete population inversion: (P0, P1) = (0, 1).
    pub fn full_transfer() -> Self {
        Self { p0: 0.0, p1: 1.0 }
    }

    /// Equal superposition of populations: (P0, P1) = (1/2, 1/2).
    pub fn half_transfer() -> Self {
        Self { p0: 0.5, p1: 0.5 }
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }
}

/// |P0 - p0| + |P1 - p1|.
pub fn transfer_cost(pops: &PopulationTriple, target: &TransferTarget) -> f64 {
    (target.p0 - pops.p0).abs() + (target.p1 - pops.p1).abs()
}

/// Single-qubit target unitary, compared against the qubit block of a
/// three-level propagator.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetGate(Matrix2<Complex64>);

impl TargetGate {
    pub fn x() -> Self {
        let z = Complex64::default();
        let one = Complex64::new(1.0, 0.0);
        Self(Matrix2::new(z, one, one, z))
    }

    pub fn h() -> Self {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self(Matrix2::new(s, s, s, -s))
    }

    pub fn t() -> Self {
        let z = Complex64::default();
        Self(Matrix2::new(
            Complex64::new(1.0, 0.0),
            z,
            z,
            Complex64::from_polar(1.0, PI / 4.0),
        ))
    }

    /// Wraps an arbitrary matrix, rejecting non-unitary input.
    pub fn custom(m: Matrix2<Complex64>) -> Result<Self> {
        let gram = m.adjoint() * m;
        let mut dev = 0.0_f64;
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::default() };
                dev = dev.max((gram[(i, j)] - target).norm());
            }
        }
        if dev > UNITARITY_TOL {
            return Err(Error::NonUnitary(dev));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }
}

/// Looks up X, H or T by name (case-insensitive).
pub fn standard_gate(name: &str) -> Result<TargetGate> {
    match name.to_ascii_uppercase().as_str() {
        "X" => Ok(TargetGate::x()),
        "H" => Ok(TargetGate::h()),
        "T" => Ok(TargetGate::t()),
        _ => Err(Error::UnknownGate(name.to_string())),
    }
}

/// F = |Tr(Q G^dag)| / 2 with Q the upper-left 2x2 block of U. Insensitive
/// to a global phase of the block; sensitive to leakage, which shrinks the
/// block below unitarity.
pub fn gate_fidelity(u: &Propagator3, gate: &TargetGate) -> f64 {
    let m = u.matrix();
    let q = Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    block_fidelity(&q, gate)
}

/// Same figure of merit for an arbitrary (not necessarily unitary) qubit
/// block; linear in the block, so a scalar factor c multiplies it by |c|.
pub fn block_fidelity(q: &Matrix2<Complex64>, gate: &TargetGate) -> f64 {
    (q * gate.0.adjoint()).trace().norm() / 2.0
}

/// The naive one-pulse realization a composite sequence is judged against:
/// a resonant pi pulse for X and a pi/2 pulse about the y axis for H. T has
/// no one-pulse counterpart.
pub fn single_pulse_reference(gate_name: &str, delta_t: f64) -> Result<CompositeSequence> {
    let params = SystemParams::new(delta_t)?;
    let (rabi, phase) = match gate_name.to_ascii_uppercase().as_str() {
        "X" => (PI, 0.0),
        "H" => (PI / 2.0, PI / 2.0),
        "T" => return Err(Error::NoSinglePulseReference(gate_name.to_string())),
        _ => return Err(Error::UnknownGate(gate_name.to_string())),
    };
    let seq = CompositeSequence::new(vec![Pulse::unit(rabi, phase)?], params)?;
    Ok(seq.with_name(format!("single-{}", gate_name.to_ascii_uppercase())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::Matrix3;

    #[test]
    fn standard_gates_are_unitary_and_t_has_order_eight() {
        for name in ["X", "h", "t"] {
            let g = standard_gate(name).unwrap();
            assert!(TargetGate::custom(*g.matrix()).is_ok());
        }
        let t = standard_gate("T").unwrap();
        let mut acc = Matrix2::identity();
        for _ in 0..8 {
            acc = t.matrix() * acc;
        }
        let dev = (acc - Matrix2::<Complex64>::identity())
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-14);
        assert!(matches!(standard_gate("Y"), Err(Error::UnknownGate(_))));
    }

    #[test]
    fn non_unitary_custom_gates_are_rejected() {
        let m = Matrix2::new(
            Complex64::new(0.5, 0.0),
            Complex64::default(),
            Complex64::default(),
            Complex64::new(1.0, 0.0),
        );
        assert!(matches!(TargetGate::custom(m), Err(Error::NonUnitary(_))));
    }

    #[test]
    fn identity_against_t_gives_the_half_angle_cosine() {
        let u = Propagator3::from_matrix(Matrix3::identity()).unwrap();
        let f = gate_fidelity(&u, &TargetGate::t());
        assert_abs_diff_eq!(f, (PI / 8.0).cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(gate_fidelity(&u, &TargetGate::x()), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn transfer_cost_examples() {
        let perfect = PopulationTriple { p0: 0.0, p1: 1.0, p2: 0.0 };
        assert_eq!(transfer_cost(&perfect, &TransferTarget::full_transfer()), 0.0);
        let pops = PopulationTriple { p0: 0.25, p1: 0.7, p2: 0.05 };
        assert_abs_diff_eq!(
            transfer_cost(&pops, &TransferTarget::half_transfer()),
            0.45,
            epsilon = 1e-15
        );
        assert!(matches!(
            TransferTarget::new(-0.1, 0.5),
            Err(Error::InvalidTransferTarget(_, _))
        ));
        assert!(matches!(
            TransferTarget::new(0.0, 1.2),
            Err(Error::InvalidTransferTarget(_, _))
        ));
    }

    #[test]
    fn populations_sum_to_one_for_unitary_evolution() {
        let params = SystemParams::new(0.5).unwrap();
        let seq = CompositeSequence::new(
            vec![Pulse::unit(2.2, 0.4).unwrap(), Pulse::unit(1.1, 2.9).unwrap()],
            params,
        )
        .unwrap();
        let pops = populations_from_ground(&seq.compose(0.13).unwrap());
        assert_abs_diff_eq!(pops.sum(), 1.0, epsilon = 1e-12);
        assert_eq!(pops.leakage(), pops.p2);
    }

    #[test]
    fn x_reference_reaches_the_two_level_limit() {
        // Frozen from an independent adaptive ODE integration.
        let seq = single_pulse_reference("X", 1e6).unwrap();
        let f = gate_fidelity(&seq.compose(0.0).unwrap(), &TargetGate::x());
        assert!((1.0 - f).abs() < 1e-3);
        assert_abs_diff_eq!(f, 0.99999999999629918, epsilon = 1e-9);
    }

    #[test]
    fn h_reference_fidelity_matches_the_oracle() {
        // A single resonant pulse cannot realize the target as a unitary, so
        // the figure of merit is small even though the pulse maps |0> onto
        // the intended superposition. Frozen from the ODE oracle.
        let seq = single_pulse_reference("H", 20.0).unwrap();
        let f = gate_fidelity(&seq.compose(0.0).unwrap(), &TargetGate::h());
        assert_abs_diff_eq!(f, 0.018558024871736335, epsilon = 1e-9);
    }

    #[test]
    fn reference_pulse_domain_errors() {
        assert!(matches!(
            single_pulse_reference("T", 20.0),
            Err(Error::NoSinglePulseReference(_))
        ));
        assert!(matches!(
            single_pulse_reference("Q", 20.0),
            Err(Error::UnknownGate(_))
        ));
        let seq = single_pulse_reference("X", 20.0).unwrap();
        assert!(matches!(seq.compose(-1.0), Err(Error::EpsOutOfRange(_))));
    }
}
