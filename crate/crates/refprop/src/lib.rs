//! Reference propagators for small quantum systems, computed by adaptive
//! Runge-Kutta integration of the Schrödinger equation `U'(t) = -i H U(t)`.
//!
//! This crate exists to cross-check propagators produced by other methods
//! (e.g. spectral decomposition). It intentionally uses its own plain-array
//! complex arithmetic and shares no linear-algebra code with the crates it
//! verifies. Hamiltonians are piecewise constant: a drive protocol is a list
//! of [`Segment`]s integrated in order.

use num_complex::Complex64;

/// A 3x3 complex matrix as a plain nested array (row-major).
pub type Mat3 = [[Complex64; 3]; 3];

/// One piecewise-constant segment: a Hamiltonian held for a duration.
#[derive(Clone, Debug)]
pub struct Segment {
    pub hamiltonian: Mat3,
    pub duration: f64,
}

/// Integration error control.
#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14 }
    }
}

/// 3x3 identity.
pub fn identity() -> Mat3 {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    [[o, z, z], [z, o, z], [z, z, o]]
}

fn zeros() -> Mat3 {
    [[Complex64::new(0.0, 0.0); 3]; 3]
}

fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = zeros();
    for i in 0..3 {
        for k in 0..3 {
            let aik = a[i][k];
            for j in 0..3 {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

fn axpy(y: &mut Mat3, alpha: f64, x: &Mat3) {
    for i in 0..3 {
        for j in 0..3 {
            y[i][j] += alpha * x[i][j];
        }
    }
}

/// Right-hand side of the Schrödinger equation in propagator form: -i H U.
fn rhs(h: &Mat3, u: &Mat3) -> Mat3 {
    let minus_i = Complex64::new(0.0, -1.0);
    let mut hu = matmul(h, u);
    for row in hu.iter_mut() {
        for v in row.iter_mut() {
            *v *= minus_i;
        }
    }
    hu
}

// Dormand-Prince 5(4) coefficients.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B5: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One embedded RK5(4) step of size `h` from state `u`; returns the 5th-order
/// solution and the max-norm of the embedded error estimate scaled by the
/// tolerances (<= 1 means acceptable).
fn dp54_step(ham: &Mat3, u: &Mat3, h: f64, tol: Tolerances) -> (Mat3, f64) {
    let k1 = rhs(ham, u);

    let mut y = *u;
    axpy(&mut y, h * A2[0], &k1);
    let k2 = rhs(ham, &y);

    y = *u;
    axpy(&mut y, h * A3[0], &k1);
    axpy(&mut y, h * A3[1], &k2);
    let k3 = rhs(ham, &y);

    y = *u;
    axpy(&mut y, h * A4[0], &k1);
    axpy(&mut y, h * A4[1], &k2);
    axpy(&mut y, h * A4[2], &k3);
    let k4 = rhs(ham, &y);

    y = *u;
    axpy(&mut y, h * A5[0], &k1);
    axpy(&mut y, h * A5[1], &k2);
    axpy(&mut y, h * A5[2], &k3);
    axpy(&mut y, h * A5[3], &k4);
    let k5 = rhs(ham, &y);

    y = *u;
    axpy(&mut y, h * A6[0], &k1);
    axpy(&mut y, h * A6[1], &k2);
    axpy(&mut y, h * A6[2], &k3);
    axpy(&mut y, h * A6[3], &k4);
    axpy(&mut y, h * A6[4], &k5);
    let k6 = rhs(ham, &y);

    let mut u5 = *u;
    let ks = [&k1, &k2, &k3, &k4, &k5, &k6];
    for (b, k) in B5.iter().zip(ks) {
        axpy(&mut u5, h * b, k);
    }
    let k7 = rhs(ham, &u5);

    let mut u4 = *u;
    let ks4 = [&k1, &k2, &k3, &k4, &k5, &k6, &k7];
    for (b, k) in B4.iter().zip(ks4) {
        axpy(&mut u4, h * b, k);
    }

    let mut err = 0.0_f64;
    for i in 0..3 {
        for j in 0..3 {
            let e = (u5[i][j] - u4[i][j]).norm();
            let scale = tol.atol + tol.rtol * u5[i][j].norm().max(u[i][j].norm());
            err = err.max(e / scale);
        }
    }
    (u5, err)
}

/// Integrates one constant-Hamiltonian span of length `duration` starting
/// from `u0`, with adaptive step control.
fn integrate_constant(ham: &Mat3, u0: Mat3, duration: f64, tol: Tolerances) -> Mat3 {
    let mut u = u0;
    let mut t = 0.0;
    let norm_h: f64 = ham
        .iter()
        .flatten()
        .map(|v| v.norm())
        .fold(0.0, f64::max)
        .max(1e-12);
    let mut h = (0.1 / norm_h).min(duration);
    let h_min = duration * 1e-14;

    while t < duration {
        if t + h > duration {
            h = duration - t;
        }
        let (u_next, err) = dp54_step(ham, &u, h, tol);
        if err <= 1.0 {
            t += h;
            u = u_next;
            let grow = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
            h *= grow.clamp(0.2, 5.0);
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 0.9);
            assert!(h > h_min, "step size underflow in reference integrator");
        }
    }
    u
}

/// Propagator for a protocol of piecewise-constant segments, applied in list
/// order (the first segment acts first on the initial state).
pub fn propagate_segments(segments: &[Segment], tol: Tolerances) -> Mat3 {
    let mut u = identity();
    for seg in segments {
        u = integrate_constant(&seg.hamiltonian, u, seg.duration, tol);
    }
    u
}

/// Propagator for a single constant Hamiltonian over time `t`.
pub fn propagate_constant(hamiltonian: &Mat3, t: f64, tol: Tolerances) -> Mat3 {
    integrate_constant(hamiltonian, identity(), t, tol)
}

/// Max-norm distance between two matrices.
pub fn max_norm_diff(a: &Mat3, b: &Mat3) -> f64 {
    let mut d = 0.0_f64;
    for i in 0..3 {
        for j in 0..3 {
            d = d.max((a[i][j] - b[i][j]).norm());
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Ladder Hamiltonian used by the crates this one checks.
    fn ladder(omega: f64, phase: f64, delta: f64) -> Mat3 {
        let z = c(0.0, 0.0);
        let drive = c(0.0, phase).exp() * (omega / 2.0);
        let s2 = 2.0_f64.sqrt();
        [
            [z, drive, z],
            [drive.conj(), z, s2 * drive],
            [z, s2 * drive.conj(), c(-delta, 0.0)],
        ]
    }

    fn unitarity_defect(u: &Mat3) -> f64 {
        let mut d = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                let mut s = c(0.0, 0.0);
                for k in 0..3 {
                    s += u[k][i].conj() * u[k][j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                d = d.max((s - c(target, 0.0)).norm());
            }
        }
        d
    }

    #[test]
    fn zero_drive_is_analytic() {
        let h = ladder(0.0, 0.0, 0.5);
        let u = propagate_constant(&h, 1.0, Tolerances::default());
        let expected = c(0.0, 0.5).exp();
        assert!((u[0][0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((u[1][1] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((u[2][2] - expected).norm() < 1e-12);
        assert!(u[0][1].norm() < 1e-13 && u[1][2].norm() < 1e-13);
    }

    #[test]
    fn propagators_are_unitary() {
        for (omega, phase, delta) in [
            (std::f64::consts::PI, 0.3, 0.5),
            (2.5, 1.7, 20.0),
            (5.0, 4.0, 0.5),
        ] {
            let u = propagate_constant(&ladder(omega, phase, delta), 1.0, Tolerances::default());
            assert!(unitarity_defect(&u) < 1e-11);
        }
    }

    #[test]
    fn pi_pulse_in_two_level_limit_is_x_like() {
        let h = ladder(std::f64::consts::PI, 0.0, 1e3);
        let u = propagate_constant(&h, 1.0, Tolerances::default());
        assert!(u[0][0].norm() < 1e-2);
        assert!((u[1][0].norm() - 1.0).abs() < 1e-2);
        assert!(u[2][0].norm() < 1e-2);
    }

    #[test]
    fn segment_product_matches_single_run() {
        let h = ladder(1.3, 0.7, 0.5);
        let whole = propagate_constant(&h, 1.0, Tolerances::default());
        let halves = propagate_segments(
            &[
                Segment { hamiltonian: h, duration: 0.5 },
                Segment { hamiltonian: h, duration: 0.5 },
            ],
            Tolerances::default(),
        );
        assert!(max_norm_diff(&whole, &halves) < 1e-12);
    }

    #[test]
    fn tighter_tolerance_converges() {
        let h = ladder(2.0, 0.9, 20.0);
        let coarse = propagate_constant(&h, 1.0, Tolerances { rtol: 1e-6, atol: 1e-8 });
        let fine = propagate_constant(&h, 1.0, Tolerances::default());
        let finer = propagate_constant(&h, 1.0, Tolerances { rtol: 1e-13, atol: 1e-15 });
        assert!(max_norm_diff(&fine, &finer) < 1e-10);
        assert!(max_norm_diff(&coarse, &finer) < 1e-4);
        assert!(max_norm_diff(&coarse, &finer) > max_norm_diff(&fine, &finer));
    }
}
