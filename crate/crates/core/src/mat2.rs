//! Minimal 2×2 complex matrices acting on a single two-level spin.
//!
//! Basis order is `(|g⟩, |e⟩)`. The Pauli matrices follow the sign convention
//! used throughout the crate: `σ_z|g⟩ = −|g⟩`, `σ_z|e⟩ = |e⟩`, with the usual
//! `σ_x` and `σ_y = [[0, −i], [i, 0]]` written in that order.

use std::ops::Mul;

use num_complex::Complex64 as C64;

/// A 2×2 complex matrix in row-major order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);
    pub const SIGMA_X: Mat2 = Mat2([[ZERO, ONE], [ONE, ZERO]]);
    pub const SIGMA_Y: Mat2 = Mat2([[ZERO, C64::new(0.0, -1.0)], [I, ZERO]]);
    pub const SIGMA_Z: Mat2 = Mat2([[C64::new(-1.0, 0.0), ZERO], [ZERO, ONE]]);

    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Mat2([[a, ZERO], [ZERO, d]])
    }

    pub fn scale(&self, k: C64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * k, m[0][1] * k], [m[1][0] * k, m[1][1] * k]])
    }

    pub fn add(&self, other: &Mat2) -> Self {
        let (a, b) = (&self.0, &other.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }

    pub fn sub(&self, other: &Mat2) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `‖U†U − I‖` in the Frobenius norm.
    pub fn unitarity_defect(&self) -> f64 {
        (self.adjoint() * *self).sub(&Mat2::IDENTITY).norm()
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Mat2(out)
    }
}
