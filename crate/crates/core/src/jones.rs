//! 2×2 complex Jones matrices.

use std::ops::{Mul, MulAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Row-major 2×2 complex matrix: `[[j11, j12], [j21, j22]]`.
///
/// Column `c` is the field seen at the two receive polarizations when light
/// is launched on polarization `c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jones(pub [[Complex64; 2]; 2]);

impl Default for Jones {
    fn default() -> Self {
        Self::identity()
    }
}

impl Jones {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Jones([[one, zero], [zero, one]])
    }

    pub fn zero() -> Self {
        Jones([[Complex64::new(0.0, 0.0); 2]; 2])
    }

    pub fn scalar(s: Complex64) -> Self {
        Jones::identity() * s
    }

    /// Real rotation by `angle` radians: `[[c, -s], [s, c]]`.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Jones([
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ])
    }

    /// General SU(2) element parameterised by three angles, times a common
    /// phase. Any unitary 2×2 matrix is reachable.
    pub fn unitary(theta: f64, phi: f64, psi: f64, common: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let a = Complex64::from_polar(c, phi);
        let b = Complex64::from_polar(s, psi);
        let g = Complex64::from_polar(1.0, common);
        Jones([[a * g, -b.conj() * g], [b * g, a.conj() * g]])
    }

    pub fn from_columns(c0: [Complex64; 2], c1: [Complex64; 2]) -> Self {
        Jones([[c0[0], c1[0]], [c0[1], c1[1]]])
    }

    pub fn column(&self, c: usize) -> [Complex64; 2] {
        [self.0[0][c], self.0[1][c]]
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Jones([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    /// Squared Frobenius norm.
    pub fn norm_sqr(&self) -> f64 {
        self.elements().iter().map(|z| z.norm_sqr()).sum()
    }

    /// Elements in row-major order.
    pub fn elements(&self) -> [Complex64; 4] {
        [self.0[0][0], self.0[0][1], self.0[1][0], self.0[1][1]]
    }

    /// Max absolute deviation of `J·J† / (|J|²/2)` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let scale = self.norm_sqr() / 2.0;
        if scale == 0.0 {
            return f64::INFINITY;
        }
        let p = *self * self.adjoint();
        let id = Jones::identity();
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((p.0[r][c] / scale - id.0[r][c]).norm());
            }
        }
        worst
    }

    /// Removes the common amplitude and phase: `J / sqrt(det J)`, with the
    /// square-root branch chosen so that `Re(trace) >= 0`.
    pub fn normalized(&self) -> Self {
        let d = self.det();
        if d.norm() == 0.0 {
            let n = (self.norm_sqr() / 2.0).sqrt();
            return if n == 0.0 { *self } else { *self * Complex64::new(1.0 / n, 0.0) };
        }
        let mut out = *self * (1.0 / d.sqrt());
        if out.trace().re < 0.0 {
            out = out * Complex64::new(-1.0, 0.0);
        }
        out
    }

    /// Interleaved `[re, im]` of the four elements, row-major.
    pub fn to_reals(&self) -> [f64; 8] {
        let e = self.elements();
        [
            e[0].re, e[0].im, e[1].re, e[1].im, e[2].re, e[2].im, e[3].re, e[3].im,
        ]
    }

    pub fn from_reals(r: [f64; 8]) -> Self {
        Jones([
            [Complex64::new(r[0], r[1]), Complex64::new(r[2], r[3])],
            [Complex64::new(r[4], r[5]), Complex64::new(r[6], r[7])],
        ])
    }
}

impl Mul for Jones {
    type Output = Jones;

    fn mul(self, rhs: Jones) -> Jones {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Jones(out)
    }
}

impl MulAssign for Jones {
    fn mul_assign(&mut self, rhs: Jones) {
        *self = *self * rhs;
    }
}

impl Mul<Complex64> for Jones {
    type Output = Jones;

    fn mul(self, s: Complex64) -> Jones {
        let mut out = self.0;
        for row in out.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        Jones(out)
    }
}

impl Mul<f64> for Jones {
    type Output = Jones;

    fn mul(self, s: f64) -> Jones {
        self * Complex64::new(s, 0.0)
    }
}
