//! The 3×3 Hermitian coherency matrix and the small amount of linear algebra
//! the rest of the crate needs on it.
//!
//! Matrices are stored as their upper triangle: three real diagonal powers
//! and three complex off-diagonal correlations. Everything downstream (window
//! averaging, log-determinants, Wishart distances) works on this compact form.

use std::ops::{Add, AddAssign, Mul, Sub};

use nalgebra::{Matrix3, SymmetricEigen};
use num_complex::Complex64;

/// Determinants at or below this value are treated as singular.
pub const DET_FLOOR: f64 = 1e-300;

/// Relative diagonal loading (times trace/3) applied to singular matrices.
pub const DIAGONAL_LOADING: f64 = 1e-10;

// Absolute loading used when the trace itself is zero.
const ABSOLUTE_LOADING: f64 = 1e-100;

/// Number of polarimetric channels of a coherency matrix.
pub const CHANNELS: usize = 3;

/// A 3×3 Hermitian coherency matrix `T`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Coherency {
    pub t11: f64,
    pub t22: f64,
    pub t33: f64,
    pub t12: Complex64,
    pub t13: Complex64,
    pub t23: Complex64,
}

/// Eigen-decomposition of a coherency matrix, eigenvalues sorted descending.
#[derive(Debug, Clone, Copy)]
pub struct Eigen {
    pub values: [f64; 3],
    /// `vectors[i]` is the unit eigenvector belonging to `values[i]`.
    pub vectors: [[Complex64; 3]; 3],
}

impl Coherency {
    pub const ZERO: Coherency = Coherency {
        t11: 0.0,
        t22: 0.0,
        t33: 0.0,
        t12: Complex64::new(0.0, 0.0),
        t13: Complex64::new(0.0, 0.0),
        t23: Complex64::new(0.0, 0.0),
    };

    pub fn identity() -> Self {
        Self::diag(1.0, 1.0, 1.0)
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        Coherency {
            t11: a,
            t22: b,
            t33: c,
            ..Self::ZERO
        }
    }

    /// Builds a coherency matrix from a full complex matrix, replacing it by
    /// its Hermitian part `(T + T^H) / 2`.
    pub fn from_matrix(m: &[[Complex64; 3]; 3]) -> Self {
        Coherency {
            t11: (m[0][0].re + m[0][0].re) / 2.0,
            t22: (m[1][1].re + m[1][1].re) / 2.0,
            t33: (m[2][2].re + m[2][2].re) / 2.0,
            t12: (m[0][1] + m[1][0].conj()) / 2.0,
            t13: (m[0][2] + m[2][0].conj()) / 2.0,
            t23: (m[1][2] + m[2][1].conj()) / 2.0,
        }
    }

    /// Outer product `k k^H` of a scattering vector.
    pub fn outer(k: &[Complex64; 3]) -> Self {
        Coherency {
            t11: k[0].norm_sqr(),
            t22: k[1].norm_sqr(),
            t33: k[2].norm_sqr(),
            t12: k[0] * k[1].conj(),
            t13: k[0] * k[2].conj(),
            t23: k[1] * k[2].conj(),
        }
    }

    pub fn to_matrix(&self) -> [[Complex64; 3]; 3] {
        let r = |x: f64| Complex64::new(x, 0.0);
        [
            [r(self.t11), self.t12, self.t13],
            [self.t12.conj(), r(self.t22), self.t23],
            [self.t13.conj(), self.t23.conj(), r(self.t33)],
        ]
    }

    pub fn trace(&self) -> f64 {
        self.t11 + self.t22 + self.t33
    }

    /// `self += w * other`
    #[inline]
    pub fn add_scaled(&mut self, w: f64, other: &Coherency) {
        self.t11 += w * other.t11;
        self.t22 += w * other.t22;
        self.t33 += w * other.t33;
        self.t12 += other.t12 * w;
        self.t13 += other.t13 * w;
        self.t23 += other.t23 * w;
    }

    /// Real 9-vector: three diagonal powers followed by the real and
    /// imaginary parts of `t12`, `t13`, `t23`.
    pub fn to_vec9(&self) -> [f64; 9] {
        [
            self.t11,
            self.t22,
            self.t33,
            self.t12.re,
            self.t12.im,
            self.t13.re,
            self.t13.im,
            self.t23.re,
            self.t23.im,
        ]
    }

    pub fn from_vec9(v: &[f64; 9]) -> Self {
        Coherency {
            t11: v[0],
            t22: v[1],
            t33: v[2],
            t12: Complex64::new(v[3], v[4]),
            t13: Complex64::new(v[5], v[6]),
            t23: Complex64::new(v[7], v[8]),
        }
    }

    /// Frobenius norm of the full 3×3 matrix.
    pub fn frobenius(&self) -> f64 {
        (self.t11 * self.t11
            + self.t22 * self.t22
            + self.t33 * self.t33
            + 2.0 * (self.t12.norm_sqr() + self.t13.norm_sqr() + self.t23.norm_sqr()))
        .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec9().iter().all(|v| v.is_finite())
    }

    /// Determinant by cofactor expansion (real for Hermitian matrices).
    pub fn det(&self) -> f64 {
        self.t11 * self.t22 * self.t33 + 2.0 * (self.t12 * self.t23 * self.t13.conj()).re
            - self.t11 * self.t23.norm_sqr()
            - self.t22 * self.t13.norm_sqr()
            - self.t33 * self.t12.norm_sqr()
    }

    /// LDL^H pivots. All positive iff the matrix is positive definite.
    fn ldl_pivots(&self) -> [f64; 3] {
        let d1 = self.t11;
        if d1 <= 0.0 {
            return [d1, 0.0, 0.0];
        }
        let l21 = self.t12.conj() / d1;
        let l31 = self.t13.conj() / d1;
        let d2 = self.t22 - l21.norm_sqr() * d1;
        if d2 <= 0.0 {
            return [d1, d2, 0.0];
        }
        let l32 = (self.t23.conj() - l31 * l21.conj() * d1) / d2;
        let d3 = self.t33 - l31.norm_sqr() * d1 - l32.norm_sqr() * d2;
        [d1, d2, d3]
    }

    /// Natural log of the determinant, or `None` when the matrix is not
    /// positive definite or its determinant is at or below [`DET_FLOOR`].
    pub fn ln_det(&self) -> Option<f64> {
        let [d1, d2, d3] = self.ldl_pivots();
        if d1 > 0.0 && d2 > 0.0 && d3 > 0.0 {
            let ln = d1.ln() + d2.ln() + d3.ln();
            if ln > DET_FLOOR.ln() {
                return Some(ln);
            }
        }
        None
    }

    /// Returns the matrix itself when it is safely positive definite,
    /// otherwise a diagonally loaded copy that is.
    pub fn regularized(&self) -> Coherency {
        if self.ln_det().is_some() {
            return *self;
        }
        let mut load = (DIAGONAL_LOADING * self.trace().max(0.0) / 3.0).max(ABSOLUTE_LOADING);
        loop {
            let mut c = *self;
            c.t11 += load;
            c.t22 += load;
            c.t33 += load;
            if c.ln_det().is_some() {
                return c;
            }
            load *= 10.0;
        }
    }

    /// Log-determinant after regularization; always finite.
    pub fn ln_det_regularized(&self) -> f64 {
        self.regularized()
            .ln_det()
            .expect("regularized matrix is positive definite")
    }

    /// Inverse via the adjugate. `None` when singular.
    pub fn inverse(&self) -> Option<Coherency> {
        let det = self.det();
        if !(det.abs() > DET_FLOOR) {
            return None;
        }
        let inv = 1.0 / det;
        Some(Coherency {
            t11: (self.t22 * self.t33 - self.t23.norm_sqr()) * inv,
            t22: (self.t11 * self.t33 - self.t13.norm_sqr()) * inv,
            t33: (self.t11 * self.t22 - self.t12.norm_sqr()) * inv,
            t12: (self.t13 * self.t23.conj() - self.t12 * self.t33) * inv,
            t13: (self.t12 * self.t23 - self.t13 * self.t22) * inv,
            t23: (self.t13 * self.t12.conj() - self.t23 * self.t11) * inv,
        })
    }

    /// `Tr(self · other)` for two Hermitian matrices.
    pub fn trace_product(&self, other: &Coherency) -> f64 {
        self.t11 * other.t11
            + self.t22 * other.t22
            + self.t33 * other.t33
            + 2.0
                * ((self.t12 * other.t12.conj()).re
                    + (self.t13 * other.t13.conj()).re
                    + (self.t23 * other.t23.conj()).re)
    }

    /// Congruence `A T A^H`.
    pub fn congruence(&self, a: &[[Complex64; 3]; 3]) -> Coherency {
        let t = self.to_matrix();
        let mut at = [[Complex64::new(0.0, 0.0); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    at[i][j] += a[i][k] * t[k][j];
                }
            }
        }
        let mut out = [[Complex64::new(0.0, 0.0); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    out[i][j] += at[i][k] * a[j][k].conj();
                }
            }
        }
        Coherency::from_matrix(&out)
    }

    /// Lower Cholesky factor `L` with `T = L L^H`. `None` if not positive
    /// definite.
    pub fn cholesky(&self) -> Option<[[Complex64; 3]; 3]> {
        let m = self.to_matrix();
        let mut l = [[Complex64::new(0.0, 0.0); 3]; 3];
        for j in 0..3 {
            let mut d = m[j][j].re;
            for k in 0..j {
                d -= l[j][k].norm_sqr();
            }
            if !(d > 0.0) {
                return None;
            }
            let djj = d.sqrt();
            l[j][j] = Complex64::new(djj, 0.0);
            for i in (j + 1)..3 {
                let mut s = m[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k].conj();
                }
                l[i][j] = s / djj;
            }
        }
        Some(l)
    }

    /// Eigen-decomposition, eigenvalues descending. Each eigenvector is
    /// rotated so its first component is real and non-negative.
    pub fn eigen(&self) -> Eigen {
        let m = self.to_matrix();
        let na = Matrix3::from_fn(|i, j| m[i][j]);
        let eig = SymmetricEigen::new(na);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut values = [0.0; 3];
        let mut vectors = [[Complex64::new(0.0, 0.0); 3]; 3];
        for (slot, &idx) in order.iter().enumerate() {
            values[slot] = eig.eigenvalues[idx];
            let col = eig.eigenvectors.column(idx);
            let first = col[0];
            let phase = if first.norm() > 0.0 {
                first.conj() / first.norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            for r in 0..3 {
                vectors[slot][r] = col[r] * phase;
            }
            vectors[slot][0] = Complex64::new(vectors[slot][0].norm(), 0.0);
        }
        Eigen { values, vectors }
    }

    /// True when the matrix is Hermitian PSD up to `tol` relative to its
    /// trace (Hermitian-ness is structural here).
    pub fn is_psd(&self, tol: f64) -> bool {
        if !self.is_finite() {
            return false;
        }
        let scale = self.trace().abs().max(f64::MIN_POSITIVE);
        let e = self.eigen();
        e.values[2] >= -tol * scale
    }
}

impl Add for Coherency {
    type Output = Coherency;
    fn add(mut self, rhs: Coherency) -> Coherency {
        self += rhs;
        self
    }
}

impl AddAssign for Coherency {
    fn add_assign(&mut self, rhs: Coherency) {
        self.add_scaled(1.0, &rhs);
    }
}

impl Sub for Coherency {
    type Output = Coherency;
    fn sub(mut self, rhs: Coherency) -> Coherency {
        self.add_scaled(-1.0, &rhs);
        self
    }
}

impl Mul<f64> for Coherency {
    type Output = Coherency;
    fn mul(self, s: f64) -> Coherency {
        Coherency {
            t11: self.t11 * s,
            t22: self.t22 * s,
            t33: self.t33 * s,
            t12: self.t12 * s,
            t13: self.t13 * s,
            t23: self.t23 * s,
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_psd(rng: &mut impl Rng) -> Coherency {
        let mut acc = Coherency::ZERO;
        for _ in 0..4 {
            let k = [
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            ];
            acc += Coherency::outer(&k);
        }
        acc
    }

    fn matmul(a: &[[Complex64; 3]; 3], b: &[[Complex64; 3]; 3]) -> [[Complex64; 3]; 3] {
        let mut out = [[Complex64::new(0.0, 0.0); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        out
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let t = random_psd(&mut rng);
            let p = matmul(&t.to_matrix(), &t.inverse().unwrap().to_matrix());
            for i in 0..3 {
                for j in 0..3 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((p[i][j] - Complex64::new(want, 0.0)).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn ln_det_agrees_with_cofactor_det() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let t = random_psd(&mut rng);
            assert!((t.ln_det().unwrap() - t.det().ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let t = random_psd(&mut rng);
            let e = t.eigen();
            assert!(e.values[0] >= e.values[1] && e.values[1] >= e.values[2]);
            let mut r = Coherency::ZERO;
            for i in 0..3 {
                r.add_scaled(e.values[i], &Coherency::outer(&e.vectors[i]));
                assert!(e.vectors[i][0].im == 0.0 && e.vectors[i][0].re >= 0.0);
            }
            assert!((r - t).frobenius() < 1e-9 * t.frobenius());
        }
    }

    #[test]
    fn zero_matrix_regularizes_to_finite_log_det() {
        let ld = Coherency::ZERO.ln_det_regularized();
        assert!(ld.is_finite());
        let rank_one = Coherency::diag(1.0, 0.0, 0.0);
        assert!(rank_one.ln_det().is_none());
        assert!(rank_one.ln_det_regularized().is_finite());
    }

    #[test]
    fn trace_product_matches_full_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_psd(&mut rng);
        let b = random_psd(&mut rng);
        let p = matmul(&a.to_matrix(), &b.to_matrix());
        let tr = p[0][0] + p[1][1] + p[2][2];
        assert!((tr.re - a.trace_product(&b)).abs() < 1e-12);
    }

    #[test]
    fn cholesky_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_psd(&mut rng);
        let l = t.cholesky().unwrap();
        let mut lh = [[Complex64::new(0.0, 0.0); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                lh[i][j] = l[j][i].conj();
            }
        }
        let r = Coherency::from_matrix(&matmul(&l, &lh));
        assert!((r - t).frobenius() < 1e-12);
    }
}
