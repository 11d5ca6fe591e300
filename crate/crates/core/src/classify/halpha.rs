use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherency::Coherency;
use crate::raster::{CoherencyImage, Grid, LabelRaster, ScalarRaster};

/// Entropy and mean alpha per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct HAlphaField {
    pub entropy: ScalarRaster,
    /// Mean alpha in degrees.
    pub alpha: ScalarRaster,
}

/// `(H, ᾱ)` of one coherency matrix. Zero-trace matrices give `(0, 0)`.
pub fn h_alpha_pixel(t: &Coherency) -> (f64, f64) {
    let e = t.eigen();
    let lam: Vec<f64> = e.values.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = lam.iter().sum();
    if !(total > 0.0) {
        return (0.0, 0.0);
    }
    let mut h = 0.0;
    let mut alpha = 0.0;
    for (l, v) in lam.iter().zip(e.vectors.iter()) {
        let p = l / total;
        if p > 0.0 {
            h -= p * p.ln() / 3f64.ln();
        }
        alpha += p * v[0].norm().min(1.0).acos().to_degrees();
    }
    (h.clamp(0.0, 1.0), alpha.clamp(0.0, 90.0))
}

pub fn h_alpha(img: &CoherencyImage) -> HAlphaField {
    let (w, h) = img.shape();
    let vals: Vec<(f64, f64)> = img
        .pixels()
        .as_slice()
        .par_iter()
        .map(h_alpha_pixel)
        .collect();
    HAlphaField {
        entropy: Grid::from_vec(w, h, vals.iter().map(|v| v.0).collect()).expect("length matches"),
        alpha: Grid::from_vec(w, h, vals.iter().map(|v| v.1).collect()).expect("length matches"),
    }
}

/// Zone boundaries of the H/α plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZoneBoundaries {
    /// Entropy splits between low, medium and high.
    pub entropy: [f64; 2],
    /// Alpha splits (degrees) within each entropy band.
    pub alpha_low_h: [f64; 2],
    pub alpha_medium_h: [f64; 2],
    pub alpha_high_h: [f64; 2],
    /// Keep the infeasible high-H low-α corner as its own zone (id 8).
    pub keep_infeasible: bool,
}

impl Default for ZoneBoundaries {
    fn default() -> Self {
        ZoneBoundaries {
            entropy: [0.5, 0.9],
            alpha_low_h: [42.5, 47.5],
            alpha_medium_h: [40.0, 50.0],
            alpha_high_h: [40.0, 55.0],
            keep_infeasible: false,
        }
    }
}

impl ZoneBoundaries {
    pub fn zone_count(&self) -> usize {
        if self.keep_infeasible {
            9
        } else {
            8
        }
    }
}

/// Zone id in `0..8`: 0 high-H high-α, 1 high-H medium-α (also takes the
/// infeasible high-H low-α corner), 2–4 medium H from high to low α, 5–7
/// low H from high to low α. With `keep_infeasible` that corner is zone 8.
pub fn zone(h: f64, alpha: f64, b: &ZoneBoundaries) -> u32 {
    let band = |a: [f64; 2]| {
        if alpha < a[0] {
            2
        } else if alpha < a[1] {
            1
        } else {
            0
        }
    };
    if h >= b.entropy[1] {
        match band(b.alpha_high_h) {
            2 if b.keep_infeasible => 8,
            z => z.min(1),
        }
    } else if h >= b.entropy[0] {
        2 + band(b.alpha_medium_h)
    } else {
        5 + band(b.alpha_low_h)
    }
}

/// Initial zone labelling of every pixel.
pub fn init_zones(field: &HAlphaField, b: &ZoneBoundaries) -> LabelRaster {
    let (w, h) = field.entropy.shape();
    Grid::from_fn(w, h, |x, y| {
        zone(*field.entropy.get(x, y), *field.alpha.get(x, y), b)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn canonical_targets() {
        let (h, a) = h_alpha_pixel(&Coherency::diag(1.0, 0.0, 0.0));
        assert!(h.abs() < 1e-6 && a.abs() < 1e-6);
        let (h, a) = h_alpha_pixel(&Coherency::diag(0.0, 1.0, 0.0));
        assert!(h.abs() < 1e-6 && (a - 90.0).abs() < 1e-6);
        assert_eq!(h_alpha_pixel(&Coherency::ZERO), (0.0, 0.0));
    }

    #[test]
    fn isotropic_has_unit_entropy() {
        let (h, a) = h_alpha_pixel(&(Coherency::identity() * (1.0 / 3.0)));
        assert!((h - 1.0).abs() < 1e-9);
        assert!((0.0..=90.0).contains(&a));
    }

    /// Eigen-decomposition of the real 6x6 embedding `[[Re, -Im], [Im, Re]]`,
    /// in which every eigenvalue appears twice.
    fn oracle(t: &Coherency) -> (f64, f64) {
        let m = t.to_matrix();
        let big = nalgebra::Matrix6::from_fn(|r, c| {
            let z: Complex64 = m[r % 3][c % 3];
            match (r < 3, c < 3) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        });
        let eig = SymmetricEigen::new(big);
        let mut pairs: Vec<(f64, f64)> = (0..6)
            .map(|i| {
                let v = eig.eigenvectors.column(i);
                let first = (v[0] * v[0] + v[3] * v[3]).sqrt() / v.norm();
                (
                    eig.eigenvalues[i].max(0.0),
                    first.min(1.0).acos().to_degrees(),
                )
            })
            .collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let distinct = [pairs[0], pairs[2], pairs[4]];
        let total: f64 = distinct.iter().map(|p| p.0).sum();
        let (mut h, mut a) = (0.0, 0.0);
        for (l, al) in distinct {
            let q = l / total;
            if q > 0.0 {
                h -= q * q.ln() / 3f64.ln();
            }
            a += q * al;
        }
        (h, a)
    }

    #[test]
    fn matches_independent_eigensolver() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let t = crate::coherency::tests::random_psd(&mut rng);
            let (h, a) = h_alpha_pixel(&t);
            let (ho, ao) = oracle(&t);
            assert!((h - ho).abs() < 1e-9, "{h} {ho}");
            assert!((a - ao).abs() < 1e-6, "{a} {ao}");
        }
    }

    #[test]
    fn zone_corners_and_lookup() {
        let b = ZoneBoundaries::default();
        assert_eq!(zone(0.0, 0.0, &b), 7);
        assert_eq!(zone(0.95, 60.0, &b), 0);
        assert_eq!(zone(0.95, 10.0, &b), 1);
        let nine = ZoneBoundaries {
            keep_infeasible: true,
            ..b
        };
        assert_eq!(zone(0.95, 10.0, &nine), 8);
        assert_eq!(nine.zone_count(), 9);
        let table = [
            (0.2, 45.0, 6),
            (0.2, 50.0, 5),
            (0.7, 30.0, 4),
            (0.7, 45.0, 3),
            (0.7, 70.0, 2),
            (0.95, 45.0, 1),
        ];
        for (h, a, z) in table {
            assert_eq!(zone(h, a, &b), z, "({h}, {a})");
        }
    }
}
