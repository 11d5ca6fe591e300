//! Synthetic complex-Wishart scenes with planted ground truth.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherency::Coherency;
use crate::error::{Error, Result};
use crate::raster::{CoherencyImage, Grid, LabelRaster};

const CHOLESKY_JITTER: f64 = 1e-12;

/// A sampled scene together with the class layout it was drawn from.
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub image: CoherencyImage,
    /// Ground-truth class per pixel (indexes `truth_names`).
    pub truth: LabelRaster,
    /// Class id per pixel used for sampling (indexes `class_matrices`).
    pub layout: LabelRaster,
    pub class_matrices: Vec<Coherency>,
    pub seed: u64,
}

/// Canonical single-mechanism-dominated coherency matrices.
pub mod canonical {
    use super::*;

    /// Odd-bounce (surface) scattering: low entropy, low alpha.
    pub fn surface() -> Coherency {
        Coherency {
            t11: 1.0,
            t22: 0.12,
            t33: 0.04,
            t12: Complex64::new(0.08, 0.02),
            ..Coherency::ZERO
        }
    }

    /// Even-bounce (dihedral) scattering: low entropy, high alpha.
    pub fn dihedral() -> Coherency {
        Coherency {
            t11: 0.12,
            t22: 1.0,
            t33: 0.05,
            t12: Complex64::new(0.06, -0.02),
            ..Coherency::ZERO
        }
    }

    /// Volume scattering: high entropy, medium alpha.
    pub fn volume() -> Coherency {
        Coherency {
            t11: 0.55,
            t22: 0.5,
            t33: 0.42,
            t12: Complex64::new(0.04, 0.0),
            ..Coherency::ZERO
        }
    }
}

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

/// Planted scene layouts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Layout {
    /// Single surface class everywhere.
    Uniform,
    /// Left half vs right half, right half brighter by `contrast_db`.
    TwoClassEdge { contrast_db: f64 },
    /// Horizontal bright line of `line_width` rows through the centre.
    BrightLine { contrast_db: f64, line_width: usize },
    /// Bright dihedral squares of side `dot` on a `pitch` grid.
    DotGrid {
        contrast_db: f64,
        dot: usize,
        pitch: usize,
    },
    /// `classes` scattering classes tiled in `tile × tile` blocks.
    Mosaic { classes: usize, tile: usize },
    /// Urban-like composite: a dot-grid quadrant (top-left) over a volume
    /// ground, one long bright line across the lower half and a flat surface
    /// background.
    Urban { contrast_db: f64 },
}

/// Class layout plus truth raster for a [`Layout`].
#[derive(Debug, Clone)]
pub struct PlantedLayout {
    pub classes: LabelRaster,
    pub class_matrices: Vec<Coherency>,
    pub truth: LabelRaster,
    pub truth_names: Vec<String>,
}

/// Geometry of the urban composite, shared with tests that score against it.
#[derive(Debug, Clone, Copy)]
pub struct UrbanGeometry {
    /// Dot-grid quadrant `[x0, x1) × [y0, y1)`.
    pub quadrant: (usize, usize, usize, usize),
    pub dot: usize,
    pub pitch: usize,
    /// Bright line rows `[row0, row1)` and columns `[col0, col1)`.
    pub line: (usize, usize, usize, usize),
}

impl UrbanGeometry {
    pub fn for_size(width: usize, height: usize) -> Self {
        let qx = width / 2;
        let qy = height / 2;
        let dot = 6;
        let pitch = 12;
        let row0 = height * 3 / 4;
        UrbanGeometry {
            quadrant: (0, qx, 0, qy),
            dot,
            pitch,
            line: (row0, row0 + 3, width / 8, width * 7 / 8),
        }
    }

    pub fn in_quadrant(&self, x: usize, y: usize) -> bool {
        let (x0, x1, y0, y1) = self.quadrant;
        x >= x0 && x < x1 && y >= y0 && y < y1
    }

    pub fn in_line(&self, x: usize, y: usize) -> bool {
        let (r0, r1, c0, c1) = self.line;
        y >= r0 && y < r1 && x >= c0 && x < c1
    }

    pub fn in_dot(&self, x: usize, y: usize) -> bool {
        if !self.in_quadrant(x, y) {
            return false;
        }
        // the grid is anchored at the far (background-facing) corner so the
        // outer dots touch the quadrant boundary
        let (_, x1, _, y1) = self.quadrant;
        (x1 - 1 - x) % self.pitch < self.dot && (y1 - 1 - y) % self.pitch < self.dot
    }
}

impl Layout {
    pub fn build(&self, width: usize, height: usize) -> Result<PlantedLayout> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(
                "scene size must be positive".into(),
            ));
        }
        let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let planted = match *self {
            Layout::Uniform => PlantedLayout {
                classes: Grid::filled(width, height, 0),
                class_matrices: vec![canonical::surface()],
                truth: Grid::filled(width, height, 0),
                truth_names: names(&["uniform"]),
            },
            Layout::TwoClassEdge { contrast_db } => {
                let classes = Grid::from_fn(width, height, |x, _| u32::from(x >= width / 2));
                PlantedLayout {
                    truth: classes.clone(),
                    classes,
                    class_matrices: vec![
                        canonical::surface(),
                        canonical::surface() * db(contrast_db),
                    ],
                    truth_names: names(&["left", "right"]),
                }
            }
            Layout::BrightLine {
                contrast_db,
                line_width,
            } => {
                if line_width == 0 || line_width > height {
                    return Err(Error::InvalidParameter("invalid line width".into()));
                }
                let r0 = (height - line_width) / 2;
                let classes = Grid::from_fn(width, height, |_, y| {
                    u32::from(y >= r0 && y < r0 + line_width)
                });
                PlantedLayout {
                    truth: classes.clone(),
                    classes,
                    class_matrices: vec![
                        canonical::surface(),
                        canonical::surface() * db(contrast_db),
                    ],
                    truth_names: names(&["background", "line"]),
                }
            }
            Layout::DotGrid {
                contrast_db,
                dot,
                pitch,
            } => {
                if dot == 0 || pitch <= dot {
                    return Err(Error::InvalidParameter(
                        "dot grid needs 0 < dot < pitch".into(),
                    ));
                }
                let off = (pitch - dot) / 2;
                let classes = Grid::from_fn(width, height, |x, y| {
                    let (lx, ly) = (x % pitch, y % pitch);
                    u32::from(lx >= off && lx < off + dot && ly >= off && ly < off + dot)
                });
                PlantedLayout {
                    truth: classes.clone(),
                    classes,
                    class_matrices: vec![
                        canonical::surface(),
                        canonical::dihedral() * db(contrast_db),
                    ],
                    truth_names: names(&["ground", "dot"]),
                }
            }
            Layout::Mosaic { classes, tile } => {
                if classes == 0 || tile == 0 {
                    return Err(Error::InvalidParameter(
                        "mosaic needs classes, tile >= 1".into(),
                    ));
                }
                let tiles_x = width.div_ceil(tile);
                let ids = Grid::from_fn(width, height, |x, y| {
                    (((x / tile) + (y / tile) * tiles_x) % classes) as u32
                });
                let base = [
                    canonical::surface(),
                    canonical::dihedral(),
                    canonical::volume(),
                ];
                let class_matrices = (0..classes)
                    .map(|c| base[c % 3] * db(6.0 * (c / 3) as f64))
                    .collect();
                PlantedLayout {
                    truth: ids.clone(),
                    classes: ids,
                    class_matrices,
                    truth_names: (0..classes).map(|c| format!("class{c}")).collect(),
                }
            }
            Layout::Urban { contrast_db } => {
                let g = UrbanGeometry::for_size(width, height);
                // 0 background surface, 1 urban ground, 2 buildings, 3 line
                let classes = Grid::from_fn(width, height, |x, y| {
                    if g.in_line(x, y) {
                        3
                    } else if g.in_dot(x, y) {
                        2
                    } else if g.in_quadrant(x, y) {
                        1
                    } else {
                        0
                    }
                });
                let truth = Grid::from_fn(width, height, |x, y| {
                    if g.in_line(x, y) {
                        2
                    } else if g.in_quadrant(x, y) {
                        1
                    } else {
                        0
                    }
                });
                PlantedLayout {
                    classes,
                    class_matrices: vec![
                        canonical::surface(),
                        canonical::volume() * db(2.0),
                        canonical::dihedral() * db(2.0 + contrast_db),
                        canonical::dihedral() * db(contrast_db),
                    ],
                    truth,
                    truth_names: names(&["background", "urban", "line"]),
                }
            }
        };
        Ok(planted)
    }

    /// Builds the layout and samples it.
    pub fn sample(
        &self,
        width: usize,
        height: usize,
        looks: usize,
        seed: u64,
    ) -> Result<SyntheticScene> {
        let planted = self.build(width, height)?;
        let mut scene =
            sample_wishart_scene(&planted.classes, &planted.class_matrices, looks, seed)?;
        scene.truth = planted.truth;
        Ok(scene)
    }
}

fn sampling_factor(class: usize, c: &Coherency) -> Result<[[Complex64; 3]; 3]> {
    let invalid = |reason: &str| Error::InvalidCovariance {
        class,
        reason: reason.to_string(),
    };
    if !c.is_finite() || c.t11 < 0.0 || c.t22 < 0.0 || c.t33 < 0.0 {
        return Err(invalid("non-finite or negative diagonal"));
    }
    let tr = c.trace();
    if tr == 0.0 {
        return Ok([[Complex64::new(0.0, 0.0); 3]; 3]);
    }
    if !c.is_psd(1e-9) {
        return Err(invalid("not positive semidefinite"));
    }
    let jitter = CHOLESKY_JITTER * tr / 3.0;
    let mut loaded = *c;
    loaded.t11 += jitter;
    loaded.t22 += jitter;
    loaded.t33 += jitter;
    if let Some(l) = loaded.cholesky() {
        return Ok(l);
    }
    // PSD within tolerance but not factorable: use V·sqrt(Λ).
    let e = c.eigen();
    let mut f = [[Complex64::new(0.0, 0.0); 3]; 3];
    for (k, (&lam, v)) in e.values.iter().zip(e.vectors.iter()).enumerate() {
        let s = lam.max(0.0).sqrt();
        for r in 0..3 {
            f[r][k] = v[r] * s;
        }
    }
    Ok(f)
}

/// Draws a multilook complex-Wishart scene: each pixel is
/// `(1/looks) Σ z z^H` with `z ~ CN(0, C_class)`.
///
/// Every pixel has its own RNG stream derived from `(seed, pixel index)`, so
/// the result is independent of evaluation order.
pub fn sample_wishart_scene(
    layout: &LabelRaster,
    class_matrices: &[Coherency],
    looks: usize,
    seed: u64,
) -> Result<SyntheticScene> {
    if looks == 0 {
        return Err(Error::InvalidParameter("looks must be >= 1".into()));
    }
    let factors = class_matrices
        .iter()
        .enumerate()
        .map(|(i, c)| sampling_factor(i, c))
        .collect::<Result<Vec<_>>>()?;
    if let Some(&bad) = layout
        .as_slice()
        .iter()
        .find(|&&c| c as usize >= factors.len())
    {
        return Err(Error::InvalidParameter(format!(
            "layout references class {bad} but only {} class matrices given",
            factors.len()
        )));
    }
    let (w, h) = layout.shape();
    let inv_looks = 1.0 / looks as f64;
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let data: Vec<Coherency> = layout
        .as_slice()
        .par_iter()
        .enumerate()
        .map(|(idx, &class)| {
            let l = &factors[class as usize];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(idx as u64);
            let mut acc = Coherency::ZERO;
            for _ in 0..looks {
                let mut g = [Complex64::new(0.0, 0.0); 3];
                for gi in g.iter_mut() {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    *gi = Complex64::new(re * scale, im * scale);
                }
                let mut z = [Complex64::new(0.0, 0.0); 3];
                for (zr, lr) in z.iter_mut().zip(l) {
                    for (lrk, gk) in lr.iter().zip(&g) {
                        *zr += lrk * gk;
                    }
                }
                acc += Coherency::outer(&z);
            }
            acc * inv_looks
        })
        .collect();
    let image = CoherencyImage::new(Grid::from_vec(w, h, data)?, looks as f64)?;
    Ok(SyntheticScene {
        image,
        truth: layout.clone(),
        layout: layout.clone(),
        class_matrices: class_matrices.to_vec(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn high_look_sample_converges_to_class_matrix() {
        let c = canonical::volume();
        let layout = Grid::filled(64, 64, 0);
        let scene = sample_wishart_scene(&layout, &[c], 512, 7).unwrap();
        let mut mean = Coherency::ZERO;
        for t in scene.image.pixels().as_slice() {
            mean += *t;
        }
        mean = mean * (1.0 / (64.0 * 64.0));
        assert!((mean - c).frobenius() / c.frobenius() < 0.05);
        // per-pixel as well
        let worst = scene
            .image
            .pixels()
            .as_slice()
            .iter()
            .map(|t| (*t - c).frobenius() / c.frobenius())
            .fold(0.0, f64::max);
        assert!(worst < 0.5, "worst per-pixel error {worst}");
    }

    #[test]
    fn zero_class_gives_zero_pixels() {
        let layout = Grid::filled(4, 4, 0);
        let s = sample_wishart_scene(&layout, &[Coherency::ZERO], 3, 1).unwrap();
        assert!(s
            .image
            .pixels()
            .as_slice()
            .iter()
            .all(|t| *t == Coherency::ZERO));
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let l = Layout::Mosaic {
            classes: 3,
            tile: 8,
        };
        let a = l.sample(32, 24, 4, 99).unwrap();
        let b = l.sample(32, 24, 4, 99).unwrap();
        assert_eq!(a.image, b.image);
        let c = l.sample(32, 24, 4, 100).unwrap();
        assert_ne!(a.image, c.image);
    }

    #[test]
    fn rejects_non_psd_class() {
        let bad = Coherency {
            t11: 1.0,
            t22: 1.0,
            t12: Complex64::new(2.0, 0.0),
            ..Coherency::ZERO
        };
        let layout = Grid::filled(2, 2, 0);
        assert!(matches!(
            sample_wishart_scene(&layout, &[bad], 1, 0),
            Err(Error::InvalidCovariance { .. })
        ));
    }

    #[test]
    fn rank_deficient_class_is_sampled() {
        let layout = Grid::filled(4, 4, 0);
        let s = sample_wishart_scene(&layout, &[Coherency::diag(1.0, 0.0, 0.0)], 4, 3).unwrap();
        for t in s.image.pixels().as_slice() {
            assert!(t.t11 > 0.0);
            assert!(t.t22 < 1e-9 && t.t33 < 1e-9);
        }
        s.image.validate().unwrap();
    }

    #[test]
    fn mosaic_counts_match_tile_enumeration() {
        let (w, h, tile, n) = (50usize, 40usize, 16usize, 3usize);
        let p = Layout::Mosaic { classes: n, tile }.build(w, h).unwrap();
        let mut want = vec![0usize; n];
        let tiles_x = w.div_ceil(tile);
        for ty in 0..h.div_ceil(tile) {
            for tx in 0..tiles_x {
                let tw = tile.min(w - tx * tile);
                let th = tile.min(h - ty * tile);
                want[(tx + ty * tiles_x) % n] += tw * th;
            }
        }
        let mut got = vec![0usize; n];
        for &c in p.classes.as_slice() {
            got[c as usize] += 1;
        }
        assert_eq!(got, want);
    }

    #[test]
    fn canonical_classes_are_psd() {
        for c in [
            canonical::surface(),
            canonical::dihedral(),
            canonical::volume(),
        ] {
            assert!(c.is_psd(0.0));
        }
    }
}
