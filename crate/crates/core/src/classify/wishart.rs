use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherency::Coherency;
use crate::error::{Error, Result};
use crate::raster::{CoherencyImage, Grid, LabelRaster};

/// Per-pixel class labels with the class centres.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMap {
    pub labels: LabelRaster,
    pub centers: Vec<Coherency>,
}

impl ClassMap {
    pub fn class_count(&self) -> usize {
        self.centers.len()
    }
}

/// Stopping rule of the Wishart iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WishartConfig {
    pub max_iter: usize,
    /// Stop when fewer than this fraction of pixels change label.
    pub min_change: f64,
}

impl Default for WishartConfig {
    fn default() -> Self {
        WishartConfig {
            max_iter: 10,
            min_change: 0.001,
        }
    }
}

/// Iteration trace.
#[derive(Debug, Clone, PartialEq)]
pub struct WishartRun {
    pub map: ClassMap,
    /// Label changes per iteration.
    pub changes: Vec<usize>,
}

/// Precomputed `(ln|V|, V⁻¹)` of a regularized centre.
#[derive(Debug, Clone, Copy)]
pub struct Center {
    ln_det: f64,
    inverse: Coherency,
}

impl Center {
    pub fn new(v: &Coherency) -> Self {
        let r = v.regularized();
        Center {
            ln_det: r.ln_det_regularized(),
            inverse: r.inverse().expect("regularized matrix is invertible"),
        }
    }

    /// Wishart distance `ln|V| + Tr(V⁻¹ T)`.
    pub fn distance(&self, t: &Coherency) -> f64 {
        self.ln_det + self.inverse.trace_product(t)
    }
}

/// Mean coherency per label; classes without pixels get `None`.
pub fn class_means(
    img: &CoherencyImage,
    labels: &LabelRaster,
    classes: usize,
) -> Vec<Option<Coherency>> {
    let mut sum = vec![Coherency::ZERO; classes];
    let mut count = vec![0usize; classes];
    for (t, &l) in img.pixels().as_slice().iter().zip(labels.as_slice()) {
        if (l as usize) < classes {
            sum[l as usize] += *t;
            count[l as usize] += 1;
        }
    }
    sum.iter()
        .zip(&count)
        .map(|(s, &c)| (c > 0).then(|| *s * (1.0 / c as f64)))
        .collect()
}

/// Nearest centre of every pixel (ties to the smaller id).
pub fn assign(img: &CoherencyImage, centers: &[Coherency]) -> LabelRaster {
    let pre: Vec<Center> = centers.iter().map(Center::new).collect();
    let (w, h) = img.shape();
    let labels: Vec<u32> = img
        .pixels()
        .as_slice()
        .par_iter()
        .map(|t| {
            let mut best = (f64::INFINITY, 0u32);
            for (m, c) in pre.iter().enumerate() {
                let d = c.distance(t);
                if d < best.0 {
                    best = (d, m as u32);
                }
            }
            best.1
        })
        .collect();
    Grid::from_vec(w, h, labels).expect("length matches")
}

/// Sum of Wishart distances of every pixel to its class centre.
pub fn wishart_objective(img: &CoherencyImage, labels: &LabelRaster, centers: &[Coherency]) -> f64 {
    let pre: Vec<Center> = centers.iter().map(Center::new).collect();
    img.pixels()
        .as_slice()
        .iter()
        .zip(labels.as_slice())
        .map(|(t, &l)| pre[l as usize].distance(t))
        .sum()
}

/// Drops empty classes and renumbers the rest in order.
fn compact(labels: &LabelRaster, means: Vec<Option<Coherency>>) -> (LabelRaster, Vec<Coherency>) {
    let mut remap = vec![u32::MAX; means.len()];
    let mut centers = Vec::new();
    for (i, m) in means.into_iter().enumerate() {
        if let Some(m) = m {
            remap[i] = centers.len() as u32;
            centers.push(m);
        }
    }
    (labels.map(|&l| remap[l as usize]), centers)
}

/// Iterative complex-Wishart classification from an initial labelling:
/// centres from the current labels, then reassignment to the nearest
/// centre, until fewer than `min_change` of the pixels change or
/// `max_iter` iterations ran. Empty classes are dropped.
pub fn wishart_iterate(
    img: &CoherencyImage,
    init: &LabelRaster,
    cfg: &WishartConfig,
) -> Result<WishartRun> {
    init.ensure_shape(img.shape())?;
    let classes = init
        .as_slice()
        .iter()
        .copied()
        .max()
        .map_or(0, |m| m as usize + 1);
    let (mut labels, mut centers) = compact(init, class_means(img, init, classes));
    if centers.is_empty() {
        return Err(Error::InvalidParameter("initial class map is empty".into()));
    }
    let n = labels.len();
    let mut changes = Vec::new();
    for _ in 0..cfg.max_iter {
        let next = assign(img, &centers);
        let changed = next
            .as_slice()
            .iter()
            .zip(labels.as_slice())
            .filter(|(a, b)| a != b)
            .count();
        changes.push(changed);
        let (l, c) = compact(&next, class_means(img, &next, centers.len()));
        labels = l;
        centers = c;
        if (changed as f64) < cfg.min_change * n as f64 {
            break;
        }
    }
    Ok(WishartRun {
        map: ClassMap { labels, centers },
        changes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Layout;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn recovers_two_classes_from_noisy_init() {
        // surface vs dihedral: different mechanisms, well separated per pixel
        let scene = Layout::Mosaic {
            classes: 2,
            tile: 32,
        }
        .sample(64, 64, 4, 2)
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let init = scene
            .truth
            .map(|&l| if rng.random_bool(0.1) { 1 - l } else { l });
        let run = wishart_iterate(&scene.image, &init, &WishartConfig::default()).unwrap();
        assert!(run.changes.len() <= 5);
        let agree = run
            .map
            .labels
            .as_slice()
            .iter()
            .zip(scene.truth.as_slice())
            .filter(|(a, b)| a == b)
            .count();
        assert!(agree as f64 / 4096.0 >= 0.99, "{agree}");
    }

    #[test]
    fn fixed_point_has_no_changes() {
        let scene = Layout::TwoClassEdge { contrast_db: 6.0 }
            .sample(32, 32, 4, 3)
            .unwrap();
        let first = wishart_iterate(
            &scene.image,
            &scene.truth,
            &WishartConfig {
                max_iter: 50,
                min_change: 0.0,
            },
        )
        .unwrap();
        let again = wishart_iterate(
            &scene.image,
            &first.map.labels,
            &WishartConfig {
                max_iter: 1,
                min_change: 0.0,
            },
        )
        .unwrap();
        assert_eq!(again.changes, vec![0]);
    }

    #[test]
    fn argmin_invariant_under_power_scaling() {
        let scene = Layout::Mosaic {
            classes: 3,
            tile: 8,
        }
        .sample(24, 24, 4, 4)
        .unwrap();
        let centers: Vec<Coherency> = scene.class_matrices.clone();
        let a = assign(&scene.image, &centers);
        let scaled: Vec<Coherency> = centers.iter().map(|c| *c * 7.5).collect();
        let b = assign(&scene.image.scaled(7.5), &scaled);
        assert_eq!(a, b);
    }

    #[test]
    fn empty_classes_are_dropped() {
        let img = CoherencyImage::constant(4, 4, Coherency::identity(), 1.0);
        let init = Grid::filled(4, 4, 3);
        let run = wishart_iterate(&img, &init, &WishartConfig::default()).unwrap();
        assert_eq!(run.map.class_count(), 1);
        assert!(run.map.labels.as_slice().iter().all(|&l| l == 0));
    }
}
