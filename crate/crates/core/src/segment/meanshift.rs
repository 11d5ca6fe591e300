use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::partition::SuperpixelPartition;
use crate::error::{Error, Result};
use crate::raster::{CoherencyImage, Grid};

/// Mean-shift parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeanShiftConfig {
    /// Spatial bandwidth (pixels).
    pub h_spatial: f64,
    /// Range bandwidth on the log-Pauli powers (dB).
    pub h_range: f64,
    /// Regions smaller than this are merged into their closest neighbour.
    pub min_region: usize,
    pub max_iter: usize,
}

impl Default for MeanShiftConfig {
    fn default() -> Self {
        MeanShiftConfig {
            h_spatial: 7.0,
            h_range: 6.5,
            min_region: 20,
            max_iter: 20,
        }
    }
}

type Feature = [f64; 3];

fn db(v: f64) -> f64 {
    10.0 * v.max(1e-30).log10()
}

/// Pauli powers `T11, T22, T33` in dB.
pub fn log_pauli(img: &CoherencyImage) -> Grid<Feature> {
    img.pixels().map(|t| [db(t.t11), db(t.t22), db(t.t33)])
}

fn dist2(a: &Feature, b: &Feature) -> f64 {
    (0..3).map(|i| (a[i] - b[i]) * (a[i] - b[i])).sum()
}

/// Flat-kernel mean-shift filtering in the joint (x, y, log-Pauli) domain.
/// Returns the converged range value of every pixel.
pub fn mean_shift_filter(features: &Grid<Feature>, cfg: &MeanShiftConfig) -> Grid<Feature> {
    let (w, h) = features.shape();
    let hs = cfg.h_spatial;
    let hs2 = hs * hs;
    let hr2 = cfg.h_range * cfg.h_range;
    let r = hs.floor() as i64;
    let out: Vec<Feature> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (mut sx, mut sy) = ((i % w) as f64, (i / w) as f64);
            let mut fr = *features.get(i % w, i / w);
            for _ in 0..cfg.max_iter {
                let (cx, cy) = (sx.round() as i64, sy.round() as i64);
                let (mut ax, mut ay, mut af, mut n) = (0.0, 0.0, [0.0; 3], 0usize);
                for y in (cy - r).max(0)..=(cy + r).min(h as i64 - 1) {
                    for x in (cx - r).max(0)..=(cx + r).min(w as i64 - 1) {
                        let (dx, dy) = (x as f64 - sx, y as f64 - sy);
                        if dx * dx + dy * dy > hs2 {
                            continue;
                        }
                        let f = features.get(x as usize, y as usize);
                        if dist2(f, &fr) > hr2 {
                            continue;
                        }
                        ax += x as f64;
                        ay += y as f64;
                        for k in 0..3 {
                            af[k] += f[k];
                        }
                        n += 1;
                    }
                }
                if n == 0 {
                    break;
                }
                let inv = 1.0 / n as f64;
                let (nx, ny) = (ax * inv, ay * inv);
                let nf = [af[0] * inv, af[1] * inv, af[2] * inv];
                let shift = ((nx - sx).powi(2) + (ny - sy).powi(2)) / hs2 + dist2(&nf, &fr) / hr2;
                sx = nx;
                sy = ny;
                fr = nf;
                if shift < 1e-4 {
                    break;
                }
            }
            fr
        })
        .collect();
    Grid::from_vec(w, h, out).expect("length matches")
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Groups 4-neighbours whose filtered values are closer than half the range
/// bandwidth, then merges regions below `min_region` pixels into the
/// neighbour with the closest mean value, smallest regions first.
pub fn group_modes(filtered: &Grid<Feature>, cfg: &MeanShiftConfig) -> Grid<u32> {
    let (w, h) = filtered.shape();
    let n = w * h;
    let lim = (cfg.h_range / 2.0).powi(2);
    let mut parent: Vec<usize> = (0..n).collect();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let f = filtered.get(x, y);
            let mut join = |j: usize, g: &Feature| {
                if dist2(f, g) < lim {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            };
            if x + 1 < w {
                join(i + 1, filtered.get(x + 1, y));
            }
            if y + 1 < h {
                join(i + w, filtered.get(x, y + 1));
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();

    // region statistics keyed by root pixel
    let mut count = vec![0usize; n];
    let mut sum = vec![[0.0f64; 3]; n];
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let a = roots[i];
            count[a] += 1;
            for k in 0..3 {
                sum[a][k] += filtered.get(x, y)[k];
            }
            for j in [(x + 1 < w).then(|| i + 1), (y + 1 < h).then(|| i + w)]
                .into_iter()
                .flatten()
            {
                let b = roots[j];
                if a != b {
                    adj[a].insert(b);
                    adj[b].insert(a);
                }
            }
        }
    }
    let mean = |r: usize, count: &[usize], sum: &[[f64; 3]]| {
        let c = count[r] as f64;
        [sum[r][0] / c, sum[r][1] / c, sum[r][2] / c]
    };
    loop {
        let mut small: Vec<(usize, usize)> = (0..n)
            .filter(|&r| {
                parent[r] == r && count[r] > 0 && count[r] < cfg.min_region && !adj[r].is_empty()
            })
            .map(|r| (count[r], r))
            .collect();
        if small.is_empty() {
            break;
        }
        small.sort_unstable();
        let mut merged_any = false;
        for (_, r) in small {
            if parent[r] != r || count[r] >= cfg.min_region || adj[r].is_empty() {
                continue;
            }
            let mr = mean(r, &count, &sum);
            let target = adj[r]
                .iter()
                .copied()
                .min_by(|&a, &b| {
                    dist2(&mean(a, &count, &sum), &mr)
                        .total_cmp(&dist2(&mean(b, &count, &sum), &mr))
                        .then(a.cmp(&b))
                })
                .expect("non-empty");
            let (keep, gone) = (r.min(target), r.max(target));
            parent[gone] = keep;
            count[keep] += count[gone];
            count[gone] = 0;
            let s = sum[gone];
            for k in 0..3 {
                sum[keep][k] += s[k];
            }
            let moved = std::mem::take(&mut adj[gone]);
            for o in moved {
                adj[o].remove(&gone);
                if o != keep {
                    adj[o].insert(keep);
                    adj[keep].insert(o);
                }
            }
            adj[keep].remove(&keep);
            merged_any = true;
        }
        if !merged_any {
            break;
        }
    }
    Grid::from_fn(w, h, |x, y| find(&mut parent, roots[y * w + x]) as u32)
}

/// Mean-shift superpixels of a coherency image.
pub fn mean_shift_superpixels(
    img: &CoherencyImage,
    cfg: &MeanShiftConfig,
) -> Result<SuperpixelPartition> {
    if !(cfg.h_spatial > 0.0 && cfg.h_range > 0.0) {
        return Err(Error::InvalidParameter(
            "mean-shift bandwidths must be positive".into(),
        ));
    }
    let filtered = mean_shift_filter(&log_pauli(img), cfg);
    SuperpixelPartition::from_labels(&group_modes(&filtered, cfg), img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherency::Coherency;
    use crate::data::Layout;

    #[test]
    fn constant_image_is_one_region() {
        let img = CoherencyImage::constant(30, 20, Coherency::diag(1.0, 0.3, 0.1), 4.0);
        let p = mean_shift_superpixels(&img, &MeanShiftConfig::default()).unwrap();
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn small_regions_are_absorbed() {
        let img = CoherencyImage::new(
            Grid::from_fn(20, 20, |x, y| {
                if (x, y) == (10, 10) {
                    Coherency::diag(100.0, 30.0, 10.0)
                } else {
                    Coherency::diag(1.0, 0.3, 0.1)
                }
            }),
            4.0,
        )
        .unwrap();
        let p = mean_shift_superpixels(&img, &MeanShiftConfig::default()).unwrap();
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn two_class_regions_are_pure() {
        let scene = Layout::TwoClassEdge { contrast_db: 12.0 }
            .sample(64, 64, 4, 5)
            .unwrap();
        let p = mean_shift_superpixels(&scene.image, &MeanShiftConfig::default()).unwrap();
        let mut pure = 0;
        for members in p.members() {
            let ones = members
                .iter()
                .filter(|&&i| scene.truth.as_slice()[i] == 1)
                .count();
            pure += ones.max(members.len() - ones);
        }
        let frac = pure as f64 / (64.0 * 64.0);
        assert!(frac >= 0.95, "purity {frac}");
        assert!(p.len() > 1);
    }
}
