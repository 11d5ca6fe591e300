use std::collections::BTreeSet;

use crate::coherency::Coherency;
use crate::error::Result;
use crate::raster::{CoherencyImage, Grid, LabelRaster};

/// Pixel count and coherency sum of one region.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RegionStats {
    pub count: usize,
    pub sum: Coherency,
}

impl RegionStats {
    pub fn mean(&self) -> Coherency {
        if self.count == 0 {
            Coherency::ZERO
        } else {
            self.sum * (1.0 / self.count as f64)
        }
    }

    pub fn merged(&self, other: &RegionStats) -> RegionStats {
        RegionStats {
            count: self.count + other.count,
            sum: self.sum + other.sum,
        }
    }
}

/// A labelling of the raster into 4-connected regions with their statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelPartition {
    /// Region id per pixel, contiguous from 0.
    pub region_id: LabelRaster,
    pub regions: Vec<RegionStats>,
    /// 4-adjacent region pairs `(a, b)` with `a < b`, sorted.
    pub adjacency: Vec<(u32, u32)>,
}

impl SuperpixelPartition {
    /// Builds a partition from arbitrary labels. Ids are renumbered in raster
    /// order of first appearance; statistics are summed from `img`.
    pub fn from_labels(labels: &LabelRaster, img: &CoherencyImage) -> Result<Self> {
        labels.ensure_shape(img.shape())?;
        let (w, h) = labels.shape();
        let mut remap = std::collections::HashMap::new();
        let region_id = labels.map(|&l| {
            let next = remap.len() as u32;
            *remap.entry(l).or_insert(next)
        });
        let mut regions = vec![RegionStats::default(); remap.len()];
        let mut adj = BTreeSet::new();
        for y in 0..h {
            for x in 0..w {
                let id = *region_id.get(x, y);
                let r = &mut regions[id as usize];
                r.count += 1;
                r.sum += *img.get(x, y);
                if x + 1 < w {
                    let o = *region_id.get(x + 1, y);
                    if o != id {
                        adj.insert((id.min(o), id.max(o)));
                    }
                }
                if y + 1 < h {
                    let o = *region_id.get(x, y + 1);
                    if o != id {
                        adj.insert((id.min(o), id.max(o)));
                    }
                }
            }
        }
        Ok(SuperpixelPartition {
            region_id,
            regions,
            adjacency: adj.into_iter().collect(),
        })
    }

    /// One region covering the whole image.
    pub fn single(img: &CoherencyImage) -> Self {
        let (w, h) = img.shape();
        Self::from_labels(&Grid::filled(w, h, 0), img).expect("shapes match")
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.region_id.shape()
    }

    /// Neighbour lists indexed by region id.
    pub fn neighbors(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.len()];
        for &(a, b) in &self.adjacency {
            out[a as usize].push(b);
            out[b as usize].push(a);
        }
        out
    }

    /// Pixel indices per region, in raster order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.len()];
        for (i, &id) in self.region_id.as_slice().iter().enumerate() {
            out[id as usize].push(i);
        }
        out
    }

    /// Relabels every region through `map` (old id to new label) and
    /// rebuilds the statistics.
    pub fn relabel(&self, map: &[u32], img: &CoherencyImage) -> Result<Self> {
        let labels = self.region_id.map(|&id| map[id as usize]);
        Self::from_labels(&labels, img)
    }

    /// Per-region table: id, tag, pixel count and the nine real entries of
    /// the mean coherency.
    pub fn to_csv(&self, tags: &[&str]) -> String {
        let mut s =
            String::from("id,subspace,n,t11,t22,t33,re_t12,im_t12,re_t13,im_t13,re_t23,im_t23\n");
        for (i, r) in self.regions.iter().enumerate() {
            let m = r.mean();
            let tag = tags.get(i).copied().unwrap_or("");
            s.push_str(&format!(
                "{i},{tag},{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}\n",
                r.count,
                m.t11,
                m.t22,
                m.t33,
                m.t12.re,
                m.t12.im,
                m.t13.re,
                m.t13.im,
                m.t23.re,
                m.t23.im
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_match_brute_force() {
        let img = CoherencyImage::new(
            Grid::from_fn(6, 5, |x, y| {
                Coherency::diag(1.0 + x as f64, 0.5 + y as f64, 0.1)
            }),
            4.0,
        )
        .unwrap();
        let labels = Grid::from_fn(6, 5, |x, y| {
            if x < 3 {
                7
            } else if y < 2 {
                2
            } else {
                9
            }
        });
        let p = SuperpixelPartition::from_labels(&labels, &img).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(*p.region_id.get(0, 0), 0);
        assert_eq!(*p.region_id.get(3, 0), 1);
        assert_eq!(*p.region_id.get(3, 4), 2);
        for (id, r) in p.regions.iter().enumerate() {
            let px: Vec<_> = (0..5)
                .flat_map(|y| (0..6).map(move |x| (x, y)))
                .filter(|&(x, y)| *p.region_id.get(x, y) == id as u32)
                .collect();
            assert_eq!(r.count, px.len());
            let t11: f64 = px.iter().map(|&(x, _)| 1.0 + x as f64).sum::<f64>() / px.len() as f64;
            assert!((r.mean().t11 - t11).abs() < 1e-12);
        }
        assert_eq!(p.adjacency, vec![(0, 1), (0, 2), (1, 2)]);
    }
}
