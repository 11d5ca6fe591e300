use crate::error::Result;
use crate::geometry::Point;
use crate::raster::{CoherencyImage, ScalarRaster};
use crate::regionmap::RegionLabel;
use crate::sketch::SketchSegment;

use super::partition::SuperpixelPartition;

/// Located edge inside one structural block: the across-offset of the
/// strongest energy at every unit step along the segment.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockEdge {
    pub head: Point,
    pub direction: Point,
    pub length: f64,
    /// Offset (pixels, positive to the left of head→tail) per step
    /// `t = 0, 1, …`, after a 3-tap median.
    pub offsets: Vec<f64>,
}

impl BlockEdge {
    fn normal(&self) -> Point {
        Point::new(-self.direction.y, self.direction.x)
    }

    /// Along and across coordinates of a pixel.
    pub fn local(&self, x: usize, y: usize) -> (f64, f64) {
        let p = Point::new(x as f64, y as f64) - self.head;
        (p.dot(self.direction), p.dot(self.normal()))
    }

    /// Edge offset at along-position `t`, from the nearest step.
    pub fn offset_at(&self, t: f64) -> f64 {
        let i = t.clamp(0.0, self.length).round() as usize;
        self.offsets[i.min(self.offsets.len() - 1)]
    }

    /// Whether the pixel lies inside the block of width `width`.
    pub fn contains(&self, x: usize, y: usize, width: usize) -> bool {
        let (t, o) = self.local(x, y);
        t >= -1e-9 && t <= self.length + 1e-9 && o.abs() <= width as f64 / 2.0 + 1e-9
    }
}

fn median3(a: f64, b: f64, c: f64) -> f64 {
    a.max(b).min(a.min(b).max(c))
}

/// Finds the true edge inside the block of `seg`. Each cross-section takes
/// the offset with the largest energy; ties keep the offset closest to the
/// axis (then the smaller one), so a flat field yields the axis itself.
/// `None` when the block is thinner than 3 pixels or the segment degenerate.
pub fn locate_edge(seg: &SketchSegment, energy: &ScalarRaster, width: usize) -> Option<BlockEdge> {
    let length = seg.length();
    if width < 3 || length <= 0.0 {
        return None;
    }
    let direction = seg.direction();
    let normal = Point::new(-direction.y, direction.x);
    let half = ((width - 1) / 2) as i64;
    let steps = length.floor() as usize;
    let mut raw = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let c = seg.head + direction * k as f64;
        let mut best: Option<(f64, i64)> = None;
        for o in -half..=half {
            let (x, y) = (c + normal * o as f64).rounded();
            let Some(&e) = energy.get_signed(x, y) else {
                continue;
            };
            let better = match best {
                None => true,
                Some((be, bo)) => e > be || (e == be && (o.abs(), o) < (bo.abs(), bo)),
            };
            if better {
                best = Some((e, o));
            }
        }
        raw.push(best.map_or(0.0, |(_, o)| o as f64));
    }
    let offsets = (0..raw.len())
        .map(|i| {
            if i == 0 || i + 1 == raw.len() {
                raw[i]
            } else {
                median3(raw[i - 1], raw[i], raw[i + 1])
            }
        })
        .collect();
    Some(BlockEdge {
        head: seg.head,
        direction,
        length,
        offsets,
    })
}

/// Result of splitting structural regions.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralSplit {
    pub partition: SuperpixelPartition,
    pub tags: Vec<RegionLabel>,
    pub group: Vec<Option<u32>>,
    /// Number of regions that were split in two.
    pub splits: usize,
}

/// Splits every structural region along the edge of the isolated segment
/// whose block covers most of its pixels. Pixels on the right of the edge
/// (offset below it) form one child, the rest the other. A region is only
/// split when both children are non-empty.
pub fn split_structural(
    partition: &SuperpixelPartition,
    tags: &[RegionLabel],
    group: &[Option<u32>],
    isolated: &[SketchSegment],
    energy: &ScalarRaster,
    width: usize,
    img: &CoherencyImage,
) -> Result<StructuralSplit> {
    energy.ensure_shape(partition.shape())?;
    let edges: Vec<BlockEdge> = isolated
        .iter()
        .filter_map(|s| locate_edge(s, energy, width))
        .collect();
    if width < 3 {
        log::warn!("structural blocks narrower than 3 pixels are left unsplit");
    }
    let members = partition.members();
    let w = partition.shape().0;
    let n = partition.len();
    let mut labels: Vec<u32> = partition.region_id.as_slice().to_vec();
    let mut next = n as u32;
    let mut child_of = Vec::new();
    let mut splits = 0;
    for id in 0..n {
        if tags[id] != RegionLabel::Structural {
            continue;
        }
        let px = &members[id];
        let best = edges
            .iter()
            .enumerate()
            .map(|(ei, e)| {
                (
                    px.iter()
                        .filter(|&&i| e.contains(i % w, i / w, width))
                        .count(),
                    ei,
                )
            })
            .filter(|&(c, _)| c > 0)
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        let Some((_, ei)) = best else { continue };
        let e = &edges[ei];
        let left: Vec<usize> = px
            .iter()
            .copied()
            .filter(|&i| {
                let (t, o) = e.local(i % w, i / w);
                o >= e.offset_at(t)
            })
            .collect();
        if left.is_empty() || left.len() == px.len() {
            continue;
        }
        for i in left {
            labels[i] = next;
        }
        child_of.push(id);
        next += 1;
        splits += 1;
    }
    let raster = crate::raster::Grid::from_vec(w, partition.shape().1, labels)?;
    let out = SuperpixelPartition::from_labels(&raster, img)?;
    let mut new_tags = vec![RegionLabel::Homogenous; out.len()];
    let mut new_group = vec![None; out.len()];
    for (i, &new) in out.region_id.as_slice().iter().enumerate() {
        let old = *raster.as_slice().get(i).expect("same size") as usize;
        let parent = if old < n { old } else { child_of[old - n] };
        new_tags[new as usize] = tags[parent];
        new_group[new as usize] = group[parent];
    }
    Ok(StructuralSplit {
        partition: out,
        tags: new_tags,
        group: new_group,
        splits,
    })
}
