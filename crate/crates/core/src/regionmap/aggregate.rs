use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{orientation_diff_deg, Point};
use crate::sketch::SketchSegment;

/// A neighbour of a segment: midpoint distance and segment index.
pub type Neighbor = (f64, usize);

/// Histogram of aggregation degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adh {
    /// Left edge of the first bin.
    pub min: f64,
    /// Bin width in pixels: `max(1, range / 64)`.
    pub width: f64,
    pub counts: Vec<usize>,
}

const ADH_BINS: f64 = 64.0;

impl Adh {
    /// `None` for no values.
    pub fn new(values: &[f64]) -> Option<Adh> {
        if values.is_empty() {
            return None;
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = max - min;
        let width = (range / ADH_BINS).max(1.0);
        let bins = ((range / width).ceil() as usize).max(1);
        let mut counts = vec![0; bins];
        for &v in values {
            counts[(((v - min) / width) as usize).min(bins - 1)] += 1;
        }
        Some(Adh { min, width, counts })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Largest value covered by the histogram.
    pub fn max(&self) -> f64 {
        self.min + self.width * self.counts.len() as f64
    }

    /// Centre of the tallest bin (the first on ties).
    pub fn peak_value(&self) -> f64 {
        let top = self.counts.iter().copied().max().unwrap_or(0);
        let i = self.counts.iter().position(|&c| c == top).unwrap_or(0);
        self.min + self.width * (i as f64 + 0.5)
    }
}

/// Aggregation statistics of the segments that reached the aggregation step.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AggregationStats {
    pub k: usize,
    /// Aggregation degree per segment; `None` for segments that were not
    /// scored (long straight lines) or had no eligible neighbour.
    pub ad: Vec<Option<f64>>,
    pub adh: Option<Adh>,
    /// AS/IS threshold.
    pub delta1: f64,
    /// Grouping distance and closing radius.
    pub delta2: f64,
    /// AS mass ratio used for `delta1`.
    pub r: f64,
}

impl AggregationStats {
    pub fn scored(&self) -> Vec<f64> {
        self.ad.iter().flatten().copied().collect()
    }

    /// Plain-text diagnostics: thresholds and the histogram.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "k\t{}\nr\t{}\ndelta1\t{}\ndelta2\t{}\nscored\t{}\n",
            self.k,
            self.r,
            self.delta1,
            self.delta2,
            self.scored().len()
        );
        if let Some(adh) = &self.adh {
            out.push_str("bin_lo\tbin_hi\tcount\n");
            for (i, c) in adh.counts.iter().enumerate() {
                let lo = adh.min + adh.width * i as f64;
                out.push_str(&format!("{lo:.4}\t{:.4}\t{c}\n", lo + adh.width));
            }
        }
        out
    }
}

fn in_wedge(seg: &SketchSegment, from: Point, to: Point, wedge_deg: f64) -> bool {
    let v = to - from;
    if v.norm() == 0.0 || seg.length() == 0.0 {
        return false;
    }
    orientation_diff_deg(
        crate::geometry::orientation_deg(v.x, v.y),
        seg.orientation(),
    ) <= wedge_deg
}

/// The `k` nearest other segments of each segment by midpoint distance,
/// skipping those whose midpoint lies within `wedge_deg` of the segment's
/// supporting line. Ties are broken by index.
pub fn neighbor_lists(segments: &[SketchSegment], k: usize, wedge_deg: f64) -> Vec<Vec<Neighbor>> {
    let centers: Vec<Point> = segments.iter().map(SketchSegment::center).collect();
    (0..segments.len())
        .into_par_iter()
        .map(|i| {
            let mut near: Vec<Neighbor> = (0..segments.len())
                .filter(|&j| j != i && !in_wedge(&segments[i], centers[i], centers[j], wedge_deg))
                .map(|j| (centers[i].dist(centers[j]), j))
                .collect();
            near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            near.truncate(k);
            near
        })
        .collect()
}

/// Mean midpoint distance to the `k` nearest eligible segments; `None` when
/// a segment has no eligible neighbour.
pub fn aggregation_degree(
    segments: &[SketchSegment],
    k: usize,
    wedge_deg: f64,
) -> Vec<Option<f64>> {
    neighbor_lists(segments, k, wedge_deg)
        .iter()
        .map(|l| mean_distance(l))
        .collect()
}

pub(crate) fn mean_distance(list: &[Neighbor]) -> Option<f64> {
    if list.is_empty() {
        None
    } else {
        Some(list.iter().map(|n| n.0).sum::<f64>() / list.len() as f64)
    }
}

/// Smallest bin right edge whose cumulative mass reaches `r` of the total,
/// capped at the largest aggregation degree.
pub fn select_delta1(adh: &Adh, r: f64, max_ad: f64) -> f64 {
    let target = r * adh.total() as f64;
    let mut cum = 0usize;
    for (i, &c) in adh.counts.iter().enumerate() {
        cum += c;
        if cum as f64 >= target {
            return (adh.min + adh.width * (i + 1) as f64).min(max_ad);
        }
    }
    max_ad
}

/// Arithmetic mean of the aggregation degrees. Logs a warning when the mean
/// falls below the histogram peak.
pub fn select_delta2(stats: &AggregationStats) -> f64 {
    let ad = stats.scored();
    if ad.is_empty() {
        return 0.0;
    }
    let d2 = ad.iter().sum::<f64>() / ad.len() as f64;
    if let Some(adh) = &stats.adh {
        if d2 < adh.peak_value() {
            log::warn!(
                "delta2 {d2:.3} is below the aggregation histogram peak {:.3}",
                adh.peak_value()
            );
        }
    }
    d2
}

/// Spatial arrangement of a segment's close neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpatialRank {
    /// Close neighbours on both sides.
    DoubleSide,
    /// Close neighbours mostly on one side.
    SingleSide,
    /// No close neighbour.
    Zero,
}

/// Classifies a segment by where its neighbours within `delta1` lie relative
/// to its supporting line. `SingleSide` when at least `side_fraction` of them
/// are on one side.
pub fn spatial_rank(
    seg: &SketchSegment,
    neighbors: &[Neighbor],
    segments: &[SketchSegment],
    delta1: f64,
    side_fraction: f64,
) -> SpatialRank {
    let c = seg.center();
    let u = seg.direction();
    let (mut left, mut right, mut close) = (0usize, 0usize, 0usize);
    for &(d, j) in neighbors {
        if d > delta1 {
            continue;
        }
        close += 1;
        let s = u.cross(segments[j].center() - c);
        if s > 0.0 {
            left += 1;
        } else if s < 0.0 {
            right += 1;
        }
    }
    if close == 0 {
        SpatialRank::Zero
    } else if left.max(right) as f64 >= side_fraction * close as f64 {
        SpatialRank::SingleSide
    } else {
        SpatialRank::DoubleSide
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg_at(x: f64, y: f64) -> SketchSegment {
        // short horizontal segment centred at (x, y)
        SketchSegment::new(Point::new(x - 0.5, y), Point::new(x + 0.5, y))
    }

    fn brute_ad(segs: &[SketchSegment], k: usize, wedge: f64) -> Vec<Option<f64>> {
        segs.iter()
            .enumerate()
            .map(|(i, s)| {
                let mut d: Vec<f64> = Vec::new();
                for (j, t) in segs.iter().enumerate() {
                    let v = t.center() - s.center();
                    let ang = v.y.atan2(v.x).to_degrees().abs();
                    let off_axis = ang.min(180.0 - ang);
                    if j != i && (v.norm() == 0.0 || off_axis > wedge) {
                        d.push(v.norm());
                    }
                }
                d.sort_by(f64::total_cmp);
                d.truncate(k);
                (!d.is_empty()).then(|| d.iter().sum::<f64>() / d.len() as f64)
            })
            .collect()
    }

    #[test]
    fn two_segments() {
        let segs = [seg_at(0.0, 0.0), seg_at(0.0, 10.0)];
        assert_eq!(
            aggregation_degree(&segs, 1, 10.0),
            vec![Some(10.0), Some(10.0)]
        );
    }

    #[test]
    fn grid_matches_brute_force() {
        let mut segs = Vec::new();
        for y in 0..7 {
            for x in 0..7 {
                segs.push(seg_at(x as f64, y as f64));
            }
        }
        let ad = aggregation_degree(&segs, 4, 10.0);
        assert_eq!(ad, brute_ad(&segs, 4, 10.0));
        // interior: the two collinear neighbours are excluded, leaving the
        // vertical pair and two diagonals
        let centre = ad[3 * 7 + 3].unwrap();
        assert!((centre - (2.0 + 2.0 * 2f64.sqrt()) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn duplicates_allowed() {
        let segs = [seg_at(1.0, 1.0), seg_at(1.0, 1.0), seg_at(1.0, 4.0)];
        let ad = aggregation_degree(&segs, 1, 10.0);
        assert_eq!(ad[0], Some(0.0));
        assert!(ad.iter().all(|a| a.unwrap() >= 0.0));
    }

    #[test]
    fn delta1_rules() {
        let uniform: Vec<f64> = (0..=1000).map(|i| i as f64 / 10.0).collect();
        let adh = Adh::new(&uniform).unwrap();
        assert_eq!(select_delta1(&adh, 1.0, 100.0), 100.0);
        let d = select_delta1(&adh, 0.9, 100.0);
        let mut sorted = uniform.clone();
        sorted.sort_by(f64::total_cmp);
        let q = sorted[(0.9 * sorted.len() as f64).ceil() as usize - 1];
        assert!((d - q).abs() <= adh.width);
        let single = Adh::new(&[7.0, 7.0, 7.0]).unwrap();
        assert_eq!(select_delta1(&single, 0.92, 7.0), 7.0);
    }

    #[test]
    fn delta2_is_mean() {
        let stats = AggregationStats {
            ad: vec![Some(4.0), None, Some(6.0)],
            adh: Adh::new(&[4.0, 6.0]),
            ..Default::default()
        };
        assert_eq!(select_delta2(&stats), 5.0);
        let one = AggregationStats {
            ad: vec![Some(3.5)],
            ..Default::default()
        };
        assert_eq!(select_delta2(&one), 3.5);
    }

    #[test]
    fn ranks() {
        let s = seg_at(0.0, 0.0);
        let mut segs = vec![s.clone()];
        // two above, two below
        for &(x, y) in &[(-1.0, 2.0), (1.0, 2.0), (-1.0, -2.0), (1.0, -2.0)] {
            segs.push(seg_at(x, y));
        }
        let lists = neighbor_lists(&segs, 9, 10.0);
        assert_eq!(
            spatial_rank(&segs[0], &lists[0], &segs, 5.0, 0.8),
            SpatialRank::DoubleSide
        );

        let mut one_side = vec![s.clone()];
        for i in 0..5 {
            one_side.push(seg_at(i as f64 - 2.0, 2.0));
        }
        let lists = neighbor_lists(&one_side, 9, 10.0);
        assert_eq!(
            spatial_rank(&one_side[0], &lists[0], &one_side, 5.0, 0.8),
            SpatialRank::SingleSide
        );
        assert_eq!(
            spatial_rank(&one_side[0], &lists[0], &one_side, 1.0, 0.8),
            SpatialRank::Zero
        );
    }
}
