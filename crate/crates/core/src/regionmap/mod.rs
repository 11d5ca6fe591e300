//! Middle-level semantics: segment labelling, aggregated grouping and the
//! aggregated/structural/homogenous region map.

mod aggregate;
mod chain;
mod group;
mod map;
mod morph;

use serde::{Deserialize, Serialize};

pub use aggregate::{
    aggregation_degree, neighbor_lists, select_delta1, select_delta2, spatial_rank, Adh,
    AggregationStats, Neighbor, SpatialRank,
};
pub use chain::{connect_lines, is_straight, label_long_straight, Chain};
pub use group::{group_segments, Grouping};
pub use map::{build_region_map, RegionLabel, RegionMap, SegmentGroup};
pub use morph::{close_mask, close_regions, rasterize, squared_distance, structural_blocks};

use crate::error::{Error, Result};
use crate::sketch::{SegmentLabel, SketchMap, SketchSegment};

/// Region-map parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegionConfig {
    /// Neighbour count for aggregation degree and grouping.
    pub k: usize,
    /// Largest orientation change inside a straight line (degrees).
    pub theta0: f64,
    /// Share of straight lines, longest first, labelled isolated.
    pub top_fraction: f64,
    /// Largest endpoint gap when connecting segments (pixels).
    pub max_gap: f64,
    /// Half-angle of the parallel-neighbour exclusion wedge (degrees).
    pub wedge: f64,
    /// Share of the aggregation histogram below `delta1`.
    pub mass_ratio: f64,
    /// Share of close neighbours on one side that makes a segment single-sided.
    pub side_fraction: f64,
    /// Structural block width in pixels (3 or 5). Thin line objects are
    /// sketched by their two flanking edges, which width 5 bridges.
    pub block_width: usize,
}

impl Default for RegionConfig {
    fn default() -> Self {
        RegionConfig {
            k: 9,
            theta0: 30.0,
            top_fraction: 0.05,
            max_gap: 2.0,
            wedge: 10.0,
            mass_ratio: 0.92,
            side_fraction: 0.8,
            block_width: 5,
        }
    }
}

impl RegionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if !(self.mass_ratio > 0.0 && self.mass_ratio <= 1.0) {
            return bad("mass_ratio must be in (0, 1]");
        }
        if !(self.top_fraction >= 0.0 && self.top_fraction <= 1.0) {
            return bad("top_fraction must be in [0, 1]");
        }
        if !(self.side_fraction > 0.5 && self.side_fraction <= 1.0) {
            return bad("side_fraction must be in (0.5, 1]");
        }
        if !(self.theta0 > 0.0 && self.wedge >= 0.0 && self.max_gap >= 0.0) {
            return bad("theta0 must be positive, wedge and max_gap non-negative");
        }
        if self.block_width != 3 && self.block_width != 5 {
            return bad("block_width must be 3 or 5");
        }
        Ok(())
    }
}

/// Segment labels and the statistics behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentLabeling {
    /// Flattened segments of the sketch map, with labels set.
    pub segments: Vec<SketchSegment>,
    pub chains: Vec<Chain>,
    /// Segments labelled isolated as part of a long straight line.
    pub long_straight: Vec<bool>,
    /// Spatial rank of segments that passed the `delta1` test.
    pub ranks: Vec<Option<SpatialRank>>,
    pub stats: AggregationStats,
}

impl SegmentLabeling {
    pub fn indices(&self, label: SegmentLabel) -> Vec<usize> {
        (0..self.segments.len())
            .filter(|&i| self.segments[i].label == label)
            .collect()
    }
}

/// Labels every segment of the sketch map aggregated or isolated: connect
/// lines, mark long straight lines, score the rest by aggregation degree,
/// split at `delta1` and demote single-sided and zero-aggregated segments.
pub fn label_segments(map: &SketchMap, cfg: &RegionConfig) -> Result<SegmentLabeling> {
    cfg.validate()?;
    let mut segments: Vec<SketchSegment> = map.segments().cloned().collect();
    let n = segments.len();
    let chains = connect_lines(&segments, cfg.max_gap);
    let long_straight = label_long_straight(&chains, &segments, cfg.theta0, cfg.top_fraction);
    let remaining: Vec<usize> = (0..n).filter(|&i| !long_straight[i]).collect();
    let mut stats = AggregationStats {
        k: cfg.k,
        ad: vec![None; n],
        r: cfg.mass_ratio,
        ..Default::default()
    };
    let mut ranks = vec![None; n];
    for s in &mut segments {
        s.label = SegmentLabel::Isolated;
    }
    if remaining.len() < cfg.k + 1 {
        return Ok(SegmentLabeling {
            segments,
            chains,
            long_straight,
            ranks,
            stats,
        });
    }

    let sub: Vec<SketchSegment> = remaining.iter().map(|&i| segments[i].clone()).collect();
    let lists = neighbor_lists(&sub, cfg.k, cfg.wedge);
    for (li, &i) in remaining.iter().enumerate() {
        stats.ad[i] = aggregate::mean_distance(&lists[li]);
    }
    let scored = stats.scored();
    stats.adh = Adh::new(&scored);
    if let Some(adh) = &stats.adh {
        let max_ad = scored.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        stats.delta1 = select_delta1(adh, cfg.mass_ratio, max_ad);
    }
    stats.delta2 = select_delta2(&stats);

    for (li, &i) in remaining.iter().enumerate() {
        match stats.ad[i] {
            Some(a) if a <= stats.delta1 => {
                let rank =
                    spatial_rank(&sub[li], &lists[li], &sub, stats.delta1, cfg.side_fraction);
                ranks[i] = Some(rank);
                if rank == SpatialRank::DoubleSide {
                    segments[i].label = SegmentLabel::Aggregated;
                }
            }
            _ => {}
        }
    }
    Ok(SegmentLabeling {
        segments,
        chains,
        long_straight,
        ranks,
        stats,
    })
}

/// Everything produced while building the region map.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionAnalysis {
    /// Final labels, after small groups were dissolved.
    pub labeling: SegmentLabeling,
    pub groups: Vec<SegmentGroup>,
    pub structural: crate::raster::Mask,
    pub region_map: RegionMap,
}

impl RegionAnalysis {
    /// The sketch map with each segment's final label.
    pub fn semantic_sketch(&self, map: &SketchMap) -> SketchMap {
        let mut out = map.clone();
        let mut it = self.labeling.segments.iter();
        for line in &mut out.lines {
            for seg in &mut line.segments {
                if let Some(s) = it.next() {
                    seg.label = s.label;
                }
            }
        }
        out
    }
}

/// Labels segments, groups the aggregated ones, closes each group into a
/// region, draws structural blocks around isolated segments and assembles
/// the region map.
pub fn extract_region_map(map: &SketchMap, cfg: &RegionConfig) -> Result<RegionAnalysis> {
    let mut labeling = label_segments(map, cfg)?;
    let shape = map.shape;
    let aggregated = labeling.indices(SegmentLabel::Aggregated);
    let grouping = group_segments(
        &labeling.segments,
        &aggregated,
        labeling.stats.delta2,
        cfg.k,
    );
    for &i in &grouping.dissolved {
        labeling.segments[i].label = SegmentLabel::Isolated;
    }
    let delta2 = labeling.stats.delta2;
    let groups: Vec<SegmentGroup> = grouping
        .groups
        .into_iter()
        .enumerate()
        .map(|(id, members)| SegmentGroup {
            id: id as u32,
            region_mask: close_regions(
                members.iter().map(|&i| &labeling.segments[i]),
                delta2,
                shape,
            ),
            members,
        })
        .collect();
    let structural = structural_blocks(
        labeling
            .segments
            .iter()
            .filter(|s| s.label == SegmentLabel::Isolated),
        cfg.block_width,
        shape,
    );
    let region_map = build_region_map(&groups, &structural, shape)?;
    Ok(RegionAnalysis {
        labeling,
        groups,
        structural,
        region_map,
    })
}
