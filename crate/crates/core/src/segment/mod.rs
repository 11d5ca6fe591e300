//! Semantic segmentation: mean-shift superpixels, mapping of the region map
//! onto them, and subspace-specific merging.

mod meanshift;
mod merge;
mod partition;
mod structural;
mod subspace;

pub use meanshift::{
    group_modes, log_pauli, mean_shift_filter, mean_shift_superpixels, MeanShiftConfig,
};
pub use merge::{hierarchical_merge, region_cost, sc_criterion, HierarchicalMerge, MergeStep};
pub use partition::{RegionStats, SuperpixelPartition};
pub use structural::{locate_edge, split_structural, BlockEdge, StructuralSplit};
pub use subspace::{map_region_to_superpixels, merge_aggregated, AggregatedMerge, SubspaceSets};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{CoherencyImage, LabelRaster, ScalarRaster};
use crate::regionmap::{RegionAnalysis, RegionLabel};
use crate::sketch::SegmentLabel;

/// Segmentation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentConfig {
    pub mean_shift: MeanShiftConfig,
    /// Homogenous region count after hierarchical merging.
    pub n_r: usize,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            mean_shift: MeanShiftConfig::default(),
            n_r: 30,
        }
    }
}

impl SegmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_r == 0 {
            return Err(Error::InvalidParameter("n_r must be at least 1".into()));
        }
        if !(self.mean_shift.h_spatial > 0.0 && self.mean_shift.h_range > 0.0) {
            return Err(Error::InvalidParameter(
                "mean-shift bandwidths must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Final segmentation with the subspace each region came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationMap {
    pub partition: SuperpixelPartition,
    pub provenance: Vec<RegionLabel>,
    /// Superpixel count before any merging.
    pub superpixels: usize,
    pub splits: usize,
    pub merges: Vec<MergeStep>,
}

impl SegmentationMap {
    pub fn region_id(&self) -> &LabelRaster {
        &self.partition.region_id
    }

    pub fn len(&self) -> usize {
        self.partition.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partition.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let tags: Vec<&str> = self
            .provenance
            .iter()
            .map(|t| match t {
                RegionLabel::Aggregated => "aggregated",
                RegionLabel::Structural => "structural",
                RegionLabel::Homogenous => "homogenous",
            })
            .collect();
        self.partition.to_csv(&tags)
    }

    /// Superpixels alone, every region homogenous.
    pub fn unmerged(superpixels: SuperpixelPartition) -> Self {
        SegmentationMap {
            provenance: vec![RegionLabel::Homogenous; superpixels.len()],
            superpixels: superpixels.len(),
            partition: superpixels,
            splits: 0,
            merges: Vec::new(),
        }
    }
}

/// Semantic segmentation guided by the region map: aggregated superpixels
/// merge by group, structural ones split along the located edge and
/// homogenous ones merge hierarchically down to `n_r` regions.
pub fn segment(
    img: &CoherencyImage,
    superpixels: &SuperpixelPartition,
    analysis: &RegionAnalysis,
    energy: &ScalarRaster,
    block_width: usize,
    cfg: &SegmentConfig,
) -> Result<SegmentationMap> {
    cfg.validate()?;
    let sets = map_region_to_superpixels(superpixels, &analysis.region_map)?;
    let agg = merge_aggregated(superpixels, &sets, &analysis.region_map.aggregated_id, img)?;
    let isolated: Vec<_> = analysis
        .labeling
        .segments
        .iter()
        .filter(|s| s.label == SegmentLabel::Isolated)
        .cloned()
        .collect();
    let split = split_structural(
        &agg.partition,
        &agg.tags,
        &agg.group,
        &isolated,
        energy,
        block_width,
        img,
    )?;
    let pool: Vec<u32> = (0..split.partition.len() as u32)
        .filter(|&i| split.tags[i as usize] == RegionLabel::Homogenous)
        .collect();
    let hm = hierarchical_merge(&split.partition, &pool, cfg.n_r, img.looks(), img)?;
    let mut provenance = vec![RegionLabel::Homogenous; hm.partition.len()];
    for (old, &new) in hm.mapping.iter().enumerate() {
        provenance[new as usize] = split.tags[old];
    }
    Ok(SegmentationMap {
        partition: hm.partition,
        provenance,
        superpixels: superpixels.len(),
        splits: split.splits,
        merges: hm.steps,
    })
}
