use serde::{Deserialize, Serialize};

use crate::data::render::RgbImage;
use crate::error::Result;
use crate::raster::{Grid, LabelRaster, Mask, NO_LABEL};

/// Region type of a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionLabel {
    Aggregated,
    Structural,
    Homogenous,
}

impl RegionLabel {
    pub fn code(self) -> u8 {
        match self {
            RegionLabel::Aggregated => 0,
            RegionLabel::Structural => 1,
            RegionLabel::Homogenous => 2,
        }
    }

    /// Gray, black and white.
    pub fn color(self) -> [u8; 3] {
        match self {
            RegionLabel::Aggregated => [128; 3],
            RegionLabel::Structural => [0; 3],
            RegionLabel::Homogenous => [255; 3],
        }
    }
}

/// An aggregated group and its closed region.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentGroup {
    pub id: u32,
    /// Indices into the flattened segment list.
    pub members: Vec<usize>,
    pub region_mask: Mask,
}

/// The aggregated/structural/homogenous partition of the image.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMap {
    pub labels: Grid<RegionLabel>,
    /// Group id of aggregated pixels, [`NO_LABEL`] elsewhere.
    pub aggregated_id: LabelRaster,
}

impl RegionMap {
    pub fn homogenous(shape: (usize, usize)) -> Self {
        RegionMap {
            labels: Grid::filled(shape.0, shape.1, RegionLabel::Homogenous),
            aggregated_id: Grid::filled(shape.0, shape.1, NO_LABEL),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.labels.shape()
    }

    pub fn count(&self, label: RegionLabel) -> usize {
        self.labels
            .as_slice()
            .iter()
            .filter(|&&l| l == label)
            .count()
    }

    pub fn mask(&self, label: RegionLabel) -> Mask {
        self.labels.map(|&l| l == label)
    }

    /// Palette rendering: aggregated gray, structural black, homogenous white.
    pub fn to_rgb(&self) -> RgbImage {
        RgbImage {
            width: self.labels.width(),
            height: self.labels.height(),
            data: self.labels.as_slice().iter().map(|l| l.color()).collect(),
        }
    }
}

/// Assembles the region map. Aggregated pixels take precedence over
/// structural ones; where group regions overlap the lower id wins.
pub fn build_region_map(
    groups: &[SegmentGroup],
    structural: &Mask,
    shape: (usize, usize),
) -> Result<RegionMap> {
    structural.ensure_shape(shape)?;
    let mut map = RegionMap::homogenous(shape);
    for (l, &s) in map
        .labels
        .as_mut_slice()
        .iter_mut()
        .zip(structural.as_slice())
    {
        if s {
            *l = RegionLabel::Structural;
        }
    }
    for g in groups.iter().rev() {
        g.region_mask.ensure_shape(shape)?;
        for (i, &on) in g.region_mask.as_slice().iter().enumerate() {
            if on {
                map.labels.as_mut_slice()[i] = RegionLabel::Aggregated;
                map.aggregated_id.as_mut_slice()[i] = g.id;
            }
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let shape = (4, 3);
        let structural = Grid::from_fn(4, 3, |x, _| x < 2);
        let g = |id, xs: std::ops::Range<usize>| SegmentGroup {
            id,
            members: vec![],
            region_mask: Grid::from_fn(4, 3, |x, y| y == 0 && xs.contains(&x)),
        };
        let map = build_region_map(&[g(0, 1..3), g(1, 2..4)], &structural, shape).unwrap();
        assert_eq!(*map.labels.get(0, 0), RegionLabel::Structural);
        assert_eq!(*map.labels.get(1, 0), RegionLabel::Aggregated);
        assert_eq!(*map.aggregated_id.get(2, 0), 0);
        assert_eq!(*map.aggregated_id.get(3, 0), 1);
        assert_eq!(*map.labels.get(3, 2), RegionLabel::Homogenous);
        assert_eq!(*map.aggregated_id.get(0, 0), NO_LABEL);
        let empty = build_region_map(&[], &Grid::filled(4, 3, false), shape).unwrap();
        assert_eq!(empty.count(RegionLabel::Homogenous), 12);
        assert!(build_region_map(&[], &Grid::filled(2, 2, false), shape).is_err());
    }
}
