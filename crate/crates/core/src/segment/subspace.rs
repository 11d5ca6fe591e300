use super::partition::SuperpixelPartition;
use crate::error::Result;
use crate::raster::{CoherencyImage, LabelRaster, NO_LABEL};
use crate::regionmap::{RegionLabel, RegionMap};

/// Superpixels split by the region-map subspace owning most of their pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSets {
    /// Subspace per superpixel id.
    pub tags: Vec<RegionLabel>,
    pub aggregated: Vec<u32>,
    pub structural: Vec<u32>,
    pub homogenous: Vec<u32>,
}

impl SubspaceSets {
    pub fn set(&self, label: RegionLabel) -> &[u32] {
        match label {
            RegionLabel::Aggregated => &self.aggregated,
            RegionLabel::Structural => &self.structural,
            RegionLabel::Homogenous => &self.homogenous,
        }
    }
}

const ORDER: [RegionLabel; 3] = [
    RegionLabel::Aggregated,
    RegionLabel::Structural,
    RegionLabel::Homogenous,
];

/// Assigns each superpixel to the subspace with the most of its pixels;
/// ties go to aggregated, then structural.
pub fn map_region_to_superpixels(
    partition: &SuperpixelPartition,
    map: &RegionMap,
) -> Result<SubspaceSets> {
    map.labels.ensure_shape(partition.shape())?;
    let mut counts = vec![[0usize; 3]; partition.len()];
    for (id, label) in partition
        .region_id
        .as_slice()
        .iter()
        .zip(map.labels.as_slice())
    {
        counts[*id as usize][label.code() as usize] += 1;
    }
    let mut sets = SubspaceSets {
        tags: Vec::with_capacity(partition.len()),
        aggregated: Vec::new(),
        structural: Vec::new(),
        homogenous: Vec::new(),
    };
    for (id, c) in counts.iter().enumerate() {
        let best = ORDER
            .iter()
            .copied()
            .max_by(|a, b| {
                c[a.code() as usize]
                    .cmp(&c[b.code() as usize])
                    .then(b.code().cmp(&a.code()))
            })
            .expect("three labels");
        sets.tags.push(best);
        match best {
            RegionLabel::Aggregated => sets.aggregated.push(id as u32),
            RegionLabel::Structural => sets.structural.push(id as u32),
            RegionLabel::Homogenous => sets.homogenous.push(id as u32),
        }
    }
    Ok(sets)
}

/// Outcome of merging aggregated superpixels.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedMerge {
    pub partition: SuperpixelPartition,
    /// Subspace per region of the new partition.
    pub tags: Vec<RegionLabel>,
    /// Group id per new region when it absorbed superpixels of a group.
    pub group: Vec<Option<u32>>,
}

/// Merges every aggregated superpixel with more than half of its pixels in
/// one aggregated group into a single region per group. Other superpixels,
/// including aggregated ones straddling a group boundary, stay as they are.
pub fn merge_aggregated(
    partition: &SuperpixelPartition,
    sets: &SubspaceSets,
    aggregated_id: &LabelRaster,
    img: &CoherencyImage,
) -> Result<AggregatedMerge> {
    aggregated_id.ensure_shape(partition.shape())?;
    let n = partition.len();
    let mut per_group: Vec<std::collections::BTreeMap<u32, usize>> = vec![Default::default(); n];
    for (id, g) in partition
        .region_id
        .as_slice()
        .iter()
        .zip(aggregated_id.as_slice())
    {
        if *g != NO_LABEL {
            *per_group[*id as usize].entry(*g).or_default() += 1;
        }
    }
    let absorbed: Vec<Option<u32>> = (0..n)
        .map(|id| {
            if sets.tags[id] != RegionLabel::Aggregated {
                return None;
            }
            per_group[id]
                .iter()
                .find(|(_, &c)| 2 * c > partition.regions[id].count)
                .map(|(&g, _)| g)
        })
        .collect();
    // labels: groups first, then untouched superpixels, so ids stay stable
    let groups: std::collections::BTreeSet<u32> = absorbed.iter().flatten().copied().collect();
    let group_label: std::collections::BTreeMap<u32, u32> = groups
        .iter()
        .enumerate()
        .map(|(i, &g)| (g, i as u32))
        .collect();
    let map: Vec<u32> = (0..n)
        .map(|id| match absorbed[id] {
            Some(g) => group_label[&g],
            None => groups.len() as u32 + id as u32,
        })
        .collect();
    let merged = partition.relabel(&map, img)?;
    let mut tags = vec![RegionLabel::Homogenous; merged.len()];
    let mut group = vec![None; merged.len()];
    for (old, new) in partition
        .region_id
        .as_slice()
        .iter()
        .zip(merged.region_id.as_slice())
    {
        tags[*new as usize] = sets.tags[*old as usize];
        group[*new as usize] = absorbed[*old as usize];
    }
    Ok(AggregatedMerge {
        partition: merged,
        tags,
        group,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherency::Coherency;
    use crate::raster::Grid;

    fn img(w: usize, h: usize) -> CoherencyImage {
        CoherencyImage::constant(w, h, Coherency::identity(), 1.0)
    }

    fn region_map(labels: Grid<RegionLabel>) -> RegionMap {
        let aggregated_id = labels.map(|l| {
            if *l == RegionLabel::Aggregated {
                0
            } else {
                NO_LABEL
            }
        });
        RegionMap {
            labels,
            aggregated_id,
        }
    }

    #[test]
    fn majority_and_tie_break() {
        // one superpixel of 10 pixels: 6 aggregated, 4 homogenous
        let sp = Grid::from_fn(10, 2, |_, y| y as u32);
        let p = SuperpixelPartition::from_labels(&sp, &img(10, 2)).unwrap();
        let labels = Grid::from_fn(10, 2, |x, y| match (y, x) {
            (0, x) if x < 6 => RegionLabel::Aggregated,
            (0, _) => RegionLabel::Homogenous,
            (1, x) if x < 5 => RegionLabel::Structural,
            _ => RegionLabel::Homogenous,
        });
        let s = map_region_to_superpixels(&p, &region_map(labels)).unwrap();
        assert_eq!(
            s.tags,
            vec![RegionLabel::Aggregated, RegionLabel::Structural]
        );
        assert_eq!(s.aggregated, vec![0]);
        assert_eq!(s.structural, vec![1]);
        assert!(s.homogenous.is_empty());
    }

    #[test]
    fn interior_superpixels_merge_boundary_one_stays() {
        // 12 superpixels, each two columns wide
        let sp = Grid::from_fn(24, 10, |x, _| (x / 2) as u32);
        let p = SuperpixelPartition::from_labels(&sp, &img(24, 10)).unwrap();
        // group 0 covers superpixels 0..10 and 9 of the 20 pixels (45%) of superpixel 10
        let agg = Grid::from_fn(24, 10, |x, y| x < 20 || (x == 20 && y < 9));
        let labels = agg.map(|&a| {
            if a {
                RegionLabel::Aggregated
            } else {
                RegionLabel::Homogenous
            }
        });
        let rm = region_map(labels);
        let mut sets = map_region_to_superpixels(&p, &rm).unwrap();
        sets.tags[10] = RegionLabel::Aggregated;
        let m = merge_aggregated(&p, &sets, &rm.aggregated_id, &img(24, 10)).unwrap();
        assert_eq!(m.partition.len(), 3);
        assert_eq!(m.group[0], Some(0));
        assert_eq!(m.partition.regions[0].count, 200);
        let merged_px: Vec<usize> = (0..240)
            .filter(|&i| m.partition.region_id.as_slice()[i] == 0)
            .collect();
        let union: Vec<usize> = (0..240).filter(|&i| sp.as_slice()[i] < 10).collect();
        assert_eq!(merged_px, union);
    }
}
