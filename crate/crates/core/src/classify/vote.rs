use crate::error::Result;
use crate::raster::LabelRaster;

/// Relabels every pixel with the most frequent class of its segmentation
/// region; ties go to the smallest class id.
pub fn semantic_vote(classes: &LabelRaster, regions: &LabelRaster) -> Result<LabelRaster> {
    regions.ensure_shape(classes.shape())?;
    let n_regions = regions
        .as_slice()
        .iter()
        .copied()
        .max()
        .map_or(0, |m| m as usize + 1);
    let n_classes = classes
        .as_slice()
        .iter()
        .copied()
        .max()
        .map_or(0, |m| m as usize + 1);
    let mut hist = vec![0usize; n_regions * n_classes];
    for (&r, &c) in regions.as_slice().iter().zip(classes.as_slice()) {
        hist[r as usize * n_classes + c as usize] += 1;
    }
    let winner: Vec<u32> = (0..n_regions)
        .map(|r| {
            let row = &hist[r * n_classes..(r + 1) * n_classes];
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best as u32
        })
        .collect();
    Ok(regions.map(|&r| winner[r as usize]))
}
