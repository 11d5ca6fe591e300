use std::collections::BTreeSet;

use super::types::SketchLine;
use crate::coherency::{Coherency, CHANNELS};
use crate::detect::pooled_statistic;
use crate::raster::CoherencyImage;

/// Perpendicular distances (pixels) of the flank bands on each side.
const FLANK_OFFSETS: [f64; 3] = [2.0, 3.0, 4.0];

/// Pixels of the left and right flank bands of a line, 3 pixels wide and
/// separated from the line by one pixel. Pixels claimed by both sides (at
/// sharp bends) and pixels outside the image are dropped.
pub fn flank_pixels(
    line: &SketchLine,
    shape: (usize, usize),
) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let (w, h) = shape;
    let mut left = BTreeSet::new();
    let mut right = BTreeSet::new();
    for seg in &line.segments {
        let len = seg.length();
        let u = seg.direction();
        if len <= 0.0 {
            continue;
        }
        let normal = crate::geometry::Point::new(-u.y, u.x);
        let steps = len.ceil() as usize;
        for k in 0..=steps {
            let p = seg.head + u * (len * k as f64 / steps.max(1) as f64);
            for &off in &FLANK_OFFSETS {
                for (set, sign) in [(&mut left, 1.0), (&mut right, -1.0)] {
                    let (x, y) = (p + normal * (sign * off)).rounded();
                    if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
                        set.insert((y as usize, x as usize));
                    }
                }
            }
        }
    }
    let both: BTreeSet<_> = left.intersection(&right).copied().collect();
    let keep = |s: BTreeSet<(usize, usize)>| {
        s.difference(&both)
            .map(|&(y, x)| (x, y))
            .collect::<Vec<_>>()
    };
    (keep(left), keep(right))
}

fn mean(img: &CoherencyImage, px: &[(usize, usize)]) -> Coherency {
    let mut acc = Coherency::ZERO;
    for &(x, y) in px {
        acc += *img.get(x, y);
    }
    acc * (1.0 / px.len() as f64)
}

/// Coding length gain of a line: the Wishart two-sample statistic `−2ρ ln Q`
/// between its pooled left and right flanks, each flank contributing
/// `pixels × looks` samples. Zero when either flank is empty.
pub fn line_significance(line: &SketchLine, img: &CoherencyImage) -> f64 {
    let (left, right) = flank_pixels(line, img.shape());
    if left.is_empty() || right.is_empty() {
        return 0.0;
    }
    let n = left.len() as f64 * img.looks();
    let m = right.len() as f64 * img.looks();
    pooled_statistic(&mean(img, &left), n, &mean(img, &right), m, CHANNELS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::raster::Grid;
    use crate::sketch::SketchSegment;

    fn hline(y: f64, x0: f64, x1: f64) -> SketchLine {
        SketchLine::new(vec![SketchSegment::new(
            Point::new(x0, y),
            Point::new(x1, y),
        )])
    }

    #[test]
    fn flank_geometry() {
        let (l, r) = flank_pixels(&hline(10.0, 5.0, 14.0), (30, 30));
        assert_eq!(l.len(), 30);
        assert_eq!(r.len(), 30);
        assert!(l.iter().all(|&(_, y)| (12..=14).contains(&y)));
        assert!(r.iter().all(|&(_, y)| (6..=8).contains(&y)));
    }

    #[test]
    fn step_boundary_is_significant_and_uniform_is_not() {
        let a = Coherency::diag(1.0, 0.5, 0.2);
        let px = Grid::from_fn(30, 30, |_, y| if y < 10 { a } else { a * 6.3 });
        let img = CoherencyImage::new(px, 4.0).unwrap();
        assert!(line_significance(&hline(10.0, 5.0, 20.0), &img) > 100.0);
        let flat = CoherencyImage::constant(30, 30, a, 4.0);
        assert!(line_significance(&hline(10.0, 5.0, 20.0), &flat) < 1e-9);
    }

    #[test]
    fn degenerate_flanks_give_zero() {
        let img = CoherencyImage::constant(30, 30, Coherency::identity(), 4.0);
        // one side entirely outside the image
        assert_eq!(line_significance(&hline(0.0, 5.0, 20.0), &img), 0.0);
        let zero = SketchLine::new(vec![SketchSegment::new(
            Point::new(5.0, 5.0),
            Point::new(5.0, 5.0),
        )]);
        assert_eq!(line_significance(&zero, &img), 0.0);
    }
}
