use super::energy::EnergyField;
use crate::raster::{Grid, Mask};

/// Integer step along the normal `(−sin θ, cos θ)` of the axis angle `θ`.
pub fn normal_step(angle: f64) -> (i64, i64) {
    ((-angle.sin()).round() as i64, angle.cos().round() as i64)
}

/// Non-maxima suppression: a pixel with positive energy survives iff it is
/// strictly larger than both neighbours one step along the normal to its
/// winning orientation. Neighbours outside the image count as zero.
///
/// Neighbouring pixels with different orientations can both pass that test;
/// such pairs are resolved in order of decreasing energy (row-major on ties)
/// so the surviving edges stay one pixel wide along every kept normal.
pub fn nonmax_suppress(field: &EnergyField) -> Mask {
    let (w, h) = field.shape();
    let e = &field.energy;
    let mut keep = Grid::from_fn(w, h, |x, y| {
        let v = *e.get(x, y);
        if v <= 0.0 {
            return false;
        }
        let (nx, ny) = normal_step(field.angle(x, y));
        [(nx, ny), (-nx, -ny)].iter().all(|&(dx, dy)| {
            let n = e
                .get_signed(x as i64 + dx, y as i64 + dy)
                .copied()
                .unwrap_or(0.0);
            v > n
        })
    });
    let mut order: Vec<usize> = (0..w * h).filter(|&i| keep.as_slice()[i]).collect();
    order.sort_by(|&a, &b| e.as_slice()[b].total_cmp(&e.as_slice()[a]).then(a.cmp(&b)));
    for i in order {
        if !keep.as_slice()[i] {
            continue;
        }
        let (x, y) = (i % w, i / w);
        let (nx, ny) = normal_step(field.angle(x, y));
        for (dx, dy) in [(nx, ny), (-nx, -ny)] {
            let (qx, qy) = (x as i64 + dx, y as i64 + dy);
            if keep.contains(qx, qy) && *keep.get(qx as usize, qy as usize) {
                *keep.get_mut(qx as usize, qy as usize) = false;
            }
        }
    }
    keep
}

/// The field with energy zeroed outside `mask`.
pub fn masked(field: &EnergyField, mask: &Mask) -> EnergyField {
    let mut out = field.clone();
    for (e, &keep) in out.energy.as_mut_slice().iter_mut().zip(mask.as_slice()) {
        if !keep {
            *e = 0.0;
        }
    }
    out
}
