use super::energy::{EnergyField, EnergyKind};
use crate::error::{Error, Result};

fn normalized(f: &EnergyField) -> Vec<f64> {
    let m = f.max_energy();
    if m > 0.0 {
        f.energy.as_slice().iter().map(|e| e / m).collect()
    } else {
        vec![0.0; f.energy.len()]
    }
}

/// Symmetrical sum `xy / (1 − x − y + 2xy)` of two values in `[0, 1]`.
///
/// 0.5 is neutral, agreement above 0.5 reinforces and a response only one of
/// the two inputs supports is damped. `(1, 0)` has no defined value and maps
/// to 0.5.
pub fn symmetrical_sum(x: f64, y: f64) -> f64 {
    let den = 1.0 - x - y + 2.0 * x * y;
    if den > 0.0 {
        (x * y / den).clamp(0.0, 1.0)
    } else {
        0.5
    }
}

fn check_pair(a: &EnergyField, b: &EnergyField) -> Result<()> {
    b.energy.ensure_shape(a.shape())?;
    if a.orientations != b.orientations {
        return Err(Error::InvalidParameter(
            "fields come from different banks".into(),
        ));
    }
    Ok(())
}

/// Pointwise combination of two max-normalised fields. Orientation and scale
/// come from whichever normalised input is larger; ties go to `a`.
fn combine(
    a: &EnergyField,
    b: &EnergyField,
    kind: EnergyKind,
    op: impl Fn(f64, f64) -> f64,
) -> Result<EnergyField> {
    check_pair(a, b)?;
    let (w, h) = a.shape();
    let (na, nb) = (normalized(a), normalized(b));
    let mut out = EnergyField::zeros(w, h, kind, a.orientations);
    for i in 0..na.len() {
        let src = if nb[i] > na[i] { b } else { a };
        out.energy.as_mut_slice()[i] = op(na[i], nb[i]);
        out.orientation.as_mut_slice()[i] = src.orientation.as_slice()[i];
        out.scale.as_mut_slice()[i] = src.scale.as_slice()[i];
    }
    Ok(out)
}

/// Fuses a CFAR field with a gradient field of the same kind.
///
/// Both inputs are scaled to `[0, 1]` by their global maxima and merged with
/// the [`symmetrical_sum`]: strong gradient responses in speckle that the
/// CFAR test does not support are damped, while joint responses (edges,
/// bright urban texture) are pushed towards 1. An all-zero input leaves the
/// other one, normalised, unchanged.
pub fn fuse_energy(cfar: &EnergyField, grad: &EnergyField) -> Result<EnergyField> {
    if cfar.kind != grad.kind {
        return Err(Error::InvalidParameter(
            "cannot fuse fields of different kinds".into(),
        ));
    }
    check_pair(cfar, grad)?;
    if grad.max_energy() <= 0.0 || cfar.max_energy() <= 0.0 {
        return combine(cfar, grad, cfar.kind, f64::max);
    }
    combine(cfar, grad, cfar.kind, symmetrical_sum)
}

/// Merges fused edge and line fields into one edge-line field by pointwise
/// max; ties keep the edge response.
pub fn combine_edge_line(edge: &EnergyField, line: &EnergyField) -> Result<EnergyField> {
    combine(edge, line, EnergyKind::EdgeLine, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Grid;

    fn field(values: &[f64], orient: &[u16], kind: EnergyKind) -> EnergyField {
        let mut f = EnergyField::zeros(values.len(), 1, kind, 18);
        f.energy = Grid::from_vec(values.len(), 1, values.to_vec()).unwrap();
        f.orientation = Grid::from_vec(values.len(), 1, orient.to_vec()).unwrap();
        f
    }

    #[test]
    fn zero_gradient_passes_cfar_through() {
        let c = field(&[0.0, 2.0, 4.0], &[1, 2, 3], EnergyKind::Edge);
        let g = field(&[0.0, 0.0, 0.0], &[7, 7, 7], EnergyKind::Edge);
        let f = fuse_energy(&c, &g).unwrap();
        assert_eq!(f.energy.as_slice(), &[0.0, 0.5, 1.0]);
        assert_eq!(f.orientation.as_slice(), &[1, 2, 3]);
    }

    #[test]
    fn fused_values_and_orientation() {
        let c = field(&[1.0, 4.0, 2.0, 0.0], &[1, 1, 1, 1], EnergyKind::Line);
        let g = field(&[3.0, 1.0, 6.0, 6.0], &[5, 5, 5, 5], EnergyKind::Line);
        let f = fuse_energy(&c, &g).unwrap();
        // (0.25, 0.5) -> 0.25; (1, 1/6) -> 1; (0.5, 1) -> 1; (0, 1) -> 0.5
        let want = [0.25, 1.0, 1.0, 0.5];
        for (a, b) in f.energy.as_slice().iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert_eq!(f.orientation.as_slice(), &[5, 1, 5, 5]);
    }

    #[test]
    fn symmetrical_sum_properties() {
        for &x in &[0.0, 0.1, 0.3, 0.5, 0.8, 0.95] {
            assert!((symmetrical_sum(x, 0.5) - x).abs() < 1e-12);
            for &y in &[0.05, 0.4, 0.7, 0.99] {
                assert!((symmetrical_sum(x, y) - symmetrical_sum(y, x)).abs() < 1e-15);
                let s = symmetrical_sum(x, y);
                assert!((0.0..=1.0).contains(&s));
                // both above neutral reinforce, both below damp
                if x > 0.5 && y > 0.5 {
                    assert!(s >= x.max(y));
                }
                if x < 0.5 && y < 0.5 {
                    assert!(s <= x.min(y));
                }
            }
        }
        assert_eq!(symmetrical_sum(1.0, 0.0), 0.5);
    }

    #[test]
    fn edge_line_combination_is_pointwise_max() {
        let e = field(&[1.0, 4.0, 2.0], &[1, 1, 1], EnergyKind::Edge);
        let l = field(&[3.0, 1.0, 2.0], &[5, 5, 5], EnergyKind::Line);
        let f = combine_edge_line(&e, &l).unwrap();
        assert_eq!(f.energy.as_slice(), &[1.0, 1.0, 2.0 / 3.0]);
        assert_eq!(f.orientation.as_slice(), &[5, 1, 5]);
        assert_eq!(f.kind, EnergyKind::EdgeLine);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let a = field(&[1.0], &[0], EnergyKind::Edge);
        let b = field(&[1.0], &[0], EnergyKind::Line);
        assert!(fuse_energy(&a, &b).is_err());
        let c = field(&[1.0, 2.0], &[0, 0], EnergyKind::Edge);
        assert!(fuse_energy(&a, &c).is_err());
    }
}
