use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bank::{BankConfig, FilterBank, OrientedFilter, WeightedSet};
use super::wishart::pooled_statistic;
use crate::coherency::{Coherency, CHANNELS};
use crate::error::{Error, Result};
use crate::raster::{CoherencyImage, Grid, ScalarRaster};

/// Gradient floor inside the logarithm.
pub const GRADIENT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyKind {
    Edge,
    Line,
    /// Per-pixel maximum of the edge and line responses.
    EdgeLine,
}

/// How the gradient norm is mapped to energy. In log mode the computed field
/// is shifted so its minimum over the image is 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientScale {
    /// `ln(ε + ‖Δ‖) − ln ε`
    #[default]
    Log,
    /// Raw norm `‖Δ‖`.
    Linear,
}

/// Per-pixel energy with the winning orientation and scale indices.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyField {
    pub energy: ScalarRaster,
    pub orientation: Grid<u16>,
    pub scale: Grid<u16>,
    pub kind: EnergyKind,
    /// Number of orientations of the bank that produced the field.
    pub orientations: usize,
}

impl EnergyField {
    pub fn zeros(width: usize, height: usize, kind: EnergyKind, orientations: usize) -> Self {
        EnergyField {
            energy: Grid::filled(width, height, 0.0),
            orientation: Grid::filled(width, height, 0),
            scale: Grid::filled(width, height, 0),
            kind,
            orientations,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.energy.shape()
    }

    /// Axis angle (radians, from +x towards +y) of the winning filter at `(x, y)`.
    pub fn angle(&self, x: usize, y: usize) -> f64 {
        std::f64::consts::PI * *self.orientation.get(x, y) as f64 / self.orientations as f64
    }

    pub fn max_energy(&self) -> f64 {
        self.energy.as_slice().iter().copied().fold(0.0, f64::max)
    }

    fn update(&mut self, i: usize, e: f64, oi: usize, si: usize) {
        if e > self.energy.as_slice()[i] {
            self.energy.as_mut_slice()[i] = e;
            self.orientation.as_mut_slice()[i] = oi as u16;
            self.scale.as_mut_slice()[i] = si as u16;
        }
    }
}

/// Response of one detector at one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Response {
    pub energy: f64,
    pub orientation: usize,
    pub scale: usize,
}

/// The four raw energy fields computed in one pass over the bank.
#[derive(Debug, Clone)]
pub struct DetectorOutput {
    pub cfar_edge: EnergyField,
    pub cfar_line: EnergyField,
    pub grad_edge: EnergyField,
    pub grad_line: EnergyField,
}

/// Reflect-101 index into `0..n`.
fn reflect(i: i64, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as i64 - 1);
    let m = i.rem_euclid(period);
    (if m < n as i64 { m } else { period - m }) as usize
}

/// Weighted mean `Σ wᵢ Tᵢ` of the set placed at `(x, y)`; offsets that leave
/// the image are mirrored back inside.
pub fn weighted_mean_coherency(
    img: &CoherencyImage,
    set: &WeightedSet,
    x: usize,
    y: usize,
) -> Result<Coherency> {
    if set.is_empty() {
        return Err(Error::DegenerateFilter);
    }
    let (w, h) = img.shape();
    let mut acc = Coherency::ZERO;
    for (&(dx, dy), &wt) in set.offsets.iter().zip(&set.weights) {
        let px = reflect(x as i64 + dx as i64, w);
        let py = reflect(y as i64 + dy as i64, h);
        acc.add_scaled(wt, img.get(px, py));
    }
    Ok(acc)
}

struct FilterStats {
    cfar_edge: f64,
    cfar_line: f64,
    grad_edge: f64,
    grad_line: f64,
}

/// Differences this close to the rounding error of the means are treated as 0.
const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;

fn gradient(a: &[f64; 9], b: &[f64; 9], mode: GradientScale) -> f64 {
    let norm = |v: &[f64; 9]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut d = a
        .iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt();
    if d <= ROUNDING_FLOOR * norm(a).max(norm(b)) {
        d = 0.0;
    }
    match mode {
        GradientScale::Log => (GRADIENT_EPS + d).ln() - GRADIENT_EPS.ln(),
        GradientScale::Linear => d,
    }
}

/// `means` = side a, side b, centre, flank a, flank b.
fn filter_stats(
    means: &[[f64; 9]; 5],
    f: &OrientedFilter,
    looks: f64,
    mode: GradientScale,
) -> FilterStats {
    let z: Vec<Coherency> = means.iter().map(Coherency::from_vec9).collect();
    let ne = looks * f.edge_count;
    let nc = looks * f.center_count;
    let nf = looks * f.flank_count;
    let cfar_edge = pooled_statistic(&z[0], ne, &z[1], ne, CHANNELS);
    let cfar_line = pooled_statistic(&z[2], nc, &z[3], nf, CHANNELS)
        .min(pooled_statistic(&z[2], nc, &z[4], nf, CHANNELS));
    let grad_edge = gradient(&means[0], &means[1], mode);
    let grad_line = gradient(&means[2], &means[3], mode).min(gradient(&means[2], &means[4], mode));
    FilterStats {
        cfar_edge,
        cfar_line,
        grad_edge,
        grad_line,
    }
}

fn pixel_stats(
    img: &CoherencyImage,
    f: &OrientedFilter,
    x: usize,
    y: usize,
    mode: GradientScale,
) -> FilterStats {
    let sets = [&f.side_a, &f.side_b, &f.center, &f.flank_a, &f.flank_b];
    let mut means = [[0.0; 9]; 5];
    for (m, s) in means.iter_mut().zip(sets) {
        *m = weighted_mean_coherency(img, s, x, y)
            .expect("bank sets are never empty")
            .to_vec9();
    }
    filter_stats(&means, f, img.looks(), mode)
}

fn best_over_bank(
    img: &CoherencyImage,
    bank: &FilterBank,
    x: usize,
    y: usize,
    mode: GradientScale,
    pick: impl Fn(&FilterStats) -> f64,
) -> Response {
    let mut best = Response {
        energy: 0.0,
        orientation: 0,
        scale: 0,
    };
    for f in bank.filters() {
        let e = pick(&pixel_stats(img, f, x, y, mode));
        if e > best.energy {
            best = Response {
                energy: e,
                orientation: f.orientation_index,
                scale: f.scale_index,
            };
        }
    }
    best
}

/// Weighted CFAR edge energy `max −2ρ ln Q` between the two filter sides.
pub fn cfar_edge_energy(img: &CoherencyImage, bank: &FilterBank, x: usize, y: usize) -> Response {
    best_over_bank(img, bank, x, y, GradientScale::Log, |s| s.cfar_edge)
}

/// Weighted CFAR line energy: the smaller of the two centre-vs-flank tests,
/// maximised over the bank.
pub fn cfar_line_energy(img: &CoherencyImage, bank: &FilterBank, x: usize, y: usize) -> Response {
    best_over_bank(img, bank, x, y, GradientScale::Log, |s| s.cfar_line)
}

/// Gradient edge and line energies at one pixel.
pub fn gradient_energy(
    img: &CoherencyImage,
    bank: &FilterBank,
    x: usize,
    y: usize,
    mode: GradientScale,
) -> (Response, Response) {
    (
        best_over_bank(img, bank, x, y, mode, |s| s.grad_edge),
        best_over_bank(img, bank, x, y, mode, |s| s.grad_line),
    )
}

/// Mirror-padded, plane-major copy of an image for shifted accumulation.
struct Padded {
    planes: Vec<Vec<f64>>,
    stride: usize,
    pad: usize,
    width: usize,
    height: usize,
}

impl Padded {
    fn new(img: &CoherencyImage, pad: usize) -> Self {
        let (w, h) = img.shape();
        let stride = w + 2 * pad;
        let rows = h + 2 * pad;
        let mut planes = vec![vec![0.0; stride * rows]; 9];
        for py in 0..rows {
            let sy = reflect(py as i64 - pad as i64, h);
            for px in 0..stride {
                let sx = reflect(px as i64 - pad as i64, w);
                let v = img.get(sx, sy).to_vec9();
                for (k, plane) in planes.iter_mut().enumerate() {
                    plane[py * stride + px] = v[k];
                }
            }
        }
        Padded {
            planes,
            stride,
            pad,
            width: w,
            height: h,
        }
    }

    /// Weighted sum of shifted copies, plane-major `9 × (w·h)`.
    fn smooth(&self, set: &WeightedSet) -> Vec<f64> {
        let (w, h) = (self.width, self.height);
        let n = w * h;
        let mut out = vec![0.0; 9 * n];
        out.par_chunks_mut(n).enumerate().for_each(|(k, dst)| {
            let src = &self.planes[k];
            for (&(dx, dy), &wt) in set.offsets.iter().zip(&set.weights) {
                let col = (self.pad as i64 + dx as i64) as usize;
                for y in 0..h {
                    let row = (y as i64 + dy as i64 + self.pad as i64) as usize;
                    let s = &src[row * self.stride + col..row * self.stride + col + w];
                    for (o, v) in dst[y * w..(y + 1) * w].iter_mut().zip(s) {
                        *o += wt * v;
                    }
                }
            }
        });
        out
    }
}

/// Hybrid edge/line detector over a fixed filter bank.
#[derive(Debug, Clone)]
pub struct Detector {
    bank: FilterBank,
}

impl Detector {
    pub fn new(config: &BankConfig) -> Result<Self> {
        Ok(Detector {
            bank: FilterBank::new(config)?,
        })
    }

    pub fn from_bank(bank: FilterBank) -> Self {
        Detector { bank }
    }

    pub fn bank(&self) -> &FilterBank {
        &self.bank
    }

    /// Computes all four energy fields over the image.
    pub fn compute(&self, img: &CoherencyImage, mode: GradientScale) -> DetectorOutput {
        let (w, h) = img.shape();
        let no = self.bank.orientations();
        let mut out = DetectorOutput {
            cfar_edge: EnergyField::zeros(w, h, EnergyKind::Edge, no),
            cfar_line: EnergyField::zeros(w, h, EnergyKind::Line, no),
            grad_edge: EnergyField::zeros(w, h, EnergyKind::Edge, no),
            grad_line: EnergyField::zeros(w, h, EnergyKind::Line, no),
        };
        if w == 0 || h == 0 {
            return out;
        }
        let padded = Padded::new(img, self.bank.radius());
        let n = w * h;
        let looks = img.looks();
        for f in self.bank.filters() {
            let acc: Vec<Vec<f64>> = [&f.side_a, &f.side_b, &f.center, &f.flank_a, &f.flank_b]
                .iter()
                .map(|s| padded.smooth(s))
                .collect();
            let stats: Vec<FilterStats> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut means = [[0.0; 9]; 5];
                    for (m, a) in means.iter_mut().zip(&acc) {
                        for (k, v) in m.iter_mut().enumerate() {
                            *v = a[k * n + i];
                        }
                    }
                    filter_stats(&means, f, looks, mode)
                })
                .collect();
            let (oi, si) = (f.orientation_index, f.scale_index);
            for (i, s) in stats.iter().enumerate() {
                out.cfar_edge.update(i, s.cfar_edge, oi, si);
                out.cfar_line.update(i, s.cfar_line, oi, si);
                out.grad_edge.update(i, s.grad_edge, oi, si);
                out.grad_line.update(i, s.grad_line, oi, si);
            }
        }
        if mode == GradientScale::Log {
            shift_to_zero(&mut out.grad_edge);
            shift_to_zero(&mut out.grad_line);
        }
        out
    }
}

/// Subtracts the smallest positive log-gradient so the field starts at 0.
/// Pixels already at the floor (image corners under mirror padding, flat
/// areas) stay at 0.
fn shift_to_zero(f: &mut EnergyField) {
    let lo = f
        .energy
        .as_slice()
        .iter()
        .copied()
        .filter(|&e| e > 0.0)
        .fold(f64::INFINITY, f64::min);
    if lo.is_finite() {
        for e in f.energy.as_mut_slice() {
            *e = (*e - lo).max(0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherency::tests::random_psd;
    use crate::data::Layout;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_bank() -> FilterBank {
        FilterBank::new(&BankConfig {
            scales: vec![2.0],
            orientations: 8,
        })
        .unwrap()
    }

    fn random_image(w: usize, h: usize, seed: u64) -> CoherencyImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let px = Grid::from_fn(w, h, |_, _| random_psd(&mut rng));
        CoherencyImage::new(px, 3.0).unwrap()
    }

    #[test]
    fn reflect_indices() {
        let got: Vec<usize> = (-3..8).map(|i| reflect(i, 5)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 1, 2, 3, 4, 3, 2, 1]);
        assert_eq!(reflect(-7, 1), 0);
    }

    #[test]
    fn weighted_mean_constant_and_uniform() {
        let t = Coherency::diag(1.0, 2.0, 3.0);
        let img = CoherencyImage::constant(6, 6, t, 1.0);
        let bank = small_bank();
        let f = &bank.filters()[3];
        let m = weighted_mean_coherency(&img, &f.side_a, 0, 0).unwrap();
        assert!((m - t).frobenius() < 1e-12);

        let img = random_image(4, 4, 9);
        let set = WeightedSet::uniform(vec![(0, 0), (1, 0)]);
        let m = weighted_mean_coherency(&img, &set, 1, 1).unwrap();
        let want = (*img.get(1, 1) + *img.get(2, 1)) * 0.5;
        assert!((m - want).frobenius() < 1e-12);

        let empty = WeightedSet::uniform(vec![]);
        assert!(matches!(
            weighted_mean_coherency(&img, &empty, 0, 0),
            Err(Error::DegenerateFilter)
        ));
    }

    #[test]
    fn weighted_mean_matches_brute_force() {
        let img = random_image(16, 16, 10);
        let bank = small_bank();
        let f = &bank.filters()[5];
        let m = weighted_mean_coherency(&img, &f.flank_a, 8, 7).unwrap();
        let mut want = [[num_complex::Complex64::new(0.0, 0.0); 3]; 3];
        for (&(dx, dy), &w) in f.flank_a.offsets.iter().zip(&f.flank_a.weights) {
            let t = img.get((8 + dx) as usize, (7 + dy) as usize).to_matrix();
            for r in 0..3 {
                for c in 0..3 {
                    want[r][c] += t[r][c] * w;
                }
            }
        }
        let got = m.to_matrix();
        for r in 0..3 {
            for c in 0..3 {
                assert!((got[r][c] - want[r][c]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn field_matches_per_pixel_evaluation() {
        let img = random_image(20, 14, 11);
        let det = Detector::from_bank(small_bank());
        let out = det.compute(&img, GradientScale::Linear);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..12 {
            let (x, y) = (rng.random_range(0..20), rng.random_range(0..14));
            let e = cfar_edge_energy(&img, det.bank(), x, y);
            assert!((e.energy - out.cfar_edge.energy.get(x, y)).abs() < 1e-9 * e.energy.max(1.0));
            assert_eq!(e.orientation, *out.cfar_edge.orientation.get(x, y) as usize);
            let l = cfar_line_energy(&img, det.bank(), x, y);
            assert!((l.energy - out.cfar_line.energy.get(x, y)).abs() < 1e-9 * l.energy.max(1.0));
            let (ge, gl) = gradient_energy(&img, det.bank(), x, y, GradientScale::Linear);
            assert!((ge.energy - out.grad_edge.energy.get(x, y)).abs() < 1e-9 * ge.energy.max(1.0));
            assert!((gl.energy - out.grad_line.energy.get(x, y)).abs() < 1e-9 * gl.energy.max(1.0));
        }
    }

    #[test]
    fn constant_image_has_zero_energy() {
        let img = CoherencyImage::constant(24, 24, Coherency::diag(2.0, 1.0, 0.5), 4.0);
        let det = Detector::new(&BankConfig::default()).unwrap();
        let out = det.compute(&img, GradientScale::Log);
        for f in [
            &out.cfar_edge,
            &out.cfar_line,
            &out.grad_edge,
            &out.grad_line,
        ] {
            assert!(f.max_energy() < 1e-12);
        }
    }

    #[test]
    fn vertical_edge_orientation() {
        let scene = Layout::TwoClassEdge { contrast_db: 6.0 }
            .sample(64, 64, 4, 3)
            .unwrap();
        let det = Detector::new(&BankConfig::default()).unwrap();
        let out = det.compute(&scene.image, GradientScale::Log);
        let step = 180.0 / det.bank().orientations() as f64;
        let mut good = 0;
        for y in 0..64 {
            for x in [31, 32] {
                let o = *out.cfar_edge.orientation.get(x, y) as f64 * step;
                if crate::geometry::orientation_diff_deg(o, 90.0) <= step + 1e-9 {
                    good += 1;
                }
            }
        }
        assert!(good as f64 >= 0.9 * 128.0, "{good}");
    }

    #[test]
    fn edge_energy_grows_with_contrast() {
        let det = Detector::from_bank(small_bank());
        let base = Coherency::diag(1.0, 0.5, 0.25);
        let mut last = -1.0;
        for c in [1.0, 2.0, 4.0, 8.0] {
            let px = Grid::from_fn(16, 16, |x, _| if x < 8 { base } else { base * c });
            let img = CoherencyImage::new(px, 4.0).unwrap();
            let e = cfar_edge_energy(&img, det.bank(), 8, 8).energy;
            assert!(e > last || (c == 1.0 && e == 0.0));
            last = e;
        }
    }

    #[test]
    fn bright_line_peaks_on_center() {
        let det = Detector::new(&BankConfig::default()).unwrap();
        let base = Coherency::diag(1.0, 1.0, 1.0);
        let px = Grid::from_fn(40, 40, |_, y| {
            if (19..=21).contains(&y) {
                base * 8.0
            } else {
                base
            }
        });
        let img = CoherencyImage::new(px, 4.0).unwrap();
        let center = cfar_line_energy(&img, det.bank(), 20, 20).energy;
        let flank = cfar_line_energy(&img, det.bank(), 20, 23).energy;
        assert!(center > flank, "{center} vs {flank}");

        // a plain step has a much weaker line response than edge response
        let px = Grid::from_fn(40, 40, |_, y| if y < 20 { base * 8.0 } else { base });
        let img = CoherencyImage::new(px, 4.0).unwrap();
        let e = cfar_edge_energy(&img, det.bank(), 20, 20).energy;
        let l = cfar_line_energy(&img, det.bank(), 20, 20).energy;
        assert!(l < 0.25 * e, "{l} vs {e}");
    }

    #[test]
    fn log_field_is_shifted_to_zero() {
        let img = random_image(20, 14, 14);
        let det = Detector::from_bank(small_bank());
        let out = det.compute(&img, GradientScale::Log);
        let lo = (0..14)
            .flat_map(|y| (0..20).map(move |x| (x, y)))
            .map(|(x, y)| {
                gradient_energy(&img, det.bank(), x, y, GradientScale::Log)
                    .0
                    .energy
            })
            .filter(|&e| e > 0.0)
            .fold(f64::INFINITY, f64::min);
        for (x, y) in [(0, 0), (5, 7), (19, 13)] {
            let raw = gradient_energy(&img, det.bank(), x, y, GradientScale::Log)
                .0
                .energy;
            let want = (raw - lo).max(0.0);
            assert!((out.grad_edge.energy.get(x, y) - want).abs() < 1e-9);
        }
        let min = out
            .grad_edge
            .energy
            .as_slice()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        assert_eq!(min, 0.0);
    }

    #[test]
    fn cfar_scale_invariant() {
        let img = random_image(18, 18, 12);
        let det = Detector::from_bank(small_bank());
        let a = det.compute(&img, GradientScale::Log);
        for c in [0.1, 10.0] {
            let b = det.compute(&img.scaled(c), GradientScale::Log);
            for (p, q) in a
                .cfar_edge
                .energy
                .as_slice()
                .iter()
                .zip(b.cfar_edge.energy.as_slice())
            {
                assert!((p - q).abs() <= 1e-9 * p.abs().max(1.0));
            }
        }
    }

    #[test]
    fn gradient_log_homogeneity() {
        let img = random_image(12, 12, 13);
        let bank = small_bank();
        let (a, _) = gradient_energy(&img, &bank, 6, 6, GradientScale::Linear);
        let (b, _) = gradient_energy(&img.scaled(2.0), &bank, 6, 6, GradientScale::Linear);
        assert!((b.energy - 2.0 * a.energy).abs() < 1e-9 * a.energy);
        let (a, _) = gradient_energy(&img, &bank, 6, 6, GradientScale::Log);
        let (b, _) = gradient_energy(&img.scaled(2.0), &bank, 6, 6, GradientScale::Log);
        assert!((b.energy - a.energy - 2f64.ln()).abs() < 1e-9);
    }
}
