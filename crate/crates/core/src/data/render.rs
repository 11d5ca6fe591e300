//! 8-bit raster export as portable pixmaps (binary PPM).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::bresenham;
use crate::raster::{CoherencyImage, Grid, NO_LABEL};

/// How scalar or label values are mapped to colours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Palette {
    /// Min-max normalised grayscale.
    Gray,
    /// Pseudo-random colour per label; `NO_LABEL` is black.
    Labels,
    /// Aggregated gray, structural black, homogenous white.
    RegionMap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        for px in &self.data {
            out.extend_from_slice(px);
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_ppm())?;
        Ok(())
    }

    /// Draws straight segments `((x0, y0), (x1, y1))` in `color`.
    pub fn draw_segments(&mut self, segments: &[((f64, f64), (f64, f64))], color: [u8; 3]) {
        for &((x0, y0), (x1, y1)) in segments {
            let p0 = (x0.round() as i64, y0.round() as i64);
            let p1 = (x1.round() as i64, y1.round() as i64);
            for (x, y) in bresenham(p0, p1) {
                if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
                    self.data[y as usize * self.width + x as usize] = color;
                }
            }
        }
    }
}

fn label_color(label: u32) -> [u8; 3] {
    if label == NO_LABEL {
        return [0, 0, 0];
    }
    // splitmix-style hash, deterministic
    let mut z = (label as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    [
        64 + (z & 0xBF) as u8,
        64 + ((z >> 8) & 0xBF) as u8,
        64 + ((z >> 16) & 0xBF) as u8,
    ]
}

/// Renders a raster through a palette.
pub fn render<T: Copy + Into<f64>>(raster: &Grid<T>, palette: Palette) -> RgbImage {
    let values: Vec<f64> = raster.as_slice().iter().map(|&v| v.into()).collect();
    let data = match palette {
        Palette::Gray => {
            let finite = values.iter().copied().filter(|v| v.is_finite());
            let lo = finite.clone().fold(f64::INFINITY, f64::min);
            let hi = finite.fold(f64::NEG_INFINITY, f64::max);
            values
                .iter()
                .map(|&v| {
                    let g = if hi > lo && v.is_finite() {
                        ((v - lo) / (hi - lo) * 255.0).round() as u8
                    } else {
                        0
                    };
                    [g, g, g]
                })
                .collect()
        }
        Palette::Labels => values.iter().map(|&v| label_color(v as u32)).collect(),
        Palette::RegionMap => values
            .iter()
            .map(|&v| match v as u32 {
                0 => [128, 128, 128],
                1 => [0, 0, 0],
                _ => [255, 255, 255],
            })
            .collect(),
    };
    RgbImage {
        width: raster.width(),
        height: raster.height(),
        data,
    }
}

/// Writes `raster` as a PPM through `palette`.
pub fn save_raster<T: Copy + Into<f64>>(
    path: &Path,
    raster: &Grid<T>,
    palette: Palette,
) -> Result<()> {
    render(raster, palette).save(path)
}

/// Pauli RGB composite with the given clip percentile.
pub fn pauli_image(img: &CoherencyImage, clip: f64) -> Result<RgbImage> {
    let [r, g, b] = crate::data::pauli_rgb(img, clip)?;
    let q = |v: f64| (v * 255.0).round().clamp(0.0, 255.0) as u8;
    let data = (0..r.len())
        .map(|i| [q(r.as_slice()[i]), q(g.as_slice()[i]), q(b.as_slice()[i])])
        .collect();
    Ok(RgbImage {
        width: img.width(),
        height: img.height(),
        data,
    })
}

/// Log-scaled grayscale rendering of a non-negative power raster.
pub fn log_gray(raster: &Grid<f64>) -> RgbImage {
    let floor = raster
        .as_slice()
        .iter()
        .copied()
        .filter(|v| *v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let logged = raster.map(|&v| if v > 0.0 { v.ln() } else { floor.ln() });
    render(&logged, Palette::Gray)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_header_and_size() {
        let g = Grid::from_fn(3, 2, |x, _| x as f64);
        let img = render(&g, Palette::Gray);
        let bytes = img.to_ppm();
        assert!(bytes.starts_with(b"P6\n3 2\n255\n"));
        assert_eq!(bytes.len(), 11 + 3 * 2 * 3);
        assert_eq!(img.data[0], [0, 0, 0]);
        assert_eq!(img.data[2], [255, 255, 255]);
    }

    #[test]
    fn region_palette_colors() {
        let g: Grid<u32> = Grid::from_fn(3, 1, |x, _| x as u32);
        let img = render(&g, Palette::RegionMap);
        assert_eq!(img.data, vec![[128, 128, 128], [0, 0, 0], [255, 255, 255]]);
    }

    #[test]
    fn label_palette_is_deterministic() {
        assert_eq!(label_color(5), label_color(5));
        assert_ne!(label_color(5), label_color(6));
        assert_eq!(label_color(NO_LABEL), [0, 0, 0]);
    }
}
