use crate::coherency::Coherency;
use crate::error::{Error, Result};
use crate::raster::{CoherencyImage, Grid, ScalarRaster};

/// Total backscattered power `T11 + T22 + T33` per pixel.
pub fn span(img: &CoherencyImage) -> ScalarRaster {
    img.pixels().map(|t| t.trace().max(0.0))
}

/// Pauli colour composite: R = T22, G = T33, B = T11.
///
/// Each channel is log-scaled, clipped at `clip_percentile` of its positive
/// values and normalised to `[0, 1]`. Zero-power pixels map to 0; a channel
/// whose positive values are all equal maps them to 1.
pub fn pauli_rgb(img: &CoherencyImage, clip_percentile: f64) -> Result<[ScalarRaster; 3]> {
    if !(clip_percentile > 0.5 && clip_percentile <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "clip percentile must lie in (0.5, 1], got {clip_percentile}"
        )));
    }
    let px = img.pixels();
    Ok([
        log_normalize(&px.map(|t| t.t22), clip_percentile),
        log_normalize(&px.map(|t| t.t33), clip_percentile),
        log_normalize(&px.map(|t| t.t11), clip_percentile),
    ])
}

/// Nearest-rank percentile of a non-empty sorted slice.
pub(crate) fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

fn log_normalize(channel: &ScalarRaster, clip: f64) -> ScalarRaster {
    let mut logs: Vec<f64> = channel
        .as_slice()
        .iter()
        .filter(|v| **v > 0.0)
        .map(|v| v.ln())
        .collect();
    if logs.is_empty() {
        return channel.map(|_| 0.0);
    }
    logs.sort_by(f64::total_cmp);
    let lo = logs[0];
    let hi = percentile_sorted(&logs, clip);
    channel.map(|&v| {
        if v <= 0.0 {
            0.0
        } else if hi <= lo {
            1.0
        } else {
            ((v.ln() - lo) / (hi - lo)).clamp(0.0, 1.0)
        }
    })
}

/// Boxcar multilooking over `az × rg` blocks (rows × columns). Trailing
/// partial blocks are dropped so every output pixel averages exactly
/// `az * rg` inputs.
pub fn multilook(img: &CoherencyImage, az: usize, rg: usize) -> Result<CoherencyImage> {
    if az == 0 || rg == 0 {
        return Err(Error::InvalidParameter(
            "multilook factors must be >= 1".into(),
        ));
    }
    let (w, h) = img.shape();
    if az > h || rg > w {
        return Err(Error::BlockExceedsImage {
            az,
            rg,
            width: w,
            height: h,
        });
    }
    let (ow, oh) = (w / rg, h / az);
    let norm = 1.0 / (az * rg) as f64;
    let pixels = Grid::from_fn(ow, oh, |ox, oy| {
        let mut acc = Coherency::ZERO;
        for y in oy * az..(oy + 1) * az {
            for x in ox * rg..(ox + 1) * rg {
                acc += *img.get(x, y);
            }
        }
        acc * norm
    });
    CoherencyImage::new(pixels, img.looks() * (az * rg) as f64)
}
