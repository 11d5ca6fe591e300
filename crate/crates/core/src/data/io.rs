//! Binary raster formats.
//!
//! Containers are little-endian: an 8-byte magic, `u32` width and height,
//! then the payload. The coherency container stores the looks as `f64` and
//! every pixel as the full 3×3 complex matrix, row-major, `(re, im)` pairs
//! of `f64`, so save/load round trips are bit-exact.
//!
//! The T3 directory format holds nine `f32` planes named after the upper
//! triangle elements (`T11.bin`, `T12_real.bin`, …) plus a `config.txt`
//! with `Nrow`, `Ncol` and optionally `Nlook` entries.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coherency::Coherency;
use crate::error::{Error, Result};
use crate::raster::{CoherencyImage, Grid, LabelRaster, ScalarRaster};

pub const COHERENCY_MAGIC: &[u8; 8] = b"PSTCOH01";
pub const SCALAR_MAGIC: &[u8; 8] = b"PSTSCA01";
pub const LABEL_MAGIC: &[u8; 8] = b"PSTLAB01";

const HEADER: usize = 16;

/// On-disk layout of a coherency image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImageFormat {
    /// Single binary container file.
    Container,
    /// Directory of nine `f32` element planes.
    T3Dir,
}

pub fn load_image(path: &Path, format: ImageFormat) -> Result<CoherencyImage> {
    match format {
        ImageFormat::Container => read_coherency(path),
        ImageFormat::T3Dir => read_t3_dir(path, None),
    }
}

fn header(magic: &[u8; 8], w: usize, h: usize) -> Result<Vec<u8>> {
    let w32 =
        u32::try_from(w).map_err(|_| Error::InvalidParameter("width overflows u32".into()))?;
    let h32 =
        u32::try_from(h).map_err(|_| Error::InvalidParameter("height overflows u32".into()))?;
    let mut buf = Vec::with_capacity(HEADER);
    buf.extend_from_slice(magic);
    buf.extend_from_slice(&w32.to_le_bytes());
    buf.extend_from_slice(&h32.to_le_bytes());
    Ok(buf)
}

fn parse_header<'a>(
    bytes: &'a [u8],
    magic: &[u8; 8],
    what: &str,
) -> Result<(usize, usize, &'a [u8])> {
    if bytes.len() < HEADER {
        return Err(Error::Format(format!("{what}: truncated header")));
    }
    if &bytes[..8] != magic {
        return Err(Error::Format(format!("{what}: bad magic")));
    }
    let w = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let h = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    Ok((w, h, &bytes[HEADER..]))
}

fn f64_at(b: &[u8], i: usize) -> f64 {
    f64::from_le_bytes(b[i * 8..i * 8 + 8].try_into().unwrap())
}

/// Creates or truncates `path` and writes `bytes`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

pub fn write_coherency(path: &Path, img: &CoherencyImage) -> Result<()> {
    let (w, h) = img.shape();
    let mut buf = header(COHERENCY_MAGIC, w, h)?;
    buf.reserve(8 + w * h * 18 * 8);
    buf.extend_from_slice(&img.looks().to_le_bytes());
    for t in img.pixels().as_slice() {
        for row in t.to_matrix() {
            for c in row {
                buf.extend_from_slice(&c.re.to_le_bytes());
                buf.extend_from_slice(&c.im.to_le_bytes());
            }
        }
    }
    write_atomic(path, &buf)
}

pub fn read_coherency(path: &Path) -> Result<CoherencyImage> {
    let bytes = fs::read(path)?;
    let (w, h, body) = parse_header(&bytes, COHERENCY_MAGIC, "coherency container")?;
    let expected = 8 + w * h * 18 * 8;
    if body.len() != expected {
        return Err(Error::Format(format!(
            "coherency container: expected {expected} payload bytes, found {}",
            body.len()
        )));
    }
    let looks = f64_at(body, 0);
    let px = &body[8..];
    let data = (0..w * h)
        .map(|p| {
            let mut m = [[Complex64::new(0.0, 0.0); 3]; 3];
            for (k, cell) in m.iter_mut().flatten().enumerate() {
                let base = p * 18 + 2 * k;
                *cell = Complex64::new(f64_at(px, base), f64_at(px, base + 1));
            }
            Coherency::from_matrix(&m)
        })
        .collect();
    CoherencyImage::new(Grid::from_vec(w, h, data)?, looks)
}

pub fn write_scalar(path: &Path, r: &ScalarRaster) -> Result<()> {
    let mut buf = header(SCALAR_MAGIC, r.width(), r.height())?;
    for v in r.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(path, &buf)
}

pub fn read_scalar(path: &Path) -> Result<ScalarRaster> {
    let bytes = fs::read(path)?;
    let (w, h, body) = parse_header(&bytes, SCALAR_MAGIC, "scalar raster")?;
    if body.len() != w * h * 8 {
        return Err(Error::Format("scalar raster: payload size mismatch".into()));
    }
    Grid::from_vec(w, h, (0..w * h).map(|i| f64_at(body, i)).collect())
}

pub fn write_labels(path: &Path, r: &LabelRaster) -> Result<()> {
    let mut buf = header(LABEL_MAGIC, r.width(), r.height())?;
    for v in r.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(path, &buf)
}

pub fn read_labels(path: &Path) -> Result<LabelRaster> {
    let bytes = fs::read(path)?;
    let (w, h, body) = parse_header(&bytes, LABEL_MAGIC, "label raster")?;
    if body.len() != w * h * 4 {
        return Err(Error::Format("label raster: payload size mismatch".into()));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Grid::from_vec(w, h, data)
}

const T3_PLANES: [&str; 9] = [
    "T11", "T12_real", "T12_imag", "T13_real", "T13_imag", "T22", "T23_real", "T23_imag", "T33",
];

/// Writes a T3 directory (planes are `f32`, so this is lossy).
pub fn write_t3_dir(dir: &Path, img: &CoherencyImage) -> Result<()> {
    fs::create_dir_all(dir)?;
    let (w, h) = img.shape();
    let cfg = format!(
        "Nrow\n{h}\n---------\nNcol\n{w}\n---------\nNlook\n{}\n",
        img.looks()
    );
    fs::write(dir.join("config.txt"), cfg)?;
    for (k, name) in T3_PLANES.iter().enumerate() {
        let mut buf = Vec::with_capacity(w * h * 4);
        for t in img.pixels().as_slice() {
            let v = plane_value(t, k) as f32;
            buf.extend_from_slice(&v.to_le_bytes());
        }
        write_atomic(&dir.join(format!("{name}.bin")), &buf)?;
    }
    Ok(())
}

fn plane_value(t: &Coherency, k: usize) -> f64 {
    match k {
        0 => t.t11,
        1 => t.t12.re,
        2 => t.t12.im,
        3 => t.t13.re,
        4 => t.t13.im,
        5 => t.t22,
        6 => t.t23.re,
        7 => t.t23.im,
        _ => t.t33,
    }
}

fn parse_config(text: &str) -> Result<(usize, usize, Option<f64>)> {
    let lines: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    let value = |key: &str| -> Option<&str> {
        lines
            .iter()
            .position(|l| l.eq_ignore_ascii_case(key))
            .and_then(|i| lines.get(i + 1).copied())
    };
    let rows = value("Nrow").and_then(|v| v.parse().ok());
    let cols = value("Ncol").and_then(|v| v.parse().ok());
    let looks = value("Nlook").and_then(|v| v.parse().ok());
    match (rows, cols) {
        (Some(r), Some(c)) => Ok((c, r, looks)),
        _ => Err(Error::Format("config.txt: missing Nrow/Ncol".into())),
    }
}

/// Reads a T3 directory. `looks` overrides the `Nlook` entry; the default is 1.
pub fn read_t3_dir(dir: &Path, looks: Option<f64>) -> Result<CoherencyImage> {
    let cfg = fs::read_to_string(dir.join("config.txt"))?;
    let (w, h, cfg_looks) = parse_config(&cfg)?;
    let mut planes = Vec::with_capacity(9);
    for name in T3_PLANES {
        let bytes = fs::read(dir.join(format!("{name}.bin")))?;
        if bytes.len() != w * h * 4 {
            return Err(Error::InconsistentPlanes(format!(
                "{name}.bin holds {} bytes, expected {} for {w}x{h}",
                bytes.len(),
                w * h * 4
            )));
        }
        let plane: Vec<f64> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        planes.push(plane);
    }
    let data = (0..w * h)
        .map(|i| {
            let mut v = [0.0; 9];
            // reorder plane order into to_vec9 order
            v[0] = planes[0][i];
            v[1] = planes[5][i];
            v[2] = planes[8][i];
            v[3] = planes[1][i];
            v[4] = planes[2][i];
            v[5] = planes[3][i];
            v[6] = planes[4][i];
            v[7] = planes[6][i];
            v[8] = planes[7][i];
            Coherency::from_vec9(&v)
        })
        .collect();
    CoherencyImage::new(
        Grid::from_vec(w, h, data)?,
        looks.or(cfg_looks).unwrap_or(1.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth::Layout;

    fn scene() -> CoherencyImage {
        Layout::Mosaic {
            classes: 3,
            tile: 4,
        }
        .sample(9, 7, 3, 5)
        .unwrap()
        .image
    }

    #[test]
    fn container_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("img.bin");
        let img = scene();
        write_coherency(&p, &img).unwrap();
        assert_eq!(read_coherency(&p).unwrap(), img);
        assert_eq!(load_image(&p, ImageFormat::Container).unwrap(), img);
    }

    #[test]
    fn truncated_container_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("img.bin");
        write_coherency(&p, &scene()).unwrap();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 5]).unwrap();
        assert!(matches!(read_coherency(&p), Err(Error::Format(_))));
        fs::write(&p, &bytes[..10]).unwrap();
        assert!(read_coherency(&p).is_err());
        assert!(matches!(
            read_coherency(&dir.path().join("missing")),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn non_hermitian_container_is_repaired() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("img.bin");
        let mut buf = header(COHERENCY_MAGIC, 1, 1).unwrap();
        buf.extend_from_slice(&4.0f64.to_le_bytes());
        // row-major matrix with asymmetric off-diagonals and imaginary diagonal
        let m: [(f64, f64); 9] = [
            (2.0, 0.3),
            (0.5, 0.1),
            (0.0, 0.0),
            (0.3, 0.1),
            (1.0, 0.0),
            (0.0, 0.2),
            (0.0, 0.0),
            (0.0, 0.0),
            (1.0, 0.0),
        ];
        for (re, im) in m {
            buf.extend_from_slice(&re.to_le_bytes());
            buf.extend_from_slice(&im.to_le_bytes());
        }
        fs::write(&p, buf).unwrap();
        let t = *read_coherency(&p).unwrap().get(0, 0);
        let full = t.to_matrix();
        for i in 0..3 {
            assert_eq!(full[i][i].im, 0.0);
            for j in 0..3 {
                assert_eq!(full[i][j], full[j][i].conj());
            }
        }
        assert_eq!(t.t12, Complex64::new(0.4, -0.0));
    }

    #[test]
    fn t3_dir_round_trip_and_symmetrization() {
        let dir = tempfile::tempdir().unwrap();
        let img = scene();
        write_t3_dir(dir.path(), &img).unwrap();
        let back = load_image(dir.path(), ImageFormat::T3Dir).unwrap();
        assert_eq!(back.shape(), img.shape());
        assert_eq!(back.looks(), img.looks());
        for (a, b) in back.pixels().as_slice().iter().zip(img.pixels().as_slice()) {
            assert!((*a - *b).frobenius() < 1e-6 * b.frobenius().max(1.0));
            let m = a.to_matrix();
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(m[i][j], m[j][i].conj());
                }
            }
        }
    }

    #[test]
    fn t3_plane_size_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        write_t3_dir(dir.path(), &scene()).unwrap();
        fs::write(dir.path().join("T22.bin"), [0u8; 12]).unwrap();
        assert!(matches!(
            read_t3_dir(dir.path(), None),
            Err(Error::InconsistentPlanes(_))
        ));
    }

    #[test]
    fn scalar_and_label_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = Grid::from_fn(5, 3, |x, y| x as f64 * 0.1 - y as f64);
        write_scalar(&dir.path().join("s"), &s).unwrap();
        assert_eq!(read_scalar(&dir.path().join("s")).unwrap(), s);
        let l = Grid::from_fn(4, 2, |x, y| (x * 7 + y) as u32);
        write_labels(&dir.path().join("l"), &l).unwrap();
        assert_eq!(read_labels(&dir.path().join("l")).unwrap(), l);
    }
}
