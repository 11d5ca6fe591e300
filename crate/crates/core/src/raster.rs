//! Row-major rasters.

use crate::coherency::Coherency;
use crate::error::{Error, Result};

/// A row-major `width × height` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Grid {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "grid data has {} elements, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Grid {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Grid {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut T {
        &mut self.data[y * self.width + x]
    }

    /// Signed lookup; `None` outside the grid.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> Option<&T> {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            None
        } else {
            Some(&self.data[y as usize * self.width + x as usize])
        }
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && x < self.width as i64 && y < self.height as i64
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn rows(&self) -> std::slice::Chunks<'_, T> {
        self.data.chunks(self.width.max(1))
    }

    pub fn ensure_shape(&self, shape: (usize, usize)) -> Result<()> {
        if self.shape() != shape {
            return Err(Error::ShapeMismatch {
                expected: shape,
                actual: self.shape(),
            });
        }
        Ok(())
    }
}

/// Real-valued raster (SPAN, energies, channels).
pub type ScalarRaster = Grid<f64>;

/// Integer label raster (class ids, region ids, truth).
pub type LabelRaster = Grid<u32>;

/// Binary mask.
pub type Mask = Grid<bool>;

/// Sentinel for "no label" in label rasters (ignored truth, no group).
pub const NO_LABEL: u32 = u32::MAX;

/// Raster of per-pixel coherency matrices with its effective number of looks.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherencyImage {
    pixels: Grid<Coherency>,
    looks: f64,
}

impl CoherencyImage {
    pub fn new(pixels: Grid<Coherency>, looks: f64) -> Result<Self> {
        if !(looks >= 1.0) || !looks.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "looks must be >= 1, got {looks}"
            )));
        }
        Ok(CoherencyImage { pixels, looks })
    }

    pub fn constant(width: usize, height: usize, t: Coherency, looks: f64) -> Self {
        CoherencyImage {
            pixels: Grid::filled(width, height, t),
            looks: looks.max(1.0),
        }
    }

    pub fn width(&self) -> usize {
        self.pixels.width()
    }

    pub fn height(&self) -> usize {
        self.pixels.height()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.pixels.shape()
    }

    pub fn looks(&self) -> f64 {
        self.looks
    }

    pub fn pixels(&self) -> &Grid<Coherency> {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &Coherency {
        self.pixels.get(x, y)
    }

    /// Multiplies every matrix by `c`.
    pub fn scaled(&self, c: f64) -> CoherencyImage {
        CoherencyImage {
            pixels: self.pixels.map(|t| *t * c),
            looks: self.looks,
        }
    }

    /// Checks the Hermitian-PSD invariant on every pixel.
    pub fn validate(&self) -> Result<()> {
        for (i, t) in self.pixels.as_slice().iter().enumerate() {
            if !t.is_finite() || t.t11 < 0.0 || t.t22 < 0.0 || t.t33 < 0.0 || !t.is_psd(1e-9) {
                return Err(Error::InvalidParameter(format!(
                    "pixel {i} is not a Hermitian PSD matrix"
                )));
            }
        }
        Ok(())
    }
}
