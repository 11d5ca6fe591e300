use crate::geometry::{bresenham, Point};
use crate::raster::{Grid, Mask};
use crate::sketch::SketchSegment;

const FAR: f64 = 1e18;

/// 1-D squared distance transform (lower envelope of parabolas).
fn edt_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let mut v = vec![0usize; n];
    let mut z = vec![0f64; n + 1];
    let mut k = 0usize;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let meet = |q: usize, p: usize| {
        ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64)
    };
    for q in 1..n {
        let mut s = meet(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = meet(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let dq = q as f64 - v[k] as f64;
        *o = dq * dq + f[v[k]];
    }
}

/// Exact squared Euclidean distance from every pixel to the nearest set
/// pixel (`1e18` when the mask is empty).
pub fn squared_distance(mask: &Mask) -> Grid<f64> {
    let (w, h) = mask.shape();
    let mut g = mask.map(|&b| if b { 0.0 } else { FAR });
    let mut col = vec![0.0; h];
    let mut res = vec![0.0; h.max(w)];
    for x in 0..w {
        for y in 0..h {
            col[y] = *g.get(x, y);
        }
        edt_1d(&col, &mut res[..h]);
        for y in 0..h {
            *g.get_mut(x, y) = res[y];
        }
    }
    let mut row = vec![0.0; w];
    for y in 0..h {
        row.copy_from_slice(&g.as_slice()[y * w..(y + 1) * w]);
        edt_1d(&row, &mut res[..w]);
        g.as_mut_slice()[y * w..(y + 1) * w].copy_from_slice(&res[..w]);
    }
    g
}

fn dilate(mask: &Mask, radius: usize) -> Mask {
    let r2 = (radius * radius) as f64;
    squared_distance(mask).map(|&d| d <= r2)
}

fn erode(mask: &Mask, radius: usize) -> Mask {
    let r2 = (radius * radius) as f64;
    squared_distance(&mask.map(|&b| !b)).map(|&d| d > r2)
}

/// Morphological closing with the disc `{dx² + dy² ≤ radius²}`. The image is
/// padded by `radius` so the result always contains the input and a second
/// closing changes nothing.
pub fn close_mask(mask: &Mask, radius: usize) -> Mask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h) = mask.shape();
    let (pw, ph) = (w + 2 * radius, h + 2 * radius);
    let padded = Grid::from_fn(pw, ph, |x, y| {
        x >= radius
            && y >= radius
            && x < w + radius
            && y < h + radius
            && *mask.get(x - radius, y - radius)
    });
    let closed = erode(&dilate(&padded, radius), radius);
    Grid::from_fn(w, h, |x, y| *closed.get(x + radius, y + radius))
}

/// Draws segments as one-pixel polylines between their rounded endpoints.
pub fn rasterize<'a>(
    segments: impl IntoIterator<Item = &'a SketchSegment>,
    shape: (usize, usize),
) -> Mask {
    let mut m = Grid::filled(shape.0, shape.1, false);
    for s in segments {
        for (x, y) in bresenham(s.head.rounded(), s.tail.rounded()) {
            if m.contains(x, y) {
                *m.get_mut(x as usize, y as usize) = true;
            }
        }
    }
    m
}

/// Closed region of one aggregated group: its rasterized segments closed
/// with a disc of radius `round(delta2)`.
pub fn close_regions<'a>(
    members: impl IntoIterator<Item = &'a SketchSegment>,
    delta2: f64,
    shape: (usize, usize),
) -> Mask {
    close_mask(&rasterize(members, shape), delta2.round().max(0.0) as usize)
}

/// Union of oriented rectangles of the given width centred on each segment
/// and spanning its length.
pub fn structural_blocks<'a>(
    segments: impl IntoIterator<Item = &'a SketchSegment>,
    width: usize,
    shape: (usize, usize),
) -> Mask {
    let (w, h) = shape;
    let half = width as f64 / 2.0;
    let mut m = Grid::filled(w, h, false);
    for s in segments {
        let len = s.length();
        let u = s.direction();
        let reach = half + 1.0;
        let x0 = (s.head.x.min(s.tail.x) - reach).floor().max(0.0) as usize;
        let y0 = (s.head.y.min(s.tail.y) - reach).floor().max(0.0) as usize;
        let x1 = ((s.head.x.max(s.tail.x) + reach).ceil().max(0.0) as usize).min(w);
        let y1 = ((s.head.y.max(s.tail.y) + reach).ceil().max(0.0) as usize).min(h);
        for y in y0..y1 {
            for x in x0..x1 {
                let p = Point::new(x as f64, y as f64) - s.head;
                let inside = if len > 0.0 {
                    let t = p.dot(u);
                    t >= -1e-9 && t <= len + 1e-9 && u.cross(p).abs() <= half + 1e-9
                } else {
                    p.norm() <= half + 1e-9
                };
                if inside {
                    *m.get_mut(x, y) = true;
                }
            }
        }
    }
    m
}
