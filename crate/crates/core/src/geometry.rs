//! Planar geometry helpers shared by the sketch and region stages.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// A point in pixel coordinates (`x` = column, `y` = row).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 2-D cross product.
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn rounded(self) -> (i64, i64) {
        (self.x.round() as i64, self.y.round() as i64)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Orientation of a direction vector in degrees, folded into `[0, 180)`.
pub fn orientation_deg(dx: f64, dy: f64) -> f64 {
    let a = dy.atan2(dx).to_degrees().rem_euclid(180.0);
    if a >= 180.0 {
        0.0
    } else {
        a
    }
}

/// Difference between two orientations (mod 180°), wrapped into `[0, 90]`.
pub fn orientation_diff_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}

/// Integer pixels on the segment `p0 → p1`, endpoints included.
pub fn bresenham(p0: (i64, i64), p1: (i64, i64)) -> Vec<(i64, i64)> {
    let (mut x, mut y) = p0;
    let dx = (p1.0 - x).abs();
    let dy = -(p1.1 - y).abs();
    let sx = if x < p1.0 { 1 } else { -1 };
    let sy = if y < p1.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy + 1) as usize);
    loop {
        out.push((x, y));
        if x == p1.0 && y == p1.1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_folds() {
        assert_eq!(orientation_deg(1.0, 0.0), 0.0);
        assert!((orientation_deg(-1.0, 0.0) - 0.0).abs() < 1e-12);
        assert!((orientation_deg(0.0, 1.0) - 90.0).abs() < 1e-12);
        assert!((orientation_deg(-1.0, -1.0) - 45.0).abs() < 1e-12);
        assert!((orientation_diff_deg(5.0, 175.0) - 10.0).abs() < 1e-12);
        assert!((orientation_diff_deg(0.0, 90.0) - 90.0).abs() < 1e-12);
    }

    #[test]
    fn bresenham_endpoints_and_connectivity() {
        let pts = bresenham((0, 0), (7, 3));
        assert_eq!(pts[0], (0, 0));
        assert_eq!(*pts.last().unwrap(), (7, 3));
        assert_eq!(pts.len(), 8);
        for w in pts.windows(2) {
            assert!((w[0].0 - w[1].0).abs() <= 1 && (w[0].1 - w[1].1).abs() <= 1);
        }
        assert_eq!(bresenham((2, 2), (2, 2)), vec![(2, 2)]);
    }
}
