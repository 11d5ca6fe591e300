use serde::{Deserialize, Serialize};

use super::types::{SketchLine, SketchSegment};
use crate::detect::EnergyField;
use crate::geometry::Point;
use crate::raster::{Grid, Mask};

/// Sketch pursuit parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PursuitConfig {
    /// Shortest kept segment (head-tail distance, pixels).
    pub min_segment_length: f64,
    /// Largest orthogonal deviation of a support pixel from its fitted segment.
    pub max_deviation: f64,
    /// Largest head-tail gap between consecutive segments of one line.
    pub max_gap: f64,
}

impl Default for PursuitConfig {
    fn default() -> Self {
        PursuitConfig {
            min_segment_length: 5.0,
            max_deviation: 1.0,
            max_gap: 2.0,
        }
    }
}

const RING1: [(i64, i64); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

fn ring2() -> Vec<(i64, i64)> {
    let mut v = Vec::with_capacity(16);
    for dy in -2..=2i64 {
        for dx in -2..=2i64 {
            if dx.abs() == 2 || dy.abs() == 2 {
                v.push((dx, dy));
            }
        }
    }
    v
}

fn unit(dx: f64, dy: f64) -> Point {
    let n = dx.hypot(dy);
    if n > 0.0 {
        Point::new(dx / n, dy / n)
    } else {
        Point::default()
    }
}

struct Tracer<'a> {
    edges: &'a Mask,
    energy: &'a Grid<f64>,
    visited: Grid<bool>,
    ring2: Vec<(i64, i64)>,
}

impl Tracer<'_> {
    fn free(&self, x: i64, y: i64) -> bool {
        self.edges.get_signed(x, y).copied().unwrap_or(false)
            && !*self.visited.get(x as usize, y as usize)
    }

    /// Best unvisited edge neighbour of `p` whose step makes at most 90° with
    /// `dir` (any direction when `dir` is zero). Ranked by alignment, then
    /// energy, then row-major position. The 5×5 ring is only consulted when
    /// the 8-neighbourhood has no candidate.
    fn next(&self, p: (i64, i64), dir: Point) -> Option<(i64, i64)> {
        for ring in [&RING1[..], &self.ring2[..]] {
            let mut best: Option<((i64, i64), f64, f64)> = None;
            for &(dx, dy) in ring {
                let q = (p.0 + dx, p.1 + dy);
                if !self.free(q.0, q.1) {
                    continue;
                }
                let u = unit(dx as f64, dy as f64);
                let align = if dir == Point::default() {
                    1.0
                } else {
                    u.dot(dir)
                };
                if align < -1e-9 {
                    continue;
                }
                let e = *self.energy.get(q.0 as usize, q.1 as usize);
                let better = match best {
                    None => true,
                    Some((bq, ba, be)) => {
                        if (align - ba).abs() > 1e-9 {
                            align > ba
                        } else if e != be {
                            e > be
                        } else {
                            (q.1, q.0) < (bq.1, bq.0)
                        }
                    }
                };
                if better {
                    best = Some((q, align, e));
                }
            }
            if let Some((q, _, _)) = best {
                return Some(q);
            }
        }
        None
    }

    /// First step from a seed: the free neighbour best aligned with the
    /// local axis in either sense.
    fn first_step(&self, p: (i64, i64), axis: Point) -> Option<(i64, i64)> {
        for ring in [&RING1[..], &self.ring2[..]] {
            let best = ring
                .iter()
                .map(|&(dx, dy)| (p.0 + dx, p.1 + dy))
                .filter(|q| self.free(q.0, q.1))
                .map(|q| {
                    let align = unit((q.0 - p.0) as f64, (q.1 - p.1) as f64).dot(axis).abs();
                    (q, align, *self.energy.get(q.0 as usize, q.1 as usize))
                })
                .reduce(|b, c| {
                    let better = if (c.1 - b.1).abs() > 1e-9 {
                        c.1 > b.1
                    } else if c.2 != b.2 {
                        c.2 > b.2
                    } else {
                        (c.0 .1, c.0 .0) < (b.0 .1, b.0 .0)
                    };
                    if better {
                        c
                    } else {
                        b
                    }
                });
            if let Some((q, _, _)) = best {
                return Some(q);
            }
        }
        None
    }

    fn mark(&mut self, p: (i64, i64)) {
        *self.visited.get_mut(p.0 as usize, p.1 as usize) = true;
    }

    /// Follows the edge from `start` in direction `dir`, marking pixels.
    fn trace(&mut self, start: (i64, i64), dir: Point) -> Vec<(i64, i64)> {
        let mut path = vec![start];
        let mut dir = dir;
        while let Some(q) = self.next(*path.last().unwrap(), dir) {
            self.mark(q);
            path.push(q);
            let k = path.len() - 1;
            let back = path[k.saturating_sub(4)];
            dir = unit((q.0 - back.0) as f64, (q.1 - back.1) as f64);
        }
        path
    }
}

/// Orthogonal least-squares line through points: centroid and unit direction.
pub(crate) fn fit_line(pts: &[(i64, i64)]) -> (Point, Point) {
    let n = pts.len() as f64;
    let (sx, sy) = pts
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + p.0 as f64, a.1 + p.1 as f64));
    let c = Point::new(sx / n, sy / n);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p.0 as f64 - c.x, p.1 as f64 - c.y);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    (c, Point::new(theta.cos(), theta.sin()))
}

fn max_deviation(pts: &[(i64, i64)]) -> f64 {
    if pts.len() < 3 {
        return 0.0;
    }
    let (c, d) = fit_line(pts);
    pts.iter()
        .map(|p| (Point::new(p.0 as f64, p.1 as f64) - c).cross(d).abs())
        .fold(0.0, f64::max)
}

/// Splits a traced chain into maximal runs whose orthogonal fit deviation
/// stays within `max_dev`.
pub(crate) fn split_runs(chain: &[(i64, i64)], max_dev: f64) -> Vec<std::ops::Range<usize>> {
    let mut runs = Vec::new();
    let mut start = 0;
    while start < chain.len() {
        let mut end = start + 1;
        while end < chain.len() && max_deviation(&chain[start..=end]) <= max_dev + 1e-9 {
            end += 1;
        }
        runs.push(start..end);
        start = end;
    }
    runs
}

fn to_segment(run: &[(i64, i64)]) -> SketchSegment {
    let (c, d) = fit_line(run);
    // endpoints: first/last support pixel projected onto the fitted line
    let project = |p: (i64, i64)| {
        let v = Point::new(p.0 as f64, p.1 as f64) - c;
        c + d * v.dot(d)
    };
    let mut s = SketchSegment::new(project(run[0]), project(run[run.len() - 1]));
    s.support = run.iter().map(|&(x, y)| (x as u32, y as u32)).collect();
    s
}

/// Turns a traced pixel chain into sketch lines: fitted runs shorter than
/// the minimum length are dropped and the chain is cut wherever the
/// head-tail gap between kept segments exceeds `max_gap`.
pub(crate) fn chain_to_lines(chain: &[(i64, i64)], cfg: &PursuitConfig) -> Vec<SketchLine> {
    let mut lines = Vec::new();
    let mut current: Vec<SketchSegment> = Vec::new();
    for run in split_runs(chain, cfg.max_deviation) {
        let seg = to_segment(&chain[run]);
        if seg.length() + 1e-9 < cfg.min_segment_length {
            if !current.is_empty() {
                lines.push(SketchLine::new(std::mem::take(&mut current)));
            }
            continue;
        }
        if let Some(prev) = current.last() {
            if prev.tail.dist(seg.head) > cfg.max_gap + 1e-9 {
                lines.push(SketchLine::new(std::mem::take(&mut current)));
            }
        }
        current.push(seg);
    }
    if !current.is_empty() {
        lines.push(SketchLine::new(current));
    }
    lines
}

/// Greedy sketch pursuit over a thinned edge raster.
///
/// Seeds are taken in order of decreasing energy (row-major on ties). From
/// each seed the edge is followed both ways through unvisited edge pixels,
/// allowing turns up to 90° and one-pixel gaps; the chain is then split into
/// straight segments. Every traced pixel is marked visited, so lines never
/// share support.
pub fn pursue_sketch(edges: &Mask, energy: &EnergyField, cfg: &PursuitConfig) -> Vec<SketchLine> {
    let (w, h) = edges.shape();
    let e = &energy.energy;
    let mut seeds: Vec<usize> = (0..w * h).filter(|&i| edges.as_slice()[i]).collect();
    seeds.sort_by(|&a, &b| e.as_slice()[b].total_cmp(&e.as_slice()[a]).then(a.cmp(&b)));
    let mut tracer = Tracer {
        edges,
        energy: e,
        visited: Grid::filled(w, h, false),
        ring2: ring2(),
    };
    let mut lines = Vec::new();
    for i in seeds {
        let seed = ((i % w) as i64, (i / w) as i64);
        if *tracer.visited.get(seed.0 as usize, seed.1 as usize) {
            continue;
        }
        tracer.mark(seed);
        let axis = energy.angle(seed.0 as usize, seed.1 as usize);
        let first = tracer.first_step(seed, Point::new(axis.cos(), axis.sin()));
        let chain = match first {
            None => vec![seed],
            Some(q) => {
                let d = unit((q.0 - seed.0) as f64, (q.1 - seed.1) as f64);
                let forward = tracer.trace(seed, d);
                let backward = tracer.trace(seed, d * -1.0);
                backward
                    .iter()
                    .rev()
                    .chain(forward.iter().skip(1))
                    .copied()
                    .collect()
            }
        };
        lines.extend(chain_to_lines(&chain, cfg));
    }
    lines
}
