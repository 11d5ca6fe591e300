use serde::{Deserialize, Serialize};

use crate::geometry::{orientation_deg, Point};

/// Semantic label of a sketch segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum SegmentLabel {
    #[default]
    Unlabeled,
    /// Aggregated segment (part of a dense cluster).
    Aggregated,
    /// Isolated segment (edge or line object).
    Isolated,
}

impl SegmentLabel {
    pub fn code(self) -> &'static str {
        match self {
            SegmentLabel::Unlabeled => "U",
            SegmentLabel::Aggregated => "AS",
            SegmentLabel::Isolated => "IS",
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        match s {
            "U" => Some(SegmentLabel::Unlabeled),
            "AS" => Some(SegmentLabel::Aggregated),
            "IS" => Some(SegmentLabel::Isolated),
            _ => None,
        }
    }
}

/// A straight sketch primitive.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchSegment {
    pub head: Point,
    pub tail: Point,
    /// Edge pixels `(x, y)` the segment was fitted to, in trace order.
    pub support: Vec<(u32, u32)>,
    pub label: SegmentLabel,
}

impl SketchSegment {
    pub fn new(head: Point, tail: Point) -> Self {
        SketchSegment {
            head,
            tail,
            support: Vec::new(),
            label: SegmentLabel::Unlabeled,
        }
    }

    /// Euclidean head-tail distance.
    pub fn length(&self) -> f64 {
        self.head.dist(self.tail)
    }

    /// Orientation in degrees, `[0, 180)`.
    pub fn orientation(&self) -> f64 {
        let d = self.tail - self.head;
        orientation_deg(d.x, d.y)
    }

    /// Midpoint.
    pub fn center(&self) -> Point {
        (self.head + self.tail) * 0.5
    }

    /// Unit vector from head to tail (zero for a degenerate segment).
    pub fn direction(&self) -> Point {
        let d = self.tail - self.head;
        let n = d.norm();
        if n > 0.0 {
            d * (1.0 / n)
        } else {
            Point::default()
        }
    }
}

/// Head-to-tail chain of segments.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchLine {
    pub segments: Vec<SketchSegment>,
    /// Significance (coding length gain) in nats.
    pub clg: f64,
}

impl SketchLine {
    pub fn new(segments: Vec<SketchSegment>) -> Self {
        SketchLine { segments, clg: 0.0 }
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(SketchSegment::length).sum()
    }
}

/// The polarimetric sketch map.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchMap {
    pub lines: Vec<SketchLine>,
    /// Raster `(width, height)`.
    pub shape: (usize, usize),
    /// CLG threshold that was applied.
    pub threshold: f64,
}

impl SketchMap {
    pub fn empty(shape: (usize, usize)) -> Self {
        SketchMap {
            lines: Vec::new(),
            shape,
            threshold: 0.0,
        }
    }

    /// All segments, line by line.
    pub fn segments(&self) -> impl Iterator<Item = &SketchSegment> {
        self.lines.iter().flat_map(|l| l.segments.iter())
    }

    pub fn segment_count(&self) -> usize {
        self.lines.iter().map(|l| l.segments.len()).sum()
    }

    /// Segments with their line index.
    pub fn flattened(&self) -> Vec<(usize, SketchSegment)> {
        self.lines
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.segments.iter().cloned().map(move |s| (i, s)))
            .collect()
    }
}
