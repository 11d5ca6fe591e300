use std::fmt::Write as _;

use super::types::{SegmentLabel, SketchLine, SketchMap, SketchSegment};
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Serialises a sketch map as text: a header, then one comment line per
/// sketch line and one record per segment,
/// `line_id hx hy tx ty theta length label`.
pub fn write_sketch(map: &SketchMap) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# shape {} {}", map.shape.0, map.shape.1);
    let _ = writeln!(out, "# threshold {:.6}", map.threshold);
    for (id, line) in map.lines.iter().enumerate() {
        let _ = writeln!(out, "# line {id} clg {:.6}", line.clg);
        for s in &line.segments {
            let _ = writeln!(
                out,
                "{id} {:.3} {:.3} {:.3} {:.3} {:.3} {:.3} {}",
                s.head.x,
                s.head.y,
                s.tail.x,
                s.tail.y,
                s.orientation(),
                s.length(),
                s.label.code()
            );
        }
    }
    out
}

fn bad(line: usize, msg: &str) -> Error {
    Error::Format(format!("sketch line {}: {msg}", line + 1))
}

/// Parses the text written by [`write_sketch`]. Support pixels are not
/// stored and come back empty.
pub fn read_sketch(text: &str) -> Result<SketchMap> {
    let mut map = SketchMap::empty((0, 0));
    for (ln, raw) in text.lines().enumerate() {
        let t = raw.trim();
        if t.is_empty() {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(ln, "bad number"));
        if f[0] == "#" {
            match f.get(1).copied() {
                Some("shape") if f.len() == 4 => {
                    let w = f[2].parse().map_err(|_| bad(ln, "bad width"))?;
                    let h = f[3].parse().map_err(|_| bad(ln, "bad height"))?;
                    map.shape = (w, h);
                }
                Some("threshold") if f.len() == 3 => map.threshold = num(f[2])?,
                Some("line") if f.len() == 5 => {
                    let id: usize = f[2].parse().map_err(|_| bad(ln, "bad line id"))?;
                    if id != map.lines.len() {
                        return Err(bad(ln, "line ids must be consecutive"));
                    }
                    let mut l = SketchLine::new(Vec::new());
                    l.clg = num(f[4])?;
                    map.lines.push(l);
                }
                _ => {}
            }
            continue;
        }
        if f.len() != 8 {
            return Err(bad(ln, "expected 8 fields"));
        }
        let id: usize = f[0].parse().map_err(|_| bad(ln, "bad line id"))?;
        let line = map
            .lines
            .get_mut(id)
            .ok_or_else(|| bad(ln, "segment before its line header"))?;
        let mut s = SketchSegment::new(
            Point::new(num(f[1])?, num(f[2])?),
            Point::new(num(f[3])?, num(f[4])?),
        );
        s.label = SegmentLabel::from_code(f[7]).ok_or_else(|| bad(ln, "unknown label"))?;
        line.segments.push(s);
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut a = SketchSegment::new(Point::new(1.0, 2.0), Point::new(11.5, 2.0));
        a.label = SegmentLabel::Isolated;
        let b = SketchSegment::new(Point::new(12.0, 3.0), Point::new(12.0, 20.25));
        let mut l = SketchLine::new(vec![a, b]);
        l.clg = 42.125;
        let map = SketchMap {
            lines: vec![l],
            shape: (64, 32),
            threshold: 3.5,
        };
        let text = write_sketch(&map);
        assert!(text.starts_with("# shape 64 32\n"));
        let back = read_sketch(&text).unwrap();
        assert_eq!(back.shape, (64, 32));
        assert_eq!(back.threshold, 3.5);
        assert_eq!(back.lines.len(), 1);
        assert_eq!(back.lines[0].clg, 42.125);
        assert_eq!(back.lines[0].segments[0].label, SegmentLabel::Isolated);
        assert_eq!(back.lines[0].segments[1].tail, Point::new(12.0, 20.25));
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_sketch("0 1 2 3 4 5 6 AS").is_err());
        assert!(read_sketch("# line 0 clg 1\n0 1 2 3 4 5 6 XX").is_err());
        assert!(read_sketch("# line 0 clg 1\n0 1 2").is_err());
    }
}
