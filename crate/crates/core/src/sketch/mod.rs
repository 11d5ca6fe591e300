//! Primal-level semantics: greedy sketch pursuit over the thinned edge map,
//! Wishart significance of each line and adaptive line selection.

mod format;
mod pursuit;
mod select;
mod significance;
mod types;

pub use format::{read_sketch, write_sketch};
pub use pursuit::{pursue_sketch, PursuitConfig};
pub use select::{clg_floor, clg_threshold, select_lines, Selection, ThresholdMode};
pub use significance::{flank_pixels, line_significance};
pub use types::{SegmentLabel, SketchLine, SketchMap, SketchSegment};
