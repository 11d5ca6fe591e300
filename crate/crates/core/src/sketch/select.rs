use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::types::{SketchLine, SketchMap};
use crate::coherency::CHANNELS;
use crate::data::percentile_sorted;

/// How the CLG threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// End of the first peak of the CLG histogram, but never below the
    /// χ² quantile of a homogeneous line at this false alarm rate
    /// (0 disables the floor).
    Auto {
        false_alarm: f64,
    },
    Fixed(f64),
}

impl Default for ThresholdMode {
    fn default() -> Self {
        ThresholdMode::Auto { false_alarm: 1e-4 }
    }
}

/// Upper χ² quantile with `dof` degrees of freedom: the CLG a line on
/// homogeneous ground exceeds with probability `false_alarm`.
pub fn clg_floor(false_alarm: f64, dof: usize) -> f64 {
    if !(false_alarm > 0.0 && false_alarm < 1.0) || dof == 0 {
        return 0.0;
    }
    match ChiSquared::new(dof as f64) {
        Ok(d) => d.inverse_cdf(1.0 - false_alarm),
        Err(_) => 0.0,
    }
}

/// Result of line selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub map: SketchMap,
    /// Set when lines were offered but none survived.
    pub all_rejected: bool,
}

const BINS: usize = 64;

/// Histogram threshold on CLG values.
///
/// The histogram has 64 bins over `[0, ln(1 + p99.5)]` of `ln(1 + clg)` and
/// is smoothed by a 3-bin moving average. Lines with zero CLG (no usable
/// flanks) are left out. The speckle mode is the highest smoothed bin; from
/// there the histogram is followed downhill until it reaches an empty bin or
/// starts rising again. The threshold is the right edge of that bin mapped
/// back to CLG units. `None` for no values.
pub fn clg_threshold(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
    if sorted.is_empty() {
        return Some(0.0);
    }
    sorted.sort_by(f64::total_cmp);
    let hi = percentile_sorted(&sorted, 0.995);
    if !(hi > 0.0) {
        return Some(0.0);
    }
    let top = hi.ln_1p();
    let width = top / BINS as f64;
    let mut counts = [0.0f64; BINS];
    for &v in sorted.iter().filter(|v| **v <= hi) {
        let b = ((v.ln_1p() / width) as usize).min(BINS - 1);
        counts[b] += 1.0;
    }
    let smooth: Vec<f64> = (0..BINS)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let up = (i + 1).min(BINS - 1);
            counts[lo..=up].iter().sum::<f64>() / (up - lo + 1) as f64
        })
        .collect();
    let tallest = smooth.iter().copied().fold(0.0, f64::max);
    let peak = (0..BINS).find(|&i| smooth[i] == tallest).unwrap_or(0);
    let mut end = peak;
    while end + 1 < BINS && smooth[end] > 0.0 && smooth[end + 1] <= smooth[end] {
        end += 1;
    }
    if end == BINS - 1 {
        return Some(hi);
    }
    Some((width * (end + 1) as f64).exp_m1())
}

/// Keeps the lines whose CLG reaches the threshold.
pub fn select_lines(
    lines: Vec<SketchLine>,
    shape: (usize, usize),
    mode: ThresholdMode,
) -> Selection {
    let offered = !lines.is_empty();
    let threshold = match mode {
        ThresholdMode::Fixed(t) => t,
        ThresholdMode::Auto { false_alarm } => {
            let clg: Vec<f64> = lines.iter().map(|l| l.clg).collect();
            let floor = clg_floor(false_alarm, CHANNELS * CHANNELS);
            clg_threshold(&clg).unwrap_or(0.0).max(floor)
        }
    };
    let kept: Vec<SketchLine> = lines.into_iter().filter(|l| l.clg >= threshold).collect();
    if offered && kept.is_empty() {
        log::warn!("no sketch line reached the CLG threshold {threshold:.3}");
    }
    Selection {
        all_rejected: offered && kept.is_empty(),
        map: SketchMap {
            lines: kept,
            shape,
            threshold,
        },
    }
}
