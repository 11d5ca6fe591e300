//! Hybrid edge/line detection: weighted Wishart CFAR and log-gradient
//! energies over an oriented filter bank, fusion and non-maxima suppression.

mod bank;
mod energy;
mod fuse;
mod nms;
mod wishart;

pub use bank::{BankConfig, FilterBank, OrientedFilter, WeightedSet};
pub use energy::{
    cfar_edge_energy, cfar_line_energy, gradient_energy, weighted_mean_coherency, Detector,
    DetectorOutput, EnergyField, EnergyKind, GradientScale, Response, GRADIENT_EPS,
};
pub use fuse::{combine_edge_line, fuse_energy};
pub use nms::{masked, nonmax_suppress, normal_step};
pub use wishart::{cfar_statistic, pooled_statistic, rho, wishart_log_ratio};

use crate::error::Result;
use crate::raster::{CoherencyImage, Mask};

/// Everything the detector produces for one image.
#[derive(Debug, Clone)]
pub struct Detection {
    pub raw: DetectorOutput,
    pub fused_edge: EnergyField,
    pub fused_line: EnergyField,
    /// Combined edge-line energy that feeds sketch pursuit.
    pub energy: EnergyField,
    /// Non-maxima suppressed edge raster.
    pub edges: Mask,
}

/// Runs the detector, fuses CFAR with gradient energies per kind, combines
/// edge and line responses and thins the result.
pub fn detect(img: &CoherencyImage, detector: &Detector, mode: GradientScale) -> Result<Detection> {
    let raw = detector.compute(img, mode);
    let fused_edge = fuse_energy(&raw.cfar_edge, &raw.grad_edge)?;
    let fused_line = fuse_energy(&raw.cfar_line, &raw.grad_line)?;
    let energy = combine_edge_line(&fused_edge, &fused_line)?;
    let edges = nonmax_suppress(&energy);
    Ok(Detection {
        raw,
        fused_edge,
        fused_line,
        energy,
        edges,
    })
}
