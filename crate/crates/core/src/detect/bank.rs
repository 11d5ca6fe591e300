use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pixel offsets with normalised positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSet {
    /// `(dx, dy)` relative to the filter centre.
    pub offsets: Vec<(i32, i32)>,
    pub weights: Vec<f64>,
}

impl WeightedSet {
    fn from_raw(mut raw: Vec<((i32, i32), f64)>) -> Self {
        raw.sort_by_key(|&((dx, dy), _)| (dy, dx));
        let total: f64 = raw.iter().map(|(_, w)| w).sum();
        WeightedSet {
            offsets: raw.iter().map(|(o, _)| *o).collect(),
            weights: raw.iter().map(|(_, w)| w / total).collect(),
        }
    }

    /// Uniform weights over the given offsets.
    pub fn uniform(offsets: Vec<(i32, i32)>) -> Self {
        let w = 1.0 / offsets.len().max(1) as f64;
        WeightedSet {
            weights: vec![w; offsets.len()],
            offsets,
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Equivalent number of independent samples, `1 / Σ w²`.
    pub fn equivalent_count(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Point reflection. Weights and their order are kept, so both halves
    /// of a filter sum a constant image bit-identically.
    fn negated(&self) -> Self {
        WeightedSet {
            offsets: self.offsets.iter().map(|&(dx, dy)| (-dx, -dy)).collect(),
            weights: self.weights.clone(),
        }
    }

    pub(crate) fn max_extent(&self) -> i32 {
        self.offsets
            .iter()
            .map(|&(dx, dy)| dx.abs().max(dy.abs()))
            .max()
            .unwrap_or(0)
    }
}

/// One oriented filter at one scale.
///
/// The edge filter compares `side_a` with `side_b`, the two halves on either
/// side of the oriented axis. The line filter compares the `center` strip
/// with each of the flanks `flank_a` and `flank_b`. Opposite sets are point
/// reflections of each other, so their weights match one to one.
#[derive(Debug, Clone)]
pub struct OrientedFilter {
    pub scale_index: usize,
    pub orientation_index: usize,
    /// Axis direction in radians, measured from +x towards +y (rows).
    pub angle: f64,
    pub side_a: WeightedSet,
    pub side_b: WeightedSet,
    pub center: WeightedSet,
    pub flank_a: WeightedSet,
    pub flank_b: WeightedSet,
    /// Equivalent sample counts `round(1/Σw²)` used as look multipliers.
    pub edge_count: f64,
    pub center_count: f64,
    pub flank_count: f64,
}

/// Bank parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BankConfig {
    /// Scales in pixels: along-axis σ of the anisotropic Gaussian.
    pub scales: Vec<f64>,
    /// Number of orientations evenly spaced over 180°.
    pub orientations: usize,
}

impl Default for BankConfig {
    fn default() -> Self {
        BankConfig {
            scales: vec![2.0, 3.0, 4.0],
            orientations: 18,
        }
    }
}

/// Multi-scale, multi-orientation anisotropic Gaussian filter bank.
///
/// At scale `s` the kernel has σ = `s` along the axis and `s/3` across it,
/// truncated at 3σ. Edge sides start half a pixel off the axis. The line
/// filter's centre strip is the one-pixel band on the axis, so a plain step
/// always leaves one of its two flank tests close to zero.
#[derive(Debug, Clone)]
pub struct FilterBank {
    config: BankConfig,
    filters: Vec<OrientedFilter>,
    radius: usize,
}

const EPS: f64 = 1e-9;

impl FilterBank {
    pub fn new(config: &BankConfig) -> Result<Self> {
        if config.scales.is_empty() || config.orientations == 0 {
            return Err(Error::InvalidParameter(
                "filter bank needs at least one scale and one orientation".into(),
            ));
        }
        if config.scales.iter().any(|s| !(*s >= 1.0) || !s.is_finite()) {
            return Err(Error::InvalidParameter("filter scales must be >= 1".into()));
        }
        let mut filters = Vec::with_capacity(config.scales.len() * config.orientations);
        for (si, &s) in config.scales.iter().enumerate() {
            for oi in 0..config.orientations {
                let angle = std::f64::consts::PI * oi as f64 / config.orientations as f64;
                filters.push(build_filter(si, oi, s, angle)?);
            }
        }
        let radius = filters
            .iter()
            .flat_map(|f| [&f.side_a, &f.center, &f.flank_a])
            .map(|s| s.max_extent())
            .max()
            .unwrap_or(0) as usize;
        Ok(FilterBank {
            config: config.clone(),
            filters,
            radius,
        })
    }

    pub fn config(&self) -> &BankConfig {
        &self.config
    }

    pub fn filters(&self) -> &[OrientedFilter] {
        &self.filters
    }

    pub fn orientations(&self) -> usize {
        self.config.orientations
    }

    /// Largest offset magnitude over all sets.
    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Axis angle in degrees of orientation `index`.
    pub fn angle_deg(&self, index: usize) -> f64 {
        180.0 * index as f64 / self.config.orientations as f64
    }
}

fn build_filter(si: usize, oi: usize, s: f64, angle: f64) -> Result<OrientedFilter> {
    let sigma_along = s;
    let sigma_across = s / 3.0;
    let half_len = 3.0 * sigma_along;
    let depth = 3.0 * sigma_across;
    let strip = 0.5;
    let reach = (half_len.max(strip + depth) + 1.0).ceil() as i32;
    let (c, sn) = (angle.cos(), angle.sin());

    let mut side = Vec::new();
    let mut center = Vec::new();
    let mut flank = Vec::new();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let along = dx as f64 * c + dy as f64 * sn;
            let across = -(dx as f64) * sn + dy as f64 * c;
            if along.abs() > half_len + EPS {
                continue;
            }
            let g_along = (-along * along / (2.0 * sigma_along * sigma_along)).exp();
            if across >= 0.5 - EPS && across <= 0.5 + depth + EPS {
                let g = (-across * across / (2.0 * sigma_across * sigma_across)).exp();
                side.push(((dx, dy), g_along * g));
            }
            if across.abs() <= strip + EPS {
                center.push(((dx, dy), g_along));
            } else if across > strip + EPS && across <= strip + depth + EPS {
                let d = across - strip;
                let g = (-d * d / (2.0 * sigma_across * sigma_across)).exp();
                flank.push(((dx, dy), g_along * g));
            }
        }
    }
    if side.is_empty() || center.is_empty() || flank.is_empty() {
        return Err(Error::DegenerateFilter);
    }
    let side_a = WeightedSet::from_raw(side);
    let side_b = side_a.negated();
    let center = WeightedSet::from_raw(center);
    let flank_a = WeightedSet::from_raw(flank);
    let flank_b = flank_a.negated();
    let edge_count = side_a.equivalent_count().round().max(1.0);
    let center_count = center.equivalent_count().round().max(1.0);
    let flank_count = flank_a.equivalent_count().round().max(1.0);
    Ok(OrientedFilter {
        scale_index: si,
        orientation_index: oi,
        angle,
        side_a,
        side_b,
        center,
        flank_a,
        flank_b,
        edge_count,
        center_count,
        flank_count,
    })
}
