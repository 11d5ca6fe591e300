use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::{WishartConfig, ZoneBoundaries};
use crate::data::io::ImageFormat;
use crate::data::Layout;
use crate::detect::{BankConfig, GradientScale};
use crate::error::{Error, Result};
use crate::regionmap::RegionConfig;
use crate::segment::SegmentConfig;
use crate::sketch::{PursuitConfig, ThresholdMode};

/// Where the image comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InputConfig {
    /// Coherency image; when absent the synthetic scene below is used.
    pub path: Option<PathBuf>,
    pub format: ImageFormat,
    /// Overrides the look count stored with the image.
    pub looks: Option<f64>,
    /// Ground-truth label raster.
    pub truth: Option<PathBuf>,
    pub truth_names: Vec<String>,
    /// Truth label left out of the accuracy.
    pub ignore_label: Option<u32>,
    /// Synthetic scene used without `path`.
    pub synthetic: SyntheticConfig,
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig {
            path: None,
            format: ImageFormat::Container,
            looks: None,
            truth: None,
            truth_names: Vec::new(),
            ignore_label: None,
            synthetic: SyntheticConfig::default(),
        }
    }
}

/// A planted scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub layout: Layout,
    pub width: usize,
    pub height: usize,
    pub looks: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            layout: Layout::Urban { contrast_db: 10.0 },
            width: 256,
            height: 256,
            looks: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectConfig {
    pub bank: BankConfig,
    pub gradient: GradientScale,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            bank: BankConfig::default(),
            gradient: GradientScale::Log,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SketchConfig {
    pub pursuit: PursuitConfig,
    pub threshold: ThresholdMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyConfig {
    pub zones: ZoneBoundaries,
    pub wishart: WishartConfig,
}

/// Optional stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageToggles {
    /// Without the region map the superpixels are classified as they are.
    pub region_map: bool,
    pub semantic_vote: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        StageToggles {
            region_map: true,
            semantic_vote: true,
        }
    }
}

/// Every parameter of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub input: InputConfig,
    pub detect: DetectConfig,
    pub sketch: SketchConfig,
    pub region: RegionConfig,
    pub segment: SegmentConfig,
    pub classify: ClassifyConfig,
    pub stages: StageToggles,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: InputConfig::default(),
            detect: DetectConfig::default(),
            sketch: SketchConfig::default(),
            region: RegionConfig::default(),
            segment: SegmentConfig::default(),
            classify: ClassifyConfig::default(),
            stages: StageToggles::default(),
            seed: 1,
            output_dir: PathBuf::from("polsem-out"),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Format(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.region.validate()?;
        self.segment.validate()?;
        let b = &self.detect.bank;
        if b.scales.is_empty() || b.orientations == 0 {
            return Err(Error::InvalidParameter(
                "detector needs scales and orientations".into(),
            ));
        }
        if self.classify.wishart.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "wishart max_iter must be at least 1".into(),
            ));
        }
        Ok(())
    }
}
