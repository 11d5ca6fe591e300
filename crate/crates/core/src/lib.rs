//! Hierarchical semantic modelling and classification of polarimetric SAR
//! coherency imagery.
//!
//! The pipeline stages are:
//!
//! 1. **data** – coherency rasters, derived products, synthetic Wishart scenes, I/O.
//! 2. **detect** – weighted CFAR and log-gradient edge/line energies, fusion, NMS.
//! 3. **sketch** – greedy sketch pursuit and significance-based line selection.
//! 4. **regionmap** – segment labelling, aggregated grouping, structural blocks and
//!    the aggregated/structural/homogenous region map.
//! 5. **segment** – mean-shift superpixels and subspace-specific merging.
//! 6. **classify** – H/α decomposition, Wishart clustering, semantic voting, metrics.
//! 7. **pipeline** – configuration and end-to-end orchestration.

pub mod classify;
pub mod coherency;
pub mod data;
pub mod detect;
pub mod error;
pub mod geometry;
pub mod pipeline;
pub mod raster;
pub mod regionmap;
pub mod segment;
pub mod sketch;

pub use coherency::Coherency;
pub use error::{Error, Result};
pub use raster::{CoherencyImage, Grid, LabelRaster, Mask, ScalarRaster, NO_LABEL};
