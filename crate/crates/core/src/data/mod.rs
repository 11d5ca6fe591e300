//! Data model utilities: derived products, synthetic scenes and file I/O.

pub mod io;
pub mod products;
pub mod render;
pub mod synth;

pub(crate) use products::percentile_sorted;
pub use products::{multilook, pauli_rgb, span};
pub use synth::{sample_wishart_scene, Layout, SyntheticScene};
