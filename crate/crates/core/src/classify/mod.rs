//! Scattering-mechanism classification: H/α zones, iterative Wishart
//! clustering, voting inside segmentation regions and accuracy metrics.

mod evaluate;
mod halpha;
mod vote;
mod wishart;

pub use evaluate::{evaluate, ConfusionMatrix, Mapping};
pub use halpha::{h_alpha, h_alpha_pixel, init_zones, zone, HAlphaField, ZoneBoundaries};
pub use vote::semantic_vote;
pub use wishart::{
    assign, class_means, wishart_iterate, wishart_objective, Center, ClassMap, WishartConfig,
    WishartRun,
};
