//! Complex-valued graph signal processing on power-grid admittance matrices.
//!
//! The bus admittance matrix `Y` doubles as a complex symmetric graph shift
//! operator. On top of it this crate provides spectral analysis, polynomial
//! and graph-temporal filters, a complex spatio-temporal graph convolutional
//! network with hand-written backpropagation, numerical checks of filter
//! perturbation bounds, and the sensing/attack machinery for voltage-phasor
//! estimation and false-data-injection localization.

pub mod bounds;
pub mod error;
pub mod filters;
pub mod grid;
pub mod linalg;
pub mod nn;
pub mod pipeline;
pub mod sensing;
pub mod serial;
pub mod spectral;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/grids.md")]
    pub struct Grids;
    #[doc = include_str!("../../../book/src/spectrum.md")]
    pub struct Spectrum;
    #[doc = include_str!("../../../book/src/bounds.md")]
    pub struct Bounds;
    #[doc = include_str!("../../../book/src/sensing.md")]
    pub struct Sensing;
    #[doc = include_str!("../../../book/src/network.md")]
    pub struct Network;
    #[doc = include_str!("../../../book/src/pipeline.md")]
    pub struct Pipeline;
}
