//! Automatic gridding of cDNA microarray images.
//!
//! A scanned array is a meta-grid of subarrays, each holding a regular lattice
//! of spots. This crate locates the cut lines that separate subarrays and then
//! the cut lines that isolate every spot, working from 1D projection profiles
//! of the image:
//!
//! - [`profiles`]: sum, mean and standard deviation profiles, discrete
//!   derivatives, smoothing and binarization.
//! - [`gridding`]: gap-middle cuts on binarized profiles, threshold-free cuts
//!   at derivative minima, period estimation, template matching and the
//!   two-level image → subarrays → spots pipeline.
//! - [`extract`]: cell materialization, spot counting and scoring of grids
//!   against ground truth.
//! - [`synth`]: a seeded synthetic array generator with exact ground truth.
//! - [`document`]: the JSON grid document and CSV tables used on disk.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`, which is what the CLI uses.

pub mod document;
pub mod error;
pub mod extract;
pub mod gridding;
pub mod image;
pub mod io;
pub mod profiles;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use gridding::{
    ArrayGrid, ArrayTemplate, CellGrid, GridLines, Method, MethodKind, Template, TemplateMatch,
};
pub use image::{Axis, BitDepth, IntensityImage, Rect};
pub use profiles::{Profile1D, ProfileKind};
pub use scalar::Scalar;

/// Double-precision image, the default working type.
pub type Image = IntensityImage<f64>;
/// Single-precision image.
pub type Image32 = IntensityImage<f32>;
/// Double-precision profile.
pub type Profile = Profile1D<f64>;
/// Single-precision profile.
pub type Profile32 = Profile1D<f32>;
