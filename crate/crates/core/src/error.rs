use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt image data: {0}")]
    CorruptData(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("rectangle {rect:?} is outside a {width}x{height} image")]
    OutOfBounds {
        rect: (usize, usize, usize, usize),
        width: usize,
        height: usize,
    },
    #[error("standard deviation needs at least 2 samples along the aggregated axis, got {0}")]
    DegenerateExtent(usize),
    #[error("profile of length {len} is too short (need at least {need})")]
    TooShort { len: usize, need: usize },
    #[error("bad smoothing window {window} for a profile of length {len}")]
    BadWindow { window: usize, len: usize },
    #[error("threshold fraction {0} is outside (0, 1)")]
    BadThreshold(f64),
    #[error("{op} does not accept a {kind:?} profile")]
    WrongProfileKind {
        op: &'static str,
        kind: crate::profiles::ProfileKind,
    },
    #[error("profile is flat: nothing to threshold")]
    FlatProfile,
    #[error("no interior minima found along {0:?}")]
    NoStructure(crate::image::Axis),
    #[error("need at least {need} cuts, got {got}")]
    TooFewCuts { got: usize, need: usize },
    #[error("template matching cannot grid a single axis")]
    MethodMismatch,
    #[error("invalid method: {0}")]
    InvalidMethod(String),
    #[error("invalid grid lines: {0}")]
    InvalidGridLines(String),
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("template {template_w}x{template_h} does not fit in image {image_w}x{image_h}")]
    TemplateTooLarge {
        template_w: usize,
        template_h: usize,
        image_w: usize,
        image_h: usize,
    },
    #[error("best template score {score:.4} is below {min_score}: geometric distortion")]
    GeometricDistortion { score: f64, min_score: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("axis mismatch: {found:?} vs {truth:?}")]
    AxisMismatch {
        found: crate::image::Axis,
        truth: crate::image::Axis,
    },
    #[error("invalid synthetic spec: {0}")]
    SpecInvalid(String),
    #[error("grid document: {0}")]
    Schema(String),
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::FileNotFound(_) => "FileNotFound",
            Error::UnsupportedFormat(_) => "UnsupportedFormat",
            Error::CorruptData(_) => "CorruptData",
            Error::Io(_) => "Io",
            Error::InvalidImage(_) => "InvalidImage",
            Error::OutOfBounds { .. } => "OutOfBounds",
            Error::DegenerateExtent(_) => "DegenerateExtent",
            Error::TooShort { .. } => "TooShort",
            Error::BadWindow { .. } => "BadWindow",
            Error::BadThreshold(_) => "BadThreshold",
            Error::WrongProfileKind { .. } => "WrongProfileKind",
            Error::FlatProfile => "FlatProfile",
            Error::NoStructure(_) => "NoStructure",
            Error::TooFewCuts { .. } => "TooFewCuts",
            Error::MethodMismatch => "MethodMismatch",
            Error::InvalidMethod(_) => "InvalidMethod",
            Error::InvalidGridLines(_) => "InvalidGridLines",
            Error::InvalidTemplate(_) => "InvalidTemplate",
            Error::TemplateTooLarge { .. } => "TemplateTooLarge",
            Error::GeometricDistortion { .. } => "GeometricDistortion",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::AxisMismatch { .. } => "AxisMismatch",
            Error::SpecInvalid(_) => "SpecInvalid",
            Error::Schema(_) => "Schema",
        }
    }
}
