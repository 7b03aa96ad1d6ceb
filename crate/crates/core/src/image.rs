//! Grayscale intensity images and the geometric types shared by every stage.
//!
//! Coordinates follow one convention throughout the crate: `x` is the column
//! index, `y` is the row index, origin at the top-left pixel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which profile a computation produces.
///
/// `Columns` yields one value per column, aggregating over the rows of that
/// column (the "horizontal" profile). `Rows` yields one value per row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Columns,
    Rows,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::Columns => Axis::Rows,
            Axis::Rows => Axis::Columns,
        }
    }
}

/// Bit depth of the raster an image was decoded from. Informational only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

/// Axis-aligned pixel rectangle: `x0`/`y0` inclusive, `x1`/`y1` exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    /// Panics if the rectangle would be empty.
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Rect {
        assert!(x0 < x1 && y0 < y1, "empty rect ({x0},{y0})-({x1},{y1})");
        Rect { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 as f64 && x < self.x1 as f64 && y >= self.y0 as f64 && y < self.y1 as f64
    }

    /// The same rectangle moved by a non-negative offset.
    pub fn translated(&self, dx: usize, dy: usize) -> Rect {
        Rect::new(self.x0 + dx, self.y0 + dy, self.x1 + dx, self.y1 + dy)
    }
}

/// Row-major grayscale intensity matrix with non-negative values.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityImage<T> {
    width: usize,
    height: usize,
    pixels: Vec<T>,
    bit_depth: BitDepth,
}

impl<T: Scalar> IntensityImage<T> {
    pub fn new(width: usize, height: usize, pixels: Vec<T>) -> Result<Self> {
        Self::with_bit_depth(width, height, pixels, BitDepth::Sixteen)
    }

    pub fn with_bit_depth(
        width: usize,
        height: usize,
        pixels: Vec<T>,
        bit_depth: BitDepth,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !(**v >= T::zero())) {
            return Err(Error::InvalidImage(format!(
                "intensities must be finite and non-negative, found {bad}"
            )));
        }
        Ok(IntensityImage {
            width,
            height,
            pixels,
            bit_depth,
        })
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn filled(width: usize, height: usize, value: T) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> BitDepth {
        self.bit_depth
    }

    pub fn pixels(&self) -> &[T] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<T> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.pixels[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[T] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    /// Number of profile samples along `axis`.
    pub fn extent(&self, axis: Axis) -> usize {
        match axis {
            Axis::Columns => self.width,
            Axis::Rows => self.height,
        }
    }

    pub fn full_rect(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }

    pub fn min_max(&self) -> (T, T) {
        self.pixels.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
    }

    /// Copies the pixels inside `r` into a new image.
    pub fn crop(&self, r: Rect) -> Result<Self> {
        if r.x0 >= r.x1 || r.y0 >= r.y1 || r.x1 > self.width || r.y1 > self.height {
            return Err(Error::OutOfBounds {
                rect: (r.x0, r.y0, r.x1, r.y1),
                width: self.width,
                height: self.height,
            });
        }
        let mut pixels = Vec::with_capacity(r.area());
        for y in r.y0..r.y1 {
            pixels.extend_from_slice(&self.row(y)[r.x0..r.x1]);
        }
        Ok(IntensityImage {
            width: r.width(),
            height: r.height(),
            pixels,
            bit_depth: self.bit_depth,
        })
    }

    /// `max - I` for every pixel, turning dark spots into bright ones.
    pub fn inverted(&self) -> Self {
        let (_, hi) = self.min_max();
        IntensityImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| hi - v).collect(),
            bit_depth: self.bit_depth,
        }
    }

    /// Multiplies every intensity by `k`.
    ///
    /// # Panics
    /// If `k` is negative or not finite.
    pub fn scaled(&self, k: T) -> Self {
        assert!(k >= T::zero() && k.is_finite(), "scale factor must be finite and >= 0");
        IntensityImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| v * k).collect(),
            bit_depth: self.bit_depth,
        }
    }

    /// Converts to another scalar type.
    pub fn cast<U: Scalar>(&self) -> IntensityImage<U> {
        IntensityImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| U::of(v.as_f64())).collect(),
            bit_depth: self.bit_depth,
        }
    }
}
