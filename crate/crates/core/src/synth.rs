//! Seeded synthetic microarray images with exact ground truth.
//!
//! # Geometry
//!
//! Along each axis the image is a row of `meta` subarray blocks. A block is
//! `spots · pitch` wide and blocks are `subarray_gap` apart, with half a gap
//! of margin at both image borders, so the image extent is
//! `meta · (spots · pitch + gap)`. Spot `k` of block `s` is centered at
//!
//! ```text
//! gap / 2 + s · (spots · pitch + gap) + (k + 0.5) · pitch
//! ```
//!
//! with pixel `i` sampled at coordinate `i`. True subarray cuts sit in the
//! middle of every gap, at `(s + 1) · (spots · pitch + gap)`; true spot cuts
//! sit halfway between adjacent spot centers.
//!
//! # Randomness
//!
//! All draws come from SplitMix64 (state advanced by `0x9E3779B97F4A7C15`,
//! output mixed with `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB`). Uniform
//! reals take the top 53 bits. Normal deviates use Box–Muller, both outputs
//! consumed in order. Per spot, in row-major order over (subarray row,
//! subarray column, spot row, spot column), two uniforms are drawn: the
//! amplitude, then the dropout decision. Noise is drawn afterwards for every
//! pixel in row-major order.
//!
//! Transcendentals come from the `libm` crate rather than the platform math
//! library, so images are bit-identical across platforms and build profiles.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridding::{ArrayGrid, ArrayTemplate, CellGrid, GridLines, Template};
use crate::image::{Axis, BitDepth, IntensityImage};
use crate::scalar::Scalar;

/// Dropout spots keep this fraction of their drawn amplitude.
pub const DROPOUT_GAIN: f64 = 0.01;

/// Portable 64-bit generator; identical streams in every language.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
    spare: Option<f64>,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed, spare: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal deviate.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        let r = (-2.0 * libm::log(u1)).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * libm::sin(theta));
        r * libm::cos(theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpotShape {
    /// Isotropic Gaussian with standard deviation `spot_sigma`.
    #[default]
    Gaussian,
    /// Flat disc of radius `2 · spot_sigma`.
    Disc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub meta_rows: usize,
    pub meta_cols: usize,
    pub spots_rows: usize,
    pub spots_cols: usize,
    pub pitch: f64,
    pub spot_sigma: f64,
    pub subarray_gap: f64,
    pub background_level: f64,
    pub amplitude_lo: f64,
    pub amplitude_hi: f64,
    pub noise_sigma: f64,
    pub dropout_rate: f64,
    pub seed: u64,
    pub spot_shape: SpotShape,
}

/// The canonical 4 × 4 meta-grid of 24 × 16-spot subarrays (6,144 spots).
///
/// Pitch, spot size, gap, intensities and noise are this crate's choices: a
/// 10 px pitch, Gaussian spots with sigma 2 px, 20 px subarray gaps, a
/// background of 300 and amplitudes uniform in 1000..3000 with 5% dropouts.
/// Noise sigma is 100 (5% of the mean amplitude). The image is 720 x 1040.
pub fn fig3_like_spec() -> SyntheticSpec {
    SyntheticSpec {
        meta_rows: 4,
        meta_cols: 4,
        spots_rows: 24,
        spots_cols: 16,
        pitch: 10.0,
        spot_sigma: 2.0,
        subarray_gap: 20.0,
        background_level: 300.0,
        amplitude_lo: 1000.0,
        amplitude_hi: 3000.0,
        noise_sigma: 100.0,
        dropout_rate: 0.05,
        seed: 6144,
        spot_shape: SpotShape::Gaussian,
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::SpecInvalid(m.to_string()));
        if self.meta_rows == 0 || self.meta_cols == 0 || self.spots_rows == 0 || self.spots_cols == 0 {
            return bad("grid dimensions must be positive");
        }
        if !(self.pitch.is_finite() && self.pitch > 0.0) {
            return bad("pitch must be positive");
        }
        if !(self.spot_sigma.is_finite() && self.spot_sigma > 0.0) {
            return bad("spot_sigma must be positive");
        }
        if !(self.subarray_gap.is_finite() && self.subarray_gap >= 0.0) {
            return bad("subarray_gap must be >= 0");
        }
        if !(self.background_level.is_finite() && self.background_level >= 0.0) {
            return bad("background_level must be >= 0");
        }
        if !(self.amplitude_lo.is_finite() && self.amplitude_hi.is_finite()) || self.amplitude_lo > self.amplitude_hi {
            return bad("amplitude range must satisfy lo <= hi");
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad("noise_sigma must be >= 0");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout_rate must be in [0, 1)");
        }
        Ok(())
    }

    /// Advisory problems that do not prevent generation.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = vec![];
        if self.pitch <= 4.0 * self.spot_sigma {
            w.push(format!(
                "pitch {} <= 4 x spot_sigma {}: neighbouring spots overlap",
                self.pitch, self.spot_sigma
            ));
        }
        if self.subarray_gap <= self.pitch {
            w.push("subarray_gap <= pitch: subarrays cannot be told apart from spot gaps".into());
        }
        w
    }

    pub fn mean_amplitude(&self) -> f64 {
        0.5 * (self.amplitude_lo + self.amplitude_hi)
    }

    fn block(&self, axis: Axis) -> f64 {
        self.spots_along(axis) as f64 * self.pitch
    }

    fn meta(&self, axis: Axis) -> usize {
        match axis {
            Axis::Columns => self.meta_cols,
            Axis::Rows => self.meta_rows,
        }
    }

    fn spots_along(&self, axis: Axis) -> usize {
        match axis {
            Axis::Columns => self.spots_cols,
            Axis::Rows => self.spots_rows,
        }
    }

    pub fn extent(&self, axis: Axis) -> usize {
        (self.meta(axis) as f64 * (self.block(axis) + self.subarray_gap)).round() as usize
    }

    fn block_origin(&self, axis: Axis, s: usize) -> f64 {
        0.5 * self.subarray_gap + s as f64 * (self.block(axis) + self.subarray_gap)
    }

    fn center(&self, axis: Axis, s: usize, k: usize) -> f64 {
        self.block_origin(axis, s) + (k as f64 + 0.5) * self.pitch
    }

    /// Template describing the same lattice, for template matching.
    pub fn array_template(&self) -> ArrayTemplate {
        ArrayTemplate {
            spots: Template {
                n_rows: self.spots_rows,
                n_cols: self.spots_cols,
                pitch_x: self.pitch,
                pitch_y: self.pitch,
                spot_radius: 2.0 * self.spot_sigma,
                margin: 0.5 * self.subarray_gap,
            },
            meta_rows: self.meta_rows,
            meta_cols: self.meta_cols,
            subarray_gap: self.subarray_gap,
        }
    }

    const KEYS: [&'static str; 14] = [
        "meta_rows",
        "meta_cols",
        "spots_rows",
        "spots_cols",
        "pitch",
        "spot_sigma",
        "subarray_gap",
        "background_level",
        "amplitude_lo",
        "amplitude_hi",
        "noise_sigma",
        "dropout_rate",
        "seed",
        "spot_shape",
    ];

    /// Parses the flat `key=value` format. Blank lines and `#` comments are
    /// ignored; keys that are absent keep their [`fig3_like_spec`] value.
    pub fn parse_kv(text: &str) -> Result<SyntheticSpec> {
        let mut spec = fig3_like_spec();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::SpecInvalid(format!("line {}: expected key=value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let err = |what: &str| Error::SpecInvalid(format!("line {}: bad {key}: {what}", n + 1));
            let int = || value.parse::<usize>().map_err(|e| err(&e.to_string()));
            let real = || value.parse::<f64>().map_err(|e| err(&e.to_string()));
            match key {
                "meta_rows" => spec.meta_rows = int()?,
                "meta_cols" => spec.meta_cols = int()?,
                "spots_rows" => spec.spots_rows = int()?,
                "spots_cols" => spec.spots_cols = int()?,
                "pitch" => spec.pitch = real()?,
                "spot_sigma" => spec.spot_sigma = real()?,
                "subarray_gap" => spec.subarray_gap = real()?,
                "background_level" => spec.background_level = real()?,
                "amplitude_lo" => spec.amplitude_lo = real()?,
                "amplitude_hi" => spec.amplitude_hi = real()?,
                "noise_sigma" => spec.noise_sigma = real()?,
                "dropout_rate" => spec.dropout_rate = real()?,
                "seed" => spec.seed = value.parse::<u64>().map_err(|e| err(&e.to_string()))?,
                "spot_shape" => {
                    spec.spot_shape = match value {
                        "gaussian" => SpotShape::Gaussian,
                        "disc" => SpotShape::Disc,
                        _ => return Err(err("expected gaussian or disc")),
                    }
                }
                _ => {
                    return Err(Error::SpecInvalid(format!(
                        "line {}: unknown key '{key}' (known: {})",
                        n + 1,
                        Self::KEYS.join(", ")
                    )))
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for SyntheticSpec {
    /// The `key=value` form accepted by [`SyntheticSpec::parse_kv`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "meta_rows={}", self.meta_rows)?;
        writeln!(f, "meta_cols={}", self.meta_cols)?;
        writeln!(f, "spots_rows={}", self.spots_rows)?;
        writeln!(f, "spots_cols={}", self.spots_cols)?;
        writeln!(f, "pitch={}", self.pitch)?;
        writeln!(f, "spot_sigma={}", self.spot_sigma)?;
        writeln!(f, "subarray_gap={}", self.subarray_gap)?;
        writeln!(f, "background_level={}", self.background_level)?;
        writeln!(f, "amplitude_lo={}", self.amplitude_lo)?;
        writeln!(f, "amplitude_hi={}", self.amplitude_hi)?;
        writeln!(f, "noise_sigma={}", self.noise_sigma)?;
        writeln!(f, "dropout_rate={}", self.dropout_rate)?;
        writeln!(f, "seed={}", self.seed)?;
        let shape = match self.spot_shape {
            SpotShape::Gaussian => "gaussian",
            SpotShape::Disc => "disc",
        };
        writeln!(f, "spot_shape={shape}")
    }
}

impl FromStr for SyntheticSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SyntheticSpec::parse_kv(s)
    }
}

/// One rendered spot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpotCenter {
    pub subarray: (usize, usize),
    pub cell: (usize, usize),
    pub x: f64,
    pub y: f64,
    pub amplitude: f64,
    pub dropout: bool,
}

/// True geometry of a generated image.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub grid: ArrayGrid,
    pub spot_centers: Vec<SpotCenter>,
}

impl GroundTruth {
    pub fn subarray_col_cuts(&self) -> &GridLines {
        &self.grid.subarrays.col_lines
    }

    pub fn subarray_row_cuts(&self) -> &GridLines {
        &self.grid.subarrays.row_lines
    }

    /// Spot centers as `subarray_row,subarray_col,cell_row,cell_col,x,y,amplitude,dropout`.
    pub fn write_centers_csv(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "subarray_row,subarray_col,cell_row,cell_col,x,y,amplitude,dropout")?;
        for s in &self.spot_centers {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.subarray.0,
                s.subarray.1,
                s.cell.0,
                s.cell.1,
                s.x,
                s.y,
                s.amplitude,
                u8::from(s.dropout)
            )?;
        }
        Ok(())
    }

    /// Spots per (subarray, cell), for looking up what a cell should contain.
    pub fn centers_by_cell(&self) -> BTreeMap<((usize, usize), (usize, usize)), SpotCenter> {
        self.spot_centers.iter().map(|s| ((s.subarray, s.cell), *s)).collect()
    }
}

/// Exact ground-truth grid of a spec.
pub fn truth_grid(spec: &SyntheticSpec) -> Result<ArrayGrid> {
    let cuts = |axis: Axis| -> Result<GridLines> {
        let step = spec.block(axis) + spec.subarray_gap;
        GridLines::from_interior(
            axis,
            spec.extent(axis),
            (1..spec.meta(axis)).map(|s| (s as f64 * step).round() as usize),
        )
    };
    let subarrays = CellGrid::new(cuts(Axis::Columns)?, cuts(Axis::Rows)?)?;
    let spot_lines = |axis: Axis, s: usize, origin: usize, extent: usize| -> Result<GridLines> {
        let start = spec.block_origin(axis, s);
        GridLines::from_interior(
            axis,
            extent,
            (1..spec.spots_along(axis)).map(|k| (start + k as f64 * spec.pitch).round() as usize - origin),
        )
    };
    let mut spots = Vec::with_capacity(spec.meta_rows);
    for r in 0..spec.meta_rows {
        let mut row = Vec::with_capacity(spec.meta_cols);
        for c in 0..spec.meta_cols {
            let rect = subarrays.cell(r, c);
            row.push(CellGrid::new(
                spot_lines(Axis::Columns, c, rect.x0, rect.width())?,
                spot_lines(Axis::Rows, r, rect.y0, rect.height())?,
            )?);
        }
        spots.push(row);
    }
    Ok(ArrayGrid { subarrays, spots })
}

/// Spot positions and amplitudes, consuming the generator in the documented
/// order.
fn draw_spots(spec: &SyntheticSpec, rng: &mut SplitMix64) -> Vec<SpotCenter> {
    let mut out = Vec::with_capacity(spec.meta_rows * spec.meta_cols * spec.spots_rows * spec.spots_cols);
    for sr in 0..spec.meta_rows {
        for sc in 0..spec.meta_cols {
            for r in 0..spec.spots_rows {
                for c in 0..spec.spots_cols {
                    let u = rng.uniform();
                    let amp = spec.amplitude_lo + u * (spec.amplitude_hi - spec.amplitude_lo);
                    let dropout = rng.uniform() < spec.dropout_rate;
                    out.push(SpotCenter {
                        subarray: (sr, sc),
                        cell: (r, c),
                        x: spec.center(Axis::Columns, sc, c),
                        y: spec.center(Axis::Rows, sr, r),
                        amplitude: if dropout { amp * DROPOUT_GAIN } else { amp },
                        dropout,
                    });
                }
            }
        }
    }
    out
}

/// Adds spots onto a row-major buffer of `width` x `height`.
pub fn render_spots(buf: &mut [f64], width: usize, height: usize, spots: &[SpotCenter], sigma: f64, shape: SpotShape) {
    let reach = (5.0 * sigma).ceil() as isize;
    let inv = 1.0 / (2.0 * sigma * sigma);
    let disc_r2 = 4.0 * sigma * sigma;
    for s in spots {
        let (ix, iy) = (s.x.round() as isize, s.y.round() as isize);
        for y in (iy - reach).max(0)..(iy + reach + 1).min(height as isize) {
            let dy = y as f64 - s.y;
            for x in (ix - reach).max(0)..(ix + reach + 1).min(width as isize) {
                let dx = x as f64 - s.x;
                let d2 = dx * dx + dy * dy;
                let v = match shape {
                    SpotShape::Gaussian => s.amplitude * libm::exp(-d2 * inv),
                    SpotShape::Disc if d2 <= disc_r2 => s.amplitude,
                    SpotShape::Disc => 0.0,
                };
                buf[y as usize * width + x as usize] += v;
            }
        }
    }
}

/// Renders the image described by `spec` and its ground truth. The output is
/// a pure function of `spec`, seed included.
pub fn generate<T: Scalar>(spec: &SyntheticSpec) -> Result<(IntensityImage<T>, GroundTruth)> {
    spec.validate()?;
    let (w, h) = (spec.extent(Axis::Columns), spec.extent(Axis::Rows));
    let mut rng = SplitMix64::new(spec.seed);
    let spots = draw_spots(spec, &mut rng);
    let mut buf = vec![spec.background_level; w * h];
    render_spots(&mut buf, w, h, &spots, spec.spot_sigma, spec.spot_shape);
    if spec.noise_sigma > 0.0 {
        for v in buf.iter_mut() {
            *v = (*v + spec.noise_sigma * rng.normal()).max(0.0);
        }
    }
    let img = IntensityImage::with_bit_depth(w, h, buf.into_iter().map(T::of).collect(), BitDepth::Sixteen)?;
    let truth = GroundTruth {
        grid: truth_grid(spec)?,
        spot_centers: spots,
    };
    Ok((img, truth))
}

/// FNV-1a over the IEEE-754 bit patterns of the pixels, in row-major order.
pub fn checksum(img: &IntensityImage<f64>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in img.pixels() {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SyntheticSpec {
        SyntheticSpec {
            meta_rows: 2,
            meta_cols: 2,
            spots_rows: 3,
            spots_cols: 4,
            pitch: 10.0,
            spot_sigma: 2.0,
            subarray_gap: 20.0,
            background_level: 100.0,
            amplitude_lo: 500.0,
            amplitude_hi: 500.0,
            noise_sigma: 0.0,
            dropout_rate: 0.0,
            seed: 1,
            spot_shape: SpotShape::Gaussian,
        }
    }

    #[test]
    fn splitmix_reference_values() {
        // First outputs for seed 0, as published with the algorithm.
        let mut r = SplitMix64::new(0);
        assert_eq!(r.next_u64(), 0xe220_a839_7b1d_cdaf);
        assert_eq!(r.next_u64(), 0x6e78_9e6a_a1b9_65f4);
        assert_eq!(r.next_u64(), 0x06c4_5d18_8009_454f);
    }

    #[test]
    fn normal_moments() {
        let mut r = SplitMix64::new(7);
        let xs: Vec<f64> = (0..200_000).map(|_| r.normal()).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.02);
    }

    #[test]
    fn deterministic() {
        let mut spec = tiny();
        spec.noise_sigma = 30.0;
        spec.dropout_rate = 0.2;
        let (a, ta) = generate::<f64>(&spec).unwrap();
        let (b, tb) = generate::<f64>(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        spec.seed = 2;
        let (c, _) = generate::<f64>(&spec).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn centers_carry_background_plus_amplitude() {
        let spec = tiny();
        let (img, truth) = generate::<f64>(&spec).unwrap();
        for s in &truth.spot_centers {
            let v = img.get(s.x as usize, s.y as usize);
            let want = spec.background_level + s.amplitude;
            assert!((v - want).abs() < 1e-4 * want, "{v} vs {want}");
        }
    }

    #[test]
    fn truth_layout() {
        let spec = tiny();
        let g = truth_grid(&spec).unwrap();
        assert_eq!(spec.extent(Axis::Columns), 120);
        assert_eq!(spec.extent(Axis::Rows), 100);
        assert_eq!(g.subarrays.col_lines.cuts(), &[0, 60, 120]);
        assert_eq!(g.subarrays.row_lines.cuts(), &[0, 50, 100]);
        assert_eq!(g.spots[1][1].col_lines.cuts(), &[0, 20, 30, 40, 60]);
        assert_eq!(g.spots[1][1].row_lines.cuts(), &[0, 20, 30, 50]);
    }

    #[test]
    fn fig3_counts() {
        let spec = fig3_like_spec();
        assert_eq!(spec.meta_rows * spec.meta_cols, 16);
        let g = truth_grid(&spec).unwrap();
        assert_eq!(g.subarrays.cell_count(), 16);
        assert_eq!(g.spot_cell_count(), 6144);
        assert_eq!((spec.extent(Axis::Columns), spec.extent(Axis::Rows)), (720, 1040));
        assert!(spec.warnings().is_empty());
    }

    #[test]
    fn kv_round_trip_and_errors() {
        let spec = SyntheticSpec { seed: 99, spot_shape: SpotShape::Disc, ..tiny() };
        assert_eq!(SyntheticSpec::parse_kv(&spec.to_string()).unwrap(), spec);
        let partial = SyntheticSpec::parse_kv("# comment\nmeta_rows = 2\n\nseed=5 # inline\n").unwrap();
        assert_eq!(partial.meta_rows, 2);
        assert_eq!(partial.seed, 5);
        assert_eq!(partial.spots_rows, 24);
        assert!(SyntheticSpec::parse_kv("colour=red").is_err());
        assert!(SyntheticSpec::parse_kv("pitch").is_err());
        assert!(SyntheticSpec::parse_kv("pitch=-3").is_err());
        assert!(SyntheticSpec::parse_kv("amplitude_lo=5\namplitude_hi=1").is_err());
        assert!(SyntheticSpec::parse_kv("dropout_rate=1").is_err());
    }

    #[test]
    fn disc_mode_is_flat_topped() {
        let spec = SyntheticSpec { spot_shape: SpotShape::Disc, ..tiny() };
        let (img, truth) = generate::<f64>(&spec).unwrap();
        let s = truth.spot_centers[0];
        let (x, y) = (s.x as usize, s.y as usize);
        assert_eq!(img.get(x, y), 600.0);
        assert_eq!(img.get(x + 4, y), 600.0);
        assert_eq!(img.get(x + 5, y), 100.0);
    }

    #[test]
    fn warnings_flag_crowded_specs() {
        let spec = SyntheticSpec { pitch: 6.0, subarray_gap: 5.0, ..tiny() };
        assert_eq!(spec.warnings().len(), 2);
    }

    #[test]
    fn fig3_golden_checksum() {
        let (img, truth) = generate::<f64>(&fig3_like_spec()).unwrap();
        assert_eq!(checksum(&img), 0x5620_d68a_df78_1bee);
        assert_eq!(truth.spot_centers.len(), 6144);
    }

    #[test]
    fn mean_intensity_matches_expected_mass() {
        // no noise and no dropout; spots far from the borders so none is clipped
        let spec = SyntheticSpec { meta_rows: 3, meta_cols: 3, spots_rows: 8, spots_cols: 8, amplitude_lo: 200.0, amplitude_hi: 800.0, ..tiny() };
        let (img, _) = generate::<f64>(&spec).unwrap();
        let n = img.pixels().len() as f64;
        let mean = img.pixels().iter().sum::<f64>() / n;
        let spots = (spec.meta_rows * spec.meta_cols * spec.spots_rows * spec.spots_cols) as f64;
        let mass = spec.mean_amplitude() * 2.0 * std::f64::consts::PI * spec.spot_sigma.powi(2);
        let want = spec.background_level + spots * mass / n;
        assert!((mean - want).abs() < 0.05 * want, "{mean} vs {want}");
    }
}
