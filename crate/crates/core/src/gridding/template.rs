//! Template matching: render an ideal spot lattice and slide it over the
//! image, scoring every translation by zero-normalized cross-correlation.
//!
//! Only translations are searched. A lattice whose pitch differs from the
//! template's (a rescaled or sheared scan) correlates poorly everywhere, and
//! the match is rejected instead of producing a misplaced grid.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridding::pipeline::ArrayGrid;
use crate::gridding::{CellGrid, GridLines};
use crate::image::{Axis, IntensityImage};
use crate::scalar::Scalar;

/// Spot lattice of one subarray.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub n_rows: usize,
    pub n_cols: usize,
    pub pitch_x: f64,
    pub pitch_y: f64,
    pub spot_radius: f64,
    pub margin: f64,
}

impl Template {
    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 || self.n_cols == 0 {
            return Err(Error::InvalidTemplate("needs at least one spot".into()));
        }
        let positive = [self.pitch_x, self.pitch_y, self.spot_radius];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidTemplate(
                "pitch and spot radius must be positive".into(),
            ));
        }
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return Err(Error::InvalidTemplate("margin must be >= 0".into()));
        }
        Ok(())
    }

    /// True when neighbouring spot discs touch or overlap.
    pub fn spots_overlap(&self) -> bool {
        self.pitch_x <= 2.0 * self.spot_radius || self.pitch_y <= 2.0 * self.spot_radius
    }
}

/// A meta-grid of identical subarray lattices separated by blank gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayTemplate {
    pub spots: Template,
    pub meta_rows: usize,
    pub meta_cols: usize,
    pub subarray_gap: f64,
}

impl From<Template> for ArrayTemplate {
    fn from(spots: Template) -> Self {
        ArrayTemplate {
            spots,
            meta_rows: 1,
            meta_cols: 1,
            subarray_gap: 0.0,
        }
    }
}

impl ArrayTemplate {
    pub fn validate(&self) -> Result<()> {
        self.spots.validate()?;
        if self.meta_rows == 0 || self.meta_cols == 0 {
            return Err(Error::InvalidTemplate("needs at least one subarray".into()));
        }
        if !(self.subarray_gap.is_finite() && self.subarray_gap >= 0.0) {
            return Err(Error::InvalidTemplate("subarray gap must be >= 0".into()));
        }
        Ok(())
    }

    /// Parses `key=value` pairs separated by newlines or commas; `#` starts a
    /// comment. `n_rows`, `n_cols`, `spot_radius` and a pitch (`pitch`, or
    /// both `pitch_x` and `pitch_y`) are required. `margin`, `meta_rows`,
    /// `meta_cols` and `subarray_gap` default to a single subarray without
    /// margin.
    pub fn parse_kv(text: &str) -> Result<ArrayTemplate> {
        let bad = |m: String| Error::InvalidTemplate(m);
        let mut kv = std::collections::BTreeMap::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            for item in line.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (k, v) = item
                    .split_once('=')
                    .ok_or_else(|| bad(format!("expected key=value, got '{item}'")))?;
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("{}: not a number: '{}'", k.trim(), v.trim())))?;
                kv.insert(k.trim().to_string(), v);
            }
        }
        const KEYS: [&str; 10] = [
            "n_rows", "n_cols", "pitch", "pitch_x", "pitch_y", "spot_radius", "margin",
            "meta_rows", "meta_cols", "subarray_gap",
        ];
        if let Some(k) = kv.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(bad(format!("unknown key '{k}'")));
        }
        let get = |k: &str| kv.get(k).copied();
        let need = |k: &str| get(k).ok_or_else(|| bad(format!("missing '{k}'")));
        let count = |k: &str, default: Option<f64>| -> Result<usize> {
            let v = match default {
                Some(d) => get(k).unwrap_or(d),
                None => need(k)?,
            };
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(bad(format!("{k} must be a whole number, got {v}")))
            }
        };
        let pitch = get("pitch");
        let t = ArrayTemplate {
            spots: Template {
                n_rows: count("n_rows", None)?,
                n_cols: count("n_cols", None)?,
                pitch_x: get("pitch_x").or(pitch).ok_or_else(|| bad("missing 'pitch_x' (or 'pitch')".into()))?,
                pitch_y: get("pitch_y").or(pitch).ok_or_else(|| bad("missing 'pitch_y' (or 'pitch')".into()))?,
                spot_radius: need("spot_radius")?,
                margin: get("margin").unwrap_or(0.0),
            },
            meta_rows: count("meta_rows", Some(1.0))?,
            meta_cols: count("meta_cols", Some(1.0))?,
            subarray_gap: get("subarray_gap").unwrap_or(0.0),
        };
        t.validate()?;
        Ok(t)
    }

    fn block(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Columns => self.spots.n_cols as f64 * self.spots.pitch_x,
            Axis::Rows => self.spots.n_rows as f64 * self.spots.pitch_y,
        }
    }

    fn pitch(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Columns => self.spots.pitch_x,
            Axis::Rows => self.spots.pitch_y,
        }
    }

    fn meta(&self, axis: Axis) -> usize {
        match axis {
            Axis::Columns => self.meta_cols,
            Axis::Rows => self.meta_rows,
        }
    }

    fn spots_along(&self, axis: Axis) -> usize {
        match axis {
            Axis::Columns => self.spots.n_cols,
            Axis::Rows => self.spots.n_rows,
        }
    }

    /// Rendered size along `axis`.
    pub fn extent(&self, axis: Axis) -> usize {
        let m = self.meta(axis) as f64;
        (2.0 * self.spots.margin + m * self.block(axis) + (m - 1.0) * self.subarray_gap).ceil()
            as usize
    }

    /// Start of subarray `s` along `axis`, relative to the template origin.
    fn block_start(&self, axis: Axis, s: usize) -> f64 {
        self.spots.margin + s as f64 * (self.block(axis) + self.subarray_gap)
    }

    /// Spot center coordinates along `axis`, relative to the template origin.
    fn centers(&self, axis: Axis) -> Vec<f64> {
        let p = self.pitch(axis);
        (0..self.meta(axis))
            .flat_map(|s| {
                let start = self.block_start(axis, s);
                (0..self.spots_along(axis)).map(move |k| start + (k as f64 + 0.5) * p)
            })
            .collect()
    }

    /// Subarray cut positions (gap midpoints) along `axis` for a template
    /// placed at `offset`.
    fn subarray_cuts(&self, axis: Axis, offset: usize) -> Vec<usize> {
        (0..self.meta(axis).saturating_sub(1))
            .map(|s| {
                let end = self.block_start(axis, s) + self.block(axis);
                round_pos(offset as f64 + end + 0.5 * self.subarray_gap)
            })
            .collect()
    }

    /// Spot cut positions (lattice boundaries between adjacent spots) inside
    /// subarray `s`, in image coordinates.
    fn spot_cuts(&self, axis: Axis, offset: usize, s: usize) -> Vec<usize> {
        let start = offset as f64 + self.block_start(axis, s);
        (1..self.spots_along(axis))
            .map(|k| round_pos(start + k as f64 * self.pitch(axis)))
            .collect()
    }

    /// The two-level grid obtained by laying this template at `offset` on an
    /// image of `width` x `height`.
    pub fn grid_at(&self, offset: (usize, usize), width: usize, height: usize) -> Result<ArrayGrid> {
        let col_lines =
            GridLines::from_interior(Axis::Columns, width, self.subarray_cuts(Axis::Columns, offset.0))?;
        let row_lines =
            GridLines::from_interior(Axis::Rows, height, self.subarray_cuts(Axis::Rows, offset.1))?;
        let subarrays = CellGrid::new(col_lines, row_lines)?;
        let mut spots = Vec::with_capacity(subarrays.n_rows());
        for r in 0..subarrays.n_rows() {
            let mut row = Vec::with_capacity(subarrays.n_cols());
            for c in 0..subarrays.n_cols() {
                let rect = subarrays.cell(r, c);
                let cols = self
                    .spot_cuts(Axis::Columns, offset.0, c)
                    .into_iter()
                    .filter_map(|x| x.checked_sub(rect.x0));
                let rows = self
                    .spot_cuts(Axis::Rows, offset.1, r)
                    .into_iter()
                    .filter_map(|y| y.checked_sub(rect.y0));
                row.push(CellGrid::new(
                    GridLines::from_interior(Axis::Columns, rect.width(), cols)?,
                    GridLines::from_interior(Axis::Rows, rect.height(), rows)?,
                )?);
            }
            spots.push(row);
        }
        Ok(ArrayGrid { subarrays, spots })
    }
}

impl std::fmt::Display for ArrayTemplate {
    /// The form read by [`ArrayTemplate::parse_kv`].
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let t = &self.spots;
        writeln!(f, "n_rows={}\nn_cols={}", t.n_rows, t.n_cols)?;
        writeln!(f, "pitch_x={}\npitch_y={}", t.pitch_x, t.pitch_y)?;
        writeln!(f, "spot_radius={}\nmargin={}", t.spot_radius, t.margin)?;
        writeln!(f, "meta_rows={}\nmeta_cols={}", self.meta_rows, self.meta_cols)?;
        writeln!(f, "subarray_gap={}", self.subarray_gap)
    }
}

fn round_pos(x: f64) -> usize {
    x.round().max(0.0) as usize
}

/// Ideal noiseless lattice: unit-amplitude Gaussian spots with
/// `sigma = spot_radius / 2` on a zero background.
pub fn render_template<T: Scalar>(t: &Template) -> Result<IntensityImage<T>> {
    render_array_template(&ArrayTemplate::from(t.clone()))
}

pub fn render_array_template<T: Scalar>(t: &ArrayTemplate) -> Result<IntensityImage<T>> {
    t.validate()?;
    let (w, h) = (t.extent(Axis::Columns), t.extent(Axis::Rows));
    let mut buf = vec![0.0f64; w * h];
    let sigma = 0.5 * t.spots.spot_radius;
    let reach = (3.0 * t.spots.spot_radius).ceil() as isize;
    let inv = 1.0 / (2.0 * sigma * sigma);
    let xs = t.centers(Axis::Columns);
    let ys = t.centers(Axis::Rows);
    for &cy in &ys {
        for &cx in &xs {
            let (ix, iy) = (cx.round() as isize, cy.round() as isize);
            for y in (iy - reach).max(0)..(iy + reach + 1).min(h as isize) {
                let dy = y as f64 - cy;
                for x in (ix - reach).max(0)..(ix + reach + 1).min(w as isize) {
                    let dx = x as f64 - cx;
                    buf[y as usize * w + x as usize] += (-(dx * dx + dy * dy) * inv).exp();
                }
            }
        }
    }
    IntensityImage::new(w, h, buf.into_iter().map(T::of).collect())
}

/// Zero-normalized cross-correlation of `tmpl` against every placement inside
/// `img`. Returns the scores row-major with dimensions
/// `(img.w − tmpl.w + 1) x (img.h − tmpl.h + 1)`.
///
/// The correlation term is computed with FFTs; window statistics come from
/// summed-area tables. Windows with no variance score 0.
pub fn zncc_map<T: Scalar>(
    img: &IntensityImage<T>,
    tmpl: &IntensityImage<T>,
) -> Result<(Vec<f64>, usize, usize)> {
    let (w, h) = (img.width(), img.height());
    let (tw, th) = (tmpl.width(), tmpl.height());
    if tw > w || th > h {
        return Err(Error::TemplateTooLarge {
            template_w: tw,
            template_h: th,
            image_w: w,
            image_h: h,
        });
    }
    let (ow, oh) = (w - tw + 1, h - th + 1);
    let n = (tw * th) as f64;

    // Centering both signals keeps the window sums well conditioned.
    let img_mean = img.pixels().iter().map(|v| v.as_f64()).sum::<f64>() / (w * h) as f64;
    let centered: Vec<f64> = img.pixels().iter().map(|v| v.as_f64() - img_mean).collect();
    let t_mean = tmpl.pixels().iter().map(|v| v.as_f64()).sum::<f64>() / n;
    let t0: Vec<f64> = tmpl.pixels().iter().map(|v| v.as_f64() - t_mean).collect();
    let t_norm = t0.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(t_norm > 0.0) {
        return Err(Error::InvalidTemplate("template has no contrast".into()));
    }

    let corr = cross_correlate(&centered, w, h, &t0, tw, th);

    // summed-area tables with a zero first row/column
    let sw = w + 1;
    let mut s1 = vec![0.0f64; sw * (h + 1)];
    let mut s2 = vec![0.0f64; sw * (h + 1)];
    for y in 0..h {
        let (mut r1, mut r2) = (0.0, 0.0);
        for x in 0..w {
            let v = centered[y * w + x];
            r1 += v;
            r2 += v * v;
            s1[(y + 1) * sw + x + 1] = s1[y * sw + x + 1] + r1;
            s2[(y + 1) * sw + x + 1] = s2[y * sw + x + 1] + r2;
        }
    }
    let rect_sum = |s: &[f64], x: usize, y: usize| {
        s[(y + th) * sw + x + tw] - s[y * sw + x + tw] - s[(y + th) * sw + x] + s[y * sw + x]
    };
    let total_energy = s2[h * sw + w].max(f64::MIN_POSITIVE);
    let floor = 1e-12 * total_energy * n / (w * h) as f64;

    let mut scores = Vec::with_capacity(ow * oh);
    for y in 0..oh {
        for x in 0..ow {
            let a = rect_sum(&s1, x, y);
            let b = rect_sum(&s2, x, y);
            let var_n = b - a * a / n;
            let score = if var_n > floor {
                (corr[y * w + x] / (t_norm * var_n.sqrt())).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            scores.push(score);
        }
    }
    Ok((scores, ow, oh))
}

/// `c[y * w + x] = Σ_{u,v} t(u, v) · img(x + u, y + v)` for every placement
/// that keeps the template inside the image (other entries are wrapped and
/// meaningless).
fn cross_correlate(img: &[f64], w: usize, h: usize, t: &[f64], tw: usize, th: usize) -> Vec<f64> {
    let mut planner = FftPlanner::<f64>::new();
    let mut a: Vec<Complex<f64>> = img.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut b = vec![Complex::new(0.0, 0.0); w * h];
    for v in 0..th {
        for u in 0..tw {
            b[v * w + u] = Complex::new(t[v * tw + u], 0.0);
        }
    }
    fft2(&mut planner, &mut a, w, h, false);
    fft2(&mut planner, &mut b, w, h, false);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y.conj();
    }
    fft2(&mut planner, &mut a, w, h, true);
    let scale = 1.0 / (w * h) as f64;
    a.into_iter().map(|c| c.re * scale).collect()
}

fn fft2(planner: &mut FftPlanner<f64>, data: &mut [Complex<f64>], w: usize, h: usize, inverse: bool) {
    let row_fft = if inverse {
        planner.plan_fft_inverse(w)
    } else {
        planner.plan_fft_forward(w)
    };
    for row in data.chunks_exact_mut(w) {
        row_fft.process(row);
    }
    let col_fft = if inverse {
        planner.plan_fft_inverse(h)
    } else {
        planner.plan_fft_forward(h)
    };
    let mut col = vec![Complex::new(0.0, 0.0); h];
    for x in 0..w {
        for y in 0..h {
            col[y] = data[y * w + x];
        }
        col_fft.process(&mut col);
        for y in 0..h {
            data[y * w + x] = col[y];
        }
    }
}

/// Best placement of a rendered template.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateMatch<G> {
    pub offset: (usize, usize),
    pub score: f64,
    pub grid: G,
}

fn best_offset<T: Scalar>(
    img: &IntensityImage<T>,
    tmpl: &IntensityImage<T>,
    min_score: f64,
) -> Result<((usize, usize), f64)> {
    let (scores, ow, _) = zncc_map(img, tmpl)?;
    let (mut best, mut at) = (f64::NEG_INFINITY, 0);
    for (i, &s) in scores.iter().enumerate() {
        if s > best {
            best = s;
            at = i;
        }
    }
    if best < min_score {
        return Err(Error::GeometricDistortion {
            score: best,
            min_score,
        });
    }
    Ok(((at % ow, at / ow), best))
}

/// Exhaustive translation search for one subarray template. The returned
/// grid cuts between adjacent lattice positions; the template margin and any
/// image area outside the template fall into the border cells.
pub fn template_match<T: Scalar>(
    img: &IntensityImage<T>,
    t: &Template,
    min_score: f64,
) -> Result<TemplateMatch<CellGrid>> {
    let m = template_match_array(img, &ArrayTemplate::from(t.clone()), min_score)?;
    let grid = m.grid.spots[0][0].clone();
    Ok(TemplateMatch {
        offset: m.offset,
        score: m.score,
        grid,
    })
}

/// Exhaustive translation search for a whole-array template.
pub fn template_match_array<T: Scalar>(
    img: &IntensityImage<T>,
    t: &ArrayTemplate,
    min_score: f64,
) -> Result<TemplateMatch<ArrayGrid>> {
    let tmpl: IntensityImage<T> = render_array_template(t)?;
    let (offset, score) = best_offset(img, &tmpl, min_score)?;
    let grid = t.grid_at(offset, img.width(), img.height())?;
    Ok(TemplateMatch {
        offset,
        score,
        grid,
    })
}
