//! Image → subarrays → spots.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridding::{
    derivative_minima_cuts, gap_middle_cuts, select_coarse_cuts, template_match,
    template_match_array, CellGrid, GridLines, Method,
};
use crate::image::{Axis, IntensityImage};
use crate::profiles::{binarize, smooth, stddev_profile, sum_profile, Profile1D};
use crate::scalar::Scalar;

/// How deep the pipeline goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// Subarrays and then the spots inside each.
    #[default]
    Full,
    /// Subarrays only; every subarray is left as a single cell.
    Subarray,
}

/// Two-level grid. `spots[r][c]` grids subarray `(r, c)` in the coordinates
/// of that subarray's crop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGrid {
    pub subarrays: CellGrid,
    pub spots: Vec<Vec<CellGrid>>,
}

impl ArrayGrid {
    pub fn spot_cell_count(&self) -> usize {
        self.spots.iter().flatten().map(CellGrid::cell_count).sum()
    }
}

fn profile_for<T: Scalar>(img: &IntensityImage<T>, axis: Axis, method: &Method) -> Result<Profile1D<T>> {
    match method {
        Method::SumThreshold { .. } | Method::SumDerivative { .. } => Ok(sum_profile(img, axis)),
        Method::StdDevThreshold { .. } | Method::StdDevDerivative { .. } => stddev_profile(img, axis),
        Method::TemplateMatch { .. } => Err(Error::MethodMismatch),
    }
}

/// Cuts along one axis with a profile-based method.
///
/// Threshold methods binarize the profile and cut in the middle of every gap;
/// derivative methods optionally smooth the profile and cut at its minima.
pub fn grid_axis<T: Scalar>(img: &IntensityImage<T>, axis: Axis, method: &Method) -> Result<GridLines> {
    let extent = img.extent(axis);
    let profile = profile_for(img, axis, method)?;
    match method {
        Method::SumThreshold { threshold } | Method::StdDevThreshold { threshold } => {
            gap_middle_cuts(&binarize(&profile, *threshold)?, extent)
        }
        Method::SumDerivative { smooth: w } | Method::StdDevDerivative { smooth: w } => {
            let profile = if *w > 1 { smooth(&profile, *w)? } else { profile };
            derivative_minima_cuts(&profile, extent)
        }
        Method::TemplateMatch { .. } => Err(Error::MethodMismatch),
    }
}

/// Like [`grid_axis`], but a structured profile without interior minima (a
/// single row or column of spots) yields the borders instead of an error.
/// Only a perfectly flat profile still reports `NoStructure`.
fn grid_axis_lenient<T: Scalar>(
    img: &IntensityImage<T>,
    axis: Axis,
    method: &Method,
) -> Result<GridLines> {
    match grid_axis(img, axis, method) {
        Err(Error::NoStructure(_)) => {
            let (lo, hi) = profile_for(img, axis, method)?.min_max();
            if hi > lo {
                GridLines::borders(axis, img.extent(axis))
            } else {
                Err(Error::NoStructure(axis))
            }
        }
        other => other,
    }
}

/// Subarray grid of a whole image.
///
/// Both axes are first cut at spot scale; the cuts whose two neighbouring
/// intervals are both much wider than the spot pitch are the subarray gaps.
pub fn grid_image<T: Scalar>(img: &IntensityImage<T>, method: &Method) -> Result<CellGrid> {
    if let Method::TemplateMatch { template, min_score } = method {
        return Ok(template_match_array(img, template, *min_score)?.grid.subarrays);
    }
    let cols = select_coarse_cuts(&grid_axis_lenient(img, Axis::Columns, method)?)?;
    let rows = select_coarse_cuts(&grid_axis_lenient(img, Axis::Rows, method)?)?;
    CellGrid::new(cols, rows)
}

/// Spot grid of one subarray crop.
pub fn grid_subarray<T: Scalar>(sub: &IntensityImage<T>, method: &Method) -> Result<CellGrid> {
    if let Method::TemplateMatch { template, min_score } = method {
        return Ok(template_match(sub, &template.spots, *min_score)?.grid);
    }
    CellGrid::new(
        grid_axis_lenient(sub, Axis::Columns, method)?,
        grid_axis_lenient(sub, Axis::Rows, method)?,
    )
}

/// Full two-level gridding. Subarrays are processed on the current rayon
/// pool; the result is ordered by (subarray row, subarray column) and does
/// not depend on the pool size.
pub fn grid_array<T: Scalar>(img: &IntensityImage<T>, method: &Method, scope: Scope) -> Result<ArrayGrid> {
    method.validate()?;
    if let Method::TemplateMatch { template, min_score } = method {
        let mut grid = template_match_array(img, template, *min_score)?.grid;
        if scope == Scope::Subarray {
            grid.spots = single_cells(&grid.subarrays)?;
        }
        return Ok(grid);
    }
    let subarrays = grid_image(img, method)?;
    let spots = match scope {
        Scope::Subarray => single_cells(&subarrays)?,
        Scope::Full => {
            let cells: Vec<_> = subarrays.cells().collect();
            let flat = cells
                .par_iter()
                .map(|&(_, rect)| grid_subarray(&img.crop(rect)?, method))
                .collect::<Result<Vec<CellGrid>>>()?;
            let n_cols = subarrays.n_cols();
            let mut rows = Vec::with_capacity(subarrays.n_rows());
            let mut it = flat.into_iter();
            for _ in 0..subarrays.n_rows() {
                rows.push(it.by_ref().take(n_cols).collect());
            }
            rows
        }
    };
    Ok(ArrayGrid { subarrays, spots })
}

fn single_cells(subarrays: &CellGrid) -> Result<Vec<Vec<CellGrid>>> {
    (0..subarrays.n_rows())
        .map(|r| {
            (0..subarrays.n_cols())
                .map(|c| {
                    let rect = subarrays.cell(r, c);
                    CellGrid::single(rect.width(), rect.height())
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A strip of bright Gaussian spots along x, `pitch` apart, first center
    /// at `pitch / 2`.
    fn strip(n: usize, pitch: usize, height: usize) -> IntensityImage<f64> {
        let w = n * pitch;
        IntensityImage::from_fn(w, height, |x, y| {
            let cy = height as f64 / 2.0 - 0.5;
            let mut v = 10.0;
            for k in 0..n {
                let cx = (k * pitch + pitch / 2) as f64;
                let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                v += 100.0 * (-d2 / 8.0).exp();
            }
            v
        })
        .unwrap()
    }

    #[test]
    fn strip_cuts_between_spots() {
        let img = strip(8, 12, 12);
        let truth: Vec<usize> = (1..8).map(|k| k * 12).collect();
        for method in [Method::sum_derivative(), Method::SumThreshold { threshold: 0.3 }] {
            let g = grid_axis(&img, Axis::Columns, &method).unwrap();
            assert_eq!(g.interior().len(), 7, "{method:?}");
            for (f, t) in g.interior().iter().zip(&truth) {
                assert!((*f as i64 - *t as i64).abs() <= 2, "{method:?}: {f} vs {t}");
            }
        }
    }

    #[test]
    fn uniform_image_has_no_structure() {
        let img = IntensityImage::filled(30, 30, 5.0).unwrap();
        assert!(matches!(
            grid_axis(&img, Axis::Columns, &Method::sum_derivative()),
            Err(Error::NoStructure(_))
        ));
        assert!(matches!(
            grid_image(&img, &Method::sum_derivative()),
            Err(Error::NoStructure(_))
        ));
        assert!(matches!(
            grid_axis(&img, Axis::Rows, &Method::SumThreshold { threshold: 0.3 }),
            Err(Error::FlatProfile)
        ));
    }

    #[test]
    fn template_is_not_an_axis_method() {
        let img = strip(2, 10, 10);
        let t = crate::gridding::Template {
            n_rows: 1,
            n_cols: 2,
            pitch_x: 10.0,
            pitch_y: 10.0,
            spot_radius: 4.0,
            margin: 0.0,
        };
        let m = Method::template(t.into());
        assert!(matches!(grid_axis(&img, Axis::Rows, &m), Err(Error::MethodMismatch)));
    }

    #[test]
    fn single_spot_subarray() {
        let img = strip(1, 12, 12);
        for method in [Method::sum_derivative(), Method::SumThreshold { threshold: 0.3 }] {
            assert_eq!(grid_subarray(&img, &method).unwrap().cell_count(), 1);
        }
    }

    #[test]
    fn scale_does_not_move_cuts() {
        let img = strip(6, 10, 10);
        let big = img.scaled(7.5);
        for method in [
            Method::sum_derivative(),
            Method::stddev_derivative(),
            Method::SumThreshold { threshold: 0.3 },
            Method::StdDevThreshold { threshold: 0.3 },
        ] {
            assert_eq!(
                grid_axis(&img, Axis::Columns, &method).unwrap(),
                grid_axis(&big, Axis::Columns, &method).unwrap()
            );
        }
    }
}
