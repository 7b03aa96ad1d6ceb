//! Cells as image regions, spot counting, and scoring against ground truth.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridding::{ArrayGrid, CellGrid, GridLines};
use crate::image::{IntensityImage, Rect};
use crate::scalar::Scalar;

/// Smallest connected foreground area counted as a spot.
pub const MIN_SPOT_AREA: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpotCell {
    pub subarray_index: (usize, usize),
    pub cell_index: (usize, usize),
    /// In parent image coordinates.
    pub bounds: Rect,
}

/// All cells of a single-level grid, row-major.
pub fn extract_cells<T: Scalar>(img: &IntensityImage<T>, g: &CellGrid) -> Result<Vec<SpotCell>> {
    if g.width() != img.width() || g.height() != img.height() {
        return Err(Error::DimensionMismatch(format!(
            "grid is {}x{}, image is {}x{}",
            g.width(),
            g.height(),
            img.width(),
            img.height()
        )));
    }
    Ok(g.cells()
        .map(|(idx, bounds)| SpotCell {
            subarray_index: (0, 0),
            cell_index: idx,
            bounds,
        })
        .collect())
}

/// All spot cells of a two-level grid, ordered by subarray then cell.
pub fn extract_array_cells<T: Scalar>(img: &IntensityImage<T>, g: &ArrayGrid) -> Result<Vec<SpotCell>> {
    let mut out = Vec::with_capacity(g.spot_cell_count());
    for (sub_idx, sub) in extract_cells(img, &g.subarrays)?.into_iter().map(|c| (c.cell_index, c.bounds)) {
        let spots = &g.spots[sub_idx.0][sub_idx.1];
        if spots.width() != sub.width() || spots.height() != sub.height() {
            return Err(Error::DimensionMismatch(format!(
                "spot grid of subarray {sub_idx:?} is {}x{}, subarray is {}x{}",
                spots.width(),
                spots.height(),
                sub.width(),
                sub.height()
            )));
        }
        out.extend(spots.cells().map(|(idx, r)| SpotCell {
            subarray_index: sub_idx,
            cell_index: idx,
            bounds: r.translated(sub.x0, sub.y0),
        }));
    }
    Ok(out)
}

/// Number of spots in a cell: 8-connected components of at least
/// [`MIN_SPOT_AREA`] pixels among those at or above the midpoint of the cell's
/// intensity range. A flat cell has none.
pub fn count_spots<T: Scalar>(cell: &IntensityImage<T>) -> usize {
    let (lo, hi) = cell.min_max();
    if hi <= lo {
        return 0;
    }
    let level = lo + (hi - lo) * T::of(0.5);
    let (w, h) = (cell.width(), cell.height());
    let mut seen: Vec<bool> = cell.pixels().iter().map(|&v| v < level).collect();
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut area = 0;
        while let Some(i) = stack.pop() {
            area += 1;
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        if area >= MIN_SPOT_AREA {
            count += 1;
        }
    }
    count
}

/// Spot count of every cell, in cell order. Counting runs on the rayon pool.
pub fn count_cell_spots<T: Scalar>(img: &IntensityImage<T>, cells: &[SpotCell]) -> Result<Vec<usize>> {
    cells
        .par_iter()
        .map(|c| img.crop(c.bounds).map(|crop| count_spots(&crop)))
        .collect()
}

/// How many cells hold 0, 1, 2, ... spots.
pub fn spot_histogram(counts: &[usize]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for &c in counts {
        *h.entry(c).or_insert(0) += 1;
    }
    h
}

/// Agreement between found and true interior cuts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GridScore {
    pub matched_cuts: usize,
    pub missed_cuts: usize,
    pub spurious_cuts: usize,
    pub mean_abs_offset: f64,
    pub max_abs_offset: f64,
}

impl GridScore {
    pub fn true_cuts(&self) -> usize {
        self.matched_cuts + self.missed_cuts
    }

    /// Missed plus spurious cuts over the number of true cuts.
    pub fn error_rate(&self) -> f64 {
        match self.true_cuts() {
            0 => 0.0,
            n => (self.missed_cuts + self.spurious_cuts) as f64 / n as f64,
        }
    }

    /// Mean per-true-cut error in pixels, charging `tol` for every missed or
    /// spurious cut and the actual offset for every matched one.
    pub fn cut_error(&self, tol: f64) -> f64 {
        let n = self.true_cuts().max(1) as f64;
        (self.mean_abs_offset * self.matched_cuts as f64
            + tol * (self.missed_cuts + self.spurious_cuts) as f64)
            / n
    }

    /// Pools two scores as if their cuts had been scored together.
    pub fn merge(&self, other: &GridScore) -> GridScore {
        let matched = self.matched_cuts + other.matched_cuts;
        let total = self.mean_abs_offset * self.matched_cuts as f64
            + other.mean_abs_offset * other.matched_cuts as f64;
        GridScore {
            matched_cuts: matched,
            missed_cuts: self.missed_cuts + other.missed_cuts,
            spurious_cuts: self.spurious_cuts + other.spurious_cuts,
            mean_abs_offset: if matched == 0 { 0.0 } else { total / matched as f64 },
            max_abs_offset: self.max_abs_offset.max(other.max_abs_offset),
        }
    }

    /// Everything missed.
    pub fn all_missed(true_cuts: usize) -> GridScore {
        GridScore {
            missed_cuts: true_cuts,
            ..GridScore::default()
        }
    }
}

/// Greedy one-to-one matching of two position lists: candidate pairs within
/// `tol` are taken in order of increasing distance.
pub fn score_positions(found: &[usize], truth: &[usize], tol: f64) -> GridScore {
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    for (fi, &f) in found.iter().enumerate() {
        for (ti, &t) in truth.iter().enumerate() {
            let d = f.abs_diff(t);
            if d as f64 <= tol {
                pairs.push((fi, ti, d));
            }
        }
    }
    // ties broken on the unordered position pair, so swapping the roles of
    // found and truth gives the same matching
    pairs.sort_by_key(|&(fi, ti, d)| {
        let (a, b) = (found[fi], truth[ti]);
        (d, a.min(b), a.max(b))
    });
    let mut f_used = vec![false; found.len()];
    let mut t_used = vec![false; truth.len()];
    let (mut matched, mut sum, mut max) = (0, 0.0, 0.0f64);
    for (fi, ti, d) in pairs {
        if f_used[fi] || t_used[ti] {
            continue;
        }
        f_used[fi] = true;
        t_used[ti] = true;
        matched += 1;
        sum += d as f64;
        max = max.max(d as f64);
    }
    GridScore {
        matched_cuts: matched,
        missed_cuts: truth.len() - matched,
        spurious_cuts: found.len() - matched,
        mean_abs_offset: if matched == 0 { 0.0 } else { sum / matched as f64 },
        max_abs_offset: max,
    }
}

/// Scores the interior cuts of `found` against those of `truth`.
pub fn score_grid(found: &GridLines, truth: &GridLines, tol: f64) -> Result<GridScore> {
    if found.axis() != truth.axis() {
        return Err(Error::AxisMismatch {
            found: found.axis(),
            truth: truth.axis(),
        });
    }
    if found.extent() != truth.extent() {
        return Err(Error::DimensionMismatch(format!(
            "found extent {} vs true extent {}",
            found.extent(),
            truth.extent()
        )));
    }
    Ok(score_positions(found.interior(), truth.interior(), tol))
}

/// Scores of a two-level grid: subarray cuts and spot cuts, per axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ArrayScore {
    pub subarray_cols: GridScore,
    pub subarray_rows: GridScore,
    pub spot_cols: GridScore,
    pub spot_rows: GridScore,
}

impl ArrayScore {
    pub fn spots(&self) -> GridScore {
        self.spot_cols.merge(&self.spot_rows)
    }

    pub fn subarrays(&self) -> GridScore {
        self.subarray_cols.merge(&self.subarray_rows)
    }

    /// Every true cut counted as missed, for a method that produced no grid.
    pub fn all_missed(truth: &ArrayGrid) -> ArrayScore {
        let (sc, sr) = spot_cut_totals(truth);
        ArrayScore {
            subarray_cols: GridScore::all_missed(truth.subarrays.col_lines.interior().len()),
            subarray_rows: GridScore::all_missed(truth.subarrays.row_lines.interior().len()),
            spot_cols: GridScore::all_missed(sc),
            spot_rows: GridScore::all_missed(sr),
        }
    }
}

fn spot_cut_totals(g: &ArrayGrid) -> (usize, usize) {
    let cells = g.spots.iter().flatten();
    cells.fold((0, 0), |(c, r), s| (c + s.col_lines.interior().len(), r + s.row_lines.interior().len()))
}

/// Found cell boundaries crossing the line `at` (a row for column cuts, a
/// column for row cuts), in absolute coordinates, more than `margin` inside
/// `lo..hi`.
fn boundaries_along(found: &ArrayGrid, cols: bool, at: usize, lo: usize, hi: usize, margin: f64) -> Vec<usize> {
    let mut out = Vec::new();
    for ((r, c), rect) in found.subarrays.cells() {
        let (span, across, origin, lines) = if cols {
            ((rect.y0, rect.y1), (rect.x0, rect.x1), rect.x0, &found.spots[r][c].col_lines)
        } else {
            ((rect.x0, rect.x1), (rect.y0, rect.y1), rect.y0, &found.spots[r][c].row_lines)
        };
        if at < span.0 || at >= span.1 || across.1 <= lo || across.0 >= hi {
            continue;
        }
        out.extend(lines.cuts().iter().map(|&k| k + origin));
        out.extend([across.0, across.1]);
    }
    out.retain(|&k| (k as f64) > lo as f64 + margin && (k as f64) < hi as f64 - margin);
    out.sort_unstable();
    out.dedup();
    out
}

/// Scores a found two-level grid against the truth.
///
/// Subarray cuts are compared directly. Spot cuts are compared per true
/// subarray, in image coordinates: the found cell boundaries (spot cuts and
/// subarray borders alike) crossing the subarray's center line, inside the
/// subarray, against its true spot cuts.
pub fn score_array(found: &ArrayGrid, truth: &ArrayGrid, tol: f64) -> Result<ArrayScore> {
    if found.subarrays.width() != truth.subarrays.width() || found.subarrays.height() != truth.subarrays.height() {
        return Err(Error::DimensionMismatch(format!(
            "found grid is {}x{}, truth is {}x{}",
            found.subarrays.width(),
            found.subarrays.height(),
            truth.subarrays.width(),
            truth.subarrays.height()
        )));
    }
    let mut score = ArrayScore {
        subarray_cols: score_grid(&found.subarrays.col_lines, &truth.subarrays.col_lines, tol)?,
        subarray_rows: score_grid(&found.subarrays.row_lines, &truth.subarrays.row_lines, tol)?,
        ..ArrayScore::default()
    };
    for ((r, c), rect) in truth.subarrays.cells() {
        let spots = &truth.spots[r][c];
        let (cx, cy) = ((rect.x0 + rect.x1) / 2, (rect.y0 + rect.y1) / 2);
        let t_cols: Vec<usize> = spots.col_lines.interior().iter().map(|k| k + rect.x0).collect();
        let t_rows: Vec<usize> = spots.row_lines.interior().iter().map(|k| k + rect.y0).collect();
        let f_cols = boundaries_along(found, true, cy, rect.x0, rect.x1, tol);
        let f_rows = boundaries_along(found, false, cx, rect.y0, rect.y1, tol);
        score.spot_cols = score.spot_cols.merge(&score_positions(&f_cols, &t_cols, tol));
        score.spot_rows = score.spot_rows.merge(&score_positions(&f_rows, &t_rows, tol));
    }
    Ok(score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Axis;
    use proptest::prelude::*;

    fn lines(axis: Axis, cuts: &[usize]) -> GridLines {
        GridLines::new(axis, cuts.to_vec()).unwrap()
    }

    fn blob_image(w: usize, h: usize, centers: &[(f64, f64)]) -> IntensityImage<f64> {
        IntensityImage::from_fn(w, h, |x, y| {
            centers
                .iter()
                .map(|&(cx, cy)| 100.0 * (-((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)) / 4.0).exp())
                .sum::<f64>()
                + 5.0
        })
        .unwrap()
    }

    #[test]
    fn two_cells() {
        let img = IntensityImage::filled(10, 20, 1.0).unwrap();
        let g = CellGrid::new(lines(Axis::Columns, &[0, 10]), lines(Axis::Rows, &[0, 10, 20])).unwrap();
        let cells = extract_cells(&img, &g).unwrap();
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[1].bounds, Rect::new(0, 10, 10, 20));
        let wrong = CellGrid::single(11, 20).unwrap();
        assert!(matches!(extract_cells(&img, &wrong), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn array_cells_are_absolute() {
        let img = IntensityImage::filled(20, 10, 1.0).unwrap();
        let subs = CellGrid::new(lines(Axis::Columns, &[0, 8, 20]), lines(Axis::Rows, &[0, 10])).unwrap();
        let spots = vec![vec![
            CellGrid::new(lines(Axis::Columns, &[0, 4, 8]), lines(Axis::Rows, &[0, 10])).unwrap(),
            CellGrid::new(lines(Axis::Columns, &[0, 6, 12]), lines(Axis::Rows, &[0, 5, 10])).unwrap(),
        ]];
        let g = ArrayGrid { subarrays: subs, spots };
        let cells = extract_array_cells(&img, &g).unwrap();
        assert_eq!(cells.len(), 6);
        assert_eq!(cells[3].subarray_index, (0, 1));
        assert_eq!(cells[3].bounds, Rect::new(14, 0, 20, 5));
        let area: usize = cells.iter().map(|c| c.bounds.area()).sum();
        assert_eq!(area, 200);
    }

    #[test]
    fn spot_counts() {
        assert_eq!(count_spots(&IntensityImage::filled(8, 8, 3.0).unwrap()), 0);
        assert_eq!(count_spots(&blob_image(12, 12, &[(6.0, 6.0)])), 1);
        assert_eq!(count_spots(&blob_image(24, 12, &[(5.0, 6.0), (18.0, 6.0)])), 2);
        // a single bright pixel is below the minimum area
        let mut px = vec![0.0; 64];
        px[27] = 9.0;
        assert_eq!(count_spots(&IntensityImage::new(8, 8, px).unwrap()), 0);
        // diagonal neighbours join
        let mut px = vec![0.0; 36];
        for i in [0, 7, 14, 21] {
            px[i] = 1.0;
        }
        assert_eq!(count_spots(&IntensityImage::new(6, 6, px).unwrap()), 1);
    }

    #[test]
    fn score_examples() {
        let t = lines(Axis::Columns, &[0, 10, 20, 30, 40]);
        let s = score_grid(&t, &t, 2.0).unwrap();
        assert_eq!((s.matched_cuts, s.missed_cuts, s.spurious_cuts), (3, 0, 0));
        assert_eq!(s.mean_abs_offset, 0.0);

        let shifted = lines(Axis::Columns, &[0, 11, 21, 31, 40]);
        let s = score_grid(&shifted, &t, 2.0).unwrap();
        assert_eq!((s.matched_cuts, s.mean_abs_offset, s.max_abs_offset), (3, 1.0, 1.0));
        let s = score_grid(&shifted, &t, 0.0).unwrap();
        assert_eq!((s.matched_cuts, s.missed_cuts, s.spurious_cuts), (0, 3, 3));

        let missing = lines(Axis::Columns, &[0, 10, 30, 40]);
        let s = score_grid(&missing, &t, 2.0).unwrap();
        assert_eq!((s.missed_cuts, s.spurious_cuts), (1, 0));

        let rows = lines(Axis::Rows, &[0, 10, 20, 30, 40]);
        assert!(matches!(score_grid(&rows, &t, 2.0), Err(Error::AxisMismatch { .. })));
    }

    #[test]
    fn greedy_prefers_nearest() {
        // 11 is nearer to 12 than 10 is; 10 then has nothing left within tol
        let s = score_positions(&[10, 11], &[12], 3.0);
        assert_eq!((s.matched_cuts, s.spurious_cuts, s.mean_abs_offset), (1, 1, 1.0));
    }

    #[test]
    fn cut_error_and_merge() {
        let a = GridScore { matched_cuts: 2, missed_cuts: 1, spurious_cuts: 1, mean_abs_offset: 1.0, max_abs_offset: 1.5 };
        assert_eq!(a.cut_error(3.0), (2.0 + 6.0) / 3.0);
        let b = GridScore { matched_cuts: 2, mean_abs_offset: 2.0, max_abs_offset: 2.0, ..Default::default() };
        let m = a.merge(&b);
        assert_eq!((m.matched_cuts, m.missed_cuts, m.mean_abs_offset, m.max_abs_offset), (4, 1, 1.5, 2.0));
    }

    #[test]
    fn array_score_identity_and_merge_penalty() {
        let subs = CellGrid::new(lines(Axis::Columns, &[0, 20, 40]), lines(Axis::Rows, &[0, 20])).unwrap();
        let cell = CellGrid::new(lines(Axis::Columns, &[0, 10, 20]), lines(Axis::Rows, &[0, 10, 20])).unwrap();
        let truth = ArrayGrid { subarrays: subs, spots: vec![vec![cell.clone(), cell]] };
        let s = score_array(&truth, &truth, 2.0).unwrap();
        assert_eq!(s.spots().error_rate(), 0.0);
        assert_eq!(s.spots().matched_cuts, 4);

        // one merged subarray, spot cuts still right: the missing subarray cut
        // is the only error, and the spot cuts still match
        let merged = ArrayGrid {
            subarrays: CellGrid::single(40, 20).unwrap(),
            spots: vec![vec![CellGrid::new(lines(Axis::Columns, &[0, 10, 30, 40]), lines(Axis::Rows, &[0, 10, 20])).unwrap()]],
        };
        let s = score_array(&merged, &truth, 2.0).unwrap();
        assert_eq!(s.subarray_cols.missed_cuts, 1);
        assert_eq!(s.spots().missed_cuts, 0);
        assert_eq!(s.spots().spurious_cuts, 0);
        assert_eq!(ArrayScore::all_missed(&truth).spots().missed_cuts, 4);
    }

    proptest! {
        #[test]
        fn swapping_swaps_missed_and_spurious(
            a in prop::collection::btree_set(1usize..100, 0..15),
            b in prop::collection::btree_set(1usize..100, 0..15),
            tol in 0.0f64..6.0,
        ) {
            let a: Vec<usize> = a.into_iter().collect();
            let b: Vec<usize> = b.into_iter().collect();
            let ab = score_positions(&a, &b, tol);
            let ba = score_positions(&b, &a, tol);
            prop_assert_eq!(ab.matched_cuts, ba.matched_cuts);
            prop_assert_eq!(ab.missed_cuts, ba.spurious_cuts);
            prop_assert_eq!(ab.spurious_cuts, ba.missed_cuts);
            prop_assert_eq!(ab.matched_cuts + ab.missed_cuts, b.len());
        }
    }
}
