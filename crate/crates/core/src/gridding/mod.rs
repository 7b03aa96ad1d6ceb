//! From profiles to cut lines, and from cut lines to cells.

mod cuts;
mod method;
mod pipeline;
mod template;

pub use cuts::{derivative_minima_cuts, estimate_period, gap_middle_cuts, select_coarse_cuts};
pub use method::{Method, MethodKind, DEFAULT_MIN_SCORE, DEFAULT_THRESHOLD};
pub use pipeline::{grid_array, grid_axis, grid_image, grid_subarray, ArrayGrid, Scope};
pub use template::{
    render_array_template, render_template, template_match, template_match_array, zncc_map,
    ArrayTemplate, Template,
    TemplateMatch,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Axis, Rect};

/// Ordered cut positions along one axis, borders included.
///
/// `cuts[0] == 0`, `cuts[last] == extent`, strictly increasing. Interval `k`
/// covers pixels `cuts[k]..cuts[k + 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridLines {
    axis: Axis,
    cuts: Vec<usize>,
}

impl GridLines {
    pub fn new(axis: Axis, cuts: Vec<usize>) -> Result<Self> {
        if cuts.len() < 2 {
            return Err(Error::InvalidGridLines(format!(
                "need both borders, got {cuts:?}"
            )));
        }
        if cuts[0] != 0 {
            return Err(Error::InvalidGridLines(format!(
                "first cut must be 0, got {}",
                cuts[0]
            )));
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGridLines(format!(
                "cuts must be strictly increasing: {cuts:?}"
            )));
        }
        Ok(GridLines { axis, cuts })
    }

    /// Borders plus the given interior positions. Positions outside
    /// `1..extent` are dropped and duplicates collapse.
    pub fn from_interior(axis: Axis, extent: usize, interior: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut cuts: Vec<usize> = interior.into_iter().filter(|&c| c > 0 && c < extent).collect();
        cuts.sort_unstable();
        cuts.dedup();
        cuts.insert(0, 0);
        cuts.push(extent);
        Self::new(axis, cuts)
    }

    /// Just the two borders.
    pub fn borders(axis: Axis, extent: usize) -> Result<Self> {
        Self::new(axis, vec![0, extent])
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn cuts(&self) -> &[usize] {
        &self.cuts
    }

    pub fn extent(&self) -> usize {
        *self.cuts.last().expect("at least two cuts")
    }

    pub fn interior(&self) -> &[usize] {
        &self.cuts[1..self.cuts.len() - 1]
    }

    pub fn intervals(&self) -> usize {
        self.cuts.len() - 1
    }

    /// `(start, end)` of every interval.
    pub fn spans(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cuts.windows(2).map(|w| (w[0], w[1]))
    }

    /// Same interior cuts moved by `offset`, re-bordered to `extent`.
    pub fn shifted(&self, offset: usize, extent: usize) -> Result<GridLines> {
        GridLines::from_interior(
            self.axis,
            extent,
            self.interior().iter().map(|&c| c + offset),
        )
    }
}

/// Cartesian product of a column cut set and a row cut set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellGrid {
    pub col_lines: GridLines,
    pub row_lines: GridLines,
}

impl CellGrid {
    pub fn new(col_lines: GridLines, row_lines: GridLines) -> Result<Self> {
        if col_lines.axis() != Axis::Columns || row_lines.axis() != Axis::Rows {
            return Err(Error::InvalidGridLines(
                "CellGrid needs column lines then row lines".into(),
            ));
        }
        Ok(CellGrid {
            col_lines,
            row_lines,
        })
    }

    pub fn single(width: usize, height: usize) -> Result<Self> {
        CellGrid::new(
            GridLines::borders(Axis::Columns, width)?,
            GridLines::borders(Axis::Rows, height)?,
        )
    }

    pub fn n_cols(&self) -> usize {
        self.col_lines.intervals()
    }

    pub fn n_rows(&self) -> usize {
        self.row_lines.intervals()
    }

    pub fn cell_count(&self) -> usize {
        self.n_cols() * self.n_rows()
    }

    pub fn width(&self) -> usize {
        self.col_lines.extent()
    }

    pub fn height(&self) -> usize {
        self.row_lines.extent()
    }

    pub fn cell(&self, row: usize, col: usize) -> Rect {
        let c = self.col_lines.cuts();
        let r = self.row_lines.cuts();
        Rect::new(c[col], r[row], c[col + 1], r[row + 1])
    }

    /// Cells in row-major order as `((row, col), rect)`.
    pub fn cells(&self) -> impl Iterator<Item = ((usize, usize), Rect)> + '_ {
        let (nr, nc) = (self.n_rows(), self.n_cols());
        (0..nr).flat_map(move |r| (0..nc).map(move |c| ((r, c), self.cell(r, c))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_lines_validation() {
        assert!(GridLines::new(Axis::Columns, vec![0, 5, 10]).is_ok());
        assert!(GridLines::new(Axis::Columns, vec![1, 5, 10]).is_err());
        assert!(GridLines::new(Axis::Columns, vec![0, 5, 5, 10]).is_err());
        assert!(GridLines::new(Axis::Columns, vec![0]).is_err());
        let g = GridLines::from_interior(Axis::Rows, 10, [7, 0, 3, 10, 3]).unwrap();
        assert_eq!(g.cuts(), &[0, 3, 7, 10]);
        assert_eq!(g.interior(), &[3, 7]);
    }

    #[test]
    fn two_cells() {
        let g = CellGrid::new(
            GridLines::new(Axis::Columns, vec![0, 10]).unwrap(),
            GridLines::new(Axis::Rows, vec![0, 10, 20]).unwrap(),
        )
        .unwrap();
        assert_eq!(g.cell_count(), 2);
        let cells: Vec<_> = g.cells().collect();
        assert_eq!(cells[1], ((1, 0), Rect::new(0, 10, 10, 20)));
    }

    #[test]
    fn swapped_axes_rejected() {
        let c = GridLines::new(Axis::Columns, vec![0, 4]).unwrap();
        let r = GridLines::new(Axis::Rows, vec![0, 4]).unwrap();
        assert!(CellGrid::new(r, c).is_err());
    }

    proptest! {
        #[test]
        fn cells_tile_the_image(
            xs in prop::collection::btree_set(1usize..60, 0..8),
            ys in prop::collection::btree_set(1usize..40, 0..8),
        ) {
            let g = CellGrid::new(
                GridLines::from_interior(Axis::Columns, 60, xs).unwrap(),
                GridLines::from_interior(Axis::Rows, 40, ys).unwrap(),
            ).unwrap();
            let mut cover = vec![0u8; 60 * 40];
            let mut area = 0;
            for (_, r) in g.cells() {
                area += r.area();
                for y in r.y0..r.y1 {
                    for x in r.x0..r.x1 {
                        cover[y * 60 + x] += 1;
                    }
                }
            }
            prop_assert_eq!(area, 60 * 40);
            prop_assert!(cover.iter().all(|&c| c == 1));
            prop_assert_eq!(g.cells().count(), g.cell_count());
        }
    }
}
