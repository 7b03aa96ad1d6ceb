//! Versioned JSON form of a two-level grid, and the cells CSV.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::SpotCell;
use crate::gridding::{ArrayGrid, CellGrid, GridLines, Method};
use crate::image::Axis;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageInfo {
    pub path: String,
    pub width: usize,
    pub height: usize,
}

/// Marks a document produced from ground truth rather than by a method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthMarker {
    pub name: String,
}

/// What produced the grid: a gridding method, or `{"name": "truth"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MethodDescriptor {
    Method(Method),
    Truth(TruthMarker),
}

impl MethodDescriptor {
    pub fn truth() -> Self {
        MethodDescriptor::Truth(TruthMarker { name: "truth".into() })
    }

    pub fn name(&self) -> String {
        match self {
            MethodDescriptor::Method(m) => m.kind().name().to_string(),
            MethodDescriptor::Truth(t) => t.name.clone(),
        }
    }
}

/// Spot cuts of one subarray, in that subarray's coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpotCuts {
    pub cols: Vec<usize>,
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDocument {
    pub schema_version: u32,
    pub image: ImageInfo,
    pub method: MethodDescriptor,
    pub subarray_cols: Vec<usize>,
    pub subarray_rows: Vec<usize>,
    pub spots: Vec<Vec<SpotCuts>>,
    /// Milliseconds per stage. Not part of the grid; excluded from equality
    /// checks between runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<BTreeMap<String, f64>>,
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

impl GridDocument {
    pub fn new(path: impl Into<String>, grid: &ArrayGrid, method: MethodDescriptor) -> Self {
        GridDocument {
            schema_version: SCHEMA_VERSION,
            image: ImageInfo {
                path: path.into(),
                width: grid.subarrays.width(),
                height: grid.subarrays.height(),
            },
            method,
            subarray_cols: grid.subarrays.col_lines.cuts().to_vec(),
            subarray_rows: grid.subarrays.row_lines.cuts().to_vec(),
            spots: grid
                .spots
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|g| SpotCuts {
                            cols: g.col_lines.cuts().to_vec(),
                            rows: g.row_lines.cuts().to_vec(),
                        })
                        .collect()
                })
                .collect(),
            timing: None,
        }
    }

    /// Rebuilds the grid, checking every structural invariant.
    pub fn to_grid(&self) -> Result<ArrayGrid> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(schema(format!(
                "schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if let MethodDescriptor::Truth(t) = &self.method {
            if t.name != "truth" {
                return Err(schema(format!("unknown method '{}'", t.name)));
            }
        }
        let lines = |axis: Axis, cuts: &[usize], extent: usize, what: &str| -> Result<GridLines> {
            let g = GridLines::new(axis, cuts.to_vec()).map_err(|e| schema(format!("{what}: {e}")))?;
            if g.extent() != extent {
                return Err(schema(format!("{what}: ends at {} but extent is {extent}", g.extent())));
            }
            Ok(g)
        };
        let subarrays = CellGrid::new(
            lines(Axis::Columns, &self.subarray_cols, self.image.width, "subarray_cols")?,
            lines(Axis::Rows, &self.subarray_rows, self.image.height, "subarray_rows")?,
        )?;
        if self.spots.len() != subarrays.n_rows() || self.spots.iter().any(|r| r.len() != subarrays.n_cols()) {
            return Err(schema(format!(
                "spots must be {} x {} (subarray rows x cols)",
                subarrays.n_rows(),
                subarrays.n_cols()
            )));
        }
        let mut spots = Vec::with_capacity(self.spots.len());
        for (r, row) in self.spots.iter().enumerate() {
            let mut out = Vec::with_capacity(row.len());
            for (c, s) in row.iter().enumerate() {
                let rect = subarrays.cell(r, c);
                out.push(CellGrid::new(
                    lines(Axis::Columns, &s.cols, rect.width(), &format!("spots[{r}][{c}].cols"))?,
                    lines(Axis::Rows, &s.rows, rect.height(), &format!("spots[{r}][{c}].rows"))?,
                )?);
            }
            spots.push(out);
        }
        Ok(ArrayGrid { subarrays, spots })
    }

    pub fn validate(&self) -> Result<()> {
        self.to_grid().map(|_| ())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GridDocument = serde_json::from_str(text).map_err(|e| schema(e.to_string()))?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("grid documents always serialize");
        s.push('\n');
        s
    }

    /// Same document with timing removed, for run-to-run comparison.
    pub fn without_timing(&self) -> Self {
        GridDocument {
            timing: None,
            ..self.clone()
        }
    }
}

/// Writes `subarray_row,subarray_col,cell_row,cell_col,x0,y0,x1,y1,spot_count`.
pub fn write_cells_csv(mut out: impl Write, cells: &[SpotCell], counts: &[usize]) -> std::io::Result<()> {
    writeln!(out, "subarray_row,subarray_col,cell_row,cell_col,x0,y0,x1,y1,spot_count")?;
    for (c, n) in cells.iter().zip(counts) {
        let b = c.bounds;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            c.subarray_index.0, c.subarray_index.1, c.cell_index.0, c.cell_index.1, b.x0, b.y0, b.x1, b.y1, n
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Rect;

    fn grid() -> ArrayGrid {
        let l = |a, v: &[usize]| GridLines::new(a, v.to_vec()).unwrap();
        ArrayGrid {
            subarrays: CellGrid::new(l(Axis::Columns, &[0, 20, 50]), l(Axis::Rows, &[0, 10])).unwrap(),
            spots: vec![vec![
                CellGrid::new(l(Axis::Columns, &[0, 10, 20]), l(Axis::Rows, &[0, 10])).unwrap(),
                CellGrid::new(l(Axis::Columns, &[0, 15, 30]), l(Axis::Rows, &[0, 5, 10])).unwrap(),
            ]],
        }
    }

    #[test]
    fn round_trip() {
        let mut doc = GridDocument::new("a.png", &grid(), MethodDescriptor::Method(Method::sum_derivative()));
        doc.timing = Some(BTreeMap::from([("total".to_string(), 1.5)]));
        let json = doc.to_json();
        let back = GridDocument::from_json(&json).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_json(), json);
        assert_eq!(back.to_grid().unwrap(), grid());
    }

    #[test]
    fn field_names() {
        let doc = GridDocument::new("a.png", &grid(), MethodDescriptor::truth());
        let v: serde_json::Value = serde_json::from_str(&doc.to_json()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|s| s.as_str()).collect();
        assert_eq!(keys, ["image", "method", "schema_version", "spots", "subarray_cols", "subarray_rows"]);
        assert_eq!(v["method"]["name"], "truth");
        assert_eq!(v["spots"][0][1]["rows"], serde_json::json!([0, 5, 10]));
    }

    #[test]
    fn invalid_documents() {
        let good = GridDocument::new("a.png", &grid(), MethodDescriptor::truth());
        let mut d = good.clone();
        d.schema_version = 2;
        assert!(matches!(d.validate(), Err(Error::Schema(_))));
        let mut d = good.clone();
        d.subarray_cols = vec![0, 30, 20, 50];
        assert!(d.validate().is_err());
        let mut d = good.clone();
        d.spots[0][1].cols = vec![0, 15, 31];
        assert!(d.validate().is_err());
        let mut d = good.clone();
        d.spots[0].pop();
        assert!(d.validate().is_err());
        let mut d = good;
        d.method = MethodDescriptor::Truth(TruthMarker { name: "magic".into() });
        assert!(d.validate().is_err());
        assert!(GridDocument::from_json("{}").is_err());
        assert!(GridDocument::from_json(r#"{"schema_version":1}"#).is_err());
    }

    #[test]
    fn cells_csv() {
        let cells = [SpotCell { subarray_index: (0, 1), cell_index: (1, 0), bounds: Rect::new(20, 5, 35, 10) }];
        let mut buf = Vec::new();
        write_cells_csv(&mut buf, &cells, &[1]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1), Some("0,1,1,0,20,5,35,10,1"));
    }
}
