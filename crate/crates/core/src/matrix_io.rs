//! Plain-text matrix files.
//!
//! ```text
//! matrix uG_T
//! rows X_curl 46 T0.R:0+3 T0.Rperp:3+1 F0.R:4+2 ...
//! cols X_grad 27 T0:0+1 F0:1+1 ...
//! 0e0 -1.2247448713915892e0 ...
//! ```
//! One line per row follows the header, entries separated by single spaces. Floats are written in
//! the shortest decimal form that parses back to the same `f64`, so a reloaded matrix is bitwise
//! identical to the dumped one.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{DdrError, Result};
use crate::layout::Layout;

/// Space name, dimension and named blocks `(name, offset, len)` of one matrix axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub space: String,
    pub dim: usize,
    pub blocks: Vec<(String, usize, usize)>,
}

impl Axis {
    /// Axis with a single block covering the whole space.
    pub fn plain(space: &str, dim: usize) -> Axis {
        Axis { space: space.to_string(), dim, blocks: vec![(space.to_string(), 0, dim)] }
    }

    fn header(&self) -> String {
        let mut s = format!("{} {}", self.space, self.dim);
        for (name, off, len) in &self.blocks {
            s.push_str(&format!(" {name}:{off}+{len}"));
        }
        s
    }

    fn parse(line: &str) -> Option<Axis> {
        let mut it = line.split_whitespace();
        let space = it.next()?.to_string();
        let dim = it.next()?.parse().ok()?;
        let blocks = it
            .map(|tok| {
                let (name, range) = tok.rsplit_once(':')?;
                let (off, len) = range.split_once('+')?;
                Some((name.to_string(), off.parse().ok()?, len.parse().ok()?))
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Axis { space, dim, blocks })
    }
}

impl From<&Layout> for Axis {
    fn from(l: &Layout) -> Axis {
        Axis { space: l.space.clone(), dim: l.dim(), blocks: l.blocks.iter().map(|b| (b.name.clone(), b.offset, b.len)).collect() }
    }
}

#[derive(Clone, Debug)]
pub struct MatrixFile {
    pub name: String,
    pub rows: Axis,
    pub cols: Axis,
    pub data: DMatrix<f64>,
}

impl MatrixFile {
    pub fn new(name: &str, rows: Axis, cols: Axis, data: DMatrix<f64>) -> MatrixFile {
        assert_eq!((rows.dim, cols.dim), data.shape(), "{name}: header does not match the matrix shape");
        MatrixFile { name: name.to_string(), rows, cols, data }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("matrix {}\nrows {}\ncols {}\n", self.name, self.rows.header(), self.cols.header());
        for i in 0..self.data.nrows() {
            let row: Vec<String> = self.data.row(i).iter().map(|x| format!("{x:e}")).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<MatrixFile> {
        let bad = |what: &str| DdrError::MatrixFile(what.to_string());
        let mut lines = text.lines();
        let name = lines.next().and_then(|l| l.strip_prefix("matrix ")).ok_or_else(|| bad("missing `matrix` line"))?.trim().to_string();
        let rows = lines.next().and_then(|l| l.strip_prefix("rows ")).and_then(Axis::parse).ok_or_else(|| bad("bad `rows` line"))?;
        let cols = lines.next().and_then(|l| l.strip_prefix("cols ")).and_then(Axis::parse).ok_or_else(|| bad("bad `cols` line"))?;
        let mut data = DMatrix::zeros(rows.dim, cols.dim);
        for i in 0..rows.dim {
            let line = lines.next().ok_or_else(|| bad(&format!("missing row {i}")))?;
            let vals: Vec<f64> = line.split_whitespace().map(str::parse).collect::<std::result::Result<_, _>>().map_err(|_| bad(&format!("bad number in row {i}")))?;
            if vals.len() != cols.dim {
                return Err(bad(&format!("row {i} has {} entries, expected {}", vals.len(), cols.dim)));
            }
            for (j, v) in vals.into_iter().enumerate() {
                data[(i, j)] = v;
            }
        }
        Ok(MatrixFile { name, rows, cols, data })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.to_text().as_bytes())?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<MatrixFile> {
        MatrixFile::from_text(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_is_bitwise() {
        let data = DMatrix::from_fn(3, 2, |i, j| (i as f64 + 0.1) / (j as f64 + 3.0) * 1e-7_f64.powi(i as i32));
        let rows = Axis { space: "X".into(), dim: 3, blocks: vec![("a".into(), 0, 0), ("b".into(), 0, 3)] };
        let m = MatrixFile::new("M", rows.clone(), Axis::plain("P^0", 2), data.clone());
        let back = MatrixFile::from_text(&m.to_text()).unwrap();
        assert_eq!(back.rows, rows);
        assert_eq!(back.name, "M");
        for (x, y) in back.data.iter().zip(data.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn short_rows_are_rejected() {
        let text = "matrix M\nrows X 1 X:0+1\ncols Y 2 Y:0+2\n1e0\n";
        assert!(MatrixFile::from_text(text).is_err());
    }
}
