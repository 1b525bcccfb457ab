use std::io::{self, Write};
use std::ops::{AddAssign, Mul};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::geometry::ProductGrid;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OperatorMeta {
    pub config_hash: String,
    pub seed: Option<u64>,
    pub realization: Option<u64>,
}

/// Real symmetric operator in compressed-row form, tied to the product grid
/// that labels its rows.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    grid: Arc<ProductGrid>,
    meta: OperatorMeta,
}

impl SparseOperator {
    /// Column indices must be sorted within each row.
    pub fn from_csr(
        row_ptr: Vec<usize>,
        cols: Vec<usize>,
        vals: Vec<f64>,
        grid: Arc<ProductGrid>,
        meta: OperatorMeta,
    ) -> Self {
        debug_assert_eq!(row_ptr.len(), grid.dim() + 1);
        debug_assert_eq!(cols.len(), vals.len());
        Self { row_ptr, cols, vals, grid, meta }
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn grid(&self) -> &Arc<ProductGrid> {
        &self.grid
    }

    pub fn meta(&self) -> &OperatorMeta {
        &self.meta
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.row(i).find(|&(c, _)| c == i).map_or(0.0, |e| e.1)).collect()
    }

    /// Adds `shift` to every diagonal entry.
    pub fn shifted(&self, shift: f64) -> SparseOperator {
        let mut out = self.clone();
        for i in 0..out.dim() {
            for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                if out.cols[k] == i {
                    out.vals[k] += shift;
                }
            }
        }
        out
    }

    /// Adds `delta[i]` to diagonal entry `i`.
    pub fn with_added_diagonal(&self, delta: &[f64]) -> SparseOperator {
        let mut out = self.clone();
        for (i, dv) in delta.iter().enumerate() {
            for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                if out.cols[k] == i {
                    out.vals[k] += dv;
                }
            }
        }
        out
    }

    /// Half-bandwidth `max |i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.dim()).flat_map(|i| self.row(i).map(move |(c, _)| c.abs_diff(i))).max().unwrap_or(0)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim()).all(|i| {
            self.row(i).all(|(c, v)| self.row(c).any(|(cc, vv)| cc == i && vv == v))
        })
    }

    /// `y = H x` for real or complex vectors.
    pub fn apply<T>(&self, x: &[T], y: &mut [T])
    where
        T: Copy + Default + AddAssign + Mul<f64, Output = T>,
    {
        for (i, out) in y.iter_mut().enumerate() {
            let mut acc = T::default();
            for (c, v) in self.row(i) {
                acc += x[c] * v;
            }
            *out = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for (c, v) in self.row(i) {
                m[(i, c)] = v;
            }
        }
        m
    }

    /// Coordinate text dump, one `row col value` triple per line.
    pub fn write_coo<W: Write>(&self, mut out: W) -> io::Result<()> {
        for i in 0..self.dim() {
            for (c, v) in self.row(i) {
                writeln!(out, "{i} {c} {v:e}")?;
            }
        }
        Ok(())
    }
}
