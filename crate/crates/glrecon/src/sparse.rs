//! Compressed sparse row matrices for the system matrix and the pixel
//! graph.
//!
//! Column indices are `u32` (image sizes are capped well below that) to
//! halve index memory traffic during the mat-vecs that dominate solver
//! runtime. `matvec` accumulates row by row in index order, so results
//! are deterministic.

/// CSR matrix. `row_ptr` has `nrows + 1` entries; row `i` occupies
/// `cols[row_ptr[i]..row_ptr[i+1]]` with matching `vals`, column
/// indices strictly increasing within a row.
#[derive(Debug, Clone)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Assemble from per-row (column, value) lists; each list must be
    /// sorted by column with no duplicates.
    pub fn from_rows(nrows: usize, ncols: usize, rows: Vec<Vec<(u32, f64)>>) -> Csr {
        assert_eq!(rows.len(), nrows);
        let nnz: usize = rows.iter().map(|r| r.len()).sum();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for (c, v) in row {
                debug_assert!((c as usize) < ncols);
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Csr { nrows, ncols, row_ptr, cols, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec input length");
        let mut y = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            y[i] = acc;
        }
        y
    }

    /// Explicit transpose. Built once next to the forward matrix so the
    /// adjoint is exactly `A^T x` over the same stored entries.
    pub fn transpose(&self) -> Csr {
        let mut counts = vec![0usize; self.ncols];
        for &c in &self.cols {
            counts[c as usize] += 1;
        }
        let mut row_ptr = Vec::with_capacity(self.ncols + 1);
        row_ptr.push(0usize);
        for c in 0..self.ncols {
            row_ptr.push(row_ptr[c] + counts[c]);
        }
        let mut next = row_ptr[..self.ncols].to_vec();
        let mut cols = vec![0u32; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.cols[k] as usize;
                let slot = next[c];
                next[c] += 1;
                cols[slot] = i as u32;
                vals[slot] = self.vals[k];
            }
        }
        Csr { nrows: self.ncols, ncols: self.nrows, row_ptr, cols, vals }
    }

    /// Entry lookup by binary search within the row. Test helper.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[range.clone()].binary_search(&(col as u32)) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }
}
