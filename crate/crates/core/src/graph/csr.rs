//! Compressed sparse row storage for the symmetric weighted adjacency and
//! its self-loop-normalized form.

/// Square sparse matrix in CSR layout. Rows are sorted by column index and
/// hold no duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a structurally symmetric matrix from undirected edges: each
    /// `(i, j, w)` contributes entries `(i, j)` and `(j, i)` with the same
    /// weight. Self-edges are not allowed here; self-loops enter only
    /// through [`CsrMatrix::normalize_adjacency`].
    pub fn from_symmetric_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            assert!(i != j, "self-edge ({i}, {i}) is not allowed");
            assert!(i < n && j < n, "edge ({i}, {j}) out of bounds for n = {n}");
            rows[i].push((j, w));
            rows[j].push((i, w));
        }
        Self::from_rows(rows)
    }

    fn from_rows(mut rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_offsets = Vec::with_capacity(n + 1);
        row_offsets.push(0);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut col_indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for row in &mut rows {
            row.sort_unstable_by_key(|&(j, _)| j);
            for &(j, w) in row.iter() {
                col_indices.push(j);
                values.push(w);
            }
            row_offsets.push(col_indices.len());
        }
        Self {
            n,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entries `(column, weight)` of row `i`, sorted by column.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[range.clone()]
            .iter()
            .zip(&self.values[range])
            .map(|(&j, &w)| (j, w))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row_offsets[i + 1] - self.row_offsets[i]
    }

    /// Symmetric normalization with self-loops: with `Ã = A + I` and
    /// `D̃_ii = Σ_j Ã_ij`, returns `D̃^{-1/2} Ã D̃^{-1/2}`.
    ///
    /// An isolated node gets `D̃_ii = 1` from its self-loop, so the result is
    /// always well defined. Each entry is scaled by one `sqrt(d_i * d_j)`
    /// shared by both mirror entries, keeping the output bit-exactly
    /// symmetric.
    pub fn normalize_adjacency(&self) -> CsrMatrix {
        let deg: Vec<f64> = (0..self.n)
            .map(|i| 1.0 + self.row(i).map(|(_, w)| w).sum::<f64>())
            .collect();
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(self.degree(i) + 1);
            for (j, w) in self.row(i) {
                row.push((j, w / (deg[i] * deg[j]).sqrt()));
            }
            row.push((i, 1.0 / deg[i]));
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    /// Dense product `out = M · X` where `X` is row-major `n × cols`.
    pub fn mul_dense(&self, x: &[f64], cols: usize, out: &mut [f64]) {
        assert_eq!(x.len(), self.n * cols);
        assert_eq!(out.len(), self.n * cols);
        for i in 0..self.n {
            let row_out = &mut out[i * cols..(i + 1) * cols];
            row_out.fill(0.0);
            for idx in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.col_indices[idx];
                let w = self.values[idx];
                let src = &x[j * cols..(j + 1) * cols];
                for (o, &s) in row_out.iter_mut().zip(src) {
                    *o += w * s;
                }
            }
        }
    }

    /// Row-major dense copy, mainly for oracles and small-scale checks.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for (j, w) in self.row(i) {
                dense[i * self.n + j] = w;
            }
        }
        dense
    }
}
