use serde::{Deserialize, Serialize};

use crate::rng::Stream;

/// An `n x d` matrix of evaluations `f_j(X_i)`, stored row-major.
///
/// Row `i` is one draw evaluated on all `d` coordinate projections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMatrix {
    n: usize,
    d: usize,
    values: Vec<f64>,
    /// Stream the rows were generated from.
    pub seed: Stream,
}

impl SampleMatrix {
    pub fn from_rows(n: usize, d: usize, values: Vec<f64>, seed: Stream) -> Self {
        assert_eq!(values.len(), n * d, "expected {n} x {d} values");
        SampleMatrix { n, d, values, seed }
    }

    pub fn from_row_vecs(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let values = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::from_rows(n, d, values, Stream(0))
    }

    pub fn from_columns(cols: &[Vec<f64>]) -> Self {
        let d = cols.len();
        let n = cols.first().map_or(0, Vec::len);
        let mut values = vec![0.0; n * d];
        for (j, c) in cols.iter().enumerate() {
            for (i, &x) in c.iter().enumerate() {
                values[i * d + j] = x;
            }
        }
        Self::from_rows(n, d, values, Stream(0))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.d + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.values[i * self.d + j] = x;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Copy column `j` into `buf`, resizing it to `n`.
    pub fn column_into(&self, j: usize, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend((0..self.n).map(|i| self.values[i * self.d + j]));
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.n);
        self.column_into(j, &mut c);
        c
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.d).map(|j| self.column(j)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }
}
