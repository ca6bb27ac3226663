//! Compressed sparse row storage for the assembled operators.

use std::io::{self, Write};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an `n x n` matrix from `(row, col, value)` triplets, summing
    /// duplicates. Column indices within a row come out sorted.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut entries = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            entries[fill[r]] = (c, v);
            fill[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in 0..n {
            let row = &mut entries[counts[r]..counts[r + 1]];
            row.sort_by_key(|e| e.0);
            let mut last = usize::MAX;
            for &(c, v) in row.iter() {
                if c == last {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = c;
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        match c.binary_search(&j) {
            Ok(k) => v[k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| {
                let (c, v) = self.row(i);
                x[i] * c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum::<f64>()
            })
            .sum()
    }

    /// Principal submatrix on `keep` (old index -> new index, `None` drops).
    pub fn restrict(&self, keep: &[Option<usize>], new_n: usize) -> CsrMatrix {
        let mut row_ptr = vec![0usize; new_n + 1];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut order: Vec<(usize, usize)> = keep
            .iter()
            .enumerate()
            .filter_map(|(old, new)| new.map(|n| (n, old)))
            .collect();
        order.sort_unstable();
        for (new, old) in order {
            let (c, v) = self.row(old);
            let mut row: Vec<(usize, f64)> = c
                .iter()
                .zip(v)
                .filter_map(|(&j, &a)| keep[j].map(|nj| (nj, a)))
                .collect();
            row.sort_by_key(|e| e.0);
            for (j, a) in row {
                cols.push(j);
                vals.push(a);
            }
            row_ptr[new + 1] = cols.len();
        }
        CsrMatrix {
            n: new_n,
            row_ptr,
            cols,
            vals,
        }
    }

    /// `A + s B`, both square of equal size.
    pub fn add_scaled(&self, s: f64, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n, other.n);
        let mut trip = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            let (c, v) = self.row(i);
            trip.extend(c.iter().zip(v).map(|(&j, &a)| (i, j, a)));
            let (c, v) = other.row(i);
            trip.extend(c.iter().zip(v).map(|(&j, &a)| (i, j, s * a)));
        }
        CsrMatrix::from_triplets(self.n, &trip)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                d[(i, j)] = a;
            }
        }
        d
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                worst = worst.max((a - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Coordinate text dump: one `row col value` line per stored entry.
    pub fn write_coo<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "% {} {} {}", self.n, self.n, self.nnz())?;
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                writeln!(out, "{i} {j} {a:.17e}")?;
            }
        }
        Ok(())
    }
}
