//! Envelope (skyline) Cholesky factorization under a reverse Cuthill-McKee
//! ordering, plus a Jacobi-preconditioned CG fallback for systems whose
//! envelope would not fit the memory cap.

use std::collections::VecDeque;

use crate::sparse::CsrMatrix;

/// Reverse Cuthill-McKee permutation of the symmetric pattern of `a`.
/// Entry `p[new] = old`.
pub fn rcm_ordering(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(a, seed, &degree);
        let mut queue = VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a.row(v).0.iter().copied().filter(|&u| !visited[u]).collect();
            nbrs.sort_by_key(|&u| (degree[u], u));
            for u in nbrs {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// Breadth-first levels from `root`: returns (eccentricity, last level).
fn bfs_levels(a: &CsrMatrix, root: usize) -> (usize, Vec<usize>) {
    let mut seen = vec![false; a.dim()];
    seen[root] = true;
    let mut frontier = vec![root];
    let mut depth = 0;
    loop {
        let mut next = Vec::new();
        for &v in &frontier {
            for &u in a.row(v).0 {
                if !seen[u] {
                    seen[u] = true;
                    next.push(u);
                }
            }
        }
        if next.is_empty() {
            return (depth, frontier);
        }
        depth += 1;
        frontier = next;
    }
}

fn pseudo_peripheral(a: &CsrMatrix, seed: usize, degree: &[usize]) -> usize {
    let mut root = seed;
    let (mut ecc, mut last) = bfs_levels(a, root);
    loop {
        let cand = *last.iter().min_by_key(|&&u| (degree[u], u)).unwrap();
        let (e, l) = bfs_levels(a, cand);
        if e <= ecc {
            return root;
        }
        root = cand;
        ecc = e;
        last = l;
    }
}

/// Number of stored entries the envelope factor of `a` under `perm` needs.
pub fn envelope_size(a: &CsrMatrix, perm: &[usize]) -> usize {
    first_columns(a, perm)
        .iter()
        .enumerate()
        .map(|(i, &f)| i - f + 1)
        .sum()
}

fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    inv
}

fn first_columns(a: &CsrMatrix, perm: &[usize]) -> Vec<usize> {
    let inv = inverse(perm);
    perm.iter()
        .enumerate()
        .map(|(i, &old)| {
            a.row(old)
                .0
                .iter()
                .map(|&c| inv[c])
                .filter(|&c| c <= i)
                .min()
                .unwrap_or(i)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factor `P A P^T = L L^T`. Fails with the offending (permuted) pivot
    /// index when `a` is not positive definite.
    pub fn factor(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self, usize> {
        let n = a.dim();
        let inv = inverse(&perm);
        let first = first_columns(a, &perm);
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + i - first[i] + 1);
        }
        let mut data = vec![0.0; offset[n]];
        for i in 0..n {
            let (cols, vals) = a.row(perm[i]);
            for (&c, &v) in cols.iter().zip(vals) {
                let j = inv[c];
                if j <= i {
                    data[offset[i] + j - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let (head, tail) = data.split_at_mut(offset[i]);
            let row_i = &mut tail[..i - fi + 1];
            for j in fi..i {
                let fj = first[j];
                let row_j = &head[offset[j]..offset[j + 1]];
                let s = fi.max(fj);
                let dot: f64 = row_i[s - fi..j - fi]
                    .iter()
                    .zip(&row_j[s - fj..j - fj])
                    .map(|(x, y)| x * y)
                    .sum();
                let ljj = row_j[j - fj];
                row_i[j - fi] = (row_i[j - fi] - dot) / ljj;
            }
            let sq: f64 = row_i[..i - fi].iter().map(|x| x * x).sum();
            let d = row_i[i - fi] - sq;
            if !(d > 0.0) {
                return Err(i);
            }
            row_i[i - fi] = d.sqrt();
        }
        Ok(EnvelopeCholesky {
            perm,
            first,
            offset,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        let n = self.dim();
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            let dot: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] = (y[i] - dot) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            let xi = y[i] / row[i - fi];
            y[i] = xi;
            for (yk, l) in y[fi..i].iter_mut().zip(&row[..i - fi]) {
                *yk -= l * xi;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
    }
}

/// Jacobi-preconditioned conjugate gradients for an SPD matrix.
#[derive(Debug, Clone)]
pub struct JacobiCg {
    a: CsrMatrix,
    inv_diag: Vec<f64>,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl JacobiCg {
    pub fn new(a: &CsrMatrix, rel_tol: f64) -> Self {
        let inv_diag = a.diagonal().iter().map(|d| 1.0 / d).collect();
        JacobiCg {
            a: a.clone(),
            inv_diag,
            rel_tol,
            max_iter: 20 * a.dim().max(50),
        }
    }

    /// Returns the number of iterations, or `Err(residual)` when the cap is hit.
    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) -> Result<usize, f64> {
        let n = b.len();
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v = 0.0);
        if bnorm == 0.0 {
            return Ok(0);
        }
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&self.inv_diag).map(|(a, d)| a * d).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut ap = vec![0.0; n];
        for it in 0..self.max_iter {
            self.a.mul_vec_into(&p, &mut ap);
            let alpha = rz / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if rnorm <= self.rel_tol * bnorm {
                return Ok(it + 1);
            }
            for i in 0..n {
                z[i] = r[i] * self.inv_diag[i];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        Err(rnorm / bnorm)
    }
}
