//! Smallest eigenpairs of the symmetric pencil `K u = lambda M u` by
//! shift-invert subspace iteration with Rayleigh-Ritz projection.
//!
//! `K` is SPD for every sector (the physical boundary is always Dirichlet),
//! so the shift is zero and each iteration applies `K^{-1} M` to the block.
//! Linear solves go through an envelope Cholesky factor; when the factor
//! would exceed [`SolverOptions::factor_cap`] entries the solves fall back to
//! Jacobi-preconditioned conjugate gradients.

use log::debug;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cholesky::{envelope_size, rcm_ordering, EnvelopeCholesky, JacobiCg};
use crate::fem::{Sector, SectorSystem};
use crate::sparse::CsrMatrix;

pub const DEFAULT_SEED: u64 = 0x5EED;
/// Relative gap below which neighbouring eigenvalues form a degenerate cluster.
pub const CLUSTER_REL_GAP: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("no convergence after {iterations} iterations; best residuals {residuals:?}")]
    NoConvergence {
        iterations: usize,
        residuals: Vec<f64>,
    },
    #[error("stiffness matrix is not positive definite (pivot {0})")]
    NotPositiveDefinite(usize),
    #[error("column {column} is linearly dependent on the previous ones")]
    RankDeficient { column: usize },
    #[error("inner conjugate-gradient solve stalled at relative residual {0:e}")]
    InnerSolve(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative residual target `||K u - lambda M u|| <= tol ||M u||`.
    pub tol: f64,
    pub max_iter: usize,
    /// Extra block vectors beyond the `k` requested.
    pub guard: usize,
    pub seed: u64,
    /// Largest envelope (stored entries) allowed for the direct factor.
    pub factor_cap: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: 2000,
            guard: 5,
            seed: DEFAULT_SEED,
            factor_cap: 400_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: Vec<f64>,
    /// M-orthonormal eigenvectors on the sector's free dofs.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub sector: Sector,
    pub iterations: usize,
    /// `degenerate[i]` is set when `values[i]` sits in a cluster with a neighbour.
    pub degenerate: Vec<bool>,
}

enum Inner {
    Direct(EnvelopeCholesky),
    Iterative(JacobiCg),
}

impl Inner {
    fn new(k: &CsrMatrix, cap: usize) -> Result<Self, EigenError> {
        let perm = rcm_ordering(k);
        let size = envelope_size(k, &perm);
        if size <= cap {
            debug!("direct factor: n={} envelope={size}", k.dim());
            EnvelopeCholesky::factor(k, perm)
                .map(Inner::Direct)
                .map_err(EigenError::NotPositiveDefinite)
        } else {
            debug!("envelope {size} over cap {cap}: using PCG");
            Ok(Inner::Iterative(JacobiCg::new(k, 1e-13)))
        }
    }

    fn solve(&self, b: &[f64], x: &mut [f64]) -> Result<(), EigenError> {
        match self {
            Inner::Direct(c) => {
                c.solve_into(b, x);
                Ok(())
            }
            Inner::Iterative(cg) => cg.solve_into(b, x).map(|_| ()).map_err(EigenError::InnerSolve),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Gram-Schmidt in the `M` inner product (two passes per column).
pub fn mass_orthonormalize(vectors: &mut [Vec<f64>], m: &CsrMatrix) -> Result<(), EigenError> {
    let mut mv: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for j in 0..vectors.len() {
        let (done, rest) = vectors.split_at_mut(j);
        let v = &mut rest[0];
        let original = m.quad_form(v).max(0.0).sqrt();
        if !(original > 0.0) {
            return Err(EigenError::RankDeficient { column: j });
        }
        for _ in 0..2 {
            for (u, mu) in done.iter().zip(&mv) {
                let c = dot(mu, v);
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
        }
        let w = m.mul_vec(v);
        let nrm = dot(&w, v).max(0.0).sqrt();
        if nrm <= 1e-10 * original {
            return Err(EigenError::RankDeficient { column: j });
        }
        v.iter_mut().for_each(|x| *x /= nrm);
        mv.push(w.into_iter().map(|x| x / nrm).collect());
    }
    Ok(())
}

/// Same as [`mass_orthonormalize`] but replaces dependent columns with fresh
/// random vectors instead of failing.
fn orthonormalize_block(block: &mut [Vec<f64>], m: &CsrMatrix, rng: &mut ChaCha8Rng) {
    loop {
        match mass_orthonormalize(block, m) {
            Ok(()) => return,
            Err(EigenError::RankDeficient { column }) => {
                for x in block[column].iter_mut() {
                    *x = rng.gen_range(-1.0..1.0);
                }
            }
            Err(_) => unreachable!(),
        }
    }
}

/// Raw pencil result: `(values, vectors, residuals, iterations)`.
pub type PencilEigen = (Vec<f64>, Vec<Vec<f64>>, Vec<f64>, usize);

pub fn smallest_eigenpairs_pencil(
    k: &CsrMatrix,
    m: &CsrMatrix,
    count: usize,
    opts: &SolverOptions,
) -> Result<PencilEigen, EigenError> {
    let n = k.dim();
    if m.dim() != n {
        return Err(EigenError::Argument(format!(
            "pencil dimension mismatch: K is {n}, M is {}",
            m.dim()
        )));
    }
    if count == 0 || count > n {
        return Err(EigenError::Argument(format!(
            "requested {count} eigenpairs of a {n}-dof system"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(EigenError::Argument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let inner = Inner::new(k, opts.factor_cap)?;
    let p = (count + opts.guard).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut block: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let mut locked = 0usize;
    let mut best = vec![f64::INFINITY; count];
    let mut mx = vec![0.0; n];

    for iter in 1..=opts.max_iter {
        for col in block.iter_mut().skip(locked) {
            m.mul_vec_into(col, &mut mx);
            inner.solve(&mx, col)?;
        }
        orthonormalize_block(&mut block, m, &mut rng);
        let kb: Vec<Vec<f64>> = block.iter().map(|v| k.mul_vec(v)).collect();
        let mut proj = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                let v = dot(&block[i], &kb[j]);
                proj[(i, j)] = v;
                proj[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(proj);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let rotate = |src: &[Vec<f64>]| -> Vec<Vec<f64>> {
            order
                .iter()
                .map(|&c| {
                    let mut out = vec![0.0; n];
                    for (r, v) in src.iter().enumerate() {
                        let w = eig.eigenvectors[(r, c)];
                        if w != 0.0 {
                            out.iter_mut().zip(v).for_each(|(o, x)| *o += w * x);
                        }
                    }
                    out
                })
                .collect()
        };
        block = rotate(&block);
        let kx = rotate(&kb);
        let values: Vec<f64> = order.iter().map(|&c| eig.eigenvalues[c]).collect();

        let mut residuals = Vec::with_capacity(count);
        for i in 0..count {
            m.mul_vec_into(&block[i], &mut mx);
            let r: f64 = kx[i]
                .iter()
                .zip(&mx)
                .map(|(a, b)| (a - values[i] * b).powi(2))
                .sum::<f64>()
                .sqrt();
            residuals.push(r / norm(&mx));
        }
        for (b, r) in best.iter_mut().zip(&residuals) {
            *b = b.min(*r);
        }
        locked = residuals.iter().take_while(|&&r| r <= opts.tol).count();
        debug!("iteration {iter}: locked {locked}/{count}, residuals {residuals:?}");
        if locked == count {
            let mut vectors: Vec<Vec<f64>> = block.into_iter().take(count).collect();
            for v in vectors.iter_mut() {
                let big = v.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
                if big < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            return Ok((values[..count].to_vec(), vectors, residuals, iter));
        }
    }
    Err(EigenError::NoConvergence {
        iterations: opts.max_iter,
        residuals: best,
    })
}

/// Flags members of near-degenerate clusters.
pub fn cluster_flags(values: &[f64]) -> Vec<bool> {
    let mut flags = vec![false; values.len()];
    for i in 1..values.len() {
        let (a, b) = (values[i - 1], values[i]);
        if (b - a).abs() <= CLUSTER_REL_GAP * (1.0 + a.abs().max(b.abs())) {
            flags[i - 1] = true;
            flags[i] = true;
        }
    }
    flags
}

pub fn smallest_eigenpairs(
    sys: &SectorSystem,
    k: usize,
    opts: &SolverOptions,
) -> Result<EigenResult, EigenError> {
    let (values, vectors, residuals, iterations) =
        smallest_eigenpairs_pencil(&sys.k, &sys.m, k, opts)?;
    let degenerate = cluster_flags(&values);
    Ok(EigenResult {
        values,
        vectors,
        residuals,
        sector: sys.sector,
        iterations,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, reduce, Parity};
    use crate::mesh::Mesh;

    fn random_block(n: usize, p: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..p)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect()
    }

    fn identity(n: usize) -> CsrMatrix {
        CsrMatrix::from_triplets(n, &(0..n).map(|i| (i, i, 1.0)).collect::<Vec<_>>())
    }

    fn gram(v: &[Vec<f64>], m: &CsrMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..v.len() {
            let mi = m.mul_vec(&v[i]);
            for (j, vj) in v.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(&mi, vj) - target).abs());
            }
        }
        worst
    }

    #[test]
    fn orthonormalize_with_identity_mass() {
        let m = identity(10);
        let mut v = random_block(10, 3, 1);
        mass_orthonormalize(&mut v, &m).unwrap();
        assert!(gram(&v, &m) < 1e-10);
        let before = v.clone();
        mass_orthonormalize(&mut v, &m).unwrap();
        for (a, b) in v.iter().flatten().zip(before.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicated_column_is_rank_deficient() {
        let m = identity(6);
        let mut v = random_block(6, 2, 2);
        v.push(v[0].clone());
        assert!(matches!(
            mass_orthonormalize(&mut v, &m),
            Err(EigenError::RankDeficient { column: 2 })
        ));
    }

    #[test]
    fn scalar_problem_is_a_rayleigh_quotient() {
        let k = CsrMatrix::from_triplets(1, &[(0, 0, 3.0)]);
        let m = CsrMatrix::from_triplets(1, &[(0, 0, 0.5)]);
        let (vals, vecs, _, _) =
            smallest_eigenpairs_pencil(&k, &m, 1, &SolverOptions::default()).unwrap();
        assert!((vals[0] - 6.0).abs() < 1e-14);
        assert!((vecs[0][0] - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn argument_errors() {
        let k = identity(3);
        let opts = SolverOptions::default();
        assert!(matches!(
            smallest_eigenpairs_pencil(&k, &k, 4, &opts),
            Err(EigenError::Argument(_))
        ));
        assert!(matches!(
            smallest_eigenpairs_pencil(&k, &k, 0, &opts),
            Err(EigenError::Argument(_))
        ));
    }

    #[test]
    fn iteration_cap_reports_best_residuals() {
        let sys = small_system(Sector::new(Parity::Sym, Parity::Sym));
        let opts = SolverOptions {
            max_iter: 1,
            tol: 1e-14,
            ..SolverOptions::default()
        };
        match smallest_eigenpairs(&sys, 3, &opts) {
            Err(EigenError::NoConvergence { iterations, residuals }) => {
                assert_eq!(iterations, 1);
                assert_eq!(residuals.len(), 3);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    fn small_system(sector: Sector) -> SectorSystem {
        let mesh = Mesh::quarter_rectangle(2.0, 1.0, 0.2).unwrap();
        let (k, m) = assemble(&mesh).unwrap();
        reduce(&k, &m, &mesh, sector).unwrap()
    }

    #[test]
    fn matches_dense_generalized_solver() {
        for sector in Sector::ALL {
            let sys = small_system(sector);
            let res = smallest_eigenpairs(&sys, 4, &SolverOptions::default()).unwrap();
            // dense oracle: symmetric reduction with the Cholesky factor of M
            let md = sys.m.to_dense();
            let l = md.clone().cholesky().unwrap().l();
            let linv = l.clone().try_inverse().unwrap();
            let c = &linv * sys.k.to_dense() * linv.transpose();
            let mut dense: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
            dense.sort_by(f64::total_cmp);
            for i in 0..4 {
                assert!(
                    (res.values[i] - dense[i]).abs() < 1e-9 * dense[i],
                    "{sector}: {} vs {}",
                    res.values[i],
                    dense[i]
                );
                assert!(res.residuals[i] <= 1e-8);
            }
            assert!(gram(&res.vectors, &sys.m) < 1e-8);
            assert!(res.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn cg_fallback_agrees_with_direct() {
        let sys = small_system(Sector::new(Parity::Anti, Parity::Sym));
        let direct = smallest_eigenpairs(&sys, 3, &SolverOptions::default()).unwrap();
        let opts = SolverOptions {
            factor_cap: 0,
            ..SolverOptions::default()
        };
        let cg = smallest_eigenpairs(&sys, 3, &opts).unwrap();
        for (a, b) in direct.values.iter().zip(&cg.values) {
            assert!((a - b).abs() < 1e-9 * a);
        }
    }

    #[test]
    fn shift_moves_values_rigidly() {
        let sys = small_system(Sector::new(Parity::Sym, Parity::Anti));
        let base = smallest_eigenpairs(&sys, 3, &SolverOptions::default()).unwrap();
        let sigma = 2.5;
        let shifted_k = sys.k.add_scaled(sigma, &sys.m);
        let (vals, vecs, _, _) =
            smallest_eigenpairs_pencil(&shifted_k, &sys.m, 3, &SolverOptions::default()).unwrap();
        for i in 0..3 {
            assert!((vals[i] - base.values[i] - sigma).abs() < 1e-8 * vals[i]);
            let mv = sys.m.mul_vec(&vecs[i]);
            assert!((dot(&mv, &base.vectors[i]).abs() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn same_seed_same_bits() {
        let sys = small_system(Sector::new(Parity::Sym, Parity::Sym));
        let a = smallest_eigenpairs(&sys, 3, &SolverOptions::default()).unwrap();
        let b = smallest_eigenpairs(&sys, 3, &SolverOptions::default()).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }

    #[test]
    fn clusters_are_flagged() {
        let flags = cluster_flags(&[1.0, 2.0, 2.0 + 1e-8, 5.0]);
        assert_eq!(flags, vec![false, true, true, false]);
    }
}
