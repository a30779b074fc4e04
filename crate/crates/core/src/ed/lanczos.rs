//! Restarted Lanczos for the lowest eigenpairs of a real symmetric operator.
//!
//! Each cycle builds a fully reorthogonalized Krylov basis of at most
//! `KRYLOV_DIM` vectors and restarts from the lowest Ritz vector. Further
//! eigenpairs are found one at a time with the converged ones deflated.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::par;

const KRYLOV_DIM: usize = 40;
const MAX_RESTARTS: usize = 400;

pub(crate) trait Operator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, v: &[f64], out: &mut [f64]);
    /// Restricts `v` to the subspace the solver works in.
    fn restrict(&self, _v: &mut [f64]) {}
}

#[derive(Debug, Clone)]
pub(crate) struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct EigenRun {
    pub pairs: Vec<EigenPair>,
    pub matvecs: usize,
}

pub(crate) fn random_vector(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    // Two classical Gram-Schmidt passes.
    for _ in 0..2 {
        for b in basis {
            let c = par::dot(b, v);
            par::axpy(-c, b, v);
        }
    }
}

/// Eigenvalues and eigenvectors of the symmetric tridiagonal matrix with
/// diagonal `alpha` and off-diagonal `beta`.
pub(crate) fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    SymmetricEigen::new(t)
}

struct Deflated<'a, O: Operator> {
    op: &'a O,
    locked: &'a [Vec<f64>],
}

impl<O: Operator> Deflated<'_, O> {
    fn project(&self, v: &mut [f64]) {
        self.op.restrict(v);
        orthogonalize(v, self.locked);
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        self.op.apply(v, out);
        self.project(out);
    }
}

fn lowest_one<O: Operator>(
    op: &Deflated<'_, O>,
    mut start: Vec<f64>,
    tol: f64,
    matvecs: &mut usize,
) -> Result<EigenPair> {
    let dim = op.op.dim();
    let m = KRYLOV_DIM.min(dim);
    let mut w = vec![0.0; dim];
    let mut last_residual = f64::INFINITY;
    for _ in 0..MAX_RESTARTS {
        op.project(&mut start);
        let nrm = par::norm(&start);
        if !(nrm > 0.0) {
            return Err(Error::EigenNonConverged {
                residual: f64::NAN,
                iterations: *matvecs,
            });
        }
        par::scale(1.0 / nrm, &mut start);
        let mut basis = vec![start];
        let mut alpha = Vec::with_capacity(m);
        let mut beta = Vec::with_capacity(m);
        loop {
            let i = basis.len() - 1;
            op.apply(&basis[i], &mut w);
            *matvecs += 1;
            let a = par::dot(&basis[i], &w);
            alpha.push(a);
            orthogonalize(&mut w, &basis);
            if basis.len() == m {
                break;
            }
            let b = par::norm(&w);
            if b <= 1e-12 * a.abs().max(1.0) {
                break;
            }
            beta.push(b);
            let mut next = w.clone();
            par::scale(1.0 / b, &mut next);
            basis.push(next);
        }
        let eig = tridiagonal_eigen(&alpha, &beta);
        let (imin, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty Krylov space");
        let y = eig.eigenvectors.column(imin);
        let mut x = vec![0.0; dim];
        for (c, q) in y.iter().zip(&basis) {
            par::axpy(*c, q, &mut x);
        }
        op.project(&mut x);
        let nx = par::norm(&x);
        par::scale(1.0 / nx, &mut x);
        op.apply(&x, &mut w);
        *matvecs += 1;
        let theta = par::dot(&x, &w);
        par::axpy(-theta, &x, &mut w);
        let residual = par::norm(&w);
        last_residual = residual;
        if residual <= tol * theta.abs().max(1.0) {
            return Ok(EigenPair {
                value: theta,
                vector: x,
                residual,
            });
        }
        start = x;
    }
    Err(Error::EigenNonConverged {
        residual: last_residual,
        iterations: *matvecs,
    })
}

/// The `count` lowest eigenpairs, in ascending order. The first search
/// starts from `start`; later ones from fixed-seed random vectors.
pub(crate) fn lowest_eigenpairs<O: Operator>(
    op: &O,
    count: usize,
    start: Vec<f64>,
    tol: f64,
    seed: u64,
) -> Result<EigenRun> {
    let dim = op.dim();
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut pairs = Vec::new();
    let mut matvecs = 0;
    let mut next_start = Some(start);
    let mut attempt = 0u64;
    while pairs.len() < count.min(dim) {
        let s = next_start
            .take()
            .unwrap_or_else(|| random_vector(dim, seed.wrapping_add(attempt)));
        attempt += 1;
        let pair = {
            let d = Deflated { op, locked: &locked };
            lowest_one(&d, s, tol, &mut matvecs)
        };
        match pair {
            Ok(p) => {
                locked.push(p.vector.clone());
                pairs.push(p);
            }
            // The restricted subspace is exhausted.
            Err(Error::EigenNonConverged { residual, .. }) if residual.is_nan() && !pairs.is_empty() => break,
            Err(e) => return Err(e),
        }
    }
    pairs.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(EigenRun { pairs, matvecs })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Diag(Vec<f64>);

    impl Operator for Diag {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, v: &[f64], out: &mut [f64]) {
            for i in 0..v.len() {
                out[i] = self.0[i] * v[i];
            }
        }
    }

    struct Laplacian(usize);

    impl Operator for Laplacian {
        fn dim(&self) -> usize {
            self.0
        }
        fn apply(&self, v: &[f64], out: &mut [f64]) {
            let n = self.0;
            for i in 0..n {
                let l = if i > 0 { v[i - 1] } else { 0.0 };
                let r = if i + 1 < n { v[i + 1] } else { 0.0 };
                out[i] = 2.0 * v[i] - l - r;
            }
        }
    }

    #[test]
    fn diagonal_spectrum() {
        let op = Diag(vec![3.0, -1.0, 2.0, 0.5, 7.0]);
        let run = lowest_eigenpairs(&op, 3, vec![1.0; 5], 1e-12, 1).unwrap();
        let vals: Vec<f64> = run.pairs.iter().map(|p| p.value).collect();
        assert_eq!(vals.len(), 3);
        for (a, b) in vals.iter().zip([-1.0, 0.5, 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_needs_restarts() {
        let n = 500;
        let op = Laplacian(n);
        let run = lowest_eigenpairs(&op, 2, random_vector(n, 7), 1e-9, 3).unwrap();
        for (i, p) in run.pairs.iter().enumerate() {
            let k = (i + 1) as f64 * std::f64::consts::PI / (n + 1) as f64;
            let exact = 2.0 - 2.0 * k.cos();
            assert!((p.value - exact).abs() < 1e-12, "{} vs {exact}", p.value);
        }
        assert!(run.matvecs > KRYLOV_DIM);
    }

    #[test]
    fn tridiagonal_matches_closed_form() {
        let n = 6;
        let eig = tridiagonal_eigen(&vec![0.0; n], &vec![1.0; n - 1]);
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.total_cmp(b));
        for (j, v) in vals.iter().enumerate() {
            let exact = 2.0 * ((n - j) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-12);
        }
    }
}
