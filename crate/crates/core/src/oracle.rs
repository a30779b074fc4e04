//! Independent reference computations used to validate the solvers.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::ed::{Boundary, EdConfig};

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

fn site_operator(op: &DMatrix<f64>, site: usize, n: usize) -> DMatrix<f64> {
    // Spin `n - 1` is the most significant bit of the configuration index.
    let id = DMatrix::<f64>::identity(2, 2);
    let mut out = DMatrix::<f64>::identity(1, 1);
    for s in (0..n).rev() {
        out = kron(&out, if s == site { op } else { &id });
    }
    out
}

/// Dense Hamiltonian assembled from Kronecker products, in the same basis
/// order as the matrix-free operator (photon factor leftmost).
pub fn dense_hamiltonian(cfg: &EdConfig) -> DMatrix<f64> {
    let n = cfg.n_spins;
    let p = &cfg.params;
    let nb = cfg.n_max_photons + 1;
    let sx = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let sz = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let mut a = DMatrix::<f64>::zeros(nb, nb);
    for k in 0..nb - 1 {
        a[(k, k + 1)] = ((k + 1) as f64).sqrt();
    }
    let num = a.transpose() * &a;
    let q = &a + a.transpose();
    let id_b = DMatrix::<f64>::identity(nb, nb);
    let id_s = DMatrix::<f64>::identity(1 << n, 1 << n);

    let sx_sites: Vec<_> = (0..n).map(|j| site_operator(&sx, j, n)).collect();
    let sz_sites: Vec<_> = (0..n).map(|j| site_operator(&sz, j, n)).collect();
    let mut spin = DMatrix::<f64>::zeros(1 << n, 1 << n);
    let mut collective_x = DMatrix::<f64>::zeros(1 << n, 1 << n);
    for j in 0..n {
        collective_x += &sx_sites[j];
    }
    spin += 0.5 * p.omega_x * &collective_x;
    let mut bonds: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|j| (j, j + 1)).collect();
    if cfg.boundary == Boundary::Periodic && n > 2 {
        bonds.push((n - 1, 0));
    }
    for (i, j) in bonds {
        spin -= p.j * (&sz_sites[i] * &sz_sites[j]);
    }
    kron(&id_b, &spin) - (p.lambda / (n as f64).sqrt()) * kron(&q, &collective_x)
        + p.omega_cavity * kron(&num, &id_s)
}

/// Full dense spectrum, ascending.
pub fn dense_spectrum(cfg: &EdConfig) -> Vec<f64> {
    let eig = SymmetricEigen::new(dense_hamiltonian(cfg));
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Retarded photon propagator from the Lehmann sum over the complete
/// dense spectrum, for a nondegenerate ground state.
pub fn lehmann_propagator(cfg: &EdConfig, omegas: &[f64]) -> Vec<Complex64> {
    let h = dense_hamiltonian(cfg);
    let dim = h.nrows();
    let nb = cfg.n_max_photons + 1;
    let ns = dim / nb;
    let eig = SymmetricEigen::new(h);
    let g_idx = (0..dim)
        .min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
        .expect("nonempty");
    let e0 = eig.eigenvalues[g_idx];
    let g = eig.eigenvectors.column(g_idx).into_owned();
    let mut a = DMatrix::<f64>::zeros(nb, nb);
    for k in 0..nb - 1 {
        a[(k, k + 1)] = ((k + 1) as f64).sqrt();
    }
    let a_full = kron(&a, &DMatrix::identity(ns, ns));
    let up = a_full.transpose() * &g;
    let down = &a_full * &g;
    let eta = cfg.params.broadening;
    omegas
        .iter()
        .map(|&w| {
            let z = Complex64::new(w, eta);
            let mut d = Complex64::default();
            for m in 0..dim {
                let v = eig.eigenvectors.column(m);
                let de = eig.eigenvalues[m] - e0;
                let p = v.dot(&up);
                let q = v.dot(&down);
                d += p * p / (z - de) - q * q / (z + de);
            }
            d
        })
        .collect()
}

/// Ground energy of the open transverse-field Ising chain
/// `h sum sigma^x - J sum sigma^z sigma^z` with `h = omega_x / 2`, from the
/// singular values of its bidiagonal single-particle matrix.
pub fn open_chain_ground_energy(n: usize, omega_x: f64, j: f64) -> f64 {
    let h = 0.5 * omega_x;
    let mut b = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        b[(i, i)] = h;
        if i + 1 < n {
            b[(i, i + 1)] = j;
        }
    }
    -b.singular_values().iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    #[test]
    fn free_fermion_small_cases() {
        assert!((open_chain_ground_energy(1, 0.6, 0.25) + 0.3).abs() < 1e-15);
        assert!((open_chain_ground_energy(2, 0.0, 0.25) + 0.25).abs() < 1e-15);
        // Two sites with a field, against the dense spectrum.
        let cfg = EdConfig::new(2, 1, ModelParams::default().with_omega_x(0.4));
        let e = dense_spectrum(&cfg)[0];
        assert!((open_chain_ground_energy(2, 0.4, 0.25) - e).abs() < 1e-14);
    }
}
