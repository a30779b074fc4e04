//! Matrix-free Hamiltonian on the truncated product space.
//!
//! Basis index `n * 2^N + s`: photon number major, spin configuration minor.
//! Bit `j` of `s` is set when spin `j` points down (`sigma^z_j = -1`).

use crate::error::Result;
use crate::par;

use super::config::{Boundary, EdConfig};

/// `H = omega_x/2 sum sigma^x - J sum sigma^z sigma^z
///      - lambda/sqrt(N) sum sigma^x (a + a^dag) + Omega a^dag a`.
///
/// Every term that flips a spin is proportional to the collective
/// `X = sum_j sigma^x_j`, so a product is one pass computing `X v` and one
/// pass combining it with the photon ladder and the diagonal.
#[derive(Debug, Clone)]
pub struct EdHamiltonian {
    n_spins: usize,
    n_max: usize,
    zz: Vec<f64>,
    half_omega_x: f64,
    coupling: f64,
    omega_cavity: f64,
    sqrt_n: Vec<f64>,
}

pub fn build_hamiltonian(cfg: &EdConfig) -> Result<EdHamiltonian> {
    cfg.validate()?;
    let n = cfg.n_spins;
    let mut bonds: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|j| (j, j + 1)).collect();
    // A ring of two sites would double-count its only bond.
    if cfg.boundary == Boundary::Periodic && n > 2 {
        bonds.push((n - 1, 0));
    }
    let j = cfg.params.j;
    let zz = (0..1usize << n)
        .map(|s| {
            let aligned: f64 = bonds
                .iter()
                .map(|&(a, b)| if ((s >> a) ^ (s >> b)) & 1 == 0 { 1.0 } else { -1.0 })
                .sum();
            -j * aligned
        })
        .collect();
    Ok(EdHamiltonian {
        n_spins: n,
        n_max: cfg.n_max_photons,
        zz,
        half_omega_x: 0.5 * cfg.params.omega_x,
        coupling: cfg.params.lambda / (n as f64).sqrt(),
        omega_cavity: cfg.params.omega_cavity,
        sqrt_n: (0..=cfg.n_max_photons + 1).map(|k| (k as f64).sqrt()).collect(),
    })
}

impl EdHamiltonian {
    pub fn dim(&self) -> usize {
        self.zz.len() * (self.n_max + 1)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn n_max_photons(&self) -> usize {
        self.n_max
    }

    fn spin_dim(&self) -> usize {
        self.zz.len()
    }

    /// Photon number and spin configuration of a basis index.
    pub fn decompose(&self, idx: usize) -> (usize, usize) {
        (idx >> self.n_spins, idx & (self.spin_dim() - 1))
    }

    /// Structural nonzeros in one row of the assembled matrix: the diagonal
    /// plus `N` spin flips in each of up to three photon blocks.
    pub fn max_row_nonzeros(&self) -> usize {
        3 * self.n_spins + 1
    }

    /// `out = sum_j sigma^x_j v`.
    pub fn apply_collective_x(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n_spins;
        par::fill_indexed(out, |i| {
            let mut acc = 0.0;
            for j in 0..n {
                acc += v[i ^ (1 << j)];
            }
            acc
        });
    }

    /// `out = H v`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), self.dim());
        assert_eq!(out.len(), self.dim());
        let mut xv = vec![0.0; v.len()];
        self.apply_collective_x(v, &mut xv);
        let shift = self.n_spins;
        let top = self.n_max;
        let sd = self.spin_dim();
        par::fill_indexed(out, |i| {
            let n = i >> shift;
            let s = i & (sd - 1);
            let mut acc = (self.zz[s] + self.omega_cavity * n as f64) * v[i] + self.half_omega_x * xv[i];
            let mut ladder = 0.0;
            if n > 0 {
                ladder += self.sqrt_n[n] * xv[i - sd];
            }
            if n < top {
                ladder += self.sqrt_n[n + 1] * xv[i + sd];
            }
            acc -= self.coupling * ladder;
            acc
        });
    }

    pub fn apply_new(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.apply(v, &mut out);
        out
    }

    /// `a^dag v`, truncated at the cutoff.
    pub fn raise(&self, v: &[f64]) -> Vec<f64> {
        let sd = self.spin_dim();
        let shift = self.n_spins;
        par::map_indexed(v.len(), |i| {
            let n = i >> shift;
            if n == 0 {
                0.0
            } else {
                self.sqrt_n[n] * v[i - sd]
            }
        })
    }

    /// `a v`.
    pub fn lower(&self, v: &[f64]) -> Vec<f64> {
        let sd = self.spin_dim();
        let shift = self.n_spins;
        let top = self.n_max;
        par::map_indexed(v.len(), |i| {
            let n = i >> shift;
            if n < top {
                self.sqrt_n[n + 1] * v[i + sd]
            } else {
                0.0
            }
        })
    }

    /// Eigenvalue `(-1)^n prod_j sigma^z_j` of a basis state. The operator
    /// commutes with `H` when `omega_x = 0`.
    pub fn parity_sign(&self, idx: usize) -> f64 {
        let (n, s) = self.decompose(idx);
        if (n as u32 + s.count_ones()) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Projects `v` onto the parity sector `sign`.
    pub fn project_parity(&self, v: &mut [f64], sign: f64) {
        for (i, x) in v.iter_mut().enumerate() {
            if self.parity_sign(i) != sign {
                *x = 0.0;
            }
        }
    }

    /// Assembles the dense matrix column by column. Test-sized problems only.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let d = self.dim();
        let mut m = nalgebra::DMatrix::zeros(d, d);
        let mut e = vec![0.0; d];
        for c in 0..d {
            e[c] = 1.0;
            let col = self.apply_new(&e);
            for (r, x) in col.into_iter().enumerate() {
                m[(r, c)] = x;
            }
            e[c] = 0.0;
        }
        m
    }
}
