//! Retarded photon propagator of the finite system.
//!
//! `D(z) = <g| a (z - H + E0)^-1 a^dag |g> - <g| a^dag (z + H - E0)^-1 a |g>`,
//! each branch expanded by Lanczos from its seed and resolved into poles
//! through the eigen-decomposition of the tridiagonal matrix.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::hamiltonian::EdHamiltonian;
use super::lanczos::tridiagonal_eigen;
use super::{build_hamiltonian, ground_state_of, EdConfig, EdResult};
use crate::error::Result;
use crate::par;

/// Above this many stored entries the Krylov basis is not kept and the
/// recursion runs without reorthogonalization.
const REORTHOGONALIZE_BUDGET: usize = 1 << 24;

/// Pole of the propagator with its signed weight (negative on the hole
/// branch).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPole {
    pub omega: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonSpectrum {
    pub omegas: Vec<f64>,
    /// `-Im D / pi` on the grid.
    pub spectral: Vec<f64>,
    #[serde(rename = "D")]
    pub d: Vec<Complex64>,
    pub poles: Vec<SpectralPole>,
    /// Sum of signed pole weights, `<[a, a^dag]>` in the truncated space.
    pub total_weight: f64,
    pub broadening: f64,
    pub depth: usize,
    /// A branch hit an invariant subspace before the requested depth; the
    /// expansion is exact up to that point.
    pub krylov_breakdown: bool,
}

impl PhotonSpectrum {
    /// Summed signed weight of the poles with `lo <= omega <= hi`.
    pub fn weight_in(&self, lo: f64, hi: f64) -> f64 {
        self.poles
            .iter()
            .filter(|p| p.omega >= lo && p.omega <= hi)
            .map(|p| p.weight)
            .sum()
    }

    pub fn evaluate(poles: &[SpectralPole], omega: f64, broadening: f64) -> Complex64 {
        let z = Complex64::new(omega, broadening);
        poles.iter().map(|p| p.weight / (z - p.omega)).sum()
    }
}

struct Branch {
    poles: Vec<SpectralPole>,
    breakdown: bool,
}

/// Lanczos expansion of `<seed| (z - sign (H - E0))^-1 |seed>`.
fn branch(h: &EdHamiltonian, seed: Vec<f64>, e0: f64, sign: f64, depth: usize) -> Branch {
    let b0 = par::norm(&seed);
    if !(b0 > 0.0) {
        return Branch {
            poles: Vec::new(),
            breakdown: false,
        };
    }
    let dim = h.dim();
    let depth = depth.min(dim);
    let keep = depth.saturating_mul(dim) <= REORTHOGONALIZE_BUDGET;
    let mut q = seed;
    par::scale(1.0 / b0, &mut q);
    let mut q_prev = vec![0.0; dim];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha = Vec::with_capacity(depth);
    let mut beta: Vec<f64> = Vec::with_capacity(depth);
    let mut w = vec![0.0; dim];
    let mut breakdown = false;
    for i in 0..depth {
        h.apply(&q, &mut w);
        let a = par::dot(&q, &w);
        alpha.push(a);
        par::axpy(-a, &q, &mut w);
        if i > 0 {
            par::axpy(-beta[i - 1], &q_prev, &mut w);
        }
        if keep {
            basis.push(q.clone());
            for _ in 0..2 {
                for b in &basis {
                    let c = par::dot(b, &w);
                    par::axpy(-c, b, &mut w);
                }
            }
        }
        if i + 1 == depth {
            break;
        }
        let b = par::norm(&w);
        if b <= 1e-12 * a.abs().max(1.0) {
            breakdown = true;
            break;
        }
        beta.push(b);
        std::mem::swap(&mut q_prev, &mut q);
        q.copy_from_slice(&w);
        par::scale(1.0 / b, &mut q);
    }
    let eig = tridiagonal_eigen(&alpha, &beta);
    let poles = (0..alpha.len())
        .map(|k| {
            let y0 = eig.eigenvectors[(0, k)];
            SpectralPole {
                omega: sign * (eig.eigenvalues[k] - e0),
                weight: sign * b0 * b0 * y0 * y0,
            }
        })
        .collect();
    Branch { poles, breakdown }
}

/// Propagator on `omega_grid` for an already solved ground manifold,
/// averaged with equal weights over its states.
pub(crate) fn spectrum_of(
    h: &EdHamiltonian,
    ground: &EdResult,
    cfg: &EdConfig,
    omega_grid: &[f64],
) -> PhotonSpectrum {
    let e0 = ground.energies[0];
    let depth = cfg.green_fn_depth.min(h.dim());
    let norm = 1.0 / ground.ground_vectors.len() as f64;
    let mut poles = Vec::new();
    let mut breakdown = false;
    for g in &ground.ground_vectors {
        for (seed, sign) in [(h.raise(g), 1.0), (h.lower(g), -1.0)] {
            let b = branch(h, seed, e0, sign, depth);
            breakdown |= b.breakdown;
            poles.extend(b.poles.into_iter().map(|p| SpectralPole {
                omega: p.omega,
                weight: p.weight * norm,
            }));
        }
    }
    poles.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    let eta = cfg.params.broadening;
    let d = par::map_indexed(omega_grid.len(), |i| {
        PhotonSpectrum::evaluate(&poles, omega_grid[i], eta)
    });
    PhotonSpectrum {
        omegas: omega_grid.to_vec(),
        spectral: d.iter().map(|x| -x.im / std::f64::consts::PI).collect(),
        d,
        total_weight: poles.iter().map(|p| p.weight).sum(),
        poles,
        broadening: eta,
        depth,
        krylov_breakdown: breakdown,
    }
}

/// Ground state plus propagator on `omega_grid`.
pub fn photon_green_function(cfg: &EdConfig, omega_grid: &[f64]) -> Result<(EdResult, PhotonSpectrum)> {
    let h = build_hamiltonian(cfg)?;
    let ground = ground_state_of(&h, cfg)?;
    let spectrum = spectrum_of(&h, &ground, cfg, omega_grid);
    Ok((ground, spectrum))
}
