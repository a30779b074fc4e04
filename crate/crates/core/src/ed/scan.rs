use serde::{Deserialize, Serialize};

use super::green::{spectrum_of, PhotonSpectrum};
use super::{build_hamiltonian, ground_state_of, EdConfig, GroundObservables};
use crate::error::{Error, Result};
use crate::par;

/// Frequency window whose integrated pole weight is tracked across sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleWindow {
    pub lo: f64,
    pub hi: f64,
}

impl PoleWindow {
    pub fn around(center: f64, half_width: f64) -> Self {
        Self {
            lo: center - half_width,
            hi: center + half_width,
        }
    }
}

/// One `(N, lambda)` cell of a finite-size scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub n_spins: usize,
    pub lambda: f64,
    pub ground: GroundObservables,
    pub cutoff_adequate: bool,
    pub spectrum: PhotonSpectrum,
    /// Pole weight inside the tracked window.
    pub window_weight: f64,
    /// Weight-averaged position of the poles inside the window, NaN when
    /// the window is empty.
    pub window_omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteSizeScan {
    pub sizes: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub window: PoleWindow,
    /// Size-major: `cells[s * lambdas.len() + l]`.
    pub cells: Vec<ScanCell>,
}

impl FiniteSizeScan {
    pub fn cell(&self, size_index: usize, lambda_index: usize) -> &ScanCell {
        &self.cells[size_index * self.lambdas.len() + lambda_index]
    }
}

/// Solves every `(N, lambda)` pair and records the photon spectrum and the
/// weight of the poles inside `window`.
pub fn finite_size_scan(
    cfg_base: &EdConfig,
    sizes: &[usize],
    lambda_grid: &[f64],
    omega_grid: &[f64],
    window: PoleWindow,
) -> Result<FiniteSizeScan> {
    for &n in sizes {
        cfg_base.with_n_spins(n).validate()?;
    }
    let nl = lambda_grid.len();
    let cells = par::try_map_indexed(sizes.len() * nl, |idx| {
        let n = sizes[idx / nl];
        let lambda = lambda_grid[idx % nl];
        let cfg = cfg_base
            .with_n_spins(n)
            .with_params(cfg_base.params.with_lambda(lambda));
        let run = || -> Result<ScanCell> {
            let h = build_hamiltonian(&cfg)?;
            let ground = ground_state_of(&h, &cfg)?;
            let spectrum = spectrum_of(&h, &ground, &cfg, omega_grid);
            let inside: Vec<_> = spectrum
                .poles
                .iter()
                .filter(|p| p.omega >= window.lo && p.omega <= window.hi)
                .collect();
            let weight: f64 = inside.iter().map(|p| p.weight).sum();
            let omega = if weight != 0.0 {
                inside.iter().map(|p| p.omega * p.weight).sum::<f64>() / weight
            } else {
                f64::NAN
            };
            Ok(ScanCell {
                n_spins: n,
                lambda,
                ground: ground.ground_observables,
                cutoff_adequate: ground.cutoff_adequate,
                spectrum,
                window_weight: weight,
                window_omega: omega,
            })
        };
        run().map_err(|e| Error::ScanCell {
            n_spins: n,
            lambda,
            source: Box::new(e),
        })
    })?;
    Ok(FiniteSizeScan {
        sizes: sizes.to_vec(),
        lambdas: lambda_grid.to_vec(),
        window,
        cells,
    })
}
