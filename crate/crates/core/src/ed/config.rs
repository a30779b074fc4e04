use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

/// Finite-size problem definition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdConfig {
    pub n_spins: usize,
    /// Fock cutoff: photon numbers `0..=n_max_photons` are kept.
    pub n_max_photons: usize,
    pub boundary: Boundary,
    pub params: ModelParams,
    /// Number of low-lying eigenpairs requested.
    pub n_eigen: usize,
    /// Krylov depth of each propagator branch (capped at the dimension).
    pub green_fn_depth: usize,
    /// Largest admissible Hilbert dimension.
    pub dimension_budget: usize,
    /// Relative residual `|H x - E x| / max(1, |E|)` accepted by the eigensolver.
    pub eigen_tolerance: f64,
}

impl Default for EdConfig {
    fn default() -> Self {
        Self {
            n_spins: 4,
            n_max_photons: 40,
            boundary: Boundary::Open,
            params: ModelParams::default(),
            n_eigen: 1,
            green_fn_depth: 200,
            dimension_budget: 1 << 23,
            eigen_tolerance: 1e-9,
        }
    }
}

/// Bits available for the spin configuration in a `usize` index, leaving
/// room for the photon factor.
const MAX_SPINS: usize = 30;

impl EdConfig {
    pub fn new(n_spins: usize, n_max_photons: usize, params: ModelParams) -> Self {
        Self {
            n_spins,
            n_max_photons,
            params,
            ..Self::default()
        }
    }

    /// `2^N (n_max + 1)`, or `None` on overflow.
    pub fn dimension(&self) -> Option<usize> {
        if self.n_spins > MAX_SPINS {
            return None;
        }
        (1usize << self.n_spins).checked_mul(self.n_max_photons.checked_add(1)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let bad = |m: String| Err(Error::InvalidEdConfig(m));
        if self.n_spins == 0 || self.n_spins > MAX_SPINS {
            return bad(format!("n_spins must be in 1..={MAX_SPINS}, got {}", self.n_spins));
        }
        if self.n_max_photons == 0 {
            return bad("n_max_photons must be >= 1".into());
        }
        if self.n_eigen == 0 {
            return bad("n_eigen must be >= 1".into());
        }
        if self.green_fn_depth == 0 {
            return bad("green_fn_depth must be >= 1".into());
        }
        if !(self.eigen_tolerance > 0.0) {
            return bad(format!("eigen_tolerance must be positive, got {}", self.eigen_tolerance));
        }
        let dim = self.dimension().ok_or(Error::DimensionBudgetExceeded {
            dim: usize::MAX,
            budget: self.dimension_budget,
        })?;
        if dim > self.dimension_budget {
            return Err(Error::DimensionBudgetExceeded {
                dim,
                budget: self.dimension_budget,
            });
        }
        Ok(())
    }

    pub fn with_n_spins(mut self, n: usize) -> Self {
        self.n_spins = n;
        self
    }

    pub fn with_params(mut self, params: ModelParams) -> Self {
        self.params = params;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_and_budget() {
        let c = EdConfig::new(14, 40, ModelParams::default());
        assert_eq!(c.dimension(), Some(16384 * 41));
        assert!(c.validate().is_ok());
        let mut small = c;
        small.dimension_budget = 1000;
        assert!(matches!(
            small.validate(),
            Err(Error::DimensionBudgetExceeded { dim: 671_744, budget: 1000 })
        ));
    }

    #[test]
    fn rejects_bad_fields() {
        let p = ModelParams::default();
        assert!(EdConfig::new(0, 4, p).validate().is_err());
        assert!(EdConfig::new(3, 0, p).validate().is_err());
        assert!(EdConfig::new(64, 4, p).validate().is_err());
    }
}
