//! Exact diagonalization of the finite chain coupled to a truncated cavity.

pub mod config;
pub mod green;
pub mod hamiltonian;
pub(crate) mod lanczos;
pub mod scan;

use serde::{Deserialize, Serialize};

pub use config::{Boundary, EdConfig};
pub use green::{photon_green_function, PhotonSpectrum, SpectralPole};
pub use hamiltonian::{build_hamiltonian, EdHamiltonian};
pub use scan::{finite_size_scan, FiniteSizeScan, PoleWindow, ScanCell};

use crate::error::Result;
use crate::par;
use lanczos::Operator;

/// Photon occupation of the top Fock level below which the cutoff is
/// considered adequate.
pub const TAIL_WEIGHT_TOL: f64 = 1e-8;

/// Relative energy window defining a degenerate ground manifold.
pub const DEGENERACY_TOL: f64 = 1e-8;

const START_SEED: u64 = 0x5eed_0001;

struct Sector<'a> {
    h: &'a EdHamiltonian,
    parity: Option<f64>,
}

impl Operator for Sector<'_> {
    fn dim(&self) -> usize {
        self.h.dim()
    }
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        self.h.apply(v, out);
    }
    fn restrict(&self, v: &mut [f64]) {
        if let Some(p) = self.parity {
            self.h.project_parity(v, p);
        }
    }
}

/// Start vector with positive overlap on the ground state.
///
/// For `omega_x >= 0` the basis rotation `(-1)^(n + #down)` makes every
/// off-diagonal element nonpositive, so the ground state has that sign
/// pattern; for `omega_x <= 0` no rotation is needed.
fn perron_frobenius_start(h: &EdHamiltonian, omega_x: f64) -> Vec<f64> {
    if omega_x > 0.0 {
        par::map_indexed(h.dim(), |i| h.parity_sign(i))
    } else {
        vec![1.0; h.dim()]
    }
}

/// Ground-state expectation values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundObservables {
    pub energy: f64,
    /// `<sum_j sigma^x_j> / N`.
    pub m_x: f64,
    /// `sqrt|<sigma^z_0 sigma^z_{N/2}>|`.
    pub m_z_proxy: f64,
    /// `<a^dag a> / N`.
    pub n_ph_per_spin: f64,
    /// Probability of the top Fock level.
    pub tail_weight: f64,
    /// Eigenvalue of `(-1)^n prod sigma^z` when the state was computed in
    /// a definite sector.
    pub parity: Option<f64>,
}

fn observables(h: &EdHamiltonian, v: &[f64], energy: f64, parity: Option<f64>) -> GroundObservables {
    let n = h.n_spins();
    let mut xv = vec![0.0; v.len()];
    h.apply_collective_x(v, &mut xv);
    let m_x = par::dot(v, &xv) / n as f64;
    let far = n / 2;
    let zz = par::map_indexed(v.len(), |i| {
        let (_, s) = h.decompose(i);
        let sign = if (s ^ (s >> far)) & 1 == 0 { 1.0 } else { -1.0 };
        sign * v[i] * v[i]
    })
    .iter()
    .sum::<f64>();
    let photons = par::map_indexed(v.len(), |i| h.decompose(i).0 as f64 * v[i] * v[i])
        .iter()
        .sum::<f64>();
    let top = h.n_max_photons();
    let tail = par::map_indexed(v.len(), |i| if h.decompose(i).0 == top { v[i] * v[i] } else { 0.0 })
        .iter()
        .sum::<f64>();
    GroundObservables {
        energy,
        m_x,
        m_z_proxy: zz.abs().sqrt(),
        n_ph_per_spin: photons / n as f64,
        tail_weight: tail,
        parity,
    }
}

/// Lowest state of one parity sector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorGround {
    pub parity: f64,
    pub observables: GroundObservables,
}

/// Low-lying spectrum and ground-state data of one finite-size problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdResult {
    pub n_spins: usize,
    pub dimension: usize,
    /// Ascending eigenvalues.
    pub energies: Vec<f64>,
    pub residuals: Vec<f64>,
    pub matvecs: usize,
    /// Every state within the degenerate ground manifold.
    pub ground_states: Vec<GroundObservables>,
    /// Equal-weight average over `ground_states`.
    pub ground_observables: GroundObservables,
    /// Per-sector ground states when the parity `(-1)^n prod sigma^z` is
    /// conserved (`omega_x = 0`).
    pub sectors: Vec<SectorGround>,
    /// Largest top-level photon occupation among the ground states.
    pub tail_weight: f64,
    pub cutoff_adequate: bool,
    #[serde(skip)]
    pub(crate) ground_vectors: Vec<Vec<f64>>,
}

fn average(states: &[GroundObservables]) -> GroundObservables {
    let n = states.len() as f64;
    let sum = |f: fn(&GroundObservables) -> f64| states.iter().map(f).sum::<f64>() / n;
    GroundObservables {
        energy: sum(|s| s.energy),
        m_x: sum(|s| s.m_x),
        m_z_proxy: sum(|s| s.m_z_proxy),
        n_ph_per_spin: sum(|s| s.n_ph_per_spin),
        tail_weight: sum(|s| s.tail_weight),
        parity: if states.len() == 1 { states[0].parity } else { None },
    }
}

/// Lowest `n_eigen` eigenpairs and ground-state observables.
///
/// At `omega_x = 0` each parity sector is solved separately and the
/// spectra merged, which keeps the two nearly degenerate superradiant
/// states apart.
pub fn ground_state(cfg: &EdConfig) -> Result<EdResult> {
    let h = build_hamiltonian(cfg)?;
    ground_state_of(&h, cfg)
}

pub(crate) fn ground_state_of(h: &EdHamiltonian, cfg: &EdConfig) -> Result<EdResult> {
    let omega_x = cfg.params.omega_x;
    let parities: Vec<Option<f64>> = if omega_x == 0.0 {
        vec![Some(1.0), Some(-1.0)]
    } else {
        vec![None]
    };
    let mut states: Vec<(f64, Vec<f64>, f64, Option<f64>)> = Vec::new();
    let mut matvecs = 0;
    let mut sectors = Vec::new();
    for (idx, parity) in parities.iter().enumerate() {
        let op = Sector { h, parity: *parity };
        let run = lanczos::lowest_eigenpairs(
            &op,
            cfg.n_eigen,
            perron_frobenius_start(h, omega_x),
            cfg.eigen_tolerance,
            START_SEED + 1000 * idx as u64,
        )?;
        matvecs += run.matvecs;
        if let (Some(p), Some(first)) = (parity, run.pairs.first()) {
            sectors.push(SectorGround {
                parity: *p,
                observables: observables(h, &first.vector, first.value, Some(*p)),
            });
        }
        for pair in run.pairs {
            states.push((pair.value, pair.vector, pair.residual, *parity));
        }
    }
    states.sort_by(|a, b| a.0.total_cmp(&b.0));
    states.truncate(cfg.n_eigen);

    let e0 = states[0].0;
    let window = DEGENERACY_TOL * e0.abs().max(1.0);
    let ground: Vec<&(f64, Vec<f64>, f64, Option<f64>)> =
        states.iter().filter(|s| s.0 - e0 <= window).collect();
    let ground_states: Vec<GroundObservables> = ground
        .iter()
        .map(|s| observables(h, &s.1, s.0, s.3))
        .collect();
    let tail = ground_states.iter().map(|g| g.tail_weight).fold(0.0, f64::max);
    Ok(EdResult {
        n_spins: cfg.n_spins,
        dimension: h.dim(),
        energies: states.iter().map(|s| s.0).collect(),
        residuals: states.iter().map(|s| s.2).collect(),
        matvecs,
        ground_observables: average(&ground_states),
        ground_vectors: ground.iter().map(|s| s.1.clone()).collect(),
        ground_states,
        sectors,
        tail_weight: tail,
        cutoff_adequate: tail < TAIL_WEIGHT_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::oracle;

    fn cfg(n: usize, n_max: usize, p: ModelParams) -> EdConfig {
        EdConfig::new(n, n_max, p)
    }

    #[test]
    fn single_spin_decoupled() {
        let p = ModelParams::default().with_omega_x(0.3);
        let h = build_hamiltonian(&cfg(1, 1, p)).unwrap();
        let m = h.to_dense();
        let eig = nalgebra::SymmetricEigen::new(m);
        let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        v.sort_by(|a, b| a.total_cmp(b));
        let expect = [-0.15, 0.15, 0.85, 1.15];
        for (a, b) in v.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn single_bond_ground_energy() {
        let mut c = cfg(2, 2, ModelParams::default());
        c.n_eigen = 2;
        let r = ground_state(&c).unwrap();
        assert!((r.energies[0] + 0.25).abs() < 1e-12);
        assert!((r.energies[1] + 0.25).abs() < 1e-12);
        assert_eq!(r.ground_states.len(), 2);
    }

    #[test]
    fn hermitian_on_random_vectors() {
        let p = ModelParams::default().with_omega_x(0.37).with_lambda(0.41);
        let h = build_hamiltonian(&cfg(5, 6, p)).unwrap();
        let u = lanczos::random_vector(h.dim(), 1);
        let v = lanczos::random_vector(h.dim(), 2);
        let a = par::dot(&u, &h.apply_new(&v));
        let b = par::dot(&h.apply_new(&u), &v);
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn matches_dense_kronecker_construction() {
        let p = ModelParams::default().with_omega_x(0.3).with_lambda(0.45);
        for boundary in [Boundary::Open, Boundary::Periodic] {
            let mut c = cfg(3, 4, p);
            c.boundary = boundary;
            let h = build_hamiltonian(&c).unwrap().to_dense();
            let d = oracle::dense_hamiltonian(&c);
            assert!((h - d).abs().max() < 1e-14);
        }
    }

    #[test]
    fn nonzeros_per_row_bound() {
        let p = ModelParams::default().with_omega_x(0.3).with_lambda(0.45);
        let h = build_hamiltonian(&cfg(4, 3, p)).unwrap();
        let m = h.to_dense();
        for r in 0..m.nrows() {
            let nnz = m.row(r).iter().filter(|x| **x != 0.0).count();
            assert!(nnz <= h.max_row_nonzeros());
        }
    }

    #[test]
    fn parity_commutes_at_zero_field() {
        let p = ModelParams::default().with_lambda(0.6);
        let h = build_hamiltonian(&cfg(4, 5, p)).unwrap();
        let mut v = lanczos::random_vector(h.dim(), 9);
        h.project_parity(&mut v, -1.0);
        let mut hv = h.apply_new(&v);
        let before = hv.clone();
        h.project_parity(&mut hv, -1.0);
        assert_eq!(hv, before);
    }

    #[test]
    fn decoupled_vacuum_has_no_photons() {
        let p = ModelParams::default().with_omega_x(0.2);
        let r = ground_state(&cfg(6, 3, p)).unwrap();
        assert!(r.ground_observables.n_ph_per_spin < 1e-20);
    }

    #[test]
    fn open_chain_free_fermion_energy() {
        for (n, wx) in [(6, 0.3), (9, 0.7), (10, -0.45)] {
            let p = ModelParams::default().with_omega_x(wx);
            let r = ground_state(&cfg(n, 1, p)).unwrap();
            let exact = oracle::open_chain_ground_energy(n, wx, 0.25);
            assert!((r.energies[0] - exact).abs() < 1e-10, "{n} {wx}");
        }
    }

    #[test]
    fn cutoff_monotonicity() {
        let p = ModelParams::default().with_omega_x(0.1).with_lambda(0.6);
        let mut prev = f64::INFINITY;
        for n_max in [2, 4, 8, 16] {
            let e = ground_state(&cfg(4, n_max, p)).unwrap().energies[0];
            assert!(e <= prev + 1e-12);
            prev = e;
        }
    }

    #[test]
    fn superradiant_sectors_reported() {
        let p = ModelParams::default().with_lambda((0.3f64).sqrt());
        let r = ground_state(&cfg(6, 30, p)).unwrap();
        assert_eq!(r.sectors.len(), 2);
        let split = (r.sectors[0].observables.energy - r.sectors[1].observables.energy).abs();
        assert!(split < 2e-2);
        assert!(r.sectors.iter().all(|s| s.observables.n_ph_per_spin > 0.2));
        assert!(r.ground_observables.n_ph_per_spin > 0.05);
    }
}
