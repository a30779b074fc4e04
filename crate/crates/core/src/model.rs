//! Model parameters and the single-particle structure of the effective
//! transverse-field Ising chain: dispersion, Bogoliubov coupling, band edges
//! and Brillouin-zone sampling shared by every other module.
//!
//! Units: all energies are in units of the cavity frequency unless the caller
//! rescales. Nothing here enforces that; it is a convention of the CLI.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Couplings of the Dicke-Ising Hamiltonian plus the numerical controls used
/// by the thermodynamic-limit solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Classical transverse field `omega_x` (the Zeeman term is `omega_x/2 * sigma^x`).
    pub omega_x: f64,
    /// Ising coupling `J > 0`.
    pub j: f64,
    /// Collective light-matter coupling `lambda >= 0`.
    pub lambda: f64,
    /// Cavity frequency `Omega > 0`.
    pub omega_cavity: f64,
    /// Positive imaginary frequency shift standing in for `+i0`.
    pub broadening: f64,
    /// Number of points of the periodic momentum grid (even, >= 2).
    pub n_k: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            omega_x: 0.0,
            j: 0.25,
            lambda: 0.0,
            omega_cavity: 1.0,
            broadening: 1e-3,
            n_k: 4096,
        }
    }
}

impl ModelParams {
    pub fn new(omega_x: f64, j: f64, lambda: f64, omega_cavity: f64) -> Result<Self> {
        let p = Self {
            omega_x,
            j,
            lambda,
            omega_cavity,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !self.omega_x.is_finite() {
            return bad(format!("omega_x must be finite, got {}", self.omega_x));
        }
        if !(self.j > 0.0 && self.j.is_finite()) {
            return bad(format!("J must be positive, got {}", self.j));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if !(self.omega_cavity > 0.0 && self.omega_cavity.is_finite()) {
            return bad(format!("cavity frequency must be positive, got {}", self.omega_cavity));
        }
        if !(self.broadening > 0.0 && self.broadening.is_finite()) {
            return bad(format!("broadening must be positive, got {}", self.broadening));
        }
        if self.n_k < 2 || self.n_k % 2 != 0 {
            return bad(format!("n_k must be even and >= 2, got {}", self.n_k));
        }
        Ok(())
    }

    /// `lambda^2 / Omega`, the coefficient of the cavity-induced mean field.
    pub fn lambda_sq_over_omega(&self) -> f64 {
        self.lambda * self.lambda / self.omega_cavity
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    /// Sets `lambda` from a target value of `lambda^2 / Omega`.
    pub fn with_lambda_sq_over_omega(mut self, value: f64) -> Self {
        self.lambda = (value.max(0.0) * self.omega_cavity).sqrt();
        self
    }

    pub fn with_omega_x(mut self, omega_x: f64) -> Self {
        self.omega_x = omega_x;
        self
    }

    pub fn with_n_k(mut self, n_k: usize) -> Self {
        self.n_k = n_k;
        self
    }

    pub fn with_broadening(mut self, eta: f64) -> Self {
        self.broadening = eta;
        self
    }
}

/// Transverse field felt by the spins once the cavity mean field is included,
/// `omega_x_tilde = omega_x - 4 lambda^2/Omega * m_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveField {
    omega_x_tilde: f64,
    m_x: f64,
}

impl EffectiveField {
    /// The bare field, `m_x = 0`.
    pub fn bare(params: &ModelParams) -> Self {
        Self {
            omega_x_tilde: params.omega_x,
            m_x: 0.0,
        }
    }

    /// The field generated by a transverse magnetization `m_x` in `[-1, 1]`.
    pub fn from_magnetization(m_x: f64, params: &ModelParams) -> Self {
        Self {
            omega_x_tilde: params.omega_x - 4.0 * params.lambda_sq_over_omega() * m_x,
            m_x,
        }
    }

    pub fn omega_x_tilde(&self) -> f64 {
        self.omega_x_tilde
    }

    pub fn m_x(&self) -> f64 {
        self.m_x
    }
}

/// Single-particle dispersion of the effective Ising chain,
/// `sqrt((2J)^2 + w^2 - 4 J w cos k)` with `w = omega_x_tilde`.
///
/// Evaluated in the cancellation-free form
/// `(2J - |w|)^2 + 8 J |w| s^2`, with `s = sin(k/2)` for `w >= 0` and
/// `s = cos(k/2)` for `w < 0`, so the gap stays accurate near criticality.
pub fn dispersion(k: f64, eff: &EffectiveField, params: &ModelParams) -> f64 {
    dispersion_raw(k, eff.omega_x_tilde, params.j)
}

pub(crate) fn dispersion_raw(k: f64, w: f64, j: f64) -> f64 {
    let two_j = 2.0 * j;
    let gap = two_j - w.abs();
    let s = if w >= 0.0 { (0.5 * k).sin() } else { (0.5 * k).cos() };
    (gap * gap + 8.0 * j * w.abs() * s * s).sqrt()
}

/// Bogoliubov pair amplitude `eta_k = 2 u_k v_k = 2J sin k / eps_k`.
pub fn bogoliubov_coupling(k: f64, eff: &EffectiveField, params: &ModelParams) -> Result<f64> {
    let eps = dispersion(k, eff, params);
    if !(eps > 0.0) {
        return Err(Error::GaplessDispersion {
            k,
            omega_x_tilde: eff.omega_x_tilde,
        });
    }
    Ok((2.0 * params.j * k.sin() / eps).clamp(-1.0, 1.0))
}

/// Edges of the zero-momentum two-excitation band `[2 eps_min, 2 eps_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandEdges {
    pub lower: f64,
    pub upper: f64,
}

impl BandEdges {
    pub fn contains(&self, omega: f64) -> bool {
        let w = omega.abs();
        w >= self.lower && w <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `lower = 2 |2J - |w||`, `upper = 2 (2J + |w|)`.
pub fn band_edges(eff: &EffectiveField, params: &ModelParams) -> BandEdges {
    let w = eff.omega_x_tilde.abs();
    BandEdges {
        lower: 2.0 * (2.0 * params.j - w).abs(),
        upper: 2.0 * (2.0 * params.j + w),
    }
}

/// The periodic momentum grid `k_m = 2 pi m / n`, `m = 0..n`.
pub fn k_grid(n: usize) -> Vec<f64> {
    (0..n).map(|m| 2.0 * PI * m as f64 / n as f64).collect()
}

/// One point of the reduced Brillouin-zone grid.
#[derive(Debug, Clone, Copy)]
pub struct BandSample {
    pub k: f64,
    /// Trapezoid weight; weights sum to one.
    pub weight: f64,
    pub eps: f64,
    pub sin_sq: f64,
    /// `eta_k^2 = 4 J^2 sin^2 k / eps_k^2`.
    pub eta_sq: f64,
}

/// Dispersion data on the periodic `n_k` grid, folded onto `k in [0, pi]`.
///
/// Every integrand appearing in the energy and the response functions is
/// even in `k`, so the `n_k`-point trapezoid rule over the full zone equals a
/// weighted sum over the `n_k/2 + 1` points in `[0, pi]`.
#[derive(Debug, Clone)]
pub struct BandSamples {
    samples: Vec<BandSample>,
    n_k: usize,
    gapless: Option<f64>,
    omega_x_tilde: f64,
}

impl BandSamples {
    pub fn new(eff: &EffectiveField, params: &ModelParams) -> Self {
        Self::with_field(eff.omega_x_tilde, params.j, params.n_k)
    }

    pub(crate) fn with_field(w: f64, j: f64, n_k: usize) -> Self {
        let half = n_k / 2;
        let mut gapless = None;
        let samples = (0..=half)
            .map(|m| {
                let k = 2.0 * PI * m as f64 / n_k as f64;
                let weight = if m == 0 || m == half { 1.0 } else { 2.0 } / n_k as f64;
                let eps = dispersion_raw(k, w, j);
                let s = k.sin();
                let sin_sq = if m == half { 0.0 } else { s * s };
                let eta_sq = if eps > 0.0 {
                    (4.0 * j * j * sin_sq / (eps * eps)).min(1.0)
                } else {
                    if gapless.is_none() {
                        gapless = Some(k);
                    }
                    f64::NAN
                };
                BandSample {
                    k,
                    weight,
                    eps,
                    sin_sq,
                    eta_sq,
                }
            })
            .collect();
        Self {
            samples,
            n_k,
            gapless,
            omega_x_tilde: w,
        }
    }

    pub fn samples(&self) -> &[BandSample] {
        &self.samples
    }

    pub fn n_k(&self) -> usize {
        self.n_k
    }

    /// Fails when some grid point has `eps_k = 0`.
    pub fn require_gapped(&self) -> Result<()> {
        match self.gapless {
            Some(k) => Err(Error::GaplessDispersion {
                k,
                omega_x_tilde: self.omega_x_tilde,
            }),
            None => Ok(()),
        }
    }

    /// Trapezoid average `(1/n_k) sum_k f(k)` of an even integrand.
    pub fn mean<T, F>(&self, f: F) -> T
    where
        T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
        F: Fn(&BandSample) -> T,
    {
        self.samples
            .iter()
            .fold(T::default(), |acc, s| acc + f(s) * s.weight)
    }

    /// Average together with a Richardson-style error estimate: the
    /// difference to the same rule on every other grid point (`n_k/2`
    /// points). Requires `n_k` divisible by 4; otherwise the estimate is NaN.
    pub fn mean_with_error<F>(&self, f: F) -> QuadratureEstimate
    where
        F: Fn(&BandSample) -> f64,
    {
        let half = self.n_k / 2;
        let mut fine = 0.0;
        let mut coarse = 0.0;
        for (m, s) in self.samples.iter().enumerate() {
            let v = f(s);
            fine += v * s.weight;
            if self.n_k % 4 == 0 && m % 2 == 0 {
                let w = if m == 0 || m == half { 2.0 } else { 4.0 } / self.n_k as f64;
                coarse += v * w;
            }
        }
        let error = if self.n_k % 4 == 0 {
            (fine - coarse).abs()
        } else {
            f64::NAN
        };
        QuadratureEstimate { value: fine, error }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureEstimate {
    pub value: f64,
    pub error: f64,
}

/// Real-space profile of the Bogoliubov pair coupling on a ring of
/// `n_sites` spins.
///
/// Since `eta_k` is real and odd, `eta_j = (1/N) sum_k eta_k e^{ikj}` is purely
/// imaginary, `eta_j = i s_j`. The profile stores the real sequence
/// `s_j = (1/N) sum_k eta_k sin(kj)` for `j = -N/2 ..= N/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpurityProfile {
    pub sites: Vec<i64>,
    pub values: Vec<f64>,
    /// Momentum grid `k_m = 2 pi m / N` and `eta_k` on it.
    pub momenta: Vec<f64>,
    pub eta_k: Vec<f64>,
}

impl ImpurityProfile {
    pub fn value_at(&self, site: i64) -> Option<f64> {
        let offset = self.sites.first()?;
        self.values.get((site - offset) as usize).copied()
    }
}

pub fn coupling_profile_real_space(
    eff: &EffectiveField,
    params: &ModelParams,
    n_sites: usize,
) -> Result<ImpurityProfile> {
    if n_sites < 2 || n_sites % 2 != 0 {
        return Err(Error::InvalidParams(format!(
            "impurity profile needs an even number of sites >= 2, got {n_sites}"
        )));
    }
    let momenta = k_grid(n_sites);
    let eta_k = momenta
        .iter()
        .map(|&k| bogoliubov_coupling(k, eff, params))
        .collect::<Result<Vec<_>>>()?;

    // The inverse FFT computes sum_m x_m e^{+2 pi i m j / N}.
    let mut buf: Vec<Complex64> = eta_k.iter().map(|&e| Complex64::new(e, 0.0)).collect();
    FftPlanner::new().plan_fft_inverse(n_sites).process(&mut buf);
    let scale = 1.0 / n_sites as f64;

    let half = (n_sites / 2) as i64;
    let sites: Vec<i64> = (-half..=half).collect();
    let values = sites
        .iter()
        .map(|&j| {
            if j == 0 || j.abs() == half {
                // Exact zeros: sin(0) = 0 and sin(pi m) = 0 termwise.
                0.0
            } else {
                buf[j.rem_euclid(n_sites as i64) as usize].im * scale
            }
        })
        .collect();
    Ok(ImpurityProfile {
        sites,
        values,
        momenta,
        eta_k,
    })
}
