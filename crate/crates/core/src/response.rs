//! Thermodynamic-limit linear response of the cavity.
//!
//! The bare matter response to the collective `sigma^x` is
//!
//! ```text
//! chi0(z) = -32 J^2 <sin^2 k / (eps_k (z^2 - 4 eps_k^2))> = -8 <eta_k^2 eps_k / (z^2 - 4 eps_k^2)>
//! ```
//!
//! with `z = omega + i eta`. Photon exchange dresses it through
//! `V(z) = 2 lambda^2 Omega / (z^2 - Omega^2)`, and the photon propagator
//! follows from the Dyson form `D = D0 - lambda^2 D0 chi D0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{self, MeanFieldSolution};
use crate::error::{Error, Result};
use crate::model::{band_edges, BandEdges, BandSamples, EffectiveField, ModelParams};
use crate::par;

/// Threshold on `|1 + V chi0|` below which a grid frequency sits on a pole.
pub const POLE_TOL: f64 = 1e-12;

/// Precomputed band data for repeated evaluation of `chi0` and `F`.
///
/// Stores, per folded grid point, `w_k eta_k^2 eps_k` and `4 eps_k^2`.
#[derive(Debug, Clone)]
pub struct ResponseKernel {
    terms: Vec<(f64, f64)>,
    edges: BandEdges,
    lambda: f64,
    omega_cavity: f64,
    broadening: f64,
}

impl ResponseKernel {
    pub fn new(eff: &EffectiveField, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let band = BandSamples::new(eff, params);
        band.require_gapped()?;
        let terms = band
            .samples()
            .iter()
            .filter(|s| s.sin_sq > 0.0)
            .map(|s| (s.weight * s.eta_sq * s.eps, 4.0 * s.eps * s.eps))
            .collect();
        Ok(Self {
            terms,
            edges: band_edges(eff, params),
            lambda: params.lambda,
            omega_cavity: params.omega_cavity,
            broadening: params.broadening,
        })
    }

    pub fn edges(&self) -> BandEdges {
        self.edges
    }

    fn z(&self, omega: f64) -> Complex64 {
        Complex64::new(omega, self.broadening)
    }

    pub fn chi0(&self, omega: f64) -> Complex64 {
        let z = self.z(omega);
        let z2 = z * z;
        let sum = self
            .terms
            .iter()
            .fold(Complex64::default(), |acc, &(c, e)| acc + c / (z2 - e));
        -8.0 * sum
    }

    pub fn induced_interaction(&self, omega: f64) -> Complex64 {
        let z = self.z(omega);
        let om = self.omega_cavity;
        2.0 * self.lambda * self.lambda * om / (z * z - om * om)
    }

    pub fn dressed_chi(&self, omega: f64) -> DressedChi {
        dress(self.chi0(omega), self.induced_interaction(omega))
    }

    /// `D(z) = (z + Omega - lambda^2 chi0) / (z^2 - Omega^2 + 2 lambda^2 Omega chi0)`,
    /// algebraically equal to the Dyson form but free of the cancellation
    /// between `D0` and the correction at `omega = Omega`.
    pub fn photon_propagator(&self, omega: f64) -> Complex64 {
        let z = self.z(omega);
        let chi0 = self.chi0(omega);
        let om = self.omega_cavity;
        let l2 = self.lambda * self.lambda;
        (z + om - l2 * chi0) / (z * z - om * om + 2.0 * l2 * om * chi0)
    }

    /// Real pole function on the real axis, outside the band.
    pub fn pole_function(&self, omega: f64) -> Result<f64> {
        self.check_outside(omega)?;
        Ok(self.pole_function_unchecked(omega))
    }

    fn check_outside(&self, omega: f64) -> Result<()> {
        if self.edges.contains(omega) {
            return Err(Error::OmegaInsideBand {
                omega,
                lower: self.edges.lower,
                upper: self.edges.upper,
            });
        }
        Ok(())
    }

    fn pole_function_unchecked(&self, omega: f64) -> f64 {
        let w2 = omega * omega;
        let sum: f64 = self.terms.iter().map(|&(c, e)| c / (w2 - e)).sum();
        let om = self.omega_cavity;
        w2 - om * om - 16.0 * self.lambda * self.lambda * om * sum
    }

    /// `dF/domega = 2 omega (1 + 16 lambda^2 Omega <eta^2 eps / (omega^2 - 4 eps^2)^2>)`.
    fn pole_function_derivative(&self, omega: f64) -> f64 {
        let w2 = omega * omega;
        let sum: f64 = self.terms.iter().map(|&(c, e)| c / (w2 - e).powi(2)).sum();
        2.0 * omega * (1.0 + 16.0 * self.lambda * self.lambda * self.omega_cavity * sum)
    }

    /// `4 lambda^2 <eta_k^2 / eps_k>`, the right-hand side of the static
    /// existence condition `Omega > 4 lambda^2 <eta^2/eps>`.
    pub fn threshold(&self) -> f64 {
        let sum: f64 = self.terms.iter().map(|&(c, e)| c / (0.25 * e)).sum();
        4.0 * self.lambda * self.lambda * sum
    }
}

/// `chi0` as a Brillouin-zone trapezoid average on the `n_k` grid.
pub fn chi0_integral(omega: f64, eff: &EffectiveField, params: &ModelParams) -> Result<Complex64> {
    Ok(ResponseKernel::new(eff, params)?.chi0(omega))
}

/// `chi0` as an explicit sum over the momenta of a ring of `n_spins` sites,
/// `-(32 J^2 / N) sum_k sin^2 k / (eps_k (z^2 - 4 eps_k^2))`.
///
/// Uses the antiperiodic grid `k = 2 pi (m + 1/2) / N`, the sector of the
/// even-fermion-parity ground state, which never contains `k = 0` or `pi`.
pub fn chi0_finite_sum(
    omega: f64,
    eff: &EffectiveField,
    params: &ModelParams,
    n_spins: usize,
) -> Result<Complex64> {
    params.validate()?;
    if n_spins < 2 || n_spins % 2 != 0 {
        return Err(Error::InvalidParams(format!(
            "n_spins must be even and >= 2, got {n_spins}"
        )));
    }
    let j = params.j;
    let w = eff.omega_x_tilde();
    let z = Complex64::new(omega, params.broadening);
    let z2 = z * z;
    let n = n_spins as f64;
    let mut sum = Complex64::default();
    for m in 0..n_spins {
        let k = 2.0 * std::f64::consts::PI * (m as f64 + 0.5) / n;
        let eps = crate::model::dispersion_raw(k, w, j);
        if !(eps > 0.0) {
            return Err(Error::GaplessDispersion { k, omega_x_tilde: w });
        }
        let s = k.sin();
        sum += s * s / (eps * (z2 - 4.0 * eps * eps));
    }
    Ok(-32.0 * j * j / n * sum)
}

/// Photon-mediated spin-spin interaction `2 lambda^2 Omega / (z^2 - Omega^2)`.
pub fn induced_interaction(omega: f64, params: &ModelParams) -> Complex64 {
    let z = Complex64::new(omega, params.broadening);
    let om = params.omega_cavity;
    2.0 * params.lambda * params.lambda * om / (z * z - om * om)
}

/// Dressed response together with the pole flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressedChi {
    pub chi: Complex64,
    /// `|1 + V chi0| < POLE_TOL`: the frequency sits on a collective pole
    /// and `chi` is not meaningful.
    pub pole_on_grid: bool,
}

fn dress(chi0: Complex64, v: Complex64) -> DressedChi {
    let denom = 1.0 + v * chi0;
    DressedChi {
        chi: chi0 / denom,
        pole_on_grid: denom.norm() < POLE_TOL,
    }
}

pub fn dressed_chi(omega: f64, eff: &EffectiveField, params: &ModelParams) -> Result<DressedChi> {
    Ok(ResponseKernel::new(eff, params)?.dressed_chi(omega))
}

pub fn photon_propagator(omega: f64, eff: &EffectiveField, params: &ModelParams) -> Result<Complex64> {
    Ok(ResponseKernel::new(eff, params)?.photon_propagator(omega))
}

/// The propagator evaluated literally as `D0 - lambda^2 D0 chi D0`, with
/// `D0 = 1/(z - Omega)`. Kept as an independent route to cross-check
/// [`photon_propagator`].
pub fn photon_propagator_dyson(
    omega: f64,
    eff: &EffectiveField,
    params: &ModelParams,
) -> Result<Complex64> {
    let chi = dressed_chi(omega, eff, params)?.chi;
    let d0 = 1.0 / Complex64::new(omega - params.omega_cavity, params.broadening);
    Ok(d0 - params.lambda * params.lambda * d0 * chi * d0)
}

pub fn pole_function(omega: f64, eff: &EffectiveField, params: &ModelParams) -> Result<f64> {
    ResponseKernel::new(eff, params)?.pole_function(omega)
}

/// Responses on a frequency grid for one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub omegas: Vec<f64>,
    pub chi0: Vec<Complex64>,
    pub chi: Vec<Complex64>,
    #[serde(rename = "D")]
    pub d: Vec<Complex64>,
    pub pole_on_grid: Vec<bool>,
    pub params: ModelParams,
    pub effective_field: EffectiveField,
    pub mean_field: Option<MeanFieldSolution>,
}

impl SpectralGrid {
    pub fn compute(omegas: &[f64], eff: &EffectiveField, params: &ModelParams) -> Result<Self> {
        let kernel = ResponseKernel::new(eff, params)?;
        let rows = par::map_indexed(omegas.len(), |i| {
            let w = omegas[i];
            let chi0 = kernel.chi0(w);
            let dressed = dress(chi0, kernel.induced_interaction(w));
            (chi0, dressed, kernel.photon_propagator(w))
        });
        Ok(Self {
            omegas: omegas.to_vec(),
            chi0: rows.iter().map(|r| r.0).collect(),
            chi: rows.iter().map(|r| r.1.chi).collect(),
            d: rows.iter().map(|r| r.2).collect(),
            pole_on_grid: rows.iter().map(|r| r.1.pole_on_grid).collect(),
            params: *params,
            effective_field: *eff,
            mean_field: None,
        })
    }

    /// Photon spectral function `-Im D / pi`.
    pub fn spectral_function(&self) -> Vec<f64> {
        self.d
            .iter()
            .map(|d| -d.im / std::f64::consts::PI)
            .collect()
    }
}

/// Spectral map over a coupling sweep: one [`SpectralGrid`] per `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMap {
    pub lambdas: Vec<f64>,
    pub omegas: Vec<f64>,
    pub columns: Vec<SpectralGrid>,
}

impl SpectralMap {
    /// `-Im D / pi` as a dense matrix, rows indexed by frequency and
    /// columns by coupling.
    pub fn intensity_matrix(&self) -> Vec<Vec<f64>> {
        let cols: Vec<Vec<f64>> = self.columns.iter().map(|c| c.spectral_function()).collect();
        (0..self.omegas.len())
            .map(|i| cols.iter().map(|c| c[i]).collect())
            .collect()
    }
}

fn check_monotone(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() || !grid.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::InvalidParams(format!(
            "{name} grid must be nonempty and strictly increasing"
        )));
    }
    Ok(())
}

/// Computes the photon response for every coupling in `lambda_grid`. With
/// `use_mean_field`, each column first solves the equilibrium problem and
/// uses its self-consistent field; otherwise the bare `omega_x` is used.
pub fn spectral_map(
    lambda_grid: &[f64],
    omega_grid: &[f64],
    params: &ModelParams,
    use_mean_field: bool,
) -> Result<SpectralMap> {
    params.validate()?;
    check_monotone("lambda", lambda_grid)?;
    check_monotone("omega", omega_grid)?;
    let columns = par::try_map_indexed(lambda_grid.len(), |i| {
        let lambda = lambda_grid[i];
        let p = params.with_lambda(lambda);
        let column = || -> Result<SpectralGrid> {
            if use_mean_field {
                let sol = equilibrium::minimize(&p)?;
                let eff = sol.effective_field(&p);
                let mut g = SpectralGrid::compute(omega_grid, &eff, &p)?;
                g.mean_field = Some(sol);
                Ok(g)
            } else {
                SpectralGrid::compute(omega_grid, &EffectiveField::bare(&p), &p)
            }
        };
        column().map_err(|e| Error::Column {
            lambda,
            source: Box::new(e),
        })
    })?;
    Ok(SpectralMap {
        lambdas: lambda_grid.to_vec(),
        omegas: omega_grid.to_vec(),
        columns,
    })
}

/// A local maximum of sampled data, refined by a parabola through the
/// three surrounding samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub omega: f64,
    pub height: f64,
    pub index: usize,
}

/// Interior local maxima of `values` that exceed `min_height`, in order of
/// increasing frequency.
pub fn find_peaks(omegas: &[f64], values: &[f64], min_height: f64) -> Vec<Peak> {
    let n = omegas.len().min(values.len());
    let mut peaks = Vec::new();
    for i in 1..n.saturating_sub(1) {
        let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
        if !(b > a && b >= c && b > min_height) {
            continue;
        }
        let (x0, x1, x2) = (omegas[i - 1], omegas[i], omegas[i + 1]);
        let num = (x1 - x0).powi(2) * (b - c) - (x1 - x2).powi(2) * (b - a);
        let den = (x1 - x0) * (b - c) - (x1 - x2) * (b - a);
        let omega = if den != 0.0 {
            (x1 - 0.5 * num / den).clamp(x0, x2)
        } else {
            x1
        };
        peaks.push(Peak {
            omega,
            height: b,
            index: i,
        });
    }
    peaks
}

/// Reading of the `4J^2` term in the two-oscillator fit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitConvention {
    /// `(4J)^2`: the uncoupled frequencies are `Omega` and `4J`.
    #[default]
    FourJSquared,
    /// Literal `4 J^2`.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolaritonFit {
    pub omega_plus: f64,
    pub omega_minus: f64,
}

/// Two coupled oscillators of frequencies `Omega` and `4J`:
/// `2 Omega_pm^2 = a + Omega^2 pm sqrt((a - Omega^2)^2 + 32 lambda^2 J Omega)`
/// with `a` set by `convention`.
pub fn polariton_fit(params: &ModelParams, convention: FitConvention) -> Result<PolaritonFit> {
    params.validate()?;
    let j = params.j;
    let om = params.omega_cavity;
    let a = match convention {
        FitConvention::FourJSquared => 16.0 * j * j,
        FitConvention::Literal => 4.0 * j * j,
    };
    let root = ((a - om * om).powi(2) + 32.0 * params.lambda.powi(2) * j * om).sqrt();
    let two_plus = a + om * om + root;
    let two_minus = a + om * om - root;
    let omega_plus = (0.5 * two_plus).sqrt();
    if two_minus < 0.0 {
        return Err(Error::NegativeDiscriminantForLowerBranch {
            omega_plus,
            two_omega_minus_sq: two_minus,
        });
    }
    Ok(PolaritonFit {
        omega_plus,
        omega_minus: (0.5 * two_minus).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BandSide {
    #[serde(rename = "below-band")]
    Below,
    #[serde(rename = "above-band")]
    Above,
}

impl std::fmt::Display for BandSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Below => f.write_str("below-band"),
            Self::Above => f.write_str("above-band"),
        }
    }
}

/// Discrete root of the pole function outside the two-excitation band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundState {
    pub omega_b: f64,
    pub side: BandSide,
    /// `1 / |F'(omega_b)|`.
    pub residue_proxy: f64,
    pub gap_to_edge: f64,
}

/// Standoff from the band edges, in units of `Omega`.
const EDGE_STANDOFF: f64 = 1e-6;
/// Root tolerance on `|F|`, in units of `Omega^2`.
const ROOT_TOL: f64 = 1e-10;

fn bisect_root(kernel: &ResponseKernel, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    // F is increasing in omega on each side of the band.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = kernel.pole_function_unchecked(mid);
        if f.abs() < tol || mid <= lo || mid >= hi {
            return mid;
        }
        if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Roots of the pole function below and above the band.
///
/// `F` increases monotonically with `omega` on each side, so each side has
/// at most one root. Below the band a root exists iff `F(0) < 0 < F(lower)`;
/// `F(0) < 0` is the static condition `Omega > 4 lambda^2 <eta^2/eps>`.
/// Above the band a root exists iff `F(upper) < 0`.
pub fn find_bound_states(eff: &EffectiveField, params: &ModelParams) -> Result<Vec<BoundState>> {
    let kernel = ResponseKernel::new(eff, params)?;
    Ok(bound_states_with(&kernel, params))
}

pub(crate) fn bound_states_with(kernel: &ResponseKernel, params: &ModelParams) -> Vec<BoundState> {
    let om = params.omega_cavity;
    let delta = EDGE_STANDOFF * om;
    let tol = ROOT_TOL * om * om;
    let edges = kernel.edges();
    let mut out = Vec::new();

    let below_hi = edges.lower - delta;
    if below_hi > 0.0 {
        let f0 = kernel.pole_function_unchecked(0.0);
        let f1 = kernel.pole_function_unchecked(below_hi);
        if f0 < 0.0 && f1 > 0.0 {
            let w = bisect_root(kernel, 0.0, below_hi, tol);
            out.push(BoundState {
                omega_b: w,
                side: BandSide::Below,
                residue_proxy: 1.0 / kernel.pole_function_derivative(w).abs(),
                gap_to_edge: edges.lower - w,
            });
        }
    }

    let above_lo = edges.upper + delta;
    if kernel.pole_function_unchecked(above_lo) < 0.0 {
        let mut hi = edges.upper + 10.0 * om;
        while kernel.pole_function_unchecked(hi) <= 0.0 {
            hi *= 2.0;
        }
        let w = bisect_root(kernel, above_lo, hi, tol);
        out.push(BoundState {
            omega_b: w,
            side: BandSide::Above,
            residue_proxy: 1.0 / kernel.pole_function_derivative(w).abs(),
            gap_to_edge: w - edges.upper,
        });
    }
    out
}

/// Static existence test `Omega > 4 lambda^2 <eta_k^2 / eps_k>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCondition {
    pub omega_cavity: f64,
    pub threshold: f64,
    pub satisfied: bool,
}

pub fn threshold_condition(eff: &EffectiveField, params: &ModelParams) -> Result<ThresholdCondition> {
    let t = ResponseKernel::new(eff, params)?.threshold();
    Ok(ThresholdCondition {
        omega_cavity: params.omega_cavity,
        threshold: t,
        satisfied: params.omega_cavity > t,
    })
}
