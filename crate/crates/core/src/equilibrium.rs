//! Variational mean-field ground state and the equilibrium phase diagram.
//!
//! The cavity is replaced by a coherent field fixed by the transverse
//! magnetization, leaving a transverse-field Ising chain in the effective
//! field `omega_x - 4 lambda^2/Omega * m_x`. The energy per spin
//!
//! ```text
//! e0(m) = lambda^2/Omega m^2 - 1/2 <eps_k(m)>_BZ
//! ```
//!
//! is minimized globally over `m in [-1, 1]`.
//!
//! Sign convention: the Zeeman term is `+omega_x/2 sigma^x`, so for
//! `omega_x > 0` the spins anti-align with the field and the returned `m_x`
//! is negative. At `omega_x = 0` in the superradiant phase the two symmetric
//! minima are degenerate; the nonnegative one is returned and flagged.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EffectiveField, ModelParams};
use crate::par;

/// Points of the uniform coarse scan over `m in [-1, 1]`.
pub const SCAN_POINTS: usize = 201;

/// Half-width and resolution of the extra scan placed around each
/// magnetization where `|omega_x_tilde| = 2J`. The energy is non-analytic
/// only there, and near-critical double minima can sit closer together than
/// the coarse spacing.
const CRITICAL_WINDOW: f64 = 0.05;
const CRITICAL_SCAN_POINTS: usize = 401;

/// A refined jump in `m_x` larger than this marks a first-order transition.
/// Equal to the spacing of the coarse scan.
pub const JUMP_THRESHOLD: f64 = 2.0 / (SCAN_POINTS as f64 - 1.0);

/// Relative energy tolerance below which two minima count as degenerate.
const DEGENERACY_TOL: f64 = 1e-12;

const GOLDEN_TOL: f64 = 1e-9;
const GOLDEN_MAX_ITER: usize = 200;

/// `<eps_k>` over the folded trapezoid grid, without allocating.
///
/// The even grid is invariant under `k -> pi - k`, which maps `w` to `-w`,
/// so only `|w|` is used and field-reversed results agree bit for bit.
fn mean_dispersion(w: f64, j: f64, n_k: usize) -> f64 {
    folded_sum(n_k, |k| crate::model::dispersion_raw(k, w.abs(), j))
}

/// Transverse magnetization `<sigma^x>` of the Ising chain in field `w`,
/// `-<(w - 2J cos k) / eps_k>`, i.e. `2 dE/dw`. Odd in `w`.
pub fn chain_magnetization(w: f64, j: f64, n_k: usize) -> f64 {
    if w == 0.0 {
        return 0.0;
    }
    let a = w.abs();
    let m = -folded_sum(n_k, |k| {
        let eps = crate::model::dispersion_raw(k, a, j);
        if eps > 0.0 {
            ((a - 2.0 * j) + 4.0 * j * (0.5 * k).sin().powi(2)) / eps
        } else {
            0.0
        }
    });
    m * w.signum()
}

fn folded_sum<F: Fn(f64) -> f64>(n_k: usize, f: F) -> f64 {
    let half = n_k / 2;
    let mut acc = 0.0;
    for m in 0..=half {
        let k = 2.0 * PI * m as f64 / n_k as f64;
        let w = if m == 0 || m == half { 1.0 } else { 2.0 };
        acc += w * f(k);
    }
    acc / n_k as f64
}

/// Ground-state energy per spin at trial magnetization `m_x`.
pub fn energy_density(m_x: f64, params: &ModelParams) -> f64 {
    let g = params.lambda_sq_over_omega();
    let eff = EffectiveField::from_magnetization(m_x, params);
    g * m_x * m_x - 0.5 * mean_dispersion(eff.omega_x_tilde(), params.j, params.n_k)
}

/// Analytic derivative `d e0 / d m_x = 2 lambda^2/Omega (m_x - m_chain(omega_x_tilde))`.
pub fn energy_gradient(m_x: f64, params: &ModelParams) -> f64 {
    let g = params.lambda_sq_over_omega();
    let w = EffectiveField::from_magnetization(m_x, params).omega_x_tilde();
    2.0 * g * (m_x - chain_magnetization(w, params.j, params.n_k))
}

/// Equilibrium state at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldSolution {
    pub m_x: f64,
    pub omega_x_tilde: f64,
    pub e0: f64,
    pub m_z: f64,
    pub n_ph: f64,
    /// Set when two distinct minima have equal energy (symmetric
    /// superradiant pair or coexistence exactly at a first-order point).
    pub degenerate_minima: bool,
}

impl MeanFieldSolution {
    fn from_minimum(m_x: f64, e0: f64, degenerate_minima: bool, params: &ModelParams) -> Self {
        let eff = EffectiveField::from_magnetization(m_x, params);
        let w = eff.omega_x_tilde();
        Self {
            m_x,
            omega_x_tilde: w,
            e0,
            m_z: longitudinal_magnetization(w, params.j),
            n_ph: (params.lambda / params.omega_cavity).powi(2) * m_x * m_x,
            degenerate_minima,
        }
    }

    pub fn effective_field(&self, params: &ModelParams) -> EffectiveField {
        EffectiveField::from_magnetization(self.m_x, params)
    }

    /// True in the z-ferromagnetic phase (`m_z > 0`).
    pub fn is_ordered(&self) -> bool {
        self.m_z > 0.0
    }
}

/// `m_z = (1 - (w/2J)^2)^{1/8}` for `|w| <= 2J`, zero otherwise. The field
/// magnitude is used so negative effective fields are covered.
pub fn longitudinal_magnetization(omega_x_tilde: f64, j: f64) -> f64 {
    let r = omega_x_tilde.abs() / (2.0 * j);
    if r < 1.0 {
        (1.0 - r * r).powf(0.125)
    } else {
        0.0
    }
}

fn golden_section<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..GOLDEN_MAX_ITER {
        if (b - a).abs() < GOLDEN_TOL {
            let x = 0.5 * (a + b);
            return Ok((x, f(x)));
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        if !(fc.is_finite() && fd.is_finite()) {
            return Err(Error::NonConverged(format!(
                "non-finite energy while refining bracket [{a}, {b}]"
            )));
        }
    }
    Err(Error::NonConverged(format!(
        "golden-section bracket [{a}, {b}] did not shrink below {GOLDEN_TOL}"
    )))
}

/// Polishes a golden-section estimate with Newton steps on the analytic
/// gradient, keeping each step only while it stays in the bracket and
/// reduces `|gradient|`.
fn polish(mut m: f64, lo: f64, hi: f64, params: &ModelParams) -> f64 {
    const H: f64 = 1e-6;
    let mut g = energy_gradient(m, params);
    for _ in 0..8 {
        let curvature = (energy_gradient(m + H, params) - energy_gradient(m - H, params)) / (2.0 * H);
        if !(curvature > 0.0) {
            break;
        }
        let next = m - g / curvature;
        if !(next >= lo && next <= hi) {
            break;
        }
        let g_next = energy_gradient(next, params);
        if g_next.abs() >= g.abs() {
            break;
        }
        m = next;
        g = g_next;
    }
    m
}

fn scan_points(params: &ModelParams) -> Vec<f64> {
    let half = (SCAN_POINTS / 2) as f64;
    // (i - 100)/100 keeps the coarse grid exactly symmetric about zero.
    let mut pts: Vec<f64> = (0..SCAN_POINTS).map(|i| (i as f64 - half) / half).collect();
    let g = params.lambda_sq_over_omega();
    for target in [2.0 * params.j, -2.0 * params.j] {
        let m_c = (params.omega_x - target) / (4.0 * g);
        if m_c.is_finite() && m_c > -1.0 - CRITICAL_WINDOW && m_c < 1.0 + CRITICAL_WINDOW {
            let lo = (m_c - CRITICAL_WINDOW).max(-1.0);
            let hi = (m_c + CRITICAL_WINDOW).min(1.0);
            if hi > lo {
                let n = CRITICAL_SCAN_POINTS;
                pts.extend((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64));
            }
        }
    }
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    pts
}

/// Global minimizer of [`energy_density`] over `m_x in [-1, 1]`.
///
/// A uniform scan (plus a dense scan around the non-analytic points)
/// brackets every local minimum; each is refined by golden section and the
/// lowest one wins. At `lambda = 0` the energy does not depend on `m_x`; the
/// chain's own magnetization is returned.
pub fn minimize(params: &ModelParams) -> Result<MeanFieldSolution> {
    params.validate()?;
    let g = params.lambda_sq_over_omega();
    if g == 0.0 {
        let m = chain_magnetization(params.omega_x, params.j, params.n_k);
        let e0 = energy_density(m, params);
        return Ok(MeanFieldSolution::from_minimum(m, e0, false, params));
    }

    let pts = scan_points(params);
    let energies = par::map_indexed(pts.len(), |i| energy_density(pts[i], params));
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonConverged("non-finite energy on the scan grid".into()));
    }

    let n = pts.len();
    let f = |m: f64| energy_density(m, params);
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for i in 0..n {
        let left_ok = i == 0 || energies[i] <= energies[i - 1];
        let right_ok = i == n - 1 || energies[i] <= energies[i + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        let lo = pts[i.saturating_sub(1)];
        let hi = pts[(i + 1).min(n - 1)];
        let (m, e) = if hi > lo {
            let (m, _) = golden_section(&f, lo, hi)?;
            let m = polish(m, lo, hi, params);
            (m, f(m))
        } else {
            (pts[i], energies[i])
        };
        let (m, e) = if e <= energies[i] { (m, e) } else { (pts[i], energies[i]) };
        candidates.push((m, e));
    }
    if candidates.is_empty() {
        return Err(Error::NonConverged("no local minimum bracketed".into()));
    }

    let e_min = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let tol = DEGENERACY_TOL * e_min.abs().max(1e-3);
    let mut best: Vec<(f64, f64)> = candidates
        .iter()
        .copied()
        .filter(|c| c.1 - e_min <= tol)
        .collect();
    best.sort_by(|a, b| a.0.total_cmp(&b.0));
    best.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-6);
    let degenerate = best.len() > 1;
    // Among degenerate minima prefer the largest (nonnegative) branch.
    let (m, e) = *best.last().expect("nonempty");
    Ok(MeanFieldSolution::from_minimum(m, e, degenerate, params))
}

/// Order of a phase transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionOrder {
    First,
    Second,
}

impl std::fmt::Display for TransitionOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::First => f.write_str("first"),
            Self::Second => f.write_str("second"),
        }
    }
}

/// A point of the `(lambda^2/Omega, omega_x)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub lambda_sq_over_omega: f64,
    pub omega_x: f64,
}

impl PhasePoint {
    pub fn new(lambda_sq_over_omega: f64, omega_x: f64) -> Self {
        Self {
            lambda_sq_over_omega,
            omega_x,
        }
    }

    fn lerp(&self, other: &Self, t: f64) -> Self {
        Self {
            lambda_sq_over_omega: self.lambda_sq_over_omega
                + t * (other.lambda_sq_over_omega - self.lambda_sq_over_omega),
            omega_x: self.omega_x + t * (other.omega_x - self.omega_x),
        }
    }

    pub fn apply(&self, base: &ModelParams) -> ModelParams {
        base.with_lambda_sq_over_omega(self.lambda_sq_over_omega)
            .with_omega_x(self.omega_x)
    }
}

/// Straight segment in the phase plane along which a transition is sought.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterRay {
    pub start: PhasePoint,
    pub end: PhasePoint,
}

impl ParameterRay {
    pub fn new(start: PhasePoint, end: PhasePoint) -> Self {
        Self { start, end }
    }

    /// Sweep of `lambda^2/Omega` at fixed `omega_x`.
    pub fn lambda_sq_sweep(omega_x: f64, from: f64, to: f64) -> Self {
        Self::new(PhasePoint::new(from, omega_x), PhasePoint::new(to, omega_x))
    }

    /// Sweep of `omega_x` at fixed `lambda^2/Omega`.
    pub fn omega_x_sweep(lambda_sq_over_omega: f64, from: f64, to: f64) -> Self {
        Self::new(
            PhasePoint::new(lambda_sq_over_omega, from),
            PhasePoint::new(lambda_sq_over_omega, to),
        )
    }

    pub fn at(&self, t: f64) -> PhasePoint {
        self.start.lerp(&self.end, t)
    }
}

/// Located and classified crossing of the ordered/disordered boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub order: TransitionOrder,
    pub location: PhasePoint,
    /// `|m_x|` discontinuity across the refined crossing.
    pub jump: f64,
    pub before: MeanFieldSolution,
    pub after: MeanFieldSolution,
}

/// Probes used to count boundary crossings along a ray.
const RAY_PROBES: usize = 65;
const BISECTION_STEPS: usize = 48;

fn solve_at(base: &ModelParams, p: &PhasePoint) -> Result<MeanFieldSolution> {
    minimize(&p.apply(base)).map_err(|e| Error::Cell {
        lambda_sq_over_omega: p.lambda_sq_over_omega,
        omega_x: p.omega_x,
        source: Box::new(e),
    })
}

/// Bisects the ordered/disordered label between `t_lo` and `t_hi`.
fn refine_crossing(
    base: &ModelParams,
    ray: &ParameterRay,
    mut t_lo: f64,
    mut t_hi: f64,
    mut s_lo: MeanFieldSolution,
    mut s_hi: MeanFieldSolution,
) -> Result<Transition> {
    let lo_label = s_lo.is_ordered();
    for _ in 0..BISECTION_STEPS {
        let t = 0.5 * (t_lo + t_hi);
        if t <= t_lo || t >= t_hi {
            break;
        }
        let s = solve_at(base, &ray.at(t))?;
        if s.is_ordered() == lo_label {
            t_lo = t;
            s_lo = s;
        } else {
            t_hi = t;
            s_hi = s;
        }
    }
    let jump = (s_hi.m_x.abs() - s_lo.m_x.abs()).abs();
    let order = if jump > JUMP_THRESHOLD {
        TransitionOrder::First
    } else {
        TransitionOrder::Second
    };
    Ok(Transition {
        order,
        location: ray.at(0.5 * (t_lo + t_hi)),
        jump,
        before: s_lo,
        after: s_hi,
    })
}

/// Finds the single boundary crossing on `ray` and classifies it: first
/// order when `m_x` jumps by more than [`JUMP_THRESHOLD`] across the refined
/// crossing, second order otherwise.
pub fn classify_transition(params: &ModelParams, ray: &ParameterRay) -> Result<Transition> {
    params.validate()?;
    let ts: Vec<f64> = (0..RAY_PROBES)
        .map(|i| i as f64 / (RAY_PROBES - 1) as f64)
        .collect();
    let sols = par::try_map_indexed(ts.len(), |i| solve_at(params, &ray.at(ts[i])))?;
    let flips: Vec<usize> = (1..sols.len())
        .filter(|&i| sols[i].is_ordered() != sols[i - 1].is_ordered())
        .collect();
    match flips.len() {
        0 => Err(Error::NoCrossing),
        1 => {
            let i = flips[0];
            refine_crossing(params, ray, ts[i - 1], ts[i], sols[i - 1], sols[i])
        }
        count => Err(Error::MultipleCrossings { count }),
    }
}

/// Point where the boundary changes from second to first order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TricriticalPoint {
    pub location: PhasePoint,
    pub jump_threshold: f64,
}

/// Bisects `lambda^2/Omega` in `[lo, hi]` for the change of transition order
/// along `omega_x` sweeps over `[0, omega_x_max]`. The order must be second
/// at `lo` and first at `hi`.
pub fn locate_tricritical(
    params: &ModelParams,
    lambda_sq_range: (f64, f64),
    omega_x_max: f64,
    tol: f64,
) -> Result<TricriticalPoint> {
    let classify = |g: f64| classify_transition(params, &ParameterRay::omega_x_sweep(g, 0.0, omega_x_max));
    let (mut lo, mut hi) = lambda_sq_range;
    let t_lo = classify(lo)?;
    let t_hi = classify(hi)?;
    if t_lo.order != TransitionOrder::Second || t_hi.order != TransitionOrder::First {
        return Err(Error::NoCrossing);
    }
    let mut last_first = t_hi;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let t = classify(mid)?;
        if t.order == TransitionOrder::First {
            hi = mid;
            last_first = t;
        } else {
            lo = mid;
        }
    }
    let g = 0.5 * (lo + hi);
    // The boundary is continuous through the tricritical point; interpolate
    // its omega_x from the last first-order crossing found.
    let omega_x = if (last_first.location.lambda_sq_over_omega - g).abs() <= tol {
        last_first.location.omega_x
    } else {
        classify(g)?.location.omega_x
    };
    Ok(TricriticalPoint {
        location: PhasePoint::new(g, omega_x),
        jump_threshold: JUMP_THRESHOLD,
    })
}

/// Boundary point detected between two neighbouring cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub location: PhasePoint,
    pub order: TransitionOrder,
    pub jump: f64,
}

/// Mean-field solutions on a `(lambda^2/Omega, omega_x)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagramGrid {
    pub lambda_sq_over_omega: Vec<f64>,
    pub omega_x: Vec<f64>,
    /// Row-major: `cells[i * lambda_sq_over_omega.len() + j]` is at
    /// `(lambda_sq_over_omega[j], omega_x[i])`.
    pub cells: Vec<MeanFieldSolution>,
    /// Refined boundary crossings ordered by `lambda^2/Omega`.
    pub boundary: Vec<BoundaryPoint>,
}

impl PhaseDiagramGrid {
    pub fn cell(&self, omega_x_index: usize, lambda_index: usize) -> &MeanFieldSolution {
        &self.cells[omega_x_index * self.lambda_sq_over_omega.len() + lambda_index]
    }
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::InvalidParams(format!("{name} grid is empty")));
    }
    let increasing = axis.windows(2).all(|w| w[1] > w[0]);
    let decreasing = axis.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(Error::InvalidParams(format!("{name} grid is not monotone")));
    }
    Ok(())
}

/// Solves every cell of the grid and extracts the phase boundary by
/// refining each neighbouring pair whose ordered/disordered label differs.
pub fn phase_diagram(
    lambda_sq_grid: &[f64],
    omega_x_grid: &[f64],
    params_base: &ModelParams,
) -> Result<PhaseDiagramGrid> {
    params_base.validate()?;
    check_axis("lambda^2/Omega", lambda_sq_grid)?;
    check_axis("omega_x", omega_x_grid)?;
    let nl = lambda_sq_grid.len();
    let no = omega_x_grid.len();
    let point = |idx: usize| PhasePoint::new(lambda_sq_grid[idx % nl], omega_x_grid[idx / nl]);
    let cells = par::try_map_indexed(nl * no, |idx| solve_at(params_base, &point(idx)))?;

    let mut pairs = Vec::new();
    for i in 0..no {
        for j in 0..nl {
            let a = i * nl + j;
            if j + 1 < nl && cells[a].is_ordered() != cells[a + 1].is_ordered() {
                pairs.push((a, a + 1));
            }
            if i + 1 < no && cells[a].is_ordered() != cells[a + nl].is_ordered() {
                pairs.push((a, a + nl));
            }
        }
    }
    let mut boundary = par::try_map_indexed(pairs.len(), |p| {
        let (a, b) = pairs[p];
        let ray = ParameterRay::new(point(a), point(b));
        refine_crossing(params_base, &ray, 0.0, 1.0, cells[a], cells[b]).map(|t| BoundaryPoint {
            location: t.location,
            order: t.order,
            jump: t.jump,
        })
    })?;
    boundary.sort_by(|x, y| {
        x.location
            .lambda_sq_over_omega
            .total_cmp(&y.location.lambda_sq_over_omega)
            .then(y.location.omega_x.total_cmp(&x.location.omega_x))
    });
    Ok(PhaseDiagramGrid {
        lambda_sq_over_omega: lambda_sq_grid.to_vec(),
        omega_x: omega_x_grid.to_vec(),
        cells,
        boundary,
    })
}
