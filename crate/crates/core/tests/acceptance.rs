//! Acceptance suite: each criterion at its pinned tolerance and runtime
//! budget, one PASS/FAIL line per criterion. Exits nonzero if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dicke_ising::ed::{self, EdConfig};
use dicke_ising::equilibrium::{self, ParameterRay, TransitionOrder};
use dicke_ising::model::{band_edges, bogoliubov_coupling, dispersion, EffectiveField};
use dicke_ising::response::{self, find_peaks, BandSide, FitConvention, ResponseKernel};
use dicke_ising::{oracle, ModelParams};

/// Energies in units of the cavity frequency with `4J = Omega`.
const J: f64 = 0.25;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn resonant() -> ModelParams {
    ModelParams::default()
}

fn first_order_location() -> Outcome {
    let ray = ParameterRay::lambda_sq_sweep(0.0, 0.5 * J, 1.0 * J);
    match equilibrium::classify_transition(&resonant(), &ray) {
        Ok(t) => {
            let x = t.location.lambda_sq_over_omega / J;
            outcome(
                t.order == TransitionOrder::First && (x - 0.837).abs() <= 0.01,
                format!("order {}, lambda^2/(Omega J) = {x:.5}, jump {:.4}", t.order, t.jump),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn second_order_endpoint() -> Outcome {
    let ray = ParameterRay::omega_x_sweep(0.0, 0.0, 4.0 * J);
    match equilibrium::classify_transition(&resonant(), &ray) {
        Ok(t) => {
            let x = t.location.omega_x / J;
            // m_z must shrink toward zero on the ordered side of the crossing.
            let p = resonant();
            let approach: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4]
                .iter()
                .map(|d| equilibrium::minimize(&p.with_omega_x(t.location.omega_x * (1.0 - d))).unwrap().m_z)
                .collect();
            let decreasing = approach.windows(2).all(|w| w[1] < w[0]);
            outcome(
                t.order == TransitionOrder::Second && (x - 2.0).abs() <= 0.001 && decreasing && t.after.m_z == 0.0,
                format!("order {}, omega_x/J = {x:.7}, m_z approaching: {approach:.3?}", t.order),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn tricritical_point() -> Outcome {
    match equilibrium::locate_tricritical(&resonant(), (0.1 * J, 0.4 * J), 3.0 * J, 1e-4 * J) {
        Ok(t) => {
            let g = t.location.lambda_sq_over_omega / J;
            let w = t.location.omega_x / J;
            outcome(
                (g - 0.225).abs() <= 0.03 && (w - 1.427).abs() <= 0.03,
                format!(
                    "(lambda^2/(Omega J), omega_x/J) = ({g:.4}, {w:.4}), jump threshold {}",
                    t.jump_threshold
                ),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn flat_band_closed_forms() -> Outcome {
    let eta = 1e-3;
    let p = resonant().with_lambda(0.2).with_broadening(eta);
    let flat = EffectiveField::bare(&p);
    let kernel = ResponseKernel::new(&flat, &p).unwrap();
    let mut worst: f64 = 0.0;
    for w in linspace(-3.0, 3.0, 2000) {
        let z = Complex64::new(w, eta);
        let exact = -8.0 * J / (z * z - 16.0 * J * J);
        worst = worst.max((kernel.chi0(w) - exact).norm() / exact.norm());
    }
    // (w^2 - Omega^2)(w^2 - 16 J^2) = 16 lambda^2 Omega J.
    let s = 16.0 * J * J + 1.0;
    let disc = ((16.0 * J * J - 1.0).powi(2) + 64.0 * 0.04 * J).sqrt();
    let roots = [(0.5 * (s - disc)).sqrt(), (0.5 * (s + disc)).sqrt()];
    let omegas = linspace(0.5, 1.5, 20_001);
    let spectral: Vec<f64> = omegas.iter().map(|&w| -kernel.photon_propagator(w).im / PI).collect();
    let peaks = find_peaks(&omegas, &spectral, 1.0);
    let peak_ok = peaks.len() == 2
        && peaks.iter().zip(roots).all(|(pk, r)| (pk.omega - r).abs() <= eta);
    let found: Vec<f64> = peaks.iter().map(|p| p.omega).collect();
    outcome(
        worst <= 1e-8 && peak_ok,
        format!("max rel. dev. of chi0 {worst:.2e}; peaks {found:.6?} vs roots {roots:.6?}"),
    )
}

fn bound_state_existence() -> Outcome {
    let p = resonant().with_omega_x(0.5).with_lambda(0.2);
    let sol = equilibrium::minimize(&p).unwrap();
    let eff = sol.effective_field(&p);
    let edges = band_edges(&eff, &p);
    let roots = response::find_bound_states(&eff, &p).unwrap();
    let below = roots.iter().filter(|r| r.side == BandSide::Below).count();
    let above = roots.iter().filter(|r| r.side == BandSide::Above).count();
    let doubled = response::find_bound_states(&eff, &p.with_n_k(2 * p.n_k)).unwrap();
    let stable = roots.len() == doubled.len()
        && roots.iter().zip(&doubled).all(|(a, b)| (a.omega_b - b.omega_b).abs() <= 1e-8);
    let first = below == 1 && above == 1 && stable;

    // Below-band existence over random draws with Omega above the lower edge.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut tested, mut missing) = (0, 0);
    while tested < 100 {
        let q = resonant()
            .with_omega_x(rng.random_range(0.0..1.0))
            .with_lambda(rng.random_range(0.01..0.45))
            .with_n_k(1024);
        let s = equilibrium::minimize(&q).unwrap();
        let e = s.effective_field(&q);
        let ed = band_edges(&e, &q);
        if !(q.omega_cavity > ed.lower) || ed.lower <= 0.0 {
            continue;
        }
        tested += 1;
        let r = response::find_bound_states(&e, &q).unwrap();
        if !r.iter().any(|b| b.side == BandSide::Below) {
            missing += 1;
        }
    }
    outcome(
        first && missing == 0,
        format!(
            "omega_x_tilde {:.4}, band [{:.4}, {:.4}]: {below} below / {above} above, stable under n_k doubling: {stable}; \
             below-band root missing in {missing}/{tested} draws with Omega > lower edge",
            eff.omega_x_tilde(),
            edges.lower,
            edges.upper
        ),
    )
}

fn finite_sum_convergence() -> Outcome {
    let p = resonant().with_omega_x(0.3);
    let eff = EffectiveField::bare(&p);
    let e = band_edges(&eff, &p);
    let mut omegas = linspace(0.0, e.lower - 0.02, 250);
    omegas.extend(linspace(e.upper + 0.02, e.upper + 3.0, 250));
    let kernel = ResponseKernel::new(&eff, &p).unwrap();
    let worst = omegas
        .iter()
        .map(|&w| {
            let a = response::chi0_finite_sum(w, &eff, &p, 4096).unwrap();
            let b = kernel.chi0(w);
            (a - b).norm() / b.norm()
        })
        .fold(0.0, f64::max);
    outcome(worst <= 1e-6, format!("max rel. dev. {worst:.2e} over {} frequencies", omegas.len()))
}

fn ed_cross_validation() -> Outcome {
    let p = resonant().with_omega_x(0.3).with_lambda(0.45).with_broadening(2e-2);
    let mut cfg = EdConfig::new(3, 4, p);
    cfg.n_eigen = 6;
    let sparse = ed::ground_state(&cfg).unwrap();
    let dense = oracle::dense_spectrum(&cfg);
    let e_dev = sparse
        .energies
        .iter()
        .zip(&dense)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let omegas = linspace(-2.0, 3.0, 501);
    let (_, spec) = ed::photon_green_function(&cfg, &omegas).unwrap();
    let lehmann = oracle::lehmann_propagator(&cfg, &omegas);
    let d_dev = spec
        .d
        .iter()
        .zip(&lehmann)
        .map(|(a, b)| (a - b).norm() / b.norm().max(1.0))
        .fold(0.0, f64::max);
    outcome(
        e_dev <= 1e-12 && d_dev <= 1e-8 && sparse.energies.len() == 6,
        format!("eigenvalue dev. {e_dev:.2e}, propagator dev. {d_dev:.2e}"),
    )
}

fn finite_size_edge_pole() -> Outcome {
    let p = resonant().with_broadening(5e-3);
    let mut cfg = EdConfig::new(4, 20, p);
    cfg.green_fn_depth = 200;
    let window = ed::PoleWindow::around(0.5, 0.15);
    let scan = match ed::finite_size_scan(&cfg, &[4, 14], &[0.15], &[0.5], window) {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let polaritons = |c: &ed::ScanCell| {
        let best = |lo: f64, hi: f64| {
            c.spectrum
                .poles
                .iter()
                .filter(|q| q.omega > lo && q.omega < hi)
                .map(|q| q.weight)
                .fold(0.0, f64::max)
        };
        (best(window.hi, 1.0), best(1.0, 2.0))
    };
    let (small, large) = (scan.cell(0, 0), scan.cell(1, 0));
    let (lo4, up4) = polaritons(small);
    let (lo14, up14) = polaritons(large);
    let tails_ok = small.cutoff_adequate && large.cutoff_adequate;
    outcome(
        large.window_weight < small.window_weight && lo14 + up14 >= lo4 + up4 && tails_ok,
        format!(
            "edge-pole weight N=4 {:.4} -> N=14 {:.4}; polariton weights (lower, upper) ({lo4:.4}, {up4:.4}) -> ({lo14:.4}, {up14:.4}), \
             summed {:.4} -> {:.4}; cutoff tails {:.1e}, {:.1e}",
            small.window_weight,
            large.window_weight,
            lo4 + up4,
            lo14 + up14,
            small.ground.tail_weight,
            large.ground.tail_weight
        ),
    )
}

fn polariton_overlay() -> Outcome {
    let eta = 1e-3;
    let p = resonant().with_broadening(eta);
    let lambdas: Vec<f64> = (1..=9).map(|i| 0.05 * i as f64).collect();
    let omegas = linspace(0.3, 1.7, 14_001);
    let map = match response::spectral_map(&lambdas, &omegas, &p, true) {
        Ok(m) => m,
        Err(e) => return outcome(false, e.to_string()),
    };
    let tol = eta.max(0.01 * p.omega_cavity);
    let mut worst: f64 = 0.0;
    let mut failing = Vec::new();
    for (col, &lambda) in map.columns.iter().zip(&lambdas) {
        let fit = response::polariton_fit(&p.with_lambda(lambda), FitConvention::FourJSquared).unwrap();
        let mut peaks = find_peaks(&omegas, &col.spectral_function(), 0.0);
        peaks.sort_by(|a, b| b.height.total_cmp(&a.height));
        peaks.truncate(2);
        peaks.sort_by(|a, b| a.omega.total_cmp(&b.omega));
        let dev = if peaks.len() == 2 {
            (peaks[0].omega - fit.omega_minus).abs().max((peaks[1].omega - fit.omega_plus).abs())
        } else {
            f64::INFINITY
        };
        worst = worst.max(dev);
        if dev > tol {
            failing.push(format!("lambda {lambda:.2}: dev {dev:.4}"));
        }
    }
    outcome(
        failing.is_empty(),
        format!(
            "tolerance {tol}, worst deviation {worst:.4}; {} of {} columns outside{}",
            failing.len(),
            lambdas.len(),
            if failing.is_empty() { String::new() } else { format!(" ({})", failing.join(", ")) }
        ),
    )
}

fn property_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut failures: Vec<String> = Vec::new();
    let mut worst_sum: f64 = 0.0;
    for draw in 0..100 {
        let p = resonant()
            .with_omega_x(rng.random_range(0.0..1.2))
            .with_lambda(rng.random_range(0.0..0.6))
            .with_broadening(0.02)
            .with_n_k(1024);
        let sol = equilibrium::minimize(&p).unwrap();
        let eff = sol.effective_field(&p);

        let k = rng.random_range(-PI..PI);
        let even = (dispersion(k, &eff, &p) - dispersion(-k, &eff, &p)).abs();
        let odd = match (bogoliubov_coupling(k, &eff, &p), bogoliubov_coupling(-k, &eff, &p)) {
            (Ok(a), Ok(b)) => (a + b).abs(),
            _ => f64::INFINITY,
        };
        if even > 1e-14 || odd > 1e-14 {
            failures.push(format!("draw {draw}: parity of eps/eta"));
        }

        let kernel = match ResponseKernel::new(&eff, &p) {
            Ok(k) => k,
            Err(e) => {
                failures.push(format!("draw {draw}: {e}"));
                continue;
            }
        };
        let h = p.broadening / 10.0;
        let n = (40.0 / h) as usize;
        let mut sum = 0.0;
        let mut retarded = true;
        for i in 0..=n {
            let w = -20.0 + i as f64 * h;
            let d = kernel.photon_propagator(w);
            if w >= 0.0 && d.im > 0.0 {
                retarded = false;
            }
            sum += -d.im / PI * h;
        }
        worst_sum = worst_sum.max((sum - 1.0).abs());
        if (sum - 1.0).abs() > 0.02 {
            failures.push(format!("draw {draw}: sum rule {sum:.4}"));
        }
        if !retarded {
            failures.push(format!("draw {draw}: Im D > 0 at omega >= 0"));
        }

        let n_spins = rng.random_range(2..=5);
        let n_max = rng.random_range(2..=5);
        let mut cfg = EdConfig::new(n_spins, n_max, p);
        let hm = ed::build_hamiltonian(&cfg).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(1000 + draw);
        let u: Vec<f64> = (0..hm.dim()).map(|_| r.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..hm.dim()).map(|_| r.random_range(-1.0..1.0)).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let lhs = dot(&u, &hm.apply_new(&v));
        let rhs = dot(&hm.apply_new(&u), &v);
        if (lhs - rhs).abs() > 1e-12 * lhs.abs().max(1.0) {
            failures.push(format!("draw {draw}: Hermiticity"));
        }

        cfg.params.omega_x = 0.0;
        let hz = ed::build_hamiltonian(&cfg).unwrap();
        let pv: Vec<f64> = v.iter().enumerate().map(|(i, x)| hz.parity_sign(i) * x).collect();
        let hpv = hz.apply_new(&pv);
        let phv: Vec<f64> = hz.apply_new(&v).iter().enumerate().map(|(i, x)| hz.parity_sign(i) * x).collect();
        let comm = hpv.iter().zip(&phv).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if comm > 1e-12 {
            failures.push(format!("draw {draw}: parity commutator {comm:.1e}"));
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "100 draws, worst |sum rule - 1| {worst_sum:.4}{}",
            if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join("; ")) }
        ),
    )
}

fn main() {
    type Criterion = (&'static str, Duration, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("first-order transition location", Duration::from_secs(10), first_order_location),
        ("second-order line endpoint", Duration::from_secs(5), second_order_endpoint),
        ("tricritical point", Duration::from_secs(120), tricritical_point),
        ("flat-band closed forms", Duration::from_secs(5), flat_band_closed_forms),
        ("bound-state existence", Duration::from_secs(10), bound_state_existence),
        ("finite-sum convergence", Duration::from_secs(30), finite_sum_convergence),
        ("ED cross-validation", Duration::from_secs(10), ed_cross_validation),
        ("finite-size edge pole", Duration::from_secs(1800), finite_size_edge_pole),
        ("polariton fit overlay", Duration::from_secs(60), polariton_overlay),
        ("property suites", Duration::from_secs(120), property_suites),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed <= *budget;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<32} {}  [{:.2} s / {} s]  {}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            out.detail
        );
    }
    println!("acceptance: {} passed, {} failed", criteria.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
