use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use dicke_ising::ed::{self, EdResult, PhotonSpectrum};
use dicke_ising::equilibrium::{self, MeanFieldSolution, PhaseDiagramGrid};
use dicke_ising::model::{band_edges, coupling_profile_real_space, BandEdges, EffectiveField, ImpurityProfile};
use dicke_ising::response::{
    self, find_peaks, BoundState, FitConvention, ResponseKernel, SpectralMap, ThresholdCondition,
};
use dicke_ising::{oracle, ModelParams};

use crate::config::{Command, EdSettings, Format, Grids, RunConfig};
use crate::output::{self, float, Table};

#[derive(Debug)]
pub enum RunError {
    Numeric(dicke_ising::Error),
    Io(PathBuf, std::io::Error),
    ChecksFailed(usize),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Numeric(e) => write!(f, "{e}"),
            Self::Io(p, e) => write!(f, "{}: {e}", p.display()),
            Self::ChecksFailed(n) => write!(f, "{n} validation check(s) failed"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<dicke_ising::Error> for RunError {
    fn from(e: dicke_ising::Error) -> Self {
        Self::Numeric(e)
    }
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |e| RunError::Io(path.to_path_buf(), e)
}

/// Parameter snapshot embedded in JSON data files. Contains nothing that
/// varies between identical runs.
#[derive(Serialize)]
struct DataMeta<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    params: &'a ModelParams,
    grids: &'a Grids,
    ed: &'a EdSettings,
    mean_field: bool,
    fit_convention: FitConvention,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    schema: &'static str,
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    files: Vec<String>,
    wall_time_s: f64,
}

fn data_meta<'a>(cfg: &'a RunConfig, command: Command) -> DataMeta<'a> {
    DataMeta {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: command.name(),
        params: &cfg.params,
        grids: &cfg.grids,
        ed: &cfg.ed,
        mean_field: cfg.mean_field,
        fit_convention: cfg.fit_convention,
    }
}

/// Files produced by one command.
struct Artifacts {
    files: Vec<PathBuf>,
}

/// Runs the configured command, writes its files and the metadata
/// sidecar, and returns the paths written.
pub fn run(cfg: &RunConfig) -> Result<Vec<PathBuf>, RunError> {
    let command = cfg.command.unwrap_or(Command::Validate);
    let start = Instant::now();
    let out = cfg.output_path();
    let artifacts = match command {
        Command::PhaseDiagram => phase_diagram(cfg, &out)?,
        Command::ResponseMap => response_map(cfg, &out)?,
        Command::BoundStates => bound_states(cfg, &out)?,
        Command::ImpurityProfile => impurity_profile(cfg, &out)?,
        Command::EdSpectrum => ed_spectrum(cfg, &out)?,
        Command::FiniteSizeScan => finite_size_scan(cfg, &out)?,
        Command::Validate => validate(cfg)?,
    };
    let mut files = artifacts.files;
    if !files.is_empty() {
        let sidecar = output::with_suffix(&files[0], "meta.json");
        let meta = Sidecar {
            schema: output::SCHEMA,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config: cfg,
            files: files.iter().map(|p| p.display().to_string()).collect(),
            wall_time_s: start.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
        std::fs::write(&sidecar, text + "\n").map_err(io_at(&sidecar))?;
        files.push(sidecar);
    }
    Ok(files)
}

fn emit<D: Serialize>(cfg: &RunConfig, command: Command, out: &Path, table: Table, data: &D) -> Result<(), RunError> {
    match cfg.format {
        Format::Csv => output::write_csv(out, &table),
        Format::Json => output::write_json(out, &data_meta(cfg, command), data),
    }
    .map_err(io_at(out))
}

fn solve_field(cfg: &RunConfig, params: &ModelParams) -> Result<(EffectiveField, Option<MeanFieldSolution>), RunError> {
    if cfg.mean_field {
        let sol = equilibrium::minimize(params)?;
        Ok((sol.effective_field(params), Some(sol)))
    } else {
        Ok((EffectiveField::bare(params), None))
    }
}

fn phase_diagram_table(grid: &PhaseDiagramGrid) -> Table {
    let mut t = Table::new([
        "lambda_sq_over_omega",
        "omega_x",
        "m_x",
        "m_z",
        "n_ph",
        "e0",
        "omega_x_tilde",
        "degenerate_minima",
    ]);
    for (i, &w) in grid.omega_x.iter().enumerate() {
        for (j, &g) in grid.lambda_sq_over_omega.iter().enumerate() {
            let c = grid.cell(i, j);
            t.push(vec![
                float(g),
                float(w),
                float(c.m_x),
                float(c.m_z),
                float(c.n_ph),
                float(c.e0),
                float(c.omega_x_tilde),
                c.degenerate_minima.to_string(),
            ]);
        }
    }
    t
}

fn boundary_table(grid: &PhaseDiagramGrid) -> Table {
    let mut t = Table::new(["lambda_sq_over_omega", "omega_x", "order", "jump"]);
    for b in &grid.boundary {
        t.push(vec![
            float(b.location.lambda_sq_over_omega),
            float(b.location.omega_x),
            b.order.to_string(),
            float(b.jump),
        ]);
    }
    t
}

fn phase_diagram(cfg: &RunConfig, out: &Path) -> Result<Artifacts, RunError> {
    let grid = equilibrium::phase_diagram(
        &cfg.grids.lambda_sq_over_omega.points(),
        &cfg.grids.omega_x.points(),
        &cfg.params,
    )?;
    emit(cfg, Command::PhaseDiagram, out, phase_diagram_table(&grid), &grid)?;
    let mut files = vec![out.to_path_buf()];
    if cfg.format == Format::Csv {
        let b = output::sibling(out, "boundary");
        output::write_csv(&b, &boundary_table(&grid)).map_err(io_at(&b))?;
        files.push(b);
    }
    Ok(Artifacts { files })
}

#[derive(Serialize)]
struct ColumnView {
    lambda: f64,
    omega_x_tilde: f64,
    mean_field: Option<MeanFieldSolution>,
    spectral: Vec<f64>,
    d_re: Vec<f64>,
    d_im: Vec<f64>,
    chi0_re: Vec<f64>,
    chi0_im: Vec<f64>,
    chi_re: Vec<f64>,
    chi_im: Vec<f64>,
    pole_on_grid: Vec<bool>,
}

#[derive(Serialize)]
struct MapView {
    lambdas: Vec<f64>,
    omegas: Vec<f64>,
    columns: Vec<ColumnView>,
}

fn split(z: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    (z.iter().map(|c| c.re).collect(), z.iter().map(|c| c.im).collect())
}

fn map_view(map: &SpectralMap) -> MapView {
    let columns = map
        .columns
        .iter()
        .zip(&map.lambdas)
        .map(|(c, &lambda)| {
            let (d_re, d_im) = split(&c.d);
            let (chi0_re, chi0_im) = split(&c.chi0);
            let (chi_re, chi_im) = split(&c.chi);
            ColumnView {
                lambda,
                omega_x_tilde: c.effective_field.omega_x_tilde(),
                mean_field: c.mean_field,
                spectral: c.spectral_function(),
                d_re,
                d_im,
                chi0_re,
                chi0_im,
                chi_re,
                chi_im,
                pole_on_grid: c.pole_on_grid.clone(),
            }
        })
        .collect();
    MapView {
        lambdas: map.lambdas.clone(),
        omegas: map.omegas.clone(),
        columns,
    }
}

fn response_map(cfg: &RunConfig, out: &Path) -> Result<Artifacts, RunError> {
    let lambdas = cfg.grids.lambda.points();
    let omegas = cfg.grids.omega.points();
    let map = response::spectral_map(&lambdas, &omegas, &cfg.params, cfg.mean_field)?;
    let mut t = Table::new(std::iter::once("omega".to_string()).chain(lambdas.iter().map(|&l| format!("lambda={}", float(l)))));
    for (w, row) in omegas.iter().zip(map.intensity_matrix()) {
        t.push(std::iter::once(float(*w)).chain(row.into_iter().map(float)).collect());
    }
    emit(cfg, Command::ResponseMap, out, t, &map_view(&map))?;
    Ok(Artifacts {
        files: vec![out.to_path_buf()],
    })
}

#[derive(Serialize)]
struct BoundStateReport {
    mean_field: Option<MeanFieldSolution>,
    omega_x_tilde: f64,
    band: BandEdges,
    threshold: ThresholdCondition,
    bound_states: Vec<BoundState>,
}

fn bound_states(cfg: &RunConfig, out: &Path) -> Result<Artifacts, RunError> {
    let p = cfg.params;
    let (eff, mean_field) = solve_field(cfg, &p)?;
    let states = response::find_bound_states(&eff, &p)?;
    let mut t = Table::new(["omega_b", "side", "residue_proxy", "gap_to_edge"]);
    for s in &states {
        t.push(vec![float(s.omega_b), s.side.to_string(), float(s.residue_proxy), float(s.gap_to_edge)]);
    }
    let report = BoundStateReport {
        mean_field,
        omega_x_tilde: eff.omega_x_tilde(),
        band: band_edges(&eff, &p),
        threshold: response::threshold_condition(&eff, &p)?,
        bound_states: states,
    };
    emit(cfg, Command::BoundStates, out, t, &report)?;
    Ok(Artifacts {
        files: vec![out.to_path_buf()],
    })
}

#[derive(Serialize)]
struct ProfileReport {
    omega_x_tilde: f64,
    profile: ImpurityProfile,
}

fn impurity_profile(cfg: &RunConfig, out: &Path) -> Result<Artifacts, RunError> {
    let (eff, _) = solve_field(cfg, &cfg.params)?;
    let profile = coupling_profile_real_space(&eff, &cfg.params, cfg.grids.sites)?;
    let mut t = Table::new(["site", "value"]);
    for (s, v) in profile.sites.iter().zip(&profile.values) {
        t.push(vec![s.to_string(), float(*v)]);
    }
    let report = ProfileReport {
        omega_x_tilde: eff.omega_x_tilde(),
        profile,
    };
    emit(cfg, Command::ImpurityProfile, out, t, &report)?;
    Ok(Artifacts {
        files: vec![out.to_path_buf()],
    })
}

#[derive(Serialize)]
struct EdReport {
    ground: EdResult,
    spectrum: PhotonSpectrum,
}

fn poles_table(s: &PhotonSpectrum) -> Table {
    let mut t = Table::new(["omega", "weight"]);
    for p in &s.poles {
        t.push(vec![float(p.omega), float(p.weight)]);
    }
    t
}

fn ed_spectrum(cfg: &RunConfig, out: &Path) -> Result<Artifacts, RunError> {
    let ed_cfg = cfg.ed.to_config(cfg.params);
    let omegas = cfg.grids.omega.points();
    let (ground, spectrum) = ed::photon_green_function(&ed_cfg, &omegas)?;
    if !ground.cutoff_adequate {
        eprintln!(
            "warning: photon cutoff tail weight {:.3e} exceeds tolerance; raise --n-max",
            ground.tail_weight
        );
    }
    let mut t = Table::new(["omega", "d_re", "d_im", "spectral"]);
    for ((w, d), a) in omegas.iter().zip(&spectrum.d).zip(&spectrum.spectral) {
        t.push(vec![float(*w), float(d.re), float(d.im), float(*a)]);
    }
    let mut files = vec![out.to_path_buf()];
    if cfg.format == Format::Csv {
        let p = output::sibling(out, "poles");
        output::write_csv(&p, &poles_table(&spectrum)).map_err(io_at(&p))?;
        files.push(p);
    }
    emit(cfg, Command::EdSpectrum, out, t, &EdReport { ground, spectrum })?;
    Ok(Artifacts { files })
}

fn finite_size_scan(cfg: &RunConfig, out: &Path) -> Result<Artifacts, RunError> {
    let base = cfg.ed.to_config(cfg.params);
    let lambdas = cfg.grids.lambda.points();
    let omegas = cfg.grids.omega.points();
    let scan = ed::finite_size_scan(&base, &cfg.grids.sizes, &lambdas, &omegas, cfg.grids.window)?;
    let mut t = Table::new([
        "n_spins",
        "lambda",
        "window_weight",
        "window_omega",
        "energy",
        "m_x",
        "n_ph_per_spin",
        "tail_weight",
        "cutoff_adequate",
        "krylov_breakdown",
    ]);
    let mut spectra = Table::new(["n_spins", "lambda", "omega", "spectral"]);
    for c in &scan.cells {
        t.push(vec![
            c.n_spins.to_string(),
            float(c.lambda),
            float(c.window_weight),
            float(c.window_omega),
            float(c.ground.energy),
            float(c.ground.m_x),
            float(c.ground.n_ph_per_spin),
            float(c.ground.tail_weight),
            c.cutoff_adequate.to_string(),
            c.spectrum.krylov_breakdown.to_string(),
        ]);
        for (w, a) in omegas.iter().zip(&c.spectrum.spectral) {
            spectra.push(vec![c.n_spins.to_string(), float(c.lambda), float(*w), float(*a)]);
        }
    }
    let mut files = vec![out.to_path_buf()];
    if cfg.format == Format::Csv {
        let s = output::sibling(out, "spectra");
        output::write_csv(&s, &spectra).map_err(io_at(&s))?;
        files.push(s);
    }
    emit(cfg, Command::FiniteSizeScan, out, t, &scan)?;
    Ok(Artifacts { files })
}

struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
}

impl Check {
    fn pass(&self) -> bool {
        self.value <= self.tolerance
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Largest relative deviation, falling back to absolute below unit size.
fn max_dev(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm() / y.norm().max(1.0))
        .fold(0.0, f64::max)
}

fn flat_band_chi0() -> Result<Check, RunError> {
    let p = ModelParams::default().with_lambda(0.2);
    let kernel = ResponseKernel::new(&EffectiveField::bare(&p), &p)?;
    let j = p.j;
    let value = linspace(-3.0, 3.0, 2000)
        .into_iter()
        .map(|w| {
            let z = Complex64::new(w, p.broadening);
            let exact = -8.0 * j / (z * z - 16.0 * j * j);
            (kernel.chi0(w) - exact).norm() / exact.norm()
        })
        .fold(0.0, f64::max);
    Ok(Check {
        name: "flat-band chi0 closed form",
        value,
        tolerance: 1e-8,
    })
}

fn flat_band_peaks() -> Result<Check, RunError> {
    let p = ModelParams::default().with_lambda(0.2);
    let kernel = ResponseKernel::new(&EffectiveField::bare(&p), &p)?;
    let (j, om, l) = (p.j, p.omega_cavity, p.lambda);
    let s = 16.0 * j * j + om * om;
    let disc = ((16.0 * j * j - om * om).powi(2) + 64.0 * l * l * om * j).sqrt();
    let roots = [(0.5 * (s - disc)).sqrt(), (0.5 * (s + disc)).sqrt()];
    let omegas = linspace(0.5 * roots[0], 1.5 * roots[1], 20_001);
    let a: Vec<f64> = omegas.iter().map(|&w| -kernel.photon_propagator(w).im / PI).collect();
    let peaks = find_peaks(&omegas, &a, 1.0);
    let value = if peaks.len() == 2 {
        peaks.iter().zip(roots).map(|(pk, r)| (pk.omega - r).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    Ok(Check {
        name: "flat-band polariton peaks",
        value,
        tolerance: p.broadening,
    })
}

fn finite_sum() -> Result<Check, RunError> {
    let p = ModelParams::default().with_omega_x(0.3);
    let eff = EffectiveField::bare(&p);
    let e = band_edges(&eff, &p);
    let kernel = ResponseKernel::new(&eff, &p)?;
    let mut omegas = linspace(0.0, e.lower - 0.02, 250);
    omegas.extend(linspace(e.upper + 0.02, e.upper + 3.0, 250));
    let mut value: f64 = 0.0;
    for w in omegas {
        let a = response::chi0_finite_sum(w, &eff, &p, 4096)?;
        let b = kernel.chi0(w);
        value = value.max((a - b).norm() / b.norm());
    }
    Ok(Check {
        name: "finite sum vs integral",
        value,
        tolerance: 1e-6,
    })
}

fn dyson_route() -> Result<Check, RunError> {
    let p = ModelParams::default().with_omega_x(0.5).with_lambda(0.2).with_broadening(1e-2);
    let sol = equilibrium::minimize(&p)?;
    let eff = sol.effective_field(&p);
    let omegas = linspace(-2.5, 2.5, 501);
    let closed = omegas
        .iter()
        .map(|&w| response::photon_propagator(w, &eff, &p))
        .collect::<Result<Vec<_>, _>>()?;
    let dyson = omegas
        .iter()
        .map(|&w| response::photon_propagator_dyson(w, &eff, &p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Check {
        name: "propagator closed form vs Dyson",
        value: max_dev(&closed, &dyson),
        tolerance: 1e-10,
    })
}

fn ed_dense() -> Result<[Check; 2], RunError> {
    let p = ModelParams::default().with_omega_x(0.3).with_lambda(0.45).with_broadening(2e-2);
    let mut cfg = ed::EdConfig::new(3, 4, p);
    cfg.n_eigen = 6;
    let sparse = ed::ground_state(&cfg)?;
    let dense = oracle::dense_spectrum(&cfg);
    let e_dev = sparse
        .energies
        .iter()
        .zip(&dense)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let omegas = linspace(-2.0, 3.0, 501);
    let (_, spec) = ed::photon_green_function(&cfg, &omegas)?;
    let lehmann = oracle::lehmann_propagator(&cfg, &omegas);
    Ok([
        Check {
            name: "sparse vs dense eigenvalues",
            value: e_dev,
            tolerance: 1e-12,
        },
        Check {
            name: "Krylov vs Lehmann propagator",
            value: max_dev(&spec.d, &lehmann),
            tolerance: 1e-8,
        },
    ])
}

/// Writes a small phase diagram in both formats and reads it back.
fn self_read(cfg: &RunConfig) -> Result<Check, RunError> {
    let dir = std::env::temp_dir().join(format!("dicke-ising-validate-{}", std::process::id()));
    let mut small = cfg.clone();
    small.command = Some(Command::PhaseDiagram);
    small.params = ModelParams::default().with_n_k(256);
    small.grids.lambda_sq_over_omega = crate::config::Axis::new(0.0, 0.4, 5);
    small.grids.omega_x = crate::config::Axis::new(0.0, 0.8, 3);
    let csv_path = dir.join("phase.csv");
    let json_path = dir.join("phase.json");
    let grid = equilibrium::phase_diagram(
        &small.grids.lambda_sq_over_omega.points(),
        &small.grids.omega_x.points(),
        &small.params,
    )?;
    let table = phase_diagram_table(&grid);
    output::write_csv(&csv_path, &table).map_err(io_at(&csv_path))?;
    output::write_json(&json_path, &data_meta(&small, Command::PhaseDiagram), &grid).map_err(io_at(&json_path))?;

    let back = output::read_csv(&csv_path).map_err(io_at(&csv_path))?;
    let mut mismatches = usize::from(back.header != table.header || back.rows.len() != table.rows.len());
    for (a, b) in back.rows.iter().zip(&table.rows) {
        mismatches += usize::from(a != b);
    }
    for (row, c) in back.rows.iter().zip(&grid.cells) {
        let m_x: f64 = row[2].parse().unwrap_or(f64::NAN);
        mismatches += usize::from(m_x.to_bits() != c.m_x.to_bits());
    }
    let json = output::read_json(&json_path).map_err(io_at(&json_path))?;
    match serde_json::from_value::<PhaseDiagramGrid>(json["data"].clone()) {
        Ok(g) => mismatches += usize::from(g != grid),
        Err(_) => mismatches += 1,
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(Check {
        name: "self-read of emitted CSV and JSON",
        value: mismatches as f64,
        tolerance: 0.0,
    })
}

fn validate(cfg: &RunConfig) -> Result<Artifacts, RunError> {
    let mut checks = vec![flat_band_chi0()?, flat_band_peaks()?, finite_sum()?, dyson_route()?];
    checks.extend(ed_dense()?);
    checks.push(self_read(cfg)?);

    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    println!("{:<width$}  {:>10}  {:>10}  result", "check", "value", "tolerance");
    for c in &checks {
        println!(
            "{:<width$}  {:>10.3e}  {:>10.1e}  {}",
            c.name,
            c.value,
            c.tolerance,
            if c.pass() { "PASS" } else { "FAIL" }
        );
    }
    let mut files = Vec::new();
    if let Some(out) = &cfg.output {
        let mut t = Table::new(["check", "value", "tolerance", "pass"]);
        for c in &checks {
            t.push(vec![c.name.to_string(), float(c.value), float(c.tolerance), c.pass().to_string()]);
        }
        #[derive(Serialize)]
        struct Row<'a> {
            check: &'a str,
            value: f64,
            tolerance: f64,
            pass: bool,
        }
        let rows: Vec<Row> = checks
            .iter()
            .map(|c| Row {
                check: c.name,
                value: c.value,
                tolerance: c.tolerance,
                pass: c.pass(),
            })
            .collect();
        emit(cfg, Command::Validate, out, t, &rows)?;
        files.push(out.clone());
    }
    let failed = checks.iter().filter(|c| !c.pass()).count();
    if failed > 0 {
        return Err(RunError::ChecksFailed(failed));
    }
    Ok(Artifacts { files })
}
