//! Run configuration: built-in defaults, then an optional TOML file, then
//! the environment, then command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use dicke_ising::ed::{Boundary, EdConfig, PoleWindow};
use dicke_ising::response::FitConvention;
use dicke_ising::ModelParams;

pub const THREADS_ENV: &str = "DICKE_ISING_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Mean-field phase diagram over (lambda^2/Omega, omega_x).
    PhaseDiagram,
    /// Photon spectral map -Im D/pi over (omega, lambda).
    ResponseMap,
    /// Bound polaritons outside the two-excitation band.
    BoundStates,
    /// Real-space profile of the spin-photon coupling.
    ImpurityProfile,
    /// Finite-size ground state and photon propagator.
    EdSpectrum,
    /// Edge-pole weight across chain lengths and couplings.
    FiniteSizeScan,
    /// Built-in oracle checks plus a self-read of emitted files.
    Validate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::PhaseDiagram => "phase-diagram",
            Self::ResponseMap => "response-map",
            Self::BoundStates => "bound-states",
            Self::ImpurityProfile => "impurity-profile",
            Self::EdSpectrum => "ed-spectrum",
            Self::FiniteSizeScan => "finite-size-scan",
            Self::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

/// Uniform grid `start, ..., stop` with `count` points; written
/// `start:stop:count` on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    pub const fn new(start: f64, stop: f64, count: usize) -> Self {
        Self { start, stop, count }
    }

    pub fn points(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts.as_slice() else {
            return Err(format!("expected START:STOP:COUNT, got `{s}`"));
        };
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
        let count = n.trim().parse::<usize>().map_err(|e| format!("`{n}`: {e}"))?;
        if count == 0 {
            return Err("grid count must be positive".into());
        }
        Ok(Self::new(num(a)?, num(b)?, count))
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.count)
    }
}

fn parse_window(s: &str) -> Result<PoleWindow, String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got `{s}`"))?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?;
    if !(hi > lo) {
        return Err(format!("window `{s}` is empty"));
    }
    Ok(PoleWindow { lo, hi })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grids {
    pub lambda_sq_over_omega: Axis,
    pub omega_x: Axis,
    pub lambda: Axis,
    pub omega: Axis,
    pub sizes: Vec<usize>,
    /// Even number of sites of the impurity profile.
    pub sites: usize,
    pub window: PoleWindow,
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            lambda_sq_over_omega: Axis::new(0.0, 0.5, 51),
            omega_x: Axis::new(0.0, 1.0, 41),
            lambda: Axis::new(0.0, 0.45, 46),
            omega: Axis::new(0.0, 2.0, 2001),
            sizes: vec![4, 6, 8, 10, 12, 14],
            sites: 64,
            window: PoleWindow { lo: 0.35, hi: 0.65 },
        }
    }
}

/// Finite-size settings; the couplings come from the top-level `params`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdSettings {
    pub n_spins: usize,
    pub n_max_photons: usize,
    pub boundary: Boundary,
    pub n_eigen: usize,
    pub green_fn_depth: usize,
    pub dimension_budget: usize,
    pub eigen_tolerance: f64,
}

impl Default for EdSettings {
    fn default() -> Self {
        let d = EdConfig::default();
        Self {
            n_spins: d.n_spins,
            n_max_photons: d.n_max_photons,
            boundary: d.boundary,
            n_eigen: d.n_eigen,
            green_fn_depth: d.green_fn_depth,
            dimension_budget: d.dimension_budget,
            eigen_tolerance: d.eigen_tolerance,
        }
    }
}

impl EdSettings {
    pub fn to_config(&self, params: ModelParams) -> EdConfig {
        EdConfig {
            n_spins: self.n_spins,
            n_max_photons: self.n_max_photons,
            boundary: self.boundary,
            params,
            n_eigen: self.n_eigen,
            green_fn_depth: self.green_fn_depth,
            dimension_budget: self.dimension_budget,
            eigen_tolerance: self.eigen_tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub params: ModelParams,
    pub grids: Grids,
    pub ed: EdSettings,
    /// Solve the equilibrium problem and use its self-consistent field;
    /// otherwise the bare transverse field is used.
    pub mean_field: bool,
    pub fit_convention: FitConvention,
    pub output: Option<PathBuf>,
    pub format: Format,
    /// Worker threads, 0 for one per core.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            params: ModelParams::default(),
            grids: Grids::default(),
            ed: EdSettings::default(),
            mean_field: true,
            fit_convention: FitConvention::default(),
            output: None,
            format: Format::default(),
            threads: 0,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    pub fn output_path(&self) -> PathBuf {
        match (&self.output, self.command) {
            (Some(p), _) => p.clone(),
            (None, Some(c)) => PathBuf::from(format!("{}.{}", c.name(), self.format.extension())),
            (None, None) => PathBuf::from(format!("out.{}", self.format.extension())),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dicke-ising", version, about = "Dicke-Ising model solvers", arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Data file; a `<output>.meta.json` sidecar is written next to it.
    #[arg(long, short, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    #[arg(long, global = true, allow_hyphen_values = true)]
    pub omega_x: Option<f64>,
    /// Ising coupling.
    #[arg(long, global = true, conflicts_with = "four_j_over_omega")]
    pub j: Option<f64>,
    /// Sets `J = value * Omega / 4`.
    #[arg(long, global = true)]
    pub four_j_over_omega: Option<f64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub omega_cavity: Option<f64>,
    /// Imaginary frequency shift of the retarded functions.
    #[arg(long, global = true)]
    pub broadening: Option<f64>,
    /// Momentum-grid size of the thermodynamic-limit sums.
    #[arg(long, global = true)]
    pub n_k: Option<usize>,

    #[arg(long, global = true, value_name = "START:STOP:COUNT")]
    pub lambda_sq_grid: Option<Axis>,
    #[arg(long, global = true, value_name = "START:STOP:COUNT")]
    pub omega_x_grid: Option<Axis>,
    #[arg(long, global = true, value_name = "START:STOP:COUNT")]
    pub lambda_grid: Option<Axis>,
    #[arg(long, global = true, value_name = "START:STOP:COUNT", allow_hyphen_values = true)]
    pub omega_grid: Option<Axis>,
    /// Chain lengths of a finite-size scan.
    #[arg(long, global = true, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub sites: Option<usize>,
    #[arg(long, global = true, value_name = "LO:HI", value_parser = parse_window)]
    pub window: Option<PoleWindow>,

    /// Use the bare transverse field instead of the mean-field solution.
    #[arg(long, global = true)]
    pub bare: bool,
    #[arg(long, global = true, value_enum)]
    pub fit_convention: Option<FitConventionArg>,

    #[arg(long, global = true)]
    pub n_spins: Option<usize>,
    #[arg(long, global = true)]
    pub n_max: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub boundary: Option<BoundaryArg>,
    #[arg(long, global = true)]
    pub n_eigen: Option<usize>,
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    #[arg(long, global = true)]
    pub dimension_budget: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FitConventionArg {
    FourJSquared,
    Literal,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BoundaryArg {
    Open,
    Periodic,
}

/// Error raised while assembling a configuration; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn read_config_file(path: &Path) -> Result<RunConfig, UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::from_toml(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

/// Merges a parsed command line over the optional config file.
pub fn resolve(cli: Cli) -> Result<RunConfig, UsageError> {
    let f = cli.flags;
    let mut cfg = match &f.config {
        Some(path) => read_config_file(path)?,
        None => RunConfig::default(),
    };
    cfg.command = Some(cli.command);

    if let Some(v) = f.output {
        cfg.output = Some(v);
    }
    if let Some(v) = f.format {
        cfg.format = v;
    }
    if let Some(v) = f.threads {
        cfg.threads = v;
    }

    let p = &mut cfg.params;
    if let Some(v) = f.omega_x {
        p.omega_x = v;
    }
    if let Some(v) = f.lambda {
        p.lambda = v;
    }
    if let Some(v) = f.omega_cavity {
        p.omega_cavity = v;
    }
    if let Some(v) = f.j {
        p.j = v;
    }
    if let Some(v) = f.four_j_over_omega {
        p.j = 0.25 * v * p.omega_cavity;
    }
    if let Some(v) = f.broadening {
        p.broadening = v;
    }
    if let Some(v) = f.n_k {
        p.n_k = v;
    }
    p.validate().map_err(|e| UsageError(e.to_string()))?;

    let g = &mut cfg.grids;
    if let Some(v) = f.lambda_sq_grid {
        g.lambda_sq_over_omega = v;
    }
    if let Some(v) = f.omega_x_grid {
        g.omega_x = v;
    }
    if let Some(v) = f.lambda_grid {
        g.lambda = v;
    }
    if let Some(v) = f.omega_grid {
        g.omega = v;
    }
    if let Some(v) = f.sizes {
        g.sizes = v;
    }
    if let Some(v) = f.sites {
        g.sites = v;
    }
    if let Some(v) = f.window {
        g.window = v;
    }

    if f.bare {
        cfg.mean_field = false;
    }
    if let Some(v) = f.fit_convention {
        cfg.fit_convention = match v {
            FitConventionArg::FourJSquared => FitConvention::FourJSquared,
            FitConventionArg::Literal => FitConvention::Literal,
        };
    }

    let e = &mut cfg.ed;
    if let Some(v) = f.n_spins {
        e.n_spins = v;
    }
    if let Some(v) = f.n_max {
        e.n_max_photons = v;
    }
    if let Some(v) = f.boundary {
        e.boundary = match v {
            BoundaryArg::Open => Boundary::Open,
            BoundaryArg::Periodic => Boundary::Periodic,
        };
    }
    if let Some(v) = f.n_eigen {
        e.n_eigen = v;
    }
    if let Some(v) = f.depth {
        e.green_fn_depth = v;
    }
    if let Some(v) = f.dimension_budget {
        e.dimension_budget = v;
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_parses_and_expands() {
        let a: Axis = "0:1:5".parse().unwrap();
        assert_eq!(a.points(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!("0.3:0.3:1".parse::<Axis>().unwrap().points(), vec![0.3]);
        assert!("0:1".parse::<Axis>().is_err());
        assert!("0:1:0".parse::<Axis>().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.command = Some(Command::ResponseMap);
        cfg.params = cfg.params.with_lambda(0.2).with_omega_x(0.1 + 0.2);
        cfg.grids.omega = Axis::new(-0.5, 1.0 / 3.0, 7);
        cfg.output = Some("map.csv".into());
        cfg.format = Format::Json;
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfig::from_toml("[params]\nlambda = 0.2\nlamda = 0.3\n").unwrap_err();
        assert!(err.to_string().contains("lamda"));
        assert!(RunConfig::from_toml("colour = 1\n").is_err());
    }

    #[test]
    fn four_j_over_omega_sets_coupling() {
        let cli = Cli::try_parse_from([
            "dicke-ising",
            "bound-states",
            "--omega-x",
            "0.5",
            "--four-j-over-omega",
            "1",
            "--lambda",
            "0.2",
        ])
        .unwrap();
        let cfg = resolve(cli).unwrap();
        assert_eq!(cfg.command, Some(Command::BoundStates));
        assert_eq!(cfg.params.omega_x, 0.5);
        assert_eq!(cfg.params.j, 0.25);
        assert_eq!(cfg.params.lambda, 0.2);
    }
}
