//! Command-line front end: flag/config-file ingestion with strict
//! precedence, sweep orchestration, deterministic CSV emission and the
//! self-check oracle suites.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::Parser;

use crate::error::Error;
use crate::quadrature::QuadratureConfig;
use crate::spectrum::{self, Method, SpectrumSample, SpectrumSeries};
use crate::trajectory::{worldline_sample, MirrorParams, THERMAL_REGIME_RATIO};
use crate::{beta_abs2, beta_closed, beta_numeric, thermal_fit, FrequencyPair};

/// What the tool computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    SpectrumClosed,
    SpectrumExact,
    Beta,
    Trajectory,
    TotalCount,
    SelfCheck,
}

impl Mode {
    fn as_str(&self) -> &'static str {
        match self {
            Mode::SpectrumClosed => "spectrum-closed",
            Mode::SpectrumExact => "spectrum-exact",
            Mode::Beta => "beta",
            Mode::Trajectory => "trajectory",
            Mode::TotalCount => "total-count",
            Mode::SelfCheck => "self-check",
        }
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "spectrum-closed" => Ok(Mode::SpectrumClosed),
            "spectrum-exact" => Ok(Mode::SpectrumExact),
            "beta" => Ok(Mode::Beta),
            "trajectory" => Ok(Mode::Trajectory),
            "total-count" => Ok(Mode::TotalCount),
            "self-check" => Ok(Mode::SelfCheck),
            other => Err(format!(
                "unknown mode `{other}` (expected spectrum-closed|spectrum-exact|beta|trajectory|total-count|self-check)"
            )),
        }
    }
}

/// Grid spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

impl Spacing {
    fn as_str(&self) -> &'static str {
        match self {
            Spacing::Linear => "linear",
            Spacing::Log => "log",
        }
    }
}

impl FromStr for Spacing {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "linear" => Ok(Spacing::Linear),
            "log" => Ok(Spacing::Log),
            other => Err(format!("unknown spacing `{other}` (expected linear|log)")),
        }
    }
}

/// Fully resolved run configuration. Flags override config-file values,
/// which override mode-specific defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kappa: f64,
    pub g: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_steps: usize,
    pub spacing: Spacing,
    pub mode: Mode,
    pub omega_prime_min: f64,
    pub omega_prime_max: f64,
    pub omega_prime_steps: usize,
    pub quadrature: QuadratureConfig,
    pub output: Option<PathBuf>,
}

/// CLI-level failures with their exit codes: 2 usage, 3 numerics,
/// 40 + suite index for self-check failures, 5 I/O.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(Error),
    Io(io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numeric(e) => write!(f, "numerical error: {e}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numeric(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 5,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "mirrorspec",
    version,
    about = "Particle spectrum of an asymptotically static thermal moving mirror",
    disable_help_subcommand = true
)]
struct Flags {
    /// Thermal scale kappa (temperature T = kappa / 2 pi)
    #[arg(long)]
    kappa: Option<f64>,
    /// Staticity scale g (required; near-thermal emission needs g >> kappa)
    #[arg(long)]
    g: Option<f64>,
    /// Lower edge of the sweep grid (x grid in trajectory mode)
    #[arg(long = "omega-min")]
    omega_min: Option<f64>,
    /// Upper edge of the sweep grid
    #[arg(long = "omega-max")]
    omega_max: Option<f64>,
    /// Number of grid points
    #[arg(long = "omega-steps")]
    omega_steps: Option<usize>,
    /// Grid spacing: linear or log
    #[arg(long)]
    spacing: Option<String>,
    /// spectrum-closed | spectrum-exact | beta | trajectory | total-count | self-check
    #[arg(long)]
    mode: Option<String>,
    /// Lower edge of the omega' grid (beta mode)
    #[arg(long = "omega-prime-min")]
    omega_prime_min: Option<f64>,
    /// Upper edge of the omega' grid (beta mode)
    #[arg(long = "omega-prime-max")]
    omega_prime_max: Option<f64>,
    /// Number of omega' grid points (beta mode)
    #[arg(long = "omega-prime-steps")]
    omega_prime_steps: Option<usize>,
    /// Flat key=value config file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path (default: standard output)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Relative quadrature tolerance
    #[arg(long = "quadrature.rel_tol")]
    quadrature_rel_tol: Option<f64>,
    /// Absolute quadrature tolerance
    #[arg(long = "quadrature.abs_tol")]
    quadrature_abs_tol: Option<f64>,
    /// Maximum interval bisections per integral
    #[arg(long = "quadrature.max_refinements")]
    quadrature_max_refinements: Option<usize>,
    /// Cap on the phase variable u = 2 kappa x in the beta integral
    #[arg(long = "quadrature.u_max")]
    quadrature_u_max: Option<f64>,
    /// Comma-separated damping factors for the regularized beta integral
    #[arg(long = "quadrature.damping_eps")]
    quadrature_damping_eps: Option<String>,
}

/// Values read from a config file; same precedence slot for every key.
#[derive(Debug, Default)]
struct FileValues {
    kappa: Option<f64>,
    g: Option<f64>,
    omega_min: Option<f64>,
    omega_max: Option<f64>,
    omega_steps: Option<usize>,
    spacing: Option<String>,
    mode: Option<String>,
    omega_prime_min: Option<f64>,
    omega_prime_max: Option<f64>,
    omega_prime_steps: Option<usize>,
    output: Option<PathBuf>,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    max_refinements: Option<usize>,
    u_max: Option<f64>,
    damping_eps: Option<String>,
}

fn parse_file_values(path: &PathBuf) -> Result<FileValues, CliError> {
    let text = fs::read_to_string(path)?;
    let mut v = FileValues::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "{}:{}: expected key=value, got `{line}`",
                path.display(),
                lineno + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| {
            CliError::Usage(format!(
                "{}:{}: invalid {what} value `{value}` for key `{key}`",
                path.display(),
                lineno + 1
            ))
        };
        let parse_f64 = |v: &mut Option<f64>| -> Result<(), CliError> {
            *v = Some(value.parse::<f64>().map_err(|_| bad("float"))?);
            Ok(())
        };
        let parse_usize = |v: &mut Option<usize>| -> Result<(), CliError> {
            *v = Some(value.parse::<usize>().map_err(|_| bad("integer"))?);
            Ok(())
        };
        match key {
            "kappa" => parse_f64(&mut v.kappa)?,
            "g" => parse_f64(&mut v.g)?,
            "omega_min" => parse_f64(&mut v.omega_min)?,
            "omega_max" => parse_f64(&mut v.omega_max)?,
            "omega_steps" => parse_usize(&mut v.omega_steps)?,
            "spacing" => v.spacing = Some(value.to_string()),
            "mode" => v.mode = Some(value.to_string()),
            "omega_prime_min" => parse_f64(&mut v.omega_prime_min)?,
            "omega_prime_max" => parse_f64(&mut v.omega_prime_max)?,
            "omega_prime_steps" => parse_usize(&mut v.omega_prime_steps)?,
            "output" => v.output = Some(PathBuf::from(value)),
            "quadrature.rel_tol" => parse_f64(&mut v.rel_tol)?,
            "quadrature.abs_tol" => parse_f64(&mut v.abs_tol)?,
            "quadrature.max_refinements" => parse_usize(&mut v.max_refinements)?,
            "quadrature.u_max" => parse_f64(&mut v.u_max)?,
            "quadrature.damping_eps" => v.damping_eps = Some(value.to_string()),
            other => {
                return Err(CliError::Usage(format!(
                    "{}:{}: unknown config key `{other}`",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    Ok(v)
}

fn parse_damping(list: &str) -> Result<Vec<f64>, CliError> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("invalid damping factor `{s}`")))
        })
        .collect()
}

/// Parse argv and an optional config file into a validated [`RunConfig`].
///
/// Precedence: flags > config file > mode defaults.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let flags = Flags::try_parse_from(argv).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CliError::Usage(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    })?;
    let file = match &flags.config {
        Some(path) => parse_file_values(path)?,
        None => FileValues::default(),
    };

    let mode_str = flags.mode.or(file.mode).unwrap_or_else(|| "spectrum-closed".into());
    let mode = Mode::from_str(&mode_str).map_err(CliError::Usage)?;

    // mode-specific grid defaults
    let (def_min, def_max, def_steps, def_spacing) = match mode {
        Mode::Trajectory => (-4.0, 4.0, 401, Spacing::Linear),
        Mode::Beta => (0.5, 2.0, 3, Spacing::Log),
        _ => (1e-3, 4.0, 400, Spacing::Log),
    };

    let kappa = flags.kappa.or(file.kappa).unwrap_or(1.0);
    let g = match flags.g.or(file.g) {
        Some(g) => g,
        None if mode == Mode::SelfCheck => 10.0, // suites pin their own scales
        None => return Err(CliError::Usage("--g is required".into())),
    };
    let omega_min = flags.omega_min.or(file.omega_min).unwrap_or(def_min);
    let omega_max = flags.omega_max.or(file.omega_max).unwrap_or(def_max);
    let omega_steps = flags.omega_steps.or(file.omega_steps).unwrap_or(def_steps);
    let spacing = match flags.spacing.or(file.spacing) {
        Some(s) => Spacing::from_str(&s).map_err(CliError::Usage)?,
        None => def_spacing,
    };
    let omega_prime_min = flags.omega_prime_min.or(file.omega_prime_min).unwrap_or(omega_min);
    let omega_prime_max = flags.omega_prime_max.or(file.omega_prime_max).unwrap_or(omega_max);
    let omega_prime_steps = flags
        .omega_prime_steps
        .or(file.omega_prime_steps)
        .unwrap_or(omega_steps);
    let output = flags.output.or(file.output);

    let defaults = QuadratureConfig::default();
    let damping_eps_sequence = match flags.quadrature_damping_eps.as_deref().or(file.damping_eps.as_deref())
    {
        Some(list) => parse_damping(list)?,
        None => defaults.damping_eps_sequence.clone(),
    };
    let quadrature = QuadratureConfig {
        rel_tol: flags.quadrature_rel_tol.or(file.rel_tol).unwrap_or(defaults.rel_tol),
        abs_tol: flags.quadrature_abs_tol.or(file.abs_tol).unwrap_or(defaults.abs_tol),
        max_refinements: flags
            .quadrature_max_refinements
            .or(file.max_refinements)
            .unwrap_or(defaults.max_refinements),
        u_max: flags.quadrature_u_max.or(file.u_max).unwrap_or(defaults.u_max),
        damping_eps_sequence,
    };

    let cfg = RunConfig {
        kappa,
        g,
        omega_min,
        omega_max,
        omega_steps,
        spacing,
        mode,
        omega_prime_min,
        omega_prime_max,
        omega_prime_steps,
        quadrature,
        output,
    };
    validate_config(&cfg)?;
    Ok(cfg)
}

fn validate_config(cfg: &RunConfig) -> Result<(), CliError> {
    let usage = |m: String| Err(CliError::Usage(m));
    if !(cfg.kappa > 0.0 && cfg.kappa.is_finite()) {
        return usage(format!("--kappa must be positive and finite, got {}", cfg.kappa));
    }
    if !(cfg.g > 0.0 && cfg.g.is_finite()) {
        return usage(format!("--g must be positive and finite, got {}", cfg.g));
    }
    if !(cfg.omega_min < cfg.omega_max) {
        return usage(format!(
            "--omega-min ({}) must be below --omega-max ({})",
            cfg.omega_min, cfg.omega_max
        ));
    }
    if cfg.omega_steps < 2 {
        return usage(format!("--omega-steps must be at least 2, got {}", cfg.omega_steps));
    }
    if cfg.spacing == Spacing::Log && cfg.omega_min <= 0.0 && cfg.mode != Mode::Trajectory {
        return usage("log spacing requires --omega-min > 0".into());
    }
    if cfg.mode == Mode::Beta {
        if !(cfg.omega_prime_min < cfg.omega_prime_max) {
            return usage(format!(
                "--omega-prime-min ({}) must be below --omega-prime-max ({})",
                cfg.omega_prime_min, cfg.omega_prime_max
            ));
        }
        if cfg.omega_prime_steps < 2 {
            return usage(format!(
                "--omega-prime-steps must be at least 2, got {}",
                cfg.omega_prime_steps
            ));
        }
        if cfg.omega_min <= 0.0 || cfg.omega_prime_min <= 0.0 {
            return usage("beta mode requires positive frequency grids".into());
        }
    }
    if matches!(cfg.mode, Mode::SpectrumClosed | Mode::SpectrumExact) && cfg.omega_min <= 0.0 {
        return usage("spectrum modes require --omega-min > 0".into());
    }
    cfg.quadrature.validate().map_err(CliError::Numeric)?;
    Ok(())
}

fn build_grid(min: f64, max: f64, steps: usize, spacing: Spacing) -> Vec<f64> {
    let mut grid = Vec::with_capacity(steps);
    for i in 0..steps {
        let frac = i as f64 / (steps - 1) as f64;
        let v = match spacing {
            Spacing::Linear => min + (max - min) * frac,
            Spacing::Log => min * (max / min).powf(frac),
        };
        grid.push(v);
    }
    // endpoints present exactly as configured
    grid[0] = min;
    grid[steps - 1] = max;
    grid
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_common_header(out: &mut dyn Write, cfg: &RunConfig) -> io::Result<()> {
    writeln!(out, "# mirrorspec v{}", crate::VERSION)?;
    writeln!(out, "# mode={}", cfg.mode.as_str())?;
    writeln!(out, "# kappa={}", cfg.kappa)?;
    writeln!(out, "# g={}", cfg.g)?;
    writeln!(out, "# omega_min={}", cfg.omega_min)?;
    writeln!(out, "# omega_max={}", cfg.omega_max)?;
    writeln!(out, "# omega_steps={}", cfg.omega_steps)?;
    writeln!(out, "# spacing={}", cfg.spacing.as_str())?;
    if cfg.mode == Mode::Beta {
        writeln!(out, "# omega_prime_min={}", cfg.omega_prime_min)?;
        writeln!(out, "# omega_prime_max={}", cfg.omega_prime_max)?;
        writeln!(out, "# omega_prime_steps={}", cfg.omega_prime_steps)?;
    }
    writeln!(out, "# quadrature.rel_tol={}", cfg.quadrature.rel_tol)?;
    writeln!(out, "# quadrature.abs_tol={}", cfg.quadrature.abs_tol)?;
    writeln!(out, "# quadrature.max_refinements={}", cfg.quadrature.max_refinements)?;
    writeln!(out, "# quadrature.u_max={}", cfg.quadrature.u_max)?;
    let eps = cfg
        .quadrature
        .damping_eps_sequence
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join(",");
    writeln!(out, "# quadrature.damping_eps={eps}")?;
    if matches!(cfg.mode, Mode::SpectrumClosed | Mode::TotalCount)
        && cfg.g / cfg.kappa < THERMAL_REGIME_RATIO
    {
        writeln!(
            out,
            "# warning=g/kappa = {} is below the thermal-regime threshold {}; the closed form is a large-g leading-order result",
            cfg.g / cfg.kappa,
            THERMAL_REGIME_RATIO
        )?;
    }
    Ok(())
}

fn write_spectrum_rows(out: &mut dyn Write, series: &SpectrumSeries) -> io::Result<()> {
    writeln!(out, "omega,n_omega,est_error")?;
    for s in series.samples() {
        writeln!(
            out,
            "{},{},{}",
            fmt_float(s.omega),
            fmt_float(s.n_omega),
            fmt_float(s.est_error)
        )?;
    }
    Ok(())
}

/// The spectrum-closed sweep; with the default configuration this emits
/// the dataset behind the spectrum figure (kappa = 1, g = 1e6, 400
/// log-spaced omega in [1e-3, 4]).
pub fn run_figure1(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let grid = build_grid(cfg.omega_min, cfg.omega_max, cfg.omega_steps, cfg.spacing);
    // the closed form is stated in kappa = 1 units; rescale in, then report
    // the caller's omega
    let scaled: Vec<f64> = grid.iter().map(|w| w / cfg.kappa).collect();
    let series = spectrum::sweep_closed(&scaled, cfg.g / cfg.kappa)?;
    let samples: Vec<SpectrumSample> = grid
        .iter()
        .zip(series.samples())
        .map(|(&omega, s)| SpectrumSample { omega, ..*s })
        .collect();
    let series = SpectrumSeries::from_samples(samples)?;
    write_common_header(out, cfg)?;
    write_spectrum_rows(out, &series)?;
    Ok(())
}

fn run_spectrum_exact(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let grid = build_grid(cfg.omega_min, cfg.omega_max, cfg.omega_steps, cfg.spacing);
    let p = MirrorParams::new(cfg.kappa, cfg.g)?;
    let series = spectrum::sweep_exact(&grid, &p, &cfg.quadrature)?;
    write_common_header(out, cfg)?;
    write_spectrum_rows(out, &series)?;
    Ok(())
}

fn run_beta(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    use rayon::prelude::*;
    let p = MirrorParams::new(cfg.kappa, cfg.g)?;
    let omegas = build_grid(cfg.omega_min, cfg.omega_max, cfg.omega_steps, cfg.spacing);
    let primes = build_grid(
        cfg.omega_prime_min,
        cfg.omega_prime_max,
        cfg.omega_prime_steps,
        cfg.spacing,
    );
    let mut points = Vec::with_capacity(omegas.len() * primes.len());
    for &w in &omegas {
        for &wp in &primes {
            points.push((w, wp));
        }
    }
    let rows = points
        .par_iter()
        .map(|&(w, wp)| {
            let fp = FrequencyPair::new(w, wp)?;
            Ok((w, wp, beta_abs2(&fp, &p, &cfg.quadrature)?))
        })
        .collect::<crate::Result<Vec<_>>>()?;
    write_common_header(out, cfg)?;
    writeln!(out, "omega,omega_prime,abs_beta2")?;
    for (w, wp, b2) in rows {
        writeln!(out, "{},{},{}", fmt_float(w), fmt_float(wp), fmt_float(b2))?;
    }
    Ok(())
}

fn run_trajectory(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let p = MirrorParams::new(cfg.kappa, cfg.g)?;
    let grid = build_grid(cfg.omega_min, cfg.omega_max, cfg.omega_steps, cfg.spacing);
    let pts = worldline_sample(&grid, &p)?;
    write_common_header(out, cfg)?;
    writeln!(out, "x,t,v,velocity")?;
    for pt in pts {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_float(pt.x),
            fmt_float(pt.t),
            fmt_float(pt.v),
            fmt_float(pt.velocity)
        )?;
    }
    Ok(())
}

fn run_total_count(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let p = MirrorParams::new(cfg.kappa, cfg.g)?;
    let t = spectrum::total_count(&p, &cfg.quadrature, Method::ClosedForm)?;
    write_common_header(out, cfg)?;
    writeln!(out, "n_total,est_error")?;
    writeln!(out, "{},{}", fmt_float(t.n_total), fmt_float(t.est_error))?;
    Ok(())
}

/// Diagnostic hooks for the self-check suites. The temperature scale is a
/// mutation knob used by tests to prove the thermal suite can fail.
#[derive(Debug, Clone, Copy)]
pub struct SelfCheckOptions {
    pub planck_temperature_scale: f64,
}

impl Default for SelfCheckOptions {
    fn default() -> Self {
        SelfCheckOptions {
            planck_temperature_scale: 1.0,
        }
    }
}

/// Outcome of one oracle suite.
#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub max_error: f64,
    pub tolerance: f64,
}

/// Self-check report: one row per suite, exit code 0 or 40 + first failure.
#[derive(Debug, Clone)]
pub struct SelfCheckReport {
    pub suites: Vec<SuiteResult>,
}

impl SelfCheckReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }

    pub fn exit_code(&self) -> i32 {
        match self.suites.iter().position(|s| !s.passed) {
            None => 0,
            Some(i) => 40 + i as i32 + 1,
        }
    }
}

fn suite_specfun(quad: &QuadratureConfig) -> SuiteResult {
    use crate::specfun::*;
    use num_complex::Complex64;
    let tol = 1e-10;
    let mut worst: f64 = 0.0;
    let cfg = QuadratureConfig {
        rel_tol: quad.rel_tol.min(1e-11),
        abs_tol: quad.abs_tol.min(1e-13),
        ..quad.clone()
    };
    for y in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
        if let Ok(g) = complex_gamma(Complex64::new(1.0, y)) {
            let lhs = g.norm_sqr() * (std::f64::consts::PI * y).sinh() / (std::f64::consts::PI * y);
            worst = worst.max((lhs - 1.0).abs());
        } else {
            worst = f64::INFINITY;
        }
    }
    for (x, k0) in [
        (0.5, 0.92441907122766586178),
        (1.0, 0.42102443824070833334),
        (2.0, 0.11389387274953343565),
        (5.0, 0.0036910983340425942747),
    ] {
        match ImagOrderBesselArgs::new(0.0, x).and_then(|a| bessel_k_imag_order(a, &cfg)) {
            Ok(v) => worst = worst.max((v - k0).abs() / k0),
            Err(_) => worst = f64::INFINITY,
        }
    }
    match re_digamma_on_line(0.0) {
        Ok(v) => worst = worst.max((v + EULER_GAMMA).abs()),
        Err(_) => worst = f64::INFINITY,
    }
    SuiteResult {
        name: "specfun_identities",
        passed: worst <= tol,
        max_error: worst,
        tolerance: tol,
    }
}

fn suite_beta(quad: &QuadratureConfig) -> SuiteResult {
    let tol = 1e-4;
    let p = MirrorParams::new(1.0, 10.0).expect("valid params");
    let tight = QuadratureConfig {
        rel_tol: quad.rel_tol.min(1e-10),
        abs_tol: quad.abs_tol.min(1e-14),
        ..quad.clone()
    };
    let mut worst: f64 = 0.0;
    for w in [0.5, 1.0, 2.0] {
        for wp in [0.5, 1.0, 2.0] {
            let r = FrequencyPair::new(w, wp).and_then(|fp| {
                let numeric = beta_numeric(&fp, &p, quad)?;
                let closed = beta_closed(&fp, &p, &tight)?;
                Ok((numeric.norm() - closed.norm()).abs() / closed.norm())
            });
            match r {
                Ok(rel) => worst = worst.max(rel),
                Err(_) => worst = f64::INFINITY,
            }
        }
    }
    SuiteResult {
        name: "beta_numeric_vs_closed",
        passed: worst <= tol,
        max_error: worst,
        tolerance: tol,
    }
}

fn suite_spectrum(quad: &QuadratureConfig) -> SuiteResult {
    let tol = 0.05;
    let p = MirrorParams::new(1.0, 1e3).expect("valid params");
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        let w = 0.1 * 20f64.powf(i as f64 / 4.0);
        let r = spectrum::spectrum_exact(w, &p, quad).and_then(|exact| {
            let closed = spectrum::spectrum_closed(w, 1e3)?;
            Ok((exact.n_omega - closed.n_omega).abs() / exact.n_omega)
        });
        match r {
            Ok(rel) => worst = worst.max(rel),
            Err(_) => worst = f64::INFINITY,
        }
    }
    SuiteResult {
        name: "spectrum_exact_vs_closed",
        passed: worst <= tol,
        max_error: worst,
        tolerance: tol,
    }
}

fn suite_thermal(opts: &SelfCheckOptions) -> SuiteResult {
    let tol = 0.02;
    let g = 1e6;
    let t_scaled = opts.planck_temperature_scale / (2.0 * std::f64::consts::PI);
    let grid = build_grid(1e-3, 4.0, 400, Spacing::Log);
    let samples: crate::Result<Vec<SpectrumSample>> = grid
        .iter()
        .map(|&w| {
            let parts = spectrum::graybody(w, g)?;
            let planck = 1.0 / (w / t_scaled).exp_m1();
            Ok(SpectrumSample {
                omega: w,
                n_omega: parts.gray * planck,
                method: Method::ClosedForm,
                est_error: 0.0,
            })
        })
        .collect();
    let worst = samples
        .and_then(SpectrumSeries::from_samples)
        .and_then(|series| thermal_fit(&series))
        .map(|fit| (fit.temperature * 2.0 * std::f64::consts::PI - 1.0).abs())
        .unwrap_or(f64::INFINITY);
    SuiteResult {
        name: "thermal_fit",
        passed: worst <= tol,
        max_error: worst,
        tolerance: tol,
    }
}

/// Run the oracle suites: special-function identities, the regularized
/// beta integral against the closed form, exact-vs-closed spectra, and the
/// thermal fit. Suites pin their own physical scales; `cfg.quadrature`
/// controls the tolerances and is echoed in the report header.
pub fn run_self_check(
    cfg: &RunConfig,
    opts: SelfCheckOptions,
    out: &mut dyn Write,
) -> Result<SelfCheckReport, CliError> {
    write_common_header(out, cfg)?;
    let suites = vec![
        suite_specfun(&cfg.quadrature),
        suite_beta(&cfg.quadrature),
        suite_spectrum(&cfg.quadrature),
        suite_thermal(&opts),
    ];
    writeln!(out, "suite,status,max_error,tolerance")?;
    for s in &suites {
        writeln!(
            out,
            "{},{},{},{}",
            s.name,
            if s.passed { "PASS" } else { "FAIL" },
            fmt_float(s.max_error),
            fmt_float(s.tolerance)
        )?;
    }
    Ok(SelfCheckReport { suites })
}

fn thread_pool() -> Result<Option<rayon::ThreadPool>, CliError> {
    match std::env::var("MIRRORSPEC_THREADS") {
        Err(_) => Ok(None),
        Ok(raw) => {
            let n: usize = raw.parse().map_err(|_| {
                CliError::Usage(format!("MIRRORSPEC_THREADS must be a positive integer, got `{raw}`"))
            })?;
            if n == 0 {
                return Err(CliError::Usage(
                    "MIRRORSPEC_THREADS must be a positive integer, got `0`".into(),
                ));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))?;
            Ok(Some(pool))
        }
    }
}

/// Execute a parsed configuration, writing CSV (or the self-check report)
/// to the configured output. Returns the process exit code.
pub fn execute(cfg: &RunConfig) -> Result<i32, CliError> {
    let mut buffer: Vec<u8> = Vec::new();
    let pool = thread_pool()?;
    let run = |buffer: &mut Vec<u8>| -> Result<i32, CliError> {
        match cfg.mode {
            Mode::SpectrumClosed => run_figure1(cfg, buffer).map(|()| 0),
            Mode::SpectrumExact => run_spectrum_exact(cfg, buffer).map(|()| 0),
            Mode::Beta => run_beta(cfg, buffer).map(|()| 0),
            Mode::Trajectory => run_trajectory(cfg, buffer).map(|()| 0),
            Mode::TotalCount => run_total_count(cfg, buffer).map(|()| 0),
            Mode::SelfCheck => {
                run_self_check(cfg, SelfCheckOptions::default(), buffer).map(|r| r.exit_code())
            }
        }
    };
    let code = match pool {
        Some(pool) => pool.install(|| run(&mut buffer)),
        None => run(&mut buffer),
    }?;
    match &cfg.output {
        Some(path) => fs::write(path, &buffer)?,
        None => {
            io::stdout().write_all(&buffer)?;
            io::stdout().flush()?;
        }
    }
    Ok(code)
}

/// Entry point for the binary: parse, run, map errors to exit codes.
pub fn run_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    // help/version are not errors
    let args: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    match Flags::try_parse_from(args.iter()) {
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            print!("{e}");
            return 0;
        }
        _ => {}
    }
    let cfg = match parse_config(args.iter()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    match execute(&cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

impl std::fmt::Display for RunConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut s = String::new();
        let _ = write!(
            s,
            "mode={} kappa={} g={} omega=[{}, {}]x{} spacing={}",
            self.mode.as_str(),
            self.kappa,
            self.g,
            self.omega_min,
            self.omega_max,
            self.omega_steps,
            self.spacing.as_str()
        );
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Vec<String> {
        std::iter::once("mirrorspec".to_string())
            .chain(list.iter().map(|s| s.to_string()))
            .collect()
    }

    #[test]
    fn defaults_mirror_figure1() {
        let cfg = parse_config(args(&["--g", "1e6", "--mode", "spectrum-closed"])).unwrap();
        assert_eq!(cfg.kappa, 1.0);
        assert_eq!(cfg.g, 1e6);
        assert_eq!(cfg.omega_min, 1e-3);
        assert_eq!(cfg.omega_max, 4.0);
        assert_eq!(cfg.omega_steps, 400);
        assert_eq!(cfg.spacing, Spacing::Log);
    }

    #[test]
    fn flag_overrides_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "g=1e3\nkappa=2\nquadrature.rel_tol=1e-8\n").unwrap();
        let cfg = parse_config(args(&["--config", path.to_str().unwrap(), "--g", "1e6"])).unwrap();
        assert_eq!(cfg.g, 1e6, "flag wins over config file");
        assert_eq!(cfg.kappa, 2.0, "config file wins over default");
        assert_eq!(cfg.quadrature.rel_tol, 1e-8);
    }

    #[test]
    fn unknown_config_key_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "g=10\nnot_a_key=3\n").unwrap();
        let err = parse_config(args(&["--config", path.to_str().unwrap()])).unwrap_err();
        assert!(matches!(err, CliError::Usage(m) if m.contains("not_a_key")));
    }

    #[test]
    fn inverted_grid_is_usage_error() {
        let err = parse_config(args(&["--g", "10", "--omega-min", "2", "--omega-max", "1"]))
            .unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn missing_g_is_usage_error_except_self_check() {
        assert!(parse_config(args(&["--mode", "spectrum-closed"])).is_err());
        assert!(parse_config(args(&["--mode", "self-check"])).is_ok());
    }

    #[test]
    fn grid_endpoints_exact() {
        let grid = build_grid(1e-3, 4.0, 400, Spacing::Log);
        assert_eq!(grid[0], 1e-3);
        assert_eq!(grid[399], 4.0);
        let grid = build_grid(-4.0, 4.0, 401, Spacing::Linear);
        assert_eq!(grid[0], -4.0);
        assert_eq!(grid[400], 4.0);
        assert_eq!(grid[200], 0.0);
    }

    #[test]
    fn trajectory_mode_defaults_to_symmetric_linear_grid() {
        let cfg = parse_config(args(&["--g", "10", "--mode", "trajectory"])).unwrap();
        assert_eq!(cfg.omega_min, -4.0);
        assert_eq!(cfg.omega_max, 4.0);
        assert_eq!(cfg.spacing, Spacing::Linear);
        assert_eq!(cfg.omega_steps, 401);
    }

    #[test]
    fn figure1_output_has_header_and_rows() {
        let cfg = parse_config(args(&[
            "--g",
            "1e6",
            "--omega-steps",
            "16",
            "--omega-min",
            "0.01",
            "--omega-max",
            "1",
        ]))
        .unwrap();
        let mut buf = Vec::new();
        run_figure1(&cfg, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(&format!("# mirrorspec v{}\n", crate::VERSION)));
        assert!(text.contains("# g=1000000\n"));
        assert!(text.contains("omega,n_omega,est_error\n"));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 17);
    }

    #[test]
    fn kappa_rescaling_matches_unit_run() {
        // N(omega; kappa, g) = N(omega/kappa; 1, g/kappa)
        let base = parse_config(args(&[
            "--g", "1e4", "--omega-min", "0.1", "--omega-max", "2", "--omega-steps", "8",
        ]))
        .unwrap();
        let scaled = parse_config(args(&[
            "--kappa", "2", "--g", "2e4", "--omega-min", "0.2", "--omega-max", "4", "--omega-steps",
            "8",
        ]))
        .unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        run_figure1(&base, &mut a).unwrap();
        run_figure1(&scaled, &mut b).unwrap();
        let grab = |t: &str| -> Vec<f64> {
            t.lines()
                .filter(|l| !l.starts_with('#') && !l.starts_with("omega"))
                .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
                .collect()
        };
        let na = grab(std::str::from_utf8(&a).unwrap());
        let nb = grab(std::str::from_utf8(&b).unwrap());
        for (x, y) in na.iter().zip(nb.iter()) {
            assert!((x - y).abs() <= 1e-12 * x.abs());
        }
    }

    #[test]
    fn self_check_mutation_hook_fails_thermal_suite() {
        let cfg = parse_config(args(&["--mode", "self-check"])).unwrap();
        let mut sink = Vec::new();
        let report = run_self_check(
            &cfg,
            SelfCheckOptions {
                planck_temperature_scale: 1.1,
            },
            &mut sink,
        )
        .unwrap();
        let thermal = report.suites.iter().find(|s| s.name == "thermal_fit").unwrap();
        assert!(!thermal.passed, "scaled temperature must be detected");
        assert!(report.exit_code() >= 41);
    }
}
