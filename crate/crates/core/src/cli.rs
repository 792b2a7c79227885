//! Command-line front end.
//!
//! Every flag can also be given as a `key = value` line in the `--config` file (keys use
//! underscores, e.g. `grid_n`); flags win over the file. Exit codes: 0 success, 1 bad
//! input (files, formats, parameters), 2 numerical failure, 3 certificate not valid.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::criterion::{
    asymptotic_fit, certify_frame, covering_grid, default_theta_grid, delta_lattice,
    support_scan_grid, CertifyConfig,
};
use crate::error::{Error, Result};
use crate::geometry::{star_norm_estimate, Lattice, Mat2, Sector};
use crate::kv::{self, Section};
use crate::transform::{
    analyze, approx_reconstruct, band_limited_field, build_dual, synthesize, BandLimitedSpec,
    CoefficientSet, Domain, Field,
};
use crate::wavefront::{
    make_test_signal, wavefront_map, ProbeGrid, SignalKind, SignalParams, VerdictConfig,
    WavefrontMap,
};
use crate::window::{
    design_window, presets, CoarseWindowSpec, CorrectorPlacement, FrequencyWindow, GaussianTerm,
    WindowSpec,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

/// Covering grid size used by `reconstruct`.
const RECONSTRUCT_COVER_N: usize = 256;

#[derive(Debug, Parser)]
#[command(name = "wavepacket", version, about = "Gaussian parabolic wavepacket frames")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Key-value run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Window file.
    #[arg(long, global = true)]
    pub window: Option<PathBuf>,
    /// Lattice `a,b` (diagonal) or generator `a,b,c,d` (row-major).
    #[arg(long, global = true)]
    pub lattice: Option<String>,
    /// Points per axis of the field grid (the covering grid for `certify`).
    #[arg(long, global = true)]
    pub grid_n: Option<usize>,
    /// Spatial half-width of the field grid.
    #[arg(long, global = true)]
    pub extent: Option<f64>,
    #[arg(long, global = true)]
    pub jmax: Option<u32>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Dual cutoff level.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Truncation radius of the lattice-defect sum.
    #[arg(long, global = true)]
    pub gamma_radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Reference,
    Unit,
    Probe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignalArg {
    Bump,
    Edge,
    Corner,
}

impl From<SignalArg> for SignalKind {
    fn from(s: SignalArg) -> Self {
        match s {
            SignalArg::Bump => SignalKind::Bump,
            SignalArg::Edge => SignalKind::Edge,
            SignalArg::Corner => SignalKind::Corner,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for corrector amplitudes and write a window file.
    Design {
        /// Write a built-in window instead of solving the configured design.
        #[arg(long, value_enum)]
        preset: Option<Preset>,
    },
    /// Frame bounds for one lattice, or a table over `--sweep a1,a2,...` (a = b).
    Certify {
        #[arg(long)]
        sweep: Option<String>,
        /// Points per axis and level of the defect scan.
        #[arg(long, default_value_t = 128)]
        theta_n: usize,
        /// Use the geometric-mean defect sum.
        #[arg(long)]
        refined: bool,
    },
    /// Frame coefficients of a field (or of a seeded random field).
    Analyze {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Frequency radius of the seeded field (default: half the grid extent).
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Field from frame coefficients.
    Synth {
        #[arg(long)]
        input: PathBuf,
    },
    /// Approximate dual reconstruction with its error bound.
    Reconstruct {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = 128)]
        theta_n: usize,
    },
    /// Regular/flagged verdicts over a grid of probes.
    Wavefront {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Synthetic signal used when no input is given.
        #[arg(long, value_enum, default_value_t = SignalArg::Edge)]
        signal: SignalArg,
        /// Normal angle of the synthetic edge.
        #[arg(long, default_value_t = 0.0)]
        normal: f64,
        #[arg(long, default_value_t = 0.2)]
        width: f64,
        /// Probe points per axis.
        #[arg(long, default_value_t = 5)]
        points: usize,
        /// Half-width of the probe square.
        #[arg(long, default_value_t = 0.4)]
        probe_radius: f64,
        #[arg(long, default_value_t = 8)]
        angles: usize,
        /// Verdict threshold; calibrated on a bump/edge pair when absent.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        sobolev: f64,
        /// Write per-probe decay tables here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Star norm of the window, or of the sector indicator `1_{V_{0,t}}`.
    Starnorm {
        #[arg(long)]
        sector: Option<u32>,
        #[arg(long, default_value_t = 128)]
        scan_n: usize,
    },
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn std::io::Write, stderr: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. }
        | Error::Format { .. }
        | Error::Parse { .. }
        | Error::InvalidParameter { .. }
        | Error::DegenerateLattice { .. } => EXIT_INPUT,
        _ => EXIT_NUMERIC,
    }
}

/// Flags merged over the config file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub common: Common,
    /// Sections of the config file, empty without one.
    pub sections: Vec<Section>,
}

impl RunConfig {
    pub fn resolve(common: &Common) -> Result<Self> {
        let mut merged = common.clone();
        let sections = match &common.config {
            None => Vec::new(),
            Some(path) => kv::parse(&read_text(path)?)?,
        };
        if let Some(top) = sections.first() {
            let path = |k: &str| top.str(k).map(PathBuf::from);
            merged.window = merged.window.or_else(|| path("window"));
            merged.out = merged.out.or_else(|| path("out"));
            merged.lattice = merged.lattice.or_else(|| top.str("lattice").map(String::from));
            if merged.grid_n.is_none() {
                merged.grid_n = top.u64("grid_n")?.map(|v| v as usize);
            }
            if merged.extent.is_none() {
                merged.extent = top.f64("extent")?;
            }
            if merged.jmax.is_none() {
                merged.jmax = top.u64("jmax")?.map(|v| v as u32);
            }
            if merged.seed.is_none() {
                merged.seed = top.u64("seed")?;
            }
            if merged.eps.is_none() {
                merged.eps = top.f64("eps")?;
            }
            if merged.gamma_radius.is_none() {
                merged.gamma_radius = top.f64("gamma_radius")?;
            }
        }
        let cfg = Self {
            common: merged,
            sections,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let c = &self.common;
        let positive = |name: &'static str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => {
                Err(Error::invalid(name, format!("must be positive, got {x}")))
            }
            _ => Ok(()),
        };
        positive("extent", c.extent)?;
        positive("eps", c.eps)?;
        positive("gamma_radius", c.gamma_radius)?;
        if let Some(n) = c.grid_n {
            if n < 2 || !n.is_power_of_two() {
                return Err(Error::invalid("grid_n", format!("need a power of two >= 2, got {n}")));
            }
        }
        if c.jmax == Some(0) {
            return Err(Error::invalid("jmax", "must be at least 1"));
        }
        if c.lattice.is_some() {
            self.lattice()?;
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<Lattice> {
        let text = self.common.lattice.as_deref().ok_or_else(|| missing("lattice"))?;
        parse_lattice(text)
    }

    pub fn grid_n(&self, default: usize) -> usize {
        self.common.grid_n.unwrap_or(default)
    }

    pub fn extent(&self, default: f64) -> f64 {
        self.common.extent.unwrap_or(default)
    }

    pub fn jmax(&self, default: u32) -> u32 {
        self.common.jmax.unwrap_or(default)
    }

    pub fn seed(&self) -> u64 {
        self.common.seed.unwrap_or(0)
    }

    /// Window file and its coarse window.
    pub fn window(&self) -> Result<(WindowSpec, Option<CoarseWindowSpec>)> {
        let path = self.common.window.as_deref().ok_or_else(|| missing("window"))?;
        WindowSpec::from_text(&read_text(path)?)
    }

    pub fn window_pair(&self) -> Result<(WindowSpec, CoarseWindowSpec)> {
        let (w, w0) = self.window()?;
        let w0 = w0.ok_or_else(|| Error::Parse {
            line: 0,
            reason: "window file has no [phi0] section".into(),
        })?;
        Ok((w, w0))
    }

    fn section(&self, name: &str) -> impl Iterator<Item = &Section> {
        let name = name.to_string();
        self.sections.iter().filter(move |s| s.name == name)
    }
}

fn missing(name: &'static str) -> Error {
    Error::invalid(name, "not given on the command line or in the config file")
}

/// `a,b` gives `diag(a, b)`; `a,b,c,d` the generator `[[a, b], [c, d]]`.
pub fn parse_lattice(text: &str) -> Result<Lattice> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::invalid("lattice", format!("not a list of numbers: {text}")))?;
    match v.as_slice() {
        [a, b] => Lattice::rectangular(*a, *b),
        [a, b, c, d] => Lattice::new(Mat2::new(*a, *b, *c, *d)),
        _ => Err(Error::invalid("lattice", format!("need 2 or 4 numbers, got {}", v.len()))),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load_field(path: &Path) -> Result<Field> {
    let f = Field::load(path)?;
    Ok(match f.domain() {
        Domain::Spatial => f.to_frequency(),
        Domain::Frequency => f,
    })
}

fn execute(cli: &Cli, out: &mut dyn std::io::Write) -> Result<i32> {
    let cfg = RunConfig::resolve(&cli.common)?;
    match &cli.command {
        Command::Design { preset } => cmd_design(&cfg, *preset, out),
        Command::Certify {
            sweep,
            theta_n,
            refined,
        } => cmd_certify(&cfg, sweep.as_deref(), *theta_n, *refined, out),
        Command::Analyze { input, radius } => cmd_analyze(&cfg, input.as_deref(), *radius, out),
        Command::Synth { input } => cmd_synth(&cfg, input, out),
        Command::Reconstruct {
            input,
            radius,
            theta_n,
        } => cmd_reconstruct(&cfg, input.as_deref(), *radius, *theta_n, out),
        Command::Wavefront { .. } => cmd_wavefront(&cfg, &cli.command, out),
        Command::Starnorm { sector, scan_n } => cmd_starnorm(&cfg, *sector, *scan_n, out),
    }
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(|e| Error::io("<stdout>", e))?
    };
}

/// Design spec from the config file: `[design]` with `order` and optional `sigma`,
/// one `[main]` block and `[corrector]` blocks, each with `center`, `width1`, `width2`.
fn design_from_config(
    cfg: &RunConfig,
) -> Result<(GaussianTerm, Vec<CorrectorPlacement>, u32, Option<CoarseWindowSpec>)> {
    let design = cfg.section("design").last();
    let order = design
        .map(|s| s.u64("order"))
        .transpose()?
        .flatten()
        .ok_or_else(|| missing("design.order"))? as u32;
    let sigma = design.map(|s| s.f64("sigma")).transpose()?.flatten();
    let main = cfg.section("main").last().ok_or_else(|| missing("[main]"))?;
    let main = GaussianTerm::new(
        1.0,
        main.require_f64("center")?,
        main.require_f64("width1")?,
        main.require_f64("width2")?,
    )?;
    let correctors = cfg
        .section("corrector")
        .map(|s| {
            Ok(CorrectorPlacement {
                center: s.require_f64("center")?,
                width1: s.require_f64("width1")?,
                width2: s.require_f64("width2")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let coarse = sigma.map(CoarseWindowSpec::new).transpose()?;
    Ok((main, correctors, order, coarse))
}

fn cmd_design(cfg: &RunConfig, preset: Option<Preset>, out: &mut dyn std::io::Write) -> Result<i32> {
    let (w, w0) = match preset {
        Some(Preset::Reference) => (presets::reference_window(), Some(presets::reference_coarse())),
        Some(Preset::Unit) => (presets::unit_window(), Some(presets::unit_coarse())),
        Some(Preset::Probe) => (presets::probe_window(), Some(presets::probe_coarse())),
        None => {
            let (main, correctors, order, coarse) = design_from_config(cfg)?;
            (design_window(main, &correctors, order)?, coarse)
        }
    };
    for (i, t) in w.terms.iter().enumerate() {
        say!(out, "amplitude[{i}] = {}", t.amplitude);
    }
    for (n, r) in w.residual_moments().iter().enumerate() {
        say!(out, "residual_moment[{n}] = {r:e}");
    }
    let text = w.to_text(w0.as_ref());
    match &cfg.common.out {
        Some(path) => write_text(path, &text)?,
        None => say!(out, "{text}"),
    }
    Ok(EXIT_OK)
}

fn cmd_certify(
    cfg: &RunConfig,
    sweep: Option<&str>,
    theta_n: usize,
    refined: bool,
    out: &mut dyn std::io::Write,
) -> Result<i32> {
    let (w, w0) = cfg.window_pair()?;
    let j_max = cfg.jmax(2);
    let mut cc = CertifyConfig::defaults(&w, j_max, cfg.grid_n(256), theta_n)?;
    cc.gamma_radius = cfg.common.gamma_radius;
    cc.refined = refined;
    if let Some(list) = sweep {
        let sides: Vec<f64> = list
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::invalid("sweep", format!("not a list of numbers: {list}")))?;
        say!(out, "a\tDelta\tA\tB\tlower\tupper\tvalid");
        let mut rows = Vec::new();
        let mut table = String::from("a\tDelta\tA\tB\tlower\tupper\tvalid\n");
        for a in sides {
            let lat = Lattice::rectangular(a, a)?;
            let c = certify_frame(&w, &w0, &lat, &cc)?;
            let line = format!(
                "{a}\t{:e}\t{}\t{}\t{}\t{}\t{}",
                c.delta, c.a, c.b, c.lower, c.upper, c.valid
            );
            say!(out, "{line}");
            table.push_str(&line);
            table.push('\n');
            rows.push((a, a, c.delta));
        }
        let fit = asymptotic_fit(&rows)?;
        let summary = format!("tau = {}\nr_squared = {}\nslope = {}", fit.tau, fit.r_squared, fit.slope);
        say!(out, "{summary}");
        if let Some(path) = &cfg.common.out {
            write_text(path, &format!("{table}{summary}\n"))?;
        }
        return Ok(EXIT_OK);
    }
    let lat = cfg.lattice()?;
    let cert = certify_frame(&w, &w0, &lat, &cc)?;
    let text = cert.to_text();
    match &cfg.common.out {
        Some(path) => write_text(path, &text)?,
        None => say!(out, "{text}"),
    }
    if cert.valid {
        say!(out, "valid: lower = {}, upper = {}", cert.lower, cert.upper);
        Ok(EXIT_OK)
    } else {
        say!(out, "not valid: Delta = {} >= A = {}", cert.delta, cert.a);
        Ok(EXIT_INVALID)
    }
}

/// Input field, or a seeded band-limited field on the configured grid.
fn field_or_seeded(cfg: &RunConfig, input: Option<&Path>, radius: Option<f64>) -> Result<Field> {
    match input {
        Some(p) => load_field(p),
        None => {
            let n = cfg.grid_n(128);
            let x = cfg.extent(4.0);
            let xi = n as f64 / (4.0 * x);
            band_limited_field(n, x, &BandLimitedSpec::new(radius.unwrap_or(0.5 * xi)), cfg.seed())
        }
    }
}

fn cmd_analyze(
    cfg: &RunConfig,
    input: Option<&Path>,
    radius: Option<f64>,
    out: &mut dyn std::io::Write,
) -> Result<i32> {
    let (w, w0) = cfg.window_pair()?;
    let lat = cfg.lattice()?;
    let f = field_or_seeded(cfg, input, radius)?;
    let c = analyze(&f, &w, &w0, &lat, cfg.jmax(2))?;
    say!(out, "coefficients = {}", c.len());
    say!(out, "energy = {}", c.energy());
    say!(out, "field_norm_sq = {}", f.norm().powi(2));
    if let Some(path) = &cfg.common.out {
        c.save(path)?;
    }
    Ok(EXIT_OK)
}

fn cmd_synth(cfg: &RunConfig, input: &Path, out: &mut dyn std::io::Write) -> Result<i32> {
    let (w, w0) = cfg.window_pair()?;
    let lat = cfg.lattice()?;
    let n = cfg.grid_n(128);
    let x = cfg.extent(4.0);
    let c = CoefficientSet::load(input, lat, n, n as f64 / (4.0 * x))?;
    let f = synthesize(&c, &w, &w0)?.to_spatial();
    say!(out, "norm = {}", f.norm());
    if let Some(path) = &cfg.common.out {
        f.save(path)?;
    }
    Ok(EXIT_OK)
}

fn cmd_reconstruct(
    cfg: &RunConfig,
    input: Option<&Path>,
    radius: Option<f64>,
    theta_n: usize,
    out: &mut dyn std::io::Write,
) -> Result<i32> {
    let (w, w0) = cfg.window_pair()?;
    let lat = cfg.lattice()?;
    let j_max = cfg.jmax(2);
    let eps = cfg.common.eps.ok_or_else(|| missing("eps"))?;
    let f = field_or_seeded(cfg, input, radius)?;
    let theta = default_theta_grid(&w, j_max, theta_n)?;
    let delta = delta_lattice(&w, &w0, &lat, &theta, j_max, cfg.common.gamma_radius)?;
    let cover = covering_grid(&w, j_max, RECONSTRUCT_COVER_N)?;
    let dual = build_dual(&w, &w0, eps, &cover, j_max)?;
    let r = approx_reconstruct(&f, &dual, &w0, &lat, j_max, delta.value)?;
    say!(out, "relative_error = {}", r.relative_error);
    say!(out, "bound = {}", r.bound);
    say!(out, "Delta = {}", delta.value);
    say!(out, "A_tilde = {}", dual.lower_tilde);
    if let Some(path) = &cfg.common.out {
        r.field.to_spatial().save(path)?;
    }
    Ok(EXIT_OK)
}

fn cmd_wavefront(cfg: &RunConfig, cmd: &Command, out: &mut dyn std::io::Write) -> Result<i32> {
    let Command::Wavefront {
        input,
        signal,
        normal,
        width,
        points,
        probe_radius,
        angles,
        threshold,
        sobolev,
        report,
    } = cmd
    else {
        unreachable!("dispatched on the variant")
    };
    let w = match &cfg.common.window {
        Some(_) => cfg.window()?.0,
        None => presets::probe_window(),
    };
    let lat = cfg.lattice().or_else(|e| match cfg.common.lattice {
        None => Lattice::rectangular(1.0, 1.0),
        Some(_) => Err(e),
    })?;
    let n = cfg.grid_n(512);
    let x = cfg.extent(1.0);
    let j_range = 1..=cfg.jmax(5);
    let mut params = SignalParams::new(n, x);
    params.width = *width;
    let f = match input {
        Some(p) => load_field(p)?,
        None => {
            params.normal = *normal;
            make_test_signal((*signal).into(), &params)?.to_frequency()
        }
    };
    let grid = ProbeGrid::square(*points, *probe_radius, *angles)?;
    let config = match threshold {
        Some(t) => VerdictConfig {
            s: *sobolev,
            threshold: *t,
        },
        None => calibrate(&w, &lat, j_range.clone(), &grid, params, *sobolev)?,
    };
    let map = wavefront_map(&f, &lat, j_range, &w, &grid, &config)?;
    say!(out, "threshold = {:e}", config.threshold);
    say!(out, "flagged = {} of {}", map.flagged().count(), map.regular.len());
    say!(out, "x1\tx2\ttheta\trate\tweighted_sum");
    for p in map.flagged() {
        say!(
            out,
            "{}\t{}\t{}\t{}\t{:e}",
            p.point.x0[0],
            p.point.x0[1],
            p.point.theta0,
            p.rate,
            p.weighted_sum
        );
    }
    if let Some(path) = report {
        write_text(path, &map.probes.iter().map(|p| p.report()).collect::<String>())?;
    }
    if let Some(path) = &cfg.common.out {
        map.to_field()?.save(path)?;
    }
    Ok(EXIT_OK)
}

/// Threshold between the largest bump sum on `grid` and the edge sums at the origin
/// along `±` the normal.
fn calibrate<W: FrequencyWindow + ?Sized>(
    w: &W,
    lat: &Lattice,
    j_range: std::ops::RangeInclusive<u32>,
    grid: &ProbeGrid,
    mut params: SignalParams,
    s: f64,
) -> Result<VerdictConfig> {
    let probe = VerdictConfig { s, threshold: 1.0 };
    params.center = [0.0, 0.0];
    params.normal = 0.0;
    let bump = make_test_signal(SignalKind::Bump, &params)?.to_frequency();
    let edge = make_test_signal(SignalKind::Edge, &params)?.to_frequency();
    let sums = |m: &WavefrontMap| m.probes.iter().map(|p| p.weighted_sum).collect::<Vec<_>>();
    let b = wavefront_map(&bump, lat, j_range.clone(), w, grid, &probe)?;
    let normals = ProbeGrid {
        points: vec![[0.0, 0.0]],
        angles: vec![0.0, PI],
    };
    let e = wavefront_map(&edge, lat, j_range, w, &normals, &probe)?;
    VerdictConfig::calibrate(s, &sums(&b), &sums(&e))
}

fn cmd_starnorm(
    cfg: &RunConfig,
    sector: Option<u32>,
    scan_n: usize,
    out: &mut dyn std::io::Write,
) -> Result<i32> {
    let j_max = cfg.jmax(4);
    let est = match sector {
        Some(t) => {
            let v = Sector::circular(0, t);
            let support = v.support();
            let grid = support_scan_grid(&support, j_max, scan_n)?;
            star_norm_estimate(|xi| v.indicator(xi), &grid, j_max, Some(&support))?
        }
        None => {
            let w = cfg.window()?.0;
            let support = w.support();
            let grid = default_theta_grid(&w, j_max, scan_n)?;
            star_norm_estimate(|xi| w.eval(xi), &grid, j_max, Some(&support))?
        }
    };
    say!(out, "star_norm = {}", est.value);
    say!(out, "next_scale = {}", est.next_scale);
    Ok(EXIT_OK)
}
