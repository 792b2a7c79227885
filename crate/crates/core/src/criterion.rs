//! Covering symbol `m(ξ)`, the correlation function `Θ(ζ)`, the lattice defect
//! `Δ(Λ)` and frame certificates.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{
    dual_lattice, lattice_enumerate, BandTable, FrequencySupport, Lattice, SampleGrid, ScanGrid,
    Vec2,
};
use crate::kv;
use crate::linalg::linear_fit;
use crate::window::{CoarseWindowSpec, FrequencyWindow, WindowSpec};

/// Sampled covering symbol together with its extrema.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolField {
    pub grid: SampleGrid,
    /// Row-major samples, row index = second coordinate, `(n+1)²` entries.
    pub values: Vec<f64>,
    pub j_max: u32,
    /// Max over the grid of the first omitted scale `j_max + 1`.
    pub tail_bound: f64,
    pub min: f64,
    pub max: f64,
    /// Grid spacing exceeds the narrowest packet feature at scale 1.
    pub under_resolved: bool,
}

impl SymbolField {
    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.values[i2 * self.grid.points_per_axis() + i1]
    }

    pub fn point(&self, i1: usize, i2: usize) -> Vec2 {
        [self.grid.coord(i1), self.grid.coord(i2)]
    }
}

/// Samples `coarse(ξ) + Σ_{j<=j_max,k} band(B_{j,k} ξ)` on a grid. Returns the
/// samples and the max of the `j_max + 1` layer.
pub(crate) fn scan_symbol<C, F>(
    grid: &SampleGrid,
    j_max: u32,
    support: &FrequencySupport,
    coarse: C,
    band: F,
) -> (Vec<f64>, f64)
where
    C: Fn(Vec2) -> f64 + Sync,
    F: Fn(Vec2) -> f64 + Sync,
{
    let table = BandTable::new(j_max + 1);
    let m = grid.points_per_axis();
    let rows: Vec<(Vec<f64>, f64)> = (0..m)
        .into_par_iter()
        .map(|i2| {
            let y = grid.coord(i2);
            let mut row = Vec::with_capacity(m);
            let mut tail = 0.0f64;
            for i1 in 0..m {
                let xi = [grid.coord(i1), y];
                let mut s = coarse(xi);
                let mut next = 0.0;
                table.visit(xi, Some(support), |j, _, arg| {
                    if j <= j_max {
                        s += band(arg);
                    } else {
                        next += band(arg);
                    }
                });
                row.push(s);
                tail = tail.max(next.abs());
            }
            (row, tail)
        })
        .collect();
    let mut values = Vec::with_capacity(m * m);
    let mut tail = 0.0f64;
    for (row, t) in rows {
        values.extend(row);
        tail = tail.max(t);
    }
    (values, tail)
}

/// Covering symbol `m(ξ) = |φ̂₀(ξ)|² + Σ_{j<=j_max} Σ_k |φ̂(B_{j,k} ξ)|²` on `grid`.
pub fn compute_symbol_m(
    w: &WindowSpec,
    w0: &CoarseWindowSpec,
    grid: &SampleGrid,
    j_max: u32,
) -> Result<SymbolField> {
    if j_max == 0 {
        return Err(Error::invalid("j_max", "must be at least 1"));
    }
    let support = w.support();
    let (values, tail_bound) = scan_symbol(
        grid,
        j_max,
        &support,
        |xi| {
            let c = w0.eval(xi);
            c * c
        },
        |eta| {
            let v = w.eval(eta);
            v * v
        },
    );
    Ok(symbol_field(grid, j_max, values, tail_bound, w.finest_bandwidth()))
}

pub(crate) fn symbol_field(
    grid: &SampleGrid,
    j_max: u32,
    values: Vec<f64>,
    tail_bound: f64,
    bandwidth: f64,
) -> SymbolField {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    SymbolField {
        grid: *grid,
        values,
        j_max,
        tail_bound,
        min,
        max,
        under_resolved: grid.spacing() > bandwidth,
    }
}

/// Default box for the covering extrema, see [`WindowSpec::covering_extent`].
pub fn covering_grid(w: &WindowSpec, j_max: u32, n: usize) -> Result<SampleGrid> {
    SampleGrid::new(n, w.covering_extent(j_max))
}

/// Default sup grid for `Θ`: `min(j_max, 4)` nested levels, the innermost
/// reaching the scale-1 image of the window support, each level four times wider.
pub fn default_theta_grid(w: &WindowSpec, j_max: u32, n: usize) -> Result<ScanGrid> {
    support_scan_grid(&w.support(), j_max, n)
}

/// [`default_theta_grid`] for any function supported in `s`.
pub fn support_scan_grid(s: &FrequencySupport, j_max: u32, n: usize) -> Result<ScanGrid> {
    let reach = (4.0 * s.lo.abs().max(s.hi.abs())).hypot(2.0 * s.half_height);
    ScanGrid::multiscale(n, reach.max(f64::MIN_POSITIVE), j_max.clamp(1, 4))
}

/// Shared state for repeated `Θ` evaluations.
pub struct ThetaContext<'a> {
    w: &'a WindowSpec,
    w0: &'a CoarseWindowSpec,
    grid: ScanGrid,
    j_max: u32,
    table: BandTable,
    support: FrequencySupport,
}

impl<'a> ThetaContext<'a> {
    pub fn new(
        w: &'a WindowSpec,
        w0: &'a CoarseWindowSpec,
        grid: ScanGrid,
        j_max: u32,
    ) -> Result<Self> {
        if j_max == 0 {
            return Err(Error::invalid("j_max", "must be at least 1"));
        }
        Ok(Self {
            w,
            w0,
            grid,
            j_max,
            table: BandTable::new(j_max),
            support: w.support(),
        })
    }

    pub fn grid(&self) -> &ScanGrid {
        &self.grid
    }

    pub fn j_max(&self) -> u32 {
        self.j_max
    }

    /// `Θ(ζ) = max_ξ |φ̂₀(ξ)||φ̂₀(ξ-ζ)| + Σ_{j,k} |φ̂(B_{j,k}ξ)||φ̂(B_{j,k}ξ - ζ)|`.
    ///
    /// When the analytic bound on the fine part is below `1e-16` of the coarse max,
    /// only the coarse term is scanned (it separates over the tensor grid).
    pub fn theta(&self, zeta: Vec2) -> f64 {
        let coarse = self.coarse_max(zeta);
        let cap = 2f64.powi(self.j_max as i32 + 1) * self.fine_pair_bound(zeta);
        if cap <= (1e-16 * coarse).max(1e-300) {
            return coarse;
        }
        let (w, w0) = (self.w, self.w0);
        self.grid.max_of(|xi| {
            let mut s = w0.eval(xi).abs() * w0.eval([xi[0] - zeta[0], xi[1] - zeta[1]]).abs();
            self.table.visit(xi, Some(&self.support), |_, _, eta| {
                s += w.eval(eta).abs() * w.eval([eta[0] - zeta[0], eta[1] - zeta[1]]).abs();
            });
            s
        })
    }

    /// Bound on `sup_η |φ̂(η)||φ̂(η-ζ)|` from pairwise Gaussian products.
    pub fn fine_pair_bound(&self, zeta: Vec2) -> f64 {
        let mut total = 0.0;
        for p in &self.w.terms {
            for q in &self.w.terms {
                let r1 = p.width1 * q.width1 / (p.width1 + q.width1);
                let r2 = p.width2 * q.width2 / (p.width2 + q.width2);
                let d1 = zeta[0] - (p.center - q.center);
                total += (p.amplitude * q.amplitude).abs()
                    * (-(r1 * d1 * d1 + r2 * zeta[1] * zeta[1])).exp();
            }
        }
        total
    }

    fn coarse_max(&self, zeta: Vec2) -> f64 {
        let sigma = self.w0.sigma;
        let axis = |g: &SampleGrid, z: f64| {
            (0..g.points_per_axis())
                .map(|i| {
                    let x = g.coord(i);
                    x * x + (x - z) * (x - z)
                })
                .fold(f64::INFINITY, f64::min)
        };
        (0..self.grid.levels)
            .map(|l| {
                let g = self.grid.level(l);
                (-(axis(&g, zeta[0]) + axis(&g, zeta[1])) / sigma).exp()
            })
            .fold(0.0, f64::max)
    }

    /// Slowest Gaussian rate among the coarse term and all term pairs.
    pub fn nominal_rate(&self) -> f64 {
        let mut tau = 1.0 / (2.0 * self.w0.sigma);
        for p in &self.w.terms {
            for q in &self.w.terms {
                tau = tau
                    .min(p.width1 * q.width1 / (p.width1 + q.width1))
                    .min(p.width2 * q.width2 / (p.width2 + q.width2));
            }
        }
        tau
    }
}

/// `Θ(ζ)` on `grid` with scales `1..=j_max`.
pub fn theta(
    w: &WindowSpec,
    w0: &CoarseWindowSpec,
    zeta: Vec2,
    grid: &ScanGrid,
    j_max: u32,
) -> Result<f64> {
    Ok(ThetaContext::new(w, w0, *grid, j_max)?.theta(zeta))
}

/// Gaussian envelope `Θ(ζ) <= C e^{-τ|ζ|²}` fitted to sampled values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub c: f64,
    pub tau: f64,
}

impl Envelope {
    pub fn eval(&self, r: f64) -> f64 {
        self.c * (-self.tau * r * r).exp()
    }
}

/// Fits `(C, τ)` from `Θ` sampled on four rays at six radii up to the radius where
/// the nominal rate predicts `e^{-70}`.
///
/// `τ` is the smallest least-squares decay rate of `ln Θ` against `|ζ|²` over the
/// rays; `C` is then the smallest constant that bounds every sample, including
/// inner rings at `|ζ| = 1, 2, 4` in sixteen directions where `Θ` is most anisotropic.
pub fn fit_envelope(ctx: &ThetaContext<'_>) -> Result<Envelope> {
    let nominal = ctx.nominal_rate();
    let r_max = (70.0 / nominal).sqrt();
    let mut samples = Vec::new();
    let mut tau = f64::INFINITY;
    for d in 0..4 {
        let (s, c) = (d as f64 * PI / 4.0).sin_cos();
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for i in 1..=6 {
            let r = r_max * i as f64 / 6.0;
            let v = ctx.theta([r * c, r * s]);
            samples.push((r, v));
            if v > 1e-250 {
                xs.push(r * r);
                ys.push(v.ln());
            }
        }
        if xs.len() < 3 {
            return Err(Error::InsufficientData {
                needed: 3,
                got: xs.len(),
            });
        }
        tau = tau.min(-linear_fit(&xs, &ys).0);
    }
    if !(tau > 0.0) {
        return Err(Error::invalid("envelope", format!("non-decaying fit, tau = {tau}")));
    }
    for r in [1.0, 2.0, 4.0].into_iter().filter(|&r| r < r_max) {
        for d in 0..16 {
            let (s, c) = (d as f64 * PI / 8.0).sin_cos();
            samples.push((r, ctx.theta([r * c, r * s])));
        }
    }
    let c = samples
        .iter()
        .map(|&(r, v)| v * (tau * r * r).exp())
        .fold(0.0, f64::max);
    Ok(Envelope { c, tau })
}

/// Truncated `Δ(Λ)` with its certified tail.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaEstimate {
    /// `Σ_{0<|γ|<=R} max{Θ(γ), Θ(-γ)}`.
    pub value: f64,
    /// `Σ_{0<|γ|<=R} √(Θ(γ)Θ(-γ))`.
    pub refined: f64,
    /// Envelope bound on the omitted `|γ| > R` terms.
    pub tail_bound: f64,
    pub gamma_radius: f64,
    pub gamma_count: usize,
    /// `(m, Θ(γ))` for every retained dual point, lexicographic in `m`.
    pub thetas: Vec<([i64; 2], f64)>,
}

/// Bound on `Σ_{|γ|>R} C e^{-τ|γ|²}` over a lattice with cell volume `vol` and
/// cell diameter `d`, from comparing each point with its cell.
pub fn gaussian_lattice_tail(env: &Envelope, vol: f64, d: f64, radius: f64) -> f64 {
    let u = radius - 2.0 * d;
    if u <= 0.0 {
        return f64::INFINITY;
    }
    env.c * PI / (vol * env.tau) * (-env.tau * u * u).exp() * (1.0 + d / u)
}

/// `Δ(Λ)` summed over the dual lattice up to `gamma_radius` (default `12/√τ`).
///
/// Fails with [`Error::TailCondition`] when the envelope tail beyond the radius is not
/// below `1e-6 · (partial sum + 1e-30)`.
pub fn delta_lattice_with(
    ctx: &ThetaContext<'_>,
    env: &Envelope,
    lat: &Lattice,
    gamma_radius: Option<f64>,
) -> Result<DeltaEstimate> {
    let dual = dual_lattice(lat)?;
    let radius = gamma_radius.unwrap_or(12.0 / env.tau.sqrt());
    if !(radius > 0.0) {
        return Err(Error::invalid("gamma_radius", format!("must be positive, got {radius}")));
    }
    let points = lattice_enumerate(&dual, radius);
    let thetas: Vec<([i64; 2], f64)> = points
        .iter()
        .map(|p| (p.m, ctx.theta(p.point)))
        .collect();
    let lookup: HashMap<[i64; 2], f64> = thetas.iter().cloned().collect();
    let mut value = 0.0;
    let mut refined = 0.0;
    for &(m, t) in &thetas {
        // the enumeration is symmetric, so -m is present
        let t_neg = lookup.get(&[-m[0], -m[1]]).copied().unwrap_or(t);
        value += t.max(t_neg);
        refined += (t * t_neg).sqrt();
    }
    let vol = dual.volume();
    let d = dual.diameter();
    let tail_bound = gaussian_lattice_tail(env, vol, d, radius);
    let allowed = 1e-6 * (value + 1e-30);
    if !(tail_bound < allowed) {
        let mut required = radius.max(2.0 * d + 1e-12);
        while gaussian_lattice_tail(env, vol, d, required) >= allowed && required < 1e12 {
            required *= 1.05;
        }
        return Err(Error::TailCondition { radius, required });
    }
    Ok(DeltaEstimate {
        value,
        refined,
        tail_bound,
        gamma_radius: radius,
        gamma_count: points.len(),
        thetas,
    })
}

/// Convenience form of [`delta_lattice_with`] that fits the envelope itself.
pub fn delta_lattice(
    w: &WindowSpec,
    w0: &CoarseWindowSpec,
    lat: &Lattice,
    grid: &ScanGrid,
    j_max: u32,
    gamma_radius: Option<f64>,
) -> Result<DeltaEstimate> {
    let ctx = ThetaContext::new(w, w0, *grid, j_max)?;
    let env = fit_envelope(&ctx)?;
    delta_lattice_with(&ctx, &env, lat, gamma_radius)
}

/// Truncation choices for [`certify_frame`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyConfig {
    pub j_max: u32,
    /// Grid for the covering extrema `A`, `B`.
    pub covering: SampleGrid,
    /// Sup grid for `Θ`.
    pub theta_grid: ScanGrid,
    pub gamma_radius: Option<f64>,
    /// Use `Σ √(Θ(γ)Θ(-γ))` in place of `Σ max{Θ(γ), Θ(-γ)}`.
    pub refined: bool,
}

impl CertifyConfig {
    /// Covering box from [`WindowSpec::covering_extent`] at `n_cover`² and the
    /// default `Θ` grid at `n_theta` per level.
    pub fn defaults(w: &WindowSpec, j_max: u32, n_cover: usize, n_theta: usize) -> Result<Self> {
        Ok(Self {
            j_max,
            covering: covering_grid(w, j_max, n_cover)?,
            theta_grid: default_theta_grid(w, j_max, n_theta)?,
            gamma_radius: None,
            refined: false,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameCertificate {
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub lower: f64,
    pub upper: f64,
    pub valid: bool,
    pub volume: f64,
    pub j_max: u32,
    pub gamma_radius: f64,
    pub gamma_count: usize,
    pub grid_n: usize,
    pub grid_extent: f64,
    pub tau_fit: f64,
    pub c_fit: f64,
    pub delta_tail: f64,
    pub symbol_tail: f64,
    /// `Σ √(Θ(γ)Θ(-γ))`, always reported.
    pub delta_refined: f64,
    pub refined: bool,
    pub under_resolved: bool,
}

impl FrameCertificate {
    /// Builds bounds from the covering extrema and a defect value.
    pub fn from_parts(a: f64, b: f64, delta: f64, volume: f64) -> Self {
        Self {
            a,
            b,
            delta,
            lower: (a - delta) / volume,
            upper: (b + delta) / volume,
            valid: delta < a,
            volume,
            j_max: 0,
            gamma_radius: 0.0,
            gamma_count: 0,
            grid_n: 0,
            grid_extent: 0.0,
            tau_fit: 0.0,
            c_fit: 0.0,
            delta_tail: 0.0,
            symbol_tail: 0.0,
            delta_refined: delta,
            refined: false,
            under_resolved: false,
        }
    }

    pub fn to_text(&self) -> String {
        let mut w = kv::Writer::new();
        w.entry("A", self.a)
            .entry("B", self.b)
            .entry("Delta", self.delta)
            .entry("lower", self.lower)
            .entry("upper", self.upper)
            .entry("valid", self.valid)
            .entry("j_max", self.j_max)
            .entry("gamma_radius", self.gamma_radius)
            .entry("grid_n", self.grid_n)
            .entry("grid_extent", self.grid_extent)
            .entry("tau_fit", self.tau_fit)
            .entry("C_fit", self.c_fit)
            .entry("volume", self.volume)
            .entry("gamma_count", self.gamma_count)
            .entry("Delta_tail", self.delta_tail)
            .entry("symbol_tail", self.symbol_tail)
            .entry("Delta_refined", self.delta_refined)
            .entry("refined", self.refined)
            .entry("under_resolved", self.under_resolved);
        w.finish()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let sections = kv::parse(text)?;
        let s = &sections[0];
        let flag = |key: &str| -> Result<bool> {
            match s.str(key) {
                None => Ok(false),
                Some("true") => Ok(true),
                Some("false") => Ok(false),
                Some(other) => Err(Error::Parse {
                    line: s.get(key).map_or(0, |e| e.line),
                    reason: format!("`{key}` must be true or false, got {other}"),
                }),
            }
        };
        let opt = |key: &str| -> Result<f64> { Ok(s.f64(key)?.unwrap_or(0.0)) };
        Ok(Self {
            a: s.require_f64("A")?,
            b: s.require_f64("B")?,
            delta: s.require_f64("Delta")?,
            lower: s.require_f64("lower")?,
            upper: s.require_f64("upper")?,
            valid: flag("valid")?,
            volume: opt("volume")?,
            j_max: s.u64("j_max")?.unwrap_or(0) as u32,
            gamma_radius: opt("gamma_radius")?,
            gamma_count: s.u64("gamma_count")?.unwrap_or(0) as usize,
            grid_n: s.u64("grid_n")?.unwrap_or(0) as usize,
            grid_extent: opt("grid_extent")?,
            tau_fit: opt("tau_fit")?,
            c_fit: opt("C_fit")?,
            delta_tail: opt("Delta_tail")?,
            symbol_tail: opt("symbol_tail")?,
            delta_refined: opt("Delta_refined")?,
            refined: flag("refined")?,
            under_resolved: flag("under_resolved")?,
        })
    }
}

/// Assembles `A`, `B` and `Δ(Λ)` into frame bounds `|Λ|⁻¹(A - Δ)`, `|Λ|⁻¹(B + Δ)`.
pub fn certify_frame(
    w: &WindowSpec,
    w0: &CoarseWindowSpec,
    lat: &Lattice,
    cfg: &CertifyConfig,
) -> Result<FrameCertificate> {
    let m = compute_symbol_m(w, w0, &cfg.covering, cfg.j_max)?;
    let ctx = ThetaContext::new(w, w0, cfg.theta_grid, cfg.j_max)?;
    let env = fit_envelope(&ctx)?;
    let d = delta_lattice_with(&ctx, &env, lat, cfg.gamma_radius)?;
    let delta = if cfg.refined { d.refined } else { d.value };
    let mut cert = FrameCertificate::from_parts(m.min, m.max, delta, lat.volume());
    cert.j_max = cfg.j_max;
    cert.gamma_radius = d.gamma_radius;
    cert.gamma_count = d.gamma_count;
    cert.grid_n = cfg.covering.n;
    cert.grid_extent = cfg.covering.extent;
    cert.tau_fit = env.tau;
    cert.c_fit = env.c;
    cert.delta_tail = d.tail_bound;
    cert.symbol_tail = m.tail_bound;
    cert.delta_refined = d.refined;
    cert.refined = cfg.refined;
    cert.under_resolved = m.under_resolved;
    Ok(cert)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticFit {
    /// Decay rate: `ln Δ ≈ ln C - τ / a²`.
    pub tau: f64,
    pub prefactor: f64,
    pub slope: f64,
    pub r_squared: f64,
    pub used: usize,
}

/// Least-squares fit of `ln Δ` against `1/a²` for sweep entries `(a, b, Δ)`; the
/// larger of `a`, `b` sets the abscissa. Nonpositive `Δ` are dropped.
pub fn asymptotic_fit(sweep: &[(f64, f64, f64)]) -> Result<AsymptoticFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = sweep
        .iter()
        .filter(|&&(a, b, d)| d > 0.0 && d.is_finite() && a > 0.0 && b > 0.0)
        .map(|&(a, b, d)| {
            let s = a.max(b);
            (1.0 / (s * s), d.ln())
        })
        .unzip();
    if xs.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: xs.len(),
        });
    }
    let (slope, intercept, r_squared) = linear_fit(&xs, &ys);
    Ok(AsymptoticFit {
        tau: -slope,
        prefactor: intercept.exp(),
        slope,
        r_squared,
        used: xs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::window::presets;

    fn small_setup() -> (WindowSpec, CoarseWindowSpec) {
        (presets::unit_window(), presets::unit_coarse())
    }

    #[test]
    fn zero_fine_window_leaves_coarse_square() {
        let (w, w0) = small_setup();
        let zero = w.amplified(0.0);
        let grid = SampleGrid::new(16, 4.0).unwrap();
        let m = compute_symbol_m(&zero, &w0, &grid, 2).unwrap();
        assert_eq!(m.max, 1.0);
        for i2 in 0..=16 {
            for i1 in 0..=16 {
                let c = w0.eval(m.point(i1, i2));
                assert!((m.at(i1, i2) - c * c).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn doubling_amplitudes_quadruples_fine_part() {
        let (w, w0) = small_setup();
        let grid = SampleGrid::new(24, 6.0).unwrap();
        let m1 = compute_symbol_m(&w, &w0, &grid, 2).unwrap();
        let m2 = compute_symbol_m(&w.amplified(2.0), &w0, &grid, 2).unwrap();
        for i2 in 0..=24 {
            for i1 in 0..=24 {
                let c = w0.eval(m1.point(i1, i2));
                let f1 = m1.at(i1, i2) - c * c;
                let f2 = m2.at(i1, i2) - c * c;
                assert!((f2 - 4.0 * f1).abs() <= 1e-12 * (1.0 + f2.abs()));
            }
        }
    }

    #[test]
    fn theta_at_zero_is_symbol_max() {
        let (w, w0) = small_setup();
        let grid = SampleGrid::new(64, 8.0).unwrap();
        let m = compute_symbol_m(&w, &w0, &grid, 2).unwrap();
        let t0 = theta(&w, &w0, [0.0, 0.0], &ScanGrid::uniform(64, 8.0).unwrap(), 2).unwrap();
        assert!((t0 - m.max).abs() <= 1e-12 * m.max, "{t0} vs {}", m.max);
    }

    #[test]
    fn far_shift_leaves_coarse_only() {
        let (w, w0) = small_setup();
        let ctx = ThetaContext::new(&w, &w0, ScanGrid::uniform(32, 8.0).unwrap(), 2).unwrap();
        let zeta = [500.0, 0.0];
        assert!(ctx.fine_pair_bound(zeta) < 1e-300);
        let narrow = CoarseWindowSpec::new(1e-3).unwrap();
        let ctx = ThetaContext::new(&w, &narrow, ScanGrid::uniform(32, 8.0).unwrap(), 2).unwrap();
        assert_eq!(ctx.theta(zeta), 0.0);
    }

    #[test]
    fn symbol_tail_bounds_next_scale() {
        let (w, w0) = small_setup();
        let grid = SampleGrid::new(48, 12.0).unwrap();
        let m2 = compute_symbol_m(&w, &w0, &grid, 2).unwrap();
        let m3 = compute_symbol_m(&w, &w0, &grid, 3).unwrap();
        for (a, b) in m2.values.iter().zip(&m3.values) {
            assert!((b - a).abs() <= m2.tail_bound * (1.0 + 1e-12) + 1e-300);
        }
    }

    #[test]
    fn refinement_widens_extrema() {
        let (w, w0) = small_setup();
        let coarse = compute_symbol_m(&w, &w0, &SampleGrid::new(32, 4.0).unwrap(), 2).unwrap();
        let fine = compute_symbol_m(&w, &w0, &SampleGrid::new(64, 4.0).unwrap(), 2).unwrap();
        assert!(fine.max >= coarse.max && fine.min <= coarse.min);
    }

    #[test]
    fn asymptotic_fit_recovers_exact_law() {
        let sweep: Vec<_> = [0.8, 0.6, 0.4, 0.3]
            .iter()
            .map(|&a: &f64| (a, a, (-2.0 / (a * a)).exp()))
            .collect();
        let fit = asymptotic_fit(&sweep).unwrap();
        assert!((fit.tau - 2.0).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_fit_finds_dominant_rate() {
        let law = |a: f64| (-2.0 / (a * a)).exp() + (-5.0 / (a * a)).exp();
        let wide: Vec<_> = [1.0, 0.8, 0.6, 0.5].iter().map(|&a| (a, a, law(a))).collect();
        let narrow: Vec<_> = [0.3, 0.25, 0.2, 0.15].iter().map(|&a| (a, a, law(a))).collect();
        let tw = asymptotic_fit(&wide).unwrap().tau;
        let tn = asymptotic_fit(&narrow).unwrap().tau;
        assert!((tn - 2.0).abs() < (tw - 2.0).abs());
        assert!((tn - 2.0).abs() < 1e-6);
    }

    #[test]
    fn asymptotic_fit_drops_nonpositive() {
        let sweep = [(0.5, 0.5, 0.0), (0.4, 0.4, -1.0), (0.3, 0.3, 1e-3), (0.2, 0.2, 1e-5)];
        assert!(matches!(
            asymptotic_fit(&sweep),
            Err(Error::InsufficientData { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn lattice_tail_decreases() {
        let env = Envelope { c: 1.0, tau: 0.5 };
        let t1 = gaussian_lattice_tail(&env, 1.0, 1.0, 5.0);
        let t2 = gaussian_lattice_tail(&env, 1.0, 1.0, 8.0);
        assert!(t2 < t1 && t2 > 0.0);
        assert!(gaussian_lattice_tail(&env, 1.0, 1.0, 1.0).is_infinite());
        // direct sum over the unit lattice beyond radius 8 is below the bound
        let mut direct = 0.0;
        for m1 in -30i64..=30 {
            for m2 in -30i64..=30 {
                let r2 = (m1 * m1 + m2 * m2) as f64;
                if r2.sqrt() > 8.0 {
                    direct += (-0.5 * r2).exp();
                }
            }
        }
        let d = (2.0f64).sqrt() / 2.0;
        assert!(direct <= gaussian_lattice_tail(&env, 1.0, d, 8.0));
    }

    #[test]
    fn certificate_text_round_trip() {
        let mut c = FrameCertificate::from_parts(0.95, 2.25, 0.1, 0.5);
        c.j_max = 8;
        c.tau_fit = 0.03;
        let back = FrameCertificate::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert!((c.lower - 1.7).abs() < 1e-12 && (c.upper - 4.7).abs() < 1e-12);
    }
}
