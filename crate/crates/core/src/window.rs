//! Frequency-side windows built from sums of anisotropic Gaussians.
//!
//! The fine window is `φ̂(ξ) = Σ a_k exp(-(δ¹_k (ξ₁ - t_k)² + δ²_k ξ₂²))`; the corrector
//! amplitudes are solved so that `φ̂` and its first `N` ξ₁-derivatives vanish at the
//! origin. The coarse window is `φ̂₀(ξ) = exp(-|ξ|²/σ)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{FrequencySupport, SampleGrid, Vec2};
use crate::kv;
use crate::linalg::{linear_fit, Svd};

/// Terms below `SUPPORT_TOL · Σ|a_k|` are treated as zero when pruning sums.
pub const SUPPORT_TOL: f64 = 1e-20;

/// The strip around `ξ₁ = 0` where `|φ̂| <= CORE_TOL · Σ|a_k|` is skipped in band sums.
pub const CORE_TOL: f64 = 1e-14;

/// Largest admissible condition number of the moment matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// Residual moment tolerance accepted after design.
pub const MOMENT_TOL: f64 = 1e-8;

/// A real-valued function on the frequency plane with a known support box.
pub trait FrequencyWindow: Sync {
    fn value(&self, xi: Vec2) -> f64;

    /// Box outside of which the window is negligible.
    fn support(&self) -> FrequencySupport;

    /// Spatial standard deviation of the widest component, per axis.
    fn spatial_width(&self) -> Vec2;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianTerm {
    pub amplitude: f64,
    pub center: f64,
    pub width1: f64,
    pub width2: f64,
}

impl GaussianTerm {
    pub fn new(amplitude: f64, center: f64, width1: f64, width2: f64) -> Result<Self> {
        if !(width1 > 0.0) || !(width2 > 0.0) {
            return Err(Error::invalid(
                "width",
                format!("Gaussian widths must be positive, got ({width1}, {width2})"),
            ));
        }
        if !amplitude.is_finite() || !center.is_finite() {
            return Err(Error::invalid("term", "non-finite amplitude or center"));
        }
        Ok(Self {
            amplitude,
            center,
            width1,
            width2,
        })
    }

    #[inline]
    pub fn value(&self, xi: Vec2) -> f64 {
        let d = xi[0] - self.center;
        self.amplitude * (-(self.width1 * d * d + self.width2 * xi[1] * xi[1])).exp()
    }

    /// `dⁿ/dtⁿ` of the unit-amplitude profile `exp(-δ¹ (t - t_k)²)` at `t`.
    pub fn profile_derivative(&self, n: usize, t: f64) -> f64 {
        gaussian_derivative(n, self.width1, self.center, t)
    }
}

/// `dⁿ/dtⁿ exp(-c (t - t₀)²)` via the Hermite recurrence
/// `H_{n+1}(x) = 2x H_n(x) - 2n H_{n-1}(x)`, `x = √c (t - t₀)`.
pub fn gaussian_derivative(n: usize, c: f64, t0: f64, t: f64) -> f64 {
    let sc = c.sqrt();
    let x = sc * (t - t0);
    let (mut h_prev, mut h) = (1.0, 2.0 * x);
    if n == 0 {
        h = 1.0;
    } else {
        for m in 1..n {
            let next = 2.0 * x * h - 2.0 * m as f64 * h_prev;
            h_prev = h;
            h = next;
        }
    }
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    sign * sc.powi(n as i32) * h * (-x * x).exp()
}

/// Placement of one corrector Gaussian; its amplitude is solved by
/// [`design_window`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectorPlacement {
    pub center: f64,
    pub width1: f64,
    pub width2: f64,
}

/// Fine window: a sum of Gaussian terms, the first being the main lobe.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSpec {
    pub terms: Vec<GaussianTerm>,
    pub moment_order: u32,
    /// Fitted decay constants `(δ, ς)`, filled in by [`verify_decay_assumptions`].
    pub decay: Option<(f64, f64)>,
}

impl WindowSpec {
    pub fn new(terms: Vec<GaussianTerm>, moment_order: u32) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("terms", "a window needs at least one term"));
        }
        Ok(Self {
            terms,
            moment_order,
            decay: None,
        })
    }

    #[inline]
    pub fn eval(&self, xi: Vec2) -> f64 {
        self.terms.iter().map(|t| t.value(xi)).sum()
    }

    /// ξ₁-profile `g₁(t) = Σ a_k exp(-δ¹_k (t - t_k)²)` (the window on the ξ₁ axis).
    pub fn profile(&self, t: f64) -> f64 {
        self.eval([t, 0.0])
    }

    /// `dⁿ/dtⁿ` of the ξ₁-profile, analytically.
    pub fn profile_derivative(&self, n: usize, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| term.amplitude * term.profile_derivative(n, t))
            .sum()
    }

    /// Residual moments `|∂ⁿ_{ξ₁} φ̂(0)|` for `n = 0..=moment_order`.
    pub fn residual_moments(&self) -> Vec<f64> {
        (0..=self.moment_order as usize)
            .map(|n| self.profile_derivative(n, 0.0).abs())
            .collect()
    }

    pub fn amplitude_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.amplitude.abs()).sum()
    }

    /// Same window with every amplitude multiplied by `s`.
    pub fn amplified(&self, s: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.amplitude *= s;
        }
        out.decay = None;
        out
    }

    /// Frequency rescaling `ξ ↦ ξ / s`: centers are multiplied by `s` and the
    /// exponent coefficients divided by `s²`. Moments stay annihilated.
    pub fn rescaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.center *= s;
            t.width1 /= s * s;
            t.width2 /= s * s;
        }
        out.decay = None;
        out
    }

    /// Common `ξ₂` coefficient when every term shares it (then `φ̂ = g₁(ξ₁) g₂(ξ₂)`).
    pub fn shared_width2(&self) -> Option<f64> {
        let w = self.terms[0].width2;
        self.terms.iter().all(|t| t.width2 == w).then_some(w)
    }

    /// Half-width of the strip `|ξ₁| < ρ` on which `|φ̂| <= CORE_TOL · Σ|a_k|`.
    ///
    /// Only separable windows get a nonzero radius; `|g₁|` is sampled densely on
    /// `[-ρ, ρ]` with a safety factor of two.
    pub fn core_radius(&self) -> f64 {
        if self.shared_width2().is_none() {
            return 0.0;
        }
        let tol = CORE_TOL * self.amplitude_sum();
        let below = |rho: f64| {
            (0..=400).all(|i| {
                let t = rho * (i as f64 / 200.0 - 1.0);
                2.0 * self.profile(t).abs() <= tol
            })
        };
        let mut rho = 1e-9;
        if !below(rho) {
            return 0.0;
        }
        while below(2.0 * rho) && rho < 1e6 {
            rho *= 2.0;
        }
        rho
    }

    /// Center of the main lobe (first term).
    pub fn main_center(&self) -> f64 {
        self.terms[0].center
    }

    /// Spacing below which every term is resolved at scale `j = 1` (half the
    /// smallest standard deviation after the `D_1` stretch).
    pub fn finest_bandwidth(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let s1 = 4.0 / (2.0 * t.width1).sqrt();
                let s2 = 2.0 / (2.0 * t.width2).sqrt();
                s1.min(s2)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Documented box for covering-sum extrema: `4^{min(j_max,4)-1} · t_main`.
    ///
    /// Beyond `4^{j_max} t_main` the truncated sum loses its outermost scale, so the
    /// box stays inside the covered region while spanning at least one full ring
    /// period `×4` of the self-similar pattern when `j_max >= 2`.
    pub fn covering_extent(&self, j_max: u32) -> f64 {
        let e = j_max.clamp(1, 4) as i32 - 1;
        4f64.powi(e) * self.main_center().abs().max(f64::MIN_POSITIVE)
    }

    pub fn to_text(&self, coarse: Option<&CoarseWindowSpec>) -> String {
        let mut w = kv::Writer::new();
        w.section("meta").entry("moment_order", self.moment_order);
        if let Some(c) = coarse {
            w.section("phi0").entry("sigma", c.sigma);
        }
        for t in &self.terms {
            w.section("term")
                .entry("amplitude", t.amplitude)
                .entry("center", t.center)
                .entry("width1", t.width1)
                .entry("width2", t.width2);
        }
        w.finish()
    }

    /// Parses a window file; returns the fine window and the optional coarse window.
    pub fn from_text(text: &str) -> Result<(Self, Option<CoarseWindowSpec>)> {
        let sections = kv::parse(text)?;
        let mut order = 0u32;
        let mut coarse = None;
        let mut terms = Vec::new();
        for sec in &sections {
            match sec.name.as_str() {
                "meta" => {
                    if let Some(n) = sec.u64("moment_order")? {
                        order = n as u32;
                    }
                }
                "phi0" => coarse = Some(CoarseWindowSpec::new(sec.require_f64("sigma")?)?),
                "term" => terms.push(GaussianTerm::new(
                    sec.require_f64("amplitude")?,
                    sec.require_f64("center")?,
                    sec.require_f64("width1")?,
                    sec.require_f64("width2")?,
                )?),
                "" if sec.entries.is_empty() => {}
                other => {
                    return Err(Error::Parse {
                        line: sec.line,
                        reason: format!("unknown section [{other}]"),
                    })
                }
            }
        }
        Ok((Self::new(terms, order)?, coarse))
    }
}

impl FrequencyWindow for WindowSpec {
    fn value(&self, xi: Vec2) -> f64 {
        self.eval(xi)
    }

    fn support(&self) -> FrequencySupport {
        let tol = SUPPORT_TOL * self.amplitude_sum();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut h = 0.0f64;
        for t in &self.terms {
            let a = t.amplitude.abs();
            if a <= tol {
                continue;
            }
            let l = (a / tol).ln();
            let r1 = (l / t.width1).sqrt();
            lo = lo.min(t.center - r1);
            hi = hi.max(t.center + r1);
            h = h.max((l / t.width2).sqrt());
        }
        if lo > hi {
            return FrequencySupport::new(0.0, 0.0, 0.0);
        }
        FrequencySupport::new(lo, hi, h).with_core(self.core_radius())
    }

    fn spatial_width(&self) -> Vec2 {
        let mut w = [0.0f64; 2];
        for t in &self.terms {
            w[0] = w[0].max(t.width1.sqrt() / (PI * 2f64.sqrt()));
            w[1] = w[1].max(t.width2.sqrt() / (PI * 2f64.sqrt()));
        }
        w
    }
}

/// Pointwise `φ̂(ξ)`.
pub fn eval_phi_hat(w: &WindowSpec, xi: Vec2) -> f64 {
    w.eval(xi)
}

/// Coarse window `φ̂₀(ξ) = exp(-|ξ|²/σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseWindowSpec {
    pub sigma: f64,
}

impl CoarseWindowSpec {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
        }
        Ok(Self { sigma })
    }

    #[inline]
    pub fn eval(&self, xi: Vec2) -> f64 {
        (-(xi[0] * xi[0] + xi[1] * xi[1]) / self.sigma).exp()
    }

    /// Same window under the frequency rescaling of [`WindowSpec::rescaled`].
    pub fn rescaled(&self, s: f64) -> Self {
        Self {
            sigma: self.sigma * s * s,
        }
    }

    /// Radius beyond which `φ̂₀ < SUPPORT_TOL`.
    pub fn support_radius(&self) -> f64 {
        (self.sigma * (1.0 / SUPPORT_TOL).ln()).sqrt()
    }

    /// Spatial standard deviation of `|φ₀|`.
    pub fn spatial_width(&self) -> f64 {
        1.0 / (PI * (2.0 * self.sigma).sqrt())
    }
}

/// Pointwise `φ̂₀(ξ)`.
pub fn eval_phi0_hat(w0: &CoarseWindowSpec, xi: Vec2) -> f64 {
    w0.eval(xi)
}

/// Solves the corrector amplitudes so that `∂ⁿ_{ξ₁} φ̂(0) = 0` for `n = 0..=order`.
///
/// The system is `M a = -v` with `M[n][k] = dⁿ/dtⁿ exp(-δ¹_k (t - t_k)²)|_{t=0}` and `v`
/// the same derivatives of the main term. With more correctors than equations the
/// minimum-norm solution is returned.
pub fn design_window(
    main: GaussianTerm,
    correctors: &[CorrectorPlacement],
    order: u32,
) -> Result<WindowSpec> {
    let rows = order as usize + 1;
    if correctors.len() < rows {
        return Err(Error::DegenerateCorrectors {
            reason: format!(
                "{} correctors cannot annihilate {rows} moments",
                correctors.len()
            ),
        });
    }
    let mut placements = Vec::with_capacity(correctors.len());
    for c in correctors {
        placements.push(GaussianTerm::new(0.0, c.center, c.width1, c.width2)?);
    }
    let matrix: Vec<Vec<f64>> = (0..rows)
        .map(|n| {
            placements
                .iter()
                .map(|p| p.profile_derivative(n, 0.0))
                .collect()
        })
        .collect();
    let rhs: Vec<f64> = (0..rows)
        .map(|n| -main.amplitude * main.profile_derivative(n, 0.0))
        .collect();
    let svd = Svd::new(&matrix);
    let cond = svd.condition();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::DegenerateCorrectors {
            reason: format!("moment matrix condition number {cond:e} exceeds {MAX_CONDITION:e}"),
        });
    }
    let amps = svd.solve(&rhs, 1e-15);
    let mut terms = vec![main];
    for (p, a) in placements.iter().zip(amps) {
        terms.push(GaussianTerm { amplitude: a, ..*p });
    }
    let spec = WindowSpec::new(terms, order)?;
    let scale = 1.0 + spec.amplitude_sum();
    let worst = spec
        .residual_moments()
        .into_iter()
        .enumerate()
        .map(|(n, r)| r / (1.0 + max_term_derivative(&spec, n)))
        .fold(0.0, f64::max);
    if worst > MOMENT_TOL * scale {
        return Err(Error::DegenerateCorrectors {
            reason: format!("residual moment {worst:e} after solve"),
        });
    }
    Ok(spec)
}

fn max_term_derivative(spec: &WindowSpec, n: usize) -> f64 {
    spec.terms
        .iter()
        .map(|t| (t.amplitude * t.profile_derivative(n, 0.0)).abs())
        .fold(0.0, f64::max)
}

/// Outcome of [`verify_decay_assumptions`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayReport {
    /// Gaussian rate `δ` of the envelope `min(1, |ξ₁|^ς) e^{-δ|ξ|²}`.
    pub delta: f64,
    /// Vanishing order `ς` at the origin (log-log slope of `|φ̂(ξ₁, 0)|`).
    pub varsigma: f64,
    /// Max over the grid of `|φ̂| / (Σ|a_k| · min(1,|ξ₁|^ς) e^{-δ|ξ|²})`.
    pub max_ratio: f64,
    /// Whether `ς > 2`.
    pub varsigma_ok: bool,
}

/// Fits the decay constants `(δ, ς)` of `|φ̂(ξ)| ≲ min(1, |ξ₁|^ς) e^{-δ|ξ|²}`.
///
/// `ς` is the smaller of the two one-sided log-log slopes of `|φ̂(ξ₁, 0)|` over
/// `ξ₁ ∈ [10⁻², 10⁻¹]·w`, `w` the narrowest ξ₁ standard deviation, clamped at 0.
/// `δ` is the largest rate for which the normalized ratio stays at most 1 over the
/// outer half of the grid; `max_ratio` is then taken over the whole grid (points on
/// the `ξ₁ = 0` axis are skipped).
pub fn verify_decay_assumptions(w: &WindowSpec, grid: &SampleGrid) -> DecayReport {
    let width = w
        .terms
        .iter()
        .map(|t| 1.0 / (2.0 * t.width1).sqrt())
        .fold(f64::INFINITY, f64::min);
    let mut slopes = Vec::new();
    for side in [1.0, -1.0] {
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for i in 0..=16 {
            let t = width * 1e-2 * 10f64.powf(i as f64 / 16.0);
            let v = w.profile(side * t).abs();
            if v > 0.0 {
                xs.push(t.ln());
                ys.push(v.ln());
            }
        }
        if xs.len() >= 3 {
            slopes.push(linear_fit(&xs, &ys).0);
        } else {
            // identically zero near the origin: arbitrarily flat
            slopes.push(f64::INFINITY);
        }
    }
    let varsigma = slopes.into_iter().fold(f64::INFINITY, f64::min).max(0.0);
    let norm = w.amplitude_sum();
    let envelope_log = |xi: Vec2| -> f64 {
        let a1 = xi[0].abs();
        if a1 >= 1.0 || varsigma == 0.0 {
            0.0
        } else {
            varsigma * a1.ln()
        }
    };
    let m = grid.points_per_axis();
    let mut delta = f64::INFINITY;
    for i2 in 0..m {
        for i1 in 0..m {
            let xi = [grid.coord(i1), grid.coord(i2)];
            let r2 = xi[0] * xi[0] + xi[1] * xi[1];
            if r2.sqrt() < 0.5 * grid.extent || xi[0] == 0.0 {
                continue;
            }
            let v = w.eval(xi).abs();
            if v < 1e-280 {
                continue;
            }
            let d = (norm.ln() + envelope_log(xi) - v.ln()) / r2;
            delta = delta.min(d);
        }
    }
    let delta = if delta.is_finite() { delta.max(0.0) } else { 0.0 };
    let mut max_ratio = 0.0f64;
    for i2 in 0..m {
        for i1 in 0..m {
            let xi = [grid.coord(i1), grid.coord(i2)];
            if xi[0] == 0.0 {
                continue;
            }
            let r2 = xi[0] * xi[0] + xi[1] * xi[1];
            let log_env = norm.ln() + envelope_log(xi) - delta * r2;
            let v = w.eval(xi).abs();
            if v == 0.0 {
                continue;
            }
            max_ratio = max_ratio.max((v.ln() - log_env).exp());
        }
    }
    DecayReport {
        delta,
        varsigma,
        max_ratio,
        varsigma_ok: varsigma > 2.0,
    }
}

/// Ready-made window designs.
pub mod presets {
    use super::*;

    /// Main lobe `exp(-(t-10)²/100)` with unit-width correctors at `1, 0.5, 0.25, 0`,
    /// three vanishing moments and a shared `ξ₂` profile `exp(-ξ₂²/1100)`.
    pub fn reference_design() -> (GaussianTerm, Vec<CorrectorPlacement>, u32) {
        let w2 = 1.0 / 1100.0;
        let main = GaussianTerm {
            amplitude: 1.0,
            center: 10.0,
            width1: 0.01,
            width2: w2,
        };
        let correctors = [1.0, 0.5, 0.25, 0.0]
            .into_iter()
            .map(|center| CorrectorPlacement {
                center,
                width1: 1.0,
                width2: w2,
            })
            .collect();
        (main, correctors, 3)
    }

    pub fn reference_window() -> WindowSpec {
        let (main, correctors, order) = reference_design();
        design_window(main, &correctors, order).expect("reference design is well posed")
    }

    /// Coarse window whose square is `exp(-|ξ|²/10⁴)`, matching the reference design.
    pub fn reference_coarse() -> CoarseWindowSpec {
        CoarseWindowSpec { sigma: 20000.0 }
    }

    /// The reference design rescaled so that the main lobe sits at `ξ₁ = 1`.
    pub fn unit_window() -> WindowSpec {
        reference_window().rescaled(0.1)
    }

    /// Window for decay probes on a 512² grid of half-width 1: main lobe `exp(-4(t-1)²)`
    /// with equal-width correctors at `0.5, 0.25, 0, -0.25`, a broad `ξ₂` profile so each
    /// packet covers its whole angular band, rescaled so that scale `j = 5` fits.
    pub fn probe_window() -> WindowSpec {
        let w2 = 0.02;
        let main = GaussianTerm {
            amplitude: 1.0,
            center: 1.0,
            width1: 4.0,
            width2: w2,
        };
        let correctors: Vec<CorrectorPlacement> = [0.5, 0.25, 0.0, -0.25]
            .into_iter()
            .map(|center| CorrectorPlacement {
                center,
                width1: 4.0,
                width2: w2,
            })
            .collect();
        design_window(main, &correctors, 3)
            .expect("probe design is well posed")
            .rescaled(0.055)
    }

    /// Coarse window `exp(-|ξ|²/0.1)` for [`probe_window`].
    pub fn probe_coarse() -> CoarseWindowSpec {
        CoarseWindowSpec { sigma: 0.1 }
    }

    /// Coarse window `exp(-|ξ|²/16)` for [`unit_window`]: narrow enough in frequency
    /// for moderate lattices while keeping the covering symbol bounded below.
    pub fn unit_coarse() -> CoarseWindowSpec {
        CoarseWindowSpec { sigma: 16.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::presets::*;
    use super::*;

    #[test]
    fn hermite_derivatives_match_closed_forms() {
        // f = e^{-c(t-a)^2}; f' = -2c(t-a) f; f'' = (4c²(t-a)² - 2c) f
        let (c, a, t): (f64, f64, f64) = (0.7, 1.3, -0.4);
        let f = (-c * (t - a) * (t - a)).exp();
        assert!((gaussian_derivative(0, c, a, t) - f).abs() < 1e-15);
        assert!((gaussian_derivative(1, c, a, t) + 2.0 * c * (t - a) * f).abs() < 1e-14);
        let d2 = (4.0 * c * c * (t - a) * (t - a) - 2.0 * c) * f;
        assert!((gaussian_derivative(2, c, a, t) - d2).abs() < 1e-14);
        let u = t - a;
        let d3 = (-8.0 * c.powi(3) * u.powi(3) + 12.0 * c * c * u) * f;
        assert!((gaussian_derivative(3, c, a, t) - d3).abs() < 1e-13);
    }

    #[test]
    fn reference_amplitudes() {
        let w = reference_window();
        let expect = [0.578, -3.45205, 4.66167, -2.27129];
        for (term, e) in w.terms[1..].iter().zip(expect) {
            assert!(
                (term.amplitude - e).abs() <= 5e-3 * e.abs(),
                "{} vs {e}",
                term.amplitude
            );
        }
        assert!(w.residual_moments().iter().all(|&r| r < 1e-8));
    }

    #[test]
    fn single_corrector_solve() {
        let main = GaussianTerm::new(1.0, 3.0, 0.5, 1.0).unwrap();
        let corr = [CorrectorPlacement {
            center: 3.0,
            width1: 0.5,
            width2: 1.0,
        }];
        let w = design_window(main, &corr, 0).unwrap();
        let expect = -main.profile_derivative(0, 0.0) / w.terms[1].profile_derivative(0, 0.0);
        assert!((w.terms[1].amplitude - expect).abs() < 1e-14);
        assert!((w.terms[1].amplitude + 1.0).abs() < 1e-14);
    }

    #[test]
    fn duplicate_centers_are_degenerate() {
        let main = GaussianTerm::new(1.0, 10.0, 0.01, 0.001).unwrap();
        let c = CorrectorPlacement {
            center: 0.5,
            width1: 1.0,
            width2: 0.001,
        };
        let err = design_window(main, &[c, c], 1).unwrap_err();
        assert!(err.to_string().contains("degenerate corrector placement"));
        assert!(design_window(main, &[c], 1).is_err());
    }

    #[test]
    fn evaluation_examples() {
        let w = reference_window();
        assert!(w.eval([0.0, 0.0]).abs() <= 1e-10);
        let at10: f64 = 1.0 + w.terms[1..].iter().map(|t| t.value([10.0, 0.0])).sum::<f64>();
        assert!((w.eval([10.0, 0.0]) - at10).abs() < 1e-15);
        assert!((w.eval([10.0, 0.0]) - 1.0).abs() < 5.0 * (-81.0f64).exp());
        let single = WindowSpec::new(vec![GaussianTerm::new(1.0, 0.0, 1.0, 1.0).unwrap()], 0).unwrap();
        assert!((single.eval([1.0, 1.0]) - (-2.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn coarse_examples() {
        let c = CoarseWindowSpec::new(10000.0).unwrap();
        assert_eq!(c.eval([0.0, 0.0]), 1.0);
        assert!((c.eval([100.0, 0.0]) - (-1.0f64).exp()).abs() < 1e-16);
        let c1 = CoarseWindowSpec::new(1.0).unwrap();
        assert!((eval_phi0_hat(&c1, [1.0, 1.0]) - (-2.0f64).exp()).abs() < 1e-16);
        assert!(CoarseWindowSpec::new(0.0).is_err());
    }

    #[test]
    fn moments_agree_with_finite_differences() {
        let w = reference_window();
        let h = 1e-3;
        let g = |t: f64| w.profile(t);
        // central differences of orders 1..3
        let fd = [
            g(0.0),
            (g(h) - g(-h)) / (2.0 * h),
            (g(h) - 2.0 * g(0.0) + g(-h)) / (h * h),
            (g(2.0 * h) - 2.0 * g(h) + 2.0 * g(-h) - g(-2.0 * h)) / (2.0 * h * h * h),
        ];
        // each derivative is O(h²)-small relative to the magnitude of the terms
        for (n, v) in fd.iter().enumerate() {
            let scale = max_term_derivative(&w, n);
            assert!(v.abs() <= 1e-4 * scale, "n={n}: {v} vs scale {scale}");
            assert!(w.profile_derivative(n, 0.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn separable_when_second_widths_shared() {
        let w = reference_window();
        let g2 = |t: f64| (-t * t / 1100.0).exp();
        for xi in [[3.0, 7.0], [-1.5, 40.0], [12.0, -3.0]] {
            let v = w.eval(xi);
            assert!((v - w.profile(xi[0]) * g2(xi[1])).abs() < 1e-12);
        }
    }

    #[test]
    fn decay_report_flags() {
        let pure = WindowSpec::new(vec![GaussianTerm::new(1.0, 0.0, 1.0, 1.0).unwrap()], 0).unwrap();
        let grid = SampleGrid::new(64, 8.0).unwrap();
        let r = verify_decay_assumptions(&pure, &grid);
        assert_eq!(r.varsigma, 0.0);
        assert!(!r.varsigma_ok);
        assert!((r.delta - 1.0).abs() < 1e-9);

        let w = reference_window();
        let g = SampleGrid::new(128, 200.0).unwrap();
        let r = verify_decay_assumptions(&w, &g);
        assert!(r.varsigma >= 3.0, "{r:?}");
        assert!(r.varsigma_ok);
        let scaled = verify_decay_assumptions(&w.amplified(3.5), &g);
        assert!((scaled.varsigma - r.varsigma).abs() < 1e-6, "{scaled:?} {r:?}");
        assert!((scaled.delta - r.delta).abs() < 1e-9);
    }

    #[test]
    fn window_text_round_trip() {
        let w = reference_window();
        let text = w.to_text(Some(&reference_coarse()));
        let (back, coarse) = WindowSpec::from_text(&text).unwrap();
        assert_eq!(back.terms, w.terms);
        assert_eq!(back.moment_order, 3);
        assert_eq!(coarse.unwrap().sigma, 20000.0);
    }

    #[test]
    fn rescaling_keeps_moments() {
        let w = unit_window();
        assert!((w.main_center() - 1.0).abs() < 1e-15);
        assert!(w.residual_moments().iter().all(|&r| r < 1e-6));
        assert!((w.eval([0.7, 0.4]) - reference_window().eval([7.0, 4.0])).abs() < 1e-12);
    }
}
