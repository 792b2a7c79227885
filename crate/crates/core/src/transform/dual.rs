//! Approximate dual through the inverse multiplier `1/m̃`.

use num_complex::Complex64;
use rayon::prelude::*;

use super::analysis::{analyze, synthesize};
use super::coeffs::Band;
use super::field::{Domain, Field};
use crate::criterion::{compute_symbol_m, default_theta_grid, scan_symbol, symbol_field, SymbolField};
use crate::error::{Error, Result};
use crate::geometry::{star_norm_estimate, FrequencySupport, Lattice, SampleGrid, Vec2};
use crate::window::{CoarseWindowSpec, FrequencyWindow, WindowSpec};

/// Points per axis of the star-norm scan in [`build_dual`].
pub const STAR_SCAN_N: usize = 128;

/// Cubic smoothstep `3u² - 2u³` clamped to `[0, 1]`.
pub fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// `ψ̂ = η φ̂` with `η = S((|φ̂| - ε/2)/(ε/2))`, plus the data of the error bound.
#[derive(Debug, Clone)]
pub struct DualWindowSpec {
    pub base: WindowSpec,
    pub eps: f64,
    /// `‖φ̂‖_*` estimated up to `j_max`.
    pub star_norm: f64,
    /// Lower covering constant `A` of `φ̂`.
    pub lower: f64,
    /// `Ã = A - ε‖φ̂‖_*`.
    pub lower_tilde: f64,
    /// `m̃ = |φ̂₀|² + Σ φ̂ ψ̂` on the covering grid.
    pub symbol: SymbolField,
}

impl DualWindowSpec {
    pub fn eta(&self, xi: Vec2) -> f64 {
        let half = 0.5 * self.eps;
        smoothstep((self.base.eval(xi).abs() - half) / half)
    }
}

impl FrequencyWindow for DualWindowSpec {
    fn value(&self, xi: Vec2) -> f64 {
        let v = self.base.eval(xi);
        let half = 0.5 * self.eps;
        smoothstep((v.abs() - half) / half) * v
    }

    fn support(&self) -> FrequencySupport {
        self.base.support()
    }

    fn spatial_width(&self) -> [f64; 2] {
        self.base.spatial_width()
    }
}

pub fn build_dual(
    w: &WindowSpec,
    w0: &CoarseWindowSpec,
    eps: f64,
    grid: &SampleGrid,
    j_max: u32,
) -> Result<DualWindowSpec> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::invalid("eps", format!("must be positive, got {eps}")));
    }
    let m = compute_symbol_m(w, w0, grid, j_max)?;
    let support = w.support();
    let scan = default_theta_grid(w, j_max, STAR_SCAN_N)?;
    let star = star_norm_estimate(|xi| w.eval(xi), &scan, j_max, Some(&support))?.value;
    let lower = m.min;
    let lhs = eps * star;
    if lhs >= lower {
        return Err(Error::CutoffTooLarge { lhs, a: lower });
    }
    let half = 0.5 * eps;
    let (values, tail) = scan_symbol(
        grid,
        j_max,
        &support,
        |xi| {
            let c = w0.eval(xi);
            c * c
        },
        |eta| {
            let v = w.eval(eta);
            smoothstep((v.abs() - half) / half) * v * v
        },
    );
    Ok(DualWindowSpec {
        base: w.clone(),
        eps,
        star_norm: star,
        lower,
        lower_tilde: lower - lhs,
        symbol: symbol_field(grid, j_max, values, tail, w.finest_bandwidth()),
    })
}

/// `m̃` on the points of a frequency field, with bands up to `j_max`.
pub fn dual_symbol_on(
    dual: &DualWindowSpec,
    w0: &CoarseWindowSpec,
    grid: &Field,
    j_max: u32,
) -> Vec<f64> {
    let n = grid.n();
    let bands = Band::all(j_max);
    (0..n * n)
        .into_par_iter()
        .map(|i| {
            let xi = grid.point(i % n, i / n);
            bands
                .iter()
                .map(|band| match band {
                    Band::Coarse => w0.eval(xi).powi(2),
                    Band::Fine(idx) => {
                        let eta = idx.frequency_matrix().apply(xi);
                        dual.base.eval(eta) * dual.value(eta)
                    }
                })
                .sum()
        })
        .collect()
}

/// `M_{1/m̃} f`: pointwise division by `m̃` (bands up to `j_max`) on the frequency grid.
pub fn apply_inverse_symbol(
    f: &Field,
    dual: &DualWindowSpec,
    w0: &CoarseWindowSpec,
    j_max: u32,
) -> Result<Field> {
    if f.domain() != Domain::Frequency {
        return Err(Error::invalid("field", "expected a frequency-domain field"));
    }
    let symbol = dual_symbol_on(dual, w0, f, j_max);
    let mut g = f.clone();
    let mut min = f64::INFINITY;
    for (z, m) in g.data_mut().iter_mut().zip(&symbol) {
        if *z == Complex64::new(0.0, 0.0) {
            continue;
        }
        min = min.min(*m);
        *z /= *m;
    }
    if min <= 0.0 || min.is_nan() {
        return Err(Error::VanishingSymbol { min });
    }
    Ok(g)
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub field: Field,
    /// `‖f - f̃‖₂ / ‖f‖₂` (0 for `f = 0`).
    pub relative_error: f64,
    /// `Δ(Λ) / Ã`.
    pub bound: f64,
}

/// `f̃ = |Λ| Σ ⟨M_{1/m̃} f, ψ_idx⟩ φ_idx`, where the coarse band uses `φ₀` on both sides.
/// `delta` is the defect `Δ(Λ)` of the lattice, used only for the reported bound.
pub fn approx_reconstruct(
    f: &Field,
    dual: &DualWindowSpec,
    w0: &CoarseWindowSpec,
    lat: &Lattice,
    j_max: u32,
    delta: f64,
) -> Result<Reconstruction> {
    if f.domain() != Domain::Frequency {
        return Err(Error::invalid("field", "expected a frequency-domain field"));
    }
    if !(dual.lower_tilde > 0.0) {
        return Err(Error::CutoffTooLarge {
            lhs: dual.eps * dual.star_norm,
            a: dual.lower,
        });
    }
    let g = apply_inverse_symbol(f, dual, w0, j_max)?;
    let c = analyze(&g, dual, w0, lat, j_max)?;
    let mut field = synthesize(&c, &dual.base, w0)?;
    field.scale(Complex64::new(lat.volume(), 0.0));
    let norm = f.norm();
    let relative_error = if norm == 0.0 {
        0.0
    } else {
        field.sub(f)?.norm() / norm
    };
    Ok(Reconstruction {
        field,
        relative_error,
        bound: delta / dual.lower_tilde,
    })
}
