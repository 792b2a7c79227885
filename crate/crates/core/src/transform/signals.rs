//! Seeded test fields.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

use super::field::{Domain, Field};
use crate::error::{Error, Result};

/// Shape of [`band_limited_field`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandLimitedSpec {
    /// Frequency radius outside which `f̂` vanishes.
    pub radius: f64,
    /// Width of each spectral blob.
    pub blob_width: f64,
    pub blobs: usize,
    /// Blob positions in space are drawn from `[-spread, spread]²`.
    pub spread: f64,
}

impl BandLimitedSpec {
    pub fn new(radius: f64) -> Self {
        Self {
            radius,
            blob_width: 0.35 * radius / 4.0,
            blobs: 6,
            spread: 0.5,
        }
    }
}

/// Unit-norm frequency field `Σ c_k e^{-|ξ-μ_k|²/(2s²)} e^{-2πi ξ·x_k}`, cut to `|ξ| ≤ radius`.
/// Centers satisfy `|μ_k| ≤ radius - 6s`, so the cut only removes values below `e^{-18}`.
pub fn band_limited_field(
    n: usize,
    spatial_extent: f64,
    spec: &BandLimitedSpec,
    seed: u64,
) -> Result<Field> {
    let s = spec.blob_width;
    let reach = spec.radius - 6.0 * s;
    if !(s > 0.0) || reach < 0.0 {
        return Err(Error::invalid(
            "blob_width",
            format!("need 0 < 6·width <= radius, got width {s} for radius {}", spec.radius),
        ));
    }
    if spec.blobs == 0 {
        return Err(Error::invalid("blobs", "need at least one blob"));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let blobs: Vec<([f64; 2], [f64; 2], Complex64)> = (0..spec.blobs)
        .map(|_| {
            let r = reach * rng.gen::<f64>().sqrt();
            let a = 2.0 * PI * rng.gen::<f64>();
            let mu = [r * a.cos(), r * a.sin()];
            let x = [
                rng.gen_range(-spec.spread..=spec.spread),
                rng.gen_range(-spec.spread..=spec.spread),
            ];
            let c = Complex64::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            );
            (mu, x, c)
        })
        .collect();
    let xi_ext = n as f64 / (4.0 * spatial_extent);
    let mut f = Field::from_fn(n, xi_ext, Domain::Frequency, |xi| {
        if xi[0].hypot(xi[1]) > spec.radius {
            return Complex64::new(0.0, 0.0);
        }
        blobs
            .iter()
            .map(|(mu, x, c)| {
                let d2 = (xi[0] - mu[0]).powi(2) + (xi[1] - mu[1]).powi(2);
                let phase = -2.0 * PI * (xi[0] * x[0] + xi[1] * x[1]);
                c * (-d2 / (2.0 * s * s)).exp() * Complex64::from_polar(1.0, phase)
            })
            .sum()
    })?;
    normalize(&mut f);
    Ok(f)
}

/// Unit-norm white noise under a spatial Gaussian envelope of width `width`, returned on
/// the frequency side.
pub fn localized_noise(n: usize, spatial_extent: f64, width: f64, seed: u64) -> Result<Field> {
    if !(width > 0.0) {
        return Err(Error::invalid("width", format!("must be positive, got {width}")));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut f = Field::zeros(n, spatial_extent, Domain::Spatial)?;
    let coords: Vec<f64> = (0..n).map(|i| f.coord(i)).collect();
    for (i, z) in f.data_mut().iter_mut().enumerate() {
        let (x1, x2) = (coords[i % n], coords[i / n]);
        let env = (-(x1 * x1 + x2 * x2) / (2.0 * width * width)).exp();
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *z = Complex64::new(re, im) * env;
    }
    let mut g = f.to_frequency();
    normalize(&mut g);
    Ok(g)
}

fn normalize(f: &mut Field) {
    let norm = f.norm();
    if norm > 0.0 {
        f.scale(Complex64::new(1.0 / norm, 0.0));
    }
}
