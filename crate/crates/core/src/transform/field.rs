//! Sampled complex fields and the discrete Fourier convention.
//!
//! An `N×N` spatial field samples `x_i = -X + i·dx`, `dx = 2X/N`. Its transform lives
//! on `ξ_p = -Ξ + p·dξ` with `dξ = 1/(2X)` and `Ξ = N/(4X)`, and approximates
//! `f̂(ξ) = ∫ f(x) e^{-2πi ξ·x} dx` by the trapezoid rule:
//!
//! `f̂_p = dx² Σ_q f_q e^{-2πi ξ_p·x_q} = dx² (-1)^{p₁+p₂} Σ_q (-1)^{q₁+q₂} f_q e^{-2πi p·q/N}`.
//!
//! `Σ|f|² dx² = Σ|f̂|² dξ²` holds exactly.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Spatial,
    Frequency,
}

/// Complex samples on a periodic `N×N` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    n: usize,
    /// Half-width of the grid in its own domain.
    extent: f64,
    domain: Domain,
    /// Row-major, row index = second coordinate.
    data: Vec<Complex64>,
}

impl Field {
    pub fn zeros(n: usize, extent: f64, domain: Domain) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::invalid("grid_n", format!("need a power of two >= 2, got {n}")));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::invalid("extent", format!("must be positive, got {extent}")));
        }
        Ok(Self {
            n,
            extent,
            domain,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        })
    }

    pub fn from_fn(
        n: usize,
        extent: f64,
        domain: Domain,
        f: impl Fn(Vec2) -> Complex64,
    ) -> Result<Self> {
        let mut out = Self::zeros(n, extent, domain)?;
        for i2 in 0..n {
            for i1 in 0..n {
                let v = f(out.point(i1, i2));
                out.data[i2 * n + i1] = v;
            }
        }
        Ok(out)
    }

    pub fn from_samples(
        n: usize,
        extent: f64,
        domain: Domain,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        let mut out = Self::zeros(n, extent, domain)?;
        if data.len() != n * n {
            return Err(Error::invalid(
                "samples",
                format!("expected {} samples, got {}", n * n, data.len()),
            ));
        }
        out.data = data;
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.n as f64
    }

    /// Half-width of the grid in the other domain, `N / (4·extent)`.
    pub fn dual_extent(&self) -> f64 {
        self.n as f64 / (4.0 * self.extent)
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.extent + i as f64 * self.spacing()
    }

    #[inline]
    pub fn point(&self, i1: usize, i2: usize) -> Vec2 {
        [self.coord(i1), self.coord(i2)]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, i1: usize, i2: usize) -> Complex64 {
        self.data[i2 * self.n + i1]
    }

    /// Quadrature weight `spacing²`.
    pub fn cell(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    /// `(Σ |f|² · spacing²)^{1/2}`.
    pub fn norm(&self) -> f64 {
        (self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.cell()).sqrt()
    }

    /// `Σ f · conj(g) · spacing²`.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        self.check_compatible(other)?;
        let s: Complex64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s * self.cell())
    }

    pub fn check_compatible(&self, other: &Field) -> Result<()> {
        if self.n != other.n
            || self.domain != other.domain
            || (self.extent - other.extent).abs() > 1e-12 * self.extent
        {
            return Err(Error::invalid("field", "grids differ"));
        }
        Ok(())
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        Ok(out)
    }

    pub fn add_assign(&mut self, other: &Field) -> Result<()> {
        self.check_compatible(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: Complex64) {
        for z in &mut self.data {
            *z *= s;
        }
    }

    /// Transform to the other domain (no-op in kind: frequency input gives spatial).
    pub fn transformed(&self) -> Field {
        match self.domain {
            Domain::Spatial => self.to_frequency(),
            Domain::Frequency => self.to_spatial(),
        }
    }

    pub fn to_frequency(&self) -> Field {
        if self.domain == Domain::Frequency {
            return self.clone();
        }
        self.convert(Domain::Frequency)
    }

    pub fn to_spatial(&self) -> Field {
        if self.domain == Domain::Spatial {
            return self.clone();
        }
        self.convert(Domain::Spatial)
    }

    fn convert(&self, target: Domain) -> Field {
        let n = self.n;
        let sign = |i: usize| if i % 2 == 0 { 1.0 } else { -1.0 };
        let mut buf: Vec<Complex64> = self
            .data
            .iter()
            .enumerate()
            .map(|(idx, z)| z * (sign(idx % n) * sign(idx / n)))
            .collect();
        let inverse = target == Domain::Spatial;
        fft2(&mut buf, n, inverse);
        // e^{∓iπN/2} per axis; the product over both axes is 1 for even N
        let weight = self.cell();
        for (idx, z) in buf.iter_mut().enumerate() {
            *z *= weight * sign(idx % n) * sign(idx / n);
        }
        Field {
            n,
            extent: self.dual_extent(),
            domain: target,
            data: buf,
        }
    }

    pub fn write_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        out.write_all(b"WPF1")?;
        out.write_all(&(self.n as u32).to_le_bytes())?;
        out.write_all(&[match self.domain {
            Domain::Spatial => 0u8,
            Domain::Frequency => 1u8,
        }])?;
        out.write_all(&self.extent.to_le_bytes())?;
        let mut bytes = Vec::with_capacity(self.data.len() * 16);
        for z in &self.data {
            bytes.extend_from_slice(&z.re.to_le_bytes());
            bytes.extend_from_slice(&z.im.to_le_bytes());
        }
        out.write_all(&bytes)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::new();
        self.write_to(&mut v).expect("writing to memory");
        v
    }

    /// Parses a `WPF1` byte stream; errors carry the offending byte offset.
    pub fn from_bytes(bytes: &[u8]) -> Result<Field> {
        let mut r = ByteReader::new(bytes);
        let magic = r.take(4)?;
        if magic != b"WPF1" {
            return Err(Error::Format {
                offset: 0,
                reason: format!("bad magic {:?}, expected \"WPF1\"", String::from_utf8_lossy(magic)),
            });
        }
        let n_off = r.pos;
        let n = r.u32()? as usize;
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Format {
                offset: n_off,
                reason: format!("grid size {n} is not a power of two >= 2"),
            });
        }
        let d_off = r.pos;
        let domain = match r.take(1)?[0] {
            0 => Domain::Spatial,
            1 => Domain::Frequency,
            other => {
                return Err(Error::Format {
                    offset: d_off,
                    reason: format!("domain flag {other} is neither 0 nor 1"),
                })
            }
        };
        let e_off = r.pos;
        let extent = r.f64()?;
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::Format {
                offset: e_off,
                reason: format!("extent {extent} is not positive"),
            });
        }
        let count = n.checked_mul(n).ok_or(Error::Format {
            offset: n_off,
            reason: "grid size overflows".into(),
        })?;
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            let re = r.f64()?;
            let im = r.f64()?;
            data.push(Complex64::new(re, im));
        }
        if r.pos != bytes.len() {
            return Err(Error::Format {
                offset: r.pos,
                reason: format!("{} trailing bytes", bytes.len() - r.pos),
            });
        }
        Ok(Field {
            n,
            extent,
            domain,
            data,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(&mut f).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Field> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Field::from_bytes(&bytes)
    }
}

/// Little-endian cursor that reports the offset of a short read.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pub(crate) pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < self.pos + len {
            return Err(Error::Format {
                offset: self.bytes.len(),
                reason: format!(
                    "unexpected end of data: needed {len} bytes at offset {}",
                    self.pos
                ),
            });
        }
        let s = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub(crate) fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// In-place 2D FFT of a row-major `n×n` array (unnormalized). `inverse` selects the
/// `e^{+2πi}` kernel.
pub(crate) fn fft2(data: &mut [Complex64], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    fft.process(data);
    transpose(data, n);
    fft.process(data);
    transpose(data, n);
}

pub(crate) fn transpose(data: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in r + 1..n {
            data.swap(r * n + c, c * n + r);
        }
    }
}

/// Plans a 1D transform of length `len`.
pub(crate) fn plan(len: usize, inverse: bool) -> std::sync::Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    }
}
