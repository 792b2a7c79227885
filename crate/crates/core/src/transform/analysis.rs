//! Analysis and synthesis on the frequency grid.
//!
//! For a band with packet matrix `A` the coefficient of `λ = P m` is
//! `c(m) = dξ² Σ_p f̂(ξ_p) h(ξ_p) e^{2πi ξ_p·x_m}` with `h = 8^{-j/2} φ̂(B ξ)` and center
//! `x_m = A⁻¹P m`. Centers are taken in one period `[-X, X)²` of the spatial grid;
//! packets outside it are aliases of packets inside.
//!
//! When `(q/dx)·A⁻¹P` is an integer matrix for a small `q`, the centers sit on the
//! `dx/q` grid and every `c(m)` is read off one zero-padded FFT of length `Nq`.
//! Otherwise each coefficient is a direct sum with separable twiddles.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::coeffs::{Band, BandCoefficients, CoefficientSet, PacketIndex};
use super::field::{plan, Domain, Field};
use crate::error::{Error, Result};
use crate::geometry::{Lattice, Mat2, Vec2};
use crate::window::{CoarseWindowSpec, FrequencyWindow};

/// Tolerance of the integer test for grid-aligned centers.
pub const ALIGN_TOL: f64 = 1e-9;

/// Work units of the direct synthesis sum.
const SYNTH_CHUNKS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// FFT for aligned bands, direct sums otherwise.
    Auto,
    /// Direct sums everywhere.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub strategy: Strategy,
    /// Largest padded FFT length per axis.
    pub max_fft_len: usize,
}

impl AnalysisOptions {
    /// Number of bands up to `j_max` that take the FFT path on the grid of `f`.
    pub fn fft_band_count(&self, f: &Field, lat: &Lattice, j_max: u32) -> usize {
        if self.strategy != Strategy::Auto {
            return 0;
        }
        let dx = 1.0 / (f.n() as f64 * f.spacing());
        Band::all(j_max)
            .iter()
            .filter(|b| alignment(&b.center_matrix(lat), dx, f.n(), self.max_fft_len).is_some())
            .count()
    }
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            strategy: Strategy::Auto,
            max_fft_len: 2048,
        }
    }
}

/// `φ̂_{j,k,λ}(ξ) = 8^{-j/2} e^{-2πi ξ·A⁻¹λ} φ̂(B ξ)`; coarse: `e^{-2πi ξ·λ} φ̂₀(ξ)`.
pub fn packet_frequency<W: FrequencyWindow + ?Sized>(
    idx: &PacketIndex,
    w: &W,
    w0: &CoarseWindowSpec,
    xi: Vec2,
    lat: &Lattice,
) -> Complex64 {
    let band = idx.band();
    let m = idx.m();
    let x = band.center_matrix(lat).apply([m[0] as f64, m[1] as f64]);
    let phase = Complex64::from_polar(1.0, -2.0 * PI * (xi[0] * x[0] + xi[1] * x[1]));
    phase * band_weight(&band, w, w0, xi)
}

/// `8^{-j/2} φ̂(B ξ)` or `φ̂₀(ξ)`.
#[inline]
pub fn band_weight<W: FrequencyWindow + ?Sized>(
    band: &Band,
    w: &W,
    w0: &CoarseWindowSpec,
    xi: Vec2,
) -> f64 {
    match band {
        Band::Coarse => w0.eval(xi),
        Band::Fine(idx) => band.amplitude() * w.value(idx.frequency_matrix().apply(xi)),
    }
}

/// Lattice coordinates `m` whose centers `A⁻¹P m` lie in `[-x_ext, x_ext)²`.
pub fn band_indices(band: &Band, lat: &Lattice, x_ext: f64) -> Vec<[i64; 2]> {
    let q = band.center_matrix(lat);
    let inv = q.inverse().expect("center matrix is invertible");
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for c in [[-x_ext, -x_ext], [-x_ext, x_ext], [x_ext, -x_ext], [x_ext, x_ext]] {
        let u = inv.apply(c);
        for i in 0..2 {
            lo[i] = lo[i].min(u[i]);
            hi[i] = hi[i].max(u[i]);
        }
    }
    let slack = 1e-9 * x_ext;
    let mut out = Vec::new();
    for m1 in (lo[0].floor() as i64 - 1)..=(hi[0].ceil() as i64 + 1) {
        for m2 in (lo[1].floor() as i64 - 1)..=(hi[1].ceil() as i64 + 1) {
            let x = q.apply([m1 as f64, m2 as f64]);
            let inside = |v: f64| v >= -x_ext - slack && v < x_ext - slack;
            if inside(x[0]) && inside(x[1]) {
                out.push([m1, m2]);
            }
        }
    }
    out
}

/// [`band_indices`], rejecting lattices whose cell is larger than one period. The
/// origin is always a center, so such lattices would leave a single packet per band.
fn checked_indices(band: &Band, lat: &Lattice, x_ext: f64) -> Result<Vec<[i64; 2]>> {
    let m = band_indices(band, lat, x_ext);
    if m.is_empty() || lat.volume() > 4.0 * x_ext * x_ext {
        return Err(Error::EmptyIndexSet);
    }
    Ok(m)
}

/// Smallest `q` with `(q/dx)·Q` integral, if the padded length `n·q` is allowed.
fn alignment(q: &Mat2, dx: f64, n: usize, max_len: usize) -> Option<(usize, [[i64; 2]; 2])> {
    for over in 1..=(max_len / n).max(1) {
        if n * over > max_len {
            break;
        }
        let s = over as f64 / dx;
        let mut ints = [[0i64; 2]; 2];
        let ok = (0..2).all(|r| {
            (0..2).all(|c| {
                let v = q.0[r][c] * s;
                let rv = v.round();
                ints[r][c] = rv as i64;
                (v - rv).abs() <= ALIGN_TOL * (1.0 + v.abs())
            })
        });
        if ok {
            return Some((over, ints));
        }
    }
    None
}

/// Band weights on the frequency grid plus the rows where they are not all zero.
pub(crate) struct BandWeights {
    pub values: Vec<f64>,
    pub rows: Vec<usize>,
}

pub(crate) fn band_weights<W: FrequencyWindow + ?Sized>(
    band: &Band,
    w: &W,
    w0: &CoarseWindowSpec,
    grid: &Field,
) -> BandWeights {
    let n = grid.n();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i2| {
            (0..n)
                .map(|i1| band_weight(band, w, w0, grid.point(i1, i2)))
                .collect()
        })
        .collect();
    let nonzero = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.iter().any(|v| *v != 0.0))
        .map(|(i, _)| i)
        .collect();
    BandWeights {
        values: rows.concat(),
        rows: nonzero,
    }
}

/// `e^{2πi ξ_p x}` for every grid frequency `ξ_p`.
fn twiddles(grid: &Field, x: f64) -> Vec<Complex64> {
    (0..grid.n())
        .map(|p| Complex64::from_polar(1.0, 2.0 * PI * grid.coord(p) * x))
        .collect()
}

fn require_frequency(f: &Field) -> Result<()> {
    if f.domain() != Domain::Frequency {
        return Err(Error::invalid("field", "expected a frequency-domain field"));
    }
    Ok(())
}

/// Frame coefficients `⟨f, φ_idx⟩` for all bands up to `j_max`.
pub fn analyze<W: FrequencyWindow + ?Sized>(
    f: &Field,
    w: &W,
    w0: &CoarseWindowSpec,
    lat: &Lattice,
    j_max: u32,
) -> Result<CoefficientSet> {
    analyze_with(f, w, w0, lat, j_max, &AnalysisOptions::default())
}

pub fn analyze_with<W: FrequencyWindow + ?Sized>(
    f: &Field,
    w: &W,
    w0: &CoarseWindowSpec,
    lat: &Lattice,
    j_max: u32,
    opts: &AnalysisOptions,
) -> Result<CoefficientSet> {
    require_frequency(f)?;
    let x_ext = f.dual_extent();
    let mut bands = Vec::new();
    for band in Band::all(j_max) {
        let m = checked_indices(&band, lat, x_ext)?;
        let weights = band_weights(&band, w, w0, f);
        let values = analyze_band(f, &band, lat, &weights, &m, opts);
        bands.push(BandCoefficients { band, m, values });
    }
    Ok(CoefficientSet {
        lattice: *lat,
        j_max,
        grid_n: f.n(),
        grid_extent: f.extent(),
        bands,
    })
}

fn analyze_band(
    f: &Field,
    band: &Band,
    lat: &Lattice,
    weights: &BandWeights,
    m: &[[i64; 2]],
    opts: &AnalysisOptions,
) -> Vec<Complex64> {
    let n = f.n();
    let cell = f.cell();
    let h: Vec<Complex64> = f
        .data()
        .iter()
        .zip(&weights.values)
        .map(|(z, w)| z * *w)
        .collect();
    if weights.rows.is_empty() {
        return vec![Complex64::new(0.0, 0.0); m.len()];
    }
    let q = band.center_matrix(lat);
    let dx = 1.0 / (n as f64 * f.spacing());
    if opts.strategy == Strategy::Auto {
        if let Some((over, ints)) = alignment(&q, dx, n, opts.max_fft_len) {
            return analyze_band_fft(f, &h, &weights.rows, m, over, ints, cell);
        }
    }
    m.par_iter()
        .map(|&mm| {
            let x = q.apply([mm[0] as f64, mm[1] as f64]);
            let e1 = twiddles(f, x[0]);
            let e2 = twiddles(f, x[1]);
            let mut acc = Complex64::new(0.0, 0.0);
            for &p2 in &weights.rows {
                let row = &h[p2 * n..(p2 + 1) * n];
                let s: Complex64 = row.iter().zip(&e1).map(|(a, b)| a * b).sum();
                acc += s * e2[p2];
            }
            acc * cell
        })
        .collect()
}

fn analyze_band_fft(
    f: &Field,
    h: &[Complex64],
    rows: &[usize],
    m: &[[i64; 2]],
    over: usize,
    ints: [[i64; 2]; 2],
    cell: f64,
) -> Vec<Complex64> {
    let n = f.n();
    let len = n * over;
    let inv = plan(len, true);
    // rows p2 transformed along p1: t[p2][n1]
    let mut t = vec![Complex64::new(0.0, 0.0); n * len];
    for &p2 in rows {
        let dst = &mut t[p2 * len..(p2 + 1) * len];
        dst[..n].copy_from_slice(&h[p2 * n..(p2 + 1) * n]);
        inv.process(dst);
    }
    // columns n1 transformed along p2: g[n1][n2]
    let mut g = vec![Complex64::new(0.0, 0.0); len * len];
    g.par_chunks_mut(len).enumerate().for_each(|(n1, col)| {
        for p2 in 0..n {
            col[p2] = t[p2 * len + n1];
        }
        inv.process(col);
    });
    let xi0 = f.extent();
    let dxq = 1.0 / (n as f64 * f.spacing()) / over as f64;
    let l = len as i64;
    m.iter()
        .map(|&mm| {
            let k1 = ints[0][0] * mm[0] + ints[0][1] * mm[1];
            let k2 = ints[1][0] * mm[0] + ints[1][1] * mm[1];
            let (x1, x2) = (k1 as f64 * dxq, k2 as f64 * dxq);
            let phase = Complex64::from_polar(1.0, -2.0 * PI * xi0 * (x1 + x2));
            let v = g[k1.rem_euclid(l) as usize * len + k2.rem_euclid(l) as usize];
            v * phase * cell
        })
        .collect()
}

/// Reference analysis by plain quadrature of `f̂ · conj(φ̂_idx)` for every index,
/// on the same index set as [`analyze`].
pub fn analyze_direct<W: FrequencyWindow + ?Sized>(
    f: &Field,
    w: &W,
    w0: &CoarseWindowSpec,
    lat: &Lattice,
    j_max: u32,
) -> Result<CoefficientSet> {
    require_frequency(f)?;
    let n = f.n();
    let x_ext = f.dual_extent();
    let mut bands = Vec::new();
    for band in Band::all(j_max) {
        let m = checked_indices(&band, lat, x_ext)?;
        let q = band.center_matrix(lat);
        let weights = band_weights(&band, w, w0, f);
        let values = m
            .par_iter()
            .map(|&mm| {
                let x = q.apply([mm[0] as f64, mm[1] as f64]);
                let e1 = twiddles(f, x[0]);
                let e2 = twiddles(f, x[1]);
                let mut acc = Complex64::new(0.0, 0.0);
                for p2 in 0..n {
                    for p1 in 0..n {
                        let wv = weights.values[p2 * n + p1];
                        acc += f.at(p1, p2) * wv * e1[p1] * e2[p2];
                    }
                }
                acc * f.cell()
            })
            .collect();
        bands.push(BandCoefficients { band, m, values });
    }
    Ok(CoefficientSet {
        lattice: *lat,
        j_max,
        grid_n: n,
        grid_extent: f.extent(),
        bands,
    })
}

/// `Σ_idx c(idx) φ̂_idx` on the frequency grid the coefficients came from.
pub fn synthesize<W: FrequencyWindow + ?Sized>(
    c: &CoefficientSet,
    w: &W,
    w0: &CoarseWindowSpec,
) -> Result<Field> {
    synthesize_with(c, w, w0, &AnalysisOptions::default())
}

pub fn synthesize_with<W: FrequencyWindow + ?Sized>(
    c: &CoefficientSet,
    w: &W,
    w0: &CoarseWindowSpec,
    opts: &AnalysisOptions,
) -> Result<Field> {
    let mut out = Field::zeros(c.grid_n, c.grid_extent, Domain::Frequency)?;
    let n = out.n();
    for bc in &c.bands {
        if bc.values.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
            continue;
        }
        let weights = band_weights(&bc.band, w, w0, &out);
        if weights.rows.is_empty() {
            continue;
        }
        let q = bc.band.center_matrix(&c.lattice);
        let dx = 1.0 / (n as f64 * out.spacing());
        let aligned = match opts.strategy {
            Strategy::Auto => alignment(&q, dx, n, opts.max_fft_len),
            Strategy::Direct => None,
        };
        let sum = match aligned {
            Some((over, ints)) => synth_band_fft(&out, bc, over, ints),
            None => synth_band_direct(&out, bc, &q, &weights.rows),
        };
        let data = out.data_mut();
        for &p2 in &weights.rows {
            for p1 in 0..n {
                let i = p2 * n + p1;
                data[i] += sum[i] * weights.values[i];
            }
        }
    }
    Ok(out)
}

/// `Σ_m c(m) e^{-2πi ξ_p·x_m}` by scattering onto the `dx/q` grid.
fn synth_band_fft(
    grid: &Field,
    bc: &BandCoefficients,
    over: usize,
    ints: [[i64; 2]; 2],
) -> Vec<Complex64> {
    let n = grid.n();
    let len = n * over;
    let l = len as i64;
    let xi0 = grid.extent();
    let dxq = 1.0 / (n as f64 * grid.spacing()) / over as f64;
    // g[n2][n1]
    let mut g = vec![Complex64::new(0.0, 0.0); len * len];
    for (mm, v) in bc.m.iter().zip(&bc.values) {
        let k1 = ints[0][0] * mm[0] + ints[0][1] * mm[1];
        let k2 = ints[1][0] * mm[0] + ints[1][1] * mm[1];
        let (x1, x2) = (k1 as f64 * dxq, k2 as f64 * dxq);
        let phase = Complex64::from_polar(1.0, 2.0 * PI * xi0 * (x1 + x2));
        g[k2.rem_euclid(l) as usize * len + k1.rem_euclid(l) as usize] += v * phase;
    }
    let fwd = plan(len, false);
    // along n1 for each n2, keep p1 < n: t[p1][n2]
    let mut t = vec![Complex64::new(0.0, 0.0); n * len];
    let mut scratch = vec![Complex64::new(0.0, 0.0); len];
    for n2 in 0..len {
        let row = &g[n2 * len..(n2 + 1) * len];
        if row.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
            continue;
        }
        scratch.copy_from_slice(row);
        fwd.process(&mut scratch);
        for p1 in 0..n {
            t[p1 * len + n2] = scratch[p1];
        }
    }
    drop(g);
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    let cols: Vec<Vec<Complex64>> = t
        .par_chunks_mut(len)
        .map(|col| {
            fwd.process(col);
            col[..n].to_vec()
        })
        .collect();
    for (p1, col) in cols.iter().enumerate() {
        for p2 in 0..n {
            out[p2 * n + p1] = col[p2];
        }
    }
    out
}

fn synth_band_direct(
    grid: &Field,
    bc: &BandCoefficients,
    q: &Mat2,
    rows: &[usize],
) -> Vec<Complex64> {
    let n = grid.n();
    // fixed chunking keeps the summation order independent of the thread pool
    let chunk = bc.m.len().div_ceil(SYNTH_CHUNKS).max(1);
    let partials: Vec<Vec<Complex64>> = bc
        .m
        .par_chunks(chunk)
        .zip(bc.values.par_chunks(chunk))
        .map(|(ms, vs)| {
            let mut acc = vec![Complex64::new(0.0, 0.0); n * n];
            for (mm, v) in ms.iter().zip(vs) {
                if *v == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let x = q.apply([mm[0] as f64, mm[1] as f64]);
                let e1: Vec<Complex64> = twiddles(grid, x[0]).iter().map(|z| z.conj() * v).collect();
                let e2 = twiddles(grid, x[1]);
                for &p2 in rows {
                    let s = e2[p2].conj();
                    let dst = &mut acc[p2 * n..(p2 + 1) * n];
                    for (d, e) in dst.iter_mut().zip(&e1) {
                        *d += e * s;
                    }
                }
            }
            acc
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for part in &partials {
        for (x, y) in out.iter_mut().zip(part) {
            *x += y;
        }
    }
    out
}

/// `S_Λ f = Σ_idx ⟨f, φ_idx⟩ φ_idx` on the grid.
pub fn frame_operator<W: FrequencyWindow + ?Sized>(
    f: &Field,
    w: &W,
    w0: &CoarseWindowSpec,
    lat: &Lattice,
    j_max: u32,
) -> Result<Field> {
    let c = analyze(f, w, w0, lat, j_max)?;
    synthesize(&c, w, w0)
}

/// Outcome of [`frame_operator_frequency_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameResidual {
    /// `‖|Λ| Ŝf - m f̂‖₂`.
    pub residual: f64,
    pub norm: f64,
    /// `⟨S f, f⟩`.
    pub quadratic_form: f64,
}

impl FrameResidual {
    pub fn relative(&self) -> f64 {
        if self.norm == 0.0 {
            0.0
        } else {
            self.residual / self.norm
        }
    }
}

/// Compares `|Λ| Ŝ_Λ f` with the multiplier part `m f̂`; the difference is the sum of
/// the aliasing terms `γ ≠ 0` and is bounded by `Δ(Λ) ‖f‖₂`.
pub fn frame_operator_frequency_check<W: FrequencyWindow + ?Sized>(
    f: &Field,
    w: &W,
    w0: &CoarseWindowSpec,
    lat: &Lattice,
    j_max: u32,
) -> Result<FrameResidual> {
    require_frequency(f)?;
    let c = analyze(f, w, w0, lat, j_max)?;
    let s = synthesize(&c, w, w0)?;
    let quadratic_form = c.energy();
    let mut m_f = f.clone();
    let n = f.n();
    let mut symbol = vec![0.0; n * n];
    for band in Band::all(j_max) {
        let bw = band_weights(&band, w, w0, f);
        for (acc, v) in symbol.iter_mut().zip(&bw.values) {
            // band weights carry 8^{-j/2}; the symbol uses φ̂² without it
            *acc += v * v / (band.amplitude() * band.amplitude());
        }
    }
    for (z, mv) in m_f.data_mut().iter_mut().zip(&symbol) {
        *z *= *mv;
    }
    let mut diff = s;
    diff.scale(Complex64::new(lat.volume(), 0.0));
    let diff = diff.sub(&m_f)?;
    Ok(FrameResidual {
        residual: diff.norm(),
        norm: f.norm(),
        quadratic_form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ParabolicIndex;
    use crate::transform::signals::{band_limited_field, BandLimitedSpec};
    use crate::window::presets::{unit_coarse, unit_window};
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn small_field(seed: u64) -> Field {
        band_limited_field(64, 4.0, &BandLimitedSpec::new(3.5), seed).unwrap()
    }

    fn packet_field(idx: &PacketIndex, n: usize, xi_ext: f64, lat: &Lattice) -> Field {
        let (w, w0) = (unit_window(), unit_coarse());
        Field::from_fn(n, xi_ext, Domain::Frequency, |xi| {
            packet_frequency(idx, &w, &w0, xi, lat)
        })
        .unwrap()
    }

    fn max_rel_diff(a: &CoefficientSet, b: &CoefficientSet) -> f64 {
        let scale = a.max_abs();
        a.bands
            .iter()
            .zip(&b.bands)
            .flat_map(|(x, y)| x.values.iter().zip(&y.values).map(|(u, v)| (u - v).norm()))
            .fold(0.0, f64::max)
            / scale
    }

    #[test]
    fn packet_frequency_examples() {
        let (w, w0) = (unit_window(), unit_coarse());
        let lat = Lattice::rectangular(0.5, 0.5).unwrap();
        let idx = PacketIndex::new(Band::Fine(ParabolicIndex::new(1, 0).unwrap()), [0, 0]);
        let v = packet_frequency(&idx, &w, &w0, [4.0, 2.0], &lat);
        assert!((v.re - w.eval([1.0, 1.0]) / 8f64.sqrt()).abs() < 1e-14);
        assert_eq!(v.im, 0.0);
        let coarse = PacketIndex::new(Band::Coarse, [0, 0]);
        let v = packet_frequency(&coarse, &w, &w0, [0.3, -0.2], &lat);
        assert!((v.re - w0.eval([0.3, -0.2])).abs() < 1e-15);
    }

    #[test]
    fn packet_norms_agree_across_indices() {
        // a single Gaussian bump, resolved at j = 1 and contained at j = 2
        use crate::window::{GaussianTerm, WindowSpec};
        let w = WindowSpec::new(vec![GaussianTerm::new(1.0, 1.0, 4.0, 4.0).unwrap()], 0).unwrap();
        let w0 = unit_coarse();
        let lat = Lattice::rectangular(0.3, 0.7).unwrap();
        let norms: Vec<f64> = [(1, 0, [0, 0]), (1, 1, [2, -1]), (2, 3, [-4, 5]), (2, 1, [1, 1])]
            .iter()
            .map(|&(j, k, m)| {
                let idx = PacketIndex::new(Band::Fine(ParabolicIndex::new(j, k).unwrap()), m);
                Field::from_fn(512, 64.0, Domain::Frequency, |xi| {
                    packet_frequency(&idx, &w, &w0, xi, &lat)
                })
                .unwrap()
                .norm()
            })
            .collect();
        for v in &norms {
            assert!((v / norms[0] - 1.0).abs() < 1e-3, "{norms:?}");
        }
    }

    #[test]
    fn zero_field_gives_zero_coefficients() {
        let (w, w0) = (unit_window(), unit_coarse());
        let f = Field::zeros(64, 4.0, Domain::Frequency).unwrap();
        let lat = Lattice::rectangular(0.4, 0.4).unwrap();
        let c = analyze(&f, &w, &w0, &lat, 1).unwrap();
        assert!(!c.is_empty());
        assert_eq!(c.max_abs(), 0.0);
    }

    #[test]
    fn rejects_spatial_fields() {
        let (w, w0) = (unit_window(), unit_coarse());
        let f = Field::zeros(64, 4.0, Domain::Spatial).unwrap();
        let lat = Lattice::rectangular(0.4, 0.4).unwrap();
        assert!(analyze(&f, &w, &w0, &lat, 1).is_err());
    }

    #[test]
    fn lattice_coarser_than_domain_is_rejected() {
        let (w, w0) = (unit_window(), unit_coarse());
        let f = small_field(1);
        let lat = Lattice::rectangular(20.0, 20.0).unwrap();
        assert!(matches!(
            analyze(&f, &w, &w0, &lat, 1),
            Err(Error::EmptyIndexSet)
        ));
        assert!(analyze_direct(&f, &w, &w0, &lat, 1).is_err());
    }

    #[test]
    fn index_set_is_one_period() {
        let lat = Lattice::rectangular(0.5, 0.25).unwrap();
        let m = band_indices(&Band::Coarse, &lat, 4.0);
        assert_eq!(m.len(), 16 * 32);
        let band = Band::Fine(ParabolicIndex::new(2, 1).unwrap());
        let q = band.center_matrix(&lat);
        for mm in band_indices(&band, &lat, 4.0) {
            let x = q.apply([mm[0] as f64, mm[1] as f64]);
            assert!(x.iter().all(|v| (-4.0 - 1e-9..4.0).contains(v)));
        }
    }

    #[test]
    fn single_packet_dominates_its_own_coefficient() {
        let (w, w0) = (unit_window(), unit_coarse());
        let lat = Lattice::rectangular(0.8, 0.8).unwrap();
        let idx = PacketIndex::new(Band::Fine(ParabolicIndex::new(1, 1).unwrap()), [1, -1]);
        let f = packet_field(&idx, 64, 4.0, &lat);
        let c = analyze(&f, &w, &w0, &lat, 1).unwrap();
        let own = c.get(&idx).unwrap();
        assert!((own.re - f.norm().powi(2)).abs() < 1e-10 * own.re);
        assert!(own.im.abs() < 1e-10 * own.re);
        let (best, _) = c
            .iter()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        assert_eq!(best, idx);
    }

    #[test]
    fn fast_path_matches_direct_quadrature() {
        let (w, w0) = (unit_window(), unit_coarse());
        let f = small_field(3);
        for lat in [
            Lattice::rectangular(0.5, 0.5).unwrap(),
            Lattice::new(Mat2::new(0.5, 0.2, -0.1, 0.6)).unwrap(),
        ] {
            let fast = analyze(&f, &w, &w0, &lat, 1).unwrap();
            let slow = analyze_direct(&f, &w, &w0, &lat, 1).unwrap();
            assert!(max_rel_diff(&fast, &slow) < 1e-10);
            let direct = AnalysisOptions {
                strategy: Strategy::Direct,
                ..Default::default()
            };
            let sep = analyze_with(&f, &w, &w0, &lat, 1, &direct).unwrap();
            assert!(max_rel_diff(&fast, &sep) < 1e-10);
        }
    }

    #[test]
    fn alignment_detects_grid_multiples() {
        let dx = 0.125;
        let q = Mat2::new(0.25, 0.0, 0.0, 0.0625);
        let (over, ints) = alignment(&q, dx, 64, 2048).unwrap();
        assert_eq!(over, 2);
        assert_eq!(ints, [[4, 0], [0, 1]]);
        let skew = Mat2::new(0.1 * std::f64::consts::SQRT_2, 0.0, 0.0, 0.25);
        assert!(alignment(&skew, dx, 64, 2048).is_none());
    }

    #[test]
    fn synthesis_is_adjoint_of_analysis() {
        let (w, w0) = (unit_window(), unit_coarse());
        let f = small_field(5);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(9);
        for lat in [
            Lattice::rectangular(0.4, 0.4).unwrap(),
            Lattice::new(Mat2::new(0.45, 0.1, 0.0, 0.35)).unwrap(),
        ] {
            let cf = analyze(&f, &w, &w0, &lat, 1).unwrap();
            let mut c = cf.zeroed();
            for b in &mut c.bands {
                for v in &mut b.values {
                    *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
            let lhs = cf.inner(&c).unwrap();
            let rhs = f.inner(&synthesize(&c, &w, &w0).unwrap()).unwrap();
            assert!((lhs - rhs).norm() < 1e-8 * lhs.norm(), "{lhs} {rhs}");
        }
    }

    #[test]
    fn synthesis_is_linear_and_reproduces_single_packets() {
        let (w, w0) = (unit_window(), unit_coarse());
        let lat = Lattice::rectangular(0.5, 0.5).unwrap();
        let f = small_field(2);
        let c1 = analyze(&f, &w, &w0, &lat, 1).unwrap();
        let c2 = analyze(&small_field(4), &w, &w0, &lat, 1).unwrap();
        let s12 = synthesize(&c1.add(&c2).unwrap(), &w, &w0).unwrap();
        let mut sum = synthesize(&c1, &w, &w0).unwrap();
        sum.add_assign(&synthesize(&c2, &w, &w0).unwrap()).unwrap();
        assert!(s12.sub(&sum).unwrap().norm() < 1e-12 * sum.norm());

        let idx = PacketIndex::new(Band::Fine(ParabolicIndex::new(1, 0).unwrap()), [2, 3]);
        let mut c = c1.zeroed();
        *c.get_mut(&idx).unwrap() = Complex64::new(1.0, 0.0);
        let s = synthesize(&c, &w, &w0).unwrap();
        let p = packet_field(&idx, 64, 4.0, &lat);
        assert!(s.sub(&p).unwrap().norm() < 1e-12 * p.norm());
    }

    #[test]
    fn frame_check_is_exact_when_aliases_leave_the_grid() {
        // 1/a exceeds the frequency box, so only γ = 0 contributes on the grid
        let (w, w0) = (unit_window(), unit_coarse());
        let f = small_field(6);
        let lat = Lattice::rectangular(0.1, 0.1).unwrap();
        let r = frame_operator_frequency_check(&f, &w, &w0, &lat, 1).unwrap();
        assert!(r.relative() < 1e-6, "{}", r.relative());
        let zero = Field::zeros(64, 4.0, Domain::Frequency).unwrap();
        let r0 = frame_operator_frequency_check(&zero, &w, &w0, &lat, 1).unwrap();
        assert_eq!(r0.residual, 0.0);
    }
}
