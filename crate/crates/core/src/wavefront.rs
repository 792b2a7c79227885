//! Coefficient decay along the packets that converge to a phase-space point.
//!
//! For `(x₀, θ₀)` and each scale `j` the probe picks the band `k_j` with
//! `2πk_j/2^j ≤ 2π - θ₀ ≤ 2π(k_j+1)/2^j` and the lattice point `λ_j` nearest to
//! `A_{j,k_j} x₀`. The fitted rate is the least-squares decay of `log₄|c_j|` in `j`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::ops::RangeInclusive;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Lattice, ParabolicIndex, Vec2};
use crate::linalg::linear_fit;
use crate::transform::{Domain, Field};
use crate::window::{FrequencyWindow, WindowSpec};

/// Coefficients at or below this magnitude are left out of rate fits.
pub const COEFF_FLOOR: f64 = 1e-14;

/// Band weights below this fraction of the band maximum are dropped.
const WEIGHT_CUT: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSpacePoint {
    pub x0: Vec2,
    /// Direction in `[0, 2π)`.
    pub theta0: f64,
}

impl PhaseSpacePoint {
    pub fn new(x0: Vec2, theta0: f64) -> Self {
        let mut t = theta0.rem_euclid(TAU);
        if t >= TAU {
            t = 0.0;
        }
        Self { x0, theta0: t }
    }
}

/// `L_Λ`: every point lies within this distance of `Λ`.
pub fn lattice_reach(lat: &Lattice) -> f64 {
    lat.diameter()
}

/// `(k_j, m)` with `λ_j = P m`. When `2^j(2π - θ₀)/2π` is an integer both neighbours
/// satisfy the band inequality and the smaller one is returned.
pub fn grid_params(p: &PhaseSpacePoint, lat: &Lattice, j: u32) -> Result<(u32, [i64; 2])> {
    if j == 0 || j > 30 {
        return Err(Error::invalid("j", format!("need 1 <= j <= 30, got {j}")));
    }
    let count = 1u64 << j;
    let v = count as f64 * (TAU - p.theta0) / TAU;
    let k = (v.ceil() as i64 - 1).clamp(0, count as i64 - 1) as u32;
    let idx = ParabolicIndex::new(j, k)?;
    let (m, _) = lat.nearest(idx.packet_matrix().apply(p.x0));
    Ok((k, m))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRecord {
    pub j: u32,
    pub k: u32,
    pub m: [i64; 2],
    pub coeff: Complex64,
}

impl ProbeRecord {
    pub fn abs(&self) -> f64 {
        self.coeff.norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayProbe {
    pub point: PhaseSpacePoint,
    pub records: Vec<ProbeRecord>,
    /// `-slope` of `log₄|c_j|` against `j`; `+∞` when fewer than two coefficients
    /// clear [`COEFF_FLOOR`].
    pub rate: f64,
    /// Sobolev order `s` of the weighted sum.
    pub s: f64,
    /// `Σ_j |c_j|² 4^{2js}` over the probed scales.
    pub weighted_sum: f64,
}

impl DecayProbe {
    fn from_records(point: PhaseSpacePoint, records: Vec<ProbeRecord>, s: f64) -> Self {
        let (x, y): (Vec<f64>, Vec<f64>) = records
            .iter()
            .filter(|r| r.abs() > COEFF_FLOOR)
            .map(|r| (r.j as f64, r.abs().log(4.0)))
            .unzip();
        let rate = if x.len() < 2 {
            f64::INFINITY
        } else {
            -linear_fit(&x, &y).0
        };
        let weighted_sum = records
            .iter()
            .map(|r| r.abs().powi(2) * 4f64.powf(2.0 * r.j as f64 * s))
            .sum();
        Self {
            point,
            records,
            rate,
            s,
            weighted_sum,
        }
    }

    /// Text table with columns `j k_j lambda_m1 lambda_m2 abs_coeff log4_abs`.
    pub fn report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# x0 = ({}, {}), theta0 = {}, rate = {}, s = {}, weighted_sum = {:e}",
            self.point.x0[0], self.point.x0[1], self.point.theta0, self.rate, self.s, self.weighted_sum
        );
        let _ = writeln!(out, "j\tk_j\tlambda_m1\tlambda_m2\tabs_coeff\tlog4_abs");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:.6e}\t{:.6}",
                r.j,
                r.k,
                r.m[0],
                r.m[1],
                r.abs(),
                r.abs().log(4.0)
            );
        }
        out
    }
}

/// Largest `j` whose band fits the grid: `4^j r₁ ≤ Ξ` and `2^j r₂ ≤ Ξ`, where `r₁` is the
/// main-lobe center plus three widths and `r₂` three `ξ₂` widths.
pub fn usable_j_max(w: &WindowSpec, grid: &Field) -> u32 {
    let main = &w.terms[0];
    let r1 = main.center.abs() + 3.0 / (2.0 * main.width1).sqrt();
    let r2 = 3.0 / (2.0 * main.width2).sqrt();
    let xi = grid.extent();
    let mut j = 0;
    while j < 30 && 4f64.powi(j as i32 + 1) * r1 <= xi && 2f64.powi(j as i32 + 1) * r2 <= xi {
        j += 1;
    }
    j
}

/// `f̂ · 8^{-j/2} φ̂(B ξ)` of one band, kept where the weight is not negligible.
struct SparseBand {
    entries: Vec<(u32, u32, Complex64)>,
}

/// Read-only band data of a field shared by many probes.
pub struct ProbeBands<'a> {
    field: &'a Field,
    bands: BTreeMap<(u32, u32), SparseBand>,
}

impl<'a> ProbeBands<'a> {
    /// Band data for every `(j, k)` in `needed`.
    pub fn new<W: FrequencyWindow + ?Sized>(
        f: &'a Field,
        w: &W,
        needed: impl IntoIterator<Item = (u32, u32)>,
    ) -> Result<Self> {
        if f.domain() != Domain::Frequency {
            return Err(Error::invalid("field", "expected a frequency-domain field"));
        }
        let keys: Vec<(u32, u32)> = needed
            .into_iter()
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let n = f.n();
        let built: Vec<((u32, u32), SparseBand)> = keys
            .par_iter()
            .map(|&(j, k)| {
                let idx = ParabolicIndex::new(j, k)?;
                let b = idx.frequency_matrix();
                let amp = 8f64.powf(-(j as f64) / 2.0);
                let weights: Vec<f64> = (0..n * n)
                    .map(|i| amp * w.value(b.apply(f.point(i % n, i / n))))
                    .collect();
                let cut = WEIGHT_CUT * weights.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let entries = weights
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| v.abs() > cut)
                    .map(|(i, v)| ((i % n) as u32, (i / n) as u32, f.data()[i] * *v))
                    .filter(|e| e.2 != Complex64::new(0.0, 0.0))
                    .collect();
                Ok(((j, k), SparseBand { entries }))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            field: f,
            bands: built.into_iter().collect(),
        })
    }

    /// `⟨f, φ_{j,k,λ}⟩` with packet center `x = A⁻¹λ`.
    pub fn coefficient(&self, j: u32, k: u32, center: Vec2) -> Result<Complex64> {
        let band = self
            .bands
            .get(&(j, k))
            .ok_or_else(|| Error::invalid("band", format!("({j}, {k}) was not prepared")))?;
        let f = self.field;
        let twiddle = |x: f64| -> Vec<Complex64> {
            (0..f.n())
                .map(|p| Complex64::from_polar(1.0, 2.0 * PI * f.coord(p) * x))
                .collect()
        };
        let e1 = twiddle(center[0]);
        let e2 = twiddle(center[1]);
        let s: Complex64 = band
            .entries
            .iter()
            .map(|&(p1, p2, h)| h * e1[p1 as usize] * e2[p2 as usize])
            .sum();
        Ok(s * f.cell())
    }

    pub fn probe(
        &self,
        p: &PhaseSpacePoint,
        lat: &Lattice,
        j_range: RangeInclusive<u32>,
        s: f64,
    ) -> Result<DecayProbe> {
        let records = j_range
            .map(|j| {
                let (k, m) = grid_params(p, lat, j)?;
                let a_inv = ParabolicIndex::new(j, k)?
                    .packet_matrix()
                    .inverse()
                    .expect("packet matrices are invertible");
                let center = a_inv.apply(lat.point(m));
                let coeff = self.coefficient(j, k, center)?;
                Ok(ProbeRecord { j, k, m, coeff })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DecayProbe::from_records(*p, records, s))
    }
}

fn bands_for(points: &[PhaseSpacePoint], j_range: &RangeInclusive<u32>) -> Vec<(u32, u32)> {
    let lat = Lattice::rectangular(1.0, 1.0).expect("unit lattice");
    points
        .iter()
        .flat_map(|p| {
            let lat = lat;
            j_range
                .clone()
                .filter_map(move |j| grid_params(p, &lat, j).ok().map(|(k, _)| (j, k)))
        })
        .collect()
}

fn check_range(j_range: &RangeInclusive<u32>) -> Result<()> {
    if *j_range.start() == 0 || j_range.start() > j_range.end() {
        return Err(Error::invalid(
            "j_range",
            format!("need 1 <= start <= end, got {j_range:?}"),
        ));
    }
    Ok(())
}

/// One probe. `f` must be a frequency field; `w` may be `φ̂` or a dual window `ψ̂`.
pub fn decay_probe<W: FrequencyWindow + ?Sized>(
    f: &Field,
    p: &PhaseSpacePoint,
    lat: &Lattice,
    j_range: RangeInclusive<u32>,
    w: &W,
    s: f64,
) -> Result<DecayProbe> {
    check_range(&j_range)?;
    let bands = ProbeBands::new(f, w, bands_for(std::slice::from_ref(p), &j_range))?;
    bands.probe(p, lat, j_range, s)
}

/// Probe positions and directions of a map.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeGrid {
    pub points: Vec<Vec2>,
    pub angles: Vec<f64>,
}

impl ProbeGrid {
    /// `n × n` points on `[-r, r]²` (row index = second coordinate) and `n_angles`
    /// directions `2πa/n_angles`.
    pub fn square(n: usize, r: f64, n_angles: usize) -> Result<Self> {
        if n == 0 || n_angles == 0 {
            return Err(Error::invalid("probe grid", "need at least one point and angle"));
        }
        let c = |i: usize| {
            if n == 1 {
                0.0
            } else {
                -r + 2.0 * r * i as f64 / (n - 1) as f64
            }
        };
        let points = (0..n * n).map(|i| [c(i % n), c(i / n)]).collect();
        let angles = (0..n_angles).map(|a| TAU * a as f64 / n_angles as f64).collect();
        Ok(Self { points, angles })
    }

    pub fn len(&self) -> usize {
        self.points.len() * self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Probe number `point_index · n_angles + angle_index`.
    pub fn probe(&self, i: usize) -> PhaseSpacePoint {
        let na = self.angles.len();
        PhaseSpacePoint::new(self.points[i / na], self.angles[i % na])
    }
}

/// Verdict rule: regular at order `s` when `Σ_j |c_j|² 4^{2js}` is below `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerdictConfig {
    pub s: f64,
    pub threshold: f64,
}

impl VerdictConfig {
    /// Geometric mean of the largest sum that must pass and the smallest that must fail.
    pub fn calibrate(s: f64, regular: &[f64], singular: &[f64]) -> Result<Self> {
        let pass = regular.iter().cloned().fold(0.0f64, f64::max);
        let fail = singular.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(fail > pass) || !fail.is_finite() {
            return Err(Error::invalid(
                "calibration",
                format!("singular sums (min {fail:e}) do not exceed regular ones (max {pass:e})"),
            ));
        }
        let threshold = if pass > 0.0 { (pass * fail).sqrt() } else { 0.5 * fail };
        Ok(Self { s, threshold })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavefrontMap {
    pub grid: ProbeGrid,
    pub config: VerdictConfig,
    pub probes: Vec<DecayProbe>,
    /// `true` = regular at order `s`; ordered like [`ProbeGrid::probe`].
    pub regular: Vec<bool>,
}

impl WavefrontMap {
    pub fn flagged(&self) -> impl Iterator<Item = &DecayProbe> {
        self.probes
            .iter()
            .zip(&self.regular)
            .filter(|(_, r)| !**r)
            .map(|(p, _)| p)
    }

    /// Verdicts as a spatial field of 0 (regular) / 1 (flagged). Probe `i` goes to
    /// sample `i` in row-major order; the side is the smallest power of two holding all
    /// probes and the remaining samples are 0.
    pub fn to_field(&self) -> Result<Field> {
        let len = self.regular.len().max(4);
        let mut n = 2usize;
        while n * n < len {
            n *= 2;
        }
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for (d, r) in data.iter_mut().zip(&self.regular) {
            if !*r {
                *d = Complex64::new(1.0, 0.0);
            }
        }
        Field::from_samples(n, 1.0, Domain::Spatial, data)
    }
}

/// Probes every `(x₀, θ₀)` of `grid` and classifies it with `config`.
pub fn wavefront_map<W: FrequencyWindow + ?Sized>(
    f: &Field,
    lat: &Lattice,
    j_range: RangeInclusive<u32>,
    w: &W,
    grid: &ProbeGrid,
    config: &VerdictConfig,
) -> Result<WavefrontMap> {
    check_range(&j_range)?;
    let points: Vec<PhaseSpacePoint> = (0..grid.len()).map(|i| grid.probe(i)).collect();
    let bands = ProbeBands::new(f, w, bands_for(&points, &j_range))?;
    let probes = points
        .par_iter()
        .map(|p| bands.probe(p, lat, j_range.clone(), config.s))
        .collect::<Result<Vec<_>>>()?;
    let regular = probes
        .iter()
        .map(|p| p.weighted_sum < config.threshold)
        .collect();
    Ok(WavefrontMap {
        grid: grid.clone(),
        config: *config,
        probes,
        regular,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalKind {
    /// `exp(-|x - c|²/w²)`.
    Bump,
    /// Indicator of `{(x - c)·n ≤ 0}` times `exp(-|x - c|²/(2w²))`.
    Edge,
    /// Indicator of the intersection of two such half-planes times the same window.
    Corner,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalParams {
    pub n: usize,
    /// Spatial half-width of the grid.
    pub extent: f64,
    pub center: Vec2,
    pub width: f64,
    /// Angle of the outward normal `n`.
    pub normal: f64,
    /// Normal of the second edge of a corner.
    pub second_normal: f64,
}

impl SignalParams {
    pub fn new(n: usize, extent: f64) -> Self {
        Self {
            n,
            extent,
            center: [0.0, 0.0],
            width: 0.25 * extent,
            normal: 0.0,
            second_normal: 0.5 * PI,
        }
    }
}

/// Samples a synthetic signal on the spatial grid.
pub fn make_test_signal(kind: SignalKind, params: &SignalParams) -> Result<Field> {
    let SignalParams {
        n,
        extent,
        center: c,
        width,
        normal,
        second_normal,
    } = *params;
    if !(width > 0.0) {
        return Err(Error::invalid("width", format!("must be positive, got {width}")));
    }
    if c[0].abs() > extent || c[1].abs() > extent {
        return Err(Error::invalid("center", "outside the grid"));
    }
    let n1 = [normal.cos(), normal.sin()];
    let n2 = [second_normal.cos(), second_normal.sin()];
    Field::from_fn(n, extent, Domain::Spatial, |x| {
        let d = [x[0] - c[0], x[1] - c[1]];
        let r2 = d[0] * d[0] + d[1] * d[1];
        let side = |nn: [f64; 2]| d[0] * nn[0] + d[1] * nn[1] <= 0.0;
        let v = match kind {
            SignalKind::Bump => (-r2 / (width * width)).exp(),
            SignalKind::Edge if side(n1) => (-r2 / (2.0 * width * width)).exp(),
            SignalKind::Corner if side(n1) && side(n2) => (-r2 / (2.0 * width * width)).exp(),
            _ => 0.0,
        };
        Complex64::new(v, 0.0)
    })
}

#[cfg(test)]
mod tests {
    use std::sync::OnceLock;

    use super::*;
    use crate::window::presets::probe_window;

    const N: usize = 512;

    fn params(width: f64) -> SignalParams {
        let mut p = SignalParams::new(N, 1.0);
        p.width = width;
        p
    }

    fn signal(kind: SignalKind, normal: f64) -> Field {
        let mut p = params(0.2);
        p.normal = normal;
        make_test_signal(kind, &p).unwrap().to_frequency()
    }

    fn edge() -> &'static Field {
        static F: OnceLock<Field> = OnceLock::new();
        F.get_or_init(|| signal(SignalKind::Edge, 0.0))
    }

    fn bump() -> &'static Field {
        static F: OnceLock<Field> = OnceLock::new();
        F.get_or_init(|| signal(SignalKind::Bump, 0.0))
    }

    fn unit() -> Lattice {
        Lattice::rectangular(1.0, 1.0).unwrap()
    }

    #[test]
    fn grid_params_examples() {
        let lat = unit();
        for j in 1..=8 {
            let (k, m) = grid_params(&PhaseSpacePoint::new([0.0, 0.0], 0.0), &lat, j).unwrap();
            assert_eq!(k, (1 << j) - 1);
            assert_eq!(m, [0, 0]);
        }
        let (k, _) = grid_params(&PhaseSpacePoint::new([0.3, -0.2], PI), &lat, 1).unwrap();
        assert_eq!(k, 0);
        assert!(grid_params(&PhaseSpacePoint::new([0.0, 0.0], 1.0), &lat, 0).is_err());
    }

    #[test]
    fn angles_are_normalized() {
        assert_eq!(PhaseSpacePoint::new([0.0, 0.0], TAU).theta0, 0.0);
        assert!((PhaseSpacePoint::new([0.0, 0.0], -0.5 * PI).theta0 - 1.5 * PI).abs() < 1e-15);
    }

    #[test]
    fn selected_packets_approach_the_point() {
        let lat = Lattice::new(crate::geometry::Mat2::new(0.7, 0.2, -0.1, 0.9)).unwrap();
        let reach = lattice_reach(&lat);
        for (i, theta) in [0.0, 0.4, 1.0, PI, 4.0, 6.2].into_iter().enumerate() {
            let x0 = [0.37 * i as f64 - 0.8, 1.1 - 0.29 * i as f64];
            let p = PhaseSpacePoint::new(x0, theta);
            for j in 1..=12 {
                let (k, m) = grid_params(&p, &lat, j).unwrap();
                let step = TAU / (1u64 << j) as f64;
                assert!(step * k as f64 <= TAU - p.theta0 + 1e-12);
                assert!(TAU - p.theta0 <= step * (k + 1) as f64 + 1e-12);
                let a = ParabolicIndex::new(j, k).unwrap().packet_matrix();
                let ax = a.apply(x0);
                let lam = lat.point(m);
                assert!((ax[0] - lam[0]).hypot(ax[1] - lam[1]) <= reach + 1e-12);
                let c = a.inverse().unwrap().apply(lam);
                let scale = 2f64.powi(-(j as i32));
                assert!((c[0] - x0[0]).hypot(c[1] - x0[1]) <= scale * reach + 1e-12);
                let alpha = (-step * k as f64 - p.theta0).rem_euclid(TAU);
                assert!(alpha <= step + 1e-12 || alpha >= TAU - 1e-12, "{alpha}");
            }
        }
    }

    #[test]
    fn test_signal_examples() {
        let mut p = SignalParams::new(64, 4.0);
        p.width = 1.0;
        let bump = make_test_signal(SignalKind::Bump, &p).unwrap();
        let peak = bump.data().iter().map(|z| z.re).fold(0.0, f64::max);
        assert_eq!(peak, 1.0);
        let edge = make_test_signal(SignalKind::Edge, &p).unwrap();
        for row in 0..64 {
            for col in 0..64 {
                let x1 = edge.coord(col);
                let v = edge.data()[row * 64 + col].re;
                assert_eq!(v > 0.0, x1 <= 0.0);
            }
        }
        let corner = make_test_signal(SignalKind::Corner, &p).unwrap();
        for (i, z) in corner.data().iter().enumerate() {
            let (x1, x2) = (corner.coord(i % 64), corner.coord(i / 64));
            assert_eq!(z.re > 0.0, x1 <= 0.0 && x2 <= 0.0);
        }
        p.center = [5.0, 0.0];
        assert!(make_test_signal(SignalKind::Bump, &p).is_err());
    }

    #[test]
    fn probe_window_reaches_scale_five_on_the_test_grid() {
        assert!(usable_j_max(&probe_window(), edge()) >= 5);
    }

    #[test]
    fn bump_decays_fast_in_every_direction() {
        let w = probe_window();
        let lat = unit();
        for a in 0..8 {
            let p = PhaseSpacePoint::new([0.0, 0.0], TAU * a as f64 / 8.0);
            let probe = decay_probe(bump(), &p, &lat, 3..=5, &w, 1.0).unwrap();
            assert!(probe.rate >= 3.0, "{a}: {}", probe.rate);
        }
    }

    #[test]
    fn edge_decays_slowly_along_the_normal_only() {
        let w = probe_window();
        let lat = unit();
        let normal = decay_probe(edge(), &PhaseSpacePoint::new([0.0, 0.0], 0.0), &lat, 3..=5, &w, 1.0).unwrap();
        assert!(normal.rate <= 0.8, "{}", normal.rate);
        // inside the support; outside it the coefficients sit at the sampling floor
        for theta in [0.0, 0.5 * PI, PI] {
            let p = PhaseSpacePoint::new([-0.5, 0.0], theta);
            let off = decay_probe(edge(), &p, &lat, 3..=5, &w, 1.0).unwrap();
            assert!(off.rate >= 2.0, "{theta}: {}", off.rate);
        }
    }

    #[test]
    fn zero_field_is_regular_everywhere() {
        let f = Field::zeros(64, 8.0, Domain::Frequency).unwrap();
        let grid = ProbeGrid::square(3, 0.5, 4).unwrap();
        let cfg = VerdictConfig { s: 1.0, threshold: 1e-30 };
        let map = wavefront_map(&f, &unit(), 1..=2, &crate::window::presets::unit_window(), &grid, &cfg).unwrap();
        assert!(map.regular.iter().all(|r| *r));
        assert!(map.probes.iter().all(|p| p.rate == f64::INFINITY));
        assert_eq!(map.to_field().unwrap().norm(), 0.0);
    }

    fn calibrated(grid: &ProbeGrid) -> VerdictConfig {
        let w = probe_window();
        let dummy = VerdictConfig { s: 1.0, threshold: 1.0 };
        let b = wavefront_map(bump(), &unit(), 1..=5, &w, grid, &dummy).unwrap();
        let origin = ProbeGrid { points: vec![[0.0, 0.0]], angles: vec![0.0, PI] };
        let e = wavefront_map(edge(), &unit(), 1..=5, &w, &origin, &dummy).unwrap();
        let sums = |m: &WavefrontMap| m.probes.iter().map(|p| p.weighted_sum).collect::<Vec<_>>();
        VerdictConfig::calibrate(1.0, &sums(&b), &sums(&e)).unwrap()
    }

    fn flagged_cells(f: &Field, grid: &ProbeGrid, cfg: &VerdictConfig) -> Vec<(usize, usize)> {
        let map = wavefront_map(f, &unit(), 1..=5, &probe_window(), grid, cfg).unwrap();
        let na = grid.angles.len();
        (0..grid.len())
            .filter(|&i| !map.regular[i])
            .map(|i| (i / na, i % na))
            .collect()
    }

    #[test]
    fn edge_flags_concentrate_on_the_normal() {
        let grid = ProbeGrid::square(5, 0.4, 8).unwrap();
        let cfg = calibrated(&grid);
        let flagged = flagged_cells(edge(), &grid, &cfg);
        assert!(!flagged.is_empty());
        let near = flagged
            .iter()
            .filter(|(_, a)| matches!(a, 0 | 1 | 3 | 4 | 5 | 7))
            .count();
        assert!(5 * near >= 4 * flagged.len(), "{flagged:?}");
        // every flagged point lies on the edge x₁ = 0
        assert!(flagged.iter().all(|(pt, _)| grid.points[*pt][0] == 0.0));
    }

    #[test]
    fn rotating_the_edge_rotates_the_flags() {
        let grid = ProbeGrid::square(5, 0.4, 8).unwrap();
        let cfg = calibrated(&grid);
        let rotated = signal(SignalKind::Edge, 0.5 * PI);
        let a = flagged_cells(edge(), &grid, &cfg);
        let b = flagged_cells(&rotated, &grid, &cfg);
        // R_{π/2} sends grid point (c, r) to (4 - r, c) and angle a to a + 2
        let rot = |(pt, ang): (usize, usize)| ((pt % 5) * 5 + (4 - pt / 5), (ang + 2) % 8);
        let close = |(p, a): (usize, usize), (q, b): (usize, usize)| {
            let (dr, dc) = ((p / 5).abs_diff(q / 5), (p % 5).abs_diff(q % 5));
            let da = a.abs_diff(b).min(8 - a.abs_diff(b));
            dr <= 1 && dc <= 1 && da <= 1
        };
        for &c in &a {
            assert!(b.iter().any(|&d| close(rot(c), d)), "{c:?} -> {b:?}");
        }
        for &d in &b {
            assert!(a.iter().any(|&c| close(rot(c), d)), "{d:?} <- {a:?}");
        }
    }

    #[test]
    fn report_lists_every_scale() {
        let w = probe_window();
        let probe = decay_probe(edge(), &PhaseSpacePoint::new([0.0, 0.0], 0.0), &unit(), 1..=5, &w, 1.0).unwrap();
        let report = probe.report();
        assert!(report.contains("j\tk_j\tlambda_m1\tlambda_m2\tabs_coeff\tlog4_abs"));
        assert_eq!(report.lines().count(), 2 + 5);
        assert!(decay_probe(edge(), &probe.point, &unit(), 3..=2, &w, 1.0).is_err());
    }

    #[test]
    fn map_field_has_one_sample_per_probe() {
        let map = WavefrontMap {
            grid: ProbeGrid::square(1, 0.0, 5).unwrap(),
            config: VerdictConfig { s: 1.0, threshold: 1.0 },
            probes: Vec::new(),
            regular: vec![true, false, true, true, false],
        };
        let f = map.to_field().unwrap();
        assert_eq!(f.n(), 4);
        let ones: Vec<usize> = (0..16).filter(|&i| f.data()[i].re == 1.0).collect();
        assert_eq!(ones, vec![1, 4]);
    }

    #[test]
    fn calibration_needs_separated_sums() {
        let c = VerdictConfig::calibrate(1.0, &[1.0, 4.0], &[16.0, 20.0]).unwrap();
        assert_eq!(c.threshold, 8.0);
        assert!(VerdictConfig::calibrate(1.0, &[5.0], &[4.0]).is_err());
    }
}
