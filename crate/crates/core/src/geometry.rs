//! Parabolic dilations, rotations, lattices and the overlap estimators built on them.
//!
//! Conventions: `D_j = diag(4^j, 2^j)`, `R_θ` is the counter-clockwise rotation, the
//! packet matrix is `A_{j,k} = D_j R_{2πk/2^j}` and its frequency companion is
//! `B_{j,k} = (A_{j,k}^T)^{-1} = D_j^{-1} R_{2πk/2^j}`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

#[inline]
pub fn norm(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Dense 2×2 real matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn diag(a: f64, d: f64) -> Self {
        Mat2([[a, 0.0], [0.0, d]])
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat2([[c, -s], [s, c]])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    /// Inverse, or `None` when the determinant is exactly zero.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let m = &self.0;
        Some(Mat2([
            [m[1][1] / d, -m[0][1] / d],
            [-m[1][0] / d, m[0][0] / d],
        ]))
    }

    pub fn mul(&self, other: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &other.0;
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }

    #[inline]
    pub fn apply(&self, v: Vec2) -> Vec2 {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        worst
    }

    /// Column `c` as a vector.
    pub fn column(&self, c: usize) -> Vec2 {
        [self.0[0][c], self.0[1][c]]
    }
}

/// Parabolic dilation `diag(4^j, 2^j)`.
pub fn dilation_matrix(j: u32) -> Mat2 {
    Mat2::diag(4f64.powi(j as i32), 2f64.powi(j as i32))
}

/// A scale/rotation pair `(j, k)` with `0 <= k < 2^j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParabolicIndex {
    j: u32,
    k: u32,
}

impl ParabolicIndex {
    pub fn new(j: u32, k: u32) -> Result<Self> {
        if j == 0 || j > 30 {
            return Err(Error::invalid("j", format!("scale {j} outside 1..=30")));
        }
        if k >= 1u32 << j {
            return Err(Error::invalid(
                "k",
                format!("rotation index {k} not below 2^{j}"),
            ));
        }
        Ok(Self { j, k })
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Rotation angle `2πk/2^j`.
    pub fn angle(&self) -> f64 {
        2.0 * PI * self.k as f64 / (1u64 << self.j) as f64
    }

    /// `A_{j,k} = D_j R_{2πk/2^j}`.
    pub fn packet_matrix(&self) -> Mat2 {
        dilation_matrix(self.j).mul(&Mat2::rotation(self.angle()))
    }

    /// `B_{j,k} = (A_{j,k}^T)^{-1} = D_j^{-1} R_{2πk/2^j}`.
    pub fn frequency_matrix(&self) -> Mat2 {
        let s4 = 4f64.powi(-(self.j as i32));
        let s2 = 2f64.powi(-(self.j as i32));
        Mat2::diag(s4, s2).mul(&Mat2::rotation(self.angle()))
    }

    /// All valid indices with `1 <= j <= j_max`, ordered by `(j, k)`.
    pub fn all(j_max: u32) -> impl Iterator<Item = ParabolicIndex> {
        (1..=j_max).flat_map(|j| (0..1u32 << j).map(move |k| ParabolicIndex { j, k }))
    }
}

/// Convenience wrapper around [`ParabolicIndex::packet_matrix`].
pub fn packet_matrix(idx: ParabolicIndex) -> Mat2 {
    idx.packet_matrix()
}

/// The lattice `Λ = P ℤ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    generator: Mat2,
}

impl Lattice {
    pub fn new(generator: Mat2) -> Result<Self> {
        let det = generator.det();
        let scale = generator
            .0
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if !det.is_finite() || scale == 0.0 || det.abs() <= 1e-14 * scale * scale {
            return Err(Error::DegenerateLattice { det });
        }
        Ok(Self { generator })
    }

    /// Rectangular lattice `aℤ × bℤ`.
    pub fn rectangular(a: f64, b: f64) -> Result<Self> {
        Self::new(Mat2::diag(a, b))
    }

    pub fn generator(&self) -> &Mat2 {
        &self.generator
    }

    /// `|Λ| = |det P|`.
    pub fn volume(&self) -> f64 {
        self.generator.det().abs()
    }

    /// Singular values `(a, b)` of the generator, `a <= b`.
    pub fn singular_values(&self) -> (f64, f64) {
        let g = self.generator.transpose().mul(&self.generator);
        let tr = g.0[0][0] + g.0[1][1];
        let det = g.det();
        let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
        let hi = 0.5 * tr + disc;
        // det / hi avoids cancellation in the small eigenvalue
        let lo = if hi > 0.0 { det / hi } else { 0.0 };
        (lo.max(0.0).sqrt(), hi.sqrt())
    }

    /// Half the longer diagonal of the fundamental parallelogram. Every point of the
    /// plane lies within this distance of a lattice point.
    pub fn diameter(&self) -> f64 {
        let p1 = self.generator.column(0);
        let p2 = self.generator.column(1);
        let d1 = norm([p1[0] + p2[0], p1[1] + p2[1]]);
        let d2 = norm([p1[0] - p2[0], p1[1] - p2[1]]);
        0.5 * d1.max(d2)
    }

    pub fn point(&self, m: [i64; 2]) -> Vec2 {
        self.generator.apply([m[0] as f64, m[1] as f64])
    }

    /// Integer coordinates of `x` in the lattice basis (not rounded).
    pub fn coordinates(&self, x: Vec2) -> Vec2 {
        self.generator
            .inverse()
            .expect("lattice generator is invertible")
            .apply(x)
    }

    /// Lattice point closest to `x`; ties go to the lexicographically smallest `m`.
    pub fn nearest(&self, x: Vec2) -> ([i64; 2], Vec2) {
        let u = self.coordinates(x);
        let base = [u[0].round() as i64, u[1].round() as i64];
        let mut best: Option<([i64; 2], Vec2, f64)> = None;
        for d1 in -2..=2 {
            for d2 in -2..=2 {
                let m = [base[0] + d1, base[1] + d2];
                let p = self.point(m);
                let dist = norm([x[0] - p[0], x[1] - p[1]]);
                let better = match &best {
                    None => true,
                    Some((bm, _, bd)) => {
                        let tol = 1e-12 * (1.0 + bd.abs());
                        dist < bd - tol || ((dist - bd).abs() <= tol && m < *bm)
                    }
                };
                if better {
                    best = Some((m, p, dist));
                }
            }
        }
        let (m, p, _) = best.expect("neighbourhood is non-empty");
        (m, p)
    }
}

/// Dual lattice `Γ = (P^{-1})^T ℤ²`.
pub fn dual_lattice(lat: &Lattice) -> Result<Lattice> {
    let inv = lat
        .generator
        .inverse()
        .ok_or(Error::DegenerateLattice {
            det: lat.generator.det(),
        })?;
    Lattice::new(inv.transpose())
}

/// A lattice point together with its integer coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticePoint {
    pub m: [i64; 2],
    pub point: Vec2,
}

/// All points `Pm`, `m ≠ 0`, with `|Pm| <= radius`, in lexicographic order of `m`.
pub fn lattice_enumerate(lat: &Lattice, radius: f64) -> Vec<LatticePoint> {
    if !(radius > 0.0) {
        return Vec::new();
    }
    let inv = lat.generator.inverse().expect("lattice generator is invertible");
    // |m_i| = |row_i(P^{-1}) · x| <= |row_i| radius
    let bound = |i: usize| (norm(inv.0[i]) * radius).floor() as i64 + 1;
    let (b1, b2) = (bound(0), bound(1));
    let tol = radius * (1.0 + 1e-12);
    let mut out = Vec::new();
    for m1 in -b1..=b1 {
        for m2 in -b2..=b2 {
            if m1 == 0 && m2 == 0 {
                continue;
            }
            let p = lat.point([m1, m2]);
            if norm(p) <= tol {
                out.push(LatticePoint { m: [m1, m2], point: p });
            }
        }
    }
    out
}

/// One of the four axis reflections `(ξ₁, ξ₂) ↦ (±ξ₁, ±ξ₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AxisSymmetry {
    #[default]
    Identity,
    FlipFirst,
    FlipSecond,
    FlipBoth,
}

impl AxisSymmetry {
    pub const ALL: [AxisSymmetry; 4] = [
        AxisSymmetry::Identity,
        AxisSymmetry::FlipFirst,
        AxisSymmetry::FlipSecond,
        AxisSymmetry::FlipBoth,
    ];

    #[inline]
    pub fn apply(self, v: Vec2) -> Vec2 {
        match self {
            AxisSymmetry::Identity => v,
            AxisSymmetry::FlipFirst => [-v[0], v[1]],
            AxisSymmetry::FlipSecond => [v[0], -v[1]],
            AxisSymmetry::FlipBoth => [-v[0], -v[1]],
        }
    }
}

/// Circular sectors `V_{s,t}` and dyadic boxes `W_{r,t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SectorKind {
    /// `2^s <= |ξ| <= 2^{s+1}`, first quadrant, `2^{-(t+1)} <= cos θ <= 2^{-t}`.
    Circular { s: i32, t: u32 },
    /// `4^{r-1} <= |ξ₁| <= 4^r`, `2^{t-1} <= |ξ₂| <= 2^t`.
    Dyadic { r: i32, t: i32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sector {
    pub kind: SectorKind,
    pub symmetry: AxisSymmetry,
}

impl Sector {
    pub fn circular(s: i32, t: u32) -> Self {
        Self {
            kind: SectorKind::Circular { s, t },
            symmetry: AxisSymmetry::Identity,
        }
    }

    pub fn dyadic(r: i32, t: i32) -> Self {
        Self {
            kind: SectorKind::Dyadic { r, t },
            symmetry: AxisSymmetry::Identity,
        }
    }

    pub fn with_symmetry(mut self, symmetry: AxisSymmetry) -> Self {
        self.symmetry = symmetry;
        self
    }

    /// Membership in `S(set)`; the axis maps are involutions so this tests `S ξ ∈ set`.
    pub fn contains(&self, xi: Vec2) -> bool {
        let v = self.symmetry.apply(xi);
        match self.kind {
            SectorKind::Circular { s, t } => {
                if v[0] < 0.0 || v[1] < 0.0 {
                    return false;
                }
                let r = norm(v);
                let lo = 2f64.powi(s);
                if r < lo || r > 2.0 * lo {
                    return false;
                }
                let c = v[0] / r;
                let top = 2f64.powi(-(t as i32));
                c >= 0.5 * top && c <= top
            }
            SectorKind::Dyadic { r, t } => {
                let (a1, a2) = (v[0].abs(), v[1].abs());
                let hi1 = 4f64.powi(r);
                let hi2 = 2f64.powi(t);
                a1 >= 0.25 * hi1 && a1 <= hi1 && a2 >= 0.5 * hi2 && a2 <= hi2
            }
        }
    }

    pub fn indicator(&self, xi: Vec2) -> f64 {
        if self.contains(xi) {
            1.0
        } else {
            0.0
        }
    }

    /// A box `[lo, hi] × [-h, h]` containing the set (all symmetries included).
    pub fn support(&self) -> FrequencySupport {
        match self.kind {
            SectorKind::Circular { s, .. } => {
                let outer = 2f64.powi(s + 1);
                FrequencySupport::new(-outer, outer, outer)
            }
            SectorKind::Dyadic { r, t } => {
                let hi1 = 4f64.powi(r);
                FrequencySupport::new(-hi1, hi1, 2f64.powi(t))
            }
        }
    }
}

/// Axis-aligned box `[lo, hi] × [-half_height, half_height]` outside of which a
/// frequency-side function is negligible. The function is also negligible on the
/// strip `|ξ₁| < core`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencySupport {
    pub lo: f64,
    pub hi: f64,
    pub half_height: f64,
    pub core: f64,
}

impl FrequencySupport {
    pub fn new(lo: f64, hi: f64, half_height: f64) -> Self {
        Self {
            lo,
            hi,
            half_height,
            core: 0.0,
        }
    }

    pub fn with_core(mut self, core: f64) -> Self {
        self.core = core.max(0.0);
        self
    }

    pub fn contains(&self, v: Vec2) -> bool {
        v[0] >= self.lo
            && v[0] <= self.hi
            && v[1].abs() <= self.half_height
            && v[0].abs() >= self.core
    }

    /// Smallest and largest `|ξ|` whose image under scale `j` can land in the box.
    fn radial_window(&self, j: u32) -> (f64, f64) {
        let s4 = 4f64.powi(j as i32);
        let s2 = 2f64.powi(j as i32);
        let near = if self.lo <= 0.0 && self.hi >= 0.0 {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        };
        let far = self.lo.abs().max(self.hi.abs());
        (s4 * near, (s4 * far).hypot(s2 * self.half_height))
    }
}

/// Precomputed rotation tables for scales `1..=j_max`, used to visit every
/// `(j, k)` term whose argument `B_{j,k} ξ` can fall in a support box.
#[derive(Debug, Clone)]
pub struct BandTable {
    j_max: u32,
    // per scale: (cos, sin) of 2πk/2^j
    rotations: Vec<Vec<(f64, f64)>>,
}

impl BandTable {
    pub fn new(j_max: u32) -> Self {
        let rotations = (1..=j_max)
            .map(|j| {
                let n = 1usize << j;
                (0..n)
                    .map(|k| {
                        let (s, c) = (2.0 * PI * k as f64 / n as f64).sin_cos();
                        (c, s)
                    })
                    .collect()
            })
            .collect();
        Self { j_max, rotations }
    }

    pub fn j_max(&self) -> u32 {
        self.j_max
    }

    /// Calls `visit(j, k, B_{j,k} ξ)` for every term of scales `1..=j_max`. With a
    /// support box, terms whose argument provably misses the box are skipped.
    #[inline]
    pub fn visit(
        &self,
        xi: Vec2,
        support: Option<&FrequencySupport>,
        mut visit: impl FnMut(u32, u32, Vec2),
    ) {
        let r = norm(xi);
        let alpha = xi[1].atan2(xi[0]);
        for j in 1..=self.j_max {
            let table = &self.rotations[(j - 1) as usize];
            let n = table.len();
            let s4 = 4f64.powi(-(j as i32));
            let s2 = 2f64.powi(-(j as i32));
            let mut emit = |k: usize| {
                let (c, s) = table[k];
                let e1 = c * xi[0] - s * xi[1];
                let e2 = s * xi[0] + c * xi[1];
                visit(j, k as u32, [e1 * s4, e2 * s2]);
            };
            let Some(sup) = support else {
                (0..n).for_each(&mut emit);
                continue;
            };
            let (r_lo, r_hi) = sup.radial_window(j);
            if r < r_lo * (1.0 - 1e-12) || r > r_hi * (1.0 + 1e-12) {
                continue;
            }
            // every argument has |ξ₁| <= r / 4^j
            if r * s4 < sup.core {
                continue;
            }
            let h = sup.half_height / s2;
            if h >= r {
                (0..n).for_each(&mut emit);
                continue;
            }
            let beta = (h / r).asin();
            let step = 2.0 * PI / n as f64;
            // rotated angle alpha + θ_k must lie within beta of 0 (and of π when the
            // box reaches negative ξ₁)
            let window = |center: f64| {
                (
                    ((center - beta) / step).floor() as i64 - 1,
                    ((center + beta) / step).ceil() as i64 + 1,
                )
            };
            let ranges = [
                (sup.hi >= 0.0).then(|| window(-alpha)),
                (sup.lo <= 0.0).then(|| window(PI - alpha)),
            ];
            let nn = n as i64;
            let covered: i64 = ranges.iter().flatten().map(|(a, b)| b - a + 1).sum();
            if covered >= nn {
                (0..n).for_each(&mut emit);
                continue;
            }
            let first = ranges[0];
            for (a, b) in ranges.into_iter().flatten() {
                for kk in a..=b {
                    let k = kk.rem_euclid(nn);
                    if (a, b) != first.unwrap_or((1, 0)) {
                        if let Some((fa, fb)) = first {
                            // already emitted by the first window
                            if (k - fa).rem_euclid(nn) <= fb - fa {
                                continue;
                            }
                        }
                    }
                    emit(k as usize);
                }
            }
        }
    }
}

/// Uniform grid `x_i = -extent + i·2·extent/n`, `i = 0..=n`, in both coordinates.
/// Symmetric under negation, and refining `n → 2n` keeps every old point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleGrid {
    pub n: usize,
    pub extent: f64,
}

impl SampleGrid {
    pub fn new(n: usize, extent: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("grid_n", format!("need at least 2, got {n}")));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::invalid("extent", format!("must be positive, got {extent}")));
        }
        Ok(Self { n, extent })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.n as f64
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.extent + i as f64 * self.spacing()
    }

    pub fn points_per_axis(&self) -> usize {
        self.n + 1
    }
}

/// A family of nested square grids with extents `extent · ratio^l`, `l < levels`.
/// Each level has the same point count, so the spacing grows with the box; this
/// resolves structures whose size scales with their distance from the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGrid {
    pub base: SampleGrid,
    pub levels: u32,
    pub ratio: f64,
}

impl ScanGrid {
    pub fn uniform(n: usize, extent: f64) -> Result<Self> {
        Ok(Self {
            base: SampleGrid::new(n, extent)?,
            levels: 1,
            ratio: 4.0,
        })
    }

    pub fn multiscale(n: usize, extent: f64, levels: u32) -> Result<Self> {
        if levels == 0 {
            return Err(Error::invalid("levels", "need at least one level"));
        }
        Ok(Self {
            base: SampleGrid::new(n, extent)?,
            levels,
            ratio: 4.0,
        })
    }

    pub fn level(&self, l: u32) -> SampleGrid {
        SampleGrid {
            n: self.base.n,
            extent: self.base.extent * self.ratio.powi(l as i32),
        }
    }

    pub fn outer_extent(&self) -> f64 {
        self.level(self.levels - 1).extent
    }

    /// Same layout with `n` doubled.
    pub fn refined(&self) -> Self {
        let mut out = *self;
        out.base.n *= 2;
        out
    }

    /// Max of `f` over all grid points, evaluated in parallel by rows.
    pub fn max_of<F>(&self, f: F) -> f64
    where
        F: Fn(Vec2) -> f64 + Sync,
    {
        self.fold(f64::NEG_INFINITY, f64::max, &f)
    }

    /// Min of `f` over all grid points.
    pub fn min_of<F>(&self, f: F) -> f64
    where
        F: Fn(Vec2) -> f64 + Sync,
    {
        self.fold(f64::INFINITY, f64::min, &f)
    }

    fn fold<F>(&self, init: f64, op: fn(f64, f64) -> f64, f: &F) -> f64
    where
        F: Fn(Vec2) -> f64 + Sync,
    {
        (0..self.levels)
            .map(|l| {
                let g = self.level(l);
                let m = g.points_per_axis();
                (0..m)
                    .into_par_iter()
                    .map(|i2| {
                        let y = g.coord(i2);
                        (0..m).fold(init, |acc, i1| op(acc, f([g.coord(i1), y])))
                    })
                    .reduce(|| init, op)
            })
            .fold(init, op)
    }
}

/// Result of a star-norm scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarNormEstimate {
    /// Max over the scan grid of `Σ_{j<=j_max} Σ_k |F(B_{j,k} ξ)|`.
    pub value: f64,
    /// Max over the scan grid of the first omitted layer `Σ_k |F(B_{j_max+1,k} ξ)|`.
    pub next_scale: f64,
}

/// Grid estimate of the star norm `ess sup_ξ Σ_{j>=1} Σ_k |F(B_{j,k} ξ)|`, truncated
/// at `j_max`. `support`, when given, must contain the support of `F`.
pub fn star_norm_estimate<F>(
    f: F,
    grid: &ScanGrid,
    j_max: u32,
    support: Option<&FrequencySupport>,
) -> Result<StarNormEstimate>
where
    F: Fn(Vec2) -> f64 + Sync,
{
    if j_max == 0 {
        return Err(Error::invalid("j_max", "must be at least 1"));
    }
    let table = BandTable::new(j_max + 1);
    let sums = |xi: Vec2| {
        let mut inner = 0.0;
        let mut outer = 0.0;
        table.visit(xi, support, |j, _, arg| {
            let v = f(arg).abs();
            if j <= j_max {
                inner += v;
            } else {
                outer += v;
            }
        });
        (inner, outer)
    };
    let value = grid.max_of(|xi| sums(xi).0);
    let next_scale = grid.max_of(|xi| sums(xi).1);
    Ok(StarNormEstimate { value, next_scale })
}

/// Max over probe points of how many of the sets `R_{θ_j} D_j W_{r,t}`,
/// `j = 1..=j_max`, contain the point.
///
/// Probe points are `R_{θ_i} D_i u` for `u` on a uniform `(n+1)²` grid over each of
/// the four sign copies of `W_{r,t}` and every `i`, so every point of the union is
/// within one grid cell (in the frame of its own set) of a probe.
pub fn rotated_box_overlap_count(
    r: i32,
    t: i32,
    j_max: u32,
    angles: &[f64],
    resolution: usize,
) -> Result<usize> {
    if angles.len() != j_max as usize {
        return Err(Error::invalid(
            "angles",
            format!("expected {j_max} angles, got {}", angles.len()),
        ));
    }
    for (i, &a) in angles.iter().enumerate() {
        let bound = 2.0 * PI * 2f64.powi(-(i as i32 + 1));
        if a.abs() > bound * (1.0 + 1e-12) {
            return Err(Error::invalid(
                "angles",
                format!("angle {a} for j={} exceeds {bound}", i + 1),
            ));
        }
    }
    if resolution == 0 {
        return Err(Error::invalid("resolution", "must be positive"));
    }
    let sector = Sector::dyadic(r, t);
    // forward maps ξ = R_θ D_j u and their inverses u = D_j^{-1} R_{-θ} ξ
    let forward: Vec<Mat2> = angles
        .iter()
        .enumerate()
        .map(|(i, &a)| Mat2::rotation(a).mul(&dilation_matrix(i as u32 + 1)))
        .collect();
    let backward: Vec<Mat2> = forward
        .iter()
        .map(|m| m.inverse().expect("rotation-dilation is invertible"))
        .collect();
    let (lo1, hi1) = (4f64.powi(r - 1), 4f64.powi(r));
    let (lo2, hi2) = (2f64.powi(t - 1), 2f64.powi(t));
    let n = resolution;
    let best = (0..forward.len())
        .into_par_iter()
        .map(|i| {
            let mut best = 0usize;
            for a in 0..=n {
                let u1 = lo1 + (hi1 - lo1) * a as f64 / n as f64;
                for b in 0..=n {
                    let u2 = lo2 + (hi2 - lo2) * b as f64 / n as f64;
                    for sym in AxisSymmetry::ALL {
                        let xi = forward[i].apply(sym.apply([u1, u2]));
                        let count = backward
                            .iter()
                            .enumerate()
                            .filter(|(q, inv)| {
                                // the generating set contains its own probe by construction
                                *q == i || {
                                    let v = inv.apply(xi);
                                    // boundary slack for round-off in the maps
                                    let grow = 1.0 + 1e-12;
                                    let (a1, a2) = (v[0].abs(), v[1].abs());
                                    a1 >= lo1 / grow
                                        && a1 <= hi1 * grow
                                        && a2 >= lo2 / grow
                                        && a2 <= hi2 * grow
                                }
                            })
                            .count();
                        best = best.max(count);
                    }
                }
            }
            best
        })
        .max()
        .unwrap_or(0);
    debug_assert!(sector.contains([lo1, lo2]));
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dilation_examples() {
        assert_eq!(dilation_matrix(0), Mat2::IDENTITY);
        assert_eq!(dilation_matrix(1), Mat2::diag(4.0, 2.0));
        assert_eq!(dilation_matrix(3), Mat2::diag(64.0, 8.0));
    }

    #[test]
    fn packet_matrix_examples() {
        let a = ParabolicIndex::new(1, 0).unwrap().packet_matrix();
        assert!(a.max_abs_diff(&Mat2::diag(4.0, 2.0)) < 1e-15);
        let a = ParabolicIndex::new(1, 1).unwrap().packet_matrix();
        assert!(a.max_abs_diff(&Mat2::diag(-4.0, -2.0)) < 1e-14);
        for idx in ParabolicIndex::all(6) {
            let b = idx.frequency_matrix();
            let expect = 8f64.powi(-(idx.j() as i32));
            assert!((b.det() - expect).abs() <= 1e-14 * expect);
            let prod = idx.packet_matrix().mul(&b.transpose());
            assert!(prod.max_abs_diff(&Mat2::IDENTITY) < 1e-12, "{idx:?}");
        }
    }

    #[test]
    fn parabolic_index_bounds() {
        assert!(ParabolicIndex::new(0, 0).is_err());
        assert!(ParabolicIndex::new(2, 4).is_err());
        assert!(ParabolicIndex::new(2, 3).is_ok());
    }

    #[test]
    fn dual_lattice_examples() {
        let lat = Lattice::new(Mat2::diag(0.25, 0.25)).unwrap();
        let dual = dual_lattice(&lat).unwrap();
        assert!(dual.generator().max_abs_diff(&Mat2::diag(4.0, 4.0)) < 1e-14);

        let shear = Lattice::new(Mat2::new(1.0, 1.0, 0.0, 1.0)).unwrap();
        let dual = dual_lattice(&shear).unwrap();
        assert!(dual.generator().max_abs_diff(&Mat2::new(1.0, 0.0, -1.0, 1.0)) < 1e-14);

        let odd = Lattice::new(Mat2::new(0.3, -1.7, 2.2, 0.9)).unwrap();
        let back = dual_lattice(&dual_lattice(&odd).unwrap()).unwrap();
        assert!(back.generator().max_abs_diff(odd.generator()) < 1e-12);
    }

    #[test]
    fn singular_lattice_rejected() {
        let err = Lattice::new(Mat2::new(1.0, 2.0, 2.0, 4.0)).unwrap_err();
        assert!(err.to_string().contains("degenerate lattice"));
    }

    #[test]
    fn singular_values_match_volume() {
        let lat = Lattice::new(Mat2::new(0.3, -1.7, 2.2, 0.9)).unwrap();
        let (a, b) = lat.singular_values();
        assert!((a * b - lat.volume()).abs() < 1e-12);
        let rot = Lattice::new(Mat2::rotation(0.7).mul(&Mat2::diag(0.5, 2.0))).unwrap();
        let (a, b) = rot.singular_values();
        assert!((a - 0.5).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn enumerate_examples() {
        let unit = Lattice::new(Mat2::IDENTITY).unwrap();
        let pts = lattice_enumerate(&unit, 1.0);
        let ms: Vec<_> = pts.iter().map(|p| p.m).collect();
        assert_eq!(ms, vec![[-1, 0], [0, -1], [0, 1], [1, 0]]);
        assert_eq!(lattice_enumerate(&unit, 1.5).len(), 8);
        let half = Lattice::new(Mat2::diag(0.5, 0.5)).unwrap();
        let pts = lattice_enumerate(&half, 0.6);
        assert_eq!(pts.len(), 4);
        assert!(pts.iter().all(|p| (norm(p.point) - 0.5).abs() < 1e-15));
    }

    #[test]
    fn nearest_point_tie_break() {
        let unit = Lattice::new(Mat2::IDENTITY).unwrap();
        let (m, _) = unit.nearest([0.5, 0.5]);
        assert_eq!(m, [0, 0]);
        let (m, _) = unit.nearest([-0.5, 0.2]);
        assert_eq!(m, [-1, 0]);
        let (m, p) = unit.nearest([2.2, -3.9]);
        assert_eq!(m, [2, -4]);
        assert_eq!(p, [2.0, -4.0]);
    }

    #[test]
    fn sector_membership() {
        let v = Sector::circular(0, 0);
        // cos θ = 0.8 lies in [1/2, 1]
        assert!(v.contains([1.2, 0.9]));
        assert!(!v.contains([0.5, 1.8]));
        assert!(!v.contains([-1.2, 0.9]));
        assert!(v.with_symmetry(AxisSymmetry::FlipFirst).contains([-1.2, 0.9]));
        // boundary cos θ = 1/2 included
        assert!(v.contains([0.75, 0.75 * 3f64.sqrt()]));
        let w = Sector::dyadic(1, 1);
        assert!(w.contains([-2.0, 1.5]));
        assert!(w.contains([4.0, 2.0]));
        assert!(!w.contains([0.9, 1.5]));
    }

    #[test]
    fn band_visit_pruning_is_exact_for_indicator() {
        let table = BandTable::new(6);
        let sector = Sector::circular(0, 1);
        let sup = sector.support();
        let grid = SampleGrid::new(64, 200.0).unwrap();
        for i1 in (0..=64).step_by(3) {
            for i2 in (0..=64).step_by(5) {
                let xi = [grid.coord(i1) + 0.37, grid.coord(i2) - 0.11];
                let mut full = 0.0;
                table.visit(xi, None, |_, _, v| full += sector.indicator(v));
                let mut pruned = 0.0;
                table.visit(xi, Some(&sup), |_, _, v| pruned += sector.indicator(v));
                assert_eq!(full, pruned, "at {xi:?}");
            }
        }
    }

    #[test]
    fn band_visit_emits_each_term_once() {
        let table = BandTable::new(5);
        let sup = FrequencySupport::new(-3.0, 5.0, 2.0);
        for xi in [[10.0, 3.0], [-40.0, 100.0], [0.1, 0.0], [700.0, -20.0]] {
            let mut seen = std::collections::HashSet::new();
            table.visit(xi, Some(&sup), |j, k, _| {
                assert!(seen.insert((j, k)), "duplicate {j},{k} at {xi:?}");
            });
        }
    }

    #[test]
    fn star_norm_of_zero_is_zero() {
        let grid = ScanGrid::uniform(16, 10.0).unwrap();
        let est = star_norm_estimate(|_| 0.0, &grid, 3, None).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn single_scale_overlap_is_one() {
        let c = rotated_box_overlap_count(0, 0, 1, &[0.0], 8).unwrap();
        assert_eq!(c, 1);
    }

    #[test]
    fn overlap_angles_validated() {
        assert!(rotated_box_overlap_count(0, 0, 1, &[4.0], 4).is_err());
        assert!(rotated_box_overlap_count(0, 0, 2, &[0.0], 4).is_err());
    }

    #[test]
    fn separated_scales_do_not_overlap() {
        // with no rotation, D_j W and D_{j'} W are disjoint once 4^{j'-j} > 4
        let inv = dilation_matrix(4).inverse().unwrap();
        let w = Sector::dyadic(0, 0);
        let probe = dilation_matrix(1).apply([0.5, 0.75]);
        assert!(!w.contains(inv.apply(probe)));
    }
}
