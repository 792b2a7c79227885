//! Packet indices and coefficient sets.

use std::io::Read;
use std::path::Path;

use num_complex::Complex64;

use super::field::ByteReader;
use crate::error::{Error, Result};
use crate::geometry::{Lattice, Mat2, ParabolicIndex};

/// A `(j, k)` band, or the coarse band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Band {
    Coarse,
    Fine(ParabolicIndex),
}

impl Band {
    /// All bands up to `j_max`: coarse first, then `(j, k)` lexicographically.
    pub fn all(j_max: u32) -> Vec<Band> {
        std::iter::once(Band::Coarse)
            .chain(ParabolicIndex::all(j_max).map(Band::Fine))
            .collect()
    }

    /// `A_{j,k}` (identity for the coarse band).
    pub fn packet_matrix(&self) -> Mat2 {
        match self {
            Band::Coarse => Mat2::IDENTITY,
            Band::Fine(idx) => idx.packet_matrix(),
        }
    }

    /// `B_{j,k}` (identity for the coarse band).
    pub fn frequency_matrix(&self) -> Mat2 {
        match self {
            Band::Coarse => Mat2::IDENTITY,
            Band::Fine(idx) => idx.frequency_matrix(),
        }
    }

    /// `8^{-j/2}` (1 for the coarse band).
    pub fn amplitude(&self) -> f64 {
        match self {
            Band::Coarse => 1.0,
            Band::Fine(idx) => 8f64.powf(-(idx.j() as f64) / 2.0),
        }
    }

    /// Centers `A⁻¹λ = A⁻¹P m` as a matrix acting on `m`.
    pub fn center_matrix(&self, lat: &Lattice) -> Mat2 {
        self.packet_matrix()
            .inverse()
            .expect("packet matrices are invertible")
            .mul(lat.generator())
    }

    fn code(&self) -> (i32, i32) {
        match self {
            Band::Coarse => (0, 0),
            Band::Fine(idx) => (idx.j() as i32, idx.k() as i32),
        }
    }
}

/// One frame element: a band and the lattice coordinates `m` of `λ = P m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PacketIndex {
    Coarse { m: [i64; 2] },
    Fine { idx: ParabolicIndex, m: [i64; 2] },
}

impl PacketIndex {
    pub fn band(&self) -> Band {
        match *self {
            PacketIndex::Coarse { .. } => Band::Coarse,
            PacketIndex::Fine { idx, .. } => Band::Fine(idx),
        }
    }

    pub fn m(&self) -> [i64; 2] {
        match *self {
            PacketIndex::Coarse { m } | PacketIndex::Fine { m, .. } => m,
        }
    }

    pub fn new(band: Band, m: [i64; 2]) -> Self {
        match band {
            Band::Coarse => PacketIndex::Coarse { m },
            Band::Fine(idx) => PacketIndex::Fine { idx, m },
        }
    }
}

/// Coefficients of one band.
#[derive(Debug, Clone, PartialEq)]
pub struct BandCoefficients {
    pub band: Band,
    pub m: Vec<[i64; 2]>,
    pub values: Vec<Complex64>,
}

/// Frame coefficients grouped by band.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub lattice: Lattice,
    pub j_max: u32,
    /// Size and frequency half-width of the grid the coefficients were taken on.
    pub grid_n: usize,
    pub grid_extent: f64,
    pub bands: Vec<BandCoefficients>,
}

impl CoefficientSet {
    pub fn len(&self) -> usize {
        self.bands.iter().map(|b| b.values.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (PacketIndex, Complex64)> + '_ {
        self.bands.iter().flat_map(|b| {
            b.m.iter()
                .zip(&b.values)
                .map(move |(&m, &v)| (PacketIndex::new(b.band, m), v))
        })
    }

    pub fn get(&self, idx: &PacketIndex) -> Option<Complex64> {
        let band = self.bands.iter().find(|b| b.band == idx.band())?;
        let pos = band.m.iter().position(|&m| m == idx.m())?;
        Some(band.values[pos])
    }

    pub fn get_mut(&mut self, idx: &PacketIndex) -> Option<&mut Complex64> {
        let band = self.bands.iter_mut().find(|b| b.band == idx.band())?;
        let pos = band.m.iter().position(|&m| m == idx.m())?;
        Some(&mut band.values[pos])
    }

    /// Same index set with every value set to zero.
    pub fn zeroed(&self) -> Self {
        let mut out = self.clone();
        for b in &mut out.bands {
            b.values.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        }
        out
    }

    /// `Σ |c|²`.
    pub fn energy(&self) -> f64 {
        self.bands
            .iter()
            .flat_map(|b| &b.values)
            .map(|v| v.norm_sqr())
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.bands
            .iter()
            .flat_map(|b| &b.values)
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// `Σ c · conj(d)` over a matching index set.
    pub fn inner(&self, other: &CoefficientSet) -> Result<Complex64> {
        self.check_same_indices(other)?;
        Ok(self
            .bands
            .iter()
            .zip(&other.bands)
            .flat_map(|(a, b)| a.values.iter().zip(&b.values))
            .map(|(x, y)| x * y.conj())
            .sum())
    }

    pub fn add(&self, other: &CoefficientSet) -> Result<CoefficientSet> {
        self.check_same_indices(other)?;
        let mut out = self.clone();
        for (a, b) in out.bands.iter_mut().zip(&other.bands) {
            for (x, y) in a.values.iter_mut().zip(&b.values) {
                *x += y;
            }
        }
        Ok(out)
    }

    fn check_same_indices(&self, other: &CoefficientSet) -> Result<()> {
        let same = self.bands.len() == other.bands.len()
            && self
                .bands
                .iter()
                .zip(&other.bands)
                .all(|(a, b)| a.band == b.band && a.m == b.m);
        if same {
            Ok(())
        } else {
            Err(Error::invalid("coefficients", "index sets differ"))
        }
    }

    /// `WPC1` records in band order. Lattice and grid metadata are not stored.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(8 + self.len() * 32);
        out.extend_from_slice(b"WPC1");
        let count = u32::try_from(self.len())
            .map_err(|_| Error::invalid("coefficients", "too many records for WPC1"))?;
        out.extend_from_slice(&count.to_le_bytes());
        for (idx, v) in self.iter() {
            let (j, k) = idx.band().code();
            let m = idx.m();
            let m1 = i32::try_from(m[0]).map_err(|_| Error::invalid("m", "exceeds i32"))?;
            let m2 = i32::try_from(m[1]).map_err(|_| Error::invalid("m", "exceeds i32"))?;
            for x in [j, k, m1, m2] {
                out.extend_from_slice(&x.to_le_bytes());
            }
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
        Ok(out)
    }

    /// Parses `WPC1` records; the lattice and grid metadata come from the caller.
    pub fn from_bytes(
        bytes: &[u8],
        lattice: Lattice,
        grid_n: usize,
        grid_extent: f64,
    ) -> Result<CoefficientSet> {
        let mut r = ByteReader::new(bytes);
        let magic = r.take(4)?;
        if magic != b"WPC1" {
            return Err(Error::Format {
                offset: 0,
                reason: format!("bad magic {:?}, expected \"WPC1\"", String::from_utf8_lossy(magic)),
            });
        }
        let count = r.u32()? as usize;
        let mut bands: Vec<BandCoefficients> = Vec::new();
        let mut j_max = 0;
        for _ in 0..count {
            let rec = r.pos;
            let j = r.i32()?;
            let k = r.i32()?;
            let m1 = r.i32()?;
            let m2 = r.i32()?;
            let re = r.f64()?;
            let im = r.f64()?;
            let band = match (j, k) {
                (0, 0) => Band::Coarse,
                (j, k) if j > 0 && k >= 0 => Band::Fine(
                    ParabolicIndex::new(j as u32, k as u32).map_err(|_| Error::Format {
                        offset: rec,
                        reason: format!("invalid band (j={j}, k={k})"),
                    })?,
                ),
                _ => {
                    return Err(Error::Format {
                        offset: rec,
                        reason: format!("invalid band (j={j}, k={k})"),
                    })
                }
            };
            if let Band::Fine(idx) = band {
                j_max = j_max.max(idx.j());
            }
            match bands.last_mut() {
                Some(b) if b.band == band => {
                    b.m.push([m1 as i64, m2 as i64]);
                    b.values.push(Complex64::new(re, im));
                }
                _ => bands.push(BandCoefficients {
                    band,
                    m: vec![[m1 as i64, m2 as i64]],
                    values: vec![Complex64::new(re, im)],
                }),
            }
        }
        if r.pos != bytes.len() {
            return Err(Error::Format {
                offset: r.pos,
                reason: format!("{} trailing bytes", bytes.len() - r.pos),
            });
        }
        Ok(CoefficientSet {
            lattice,
            j_max,
            grid_n,
            grid_extent,
            bands,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(
        path: &Path,
        lattice: Lattice,
        grid_n: usize,
        grid_extent: f64,
    ) -> Result<CoefficientSet> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        CoefficientSet::from_bytes(&bytes, lattice, grid_n, grid_extent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CoefficientSet {
        let lat = Lattice::rectangular(0.5, 0.25).unwrap();
        CoefficientSet {
            lattice: lat,
            j_max: 1,
            grid_n: 8,
            grid_extent: 2.0,
            bands: vec![
                BandCoefficients {
                    band: Band::Coarse,
                    m: vec![[0, 0], [-1, 2]],
                    values: vec![Complex64::new(1.0, -2.0), Complex64::new(0.5, 0.0)],
                },
                BandCoefficients {
                    band: Band::Fine(ParabolicIndex::new(1, 1).unwrap()),
                    m: vec![[3, -4]],
                    values: vec![Complex64::new(-0.25, 8.0)],
                },
            ],
        }
    }

    #[test]
    fn wpc1_round_trip() {
        let c = sample();
        let bytes = c.to_bytes().unwrap();
        assert_eq!(bytes.len(), 8 + 3 * 32);
        let back = CoefficientSet::from_bytes(&bytes, c.lattice.clone(), 8, 2.0).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn wpc1_errors_report_offsets() {
        let c = sample();
        let mut bytes = c.to_bytes().unwrap();
        assert!(matches!(
            CoefficientSet::from_bytes(&bytes[..30], c.lattice.clone(), 8, 2.0),
            Err(Error::Format { offset: 30, .. })
        ));
        // second record's j
        bytes[8 + 32..8 + 36].copy_from_slice(&(-3i32).to_le_bytes());
        assert!(matches!(
            CoefficientSet::from_bytes(&bytes, c.lattice.clone(), 8, 2.0),
            Err(Error::Format { offset: 40, .. })
        ));
    }

    #[test]
    fn lookup_and_energy() {
        let c = sample();
        let idx = PacketIndex::Fine {
            idx: ParabolicIndex::new(1, 1).unwrap(),
            m: [3, -4],
        };
        assert_eq!(c.get(&idx), Some(Complex64::new(-0.25, 8.0)));
        assert!((c.energy() - (5.0 + 0.25 + 64.0625)).abs() < 1e-12);
        assert_eq!(c.len(), 3);
    }
}
