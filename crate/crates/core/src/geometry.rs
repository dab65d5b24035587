//! Microphone-array geometry, spherical candidate grids and far-field TDOA tables.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Vec3 = [f64; 3];

pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;

pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Unit vector for an (elevation, azimuth) pair in radians.
pub fn direction_from_angles(elevation: f64, azimuth: f64) -> Vec3 {
    [
        elevation.cos() * azimuth.cos(),
        elevation.cos() * azimuth.sin(),
        elevation.sin(),
    ]
}

/// (elevation, azimuth) in radians, azimuth wrapped to [0, 2π).
pub fn angles_from_direction(d: &Vec3) -> (f64, f64) {
    let n = norm(d);
    let el = (d[2] / n).clamp(-1.0, 1.0).asin();
    let mut az = d[1].atan2(d[0]);
    if az < 0.0 {
        az += 2.0 * PI;
    }
    if az >= 2.0 * PI {
        az -= 2.0 * PI;
    }
    (el, az)
}

/// Unordered microphone pair with `m > m_prime`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MicPair {
    pub m: usize,
    pub m_prime: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MicArray {
    positions: Vec<Vec3>,
    speed_of_sound: f64,
    pairs: Vec<MicPair>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ArrayFile {
    positions: Vec<Vec3>,
    #[serde(default)]
    speed_of_sound: Option<f64>,
}

impl MicArray {
    pub fn new(positions: Vec<Vec3>, speed_of_sound: f64) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::invalid("a microphone array needs at least 2 microphones"));
        }
        if !(speed_of_sound > 0.0) {
            return Err(Error::invalid("speed of sound must be positive"));
        }
        if positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("microphone positions must be finite"));
        }
        for m in 1..positions.len() {
            for mp in 0..m {
                if norm(&sub(&positions[m], &positions[mp])) < 1e-9 {
                    return Err(Error::invalid(format!(
                        "microphones {mp} and {m} coincide"
                    )));
                }
            }
        }
        let pairs = (1..positions.len())
            .flat_map(|m| (0..m).map(move |m_prime| MicPair { m, m_prime }))
            .collect();
        Ok(Self {
            positions,
            speed_of_sound,
            pairs,
        })
    }

    /// The shipped 12-microphone head-like layout: three rings of four on a
    /// 0.078 m sphere cap at 55°, 25° and 10° elevation, alternate rings
    /// rotated by 45° in azimuth.
    pub fn default_12() -> Self {
        const RADIUS: f64 = 0.078;
        let rings = [(55.0f64, 0.0f64), (25.0, 45.0), (10.0, 0.0)];
        let positions = rings
            .iter()
            .flat_map(|&(el, offset)| {
                (0..4).map(move |i| {
                    let d = direction_from_angles(
                        el.to_radians(),
                        (offset + 90.0 * f64::from(i)).to_radians(),
                    );
                    [RADIUS * d[0], RADIUS * d[1], RADIUS * d[2]]
                })
            })
            .collect();
        Self::new(positions, DEFAULT_SPEED_OF_SOUND).expect("default array is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ArrayFile = toml::from_str(text)?;
        Self::new(
            file.positions,
            file.speed_of_sound.unwrap_or(DEFAULT_SPEED_OF_SOUND),
        )
    }

    pub fn to_toml_string(&self) -> String {
        let file = ArrayFile {
            positions: self.positions.clone(),
            speed_of_sound: Some(self.speed_of_sound),
        };
        toml::to_string(&file).expect("array serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read array file {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn speed_of_sound(&self) -> f64 {
        self.speed_of_sound
    }

    pub fn pairs(&self) -> &[MicPair] {
        &self.pairs
    }

    pub fn pair_distance(&self, pair: MicPair) -> f64 {
        norm(&sub(&self.positions[pair.m], &self.positions[pair.m_prime]))
    }

    pub fn centroid(&self) -> Vec3 {
        let n = self.len() as f64;
        let mut c = [0.0; 3];
        for p in &self.positions {
            for i in 0..3 {
                c[i] += p[i] / n;
            }
        }
        c
    }

    pub fn translated(&self, offset: Vec3) -> Self {
        let positions = self
            .positions
            .iter()
            .map(|p| [p[0] + offset[0], p[1] + offset[1], p[2] + offset[2]])
            .collect();
        Self::new(positions, self.speed_of_sound).expect("translation keeps the array valid")
    }
}

/// Res1 × Res2 spherical candidate set. Candidate `q = e·Res2 + a` (elevation-major).
///
/// Elevations are cell centers over (−π/2, π/2), azimuths cell centers over [0, 2π).
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateGrid {
    res_elevation: usize,
    res_azimuth: usize,
    elevations: Vec<f64>,
    azimuths: Vec<f64>,
    directions: Vec<Vec3>,
}

impl CandidateGrid {
    pub fn new(res_elevation: usize, res_azimuth: usize) -> Result<Self> {
        if res_elevation < 2 || res_azimuth < 2 {
            return Err(Error::invalid(format!(
                "grid resolution {res_elevation}x{res_azimuth} below 2"
            )));
        }
        let el_step = PI / res_elevation as f64;
        let az_step = 2.0 * PI / res_azimuth as f64;
        let elevations: Vec<f64> = (0..res_elevation)
            .map(|i| -PI / 2.0 + (i as f64 + 0.5) * el_step)
            .collect();
        let azimuths: Vec<f64> = (0..res_azimuth)
            .map(|j| (j as f64 + 0.5) * az_step)
            .collect();
        let directions = elevations
            .iter()
            .flat_map(|&el| azimuths.iter().map(move |&az| direction_from_angles(el, az)))
            .collect();
        Ok(Self {
            res_elevation,
            res_azimuth,
            elevations,
            azimuths,
            directions,
        })
    }

    pub fn res_elevation(&self) -> usize {
        self.res_elevation
    }

    pub fn res_azimuth(&self) -> usize {
        self.res_azimuth
    }

    /// Q = Res1·Res2.
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn elevations(&self) -> &[f64] {
        &self.elevations
    }

    pub fn azimuths(&self) -> &[f64] {
        &self.azimuths
    }

    pub fn directions(&self) -> &[Vec3] {
        &self.directions
    }

    pub fn index(&self, elevation_index: usize, azimuth_index: usize) -> usize {
        elevation_index * self.res_azimuth + azimuth_index
    }

    pub fn cell(&self, q: usize) -> (usize, usize) {
        (q / self.res_azimuth, q % self.res_azimuth)
    }

    /// Adjacent-candidate azimuth spacing at the equator, in degrees ("SRP-Grid").
    pub fn azimuth_step_deg(&self) -> f64 {
        360.0 / self.res_azimuth as f64
    }

    pub fn elevation_step_deg(&self) -> f64 {
        180.0 / self.res_elevation as f64
    }

    /// Grid cell whose elevation/azimuth bin contains `direction`.
    pub fn cell_of(&self, direction: &Vec3) -> (usize, usize) {
        let (el, az) = angles_from_direction(direction);
        let e = ((el + PI / 2.0) / (PI / self.res_elevation as f64)).floor() as isize;
        let a = (az / (2.0 * PI / self.res_azimuth as f64)).floor() as isize;
        (
            e.clamp(0, self.res_elevation as isize - 1) as usize,
            a.rem_euclid(self.res_azimuth as isize) as usize,
        )
    }

    /// Flat candidate index of the cell containing `direction`.
    pub fn index_of(&self, direction: &Vec3) -> usize {
        let (e, a) = self.cell_of(direction);
        self.index(e, a)
    }

    /// Whether two cells are equal or neighbours (azimuth wraps around).
    pub fn within_one_cell(&self, a: (usize, usize), b: (usize, usize)) -> bool {
        let de = a.0.abs_diff(b.0);
        let da = a.1.abs_diff(b.1);
        let da = da.min(self.res_azimuth - da);
        de <= 1 && da <= 1
    }
}

/// Far-field TDOAs in seconds for every (pair, candidate), pair-major.
///
/// `τ(pair, q) = τ_m − τ_m′` where `τ_m = −⟨d_q, p_m⟩ / c` is the plane-wave
/// arrival time at microphone `m` for a source in direction `d_q`.
#[derive(Clone, Debug, PartialEq)]
pub struct TdoaTable {
    n_pairs: usize,
    res_elevation: usize,
    res_azimuth: usize,
    seconds: Vec<f64>,
}

impl TdoaTable {
    pub fn new(array: &MicArray, grid: &CandidateGrid) -> Self {
        let c = array.speed_of_sound();
        let pos = array.positions();
        let mut seconds = Vec::with_capacity(array.pairs().len() * grid.len());
        for pair in array.pairs() {
            let baseline = sub(&pos[pair.m_prime], &pos[pair.m]);
            seconds.extend(grid.directions().iter().map(|d| dot(d, &baseline) / c));
        }
        Self {
            n_pairs: array.pairs().len(),
            res_elevation: grid.res_elevation(),
            res_azimuth: grid.res_azimuth(),
            seconds,
        }
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn n_candidates(&self) -> usize {
        self.res_elevation * self.res_azimuth
    }

    pub fn get(&self, pair: usize, q: usize) -> f64 {
        self.seconds[pair * self.n_candidates() + q]
    }

    pub fn seconds(&self) -> &[f64] {
        &self.seconds
    }

    /// Sample-domain lags `τ·fs`.
    pub fn lags(&self, fs: u32) -> LagTable {
        let fs_f = f64::from(fs);
        LagTable {
            n_pairs: self.n_pairs,
            res_elevation: self.res_elevation,
            res_azimuth: self.res_azimuth,
            fs,
            values: self.seconds.iter().map(|t| t * fs_f).collect(),
        }
    }
}

/// TDOAs expressed in samples, `τ / T` with `T = 1/fs`, pair-major.
#[derive(Clone, Debug, PartialEq)]
pub struct LagTable {
    pub(crate) n_pairs: usize,
    pub(crate) res_elevation: usize,
    pub(crate) res_azimuth: usize,
    pub(crate) fs: u32,
    pub(crate) values: Vec<f64>,
}

impl LagTable {
    /// Builds a table directly from sample lags (used by tests and synthetic setups).
    pub fn from_values(
        n_pairs: usize,
        res_elevation: usize,
        res_azimuth: usize,
        fs: u32,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != n_pairs * res_elevation * res_azimuth {
            return Err(Error::Dimension(format!(
                "{} lags for {n_pairs} pairs × {res_elevation}x{res_azimuth}",
                values.len()
            )));
        }
        Ok(Self {
            n_pairs,
            res_elevation,
            res_azimuth,
            fs,
            values,
        })
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn n_candidates(&self) -> usize {
        self.res_elevation * self.res_azimuth
    }

    pub fn res_elevation(&self) -> usize {
        self.res_elevation
    }

    pub fn res_azimuth(&self) -> usize {
        self.res_azimuth
    }

    pub fn fs(&self) -> u32 {
        self.fs
    }

    pub fn pair(&self, pair: usize) -> &[f64] {
        let q = self.n_candidates();
        &self.values[pair * q..(pair + 1) * q]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Per-pair interpolation bounds `N_samp(m, m′) = floor(dist·fs / c)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleBounds {
    pub fs: u32,
    pub per_pair: Vec<usize>,
}

impl SampleBounds {
    /// Σ over pairs of `2·N_samp + 1`, the interpolation index count of the two-sided form.
    pub fn total_indices(&self) -> usize {
        self.per_pair.iter().map(|n| 2 * n + 1).sum()
    }

    /// Σ over pairs of `N_samp + 1`, the index count of the one-sided form.
    pub fn one_sided_indices(&self) -> usize {
        self.per_pair.iter().map(|n| n + 1).sum()
    }

    pub fn max(&self) -> usize {
        self.per_pair.iter().copied().max().unwrap_or(0)
    }

    pub fn n_pairs(&self) -> usize {
        self.per_pair.len()
    }
}

pub fn n_samp(array: &MicArray, fs: u32) -> SampleBounds {
    let per_pair = array
        .pairs()
        .iter()
        .map(|&p| (array.pair_distance(p) / array.speed_of_sound() * f64::from(fs)).floor() as usize)
        .collect();
    SampleBounds { fs, per_pair }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_mics(d: f64) -> MicArray {
        MicArray::new(vec![[d, 0.0, 0.0], [0.0, 0.0, 0.0]], 343.0).unwrap()
    }

    #[test]
    fn grid_sizes_and_steps() {
        let g = CandidateGrid::new(8, 16).unwrap();
        assert_eq!(g.len(), 128);
        assert!((g.azimuth_step_deg() - 22.5).abs() < 1e-12);
        let g = CandidateGrid::new(4, 8).unwrap();
        assert!((g.azimuth_step_deg() - 45.0).abs() < 1e-12);
        let g = CandidateGrid::new(2, 2).unwrap();
        assert_eq!(g.len(), 4);
        assert!(g.directions().iter().all(|d| (norm(d) - 1.0).abs() < 1e-12));
        assert!(CandidateGrid::new(1, 8).is_err());
    }

    #[test]
    fn grid_is_balanced() {
        for (r1, r2) in [(4, 8), (8, 16), (16, 32), (4, 4)] {
            let g = CandidateGrid::new(r1, r2).unwrap();
            let mut mean = [0.0; 3];
            for d in g.directions() {
                for i in 0..3 {
                    mean[i] += d[i] / g.len() as f64;
                }
            }
            assert!(norm(&mean) < 0.05);
        }
    }

    #[test]
    fn cell_lookup_roundtrips_centers() {
        let g = CandidateGrid::new(8, 16).unwrap();
        for q in 0..g.len() {
            assert_eq!(g.index_of(&g.directions()[q]), q);
        }
        assert!(g.within_one_cell((3, 0), (4, 15)));
        assert!(!g.within_one_cell((3, 0), (5, 0)));
    }

    #[test]
    fn tdoa_examples() {
        let array = two_mics(0.343);
        let grid = CandidateGrid::new(8, 16).unwrap();
        let table = TdoaTable::new(&array, &grid);
        // candidate nearest +x, then the exact direction through a custom grid row
        let d = [1.0, 0.0, 0.0];
        let baseline = sub(&array.positions()[0], &array.positions()[1]);
        assert!((dot(&d, &baseline) / 343.0 - 1e-3).abs() < 1e-15);
        for q in 0..grid.len() {
            let expect = dot(&grid.directions()[q], &baseline) / 343.0;
            assert!((table.get(0, q) - expect).abs() < 1e-15);
        }
        // orthogonal candidate
        let ortho = [0.0, 1.0, 0.0];
        assert_eq!(dot(&ortho, &baseline), 0.0);
    }

    #[test]
    fn tdoa_antisymmetric_under_swap() {
        let grid = CandidateGrid::new(4, 8).unwrap();
        let a = MicArray::new(vec![[0.1, 0.02, 0.0], [0.0, 0.0, 0.03]], 343.0).unwrap();
        let b = MicArray::new(vec![[0.0, 0.0, 0.03], [0.1, 0.02, 0.0]], 343.0).unwrap();
        let ta = TdoaTable::new(&a, &grid);
        let tb = TdoaTable::new(&b, &grid);
        for q in 0..grid.len() {
            assert!((ta.get(0, q) + tb.get(0, q)).abs() < 1e-15);
        }
    }

    #[test]
    fn n_samp_examples() {
        assert_eq!(n_samp(&two_mics(0.1), 16000).per_pair, vec![4]);
        let small = n_samp(&two_mics(0.0214), 16000);
        assert_eq!(small.per_pair, vec![0]);
        assert_eq!(small.total_indices(), 1);
        let default = MicArray::default_12();
        assert_eq!(default.pairs().len(), 66);
        assert!(default.pairs().iter().all(|p| p.m > p.m_prime));
    }

    #[test]
    fn default_array_bounds() {
        let b = n_samp(&MicArray::default_12(), 16000);
        assert_eq!(b.max(), 7);
        assert_eq!(b.total_indices(), 590);
        assert_eq!(b.one_sided_indices(), 328);
    }

    #[test]
    fn array_file_roundtrip() {
        let a = MicArray::default_12();
        let b = MicArray::from_toml_str(&a.to_toml_string()).unwrap();
        assert_eq!(a, b);
        let c = MicArray::from_toml_str("positions = [[0,0,0],[0.1,0,0]]").unwrap();
        assert_eq!(c.speed_of_sound(), 343.0);
        assert!(MicArray::from_toml_str("positions = [[0,0,0],[0,0,0]]").is_err());
    }

    proptest! {
        #[test]
        fn lags_covered_by_bounds(fs in prop::sample::select(vec![8000u32, 12000, 16000, 44100])) {
            let array = MicArray::default_12();
            let grid = CandidateGrid::new(8, 16).unwrap();
            let lags = TdoaTable::new(&array, &grid).lags(fs);
            let bounds = n_samp(&array, fs);
            for p in 0..array.pairs().len() {
                for &x in lags.pair(p) {
                    prop_assert!(x.abs() <= bounds.per_pair[p] as f64 + 1.0);
                    prop_assert!(x.abs() <= array.pair_distance(array.pairs()[p]) / 343.0 * fs as f64 + 1e-12);
                }
            }
        }

        #[test]
        fn translation_invariant(dx in -5.0..5.0f64, dy in -5.0..5.0f64, dz in -5.0..5.0f64) {
            let array = MicArray::default_12();
            let grid = CandidateGrid::new(4, 8).unwrap();
            let a = TdoaTable::new(&array, &grid);
            let b = TdoaTable::new(&array.translated([dx, dy, dz]), &grid);
            for (x, y) in a.seconds().iter().zip(b.seconds()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
