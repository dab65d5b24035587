//! GCC-PHAT and steered-response-power maps.
//!
//! Four evaluators share the same input (a [`GccPhatSpectrum`]) and the same
//! output ([`SrpFrame`]):
//!
//! * [`fd_srp`] sums the weighted cross-spectrum directly over frequency bins
//!   at the exact candidate lag. It is slow and serves as the reference.
//! * [`td_srp`] inverse-transforms each pair once and reads the nearest integer lag.
//! * [`lc_srp`] rebuilds the correlation at fractional lags from `2·N_samp + 1`
//!   samples with Whittaker-Shannon interpolation.
//! * [`lc_srp_edge`] pairs lag `n` with lag `−n`, so only `N_samp + 1` sample
//!   indices per pair are visited and stored.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{n_samp, CandidateGrid, LagTable, MicArray, SampleBounds, TdoaTable};
use crate::signal::{frame_and_window, AudioClip, FrameSpec, RealFft, SpectralFrame};
use crate::{Error, Result};

pub const DEFAULT_PHAT_EPSILON: f64 = 1e-12;

/// Arithmetic-operation sink used to instrument kernels.
pub trait OpCounter {
    fn add(&mut self, ops: u64);
}

/// Counter that discards everything; the default for production calls.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoCount;

impl OpCounter for NoCount {
    #[inline(always)]
    fn add(&mut self, _ops: u64) {}
}

/// Counter that sums every reported operation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpTally(pub u64);

impl OpCounter for OpTally {
    fn add(&mut self, ops: u64) {
        self.0 += ops;
    }
}

/// `sin(πx)` with the argument reduced before scaling, exact zeros at integers.
pub fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round();
    if r == r.trunc() {
        return 0.0;
    }
    if r > 0.5 {
        (PI * (1.0 - r)).sin()
    } else if r < -0.5 {
        -(PI * (1.0 + r)).sin()
    } else {
        (PI * r).sin()
    }
}

/// Normalized sinc, `sin(πx)/(πx)` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        sin_pi(x) / (PI * x)
    }
}

/// Weight `w_k` of one-sided bin `k` when folding a real signal's spectrum:
/// DC and Nyquist appear once in the full spectrum, interior bins twice.
fn bin_weight(k: usize, k_len: usize) -> f64 {
    if k == 0 || k == k_len / 2 {
        0.5
    } else {
        1.0
    }
}

/// Phase-transformed cross-spectra for every microphone pair (`K/2 + 1` bins each).
#[derive(Clone, Debug, PartialEq)]
pub struct GccPhatSpectrum {
    k: usize,
    pairs: Vec<Vec<Complex64>>,
}

impl GccPhatSpectrum {
    /// Wraps precomputed pair spectra, e.g. synthetic test inputs.
    pub fn from_pairs(k: usize, pairs: Vec<Vec<Complex64>>) -> Result<Self> {
        if k < 2 || !k.is_multiple_of(2) {
            return Err(Error::invalid(format!("transform length {k} must be even")));
        }
        if pairs.is_empty() {
            return Err(Error::Empty("no microphone pairs".into()));
        }
        if let Some(bad) = pairs.iter().find(|p| p.len() != k / 2 + 1) {
            return Err(Error::Dimension(format!(
                "pair spectrum has {} bins, expected {}",
                bad.len(),
                k / 2 + 1
            )));
        }
        Ok(Self { k, pairs })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_bins(&self) -> usize {
        self.k / 2 + 1
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn pair(&self, index: usize) -> &[Complex64] {
        &self.pairs[index]
    }

    pub fn pairs(&self) -> &[Vec<Complex64>] {
        &self.pairs
    }
}

pub fn gcc_phat(frame: &SpectralFrame, array: &MicArray, eps: f64) -> Result<GccPhatSpectrum> {
    if !(eps > 0.0) {
        return Err(Error::invalid("PHAT epsilon must be positive"));
    }
    if frame.channel_count() != array.len() {
        return Err(Error::Dimension(format!(
            "frame has {} channels, array has {} microphones",
            frame.channel_count(),
            array.len()
        )));
    }
    let pairs = array
        .pairs()
        .iter()
        .map(|p| {
            frame.bins[p.m]
                .iter()
                .zip(&frame.bins[p.m_prime])
                .map(|(a, b)| {
                    let cross = a * b.conj();
                    cross / cross.norm().max(eps)
                })
                .collect()
        })
        .collect();
    GccPhatSpectrum::from_pairs(frame.k, pairs)
}

/// One steered-response-power map over an elevation-major candidate grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SrpFrame {
    pub frame_index: usize,
    res_elevation: usize,
    res_azimuth: usize,
    power: Vec<f64>,
    argmax: usize,
}

impl SrpFrame {
    pub fn new(
        frame_index: usize,
        res_elevation: usize,
        res_azimuth: usize,
        power: Vec<f64>,
    ) -> Result<Self> {
        if power.len() != res_elevation * res_azimuth || power.is_empty() {
            return Err(Error::Dimension(format!(
                "{} power values for a {res_elevation}x{res_azimuth} grid",
                power.len()
            )));
        }
        if power.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("SRP map contains non-finite values"));
        }
        let mut argmax = 0;
        for (q, &p) in power.iter().enumerate() {
            if p > power[argmax] {
                argmax = q;
            }
        }
        Ok(Self {
            frame_index,
            res_elevation,
            res_azimuth,
            power,
            argmax,
        })
    }

    pub fn res_elevation(&self) -> usize {
        self.res_elevation
    }

    pub fn res_azimuth(&self) -> usize {
        self.res_azimuth
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn argmax(&self) -> usize {
        self.argmax
    }

    pub fn argmax_cell(&self) -> (usize, usize) {
        (self.argmax / self.res_azimuth, self.argmax % self.res_azimuth)
    }

    /// Argmax cell center normalized to `[0, 1]²` as `(index + 0.5) / Res`.
    pub fn argmax_coords(&self) -> (f64, f64) {
        let (e, a) = self.argmax_cell();
        (
            (e as f64 + 0.5) / self.res_elevation as f64,
            (a as f64 + 0.5) / self.res_azimuth as f64,
        )
    }

    /// Argmax cell center as (elevation, azimuth) in degrees.
    pub fn argmax_angles_deg(&self) -> (f64, f64) {
        let (e, a) = self.argmax_coords();
        (e * 180.0 - 90.0, a * 360.0)
    }
}

fn check_pairs(gcc: &GccPhatSpectrum, n_pairs: usize) -> Result<()> {
    if gcc.n_pairs() != n_pairs {
        return Err(Error::Dimension(format!(
            "spectrum has {} pairs, table has {n_pairs}",
            gcc.n_pairs()
        )));
    }
    Ok(())
}

/// Reference evaluator: direct frequency-domain sum at the exact lag of every candidate.
pub fn fd_srp(gcc: &GccPhatSpectrum, lags: &LagTable) -> Result<SrpFrame> {
    check_pairs(gcc, lags.n_pairs())?;
    let k_len = gcc.k() as f64;
    let mut power = vec![0.0; lags.n_candidates()];
    for (p, spectrum) in gcc.pairs().iter().enumerate() {
        for (acc, &x) in power.iter_mut().zip(lags.pair(p)) {
            let mut sum = 0.0;
            for (k, g) in spectrum.iter().enumerate() {
                let phase = 2.0 * PI * k as f64 * x / k_len;
                let rot = Complex64::new(phase.cos(), phase.sin());
                sum += bin_weight(k, gcc.k()) * 2.0 * (g * rot).re;
            }
            *acc += sum;
        }
    }
    SrpFrame::new(0, lags.res_elevation(), lags.res_azimuth(), power)
}

/// Time-domain GCC of every pair, scaled so that `2·gcc[n]` equals the
/// bin-weighted cross-correlation at integer lag `n`.
pub fn td_gcc(gcc: &GccPhatSpectrum, fft: &RealFft) -> Result<Vec<Vec<f64>>> {
    if fft.len() != gcc.k() {
        return Err(Error::Dimension(format!(
            "FFT length {} does not match spectrum length {}",
            fft.len(),
            gcc.k()
        )));
    }
    let scale = gcc.k() as f64 / 2.0;
    gcc.pairs()
        .iter()
        .map(|s| {
            let mut v = fft.inverse(s)?;
            v.iter_mut().for_each(|x| *x *= scale);
            Ok(v)
        })
        .collect()
}

/// Integer TDOA indices `round(τ·fs) mod K`, pair-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LagIndexTable {
    k: usize,
    n_pairs: usize,
    res_elevation: usize,
    res_azimuth: usize,
    indices: Vec<usize>,
}

impl LagIndexTable {
    pub fn new(lags: &LagTable, k: usize) -> Self {
        let k_i = k as i64;
        let indices = lags
            .values()
            .iter()
            .map(|x| (x.round() as i64).rem_euclid(k_i) as usize)
            .collect();
        Self {
            k,
            n_pairs: lags.n_pairs(),
            res_elevation: lags.res_elevation(),
            res_azimuth: lags.res_azimuth(),
            indices,
        }
    }

    pub fn entry_count(&self) -> usize {
        self.indices.len()
    }
}

pub fn td_srp(gcc: &GccPhatSpectrum, lags: &LagTable) -> Result<SrpFrame> {
    let fft = RealFft::new(gcc.k())?;
    td_srp_with(gcc, &LagIndexTable::new(lags, gcc.k()), &fft)
}

pub fn td_srp_with(gcc: &GccPhatSpectrum, table: &LagIndexTable, fft: &RealFft) -> Result<SrpFrame> {
    check_pairs(gcc, table.n_pairs)?;
    if table.k != gcc.k() {
        return Err(Error::Dimension("lag index table built for another K".into()));
    }
    let q_len = table.res_elevation * table.res_azimuth;
    let correlations = td_gcc(gcc, fft)?;
    let mut power = vec![0.0; q_len];
    for (p, corr) in correlations.iter().enumerate() {
        let idx = &table.indices[p * q_len..(p + 1) * q_len];
        for (acc, &i) in power.iter_mut().zip(idx) {
            *acc += 2.0 * corr[i];
        }
    }
    SrpFrame::new(0, table.res_elevation, table.res_azimuth, power)
}

/// `cos(2πi/K)` and `sin(2πi/K)` for `i ∈ [0, K)`.
#[derive(Clone, Debug)]
struct TwiddleTable {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TwiddleTable {
    fn new(k: usize) -> Self {
        let (cos, sin) = (0..k)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / k as f64;
                (t.cos(), t.sin())
            })
            .unzip();
        Self { cos, sin }
    }
}

/// Two-sided interpolation coefficients `sinc(τ/T − n)`, `n ∈ [−N_samp, N_samp]`,
/// stored per pair, per candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct SincTable {
    bounds: SampleBounds,
    res_elevation: usize,
    res_azimuth: usize,
    offsets: Vec<usize>,
    coeffs: Vec<f64>,
}

pub fn build_sinc_table(lags: &LagTable, bounds: &SampleBounds) -> Result<SincTable> {
    if bounds.n_pairs() != lags.n_pairs() {
        return Err(Error::Dimension("bounds and lag table disagree on pair count".into()));
    }
    let q_len = lags.n_candidates();
    let mut offsets = Vec::with_capacity(bounds.n_pairs() + 1);
    let mut coeffs = Vec::with_capacity(bounds.total_indices() * q_len);
    offsets.push(0);
    for (p, &n_max) in bounds.per_pair.iter().enumerate() {
        let n_max = n_max as i64;
        for &x in lags.pair(p) {
            coeffs.extend((-n_max..=n_max).map(|n| sinc(x - n as f64)));
        }
        offsets.push(coeffs.len());
    }
    Ok(SincTable {
        bounds: bounds.clone(),
        res_elevation: lags.res_elevation(),
        res_azimuth: lags.res_azimuth(),
        offsets,
        coeffs,
    })
}

impl SincTable {
    pub fn coefficient_count(&self) -> usize {
        self.coeffs.len()
    }

    pub fn bounds(&self) -> &SampleBounds {
        &self.bounds
    }
}

/// Direct evaluation of the bin-weighted cross-correlation at integer lag `n`.
fn correlation_at<C: OpCounter>(spectrum: &[Complex64], tw: &TwiddleTable, k: usize, n: i64, ops: &mut C) -> f64 {
    let k_i = k as i64;
    let mut sum = 0.0;
    for (b, g) in spectrum.iter().enumerate() {
        let i = ((b as i64 * n).rem_euclid(k_i)) as usize;
        sum += 2.0 * bin_weight(b, k) * (g.re * tw.cos[i] - g.im * tw.sin[i]);
    }
    // one complex-by-twiddle real part (2 mul + 1 add) folded with the weight and accumulate
    ops.add(2 * spectrum.len() as u64 + 2);
    sum
}

pub fn lc_srp(gcc: &GccPhatSpectrum, table: &SincTable) -> Result<SrpFrame> {
    lc_srp_counted(gcc, table, &mut NoCount)
}

pub fn lc_srp_counted<C: OpCounter>(
    gcc: &GccPhatSpectrum,
    table: &SincTable,
    ops: &mut C,
) -> Result<SrpFrame> {
    check_pairs(gcc, table.bounds.n_pairs())?;
    let k = gcc.k();
    let tw = TwiddleTable::new(k);
    let q_len = table.res_elevation * table.res_azimuth;
    let mut power = vec![0.0; q_len];
    for (p, spectrum) in gcc.pairs().iter().enumerate() {
        let n_max = table.bounds.per_pair[p] as i64;
        let samples: Vec<f64> = (-n_max..=n_max)
            .map(|n| correlation_at(spectrum, &tw, k, n, ops))
            .collect();
        let width = samples.len();
        let coeffs = &table.coeffs[table.offsets[p]..table.offsets[p + 1]];
        for (acc, row) in power.iter_mut().zip(coeffs.chunks_exact(width)) {
            *acc += row.iter().zip(&samples).map(|(c, g)| c * g).sum::<f64>();
        }
        ops.add(2 * (width * q_len) as u64);
    }
    SrpFrame::new(0, table.res_elevation, table.res_azimuth, power)
}

/// One-sided paired interpolation coefficients.
///
/// For `n ≥ 1` the lags `+n` and `−n` are merged: with
/// `A(n) = Σ_k 2w_k·Re G(k)·cos(2πkn/K)` and `B(n) = Σ_k 2w_k·Im G(k)·sin(2πkn/K)`,
/// the pair of sinc terms collapses to `w_re·A(n) + w_im·B(n)` where
/// `w_re = W·τ/T`, `w_im = −W·n` and
/// `W = 2(−1)^n·sin(πτ/T) / (π(τ/T − n)(τ/T + n))`.
/// The `n = 0` row keeps `sinc(τ/T)` on the real branch and nothing on the imaginary one.
#[derive(Clone, Debug, PartialEq)]
pub struct SincTableEdge {
    bounds: SampleBounds,
    res_elevation: usize,
    res_azimuth: usize,
    offsets: Vec<usize>,
    coeffs: Vec<[f64; 2]>,
}

/// Below this distance from `±n` the factored weight is replaced by the sinc pair it came from.
const SINGULARITY_GUARD: f64 = 1e-8;

/// `(w_re, w_im)` for lag `x = τ/T` and one-sided index `n`.
pub fn edge_coefficients(x: f64, n: usize) -> [f64; 2] {
    if n == 0 {
        return [sinc(x), 0.0];
    }
    let nf = n as f64;
    if (x - nf).abs() < SINGULARITY_GUARD || (x + nf).abs() < SINGULARITY_GUARD {
        let lo = sinc(x - nf);
        let hi = sinc(x + nf);
        return [lo + hi, hi - lo];
    }
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let w = 2.0 * sign * sin_pi(x) / (PI * (x - nf) * (x + nf));
    [w * x, -w * nf]
}

pub fn build_sinc_table_edge(lags: &LagTable, bounds: &SampleBounds) -> Result<SincTableEdge> {
    if bounds.n_pairs() != lags.n_pairs() {
        return Err(Error::Dimension("bounds and lag table disagree on pair count".into()));
    }
    let q_len = lags.n_candidates();
    let mut offsets = Vec::with_capacity(bounds.n_pairs() + 1);
    let mut coeffs = Vec::with_capacity(bounds.one_sided_indices() * q_len);
    offsets.push(0);
    for (p, &n_max) in bounds.per_pair.iter().enumerate() {
        for &x in lags.pair(p) {
            coeffs.extend((0..=n_max).map(|n| edge_coefficients(x, n)));
        }
        offsets.push(coeffs.len());
    }
    Ok(SincTableEdge {
        bounds: bounds.clone(),
        res_elevation: lags.res_elevation(),
        res_azimuth: lags.res_azimuth(),
        offsets,
        coeffs,
    })
}

impl SincTableEdge {
    /// Number of stored `(w_re, w_im)` pairs, `Σ_pairs (N_samp + 1)·Q`.
    pub fn coefficient_count(&self) -> usize {
        self.coeffs.len()
    }

    pub fn bounds(&self) -> &SampleBounds {
        &self.bounds
    }

    pub fn n_candidates(&self) -> usize {
        self.res_elevation * self.res_azimuth
    }

    /// Coefficients of pair `p`, candidate `q`, indices `0..=N_samp`.
    pub fn entry(&self, p: usize, q: usize) -> &[[f64; 2]] {
        let width = self.bounds.per_pair[p] + 1;
        let start = self.offsets[p] + q * width;
        &self.coeffs[start..start + width]
    }
}

pub fn lc_srp_edge(gcc: &GccPhatSpectrum, table: &SincTableEdge) -> Result<SrpFrame> {
    lc_srp_edge_counted(gcc, table, &mut NoCount)
}

pub fn lc_srp_edge_counted<C: OpCounter>(
    gcc: &GccPhatSpectrum,
    table: &SincTableEdge,
    ops: &mut C,
) -> Result<SrpFrame> {
    check_pairs(gcc, table.bounds.n_pairs())?;
    let k = gcc.k();
    let tw = TwiddleTable::new(k);
    let bins = gcc.n_bins() as u64;
    let q_len = table.n_candidates();
    let mut power = vec![0.0; q_len];
    let mut re_sum = Vec::new();
    let mut im_sum = Vec::new();
    for (p, spectrum) in gcc.pairs().iter().enumerate() {
        let n_max = table.bounds.per_pair[p];
        re_sum.clear();
        im_sum.clear();

        // n = 0: cos = 1, sin = 0, so only a weighted sum of real parts remains.
        let mut a0 = 0.0;
        for (b, g) in spectrum.iter().enumerate() {
            a0 += 2.0 * bin_weight(b, k) * g.re;
        }
        ops.add(bins);
        re_sum.push(a0);
        im_sum.push(0.0);

        for n in 1..=n_max {
            let mut a = 0.0;
            let mut bsum = 0.0;
            for (b, g) in spectrum.iter().enumerate() {
                let i = (b * n) % k;
                let w = 2.0 * bin_weight(b, k);
                a += w * g.re * tw.cos[i];
                bsum += w * g.im * tw.sin[i];
            }
            ops.add(4 * bins);
            re_sum.push(a);
            im_sum.push(bsum);
        }

        let width = n_max + 1;
        let coeffs = &table.coeffs[table.offsets[p]..table.offsets[p + 1]];
        for (acc, row) in power.iter_mut().zip(coeffs.chunks_exact(width)) {
            let mut s = row[0][0] * re_sum[0];
            for n in 1..width {
                s += row[n][0] * re_sum[n] + row[n][1] * im_sum[n];
            }
            *acc += s;
        }
        ops.add(q_len as u64 * (2 + 4 * n_max as u64));
    }
    SrpFrame::new(0, table.res_elevation, table.res_azimuth, power)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SrpMethod {
    Fd,
    Td,
    Lc,
    LcEdge,
}

impl SrpMethod {
    pub const ALL: [SrpMethod; 4] = [Self::Fd, Self::Td, Self::Lc, Self::LcEdge];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fd => "fd",
            Self::Td => "td",
            Self::Lc => "lc",
            Self::LcEdge => "lc-edge",
        }
    }
}

impl fmt::Display for SrpMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SrpMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "fd" => Ok(Self::Fd),
            "td" => Ok(Self::Td),
            "lc" => Ok(Self::Lc),
            "lc-edge" | "edge" => Ok(Self::LcEdge),
            other => Err(Error::invalid(format!(
                "unknown SRP method `{other}` (expected fd, td, lc or lc-edge)"
            ))),
        }
    }
}

enum Prepared {
    Fd,
    Td(LagIndexTable),
    Lc(SincTable),
    LcEdge(SincTableEdge),
}

/// Precomputed state for one (array, grid, fs, K, method) configuration.
pub struct SrpProcessor {
    method: SrpMethod,
    array: MicArray,
    frame_spec: FrameSpec,
    fs: u32,
    fft: RealFft,
    lags: LagTable,
    bounds: SampleBounds,
    prepared: Prepared,
    eps: f64,
}

impl SrpProcessor {
    pub fn new(
        method: SrpMethod,
        array: &MicArray,
        grid: &CandidateGrid,
        fs: u32,
        frame_spec: FrameSpec,
    ) -> Result<Self> {
        frame_spec.validate()?;
        if fs == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        let fft = RealFft::new(frame_spec.window_len)?;
        let lags = TdoaTable::new(array, grid).lags(fs);
        let bounds = n_samp(array, fs);
        let prepared = match method {
            SrpMethod::Fd => Prepared::Fd,
            SrpMethod::Td => Prepared::Td(LagIndexTable::new(&lags, frame_spec.window_len)),
            SrpMethod::Lc => Prepared::Lc(build_sinc_table(&lags, &bounds)?),
            SrpMethod::LcEdge => Prepared::LcEdge(build_sinc_table_edge(&lags, &bounds)?),
        };
        Ok(Self {
            method,
            array: array.clone(),
            frame_spec,
            fs,
            fft,
            lags,
            bounds,
            prepared,
            eps: DEFAULT_PHAT_EPSILON,
        })
    }

    pub fn method(&self) -> SrpMethod {
        self.method
    }

    pub fn bounds(&self) -> &SampleBounds {
        &self.bounds
    }

    pub fn lags(&self) -> &LagTable {
        &self.lags
    }

    pub fn frame_spec(&self) -> &FrameSpec {
        &self.frame_spec
    }

    pub fn map_gcc(&self, gcc: &GccPhatSpectrum) -> Result<SrpFrame> {
        match &self.prepared {
            Prepared::Fd => fd_srp(gcc, &self.lags),
            Prepared::Td(t) => td_srp_with(gcc, t, &self.fft),
            Prepared::Lc(t) => lc_srp(gcc, t),
            Prepared::LcEdge(t) => lc_srp_edge(gcc, t),
        }
    }

    pub fn process_frame(&self, frame: &SpectralFrame) -> Result<SrpFrame> {
        let gcc = gcc_phat(frame, &self.array, self.eps)?;
        let mut out = self.map_gcc(&gcc)?;
        out.frame_index = frame.frame_index;
        Ok(out)
    }

    /// SRP map of every full frame of `clip`, in frame order.
    pub fn run(&self, clip: &AudioClip) -> Result<Vec<SrpFrame>> {
        if clip.sample_rate_hz() != self.fs {
            return Err(Error::invalid(format!(
                "clip sampled at {} Hz, processor configured for {} Hz",
                clip.sample_rate_hz(),
                self.fs
            )));
        }
        if clip.channel_count() != self.array.len() {
            return Err(Error::Dimension(format!(
                "clip has {} channels, array has {} microphones",
                clip.channel_count(),
                self.array.len()
            )));
        }
        let frames = frame_and_window(clip, &self.frame_spec)?;
        frames
            .par_iter()
            .map(|w| self.process_frame(&SpectralFrame::from_windowed(w, &self.fft)?))
            .collect()
    }
}

pub fn srp_sequence(
    clip: &AudioClip,
    method: SrpMethod,
    array: &MicArray,
    grid: &CandidateGrid,
    frame_spec: FrameSpec,
) -> Result<Vec<SrpFrame>> {
    SrpProcessor::new(method, array, grid, clip.sample_rate_hz(), frame_spec)?.run(clip)
}
