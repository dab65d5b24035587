//! Synthetic scenes: far-field plane-wave delays, shoebox image-source RIRs,
//! piecewise-static source trajectories and SNR-controlled white noise.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geometry::{angles_from_direction, dot, norm, sub, MicArray, Vec3};
use crate::signal::{AudioClip, RealFft};
use crate::srp::sinc;
use crate::{Error, Result};

/// Length of the windowed-sinc fractional-delay kernel.
pub const FRACTIONAL_DELAY_TAPS: usize = 81;
pub const CROSSFADE_SECONDS: f64 = 0.010;
pub const MIN_SOURCE_DISTANCE: f64 = 1.0;
pub const POSITION_MARGIN: f64 = 0.1;
/// Corner of the high-pass applied to reverberant impulse responses.
pub const HIGH_PASS_HZ: f64 = 100.0;

fn fft_len_for(n: usize) -> usize {
    n.max(2).next_power_of_two()
}

/// Seeded zero-mean, unit-variance white Gaussian noise.
pub fn white_noise(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Delays `x` by `delay` samples (fractional, possibly negative) with a
/// frequency-domain phase ramp over a zero-padded buffer. Output keeps `x.len()`.
pub fn fractional_delay(x: &[f64], delay: f64) -> Vec<f64> {
    let pad = delay.abs().ceil() as usize + 64;
    let l = fft_len_for(x.len() + 2 * pad);
    let fft = RealFft::any_len(l);
    let mut buf = vec![0.0; l];
    buf[..x.len()].copy_from_slice(x);
    let mut spec = fft.forward(&buf).expect("planned length");
    for (k, v) in spec.iter_mut().enumerate() {
        let phase = -2.0 * PI * k as f64 * delay / l as f64;
        *v *= Complex64::from_polar(1.0, phase);
    }
    let n = spec.len() - 1;
    spec[n] = Complex64::new(spec[n].re, 0.0);
    let y = fft.inverse(&spec).expect("planned length");
    y[..x.len()].to_vec()
}

/// Plane wave arriving from unit `direction`: channel `m` is `dry` delayed by
/// `−⟨direction, p_m⟩ / c` seconds.
pub fn anechoic_far_field(direction: Vec3, dry: &[f64], fs: u32, array: &MicArray) -> Result<AudioClip> {
    if (norm(&direction) - 1.0).abs() > 1e-6 {
        return Err(Error::invalid("direction must be a unit vector"));
    }
    if dry.is_empty() {
        return Err(Error::Empty("dry signal is empty".into()));
    }
    let channels = array
        .positions()
        .iter()
        .map(|p| {
            let tau = -dot(&direction, p) / array.speed_of_sound();
            fractional_delay(dry, tau * f64::from(fs))
        })
        .collect();
    AudioClip::new(channels, fs)
}

/// Linear convolution via FFT, full length `x.len() + h.len() − 1`.
pub fn fft_convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let n = x.len() + h.len() - 1;
    let l = fft_len_for(n);
    let fft = RealFft::any_len(l);
    let mut a = vec![0.0; l];
    a[..x.len()].copy_from_slice(x);
    let mut b = vec![0.0; l];
    b[..h.len()].copy_from_slice(h);
    let fa = fft.forward(&a).expect("planned length");
    let fb = fft.forward(&b).expect("planned length");
    let prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(p, q)| p * q).collect();
    let mut y = fft.inverse(&prod).expect("planned length");
    y.truncate(n);
    y
}

/// Wall reflection model, uniform over the six surfaces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Absorption {
    /// Target reverberation time in seconds; β follows from Sabine's formula.
    T60(f64),
    /// Pressure reflection coefficient β ∈ [0, 1].
    Beta(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShoeboxRoom {
    pub dims: Vec3,
    pub beta: f64,
}

impl ShoeboxRoom {
    pub fn new(dims: Vec3, absorption: Absorption) -> Result<Self> {
        if dims.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::invalid("room dimensions must be positive"));
        }
        let beta = match absorption {
            Absorption::Beta(b) => {
                if !(0.0..=1.0).contains(&b) {
                    return Err(Error::invalid(format!("reflection coefficient {b} outside [0, 1]")));
                }
                b
            }
            Absorption::T60(t60) => sabine_beta(dims, t60)?,
        };
        Ok(Self { dims, beta })
    }

    pub fn volume(&self) -> f64 {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn surface(&self) -> f64 {
        let [x, y, z] = self.dims;
        2.0 * (x * y + x * z + y * z)
    }

    pub fn contains_with_margin(&self, p: &Vec3, margin: f64) -> bool {
        (0..3).all(|i| {
            let r = p[i] / self.dims[i];
            (margin..=1.0 - margin).contains(&r)
        })
    }
}

/// β = √(1 − α) with α = 0.161·V / (S·T60).
pub fn sabine_beta(dims: Vec3, t60: f64) -> Result<f64> {
    if t60 == 0.0 {
        return Ok(0.0);
    }
    if !(t60 > 0.0) {
        return Err(Error::invalid("T60 must be non-negative"));
    }
    let v = dims[0] * dims[1] * dims[2];
    let s = 2.0 * (dims[0] * dims[1] + dims[0] * dims[2] + dims[1] * dims[2]);
    let alpha = 0.161 * v / (s * t60);
    if alpha > 1.0 {
        return Err(Error::invalid(format!(
            "T60 {t60} s is too short for this room (absorption {alpha:.2} > 1)"
        )));
    }
    Ok((1.0 - alpha).sqrt())
}

/// Reflection order needed for the image sources to cover `seconds` of response.
pub fn order_for_duration(dims: Vec3, seconds: f64, c: f64) -> usize {
    let smallest = dims.iter().copied().fold(f64::INFINITY, f64::min);
    (c * seconds / smallest).ceil() as usize + 1
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rir {
    pub taps: Vec<f64>,
    pub fs: u32,
}

impl Rir {
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|x| x * x).sum()
    }

    /// Index of the direct-path peak: the largest tap within half a kernel
    /// after the first nonzero tap.
    pub fn direct_path_index(&self) -> Option<usize> {
        let first = self.taps.iter().position(|&x| x != 0.0)?;
        let end = (first + FRACTIONAL_DELAY_TAPS / 2 + 2).min(self.taps.len());
        (first..end).max_by(|&a, &b| self.taps[a].abs().total_cmp(&self.taps[b].abs()))
    }

    /// Reverberation time from Schroeder backward integration, fitted between
    /// −5 dB and −25 dB and extrapolated to 60 dB.
    pub fn schroeder_t60(&self) -> Option<f64> {
        let energy: Vec<f64> = self.taps.iter().map(|x| x * x).collect();
        schroeder_fit(&energy, f64::from(self.fs))
    }
}

/// Backward-integrated decay of per-bin energies sampled at `rate` Hz, fitted
/// between −5 dB and −25 dB and extrapolated to 60 dB.
fn schroeder_fit(energy: &[f64], rate: f64) -> Option<f64> {
    let mut edc = energy.to_vec();
    for i in (0..edc.len().saturating_sub(1)).rev() {
        edc[i] += edc[i + 1];
    }
    let total = *edc.first()?;
    if total <= 0.0 {
        return None;
    }
    let pts: Vec<(f64, f64)> = edc
        .iter()
        .enumerate()
        .map(|(i, e)| (i as f64 / rate, 10.0 * (e / total).log10()))
        .filter(|(_, d)| (-25.0..=-5.0).contains(d))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    let slope = sxy / sxx;
    (slope < 0.0).then(|| -60.0 / slope)
}

/// Calls `visit(reflections, distance)` for every image of `source` seen from
/// `mic` with at most `order` wall reflections.
fn for_each_image(dims: Vec3, source: Vec3, mic: Vec3, order: i64, mut visit: impl FnMut(i64, f64)) {
    let bound = (order + 1) / 2 + 1;
    for nx in -bound..=bound {
        for ny in -bound..=bound {
            for nz in -bound..=bound {
                for u in 0..2i64 {
                    for v in 0..2i64 {
                        for w in 0..2i64 {
                            let refl = (nx - u).abs() + nx.abs() + (ny - v).abs() + ny.abs()
                                + (nz - w).abs() + nz.abs();
                            if refl > order {
                                continue;
                            }
                            let image = [
                                (1 - 2 * u) as f64 * source[0] + 2.0 * nx as f64 * dims[0],
                                (1 - 2 * v) as f64 * source[1] + 2.0 * ny as f64 * dims[1],
                                (1 - 2 * w) as f64 * source[2] + 2.0 * nz as f64 * dims[2],
                            ];
                            visit(refl, norm(&sub(&image, &mic)));
                        }
                    }
                }
            }
        }
    }
}

/// Removes the DC build-up of a reflection lattice: a second-order high-pass
/// with its corner at `cutoff_hz`, run in place.
fn remove_lattice_dc(taps: &mut [f64], fs: f64, cutoff_hz: f64) {
    let w = 2.0 * PI * cutoff_hz / fs;
    let r = (-w).exp();
    let (b1, b2, a1) = (2.0 * r * w.cos(), -r * r, -(1.0 + r));
    let (mut y1, mut y2) = (0.0, 0.0);
    for x in taps.iter_mut() {
        let y0 = b1 * y1 + b2 * y2 + *x;
        *x = y0 + a1 * y1 + r * y2;
        y2 = y1;
        y1 = y0;
    }
}

fn add_fractional_tap(taps: &mut [f64], delay: f64, amp: f64) {
    let half = (FRACTIONAL_DELAY_TAPS / 2) as isize;
    let center = delay.round() as isize;
    for i in (center - half)..=(center + half) {
        if i < 0 || i as usize >= taps.len() {
            continue;
        }
        let t = i as f64 - delay;
        if t.abs() > half as f64 + 1.0 {
            continue;
        }
        let window = 0.5 + 0.5 * (PI * t / (half as f64 + 1.0)).cos();
        taps[i as usize] += amp * window * sinc(t);
    }
}

/// Image-source room impulse response between `source` and `mic`, up to
/// `max_order` total reflections.
pub fn ism_rir(
    room: &ShoeboxRoom,
    source: Vec3,
    mic: Vec3,
    max_order: i32,
    fs: u32,
    c: f64,
) -> Result<Rir> {
    if max_order < 0 {
        return Err(Error::invalid("reflection order must be non-negative"));
    }
    let order = max_order as i64;
    let fs_f = f64::from(fs);
    let max_dist = (2 * order + 1) as f64 * norm(&room.dims) + norm(&sub(&source, &mic));
    let len = (max_dist / c * fs_f).ceil() as usize + FRACTIONAL_DELAY_TAPS;
    let mut taps = vec![0.0; len];
    for_each_image(room.dims, source, mic, order, |refl, d| {
        let gain = if refl == 0 { 1.0 } else { room.beta.powi(refl as i32) };
        if gain != 0.0 {
            add_fractional_tap(&mut taps, d / c * fs_f, gain / (4.0 * PI * d));
        }
    });
    if order > 0 && room.beta > 0.0 {
        remove_lattice_dc(&mut taps, fs_f, HIGH_PASS_HZ);
    }
    while taps.len() > 1 && taps.last() == Some(&0.0) {
        taps.pop();
    }
    Ok(Rir { taps, fs })
}

/// Source position held from `start_s` until the next segment starts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_s: f64,
    pub position: Vec3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub room_dims: Vec3,
    pub absorption: Absorption,
    /// Segments sorted by start time; the first starts at 0.
    pub trajectory: Vec<Segment>,
    /// Array origin in room coordinates; microphone positions are offsets from it.
    pub array_center: Vec3,
    /// `None` leaves the clip noise-free.
    pub snr_db: Option<f64>,
    pub seed: u64,
    /// Image-source order; `None` picks one covering the reverberation tail.
    pub max_order: Option<i32>,
}

impl Scene {
    pub fn validate(&self) -> Result<ShoeboxRoom> {
        let room = ShoeboxRoom::new(self.room_dims, self.absorption)?;
        if self.trajectory.is_empty() {
            return Err(Error::invalid("scene needs at least one source segment"));
        }
        if self.trajectory[0].start_s != 0.0 {
            return Err(Error::invalid("first trajectory segment must start at 0 s"));
        }
        if self.trajectory.windows(2).any(|w| w[1].start_s <= w[0].start_s) {
            return Err(Error::invalid("trajectory segments must have increasing start times"));
        }
        if !room.contains_with_margin(&self.array_center, POSITION_MARGIN) {
            return Err(Error::invalid("array lies outside the room margin"));
        }
        for seg in &self.trajectory {
            if !room.contains_with_margin(&seg.position, POSITION_MARGIN) {
                return Err(Error::invalid(format!(
                    "source {:?} lies outside the room margin",
                    seg.position
                )));
            }
            let d = norm(&sub(&seg.position, &self.array_center));
            if d < MIN_SOURCE_DISTANCE {
                return Err(Error::invalid(format!(
                    "source {:?} is {d:.2} m from the array (minimum {MIN_SOURCE_DISTANCE} m)",
                    seg.position
                )));
            }
        }
        Ok(room)
    }

    pub fn segment_at(&self, time_s: f64) -> &Segment {
        self.trajectory
            .iter()
            .rev()
            .find(|s| s.start_s <= time_s)
            .unwrap_or(&self.trajectory[0])
    }

    /// Unit direction from the array center to the source at `time_s`.
    pub fn doa_at(&self, time_s: f64) -> Vec3 {
        let d = sub(&self.segment_at(time_s).position, &self.array_center);
        let n = norm(&d);
        [d[0] / n, d[1] / n, d[2] / n]
    }

    /// Ground truth `(elevation_deg, azimuth_deg)` at `time_s`.
    pub fn doa_angles_deg(&self, time_s: f64) -> (f64, f64) {
        let (el, az) = angles_from_direction(&self.doa_at(time_s));
        (el.to_degrees(), az.to_degrees())
    }
}

/// Renders `dry` through the scene: per-segment ISM convolution with
/// 10 ms crossfades between segments, then optional white noise.
pub fn simulate(scene: &Scene, array: &MicArray, dry: &[f64], fs: u32) -> Result<AudioClip> {
    let room = scene.validate()?;
    if dry.is_empty() {
        return Err(Error::Empty("dry signal is empty".into()));
    }
    let c = array.speed_of_sound();
    let max_order = match (scene.max_order, scene.absorption) {
        (Some(o), _) => o,
        (None, Absorption::T60(t)) => order_for_duration(room.dims, t, c) as i32,
        (None, Absorption::Beta(b)) if b == 0.0 => 0,
        (None, Absorption::Beta(_)) => order_for_duration(room.dims, 0.3, c) as i32,
    };
    for p in array.positions() {
        let mic = [
            scene.array_center[0] + p[0],
            scene.array_center[1] + p[1],
            scene.array_center[2] + p[2],
        ];
        if !room.contains_with_margin(&mic, 0.0) {
            return Err(Error::invalid("a microphone lies outside the room"));
        }
    }
    let n = dry.len();
    let fade = (CROSSFADE_SECONDS * f64::from(fs)).round() as usize;
    let starts: Vec<usize> = scene
        .trajectory
        .iter()
        .map(|s| ((s.start_s * f64::from(fs)).round() as usize).min(n))
        .collect();
    let mut channels = vec![vec![0.0; n]; array.len()];
    for (i, seg) in scene.trajectory.iter().enumerate() {
        let begin = starts[i];
        let end = starts.get(i + 1).copied().unwrap_or(n);
        if begin >= n {
            break;
        }
        // segment weight: ramps up over `fade` before `begin`, down over `fade` before `end`
        let weight = |t: usize| -> f64 {
            let up = if i == 0 {
                1.0
            } else {
                ((t as f64 - begin as f64 + fade as f64) / fade.max(1) as f64).clamp(0.0, 1.0)
            };
            let down = if i + 1 == scene.trajectory.len() {
                1.0
            } else {
                ((end as f64 - t as f64) / fade.max(1) as f64).clamp(0.0, 1.0)
            };
            up.min(down)
        };
        let lo = begin.saturating_sub(fade);
        for (m, p) in array.positions().iter().enumerate() {
            let mic = [
                scene.array_center[0] + p[0],
                scene.array_center[1] + p[1],
                scene.array_center[2] + p[2],
            ];
            let rir = ism_rir(&room, seg.position, mic, max_order, fs, c)?;
            let wet = fft_convolve(dry, &rir.taps);
            for t in lo..end.min(n) {
                channels[m][t] += weight(t) * wet[t];
            }
        }
    }
    let clip = AudioClip::new(channels, fs)?;
    match scene.snr_db {
        Some(snr) => mix_at_snr(&clip, snr, scene.seed),
        None => Ok(clip),
    }
}

/// Adds seeded white Gaussian noise so the clip-level SNR equals `snr_db`.
/// `f64::INFINITY` returns the input unchanged.
pub fn mix_at_snr(clip: &AudioClip, snr_db: f64, seed: u64) -> Result<AudioClip> {
    if snr_db == f64::INFINITY {
        return Ok(clip.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::invalid("SNR must be finite or +inf"));
    }
    let signal_power = clip.power();
    if !(signal_power > 0.0) {
        return Err(Error::invalid("cannot set an SNR for a zero-power signal"));
    }
    let target = signal_power / 10f64.powf(snr_db / 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channels = clip
        .channels()
        .iter()
        .map(|ch| {
            let noise: Vec<f64> = (0..ch.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let p = noise.iter().map(|x| x * x).sum::<f64>() / noise.len() as f64;
            let g = (target / p).sqrt();
            ch.iter().zip(&noise).map(|(s, w)| s + g * w).collect()
        })
        .collect();
    AudioClip::new(channels, clip.sample_rate_hz())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn far_field_integer_delay() {
        let array = MicArray::new(vec![[0.343, 0.0, 0.0], [0.0, 0.0, 0.0]], 343.0).unwrap();
        let dry = white_noise(512, 1);
        let clip = anechoic_far_field([1.0, 0.0, 0.0], &dry, 16000, &array).unwrap();
        // mic 0 hears the wave 16 samples earlier than mic 1
        for t in 40..400 {
            assert!((clip.channel(0)[t] - clip.channel(1)[t + 16]).abs() < 1e-9);
            assert!((clip.channel(1)[t] - dry[t]).abs() < 1e-9);
        }
    }

    #[test]
    fn far_field_orthogonal_direction() {
        let array = MicArray::new(vec![[0.1, 0.0, 0.0], [-0.1, 0.0, 0.0], [0.0, 0.1, 0.0]], 343.0).unwrap();
        let dry = white_noise(256, 2);
        let clip = anechoic_far_field([0.0, 0.0, 1.0], &dry, 16000, &array).unwrap();
        for m in 1..3 {
            for (a, b) in clip.channel(0).iter().zip(clip.channel(m)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let x = [1.0, 2.0, -1.0, 0.5];
        let h = [0.5, 0.0, 3.0];
        let y = fft_convolve(&x, &h);
        let mut direct = vec![0.0; 6];
        for (i, a) in x.iter().enumerate() {
            for (j, b) in h.iter().enumerate() {
                direct[i + j] += a * b;
            }
        }
        for (a, b) in y.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn anechoic_rir_is_one_tap() {
        let room = ShoeboxRoom::new([6.0, 5.0, 3.0], Absorption::Beta(0.0)).unwrap();
        let src = [4.0, 3.0, 1.5];
        let mic = [1.0, 1.0, 1.5];
        let d = norm(&sub(&src, &mic));
        let rir = ism_rir(&room, src, mic, 3, 16000, 343.0).unwrap();
        let expect = (d / 343.0 * 16000.0).round() as usize;
        assert!(rir.direct_path_index().unwrap().abs_diff(expect) <= 1);
        // on-grid delay puts the whole 1/(4πd) amplitude on one tap
        let src2 = [1.0 + 3.43, 1.0, 1.5];
        let rir2 = ism_rir(&room, src2, mic, 0, 16000, 343.0).unwrap();
        assert_relative_eq!(rir2.taps[160], 1.0 / (4.0 * PI * 3.43), epsilon = 1e-12);
        let peak = rir2.taps[160];
        assert_eq!(rir2.taps.iter().filter(|&&v| v.abs() > 1e-9 * peak).count(), 1);
        assert!(ism_rir(&room, src, mic, -1, 16000, 343.0).is_err());
    }

    #[test]
    fn direct_path_scales_with_room() {
        let a = ShoeboxRoom::new([5.0, 4.0, 3.0], Absorption::Beta(0.0)).unwrap();
        let b = ShoeboxRoom::new([10.0, 8.0, 6.0], Absorption::Beta(0.0)).unwrap();
        let ra = ism_rir(&a, [4.0, 3.0, 2.0], [1.0, 1.0, 1.0], 0, 16000, 343.0).unwrap();
        let rb = ism_rir(&b, [8.0, 6.0, 4.0], [2.0, 2.0, 2.0], 0, 16000, 343.0).unwrap();
        let da = ra.direct_path_index().unwrap() as f64;
        let db = rb.direct_path_index().unwrap() as f64;
        assert!((db - 2.0 * da).abs() <= 2.0);
    }

    #[test]
    fn sabine_beta_values() {
        assert_eq!(sabine_beta([5.0, 4.0, 3.0], 0.0).unwrap(), 0.0);
        let b = sabine_beta([6.0, 4.0, 3.0], 0.5).unwrap();
        let alpha: f64 = 0.161 * 72.0 / (108.0 * 0.5);
        assert_relative_eq!(b, (1.0 - alpha).sqrt(), epsilon = 1e-12);
        assert!(sabine_beta([6.0, 4.0, 3.0], 0.01).is_err());
    }

    #[test]
    fn snr_mixing() {
        let array = MicArray::default_12();
        let clip = anechoic_far_field([0.0, 1.0, 0.0], &white_noise(4000, 3), 16000, &array).unwrap();
        assert_eq!(mix_at_snr(&clip, f64::INFINITY, 1).unwrap(), clip);
        let noisy = mix_at_snr(&clip, 0.0, 7).unwrap();
        let noise_power = noisy
            .channels()
            .iter()
            .zip(clip.channels())
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)))
            .sum::<f64>()
            / (clip.len() * clip.channel_count()) as f64;
        assert!((noise_power / clip.power() - 1.0).abs() < 0.02);
        assert_eq!(noisy, mix_at_snr(&clip, 0.0, 7).unwrap());
        let silent = AudioClip::new(vec![vec![0.0; 10]; 2], 16000).unwrap();
        assert!(mix_at_snr(&silent, 10.0, 1).is_err());
    }

    #[test]
    fn scene_validation() {
        let mut scene = Scene {
            room_dims: [6.0, 5.0, 3.0],
            absorption: Absorption::T60(0.3),
            trajectory: vec![Segment { start_s: 0.0, position: [4.5, 3.5, 1.5] }],
            array_center: [2.0, 2.0, 1.5],
            snr_db: None,
            seed: 0,
            max_order: Some(2),
        };
        assert!(scene.validate().is_ok());
        scene.trajectory[0].position = [2.5, 2.0, 1.5];
        assert!(scene.validate().is_err());
        scene.trajectory[0].position = [5.9, 3.0, 1.5];
        assert!(scene.validate().is_err());
    }
}
