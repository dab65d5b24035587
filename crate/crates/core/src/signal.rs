//! Audio ingestion, framing and the real FFT contract used by every SRP variant.
//!
//! All computation here is `f64`. Frames that would run past the end of a clip
//! are dropped rather than zero-padded, so the frame count of a clip is
//! `floor((len - K) / hop) + 1`.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Multichannel audio, one `Vec` per channel, amplitudes nominally in ±1.0.
#[derive(Clone, PartialEq)]
pub struct AudioClip {
    channels: Vec<Vec<f64>>,
    sample_rate_hz: u32,
}

impl fmt::Debug for AudioClip {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AudioClip")
            .field("channel_count", &self.channel_count())
            .field("len", &self.len())
            .field("sample_rate_hz", &self.sample_rate_hz)
            .finish()
    }
}

impl AudioClip {
    pub fn new(channels: Vec<Vec<f64>>, sample_rate_hz: u32) -> Result<Self> {
        if channels.len() < 2 {
            return Err(Error::format(format!(
                "needs ≥2 channels, got {}",
                channels.len()
            )));
        }
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::invalid("all channels must have equal length"));
        }
        if sample_rate_hz == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        Ok(Self {
            channels,
            sample_rate_hz,
        })
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        &self.channels[index]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    /// Mean power over every sample of every channel.
    pub fn power(&self) -> f64 {
        let n = (self.len() * self.channel_count()) as f64;
        if n == 0.0 {
            return 0.0;
        }
        self.channels
            .iter()
            .flat_map(|c| c.iter())
            .map(|x| x * x)
            .sum::<f64>()
            / n
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            channels: self
                .channels
                .iter()
                .map(|c| c.iter().map(|x| x * gain).collect())
                .collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Hann,
    Rect,
}

/// Window coefficients. Hann is the symmetric form `0.5 - 0.5·cos(2πn/(K-1))`.
pub fn window(kind: WindowKind, len: usize) -> Vec<f64> {
    match kind {
        WindowKind::Rect => vec![1.0; len],
        WindowKind::Hann if len == 1 => vec![1.0],
        WindowKind::Hann => {
            let denom = (len - 1) as f64;
            (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / denom).cos())
                .collect()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub window_len: usize,
    pub overlap_ratio: f64,
    pub window_kind: WindowKind,
}

impl FrameSpec {
    pub fn new(window_len: usize, overlap_ratio: f64, window_kind: WindowKind) -> Result<Self> {
        let spec = Self {
            window_len,
            overlap_ratio,
            window_kind,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The 4096-sample, 25 % overlap Hann framing used throughout.
    pub fn standard() -> Self {
        Self {
            window_len: 4096,
            overlap_ratio: 0.25,
            window_kind: WindowKind::Hann,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.window_len.is_power_of_two() || self.window_len < 2 {
            return Err(Error::invalid(format!(
                "window length {} is not a power of two",
                self.window_len
            )));
        }
        if !(0.0..1.0).contains(&self.overlap_ratio) {
            return Err(Error::invalid(format!(
                "overlap ratio {} outside [0, 1)",
                self.overlap_ratio
            )));
        }
        let hop = self.window_len as f64 * (1.0 - self.overlap_ratio);
        if (hop - hop.round()).abs() > 1e-9 || hop.round() < 1.0 {
            return Err(Error::invalid(format!(
                "hop {hop} is not a positive integer"
            )));
        }
        Ok(())
    }

    pub fn hop(&self) -> usize {
        (self.window_len as f64 * (1.0 - self.overlap_ratio)).round() as usize
    }

    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.window_len {
            0
        } else {
            (len - self.window_len) / self.hop() + 1
        }
    }

    /// SRP frames per second, `fs / (K·(1 - overlap))`.
    pub fn frames_per_second(&self, sample_rate_hz: u32) -> f64 {
        f64::from(sample_rate_hz) / (self.window_len as f64 * (1.0 - self.overlap_ratio))
    }
}

/// One windowed slice of every channel.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowedFrame {
    pub index: usize,
    pub channels: Vec<Vec<f64>>,
}

pub fn frame_and_window(clip: &AudioClip, spec: &FrameSpec) -> Result<Vec<WindowedFrame>> {
    spec.validate()?;
    let count = spec.frame_count(clip.len());
    if count == 0 {
        return Err(Error::Empty(format!(
            "clip of {} samples is shorter than the {}-sample window",
            clip.len(),
            spec.window_len
        )));
    }
    let win = window(spec.window_kind, spec.window_len);
    let hop = spec.hop();
    Ok((0..count)
        .map(|t| {
            let start = t * hop;
            let channels = clip
                .channels()
                .iter()
                .map(|c| {
                    c[start..start + spec.window_len]
                        .iter()
                        .zip(&win)
                        .map(|(x, w)| x * w)
                        .collect()
                })
                .collect();
            WindowedFrame { index: t, channels }
        })
        .collect())
}

/// Per-channel one-sided spectra (`K/2 + 1` bins) of one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralFrame {
    pub frame_index: usize,
    pub k: usize,
    pub bins: Vec<Vec<Complex64>>,
}

impl SpectralFrame {
    pub fn channel_count(&self) -> usize {
        self.bins.len()
    }

    pub fn from_windowed(frame: &WindowedFrame, fft: &RealFft) -> Result<Self> {
        let bins = frame
            .channels
            .iter()
            .map(|c| fft.forward(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            frame_index: frame.index,
            k: fft.len(),
            bins,
        })
    }
}

/// Planned forward/inverse real FFT of a fixed power-of-two length.
///
/// `inverse(forward(x)) == x`; the inverse carries the `1/K` normalization.
#[derive(Clone)]
pub struct RealFft {
    len: usize,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl fmt::Debug for RealFft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealFft").field("len", &self.len).finish()
    }
}

impl RealFft {
    pub fn new(len: usize) -> Result<Self> {
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::invalid(format!(
                "FFT length {len} is not a power of two"
            )));
        }
        Ok(Self::any_len(len))
    }

    /// Any even length; used internally for convolution buffers.
    pub(crate) fn any_len(len: usize) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bins(&self) -> usize {
        self.len / 2 + 1
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        if x.len() != self.len {
            return Err(Error::Dimension(format!(
                "rfft input has {} samples, plan expects {}",
                x.len(),
                self.len
            )));
        }
        let mut input = x.to_vec();
        let mut out = self.forward.make_output_vec();
        self.forward
            .process(&mut input, &mut out)
            .map_err(|e| Error::invalid(e.to_string()))?;
        Ok(out)
    }

    /// Inverse transform; the imaginary parts of bin 0 and bin K/2 are ignored.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Result<Vec<f64>> {
        if spectrum.len() != self.bins() {
            return Err(Error::Dimension(format!(
                "irfft input has {} bins, plan expects {}",
                spectrum.len(),
                self.bins()
            )));
        }
        let mut input = spectrum.to_vec();
        input[0].im = 0.0;
        if let Some(last) = input.last_mut() {
            last.im = 0.0;
        }
        let mut out = self.inverse.make_output_vec();
        self.inverse
            .process(&mut input, &mut out)
            .map_err(|e| Error::invalid(e.to_string()))?;
        let scale = 1.0 / self.len as f64;
        out.iter_mut().for_each(|v| *v *= scale);
        Ok(out)
    }
}

pub fn rfft(x: &[f64]) -> Result<Vec<Complex64>> {
    RealFft::new(x.len())?.forward(x)
}

pub fn irfft(spectrum: &[Complex64], k: usize) -> Result<Vec<f64>> {
    RealFft::new(k)?.inverse(spectrum)
}

/// Reads a RIFF/WAVE file (PCM 16-bit or IEEE float 32-bit) with at least two channels.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    let channels = usize::from(spec.channels);
    if channels < 2 {
        return Err(Error::format(format!("needs ≥2 channels, got {channels}")));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<Result<_, _>>()?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()?,
        (fmt, bits) => {
            return Err(Error::format(format!(
                "unsupported codec: {fmt:?} {bits}-bit"
            )))
        }
    };
    AudioClip::new(deinterleave(&interleaved, channels), spec.sample_rate)
}

/// Reads a mono (or multichannel, first channel kept) dry source signal.
pub fn load_wav_mono(path: impl AsRef<Path>) -> Result<(Vec<f64>, u32)> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    let channels = usize::from(spec.channels);
    if channels == 0 {
        return Err(Error::format("zero channels"));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<Result<_, _>>()?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()?,
        (fmt, bits) => {
            return Err(Error::format(format!(
                "unsupported codec: {fmt:?} {bits}-bit"
            )))
        }
    };
    let first = interleaved.iter().step_by(channels).copied().collect();
    Ok((first, spec.sample_rate))
}

fn deinterleave(samples: &[f64], channels: usize) -> Vec<Vec<f64>> {
    let frames = samples.len() / channels;
    let mut out = vec![Vec::with_capacity(frames); channels];
    for frame in samples.chunks_exact(channels) {
        for (c, v) in frame.iter().enumerate() {
            out[c].push(*v);
        }
    }
    out
}

/// Writes a 32-bit float WAV.
pub fn write_wav(path: impl AsRef<Path>, clip: &AudioClip) -> Result<()> {
    let spec = hound::WavSpec {
        channels: clip.channel_count() as u16,
        sample_rate: clip.sample_rate_hz(),
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for i in 0..clip.len() {
        for c in clip.channels() {
            writer.write_sample(c[i] as f32)?;
        }
    }
    writer.finalize()?;
    Ok(())
}

/// Writes a 16-bit PCM WAV of arbitrary channel count (samples clipped to ±1).
pub fn write_wav_pcm16(path: impl AsRef<Path>, channels: &[Vec<f64>], fs: u32) -> Result<()> {
    let spec = hound::WavSpec {
        channels: channels.len() as u16,
        sample_rate: fs,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let len = channels.first().map_or(0, Vec::len);
    let mut writer = hound::WavWriter::create(path, spec)?;
    for i in 0..len {
        for c in channels {
            let v = (c[i] * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
            writer.write_sample(v)?;
        }
    }
    writer.finalize()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn clip_of(len: usize, value: f64) -> AudioClip {
        AudioClip::new(vec![vec![value; len]; 2], 16000).unwrap()
    }

    #[test]
    fn frame_count_with_quarter_overlap() {
        let spec = FrameSpec::standard();
        assert_eq!(spec.hop(), 3072);
        let frames = frame_and_window(&clip_of(8192, 0.5), &spec).unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(spec.frame_count(160_000), 51);
    }

    #[test]
    fn rect_window_is_identity() {
        let spec = FrameSpec::new(8, 0.5, WindowKind::Rect).unwrap();
        let frames = frame_and_window(&clip_of(32, 1.0), &spec).unwrap();
        assert!(frames
            .iter()
            .flat_map(|f| f.channels.iter().flatten())
            .all(|&v| v == 1.0));
    }

    #[test]
    fn hann_starts_at_zero() {
        let spec = FrameSpec::new(16, 0.0, WindowKind::Hann).unwrap();
        let frames = frame_and_window(&clip_of(16, 1.0), &spec).unwrap();
        assert_eq!(frames[0].channels[0][0], 0.0);
        let w = window(WindowKind::Hann, 16);
        assert!((w[15]).abs() < 1e-15);
    }

    #[test]
    fn frame_start_follows_hop() {
        let ramp: Vec<f64> = (0..100).map(f64::from).collect();
        let clip = AudioClip::new(vec![ramp.clone(), ramp], 8000).unwrap();
        let spec = FrameSpec::new(16, 0.25, WindowKind::Rect).unwrap();
        let frames = frame_and_window(&clip, &spec).unwrap();
        assert_eq!(frames.len(), (100 - 16) / 12 + 1);
        for f in &frames {
            assert_eq!(f.channels[1][0], (f.index * 12) as f64);
        }
    }

    #[test]
    fn short_clip_is_an_error() {
        let err = frame_and_window(&clip_of(100, 1.0), &FrameSpec::standard());
        assert!(matches!(err, Err(Error::Empty(_))));
    }

    #[test]
    fn bad_frame_specs() {
        assert!(FrameSpec::new(100, 0.25, WindowKind::Hann).is_err());
        assert!(FrameSpec::new(8, 1.0, WindowKind::Hann).is_err());
        assert!(FrameSpec::new(8, 0.3, WindowKind::Hann).is_err());
    }

    #[test]
    fn impulse_and_dc_spectra() {
        let mut x = vec![0.0; 8];
        x[0] = 1.0;
        let s = rfft(&x).unwrap();
        assert_eq!(s.len(), 5);
        assert!(s.iter().all(|c| (c - Complex64::new(1.0, 0.0)).norm() < 1e-15));

        let s = rfft(&[1.0; 8]).unwrap();
        assert!((s[0] - Complex64::new(8.0, 0.0)).norm() < 1e-12);
        assert!(s[1..].iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn non_power_of_two_rejected() {
        assert!(rfft(&[0.0; 12]).is_err());
        assert!(irfft(&[Complex64::default(); 7], 12).is_err());
    }

    #[test]
    fn frame_rate() {
        let fps = FrameSpec::standard().frames_per_second(16000);
        assert!((fps - 5.208).abs() < 1e-3);
    }

    #[test]
    fn mono_clip_rejected() {
        let err = AudioClip::new(vec![vec![0.0; 4]], 16000).unwrap_err();
        assert!(err.to_string().contains("needs ≥2 channels"));
    }

    #[test]
    fn wav_roundtrip_and_pcm_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let ch = vec![vec![32767.0 / 32768.0, 0.0, -1.0], vec![0.5, 0.25, 0.0]];
        write_wav_pcm16(&path, &ch, 16000).unwrap();
        let clip = load_wav(&path).unwrap();
        assert_eq!(clip.channel_count(), 2);
        assert_eq!(clip.sample_rate_hz(), 16000);
        assert!((clip.channel(0)[0] - 0.999_969_482_421_875).abs() < 1e-15);
        assert_eq!(clip.channel(0)[2], -1.0);
        assert_eq!(clip.channel(1)[1], 0.25);

        let mono = dir.path().join("mono.wav");
        write_wav_pcm16(&mono, &[vec![0.0; 4]], 16000).unwrap();
        assert!(load_wav(&mono)
            .unwrap_err()
            .to_string()
            .contains("needs ≥2 channels"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn roundtrip_and_parseval(seed in any::<u64>(), log_k in 3usize..=12) {
            use rand::{Rng, SeedableRng};
            let k = 1usize << log_k;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fft = RealFft::new(k).unwrap();
            let s = fft.forward(&x).unwrap();
            let y = fft.inverse(&s).unwrap();
            let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in x.iter().zip(&y) {
                prop_assert!((a - b).abs() <= 1e-9 * scale);
            }
            // one-sided Parseval: interior bins count twice
            let time: f64 = x.iter().map(|v| v * v).sum();
            let freq: f64 = s.iter().enumerate().map(|(i, c)| {
                let w = if i == 0 || i == k / 2 { 1.0 } else { 2.0 };
                w * c.norm_sqr()
            }).sum::<f64>() / k as f64;
            prop_assert!((time - freq).abs() <= 1e-9 * time);
        }

        #[test]
        fn hann_never_adds_energy(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
            let clip = AudioClip::new(vec![x.clone(), x.clone()], 8000).unwrap();
            let spec = FrameSpec::new(64, 0.0, WindowKind::Hann).unwrap();
            let f = &frame_and_window(&clip, &spec).unwrap()[0];
            let raw: f64 = x.iter().map(|v| v * v).sum();
            let win: f64 = f.channels[0].iter().map(|v| v * v).sum();
            prop_assert!(win <= raw);
        }
    }
}
