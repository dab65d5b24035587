//! Network input assembly: SRP map plus broadcast argmax coordinates, stacked over time.

use crate::srp::SrpFrame;
use crate::{Error, Result};

/// Dense `f32` tensor laid out as `[channel][time][elevation][azimuth]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTensor {
    channels: usize,
    time: usize,
    res_elevation: usize,
    res_azimuth: usize,
    data: Vec<f32>,
}

impl FeatureTensor {
    pub fn zeros(channels: usize, time: usize, res_elevation: usize, res_azimuth: usize) -> Self {
        Self {
            channels,
            time,
            res_elevation,
            res_azimuth,
            data: vec![0.0; channels * time * res_elevation * res_azimuth],
        }
    }

    pub fn from_vec(
        channels: usize,
        time: usize,
        res_elevation: usize,
        res_azimuth: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        if data.len() != channels * time * res_elevation * res_azimuth {
            return Err(Error::Dimension(format!(
                "{} values for shape ({channels}, {time}, {res_elevation}, {res_azimuth})",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            time,
            res_elevation,
            res_azimuth,
            data,
        })
    }

    /// `(channels, time, elevation, azimuth)`.
    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.channels, self.time, self.res_elevation, self.res_azimuth)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn res_elevation(&self) -> usize {
        self.res_elevation
    }

    pub fn res_azimuth(&self) -> usize {
        self.res_azimuth
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    fn offset(&self, c: usize, t: usize, e: usize, a: usize) -> usize {
        ((c * self.time + t) * self.res_elevation + e) * self.res_azimuth + a
    }

    pub fn get(&self, c: usize, t: usize, e: usize, a: usize) -> f32 {
        self.data[self.offset(c, t, e, a)]
    }

    pub fn set(&mut self, c: usize, t: usize, e: usize, a: usize, v: f32) {
        let i = self.offset(c, t, e, a);
        self.data[i] = v;
    }

    /// All channels at one time step, `[channel][elevation][azimuth]`.
    pub fn frame(&self, t: usize) -> Vec<f32> {
        let plane = self.res_elevation * self.res_azimuth;
        let mut out = Vec::with_capacity(self.channels * plane);
        for c in 0..self.channels {
            let start = self.offset(c, t, 0, 0);
            out.extend_from_slice(&self.data[start..start + plane]);
        }
        out
    }
}

pub const FEATURE_CHANNELS: usize = 3;

pub fn assemble(frames: &[SrpFrame]) -> Result<FeatureTensor> {
    let first = frames
        .first()
        .ok_or_else(|| Error::Empty("no SRP frames to assemble".into()))?;
    let (r1, r2) = (first.res_elevation(), first.res_azimuth());
    if let Some(bad) = frames
        .iter()
        .find(|f| f.res_elevation() != r1 || f.res_azimuth() != r2)
    {
        return Err(Error::Dimension(format!(
            "mixed grids: {r1}x{r2} and {}x{}",
            bad.res_elevation(),
            bad.res_azimuth()
        )));
    }
    let plane = r1 * r2;
    let time = frames.len();
    let mut tensor = FeatureTensor::zeros(FEATURE_CHANNELS, time, r1, r2);
    for (t, frame) in frames.iter().enumerate() {
        let (el, az) = frame.argmax_coords();
        let data = tensor.data_mut();
        let base = |c: usize| (c * time + t) * plane;
        for (dst, &p) in data[base(0)..base(0) + plane].iter_mut().zip(frame.power()) {
            *dst = p as f32;
        }
        data[base(1)..base(1) + plane].fill(el as f32);
        data[base(2)..base(2) + plane].fill(az as f32);
    }
    Ok(tensor)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame_with_peak(r1: usize, r2: usize, e: usize, a: usize) -> SrpFrame {
        let mut power = vec![0.1; r1 * r2];
        power[e * r2 + a] = 2.0;
        SrpFrame::new(0, r1, r2, power).unwrap()
    }

    #[test]
    fn coordinate_channels() {
        let t = assemble(&[frame_with_peak(8, 16, 3, 7)]).unwrap();
        assert_eq!(t.shape(), (3, 1, 8, 16));
        for e in 0..8 {
            for a in 0..16 {
                assert_eq!(t.get(1, 0, e, a), 0.4375);
                assert_eq!(t.get(2, 0, e, a), 0.46875);
            }
        }
        assert_eq!(t.get(0, 0, 3, 7), 2.0);
    }

    #[test]
    fn zero_maps_use_first_cell() {
        let zero = SrpFrame::new(0, 8, 16, vec![0.0; 128]).unwrap();
        let t = assemble(&[zero.clone(), zero]).unwrap();
        assert_eq!(t.time(), 2);
        assert!(t.frame(1)[..128].iter().all(|&v| v == 0.0));
        assert_eq!(t.get(1, 1, 5, 5), 0.0625);
        assert_eq!(t.get(2, 1, 5, 5), 0.03125);
    }

    #[test]
    fn rejects_empty_and_mixed() {
        assert!(matches!(assemble(&[]), Err(Error::Empty(_))));
        let mixed = [frame_with_peak(4, 8, 0, 0), frame_with_peak(8, 16, 0, 0)];
        assert!(matches!(assemble(&mixed), Err(Error::Dimension(_))));
    }

    #[test]
    fn time_permutation_moves_slices() {
        let frames = [
            frame_with_peak(4, 8, 1, 2),
            frame_with_peak(4, 8, 3, 0),
            frame_with_peak(4, 8, 0, 7),
        ];
        let a = assemble(&frames).unwrap();
        let reversed: Vec<SrpFrame> = frames.iter().rev().cloned().collect();
        let b = assemble(&reversed).unwrap();
        for t in 0..3 {
            assert_eq!(a.frame(t), b.frame(2 - t));
        }
    }
}
