//! Localization scoring: great-circle angular error, RMSAE, MAE and the
//! RMSAE-to-grid-spacing ratio, with optional voice-activity masking.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::geometry::{angles_from_direction, direction_from_angles, norm, CandidateGrid, Vec3};
use crate::{Error, Result};

const UNIT_TOLERANCE: f64 = 1e-9;

fn check_unit(v: &Vec3) -> Result<()> {
    if (norm(v) - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::invalid(format!("{v:?} is not a unit vector")));
    }
    Ok(())
}

/// Great-circle angle between two unit vectors, in degrees.
pub fn angular_error(u: &Vec3, v: &Vec3) -> Result<f64> {
    check_unit(u)?;
    check_unit(v)?;
    let d = (u[0] * v[0] + u[1] * v[1] + u[2] * v[2]).clamp(-1.0, 1.0);
    Ok(d.acos().to_degrees())
}

/// Ground-truth and estimated DOAs per frame, with an optional activity mask.
#[derive(Clone, Debug, PartialEq)]
pub struct DoaSeries {
    truth: Vec<Vec3>,
    estimate: Vec<Vec3>,
    vad: Option<Vec<bool>>,
}

impl DoaSeries {
    pub fn new(truth: Vec<Vec3>, estimate: Vec<Vec3>, vad: Option<Vec<bool>>) -> Result<Self> {
        if truth.len() != estimate.len() {
            return Err(Error::Dimension(format!(
                "{} truth frames vs {} estimates",
                truth.len(),
                estimate.len()
            )));
        }
        if let Some(mask) = &vad {
            if mask.len() != truth.len() {
                return Err(Error::Dimension(format!(
                    "VAD mask has {} frames, series has {}",
                    mask.len(),
                    truth.len()
                )));
            }
        }
        for v in truth.iter().chain(&estimate) {
            check_unit(v)?;
        }
        Ok(Self { truth, estimate, vad })
    }

    /// Builds a series from `(elevation_deg, azimuth_deg)` pairs.
    pub fn from_angles_deg(
        truth: &[(f64, f64)],
        estimate: &[(f64, f64)],
        vad: Option<Vec<bool>>,
    ) -> Result<Self> {
        let conv = |s: &[(f64, f64)]| -> Vec<Vec3> {
            s.iter()
                .map(|&(el, az)| direction_from_angles(el.to_radians(), az.to_radians()))
                .collect()
        };
        Self::new(conv(truth), conv(estimate), vad)
    }

    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }

    pub fn vad(&self) -> Option<&[bool]> {
        self.vad.as_deref()
    }

    fn active(&self, masked: bool) -> Result<Vec<usize>> {
        let idx: Vec<usize> = match (&self.vad, masked) {
            (Some(mask), true) => (0..self.len()).filter(|&i| mask[i]).collect(),
            (None, true) => return Err(Error::invalid("masked scoring needs a VAD mask")),
            (_, false) => (0..self.len()).collect(),
        };
        if idx.is_empty() {
            return Err(Error::Empty("no active frames to score".into()));
        }
        Ok(idx)
    }

    fn errors(&self, masked: bool) -> Result<Vec<f64>> {
        self.active(masked)?
            .into_iter()
            .map(|i| angular_error(&self.truth[i], &self.estimate[i]))
            .collect()
    }
}

/// Root-mean-square great-circle error in degrees.
pub fn rmsae(series: &DoaSeries, masked: bool) -> Result<f64> {
    let e = series.errors(masked)?;
    Ok((e.iter().map(|x| x * x).sum::<f64>() / e.len() as f64).sqrt())
}

/// Mean great-circle error in degrees.
pub fn mae(series: &DoaSeries, masked: bool) -> Result<f64> {
    let e = series.errors(masked)?;
    Ok(e.iter().sum::<f64>() / e.len() as f64)
}

/// RMS over independent elevation and wrapped azimuth differences, in degrees.
pub fn rmsae_per_axis(series: &DoaSeries, masked: bool) -> Result<f64> {
    let idx = series.active(masked)?;
    let sum: f64 = idx
        .iter()
        .map(|&i| {
            let (et, at) = angles_from_direction(&series.truth[i]);
            let (ee, ae) = angles_from_direction(&series.estimate[i]);
            let de = (et - ee).to_degrees();
            let da = ((at - ae).to_degrees() + 180.0).rem_euclid(360.0) - 180.0;
            de * de + da * da
        })
        .sum();
    Ok((sum / idx.len() as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridRatio {
    pub grid_spacing_deg: f64,
    pub ratio: f64,
    /// `false` when the error exceeds one grid step.
    pub resolves_adjacent_cells: bool,
}

/// RMSAE divided by the equatorial azimuth step `360 / Res2`.
pub fn srp_grid_ratio(rmsae_deg: f64, grid: &CandidateGrid) -> GridRatio {
    let spacing = grid.azimuth_step_deg();
    let ratio = rmsae_deg / spacing;
    GridRatio {
        grid_spacing_deg: spacing,
        ratio,
        resolves_adjacent_cells: ratio <= 1.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub frames: usize,
    pub scored_frames: usize,
    pub masked: bool,
    pub rmsae_deg: f64,
    pub mae_deg: f64,
    pub rmsae_per_axis_deg: f64,
    pub srp_grid: GridRatio,
}

pub fn score(series: &DoaSeries, grid: &CandidateGrid) -> Result<Metrics> {
    let masked = series.vad.is_some();
    let r = rmsae(series, masked)?;
    Ok(Metrics {
        frames: series.len(),
        scored_frames: series.active(masked)?.len(),
        masked,
        rmsae_deg: r,
        mae_deg: mae(series, masked)?,
        rmsae_per_axis_deg: rmsae_per_axis(series, masked)?,
        srp_grid: srp_grid_ratio(r, grid),
    })
}

/// One CSV row of a DOA track: `frame_index,elevation_deg,azimuth_deg`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoaRow {
    pub frame_index: usize,
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
}

pub fn read_doa_csv(reader: impl Read) -> Result<Vec<DoaRow>> {
    let mut rows: Vec<DoaRow> = csv::Reader::from_reader(reader)
        .deserialize()
        .collect::<std::result::Result<_, _>>()?;
    rows.sort_by_key(|r| r.frame_index);
    if rows.windows(2).any(|w| w[0].frame_index == w[1].frame_index) {
        return Err(Error::format("duplicate frame_index in DOA file"));
    }
    Ok(rows)
}

pub fn write_doa_csv(writer: impl Write, rows: &[DoaRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VadRow {
    pub frame_index: usize,
    pub active: u8,
}

/// Reads `frame_index,active` rows (active is 0 or 1) into a mask of `frames` entries.
/// Frames without a row are inactive.
pub fn read_vad_csv(reader: impl Read, frames: usize) -> Result<Vec<bool>> {
    let mut mask = vec![false; frames];
    for row in csv::Reader::from_reader(reader).deserialize::<VadRow>() {
        let row = row?;
        if row.frame_index >= frames {
            return Err(Error::format(format!(
                "VAD frame {} beyond the {frames}-frame series",
                row.frame_index
            )));
        }
        mask[row.frame_index] = row.active != 0;
    }
    Ok(mask)
}

/// Pairs truth and estimate rows by frame index (frames present in both).
pub fn align(truth: &[DoaRow], estimate: &[DoaRow]) -> (Vec<(f64, f64)>, Vec<(f64, f64)>, Vec<usize>) {
    let mut t_out = Vec::new();
    let mut e_out = Vec::new();
    let mut frames = Vec::new();
    for e in estimate {
        if let Ok(i) = truth.binary_search_by_key(&e.frame_index, |t| t.frame_index) {
            t_out.push((truth[i].elevation_deg, truth[i].azimuth_deg));
            e_out.push((e.elevation_deg, e.azimuth_deg));
            frames.push(e.frame_index);
        }
    }
    (t_out, e_out, frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn angular_error_examples() {
        let x = [1.0, 0.0, 0.0];
        assert_eq!(angular_error(&x, &x).unwrap(), 0.0);
        assert_relative_eq!(angular_error(&x, &[0.0, 1.0, 0.0]).unwrap(), 90.0, epsilon = 1e-12);
        assert_relative_eq!(angular_error(&x, &[-1.0, 0.0, 0.0]).unwrap(), 180.0, epsilon = 1e-12);
        assert!(angular_error(&x, &[2.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn rmsae_examples() {
        let s = DoaSeries::from_angles_deg(&[(0.0, 0.0); 3], &[(0.0, 10.0); 3], None).unwrap();
        assert_relative_eq!(rmsae(&s, false).unwrap(), 10.0, epsilon = 1e-9);
        let s = DoaSeries::from_angles_deg(
            &[(0.0, 0.0), (0.0, 0.0)],
            &[(0.0, 0.0), (0.0, 20.0)],
            Some(vec![true, false]),
        )
        .unwrap();
        assert_relative_eq!(rmsae(&s, false).unwrap(), 200f64.sqrt(), epsilon = 1e-9);
        assert_eq!(rmsae(&s, true).unwrap(), 0.0);
        let none = DoaSeries::from_angles_deg(&[(0.0, 0.0)], &[(0.0, 0.0)], Some(vec![false])).unwrap();
        assert!(matches!(rmsae(&none, true), Err(Error::Empty(_))));
    }

    #[test]
    fn grid_ratio_examples() {
        let g = CandidateGrid::new(8, 16).unwrap();
        assert_relative_eq!(srp_grid_ratio(22.5, &g).ratio, 1.0);
        assert!(srp_grid_ratio(22.5, &g).resolves_adjacent_cells);
        assert_eq!(srp_grid_ratio(0.0, &g).ratio, 0.0);
        assert_relative_eq!(srp_grid_ratio(45.0, &CandidateGrid::new(4, 8).unwrap()).ratio, 1.0);
        assert!(!srp_grid_ratio(30.0, &g).resolves_adjacent_cells);
    }

    #[test]
    fn csv_roundtrip() {
        let rows = vec![
            DoaRow { frame_index: 0, elevation_deg: 10.0, azimuth_deg: 45.0 },
            DoaRow { frame_index: 1, elevation_deg: -5.5, azimuth_deg: 300.25 },
        ];
        let mut buf = Vec::new();
        write_doa_csv(&mut buf, &rows).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("frame_index,elevation_deg,azimuth_deg"));
        assert_eq!(read_doa_csv(buf.as_slice()).unwrap(), rows);
        let mask = read_vad_csv("frame_index,active\n0,1\n2,0\n".as_bytes(), 3).unwrap();
        assert_eq!(mask, vec![true, false, false]);
        assert!(read_vad_csv("frame_index,active\n5,1\n".as_bytes(), 3).is_err());
    }

    fn unit(el: f64, az: f64) -> Vec3 {
        direction_from_angles(el, az)
    }

    fn rotate(v: &Vec3, yaw: f64, pitch: f64) -> Vec3 {
        let (cy, sy) = (yaw.cos(), yaw.sin());
        let a = [cy * v[0] - sy * v[1], sy * v[0] + cy * v[1], v[2]];
        let (cp, sp) = (pitch.cos(), pitch.sin());
        [cp * a[0] + sp * a[2], a[1], -sp * a[0] + cp * a[2]]
    }

    proptest! {
        #[test]
        fn rmsae_bounds_mae_and_is_rotation_invariant(
            pts in prop::collection::vec((-1.5..1.5f64, 0.0..std::f64::consts::TAU, -1.5..1.5f64, 0.0..std::f64::consts::TAU), 1..20),
            yaw in 0.0..std::f64::consts::TAU,
            pitch in -1.5..1.5f64,
        ) {
            let truth: Vec<Vec3> = pts.iter().map(|p| unit(p.0, p.1)).collect();
            let est: Vec<Vec3> = pts.iter().map(|p| unit(p.2, p.3)).collect();
            let s = DoaSeries::new(truth.clone(), est.clone(), Some(vec![true; pts.len()])).unwrap();
            let r = rmsae(&s, false).unwrap();
            prop_assert!(r + 1e-9 >= mae(&s, false).unwrap());
            prop_assert!((rmsae(&s, true).unwrap() - r).abs() < 1e-12);
            let rt: Vec<Vec3> = truth.iter().map(|v| rotate(v, yaw, pitch)).collect();
            let re: Vec<Vec3> = est.iter().map(|v| rotate(v, yaw, pitch)).collect();
            let s2 = DoaSeries::new(rt, re, None).unwrap();
            prop_assert!((rmsae(&s2, false).unwrap() - r).abs() < 1e-6);
        }
    }
}
