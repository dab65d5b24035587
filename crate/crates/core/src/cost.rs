//! Analytic hardware-overhead model for the SRP front end and the network.
//!
//! FLOP conventions: a real multiply-accumulate counts as 2 operations, a real
//! FFT of length `K` as `K·log2 K` per transform. All storage is 4 bytes per value.

use serde::Serialize;

use crate::geometry::SampleBounds;
use crate::net::NetworkGraph;
use crate::srp::SrpMethod;

pub const BYTES_PER_VALUE: usize = 4;

pub fn frames_per_second(fs: u32, k: usize, overlap: f64) -> f64 {
    f64::from(fs) / (k as f64 * (1.0 - overlap))
}

/// SRP-side counts for one frame.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SrpCost {
    pub method: SrpMethod,
    pub flops_per_frame: f64,
    /// Spectra and transform scratch: `N·K + 2K` values.
    pub buffer_bytes: usize,
    /// Candidate tables as laid out densely per (pair, candidate), padded to the
    /// largest pair bound: 1 lag index (TD), `2·n_max + 1` coefficients (LC),
    /// `n_max + 1` folded coefficients plus the lag (LC-Edge). FD stores the lags.
    pub coefficient_bytes: usize,
    /// Coefficient bytes with every pair sized by its own bound.
    pub exact_coefficient_bytes: usize,
    pub onchip_bytes: usize,
}

/// Per-frame SRP cost for `n_mics` microphones, `q` candidates and transform length `k`.
pub fn srp_cost(method: SrpMethod, n_mics: usize, k: usize, q: usize, bounds: &SampleBounds) -> SrpCost {
    let n = n_mics as f64;
    let kf = k as f64;
    let pairs = n_mics * n_mics.saturating_sub(1) / 2;
    let p = pairs as f64;
    let qf = q as f64;
    let log2k = kf.log2();
    let bins = kf / 2.0 + 1.0;
    let n_samp = bounds.total_indices() as f64;
    let common = 2.0 * n * kf * log2k + 4.0 * p * bins + 10.0 * n * bins;
    let extra = match method {
        SrpMethod::Td => 2.0 * p * kf * log2k + p * qf,
        SrpMethod::Lc => n_samp * (2.0 * kf + 4.0) + n_samp * 2.0 * qf,
        SrpMethod::LcEdge => (n_samp - n * (n - 1.0) / 4.0) * (kf + 2.0 + 2.0 * qf),
        // every candidate sums 2 MACs per bin
        SrpMethod::Fd => p * qf * bins * 4.0,
    };
    let n_max = bounds.max();
    let (per_entry, exact_values) = match method {
        SrpMethod::Fd | SrpMethod::Td => (1, pairs * q),
        SrpMethod::Lc => (2 * n_max + 1, bounds.total_indices() * q),
        SrpMethod::LcEdge => (n_max + 2, (bounds.one_sided_indices() + pairs) * q),
    };
    let buffer_bytes = BYTES_PER_VALUE * (n_mics * k + 2 * k);
    let coefficient_bytes = BYTES_PER_VALUE * pairs * q * per_entry;
    SrpCost {
        method,
        flops_per_frame: common + extra,
        buffer_bytes,
        coefficient_bytes,
        exact_coefficient_bytes: BYTES_PER_VALUE * exact_values,
        onchip_bytes: buffer_bytes + coefficient_bytes,
    }
}

/// Two-sided interpolation table size `4·Σ_pairs(2·N_samp + 1)·Q` bytes.
pub fn two_sided_table_bytes(bounds: &SampleBounds, q: usize) -> usize {
    BYTES_PER_VALUE * bounds.total_indices() * q
}

/// Network-side counts for one frame.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DnnCost {
    pub flops_per_frame: f64,
    pub params: usize,
    pub weight_bytes: usize,
    /// Causal history buffers: each distinct feature read by a causal layer,
    /// times its history length `(kt − 1)·dilation + 1`.
    pub buffer_bytes: usize,
    /// Staging area for the largest single layer's weights, refilled per layer.
    pub staging_bytes: usize,
    pub onchip_bytes: usize,
}

pub fn dnn_cost(graph: &NetworkGraph) -> DnnCost {
    let buffer_bytes = BYTES_PER_VALUE
        * graph
            .causal_buffers()
            .iter()
            .map(|b| b.elements())
            .sum::<usize>();
    let staging_bytes = BYTES_PER_VALUE * graph.max_layer_params();
    DnnCost {
        flops_per_frame: graph.total_flops() as f64,
        params: graph.total_params(),
        weight_bytes: graph.weight_bytes(),
        buffer_bytes,
        staging_bytes,
        onchip_bytes: buffer_bytes + staging_bytes,
    }
}

/// Combined per-second figures for one configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostReport {
    pub label: String,
    pub srp_method: SrpMethod,
    pub res_elevation: usize,
    pub res_azimuth: usize,
    pub srp_flops_per_frame: f64,
    pub dnn_flops_per_frame: f64,
    pub total_flops_per_frame: f64,
    pub frames_per_second: f64,
    pub flops_per_second: f64,
    pub weight_bytes: usize,
    pub srp_onchip_bytes: usize,
    pub dnn_onchip_bytes: usize,
    pub onchip_bytes: usize,
    /// Weights refetched every frame plus the new input samples of each frame.
    pub bandwidth_bytes_per_second: f64,
    pub operational_intensity: f64,
}

/// Frame-level parameters shared by the SRP and network sides.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameParams {
    pub n_mics: usize,
    pub fs: u32,
    pub k: usize,
    pub overlap: f64,
}

impl FrameParams {
    pub fn frames_per_second(&self) -> f64 {
        frames_per_second(self.fs, self.k, self.overlap)
    }

    pub fn input_bytes_per_frame(&self) -> f64 {
        (self.n_mics * BYTES_PER_VALUE) as f64 * self.k as f64 * (1.0 - self.overlap)
    }
}

pub fn report(
    label: impl Into<String>,
    frame: FrameParams,
    res: (usize, usize),
    srp: &SrpCost,
    dnn: Option<&DnnCost>,
) -> CostReport {
    let fps = frame.frames_per_second();
    let dnn_flops = dnn.map_or(0.0, |d| d.flops_per_frame);
    let weight_bytes = dnn.map_or(0, |d| d.weight_bytes);
    let dnn_onchip = dnn.map_or(0, |d| d.onchip_bytes);
    let total = srp.flops_per_frame + dnn_flops;
    let bandwidth = (weight_bytes as f64 + frame.input_bytes_per_frame()) * fps;
    let flops_per_second = total * fps;
    CostReport {
        label: label.into(),
        srp_method: srp.method,
        res_elevation: res.0,
        res_azimuth: res.1,
        srp_flops_per_frame: srp.flops_per_frame,
        dnn_flops_per_frame: dnn_flops,
        total_flops_per_frame: total,
        frames_per_second: fps,
        flops_per_second,
        weight_bytes,
        srp_onchip_bytes: srp.onchip_bytes,
        dnn_onchip_bytes: dnn_onchip,
        onchip_bytes: srp.onchip_bytes + dnn_onchip,
        bandwidth_bytes_per_second: bandwidth,
        operational_intensity: if bandwidth > 0.0 { flops_per_second / bandwidth } else { 0.0 },
    }
}

pub const ROOFLINE_HEADER: &str = "label,srp_method,res_elevation,res_azimuth,srp_flops_per_frame,dnn_flops_per_frame,total_flops_per_frame,frames_per_second,flops_per_second,weight_bytes,srp_onchip_bytes,dnn_onchip_bytes,onchip_bytes,bandwidth_bytes_per_second,operational_intensity";

/// One CSV row per report, in input order, under [`ROOFLINE_HEADER`].
pub fn roofline_csv(reports: &[CostReport]) -> String {
    let mut out = String::from(ROOFLINE_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.label.replace(',', ";"),
            r.srp_method,
            r.res_elevation,
            r.res_azimuth,
            r.srp_flops_per_frame,
            r.dnn_flops_per_frame,
            r.total_flops_per_frame,
            r.frames_per_second,
            r.flops_per_second,
            r.weight_bytes,
            r.srp_onchip_bytes,
            r.dnn_onchip_bytes,
            r.onchip_bytes,
            r.bandwidth_bytes_per_second,
            r.operational_intensity
        ));
    }
    out
}

pub fn roofline_json(reports: &[CostReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize")
}
