//! Cross3D / Cross3D-Edge inference: graph construction, parameter and FLOP
//! counting, weight bundles, and whole-sequence plus frame-at-a-time execution.
//!
//! Topology for grid `Res1 × Res2`, width `C` and branch depth
//! `N = min(4, log2(min(Res1, Res2)))`:
//!
//! ```text
//! input (3 × Res1 × Res2)
//!   └ input_conv 5×5×5 → PReLU                          (trunk)
//!       ├ N × [conv 5×3×3 → PReLU → maxpool 1×1×2]       (branch_a, pools azimuth)
//!       └ N × [conv 5×3×3 → PReLU → maxpool 1×2×1]       (branch_b, pools elevation)
//!   flatten each branch channel-major, concat A then B
//!   output_conv1 (k=5, dilation 2, 4C outputs; depthwise-separable on Edge) → PReLU
//!   output_conv2 (k=5, dilation 2, 3 outputs)
//! ```
//!
//! All temporal kernels are causal. Both execution paths call the same per-step
//! kernels in the same order, so their outputs agree bit for bit.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::feature::{FeatureTensor, FEATURE_CHANNELS};
use crate::tensorfile::{FileHeader, FileKind, Tensor, TensorFile};
use crate::{Error, Result};

pub const INPUT_KERNEL: [usize; 3] = [5, 5, 5];
pub const CROSS_KERNEL: [usize; 3] = [5, 3, 3];
pub const HEAD_KERNEL: usize = 5;
pub const HEAD_DILATION: usize = 2;
pub const DEFAULT_INPUT_FILTERS: usize = 32;
pub const OUTPUT_DIM: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Baseline,
    El,
    Em,
    Es,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Self::Baseline, Self::El, Self::Em, Self::Es];

    pub fn channels(self) -> usize {
        match self {
            Self::Baseline | Self::El => 32,
            Self::Em => 16,
            Self::Es => 8,
        }
    }

    pub fn depthwise(self) -> bool {
        !matches!(self, Self::Baseline)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Baseline => "baseline",
            Self::El => "el",
            Self::Em => "em",
            Self::Es => "es",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(Self::Baseline),
            "el" => Ok(Self::El),
            "em" => Ok(Self::Em),
            "es" => Ok(Self::Es),
            other => Err(Error::invalid(format!(
                "unknown network variant `{other}` (expected baseline, el, em or es)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NetConfig {
    pub res_elevation: usize,
    pub res_azimuth: usize,
    /// Width `C` of the cross convolutions; Output_Conv1 has `4C` outputs.
    pub channels: usize,
    pub depthwise: bool,
    /// Filter count of the input convolution, fixed across variants.
    pub input_filters: usize,
}

impl NetConfig {
    pub fn new(res_elevation: usize, res_azimuth: usize, channels: usize, depthwise: bool) -> Self {
        Self {
            res_elevation,
            res_azimuth,
            channels,
            depthwise,
            input_filters: DEFAULT_INPUT_FILTERS,
        }
    }

    pub fn variant(variant: Variant, res_elevation: usize, res_azimuth: usize) -> Self {
        Self::new(res_elevation, res_azimuth, variant.channels(), variant.depthwise())
    }

    pub fn header(&self) -> FileHeader {
        FileHeader {
            kind: FileKind::Weights,
            res1: self.res_elevation as u32,
            res2: self.res_azimuth as u32,
            channels: self.channels as u32,
            depthwise: self.depthwise,
            input_filters: self.input_filters as u32,
        }
    }

    pub fn from_header(h: &FileHeader) -> Result<Self> {
        if h.kind != FileKind::Weights {
            return Err(Error::format("file holds data tensors, not network weights"));
        }
        Ok(Self {
            res_elevation: h.res1 as usize,
            res_azimuth: h.res2 as usize,
            channels: h.channels as usize,
            depthwise: h.depthwise,
            input_filters: h.input_filters as usize,
        })
    }

    pub fn branch_depth(&self) -> Result<usize> {
        for (axis, r) in [("Res1", self.res_elevation), ("Res2", self.res_azimuth)] {
            if r < 2 || !r.is_power_of_two() {
                return Err(Error::invalid(format!("{axis} = {r} is not a power of two ≥ 2")));
            }
        }
        let smallest = self.res_elevation.min(self.res_azimuth);
        Ok((smallest.trailing_zeros() as usize).min(4))
    }
}

/// Spatial feature shape `(channels, elevation, azimuth)`; 1D features use `(c, 1, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    pub c: usize,
    pub e: usize,
    pub a: usize,
}

impl Shape {
    pub fn new(c: usize, e: usize, a: usize) -> Self {
        Self { c, e, a }
    }

    pub fn size(&self) -> usize {
        self.c * self.e * self.a
    }

    pub fn plane(&self) -> usize {
        self.e * self.a
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Trunk,
    BranchA,
    BranchB,
    Merge,
    Head,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LayerKind {
    Conv3dCausal { kernel: [usize; 3] },
    PRelu,
    MaxPool3d { pool: [usize; 3] },
    FlattenConcat,
    Conv1dCausalDilated { kernel: usize, dilation: usize },
    DepthwiseSeparableConv1d { kernel: usize, dilation: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerSpec {
    pub name: String,
    pub stage: Stage,
    pub kind: LayerKind,
    /// For `FlattenConcat` this is branch A's shape; branch B's is in `second_input`.
    pub input: Shape,
    pub second_input: Option<Shape>,
    pub output: Shape,
}

impl LayerSpec {
    /// Number of past frames (including the current one) the layer reads.
    pub fn history(&self) -> usize {
        match self.kind {
            LayerKind::Conv3dCausal { kernel } => kernel[0],
            LayerKind::Conv1dCausalDilated { kernel, dilation }
            | LayerKind::DepthwiseSeparableConv1d { kernel, dilation } => (kernel - 1) * dilation + 1,
            _ => 1,
        }
    }

    pub fn is_causal(&self) -> bool {
        self.history() > 1
    }

    /// Tensor names and shapes this layer expects in a weight bundle.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>)> {
        let (cin, cout) = (self.input.c, self.output.c);
        let n = |s: &str| format!("{}.{s}", self.name);
        match self.kind {
            LayerKind::Conv3dCausal { kernel: [kt, ke, ka] } => vec![
                (n("weight"), vec![cout, cin, kt, ke, ka]),
                (n("bias"), vec![cout]),
            ],
            LayerKind::PRelu => vec![(n("slope"), vec![cin])],
            LayerKind::Conv1dCausalDilated { kernel, .. } => vec![
                (n("weight"), vec![cout, cin, kernel]),
                (n("bias"), vec![cout]),
            ],
            LayerKind::DepthwiseSeparableConv1d { kernel, .. } => vec![
                (n("depthwise.weight"), vec![cin, kernel]),
                (n("depthwise.bias"), vec![cin]),
                (n("pointwise.weight"), vec![cout, cin]),
                (n("pointwise.bias"), vec![cout]),
            ],
            LayerKind::MaxPool3d { .. } | LayerKind::FlattenConcat => Vec::new(),
        }
    }

    pub fn params(&self) -> usize {
        self.tensors()
            .iter()
            .map(|(_, d)| d.iter().product::<usize>())
            .sum()
    }

    /// Arithmetic operations per frame: a MAC counts 2, activations and pooling 1 per element.
    pub fn flops(&self) -> usize {
        let (cin, out) = (self.input.c, self.output);
        match self.kind {
            LayerKind::Conv3dCausal { kernel } => {
                2 * out.size() * cin * kernel.iter().product::<usize>()
            }
            LayerKind::PRelu => out.size(),
            LayerKind::MaxPool3d { .. } => self.input.size(),
            LayerKind::FlattenConcat => 0,
            LayerKind::Conv1dCausalDilated { kernel, .. } => 2 * out.c * cin * kernel,
            LayerKind::DepthwiseSeparableConv1d { kernel, .. } => 2 * cin * kernel + 2 * cin * out.c,
        }
    }
}

/// A causal history buffer: the distinct feature read by one or more causal layers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausalBuffer {
    pub feature: String,
    pub feature_size: usize,
    pub history: usize,
    pub readers: Vec<String>,
}

impl CausalBuffer {
    pub fn elements(&self) -> usize {
        self.feature_size * self.history
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkGraph {
    config: NetConfig,
    branch_depth: usize,
    layers: Vec<LayerSpec>,
}

pub fn build_graph(config: NetConfig) -> Result<NetworkGraph> {
    let n = config.branch_depth()?;
    if config.channels == 0 || config.input_filters == 0 {
        return Err(Error::invalid("channel counts must be positive"));
    }
    let (r1, r2, c) = (config.res_elevation, config.res_azimuth, config.channels);
    let mut layers = Vec::new();
    let input = Shape::new(FEATURE_CHANNELS, r1, r2);
    let trunk = Shape::new(config.input_filters, r1, r2);
    layers.push(LayerSpec {
        name: "input_conv".into(),
        stage: Stage::Trunk,
        kind: LayerKind::Conv3dCausal { kernel: INPUT_KERNEL },
        input,
        second_input: None,
        output: trunk,
    });
    layers.push(LayerSpec {
        name: "input_prelu".into(),
        stage: Stage::Trunk,
        kind: LayerKind::PRelu,
        input: trunk,
        second_input: None,
        output: trunk,
    });
    let mut branch_out = Vec::new();
    for (stage, label, pool) in [
        (Stage::BranchA, "branch_a", [1, 1, 2]),
        (Stage::BranchB, "branch_b", [1, 2, 1]),
    ] {
        let mut shape = trunk;
        for i in 0..n {
            let conv_out = Shape::new(c, shape.e, shape.a);
            layers.push(LayerSpec {
                name: format!("{label}.{i}.conv"),
                stage,
                kind: LayerKind::Conv3dCausal { kernel: CROSS_KERNEL },
                input: shape,
                second_input: None,
                output: conv_out,
            });
            layers.push(LayerSpec {
                name: format!("{label}.{i}.prelu"),
                stage,
                kind: LayerKind::PRelu,
                input: conv_out,
                second_input: None,
                output: conv_out,
            });
            let pooled = Shape::new(c, conv_out.e / pool[1], conv_out.a / pool[2]);
            layers.push(LayerSpec {
                name: format!("{label}.{i}.pool"),
                stage,
                kind: LayerKind::MaxPool3d { pool },
                input: conv_out,
                second_input: None,
                output: pooled,
            });
            shape = pooled;
        }
        branch_out.push(shape);
    }
    let concat = Shape::new(branch_out[0].size() + branch_out[1].size(), 1, 1);
    layers.push(LayerSpec {
        name: "concat".into(),
        stage: Stage::Merge,
        kind: LayerKind::FlattenConcat,
        input: branch_out[0],
        second_input: Some(branch_out[1]),
        output: concat,
    });
    let hidden = Shape::new(4 * c, 1, 1);
    layers.push(LayerSpec {
        name: "output_conv1".into(),
        stage: Stage::Head,
        kind: if config.depthwise {
            LayerKind::DepthwiseSeparableConv1d {
                kernel: HEAD_KERNEL,
                dilation: HEAD_DILATION,
            }
        } else {
            LayerKind::Conv1dCausalDilated {
                kernel: HEAD_KERNEL,
                dilation: HEAD_DILATION,
            }
        },
        input: concat,
        second_input: None,
        output: hidden,
    });
    layers.push(LayerSpec {
        name: "output_prelu".into(),
        stage: Stage::Head,
        kind: LayerKind::PRelu,
        input: hidden,
        second_input: None,
        output: hidden,
    });
    layers.push(LayerSpec {
        name: "output_conv2".into(),
        stage: Stage::Head,
        kind: LayerKind::Conv1dCausalDilated {
            kernel: HEAD_KERNEL,
            dilation: HEAD_DILATION,
        },
        input: hidden,
        second_input: None,
        output: Shape::new(OUTPUT_DIM, 1, 1),
    });
    Ok(NetworkGraph {
        config,
        branch_depth: n,
        layers,
    })
}

/// Per-layer count line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LayerCount {
    pub name: String,
    pub params: usize,
    pub flops: usize,
}

impl NetworkGraph {
    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn branch_depth(&self) -> usize {
        self.branch_depth
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn layer(&self, name: &str) -> Option<&LayerSpec> {
        self.layers.iter().find(|l| l.name == name)
    }

    pub fn input_shape(&self) -> Shape {
        self.layers[0].input
    }

    /// Width of the flattened, concatenated branch features.
    pub fn concat_channels(&self) -> usize {
        self.layer("concat").expect("graph has a concat layer").output.c
    }

    pub fn count_params(&self) -> (Vec<LayerCount>, usize) {
        self.counts(|l| l.params())
    }

    pub fn count_flops(&self) -> (Vec<LayerCount>, usize) {
        self.counts(|l| l.flops())
    }

    pub fn total_params(&self) -> usize {
        self.layers.iter().map(LayerSpec::params).sum()
    }

    /// FLOPs per frame.
    pub fn total_flops(&self) -> usize {
        self.layers.iter().map(LayerSpec::flops).sum()
    }

    pub fn weight_bytes(&self) -> usize {
        4 * self.total_params()
    }

    /// Largest parameter count of a single layer.
    pub fn max_layer_params(&self) -> usize {
        self.layers.iter().map(LayerSpec::params).max().unwrap_or(0)
    }

    fn counts(&self, f: impl Fn(&LayerSpec) -> usize) -> (Vec<LayerCount>, usize) {
        let rows: Vec<LayerCount> = self
            .layers
            .iter()
            .map(|l| LayerCount {
                name: l.name.clone(),
                params: l.params(),
                flops: l.flops(),
            })
            .collect();
        let total = self.layers.iter().map(f).sum();
        (rows, total)
    }

    /// Every weight tensor the graph needs, in layer order.
    pub fn expected_tensors(&self) -> Vec<(String, Vec<usize>)> {
        self.layers.iter().flat_map(LayerSpec::tensors).collect()
    }

    /// The distinct features that causal layers read, with their history lengths.
    /// Both branches read the trunk output, which is buffered once.
    pub fn causal_buffers(&self) -> Vec<CausalBuffer> {
        let mut out: Vec<CausalBuffer> = Vec::new();
        let mut source = "input".to_string();
        let mut last_by_stage: BTreeMap<&'static str, String> = BTreeMap::new();
        for layer in &self.layers {
            let feature = match layer.stage {
                Stage::Trunk => "input".to_string(),
                Stage::BranchA | Stage::BranchB => {
                    let key = if layer.stage == Stage::BranchA { "a" } else { "b" };
                    last_by_stage
                        .get(key)
                        .cloned()
                        .unwrap_or_else(|| "input_prelu".to_string())
                }
                Stage::Merge | Stage::Head => source.clone(),
            };
            if layer.is_causal() {
                if let Some(b) = out.iter_mut().find(|b| b.feature == feature) {
                    b.readers.push(layer.name.clone());
                    b.history = b.history.max(layer.history());
                } else {
                    out.push(CausalBuffer {
                        feature: feature.clone(),
                        feature_size: layer.input.size(),
                        history: layer.history(),
                        readers: vec![layer.name.clone()],
                    });
                }
            }
            match layer.stage {
                Stage::BranchA => {
                    last_by_stage.insert("a", layer.name.clone());
                }
                Stage::BranchB => {
                    last_by_stage.insert("b", layer.name.clone());
                }
                _ => {}
            }
            source = layer.name.clone();
        }
        out
    }
}

/// Named `f32` tensors for one network configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightBundle {
    pub config: NetConfig,
    pub tensors: BTreeMap<String, Tensor>,
}

impl WeightBundle {
    /// Seeded uniform weights in `[−0.1, 0.1]`, for structural tests and demos.
    pub fn random(graph: &NetworkGraph, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::filled(graph, |_| rng.random_range(-0.1f32..=0.1))
    }

    pub fn zeros(graph: &NetworkGraph) -> Self {
        Self::filled(graph, |_| 0.0)
    }

    pub fn filled(graph: &NetworkGraph, mut f: impl FnMut(&str) -> f32) -> Self {
        let tensors = graph
            .expected_tensors()
            .into_iter()
            .map(|(name, dims)| {
                let n = dims.iter().product();
                let data = (0..n).map(|_| f(&name)).collect();
                let t = Tensor::f32(dims, data).expect("dims match data");
                (name, t)
            })
            .collect();
        Self {
            config: *graph.config(),
            tensors,
        }
    }

    pub fn element_count(&self) -> usize {
        self.tensors.values().map(Tensor::element_count).sum()
    }

    pub fn to_file(&self) -> TensorFile {
        TensorFile {
            header: self.config.header(),
            tensors: self.tensors.clone(),
        }
    }

    pub fn from_file(file: TensorFile) -> Result<Self> {
        Ok(Self {
            config: NetConfig::from_header(&file.header)?,
            tensors: file.tensors,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_file().save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_file(TensorFile::load(path)?)
    }

    fn take(&self, layer: &str, name: &str, dims: &[usize]) -> Result<Vec<f32>> {
        let t = self.tensors.get(name).ok_or_else(|| Error::Shape {
            layer: layer.into(),
            detail: format!("missing tensor `{name}`"),
        })?;
        if t.dims != dims {
            return Err(Error::Shape {
                layer: layer.into(),
                detail: format!("`{name}` has dims {:?}, expected {dims:?}", t.dims),
            });
        }
        t.as_f32().map(<[f32]>::to_vec).ok_or_else(|| Error::Shape {
            layer: layer.into(),
            detail: format!("`{name}` is not f32"),
        })
    }
}

struct Conv3d {
    cin: usize,
    kernel: [usize; 3],
    e: usize,
    a: usize,
    weight: Vec<f32>,
    bias: Vec<f32>,
}

impl Conv3d {
    /// `taps[j]` is the input frame at `t − (kt − 1 − j)`, `None` before the sequence start.
    fn step(&self, taps: &[Option<&[f32]>], out: &mut [f32]) {
        let [kt, ke, ka] = self.kernel;
        let (e_len, a_len) = (self.e, self.a);
        let plane = e_len * a_len;
        let (pe, pa) = ((ke / 2) as isize, (ka / 2) as isize);
        out.par_chunks_mut(plane).enumerate().for_each(|(co, o)| {
            o.fill(self.bias[co]);
            for ci in 0..self.cin {
                for (j, tap) in taps.iter().enumerate().take(kt) {
                    let Some(frame) = tap else { continue };
                    let src_plane = &frame[ci * plane..(ci + 1) * plane];
                    for de in 0..ke {
                        let oe = de as isize - pe;
                        let e0 = (-oe).max(0) as usize;
                        let e1 = (e_len as isize - oe).min(e_len as isize).max(0) as usize;
                        for da in 0..ka {
                            let w = self.weight
                                [(((co * self.cin + ci) * kt + j) * ke + de) * ka + da];
                            let oa = da as isize - pa;
                            let a0 = (-oa).max(0) as usize;
                            let a1 = (a_len as isize - oa).min(a_len as isize).max(0) as usize;
                            if a0 >= a1 {
                                continue;
                            }
                            for e in e0..e1 {
                                let se = (e as isize + oe) as usize;
                                let dst = &mut o[e * a_len + a0..e * a_len + a1];
                                let s0 = (a0 as isize + oa) as usize;
                                let src = &src_plane[se * a_len + s0..se * a_len + s0 + (a1 - a0)];
                                for (d, s) in dst.iter_mut().zip(src) {
                                    *d += w * s;
                                }
                            }
                        }
                    }
                }
            }
        });
    }
}

/// Dense causal 1D convolution; weights held as `[cout][tap][cin]`.
struct Conv1d {
    cin: usize,
    cout: usize,
    kernel: usize,
    weight: Vec<f32>,
    bias: Vec<f32>,
}

impl Conv1d {
    fn new(cin: usize, cout: usize, kernel: usize, file_weight: &[f32], bias: Vec<f32>) -> Self {
        let mut weight = vec![0.0; cout * kernel * cin];
        for co in 0..cout {
            for ci in 0..cin {
                for j in 0..kernel {
                    weight[(co * kernel + j) * cin + ci] = file_weight[(co * cin + ci) * kernel + j];
                }
            }
        }
        Self {
            cin,
            cout,
            kernel,
            weight,
            bias,
        }
    }

    fn step(&self, taps: &[Option<&[f32]>], out: &mut [f32]) {
        out.par_iter_mut().enumerate().for_each(|(co, o)| {
            let mut acc = self.bias[co];
            for (j, tap) in taps.iter().enumerate().take(self.kernel) {
                let Some(x) = tap else { continue };
                let w = &self.weight[(co * self.kernel + j) * self.cin..][..self.cin];
                acc += w.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f32>();
            }
            *o = acc;
        });
        debug_assert_eq!(out.len(), self.cout);
    }
}

struct SeparableConv1d {
    cin: usize,
    kernel: usize,
    depthwise: Vec<f32>,
    depthwise_bias: Vec<f32>,
    pointwise: Vec<f32>,
    pointwise_bias: Vec<f32>,
}

impl SeparableConv1d {
    fn step(&self, taps: &[Option<&[f32]>], out: &mut [f32]) {
        let mid: Vec<f32> = (0..self.cin)
            .map(|ci| {
                let mut acc = self.depthwise_bias[ci];
                for (j, tap) in taps.iter().enumerate().take(self.kernel) {
                    if let Some(x) = tap {
                        acc += self.depthwise[ci * self.kernel + j] * x[ci];
                    }
                }
                acc
            })
            .collect();
        out.par_iter_mut().enumerate().for_each(|(co, o)| {
            let w = &self.pointwise[co * self.cin..(co + 1) * self.cin];
            *o = self.pointwise_bias[co] + w.iter().zip(&mid).map(|(a, b)| a * b).sum::<f32>();
        });
    }
}

enum HeadConv {
    Dense(Conv1d),
    Separable(SeparableConv1d),
}

impl HeadConv {
    fn step(&self, taps: &[Option<&[f32]>], out: &mut [f32]) {
        match self {
            Self::Dense(c) => c.step(taps, out),
            Self::Separable(c) => c.step(taps, out),
        }
    }
}

fn prelu(x: &mut [f32], slope: &[f32], plane: usize) {
    for (chunk, &s) in x.chunks_mut(plane).zip(slope) {
        for v in chunk {
            if *v < 0.0 {
                *v *= s;
            }
        }
    }
}

fn maxpool(x: &[f32], shape: Shape, pool: [usize; 3]) -> Vec<f32> {
    let (pe, pa) = (pool[1], pool[2]);
    let (oe, oa) = (shape.e / pe, shape.a / pa);
    let mut out = Vec::with_capacity(shape.c * oe * oa);
    for c in 0..shape.c {
        let plane = &x[c * shape.plane()..(c + 1) * shape.plane()];
        for e in 0..oe {
            for a in 0..oa {
                let mut m = f32::NEG_INFINITY;
                for de in 0..pe {
                    for da in 0..pa {
                        m = m.max(plane[(e * pe + de) * shape.a + a * pa + da]);
                    }
                }
                out.push(m);
            }
        }
    }
    out
}

struct BranchLayer {
    conv: Conv3d,
    slope: Vec<f32>,
    pool: [usize; 3],
    conv_shape: Shape,
}

/// A graph with bound weights, ready to run.
pub struct Network {
    graph: NetworkGraph,
    input_conv: Conv3d,
    input_slope: Vec<f32>,
    branches: [Vec<BranchLayer>; 2],
    head1: HeadConv,
    head_slope: Vec<f32>,
    head2: Conv1d,
}

impl Network {
    pub fn new(graph: &NetworkGraph, weights: &WeightBundle) -> Result<Self> {
        let expected: BTreeMap<String, Vec<usize>> = graph.expected_tensors().into_iter().collect();
        if let Some(extra) = weights.tensors.keys().find(|k| !expected.contains_key(*k)) {
            let layer = extra.split('.').next().unwrap_or(extra).to_string();
            return Err(Error::Shape {
                layer,
                detail: format!("unexpected tensor `{extra}`"),
            });
        }
        let conv3d = |spec: &LayerSpec| -> Result<Conv3d> {
            let LayerKind::Conv3dCausal { kernel } = spec.kind else {
                unreachable!("conv3d layer")
            };
            let t = spec.tensors();
            Ok(Conv3d {
                cin: spec.input.c,
                kernel,
                e: spec.output.e,
                a: spec.output.a,
                weight: weights.take(&spec.name, &t[0].0, &t[0].1)?,
                bias: weights.take(&spec.name, &t[1].0, &t[1].1)?,
            })
        };
        let slope = |spec: &LayerSpec| -> Result<Vec<f32>> {
            let t = spec.tensors();
            weights.take(&spec.name, &t[0].0, &t[0].1)
        };
        let layer = |name: &str| graph.layer(name).expect("layer exists");

        let input_conv = conv3d(layer("input_conv"))?;
        let input_slope = slope(layer("input_prelu"))?;
        let mut branches: [Vec<BranchLayer>; 2] = [Vec::new(), Vec::new()];
        for (b, label) in ["branch_a", "branch_b"].iter().enumerate() {
            for i in 0..graph.branch_depth() {
                let conv_spec = layer(&format!("{label}.{i}.conv"));
                let pool_spec = layer(&format!("{label}.{i}.pool"));
                let LayerKind::MaxPool3d { pool } = pool_spec.kind else {
                    unreachable!("pool layer")
                };
                branches[b].push(BranchLayer {
                    conv: conv3d(conv_spec)?,
                    slope: slope(layer(&format!("{label}.{i}.prelu")))?,
                    pool,
                    conv_shape: conv_spec.output,
                });
            }
        }
        let h1 = layer("output_conv1");
        let t = h1.tensors();
        let head1 = match h1.kind {
            LayerKind::DepthwiseSeparableConv1d { kernel, .. } => HeadConv::Separable(SeparableConv1d {
                cin: h1.input.c,
                kernel,
                depthwise: weights.take(&h1.name, &t[0].0, &t[0].1)?,
                depthwise_bias: weights.take(&h1.name, &t[1].0, &t[1].1)?,
                pointwise: weights.take(&h1.name, &t[2].0, &t[2].1)?,
                pointwise_bias: weights.take(&h1.name, &t[3].0, &t[3].1)?,
            }),
            LayerKind::Conv1dCausalDilated { kernel, .. } => HeadConv::Dense(Conv1d::new(
                h1.input.c,
                h1.output.c,
                kernel,
                &weights.take(&h1.name, &t[0].0, &t[0].1)?,
                weights.take(&h1.name, &t[1].0, &t[1].1)?,
            )),
            _ => unreachable!("head layer"),
        };
        let head_slope = slope(layer("output_prelu"))?;
        let h2 = layer("output_conv2");
        let t = h2.tensors();
        let head2 = Conv1d::new(
            h2.input.c,
            h2.output.c,
            HEAD_KERNEL,
            &weights.take(&h2.name, &t[0].0, &t[0].1)?,
            weights.take(&h2.name, &t[1].0, &t[1].1)?,
        );
        Ok(Self {
            graph: graph.clone(),
            input_conv,
            input_slope,
            branches,
            head1,
            head_slope,
            head2,
        })
    }

    pub fn graph(&self) -> &NetworkGraph {
        &self.graph
    }

    fn check_input(&self, x: &FeatureTensor) -> Result<()> {
        let s = self.graph.input_shape();
        if x.channels() != s.c || x.res_elevation() != s.e || x.res_azimuth() != s.a {
            return Err(Error::Shape {
                layer: "input_conv".into(),
                detail: format!(
                    "input is {}×{}×{}, network expects {}×{}×{}",
                    x.channels(),
                    x.res_elevation(),
                    x.res_azimuth(),
                    s.c,
                    s.e,
                    s.a
                ),
            });
        }
        Ok(())
    }

    /// Whole-sequence inference, one raw (unnormalized) xyz row per input frame.
    pub fn infer(&self, x: &FeatureTensor) -> Result<Vec<[f32; 3]>> {
        self.check_input(x)?;
        let frames: Vec<Vec<f32>> = (0..x.time()).map(|t| x.frame(t)).collect();
        let kt = self.input_conv.kernel[0];

        let trunk_shape = self.graph.layer("input_prelu").expect("trunk").output;
        let trunk: Vec<Vec<f32>> = (0..frames.len())
            .into_par_iter()
            .map(|t| {
                let mut y = vec![0.0; trunk_shape.size()];
                self.input_conv.step(&seq_taps(&frames, t, kt, 1), &mut y);
                prelu(&mut y, &self.input_slope, trunk_shape.plane());
                y
            })
            .collect();

        let mut branch_out = Vec::with_capacity(2);
        for branch in &self.branches {
            let mut cur = trunk.clone();
            for layer in branch {
                let kt = layer.conv.kernel[0];
                cur = (0..cur.len())
                    .into_par_iter()
                    .map(|t| layer.forward(&seq_taps(&cur, t, kt, 1)))
                    .collect();
            }
            branch_out.push(cur);
        }
        let concat: Vec<Vec<f32>> = branch_out[0]
            .iter()
            .zip(&branch_out[1])
            .map(|(a, b)| [a.as_slice(), b.as_slice()].concat())
            .collect();

        let hidden_c = self.head_slope.len();
        let hidden: Vec<Vec<f32>> = (0..concat.len())
            .into_par_iter()
            .map(|t| {
                let mut y = vec![0.0; hidden_c];
                self.head1.step(&seq_taps(&concat, t, HEAD_KERNEL, HEAD_DILATION), &mut y);
                prelu(&mut y, &self.head_slope, 1);
                y
            })
            .collect();
        (0..hidden.len())
            .into_par_iter()
            .map(|t| {
                let mut y = [0.0f32; 3];
                self.head2.step(&seq_taps(&hidden, t, HEAD_KERNEL, HEAD_DILATION), &mut y);
                Ok(y)
            })
            .collect()
    }

    /// Fresh frame-at-a-time state sized by [`NetworkGraph::causal_buffers`].
    pub fn stream(&self) -> NetStream<'_> {
        let buffers = self.graph.causal_buffers();
        NetStream {
            net: self,
            rings: buffers.iter().map(|b| Ring::new(b.history)).collect(),
            buffered_elements: buffers.iter().map(CausalBuffer::elements).sum(),
        }
    }
}

impl BranchLayer {
    fn forward(&self, taps: &[Option<&[f32]>]) -> Vec<f32> {
        let mut y = vec![0.0; self.conv_shape.size()];
        self.conv.step(taps, &mut y);
        prelu(&mut y, &self.slope, self.conv_shape.plane());
        maxpool(&y, self.conv_shape, self.pool)
    }
}

fn seq_taps(seq: &[Vec<f32>], t: usize, kernel: usize, dilation: usize) -> Vec<Option<&[f32]>> {
    (0..kernel)
        .map(|j| {
            t.checked_sub((kernel - 1 - j) * dilation)
                .map(|s| seq[s].as_slice())
        })
        .collect()
}

/// Fixed-length history, newest frame last.
struct Ring {
    capacity: usize,
    frames: VecDeque<Vec<f32>>,
    seen: usize,
}

impl Ring {
    fn new(capacity: usize) -> Self {
        Self {
            capacity,
            frames: VecDeque::with_capacity(capacity),
            seen: 0,
        }
    }

    fn push(&mut self, frame: Vec<f32>) {
        if self.frames.len() == self.capacity {
            self.frames.pop_front();
        }
        self.frames.push_back(frame);
        self.seen += 1;
    }

    fn taps(&self, kernel: usize, dilation: usize) -> Vec<Option<&[f32]>> {
        let newest = self.frames.len() - 1;
        (0..kernel)
            .map(|j| {
                let back = (kernel - 1 - j) * dilation;
                (back < self.seen).then(|| self.frames[newest - back].as_slice())
            })
            .collect()
    }
}

/// Frame-at-a-time inference holding only the causal history each layer needs.
pub struct NetStream<'a> {
    net: &'a Network,
    rings: Vec<Ring>,
    buffered_elements: usize,
}

impl NetStream<'_> {
    /// Values held across frames, summed over all history buffers.
    pub fn buffered_elements(&self) -> usize {
        self.buffered_elements
    }

    /// Feeds one `[channel][elevation][azimuth]` frame and returns its raw xyz output.
    pub fn push(&mut self, frame: &[f32]) -> Result<[f32; 3]> {
        let net = self.net;
        let input = net.graph.input_shape();
        if frame.len() != input.size() {
            return Err(Error::Shape {
                layer: "input_conv".into(),
                detail: format!("frame has {} values, expected {}", frame.len(), input.size()),
            });
        }
        let depth = net.graph.branch_depth();
        // ring order follows causal_buffers(): input, trunk, branch A intermediates,
        // branch B intermediates, concat, hidden
        let mut ring = 0;
        self.rings[ring].push(frame.to_vec());
        let mut trunk = vec![0.0; net.graph.layer("input_prelu").expect("trunk").output.size()];
        net.input_conv
            .step(&self.rings[ring].taps(net.input_conv.kernel[0], 1), &mut trunk);
        prelu(&mut trunk, &net.input_slope, input.plane());
        ring += 1;
        let trunk_ring = ring;
        self.rings[trunk_ring].push(trunk);

        let mut outs = Vec::with_capacity(2);
        for branch in &net.branches {
            let mut source = trunk_ring;
            let mut y = Vec::new();
            for (i, layer) in branch.iter().enumerate() {
                y = layer.forward(&self.rings[source].taps(layer.conv.kernel[0], 1));
                if i + 1 < depth {
                    ring += 1;
                    self.rings[ring].push(y.clone());
                    source = ring;
                }
            }
            outs.push(y);
        }
        ring += 1;
        self.rings[ring].push([outs[0].as_slice(), outs[1].as_slice()].concat());
        let mut hidden = vec![0.0; net.head_slope.len()];
        net.head1
            .step(&self.rings[ring].taps(HEAD_KERNEL, HEAD_DILATION), &mut hidden);
        prelu(&mut hidden, &net.head_slope, 1);
        ring += 1;
        self.rings[ring].push(hidden);
        let mut y = [0.0f32; 3];
        net.head2
            .step(&self.rings[ring].taps(HEAD_KERNEL, HEAD_DILATION), &mut y);
        Ok(y)
    }
}

/// Normalizes raw network rows to unit vectors; zero rows stay zero.
pub fn normalize_rows(rows: &[[f32; 3]]) -> Vec<[f64; 3]> {
    rows.iter()
        .map(|r| {
            let v = [f64::from(r[0]), f64::from(r[1]), f64::from(r[2])];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if n > 0.0 {
                [v[0] / n, v[1] / n, v[2] / n]
            } else {
                v
            }
        })
        .collect()
}
