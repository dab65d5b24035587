//! Wall-clock throughput of each SRP method and of network inference on a
//! seeded synthetic clip. The JSON layout is described by `docs/bench.schema.json`.

use std::time::Instant;

use edgeloc_core::config::RunConfig;
use edgeloc_core::feature::assemble;
use edgeloc_core::geometry::direction_from_angles;
use edgeloc_core::net::{build_graph, Network};
use edgeloc_core::simroom::{anechoic_far_field, white_noise};
use edgeloc_core::srp::{SrpFrame, SrpMethod, SrpProcessor};
use serde::Serialize;

use crate::failure::{Outcome, StageExt};
use crate::stages::{weight_source, WeightSource};

pub const SCHEMA_ID: &str = "edgeloc-bench/1";

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub schema: &'static str,
    pub config: BenchConfig,
    pub frames: usize,
    pub stages: Vec<StageTiming>,
    pub equivalence: Equivalence,
}

#[derive(Debug, Serialize)]
pub struct BenchConfig {
    pub fs: u32,
    pub k: usize,
    pub overlap: f64,
    pub n_mics: usize,
    pub res_elevation: usize,
    pub res_azimuth: usize,
    pub variant: String,
    pub weights: String,
}

#[derive(Debug, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub setup_s: f64,
    pub wall_s: f64,
    pub frames_per_second: f64,
}

#[derive(Debug, Serialize)]
pub struct Equivalence {
    /// Largest elementwise gap between the LC and LC-Edge maps.
    pub lc_vs_lc_edge_max_abs_diff: f64,
    pub lc_vs_lc_edge_argmax_identical: bool,
}

fn timing(stage: String, setup_s: f64, wall_s: f64, frames: usize) -> StageTiming {
    StageTiming {
        stage,
        setup_s,
        wall_s,
        frames_per_second: if wall_s > 0.0 { frames as f64 / wall_s } else { f64::INFINITY },
    }
}

pub fn bench(cfg: &RunConfig, frames: usize) -> Outcome<BenchReport> {
    const STAGE: &str = "bench";
    let array = cfg.array().input(STAGE)?;
    let grid = cfg.grid().input(STAGE)?;
    let spec = cfg.frame_spec().input(STAGE)?;
    let fs = cfg.signal.fs;
    let frames = frames.max(1);
    let len = spec.window_len + (frames - 1) * spec.hop();
    let direction = direction_from_angles(20f64.to_radians(), 60f64.to_radians());
    let clip = anechoic_far_field(direction, &white_noise(len, cfg.model.seed), fs, &array).input(STAGE)?;

    let mut stages = Vec::new();
    let mut lc: Option<Vec<SrpFrame>> = None;
    let mut edge: Option<Vec<SrpFrame>> = None;
    for method in SrpMethod::ALL {
        let t0 = Instant::now();
        let processor = SrpProcessor::new(method, &array, &grid, fs, spec).input(STAGE)?;
        let setup = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let maps = processor.run(&clip).input(STAGE)?;
        let wall = t1.elapsed().as_secs_f64();
        stages.push(timing(format!("srp:{method}"), setup, wall, maps.len()));
        match method {
            SrpMethod::Lc => lc = Some(maps),
            SrpMethod::LcEdge => edge = Some(maps),
            _ => {}
        }
    }
    let (lc, edge) = (lc.expect("lc ran"), edge.expect("lc-edge ran"));
    let mut max_diff = 0.0f64;
    let mut same_argmax = true;
    for (a, b) in lc.iter().zip(&edge) {
        same_argmax &= a.argmax() == b.argmax();
        for (x, y) in a.power().iter().zip(b.power()) {
            max_diff = max_diff.max((x - y).abs());
        }
    }

    let source = weight_source(cfg);
    let t0 = Instant::now();
    let bundle = match &source {
        WeightSource::File(p) => edgeloc_core::net::WeightBundle::load(p).input(STAGE)?,
        WeightSource::Random { config, seed } => {
            let graph = build_graph(*config).input(STAGE)?;
            edgeloc_core::net::WeightBundle::random(&graph, *seed)
        }
    };
    let graph = build_graph(bundle.config).input(STAGE)?;
    let net = Network::new(&graph, &bundle).input(STAGE)?;
    let setup = t0.elapsed().as_secs_f64();
    let features = assemble(&edge).input(STAGE)?;

    let t1 = Instant::now();
    net.infer(&features).internal(STAGE)?;
    stages.push(timing("infer:batch".into(), setup, t1.elapsed().as_secs_f64(), features.time()));

    let t2 = Instant::now();
    let mut stream = net.stream();
    for t in 0..features.time() {
        stream.push(&features.frame(t)).internal(STAGE)?;
    }
    stages.push(timing("infer:stream".into(), setup, t2.elapsed().as_secs_f64(), features.time()));

    Ok(BenchReport {
        schema: SCHEMA_ID,
        config: BenchConfig {
            fs,
            k: spec.window_len,
            overlap: spec.overlap_ratio,
            n_mics: array.len(),
            res_elevation: grid.res_elevation(),
            res_azimuth: grid.res_azimuth(),
            variant: cfg.model.variant.name().into(),
            weights: source.describe(),
        },
        frames: edge.len(),
        stages,
        equivalence: Equivalence {
            lc_vs_lc_edge_max_abs_diff: max_diff,
            lc_vs_lc_edge_argmax_identical: same_argmax,
        },
    })
}
