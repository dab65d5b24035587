//! Pipeline stages shared by the individual subcommands and `run`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use edgeloc_core::config::{RunConfig, SceneSection};
use edgeloc_core::eval::{align, read_doa_csv, read_vad_csv, score, DoaRow, DoaSeries, Metrics};
use edgeloc_core::feature::assemble;
use edgeloc_core::geometry::{angles_from_direction, CandidateGrid, MicArray};
use edgeloc_core::net::{build_graph, normalize_rows, NetConfig, Network, WeightBundle};
use edgeloc_core::signal::{load_wav_mono, AudioClip, FrameSpec};
use edgeloc_core::simroom::{simulate, white_noise};
use edgeloc_core::srp::{SrpFrame, SrpMethod, SrpProcessor};
use edgeloc_core::tensorfile::{FileHeader, Tensor, TensorFile};

use crate::failure::{Failure, Outcome, StageExt};

pub struct Synthesis {
    pub clip: AudioClip,
    pub truth: Vec<DoaRow>,
}

/// Renders the scene and the per-frame ground truth, sampled at each frame's center.
pub fn synthesize(scene_cfg: &SceneSection, array: &MicArray, fs: u32, spec: FrameSpec) -> Outcome<Synthesis> {
    const STAGE: &str = "synth";
    let scene = scene_cfg.scene().input(STAGE)?;
    let dry = match &scene_cfg.dry {
        Some(path) => {
            let (samples, rate) = load_wav_mono(path).input(STAGE)?;
            if rate != fs {
                return Err(Failure::input(
                    STAGE,
                    format!("dry file {} is {rate} Hz, expected {fs} Hz", path.display()),
                ));
            }
            let keep = ((scene_cfg.duration_s * f64::from(fs)).round() as usize).min(samples.len());
            samples[..keep].to_vec()
        }
        None => white_noise((scene_cfg.duration_s * f64::from(fs)).round() as usize, scene.seed),
    };
    let clip = simulate(&scene, array, &dry, fs).input(STAGE)?;
    let frames = spec.frame_count(clip.len());
    if frames == 0 {
        return Err(Failure::input(STAGE, "scene is shorter than one analysis frame"));
    }
    let truth = (0..frames)
        .map(|i| {
            let center = (i * spec.hop()) as f64 + spec.window_len as f64 / 2.0;
            let (el, az) = scene.doa_angles_deg(center / f64::from(fs));
            DoaRow {
                frame_index: i,
                elevation_deg: el,
                azimuth_deg: az,
            }
        })
        .collect();
    Ok(Synthesis { clip, truth })
}

pub fn srp_frames(
    clip: &AudioClip,
    method: SrpMethod,
    array: &MicArray,
    grid: &CandidateGrid,
    fs: u32,
    spec: FrameSpec,
) -> Outcome<Vec<SrpFrame>> {
    let processor = SrpProcessor::new(method, array, grid, fs, spec).input("srp")?;
    let frames = processor.run(clip).input("srp")?;
    if frames.is_empty() {
        return Err(Failure::input("srp", "clip is shorter than one analysis frame"));
    }
    Ok(frames)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapFormat {
    Csv,
    Tensor,
}

impl MapFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Self::Csv,
            _ => Self::Tensor,
        }
    }
}

pub fn write_srp(path: &Path, frames: &[SrpFrame], format: MapFormat) -> Outcome<()> {
    const STAGE: &str = "srp";
    let first = &frames[0];
    let (r1, r2) = (first.res_elevation(), first.res_azimuth());
    match format {
        MapFormat::Csv => {
            let mut w = csv::Writer::from_path(path).input(STAGE)?;
            let mut header = vec![
                "frame_index".to_string(),
                "argmax_elevation_deg".to_string(),
                "argmax_azimuth_deg".to_string(),
            ];
            header.extend((0..r1 * r2).map(|q| format!("p{q}")));
            w.write_record(&header).internal(STAGE)?;
            for f in frames {
                let (el, az) = f.argmax_angles_deg();
                let mut row = vec![f.frame_index.to_string(), el.to_string(), az.to_string()];
                row.extend(f.power().iter().map(f64::to_string));
                w.write_record(&row).internal(STAGE)?;
            }
            w.flush().internal(STAGE)?;
        }
        MapFormat::Tensor => {
            let t = frames.len();
            let mut tensors = BTreeMap::new();
            let index = frames.iter().map(|f| f.frame_index as f64).collect();
            let power = frames.iter().flat_map(|f| f.power().iter().copied()).collect();
            let argmax = frames
                .iter()
                .flat_map(|f| {
                    let (el, az) = f.argmax_angles_deg();
                    [el, az]
                })
                .collect();
            tensors.insert("frame_index".into(), Tensor::f64(vec![t], index).internal(STAGE)?);
            tensors.insert("power".into(), Tensor::f64(vec![t, r1 * r2], power).internal(STAGE)?);
            tensors.insert("argmax_deg".into(), Tensor::f64(vec![t, 2], argmax).internal(STAGE)?);
            let file = TensorFile {
                header: FileHeader::data(r1 as u32, r2 as u32),
                tensors,
            };
            file.save(path).input(STAGE)?;
        }
    }
    Ok(())
}

/// Reads SRP maps written by [`write_srp`]. CSV files carry no grid and are
/// read with `explicit`, else `fallback`; tensor files must agree with `explicit`.
pub fn read_srp(
    path: &Path,
    explicit: Option<(usize, usize)>,
    fallback: (usize, usize),
) -> Outcome<Vec<SrpFrame>> {
    const STAGE: &str = "infer";
    if !path.exists() {
        return Err(Failure::input(STAGE, format!("input not found: {}", path.display())));
    }
    let frames = match MapFormat::from_path(path) {
        MapFormat::Csv => {
            let (r1, r2) = explicit.unwrap_or(fallback);
            let mut reader = csv::Reader::from_path(path).input(STAGE)?;
            let mut frames = Vec::new();
            for record in reader.records() {
                let record = record.input(STAGE)?;
                if record.len() != 3 + r1 * r2 {
                    return Err(Failure::input(
                        STAGE,
                        format!("row has {} columns, grid {r1}x{r2} needs {}", record.len(), 3 + r1 * r2),
                    ));
                }
                let index: usize = record[0].parse().input(STAGE)?;
                let power = record
                    .iter()
                    .skip(3)
                    .map(str::parse::<f64>)
                    .collect::<Result<Vec<_>, _>>()
                    .input(STAGE)?;
                frames.push(SrpFrame::new(index, r1, r2, power).input(STAGE)?);
            }
            frames
        }
        MapFormat::Tensor => {
            let file = TensorFile::load(path).input(STAGE)?;
            let (r1, r2) = (file.header.res1 as usize, file.header.res2 as usize);
            if let Some(g) = explicit {
                if g != (r1, r2) {
                    return Err(Failure::input(
                        STAGE,
                        format!("maps are {r1}x{r2}, grid {}x{} requested", g.0, g.1),
                    ));
                }
            }
            let get = |name: &str| -> Outcome<&[f64]> {
                file.tensors
                    .get(name)
                    .and_then(Tensor::as_f64)
                    .ok_or_else(|| Failure::input(STAGE, format!("missing f64 tensor `{name}`")))
            };
            let index = get("frame_index")?;
            let power = get("power")?;
            if power.len() != index.len() * r1 * r2 {
                return Err(Failure::input(STAGE, "power tensor does not match the frame count"));
            }
            index
                .iter()
                .zip(power.chunks_exact(r1 * r2))
                .map(|(&i, p)| SrpFrame::new(i as usize, r1, r2, p.to_vec()).input(STAGE))
                .collect::<Outcome<_>>()?
        }
    };
    if frames.is_empty() {
        return Err(Failure::input(STAGE, "no SRP frames in input"));
    }
    Ok(frames)
}

pub enum WeightSource {
    File(PathBuf),
    Random { config: NetConfig, seed: u64 },
}

impl WeightSource {
    pub fn describe(&self) -> String {
        match self {
            Self::File(p) => p.display().to_string(),
            Self::Random { seed, .. } => format!("random(seed={seed})"),
        }
    }
}

/// Runs the network over the SRP sequence and returns one DOA row per frame.
pub fn infer(frames: &[SrpFrame], weights: &WeightSource) -> Outcome<Vec<DoaRow>> {
    const STAGE: &str = "infer";
    let features = assemble(frames).input(STAGE)?;
    let (r1, r2) = (features.res_elevation(), features.res_azimuth());
    let bundle = match weights {
        WeightSource::File(path) => {
            if !path.exists() {
                return Err(Failure::input(STAGE, format!("weights not found: {}", path.display())));
            }
            WeightBundle::load(path).input(STAGE)?
        }
        WeightSource::Random { config, seed } => {
            eprintln!("WARNING: no weight file given; using UNTRAINED random weights (seed {seed}).");
            eprintln!("WARNING: network DOA outputs are structural placeholders, not estimates.");
            let graph = build_graph(*config).input(STAGE)?;
            WeightBundle::random(&graph, *seed)
        }
    };
    if (bundle.config.res_elevation, bundle.config.res_azimuth) != (r1, r2) {
        return Err(Failure::input(
            STAGE,
            format!(
                "weights are for a {}x{} grid, maps are {r1}x{r2}",
                bundle.config.res_elevation, bundle.config.res_azimuth
            ),
        ));
    }
    let graph = build_graph(bundle.config).input(STAGE)?;
    let net = Network::new(&graph, &bundle).input(STAGE)?;
    let raw = net.infer(&features).internal(STAGE)?;
    Ok(frames
        .iter()
        .zip(normalize_rows(&raw))
        .map(|(f, v)| {
            let (el, az) = if v == [0.0; 3] {
                (0.0, 0.0)
            } else {
                angles_from_direction(&v)
            };
            DoaRow {
                frame_index: f.frame_index,
                elevation_deg: el.to_degrees(),
                azimuth_deg: az.to_degrees(),
            }
        })
        .collect())
}

pub fn argmax_rows(frames: &[SrpFrame]) -> Vec<DoaRow> {
    frames
        .iter()
        .map(|f| {
            let (el, az) = f.argmax_angles_deg();
            DoaRow {
                frame_index: f.frame_index,
                elevation_deg: el,
                azimuth_deg: az,
            }
        })
        .collect()
}

/// Scores the estimate frames that also appear in the truth track.
pub fn evaluate(
    truth: &[DoaRow],
    estimate: &[DoaRow],
    vad: Option<&Path>,
    grid: &CandidateGrid,
) -> Outcome<Metrics> {
    const STAGE: &str = "eval";
    let (t, e, frames) = align(truth, estimate);
    if frames.is_empty() {
        return Err(Failure::input(STAGE, "truth and estimate share no frame indices"));
    }
    let mask = match vad {
        Some(path) => {
            let span = frames.iter().max().map_or(0, |m| m + 1);
            let full = read_vad_csv(File::open(path).input(STAGE)?, span).input(STAGE)?;
            Some(frames.iter().map(|&i| full[i]).collect())
        }
        None => None,
    };
    let series = DoaSeries::from_angles_deg(&t, &e, mask).input(STAGE)?;
    score(&series, grid).input(STAGE)
}

pub fn read_doa(path: &Path, stage: &str) -> Outcome<Vec<DoaRow>> {
    let file = File::open(path).map_err(|e| Failure::input(stage, format!("{}: {e}", path.display())))?;
    read_doa_csv(file).input(stage)
}

pub fn write_doa(path: &Path, rows: &[DoaRow], stage: &str) -> Outcome<()> {
    let file = File::create(path).map_err(|e| Failure::input(stage, format!("{}: {e}", path.display())))?;
    edgeloc_core::eval::write_doa_csv(BufWriter::new(file), rows).internal(stage)
}

pub fn write_text(path: &Path, text: &str, stage: &str) -> Outcome<()> {
    std::fs::write(path, text).map_err(|e| Failure::input(stage, format!("{}: {e}", path.display())))
}

pub fn weight_source(cfg: &RunConfig) -> WeightSource {
    match &cfg.model.weights {
        Some(p) => WeightSource::File(p.clone()),
        None => WeightSource::Random {
            config: cfg.net_config(),
            seed: cfg.model.seed,
        },
    }
}
