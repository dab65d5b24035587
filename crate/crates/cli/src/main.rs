mod bench;
mod failure;
mod stages;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use edgeloc_core::config::{RunConfig, SceneSection};
use edgeloc_core::cost::{dnn_cost, report, roofline_csv, roofline_json, srp_cost, FrameParams};
use edgeloc_core::geometry::{n_samp, Vec3};
use edgeloc_core::net::{build_graph, NetConfig, Variant};
use edgeloc_core::signal::{load_wav, write_wav};
use edgeloc_core::simroom::Segment;
use edgeloc_core::srp::SrpMethod;
use serde_json::json;

use failure::{Failure, Outcome, StageExt};
use stages::{MapFormat, WeightSource};

#[derive(Parser)]
#[command(name = "edgeloc", version, about = "SRP-PHAT features, causal 3D-CNN DOA inference and cost modelling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a shoebox-room scene to a multichannel WAV plus per-frame ground truth.
    Synth(SynthArgs),
    /// Compute SRP maps for every frame of a multichannel WAV.
    Srp(SrpArgs),
    /// Run the localization network over SRP maps.
    Infer(InferArgs),
    /// Score a DOA track against ground truth.
    Eval(EvalArgs),
    /// Per-frame FLOPs, bandwidth and on-chip memory for every variant and SRP method.
    Cost(CostArgs),
    /// Time each SRP method and network inference on a synthetic clip.
    Bench(BenchArgs),
    /// Chain synth, srp, infer and eval from one config file.
    Run(RunArgs),
}

/// Signal and geometry settings; flags override the config file.
#[derive(Args, Clone, Default)]
struct SignalArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Microphone array TOML (defaults to the built-in 12-microphone layout).
    #[arg(long)]
    array: Option<PathBuf>,
    /// Candidate grid as RES_ELEVATIONxRES_AZIMUTH, e.g. 8x16.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// Sample rate in Hz.
    #[arg(long)]
    fs: Option<u32>,
    /// Frame length (power of two).
    #[arg(long)]
    k: Option<usize>,
    /// Frame overlap ratio in [0, 1).
    #[arg(long)]
    overlap: Option<f64>,
}

impl SignalArgs {
    fn resolve(&self, stage: &str) -> Outcome<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path).input(stage)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.array {
            cfg.array.path = Some(p.clone());
        }
        if let Some((r1, r2)) = self.grid {
            cfg.grid.res_elevation = r1;
            cfg.grid.res_azimuth = r2;
        }
        if let Some(fs) = self.fs {
            cfg.signal.fs = fs;
        }
        if let Some(k) = self.k {
            cfg.signal.k = k;
        }
        if let Some(o) = self.overlap {
            cfg.signal.overlap = o;
        }
        cfg.validate().input(stage)?;
        Ok(cfg)
    }

    /// Whether the sample rate was pinned by a flag or a config file.
    fn fs_pinned(&self) -> bool {
        self.fs.is_some() || self.config.is_some()
    }
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    signal: SignalArgs,
    /// Room size in metres, X,Y,Z.
    #[arg(long, value_parser = parse_vec3)]
    room: Option<Vec3>,
    /// Target reverberation time in seconds (0 for anechoic).
    #[arg(long, conflicts_with = "beta")]
    t60: Option<f64>,
    /// Wall reflection coefficient in [0, 1].
    #[arg(long)]
    beta: Option<f64>,
    /// Source position X,Y,Z, or START_S:X,Y,Z for a trajectory segment. Repeatable.
    #[arg(long = "src", value_parser = parse_segment)]
    sources: Vec<Segment>,
    /// Array origin in room coordinates (defaults to the room centre).
    #[arg(long, value_parser = parse_vec3)]
    array_center: Option<Vec3>,
    /// Signal-to-noise ratio in dB; omit for a noise-free clip.
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Mono dry source WAV; seeded white noise when omitted.
    #[arg(long)]
    dry: Option<PathBuf>,
    /// Clip length in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Image-source reflection order.
    #[arg(long)]
    max_order: Option<i32>,
    /// Output WAV (32-bit float).
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth CSV (defaults to the WAV path with a .truth.csv suffix).
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct SrpArgs {
    #[command(flatten)]
    signal: SignalArgs,
    /// Multichannel input WAV.
    #[arg(long)]
    input: PathBuf,
    /// fd | td | lc | lc-edge
    #[arg(long)]
    method: Option<SrpMethod>,
    /// Output file: CSV, or the binary tensor format for any other extension.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Tensor,
}

#[derive(Args)]
struct InferArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// SRP maps written by `srp` (CSV or tensor file).
    #[arg(long)]
    input: PathBuf,
    /// Weight file; seeded random weights are used when no file is configured.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// baseline | el | em | es (random weights only).
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    seed: Option<u64>,
    /// Grid of the maps, RES_ELEVATIONxRES_AZIMUTH (CSV input defaults to the config grid).
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// Output DOA CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ground-truth DOA CSV.
    #[arg(long)]
    truth: PathBuf,
    /// Estimated DOA CSV.
    #[arg(long)]
    estimate: PathBuf,
    /// Optional voice-activity CSV (frame_index,active).
    #[arg(long)]
    vad: Option<PathBuf>,
    /// Grid used for the SRP-grid ratio.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// Metrics JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct CostArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    out: ReportFormat,
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of frames in the synthetic clip.
    #[arg(long, default_value_t = 16)]
    frames: usize,
    /// Write the JSON report to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output.dir` from the config.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("`{s}` is not of the form RxA"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let parts = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    match parts[..] {
        [x, y, z] => Ok([x, y, z]),
        _ => Err(format!("`{s}` needs three comma-separated values")),
    }
}

fn parse_segment(s: &str) -> Result<Segment, String> {
    let (start_s, pos) = match s.split_once(':') {
        Some((t, p)) => (t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"))?, p),
        None => (0.0, s),
    };
    Ok(Segment {
        start_s,
        position: parse_vec3(pos)?,
    })
}

fn emit_json(value: &impl serde::Serialize, path: Option<&Path>, stage: &str) -> Outcome<()> {
    let text = serde_json::to_string_pretty(value).internal(stage)?;
    match path {
        Some(p) => stages::write_text(p, &(text + "\n"), stage),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn merge_scene(args: &SynthArgs, base: Option<SceneSection>) -> Outcome<SceneSection> {
    let mut scene = match base {
        Some(s) => s,
        None => {
            let room = args
                .room
                .ok_or_else(|| Failure::input("synth", "--room is required without a [scene] config"))?;
            if args.sources.is_empty() {
                return Err(Failure::input("synth", "at least one --src is required without a [scene] config"));
            }
            SceneSection {
                room,
                t60: None,
                beta: None,
                array_center: [room[0] / 2.0, room[1] / 2.0, room[2] / 2.0],
                duration_s: 2.0,
                snr_db: None,
                seed: 0,
                max_order: None,
                dry: None,
                sources: Vec::new(),
            }
        }
    };
    if let Some(room) = args.room {
        scene.room = room;
    }
    if let Some(t) = args.t60 {
        scene.t60 = Some(t);
        scene.beta = None;
    }
    if let Some(b) = args.beta {
        scene.beta = Some(b);
        scene.t60 = None;
    }
    if !args.sources.is_empty() {
        scene.sources = args.sources.clone();
    }
    if let Some(c) = args.array_center {
        scene.array_center = c;
    }
    if args.snr.is_some() {
        scene.snr_db = args.snr;
    }
    if let Some(s) = args.seed {
        scene.seed = s;
    }
    if args.dry.is_some() {
        scene.dry = args.dry.clone();
    }
    if let Some(d) = args.duration {
        scene.duration_s = d;
    }
    if args.max_order.is_some() {
        scene.max_order = args.max_order;
    }
    Ok(scene)
}

fn cmd_synth(args: SynthArgs) -> Outcome<()> {
    let cfg = args.signal.resolve("synth")?;
    let scene = merge_scene(&args, cfg.scene.clone())?;
    let array = cfg.array().input("synth")?;
    let spec = cfg.frame_spec().input("synth")?;
    let out = stages::synthesize(&scene, &array, cfg.signal.fs, spec)?;
    let truth_path = args
        .truth
        .clone()
        .unwrap_or_else(|| args.out.with_extension("truth.csv"));
    write_wav(&args.out, &out.clip).input("synth")?;
    stages::write_doa(&truth_path, &out.truth, "synth")?;
    emit_json(
        &json!({
            "wav": args.out,
            "truth": truth_path,
            "fs": cfg.signal.fs,
            "channels": out.clip.channel_count(),
            "samples": out.clip.len(),
            "frames": out.truth.len(),
        }),
        None,
        "synth",
    )
}

fn cmd_srp(args: SrpArgs) -> Outcome<()> {
    let mut cfg = args.signal.resolve("srp")?;
    if let Some(m) = args.method {
        cfg.srp.method = m;
    }
    let clip = load_wav(&args.input).input("srp")?;
    if !args.signal.fs_pinned() {
        cfg.signal.fs = clip.sample_rate_hz();
    } else if cfg.signal.fs != clip.sample_rate_hz() {
        return Err(Failure::input(
            "srp",
            format!("{} is sampled at {} Hz, configured {} Hz", args.input.display(), clip.sample_rate_hz(), cfg.signal.fs),
        ));
    }
    let array = cfg.array().input("srp")?;
    let grid = cfg.grid().input("srp")?;
    let spec = cfg.frame_spec().input("srp")?;
    let frames = stages::srp_frames(&clip, cfg.srp.method, &array, &grid, cfg.signal.fs, spec)?;
    let format = match args.format {
        Some(FormatArg::Csv) => MapFormat::Csv,
        Some(FormatArg::Tensor) => MapFormat::Tensor,
        None => MapFormat::from_path(&args.out),
    };
    stages::write_srp(&args.out, &frames, format)?;
    emit_json(
        &json!({
            "out": args.out,
            "format": if format == MapFormat::Csv { "csv" } else { "tensor" },
            "method": cfg.srp.method,
            "frames": frames.len(),
            "res_elevation": grid.res_elevation(),
            "res_azimuth": grid.res_azimuth(),
        }),
        None,
        "srp",
    )
}

fn cmd_infer(args: InferArgs) -> Outcome<()> {
    let cfg = match &args.config {
        Some(p) => RunConfig::load(p).input("infer")?,
        None => RunConfig::default(),
    };
    let grid = args
        .grid
        .or_else(|| args.config.as_ref().map(|_| (cfg.grid.res_elevation, cfg.grid.res_azimuth)));
    let fallback = (cfg.grid.res_elevation, cfg.grid.res_azimuth);
    let frames = stages::read_srp(&args.input, grid, fallback)?;
    let (r1, r2) = (frames[0].res_elevation(), frames[0].res_azimuth());
    let source = match args.weights.clone().or(cfg.model.weights.clone()) {
        Some(p) => WeightSource::File(p),
        None => WeightSource::Random {
            config: NetConfig::variant(args.variant.unwrap_or(cfg.model.variant), r1, r2),
            seed: args.seed.unwrap_or(cfg.model.seed),
        },
    };
    let rows = stages::infer(&frames, &source)?;
    stages::write_doa(&args.out, &rows, "infer")?;
    emit_json(
        &json!({ "out": args.out, "frames": rows.len(), "weights": source.describe() }),
        None,
        "infer",
    )
}

fn cmd_eval(args: EvalArgs) -> Outcome<()> {
    let cfg = match &args.config {
        Some(p) => RunConfig::load(p).input("eval")?,
        None => RunConfig::default(),
    };
    let (r1, r2) = args.grid.unwrap_or((cfg.grid.res_elevation, cfg.grid.res_azimuth));
    let grid = edgeloc_core::geometry::CandidateGrid::new(r1, r2).input("eval")?;
    let truth = stages::read_doa(&args.truth, "eval")?;
    let estimate = stages::read_doa(&args.estimate, "eval")?;
    let metrics = stages::evaluate(&truth, &estimate, args.vad.as_deref(), &grid)?;
    emit_json(&metrics, args.out.as_deref(), "eval")
}

fn cmd_cost(args: CostArgs) -> Outcome<()> {
    let cfg = SignalArgs {
        config: args.config.clone(),
        ..SignalArgs::default()
    }
    .resolve("cost")?;
    let array = cfg.array().input("cost")?;
    let bounds = n_samp(&array, cfg.signal.fs);
    let (r1, r2) = (cfg.grid.res_elevation, cfg.grid.res_azimuth);
    let frame = FrameParams {
        n_mics: array.len(),
        fs: cfg.signal.fs,
        k: cfg.signal.k,
        overlap: cfg.signal.overlap,
    };
    let mut reports = Vec::new();
    for variant in Variant::ALL {
        let graph = build_graph(NetConfig::variant(variant, r1, r2)).input("cost")?;
        let dnn = dnn_cost(&graph);
        for method in SrpMethod::ALL {
            let srp = srp_cost(method, array.len(), cfg.signal.k, r1 * r2, &bounds);
            reports.push(report(format!("{}+{}", variant.name(), method), frame, (r1, r2), &srp, Some(&dnn)));
        }
    }
    let text = match args.out {
        ReportFormat::Csv => roofline_csv(&reports),
        ReportFormat::Json => roofline_json(&reports),
    };
    match &args.output {
        Some(p) => stages::write_text(p, &text, "cost"),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_bench(args: BenchArgs) -> Outcome<()> {
    let cfg = SignalArgs {
        config: args.config.clone(),
        ..SignalArgs::default()
    }
    .resolve("bench")?;
    let report = bench::bench(&cfg, args.frames)?;
    emit_json(&report, args.output.as_deref(), "bench")
}

fn cmd_run(args: RunArgs) -> Outcome<()> {
    let mut cfg = RunConfig::load(&args.config).input("run")?;
    if let Some(dir) = &args.out_dir {
        cfg.output.dir = dir.clone();
    }
    let scene = cfg
        .scene
        .clone()
        .ok_or_else(|| Failure::input("run", "config has no [scene] section"))?;
    let dir = cfg.output.dir.clone();
    std::fs::create_dir_all(&dir).input("run")?;
    let array = cfg.array().input("run")?;
    let grid = cfg.grid().input("run")?;
    let spec = cfg.frame_spec().input("run")?;
    let fs = cfg.signal.fs;

    let synth = stages::synthesize(&scene, &array, fs, spec)?;
    write_wav(dir.join("mix.wav"), &synth.clip).input("synth")?;
    stages::write_doa(&dir.join("truth.csv"), &synth.truth, "synth")?;

    let frames = stages::srp_frames(&synth.clip, cfg.srp.method, &array, &grid, fs, spec)?;
    stages::write_srp(&dir.join("srp.csv"), &frames, MapFormat::Csv)?;
    let srp_rows = stages::argmax_rows(&frames);
    stages::write_doa(&dir.join("srp_doa.csv"), &srp_rows, "srp")?;

    let source = stages::weight_source(&cfg);
    let net_rows = stages::infer(&frames, &source)?;
    stages::write_doa(&dir.join("doa.csv"), &net_rows, "infer")?;

    let network = stages::evaluate(&synth.truth, &net_rows, None, &grid)?;
    let srp_argmax = stages::evaluate(&synth.truth, &srp_rows, None, &grid)?;
    let metrics = json!({
        "srp_method": cfg.srp.method,
        "variant": cfg.model.variant,
        "weights": source.describe(),
        "frames": frames.len(),
        "srp_argmax": srp_argmax,
        "network": network,
    });
    emit_json(&metrics, Some(&dir.join("metrics.json")), "eval")?;
    emit_json(&json!({ "out_dir": dir, "metrics": metrics }), None, "run")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Srp(a) => cmd_srp(a),
        Command::Infer(a) => cmd_infer(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Cost(a) => cmd_cost(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Run(a) => cmd_run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
