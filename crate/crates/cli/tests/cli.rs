use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use edgeloc_core::config::RunConfig;
use edgeloc_core::cost::ROOFLINE_HEADER;
use edgeloc_core::eval::{read_doa_csv, DoaRow};
use edgeloc_core::geometry::{direction_from_angles, CandidateGrid};
use serde_json::Value;

fn edgeloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edgeloc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, extra_model: &str) -> PathBuf {
    let array = repo_root().join("arrays/default12.toml");
    let text = format!(
        r#"version = 1
[array]
path = "{}"
[srp]
method = "lc-edge"
[model]
variant = "em"
seed = 11
{extra_model}
[scene]
room = [6.0, 5.0, 3.0]
t60 = 0.0
array_center = [2.0, 2.0, 1.5]
duration_s = 2.0
seed = 3
sources = [{{ start_s = 0.0, position = [4.5, 3.5, 1.6] }}]
[output]
dir = "out"
"#,
        array.display()
    );
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn read_rows(path: &Path) -> Vec<DoaRow> {
    read_doa_csv(std::fs::File::open(path).unwrap()).unwrap()
}

fn cell(grid: &CandidateGrid, row: &DoaRow) -> (usize, usize) {
    grid.cell_of(&direction_from_angles(
        row.elevation_deg.to_radians(),
        row.azimuth_deg.to_radians(),
    ))
}

#[test]
fn every_subcommand_has_help() {
    for sub in ["synth", "srp", "infer", "eval", "cost", "bench", "run"] {
        let out = edgeloc(&[sub, "--help"]);
        assert!(out.status.success(), "{sub} --help");
        assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"));
    }
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(edgeloc(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("x.wav");
    let out = edgeloc(&["srp", "--input", wav.to_str().unwrap(), "--grid", "8by16", "--out", "y.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let out = edgeloc(&["srp", "--input", wav.to_str().unwrap(), "--out", "y.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("srp:"));
}

#[test]
fn pipeline_localizes_anechoic_source() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let out = edgeloc(&["run", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("WARNING"));
    let out_dir = dir.path().join("out");
    let grid = CandidateGrid::new(8, 16).unwrap();
    let truth = read_rows(&out_dir.join("truth.csv"));
    let srp = read_rows(&out_dir.join("srp_doa.csv"));
    assert_eq!(truth.len(), srp.len());
    for (t, s) in truth.iter().zip(&srp) {
        assert!(grid.within_one_cell(cell(&grid, t), cell(&grid, s)), "frame {}", t.frame_index);
    }
    let metrics: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("metrics.json")).unwrap()).unwrap();
    assert!(metrics["srp_argmax"]["rmsae_deg"].as_f64().unwrap() < 22.5);
    assert_eq!(metrics["network"]["frames"], Value::from(truth.len()));
}

#[test]
fn run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = edgeloc(&["run", "--config", config.to_str().unwrap(), "--out-dir", d.to_str().unwrap()]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for name in ["mix.wav", "truth.csv", "srp.csv", "srp_doa.csv", "doa.csv", "metrics.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn missing_weights_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "weights = \"missing.c3de\"");
    let out = edgeloc(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("infer: weights not found"), "{}", stderr(&out));
}

#[test]
fn staged_commands_agree_across_map_formats() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
    let out = edgeloc(&[
        "synth", "--room", "7,6,3", "--src", "5.5,4.5,1.7", "--src", "1.0:1.2,5.0,2.2", "--array-center", "3,3,1.4",
        "--beta", "0.3", "--max-order", "2", "--snr", "25", "--seed", "2", "--duration", "2", "--out", &p("mix.wav"),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    let frames = summary["frames"].as_u64().unwrap() as usize;
    assert_eq!(read_rows(&dir.path().join("mix.truth.csv")).len(), frames);

    for target in ["maps.csv", "maps.c3de"] {
        let out = edgeloc(&["srp", "--input", &p("mix.wav"), "--method", "lc", "--grid", "4x8", "--out", &p(target)]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let csv = std::fs::read_to_string(dir.path().join("maps.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 3 + 32);
    assert_eq!(lines.count(), frames);

    for (input, output) in [("maps.csv", "doa_csv.csv"), ("maps.c3de", "doa_bin.csv")] {
        let out = edgeloc(&["infer", "--input", &p(input), "--grid", "4x8", "--variant", "es", "--seed", "5", "--out", &p(output)]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(
        std::fs::read(dir.path().join("doa_csv.csv")).unwrap(),
        std::fs::read(dir.path().join("doa_bin.csv")).unwrap()
    );

    std::fs::write(dir.path().join("vad.csv"), "frame_index,active\n0,1\n1,0\n2,1\n").unwrap();
    let out = edgeloc(&[
        "eval", "--truth", &p("mix.truth.csv"), "--estimate", &p("doa_csv.csv"), "--vad", &p("vad.csv"), "--grid", "4x8",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let metrics: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(metrics["scored_frames"], Value::from(2));
    assert_eq!(metrics["masked"], Value::Bool(true));
}

#[test]
fn cost_reports_in_both_formats() {
    let out = edgeloc(&["cost", "--out", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), ROOFLINE_HEADER);
    assert_eq!(text.lines().count(), 1 + 16);

    let out = edgeloc(&["cost", "--out", "json"]);
    let rows: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 16);
    let em_edge = rows.iter().find(|r| r["label"] == "em+lc-edge").unwrap();
    let mflops = em_edge["flops_per_second"].as_f64().unwrap() / 1e6;
    assert!((mflops - 127.1).abs() / 127.1 < 0.15);
}

#[test]
fn bench_report_matches_schema() {
    let out = edgeloc(&["bench", "--frames", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(repo_root().join("docs/bench.schema.json")).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(&report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
    assert_eq!(report["equivalence"]["lc_vs_lc_edge_argmax_identical"], Value::Bool(true));
    assert!(report["equivalence"]["lc_vs_lc_edge_max_abs_diff"].as_f64().unwrap() < 1e-6);
}

#[test]
fn shipped_configs_are_valid() {
    for entry in std::fs::read_dir(repo_root().join("configs")).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.array().unwrap();
        cfg.scene.as_ref().unwrap().scene().unwrap();
    }
}
