//! Drives the command-line tool end to end.

use std::path::Path;
use std::process::Command;

use mvlandmark::consensus::ConsensusResult;
use mvlandmark::mesh::{save_obj, shapes};
use mvlandmark::pipeline::{EvaluationReport, LandmarkEntry, LandmarkSet, SweepRow};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mvlandmark"))
}

fn fixture(dir: &Path) {
    let mesh = shapes::icosphere(100.0, 3);
    save_obj(dir.join("sphere.obj"), &mesh).unwrap();
    LandmarkSet {
        schema_name: "corners".into(),
        landmarks: mesh.vertices()[..6]
            .iter()
            .enumerate()
            .map(|(i, p)| LandmarkEntry {
                id: i,
                name: format!("c{i}"),
                xyz: p.coords.into(),
            })
            .collect(),
    }
    .save(dir.join("gt.json"))
    .unwrap();
}

fn run(cmd: &mut Command) -> (i32, String) {
    let out = cmd.output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn read<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn place_then_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    let (code, err) = run(bin().args(["place", "--views", "30", "--seed", "4"]).args([
        "--mesh".as_ref(),
        d.join("sphere.obj").as_os_str(),
        "--landmarks".as_ref(),
        d.join("gt.json").as_os_str(),
        "--out".as_ref(),
        d.join("out").as_os_str(),
    ]));
    assert_eq!(code, 0, "{err}");
    let results: Vec<ConsensusResult> = read(&d.join("out/results.json"));
    assert_eq!(results.len(), 6);
    assert!(results.iter().all(|r| r.is_placed()));
    let report: EvaluationReport = read(&d.join("out/report.json"));
    assert!(report.overall_mean_mm.unwrap() < 1e-3);
    let text = std::fs::read_to_string(d.join("out/detections.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 30 * 6);

    let (code, err) = run(bin().arg("evaluate").args([
        "--results".as_ref(),
        d.join("out/results.json").as_os_str(),
        "--landmarks".as_ref(),
        d.join("gt.json").as_os_str(),
        "--out".as_ref(),
        d.join("eval").as_os_str(),
    ]));
    assert_eq!(code, 0, "{err}");
    let again: EvaluationReport = read(&d.join("eval/report.json"));
    assert_eq!(again, report);

    // detections file path reuses the sampled cameras
    let (code, err) = run(bin().args(["place", "--views", "30", "--seed", "4"]).args([
        "--mesh".as_ref(),
        d.join("sphere.obj").as_os_str(),
        "--detections".as_ref(),
        d.join("out/detections.jsonl").as_os_str(),
        "--out".as_ref(),
        d.join("redo").as_os_str(),
    ]));
    assert_eq!(code, 0, "{err}");
    let redo: Vec<ConsensusResult> = read(&d.join("redo/results.json"));
    assert_eq!(redo, results);
}

#[test]
fn export_then_place_from_heatmaps() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    let (code, err) = run(bin()
        .args(["render-export", "--views", "8", "--seed", "2", "--sigma", "4", "--channels", "geometry,depth"])
        .args([
            "--mesh".as_ref(),
            d.join("sphere.obj").as_os_str(),
            "--landmarks".as_ref(),
            d.join("gt.json").as_os_str(),
            "--out".as_ref(),
            d.join("data").as_os_str(),
        ]));
    assert_eq!(code, 0, "{err}");
    assert!(d.join("data/view_0007_depth.png").is_file());
    assert!(d.join("data/view_0007.hmp").is_file());
    let (code, err) = run(bin()
        .args(["place", "--detector", "heatmaps", "--ransac-threshold", "3"])
        .args([
            "--mesh".as_ref(),
            d.join("sphere.obj").as_os_str(),
            "--landmarks".as_ref(),
            d.join("gt.json").as_os_str(),
            "--heatmaps".as_ref(),
            d.join("data").as_os_str(),
            "--out".as_ref(),
            d.join("out").as_os_str(),
        ]));
    assert_eq!(code, 0, "{err}");
    let report: EvaluationReport = read(&d.join("out/report.json"));
    assert_eq!(report.missing, 0);
    assert!(report.overall_mean_mm.unwrap() < 1.0);
}

#[test]
fn sweep_writes_one_row_per_count() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    let (code, err) = run(bin().args(["sweep", "--counts", "10,20", "--oracle-noise", "1"]).args([
        "--mesh".as_ref(),
        d.join("sphere.obj").as_os_str(),
        "--landmarks".as_ref(),
        d.join("gt.json").as_os_str(),
        "--out".as_ref(),
        d.join("sweep").as_os_str(),
    ]));
    assert_eq!(code, 0, "{err}");
    let rows: Vec<SweepRow> = read(&d.join("sweep/sweep.json"));
    assert_eq!(rows.iter().map(|r| r.view_count).collect::<Vec<_>>(), [10, 20]);
}

#[test]
fn exit_codes_distinguish_input_and_pipeline_failures() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    let mesh = d.join("sphere.obj");
    let gt = d.join("gt.json");
    let out = d.join("out");

    let (code, err) = run(bin().args(["place", "--mesh"]).arg(d.join("missing.obj")).arg("--landmarks").arg(&gt).arg("--out").arg(&out));
    assert_eq!(code, 2);
    assert!(err.contains("loading mesh"), "{err}");

    let (code, err) = run(bin().args(["place", "--mesh"]).arg(&mesh).arg("--landmarks").arg(d.join("nope.json")).arg("--out").arg(&out));
    assert_eq!(code, 2);
    assert!(err.contains("loading landmarks"), "{err}");

    let (code, _) = run(bin().args(["place", "--channels", "normals", "--mesh"]).arg(&mesh).arg("--out").arg(&out));
    assert_eq!(code, 2);

    let (code, _) = run(bin().args(["place", "--detector", "heatmaps", "--mesh"]).arg(&mesh).arg("--out").arg(&out));
    assert_eq!(code, 2);

    // every landmark falls below the inlier quorum
    let (code, err) = run(bin()
        .args(["place", "--views", "5", "--min-inliers", "6", "--mesh"])
        .arg(&mesh)
        .arg("--landmarks")
        .arg(&gt)
        .arg("--out")
        .arg(&out));
    assert_eq!(code, 3, "{err}");
}
