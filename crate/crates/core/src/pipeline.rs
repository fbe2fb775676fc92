//! End-to-end driver: sample cameras, render, detect, fuse, snap and score.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Point3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{sample_cameras, CameraError, CameraSpec, ViewSamplingConfig};
use crate::consensus::{place_landmarks, ConsensusError, ConsensusResult, RansacConfig};
use crate::curvature::{estimate_curvature_field, CurvatureField, DEFAULT_RADIUS};
use crate::detector::{
    decode_heatmaps, load_detections, oracle_detect, Detection2D, DetectorError, HeatmapStack, OracleConfig,
    DEFAULT_THRESHOLD,
};
use crate::export::{export_training_view, load_metadata, DatasetWriter, ExportError, ViewMetadata};
use crate::mesh::{load_mesh, MeshError, Octree, TriangleMesh};
use crate::render::{render_view, Channel, ChannelSet, RenderError, RenderedView};

/// Views rendered at once during export; bounds peak memory.
const EXPORT_BATCH: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("loading mesh: {0}")]
    Mesh(#[source] MeshError),
    #[error("loading landmarks {path}: {message}")]
    Landmarks { path: PathBuf, message: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error("camera sampling: {0}")]
    Cameras(#[source] CameraError),
    #[error("curvature estimation: {0}")]
    Curvature(#[source] MeshError),
    #[error("surface index: {0}")]
    Octree(#[source] MeshError),
    #[error("rendering view {view}: {source}")]
    Render {
        view: usize,
        #[source]
        source: RenderError,
    },
    #[error("detection: {0}")]
    Detection(#[source] DetectorError),
    #[error("reading dataset: {0}")]
    Dataset(#[source] ExportError),
    #[error("export: {0}")]
    Export(#[source] ExportError),
    #[error("consensus: {0}")]
    Consensus(#[source] ConsensusError),
    #[error("evaluation: {0}")]
    Evaluation(#[source] EvaluationError),
    #[error("{path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    /// 2 for unusable inputs, 3 for failures inside the pipeline.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Mesh(_)
            | PipelineError::Landmarks { .. }
            | PipelineError::Config(_)
            | PipelineError::Detection(_)
            | PipelineError::Dataset(_)
            | PipelineError::Evaluation(_) => 2,
            // every render error means a requested channel lacks its data
            PipelineError::Render { .. } => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkEntry {
    pub id: usize,
    pub name: String,
    pub xyz: [f64; 3],
}

/// Ground-truth landmarks: `{schema_name, landmarks: [{id, name, xyz}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSet {
    pub schema_name: String,
    pub landmarks: Vec<LandmarkEntry>,
}

impl LandmarkSet {
    pub fn validate(&self) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for l in &self.landmarks {
            if !seen.insert(l.id) {
                return Err(format!("duplicate landmark id {}", l.id));
            }
            if l.xyz.iter().any(|c| !c.is_finite()) {
                return Err(format!("landmark {} has non-finite coordinates", l.id));
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let err = |message: String| PipelineError::Landmarks {
            path: path.to_path_buf(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let set: Self = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        set.validate().map_err(err)?;
        Ok(set)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        write_json(path.as_ref(), self)
    }

    pub fn points(&self) -> Vec<(usize, Point3<f64>)> {
        self.landmarks.iter().map(|l| (l.id, Point3::from(l.xyz))).collect()
    }

    pub fn ids(&self) -> Vec<usize> {
        self.landmarks.iter().map(|l| l.id).collect()
    }

    /// Placed surface points of `results` as a landmark set.
    pub fn from_results(schema_name: &str, results: &[ConsensusResult]) -> Self {
        Self {
            schema_name: schema_name.to_string(),
            landmarks: results
                .iter()
                .filter_map(|r| {
                    r.surface_point.map(|xyz| LandmarkEntry {
                        id: r.landmark_id,
                        name: format!("L{}", r.landmark_id),
                        xyz,
                    })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvaluationError {
    #[error("no landmark ids shared between results and ground truth")]
    NoOverlap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkStats {
    pub landmark_id: usize,
    pub mean_error_mm: f64,
    /// Sample standard deviation; zero when `n == 1`.
    pub sd_error_mm: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub per_landmark: Vec<LandmarkStats>,
    /// Mean over all placed landmarks, i.e. per-landmark means weighted by `n`.
    pub overall_mean_mm: Option<f64>,
    /// Ground-truth landmarks with no placement, summed over meshes.
    pub missing: usize,
}

/// Euclidean surface-point errors keyed by landmark id, for landmarks
/// placed in `results` and present in `gt`.
pub fn landmark_errors(results: &[ConsensusResult], gt: &LandmarkSet) -> BTreeMap<usize, f64> {
    let truth: BTreeMap<usize, Point3<f64>> = gt.points().into_iter().collect();
    results
        .iter()
        .filter_map(|r| {
            let t = truth.get(&r.landmark_id)?;
            Some((r.landmark_id, (r.surface_point()? - t).norm()))
        })
        .collect()
}

/// Scores one mesh.
pub fn evaluate(results: &[ConsensusResult], gt: &LandmarkSet) -> Result<EvaluationReport, EvaluationError> {
    evaluate_many(&[(results, gt)])
}

/// Pools errors over several meshes, per landmark id.
pub fn evaluate_many(runs: &[(&[ConsensusResult], &LandmarkSet)]) -> Result<EvaluationReport, EvaluationError> {
    let mut errors: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut missing = 0;
    let mut overlap = false;
    for (results, gt) in runs {
        let result_ids: BTreeSet<usize> = results.iter().map(|r| r.landmark_id).collect();
        overlap |= gt.landmarks.iter().any(|l| result_ids.contains(&l.id));
        let errs = landmark_errors(results, gt);
        missing += gt.landmarks.iter().filter(|l| !errs.contains_key(&l.id)).count();
        for (id, e) in errs {
            errors.entry(id).or_default().push(e);
        }
    }
    if !overlap {
        return Err(EvaluationError::NoOverlap);
    }
    let per_landmark: Vec<LandmarkStats> = errors
        .into_iter()
        .map(|(id, e)| {
            let n = e.len();
            let mean = e.iter().sum::<f64>() / n as f64;
            let sd = if n > 1 {
                (e.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            LandmarkStats {
                landmark_id: id,
                mean_error_mm: mean,
                sd_error_mm: sd,
                n,
            }
        })
        .collect();
    let total: usize = per_landmark.iter().map(|s| s.n).sum();
    let overall_mean_mm = (total > 0)
        .then(|| per_landmark.iter().map(|s| s.mean_error_mm * s.n as f64).sum::<f64>() / total as f64);
    Ok(EvaluationReport {
        per_landmark,
        overall_mean_mm,
        missing,
    })
}

/// Where 2D detections come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DetectorSource {
    /// Ground-truth projection with simulated errors; needs ground truth.
    Oracle(OracleConfig),
    /// Heatmap stacks and cameras from an exported dataset directory.
    Heatmaps { dir: PathBuf, threshold: f64 },
    /// JSON-lines detections for the cameras given by the sampling config.
    Detections(PathBuf),
}

impl DetectorSource {
    pub fn heatmaps(dir: impl Into<PathBuf>) -> Self {
        DetectorSource::Heatmaps {
            dir: dir.into(),
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub sampling: ViewSamplingConfig,
    /// Channels rendered per view; only used with the oracle detector.
    pub channels: ChannelSet,
    pub curvature_radius: f64,
    pub detector: DetectorSource,
    pub ransac: RansacConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            sampling: ViewSamplingConfig::default(),
            channels: ChannelSet::new([Channel::Depth]),
            curvature_radius: DEFAULT_RADIUS,
            detector: DetectorSource::Oracle(OracleConfig::default()),
            ransac: RansacConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub cameras: Vec<CameraSpec>,
    pub detections: Vec<Detection2D>,
    pub results: Vec<ConsensusResult>,
    pub report: Option<EvaluationReport>,
}

/// Cameras, detections and expected landmark ids before fusion.
struct Observations {
    cameras: Vec<CameraSpec>,
    detections: Vec<Detection2D>,
    landmark_ids: Vec<usize>,
}

pub fn run_pipeline(
    mesh: &TriangleMesh,
    gt: Option<&LandmarkSet>,
    config: &PipelineConfig,
) -> Result<PipelineOutput, PipelineError> {
    let obs = observe(mesh, gt, config)?;
    let octree = Octree::with_defaults(mesh).map_err(PipelineError::Octree)?;
    let results = place_landmarks(mesh, &octree, &obs.cameras, &obs.detections, &obs.landmark_ids, &config.ransac)
        .map_err(PipelineError::Consensus)?;
    let report = gt
        .map(|gt| evaluate(&results, gt))
        .transpose()
        .map_err(PipelineError::Evaluation)?;
    Ok(PipelineOutput {
        cameras: obs.cameras,
        detections: obs.detections,
        results,
        report,
    })
}

/// Loads inputs from disk and runs the pipeline.
pub fn run_pipeline_from_paths(
    mesh_path: impl AsRef<Path>,
    landmarks_path: Option<&Path>,
    config: &PipelineConfig,
) -> Result<PipelineOutput, PipelineError> {
    let mesh = load_mesh(mesh_path).map_err(PipelineError::Mesh)?;
    let gt = landmarks_path.map(LandmarkSet::load).transpose()?;
    run_pipeline(&mesh, gt.as_ref(), config)
}

fn observe(mesh: &TriangleMesh, gt: Option<&LandmarkSet>, config: &PipelineConfig) -> Result<Observations, PipelineError> {
    match &config.detector {
        DetectorSource::Oracle(oracle) => {
            let gt = gt.ok_or_else(|| PipelineError::Config("the oracle detector needs ground-truth landmarks".into()))?;
            oracle.validate().map_err(PipelineError::Detection)?;
            let cameras = sample_cameras(mesh, &config.sampling).map_err(PipelineError::Cameras)?;
            let curvature = curvature_if_needed(mesh, &config.channels, None, config.curvature_radius)?;
            let points = gt.points();
            let per_view: Vec<Vec<Detection2D>> = cameras
                .par_iter()
                .enumerate()
                .map(|(view_id, cam)| {
                    let view = render(mesh, cam, view_id, &config.channels, curvature.as_ref())?;
                    oracle_detect(&view, &points, oracle).map_err(PipelineError::Detection)
                })
                .collect::<Result<_, _>>()?;
            Ok(Observations {
                cameras,
                detections: per_view.into_iter().flatten().collect(),
                landmark_ids: gt.ids(),
            })
        }
        DetectorSource::Heatmaps { dir, threshold } => {
            let meta = load_metadata(dir).map_err(PipelineError::Dataset)?;
            let cameras = cameras_from_metadata(&meta)?;
            let mut detections = Vec::new();
            let mut ids = BTreeSet::new();
            for m in &meta {
                let stack = HeatmapStack::load(dir.join(&m.heatmaps)).map_err(PipelineError::Detection)?;
                let stack = stack
                    .with_landmark_ids(m.landmarks.iter().map(|l| l.id).collect())
                    .map_err(PipelineError::Detection)?;
                ids.extend(stack.landmark_ids().iter().copied());
                detections.extend(decode_heatmaps(&stack, *threshold, m.view_id));
            }
            Ok(Observations {
                cameras,
                detections,
                landmark_ids: gt.map_or_else(|| ids.into_iter().collect(), LandmarkSet::ids),
            })
        }
        DetectorSource::Detections(path) => {
            let detections = load_detections(path).map_err(PipelineError::Detection)?;
            let cameras = sample_cameras(mesh, &config.sampling).map_err(PipelineError::Cameras)?;
            let ids: BTreeSet<usize> = detections.iter().map(|d| d.landmark_id).collect();
            Ok(Observations {
                cameras,
                detections,
                landmark_ids: gt.map_or_else(|| ids.into_iter().collect(), LandmarkSet::ids),
            })
        }
    }
}

fn cameras_from_metadata(meta: &[ViewMetadata]) -> Result<Vec<CameraSpec>, PipelineError> {
    let mut by_id: BTreeMap<usize, &CameraSpec> = BTreeMap::new();
    for m in meta {
        m.camera
            .validate()
            .map_err(|e| PipelineError::Config(format!("view {}: {e}", m.view_id)))?;
        if by_id.insert(m.view_id, &m.camera).is_some() {
            return Err(PipelineError::Config(format!("view {} listed twice in metadata", m.view_id)));
        }
    }
    if by_id.keys().copied().ne(0..by_id.len()) {
        return Err(PipelineError::Config("metadata view ids must be 0..N without gaps".into()));
    }
    Ok(by_id.into_values().cloned().collect())
}

fn curvature_if_needed(
    mesh: &TriangleMesh,
    channels: &ChannelSet,
    provided: Option<&CurvatureField>,
    radius: f64,
) -> Result<Option<CurvatureField>, PipelineError> {
    if !channels.contains(Channel::Curvature) {
        return Ok(None);
    }
    match provided {
        Some(field) => Ok(Some(field.clone())),
        None => estimate_curvature_field(mesh, radius)
            .map(Some)
            .map_err(PipelineError::Curvature),
    }
}

fn render(
    mesh: &TriangleMesh,
    camera: &CameraSpec,
    view_id: usize,
    channels: &ChannelSet,
    curvature: Option<&CurvatureField>,
) -> Result<RenderedView, PipelineError> {
    let mut view = render_view(mesh, camera, channels, curvature).map_err(|source| PipelineError::Render {
        view: view_id,
        source,
    })?;
    view.view_id = view_id;
    Ok(view)
}

/// One row of a view-count sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub view_count: usize,
    pub mean_error_mm: Option<f64>,
    pub placed: usize,
    pub missing: usize,
}

/// Places landmarks using the first `n` views for each `n` in `view_counts`.
///
/// Views are drawn once for the largest count; smaller counts use a prefix
/// of the same cameras and detections.
pub fn view_sweep(
    mesh: &TriangleMesh,
    gt: &LandmarkSet,
    view_counts: &[usize],
    config: &PipelineConfig,
) -> Result<Vec<SweepRow>, PipelineError> {
    let max = *view_counts
        .iter()
        .max()
        .ok_or_else(|| PipelineError::Config("view sweep needs at least one view count".into()))?;
    if view_counts.contains(&0) {
        return Err(PipelineError::Config("view counts must be positive".into()));
    }
    let cfg = PipelineConfig {
        sampling: ViewSamplingConfig {
            view_count: max,
            ..config.sampling.clone()
        },
        ..config.clone()
    };
    let obs = observe(mesh, Some(gt), &cfg)?;
    if obs.cameras.len() < max {
        return Err(PipelineError::Config(format!(
            "sweep asks for {max} views but only {} are available",
            obs.cameras.len()
        )));
    }
    let octree = Octree::with_defaults(mesh).map_err(PipelineError::Octree)?;
    view_counts
        .iter()
        .map(|&n| {
            let subset: Vec<Detection2D> = obs.detections.iter().filter(|d| d.view_id < n).copied().collect();
            let results = place_landmarks(mesh, &octree, &obs.cameras[..n], &subset, &obs.landmark_ids, &cfg.ransac)
                .map_err(PipelineError::Consensus)?;
            let report = evaluate(&results, gt).map_err(PipelineError::Evaluation)?;
            Ok(SweepRow {
                view_count: n,
                mean_error_mm: report.overall_mean_mm,
                placed: results.iter().filter(|r| r.is_placed()).count(),
                missing: report.missing,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExportConfig {
    pub sampling: ViewSamplingConfig,
    pub channels: ChannelSet,
    pub sigma: f64,
    pub curvature_radius: f64,
}

impl Default for ExportConfig {
    fn default() -> Self {
        Self {
            sampling: ViewSamplingConfig::default(),
            channels: ChannelSet::new([Channel::Geometry, Channel::Depth, Channel::Curvature]),
            sigma: crate::export::DEFAULT_SIGMA,
            curvature_radius: DEFAULT_RADIUS,
        }
    }
}

/// Renders the sampled views of `mesh` and writes images, heatmaps and
/// metadata into `out_dir`. A precomputed curvature field may be supplied.
pub fn export_dataset(
    mesh: &TriangleMesh,
    gt: &LandmarkSet,
    config: &ExportConfig,
    curvature: Option<&CurvatureField>,
    out_dir: &Path,
) -> Result<Vec<ViewMetadata>, PipelineError> {
    if !(config.sigma > 0.0 && config.sigma.is_finite()) {
        return Err(PipelineError::Config(format!("sigma must be positive, got {}", config.sigma)));
    }
    let cameras = sample_cameras(mesh, &config.sampling).map_err(PipelineError::Cameras)?;
    let field = curvature_if_needed(mesh, &config.channels, curvature, config.curvature_radius)?;
    let points = gt.points();
    let mut writer = DatasetWriter::create(out_dir).map_err(PipelineError::Export)?;
    let mut written = Vec::with_capacity(cameras.len());
    for (batch_index, batch) in cameras.chunks(EXPORT_BATCH).enumerate() {
        let rendered: Vec<_> = batch
            .par_iter()
            .enumerate()
            .map(|(k, cam)| {
                let view = render(mesh, cam, batch_index * EXPORT_BATCH + k, &config.channels, field.as_ref())?;
                let sample = export_training_view(&view, &points, config.sigma).map_err(PipelineError::Export)?;
                Ok((view, sample))
            })
            .collect::<Result<_, PipelineError>>()?;
        for (view, sample) in rendered {
            writer.write(&view, &sample).map_err(PipelineError::Export)?;
            written.push(sample.metadata);
        }
    }
    writer.finish().map_err(PipelineError::Export)?;
    Ok(written)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    fs::write(path, text).map_err(|source| PipelineError::Output {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_results(path: impl AsRef<Path>) -> Result<Vec<ConsensusResult>, PipelineError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::PlacementStatus;
    use crate::mesh::shapes;

    fn sphere_case() -> (TriangleMesh, LandmarkSet) {
        let mesh = shapes::icosphere(100.0, 3);
        let gt = LandmarkSet {
            schema_name: "icosahedron-corners".into(),
            landmarks: mesh.vertices()[..12]
                .iter()
                .enumerate()
                .map(|(i, p)| LandmarkEntry {
                    id: i,
                    name: format!("corner{i}"),
                    xyz: p.coords.into(),
                })
                .collect(),
        };
        (mesh, gt)
    }

    fn placed(id: usize, xyz: [f64; 3]) -> ConsensusResult {
        ConsensusResult {
            landmark_id: id,
            p: Some(xyz),
            surface_point: Some(xyz),
            inlier_views: vec![0, 1, 2],
            rms_residual: Some(0.0),
            ray_count_used: 3,
            status: PlacementStatus::Placed,
        }
    }

    fn gt_of(points: &[(usize, [f64; 3])]) -> LandmarkSet {
        LandmarkSet {
            schema_name: "test".into(),
            landmarks: points
                .iter()
                .map(|(id, xyz)| LandmarkEntry { id: *id, name: String::new(), xyz: *xyz })
                .collect(),
        }
    }

    #[test]
    fn exact_results_score_zero_and_offset_scores_five() {
        let gt = gt_of(&[(0, [1.0, 2.0, 3.0]), (1, [0.0; 3])]);
        let report = evaluate(&[placed(0, [1.0, 2.0, 3.0]), placed(1, [0.0; 3])], &gt).unwrap();
        assert_eq!(report.overall_mean_mm, Some(0.0));
        assert_eq!(report.missing, 0);
        let report = evaluate(&[placed(0, [4.0, 6.0, 3.0])], &gt).unwrap();
        assert_eq!(report.per_landmark[0].mean_error_mm, 5.0);
        assert_eq!(report.missing, 1);
        assert_eq!(evaluate(&[placed(7, [0.0; 3])], &gt), Err(EvaluationError::NoOverlap));
    }

    #[test]
    fn pooled_statistics_match_hand_computation() {
        // landmark 0 errors 3 and 5, landmark 1 error 1 then missing
        let gt = gt_of(&[(0, [0.0; 3]), (1, [0.0; 3])]);
        let a = [placed(0, [3.0, 0.0, 0.0]), placed(1, [0.0, 1.0, 0.0])];
        let b = [placed(0, [0.0, 0.0, 5.0])];
        let report = evaluate_many(&[(&a, &gt), (&b, &gt)]).unwrap();
        let l0 = &report.per_landmark[0];
        assert_eq!((l0.mean_error_mm, l0.n), (4.0, 2));
        assert!((l0.sd_error_mm - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!((report.per_landmark[1].mean_error_mm, report.per_landmark[1].sd_error_mm), (1.0, 0.0));
        assert_eq!(report.overall_mean_mm, Some(3.0));
        assert_eq!(report.missing, 1);
    }

    #[test]
    fn evaluation_is_symmetric() {
        let a = [placed(0, [1.0, 2.0, 3.0]), placed(1, [-4.0, 0.5, 9.0])];
        let b = [placed(0, [0.0, 2.5, 3.0]), placed(1, [-4.0, 0.0, 7.0])];
        let ab = landmark_errors(&a, &LandmarkSet::from_results("b", &b));
        let ba = landmark_errors(&b, &LandmarkSet::from_results("a", &a));
        assert_eq!(ab, ba);
    }

    #[test]
    fn landmark_set_rejects_duplicates() {
        assert!(gt_of(&[(0, [0.0; 3]), (0, [1.0; 3])]).validate().is_err());
        assert!(gt_of(&[(0, [f64::NAN, 0.0, 0.0])]).validate().is_err());
        let text = r#"{"schema_name":"s","landmarks":[{"id":3,"name":"tip","xyz":[1,2,3]}]}"#;
        let set: LandmarkSet = serde_json::from_str(text).unwrap();
        assert_eq!(set.points(), vec![(3, Point3::new(1.0, 2.0, 3.0))]);
    }

    #[test]
    fn zero_noise_oracle_is_exact_and_deterministic() {
        let (mesh, gt) = sphere_case();
        let config = PipelineConfig::default();
        let out = run_pipeline(&mesh, Some(&gt), &config).unwrap();
        let report = out.report.clone().unwrap();
        assert_eq!(report.missing, 0);
        assert!(report.overall_mean_mm.unwrap() < 1e-3);
        let again = run_pipeline(&mesh, Some(&gt), &config).unwrap();
        assert_eq!(
            serde_json::to_string(&out.results).unwrap(),
            serde_json::to_string(&again.results).unwrap()
        );
        assert_eq!(
            serde_json::to_string(&report).unwrap(),
            serde_json::to_string(&again.report.unwrap()).unwrap()
        );
    }

    #[test]
    fn heavy_dropout_still_resolves_everything() {
        let (mesh, gt) = sphere_case();
        let config = PipelineConfig {
            detector: DetectorSource::Oracle(OracleConfig { dropout_rate: 0.5, rng_seed: 3, ..Default::default() }),
            ..Default::default()
        };
        let out = run_pipeline(&mesh, Some(&gt), &config).unwrap();
        assert!(out.results.iter().all(|r| r.is_placed()));
    }

    #[test]
    fn missing_inputs_name_their_stage() {
        let err = run_pipeline_from_paths("/nonexistent/mesh.obj", None, &PipelineConfig::default()).unwrap_err();
        assert!(err.to_string().starts_with("loading mesh"));
        assert_eq!(err.exit_code(), 2);
        let dir = tempfile::tempdir().unwrap();
        let mesh_path = dir.path().join("s.obj");
        crate::mesh::save_obj(&mesh_path, &shapes::icosphere(10.0, 1)).unwrap();
        let err = run_pipeline_from_paths(&mesh_path, Some(&dir.path().join("gt.json")), &PipelineConfig::default())
            .unwrap_err();
        assert!(err.to_string().starts_with("loading landmarks"));
        assert_eq!(err.exit_code(), 2);
        let err = run_pipeline_from_paths(&mesh_path, None, &PipelineConfig::default()).unwrap_err();
        assert!(matches!(err, PipelineError::Config(_)));
    }

    #[test]
    fn sweep_rows_follow_counts() {
        let (mesh, gt) = sphere_case();
        let rows = view_sweep(&mesh, &gt, &[25, 50, 75, 100], &PipelineConfig::default()).unwrap();
        assert_eq!(rows.iter().map(|r| r.view_count).collect::<Vec<_>>(), [25, 50, 75, 100]);
        for r in &rows {
            assert_eq!(r.missing, 0);
            assert!(r.mean_error_mm.unwrap() < 1e-3);
        }
        assert!(view_sweep(&mesh, &gt, &[], &PipelineConfig::default()).is_err());
    }

    #[test]
    fn exported_heatmaps_feed_the_pipeline() {
        let (mesh, gt) = sphere_case();
        let dir = tempfile::tempdir().unwrap();
        let export = ExportConfig {
            sampling: ViewSamplingConfig { view_count: 12, rng_seed: 4, ..Default::default() },
            channels: "geometry,depth".parse().unwrap(),
            ..Default::default()
        };
        let meta = export_dataset(&mesh, &gt, &export, None, dir.path()).unwrap();
        assert_eq!(meta.len(), 12);
        let config = PipelineConfig {
            detector: DetectorSource::heatmaps(dir.path()),
            ransac: RansacConfig { inlier_threshold: 3.0, ..Default::default() },
            ..Default::default()
        };
        let out = run_pipeline(&mesh, Some(&gt), &config).unwrap();
        assert_eq!(out.cameras, sample_cameras(&mesh, &export.sampling).unwrap());
        let report = out.report.unwrap();
        // pixel-center quantization only
        let half_diag_px = std::f64::consts::FRAC_1_SQRT_2 * out.cameras[0].pixel_size();
        assert!(report.overall_mean_mm.unwrap() <= half_diag_px, "{report:?}");
    }
}
