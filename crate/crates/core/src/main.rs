use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;

use mvlandmark::camera::ViewSamplingConfig;
use mvlandmark::consensus::RansacConfig;
use mvlandmark::curvature::{CurvatureField, DEFAULT_RADIUS};
use mvlandmark::detector::{save_detections, OracleConfig, DEFAULT_OUTLIER_SPREAD, DEFAULT_THRESHOLD};
use mvlandmark::mesh::load_mesh;
use mvlandmark::pipeline::{
    evaluate, export_dataset, load_results, run_pipeline, view_sweep, write_json, DetectorSource, ExportConfig,
    LandmarkSet, PipelineConfig, PipelineError,
};
use mvlandmark::render::ChannelSet;

/// Multi-view consensus placement of 3D landmarks on triangle meshes.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render sampled views and write images, heatmaps and metadata.
    RenderExport(ExportArgs),
    /// Detect, fuse and snap landmarks; score them when ground truth is given.
    Place(PlaceArgs),
    /// Score a results file against ground truth.
    Evaluate(EvaluateArgs),
    /// Mean error as a function of the number of views.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct ViewArgs {
    /// Mesh file (.obj or .ply).
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long, default_value_t = 100)]
    views: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Half angle in degrees of the cap cameras are drawn from.
    #[arg(long, default_value_t = 60.0)]
    cap_angle: f64,
    /// Approximate facing direction of the scan, as x,y,z.
    #[arg(long, default_value = "0,0,1", value_parser = parse_axis)]
    frontal_axis: Vector3<f64>,
    /// Neighborhood radius (mm) for curvature estimation.
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    curvature_radius: f64,
    /// Precomputed curvature sidecar instead of estimating it.
    #[arg(long)]
    curvature: Option<PathBuf>,
}

impl ViewArgs {
    fn sampling(&self) -> ViewSamplingConfig {
        ViewSamplingConfig {
            view_count: self.views,
            frontal_axis: self.frontal_axis,
            cap_half_angle: self.cap_angle,
            rng_seed: self.seed,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    view: ViewArgs,
    /// Ground-truth landmark JSON.
    #[arg(long)]
    landmarks: PathBuf,
    /// Heatmap Gaussian width in pixels.
    #[arg(long, default_value_t = 5.0)]
    sigma: f64,
    #[arg(long, default_value = "geometry,depth,curvature")]
    channels: ChannelSet,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum DetectorKind {
    Oracle,
    Heatmaps,
}

#[derive(Args)]
struct PlaceArgs {
    #[command(flatten)]
    view: ViewArgs,
    /// Ground-truth landmark JSON; required by the oracle detector.
    #[arg(long)]
    landmarks: Option<PathBuf>,
    /// Channels rendered per view by the oracle path.
    #[arg(long, default_value = "depth")]
    channels: ChannelSet,
    #[arg(long, value_enum, default_value = "oracle")]
    detector: DetectorKind,
    /// Dataset directory written by render-export, for the heatmap detector.
    #[arg(long)]
    heatmaps: Option<PathBuf>,
    /// JSON-lines detections; overrides --detector.
    #[arg(long)]
    detections: Option<PathBuf>,
    /// Heatmap maxima at or below this are ignored.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Oracle Gaussian noise in pixels.
    #[arg(long, default_value_t = 0.0)]
    oracle_noise: f64,
    #[arg(long, default_value_t = 0.0)]
    oracle_outlier_rate: f64,
    /// Oracle outlier radius in pixels.
    #[arg(long, default_value_t = DEFAULT_OUTLIER_SPREAD)]
    oracle_outlier_spread: f64,
    #[arg(long, default_value_t = 0.0)]
    oracle_dropout: f64,
    #[arg(long, default_value_t = 500)]
    ransac_iters: usize,
    /// Inlier ray distance in mm.
    #[arg(long, default_value_t = 2.0)]
    ransac_threshold: f64,
    #[arg(long, default_value_t = 3)]
    min_inliers: usize,
    #[arg(long)]
    out: PathBuf,
}

impl PlaceArgs {
    fn config(&self) -> Result<PipelineConfig, PipelineError> {
        let detector = if let Some(path) = &self.detections {
            DetectorSource::Detections(path.clone())
        } else {
            match self.detector {
                DetectorKind::Oracle => DetectorSource::Oracle(OracleConfig {
                    noise_sigma: self.oracle_noise,
                    outlier_rate: self.oracle_outlier_rate,
                    outlier_spread: self.oracle_outlier_spread,
                    dropout_rate: self.oracle_dropout,
                    rng_seed: self.view.seed,
                }),
                DetectorKind::Heatmaps => DetectorSource::Heatmaps {
                    dir: self
                        .heatmaps
                        .clone()
                        .ok_or_else(|| PipelineError::Config("--detector heatmaps needs --heatmaps DIR".into()))?,
                    threshold: self.threshold,
                },
            }
        };
        Ok(PipelineConfig {
            sampling: self.view.sampling(),
            channels: self.channels.clone(),
            curvature_radius: self.view.curvature_radius,
            detector,
            ransac: RansacConfig {
                iterations: self.ransac_iters,
                inlier_threshold: self.ransac_threshold,
                min_inliers: self.min_inliers,
                rng_seed: self.view.seed,
            },
        })
    }
}

#[derive(Args)]
struct EvaluateArgs {
    /// Results JSON written by `place`.
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    landmarks: PathBuf,
    /// Also write report.json here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    place: PlaceArgs,
    /// View counts to evaluate; each is a prefix of the largest.
    #[arg(long, value_delimiter = ',', default_value = "25,50,75,100")]
    counts: Vec<usize>,
}

fn parse_axis(s: &str) -> Result<Vector3<f64>, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y, z] if parts.iter().all(|v| v.is_finite()) => Ok(Vector3::new(x, y, z)),
        _ => Err("expected three finite numbers x,y,z".into()),
    }
}

fn create_dir(dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(|source| PipelineError::Output {
        path: dir.to_path_buf(),
        source,
    })
}

fn load_curvature(path: Option<&Path>) -> Result<Option<CurvatureField>, PipelineError> {
    path.map(|p| CurvatureField::load_sidecar(p).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display()))))
        .transpose()
}

fn render_export(args: &ExportArgs) -> Result<(), PipelineError> {
    let mesh = load_mesh(&args.view.mesh).map_err(PipelineError::Mesh)?;
    let gt = LandmarkSet::load(&args.landmarks)?;
    let curvature = load_curvature(args.view.curvature.as_deref())?;
    let config = ExportConfig {
        sampling: args.view.sampling(),
        channels: args.channels.clone(),
        sigma: args.sigma,
        curvature_radius: args.view.curvature_radius,
    };
    let meta = export_dataset(&mesh, &gt, &config, curvature.as_ref(), &args.out)?;
    println!("wrote {} views to {}", meta.len(), args.out.display());
    Ok(())
}

fn place(args: &PlaceArgs) -> Result<bool, PipelineError> {
    let config = args.config()?;
    if args.view.curvature.is_some() {
        return Err(PipelineError::Config("--curvature is only used by render-export".into()));
    }
    let mesh = load_mesh(&args.view.mesh).map_err(PipelineError::Mesh)?;
    let gt = args.landmarks.as_deref().map(LandmarkSet::load).transpose()?;
    let out = run_pipeline(&mesh, gt.as_ref(), &config)?;
    create_dir(&args.out)?;
    write_json(&args.out.join("results.json"), &out.results)?;
    write_json(&args.out.join("cameras.json"), &out.cameras)?;
    save_detections(&out.detections, args.out.join("detections.jsonl")).map_err(PipelineError::Detection)?;
    let placed = out.results.iter().filter(|r| r.is_placed()).count();
    println!("placed {placed} of {} landmarks", out.results.len());
    if let Some(report) = &out.report {
        write_json(&args.out.join("report.json"), report)?;
        if let Some(mean) = report.overall_mean_mm {
            println!("mean error {mean:.4} mm, {} missing", report.missing);
        }
    }
    Ok(placed > 0 || out.results.is_empty())
}

fn evaluate_cmd(args: &EvaluateArgs) -> Result<(), PipelineError> {
    let results = load_results(&args.results)?;
    let gt = LandmarkSet::load(&args.landmarks)?;
    let report = evaluate(&results, &gt).map_err(PipelineError::Evaluation)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable report"));
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_json(&dir.join("report.json"), &report)?;
    }
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<(), PipelineError> {
    let config = args.place.config()?;
    let mesh = load_mesh(&args.place.view.mesh).map_err(PipelineError::Mesh)?;
    let path = args
        .place
        .landmarks
        .as_deref()
        .ok_or_else(|| PipelineError::Config("sweep needs --landmarks".into()))?;
    let gt = LandmarkSet::load(path)?;
    let rows = view_sweep(&mesh, &gt, &args.counts, &config)?;
    create_dir(&args.place.out)?;
    write_json(&args.place.out.join("sweep.json"), &rows)?;
    println!("{:>6}  {:>12}  {:>7}", "views", "mean_mm", "missing");
    for r in &rows {
        let mean = r.mean_error_mm.map_or("-".to_string(), |m| format!("{m:.4}"));
        println!("{:>6}  {:>12}  {:>7}", r.view_count, mean, r.missing);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::RenderExport(a) => render_export(a).map(|_| true),
        Command::Place(a) => place(a),
        Command::Evaluate(a) => evaluate_cmd(a).map(|_| true),
        Command::Sweep(a) => sweep(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: no landmark could be placed");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
