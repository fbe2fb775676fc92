//! Training-data export: channel images, Gaussian heatmaps and per-view metadata.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::camera::CameraSpec;
use crate::detector::{DetectorError, HeatmapStack};
use crate::render::{Channel, Landmark2D, RenderedView};

pub const DEFAULT_SIGMA: f64 = 5.0;
pub const METADATA_FILE: &str = "metadata.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("heatmap sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Png {
        path: PathBuf,
        #[source]
        source: png::EncodingError,
    },
    #[error("{path} line {line}: {source}")]
    Metadata {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Heatmap(#[from] DetectorError),
}

/// One line of `metadata.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewMetadata {
    pub view_id: usize,
    pub camera: CameraSpec,
    pub sigma: f64,
    /// Plane `k` of the heatmap file belongs to `landmarks[k]`.
    pub landmarks: Vec<Landmark2D>,
    pub heatmaps: String,
    pub images: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub heatmaps: HeatmapStack,
    pub metadata: ViewMetadata,
}

pub fn view_stem(view_id: usize) -> String {
    format!("view_{view_id:04}")
}

/// Unnormalized Gaussian centered on continuous pixel coordinates `(u0, v0)`,
/// sampled at pixel centers. All zero when the center lies outside the image.
pub fn gaussian_heatmap(width: usize, height: usize, u0: f64, v0: f64, sigma: f64) -> Vec<f32> {
    let mut plane = vec![0.0f32; width * height];
    let inside = u0 >= 0.0 && v0 >= 0.0 && u0 < width as f64 && v0 < height as f64;
    if !inside {
        return plane;
    }
    let k = -0.5 / (sigma * sigma);
    // separable: exp(a + b) = exp(a) exp(b)
    let gu: Vec<f64> = (0..width).map(|c| (k * (c as f64 + 0.5 - u0).powi(2)).exp()).collect();
    for (row, line) in plane.chunks_exact_mut(width).enumerate() {
        let gv = (k * (row as f64 + 0.5 - v0).powi(2)).exp();
        for (px, g) in line.iter_mut().zip(&gu) {
            *px = (gv * g) as f32;
        }
    }
    plane
}

/// Heatmaps and metadata for one rendered view. Occluded landmarks keep
/// their heatmap; only landmarks projecting outside the image get a zero plane.
pub fn export_training_view(
    view: &RenderedView,
    landmarks: &[(usize, Point3<f64>)],
    sigma: f64,
) -> Result<TrainingSample, ExportError> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(ExportError::InvalidSigma(sigma));
    }
    let mut annotated = view.clone();
    annotated.annotate_landmarks(landmarks);
    let projected = annotated.gt_landmarks_2d.unwrap_or_default();
    let planes = projected
        .iter()
        .map(|l| gaussian_heatmap(view.width, view.height, l.u, l.v, sigma))
        .collect();
    let heatmaps = HeatmapStack::new(view.width, view.height, planes)?
        .with_landmark_ids(projected.iter().map(|l| l.id).collect())?;
    let stem = view_stem(view.view_id);
    let mut images: Vec<String> = Vec::new();
    let has_rgb = [Channel::Red, Channel::Green, Channel::Blue]
        .iter()
        .all(|c| view.channel(*c).is_some());
    if has_rgb {
        images.push(format!("{stem}_rgb.png"));
    }
    for (c, _) in view.channels() {
        if !(has_rgb && matches!(c, Channel::Red | Channel::Green | Channel::Blue)) {
            images.push(format!("{stem}_{c}.png"));
        }
    }
    Ok(TrainingSample {
        heatmaps,
        metadata: ViewMetadata {
            view_id: view.view_id,
            camera: view.camera.clone(),
            sigma,
            landmarks: projected,
            heatmaps: format!("{stem}.hmp"),
            images,
        },
    })
}

/// 16-bit grayscale PNG, sample = round(v × 65535).
pub fn write_gray16_png(path: &Path, width: usize, height: usize, plane: &[f32]) -> Result<(), ExportError> {
    let data: Vec<u8> = plane
        .iter()
        .flat_map(|v| ((v.clamp(0.0, 1.0) as f64 * 65535.0).round() as u16).to_be_bytes())
        .collect();
    write_png(path, width, height, png::ColorType::Grayscale, png::BitDepth::Sixteen, &data)
}

/// 8-bit RGB PNG from three planes, sample = round(v × 255).
pub fn write_rgb8_png(path: &Path, width: usize, height: usize, rgb: [&[f32]; 3]) -> Result<(), ExportError> {
    let to8 = |v: f32| (v.clamp(0.0, 1.0) as f64 * 255.0).round() as u8;
    let data: Vec<u8> = (0..width * height)
        .flat_map(|i| [to8(rgb[0][i]), to8(rgb[1][i]), to8(rgb[2][i])])
        .collect();
    write_png(path, width, height, png::ColorType::Rgb, png::BitDepth::Eight, &data)
}

fn write_png(
    path: &Path,
    width: usize,
    height: usize,
    color: png::ColorType,
    depth: png::BitDepth,
    data: &[u8],
) -> Result<(), ExportError> {
    let file = fs::File::create(path).map_err(|source| ExportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let png_err = |source| ExportError::Png {
        path: path.to_path_buf(),
        source,
    };
    let mut encoder = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    encoder.set_color(color);
    encoder.set_depth(depth);
    let mut writer = encoder.write_header().map_err(png_err)?;
    writer.write_image_data(data).map_err(png_err)?;
    writer.finish().map_err(png_err)
}

/// Writes views into a dataset directory and appends to its metadata file.
pub struct DatasetWriter {
    dir: PathBuf,
    metadata: BufWriter<fs::File>,
}

impl DatasetWriter {
    /// Creates `dir` if needed and truncates any existing metadata file.
    pub fn create(dir: impl Into<PathBuf>) -> Result<Self, ExportError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| ExportError::Io {
            path: dir.clone(),
            source,
        })?;
        let path = dir.join(METADATA_FILE);
        let file = fs::File::create(&path).map_err(|source| ExportError::Io { path, source })?;
        Ok(Self {
            dir,
            metadata: BufWriter::new(file),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, view: &RenderedView, sample: &TrainingSample) -> Result<(), ExportError> {
        let stem = view_stem(view.view_id);
        let mut rgb_done = false;
        for (c, plane) in view.channels() {
            if matches!(c, Channel::Red | Channel::Green | Channel::Blue) {
                if let (Some(r), Some(g), Some(b)) = (
                    view.channel(Channel::Red),
                    view.channel(Channel::Green),
                    view.channel(Channel::Blue),
                ) {
                    if !rgb_done {
                        write_rgb8_png(&self.dir.join(format!("{stem}_rgb.png")), view.width, view.height, [r, g, b])?;
                        rgb_done = true;
                    }
                    continue;
                }
            }
            write_gray16_png(&self.dir.join(format!("{stem}_{c}.png")), view.width, view.height, plane)?;
        }
        sample.heatmaps.save(self.dir.join(&sample.metadata.heatmaps))?;
        let meta_path = self.dir.join(METADATA_FILE);
        let io = |source| ExportError::Io {
            path: meta_path.clone(),
            source,
        };
        serde_json::to_writer(&mut self.metadata, &sample.metadata).map_err(|e| io(e.into()))?;
        self.metadata.write_all(b"\n").map_err(io)
    }

    pub fn finish(mut self) -> Result<(), ExportError> {
        let path = self.dir.join(METADATA_FILE);
        self.metadata.flush().map_err(|source| ExportError::Io { path, source })
    }
}

/// Reads a dataset's `metadata.jsonl`.
pub fn load_metadata(dir: impl AsRef<Path>) -> Result<Vec<ViewMetadata>, ExportError> {
    let path = dir.as_ref().join(METADATA_FILE);
    let file = fs::File::open(&path).map_err(|source| ExportError::Io {
        path: path.clone(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| ExportError::Io {
            path: path.clone(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let meta = serde_json::from_str(&line).map_err(|source| ExportError::Metadata {
            path: path.clone(),
            line: i + 1,
            source,
        })?;
        out.push(meta);
    }
    Ok(out)
}
