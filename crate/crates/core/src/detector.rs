//! Per-view 2D landmark detection.
//!
//! Two sources are provided: decoding of heatmap stacks (as produced by an
//! external network, or by the dataset exporter) and an oracle that projects
//! known 3D landmarks and corrupts them with noise, outliers and dropout.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use nalgebra::Point3;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::render::RenderedView;
use crate::rng;

pub const HEATMAP_MAGIC: &[u8; 4] = b"HMP1";
/// Heatmap maxima at or below this value are discarded.
pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_OUTLIER_SPREAD: f64 = 64.0;

#[derive(Debug, thiserror::Error)]
pub enum DetectorError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("heatmap stack: {0}")]
    Format(String),
    #[error("detections line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid oracle config: {0}")]
    Config(String),
}

/// A 2D landmark candidate in one view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection2D {
    pub view_id: usize,
    pub landmark_id: usize,
    pub u: f64,
    pub v: f64,
    pub confidence: f64,
}

/// One float plane per landmark, each `height` rows of `width` values.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapStack {
    width: usize,
    height: usize,
    planes: Vec<Vec<f32>>,
    landmark_ids: Vec<usize>,
}

impl HeatmapStack {
    /// Plane `k` is attributed to landmark id `k`; see [`Self::with_landmark_ids`].
    pub fn new(width: usize, height: usize, planes: Vec<Vec<f32>>) -> Result<Self, DetectorError> {
        if width == 0 || height == 0 {
            return Err(DetectorError::Format(format!("empty image size {width}x{height}")));
        }
        for (k, p) in planes.iter().enumerate() {
            if p.len() != width * height {
                return Err(DetectorError::Format(format!(
                    "plane {k} has {} values, expected {}",
                    p.len(),
                    width * height
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(DetectorError::Format(format!("plane {k} has non-finite values")));
            }
        }
        let landmark_ids = (0..planes.len()).collect();
        Ok(Self {
            width,
            height,
            planes,
            landmark_ids,
        })
    }

    pub fn with_landmark_ids(mut self, ids: Vec<usize>) -> Result<Self, DetectorError> {
        if ids.len() != self.planes.len() {
            return Err(DetectorError::Format(format!(
                "{} landmark ids for {} planes",
                ids.len(),
                self.planes.len()
            )));
        }
        self.landmark_ids = ids;
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    pub fn plane(&self, k: usize) -> &[f32] {
        &self.planes[k]
    }

    pub fn landmark_ids(&self) -> &[usize] {
        &self.landmark_ids
    }

    pub fn write_to(&self, mut out: impl Write) -> std::io::Result<()> {
        out.write_all(HEATMAP_MAGIC)?;
        for n in [self.planes.len(), self.width, self.height] {
            out.write_all(&(n as u32).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.width * self.height * 4);
        for p in &self.planes {
            buf.clear();
            for v in p {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            out.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DetectorError> {
        let path = path.as_ref();
        let io = |source| DetectorError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut file = std::io::BufWriter::new(fs::File::create(path).map_err(io)?);
        self.write_to(&mut file).map_err(io)?;
        file.flush().map_err(io)
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, DetectorError> {
        if bytes.len() < 16 || &bytes[..4] != HEATMAP_MAGIC {
            return Err(DetectorError::Format("missing HMP1 header".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
        let (count, width, height) = (word(0), word(1), word(2));
        let plane_len = width
            .checked_mul(height)
            .ok_or_else(|| DetectorError::Format("image size overflows".into()))?;
        let expected = plane_len
            .checked_mul(count)
            .and_then(|n| n.checked_mul(4))
            .and_then(|n| n.checked_add(16))
            .ok_or_else(|| DetectorError::Format("stack size overflows".into()))?;
        if bytes.len() != expected {
            return Err(DetectorError::Format(format!(
                "expected {expected} bytes for {count} planes of {width}x{height}, found {}",
                bytes.len()
            )));
        }
        let planes = bytes[16..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect::<Vec<_>>()
            .chunks(plane_len.max(1))
            .map(<[f32]>::to_vec)
            .take(count)
            .collect();
        Self::new(width, height, planes)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DetectorError> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|source| DetectorError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&bytes)
    }
}

/// One detection per plane whose maximum exceeds `threshold`, located at the
/// center of the first maximal pixel in row-major order.
pub fn decode_heatmaps(stack: &HeatmapStack, threshold: f64, view_id: usize) -> Vec<Detection2D> {
    let mut out = Vec::new();
    for (k, plane) in stack.planes.iter().enumerate() {
        let mut best = 0usize;
        for (i, &v) in plane.iter().enumerate() {
            if v > plane[best] {
                best = i;
            }
        }
        let max = plane[best] as f64;
        if max > threshold {
            out.push(Detection2D {
                view_id,
                landmark_id: stack.landmark_ids[k],
                u: (best % stack.width) as f64 + 0.5,
                v: (best / stack.width) as f64 + 0.5,
                confidence: max.clamp(0.0, 1.0),
            });
        }
    }
    out
}

/// Corruption model of the oracle detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Isotropic Gaussian noise in pixels.
    pub noise_sigma: f64,
    pub outlier_rate: f64,
    /// Radius in pixels of the disk outliers are drawn from.
    pub outlier_spread: f64,
    pub dropout_rate: f64,
    pub rng_seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            noise_sigma: 0.0,
            outlier_rate: 0.0,
            outlier_spread: DEFAULT_OUTLIER_SPREAD,
            dropout_rate: 0.0,
            rng_seed: 0,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<(), DetectorError> {
        for (name, rate) in [("outlier_rate", self.outlier_rate), ("dropout_rate", self.dropout_rate)] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(DetectorError::Config(format!("{name} {rate} outside [0, 1]")));
            }
        }
        for (name, s) in [("noise_sigma", self.noise_sigma), ("outlier_spread", self.outlier_spread)] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(DetectorError::Config(format!("{name} {s} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// Simulated detector: projects each `(id, point)` into `view` and corrupts it.
///
/// Every landmark draws from its own stream seeded by the config seed, the
/// view id and the landmark id, so results do not depend on list order.
pub fn oracle_detect(
    view: &RenderedView,
    landmarks: &[(usize, Point3<f64>)],
    config: &OracleConfig,
) -> Result<Vec<Detection2D>, DetectorError> {
    config.validate()?;
    let width = view.camera.image_width as f64;
    let height = view.camera.image_height as f64;
    let mut out = Vec::with_capacity(landmarks.len());
    for (id, p) in landmarks {
        let mut rng = rng::stream(config.rng_seed, &[view.view_id as u64, *id as u64]);
        // fixed draw order keeps streams aligned across configurations
        let drop: f64 = rng.random();
        let outlier: f64 = rng.random();
        let nu: f64 = StandardNormal.sample(&mut rng);
        let nv: f64 = StandardNormal.sample(&mut rng);
        let radius: f64 = rng.random::<f64>().sqrt() * config.outlier_spread;
        let angle: f64 = rng.random::<f64>() * std::f64::consts::TAU;
        if drop < config.dropout_rate {
            continue;
        }
        let proj = view.camera.project(p);
        let (du, dv) = if outlier < config.outlier_rate {
            (radius * angle.cos(), radius * angle.sin())
        } else {
            (nu * config.noise_sigma, nv * config.noise_sigma)
        };
        out.push(Detection2D {
            view_id: view.view_id,
            landmark_id: *id,
            u: (proj.u + du).clamp(0.0, width),
            v: (proj.v + dv).clamp(0.0, height),
            confidence: 1.0,
        });
    }
    Ok(out)
}

pub fn write_detections(detections: &[Detection2D], mut out: impl Write) -> std::io::Result<()> {
    for d in detections {
        serde_json::to_writer(&mut out, d)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_detections(detections: &[Detection2D], path: impl AsRef<Path>) -> Result<(), DetectorError> {
    let path = path.as_ref();
    let io = |source| DetectorError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = std::io::BufWriter::new(fs::File::create(path).map_err(io)?);
    write_detections(detections, &mut file).map_err(io)?;
    file.flush().map_err(io)
}

/// Reads JSON lines; blank lines are skipped.
pub fn read_detections(input: impl BufRead) -> Result<Vec<Detection2D>, DetectorError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| DetectorError::Json {
            line: i + 1,
            source: serde_json::Error::io(e),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| DetectorError::Json { line: i + 1, source })?);
    }
    Ok(out)
}

pub fn load_detections(path: impl AsRef<Path>) -> Result<Vec<Detection2D>, DetectorError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| DetectorError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_detections(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{sample_cameras, ViewSamplingConfig};
    use crate::mesh::shapes;
    use crate::render::{render_view, ChannelSet};

    fn single_peak(value: f32, col: usize, row: usize) -> HeatmapStack {
        let mut plane = vec![0.0f32; 128 * 96];
        plane[row * 128 + col] = value;
        HeatmapStack::new(128, 96, vec![plane]).unwrap()
    }

    fn view() -> (RenderedView, Vec<(usize, Point3<f64>)>) {
        let mesh = shapes::icosphere(50.0, 2);
        let cam = sample_cameras(&mesh, &ViewSamplingConfig { view_count: 1, ..Default::default() })
            .unwrap()
            .remove(0);
        let mut view = render_view(&mesh, &cam, &ChannelSet::default(), None).unwrap();
        view.view_id = 7;
        let lms = mesh.vertices()[..12].iter().copied().enumerate().collect();
        (view, lms)
    }

    #[test]
    fn argmax_at_pixel_center() {
        let d = decode_heatmaps(&single_peak(0.9, 40, 60), 0.5, 3);
        assert_eq!(
            d,
            vec![Detection2D { view_id: 3, landmark_id: 0, u: 40.5, v: 60.5, confidence: 0.9f32 as f64 }]
        );
    }

    #[test]
    fn below_threshold_is_dropped() {
        assert!(decode_heatmaps(&single_peak(0.4, 10, 10), 0.5, 0).is_empty());
        assert!(decode_heatmaps(&single_peak(0.5, 10, 10), 0.5, 0).is_empty());
        let zero = HeatmapStack::new(8, 8, vec![vec![0.0; 64]]).unwrap();
        assert!(decode_heatmaps(&zero, 0.5, 0).is_empty());
    }

    #[test]
    fn ties_prefer_smallest_row_then_column() {
        let mut plane = vec![0.0f32; 100];
        plane[5 * 10 + 2] = 0.8;
        plane[3 * 10 + 7] = 0.8;
        plane[3 * 10 + 9] = 0.8;
        let stack = HeatmapStack::new(10, 10, vec![plane]).unwrap().with_landmark_ids(vec![42]).unwrap();
        let d = decode_heatmaps(&stack, 0.5, 0);
        assert_eq!((d[0].landmark_id, d[0].u, d[0].v), (42, 7.5, 3.5));
    }

    #[test]
    fn threshold_is_monotone() {
        let planes: Vec<Vec<f32>> = (0..20).map(|k| vec![k as f32 / 20.0; 4]).collect();
        let stack = HeatmapStack::new(2, 2, planes).unwrap();
        let mut last = usize::MAX;
        for t in 0..=20 {
            let n = decode_heatmaps(&stack, t as f64 / 20.0, 0).len();
            assert!(n <= last);
            last = n;
        }
    }

    #[test]
    fn hmp_round_trip_and_validation() {
        let stack = HeatmapStack::new(3, 2, vec![vec![0.0, 1.0, 0.5, -2.0, 1e-30, 7.0], vec![0.25; 6]]).unwrap();
        let mut bytes = Vec::new();
        stack.write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"HMP1");
        assert_eq!(bytes[4..16], [2, 0, 0, 0, 3, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(bytes.len(), 16 + 2 * 6 * 4);
        assert_eq!(HeatmapStack::parse(&bytes).unwrap(), stack);
        assert!(HeatmapStack::parse(&bytes[..bytes.len() - 1]).is_err());
        assert!(HeatmapStack::parse(b"HMP2\0\0\0\0\0\0\0\0\0\0\0\0").is_err());
        assert!(HeatmapStack::new(2, 1, vec![vec![f32::NAN, 0.0]]).is_err());
        assert!(HeatmapStack::new(2, 1, vec![vec![0.0]]).is_err());
    }

    #[test]
    fn detections_jsonl_round_trip() {
        let dets = vec![
            Detection2D { view_id: 0, landmark_id: 4, u: 1.25, v: 200.5, confidence: 1.0 },
            Detection2D { view_id: 9, landmark_id: 0, u: 0.1, v: 0.2, confidence: 0.75 },
        ];
        let mut buf = Vec::new();
        write_detections(&dets, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("{\"view_id\":0,\"landmark_id\":4,\"u\":1.25,\"v\":200.5,\"confidence\":1.0}\n"));
        assert_eq!(read_detections(&buf[..]).unwrap(), dets);
        assert!(read_detections(&b"{\"view_id\":1}\n"[..]).is_err());
    }

    #[test]
    fn noiseless_oracle_is_exact_projection() {
        let (view, lms) = view();
        let dets = oracle_detect(&view, &lms, &OracleConfig::default()).unwrap();
        assert_eq!(dets.len(), lms.len());
        for (d, (id, p)) in dets.iter().zip(&lms) {
            let q = view.camera.project(p);
            assert_eq!((d.view_id, d.landmark_id, d.u, d.v, d.confidence), (7, *id, q.u, q.v, 1.0));
        }
    }

    #[test]
    fn full_dropout_is_empty_and_bad_rates_rejected() {
        let (view, lms) = view();
        let cfg = OracleConfig { dropout_rate: 1.0, ..Default::default() };
        assert!(oracle_detect(&view, &lms, &cfg).unwrap().is_empty());
        let cfg = OracleConfig { outlier_rate: 1.5, ..Default::default() };
        assert!(oracle_detect(&view, &lms, &cfg).is_err());
    }

    #[test]
    fn noise_has_configured_spread() {
        let (mut view, _) = view();
        let center = view.camera.focal_point;
        let mut errs = Vec::new();
        for rep in 0..1000 {
            view.view_id = rep;
            let cfg = OracleConfig { noise_sigma: 2.0, rng_seed: 11, ..Default::default() };
            let d = oracle_detect(&view, &[(0, center)], &cfg).unwrap()[0];
            errs.push(d.u - 128.0);
            errs.push(d.v - 128.0);
        }
        let n = errs.len() as f64;
        let mean = errs.iter().sum::<f64>() / n;
        let sd = (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((1.8..=2.2).contains(&sd), "sd {sd}");
    }

    #[test]
    fn oracle_is_deterministic_and_order_free() {
        let (view, lms) = view();
        let cfg = OracleConfig { noise_sigma: 1.0, outlier_rate: 0.3, dropout_rate: 0.2, rng_seed: 5, ..Default::default() };
        let a = oracle_detect(&view, &lms, &cfg).unwrap();
        assert_eq!(a, oracle_detect(&view, &lms, &cfg).unwrap());
        let mut rev = lms.clone();
        rev.reverse();
        let mut b = oracle_detect(&view, &rev, &cfg).unwrap();
        b.reverse();
        assert_eq!(a, b);
        for d in &a {
            assert!((0.0..=256.0).contains(&d.u) && (0.0..=256.0).contains(&d.v));
        }
    }
}
