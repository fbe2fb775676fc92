//! Software rasterization of meshes into multi-channel views.
//!
//! Triangles are scan-converted with half-plane edge functions evaluated at
//! pixel centers and a top-left fill rule, so pixels on an edge shared by
//! two triangles are drawn once. Depth is interpolated linearly (exact for
//! orthographic cameras) and resolved with a z-buffer; fragments outside the
//! near/far range are clipped.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::camera::CameraSpec;
use crate::curvature::CurvatureField;
use crate::mesh::TriangleMesh;

/// Curvature (1/mm) mapped to the ends of the grey ramp.
pub const DEFAULT_CURVATURE_LIMIT: f64 = 0.5;
/// Normalized-depth slack used when deciding landmark visibility.
pub const VISIBILITY_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Red,
    Green,
    Blue,
    Geometry,
    Depth,
    Curvature,
}

impl Channel {
    pub const ALL: [Channel; 6] = [
        Channel::Red,
        Channel::Green,
        Channel::Blue,
        Channel::Geometry,
        Channel::Depth,
        Channel::Curvature,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Red => "red",
            Channel::Green => "green",
            Channel::Blue => "blue",
            Channel::Geometry => "geometry",
            Channel::Depth => "depth",
            Channel::Curvature => "curvature",
        }
    }

    fn background(self) -> f32 {
        if self == Channel::Depth {
            1.0
        } else {
            0.0
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RenderError {
    #[error("unknown channel {0:?} (expected rgb, red, green, blue, geometry, depth or curvature)")]
    UnknownChannel(String),
    #[error("channel {0} requested but the mesh has no vertex colors")]
    MissingColors(Channel),
    #[error("curvature channel requested without a curvature field")]
    MissingCurvature,
    #[error("curvature field has {field} values but mesh has {vertices} vertices")]
    CurvatureLength { field: usize, vertices: usize },
}

/// Ordered set of channels to render.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChannelSet(Vec<Channel>);

impl ChannelSet {
    pub fn new(channels: impl IntoIterator<Item = Channel>) -> Self {
        let mut v: Vec<Channel> = channels.into_iter().collect();
        v.sort();
        v.dedup();
        Self(v)
    }

    pub fn all() -> Self {
        Self::new(Channel::ALL)
    }

    pub fn contains(&self, c: Channel) -> bool {
        self.0.contains(&c)
    }

    pub fn iter(&self) -> impl Iterator<Item = Channel> + '_ {
        self.0.iter().copied()
    }

    pub fn has_rgb(&self) -> bool {
        self.contains(Channel::Red) && self.contains(Channel::Green) && self.contains(Channel::Blue)
    }
}

impl FromStr for ChannelSet {
    type Err = RenderError;

    /// Parses a comma list such as `rgb,geometry,depth,curvature`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = Vec::new();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match tok.to_ascii_lowercase().as_str() {
                "rgb" => out.extend([Channel::Red, Channel::Green, Channel::Blue]),
                "red" => out.push(Channel::Red),
                "green" => out.push(Channel::Green),
                "blue" => out.push(Channel::Blue),
                "geometry" => out.push(Channel::Geometry),
                "depth" => out.push(Channel::Depth),
                "curvature" => out.push(Channel::Curvature),
                other => return Err(RenderError::UnknownChannel(other.to_string())),
            }
        }
        Ok(Self::new(out))
    }
}

/// Projected ground-truth landmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark2D {
    pub id: usize,
    pub u: f64,
    pub v: f64,
    /// Inside the image and not hidden behind nearer surface.
    pub visible: bool,
}

/// A rendered view: channel planes plus the camera that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedView {
    pub view_id: usize,
    pub camera: CameraSpec,
    pub width: usize,
    pub height: usize,
    planes: BTreeMap<Channel, Vec<f32>>,
    zbuffer: Vec<f32>,
    pub gt_landmarks_2d: Option<Vec<Landmark2D>>,
}

impl RenderedView {
    /// Row-major plane (`v` rows of `u` columns), if rendered.
    pub fn channel(&self, c: Channel) -> Option<&[f32]> {
        self.planes.get(&c).map(Vec::as_slice)
    }

    pub fn channels(&self) -> impl Iterator<Item = (Channel, &[f32])> {
        self.planes.iter().map(|(c, p)| (*c, p.as_slice()))
    }

    /// Pixel `(col, row)` of channel `c`.
    pub fn pixel(&self, c: Channel, col: usize, row: usize) -> Option<f32> {
        self.channel(c).map(|p| p[row * self.width + col])
    }

    /// Normalized z-buffer, kept even when the depth channel is not requested.
    pub fn zbuffer(&self) -> &[f32] {
        &self.zbuffer
    }

    /// Projects `landmarks` (indexed by id) and stores them with a depth-buffer visibility flag.
    pub fn annotate_landmarks(&mut self, landmarks: &[(usize, Point3<f64>)]) {
        let projected = landmarks
            .iter()
            .map(|(id, p)| {
                let proj = self.camera.project(p);
                let inside = proj.u >= 0.0
                    && proj.v >= 0.0
                    && proj.u < self.width as f64
                    && proj.v < self.height as f64;
                let visible = inside && {
                    let col = proj.u as usize;
                    let row = proj.v as usize;
                    proj.depth <= self.zbuffer[row * self.width + col] as f64 + VISIBILITY_TOLERANCE
                };
                Landmark2D {
                    id: *id,
                    u: proj.u,
                    v: proj.v,
                    visible,
                }
            })
            .collect();
        self.gt_landmarks_2d = Some(projected);
    }
}

/// Renders with the default curvature ramp.
pub fn render_view(
    mesh: &TriangleMesh,
    camera: &CameraSpec,
    channels: &ChannelSet,
    curvature: Option<&CurvatureField>,
) -> Result<RenderedView, RenderError> {
    render_view_with(mesh, camera, channels, curvature, DEFAULT_CURVATURE_LIMIT)
}

/// Renders `channels` of `mesh` through `camera`. Curvature values are
/// clamped to `±curvature_limit` and mapped linearly onto `[0, 1]`.
pub fn render_view_with(
    mesh: &TriangleMesh,
    camera: &CameraSpec,
    channels: &ChannelSet,
    curvature: Option<&CurvatureField>,
    curvature_limit: f64,
) -> Result<RenderedView, RenderError> {
    for c in [Channel::Red, Channel::Green, Channel::Blue] {
        if channels.contains(c) && mesh.vertex_colors().is_none() {
            return Err(RenderError::MissingColors(c));
        }
    }
    let curvature_values = if channels.contains(Channel::Curvature) {
        let field = curvature.ok_or(RenderError::MissingCurvature)?;
        if field.len() != mesh.vertex_count() {
            return Err(RenderError::CurvatureLength {
                field: field.len(),
                vertices: mesh.vertex_count(),
            });
        }
        Some(&field.values)
    } else {
        None
    };

    let width = camera.image_width as usize;
    let height = camera.image_height as usize;
    let fragments = rasterize(mesh, camera);
    let toward_camera = -camera.view_direction();
    let shading: Vec<f64> = if channels.contains(Channel::Geometry) {
        (0..mesh.triangle_count())
            .map(|t| {
                let n = mesh.face_normal(t);
                let len = n.norm();
                if len > 0.0 {
                    (n.dot(&toward_camera) / len).max(0.0)
                } else {
                    0.0
                }
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut planes = BTreeMap::new();
    for c in channels.iter() {
        let mut plane = vec![c.background(); width * height];
        for (px, frag) in fragments.iter().enumerate() {
            let Some(frag) = frag else { continue };
            let tri = mesh.triangles()[frag.triangle];
            let interp = |values: &dyn Fn(usize) -> f64| -> f64 {
                frag.weights[0] * values(tri[0]) + frag.weights[1] * values(tri[1]) + frag.weights[2] * values(tri[2])
            };
            let value = match c {
                Channel::Depth => frag.depth,
                Channel::Geometry => shading[frag.triangle],
                Channel::Red | Channel::Green | Channel::Blue => {
                    let k = c as usize - Channel::Red as usize;
                    let colors = mesh.vertex_colors().expect("checked above");
                    interp(&|i| colors[i][k])
                }
                Channel::Curvature => {
                    let values = curvature_values.expect("checked above");
                    let k = interp(&|i| values[i]).clamp(-curvature_limit, curvature_limit);
                    (k + curvature_limit) / (2.0 * curvature_limit)
                }
            };
            plane[px] = value.clamp(0.0, 1.0) as f32;
        }
        planes.insert(c, plane);
    }

    let zbuffer = fragments
        .iter()
        .map(|f| f.as_ref().map_or(1.0, |f| f.depth.clamp(0.0, 1.0) as f32))
        .collect();

    Ok(RenderedView {
        view_id: 0,
        camera: camera.clone(),
        width,
        height,
        planes,
        zbuffer,
        gt_landmarks_2d: None,
    })
}

#[derive(Debug, Clone, Copy)]
struct Fragment {
    triangle: usize,
    weights: [f64; 3],
    depth: f64,
}

/// Nearest fragment per pixel, row-major.
fn rasterize(mesh: &TriangleMesh, camera: &CameraSpec) -> Vec<Option<Fragment>> {
    let width = camera.image_width as usize;
    let height = camera.image_height as usize;
    let mut buffer: Vec<Option<Fragment>> = vec![None; width * height];
    let screen: Vec<[f64; 3]> = mesh
        .vertices()
        .iter()
        .map(|p| {
            let q = camera.project(p);
            [q.u, q.v, q.depth]
        })
        .collect();

    for (t, tri) in mesh.triangles().iter().enumerate() {
        let [a, mut b, mut c] = tri.map(|i| screen[i]);
        let mut idx = [0usize, 1, 2];
        let mut area = edge(&a, &b, &c);
        if area == 0.0 || !area.is_finite() {
            continue;
        }
        if area < 0.0 {
            std::mem::swap(&mut b, &mut c);
            idx.swap(1, 2);
            area = -area;
        }
        let min_x = a[0].min(b[0]).min(c[0]);
        let max_x = a[0].max(b[0]).max(c[0]);
        let min_y = a[1].min(b[1]).min(c[1]);
        let max_y = a[1].max(b[1]).max(c[1]);
        // pixel i covers center i + 0.5
        let col0 = (min_x - 0.5).ceil().max(0.0) as usize;
        let row0 = (min_y - 0.5).ceil().max(0.0) as usize;
        let col1 = ((max_x - 0.5).floor()).min(width as f64 - 1.0);
        let row1 = ((max_y - 0.5).floor()).min(height as f64 - 1.0);
        if col1 < 0.0 || row1 < 0.0 {
            continue;
        }
        let (col1, row1) = (col1 as usize, row1 as usize);

        let bias = [top_left(&b, &c), top_left(&c, &a), top_left(&a, &b)];
        for row in row0..=row1 {
            let y = row as f64 + 0.5;
            for col in col0..=col1 {
                let p = [col as f64 + 0.5, y, 0.0];
                let w = [edge(&b, &c, &p), edge(&c, &a, &p), edge(&a, &b, &p)];
                let inside = w
                    .iter()
                    .zip(&bias)
                    .all(|(&e, &tl)| e > 0.0 || (e == 0.0 && tl));
                if !inside {
                    continue;
                }
                let l = [w[0] / area, w[1] / area, w[2] / area];
                let depth = l[0] * a[2] + l[1] * b[2] + l[2] * c[2];
                if !(0.0..=1.0).contains(&depth) {
                    continue;
                }
                let slot = &mut buffer[row * width + col];
                if slot.is_none_or(|f| depth < f.depth) {
                    let mut weights = [0.0; 3];
                    for k in 0..3 {
                        weights[idx[k]] = l[k];
                    }
                    *slot = Some(Fragment {
                        triangle: t,
                        weights,
                        depth,
                    });
                }
            }
        }
    }
    buffer
}

/// Twice the signed area of `(a, b, p)` in screen space.
fn edge(a: &[f64; 3], b: &[f64; 3], p: &[f64; 3]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Exactly one of the two directions of any edge owns its boundary pixels.
fn top_left(a: &[f64; 3], b: &[f64; 3]) -> bool {
    let dy = b[1] - a[1];
    let dx = b[0] - a[0];
    dy < 0.0 || (dy == 0.0 && dx > 0.0)
}
