//! Per-vertex mean curvature from least-squares sphere fits over
//! region-grown vertex neighborhoods.
//!
//! For a vertex `P` the neighborhood is grown along mesh edges out to a
//! Euclidean radius. The neighbors are inverted about `P`, which turns
//! spheres through `P` into planes, and a plane is fitted to the inverted
//! cloud by eigen-analysis of its covariance. The plane normal, oriented to
//! agree with the averaged incident face normal, gives the outward side; the
//! curvature is `1/R` of the corresponding sphere, positive when its center
//! lies behind the outward normal (convex).

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{Matrix3, Point3, Vector3};
use rayon::prelude::*;

use crate::linalg::symmetric_eigen3;
use crate::mesh::{MeshError, TriangleMesh, VertexAdjacency};

/// Default neighborhood radius in mm.
pub const DEFAULT_RADIUS: f64 = 10.0;
/// Fitted radii above this (mm) are reported as flat.
pub const FLAT_RADIUS_LIMIT: f64 = 1e6;
/// Minimum number of neighbors, excluding the vertex itself.
pub const MIN_NEIGHBORS: usize = 4;

const SIDECAR_MAGIC: &[u8; 4] = b"CRV1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvatureStatus {
    /// A sphere was fitted.
    Fitted,
    /// Neighborhood is planar, or the fit radius exceeds the flat limit.
    Flat,
    /// Too few neighbors, or they do not span a surface.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexCurvature {
    /// Signed mean curvature in 1/mm.
    pub value: f64,
    pub status: CurvatureStatus,
    pub neighbor_count: usize,
}

impl VertexCurvature {
    fn zero(status: CurvatureStatus, neighbor_count: usize) -> Self {
        Self {
            value: 0.0,
            status,
            neighbor_count,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CurvatureError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad curvature sidecar: {0}")]
    Format(String),
}

/// Per-vertex curvature values for a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    pub values: Vec<f64>,
    pub status: Vec<CurvatureStatus>,
    pub radius: f64,
}

impl CurvatureField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn degenerate_count(&self) -> usize {
        self.status
            .iter()
            .filter(|s| **s == CurvatureStatus::Degenerate)
            .count()
    }

    /// Writes the sidecar cache: `CRV1`, u32 vertex count, f64 radius, then one f32 per vertex.
    pub fn write_sidecar(&self, mut out: impl Write) -> std::io::Result<()> {
        out.write_all(SIDECAR_MAGIC)?;
        out.write_all(&(self.values.len() as u32).to_le_bytes())?;
        out.write_all(&self.radius.to_le_bytes())?;
        for v in &self.values {
            out.write_all(&(*v as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn save_sidecar(&self, path: impl AsRef<Path>) -> Result<(), CurvatureError> {
        let path = path.as_ref();
        let mut buf = Vec::with_capacity(16 + 4 * self.values.len());
        self.write_sidecar(&mut buf).expect("write to vec");
        fs::write(path, buf).map_err(|source| CurvatureError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Reads a sidecar cache. Per-vertex status is not stored; zero values
    /// come back as `Flat`, everything else as `Fitted`.
    pub fn parse_sidecar(bytes: &[u8]) -> Result<Self, CurvatureError> {
        if bytes.len() < 16 || &bytes[..4] != SIDECAR_MAGIC {
            return Err(CurvatureError::Format("missing CRV1 header".into()));
        }
        let count = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let radius = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let body = &bytes[16..];
        if body.len() != 4 * count {
            return Err(CurvatureError::Format(format!(
                "expected {} value bytes, found {}",
                4 * count,
                body.len()
            )));
        }
        let values: Vec<f64> = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        let status = values
            .iter()
            .map(|&v| if v == 0.0 { CurvatureStatus::Flat } else { CurvatureStatus::Fitted })
            .collect();
        Ok(Self { values, status, radius })
    }

    pub fn load_sidecar(path: impl AsRef<Path>) -> Result<Self, CurvatureError> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|source| CurvatureError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_sidecar(&bytes)
    }
}

/// Curvature at a single vertex. Builds the adjacency on every call; use
/// [`CurvatureEstimator`] when evaluating many vertices.
pub fn estimate_vertex_curvature(
    mesh: &TriangleMesh,
    vertex_id: usize,
    radius: f64,
) -> Result<VertexCurvature, MeshError> {
    CurvatureEstimator::new(mesh).estimate(vertex_id, radius)
}

/// Applies the per-vertex estimate to every vertex in parallel.
pub fn estimate_curvature_field(mesh: &TriangleMesh, radius: f64) -> Result<CurvatureField, MeshError> {
    CurvatureEstimator::new(mesh).field(radius)
}

/// Shares adjacency and vertex normals across per-vertex estimates.
pub struct CurvatureEstimator<'a> {
    mesh: &'a TriangleMesh,
    adjacency: VertexAdjacency,
    normals: Vec<Vector3<f64>>,
}

impl<'a> CurvatureEstimator<'a> {
    pub fn new(mesh: &'a TriangleMesh) -> Self {
        Self {
            mesh,
            adjacency: VertexAdjacency::new(mesh),
            normals: mesh.vertex_normals(),
        }
    }

    pub fn field(&self, radius: f64) -> Result<CurvatureField, MeshError> {
        if !(radius > 0.0) {
            return Err(MeshError::InvalidRadius(radius));
        }
        let estimates: Vec<VertexCurvature> = (0..self.mesh.vertex_count())
            .into_par_iter()
            .map(|v| self.estimate(v, radius))
            .collect::<Result<_, _>>()?;
        Ok(CurvatureField {
            values: estimates.iter().map(|e| e.value).collect(),
            status: estimates.iter().map(|e| e.status).collect(),
            radius,
        })
    }

    pub fn estimate(&self, vertex_id: usize, radius: f64) -> Result<VertexCurvature, MeshError> {
        let region = self.adjacency.grow(self.mesh, vertex_id, radius)?;
        let neighbors = region.len() - 1;
        if neighbors < MIN_NEIGHBORS {
            return Ok(VertexCurvature::zero(CurvatureStatus::Degenerate, neighbors));
        }
        let verts = self.mesh.vertices();
        let p = verts[vertex_id];

        // Work relative to P and in units of the neighborhood extent so the
        // estimate is translation invariant and scale covariant.
        let scale = region
            .iter()
            .map(|&i| (verts[i] - p).norm())
            .fold(0.0f64, f64::max);
        if scale == 0.0 {
            return Ok(VertexCurvature::zero(CurvatureStatus::Degenerate, neighbors));
        }

        // Inversion about P maps every sphere through P onto a plane, so the
        // best sphere through P is read off a plane fit of the inverted points.
        let mut inverted = Vec::with_capacity(neighbors);
        for &i in &region[1..] {
            let x = (verts[i] - p) / scale;
            let r2 = x.norm_squared();
            if r2 == 0.0 {
                return Ok(VertexCurvature::zero(CurvatureStatus::Degenerate, neighbors));
            }
            inverted.push(x / r2);
        }

        let face_normal = self.normals[vertex_id];
        let Some((normal, offset)) = fit_plane(&inverted) else {
            return Ok(VertexCurvature::zero(CurvatureStatus::Degenerate, neighbors));
        };
        if face_normal == Vector3::zeros() {
            return Ok(VertexCurvature::zero(CurvatureStatus::Degenerate, neighbors));
        }
        let offset = if normal.dot(&face_normal) < 0.0 { -offset } else { offset };
        // Plane n·y = d is the sphere through P with center n/(2d) and
        // radius 1/(2|d|); the center lies behind the outward normal when d < 0.
        let value = -2.0 * offset / scale;
        if value.abs() * FLAT_RADIUS_LIMIT < 1.0 || value.abs() * scale <= 1e-12 {
            return Ok(VertexCurvature::zero(CurvatureStatus::Flat, neighbors));
        }
        Ok(VertexCurvature {
            value,
            status: CurvatureStatus::Fitted,
            neighbor_count: neighbors,
        })
    }
}

/// Orthogonal-regression plane `n·y = d` through a point cloud via PCA.
/// `None` when the points are collinear.
fn fit_plane(points: &[Vector3<f64>]) -> Option<(Vector3<f64>, f64)> {
    let n = points.len() as f64;
    let mean = points.iter().sum::<Vector3<f64>>() / n;
    let cov = points
        .iter()
        .map(|y| (y - mean) * (y - mean).transpose())
        .sum::<Matrix3<f64>>()
        / n;
    let (values, vectors) = symmetric_eigen3(&cov);
    if !(values[1] > 1e-12 * values[2]) {
        return None;
    }
    let normal: Vector3<f64> = vectors.column(0).into();
    Some((normal, normal.dot(&mean)))
}

/// Rigid transform helper for tests and examples.
pub fn transform_points(mesh: &TriangleMesh, rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> TriangleMesh {
    mesh.map_vertices(|v| Point3::from(rotation * v.coords + translation))
}
