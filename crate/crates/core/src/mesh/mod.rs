//! Triangle meshes, file I/O, spatial indexing and vertex neighborhoods.

mod io;
mod neighborhood;
mod octree;
pub mod shapes;
mod triangle;

pub use io::{load_mesh, parse_obj, parse_ply, save_obj, save_ply, write_obj, write_ply};
pub use neighborhood::{grow_neighborhood, VertexAdjacency};
pub use octree::{closest_surface_point, Octree, QueryStats, SurfacePoint};
pub use triangle::{closest_point_on_triangle, TrianglePoint};

use nalgebra::{Point3, Vector3};

/// Errors raised while building, loading or querying meshes.
#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed {format} data at record {record}: {message}")]
    Parse {
        format: &'static str,
        record: usize,
        message: String,
    },
    #[error("unsupported mesh format: {0}")]
    UnsupportedFormat(String),
    #[error("mesh has no triangles")]
    NoTriangles,
    #[error("triangle {triangle} references vertex {index} but mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        triangle: usize,
        index: usize,
        vertex_count: usize,
    },
    #[error("triangle {0} repeats a vertex index")]
    RepeatedIndex(usize),
    #[error("{attribute} has {len} entries but mesh has {vertex_count} vertices")]
    AttributeLength {
        attribute: &'static str,
        len: usize,
        vertex_count: usize,
    },
    #[error("vertex {0} is out of range")]
    InvalidVertex(usize),
    #[error("radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("mesh is empty")]
    Empty,
}

/// Axis-aligned box in world units (mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl BoundingBox {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point3<f64>>) -> Option<Self> {
        let mut iter = points.into_iter();
        let first = *iter.next()?;
        let mut bb = BoundingBox {
            min: first,
            max: first,
        };
        for p in iter {
            bb.include(p);
        }
        Some(bb)
    }

    pub fn include(&mut self, p: &Point3<f64>) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn center(&self) -> Point3<f64> {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn extent(&self) -> Vector3<f64> {
        self.max - self.min
    }

    /// Radius of the sphere centred on the box that encloses all of it.
    pub fn bounding_radius(&self) -> f64 {
        0.5 * self.extent().norm()
    }

    pub fn corners(&self) -> [Point3<f64>; 8] {
        let (a, b) = (self.min, self.max);
        [
            Point3::new(a.x, a.y, a.z),
            Point3::new(b.x, a.y, a.z),
            Point3::new(a.x, b.y, a.z),
            Point3::new(b.x, b.y, a.z),
            Point3::new(a.x, a.y, b.z),
            Point3::new(b.x, a.y, b.z),
            Point3::new(a.x, b.y, b.z),
            Point3::new(b.x, b.y, b.z),
        ]
    }

    /// Closed-interval overlap test.
    pub fn intersects(&self, other: &BoundingBox) -> bool {
        (0..3).all(|i| self.min[i] <= other.max[i] && other.min[i] <= self.max[i])
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|i| self.min[i] <= p[i] && p[i] <= self.max[i])
    }

    /// Squared distance from `p` to the box (zero inside).
    pub fn sq_distance(&self, p: &Point3<f64>) -> f64 {
        (0..3)
            .map(|i| {
                let d = (self.min[i] - p[i]).max(0.0).max(p[i] - self.max[i]);
                d * d
            })
            .sum()
    }
}

/// Indexed triangle mesh with optional per-vertex attributes.
///
/// Construction validates indices and attribute lengths, so every
/// `TriangleMesh` in circulation satisfies the mesh invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point3<f64>>,
    triangles: Vec<[usize; 3]>,
    vertex_colors: Option<Vec<[f64; 3]>>,
    vertex_curvature: Option<Vec<f64>>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let n = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            for &i in tri {
                if i >= n {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        index: i,
                        vertex_count: n,
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::RepeatedIndex(t));
            }
        }
        Ok(Self {
            vertices,
            triangles,
            vertex_colors: None,
            vertex_curvature: None,
        })
    }

    pub fn with_colors(mut self, colors: Vec<[f64; 3]>) -> Result<Self, MeshError> {
        if colors.len() != self.vertices.len() {
            return Err(MeshError::AttributeLength {
                attribute: "vertex_colors",
                len: colors.len(),
                vertex_count: self.vertices.len(),
            });
        }
        self.vertex_colors = Some(colors);
        Ok(self)
    }

    pub fn with_curvature(mut self, curvature: Vec<f64>) -> Result<Self, MeshError> {
        if curvature.len() != self.vertices.len() {
            return Err(MeshError::AttributeLength {
                attribute: "vertex_curvature",
                len: curvature.len(),
                vertex_count: self.vertices.len(),
            });
        }
        self.vertex_curvature = Some(curvature);
        Ok(self)
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn vertex_colors(&self) -> Option<&[[f64; 3]]> {
        self.vertex_colors.as_deref()
    }

    pub fn vertex_curvature(&self) -> Option<&[f64]> {
        self.vertex_curvature.as_deref()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_vertices(&self, t: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unnormalized face normal following the winding order; its norm is twice the area.
    pub fn face_normal(&self, t: usize) -> Vector3<f64> {
        let [a, b, c] = self.triangle_vertices(t);
        (b - a).cross(&(c - a))
    }

    pub fn bounding_box(&self) -> Option<BoundingBox> {
        BoundingBox::from_points(&self.vertices)
    }

    /// Area-weighted average of incident face normals, normalized.
    /// Zero when the vertex has no incident triangles.
    pub fn vertex_normals(&self) -> Vec<Vector3<f64>> {
        let mut normals = vec![Vector3::zeros(); self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let n = self.face_normal(t);
            for &i in tri {
                normals[i] += n;
            }
        }
        for n in &mut normals {
            let len = n.norm();
            if len > 0.0 {
                *n /= len;
            }
        }
        normals
    }

    /// Applies `f` to every vertex, keeping topology and attributes.
    pub fn map_vertices(&self, f: impl FnMut(&Point3<f64>) -> Point3<f64>) -> Self {
        Self {
            vertices: self.vertices.iter().map(f).collect(),
            triangles: self.triangles.clone(),
            vertex_colors: self.vertex_colors.clone(),
            vertex_curvature: self.vertex_curvature.clone(),
        }
    }
}
