use std::collections::VecDeque;

use super::{MeshError, TriangleMesh};

/// Vertex-to-vertex edge adjacency of a mesh, sorted and deduplicated.
#[derive(Debug, Clone)]
pub struct VertexAdjacency {
    neighbors: Vec<Vec<usize>>,
}

impl VertexAdjacency {
    pub fn new(mesh: &TriangleMesh) -> Self {
        let mut neighbors = vec![Vec::new(); mesh.vertex_count()];
        for &[a, b, c] in mesh.triangles() {
            for (i, j) in [(a, b), (b, c), (c, a)] {
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
        for n in &mut neighbors {
            n.sort_unstable();
            n.dedup();
        }
        Self { neighbors }
    }

    pub fn neighbors(&self, vertex: usize) -> &[usize] {
        &self.neighbors[vertex]
    }

    /// Breadth-first region growing from `seed` along mesh edges.
    ///
    /// A vertex joins the region when it is adjacent to a region vertex and
    /// lies within Euclidean distance `radius` of the seed. The seed comes
    /// first; the rest follow in BFS order.
    pub fn grow(
        &self,
        mesh: &TriangleMesh,
        seed: usize,
        radius: f64,
    ) -> Result<Vec<usize>, MeshError> {
        if seed >= mesh.vertex_count() || seed >= self.neighbors.len() {
            return Err(MeshError::InvalidVertex(seed));
        }
        if !(radius > 0.0) {
            return Err(MeshError::InvalidRadius(radius));
        }
        let vertices = mesh.vertices();
        let center = vertices[seed];
        let r2 = radius * radius;
        let mut visited = vec![false; vertices.len()];
        let mut region = vec![seed];
        let mut queue = VecDeque::from([seed]);
        visited[seed] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &self.neighbors[v] {
                if visited[w] {
                    continue;
                }
                visited[w] = true;
                if (vertices[w] - center).norm_squared() <= r2 {
                    region.push(w);
                    queue.push_back(w);
                }
            }
        }
        Ok(region)
    }
}

/// Region grown from `vertex_id` out to Euclidean `radius` (mm) through mesh edges.
pub fn grow_neighborhood(
    mesh: &TriangleMesh,
    vertex_id: usize,
    radius: f64,
) -> Result<Vec<usize>, MeshError> {
    VertexAdjacency::new(mesh).grow(mesh, vertex_id, radius)
}
