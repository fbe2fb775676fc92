use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use nalgebra::Point3;

use super::triangle::closest_point_on_triangle;
use super::{BoundingBox, MeshError, TriangleMesh};

pub const DEFAULT_MAX_DEPTH: usize = 10;
pub const DEFAULT_MAX_TRIANGLES_PER_LEAF: usize = 32;

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf(Vec<usize>),
    Internal([usize; 8]),
}

#[derive(Debug, Clone)]
struct Node {
    bbox: BoundingBox,
    kind: NodeKind,
}

/// Octree over the triangles of a mesh, used for closest-point queries.
///
/// A triangle is referenced by every leaf whose (closed) box overlaps the
/// triangle's bounding box, so it can appear in several leaves.
#[derive(Debug, Clone)]
pub struct Octree {
    nodes: Vec<Node>,
    triangle_count: usize,
    max_depth: usize,
    max_triangles_per_leaf: usize,
}

/// Closest point on the mesh surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub point: Point3<f64>,
    pub triangle_id: usize,
    pub distance: f64,
    pub barycentric: [f64; 3],
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryStats {
    pub nodes_visited: usize,
    pub triangles_tested: usize,
}

impl Octree {
    pub fn build(
        mesh: &TriangleMesh,
        max_depth: usize,
        max_triangles_per_leaf: usize,
    ) -> Result<Self, MeshError> {
        let root_box = match mesh.bounding_box() {
            Some(bb) if !mesh.is_empty() => bb,
            _ => return Err(MeshError::Empty),
        };
        let tri_boxes: Vec<BoundingBox> = (0..mesh.triangle_count())
            .map(|t| {
                let [a, b, c] = mesh.triangle_vertices(t);
                BoundingBox::from_points([&a, &b, &c]).expect("three points")
            })
            .collect();
        let mut tree = Octree {
            nodes: Vec::new(),
            triangle_count: mesh.triangle_count(),
            max_depth,
            max_triangles_per_leaf: max_triangles_per_leaf.max(1),
        };
        tree.split(root_box, (0..mesh.triangle_count()).collect(), 0, &tri_boxes);
        Ok(tree)
    }

    pub fn with_defaults(mesh: &TriangleMesh) -> Result<Self, MeshError> {
        Self::build(mesh, DEFAULT_MAX_DEPTH, DEFAULT_MAX_TRIANGLES_PER_LEAF)
    }

    fn split(
        &mut self,
        bbox: BoundingBox,
        tris: Vec<usize>,
        depth: usize,
        tri_boxes: &[BoundingBox],
    ) -> usize {
        let index = self.nodes.len();
        if depth >= self.max_depth || tris.len() <= self.max_triangles_per_leaf {
            self.nodes.push(Node {
                bbox,
                kind: NodeKind::Leaf(tris),
            });
            return index;
        }
        self.nodes.push(Node {
            bbox,
            kind: NodeKind::Leaf(Vec::new()),
        });
        let mid = bbox.center();
        let mut children = [0usize; 8];
        for (octant, child) in children.iter_mut().enumerate() {
            let mut min = bbox.min;
            let mut max = bbox.max;
            for axis in 0..3 {
                if octant & (1 << axis) == 0 {
                    max[axis] = mid[axis];
                } else {
                    min[axis] = mid[axis];
                }
            }
            let child_box = BoundingBox { min, max };
            let subset: Vec<usize> = tris
                .iter()
                .copied()
                .filter(|&t| tri_boxes[t].intersects(&child_box))
                .collect();
            *child = self.split(child_box, subset, depth + 1, tri_boxes);
        }
        self.nodes[index].kind = NodeKind::Internal(children);
        index
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn max_triangles_per_leaf(&self) -> usize {
        self.max_triangles_per_leaf
    }

    pub fn root_box(&self) -> BoundingBox {
        self.nodes[0].bbox
    }

    /// Boxes and triangle lists of all leaves, in depth-first order.
    pub fn leaves(&self) -> impl Iterator<Item = (&BoundingBox, &[usize])> {
        self.nodes.iter().filter_map(|n| match &n.kind {
            NodeKind::Leaf(t) => Some((&n.bbox, t.as_slice())),
            NodeKind::Internal(_) => None,
        })
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().count()
    }

    pub fn closest_point(&self, mesh: &TriangleMesh, p: &Point3<f64>) -> SurfacePoint {
        self.closest_point_with_stats(mesh, p).0
    }

    /// Best-first descent: nodes are expanded in order of box distance and
    /// pruned once their box is farther than the best triangle found.
    pub fn closest_point_with_stats(
        &self,
        mesh: &TriangleMesh,
        p: &Point3<f64>,
    ) -> (SurfacePoint, QueryStats) {
        debug_assert_eq!(mesh.triangle_count(), self.triangle_count);
        let mut stats = QueryStats::default();
        let mut tested: HashSet<usize> = HashSet::new();
        let mut best: Option<(f64, SurfacePoint)> = None;
        let mut heap = BinaryHeap::new();
        heap.push(Pending {
            sq_dist: self.nodes[0].bbox.sq_distance(p),
            node: 0,
        });

        while let Some(Pending { sq_dist, node }) = heap.pop() {
            if let Some((best_sq, _)) = best {
                if sq_dist > best_sq {
                    break;
                }
            }
            stats.nodes_visited += 1;
            match &self.nodes[node].kind {
                NodeKind::Internal(children) => {
                    for &c in children {
                        heap.push(Pending {
                            sq_dist: self.nodes[c].bbox.sq_distance(p),
                            node: c,
                        });
                    }
                }
                NodeKind::Leaf(tris) => {
                    for &t in tris {
                        if !tested.insert(t) {
                            continue;
                        }
                        let [a, b, c] = mesh.triangle_vertices(t);
                        let hit = closest_point_on_triangle(p, &a, &b, &c);
                        let sq = (hit.point - p).norm_squared();
                        let better = match best {
                            None => true,
                            Some((best_sq, ref sp)) => {
                                sq < best_sq || (sq == best_sq && t < sp.triangle_id)
                            }
                        };
                        if better {
                            best = Some((
                                sq,
                                SurfacePoint {
                                    point: hit.point,
                                    triangle_id: t,
                                    distance: sq.sqrt(),
                                    barycentric: hit.barycentric,
                                },
                            ));
                        }
                    }
                }
            }
        }
        stats.triangles_tested = tested.len();
        (best.expect("octree over a non-empty mesh").1, stats)
    }
}

/// Octree-accelerated closest point on the surface of `mesh`.
pub fn closest_surface_point(
    octree: &Octree,
    mesh: &TriangleMesh,
    p: &Point3<f64>,
) -> Result<SurfacePoint, MeshError> {
    if mesh.is_empty() {
        return Err(MeshError::Empty);
    }
    Ok(octree.closest_point(mesh, p))
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    sq_dist: f64,
    node: usize,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // Min-heap on distance, then node index for a deterministic order.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .sq_dist
            .total_cmp(&self.sq_dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    fn brute_force(mesh: &TriangleMesh, p: &Point3<f64>) -> (f64, Point3<f64>) {
        (0..mesh.triangle_count())
            .map(|t| {
                let [a, b, c] = mesh.triangle_vertices(t);
                let q = closest_point_on_triangle(p, &a, &b, &c).point;
                ((q - p).norm(), q)
            })
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .unwrap()
    }

    fn two_triangles() -> TriangleMesh {
        TriangleMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(1.0, 1.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn small_mesh_is_single_leaf() {
        let tree = Octree::build(&two_triangles(), 6, 10).unwrap();
        assert_eq!(tree.leaf_count(), 1);
        assert_eq!(tree.leaves().next().unwrap().1, &[0, 1]);
    }

    #[test]
    fn empty_mesh_is_rejected() {
        let mesh = TriangleMesh::new(vec![], vec![]).unwrap();
        assert!(matches!(Octree::build(&mesh, 4, 4), Err(MeshError::Empty)));
    }

    #[test]
    fn every_triangle_reachable_and_leaves_cover_root() {
        let mesh = shapes::icosphere(50.0, 3);
        let tree = Octree::build(&mesh, 6, 8).unwrap();
        let mut seen = vec![false; mesh.triangle_count()];
        let mut volume = 0.0;
        for (bb, tris) in tree.leaves() {
            let e = bb.extent();
            volume += e.x * e.y * e.z;
            for &t in tris {
                seen[t] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
        let e = tree.root_box().extent();
        assert!((volume - e.x * e.y * e.z).abs() < 1e-6 * e.x * e.y * e.z);
    }

    #[test]
    fn leaves_hold_every_overlapping_triangle() {
        let mesh = shapes::icosphere(10.0, 2);
        let tree = Octree::build(&mesh, 4, 4).unwrap();
        for (bb, tris) in tree.leaves() {
            for t in 0..mesh.triangle_count() {
                let [a, b, c] = mesh.triangle_vertices(t);
                let tb = BoundingBox::from_points([&a, &b, &c]).unwrap();
                if tb.intersects(bb) {
                    assert!(tris.contains(&t));
                }
            }
        }
    }

    #[test]
    fn vertex_query_returns_vertex() {
        let mesh = shapes::icosphere(20.0, 2);
        let tree = Octree::with_defaults(&mesh).unwrap();
        let v = mesh.vertices()[17];
        let sp = closest_surface_point(&tree, &mesh, &v).unwrap();
        assert!(sp.distance < 1e-12);
        assert!((sp.point - v).norm() < 1e-12);
    }

    #[test]
    fn offset_centroid_query() {
        let mesh = shapes::icosphere(20.0, 2);
        let tree = Octree::with_defaults(&mesh).unwrap();
        let t = 5;
        let [a, b, c] = mesh.triangle_vertices(t);
        let centroid = Point3::from((a.coords + b.coords + c.coords) / 3.0);
        let n = mesh.face_normal(t).normalize();
        let sp = closest_surface_point(&tree, &mesh, &(centroid + n * 5.0)).unwrap();
        assert_eq!(sp.triangle_id, t);
        assert!((sp.distance - 5.0).abs() < 1e-9);
        assert!((sp.point - centroid).norm() < 1e-9);
    }

    #[test]
    fn flat_mesh_matches_brute_force() {
        let mesh = shapes::grid(12, 9, 1.5);
        let tree = Octree::build(&mesh, 6, 4).unwrap();
        for i in 0..200 {
            let f = i as f64;
            let p = Point3::new((f * 0.37).sin() * 12.0, (f * 0.71).cos() * 9.0, (f * 0.13).sin() * 3.0);
            let (sp, stats) = tree.closest_point_with_stats(&mesh, &p);
            let (d, _) = brute_force(&mesh, &p);
            assert!((sp.distance - d).abs() < 1e-9);
            assert!(stats.triangles_tested <= mesh.triangle_count());
        }
    }
}
