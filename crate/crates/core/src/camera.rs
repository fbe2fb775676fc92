//! Orthographic cameras and randomized view sampling.
//!
//! Image coordinates are continuous pixels: `u` grows to the right, `v`
//! grows downward, and the center of pixel `(i, j)` is `(i + 0.5, j + 0.5)`.
//! Depth is the distance along the view axis, normalized so the near plane
//! maps to 0 and the far plane to 1.

use nalgebra::{Matrix4, Point3, Unit, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::mesh::TriangleMesh;

pub const DEFAULT_RESOLUTION: u32 = 256;
pub const DEFAULT_VIEW_COUNT: usize = 100;
pub const DEFAULT_CAP_HALF_ANGLE: f64 = 60.0;
/// Camera distance from the focal point, in bounding-sphere radii.
pub const DISTANCE_FACTOR: f64 = 2.0;
/// Orthographic half extent, in bounding-sphere radii.
pub const EXTENT_FACTOR: f64 = 1.05;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CameraError {
    #[error("view direction is zero or parallel to the up vector")]
    DegenerateOrientation,
    #[error("near ({near}) must be smaller than far ({far})")]
    DepthRange { near: f64, far: f64 },
    #[error("orthographic half extents must be positive")]
    Extent,
    #[error("image size must be positive")]
    ImageSize,
    #[error("mesh bounding box has zero extent")]
    DegenerateMesh,
    #[error("invalid sampling configuration: {0}")]
    Config(String),
}

/// Orthographic camera with its image geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub position: Point3<f64>,
    pub focal_point: Point3<f64>,
    pub up: Vector3<f64>,
    pub ortho_half_width: f64,
    pub ortho_half_height: f64,
    pub near: f64,
    pub far: f64,
    pub image_width: u32,
    pub image_height: u32,
}

/// Result of projecting a world point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

/// Orthonormal camera frame: `right × up = -forward`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraFrame {
    pub right: Vector3<f64>,
    pub up: Vector3<f64>,
    pub forward: Vector3<f64>,
}

impl CameraSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        position: Point3<f64>,
        focal_point: Point3<f64>,
        up: Vector3<f64>,
        ortho_half_width: f64,
        ortho_half_height: f64,
        near: f64,
        far: f64,
        image_width: u32,
        image_height: u32,
    ) -> Result<Self, CameraError> {
        let cam = Self {
            position,
            focal_point,
            up: up.try_normalize(0.0).ok_or(CameraError::DegenerateOrientation)?,
            ortho_half_width,
            ortho_half_height,
            near,
            far,
            image_width,
            image_height,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Checks the camera invariants; deserialized cameras should pass through here.
    pub fn validate(&self) -> Result<(), CameraError> {
        let f = self.focal_point - self.position;
        let f_norm = f.norm();
        let up_norm = self.up.norm();
        if !(f_norm > 0.0) || !(up_norm > 0.0) || f.cross(&self.up).norm() <= 1e-12 * f_norm * up_norm {
            return Err(CameraError::DegenerateOrientation);
        }
        if !(self.near < self.far) {
            return Err(CameraError::DepthRange {
                near: self.near,
                far: self.far,
            });
        }
        if !(self.ortho_half_width > 0.0 && self.ortho_half_height > 0.0) {
            return Err(CameraError::Extent);
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(CameraError::ImageSize);
        }
        Ok(())
    }

    pub fn frame(&self) -> CameraFrame {
        let forward = (self.focal_point - self.position).normalize();
        let right = forward.cross(&self.up).normalize();
        let up = right.cross(&forward);
        CameraFrame { right, up, forward }
    }

    /// Unit view direction, from the camera toward the scene.
    pub fn view_direction(&self) -> Vector3<f64> {
        self.frame().forward
    }

    /// Width of one pixel in world units (mm).
    pub fn pixel_size(&self) -> f64 {
        2.0 * self.ortho_half_width / self.image_width as f64
    }

    fn half_size(&self) -> (f64, f64) {
        (self.image_width as f64 / 2.0, self.image_height as f64 / 2.0)
    }

    pub fn project(&self, p: &Point3<f64>) -> Projection {
        let fr = self.frame();
        let (hw, hh) = self.half_size();
        let rel = p - self.focal_point;
        let x = rel.dot(&fr.right) / self.ortho_half_width;
        let y = rel.dot(&fr.up) / self.ortho_half_height;
        let t = (p - self.position).dot(&fr.forward);
        Projection {
            u: (1.0 + x) * hw,
            v: (1.0 - y) * hh,
            depth: (t - self.near) / (self.far - self.near),
        }
    }

    /// Affine map from world coordinates to `(u, v, depth, 1)`.
    pub fn matrix(&self) -> Matrix4<f64> {
        let fr = self.frame();
        let (hw, hh) = self.half_size();
        let sx = hw / self.ortho_half_width;
        let sy = hh / self.ortho_half_height;
        let sz = 1.0 / (self.far - self.near);
        let c = self.focal_point.coords;
        let e = self.position.coords;
        Matrix4::new(
            sx * fr.right.x,
            sx * fr.right.y,
            sx * fr.right.z,
            hw - sx * fr.right.dot(&c),
            -sy * fr.up.x,
            -sy * fr.up.y,
            -sy * fr.up.z,
            hh + sy * fr.up.dot(&c),
            sz * fr.forward.x,
            sz * fr.forward.y,
            sz * fr.forward.z,
            -sz * (fr.forward.dot(&e) + self.near),
            0.0,
            0.0,
            0.0,
            1.0,
        )
    }

    /// Inverse of [`CameraSpec::matrix`], mapping `(u, v, depth, 1)` back to world space.
    pub fn inverse_matrix(&self) -> Matrix4<f64> {
        let fr = self.frame();
        let (hw, hh) = self.half_size();
        let ax = self.ortho_half_width / hw;
        let ay = self.ortho_half_height / hh;
        let az = self.far - self.near;
        // world = c + r·ax·(u - hw) - up·ay·(v - hh) + f·(near + az·d) + f·((e - c)·f)
        let origin = self.focal_point.coords
            + fr.forward * (self.near + (self.position - self.focal_point).dot(&fr.forward));
        let col_u = fr.right * ax;
        let col_v = -fr.up * ay;
        let col_d = fr.forward * az;
        let offset = origin - col_u * hw - col_v * hh;
        Matrix4::from_columns(&[
            Vector4::new(col_u.x, col_u.y, col_u.z, 0.0),
            Vector4::new(col_v.x, col_v.y, col_v.z, 0.0),
            Vector4::new(col_d.x, col_d.y, col_d.z, 0.0),
            Vector4::new(offset.x, offset.y, offset.z, 1.0),
        ])
    }

    /// World point for image position `(u, v)` at normalized depth `depth`.
    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Point3<f64> {
        let w = self.inverse_matrix() * Vector4::new(u, v, depth, 1.0);
        Point3::new(w.x, w.y, w.z)
    }

    /// True when `(u, v)` lies within the image rectangle.
    pub fn in_image(&self, u: f64, v: f64) -> bool {
        (0.0..=self.image_width as f64).contains(&u) && (0.0..=self.image_height as f64).contains(&v)
    }

    /// Camera after applying the rigid motion `x ↦ R x + t` to the world.
    pub fn transformed(&self, rotation: &nalgebra::Rotation3<f64>, translation: &Vector3<f64>) -> Self {
        Self {
            position: rotation * self.position + translation,
            focal_point: rotation * self.focal_point + translation,
            up: rotation * self.up,
            ..self.clone()
        }
    }
}

/// Settings for [`sample_cameras`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSamplingConfig {
    pub view_count: usize,
    /// Approximate facing direction of the scan.
    pub frontal_axis: Vector3<f64>,
    /// Half angle of the spherical cap, in degrees.
    pub cap_half_angle: f64,
    pub rng_seed: u64,
    pub image_width: u32,
    pub image_height: u32,
}

impl Default for ViewSamplingConfig {
    fn default() -> Self {
        Self {
            view_count: DEFAULT_VIEW_COUNT,
            frontal_axis: Vector3::z(),
            cap_half_angle: DEFAULT_CAP_HALF_ANGLE,
            rng_seed: 0,
            image_width: DEFAULT_RESOLUTION,
            image_height: DEFAULT_RESOLUTION,
        }
    }
}

impl ViewSamplingConfig {
    pub fn validate(&self) -> Result<(), CameraError> {
        if self.view_count < 1 {
            return Err(CameraError::Config("view_count must be at least 1".into()));
        }
        // zero is accepted and collapses the cap onto the frontal axis
        if !(0.0..=180.0).contains(&self.cap_half_angle) {
            return Err(CameraError::Config(format!(
                "cap_half_angle must be in [0, 180], got {}",
                self.cap_half_angle
            )));
        }
        if self.frontal_axis.try_normalize(0.0).is_none() {
            return Err(CameraError::Config("frontal_axis must be nonzero".into()));
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(CameraError::ImageSize);
        }
        Ok(())
    }
}

/// World +y projected orthogonal to the view axis, or +z when they are parallel.
pub fn default_up(forward: &Vector3<f64>) -> Vector3<f64> {
    let f = forward.normalize();
    let project = |a: Vector3<f64>| a - f * f.dot(&a);
    let up = project(Vector3::y());
    if up.norm() > 1e-9 {
        up.normalize()
    } else {
        project(Vector3::z()).normalize()
    }
}

/// Cameras spread uniformly over a spherical cap around the frontal axis.
///
/// The focal point is the center of the mesh bounding box; cameras sit at
/// twice the bounding-sphere radius from it, the orthographic window is
/// 1.05 radii wide in each direction, and near/far bracket the bounding box
/// along each view axis. The `i`-th camera depends only on the seed and `i`,
/// so a smaller `view_count` yields a prefix of a larger one.
pub fn sample_cameras(mesh: &TriangleMesh, config: &ViewSamplingConfig) -> Result<Vec<CameraSpec>, CameraError> {
    config.validate()?;
    let bbox = mesh.bounding_box().ok_or(CameraError::DegenerateMesh)?;
    let radius = bbox.bounding_radius();
    if !(radius > 0.0) {
        return Err(CameraError::DegenerateMesh);
    }
    let center = bbox.center();
    let corners = bbox.corners();
    let axis = Unit::new_normalize(config.frontal_axis);
    let (e1, e2) = orthonormal_complement(&axis);
    let cos_cap = config.cap_half_angle.to_radians().cos();

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut cameras = Vec::with_capacity(config.view_count);
    for _ in 0..config.view_count {
        let z: f64 = 1.0 - rng.random::<f64>() * (1.0 - cos_cap);
        let phi: f64 = rng.random::<f64>() * std::f64::consts::TAU;
        let s = (1.0 - z * z).max(0.0).sqrt();
        let dir = axis.into_inner() * z + (e1 * phi.cos() + e2 * phi.sin()) * s;
        let position = center + dir * (DISTANCE_FACTOR * radius);
        let forward = -dir;
        let (near, far) = corners
            .iter()
            .map(|c| (c - position).dot(&forward))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t), hi.max(t)));
        // a planar mesh seen face-on has zero depth range
        let min_span = 1e-6 * radius;
        let (near, far) = if far - near < min_span {
            let mid = 0.5 * (near + far);
            (mid - 0.5 * min_span, mid + 0.5 * min_span)
        } else {
            (near, far)
        };
        cameras.push(CameraSpec::new(
            position,
            center,
            default_up(&forward),
            EXTENT_FACTOR * radius,
            EXTENT_FACTOR * radius,
            near,
            far,
            config.image_width,
            config.image_height,
        )?);
    }
    Ok(cameras)
}

fn orthonormal_complement(axis: &Unit<Vector3<f64>>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if axis.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = axis.cross(&helper).normalize();
    let e2 = axis.cross(&e1);
    (e1, e2)
}

/// Free-function form of [`CameraSpec::project`].
pub fn project_point(camera: &CameraSpec, p: &Point3<f64>) -> Projection {
    camera.project(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;
    use proptest::prelude::*;

    fn test_camera() -> CameraSpec {
        CameraSpec::new(
            Point3::new(10.0, 20.0, 200.0),
            Point3::new(10.0, 20.0, 0.0),
            Vector3::y(),
            50.0,
            50.0,
            100.0,
            300.0,
            256,
            256,
        )
        .unwrap()
    }

    #[test]
    fn focal_point_hits_image_center() {
        let cam = test_camera();
        let p = cam.project(&cam.focal_point);
        assert_eq!((p.u, p.v), (128.0, 128.0));
        assert!((p.depth - 0.5).abs() < 1e-15);
    }

    #[test]
    fn right_edge_of_frustum() {
        let cam = test_camera();
        let fr = cam.frame();
        let p = cam.project(&(cam.focal_point + fr.right * cam.ortho_half_width));
        assert!((p.u - 256.0).abs() < 1e-12);
        let p = cam.project(&(cam.focal_point + fr.up * cam.ortho_half_height));
        assert!(p.v.abs() < 1e-12);
    }

    #[test]
    fn matrix_agrees_with_project_and_inverts() {
        let cam = sample_cameras(&shapes::unit_cube(), &ViewSamplingConfig { view_count: 5, ..Default::default() })
            .unwrap()
            .pop()
            .unwrap();
        let p = Point3::new(0.3, -0.2, 0.9);
        let proj = cam.project(&p);
        let m = cam.matrix() * p.to_homogeneous();
        assert!((m.x - proj.u).abs() < 1e-9 && (m.y - proj.v).abs() < 1e-9 && (m.z - proj.depth).abs() < 1e-12);
        let id = cam.matrix() * cam.inverse_matrix();
        assert!((id - Matrix4::identity()).norm() < 1e-12);
        assert!((cam.unproject(proj.u, proj.v, proj.depth) - p).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_cameras() {
        let c = test_camera();
        assert_eq!(
            CameraSpec::new(c.position, c.position, c.up, 1.0, 1.0, 0.0, 1.0, 8, 8),
            Err(CameraError::DegenerateOrientation)
        );
        assert_eq!(
            CameraSpec::new(c.position, c.focal_point, Vector3::z(), 1.0, 1.0, 0.0, 1.0, 8, 8),
            Err(CameraError::DegenerateOrientation)
        );
        assert!(matches!(
            CameraSpec::new(c.position, c.focal_point, c.up, 1.0, 1.0, 2.0, 1.0, 8, 8),
            Err(CameraError::DepthRange { .. })
        ));
        assert_eq!(
            CameraSpec::new(c.position, c.focal_point, c.up, 0.0, 1.0, 0.0, 1.0, 8, 8),
            Err(CameraError::Extent)
        );
    }

    #[test]
    fn sampling_is_deterministic_and_prefix_stable() {
        let mesh = shapes::icosphere(80.0, 2);
        let cfg = ViewSamplingConfig { rng_seed: 42, ..Default::default() };
        let a = sample_cameras(&mesh, &cfg).unwrap();
        let b = sample_cameras(&mesh, &cfg).unwrap();
        assert_eq!(a, b);
        let short = sample_cameras(&mesh, &ViewSamplingConfig { view_count: 25, ..cfg.clone() }).unwrap();
        assert_eq!(&a[..25], &short[..]);
        let other = sample_cameras(&mesh, &ViewSamplingConfig { rng_seed: 43, ..cfg }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn zero_cap_puts_cameras_on_axis() {
        let mesh = shapes::icosphere(80.0, 1);
        let cfg = ViewSamplingConfig { cap_half_angle: 0.0, view_count: 10, ..Default::default() };
        for cam in sample_cameras(&mesh, &cfg).unwrap() {
            let dir = (cam.position - cam.focal_point).normalize();
            assert!((dir - Vector3::z()).norm() < 1e-12);
        }
    }

    #[test]
    fn cameras_stay_within_cap_at_fixed_distance() {
        let mesh = shapes::icosphere(80.0, 1);
        let radius = mesh.bounding_box().unwrap().bounding_radius();
        let axis = Vector3::new(1.0, 1.0, 0.0).normalize();
        let cfg = ViewSamplingConfig { frontal_axis: axis, cap_half_angle: 30.0, ..Default::default() };
        for cam in sample_cameras(&mesh, &cfg).unwrap() {
            let d = cam.position - cam.focal_point;
            assert!((d.norm() - 2.0 * radius).abs() < 1e-9);
            assert!(d.normalize().dot(&axis) >= 30f64.to_radians().cos() - 1e-12);
            assert!(cam.near > 0.0 && cam.near < cam.far);
        }
    }

    #[test]
    fn cube_vertices_project_inside_every_view() {
        let mesh = shapes::unit_cube();
        let cams = sample_cameras(&mesh, &ViewSamplingConfig { rng_seed: 5, ..Default::default() }).unwrap();
        assert_eq!(cams.len(), 100);
        for cam in &cams {
            for v in mesh.vertices() {
                let p = cam.project(v);
                assert!(cam.in_image(p.u, p.v));
                assert!((-1e-12..=1.0 + 1e-12).contains(&p.depth));
            }
        }
    }

    #[test]
    fn degenerate_inputs() {
        let point_mesh = TriangleMesh::new(vec![Point3::origin(); 3], vec![[0, 1, 2]]).unwrap();
        assert_eq!(
            sample_cameras(&point_mesh, &ViewSamplingConfig::default()),
            Err(CameraError::DegenerateMesh)
        );
        let mesh = shapes::unit_cube();
        let bad = ViewSamplingConfig { view_count: 0, ..Default::default() };
        assert!(matches!(sample_cameras(&mesh, &bad), Err(CameraError::Config(_))));
        let bad = ViewSamplingConfig { cap_half_angle: 200.0, ..Default::default() };
        assert!(matches!(sample_cameras(&mesh, &bad), Err(CameraError::Config(_))));
    }

    #[test]
    fn flat_mesh_face_on_has_positive_depth_range() {
        let mesh = shapes::grid(4, 4, 1.0);
        let cfg = ViewSamplingConfig { cap_half_angle: 0.0, view_count: 1, ..Default::default() };
        let cam = &sample_cameras(&mesh, &cfg).unwrap()[0];
        assert!(cam.far > cam.near);
    }

    #[test]
    fn up_falls_back_to_z() {
        assert_eq!(default_up(&Vector3::new(0.0, -1.0, 0.0)), Vector3::z());
        let up = default_up(&Vector3::new(1.0, 0.0, 0.0));
        assert_eq!(up, Vector3::y());
    }

    proptest! {
        #[test]
        fn unproject_inverts_project(x in -60.0..60.0f64, y in -60.0..60.0f64, z in -90.0..90.0f64) {
            let cam = test_camera();
            let p = Point3::new(x, y, z);
            let proj = cam.project(&p);
            let back = cam.unproject(proj.u, proj.v, proj.depth);
            prop_assert!((back - p).norm() < 1e-9);
        }
    }
}
