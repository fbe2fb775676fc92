//! Ray fusion: back-projection of detections, least-squares ray
//! intersection, RANSAC over ray triples and snapping to the surface.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Point3, Unit, Vector3};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::CameraSpec;
use crate::detector::Detection2D;
use crate::linalg::pinv_symmetric3;
use crate::mesh::{Octree, TriangleMesh};
use crate::rng;

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const PINV_RELATIVE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConsensusError {
    #[error("need at least {needed} rays, got {got}")]
    TooFewRays { needed: usize, got: usize },
    #[error("detection belongs to view {detection} but camera is for view {camera}")]
    ViewMismatch { detection: usize, camera: usize },
    #[error("detection references view {0} but no such camera exists")]
    UnknownView(usize),
    #[error("invalid RANSAC config: {0}")]
    Config(String),
    #[error("ray direction must be nonzero and finite")]
    DegenerateRay,
}

/// Ray `a + t n` with unit `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandmarkRay {
    pub origin: Point3<f64>,
    pub direction: Unit<Vector3<f64>>,
    pub landmark_id: usize,
    pub view_id: usize,
    pub confidence: f64,
}

impl LandmarkRay {
    pub fn new(origin: Point3<f64>, direction: Vector3<f64>) -> Result<Self, ConsensusError> {
        let n = direction.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(ConsensusError::DegenerateRay);
        }
        Ok(Self {
            origin,
            direction: Unit::new_unchecked(direction / n),
            landmark_id: 0,
            view_id: 0,
            confidence: 1.0,
        })
    }

    pub fn at(&self, t: f64) -> Point3<f64> {
        self.origin + self.direction.into_inner() * t
    }
}

/// Ray through detection pixel `(u, v)` of `camera`, which must be the camera of `camera_view_id`.
/// The origin lies on the near plane and the direction is the view axis.
pub fn back_project(
    camera: &CameraSpec,
    camera_view_id: usize,
    detection: &Detection2D,
) -> Result<LandmarkRay, ConsensusError> {
    if camera_view_id != detection.view_id {
        return Err(ConsensusError::ViewMismatch {
            detection: detection.view_id,
            camera: camera_view_id,
        });
    }
    let origin = camera.unproject(detection.u, detection.v, 0.0);
    Ok(LandmarkRay {
        origin,
        direction: Unit::new_normalize(camera.view_direction()),
        landmark_id: detection.landmark_id,
        view_id: detection.view_id,
        confidence: detection.confidence,
    })
}

/// Squared perpendicular distance from `p` to the ray line, i.e.
/// `|p − a|² − ((p − a)·n)²`. Evaluated as the squared rejection of `p − a`
/// from `n`, which avoids cancellation far from the origin.
pub fn point_to_ray_sqdist(p: &Point3<f64>, ray: &LandmarkRay) -> f64 {
    let d = p - ray.origin;
    let n = ray.direction.into_inner();
    (d - n * d.dot(&n)).norm_squared()
}

/// Least-squares intersection of rays, solved as `p = S⁺C` with
/// `S = Σ(nnᵀ − I)` and `C = Σ(nnᵀ − I)a`. The flag is false when `S` is
/// rank deficient, in which case the minimum-norm minimizer is returned.
pub fn lsq_point_from_rays(rays: &[LandmarkRay]) -> Result<(Point3<f64>, bool), ConsensusError> {
    if rays.len() < 2 {
        return Err(ConsensusError::TooFewRays {
            needed: 2,
            got: rays.len(),
        });
    }
    let mut s = Matrix3::zeros();
    let mut c = Vector3::zeros();
    for r in rays {
        let n = r.direction.into_inner();
        let m = n * n.transpose() - Matrix3::identity();
        s += m;
        c += m * r.origin.coords;
    }
    let (pinv, rank) = pinv_symmetric3(&s, PINV_RELATIVE_TOLERANCE);
    Ok((Point3::from(pinv * c), rank == 3))
}

/// Root mean square ray distance of `p` over `rays`.
pub fn rms_distance(p: &Point3<f64>, rays: &[LandmarkRay]) -> f64 {
    if rays.is_empty() {
        return 0.0;
    }
    (rays.iter().map(|r| point_to_ray_sqdist(p, r)).sum::<f64>() / rays.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacConfig {
    pub iterations: usize,
    /// Ray distance (mm) below which a ray supports a hypothesis.
    pub inlier_threshold: f64,
    pub min_inliers: usize,
    pub rng_seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            inlier_threshold: 2.0,
            min_inliers: 3,
            rng_seed: 0,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<(), ConsensusError> {
        if self.iterations == 0 {
            return Err(ConsensusError::Config("iterations must be at least 1".into()));
        }
        if !(self.inlier_threshold > 0.0 && self.inlier_threshold.is_finite()) {
            return Err(ConsensusError::Config(format!(
                "inlier threshold {} must be positive",
                self.inlier_threshold
            )));
        }
        if self.min_inliers < 3 {
            return Err(ConsensusError::Config(format!("min_inliers {} below 3", self.min_inliers)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacOutcome {
    pub point: Point3<f64>,
    /// Inlier rays in sorted `(view_id, landmark_id)` order.
    pub inliers: Vec<LandmarkRay>,
    pub rms_residual: f64,
    pub ok: bool,
}

/// Robust ray fusion. Each iteration fits three distinct random rays and
/// counts rays within the threshold; the best hypothesis (most inliers, then
/// lowest inlier RMS) is refit on its inliers.
///
/// Rays are sorted by `(view_id, landmark_id)` before sampling, so the
/// result does not depend on input order.
pub fn ransac_consensus(rays: &[LandmarkRay], config: &RansacConfig) -> Result<RansacOutcome, ConsensusError> {
    config.validate()?;
    if rays.len() < config.min_inliers {
        return Err(ConsensusError::TooFewRays {
            needed: config.min_inliers,
            got: rays.len(),
        });
    }
    let mut sorted = rays.to_vec();
    sorted.sort_by_key(|r| (r.view_id, r.landmark_id));
    let n = sorted.len();
    let threshold_sq = config.inlier_threshold * config.inlier_threshold;
    let mut rng = rng::stream(config.rng_seed, &[]);

    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut subset = Vec::with_capacity(n);
    for _ in 0..config.iterations {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let (lo, hi) = (i.min(j), i.max(j));
        let mut k = rng.random_range(0..n - 2);
        if k >= lo {
            k += 1;
        }
        if k >= hi {
            k += 1;
        }
        let (p, ok) = lsq_point_from_rays(&[sorted[i], sorted[j], sorted[k]])?;
        if !ok {
            continue;
        }
        subset.clear();
        let mut sq_sum = 0.0;
        for (idx, r) in sorted.iter().enumerate() {
            let d = point_to_ray_sqdist(&p, r);
            if d < threshold_sq {
                subset.push(idx);
                sq_sum += d;
            }
        }
        let rms = (sq_sum / subset.len().max(1) as f64).sqrt();
        let better = match &best {
            None => true,
            Some((b, brms)) => subset.len() > b.len() || (subset.len() == b.len() && rms < *brms),
        };
        if better {
            best = Some((subset.clone(), rms));
        }
    }

    let Some((idx, _)) = best else {
        // every sample was degenerate (e.g. all rays parallel)
        let (point, _) = lsq_point_from_rays(&sorted)?;
        return Ok(RansacOutcome {
            point,
            rms_residual: rms_distance(&point, &sorted),
            inliers: Vec::new(),
            ok: false,
        });
    };
    let inliers: Vec<LandmarkRay> = idx.iter().map(|&i| sorted[i]).collect();
    let (point, full_rank) = if inliers.len() >= 2 {
        lsq_point_from_rays(&inliers)?
    } else {
        (Point3::origin(), false)
    };
    Ok(RansacOutcome {
        point,
        rms_residual: rms_distance(&point, &inliers),
        ok: full_rank && inliers.len() >= config.min_inliers,
        inliers,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementStatus {
    Placed,
    /// Fewer detections than the inlier quorum.
    InsufficientRays,
    /// RANSAC found no well-conditioned hypothesis with enough support.
    NoConsensus,
}

/// Outcome for one landmark. Position fields are absent unless placed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusResult {
    pub landmark_id: usize,
    pub p: Option<[f64; 3]>,
    pub surface_point: Option<[f64; 3]>,
    pub inlier_views: Vec<usize>,
    pub rms_residual: Option<f64>,
    pub ray_count_used: usize,
    pub status: PlacementStatus,
}

impl ConsensusResult {
    pub fn is_placed(&self) -> bool {
        self.status == PlacementStatus::Placed
    }

    pub fn surface_point(&self) -> Option<Point3<f64>> {
        self.surface_point.map(Point3::from)
    }

    fn absent(landmark_id: usize, rays: usize, status: PlacementStatus) -> Self {
        Self {
            landmark_id,
            p: None,
            surface_point: None,
            inlier_views: Vec::new(),
            rms_residual: None,
            ray_count_used: rays,
            status,
        }
    }
}

/// Places every landmark in `landmark_ids` plus any detected ones.
///
/// `cameras[v]` must be the camera of view `v`. Each landmark uses its own
/// RANSAC stream derived from the config seed and the landmark id. Results
/// are sorted by landmark id.
pub fn place_landmarks(
    mesh: &TriangleMesh,
    octree: &Octree,
    cameras: &[CameraSpec],
    detections: &[Detection2D],
    landmark_ids: &[usize],
    config: &RansacConfig,
) -> Result<Vec<ConsensusResult>, ConsensusError> {
    config.validate()?;
    let mut groups: BTreeMap<usize, Vec<LandmarkRay>> = landmark_ids.iter().map(|&id| (id, Vec::new())).collect();
    for d in detections {
        let camera = cameras.get(d.view_id).ok_or(ConsensusError::UnknownView(d.view_id))?;
        groups.entry(d.landmark_id).or_default().push(back_project(camera, d.view_id, d)?);
    }
    groups
        .into_par_iter()
        .map(|(id, rays)| {
            if rays.len() < config.min_inliers {
                return Ok(ConsensusResult::absent(id, rays.len(), PlacementStatus::InsufficientRays));
            }
            let cfg = RansacConfig {
                rng_seed: rng::derive_seed(config.rng_seed, &[id as u64]),
                ..*config
            };
            let outcome = ransac_consensus(&rays, &cfg)?;
            if !outcome.ok {
                return Ok(ConsensusResult::absent(id, rays.len(), PlacementStatus::NoConsensus));
            }
            let snapped = octree.closest_point(mesh, &outcome.point);
            Ok(ConsensusResult {
                landmark_id: id,
                p: Some(outcome.point.coords.into()),
                surface_point: Some(snapped.point.coords.into()),
                inlier_views: outcome.inliers.iter().map(|r| r.view_id).collect(),
                rms_residual: Some(outcome.rms_residual),
                ray_count_used: outcome.inliers.len(),
                status: PlacementStatus::Placed,
            })
        })
        .collect()
}
