//! 3-point RANSAC on the vertices of a volume mesh.

use nalgebra::{Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FitMethod, PlaneCandidate};
use crate::config::FitConfig;
use crate::geometry::{Plane, Vec3};
use crate::sdf::{VolumeCoord, VolumeMesh};

/// Plane through the smallest-eigenvalue direction of the point covariance.
pub fn covariance_plane(points: &[Vec3]) -> Option<Plane> {
    if points.len() < 3 {
        return None;
    }
    let centroid = points.iter().sum::<Vec3>() / points.len() as f64;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut k = 0;
    for i in 1..3 {
        if eig.eigenvalues[i] < eig.eigenvalues[k] {
            k = i;
        }
    }
    let n = eig.eigenvectors.column(k).into_owned();
    Plane::from_point_normal(&centroid, &n)
}

struct Model {
    plane: Plane,
    inliers: usize,
    rms: f64,
}

pub fn fit_ransac_mesh(mesh: &VolumeMesh, cfg: &FitConfig, rng_seed: u64) -> Option<PlaneCandidate> {
    let pts: Vec<Vec3> = mesh.vertices.iter().map(|v| v.position).collect();
    let n = pts.len();
    if n < cfg.min_ransac_vertices.max(3) {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let thr = cfg.ransac_inlier_dist;
    let mut best: Option<Model> = None;
    for _ in 0..cfg.ransac_max_iters {
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let mut c = rng.random_range(0..n - 2);
        for taken in [a.min(b), a.max(b)] {
            if c >= taken {
                c += 1;
            }
        }
        let normal = (pts[b] - pts[a]).cross(&(pts[c] - pts[a]));
        let scale = (pts[b] - pts[a]).norm_squared().max((pts[c] - pts[a]).norm_squared());
        if normal.norm_squared() <= 1e-18 * scale * scale || scale == 0.0 {
            continue;
        }
        let Some(plane) = Plane::from_point_normal(&pts[a], &normal) else {
            continue;
        };
        let mut count = 0;
        let mut sq = 0.0;
        for p in &pts {
            let s = plane.signed_distance(p);
            if s.abs() <= thr {
                count += 1;
                sq += s * s;
            }
        }
        let rms = (sq / count.max(1) as f64).sqrt();
        let better = match &best {
            None => true,
            Some(m) => count > m.inliers || (count == m.inliers && rms < m.rms),
        };
        if better {
            best = Some(Model {
                plane,
                inliers: count,
                rms,
            });
        }
    }
    let best = best?;
    if (best.inliers as f64) < cfg.ransac_inlier_ratio * n as f64 {
        return None;
    }
    let inliers: Vec<Vec3> = pts
        .iter()
        .copied()
        .filter(|p| best.plane.signed_distance(p).abs() <= thr)
        .collect();
    let mut plane = covariance_plane(&inliers)?;
    if plane.n.dot(&mesh.mean_face_normal()) < 0.0 {
        plane = plane.flipped();
    }
    let mean_abs = inliers
        .iter()
        .map(|p| plane.signed_distance(p).abs())
        .sum::<f64>()
        / inliers.len() as f64;
    if mean_abs > cfg.accept_mean_abs_residual {
        return None;
    }
    Some(PlaneCandidate {
        plane,
        volume_coord: mesh.coord.unwrap_or(VolumeCoord::new(0, 0, 0)),
        support: inliers.len(),
        mean_abs_residual: mean_abs,
        method: FitMethod::RansacMesh,
        iterations: cfg.ransac_max_iters,
    })
}
