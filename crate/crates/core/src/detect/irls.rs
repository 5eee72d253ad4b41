//! Robust affine regression of the SDF on voxel position.

use nalgebra::{Matrix3, Vector3};

use super::{FitMethod, PlaneCandidate};
use crate::config::{FitConfig, HuberWeightMode, VoxelGridConfig};
use crate::geometry::{Plane, Vec3};
use crate::sdf::Volume;

/// Diagnostic output of one IRLS fit, including rejected ones.
#[derive(Clone, Debug, PartialEq)]
pub struct IrlsReport {
    pub plane: Option<Plane>,
    pub iterations: usize,
    pub valid_voxels: usize,
    pub mean_abs_residual: f64,
    /// `|n|` of the affine gradient before normalization (last solve).
    pub raw_normal_norm: f64,
}

/// Voxel centers and values that take part in the fit.
pub fn band_samples(volume: &Volume, cfg: &FitConfig, grid: &VoxelGridConfig) -> Vec<(Vec3, f64)> {
    let m = grid.volume_dim;
    let band = cfg.sdf_band_factor * grid.truncation;
    let s = grid.voxel_size;
    let e = grid.volume_edge();
    let origin = Vec3::new(
        volume.coord.x as f64 * e,
        volume.coord.y as f64 * e,
        volume.coord.z as f64 * e,
    );
    let mut out = Vec::new();
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                let v = volume.voxels[i + m * (j + m * k)];
                if v.weight > 0.0 && v.sdf.abs() < band {
                    let x = origin
                        + Vec3::new(
                            s * (i as f64 + 0.5),
                            s * (j as f64 + 0.5),
                            s * (k as f64 + 0.5),
                        );
                    out.push((x, v.sdf));
                }
            }
        }
    }
    out
}

fn huber_weight(r: f64, delta: f64, mode: HuberWeightMode) -> f64 {
    let a = r.abs();
    match mode {
        HuberWeightMode::Irls => {
            if a <= delta {
                1.0
            } else {
                delta / a
            }
        }
        HuberWeightMode::Loss => {
            if a <= delta {
                0.5 * r * r
            } else {
                delta * (a - 0.5 * delta)
            }
        }
    }
}

/// Weighted least squares `Φ ≈ n·x + d`, solved in centered coordinates.
/// Returns the unnormalized `(n, d)`.
pub(crate) fn weighted_affine_fit(samples: &[(Vec3, f64)], weights: &[f64]) -> Option<(Vec3, f64)> {
    let wsum: f64 = weights.iter().sum();
    if !(wsum > 0.0) {
        return None;
    }
    let mut xbar = Vec3::zeros();
    let mut fbar = 0.0;
    for ((x, f), w) in samples.iter().zip(weights) {
        xbar += x * *w;
        fbar += f * w;
    }
    xbar /= wsum;
    fbar /= wsum;
    let mut a = Matrix3::zeros();
    let mut b = Vector3::zeros();
    for ((x, f), w) in samples.iter().zip(weights) {
        let dx = x - xbar;
        a += dx * dx.transpose() * *w;
        b += dx * ((f - fbar) * w);
    }
    // scale-aware singularity guard
    let scale = a.trace();
    if !(scale > 0.0) {
        return None;
    }
    let chol = (a / scale).cholesky()?;
    let n = chol.solve(&(b / scale));
    if !n.iter().all(|c| c.is_finite()) {
        return None;
    }
    let d = fbar - n.dot(&xbar);
    Some((n, d))
}

/// Full IRLS run with diagnostics.
pub fn fit_sdf_irls_report(volume: &Volume, cfg: &FitConfig, grid: &VoxelGridConfig) -> IrlsReport {
    let samples = band_samples(volume, cfg, grid);
    irls_on_samples(&samples, cfg)
}

/// IRLS on explicit `(position, Φ)` samples.
pub fn irls_on_samples(samples: &[(Vec3, f64)], cfg: &FitConfig) -> IrlsReport {
    let mut report = IrlsReport {
        plane: None,
        iterations: 0,
        valid_voxels: samples.len(),
        mean_abs_residual: f64::INFINITY,
        raw_normal_norm: 0.0,
    };
    if samples.len() < cfg.min_valid_voxels {
        return report;
    }
    let mut weights = vec![1.0; samples.len()];
    let mut current: Option<Plane> = None;
    for iter in 1..=cfg.irls_max_iters {
        report.iterations = iter;
        let Some((n_raw, d_raw)) = weighted_affine_fit(samples, &weights) else {
            // keep the last good plane if reweighting degenerated
            if current.is_none() {
                return report;
            }
            break;
        };
        let norm = n_raw.norm();
        report.raw_normal_norm = norm;
        if !(norm > 1e-9) {
            return report;
        }
        let plane = Plane {
            n: n_raw / norm,
            d: d_raw / norm,
        };
        let mut changed = false;
        for (w, (x, f)) in weights.iter_mut().zip(samples) {
            let r = plane.signed_distance(x) - f;
            let nw = huber_weight(r, cfg.huber_delta, cfg.huber_weight_mode);
            changed |= nw != *w;
            *w = nw;
        }
        let converged = match current {
            None => !changed,
            Some(prev) => {
                let dn = (plane.n - prev.n).amax();
                dn.max((plane.d - prev.d).abs()) < 1e-6
            }
        };
        current = Some(plane);
        if converged {
            break;
        }
    }
    let plane = current.expect("at least one successful solve");
    // a true SDF has a unit gradient; far flatter fields are not planes
    if report.raw_normal_norm < 0.5 {
        return report;
    }
    let mean = samples
        .iter()
        .map(|(x, f)| (plane.signed_distance(x) - f).abs())
        .sum::<f64>()
        / samples.len() as f64;
    report.mean_abs_residual = mean;
    report.plane = Some(plane);
    report
}

/// Plane candidate from robust least squares on the SDF of one volume.
pub fn fit_sdf_irls(volume: &Volume, cfg: &FitConfig, grid: &VoxelGridConfig) -> Option<PlaneCandidate> {
    let report = fit_sdf_irls_report(volume, cfg, grid);
    let plane = report.plane?;
    (report.mean_abs_residual < cfg.accept_mean_abs_residual).then_some(PlaneCandidate {
        plane,
        volume_coord: volume.coord,
        support: report.valid_voxels,
        mean_abs_residual: report.mean_abs_residual,
        method: FitMethod::SdfIrls,
        iterations: report.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdf::{VolumeCoord, VolumeGrid};

    fn grid() -> VolumeGrid {
        VolumeGrid::new(VoxelGridConfig::default())
    }

    #[test]
    fn exact_plane_in_one_iteration() {
        let mut g = grid();
        let c = VolumeCoord::new(0, 0, 0);
        g.fill_volume_with(c, |x| Some(x.z - 0.24));
        let cand = fit_sdf_irls(g.get(&c).unwrap(), &FitConfig::default(), &g.config).unwrap();
        assert!((cand.plane.n - Vec3::z()).norm() < 1e-12);
        assert!((cand.plane.d + 0.24).abs() < 1e-12);
        assert_eq!(cand.iterations, 1);
        assert!(cand.mean_abs_residual < 1e-12);
    }

    #[test]
    fn sphere_is_rejected() {
        let mut g = grid();
        let c = VolumeCoord::new(0, 0, 0);
        let center = g.volume_center(&c);
        g.fill_volume_with(c, |x| Some((x - center).norm() - 0.2));
        assert!(fit_sdf_irls(g.get(&c).unwrap(), &FitConfig::default(), &g.config).is_none());
    }

    #[test]
    fn too_few_voxels_is_rejected() {
        let mut g = grid();
        let c = VolumeCoord::new(0, 0, 0);
        g.fill_volume_with(c, |x| (x.x < 0.05 && x.y < 0.05).then(|| x.z - 0.24));
        // 1x1 columns of 2x2 voxels: only a handful in the band
        assert!(fit_sdf_irls(g.get(&c).unwrap(), &FitConfig::default(), &g.config).is_none());
    }

    #[test]
    fn constant_field_is_rejected() {
        let mut g = grid();
        let c = VolumeCoord::new(0, 0, 0);
        g.fill_volume_with(c, |_| Some(0.01));
        let r = fit_sdf_irls_report(g.get(&c).unwrap(), &FitConfig::default(), &g.config);
        assert!(r.plane.is_none());
    }

    #[test]
    fn loss_mode_still_fits_clean_plane() {
        let mut g = grid();
        let c = VolumeCoord::new(0, 0, 0);
        g.fill_volume_with(c, |x| Some(0.6 * x.x + 0.8 * x.z - 0.3));
        let cfg = FitConfig {
            huber_weight_mode: HuberWeightMode::Loss,
            ..Default::default()
        };
        let r = fit_sdf_irls_report(g.get(&c).unwrap(), &cfg, &g.config);
        let p = r.plane.unwrap();
        assert!((p.n - Vec3::new(0.6, 0.0, 0.8)).norm() < 1e-9);
    }
}
