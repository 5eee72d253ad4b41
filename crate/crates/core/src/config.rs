//! Parameter blocks for every stage, with defaults set to the values the
//! method was tuned with (3 cm voxels, 16³ volumes, 10 cm truncation, ...).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoxelGridConfig {
    pub voxel_size: f64,
    pub volume_dim: usize,
    pub truncation: f64,
    pub max_weight: f64,
    /// Only volumes within this distance of the camera are re-meshed when a
    /// refined plane changes.
    pub re_mesh_radius: f64,
}

impl Default for VoxelGridConfig {
    fn default() -> Self {
        VoxelGridConfig {
            voxel_size: 0.03,
            volume_dim: 16,
            truncation: 0.10,
            max_weight: 100.0,
            re_mesh_radius: 4.0,
        }
    }
}

impl VoxelGridConfig {
    pub fn volume_edge(&self) -> f64 {
        self.voxel_size * self.volume_dim as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.voxel_size > 0.0) {
            return Err(Error::Config("voxel_size must be positive".into()));
        }
        if self.volume_dim < 2 {
            return Err(Error::Config("volume_dim must be at least 2".into()));
        }
        if !(self.truncation >= 2.0 * self.voxel_size) {
            return Err(Error::Config(
                "truncation must be at least twice the voxel size".into(),
            ));
        }
        if !(self.max_weight >= 1.0) {
            return Err(Error::Config("max_weight must be >= 1".into()));
        }
        Ok(())
    }
}

/// How the Huber function enters the IRLS weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HuberWeightMode {
    /// `w(r) = min(1, δ/|r|)`, i.e. `ρ'(r)/r`.
    Irls,
    /// `w(r) = ρ(r)` taken literally as the weight.
    Loss,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub ransac_max_iters: usize,
    pub ransac_inlier_dist: f64,
    pub ransac_inlier_ratio: f64,
    pub irls_max_iters: usize,
    pub huber_delta: f64,
    pub huber_weight_mode: HuberWeightMode,
    /// Voxels with `|Φ| < sdf_band_factor·τ` take part in the fit.
    pub sdf_band_factor: f64,
    pub accept_mean_abs_residual: f64,
    pub min_valid_voxels: usize,
    pub min_ransac_vertices: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            ransac_max_iters: 100,
            ransac_inlier_dist: 0.02,
            ransac_inlier_ratio: 0.8,
            irls_max_iters: 30,
            huber_delta: 0.05,
            huber_weight_mode: HuberWeightMode::Irls,
            sdf_band_factor: 0.8,
            accept_mean_abs_residual: 0.02,
            min_valid_voxels: 32,
            min_ransac_vertices: 12,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("ransac_inlier_dist", self.ransac_inlier_dist),
            ("huber_delta", self.huber_delta),
            ("sdf_band_factor", self.sdf_band_factor),
            ("accept_mean_abs_residual", self.accept_mean_abs_residual),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.ransac_inlier_ratio > 0.0 && self.ransac_inlier_ratio <= 1.0) {
            return Err(Error::Config("ransac_inlier_ratio must be in (0, 1]".into()));
        }
        if self.ransac_max_iters == 0 || self.irls_max_iters == 0 {
            return Err(Error::Config("iteration limits must be positive".into()));
        }
        if self.min_valid_voxels == 0 || self.min_ransac_vertices < 3 {
            return Err(Error::Config("minimum support guards are too small".into()));
        }
        Ok(())
    }
}

/// Which volume center is projected in the distance test of the
/// compatibility predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompatibilityReading {
    /// Project the candidate's center `v_j` onto `p_i`, measure the distance
    /// of that point to `p_j`.
    CandidateCenter,
    /// Project the hypothesis' center `v_i` onto `p_i`, measure the distance
    /// of that point to `p_j`.
    HypothesisCenter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MergeConfig {
    pub angle_deg: f64,
    pub dist: f64,
    pub ransac_iters: usize,
    pub min_support: usize,
    /// Slab half-width for propagation; `None` means the truncation distance.
    pub propagate_dist: Option<f64>,
    pub compatibility: CompatibilityReading,
}

impl Default for MergeConfig {
    fn default() -> Self {
        MergeConfig {
            angle_deg: 3.0,
            dist: 0.05,
            ransac_iters: 50,
            min_support: 4,
            propagate_dist: None,
            compatibility: CompatibilityReading::CandidateCenter,
        }
    }
}

impl MergeConfig {
    pub fn cos_angle(&self) -> f64 {
        self.angle_deg.to_radians().cos()
    }

    pub fn propagate_dist_or(&self, truncation: f64) -> f64 {
        self.propagate_dist.unwrap_or(truncation)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.angle_deg > 0.0 && self.angle_deg < 90.0) {
            return Err(Error::Config("merge angle must be in (0, 90) degrees".into()));
        }
        if !(self.dist > 0.0) {
            return Err(Error::Config("merge distance must be positive".into()));
        }
        if self.min_support == 0 || self.ransac_iters == 0 {
            return Err(Error::Config("min_support and ransac_iters must be >= 1".into()));
        }
        if let Some(d) = self.propagate_dist {
            if !(d > 0.0) {
                return Err(Error::Config("propagate_dist must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelRules {
    pub floor_min_support: usize,
    pub wall_min_support: usize,
    pub ceiling_min_support: usize,
    pub gravity_angle_tol_deg: f64,
    pub gravity_up: [f64; 3],
}

impl Default for LabelRules {
    fn default() -> Self {
        LabelRules {
            floor_min_support: 4,
            wall_min_support: 4,
            ceiling_min_support: 4,
            gravity_angle_tol_deg: 10.0,
            gravity_up: [0.0, 0.0, 1.0],
        }
    }
}

impl LabelRules {
    pub fn up(&self) -> Vec3 {
        Vec3::from(self.gravity_up)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gravity_angle_tol_deg > 0.0 && self.gravity_angle_tol_deg < 45.0) {
            return Err(Error::Config("gravity angle tolerance must be in (0, 45)".into()));
        }
        if (self.up().norm() - 1.0).abs() > 1e-6 {
            return Err(Error::Config("gravity_up must be a unit vector".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateConfig {
    pub angle_deg: f64,
    pub offset: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig {
            angle_deg: 1.0,
            offset: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    /// `true`: the intersection case fires when the product of two signed
    /// distances lies in `(-τ, 0)`. `false`: mixed signs with both `|s| < τ`.
    pub strict_product_band: bool,
    /// Ignore the extent of floor planes when filling.
    pub infinite_floor: bool,
    /// Weight given to voxels synthesized by hole filling.
    pub fill_weight: f64,
    /// Mesh vertices within this distance of a refined plane of their volume
    /// are attributed to that plane.
    pub plane_vertex_dist: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            strict_product_band: true,
            infinite_floor: false,
            fill_weight: 1.0,
            plane_vertex_dist: 0.02,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        VoxelGridConfig::default().validate().unwrap();
        FitConfig::default().validate().unwrap();
        MergeConfig::default().validate().unwrap();
        LabelRules::default().validate().unwrap();
    }

    #[test]
    fn grid_rejects_thin_truncation() {
        let cfg = VoxelGridConfig {
            truncation: 0.05,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = VoxelGridConfig {
            volume_dim: 1,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn merge_rejects_bad_angle() {
        let cfg = MergeConfig {
            angle_deg: 90.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
