//! Local plane candidates, at most one per volume.

mod irls;
mod ransac;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::FitConfig;
use crate::geometry::Plane;
use crate::sdf::{extract_mesh_with, VolumeCoord, VolumeGrid};

pub use irls::{band_samples, fit_sdf_irls, fit_sdf_irls_report, irls_on_samples, IrlsReport};
pub use ransac::{covariance_plane, fit_ransac_mesh};


#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    RansacMesh,
    SdfIrls,
}

impl FitMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            FitMethod::RansacMesh => "ransac-mesh",
            FitMethod::SdfIrls => "sdf-irls",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlaneCandidate {
    pub plane: Plane,
    pub volume_coord: VolumeCoord,
    /// Band voxels (SdfIrls) or inlier vertices (RansacMesh).
    pub support: usize,
    pub mean_abs_residual: f64,
    pub method: FitMethod,
    pub iterations: usize,
}

/// Seed for the RANSAC of one volume, derived from the run seed.
pub fn volume_seed(seed: u64, coord: &VolumeCoord) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for c in coord.as_array() {
        h ^= c as i64 as u64;
        h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 31;
    }
    h
}

/// Fits one volume with the chosen method. RANSAC meshes the raw field first.
pub fn fit_volume(
    grid: &VolumeGrid,
    coord: &VolumeCoord,
    method: FitMethod,
    cfg: &FitConfig,
    seed: u64,
) -> Option<PlaneCandidate> {
    match method {
        FitMethod::SdfIrls => fit_sdf_irls(grid.get(coord)?, cfg, &grid.config),
        FitMethod::RansacMesh => {
            let mesh = extract_mesh_with(grid, *coord, |_, v| crate::sdf::raw_sample(v)).ok()?;
            fit_ransac_mesh(&mesh, cfg, volume_seed(seed, coord))
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct CandidateRun {
    /// New candidates of the processed volumes.
    pub candidates: BTreeMap<VolumeCoord, PlaneCandidate>,
    /// Wall time of every processed volume's fit (meshing included for RANSAC).
    pub fit_times: BTreeMap<VolumeCoord, Duration>,
}

impl CandidateRun {
    pub fn total_time(&self) -> Duration {
        self.fit_times.values().sum()
    }
}

/// Refits every dirty volume, replacing or clearing its stored candidate.
pub fn generate_candidates(
    grid: &mut VolumeGrid,
    dirty: &BTreeSet<VolumeCoord>,
    method: FitMethod,
    cfg: &FitConfig,
    seed: u64,
) -> CandidateRun {
    let coords: Vec<VolumeCoord> = dirty.iter().copied().filter(|c| grid.contains(c)).collect();
    let shared: &VolumeGrid = grid;
    let results: Vec<(VolumeCoord, Option<PlaneCandidate>, Duration)> = coords
        .par_iter()
        .map(|c| {
            let t0 = Instant::now();
            let cand = fit_volume(shared, c, method, cfg, seed);
            (*c, cand, t0.elapsed())
        })
        .collect();
    let mut run = CandidateRun::default();
    for (c, cand, dt) in results {
        run.fit_times.insert(c, dt);
        if let Some(cand) = &cand {
            run.candidates.insert(c, cand.clone());
        }
        if let Some(vol) = grid.get_mut(&c) {
            vol.candidate = cand;
        }
    }
    run
}

/// Every candidate currently stored in the grid.
pub fn stored_candidates(grid: &VolumeGrid) -> BTreeMap<VolumeCoord, PlaneCandidate> {
    grid.volumes()
        .filter_map(|v| v.candidate.clone().map(|c| (v.coord, c)))
        .collect()
}
