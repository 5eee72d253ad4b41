//! Global clustering of local candidates into refined planes, and
//! propagation of refined planes back to the volumes they cross.

mod propagate;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{CompatibilityReading, MergeConfig, VoxelGridConfig};
use crate::detect::PlaneCandidate;
use crate::geometry::{Aabb, Plane, Rect2, Vec3};
use crate::sdf::VolumeCoord;

pub use propagate::{associate_ids, propagate, PropagationResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlaneLabel {
    Floor,
    Wall,
    Ceiling,
    Other,
}

impl PlaneLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlaneLabel::Floor => "floor",
            PlaneLabel::Wall => "wall",
            PlaneLabel::Ceiling => "ceiling",
            PlaneLabel::Other => "other",
        }
    }

    pub fn is_structural(&self) -> bool {
        !matches!(self, PlaneLabel::Other)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MergeMethod {
    Ransac,
    RegionGrowing,
}

impl MergeMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            MergeMethod::Ransac => "ransac",
            MergeMethod::RegionGrowing => "region-growing",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefinedPlane {
    pub id: u32,
    pub plane: Plane,
    pub support: usize,
    pub member_coords: BTreeSet<VolumeCoord>,
    pub label: PlaneLabel,
    /// Bounding rectangle of the member volume footprints in `plane.frame()`.
    pub extent: Rect2,
}

pub(crate) fn volume_center(cfg: &VoxelGridConfig, c: &VolumeCoord) -> Vec3 {
    let e = cfg.volume_edge();
    Vec3::new(
        (c.x as f64 + 0.5) * e,
        (c.y as f64 + 0.5) * e,
        (c.z as f64 + 0.5) * e,
    )
}

pub(crate) fn volume_aabb(cfg: &VoxelGridConfig, c: &VolumeCoord) -> Aabb {
    let e = cfg.volume_edge();
    let o = Vec3::new(c.x as f64 * e, c.y as f64 * e, c.z as f64 * e);
    Aabb::new(o, o + Vec3::repeat(e))
}

/// Whether candidate `p_j` (of the volume centered at `v_j`) fits the plane
/// `p_i` hypothesized at the volume centered at `v_i`.
pub fn compatible(
    p_i: &Plane,
    v_i: &Vec3,
    p_j: &Plane,
    v_j: &Vec3,
    cfg: &MergeConfig,
) -> bool {
    if p_i.n.dot(&p_j.n) <= cfg.cos_angle() {
        return false;
    }
    let x = match cfg.compatibility {
        CompatibilityReading::CandidateCenter => p_i.project(v_j),
        CompatibilityReading::HypothesisCenter => p_i.project(v_i),
    };
    p_j.signed_distance(&x).abs() < cfg.dist
}

/// Support-weighted plane estimate from member candidates.
pub fn refine_from_members<'a, I>(members: I, grid: &VoxelGridConfig) -> Option<Plane>
where
    I: IntoIterator<Item = &'a PlaneCandidate>,
{
    let mut n = Vec3::zeros();
    let mut centroid = Vec3::zeros();
    let mut wsum = 0.0;
    for c in members {
        let w = c.support.max(1) as f64;
        n += c.plane.n * w;
        centroid += c.plane.project(&volume_center(grid, &c.volume_coord)) * w;
        wsum += w;
    }
    if wsum == 0.0 {
        return None;
    }
    let n = n.try_normalize(1e-12)?;
    let centroid = centroid / wsum;
    Some(Plane {
        n,
        d: -n.dot(&centroid),
    })
}

/// Union of the member volume footprints in the plane frame.
pub fn plane_extent(plane: &Plane, members: &BTreeSet<VolumeCoord>, grid: &VoxelGridConfig) -> Rect2 {
    let frame = plane.frame();
    let mut r = Rect2::empty();
    for c in members {
        r.union(&volume_aabb(grid, c).footprint(&frame));
    }
    r
}

fn make_plane(
    id: u32,
    members: BTreeSet<VolumeCoord>,
    candidates: &BTreeMap<VolumeCoord, PlaneCandidate>,
    grid: &VoxelGridConfig,
) -> Option<RefinedPlane> {
    let plane = refine_from_members(members.iter().map(|c| &candidates[c]), grid)?;
    let extent = plane_extent(&plane, &members, grid);
    Some(RefinedPlane {
        id,
        plane,
        support: members.len(),
        member_coords: members,
        label: PlaneLabel::Other,
        extent,
    })
}

/// 1-point RANSAC clustering. Each round samples up to `ransac_iters`
/// unconsumed candidates as hypotheses and keeps the one with most compatible
/// unconsumed candidates (earlier sample wins ties). Should sampling miss
/// every hypothesis reaching `min_support`, all remaining candidates are
/// tried before the loop concludes that none can seed a plane.
pub fn merge_ransac(
    candidates: &BTreeMap<VolumeCoord, PlaneCandidate>,
    grid: &VoxelGridConfig,
    cfg: &MergeConfig,
    rng_seed: u64,
) -> Vec<RefinedPlane> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut remaining: Vec<VolumeCoord> = candidates.keys().copied().collect();
    let centers: BTreeMap<VolumeCoord, Vec3> = remaining
        .iter()
        .map(|c| (*c, volume_center(grid, c)))
        .collect();
    let inliers_of = |h: &VolumeCoord, pool: &[VolumeCoord]| -> Vec<VolumeCoord> {
        let ph = &candidates[h].plane;
        let vh = &centers[h];
        pool.iter()
            .copied()
            .filter(|j| compatible(ph, vh, &candidates[j].plane, &centers[j], cfg))
            .collect()
    };
    let mut out = Vec::new();
    while remaining.len() >= cfg.min_support {
        let mut best: Vec<VolumeCoord> = Vec::new();
        for _ in 0..cfg.ransac_iters {
            let h = remaining[rng.random_range(0..remaining.len())];
            let inl = inliers_of(&h, &remaining);
            if inl.len() > best.len() {
                best = inl;
            }
        }
        if best.len() < cfg.min_support {
            for h in &remaining {
                let inl = inliers_of(h, &remaining);
                if inl.len() > best.len() {
                    best = inl;
                }
            }
        }
        if best.len() < cfg.min_support {
            break;
        }
        let members: BTreeSet<VolumeCoord> = best.into_iter().collect();
        remaining.retain(|c| !members.contains(c));
        if let Some(p) = make_plane(out.len() as u32, members, candidates, grid) {
            out.push(p);
        }
    }
    out
}

/// Breadth-first region growing over 6-connected volumes, seeded in
/// ascending coordinate order. A neighbor joins when its candidate is
/// compatible with the current estimate of the growing plane.
pub fn merge_region_growing(
    candidates: &BTreeMap<VolumeCoord, PlaneCandidate>,
    grid: &VoxelGridConfig,
    cfg: &MergeConfig,
) -> Vec<RefinedPlane> {
    let mut consumed: BTreeSet<VolumeCoord> = BTreeSet::new();
    let mut out = Vec::new();
    for seed in candidates.keys() {
        if consumed.contains(seed) {
            continue;
        }
        let seed_center = volume_center(grid, seed);
        let mut members: BTreeSet<VolumeCoord> = BTreeSet::from([*seed]);
        let mut estimate = candidates[seed].plane;
        let mut queue: VecDeque<VolumeCoord> = VecDeque::from([*seed]);
        while let Some(c) = queue.pop_front() {
            for nb in c.neighbors6() {
                if members.contains(&nb) || consumed.contains(&nb) {
                    continue;
                }
                let Some(cand) = candidates.get(&nb) else {
                    continue;
                };
                let v_j = volume_center(grid, &nb);
                if compatible(&estimate, &seed_center, &cand.plane, &v_j, cfg) {
                    members.insert(nb);
                    queue.push_back(nb);
                    if let Some(p) = refine_from_members(members.iter().map(|m| &candidates[m]), grid) {
                        estimate = p;
                    }
                }
            }
        }
        if members.len() >= cfg.min_support {
            consumed.extend(members.iter().copied());
            if let Some(p) = make_plane(out.len() as u32, members, candidates, grid) {
                out.push(p);
            }
        }
    }
    out
}

pub fn merge(
    method: MergeMethod,
    candidates: &BTreeMap<VolumeCoord, PlaneCandidate>,
    grid: &VoxelGridConfig,
    cfg: &MergeConfig,
    rng_seed: u64,
) -> Vec<RefinedPlane> {
    match method {
        MergeMethod::Ransac => merge_ransac(candidates, grid, cfg, rng_seed),
        MergeMethod::RegionGrowing => merge_region_growing(candidates, grid, cfg),
    }
}
