use std::collections::{BTreeMap, BTreeSet};

use super::{PlaneLabel, RefinedPlane};
use crate::config::MergeConfig;
use crate::sdf::{VolumeCoord, VolumeGrid};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PropagationResult {
    /// New `Q_i` of every allocated volume with at least one plane.
    pub q: BTreeMap<VolumeCoord, BTreeSet<u32>>,
    /// Volumes whose `Q_i` differs from before.
    pub changed: BTreeSet<VolumeCoord>,
}

/// Whether plane `p` reaches volume `coord`: the volume box meets the slab
/// `|s| <= half_width` and its footprint lies in the extent inflated by one
/// volume edge (skipped for floors when `infinite_floor`).
pub fn plane_reaches(
    p: &RefinedPlane,
    grid: &VolumeGrid,
    coord: &VolumeCoord,
    half_width: f64,
    infinite_floor: bool,
) -> bool {
    let aabb = grid.volume_aabb(coord);
    if !aabb.intersects_slab(&p.plane, half_width) {
        return false;
    }
    if infinite_floor && p.label == PlaneLabel::Floor {
        return true;
    }
    let inflated = p.extent.inflated(grid.config.volume_edge());
    // tilted estimates shift footprints slightly at exact volume boundaries
    inflated.contains_rect(&aabb.footprint(&p.plane.frame()), 0.5 * grid.config.voxel_size)
}

/// Recomputes `Q_i` for every allocated volume and stores it in the grid.
pub fn propagate(
    planes: &[RefinedPlane],
    grid: &mut VolumeGrid,
    cfg: &MergeConfig,
    infinite_floor: bool,
) -> PropagationResult {
    let half = cfg.propagate_dist_or(grid.config.truncation);
    let coords = grid.sorted_coords();
    let mut result = PropagationResult::default();
    for c in coords {
        let q: BTreeSet<u32> = planes
            .iter()
            .filter(|p| plane_reaches(p, grid, &c, half, infinite_floor))
            .map(|p| p.id)
            .collect();
        let vol = grid.get_mut(&c).expect("sorted coords are allocated");
        if vol.refined != q {
            result.changed.insert(c);
            vol.refined = q.clone();
        }
        if !q.is_empty() {
            result.q.insert(c, q);
        }
    }
    result
}

/// Gives each new plane the id of the previous plane it shares most member
/// volumes with, so ids stay stable from frame to frame. Larger planes
/// choose first; unmatched planes get fresh ids from `next_id`.
pub fn associate_ids(
    prev: &[RefinedPlane],
    mut new: Vec<RefinedPlane>,
    next_id: &mut u32,
) -> Vec<RefinedPlane> {
    let mut order: Vec<usize> = (0..new.len()).collect();
    order.sort_by(|&a, &b| new[b].support.cmp(&new[a].support).then(a.cmp(&b)));
    let mut claimed: BTreeSet<u32> = BTreeSet::new();
    for i in order {
        let mut best: Option<(usize, u32)> = None;
        for p in prev {
            if claimed.contains(&p.id) || p.plane.n.dot(&new[i].plane.n) <= 0.0 {
                continue;
            }
            let overlap = p.member_coords.intersection(&new[i].member_coords).count();
            if overlap > 0 && best.is_none_or(|(o, id)| overlap > o || (overlap == o && p.id < id)) {
                best = Some((overlap, p.id));
            }
        }
        new[i].id = match best {
            Some((_, id)) => id,
            None => {
                let id = *next_id;
                *next_id += 1;
                id
            }
        };
        claimed.insert(new[i].id);
    }
    new.sort_by_key(|p| p.id);
    new
}
