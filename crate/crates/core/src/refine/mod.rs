//! Use of refined planes on the SDF: de-noising, jitter gating, hole filling
//! and planar mesh simplification.

mod correction;
mod gate;
mod simplify;

use std::collections::{BTreeMap, BTreeSet};

use crate::config::RefineConfig;
use crate::geometry::{Rect2, Vec3};
use crate::merge::{PlaneLabel, RefinedPlane};
use crate::sdf::{extract_mesh_with, FieldSample, VolumeCoord, VolumeGrid, VolumeMesh};

pub use correction::{
    corrected_sdf, ActivePlane, Correction, CorrectionCase, CorrectionContext, CorrectionMode,
    VolumeCorrector,
};
pub use gate::{jitter_gate, JitterGateState};
pub use simplify::{cell_domain, plane_box_polygon, polygon_area, simplify_planar_volume};

/// Corrector for one volume from its `Q_i`. Plane coefficients come from the
/// gate state when present, so held-back updates do not reach the mesh.
/// `keep` filters which planes take part.
pub fn build_corrector<F>(
    grid: &VolumeGrid,
    coord: &VolumeCoord,
    planes: &BTreeMap<u32, RefinedPlane>,
    gate: Option<&JitterGateState>,
    cfg: &RefineConfig,
    mode: CorrectionMode,
    keep: F,
) -> VolumeCorrector
where
    F: Fn(&RefinedPlane) -> bool,
{
    let mut active = Vec::new();
    if let Some(vol) = grid.get(coord) {
        for id in &vol.refined {
            let Some(rp) = planes.get(id) else {
                continue;
            };
            if !keep(rp) {
                continue;
            }
            let plane = gate.and_then(|g| g.authoritative(*id)).copied().unwrap_or(rp.plane);
            let fill_extent = if cfg.infinite_floor && rp.label == PlaneLabel::Floor {
                None
            } else {
                Some(rp.extent)
            };
            active.push(ActivePlane {
                id: *id,
                plane,
                frame: rp.plane.frame(),
                fill_extent,
            });
        }
    }
    VolumeCorrector::new(active, grid.config.truncation, mode, cfg.strict_product_band)
}

/// Meshes a volume from the corrected field. An empty corrector gives the
/// raw mesh. Vertices near an active plane are attributed to it.
pub fn mesh_corrected(
    grid: &VolumeGrid,
    coord: VolumeCoord,
    corrector: &VolumeCorrector,
    plane_vertex_dist: f64,
) -> crate::Result<VolumeMesh> {
    let mut mesh = if corrector.is_empty() {
        extract_mesh_with(grid, coord, |_, v| crate::sdf::raw_sample(v))?
    } else {
        extract_mesh_with(grid, coord, |g, v| {
            let observed = v.is_some_and(|v| v.is_observed());
            let phi = v.map_or(0.0, |v| v.sdf);
            let x = grid.global_center(g);
            corrector.evaluate(&x, phi, observed).value.map(|value| FieldSample {
                value,
                synthetic: !observed,
            })
        })?
    };
    assign_plane_ids(&mut mesh, &corrector.active, plane_vertex_dist);
    Ok(mesh)
}

/// Cosine of the largest angle between a vertex normal and a plane normal
/// for the vertex to be attributed to the plane.
const MIN_NORMAL_COS: f64 = 0.34; // about 70°

/// Sets `vertex_plane_id` to the nearest active plane within `max_dist`
/// whose normal the local surface agrees with. Vertical faces standing on a
/// floor thus stay off the floor even right at the contact.
pub fn assign_plane_ids(mesh: &mut VolumeMesh, active: &[ActivePlane], max_dist: f64) {
    let normals = vertex_normals(mesh);
    for ((v, n), slot) in mesh.vertices.iter().zip(&normals).zip(mesh.vertex_plane_id.iter_mut()) {
        let mut best: Option<(f64, u32)> = None;
        for a in active {
            let s = a.plane.signed_distance(&v.position).abs();
            let agrees = n.is_none_or(|n| n.dot(&a.plane.n).abs() >= MIN_NORMAL_COS);
            if s <= max_dist && agrees && best.is_none_or(|(b, _)| s < b) {
                best = Some((s, a.id));
            }
        }
        *slot = best.map(|(_, id)| id);
    }
}

/// Area-weighted unit normals; `None` for isolated or degenerate vertices.
fn vertex_normals(mesh: &VolumeMesh) -> Vec<Option<Vec3>> {
    let mut acc = vec![Vec3::zeros(); mesh.vertices.len()];
    for t in &mesh.triangles {
        let [a, b, c] = t.map(|i| mesh.vertices[i as usize].position);
        let n = (b - a).cross(&(c - a));
        for &i in t {
            acc[i as usize] += n;
        }
    }
    acc.into_iter()
        .map(|n| {
            let len = n.norm();
            (len > 1e-18).then(|| n / len)
        })
        .collect()
}

fn overlaps(a: &Rect2, b: &Rect2, eps: f64) -> bool {
    a.min_u < b.max_u - eps && b.min_u < a.max_u - eps && a.min_v < b.max_v - eps && b.min_v < a.max_v - eps
}

/// Allocates the missing volumes a plane's fill region needs: unallocated
/// volumes crossing the slab `|s| <= half_width` whose footprint overlaps
/// the plane extent. They start unobserved and dirty.
pub fn allocate_fill_volumes(
    grid: &mut VolumeGrid,
    planes: &[RefinedPlane],
    half_width: f64,
) -> BTreeSet<VolumeCoord> {
    let mut added = BTreeSet::new();
    for rp in planes {
        if rp.extent.is_empty() {
            continue;
        }
        let frame = rp.plane.frame();
        let origin = -rp.plane.d * rp.plane.n;
        let r = &rp.extent;
        let mut lo = crate::geometry::Vec3::repeat(f64::INFINITY);
        let mut hi = crate::geometry::Vec3::repeat(f64::NEG_INFINITY);
        for (u, v) in [(r.min_u, r.min_v), (r.max_u, r.min_v), (r.min_u, r.max_v), (r.max_u, r.max_v)] {
            let p = origin + frame.u * u + frame.v * v;
            lo = lo.inf(&p);
            hi = hi.sup(&p);
        }
        let lo = grid.coord_of_point(&(lo - crate::geometry::Vec3::repeat(half_width)));
        let hi = grid.coord_of_point(&(hi + crate::geometry::Vec3::repeat(half_width)));
        for x in lo.x..=hi.x {
            for y in lo.y..=hi.y {
                for z in lo.z..=hi.z {
                    let c = VolumeCoord::new(x, y, z);
                    if grid.contains(&c) {
                        continue;
                    }
                    let aabb = grid.volume_aabb(&c);
                    if !aabb.intersects_slab(&rp.plane, half_width) {
                        continue;
                    }
                    if !overlaps(&aabb.footprint(&frame), r, 1e-9) {
                        continue;
                    }
                    grid.get_or_allocate(c).dirty = true;
                    added.insert(c);
                }
            }
        }
    }
    added
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{MergeConfig, VoxelGridConfig};
    use crate::geometry::{Plane, Vec3};
    use crate::merge::{plane_extent, propagate};
    use crate::sdf::extract_mesh;

    fn floor_plane(grid: &VolumeGrid, members: &[VolumeCoord]) -> RefinedPlane {
        let plane = Plane { n: Vec3::z(), d: -0.24 };
        let member_coords: BTreeSet<_> = members.iter().copied().collect();
        RefinedPlane {
            id: 0,
            plane,
            support: members.len(),
            extent: plane_extent(&plane, &member_coords, &grid.config),
            member_coords,
            label: PlaneLabel::Floor,
        }
    }

    #[test]
    fn empty_q_gives_raw_mesh() {
        let mut g = VolumeGrid::new(VoxelGridConfig::default());
        let c = VolumeCoord::new(0, 0, 0);
        g.fill_volume_with(c, |x| Some(x.z - 0.24 + 0.003 * (30.0 * x.x).sin()));
        let corr = build_corrector(
            &g,
            &c,
            &BTreeMap::new(),
            None,
            &RefineConfig::default(),
            CorrectionMode::DenoiseAndFill,
            |_| true,
        );
        let a = mesh_corrected(&g, c, &corr, 0.02).unwrap();
        let b = extract_mesh(&mut g, c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fill_covers_missing_volumes() {
        let mut g = VolumeGrid::new(VoxelGridConfig::default());
        let mut members = Vec::new();
        for x in 0..5 {
            for y in 0..5 {
                let c = VolumeCoord::new(x, y, 0);
                // two-volume hole in the middle
                if y == 2 && (x == 2 || x == 3) {
                    continue;
                }
                g.fill_volume_with(c, |p| Some(p.z - 0.24 + 0.004 * (25.0 * p.x + 7.0 * p.y).sin()));
                members.push(c);
            }
        }
        let rp = floor_plane(&g, &members);
        let added = allocate_fill_volumes(&mut g, std::slice::from_ref(&rp), 0.1);
        assert_eq!(
            added,
            BTreeSet::from([VolumeCoord::new(2, 2, 0), VolumeCoord::new(3, 2, 0)])
        );
        propagate(std::slice::from_ref(&rp), &mut g, &MergeConfig::default(), false);
        let planes = BTreeMap::from([(0, rp)]);
        let mut hole_area = 0.0;
        let mut filled_area = 0.0;
        for c in g.sorted_coords() {
            let corr = build_corrector(
                &g,
                &c,
                &planes,
                None,
                &RefineConfig::default(),
                CorrectionMode::DenoiseAndFill,
                |_| true,
            );
            let mesh = mesh_corrected(&g, c, &corr, 0.02).unwrap();
            // corrected floor is exact
            for v in &mesh.vertices {
                assert!((v.position.z - 0.24).abs() < 1e-12);
            }
            for t in 0..mesh.triangles.len() {
                let [a, b, cc] = mesh.triangle_corners(t);
                let mid = (a + b + cc) / 3.0;
                if mid.y > 0.96 && mid.y < 1.44 && mid.x > 0.96 && mid.x < 1.92 {
                    hole_area += mesh.triangle_area(t);
                }
                if mesh.triangle_filled[t] {
                    filled_area += mesh.triangle_area(t);
                }
            }
        }
        let hole = 0.96 * 0.48;
        assert!(hole_area >= 0.95 * hole, "{hole_area}");
        assert!(filled_area >= 0.95 * hole);
    }
}
