//! Semantic labels for refined planes and connectivity segmentation of the
//! non-planar remainder of the mesh.

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::config::{LabelRules, RefineConfig};
use crate::geometry::{angle_between, Aabb};
use crate::merge::{PlaneLabel, RefinedPlane};
use crate::refine::{build_corrector, mesh_corrected, CorrectionMode, JitterGateState};
use crate::sdf::{EdgeKey, VolumeGrid, VolumeMesh};

pub fn label_plane(p: &RefinedPlane, rules: &LabelRules) -> PlaneLabel {
    let tol = rules.gravity_angle_tol_deg;
    let up = rules.up();
    let angle_up = angle_between(&p.plane.n, &up).to_degrees();
    if p.support >= rules.floor_min_support && angle_up <= tol {
        PlaneLabel::Floor
    } else if p.support >= rules.ceiling_min_support && angle_between(&p.plane.n, &-up).to_degrees() <= tol {
        PlaneLabel::Ceiling
    } else if p.support >= rules.wall_min_support && (angle_up - 90.0).abs() <= tol {
        PlaneLabel::Wall
    } else {
        PlaneLabel::Other
    }
}

pub fn label_planes(planes: &mut [RefinedPlane], rules: &LabelRules) {
    for p in planes {
        p.label = label_plane(p, rules);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectSegment {
    pub object_id: u32,
    pub vertex_count: usize,
    pub triangle_count: usize,
    pub surface_area: f64,
    pub aabb: Aabb,
    /// Member vertices, sorted.
    pub vertices: Vec<EdgeKey>,
}

/// Connected components of the mesh after removing every vertex attributed
/// to a refined plane. Meshes are stitched across volumes by edge key.
/// Components smaller than `min_object_vertices` are dropped; ids follow the
/// order of each component's smallest edge key.
pub fn segment_objects(meshes: &[VolumeMesh], min_object_vertices: usize) -> Vec<ObjectSegment> {
    // global vertex table
    let mut index: HashMap<EdgeKey, usize> = HashMap::new();
    let mut keys: Vec<EdgeKey> = Vec::new();
    let mut pos = Vec::new();
    let mut planar: Vec<bool> = Vec::new();
    let mut local_to_global: Vec<Vec<usize>> = Vec::with_capacity(meshes.len());
    for m in meshes {
        let mut map = Vec::with_capacity(m.vertices.len());
        for (v, pid) in m.vertices.iter().zip(&m.vertex_plane_id) {
            let g = *index.entry(v.key).or_insert_with(|| {
                keys.push(v.key);
                pos.push(v.position);
                planar.push(false);
                keys.len() - 1
            });
            planar[g] |= pid.is_some();
            map.push(g);
        }
        local_to_global.push(map);
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); keys.len()];
    let mut tris: Vec<([usize; 3], f64)> = Vec::new();
    for (m, map) in meshes.iter().zip(&local_to_global) {
        for (t, tri) in m.triangles.iter().enumerate() {
            let g = [map[tri[0] as usize], map[tri[1] as usize], map[tri[2] as usize]];
            for e in 0..3 {
                let (a, b) = (g[e], g[(e + 1) % 3]);
                if !planar[a] && !planar[b] {
                    adj[a].push(b);
                    adj[b].push(a);
                }
            }
            if g.iter().all(|&v| !planar[v]) {
                tris.push((g, m.triangle_area(t)));
            }
        }
    }
    let mut order: Vec<usize> = (0..keys.len()).filter(|&i| !planar[i]).collect();
    order.sort_by_key(|&i| keys[i]);
    let mut comp = vec![usize::MAX; keys.len()];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for &seed in &order {
        if comp[seed] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![seed];
        comp[seed] = id;
        let mut queue = VecDeque::from([seed]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if comp[w] == usize::MAX {
                    comp[w] = id;
                    members.push(w);
                    queue.push_back(w);
                }
            }
        }
        components.push(members);
    }
    let mut tri_stats: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    for (g, area) in &tris {
        let e = tri_stats.entry(comp[g[0]]).or_default();
        e.0 += 1;
        e.1 += area;
    }
    let mut out = Vec::new();
    for (cid, members) in components.into_iter().enumerate() {
        if members.len() < min_object_vertices {
            continue;
        }
        let mut aabb = Aabb::empty();
        for &v in &members {
            aabb.include(&pos[v]);
        }
        let mut vertices: Vec<EdgeKey> = members.iter().map(|&v| keys[v]).collect();
        vertices.sort();
        let (triangle_count, surface_area) = tri_stats.get(&cid).copied().unwrap_or_default();
        out.push(ObjectSegment {
            object_id: out.len() as u32,
            vertex_count: members.len(),
            triangle_count,
            surface_area,
            aabb,
            vertices,
        });
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WallsOnly {
    pub meshes: Vec<VolumeMesh>,
    pub warning: Option<String>,
}

impl WallsOnly {
    pub fn area(&self) -> f64 {
        self.meshes.iter().map(|m| m.area()).sum()
    }
}

/// Structural geometry only: volumes touched by floor, wall or ceiling planes
/// are meshed from the corrected and filled field of those planes, and only
/// triangles lying on them are kept.
pub fn walls_only_mesh(
    grid: &VolumeGrid,
    planes: &[RefinedPlane],
    rules: &LabelRules,
    gate: Option<&JitterGateState>,
    cfg: &RefineConfig,
) -> WallsOnly {
    let labeled: BTreeMap<u32, RefinedPlane> = planes
        .iter()
        .map(|p| {
            let mut p = p.clone();
            p.label = label_plane(&p, rules);
            (p.id, p)
        })
        .collect();
    if !labeled.values().any(|p| p.label.is_structural()) {
        let msg = "no floor, wall or ceiling plane detected; walls-only mesh is empty".to_string();
        log::warn!("{msg}");
        return WallsOnly {
            meshes: Vec::new(),
            warning: Some(msg),
        };
    }
    let mut meshes = Vec::new();
    for c in grid.sorted_coords() {
        let corr = build_corrector(grid, &c, &labeled, gate, cfg, CorrectionMode::DenoiseAndFill, |p| {
            p.label.is_structural()
        });
        if corr.is_empty() {
            continue;
        }
        let Ok(mesh) = mesh_corrected(grid, c, &corr, cfg.plane_vertex_dist) else {
            continue;
        };
        meshes.push(keep_plane_triangles(&mesh));
    }
    WallsOnly { meshes, warning: None }
}

/// Triangles whose three vertices are all attributed to a plane.
pub fn keep_plane_triangles(mesh: &VolumeMesh) -> VolumeMesh {
    let mut out = VolumeMesh {
        coord: mesh.coord,
        ..Default::default()
    };
    let mut remap = vec![u32::MAX; mesh.vertices.len()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if !tri.iter().all(|&v| mesh.vertex_plane_id[v as usize].is_some()) {
            continue;
        }
        let mut nt = [0u32; 3];
        for (k, &v) in tri.iter().enumerate() {
            if remap[v as usize] == u32::MAX {
                remap[v as usize] = out.vertices.len() as u32;
                out.vertices.push(mesh.vertices[v as usize]);
                out.vertex_plane_id.push(mesh.vertex_plane_id[v as usize]);
            }
            nt[k] = remap[v as usize];
        }
        out.triangles.push(nt);
        out.triangle_filled.push(mesh.triangle_filled[t]);
    }
    out
}
