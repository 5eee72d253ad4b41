//! Per-volume Marching Cubes on the dual lattice of voxel centers.
//!
//! A volume owns the `m³` cells whose lowest corner is one of its voxels; the
//! far corners of the last cell layer are read from the `+x/+y/+z` neighbors,
//! so adjacent volume meshes share their boundary vertices exactly.

use std::collections::HashMap;

use super::tables::{EDGE_TABLE, TRIANGLE_TABLE};
use super::{Voxel, VolumeCoord, VolumeGrid};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Global lattice edge a Marching Cubes vertex lies on: the lower voxel of the
/// edge and the axis it extends along.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeKey {
    pub base: [i64; 3],
    pub axis: u8,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshVertex {
    pub key: EdgeKey,
    pub position: Vec3,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VolumeMesh {
    pub coord: Option<VolumeCoord>,
    pub vertices: Vec<MeshVertex>,
    pub triangles: Vec<[u32; 3]>,
    /// Triangle comes from a cell with at least one hole-filled corner.
    pub triangle_filled: Vec<bool>,
    pub vertex_plane_id: Vec<Option<u32>>,
}

impl VolumeMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_corners(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize].position,
            self.vertices[b as usize].position,
            self.vertices[c as usize].position,
        ]
    }

    /// Unnormalized face normal (twice the area).
    pub fn triangle_normal(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangle_corners(t);
        (b - a).cross(&(c - a))
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * self.triangle_normal(t).norm()
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Area-weighted mean face normal (unnormalized).
    pub fn mean_face_normal(&self) -> Vec3 {
        (0..self.triangles.len())
            .map(|t| self.triangle_normal(t))
            .sum()
    }
}

/// Value fed to Marching Cubes for one lattice point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    pub value: f64,
    /// Synthesized rather than observed (hole filling).
    pub synthetic: bool,
}

// Corner offsets and edge endpoints in table order.
const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];
const EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Meshes the raw field of one volume. Unobserved corners suppress their
/// cells. Clears the volume's dirty flag.
pub fn extract_mesh(grid: &mut VolumeGrid, coord: VolumeCoord) -> Result<VolumeMesh> {
    let mesh = extract_mesh_with(grid, coord, |_, v| raw_sample(v))?;
    if let Some(vol) = grid.get_mut(&coord) {
        vol.dirty = false;
    }
    Ok(mesh)
}

pub(crate) fn raw_sample(v: Option<&Voxel>) -> Option<FieldSample> {
    let v = v?;
    v.is_observed().then_some(FieldSample {
        value: v.sdf,
        synthetic: false,
    })
}

/// Meshes volume `coord` using `field(global_index, voxel)` as the scalar
/// field; `voxel` is `None` where no volume is allocated. A `None` sample
/// suppresses every cell touching it.
pub fn extract_mesh_with<F>(grid: &VolumeGrid, coord: VolumeCoord, field: F) -> Result<VolumeMesh>
where
    F: Fn([i64; 3], Option<&Voxel>) -> Option<FieldSample>,
{
    if !grid.contains(&coord) {
        return Err(Error::VolumeNotFound(coord));
    }
    let m = grid.dim();
    let n = m + 1;
    let mut samples: Vec<Option<FieldSample>> = Vec::with_capacity(n * n * n);
    let base = grid.global_index(&coord, 0, 0, 0);
    let own = grid.get(&coord).expect("checked above");
    // neighbor lookups cached per volume offset
    let mut neighbor_cache: HashMap<(i32, i32, i32), Option<&super::Volume>> = HashMap::new();
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let g = [base[0] + i as i64, base[1] + j as i64, base[2] + k as i64];
                let voxel = if i < m && j < m && k < m {
                    Some(&own.voxels[grid.voxel_index(i, j, k)])
                } else {
                    let key = ((i / m) as i32, (j / m) as i32, (k / m) as i32);
                    let vol = *neighbor_cache
                        .entry(key)
                        .or_insert_with(|| grid.get(&coord.offset(key.0, key.1, key.2)));
                    vol.map(|v| &v.voxels[grid.voxel_index(i % m, j % m, k % m)])
                };
                samples.push(field(g, voxel));
            }
        }
    }

    let mut mesh = VolumeMesh {
        coord: Some(coord),
        ..Default::default()
    };
    let mut lookup: HashMap<EdgeKey, u32> = HashMap::new();
    let at = |i: usize, j: usize, k: usize| i + n * (j + n * k);

    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                let mut vals = [0.0f64; 8];
                let mut synthetic = false;
                let mut complete = true;
                for (c, off) in CORNERS.iter().enumerate() {
                    match samples[at(i + off[0], j + off[1], k + off[2])] {
                        Some(s) => {
                            vals[c] = s.value;
                            synthetic |= s.synthetic;
                        }
                        None => {
                            complete = false;
                            break;
                        }
                    }
                }
                if !complete {
                    continue;
                }
                let mut case = 0usize;
                for (c, v) in vals.iter().enumerate() {
                    if *v < 0.0 {
                        case |= 1 << c;
                    }
                }
                let edges = EDGE_TABLE[case];
                if edges == 0 {
                    continue;
                }
                let mut edge_vertex = [u32::MAX; 12];
                for (e, ends) in EDGES.iter().enumerate() {
                    if edges & (1 << e) == 0 {
                        continue;
                    }
                    // orient every edge from its lower to its upper corner
                    let (lo, hi) = {
                        let (a, b) = (ends[0], ends[1]);
                        if CORNERS[a] <= CORNERS[b] {
                            (a, b)
                        } else {
                            (b, a)
                        }
                    };
                    let off = CORNERS[lo];
                    let axis = (0..3).find(|&ax| CORNERS[lo][ax] != CORNERS[hi][ax]).unwrap();
                    let g_lo = [
                        base[0] + (i + off[0]) as i64,
                        base[1] + (j + off[1]) as i64,
                        base[2] + (k + off[2]) as i64,
                    ];
                    let key = EdgeKey {
                        base: g_lo,
                        axis: axis as u8,
                    };
                    let idx = *lookup.entry(key).or_insert_with(|| {
                        let mut g_hi = g_lo;
                        g_hi[axis] += 1;
                        let p_lo = grid.global_center(g_lo);
                        let p_hi = grid.global_center(g_hi);
                        let t = vals[lo] / (vals[lo] - vals[hi]);
                        let position = p_lo + (p_hi - p_lo) * t;
                        mesh.vertices.push(MeshVertex { key, position });
                        mesh.vertex_plane_id.push(None);
                        (mesh.vertices.len() - 1) as u32
                    });
                    edge_vertex[e] = idx;
                }
                let row = &TRIANGLE_TABLE[case];
                let mut t = 0;
                while t + 2 < 16 && row[t] >= 0 {
                    let a = edge_vertex[row[t] as usize];
                    let b = edge_vertex[row[t + 1] as usize];
                    let c = edge_vertex[row[t + 2] as usize];
                    // table winding faces the negative side; flip toward free space
                    mesh.triangles.push([a, c, b]);
                    mesh.triangle_filled.push(synthetic);
                    t += 3;
                }
            }
        }
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::VoxelGridConfig;
    use std::collections::HashMap;

    fn grid() -> VolumeGrid {
        VolumeGrid::new(VoxelGridConfig::default())
    }

    #[test]
    fn tables_are_consistent() {
        for case in 0..256 {
            let mut used = 0u16;
            let row = &TRIANGLE_TABLE[case];
            let mut t = 0;
            while t < 16 && row[t] >= 0 {
                used |= 1 << row[t];
                t += 1;
            }
            assert_eq!(t % 3, 0);
            assert_eq!(used, EDGE_TABLE[case], "case {case}");
        }
    }

    #[test]
    fn linear_field_gives_flat_mesh() {
        let mut g = grid();
        let c = VolumeCoord::new(0, 0, 0);
        g.fill_volume_with(c, |x| Some(x.z - 0.24));
        let mesh = extract_mesh(&mut g, c).unwrap();
        assert!(!mesh.is_empty());
        for v in &mesh.vertices {
            assert!((v.position.z - 0.24).abs() <= 1e-6);
        }
        // normals face +z where the field is positive
        for t in 0..mesh.triangles.len() {
            assert!(mesh.triangle_normal(t).z > 0.0);
        }
        assert!(!g.get(&c).unwrap().dirty);
    }

    #[test]
    fn saturated_field_is_empty() {
        let mut g = grid();
        let c = VolumeCoord::new(0, 0, 0);
        g.fill_volume_with(c, |_| Some(1.0));
        assert!(extract_mesh(&mut g, c).unwrap().is_empty());
    }

    #[test]
    fn missing_volume_is_an_error() {
        let mut g = grid();
        assert!(matches!(
            extract_mesh(&mut g, VolumeCoord::new(3, 3, 3)),
            Err(Error::VolumeNotFound(_))
        ));
    }

    #[test]
    fn sphere_area_and_closedness() {
        let mut g = grid();
        let c = VolumeCoord::new(0, 0, 0);
        let center = g.volume_center(&c);
        let r = 0.2;
        g.fill_volume_with(c, |x| Some((x - center).norm() - r));
        let mesh = extract_mesh(&mut g, c).unwrap();
        let exact = 4.0 * std::f64::consts::PI * r * r;
        let area = mesh.area();
        assert!((area - exact).abs() / exact < 0.05, "{area} vs {exact}");
        // closed manifold: every undirected edge used by exactly two triangles
        let mut edge_use: HashMap<(u32, u32), usize> = HashMap::new();
        for tri in &mesh.triangles {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                *edge_use.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        assert!(edge_use.values().all(|&n| n == 2));
        // outward normals
        for t in 0..mesh.triangles.len() {
            let [a, _, _] = mesh.triangle_corners(t);
            assert!(mesh.triangle_normal(t).dot(&(a - center)) > 0.0);
        }
    }

    #[test]
    fn unobserved_corner_suppresses_cell() {
        let mut g = grid();
        let c = VolumeCoord::new(0, 0, 0);
        g.fill_volume_with(c, |x| if x.x < 0.24 { Some(x.z - 0.24) } else { None });
        let mesh = extract_mesh(&mut g, c).unwrap();
        assert!(!mesh.is_empty());
        assert!(mesh.vertices.iter().all(|v| v.position.x < 0.24));
    }

    #[test]
    fn seams_share_vertices_exactly() {
        let mut g = grid();
        let a = VolumeCoord::new(0, 0, 0);
        let b = VolumeCoord::new(1, 0, 0);
        let field = |x: &Vec3| Some(0.3 * x.x + 0.9 * x.z - 0.4);
        g.fill_volume_with(a, field);
        g.fill_volume_with(b, field);
        let ma = extract_mesh(&mut g, a).unwrap();
        let mb = extract_mesh(&mut g, b).unwrap();
        let pos_b: HashMap<EdgeKey, Vec3> = mb.vertices.iter().map(|v| (v.key, v.position)).collect();
        let mut shared = 0;
        for v in &ma.vertices {
            if let Some(p) = pos_b.get(&v.key) {
                assert_eq!(*p, v.position);
                shared += 1;
            }
        }
        assert!(shared > 0);
        // a's far layer reaches into b, so its mesh extends past x = 0.48
        assert!(ma.vertices.iter().any(|v| v.position.x > 0.48));
    }
}
