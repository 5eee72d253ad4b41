//! Replacement of purely planar volume meshes by their clipped polygon.

use crate::geometry::{Aabb, Plane, Vec3};
use crate::sdf::{EdgeKey, MeshVertex, VolumeGrid, VolumeMesh};

const ON_PLANE: f64 = 1e-6;

/// Box spanned by the Marching Cubes cells of a volume: voxel centers from
/// the first voxel to the first voxel of the `+1` neighbors.
pub fn cell_domain(grid: &VolumeGrid, mesh_coord: &crate::sdf::VolumeCoord) -> Aabb {
    let half = grid.config.voxel_size * 0.5;
    let b = grid.volume_aabb(mesh_coord);
    Aabb::new(b.min + Vec3::repeat(half), b.max + Vec3::repeat(half))
}

/// Convex polygon `plane ∩ box`, ordered counter-clockwise about the plane
/// normal. Empty when the plane misses the box.
pub fn plane_box_polygon(plane: &Plane, b: &Aabb) -> Vec<Vec3> {
    let c = b.corners();
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
    let s: Vec<f64> = c.iter().map(|p| plane.signed_distance(p)).collect();
    let mut pts: Vec<Vec3> = Vec::new();
    let mut push = |p: Vec3| {
        if pts.iter().all(|q| (q - p).norm() > 1e-12) {
            pts.push(p);
        }
    };
    for [a, e] in EDGES {
        let (sa, se) = (s[a], s[e]);
        if sa == 0.0 {
            push(c[a]);
        }
        if se == 0.0 {
            push(c[e]);
        }
        if (sa < 0.0 && se > 0.0) || (sa > 0.0 && se < 0.0) {
            let t = sa / (sa - se);
            push(c[a] + (c[e] - c[a]) * t);
        }
    }
    if pts.len() < 3 {
        return Vec::new();
    }
    let centroid = pts.iter().sum::<Vec3>() / pts.len() as f64;
    let frame = plane.frame();
    let mut keyed: Vec<(f64, Vec3)> = pts
        .into_iter()
        .map(|p| {
            let d = p - centroid;
            (frame.v.dot(&d).atan2(frame.u.dot(&d)), p)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    keyed.into_iter().map(|(_, p)| p).collect()
}

pub fn polygon_area(poly: &[Vec3]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = Vec3::zeros();
    for i in 1..poly.len() - 1 {
        acc += (poly[i] - poly[0]).cross(&(poly[i + 1] - poly[0]));
    }
    0.5 * acc.norm()
}

/// Collapses a volume mesh lying entirely on one of `planes` and covering the
/// whole plane section of the cell domain to that section (2 triangles for a
/// quadrilateral, a fan otherwise). Anything else is returned unchanged.
pub fn simplify_planar_volume(grid: &VolumeGrid, planes: &[(u32, Plane)], mesh: &VolumeMesh) -> VolumeMesh {
    let Some(coord) = mesh.coord else {
        return mesh.clone();
    };
    if mesh.is_empty() {
        return mesh.clone();
    }
    let Some(&(id, plane)) = planes.iter().find(|(_, p)| {
        mesh.vertices
            .iter()
            .all(|v| p.signed_distance(&v.position).abs() <= ON_PLANE)
    }) else {
        return mesh.clone();
    };
    let poly = plane_box_polygon(&plane, &cell_domain(grid, &coord));
    let poly_area = polygon_area(&poly);
    let mesh_area = mesh.area();
    if poly_area <= 0.0 || (mesh_area - poly_area).abs() > 0.01 * poly_area {
        return mesh.clone();
    }
    let base = grid.global_index(&coord, 0, 0, 0);
    let mut out = VolumeMesh {
        coord: Some(coord),
        ..Default::default()
    };
    for (i, p) in poly.iter().enumerate() {
        out.vertices.push(MeshVertex {
            // axes >= 3 mark polygon corners rather than lattice edges
            key: EdgeKey {
                base,
                axis: 3 + i as u8,
            },
            position: *p,
        });
        out.vertex_plane_id.push(Some(id));
    }
    let flip = plane.n.dot(&mesh.mean_face_normal()) < 0.0;
    let filled = mesh.triangle_filled.iter().any(|f| *f);
    for i in 1..poly.len() as u32 - 1 {
        // the polygon runs counter-clockwise about the plane normal
        let tri = if flip { [0, i + 1, i] } else { [0, i, i + 1] };
        out.triangles.push(tri);
        out.triangle_filled.push(filled);
    }
    out
}
