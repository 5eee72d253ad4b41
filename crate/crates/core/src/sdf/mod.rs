//! Two-level spatially hashed TSDF: a hash map of fixed-size voxel volumes.

mod fusion;
mod mesh;
mod tables;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::VoxelGridConfig;
use crate::detect::PlaneCandidate;
use crate::geometry::{Aabb, Plane, Vec3};

pub use fusion::{integrate, DepthFrame, Intrinsics, MAX_DEPTH, MIN_DEPTH};
pub(crate) use mesh::raw_sample;
pub use mesh::{
    extract_mesh, extract_mesh_with, EdgeKey, FieldSample, MeshVertex, VolumeMesh,
};

/// Integer lattice coordinate of a volume.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VolumeCoord {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

impl VolumeCoord {
    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        VolumeCoord { x, y, z }
    }

    pub fn offset(&self, dx: i32, dy: i32, dz: i32) -> Self {
        VolumeCoord::new(self.x + dx, self.y + dy, self.z + dz)
    }

    /// The six face neighbors.
    pub fn neighbors6(&self) -> [VolumeCoord; 6] {
        [
            self.offset(-1, 0, 0),
            self.offset(1, 0, 0),
            self.offset(0, -1, 0),
            self.offset(0, 1, 0),
            self.offset(0, 0, -1),
            self.offset(0, 0, 1),
        ]
    }

    pub fn as_array(&self) -> [i32; 3] {
        [self.x, self.y, self.z]
    }
}

impl fmt::Display for VolumeCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Voxel {
    pub sdf: f64,
    /// Zero means unobserved.
    pub weight: f64,
}

impl Voxel {
    pub fn is_observed(&self) -> bool {
        self.weight > 0.0
    }
}

#[derive(Clone, Debug)]
pub struct Volume {
    pub coord: VolumeCoord,
    /// `m³` voxels, x fastest.
    pub voxels: Vec<Voxel>,
    pub candidate: Option<PlaneCandidate>,
    /// Ids of refined planes propagated into this volume.
    pub refined: BTreeSet<u32>,
    pub dirty: bool,
    /// Plane coefficients used the last time this volume was meshed.
    pub last_meshed_planes: BTreeMap<u32, Plane>,
}

impl Volume {
    pub fn new(coord: VolumeCoord, dim: usize) -> Self {
        Volume {
            coord,
            voxels: vec![Voxel::default(); dim * dim * dim],
            candidate: None,
            refined: BTreeSet::new(),
            dirty: false,
            last_meshed_planes: BTreeMap::new(),
        }
    }

    pub fn observed_count(&self) -> usize {
        self.voxels.iter().filter(|v| v.is_observed()).count()
    }
}

#[derive(Clone, Debug)]
pub struct VolumeGrid {
    pub config: VoxelGridConfig,
    volumes: HashMap<VolumeCoord, Volume>,
}

impl VolumeGrid {
    pub fn new(config: VoxelGridConfig) -> Self {
        VolumeGrid {
            config,
            volumes: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.config.volume_dim
    }

    pub fn len(&self) -> usize {
        self.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volumes.is_empty()
    }

    pub fn get(&self, coord: &VolumeCoord) -> Option<&Volume> {
        self.volumes.get(coord)
    }

    pub fn get_mut(&mut self, coord: &VolumeCoord) -> Option<&mut Volume> {
        self.volumes.get_mut(coord)
    }

    pub fn contains(&self, coord: &VolumeCoord) -> bool {
        self.volumes.contains_key(coord)
    }

    /// Returns the volume at `coord`, allocating an unobserved one if absent.
    pub fn get_or_allocate(&mut self, coord: VolumeCoord) -> &mut Volume {
        let dim = self.config.volume_dim;
        self.volumes
            .entry(coord)
            .or_insert_with(|| Volume::new(coord, dim))
    }

    pub fn remove(&mut self, coord: &VolumeCoord) -> Option<Volume> {
        self.volumes.remove(coord)
    }

    /// Allocated coordinates in ascending order.
    pub fn sorted_coords(&self) -> Vec<VolumeCoord> {
        let mut v: Vec<_> = self.volumes.keys().copied().collect();
        v.sort_unstable();
        v
    }

    pub fn volumes(&self) -> impl Iterator<Item = &Volume> {
        self.volumes.values()
    }

    pub(crate) fn volumes_mut(&mut self) -> impl Iterator<Item = &mut Volume> {
        self.volumes.values_mut()
    }

    #[inline]
    pub fn voxel_index(&self, i: usize, j: usize, k: usize) -> usize {
        let m = self.config.volume_dim;
        i + m * (j + m * k)
    }

    pub fn volume_origin(&self, coord: &VolumeCoord) -> Vec3 {
        let e = self.config.volume_edge();
        Vec3::new(coord.x as f64 * e, coord.y as f64 * e, coord.z as f64 * e)
    }

    pub fn volume_aabb(&self, coord: &VolumeCoord) -> Aabb {
        let o = self.volume_origin(coord);
        Aabb::new(o, o + Vec3::repeat(self.config.volume_edge()))
    }

    pub fn volume_center(&self, coord: &VolumeCoord) -> Vec3 {
        self.volume_origin(coord) + Vec3::repeat(self.config.volume_edge() * 0.5)
    }

    /// Global lattice index of a local voxel.
    #[inline]
    pub fn global_index(&self, coord: &VolumeCoord, i: usize, j: usize, k: usize) -> [i64; 3] {
        let m = self.config.volume_dim as i64;
        [
            coord.x as i64 * m + i as i64,
            coord.y as i64 * m + j as i64,
            coord.z as i64 * m + k as i64,
        ]
    }

    /// World position of the center of a global voxel.
    #[inline]
    pub fn global_center(&self, g: [i64; 3]) -> Vec3 {
        let s = self.config.voxel_size;
        Vec3::new(
            s * (g[0] as f64 + 0.5),
            s * (g[1] as f64 + 0.5),
            s * (g[2] as f64 + 0.5),
        )
    }

    pub fn voxel_center(&self, coord: &VolumeCoord, i: usize, j: usize, k: usize) -> Vec3 {
        self.global_center(self.global_index(coord, i, j, k))
    }

    /// Owning volume and local index of a global voxel.
    pub fn split_global(&self, g: [i64; 3]) -> (VolumeCoord, [usize; 3]) {
        let m = self.config.volume_dim as i64;
        let c = VolumeCoord::new(
            g[0].div_euclid(m) as i32,
            g[1].div_euclid(m) as i32,
            g[2].div_euclid(m) as i32,
        );
        let l = [
            g[0].rem_euclid(m) as usize,
            g[1].rem_euclid(m) as usize,
            g[2].rem_euclid(m) as usize,
        ];
        (c, l)
    }

    pub fn voxel_global(&self, g: [i64; 3]) -> Option<&Voxel> {
        let (c, l) = self.split_global(g);
        let vol = self.volumes.get(&c)?;
        Some(&vol.voxels[self.voxel_index(l[0], l[1], l[2])])
    }

    /// Volume containing a world point.
    pub fn coord_of_point(&self, p: &Vec3) -> VolumeCoord {
        let e = self.config.volume_edge();
        VolumeCoord::new(
            (p.x / e).floor() as i32,
            (p.y / e).floor() as i32,
            (p.z / e).floor() as i32,
        )
    }

    /// Fills every voxel of `coord` from an analytic field (weight 1),
    /// allocating the volume. Values are clamped to the truncation band.
    pub fn fill_volume_with<F: Fn(&Vec3) -> Option<f64>>(&mut self, coord: VolumeCoord, f: F) {
        let m = self.config.volume_dim;
        let tau = self.config.truncation;
        let mut voxels = vec![Voxel::default(); m * m * m];
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    let x = self.voxel_center(&coord, i, j, k);
                    if let Some(phi) = f(&x) {
                        voxels[i + m * (j + m * k)] = Voxel {
                            sdf: phi.clamp(-tau, tau),
                            weight: 1.0,
                        };
                    }
                }
            }
        }
        let vol = self.get_or_allocate(coord);
        vol.voxels = voxels;
        vol.dirty = true;
    }
}
