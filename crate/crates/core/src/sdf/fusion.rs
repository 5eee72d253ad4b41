//! Projective TSDF fusion of depth images into the volume grid.

use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;

use super::{Volume, VolumeCoord, VolumeGrid};
use crate::error::{Error, Result};
use crate::geometry::{RigidTransform, Vec3};

/// Depth readings outside `[MIN_DEPTH, MAX_DEPTH]` are treated as invalid.
pub const MIN_DEPTH: f64 = 0.2;
pub const MAX_DEPTH: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Default for Intrinsics {
    /// 160×120 sensor, roughly 72°×57° field of view.
    fn default() -> Self {
        Intrinsics {
            fx: 110.0,
            fy: 110.0,
            cx: 79.5,
            cy: 59.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DepthFrame {
    pub width: usize,
    pub height: usize,
    /// Row-major z-depth in meters; 0 marks an invalid pixel.
    pub depth: Vec<f64>,
    pub intrinsics: Intrinsics,
    /// Camera to world.
    pub pose: RigidTransform,
    pub gravity_up: Vec3,
    pub timestamp: f64,
}

impl DepthFrame {
    pub const WIDTH: usize = 160;
    pub const HEIGHT: usize = 120;

    pub fn validate(&self) -> Result<()> {
        let k = &self.intrinsics;
        if !(k.fx > 0.0 && k.fy > 0.0) {
            return Err(Error::InvalidFrame(format!(
                "focal lengths must be positive (fx={}, fy={})",
                k.fx, k.fy
            )));
        }
        if self.depth.len() != self.width * self.height {
            return Err(Error::InvalidFrame(format!(
                "depth buffer holds {} values, expected {}x{}",
                self.depth.len(),
                self.width,
                self.height
            )));
        }
        if !self.pose.is_orthonormal(1e-6) {
            return Err(Error::InvalidFrame("pose rotation is not orthonormal".into()));
        }
        if (self.gravity_up.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidFrame("gravity vector is not unit length".into()));
        }
        Ok(())
    }

    /// Depth at a pixel, `None` if invalid or out of sensor range.
    #[inline]
    pub fn valid_depth(&self, col: usize, row: usize) -> Option<f64> {
        let d = self.depth[row * self.width + col];
        (MIN_DEPTH..=MAX_DEPTH).contains(&d).then_some(d)
    }

    /// Camera-frame direction through a pixel center, with unit z.
    #[inline]
    pub fn pixel_ray(&self, col: usize, row: usize) -> Vec3 {
        let k = &self.intrinsics;
        Vec3::new(
            (col as f64 - k.cx) / k.fx,
            (row as f64 - k.cy) / k.fy,
            1.0,
        )
    }

    /// Nearest pixel of a camera-frame point with positive depth.
    #[inline]
    pub fn project(&self, p_cam: &Vec3) -> Option<(usize, usize)> {
        if p_cam.z <= 0.0 {
            return None;
        }
        let k = &self.intrinsics;
        let u = k.fx * p_cam.x / p_cam.z + k.cx;
        let v = k.fy * p_cam.y / p_cam.z + k.cy;
        let col = (u + 0.5).floor();
        let row = (v + 0.5).floor();
        if col < 0.0 || row < 0.0 || col >= self.width as f64 || row >= self.height as f64 {
            return None;
        }
        Some((col as usize, row as usize))
    }
}

/// Fuses one frame. Every voxel center whose projective distance
/// `s = depth(π(x)) - z_cam(x)` exceeds `-τ` receives a weight-1 sample of
/// `clamp(s, -τ, τ)`. Volumes crossed by a pixel ray up to `depth + τ` are
/// allocated on demand; the returned set holds every volume that received a
/// sample.
pub fn integrate(grid: &mut VolumeGrid, frame: &DepthFrame) -> Result<BTreeSet<VolumeCoord>> {
    frame.validate()?;
    let tau = grid.config.truncation;
    let edge = grid.config.volume_edge();

    let mut touched: HashSet<VolumeCoord> = HashSet::new();
    let origin = frame.pose.translation;
    for row in 0..frame.height {
        for col in 0..frame.width {
            let Some(depth) = frame.valid_depth(col, row) else {
                continue;
            };
            let dir = frame.pose.rotation * frame.pixel_ray(col, row);
            let end = origin + dir * (depth + tau);
            traverse_volumes(&origin, &end, edge, |c| {
                touched.insert(c);
            });
        }
    }

    let mut fresh = Vec::new();
    for &c in &touched {
        if !grid.contains(&c) {
            grid.get_or_allocate(c);
            fresh.push(c);
        }
    }

    let cfg = grid.config.clone();
    let m = cfg.volume_dim;
    let mut targets: Vec<&mut Volume> = grid
        .volumes_mut()
        .filter(|v| touched.contains(&v.coord))
        .collect();
    let updated: Vec<(VolumeCoord, bool)> = targets
        .par_iter_mut()
        .map(|vol| {
            let coord = vol.coord;
            let mut any = false;
            for k in 0..m {
                for j in 0..m {
                    for i in 0..m {
                        let g = [
                            coord.x as i64 * m as i64 + i as i64,
                            coord.y as i64 * m as i64 + j as i64,
                            coord.z as i64 * m as i64 + k as i64,
                        ];
                        let x = Vec3::new(
                            cfg.voxel_size * (g[0] as f64 + 0.5),
                            cfg.voxel_size * (g[1] as f64 + 0.5),
                            cfg.voxel_size * (g[2] as f64 + 0.5),
                        );
                        let p = frame.pose.apply_inverse(&x);
                        let Some((col, row)) = frame.project(&p) else {
                            continue;
                        };
                        let Some(depth) = frame.valid_depth(col, row) else {
                            continue;
                        };
                        let s = depth - p.z;
                        if s <= -tau {
                            continue;
                        }
                        let sample = s.clamp(-tau, tau);
                        let voxel = &mut vol.voxels[i + m * (j + m * k)];
                        let w = voxel.weight;
                        voxel.sdf = ((w * voxel.sdf + sample) / (w + 1.0)).clamp(-tau, tau);
                        voxel.weight = (w + 1.0).min(cfg.max_weight);
                        any = true;
                    }
                }
            }
            if any {
                vol.dirty = true;
            }
            (coord, any)
        })
        .collect();

    let mut dirty = BTreeSet::new();
    for (c, any) in updated {
        if any {
            dirty.insert(c);
        }
    }
    for c in fresh {
        if !dirty.contains(&c) {
            grid.remove(&c);
        }
    }
    Ok(dirty)
}

/// Visits every cubic cell of size `edge` crossed by the segment
/// `start → end` (3D DDA).
pub(crate) fn traverse_volumes<F: FnMut(VolumeCoord)>(start: &Vec3, end: &Vec3, edge: f64, mut visit: F) {
    let dir = end - start;
    let mut cell = [0i64; 3];
    let mut last = [0i64; 3];
    let mut step = [0i64; 3];
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    for a in 0..3 {
        cell[a] = (start[a] / edge).floor() as i64;
        last[a] = (end[a] / edge).floor() as i64;
        if dir[a] > 0.0 {
            step[a] = 1;
            t_max[a] = ((cell[a] + 1) as f64 * edge - start[a]) / dir[a];
            t_delta[a] = edge / dir[a];
        } else if dir[a] < 0.0 {
            step[a] = -1;
            t_max[a] = (cell[a] as f64 * edge - start[a]) / dir[a];
            t_delta[a] = -edge / dir[a];
        }
    }
    let max_steps = (last[0] - cell[0]).abs() + (last[1] - cell[1]).abs() + (last[2] - cell[2]).abs() + 1;
    for _ in 0..=max_steps {
        visit(VolumeCoord::new(cell[0] as i32, cell[1] as i32, cell[2] as i32));
        if cell == last {
            break;
        }
        let mut a = 0;
        for b in 1..3 {
            if t_max[b] < t_max[a] {
                a = b;
            }
        }
        if t_max[a] > 1.0 {
            break;
        }
        cell[a] += step[a];
        t_max[a] += t_delta[a];
    }
}
