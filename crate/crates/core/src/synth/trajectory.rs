//! Camera paths. Frames are spaced 0.2 s apart (5 fps).

use super::TimedPose;
use crate::geometry::{RigidTransform, Vec3};

const FRAME_DT: f64 = 0.2;

fn timed(poses: impl IntoIterator<Item = RigidTransform>) -> Vec<TimedPose> {
    poses
        .into_iter()
        .enumerate()
        .map(|(i, p)| TimedPose::new(i as f64 * FRAME_DT, &p))
        .collect()
}

/// Concatenates paths, re-stamping the result at the common frame spacing.
pub fn chain(parts: impl IntoIterator<Item = Vec<TimedPose>>) -> Vec<TimedPose> {
    timed(parts.into_iter().flatten().map(|p| p.pose()))
}

pub fn static_camera(pose: &RigidTransform, frames: usize) -> Vec<TimedPose> {
    timed(std::iter::repeat_n(*pose, frames))
}

/// Camera standing at `eye`, turning through every `(pitch, yaw)` pair:
/// pitches in degrees (negative looks down), `yaws` evenly spaced turns.
pub fn look_around(eye: Vec3, pitches_deg: &[f64], yaws: usize, up: Vec3) -> Vec<TimedPose> {
    let mut poses = Vec::new();
    for (k, &pitch) in pitches_deg.iter().enumerate() {
        for j in 0..yaws {
            // alternate directions so consecutive frames overlap
            let jj = if k % 2 == 0 { j } else { yaws - 1 - j };
            let yaw = (jj as f64 / yaws as f64) * std::f64::consts::TAU;
            let (p, y) = (pitch.to_radians(), yaw);
            let dir = Vec3::new(p.cos() * y.cos(), p.cos() * y.sin(), p.sin());
            poses.push(RigidTransform::look_at(eye, eye + dir, up));
        }
    }
    timed(poses)
}

/// Circle of `frames` poses around `center` at `radius` and `height` above
/// it, all looking at `target`.
pub fn orbit(center: Vec3, radius: f64, height: f64, target: Vec3, frames: usize, up: Vec3) -> Vec<TimedPose> {
    let poses = (0..frames).map(|i| {
        let a = i as f64 / frames as f64 * std::f64::consts::TAU;
        let eye = center + Vec3::new(radius * a.cos(), radius * a.sin(), height);
        RigidTransform::look_at(eye, target, up)
    });
    timed(poses)
}

/// Boustrophedon sweep over a rectangle at height `z`, looking straight
/// down.
pub fn lawnmower(min: (f64, f64), max: (f64, f64), z: f64, rows: usize, per_row: usize) -> Vec<TimedPose> {
    let mut poses = Vec::new();
    for r in 0..rows {
        let y = if rows > 1 {
            min.1 + (max.1 - min.1) * r as f64 / (rows - 1) as f64
        } else {
            (min.1 + max.1) * 0.5
        };
        for c in 0..per_row {
            let cc = if r % 2 == 0 { c } else { per_row - 1 - c };
            let x = if per_row > 1 {
                min.0 + (max.0 - min.0) * cc as f64 / (per_row - 1) as f64
            } else {
                (min.0 + max.0) * 0.5
            };
            let eye = Vec3::new(x, y, z);
            poses.push(RigidTransform::look_at(eye, eye - Vec3::z(), Vec3::y()));
        }
    }
    timed(poses)
}
