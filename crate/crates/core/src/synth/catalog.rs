//! Named desk-scale scenes. Structural planes sit in the middle of a volume
//! layer (0.24 m + k·0.48 m) so each plane's truncation band stays inside
//! one layer of volumes.

use super::{chain, look_around, orbit, static_camera, SceneBox, SceneHole, ScenePlane, SceneSpec, TimedPose};
use crate::error::{Error, Result};
use crate::geometry::{RigidTransform, Vec3};
use crate::merge::PlaneLabel;

pub const SCENE_NAMES: [&str; 8] = [
    "flat_floor",
    "room_4walls",
    "room_cluttered",
    "room_with_holes",
    "corner_close",
    "two_touching_boxes",
    "box_against_wall",
    "occluded_wall",
];

const ROOM_MIN: [f64; 3] = [0.24, 0.24, 0.24];
const ROOM_MAX: [f64; 3] = [3.60, 3.60, 2.64];

fn plane(name: &str, label: PlaneLabel, origin: [f64; 3], u: [f64; 3], v: [f64; 3]) -> ScenePlane {
    ScenePlane {
        name: name.into(),
        label,
        origin,
        edge_u: u,
        edge_v: v,
        bounded: true,
    }
}

/// Floor, ceiling and four walls of an axis-aligned box room, normals inward.
/// Order: floor, ceiling, wall -x, wall +x, wall -y, wall +y.
fn room_planes(lo: [f64; 3], hi: [f64; 3]) -> Vec<ScenePlane> {
    let [x0, y0, z0] = lo;
    let [x1, y1, z1] = hi;
    let (lx, ly, lz) = (x1 - x0, y1 - y0, z1 - z0);
    vec![
        plane("floor", PlaneLabel::Floor, [x0, y0, z0], [lx, 0.0, 0.0], [0.0, ly, 0.0]),
        plane("ceiling", PlaneLabel::Ceiling, [x0, y0, z1], [0.0, ly, 0.0], [lx, 0.0, 0.0]),
        plane("wall_x0", PlaneLabel::Wall, [x0, y0, z0], [0.0, ly, 0.0], [0.0, 0.0, lz]),
        plane("wall_x1", PlaneLabel::Wall, [x1, y0, z0], [0.0, 0.0, lz], [0.0, ly, 0.0]),
        plane("wall_y0", PlaneLabel::Wall, [x0, y0, z0], [0.0, 0.0, lz], [lx, 0.0, 0.0]),
        plane("wall_y1", PlaneLabel::Wall, [x0, y1, z0], [lx, 0.0, 0.0], [0.0, 0.0, lz]),
    ]
}

fn room_center() -> Vec3 {
    Vec3::new(
        0.5 * (ROOM_MIN[0] + ROOM_MAX[0]),
        0.5 * (ROOM_MIN[1] + ROOM_MAX[1]),
        1.44,
    )
}

fn room_scan() -> Vec<TimedPose> {
    look_around(room_center(), &[-70.0, -35.0, 0.0, 35.0, 70.0], 16, Vec3::z())
}

/// Circle around a floor object at `height` above the floor, looking at it.
fn object_orbit(cx: f64, cy: f64, radius: f64, height: f64, frames: usize) -> Vec<TimedPose> {
    let z0 = ROOM_MIN[2];
    orbit(
        Vec3::new(cx, cy, z0),
        radius,
        height,
        Vec3::new(cx, cy, z0 + 0.1),
        frames,
        Vec3::z(),
    )
}

fn base(name: &str, seed: u64) -> SceneSpec {
    let mut s = SceneSpec::new(name);
    s.seed = seed;
    s
}

fn bx(name: &str, min: [f64; 3], max: [f64; 3]) -> SceneBox {
    SceneBox {
        name: name.into(),
        min,
        max,
    }
}

pub fn flat_floor() -> SceneSpec {
    let mut s = base("flat_floor", 11);
    let mut floor = plane("floor", PlaneLabel::Floor, [0.0, 0.0, 0.24], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
    floor.bounded = false;
    s.planes.push(floor);
    let pose = RigidTransform::look_at(
        Vec3::new(1.92, 1.92, 1.74),
        Vec3::new(1.92, 1.92, 0.0),
        Vec3::y(),
    );
    s.trajectory = static_camera(&pose, 100);
    s
}

pub fn room_4walls() -> SceneSpec {
    let mut s = base("room_4walls", 12);
    s.planes = room_planes(ROOM_MIN, ROOM_MAX);
    s.trajectory = room_scan();
    s
}

/// Three free-standing boxes, each also circled by the camera so that its
/// far sides are observed.
pub fn room_cluttered() -> SceneSpec {
    let mut s = room_4walls();
    s.name = "room_cluttered".into();
    s.seed = 13;
    s.boxes = vec![
        bx("box_a", [0.95, 0.95, 0.24], [1.30, 1.30, 0.60]),
        bx("box_b", [2.40, 1.05, 0.24], [2.75, 1.40, 0.50]),
        bx("box_c", [1.60, 2.45, 0.24], [1.95, 2.80, 0.70]),
    ];
    let orbits = s.boxes.iter().map(|b| {
        let c = b.aabb().center();
        object_orbit(c.x, c.y, 0.8, 1.1, 48)
    });
    s.trajectory = chain(std::iter::once(room_scan()).chain(orbits));
    s
}

/// Holes total one sixth of the shell, i.e. 20% of the observed area.
pub fn room_with_holes() -> SceneSpec {
    let mut s = room_4walls();
    s.name = "room_with_holes".into();
    s.seed = 14;
    let [x0, y0, z0] = ROOM_MIN;
    let [x1, y1, z1] = ROOM_MAX;
    s.holes = vec![
        SceneHole {
            plane: 0,
            origin: [1.20, 1.20, z0],
            edge_u: [1.44, 0.0, 0.0],
            edge_v: [0.0, 1.44, 0.0],
        },
        SceneHole {
            plane: 1,
            origin: [1.20, 1.20, z1],
            edge_u: [1.44, 0.0, 0.0],
            edge_v: [0.0, 1.44, 0.0],
        },
        SceneHole {
            plane: 2,
            origin: [x0, 1.30, 0.90],
            edge_u: [0.0, 1.25, 0.0],
            edge_v: [0.0, 0.0, 1.0],
        },
        SceneHole {
            plane: 3,
            origin: [x1, 1.30, 0.90],
            edge_u: [0.0, 1.25, 0.0],
            edge_v: [0.0, 0.0, 1.0],
        },
        SceneHole {
            plane: 4,
            origin: [1.30, y0, 0.90],
            edge_u: [1.25, 0.0, 0.0],
            edge_v: [0.0, 0.0, 1.0],
        },
        SceneHole {
            plane: 5,
            origin: [1.30, y1, 0.90],
            edge_u: [1.25, 0.0, 0.0],
            edge_v: [0.0, 0.0, 1.0],
        },
    ];
    s
}

/// Floor meeting a wall, seen from close by.
pub fn corner_close() -> SceneSpec {
    let mut s = base("corner_close", 15);
    s.planes = vec![
        plane("floor", PlaneLabel::Floor, [0.24, 0.24, 0.24], [2.88, 0.0, 0.0], [0.0, 2.40, 0.0]),
        plane("wall", PlaneLabel::Wall, [0.24, 0.24, 0.24], [0.0, 2.40, 0.0], [0.0, 0.0, 1.92]),
    ];
    let target = Vec3::new(0.24, 1.44, 0.30);
    let poses = (0..30).map(|i| {
        let a = (-60.0 + 120.0 * i as f64 / 29.0f64).to_radians();
        let eye = Vec3::new(0.24 + 1.1 * a.cos(), 1.44 + 1.1 * a.sin(), 1.0);
        RigidTransform::look_at(eye, target, Vec3::z())
    });
    s.trajectory = poses
        .enumerate()
        .map(|(i, p)| TimedPose::new(i as f64 * 0.2, &p))
        .collect();
    s
}

/// Two boxes sharing a face in the middle of the room.
pub fn two_touching_boxes() -> SceneSpec {
    let mut s = room_4walls();
    s.name = "two_touching_boxes".into();
    s.seed = 16;
    s.boxes = vec![
        bx("box_a", [1.60, 1.75, 0.24], [1.90, 2.05, 0.54]),
        bx("box_b", [1.90, 1.80, 0.24], [2.30, 2.10, 0.60]),
    ];
    s.trajectory = object_orbit(1.95, 1.925, 1.2, 1.1, 36);
    s
}

pub fn box_against_wall() -> SceneSpec {
    let mut s = room_4walls();
    s.name = "box_against_wall".into();
    s.seed = 17;
    s.boxes = vec![bx("box", [0.24, 1.60, 0.24], [0.60, 2.00, 0.60])];
    s
}

/// Room whose `+x` wall is 80% covered by a checkerboard of 0.12 m blocks at
/// two depths, so no volume over the covered part sees a single plane.
pub fn occluded_wall() -> SceneSpec {
    let mut s = room_4walls();
    s.name = "occluded_wall".into();
    s.seed = 18;
    let x1 = ROOM_MAX[0];
    let cell = 0.12;
    let cols = ((ROOM_MAX[1] - ROOM_MIN[1]) / cell).round() as usize;
    let rows = 16; // 1.92 m of the 2.40 m wall height
    for r in 0..rows {
        for c in 0..cols {
            let depth = if (r + c) % 2 == 0 { 0.12 } else { 0.36 };
            let y = ROOM_MIN[1] + c as f64 * cell;
            let z = ROOM_MIN[2] + r as f64 * cell;
            s.boxes.push(bx(
                &format!("block_{r}_{c}"),
                [x1 - depth, y, z],
                [x1, y + cell, z + cell],
            ));
        }
    }
    s
}

pub fn standard_scenes() -> Vec<SceneSpec> {
    SCENE_NAMES.iter().map(|n| scene_by_name(n).expect("catalog name")).collect()
}

pub fn scene_by_name(name: &str) -> Result<SceneSpec> {
    let s = match name {
        "flat_floor" => flat_floor(),
        "room_4walls" => room_4walls(),
        "room_cluttered" => room_cluttered(),
        "room_with_holes" => room_with_holes(),
        "corner_close" => corner_close(),
        "two_touching_boxes" => two_touching_boxes(),
        "box_against_wall" => box_against_wall(),
        "occluded_wall" => occluded_wall(),
        _ => return Err(Error::UnknownScene(name.to_string())),
    };
    Ok(s)
}
