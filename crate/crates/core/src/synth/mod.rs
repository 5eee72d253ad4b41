//! Synthetic indoor scenes with ground truth, a ray-casting depth camera and
//! camera trajectories.

mod catalog;
mod trajectory;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Plane, RigidTransform, Vec3};
use crate::merge::PlaneLabel;
use crate::sdf::{DepthFrame, Intrinsics, MAX_DEPTH, MIN_DEPTH};

pub use catalog::{scene_by_name, standard_scenes, SCENE_NAMES};
pub use trajectory::{chain, lawnmower, look_around, orbit, static_camera};

pub const SCENE_SCHEMA: &str = "planefuse-scene/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    Gaussian,
    /// `σ_eff = σ·(z / 1 m)²`.
    DepthScaledGaussian,
}

/// Parallelogram `origin + a·edge_u + b·edge_v`, `a, b ∈ [0, 1]`. Its normal
/// is `edge_u × edge_v` and should face the observed side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenePlane {
    pub name: String,
    pub label: PlaneLabel,
    pub origin: [f64; 3],
    pub edge_u: [f64; 3],
    pub edge_v: [f64; 3],
    /// `false` extends the plane infinitely.
    #[serde(default = "yes")]
    pub bounded: bool,
}

fn yes() -> bool {
    true
}

impl ScenePlane {
    pub fn plane(&self) -> Plane {
        let n = Vec3::from(self.edge_u).cross(&Vec3::from(self.edge_v));
        Plane::from_point_normal(&Vec3::from(self.origin), &n).expect("validated non-degenerate")
    }

    /// In-rectangle parameters of a point on the plane.
    fn params(&self, p: &Vec3) -> (f64, f64) {
        let d = p - Vec3::from(self.origin);
        let u = Vec3::from(self.edge_u);
        let v = Vec3::from(self.edge_v);
        (d.dot(&u) / u.norm_squared(), d.dot(&v) / v.norm_squared())
    }

    pub fn area(&self) -> f64 {
        Vec3::from(self.edge_u).cross(&Vec3::from(self.edge_v)).norm()
    }
}

/// Unobservable rectangle on one of the scene planes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneHole {
    pub plane: usize,
    pub origin: [f64; 3],
    pub edge_u: [f64; 3],
    pub edge_v: [f64; 3],
}

impl SceneHole {
    pub fn area(&self) -> f64 {
        Vec3::from(self.edge_u).cross(&Vec3::from(self.edge_v)).norm()
    }

    fn params(&self, p: &Vec3) -> (f64, f64) {
        let d = p - Vec3::from(self.origin);
        let u = Vec3::from(self.edge_u);
        let v = Vec3::from(self.edge_v);
        (d.dot(&u) / u.norm_squared(), d.dot(&v) / v.norm_squared())
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        let (a, b) = self.params(p);
        (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneBox {
    pub name: String,
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl SceneBox {
    pub fn aabb(&self) -> Aabb {
        Aabb::new(Vec3::from(self.min), Vec3::from(self.max))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimedPose {
    pub timestamp: f64,
    pub position: [f64; 3],
    /// `(qx, qy, qz, qw)`, camera to world.
    pub quaternion: [f64; 4],
}

impl TimedPose {
    pub fn new(timestamp: f64, pose: &RigidTransform) -> Self {
        TimedPose {
            timestamp,
            position: pose.translation.into(),
            quaternion: pose.quaternion(),
        }
    }

    pub fn pose(&self) -> RigidTransform {
        let [qx, qy, qz, qw] = self.quaternion;
        RigidTransform::from_translation_quaternion(Vec3::from(self.position), qx, qy, qz, qw)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub schema: String,
    pub name: String,
    #[serde(default)]
    pub planes: Vec<ScenePlane>,
    #[serde(default)]
    pub boxes: Vec<SceneBox>,
    #[serde(default)]
    pub holes: Vec<SceneHole>,
    #[serde(default)]
    pub trajectory: Vec<TimedPose>,
    pub noise_sigma: f64,
    pub noise_model: NoiseModel,
    pub seed: u64,
    #[serde(default)]
    pub intrinsics: Intrinsics,
    #[serde(default = "default_up")]
    pub gravity_up: [f64; 3],
}

fn default_up() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

/// Ray hit on scene geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Hit {
    Plane(usize),
    Box(usize),
}

impl SceneSpec {
    pub fn new(name: &str) -> Self {
        SceneSpec {
            schema: SCENE_SCHEMA.to_string(),
            name: name.to_string(),
            planes: Vec::new(),
            boxes: Vec::new(),
            holes: Vec::new(),
            trajectory: Vec::new(),
            noise_sigma: 0.01,
            noise_model: NoiseModel::Gaussian,
            seed: 0,
            intrinsics: Intrinsics::default(),
            gravity_up: default_up(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("scene {}: {m}", self.name)));
        if self.schema != SCENE_SCHEMA {
            return bad(format!("unsupported schema {:?}", self.schema));
        }
        for p in &self.planes {
            let u = Vec3::from(p.edge_u);
            let v = Vec3::from(p.edge_v);
            if u.cross(&v).norm() < 1e-9 {
                return bad(format!("plane {} has a degenerate extent", p.name));
            }
            if u.dot(&v).abs() > 1e-9 * u.norm() * v.norm() {
                return bad(format!("plane {} edges are not orthogonal", p.name));
            }
        }
        for (i, h) in self.holes.iter().enumerate() {
            let Some(p) = self.planes.get(h.plane) else {
                return bad(format!("hole {i} refers to a missing plane"));
            };
            let plane = p.plane();
            let corners = [
                Vec3::from(h.origin),
                Vec3::from(h.origin) + Vec3::from(h.edge_u),
                Vec3::from(h.origin) + Vec3::from(h.edge_v),
            ];
            if corners.iter().any(|c| plane.signed_distance(c).abs() > 1e-9) || h.area() < 1e-12 {
                return bad(format!("hole {i} does not lie on plane {}", p.name));
            }
        }
        for b in &self.boxes {
            if (0..3).any(|i| b.max[i] <= b.min[i]) {
                return bad(format!("box {} is empty", b.name));
            }
        }
        for (i, t) in self.trajectory.iter().enumerate() {
            let q = self.trajectory[i].quaternion;
            let qn = q.iter().map(|c| c * c).sum::<f64>().sqrt();
            if (qn - 1.0).abs() > 1e-6 || !t.pose().is_orthonormal(1e-6) {
                return bad(format!("pose {i} is not a unit rotation"));
            }
        }
        if !(self.noise_sigma >= 0.0) {
            return bad("noise_sigma must be non-negative".into());
        }
        if (Vec3::from(self.gravity_up).norm() - 1.0).abs() > 1e-6 {
            return bad("gravity_up must be unit length".into());
        }
        Ok(())
    }

    pub fn gravity(&self) -> Vec3 {
        Vec3::from(self.gravity_up)
    }

    /// Ground-truth planes with their labels.
    pub fn ground_truth(&self) -> Vec<(Plane, PlaneLabel)> {
        self.planes.iter().map(|p| (p.plane(), p.label)).collect()
    }

    pub fn hole_area(&self) -> f64 {
        self.holes.iter().map(|h| h.area()).sum()
    }

    /// Sum of bounded plane areas.
    pub fn shell_area(&self) -> f64 {
        self.planes.iter().filter(|p| p.bounded).map(|p| p.area()).sum()
    }

    /// Nearest hit of the ray `origin + t·dir` with `t > 0`.
    pub fn cast(&self, origin: &Vec3, dir: &Vec3) -> Option<(f64, Hit)> {
        Tracer::new(self).cast(origin, dir)
    }

    /// Seed of frame `index` of this scene.
    pub fn frame_seed(&self, index: usize) -> u64 {
        self.seed
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(index as u64)
            .rotate_left(17)
    }

    /// Every trajectory frame, rendered in parallel, in trajectory order.
    pub fn render_sequence(&self) -> Vec<DepthFrame> {
        self.trajectory
            .par_iter()
            .enumerate()
            .map(|(i, tp)| {
                let mut f = render_depth(self, &tp.pose(), &self.intrinsics, self.frame_seed(i));
                f.timestamp = tp.timestamp;
                f
            })
            .collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene serializes")
    }

    pub fn from_toml(text: &str, path: &std::path::Path) -> Result<Self> {
        let probe: toml::Table = toml::from_str(text).map_err(|e| Error::parse(path, e.to_string()))?;
        match probe.get("schema").and_then(|v| v.as_str()) {
            Some(SCENE_SCHEMA) => {}
            found => {
                return Err(Error::Schema {
                    path: path.to_path_buf(),
                    expected: SCENE_SCHEMA.to_string(),
                    found: found.unwrap_or("<missing>").to_string(),
                })
            }
        }
        let scene: SceneSpec = toml::from_str(text).map_err(|e| Error::parse(path, e.to_string()))?;
        scene.validate()?;
        Ok(scene)
    }
}

const BOX_CHUNK: usize = 16;

/// Scene geometry prepared for repeated ray casts. Boxes are tested in
/// chunks of consecutive entries behind the chunk's bounding box.
struct Tracer<'a> {
    scene: &'a SceneSpec,
    planes: Vec<Plane>,
    boxes: Vec<Aabb>,
    chunks: Vec<Aabb>,
}

impl<'a> Tracer<'a> {
    fn new(scene: &'a SceneSpec) -> Self {
        let boxes: Vec<Aabb> = scene.boxes.iter().map(SceneBox::aabb).collect();
        let chunks = boxes
            .chunks(BOX_CHUNK)
            .map(|c| {
                let mut b = Aabb::empty();
                for a in c {
                    b.include(&a.min);
                    b.include(&a.max);
                }
                b
            })
            .collect();
        Tracer {
            scene,
            planes: scene.planes.iter().map(ScenePlane::plane).collect(),
            boxes,
            chunks,
        }
    }

    fn cast(&self, origin: &Vec3, dir: &Vec3) -> Option<(f64, Hit)> {
        let mut best: Option<(f64, Hit)> = None;
        for (i, (sp, pl)) in self.scene.planes.iter().zip(&self.planes).enumerate() {
            let denom = pl.n.dot(dir);
            if denom.abs() < 1e-12 {
                continue;
            }
            let t = -pl.signed_distance(origin) / denom;
            if !(t > 0.0) || best.is_some_and(|(bt, _)| bt <= t) {
                continue;
            }
            let p = origin + dir * t;
            if sp.bounded {
                let (a, b) = sp.params(&p);
                if !((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b)) {
                    continue;
                }
            }
            if self.scene.holes.iter().any(|h| h.plane == i && h.contains(&p)) {
                continue;
            }
            best = Some((t, Hit::Plane(i)));
        }
        for (c, chunk) in self.chunks.iter().enumerate() {
            match chunk.ray_hit(origin, dir, 0.0) {
                Some(t) if best.is_none_or(|(bt, _)| t < bt) => {}
                _ if chunk.contains(origin) => {}
                _ => continue,
            }
            let first = c * BOX_CHUNK;
            for (k, b) in self.boxes[first..(first + BOX_CHUNK).min(self.boxes.len())].iter().enumerate() {
                if let Some(t) = b.ray_hit(origin, dir, 0.0) {
                    if best.is_none_or(|(bt, _)| t < bt) {
                        best = Some((t, Hit::Box(first + k)));
                    }
                }
            }
        }
        best
    }
}

/// Ray-casts one noisy depth image. Noise is drawn per pixel in row-major
/// order from a generator seeded with `seed`; out-of-range depths become 0.
pub fn render_depth(scene: &SceneSpec, pose: &RigidTransform, intrinsics: &Intrinsics, seed: u64) -> DepthFrame {
    let tracer = Tracer::new(scene);
    let (w, h) = (DepthFrame::WIDTH, DepthFrame::HEIGHT);
    let mut frame = DepthFrame {
        width: w,
        height: h,
        depth: vec![0.0; w * h],
        intrinsics: *intrinsics,
        pose: *pose,
        gravity_up: scene.gravity(),
        timestamp: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let origin = pose.translation;
    for row in 0..h {
        for col in 0..w {
            let noise: f64 = StandardNormal.sample(&mut rng);
            let ray = frame.pixel_ray(col, row);
            let dir = pose.rotation * ray;
            let Some((t, _)) = tracer.cast(&origin, &dir) else {
                continue;
            };
            // camera rays have unit z, so the ray parameter is the z-depth
            let sigma = match scene.noise_model {
                NoiseModel::Gaussian => scene.noise_sigma,
                NoiseModel::DepthScaledGaussian => scene.noise_sigma * t * t,
            };
            let z = t + sigma * noise;
            if (MIN_DEPTH..=MAX_DEPTH).contains(&z) {
                frame.depth[row * w + col] = z;
            }
        }
    }
    frame
}

#[cfg(test)]
mod tests {
    use super::*;

    fn floor_scene(sigma: f64) -> SceneSpec {
        let mut s = SceneSpec::new("floor");
        s.planes.push(ScenePlane {
            name: "floor".into(),
            label: PlaneLabel::Floor,
            origin: [0.0, 0.0, 0.0],
            edge_u: [1.0, 0.0, 0.0],
            edge_v: [0.0, 1.0, 0.0],
            bounded: false,
        });
        s.noise_sigma = sigma;
        s
    }

    fn down_pose(h: f64) -> RigidTransform {
        RigidTransform::look_at(Vec3::new(0.0, 0.0, h), Vec3::zeros(), Vec3::y())
    }

    #[test]
    fn flat_floor_depth_is_height() {
        let s = floor_scene(0.0);
        let f = render_depth(&s, &down_pose(1.5), &Intrinsics::default(), 0);
        assert!(f.depth.iter().all(|d| (d - 1.5).abs() < 1e-12));
    }

    #[test]
    fn noise_statistics() {
        let s = floor_scene(0.01);
        let pose = down_pose(1.5);
        // center pixel of 1000 frames
        let samples: Vec<f64> = (0..1000)
            .map(|i| render_depth(&s, &pose, &Intrinsics::default(), i).depth[60 * 160 + 80])
            .collect();
        let mean = samples.iter().sum::<f64>() / 1000.0;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 999.0;
        assert!((var.sqrt() - 0.01).abs() < 0.0015);
    }

    #[test]
    fn depth_scaled_noise_grows() {
        let mut s = floor_scene(0.01);
        s.noise_model = NoiseModel::DepthScaledGaussian;
        let pose = down_pose(3.0);
        let samples: Vec<f64> = (0..400)
            .map(|i| render_depth(&s, &pose, &Intrinsics::default(), i).depth[60 * 160 + 80])
            .collect();
        let mean = samples.iter().sum::<f64>() / 400.0;
        let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 399.0).sqrt();
        assert!((sd - 0.09).abs() < 0.015, "{sd}");
    }

    #[test]
    fn holes_and_range() {
        let mut s = floor_scene(0.0);
        s.holes.push(SceneHole {
            plane: 0,
            origin: [-0.1, -0.1, 0.0],
            edge_u: [0.2, 0.0, 0.0],
            edge_v: [0.0, 0.2, 0.0],
        });
        s.validate().unwrap();
        let f = render_depth(&s, &down_pose(1.0), &Intrinsics::default(), 0);
        assert_eq!(f.depth[60 * 160 + 80], 0.0);
        assert!(f.depth[0] > 0.0);
        let far = render_depth(&s, &down_pose(7.0), &Intrinsics::default(), 0);
        assert!(far.depth.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn box_silhouette_matches_projection() {
        let mut s = floor_scene(0.0);
        s.boxes.push(SceneBox {
            name: "b".into(),
            min: [-0.2, -0.1, 0.0],
            max: [0.2, 0.1, 0.5],
        });
        let pose = down_pose(1.5);
        let k = Intrinsics::default();
        let f = render_depth(&s, &pose, &k, 0);
        // box top at depth 1.0: edges project to u = cx ± fx·x/z
        let row = 60;
        for col in 0..160 {
            let d = f.depth[row * 160 + col];
            let world_x = pose.apply(&(f.pixel_ray(col, row) * 1.0)).x;
            let margin = 1.0 / k.fx; // one pixel at depth 1
            if world_x.abs() < 0.2 - margin {
                assert!((d - 1.0).abs() < 1e-9, "col {col}");
            } else if world_x.abs() > 0.2 + margin {
                assert!(d > 1.0, "col {col}");
            }
        }
    }

    #[test]
    fn toml_round_trip() {
        let mut s = floor_scene(0.01);
        s.trajectory.push(TimedPose::new(0.0, &down_pose(1.5)));
        let text = s.to_toml();
        let back = SceneSpec::from_toml(&text, std::path::Path::new("x.toml")).unwrap();
        assert_eq!(back, s);
        let bad = text.replace(SCENE_SCHEMA, "planefuse-scene/0");
        assert!(matches!(
            SceneSpec::from_toml(&bad, std::path::Path::new("x.toml")),
            Err(Error::Schema { .. })
        ));
    }
}
