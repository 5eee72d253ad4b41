//! Small geometric vocabulary shared by every stage: planes in Hessian
//! normal form, rigid camera poses, boxes and in-plane rectangles.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;

/// Plane `n·x + d = 0` with unit normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub n: Vec3,
    pub d: f64,
}

impl Plane {
    /// Normalizes `(n, d)` by `|n|`. Returns `None` for a (near) zero normal.
    pub fn new(n: Vec3, d: f64) -> Option<Self> {
        let norm = n.norm();
        if !norm.is_finite() || norm < 1e-12 || !d.is_finite() {
            return None;
        }
        Some(Plane {
            n: n / norm,
            d: d / norm,
        })
    }

    pub fn from_point_normal(point: &Vec3, normal: &Vec3) -> Option<Self> {
        let n = normal.try_normalize(1e-12)?;
        Some(Plane { n, d: -n.dot(point) })
    }

    /// Signed distance `n·x + d`, positive on the side the normal points to.
    #[inline]
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.n.x * p.x + self.n.y * p.y + self.n.z * p.z + self.d
    }

    pub fn project(&self, p: &Vec3) -> Vec3 {
        p - self.n * self.signed_distance(p)
    }

    pub fn flipped(&self) -> Self {
        Plane {
            n: -self.n,
            d: -self.d,
        }
    }

    /// Angle between the two normals in radians, in `[0, π]`.
    pub fn angle_to(&self, other: &Plane) -> f64 {
        angle_between(&self.n, &other.n)
    }

    pub fn frame(&self) -> PlaneFrame {
        PlaneFrame::new(self)
    }
}

/// Angle between two (not necessarily unit) vectors, robust near 0 and π.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Deterministic orthonormal in-plane basis `(u, v)` with `u × v = n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneFrame {
    pub u: Vec3,
    pub v: Vec3,
}

impl PlaneFrame {
    pub fn new(plane: &Plane) -> Self {
        let n = plane.n;
        // helper = world axis least aligned with n; first index wins ties
        let abs = n.abs();
        let mut axis = 0;
        for i in 1..3 {
            if abs[i] < abs[axis] {
                axis = i;
            }
        }
        let mut helper = Vec3::zeros();
        helper[axis] = 1.0;
        let v = n.cross(&helper).normalize();
        let u = v.cross(&n);
        PlaneFrame { u, v }
    }

    #[inline]
    pub fn coords(&self, p: &Vec3) -> (f64, f64) {
        (self.u.dot(p), self.v.dot(p))
    }
}

/// Axis-aligned rectangle in a plane frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect2 {
    pub min_u: f64,
    pub min_v: f64,
    pub max_u: f64,
    pub max_v: f64,
}

impl Rect2 {
    pub fn empty() -> Self {
        Rect2 {
            min_u: f64::INFINITY,
            min_v: f64::INFINITY,
            max_u: f64::NEG_INFINITY,
            max_v: f64::NEG_INFINITY,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min_u > self.max_u || self.min_v > self.max_v
    }

    pub fn include(&mut self, u: f64, v: f64) {
        self.min_u = self.min_u.min(u);
        self.min_v = self.min_v.min(v);
        self.max_u = self.max_u.max(u);
        self.max_v = self.max_v.max(v);
    }

    pub fn union(&mut self, other: &Rect2) {
        self.min_u = self.min_u.min(other.min_u);
        self.min_v = self.min_v.min(other.min_v);
        self.max_u = self.max_u.max(other.max_u);
        self.max_v = self.max_v.max(other.max_v);
    }

    pub fn inflated(&self, margin: f64) -> Rect2 {
        Rect2 {
            min_u: self.min_u - margin,
            min_v: self.min_v - margin,
            max_u: self.max_u + margin,
            max_v: self.max_v + margin,
        }
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.min_u && u <= self.max_u && v >= self.min_v && v <= self.max_v
    }

    /// `other` lies inside `self`, with `eps` slack on every side.
    pub fn contains_rect(&self, other: &Rect2, eps: f64) -> bool {
        other.min_u >= self.min_u - eps
            && other.min_v >= self.min_v - eps
            && other.max_u <= self.max_u + eps
            && other.max_v <= self.max_v + eps
    }

    pub fn area(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            (self.max_u - self.min_u) * (self.max_v - self.min_v)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Aabb { min, max }
    }

    pub fn empty() -> Self {
        Aabb {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|i| self.min[i] > self.max[i])
    }

    pub fn include(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let (a, b) = (self.min, self.max);
        [
            Vec3::new(a.x, a.y, a.z),
            Vec3::new(b.x, a.y, a.z),
            Vec3::new(b.x, b.y, a.z),
            Vec3::new(a.x, b.y, a.z),
            Vec3::new(a.x, a.y, b.z),
            Vec3::new(b.x, a.y, b.z),
            Vec3::new(b.x, b.y, b.z),
            Vec3::new(a.x, b.y, b.z),
        ]
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Box intersects the slab `|s(x)| <= half_width`.
    pub fn intersects_slab(&self, plane: &Plane, half_width: f64) -> bool {
        let c = self.center();
        let h = (self.max - self.min) * 0.5;
        let radius = plane.n.x.abs() * h.x + plane.n.y.abs() * h.y + plane.n.z.abs() * h.z;
        plane.signed_distance(&c).abs() <= half_width + radius
    }

    /// Footprint of the box in a plane frame (projection of its corners).
    pub fn footprint(&self, frame: &PlaneFrame) -> Rect2 {
        let mut r = Rect2::empty();
        for c in self.corners() {
            let (u, v) = frame.coords(&c);
            r.include(u, v);
        }
        r
    }

    /// Entry distance of the ray `origin + t·dir`, `t > t_min`.
    pub fn ray_hit(&self, origin: &Vec3, dir: &Vec3, t_min: f64) -> Option<f64> {
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for i in 0..3 {
            if dir[i].abs() < 1e-300 {
                if origin[i] < self.min[i] || origin[i] > self.max[i] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / dir[i];
            let mut a = (self.min[i] - origin[i]) * inv;
            let mut b = (self.max[i] - origin[i]) * inv;
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            t0 = t0.max(a);
            t1 = t1.min(b);
        }
        if t0 > t1 {
            return None;
        }
        if t0 > t_min {
            Some(t0)
        } else if t1 > t_min {
            Some(t1)
        } else {
            None
        }
    }
}

/// Rigid camera-to-world transform `x_world = R·x_cam + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Quaternion in TUM order; the quaternion is normalized first.
    pub fn from_translation_quaternion(t: Vec3, qx: f64, qy: f64, qz: f64, qw: f64) -> Self {
        let q = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(qw, qx, qy, qz));
        RigidTransform {
            rotation: *q.to_rotation_matrix().matrix(),
            translation: t,
        }
    }

    /// `(qx, qy, qz, qw)` with `qw >= 0`.
    pub fn quaternion(&self) -> [f64; 4] {
        let rot = Rotation3::from_matrix(&self.rotation);
        let q = UnitQuaternion::from_rotation_matrix(&rot);
        let mut c = [q.i, q.j, q.k, q.w];
        if c[3] < 0.0 {
            c.iter_mut().for_each(|x| *x = -*x);
        }
        c
    }

    /// Camera at `eye` looking at `target`; camera axes are x right, y down,
    /// z forward.
    pub fn look_at(eye: Vec3, target: Vec3, up_hint: Vec3) -> Self {
        let forward = (target - eye).normalize();
        let mut right = forward.cross(&up_hint);
        if right.norm() < 1e-9 {
            // looking along the hint; pick any perpendicular
            let alt = if forward.x.abs() < 0.9 {
                Vec3::x()
            } else {
                Vec3::y()
            };
            right = forward.cross(&alt);
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        RigidTransform {
            rotation: Matrix3::from_columns(&[right, down, forward]),
            translation: eye,
        }
    }

    pub fn is_orthonormal(&self, tol: f64) -> bool {
        let r = &self.rotation;
        let should_be_identity = r.transpose() * r;
        let err = (should_be_identity - Matrix3::identity()).abs().max();
        err <= tol && (r.determinant() - 1.0).abs() <= tol
    }

    #[inline]
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    #[inline]
    pub fn apply_inverse(&self, p: &Vec3) -> Vec3 {
        self.rotation.tr_mul(&(p - self.translation))
    }
}
