//! Plane-based SDF correction evaluated at meshing time.

use serde::{Deserialize, Serialize};

use crate::geometry::{Plane, PlaneFrame, Rect2, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectionMode {
    DenoiseOnly,
    DenoiseAndFill,
}

/// Which branch of the correction produced a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CorrectionCase {
    /// Mixed plane signs near an intersection: smallest signed distance.
    Intersection,
    /// Close to a plane that agrees with the observation: distance to it.
    Closest,
    /// Original value (or still unobserved).
    Original,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrectionContext {
    pub planes: Vec<Plane>,
    pub tau: f64,
    pub mode: CorrectionMode,
    /// Intersection test on the product of signed distances (`true`) or on
    /// mixed signs with both distances inside the band (`false`).
    pub strict_product_band: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correction {
    /// `None` keeps the voxel unobserved.
    pub value: Option<f64>,
    pub case: CorrectionCase,
}

fn mixed_pair(s: &[f64], tau: f64, strict_product_band: bool) -> bool {
    for i in 0..s.len() {
        for j in (i + 1)..s.len() {
            let hit = if strict_product_band {
                let prod = s[i] * s[j];
                -tau < prod && prod < 0.0
            } else {
                s[i] * s[j] < 0.0 && s[i].abs() < tau && s[j].abs() < tau
            };
            if hit {
                return true;
            }
        }
    }
    false
}

/// Corrected SDF of one voxel. Unobserved voxels are only synthesized in
/// `DenoiseAndFill` mode; otherwise they stay unobserved.
pub fn corrected_sdf(x: &Vec3, phi: f64, observed: bool, ctx: &CorrectionContext) -> Correction {
    let original = Correction {
        value: observed.then_some(phi),
        case: CorrectionCase::Original,
    };
    let eligible = observed || ctx.mode == CorrectionMode::DenoiseAndFill;
    if ctx.planes.is_empty() || !eligible {
        return original;
    }
    let tau = ctx.tau;
    let s: Vec<f64> = ctx.planes.iter().map(|p| p.signed_distance(x)).collect();
    if mixed_pair(&s, tau, ctx.strict_product_band) {
        let d_min = s.iter().copied().fold(f64::INFINITY, f64::min);
        return Correction {
            value: Some(d_min.clamp(-tau, tau)),
            case: CorrectionCase::Intersection,
        };
    }
    // first plane wins ties on |s|
    let mut closest = s[0];
    for &v in &s[1..] {
        if v.abs() < closest.abs() {
            closest = v;
        }
    }
    if closest.abs() < tau && (!observed || (closest - phi).abs() < tau) {
        return Correction {
            value: Some(closest.clamp(-tau, tau)),
            case: CorrectionCase::Closest,
        };
    }
    original
}

/// A plane active in one volume together with the rectangle it may fill.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivePlane {
    pub id: u32,
    pub plane: Plane,
    pub frame: PlaneFrame,
    /// Region where unobserved voxels may be synthesized; `None` = unbounded.
    pub fill_extent: Option<Rect2>,
}

impl ActivePlane {
    pub fn may_fill(&self, x: &Vec3) -> bool {
        match &self.fill_extent {
            None => true,
            Some(r) => {
                let (u, v) = self.frame.coords(x);
                r.contains(u, v)
            }
        }
    }
}

/// Correction for all voxels of one volume: observed voxels see the whole
/// `Q_i`, unobserved ones only the planes whose fill extent holds them.
#[derive(Clone, Debug)]
pub struct VolumeCorrector {
    pub active: Vec<ActivePlane>,
    pub tau: f64,
    pub mode: CorrectionMode,
    pub strict_product_band: bool,
    all: CorrectionContext,
}

impl VolumeCorrector {
    pub fn new(active: Vec<ActivePlane>, tau: f64, mode: CorrectionMode, strict_product_band: bool) -> Self {
        let all = CorrectionContext {
            planes: active.iter().map(|a| a.plane).collect(),
            tau,
            mode,
            strict_product_band,
        };
        VolumeCorrector {
            active,
            tau,
            mode,
            strict_product_band,
            all,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn evaluate(&self, x: &Vec3, phi: f64, observed: bool) -> Correction {
        if observed || self.mode == CorrectionMode::DenoiseOnly {
            return corrected_sdf(x, phi, observed, &self.all);
        }
        let planes: Vec<Plane> = self
            .active
            .iter()
            .filter(|a| a.may_fill(x))
            .map(|a| a.plane)
            .collect();
        let ctx = CorrectionContext {
            planes,
            ..self.all.clone()
        };
        corrected_sdf(x, phi, observed, &ctx)
    }
}
