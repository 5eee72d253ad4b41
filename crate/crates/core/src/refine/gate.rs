use std::collections::BTreeMap;

use crate::config::GateConfig;
use crate::geometry::Plane;

/// Coefficients each refined plane was last meshed with. Small coefficient
/// updates are held back so planar meshes stay fixed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct JitterGateState {
    pub planes: BTreeMap<u32, Plane>,
    pub angle_deg: f64,
    pub offset: f64,
}

impl JitterGateState {
    pub fn new(cfg: &GateConfig) -> Self {
        JitterGateState {
            planes: BTreeMap::new(),
            angle_deg: cfg.angle_deg,
            offset: cfg.offset,
        }
    }

    /// Coefficients to mesh plane `id` with.
    pub fn authoritative(&self, id: u32) -> Option<&Plane> {
        self.planes.get(&id)
    }

    pub fn forget(&mut self, id: u32) {
        self.planes.remove(&id);
    }
}

/// True (and state updated) when `new_plane` is the first estimate of `id`
/// or moved by more than the angle or offset gate.
pub fn jitter_gate(plane_id: u32, new_plane: &Plane, state: &mut JitterGateState) -> bool {
    let pass = match state.planes.get(&plane_id) {
        None => true,
        Some(old) => {
            old.angle_to(new_plane).to_degrees() > state.angle_deg
                || (old.d - new_plane.d).abs() > state.offset
        }
    };
    if pass {
        state.planes.insert(plane_id, *new_plane);
    }
    pass
}
