//! Frame-by-frame reconstruction: integrate, fit candidates on dirty
//! volumes, merge, label, propagate, gate, then re-mesh what changed.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{FitConfig, GateConfig, LabelRules, MergeConfig, RefineConfig, VoxelGridConfig};
use crate::detect::{generate_candidates, stored_candidates, FitMethod, PlaneCandidate};
use crate::error::{Error, Result};
use crate::eval::{area_by_plane, area_report, ms, AreaReport, FrameMetrics, RmsdAccumulator};
use crate::geometry::Plane;
use crate::io;
use crate::merge::{associate_ids, merge, propagate, MergeMethod, PlaneLabel, RefinedPlane};
use crate::refine::{
    allocate_fill_volumes, assign_plane_ids, build_corrector, jitter_gate, mesh_corrected, simplify_planar_volume,
    CorrectionMode, JitterGateState, VolumeCorrector,
};
use crate::sdf::{extract_mesh_with, integrate, raw_sample, DepthFrame, Intrinsics, VolumeCoord, VolumeGrid, VolumeMesh};
use crate::segment::{label_planes, segment_objects, walls_only_mesh, ObjectSegment, WallsOnly};

pub const RUN_SCHEMA: &str = "planefuse-run/1";
pub const CANDIDATES_SCHEMA: &str = "planefuse-candidates/1";
pub const PLANES_SCHEMA: &str = "planefuse-planes/1";
pub const METRICS_SCHEMA: &str = "planefuse-metrics/1";
pub const FILL_SCHEMA: &str = "planefuse-fill/1";
pub const SEGMENTS_SCHEMA: &str = "planefuse-segments/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModeFlags {
    /// Detect planes at all; off gives the plain TSDF mesh.
    pub planes: bool,
    pub denoise: bool,
    pub fill: bool,
    pub simplify_quads: bool,
    pub walls_only: bool,
    pub segment_objects: bool,
}

impl Default for ModeFlags {
    fn default() -> Self {
        ModeFlags {
            planes: true,
            denoise: true,
            fill: false,
            simplify_quads: false,
            walls_only: false,
            segment_objects: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    pub frames_dir: Option<String>,
    pub out_dir: Option<String>,
    /// Seconds; zero requires exact timestamp matches.
    pub association_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub seed: u64,
    pub candidate_method: FitMethod,
    pub merge_method: MergeMethod,
    pub min_object_vertices: usize,
    pub modes: ModeFlags,
    pub intrinsics: Intrinsics,
    pub grid: VoxelGridConfig,
    pub fit: FitConfig,
    pub merge: MergeConfig,
    pub labels: LabelRules,
    pub gate: GateConfig,
    pub refine: RefineConfig,
    pub io: IoConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema: RUN_SCHEMA.into(),
            seed: 0,
            candidate_method: FitMethod::SdfIrls,
            merge_method: MergeMethod::Ransac,
            min_object_vertices: 50,
            modes: ModeFlags::default(),
            intrinsics: Intrinsics::default(),
            grid: VoxelGridConfig::default(),
            fit: FitConfig::default(),
            merge: MergeConfig::default(),
            labels: LabelRules::default(),
            gate: GateConfig::default(),
            refine: RefineConfig::default(),
            io: IoConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema != RUN_SCHEMA {
            return Err(Error::Config(format!(
                "expected schema `{RUN_SCHEMA}`, found `{}`",
                self.schema
            )));
        }
        self.grid.validate()?;
        self.fit.validate()?;
        self.merge.validate()?;
        self.labels.validate()?;
        if !(self.io.association_tolerance >= 0.0) {
            return Err(Error::Config("association_tolerance must be >= 0".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| Error::parse(path, e.message()))?;
        if cfg.schema != RUN_SCHEMA {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                expected: RUN_SCHEMA.into(),
                found: cfg.schema,
            });
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Correction applied at meshing time, if any.
    pub fn correction_mode(&self) -> Option<CorrectionMode> {
        let m = &self.modes;
        match (m.planes, m.denoise, m.fill) {
            (false, _, _) => None,
            (true, _, true) => Some(CorrectionMode::DenoiseAndFill),
            (true, true, false) => Some(CorrectionMode::DenoiseOnly),
            (true, false, false) => None,
        }
    }
}

pub struct Reconstructor {
    pub config: RunConfig,
    grid: VolumeGrid,
    planes: Vec<RefinedPlane>,
    next_plane_id: u32,
    gate: JitterGateState,
    meshes: BTreeMap<VolumeCoord, VolumeMesh>,
    fit_times: BTreeMap<VolumeCoord, Duration>,
    metrics: Vec<FrameMetrics>,
}

impl Reconstructor {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        Ok(Reconstructor {
            grid: VolumeGrid::new(config.grid.clone()),
            gate: JitterGateState::new(&config.gate),
            config,
            planes: Vec::new(),
            next_plane_id: 0,
            meshes: BTreeMap::new(),
            fit_times: BTreeMap::new(),
            metrics: Vec::new(),
        })
    }

    pub fn grid(&self) -> &VolumeGrid {
        &self.grid
    }

    pub fn planes(&self) -> &[RefinedPlane] {
        &self.planes
    }

    pub fn meshes(&self) -> &BTreeMap<VolumeCoord, VolumeMesh> {
        &self.meshes
    }

    pub fn metrics(&self) -> &[FrameMetrics] {
        &self.metrics
    }

    pub fn gate(&self) -> &JitterGateState {
        &self.gate
    }

    pub fn candidates(&self) -> BTreeMap<VolumeCoord, PlaneCandidate> {
        stored_candidates(&self.grid)
    }

    fn plane_map(&self) -> BTreeMap<u32, RefinedPlane> {
        self.planes.iter().map(|p| (p.id, p.clone())).collect()
    }

    pub fn run(&mut self, frames: &[DepthFrame]) -> Result<()> {
        for f in frames {
            self.process_frame(f)?;
        }
        Ok(())
    }

    pub fn process_frame(&mut self, frame: &DepthFrame) -> Result<FrameMetrics> {
        let frame_index = self.metrics.len();
        let t_start = Instant::now();
        let cfg = self.config.clone();
        let seed = cfg.seed.wrapping_add(frame_index as u64);

        let t0 = Instant::now();
        let updated = integrate(&mut self.grid, frame)?;
        let fusion = t0.elapsed();

        let mut candidates = Duration::ZERO;
        let mut merging = Duration::ZERO;
        let t_refine;
        let mut remesh: BTreeSet<VolumeCoord> = BTreeSet::new();
        let mut data_changed: BTreeSet<VolumeCoord> = updated.clone();
        if cfg.modes.planes {
            let t0 = Instant::now();
            let run = generate_candidates(&mut self.grid, &updated, cfg.candidate_method, &cfg.fit, seed);
            candidates = t0.elapsed();
            self.fit_times.extend(run.fit_times);

            let t0 = Instant::now();
            let all = stored_candidates(&self.grid);
            let merged = merge(cfg.merge_method, &all, &self.grid.config, &cfg.merge, seed);
            let mut planes = associate_ids(&self.planes, merged, &mut self.next_plane_id);
            label_planes(&mut planes, &cfg.labels);
            self.planes = planes;
            merging = t0.elapsed();

            let t0 = Instant::now();
            let half = cfg.merge.propagate_dist_or(self.grid.config.truncation);
            if cfg.modes.fill {
                data_changed.extend(allocate_fill_volumes(&mut self.grid, &self.planes, half));
            }
            let prop = propagate(&self.planes, &mut self.grid, &cfg.merge, cfg.refine.infinite_floor);
            remesh.extend(prop.changed);
            let live: BTreeSet<u32> = self.planes.iter().map(|p| p.id).collect();
            for id in self.gate.planes.keys().copied().collect::<Vec<_>>() {
                if !live.contains(&id) {
                    self.gate.forget(id);
                }
            }
            for p in &self.planes {
                jitter_gate(p.id, &p.plane, &mut self.gate);
            }
            // volumes whose effective plane set moved since they were meshed
            let eye = frame.pose.translation;
            let radius = self.grid.config.re_mesh_radius;
            for vol in self.grid.volumes() {
                let now: BTreeMap<u32, Plane> = vol
                    .refined
                    .iter()
                    .filter_map(|id| self.gate.authoritative(*id).map(|p| (*id, *p)))
                    .collect();
                if now != vol.last_meshed_planes && (self.grid.volume_center(&vol.coord) - eye).norm() <= radius {
                    remesh.insert(vol.coord);
                }
            }
            t_refine = t0.elapsed();
        } else {
            t_refine = Duration::ZERO;
        }

        // a volume's mesh reads one layer of its +x/+y/+z neighbors
        for c in &data_changed {
            for dx in [0, -1] {
                for dy in [0, -1] {
                    for dz in [0, -1] {
                        let n = c.offset(dx, dy, dz);
                        if self.grid.contains(&n) {
                            remesh.insert(n);
                        }
                    }
                }
            }
        }

        let t0 = Instant::now();
        let remeshed = self.remesh(&remesh);
        let meshing = t0.elapsed();
        let total = t_start.elapsed();

        let mut acc = remeshed.1;
        for (c, m) in &self.meshes {
            if !remesh.contains(c) {
                acc.all.add_unchanged(m);
                if self.grid.get(c).is_some_and(|v| !v.refined.is_empty()) {
                    acc.planar.add_unchanged(m);
                }
            }
        }
        let first = frame_index == 0;
        let metrics = FrameMetrics {
            frame_index,
            timestamp: frame.timestamp,
            rmsd: if first { None } else { acc.all.value() },
            plane_rmsd: if first { None } else { acc.planar.value() },
            fusion_ms: ms(fusion),
            candidates_ms: ms(candidates),
            merging_ms: ms(merging),
            refine_ms: ms(t_refine),
            meshing_ms: ms(meshing),
            total_ms: ms(total),
            updated_volumes: updated.len(),
            remeshed_volumes: remeshed.0,
            candidate_count: self.grid.volumes().filter(|v| v.candidate.is_some()).count(),
            plane_count: self.planes.len(),
        };
        self.metrics.push(metrics.clone());
        Ok(metrics)
    }

    fn corrector(&self, c: &VolumeCoord, planes: &BTreeMap<u32, RefinedPlane>, mode: CorrectionMode) -> VolumeCorrector {
        build_corrector(&self.grid, c, planes, Some(&self.gate), &self.config.refine, mode, |_| true)
    }

    /// Meshes one volume under the configured mode. Returns the mesh and the
    /// plane coefficients it used.
    pub fn mesh_volume(&self, c: VolumeCoord) -> Option<(VolumeMesh, BTreeMap<u32, Plane>)> {
        self.mesh_volume_with(c, &self.plane_map(), self.config.correction_mode())
    }

    fn mesh_volume_with(
        &self,
        c: VolumeCoord,
        planes: &BTreeMap<u32, RefinedPlane>,
        mode: Option<CorrectionMode>,
    ) -> Option<(VolumeMesh, BTreeMap<u32, Plane>)> {
        let corr = self.corrector(&c, planes, mode.unwrap_or(CorrectionMode::DenoiseOnly));
        let used: BTreeMap<u32, Plane> = corr.active.iter().map(|a| (a.id, a.plane)).collect();
        let dist = self.config.refine.plane_vertex_dist;
        let mut mesh = match mode {
            Some(_) => mesh_corrected(&self.grid, c, &corr, dist).ok()?,
            None => {
                let mut m = extract_mesh_with(&self.grid, c, |_, v| raw_sample(v)).ok()?;
                assign_plane_ids(&mut m, &corr.active, dist);
                m
            }
        };
        if mode.is_some() && self.config.modes.simplify_quads && !used.is_empty() {
            let pairs: Vec<(u32, Plane)> = used.iter().map(|(k, v)| (*k, *v)).collect();
            mesh = simplify_planar_volume(&self.grid, &pairs, &mesh);
        }
        Some((mesh, used))
    }

    fn remesh(&mut self, coords: &BTreeSet<VolumeCoord>) -> (usize, RmsdPair) {
        let planes = self.plane_map();
        let mode = self.config.correction_mode();
        let list: Vec<VolumeCoord> = coords.iter().copied().collect();
        let this: &Self = self;
        let results: Vec<(VolumeCoord, Option<(VolumeMesh, BTreeMap<u32, Plane>)>)> = list
            .par_iter()
            .map(|c| (*c, this.mesh_volume_with(*c, &planes, mode)))
            .collect();
        let mut acc = RmsdPair::default();
        for (c, res) in results {
            let Some((mesh, used)) = res else {
                self.meshes.remove(&c);
                continue;
            };
            let planar = self.grid.get(&c).is_some_and(|v| !v.refined.is_empty());
            if let Some(prev) = self.meshes.get(&c) {
                acc.all.add_pair(prev, &mesh);
                if planar {
                    acc.planar.add_pair(prev, &mesh);
                }
            }
            if let Some(vol) = self.grid.get_mut(&c) {
                vol.dirty = false;
                vol.last_meshed_planes = used;
            }
            if mesh.is_empty() {
                self.meshes.remove(&c);
            } else {
                self.meshes.insert(c, mesh);
            }
        }
        (list.len(), acc)
    }

    /// Mesh area with and without synthesized triangles.
    pub fn area_report(&self) -> AreaReport {
        area_report(self.meshes.values())
    }

    /// Raw meshes of every volume with vertices attributed to nearby planes.
    pub fn raw_meshes(&self) -> Vec<VolumeMesh> {
        let planes = self.plane_map();
        let coords = self.grid.sorted_coords();
        coords
            .par_iter()
            .filter_map(|c| self.mesh_volume_with(*c, &planes, None).map(|(m, _)| m))
            .filter(|m| !m.is_empty())
            .collect()
    }

    pub fn segment_objects(&self) -> Vec<ObjectSegment> {
        segment_objects(&self.raw_meshes(), self.config.min_object_vertices)
    }

    pub fn walls_only(&self) -> WallsOnly {
        walls_only_mesh(&self.grid, &self.planes, &self.config.labels, Some(&self.gate), &self.config.refine)
    }

    /// Copy of the grid with every observed voxel replaced by its de-noised
    /// value under the current refined planes.
    pub fn corrected_grid(&self) -> VolumeGrid {
        let mut g = self.grid.clone();
        let planes = self.plane_map();
        let cfg = &self.config.refine;
        for c in self.grid.sorted_coords() {
            let corr = build_corrector(&self.grid, &c, &planes, None, cfg, CorrectionMode::DenoiseOnly, |_| true);
            if corr.is_empty() {
                continue;
            }
            let dim = self.grid.dim();
            let Some(vol) = g.get_mut(&c) else {
                continue;
            };
            vol.candidate = None;
            for k in 0..dim {
                for j in 0..dim {
                    for i in 0..dim {
                        let idx = self.grid.voxel_index(i, j, k);
                        let v = &mut vol.voxels[idx];
                        if !v.is_observed() {
                            continue;
                        }
                        let x = self.grid.voxel_center(&c, i, j, k);
                        if let Some(value) = corr.evaluate(&x, v.sdf, true).value {
                            v.sdf = value;
                        }
                    }
                }
            }
        }
        g
    }

    /// Writes meshes, dumps and per-frame metrics into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let cfg_path = dir.join("run.toml");
        fs::write(&cfg_path, self.config.to_toml()).map_err(|e| Error::io(&cfg_path, e))?;

        let labels: BTreeMap<u32, PlaneLabel> = self.planes.iter().map(|p| (p.id, p.label)).collect();
        let color = |m: &VolumeMesh, i: usize| match m.vertex_plane_id[i].and_then(|id| labels.get(&id)) {
            Some(l) => label_color(*l),
            None => [200, 200, 200],
        };
        let meshes: Vec<&VolumeMesh> = self.meshes.values().collect();
        io::write_ply(&dir.join("mesh.ply"), &meshes, Some(&color))?;

        let f = |x: f64| format!("{x:.9}");
        let rows: Vec<Vec<String>> = self
            .candidates()
            .values()
            .map(|c| {
                let [x, y, z] = c.volume_coord.as_array();
                let us = self
                    .fit_times
                    .get(&c.volume_coord)
                    .map_or(0.0, |d| d.as_secs_f64() * 1e6);
                vec![
                    x.to_string(),
                    y.to_string(),
                    z.to_string(),
                    f(c.plane.n.x),
                    f(c.plane.n.y),
                    f(c.plane.n.z),
                    f(c.plane.d),
                    c.support.to_string(),
                    f(c.mean_abs_residual),
                    c.method.as_str().to_string(),
                    format!("{us:.1}"),
                ]
            })
            .collect();
        io::write_csv(
            &dir.join("candidates.csv"),
            CANDIDATES_SCHEMA,
            &[
                "coord_x",
                "coord_y",
                "coord_z",
                "nx",
                "ny",
                "nz",
                "d",
                "support",
                "mean_abs_residual",
                "method",
                "fit_time_us",
            ],
            &rows,
        )?;

        io::write_csv(&dir.join("planes.csv"), PLANES_SCHEMA, &PLANE_HEADER, &plane_rows(&self.planes))?;

        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.9}"));
        let t = |x: f64| format!("{x:.3}");
        let rows: Vec<Vec<String>> = self
            .metrics
            .iter()
            .map(|m| {
                vec![
                    m.frame_index.to_string(),
                    format!("{:.6}", m.timestamp),
                    opt(m.rmsd),
                    opt(m.plane_rmsd),
                    m.updated_volumes.to_string(),
                    m.remeshed_volumes.to_string(),
                    m.candidate_count.to_string(),
                    m.plane_count.to_string(),
                    t(m.fusion_ms),
                    t(m.candidates_ms),
                    t(m.merging_ms),
                    t(m.refine_ms),
                    t(m.meshing_ms),
                    t(m.total_ms),
                ]
            })
            .collect();
        io::write_csv(&dir.join("metrics.csv"), METRICS_SCHEMA, &METRICS_HEADER, &rows)?;

        let by_plane = area_by_plane(self.meshes.values());
        let mut rows = Vec::new();
        let area_row = |id: String, label: &str, r: &AreaReport| {
            vec![
                id,
                label.to_string(),
                format!("{:.6}", r.raw_area),
                format!("{:.6}", r.filled_area),
                format!("{:.3}", r.improve_percent()),
            ]
        };
        for (id, r) in &by_plane {
            match id {
                Some(id) => {
                    let label = labels.get(id).map_or("other", |l| l.as_str());
                    rows.push(area_row(id.to_string(), label, r));
                }
                None => rows.push(area_row("none".into(), "", r)),
            }
        }
        rows.push(area_row("total".into(), "", &self.area_report()));
        io::write_csv(
            &dir.join("fill.csv"),
            FILL_SCHEMA,
            &["plane_id", "label", "real_area_m2", "filled_area_m2", "improve_percent"],
            &rows,
        )?;

        if self.config.modes.walls_only {
            let w = self.walls_only();
            let meshes: Vec<&VolumeMesh> = w.meshes.iter().collect();
            io::write_ply(&dir.join("walls_only.ply"), &meshes, Some(&color))?;
        }
        if self.config.modes.segment_objects {
            self.write_segments(dir)?;
        }
        Ok(())
    }

    /// Segment summary CSV and a PLY colored by object id and plane label.
    pub fn write_segments(&self, dir: &Path) -> Result<()> {
        let raw = self.raw_meshes();
        let segs = segment_objects(&raw, self.config.min_object_vertices);
        let f = |x: f64| format!("{x:.6}");
        let rows: Vec<Vec<String>> = segs
            .iter()
            .map(|s| {
                vec![
                    s.object_id.to_string(),
                    s.vertex_count.to_string(),
                    s.triangle_count.to_string(),
                    f(s.surface_area),
                    f(s.aabb.min.x),
                    f(s.aabb.min.y),
                    f(s.aabb.min.z),
                    f(s.aabb.max.x),
                    f(s.aabb.max.y),
                    f(s.aabb.max.z),
                ]
            })
            .collect();
        io::write_csv(
            &dir.join("segments.csv"),
            SEGMENTS_SCHEMA,
            &[
                "object_id",
                "vertex_count",
                "triangle_count",
                "surface_area_m2",
                "min_x",
                "min_y",
                "min_z",
                "max_x",
                "max_y",
                "max_z",
            ],
            &rows,
        )?;
        let owner: std::collections::HashMap<_, u32> = segs
            .iter()
            .flat_map(|s| s.vertices.iter().map(move |k| (*k, s.object_id)))
            .collect();
        let labels: BTreeMap<u32, PlaneLabel> = self.planes.iter().map(|p| (p.id, p.label)).collect();
        let color = |m: &VolumeMesh, i: usize| {
            if let Some(l) = m.vertex_plane_id[i].and_then(|id| labels.get(&id)) {
                return label_color(*l);
            }
            match owner.get(&m.vertices[i].key) {
                Some(id) => object_color(*id),
                None => [128, 128, 128],
            }
        };
        let refs: Vec<&VolumeMesh> = raw.iter().collect();
        io::write_ply(&dir.join("segments.ply"), &refs, Some(&color))
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct RmsdPair {
    all: RmsdAccumulator,
    planar: RmsdAccumulator,
}

pub const PLANE_HEADER: [&str; 11] = [
    "id",
    "nx",
    "ny",
    "nz",
    "d",
    "support",
    "label",
    "extent_min_u",
    "extent_min_v",
    "extent_max_u",
    "extent_max_v",
];

pub const METRICS_HEADER: [&str; 14] = [
    "frame",
    "timestamp",
    "rmsd_m",
    "plane_rmsd_m",
    "updated_volumes",
    "remeshed_volumes",
    "candidates",
    "planes",
    "fusion_ms",
    "candidates_ms",
    "merging_ms",
    "refine_ms",
    "meshing_ms",
    "total_ms",
];

/// Columns of the output CSVs that hold wall-clock measurements.
pub const TIMING_COLUMNS: [&str; 7] = [
    "fit_time_us",
    "fusion_ms",
    "candidates_ms",
    "merging_ms",
    "refine_ms",
    "meshing_ms",
    "total_ms",
];

pub fn plane_rows(planes: &[RefinedPlane]) -> Vec<Vec<String>> {
    let f = |x: f64| format!("{x:.9}");
    planes
        .iter()
        .map(|p| {
            let e = &p.extent;
            vec![
                p.id.to_string(),
                f(p.plane.n.x),
                f(p.plane.n.y),
                f(p.plane.n.z),
                f(p.plane.d),
                p.support.to_string(),
                p.label.as_str().to_string(),
                f(e.min_u),
                f(e.min_v),
                f(e.max_u),
                f(e.max_v),
            ]
        })
        .collect()
}

/// Wall green, floor red, ceiling blue, other yellow.
pub fn label_color(l: PlaneLabel) -> [u8; 3] {
    match l {
        PlaneLabel::Wall => [40, 180, 60],
        PlaneLabel::Floor => [200, 40, 40],
        PlaneLabel::Ceiling => [60, 90, 200],
        PlaneLabel::Other => [220, 200, 60],
    }
}

pub fn object_color(id: u32) -> [u8; 3] {
    let h = (id as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    [(h >> 16) as u8 | 0x40, (h >> 32) as u8 | 0x40, (h >> 48) as u8 | 0x40]
}

/// Per-frame metrics read back from a run directory.
pub fn read_metrics(path: &Path) -> Result<Vec<FrameMetrics>> {
    let (header, rows) = io::read_csv(path, METRICS_SCHEMA)?;
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::parse(path, format!("missing column {name}")))
    };
    let idx: Vec<usize> = METRICS_HEADER.iter().map(|n| col(n)).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        let get = |k: usize| row.get(idx[k]).map(String::as_str).unwrap_or("");
        let num = |k: usize| -> Result<f64> {
            get(k)
                .parse::<f64>()
                .map_err(|_| Error::parse(path, format!("row {}: bad {}", r + 1, METRICS_HEADER[k])))
        };
        let opt = |k: usize| -> Result<Option<f64>> {
            if get(k).is_empty() {
                Ok(None)
            } else {
                num(k).map(Some)
            }
        };
        out.push(FrameMetrics {
            frame_index: num(0)? as usize,
            timestamp: num(1)?,
            rmsd: opt(2)?,
            plane_rmsd: opt(3)?,
            updated_volumes: num(4)? as usize,
            remeshed_volumes: num(5)? as usize,
            candidate_count: num(6)? as usize,
            plane_count: num(7)? as usize,
            fusion_ms: num(8)?,
            candidates_ms: num(9)?,
            merging_ms: num(10)?,
            refine_ms: num(11)?,
            meshing_ms: num(12)?,
            total_ms: num(13)?,
        });
    }
    Ok(out)
}
