//! Evaluation: per-frame mesh stability, hole-filling area, stage timings and
//! plane detection accuracy against ground truth.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::{Duration, Instant};

use crate::config::{FitConfig, MergeConfig, VoxelGridConfig};
use crate::detect::{generate_candidates, FitMethod};
use crate::geometry::{Plane, Vec3};
use crate::merge::{merge, MergeMethod, PlaneLabel, RefinedPlane};
use crate::sdf::{EdgeKey, VolumeCoord, VolumeGrid, VolumeMesh};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrameMetrics {
    pub frame_index: usize,
    pub timestamp: f64,
    /// Vertex RMSD against the previous frame's mesh, all volumes.
    pub rmsd: Option<f64>,
    /// Same, restricted to volumes owned by a refined plane.
    pub plane_rmsd: Option<f64>,
    pub fusion_ms: f64,
    pub candidates_ms: f64,
    pub merging_ms: f64,
    pub refine_ms: f64,
    pub meshing_ms: f64,
    pub total_ms: f64,
    pub updated_volumes: usize,
    pub remeshed_volumes: usize,
    pub candidate_count: usize,
    pub plane_count: usize,
}

pub fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

/// Running sum of squared displacements over vertices present in both
/// snapshots, matched by volume and edge key.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RmsdAccumulator {
    pub sum_sq: f64,
    pub matched: usize,
}

impl RmsdAccumulator {
    pub fn add_pair(&mut self, prev: &VolumeMesh, curr: &VolumeMesh) {
        let (small, large) = if prev.vertices.len() <= curr.vertices.len() {
            (prev, curr)
        } else {
            (curr, prev)
        };
        let index: HashMap<EdgeKey, Vec3> = small.vertices.iter().map(|v| (v.key, v.position)).collect();
        for v in &large.vertices {
            if let Some(p) = index.get(&v.key) {
                self.sum_sq += (v.position - p).norm_squared();
                self.matched += 1;
            }
        }
    }

    /// An unchanged mesh: every vertex matches with zero displacement.
    pub fn add_unchanged(&mut self, mesh: &VolumeMesh) {
        self.matched += mesh.vertices.len();
    }

    pub fn value(&self) -> Option<f64> {
        (self.matched > 0).then(|| (self.sum_sq / self.matched as f64).sqrt())
    }
}

/// Root mean square vertex displacement between two mesh snapshots. `None`
/// when they share no vertex.
pub fn mesh_rmsd(prev: &BTreeMap<VolumeCoord, VolumeMesh>, curr: &BTreeMap<VolumeCoord, VolumeMesh>) -> Option<f64> {
    let mut acc = RmsdAccumulator::default();
    for (c, p) in prev {
        if let Some(q) = curr.get(c) {
            acc.add_pair(p, q);
        }
    }
    acc.value()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AreaReport {
    /// Area of triangles meshed from observed data.
    pub raw_area: f64,
    /// Area including triangles synthesized by filling.
    pub filled_area: f64,
}

impl AreaReport {
    pub fn improve_percent(&self) -> f64 {
        if self.raw_area > 0.0 {
            100.0 * (self.filled_area - self.raw_area) / self.raw_area
        } else {
            0.0
        }
    }

    pub fn add(&mut self, other: &AreaReport) {
        self.raw_area += other.raw_area;
        self.filled_area += other.filled_area;
    }
}

pub fn area_report<'a>(meshes: impl IntoIterator<Item = &'a VolumeMesh>) -> AreaReport {
    let mut r = AreaReport::default();
    for m in meshes {
        for t in 0..m.triangles.len() {
            let a = m.triangle_area(t);
            r.filled_area += a;
            if !m.triangle_filled[t] {
                r.raw_area += a;
            }
        }
    }
    r
}

/// Area per plane id; a triangle counts for a plane when all three vertices
/// carry that id. Key `None` collects the rest.
pub fn area_by_plane<'a>(meshes: impl IntoIterator<Item = &'a VolumeMesh>) -> BTreeMap<Option<u32>, AreaReport> {
    let mut out: BTreeMap<Option<u32>, AreaReport> = BTreeMap::new();
    for m in meshes {
        for (t, tri) in m.triangles.iter().enumerate() {
            let ids = tri.map(|v| m.vertex_plane_id[v as usize]);
            let key = if ids[0].is_some() && ids[0] == ids[1] && ids[1] == ids[2] {
                ids[0]
            } else {
                None
            };
            let r = out.entry(key).or_default();
            let a = m.triangle_area(t);
            r.filled_area += a;
            if !m.triangle_filled[t] {
                r.raw_area += a;
            }
        }
    }
    out
}

/// Mean per-frame stage times in milliseconds.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StageTimes {
    pub frames: usize,
    pub fusion_ms: f64,
    pub candidates_ms: f64,
    pub merging_ms: f64,
    pub refine_ms: f64,
    pub meshing_ms: f64,
    pub total_ms: f64,
}

pub const STAGES: [&str; 6] = ["fusion", "candidates", "merging", "refine", "meshing", "total"];

impl StageTimes {
    pub fn values(&self) -> [f64; 6] {
        [
            self.fusion_ms,
            self.candidates_ms,
            self.merging_ms,
            self.refine_ms,
            self.meshing_ms,
            self.total_ms,
        ]
    }
}

/// Averages stage times, dropping the first (warm-up) frame when more than
/// one is available.
pub fn mean_stage_times(metrics: &[FrameMetrics]) -> StageTimes {
    let m = if metrics.len() > 1 { &metrics[1..] } else { metrics };
    let n = m.len().max(1) as f64;
    let avg = |f: fn(&FrameMetrics) -> f64| m.iter().map(f).sum::<f64>() / n;
    StageTimes {
        frames: m.len(),
        fusion_ms: avg(|x| x.fusion_ms),
        candidates_ms: avg(|x| x.candidates_ms),
        merging_ms: avg(|x| x.merging_ms),
        refine_ms: avg(|x| x.refine_ms),
        meshing_ms: avg(|x| x.meshing_ms),
        total_ms: avg(|x| x.total_ms),
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimingTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// One row per run and stage. With exactly two runs a speedup column
/// (first / second) is added.
pub fn timing_table(runs: &[(String, StageTimes)]) -> TimingTable {
    let mut header = vec!["stage".to_string()];
    header.extend(runs.iter().map(|(name, _)| format!("{name}_ms")));
    let two = runs.len() == 2;
    if two {
        header.push("speedup".into());
    }
    let mut rows = Vec::new();
    for (s, stage) in STAGES.iter().enumerate() {
        let mut row = vec![stage.to_string()];
        row.extend(runs.iter().map(|(_, t)| format!("{:.3}", t.values()[s])));
        if two {
            let (a, b) = (runs[0].1.values()[s], runs[1].1.values()[s]);
            row.push(if b > 0.0 { format!("{:.2}", a / b) } else { "-".into() });
        }
        rows.push(row);
    }
    TimingTable { header, rows }
}

impl TimingTable {
    /// Column-aligned plain text.
    pub fn to_text(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(String::len).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
                if i == 0 {
                    s.push_str(&format!("{c:<w$}"));
                } else {
                    s.push_str(&format!("  {c:>w$}"));
                }
            }
            s.push('\n');
            s
        };
        let mut out = line(&self.header);
        for r in &self.rows {
            out.push_str(&line(r));
        }
        out
    }
}

/// Both candidate generators and both mergers run on one grid snapshot.
#[derive(Clone, Debug, Default)]
pub struct MethodBenchmark {
    pub volumes: usize,
    pub ransac_time: Duration,
    pub sdf_time: Duration,
    pub ransac_candidates: usize,
    pub sdf_candidates: usize,
    pub merge_ransac_time: Duration,
    pub merge_growing_time: Duration,
    pub merge_ransac_planes: usize,
    pub merge_growing_planes: usize,
}

impl MethodBenchmark {
    pub fn candidate_speedup(&self) -> f64 {
        self.ransac_time.as_secs_f64() / self.sdf_time.as_secs_f64().max(1e-12)
    }
}

/// Fits every volume of `grid` with both methods (summed per-volume times)
/// and merges the SDF candidates both ways. Timings are best of `repeats`.
pub fn benchmark_methods(
    grid: &VolumeGrid,
    fit: &FitConfig,
    merge_cfg: &MergeConfig,
    seed: u64,
    repeats: usize,
) -> MethodBenchmark {
    let all: BTreeSet<VolumeCoord> = grid.sorted_coords().into_iter().collect();
    let mut out = MethodBenchmark {
        volumes: all.len(),
        ..Default::default()
    };
    let grid_cfg: &VoxelGridConfig = &grid.config;
    let mut sdf_cands = BTreeMap::new();
    for r in 0..repeats.max(1) {
        for method in [FitMethod::RansacMesh, FitMethod::SdfIrls] {
            let mut g = grid.clone();
            let run = generate_candidates(&mut g, &all, method, fit, seed);
            let t = run.total_time();
            let n = run.candidates.len();
            let (best, count) = match method {
                FitMethod::RansacMesh => (&mut out.ransac_time, &mut out.ransac_candidates),
                FitMethod::SdfIrls => (&mut out.sdf_time, &mut out.sdf_candidates),
            };
            if r == 0 || t < *best {
                *best = t;
            }
            *count = n;
            if method == FitMethod::SdfIrls {
                sdf_cands = run.candidates;
            }
        }
    }
    for r in 0..repeats.max(1) {
        for method in [MergeMethod::Ransac, MergeMethod::RegionGrowing] {
            let t0 = Instant::now();
            let planes = merge(method, &sdf_cands, grid_cfg, merge_cfg, seed);
            let t = t0.elapsed();
            let (best, count) = match method {
                MergeMethod::Ransac => (&mut out.merge_ransac_time, &mut out.merge_ransac_planes),
                MergeMethod::RegionGrowing => (&mut out.merge_growing_time, &mut out.merge_growing_planes),
            };
            if r == 0 || t < *best {
                *best = t;
            }
            *count = planes.len();
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlaneMatch {
    pub detected_id: u32,
    pub truth_index: usize,
    pub angle_deg: f64,
    pub offset: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DetectionAccuracy {
    pub matches: Vec<PlaneMatch>,
    pub truth_total: usize,
    pub detected_total: usize,
}

impl DetectionAccuracy {
    pub fn matched(&self) -> usize {
        self.matches.len()
    }

    /// Matched fraction of detections; `None` without detections.
    pub fn precision(&self) -> Option<f64> {
        (self.detected_total > 0).then(|| self.matched() as f64 / self.detected_total as f64)
    }

    pub fn recall(&self) -> Option<f64> {
        (self.truth_total > 0).then(|| self.matched() as f64 / self.truth_total as f64)
    }
}

/// Angle and offset between two planes after flipping `a` to face `b`.
pub fn plane_difference(a: &Plane, b: &Plane) -> (f64, f64) {
    let a = if a.n.dot(&b.n) < 0.0 { a.flipped() } else { *a };
    (a.angle_to(b).to_degrees(), (a.d - b.d).abs())
}

/// Greedy one-to-one matching within `angle_deg` and `dist`. Detections are
/// visited by decreasing support, each taking the closest free truth plane.
/// `label` restricts both sides to one label.
pub fn match_planes(
    detected: &[RefinedPlane],
    truth: &[(Plane, PlaneLabel)],
    label: Option<PlaneLabel>,
    angle_deg: f64,
    dist: f64,
) -> DetectionAccuracy {
    let det: Vec<&RefinedPlane> = {
        let mut v: Vec<_> = detected
            .iter()
            .filter(|p| label.is_none_or(|l| p.label == l))
            .collect();
        v.sort_by(|a, b| b.support.cmp(&a.support).then(a.id.cmp(&b.id)));
        v
    };
    let gt: Vec<usize> = (0..truth.len())
        .filter(|&i| label.is_none_or(|l| truth[i].1 == l))
        .collect();
    let mut taken = vec![false; truth.len()];
    let mut matches = Vec::new();
    for p in &det {
        let best = gt
            .iter()
            .filter(|&&i| !taken[i])
            .map(|&i| (i, plane_difference(&p.plane, &truth[i].0)))
            .filter(|(_, (a, o))| *a <= angle_deg && *o <= dist)
            .min_by(|x, y| (x.1 .0 + x.1 .1).total_cmp(&(y.1 .0 + y.1 .1)));
        if let Some((i, (a, o))) = best {
            taken[i] = true;
            matches.push(PlaneMatch {
                detected_id: p.id,
                truth_index: i,
                angle_deg: a,
                offset: o,
            });
        }
    }
    DetectionAccuracy {
        matches,
        truth_total: gt.len(),
        detected_total: det.len(),
    }
}
