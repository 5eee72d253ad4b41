//! Acceptance suite. Runs every criterion on the synthetic catalog and prints
//! one PASS/FAIL line per criterion; exits non-zero if any fails.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::time::Instant;

use planefuse::config::{FitConfig, VoxelGridConfig};
use planefuse::detect::{band_samples, fit_sdf_irls, fit_sdf_irls_report, irls_on_samples, fit_volume, generate_candidates, stored_candidates, FitMethod};
use planefuse::eval::{benchmark_methods, match_planes, plane_difference};
use planefuse::geometry::{Plane, Rect2, Vec3};
use planefuse::merge::{merge, MergeMethod, PlaneLabel, RefinedPlane};
use planefuse::pipeline::{Reconstructor, RunConfig, TIMING_COLUMNS};
use planefuse::refine::{corrected_sdf, ActivePlane, CorrectionCase, CorrectionContext, CorrectionMode, VolumeCorrector};
use planefuse::sdf::{VolumeCoord, VolumeGrid};
use planefuse::synth::{scene_by_name, SceneSpec, SCENE_NAMES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Pipeline runs shared between criteria, keyed by scene and variant.
#[derive(Default)]
struct Runs {
    done: HashMap<String, (SceneSpec, Reconstructor)>,
}

impl Runs {
    fn get(&mut self, key: &str, scene: &str, tweak: impl FnOnce(&mut SceneSpec, &mut RunConfig)) -> &(SceneSpec, Reconstructor) {
        if !self.done.contains_key(key) {
            let mut spec = scene_by_name(scene).expect("catalog scene");
            let mut cfg = RunConfig::default();
            tweak(&mut spec, &mut cfg);
            let frames = spec.render_sequence();
            let mut r = Reconstructor::new(cfg).expect("valid config");
            r.run(&frames).expect("pipeline run");
            self.done.insert(key.to_string(), (spec, r));
        }
        &self.done[key]
    }

    fn default_run(&mut self, scene: &str) -> &(SceneSpec, Reconstructor) {
        self.get(scene, scene, |_, _| {})
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn planar_volume(plane: &Plane) -> (VolumeGrid, VolumeCoord) {
    let mut grid = VolumeGrid::new(VoxelGridConfig::default());
    let c = VolumeCoord::new(0, 0, 0);
    grid.fill_volume_with(c, |x| Some(plane.signed_distance(x)));
    (grid, c)
}

/// Random plane through a point near the center of volume (0,0,0).
fn plane_near_center(rng: &mut ChaCha8Rng, grid: &VoxelGridConfig, spread: f64) -> Plane {
    let e = grid.volume_edge();
    let n = random_unit(rng);
    let p = Vec3::new(0.5 * e, 0.5 * e, 0.5 * e) + random_unit(rng) * rng.random_range(0.0..spread);
    Plane::from_point_normal(&p, &n).expect("unit normal")
}

fn criterion_1() -> Outcome {
    let grid_cfg = VoxelGridConfig::default();
    let cfg = FitConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut planes = vec![
        Plane::new(Vec3::z(), -0.24).unwrap(),
        Plane::new(Vec3::x(), -0.2).unwrap(),
    ];
    for _ in 0..8 {
        planes.push(plane_near_center(&mut rng, &grid_cfg, 0.05));
    }
    let (mut worst_angle, mut worst_d, mut worst_iters, mut worst_ms) = (0.0f64, 0.0f64, 0usize, 0.0f64);
    for truth in &planes {
        let (grid, c) = planar_volume(truth);
        let vol = grid.get(&c).unwrap();
        let report = fit_sdf_irls_report(vol, &cfg, &grid.config);
        let Some(p) = report.plane else {
            return outcome(false, format!("no plane for {truth:?}"));
        };
        worst_angle = worst_angle.max(p.angle_to(truth));
        worst_d = worst_d.max((p.d - truth.d).abs());
        worst_iters = worst_iters.max(report.iterations);
        let reps = 50;
        let t0 = Instant::now();
        for _ in 0..reps {
            std::hint::black_box(fit_sdf_irls(vol, &cfg, &grid.config));
        }
        worst_ms = worst_ms.max(t0.elapsed().as_secs_f64() * 1000.0 / reps as f64);
    }
    let pass = worst_angle <= 1e-6 && worst_d <= 1e-9 && worst_iters <= 2 && worst_ms < 1.0;
    outcome(
        pass,
        format!(
            "{} planes: max angle {worst_angle:.2e} rad, max |dd| {worst_d:.2e} m, max {worst_iters} iterations, {worst_ms:.3} ms/volume",
            planes.len()
        ),
    )
}

/// Normal errors in degrees of the Huber and the plain least-squares fits of
/// `samples` against `truth`. A rejected fit counts as infinitely wrong.
fn huber_and_ls_error(samples: &[(Vec3, f64)], truth: &Plane) -> (f64, f64) {
    let huber = FitConfig::default();
    let ls = FitConfig {
        huber_delta: f64::INFINITY,
        ..FitConfig::default()
    };
    let err = |cfg: &FitConfig| {
        irls_on_samples(samples, cfg)
            .plane
            .map_or(f64::INFINITY, |p| p.angle_to(truth).to_degrees())
    };
    (err(&huber), err(&ls))
}

fn criterion_2() -> Outcome {
    let grid_cfg = VoxelGridConfig::default();
    let offset = 5.0 * grid_cfg.truncation;
    let trials = 100;
    let (mut under, mut wins) = (0, 0);
    let (mut worst, mut mean_h, mut mean_l) = (0.0f64, 0.0, 0.0);
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + t);
        let a = plane_near_center(&mut rng, &grid_cfg, 0.08);
        let (grid, c) = planar_volume(&a);
        let mut samples = band_samples(grid.get(&c).unwrap(), &FitConfig::default(), &grid.config);
        let n = samples.len();
        for k in rand::seq::index::sample(&mut rng, n, n / 5) {
            samples[k].1 += offset;
        }
        let (eh, el) = huber_and_ls_error(&samples, &a);
        worst = worst.max(eh);
        mean_h += eh / trials as f64;
        mean_l += el / trials as f64;
        under += (eh < 1.0) as usize;
        wins += (eh < el) as usize;
    }
    outcome(
        under == trials as usize && wins == trials as usize,
        format!(
            "{trials} trials, 20% of fit voxels offset by +5 tau: Huber < 1 deg in {under}, beats least squares in {wins}; worst {worst:.3} deg, mean {mean_h:.3} vs {mean_l:.3} deg"
        ),
    )
}

fn criterion_3() -> Outcome {
    let grid_cfg = VoxelGridConfig::default();
    let cfg = FitConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let trials = 30;
    let (mut worst_a, mut worst_d) = (0.0f64, 0.0f64);
    for t in 0..trials {
        let truth = plane_near_center(&mut rng, &grid_cfg, 0.05);
        let (grid, c) = planar_volume(&truth);
        let sdf = fit_volume(&grid, &c, FitMethod::SdfIrls, &cfg, t);
        let ransac = fit_volume(&grid, &c, FitMethod::RansacMesh, &cfg, t);
        let (Some(s), Some(r)) = (sdf, ransac) else {
            return outcome(false, format!("trial {t}: a method found no plane"));
        };
        let (a, d) = plane_difference(&s.plane, &r.plane);
        worst_a = worst_a.max(a);
        worst_d = worst_d.max(d);
    }
    outcome(
        worst_a <= 0.2 && worst_d <= 0.002,
        format!("{trials} planar volumes: worst {worst_a:.2e} deg / {:.2e} mm", worst_d * 1000.0),
    )
}

fn criterion_4(runs: &mut Runs) -> Outcome {
    let (_, r) = runs.default_run("room_cluttered");
    let t0 = Instant::now();
    let b = benchmark_methods(r.grid(), &r.config.fit, &r.config.merge, 4, 3);
    let secs = t0.elapsed().as_secs_f64();
    let speedup = b.candidate_speedup();
    outcome(
        b.volumes >= 200 && speedup >= 2.0,
        format!(
            "{} volumes: RANSAC {:.1} ms, SDF {:.1} ms, speedup {speedup:.2}x; candidates {} vs {}; benchmark {secs:.1} s",
            b.volumes,
            b.ransac_time.as_secs_f64() * 1000.0,
            b.sdf_time.as_secs_f64() * 1000.0,
            b.ransac_candidates,
            b.sdf_candidates
        ),
    )
}

fn partition(planes: &[RefinedPlane]) -> BTreeSet<BTreeSet<VolumeCoord>> {
    planes.iter().map(|p| p.member_coords.clone()).collect()
}

fn criterion_5(runs: &mut Runs) -> Outcome {
    let (spec, r) = runs.get("room_4walls/clean", "room_4walls", |s, _| s.noise_sigma = 0.0);
    let acc = match_planes(r.planes(), &spec.ground_truth(), None, 3.0, 0.05);
    let six = r.planes().len() == 6 && acc.matched() == 6;

    let cands = stored_candidates(r.grid());
    let seed = r.config.seed;
    let by_ransac = merge(MergeMethod::Ransac, &cands, &r.grid().config, &r.config.merge, seed);
    let by_growing = merge(MergeMethod::RegionGrowing, &cands, &r.grid().config, &r.config.merge, seed);
    let same = partition(&by_ransac) == partition(&by_growing);

    // two floor patches of the same plane with a two-volume gap
    let mut grid = VolumeGrid::new(VoxelGridConfig::default());
    let floor = Plane::new(Vec3::z(), -0.24).unwrap();
    let mut coords = BTreeSet::new();
    for x in [0, 1, 2, 5, 6, 7] {
        for y in 0..2 {
            let c = VolumeCoord::new(x, y, 0);
            grid.fill_volume_with(c, |p| Some(floor.signed_distance(p)));
            coords.insert(c);
        }
    }
    generate_candidates(&mut grid, &coords, FitMethod::SdfIrls, &r.config.fit, 0);
    let patches = stored_candidates(&grid);
    let n_ransac = merge(MergeMethod::Ransac, &patches, &grid.config, &r.config.merge, 0).len();
    let n_growing = merge(MergeMethod::RegionGrowing, &patches, &grid.config, &r.config.merge, 0).len();

    outcome(
        six && same && n_ransac == 1 && n_growing == 2,
        format!(
            "room: {} planes, {} matched; partitions equal: {same}; disconnected patches: RANSAC {n_ransac}, growing {n_growing}",
            r.planes().len(),
            acc.matched()
        ),
    )
}

fn vertex_rms(r: &Reconstructor, truth: &Plane) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for m in r.meshes().values() {
        for v in &m.vertices {
            s += truth.signed_distance(&v.position).powi(2);
            n += 1;
        }
    }
    (s / n.max(1) as f64).sqrt()
}

fn criterion_6(runs: &mut Runs) -> Outcome {
    let truth = runs.default_run("flat_floor").0.ground_truth()[0].0;
    let gated = vertex_rms(&runs.default_run("flat_floor").1, &truth);
    let raw = vertex_rms(&runs.get("flat_floor/noprior", "flat_floor", |_, c| c.modes.planes = false).1, &truth);
    let ungated = {
        let (_, r) = runs.get("flat_floor/nogate", "flat_floor", |_, c| {
            c.gate.angle_deg = 0.0;
            c.gate.offset = 0.0;
        });
        vertex_rms(r, &truth)
    };
    outcome(
        ungated <= raw / 5.0 && ungated <= 1e-3,
        format!(
            "uncorrected {:.3} mm, corrected {:.3} mm (ratio {:.3}); with the jitter gate engaged {:.3} mm (ratio {:.3})",
            raw * 1e3,
            ungated * 1e3,
            ungated / raw,
            gated * 1e3,
            gated / raw
        ),
    )
}

fn criterion_7(runs: &mut Runs) -> Outcome {
    let prior: Vec<Option<f64>> = runs.default_run("flat_floor").1.metrics().iter().map(|m| m.plane_rmsd).collect();
    let no_prior: Vec<Option<f64>> = runs
        .get("flat_floor/noprior", "flat_floor", |_, c| c.modes.planes = false)
        .1
        .metrics()
        .iter()
        .map(|m| m.rmsd)
        .collect();
    let (mut best, mut cur) = (0usize, 0usize);
    for v in &prior {
        cur = if *v == Some(0.0) { cur + 1 } else { 0 };
        best = best.max(cur);
    }
    let later = &no_prior[1..];
    let positive = later.iter().filter(|v| v.is_some_and(|x| x > 0.0)).count();
    let min_np = later.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    outcome(
        best >= 50 && positive == later.len(),
        format!(
            "with prior: {best} consecutive zero-RMSD frames of {}; without: {positive}/{} frames > 0 (min {:.1} um)",
            prior.len(),
            later.len(),
            min_np * 1e6
        ),
    )
}

/// Fraction of a hole rectangle covered by mesh triangles lying on its plane.
fn hole_coverage(spec: &SceneSpec, r: &Reconstructor, hole: usize, filled_only: bool) -> f64 {
    let h = &spec.holes[hole];
    let plane = spec.planes[h.plane].plane();
    let o = Vec3::from(h.origin);
    let (eu, ev) = (Vec3::from(h.edge_u), Vec3::from(h.edge_v));
    let uv = |p: &Vec3| ((p - o).dot(&eu) / eu.norm_squared(), (p - o).dot(&ev) / ev.norm_squared());
    const BINS: usize = 50;
    let bin = |x: f64| ((x * BINS as f64).floor().clamp(0.0, BINS as f64 - 1.0)) as usize;
    let mut grid: Vec<Vec<[(f64, f64); 3]>> = vec![Vec::new(); BINS * BINS];
    for m in r.meshes().values() {
        for t in 0..m.triangles.len() {
            if filled_only && !m.triangle_filled[t] {
                continue;
            }
            let corners = m.triangle_corners(t);
            if corners.iter().any(|p| plane.signed_distance(p).abs() > 0.02) {
                continue;
            }
            let tri = corners.map(|p| uv(&p));
            let (lo_u, hi_u) = tri.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.0), a.1.max(p.0)));
            let (lo_v, hi_v) = tri.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.1), a.1.max(p.1)));
            if hi_u < 0.0 || lo_u > 1.0 || hi_v < 0.0 || lo_v > 1.0 {
                continue;
            }
            for bu in bin(lo_u)..=bin(hi_u) {
                for bv in bin(lo_v)..=bin(hi_v) {
                    grid[bu * BINS + bv].push(tri);
                }
            }
        }
    }
    let inside = |p: (f64, f64), t: &[(f64, f64); 3]| {
        let cross = |a: (f64, f64), b: (f64, f64)| (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
        let s = [cross(t[0], t[1]), cross(t[1], t[2]), cross(t[2], t[0])];
        s.iter().all(|&x| x >= -1e-12) || s.iter().all(|&x| x <= 1e-12)
    };
    let samples = 120;
    let mut covered = 0;
    for i in 0..samples {
        for j in 0..samples {
            let p = ((i as f64 + 0.5) / samples as f64, (j as f64 + 0.5) / samples as f64);
            if grid[bin(p.0) * BINS + bin(p.1)].iter().any(|t| inside(p, t)) {
                covered += 1;
            }
        }
    }
    covered as f64 / (samples * samples) as f64
}

/// Observed voxels never take a value from hole filling: the fill mode agrees
/// with de-noising alone, and a value contradicting every nearby plane stays.
fn fill_violations(cases: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = 0.1;
    let mut violations = 0;
    for _ in 0..cases {
        let k = rng.random_range(1..=3);
        let active: Vec<ActivePlane> = (0..k)
            .map(|id| {
                let n = random_unit(&mut rng);
                let plane = Plane::new(n, rng.random_range(-0.15..0.15)).unwrap();
                let (u0, v0) = (rng.random_range(-0.5..0.0), rng.random_range(-0.5..0.0));
                let fill_extent = rng.random_bool(0.8).then(|| Rect2 {
                    min_u: u0,
                    min_v: v0,
                    max_u: u0 + rng.random_range(0.1..0.8),
                    max_v: v0 + rng.random_range(0.1..0.8),
                });
                ActivePlane {
                    id,
                    plane,
                    frame: plane.frame(),
                    fill_extent,
                }
            })
            .collect();
        let strict = rng.random_bool(0.5);
        let fill = VolumeCorrector::new(active.clone(), tau, CorrectionMode::DenoiseAndFill, strict);
        let denoise = VolumeCorrector::new(active, tau, CorrectionMode::DenoiseOnly, strict);
        let x = Vec3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
        let phi = rng.random_range(-tau..=tau);
        let a = fill.evaluate(&x, phi, true);
        let b = denoise.evaluate(&x, phi, true);
        let closest = fill
            .active
            .iter()
            .map(|p| p.plane.signed_distance(&x))
            .min_by(|p, q| p.abs().total_cmp(&q.abs()))
            .unwrap();
        let contradicts = (closest - phi).abs() >= tau;
        if a != b || (contradicts && a.case != CorrectionCase::Intersection && a.value != Some(phi)) {
            violations += 1;
        }
    }
    violations
}

fn criterion_8(runs: &mut Runs) -> Outcome {
    let (spec, r) = runs.get("room_with_holes/fill", "room_with_holes", |_, c| c.modes.fill = true);
    let area = r.area_report();
    let improve = area.improve_percent();
    let cover: Vec<f64> = (0..spec.holes.len()).map(|h| hole_coverage(spec, r, h, false)).collect();
    let cover_filled: Vec<f64> = (0..spec.holes.len()).map(|h| hole_coverage(spec, r, h, true)).collect();
    let min_cover = cover.iter().copied().fold(1.0, f64::min);
    let min_filled = cover_filled.iter().copied().fold(1.0, f64::min);
    let violations = fill_violations(20_000, 8);
    outcome(
        (15.0..=25.0).contains(&improve) && min_cover >= 0.95 && violations == 0,
        format!(
            "improve {improve:.2}% (raw {:.2} m2, filled {:.2} m2); min hole coverage {:.1}% ({:.1}% by fill-flagged triangles alone); {violations} fill violations in 20000 cases",
            area.raw_area,
            area.filled_area,
            min_cover * 100.0,
            min_filled * 100.0
        ),
    )
}

/// Branch-by-branch transcription of the correction, written independently
/// of the library. Returns the value and the case number that fired.
fn correction_oracle(x: &Vec3, phi: f64, observed: bool, planes: &[Plane], tau: f64, fill: bool, strict: bool) -> (Option<f64>, u8) {
    let keep = if observed { Some(phi) } else { None };
    if planes.is_empty() || !(observed || fill) {
        return (keep, 3);
    }
    let dist: Vec<f64> = planes.iter().map(|p| p.n.dot(x) + p.d).collect();
    let mut case1 = false;
    for i in 0..dist.len() {
        for j in i + 1..dist.len() {
            let (a, b) = (dist[i], dist[j]);
            let hit = if strict {
                -tau < a * b && a * b < 0.0
            } else {
                a * b < 0.0 && a.abs() < tau && b.abs() < tau
            };
            case1 = case1 || hit;
        }
    }
    if case1 {
        let d_min = dist.iter().copied().fold(f64::INFINITY, f64::min);
        return (Some(d_min.max(-tau).min(tau)), 1);
    }
    let mut d_closest = dist[0];
    for &d in &dist {
        if d.abs() < d_closest.abs() {
            d_closest = d;
        }
    }
    let near = d_closest.abs() < tau;
    let consistent = !observed || (d_closest - phi).abs() < tau;
    if near && consistent {
        return (Some(d_closest.max(-tau).min(tau)), 2);
    }
    (keep, 3)
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let tau = 0.1;
    let cases = 10_000;
    let (mut mismatches, mut fired) = (0, [0usize; 3]);
    for _ in 0..cases {
        let k = rng.random_range(1..=3);
        let planes: Vec<Plane> = (0..k)
            .map(|_| Plane::new(random_unit(&mut rng), rng.random_range(-0.1..0.1)).unwrap())
            .collect();
        let x = Vec3::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2));
        let phi = rng.random_range(-tau..=tau);
        let observed = rng.random_bool(0.8);
        let fill = rng.random_bool(0.5);
        let strict = rng.random_bool(0.5);
        let ctx = CorrectionContext {
            planes: planes.clone(),
            tau,
            mode: if fill {
                CorrectionMode::DenoiseAndFill
            } else {
                CorrectionMode::DenoiseOnly
            },
            strict_product_band: strict,
        };
        let got = corrected_sdf(&x, phi, observed, &ctx);
        let (value, case) = correction_oracle(&x, phi, observed, &planes, tau, fill, strict);
        let got_case = match got.case {
            CorrectionCase::Intersection => 1,
            CorrectionCase::Closest => 2,
            CorrectionCase::Original => 3,
        };
        let bits = |v: Option<f64>| v.map(f64::to_bits);
        if bits(got.value) != bits(value) || got_case != case {
            mismatches += 1;
        }
        fired[case as usize - 1] += 1;
    }
    outcome(
        mismatches == 0 && fired.iter().all(|&n| n > 0),
        format!(
            "{cases} fuzzed inputs, {mismatches} mismatches against the oracle; cases fired {}/{}/{}",
            fired[0], fired[1], fired[2]
        ),
    )
}

fn criterion_10(runs: &mut Runs) -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for name in SCENE_NAMES {
        let (spec, r) = runs.default_run(name);
        let gt = spec.ground_truth();
        let walls = match_planes(r.planes(), &gt, Some(PlaneLabel::Wall), 3.0, 0.05);
        let precision = walls.precision().unwrap_or(1.0);
        let recall = walls.recall().unwrap_or(1.0);
        let need = if name == "occluded_wall" { 0.75 } else { 1.0 };
        let any = match_planes(r.planes(), &gt, None, 3.0, 0.05);
        let label_of = |id: u32| r.planes().iter().find(|p| p.id == id).map(|p| p.label);
        let mislabeled = any
            .matches
            .iter()
            .filter(|m| label_of(m.detected_id) != Some(gt[m.truth_index].1))
            .count();
        let mut structural_ok = true;
        for l in [PlaneLabel::Floor, PlaneLabel::Ceiling] {
            let acc = match_planes(r.planes(), &gt, Some(l), 3.0, 0.05);
            structural_ok &= acc.matched() == acc.detected_total;
        }
        let floor_found = match_planes(r.planes(), &gt, Some(PlaneLabel::Floor), 3.0, 0.05).matched() >= 1;
        let ok = precision == 1.0 && recall >= need && mislabeled == 0 && structural_ok && floor_found;
        pass &= ok;
        lines.push(format!("{name} {}/{}", walls.matched(), walls.truth_total));
        if !ok {
            lines.push(format!(
                "({name}: precision {precision:.2}, recall {recall:.2}, mislabeled {mislabeled}, floor found {floor_found})"
            ));
        }
    }
    outcome(pass, format!("walls matched: {}", lines.join(", ")))
}

fn criterion_11(runs: &mut Runs) -> Outcome {
    let voxel = VoxelGridConfig::default().voxel_size;
    let touching = runs.default_run("two_touching_boxes").1.segment_objects().len();
    let (spec, r) = runs.default_run("room_cluttered");
    let segs = r.segment_objects();
    let mut worst = 0.0f64;
    let mut per_box = Vec::new();
    for b in &spec.boxes {
        let bb = b.aabb();
        let closest = segs
            .iter()
            .min_by(|x, y| (x.aabb.center() - bb.center()).norm().total_cmp(&(y.aabb.center() - bb.center()).norm()));
        let err = closest.map_or(f64::INFINITY, |s| {
            (s.aabb.min - bb.min).amax().max((s.aabb.max - bb.max).amax())
        });
        worst = worst.max(err);
        per_box.push(format!("{} {:.1} cm", b.name, err * 100.0));
    }
    let separated = segs.len() == spec.boxes.len() && worst <= voxel;
    outcome(
        separated && touching == 1,
        format!(
            "room_cluttered: {} segments for {} boxes, AABB error {} (limit {:.1} cm); two_touching_boxes: {touching} segment(s)",
            segs.len(),
            spec.boxes.len(),
            per_box.join(", "),
            voxel * 100.0
        ),
    )
}

/// File contents with the wall-clock columns of CSV outputs removed.
fn strip_timing(path: &Path) -> Vec<u8> {
    let bytes = fs::read(path).unwrap();
    if path.extension().is_none_or(|e| e != "csv") {
        return bytes;
    }
    let text = String::from_utf8(bytes).unwrap();
    let mut keep: Option<Vec<bool>> = None;
    let mut out = String::new();
    for line in text.lines() {
        if line.starts_with('#') {
            out.push_str(line);
            out.push('\n');
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let mask = keep.get_or_insert_with(|| cells.iter().map(|c| !TIMING_COLUMNS.contains(c)).collect());
        let kept: Vec<&str> = cells.iter().zip(mask.iter()).filter(|(_, k)| **k).map(|(c, _)| *c).collect();
        out.push_str(&kept.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

fn max_plane_change(a: &[RefinedPlane], b: &[RefinedPlane]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut worst = 0.0f64;
    for p in a {
        let q = b.iter().find(|q| q.member_coords == p.member_coords)?;
        worst = worst.max((p.plane.n - q.plane.n).amax()).max((p.plane.d - q.plane.d).abs());
    }
    Some(worst)
}

fn criterion_12(runs: &mut Runs) -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut dirs = Vec::new();
    for k in 0..2 {
        let spec = scene_by_name("room_with_holes").unwrap();
        let mut cfg = RunConfig {
            seed: 5,
            ..RunConfig::default()
        };
        cfg.modes.fill = true;
        cfg.modes.segment_objects = true;
        let mut r = Reconstructor::new(cfg).unwrap();
        r.run(&spec.render_sequence()).unwrap();
        let dir = tmp.path().join(format!("run{k}"));
        r.write_outputs(&dir).unwrap();
        dirs.push(dir);
    }
    let mut files: Vec<String> = fs::read_dir(&dirs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    files.sort();
    let differing: Vec<&String> = files
        .iter()
        .filter(|f| {
            let b = dirs[1].join(f.as_str());
            !b.exists() || strip_timing(&dirs[0].join(f.as_str())) != strip_timing(&b)
        })
        .collect();
    let identical = differing.is_empty() && fs::read_dir(&dirs[1]).unwrap().count() == files.len();

    // candidates regenerated from the post-correction grid, then re-merged
    let (_, r) = runs.default_run("room_cluttered");
    let last_seed = r.config.seed.wrapping_add(r.metrics().len() as u64 - 1);
    let mut grid = r.grid().clone();
    let all: BTreeSet<VolumeCoord> = grid.sorted_coords().into_iter().collect();
    generate_candidates(&mut grid, &all, r.config.candidate_method, &r.config.fit, last_seed);
    let again = merge(r.config.merge_method, &stored_candidates(&grid), &grid.config, &r.config.merge, last_seed);
    let change = max_plane_change(r.planes(), &again);

    // for reference: fitting the corrected shadow field itself
    let mut shadow = r.corrected_grid();
    let all: BTreeSet<VolumeCoord> = shadow.sorted_coords().into_iter().collect();
    generate_candidates(&mut shadow, &all, r.config.candidate_method, &r.config.fit, last_seed);
    let shadow_planes = merge(r.config.merge_method, &stored_candidates(&shadow), &shadow.config, &r.config.merge, last_seed);
    let shadow_change: f64 = r
        .planes()
        .iter()
        .map(|p| {
            shadow_planes
                .iter()
                .map(|q| (p.plane.n - q.plane.n).amax().max((p.plane.d - q.plane.d).abs()))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);

    outcome(
        identical && change.is_some_and(|c| c <= 1e-6),
        format!(
            "{} output files compared, differing: {:?}; re-merge max coefficient change {}; refit of the corrected field itself moves planes by up to {shadow_change:.1e}",
            files.len(),
            differing,
            change.map_or("partition changed".to_string(), |c| format!("{c:.1e}"))
        ),
    )
}

fn main() {
    let start = Instant::now();
    let mut runs = Runs::default();
    let names = [
        "exact plane recovery",
        "Huber robustness",
        "method agreement",
        "SDF fitting speedup",
        "merging correctness",
        "de-noising",
        "zero jitter",
        "hole filling",
        "correction case oracle",
        "semantic labels",
        "object segmentation",
        "determinism and idempotence",
    ];
    // e.g. ACCEPTANCE_ONLY=2,11 runs a subset
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = 0;
    let mut ran = 0;
    for (i, name) in names.iter().enumerate() {
        if only.as_ref().is_some_and(|o| !o.contains(&(i + 1))) {
            continue;
        }
        ran += 1;
        let t0 = Instant::now();
        let o = match i + 1 {
            1 => criterion_1(),
            2 => criterion_2(),
            3 => criterion_3(),
            4 => criterion_4(&mut runs),
            5 => criterion_5(&mut runs),
            6 => criterion_6(&mut runs),
            7 => criterion_7(&mut runs),
            8 => criterion_8(&mut runs),
            9 => criterion_9(),
            10 => criterion_10(&mut runs),
            11 => criterion_11(&mut runs),
            _ => criterion_12(&mut runs),
        };
        failed += (!o.pass) as usize;
        println!(
            "criterion {:>2} {:<28} {} ({:.1} s) {}",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1} s",
        ran - failed,
        ran,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
