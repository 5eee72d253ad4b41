use std::collections::{BTreeMap, BTreeSet};

use planefuse::config::{FitConfig, LabelRules, MergeConfig, VoxelGridConfig};
use planefuse::detect::{irls_on_samples, FitMethod, PlaneCandidate};
use planefuse::eval::mesh_rmsd;
use planefuse::geometry::{Plane, Rect2, RigidTransform, Vec3};
use planefuse::merge::{merge, MergeMethod, PlaneLabel, RefinedPlane};
use planefuse::refine::{corrected_sdf, CorrectionCase, CorrectionContext, CorrectionMode};
use planefuse::sdf::{integrate, DepthFrame, EdgeKey, Intrinsics, MeshVertex, VolumeCoord, VolumeGrid, VolumeMesh};
use planefuse::segment::label_plane;
use planefuse::synth::{render_depth, scene_by_name};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("non-degenerate", |(x, y, z)| x * x + y * y + z * z > 0.05)
        .prop_map(|(x, y, z)| Vec3::new(x, y, z).normalize())
}

fn plane() -> impl Strategy<Value = Plane> {
    (unit(), -2.0..2.0f64).prop_map(|(n, d)| Plane { n, d })
}

fn point() -> impl Strategy<Value = Vec3> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn ctx(planes: Vec<Plane>, mode: CorrectionMode) -> CorrectionContext {
    CorrectionContext {
        planes,
        tau: 0.1,
        mode,
        strict_product_band: true,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fused_values_stay_within_truncation(seed in any::<u64>(), eye in point(), target in point()) {
        prop_assume!((eye - target).norm() > 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut grid = VolumeGrid::new(VoxelGridConfig::default());
        let (w, h) = (DepthFrame::WIDTH, DepthFrame::HEIGHT);
        for _ in 0..2 {
            let depth = (0..w * h)
                .map(|_| if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..7.0) })
                .collect();
            let frame = DepthFrame {
                width: w,
                height: h,
                depth,
                intrinsics: Intrinsics::default(),
                pose: RigidTransform::look_at(eye, target, Vec3::z()),
                gravity_up: Vec3::z(),
                timestamp: 0.0,
            };
            integrate(&mut grid, &frame).unwrap();
        }
        let tau = grid.config.truncation;
        for v in grid.volumes() {
            for x in &v.voxels {
                prop_assert!(x.sdf.abs() <= tau, "{}", x.sdf);
                prop_assert!(x.weight >= 0.0 && x.weight <= 2.0);
            }
        }
    }
}

proptest! {
    #[test]
    fn irls_plane_is_unit_and_residual_is_reproducible(p in plane(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<(Vec3, f64)> = (0..400)
            .map(|_| {
                let x = Vec3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
                (x, p.signed_distance(&x) + rng.random_range(-0.01..0.01))
            })
            .collect();
        let r = irls_on_samples(&samples, &FitConfig::default());
        let fit = r.plane.expect("plane fits");
        prop_assert!((fit.n.norm() - 1.0).abs() < 1e-9);
        let mean = samples.iter().map(|(x, f)| (fit.signed_distance(x) - f).abs()).sum::<f64>() / samples.len() as f64;
        prop_assert!((mean - r.mean_abs_residual).abs() < 1e-12);
    }

    #[test]
    fn correction_is_idempotent(ps in prop::collection::vec(plane(), 1..4), x in point(), phi in -0.1..0.1f64, fill in any::<bool>()) {
        let mode = if fill { CorrectionMode::DenoiseAndFill } else { CorrectionMode::DenoiseOnly };
        let c = ctx(ps, mode);
        let once = corrected_sdf(&x, phi, true, &c);
        let v = once.value.unwrap();
        let twice = corrected_sdf(&x, v, true, &c);
        prop_assert_eq!(twice.value, Some(v));
    }

    #[test]
    fn single_plane_denoise_is_exact(p in plane(), y in point(), off in -0.05..0.05f64, noise in -0.049..0.049f64) {
        let x = y - p.n * (p.signed_distance(&y) - off);
        let s = p.signed_distance(&x);
        let phi = s + noise;
        let out = corrected_sdf(&x, phi, true, &ctx(vec![p], CorrectionMode::DenoiseOnly));
        prop_assert_eq!(out.case, CorrectionCase::Closest);
        prop_assert_eq!(out.value, Some(s));
    }

    #[test]
    fn fill_never_contradicts_observation(ps in prop::collection::vec(plane(), 1..4), x in point(), phi in -0.1..0.1f64) {
        let c = ctx(ps.clone(), CorrectionMode::DenoiseAndFill);
        let closest = ps
            .iter()
            .map(|p| p.signed_distance(&x))
            .fold(f64::INFINITY, |a, b| if b.abs() < a.abs() { b } else { a });
        let out = corrected_sdf(&x, phi, true, &c);
        if (closest - phi).abs() >= c.tau && out.case != CorrectionCase::Intersection {
            prop_assert_eq!(out.value, Some(phi));
        }
        // filling adds nothing over denoising for observed voxels
        let plain = corrected_sdf(&x, phi, true, &ctx(ps, CorrectionMode::DenoiseOnly));
        prop_assert_eq!(out, plain);
    }

    #[test]
    fn merged_planes_partition_candidates(
        specs in prop::collection::btree_map((0..6i32, 0..6i32, 0..2i32), (0..3usize, -0.02..0.02f64), 1..30),
        seed in any::<u64>(),
    ) {
        let grid = VoxelGridConfig::default();
        let normals = [Vec3::z(), Vec3::x(), Vec3::new(1.0, 1.0, 0.0).normalize()];
        let candidates: BTreeMap<VolumeCoord, PlaneCandidate> = specs
            .iter()
            .map(|(&(x, y, z), &(k, dd))| {
                let c = VolumeCoord::new(x, y, z);
                let cand = PlaneCandidate {
                    plane: Plane { n: normals[k], d: -0.24 + dd },
                    volume_coord: c,
                    support: 100,
                    mean_abs_residual: 0.0,
                    method: FitMethod::SdfIrls,
                    iterations: 1,
                };
                (c, cand)
            })
            .collect();
        for method in [MergeMethod::Ransac, MergeMethod::RegionGrowing] {
            let planes = merge(method, &candidates, &grid, &MergeConfig::default(), seed);
            let mut seen = BTreeSet::new();
            for p in &planes {
                for c in &p.member_coords {
                    prop_assert!(candidates.contains_key(c));
                    prop_assert!(seen.insert(*c), "{c} in two planes");
                }
            }
        }
    }

    #[test]
    fn labels_ignore_rotation_about_up(n in unit(), support in 0..10usize, yaw in 0.0..std::f64::consts::TAU) {
        let rules = LabelRules::default();
        let make = |n: Vec3| RefinedPlane {
            id: 0,
            plane: Plane { n, d: 0.0 },
            support,
            member_coords: BTreeSet::new(),
            label: PlaneLabel::Other,
            extent: Rect2::empty(),
        };
        let (s, c) = yaw.sin_cos();
        let rotated = Vec3::new(c * n.x - s * n.y, s * n.x + c * n.y, n.z);
        prop_assert_eq!(label_plane(&make(n), &rules), label_plane(&make(rotated), &rules));
    }

    #[test]
    fn rmsd_is_symmetric(offsets in prop::collection::vec((-0.02..0.02f64, any::<bool>()), 1..40)) {
        let mut a = VolumeMesh::default();
        let mut b = VolumeMesh::default();
        for (i, &(dz, shared)) in offsets.iter().enumerate() {
            let key = EdgeKey { base: [i as i64, 0, 0], axis: 2 };
            let p = Vec3::new(i as f64 * 0.03, 0.0, 0.0);
            a.vertices.push(MeshVertex { key, position: p });
            let key_b = if shared { key } else { EdgeKey { base: [i as i64, 1, 0], axis: 2 } };
            b.vertices.push(MeshVertex { key: key_b, position: p + Vec3::new(0.0, 0.0, dz) });
        }
        let c = VolumeCoord::new(0, 0, 0);
        let ma = BTreeMap::from([(c, a)]);
        let mb = BTreeMap::from([(c, b)]);
        prop_assert_eq!(mesh_rmsd(&ma, &mb), mesh_rmsd(&mb, &ma));
    }
}

#[test]
fn rendering_is_deterministic_per_seed() {
    let mut s = scene_by_name("room_cluttered").unwrap();
    s.noise_sigma = 0.01;
    let pose = s.trajectory[40].pose();
    let a = render_depth(&s, &pose, &s.intrinsics, 7);
    let b = render_depth(&s, &pose, &s.intrinsics, 7);
    let c = render_depth(&s, &pose, &s.intrinsics, 8);
    assert_eq!(a.depth, b.depth);
    assert_ne!(a.depth, c.depth);
}
