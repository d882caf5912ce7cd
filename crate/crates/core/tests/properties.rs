use std::sync::OnceLock;

use bayes_atr::classifier::{
    ClassifierModel, ModelKind, Network, Observation, Standardizer, P_MIN,
};
use bayes_atr::fusion::{
    fuse_max, fuse_obf, fuse_obf_log, fuse_soft, recursive_posteriors, FusionKind, FusionRule,
};
use bayes_atr::kinematics::{aspect_angles, step_pose, KinematicsConfig, Pose, RadarArray};
use bayes_atr::noise::{sample_colored_covariance, scale_to_snr, signature_power};
use bayes_atr::seed::rng_from_seed;
use bayes_atr::signature::{fold_azimuth, synth_library, Axis, GridLibrary, RcsGrid, SynthParams};
use bayes_atr::ClassProbVector;
use nalgebra::Vector3;
use proptest::prelude::*;

fn library() -> &'static GridLibrary {
    static LIB: OnceLock<GridLibrary> = OnceLock::new();
    LIB.get_or_init(|| synth_library(11, 3, &SynthParams::default()).unwrap())
}

fn assert_valid(p: &ClassProbVector, k: usize) {
    assert_eq!(p.len(), k);
    let sum: f64 = p.as_slice().iter().sum();
    assert!((sum - 1.0).abs() <= 1e-9, "sum {sum}");
    assert!(
        p.as_slice().iter().all(|v| (0.0..=1.0).contains(v)),
        "{p:?}"
    );
}

fn prob_vec(k: usize) -> impl Strategy<Value = ClassProbVector> {
    // mix ordinary weights with values at the classifier floor
    prop::collection::vec(prop_oneof![3 => 1e-3..1.0f64, 1 => Just(P_MIN)], k)
        .prop_map(|w| ClassProbVector::from_weights(&w).unwrap())
}

fn per_radar() -> impl Strategy<Value = Vec<ClassProbVector>> {
    (2usize..8, 1usize..7).prop_flat_map(|(k, j)| prop::collection::vec(prob_vec(k), j))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn every_rule_returns_a_probability_vector(ps in per_radar(), seed in any::<u64>(), eps in 1e-4..0.999f64) {
        let k = ps[0].len();
        let mut rng = rng_from_seed(seed);
        for kind in FusionKind::ALL {
            let rule = FusionRule::new(kind).with_epsilon(eps);
            assert_valid(&rule.fuse(&ps, &mut rng).unwrap(), k);
        }
    }

    #[test]
    fn symmetric_rules_ignore_radar_order(ps in per_radar(), rot in 0usize..7) {
        let k = ps[0].len();
        let mut shuffled = ps.clone();
        shuffled.rotate_left(rot % ps.len());
        shuffled.reverse();
        let uniform = ClassProbVector::uniform(k);
        let pairs = [
            (fuse_obf(&ps, &uniform).unwrap(), fuse_obf(&shuffled, &uniform).unwrap()),
            (fuse_soft(&ps).unwrap(), fuse_soft(&shuffled).unwrap()),
            (fuse_max(&ps).unwrap(), fuse_max(&shuffled).unwrap()),
        ];
        for (a, b) in pairs {
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn obf_ignores_per_radar_log_offsets(ps in per_radar(), offsets in prop::collection::vec(-50.0..50.0f64, 7)) {
        let k = ps[0].len();
        let logs: Vec<Vec<f64>> = ps.iter().map(|p| p.as_slice().iter().map(|v| v.ln()).collect()).collect();
        let shifted: Vec<Vec<f64>> = logs.iter().zip(&offsets).map(|(l, c)| l.iter().map(|v| v + c).collect()).collect();
        let prior = vec![-(k as f64).ln(); k];
        let a = fuse_obf_log(&logs, &prior).unwrap();
        let b = fuse_obf_log(&shifted, &prior).unwrap();
        prop_assert_eq!(a.argmax(), b.argmax());
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn recursion_equals_one_shot_product(k in 2usize..8, steps in 1usize..100, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let seq: Vec<Vec<ClassProbVector>> = (0..steps)
            .map(|_| {
                let w: Vec<f64> = (0..k).map(|_| rand::Rng::random_range(&mut rng, 1e-6..1.0)).collect();
                vec![ClassProbVector::from_weights(&w).unwrap()]
            })
            .collect();
        let post = recursive_posteriors(&seq, &FusionRule::new(FusionKind::Soft), &mut rng).unwrap();
        let total: Vec<f64> = (0..k).map(|c| seq.iter().map(|s| s[0].as_slice()[c].ln()).sum()).collect();
        let max = total.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + total.iter().map(|t| (t - max).exp()).sum::<f64>().ln();
        let last = post.last().unwrap();
        prop_assert_eq!(last.steps(), steps);
        for (l, t) in last.log_posterior().iter().zip(&total) {
            prop_assert!((l - (t - lse)).abs() < 1e-9);
        }
    }

    #[test]
    fn folded_azimuth_stays_in_half_circle(phi in -1e4..1e4f64) {
        let f = fold_azimuth(phi);
        prop_assert!((0.0..=180.0).contains(&f));
        let g = fold_azimuth(f);
        prop_assert_eq!(f, g);
    }

    #[test]
    fn lookup_respects_the_symmetry_fold(phi in 0.0..180.0f64, el in -100.0..100.0f64, turns in -3i32..3, f in 0usize..15) {
        let g = library().grid(1).unwrap();
        let base = g.lookup(f, phi, el).unwrap();
        let across = g.lookup(f, phi + 180.0 + 360.0 * turns as f64, el).unwrap();
        prop_assert!((base - across).abs() < 1e-9, "{base} vs {across}");
        prop_assert_eq!(base, g.lookup(f, fold_azimuth(phi), el).unwrap());
    }

    #[test]
    fn nodes_are_reproduced_exactly(c in 0usize..3, f in 0usize..15, ia in 0usize..181, ie in 0usize..191) {
        let g = library().grid(c).unwrap();
        let az = g.azimuth_axis().value(ia);
        let el = g.elevation_axis().value(ie);
        prop_assert_eq!(g.lookup(f, az, el).unwrap(), g.node(f, ia, ie));
    }

    #[test]
    fn interpolation_stays_within_cell_corners(az in 0.0..180.0f64, el in -95.0..95.0f64, f in 0usize..15) {
        let g = library().grid(2).unwrap();
        let ia = (az.floor() as usize).min(179);
        let ie = ((el + 95.0).floor() as usize).min(189);
        let corners = [g.node(f, ia, ie), g.node(f, ia + 1, ie), g.node(f, ia, ie + 1), g.node(f, ia + 1, ie + 1)];
        let lo = corners.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let v = g.lookup(f, az, el).unwrap();
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
    }

    #[test]
    fn lookup_is_continuous(az in 0.0..179.99f64, el in -95.0..94.99f64, f in 0usize..15) {
        let g = library().grid(0).unwrap();
        // a bilinear patch changes by at most the largest neighbour difference per degree
        let slope = max_node_step(g, f);
        let d = 1e-3;
        let v = g.lookup(f, az, el).unwrap();
        prop_assert!((g.lookup(f, az + d, el).unwrap() - v).abs() <= 2.0 * slope * d + 1e-12);
        prop_assert!((g.lookup(f, az, el + d).unwrap() - v).abs() <= 2.0 * slope * d + 1e-12);
    }

    #[test]
    fn library_round_trips_through_bytes(
        k in 2usize..4,
        nf in 1usize..4,
        na in 2usize..6,
        ne in 2usize..6,
        seed in any::<u64>(),
    ) {
        let mut rng = rng_from_seed(seed);
        let freqs: Vec<f64> = (0..nf).map(|i| 26.0 + i as f64 * 0.5).collect();
        let az = Axis::new(0.0, 180.0 / (na - 1) as f64, na).unwrap();
        let el = Axis::new(-95.0, 190.0 / (ne - 1) as f64, ne).unwrap();
        let grids = (0..k)
            .map(|c| {
                let v = (0..nf * na * ne).map(|_| rand::Rng::random_range(&mut rng, -60.0..30.0)).collect();
                RcsGrid::new(c, freqs.clone(), az, el, v).unwrap()
            })
            .collect();
        let names = (0..k).map(|c| format!("uav{c}")).collect();
        let lib = GridLibrary::new(grids, names).unwrap();
        let mut bytes = Vec::new();
        lib.write_to(&mut bytes).unwrap();
        let back = GridLibrary::read_from(&bytes[..]).unwrap();
        prop_assert_eq!(&back, &lib);
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        prop_assert_eq!(bytes, again);
    }

    #[test]
    fn scaled_trace_matches_snr(sig in prop::collection::vec(-60.0..30.0f64, 1..16), snr in -30.0..30.0f64, seed in any::<u64>()) {
        prop_assume!(signature_power(&sig) > 1e-6);
        let cov = sample_colored_covariance(sig.len(), &mut rng_from_seed(seed)).unwrap();
        let scaled = scale_to_snr(&cov, &sig, snr).unwrap();
        let lhs = scaled.trace() * 10f64.powf(snr / 10.0);
        let rhs = signature_power(&sig);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs);
    }

    #[test]
    fn step_length_is_constant(yaw in -720.0..720.0f64, roll in -720.0..720.0f64, seed in any::<u64>()) {
        let cfg = KinematicsConfig::default();
        let prev = Pose::new([1.0, -2.0, 250.0], yaw, 0.0, roll);
        let next = step_pose(&prev, &cfg, &mut rng_from_seed(seed));
        prop_assert!(((next.position_m - prev.position_m).norm() - 5.0).abs() < 1e-9);
        prop_assert_eq!(next.pitch_deg, 0.0);
    }

    #[test]
    fn level_yaw_shifts_every_azimuth(
        pos in prop::array::uniform3(-300.0..300.0f64),
        yaw in -360.0..360.0f64,
        psi in -180.0..180.0f64,
        radars in prop::collection::vec(prop::array::uniform2(-500.0..500.0f64), 1..6),
    ) {
        let array = RadarArray::new(radars.iter().map(|r| [r[0], r[1], 0.0]).collect()).unwrap();
        let pose = Pose::new([pos[0], pos[1], pos[2].abs() + 10.0], yaw, 0.0, 0.0);
        let turned = Pose { yaw_deg: yaw + psi, ..pose };
        let a = aspect_angles(&pose, &array).unwrap();
        let b = aspect_angles(&turned, &array).unwrap();
        for (x, y) in a.iter().zip(&b) {
            let diff = (x.azimuth_deg - psi - y.azimuth_deg).rem_euclid(360.0);
            prop_assert!(!(1e-7..=360.0 - 1e-7).contains(&diff), "diff {diff}");
            prop_assert!((x.elevation_deg - y.elevation_deg).abs() < 1e-9);
        }
    }

    #[test]
    fn joint_translation_and_range(
        pos in prop::array::uniform3(-300.0..300.0f64),
        shift in prop::array::uniform3(-1e3..1e3f64),
        yaw in -360.0..360.0f64,
        roll in -180.0..180.0f64,
        radars in prop::collection::vec(prop::array::uniform2(-500.0..500.0f64), 1..6),
    ) {
        let pts: Vec<[f64; 3]> = radars.iter().map(|r| [r[0], r[1], 0.0]).collect();
        let moved: Vec<[f64; 3]> = pts.iter().map(|p| [p[0] + shift[0], p[1] + shift[1], p[2] + shift[2]]).collect();
        let pose = Pose::new([pos[0], pos[1], pos[2].abs() + 10.0], yaw, 0.0, roll);
        let moved_pose = Pose { position_m: pose.position_m + Vector3::from(shift), ..pose };
        let a = aspect_angles(&pose, &RadarArray::new(pts.clone()).unwrap()).unwrap();
        let b = aspect_angles(&moved_pose, &RadarArray::new(moved).unwrap()).unwrap();
        for ((x, y), p) in a.iter().zip(&b).zip(&pts) {
            prop_assert!((x.azimuth_deg - y.azimuth_deg).abs() < 1e-6);
            prop_assert!((x.elevation_deg - y.elevation_deg).abs() < 1e-6);
            let dist = (Vector3::from(*p) - pose.position_m).norm();
            prop_assert!((x.range_m - dist).abs() < 1e-9 * dist.max(1.0));
        }
    }

    #[test]
    fn predictions_are_floored_probability_vectors(
        sizes in prop::collection::vec(1usize..6, 0..3),
        k in 2usize..8,
        seed in any::<u64>(),
        scale in 0.1..1e3f64,
    ) {
        let d = 4;
        let mut dims = vec![d];
        dims.extend(&sizes);
        dims.push(k);
        let mut rng = rng_from_seed(seed);
        let mut net = Network::random(&dims, &mut rng);
        let params: Vec<f64> = net.params().iter().map(|w| w * scale).collect();
        net.set_params(&params);
        let model = ClassifierModel::new(ModelKind::Mlp, false, Standardizer::identity(d), net).unwrap();
        let x = Observation::new((0..d).map(|_| rand::Rng::random_range(&mut rng, -50.0..50.0)).collect(), 0.0, 0.0).unwrap();
        let p = model.predict_proba(&x).unwrap();
        assert_valid(&p, k);
        let floor = P_MIN / (1.0 + k as f64 * P_MIN);
        prop_assert!(p.as_slice().iter().all(|&v| v >= floor));
    }
}

fn max_node_step(g: &RcsGrid, f: usize) -> f64 {
    let (na, ne) = (g.azimuth_axis().len(), g.elevation_axis().len());
    let mut m = 0.0f64;
    for ia in 0..na {
        for ie in 0..ne {
            let v = g.node(f, ia, ie);
            if ia + 1 < na {
                m = m.max((g.node(f, ia + 1, ie) - v).abs());
            }
            if ie + 1 < ne {
                m = m.max((g.node(f, ia, ie + 1) - v).abs());
            }
        }
    }
    m
}
