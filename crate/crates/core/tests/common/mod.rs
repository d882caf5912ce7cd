//! Checks shared by the acceptance harness and the regular test suites.
#![allow(dead_code)]

use bayes_atr::classifier::Network;
use bayes_atr::fusion::{fuse_obf, modal_vote, recursive_posteriors, FusionKind, FusionRule};
use bayes_atr::kinematics::{aspect_angles, rot_z, step_pose, KinematicsConfig, Pose, RadarArray};
use bayes_atr::noise::{sample_colored_covariance, scale_to_snr, signature_power};
use bayes_atr::seed::{rng_from_seed, SimRng};
use bayes_atr::signature::{fold_azimuth, GridLibrary};
use bayes_atr::ClassProbVector;
use rand::Rng;

fn random_simplex(k: usize, rng: &mut SimRng) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Largest gap between OBF of exact per-observation posteriors and the
/// enumerated joint posterior of a conditionally independent model.
pub fn obf_enumeration_error(instances: usize, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let k = rng.random_range(2..=4);
        let j = rng.random_range(1..=3);
        let m = rng.random_range(2..=4);
        let prior = random_simplex(k, &mut rng);
        // lik[r][c][x] = P(x_r = x | c)
        let lik: Vec<Vec<Vec<f64>>> = (0..j)
            .map(|_| (0..k).map(|_| random_simplex(m, &mut rng)).collect())
            .collect();
        let prior_cpv = ClassProbVector::new(prior.clone()).unwrap();
        for code in 0..m.pow(j as u32) {
            let xs: Vec<usize> = (0..j).map(|r| code / m.pow(r as u32) % m).collect();
            let joint: Vec<f64> = (0..k)
                .map(|c| {
                    prior[c]
                        * xs.iter()
                            .enumerate()
                            .map(|(r, &x)| lik[r][c][x])
                            .product::<f64>()
                })
                .collect();
            let evidence: f64 = joint.iter().sum();
            let per_radar: Vec<ClassProbVector> = xs
                .iter()
                .enumerate()
                .map(|(r, &x)| {
                    let w: Vec<f64> = (0..k).map(|c| prior[c] * lik[r][c][x]).collect();
                    ClassProbVector::from_weights(&w).unwrap()
                })
                .collect();
            let fused = fuse_obf(&per_radar, &prior_cpv).unwrap();
            for (f, p) in fused.as_slice().iter().zip(&joint) {
                worst = worst.max((f - p / evidence).abs());
            }
        }
    }
    worst
}

/// Largest log-space gap between the recursive posterior and the normalized
/// one-shot product over random sequences.
pub fn rbc_identity_error(sequences: usize, steps: usize, k: usize, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let rule = FusionRule::new(FusionKind::Soft);
    let mut worst = 0.0f64;
    for _ in 0..sequences {
        let seq: Vec<Vec<ClassProbVector>> = (0..steps)
            .map(|_| {
                let w: Vec<f64> = (0..k).map(|_| rng.random_range(1e-4..1.0)).collect();
                vec![ClassProbVector::from_weights(&w).unwrap()]
            })
            .collect();
        let post = recursive_posteriors(&seq, &rule, &mut rng).unwrap();
        let total: Vec<f64> = (0..k)
            .map(|c| seq.iter().map(|s| s[0].as_slice()[c].ln()).sum())
            .collect();
        let max = total.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + total.iter().map(|t| (t - max).exp()).sum::<f64>().ln();
        for (l, t) in post.last().unwrap().log_posterior().iter().zip(&total) {
            worst = worst.max((l - (t - lse)).abs());
        }
    }
    worst
}

/// Largest relative violation of `trace · 10^(snr/10) = Σσ²`.
pub fn snr_contract_error(pairs: usize, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let f = rng.random_range(1..=15);
        let sig: Vec<f64> = (0..f).map(|_| rng.random_range(-50.0..20.0)).collect();
        let snr = rng.random_range(-30.0..30.0);
        let cov = sample_colored_covariance(f, &mut rng).unwrap();
        let scaled = scale_to_snr(&cov, &sig, snr).unwrap();
        let p = signature_power(&sig);
        worst = worst.max((scaled.trace() * 10f64.powf(snr / 10.0) - p).abs() / p);
    }
    worst
}

pub struct KinematicsErrors {
    pub displacement: f64,
    pub yaw_level: f64,
    pub yaw_joint: f64,
    pub translation: f64,
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Worst-case errors of the kinematic invariants over random poses.
///
/// `yaw_level` turns a level pose and expects every azimuth to drop by the
/// same angle; `yaw_joint` turns an arbitrary pose together with the radar
/// offsets about the vertical and expects unchanged aspects.
pub fn kinematics_errors(poses: usize, seed: u64) -> KinematicsErrors {
    let mut rng = rng_from_seed(seed);
    let cfg = KinematicsConfig::default();
    let mut e = KinematicsErrors {
        displacement: 0.0,
        yaw_level: 0.0,
        yaw_joint: 0.0,
        translation: 0.0,
    };
    for _ in 0..poses {
        let pos = [
            rng.random_range(-300.0..300.0),
            rng.random_range(-300.0..300.0),
            rng.random_range(50.0..500.0),
        ];
        let yaw = rng.random_range(-180.0..180.0);
        let roll = rng.random_range(-180.0..180.0);
        let pose = Pose::new(pos, yaw, 0.0, roll);
        let next = step_pose(&pose, &cfg, &mut rng);
        e.displacement = e
            .displacement
            .max(((next.position_m - pose.position_m).norm() - cfg.step_length_m()).abs());

        let radars: Vec<[f64; 3]> = (0..4)
            .map(|_| {
                [
                    rng.random_range(-500.0..500.0),
                    rng.random_range(-500.0..500.0),
                    0.0,
                ]
            })
            .collect();
        let array = RadarArray::new(radars.clone()).unwrap();
        let psi: f64 = rng.random_range(-180.0..180.0);

        let level = Pose {
            roll_deg: 0.0,
            ..pose
        };
        let turned = Pose {
            yaw_deg: yaw + psi,
            ..level
        };
        let a = aspect_angles(&level, &array).unwrap();
        let b = aspect_angles(&turned, &array).unwrap();
        for (x, y) in a.iter().zip(&b) {
            e.yaw_level = e
                .yaw_level
                .max(angle_gap(x.azimuth_deg - psi, y.azimuth_deg));
            e.yaw_level = e.yaw_level.max((x.elevation_deg - y.elevation_deg).abs());
        }

        let rz = rot_z(psi);
        let rotated: Vec<[f64; 3]> = array
            .positions()
            .iter()
            .map(|p| {
                let q = pose.position_m + rz * (p - pose.position_m);
                [q.x, q.y, q.z]
            })
            .collect();
        let turned = Pose {
            yaw_deg: yaw + psi,
            ..pose
        };
        let a = aspect_angles(&pose, &array).unwrap();
        let b = aspect_angles(&turned, &RadarArray::new(rotated).unwrap()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            e.yaw_joint = e.yaw_joint.max(angle_gap(x.azimuth_deg, y.azimuth_deg));
            e.yaw_joint = e.yaw_joint.max((x.elevation_deg - y.elevation_deg).abs());
        }

        let shift = [
            rng.random_range(-1e3..1e3),
            rng.random_range(-1e3..1e3),
            rng.random_range(-50.0..50.0),
        ];
        let moved: Vec<[f64; 3]> = radars
            .iter()
            .map(|p| [p[0] + shift[0], p[1] + shift[1], p[2] + shift[2]])
            .collect();
        let mut shifted = pose;
        shifted.position_m += nalgebra::Vector3::from(shift);
        let b = aspect_angles(&shifted, &RadarArray::new(moved).unwrap()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            e.translation = e.translation.max(angle_gap(x.azimuth_deg, y.azimuth_deg));
            e.translation = e.translation.max((x.elevation_deg - y.elevation_deg).abs());
            e.translation = e.translation.max((x.range_m - y.range_m).abs());
        }
    }
    e
}

/// Largest relative gap between backprop and central differences.
///
/// Entries where both gradients are below `1e-6` are compared relative to
/// `1e-6` so that rounding noise on near-zero partials does not dominate.
pub fn gradient_error(sizes: &[usize], fixtures: usize, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let (d, k) = (sizes[0], *sizes.last().unwrap());
    let mut worst = 0.0f64;
    for _ in 0..fixtures {
        let n = 5;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let idx: Vec<usize> = (0..n).collect();
        let l2 = rng.random_range(0.0..0.1);
        let mut net = Network::random(sizes, &mut rng);
        let (_, grad) = net.loss_and_grad(&rows, &labels, &idx, l2);
        let p0 = net.params();
        let h = 1e-6;
        for i in 0..p0.len() {
            let mut p = p0.clone();
            p[i] = p0[i] + h;
            net.set_params(&p);
            let up = net.loss(&rows, &labels, &idx, l2);
            p[i] = p0[i] - h;
            net.set_params(&p);
            let down = net.loss(&rows, &labels, &idx, l2);
            let numeric = (up - down) / (2.0 * h);
            let scale = grad[i].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max((grad[i] - numeric).abs() / scale);
        }
        net.set_params(&p0);
    }
    worst
}

/// Number of fused outputs (out of `cases` random inputs, every rule) that
/// are not valid probability vectors.
pub fn invalid_fusion_outputs(cases: usize, seed: u64) -> usize {
    let mut rng = rng_from_seed(seed);
    let mut bad = 0;
    for _ in 0..cases {
        let k = rng.random_range(2..=7);
        let j = rng.random_range(1..=16);
        let per: Vec<ClassProbVector> = (0..j)
            .map(|_| {
                let w: Vec<f64> = (0..k)
                    .map(|_| {
                        if rng.random_bool(0.2) {
                            1e-9
                        } else {
                            rng.random_range(1e-3..1.0)
                        }
                    })
                    .collect();
                ClassProbVector::from_weights(&w).unwrap()
            })
            .collect();
        for kind in FusionKind::ALL {
            let ok = FusionRule::new(kind).fuse(&per, &mut rng).is_ok_and(|p| {
                let s: f64 = p.as_slice().iter().sum();
                p.len() == k
                    && (s - 1.0).abs() <= 1e-9
                    && p.as_slice().iter().all(|v| (0.0..=1.0).contains(v))
            });
            bad += usize::from(!ok);
        }
    }
    bad
}

/// Largest fold-invariance violation of grid lookups and any folded value
/// outside `[0, 180]`, over random azimuths and whole turns.
pub fn fold_error(lib: &GridLibrary, samples: usize, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let phi = rng.random_range(-1080.0..1080.0);
        let folded = fold_azimuth(phi);
        if !(0.0..=180.0).contains(&folded) {
            return f64::INFINITY;
        }
        let g = lib.grid(rng.random_range(0..lib.n_classes())).unwrap();
        let f = rng.random_range(0..g.n_frequencies());
        let el = rng.random_range(-95.0..95.0);
        let turns = f64::from(rng.random_range(-2i32..=2));
        let a = g.lookup(f, phi, el).unwrap();
        let b = g.lookup(f, phi + 180.0 + 360.0 * turns, el).unwrap();
        let c = g.lookup(f, folded, el).unwrap();
        worst = worst.max((a - b).abs()).max((a - c).abs());
    }
    worst
}

/// Count of grid nodes whose lookup differs from the stored value.
pub fn node_mismatches(lib: &GridLibrary) -> usize {
    let mut bad = 0;
    for g in lib.grids() {
        let (az, el) = (g.azimuth_axis(), g.elevation_axis());
        for f in 0..g.n_frequencies() {
            for ia in 0..az.len() {
                for ie in 0..el.len() {
                    bad += usize::from(
                        g.lookup(f, az.value(ia), el.value(ie)).unwrap() != g.node(f, ia, ie),
                    );
                }
            }
        }
    }
    bad
}

/// Fraction of two-way hard-vote ties resolved to the lower class.
pub fn tie_break_frequency(ties: usize, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let a = ClassProbVector::new(vec![0.7, 0.2, 0.1]).unwrap();
    let b = ClassProbVector::new(vec![0.2, 0.7, 0.1]).unwrap();
    let pair = [a, b];
    let lower = (0..ties)
        .filter(|_| modal_vote(&pair, &mut rng).unwrap() == 0)
        .count();
    lower as f64 / ties as f64
}
