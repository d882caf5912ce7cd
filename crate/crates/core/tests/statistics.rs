use bayes_atr::experiment::{generate_test_dataset, generate_train_samples, TestSetSpec};
use bayes_atr::fusion::fuse_random;
use bayes_atr::kinematics::{initial_pose, make_radar_grid, KinematicsConfig};
use bayes_atr::noise::{jitter_angles, sample_colored_covariance, scale_to_snr, NoiseConfig};
use bayes_atr::seed::rng_from_seed;
use bayes_atr::signature::{fold_azimuth, synth_library, SynthParams};
use nalgebra::{DMatrix, SymmetricEigen};

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

#[test]
fn training_azimuths_are_uniform() {
    let lib = synth_library(3, 4, &SynthParams::default()).unwrap();
    let noise = NoiseConfig::new(0.0, 0.0, 0.0).unwrap();
    let (obs, labels) =
        generate_train_samples(&lib, 10_000, &noise, &mut rng_from_seed(5)).unwrap();
    assert_eq!(labels.iter().filter(|&&c| c == 0).count(), 2500);
    let mut bins = [0usize; 18];
    for o in &obs {
        assert!((0.0..=180.0).contains(&o.azimuth_deg));
        bins[((o.azimuth_deg / 10.0) as usize).min(17)] += 1;
    }
    let expected = obs.len() as f64 / 18.0;
    let chi2: f64 = bins
        .iter()
        .map(|&b| (b as f64 - expected).powi(2) / expected)
        .sum();
    // 99th percentile of chi-square with 17 degrees of freedom
    assert!(chi2 < 33.41, "chi2 {chi2}, bins {bins:?}");
}

#[test]
fn initial_poses_are_level_and_in_bounds() {
    let cfg = KinematicsConfig::default();
    let mut rng = rng_from_seed(17);
    let yaws: Vec<f64> = (0..10_000)
        .map(|_| {
            let p = initial_pose(&cfg, &mut rng);
            assert_eq!((p.pitch_deg, p.roll_deg), (0.0, 0.0));
            assert!(p.position_m.z >= cfg.z_bounds_m.0 && p.position_m.z <= cfg.z_bounds_m.1);
            assert!((0.0..360.0).contains(&p.yaw_deg));
            p.yaw_deg
        })
        .collect();
    let (m, _) = mean_std(&yaws);
    // standard error of a uniform [0, 360) mean over 1e4 draws is about 1.04
    assert!((m - 180.0).abs() < 3.5, "mean yaw {m}");
}

#[test]
fn four_radars_see_distinct_azimuths() {
    let lib = synth_library(3, 4, &SynthParams::default()).unwrap();
    let spec = TestSetSpec {
        kinematics: KinematicsConfig::default(),
        radars: make_radar_grid(4, (-150.0, 150.0)).unwrap(),
        noise: NoiseConfig::noiseless(),
        n_trajectories: 8,
        base_seed: 9,
        trial: 0,
    };
    for rec in generate_test_dataset(&lib, &spec).unwrap() {
        let az: Vec<f64> = rec.aspects[0].iter().map(|a| a.azimuth_deg).collect();
        for i in 0..az.len() {
            for j in i + 1..az.len() {
                assert!((az[i] - az[j]).abs() > 1e-6, "{az:?}");
            }
        }
    }
}

#[test]
fn jitter_matches_uniform_moments() {
    let cfg = NoiseConfig::new(0.0, 40.0, 40.0).unwrap();
    let mut rng = rng_from_seed(23);
    let (az, el): (Vec<f64>, Vec<f64>) = (0..100_000)
        .map(|_| jitter_angles(0.0, 10.0, &cfg, &mut rng))
        .map(|(a, e)| (a, e - 10.0))
        .unzip();
    let target = 40.0 / 3f64.sqrt();
    for xs in [&az, &el] {
        let (m, s) = mean_std(xs);
        assert!((s / target - 1.0).abs() < 0.02, "std {s}");
        assert!(
            m.abs() < 3.0 * target / (xs.len() as f64).sqrt(),
            "mean {m}"
        );
        assert!(xs.iter().all(|x| x.abs() <= 40.0));
    }
}

#[test]
fn jittered_training_angles_are_not_refolded() {
    let lib = synth_library(3, 4, &SynthParams::default()).unwrap();
    let noise = NoiseConfig::new(0.0, 40.0, 40.0).unwrap();
    let (obs, _) = generate_train_samples(&lib, 4000, &noise, &mut rng_from_seed(31)).unwrap();
    assert!(obs.iter().any(|o| o.azimuth_deg < 0.0));
    assert!(obs.iter().any(|o| o.azimuth_deg > 180.0));
    assert!(obs.iter().all(|o| (-40.0..=220.0).contains(&o.azimuth_deg)));
    assert!(obs.iter().all(|o| fold_azimuth(o.azimuth_deg) <= 180.0));
}

#[test]
fn dirichlet_draws_average_to_uniform() {
    let k = 7;
    let mut rng = rng_from_seed(41);
    let mut sum = vec![0.0; k];
    let n = 100_000;
    for _ in 0..n {
        let p = fuse_random(k, &mut rng).unwrap();
        for (s, v) in sum.iter_mut().zip(p.as_slice()) {
            *s += v;
        }
    }
    for s in sum {
        assert!((s / n as f64 - 1.0 / 7.0).abs() < 0.01, "{}", s / n as f64);
    }
}

#[test]
fn acgn_samples_match_the_scaled_covariance() {
    let mut rng = rng_from_seed(53);
    let sig = [-10.0, -12.0];
    let cov = scale_to_snr(&sample_colored_covariance(2, &mut rng).unwrap(), &sig, 0.0).unwrap();
    let n = 100_000;
    let draws: Vec<Vec<f64>> = (0..n)
        .map(|_| bayes_atr::noise::apply_acgn(&sig, &cov, &mut rng).unwrap())
        .collect();
    let s = cov.sigma();
    for i in 0..2 {
        let m = draws.iter().map(|d| d[i] - sig[i]).sum::<f64>() / n as f64;
        assert!(m.abs() < 3.0 * (s[(i, i)] / n as f64).sqrt(), "mean {m}");
        for j in 0..2 {
            let c = draws
                .iter()
                .map(|d| (d[i] - sig[i]) * (d[j] - sig[j]))
                .sum::<f64>()
                / n as f64;
            let scale = (s[(i, i)] * s[(j, j)]).sqrt();
            assert!(
                (c - s[(i, j)]).abs() <= 0.05 * scale,
                "entry ({i},{j}): {c} vs {}",
                s[(i, j)]
            );
        }
    }
}

#[test]
fn sampled_covariances_are_positive_semidefinite() {
    let mut rng = rng_from_seed(61);
    for _ in 0..100 {
        let cov = sample_colored_covariance(15, &mut rng).unwrap();
        let s: DMatrix<f64> = cov.sigma().clone();
        assert_eq!(s, s.transpose());
        let min = SymmetricEigen::new(s).eigenvalues.min();
        assert!(min >= -1e-9, "eigenvalue {min}");
    }
}
