//! Training samples and test trajectories drawn from an RCS library.

use std::io::{BufRead, Write};

use rand::Rng;

use crate::classifier::{LabeledDataset, Observation};
use crate::error::{Error, Result};
use crate::kinematics::{
    aspect_angles, simulate_trajectory, AspectSample, KinematicsConfig, Pose, RadarArray,
};
use crate::noise::{jitter_angles, NoiseConfig};
use crate::seed::{derived_rng, real_tag, SimRng};
use crate::signature::{fold_azimuth, GridLibrary};

pub(crate) const TAG_TRAIN: u64 = 1;
pub(crate) const TAG_KINEMATICS: u64 = 2;
pub(crate) const TAG_OBSERVATION: u64 = 3;
pub(crate) const TAG_FUSION: u64 = 4;
pub(crate) const TAG_MLP: u64 = 5;

/// Class of the `i`-th sample when classes are interleaved.
pub fn class_of_index(i: usize, k: usize) -> usize {
    i % k
}

/// Per-class counts of `n` interleaved samples; they differ by at most one.
pub fn class_counts(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|c| n / k + usize::from(c < n % k)).collect()
}

/// Noisy measurement of class `class_id` seen from `aspect`.
///
/// The clean signature is looked up at the true aspect, corrupted with ACGN,
/// and the reported angles are the folded azimuth and elevation plus jitter.
pub fn observe<R: Rng + ?Sized>(
    lib: &GridLibrary,
    class_id: usize,
    aspect: &AspectSample,
    noise: &NoiseConfig,
    rng: &mut R,
) -> Result<Observation> {
    let clean = lib
        .grid(class_id)?
        .signature(aspect.azimuth_deg, aspect.elevation_deg)?;
    let rcs = noise.corrupt_signature(&clean, rng)?;
    let (az, el) = jitter_angles(
        fold_azimuth(aspect.azimuth_deg),
        aspect.elevation_deg,
        noise,
        rng,
    );
    Observation::new(rcs, az, el)
}

/// `n` labelled observations at uniformly drawn aspects, classes interleaved.
pub fn generate_train_samples<R: Rng + ?Sized>(
    lib: &GridLibrary,
    n: usize,
    noise: &NoiseConfig,
    rng: &mut R,
) -> Result<(Vec<Observation>, Vec<usize>)> {
    noise.validate()?;
    let k = lib.n_classes();
    if n < k {
        return Err(Error::Parameter(format!(
            "{n} training samples cannot cover {k} classes"
        )));
    }
    let (az, el) = (lib.azimuth_axis(), lib.elevation_axis());
    let mut obs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = class_of_index(i, k);
        let aspect = AspectSample {
            range_m: 1.0,
            azimuth_deg: rng.random_range(az.start()..=az.end()),
            elevation_deg: rng.random_range(el.start()..=el.end()),
        };
        obs.push(observe(lib, c, &aspect, noise, rng)?);
        labels.push(c);
    }
    Ok((obs, labels))
}

pub fn generate_train_dataset<R: Rng + ?Sized>(
    lib: &GridLibrary,
    n: usize,
    noise: &NoiseConfig,
    include_angles: bool,
    rng: &mut R,
) -> Result<LabeledDataset> {
    let (obs, labels) = generate_train_samples(lib, n, noise, rng)?;
    LabeledDataset::from_observations(&obs, labels, lib.n_classes(), include_angles)
}

/// One simulated flight with its per-radar observations.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub class_id: usize,
    /// Poses after each step (the initial pose is not observed).
    pub poses: Vec<Pose>,
    /// `aspects[t][j]`: true aspect of radar `j` at step `t`.
    pub aspects: Vec<Vec<AspectSample>>,
    /// `observations[t][j]`: noisy measurement of radar `j` at step `t`.
    pub observations: Vec<Vec<Observation>>,
}

impl TrajectoryRecord {
    pub fn steps(&self) -> usize {
        self.observations.len()
    }
}

/// Simulates one trajectory; motion and measurement noise use separate streams.
pub fn simulate_record(
    lib: &GridLibrary,
    class_id: usize,
    kinematics: &KinematicsConfig,
    radars: &RadarArray,
    noise: &NoiseConfig,
    kin_rng: &mut SimRng,
    obs_rng: &mut SimRng,
) -> Result<TrajectoryRecord> {
    let poses = simulate_trajectory(kinematics, kin_rng);
    let mut aspects = Vec::with_capacity(poses.len());
    let mut observations = Vec::with_capacity(poses.len());
    for pose in &poses {
        let a = aspect_angles(pose, radars)?;
        let o = a
            .iter()
            .map(|s| observe(lib, class_id, s, noise, obs_rng))
            .collect::<Result<Vec<_>>>()?;
        aspects.push(a);
        observations.push(o);
    }
    Ok(TrajectoryRecord {
        class_id,
        poses,
        aspects,
        observations,
    })
}

/// Random streams of test trajectory `index`.
///
/// Motion depends only on `(trial, index)`, so every radar count and noise
/// condition sees the same flight paths.
pub fn trajectory_rngs(
    base_seed: u64,
    trial: usize,
    n_radars: usize,
    noise: &NoiseConfig,
    index: usize,
) -> (SimRng, SimRng) {
    let kin = derived_rng(base_seed, &[TAG_KINEMATICS, trial as u64, index as u64]);
    let obs = derived_rng(
        base_seed,
        &[
            TAG_OBSERVATION,
            trial as u64,
            n_radars as u64,
            real_tag(noise.snr_db),
            real_tag(noise.jitter_az_deg),
            real_tag(noise.jitter_el_deg),
            index as u64,
        ],
    );
    (kin, obs)
}

/// Settings for a batch of test trajectories.
#[derive(Clone, Debug)]
pub struct TestSetSpec {
    pub kinematics: KinematicsConfig,
    pub radars: RadarArray,
    pub noise: NoiseConfig,
    pub n_trajectories: usize,
    pub base_seed: u64,
    pub trial: usize,
}

/// Trajectories with interleaved classes, identical to those an experiment
/// run evaluates for the same seed, trial and condition.
pub fn generate_test_dataset(
    lib: &GridLibrary,
    spec: &TestSetSpec,
) -> Result<Vec<TrajectoryRecord>> {
    spec.noise.validate()?;
    spec.kinematics.validate()?;
    (0..spec.n_trajectories)
        .map(|i| {
            let (mut kin, mut obs) = trajectory_rngs(
                spec.base_seed,
                spec.trial,
                spec.radars.len(),
                &spec.noise,
                i,
            );
            simulate_record(
                lib,
                class_of_index(i, lib.n_classes()),
                &spec.kinematics,
                &spec.radars,
                &spec.noise,
                &mut kin,
                &mut obs,
            )
        })
        .collect()
}

fn rcs_header(f: usize) -> String {
    (0..f).map(|i| format!(",rcs_{i}")).collect()
}

/// `class_id,azimuth_deg,elevation_deg,rcs_0,...`
pub fn write_train_csv<W: Write>(
    mut w: W,
    obs: &[Observation],
    labels: &[usize],
) -> std::io::Result<()> {
    let f = obs.first().map_or(0, |o| o.rcs_dbsm.len());
    writeln!(w, "class_id,azimuth_deg,elevation_deg{}", rcs_header(f))?;
    for (o, c) in obs.iter().zip(labels) {
        write!(w, "{c},{},{}", o.azimuth_deg, o.elevation_deg)?;
        for v in &o.rcs_dbsm {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Reads what [`write_train_csv`] writes.
pub fn read_train_csv<R: BufRead>(r: R) -> Result<(Vec<Observation>, Vec<usize>)> {
    let mut lines = r.lines().enumerate();
    let header = match lines.next() {
        Some((_, l)) => l.map_err(|e| Error::parse("line 1", e.to_string()))?,
        None => return Err(Error::parse("line 1", "empty file")),
    };
    let cols = header.split(',').count();
    if cols < 4 || !header.starts_with("class_id,azimuth_deg,elevation_deg,") {
        return Err(Error::parse(
            "line 1",
            format!("unexpected header {header:?}"),
        ));
    }
    let mut obs = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in lines {
        let loc = format!("line {}", i + 1);
        let line = line.map_err(|e| Error::parse(&loc, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(Error::parse(
                &loc,
                format!("{} fields, expected {cols}", fields.len()),
            ));
        }
        let c: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(&loc, format!("bad class id {:?}", fields[0])))?;
        let nums = fields[1..]
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse(&loc, format!("bad number {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        obs.push(Observation::new(nums[2..].to_vec(), nums[0], nums[1])?);
        labels.push(c);
    }
    Ok((obs, labels))
}

/// One line per (trajectory, step, radar).
pub fn write_test_csv<W: Write>(mut w: W, records: &[TrajectoryRecord]) -> std::io::Result<()> {
    let f = records
        .first()
        .and_then(|r| r.observations.first())
        .and_then(|s| s.first())
        .map_or(0, |o| o.rcs_dbsm.len());
    writeln!(
        w,
        "trajectory,class_id,step,radar,range_m,true_azimuth_deg,true_elevation_deg,azimuth_deg,elevation_deg{}",
        rcs_header(f)
    )?;
    for (n, rec) in records.iter().enumerate() {
        for (t, (obs, asp)) in rec.observations.iter().zip(&rec.aspects).enumerate() {
            for (j, (o, a)) in obs.iter().zip(asp).enumerate() {
                write!(
                    w,
                    "{n},{},{},{j},{},{},{},{},{}",
                    rec.class_id,
                    t + 1,
                    a.range_m,
                    a.azimuth_deg,
                    a.elevation_deg,
                    o.azimuth_deg,
                    o.elevation_deg
                )?;
                for v in &o.rcs_dbsm {
                    write!(w, ",{v}")?;
                }
                writeln!(w)?;
            }
        }
    }
    Ok(())
}
