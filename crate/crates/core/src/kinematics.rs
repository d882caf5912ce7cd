//! Random-walk UAV kinematics and radar aspect angles.
//!
//! Axis convention: world and body frames are right-handed. Yaw rotates
//! about z, pitch about y, roll about x. The body-to-world attitude is
//! `R_yaw * R_pitch * R_roll`, and the body x-axis is the forward direction.
//!
//! World-to-body transforms apply the inverse translation followed by
//! `R_pitch^T * R_roll^T * R_yaw^T`. Pitch is held at zero by the motion
//! model, where this matches the exact inverse of the attitude.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Position (m) and attitude (degrees, unwrapped) of the UAV.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub position_m: Vector3<f64>,
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub roll_deg: f64,
}

impl Pose {
    pub fn new(position_m: [f64; 3], yaw_deg: f64, pitch_deg: f64, roll_deg: f64) -> Self {
        Self {
            position_m: Vector3::from(position_m),
            yaw_deg,
            pitch_deg,
            roll_deg,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position_m.iter().all(|v| v.is_finite())
            && self.yaw_deg.is_finite()
            && self.pitch_deg.is_finite()
            && self.roll_deg.is_finite()
    }

    /// Body-to-world rotation `R_yaw * R_pitch * R_roll`.
    pub fn attitude(&self) -> Matrix3<f64> {
        rot_z(self.yaw_deg) * rot_y(self.pitch_deg) * rot_x(self.roll_deg)
    }

    /// Forward (body x) direction in world coordinates.
    pub fn heading(&self) -> Vector3<f64> {
        self.attitude() * Vector3::x()
    }

    /// Expresses a world point in the body frame.
    pub fn world_to_body(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let inv = rot_y(self.pitch_deg).transpose()
            * rot_x(self.roll_deg).transpose()
            * rot_z(self.yaw_deg).transpose();
        inv * (p - self.position_m)
    }
}

pub fn rot_z(deg: f64) -> Matrix3<f64> {
    let (s, c) = deg.to_radians().sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

pub fn rot_y(deg: f64) -> Matrix3<f64> {
    let (s, c) = deg.to_radians().sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_x(deg: f64) -> Matrix3<f64> {
    let (s, c) = deg.to_radians().sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// How the second parameter of the attitude jitter Gaussians is read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaussianParam {
    /// `N(0, v)` with `v` a variance in deg².
    Variance,
    /// `N(0, s)` with `s` a standard deviation in degrees.
    StdDev,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KinematicsConfig {
    pub velocity_mps: f64,
    pub dt_s: f64,
    pub steps: usize,
    /// Yaw jitter parameter, interpreted per `noise_param`.
    pub yaw_noise: f64,
    /// Roll jitter parameter, interpreted per `noise_param`.
    pub roll_noise: f64,
    pub noise_param: GaussianParam,
    /// Initial x and y are drawn from this interval (m).
    pub xy_bounds_m: (f64, f64),
    /// Initial altitude interval (m).
    pub z_bounds_m: (f64, f64),
}

impl Default for KinematicsConfig {
    fn default() -> Self {
        Self {
            velocity_mps: 50.0,
            dt_s: 0.1,
            steps: 100,
            yaw_noise: 144.0,
            roll_noise: 81.0,
            noise_param: GaussianParam::Variance,
            xy_bounds_m: (-150.0, 150.0),
            z_bounds_m: (200.0, 300.0),
        }
    }
}

impl KinematicsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_s > 0.0 && self.dt_s.is_finite()) {
            return Err(Error::Parameter(format!(
                "dt must be > 0, got {}",
                self.dt_s
            )));
        }
        if !(self.velocity_mps >= 0.0 && self.velocity_mps.is_finite()) {
            return Err(Error::Parameter(format!(
                "velocity must be >= 0, got {}",
                self.velocity_mps
            )));
        }
        if self.steps == 0 {
            return Err(Error::Parameter(
                "trajectory needs at least one step".into(),
            ));
        }
        if !(self.yaw_noise >= 0.0 && self.roll_noise >= 0.0) {
            return Err(Error::Parameter("attitude noise must be >= 0".into()));
        }
        for (lo, hi) in [self.xy_bounds_m, self.z_bounds_m] {
            if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
                return Err(Error::Parameter(format!(
                    "bad position bounds ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }

    fn std_dev(&self, p: f64) -> f64 {
        match self.noise_param {
            GaussianParam::Variance => p.sqrt(),
            GaussianParam::StdDev => p,
        }
    }

    pub fn yaw_std_deg(&self) -> f64 {
        self.std_dev(self.yaw_noise)
    }

    pub fn roll_std_deg(&self) -> f64 {
        self.std_dev(self.roll_noise)
    }

    /// Distance covered per step, `v * dt`.
    pub fn step_length_m(&self) -> f64 {
        self.velocity_mps * self.dt_s
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Uniform yaw in [0°, 360°), uniform position within the configured bounds,
/// level attitude.
pub fn initial_pose<R: Rng + ?Sized>(cfg: &KinematicsConfig, rng: &mut R) -> Pose {
    let x = uniform(rng, cfg.xy_bounds_m);
    let y = uniform(rng, cfg.xy_bounds_m);
    let z = uniform(rng, cfg.z_bounds_m);
    let yaw = rng.random_range(0.0..360.0);
    Pose::new([x, y, z], yaw, 0.0, 0.0)
}

/// Advances one step along the previous heading, then jitters yaw and roll.
pub fn step_pose<R: Rng + ?Sized>(prev: &Pose, cfg: &KinematicsConfig, rng: &mut R) -> Pose {
    let position_m = prev.position_m + cfg.step_length_m() * prev.heading();
    let yaw_jitter = gaussian(rng, cfg.yaw_std_deg());
    let roll_jitter = gaussian(rng, cfg.roll_std_deg());
    Pose {
        position_m,
        yaw_deg: prev.yaw_deg + yaw_jitter,
        pitch_deg: 0.0,
        roll_deg: prev.roll_deg + roll_jitter,
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, std: f64) -> f64 {
    if std == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, std)
        .expect("std validated non-negative")
        .sample(rng)
}

/// Initial pose followed by `cfg.steps` poses; the returned vector holds the
/// `steps` poses at which the radars observe the target.
pub fn simulate_trajectory<R: Rng + ?Sized>(cfg: &KinematicsConfig, rng: &mut R) -> Vec<Pose> {
    let mut pose = initial_pose(cfg, rng);
    (0..cfg.steps)
        .map(|_| {
            pose = step_pose(&pose, cfg, rng);
            pose
        })
        .collect()
}

/// Ground radar positions in world coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct RadarArray {
    positions_m: Vec<Vector3<f64>>,
}

impl RadarArray {
    pub fn new(positions_m: Vec<[f64; 3]>) -> Result<Self> {
        if positions_m.is_empty() {
            return Err(Error::Parameter(
                "radar array needs at least one radar".into(),
            ));
        }
        let positions_m: Vec<Vector3<f64>> = positions_m.into_iter().map(Vector3::from).collect();
        for (i, a) in positions_m.iter().enumerate() {
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::Input(format!("radar {i} has a non-finite position")));
            }
            if positions_m[..i].contains(a) {
                return Err(Error::Parameter(format!(
                    "radar {i} duplicates another radar"
                )));
            }
        }
        Ok(Self { positions_m })
    }

    pub fn len(&self) -> usize {
        self.positions_m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions_m.is_empty()
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions_m
    }
}

/// `n x n` lattice over the square `[min, max]²` at ground level, where
/// `n = sqrt(j)`. Lattice lines include both edges, so `j = 1` sits at the
/// `(min, min)` corner.
pub fn make_radar_grid(j: usize, area_m: (f64, f64)) -> Result<RadarArray> {
    let n = (j as f64).sqrt().round() as usize;
    if j == 0 || n * n != j {
        return Err(Error::Parameter(format!(
            "radar count must be a positive perfect square, got {j}"
        )));
    }
    let (lo, hi) = area_m;
    if !(lo < hi) {
        return Err(Error::Parameter(format!("bad radar area ({lo}, {hi})")));
    }
    let coord = |i: usize| {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    };
    let mut positions = Vec::with_capacity(j);
    for iy in 0..n {
        for ix in 0..n {
            positions.push([coord(ix), coord(iy), 0.0]);
        }
    }
    RadarArray::new(positions)
}

/// Range and body-frame aspect angles of one radar line of sight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AspectSample {
    pub range_m: f64,
    /// `atan2(dy, dx)` in degrees, in (-180, 180].
    pub azimuth_deg: f64,
    /// Signed elevation in degrees, +90 straight below the airframe,
    /// -90 straight above it.
    pub elevation_deg: f64,
}

/// Aspect of a single body-frame offset.
pub fn aspect_from_offset(d: &Vector3<f64>) -> Result<AspectSample> {
    let range_m = d.norm();
    if range_m <= 0.0 || !range_m.is_finite() {
        return Err(Error::Geometry(format!(
            "radar coincides with the target (range = {range_m})"
        )));
    }
    let azimuth_deg = if d.x == 0.0 && d.y == 0.0 {
        0.0
    } else {
        d.y.atan2(d.x).to_degrees()
    };
    // angle measured from the airframe's underside, re-centred on the horizon
    let from_bottom = (-d.z / range_m).clamp(-1.0, 1.0).acos().to_degrees();
    Ok(AspectSample {
        range_m,
        azimuth_deg,
        elevation_deg: 90.0 - from_bottom,
    })
}

/// Per-radar aspect samples of the target in `pose`.
pub fn aspect_angles(pose: &Pose, radars: &RadarArray) -> Result<Vec<AspectSample>> {
    radars
        .positions()
        .iter()
        .map(|p| aspect_from_offset(&pose.world_to_body(p)))
        .collect()
}
