//! Per-class RCS signature grids.
//!
//! An [`RcsGrid`] stores RCS values in dB m² sampled on a regular
//! (frequency, azimuth, elevation) lattice. Queries at arbitrary aspect
//! angles fold the azimuth into the measured half-plane and bilinearly
//! interpolate over the enclosing (azimuth, elevation) cell.
//!
//! # Grid file format
//!
//! A grid library is stored as six newline-terminated ASCII header lines
//! followed immediately by a binary payload:
//!
//! ```text
//! version: 1
//! classes: <K>
//! class_names: <name_0> <name_1> ... <name_{K-1}>
//! freqs_ghz: <f_0> <f_1> ... <f_{F-1}>
//! azimuth: <start_deg> <step_deg> <count>
//! elevation: <start_deg> <step_deg> <count>
//! ```
//!
//! Reals are written in Rust's shortest round-trip decimal form. The payload
//! is `K * F * A * E` little-endian IEEE-754 `f64` values in class-major,
//! then frequency-major, then azimuth-major order (elevation varies fastest).
//! Files produced by [`save_library`] reload and re-save byte-identically.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::seed::derived_rng;

pub const FORMAT_VERSION: u32 = 1;

/// The seven UAV types of the reference measurement campaign.
pub const DEFAULT_CLASS_NAMES: [&str; 7] =
    ["F450", "Heli", "Hexa", "M100", "P4P", "Walkera", "Y600"];

/// 26-40 GHz in 1 GHz steps.
pub fn default_frequencies_ghz() -> Vec<f64> {
    (26..=40).map(f64::from).collect()
}

/// A uniformly spaced, strictly increasing sample axis in degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    start: f64,
    step: f64,
    count: usize,
}

impl Axis {
    pub fn new(start: f64, step: f64, count: usize) -> Result<Self> {
        if !start.is_finite() || !step.is_finite() {
            return Err(Error::Input("axis start/step must be finite".into()));
        }
        if step <= 0.0 {
            return Err(Error::Input(format!("axis step must be > 0, got {step}")));
        }
        if count < 2 {
            return Err(Error::Input(format!(
                "axis needs at least 2 samples, got {count}"
            )));
        }
        Ok(Self { start, step, count })
    }

    /// 0° to 180° in 1° steps.
    pub fn default_azimuth() -> Self {
        Self {
            start: 0.0,
            step: 1.0,
            count: 181,
        }
    }

    /// -95° to 95° in 1° steps.
    pub fn default_elevation() -> Self {
        Self {
            start: -95.0,
            step: 1.0,
            count: 191,
        }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn end(&self) -> f64 {
        self.value(self.count - 1)
    }

    pub fn value(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.start, self.end())
    }

    /// Cell index and fractional offset of `x` (clamped to the axis span).
    fn locate(&self, x: f64) -> (usize, f64) {
        let pos = (self.clamp(x) - self.start) / self.step;
        let i = (pos.floor().max(0.0) as usize).min(self.count - 2);
        (i, (pos - i as f64).clamp(0.0, 1.0))
    }
}

/// Wraps an azimuth to `[0, 360)` and then folds it into `[0, 180]`
/// using the target's front/back symmetry (`φ > 180` reads `φ - 180`).
pub fn fold_azimuth(azimuth_deg: f64) -> f64 {
    let mut w = azimuth_deg.rem_euclid(360.0);
    if w >= 360.0 {
        w -= 360.0;
    }
    if w > 180.0 {
        w - 180.0
    } else {
        w
    }
}

/// RCS lookup table for one class.
#[derive(Clone, Debug, PartialEq)]
pub struct RcsGrid {
    class_id: usize,
    frequencies_ghz: Vec<f64>,
    azimuth: Axis,
    elevation: Axis,
    values_dbsm: Vec<f64>,
}

impl RcsGrid {
    /// `values_dbsm` is laid out frequency-major, then azimuth, then elevation.
    pub fn new(
        class_id: usize,
        frequencies_ghz: Vec<f64>,
        azimuth: Axis,
        elevation: Axis,
        values_dbsm: Vec<f64>,
    ) -> Result<Self> {
        validate_frequencies(&frequencies_ghz)?;
        let expected = frequencies_ghz.len() * azimuth.len() * elevation.len();
        if values_dbsm.len() != expected {
            return Err(Error::Shape(format!(
                "grid for class {class_id} has {} values, expected {} ({} freqs x {} az x {} el)",
                values_dbsm.len(),
                expected,
                frequencies_ghz.len(),
                azimuth.len(),
                elevation.len()
            )));
        }
        if let Some(i) = values_dbsm.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite RCS value at flat index {i} of class {class_id}"
            )));
        }
        Ok(Self {
            class_id,
            frequencies_ghz,
            azimuth,
            elevation,
            values_dbsm,
        })
    }

    pub fn class_id(&self) -> usize {
        self.class_id
    }

    pub fn frequencies_ghz(&self) -> &[f64] {
        &self.frequencies_ghz
    }

    pub fn n_frequencies(&self) -> usize {
        self.frequencies_ghz.len()
    }

    pub fn azimuth_axis(&self) -> &Axis {
        &self.azimuth
    }

    pub fn elevation_axis(&self) -> &Axis {
        &self.elevation
    }

    pub fn values_dbsm(&self) -> &[f64] {
        &self.values_dbsm
    }

    /// Stored value at a grid node.
    pub fn node(&self, freq_index: usize, az_index: usize, el_index: usize) -> f64 {
        let (na, ne) = (self.azimuth.len(), self.elevation.len());
        self.values_dbsm[(freq_index * na + az_index) * ne + el_index]
    }

    /// Interpolated RCS (dB m²) at one frequency and an arbitrary aspect.
    ///
    /// Azimuth is folded with [`fold_azimuth`]; both angles are then clamped
    /// to the grid span.
    pub fn lookup(&self, freq_index: usize, azimuth_deg: f64, elevation_deg: f64) -> Result<f64> {
        if freq_index >= self.frequencies_ghz.len() {
            return Err(Error::Range {
                what: "freq_index",
                index: freq_index,
                len: self.frequencies_ghz.len(),
            });
        }
        let cell = self.cell(azimuth_deg, elevation_deg)?;
        Ok(self.interpolate(freq_index, &cell))
    }

    /// Interpolated signature across all frequencies.
    pub fn signature(&self, azimuth_deg: f64, elevation_deg: f64) -> Result<Vec<f64>> {
        let cell = self.cell(azimuth_deg, elevation_deg)?;
        Ok((0..self.frequencies_ghz.len())
            .map(|f| self.interpolate(f, &cell))
            .collect())
    }

    fn cell(&self, azimuth_deg: f64, elevation_deg: f64) -> Result<Cell> {
        if !azimuth_deg.is_finite() || !elevation_deg.is_finite() {
            return Err(Error::Input(format!(
                "non-finite aspect angle (az = {azimuth_deg}, el = {elevation_deg})"
            )));
        }
        let (ia, ta) = self.azimuth.locate(fold_azimuth(azimuth_deg));
        let (ie, te) = self.elevation.locate(elevation_deg);
        Ok(Cell { ia, ta, ie, te })
    }

    fn interpolate(&self, f: usize, c: &Cell) -> f64 {
        let v00 = self.node(f, c.ia, c.ie);
        let v01 = self.node(f, c.ia, c.ie + 1);
        let v10 = self.node(f, c.ia + 1, c.ie);
        let v11 = self.node(f, c.ia + 1, c.ie + 1);
        let lo = v00 + c.te * (v01 - v00);
        let hi = v10 + c.te * (v11 - v10);
        lo + c.ta * (hi - lo)
    }
}

struct Cell {
    ia: usize,
    ta: f64,
    ie: usize,
    te: f64,
}

fn validate_frequencies(freqs: &[f64]) -> Result<()> {
    if freqs.is_empty() {
        return Err(Error::Input("at least one frequency is required".into()));
    }
    if freqs.iter().any(|f| !f.is_finite()) {
        return Err(Error::Input("non-finite frequency".into()));
    }
    if freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input(
            "frequencies must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// One grid per class, all on shared axes.
#[derive(Clone, Debug, PartialEq)]
pub struct GridLibrary {
    grids: Vec<RcsGrid>,
    class_names: Vec<String>,
}

impl GridLibrary {
    pub fn new(grids: Vec<RcsGrid>, class_names: Vec<String>) -> Result<Self> {
        if grids.is_empty() {
            return Err(Error::Input("grid library needs at least one class".into()));
        }
        if grids.len() != class_names.len() {
            return Err(Error::Shape(format!(
                "{} grids but {} class names",
                grids.len(),
                class_names.len()
            )));
        }
        for name in &class_names {
            if name.is_empty() || name.chars().any(char::is_whitespace) {
                return Err(Error::Input(format!(
                    "class name {name:?} must be non-empty without whitespace"
                )));
            }
        }
        let first = &grids[0];
        for (i, g) in grids.iter().enumerate() {
            if g.class_id != i {
                return Err(Error::Input(format!(
                    "grid at position {i} has class id {}",
                    g.class_id
                )));
            }
            if g.frequencies_ghz != first.frequencies_ghz
                || g.azimuth != first.azimuth
                || g.elevation != first.elevation
            {
                return Err(Error::Shape(format!(
                    "grid for class {i} does not share the library axes"
                )));
            }
        }
        Ok(Self { grids, class_names })
    }

    pub fn n_classes(&self) -> usize {
        self.grids.len()
    }

    pub fn n_frequencies(&self) -> usize {
        self.grids[0].n_frequencies()
    }

    pub fn grid(&self, class_id: usize) -> Result<&RcsGrid> {
        self.grids.get(class_id).ok_or(Error::Range {
            what: "class_id",
            index: class_id,
            len: self.grids.len(),
        })
    }

    pub fn grids(&self) -> &[RcsGrid] {
        &self.grids
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn frequencies_ghz(&self) -> &[f64] {
        self.grids[0].frequencies_ghz()
    }

    pub fn azimuth_axis(&self) -> &Axis {
        self.grids[0].azimuth_axis()
    }

    pub fn elevation_axis(&self) -> &Axis {
        self.grids[0].elevation_axis()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let join = |xs: &[f64]| {
            xs.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let (az, el) = (self.azimuth_axis(), self.elevation_axis());
        writeln!(w, "version: {FORMAT_VERSION}")?;
        writeln!(w, "classes: {}", self.n_classes())?;
        writeln!(w, "class_names: {}", self.class_names.join(" "))?;
        writeln!(w, "freqs_ghz: {}", join(self.frequencies_ghz()))?;
        writeln!(w, "azimuth: {} {} {}", az.start, az.step, az.count)?;
        writeln!(w, "elevation: {} {} {}", el.start, el.step, el.count)?;
        for g in &self.grids {
            for v in &g.values_dbsm {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut line_no = 0usize;
        let mut next = |key: &str| -> Result<Vec<String>> {
            line_no += 1;
            let mut line = String::new();
            let n = r
                .read_line(&mut line)
                .map_err(|e| Error::parse(format!("line {line_no}"), e.to_string()))?;
            if n == 0 || !line.ends_with('\n') {
                return Err(Error::parse(
                    format!("line {line_no}"),
                    format!("unexpected end of header, expected `{key}:`"),
                ));
            }
            let body = line
                .trim_end_matches('\n')
                .strip_prefix(key)
                .and_then(|s| s.strip_prefix(':'))
                .ok_or_else(|| {
                    Error::parse(format!("line {line_no}"), format!("expected `{key}:`"))
                })?;
            Ok(body.split_whitespace().map(str::to_owned).collect())
        };

        let version = next("version")?;
        let classes = next("classes")?;
        let names = next("class_names")?;
        let freqs = next("freqs_ghz")?;
        let az = next("azimuth")?;
        let el = next("elevation")?;

        let version: u32 = parse_single(&version, 1, "version")?;
        if version != FORMAT_VERSION {
            return Err(Error::parse(
                "line 1",
                format!("unsupported version {version}"),
            ));
        }
        let k: usize = parse_single(&classes, 2, "classes")?;
        if names.len() != k {
            return Err(Error::Shape(format!(
                "header declares {k} classes but lists {} names",
                names.len()
            )));
        }
        let freqs = freqs
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::parse("line 4", format!("bad frequency {s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let az = parse_axis(&az, 5)?;
        let el = parse_axis(&el, 6)?;

        let per_class = freqs.len() * az.len() * el.len();
        let mut payload = Vec::new();
        r.read_to_end(&mut payload)
            .map_err(|e| Error::parse("payload", e.to_string()))?;
        let expected = k * per_class * 8;
        if payload.len() != expected {
            return Err(Error::Shape(format!(
                "payload has {} bytes, header implies {expected} ({k} classes x {} freqs x {} az x {} el x 8)",
                payload.len(),
                freqs.len(),
                az.len(),
                el.len()
            )));
        }
        let values: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite value at payload offset {} bytes",
                i * 8
            )));
        }
        let grids = values
            .chunks_exact(per_class)
            .enumerate()
            .map(|(c, vals)| RcsGrid::new(c, freqs.clone(), az, el, vals.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        GridLibrary::new(grids, names)
    }
}

fn parse_single<T: std::str::FromStr>(tokens: &[String], line: usize, key: &str) -> Result<T> {
    match tokens {
        [one] => one
            .parse()
            .map_err(|_| Error::parse(format!("line {line}"), format!("bad {key} {one:?}"))),
        _ => Err(Error::parse(
            format!("line {line}"),
            format!("`{key}` takes exactly one value"),
        )),
    }
}

fn parse_axis(tokens: &[String], line: usize) -> Result<Axis> {
    let loc = format!("line {line}");
    let [start, step, count] = tokens else {
        return Err(Error::parse(loc, "axis needs `start step count`"));
    };
    let start: f64 = start
        .parse()
        .map_err(|_| Error::parse(loc.clone(), format!("bad start {start:?}")))?;
    let step: f64 = step
        .parse()
        .map_err(|_| Error::parse(loc.clone(), format!("bad step {step:?}")))?;
    let count: usize = count
        .parse()
        .map_err(|_| Error::parse(loc.clone(), format!("bad count {count:?}")))?;
    Axis::new(start, step, count).map_err(|e| Error::parse(loc, e.to_string()))
}

pub fn load_library(path: impl AsRef<Path>) -> Result<GridLibrary> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    GridLibrary::read_from(f)
}

pub fn save_library(lib: &GridLibrary, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    lib.write_to(BufWriter::new(f))
        .map_err(|e| Error::io(path, e))
}

/// Shape and amplitude settings for [`synth_library`].
///
/// Every value is `mean_level + class_offset + spectral + angular + common`
/// where each term is bounded in magnitude by its amplitude, so all values
/// lie within `mean_level_dbsm ± (class_offset_db + spectral_db + angular_db
/// + common_angular_db)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthParams {
    pub mean_level_dbsm: f64,
    /// Class offsets are evenly spaced over `±class_offset_db`, assigned to
    /// classes in a seeded random order.
    pub class_offset_db: f64,
    /// Amplitude of the per-class frequency profile.
    pub spectral_db: f64,
    /// Peak of the class-specific aspect pattern.
    pub angular_db: f64,
    /// Peak of an aspect pattern shared by every class.
    pub common_angular_db: f64,
    /// Highest angular harmonic order in azimuth and elevation.
    pub harmonics: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            mean_level_dbsm: -14.0,
            class_offset_db: 0.0,
            spectral_db: 1.0,
            angular_db: 0.0,
            common_angular_db: 0.0,
            harmonics: 3,
        }
    }
}

impl SynthParams {
    fn amplitudes(&self) -> [f64; 4] {
        [
            self.class_offset_db,
            self.spectral_db,
            self.angular_db,
            self.common_angular_db,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean_level_dbsm.is_finite()
            || self.amplitudes().iter().any(|a| !a.is_finite() || *a < 0.0)
        {
            return Err(Error::Parameter(
                "synthetic amplitudes must be finite and non-negative".into(),
            ));
        }
        if self.harmonics == 0 {
            return Err(Error::Parameter("harmonics must be >= 1".into()));
        }
        Ok(())
    }

    /// Closed interval containing every generated value.
    pub fn value_bounds(&self) -> (f64, f64) {
        let span: f64 = self.amplitudes().iter().sum();
        (self.mean_level_dbsm - span, self.mean_level_dbsm + span)
    }
}

pub fn synthetic_class_names(k: usize) -> Vec<String> {
    (0..k)
        .map(|i| match DEFAULT_CLASS_NAMES.get(i) {
            Some(n) => format!("syn-{n}"),
            None => format!("syn-class{i}"),
        })
        .collect()
}

/// Deterministic smooth synthetic signatures on the default axes.
///
/// Each class gets its own constant offset, a cosine profile over
/// frequency whose order differs between classes (so profiles are nearly
/// orthogonal for up to seven classes), and a sum of angular harmonics whose
/// phases drift with frequency. A second harmonic pattern, drawn once, is
/// added to every class. Azimuth harmonics have a 180° period so the
/// patterns are continuous across the symmetry fold.
pub fn synth_library(seed: u64, k: usize, params: &SynthParams) -> Result<GridLibrary> {
    if k < 2 {
        return Err(Error::Parameter(format!(
            "need at least 2 classes, got {k}"
        )));
    }
    params.validate()?;
    let freqs = default_frequencies_ghz();
    let (az, el) = (Axis::default_azimuth(), Axis::default_elevation());
    let mut rank: Vec<usize> = (0..k).collect();
    rank.shuffle(&mut derived_rng(seed, &[0x4F46_4653_4554]));
    let common = angular_pattern(
        &mut derived_rng(seed, &[0x434F_4D4D_4F4E]),
        params.harmonics,
        freqs.len(),
        az,
        el,
        params.common_angular_db,
    );
    let grids = (0..k)
        .map(|c| {
            let offset = params.class_offset_db * (2.0 * rank[c] as f64 / (k - 1) as f64 - 1.0);
            let order = 1 + rank[c] % (freqs.len() / 2).max(1);
            synth_grid(seed, c, offset, order, &common, &freqs, az, el, params)
        })
        .collect::<Result<Vec<_>>>()?;
    GridLibrary::new(grids, synthetic_class_names(k))
}

/// Random sum of angular harmonics over (frequency, azimuth, elevation),
/// scaled so its largest magnitude is `peak`.
fn angular_pattern<R: Rng + ?Sized>(
    rng: &mut R,
    harmonics: usize,
    nf: usize,
    az: Axis,
    el: Axis,
    peak: f64,
) -> Vec<f64> {
    use std::f64::consts::TAU;
    struct Harmonic {
        az_order: f64,
        el_order: f64,
        weight: f64,
        az_phase: f64,
        el_phase: f64,
        drift: f64,
    }
    let mut terms = Vec::new();
    for m in 0..=harmonics {
        for n in 0..=harmonics {
            if m == 0 && n == 0 {
                continue;
            }
            terms.push(Harmonic {
                az_order: m as f64,
                el_order: n as f64,
                weight: rng.sample(StandardNormal),
                az_phase: rng.random_range(0.0..TAU),
                el_phase: rng.random_range(0.0..TAU),
                drift: rng.random_range(-0.5..0.5),
            });
        }
    }
    let mut pattern = Vec::with_capacity(nf * az.len() * el.len());
    for f in 0..nf {
        for ia in 0..az.len() {
            let phi = 2.0 * az.value(ia).to_radians();
            for ie in 0..el.len() {
                let theta = el.value(ie).to_radians();
                pattern.push(
                    terms
                        .iter()
                        .map(|h| {
                            h.weight
                                * (h.az_order * phi + h.az_phase + h.drift * f as f64).cos()
                                * (h.el_order * theta + h.el_phase).cos()
                        })
                        .sum::<f64>(),
                );
            }
        }
    }
    let max = pattern.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if max > 0.0 { peak / max } else { 0.0 };
    pattern.iter_mut().for_each(|v| *v *= scale);
    pattern
}

#[allow(clippy::too_many_arguments)]
fn synth_grid(
    seed: u64,
    class_id: usize,
    offset: f64,
    spectral_order: usize,
    common: &[f64],
    freqs: &[f64],
    az: Axis,
    el: Axis,
    p: &SynthParams,
) -> Result<RcsGrid> {
    use std::f64::consts::{PI, TAU};
    let mut rng = derived_rng(seed, &[0x5947_5249_4453, class_id as u64]);
    let spectral_phase = rng.random_range(0.0..TAU);
    let nf = freqs.len();
    let pattern = angular_pattern(&mut rng, p.harmonics, nf, az, el, p.angular_db);

    let per_freq = az.len() * el.len();
    let mut values = Vec::with_capacity(pattern.len());
    for f in 0..nf {
        let u = if nf > 1 {
            f as f64 / (nf - 1) as f64
        } else {
            0.0
        };
        let spectral = p.spectral_db * (spectral_order as f64 * PI * u + spectral_phase).cos();
        let base = p.mean_level_dbsm + offset + spectral;
        let range = f * per_freq..(f + 1) * per_freq;
        values.extend(
            pattern[range.clone()]
                .iter()
                .zip(&common[range])
                .map(|(v, c)| base + v + c),
        );
    }
    RcsGrid::new(class_id, freqs.to_vec(), az, el, values)
}
