//! Additive colored Gaussian noise for RCS signatures and uniform angle jitter.
//!
//! Signal power and noise are both taken on the dB m² values directly: the
//! total noise variance `trace(Σ)` is set to `Σ_f σ(f)² / 10^(SNR/10)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Eigenvalues down to this (scaled by the trace) are treated as round-off.
const PSD_TOLERANCE: f64 = 1e-9;
const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// Symmetric PSD covariance kept together with a factor `L` with `Σ = L Lᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ColoredCovariance {
    sigma: DMatrix<f64>,
    factor: DMatrix<f64>,
}

impl ColoredCovariance {
    /// Builds `Σ = M Mᵀ` and keeps `M` as the sampling factor.
    pub fn from_factor(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 {
            return Err(Error::Input("empty covariance factor".into()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite covariance factor".into()));
        }
        let n = m.nrows();
        let mut sigma = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = m.row(i).dot(&m.row(j));
                sigma[(i, j)] = v;
                sigma[(j, i)] = v;
            }
        }
        Ok(Self { sigma, factor: m })
    }

    /// Validates a symmetric PSD matrix and factors it by eigen-decomposition.
    ///
    /// Eigenvalues in `(-tol, 0)` are clipped to zero; anything more negative
    /// is rejected.
    pub fn from_matrix(sigma: DMatrix<f64>) -> Result<Self> {
        let n = sigma.nrows();
        if n == 0 || sigma.ncols() != n {
            return Err(Error::Shape(format!(
                "covariance must be square and non-empty, got {}x{}",
                n,
                sigma.ncols()
            )));
        }
        if sigma.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite covariance entry".into()));
        }
        let asym = (&sigma - sigma.transpose()).amax();
        if asym > SYMMETRY_TOLERANCE {
            return Err(Error::Numerical(format!(
                "covariance not symmetric (max |Σ - Σᵀ| = {asym:e})"
            )));
        }
        let scale = sigma.trace().abs().max(1.0);
        let eig = SymmetricEigen::new(sigma.clone());
        let mut roots = DVector::zeros(n);
        for (i, &l) in eig.eigenvalues.iter().enumerate() {
            if l < -PSD_TOLERANCE * scale {
                return Err(Error::Numerical(format!(
                    "covariance is indefinite (eigenvalue {l:e})"
                )));
            }
            roots[i] = l.max(0.0).sqrt();
        }
        let factor = &eig.eigenvectors * DMatrix::from_diagonal(&roots);
        Ok(Self { sigma, factor })
    }

    pub fn zeros(f: usize) -> Self {
        Self {
            sigma: DMatrix::zeros(f, f),
            factor: DMatrix::zeros(f, f),
        }
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// Total variance.
    pub fn trace(&self) -> f64 {
        self.sigma.trace()
    }

    /// `c Σ` for `c >= 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            sigma: &self.sigma * c,
            factor: &self.factor * c.sqrt(),
        }
    }
}

/// Draws `M` with i.i.d. standard normal entries and returns `Σ = M Mᵀ`.
pub fn sample_colored_covariance<R: Rng + ?Sized>(
    f: usize,
    rng: &mut R,
) -> Result<ColoredCovariance> {
    if f == 0 {
        return Err(Error::Parameter("covariance dimension must be >= 1".into()));
    }
    let m = DMatrix::from_fn(f, f, |_, _| rng.sample::<f64, _>(StandardNormal));
    ColoredCovariance::from_factor(m)
}

/// `Σ_f σ(f)²` of a signature in dB m².
pub fn signature_power(signature: &[f64]) -> f64 {
    signature.iter().map(|s| s * s).sum()
}

/// Total noise variance implied by `snr_db` for this signature.
pub fn noise_power_for_snr(signature: &[f64], snr_db: f64) -> f64 {
    signature_power(signature) / 10f64.powf(snr_db / 10.0)
}

/// Rescales `sigma` so that its trace equals [`noise_power_for_snr`].
pub fn scale_to_snr(
    sigma: &ColoredCovariance,
    signature: &[f64],
    snr_db: f64,
) -> Result<ColoredCovariance> {
    if signature.len() != sigma.dim() {
        return Err(Error::Shape(format!(
            "signature has {} entries, covariance is {}x{}",
            signature.len(),
            sigma.dim(),
            sigma.dim()
        )));
    }
    if signature.iter().any(|s| !s.is_finite()) || snr_db.is_nan() {
        return Err(Error::Input("non-finite signature or SNR".into()));
    }
    let trace = sigma.trace();
    if !(trace > 0.0) {
        return Err(Error::DegeneratePower(format!(
            "covariance trace must be > 0, got {trace}"
        )));
    }
    if signature_power(signature) == 0.0 {
        return Err(Error::DegeneratePower("signature has zero power".into()));
    }
    Ok(sigma.scaled(noise_power_for_snr(signature, snr_db) / trace))
}

/// Adds one draw of `N(0, Σ)` to `signature`.
pub fn apply_acgn<R: Rng + ?Sized>(
    signature: &[f64],
    sigma: &ColoredCovariance,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let f = signature.len();
    if f != sigma.dim() {
        return Err(Error::Shape(format!(
            "signature has {f} entries, covariance is {}x{}",
            sigma.dim(),
            sigma.dim()
        )));
    }
    let k = sigma.factor.ncols();
    let z: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
    let out: Vec<f64> = signature
        .iter()
        .enumerate()
        .map(|(i, s)| s + (0..k).map(|j| sigma.factor[(i, j)] * z[j]).sum::<f64>())
        .collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("noisy signature is not finite".into()));
    }
    Ok(out)
}

/// Per-observation SNR and angle-jitter settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseConfig {
    /// `+inf` disables RCS noise.
    pub snr_db: f64,
    pub jitter_az_deg: f64,
    pub jitter_el_deg: f64,
}

impl NoiseConfig {
    pub fn new(snr_db: f64, jitter_az_deg: f64, jitter_el_deg: f64) -> Result<Self> {
        let cfg = Self {
            snr_db,
            jitter_az_deg,
            jitter_el_deg,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn noiseless() -> Self {
        Self {
            snr_db: f64::INFINITY,
            jitter_az_deg: 0.0,
            jitter_el_deg: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::Parameter(format!("bad SNR {}", self.snr_db)));
        }
        for a in [self.jitter_az_deg, self.jitter_el_deg] {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::Parameter(format!(
                    "jitter half-width must be finite and >= 0, got {a}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_noiseless_rcs(&self) -> bool {
        self.snr_db == f64::INFINITY
    }

    /// Draws a fresh colored covariance, scales it to this SNR and adds
    /// one noise realisation.
    pub fn corrupt_signature<R: Rng + ?Sized>(
        &self,
        clean: &[f64],
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        if self.is_noiseless_rcs() {
            return Ok(clean.to_vec());
        }
        let cov = sample_colored_covariance(clean.len(), rng)?;
        let scaled = scale_to_snr(&cov, clean, self.snr_db)?;
        apply_acgn(clean, &scaled, rng)
    }
}

/// Adds independent `U(-a, a)` jitter to each angle. No wrapping or clamping.
pub fn jitter_angles<R: Rng + ?Sized>(
    azimuth_deg: f64,
    elevation_deg: f64,
    cfg: &NoiseConfig,
    rng: &mut R,
) -> (f64, f64) {
    let draw = |a: f64, rng: &mut R| {
        if a > 0.0 {
            rng.random_range(-a..a)
        } else {
            0.0
        }
    };
    let u_az = draw(cfg.jitter_az_deg, rng);
    let u_el = draw(cfg.jitter_el_deg, rng);
    (azimuth_deg + u_az, elevation_deg + u_el)
}
