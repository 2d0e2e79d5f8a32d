//! Seeded sampling: standard complex Gaussians via Box-Muller on the ChaCha
//! uniform stream, and i.i.d. radial root laws by inverse CDF.

use super::{PolyError, Provenance, RootEnsemble};
use num_complex::Complex64;
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Uniform in (0, 1]: never returns 0, so logarithms are safe.
fn uniform_pos(rng: &mut ChaCha8Rng) -> f64 {
    (((rng.next_u64() >> 11) + 1) as f64) * (1.0 / 9007199254740992.0)
}

/// Uniform in [0, 1).
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64) * (1.0 / 9007199254740992.0)
}

/// One standard complex Gaussian (components N(0, 1/2), E|z|^2 = 1) by the
/// polar Box-Muller form: `sqrt(-ln u1) * e^{2 pi i u2}`.
pub fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let radius = (-uniform_pos(rng).ln()).sqrt();
    let angle = TAU * uniform(rng);
    Complex64::new(radius * angle.cos(), radius * angle.sin())
}

/// The `n + 1` Taylor coefficients' gammas, in order `k = 0..=n`; the leading
/// one is redrawn on an exact zero so the degree is exact.
pub(crate) fn gaussian_coefficients(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gammas: Vec<Complex64> = (0..=n).map(|_| complex_gaussian(&mut rng)).collect();
    while gammas[n].re == 0.0 && gammas[n].im == 0.0 {
        gammas[n] = complex_gaussian(&mut rng);
    }
    gammas
}

/// Named radial laws for i.i.d. root sampling. The density column is the
/// radius profile `psi(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "law")]
pub enum RadialLaw {
    /// `psi(r) = 2 r e^{-r^2}` on `[0, inf)` (standard complex Gaussian).
    ComplexGaussian,
    /// `psi(r) = 2 r` on `[0, 1]` (uniform on the unit disk).
    UniformDisk,
    /// `psi == 1` on `[0, 1]` (the random-Taylor limit law).
    TaylorLimit,
    /// User-supplied CDF knots, linearly interpolated.
    Table { radii: Vec<f64>, cdf: Vec<f64> },
}

impl RadialLaw {
    /// Inverse radial CDF. Closed form where available; the table law
    /// inverts its piecewise-linear CDF segment by segment.
    fn inverse_cdf(&self, u: f64) -> f64 {
        match self {
            RadialLaw::ComplexGaussian => (-(1.0 - u).max(f64::MIN_POSITIVE).ln()).sqrt(),
            RadialLaw::UniformDisk => u.sqrt(),
            RadialLaw::TaylorLimit => u,
            RadialLaw::Table { radii, cdf } => {
                if u <= cdf[0] {
                    return radii[0];
                }
                let mut lo = 0;
                let mut hi = cdf.len() - 1;
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if cdf[mid] < u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let span = cdf[hi] - cdf[lo];
                if span <= 0.0 {
                    radii[hi]
                } else {
                    let t = (u - cdf[lo]) / span;
                    radii[lo] * (1.0 - t) + radii[hi] * t
                }
            }
        }
    }

    fn validate(&self) -> Result<(), PolyError> {
        if let RadialLaw::Table { radii, cdf } = self {
            if radii.len() != cdf.len() || radii.len() < 2 {
                return Err(PolyError::BadTable);
            }
            if cdf[0] < 0.0 || (cdf[cdf.len() - 1] - 1.0).abs() > 1e-9 {
                return Err(PolyError::BadTable);
            }
            if cdf.windows(2).any(|w| w[1] < w[0]) || radii.windows(2).any(|w| w[1] < w[0]) {
                return Err(PolyError::BadTable);
            }
        }
        Ok(())
    }

    /// Reference radius profile `psi(r)`, if the law has one in closed form.
    pub fn density(&self, r: f64) -> f64 {
        match self {
            RadialLaw::ComplexGaussian => 2.0 * r * (-r * r).exp(),
            RadialLaw::UniformDisk => {
                if r <= 1.0 {
                    2.0 * r
                } else {
                    0.0
                }
            }
            RadialLaw::TaylorLimit => {
                if r <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            RadialLaw::Table { radii, cdf } => {
                // piecewise-constant derivative of the piecewise-linear CDF
                for w in radii.windows(2).zip(cdf.windows(2)) {
                    let ((r0, r1), (c0, c1)) = ((w.0[0], w.0[1]), (w.1[0], w.1[1]));
                    if r >= r0 && r < r1 && r1 > r0 {
                        return (c1 - c0) / (r1 - r0);
                    }
                }
                0.0
            }
        }
    }
}

/// Sample `n` i.i.d. roots: radius by inverse CDF, angle uniform.
pub fn sample_radial_roots(
    law: &RadialLaw,
    n: usize,
    seed: u64,
) -> Result<RootEnsemble, PolyError> {
    law.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let roots: Vec<Complex64> = (0..n)
        .map(|_| {
            let r = law.inverse_cdf(uniform(&mut rng));
            let theta = TAU * uniform(&mut rng);
            Complex64::new(r * theta.cos(), r * theta.sin())
        })
        .collect();
    Ok(RootEnsemble::from_c64(
        &roots,
        64,
        Provenance::Sampled,
        Some(seed),
    ))
}
