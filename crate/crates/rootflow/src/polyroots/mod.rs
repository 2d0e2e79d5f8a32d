//! Arbitrary-precision complex polynomials: construction from roots, exact
//! differentiation, simultaneous root finding, the Cauchy-Stieltjes
//! transform, and the first-order root-shift prediction that motivates the
//! radial transport equation.

mod aberth;
mod complex;
mod sampling;

pub use complex::{BigComplex, ComplexScratch};
pub use sampling::{complex_gaussian, RadialLaw};

use complex::horner_with_derivative;
use num_complex::Complex64;
use rug::{ops::CompleteRound, Assign, Float};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("cannot differentiate {degree}-degree polynomial {k} times")]
    DegreeUnderflow { degree: usize, k: usize },
    #[error("root finder did not converge after {iterations} iterations (worst residual 2^{worst_residual_log2:.1}); raise the precision")]
    NoConvergence {
        iterations: u32,
        worst_residual_log2: f64,
    },
    #[error("radial table CDF must be nondecreasing from 0 to 1")]
    BadTable,
    #[error("evaluation point is within the cluster tolerance of root {index}")]
    PoleHit { index: usize },
    #[error("excluded Cauchy-Stieltjes sum is below tolerance; the first-order shift is invalid")]
    SumNearZero,
    #[error("circle kernel is singular on |r - s| <= tolerance")]
    OnCircle,
    #[error("cannot solve a constant polynomial")]
    ConstantPolynomial,
}

/// Working precision, residual acceptance, and iteration budget for the
/// multiprecision pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    /// Mantissa bits for coefficients and roots (>= 64).
    pub bits: u32,
    /// log2 of the relative residual bound for accepted roots;
    /// at least `-bits/2`.
    pub residual_tol_log2: f64,
    /// Aberth iteration cap per precision level.
    pub max_iters: u32,
}

impl PrecisionPolicy {
    pub fn new(bits: u32, residual_tol_log2: f64, max_iters: u32) -> Self {
        assert!(bits >= 64, "precision must be at least 64 bits");
        assert!(
            residual_tol_log2 >= -(bits as f64) / 2.0,
            "residual tolerance must be at least 2^(-bits/2)"
        );
        PrecisionPolicy {
            bits,
            residual_tol_log2,
            max_iters,
        }
    }

    /// Default envelope for a degree-n pipeline: `max(256, 4n)` bits,
    /// residual `2^(-bits/2)`.
    pub fn for_degree(n: usize) -> Self {
        let bits = (4 * n).max(256) as u32;
        Self::new(bits, -(bits as f64) / 2.0, 60)
    }
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        Self::for_degree(64)
    }
}

/// Where a root multiset came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Sampled,
    Solved,
    Rescaled,
}

/// A multiset of complex roots at working precision.
#[derive(Debug, Clone)]
pub struct RootEnsemble {
    pub roots: Vec<BigComplex>,
    pub provenance: Provenance,
    pub seed: Option<u64>,
}

impl RootEnsemble {
    pub fn from_c64(roots: &[Complex64], prec: u32, provenance: Provenance, seed: Option<u64>) -> Self {
        RootEnsemble {
            roots: roots.iter().map(|z| BigComplex::from_c64(prec, *z)).collect(),
            provenance,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// Root moduli as f64 (saturating on overflow).
    pub fn radii(&self) -> Vec<f64> {
        self.roots.iter().map(|z| z.abs_f64()).collect()
    }

    pub fn to_c64(&self) -> Vec<Complex64> {
        self.roots.iter().map(|z| z.to_c64()).collect()
    }

    /// CSV with header `re,im`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re,im\n");
        for z in &self.roots {
            let c = z.to_c64();
            let _ = writeln!(out, "{:.16e},{:.16e}", c.re, c.im);
        }
        out
    }

    /// Multiply every root by a fixed phase (unit-modulus complex number).
    pub fn rotated(&self, phase: Complex64) -> Self {
        let prec = self.roots.first().map(|z| z.prec()).unwrap_or(64);
        let p = BigComplex::from_c64(prec, phase);
        let mut scratch = ComplexScratch::new(prec);
        let roots = self
            .roots
            .iter()
            .map(|z| {
                let mut out = BigComplex::new(z.prec());
                scratch.mul(&mut out, z, &p);
                out
            })
            .collect();
        RootEnsemble {
            roots,
            provenance: self.provenance,
            seed: self.seed,
        }
    }
}

/// Dense complex polynomial, ascending coefficients, exact degree (leading
/// coefficient nonzero except for the zero polynomial).
#[derive(Debug, Clone)]
pub struct BigPoly {
    coeffs: Vec<BigComplex>,
}

impl BigPoly {
    pub fn from_coeffs(mut coeffs: Vec<BigComplex>) -> Self {
        while coeffs.len() > 1 && coeffs.last().map(BigComplex::is_zero).unwrap_or(false) {
            coeffs.pop();
        }
        assert!(!coeffs.is_empty(), "a polynomial needs at least one coefficient");
        BigPoly { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn prec(&self) -> u32 {
        self.coeffs[0].prec()
    }

    pub fn coeffs(&self) -> &[BigComplex] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> &BigComplex {
        &self.coeffs[k]
    }

    /// Evaluate at `z` (working precision of the polynomial).
    pub fn eval(&self, z: &BigComplex) -> BigComplex {
        let prec = self.prec();
        let zz = z.to_prec(prec);
        let mut scratch = ComplexScratch::new(prec);
        let mut v = BigComplex::new(prec);
        let mut d = BigComplex::new(prec);
        horner_with_derivative(&self.coeffs, &zz, &mut scratch, &mut v, &mut d);
        v
    }

    /// Evaluate `p` and `p'` at `z`.
    pub fn eval_with_derivative(&self, z: &BigComplex) -> (BigComplex, BigComplex) {
        let prec = self.prec();
        let zz = z.to_prec(prec);
        let mut scratch = ComplexScratch::new(prec);
        let mut v = BigComplex::new(prec);
        let mut d = BigComplex::new(prec);
        horner_with_derivative(&self.coeffs, &zz, &mut scratch, &mut v, &mut d);
        (v, d)
    }

    /// Round every coefficient to a new precision.
    pub fn to_prec(&self, prec: u32) -> Self {
        BigPoly {
            coeffs: self.coeffs.iter().map(|c| c.to_prec(prec)).collect(),
        }
    }

    /// Text serialization: `degree,bits` header, then one `re,im` pair of
    /// hex floats per coefficient, ascending. Bit-exact round trip.
    pub fn to_text(&self) -> String {
        let mut out = format!("{},{}\n", self.degree(), self.prec());
        for c in &self.coeffs {
            let _ = writeln!(
                out,
                "{},{}",
                c.re.to_string_radix(16, None),
                c.im.to_string_radix(16, None)
            );
        }
        out
    }

    pub fn from_text(text: &str) -> Option<Self> {
        let mut lines = text.lines();
        let header = lines.next()?;
        let (deg_s, bits_s) = header.split_once(',')?;
        let degree: usize = deg_s.trim().parse().ok()?;
        let bits: u32 = bits_s.trim().parse().ok()?;
        let mut coeffs = Vec::with_capacity(degree + 1);
        for line in lines.take(degree + 1) {
            let (re_s, im_s) = line.split_once(',')?;
            let re = Float::parse_radix(re_s.trim(), 16).ok()?.complete(bits);
            let im = Float::parse_radix(im_s.trim(), 16).ok()?.complete(bits);
            coeffs.push(BigComplex { re, im });
        }
        if coeffs.len() != degree + 1 {
            return None;
        }
        Some(BigPoly { coeffs })
    }
}

/// Monic expansion of `prod (z - r_k)` by incremental multiplication at the
/// policy precision.
pub fn poly_from_roots(roots: &RootEnsemble, policy: &PrecisionPolicy) -> BigPoly {
    let prec = policy.bits;
    let mut scratch = ComplexScratch::new(prec);
    let mut coeffs = vec![BigComplex::with_val(prec, 1.0, 0.0)];
    let mut t = BigComplex::new(prec);
    for root in &roots.roots {
        let r = root.to_prec(prec);
        coeffs.push(BigComplex::new(prec));
        // multiply by (z - r): new c_k = c_{k-1} - r * c_k
        for k in (0..coeffs.len()).rev() {
            if k == 0 {
                scratch.mul(&mut t, &coeffs[0], &r);
                coeffs[0].assign_c(&t);
                coeffs[0].neg_assign();
            } else {
                scratch.mul(&mut t, &coeffs[k], &r);
                let (lo, hi) = coeffs.split_at_mut(k);
                hi[0].assign_c(&lo[k - 1]);
                scratch.sub_assign(&mut hi[0], &t);
            }
        }
    }
    BigPoly::from_coeffs(coeffs)
}

/// Exact `k`-fold derivative by coefficient shift and scale.
pub fn differentiate(p: &BigPoly, k: usize) -> Result<BigPoly, PolyError> {
    if k > p.degree() {
        return Err(PolyError::DegreeUnderflow {
            degree: p.degree(),
            k,
        });
    }
    if k == 0 {
        return Ok(p.clone());
    }
    let prec = p.prec();
    let mut coeffs: Vec<BigComplex> = p.coeffs.clone();
    for _ in 0..k {
        let n = coeffs.len();
        let mut next = Vec::with_capacity(n - 1);
        for (j, c) in coeffs.iter().enumerate().skip(1) {
            let mut d = BigComplex::new(prec);
            d.re.assign(&c.re * j as u32);
            d.im.assign(&c.im * j as u32);
            next.push(d);
        }
        coeffs = next;
    }
    Ok(BigPoly::from_coeffs(coeffs))
}

/// Find all roots by the staged Aberth-Ehrlich iteration (f64 sweep from
/// Newton-polygon initial circles, then a precision ladder up to the policy
/// bits). Returns exactly `degree` roots; each accepted root has
/// `|p(root)| <= 2^residual_tol_log2 * scale(root)` up to the evaluation
/// noise floor of the final precision level.
pub fn find_roots(p: &BigPoly, policy: &PrecisionPolicy) -> Result<RootEnsemble, PolyError> {
    if p.degree() == 0 {
        return Err(PolyError::ConstantPolynomial);
    }
    let outcome = aberth::solve(p, policy)?;
    Ok(RootEnsemble {
        roots: outcome.roots,
        provenance: Provenance::Solved,
        seed: None,
    })
}

/// Deterministic random Taylor polynomial `sum gamma_k z^k / k!` with
/// standard complex Gaussian `gamma_k` from the seeded stream. The leading
/// coefficient is redrawn in the (measure-zero) event of an exact zero.
pub fn random_taylor(n: usize, seed: u64) -> BigPoly {
    random_taylor_with_bits(n, seed, PrecisionPolicy::for_degree(n).bits)
}

pub fn random_taylor_with_bits(n: usize, seed: u64, bits: u32) -> BigPoly {
    assert!(n >= 1);
    let gammas = sampling::gaussian_coefficients(n, seed);
    build_coefficient_model(&gammas, bits, |k, inv| {
        if k > 0 {
            *inv /= k as u32;
        }
    })
}

/// The heavier-tailed coefficient model `sum gamma_k z^k (k!)^{-1/4}`,
/// included as a preset without a reference density.
pub fn random_quarter_factorial(n: usize, seed: u64, bits: u32) -> BigPoly {
    assert!(n >= 1);
    let gammas = sampling::gaussian_coefficients(n, seed);
    build_coefficient_model(&gammas, bits, |k, inv| {
        if k > 0 {
            let mut r = Float::with_val(inv.prec(), k as u32);
            r.sqrt_mut();
            r.sqrt_mut();
            *inv /= &r;
        }
    })
}

fn build_coefficient_model(
    gammas: &[Complex64],
    bits: u32,
    update_scale: impl Fn(usize, &mut Float),
) -> BigPoly {
    let mut inv = Float::with_val(bits, 1.0);
    let coeffs = gammas
        .iter()
        .enumerate()
        .map(|(k, g)| {
            update_scale(k, &mut inv);
            let mut c = BigComplex::new(bits);
            c.re.assign(g.re * &inv);
            c.im.assign(g.im * &inv);
            c
        })
        .collect();
    BigPoly::from_coeffs(coeffs)
}

/// Relative tolerance separating true root clusters from precision noise.
pub fn cluster_tolerance_log2(prec: u32) -> f64 {
    -(prec as f64) / 4.0
}

/// `sum_k 1/(z - z_k)`, the log-derivative of the monic polynomial with
/// these roots.
pub fn cauchy_stieltjes(ens: &RootEnsemble, z: &BigComplex) -> Result<BigComplex, PolyError> {
    let prec = z.prec().max(ens.roots.first().map(|r| r.prec()).unwrap_or(64));
    let ctol_log2 = cluster_tolerance_log2(prec);
    let mut scratch = ComplexScratch::new(prec);
    let mut sum = BigComplex::new(prec);
    let mut diff = BigComplex::new(prec);
    let mut term = BigComplex::new(prec);
    let one = BigComplex::with_val(prec, 1.0, 0.0);
    let z_scale = z.abs_log2().unwrap_or(0.0).max(0.0);
    for (i, r) in ens.roots.iter().enumerate() {
        diff.assign_c(&z.to_prec(prec));
        scratch.sub_assign(&mut diff, &r.to_prec(prec));
        match diff.abs_log2() {
            Some(l) if l > ctol_log2 + z_scale => {}
            _ => return Err(PolyError::PoleHit { index: i }),
        }
        scratch.div(&mut term, &one, &diff);
        sum.re += &term.re;
        sum.im += &term.im;
    }
    Ok(sum)
}

/// First-order prediction of the nearby root of `p'`:
/// `z_l - (sum_{k != l} 1/(z_l - z_k))^{-1}`.
pub fn predicted_shift(ens: &RootEnsemble, l: usize) -> Result<BigComplex, PolyError> {
    let prec = ens.roots[l].prec();
    let ctol_log2 = cluster_tolerance_log2(prec);
    let z = &ens.roots[l];
    let z_scale = z.abs_log2().unwrap_or(0.0).max(0.0);
    let mut scratch = ComplexScratch::new(prec);
    let mut sum = BigComplex::new(prec);
    let mut diff = BigComplex::new(prec);
    let mut term = BigComplex::new(prec);
    let one = BigComplex::with_val(prec, 1.0, 0.0);
    for (k, r) in ens.roots.iter().enumerate() {
        if k == l {
            continue;
        }
        diff.assign_c(z);
        scratch.sub_assign(&mut diff, &r.to_prec(prec));
        match diff.abs_log2() {
            Some(dl) if dl > ctol_log2 + z_scale => {}
            _ => return Err(PolyError::PoleHit { index: k }),
        }
        scratch.div(&mut term, &one, &diff);
        sum.re += &term.re;
        sum.im += &term.im;
    }
    let n_minus_1 = (ens.len().max(2) - 1) as f64;
    let floor = ctol_log2 + n_minus_1.log2() - z_scale;
    match sum.abs_log2() {
        Some(sl) if sl > floor => {}
        _ => return Err(PolyError::SumNearZero),
    }
    let mut shift = BigComplex::new(prec);
    scratch.div(&mut shift, &one, &sum);
    let mut out = z.clone();
    scratch.sub_assign(&mut out, &shift);
    Ok(out)
}

/// Tolerance below which `circle_kernel_average` refuses to evaluate.
pub const CIRCLE_TOL: f64 = 1e-12;

/// Closed form of `(1/2pi) int_0^{2pi} 1/(r - s e^{it}) dt`:
/// `0` for `r < s`, `1/r` for `r > s`.
pub fn circle_kernel_average(r: f64, s: f64) -> Result<f64, PolyError> {
    assert!(r > 0.0 && s > 0.0, "radii must be positive");
    if (r - s).abs() <= CIRCLE_TOL * r.max(s) {
        return Err(PolyError::OnCircle);
    }
    Ok(if r < s { 0.0 } else { 1.0 / r })
}

/// Companion quadrature mode: the same integral by the trapezoid rule with
/// `nodes` points (spectrally accurate for this periodic analytic integrand).
pub fn circle_kernel_quadrature(r: f64, s: f64, nodes: usize) -> Result<f64, PolyError> {
    assert!(r > 0.0 && s > 0.0 && nodes > 0);
    if (r - s).abs() <= CIRCLE_TOL * r.max(s) {
        return Err(PolyError::OnCircle);
    }
    let sum: f64 = (0..nodes)
        .map(|j| {
            let t = 2.0 * std::f64::consts::PI * j as f64 / nodes as f64;
            let dr = r - s * t.cos();
            let di = -s * t.sin();
            dr / (dr * dr + di * di)
        })
        .sum();
    Ok(sum / nodes as f64)
}

pub use sampling::sample_radial_roots;
