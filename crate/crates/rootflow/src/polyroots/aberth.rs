//! Staged Aberth-Ehrlich simultaneous root finding.
//!
//! Stage 1 runs in f64 on an exponent-rescaled copy of the polynomial, from
//! deterministic initial guesses on Newton-polygon circles (angles
//! `2 pi j / n + 0.37`). Stage 2 polishes on a precision ladder
//! (128, 256, ... up to the policy bits): the Newton correction `p/p'` is
//! evaluated at full ladder precision while the pairwise repulsion sum is
//! accumulated in f64, which does not affect the fixed points. Acceptance is
//! a relative-residual test against the dominant coefficient scale at the
//! evaluation point, floored at the evaluation noise of the level, which is
//! also what terminates on root clusters that can no longer be resolved.

use super::complex::{horner_with_derivative, BigComplex, ComplexScratch};
use super::{BigPoly, PolyError, PrecisionPolicy};
use num_complex::Complex64;

pub(crate) struct AberthOutcome {
    pub roots: Vec<BigComplex>,
}

const F64_MAX_ITERS: u32 = 400;
const F64_STOP_REL: f64 = 1e-14;
/// Iterates are clamped to this modulus in the scaled domain (all true roots
/// lie within ~0.5 there), keeping the f64 Horner far from overflow.
const SCALED_CLAMP: f64 = 1.5;

pub(crate) fn solve(p: &BigPoly, policy: &PrecisionPolicy) -> Result<AberthOutcome, PolyError> {
    let bits = policy.bits;

    // Exact zero roots: deflate trailing zero coefficients.
    let zero_count = p
        .coeffs()
        .iter()
        .take_while(|c| c.is_zero())
        .count()
        .min(p.degree());
    let reduced: Vec<BigComplex> = p.coeffs()[zero_count..]
        .iter()
        .map(|c| c.to_prec(bits))
        .collect();
    let d = reduced.len() - 1;
    let mut zeros: Vec<BigComplex> = (0..zero_count).map(|_| BigComplex::new(bits)).collect();
    if d == 0 {
        return Ok(AberthOutcome { roots: zeros });
    }

    // log2 |a_k| of the deflated polynomial; NEG_INFINITY marks zeros.
    let coeff_log2: Vec<f64> = reduced
        .iter()
        .map(|c| c.abs_log2().unwrap_or(f64::NEG_INFINITY))
        .collect();

    if d == 1 {
        // Linear: solve directly.
        let prec = bits;
        let mut scratch = ComplexScratch::new(prec);
        let mut root = BigComplex::new(prec);
        scratch.div(&mut root, &reduced[0], &reduced[1]);
        root.neg_assign();
        zeros.push(root);
        return Ok(AberthOutcome { roots: zeros });
    }

    let radii_log2 = newton_polygon_radii_log2(&coeff_log2);
    debug_assert_eq!(radii_log2.len(), d);

    // Power-of-two domain scale: z = s * zeta with all roots |zeta| <~ 0.5.
    let s_log2 = radii_log2
        .iter()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        .ceil()
        + 1.0;

    let mut roots64 = f64_stage(&coeff_log2, &reduced, s_log2, &radii_log2, d);

    // Lift into the working precision, undoing the exact power-of-two scale.
    let mut roots: Vec<BigComplex> = roots64
        .drain(..)
        .map(|z| {
            let mut r = BigComplex::with_val(bits, z.re, z.im);
            r.re <<= s_log2 as i32;
            r.im <<= s_log2 as i32;
            r
        })
        .collect();

    // Precision ladder.
    let mut levels = Vec::new();
    let mut level = bits.min(128);
    loop {
        levels.push(level);
        if level >= bits {
            break;
        }
        level = (level * 2).min(bits);
    }

    let mut total_iters = 0u32;
    for (li, &lv) in levels.iter().enumerate() {
        let final_level = li == levels.len() - 1;
        let target_log2 = if final_level {
            policy.residual_tol_log2
        } else {
            -(lv as f64) / 2.0
        };
        // Evaluation noise floor: residuals below it are indistinguishable
        // from zero at this precision; clusters terminate here.
        let floor_log2 = ((d + 1) as f64).log2() + 4.0 - lv as f64;
        let accept_log2 = target_log2.max(floor_log2);

        let coeffs_lv: Vec<BigComplex> = reduced.iter().map(|c| c.to_prec(lv)).collect();
        let mut scratch = ComplexScratch::new(lv);
        let mut value = BigComplex::new(lv);
        let mut deriv = BigComplex::new(lv);
        let mut newton = BigComplex::new(lv);
        let mut denom_big = BigComplex::new(lv);
        let mut w = BigComplex::new(lv);
        let mut done = vec![false; d];

        for _ in 0..policy.max_iters.max(1) {
            total_iters += 1;
            let shadows: Vec<Complex64> = roots.iter().map(|z| z.to_c64()).collect();
            let mut all_done = true;
            let mut updates: Vec<(usize, BigComplex)> = Vec::new();
            for j in 0..d {
                if done[j] {
                    continue;
                }
                let zj = roots[j].to_prec(lv);
                horner_with_derivative(&coeffs_lv, &zj, &mut scratch, &mut value, &mut deriv);
                let res_log2 = value.abs_log2().unwrap_or(f64::NEG_INFINITY)
                    - scale_log2(&coeff_log2, zj.abs_log2());
                if res_log2 <= accept_log2 {
                    done[j] = true;
                    continue;
                }
                all_done = false;
                if deriv.is_zero() {
                    // Deterministic nudge off the stationary point.
                    let mut nudged = zj.clone();
                    nudged.re += 2f64.powf(s_log2 - lv as f64 / 2.0);
                    updates.push((j, nudged));
                    continue;
                }
                scratch.div(&mut newton, &value, &deriv);
                // Repulsion sum in f64: only steers the path, not the limit.
                let repulsion = repulsion_sum(&shadows, j);
                let (nc, ne) = newton.to_c64_exp();
                let ns = prod_with_exp(nc, ne, repulsion);
                let denom = Complex64::new(1.0 - ns.re, -ns.im);
                if denom.norm_sqr() > 1e-12 && denom.is_finite() {
                    denom_big.re.assign(denom.re);
                    denom_big.im.assign(denom.im);
                    scratch.div(&mut w, &newton, &denom_big);
                } else {
                    w.assign_c(&newton);
                }
                let mut next = zj.clone();
                scratch.sub_assign(&mut next, &w);
                updates.push((j, next));
            }
            for (j, z) in updates {
                roots[j] = z.to_prec(bits);
            }
            if all_done {
                break;
            }
        }

        if final_level && !done.iter().all(|d| *d) {
            // Re-check residuals once more for an accurate report.
            let mut worst_now = f64::NEG_INFINITY;
            for z in roots.iter() {
                let zj = z.to_prec(lv);
                horner_with_derivative(&coeffs_lv, &zj, &mut scratch, &mut value, &mut deriv);
                let r = value.abs_log2().unwrap_or(f64::NEG_INFINITY)
                    - scale_log2(&coeff_log2, zj.abs_log2());
                worst_now = worst_now.max(r);
            }
            if worst_now > accept_log2 {
                return Err(PolyError::NoConvergence {
                    iterations: total_iters,
                    worst_residual_log2: worst_now,
                });
            }
        }
    }

    zeros.extend(roots);
    Ok(AberthOutcome { roots: zeros })
}

use rug::Assign;

/// `log2 max_k |a_k| |z|^k`: the dominant-term magnitude at `|z|`, the
/// backward-error scale for residual acceptance.
fn scale_log2(coeff_log2: &[f64], z_abs_log2: Option<f64>) -> f64 {
    let lz = match z_abs_log2 {
        Some(l) => l,
        None => return coeff_log2[0],
    };
    coeff_log2
        .iter()
        .enumerate()
        .filter(|(_, l)| l.is_finite())
        .map(|(k, l)| l + k as f64 * lz)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Per-root initial radii (log2) from the concave majorant of
/// `(k, log2 |a_k|)`: edge slopes give the classic cluster radii estimates.
fn newton_polygon_radii_log2(coeff_log2: &[f64]) -> Vec<f64> {
    let pts: Vec<(usize, f64)> = coeff_log2
        .iter()
        .enumerate()
        .filter(|(_, l)| l.is_finite())
        .map(|(k, l)| (k, *l))
        .collect();
    // Upper concave hull by monotone chain.
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &(k, u) in &pts {
        while hull.len() >= 2 {
            let (k1, u1) = hull[hull.len() - 2];
            let (k2, u2) = hull[hull.len() - 1];
            // Middle point must lie strictly above the chord.
            if (u2 - u1) * (k as f64 - k1 as f64) <= (u - u1) * (k2 as f64 - k1 as f64) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((k, u));
    }
    let mut radii = Vec::with_capacity(coeff_log2.len() - 1);
    for e in hull.windows(2) {
        let (k1, u1) = e[0];
        let (k2, u2) = e[1];
        let r = (u1 - u2) / (k2 - k1) as f64;
        for _ in k1..k2 {
            radii.push(r);
        }
    }
    radii
}

/// Multiply a mantissa/exponent pair by an f64 complex, returning an f64
/// complex (saturating rather than overflowing).
fn prod_with_exp(c: Complex64, e: i64, other: Complex64) -> Complex64 {
    let base = c * other;
    if base.norm_sqr() == 0.0 {
        return base;
    }
    let scale = 2f64.powi(e.clamp(-1060, 1060) as i32);
    let out = base * scale;
    if out.is_finite() {
        out
    } else {
        base * 2f64.powi(1020)
    }
}

fn repulsion_sum(shadows: &[Complex64], j: usize) -> Complex64 {
    let zj = shadows[j];
    let mut sum = Complex64::new(0.0, 0.0);
    for (k, zk) in shadows.iter().enumerate() {
        if k == j {
            continue;
        }
        let diff = zj - zk;
        let n2 = diff.norm_sqr();
        if n2 > 0.0 && n2.is_finite() {
            sum += diff.conj() / n2;
        }
    }
    if sum.is_finite() {
        sum
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// The f64 sweep on the rescaled polynomial `q(zeta) = p(s * zeta) / 2^M`.
fn f64_stage(
    coeff_log2: &[f64],
    _reduced: &[BigComplex],
    s_log2: f64,
    radii_log2: &[f64],
    d: usize,
) -> Vec<Complex64> {
    // Scaled coefficients in f64: direction * 2^(La_k + k*s_log2 - M).
    let m_log2 = coeff_log2
        .iter()
        .enumerate()
        .filter(|(_, l)| l.is_finite())
        .map(|(k, l)| l + k as f64 * s_log2)
        .fold(f64::NEG_INFINITY, f64::max);
    let coeffs: Vec<Complex64> = _reduced
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let (dir, _) = c.to_c64_exp();
            let l = coeff_log2[k];
            if !l.is_finite() {
                return Complex64::new(0.0, 0.0);
            }
            let mag = dir.norm();
            if mag == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let unit = dir / mag;
            unit * 2f64.powf(l + k as f64 * s_log2 - m_log2)
        })
        .collect();

    let mut z: Vec<Complex64> = (0..d)
        .map(|j| {
            let rho = 2f64.powf(radii_log2[j] - s_log2);
            let angle = 2.0 * std::f64::consts::PI * j as f64 / d as f64 + 0.37;
            Complex64::new(rho * angle.cos(), rho * angle.sin())
        })
        .collect();

    let eval = |x: Complex64| -> (Complex64, Complex64) {
        let mut v = coeffs[d];
        let mut dv = Complex64::new(0.0, 0.0);
        for k in (0..d).rev() {
            dv = dv * x + v;
            v = v * x + coeffs[k];
        }
        (v, dv)
    };

    for _ in 0..F64_MAX_ITERS {
        let snapshot = z.clone();
        let mut max_rel = 0.0f64;
        for j in 0..d {
            let zj = snapshot[j];
            let (v, dv) = eval(zj);
            if !v.is_finite() || !dv.is_finite() {
                // Deterministic reset inside the root disk.
                z[j] = zj / zj.norm().max(1.0) * 0.45;
                max_rel = f64::INFINITY;
                continue;
            }
            if v.norm_sqr() == 0.0 {
                continue;
            }
            let newton = if dv.norm_sqr() > 0.0 { v / dv } else { Complex64::new(1e-3, 1e-3) };
            let rep = repulsion_sum(&snapshot, j);
            let denom = Complex64::new(1.0, 0.0) - newton * rep;
            let mut wj = if denom.norm_sqr() > 1e-12 {
                newton / denom
            } else {
                newton
            };
            if !wj.is_finite() {
                wj = newton;
            }
            let mut next = zj - wj;
            let nn = next.norm();
            if !next.is_finite() || nn > SCALED_CLAMP {
                next = next / nn.max(1.0) * SCALED_CLAMP;
            }
            z[j] = next;
            max_rel = max_rel.max(wj.norm() / zj.norm().max(1e-12));
        }
        if max_rel <= F64_STOP_REL {
            break;
        }
    }
    z
}
