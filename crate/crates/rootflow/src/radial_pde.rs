//! Finite-volume evolution of the nonlocal radial transport equation
//!
//! ```text
//! d/dt psi = d/dx ( psi(x) / A(x) ),   A(x) = (1/x) * integral_0^x psi(y) dy
//! ```
//!
//! The wind `v = -1/A` always points toward the origin, so a first-order
//! conservative upwind scheme (interface values taken from the right cell)
//! is monotone and positivity preserving. Mass leaves only through `x = 0`;
//! the outer boundary has zero inflow.

use crate::grid::{cumulative_interfaces, cumulative_midpoint, RadialDensity, RadialGrid};
use thiserror::Error;

/// Cells whose cumulative average falls below this are treated as vacuum:
/// the transport speed is capped at `1/EPS_VAC` instead of diverging.
pub const DEFAULT_EPS_VAC: f64 = 1e-10;

/// Hard ceiling on the CFL number accepted by `step`.
pub const MAX_CFL: f64 = 0.9;

/// `adaptive_dt` never returns less than `DT_MIN_FACTOR * x_max`.
pub const DT_MIN_FACTOR: f64 = 1e-12;

/// Safety cap on the number of steps a single `evolve` may take.
const MAX_STEPS: u64 = 20_000_000;

#[derive(Debug, Error)]
pub enum PdeError {
    #[error("stability violation: dt = {dt:.6e} exceeds the CFL bound {bound:.6e}")]
    StabilityViolation { dt: f64, bound: f64 },
    #[error("target grid too small: support radius {support:.6e} exceeds lambda * x_max = {reach:.6e}")]
    DomainTooSmall { support: f64, reach: f64 },
    #[error("evolution exceeded {0} steps; configuration is degenerate")]
    StepLimitExceeded(u64),
}

/// `A(x_i) = (1/x_i) * integral_0^{x_i} psi`, midpoint cumulative quadrature.
#[derive(Debug, Clone)]
pub struct CumulativeAverage {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
}

/// `v(x_i) = -1 / max(A(x_i), eps_vac)`; nonpositive everywhere.
#[derive(Debug, Clone)]
pub struct VelocityField {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
}

pub fn cumulative_average(psi: &RadialDensity) -> CumulativeAverage {
    let w = cumulative_midpoint(&psi.values, psi.grid.dx());
    let values = w
        .iter()
        .enumerate()
        .map(|(i, wi)| wi / psi.grid.center(i))
        .collect();
    CumulativeAverage {
        grid: psi.grid,
        values,
    }
}

pub fn velocity(avg: &CumulativeAverage, eps_vac: f64) -> VelocityField {
    assert!(eps_vac > 0.0, "vacuum threshold must be positive");
    let values = avg.values.iter().map(|a| -1.0 / a.max(eps_vac)).collect();
    VelocityField {
        grid: avg.grid,
        values,
    }
}

/// Smallest cumulative average over non-vacuum cells, or `eps_vac` when the
/// whole density is vacuum. This is the effective wind-speed reciprocal that
/// controls the CFL bound.
fn min_effective_average(psi: &RadialDensity, eps_vac: f64) -> f64 {
    let min = cumulative_average(psi)
        .values
        .iter()
        .copied()
        .filter(|a| *a >= eps_vac)
        .fold(f64::INFINITY, f64::min);
    if min.is_finite() {
        min
    } else {
        eps_vac
    }
}

/// CFL time step: `cfl * dx * min_eff A`, floored at `DT_MIN_FACTOR * x_max`.
pub fn adaptive_dt(psi: &RadialDensity, cfl: f64, eps_vac: f64) -> f64 {
    assert!(cfl > 0.0 && cfl <= MAX_CFL, "require 0 < cfl <= {MAX_CFL}");
    let dt = cfl * psi.grid.dx() * min_effective_average(psi, eps_vac);
    dt.max(DT_MIN_FACTOR * psi.grid.x_max)
}

/// One conservative upwind step together with the recorded origin flux.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub density: RadialDensity,
    /// Signed flux through `x = 0`; nonpositive. The discrete mass balance
    /// `mass(after) - mass(before) = dt * origin_flux` holds to rounding.
    pub origin_flux: f64,
}

/// Advance `psi` by `dt`.
///
/// Conservative upwind fluxes with a limited antidiffusive correction. The
/// base interface value is the upwind (right) cell since the wind is
/// negative; the limiter then moves it toward the downwind value as far as
/// the local monotonicity and positivity bounds allow, which transports
/// indicator fronts without the sqrt(dx*t) smearing of plain upwind. The
/// interface velocity uses the exact prefix integral `A_i = P_i / (i*dx)`;
/// the origin flux is the plain upwind `v_1 * psi_0`. Outflow per cell is
/// capped at the cell content so the update stays nonnegative.
pub fn step(psi: &RadialDensity, dt: f64, eps_vac: f64) -> Result<StepResult, PdeError> {
    assert!(dt > 0.0 && dt.is_finite(), "dt must be positive");
    assert!(eps_vac > 0.0, "vacuum threshold must be positive");
    let m = psi.grid.m;
    let dx = psi.grid.dx();

    if psi.values.iter().all(|v| *v == 0.0) {
        // Vacuum fixed point: nothing moves for any dt.
        return Ok(StepResult {
            density: RadialDensity::new(psi.grid, psi.values.clone(), psi.time + dt),
            origin_flux: 0.0,
        });
    }

    let bound = MAX_CFL * dx * min_effective_average(psi, eps_vac);
    if dt > bound * (1.0 + 1e-12) {
        return Err(PdeError::StabilityViolation { dt, bound });
    }

    let prefix = cumulative_interfaces(&psi.values, dx);
    // Courant numbers mu_i = dt*|v_i|/dx at interfaces i = 1..=m-1; the
    // origin (interface 0) reuses interface 1 per the outflow boundary.
    let mu_at = |i: usize| -> f64 {
        let a = prefix[i] / psi.grid.interface(i);
        (dt / dx) / a.max(eps_vac)
    };
    let mut mu = vec![0.0; m + 1];
    mu[0] = mu_at(1);
    for (i, slot) in mu.iter_mut().enumerate().take(m).skip(1) {
        *slot = mu_at(i);
    }
    // mu[m] stays 0: zero inflow through the outer boundary.

    let at = |i: usize| -> f64 {
        if i < m {
            psi.values[i]
        } else {
            0.0
        }
    };

    // Outflow fractions q_i = mu_i * psi_hat_i, built so that
    // psi_i' = psi_i - q_i + q_{i+1} stays within local bounds.
    let mut q = vec![0.0; m + 1];
    q[0] = (mu[0] * at(0)).min(at(0));
    for i in 1..m {
        let up = at(i);
        let down = at(i - 1);
        let upwind_q = (mu[i] * up).min(up);
        let (lo_a, hi_a) = if down < up { (down, up) } else { (up, down) };
        let inflow_lo = at(i + 1).min(up);
        let inflow_hi = at(i + 1).max(up);
        let mu_in = mu[i + 1].clamp(0.0, 1.0);
        // (A): interface value between the adjacent cells;
        // (L/U): the cell stays within [min, max] of itself and its upwind
        // neighbor for any admissible inflow.
        let q_lo = (mu[i] * lo_a).max(up - (1.0 - mu_in) * inflow_hi);
        let q_hi = (mu[i] * hi_a).min(up - (1.0 - mu_in) * inflow_lo);
        q[i] = if q_lo > q_hi {
            upwind_q
        } else {
            (mu[i] * down).clamp(q_lo, q_hi)
        };
        q[i] = q[i].clamp(0.0, up);
    }

    let mut values = Vec::with_capacity(m);
    for i in 0..m {
        let v = psi.values[i] - q[i] + q[i + 1];
        values.push(v.max(0.0));
    }

    Ok(StepResult {
        density: RadialDensity::new(psi.grid, values, psi.time + dt),
        origin_flux: -q[0] * dx / dt,
    })
}

/// One `(t, mass, origin_flux)` record of an evolution.
#[derive(Debug, Clone, Copy)]
pub struct MassSample {
    pub t: f64,
    pub mass: f64,
    pub origin_flux: f64,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub density: RadialDensity,
    pub mass_series: Vec<MassSample>,
}

impl Evolution {
    /// CSV time series, header `t,mass,origin_flux`.
    pub fn series_csv(&self) -> String {
        let mut out = String::from("t,mass,origin_flux\n");
        for s in &self.mass_series {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e}\n",
                s.t, s.mass, s.origin_flux
            ));
        }
        out
    }
}

/// Evolve `psi0` to `t_end` with adaptive CFL steps, landing exactly on
/// `t_end`.
pub fn evolve(
    psi0: &RadialDensity,
    t_end: f64,
    cfl: f64,
    eps_vac: f64,
) -> Result<Evolution, PdeError> {
    assert!((0.0..1.0).contains(&t_end), "require 0 <= t_end < 1");
    let mut density = psi0.clone();
    let mut series = vec![MassSample {
        t: density.time,
        mass: density.mass(),
        origin_flux: 0.0,
    }];
    let target = psi0.time + t_end;
    if density.mass() == 0.0 {
        // Vacuum stays vacuum; skip the crawl at the floored time step.
        density.time = target;
        return Ok(Evolution {
            density,
            mass_series: series,
        });
    }
    let mut steps: u64 = 0;
    while density.time < target {
        if steps >= MAX_STEPS {
            return Err(PdeError::StepLimitExceeded(MAX_STEPS));
        }
        let dt = adaptive_dt(&density, cfl, eps_vac).min(target - density.time);
        let result = step(&density, dt, eps_vac)?;
        density = result.density;
        series.push(MassSample {
            t: density.time - psi0.time,
            mass: density.mass(),
            origin_flux: result.origin_flux,
        });
        steps += 1;
        // Guard against dt underflow next to the target.
        if target - density.time < f64::EPSILON * target.max(1.0) {
            density.time = target;
        }
    }
    Ok(Evolution {
        density,
        mass_series: series,
    })
}

/// The moving-indicator reference solution `chi_{0 <= x <= 1-t}`, with the
/// front cell holding its exact average so the mass is `1 - t` to rounding.
pub fn indicator_solution(t: f64, grid: RadialGrid) -> RadialDensity {
    assert!((0.0..=1.0).contains(&t), "require 0 <= t <= 1");
    let front = 1.0 - t;
    let dx = grid.dx();
    let values = (0..grid.m)
        .map(|i| {
            let left = grid.interface(i);
            let right = left + dx;
            if right <= front {
                1.0
            } else if left < front {
                (front - left) / dx
            } else {
                0.0
            }
        })
        .collect();
    RadialDensity::new(grid, values, t)
}

/// Mass-preserving rescale `psi -> lambda * psi(lambda x)`, resampled onto
/// `target` by linear interpolation between source cell centers.
pub fn rescale(
    psi: &RadialDensity,
    lambda: f64,
    target: RadialGrid,
) -> Result<RadialDensity, PdeError> {
    assert!(lambda > 0.0 && lambda.is_finite(), "lambda must be positive");
    let support = psi.support_radius();
    let reach = lambda * target.x_max;
    if reach < support - 1e-12 * psi.grid.x_max {
        return Err(PdeError::DomainTooSmall { support, reach });
    }
    let interp = |x: f64| -> f64 {
        let grid = psi.grid;
        let dx = grid.dx();
        if x <= grid.center(0) {
            return psi.values[0];
        }
        let last = grid.m - 1;
        if x >= grid.center(last) {
            return if x > grid.x_max { 0.0 } else { psi.values[last] };
        }
        let j = ((x / dx) - 0.5).floor() as usize;
        let t = (x - grid.center(j)) / dx;
        psi.values[j] * (1.0 - t) + psi.values[j + 1] * t
    };
    let values = target
        .centers()
        .map(|x| (lambda * interp(lambda * x)).max(0.0))
        .collect();
    Ok(RadialDensity::new(target, values, psi.time))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(m: usize) -> RadialGrid {
        RadialGrid::new(1.0, m)
    }

    #[test]
    fn cumulative_average_of_constant_is_one() {
        let psi = RadialDensity::from_fn(unit_grid(128), 0.0, |_| 1.0);
        let a = cumulative_average(&psi);
        for v in &a.values {
            assert!((v - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn cumulative_average_of_linear_density() {
        // psi(x) = x gives A(x) = x/2 up to O(dx^2) away from the first cell.
        let g = unit_grid(512);
        let psi = RadialDensity::from_fn(g, 0.0, |x| x);
        let a = cumulative_average(&psi);
        for i in 4..g.m {
            let x = g.center(i);
            assert!(
                (a.values[i] - x / 2.0).abs() < 0.5 * g.dx() * g.dx() / x,
                "i={i}: {} vs {}",
                a.values[i],
                x / 2.0
            );
        }
    }

    #[test]
    fn cumulative_average_of_truncated_indicator() {
        // psi = chi_[0,1] on x_max = 2: A = 1 below 1 and 1/x above, O(dx).
        let g = RadialGrid::new(2.0, 1000);
        let psi = indicator_solution(0.0, g);
        let a = cumulative_average(&psi);
        for i in 0..g.m {
            let x = g.center(i);
            let exact = if x <= 1.0 { 1.0 } else { 1.0 / x };
            assert!((a.values[i] - exact).abs() <= g.dx(), "x={x}");
        }
    }

    #[test]
    fn cumulative_average_product_is_nondecreasing() {
        let g = unit_grid(64);
        let psi = RadialDensity::from_fn(g, 0.0, |x| (1.5 * x).sin().abs());
        let a = cumulative_average(&psi);
        let prods: Vec<f64> = a
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| v * g.center(i))
            .collect();
        assert!(prods.windows(2).all(|w| w[1] >= w[0] - 1e-15));
    }

    #[test]
    fn velocity_of_unit_average_is_minus_one() {
        let psi = RadialDensity::from_fn(unit_grid(64), 0.0, |_| 1.0);
        let v = velocity(&cumulative_average(&psi), DEFAULT_EPS_VAC);
        for x in &v.values {
            assert!((x + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn velocity_of_linear_average_is_closed_form() {
        let g = unit_grid(256);
        let a = CumulativeAverage {
            grid: g,
            values: g.centers().map(|x| x / 2.0).collect(),
        };
        let v = velocity(&a, DEFAULT_EPS_VAC);
        for (i, vi) in v.values.iter().enumerate() {
            let x = g.center(i);
            if x / 2.0 >= DEFAULT_EPS_VAC {
                assert!((vi + 2.0 / x).abs() < 1e-9 / x);
            }
        }
    }

    #[test]
    fn velocity_of_vacuum_is_capped_everywhere() {
        let psi = RadialDensity::zero(unit_grid(32), 0.0);
        let v = velocity(&cumulative_average(&psi), DEFAULT_EPS_VAC);
        for x in &v.values {
            assert!((x + 1.0 / DEFAULT_EPS_VAC).abs() < 1.0);
        }
    }

    #[test]
    fn step_loses_mass_at_unit_rate_for_indicator() {
        let g = RadialGrid::new(1.2, 1200);
        let psi = indicator_solution(0.0, g);
        let dt = adaptive_dt(&psi, 0.5, DEFAULT_EPS_VAC);
        let out = step(&psi, dt, DEFAULT_EPS_VAC).unwrap();
        let loss = psi.mass() - out.density.mass();
        assert!((loss / dt - 1.0).abs() < 10.0 * g.dx(), "rate {}", loss / dt);
    }

    #[test]
    fn step_mass_balance_matches_origin_flux_exactly() {
        let g = unit_grid(300);
        let psi = RadialDensity::from_fn(g, 0.0, |x| 1.0 + (6.0 * x).cos().powi(2));
        let dt = adaptive_dt(&psi, 0.9, DEFAULT_EPS_VAC);
        let out = step(&psi, dt, DEFAULT_EPS_VAC).unwrap();
        let delta = out.density.mass() - psi.mass();
        assert!(
            (delta - dt * out.origin_flux).abs() <= 1e-13 * psi.mass().max(1.0),
            "delta {delta} vs {}",
            dt * out.origin_flux
        );
        assert!(out.origin_flux <= 0.0);
    }

    #[test]
    fn step_on_vacuum_is_identity() {
        let psi = RadialDensity::zero(unit_grid(40), 0.0);
        let out = step(&psi, 1e-6, DEFAULT_EPS_VAC).unwrap();
        assert_eq!(out.density.values, psi.values);
        assert_eq!(out.origin_flux, 0.0);
        assert_eq!(out.density.mass(), 0.0);
    }

    #[test]
    fn step_rejects_dt_above_cfl_bound() {
        let psi = indicator_solution(0.0, RadialGrid::new(1.2, 100));
        let bad = 2.0 * psi.grid.dx();
        match step(&psi, bad, DEFAULT_EPS_VAC) {
            Err(PdeError::StabilityViolation { .. }) => {}
            other => panic!("expected stability violation, got {other:?}"),
        }
    }

    #[test]
    fn step_preserves_positivity_with_detached_support() {
        // Support away from the origin triggers the vacuum cap + limiter.
        let g = unit_grid(200);
        let psi = RadialDensity::from_fn(g, 0.0, |x| if (0.4..0.6).contains(&x) { 1.0 } else { 0.0 });
        let dt = adaptive_dt(&psi, 0.5, DEFAULT_EPS_VAC);
        let out = step(&psi, dt, DEFAULT_EPS_VAC).unwrap();
        assert!(out.density.values.iter().all(|v| *v >= 0.0));
        let delta = out.density.mass() - psi.mass();
        assert!((delta - dt * out.origin_flux).abs() <= 1e-12);
    }

    #[test]
    fn interior_plateau_is_stationary() {
        let g = RadialGrid::new(1.2, 1200);
        let mut psi = indicator_solution(0.0, g);
        while psi.time < 0.25 {
            let dt = adaptive_dt(&psi, 0.5, DEFAULT_EPS_VAC).min(0.25 - psi.time);
            psi = step(&psi, dt, DEFAULT_EPS_VAC).unwrap().density;
        }
        let at = |x: f64| psi.values[(x / g.dx()) as usize];
        assert!((at(0.5) - 1.0).abs() <= g.dx(), "plateau value {}", at(0.5));
    }

    #[test]
    fn adaptive_dt_for_constant_density() {
        let g = RadialGrid::new(1.0, 100);
        let psi = RadialDensity::from_fn(g, 0.0, |_| 1.0);
        let dt = adaptive_dt(&psi, 0.5, DEFAULT_EPS_VAC);
        assert!((dt - 0.005).abs() < 1e-12);
    }

    #[test]
    fn adaptive_dt_for_vacuum_uses_eps_vac() {
        let g = RadialGrid::new(1.0, 100);
        let psi = RadialDensity::zero(g, 0.0);
        let dt = adaptive_dt(&psi, 0.5, DEFAULT_EPS_VAC);
        let expect = (0.5 * g.dx() * DEFAULT_EPS_VAC).max(DT_MIN_FACTOR * g.x_max);
        assert_eq!(dt, expect);
    }

    #[test]
    fn adaptive_dt_for_linear_density_tracks_first_cell() {
        // With the half-cell convention the first-cell average of psi(x) = x
        // equals psi(x_0) = x_0; the continuum value x_0/2 sits within a
        // factor of two.
        let g = unit_grid(256);
        let psi = RadialDensity::from_fn(g, 0.0, |x| x);
        let dt = adaptive_dt(&psi, 0.5, DEFAULT_EPS_VAC);
        let x0 = g.center(0);
        assert!(dt <= 0.5 * g.dx() * (x0 + 1e-12));
        assert!(dt >= 0.5 * g.dx() * (x0 / 2.0) * 0.9);
    }

    #[test]
    fn evolve_identity_at_zero_time() {
        let g = unit_grid(50);
        let psi = RadialDensity::from_fn(g, 0.0, |x| (1.0 - x).max(0.0));
        let out = evolve(&psi, 0.0, 0.5, DEFAULT_EPS_VAC).unwrap();
        assert_eq!(out.density.values, psi.values);
    }

    #[test]
    fn evolve_indicator_matches_exact_front() {
        let g = RadialGrid::new(1.2, 1000);
        let psi0 = indicator_solution(0.0, g);
        let out = evolve(&psi0, 0.5, 0.5, DEFAULT_EPS_VAC).unwrap();
        let exact = indicator_solution(0.5, g);
        assert!(out.density.l1_distance(&exact) <= 10.0 * g.dx());
    }

    #[test]
    fn evolve_indicator_mass_tracks_one_minus_t() {
        let g = RadialGrid::new(1.2, 1000);
        let psi0 = indicator_solution(0.0, g);
        let out = evolve(&psi0, 0.8, 0.5, DEFAULT_EPS_VAC).unwrap();
        assert!((out.density.mass() - 0.2).abs() <= 0.02);
        for s in &out.mass_series {
            if s.t <= 0.8 {
                assert!(
                    (s.mass - (1.0 - s.t)).abs() <= 10.0 * g.dx(),
                    "t={} mass={}",
                    s.t,
                    s.mass
                );
            }
        }
    }

    #[test]
    fn indicator_solution_boundary_cell_is_fractional() {
        let g = RadialGrid::new(1.2, 120);
        for &t in &[0.0, 0.5, 1.0] {
            let psi = indicator_solution(t, g);
            assert!(
                (psi.mass() - (1.0 - t)).abs() < 1e-12,
                "t={t} mass={}",
                psi.mass()
            );
        }
        assert!(indicator_solution(1.0, g).values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rescale_indicator_by_two() {
        let g = unit_grid(2000);
        let psi = indicator_solution(0.0, g);
        let out = rescale(&psi, 2.0, g).unwrap();
        let exact = RadialDensity::from_fn(g, 0.0, |x| if x <= 0.5 { 2.0 } else { 0.0 });
        // Linear interpolation smears the jump over O(dx).
        assert!(out.l1_distance(&exact) <= 4.0 * g.dx());
        assert!((out.mass() - psi.mass()).abs() <= 2.0 * g.dx());
    }

    #[test]
    fn rescale_identity() {
        let g = unit_grid(128);
        let psi = RadialDensity::from_fn(g, 0.0, |x| (-x * x).exp());
        let out = rescale(&psi, 1.0, g).unwrap();
        for (a, b) in out.values.iter().zip(&psi.values) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rescale_preserves_gaussian_mass() {
        // Truncate the tail at r = 3 so the half-scale image still fits.
        let g = RadialGrid::new(6.0, 3000);
        let psi = RadialDensity::from_fn(g, 0.0, |r| {
            if r <= 3.0 {
                2.0 * r * (-r * r).exp()
            } else {
                0.0
            }
        });
        for &lambda in &[0.5, 2.0] {
            let out = rescale(&psi, lambda, g).unwrap();
            assert!(
                (out.mass() - psi.mass()).abs() <= 2.0 * g.dx(),
                "lambda={lambda}"
            );
        }
    }

    #[test]
    fn rescale_rejects_small_domain() {
        let g = unit_grid(100);
        let psi = indicator_solution(0.0, g);
        match rescale(&psi, 0.5, g) {
            Err(PdeError::DomainTooSmall { .. }) => {}
            other => panic!("expected DomainTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn gaussian_profile_has_unit_mass() {
        let g = RadialGrid::new(6.0, 4000);
        let psi = RadialDensity::from_fn(g, 0.0, |r| 2.0 * r * (-r * r).exp());
        assert!((psi.mass() - 1.0).abs() < 1e-3);
    }
}
