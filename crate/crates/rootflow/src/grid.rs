//! Uniform radial grids and cell-averaged densities on them.
//!
//! Cells are `[i*dx, (i+1)*dx]` with centers `x_i = (i + 1/2)*dx`, so no
//! sample ever sits on the coordinate singularity at `x = 0`.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Uniform grid on `[0, x_max]` with `m` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub x_max: f64,
    pub m: usize,
}

impl RadialGrid {
    pub fn new(x_max: f64, m: usize) -> Self {
        assert!(x_max > 0.0 && x_max.is_finite(), "x_max must be positive");
        assert!(m > 0, "cell count must be positive");
        RadialGrid { x_max, m }
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.x_max / self.m as f64
    }

    /// Center of cell `i`.
    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx()
    }

    /// Position of the interface left of cell `i` (interface `i` sits at `i*dx`).
    #[inline]
    pub fn interface(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.m).map(move |i| self.center(i))
    }
}

/// Cell averages of a nonnegative radial density, together with the
/// evolution time `t` (fraction of derivatives taken).
#[derive(Debug, Clone, PartialEq)]
pub struct RadialDensity {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl RadialDensity {
    pub fn new(grid: RadialGrid, values: Vec<f64>, time: f64) -> Self {
        assert_eq!(values.len(), grid.m, "value count must match cell count");
        assert!(
            values.iter().all(|v| v.is_finite() && *v >= 0.0),
            "density values must be finite and nonnegative"
        );
        assert!(time >= 0.0, "time must be nonnegative");
        RadialDensity { grid, values, time }
    }

    /// Sample a pointwise density at cell centers (midpoint cell averages).
    pub fn from_fn(grid: RadialGrid, time: f64, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.centers().map(|x| f(x).max(0.0)).collect();
        Self::new(grid, values, time)
    }

    pub fn zero(grid: RadialGrid, time: f64) -> Self {
        Self::new(grid, vec![0.0; grid.m], time)
    }

    /// Total mass `dx * sum(values)`.
    pub fn mass(&self) -> f64 {
        self.grid.dx() * self.values.iter().sum::<f64>()
    }

    /// L1 distance between two densities on the same grid.
    pub fn l1_distance(&self, other: &RadialDensity) -> f64 {
        assert_eq!(self.grid, other.grid, "densities must share a grid");
        self.grid.dx()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
    }

    /// Rightmost edge of the support, `(last nonzero cell + 1) * dx`, or 0.
    pub fn support_radius(&self) -> f64 {
        match self.values.iter().rposition(|v| *v > 0.0) {
            Some(i) => self.grid.interface(i + 1),
            None => 0.0,
        }
    }

    /// CSV snapshot, header `x,psi`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,psi\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{:.16e},{:.16e}", self.grid.center(i), v);
        }
        out
    }
}

/// Midpoint cumulative integral with the half-cell convention:
/// `W_i = dx * (sum_{j<i} v_j + v_i / 2)`, an approximation of the integral
/// from 0 to the center of cell `i`.
pub fn cumulative_midpoint(values: &[f64], dx: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut below = 0.0;
    for &v in values {
        out.push(dx * (below + 0.5 * v));
        below += v;
    }
    out
}

/// Exact prefix integrals at cell interfaces: `P_i = dx * sum_{j<i} v_j`
/// for `i = 0..=m`. Telescopes exactly, which keeps mass balance exact.
pub fn cumulative_interfaces(values: &[f64], dx: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for &v in values {
        acc += v;
        out.push(dx * acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_are_strictly_increasing_and_positive() {
        let g = RadialGrid::new(2.0, 10);
        let xs: Vec<f64> = g.centers().collect();
        assert!(xs[0] > 0.0);
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
        assert!((xs[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn mass_of_indicator_on_unit_interval() {
        let g = RadialGrid::new(1.0, 1000);
        let psi = RadialDensity::from_fn(g, 0.0, |_| 1.0);
        assert!((psi.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mass_of_zero_density_is_zero() {
        let g = RadialGrid::new(1.0, 16);
        assert_eq!(RadialDensity::zero(g, 0.0).mass(), 0.0);
    }

    #[test]
    fn cumulative_midpoint_of_constant() {
        // integral of 1 up to x_i is x_i
        let g = RadialGrid::new(1.0, 64);
        let w = cumulative_midpoint(&vec![1.0; 64], g.dx());
        for (i, wi) in w.iter().enumerate() {
            assert!((wi - g.center(i)).abs() < 1e-14);
        }
    }

    #[test]
    fn interface_cumulative_telescopes() {
        let vals = [0.3, 0.0, 1.7, 0.25];
        let p = cumulative_interfaces(&vals, 0.5);
        assert_eq!(p.len(), 5);
        assert!((p[4] - 0.5 * vals.iter().sum::<f64>()).abs() < 1e-15);
    }
}
