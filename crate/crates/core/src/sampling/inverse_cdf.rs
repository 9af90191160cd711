//! Tabulated inverse-CDF sampling of an unnormalised weight on `ℝ`.
//!
//! The weight is pulled back to `t ∈ (-1, 1)` through `ξ = t / (1 - t²)` and
//! approximated by a piecewise-linear density on an adaptively refined grid.
//! A cell is split until the trapezoid and Kronrod masses agree to
//! `tol · mass · width / 2`, so the tabulated CDF is within `tol` of the
//! exact one.

use rand::Rng as _;

use crate::fourier::quadrature::{gauss_kronrod, real_line, to_real_line, QuadOptions};
use crate::rng::Rng;
use crate::{Error, Result};

const T_MAX: f64 = 1.0 - 1e-9;
const INITIAL_CELLS: usize = 64;
const MIN_WIDTH: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct InverseCdfTable {
    nodes: Vec<f64>,
    dens: Vec<f64>,
    cum: Vec<f64>,
    mass: f64,
}

fn from_real_line(xi: f64) -> f64 {
    if xi == 0.0 {
        0.0
    } else {
        2.0 * xi / (1.0 + (1.0 + 4.0 * xi * xi).sqrt())
    }
}

impl InverseCdfTable {
    /// Tabulates `weight ≥ 0`; fails if its integral is zero or not finite.
    pub fn build(weight: &dyn Fn(f64) -> f64, tol: f64) -> Result<Self> {
        let g = |t: f64| {
            let t = t.clamp(-T_MAX, T_MAX);
            let (xi, jac) = to_real_line(t);
            let w = weight(xi);
            if w == 0.0 {
                0.0
            } else {
                w * jac
            }
        };
        let total = real_line(&|x| weight(x), QuadOptions::with_tol(1e-12 + 1e-3 * tol))
            .map_err(|e| Error::computation("sampling table", e.to_string()))?
            .value;
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::computation("sampling table", format!("weight has mass {total}")));
        }

        let mut nodes = vec![-T_MAX];
        let mut dens = vec![g(-T_MAX)];
        let mut masses = Vec::new();
        let span = 2.0 * T_MAX;
        for k in 0..INITIAL_CELLS {
            let a = -T_MAX + span * k as f64 / INITIAL_CELLS as f64;
            let b = if k + 1 == INITIAL_CELLS {
                T_MAX
            } else {
                -T_MAX + span * (k + 1) as f64 / INITIAL_CELLS as f64
            };
            // Depth-first refinement, left to right, keeps `nodes` sorted.
            let mut stack = vec![(a, b, *dens.last().unwrap(), g(b))];
            while let Some((lo, hi, glo, ghi)) = stack.pop() {
                let (kr, _) = gauss_kronrod(&g, lo, hi);
                let trap = 0.5 * (hi - lo) * (glo + ghi);
                let allowed = tol * total * (hi - lo) / span;
                if (kr - trap).abs() > allowed && hi - lo > MIN_WIDTH {
                    let mid = 0.5 * (lo + hi);
                    let gm = g(mid);
                    stack.push((mid, hi, gm, ghi));
                    stack.push((lo, mid, glo, gm));
                } else {
                    nodes.push(hi);
                    dens.push(ghi);
                    masses.push(trap);
                }
            }
        }
        let mut cum = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for m in &masses {
            acc += m;
            cum.push(acc);
        }
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(Error::computation("sampling table", format!("tabulated mass {acc}")));
        }
        Ok(Self {
            nodes,
            dens,
            cum,
            mass: acc,
        })
    }

    /// Mass of the piecewise-linear approximation.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn sample(&self, rng: &mut Rng) -> f64 {
        let u = rng.random::<f64>() * self.mass;
        let k = self.cum[1..].partition_point(|&c| c <= u).min(self.cells() - 1);
        let (t0, t1) = (self.nodes[k], self.nodes[k + 1]);
        let (g0, g1) = (self.dens[k], self.dens[k + 1]);
        let h = t1 - t0;
        let r = (u - self.cum[k]).max(0.0);
        // Solve g0·s + (g1 - g0)·s²/(2h) = r for s ∈ [0, h].
        let a = (g1 - g0) / (2.0 * h);
        let disc = (g0 * g0 + 4.0 * a * r).max(0.0);
        let denom = g0 + disc.sqrt();
        let s = if denom > 0.0 { 2.0 * r / denom } else { 0.5 * h };
        let t = (t0 + s.clamp(0.0, h)).clamp(-T_MAX, T_MAX);
        to_real_line(t).0
    }

    /// The tabulated CDF at `xi`.
    pub fn cdf(&self, xi: f64) -> f64 {
        let t = from_real_line(xi);
        if t <= self.nodes[0] {
            return 0.0;
        }
        if t >= *self.nodes.last().unwrap() {
            return 1.0;
        }
        let k = self.nodes.partition_point(|&n| n <= t) - 1;
        let (g0, g1) = (self.dens[k], self.dens[k + 1]);
        let h = self.nodes[k + 1] - self.nodes[k];
        let s = t - self.nodes[k];
        (self.cum[k] + g0 * s + (g1 - g0) * s * s / (2.0 * h)) / self.mass
    }
}
