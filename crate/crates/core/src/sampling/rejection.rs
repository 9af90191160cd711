//! Rejection sampling from an unnormalised weight on `ℝ^d`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng as _;

use super::FrequencyDensity;
use crate::fourier::quadrature::to_real_line;
use crate::rng::{rng_from_seed, Rng};
use crate::{Error, Result};

/// Proposal density for rejection sampling.
#[derive(Clone, Debug, PartialEq)]
pub enum Envelope {
    /// Independent Cauchy coordinates with the given scale.
    ProductCauchy { scale: f64 },
    Density(FrequencyDensity),
}

impl Default for Envelope {
    fn default() -> Self {
        Envelope::ProductCauchy { scale: 1.0 }
    }
}

impl Envelope {
    pub fn pdf(&self, xi: &[f64]) -> f64 {
        match self {
            Envelope::ProductCauchy { scale } => xi
                .iter()
                .map(|v| {
                    let u = v / scale;
                    1.0 / (PI * scale * (1.0 + u * u))
                })
                .product(),
            Envelope::Density(p) => p.pdf(xi),
        }
    }

    pub fn sample(&self, d: usize, rng: &mut Rng) -> Vec<f64> {
        match self {
            Envelope::ProductCauchy { scale } => (0..d)
                .map(|_| scale * (PI * (rng.random::<f64>() - 0.5)).tan())
                .collect(),
            Envelope::Density(p) => p.sample(d, rng),
        }
    }
}

pub type WeightFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct RejectionSampler {
    weight: WeightFn,
    envelope: Envelope,
    dim: usize,
    bound: f64,
}

impl std::fmt::Debug for RejectionSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RejectionSampler")
            .field("envelope", &self.envelope)
            .field("dim", &self.dim)
            .field("bound", &self.bound)
            .finish_non_exhaustive()
    }
}

const BOUND_SAFETY: f64 = 1.5;
const PROBES: usize = 4096;
const MAX_TRIES: usize = 1_000_000;

impl RejectionSampler {
    /// Estimates `sup weight / envelope` on a grid plus random probes and
    /// inflates it by a safety factor.
    pub fn new(weight: WeightFn, dim: usize, envelope: Envelope, seed: u64) -> Result<Self> {
        let mut sup: f64 = 0.0;
        let mut probe = |xi: &[f64]| {
            let q = envelope.pdf(xi);
            if q > 0.0 {
                sup = sup.max(weight(xi) / q);
            }
        };
        // Tensor grid in the compactified coordinate.
        let per_axis = match dim {
            1 => 201,
            2 => 61,
            3 => 21,
            _ => 7,
        };
        let total = (per_axis as u64).saturating_pow(dim as u32).min(200_000);
        let mut idx = vec![0usize; dim];
        let mut point = vec![0.0; dim];
        for _ in 0..total {
            for (axis, &i) in idx.iter().enumerate() {
                let t = -0.995 + 1.99 * i as f64 / (per_axis - 1) as f64;
                point[axis] = to_real_line(t).0;
            }
            probe(&point);
            for i in idx.iter_mut() {
                *i += 1;
                if *i < per_axis {
                    break;
                }
                *i = 0;
            }
        }
        let mut rng = rng_from_seed(seed);
        for _ in 0..PROBES {
            let xi = envelope.sample(dim, &mut rng);
            probe(&xi);
        }
        if !(sup > 0.0 && sup.is_finite()) {
            return Err(Error::computation(
                "rejection envelope",
                format!("could not bound weight/envelope (estimate {sup})"),
            ));
        }
        Ok(Self {
            weight,
            envelope,
            dim,
            bound: BOUND_SAFETY * sup,
        })
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn sample(&self, rng: &mut Rng) -> Result<Vec<f64>> {
        for _ in 0..MAX_TRIES {
            let xi = self.envelope.sample(self.dim, rng);
            let q = self.envelope.pdf(&xi);
            let w = (self.weight)(&xi);
            let cap = self.bound * q;
            if w > cap {
                return Err(Error::computation(
                    "rejection envelope",
                    format!("weight {w:e} exceeds envelope bound {cap:e} at {xi:?}"),
                ));
            }
            if rng.random::<f64>() * cap < w {
                return Ok(xi);
            }
        }
        Err(Error::computation("rejection sampler", "acceptance rate too low"))
    }
}
