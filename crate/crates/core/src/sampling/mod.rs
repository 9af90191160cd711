//! Random parameter constructions.
//!
//! For the trainable circuit, frequencies are drawn from `|Re f̂|` or `|Im f̂|`
//! (chosen by a Bernoulli coin) and each rotation angle is set so that the
//! circuit output is an unbiased estimate of the target. For the reservoir,
//! frequencies come from a fixed density and phases from fair coins.
//!
//! The coin weight is `p = ∫|Re f̂| / L_Σ` and the signed weights are
//! `W = ±L_Σ`, where `L_Σ = ∫|Re f̂| + ∫|Im f̂|`. For a real spectrum
//! `L_Σ = L1`; for complex spectra `L_Σ ≥ L1` is the normaliser that keeps
//! the estimator unbiased, and the output scale `R` must be at least `L_Σ`.

mod density;
pub mod inverse_cdf;
pub mod rejection;

use std::f64::consts::{FRAC_PI_2, TAU};
use std::sync::Arc;

use rand::Rng as _;

pub use density::{student_t_pdf, FrequencyDensity};
pub use inverse_cdf::InverseCdfTable;
pub use rejection::{Envelope, RejectionSampler};

use crate::circuit::{CircuitParams, Triple};
use crate::fourier::quadrature::QuadOptions;
use crate::fourier::{compute_norms, default_tolerance, FourierModel};
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::{Error, Result};

/// Sampler for one branch of the frequency mixture.
#[derive(Clone, Debug)]
pub enum BranchSampler {
    Table(InverseCdfTable),
    Rejection(RejectionSampler),
    /// Used when the branch has zero mass.
    PointMass(Vec<f64>),
}

impl BranchSampler {
    pub fn sample(&self, rng: &mut Rng) -> Result<Vec<f64>> {
        match self {
            BranchSampler::Table(t) => Ok(vec![t.sample(rng)]),
            BranchSampler::Rejection(r) => r.sample(rng),
            BranchSampler::PointMass(p) => Ok(p.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanOptions {
    /// CDF accuracy of the one-dimensional tables.
    pub cdf_tolerance: f64,
    /// Proposal for `d ≥ 2`.
    pub envelope: Envelope,
    /// Seed for the random probes that size the rejection bound.
    pub probe_seed: u64,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            cdf_tolerance: 1e-6,
            envelope: Envelope::default(),
            probe_seed: 0x5EED,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FourierSamplingPlan {
    model: FourierModel,
    /// Probability of drawing from the real-part branch.
    pub p: f64,
    /// Frequencies with density `∝ |Re f̂|`.
    pub nu1: BranchSampler,
    /// Frequencies with density `∝ |Im f̂|`.
    pub nu0: BranchSampler,
    pub l1: f64,
    pub re_mass: f64,
    pub im_mass: f64,
}

impl FourierSamplingPlan {
    pub fn model(&self) -> &FourierModel {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// `L_Σ = ∫|Re f̂| + ∫|Im f̂|`, the magnitude of every signed weight.
    pub fn weight_scale(&self) -> f64 {
        self.re_mass + self.im_mass
    }
}

pub fn build_plan(model: &FourierModel) -> Result<FourierSamplingPlan> {
    build_plan_with(model, &PlanOptions::default())
}

pub fn build_plan_with(model: &FourierModel, options: &PlanOptions) -> Result<FourierSamplingPlan> {
    let l1 = compute_norms(model, None)?.l1;
    if !(l1 > 0.0 && l1.is_finite()) {
        return Err(Error::computation("L1", format!("sampling needs 0 < L1 < ∞, got {l1}")));
    }
    let d = model.dim();
    let opts = QuadOptions::with_tol(default_tolerance(d));
    let (re_mass, im_mass) = if model.has_real_spectrum() {
        (l1, 0.0)
    } else {
        let re = model
            .spectral_integral(|_, v| v.re.abs(), opts)
            .map_err(|e| Error::computation("integral of |Re f^|", e.to_string()))?
            .value;
        let im = model
            .spectral_integral(|_, v| v.im.abs(), opts)
            .map_err(|e| Error::computation("integral of |Im f^|", e.to_string()))?
            .value;
        (re, im)
    };
    let nu1 = branch_sampler(model, re_mass, false, options)?;
    let nu0 = branch_sampler(model, im_mass, true, options)?;
    Ok(FourierSamplingPlan {
        model: model.clone(),
        p: re_mass / (re_mass + im_mass),
        nu1,
        nu0,
        l1,
        re_mass,
        im_mass,
    })
}

fn branch_sampler(model: &FourierModel, mass: f64, imaginary: bool, options: &PlanOptions) -> Result<BranchSampler> {
    let d = model.dim();
    if mass <= 0.0 {
        return Ok(BranchSampler::PointMass(vec![0.0; d]));
    }
    let part = move |v: num_complex::Complex64| if imaginary { v.im.abs() } else { v.re.abs() };
    if d == 1 {
        let weight = |xi: f64| part(model.eval_fhat(&[xi]));
        Ok(BranchSampler::Table(InverseCdfTable::build(&weight, options.cdf_tolerance)?))
    } else {
        let m = model.clone();
        let weight = Arc::new(move |xi: &[f64]| part(m.eval_fhat(xi)));
        let seed = derive_seed(options.probe_seed, &[imaginary as u64]);
        Ok(BranchSampler::Rejection(RejectionSampler::new(
            weight,
            d,
            options.envelope.clone(),
            seed,
        )?))
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Draws `n` triples whose closed-form output is an unbiased estimate of `f`.
pub fn sample_theta(plan: &FourierSamplingPlan, n: usize, r: f64, seed: u64) -> Result<CircuitParams> {
    let mut rng = rng_from_seed(seed);
    sample_theta_with(plan, n, r, &mut rng)
}

pub fn sample_theta_with(plan: &FourierSamplingPlan, n: usize, r: f64, rng: &mut Rng) -> Result<CircuitParams> {
    if n == 0 {
        return Err(Error::Argument("n must be at least 1".into()));
    }
    let scale = plan.weight_scale();
    if !(r.is_finite() && r >= scale) {
        return Err(Error::Argument(format!(
            "output scale R = {r} is below the spectral mass {scale} (R ≥ L1 is required)"
        )));
    }
    let mut triples = Vec::with_capacity(n);
    for _ in 0..n {
        let real_branch = rng.random::<f64>() < plan.p;
        let (xi, b, s) = if real_branch {
            let u = plan.nu1.sample(rng)?;
            let s = sign(plan.model.eval_fhat(&u).re);
            (u, 0.0, s)
        } else {
            let v = plan.nu0.sample(rng)?;
            let s = sign(plan.model.eval_fhat(&v).im);
            (v, FRAC_PI_2, s)
        };
        let arg = scale * s / r;
        assert!((-1.0..=1.0).contains(&arg), "arccos argument {arg} outside [-1, 1]");
        let a = xi.iter().map(|v| TAU * v).collect();
        triples.push(Triple::new(a, b, arg.acos()));
    }
    CircuitParams::new(triples)
}

/// Outcome of best-of-K selection.
#[derive(Clone, Debug)]
pub struct Selection {
    pub best: CircuitParams,
    pub best_index: usize,
    pub scores: Vec<f64>,
}

/// Samples one candidate per seed and keeps the one with the smallest score.
pub fn select_best_theta<S>(
    plan: &FourierSamplingPlan,
    n: usize,
    r: f64,
    candidate_seeds: &[u64],
    score: S,
) -> Result<Selection>
where
    S: Fn(&CircuitParams) -> Result<f64> + Sync + Send,
{
    if candidate_seeds.is_empty() {
        return Err(Error::Argument("best-of-K selection needs K ≥ 1".into()));
    }
    let scored = crate::par::try_map_range(candidate_seeds.len(), |k| {
        let theta = sample_theta(plan, n, r, candidate_seeds[k])?;
        let s = score(&theta)?;
        Ok::<_, Error>((theta, s))
    })?;
    let scores: Vec<f64> = scored.iter().map(|(_, s)| *s).collect();
    let best_index = scores
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let best = scored.into_iter().nth(best_index).unwrap().0;
    Ok(Selection {
        best,
        best_index,
        scores,
    })
}

/// Reservoir frequencies `A` (rows i.i.d. from a density) and phase bits `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReservoirDraw {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<bool>,
    pub seed: u64,
}

impl ReservoirDraw {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<bool>) -> Result<Self> {
        let draw = Self { a, b, seed: 0 };
        draw.validate()?;
        Ok(draw)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.is_empty() || self.a.len() != self.b.len() {
            return Err(Error::Argument(format!(
                "{} frequency rows with {} phase bits",
                self.a.len(),
                self.b.len()
            )));
        }
        let d = self.a[0].len();
        if d == 0 || self.a.iter().any(|row| row.len() != d) {
            return Err(Error::Dimension("frequency rows must share one positive dimension".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn dim(&self) -> usize {
        self.a[0].len()
    }
}

pub fn sample_reservoir(density: &FrequencyDensity, n: usize, d: usize, seed: u64) -> Result<ReservoirDraw> {
    if n == 0 || d == 0 {
        return Err(Error::Argument(format!("reservoir needs n ≥ 1 and d ≥ 1, got n = {n}, d = {d}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for _ in 0..n {
        a.push(density.sample(d, &mut rng));
        b.push(rng.random::<bool>());
    }
    Ok(ReservoirDraw { a, b, seed })
}
