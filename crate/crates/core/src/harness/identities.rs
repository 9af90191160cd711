//! Randomised checks that the simulated circuits match their closed forms.

use std::f64::consts::TAU;
use std::fmt;

use rand::Rng as _;

use crate::circuit::{closed_form, closed_form_probabilities, CircuitParams, EvalMode, TrainableCircuit, Triple};
use crate::gates::{build_state_prep, register_layout};
use crate::reservoir::ReservoirCircuit;
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::sampling::ReservoirDraw;
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub trials: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

impl fmt::Display for IdentityCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<24} trials={:<6} max_err={:.3e} tol={:.0e} {}",
            self.name,
            self.trials,
            self.max_error,
            self.tolerance,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

fn random_point(d: usize, rng: &mut Rng) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()
}

fn random_params(rng: &mut Rng) -> Result<CircuitParams> {
    let n = rng.random_range(1..=9);
    let d = rng.random_range(1..=3);
    let triples = (0..n)
        .map(|_| {
            Triple::new(
                (0..d).map(|_| rng.random_range(-3.0..3.0)).collect(),
                rng.random_range(0.0..TAU),
                rng.random_range(0.0..=TAU),
            )
        })
        .collect();
    CircuitParams::new(triples)
}

fn random_draw(rng: &mut Rng) -> Result<ReservoirDraw> {
    let n = rng.random_range(1..=9);
    let d = rng.random_range(1..=3);
    let a = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect();
    let b = (0..n).map(|_| rng.random::<bool>()).collect();
    ReservoirDraw::new(a, b)
}

/// Runs every identity `trials` times from `seed`.
pub fn verify_identities(trials: usize, seed: u64) -> Result<Vec<IdentityCheck>> {
    let mut circuit_err: f64 = 0.0;
    let mut prob_err: f64 = 0.0;
    let mut total_err: f64 = 0.0;
    let mut rng = rng_from_seed(derive_seed(seed, &[1]));
    for _ in 0..trials {
        let theta = random_params(&mut rng)?;
        let x = random_point(theta.dim(), &mut rng);
        let r = rng.random_range(0.5..4.0);
        let c = TrainableCircuit::new(theta.clone());
        let sim = c.evaluate(&x, r, EvalMode::Exact)?;
        circuit_err = circuit_err.max((sim - closed_form(&theta, &x, r)?).abs());
        let p = c.exact_probabilities(&x)?;
        let q = closed_form_probabilities(&theta, &x)?;
        for m in 0..4 {
            prob_err = prob_err.max((p.get(m) - q.get(m)).abs());
        }
        total_err = total_err.max((p.sum() - 1.0).abs());
    }

    let mut pair_err: f64 = 0.0;
    let mut odd_err: f64 = 0.0;
    let mut feature_err: f64 = 0.0;
    let mut rng = rng_from_seed(derive_seed(seed, &[2]));
    for _ in 0..trials {
        let circuit = ReservoirCircuit::new(random_draw(&mut rng)?)?;
        let x = random_point(circuit.dim(), &mut rng);
        let inv_n = 1.0 / circuit.n() as f64;
        let phases = circuit.phases(&x)?;
        for ((even, odd), l) in circuit.odd_probabilities_check(&x)?.into_iter().zip(&phases) {
            pair_err = pair_err.max((even + odd - inv_n).abs());
            odd_err = odd_err.max((odd - (0.5 * l).sin().powi(2) * inv_n).abs());
        }
        let sim = circuit.features(&x)?;
        let exact = circuit.features_closed_form(&x)?;
        for (a, b) in sim.iter().zip(&exact) {
            feature_err = feature_err.max((a - b).abs());
        }
    }

    let mut prep_err: f64 = 0.0;
    let mut prep_trials = 0;
    for stride in [2, 4] {
        for n in 1..=8 {
            let layout = register_layout(n, stride);
            let prep = build_state_prep(n, stride, layout.dim)?;
            let got = prep.prepared_state();
            for (a, b) in got.amplitudes().iter().zip(prep.target_state()) {
                prep_err = prep_err.max((a - b).norm());
            }
            prep_trials += 1;
        }
    }

    Ok(vec![
        IdentityCheck { name: "trainable-output", trials, max_error: circuit_err, tolerance: 1e-10 },
        IdentityCheck { name: "trainable-probabilities", trials, max_error: prob_err, tolerance: 1e-12 },
        IdentityCheck { name: "trainable-total", trials, max_error: total_err, tolerance: 1e-12 },
        IdentityCheck { name: "reservoir-pairs", trials, max_error: pair_err, tolerance: 1e-12 },
        IdentityCheck { name: "reservoir-odd", trials, max_error: odd_err, tolerance: 1e-12 },
        IdentityCheck { name: "reservoir-features", trials, max_error: feature_err, tolerance: 1e-10 },
        IdentityCheck { name: "state-prep", trials: prep_trials, max_error: prep_err, tolerance: 1e-12 },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_identities_hold() {
        let checks = verify_identities(200, 3).unwrap();
        for c in &checks {
            assert!(c.passed(), "{c}");
        }
        assert_eq!(checks.last().unwrap().trials, 16);
    }
}
