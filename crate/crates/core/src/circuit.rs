//! The trainable circuit `C(θ, x) = U(θ, x) V` and its output function.
//!
//! [`evaluate`] always goes through the simulated statevector. The cosine
//! expressions in [`closed_form`] and [`closed_form_probabilities`] are kept
//! separate so they can serve as an oracle for the simulation.

use std::io::{Read, Write};

use crate::gates::{self, build_state_prep, build_trainable_unitary, register_layout, RegisterLayout};
use crate::statevector::{apply_block_diagonal, exact_distribution, sample_shots, MeasurementDistribution, StateVector};
use crate::{Error, Result};

/// One `(a⁽ⁱ⁾, b⁽ⁱ⁾, γ⁽ⁱ⁾)` parameter triple.
#[derive(Clone, Debug, PartialEq)]
pub struct Triple {
    pub a: Vec<f64>,
    pub b: f64,
    pub gamma: f64,
}

impl Triple {
    pub fn new(a: Vec<f64>, b: f64, gamma: f64) -> Self {
        Self { a, b, gamma }
    }

    /// `l(x) = b + a·x`.
    pub fn phase(&self, x: &[f64]) -> f64 {
        self.b + self.a.iter().zip(x).map(|(a, x)| a * x).sum::<f64>()
    }
}

/// Parameters θ of the trainable circuit: `n` triples over inputs in `ℝ^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitParams {
    triples: Vec<Triple>,
    dim: usize,
}

impl CircuitParams {
    pub fn new(triples: Vec<Triple>) -> Result<Self> {
        let dim = triples
            .first()
            .map(|t| t.a.len())
            .ok_or_else(|| Error::Argument("circuit needs at least one triple".into()))?;
        if dim == 0 {
            return Err(Error::Argument("input dimension must be at least 1".into()));
        }
        for (i, t) in triples.iter().enumerate() {
            if t.a.len() != dim {
                return Err(Error::Dimension(format!(
                    "triple {i} has frequency dimension {}, expected {dim}",
                    t.a.len()
                )));
            }
            gates::check_gamma(t.gamma)?;
        }
        Ok(Self { triples, dim })
    }

    pub fn n(&self) -> usize {
        self.triples.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    /// Writes `a1,…,ad,b,gamma` rows with a header.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.dim).map(|j| format!("a{j}")).collect();
        header.push("b".into());
        header.push("gamma".into());
        out.write_record(&header)?;
        for t in &self.triples {
            let mut row: Vec<String> = t.a.iter().map(|v| v.to_string()).collect();
            row.push(t.b.to_string());
            row.push(t.gamma.to_string());
            out.write_record(&row)?;
        }
        out.flush().map_err(|e| Error::io("<theta>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        let cols = header.len();
        if cols < 3 || &header[cols - 2] != "b" || &header[cols - 1] != "gamma" {
            return Err(Error::Config("theta file header must be a1,…,ad,b,gamma".into()));
        }
        let mut triples = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let vals = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Config(format!("theta row {}: {e}", line + 2)))?;
            if vals.len() != cols {
                return Err(Error::Config(format!("theta row {} has {} fields", line + 2, vals.len())));
            }
            triples.push(Triple::new(vals[..cols - 2].to_vec(), vals[cols - 2], vals[cols - 1]));
        }
        Self::new(triples)
    }
}

/// `P_m`: probability of measuring an outcome in `{m, 4+m, …, 4(n-1)+m}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidueProbabilities(pub [f64; 4]);

impl ResidueProbabilities {
    pub fn get(&self, m: usize) -> f64 {
        self.0[m]
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// `R - 2R(P₁ + P₂)`.
    pub fn output(&self, r: f64) -> f64 {
        r - 2.0 * r * (self.0[1] + self.0[2])
    }
}

/// How probabilities are obtained when evaluating the circuit output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    Exact,
    Shots { shots: usize, seed: u64 },
}

/// A trainable circuit with its state preparation already applied.
#[derive(Clone, Debug)]
pub struct TrainableCircuit {
    params: CircuitParams,
    layout: RegisterLayout,
    prepared: StateVector,
}

impl TrainableCircuit {
    pub fn new(params: CircuitParams) -> Self {
        let layout = register_layout(params.n(), 4);
        let prepared = build_state_prep(params.n(), 4, layout.dim)
            .expect("layout always holds its blocks")
            .prepared_state();
        Self {
            params,
            layout,
            prepared,
        }
    }

    pub fn params(&self) -> &CircuitParams {
        &self.params
    }

    pub fn layout(&self) -> RegisterLayout {
        self.layout
    }

    /// `U(θ, x) V |0⟩`.
    pub fn state(&self, x: &[f64]) -> Result<StateVector> {
        if x.len() != self.params.dim() {
            return Err(Error::Dimension(format!(
                "input of dimension {} for circuit over dimension {}",
                x.len(),
                self.params.dim()
            )));
        }
        let u = build_trainable_unitary(&self.params, x)?;
        apply_block_diagonal(&self.prepared, &u)
    }

    pub fn distribution(&self, x: &[f64]) -> Result<MeasurementDistribution> {
        Ok(exact_distribution(&self.state(x)?))
    }

    pub fn exact_probabilities(&self, x: &[f64]) -> Result<ResidueProbabilities> {
        let dist = self.distribution(x)?;
        let n = self.params.n();
        Ok(ResidueProbabilities(std::array::from_fn(|m| dist.residue_sum(4, n, m))))
    }

    pub fn estimate_probabilities(&self, x: &[f64], shots: usize, seed: u64) -> Result<ResidueProbabilities> {
        let dist = self.distribution(x)?;
        let outcomes = sample_shots(&dist, shots, seed)?;
        let used = 4 * self.params.n();
        let mut counts = [0usize; 4];
        for k in outcomes.into_iter().filter(|&k| k < used) {
            counts[k % 4] += 1;
        }
        Ok(ResidueProbabilities(counts.map(|c| c as f64 / shots as f64)))
    }

    /// `f_{n,θ}^R(x) = R - 2R(P₁ + P₂)`.
    pub fn evaluate(&self, x: &[f64], r: f64, mode: EvalMode) -> Result<f64> {
        check_amplitude(r)?;
        let p = match mode {
            EvalMode::Exact => self.exact_probabilities(x)?,
            EvalMode::Shots { shots, seed } => self.estimate_probabilities(x, shots, seed)?,
        };
        Ok(p.output(r))
    }
}

fn check_amplitude(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("amplitude bound R must be positive, got {r}")))
    }
}

pub fn exact_probabilities(theta: &CircuitParams, x: &[f64]) -> Result<ResidueProbabilities> {
    TrainableCircuit::new(theta.clone()).exact_probabilities(x)
}

pub fn estimate_probabilities(theta: &CircuitParams, x: &[f64], shots: usize, seed: u64) -> Result<ResidueProbabilities> {
    TrainableCircuit::new(theta.clone()).estimate_probabilities(x, shots, seed)
}

pub fn evaluate(theta: &CircuitParams, x: &[f64], r: f64, mode: EvalMode) -> Result<f64> {
    TrainableCircuit::new(theta.clone()).evaluate(x, r, mode)
}

/// `g_{n,θ}^R(x) = (1/n) Σ R cos(γ⁽ⁱ⁾) cos(l⁽ⁱ⁾(x))`.
pub fn closed_form(theta: &CircuitParams, x: &[f64], r: f64) -> Result<f64> {
    check_amplitude(r)?;
    check_input(theta, x)?;
    let n = theta.n() as f64;
    Ok(theta
        .triples()
        .iter()
        .map(|t| r * t.gamma.cos() * t.phase(x).cos())
        .sum::<f64>()
        / n)
}

/// The four residue probabilities written out as cosine/sine sums.
pub fn closed_form_probabilities(theta: &CircuitParams, x: &[f64]) -> Result<ResidueProbabilities> {
    check_input(theta, x)?;
    let mut p = [0.0; 4];
    for t in theta.triples() {
        let (sg, cg) = (0.5 * t.gamma).sin_cos();
        let (sl, cl) = (0.5 * t.phase(x)).sin_cos();
        p[0] += (cg * cl).powi(2);
        p[1] += (sg * cl).powi(2);
        p[2] += (cg * sl).powi(2);
        p[3] += (sg * sl).powi(2);
    }
    let n = theta.n() as f64;
    Ok(ResidueProbabilities(p.map(|v| v / n)))
}

fn check_input(theta: &CircuitParams, x: &[f64]) -> Result<()> {
    if x.len() == theta.dim() {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "input of dimension {} for circuit over dimension {}",
            x.len(),
            theta.dim()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn single(a: f64, b: f64, gamma: f64) -> CircuitParams {
        CircuitParams::new(vec![Triple::new(vec![a], b, gamma)]).unwrap()
    }

    #[test]
    fn trivial_circuit_measures_zero_class() {
        let p = exact_probabilities(&single(0.0, 0.0, 0.0), &[0.7]).unwrap();
        assert!((p.0[0] - 1.0).abs() < 1e-15);
        assert!(p.0[1..].iter().all(|v| v.abs() < 1e-15));
        assert!((evaluate(&single(0.0, 0.0, 0.0), &[0.7], 1.0, EvalMode::Exact).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn half_pi_rotation_example() {
        let theta = single(PI, 0.0, FRAC_PI_2);
        let p = exact_probabilities(&theta, &[1.0]).unwrap();
        for (got, want) in p.0.iter().zip([0.0, 0.0, 0.5, 0.5]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!(evaluate(&theta, &[1.0], 1.0, EvalMode::Exact).unwrap().abs() < 1e-15);
    }

    #[test]
    fn evaluate_matches_product_of_cosines() {
        let v = evaluate(&single(2.0, 0.5, 1.0), &[1.0], 1.0, EvalMode::Exact).unwrap();
        assert!((v - 1f64.cos() * 2.5f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn closed_form_examples() {
        let theta = CircuitParams::new(vec![
            Triple::new(vec![0.3], 0.2, FRAC_PI_2),
            Triple::new(vec![-1.0], 2.0, FRAC_PI_2),
        ])
        .unwrap();
        assert!(closed_form(&theta, &[0.9], 2.0).unwrap().abs() < 1e-15);

        let t = Triple::new(vec![1.7], -0.4, 0.9);
        let one = CircuitParams::new(vec![t.clone()]).unwrap();
        let two = CircuitParams::new(vec![t.clone(), t]).unwrap();
        let x = [0.35];
        assert!((closed_form(&one, &x, 1.5).unwrap() - closed_form(&two, &x, 1.5).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn bad_arguments() {
        let theta = single(1.0, 0.0, 0.5);
        assert!(evaluate(&theta, &[0.0], 0.0, EvalMode::Exact).is_err());
        assert!(closed_form(&theta, &[0.0], -1.0).is_err());
        assert!(evaluate(&theta, &[0.0, 1.0], 1.0, EvalMode::Exact).is_err());
        assert!(estimate_probabilities(&theta, &[0.0], 0, 1).is_err());
        assert!(CircuitParams::new(vec![]).is_err());
        assert!(CircuitParams::new(vec![Triple::new(vec![1.0], 0.0, 7.0)]).is_err());
        assert!(CircuitParams::new(vec![Triple::new(vec![1.0], 0.0, 1.0), Triple::new(vec![1.0, 2.0], 0.0, 1.0)]).is_err());
    }

    #[test]
    fn shots_on_deterministic_circuit() {
        let p = estimate_probabilities(&single(0.0, 0.0, 0.0), &[0.1], 1000, 5).unwrap();
        assert_eq!(p.0, [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn shots_reproducible_and_near_exact() {
        let theta = single(PI, 0.0, FRAC_PI_2);
        let s = 100_000;
        let a = estimate_probabilities(&theta, &[1.0], s, 77).unwrap();
        let b = estimate_probabilities(&theta, &[1.0], s, 77).unwrap();
        assert_eq!(a, b);
        assert!((a.0[2] - 0.5).abs() <= 3.0 * (0.25 / s as f64).sqrt());
    }

    #[test]
    fn pad_amplitudes_vanish() {
        let theta = CircuitParams::new(vec![Triple::new(vec![0.4], 0.3, 1.2); 3]).unwrap();
        let circuit = TrainableCircuit::new(theta);
        let state = circuit.state(&[0.8]).unwrap();
        assert_eq!(state.dim(), 16);
        assert!(state.amplitudes()[12..].iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn theta_csv_round_trip() {
        let theta = CircuitParams::new(vec![
            Triple::new(vec![0.1, -2.5], 0.0, 0.3),
            Triple::new(vec![1e-3, 4.0], FRAC_PI_2, 2.0),
        ])
        .unwrap();
        let mut buf = Vec::new();
        theta.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("a1,a2,b,gamma\n"));
        assert_eq!(CircuitParams::read_csv(buf.as_slice()).unwrap(), theta);
    }
}
