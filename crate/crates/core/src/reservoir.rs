//! The reservoir circuit: random frozen frequencies, a feature map read off
//! the measured probabilities, and a linear readout.
//!
//! With `L_j(x) = (π/2)B_j + 2πA_j·x` the even-outcome probabilities satisfy
//! `P̄_{2j} = (1 + cos L_j) / (2n)`, so feature `j` is
//! `2P̄_{2j} - 1/n = cos(L_j) / n` and `F_w(x) = Σ_j w_j cos(L_j(x)) / n`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};

use crate::fourier::FourierModel;
use crate::gates::{build_reservoir_unitary, build_state_prep, register_layout, RegisterLayout};
use crate::sampling::{FrequencyDensity, ReservoirDraw};
use crate::statevector::{apply_block_diagonal, exact_distribution, MeasurementDistribution, StateVector};
use crate::{Error, Result};

/// How features are computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FeatureMode {
    /// From the simulated statevector.
    #[default]
    Simulated,
    /// From the cosine identity, `O(n d)` per point.
    ClosedForm,
}

#[derive(Clone, Debug)]
pub struct ReservoirCircuit {
    draw: ReservoirDraw,
    layout: RegisterLayout,
    prepared: StateVector,
}

impl ReservoirCircuit {
    pub fn new(draw: ReservoirDraw) -> Result<Self> {
        draw.validate()?;
        let layout = register_layout(draw.n(), 2);
        let prepared = build_state_prep(draw.n(), 2, layout.dim)?.prepared_state();
        Ok(Self {
            draw,
            layout,
            prepared,
        })
    }

    pub fn draw(&self) -> &ReservoirDraw {
        &self.draw
    }

    pub fn n(&self) -> usize {
        self.draw.n()
    }

    pub fn dim(&self) -> usize {
        self.draw.dim()
    }

    /// Register width `⌈log₂(2n)⌉`.
    pub fn num_qubits(&self) -> usize {
        self.layout.num_qubits
    }

    pub fn layout(&self) -> RegisterLayout {
        self.layout
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "input of dimension {} for reservoir over dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn state(&self, x: &[f64]) -> Result<StateVector> {
        self.check_input(x)?;
        let u = build_reservoir_unitary(&self.draw.a, &self.draw.b, x)?;
        apply_block_diagonal(&self.prepared, &u)
    }

    pub fn distribution(&self, x: &[f64]) -> Result<MeasurementDistribution> {
        Ok(exact_distribution(&self.state(x)?))
    }

    /// `L_j(x)` for every block.
    pub fn phases(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self
            .draw
            .a
            .iter()
            .zip(&self.draw.b)
            .map(|(a, &b)| {
                let shift = if b { FRAC_PI_2 } else { 0.0 };
                shift + TAU * a.iter().zip(x).map(|(a, x)| a * x).sum::<f64>()
            })
            .collect())
    }

    /// `2P̄_{2j}(x) - 1/n` from the simulated probabilities.
    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        let dist = self.distribution(x)?;
        let inv_n = 1.0 / self.n() as f64;
        Ok((0..self.n()).map(|j| 2.0 * dist.probs()[2 * j] - inv_n).collect())
    }

    /// `cos(L_j(x)) / n`.
    pub fn features_closed_form(&self, x: &[f64]) -> Result<Vec<f64>> {
        let inv_n = 1.0 / self.n() as f64;
        Ok(self.phases(x)?.into_iter().map(|l| l.cos() * inv_n).collect())
    }

    pub fn features_with(&self, x: &[f64], mode: FeatureMode) -> Result<Vec<f64>> {
        match mode {
            FeatureMode::Simulated => self.features(x),
            FeatureMode::ClosedForm => self.features_closed_form(x),
        }
    }

    /// `(P̄_{2j}, P̄_{2j+1})` for every block.
    pub fn odd_probabilities_check(&self, x: &[f64]) -> Result<Vec<(f64, f64)>> {
        let dist = self.distribution(x)?;
        let p = dist.probs();
        Ok((0..self.n()).map(|j| (p[2 * j], p[2 * j + 1])).collect())
    }

    /// Feature rows for a batch of inputs.
    pub fn feature_matrix(&self, xs: &[Vec<f64>], mode: FeatureMode) -> Result<Vec<Vec<f64>>> {
        crate::par::try_map_range(xs.len(), |k| self.features_with(&xs[k], mode))
    }

    /// `F_w(x) = Σ_j w_j · feature_j(x)`.
    pub fn output(&self, w: &ReadoutWeights, x: &[f64], mode: FeatureMode) -> Result<f64> {
        if w.w.len() != self.n() {
            return Err(Error::Dimension(format!("{} weights for {} features", w.w.len(), self.n())));
        }
        let phi = self.features_with(x, mode)?;
        Ok(phi.iter().zip(&w.w).map(|(p, w)| p * w).sum())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Provenance {
    OptimalAnalytic,
    LeastSquares { lambda: f64 },
    User,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutWeights {
    pub w: Vec<f64>,
    pub provenance: Provenance,
}

impl ReadoutWeights {
    pub fn user(w: Vec<f64>) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("readout weights must be finite".into()));
        }
        Ok(Self {
            w,
            provenance: Provenance::User,
        })
    }
}

/// `W_i = (2/π_a(A_i)) ((1 - B_i) Re f̂(A_i) + B_i Im f̂(A_i))`.
pub fn optimal_weights(draw: &ReservoirDraw, model: &FourierModel, density: &FrequencyDensity) -> Result<ReadoutWeights> {
    model.check_dim(draw.dim())?;
    let w = draw
        .a
        .iter()
        .zip(&draw.b)
        .map(|(a, &b)| {
            let fhat = model.eval_fhat(a);
            let part = if b { fhat.im } else { fhat.re };
            let dens = density.pdf(a);
            if dens > 0.0 {
                Ok(2.0 * part / dens)
            } else if fhat.norm() == 0.0 {
                Ok(0.0)
            } else {
                Err(Error::AbsoluteContinuity {
                    point: a.clone(),
                    fhat_abs: fhat.norm(),
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReadoutWeights {
        w,
        provenance: Provenance::OptimalAnalytic,
    })
}

/// Default ridge parameter `1e-10 · n`.
pub fn default_ridge(n: usize) -> f64 {
    1e-10 * n as f64
}

/// Relative singular-value cutoff used to declare an unregularised fit singular.
pub const RANK_TOL: f64 = 1e-12;

/// Minimises `Σ_k (F_w(x_k) - y_k)² + λ‖w‖²`.
pub fn fit_readout(circuit: &ReservoirCircuit, data: &Dataset, lambda: f64, mode: FeatureMode) -> Result<ReadoutWeights> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Argument(format!("ridge parameter must be nonnegative, got {lambda}")));
    }
    if data.is_empty() {
        return Err(Error::Argument("training set is empty".into()));
    }
    let phi = circuit.feature_matrix(&data.xs, mode)?;
    let w = solve_ridge(&phi, &data.ys, lambda)?;
    Ok(ReadoutWeights {
        w,
        provenance: Provenance::LeastSquares { lambda },
    })
}

/// Least squares on the stacked system `[Φ; √λ I] w = [y; 0]` via SVD.
pub fn solve_ridge(phi: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let m = phi.len();
    if m == 0 || m != y.len() {
        return Err(Error::Dimension(format!("{m} feature rows for {} targets", y.len())));
    }
    let n = phi[0].len();
    let extra = if lambda > 0.0 { n } else { 0 };
    let root = lambda.sqrt();
    let a = DMatrix::from_fn(m + extra, n, |r, c| if r < m { phi[r][c] } else if r - m == c { root } else { 0.0 });
    let b = DVector::from_fn(m + extra, |r, _| if r < m { y[r] } else { 0.0 });
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = RANK_TOL * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    if lambda == 0.0 && (rank < n || smax == 0.0) {
        if y.iter().all(|&v| v == 0.0) {
            return Ok(vec![0.0; n]);
        }
        return Err(Error::RankDeficient { rank, cols: n });
    }
    let w = svd
        .solve(&b, cutoff)
        .map_err(|e| Error::computation("least squares", e.to_string()))?;
    Ok(w.iter().copied().collect())
}

pub fn rmse(circuit: &ReservoirCircuit, w: &ReadoutWeights, data: &Dataset, mode: FeatureMode) -> Result<f64> {
    let preds = crate::par::try_map_range(data.len(), |k| circuit.output(w, &data.xs[k], mode))?;
    let se: f64 = preds.iter().zip(&data.ys).map(|(p, y)| (p - y).powi(2)).sum();
    Ok((se / data.len() as f64).sqrt())
}

/// Input/target pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
}

impl Dataset {
    pub fn new(xs: Vec<Vec<f64>>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::Dimension(format!("{} inputs for {} targets", xs.len(), ys.len())));
        }
        if let Some(d) = xs.first().map(Vec::len) {
            if d == 0 || xs.iter().any(|x| x.len() != d) {
                return Err(Error::Dimension("inputs must share one positive dimension".into()));
            }
        }
        Ok(Self { xs, ys })
    }

    /// Samples `target` at the given inputs.
    pub fn from_function(xs: Vec<Vec<f64>>, target: impl Fn(&[f64]) -> f64) -> Self {
        let ys = xs.iter().map(|x| target(x)).collect();
        Self { xs, ys }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.xs.first().map(Vec::len)
    }

    /// Reads `x1,…,xd,y` rows with a header.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let header = rdr.headers()?.clone();
        let cols = header.len();
        let expected: Vec<String> = (1..cols).map(|j| format!("x{j}")).chain(["y".to_string()]).collect();
        if cols < 2 || header.iter().ne(expected.iter().map(String::as_str)) {
            return Err(Error::Config(format!(
                "dataset header must be x1,…,xd,y; found '{}'",
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let vals = rec
                .iter()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Config(format!("dataset line {}: {e}", line + 2)))?;
            ys.push(vals[cols - 1]);
            xs.push(vals[..cols - 1].to_vec());
        }
        Self::new(xs, ys)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let d = self.dim().unwrap_or(1);
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
        header.push("y".into());
        out.write_record(&header)?;
        for (x, y) in self.xs.iter().zip(&self.ys) {
            let mut row: Vec<String> = x.iter().map(f64::to_string).collect();
            row.push(y.to_string());
            out.write_record(&row)?;
        }
        out.flush().map_err(|e| Error::io("<dataset>", e))?;
        Ok(())
    }
}

/// `G_W(x) = (1/n) Σ W_i cos(L_i(x))`, written without the circuit.
pub fn random_feature_model(draw: &ReservoirDraw, w: &[f64], x: &[f64]) -> f64 {
    let n = draw.n() as f64;
    draw.a
        .iter()
        .zip(&draw.b)
        .zip(w)
        .map(|((a, &b), w)| {
            let l = if b { 0.5 * PI } else { 0.0 } + 2.0 * PI * a.iter().zip(x).map(|(a, x)| a * x).sum::<f64>();
            w * l.cos()
        })
        .sum::<f64>()
        / n
}
