//! Gates of the two circuit families and the state-preparation reflection.
//!
//! Matrices follow the usual conventions exactly, including the global phase
//! of `R_z(α) = diag(e^{-iα/2}, e^{iα/2})`, so dense-oracle tests can compare
//! entries bit for bit.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, TAU};
use std::ops::Mul;

use num_complex::Complex64;

use crate::circuit::CircuitParams;
use crate::statevector::{Block, BlockDiagonalUnitary, DenseMatrix, StateVector};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A single-qubit gate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate2x2(pub [[Complex64; 2]; 2]);

impl Gate2x2 {
    pub const IDENTITY: Gate2x2 = Gate2x2([[ONE, ZERO], [ZERO, ONE]]);

    /// Zero-based entry `(row, col)`.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.0[row][col]
    }

    pub fn adjoint(&self) -> Gate2x2 {
        let m = &self.0;
        Gate2x2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn max_abs_diff(&self, other: &Gate2x2) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        worst
    }

    pub fn unitarity_defect(&self) -> f64 {
        (*self * self.adjoint()).max_abs_diff(&Gate2x2::IDENTITY)
    }

    /// `self ⊗ other`, indexed so that row `2r₁ + r₂` pairs row `r₁` of `self` with row `r₂` of `other`.
    pub fn kron(&self, other: &Gate2x2) -> [[Complex64; 4]; 4] {
        let mut out = [[ZERO; 4]; 4];
        for r1 in 0..2 {
            for c1 in 0..2 {
                let a = self.0[r1][c1];
                for r2 in 0..2 {
                    for c2 in 0..2 {
                        out[2 * r1 + r2][2 * c1 + c2] = a * other.0[r2][c2];
                    }
                }
            }
        }
        out
    }
}

impl Mul for Gate2x2 {
    type Output = Gate2x2;

    fn mul(self, rhs: Gate2x2) -> Gate2x2 {
        let (a, b) = (&self.0, &rhs.0);
        Gate2x2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

pub fn hadamard() -> Gate2x2 {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    Gate2x2([[h, h], [h, -h]])
}

/// `R_z(α) = diag(e^{-iα/2}, e^{iα/2})`.
pub fn rz(alpha: f64) -> Gate2x2 {
    let half = 0.5 * alpha;
    Gate2x2([
        [Complex64::from_polar(1.0, -half), ZERO],
        [ZERO, Complex64::from_polar(1.0, half)],
    ])
}

/// `R_y(γ) = [[cos(γ/2), -sin(γ/2)], [sin(γ/2), cos(γ/2)]]`.
pub fn ry(gamma: f64) -> Gate2x2 {
    let (s, c) = (0.5 * gamma).sin_cos();
    Gate2x2([
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ])
}

/// The data-encoding gate `H R_z(-b) R_z(-a_d x_d) ⋯ R_z(-a_1 x_1) H`.
///
/// Its first column is `(cos(l/2), i sin(l/2))` with `l = b + a·x`.
pub fn u1_block(a: &[f64], b: f64, x: &[f64]) -> Result<Gate2x2> {
    if a.is_empty() || a.len() != x.len() {
        return Err(Error::Argument(format!(
            "frequency of dimension {} paired with input of dimension {}",
            a.len(),
            x.len()
        )));
    }
    let h = hadamard();
    let mut m = h * rz(-b);
    for (aj, xj) in a.iter().zip(x).rev() {
        m = m * rz(-aj * xj);
    }
    Ok(m * h)
}

/// One 4x4 block `U₁ ⊗ U₂` of the trainable unitary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainableBlock {
    pub u1: Gate2x2,
    pub u2: Gate2x2,
    pub product: [[Complex64; 4]; 4],
}

pub fn trainable_block(a: &[f64], b: f64, gamma: f64, x: &[f64]) -> Result<TrainableBlock> {
    check_gamma(gamma)?;
    let u1 = u1_block(a, b, x)?;
    let u2 = ry(gamma);
    Ok(TrainableBlock {
        u1,
        u2,
        product: u1.kron(&u2),
    })
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=TAU).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::Argument(format!("rotation angle {gamma} outside [0, 2π]")))
    }
}

/// Register sizes for `blocks` blocks of size `stride`: the smallest power of two holding them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegisterLayout {
    pub blocks: usize,
    pub stride: usize,
    pub num_qubits: usize,
    pub dim: usize,
    pub pad: usize,
}

pub fn register_layout(blocks: usize, stride: usize) -> RegisterLayout {
    let used = blocks * stride;
    let dim = used.next_power_of_two().max(1);
    RegisterLayout {
        blocks,
        stride,
        num_qubits: dim.trailing_zeros() as usize,
        dim,
        pad: dim - used,
    }
}

/// `U(θ, x) = diag(U₁⁽¹⁾⊗U₂⁽¹⁾, …, U₁⁽ⁿ⁾⊗U₂⁽ⁿ⁾, 1_{n₀})`.
pub fn build_trainable_unitary(theta: &CircuitParams, x: &[f64]) -> Result<BlockDiagonalUnitary> {
    let layout = register_layout(theta.n(), 4);
    let blocks = theta
        .triples()
        .iter()
        .map(|t| trainable_block(&t.a, t.b, t.gamma, x).map(|tb| Block::Four(tb.product)))
        .collect::<Result<Vec<_>>>()?;
    BlockDiagonalUnitary::new(blocks, layout.pad)
}

/// `Ū(x) = diag(U₁(2πA⁽¹⁾, (π/2)B⁽¹⁾, x), …, 1_{n̄₀})`.
pub fn build_reservoir_unitary(
    freqs: &[Vec<f64>],
    bits: &[bool],
    x: &[f64],
) -> Result<BlockDiagonalUnitary> {
    if freqs.len() != bits.len() || freqs.is_empty() {
        return Err(Error::Argument(format!(
            "{} frequency rows but {} phase bits",
            freqs.len(),
            bits.len()
        )));
    }
    let layout = register_layout(freqs.len(), 2);
    let mut scaled = vec![0.0; x.len()];
    let blocks = freqs
        .iter()
        .zip(bits)
        .map(|(row, &bit)| {
            if row.len() != x.len() {
                return Err(Error::Argument(format!(
                    "frequency row of dimension {} for input of dimension {}",
                    row.len(),
                    x.len()
                )));
            }
            for (s, a) in scaled.iter_mut().zip(row) {
                *s = 2.0 * PI * a;
            }
            let b = if bit { FRAC_PI_2 } else { 0.0 };
            u1_block(&scaled, b, x).map(|g| Block::Two(g.0))
        })
        .collect::<Result<Vec<_>>>()?;
    BlockDiagonalUnitary::new(blocks, layout.pad)
}

/// The reflection `V = 2|φ⟩⟨φ| - I` with `φ = (|0⟩ + |ψ⟩)/√(2(1 + ⟨0|ψ⟩))`,
/// where `|ψ⟩` is uniform over `{0, stride, …, stride(n-1)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct StatePrep {
    blocks: usize,
    stride: usize,
    phi: Vec<Complex64>,
}

pub fn build_state_prep(blocks: usize, stride: usize, dim: usize) -> Result<StatePrep> {
    if blocks == 0 || stride == 0 {
        return Err(Error::Argument("state preparation needs at least one block".into()));
    }
    if !dim.is_power_of_two() || dim < blocks * stride {
        return Err(Error::Argument(format!(
            "dimension {dim} cannot hold {blocks} blocks of stride {stride}"
        )));
    }
    let amp = 1.0 / (blocks as f64).sqrt();
    let scale = 1.0 / (2.0 * (1.0 + amp)).sqrt();
    let mut phi = vec![ZERO; dim];
    for i in 0..blocks {
        phi[i * stride] = Complex64::new(amp * scale, 0.0);
    }
    phi[0] += Complex64::new(scale, 0.0);
    Ok(StatePrep { blocks, stride, phi })
}

impl StatePrep {
    pub fn dim(&self) -> usize {
        self.phi.len()
    }

    /// `V v = 2φ⟨φ|v⟩ - v`, in `O(N)`.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "state preparation of dimension {} applied to state of dimension {}",
                self.dim(),
                state.dim()
            )));
        }
        let v = state.amplitudes();
        let overlap: Complex64 = self.phi.iter().zip(v).map(|(p, a)| p.conj() * a).sum();
        let out = self
            .phi
            .iter()
            .zip(v)
            .map(|(p, a)| 2.0 * overlap * p - a)
            .collect();
        Ok(StateVector::from_parts_unchecked(out))
    }

    /// `V|0⟩`, the uniform superposition over block-leading basis states.
    pub fn prepared_state(&self) -> StateVector {
        let zero = StateVector::zero(self.dim().trailing_zeros() as usize);
        self.apply(&zero).expect("dimension matches by construction")
    }

    /// The target `|ψ⟩` written down directly.
    pub fn target_state(&self) -> Vec<Complex64> {
        let amp = Complex64::new(1.0 / (self.blocks as f64).sqrt(), 0.0);
        let mut psi = vec![ZERO; self.dim()];
        for i in 0..self.blocks {
            psi[i * self.stride] = amp;
        }
        psi
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.dim(), |r, c| {
            let outer = 2.0 * self.phi[r] * self.phi[c].conj();
            if r == c {
                outer - ONE
            } else {
                outer
            }
        })
    }
}
