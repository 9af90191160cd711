//! Dense statevectors, block-diagonal unitaries and measurement.
//!
//! Both circuit families only ever apply unitaries that are block diagonal
//! with 2x2 or 4x4 blocks followed by an identity tail, so a full `N x N`
//! matrix is never formed on the hot path: [`apply_block_diagonal`] costs
//! `O(N)`. [`DenseMatrix`] exists for oracles and small-`N` checks.

use num_complex::Complex64;
use rand::Rng as _;

use crate::rng::{rng_from_seed, Rng};
use crate::{Error, Result};

/// Tolerance on `|‖ψ‖² - 1|` accepted when building a state from raw amplitudes.
pub const NORM_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A normalized state of `num_qubits` qubits, stored as `2^num_qubits` amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
    num_qubits: usize,
}

impl StateVector {
    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0)
    }

    /// The computational basis state `|k⟩`.
    pub fn basis(num_qubits: usize, k: usize) -> Self {
        let dim = 1usize << num_qubits;
        assert!(k < dim, "basis index {k} out of range for {num_qubits} qubits");
        let mut amps = vec![ZERO; dim];
        amps[k] = ONE;
        Self { amps, num_qubits }
    }

    /// Wraps raw amplitudes, checking the length is a power of two and the norm is one.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::Dimension(format!(
                "statevector length {dim} is not a power of two"
            )));
        }
        let norm: f64 = amps.iter().map(Complex64::norm_sqr).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Argument(format!(
                "statevector not normalized: squared norm {norm}"
            )));
        }
        Ok(Self {
            num_qubits: dim.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    pub(crate) fn from_parts_unchecked(amps: Vec<Complex64>) -> Self {
        debug_assert!(amps.len().is_power_of_two());
        Self {
            num_qubits: amps.len().trailing_zeros() as usize,
            amps,
        }
    }
}

/// A dense square block of a [`BlockDiagonalUnitary`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Block {
    Two([[Complex64; 2]; 2]),
    Four([[Complex64; 4]; 4]),
}

impl Block {
    pub fn size(&self) -> usize {
        match self {
            Block::Two(_) => 2,
            Block::Four(_) => 4,
        }
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        match self {
            Block::Two(m) => m[row][col],
            Block::Four(m) => m[row][col],
        }
    }

    fn apply(&self, input: &[Complex64], out: &mut [Complex64]) {
        match self {
            Block::Two(m) => matvec(m, input, out),
            Block::Four(m) => matvec(m, input, out),
        }
    }

    /// `max |(B B†) - I|` entrywise.
    pub fn unitarity_defect(&self) -> f64 {
        let s = self.size();
        let mut worst = 0.0f64;
        for i in 0..s {
            for j in 0..s {
                let mut acc = ZERO;
                for k in 0..s {
                    acc += self.entry(i, k) * self.entry(j, k).conj();
                }
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }
}

#[inline]
fn matvec<const S: usize>(m: &[[Complex64; S]; S], input: &[Complex64], out: &mut [Complex64]) {
    for (row, o) in m.iter().zip(out.iter_mut()) {
        let mut acc = ZERO;
        for (a, x) in row.iter().zip(input) {
            acc += a * x;
        }
        *o = acc;
    }
}

/// `diag(B_1, …, B_k, 1_pad)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDiagonalUnitary {
    blocks: Vec<Block>,
    pad: usize,
    dim: usize,
}

impl BlockDiagonalUnitary {
    pub fn new(blocks: Vec<Block>, pad: usize) -> Result<Self> {
        let dim = blocks.iter().map(Block::size).sum::<usize>() + pad;
        if !dim.is_power_of_two() {
            return Err(Error::Dimension(format!(
                "block sizes plus padding give {dim}, not a power of two"
            )));
        }
        Ok(Self { blocks, pad, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pad(&self) -> usize {
        self.pad
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Largest entrywise deviation of any block from unitarity.
    pub fn unitarity_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(Block::unitarity_defect)
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.dim);
        let mut offset = 0;
        for b in &self.blocks {
            let s = b.size();
            for r in 0..s {
                for c in 0..s {
                    m.set(offset + r, offset + c, b.entry(r, c));
                }
            }
            offset += s;
        }
        for k in offset..self.dim {
            m.set(k, k, ONE);
        }
        m
    }
}

/// Applies `u` blockwise to `state`.
pub fn apply_block_diagonal(state: &StateVector, u: &BlockDiagonalUnitary) -> Result<StateVector> {
    if u.dim != state.dim() {
        return Err(Error::Dimension(format!(
            "unitary of dimension {} applied to state of dimension {}",
            u.dim,
            state.dim()
        )));
    }
    let input = state.amplitudes();
    let mut out = vec![ZERO; u.dim];
    let mut offset = 0;
    for b in &u.blocks {
        let s = b.size();
        b.apply(&input[offset..offset + s], &mut out[offset..offset + s]);
        offset += s;
    }
    out[offset..].copy_from_slice(&input[offset..]);
    let result = StateVector::from_parts_unchecked(out);
    debug_assert!(
        (result.norm_sqr() - state.norm_sqr()).abs() < 1e-10,
        "block-diagonal application did not preserve the norm"
    );
    Ok(result)
}

/// Born-rule probabilities of measuring each basis state.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementDistribution {
    probs: Vec<f64>,
}

impl MeasurementDistribution {
    /// Builds a distribution from explicit probabilities (must sum to one).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !(0.0..=1.0 + NORM_TOL).contains(p)) {
            return Err(Error::Argument("probabilities must lie in [0, 1]".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::Argument(format!("probabilities sum to {total}")));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Total probability of the outcomes `{m, stride+m, …, stride(count-1)+m}`.
    pub fn residue_sum(&self, stride: usize, count: usize, m: usize) -> f64 {
        (0..count).map(|i| self.probs[stride * i + m]).sum()
    }
}

pub fn exact_distribution(state: &StateVector) -> MeasurementDistribution {
    MeasurementDistribution {
        probs: state.amplitudes().iter().map(Complex64::norm_sqr).collect(),
    }
}

/// Draws `shots` i.i.d. outcomes from `dist`, reproducibly from `seed`.
pub fn sample_shots(dist: &MeasurementDistribution, shots: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = rng_from_seed(seed);
    sample_shots_with(dist, shots, &mut rng)
}

/// [`sample_shots`] drawing from a caller-owned generator.
pub fn sample_shots_with(
    dist: &MeasurementDistribution,
    shots: usize,
    rng: &mut Rng,
) -> Result<Vec<usize>> {
    if shots == 0 {
        return Err(Error::Argument("shot count must be at least 1".into()));
    }
    let mut cdf = Vec::with_capacity(dist.probs.len());
    let mut acc = 0.0;
    for p in &dist.probs {
        acc += p;
        cdf.push(acc);
    }
    let total = acc;
    // Outcomes past the last positive probability are never returned.
    let last = dist.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    Ok((0..shots)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            cdf.partition_point(|&c| c <= u).min(last)
        })
        .collect())
}

/// Row-major dense complex matrix, used for oracles and small-dimension checks.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m.set(k, k, ONE);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m.set(r, c, f(r, c));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[row * self.dim + col] = v;
    }

    pub fn column(&self, col: usize) -> Vec<Complex64> {
        (0..self.dim).map(|r| self.get(r, col)).collect()
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        self.data
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(v).map(|(a, x)| a * x).sum())
            .collect()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = DenseMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.dim, |r, c| self.get(c, r).conj())
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |M M† - I|` entrywise.
    pub fn unitarity_defect(&self) -> f64 {
        self.matmul(&self.adjoint())
            .max_abs_diff(&DenseMatrix::identity(self.dim))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }
}
