//! Error metrics, scaling experiments, CSV and plot output, and the CLI.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod identities;
pub mod plot;

use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::rng::{rng_from_seed, Rng};
use crate::{Error, Result};

pub use config::ExperimentConfig;
pub use experiment::{run_scaling_experiment, ExperimentOutput, ExperimentRecord, Mode};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "QUAPPROX_OUTPUT_DIR";

/// The probability measure `μ` under which `L²` errors are taken.
#[derive(Clone, Debug, PartialEq)]
pub enum ErrorMeasure {
    /// Uniform on `[-half_width, half_width]^d`.
    Uniform { half_width: f64 },
    /// `N(0, sigma² I)`.
    Gaussian { sigma: f64 },
    /// Finitely many weighted points; integrals are exact sums.
    Dirac { points: Vec<Vec<f64>>, weights: Vec<f64> },
    /// Weighted sample points read from a file; integrals are Monte Carlo
    /// over draws from them.
    Empirical { points: Vec<Vec<f64>>, cumulative: Vec<f64> },
}

impl Default for ErrorMeasure {
    fn default() -> Self {
        ErrorMeasure::Uniform { half_width: 1.0 }
    }
}

impl ErrorMeasure {
    pub fn uniform(half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Argument(format!("hypercube half-width must be positive, got {half_width}")));
        }
        Ok(ErrorMeasure::Uniform { half_width })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Argument(format!("measure scale must be positive, got {sigma}")));
        }
        Ok(ErrorMeasure::Gaussian { sigma })
    }

    pub fn dirac(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        check_weighted(&points, &weights)?;
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Argument(format!("Dirac weights must sum to 1, got {total}")));
        }
        Ok(ErrorMeasure::Dirac { points, weights })
    }

    /// Weighted points; weights are normalised.
    pub fn empirical(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        check_weighted(&points, &weights)?;
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        Ok(ErrorMeasure::Empirical { points, cumulative })
    }

    /// Reads `x1,…,xd,weight` rows.
    pub fn from_file(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let header = rdr.headers()?.clone();
        let cols = header.len();
        if cols < 2 || &header[cols - 1] != "weight" {
            return Err(Error::Config(format!(
                "{}: measure file header must be x1,…,xd,weight",
                path.display()
            )));
        }
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let vals = rec?
                .iter()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Config(format!("{} line {}: {e}", path.display(), line + 2)))?;
            weights.push(vals[cols - 1]);
            points.push(vals[..cols - 1].to_vec());
        }
        Self::empirical(points, weights)
    }

    /// Dimension fixed by the measure, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            ErrorMeasure::Dirac { points, .. } | ErrorMeasure::Empirical { points, .. } => Some(points[0].len()),
            _ => None,
        }
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        match self.fixed_dim() {
            Some(k) if k != d => Err(Error::Dimension(format!("measure lives in dimension {k}, model in {d}"))),
            _ => Ok(()),
        }
    }

    pub fn sample(&self, d: usize, rng: &mut Rng) -> Vec<f64> {
        match self {
            ErrorMeasure::Uniform { half_width } => (0..d).map(|_| rng.random_range(-*half_width..=*half_width)).collect(),
            ErrorMeasure::Gaussian { sigma } => (0..d).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect(),
            ErrorMeasure::Dirac { points, weights } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (p, w) in points.iter().zip(weights) {
                    acc += w;
                    if u < acc {
                        return p.clone();
                    }
                }
                points.last().unwrap().clone()
            }
            ErrorMeasure::Empirical { points, cumulative } => {
                let u: f64 = rng.random();
                let k = cumulative.partition_point(|&c| c <= u).min(points.len() - 1);
                points[k].clone()
            }
        }
    }

    pub fn samples(&self, d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = rng_from_seed(seed);
        (0..count).map(|_| self.sample(d, &mut rng)).collect()
    }
}

fn check_weighted(points: &[Vec<f64>], weights: &[f64]) -> Result<()> {
    if points.is_empty() || points.len() != weights.len() {
        return Err(Error::Argument(format!("{} points with {} weights", points.len(), weights.len())));
    }
    let d = points[0].len();
    if d == 0 || points.iter().any(|p| p.len() != d) {
        return Err(Error::Dimension("measure points must share one positive dimension".into()));
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) || weights.iter().all(|&w| w == 0.0) {
        return Err(Error::Argument("measure weights must be nonnegative with positive total".into()));
    }
    Ok(())
}

/// An `L²(μ)` error with its Monte-Carlo standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorEstimate {
    pub estimate: f64,
    pub stderr: f64,
    /// Mean of the squared differences.
    pub mean_square: f64,
}

/// `√mean(s)` for squared differences `s`, with the delta-method standard error
/// `sd(s) / (2 √(K mean(s)))`.
pub fn l2_from_squares(squares: &[f64]) -> ErrorEstimate {
    let k = squares.len() as f64;
    let mean = squares.iter().sum::<f64>() / k;
    let var = if squares.len() > 1 {
        squares.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    let estimate = mean.sqrt();
    let stderr = if mean > 0.0 { (var / k).sqrt() / (2.0 * estimate) } else { 0.0 };
    ErrorEstimate {
        estimate,
        stderr,
        mean_square: mean,
    }
}

/// `(∫ |fa - fb|² dμ)^{1/2}`, by Monte Carlo over `k` draws (exact for Dirac measures).
pub fn l2_error<A, B>(fa: A, fb: B, mu: &ErrorMeasure, d: usize, k: usize, seed: u64) -> Result<ErrorEstimate>
where
    A: Fn(&[f64]) -> Result<f64> + Sync + Send,
    B: Fn(&[f64]) -> Result<f64> + Sync + Send,
{
    mu.check_dim(d)?;
    if let ErrorMeasure::Dirac { points, weights } = mu {
        let sq = crate::par::try_map_range(points.len(), |i| Ok::<_, Error>((fa(&points[i])? - fb(&points[i])?).powi(2)))?;
        let mean: f64 = sq.iter().zip(weights).map(|(s, w)| s * w).sum();
        return Ok(ErrorEstimate {
            estimate: mean.sqrt(),
            stderr: 0.0,
            mean_square: mean,
        });
    }
    if k == 0 {
        return Err(Error::Argument("Monte-Carlo sample count must be positive".into()));
    }
    let pts = mu.samples(d, k, seed);
    let sq = crate::par::try_map_range(k, |i| Ok::<_, Error>((fa(&pts[i])? - fb(&pts[i])?).powi(2)))?;
    Ok(l2_from_squares(&sq))
}

/// Largest grid size accepted by [`sup_error`].
pub const MAX_GRID_POINTS: usize = 20_000_000;

/// Points `-M + 2M i / g`, `i = 0..=g`, on each axis.
pub fn grid_points(m: f64, d: usize, intervals: usize) -> Result<Vec<Vec<f64>>> {
    if intervals == 0 || d == 0 {
        return Err(Error::Argument("grid needs at least one interval per axis and d ≥ 1".into()));
    }
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::Argument(format!("hypercube half-width must be nonnegative, got {m}")));
    }
    let per_axis = intervals + 1;
    let total = (per_axis as u128).pow(d as u32);
    if total > MAX_GRID_POINTS as u128 {
        return Err(Error::Argument(format!("grid of {total} points exceeds the limit {MAX_GRID_POINTS}")));
    }
    let coord = |i: usize| -m + 2.0 * m * (i as f64 / intervals as f64);
    let mut out = Vec::with_capacity(total as usize);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        out.push(idx.iter().map(|&i| coord(i)).collect());
        for i in idx.iter_mut() {
            *i += 1;
            if *i < per_axis {
                break;
            }
            *i = 0;
        }
    }
    Ok(out)
}

/// Maximum of `|fa - fb|` over the tensor grid with `intervals` cells per axis
/// on `[-m, m]^d`: a lower bound on the supremum.
pub fn sup_error<A, B>(fa: A, fb: B, m: f64, d: usize, intervals: usize) -> Result<f64>
where
    A: Fn(&[f64]) -> Result<f64> + Sync + Send,
    B: Fn(&[f64]) -> Result<f64> + Sync + Send,
{
    let pts = grid_points(m, d, intervals)?;
    let diffs = crate::par::try_map_range(pts.len(), |i| Ok::<_, Error>((fa(&pts[i])? - fb(&pts[i])?).abs()))?;
    Ok(diffs.into_iter().fold(0.0, f64::max))
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() || xs.iter().chain(ys).any(|v| *v <= 0.0) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sin(x: &[f64]) -> Result<f64> {
        Ok(x.iter().map(|v| v.sin()).sum())
    }

    #[test]
    fn identical_functions_have_zero_error() {
        let mu = ErrorMeasure::default();
        let e = l2_error(sin, sin, &mu, 2, 500, 1).unwrap();
        assert_eq!(e.estimate, 0.0);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(sup_error(sin, sin, 1.0, 2, 10).unwrap(), 0.0);
    }

    #[test]
    fn constant_offset() {
        let shifted = |x: &[f64]| sin(x).map(|v| v + 0.25);
        for mu in [ErrorMeasure::default(), ErrorMeasure::gaussian(2.0).unwrap()] {
            let e = l2_error(sin, shifted, &mu, 1, 1000, 5).unwrap();
            assert!((e.estimate - 0.25).abs() <= 3.0 * e.stderr + 1e-12);
        }
        assert!((sup_error(sin, shifted, 1.0, 1, 7).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn dirac_measure_is_exact() {
        let mu = ErrorMeasure::dirac(vec![vec![0.0], vec![1.0]], vec![0.25, 0.75]).unwrap();
        let e = l2_error(|x| Ok(x[0]), |_| Ok(0.0), &mu, 1, 0, 0).unwrap();
        assert!((e.estimate - 0.75f64.sqrt()).abs() < 1e-15);
        assert_eq!(e.stderr, 0.0);
        assert!(ErrorMeasure::dirac(vec![vec![0.0]], vec![0.5]).is_err());
    }

    #[test]
    fn grid_doubling_is_monotone() {
        let f = |x: &[f64]| Ok((7.3 * x[0]).sin() * (3.1 * x[1]).cos());
        let zero = |_: &[f64]| Ok(0.0);
        let mut last = 0.0;
        for g in [3, 6, 12, 24, 48] {
            let s = sup_error(f, zero, 1.0, 2, g).unwrap();
            assert!(s >= last);
            last = s;
        }
        let coarse = grid_points(1.0, 1, 5).unwrap();
        let fine = grid_points(1.0, 1, 10).unwrap();
        assert!(coarse.iter().all(|p| fine.contains(p)));
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [4.0, 16.0, 64.0, 256.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        assert!((log_log_slope(&xs, &ys).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn empirical_measure_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mu.csv");
        std::fs::write(&p, "x1,weight\n0.5,1\n-0.5,3\n").unwrap();
        let mu = ErrorMeasure::from_file(&p).unwrap();
        let draws = mu.samples(1, 4000, 3);
        let frac = draws.iter().filter(|x| x[0] > 0.0).count() as f64 / 4000.0;
        assert!((frac - 0.25).abs() < 0.03);
        assert!(mu.check_dim(2).is_err());
    }
}
