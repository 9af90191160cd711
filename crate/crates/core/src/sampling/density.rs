//! Frequency densities `π_a` on `ℝ^d` for the reservoir frequencies.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::rng::Rng;
use crate::{Error, Result};

/// A probability density on `ℝ^d`; the dimension is taken from the argument.
#[derive(Clone, Debug, PartialEq)]
pub enum FrequencyDensity {
    /// Multivariate Student-t with `nu` degrees of freedom, unit scale.
    /// `nu = 1` is the Cauchy density.
    StudentT { nu: f64 },
    /// Isotropic normal `N(0, sigma² I)`.
    Gaussian { sigma: f64 },
    /// `delta · t_nu + (1 - delta) · other`.
    Mixture {
        delta: f64,
        nu: f64,
        other: Box<FrequencyDensity>,
    },
}

impl FrequencyDensity {
    pub fn cauchy() -> Self {
        FrequencyDensity::StudentT { nu: 1.0 }
    }

    pub fn student_t(nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::Argument(format!("degrees of freedom must be positive, got {nu}")));
        }
        Ok(FrequencyDensity::StudentT { nu })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Argument(format!("scale must be positive, got {sigma}")));
        }
        Ok(FrequencyDensity::Gaussian { sigma })
    }

    pub fn mixture(delta: f64, nu: f64, other: FrequencyDensity) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::Argument(format!("mixture weight must lie in (0, 1], got {delta}")));
        }
        Self::student_t(nu)?;
        Ok(FrequencyDensity::Mixture {
            delta,
            nu,
            other: Box::new(other),
        })
    }

    pub fn pdf(&self, xi: &[f64]) -> f64 {
        match self {
            FrequencyDensity::StudentT { nu } => student_t_pdf(*nu, xi),
            FrequencyDensity::Gaussian { sigma } => {
                let d = xi.len() as f64;
                let r2: f64 = xi.iter().map(|v| v * v).sum();
                (-r2 / (2.0 * sigma * sigma)).exp() / (2.0 * PI * sigma * sigma).powf(d / 2.0)
            }
            FrequencyDensity::Mixture { delta, nu, other } => {
                let t = delta * student_t_pdf(*nu, xi);
                if *delta < 1.0 {
                    t + (1.0 - delta) * other.pdf(xi)
                } else {
                    t
                }
            }
        }
    }

    /// Draws one point of `ℝ^d`.
    pub fn sample(&self, d: usize, rng: &mut Rng) -> Vec<f64> {
        match self {
            FrequencyDensity::StudentT { nu } => sample_student_t(*nu, d, rng),
            FrequencyDensity::Gaussian { sigma } => (0..d)
                .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
                .collect(),
            FrequencyDensity::Mixture { delta, nu, other } => {
                let u: f64 = rng.random();
                if u < *delta {
                    sample_student_t(*nu, d, rng)
                } else {
                    other.sample(d, rng)
                }
            }
        }
    }

    /// `E‖A‖²`, or `None` when it is infinite.
    pub fn second_moment(&self, d: usize) -> Option<f64> {
        match self {
            FrequencyDensity::StudentT { nu } => (*nu > 2.0).then(|| d as f64 * nu / (nu - 2.0)),
            FrequencyDensity::Gaussian { sigma } => Some(d as f64 * sigma * sigma),
            FrequencyDensity::Mixture { delta, nu, other } => {
                let t = FrequencyDensity::StudentT { nu: *nu }.second_moment(d)?;
                if *delta < 1.0 {
                    Some(delta * t + (1.0 - delta) * other.second_moment(d)?)
                } else {
                    Some(t)
                }
            }
        }
    }
}

/// `Γ((ν+d)/2) / (Γ(ν/2) ν^{d/2} π^{d/2}) · (1 + ‖ξ‖²/ν)^{-(ν+d)/2}`.
pub fn student_t_pdf(nu: f64, xi: &[f64]) -> f64 {
    let d = xi.len() as f64;
    let r2: f64 = xi.iter().map(|v| v * v).sum();
    let log_norm = ln_gamma((nu + d) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * d * (nu * PI).ln();
    (log_norm - 0.5 * (nu + d) * (r2 / nu).ln_1p()).exp()
}

fn sample_student_t(nu: f64, d: usize, rng: &mut Rng) -> Vec<f64> {
    let z: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let chi = ChiSquared::new(nu).expect("validated degrees of freedom");
    let s: f64 = chi.sample(rng);
    let scale = (s / nu).sqrt();
    z.into_iter().map(|v| v / scale).collect()
}

impl fmt::Display for FrequencyDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrequencyDensity::StudentT { nu } if *nu == 1.0 => write!(f, "cauchy"),
            FrequencyDensity::StudentT { nu } => write!(f, "t:{nu}"),
            FrequencyDensity::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
            FrequencyDensity::Mixture { delta, nu, other } => write!(f, "mixture:{delta}:{nu}:{other}"),
        }
    }
}

/// Parses `cauchy`, `t:<nu>`, `gaussian[:<sigma>]` or `mixture:<delta>:<nu>:<density>`.
impl FromStr for FrequencyDensity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Argument(format!("unrecognised density '{s}'"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
        let mut parts = s.trim().splitn(2, ':');
        let head = parts.next().unwrap_or("").to_ascii_lowercase();
        let rest = parts.next();
        match (head.as_str(), rest) {
            ("cauchy", None) => Ok(Self::cauchy()),
            ("t" | "student-t", Some(nu)) => Self::student_t(num(nu)?),
            ("gaussian" | "normal", None) => Self::gaussian(1.0),
            ("gaussian" | "normal", Some(sigma)) => Self::gaussian(num(sigma)?),
            ("mixture", Some(rest)) => {
                let mut p = rest.splitn(3, ':');
                let delta = num(p.next().ok_or_else(bad)?)?;
                let nu = num(p.next().ok_or_else(bad)?)?;
                let other: FrequencyDensity = p.next().ok_or_else(bad)?.parse()?;
                Self::mixture(delta, nu, other)
            }
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::quadrature::{real_line, real_space, QuadOptions};
    use crate::rng::rng_from_seed;
    use statrs::distribution::{ContinuousCDF, StudentsT};

    #[test]
    fn cauchy_density_at_zero() {
        assert!((FrequencyDensity::cauchy().pdf(&[0.0]) - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn densities_integrate_to_one() {
        let cases = [
            FrequencyDensity::cauchy(),
            FrequencyDensity::student_t(3.0).unwrap(),
            FrequencyDensity::gaussian(0.7).unwrap(),
            FrequencyDensity::mixture(0.3, 2.0, FrequencyDensity::gaussian(2.0).unwrap()).unwrap(),
        ];
        for p in &cases {
            let q = real_line(&|x| p.pdf(&[x]), QuadOptions::default()).unwrap();
            assert!((q.value - 1.0).abs() < 1e-8, "{p}: {}", q.value);
        }
        let q = real_space(&|x| cases[1].pdf(x), 2, QuadOptions::with_tol(1e-6)).unwrap();
        assert!((q.value - 1.0).abs() < 1e-5);
    }

    fn ks_distance(mut draws: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        draws.sort_by(f64::total_cmp);
        let m = draws.len() as f64;
        draws
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = cdf(x);
                (c - i as f64 / m).abs().max(((i + 1) as f64 / m - c).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn student_t_sampler_matches_cdf() {
        for nu in [1.0, 3.0] {
            let p = FrequencyDensity::student_t(nu).unwrap();
            let mut rng = rng_from_seed(11);
            let draws: Vec<f64> = (0..100_000).map(|_| p.sample(1, &mut rng)[0]).collect();
            let t = StudentsT::new(0.0, 1.0, nu).unwrap();
            let ks = ks_distance(draws, |x| t.cdf(x));
            assert!(ks <= 0.01, "nu={nu}: KS {ks}");
        }
    }

    #[test]
    fn degenerate_mixture_is_pure_t() {
        let p = FrequencyDensity::mixture(1.0, 3.0, FrequencyDensity::gaussian(1.0).unwrap()).unwrap();
        let mut rng = rng_from_seed(5);
        let draws: Vec<f64> = (0..100_000).map(|_| p.sample(1, &mut rng)[0]).collect();
        let t = StudentsT::new(0.0, 1.0, 3.0).unwrap();
        assert!(ks_distance(draws, |x| t.cdf(x)) <= 0.01);
    }

    #[test]
    fn second_moments() {
        assert_eq!(FrequencyDensity::cauchy().second_moment(1), None);
        assert_eq!(FrequencyDensity::student_t(3.0).unwrap().second_moment(2), Some(6.0));
        assert_eq!(FrequencyDensity::gaussian(2.0).unwrap().second_moment(3), Some(12.0));
    }

    #[test]
    fn parse_round_trip() {
        for s in ["cauchy", "t:3", "gaussian:0.5", "mixture:0.5:3:gaussian:2"] {
            let p: FrequencyDensity = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert!("t:-1".parse::<FrequencyDensity>().is_err());
        assert!("uniform".parse::<FrequencyDensity>().is_err());
    }
}
