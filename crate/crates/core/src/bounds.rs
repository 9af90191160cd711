//! Right-hand sides of the approximation error bounds.
//!
//! | tag | value |
//! |-----|-------|
//! | `l2-trainable` | `L1 / √n` |
//! | `l2-reservoir` | `L2bar / √n` |
//! | `linf-trainable` | `(2(π+1) L1 + 8π M √d √L1 B2) / √n` |
//! | `linf-reservoir` | `(8 S (π/2^{3/2} + 2π M √d √E‖A‖²) + L2bar) / √n`, `S = sup |f̂|/π_a` |
//! | `mixture-constant` | `(1/δ) Γ(ν/2) ν^{d/2} π^{d/2} / Γ((ν+d)/2) · max(1, 1/ν)^{(ν+d)/2} · I` |
//!
//! with `I = ∫ |f̂|² (1 + ‖ξ‖²)^{(ν+d)/2} dξ` for the mixture constant.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use statrs::function::gamma::ln_gamma;

use crate::fourier::quadrature::{to_real_line, QuadOptions};
use crate::fourier::{default_tolerance, FourierModel};
use crate::sampling::FrequencyDensity;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Theorem {
    L2Trainable,
    L2Reservoir,
    LinfTrainable,
    LinfReservoir,
    MixtureConstant,
}

impl Theorem {
    pub const ALL: [Theorem; 5] = [
        Theorem::L2Trainable,
        Theorem::L2Reservoir,
        Theorem::LinfTrainable,
        Theorem::LinfReservoir,
        Theorem::MixtureConstant,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Theorem::L2Trainable => "l2-trainable",
            Theorem::L2Reservoir => "l2-reservoir",
            Theorem::LinfTrainable => "linf-trainable",
            Theorem::LinfReservoir => "linf-reservoir",
            Theorem::MixtureConstant => "mixture-constant",
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Theorem::ALL
            .into_iter()
            .find(|t| t.tag() == s)
            .ok_or_else(|| {
                let tags: Vec<_> = Theorem::ALL.iter().map(|t| t.tag()).collect();
                Error::Argument(format!("unknown bound '{s}' (expected one of {})", tags.join(", ")))
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub theorem: Theorem,
    pub value: f64,
    pub inputs: BTreeMap<String, f64>,
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "theorem: {}", self.theorem)?;
        for (k, v) in &self.inputs {
            writeln!(f, "  {k} = {v}")?;
        }
        write!(f, "value: {}", self.value)
    }
}

fn check_n(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Argument("n must be at least 1".into()));
    }
    Ok((n as f64).sqrt())
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("{name} must be finite and nonnegative, got {v}")))
    }
}

fn check_d(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::Argument("d must be at least 1".into()));
    }
    Ok(d as f64)
}

pub fn bound_l2_trainable(l1: f64, n: usize) -> Result<f64> {
    check_nonneg("L1", l1)?;
    Ok(l1 / check_n(n)?)
}

pub fn bound_l2_reservoir(l2bar: f64, n: usize) -> Result<f64> {
    check_nonneg("L2bar", l2bar)?;
    Ok(l2bar / check_n(n)?)
}

pub fn bound_linf_trainable(l1: f64, b2: f64, m: f64, d: usize, n: usize) -> Result<f64> {
    check_nonneg("L1", l1)?;
    check_nonneg("B2", b2)?;
    check_nonneg("M", m)?;
    let d = check_d(d)?;
    let c = 2.0 * (PI + 1.0) * l1 + 8.0 * PI * m * d.sqrt() * l1.sqrt() * b2;
    Ok(c / check_n(n)?)
}

/// `ea2` is the root second moment `E[‖A‖²]^{1/2}`.
pub fn bound_linf_reservoir(sup_ratio: f64, ea2: f64, l2bar: f64, m: f64, d: usize, n: usize) -> Result<f64> {
    if ea2.is_infinite() {
        return Err(Error::Argument(
            "the uniform reservoir bound needs a frequency density with finite second moment".into(),
        ));
    }
    check_nonneg("sup |f^|/pi_a", sup_ratio)?;
    check_nonneg("E[|A|^2]^(1/2)", ea2)?;
    check_nonneg("L2bar", l2bar)?;
    check_nonneg("M", m)?;
    let d = check_d(d)?;
    let c = 8.0 * sup_ratio * (PI / 2f64.powf(1.5) + 2.0 * PI * m * d.sqrt() * ea2) + l2bar;
    Ok(c / check_n(n)?)
}

/// `E[‖A‖²]^{1/2}` for a density, rejecting infinite second moments.
pub fn root_second_moment(density: &FrequencyDensity, d: usize) -> Result<f64> {
    density.second_moment(d).map(f64::sqrt).ok_or_else(|| {
        Error::Argument(format!(
            "density '{density}' has infinite second moment; the uniform reservoir bound does not apply"
        ))
    })
}

pub fn mixture_constant(delta: f64, nu: f64, d: usize, sobolev_integral: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Argument(format!("delta must lie in (0, 1], got {delta}")));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::Argument(format!("nu must be positive, got {nu}")));
    }
    check_nonneg("Sobolev integral", sobolev_integral)?;
    let d = check_d(d)?;
    let log_t = ln_gamma(nu / 2.0) + 0.5 * d * (nu * PI).ln() - ln_gamma((nu + d) / 2.0);
    let widen = (1.0f64.max(1.0 / nu)).powf((nu + d) / 2.0);
    Ok(log_t.exp() * widen * sobolev_integral / delta)
}

/// `∫ |f̂(ξ)|² (1 + ‖ξ‖²)^{(ν+d)/2} dξ`.
pub fn sobolev_integral(model: &FourierModel, nu: f64) -> Result<f64> {
    let d = model.dim() as f64;
    let s = 0.5 * (nu + d);
    model
        .spectral_integral(
            |xi, v| {
                let a2 = v.norm_sqr();
                if a2 == 0.0 {
                    0.0
                } else {
                    a2 * (1.0 + xi.iter().map(|x| x * x).sum::<f64>()).powf(s)
                }
            },
            QuadOptions::with_tol(default_tolerance(model.dim())),
        )
        .map(|q| q.value)
        .map_err(|e| Error::computation("Sobolev integral", e.to_string()))
}

/// A grid-and-refine estimate of `sup_ξ |f̂(ξ)| / π_a(ξ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SupEstimate {
    pub value: f64,
    pub argmax: Vec<f64>,
    /// Whether the maximiser sits on the outermost grid shell, in which case
    /// the ratio may be unbounded.
    pub at_boundary: bool,
}

const GRID_1D: usize = 4001;
const GRID_2D: usize = 201;
const T_EDGE: f64 = 0.999;

fn grid_t(i: usize, m: usize) -> f64 {
    -T_EDGE + 2.0 * T_EDGE * i as f64 / (m - 1) as f64
}

pub fn estimate_sup_ratio(model: &FourierModel, density: &FrequencyDensity) -> Result<SupEstimate> {
    let ratio_t = |t: &[f64]| {
        let xi: Vec<f64> = t.iter().map(|&t| to_real_line(t.clamp(-T_EDGE, T_EDGE)).0).collect();
        let dens = density.pdf(&xi);
        let a = model.eval_fhat(&xi).norm();
        if a == 0.0 {
            0.0
        } else if dens > 0.0 {
            a / dens
        } else {
            f64::INFINITY
        }
    };
    let (best_t, value, at_boundary) = match model.dim() {
        1 => {
            let (k, _) = (0..GRID_1D)
                .map(|i| (i, ratio_t(&[grid_t(i, GRID_1D)])))
                .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
            let lo = grid_t(k.saturating_sub(1), GRID_1D);
            let hi = grid_t((k + 1).min(GRID_1D - 1), GRID_1D);
            let t = golden_section_max(|t| ratio_t(&[t]), lo, hi, 1e-12);
            let v = ratio_t(&[t]).max(ratio_t(&[grid_t(k, GRID_1D)]));
            (vec![t], v, k == 0 || k == GRID_1D - 1)
        }
        2 => {
            let mut best = (vec![0.0, 0.0], f64::NEG_INFINITY);
            let mut edge = false;
            for i in 0..GRID_2D {
                for j in 0..GRID_2D {
                    let t = [grid_t(i, GRID_2D), grid_t(j, GRID_2D)];
                    let v = ratio_t(&t);
                    if v > best.1 {
                        best = (t.to_vec(), v);
                        edge = i == 0 || j == 0 || i == GRID_2D - 1 || j == GRID_2D - 1;
                    }
                }
            }
            let step = 2.0 * T_EDGE / (GRID_2D - 1) as f64;
            let (t, v) = pattern_search_max(&ratio_t, best.0, best.1, step, 1e-12);
            (t, v, edge)
        }
        _ => {
            return Err(Error::Argument(
                "sup |f^|/pi_a is only estimated for d <= 2; supply it explicitly".into(),
            ))
        }
    };
    if !value.is_finite() {
        return Err(Error::AbsoluteContinuity {
            point: best_t.iter().map(|&t| to_real_line(t).0).collect(),
            fhat_abs: f64::NAN,
        });
    }
    Ok(SupEstimate {
        value,
        argmax: best_t.iter().map(|&t| to_real_line(t).0).collect(),
        at_boundary,
    })
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn pattern_search_max(f: &dyn Fn(&[f64]) -> f64, mut x: Vec<f64>, mut fx: f64, mut step: f64, tol: f64) -> (Vec<f64>, f64) {
    while step > tol {
        let mut improved = false;
        for axis in 0..x.len() {
            for dir in [-1.0, 1.0] {
                let mut y = x.clone();
                y[axis] = (y[axis] + dir * step).clamp(-T_EDGE, T_EDGE);
                let fy = f(&y);
                if fy > fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}

/// Inputs for [`bound_report`]; unused fields are ignored.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundInputs {
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub l1: Option<f64>,
    pub b2: Option<f64>,
    pub l2bar: Option<f64>,
    pub m: Option<f64>,
    pub sup_ratio: Option<f64>,
    pub ea2: Option<f64>,
    pub delta: Option<f64>,
    pub nu: Option<f64>,
    pub sobolev: Option<f64>,
}

fn need<T: Copy>(v: Option<T>, flag: &str, theorem: Theorem) -> Result<T> {
    v.ok_or_else(|| Error::Argument(format!("bound '{theorem}' needs --{flag}")))
}

pub fn bound_report(theorem: Theorem, x: &BoundInputs) -> Result<BoundReport> {
    let mut inputs = BTreeMap::new();
    let mut put = |k: &str, v: f64| {
        inputs.insert(k.to_string(), v);
        v
    };
    let t = theorem;
    let value = match theorem {
        Theorem::L2Trainable => {
            let n = need(x.n, "n", t)?;
            put("n", n as f64);
            bound_l2_trainable(put("L1", need(x.l1, "l1", t)?), n)?
        }
        Theorem::L2Reservoir => {
            let n = need(x.n, "n", t)?;
            put("n", n as f64);
            bound_l2_reservoir(put("L2bar", need(x.l2bar, "l2bar", t)?), n)?
        }
        Theorem::LinfTrainable => {
            let n = need(x.n, "n", t)?;
            let d = x.d.unwrap_or(1);
            put("n", n as f64);
            put("d", d as f64);
            bound_linf_trainable(
                put("L1", need(x.l1, "l1", t)?),
                put("B2", need(x.b2, "b2", t)?),
                put("M", need(x.m, "m", t)?),
                d,
                n,
            )?
        }
        Theorem::LinfReservoir => {
            let n = need(x.n, "n", t)?;
            let d = x.d.unwrap_or(1);
            put("n", n as f64);
            put("d", d as f64);
            bound_linf_reservoir(
                put("sup_ratio", need(x.sup_ratio, "sup-ratio", t)?),
                put("EA2", need(x.ea2, "ea2", t)?),
                put("L2bar", need(x.l2bar, "l2bar", t)?),
                put("M", need(x.m, "m", t)?),
                d,
                n,
            )?
        }
        Theorem::MixtureConstant => {
            let d = x.d.unwrap_or(1);
            put("d", d as f64);
            mixture_constant(
                put("delta", need(x.delta, "delta", t)?),
                put("nu", need(x.nu, "nu", t)?),
                d,
                put("sobolev", need(x.sobolev, "sobolev", t)?),
            )?
        }
    };
    Ok(BoundReport {
        theorem,
        value,
        inputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{compute_norms, gaussian_model, laplace_model};

    #[test]
    fn l2_values() {
        assert_eq!(bound_l2_trainable(1.0, 1).unwrap(), 1.0);
        assert!((bound_l2_trainable(1.0, 100).unwrap() - 0.1).abs() < 1e-15);
        assert!((bound_l2_trainable(2.5, 25).unwrap() - 0.5).abs() < 1e-15);
        assert!((bound_l2_reservoir(2f64.sqrt(), 2).unwrap() - 1.0).abs() < 1e-15);
        let l2bar = compute_norms(&laplace_model(), Some(&FrequencyDensity::cauchy()))
            .unwrap()
            .l2bar
            .unwrap();
        assert!((bound_l2_reservoir(l2bar, 8).unwrap() - 0.5).abs() < 1e-12);
        assert!(bound_l2_trainable(1.0, 0).is_err());
        assert!(bound_l2_trainable(-1.0, 3).is_err());
    }

    #[test]
    fn linf_trainable_values() {
        assert!((bound_linf_trainable(1.0, 0.0, 0.0, 1, 1).unwrap() - 2.0 * (PI + 1.0)).abs() < 1e-14);
        let b2 = compute_norms(&gaussian_model(1).unwrap(), None).unwrap().b2.unwrap();
        let want = (2.0 * (PI + 1.0) + 8.0 * PI * (2.0 * PI).powf(-0.5)) / 4.0;
        assert!((bound_linf_trainable(1.0, b2, 1.0, 1, 16).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn linf_reservoir_values() {
        let v = bound_linf_reservoir(1.0, 0.0, 0.0, 0.0, 1, 1).unwrap();
        assert!((v - 2f64.powf(1.5) * PI).abs() < 1e-12);
        assert!(root_second_moment(&FrequencyDensity::cauchy(), 1).is_err());
        assert!(bound_linf_reservoir(1.0, f64::INFINITY, 1.0, 1.0, 1, 4).is_err());
        assert!((root_second_moment(&FrequencyDensity::student_t(3.0).unwrap(), 1).unwrap() - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn every_bound_is_inverse_root_homogeneous() {
        let x = BoundInputs {
            n: Some(7),
            d: Some(2),
            l1: Some(1.3),
            b2: Some(0.4),
            l2bar: Some(2.2),
            m: Some(1.5),
            sup_ratio: Some(3.0),
            ea2: Some(1.7),
            ..Default::default()
        };
        for t in [Theorem::L2Trainable, Theorem::L2Reservoir, Theorem::LinfTrainable, Theorem::LinfReservoir] {
            let a = bound_report(t, &x).unwrap().value;
            let b = bound_report(t, &BoundInputs { n: Some(28), ..x.clone() }).unwrap().value;
            assert!(a > 0.0 && a.is_finite());
            assert!((a / b - 2.0).abs() < 1e-14, "{t}");
        }
    }

    #[test]
    fn mixture_constant_values() {
        let i = 0.37;
        assert!((mixture_constant(1.0, 1.0, 1, i).unwrap() - PI * i).abs() < 1e-12);
        assert!((mixture_constant(1.0, 2.0, 2, i).unwrap() - 2.0 * PI * i).abs() < 1e-12);
        let a = mixture_constant(0.5, 3.0, 1, i).unwrap();
        let b = mixture_constant(0.25, 3.0, 1, i).unwrap();
        assert!((b / a - 2.0).abs() < 1e-14);
        assert!(mixture_constant(0.0, 1.0, 1, i).is_err());
    }

    #[test]
    fn mixture_chain_dominates_direct_l2bar() {
        let g = gaussian_model(1).unwrap();
        for (delta, nu) in [(1.0, 1.0), (0.5, 3.0), (0.2, 0.5)] {
            let p = FrequencyDensity::mixture(delta, nu, FrequencyDensity::gaussian(1.0).unwrap()).unwrap();
            let direct = compute_norms(&g, Some(&p)).unwrap().l2bar.unwrap().powi(2);
            let c = mixture_constant(delta, nu, 1, sobolev_integral(&g, nu).unwrap()).unwrap();
            assert!(direct <= 2.0 * c + 1e-8, "delta={delta} nu={nu}: {direct} > {}", 2.0 * c);
        }
    }

    #[test]
    fn sup_ratio_for_gaussian_with_t3() {
        let g = gaussian_model(1).unwrap();
        let t3 = FrequencyDensity::student_t(3.0).unwrap();
        let est = estimate_sup_ratio(&g, &t3).unwrap();
        // Dense 1-D maximisation oracle in ξ directly.
        let oracle = (0..=200_000)
            .map(|k| {
                let xi = -5.0 + 1e-4 * k as f64;
                (-PI * xi * xi).exp() / t3.pdf(&[xi])
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((est.value - oracle).abs() < 1e-9, "{} vs {oracle}", est.value);
        assert!(!est.at_boundary);
        assert!(est.argmax[0].abs() < 1e-4);

        let g2 = gaussian_model(2).unwrap();
        let est2 = estimate_sup_ratio(&g2, &t3).unwrap();
        assert!((est2.value - 1.0 / t3.pdf(&[0.0, 0.0])).abs() < 1e-9);
        assert!(estimate_sup_ratio(&gaussian_model(3).unwrap(), &t3).is_err());
    }

    #[test]
    fn theorem_tags_round_trip() {
        for t in Theorem::ALL {
            assert_eq!(t.tag().parse::<Theorem>().unwrap(), t);
        }
        assert!("l3".parse::<Theorem>().is_err());
    }
}
