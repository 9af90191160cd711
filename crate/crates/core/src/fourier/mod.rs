//! Target functions paired with their Fourier transforms, and the spectral
//! norms that control the approximation bounds.
//!
//! The transform convention is `f̂(ξ) = ∫ e^{-2πi y·ξ} f(y) dy` with inverse
//! `f(x) = ∫ e^{2πi x·ξ} f̂(ξ) dξ`. Norms:
//!
//! - `L1 = ∫ |f̂(ξ)| dξ`
//! - `B2 = (∫ ‖ξ‖² |f̂(ξ)| dξ)^{1/2}`
//! - `L2bar = (2 ∫ |f̂(ξ)|² / π_a(ξ) dξ)^{1/2}` for a frequency density `π_a`.

pub mod quadrature;

use std::cell::Cell;
use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::sampling::FrequencyDensity;
use crate::{Error, Result};
use quadrature::{QuadError, QuadOptions, QuadResult};

pub type RealFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type SpectrumFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// Norms known in closed form. `b2 = None` means `B2` is infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedFormNorms {
    pub l1: f64,
    pub b2: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Gaussian,
    Laplace,
    ShiftedGaussian { shift: f64 },
    Custom,
}

/// A real-valued function on `ℝ^d` together with its Fourier transform.
#[derive(Clone)]
pub struct FourierModel {
    name: String,
    dim: usize,
    kind: Kind,
    f: RealFn,
    fhat: SpectrumFn,
    closed: Option<ClosedFormNorms>,
    real_spectrum: bool,
}

impl fmt::Debug for FourierModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FourierModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("closed", &self.closed)
            .finish_non_exhaustive()
    }
}

/// `f(x) = e^{-π‖x‖²}`, which is its own transform.
pub fn gaussian_model(d: usize) -> Result<FourierModel> {
    if d == 0 {
        return Err(Error::Argument("dimension must be at least 1".into()));
    }
    let gauss = |x: &[f64]| (-PI * x.iter().map(|v| v * v).sum::<f64>()).exp();
    Ok(FourierModel {
        name: "gaussian".into(),
        dim: d,
        kind: Kind::Gaussian,
        f: Arc::new(gauss),
        fhat: Arc::new(move |xi| Complex64::new(gauss(xi), 0.0)),
        closed: Some(ClosedFormNorms {
            l1: 1.0,
            b2: Some((d as f64 / (2.0 * PI)).sqrt()),
        }),
        real_spectrum: true,
    })
}

/// `f(x) = e^{-2π|x|}` on `ℝ`, with `f̂(ξ) = (1/π) / (1 + ξ²)`.
pub fn laplace_model() -> FourierModel {
    FourierModel {
        name: "laplace".into(),
        dim: 1,
        kind: Kind::Laplace,
        f: Arc::new(|x| (-2.0 * PI * x[0].abs()).exp()),
        fhat: Arc::new(|xi| Complex64::new(1.0 / (PI * (1.0 + xi[0] * xi[0])), 0.0)),
        closed: Some(ClosedFormNorms { l1: 1.0, b2: None }),
        real_spectrum: true,
    }
}

/// `f(x) = e^{-π(x - shift)²}` on `ℝ`, with `f̂(ξ) = e^{-πξ²} e^{-2πiξ·shift}`.
pub fn shifted_gaussian_model(shift: f64) -> FourierModel {
    FourierModel {
        name: format!("shifted-gaussian:{shift}"),
        dim: 1,
        kind: Kind::ShiftedGaussian { shift },
        f: Arc::new(move |x| (-PI * (x[0] - shift).powi(2)).exp()),
        fhat: Arc::new(move |xi| {
            let amp = (-PI * xi[0] * xi[0]).exp();
            Complex64::from_polar(amp, -2.0 * PI * xi[0] * shift)
        }),
        closed: Some(ClosedFormNorms {
            l1: 1.0,
            b2: Some((1.0 / (2.0 * PI)).sqrt()),
        }),
        real_spectrum: shift == 0.0,
    }
}

impl FourierModel {
    /// A user-defined pair; norms are computed by quadrature.
    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        fhat: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument("dimension must be at least 1".into()));
        }
        Ok(FourierModel {
            name: name.into(),
            dim,
            kind: Kind::Custom,
            f: Arc::new(f),
            fhat: Arc::new(fhat),
            closed: None,
            real_spectrum: false,
        })
    }

    /// Looks up a built-in model: `gaussian`, `laplace` or `shifted-gaussian[:<shift>]`.
    pub fn by_name(name: &str, d: usize) -> Result<Self> {
        let check_1d = |m: FourierModel| {
            if d == 1 {
                Ok(m)
            } else {
                Err(Error::Argument(format!("model '{name}' is only defined for d = 1")))
            }
        };
        match name.split_once(':') {
            None if name == "gaussian" => gaussian_model(d),
            None if name == "laplace" => check_1d(laplace_model()),
            None if name == "shifted-gaussian" => check_1d(shifted_gaussian_model(1.0)),
            Some(("shifted-gaussian", s)) => {
                let shift = s
                    .parse()
                    .map_err(|_| Error::Argument(format!("bad shift in '{name}'")))?;
                check_1d(shifted_gaussian_model(shift))
            }
            _ => Err(Error::Argument(format!(
                "unknown model '{name}' (expected gaussian, laplace or shifted-gaussian[:shift])"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval_f(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    pub fn eval_fhat(&self, xi: &[f64]) -> Complex64 {
        (self.fhat)(xi)
    }

    pub fn closed_form_norms(&self) -> Option<ClosedFormNorms> {
        self.closed
    }

    /// Whether `Im f̂ ≡ 0` is known without quadrature.
    pub fn has_real_spectrum(&self) -> bool {
        self.real_spectrum
    }

    /// `|f̂(-ξ) - conj(f̂(ξ))|`; zero for real-valued `f`.
    pub fn hermitian_defect(&self, xi: &[f64]) -> f64 {
        let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
        (self.eval_fhat(&neg) - self.eval_fhat(xi).conj()).norm()
    }

    /// Reconstructs `f(x)` from `f̂` by numerical inversion.
    pub fn invert(&self, x: &[f64], tol: f64) -> Result<f64> {
        self.check_dim(x.len())?;
        let q = if self.dim == 1 {
            let fhat = |xi: f64| self.eval_fhat(&[xi]);
            quadrature::fourier_inversion_1d(&fhat, x[0], tol)
        } else {
            let g = |xi: &[f64]| {
                let phase = 2.0 * PI * dot(x, xi);
                let v = self.eval_fhat(xi);
                v.re * phase.cos() - v.im * phase.sin()
            };
            quadrature::real_space(&g, self.dim, QuadOptions::with_tol(tol))
        };
        q.map(|q| q.value)
            .map_err(|e| Error::computation("Fourier inversion", e.to_string()))
    }

    /// `∫ g(ξ, f̂(ξ)) dξ` over `ℝ^d`.
    pub fn spectral_integral(&self, g: impl Fn(&[f64], Complex64) -> f64, opts: QuadOptions) -> QuadResult {
        let h = |xi: &[f64]| g(xi, self.eval_fhat(xi));
        if self.dim == 1 {
            quadrature::real_line(&|t| h(&[t]), opts)
        } else {
            quadrature::real_space(&h, self.dim, opts)
        }
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim {
            return Err(Error::Dimension(format!(
                "model '{}' has d = {}, got a point of length {d}",
                self.name, self.dim
            )));
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormMethod {
    ClosedForm,
    Quadrature,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormReport {
    pub l1: f64,
    /// `None` when the integral defining `B2` diverges.
    pub b2: Option<f64>,
    /// `None` when no density was supplied.
    pub l2bar: Option<f64>,
    pub method: NormMethod,
    /// Absolute quadrature tolerance; zero for closed forms.
    pub tolerance: f64,
}

impl NormReport {
    pub fn require_b2(&self) -> Result<f64> {
        self.b2.ok_or_else(|| Error::computation("B2", "the integral of |xi|^2 |f^| diverges"))
    }

    pub fn require_l2bar(&self) -> Result<f64> {
        self.l2bar
            .ok_or_else(|| Error::Argument("L2bar needs a frequency density".into()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NormOptions {
    /// Ignore closed forms.
    pub force_quadrature: bool,
    /// Absolute tolerance; defaults to `1e-9` for `d = 1` and `1e-6` otherwise.
    pub tolerance: Option<f64>,
}

pub fn default_tolerance(d: usize) -> f64 {
    if d == 1 {
        1e-9
    } else {
        1e-6
    }
}

pub fn compute_norms(model: &FourierModel, density: Option<&FrequencyDensity>) -> Result<NormReport> {
    compute_norms_with(model, density, NormOptions::default())
}

pub fn compute_norms_with(
    model: &FourierModel,
    density: Option<&FrequencyDensity>,
    options: NormOptions,
) -> Result<NormReport> {
    let tol = options.tolerance.unwrap_or_else(|| default_tolerance(model.dim));
    let opts = QuadOptions::with_tol(tol);
    let closed = model.closed.filter(|_| !options.force_quadrature);
    let mut used_quadrature = false;

    let (l1, b2) = match closed {
        Some(c) => (c.l1, c.b2),
        None => {
            used_quadrature = true;
            let l1 = model
                .spectral_integral(|_, v| v.norm(), opts)
                .map_err(|e| Error::computation("L1", e.to_string()))?
                .value;
            let b2 = match model.spectral_integral(|xi, v| dot(xi, xi) * v.norm(), opts) {
                Ok(q) => Some(q.value.max(0.0).sqrt()),
                Err(QuadError::NotConverged { .. }) => None,
                Err(e) => return Err(Error::computation("B2", e.to_string())),
            };
            (l1, b2)
        }
    };
    check_finite("L1", l1)?;

    let l2bar = match density {
        None => None,
        Some(p) => {
            let exact = if options.force_quadrature {
                None
            } else {
                closed_form_l2bar_sq(model, p)
            };
            let sq = match exact {
                Some(v) => v?,
                None => {
                    used_quadrature = true;
                    l2bar_sq_quadrature(model, p, opts)?
                }
            };
            check_finite("L2bar", sq)?;
            Some(sq.sqrt())
        }
    };

    Ok(NormReport {
        l1,
        b2,
        l2bar,
        method: if used_quadrature {
            NormMethod::Quadrature
        } else {
            NormMethod::ClosedForm
        },
        tolerance: if used_quadrature { tol } else { 0.0 },
    })
}

fn check_finite(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::computation(what, format!("value {v} is not a finite nonnegative number")))
    }
}

fn l2bar_sq_quadrature(model: &FourierModel, p: &FrequencyDensity, opts: QuadOptions) -> Result<f64> {
    let violation: Cell<Option<(Vec<f64>, f64)>> = Cell::new(None);
    let q = model.spectral_integral(
        |xi, v| {
            let a2 = v.norm_sqr();
            if a2 == 0.0 {
                return 0.0;
            }
            let dens = p.pdf(xi);
            if dens > 0.0 {
                2.0 * a2 / dens
            } else {
                violation.set(Some((xi.to_vec(), a2.sqrt())));
                f64::NAN
            }
        },
        opts,
    );
    if let Some((point, fhat_abs)) = violation.take() {
        return Err(Error::AbsoluteContinuity { point, fhat_abs });
    }
    q.map(|q| q.value)
        .map_err(|e| Error::computation("L2bar", e.to_string()))
}

/// `L2bar²` for built-in pairs where the integral is elementary.
fn closed_form_l2bar_sq(model: &FourierModel, p: &FrequencyDensity) -> Option<Result<f64>> {
    let gaussian_spectrum = matches!(model.kind, Kind::Gaussian | Kind::ShiftedGaussian { .. });
    match (model.kind, p) {
        // 2π ∫ (1 + ξ²) e^{-2πξ²} dξ.
        (_, FrequencyDensity::StudentT { nu }) if gaussian_spectrum && *nu == 1.0 && model.dim == 1 => {
            Some(Ok(2.0 * PI * (1.0 / SQRT_2 + 1.0 / (4.0 * PI * SQRT_2))))
        }
        // (2/π) ∫ (1 + ξ²)^{-1} dξ.
        (Kind::Laplace, FrequencyDensity::StudentT { nu }) if *nu == 1.0 => Some(Ok(2.0)),
        // 2 (2πσ²)^{d/2} ∫ e^{-(2π - 1/(2σ²))‖ξ‖²} dξ.
        (_, FrequencyDensity::Gaussian { sigma }) if gaussian_spectrum => {
            let d = model.dim as f64;
            let rate = 2.0 * PI - 1.0 / (2.0 * sigma * sigma);
            if rate <= 0.0 {
                return Some(Err(Error::computation(
                    "L2bar",
                    format!("|f^|^2 / pi_a is not integrable for gaussian density with scale {sigma}"),
                )));
            }
            Some(Ok(2.0 * (2.0 * PI * sigma * sigma).powf(d / 2.0) * (PI / rate).powf(d / 2.0)))
        }
        _ => None,
    }
}
