//! Seed sweeps over circuit sizes, with one CSV record per run.
//!
//! Run `i` at size `n` uses the seed `derive_seed(master_seed, [n, i])`.
//! Below it, sub-streams are
//!
//! | path | use |
//! |------|-----|
//! | `[1, k]` | candidate `k` of best-of-K (trainable), `[1]` reservoir draw |
//! | `[2]` | selection points |
//! | `[3]` | evaluation points |
//! | `[4]` | training inputs (reservoir-fitted) |
//! | `[5, bits(x)…]` | shots at input `x` |
//!
//! so every record is a pure function of the configuration.

use std::io::{Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Evaluation, ExperimentConfig};
use super::{l2_error, l2_from_squares, log_log_slope, sup_error, ErrorMeasure};
use crate::bounds::{bound_l2_reservoir, bound_l2_trainable, bound_linf_reservoir, bound_linf_trainable, estimate_sup_ratio};
use crate::circuit::{closed_form, EvalMode, TrainableCircuit};
use crate::fourier::{compute_norms, FourierModel, NormReport};
use crate::reservoir::{default_ridge, fit_readout, optimal_weights, rmse, Dataset, FeatureMode, ReservoirCircuit};
use crate::rng::derive_seed;
use crate::sampling::{build_plan, sample_reservoir, select_best_theta, FourierSamplingPlan, FrequencyDensity};
use crate::{Error, Result};

pub use super::config::Mode;

pub const CSV_HEADER: [&str; 13] = [
    "experiment_id",
    "mode",
    "model",
    "n",
    "seed",
    "mc_points",
    "l2_error",
    "l2_stderr",
    "sup_error",
    "M",
    "grid",
    "theory_bound",
    "wall_time_ms",
];

/// One run of one circuit size.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    pub experiment_id: String,
    pub mode: Mode,
    pub model: String,
    pub n: usize,
    /// The derived run seed.
    pub seed: u64,
    pub mc_points: usize,
    pub l2_error: f64,
    pub l2_stderr: f64,
    pub sup_error: Option<f64>,
    pub m: Option<f64>,
    pub grid: Option<usize>,
    pub theory_bound: f64,
    pub wall_time_ms: f64,
}

/// Per-run data that does not go into the CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellDiagnostics {
    pub n: usize,
    pub seed_index: usize,
    /// Mean squared error of every candidate on the selection points.
    pub candidate_scores: Vec<f64>,
    pub selected: Option<usize>,
    pub train_rmse_fitted: Option<f64>,
    pub train_rmse_optimal: Option<f64>,
    /// Ridge parameter actually used by the fit.
    pub fit_lambda: Option<f64>,
    /// Whether an unregularised fit was singular and retried with the default ridge.
    pub fit_retried: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n: usize,
    pub runs: usize,
    pub mean_l2: f64,
    pub mean_sq_l2: f64,
    pub theory_bound: f64,
    /// Mean squared error over all candidates, before selection.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unselected_mse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_sup: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_sup: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linf_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment_id: String,
    pub mode: Mode,
    pub model: String,
    pub l1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l2bar: Option<f64>,
    /// Output scale of the trainable circuits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sup_ratio: Option<f64>,
    /// Least-squares slope of `log mean_l2` against `log n`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    pub sizes: Vec<SizeSummary>,
}

impl Summary {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("summary always serialises")
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub records: Vec<ExperimentRecord>,
    pub summary: Summary,
    pub cells: Vec<CellDiagnostics>,
}

struct Setup {
    model: FourierModel,
    measure: ErrorMeasure,
    norms: NormReport,
    plan: Option<FourierSamplingPlan>,
    r: Option<f64>,
    density: Option<FrequencyDensity>,
    sup_ratio: Option<f64>,
    ea2: Option<f64>,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let model = cfg.fourier_model()?;
    let measure = cfg.measure.build()?;
    let d = cfg.dim;
    if cfg.mode == Mode::Trainable {
        let norms = compute_norms(&model, None)?;
        let plan = build_plan(&model)?;
        let r = cfg.trainable.r.unwrap_or(plan.weight_scale());
        Ok(Setup {
            model,
            measure,
            norms,
            plan: Some(plan),
            r: Some(r),
            density: None,
            sup_ratio: None,
            ea2: None,
        })
    } else {
        let density = cfg.density()?;
        let norms = compute_norms(&model, Some(&density))?;
        norms.require_l2bar()?;
        let (sup_ratio, ea2) = if cfg.sup.enabled {
            let ea2 = density.second_moment(d).map(f64::sqrt);
            let sup = match (ea2, d) {
                (Some(_), 1 | 2) => Some(estimate_sup_ratio(&model, &density)?.value),
                _ => None,
            };
            (sup, ea2)
        } else {
            (None, None)
        };
        Ok(Setup {
            model,
            measure,
            norms,
            plan: None,
            r: None,
            density: Some(density),
            sup_ratio,
            ea2,
        })
    }
}

fn shot_seed(run_seed: u64, x: &[f64]) -> u64 {
    let mut path = vec![5u64];
    path.extend(x.iter().map(|v| v.to_bits()));
    derive_seed(run_seed, &path)
}

struct CellResult {
    record: ExperimentRecord,
    diag: CellDiagnostics,
}

fn run_cell(cfg: &ExperimentConfig, s: &Setup, n: usize, idx: usize) -> Result<CellResult> {
    let start = Instant::now();
    let d = cfg.dim;
    let run_seed = derive_seed(cfg.master_seed, &[n as u64, idx as u64]);
    let target = |x: &[f64]| Ok::<_, Error>(s.model.eval_f(x));
    let mut diag = CellDiagnostics {
        n,
        seed_index: idx,
        candidate_scores: Vec::new(),
        selected: None,
        train_rmse_fitted: None,
        train_rmse_optimal: None,
        fit_lambda: None,
        fit_retried: false,
    };
    let eval_seed = derive_seed(run_seed, &[3]);
    let sup_args = cfg.sup.enabled.then_some((cfg.sup.half_width, cfg.sup.grid));

    let (err, sup, bound) = match cfg.mode {
        Mode::Trainable => {
            let plan = s.plan.as_ref().expect("trainable setup has a plan");
            let r = s.r.expect("trainable setup has R");
            // The argument to the closures is a circuit with prepared state.
            let output = |c: &TrainableCircuit, x: &[f64]| -> Result<f64> {
                match (cfg.evaluation, cfg.trainable.shots) {
                    (_, Some(shots)) => c.evaluate(x, r, EvalMode::Shots { shots, seed: shot_seed(run_seed, x) }),
                    (Evaluation::Simulated, None) => c.evaluate(x, r, EvalMode::Exact),
                    (Evaluation::ClosedForm, None) => closed_form(c.params(), x, r),
                }
            };
            let sel_pts = s.measure.samples(d, cfg.trainable.selection_points, derive_seed(run_seed, &[2]));
            let sel_f: Vec<f64> = sel_pts.iter().map(|x| s.model.eval_f(x)).collect();
            let seeds: Vec<u64> = (0..cfg.trainable.candidates)
                .map(|k| derive_seed(run_seed, &[1, k as u64]))
                .collect();
            let selection = select_best_theta(plan, n, r, &seeds, |theta| {
                let c = TrainableCircuit::new(theta.clone());
                let mut acc = 0.0;
                for (x, f) in sel_pts.iter().zip(&sel_f) {
                    acc += (output(&c, x)? - f).powi(2);
                }
                Ok(acc / sel_pts.len() as f64)
            })?;
            diag.candidate_scores = selection.scores.clone();
            diag.selected = Some(selection.best_index);
            let best = TrainableCircuit::new(selection.best);
            let approx = |x: &[f64]| output(&best, x);
            let err = l2_error(target, approx, &s.measure, d, cfg.mc_points, eval_seed)?;
            let sup = sup_args
                .map(|(m, g)| sup_error(target, approx, m, d, g))
                .transpose()?;
            (err, sup, bound_l2_trainable(s.norms.l1, n)?)
        }
        Mode::ReservoirOptimal | Mode::ReservoirFitted => {
            let density = s.density.as_ref().expect("reservoir setup has a density");
            let draw = sample_reservoir(density, n, d, derive_seed(run_seed, &[1]))?;
            let circuit = ReservoirCircuit::new(draw)?;
            let features = match cfg.evaluation {
                Evaluation::Simulated => FeatureMode::Simulated,
                Evaluation::ClosedForm => FeatureMode::ClosedForm,
            };
            let optimal = optimal_weights(circuit.draw(), &s.model, density)?;
            let weights = if cfg.mode == Mode::ReservoirFitted {
                let xs = s.measure.samples(d, cfg.reservoir.train_points, derive_seed(run_seed, &[4]));
                let data = Dataset::from_function(xs, |x| s.model.eval_f(x));
                let lambda = cfg.reservoir.ridge.unwrap_or_else(|| default_ridge(n));
                let fitted = match fit_readout(&circuit, &data, lambda, features) {
                    Err(Error::RankDeficient { .. }) if lambda == 0.0 => {
                        diag.fit_retried = true;
                        fit_readout(&circuit, &data, default_ridge(n), features)?
                    }
                    other => other?,
                };
                diag.fit_lambda = Some(match fitted.provenance {
                    crate::reservoir::Provenance::LeastSquares { lambda } => lambda,
                    _ => unreachable!("fit_readout returns least-squares weights"),
                });
                diag.train_rmse_fitted = Some(rmse(&circuit, &fitted, &data, features)?);
                diag.train_rmse_optimal = Some(rmse(&circuit, &optimal, &data, features)?);
                fitted
            } else {
                optimal
            };
            let approx = |x: &[f64]| circuit.output(&weights, x, features);
            let err = l2_error(target, approx, &s.measure, d, cfg.mc_points, eval_seed)?;
            let sup = sup_args
                .map(|(m, g)| sup_error(target, approx, m, d, g))
                .transpose()?;
            let l2bar = s.norms.l2bar.expect("reservoir norms include L2bar");
            (err, sup, bound_l2_reservoir(l2bar, n)?)
        }
    };

    let record = ExperimentRecord {
        experiment_id: cfg.experiment_id.clone(),
        mode: cfg.mode,
        model: s.model.name().to_string(),
        n,
        seed: run_seed,
        mc_points: match s.measure {
            ErrorMeasure::Dirac { .. } => 0,
            _ => cfg.mc_points,
        },
        l2_error: err.estimate,
        l2_stderr: err.stderr,
        sup_error: sup,
        m: sup_args.map(|a| a.0),
        grid: sup_args.map(|a| a.1),
        theory_bound: bound,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok(CellResult { record, diag })
}

pub fn run_scaling_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let s = setup(cfg)?;
    let mut sizes = cfg.n.clone();
    sizes.sort_unstable();
    let cells: Vec<(usize, usize)> = sizes
        .iter()
        .flat_map(|&n| (0..cfg.seeds).map(move |i| (n, i)))
        .collect();
    let results = crate::par::try_map_range(cells.len(), |k| run_cell(cfg, &s, cells[k].0, cells[k].1))?;
    let (records, diags): (Vec<_>, Vec<_>) = results.into_iter().map(|c| (c.record, c.diag)).unzip();
    let summary = summarise(cfg, &s, &sizes, &records, &diags)?;
    Ok(ExperimentOutput {
        records,
        summary,
        cells: diags,
    })
}

fn summarise(
    cfg: &ExperimentConfig,
    s: &Setup,
    sizes: &[usize],
    records: &[ExperimentRecord],
    diags: &[CellDiagnostics],
) -> Result<Summary> {
    let d = cfg.dim;
    let mut out = Vec::new();
    for &n in sizes {
        let rs: Vec<&ExperimentRecord> = records.iter().filter(|r| r.n == n).collect();
        let k = rs.len() as f64;
        let mean_l2 = rs.iter().map(|r| r.l2_error).sum::<f64>() / k;
        let mean_sq_l2 = rs.iter().map(|r| r.l2_error.powi(2)).sum::<f64>() / k;
        let scores: Vec<f64> = diags
            .iter()
            .filter(|c| c.n == n)
            .flat_map(|c| c.candidate_scores.iter().copied())
            .collect();
        let unselected_mse = (!scores.is_empty()).then(|| l2_from_squares(&scores).mean_square);
        let sups: Vec<f64> = rs.iter().filter_map(|r| r.sup_error).collect();
        let (mean_sup, max_sup) = if sups.is_empty() {
            (None, None)
        } else {
            (
                Some(sups.iter().sum::<f64>() / sups.len() as f64),
                Some(sups.iter().copied().fold(0.0, f64::max)),
            )
        };
        let linf_bound = if cfg.sup.enabled {
            let m = cfg.sup.half_width;
            match cfg.mode {
                Mode::Trainable => s
                    .norms
                    .b2
                    .map(|b2| bound_linf_trainable(s.norms.l1, b2, m, d, n))
                    .transpose()?,
                _ => match (s.sup_ratio, s.ea2, s.norms.l2bar) {
                    (Some(sr), Some(ea2), Some(l2bar)) => Some(bound_linf_reservoir(sr, ea2, l2bar, m, d, n)?),
                    _ => None,
                },
            }
        } else {
            None
        };
        out.push(SizeSummary {
            n,
            runs: rs.len(),
            mean_l2,
            mean_sq_l2,
            theory_bound: rs[0].theory_bound,
            unselected_mse,
            mean_sup,
            max_sup,
            linf_bound,
        });
    }
    let xs: Vec<f64> = out.iter().map(|s| s.n as f64).collect();
    let ys: Vec<f64> = out.iter().map(|s| s.mean_l2).collect();
    Ok(Summary {
        experiment_id: cfg.experiment_id.clone(),
        mode: cfg.mode,
        model: s.model.name().to_string(),
        l1: s.norms.l1,
        b2: s.norms.b2,
        l2bar: s.norms.l2bar,
        r: s.r,
        sup_ratio: s.sup_ratio,
        slope: log_log_slope(&xs, &ys),
        sizes: out,
    })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_records_csv<W: Write>(records: &[ExperimentRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in records {
        out.write_record([
            r.experiment_id.clone(),
            r.mode.to_string(),
            r.model.clone(),
            r.n.to_string(),
            r.seed.to_string(),
            r.mc_points.to_string(),
            r.l2_error.to_string(),
            r.l2_stderr.to_string(),
            opt(r.sup_error),
            opt(r.m),
            opt(r.grid),
            r.theory_bound.to_string(),
            format!("{:.3}", r.wall_time_ms),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_records_csv<R: Read>(r: R) -> Result<Vec<ExperimentRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config("CSV header does not match the experiment record layout".into()));
    }
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let ctx = |field: &str| Error::Config(format!("CSV line {}: bad `{field}`", line + 2));
        let num = |i: usize| rec[i].parse::<f64>().map_err(|_| ctx(CSV_HEADER[i]));
        let int = |i: usize| rec[i].parse::<u64>().map_err(|_| ctx(CSV_HEADER[i]));
        let maybe = |i: usize| (!rec[i].is_empty()).then(|| num(i)).transpose();
        out.push(ExperimentRecord {
            experiment_id: rec[0].to_string(),
            mode: rec[1].parse().map_err(|_| ctx("mode"))?,
            model: rec[2].to_string(),
            n: int(3)? as usize,
            seed: int(4)?,
            mc_points: int(5)? as usize,
            l2_error: num(6)?,
            l2_stderr: num(7)?,
            sup_error: maybe(8)?,
            m: maybe(9)?,
            grid: (!rec[10].is_empty()).then(|| int(10).map(|g| g as usize)).transpose()?,
            theory_bound: num(11)?,
            wall_time_ms: num(12)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mode: Mode) -> ExperimentConfig {
        ExperimentConfig {
            mode,
            n: vec![2, 8],
            seeds: 3,
            mc_points: 64,
            trainable: super::super::config::TrainableConfig {
                candidates: 3,
                selection_points: 16,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn single_cell_gives_one_record() {
        let cfg = ExperimentConfig {
            n: vec![4],
            seeds: 1,
            ..small(Mode::Trainable)
        };
        let out = run_scaling_experiment(&cfg).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].n, 4);
        assert!((out.records[0].theory_bound - 0.5).abs() < 1e-15);
    }

    #[test]
    fn records_are_sorted_and_reproducible() {
        for mode in [Mode::Trainable, Mode::ReservoirOptimal, Mode::ReservoirFitted] {
            let mut cfg = small(mode);
            cfg.n = vec![8, 2];
            let a = run_scaling_experiment(&cfg).unwrap();
            let b = run_scaling_experiment(&cfg).unwrap();
            let keys: Vec<usize> = a.records.iter().map(|r| r.n).collect();
            assert_eq!(keys, vec![2, 2, 2, 8, 8, 8]);
            let strip = |o: &ExperimentOutput| {
                o.records
                    .iter()
                    .map(|r| ExperimentRecord { wall_time_ms: 0.0, ..r.clone() })
                    .collect::<Vec<_>>()
            };
            assert_eq!(strip(&a), strip(&b), "{mode}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let mut cfg = small(Mode::ReservoirOptimal);
        cfg.sup.enabled = true;
        cfg.sup.grid = 20;
        let out = run_scaling_experiment(&cfg).unwrap();
        let mut buf = Vec::new();
        write_records_csv(&out.records, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&CSV_HEADER.join(",")));
        assert_eq!(read_records_csv(buf.as_slice()).unwrap(), out.records.iter().map(|r| {
            ExperimentRecord { wall_time_ms: (r.wall_time_ms * 1e3).round() / 1e3, ..r.clone() }
        }).collect::<Vec<_>>());
    }

    #[test]
    fn fitted_readout_beats_optimal_on_training_data() {
        let mut cfg = small(Mode::ReservoirFitted);
        cfg.reservoir.ridge = Some(0.0);
        cfg.reservoir.train_points = 64;
        let out = run_scaling_experiment(&cfg).unwrap();
        for c in &out.cells {
            if !c.fit_retried {
                assert!(c.train_rmse_fitted.unwrap() <= c.train_rmse_optimal.unwrap() + 1e-12);
            }
        }
    }
}
