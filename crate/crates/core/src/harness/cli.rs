//! Command-line front end.
//!
//! Exit codes: `0` success, `1` bad arguments or configuration, `2` a
//! failure while computing.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::config::{Evaluation, ExperimentConfig, Mode};
use super::experiment::{read_records_csv, run_scaling_experiment, write_records_csv};
use super::identities::verify_identities;
use super::plot::write_plot;
use super::OUTPUT_DIR_ENV;
use crate::bounds::{bound_report, estimate_sup_ratio, root_second_moment, sobolev_integral, BoundInputs, Theorem};
use crate::circuit::{CircuitParams, EvalMode, TrainableCircuit};
use crate::fourier::{compute_norms, FourierModel};
use crate::reservoir::{default_ridge, fit_readout, rmse, Dataset, FeatureMode, Provenance, ReservoirCircuit};
use crate::sampling::{build_plan, sample_reservoir, sample_theta, FrequencyDensity};
use crate::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "quapprox", version, about = "Quantum circuit approximation of Fourier-integrable functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check simulated circuits against their closed forms on random inputs.
    VerifyIdentities {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Draw trainable-circuit parameters from a target's spectrum.
    SampleTheta {
        #[arg(long, default_value = "gaussian")]
        model: String,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long)]
        n: usize,
        /// Output scale; defaults to the smallest admissible value.
        #[arg(long)]
        r: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Parameter CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a trainable circuit at given inputs.
    Eval {
        #[arg(long)]
        theta: PathBuf,
        #[arg(long)]
        r: f64,
        /// Estimate probabilities from this many shots instead of exactly.
        #[arg(long)]
        shots: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated input point; repeat for more points.
        #[arg(long = "x", required = true, allow_hyphen_values = true)]
        x: Vec<String>,
    },
    /// Fit reservoir readout weights to a dataset.
    Train {
        /// CSV with header x1..xd,y.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "cauchy")]
        density: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        ridge: Option<f64>,
        /// Use cos(L)/n features instead of simulating the register.
        #[arg(long)]
        fast_closed_form: bool,
        /// Weight CSV with header a1..ad,b,w.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a seed sweep over circuit sizes and write a CSV of errors.
    Scaling(ScalingArgs),
    /// Evaluate an error bound.
    Bounds(BoundsArgs),
    /// Write a gnuplot script and data file for an experiment CSV.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ScalingArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Circuit sizes, comma-separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Runs per size.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    mc_points: Option<usize>,
    /// Use closed-form outputs in place of state simulation.
    #[arg(long)]
    closed_form: bool,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    dump_config: bool,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long)]
    theorem: Theorem,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    l1: Option<f64>,
    #[arg(long)]
    b2: Option<f64>,
    #[arg(long)]
    l2bar: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    sup_ratio: Option<f64>,
    #[arg(long)]
    ea2: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    sobolev: Option<f64>,
    /// Fill missing norms from a built-in target.
    #[arg(long)]
    model: Option<String>,
    /// Fill density-dependent inputs from this frequency density.
    #[arg(long)]
    density: Option<String>,
    /// Print every input next to the value.
    #[arg(long)]
    report: bool,
}

/// Runs the CLI with process streams and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Argument(format!("bad coordinate '{v}' in input point '{s}'")))
        })
        .collect()
}

fn parse_density(s: &str) -> Result<FrequencyDensity> {
    s.parse()
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::VerifyIdentities { trials, seed } => {
            if trials == 0 {
                return Err(Error::Argument("--trials must be at least 1".into()));
            }
            let checks = verify_identities(trials, seed)?;
            for c in &checks {
                writeln!(out, "{c}").map_err(io_err)?;
            }
            let ok = checks.iter().all(|c| c.passed());
            Ok(if ok { 0 } else { 2 })
        }
        Command::SampleTheta { model, dim, n, r, seed, out: path } => {
            let model = FourierModel::by_name(&model, dim)?;
            let plan = build_plan(&model)?;
            let r = r.unwrap_or(plan.weight_scale());
            let theta = sample_theta(&plan, n, r, seed)?;
            match path {
                Some(p) => {
                    let f = std::fs::File::create(&p).map_err(|e| Error::io(&p, e))?;
                    theta.write_csv(f)?;
                }
                None => theta.write_csv(&mut *out)?,
            }
            Ok(0)
        }
        Command::Eval { theta, r, shots, seed, x } => {
            let f = std::fs::File::open(&theta).map_err(|e| Error::io(&theta, e))?;
            let params = CircuitParams::read_csv(f)?;
            let circuit = TrainableCircuit::new(params);
            let d = circuit.params().dim();
            let header: Vec<String> = (1..=d).map(|i| format!("x{i}")).chain(["f".to_string()]).collect();
            writeln!(out, "{}", header.join(",")).map_err(io_err)?;
            for (k, s) in x.iter().enumerate() {
                let pt = parse_point(s)?;
                let mode = match shots {
                    Some(shots) => EvalMode::Shots {
                        shots,
                        seed: crate::rng::derive_seed(seed, &[k as u64]),
                    },
                    None => EvalMode::Exact,
                };
                let v = circuit.evaluate(&pt, r, mode)?;
                let coords: Vec<String> = pt.iter().map(|c| c.to_string()).collect();
                writeln!(out, "{},{v}", coords.join(",")).map_err(io_err)?;
            }
            Ok(0)
        }
        Command::Train {
            data,
            n,
            density,
            seed,
            ridge,
            fast_closed_form,
            out: path,
        } => {
            let f = std::fs::File::open(&data).map_err(|e| Error::io(&data, e))?;
            let dataset = Dataset::read_csv(f)?;
            let d = dataset
                .dim()
                .ok_or_else(|| Error::Argument("training data is empty".into()))?;
            let density = parse_density(&density)?;
            let draw = sample_reservoir(&density, n, d, seed)?;
            let circuit = ReservoirCircuit::new(draw)?;
            let mode = if fast_closed_form {
                FeatureMode::ClosedForm
            } else {
                FeatureMode::Simulated
            };
            let lambda = ridge.unwrap_or_else(|| default_ridge(n));
            let w = fit_readout(&circuit, &dataset, lambda, mode)?;
            let used = match w.provenance {
                Provenance::LeastSquares { lambda } => lambda,
                _ => lambda,
            };
            let err = rmse(&circuit, &w, &dataset, mode)?;
            writeln!(out, "n={n} lambda={used} train_rmse={err}").map_err(io_err)?;
            if let Some(p) = path {
                write_weights(&p, &circuit, &w.w)?;
            }
            Ok(0)
        }
        Command::Scaling(args) => scaling(args, out),
        Command::Bounds(args) => bounds(args, out),
        Command::Plot { csv, out_dir } => {
            let f = std::fs::File::open(&csv).map_err(|e| Error::io(&csv, e))?;
            let records = read_records_csv(f)?;
            let dir = out_dir.unwrap_or_else(|| csv.parent().map(Path::to_path_buf).unwrap_or_default());
            let stem = csv
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("experiment")
                .to_string();
            let files = write_plot(&records, &dir, &stem)?;
            writeln!(out, "{}\n{}", files.data.display(), files.script.display()).map_err(io_err)?;
            Ok(0)
        }
    }
}

fn write_weights(path: &Path, circuit: &ReservoirCircuit, w: &[f64]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut wr = csv::Writer::from_writer(f);
    let d = circuit.dim();
    let header: Vec<String> = (1..=d)
        .map(|i| format!("a{i}"))
        .chain(["b".to_string(), "w".to_string()])
        .collect();
    wr.write_record(&header)?;
    let draw = circuit.draw();
    for ((a, b), w) in draw.a.iter().zip(&draw.b).zip(w) {
        let row: Vec<String> = a
            .iter()
            .map(|v| v.to_string())
            .chain([u8::from(*b).to_string(), w.to_string()])
            .collect();
        wr.write_record(&row)?;
    }
    wr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn scaling(args: ScalingArgs, out: &mut dyn Write) -> Result<i32> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(s) = args.seeds {
        cfg.seeds = s;
    }
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if let Some(m) = args.model {
        cfg.model = m;
    }
    if let Some(k) = args.mc_points {
        cfg.mc_points = k;
    }
    if args.closed_form {
        cfg.evaluation = Evaluation::ClosedForm;
    }
    cfg.validate()?;
    if args.dump_config {
        write!(out, "{}", cfg.to_toml()).map_err(io_err)?;
        return Ok(0);
    }
    let dir = args
        .out
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let result = run_scaling_experiment(&cfg)?;
    let csv_path = dir.join(format!("{}.csv", cfg.experiment_id));
    let f = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    write_records_csv(&result.records, f)?;
    let summary_path = dir.join(format!("{}_summary.toml", cfg.experiment_id));
    std::fs::write(&summary_path, result.summary.to_toml()).map_err(|e| Error::io(&summary_path, e))?;
    for s in &result.summary.sizes {
        writeln!(
            out,
            "n={:<6} runs={:<4} mean_l2={:.6e} bound={:.6e}",
            s.n, s.runs, s.mean_l2, s.theory_bound
        )
        .map_err(io_err)?;
    }
    if let Some(slope) = result.summary.slope {
        writeln!(out, "slope={slope:.4}").map_err(io_err)?;
    }
    writeln!(out, "wrote {}", csv_path.display()).map_err(io_err)?;
    Ok(0)
}

fn bounds(a: BoundsArgs, out: &mut dyn Write) -> Result<i32> {
    let mut inputs = BoundInputs {
        n: a.n,
        d: a.d,
        l1: a.l1,
        b2: a.b2,
        l2bar: a.l2bar,
        m: a.m,
        sup_ratio: a.sup_ratio,
        ea2: a.ea2,
        delta: a.delta,
        nu: a.nu,
        sobolev: a.sobolev,
    };
    let density = a.density.as_deref().map(parse_density).transpose()?;
    if let Some(name) = &a.model {
        let model = FourierModel::by_name(name, a.d.unwrap_or(1))?;
        inputs.d.get_or_insert(model.dim());
        let norms = compute_norms(&model, density.as_ref())?;
        inputs.l1.get_or_insert(norms.l1);
        if inputs.b2.is_none() {
            inputs.b2 = norms.b2;
        }
        if inputs.l2bar.is_none() {
            inputs.l2bar = norms.l2bar;
        }
        if a.theorem == Theorem::LinfReservoir && inputs.sup_ratio.is_none() {
            if let Some(den) = &density {
                inputs.sup_ratio = Some(estimate_sup_ratio(&model, den)?.value);
            }
        }
        if a.theorem == Theorem::MixtureConstant && inputs.sobolev.is_none() {
            if let Some(nu) = inputs.nu {
                inputs.sobolev = Some(sobolev_integral(&model, nu)?);
            }
        }
    }
    if let (Some(den), None) = (&density, inputs.ea2) {
        if a.theorem == Theorem::LinfReservoir {
            inputs.ea2 = Some(root_second_moment(den, inputs.d.unwrap_or(1))?);
        }
    }
    let report = bound_report(a.theorem, &inputs)?;
    if a.report {
        writeln!(out, "{report}").map_err(io_err)?;
    } else {
        writeln!(out, "{}", report.value).map_err(io_err)?;
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut o = Vec::new();
        let mut e = Vec::new();
        let code = run_with(std::iter::once("quapprox").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn bound_value_only() {
        let (code, out, _) = call(&["bounds", "--theorem", "l2-trainable", "--l1", "1", "--n", "100"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "0.1");
    }

    #[test]
    fn missing_input_is_a_usage_error() {
        let (code, _, err) = call(&["bounds", "--theorem", "l2-reservoir", "--n", "4"]);
        assert_eq!(code, 1);
        assert!(err.contains("--l2bar"), "{err}");
    }

    #[test]
    fn unknown_subcommand_fails() {
        assert_eq!(call(&["nope"]).0, 1);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn model_fills_norms() {
        let (code, out, _) = call(&["bounds", "--theorem", "l2-reservoir", "--model", "laplace", "--density", "cauchy", "--n", "2"]);
        assert_eq!(code, 0);
        assert!((out.trim().parse::<f64>().unwrap() - 1.0).abs() < 1e-9);
    }
}
