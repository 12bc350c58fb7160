use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use nshess::approx::nested_set_hessian;
use nshess::bounds::{error_bound_nsh, BoundInputs, NormKind};
use nshess::eval::EvaluationCache;
use nshess::linalg::{frobenius_norm, spectral_norm};
use nshess::quadmodel::{interpolate_minimal, FlatModel, QuadraticModel};
use nshess::registry;
use nshess::sets::{canonical_set, nshc_points};
use nshess::study::{run_study, Estimator, FittedOrder, StudyConfig};
use nshess::verify::verify_examples;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "nshess", version, about = "Derivative-free Hessian approximation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the set radius and write a convergence table.
    Study(StudyArgs),
    /// Check the built-in point-set examples.
    VerifyExamples {
        #[arg(long)]
        json: bool,
    },
    /// One nested-set Hessian and its quadratic model, as JSON.
    Approx(ApproxArgs),
}

#[derive(Args)]
struct StudyArgs {
    /// Registry name, or `f,g` for products and quotients.
    #[arg(long, default_value = "cubes")]
    function: String,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long, default_value_t = 0.1)]
    beta_start: f64,
    #[arg(long, default_value_t = 0.5)]
    beta_ratio: f64,
    #[arg(long, default_value_t = 12)]
    beta_steps: usize,
    /// nested-set, product-sc, product-qc, quotient-sc, quotient-qc, power-sc, power-qc
    #[arg(long, default_value = "nested-set")]
    estimator: String,
    /// Exponent for the power estimators.
    #[arg(long, default_value_t = 2)]
    power: u32,
    #[arg(long)]
    symmetrize: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated base point; defaults to 0.5 in every coordinate.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    /// Smallest acceptable fitted order.
    #[arg(long, default_value_t = 0.9)]
    min_order: f64,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ApproxArgs {
    #[arg(long, default_value = "cubes")]
    function: String,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[arg(long)]
    symmetrize: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write every function request (hits and misses) as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the sample points as CSV.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Write the quadratic model as a one-row CSV.
    #[arg(long)]
    model: Option<PathBuf>,
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Acceptance(String),
    Config(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(e)
    }
}

impl From<nshess::Error> for Failure {
    fn from(e: nshess::Error) -> Self {
        Failure::Config(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Study(a) => study(a),
        Command::VerifyExamples { json } => verify(json),
        Command::Approx(a) => approx(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Acceptance(msg)) => {
            eprintln!("fail: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn create(path: &Path) -> anyhow::Result<File> {
    File::create(path).with_context(|| format!("cannot create {}", path.display()))
}

fn study(a: StudyArgs) -> Result<(), Failure> {
    let estimator: Estimator = a.estimator.parse()?;
    let config = StudyConfig {
        function: a.function,
        dim: a.dim,
        k: a.k,
        x0: a.x0,
        beta_start: a.beta_start,
        beta_ratio: a.beta_ratio,
        beta_steps: a.beta_steps,
        betas: None,
        estimator,
        power: a.power,
        symmetrize: a.symmetrize,
        seed: a.seed,
    };
    let report = run_study(&config)?;
    match &a.out {
        Some(p) => report.write_csv(create(p)?).context("writing study CSV")?,
        None => report.write_csv(io::stdout().lock()).context("writing study CSV")?,
    }
    let order = match report.fitted {
        FittedOrder::Exact => "exact".to_string(),
        FittedOrder::Slope { order, kappa } => format!("{order:.3} (kappa {kappa:.3e})"),
        FittedOrder::Insufficient => "insufficient data".to_string(),
    };
    eprintln!(
        "{} / {}: order {order}, {} of {} rows within bound",
        report.function,
        report.estimator,
        report.rows.iter().filter(|r| r.within_bound()).count(),
        report.rows.len()
    );
    if report.passes(a.min_order) {
        Ok(())
    } else {
        Err(Failure::Acceptance(format!("study below order {} or outside its bound", a.min_order)))
    }
}

fn verify(json: bool) -> Result<(), Failure> {
    let report = verify_examples();
    if json {
        println!("{}", serde_json::to_string_pretty(&report).context("serializing report")?);
    } else {
        for c in &report.checks {
            println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Acceptance("example check failed".into()))
    }
}

#[derive(Serialize)]
struct ApproxOutput {
    function: String,
    dim: usize,
    k: usize,
    beta: f64,
    x0: Vec<f64>,
    hessian: Vec<Vec<f64>>,
    exact: Vec<Vec<f64>>,
    error_spec: f64,
    error_fro: f64,
    bound: Option<f64>,
    evals: usize,
    model: FlatModel,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn approx(a: ApproxArgs) -> Result<(), Failure> {
    if a.k > a.dim {
        return Err(anyhow::anyhow!("k = {} exceeds dim = {}", a.k, a.dim).into());
    }
    if !(a.beta.is_finite() && a.beta > 0.0) {
        return Err(anyhow::anyhow!("beta must be positive, got {}", a.beta).into());
    }
    let f = registry::lookup(&a.function, a.dim, a.seed)?;
    let x0 = match &a.x0 {
        Some(v) if v.len() != a.dim => {
            return Err(anyhow::anyhow!("x0 has {} entries but dim is {}", v.len(), a.dim).into())
        }
        Some(v) => DVector::from_column_slice(v),
        None => DVector::from_element(a.dim, 0.5),
    };
    let (s, t) = canonical_set(a.dim, a.k, a.beta)?;

    let mut cache = EvaluationCache::new(f.oracle());
    if a.trace.is_some() {
        cache.enable_trace();
    }
    let est = nested_set_hessian(&x0, &s, &t, &mut cache, a.symmetrize)?;
    let model = interpolate_minimal(&x0, &s, a.k, &mut cache)?;
    let exact = f.hessian(&x0);
    let diff = &est.hessian - &exact;
    let bound = match f.lipschitz(&x0, s.radius() + t.radius()) {
        Some(l) => Some(error_bound_nsh(&BoundInputs::from_sets(&s, &t, l.grad, l.hess, NormKind::Spectral)?)?),
        None => None,
    };

    if let Some(p) = &a.trace {
        cache.write_trace_csv(create(p)?).context("writing trace CSV")?;
    }
    if let Some(p) = &a.points {
        nshc_points(&x0, &s, &t)?
            .write_csv(create(p)?)
            .context("writing points CSV")?;
    }
    if let Some(p) = &a.model {
        let mut w = csv::Writer::from_writer(create(p)?);
        w.write_record(QuadraticModel::csv_header(a.dim)).context("writing model CSV")?;
        w.write_record(model.csv_record()).context("writing model CSV")?;
        w.flush().context("writing model CSV")?;
    }

    let out = ApproxOutput {
        function: f.name().to_string(),
        dim: a.dim,
        k: a.k,
        beta: a.beta,
        x0: x0.iter().copied().collect(),
        hessian: rows(&est.hessian),
        exact: rows(&exact),
        error_spec: spectral_norm(&diff),
        error_fro: frobenius_norm(&diff),
        bound,
        evals: est.eval_count,
        model: model.flat(),
    };
    let mut stdout = io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, &out).context("serializing result")?;
    writeln!(stdout).context("writing stdout")?;
    Ok(())
}
