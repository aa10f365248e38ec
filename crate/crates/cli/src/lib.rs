//! Command-line front end: reads JSON model files, runs library operations,
//! and reports as indented text or JSON.

mod model;
mod report;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use hodegeo::check::{identity_suite, CheckError};
use hodegeo::connection::{canonical_connection, dual_recursive};
use hodegeo::covariant::{lie_symmetry_check, CovariantError};
use hodegeo::curvature::curvature_with_canonical;
use hodegeo::expr::{Expr, ExprError, RandomizedCheck};
use hodegeo::invariants::{invariant_report, InvariantError, Vanishing};
use hodegeo::matrix::ExprMatrix;
use hodegeo::numeric::{
    integrate_jacobi, integrate_semispray_flow, jacobi_residual_fd, raw_from_covariant, series_max_error,
    variation_oracle, IntegratorConfig, NumericError,
};
use hodegeo::riemann::{christoffel, el_semispray3, metric_spray, spray_curvature};

pub use model::{Model, ModelFile};
pub use report::render_text;

/// Failure classes, each with its own exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Model(String),
    #[error("{0}")]
    Mismatch(String),
    #[error("{0}")]
    Numeric(String),
    #[error("identity check failed")]
    CheckFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Model(_) => 2,
            CliError::Mismatch(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::CheckFailed => 5,
        }
    }
}

impl From<ExprError> for CliError {
    fn from(e: ExprError) -> Self {
        CliError::Model(e.to_string())
    }
}

impl From<NumericError> for CliError {
    fn from(e: NumericError) -> Self {
        match e {
            NumericError::Config(_) => CliError::Usage(e.to_string()),
            NumericError::Shape { .. } => CliError::Mismatch(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<InvariantError> for CliError {
    fn from(e: InvariantError) -> Self {
        match e {
            InvariantError::Shape { .. } => CliError::Mismatch(e.to_string()),
            InvariantError::Expr(e) => e.into(),
        }
    }
}

impl From<CovariantError> for CliError {
    fn from(e: CovariantError) -> Self {
        match e {
            CovariantError::Arity { .. } | CovariantError::Level { .. } => CliError::Mismatch(e.to_string()),
            CovariantError::NotPointField { .. } => CliError::Model(e.to_string()),
            CovariantError::Expr(e) => e.into(),
        }
    }
}

impl From<CheckError> for CliError {
    fn from(e: CheckError) -> Self {
        match e {
            CheckError::Expr(e) => e.into(),
            CheckError::Covariant(e) => e.into(),
            CheckError::Invariant(e) => e.into(),
        }
    }
}

fn output_error(path: &Path, e: io::Error) -> CliError {
    CliError::Model(format!("cannot write {}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "hodegeo", version, about = "Geometry of systems of higher-order ODEs")]
struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Seed for randomized identity checks.
    #[arg(long, global = true, default_value_t = 0x5eed)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Span {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    t0: f64,
    #[arg(long, allow_negative_numbers = true)]
    t1: f64,
    #[arg(long)]
    step: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Canonical nonlinear connection N_(α) and its dual M_(α).
    Connection { model: PathBuf },
    /// Curvature components R_(α) of the canonical connection.
    Curvature { model: PathBuf },
    /// W3 (n=1, k=2) or W4 (n=1, k=3), in direct and curvature form.
    Invariant { model: PathBuf },
    /// Point-symmetry test through the raw and covariant equations.
    Symmetry {
        model: PathBuf,
        /// Candidate field; defaults to the model's `field`.
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Integrate a geodesic from an initial jet.
    Geodesic {
        model: PathBuf,
        #[arg(long)]
        init: PathBuf,
        #[command(flatten)]
        span: Span,
        /// Write the trajectory as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate a Jacobi field along a geodesic.
    Jacobi {
        model: PathBuf,
        #[arg(long)]
        init: PathBuf,
        /// Covariant initial data {"xi": [...], "nabla": [[...], ...]}.
        #[arg(long = "var")]
        variation: PathBuf,
        #[command(flatten)]
        span: Span,
        /// Compare with central differences of neighbouring geodesics.
        #[arg(long)]
        oracle: bool,
        /// Offset for the oracle.
        #[arg(long = "s", default_value_t = 1e-3)]
        offset: f64,
        /// Write the field as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Metric data: Christoffel symbols, geodesic spray, curvature.
    Riemann {
        model: PathBuf,
        /// Emit the order-3 Euler–Lagrange model of ½ g(z, z) instead.
        #[arg(long)]
        prolong: bool,
        /// Write the emitted model here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the structural identity suite on the model.
    Check {
        model: PathBuf,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

/// Parse `argv` (including the program name), execute, and return the
/// process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// As [`run`], writing reports to `out` and diagnostics to `err`.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    return 0;
                }
                _ => 1,
            };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    let format = cli.format;
    let outcome = execute(cli, out);
    let (report, error) = match outcome {
        Ok(r) => (r, None),
        Err(Failure::Plain(e)) => (None, Some(e)),
        Err(Failure::WithReport(r, e)) => (Some(r), Some(e)),
    };
    if let Some(report) = report {
        let text = match format {
            Format::Json => serde_json::to_string_pretty(&report).expect("reports serialize") + "\n",
            Format::Text => render_text(&report),
        };
        if out.write_all(text.as_bytes()).and_then(|_| out.flush()).is_err() {
            return 2;
        }
    }
    match error {
        None => 0,
        Some(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

enum Failure {
    Plain(CliError),
    /// A completed report whose verdict is a failure.
    WithReport(Value, CliError),
}

impl<E: Into<CliError>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Plain(e.into())
    }
}

fn matrix_json(m: &ExprMatrix) -> Value {
    Value::Array(
        m.rows()
            .iter()
            .map(|r| Value::Array(r.iter().map(|e| Value::String(e.to_string())).collect()))
            .collect(),
    )
}

fn list_json(v: &[Expr]) -> Value {
    Value::Array(v.iter().map(|e| Value::String(e.to_string())).collect())
}

fn header(command: &str, model: &Model) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), json!(command));
    m.insert("dimension".into(), json!(model.n));
    m.insert("order".into(), json!(model.k));
    m
}

fn check_config(seed: u64) -> RandomizedCheck {
    RandomizedCheck::default().with_seed(seed)
}

fn sampling(seed: u64, trials: usize, tol: f64) -> Result<RandomizedCheck, CliError> {
    if trials == 0 || !(tol >= 0.0) {
        return Err(CliError::Usage("--trials must be positive and --tol non-negative".into()));
    }
    Ok(check_config(seed).with_trials(trials).with_tol(tol))
}

fn numbers(v: &[f64]) -> Value {
    json!(v)
}

/// Run the command. `None` means the command wrote its own output.
fn execute(cli: Cli, out: &mut dyn Write) -> Result<Option<Value>, Failure> {
    let seed = cli.seed;
    match cli.command {
        Command::Connection { model } => {
            let model = Model::load(&model)?;
            let s = model.spray()?;
            let conn = canonical_connection(s);
            let dual = dual_recursive(s);
            let mut r = header("connection", &model);
            let mut n = Map::new();
            let mut m = Map::new();
            for a in 1..=model.k {
                n.insert(format!("N_({a})"), matrix_json(conn.level(a)));
                m.insert(format!("M_({a})"), matrix_json(dual.level(a)));
            }
            r.insert("N".into(), Value::Object(n));
            r.insert("M".into(), Value::Object(m));
            Ok(Some(Value::Object(r)))
        }
        Command::Curvature { model } => {
            let model = Model::load(&model)?;
            let s = model.spray()?;
            let curv = curvature_with_canonical(s, &canonical_connection(s));
            let mut r = header("curvature", &model);
            let mut c = Map::new();
            for a in (0..model.k).rev() {
                c.insert(format!("R_({a})"), matrix_json(curv.level(a)));
            }
            r.insert("R".into(), Value::Object(c));
            Ok(Some(Value::Object(r)))
        }
        Command::Invariant { model } => {
            let model = Model::load(&model)?;
            let s = model.spray()?;
            let rep = invariant_report(s, &check_config(seed))?;
            let mut r = header("invariant", &model);
            let vanishing = match &rep.vanishing {
                Vanishing::Exact => "exact",
                Vanishing::Sampled => "sampled",
                Vanishing::Nonzero { .. } => "nonzero",
            };
            r.insert("invariant".into(), json!(rep.kind.to_string()));
            r.insert("direct".into(), json!(rep.direct.to_string()));
            r.insert("curvature_form".into(), json!(rep.curvature_form.to_string()));
            r.insert("identity_verified".into(), json!(rep.identity_verified));
            r.insert("identity_discrepancy".into(), json!(rep.identity_discrepancy));
            r.insert("vanishing".into(), json!(vanishing));
            r.insert("sample_max".into(), json!(rep.sample_max));
            r.insert("verdict".into(), json!(rep.verdict()));
            r.insert("notes".into(), json!(rep.notes));
            Ok(Some(Value::Object(r)))
        }
        Command::Symmetry {
            model,
            field,
            trials,
            tol,
        } => {
            let model = Model::load(&model)?;
            let s = model.spray()?;
            let x = match (&field, &model.field) {
                (Some(path), _) => model.load_field(path)?,
                (None, Some(f)) => f.clone(),
                (None, None) => {
                    return Err(CliError::Usage("no field: pass --field or add `field` to the model".into()).into())
                }
            };
            let check = sampling(seed, trials, tol)?;
            let rep = lie_symmetry_check(s, &x, &check)?;
            let mut r = header("symmetry", &model);
            r.insert("field".into(), list_json(&x));
            r.insert("raw_residual".into(), list_json(&rep.raw));
            r.insert("covariant_residual".into(), list_json(&rep.covariant));
            r.insert("is_symmetry".into(), json!(rep.is_symmetry));
            r.insert("exact".into(), json!(rep.exact));
            r.insert("verdicts_agree".into(), json!(rep.verdicts_agree()));
            r.insert("proportional".into(), json!(rep.proportionality.equal));
            r.insert("proportionality_discrepancy".into(), json!(rep.proportionality.max_discrepancy));
            r.insert("max_residual".into(), json!(rep.max_magnitude()));
            Ok(Some(Value::Object(r)))
        }
        Command::Geodesic {
            model,
            init,
            span,
            out: csv,
        } => {
            let model = Model::load(&model)?;
            let s = model.numeric_spray()?;
            let p = model.load_init(&init)?;
            let cfg = IntegratorConfig::new(span.t0, span.t1, span.step)?;
            let traj = integrate_semispray_flow(&s, &p, &cfg)?;
            if let Some(path) = &csv {
                let f = File::create(path).map_err(|e| output_error(path, e))?;
                traj.write_csv(BufWriter::new(f)).map_err(|e| output_error(path, e))?;
            }
            let last = traj.point(traj.len() - 1);
            let mut r = header("geodesic", &model);
            r.insert("steps".into(), json!(cfg.steps()));
            r.insert("t".into(), json!(traj.times()[traj.len() - 1]));
            r.insert("x".into(), numbers(last.level(0)));
            for a in 1..=model.k {
                r.insert(format!("y{a}"), numbers(last.level(a)));
            }
            r.insert("regular".into(), json!(traj.all_regular()));
            if let Some(path) = &csv {
                r.insert("csv".into(), json!(path.display().to_string()));
            }
            Ok(Some(Value::Object(r)))
        }
        Command::Jacobi {
            model,
            init,
            variation,
            span,
            oracle,
            offset,
            out: csv,
        } => {
            let model = Model::load(&model)?;
            let s = model.numeric_spray()?;
            let p = model.load_init(&init)?;
            let cov = model.load_variation(&variation)?;
            let cfg = IntegratorConfig::new(span.t0, span.t1, span.step)?;
            let traj = integrate_semispray_flow(&s, &p, &cfg)?;
            let jac = integrate_jacobi(&s, &traj, &cov, &cfg)?;
            if let Some(path) = &csv {
                let f = File::create(path).map_err(|e| output_error(path, e))?;
                jac.write_csv(BufWriter::new(f)).map_err(|e| output_error(path, e))?;
            }
            let last = jac.len() - 1;
            let mut r = header("jacobi", &model);
            r.insert("steps".into(), json!(cfg.steps()));
            r.insert("t".into(), json!(jac.times()[last]));
            r.insert("xi".into(), numbers(jac.xi(last)));
            for a in 1..=model.k {
                r.insert(format!("nabla{a}"), numbers(jac.level(last, a)));
            }
            let xi: Vec<Vec<f64>> = (0..jac.len()).map(|i| jac.xi(i).to_vec()).collect();
            match jacobi_residual_fd(&s, &traj, &xi) {
                Ok(res) => r.insert("fd_residual".into(), json!(res.max())),
                Err(NumericError::Grid(_)) => r.insert("fd_residual".into(), Value::Null),
                Err(e) => return Err(e.into()),
            };
            if oracle {
                let raw = raw_from_covariant(&dual_recursive(&s), &p, &cov)?;
                let orc = variation_oracle(&s, &p, &raw, offset, &cfg)?;
                r.insert("oracle_offset".into(), json!(offset));
                r.insert("oracle_error".into(), json!(series_max_error(&orc, &jac)?));
            }
            if let Some(path) = &csv {
                r.insert("csv".into(), json!(path.display().to_string()));
            }
            Ok(Some(Value::Object(r)))
        }
        Command::Riemann {
            model,
            prolong,
            out: target,
        } => {
            let model = Model::load(&model)?;
            let metric = model.metric()?;
            if prolong {
                let el = el_semispray3(metric);
                let file = ModelFile {
                    dimension: model.n,
                    order: 3,
                    parameters: model.parameters.clone(),
                    g: Some(el.coefficients().iter().map(ToString::to_string).collect()),
                    metric: Some(metric.matrix().rows().iter().map(|r| r.iter().map(ToString::to_string).collect()).collect()),
                    field: None,
                };
                let text = serde_json::to_string_pretty(&file).expect("model files serialize") + "\n";
                match &target {
                    Some(path) => std::fs::write(path, text).map_err(|e| output_error(path, e))?,
                    None => {
                        out.write_all(text.as_bytes()).map_err(|e| output_error(Path::new("<stdout>"), e))?;
                        return Ok(None);
                    }
                }
                let mut r = header("riemann", &model);
                r.insert("prolonged_model".into(), json!(target.as_ref().map(|p| p.display().to_string())));
                return Ok(Some(Value::Object(r)));
            }
            let gamma = christoffel(metric);
            let mut symbols = Map::new();
            for i in 0..model.n {
                for j in 0..model.n {
                    for k in j..model.n {
                        let g = gamma.get(i, j, k);
                        if !g.is_zero() {
                            symbols.insert(format!("gamma^{}_{}{}", i + 1, j + 1, k + 1), json!(g.to_string()));
                        }
                    }
                }
            }
            let mut r = header("riemann", &model);
            r.insert("metric".into(), matrix_json(metric.matrix()));
            r.insert("inverse".into(), matrix_json(metric.inverse()));
            r.insert("christoffel".into(), Value::Object(symbols));
            r.insert("spray".into(), list_json(metric_spray(metric).coefficients()));
            r.insert("curvature".into(), matrix_json(&spray_curvature(metric)));
            Ok(Some(Value::Object(r)))
        }
        Command::Check { model, trials, tol } => {
            let model = Model::load(&model)?;
            let s = model.spray()?;
            let check = sampling(seed, trials, tol)?;
            let suite = identity_suite(s, model.field.as_deref(), &check)?;
            let mut r = header("check", &model);
            let items: Vec<Value> = suite
                .items
                .iter()
                .map(|i| {
                    json!({
                        "name": i.name,
                        "passed": i.passed(),
                        "max_discrepancy": i.report.max_discrepancy,
                    })
                })
                .collect();
            r.insert("items".into(), Value::Array(items));
            r.insert("passed".into(), json!(suite.passed()));
            let r = Value::Object(r);
            if suite.passed() {
                Ok(Some(r))
            } else {
                Err(Failure::WithReport(r, CliError::CheckFailed))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_status_per_failure_class() {
        let codes: Vec<i32> = [
            CliError::Usage(String::new()),
            CliError::Model(String::new()),
            CliError::Mismatch(String::new()),
            CliError::Numeric(String::new()),
            CliError::CheckFailed,
        ]
        .iter()
        .map(CliError::exit_code)
        .collect();
        assert_eq!(codes, [1, 2, 3, 4, 5]);
    }

    #[test]
    fn subcommand_help_lists_options() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run_with(["hodegeo", "check", "--help"], &mut out, &mut err), 0);
        let help = String::from_utf8(out).unwrap();
        assert!(help.contains("--tol") && help.contains("--trials"));
    }

    #[test]
    fn numeric_errors_map_to_classes() {
        assert_eq!(CliError::from(NumericError::Config("h".into())).exit_code(), 1);
        assert_eq!(CliError::from(NumericError::NonFinite { t: 0.5 }).exit_code(), 4);
        let shape = NumericError::Shape { n: 1, k: 1, found_n: 2, found_k: 1 };
        assert_eq!(CliError::from(shape).exit_code(), 3);
    }
}
