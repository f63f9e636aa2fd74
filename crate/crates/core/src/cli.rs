//! Command-line front end: `check`, `ensemble` and `demo`.
//!
//! Exit codes: 0 pass, 1 inequality failure, 2 usage error, 3 numerical or
//! hypothesis rejection.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{subspace_cloner, subspace_partial_trace, uqcm};
use crate::error::Error;
use crate::functional::{fidelity, von_neumann_entropy};
use crate::qstate::{gaussian_matrix, haar_random_pure};
use crate::recovery::BetaQuadrature;
use crate::subspace::{antisymmetric_subspace_basis, binomial, slater_determinant};
use crate::verify::{
    resolve_params, run_ensemble, DeltaVariant, EnsembleSummary, FixtureFamily, OmegaSource, Params, Real,
    SubspaceFamily, TheoremId,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_REJECTED: i32 = 3;

/// Environment variable holding the default seed.
pub const SEED_ENV: &str = "PETZLAB_SEED";

#[derive(Debug, Parser)]
#[command(name = "petzlab", version, about = "Entropic cloning and broadcasting bounds, checked numerically")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one check and write a JSON report.
    Check(RunArgs),
    /// Run seeded trials of one check and write a JSON summary.
    Ensemble(EnsembleArgs),
    /// Print a closed-form value next to its computed counterpart.
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// thm3, thm4, thm13, thm5, thm6, thm7, thm8, thm14 or duality.
    #[arg(long)]
    theorem: Option<TheoremId>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k_copies: Option<usize>,
    #[arg(long)]
    d_out: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// constant, measure-prepare, symmetrized, clone-exact or classical-diagonal.
    #[arg(long)]
    family: Option<FixtureFamily>,
    /// tensor-power, maximally-mixed, random or slater.
    #[arg(long)]
    omega: Option<OmegaSource>,
    /// symmetric or antisymmetric.
    #[arg(long)]
    subspace: Option<SubspaceFamily>,
    /// r or cl.
    #[arg(long)]
    variant: Option<DeltaVariant>,
    /// Defaults to $PETZLAB_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the per-theorem slack floor.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// JSON run configuration; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Emit `"timestamp": null` for byte-reproducible output.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Debug, Args)]
struct EnsembleArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Demo {
    Werner,
    Antisym,
    Slater,
}

#[derive(Debug, Args)]
struct DemoArgs {
    name: Demo,
    #[arg(long)]
    seed: Option<u64>,
}

/// File form of a run; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub theorem: Option<TheoremId>,
    #[serde(default)]
    pub params: Params,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct RunReport<'a> {
    theorem: TheoremId,
    params: Params,
    trials: usize,
    seed: u64,
    tolerance: Real,
    min_slack: Real,
    mean_slack: Real,
    failures: usize,
    worst_seed: u64,
    pass: bool,
    version: &'static str,
    timestamp: Option<String>,
    reports: &'a [crate::verify::SlackReport],
}

#[derive(Debug, Serialize)]
struct Rejection {
    theorem: Option<TheoremId>,
    rejected: bool,
    kind: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    defect: Option<Real>,
    version: &'static str,
}

#[derive(Debug, Serialize)]
struct DemoReport {
    demo: &'static str,
    params: Params,
    value: Real,
    bound: Real,
    difference: Real,
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::NotSquare { .. } => "not_square",
        Error::NotHermitian { .. } => "not_hermitian",
        Error::NotPositive { .. } => "not_positive",
        Error::NotNormalized { .. } => "not_normalized",
        Error::ShapeMismatch { .. } => "shape_mismatch",
        Error::NotOrthonormal { .. } => "not_orthonormal",
        Error::CapExceeded { .. } => "cap_exceeded",
        Error::InvalidParameter(_) => "invalid_parameter",
        Error::InvalidPovm(_) => "invalid_povm",
        Error::HypothesisViolated { .. } => "hypothesis_violated",
        Error::UnknownTheorem(_) => "unknown_theorem",
    }
}

fn usage(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization");
    s.push('\n');
    s
}

fn emit(text: &str, output: Option<&Path>) -> std::io::Result<()> {
    match output {
        Some(path) => fs::write(path, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

fn default_seed() -> Result<u64, String> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| format!("{SEED_ENV}={v} is not an unsigned integer")),
        Err(_) => Ok(0),
    }
}

struct Resolved {
    theorem: TheoremId,
    params: Params,
    seed: u64,
    tolerance: Option<f64>,
    output: Option<PathBuf>,
    trials: Option<usize>,
}

fn resolve(args: &RunArgs) -> Result<Resolved, String> {
    let config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| format!("bad config {}: {e}", path.display()))?
        }
        None => RunConfig::default(),
    };
    let theorem = args
        .theorem
        .or(config.theorem)
        .ok_or("no theorem given (use --theorem or a config file)")?;
    let file = config.params;
    let params = Params {
        d: args.d.or(file.d),
        n: args.n.or(file.n),
        k: args.k.or(file.k),
        m: args.m.or(file.m),
        k_copies: args.k_copies.or(file.k_copies),
        d_out: args.d_out.or(file.d_out),
        epsilon: args.epsilon.or(file.epsilon),
        family: args.family.or(file.family),
        omega: args.omega.or(file.omega),
        subspace: args.subspace.or(file.subspace),
        variant: args.variant.or(file.variant),
    };
    let seed = match args.seed.or(config.seed) {
        Some(s) => s,
        None => default_seed()?,
    };
    if let Some(t) = args.tolerance.or(config.tolerance) {
        if !(t.is_finite() && t >= 0.0) {
            return Err(format!("tolerance {t} must be finite and nonnegative"));
        }
    }
    Ok(Resolved {
        theorem,
        params,
        seed,
        tolerance: args.tolerance.or(config.tolerance),
        output: args.output.clone().or(config.output),
        trials: config.trials,
    })
}

fn reject(theorem: Option<TheoremId>, e: &Error, output: Option<&Path>) -> i32 {
    let kind = error_kind(e);
    if matches!(e, Error::InvalidParameter(_) | Error::UnknownTheorem(_)) {
        return usage(e);
    }
    eprintln!("rejected: {e}");
    let defect = match e {
        Error::HypothesisViolated { defect, .. } => Some(Real(*defect)),
        _ => None,
    };
    let body = Rejection {
        theorem,
        rejected: true,
        kind,
        message: e.to_string(),
        defect,
        version: env!("CARGO_PKG_VERSION"),
    };
    if let Err(io) = emit(&to_json(&body), output) {
        eprintln!("error: cannot write report: {io}");
    }
    EXIT_REJECTED
}

fn run(args: &RunArgs, trials_flag: Option<u64>, single: bool) -> i32 {
    let r = match resolve(args) {
        Ok(r) => r,
        Err(msg) => return usage(msg),
    };
    let trials = if single {
        1
    } else {
        match trials_flag.map(|t| t as usize).or(r.trials) {
            Some(0) => return usage("trials must be positive"),
            Some(t) => t,
            None => return usage("ensemble needs --trials"),
        }
    };
    let output = r.output.as_deref();
    let shown_params = match resolve_params(r.theorem, &r.params) {
        Ok(p) => p,
        Err(e) => return reject(Some(r.theorem), &e, output),
    };
    let quad = BetaQuadrature::standard();
    let summary = if single {
        crate::verify::run_check(r.theorem, &r.params, r.seed, &quad)
            .map(|rep| EnsembleSummary::from_reports(r.theorem, r.seed, vec![rep]))
    } else {
        run_ensemble(r.theorem, &r.params, trials, r.seed, &quad)
    };
    let mut summary = match summary {
        Ok(s) => s,
        Err(e) => return reject(Some(r.theorem), &e, output),
    };
    let tolerance = r.tolerance.unwrap_or_else(|| r.theorem.tolerance());
    if r.tolerance.is_some() {
        let mut reports = std::mem::take(&mut summary.reports);
        reports.iter_mut().for_each(|rep| rep.set_tolerance(tolerance));
        summary = EnsembleSummary::from_reports(r.theorem, r.seed, reports);
    }
    let timestamp = (!args.no_timestamp).then(|| chrono::Utc::now().to_rfc3339());
    let body = RunReport {
        theorem: r.theorem,
        params: shown_params,
        trials,
        seed: r.seed,
        tolerance: Real(tolerance),
        min_slack: summary.min_slack,
        mean_slack: summary.mean_slack,
        failures: summary.failures,
        worst_seed: summary.worst_seed,
        pass: summary.pass(),
        version: env!("CARGO_PKG_VERSION"),
        timestamp,
        reports: &summary.reports,
    };
    if let Err(io) = emit(&to_json(&body), output) {
        eprintln!("error: cannot write report: {io}");
        return EXIT_REJECTED;
    }
    if summary.pass() {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn demo(args: &DemoArgs) -> i32 {
    let seed = match args.seed.map(Ok).unwrap_or_else(default_seed) {
        Ok(s) => s,
        Err(msg) => return usage(msg),
    };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let result = (|| -> crate::Result<DemoReport> {
        Ok(match args.name {
            Demo::Werner => {
                let (d, k, n) = (2, 1, 2);
                let phi = haar_random_pure(d, &mut rng)?;
                let cloned = uqcm(d, k, n)?.apply(phi.matrix())?;
                let value = fidelity(phi.tensor_power(n)?.matrix(), &cloned);
                let bound = binomial(d + k - 1, k) as f64 / binomial(d + n - 1, n) as f64;
                DemoReport {
                    demo: "werner",
                    params: Params { d: Some(d), n: Some(n), k: Some(k), ..Params::default() },
                    value: Real(value),
                    bound: Real(bound),
                    difference: Real(value - bound),
                }
            }
            Demo::Antisym => {
                let (d, n, k) = (3, 2, 1);
                let x = antisymmetric_subspace_basis(d, n)?;
                let y = antisymmetric_subspace_basis(d, k)?;
                let q = gaussian_matrix(d, n, &mut rng).qr().q();
                let orbitals: Vec<_> = (0..n).map(|j| q.column(j).into_owned()).collect();
                let phi = slater_determinant(&orbitals)?;
                let marginal = subspace_partial_trace(&x, &y)?.apply(phi.matrix())?;
                let recovered = subspace_cloner(&x, &y)?.apply(&marginal)?;
                let value = fidelity(phi.matrix(), &recovered);
                let bound = 1.0 / binomial(d - k, d - n) as f64;
                DemoReport {
                    demo: "antisym",
                    params: Params { d: Some(d), n: Some(n), k: Some(k), ..Params::default() },
                    value: Real(value),
                    bound: Real(bound),
                    difference: Real(value - bound),
                }
            }
            Demo::Slater => {
                let (d, n, k) = (4, 3, 2);
                let q = gaussian_matrix(d, n, &mut rng).qr().q();
                let orbitals: Vec<_> = (0..n).map(|j| q.column(j).into_owned()).collect();
                let phi = slater_determinant(&orbitals)?;
                let marginal = phi.partial_trace(&(0..k).collect::<Vec<_>>())?;
                let value = von_neumann_entropy(marginal.matrix());
                let bound = (binomial(n, k) as f64).ln();
                DemoReport {
                    demo: "slater",
                    params: Params { d: Some(d), n: Some(n), k: Some(k), ..Params::default() },
                    value: Real(value),
                    bound: Real(bound),
                    difference: Real(value - bound),
                }
            }
        })
    })();
    match result {
        Ok(report) => match emit(&to_json(&report), None) {
            Ok(()) => EXIT_PASS,
            Err(io) => {
                eprintln!("error: {io}");
                EXIT_REJECTED
            }
        },
        Err(e) => reject(None, &e, None),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 { EXIT_PASS } else { EXIT_USAGE };
        }
    };
    match &cli.command {
        Command::Check(a) => run(a, None, true),
        Command::Ensemble(a) => run(&a.run, a.trials, false),
        Command::Demo(a) => demo(a),
    }
}
