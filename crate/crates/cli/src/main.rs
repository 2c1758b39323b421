//! `hpoint`: command-line front end for the Hilbert point toolkit.
//!
//! Subcommands load JSON instances, run certification and classification
//! routines from the library, and emit a single JSON report on stdout with a
//! short human-readable summary on stderr, so scripts parse one stream and
//! people read the other.
//!
//! Exit codes: 0 success, 2 input or usage error, 3 internal route
//! disagreement, 4 counterexample found by a search. A nonzero status never
//! contradicts the report: exit 3 reports `agreement: false` and no merged
//! verdict, exit 4 serializes the counterexample it claims.

mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hilbert_points::certify::{
    gradient_residual, hilbert_oracle, projection_pnorm, two_valued_check, OracleOptions,
    OracleOutcome,
};
use hilbert_points::rademacher::{classify, expand, CaseLabel, RademacherSum};
use hilbert_points::schema::{FieldJson, SumJson};
use hilbert_points::sweep::{
    classifier_agreement_sweep, evaluate_routes, item_seed, lemma_suite, minimize_field,
    minimize_sum, theorem1_equivalence_sweep, LemmaSuiteCounts, SweepOptions,
};
use hilbert_points::{gen, geometry, Error as LibError, Exponent, Field};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

type P = Exponent<f64>;

const EXIT_OK: u8 = 0;
const EXIT_INPUT: u8 = 2;
const EXIT_DISAGREE: u8 = 3;
const EXIT_COUNTEREXAMPLE: u8 = 4;

/// Expansion margins inside (route tol, this) count as boundary instances:
/// there the structural classifier and the brute-force expansion check are
/// allowed to resolve the cutoff differently, so a split is reported but not
/// treated as an internal disagreement.
const BOUNDARY_BAND: f64 = 1e-6;

/// Hypothesis/conclusion tolerance of the lemma suite and exclusion search.
const GEOMETRY_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(
    name = "hpoint",
    version,
    about = "Certify, classify, and stress-test Hilbert point instances",
    after_help = "Exit codes: 0 ok; 2 input/usage error; 3 certification routes disagree; \
                  4 counterexample found.\nReports are JSON on stdout; summaries go to stderr."
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Base seed for every randomized component; per-item seeds are derived
    /// from it and the item index, so results are thread-count independent.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for batch items and search trials (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Report format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run all four certification routes on a field instance at each p.
    Certify(CertifyArgs),
    /// Decide which structural case a sign sum falls in, with a brute-force
    /// cross-check on its expansion.
    Classify(ClassifyArgs),
    /// Closed-form p-norm of the rank-one projection onto a field.
    Projnorm(ProjnormArgs),
    /// Run only the minimization route, reporting the witness it finds.
    Oracle(OracleArgs),
    /// Run the vanishing-triple lemma suite on constructed instances.
    Lemmas(LemmasArgs),
    /// Randomized falsification search (route equivalence, classifier
    /// agreement, or zero-sum exclusion).
    Search(SearchArgs),
}

#[derive(Args)]
struct CertifyArgs {
    /// Field instance: {"weights"?: [...], "dim": d, "values": [[...], ...]}.
    path: PathBuf,

    /// Exponent to certify at; repeatable, "inf" accepted.
    /// Default: 1 1.5 3 4 inf. At p = 2 every field is unimprovable, so the
    /// two-valued profile is reported but excluded from the agreement check.
    #[arg(long = "p", value_parser = parse_p)]
    ps: Vec<P>,

    /// Tolerance for the closed-form routes (profile margin, projection norm
    /// deviation, gradient residual). The minimization route keeps its own
    /// looser default.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Sign-sum instance: {"dim": d, "xs": [[...], ...]}.
    path: PathBuf,

    /// Relative tolerance for the norm comparisons of the decision procedure.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct ProjnormArgs {
    /// Field instance: {"weights"?: [...], "dim": d, "values": [[...], ...]}.
    path: PathBuf,

    /// Exponent; repeatable, "inf" accepted. Default: 1 1.5 3 4 inf.
    #[arg(long = "p", value_parser = parse_p)]
    ps: Vec<P>,

    /// Tolerance for the "norm equals one" flag and the profile margin.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct OracleArgs {
    /// Field instance: {"weights"?: [...], "dim": d, "values": [[...], ...]}.
    path: PathBuf,

    /// Exponent; repeatable, "inf" accepted. Default: 1 1.5 3 4 inf.
    #[arg(long = "p", value_parser = parse_p)]
    ps: Vec<P>,

    /// Decision tolerance of the minimization route.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,

    /// Independent restarts merged by best objective.
    #[arg(long, default_value_t = 16)]
    restarts: usize,

    /// Iteration budget per restart.
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
}

#[derive(Args)]
struct LemmasArgs {
    /// Vanishing-triple reconstruction instances.
    #[arg(long, default_value_t = 500)]
    decompose: usize,

    /// Parametrized four-equal-norms orthogonality instances.
    #[arg(long, default_value_t = 500)]
    orthogonality: usize,

    /// Random orthogonal families for the subset-sum level check.
    #[arg(long, default_value_t = 200)]
    subset: usize,

    /// Adversarial zero-sum exclusion trials.
    #[arg(long, default_value_t = 100_000)]
    exclusion: usize,
}

#[derive(Args)]
struct SearchArgs {
    /// What to try to falsify.
    #[arg(long, value_enum)]
    mode: SearchMode,

    /// Number of random trials (at least 1).
    #[arg(long, default_value_t = 500)]
    trials: usize,

    /// Exponent grid for mode=theorem1; repeatable, "inf" accepted, p = 2
    /// rejected (agreement is not a theorem there). Default: 1 1.5 3 4 inf.
    #[arg(long = "p", value_parser = parse_p)]
    ps: Vec<P>,

    /// Route tolerance (theorem1, classifier) or hypothesis tolerance
    /// (lemma2).
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SearchMode {
    /// Cross-validate the four certification routes on random fields.
    Theorem1,
    /// Check the structural classifier against brute-force expansion.
    Classifier,
    /// Hunt for a zero higher subset sum under the two-level hypotheses.
    Lemma2,
}

impl SearchMode {
    fn name(self) -> &'static str {
        match self {
            SearchMode::Theorem1 => "theorem1",
            SearchMode::Classifier => "classifier",
            SearchMode::Lemma2 => "lemma2",
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Lib(#[from] LibError),
    #[error("{0}")]
    Usage(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(EXIT_INPUT);
        }
        // The global pool can be initialized only once; a second attempt in
        // the same process is harmless.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    match &cli.command {
        Cmd::Certify(args) => cmd_certify(cli, args),
        Cmd::Classify(args) => cmd_classify(cli, args),
        Cmd::Projnorm(args) => cmd_projnorm(cli, args),
        Cmd::Oracle(args) => cmd_oracle(cli, args),
        Cmd::Lemmas(args) => cmd_lemmas(cli, args),
        Cmd::Search(args) => cmd_search(cli, args),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn parse_p(s: &str) -> Result<P, String> {
    let t = s.trim();
    t.parse::<P>().map_err(|err| {
        if t.parse::<f64>().is_ok() {
            err.to_string()
        } else {
            format!("`{t}` is not a number or `inf`")
        }
    })
}

fn default_ps() -> Vec<P> {
    vec![
        Exponent::new(1.0).expect("1 is a valid exponent"),
        Exponent::new(1.5).expect("1.5 is a valid exponent"),
        Exponent::new(3.0).expect("3 is a valid exponent"),
        Exponent::new(4.0).expect("4 is a valid exponent"),
        Exponent::Infinity,
    ]
}

fn effective_ps(ps: &[P]) -> Vec<P> {
    if ps.is_empty() {
        default_ps()
    } else {
        ps.to_vec()
    }
}

fn check_tol(tol: f64) -> Result<(), CliError> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--tol must be a positive finite number, got {tol}"
        )))
    }
}

fn load_value(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.display().to_string(),
        source,
    })
}

/// Parses a field instance and returns it with the canonical digest of the
/// raw JSON it came from.
fn load_field(path: &Path) -> Result<(Field<f64>, String), CliError> {
    let value = load_value(path)?;
    let wire: FieldJson = serde_json::from_value(value.clone()).map_err(|source| {
        CliError::Parse {
            path: path.display().to_string(),
            source,
        }
    })?;
    Ok((wire.to_field()?, report::digest(&value)))
}

fn load_sum(path: &Path) -> Result<(RademacherSum<f64>, String), CliError> {
    let value = load_value(path)?;
    let wire: SumJson = serde_json::from_value(value.clone()).map_err(|source| CliError::Parse {
        path: path.display().to_string(),
        source,
    })?;
    Ok((wire.to_sum()?, report::digest(&value)))
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Base of every report: common identity fields in one place so all commands
/// agree on their names.
fn report_base(cli: &Cli, command: &str, digest: Option<&str>) -> Value {
    json!({
        "command": command,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "seed": cli.seed,
        "instance_digest": digest,
    })
}

fn merge(base: Value, extra: Value) -> Value {
    let (Value::Object(mut out), Value::Object(add)) = (base, extra) else {
        unreachable!("report fragments are JSON objects");
    };
    out.extend(add);
    Value::Object(out)
}

fn emit(cli: &Cli, report: &Value) {
    match cli.format {
        Format::Json => {
            println!("{}", serde_json::to_string(report).expect("reports serialize"));
        }
    }
}

fn oracle_payload(outcome: &OracleOutcome<f64>) -> Value {
    let improvement = (outcome.baseline() - outcome.best_objective()) / outcome.baseline();
    let (status, iterations) = match outcome {
        OracleOutcome::Decided { iterations, .. } => ("decided", *iterations),
        OracleOutcome::Indeterminate { iterations, .. } => ("indeterminate", *iterations),
    };
    let violation = outcome
        .verdict()
        .and_then(|v| v.violation.as_ref())
        .map(|f| serde_json::to_value(FieldJson::from_field(f)).expect("fields serialize"));
    json!({
        "status": status,
        "is_hilbert": outcome.is_hilbert(),
        "baseline": outcome.baseline(),
        "best_objective": outcome.best_objective(),
        "improvement": improvement,
        "iterations": iterations,
        "violation": violation,
    })
}

fn label_payload(label: &CaseLabel<f64>) -> Value {
    let witness = match label {
        CaseLabel::CaseA { vectors } => json!({ "vectors": vectors }),
        CaseLabel::CaseB { x } => json!({ "x": x }),
        CaseLabel::CaseC { u, v } => json!({ "u": u, "v": v }),
        CaseLabel::NotHilbert { reason, norms } => json!({
            "reason": reason,
            "norms": [norms.0, norms.1],
        }),
    };
    json!({
        "case": label.name(),
        "is_hilbert": label.is_hilbert(),
        "witness": witness,
    })
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

fn cmd_certify(cli: &Cli, args: &CertifyArgs) -> Result<u8, CliError> {
    check_tol(args.tol)?;
    let (phi, digest) = load_field(&args.path)?;
    let ps = effective_ps(&args.ps);
    let profile = two_valued_check(&phi, args.tol)?;

    let mut verdicts = Vec::new();
    let mut all_agree = true;
    for (index, &p) in ps.iter().enumerate() {
        let started = Instant::now();
        let pn = projection_pnorm(&phi, p)?;
        let residual = gradient_residual(&phi, p)?;
        let opts = OracleOptions {
            seed: item_seed(cli.seed, index as u64),
            ..OracleOptions::default()
        };
        let outcome = hilbert_oracle(&phi, p, &opts)?;

        let projection_ok = (pn - 1.0).abs() <= args.tol;
        let gradient_ok = residual <= args.tol;
        let oracle_ok = outcome.is_hilbert();
        // At p = 2 every nontrivial field is unimprovable, so the three
        // p-dependent routes must certify regardless of the profile; the
        // profile joins the agreement check only for p ≠ 2.
        let agree = if p.is_two() {
            projection_ok && gradient_ok && oracle_ok == Some(true)
        } else {
            projection_ok == profile.is_hilbert
                && gradient_ok == profile.is_hilbert
                && oracle_ok == Some(profile.is_hilbert)
        };
        all_agree &= agree;

        let is_hilbert = if !agree {
            Value::Null
        } else if p.is_two() {
            Value::Bool(true)
        } else {
            Value::Bool(profile.is_hilbert)
        };
        verdicts.push(json!({
            "p": p.to_string(),
            "agree": agree,
            "is_hilbert": is_hilbert,
            "projection_pnorm": { "value": pn, "is_hilbert": projection_ok },
            "gradient_residual": { "value": residual, "is_hilbert": gradient_ok },
            "oracle": oracle_payload(&outcome),
            "elapsed_ms": ms(started),
        }));

        let text = match (&verdicts.last().unwrap()["is_hilbert"], &outcome) {
            (Value::Bool(true), _) => "routes agree: Hilbert point".to_string(),
            (Value::Bool(false), out) => format!(
                "routes agree: not a Hilbert point (oracle improves by {:.3e})",
                (out.baseline() - out.best_objective()) / out.baseline()
            ),
            _ => format!(
                "ROUTES DISAGREE: profile={} projection={} gradient={} oracle={}",
                profile.is_hilbert,
                projection_ok,
                gradient_ok,
                oracle_ok.map_or("undecided".to_string(), |b| b.to_string()),
            ),
        };
        eprintln!("  p = {p}: {text}");
    }

    let report = merge(
        report_base(cli, "certify", Some(&digest)),
        json!({
            "tol": args.tol,
            "instance": { "atoms": phi.len(), "dim": phi.dim() },
            "two_valued": {
                "is_hilbert": profile.is_hilbert,
                "margin": profile.margin,
                "level": profile.level,
                "support": profile.support,
            },
            "agreement": all_agree,
            "verdicts": verdicts,
        }),
    );
    emit(cli, &report);
    eprintln!(
        "certify {}: {} atoms, dim {}, profile margin {:.3e}; {}",
        args.path.display(),
        phi.len(),
        phi.dim(),
        profile.margin,
        if all_agree {
            "all routes agree"
        } else {
            "routes disagree (near-boundary instance or a bug)"
        }
    );
    Ok(if all_agree { EXIT_OK } else { EXIT_DISAGREE })
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

fn cmd_classify(cli: &Cli, args: &ClassifyArgs) -> Result<u8, CliError> {
    check_tol(args.tol)?;
    let (sum, digest) = load_sum(&args.path)?;
    let started = Instant::now();
    let label = classify(&sum, args.tol)?;

    // Brute-force cross-check on the full sign expansion, skipped above the
    // expansion size guard.
    let cross = match expand(&sum) {
        Ok(expansion) => {
            let truth = two_valued_check(&expansion, args.tol)?;
            let near_boundary = truth.margin > args.tol && truth.margin < BOUNDARY_BAND;
            Some((truth, near_boundary))
        }
        Err(LibError::SizeGuard { .. }) => None,
        Err(err) => return Err(err.into()),
    };

    let (cross_payload, agrees, near_boundary) = match &cross {
        Some((truth, near)) => (
            json!({
                "is_hilbert": truth.is_hilbert,
                "margin": truth.margin,
                "agrees": truth.is_hilbert == label.is_hilbert(),
                "near_boundary": near,
            }),
            truth.is_hilbert == label.is_hilbert(),
            *near,
        ),
        None => (Value::Null, true, false),
    };

    let report = merge(
        report_base(cli, "classify", Some(&digest)),
        json!({
            "tol": args.tol,
            "instance": { "vectors": sum.len(), "dim": sum.dim() },
            "label": label_payload(&label),
            "cross_check": cross_payload,
            "elapsed_ms": ms(started),
        }),
    );
    emit(cli, &report);

    let cross_text = match &cross {
        Some((truth, _)) if truth.is_hilbert == label.is_hilbert() => {
            "expansion cross-check agrees"
        }
        Some(_) if near_boundary => "expansion cross-check differs inside the boundary band",
        Some(_) => "EXPANSION CROSS-CHECK DISAGREES",
        None => "expansion too large to cross-check",
    };
    eprintln!(
        "classify {}: {} ({} vectors, dim {}); {}",
        args.path.display(),
        label.name(),
        sum.len(),
        sum.dim(),
        cross_text
    );
    // A split inside the boundary band is a tolerance artifact by design, not
    // an internal disagreement.
    Ok(if agrees || near_boundary {
        EXIT_OK
    } else {
        EXIT_DISAGREE
    })
}

// ---------------------------------------------------------------------------
// projnorm
// ---------------------------------------------------------------------------

fn cmd_projnorm(cli: &Cli, args: &ProjnormArgs) -> Result<u8, CliError> {
    check_tol(args.tol)?;
    let (phi, digest) = load_field(&args.path)?;
    let ps = effective_ps(&args.ps);
    let profile = two_valued_check(&phi, args.tol)?;

    let mut verdicts = Vec::new();
    for &p in &ps {
        let started = Instant::now();
        let value = projection_pnorm(&phi, p)?;
        verdicts.push(json!({
            "p": p.to_string(),
            "value": value,
            "is_unit": (value - 1.0).abs() <= args.tol,
            "elapsed_ms": ms(started),
        }));
        eprintln!("  p = {p}: ‖P‖ = {value:.12}");
    }

    let report = merge(
        report_base(cli, "projnorm", Some(&digest)),
        json!({
            "tol": args.tol,
            "instance": { "atoms": phi.len(), "dim": phi.dim() },
            "two_valued": { "is_hilbert": profile.is_hilbert, "margin": profile.margin },
            "verdicts": verdicts,
        }),
    );
    emit(cli, &report);
    eprintln!(
        "projnorm {}: {} exponents, profile margin {:.3e}",
        args.path.display(),
        ps.len(),
        profile.margin
    );
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

fn cmd_oracle(cli: &Cli, args: &OracleArgs) -> Result<u8, CliError> {
    check_tol(args.tol)?;
    if args.restarts == 0 {
        return Err(CliError::Usage("--restarts must be at least 1".into()));
    }
    if args.max_iters == 0 {
        return Err(CliError::Usage("--max-iters must be at least 1".into()));
    }
    let (phi, digest) = load_field(&args.path)?;
    let ps = effective_ps(&args.ps);

    let mut verdicts = Vec::new();
    for (index, &p) in ps.iter().enumerate() {
        let started = Instant::now();
        let opts = OracleOptions {
            seed: item_seed(cli.seed, index as u64),
            tol: args.tol,
            restarts: args.restarts,
            max_iters: args.max_iters,
        };
        let outcome = hilbert_oracle(&phi, p, &opts)?;
        let payload = oracle_payload(&outcome);
        eprintln!(
            "  p = {p}: {} (baseline {:.9}, best {:.9})",
            payload["status"].as_str().unwrap_or("?"),
            outcome.baseline(),
            outcome.best_objective()
        );
        verdicts.push(merge(
            json!({ "p": p.to_string(), "elapsed_ms": ms(started) }),
            payload,
        ));
    }

    let report = merge(
        report_base(cli, "oracle", Some(&digest)),
        json!({
            "tol": args.tol,
            "restarts": args.restarts,
            "max_iters": args.max_iters,
            "instance": { "atoms": phi.len(), "dim": phi.dim() },
            "verdicts": verdicts,
        }),
    );
    emit(cli, &report);
    eprintln!(
        "oracle {}: {} exponents, {} restarts each",
        args.path.display(),
        ps.len(),
        args.restarts
    );
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// lemmas
// ---------------------------------------------------------------------------

fn cmd_lemmas(cli: &Cli, args: &LemmasArgs) -> Result<u8, CliError> {
    let counts = LemmaSuiteCounts {
        decompose: args.decompose,
        orthogonality: args.orthogonality,
        subset: args.subset,
        exclusion: args.exclusion,
    };
    let started = Instant::now();
    let suite = lemma_suite::<f64>(cli.seed, counts);
    let ok = suite.ok();

    let report = merge(
        report_base(cli, "lemmas", None),
        json!({
            "tol": GEOMETRY_TOL,
            "counts": {
                "decompose": counts.decompose,
                "orthogonality": counts.orthogonality,
                "subset": counts.subset,
                "exclusion": counts.exclusion,
            },
            "failures": {
                "decompose": suite.decompose_failures,
                "orthogonality": suite.orthogonality_failures,
                "subset": suite.subset_failures,
                "exclusion": suite.exclusion_violations,
            },
            "ok": ok,
            "elapsed_ms": ms(started),
        }),
    );
    emit(cli, &report);
    eprintln!(
        "lemmas: decompose {}/{}, orthogonality {}/{}, subset {}/{}, exclusion {}/{} — {}",
        counts.decompose - suite.decompose_failures,
        counts.decompose,
        counts.orthogonality - suite.orthogonality_failures,
        counts.orthogonality,
        counts.subset - suite.subset_failures,
        counts.subset,
        counts.exclusion - suite.exclusion_violations,
        counts.exclusion,
        if ok { "clean" } else { "VIOLATIONS FOUND" }
    );
    Ok(if ok { EXIT_OK } else { EXIT_COUNTEREXAMPLE })
}

// ---------------------------------------------------------------------------
// search
// ---------------------------------------------------------------------------

fn cmd_search(cli: &Cli, args: &SearchArgs) -> Result<u8, CliError> {
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let tol = args.tol.unwrap_or(match args.mode {
        SearchMode::Theorem1 | SearchMode::Classifier => 1e-9,
        SearchMode::Lemma2 => GEOMETRY_TOL,
    });
    check_tol(tol)?;
    match args.mode {
        SearchMode::Theorem1 => search_theorem1(cli, args, tol),
        SearchMode::Classifier => search_classifier(cli, args, tol),
        SearchMode::Lemma2 => search_lemma2(cli, args, tol),
    }
}

fn sweep_options(cli: &Cli, trials: usize, route_tol: f64) -> SweepOptions<f64> {
    SweepOptions {
        trials,
        seed: cli.seed,
        route_tol,
        oracle: OracleOptions {
            seed: cli.seed,
            ..SweepOptions::<f64>::default().oracle
        },
        ..SweepOptions::default()
    }
}

fn search_theorem1(cli: &Cli, args: &SearchArgs, tol: f64) -> Result<u8, CliError> {
    let ps = effective_ps(&args.ps);
    let opts = sweep_options(cli, args.trials, tol);
    let started = Instant::now();
    let sweep = theorem1_equivalence_sweep(&ps, &opts)?;

    let counterexample = sweep.disagreements.first().map(|bad| {
        // Shrink while that exponent still splits the routes; errors during
        // shrinking (e.g. a candidate collapsing to the zero field) just mean
        // the candidate is rejected.
        let p = bad.routes.p;
        let keep = |cand: &Field<f64>| {
            evaluate_routes(cand, p, opts.route_tol, &opts.oracle)
                .map(|routes| !routes.consistent())
                .unwrap_or(false)
        };
        let minimized = minimize_field(&bad.field, &keep);
        let routes = evaluate_routes(&minimized, p, opts.route_tol, &opts.oracle)
            .expect("the minimizer only keeps evaluable candidates");
        json!({
            "trial": bad.index,
            "p": p.to_string(),
            "field": FieldJson::from_field(&minimized),
            "routes": {
                "profile": routes.profile,
                "projection": routes.projection,
                "gradient": routes.gradient,
                "oracle": routes.oracle,
            },
        })
    });
    let found = counterexample.is_some();

    let report = merge(
        report_base(cli, "search", None),
        json!({
            "mode": args.mode.name(),
            "trials": sweep.trials,
            "tol": tol,
            "ps": ps.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "evaluations": sweep.evaluations,
            "constructed_hilbert": sweep.constructed_hilbert,
            "disagreements": sweep.disagreements.len(),
            "counterexample": counterexample,
            "elapsed_ms": ms(started),
        }),
    );
    emit(cli, &report);
    eprintln!(
        "search theorem1: {} trials x {} exponents = {} evaluations, {} constructed Hilbert, {} disagreements",
        sweep.trials,
        ps.len(),
        sweep.evaluations,
        sweep.constructed_hilbert,
        sweep.disagreements.len()
    );
    Ok(if found { EXIT_COUNTEREXAMPLE } else { EXIT_OK })
}

fn search_classifier(cli: &Cli, args: &SearchArgs, tol: f64) -> Result<u8, CliError> {
    let opts = sweep_options(cli, args.trials, tol);
    let started = Instant::now();
    let sweep = classifier_agreement_sweep(&opts, BOUNDARY_BAND)?;

    let counterexample = sweep.disagreements.first().map(|bad| {
        let keep = |cand: &RademacherSum<f64>| match classifier_split(cand, tol) {
            Some((label, truth)) => label.is_hilbert() != truth,
            None => false,
        };
        let minimized = minimize_sum(&bad.sum, &keep);
        let (label, expansion_hilbert) =
            classifier_split(&minimized, tol).expect("the minimizer only keeps evaluable sums");
        json!({
            "trial": bad.index,
            "sum": SumJson::from_sum(&minimized),
            "label": label_payload(&label),
            "expansion_hilbert": expansion_hilbert,
        })
    });
    let found = counterexample.is_some();

    let report = merge(
        report_base(cli, "search", None),
        json!({
            "mode": args.mode.name(),
            "trials": sweep.trials,
            "tol": tol,
            "boundary_band": BOUNDARY_BAND,
            "constructed_hilbert": sweep.constructed_hilbert,
            "skipped_boundary": sweep.skipped_boundary,
            "disagreements": sweep.disagreements.len(),
            "counterexample": counterexample,
            "elapsed_ms": ms(started),
        }),
    );
    emit(cli, &report);
    eprintln!(
        "search classifier: {} trials, {} constructed Hilbert, {} skipped in the boundary band, {} disagreements",
        sweep.trials, sweep.constructed_hilbert, sweep.skipped_boundary, sweep.disagreements.len()
    );
    Ok(if found { EXIT_COUNTEREXAMPLE } else { EXIT_OK })
}

/// Classifier label vs. brute-force expansion truth, `None` when the
/// candidate is not evaluable or sits inside the boundary band.
fn classifier_split(sum: &RademacherSum<f64>, tol: f64) -> Option<(CaseLabel<f64>, bool)> {
    let expansion = expand(sum).ok()?;
    let truth = two_valued_check(&expansion, tol).ok()?;
    if truth.margin > tol && truth.margin < BOUNDARY_BAND {
        return None;
    }
    let label = classify(sum, tol).ok()?;
    Some((label, truth.is_hilbert))
}

fn search_lemma2(cli: &Cli, args: &SearchArgs, tol: f64) -> Result<u8, CliError> {
    let started = Instant::now();
    let violations: Vec<(u64, [Vec<f64>; 4])> = (0..args.trials as u64)
        .into_par_iter()
        .filter_map(|index| {
            let mut rng = gen::stream_rng(cli.seed, index);
            geometry::exclusion_search_trial(&mut rng, tol).map(|vectors| (index, vectors))
        })
        .collect();
    let first = violations.iter().min_by_key(|(index, _)| *index);

    let counterexample = first.map(|(index, vectors)| {
        json!({
            "trial": index,
            "vectors": vectors,
        })
    });
    let found = counterexample.is_some();

    let report = merge(
        report_base(cli, "search", None),
        json!({
            "mode": args.mode.name(),
            "trials": args.trials,
            "tol": tol,
            "violations": violations.len(),
            "counterexample": counterexample,
            "elapsed_ms": ms(started),
        }),
    );
    emit(cli, &report);
    eprintln!(
        "search lemma2: {} trials, {} violations",
        args.trials,
        violations.len()
    );
    Ok(if found { EXIT_COUNTEREXAMPLE } else { EXIT_OK })
}
