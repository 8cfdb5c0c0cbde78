//! `eigcanon`: batch front end for eigenvector and graph canonicalization.
//!
//! Exit codes: 0 success, 1 input or usage error, 2 a canonicalization failed
//! under `--strict`, 3 a verification check failed.

mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eigcanon::averaging::{pca_frame_apply, PcaCanon, RowwiseMlp};
use eigcanon::graph::io::{
    format_matrix_blocks, format_matrix_csv, parse_dense_matrix, parse_edge_list,
};
use eigcanon::graph::{
    canonical_set, frame_of_graph, frame_summary, normalized_laplacian, Graph, ScoreVariant,
};
use eigcanon::lap::{canonicalize_pe, DEFAULT_C};
use eigcanon::linalg::{seeded_rng, Matrix, Tolerances};
use eigcanon::verify::{
    method_canon, signnet_counterexample, superiority_report, verify_basis_invariance,
    verify_orthogonal_equivariance, verify_perm_equivariance, TrialReport,
};
use eigcanon::{CanonError, CanonKind, KeyVariant, Method, PeConfig};
use rayon::prelude::*;
use report::Report;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_INPUT: u8 = 1;
const EXIT_STRICT: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "eigcanon",
    version,
    about = "Canonicalize eigenvectors and graphs under sign, basis and permutation symmetries"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Eigenvalues closer than this share an eigenspace.
    #[arg(long, global = true, env = "EIGCANON_EPS_EIG", default_value_t = 1e-6)]
    eps_eig: f64,
    /// Minimum residual norm for a projection to count as independent.
    #[arg(long, global = true, env = "EIGCANON_EPS_RANK", default_value_t = 1e-6)]
    eps_rank: f64,
    /// Magnitudes at or below this count as zero.
    #[arg(long, global = true, env = "EIGCANON_EPS_ZERO", default_value_t = 1e-8)]
    eps_zero: f64,
    /// Quantization grid applied before comparing keys and scores.
    #[arg(
        long = "tau",
        global = true,
        env = "EIGCANON_TAU",
        default_value_t = 1e-6
    )]
    tau_quant: f64,
    /// Offset added to every summary vector.
    #[arg(long, global = true, env = "EIGCANON_C", default_value_t = DEFAULT_C)]
    c: f64,
    /// Seed for every random draw.
    #[arg(long, global = true, env = "EIGCANON_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads for corpus-level work (0 = all cores).
    #[arg(long, global = true, env = "EIGCANON_JOBS", default_value_t = 1)]
    jobs: usize,
    /// Write the main output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

impl Common {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            eps_eig: self.eps_eig,
            eps_rank: self.eps_rank,
            eps_zero: self.eps_zero,
            tau_quant: self.tau_quant,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Canonical Laplacian positional encoding of a graph or symmetric matrix.
    Canonicalize(CanonicalizeArgs),
    /// Frame, automorphism and canonicalization sizes of graphs.
    FrameSize(FrameSizeArgs),
    /// Randomized invariance and equivariance checks.
    Verify(VerifyArgs),
    /// Compare OAP, MAP and FA-lap keys on eigenspaces of multiplicity two or more.
    Compare(CompareArgs),
    /// Check the non-isomorphic pair that sign-invariant networks cannot separate.
    Counterexample(CounterexampleArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    /// Edge list; `.csv` files default to `dense`.
    Edges,
    /// Dense symmetric matrix, decomposed as given.
    Dense,
}

#[derive(Args, Debug)]
struct CanonicalizeArgs {
    input: PathBuf,
    /// sign-first, oap-eig, oap-lap (alias oap), map, fa-lap, map-full or identity.
    #[arg(long, env = "EIGCANON_METHOD", default_value = "oap-lap", value_parser = parse_method)]
    method: Method,
    /// Key variant used by map-full: oap, map or fa.
    #[arg(long, env = "EIGCANON_VARIANT", default_value = "oap", value_parser = parse_variant)]
    variant: KeyVariant,
    /// Number of encoding columns.
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, value_enum)]
    format: Option<InputFormat>,
    /// Skip eigenspaces with eigenvalue zero.
    #[arg(long)]
    skip_null: bool,
    /// Exit with status 2 if any eigenspace is not canonicalized.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug)]
struct FrameSizeArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Search-tree nodes allowed per automorphism count.
    #[arg(long, default_value_t = eigcanon::graph::DEFAULT_NODE_LIMIT)]
    node_limit: u64,
    /// Frame elements enumerated when writing canonical sets.
    #[arg(long, env = "EIGCANON_BUDGET", default_value_t = 10_000)]
    budget: usize,
    /// Also write every canonical set to this file.
    #[arg(long)]
    canonical_out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    /// Basis invariance of a canonicalization.
    Eig,
    /// Permutation equivariance and basis invariance.
    Lap,
    /// Orthogonal equivariance of the PCA frame.
    Pca,
    /// All of the above with their default canonicalizations.
    All,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    /// Canonicalization under test; defaults to oap-eig for `eig` and oap-lap for `lap`.
    #[arg(long, value_parser = parse_method)]
    canon: Option<Method>,
    #[arg(long, env = "EIGCANON_VARIANT", default_value = "oap", value_parser = parse_variant)]
    variant: KeyVariant,
    #[arg(long, env = "EIGCANON_TRIALS", default_value_t = 1000)]
    trials: usize,
    /// Success threshold on the max-abs discrepancy.
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct CounterexampleArgs {
    /// Random sign-invariant networks to evaluate.
    #[arg(long, default_value_t = 50)]
    functions: usize,
    /// Also run the exhaustive isomorphism search.
    #[arg(long)]
    exhaustive: bool,
}

fn parse_method(s: &str) -> Result<Method, String> {
    match s {
        "oap" => Ok(Method::OapLap),
        _ => s.parse().map_err(|e: CanonError| e.to_string()),
    }
}

fn parse_variant(s: &str) -> Result<KeyVariant, String> {
    match s.parse() {
        Ok(KeyVariant::Augmented) => Err("variant must be oap, map or fa".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(CanonError::to_string(&e)),
    }
}

enum Failure {
    Input(String),
    Strict,
    Verify,
}

impl From<CanonError> for Failure {
    fn from(e: CanonError) -> Self {
        Failure::Input(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_graph(path: &Path) -> Result<Graph, Failure> {
    parse_edge_list(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit(common: &Common, text: &str) -> CmdResult {
    match &common.out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::Input(format!("cannot start worker threads: {e}")))
}

fn cmd_canonicalize(common: &Common, args: &CanonicalizeArgs, mut report: Report) -> CmdResult {
    let tol = common.tolerances();
    tol.validate()?;
    if args.method == Method::Augmented {
        return Err(Failure::Input(
            "oap-augmented is not available from the command line".into(),
        ));
    }
    let format = args
        .format
        .unwrap_or(match args.input.extension().and_then(|e| e.to_str()) {
            Some("csv") => InputFormat::Dense,
            _ => InputFormat::Edges,
        });
    let text = read(&args.input)?;
    let with_path = |e: CanonError| Failure::Input(format!("{}: {e}", args.input.display()));
    let matrix: Matrix = match format {
        InputFormat::Edges => normalized_laplacian(&parse_edge_list(&text).map_err(with_path)?),
        InputFormat::Dense => parse_dense_matrix(&text).map_err(with_path)?,
    };
    report.config("input", args.input.display());
    report.config("format", format!("{format:?}").to_lowercase());
    report.config("method", args.method);
    report.config("variant", args.variant);
    report.config("k", args.k);
    report.config("skip_null", args.skip_null);
    report.config("strict", args.strict);

    let cfg = PeConfig {
        method: args.method,
        variant: args.variant,
        c: common.c,
        skip_null: args.skip_null,
    };
    let result = canonicalize_pe(&matrix, args.k, &cfg, &tol)?;
    report.line("n", matrix.nrows());
    for (i, s) in result.spaces.iter().enumerate() {
        let witness = s
            .witness
            .as_ref()
            .map(|w| w.iter().map(usize::to_string).collect::<Vec<_>>().join(","))
            .unwrap_or_else(|| "none".into());
        report.line(
            &format!("space.{i}.eigenvalue"),
            format!("{:.12}", s.eigenvalue),
        );
        report.line(&format!("space.{i}.multiplicity"), s.multiplicity);
        report.line(&format!("space.{i}.status"), s.kind);
        report.line(&format!("space.{i}.method"), s.method);
        report.line(&format!("space.{i}.witness"), witness);
        report.line(&format!("space.{i}.columns"), s.columns_used);
    }
    report.line("summary.single", result.count(CanonKind::Single));
    report.line("summary.fallback", result.count(CanonKind::Fallback));
    report.line("summary.failed", result.count(CanonKind::Failed));
    report.line("summary.padded_columns", result.padded_columns);
    let csv = format_matrix_csv(&result.pe);
    match &common.out {
        Some(p) => {
            std::fs::write(p, &csv).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?
        }
        None => report.raw(&format!("# pe\n{csv}")),
    }
    print!("{}", report.finish());
    let not_single = result.spaces.iter().any(|s| s.kind != CanonKind::Single);
    if args.strict && not_single {
        return Err(Failure::Strict);
    }
    Ok(())
}

fn big_to_f64(x: &eigcanon::BigUint) -> f64 {
    x.to_string().parse().unwrap_or(f64::INFINITY)
}

fn cmd_frame_size(common: &Common, args: &FrameSizeArgs, mut report: Report) -> CmdResult {
    let tol = common.tolerances();
    tol.validate()?;
    report.config("node_limit", args.node_limit);
    report.config("budget", args.budget);
    let graphs = args
        .inputs
        .iter()
        .map(|p| read_graph(p))
        .collect::<Result<Vec<_>, _>>()?;
    let pool = thread_pool(common.jobs)?;
    let summaries = pool.install(|| {
        graphs
            .par_iter()
            .map(|g| {
                ScoreVariant::ALL
                    .iter()
                    .map(|&v| frame_summary(g, v, &tol, args.node_limit))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let mut canon_blocks = String::new();
    let mut totals = [(0.0, 0usize, 0.0, 0usize); 2];
    for (gi, (path, per_variant)) in args.inputs.iter().zip(&summaries).enumerate() {
        report.line(&format!("graph.{gi}.path"), path.display());
        report.line(&format!("graph.{gi}.n"), graphs[gi].n());
        for (vi, s) in per_variant.iter().enumerate() {
            let key = format!("graph.{gi}.{}", s.variant);
            let sizes: Vec<String> = s.tie_groups.iter().map(|g| g.len().to_string()).collect();
            let opt = |x: &Option<eigcanon::BigUint>| {
                x.as_ref().map_or("unknown".to_string(), |v| v.to_string())
            };
            report.line(&format!("{key}.tie_groups"), sizes.join(","));
            report.line(&format!("{key}.frame_size"), &s.frame_size);
            report.line(&format!("{key}.aut_count"), opt(&s.aut_count));
            report.line(&format!("{key}.canon_size"), opt(&s.canon_size));
            totals[vi].0 += big_to_f64(&s.frame_size);
            totals[vi].1 += 1;
            if let Some(c) = &s.canon_size {
                totals[vi].2 += big_to_f64(c);
                totals[vi].3 += 1;
            }
            if args.canonical_out.is_some() {
                let frame = frame_of_graph(&graphs[gi], s.variant, &tol)?;
                let set = canonical_set(
                    &graphs[gi],
                    &frame,
                    args.budget,
                    &mut seeded_rng(common.seed),
                )?;
                let sampled = if set.sampled { " sampled" } else { "" };
                canon_blocks.push_str(&format!("# {} {}{sampled}\n", path.display(), s.variant));
                canon_blocks.push_str(&format_matrix_blocks(&set.graphs));
                canon_blocks.push('\n');
            }
        }
    }
    for (vi, v) in ScoreVariant::ALL.iter().enumerate() {
        let (fs, fc, cs, cc) = totals[vi];
        report.line(
            &format!("aggregate.{v}.mean_frame_size"),
            format!("{:.6e}", fs / fc as f64),
        );
        let mean_canon = if cc == 0 {
            "unknown".to_string()
        } else {
            format!("{:.6e}", cs / cc as f64)
        };
        report.line(&format!("aggregate.{v}.mean_canon_size"), mean_canon);
        report.line(&format!("aggregate.{v}.known_canon"), cc);
    }
    if let Some(p) = &args.canonical_out {
        std::fs::write(p, canon_blocks)
            .map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
    }
    emit(common, &report.finish())
}

fn run_suite(
    suite: Suite,
    args: &VerifyArgs,
    common: &Common,
    tol: &Tolerances,
) -> Result<Vec<TrialReport>, Failure> {
    let seed = common.seed;
    let named = |mut r: TrialReport, name: String| {
        r.name = name;
        r
    };
    Ok(match suite {
        Suite::Eig => {
            let m = args.canon.unwrap_or(Method::OapEig);
            let f = method_canon(m, args.variant, common.c, tol)?;
            vec![named(
                verify_basis_invariance(&*f, args.trials, args.eps, seed)?,
                format!("eig.{m}"),
            )]
        }
        Suite::Lap => {
            let methods = match args.canon {
                Some(m) => vec![m],
                None => vec![Method::OapLap],
            };
            let mut out = Vec::new();
            for m in methods {
                let f = method_canon(m, args.variant, common.c, tol)?;
                out.push(named(
                    verify_perm_equivariance(&*f, args.trials, args.eps, seed)?,
                    format!("lap.{m}"),
                ));
            }
            out
        }
        Suite::Pca => {
            let model = |x: &Matrix| {
                let k = x.ncols();
                let h = RowwiseMlp::new(k, 8, k, seed ^ k as u64);
                pca_frame_apply(x, &h, PcaCanon::Eig, tol)
            };
            vec![named(
                verify_orthogonal_equivariance(&model, args.trials, args.eps, seed)?,
                "pca".into(),
            )]
        }
        Suite::All => {
            let mut out = run_suite(Suite::Eig, args, common, tol)?;
            for m in [Method::OapLap, Method::Map, Method::FaLap] {
                let f = method_canon(m, args.variant, common.c, tol)?;
                out.push(named(
                    verify_perm_equivariance(&*f, args.trials, args.eps, seed)?,
                    format!("lap.{m}"),
                ));
            }
            out.extend(run_suite(Suite::Pca, args, common, tol)?);
            out
        }
    })
}

fn cmd_verify(common: &Common, args: &VerifyArgs, mut report: Report) -> CmdResult {
    let tol = common.tolerances();
    tol.validate()?;
    report.config("suite", format!("{:?}", args.suite).to_lowercase());
    report.config(
        "canon",
        args.canon.map_or("default".to_string(), |m| m.to_string()),
    );
    report.config("variant", args.variant);
    report.config("trials", args.trials);
    report.config("eps", format!("{:e}", args.eps));
    let reports = run_suite(args.suite, args, common, &tol)?;
    for r in &reports {
        report.raw(&r.to_key_values());
    }
    let passed = reports.iter().all(TrialReport::passed);
    report.line("verify.passed", passed);
    emit(common, &report.finish())?;
    for r in &reports {
        eprintln!("{r}");
    }
    if passed {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn cmd_compare(common: &Common, args: &CompareArgs, mut report: Report) -> CmdResult {
    let tol = common.tolerances();
    tol.validate()?;
    let graphs = args
        .inputs
        .iter()
        .map(|p| read_graph(p))
        .collect::<Result<Vec<_>, _>>()?;
    let pool = thread_pool(common.jobs)?;
    let parts = pool.install(|| {
        graphs
            .par_iter()
            .map(|g| superiority_report(std::slice::from_ref(g), common.c, &tol))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut merged = eigcanon::verify::SuperiorityReport {
        instances: Vec::new(),
    };
    for (gi, part) in parts.into_iter().enumerate() {
        merged
            .instances
            .extend(part.instances.into_iter().map(|mut s| {
                s.graph = gi;
                s
            }));
    }
    for (i, s) in merged.instances.iter().enumerate() {
        let kinds: Vec<String> = s.kinds.iter().map(|k| k.to_string()).collect();
        report.line(
            &format!("instance.{i}"),
            format!(
                "graph:{} space:{} multiplicity:{} oap,map,fa:{}",
                args.inputs[s.graph].display(),
                s.space,
                s.multiplicity,
                kinds.join(",")
            ),
        );
    }
    report.raw(&merged.to_key_values());
    emit(common, &report.finish())?;
    if merged.dominance() {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn cmd_counterexample(common: &Common, args: &CounterexampleArgs, mut report: Report) -> CmdResult {
    report.config("functions", args.functions);
    report.config("exhaustive", args.exhaustive);
    match signnet_counterexample(common.seed, args.functions, args.exhaustive) {
        Ok(r) => {
            report.raw(&r.to_key_values());
            emit(common, &report.finish())?;
            if r.passed() {
                Ok(())
            } else {
                Err(Failure::Verify)
            }
        }
        Err(e @ CanonError::CounterexampleViolation(_)) => {
            report.line("counterexample.error", e);
            emit(common, &report.finish())?;
            Err(Failure::Verify)
        }
        Err(e) => Err(e.into()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let common = &cli.common;
    let name = match &cli.command {
        Command::Canonicalize(_) => "canonicalize",
        Command::FrameSize(_) => "frame-size",
        Command::Verify(_) => "verify",
        Command::Compare(_) => "compare",
        Command::Counterexample(_) => "counterexample",
    };
    let report = Report::new(name, common);
    let outcome = match &cli.command {
        Command::Canonicalize(a) => cmd_canonicalize(common, a, report),
        Command::FrameSize(a) => cmd_frame_size(common, a, report),
        Command::Verify(a) => cmd_verify(common, a, report),
        Command::Compare(a) => cmd_compare(common, a, report),
        Command::Counterexample(a) => cmd_counterexample(common, a, report),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Strict) => {
            eprintln!("error: some eigenspaces were not canonicalized (--strict)");
            ExitCode::from(EXIT_STRICT)
        }
        Err(Failure::Verify) => ExitCode::from(EXIT_VERIFY),
    }
}
