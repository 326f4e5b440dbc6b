//! `ssea`: run, benchmark and analyse steady-state EA experiments.
//!
//! Exit status is 0 on success, 2 on usage or spec errors and 1 on runtime
//! errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ssea::harness::{self, ExperimentSpec, Plan};
use ssea::instances::{load_cnf, load_mknap};
use ssea::{Error, Genotype, IterationEvent};

#[derive(Parser)]
#[command(
    name = "ssea",
    version,
    about = "Steady-state evolutionary algorithm experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One seeded run, printed as a record line.
    Run(RunArgs),
    /// Execute an experiment spec file.
    Bench(BenchArgs),
    /// Paired Wilcoxon comparisons over per-run instance tables.
    Stats(StatsArgs),
    /// Evaluate one genotype.
    Fitness(FitnessArgs),
    /// Validate a spec file and the instances it names, or instance files.
    ParseCheck(ParseCheckArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// twomax, truncated-twomax, ridge, twogradients, maxsat or mkp.
    #[arg(long)]
    problem: String,
    #[arg(long)]
    n: Option<usize>,
    /// Truncation height for truncated-twomax.
    #[arg(long)]
    trunc: Option<usize>,
    /// Ridge parameter k (n = 2k²).
    #[arg(long)]
    ridge_k: Option<usize>,
    /// Designated ridge branch j.
    #[arg(long)]
    branch: Option<usize>,
    /// Instance file, relative to SSEA_DATA_DIR; `file#i` picks one MKP instance.
    #[arg(long)]
    instance: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    seed: u64,
    /// mu1, crowding, oneplusone or onepluslambda.
    #[arg(long, default_value = "mu1")]
    engine: String,
    #[arg(long, default_value_t = 1)]
    mu: usize,
    /// uniform, tournament, inv-tournament or inv-elitist.
    #[arg(long, default_value = "uniform")]
    selection: String,
    /// Tournament size.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// sbm or rls.
    #[arg(long, default_value = "sbm")]
    mutation: String,
    #[arg(long, default_value_t = 1)]
    lambda: usize,
    #[arg(long)]
    budget: Option<u64>,
    /// Simulate every TwoGradients iteration instead of sampling waits.
    #[arg(long)]
    no_fast_forward: bool,
    /// Print one line per iteration before the record.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Overrides the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the spec's output path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct StatsArgs {
    /// Per-run instance tables written by `bench`.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitnessArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Bit string, first bit is x_1.
    #[arg(long)]
    genotype: String,
}

#[derive(Args)]
struct ParseCheckArgs {
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Instance files: `.cnf` is read as DIMACS, anything else as mknap.
    files: Vec<PathBuf>,
}

fn data_dir() -> PathBuf {
    std::env::var_os("SSEA_DATA_DIR").map_or_else(|| PathBuf::from("data"), PathBuf::from)
}

fn single_spec(p: &ProblemArgs, seed: u64) -> ExperimentSpec {
    ExperimentSpec {
        problem: p.problem.clone(),
        n: p.n.into_iter().collect(),
        trunc: p.trunc,
        ridge_k: p.ridge_k.into_iter().collect(),
        branch: p.branch,
        ridge_scale: None,
        instances: p.instance.iter().cloned().collect(),
        engine: vec!["mu1".into()],
        mu: vec![1],
        selection: vec!["uniform".into()],
        tournament_sizes: vec![2],
        mutation: vec!["sbm".into()],
        lambda: vec![1],
        runs: 1,
        seed,
        budget: None,
        stop: "auto".into(),
        fast_forward: true,
        output: PathBuf::from("-"),
        series_output: None,
        checkpoints: Vec::new(),
        records: None,
        best_known: None,
    }
}

fn single_plan(spec: &ExperimentSpec) -> Result<Plan, Error> {
    let plan = harness::prepare(spec, &data_dir())?;
    if plan.problems.len() != 1 || plan.cells.len() != 1 {
        return Err(Error::Spec {
            field: "instance".into(),
            message: format!(
                "expected exactly one problem, found {}",
                plan.problems.len()
            ),
        });
    }
    Ok(plan)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| Error::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn run(args: RunArgs) -> Result<(), Error> {
    let spec = ExperimentSpec {
        engine: vec![args.engine],
        mu: vec![args.mu],
        selection: vec![args.selection],
        tournament_sizes: vec![args.k],
        mutation: vec![args.mutation],
        lambda: vec![args.lambda],
        budget: args.budget,
        fast_forward: !args.no_fast_forward,
        ..single_spec(&args.problem, args.seed)
    };
    let plan = single_plan(&spec)?;
    let mut text = String::new();
    let mut trace = |ev: &IterationEvent<'_>| {
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            ev.evaluations,
            ev.parent,
            ev.offspring_fitness,
            if ev.replacement.survived() {
                "kept"
            } else {
                "discarded"
            },
            ev.population.min_fitness(),
            ev.population.max_fitness()
        ));
    };
    let tracer: harness::Trace<'_> = if args.trace { Some(&mut trace) } else { None };
    let record = harness::run_cell(&plan, &plan.cells[0], args.seed, tracer)?;
    text.push_str(&record.to_line());
    text.push('\n');
    emit(args.out.as_deref(), &text)
}

fn bench(args: BenchArgs) -> Result<(), Error> {
    let mut spec = harness::load_spec(&args.spec)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(out) = args.out {
        spec.output = out;
    }
    let plan = harness::prepare(&spec, &data_dir()).map_err(|e| in_spec(&args.spec, e))?;
    let run = || harness::execute(&plan);
    match args.threads {
        Some(t) => rayon_pool(t)?.install(run)?,
        None => run()?,
    };
    let runs = plan.cells.len() as u64 * spec.runs;
    println!(
        "{} cells, {runs} runs -> {}",
        plan.cells.len(),
        spec.output.display()
    );
    Ok(())
}

/// Attributes spec validation errors to the spec file; instance errors
/// already name their own file.
fn in_spec(path: &Path, e: Error) -> Error {
    match e {
        Error::Spec { .. } => Error::InFile {
            path: path.to_path_buf(),
            source: Box::new(e),
        },
        other => other,
    }
}

fn rayon_pool(threads: usize) -> Result<rayon::ThreadPool, Error> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Spec {
            field: "threads".into(),
            message: e.to_string(),
        })
}

fn stats(args: StatsArgs) -> Result<(), Error> {
    let texts = args
        .inputs
        .iter()
        .map(|p| {
            fs::read_to_string(p).map_err(|source| Error::Io {
                path: p.clone(),
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let report = harness::paired_report(&texts, args.alpha)?;
    emit(args.out.as_deref(), &report)
}

fn fitness(args: FitnessArgs) -> Result<(), Error> {
    let x: Genotype = args.genotype.parse()?;
    let plan = single_plan(&single_spec(&args.problem, 0))?;
    let problem = plan.problems[0].problem();
    if x.len() != problem.dimension() {
        return Err(Error::DimensionMismatch {
            expected: problem.dimension(),
            got: x.len(),
        });
    }
    println!("{}", problem.fitness(&x));
    Ok(())
}

fn parse_check(args: ParseCheckArgs) -> Result<(), Error> {
    if args.spec.is_none() && args.files.is_empty() {
        return Err(Error::Spec {
            field: "spec".into(),
            message: "nothing to check: pass --spec or instance files".into(),
        });
    }
    if let Some(path) = &args.spec {
        let spec = harness::load_spec(path)?;
        let plan = harness::prepare(&spec, &data_dir()).map_err(|e| in_spec(path, e))?;
        println!(
            "{}: {} problems, {} cells",
            path.display(),
            plan.problems.len(),
            plan.cells.len()
        );
    }
    for path in &args.files {
        if path.extension().is_some_and(|e| e == "cnf") {
            let f = load_cnf(path)?;
            println!(
                "{}: {} variables, {} clauses",
                path.display(),
                f.num_vars(),
                f.num_clauses()
            );
        } else {
            let all = load_mknap(path)?;
            println!("{}: {} instances", path.display(), all.len());
        }
    }
    Ok(())
}

fn exit_status(e: &Error) -> u8 {
    match e {
        Error::Spec { .. } => 2,
        Error::InFile { source, .. } => exit_status(source),
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Bench(a) => bench(a),
        Command::Stats(a) => stats(a),
        Command::Fitness(a) => fitness(a),
        Command::ParseCheck(a) => parse_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_status(&e))
        }
    }
}
