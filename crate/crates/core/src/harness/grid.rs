//! Declarative experiment grids: TOML spec, cell expansion, parallel seeded
//! execution and TSV tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Deserializer};

use super::{
    default_twomax_budget, run_maxsat, run_mkp, run_ridge, run_twogradients, run_twomax,
    wilson_interval, Outcome, RidgeStop, RunRecord, Trace, TIMEOUT_LIMIT,
};
use crate::benchmarks::{
    PeakLabel, Problem, RidgeProblem, RidgeScale, TwoGradientsProblem, TwoMaxProblem,
};
use crate::bitcore::{derive_seed, fnv1a};
use crate::engines::{EngineConfig, EngineKind};
use crate::error::{Error, Result};
use crate::instances::{load_cnf, load_mknap, BestKnownTable, CnfFormula, MkpInstance};
use crate::operators::{MutationPolicy, SelectionPolicy};

/// Budget used for MaxSat and MKP cells when the spec gives none.
pub const DEFAULT_INSTANCE_BUDGET: u64 = 1_000_000;

fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

fn default_engine() -> Vec<String> {
    vec!["mu1".into()]
}

fn default_mu() -> Vec<usize> {
    vec![1]
}

fn default_selection() -> Vec<String> {
    vec!["uniform".into()]
}

fn default_sizes() -> Vec<usize> {
    vec![2]
}

fn default_mutation() -> Vec<String> {
    vec!["sbm".into()]
}

fn default_lambda() -> Vec<usize> {
    vec![1]
}

fn default_stop() -> String {
    "auto".into()
}

fn yes() -> bool {
    true
}

/// An experiment grid as written in a spec file. Scalars are accepted
/// wherever a list is.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// `twomax`, `truncated-twomax`, `ridge`, `twogradients`, `maxsat` or `mkp`.
    pub problem: String,
    #[serde(default, deserialize_with = "one_or_many")]
    pub n: Vec<usize>,
    /// Truncation height for `truncated-twomax`.
    pub trunc: Option<usize>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub ridge_k: Vec<usize>,
    /// Target branch `j` for `ridge`; defaults to `k - 1`.
    pub branch: Option<usize>,
    /// `dimension` (default) or `suffix`.
    pub ridge_scale: Option<String>,
    /// Instance files relative to the data directory. For `mkp`, `file#i`
    /// selects the `i`-th instance of a file.
    #[serde(default, deserialize_with = "one_or_many")]
    pub instances: Vec<String>,
    #[serde(default = "default_engine", deserialize_with = "one_or_many")]
    pub engine: Vec<String>,
    #[serde(default = "default_mu", deserialize_with = "one_or_many")]
    pub mu: Vec<usize>,
    #[serde(default = "default_selection", deserialize_with = "one_or_many")]
    pub selection: Vec<String>,
    #[serde(default = "default_sizes", deserialize_with = "one_or_many")]
    pub tournament_sizes: Vec<usize>,
    #[serde(default = "default_mutation", deserialize_with = "one_or_many")]
    pub mutation: Vec<String>,
    #[serde(default = "default_lambda", deserialize_with = "one_or_many")]
    pub lambda: Vec<usize>,
    pub runs: u64,
    pub seed: u64,
    pub budget: Option<u64>,
    #[serde(default = "default_stop")]
    pub stop: String,
    #[serde(default = "yes")]
    pub fast_forward: bool,
    pub output: PathBuf,
    pub series_output: Option<PathBuf>,
    #[serde(default)]
    pub checkpoints: Vec<u64>,
    pub records: Option<PathBuf>,
    pub best_known: Option<PathBuf>,
}

/// Parses a spec. Unknown or mistyped fields are reported by name.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec> {
    toml::from_str(text).map_err(|e| {
        let message = e.message().to_string();
        let field = message
            .split('`')
            .nth(1)
            .map(str::to_string)
            .unwrap_or_else(|| "spec".into());
        Error::spec(field, message.trim_end().to_string())
    })
}

pub fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_spec(&text).map_err(|e| Error::in_file(path, e))
}

#[derive(Clone, Debug)]
pub enum PlannedProblem {
    TwoMax(TwoMaxProblem),
    Ridge(RidgeProblem),
    TwoGradients(TwoGradientsProblem),
    MaxSat { id: String, formula: CnfFormula },
    Mkp(MkpInstance),
}

impl PlannedProblem {
    pub fn problem(&self) -> &dyn Problem {
        match self {
            PlannedProblem::TwoMax(p) => p,
            PlannedProblem::Ridge(p) => p,
            PlannedProblem::TwoGradients(p) => p,
            PlannedProblem::MaxSat { formula, .. } => formula,
            PlannedProblem::Mkp(m) => m,
        }
    }

    fn label(&self) -> String {
        match self {
            PlannedProblem::TwoMax(p) => match p.truncation() {
                Some(k) => format!("truncated-twomax:n={}:k={k}", p.n()),
                None => format!("twomax:n={}", p.n()),
            },
            PlannedProblem::Ridge(p) => format!("ridge:k={}:j={}", p.k(), p.j()),
            PlannedProblem::TwoGradients(p) => format!("twogradients:n={}", p.n()),
            PlannedProblem::MaxSat { id, .. } => format!("maxsat:{id}"),
            PlannedProblem::Mkp(m) => format!("mkp:{}", m.id()),
        }
    }

    fn dimension(&self) -> usize {
        match self {
            PlannedProblem::TwoMax(p) => p.n(),
            PlannedProblem::Ridge(p) => p.n(),
            PlannedProblem::TwoGradients(p) => p.n(),
            PlannedProblem::MaxSat { formula, .. } => formula.num_vars(),
            PlannedProblem::Mkp(m) => m.items(),
        }
    }

    /// Truncation height, ridge `k`, or TwoGradients `ℓ`.
    fn parameter(&self) -> Option<usize> {
        match self {
            PlannedProblem::TwoMax(p) => p.truncation(),
            PlannedProblem::Ridge(p) => Some(p.k()),
            PlannedProblem::TwoGradients(p) => Some(p.suffix_len()),
            _ => None,
        }
    }

    fn is_instance(&self) -> bool {
        matches!(self, PlannedProblem::MaxSat { .. } | PlannedProblem::Mkp(_))
    }

    fn instance_id(&self) -> Option<&str> {
        match self {
            PlannedProblem::MaxSat { id, .. } => Some(id),
            PlannedProblem::Mkp(m) => Some(m.id()),
            _ => None,
        }
    }
}

/// One grid cell: a problem and a fully specified engine configuration.
#[derive(Clone, Debug)]
pub struct CellSpec {
    pub id: String,
    pub problem: usize,
    pub config: EngineConfig,
}

impl CellSpec {
    fn seed(&self, base: u64, run: u64) -> u64 {
        derive_seed(base, fnv1a(self.id.as_bytes()), run)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum StopRule {
    Auto,
    AnyPeak,
    Optimum,
    Budget,
}

/// A validated spec with its problems loaded and cells expanded.
#[derive(Clone, Debug)]
pub struct Plan {
    pub spec: ExperimentSpec,
    pub problems: Vec<PlannedProblem>,
    pub cells: Vec<CellSpec>,
    stop: StopRule,
}

fn problems_of(spec: &ExperimentSpec, data_dir: &Path) -> Result<Vec<PlannedProblem>> {
    let need_n = || {
        if spec.n.is_empty() {
            Err(Error::spec(
                "n",
                format!("required for problem {}", spec.problem),
            ))
        } else {
            Ok(())
        }
    };
    let field = |name: &'static str| move |e: Error| Error::spec(name, e.to_string());
    let mut out = Vec::new();
    match spec.problem.as_str() {
        "twomax" => {
            need_n()?;
            for &n in &spec.n {
                out.push(PlannedProblem::TwoMax(
                    TwoMaxProblem::new(n).map_err(field("n"))?,
                ));
            }
        }
        "truncated-twomax" => {
            need_n()?;
            let k = spec
                .trunc
                .ok_or_else(|| Error::spec("trunc", "required for truncated-twomax"))?;
            for &n in &spec.n {
                out.push(PlannedProblem::TwoMax(
                    TwoMaxProblem::truncated(n, k).map_err(field("trunc"))?,
                ));
            }
        }
        "ridge" => {
            if spec.ridge_k.is_empty() {
                return Err(Error::spec("ridge_k", "required for ridge"));
            }
            let scale = match spec.ridge_scale.as_deref() {
                None | Some("dimension") => RidgeScale::Dimension,
                Some("suffix") => RidgeScale::Suffix,
                Some(other) => {
                    return Err(Error::spec(
                        "ridge_scale",
                        format!("unknown scale {other:?}"),
                    ))
                }
            };
            for &k in &spec.ridge_k {
                let j = spec.branch.unwrap_or(k.saturating_sub(1));
                let p = RidgeProblem::new(k, j)
                    .map_err(field("ridge_k"))?
                    .with_scale(scale);
                out.push(PlannedProblem::Ridge(p));
            }
        }
        "twogradients" => {
            need_n()?;
            for &n in &spec.n {
                out.push(PlannedProblem::TwoGradients(
                    TwoGradientsProblem::new(n).map_err(field("n"))?,
                ));
            }
        }
        "maxsat" | "mkp" => {
            if spec.instances.is_empty() {
                return Err(Error::spec(
                    "instances",
                    format!("required for problem {}", spec.problem),
                ));
            }
            for entry in &spec.instances {
                let (file, index) = match entry.rsplit_once('#') {
                    Some((f, i)) => {
                        let i = i.parse::<usize>().map_err(|_| {
                            Error::spec("instances", format!("bad instance index in {entry:?}"))
                        })?;
                        (f, Some(i))
                    }
                    None => (entry.as_str(), None),
                };
                let path = data_dir.join(file);
                if spec.problem == "maxsat" {
                    if index.is_some() {
                        return Err(Error::spec(
                            "instances",
                            format!("{entry:?}: CNF files hold one formula"),
                        ));
                    }
                    let files = if path.is_dir() {
                        let mut files = Vec::new();
                        for entry in fs::read_dir(&path).map_err(|e| Error::io(&path, e))? {
                            let p = entry.map_err(|e| Error::io(&path, e))?.path();
                            if p.extension().is_some_and(|x| x == "cnf") {
                                files.push(p);
                            }
                        }
                        files.sort();
                        files
                    } else {
                        vec![path]
                    };
                    for file in files {
                        let formula = load_cnf(&file)?;
                        out.push(PlannedProblem::MaxSat {
                            id: stem(&file),
                            formula,
                        });
                    }
                } else {
                    let all = load_mknap(&path)?;
                    match index {
                        Some(i) => {
                            let count = all.len();
                            let inst = all.into_iter().nth(i).ok_or_else(|| {
                                Error::spec(
                                    "instances",
                                    format!("{entry:?}: file holds {count} instances"),
                                )
                            })?;
                            out.push(PlannedProblem::Mkp(inst));
                        }
                        None => out.extend(all.into_iter().map(PlannedProblem::Mkp)),
                    }
                }
            }
        }
        other => return Err(Error::spec("problem", format!("unknown problem {other:?}"))),
    }
    Ok(out)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn parse_stop(spec: &ExperimentSpec) -> Result<StopRule> {
    let rule = match spec.stop.as_str() {
        "auto" => StopRule::Auto,
        "any-peak" => StopRule::AnyPeak,
        "optimum" => StopRule::Optimum,
        "budget" => StopRule::Budget,
        other => {
            return Err(Error::spec(
                "stop",
                format!("unknown stopping rule {other:?}"),
            ))
        }
    };
    let allowed = match spec.problem.as_str() {
        "ridge" => true,
        "mkp" => matches!(rule, StopRule::Auto | StopRule::Budget),
        _ => rule == StopRule::Auto,
    };
    if !allowed {
        return Err(Error::spec(
            "stop",
            format!("{:?} does not apply to {}", spec.stop, spec.problem),
        ));
    }
    Ok(rule)
}

fn budget_for(spec: &ExperimentSpec, problem: &PlannedProblem, mu: usize) -> u64 {
    if let Some(b) = spec.budget {
        return b;
    }
    match problem {
        PlannedProblem::TwoMax(p) => default_twomax_budget(mu, p.n()),
        PlannedProblem::TwoGradients(_) => TIMEOUT_LIMIT,
        PlannedProblem::Ridge(p) => (p.n() as u64).pow(3),
        _ => DEFAULT_INSTANCE_BUDGET,
    }
}

/// Validates `spec`, loads its instances from `data_dir` and expands the
/// grid.
pub fn prepare(spec: &ExperimentSpec, data_dir: &Path) -> Result<Plan> {
    if spec.runs == 0 {
        return Err(Error::spec("runs", "must be at least 1"));
    }
    let stop = parse_stop(spec)?;
    let problems = problems_of(spec, data_dir)?;
    if spec.series_output.is_some() && spec.checkpoints.is_empty() {
        return Err(Error::spec(
            "checkpoints",
            "required when series_output is set",
        ));
    }
    if spec.series_output.is_some() && problems.iter().any(PlannedProblem::is_instance) {
        return Err(Error::spec(
            "series_output",
            "only available for analytic problems",
        ));
    }
    let engines = spec
        .engine
        .iter()
        .map(|e| {
            e.parse::<EngineKind>()
                .map_err(|err| Error::spec("engine", err.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mutations = spec
        .mutation
        .iter()
        .map(|m| {
            m.parse::<MutationPolicy>()
                .map_err(|err| Error::spec("mutation", err.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut selections = Vec::new();
    for name in &spec.selection {
        match name.as_str() {
            "tournament" | "inv-tournament" => {
                if spec.tournament_sizes.is_empty() {
                    return Err(Error::spec("tournament_sizes", "empty list"));
                }
                for &k in &spec.tournament_sizes {
                    selections.push(
                        SelectionPolicy::from_name(name, k)
                            .map_err(|e| Error::spec("tournament_sizes", e.to_string()))?,
                    );
                }
            }
            _ => selections.push(
                SelectionPolicy::from_name(name, 1)
                    .map_err(|e| Error::spec("selection", e.to_string()))?,
            ),
        }
    }
    for (field, empty) in [
        ("engine", engines.is_empty()),
        ("mu", spec.mu.is_empty()),
        ("selection", selections.is_empty()),
        ("mutation", mutations.is_empty()),
        ("lambda", spec.lambda.is_empty()),
    ] {
        if empty {
            return Err(Error::spec(field, "empty list"));
        }
    }
    if spec.mu.contains(&0) {
        return Err(Error::spec("mu", "must be at least 1"));
    }
    if spec.lambda.contains(&0) {
        return Err(Error::spec("lambda", "must be at least 1"));
    }

    let mut cells = Vec::new();
    let mut seen = BTreeSet::new();
    for (pi, problem) in problems.iter().enumerate() {
        for &engine in &engines {
            for &mu in &spec.mu {
                for &selection in &selections {
                    for &mutation in &mutations {
                        for &lambda in &spec.lambda {
                            let config = match engine {
                                EngineKind::SteadyState => {
                                    EngineConfig::steady_state(mu, selection, mutation, 0)
                                }
                                EngineKind::Crowding => EngineConfig::crowding(mu, mutation, 0),
                                EngineKind::OnePlusOne => EngineConfig {
                                    mu: if problem.is_instance() { mu } else { 1 },
                                    ..EngineConfig::one_plus_one(mutation, 0)
                                },
                                EngineKind::OnePlusLambda => {
                                    EngineConfig::one_plus_lambda(lambda, 0)
                                }
                            };
                            let budget = budget_for(spec, problem, config.mu);
                            let config = EngineConfig { budget, ..config };
                            let id = cell_id(problem, &config);
                            if !seen.insert(id.clone()) {
                                continue;
                            }
                            if config.budget < config.mu as u64 {
                                return Err(Error::spec(
                                    "budget",
                                    format!(
                                        "{budget} is below the {} initial evaluations of {id}",
                                        config.mu
                                    ),
                                ));
                            }
                            cells.push(CellSpec {
                                id,
                                problem: pi,
                                config,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(Plan {
        spec: spec.clone(),
        problems,
        cells,
        stop,
    })
}

fn cell_id(problem: &PlannedProblem, c: &EngineConfig) -> String {
    let mut id = format!("{}|{}", problem.label(), c.kind);
    match c.kind {
        EngineKind::SteadyState => write!(id, "|{}|{}|mu={}", c.selection, c.mutation, c.mu),
        EngineKind::Crowding => write!(id, "|{}|mu={}", c.mutation, c.mu),
        EngineKind::OnePlusOne => write!(id, "|{}|mu={}", c.mutation, c.mu),
        EngineKind::OnePlusLambda => write!(id, "|lambda={}", c.lambda),
    }
    .expect("writing to a string");
    id
}

/// Every run of every cell, ordered by cell then run index.
#[derive(Clone, Debug)]
pub struct GridResult {
    pub plan: Plan,
    pub records: Vec<RunRecord>,
}

impl GridResult {
    pub fn cell_records(&self, cell: usize) -> &[RunRecord] {
        let r = self.plan.spec.runs as usize;
        &self.records[cell * r..(cell + 1) * r]
    }
}

/// One run of `cell` with an explicit seed. `trace` sees every iteration.
pub fn run_cell(plan: &Plan, cell: &CellSpec, seed: u64, trace: Trace<'_>) -> Result<RunRecord> {
    let cfg = &cell.config;
    let result = match &plan.problems[cell.problem] {
        PlannedProblem::TwoMax(p) => run_twomax(p, cfg, seed, trace),
        PlannedProblem::TwoGradients(p) => {
            run_twogradients(p, cfg, seed, plan.spec.fast_forward, trace)
        }
        PlannedProblem::Ridge(p) => {
            let stop = match plan.stop {
                StopRule::AnyPeak => RidgeStop::AnyPeak,
                StopRule::Optimum => RidgeStop::Optimum,
                StopRule::Budget => RidgeStop::Budget,
                StopRule::Auto if cfg.mu == 1 => RidgeStop::AnyPeak,
                StopRule::Auto => RidgeStop::Optimum,
            };
            run_ridge(p, cfg, seed, stop, trace)
        }
        PlannedProblem::MaxSat { formula, .. } => run_maxsat(formula, cfg, seed, trace),
        PlannedProblem::Mkp(m) => run_mkp(m, cfg, seed, trace),
    };
    let mut rec = result.map_err(|e| Error::Run {
        cell: cell.id.clone(),
        seed,
        source: Box::new(e),
    })?;
    rec.cell = cell.id.clone();
    Ok(rec)
}

fn run_one(plan: &Plan, cell: &CellSpec, run: u64) -> Result<RunRecord> {
    let mut rec = run_cell(plan, cell, cell.seed(plan.spec.seed, run), None)?;
    rec.run = run;
    Ok(rec)
}

/// Runs every cell `runs` times. Runs execute on the current rayon pool; the
/// result order (and hence every table) is independent of scheduling.
pub fn run_grid(plan: &Plan) -> Result<GridResult> {
    let runs = plan.spec.runs;
    let tasks: Vec<(usize, u64)> = (0..plan.cells.len())
        .flat_map(|c| (0..runs).map(move |r| (c, r)))
        .collect();
    let records = tasks
        .par_iter()
        .map(|&(c, r)| run_one(plan, &plan.cells[c], r))
        .collect::<Result<Vec<_>>>()?;
    Ok(GridResult {
        plan: plan.clone(),
        records,
    })
}

/// Counts for one success-table row: both, single left, single right,
/// timeout.
fn classify(problem: &PlannedProblem, outcome: Outcome) -> [u64; 4] {
    let idx = match (problem, outcome) {
        (_, Outcome::BothFound) => 0,
        (
            PlannedProblem::TwoMax(_),
            Outcome::SinglePeak(PeakLabel::AllZeros | PeakLabel::LeftPeak),
        ) => 1,
        (PlannedProblem::TwoMax(_), Outcome::SinglePeak(_)) => 2,
        (PlannedProblem::TwoGradients(_), Outcome::ConvergedLoc) => 1,
        (PlannedProblem::TwoGradients(_), Outcome::ConvergedOpt) => 2,
        (
            PlannedProblem::Ridge(_),
            Outcome::SinglePeak(PeakLabel::DesignatedOptimum) | Outcome::SolvedAt(_),
        ) => 0,
        (PlannedProblem::Ridge(_), Outcome::SinglePeak(PeakLabel::BranchOptimum(_))) => 1,
        (PlannedProblem::Ridge(_), Outcome::SinglePeak(_)) => 2,
        _ => 3,
    };
    let mut out = [0; 4];
    out[idx] = 1;
    out
}

fn fmt_k(c: &EngineConfig) -> String {
    match c.selection.tournament_size() {
        Some(k) if c.kind == EngineKind::SteadyState => k.to_string(),
        _ => "-".into(),
    }
}

fn selection_name(c: &EngineConfig) -> &'static str {
    match c.kind {
        EngineKind::SteadyState => c.selection.name(),
        EngineKind::Crowding => "uniform",
        _ => "-",
    }
}

/// Success-proportion table, one row per cell.
pub fn success_table(result: &GridResult) -> Result<String> {
    let mut out = String::from(
        "problem\tn\tk_or_l\tengine\tselection\tK\tmutation\tmu\truns\tboth\tsingle_left\tsingle_right\ttimeout\tp_both\tci_low\tci_high\n",
    );
    for (ci, cell) in result.plan.cells.iter().enumerate() {
        let problem = &result.plan.problems[cell.problem];
        let mut counts = [0u64; 4];
        for rec in result.cell_records(ci) {
            for (c, x) in counts.iter_mut().zip(classify(problem, rec.outcome)) {
                *c += x;
            }
        }
        let runs = result.plan.spec.runs;
        let ci95 = wilson_interval(counts[0], runs)?;
        let c = &cell.config;
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{runs}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}",
            problem.label().split(':').next().unwrap_or_default(),
            problem.dimension(),
            problem.parameter().map_or("-".into(), |p| p.to_string()),
            c.kind,
            selection_name(c),
            fmt_k(c),
            if c.kind == EngineKind::OnePlusLambda {
                "sbm"
            } else {
                c.mutation.name()
            },
            c.mu,
            counts[0],
            counts[1],
            counts[2],
            counts[3],
            ci95.point,
            ci95.lower,
            ci95.upper
        )
        .expect("writing to a string");
    }
    Ok(out)
}

/// Labels for the series columns of `problem`: (opt-like, loc-like).
fn series_labels(problem: &PlannedProblem) -> (PeakLabel, PeakLabel, &'static str, &'static str) {
    match problem {
        PlannedProblem::TwoMax(p) if p.is_truncated() => {
            (PeakLabel::GlobalPeak, PeakLabel::LeftPeak, "right", "left")
        }
        PlannedProblem::TwoMax(_) => (PeakLabel::AllOnes, PeakLabel::AllZeros, "right", "left"),
        PlannedProblem::Ridge(_) => (
            PeakLabel::DesignatedOptimum,
            PeakLabel::RidgeEnd,
            "opt",
            "ridge_end",
        ),
        _ => (PeakLabel::Opt, PeakLabel::Loc, "opt", "loc"),
    }
}

/// Cumulative first-construction proportions at each checkpoint.
pub fn series_table(result: &GridResult, checkpoints: &[u64]) -> String {
    let mut out = String::from("evaluations");
    for cell in &result.plan.cells {
        let (_, _, a, b) = series_labels(&result.plan.problems[cell.problem]);
        write!(out, "\t{0}:both\t{0}:{a}\t{0}:{b}", cell.id).expect("writing to a string");
    }
    out.push('\n');
    let runs = result.plan.spec.runs as f64;
    for &t in checkpoints {
        write!(out, "{t}").expect("writing to a string");
        for (ci, cell) in result.plan.cells.iter().enumerate() {
            let (la, lb, _, _) = series_labels(&result.plan.problems[cell.problem]);
            let (mut both, mut a, mut b) = (0u64, 0u64, 0u64);
            for rec in result.cell_records(ci) {
                let ha = rec.hit(la).is_some_and(|h| h <= t);
                let hb = rec.hit(lb).is_some_and(|h| h <= t);
                both += (ha && hb) as u64;
                a += ha as u64;
                b += hb as u64;
            }
            write!(
                out,
                "\t{:.6}\t{:.6}\t{:.6}",
                both as f64 / runs,
                a as f64 / runs,
                b as f64 / runs
            )
            .expect("writing to a string");
        }
        out.push('\n');
    }
    out
}

/// Per-run table for MaxSat and MKP grids. MKP best-known values are first
/// raised to the declared optimum and to every run's result, so normalized
/// values never exceed 1.
pub fn instance_table(result: &GridResult, table: &mut BestKnownTable) -> Result<String> {
    for problem in &result.plan.problems {
        if let PlannedProblem::Mkp(m) = problem {
            table.update(m.id(), m.declared_optimum());
        }
    }
    for rec in &result.records {
        let cell = result
            .plan
            .cells
            .iter()
            .find(|c| c.id == rec.cell)
            .expect("record of a planned cell");
        if let (PlannedProblem::Mkp(m), Some(best)) =
            (&result.plan.problems[cell.problem], rec.best_fitness)
        {
            table.update(m.id(), best);
        }
    }
    let mut out = String::from("instance\tengine\tselection\tK\tmu\tseed\tsolved_at_or_budget\tbest_fitness\tnormalized_fitness\n");
    for (ci, cell) in result.plan.cells.iter().enumerate() {
        let problem = &result.plan.problems[cell.problem];
        let id = problem.instance_id().unwrap_or("-");
        let c = &cell.config;
        for rec in result.cell_records(ci) {
            let solved = match rec.outcome {
                Outcome::SolvedAt(t) => t,
                _ => c.budget,
            };
            let best = rec.best_fitness.unwrap_or(0);
            let normalized = match problem {
                PlannedProblem::Mkp(_) => match table.get(id) {
                    Some(b) => format!("{:.6}", best.max(0) as f64 / b as f64),
                    None => format!("{:.6}", 0.0),
                },
                _ => "-".into(),
            };
            writeln!(
                out,
                "{id}\t{}\t{}\t{}\t{}\t{}\t{solved}\t{best}\t{normalized}",
                c.kind,
                selection_name(c),
                fmt_k(c),
                c.mu,
                rec.seed
            )
            .expect("writing to a string");
        }
    }
    Ok(out)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs a prepared plan and writes every output the spec declares. Returns
/// the main table's text.
pub fn execute(plan: &Plan) -> Result<String> {
    let result = run_grid(plan)?;
    let spec = &plan.spec;
    let main = if plan.problems.iter().any(PlannedProblem::is_instance) {
        let mut table = match &spec.best_known {
            Some(p) => BestKnownTable::load(p)?,
            None => BestKnownTable::new(),
        };
        let before = table.clone();
        let text = instance_table(&result, &mut table)?;
        if let Some(p) = &spec.best_known {
            if table != before {
                table.save(p)?;
            }
        }
        text
    } else {
        success_table(&result)?
    };
    write_file(&spec.output, &main)?;
    if let Some(path) = &spec.series_output {
        write_file(path, &series_table(&result, &spec.checkpoints))?;
    }
    if let Some(path) = &spec.records {
        let mut text = String::from("cell\trun\tseed\tevaluations\tfirst_hits\toutcome\n");
        for rec in &result.records {
            text.push_str(&rec.to_line());
            text.push('\n');
        }
        write_file(path, &text)?;
    }
    Ok(main)
}

/// `(solved_at_or_budget, quality)` per run, keyed by `(instance, algorithm)`.
type InstanceRows = BTreeMap<(String, String), Vec<(f64, f64)>>;

/// Groups the rows of per-run tables by `(instance, algorithm)`.
fn read_instance_rows(texts: &[String]) -> Result<InstanceRows> {
    let mut groups = InstanceRows::new();
    for text in texts {
        for (idx, line) in text.lines().enumerate() {
            if idx == 0 && line.starts_with("instance\t") || line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 9 {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected 9 columns, found {}", f.len()),
                });
            }
            let num = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    line: idx + 1,
                    message: format!("bad number {s:?}"),
                })
            };
            let solved = num(f[6])?;
            let quality = if f[8] == "-" { num(f[7])? } else { num(f[8])? };
            let algorithm = format!("{}|{}|{}|mu={}", f[1], f[2], f[3], f[4]);
            groups
                .entry((f[0].to_string(), algorithm))
                .or_default()
                .push((solved, quality));
        }
    }
    Ok(groups)
}

/// Paired Wilcoxon comparisons of every algorithm pair over shared
/// instances, with Holm–Bonferroni decisions per metric.
///
/// Runs are paired by position within each `(instance, algorithm)` group.
/// `solved_at` counts as better when lower, fitness when higher.
pub fn paired_report(texts: &[String], alpha: f64) -> Result<String> {
    use crate::stats::{holm_bonferroni, wilcoxon_signed_rank, Orientation, PairedSample};

    let groups = read_instance_rows(texts)?;
    let algorithms: BTreeSet<&String> = groups.keys().map(|(_, a)| a).collect();
    let algorithms: Vec<&String> = algorithms.into_iter().collect();
    struct Row {
        id: String,
        metric: &'static str,
        n_pairs: usize,
        n_eff: usize,
        w: f64,
        z: f64,
        p_two: f64,
        p_one: f64,
    }
    let mut rows = Vec::new();
    for (i, a) in algorithms.iter().enumerate() {
        for b in &algorithms[i + 1..] {
            for (metric, col, orientation) in [
                ("solved_at", 0, Orientation::LowerIsBetter),
                ("fitness", 1, Orientation::HigherIsBetter),
            ] {
                let mut pairs = Vec::new();
                for ((inst, alg), runs) in &groups {
                    if alg != *a {
                        continue;
                    }
                    if let Some(other) = groups.get(&(inst.clone(), (*b).clone())) {
                        for (x, y) in runs.iter().zip(other) {
                            let (x, y) = if col == 0 { (x.0, y.0) } else { (x.1, y.1) };
                            pairs.push((x, y));
                        }
                    }
                }
                if pairs.is_empty() {
                    continue;
                }
                let n_pairs = pairs.len();
                let id = format!("{a} vs {b}");
                match wilcoxon_signed_rank(&PairedSample::new(pairs)?) {
                    Ok(r) => rows.push(Row {
                        id,
                        metric,
                        n_pairs,
                        n_eff: r.n_effective,
                        w: r.w,
                        z: r.z,
                        p_two: r.p_two_sided,
                        p_one: r.p_a_better(orientation),
                    }),
                    Err(Error::DegenerateSample) => rows.push(Row {
                        id,
                        metric,
                        n_pairs,
                        n_eff: 0,
                        w: 0.0,
                        z: 0.0,
                        p_two: 1.0,
                        p_one: 1.0,
                    }),
                    Err(e) => return Err(e),
                }
            }
        }
    }
    let mut out =
        String::from("# zero differences discarded; runs paired by order within instance\n");
    out.push_str("comparison\tmetric\tn_pairs\tn_effective\tW\tz\tp_two\tp_one\tholm_decision\n");
    for metric in ["solved_at", "fitness"] {
        let subset: Vec<&Row> = rows.iter().filter(|r| r.metric == metric).collect();
        let decisions =
            holm_bonferroni(&subset.iter().map(|r| r.p_two).collect::<Vec<_>>(), alpha)?;
        for (r, reject) in subset.iter().zip(decisions) {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6e}\t{:.6e}\t{}",
                r.id,
                r.metric,
                r.n_pairs,
                r.n_eff,
                r.w,
                r.z,
                r.p_two,
                r.p_one,
                if reject { "reject" } else { "accept" }
            )
            .expect("writing to a string");
        }
    }
    Ok(out)
}
