//! Experiment orchestration: outcome detection, the TwoGradients fast-forward,
//! single-run drivers and the seeded run grid.

mod grid;

use std::collections::BTreeMap;
use std::fmt;

pub use grid::{
    execute, instance_table, load_spec, paired_report, parse_spec, prepare, run_cell, run_grid,
    series_table, success_table, CellSpec, ExperimentSpec, GridResult, Plan, PlannedProblem,
};

use crate::benchmarks::{PeakLabel, Problem, RidgeProblem, TwoGradientsProblem, TwoMaxProblem};
use crate::bitcore::{Fitness, Population, RngStream};
use crate::engines::{
    run_crowding, run_one_plus_lambda, run_one_plus_one, run_steady_state, Control, EngineConfig,
    EngineKind, IterationEvent, Observer, SteadyState,
};
use crate::error::{Error, Result};
use crate::instances::{CnfFormula, MkpInstance};
use crate::operators::SelectionPolicy;

/// Simulated evaluation counts beyond this are reported as a timeout.
pub const TIMEOUT_LIMIT: u64 = i64::MAX as u64;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959964;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    BothFound,
    SinglePeak(PeakLabel),
    ConvergedOpt,
    ConvergedLoc,
    Timeout,
    BudgetExhausted,
    SolvedAt(u64),
    BestFitness(i64),
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::BothFound => f.write_str("BothFound"),
            Outcome::SinglePeak(l) => write!(f, "SinglePeak({l})"),
            Outcome::ConvergedOpt => f.write_str("ConvergedOpt"),
            Outcome::ConvergedLoc => f.write_str("ConvergedLoc"),
            Outcome::Timeout => f.write_str("Timeout"),
            Outcome::BudgetExhausted => f.write_str("BudgetExhausted"),
            Outcome::SolvedAt(t) => write!(f, "SolvedAt({t})"),
            Outcome::BestFitness(v) => write!(f, "BestFitness({v})"),
        }
    }
}

/// Result of one seeded run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunRecord {
    pub cell: String,
    pub run: u64,
    pub seed: u64,
    pub outcome: Outcome,
    /// Evaluation index at which each peak was first constructed.
    pub first_hits: BTreeMap<PeakLabel, u64>,
    /// Evaluations consumed, fast-forwarded iterations included.
    pub evaluations: u64,
    /// Best fitness seen (MaxSat and MKP runs).
    pub best_fitness: Option<i64>,
}

impl RunRecord {
    fn new(
        outcome: Outcome,
        first_hits: BTreeMap<PeakLabel, u64>,
        evaluations: u64,
        seed: u64,
    ) -> Self {
        RunRecord {
            cell: String::new(),
            run: 0,
            seed,
            outcome,
            first_hits,
            evaluations,
            best_fitness: None,
        }
    }

    pub fn hit(&self, label: PeakLabel) -> Option<u64> {
        self.first_hits.get(&label).copied()
    }

    /// Tab-separated line: cell, run, seed, evaluations, first hits, outcome.
    pub fn to_line(&self) -> String {
        let hits = if self.first_hits.is_empty() {
            "-".to_string()
        } else {
            self.first_hits
                .iter()
                .map(|(l, t)| format!("{l}@{t}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let cell = if self.cell.is_empty() {
            "-"
        } else {
            &self.cell
        };
        format!(
            "{cell}\t{}\t{}\t{}\t{hits}\t{}",
            self.run, self.seed, self.evaluations, self.outcome
        )
    }
}

/// 95% Wilson score interval for a binomial proportion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProportionCI {
    pub successes: u64,
    pub trials: u64,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn wilson_interval(successes: u64, trials: u64) -> Result<ProportionCI> {
    if trials == 0 || successes > trials {
        return Err(Error::InvalidParameter(format!(
            "invalid proportion {successes}/{trials}"
        )));
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let (lower, upper) = match successes {
        0 => (0.0, (centre + half).min(1.0)),
        s if s == trials => ((centre - half).max(0.0), 1.0),
        _ => ((centre - half).max(0.0), (centre + half).min(1.0)),
    };
    Ok(ProportionCI {
        successes,
        trials,
        point: p,
        lower: lower.min(p),
        upper: upper.max(p),
    })
}

/// Passes each event to an optional trace callback before the inner observer.
pub type Trace<'t> = Option<&'t mut dyn FnMut(&IterationEvent<'_>)>;

struct Traced<'o, 't, O: ?Sized> {
    inner: &'o mut O,
    trace: Trace<'t>,
}

impl<O: Observer + ?Sized> Observer for Traced<'_, '_, O> {
    fn on_start(&mut self, population: &Population, evaluations: u64) -> Control {
        self.inner.on_start(population, evaluations)
    }

    fn on_iteration(&mut self, event: &IterationEvent<'_>) -> Control {
        if let Some(t) = self.trace.as_mut() {
            t(event);
        }
        self.inner.on_iteration(event)
    }
}

/// Runs any engine kind with `observer`. Returns evaluations consumed.
fn drive<P: Problem + ?Sized, O: Observer + ?Sized>(
    config: &EngineConfig,
    problem: &P,
    rng: RngStream,
    observer: &mut O,
    trace: Trace<'_>,
) -> Result<u64> {
    let mut traced = Traced {
        inner: observer,
        trace,
    };
    Ok(match config.kind {
        EngineKind::SteadyState => run_steady_state(config, problem, rng, &mut traced)?.evaluations,
        EngineKind::Crowding => run_crowding(config, problem, rng, &mut traced)?.evaluations,
        EngineKind::OnePlusOne => run_one_plus_one(config, problem, rng, &mut traced)?.evaluations,
        EngineKind::OnePlusLambda => {
            run_one_plus_lambda(config, problem, rng, &mut traced)?.evaluations
        }
    })
}

/// Outcome detection for TwoMax and TruncatedTwoMax.
///
/// Stops on both peaks constructed, on every member sitting on the one peak
/// that was constructed, and (inverse elitist selection on the truncated
/// variant only) when every minimum-fitness member sits on the left plateau:
/// such members can only produce offspring below the minimum, so the
/// population is frozen and the run is reported as `SinglePeak(LeftPeak)`.
#[derive(Debug)]
pub struct TwoMaxDetector<'a> {
    problem: &'a TwoMaxProblem,
    inverse_elitist: bool,
    left_label: PeakLabel,
    right_label: PeakLabel,
    on_left: usize,
    on_right: usize,
    first_hits: BTreeMap<PeakLabel, u64>,
    outcome: Option<Outcome>,
}

impl<'a> TwoMaxDetector<'a> {
    pub fn new(problem: &'a TwoMaxProblem, config: &EngineConfig) -> Self {
        let (left_label, right_label) = if problem.is_truncated() {
            (PeakLabel::LeftPeak, PeakLabel::GlobalPeak)
        } else {
            (PeakLabel::AllZeros, PeakLabel::AllOnes)
        };
        TwoMaxDetector {
            problem,
            inverse_elitist: config.kind == EngineKind::SteadyState
                && config.selection == SelectionPolicy::InverseElitist,
            left_label,
            right_label,
            on_left: 0,
            on_right: 0,
            first_hits: BTreeMap::new(),
            outcome: None,
        }
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn first_hits(&self) -> &BTreeMap<PeakLabel, u64> {
        &self.first_hits
    }

    fn adjust(&mut self, label: Option<PeakLabel>, delta: isize) {
        match label {
            Some(l) if l == self.left_label => {
                self.on_left = self.on_left.wrapping_add_signed(delta)
            }
            Some(l) if l == self.right_label => {
                self.on_right = self.on_right.wrapping_add_signed(delta)
            }
            _ => {}
        }
    }

    fn check(&mut self, pop: &Population) -> Control {
        let left = self.first_hits.contains_key(&self.left_label);
        let right = self.first_hits.contains_key(&self.right_label);
        self.outcome = if left && right {
            Some(Outcome::BothFound)
        } else if self.on_left + self.on_right == pop.len() {
            Some(Outcome::SinglePeak(if left {
                self.left_label
            } else {
                self.right_label
            }))
        } else if self.inverse_elitist
            && self.problem.is_truncated()
            && self.on_left > 0
            && pop.min_fitness() == self.problem.left_peak_value()
            && pop.count_with_fitness(pop.min_fitness()) == self.on_left
        {
            Some(Outcome::SinglePeak(self.left_label))
        } else {
            None
        };
        if self.outcome.is_some() {
            Control::Stop
        } else {
            Control::Continue
        }
    }
}

impl Observer for TwoMaxDetector<'_> {
    fn on_start(&mut self, population: &Population, _evaluations: u64) -> Control {
        for (slot, g) in population.genotypes().iter().enumerate() {
            let label = self.problem.peak_of_weight(g.hamming_weight());
            if let Some(l) = label {
                self.first_hits.entry(l).or_insert(slot as u64 + 1);
            }
            self.adjust(label, 1);
        }
        self.check(population)
    }

    fn on_iteration(&mut self, event: &IterationEvent<'_>) -> Control {
        let label = self
            .problem
            .peak_of_weight(event.offspring.hamming_weight());
        if let Some(l) = label {
            self.first_hits.entry(l).or_insert(event.evaluations);
        }
        if event.replacement.survived() {
            self.adjust(label, 1);
            let removed = self.problem.peak_of_weight(event.removed.hamming_weight());
            self.adjust(removed, -1);
        }
        self.check(event.population)
    }
}

/// Outcome detection for TwoGradients.
#[derive(Debug)]
pub struct TwoGradientsDetector {
    opt: Fitness,
    loc: Fitness,
    inverse_elitist: bool,
    first_hits: BTreeMap<PeakLabel, u64>,
    outcome: Option<Outcome>,
}

impl TwoGradientsDetector {
    pub fn new(problem: &TwoGradientsProblem, config: &EngineConfig) -> Self {
        TwoGradientsDetector {
            opt: problem.opt_value(),
            loc: problem.loc_value(),
            inverse_elitist: config.kind == EngineKind::SteadyState
                && config.selection == SelectionPolicy::InverseElitist,
            first_hits: BTreeMap::new(),
            outcome: None,
        }
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn first_hits(&self) -> &BTreeMap<PeakLabel, u64> {
        &self.first_hits
    }

    fn record(&mut self, f: Fitness, at: u64) {
        if f == self.opt {
            self.first_hits.entry(PeakLabel::Opt).or_insert(at);
        } else if f == self.loc {
            self.first_hits.entry(PeakLabel::Loc).or_insert(at);
        }
    }

    fn check(&mut self, pop: &Population, evaluations: u64) -> Control {
        let (min, max) = (pop.min_fitness(), pop.max_fitness());
        self.outcome = if min == self.opt {
            Some(if self.first_hits.contains_key(&PeakLabel::Loc) {
                Outcome::BothFound
            } else {
                Outcome::ConvergedOpt
            })
        } else if max == self.loc {
            Some(Outcome::ConvergedLoc)
        } else if (self.inverse_elitist && min == self.loc) || evaluations > TIMEOUT_LIMIT {
            Some(Outcome::Timeout)
        } else {
            None
        };
        if self.outcome.is_some() {
            Control::Stop
        } else {
            Control::Continue
        }
    }
}

impl Observer for TwoGradientsDetector {
    fn on_start(&mut self, population: &Population, evaluations: u64) -> Control {
        for slot in 0..population.len() {
            self.record(population.fitness(slot), slot as u64 + 1);
        }
        self.check(population, evaluations)
    }

    fn on_iteration(&mut self, event: &IterationEvent<'_>) -> Control {
        self.record(event.offspring_fitness, event.evaluations);
        self.check(event.population, event.evaluations)
    }
}

/// Tournament size used by the fast-forward, if `policy` supports it.
fn fast_forward_size(policy: SelectionPolicy) -> Option<usize> {
    match policy {
        SelectionPolicy::InverseTournament(k) => Some(k),
        SelectionPolicy::Uniform => Some(1),
        _ => None,
    }
}

/// Samples the number of iterations up to and including the first one whose
/// tournament contains no member of fitness `loc`.
///
/// Valid when every minimum-fitness member has fitness `loc` and every
/// offspring of such a member either ties it or falls below the minimum:
/// iterations that draw one of them into the tournament then leave the
/// population unchanged up to exchanging equivalent copies. The count is
/// geometric with success probability `q = ((μ - L)/μ)^K`; it saturates at
/// `u64::MAX`.
pub fn fast_forward_inverse_tournament(
    pop: &Population,
    policy: SelectionPolicy,
    loc: Fitness,
    rng: &mut RngStream,
) -> Result<u64> {
    let k = fast_forward_size(policy).ok_or_else(|| {
        Error::InvalidParameter(format!("no fast-forward for {policy} selection"))
    })?;
    let mu = pop.len();
    let l = pop.count_with_fitness(loc);
    if l > 0 && pop.min_fitness() != loc {
        return Err(Error::InvalidState(
            "fast-forward requires the trapped members to be the minimum".into(),
        ));
    }
    if l == mu {
        return Err(Error::InvalidState(
            "fast-forward undefined when the whole population is trapped".into(),
        ));
    }
    if l == 0 {
        return Ok(1);
    }
    let q = ((mu - l) as f64 / mu as f64).powi(k as i32);
    let draws = (rng.unit_open0().ln() / (-q).ln_1p()).floor();
    if draws >= u64::MAX as f64 {
        return Ok(u64::MAX);
    }
    Ok(1 + draws as u64)
}

/// Tournament of `policy` among members whose fitness differs from `avoid`:
/// the parent of the first iteration after a fast-forward.
pub fn select_parent_avoiding(
    pop: &Population,
    policy: SelectionPolicy,
    avoid: Fitness,
    rng: &mut RngStream,
) -> Result<usize> {
    let k = fast_forward_size(policy).ok_or_else(|| {
        Error::InvalidParameter(format!("no fast-forward for {policy} selection"))
    })?;
    if pop.count_with_fitness(avoid) == pop.len() {
        return Err(Error::InvalidState(
            "every member has the avoided fitness".into(),
        ));
    }
    let draw = |rng: &mut RngStream| loop {
        let s = rng.index(pop.len());
        if pop.fitness(s) != avoid {
            break s;
        }
    };
    let mut chosen = draw(rng);
    let mut ties = 1;
    for _ in 1..k {
        let s = draw(rng);
        if pop.fitness(s) < pop.fitness(chosen) {
            chosen = s;
            ties = 1;
        } else if pop.fitness(s) == pop.fitness(chosen) {
            ties += 1;
            if rng.index(ties) == 0 {
                chosen = s;
            }
        }
    }
    Ok(chosen)
}

/// Default TwoMax budget `⌈200·μ·n·ln n⌉`.
pub fn default_twomax_budget(mu: usize, n: usize) -> u64 {
    let b = (200.0 * mu as f64 * n as f64 * (n as f64).ln()).ceil() as u64;
    b.max(mu as u64 + 1)
}

/// One TwoMax or TruncatedTwoMax run.
pub fn run_twomax(
    problem: &TwoMaxProblem,
    config: &EngineConfig,
    seed: u64,
    trace: Trace<'_>,
) -> Result<RunRecord> {
    let mut det = TwoMaxDetector::new(problem, config);
    let evaluations = drive(config, problem, RngStream::new(seed), &mut det, trace)?;
    let outcome = det.outcome.unwrap_or(Outcome::BudgetExhausted);
    Ok(RunRecord::new(outcome, det.first_hits, evaluations, seed))
}

/// One TwoGradients run. With `fast_forward`, steady-state runs under inverse
/// tournament or uniform selection skip iterations that cannot change the
/// population once every minimum-fitness member is LOC.
pub fn run_twogradients(
    problem: &TwoGradientsProblem,
    config: &EngineConfig,
    seed: u64,
    fast_forward: bool,
    mut trace: Trace<'_>,
) -> Result<RunRecord> {
    let mut det = TwoGradientsDetector::new(problem, config);
    let ff_size = if fast_forward {
        fast_forward_size(config.selection)
    } else {
        None
    };
    if config.kind != EngineKind::SteadyState || ff_size.is_none() {
        let evaluations = drive(config, problem, RngStream::new(seed), &mut det, trace)?;
        let outcome = det.outcome.unwrap_or(Outcome::BudgetExhausted);
        return Ok(RunRecord::new(outcome, det.first_hits, evaluations, seed));
    }

    let loc = problem.loc_value();
    let mut engine = SteadyState::new(config, problem, RngStream::new(seed))?;
    let mut stopped = det.on_start(engine.population(), engine.evaluations()) == Control::Stop;
    let mut timeout = false;
    while !stopped && engine.evaluations() < config.budget {
        let trapped = {
            let pop = engine.population();
            pop.min_fitness() == loc && pop.max_fitness() > loc
        };
        let event = if trapped {
            let (pop, rng) = engine.parts();
            let g = fast_forward_inverse_tournament(pop, config.selection, loc, rng)?;
            let target = engine.evaluations().saturating_add(g);
            if target > TIMEOUT_LIMIT {
                engine.skip(g);
                timeout = true;
                break;
            }
            if target > config.budget {
                let rest = config.budget - engine.evaluations();
                engine.skip(rest);
                break;
            }
            engine.skip(g - 1);
            let (pop, rng) = engine.parts();
            let parent = select_parent_avoiding(pop, config.selection, loc, rng)?;
            engine.step_from(parent)
        } else {
            engine.step()
        };
        if let Some(t) = trace.as_mut() {
            t(&event);
        }
        stopped = det.on_iteration(&event) == Control::Stop;
    }
    let outcome = if timeout {
        Outcome::Timeout
    } else {
        det.outcome.unwrap_or(Outcome::BudgetExhausted)
    };
    Ok(RunRecord::new(
        outcome,
        det.first_hits,
        engine.evaluations(),
        seed,
    ))
}

/// When a RidgeWithBranches run stops.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RidgeStop {
    /// At the first evaluated point carrying any peak label.
    AnyPeak,
    /// At the first evaluation of the designated optimum.
    Optimum,
    /// Only when the budget runs out.
    Budget,
}

/// Outcome detection for RidgeWithBranches.
#[derive(Debug)]
pub struct RidgeDetector<'a> {
    problem: &'a RidgeProblem,
    stop: RidgeStop,
    first_hits: BTreeMap<PeakLabel, u64>,
    outcome: Option<Outcome>,
    best_labels: Vec<PeakLabel>,
}

impl<'a> RidgeDetector<'a> {
    pub fn new(problem: &'a RidgeProblem, stop: RidgeStop) -> Self {
        RidgeDetector {
            problem,
            stop,
            first_hits: BTreeMap::new(),
            outcome: None,
            best_labels: Vec::new(),
        }
    }

    fn note(&mut self, x: &crate::bitcore::Genotype, at: u64) -> Control {
        let labels = self.problem.peaks(x);
        for &l in &labels {
            self.first_hits.entry(l).or_insert(at);
        }
        if let Some(&first) = labels.first() {
            let label = if labels.contains(&PeakLabel::DesignatedOptimum) {
                PeakLabel::DesignatedOptimum
            } else {
                first
            };
            self.outcome = match self.stop {
                RidgeStop::AnyPeak => Some(Outcome::SinglePeak(label)),
                RidgeStop::Optimum if label == PeakLabel::DesignatedOptimum => {
                    Some(Outcome::SolvedAt(at))
                }
                _ => None,
            };
        }
        if self.outcome.is_some() {
            Control::Stop
        } else {
            Control::Continue
        }
    }

    fn track_best(&mut self, pop: &Population) {
        let best = pop.slots_with_fitness(pop.max_fitness())[0];
        self.best_labels = self.problem.peaks(pop.genotype(best));
    }
}

impl Observer for RidgeDetector<'_> {
    fn on_start(&mut self, population: &Population, _evaluations: u64) -> Control {
        self.track_best(population);
        for (slot, g) in population.genotypes().iter().enumerate() {
            if self.note(g, slot as u64 + 1) == Control::Stop {
                return Control::Stop;
            }
        }
        Control::Continue
    }

    fn on_iteration(&mut self, event: &IterationEvent<'_>) -> Control {
        if event.replacement.survived() {
            self.track_best(event.population);
        }
        self.note(event.offspring, event.evaluations)
    }
}

/// One RidgeWithBranches run.
///
/// `AnyPeak` reports `SinglePeak(label)` for the first peak reached, with
/// `DesignatedOptimum` preferred when several labels apply; `Optimum` reports
/// `SolvedAt`. Either falls back to `BudgetExhausted`. Under `Budget` the
/// outcome is the label of the final best point, if any.
pub fn run_ridge(
    problem: &RidgeProblem,
    config: &EngineConfig,
    seed: u64,
    stop: RidgeStop,
    trace: Trace<'_>,
) -> Result<RunRecord> {
    let mut det = RidgeDetector::new(problem, stop);
    let evaluations = drive(config, problem, RngStream::new(seed), &mut det, trace)?;
    let outcome = match det.outcome {
        Some(o) => o,
        None if stop == RidgeStop::Budget => det
            .best_labels
            .first()
            .map(|&l| {
                if det.best_labels.contains(&PeakLabel::DesignatedOptimum) {
                    Outcome::SinglePeak(PeakLabel::DesignatedOptimum)
                } else {
                    Outcome::SinglePeak(l)
                }
            })
            .unwrap_or(Outcome::BudgetExhausted),
        None => Outcome::BudgetExhausted,
    };
    Ok(RunRecord::new(outcome, det.first_hits, evaluations, seed))
}

/// Tracks the best fitness and, optionally, the first evaluation reaching a
/// target value.
struct SolveTracker {
    target: Option<Fitness>,
    best: Fitness,
    solved_at: Option<u64>,
}

impl Observer for SolveTracker {
    fn on_start(&mut self, population: &Population, _evaluations: u64) -> Control {
        for slot in 0..population.len() {
            let f = population.fitness(slot);
            self.best = self.best.max(f);
            if self.solved_at.is_none() && Some(f) == self.target {
                self.solved_at = Some(slot as u64 + 1);
            }
        }
        if self.solved_at.is_some() {
            Control::Stop
        } else {
            Control::Continue
        }
    }

    fn on_iteration(&mut self, event: &IterationEvent<'_>) -> Control {
        self.best = self.best.max(event.offspring_fitness);
        if Some(event.offspring_fitness) == self.target {
            self.solved_at = Some(event.evaluations);
            return Control::Stop;
        }
        Control::Continue
    }
}

/// Runs `copies` independent (1+1) EAs of `⌊B/μ⌋` evaluations each.
///
/// Copies are treated as interleaved round-robin: evaluation `t` of copy `i`
/// (both 0-based) is global evaluation `t·μ + i + 1`.
fn parallel_one_plus_one<P: Problem + ?Sized>(
    problem: &P,
    config: &EngineConfig,
    seed: u64,
    target: Option<Fitness>,
) -> Result<(Option<u64>, Fitness, u64)> {
    let copies = config.mu as u64;
    let per_copy = config.budget / copies;
    if per_copy == 0 {
        return Err(Error::InvalidParameter(format!(
            "budget {} too small for {} parallel runs",
            config.budget, copies
        )));
    }
    let single = EngineConfig {
        kind: EngineKind::OnePlusOne,
        mu: 1,
        budget: per_copy,
        ..config.clone()
    };
    let mut solved: Option<u64> = None;
    let mut best = Fitness(i64::MIN);
    for i in 0..copies {
        let mut tracker = SolveTracker {
            target,
            best: Fitness(i64::MIN),
            solved_at: None,
        };
        run_one_plus_one(&single, problem, RngStream::for_run(seed, i), &mut tracker)?;
        best = best.max(tracker.best);
        if let Some(t) = tracker.solved_at {
            let global = (t - 1) * copies + i + 1;
            solved = Some(solved.map_or(global, |s: u64| s.min(global)));
        }
    }
    Ok((solved, best, per_copy * copies))
}

fn solve_run<P: Problem + ?Sized>(
    problem: &P,
    config: &EngineConfig,
    seed: u64,
    target: Option<Fitness>,
    trace: Trace<'_>,
) -> Result<(Option<u64>, Fitness, u64)> {
    if config.kind == EngineKind::OnePlusOne && config.mu > 1 {
        return parallel_one_plus_one(problem, config, seed, target);
    }
    let mut tracker = SolveTracker {
        target,
        best: Fitness(i64::MIN),
        solved_at: None,
    };
    let evaluations = drive(config, problem, RngStream::new(seed), &mut tracker, trace)?;
    Ok((tracker.solved_at, tracker.best, evaluations))
}

/// One MaxSat run: `SolvedAt` on the first evaluation satisfying every
/// clause, otherwise `BudgetExhausted`. A (1+1) config with `μ > 1` runs `μ`
/// independent copies sharing the budget.
pub fn run_maxsat(
    formula: &CnfFormula,
    config: &EngineConfig,
    seed: u64,
    trace: Trace<'_>,
) -> Result<RunRecord> {
    let target = Fitness(formula.num_clauses() as i64);
    let (solved, best, evaluations) = solve_run(formula, config, seed, Some(target), trace)?;
    let outcome = solved.map_or(Outcome::BudgetExhausted, Outcome::SolvedAt);
    let mut rec = RunRecord::new(outcome, BTreeMap::new(), evaluations, seed);
    rec.best_fitness = Some(best.0);
    Ok(rec)
}

/// One MKP run to the full budget. The outcome is the best feasible fitness
/// ever evaluated, 0 if nothing feasible was seen.
pub fn run_mkp(
    inst: &MkpInstance,
    config: &EngineConfig,
    seed: u64,
    trace: Trace<'_>,
) -> Result<RunRecord> {
    let (_, best, evaluations) = solve_run(inst, config, seed, None, trace)?;
    let value = best.0.max(0);
    let mut rec = RunRecord::new(
        Outcome::BestFitness(value),
        BTreeMap::new(),
        evaluations,
        seed,
    );
    rec.best_fitness = Some(value);
    Ok(rec)
}
