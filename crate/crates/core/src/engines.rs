//! Generational loops: the (μ+1) steady-state EA, deterministic crowding, the
//! (1+1) EA and the (1+λ) EA.
//!
//! Each engine is a small state machine with a `step` method so that callers
//! (the experiment harness in particular) can drive it directly; the `run_*`
//! functions wrap the common "step until the observer says stop or the budget
//! runs out" loop.

use std::fmt;
use std::str::FromStr;

use crate::benchmarks::Problem;
use crate::bitcore::{Fitness, Genotype, Population, RngStream};
use crate::error::{Error, Result};
use crate::operators::{
    mutate_into, replace_worst, select_parent, MutationPolicy, Replacement, SelectionPolicy,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EngineKind {
    SteadyState,
    Crowding,
    OnePlusOne,
    OnePlusLambda,
}

impl EngineKind {
    pub fn name(&self) -> &'static str {
        match self {
            EngineKind::SteadyState => "mu1",
            EngineKind::Crowding => "crowding",
            EngineKind::OnePlusOne => "oneplusone",
            EngineKind::OnePlusLambda => "onepluslambda",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mu1" => Ok(EngineKind::SteadyState),
            "crowding" => Ok(EngineKind::Crowding),
            "oneplusone" => Ok(EngineKind::OnePlusOne),
            "onepluslambda" => Ok(EngineKind::OnePlusLambda),
            other => Err(Error::InvalidParameter(format!("unknown engine {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    pub kind: EngineKind,
    pub mu: usize,
    pub lambda: usize,
    pub selection: SelectionPolicy,
    pub mutation: MutationPolicy,
    /// Fitness evaluations allowed, initialization included.
    pub budget: u64,
}

impl EngineConfig {
    pub fn steady_state(
        mu: usize,
        selection: SelectionPolicy,
        mutation: MutationPolicy,
        budget: u64,
    ) -> Self {
        EngineConfig {
            kind: EngineKind::SteadyState,
            mu,
            lambda: 1,
            selection,
            mutation,
            budget,
        }
    }

    pub fn crowding(mu: usize, mutation: MutationPolicy, budget: u64) -> Self {
        EngineConfig {
            kind: EngineKind::Crowding,
            mu,
            lambda: 1,
            selection: SelectionPolicy::Uniform,
            mutation,
            budget,
        }
    }

    pub fn one_plus_one(mutation: MutationPolicy, budget: u64) -> Self {
        EngineConfig {
            kind: EngineKind::OnePlusOne,
            mu: 1,
            lambda: 1,
            selection: SelectionPolicy::Uniform,
            mutation,
            budget,
        }
    }

    pub fn one_plus_lambda(lambda: usize, budget: u64) -> Self {
        EngineConfig {
            kind: EngineKind::OnePlusLambda,
            mu: 1,
            lambda,
            selection: SelectionPolicy::Uniform,
            mutation: MutationPolicy::StandardBit,
            budget,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu == 0 {
            return Err(Error::InvalidParameter("mu must be at least 1".into()));
        }
        if self.lambda == 0 {
            return Err(Error::InvalidParameter("lambda must be at least 1".into()));
        }
        if self.budget < self.mu as u64 {
            return Err(Error::InvalidParameter(format!(
                "budget {} is smaller than the {} initial evaluations",
                self.budget, self.mu
            )));
        }
        if matches!(
            self.kind,
            EngineKind::OnePlusOne | EngineKind::OnePlusLambda
        ) && self.mu != 1
        {
            return Err(Error::InvalidParameter(format!(
                "{} requires mu = 1",
                self.kind
            )));
        }
        Ok(())
    }
}

/// One offspring evaluation (one generation for the (1+λ) EA).
#[derive(Debug)]
pub struct IterationEvent<'a> {
    /// Evaluations consumed so far, including this one.
    pub evaluations: u64,
    /// Slot of the parent the offspring was created from.
    pub parent: usize,
    pub offspring: &'a Genotype,
    pub offspring_fitness: Fitness,
    pub replacement: Replacement,
    /// The member that left the population: the offspring itself when
    /// discarded, otherwise the evicted member.
    pub removed: &'a Genotype,
    pub population: &'a Population,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Receives the initial population and every iteration; may stop the run.
pub trait Observer {
    fn on_start(&mut self, _population: &Population, _evaluations: u64) -> Control {
        Control::Continue
    }

    fn on_iteration(&mut self, event: &IterationEvent<'_>) -> Control;
}

impl<F: FnMut(&IterationEvent<'_>) -> Control> Observer for F {
    fn on_iteration(&mut self, event: &IterationEvent<'_>) -> Control {
        self(event)
    }
}

/// Observer that never stops the run.
#[derive(Debug, Default, Clone, Copy)]
pub struct RunToBudget;

impl Observer for RunToBudget {
    fn on_iteration(&mut self, _event: &IterationEvent<'_>) -> Control {
        Control::Continue
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome<T> {
    pub state: T,
    pub evaluations: u64,
    /// True if the run ended because the budget ran out rather than because
    /// the observer stopped it.
    pub budget_exhausted: bool,
}

fn initial_population<P: Problem + ?Sized>(
    mu: usize,
    problem: &P,
    rng: &mut RngStream,
) -> Result<Population> {
    let n = problem.dimension();
    let members = (0..mu)
        .map(|_| {
            let g = Genotype::random(n, rng)?;
            let f = problem.fitness(&g);
            Ok((g, f))
        })
        .collect::<Result<Vec<_>>>()?;
    Population::new(members)
}

/// The (μ+1) EA: select a parent, mutate, remove a worst element of P ∪ {y}.
#[derive(Debug)]
pub struct SteadyState<'p, P: Problem + ?Sized> {
    problem: &'p P,
    selection: SelectionPolicy,
    mutation: MutationPolicy,
    pop: Population,
    scratch: Genotype,
    evaluations: u64,
    rng: RngStream,
}

impl<'p, P: Problem + ?Sized> SteadyState<'p, P> {
    /// Samples the initial population, consuming `μ` evaluations.
    pub fn new(config: &EngineConfig, problem: &'p P, mut rng: RngStream) -> Result<Self> {
        config.validate()?;
        let pop = initial_population(config.mu, problem, &mut rng)?;
        Ok(SteadyState {
            problem,
            selection: config.selection,
            mutation: config.mutation,
            scratch: pop.genotype(0).clone(),
            pop,
            evaluations: config.mu as u64,
            rng,
        })
    }

    pub fn population(&self) -> &Population {
        &self.pop
    }

    pub fn into_population(self) -> Population {
        self.pop
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn rng(&mut self) -> &mut RngStream {
        &mut self.rng
    }

    /// Population and random stream together, for callers that pick parents
    /// themselves.
    pub fn parts(&mut self) -> (&Population, &mut RngStream) {
        (&self.pop, &mut self.rng)
    }

    pub fn selection(&self) -> SelectionPolicy {
        self.selection
    }

    /// Accounts for `count` iterations that were simulated analytically.
    pub fn skip(&mut self, count: u64) {
        self.evaluations = self.evaluations.saturating_add(count);
    }

    pub fn step(&mut self) -> IterationEvent<'_> {
        let parent = select_parent(&self.pop, self.selection, &mut self.rng)
            .expect("population is non-empty");
        self.step_from(parent)
    }

    /// One iteration with a parent chosen by the caller.
    pub fn step_from(&mut self, parent: usize) -> IterationEvent<'_> {
        mutate_into(
            self.pop.genotype(parent),
            &mut self.scratch,
            self.mutation,
            &mut self.rng,
        );
        let f = self.problem.fitness(&self.scratch);
        self.evaluations += 1;
        let replacement = replace_worst(&mut self.pop, &mut self.scratch, f, &mut self.rng);
        let offspring = match replacement {
            Replacement::Discarded => &self.scratch,
            Replacement::Replaced { slot, .. } => self.pop.genotype(slot),
        };
        IterationEvent {
            evaluations: self.evaluations,
            parent,
            offspring,
            offspring_fitness: f,
            replacement,
            removed: &self.scratch,
            population: &self.pop,
        }
    }
}

/// Deterministic crowding: uniform parent, offspring replaces its own parent
/// iff it is at least as fit.
#[derive(Debug)]
pub struct Crowding<'p, P: Problem + ?Sized> {
    problem: &'p P,
    mutation: MutationPolicy,
    pop: Population,
    scratch: Genotype,
    evaluations: u64,
    rng: RngStream,
}

impl<'p, P: Problem + ?Sized> Crowding<'p, P> {
    pub fn new(config: &EngineConfig, problem: &'p P, mut rng: RngStream) -> Result<Self> {
        config.validate()?;
        let pop = initial_population(config.mu, problem, &mut rng)?;
        Ok(Crowding {
            problem,
            mutation: config.mutation,
            scratch: pop.genotype(0).clone(),
            pop,
            evaluations: config.mu as u64,
            rng,
        })
    }

    pub fn population(&self) -> &Population {
        &self.pop
    }

    pub fn into_population(self) -> Population {
        self.pop
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn step(&mut self) -> IterationEvent<'_> {
        let parent = self.rng.index(self.pop.len());
        mutate_into(
            self.pop.genotype(parent),
            &mut self.scratch,
            self.mutation,
            &mut self.rng,
        );
        let f = self.problem.fitness(&self.scratch);
        self.evaluations += 1;
        let replacement = if f >= self.pop.fitness(parent) {
            let evicted = self.pop.swap_member(parent, &mut self.scratch, f);
            Replacement::Replaced {
                slot: parent,
                evicted,
            }
        } else {
            Replacement::Discarded
        };
        IterationEvent {
            evaluations: self.evaluations,
            parent,
            offspring: if replacement.survived() {
                self.pop.genotype(parent)
            } else {
                &self.scratch
            },
            offspring_fitness: f,
            replacement,
            removed: &self.scratch,
            population: &self.pop,
        }
    }
}

/// The (1+1) EA (or RLS): the offspring replaces the parent iff it is at
/// least as fit.
#[derive(Debug)]
pub struct OnePlusOne<'p, P: Problem + ?Sized> {
    problem: &'p P,
    mutation: MutationPolicy,
    pop: Population,
    scratch: Genotype,
    evaluations: u64,
    rng: RngStream,
}

impl<'p, P: Problem + ?Sized> OnePlusOne<'p, P> {
    pub fn new(config: &EngineConfig, problem: &'p P, mut rng: RngStream) -> Result<Self> {
        config.validate()?;
        let pop = initial_population(1, problem, &mut rng)?;
        Ok(OnePlusOne {
            problem,
            mutation: config.mutation,
            scratch: pop.genotype(0).clone(),
            pop,
            evaluations: 1,
            rng,
        })
    }

    pub fn current(&self) -> (&Genotype, Fitness) {
        (self.pop.genotype(0), self.pop.fitness(0))
    }

    pub fn population(&self) -> &Population {
        &self.pop
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn step(&mut self) -> IterationEvent<'_> {
        mutate_into(
            self.pop.genotype(0),
            &mut self.scratch,
            self.mutation,
            &mut self.rng,
        );
        let f = self.problem.fitness(&self.scratch);
        self.evaluations += 1;
        let replacement = if f >= self.pop.fitness(0) {
            let evicted = self.pop.swap_member(0, &mut self.scratch, f);
            Replacement::Replaced { slot: 0, evicted }
        } else {
            Replacement::Discarded
        };
        IterationEvent {
            evaluations: self.evaluations,
            parent: 0,
            offspring: if replacement.survived() {
                self.pop.genotype(0)
            } else {
                &self.scratch
            },
            offspring_fitness: f,
            replacement,
            removed: &self.scratch,
            population: &self.pop,
        }
    }
}

/// The (1+λ) EA with standard bit mutation. A generation creates λ
/// offspring; a best one (ties uniform) replaces the parent iff it is at
/// least as fit.
#[derive(Debug)]
pub struct OnePlusLambda<'p, P: Problem + ?Sized> {
    problem: &'p P,
    lambda: usize,
    budget: u64,
    pop: Population,
    best: Genotype,
    scratch: Genotype,
    evaluations: u64,
    generations: u64,
    rng: RngStream,
}

impl<'p, P: Problem + ?Sized> OnePlusLambda<'p, P> {
    pub fn new(config: &EngineConfig, problem: &'p P, mut rng: RngStream) -> Result<Self> {
        config.validate()?;
        let pop = initial_population(1, problem, &mut rng)?;
        Ok(OnePlusLambda {
            problem,
            lambda: config.lambda,
            budget: config.budget,
            best: pop.genotype(0).clone(),
            scratch: pop.genotype(0).clone(),
            pop,
            evaluations: 1,
            generations: 0,
            rng,
        })
    }

    pub fn current(&self) -> (&Genotype, Fitness) {
        (self.pop.genotype(0), self.pop.fitness(0))
    }

    pub fn population(&self) -> &Population {
        &self.pop
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn generations(&self) -> u64 {
        self.generations
    }

    /// One generation. If fewer than λ evaluations remain in the budget only
    /// that many offspring are created. Returns `None` when no budget is left.
    pub fn step(&mut self) -> Option<IterationEvent<'_>> {
        let remaining = self.budget.saturating_sub(self.evaluations);
        let count = (self.lambda as u64).min(remaining) as usize;
        if count == 0 {
            return None;
        }
        let mut best_f = Fitness(i64::MIN);
        let mut ties = 0usize;
        for _ in 0..count {
            mutate_into(
                self.pop.genotype(0),
                &mut self.scratch,
                MutationPolicy::StandardBit,
                &mut self.rng,
            );
            let f = self.problem.fitness(&self.scratch);
            if f > best_f {
                best_f = f;
                ties = 1;
                std::mem::swap(&mut self.best, &mut self.scratch);
            } else if f == best_f {
                ties += 1;
                if self.rng.index(ties) == 0 {
                    std::mem::swap(&mut self.best, &mut self.scratch);
                }
            }
        }
        self.evaluations += count as u64;
        self.generations += 1;
        let replacement = if best_f >= self.pop.fitness(0) {
            let evicted = self.pop.swap_member(0, &mut self.best, best_f);
            Replacement::Replaced { slot: 0, evicted }
        } else {
            Replacement::Discarded
        };
        Some(IterationEvent {
            evaluations: self.evaluations,
            parent: 0,
            offspring: if replacement.survived() {
                self.pop.genotype(0)
            } else {
                &self.best
            },
            offspring_fitness: best_f,
            replacement,
            removed: &self.best,
            population: &self.pop,
        })
    }
}

macro_rules! drive {
    ($engine:expr, $config:expr, $observer:expr) => {{
        let mut stopped =
            $observer.on_start($engine.population(), $engine.evaluations()) == Control::Stop;
        while !stopped && $engine.evaluations() < $config.budget {
            let event = $engine.step();
            stopped = $observer.on_iteration(&event) == Control::Stop;
        }
        stopped
    }};
}

/// Runs the (μ+1) EA until the observer stops it or the budget is spent.
pub fn run_steady_state<P: Problem + ?Sized, O: Observer + ?Sized>(
    config: &EngineConfig,
    problem: &P,
    rng: RngStream,
    observer: &mut O,
) -> Result<RunOutcome<Population>> {
    if config.kind != EngineKind::SteadyState {
        return Err(Error::InvalidParameter(format!(
            "expected mu1 engine, got {}",
            config.kind
        )));
    }
    let mut engine = SteadyState::new(config, problem, rng)?;
    let stopped = drive!(engine, config, observer);
    Ok(RunOutcome {
        evaluations: engine.evaluations(),
        budget_exhausted: !stopped,
        state: engine.into_population(),
    })
}

/// Runs the (μ+1) EA with deterministic crowding.
pub fn run_crowding<P: Problem + ?Sized, O: Observer + ?Sized>(
    config: &EngineConfig,
    problem: &P,
    rng: RngStream,
    observer: &mut O,
) -> Result<RunOutcome<Population>> {
    if config.kind != EngineKind::Crowding {
        return Err(Error::InvalidParameter(format!(
            "expected crowding engine, got {}",
            config.kind
        )));
    }
    let mut engine = Crowding::new(config, problem, rng)?;
    let stopped = drive!(engine, config, observer);
    Ok(RunOutcome {
        evaluations: engine.evaluations(),
        budget_exhausted: !stopped,
        state: engine.into_population(),
    })
}

/// Runs the (1+1) EA; returns the final point.
pub fn run_one_plus_one<P: Problem + ?Sized, O: Observer + ?Sized>(
    config: &EngineConfig,
    problem: &P,
    rng: RngStream,
    observer: &mut O,
) -> Result<RunOutcome<(Genotype, Fitness)>> {
    if config.kind != EngineKind::OnePlusOne {
        return Err(Error::InvalidParameter(format!(
            "expected oneplusone engine, got {}",
            config.kind
        )));
    }
    let mut engine = OnePlusOne::new(config, problem, rng)?;
    let stopped = drive!(engine, config, observer);
    let (g, f) = engine.current();
    Ok(RunOutcome {
        evaluations: engine.evaluations(),
        budget_exhausted: !stopped,
        state: (g.clone(), f),
    })
}

/// Runs the (1+λ) EA; returns the final point.
pub fn run_one_plus_lambda<P: Problem + ?Sized, O: Observer + ?Sized>(
    config: &EngineConfig,
    problem: &P,
    rng: RngStream,
    observer: &mut O,
) -> Result<RunOutcome<(Genotype, Fitness)>> {
    if config.kind != EngineKind::OnePlusLambda {
        return Err(Error::InvalidParameter(format!(
            "expected onepluslambda engine, got {}",
            config.kind
        )));
    }
    let mut engine = OnePlusLambda::new(config, problem, rng)?;
    let mut stopped = observer.on_start(engine.population(), engine.evaluations()) == Control::Stop;
    while !stopped {
        match engine.step() {
            Some(event) => stopped = observer.on_iteration(&event) == Control::Stop,
            None => break,
        }
    }
    let (g, f) = engine.current();
    Ok(RunOutcome {
        evaluations: engine.evaluations(),
        budget_exhausted: !stopped,
        state: (g.clone(), f),
    })
}

/// `D = |P₀| - |P₁|`: members with fewer than `n/2` ones minus members with
/// more than `n/2` ones. Valley members count in neither group.
pub fn branch_imbalance(pop: &Population, n: usize) -> i64 {
    pop.genotypes()
        .iter()
        .map(|g| branch_of(g.hamming_weight(), n))
        .sum()
}

/// +1 for the zeros branch, -1 for the ones branch, 0 in the valley.
#[inline]
pub fn branch_of(ones: usize, n: usize) -> i64 {
    match (2 * ones).cmp(&n) {
        std::cmp::Ordering::Less => 1,
        std::cmp::Ordering::Greater => -1,
        std::cmp::Ordering::Equal => 0,
    }
}
