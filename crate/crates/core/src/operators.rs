//! Mutation, parent selection and worst-removal replacement.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bitcore::{Fitness, Genotype, Population, RngStream};
use crate::error::{Error, Result};

/// Parent selection regime, from highest to lowest selective pressure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SelectionPolicy {
    /// Best of `K` uniform draws (with replacement).
    Tournament(usize),
    Uniform,
    /// Worst of `K` uniform draws (with replacement).
    InverseTournament(usize),
    /// A minimum-fitness member, ties broken uniformly.
    InverseElitist,
}

impl SelectionPolicy {
    pub fn tournament(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter(
                "tournament size must be at least 1".into(),
            ));
        }
        Ok(SelectionPolicy::Tournament(k))
    }

    pub fn inverse_tournament(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter(
                "tournament size must be at least 1".into(),
            ));
        }
        Ok(SelectionPolicy::InverseTournament(k))
    }

    /// Tournament size, or `None` for the non-tournament kinds.
    pub fn tournament_size(&self) -> Option<usize> {
        match *self {
            SelectionPolicy::Tournament(k) | SelectionPolicy::InverseTournament(k) => Some(k),
            _ => None,
        }
    }

    /// Short name used on the command line and in output tables.
    pub fn name(&self) -> &'static str {
        match self {
            SelectionPolicy::Tournament(_) => "tournament",
            SelectionPolicy::Uniform => "uniform",
            SelectionPolicy::InverseTournament(_) => "inv-tournament",
            SelectionPolicy::InverseElitist => "inv-elitist",
        }
    }

    /// Builds a policy from its name and a tournament size (ignored by the
    /// non-tournament kinds).
    pub fn from_name(name: &str, k: usize) -> Result<Self> {
        match name {
            "tournament" => Self::tournament(k),
            "uniform" => Ok(SelectionPolicy::Uniform),
            "inv-tournament" => Self::inverse_tournament(k),
            "inv-elitist" => Ok(SelectionPolicy::InverseElitist),
            other => Err(Error::InvalidParameter(format!(
                "unknown selection {other:?}"
            ))),
        }
    }
}

impl fmt::Display for SelectionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tournament_size() {
            Some(k) => write!(f, "{}-{}", self.name(), k),
            None => f.write_str(self.name()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MutationPolicy {
    /// Flip each bit independently with probability `1/n`.
    StandardBit,
    /// Flip exactly one uniformly chosen bit.
    OneBitRls,
}

impl MutationPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            MutationPolicy::StandardBit => "sbm",
            MutationPolicy::OneBitRls => "rls",
        }
    }
}

impl fmt::Display for MutationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MutationPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sbm" => Ok(MutationPolicy::StandardBit),
            "rls" => Ok(MutationPolicy::OneBitRls),
            other => Err(Error::InvalidParameter(format!(
                "unknown mutation {other:?}"
            ))),
        }
    }
}

/// Writes a mutated copy of `parent` into `child` and returns the number of
/// flipped positions.
///
/// Standard bit mutation draws the gaps between flipped positions from a
/// geometric distribution, which is exactly equivalent to `n` independent
/// Bernoulli(1/n) trials but costs O(1 + flips) random draws.
pub fn mutate_into(
    parent: &Genotype,
    child: &mut Genotype,
    policy: MutationPolicy,
    rng: &mut RngStream,
) -> usize {
    child.copy_from(parent);
    let n = parent.len();
    match policy {
        MutationPolicy::OneBitRls => {
            child.flip(rng.index(n));
            1
        }
        MutationPolicy::StandardBit => {
            if n == 1 {
                child.flip(0);
                return 1;
            }
            let log_q = (-1.0 / n as f64).ln_1p();
            let mut flips = 0;
            let mut pos = 0usize;
            loop {
                let gap = (rng.unit_open0().ln() / log_q).floor();
                if gap >= (n - pos) as f64 {
                    break;
                }
                pos += gap as usize;
                child.flip(pos);
                flips += 1;
                pos += 1;
                if pos >= n {
                    break;
                }
            }
            flips
        }
    }
}

/// Returns a mutated copy of `x`.
pub fn mutate(x: &Genotype, policy: MutationPolicy, rng: &mut RngStream) -> Genotype {
    let mut child = x.clone();
    mutate_into(x, &mut child, policy, rng);
    child
}

/// Index of the parent chosen by `policy`.
pub fn select_parent(
    pop: &Population,
    policy: SelectionPolicy,
    rng: &mut RngStream,
) -> Result<usize> {
    if pop.is_empty() {
        return Err(Error::InvalidState(
            "cannot select from an empty population".into(),
        ));
    }
    Ok(match policy {
        SelectionPolicy::Uniform => rng.index(pop.len()),
        SelectionPolicy::Tournament(k) => tournament(pop, k, rng, |a, b| a > b),
        SelectionPolicy::InverseTournament(k) => tournament(pop, k, rng, |a, b| a < b),
        SelectionPolicy::InverseElitist => {
            let worst = pop.worst_slots();
            worst[rng.index(worst.len())]
        }
    })
}

/// `k` uniform draws with replacement; the extreme entrant under `better`
/// wins, ties broken uniformly over the drawn entrants.
fn tournament(
    pop: &Population,
    k: usize,
    rng: &mut RngStream,
    better: impl Fn(Fitness, Fitness) -> bool,
) -> usize {
    let mut chosen = rng.index(pop.len());
    let mut best = pop.fitness(chosen);
    let mut ties = 1u32;
    for _ in 1..k {
        let slot = rng.index(pop.len());
        let f = pop.fitness(slot);
        if better(f, best) {
            chosen = slot;
            best = f;
            ties = 1;
        } else if f == best {
            ties += 1;
            if rng.index(ties as usize) == 0 {
                chosen = slot;
            }
        }
    }
    chosen
}

/// Which element left the population in a replacement step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Replacement {
    /// The offspring itself was removed; the population is unchanged.
    Discarded,
    /// The offspring took `slot`, evicting a member of fitness `evicted`.
    Replaced { slot: usize, evicted: Fitness },
}

impl Replacement {
    pub fn survived(&self) -> bool {
        matches!(self, Replacement::Replaced { .. })
    }
}

/// Removes a uniformly chosen minimum-fitness element of `pop ∪ {offspring}`.
///
/// On `Replaced`, `offspring` afterwards holds the evicted genotype.
pub fn replace_worst(
    pop: &mut Population,
    offspring: &mut Genotype,
    fitness: Fitness,
    rng: &mut RngStream,
) -> Replacement {
    let min = pop.min_fitness();
    if fitness < min {
        return Replacement::Discarded;
    }
    let worst = pop.worst_slots();
    let candidates = worst.len() + (fitness == min) as usize;
    let pick = rng.index(candidates);
    if pick == worst.len() {
        return Replacement::Discarded;
    }
    let slot = worst[pick];
    let evicted = pop.swap_member(slot, offspring, fitness);
    debug_assert_eq!(evicted, min);
    Replacement::Replaced { slot, evicted }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pop_with(fitness: &[i64]) -> Population {
        let members = fitness
            .iter()
            .map(|&f| (Genotype::zeros(4).unwrap(), Fitness(f)))
            .collect();
        Population::new(members).unwrap()
    }

    fn frequencies(pop: &Population, policy: SelectionPolicy, draws: usize, seed: u64) -> Vec<f64> {
        let mut rng = RngStream::new(seed);
        let mut counts = vec![0usize; pop.len()];
        for _ in 0..draws {
            counts[select_parent(pop, policy, &mut rng).unwrap()] += 1;
        }
        counts
            .into_iter()
            .map(|c| c as f64 / draws as f64)
            .collect()
    }

    /// Exact selection probabilities of a tournament by enumerating all
    /// `μ^K` ordered entrant tuples.
    fn enumerate_tournament(fitness: &[i64], k: u32, inverse: bool) -> Vec<f64> {
        let mu = fitness.len();
        let total = mu.pow(k);
        let mut probs = vec![0.0; mu];
        for code in 0..total {
            let mut c = code;
            let entrants: Vec<usize> = (0..k)
                .map(|_| {
                    let e = c % mu;
                    c /= mu;
                    e
                })
                .collect();
            let extreme = entrants
                .iter()
                .map(|&e| fitness[e])
                .reduce(|a, b| if inverse { a.min(b) } else { a.max(b) })
                .unwrap();
            let winners: Vec<usize> = entrants
                .iter()
                .copied()
                .filter(|&e| fitness[e] == extreme)
                .collect();
            for w in &winners {
                probs[*w] += 1.0 / winners.len() as f64 / total as f64;
            }
        }
        probs
    }

    #[test]
    fn rls_flips_each_position_uniformly() {
        let x = Genotype::zeros(4).unwrap();
        let mut rng = RngStream::new(10);
        let mut counts = [0usize; 4];
        let trials = 100_000;
        for _ in 0..trials {
            let y = mutate(&x, MutationPolicy::OneBitRls, &mut rng);
            assert_eq!(y.hamming_weight(), 1);
            counts[(0..4).find(|&i| y.get(i)).unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / trials as f64 - 0.25).abs() < 0.02);
        }
    }

    #[test]
    fn standard_bit_mutation_flip_statistics() {
        let x = Genotype::zeros(100).unwrap();
        let mut rng = RngStream::new(11);
        let trials = 100_000;
        let mut flips = 0usize;
        let mut copies = 0usize;
        for _ in 0..trials {
            let y = mutate(&x, MutationPolicy::StandardBit, &mut rng);
            let d = y.hamming_weight();
            flips += d;
            copies += (d == 0) as usize;
        }
        let mean = flips as f64 / trials as f64;
        assert!((mean - 1.0).abs() < 0.03, "mean flips {mean}");
        let copy_rate = copies as f64 / trials as f64;
        let closed_form = (1.0f64 - 0.01).powi(100);
        assert!(
            (copy_rate - closed_form).abs() < 0.01,
            "copy rate {copy_rate}"
        );
    }

    #[test]
    fn standard_bit_mutation_positions_are_uniform() {
        let x = Genotype::zeros(10).unwrap();
        let mut rng = RngStream::new(12);
        let mut hits = [0usize; 10];
        let trials = 200_000;
        for _ in 0..trials {
            let y = mutate(&x, MutationPolicy::StandardBit, &mut rng);
            for (i, h) in hits.iter_mut().enumerate() {
                *h += y.get(i) as usize;
            }
        }
        for h in hits {
            assert!((h as f64 / trials as f64 - 0.1).abs() < 0.005);
        }
    }

    #[test]
    fn uniform_selection_is_flat() {
        let pop = pop_with(&[1, 2, 3]);
        for p in frequencies(&pop, SelectionPolicy::Uniform, 100_000, 1) {
            assert!((p - 1.0 / 3.0).abs() < 0.01);
        }
    }

    #[test]
    fn inverse_binary_tournament_on_three() {
        let exact = enumerate_tournament(&[1, 2, 3], 2, true);
        assert!((exact[0] - 5.0 / 9.0).abs() < 1e-12);
        let pop = pop_with(&[1, 2, 3]);
        let freq = frequencies(&pop, SelectionPolicy::InverseTournament(2), 100_000, 2);
        assert!((freq[0] - 5.0 / 9.0).abs() < 0.02, "{freq:?}");
    }

    #[test]
    fn tournaments_match_enumeration_with_ties() {
        let fitness = [4, 1, 4, 2, 1];
        let pop = pop_with(&fitness);
        for (policy, inverse) in [
            (SelectionPolicy::Tournament(3), false),
            (SelectionPolicy::InverseTournament(3), true),
        ] {
            let exact = enumerate_tournament(&fitness, 3, inverse);
            let freq = frequencies(&pop, policy, 200_000, 3);
            for (e, f) in exact.iter().zip(&freq) {
                assert!((e - f).abs() < 0.01, "{policy}: {exact:?} vs {freq:?}");
            }
        }
    }

    #[test]
    fn inverse_elitist_splits_ties() {
        let pop = pop_with(&[1, 1, 3]);
        let freq = frequencies(&pop, SelectionPolicy::InverseElitist, 100_000, 4);
        assert!((freq[0] - 0.5).abs() < 0.02);
        assert!((freq[1] - 0.5).abs() < 0.02);
        assert_eq!(freq[2], 0.0);
    }

    #[test]
    fn size_one_tournaments_are_uniform() {
        let pop = pop_with(&[5, 1, 9, 2]);
        for policy in [
            SelectionPolicy::Tournament(1),
            SelectionPolicy::InverseTournament(1),
        ] {
            for p in frequencies(&pop, policy, 100_000, 5) {
                assert!((p - 0.25).abs() < 0.01);
            }
        }
    }

    #[test]
    fn tournament_and_inverse_are_mirror_images() {
        let fitness = [10, 30, 20, 50, 40];
        let pop = pop_with(&fitness);
        let forward = frequencies(&pop, SelectionPolicy::Tournament(3), 100_000, 6);
        let inverse = frequencies(&pop, SelectionPolicy::InverseTournament(3), 100_000, 7);
        let mut order: Vec<usize> = (0..fitness.len()).collect();
        order.sort_by_key(|&i| fitness[i]);
        for r in 0..order.len() {
            let lo = order[r];
            let hi = order[order.len() - 1 - r];
            assert!((inverse[lo] - forward[hi]).abs() < 0.02);
        }
    }

    #[test]
    fn inverse_tournament_hits_minimal_subset() {
        // Minimal subset of size L = 2 in μ = 6: P = 1 - ((μ-L)/μ)^K.
        let pop = pop_with(&[0, 0, 5, 6, 7, 8]);
        let k = 3;
        let freq = frequencies(&pop, SelectionPolicy::InverseTournament(k), 100_000, 8);
        let expected = 1.0 - (4.0f64 / 6.0).powi(k as i32);
        assert!((freq[0] + freq[1] - expected).abs() < 0.01);
    }

    #[test]
    fn zero_tournament_size_rejected() {
        assert!(SelectionPolicy::tournament(0).is_err());
        assert!(SelectionPolicy::inverse_tournament(0).is_err());
        assert!(SelectionPolicy::from_name("roulette", 2).is_err());
    }

    fn removal_frequencies(pop_fitness: &[i64], offspring: i64, trials: usize) -> Vec<f64> {
        // Index pop_fitness.len() stands for the offspring.
        let mut rng = RngStream::new(21);
        let mut counts = vec![0usize; pop_fitness.len() + 1];
        for _ in 0..trials {
            let mut pop = pop_with(pop_fitness);
            let mut y = Genotype::ones(4).unwrap();
            match replace_worst(&mut pop, &mut y, Fitness(offspring), &mut rng) {
                Replacement::Discarded => counts[pop_fitness.len()] += 1,
                Replacement::Replaced { slot, evicted } => {
                    assert_eq!(evicted, Fitness(pop_fitness[slot]));
                    counts[slot] += 1;
                }
            }
            assert_eq!(pop.len(), pop_fitness.len());
        }
        counts
            .into_iter()
            .map(|c| c as f64 / trials as f64)
            .collect()
    }

    #[test]
    fn replacement_examples() {
        let f = removal_frequencies(&[3, 1, 2], 1, 40_000);
        assert!((f[1] - 0.5).abs() < 0.02 && (f[3] - 0.5).abs() < 0.02);
        assert_eq!(f[0] + f[2], 0.0);

        let f = removal_frequencies(&[3, 3, 3], 0, 1_000);
        assert_eq!(f[3], 1.0);

        let f = removal_frequencies(&[1, 1, 1], 1, 40_000);
        for p in f {
            assert!((p - 0.25).abs() < 0.02);
        }
    }

    #[test]
    fn replaced_buffer_holds_evicted_member() {
        let mut rng = RngStream::new(3);
        let members = vec![
            (Genotype::zeros(4).unwrap(), Fitness(0)),
            ("1000".parse().unwrap(), Fitness(5)),
        ];
        let mut pop = Population::new(members).unwrap();
        let mut y: Genotype = "1111".parse().unwrap();
        let r = replace_worst(&mut pop, &mut y, Fitness(9), &mut rng);
        assert_eq!(
            r,
            Replacement::Replaced {
                slot: 0,
                evicted: Fitness(0)
            }
        );
        assert_eq!(y, Genotype::zeros(4).unwrap());
        assert_eq!(pop.genotype(0).to_string(), "1111");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn replacement_is_elitist(
                fitness in proptest::collection::vec(-20i64..20, 1..12),
                offspring in -25i64..25,
                seed in any::<u64>(),
            ) {
                let mut pop = pop_with(&fitness);
                let max_before = pop.max_fitness();
                let min_all = fitness.iter().copied().min().unwrap().min(offspring);
                let mut y = Genotype::ones(4).unwrap();
                let r = replace_worst(&mut pop, &mut y, Fitness(offspring), &mut RngStream::new(seed));
                if let Replacement::Replaced { evicted, .. } = r {
                    prop_assert_eq!(evicted, Fitness(min_all));
                } else {
                    prop_assert_eq!(offspring, min_all);
                }
                prop_assert!(pop.max_fitness() >= max_before);
                prop_assert_eq!(pop.len(), fitness.len());
                prop_assert!(pop.check_index());
            }

            #[test]
            fn rls_changes_exactly_one_bit(bits in proptest::collection::vec(any::<bool>(), 1..150), seed in any::<u64>()) {
                let x = Genotype::from_bits(&bits).unwrap();
                let y = mutate(&x, MutationPolicy::OneBitRls, &mut RngStream::new(seed));
                prop_assert_eq!(x.distance(&y), 1);
            }
        }
    }
}
