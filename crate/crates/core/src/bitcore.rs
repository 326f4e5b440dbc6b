//! Genotypes, populations, fitness values and the seeded random streams
//! shared by every other module.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const WORD: usize = 64;

/// A fixed-length bit string, packed into 64-bit words.
///
/// Position `i` (0-based) corresponds to the variable `x_{i+1}`. Unused high
/// bits of the last word are kept at zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Genotype {
    len: usize,
    words: Vec<u64>,
}

impl Genotype {
    pub fn zeros(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(n));
        }
        Ok(Genotype {
            len: n,
            words: vec![0; n.div_ceil(WORD)],
        })
    }

    pub fn ones(n: usize) -> Result<Self> {
        let mut g = Self::zeros(n)?;
        g.words.iter_mut().for_each(|w| *w = !0);
        g.clear_tail();
        Ok(g)
    }

    /// Builds a genotype from explicit bits.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let mut g = Self::zeros(bits.len())?;
        for (i, &b) in bits.iter().enumerate() {
            if b {
                g.set(i, true);
            }
        }
        Ok(g)
    }

    /// Uniformly random genotype: every bit is 1 with probability 1/2.
    pub fn random(n: usize, rng: &mut RngStream) -> Result<Self> {
        let mut g = Self::zeros(n)?;
        for w in g.words.iter_mut() {
            *w = rng.next_u64();
        }
        g.clear_tail();
        Ok(g)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false; genotypes have length at least one.
    #[inline]
    /// Packed storage; bit `i` is bit `i % 64` of word `i / 64`.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    /// Number of one bits, `|x|_1`.
    #[inline]
    pub fn hamming_weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of one bits among positions `start..end`.
    pub fn count_ones_in(&self, start: usize, end: usize) -> usize {
        debug_assert!(start <= end && end <= self.len);
        if start == end {
            return 0;
        }
        let (first, last) = (start / WORD, (end - 1) / WORD);
        let lo_mask = !0u64 << (start % WORD);
        let hi_mask = !0u64 >> (WORD - 1 - (end - 1) % WORD);
        if first == last {
            return (self.words[first] & lo_mask & hi_mask).count_ones() as usize;
        }
        let mut total = (self.words[first] & lo_mask).count_ones() as usize;
        total += self.words[first + 1..last]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum::<usize>();
        total + (self.words[last] & hi_mask).count_ones() as usize
    }

    /// Length of the run of ones starting at `start`, scanning forward, capped at `limit`.
    pub fn ones_run_from(&self, start: usize, limit: usize) -> usize {
        let end = (start + limit).min(self.len);
        if start >= end {
            return 0;
        }
        let mut i = start;
        while i < end {
            let word = self.words[i / WORD] >> (i % WORD);
            let run = (!word).trailing_zeros() as usize;
            let available = WORD - i % WORD;
            if run < available {
                return (i + run).min(end) - start;
            }
            i += available;
        }
        end - start
    }

    /// Number of consecutive ones at the end of the string (position `n-1` downward).
    pub fn trailing_ones(&self) -> usize {
        let mut count = 0;
        let mut i = self.len;
        while i > 0 {
            let idx = (i - 1) / WORD;
            let used = (i - 1) % WORD + 1;
            let word = self.words[idx] << (WORD - used);
            let run = (!word).leading_zeros() as usize;
            if run < used {
                return count + run;
            }
            count += used;
            i -= used;
        }
        count
    }

    pub fn complement(&self) -> Genotype {
        let mut g = self.clone();
        g.words.iter_mut().for_each(|w| *w = !*w);
        g.clear_tail();
        g
    }

    /// Hamming distance to another genotype of the same length.
    pub fn distance(&self, other: &Genotype) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn copy_from(&mut self, other: &Genotype) {
        debug_assert_eq!(self.len, other.len);
        self.words.copy_from_slice(&other.words);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << rem) - 1;
        }
    }
}

impl fmt::Display for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Genotype({self})")
    }
}

impl FromStr for Genotype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidParameter(format!(
                    "genotype character {other:?} is not 0 or 1"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Genotype::from_bits(&bits)
    }
}

/// Hamming weight of a genotype.
#[inline]
pub fn hamming_weight(x: &Genotype) -> usize {
    x.hamming_weight()
}

/// Scalar fitness value. Larger is better.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fitness(pub i64);

impl fmt::Display for Fitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<i64> for Fitness {
    fn from(v: i64) -> Self {
        Fitness(v)
    }
}

/// Deterministic pseudo-random stream.
///
/// Backed by ChaCha8, whose output depends only on the 64-bit seed, so draw
/// sequences are identical on every platform.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Stream for run `run_index` of the experiment seeded with `base_seed`.
    pub fn for_run(base_seed: u64, run_index: u64) -> Self {
        Self::new(derive_seed(base_seed, 0, run_index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform index in `0..bound`. `bound` must be positive.
    #[inline]
    pub fn index(&mut self, bound: usize) -> usize {
        self.inner.random_range(0..bound)
    }

    /// Uniform float in `[0, 1)`.
    #[inline]
    pub fn unit(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform float in `(0, 1]`, safe to take the logarithm of.
    #[inline]
    pub fn unit_open0(&mut self) -> f64 {
        1.0 - self.unit()
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}

/// splitmix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a; a stable hash for cell identifiers.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Seed for `(base_seed, cell, run_index)`:
/// `splitmix64(splitmix64(base ^ splitmix64(cell)) ^ run_index)`.
pub fn derive_seed(base_seed: u64, cell_hash: u64, run_index: u64) -> u64 {
    splitmix64(splitmix64(base_seed ^ splitmix64(cell_hash)) ^ run_index)
}

/// Multiset of `μ` genotypes with cached fitness.
///
/// Members are additionally indexed by fitness value so that the worst
/// members (for replacement and inverse-elitist selection) are found in
/// logarithmic time.
#[derive(Clone, Debug)]
pub struct Population {
    genotypes: Vec<Genotype>,
    fitness: Vec<Fitness>,
    buckets: BTreeMap<Fitness, Vec<usize>>,
    bucket_pos: Vec<usize>,
}

impl Population {
    pub fn new(members: Vec<(Genotype, Fitness)>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidState("population must not be empty".into()));
        }
        let mut pop = Population {
            genotypes: Vec::with_capacity(members.len()),
            fitness: Vec::with_capacity(members.len()),
            buckets: BTreeMap::new(),
            bucket_pos: Vec::with_capacity(members.len()),
        };
        for (slot, (g, f)) in members.into_iter().enumerate() {
            pop.genotypes.push(g);
            pop.fitness.push(f);
            let bucket = pop.buckets.entry(f).or_default();
            pop.bucket_pos.push(bucket.len());
            bucket.push(slot);
        }
        Ok(pop)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.genotypes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.genotypes.is_empty()
    }

    #[inline]
    pub fn genotype(&self, slot: usize) -> &Genotype {
        &self.genotypes[slot]
    }

    #[inline]
    pub fn fitness(&self, slot: usize) -> Fitness {
        self.fitness[slot]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Genotype, Fitness)> {
        self.genotypes.iter().zip(self.fitness.iter().copied())
    }

    pub fn genotypes(&self) -> &[Genotype] {
        &self.genotypes
    }

    pub fn min_fitness(&self) -> Fitness {
        *self.buckets.keys().next().expect("non-empty population")
    }

    pub fn max_fitness(&self) -> Fitness {
        *self
            .buckets
            .keys()
            .next_back()
            .expect("non-empty population")
    }

    /// Slots of all members attaining the minimum fitness.
    pub fn worst_slots(&self) -> &[usize] {
        self.buckets.values().next().expect("non-empty population")
    }

    /// Slots of all members with fitness exactly `f`.
    pub fn slots_with_fitness(&self, f: Fitness) -> &[usize] {
        self.buckets.get(&f).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn count_with_fitness(&self, f: Fitness) -> usize {
        self.slots_with_fitness(f).len()
    }

    /// Distinct fitness values present, ascending.
    pub fn distinct_fitness(&self) -> impl Iterator<Item = (Fitness, usize)> + '_ {
        self.buckets.iter().map(|(f, s)| (*f, s.len()))
    }

    /// Puts `genotype` with fitness `f` into `slot`; afterwards `genotype`
    /// holds the member that was evicted. Returns the evicted fitness.
    pub fn swap_member(&mut self, slot: usize, genotype: &mut Genotype, f: Fitness) -> Fitness {
        let old = self.fitness[slot];
        std::mem::swap(&mut self.genotypes[slot], genotype);
        if old != f {
            self.unlink(slot, old);
            self.fitness[slot] = f;
            let bucket = self.buckets.entry(f).or_default();
            self.bucket_pos[slot] = bucket.len();
            bucket.push(slot);
        }
        old
    }

    fn unlink(&mut self, slot: usize, f: Fitness) {
        let bucket = self
            .buckets
            .get_mut(&f)
            .expect("slot indexed under its fitness");
        let pos = self.bucket_pos[slot];
        bucket.swap_remove(pos);
        if let Some(&moved) = bucket.get(pos) {
            self.bucket_pos[moved] = pos;
        }
        if bucket.is_empty() {
            self.buckets.remove(&f);
        }
    }

    /// Checks the fitness index against the member table.
    #[doc(hidden)]
    pub fn check_index(&self) -> bool {
        let indexed: usize = self.buckets.values().map(Vec::len).sum();
        indexed == self.len()
            && self.buckets.iter().all(|(f, slots)| {
                slots
                    .iter()
                    .enumerate()
                    .all(|(pos, &s)| self.fitness[s] == *f && self.bucket_pos[s] == pos)
            })
    }
}
