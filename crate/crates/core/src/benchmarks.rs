//! Analytic benchmark families: TwoMax, TruncatedTwoMax, RidgeWithBranches and
//! TwoGradients.

use std::fmt;

use crate::bitcore::{Fitness, Genotype};
use crate::error::{Error, Result};

/// A pseudo-Boolean fitness function over fixed-length genotypes.
pub trait Problem: Sync {
    fn dimension(&self) -> usize;

    fn fitness(&self, x: &Genotype) -> Fitness;

    /// Peaks `x` sits on. Empty for most points.
    fn peaks(&self, _x: &Genotype) -> Vec<PeakLabel> {
        Vec::new()
    }
}

impl<P: Problem + ?Sized> Problem for &P {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn fitness(&self, x: &Genotype) -> Fitness {
        (**self).fitness(x)
    }

    fn peaks(&self, x: &Genotype) -> Vec<PeakLabel> {
        (**self).peaks(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PeakLabel {
    AllOnes,
    AllZeros,
    GlobalPeak,
    LeftPeak,
    DesignatedOptimum,
    /// Off-branch maximum `y = 1^k` at the branch with `i` trailing ones.
    BranchOptimum(usize),
    RidgeEnd,
    Opt,
    Loc,
}

impl fmt::Display for PeakLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PeakLabel::AllOnes => f.write_str("AllOnes"),
            PeakLabel::AllZeros => f.write_str("AllZeros"),
            PeakLabel::GlobalPeak => f.write_str("GlobalPeak"),
            PeakLabel::LeftPeak => f.write_str("LeftPeak"),
            PeakLabel::DesignatedOptimum => f.write_str("DesignatedOptimum"),
            PeakLabel::BranchOptimum(i) => write!(f, "BranchOptimum({i})"),
            PeakLabel::RidgeEnd => f.write_str("RidgeEnd"),
            PeakLabel::Opt => f.write_str("OPT"),
            PeakLabel::Loc => f.write_str("LOC"),
        }
    }
}

/// TwoMax, optionally truncated at left-branch height `k`.
///
/// Values are `|n/2 - |x|_1|`. For odd `n` every value is doubled
/// (`|n - 2|x|_1|`) so that fitness stays integral; the ordering is unchanged.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoMaxProblem {
    n: usize,
    truncation: Option<usize>,
}

impl TwoMaxProblem {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(n));
        }
        Ok(TwoMaxProblem {
            n,
            truncation: None,
        })
    }

    /// TruncatedTwoMax_k. `k = n/2` reproduces TwoMax values.
    pub fn truncated(n: usize, k: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(n));
        }
        if k > n / 2 {
            return Err(Error::InvalidParameter(format!(
                "truncation height {k} exceeds n/2 = {}",
                n / 2
            )));
        }
        Ok(TwoMaxProblem {
            n,
            truncation: Some(k),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn truncation(&self) -> Option<usize> {
        self.truncation
    }

    pub fn is_truncated(&self) -> bool {
        self.truncation.is_some()
    }

    /// Value scale: 1 for even `n`, 2 for odd `n`.
    pub fn scale(&self) -> i64 {
        if self.n.is_multiple_of(2) {
            1
        } else {
            2
        }
    }

    /// Fitness as a function of the number of ones.
    #[inline]
    pub fn value_of_weight(&self, ones: usize) -> Fitness {
        let doubled = (self.n as i64 - 2 * ones as i64).abs();
        if let Some(k) = self.truncation {
            if 2 * ones + 2 * k < self.n {
                return Fitness(0);
            }
        }
        Fitness(if self.n.is_multiple_of(2) {
            doubled / 2
        } else {
            doubled
        })
    }

    /// Number of ones of the left peak: 0 for TwoMax, the truncation
    /// plateau `n/2 - k` (rounded up for odd `n`) otherwise.
    pub fn left_peak_weight(&self) -> usize {
        match self.truncation {
            None => 0,
            Some(k) => (self.n - 2 * k).div_ceil(2),
        }
    }

    /// Fitness of the left peak.
    pub fn left_peak_value(&self) -> Fitness {
        self.value_of_weight(self.left_peak_weight())
    }

    /// Fitness of the right (all-ones) peak.
    pub fn right_peak_value(&self) -> Fitness {
        self.value_of_weight(self.n)
    }

    /// Peak label for a point with `ones` one bits.
    #[inline]
    pub fn peak_of_weight(&self, ones: usize) -> Option<PeakLabel> {
        match self.truncation {
            None if ones == self.n => Some(PeakLabel::AllOnes),
            None if ones == 0 => Some(PeakLabel::AllZeros),
            None => None,
            Some(_) if ones == self.n => Some(PeakLabel::GlobalPeak),
            Some(_) if ones == self.left_peak_weight() => Some(PeakLabel::LeftPeak),
            Some(_) => None,
        }
    }

    /// Whether `label` names this problem's left-hand peak.
    pub fn is_left(&self, label: PeakLabel) -> bool {
        matches!(label, PeakLabel::AllZeros | PeakLabel::LeftPeak)
    }
}

impl Problem for TwoMaxProblem {
    fn dimension(&self) -> usize {
        self.n
    }

    #[inline]
    fn fitness(&self, x: &Genotype) -> Fitness {
        self.value_of_weight(x.hamming_weight())
    }

    fn peaks(&self, x: &Genotype) -> Vec<PeakLabel> {
        self.peak_of_weight(x.hamming_weight())
            .into_iter()
            .collect()
    }
}

/// `|n/2 - |x|_1|` for even `n` (doubled for odd `n`).
pub fn two_max(x: &Genotype) -> Fitness {
    TwoMaxProblem::new(x.len())
        .expect("non-empty genotype")
        .fitness(x)
}

/// TwoMax if `|x|_1 >= n/2 - k`, else 0.
pub fn truncated_two_max(x: &Genotype, k: usize) -> Result<Fitness> {
    Ok(TwoMaxProblem::truncated(x.len(), k)?.fitness(x))
}

/// Inner ridge function on the bits `start..start+len` of `x`.
///
/// Ridge points `0^(L-i) 1^i` and off-branch points `y 0^(L-i-k) 1^i`
/// (`i ∈ {k, 2k, …, (k-2)k}`, `k = ⌊√L⌋`, `y` arbitrary of length `k`)
/// score `(i+3)·N + |x|_1`; everything else scores 0.
fn ridge_g_range(x: &Genotype, start: usize, len: usize, scale: i64) -> Fitness {
    let end = start + len;
    let ones = x.count_ones_in(start, end);
    let trailing = x.trailing_ones_within(start, end);
    let k = isqrt(len);
    // Ridge point: all ones are trailing.
    if ones == trailing {
        return Fitness((trailing as i64 + 3) * scale + ones as i64);
    }
    // Off-branch point: trailing block is a branch index and only the first
    // k bits carry additional ones.
    let i = trailing;
    if k >= 3
        && i.is_multiple_of(k)
        && i >= k
        && i <= (k - 2) * k
        && x.count_ones_in(start + k, end) == i
    {
        return Fitness((i as i64 + 3) * scale + ones as i64);
    }
    Fitness(0)
}

/// Inner ridge function `g` on a standalone genotype of length `L >= 9`,
/// scaled by `scale`.
pub fn ridge_g(x: &Genotype, scale: i64) -> Result<Fitness> {
    if x.len() < 9 {
        return Err(Error::InvalidParameter(format!(
            "ridge function needs length >= 9, got {}",
            x.len()
        )));
    }
    Ok(ridge_g_range(x, 0, x.len(), scale))
}

pub(crate) fn isqrt(v: usize) -> usize {
    let mut r = (v as f64).sqrt() as usize;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    r
}

pub(crate) fn icbrt(v: usize) -> usize {
    let mut r = (v as f64).cbrt() as usize;
    while r > 0 && r * r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) * (r + 1) <= v {
        r += 1;
    }
    r
}

/// RidgeWithBranches_j over `n = 2k²` bits.
///
/// The embedded ridge function is scaled by the full dimension `n`, which
/// keeps the step from the prefix gradient (`2n - 1`) onto the first ridge
/// point (`3n`) an improvement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RidgeProblem {
    k: usize,
    j: usize,
    scale: RidgeScale,
}

/// Scale constant used inside the embedded ridge function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RidgeScale {
    /// Full problem dimension `n` (default).
    Dimension,
    /// The suffix length `m''` the ridge function is evaluated on.
    Suffix,
}

impl RidgeProblem {
    /// RidgeWithBranches_j. `j = k - 1` places the optimum at the ridge end.
    pub fn new(k: usize, j: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::InvalidParameter(format!(
                "ridge k must be >= 3, got {k}"
            )));
        }
        if j == 0 || j >= k {
            return Err(Error::InvalidParameter(format!(
                "branch index j must lie in [1, {}], got {j}",
                k - 1
            )));
        }
        Ok(RidgeProblem {
            k,
            j,
            scale: RidgeScale::Dimension,
        })
    }

    /// Plain RidgeWithBranches (its optimum is the ridge end).
    pub fn plain(k: usize) -> Result<Self> {
        Self::new(k, k.saturating_sub(1).max(1))
    }

    pub fn with_scale(mut self, scale: RidgeScale) -> Self {
        self.scale = scale;
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn j(&self) -> usize {
        self.j
    }

    /// Half length `m' = m'' = k²`.
    pub fn half(&self) -> usize {
        self.k * self.k
    }

    pub fn n(&self) -> usize {
        2 * self.half()
    }

    fn g_scale(&self) -> i64 {
        match self.scale {
            RidgeScale::Dimension => self.n() as i64,
            RidgeScale::Suffix => self.half() as i64,
        }
    }

    /// RidgeWithBranches without the designated optimum.
    pub fn base_value(&self, x: &Genotype) -> Fitness {
        let (m, n) = (self.half(), self.n() as i64);
        let prefix_ones = x.count_ones_in(0, m);
        if prefix_ones == 0 {
            return ridge_g_range(x, m, m, self.g_scale());
        }
        let suffix_ones = x.count_ones_in(m, 2 * m);
        if suffix_ones == 0 {
            Fitness(2 * n - prefix_ones as i64)
        } else {
            Fitness(n - suffix_ones as i64)
        }
    }

    /// Whether `x = 0^m' 1^k 0^(m'-(j+1)k) 1^(jk)`.
    pub fn is_designated_optimum(&self, x: &Genotype) -> bool {
        let (m, k, j) = (self.half(), self.k, self.j);
        x.count_ones_in(0, m) == 0
            && x.count_ones_in(m, m + k) == k
            && x.count_ones_in(m + k, 2 * m - j * k) == 0
            && x.count_ones_in(2 * m - j * k, 2 * m) == j * k
    }

    /// Value assigned to the designated optimum, `n³`.
    pub fn optimum_value(&self) -> Fitness {
        Fitness((self.n() as i64).pow(3))
    }
}

impl Problem for RidgeProblem {
    fn dimension(&self) -> usize {
        self.n()
    }

    fn fitness(&self, x: &Genotype) -> Fitness {
        if self.is_designated_optimum(x) {
            self.optimum_value()
        } else {
            self.base_value(x)
        }
    }

    fn peaks(&self, x: &Genotype) -> Vec<PeakLabel> {
        let (m, k) = (self.half(), self.k);
        let mut labels = Vec::new();
        if self.is_designated_optimum(x) {
            labels.push(PeakLabel::DesignatedOptimum);
        }
        if x.count_ones_in(0, m) == 0 {
            let suffix = x.count_ones_in(m, 2 * m);
            if suffix == m {
                labels.push(PeakLabel::RidgeEnd);
            } else {
                let i = x.trailing_ones();
                if i.is_multiple_of(k)
                    && i >= k
                    && i + 2 * k <= m
                    && x.count_ones_in(m, m + k) == k
                    && suffix == i + k
                {
                    labels.push(PeakLabel::BranchOptimum(i));
                }
            }
        }
        labels
    }
}

/// RidgeWithBranches(x) for the `k` implied by `n = 2k²`.
pub fn ridge_with_branches(x: &Genotype) -> Result<Fitness> {
    let k = isqrt(x.len() / 2);
    if 2 * k * k != x.len() {
        return Err(Error::InvalidParameter(format!(
            "length {} is not 2k²",
            x.len()
        )));
    }
    Ok(RidgeProblem::plain(k)?.base_value(x))
}

/// RidgeWithBranches_j(x).
pub fn ridge_with_branches_j(x: &Genotype, j: usize) -> Result<Fitness> {
    let k = isqrt(x.len() / 2);
    if 2 * k * k != x.len() {
        return Err(Error::InvalidParameter(format!(
            "length {} is not 2k²",
            x.len()
        )));
    }
    Ok(RidgeProblem::new(k, j)?.fitness(x))
}

/// TwoGradients: a LeadingOnes suffix of length `ℓ = ⌊n^(1/3)⌋` weighted by
/// `n²`, and a OneMax prefix of length `m = n - ℓ` that turns into a trap
/// above `⌊2m/3⌋` prefix ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoGradientsProblem {
    n: usize,
    suffix: usize,
    prefix: usize,
    threshold: usize,
}

impl TwoGradientsProblem {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "TwoGradients needs n >= 2, got {n}"
            )));
        }
        let suffix = icbrt(n);
        let prefix = n - suffix;
        Ok(TwoGradientsProblem {
            n,
            suffix,
            prefix,
            threshold: 2 * prefix / 3,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Suffix length `ℓ`.
    pub fn suffix_len(&self) -> usize {
        self.suffix
    }

    /// Prefix length `m`.
    pub fn prefix_len(&self) -> usize {
        self.prefix
    }

    /// Prefix-ones threshold `⌊2m/3⌋`.
    pub fn threshold(&self) -> usize {
        self.threshold
    }

    /// Whether `2m/3` is integral.
    pub fn threshold_exact(&self) -> bool {
        self.prefix.is_multiple_of(3)
    }

    /// Leading suffix ones.
    #[inline]
    pub fn lso(&self, x: &Genotype) -> usize {
        lso(x, self.suffix)
    }

    /// Prefix ones.
    #[inline]
    pub fn po(&self, x: &Genotype) -> usize {
        x.count_ones_in(0, self.prefix)
    }

    fn n2(&self) -> i64 {
        (self.n as i64) * (self.n as i64)
    }

    pub fn value(&self, lso: usize, po: usize) -> Fitness {
        if po <= self.threshold {
            Fitness(self.n2() * lso as i64 + po as i64)
        } else {
            Fitness(self.n2() * self.suffix as i64 - self.prefix as i64 - 1 + po as i64)
        }
    }

    /// Fitness of every global optimum.
    pub fn opt_value(&self) -> Fitness {
        self.value(self.suffix, self.threshold)
    }

    /// Fitness of every local-trap point.
    pub fn loc_value(&self) -> Fitness {
        self.value(0, self.prefix)
    }
}

impl Problem for TwoGradientsProblem {
    fn dimension(&self) -> usize {
        self.n
    }

    #[inline]
    fn fitness(&self, x: &Genotype) -> Fitness {
        self.value(self.lso(x), self.po(x))
    }

    fn peaks(&self, x: &Genotype) -> Vec<PeakLabel> {
        let po = self.po(x);
        if po == self.prefix {
            vec![PeakLabel::Loc]
        } else if po == self.threshold && self.lso(x) == self.suffix {
            vec![PeakLabel::Opt]
        } else {
            Vec::new()
        }
    }
}

/// Number of leading ones in the last `ell` bits of `x`.
pub fn lso(x: &Genotype, ell: usize) -> usize {
    let ell = ell.min(x.len());
    x.ones_run_from(x.len() - ell, ell)
}

/// TwoGradients(x) for the dimension `x.len()`.
pub fn two_gradients(x: &Genotype) -> Result<Fitness> {
    Ok(TwoGradientsProblem::new(x.len())?.fitness(x))
}

impl Genotype {
    /// Trailing ones of the sub-range `start..end`.
    pub(crate) fn trailing_ones_within(&self, start: usize, end: usize) -> usize {
        if end == self.len() {
            return self.trailing_ones().min(end - start);
        }
        let mut count = 0;
        let mut i = end;
        while i > start && self.get(i - 1) {
            count += 1;
            i -= 1;
        }
        count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> Genotype {
        s.parse().unwrap()
    }

    fn rep(c: char, count: usize) -> String {
        std::iter::repeat_n(c, count).collect()
    }

    fn with_weight(n: usize, ones: usize) -> Genotype {
        let mut x = Genotype::zeros(n).unwrap();
        for i in 0..ones {
            x.set(i, true);
        }
        x
    }

    #[test]
    fn two_max_examples() {
        assert_eq!(two_max(&g("1111")), Fitness(2));
        assert_eq!(two_max(&g("0011")), Fitness(0));
        assert_eq!(two_max(&with_weight(200, 150)), Fitness(50));
    }

    #[test]
    fn odd_dimension_doubles_values() {
        let p = TwoMaxProblem::new(5).unwrap();
        assert_eq!(p.value_of_weight(5), Fitness(5));
        assert_eq!(p.value_of_weight(2), Fitness(1));
        assert_eq!(p.value_of_weight(3), Fitness(1));
    }

    #[test]
    fn truncated_examples() {
        assert_eq!(
            truncated_two_max(&with_weight(200, 20), 80).unwrap(),
            Fitness(80)
        );
        assert_eq!(
            truncated_two_max(&with_weight(200, 19), 80).unwrap(),
            Fitness(0)
        );
        assert!(truncated_two_max(&with_weight(10, 1), 6).is_err());
    }

    #[test]
    fn truncation_at_half_is_two_max() {
        let n = 10;
        for code in 0u32..(1 << n) {
            let bits: Vec<bool> = (0..n).map(|i| code >> i & 1 == 1).collect();
            let x = Genotype::from_bits(&bits).unwrap();
            assert_eq!(truncated_two_max(&x, n / 2).unwrap(), two_max(&x));
        }
    }

    #[test]
    fn ridge_g_examples() {
        assert_eq!(ridge_g(&g(&rep('0', 16)), 16).unwrap(), Fitness(48));
        let branch = format!("{}{}", rep('0', 12), rep('1', 4));
        assert_eq!(ridge_g(&g(&branch), 16).unwrap(), Fitness(116));
        let off = format!("{}{}{}", rep('1', 4), rep('0', 8), rep('1', 4));
        assert_eq!(ridge_g(&g(&off), 16).unwrap(), Fitness(120));
        assert!(ridge_g(&g("0000"), 4).is_err());
    }

    #[test]
    fn ridge_examples_k3() {
        assert_eq!(ridge_with_branches(&g(&rep('1', 18))).unwrap(), Fitness(9));
        let x = format!("{}{}", rep('1', 9), rep('0', 9));
        assert_eq!(ridge_with_branches(&g(&x)).unwrap(), Fitness(27));
        assert_eq!(ridge_with_branches(&g(&rep('0', 18))).unwrap(), Fitness(54));
    }

    #[test]
    fn ridge_j_examples_k3() {
        let opt1 = format!("{}{}{}{}", rep('0', 9), "111", "000", "111");
        assert_eq!(ridge_with_branches_j(&g(&opt1), 1).unwrap(), Fitness(5832));
        let opt2 = format!("{}{}", rep('0', 9), rep('1', 9));
        assert_eq!(ridge_with_branches_j(&g(&opt2), 2).unwrap(), Fitness(5832));
        assert_eq!(
            ridge_with_branches_j(&g(&rep('0', 18)), 1).unwrap(),
            Fitness(54)
        );
        assert!(ridge_with_branches_j(&g(&rep('0', 18)), 3).is_err());
        assert!(ridge_with_branches_j(&g(&rep('0', 18)), 0).is_err());
    }

    #[test]
    fn ridge_peak_labels() {
        let p = RidgeProblem::new(4, 1).unwrap();
        let end = format!("{}{}", rep('0', 16), rep('1', 16));
        assert_eq!(p.peaks(&g(&end)), vec![PeakLabel::RidgeEnd]);
        let designated = format!(
            "{}{}{}{}",
            rep('0', 16),
            rep('1', 4),
            rep('0', 8),
            rep('1', 4)
        );
        assert_eq!(
            p.peaks(&g(&designated)),
            vec![PeakLabel::DesignatedOptimum, PeakLabel::BranchOptimum(4)]
        );
        let branch8 = format!(
            "{}{}{}{}",
            rep('0', 16),
            rep('1', 4),
            rep('0', 4),
            rep('1', 8)
        );
        assert_eq!(p.peaks(&g(&branch8)), vec![PeakLabel::BranchOptimum(8)]);
        let plain = RidgeProblem::plain(4).unwrap();
        assert_eq!(
            plain.peaks(&g(&end)),
            vec![PeakLabel::DesignatedOptimum, PeakLabel::RidgeEnd]
        );
    }

    #[test]
    fn lso_examples() {
        assert_eq!(lso(&g("000111"), 3), 3);
        assert_eq!(lso(&g("000011"), 3), 0);
        assert_eq!(lso(&g("000101"), 3), 1);
    }

    #[test]
    fn two_gradients_examples() {
        let p = TwoGradientsProblem::new(1000).unwrap();
        assert_eq!(
            (p.suffix_len(), p.prefix_len(), p.threshold()),
            (10, 990, 660)
        );
        assert!(p.threshold_exact());
        let mut opt = Genotype::zeros(1000).unwrap();
        (0..660).for_each(|i| opt.set(i, true));
        (990..1000).for_each(|i| opt.set(i, true));
        assert_eq!(p.fitness(&opt), Fitness(10_000_660));
        assert_eq!(p.peaks(&opt), vec![PeakLabel::Opt]);
        let mut loc = Genotype::zeros(1000).unwrap();
        (0..990).for_each(|i| loc.set(i, true));
        assert_eq!(p.fitness(&loc), Fitness(9_999_999));
        let all = Genotype::ones(1000).unwrap();
        assert_eq!(p.fitness(&all), Fitness(9_999_999));
        assert_eq!(p.peaks(&all), vec![PeakLabel::Loc]);
        assert_eq!(p.fitness(&Genotype::zeros(1000).unwrap()), Fitness(0));
        assert_eq!(p.opt_value(), Fitness(10_000_660));
        assert_eq!(p.loc_value(), Fitness(9_999_999));
    }

    #[test]
    fn twomax_peak_labels() {
        let p = TwoMaxProblem::new(4).unwrap();
        assert_eq!(p.peaks(&g("1111")), vec![PeakLabel::AllOnes]);
        assert_eq!(p.peaks(&g("0000")), vec![PeakLabel::AllZeros]);
        assert!(p.peaks(&g("0110")).is_empty());
        let t = TwoMaxProblem::truncated(200, 80).unwrap();
        assert_eq!(t.peaks(&with_weight(200, 20)), vec![PeakLabel::LeftPeak]);
        assert_eq!(t.peaks(&with_weight(200, 200)), vec![PeakLabel::GlobalPeak]);
        assert!(t.peaks(&with_weight(200, 180)).is_empty());
    }

    #[test]
    fn integer_roots() {
        assert_eq!(icbrt(1000), 10);
        assert_eq!(icbrt(999), 9);
        assert_eq!(icbrt(30), 3);
        assert_eq!(isqrt(16), 4);
        assert_eq!(isqrt(15), 3);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use proptest::sample::subsequence;

        fn from_bits(bits: &[bool]) -> Genotype {
            Genotype::from_bits(bits).unwrap()
        }

        /// A TwoGradients point with ones at `prefix_ones` and a suffix of
        /// `lso` leading ones followed by a zero when room is left.
        fn tg_point(p: &TwoGradientsProblem, prefix_ones: &[usize], lso: usize) -> Genotype {
            let mut bits = vec![false; p.n()];
            for &i in prefix_ones {
                bits[i] = true;
            }
            for b in &mut bits[p.prefix_len()..p.prefix_len() + lso] {
                *b = true;
            }
            from_bits(&bits)
        }

        fn tg_case() -> impl Strategy<Value = (usize, Vec<usize>, usize, Vec<usize>, usize)> {
            (9usize..400).prop_flat_map(|n| {
                let p = TwoGradientsProblem::new(n).unwrap();
                let (m, thr, l) = (p.prefix_len(), p.threshold(), p.suffix_len());
                let idx: Vec<usize> = (0..m).collect();
                (
                    Just(n),
                    (thr + 1..=m).prop_flat_map({
                        let idx = idx.clone();
                        move |c| subsequence(idx.clone(), c)
                    }),
                    0..=l,
                    (0..=thr).prop_flat_map(move |c| subsequence(idx.clone(), c)),
                    0..l,
                )
            })
        }

        proptest! {
            #[test]
            fn two_max_is_symmetric(bits in proptest::collection::vec(any::<bool>(), 1..300)) {
                let p = TwoMaxProblem::new(bits.len()).unwrap();
                let x = from_bits(&bits);
                prop_assert_eq!(p.fitness(&x), p.fitness(&x.complement()));
            }

            #[test]
            fn trap_side_beats_gradient_side((n, hi, lso_hi, lo, lso_lo) in tg_case()) {
                let p = TwoGradientsProblem::new(n).unwrap();
                let x = tg_point(&p, &hi, lso_hi);
                let y = tg_point(&p, &lo, lso_lo);
                prop_assert!(p.po(&x) > p.threshold() && p.lso(&y) < p.suffix_len());
                prop_assert!(p.fitness(&x) > p.fitness(&y));
            }

            #[test]
            fn optimum_beats_trap(n in 2usize..100_000) {
                let p = TwoGradientsProblem::new(n).unwrap();
                prop_assert!(p.suffix_len() >= 1);
                prop_assert!(p.opt_value() > p.loc_value());
                let n2 = (n as i64) * (n as i64);
                prop_assert_eq!(p.loc_value(), Fitness(n2 * p.suffix_len() as i64 - 1));
            }

            #[test]
            fn ridge_path_strictly_increases(k in 3usize..7, seed_bits in proptest::collection::vec(any::<bool>(), 98)) {
                let p = RidgeProblem::plain(k).unwrap();
                let m = p.half();
                let mut bits: Vec<bool> = seed_bits.iter().cycle().take(2 * m).copied().collect();
                bits[0] = true;
                bits[m] = true;
                let mut path = vec![from_bits(&bits)];
                for i in (m..2 * m).chain(0..m) {
                    if bits[i] {
                        bits[i] = false;
                        path.push(from_bits(&bits));
                    }
                }
                for i in (m..2 * m).rev() {
                    bits[i] = true;
                    path.push(from_bits(&bits));
                }
                for w in path.windows(2) {
                    prop_assert!(p.base_value(&w[0]) < p.base_value(&w[1]));
                }
            }

            #[test]
            fn designated_optimum_dominates(k in 3usize..6, j in 1usize..5, suffix in proptest::collection::vec(any::<bool>(), 50), ridge in 0usize..50, prefix_one in any::<bool>()) {
                prop_assume!(j < k);
                let p = RidgeProblem::new(k, j).unwrap();
                let m = p.half();
                let mut bits = vec![false; 2 * m];
                bits[0] = prefix_one;
                bits[m..].copy_from_slice(&suffix[..m]);
                let random = from_bits(&bits);
                let mut on_ridge = vec![false; 2 * m];
                for b in &mut on_ridge[m..m + ridge.min(m)] {
                    *b = true;
                }
                for x in [random, from_bits(&on_ridge)] {
                    if !p.is_designated_optimum(&x) {
                        prop_assert!(p.fitness(&x) < p.optimum_value());
                    }
                }
            }
        }
    }
}
