//! Paired comparisons: Wilcoxon signed-rank test, Holm–Bonferroni correction
//! and a two-proportion z-test for success rates.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest number of non-zero differences for which the exact null
/// distribution is used.
pub const EXACT_CUTOFF: usize = 25;

/// Matched `(a, b)` observations, one per paired run.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedSample {
    pairs: Vec<(f64, f64)>,
}

impl PairedSample {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidParameter("paired sample is empty".into()));
        }
        if pairs.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidParameter(
                "paired sample contains a non-finite value".into(),
            ));
        }
        Ok(PairedSample { pairs })
    }

    pub fn from_sides(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        Self::new(a.iter().copied().zip(b.iter().copied()).collect())
    }

    /// Paired sample from the differences `a - b` directly.
    pub fn from_differences(d: &[f64]) -> Result<Self> {
        Self::new(d.iter().map(|&x| (x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn swapped(&self) -> PairedSample {
        PairedSample {
            pairs: self.pairs.iter().map(|&(a, b)| (b, a)).collect(),
        }
    }
}

/// Which direction of a metric counts as better.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    LowerIsBetter,
    HigherIsBetter,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PMethod {
    Exact,
    Normal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestResult {
    /// `min(T+, T-)`.
    pub w: f64,
    pub t_plus: f64,
    pub t_minus: f64,
    /// Standardized `T+`, continuity-corrected toward the mean.
    pub z: f64,
    /// `P(T+ <= observed)` under the null.
    pub p_lower: f64,
    /// `P(T+ >= observed)` under the null.
    pub p_upper: f64,
    /// `min(p_lower, p_upper)`.
    pub p_one_sided: f64,
    pub p_two_sided: f64,
    pub n_pairs: usize,
    /// Pairs with a non-zero difference.
    pub n_effective: usize,
    pub method: PMethod,
}

impl TestResult {
    /// One-sided p-value for "side a is better than side b".
    pub fn p_a_better(&self, orientation: Orientation) -> f64 {
        match orientation {
            Orientation::LowerIsBetter => self.p_lower,
            Orientation::HigherIsBetter => self.p_upper,
        }
    }
}

/// Average ranks (1-based) of `values`, which must be sorted ascending.
/// Also returns the tie groups' sizes.
fn average_ranks(sorted: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut ranks = vec![0.0; sorted.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let avg = (i + 1 + j) as f64 / 2.0;
        ranks[i..j].fill(avg);
        ties.push(j - i);
        i = j;
    }
    (ranks, ties)
}

/// Exact lower and upper tail of `T+` given the (average) ranks.
///
/// Every rank is a multiple of 1/2, so the null distribution is computed by a
/// subset-sum count over doubled integer ranks; this is the same as
/// enumerating all `2^n` sign patterns.
fn exact_tails(ranks: &[f64], t_plus: f64) -> (f64, f64) {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let observed = (2.0 * t_plus).round() as usize;
    let all = (1u64 << ranks.len()) as f64;
    let lower: u64 = counts[..=observed].iter().sum();
    let upper: u64 = counts[observed..].iter().sum();
    (lower as f64 / all, upper as f64 / all)
}

/// Wilcoxon signed-rank test on `a - b`.
///
/// Zero differences are dropped. Up to [`EXACT_CUTOFF`] remaining pairs the
/// p-values are exact; beyond that a normal approximation with tie-corrected
/// variance and continuity correction is used.
pub fn wilcoxon_signed_rank(sample: &PairedSample) -> Result<TestResult> {
    let mut diffs: Vec<f64> = sample
        .pairs
        .iter()
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Err(Error::DegenerateSample);
    }
    diffs.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = average_ranks(&magnitudes);
    let t_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .fold(0.0, |acc, (_, r)| acc + r);
    let n = diffs.len();
    let nf = n as f64;
    let t_total = nf * (nf + 1.0) / 2.0;
    let t_minus = t_total - t_plus;

    let mean = t_total / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    let sd = var.sqrt();
    let dev = t_plus - mean;
    let z = if sd > 0.0 && dev.abs() > 0.5 {
        (dev - 0.5 * dev.signum()) / sd
    } else {
        0.0
    };

    let (p_lower, p_upper, method) = if n <= EXACT_CUTOFF {
        let (lo, up) = exact_tails(&ranks, t_plus);
        (lo, up, PMethod::Exact)
    } else {
        let std = Normal::standard();
        let lo = std.cdf((t_plus - mean + 0.5) / sd);
        let up = std.sf((t_plus - mean - 0.5) / sd);
        (lo.min(1.0), up.min(1.0), PMethod::Normal)
    };
    let p_one_sided = p_lower.min(p_upper);
    Ok(TestResult {
        w: t_plus.min(t_minus),
        t_plus,
        t_minus,
        z,
        p_lower,
        p_upper,
        p_one_sided,
        p_two_sided: (2.0 * p_one_sided).min(1.0),
        n_pairs: sample.len(),
        n_effective: n,
        method,
    })
}

/// Holm–Bonferroni step-down procedure. Returns reject decisions in input
/// order.
pub fn holm_bonferroni(p_values: &[f64], alpha: f64) -> Result<Vec<bool>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha {alpha} outside (0, 1)"
        )));
    }
    if let Some(p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter(format!(
            "p-value {p} outside [0, 1]"
        )));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));
    let mut reject = vec![false; m];
    for (i, &idx) in order.iter().enumerate() {
        if p_values[idx] <= alpha / (m - i) as f64 {
            reject[idx] = true;
        } else {
            break;
        }
    }
    Ok(reject)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProportionTest {
    pub z: f64,
    /// One-sided p for the alternative "first proportion is lower".
    pub p_less: f64,
    /// One-sided p for the alternative "first proportion is higher".
    pub p_greater: f64,
}

/// Pooled two-proportion z-test of `x1/n1` against `x2/n2`.
pub fn two_proportion_z_test(x1: u64, n1: u64, x2: u64, n2: u64) -> Result<ProportionTest> {
    if n1 == 0 || n2 == 0 || x1 > n1 || x2 > n2 {
        return Err(Error::InvalidParameter(format!(
            "invalid counts {x1}/{n1} and {x2}/{n2}"
        )));
    }
    let (p1, p2) = (x1 as f64 / n1 as f64, x2 as f64 / n2 as f64);
    let pooled = (x1 + x2) as f64 / (n1 + n2) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    if se == 0.0 {
        // Both samples all-success or all-failure: no evidence either way.
        return Ok(ProportionTest {
            z: 0.0,
            p_less: 0.5,
            p_greater: 0.5,
        });
    }
    let z = (p1 - p2) / se;
    let std = Normal::standard();
    Ok(ProportionTest {
        z,
        p_less: std.cdf(z),
        p_greater: std.sf(z),
    })
}
