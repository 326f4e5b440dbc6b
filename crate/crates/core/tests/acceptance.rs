//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.
//!
//! Pass criterion numbers as arguments to run a subset:
//! `cargo test -p ssea --test acceptance -- 3 11`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_bigint::BigInt;

use ssea::benchmarks::{
    ridge_g, ridge_with_branches, ridge_with_branches_j, truncated_two_max, two_gradients, two_max,
};
use ssea::harness::{
    default_twomax_budget, run_maxsat, run_twogradients, run_twomax, Outcome, TIMEOUT_LIMIT,
};
use ssea::instances::{load_cnf, load_mknap, mkp_fitness, MkpInstance};
use ssea::operators::select_parent;
use ssea::stats::{holm_bonferroni, two_proportion_z_test, wilcoxon_signed_rank, PairedSample};
use ssea::{
    derive_seed, EngineConfig, Fitness, Genotype, IterationEvent, MutationPolicy, Population,
    RngStream, SelectionPolicy, TwoGradientsProblem, TwoMaxProblem,
};

type Check = Result<String, String>;

fn seed_for(tag: &str, run: u64) -> u64 {
    derive_seed(0x5eed_ac1d, ssea::bitcore::fnv1a(tag.as_bytes()), run)
}

fn bits(n: usize, mask: u64) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// Brute-force transcriptions of the benchmark definitions. Bit 0 is x_1.

fn ones(x: &[bool]) -> usize {
    x.iter().filter(|&&b| b).count()
}

/// |n/2 - |x|_1|, doubled when n is odd so the value stays integral.
fn oracle_two_max(x: &[bool]) -> i64 {
    let n = x.len() as f64;
    let v = (n / 2.0 - ones(x) as f64).abs();
    if x.len().is_multiple_of(2) {
        v as i64
    } else {
        (2.0 * v) as i64
    }
}

fn oracle_truncated(x: &[bool], k: usize) -> i64 {
    if ones(x) as f64 >= x.len() as f64 / 2.0 - k as f64 {
        oracle_two_max(x)
    } else {
        0
    }
}

fn is_pattern(x: &[bool], pattern: &[Option<bool>]) -> bool {
    x.len() == pattern.len()
        && x.iter()
            .zip(pattern)
            .all(|(b, p)| p.is_none_or(|p| p == *b))
}

fn oracle_g(x: &[bool], scale: i64) -> i64 {
    let len = x.len();
    let mut k = 0;
    while (k + 1) * (k + 1) <= len {
        k += 1;
    }
    let value = |i: usize| (i as i64 + 3) * scale + ones(x) as i64;
    for i in 0..=len {
        let ridge: Vec<Option<bool>> = (0..len).map(|p| Some(p >= len - i)).collect();
        if is_pattern(x, &ridge) {
            return value(i);
        }
    }
    for b in 1..=k.saturating_sub(2) {
        let i = b * k;
        let branch: Vec<Option<bool>> = (0..len)
            .map(|p| if p < k { None } else { Some(p >= len - i) })
            .collect();
        if is_pattern(x, &branch) {
            return value(i);
        }
    }
    0
}

fn oracle_ridge(x: &[bool]) -> i64 {
    let n = x.len();
    let (m1, m2) = (n / 2, n.div_ceil(2));
    let (head, tail) = (&x[..m1], &x[n - m2..]);
    if ones(head) == 0 {
        oracle_g(tail, n as i64)
    } else if ones(tail) == 0 {
        2 * n as i64 - ones(head) as i64
    } else {
        n as i64 - ones(tail) as i64
    }
}

fn oracle_ridge_j(x: &[bool], k: usize, j: usize) -> i64 {
    let m = k * k;
    let optimum: Vec<Option<bool>> = (0..2 * m)
        .map(|p| {
            Some(if p < m {
                false
            } else if p < m + k {
                true
            } else {
                p >= 2 * m - j * k
            })
        })
        .collect();
    if is_pattern(x, &optimum) {
        (2 * m as i64).pow(3)
    } else {
        oracle_ridge(x)
    }
}

fn oracle_two_gradients(x: &[bool]) -> i64 {
    let n = x.len();
    let mut ell = 0;
    while (ell + 1) * (ell + 1) * (ell + 1) <= n {
        ell += 1;
    }
    let m = n - ell;
    let lso: usize = (1..=ell)
        .map(|i| {
            (1..=i)
                .map(|j| x[n - ell + j - 1] as usize)
                .product::<usize>()
        })
        .sum();
    let po = ones(&x[..m]);
    let n2 = (n * n) as i64;
    if 3 * po <= 2 * m {
        n2 * lso as i64 + po as i64
    } else {
        n2 * ell as i64 - m as i64 - 1 + po as i64
    }
}

fn oracle_mkp(x: &[bool], p: &[i64], r: &[Vec<i64>], b: &[i64]) -> BigInt {
    let w = BigInt::from(1) + p.iter().map(|&v| BigInt::from(v)).sum::<BigInt>();
    let reward: BigInt = p
        .iter()
        .zip(x)
        .filter(|(_, &s)| s)
        .map(|(&v, _)| BigInt::from(v))
        .sum();
    let mut penalty = BigInt::from(0);
    for (row, &cap) in r.iter().zip(b) {
        let load: BigInt = row
            .iter()
            .zip(x)
            .filter(|(_, &s)| s)
            .map(|(&v, _)| BigInt::from(v))
            .sum();
        let slack = BigInt::from(cap) - load;
        if slack < BigInt::from(0) {
            penalty += slack;
        }
    }
    reward + w * penalty
}

type Criterion = (u32, &'static str, fn() -> Check);

fn criterion_1() -> Check {
    let mut checked = 0u64;
    let mismatch = |what: &str, x: &[bool], got: i64, want: i64| {
        Err(format!(
            "{what} at {:?}: {got} != {want}",
            Genotype::from_bits(x).unwrap()
        ))
    };
    for n in 1..=14usize {
        for mask in 0..1u64 << n {
            let x = bits(n, mask);
            let g = Genotype::from_bits(&x).unwrap();
            let (got, want) = (two_max(&g).0, oracle_two_max(&x));
            if got != want {
                return mismatch("two_max", &x, got, want);
            }
            for k in 0..=n / 2 {
                let (got, want) = (truncated_two_max(&g, k).unwrap().0, oracle_truncated(&x, k));
                if got != want {
                    return mismatch(&format!("truncated k={k}"), &x, got, want);
                }
            }
            if n >= 2 {
                let (got, want) = (two_gradients(&g).unwrap().0, oracle_two_gradients(&x));
                if got != want {
                    return mismatch("two_gradients", &x, got, want);
                }
            }
            if n >= 9 {
                let (got, want) = (ridge_g(&g, n as i64).unwrap().0, oracle_g(&x, n as i64));
                if got != want {
                    return mismatch("ridge_g", &x, got, want);
                }
            }
            checked += 1;
        }
    }
    // The smallest RidgeWithBranches instance has k = 3, n = 18.
    for mask in 0..1u64 << 18 {
        let x = bits(18, mask);
        let g = Genotype::from_bits(&x).unwrap();
        let (got, want) = (ridge_with_branches(&g).unwrap().0, oracle_ridge(&x));
        if got != want {
            return mismatch("ridge_with_branches", &x, got, want);
        }
        for j in 1..=2 {
            let (got, want) = (
                ridge_with_branches_j(&g, j).unwrap().0,
                oracle_ridge_j(&x, 3, j),
            );
            if got != want {
                return mismatch(&format!("ridge_with_branches_{j}"), &x, got, want);
            }
        }
        checked += 1;
    }
    // MKP with entries large enough that penalties overflow 32 bits.
    let mut rng = RngStream::new(seed_for("mkp-oracle", 0));
    let mut draw = |hi: usize| rng.index(hi) as i64;
    let p: Vec<i64> = (0..12).map(|_| draw(1 << 24)).collect();
    let r: Vec<Vec<i64>> = (0..3)
        .map(|_| (0..12).map(|_| draw(1 << 24)).collect())
        .collect();
    let b: Vec<i64> = r.iter().map(|row| row.iter().sum::<i64>() / 2).collect();
    let inst = MkpInstance::new("oracle", p.clone(), r.clone(), b.clone(), 0).unwrap();
    for mask in 0..1u64 << 12 {
        let x = bits(12, mask);
        let got = mkp_fitness(&inst, &Genotype::from_bits(&x).unwrap())
            .unwrap()
            .0;
        let want = oracle_mkp(&x, &p, &r, &b);
        if BigInt::from(got) != want {
            return Err(format!("mkp at mask {mask:#x}: {got} != {want}"));
        }
        checked += 1;
    }
    Ok(format!("{checked} genotypes match"))
}

fn criterion_2() -> Check {
    let p = TwoGradientsProblem::new(1000).unwrap();
    let cfg = EngineConfig::one_plus_one(MutationPolicy::StandardBit, TIMEOUT_LIMIT);
    let mut opt_first = 0;
    for run in 0..100 {
        let rec = run_twogradients(&p, &cfg, seed_for("c2", run), true, None).unwrap();
        if matches!(rec.outcome, Outcome::ConvergedOpt | Outcome::BothFound) {
            opt_first += 1;
        }
    }
    ensure(
        opt_first <= 1,
        format!("{opt_first}/100 runs reached OPT (limit 1)"),
    )
}

fn criterion_3() -> Check {
    let p = TwoGradientsProblem::new(1000).unwrap();
    let cfg = EngineConfig::steady_state(
        2000,
        SelectionPolicy::InverseTournament(10),
        MutationPolicy::StandardBit,
        TIMEOUT_LIMIT,
    );
    let mut both = 0;
    let mut outcomes = Vec::new();
    for run in 0..10 {
        let rec = run_twogradients(&p, &cfg, seed_for("c3", run), true, None).unwrap();
        both += (rec.outcome == Outcome::BothFound) as u32;
        outcomes.push(rec.outcome.to_string());
    }
    ensure(
        both >= 9,
        format!("{both}/10 BothFound ({})", outcomes.join(", ")),
    )
}

fn twomax_both(
    n: usize,
    k: Option<usize>,
    mu: usize,
    sel: SelectionPolicy,
    runs: u64,
    tag: &str,
) -> u64 {
    let p = match k {
        Some(k) => TwoMaxProblem::truncated(n, k).unwrap(),
        None => TwoMaxProblem::new(n).unwrap(),
    };
    let cfg = EngineConfig::steady_state(
        mu,
        sel,
        MutationPolicy::OneBitRls,
        default_twomax_budget(mu, n),
    );
    (0..runs)
        .filter(|&run| {
            run_twomax(&p, &cfg, seed_for(tag, run), None)
                .unwrap()
                .outcome
                == Outcome::BothFound
        })
        .count() as u64
}

fn criterion_4_and_5() -> (Check, Check) {
    let elitist = twomax_both(
        100,
        None,
        1000,
        SelectionPolicy::InverseElitist,
        200,
        "c4-inv-elitist",
    );
    let c4 = ensure(
        elitist as f64 / 200.0 >= 0.85,
        format!("inverse elitist both-peaks {elitist}/200 (need >= 0.85)"),
    );
    let uniform = twomax_both(100, None, 1000, SelectionPolicy::Uniform, 200, "c5-uniform");
    let t = two_proportion_z_test(uniform, 200, elitist, 200).unwrap();
    let c5 = ensure(
        uniform < elitist && t.p_less < 0.01,
        format!(
            "uniform {uniform}/200 vs inverse elitist {elitist}/200, z = {:.3}, p = {:.3e}",
            t.z, t.p_less
        ),
    );
    (c4, c5)
}

fn criterion_6() -> Check {
    let runs = 400;
    let elitist = twomax_both(
        200,
        Some(80),
        4000,
        SelectionPolicy::InverseElitist,
        runs,
        "c6-inv-elitist",
    );
    let tourn = twomax_both(
        200,
        Some(80),
        4000,
        SelectionPolicy::InverseTournament(2),
        runs,
        "c6-inv-tour2",
    );
    let t = two_proportion_z_test(elitist, runs, tourn, runs).unwrap();
    ensure(
        elitist as f64 / runs as f64 <= 0.55 && tourn > elitist && t.p_less < 0.01,
        format!(
            "inverse elitist {elitist}/{runs} (limit 0.55), inverse 2-tournament {tourn}/{runs}, p = {:.3e}",
            t.p_less
        ),
    )
}

fn criterion_7() -> Check {
    let (n, mu) = (50, 200);
    let p = TwoMaxProblem::new(n).unwrap();
    let cfg = EngineConfig::steady_state(
        mu,
        SelectionPolicy::InverseElitist,
        MutationPolicy::StandardBit,
        default_twomax_budget(mu, n),
    );
    let side = |x: &Genotype| ssea::engines::branch_of(x.hamming_weight(), n);
    let (mut up, mut down) = (0u64, 0u64);
    let mut run = 0;
    while up + down < 100_000 {
        let mut trace = |ev: &IterationEvent<'_>| match side(ev.offspring) - side(ev.removed) {
            2 => up += 1,
            -2 => down += 1,
            _ => {}
        };
        run_twomax(&p, &cfg, seed_for("c7", run), Some(&mut trace)).unwrap();
        run += 1;
    }
    let frac = up as f64 / (up + down) as f64;
    ensure(
        (0.48..=0.52).contains(&frac),
        format!(
            "{up} of {} ±2 changes were +2 ({frac:.4}) over {run} runs",
            up + down
        ),
    )
}

fn criterion_8() -> Check {
    let draws = 100_000;
    let member = |f: i64| (Genotype::zeros(1).unwrap(), Fitness(f));
    let pop = Population::new(vec![member(1), member(2), member(3)]).unwrap();
    let mut rng = RngStream::new(seed_for("c8", 0));
    let mins = (0..draws)
        .filter(|_| {
            select_parent(&pop, SelectionPolicy::InverseTournament(2), &mut rng).unwrap() == 0
        })
        .count();
    let f_min = mins as f64 / draws as f64;
    let tied = Population::new(vec![member(1), member(1), member(3)]).unwrap();
    let mut hits = [0usize; 3];
    for _ in 0..draws {
        hits[select_parent(&tied, SelectionPolicy::InverseElitist, &mut rng).unwrap()] += 1;
    }
    let f_first = hits[0] as f64 / draws as f64;
    ensure(
        (f_min - 5.0 / 9.0).abs() <= 0.02 && (f_first - 0.5).abs() <= 0.02 && hits[2] == 0,
        format!("inverse 2-tournament minimum {f_min:.4} (5/9), inverse elitist tie split {f_first:.4} (1/2)"),
    )
}

fn criterion_9() -> Check {
    let r =
        wilcoxon_signed_rank(&PairedSample::from_differences(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap())
            .unwrap();
    let holm = [
        (
            holm_bonferroni(&[0.01, 0.02, 0.04], 0.05).unwrap(),
            vec![true, true, true],
        ),
        (
            holm_bonferroni(&[0.03, 0.04], 0.05).unwrap(),
            vec![false, false],
        ),
        (holm_bonferroni(&[0.009], 0.01).unwrap(), vec![true]),
        (holm_bonferroni(&[], 0.01).unwrap(), vec![]),
    ];
    let holm_ok = holm.iter().all(|(got, want)| got == want);
    ensure(
        r.p_one_sided == 0.03125 && holm_ok,
        format!(
            "Wilcoxon one-sided p = {}, Holm examples {}",
            r.p_one_sided,
            if holm_ok { "match" } else { "differ" }
        ),
    )
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn criterion_10() -> Check {
    let root = data_dir();
    let mut parsed = 0;
    for sub in ["uf20", "uf100", "uf250"] {
        for entry in std::fs::read_dir(root.join(sub)).map_err(|e| e.to_string())? {
            load_cnf(&entry.map_err(|e| e.to_string())?.path()).map_err(|e| e.to_string())?;
            parsed += 1;
        }
    }
    for entry in std::fs::read_dir(root.join("mknap")).map_err(|e| e.to_string())? {
        parsed += load_mknap(&entry.map_err(|e| e.to_string())?.path())
            .map_err(|e| e.to_string())?
            .len();
    }
    let formula = load_cnf(&root.join("uf20/uf20-01.cnf")).map_err(|e| e.to_string())?;
    let selections = [
        SelectionPolicy::Uniform,
        SelectionPolicy::Tournament(2),
        SelectionPolicy::InverseTournament(2),
        SelectionPolicy::InverseElitist,
    ];
    let mut worst = (u64::MAX, String::new());
    for mu in [1, 10, 50] {
        for sel in selections {
            let cfg = EngineConfig::steady_state(mu, sel, MutationPolicy::StandardBit, 1_000_000);
            let tag = format!("c10-{mu}-{sel}");
            let solved = (0..100)
                .filter(|&run| {
                    matches!(
                        run_maxsat(&formula, &cfg, seed_for(&tag, run), None)
                            .unwrap()
                            .outcome,
                        Outcome::SolvedAt(_)
                    )
                })
                .count() as u64;
            if solved < worst.0 {
                worst = (solved, format!("mu={mu} {sel}"));
            }
        }
    }
    ensure(
        worst.0 >= 95,
        format!(
            "{parsed} instances parsed; weakest uf20 configuration {} solved {}/100",
            worst.1, worst.0
        ),
    )
}

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks_statistic(mut a: Vec<u64>, mut b: Vec<u64>) -> f64 {
    a.sort_unstable();
    b.sort_unstable();
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Compares outcome distributions with and without the fast-forward.
/// Configurations are chosen so that a sizeable share of runs reaches the
/// state the fast-forward skips (minimum at LOC, some member above it), yet
/// brute-force waiting times stay affordable. Trapped runs always end in
/// BothFound, so run lengths are compared as well: a KS test at α = 0.001.
fn criterion_11() -> Check {
    let p = TwoGradientsProblem::new(30).unwrap();
    let loc = p.loc_value();
    let runs = 2000;
    let mut worst = (0.0f64, String::new());
    let mut details = Vec::new();
    for (mu, k) in [(10, 4), (10, 5), (10, 6), (6, 6), (16, 5)] {
        let sel = SelectionPolicy::InverseTournament(k);
        let cfg = EngineConfig::steady_state(mu, sel, MutationPolicy::StandardBit, TIMEOUT_LIMIT);
        let classes = [
            Outcome::BothFound,
            Outcome::ConvergedOpt,
            Outcome::ConvergedLoc,
            Outcome::Timeout,
        ];
        let mut fast = [0i64; 4];
        let mut brute = [0i64; 4];
        let mut trapped_runs = 0;
        let (mut fast_evals, mut brute_evals) = (Vec::new(), Vec::new());
        let tag = format!("c11-{mu}-{sel}");
        for run in 0..runs {
            let seed = seed_for(&tag, run);
            let idx = |o: Outcome| classes.iter().position(|c| *c == o).unwrap_or(3);
            let rec = run_twogradients(&p, &cfg, seed, true, None).unwrap();
            fast[idx(rec.outcome)] += 1;
            fast_evals.push(rec.evaluations);
            let mut trapped = false;
            let mut trace = |ev: &IterationEvent<'_>| {
                trapped |= ev.population.min_fitness() == loc && ev.population.max_fitness() > loc;
            };
            let rec = run_twogradients(&p, &cfg, seed, false, Some(&mut trace)).unwrap();
            brute[idx(rec.outcome)] += 1;
            brute_evals.push(rec.evaluations);
            trapped_runs += trapped as u64;
        }
        if trapped_runs * 10 < runs {
            return Err(format!(
                "mu={mu} {sel}: only {trapped_runs}/{runs} runs reached the skipped state"
            ));
        }
        let tv = fast
            .iter()
            .zip(&brute)
            .map(|(a, b)| (a - b).abs())
            .sum::<i64>() as f64
            / 2.0
            / runs as f64;
        let ks = ks_statistic(fast_evals, brute_evals);
        let critical = 1.949 * (2.0 / runs as f64).sqrt();
        if ks > critical {
            return Err(format!(
                "mu={mu} {sel}: run-length KS statistic {ks:.4} exceeds {critical:.4}"
            ));
        }
        details.push(format!("mu={mu} K={k} tv={tv:.4} ks={ks:.4}"));
        if tv >= worst.0 {
            worst = (tv, format!("mu={mu} {sel}: fast {fast:?} brute {brute:?}"));
        }
    }
    ensure(
        worst.0 < 0.05,
        format!(
            "largest total-variation distance {:.4} ({}); {}; KS critical {:.4}",
            worst.0,
            worst.1,
            details.join(", "),
            1.949 * (2.0 / runs as f64).sqrt()
        ),
    )
}

fn main() {
    let wanted: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let want = |c: u32| wanted.is_empty() || wanted.contains(&c);
    let mut failed = 0;
    let mut report = |c: u32, title: &str, started: Instant, result: Check| {
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {c:>2} PASS [{secs:.1}s] {title}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {c:>2} FAIL [{secs:.1}s] {title}: {detail}");
            }
        }
    };
    let simple: [Criterion; 8] = [
        (1, "exhaustive fitness oracles", criterion_1),
        (2, "(1+1) EA misses the TwoGradients optimum", criterion_2),
        (
            3,
            "inverse 10-tournament finds both TwoGradients optima",
            criterion_3,
        ),
        (6, "TruncatedTwoMax inverse elitist ceiling", criterion_6),
        (7, "branch imbalance is a fair walk", criterion_7),
        (8, "selection frequencies", criterion_8),
        (9, "Wilcoxon and Holm reference values", criterion_9),
        (10, "instance corpora and MaxSat solving", criterion_10),
    ];
    for (c, title, f) in &simple[..3] {
        if want(*c) {
            let t = Instant::now();
            report(*c, title, t, f());
        }
    }
    if want(4) || want(5) {
        let t = Instant::now();
        let (c4, c5) = criterion_4_and_5();
        report(4, "TwoMax inverse elitist success", t, c4);
        report(5, "TwoMax uniform below inverse elitist", t, c5);
    }
    for (c, title, f) in &simple[3..] {
        if want(*c) {
            let t = Instant::now();
            report(*c, title, t, f());
        }
    }
    if want(11) {
        let t = Instant::now();
        report(11, "fast-forward matches brute force", t, criterion_11());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
