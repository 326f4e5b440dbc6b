//! MaxSat and multidimensional knapsack instances: DIMACS CNF and OR-Library
//! `mknap` parsers, fitness functions and the best-known-value table.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::benchmarks::Problem;
use crate::bitcore::{Fitness, Genotype};
use crate::error::{Error, Result};

/// A CNF formula. Literals are stored flat as `(variable index, polarity)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: usize,
    literals: Vec<(u32, bool)>,
    /// Clause `c` occupies `literals[offsets[c]..offsets[c + 1]]`.
    offsets: Vec<usize>,
}

impl CnfFormula {
    /// Builds a formula from DIMACS-style signed literals.
    pub fn new(num_vars: usize, clauses: &[Vec<i32>]) -> Result<Self> {
        if num_vars == 0 {
            return Err(Error::InvalidDimension(0));
        }
        let mut literals = Vec::new();
        let mut offsets = vec![0];
        for (c, clause) in clauses.iter().enumerate() {
            if clause.is_empty() {
                return Err(Error::InvalidParameter(format!("clause {c} is empty")));
            }
            for &lit in clause {
                let var = lit.unsigned_abs() as usize;
                if lit == 0 || var > num_vars {
                    return Err(Error::InvalidParameter(format!(
                        "literal {lit} in clause {c} outside 1..={num_vars}"
                    )));
                }
                literals.push(((var - 1) as u32, lit > 0));
            }
            offsets.push(literals.len());
        }
        Ok(CnfFormula {
            num_vars,
            literals,
            offsets,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Clause `c` as DIMACS signed literals.
    pub fn clause(&self, c: usize) -> Vec<i32> {
        self.literals[self.offsets[c]..self.offsets[c + 1]]
            .iter()
            .map(|&(v, pos)| if pos { v as i32 + 1 } else { -(v as i32 + 1) })
            .collect()
    }

    pub fn clauses(&self) -> Vec<Vec<i32>> {
        (0..self.num_clauses()).map(|c| self.clause(c)).collect()
    }

    #[inline]
    fn satisfied_count(&self, x: &Genotype) -> usize {
        self.offsets
            .windows(2)
            .filter(|w| {
                self.literals[w[0]..w[1]]
                    .iter()
                    .any(|&(v, pos)| x.get(v as usize) == pos)
            })
            .count()
    }
}

/// Number of clauses of `formula` satisfied by `x` (bit `i` set means
/// variable `i + 1` is true).
pub fn maxsat_fitness(formula: &CnfFormula, x: &Genotype) -> Result<Fitness> {
    if x.len() != formula.num_vars {
        return Err(Error::DimensionMismatch {
            expected: formula.num_vars,
            got: x.len(),
        });
    }
    Ok(Fitness(formula.satisfied_count(x) as i64))
}

impl Problem for CnfFormula {
    fn dimension(&self) -> usize {
        self.num_vars
    }

    fn fitness(&self, x: &Genotype) -> Fitness {
        debug_assert_eq!(x.len(), self.num_vars);
        Fitness(self.satisfied_count(x) as i64)
    }
}

/// Parses DIMACS CNF as distributed by SATLIB.
///
/// Lines starting with `c` or `%` are skipped. Clauses may span lines and
/// are terminated by `0`. One stray `0` after the last clause is accepted,
/// as is a missing terminator on the final clause.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula> {
    let err = |line: usize, message: String| Error::Parse { line, message };
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<i32>> = Vec::new();
    let mut current: Vec<i32> = Vec::new();
    let mut trailing_zero_seen = false;
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(err(line_no, "duplicate problem line".into()));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 || fields[0] != "p" || fields[1] != "cnf" {
                return Err(err(line_no, format!("malformed problem line {line:?}")));
            }
            let nv = fields[2]
                .parse::<usize>()
                .map_err(|_| err(line_no, format!("bad variable count {:?}", fields[2])))?;
            let nc = fields[3]
                .parse::<usize>()
                .map_err(|_| err(line_no, format!("bad clause count {:?}", fields[3])))?;
            if nv == 0 {
                return Err(err(line_no, "variable count must be positive".into()));
            }
            header = Some((nv, nc));
            continue;
        }
        let Some((nv, nc)) = header else {
            return Err(err(line_no, "clause data before the problem line".into()));
        };
        for tok in line.split_whitespace() {
            let lit = tok
                .parse::<i32>()
                .map_err(|_| err(line_no, format!("bad literal {tok:?}")))?;
            if lit == 0 {
                if current.is_empty() {
                    if clauses.len() == nc && !trailing_zero_seen {
                        trailing_zero_seen = true;
                        continue;
                    }
                    return Err(err(line_no, "empty clause".into()));
                }
                if clauses.len() == nc {
                    return Err(err(line_no, format!("more than the declared {nc} clauses")));
                }
                clauses.push(std::mem::take(&mut current));
                continue;
            }
            if trailing_zero_seen {
                return Err(err(line_no, "literal after the end of the formula".into()));
            }
            if lit.unsigned_abs() as usize > nv {
                return Err(err(
                    line_no,
                    format!("literal {lit} exceeds the {nv} declared variables"),
                ));
            }
            current.push(lit);
        }
    }
    let Some((nv, nc)) = header else {
        return Err(err(last_line.max(1), "missing 'p cnf' problem line".into()));
    };
    if !current.is_empty() {
        if clauses.len() == nc {
            return Err(err(
                last_line,
                format!("more than the declared {nc} clauses"),
            ));
        }
        clauses.push(current);
    }
    if clauses.len() != nc {
        return Err(err(
            last_line,
            format!("declared {nc} clauses, found {}", clauses.len()),
        ));
    }
    CnfFormula::new(nv, &clauses)
}

/// A multidimensional knapsack instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MkpInstance {
    id: String,
    rewards: Vec<i64>,
    /// Row-major `m × n`.
    weights: Vec<i64>,
    capacities: Vec<i64>,
    declared_optimum: i64,
    penalty: i64,
}

impl MkpInstance {
    pub fn new(
        id: impl Into<String>,
        rewards: Vec<i64>,
        weights: Vec<Vec<i64>>,
        capacities: Vec<i64>,
        declared_optimum: i64,
    ) -> Result<Self> {
        let n = rewards.len();
        let m = capacities.len();
        if n == 0 || m == 0 {
            return Err(Error::InvalidParameter(
                "knapsack needs at least one item and one constraint".into(),
            ));
        }
        if weights.len() != m || weights.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidParameter(format!(
                "weight matrix is not {m}×{n}"
            )));
        }
        let all = rewards
            .iter()
            .chain(weights.iter().flatten())
            .chain(&capacities);
        if all.clone().any(|&v| v < 0) || declared_optimum < 0 {
            return Err(Error::InvalidParameter(
                "knapsack data must be non-negative".into(),
            ));
        }
        let reward_sum: i128 = rewards.iter().map(|&p| p as i128).sum();
        let penalty = 1 + reward_sum;
        // Largest possible violation magnitude, summed over constraints.
        let worst: i128 = weights
            .iter()
            .map(|row| row.iter().map(|&r| r as i128).sum::<i128>())
            .sum();
        if penalty
            .checked_mul(worst)
            .is_none_or(|v| v + reward_sum > i64::MAX as i128)
        {
            return Err(Error::InvalidParameter(
                "knapsack values overflow 64-bit fitness".into(),
            ));
        }
        Ok(MkpInstance {
            id: id.into(),
            rewards,
            weights: weights.into_iter().flatten().collect(),
            capacities,
            declared_optimum,
            penalty: penalty as i64,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn items(&self) -> usize {
        self.rewards.len()
    }

    pub fn constraints(&self) -> usize {
        self.capacities.len()
    }

    pub fn rewards(&self) -> &[i64] {
        &self.rewards
    }

    pub fn weight_row(&self, i: usize) -> &[i64] {
        let n = self.items();
        &self.weights[i * n..(i + 1) * n]
    }

    pub fn capacities(&self) -> &[i64] {
        &self.capacities
    }

    /// Optimum stated in the file; 0 when unknown.
    pub fn declared_optimum(&self) -> i64 {
        self.declared_optimum
    }

    /// `W = 1 + Σ p_j`.
    pub fn penalty_weight(&self) -> i64 {
        self.penalty
    }

    pub fn is_feasible(&self, x: &Genotype) -> bool {
        (0..self.constraints()).all(|i| self.load(i, x) <= self.capacities[i])
    }

    fn load(&self, i: usize, x: &Genotype) -> i64 {
        let row = self.weight_row(i);
        let mut total = 0;
        for (w, &r) in x.words().iter().enumerate() {
            let mut bits = r;
            while bits != 0 {
                let j = w * 64 + bits.trailing_zeros() as usize;
                total += row[j];
                bits &= bits - 1;
            }
        }
        total
    }

    fn value(&self, x: &Genotype) -> i64 {
        let mut reward = 0;
        for (w, &r) in x.words().iter().enumerate() {
            let mut bits = r;
            while bits != 0 {
                reward += self.rewards[w * 64 + bits.trailing_zeros() as usize];
                bits &= bits - 1;
            }
        }
        let violation: i64 = (0..self.constraints())
            .map(|i| (self.capacities[i] - self.load(i, x)).min(0))
            .sum();
        reward + self.penalty * violation
    }
}

/// `Σ p_j x_j + W · Σ_i min(0, b_i − Σ_j r_ij x_j)`.
pub fn mkp_fitness(inst: &MkpInstance, x: &Genotype) -> Result<Fitness> {
    if x.len() != inst.items() {
        return Err(Error::DimensionMismatch {
            expected: inst.items(),
            got: x.len(),
        });
    }
    Ok(Fitness(inst.value(x)))
}

impl Problem for MkpInstance {
    fn dimension(&self) -> usize {
        self.items()
    }

    fn fitness(&self, x: &Genotype) -> Fitness {
        debug_assert_eq!(x.len(), self.items());
        Fitness(self.value(x))
    }
}

/// Parses an OR-Library `mknap` file (Chu–Beasley layout). Instance ids are
/// `{stem}:{index}`.
pub fn parse_orlib_mknap(text: &str, stem: &str) -> Result<Vec<MkpInstance>> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let mut pos = 0usize;
    let mut next = |what: &str| -> Result<i64> {
        let index = pos;
        let tok = tokens.get(index).ok_or_else(|| Error::Token {
            index,
            message: format!("input ends where {what} was expected"),
        })?;
        pos += 1;
        let v = tok.parse::<i64>().map_err(|_| Error::Token {
            index,
            message: format!("{what}: {tok:?} is not an integer"),
        })?;
        if v < 0 {
            return Err(Error::Token {
                index,
                message: format!("{what}: negative value {v}"),
            });
        }
        Ok(v)
    };
    let count = next("instance count")? as usize;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let n = next("item count")? as usize;
        let m = next("constraint count")? as usize;
        let opt = next("optimum")?;
        let rewards = (0..n).map(|_| next("reward")).collect::<Result<Vec<_>>>()?;
        let weights = (0..m)
            .map(|_| (0..n).map(|_| next("weight")).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let caps = (0..m)
            .map(|_| next("capacity"))
            .collect::<Result<Vec<_>>>()?;
        out.push(MkpInstance::new(
            format!("{stem}:{k}"),
            rewards,
            weights,
            caps,
            opt,
        )?);
    }
    if pos != tokens.len() {
        return Err(Error::Token {
            index: pos,
            message: format!("{} unexpected trailing tokens", tokens.len() - pos),
        });
    }
    Ok(out)
}

/// Reads and parses a DIMACS CNF file. Parse errors carry the path.
pub fn load_cnf(path: &Path) -> Result<CnfFormula> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dimacs(&text).map_err(|e| Error::in_file(path, e))
}

/// Reads an OR-Library `mknap` file; instance ids use the file stem.
pub fn load_mknap(path: &Path) -> Result<Vec<MkpInstance>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_orlib_mknap(&text, &stem).map_err(|e| Error::in_file(path, e))
}

/// Best fitness known per instance id, persisted as `id<TAB>value` lines.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BestKnownTable {
    values: BTreeMap<String, i64>,
}

impl BestKnownTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut table = BestKnownTable::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (id, value) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: "expected id<TAB>value".into(),
            })?;
            let value = value.trim().parse::<i64>().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("bad value {value:?}"),
            })?;
            if value <= 0 {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("best-known value must be positive, got {value}"),
                });
            }
            table.update(id, value);
        }
        Ok(table)
    }

    /// Loads `path`, or returns an empty table if it does not exist.
    pub fn load(path: &Path) -> Result<Self> {
        match fs::read_to_string(path) {
            Ok(text) => Self::parse(&text).map_err(|e| Error::in_file(path, e)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::new()),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn to_text(&self) -> String {
        self.values
            .iter()
            .map(|(id, v)| format!("{id}\t{v}\n"))
            .collect()
    }

    /// Writes the table to a temporary sibling file and renames it over
    /// `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let dir = path
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        let mut tmp = PathBuf::from(dir);
        let name = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        tmp.push(format!(".{name}.tmp"));
        let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        file.write_all(self.to_text().as_bytes())
            .map_err(|e| Error::io(&tmp, e))?;
        file.sync_all().map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn get(&self, id: &str) -> Option<i64> {
        self.values.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Raises the entry for `id` to `value`. Non-positive values are
    /// ignored. Returns whether the table changed.
    pub fn update(&mut self, id: &str, value: i64) -> bool {
        if value <= 0 {
            return false;
        }
        match self.values.get_mut(id) {
            Some(v) if *v >= value => false,
            Some(v) => {
                *v = value;
                true
            }
            None => {
                self.values.insert(id.to_string(), value);
                true
            }
        }
    }
}

/// `achieved / best_known`, against the table's value before this call; the
/// table is then raised to `achieved` if that is larger.
pub fn normalized_fitness(id: &str, achieved: Fitness, table: &mut BestKnownTable) -> Result<f64> {
    if achieved.0 < 0 {
        return Err(Error::InvalidParameter(format!(
            "achieved fitness {achieved} is negative; infeasible results are reported as 0"
        )));
    }
    let best = table
        .get(id)
        .ok_or_else(|| Error::UnknownInstance(id.to_string()))?;
    let ratio = achieved.0 as f64 / best as f64;
    table.update(id, achieved.0);
    Ok(ratio)
}
