#!/usr/bin/env python3
"""Regenerates the instance spot set under data/.

CNF files follow the SATLIB uniform random 3-SAT layout (uf<n>-0<i>.cnf,
clause ratio 4.26, '%' and '0' trailer). As in SATLIB, formulas are drawn
uniformly at random and kept only if a SAT solver (pycosat) finds them
satisfiable. MKP files follow the OR-Library mknapcb layout: instance count,
then per instance n, m, declared optimum (0 = unknown), n rewards, m rows of
n weights, m capacities.

Output is deterministic: rerunning overwrites data/ with identical bytes.
"""

import argparse
import pathlib
import random

import pycosat

UF_SIZES = {20: 91, 100: 430, 250: 1065}


def satisfiable_3sat(n, clauses, rng):
    while True:
        out = []
        for _ in range(clauses):
            vars_ = rng.sample(range(1, n + 1), 3)
            out.append([v if rng.random() < 0.5 else -v for v in vars_])
        if pycosat.solve(out) != "UNSAT":
            return out


def write_cnf(path, n, clauses):
    lines = [
        "c This formula was drawn uniformly at random and checked satisfiable",
        "c",
        f"c    uniform random 3-SAT, {n} variables, {len(clauses)} clauses",
        "c",
        f"p cnf {n}  {len(clauses)} ",
    ]
    lines += [" " + " ".join(str(l) for l in c) + " 0" for c in clauses]
    lines += ["%", "0", ""]
    path.write_text("\n".join(lines) + "\n")


def mkp_instance(n, m, tightness, rng):
    weights = [[rng.randint(1, 1000) for _ in range(n)] for _ in range(m)]
    capacities = [int(tightness * sum(row)) for row in weights]
    rewards = [sum(weights[i][j] for i in range(m)) // m + rng.randint(1, 500) for j in range(n)]
    return rewards, weights, capacities


def write_mknap(path, instances):
    out = [f" {len(instances)}"]
    for n, m, opt, (rewards, weights, caps) in instances:
        out.append(f" {n} {m} {opt}")
        for row in [rewards, *weights, caps]:
            for k in range(0, len(row), 10):
                out.append(" " + " ".join(str(x) for x in row[k : k + 10]))
    path.write_text("\n".join(out) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=pathlib.Path(__file__).resolve().parent.parent / "data", type=pathlib.Path)
    ap.add_argument("--seed", default=20161017, type=int)
    args = ap.parse_args()
    rng = random.Random(args.seed)

    for n, clauses in UF_SIZES.items():
        d = args.out / f"uf{n}"
        d.mkdir(parents=True, exist_ok=True)
        for i in range(1, 4):
            write_cnf(d / f"uf{n}-0{i}.cnf", n, satisfiable_3sat(n, clauses, rng))

    mkp = args.out / "mknap"
    mkp.mkdir(parents=True, exist_ok=True)
    for name, n, m in [("mknapcb1", 100, 5), ("mknapcb4", 100, 10)]:
        insts = [(n, m, 0, mkp_instance(n, m, t, rng)) for t in (0.25, 0.5, 0.75)]
        write_mknap(mkp / f"{name}.txt", insts)


if __name__ == "__main__":
    main()
