//! Fixtures shared by the kernel benchmarks.

use std::path::PathBuf;

use ssea::instances::{load_cnf, load_mknap, CnfFormula, MkpInstance};
use ssea::{Genotype, RngStream};

/// Repository `data/` directory.
pub fn data_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data"))
}

pub fn uf(n: usize) -> CnfFormula {
    load_cnf(&data_dir().join(format!("uf{n}/uf{n}-01.cnf"))).expect("bundled cnf")
}

pub fn mknap() -> MkpInstance {
    load_mknap(&data_dir().join("mknap/mknapcb4.txt"))
        .expect("bundled mknap")
        .swap_remove(1)
}

/// `count` uniform random genotypes of length `n`.
pub fn genotypes(n: usize, count: usize, seed: u64) -> Vec<Genotype> {
    let mut rng = RngStream::new(seed);
    (0..count)
        .map(|_| Genotype::random(n, &mut rng).expect("n > 0"))
        .collect()
}
