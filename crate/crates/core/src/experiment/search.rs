//! Random search for matrices whose spectral norm exceeds their ell-norm.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::SquareMatrix;

/// Relative margin below which `spectral > ell` is treated as roundoff.
const EXCESS_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    /// 0 is the deterministic witness, `k >= 1` the k-th random draw.
    pub index: usize,
    pub matrix: SquareMatrix,
    pub spectral_norm: f64,
    pub ell_norm: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub seed: u64,
    pub dim: usize,
    pub count: usize,
    pub symmetric_only: bool,
    pub witness: Finding,
    /// Sorted by decreasing ratio, ties by index.
    pub findings: Vec<Finding>,
}

/// `[[1, 1], [0, 0]]` in the top-left corner of an `n x n` zero matrix.
pub fn witness(n: usize) -> SquareMatrix {
    let mut m = SquareMatrix::zeros(n);
    m.set(0, 0, 1.0);
    m.set(0, 1, 1.0);
    m
}

/// Entries uniform in `(-1, 1)` from stream `index` of the seeded generator.
pub fn random_matrix(seed: u64, index: u64, n: usize, symmetric: bool) -> SquareMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut m = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if symmetric && j < i {
                m.set(i, j, m.get(j, i));
            } else {
                m.set(i, j, rng.random_range(-1.0..1.0));
            }
        }
    }
    m
}

fn measure(index: usize, matrix: SquareMatrix) -> Result<Finding> {
    let spectral_norm = matrix.spectral_norm()?;
    let ell_norm = matrix.ell_norm();
    Ok(Finding {
        index,
        ratio: if ell_norm > 0.0 { spectral_norm / ell_norm } else { 0.0 },
        matrix,
        spectral_norm,
        ell_norm,
    })
}

fn exceeds(f: &Finding) -> bool {
    f.spectral_norm > f.ell_norm * (1.0 + EXCESS_MARGIN)
}

/// Samples `count - 1` random matrices besides the witness and keeps those
/// with `||B||_2 > ||B||_ell`. In symmetric mode the witness, not being
/// symmetric, is reported on its own and left out of the findings.
pub fn counterexample_search(seed: u64, count: usize, n: usize, symmetric_only: bool) -> Result<SearchReport> {
    let witness = measure(0, witness(n))?;
    let mut findings = (1..count.max(1))
        .into_par_iter()
        .map(|k| measure(k, random_matrix(seed, k as u64, n, symmetric_only)))
        .collect::<Result<Vec<_>>>()?;
    findings.retain(exceeds);
    if !symmetric_only {
        findings.push(witness.clone());
    }
    findings.sort_by(|a, b| b.ratio.total_cmp(&a.ratio).then(a.index.cmp(&b.index)));
    Ok(SearchReport {
        seed,
        dim: n,
        count,
        symmetric_only,
        witness,
        findings,
    })
}
