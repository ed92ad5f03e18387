//! Rows with a single large entry on a block of a support.

use serde::Serialize;

use crate::bounds::row_bound_tail;
use crate::ensemble::{assemble_sparse_matrix, EnsembleSpec, Field};
use crate::exec::TrialPlan;
use crate::rng::SeedPath;
use crate::stats::{mean, std_dev, Proportion};
use crate::{DenseMatrix, Error, Result, C64};

/// `|I_y(J)|`: rows `i` with `|A_(i,j*)| ≥ 1` for some `j* ∈ J` and
/// `A_(i,j) = 0` for every other `j` in the support of `y`.
pub fn count_row_bound_set(a: &DenseMatrix, y: &[C64], j: &[usize]) -> Result<usize> {
    if j.is_empty() {
        return Err(Error::param("J", "must be nonempty"));
    }
    if y.len() != a.cols() {
        return Err(Error::Dimension(format!("y has length {}, A has {} columns", y.len(), a.cols())));
    }
    if j.iter().any(|&c| c >= y.len() || y[c] == C64::new(0.0, 0.0)) {
        return Err(Error::param("J", "must lie inside supp(y)"));
    }
    let support: Vec<usize> = (0..y.len()).filter(|&c| y[c] != C64::new(0.0, 0.0)).collect();
    let count = (0..a.rows())
        .filter(|&i| {
            j.iter().any(|&star| {
                a[(i, star)].norm() >= 1.0
                    && support.iter().all(|&c| c == star || a[(i, c)] == C64::new(0.0, 0.0))
            })
        })
        .count();
    Ok(count)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowBoundRow {
    pub m: usize,
    pub j_size: usize,
    pub mean: f64,
    pub std_err: f64,
    /// `n·c_g·|J|·p·(1 − p)^(m−1)`.
    pub expected_mean: f64,
    pub threshold: f64,
    pub lower_tail: Proportion,
    pub chernoff: f64,
}

/// For each `(m, |J|)`: a support of size `m` at random positions, `J` its
/// first `|J|` elements, and `|I_y(J)|` over fresh complex sparse matrices.
pub fn row_bound_experiment(n: usize, delta: f64, cases: &[(usize, usize)], plan: &TrialPlan) -> Result<Vec<RowBoundRow>> {
    let spec = EnsembleSpec::new(n, delta, Field::Complex)?;
    cases
        .iter()
        .enumerate()
        .map(|(case, &(m, j_size))| {
            let bound = row_bound_tail(j_size, m, delta, n)?;
            if m > n {
                return Err(Error::param("m", "support larger than n"));
            }
            let counts: Vec<f64> = plan
                .map(|i| {
                    let seed = SeedPath::new(plan.master_seed, i, format!("rowbound/{case}"));
                    let a = assemble_sparse_matrix(&spec, &seed.child("matrix"));
                    let support = seed.child("support").stream().choose_indices(n, m);
                    let mut y = vec![C64::new(0.0, 0.0); n];
                    for &c in &support {
                        y[c] = C64::new(1.0, 0.0);
                    }
                    count_row_bound_set(&a, &y, &support[..j_size]).map(|c| c as f64)
                })
                .into_iter()
                .collect::<Result<_>>()?;
            let trials = counts.len() as u64;
            let below = counts.iter().filter(|&&c| c <= bound.threshold).count() as u64;
            Ok(RowBoundRow {
                m,
                j_size,
                mean: mean(&counts),
                std_err: std_dev(&counts) / (trials as f64).sqrt(),
                expected_mean: n as f64 * bound.row_prob,
                threshold: bound.threshold,
                lower_tail: Proportion::new(below, trials),
                chernoff: bound.prob,
            })
        })
        .collect()
}

/// `(m, |J|)` pairs with `m ≤ 8`: `|J| ∈ {1, ⌈m/2⌉, m}`.
/// `m = 1..=8` with `|J| ∈ {1, ⌈m/2⌉, m}`.
pub fn default_row_cases() -> Vec<(usize, usize)> {
    row_cases(8)
}

/// `m = 1..=m_max` with `|J| ∈ {1, ⌈m/2⌉, m}`, without repeats.
pub fn row_cases(m_max: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for m in 1usize..=m_max {
        for j in [1, m.div_ceil(2), m] {
            if !out.contains(&(m, j)) {
                out.push((m, j));
            }
        }
    }
    out
}
