//! A deterministic shift that defeats the sparse tail bound.
//!
//! `M = t·Id` with its lower-right entry zeroed. When `A_nn = 0` the vector
//! `x = (−(λ/t)·A_(1..n−1, n), 1)` satisfies
//! `(M + λA)x = −(λ²/t)·A_(:, 1..n−1)·A_(1..n−1, n)`, which is small for large
//! `t` no matter how well conditioned `A` is.

use serde::Serialize;

use crate::ensemble::{assemble_sparse_matrix, build_shift_matrix, build_shift_witness, EnsembleSpec};
use crate::exec::TrialPlan;
use crate::rng::SeedPath;
use crate::spectral::{hs_norm, least_singular, DEFAULT_TOL};
use crate::stats::{median, Proportion};
use crate::{vector, DenseMatrix, Error, Result, C64};

/// Slack for `σ_min ≤ ‖(M + λA)x‖/‖x‖`.
pub const VARIATIONAL_TOL: f64 = 1e-8;

/// `C = C′² = 200·K/P` for entry variance at most `K` and `P[a_ij = 0] = P`:
/// two Markov bounds at `K/C′²` each then fail together with probability at
/// most `0.01·P`.
pub fn shift_constant(variance: f64, zero_prob: f64) -> Result<f64> {
    if !(variance > 0.0) || !(zero_prob > 0.0 && zero_prob <= 1.0) {
        return Err(Error::param("K, P", "need K > 0 and P in (0, 1]"));
    }
    Ok(200.0 * variance / zero_prob)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftTrialResult {
    pub sigma_min: f64,
    pub corner_was_zero: bool,
    /// `C·λ²·n^(3/2)/t`.
    pub bound_value: f64,
    /// `‖(M + λA)x‖/‖x‖`.
    pub witness_ratio: f64,
    /// `(λ²/t)·‖A_block‖_HS·‖a_col‖/‖x‖`, the intermediate of the chain.
    pub chain_value: f64,
    /// `σ_min(t·Id + λA)`, the same perturbation of an unmodified shift.
    pub identity_shift_sigma: f64,
}

/// All quantities for a given matrix `A`.
pub fn shift_trial_for(a: &DenseMatrix, t: f64, lambda: f64, constant: f64) -> Result<ShiftTrialResult> {
    if !(t > 0.0 && lambda > 0.0) {
        return Err(Error::param("t, lambda", "must be positive"));
    }
    if !a.is_square() || a.rows() < 2 {
        return Err(Error::param("A", "need a square matrix with n ≥ 2"));
    }
    let n = a.rows();
    let m = build_shift_matrix(n, t)?;
    let shifted = m.add_scaled(lambda, a);
    let x = build_shift_witness(a, t, lambda)?;
    let xn = vector::norm(&x);
    let witness_ratio = vector::norm(&shifted.mul_vec(&x)) / xn;
    let block = a.block(0, n, 0, n - 1);
    let col: Vec<C64> = (0..n - 1).map(|i| a[(i, n - 1)]).collect();
    let chain_value = lambda * lambda / t * hs_norm(&block) * vector::norm(&col) / xn;
    let plain = DenseMatrix::identity(n).scaled(C64::new(t, 0.0)).add_scaled(lambda, a);
    Ok(ShiftTrialResult {
        sigma_min: least_singular(&shifted, DEFAULT_TOL)?.sigma,
        corner_was_zero: a[(n - 1, n - 1)] == C64::new(0.0, 0.0),
        bound_value: constant * lambda * lambda * (n as f64).powf(1.5) / t,
        witness_ratio,
        chain_value,
        identity_shift_sigma: least_singular(&plain, DEFAULT_TOL)?.sigma,
    })
}

/// One sparse draw of `A` from `seed`, with the calibrated constant for its
/// ensemble (`K = p`, `P = 1 − p`).
pub fn shift_counterexample_trial(n: usize, t: f64, lambda: f64, spec: &EnsembleSpec, seed: &SeedPath) -> Result<ShiftTrialResult> {
    if spec.n() != n {
        return Err(Error::Dimension(format!("spec has n = {}, asked for {n}", spec.n())));
    }
    let c = shift_constant(spec.p(), 1.0 - spec.p())?;
    shift_trial_for(&assemble_sparse_matrix(spec, seed), t, lambda, c)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftReport {
    pub n: usize,
    pub t: f64,
    pub lambda: f64,
    pub constant: f64,
    pub bound_value: f64,
    pub trials: u64,
    /// Frequency of `A_nn = 0`; its law is Bernoulli(`1 − p`).
    pub corner_zero: Proportion,
    pub expected_corner_zero: f64,
    /// Among corner-zero trials, how often `σ_min ≤ bound`.
    pub conditioned: Option<Proportion>,
    /// Unconditional frequency of `σ_min ≤ bound`.
    pub bound_holds: Proportion,
    pub variational_violations: u64,
    pub median_sigma: f64,
    pub median_identity_shift_sigma: f64,
}

/// Per-trial results, in trial order.
pub fn shift_trials(spec: &EnsembleSpec, t: f64, lambda: f64, plan: &TrialPlan) -> Result<Vec<ShiftTrialResult>> {
    let n = spec.n();
    plan.map(|i| shift_counterexample_trial(n, t, lambda, spec, &SeedPath::new(plan.master_seed, i, "shift")))
        .into_iter()
        .collect()
}

pub fn summarize_shift(spec: &EnsembleSpec, t: f64, lambda: f64, rows: &[ShiftTrialResult]) -> Result<ShiftReport> {
    if rows.is_empty() {
        return Err(Error::param("trials", "need at least one trial"));
    }
    let trials = rows.len() as u64;
    let zero: Vec<&ShiftTrialResult> = rows.iter().filter(|r| r.corner_was_zero).collect();
    let hits = zero.iter().filter(|r| r.sigma_min <= r.bound_value).count() as u64;
    let all_hits = rows.iter().filter(|r| r.sigma_min <= r.bound_value).count() as u64;
    let sig: Vec<f64> = rows.iter().map(|r| r.sigma_min).collect();
    let plain: Vec<f64> = rows.iter().map(|r| r.identity_shift_sigma).collect();
    Ok(ShiftReport {
        n: spec.n(),
        t,
        lambda,
        constant: shift_constant(spec.p(), 1.0 - spec.p())?,
        bound_value: rows[0].bound_value,
        trials,
        corner_zero: Proportion::new(zero.len() as u64, trials),
        expected_corner_zero: 1.0 - spec.p(),
        conditioned: (!zero.is_empty()).then(|| Proportion::new(hits, zero.len() as u64)),
        bound_holds: Proportion::new(all_hits, trials),
        variational_violations: rows.iter().filter(|r| r.sigma_min > r.witness_ratio + VARIATIONAL_TOL).count() as u64,
        median_sigma: median(&sig),
        median_identity_shift_sigma: median(&plain),
    })
}

pub fn shift_experiment(spec: &EnsembleSpec, t: f64, lambda: f64, plan: &TrialPlan) -> Result<ShiftReport> {
    summarize_shift(spec, t, lambda, &shift_trials(spec, t, lambda, plan)?)
}
