//! Column-distance reduction for the least singular value.

use serde::Serialize;

use crate::ensemble::{assemble_sparse_matrix, EnsembleSpec};
use crate::exec::TrialPlan;
use crate::rng::SeedPath;
use crate::spectral::{distance_to_span, kernel_unit_vector, least_singular, DEFAULT_TOL};
use crate::{vector, DenseMatrix, Error, Result};

/// Absolute tolerance of both checks.
pub const DIST_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceTrial {
    pub sigma_min: f64,
    /// `max_i |x_i|·dist(Y_i, W_i) − σ_n`.
    pub max_excess: f64,
    /// `None` when `W₁` is rank deficient.
    pub identity_error: Option<f64>,
}

/// Both checks on one matrix: the bound `|x_i|·dist(Y_i, W_i) ≤ σ_n` for the
/// least singular vector `x`, and `dist(Y₁, W₁) = |⟨Y₁, η₁⟩|` for the unit
/// normal `η₁` of `W₁`.
pub fn distance_trial(a: &DenseMatrix) -> Result<DistanceTrial> {
    if !a.is_square() || a.rows() < 3 {
        return Err(Error::param("A", "need a square matrix with n ≥ 3"));
    }
    let n = a.rows();
    let ls = least_singular(a, DEFAULT_TOL)?;
    let cols = a.columns();
    let mut max_excess = f64::NEG_INFINITY;
    let mut dist_first = 0.0;
    for i in 0..n {
        let others: Vec<_> = cols.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| c.clone()).collect();
        let d = distance_to_span(&cols[i], &others)?;
        if i == 0 {
            dist_first = d;
        }
        max_excess = max_excess.max(ls.vector[i].norm() * d - ls.sigma);
    }
    let b = DenseMatrix::from_rows(&cols[1..].iter().map(|c| c.iter().map(|z| z.conj()).collect()).collect::<Vec<_>>())?;
    let kv = kernel_unit_vector(&b, DEFAULT_TOL)?;
    let identity_error = (!kv.degenerate).then(|| (dist_first - vector::inner(&cols[0], &kv.vector).norm()).abs());
    Ok(DistanceTrial {
        sigma_min: ls.sigma,
        max_excess,
        identity_error,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceReport {
    pub n: usize,
    pub trials: u64,
    pub full_rank: u64,
    pub rank_deficient: u64,
    pub identity_max_error: f64,
    pub identity_failures: u64,
    pub bound_max_excess: f64,
    pub bound_failures: u64,
}

/// Per-trial results, in trial order.
pub fn distance_trials(spec: &EnsembleSpec, plan: &TrialPlan) -> Result<Vec<DistanceTrial>> {
    if spec.n() < 3 {
        return Err(Error::param("n", "need n ≥ 3"));
    }
    plan.map(|i| distance_trial(&assemble_sparse_matrix(spec, &SeedPath::new(plan.master_seed, i, "distance"))))
        .into_iter()
        .collect()
}

pub fn summarize_distance(n: usize, trials: &[DistanceTrial]) -> DistanceReport {
    let errs: Vec<f64> = trials.iter().filter_map(|t| t.identity_error).collect();
    DistanceReport {
        n,
        trials: trials.len() as u64,
        full_rank: errs.len() as u64,
        rank_deficient: (trials.len() - errs.len()) as u64,
        identity_max_error: errs.iter().copied().fold(0.0, f64::max),
        identity_failures: errs.iter().filter(|&&e| e > DIST_TOL).count() as u64,
        bound_max_excess: trials.iter().map(|t| t.max_excess).fold(f64::NEG_INFINITY, f64::max),
        bound_failures: trials.iter().filter(|t| t.max_excess > DIST_TOL).count() as u64,
    }
}

pub fn distance_reduction_check(spec: &EnsembleSpec, plan: &TrialPlan) -> Result<DistanceReport> {
    Ok(summarize_distance(spec.n(), &distance_trials(spec, plan)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Field;
    use crate::C64;

    #[test]
    fn decoupled_diagonal() {
        let s = 0.25;
        let mut d = vec![C64::new(1.0, 0.0); 5];
        d[4] = C64::new(s, 0.0);
        let t = distance_trial(&DenseMatrix::from_diagonal(&d)).unwrap();
        assert!((t.sigma_min - s).abs() < 1e-12);
        // x = e_n gives |x_n|·dist(Y_n, W_n) = s exactly.
        assert!(t.max_excess.abs() < 1e-12);
        assert!(t.identity_error.unwrap() < 1e-12);
    }

    #[test]
    fn random_trials_pass_both_checks() {
        let spec = EnsembleSpec::new(12, 0.5, Field::Complex).unwrap();
        let r = distance_reduction_check(&spec, &TrialPlan::new(60, 8)).unwrap();
        assert_eq!(r.trials, 60);
        assert_eq!(r.identity_failures, 0, "{r:?}");
        assert_eq!(r.bound_failures, 0, "{r:?}");
        assert!(r.full_rank > 0);
    }

    #[test]
    fn zero_column_is_rank_deficient() {
        let mut a = DenseMatrix::identity(4);
        a[(2, 2)] = C64::new(0.0, 0.0);
        let t = distance_trial(&a).unwrap();
        assert!(t.identity_error.is_none());
        assert!(t.sigma_min.abs() < 1e-12);
    }
}
