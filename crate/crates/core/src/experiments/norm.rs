//! Operator-norm concentration and the real/imaginary split.

use serde::Serialize;

use crate::ensemble::{assemble_sparse_matrix, EnsembleSpec};
use crate::exec::TrialPlan;
use crate::rng::SeedPath;
use crate::spectral::singular_values;
use crate::stats::{median, Proportion};
use crate::{Error, Result};

/// Slack allowed in `‖A‖ ≤ ‖Re A‖ + ‖Im A‖`.
pub const SPLIT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormExceedance {
    pub k: f64,
    pub threshold: f64,
    pub freq: Proportion,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormReport {
    pub n: usize,
    pub delta: f64,
    pub trials: u64,
    pub rows: Vec<NormExceedance>,
    /// Median of `‖A‖/n^(δ/2)`.
    pub median_ratio: f64,
    pub split_holds: u64,
    /// Largest `‖A‖ − ‖Re A‖ − ‖Im A‖` seen.
    pub split_max_gap: f64,
}

/// Frequencies of `‖A‖ ≥ K·n^(δ/2)` for each `K`, with the split check on
/// every trial. Norms come from a full SVD.
pub fn norm_concentration(spec: &EnsembleSpec, k_grid: &[f64], plan: &TrialPlan) -> Result<NormReport> {
    if plan.trials < 100 {
        return Err(Error::param("trials", "need at least 100"));
    }
    if k_grid.iter().any(|k| !(*k > 0.0)) {
        return Err(Error::param("K", "grid values must be positive"));
    }
    let scale = (spec.n() as f64).powf(spec.delta() / 2.0);
    let norms: Vec<(f64, f64)> = plan
        .map(|i| {
            let a = assemble_sparse_matrix(spec, &SeedPath::new(plan.master_seed, i, "norm"));
            let full = singular_values(&a)?[0];
            let re = singular_values(&a.real_part())?[0];
            let im = singular_values(&a.imag_part())?[0];
            Ok((full, full - re - im))
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let trials = plan.trials as u64;
    let rows = k_grid
        .iter()
        .map(|&k| {
            let threshold = k * scale;
            let hits = norms.iter().filter(|s| s.0 >= threshold).count() as u64;
            NormExceedance {
                k,
                threshold,
                freq: Proportion::new(hits, trials),
            }
        })
        .collect();
    let ratios: Vec<f64> = norms.iter().map(|s| s.0 / scale).collect();
    Ok(NormReport {
        n: spec.n(),
        delta: spec.delta(),
        trials,
        rows,
        median_ratio: median(&ratios),
        split_holds: norms.iter().filter(|s| s.1 <= SPLIT_TOL).count() as u64,
        split_max_gap: norms.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Field;

    #[test]
    fn frequencies_fall_with_k_and_split_holds() {
        let spec = EnsembleSpec::new(16, 0.5, Field::Complex).unwrap();
        let r = norm_concentration(&spec, &[0.5, 1.0, 1.5, 2.0, 3.0], &TrialPlan::new(200, 3)).unwrap();
        for w in r.rows.windows(2) {
            assert!(w[0].freq.successes >= w[1].freq.successes);
        }
        assert_eq!(r.split_holds, 200);
        assert!(r.split_max_gap <= SPLIT_TOL);
    }

    #[test]
    fn k_below_median_exceeds_half() {
        let spec = EnsembleSpec::new(16, 0.5, Field::Complex).unwrap();
        let plan = TrialPlan::new(201, 9);
        let probe = norm_concentration(&spec, &[1.0], &plan).unwrap();
        let r = norm_concentration(&spec, &[0.99 * probe.median_ratio], &plan).unwrap();
        assert!(r.rows[0].freq.p_hat > 0.5);
    }

    #[test]
    fn real_matrices_split_trivially() {
        let spec = EnsembleSpec::new(8, 0.5, Field::Real).unwrap();
        let r = norm_concentration(&spec, &[1.0], &TrialPlan::new(100, 1)).unwrap();
        assert_eq!(r.split_holds, 100);
        assert!(r.split_max_gap.abs() < 1e-12);
    }
}
