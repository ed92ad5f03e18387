//! Empirical lower tail of the least singular value.

use serde::Serialize;

use crate::ensemble::{assemble_sparse_matrix, EnsembleSpec};
use crate::exec::TrialPlan;
use crate::rng::SeedPath;
use crate::spectral::{hs_norm, least_singular, DEFAULT_TOL};
use crate::stats::{fit_power_law, log_space, PowerLawFit, Proportion};
use crate::{Error, Result};

/// Trials with `σ_n ≤ ATOM_REL·‖A‖_HS` count as exactly singular.
pub const ATOM_REL: f64 = 1e-8;
/// Grid points need this many non-atomic successes to enter the fit.
pub const MIN_FIT_SUCCESSES: u64 = 10;
/// Grid points above this non-atomic frequency are past the small-ball regime.
pub const MAX_FIT_P: f64 = 0.3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailCurve {
    pub eps_grid: Vec<f64>,
    pub trials: u64,
    pub successes: Vec<u64>,
    pub p_hat: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    /// Trials whose matrix was numerically singular.
    pub atom_count: u64,
    /// NaN when fewer than two grid points qualify for the fit.
    pub fitted_exponent: f64,
    pub fit_log_prefactor: f64,
    pub fit_r2: f64,
    /// Grid indices used by the fit.
    pub fit_points: Vec<usize>,
    /// Grid indices without a single success.
    pub zero_points: Vec<usize>,
    /// `−ln(atom fraction)/n^δ`, when singular trials occurred.
    pub atom_rate: Option<f64>,
}

/// 12 log-spaced points per decade over `[1e-3, 1e-1]`.
pub fn default_eps_grid() -> Vec<f64> {
    log_space(1e-3, 1e-1, 25)
}

pub(crate) fn check_grid(grid: &[f64], name: &'static str) -> Result<()> {
    if grid.is_empty() || grid[0] <= 0.0 || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param(name, "must be positive and strictly increasing"));
    }
    Ok(())
}

/// Exponent fit of `P[X ≤ ε] − P[atom]` against `ε`.
///
/// Points with fewer than [`MIN_FIT_SUCCESSES`] non-atomic successes or a
/// frequency above [`MAX_FIT_P`] are left out; the rest are weighted by the
/// inverse binomial variance of `ln p̂`, i.e. `k/(1 − p̂)`.
pub fn fit_tail_exponent(grid: &[f64], successes: &[u64], atoms: u64, trials: u64) -> Result<(PowerLawFit, Vec<usize>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    let mut used = Vec::new();
    for (i, (&e, &k)) in grid.iter().zip(successes).enumerate() {
        let k = k.saturating_sub(atoms);
        let p = k as f64 / trials as f64;
        if k >= MIN_FIT_SUCCESSES && p <= MAX_FIT_P {
            xs.push(e);
            ys.push(p);
            ws.push(k as f64 / (1.0 - p));
            used.push(i);
        }
    }
    Ok((fit_power_law(&xs, &ys, &ws)?, used))
}

/// One `σ_n` per trial, shared by every grid point.
pub fn estimate_tail_curve(spec: &EnsembleSpec, eps_grid: &[f64], plan: &TrialPlan) -> Result<TailCurve> {
    check_grid(eps_grid, "eps_grid")?;
    if plan.trials < 100 {
        return Err(Error::param("trials", "need at least 100"));
    }
    let samples: Vec<(f64, bool)> = plan
        .map(|i| {
            let a = assemble_sparse_matrix(spec, &SeedPath::new(plan.master_seed, i, "tail"));
            let s = least_singular(&a, DEFAULT_TOL)?.sigma;
            Ok((s, s <= ATOM_REL * hs_norm(&a)))
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let trials = plan.trials as u64;
    let atom_count = samples.iter().filter(|s| s.1).count() as u64;
    let successes: Vec<u64> = eps_grid
        .iter()
        .map(|&e| samples.iter().filter(|s| s.0 <= e).count() as u64)
        .collect();
    let props: Vec<Proportion> = successes.iter().map(|&k| Proportion::new(k, trials)).collect();
    let (fit, fit_points) = match fit_tail_exponent(eps_grid, &successes, atom_count, trials) {
        Ok(f) => f,
        Err(_) => (PowerLawFit::UNFIT, Vec::new()),
    };
    let atom_rate = (atom_count > 0)
        .then(|| -(atom_count as f64 / trials as f64).ln() / (spec.n() as f64).powf(spec.delta()));
    Ok(TailCurve {
        eps_grid: eps_grid.to_vec(),
        trials,
        zero_points: successes.iter().enumerate().filter(|(_, &k)| k == 0).map(|(i, _)| i).collect(),
        successes,
        p_hat: props.iter().map(|p| p.p_hat).collect(),
        ci_lo: props.iter().map(|p| p.ci_lo).collect(),
        ci_hi: props.iter().map(|p| p.ci_hi).collect(),
        atom_count,
        fitted_exponent: fit.exponent,
        fit_log_prefactor: fit.log_prefactor,
        fit_r2: fit.r2,
        fit_points,
        atom_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Field;

    #[test]
    fn one_by_one_matches_closed_form() {
        let spec = EnsembleSpec::new(1, 0.5, Field::Complex).unwrap();
        let grid = log_space(0.05, 2.0, 8);
        let c = estimate_tail_curve(&spec, &grid, &TrialPlan::new(20_000, 11)).unwrap();
        for (i, e) in grid.iter().enumerate() {
            let exact = 1.0 - (-e * e).exp();
            let se = (exact * (1.0 - exact) / 20_000.0).sqrt();
            assert!((c.p_hat[i] - exact).abs() < 4.0 * se, "ε = {e}: {} vs {exact}", c.p_hat[i]);
        }
        assert_eq!(c.atom_count, 0);
    }

    #[test]
    fn synthetic_square_law_is_fitted_exactly() {
        let grid = default_eps_grid();
        let trials = 1_000_000_000u64;
        let succ: Vec<u64> = grid.iter().map(|e| (e * e * trials as f64).round() as u64).collect();
        let (fit, used) = fit_tail_exponent(&grid, &succ, 0, trials).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-6, "{}", fit.exponent);
        assert_eq!(used.len(), grid.len());
    }

    #[test]
    fn atoms_are_subtracted_before_fitting() {
        let grid = default_eps_grid();
        let trials = 1_000_000_000u64;
        let atoms = 1000;
        let succ: Vec<u64> = grid.iter().map(|e| (e * e * trials as f64).round() as u64 + atoms).collect();
        let (fit, _) = fit_tail_exponent(&grid, &succ, atoms, trials).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = EnsembleSpec::new(4, 0.5, Field::Real).unwrap();
        assert!(estimate_tail_curve(&spec, &[0.1, 0.05], &TrialPlan::new(200, 1)).is_err());
        assert!(estimate_tail_curve(&spec, &[0.1, 0.2], &TrialPlan::new(50, 1)).is_err());
    }

    #[test]
    fn counts_do_not_depend_on_mode() {
        let spec = EnsembleSpec::new(6, 0.5, Field::Complex).unwrap();
        let grid = log_space(0.01, 1.0, 10);
        let a = estimate_tail_curve(&spec, &grid, &TrialPlan::new(300, 5).sequential()).unwrap();
        let b = estimate_tail_curve(&spec, &grid, &TrialPlan::new(300, 5).with_mode(crate::exec::ExecMode::Parallel)).unwrap();
        assert_eq!(a, b);
        for w in a.successes.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }
}
