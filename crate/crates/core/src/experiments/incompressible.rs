//! Inner products of a sparse column with incompressible vectors.

use serde::Serialize;

use crate::bounds::incompressible_witness;
use crate::ensemble::{sample_sparse_column, EnsembleSpec, Field};
use crate::exec::TrialPlan;
use crate::rng::SeedPath;
use crate::sphere::{sample_class_member, ClassificationParams, MassProfile, Verdict};
use crate::stats::{fit_power_law, PowerLawFit, Proportion};
use crate::{vector, Error, Result, C64};

use super::tail::{check_grid, fit_tail_exponent};

/// Where the unit vector `η` of each trial comes from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum EtaSource {
    /// A fresh incompressible vector per trial.
    Incompressible(MassProfile),
    /// The flat vector `(1/√n, …, 1/√n)`.
    Flat,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IncompTail {
    pub n: usize,
    pub delta: f64,
    pub t_grid: Vec<f64>,
    pub freq: Vec<Proportion>,
    /// Trials with an exactly zero overlap.
    pub atom_count: u64,
    /// `e^(−λ0·n^δ/8) + (2λ1/λ0)·t²·n^(1−δ)`, from the pigeonhole witness.
    pub analytic: Vec<f64>,
    pub fitted_exponent: f64,
    pub fit_r2: f64,
    pub fit_points: Vec<usize>,
}

/// Frequencies of `|⟨Y₁, η⟩| < t`, with `Y₁` a fresh sparse complex column.
pub fn incompressible_tail_experiment(
    params: &ClassificationParams,
    n: usize,
    source: EtaSource,
    t_grid: &[f64],
    plan: &TrialPlan,
) -> Result<IncompTail> {
    params.validate()?;
    if t_grid.is_empty() || t_grid[0] < 0.0 || t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("t_grid", "must be nonnegative and strictly increasing"));
    }
    let spec = EnsembleSpec::new(n, params.delta, Field::Complex)?;
    let flat = vector::from_real(&vec![1.0 / (n as f64).sqrt(); n]);
    let overlaps: Vec<f64> = plan
        .map(|i| {
            let seed = SeedPath::new(plan.master_seed, i, "incompressible");
            let eta = match source {
                EtaSource::Incompressible(profile) => {
                    sample_class_member(Verdict::Ic, params, n, profile, &seed.child("eta"))?
                }
                EtaSource::Flat => flat.clone(),
            };
            let y = sample_sparse_column(&spec, &seed.child("column"));
            Ok(vector::inner(&y, &eta).norm())
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let trials = plan.trials as u64;
    let atom_count = overlaps.iter().filter(|&&r| r == 0.0).count() as u64;
    let counts: Vec<u64> = t_grid
        .iter()
        .map(|&t| overlaps.iter().filter(|&&r| r < t).count() as u64)
        .collect();
    let w = incompressible_witness(params)?;
    let nf = n as f64;
    let analytic = t_grid
        .iter()
        .map(|t| (-w.lambda0 * nf.powf(params.delta) / 8.0).exp() + 2.0 * w.lambda1 / w.lambda0 * t * t * nf.powf(1.0 - params.delta))
        .collect();
    let positive: Vec<usize> = (0..t_grid.len()).filter(|&i| t_grid[i] > 0.0).collect();
    let (fit, used) = fit_tail_exponent(
        &positive.iter().map(|&i| t_grid[i]).collect::<Vec<_>>(),
        &positive.iter().map(|&i| counts[i]).collect::<Vec<_>>(),
        atom_count,
        trials,
    )
    .unwrap_or((PowerLawFit::UNFIT, Vec::new()));
    Ok(IncompTail {
        n,
        delta: params.delta,
        t_grid: t_grid.to_vec(),
        freq: counts.iter().map(|&k| Proportion::new(k, trials)).collect(),
        atom_count,
        analytic,
        fitted_exponent: fit.exponent,
        fit_r2: fit.r2,
        fit_points: used.iter().map(|&j| positive[j]).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrefactorRow {
    pub n: usize,
    pub freq: Proportion,
    /// `freq / (t²·n^(1−δ))`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrefactorFit {
    pub t: f64,
    pub rows: Vec<PrefactorRow>,
    /// Fitted power of `n` in the frequency; the `t²·n^(1−δ)` term predicts `1 − δ`.
    pub n_exponent: f64,
    pub r2: f64,
}

/// Frequency of `|⟨Y₁, η⟩| < t` at a fixed small `t` across dimensions.
pub fn incompressible_prefactor(
    params: &ClassificationParams,
    n_grid: &[usize],
    source: EtaSource,
    t: f64,
    plan: &TrialPlan,
) -> Result<PrefactorFit> {
    check_grid(&n_grid.iter().map(|&n| n as f64).collect::<Vec<_>>(), "n_grid")?;
    let mut rows = Vec::new();
    for &n in n_grid {
        let r = incompressible_tail_experiment(params, n, source, &[t], plan)?;
        let freq = r.freq[0];
        rows.push(PrefactorRow {
            n,
            freq,
            ratio: freq.p_hat / (t * t * (n as f64).powf(1.0 - params.delta)),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.freq.p_hat).collect();
    let ws: Vec<f64> = rows.iter().map(|r| r.freq.successes as f64).collect();
    let fit = fit_power_law(&xs, &ys, &ws)?;
    Ok(PrefactorFit {
        t,
        rows,
        n_exponent: fit.exponent,
        r2: fit.r2,
    })
}

/// `|⟨y, η⟩|` for a given column and vector; exposed for direct checks.
pub fn overlap(y: &[C64], eta: &[C64]) -> f64 {
    vector::inner(y, eta).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::log_space;

    fn params() -> ClassificationParams {
        ClassificationParams::new(0.5, 1.0, 0.1, 0.2, 0.5).unwrap()
    }

    #[test]
    fn zero_threshold_never_hits() {
        let r = incompressible_tail_experiment(&params(), 32, EtaSource::Incompressible(MassProfile::Random), &[0.0, 0.1], &TrialPlan::new(300, 1)).unwrap();
        assert_eq!(r.freq[0].successes, 0);
    }

    #[test]
    fn one_dimensional_closed_form() {
        let grid = log_space(0.1, 1.5, 6);
        let trials = 20_000;
        let r = incompressible_tail_experiment(&params(), 1, EtaSource::Flat, &grid, &TrialPlan::new(trials, 2)).unwrap();
        for (t, f) in grid.iter().zip(&r.freq) {
            let exact = 1.0 - (-t * t).exp();
            let se = (exact * (1.0 - exact) / trials as f64).sqrt();
            assert!((f.p_hat - exact).abs() < 4.0 * se, "t = {t}: {} vs {exact}", f.p_hat);
        }
    }

    #[test]
    fn analytic_bound_dominates() {
        let grid = log_space(0.01, 0.3, 8);
        let r = incompressible_tail_experiment(&params(), 64, EtaSource::Incompressible(MassProfile::Random), &grid, &TrialPlan::new(2000, 3)).unwrap();
        for (f, b) in r.freq.iter().zip(&r.analytic) {
            assert!(f.p_hat <= b + 3.0 * f.standard_error());
        }
    }

    #[test]
    fn overlap_is_phase_blind() {
        let y = vec![C64::new(1.0, 2.0), C64::new(0.0, -1.0)];
        let eta = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let rotated: Vec<C64> = eta.iter().map(|z| z * C64::from_polar(1.0, 0.7)).collect();
        assert!((overlap(&y, &eta) - overlap(&y, &rotated)).abs() < 1e-14);
    }
}
