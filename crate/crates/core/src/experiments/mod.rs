//! Monte Carlo experiments tying the ensembles to the closed-form bounds.
//!
//! Every experiment takes a [`TrialPlan`](crate::exec::TrialPlan); trial `i`
//! draws only from streams keyed by `(master_seed, i, label)`, so counts are
//! identical for any thread count.

pub mod distance;
pub mod incompressible;
pub mod lemmas;
pub mod norm;
pub mod rowbound;
pub mod shift;
pub mod tail;

pub use tail::{default_eps_grid, estimate_tail_curve, fit_tail_exponent, TailCurve};
pub use norm::{norm_concentration, NormReport};
pub use rowbound::{count_row_bound_set, default_row_cases, row_bound_experiment, row_cases, RowBoundRow};
pub use distance::{distance_reduction_check, distance_trial, distance_trials, summarize_distance, DistanceReport, DistanceTrial};
pub use incompressible::{incompressible_prefactor, incompressible_tail_experiment, EtaSource, IncompTail, PrefactorFit};
pub use lemmas::{
    default_lemma_grid, dot_bound_experiment, net_certificate_fuzz, paley_zygmund_experiment, small_ball_experiment,
    zero_out_experiment, BoundCheckRow, NetFuzzReport, Profile, SmallBallRow, ZeroOutReport,
};
pub use shift::{
    shift_constant, shift_counterexample_trial, shift_experiment, shift_trials, summarize_shift, ShiftReport, ShiftTrialResult,
};
