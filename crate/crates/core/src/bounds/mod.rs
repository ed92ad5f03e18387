//! Closed-form probability bounds and the two constant-selection procedures.
//!
//! [`mc`] chooses `(t, c2, ε2, δ′, ε1, c1)` in order and verifies the
//! resulting inequalities at any dimension; [`schedule`] builds the nested
//! `(a_k, b_k, d1_k, d2_k)` sequences that cover the highly compressible
//! class. Both work in [`LogReal`] because the chosen constants underflow
//! `f64` for small sparsity exponents.

pub mod logreal;
pub mod mc;
pub mod schedule;

use serde::Serialize;

use crate::sphere::ClassificationParams;
use crate::{vector, Error, Result, C64};

pub use logreal::LogReal;
pub use mc::{choose_mc_constants, choose_mc_constants_with, verify_mc_constants, InequalityCheck, McConstants};
pub use schedule::{build_hc_schedule, max_feasible_d1m, schedule_depth, HcSchedule};

/// `P[|X| ≥ 1]` for `X ~ N_C(0, 1)`: `|X|²` is exponential with rate 1.
pub const C_G: f64 = 0.367_879_441_171_442_33;

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::param("delta", format!("{delta} not in (0, 1)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SmallBall {
    /// `1 − exp(−ε²/σ²)`.
    pub exact: f64,
    /// `ε²/σ²`.
    pub bound: f64,
}

/// Small-ball probability of `X ~ N_C(0, σ²)`.
pub fn complex_small_ball(eps: f64, sigma2: f64) -> Result<SmallBall> {
    if !(sigma2 > 0.0) {
        return Err(Error::param("sigma2", format!("{sigma2} must be positive")));
    }
    if !(eps >= 0.0) {
        return Err(Error::param("eps", format!("{eps} must be nonnegative")));
    }
    let r = eps * eps / sigma2;
    Ok(SmallBall {
        exact: -(-r).exp_m1(),
        bound: r,
    })
}

/// Upper bound on `P[Σ a_i δ_i ≤ n^(δ−1)·t·Σ a_i]` for Bernoulli(`n^(δ−1)`) masks.
pub fn paley_zygmund_sparse_bound(a_vec: &[f64], t: f64, delta: f64, n: usize) -> Result<f64> {
    check_delta(delta)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::param("t", format!("{t} not in [0, 1]")));
    }
    if a_vec.iter().any(|&a| !(a >= 0.0)) {
        return Err(Error::param("a_vec", "entries must be nonnegative"));
    }
    let a: f64 = a_vec.iter().sum();
    let amax = a_vec.iter().copied().fold(0.0, f64::max);
    if a == 0.0 {
        return Err(Error::param("a_vec", "all entries are zero"));
    }
    let spread = (n as f64).powf(1.0 - delta) - 1.0;
    Ok(1.0 - (1.0 - t).powi(2) * a / (a + spread * amax))
}

/// Upper bound on `P[|R·x| ≤ ε]` for a sparse Gaussian row `R`.
pub fn dot_small_ball_bound(x: &[C64], eps: f64, t: f64, delta: f64, n: usize) -> Result<f64> {
    check_delta(delta)?;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::param("t", format!("{t} not in (0, 1)")));
    }
    let x2 = vector::norm_sqr(x);
    if x2 == 0.0 {
        return Err(Error::param("x", "must be nonzero"));
    }
    let nf = n as f64;
    let sup = vector::max_abs_sqr(x);
    let pz = 1.0 - (1.0 - t).powi(2) * x2 / (x2 + (nf.powf(1.0 - delta) - 1.0) * sup);
    Ok(pz + eps * eps / (nf.powf(delta - 1.0) * t * x2))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RowBound {
    /// `(3/20)·|J|·n^δ·(1 − p)^(m−1)`.
    pub threshold: f64,
    /// `exp(−(3/80)·|J|·n^δ·(1 − p)^(m−1))`.
    pub prob: f64,
    /// Exact per-row membership probability `c_g·|J|·p·(1 − p)^(m−1)`.
    pub row_prob: f64,
}

/// Chernoff lower-tail bound for the number of clean rows over a block `J`.
pub fn row_bound_tail(j_size: usize, m: usize, delta: f64, n: usize) -> Result<RowBound> {
    check_delta(delta)?;
    if j_size == 0 || m == 0 {
        return Err(Error::param("j_size, m", "must both be at least 1"));
    }
    if j_size > m {
        return Err(Error::param("j_size", "block larger than the support"));
    }
    let nf = n as f64;
    let p = nf.powf(delta - 1.0);
    let keep = (1.0 - p).powi(m as i32 - 1);
    let base = j_size as f64 * nf.powf(delta) * keep;
    Ok(RowBound {
        threshold: 0.15 * base,
        prob: (-0.0375 * base).exp(),
        row_prob: C_G * j_size as f64 * p * keep,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HcStep {
    /// `1 + ⌊(d2 − 57√d1)·b/8⌋`.
    pub step_size: f64,
    /// Natural log of the union bound.
    pub log_bound: f64,
}

/// `57√d + 320·e^(c2)·K²·d`, the margin `d2` has to beat.
pub fn hc_margin(d: LogReal, c2: f64, k: f64) -> LogReal {
    d.sqrt().scale(57.0) + d.scale(320.0 * c2.exp() * k * k)
}

/// Log of the union bound over one layer `V(a, b, d1, d2)` of the highly
/// compressible class.
#[allow(clippy::too_many_arguments)]
pub fn hc_step_bound(n: f64, delta: f64, a: f64, b: f64, d1: f64, d2: f64, c2: f64, k: f64) -> Result<HcStep> {
    hc_step_bound_log(n, delta, a, b, LogReal::new(d1), LogReal::new(d2), c2, k)
}

#[allow(clippy::too_many_arguments)]
pub fn hc_step_bound_log(
    n: f64,
    delta: f64,
    a: f64,
    b: f64,
    d1: LogReal,
    d2: LogReal,
    c2: f64,
    k: f64,
) -> Result<HcStep> {
    check_delta(delta)?;
    if !(c2 > 0.0 && k > 0.0) {
        return Err(Error::param("c2, K", "must be positive"));
    }
    if !(a >= 1.0 && a <= c2 * n.powf(1.0 - delta) * (1.0 + 1e-12)) {
        return Err(Error::param("a", format!("{a} not in [1, c2·n^(1-δ)]")));
    }
    if !(b > 0.0) {
        return Err(Error::param("b", format!("{b} must be positive")));
    }
    if d1.is_zero() || !(hc_margin(d1, c2, k) < d2 && d2 < LogReal::ONE) {
        return Err(Error::param("d1, d2", "need 0 < 57√d1 + 320e^(c2)K²d1 < d2 < 1"));
    }
    let lead = d2
        .checked_sub(d1.sqrt().scale(57.0))
        .expect("margin checked above");
    let s = 1.0 + (lead.scale(b / 8.0)).value().floor();
    let log_bound = n.ln() - s * n.powf(delta) / (40.0 * c2.exp())
        + 2.0 * a * (3.0f64.ln() - 0.5 * d1.ln())
        + a * (1.0 + (n / a).ln());
    Ok(HcStep { step_size: s, log_bound })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IncompWitness {
    pub lambda0: f64,
    pub lambda1: f64,
}

impl IncompWitness {
    /// Number of coordinates with `|x_i|² ≥ 1/(λ1·n)`.
    pub fn qualifying(&self, x: &[C64]) -> usize {
        let floor = 1.0 / (self.lambda1 * x.len() as f64);
        x.iter().filter(|z| z.norm_sqr() >= floor).count()
    }

    /// Whether `x` has at least `λ0·n` qualifying coordinates.
    pub fn holds_for(&self, x: &[C64]) -> bool {
        self.qualifying(x) as f64 >= self.lambda0 * x.len() as f64
    }
}

/// `λ1 = 2/ε1`, `λ0 = ε1·c1/2`: coordinates below `ε1/(2n)` carry under half
/// of the IC mass, so at least `(ε1/2)·c1·n` coordinates sit in
/// `[ε1/(2n), 1/(c1·n)]`.
pub fn incompressible_witness(params: &ClassificationParams) -> Result<IncompWitness> {
    params.validate()?;
    Ok(IncompWitness {
        lambda0: params.eps1 * params.c1 / 2.0,
        lambda1: 2.0 / params.eps1,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailBounds {
    /// `ε·n`.
    pub ginibre_real: f64,
    /// `ε²·n²`.
    pub ginibre_complex: f64,
    /// `e^(−c·n^δ) + C·ε·n^((2−δ)/2)`.
    pub ru_specialized: f64,
    /// `e^(−c·n^δ) + C·ε²·n^(2−δ)`.
    pub main: f64,
}

pub fn theorem_tail_bounds(eps: f64, n: f64, delta: f64, c: f64, big_c: f64) -> Result<TailBounds> {
    check_delta(delta)?;
    if !(c > 0.0 && big_c > 0.0) {
        return Err(Error::param("c, C", "must be positive"));
    }
    if !(eps >= 0.0) {
        return Err(Error::param("eps", format!("{eps} must be nonnegative")));
    }
    let atom = (-c * n.powf(delta)).exp();
    Ok(TailBounds {
        ginibre_real: eps * n,
        ginibre_complex: eps * eps * n * n,
        ru_specialized: atom + big_c * eps * n.powf((2.0 - delta) / 2.0),
        main: atom + big_c * eps * eps * n.powf(2.0 - delta),
    })
}

/// Below this `ε` the `ε²` term is smaller than the `ε` term (equal `C`).
pub fn tail_crossover(n: f64, delta: f64) -> f64 {
    n.powf(-(2.0 - delta) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn small_ball_examples() {
        assert_eq!(complex_small_ball(0.0, 1.0).unwrap(), SmallBall { exact: 0.0, bound: 0.0 });
        let s = complex_small_ball(2.0, 4.0).unwrap();
        assert_relative_eq!(s.exact, 1.0 - (-1.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(s.exact, 0.632_120_558_828_557_7, max_relative = 1e-12);
        assert_eq!(s.bound, 1.0);
        assert!(complex_small_ball(1.0, 0.0).is_err());
    }

    #[test]
    fn paley_zygmund_examples() {
        assert_eq!(paley_zygmund_sparse_bound(&[1.0, 2.0], 1.0, 0.5, 9).unwrap(), 1.0);
        let v = paley_zygmund_sparse_bound(&[1.0; 4], 0.0, 0.5, 4).unwrap();
        assert_relative_eq!(v, 0.2, max_relative = 1e-14);
        assert!(paley_zygmund_sparse_bound(&[0.0; 3], 0.5, 0.5, 4).is_err());
    }

    #[test]
    fn dot_bound_uniform_substitution() {
        let n = 16usize;
        let x = vec![C64::new(0.25, 0.0); n];
        let (eps, t, delta) = (0.05, 0.3, 0.5);
        let pz = 1.0 - 0.49 * 1.0 / (1.0 + (4.0 - 1.0) / 16.0);
        let expected = pz + eps * eps * 4.0 / t;
        assert_relative_eq!(dot_small_ball_bound(&x, eps, t, delta, n).unwrap(), expected, max_relative = 1e-12);
        let near_one = dot_small_ball_bound(&x, 0.0, 1.0 - 1e-9, delta, n).unwrap();
        assert!((near_one - 1.0).abs() < 1e-8);
    }

    #[test]
    fn row_bound_examples() {
        assert_relative_eq!(C_G, (-1.0f64).exp(), max_relative = 1e-15);
        let n = 64;
        let r = row_bound_tail(n, n, 0.5, n).unwrap();
        let keep = (1.0 - 0.125f64).powi(63);
        assert_relative_eq!(r.threshold, 0.15 * 64.0 * 8.0 * keep, max_relative = 1e-12);
        let r1 = row_bound_tail(1, 1, 0.5, n).unwrap();
        assert_relative_eq!(r1.threshold, 0.15 * 8.0, max_relative = 1e-12);
        assert_relative_eq!(r1.row_prob, C_G * 0.125, max_relative = 1e-12);
    }

    #[test]
    fn hc_step_size_example() {
        let s = hc_step_bound(1e6, 0.5, 10.0, 100.0, 1e-6, 0.5, 1.0, 1.0).unwrap();
        assert_eq!(s.step_size, 6.0);
    }

    #[test]
    fn hc_step_rejects_bad_margins() {
        assert!(hc_step_bound(1e6, 0.5, 10.0, 100.0, 1e-2, 0.5, 1.0, 1.0).is_err());
        assert!(hc_step_bound(1e6, 0.5, 1e4, 100.0, 1e-6, 0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn hc_step_decreases_with_step_size() {
        let lo = hc_step_bound(1e6, 0.5, 10.0, 100.0, 1e-6, 0.5, 1.0, 1.0).unwrap();
        let hi = hc_step_bound(1e6, 0.5, 10.0, 1000.0, 1e-6, 0.5, 1.0, 1.0).unwrap();
        assert!(hi.step_size > lo.step_size);
        assert!(hi.log_bound < lo.log_bound);
    }

    #[test]
    fn witness_example() {
        let p = ClassificationParams::new(0.5, 1.0, 0.1, 0.2, 0.5).unwrap();
        let w = incompressible_witness(&p).unwrap();
        assert_relative_eq!(w.lambda0, 0.025, max_relative = 1e-14);
        assert_relative_eq!(w.lambda1, 20.0, max_relative = 1e-14);
        let x = vec![C64::new(0.25, 0.0); 16];
        assert_eq!(w.qualifying(&x), 16);
    }

    #[test]
    fn tail_bound_examples() {
        let z = theorem_tail_bounds(0.0, 100.0, 0.5, 1.0, 1.0).unwrap();
        assert_eq!((z.ginibre_real, z.ginibre_complex), (0.0, 0.0));
        assert_relative_eq!(z.main, (-10.0f64).exp(), max_relative = 1e-14);
        assert_eq!(z.main, z.ru_specialized);
        let u = theorem_tail_bounds(0.01, 100.0, 0.5, 1.0, 1.0).unwrap();
        assert_relative_eq!(u.ginibre_real, 1.0, max_relative = 1e-14);
        assert_relative_eq!(u.ginibre_complex, 1.0, max_relative = 1e-14);

        let n = 1e4;
        let x = tail_crossover(n, 0.5);
        assert_relative_eq!(x, 1e-3, max_relative = 1e-12);
        for eps in [1e-6, 1e-5, 1e-4, 9e-4] {
            let b = theorem_tail_bounds(eps, n, 0.5, 1.0, 1.0).unwrap();
            assert!(b.main < b.ru_specialized);
        }
    }

    proptest! {
        #[test]
        fn small_ball_exact_below_bound(eps in 0.0f64..10.0, s2 in 1e-3f64..100.0) {
            let s = complex_small_ball(eps, s2).unwrap();
            prop_assert!(s.exact <= s.bound);
        }

        #[test]
        fn small_ball_monotone(e1 in 0.0f64..5.0, d in 0.0f64..5.0, s2 in 0.1f64..10.0) {
            let a = complex_small_ball(e1, s2).unwrap();
            let b = complex_small_ball(e1 + d, s2).unwrap();
            prop_assert!(a.exact <= b.exact && a.bound <= b.bound);
        }

        #[test]
        fn paley_zygmund_in_unit_interval(
            a in proptest::collection::vec(0.0f64..5.0, 1..30),
            t in 0.0f64..=1.0,
            delta in 0.05f64..0.95,
            n in 1usize..10_000,
        ) {
            prop_assume!(a.iter().sum::<f64>() > 0.0);
            let v = paley_zygmund_sparse_bound(&a, t, delta, n).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn tail_bounds_monotone_in_eps(e in 0.0f64..1.0, d in 0.0f64..1.0, n in 2.0f64..1e5) {
            let a = theorem_tail_bounds(e, n, 0.5, 1.0, 1.0).unwrap();
            let b = theorem_tail_bounds(e + d, n, 0.5, 1.0, 1.0).unwrap();
            prop_assert!(a.main <= b.main && a.ru_specialized <= b.ru_specialized);
            prop_assert!(a.ginibre_real <= b.ginibre_real && a.ginibre_complex <= b.ginibre_complex);
        }
    }
}
