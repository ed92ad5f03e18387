//! Constants for the moderately compressible class.
//!
//! Writing `D(n) = 1 + 4/c2 − 4/(c2·n^(1−δ))`, `q = ε2/D`, `u = ε2 − 57√ε1`
//! and `L(x) = −ln(1 − x)`, the choices are made in order:
//!
//! 1. `c2 = 1` (overridable) and `t = 1 − 1/√2`, so `(1 − t)² = 1/2`.
//! 2. `ε2` is half the largest `d1_m` the layered schedule accepts.
//! 3. `δ′(1 − ln δ′)/(1 − δ′) < L(0.4q) − L(0.3q)`.
//! 4. `16K²ε1/(t·u·δ′) < ((1 − t)²·u − 0.4ε2)/D`.
//! 5. `2c1·ln(3/√ε1) < (1 − δ′)·(L(0.3q) − L(0.2q))` and
//!    `c1(1 − ln c1)/(1 − δ′) < L(0.2q) − L(0.1q)`.
//!
//! `D(n)` increases to `1 + 4/c2`, and every right-hand side shrinks with
//! `D`, so constants chosen at the limit hold for every finite `n`.

use serde::Serialize;

use super::schedule::{build_hc_schedule, max_feasible_d1m};
use super::LogReal;
use crate::{Error, Result};

const BISECT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McConstants {
    pub c1: LogReal,
    pub c2: f64,
    pub eps1: LogReal,
    pub eps2: LogReal,
    pub t: f64,
    pub delta_prime: LogReal,
    #[serde(rename = "K")]
    pub k_const: f64,
    pub delta: f64,
    pub n_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub id: &'static str,
    pub lhs: LogReal,
    pub rhs: LogReal,
    pub holds: bool,
}

impl InequalityCheck {
    fn new(id: &'static str, lhs: LogReal, rhs: LogReal) -> Self {
        Self {
            id,
            lhs,
            rhs,
            holds: lhs < rhs,
        }
    }
}

fn nonneg(x: f64) -> LogReal {
    if x > 0.0 {
        LogReal::new(x)
    } else {
        LogReal::ZERO
    }
}

fn l(x: LogReal) -> LogReal {
    LogReal::neg_log1p(x)
}

/// `D(n)`; `None` gives the limit `1 + 4/c2`.
fn denom(c2: f64, delta: f64, n: Option<f64>) -> f64 {
    let base = 1.0 + 4.0 / c2;
    match n {
        Some(n) => base - 4.0 / (c2 * n.powf(1.0 - delta)),
        None => base,
    }
}

/// `L(a·q) − L(b·q)` for `a > b`, zero when it is not positive.
fn l_gap(q: LogReal, a: f64, b: f64) -> LogReal {
    l(q.scale(a)).checked_sub(l(q.scale(b))).unwrap_or(LogReal::ZERO)
}

/// `x(1 − ln x)/(1 − x)`.
fn entropy_term(x: LogReal) -> LogReal {
    if x >= LogReal::ONE {
        return LogReal::from_ln(f64::INFINITY);
    }
    let one_minus = LogReal::ONE.checked_sub(x).expect("x < 1");
    x * nonneg(1.0 - x.ln()) / one_minus
}

struct Step4 {
    lhs: LogReal,
    rhs: LogReal,
    /// `(1 − t)²·u/D − 16K²ε1/(t·u·δ′)`, when positive.
    y: Option<LogReal>,
}

#[allow(clippy::too_many_arguments)]
fn step4(eps1: LogReal, eps2: LogReal, dp: LogReal, t: f64, k: f64, d: f64) -> Step4 {
    let inf = LogReal::from_ln(f64::INFINITY);
    let u = eps2.checked_sub(eps1.sqrt().scale(57.0));
    let Some(u) = u else {
        return Step4 {
            lhs: inf,
            rhs: LogReal::ZERO,
            y: None,
        };
    };
    let lhs = eps1.scale(16.0 * k * k) / (nonneg(t) * u * dp);
    let lead = u * nonneg((1.0 - t).powi(2));
    let rhs = lead
        .checked_sub(eps2.scale(0.4))
        .map(|v| v.scale(1.0 / d))
        .unwrap_or(LogReal::ZERO);
    let y = lead.scale(1.0 / d).checked_sub(lhs);
    Step4 { lhs, rhs, y }
}

/// Largest `ln x ≤ hi` (to [`BISECT_TOL`]) accepted by a monotone predicate.
fn bisect_ln(hi: f64, step: u8, feasible: impl Fn(f64) -> bool) -> Result<f64> {
    if feasible(hi) {
        return Ok(hi);
    }
    let mut width = 1.0;
    let mut lo = hi - width;
    while !feasible(lo) {
        width *= 2.0;
        lo = hi - width;
        if width > 1e300 {
            return Err(Error::InfeasibleStep {
                step,
                reason: "no feasible value above the f64 exponent range".into(),
            });
        }
    }
    let mut hi = hi;
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

pub fn choose_mc_constants(k: f64, delta: f64, n_min: f64) -> Result<McConstants> {
    choose_mc_constants_with(k, delta, n_min, 1.0)
}

pub fn choose_mc_constants_with(k: f64, delta: f64, n_min: f64, c2: f64) -> Result<McConstants> {
    if !(k > 0.0) {
        return Err(Error::param("K", format!("{k} must be positive")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", format!("{delta} not in (0, 1)")));
    }
    if !(c2 > 0.0) {
        return Err(Error::param("c2", format!("{c2} must be positive")));
    }
    if !(n_min.powf(1.0 - delta) >= 2.0) {
        return Err(Error::param("n_min", format!("{n_min}^(1−δ) is below 2")));
    }
    // Step 1.
    let t = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
    // Step 2.
    let top = max_feasible_d1m(delta, c2, k).map_err(|e| Error::InfeasibleStep {
        step: 2,
        reason: e.to_string(),
    })?;
    let eps2 = top.scale(0.5);
    let d = denom(c2, delta, None);
    let q = eps2.scale(1.0 / d);
    // Step 3.
    let gap3 = l_gap(q, 0.4, 0.3);
    let dp_ln = bisect_ln(0.5f64.ln(), 3, |x| entropy_term(LogReal::from_ln(x)) < gap3)?;
    let delta_prime = LogReal::from_ln(dp_ln);
    // Step 4: u > 0.8ε2 needs √ε1 < ε2/285.
    let eps1_hi = 2.0 * (eps2.ln() - 285f64.ln());
    let eps1_ln = bisect_ln(eps1_hi, 4, |x| {
        let s = step4(LogReal::from_ln(x), eps2, delta_prime, t, k, d);
        s.lhs < s.rhs
    })?;
    let eps1 = LogReal::from_ln(eps1_ln);
    // Step 5.
    let keep = LogReal::ONE.checked_sub(delta_prime).expect("δ′ < 1");
    let gap5a = keep * l_gap(q, 0.3, 0.2);
    let gap5b = l_gap(q, 0.2, 0.1);
    let cover = nonneg((LogReal::new(3.0) / eps1.sqrt()).ln());
    let c1_ln = bisect_ln(0.5f64.ln(), 5, |x| {
        let c1 = LogReal::from_ln(x);
        c1.scale(2.0) * cover < gap5a && c1 * nonneg(1.0 - x) / keep < gap5b
    })?;
    let c = McConstants {
        c1: LogReal::from_ln(c1_ln),
        c2,
        eps1,
        eps2,
        t,
        delta_prime,
        k_const: k,
        delta,
        n_min,
    };
    for n in [Some(n_min), None] {
        if let Some(row) = verify_mc_constants(&c, n).into_iter().find(|r| !r.holds) {
            return Err(Error::InfeasibleStep {
                step: step_index(row.id),
                reason: format!("{} fails after selection: {} ≥ {}", row.id, row.lhs, row.rhs),
            });
        }
    }
    Ok(c)
}

fn step_index(id: &str) -> u8 {
    match id {
        "step1" => 1,
        "step2" => 2,
        "step3" => 3,
        "step4" => 4,
        "step5a" | "step5b" => 5,
        _ => 6,
    }
}

/// Both sides of every selection inequality at dimension `n` (`None` for the
/// `n → ∞` limit), plus the combined per-coordinate exponent
/// `2c1·ln(3/√ε1) + c1(1 − ln c1) + δ′(1 − ln δ′) < (1 − δ′)·L(y)`.
pub fn verify_mc_constants(c: &McConstants, n: Option<f64>) -> Vec<InequalityCheck> {
    let d = denom(c.c2, c.delta, n);
    let q = c.eps2.scale(1.0 / d);
    let mut rows = Vec::with_capacity(7);

    let dev = ((1.0 - c.t).powi(2) - 0.5).abs();
    rows.push(InequalityCheck::new("step1", nonneg(dev), LogReal::new(1e-12)));

    let sum = c.eps1 + c.eps2;
    let step2 = match max_feasible_d1m(c.delta, c.c2, c.k_const) {
        Ok(top) => {
            let builds = build_hc_schedule(n.unwrap_or(c.n_min), c.delta, c.c2, c.k_const, c.eps1, c.eps2).is_ok();
            let mut row = InequalityCheck::new("step2", sum, top);
            row.holds = row.holds && c.eps1 < c.eps2 && builds;
            row
        }
        Err(_) => InequalityCheck::new("step2", sum, LogReal::ZERO),
    };
    rows.push(step2);

    rows.push(InequalityCheck::new("step3", entropy_term(c.delta_prime), l_gap(q, 0.4, 0.3)));

    let s4 = step4(c.eps1, c.eps2, c.delta_prime, c.t, c.k_const, d);
    rows.push(InequalityCheck::new("step4", s4.lhs, s4.rhs));

    let keep = LogReal::ONE.checked_sub(c.delta_prime).unwrap_or(LogReal::ZERO);
    let cover = nonneg((LogReal::new(3.0) / c.eps1.sqrt()).ln());
    let c1_term = c.c1 * nonneg(1.0 - c.c1.ln());
    rows.push(InequalityCheck::new("step5a", c.c1.scale(2.0) * cover, keep * l_gap(q, 0.3, 0.2)));
    rows.push(InequalityCheck::new("step5b", c1_term / keep, l_gap(q, 0.2, 0.1)));

    let dp_term = c.delta_prime * nonneg(1.0 - c.delta_prime.ln());
    let lhs = c.c1.scale(2.0) * cover + c1_term + dp_term;
    let rhs = match s4.y {
        Some(y) => keep * l(y),
        None => LogReal::ZERO,
    };
    rows.push(InequalityCheck::new("product", lhs, rhs));
    rows
}
