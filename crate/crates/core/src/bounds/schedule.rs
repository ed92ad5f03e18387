//! Layered cover of the highly compressible class.
//!
//! Layer `k` is `V(a_k, b_k, d1_k, d2_k)` with `a_k = n^(kδ/2)` for `k < m`,
//! `a_m = c2·n^(1−δ)`, `b_1 = 1`, `b_k = a_(k−1)`. The masses are chosen
//! backwards from `d1_m = ε1 + ε2`: `d2_k = 2·(57√d1_k + 320·e^(c2)·K²·d1_k)`
//! and `d1_(k−1) = d1_k + d2_k`, until `d2_1 = 1 − d1_1` closes the chain.

use serde::Serialize;

use super::{hc_margin, hc_step_bound_log, HcStep, LogReal};
use crate::{Error, Result};

/// Slack factor of each `d2_k` over its margin.
pub const SLACK: f64 = 2.0;

const LOG_TOL: f64 = 1e-12;

/// Largest `m` with `(m − 1)·δ/2 < 1 − δ`, i.e. `(m + 1)·δ < 2`.
pub fn schedule_depth(delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", format!("{delta} not in (0, 1)")));
    }
    let r = 2.0 / delta;
    let nearest = r.round();
    // (m + 1) < 2/δ; when 2/δ is an integer up to rounding, m + 1 stops one short.
    let m = if (r - nearest).abs() < 1e-9 {
        nearest - 2.0
    } else {
        r.ceil() - 2.0
    };
    Ok(m.max(1.0) as usize)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HcSchedule {
    pub n: f64,
    pub delta: f64,
    pub c2: f64,
    #[serde(rename = "K")]
    pub k_const: f64,
    pub m: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub d1: Vec<LogReal>,
    pub d2: Vec<LogReal>,
}

/// Backward recursion; fails with the first constraint the chain breaks.
fn recurse(m: usize, d1m: LogReal, c2: f64, k: f64) -> std::result::Result<(Vec<LogReal>, Vec<LogReal>), String> {
    let mut d1 = vec![LogReal::ZERO; m];
    let mut d2 = vec![LogReal::ZERO; m];
    d1[m - 1] = d1m;
    for idx in (1..m).rev() {
        d2[idx] = hc_margin(d1[idx], c2, k).scale(SLACK);
        d1[idx - 1] = d1[idx] + d2[idx];
        if d1[idx - 1] >= LogReal::ONE {
            return Err(format!("d1_{} reaches 1", idx));
        }
    }
    d2[0] = LogReal::ONE
        .checked_sub(d1[0])
        .ok_or_else(|| "d1_1 reaches 1".to_string())?;
    if !(d2[0] > hc_margin(d1[0], c2, k)) {
        return Err(format!(
            "d2_1 = 1 − d1_1 = {} does not exceed its margin {}",
            d2[0],
            hc_margin(d1[0], c2, k)
        ));
    }
    Ok((d1, d2))
}

/// Largest `d1_m` (to bisection tolerance `1e-6` in log space) for which the
/// backward recursion closes. Independent of `n`.
pub fn max_feasible_d1m(delta: f64, c2: f64, k: f64) -> Result<LogReal> {
    let m = schedule_depth(delta)?;
    let feasible = |ln: f64| recurse(m, LogReal::from_ln(ln), c2, k).is_ok();
    let mut lo = -1.0;
    while !feasible(lo) {
        lo *= 2.0;
        if lo < -1e300 {
            return Err(Error::Infeasible("no feasible d1_m for the schedule".into()));
        }
    }
    let mut hi = 0.0;
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(LogReal::from_ln(lo))
}

pub fn build_hc_schedule(n: f64, delta: f64, c2: f64, k: f64, eps1: LogReal, eps2: LogReal) -> Result<HcSchedule> {
    let m = schedule_depth(delta)?;
    if !(c2 > 0.0 && k > 0.0) {
        return Err(Error::param("c2, K", "must be positive"));
    }
    if !(n >= 1.0) {
        return Err(Error::param("n", format!("{n} must be at least 1")));
    }
    let (d1, d2) = recurse(m, eps1 + eps2, c2, k).map_err(Error::Infeasible)?;
    let a: Vec<f64> = (1..=m)
        .map(|j| {
            if j < m {
                n.powf(j as f64 * delta / 2.0)
            } else {
                c2 * n.powf(1.0 - delta)
            }
        })
        .collect();
    let b: Vec<f64> = (0..m).map(|i| if i == 0 { 1.0 } else { a[i - 1] }).collect();
    let s = HcSchedule {
        n,
        delta,
        c2,
        k_const: k,
        m,
        a,
        b,
        d1,
        d2,
    };
    if let Some(v) = s.violations(eps1 + eps2).into_iter().next() {
        return Err(Error::Infeasible(v));
    }
    Ok(s)
}

impl HcSchedule {
    /// Every invariant that fails, as a message; empty when the schedule is
    /// valid for `d1_m = target`.
    pub fn violations(&self, target: LogReal) -> Vec<String> {
        let mut out = Vec::new();
        let (m, delta) = (self.m as f64, self.delta);
        if !((m - 1.0) * delta / 2.0 < 1.0 - delta + 1e-12) {
            out.push(format!("(m−1)δ/2 < 1−δ fails for m = {}", self.m));
        }
        if !(m * delta / 2.0 >= 1.0 - delta - 1e-12) {
            out.push(format!("m = {} is not maximal", self.m));
        }
        for j in 0..self.m {
            let want = if j + 1 < self.m {
                self.n.powf((j + 1) as f64 * delta / 2.0)
            } else {
                self.c2 * self.n.powf(1.0 - delta)
            };
            if (self.a[j] - want).abs() > 1e-12 * want {
                out.push(format!("a_{} mismatch", j + 1));
            }
            let want_b = if j == 0 { 1.0 } else { self.a[j - 1] };
            if self.b[j] != want_b {
                out.push(format!("b_{} mismatch", j + 1));
            }
            if !(self.d2[j] > hc_margin(self.d1[j], self.c2, self.k_const)) {
                out.push(format!("d2_{} does not exceed 57√d1 + 320e^(c2)K²d1", j + 1));
            }
        }
        if ((self.d1[0] + self.d2[0]).ln()).abs() > LOG_TOL {
            out.push("d1_1 + d2_1 ≠ 1".into());
        }
        if (self.d1[self.m - 1].ln() - target.ln()).abs() > LOG_TOL * target.ln().abs().max(1.0) {
            out.push("d1_m ≠ ε1 + ε2".into());
        }
        for j in 0..self.m - 1 {
            let sum = self.d1[j + 1] + self.d2[j + 1];
            if (self.d1[j].ln() - sum.ln()).abs() > LOG_TOL * sum.ln().abs().max(1.0) {
                out.push(format!("d1_{} ≠ d1_{} + d2_{}", j + 1, j + 2, j + 2));
            }
        }
        out
    }

    /// Union-bound log-probability of layer `k` (1-based).
    pub fn layer_bound(&self, k: usize) -> Result<HcStep> {
        let i = k - 1;
        hc_step_bound_log(self.n, self.delta, self.a[i], self.b[i], self.d1[i], self.d2[i], self.c2, self.k_const)
    }
}
