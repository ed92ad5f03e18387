//! Geometry of the unit sphere used by the tail argument.
//!
//! A unit vector is sorted into one of three classes by how its squared
//! coordinate mass spreads across two thresholds, `1/(c1·n)` and
//! `1/(c2·n^(1-δ))`. Bands are half-open `(lo, hi]` everywhere.
//!
//! The three defining sets overlap, so the verdict is taken in priority order
//! IC, then MC, then HC. Under that order the HC test is implied by the
//! failure of the other two whenever the small threshold does not exceed the
//! low one, and the classifier reports an inconsistency otherwise.
//!
//! The sparse-net pipeline approximates a member of
//! `V(a, b, d1, d2) = {x : mass(|x_i|² ≤ 1/a) < d1, mass(1/a < |x_i|² ≤ 1/b) ≥ d2}`
//! by an `a`-sparse point; its step 4 rounds the surviving entries onto a
//! square lattice of pitch `√d1 / (2√a)` in each of the real and imaginary
//! parts and renormalizes.

use serde::{Deserialize, Serialize};

use crate::rng::{SeedPath, Stream};
use crate::{vector, Error, Result, C64};

/// Tolerance on `‖x‖₂ = 1` for inputs declared to be unit vectors.
pub const UNIT_TOL: f64 = 1e-8;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationParams {
    pub c1: f64,
    pub c2: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub delta: f64,
}

impl ClassificationParams {
    pub fn new(c1: f64, c2: f64, eps1: f64, eps2: f64, delta: f64) -> Result<Self> {
        let p = Self {
            c1,
            c2,
            eps1,
            eps2,
            delta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("{v} must be positive")))
            }
        };
        positive("c1", self.c1)?;
        positive("c2", self.c2)?;
        positive("eps1", self.eps1)?;
        positive("eps2", self.eps2)?;
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::param("delta", format!("{} not in (0, 1)", self.delta)));
        }
        if self.eps1 + self.eps2 >= 1.0 {
            return Err(Error::param("eps1 + eps2", "must be below 1"));
        }
        Ok(())
    }

    /// `1 / (c1·n)`.
    pub fn small_threshold(&self, n: usize) -> f64 {
        1.0 / (self.c1 * n as f64)
    }

    /// `1 / (c2·n^(1-δ))`.
    pub fn low_threshold(&self, n: usize) -> f64 {
        1.0 / (self.c2 * (n as f64).powf(1.0 - self.delta))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Hc,
    Mc,
    Ic,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Hc => "HC",
            Verdict::Mc => "MC",
            Verdict::Ic => "IC",
        })
    }
}

impl std::str::FromStr for Verdict {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "HC" => Ok(Verdict::Hc),
            "MC" => Ok(Verdict::Mc),
            "IC" => Ok(Verdict::Ic),
            other => Err(Error::param("class", format!("unknown class `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SphereClass {
    pub verdict: Verdict,
    pub small_mass: f64,
    pub band_mass: f64,
    pub low_mass: f64,
}

/// `Σ |x_i|²` over `lo < |x_i|² ≤ hi`; an empty band gives 0.
pub fn mass_in_band(x: &[C64], lo: f64, hi: f64) -> f64 {
    x.iter()
        .map(|z| z.norm_sqr())
        .filter(|&m| lo < m && m <= hi)
        .sum()
}

/// `Σ |x_i|²` over `|x_i|² ≤ hi`.
pub fn mass_at_most(x: &[C64], hi: f64) -> f64 {
    x.iter().map(|z| z.norm_sqr()).filter(|&m| m <= hi).sum()
}

fn check_unit(x: &[C64]) -> Result<()> {
    let r = vector::norm(x);
    if (r - 1.0).abs() <= UNIT_TOL {
        Ok(())
    } else {
        Err(Error::param("x", format!("norm {r} is not 1")))
    }
}

pub fn classify_vector(x: &[C64], params: &ClassificationParams) -> Result<SphereClass> {
    params.validate()?;
    check_unit(x)?;
    let n = x.len();
    let small = params.small_threshold(n);
    let low = params.low_threshold(n);
    let small_mass = mass_at_most(x, small);
    let band_mass = mass_in_band(x, small, low);
    let low_mass = mass_at_most(x, low);

    let verdict = if small_mass >= params.eps1 {
        Verdict::Ic
    } else if band_mass >= params.eps2 {
        Verdict::Mc
    } else if low_mass < params.eps1 + params.eps2 {
        Verdict::Hc
    } else {
        return Err(Error::Classification(format!(
            "no membership test holds: small {small_mass}, band {band_mass}, low {low_mass}"
        )));
    };
    Ok(SphereClass {
        verdict,
        small_mass,
        band_mass,
        low_mass,
    })
}

/// Zeroes every entry with `|x_i|² > thresh`.
pub fn zero_out_above(x: &[C64], thresh: f64) -> Result<Vec<C64>> {
    if !(thresh > 0.0) {
        return Err(Error::param("thresh", format!("{thresh} must be positive")));
    }
    Ok(x.iter()
        .map(|&z| if z.norm_sqr() <= thresh { z } else { ZERO })
        .collect())
}

/// Parameters of the set `V`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VParams {
    pub a: usize,
    pub b: f64,
    pub d1: f64,
    pub d2: f64,
}

impl VParams {
    pub fn new(a: usize, b: f64, d1: f64, d2: f64) -> Result<Self> {
        if a == 0 {
            return Err(Error::param("a", "must be at least 1"));
        }
        if !(b > 0.0) {
            return Err(Error::param("b", format!("{b} must be positive")));
        }
        if !(d1 > 0.0 && d1 <= 0.1) {
            return Err(Error::param("d1", format!("{d1} not in (0, 0.1]")));
        }
        if !(57.0 * d1.sqrt() < d2 && d2 < 1.0) {
            return Err(Error::param("d2", format!("need 57·√d1 < d2 < 1, got d2 = {d2}")));
        }
        Ok(Self { a, b, d1, d2 })
    }

    pub fn lower_mass(&self, x: &[C64]) -> f64 {
        mass_at_most(x, 1.0 / self.a as f64)
    }

    pub fn band_mass(&self, x: &[C64]) -> f64 {
        mass_in_band(x, 1.0 / self.a as f64, 1.0 / self.b)
    }

    /// Lower edge of the band certified for the net point, `1/(2a)`.
    pub fn net_band_lo(&self) -> f64 {
        0.5 / self.a as f64
    }

    /// Upper edge of the band certified for the net point, `4/b`.
    pub fn net_band_hi(&self) -> f64 {
        4.0 / self.b
    }
}

pub fn is_v_member(x: &[C64], v: &VParams) -> bool {
    (vector::norm(x) - 1.0).abs() <= UNIT_TOL && v.lower_mass(x) < v.d1 && v.band_mass(x) >= v.d2
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetCertificate {
    pub a: usize,
    pub b: f64,
    pub d1: f64,
    pub d2: f64,
    /// `‖x − x³‖₂`.
    pub dist: f64,
    /// Mass of `x³` in `(1/(2a), 4/b]`.
    pub band_mass_x3: f64,
    pub support_size: usize,
    /// `‖x⁰ − x¹‖₂`, `‖x¹ − x²‖₂`, `‖x² − x³‖₂`.
    pub step_dists: [f64; 3],
}

impl NetCertificate {
    pub fn dist_ok(&self) -> bool {
        self.dist <= 3.0 * self.d1.sqrt()
    }

    pub fn band_ok(&self) -> bool {
        self.band_mass_x3 >= self.d2 - 57.0 * self.d1.sqrt()
    }

    pub fn sparsity_ok(&self) -> bool {
        self.support_size <= self.a
    }

    pub fn holds(&self) -> bool {
        self.dist_ok() && self.band_ok() && self.sparsity_ok()
    }
}

/// Runs the four-step approximation and measures the result.
pub fn net_approximate(x: &[C64], v: &VParams) -> Result<(Vec<C64>, NetCertificate)> {
    let v = VParams::new(v.a, v.b, v.d1, v.d2)?;
    if !is_v_member(x, &v) {
        return Err(Error::param("x", "not a member of V for the given parameters"));
    }
    let inv_a = 1.0 / v.a as f64;

    let x1: Vec<C64> = x
        .iter()
        .map(|&z| if z.norm_sqr() > inv_a { z } else { ZERO })
        .collect();
    let r1 = vector::norm(&x1);
    assert!(r1 > 0.0, "a member of V keeps positive mass above 1/a");
    let x2 = vector::scale(&x1, 1.0 / r1);

    let pitch = v.d1.sqrt() / (2.0 * (v.a as f64).sqrt());
    let snap = |t: f64| (t / pitch).round() * pitch;
    let rounded: Vec<C64> = x2
        .iter()
        .map(|z| if *z == ZERO { ZERO } else { C64::new(snap(z.re), snap(z.im)) })
        .collect();
    let x3 = vector::normalized(&rounded);

    let step_dists = [
        vector::norm(&vector::sub(x, &x1)),
        vector::norm(&vector::sub(&x1, &x2)),
        vector::norm(&vector::sub(&x2, &x3)),
    ];
    let cert = NetCertificate {
        a: v.a,
        b: v.b,
        d1: v.d1,
        d2: v.d2,
        dist: vector::norm(&vector::sub(x, &x3)),
        band_mass_x3: mass_in_band(&x3, v.net_band_lo(), v.net_band_hi()),
        support_size: x3.iter().filter(|z| **z != ZERO).count(),
        step_dists,
    };
    Ok((x3, cert))
}

/// Natural log of `(3/√d1)^(2a) · (n·e/a)^a`.
pub fn net_cardinality_bound(n: usize, a: usize, d1: f64) -> Result<f64> {
    if a == 0 || a > n {
        return Err(Error::param("a", format!("need 1 <= a <= n, got a = {a}, n = {n}")));
    }
    if !(d1 > 0.0 && d1 <= 1.0) {
        return Err(Error::param("d1", format!("{d1} not in (0, 1]")));
    }
    let (nf, af) = (n as f64, a as f64);
    Ok(2.0 * af * (3.0 / d1.sqrt()).ln() + af * (1.0 + (nf / af).ln()))
}

/// Squared-magnitude budget for a group of coordinates in `(lo, hi]`.
#[derive(Clone, Copy, Debug)]
struct MassGroup {
    mass: f64,
    lo: f64,
    hi: f64,
}

/// Feasible coordinate counts for a group, capped by `cap`.
fn count_range(g: &MassGroup, cap: usize) -> Option<(usize, usize)> {
    if g.mass <= 0.0 {
        return Some((0, 0));
    }
    let hi = g.hi.min(1.0);
    if hi <= g.lo {
        return None;
    }
    let kmin = (g.mass / hi - 1e-12).ceil().max(1.0) as usize;
    let kmax = if g.lo > 0.0 {
        ((g.mass / g.lo).ceil() as usize).saturating_sub(1).min(cap)
    } else {
        cap
    };
    (kmin <= kmax).then_some((kmin, kmax))
}

/// Splits `g.mass` over `k` squared magnitudes inside `(lo, hi]`.
fn fill_group(s: &mut Stream, g: &MassGroup, k: usize) -> Vec<f64> {
    let hi = g.hi.min(1.0);
    let spare = g.mass - k as f64 * g.lo;
    for _ in 0..64 {
        let w = s.simplex(k);
        let vals: Vec<f64> = w.iter().map(|wi| g.lo + spare * wi).collect();
        if vals.iter().all(|&v| v > g.lo && v <= hi) {
            return vals;
        }
    }
    vec![g.mass / k as f64; k]
}

/// Places the groups on disjoint random coordinates with random phases.
fn realize(s: &mut Stream, groups: &[MassGroup], n: usize) -> Option<Vec<C64>> {
    let mut sizes = Vec::with_capacity(groups.len());
    let mut used = 0usize;
    for (i, g) in groups.iter().enumerate() {
        // Leave at least one slot for each later group that needs one.
        let later = groups[i + 1..].iter().filter(|h| h.mass > 0.0).count();
        let cap = n.checked_sub(used + later)?;
        let (kmin, kmax) = count_range(g, cap)?;
        let k = if kmax > kmin { s.range_inclusive(kmin, kmax) } else { kmin };
        used += k;
        sizes.push(k);
    }
    let slots = s.choose_indices(n, used);
    let mut x = vec![ZERO; n];
    let mut next = slots.into_iter();
    for (g, &k) in groups.iter().zip(&sizes) {
        if k == 0 {
            continue;
        }
        for m in fill_group(s, g, k) {
            let i = next.next().expect("slot count matches group sizes");
            x[i] = s.phase() * m.sqrt();
        }
    }
    let r = vector::norm(&x);
    (r > 0.0).then(|| vector::scale(&x, 1.0 / r))
}

const SAMPLE_ATTEMPTS: usize = 200;

/// Random member of `V`: the lower, band and upper masses are drawn uniformly
/// from the feasible region, spread over random coordinates, and given
/// uniform phases.
pub fn sample_v_member(n: usize, v: &VParams, seed: &SeedPath) -> Result<Vec<C64>> {
    let v = VParams::new(v.a, v.b, v.d1, v.d2)?;
    let mut s = seed.stream();
    let inv_a = 1.0 / v.a as f64;
    let inv_b = 1.0 / v.b;
    for _ in 0..SAMPLE_ATTEMPTS {
        let m_low = v.d1 * s.uniform();
        let m_band = if inv_b >= 1.0 {
            1.0 - m_low
        } else {
            let mb = s.uniform_in(v.d2, 1.0);
            if mb > 1.0 - m_low {
                continue;
            }
            mb
        };
        let m_high = (1.0 - m_low - m_band).max(0.0);
        let groups = [
            MassGroup { mass: m_band, lo: inv_a, hi: inv_b },
            MassGroup { mass: m_high, lo: inv_b, hi: 1.0 },
            MassGroup { mass: m_low, lo: 0.0, hi: inv_a },
        ];
        if let Some(x) = realize(&mut s, &groups, n) {
            if is_v_member(&x, &v) {
                return Ok(x);
            }
        }
    }
    Err(Error::Infeasible(format!(
        "could not realize a member of V(a={}, b={}, d1={}, d2={}) in dimension {n}",
        v.a, v.b, v.d1, v.d2
    )))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassProfile {
    /// Equal-modulus coordinates on as simple a support as the class allows.
    Uniform,
    /// Group masses drawn at random from the class's feasible region.
    Random,
}

fn uniform_on(s: &mut Stream, n: usize, k: usize) -> Vec<C64> {
    let amp = 1.0 / (k as f64).sqrt();
    let mut x = vec![ZERO; n];
    for i in s.choose_indices(n, k) {
        x[i] = s.phase() * amp;
    }
    x
}

fn class_groups(
    s: &mut Stream,
    verdict: Verdict,
    p: &ClassificationParams,
    small: f64,
    low: f64,
) -> Vec<MassGroup> {
    let top = low.max(small);
    match verdict {
        Verdict::Ic => {
            let m_small = if small >= 1.0 { 1.0 } else { s.uniform_in(p.eps1, 1.0) };
            vec![
                MassGroup { mass: m_small, lo: 0.0, hi: small },
                MassGroup { mass: 1.0 - m_small, lo: small, hi: 1.0 },
            ]
        }
        Verdict::Mc => {
            let m_small = p.eps1 * s.uniform();
            let m_band = s.uniform_in(p.eps2, 1.0 - m_small);
            vec![
                MassGroup { mass: m_band, lo: small, hi: low },
                MassGroup { mass: 1.0 - m_small - m_band, lo: top, hi: 1.0 },
                MassGroup { mass: m_small, lo: 0.0, hi: small },
            ]
        }
        Verdict::Hc => {
            let m_small = p.eps1 * s.uniform();
            let m_band = if low > small { p.eps2 * s.uniform() } else { 0.0 };
            vec![
                MassGroup { mass: 1.0 - m_small - m_band, lo: top, hi: 1.0 },
                MassGroup { mass: m_band, lo: small, hi: low },
                MassGroup { mass: m_small, lo: 0.0, hi: small },
            ]
        }
    }
}

/// A unit vector whose classification equals `verdict`.
pub fn sample_class_member(
    verdict: Verdict,
    params: &ClassificationParams,
    n: usize,
    profile: MassProfile,
    seed: &SeedPath,
) -> Result<Vec<C64>> {
    params.validate()?;
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let small = params.small_threshold(n);
    let low = params.low_threshold(n);
    let mut s = seed.stream();
    let infeasible = || {
        Error::Infeasible(format!("class {verdict} cannot be realized at n = {n} with {params:?}"))
    };

    let accept = |x: &[C64]| {
        classify_vector(x, params)
            .map(|c| c.verdict == verdict)
            .unwrap_or(false)
    };

    if profile == MassProfile::Uniform {
        let nf = n as f64;
        // k equal coordinates of mass 1/k.
        let k = match verdict {
            Verdict::Ic => n,
            Verdict::Mc => {
                let lo = (1.0 / low).ceil().max(1.0);
                let hi = (1.0 / small).ceil() - 1.0;
                if lo > hi.min(nf) {
                    return Err(infeasible());
                }
                lo as usize
            }
            Verdict::Hc => 1,
        };
        let x = uniform_on(&mut s, n, k);
        return if accept(&x) { Ok(x) } else { Err(infeasible()) };
    }

    for _ in 0..SAMPLE_ATTEMPTS {
        let groups = class_groups(&mut s, verdict, params, small, low);
        if let Some(x) = realize(&mut s, &groups, n) {
            if accept(&x) {
                return Ok(x);
            }
        }
    }
    Err(infeasible())
}
