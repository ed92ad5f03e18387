//! Monte Carlo checks of the individual probability estimates.

use serde::Serialize;

use crate::bounds::{complex_small_ball, dot_small_ball_bound, paley_zygmund_sparse_bound};
use crate::ensemble::{assemble_sparse_matrix, sample_sparse_column, sparsity, EnsembleSpec};
use crate::exec::{map_indices, ExecMode};
use crate::rng::SeedPath;
use crate::sphere::{net_approximate, sample_v_member, NetCertificate, VParams};
use crate::stats::{pooled_se, Proportion};
use crate::{vector, Error, Result, C64};

/// Samples per random stream in the chunked experiments.
const CHUNK: u64 = 1000;

/// Runs `per_sample` on `samples` draws split into fixed chunks, one stream
/// per chunk, and returns the per-threshold hit counts.
fn chunked_counts<F>(mode: ExecMode, samples: u64, seed: &SeedPath, slots: usize, per_sample: F) -> Vec<u64>
where
    F: Fn(&mut crate::rng::Stream, &mut [u64]) + Sync + Send,
{
    let chunks = samples.div_ceil(CHUNK);
    let parts = map_indices(mode, chunks, |c| {
        let mut s = SeedPath::new(seed.master_seed, c, seed.stream_label.clone()).stream();
        let mut hits = vec![0u64; slots];
        let len = CHUNK.min(samples - c * CHUNK);
        for _ in 0..len {
            per_sample(&mut s, &mut hits);
        }
        hits
    });
    let mut total = vec![0u64; slots];
    for p in parts {
        for (t, h) in total.iter_mut().zip(p) {
            *t += h;
        }
    }
    total
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmallBallRow {
    pub eps: f64,
    pub freq: Proportion,
    pub exact: f64,
    pub bound: f64,
}

/// Frequency of `|X| ≤ ε` for `X ~ N_C(0, σ²)`.
pub fn small_ball_experiment(sigma2: f64, eps_grid: &[f64], samples: u64, master_seed: u64, mode: ExecMode) -> Result<Vec<SmallBallRow>> {
    super::tail::check_grid(eps_grid, "eps_grid")?;
    let sigma = sigma2.sqrt();
    let seed = SeedPath::new(master_seed, 0, "small-ball");
    let hits = chunked_counts(mode, samples, &seed, eps_grid.len(), |s, h| {
        let r = (s.complex_normal() * sigma).norm();
        for (i, &e) in eps_grid.iter().enumerate() {
            if r <= e {
                h[i] += 1;
            }
        }
    });
    eps_grid
        .iter()
        .zip(hits)
        .map(|(&eps, k)| {
            let b = complex_small_ball(eps, sigma2)?;
            Ok(SmallBallRow {
                eps,
                freq: Proportion::new(k, samples),
                exact: b.exact,
                bound: b.bound,
            })
        })
        .collect()
}

/// Shapes of the weight vectors used by the default grids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Uniform,
    Geometric,
    Spike,
    Sparse,
}

impl Profile {
    pub const ALL: [Profile; 4] = [Profile::Uniform, Profile::Geometric, Profile::Spike, Profile::Sparse];

    /// Nonnegative weights of length `n`; `Sparse` keeps `⌈n^(1−δ)⌉` ones.
    pub fn weights(self, n: usize, delta: f64) -> Vec<f64> {
        match self {
            Profile::Uniform => vec![1.0; n],
            Profile::Geometric => (0..n).map(|i| 0.8f64.powi(i as i32)).collect(),
            Profile::Spike => (0..n).map(|i| if i == 0 { 1.0 } else { 0.01 }).collect(),
            Profile::Sparse => {
                let k = ((n as f64).powf(1.0 - delta).ceil() as usize).min(n);
                (0..n).map(|i| if i < k { 1.0 } else { 0.0 }).collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheckRow {
    pub n: usize,
    pub delta: f64,
    pub profile: Profile,
    pub t: f64,
    /// Zero for the mask-sum check.
    pub eps: f64,
    pub freq: Proportion,
    pub bound: f64,
}

impl BoundCheckRow {
    /// Frequency minus bound, in binomial standard errors (floored at one
    /// trial's worth so that zero-variance rows stay finite).
    pub fn excess_se(&self) -> f64 {
        let se = self.freq.standard_error().max(1.0 / self.freq.trials as f64);
        (self.freq.p_hat - self.bound) / se
    }
}

/// Dimensions, exponents and profiles of the default grids.
pub fn default_lemma_grid() -> Vec<(usize, f64, Profile)> {
    let mut out = Vec::new();
    for n in [16, 64] {
        for delta in [0.3, 0.5, 0.7] {
            for p in Profile::ALL {
                out.push((n, delta, p));
            }
        }
    }
    out
}

/// `P[Σ a_i δ_i ≤ p·t·Σ a_i]` for Bernoulli(`p = n^(δ−1)`) masks, against the
/// Paley–Zygmund bound, for each case and each `t`.
pub fn paley_zygmund_experiment(
    cases: &[(usize, f64, Profile)],
    t_grid: &[f64],
    trials: u64,
    master_seed: u64,
    mode: ExecMode,
) -> Result<Vec<BoundCheckRow>> {
    let mut rows = Vec::new();
    for (c, &(n, delta, profile)) in cases.iter().enumerate() {
        let a = profile.weights(n, delta);
        let total: f64 = a.iter().sum();
        let p = sparsity(n, delta);
        let seed = SeedPath::new(master_seed, 0, format!("pz/{c}"));
        let hits = chunked_counts(mode, trials, &seed, t_grid.len(), |s, h| {
            let sum: f64 = a.iter().filter(|_| s.bernoulli(p)).sum();
            for (i, &t) in t_grid.iter().enumerate() {
                if sum <= p * t * total {
                    h[i] += 1;
                }
            }
        });
        for (&t, k) in t_grid.iter().zip(hits) {
            rows.push(BoundCheckRow {
                n,
                delta,
                profile,
                t,
                eps: 0.0,
                freq: Proportion::new(k, trials),
                bound: paley_zygmund_sparse_bound(&a, t, delta, n)?,
            });
        }
    }
    Ok(rows)
}

/// `P[|R·x| ≤ ε]` for a sparse complex row `R` and unit `x` shaped by the
/// profile, against the dot-product bound at every `(ε, t)`.
pub fn dot_bound_experiment(
    cases: &[(usize, f64, Profile)],
    eps_grid: &[f64],
    t_grid: &[f64],
    trials: u64,
    master_seed: u64,
    mode: ExecMode,
) -> Result<Vec<BoundCheckRow>> {
    super::tail::check_grid(eps_grid, "eps_grid")?;
    let mut rows = Vec::new();
    for (c, &(n, delta, profile)) in cases.iter().enumerate() {
        let x = vector::normalized(&vector::from_real(&profile.weights(n, delta)));
        let p = sparsity(n, delta);
        let seed = SeedPath::new(master_seed, 0, format!("dot/{c}"));
        let hits = chunked_counts(mode, trials, &seed, eps_grid.len(), |s, h| {
            let mut dot = C64::new(0.0, 0.0);
            for xi in &x {
                let keep = s.bernoulli(p);
                let g = s.complex_normal();
                if keep {
                    dot += g * xi;
                }
            }
            let r = dot.norm();
            for (i, &e) in eps_grid.iter().enumerate() {
                if r <= e {
                    h[i] += 1;
                }
            }
        });
        for (&eps, k) in eps_grid.iter().zip(hits) {
            for &t in t_grid {
                rows.push(BoundCheckRow {
                    n,
                    delta,
                    profile,
                    t,
                    eps,
                    freq: Proportion::new(k, trials),
                    bound: dot_small_ball_bound(&x, eps, t, delta, n)?,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroOutReport {
    pub n: usize,
    pub pairs: u64,
    pub matrices_per_batch: u64,
    pub comparisons: u64,
    /// Comparisons with `P̂[‖Ax‖ ≤ t] > P̂[‖Ay‖ ≤ t] + 3·pooled SE`.
    pub violations: u64,
    /// Largest `(P̂x − P̂y)/pooled SE` seen (0 when both are degenerate).
    pub max_z: f64,
}

/// Pairs `(x, y)` with `|y_i| ≤ |x_i|`: `x` is a random unit vector and `y`
/// scales each coordinate by an independent factor in `[0, 1]`, zeroing a
/// random subset. Each batch shares its matrices across its pairs.
#[allow(clippy::too_many_arguments)]
pub fn zero_out_experiment(
    spec: &EnsembleSpec,
    batches: u64,
    pairs_per_batch: u64,
    matrices_per_batch: u64,
    t_grid: &[f64],
    master_seed: u64,
    mode: ExecMode,
) -> Result<ZeroOutReport> {
    super::tail::check_grid(t_grid, "t_grid")?;
    if matrices_per_batch < 2 {
        return Err(Error::param("matrices_per_batch", "need at least 2"));
    }
    let n = spec.n();
    let per_batch = map_indices(mode, batches, |b| {
        let pairs: Vec<(Vec<C64>, Vec<C64>)> = (0..pairs_per_batch)
            .map(|j| {
                let mut s = SeedPath::new(master_seed, b, format!("zero-out/pair/{j}")).stream();
                let x = vector::normalized(&(0..n).map(|_| s.complex_normal()).collect::<Vec<_>>());
                let y = x
                    .iter()
                    .map(|&z| if s.bernoulli(0.3) { C64::new(0.0, 0.0) } else { z * s.uniform() })
                    .collect();
                (x, y)
            })
            .collect();
        let mut hx = vec![vec![0u64; t_grid.len()]; pairs.len()];
        let mut hy = hx.clone();
        for m in 0..matrices_per_batch {
            let a = assemble_sparse_matrix(spec, &SeedPath::new(master_seed, b * matrices_per_batch + m, "zero-out/matrix"));
            for (j, (x, y)) in pairs.iter().enumerate() {
                let nx = vector::norm(&a.mul_vec(x));
                let ny = vector::norm(&a.mul_vec(y));
                for (i, &t) in t_grid.iter().enumerate() {
                    hx[j][i] += (nx <= t) as u64;
                    hy[j][i] += (ny <= t) as u64;
                }
            }
        }
        (hx, hy)
    });
    let mut comparisons = 0;
    let mut violations = 0;
    let mut max_z = f64::NEG_INFINITY;
    for (hx, hy) in per_batch {
        for (px, py) in hx.iter().zip(&hy) {
            for (&kx, &ky) in px.iter().zip(py) {
                let a = Proportion::new(kx, matrices_per_batch);
                let b = Proportion::new(ky, matrices_per_batch);
                let se = pooled_se(&a, &b);
                let diff = a.p_hat - b.p_hat;
                comparisons += 1;
                let z = if se > 0.0 { diff / se } else if diff > 0.0 { f64::INFINITY } else { 0.0 };
                max_z = max_z.max(z);
                if diff > 3.0 * se {
                    violations += 1;
                }
            }
        }
    }
    Ok(ZeroOutReport {
        n,
        pairs: batches * pairs_per_batch,
        matrices_per_batch,
        comparisons,
        violations,
        max_z,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetFuzzReport {
    pub members: u64,
    /// Parameter draws that could not be realized and were skipped.
    pub skipped: u64,
    pub dist_failures: u64,
    pub band_failures: u64,
    pub sparsity_failures: u64,
    pub worst: Option<NetCertificate>,
}

/// Runs the net approximation on `members` random members of random
/// `V(a, b, d1, d2)` in dimensions `8..=n_max`.
pub fn net_certificate_fuzz(members: u64, n_max: usize, master_seed: u64, mode: ExecMode) -> Result<NetFuzzReport> {
    if n_max < 8 {
        return Err(Error::param("n_max", "must be at least 8"));
    }
    let candidates = 4 * members;
    let results = map_indices(mode, candidates, |i| {
        let seed = SeedPath::new(master_seed, i, "net-fuzz");
        let mut s = seed.child("params").stream();
        let n = s.range_inclusive(8, n_max);
        let a = ((n as f64 * s.uniform_in(0.2, 1.0)) as usize).max(2);
        let b = (a as f64 * s.uniform_in(0.02, 0.5)).max(0.5);
        let d1 = (s.uniform_in(1e-8f64.ln(), 1e-4f64.ln())).exp();
        let d2_min = 57.0 * d1.sqrt();
        let d2 = d2_min + (0.95 - d2_min) * s.uniform().max(1e-3);
        let v = VParams::new(a, b, d1, d2)?;
        match sample_v_member(n, &v, &seed.child("member")) {
            Ok(x) => net_approximate(&x, &v).map(|(_, c)| Some(c)),
            Err(Error::Infeasible(_)) => Ok(None),
            Err(e) => Err(e),
        }
    });
    let mut report = NetFuzzReport {
        members: 0,
        skipped: 0,
        dist_failures: 0,
        band_failures: 0,
        sparsity_failures: 0,
        worst: None,
    };
    let mut worst_ratio = f64::NEG_INFINITY;
    for r in results {
        if report.members == members {
            break;
        }
        let Some(c) = r? else {
            report.skipped += 1;
            continue;
        };
        report.members += 1;
        report.dist_failures += !c.dist_ok() as u64;
        report.band_failures += !c.band_ok() as u64;
        report.sparsity_failures += !c.sparsity_ok() as u64;
        let ratio = c.dist / (3.0 * c.d1.sqrt());
        if ratio > worst_ratio {
            worst_ratio = ratio;
            report.worst = Some(c);
        }
    }
    if report.members < members {
        return Err(Error::Infeasible(format!("only {} of {members} members realized", report.members)));
    }
    Ok(report)
}

/// One draw of `|R·x|` with the ensemble's own column sampler; used to
/// cross-check the inlined sampler of [`dot_bound_experiment`].
pub fn sparse_dot(spec: &EnsembleSpec, x: &[C64], seed: &SeedPath) -> f64 {
    let r = sample_sparse_column(spec, seed);
    r.iter().zip(x).map(|(a, b)| a * b).sum::<C64>().norm()
}
