use proptest::prelude::*;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

use svtail::ensemble::{assemble_sparse_matrix, build_shift_matrix, EnsembleSpec, Field};
use svtail::exec::{map_indices, with_jobs, ExecMode};
use svtail::rng::SeedPath;
use svtail::spectral::singular_values;

/// Chi-squared statistic of observed counts against Binomial(trials, p),
/// merging tail bins until each expected count is at least 5.
fn binomial_gof(counts: &[u64], n: u64, p: f64, total: u64) -> (f64, usize) {
    let law = Binomial::new(p, n).unwrap();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for k in 0..=n {
        obs += counts.get(k as usize).copied().unwrap_or(0) as f64;
        exp += law.pmf(k) * total as f64;
        if exp >= 5.0 {
            bins.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if let Some(last) = bins.last_mut() {
        last.0 += obs;
        last.1 += exp;
    }
    let stat = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    (stat, bins.len() - 1)
}

#[test]
fn nonzero_count_is_binomial() {
    for (n, delta) in [(5usize, 0.5), (20, 0.5), (50, 0.7)] {
        let spec = EnsembleSpec::new(n, delta, Field::Complex).unwrap();
        let trials = 10_000u64;
        let nnz = map_indices(ExecMode::default(), trials, |i| {
            assemble_sparse_matrix(&spec, &SeedPath::new(11, i, "gof")).count_nonzero()
        });
        let mut counts = vec![0u64; n * n + 1];
        for k in nnz {
            counts[k] += 1;
        }
        let (stat, dof) = binomial_gof(&counts, (n * n) as u64, spec.p(), trials);
        let crit = ChiSquared::new(dof as f64).unwrap().inverse_cdf(1.0 - 1e-3);
        assert!(stat < crit, "n = {n}: χ² = {stat:.2} with {dof} dof, critical {crit:.2}");
    }
}

fn corr(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[test]
fn distinct_entries_are_uncorrelated() {
    let spec = EnsembleSpec::new(4, 0.5, Field::Complex).unwrap();
    let trials = 100_000u64;
    let draws = map_indices(ExecMode::default(), trials, |i| {
        let a = assemble_sparse_matrix(&spec, &SeedPath::new(12, i, "corr"));
        [a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(3, 2)]]
    });
    let limit = 4.0 / (trials as f64).sqrt();
    let part = |k: usize, f: fn(svtail::C64) -> f64| draws.iter().map(|d| f(d[k])).collect::<Vec<_>>();
    let re = |z: svtail::C64| z.re;
    let im = |z: svtail::C64| z.im;
    let modulus = |z: svtail::C64| z.norm();
    for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 2), (2, 3)] {
        for f in [re, im, modulus] {
            let r = corr(&part(i, f), &part(j, f));
            assert!(r.abs() < limit, "entries {i}, {j}: r = {r}");
        }
    }
    // Real and imaginary parts of one entry are independent too.
    let r = corr(&part(0, re), &part(0, im));
    assert!(r.abs() < limit, "re/im: r = {r}");
}

#[test]
fn matrices_do_not_depend_on_thread_count() {
    let spec = EnsembleSpec::new(30, 0.5, Field::Complex).unwrap();
    let draw = |mode| {
        map_indices(mode, 64, |i| assemble_sparse_matrix(&spec, &SeedPath::new(13, i, "det")))
    };
    let serial = draw(ExecMode::Sequential);
    let one = with_jobs(Some(1), || draw(ExecMode::Parallel));
    let four = with_jobs(Some(4), || draw(ExecMode::Parallel));
    for (a, (b, c)) in serial.iter().zip(one.iter().zip(&four)) {
        let bits = |m: &svtail::DenseMatrix| m.as_slice().iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect::<Vec<_>>();
        assert_eq!(bits(a), bits(b));
        assert_eq!(bits(a), bits(c));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shift_matrix_spectrum(n in 2usize..25, t in 1e-3f64..1e3) {
        let s = singular_values(&build_shift_matrix(n, t).unwrap()).unwrap();
        for v in &s[..n - 1] {
            prop_assert!((v - t).abs() <= 1e-12 * t);
        }
        prop_assert!(s[n - 1].abs() <= 1e-12 * t);
    }

    #[test]
    fn same_seed_same_matrix(seed in any::<u64>(), idx in any::<u64>(), n in 1usize..12, real in any::<bool>()) {
        let field = if real { Field::Real } else { Field::Complex };
        let spec = EnsembleSpec::new(n, 0.5, field).unwrap();
        let path = SeedPath::new(seed, idx, "prop");
        prop_assert_eq!(assemble_sparse_matrix(&spec, &path), assemble_sparse_matrix(&spec, &path.clone()));
    }
}
