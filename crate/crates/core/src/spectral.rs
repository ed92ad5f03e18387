//! Extreme singular values, kernel vectors and distances to spans.
//!
//! Both extremes are computed from the triangular factor of a column-pivoted
//! Householder QR: power iteration on `R*R` for the largest singular value and
//! inverse iteration (two triangular solves per step) for the smallest. When
//! the factor is numerically singular, or an iteration stalls, the routine
//! falls back to a full bidiagonal SVD.

use serde::Serialize;

use crate::{vector, DenseMatrix, Error, Result, C64};

/// Relative tolerance used throughout the experiments.
pub const DEFAULT_TOL: f64 = 1e-8;

const MAX_INVERSE_ITERS: usize = 500;
const MAX_POWER_ITERS: usize = 5_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Iterative,
    FullSvd,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SingularTriple {
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub iterations: usize,
    /// Largest relative eigen-residual of the two Gram iterations (0 for the
    /// SVD route).
    pub residual: f64,
    pub method: SolveMethod,
}

/// Smallest singular value of a tall or square matrix with its right
/// singular vector.
#[derive(Clone, Debug, PartialEq)]
pub struct LeastSingular {
    pub sigma: f64,
    pub vector: Vec<C64>,
    pub iterations: usize,
    pub residual: f64,
    pub method: SolveMethod,
}

/// A unit null vector of a wide matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelVector {
    pub vector: Vec<C64>,
    /// `‖Bη‖₂ / ‖B‖_op`.
    pub residual: f64,
    /// The numerical kernel has dimension at least two.
    pub degenerate: bool,
}

/// Column-pivoted Householder QR of a tall-or-square matrix given by columns.
struct PivotedQr {
    m: usize,
    k: usize,
    /// Row-major `k × k` upper triangle.
    r: Vec<C64>,
    /// Householder vectors; `reflectors[j]` acts on rows `j..m`.
    reflectors: Vec<Option<Vec<C64>>>,
    /// `perm[j]` is the original index of the column moved to position `j`.
    perm: Vec<usize>,
}

impl PivotedQr {
    fn factor(mut cols: Vec<Vec<C64>>) -> Self {
        let k = cols.len();
        let m = cols[0].len();
        debug_assert!(m >= k);
        let mut perm: Vec<usize> = (0..k).collect();
        let mut reflectors = Vec::with_capacity(k);
        let mut r = vec![C64::new(0.0, 0.0); k * k];

        for j in 0..k {
            let (pivot, _) = (j..k)
                .map(|c| (c, vector::norm_sqr(&cols[c][j..])))
                .fold((j, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            cols.swap(j, pivot);
            perm.swap(j, pivot);

            let x = &cols[j][j..];
            let xnorm = vector::norm(x);
            if xnorm == 0.0 {
                reflectors.push(None);
                continue;
            }
            let phase = if x[0].norm() > 0.0 {
                x[0] / x[0].norm()
            } else {
                C64::new(1.0, 0.0)
            };
            let alpha = -phase * xnorm;
            let mut v: Vec<C64> = x.to_vec();
            v[0] -= alpha;
            let vnorm = vector::norm(&v);
            v.iter_mut().for_each(|z| *z /= vnorm);

            cols[j][j] = alpha;
            cols[j][j + 1..].iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            for col in cols.iter_mut().skip(j + 1) {
                let tail = &mut col[j..];
                let w: C64 = v.iter().zip(tail.iter()).map(|(a, b)| a.conj() * b).sum();
                let w2 = w * 2.0;
                tail.iter_mut().zip(&v).for_each(|(t, vi)| *t -= vi * w2);
            }
            reflectors.push(Some(v));
        }
        // Read R only now: later pivots also swap already-finished entries.
        for (c, col) in cols.iter().enumerate() {
            for (i, &z) in col.iter().enumerate().take(c + 1) {
                r[i * k + c] = z;
            }
        }
        Self {
            m,
            k,
            r,
            reflectors,
            perm,
        }
    }

    fn r(&self, i: usize, j: usize) -> C64 {
        self.r[i * self.k + j]
    }

    fn diag_abs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.k).map(|i| self.r(i, i).norm())
    }

    fn numerically_singular(&self) -> bool {
        let top = self.r(0, 0).norm();
        let floor = self.k as f64 * f64::EPSILON * top;
        top == 0.0 || self.diag_abs().any(|d| d <= floor)
    }

    fn mul_r(&self, v: &[C64]) -> Vec<C64> {
        (0..self.k)
            .map(|i| (i..self.k).map(|j| self.r(i, j) * v[j]).sum())
            .collect()
    }

    fn mul_r_adj(&self, u: &[C64]) -> Vec<C64> {
        (0..self.k)
            .map(|j| (0..=j).map(|i| self.r(i, j).conj() * u[i]).sum())
            .collect()
    }

    /// Solves `R* z = v`.
    fn solve_r_adj(&self, v: &[C64]) -> Vec<C64> {
        let mut z = vec![C64::new(0.0, 0.0); self.k];
        for i in 0..self.k {
            let s: C64 = (0..i).map(|j| self.r(j, i).conj() * z[j]).sum();
            z[i] = (v[i] - s) / self.r(i, i).conj();
        }
        z
    }

    /// Solves `R w = y`.
    fn solve_r(&self, y: &[C64]) -> Vec<C64> {
        let mut w = vec![C64::new(0.0, 0.0); self.k];
        for i in (0..self.k).rev() {
            let s: C64 = (i + 1..self.k).map(|j| self.r(i, j) * w[j]).sum();
            w[i] = (y[i] - s) / self.r(i, i);
        }
        w
    }

    /// `Q e_{m-1}`: orthogonal to the column span when `k < m`.
    fn last_q_column(&self) -> Vec<C64> {
        let mut q = vector::unit(self.m, self.m - 1);
        for (j, refl) in self.reflectors.iter().enumerate().rev() {
            if let Some(v) = refl {
                let tail = &mut q[j..];
                let w: C64 = v.iter().zip(tail.iter()).map(|(a, b)| a.conj() * b).sum();
                let w2 = w * 2.0;
                tail.iter_mut().zip(v).for_each(|(t, vi)| *t -= vi * w2);
            }
        }
        q
    }

    /// Largest singular value of `R` by power iteration on `R*R`.
    fn power(&self, tol: f64) -> Option<(f64, usize, f64)> {
        let mut v = vector::normalized(&start_vector(self.k));
        let mut residual = f64::INFINITY;
        for it in 1..=MAX_POWER_ITERS {
            let w = self.mul_r_adj(&self.mul_r(&v));
            let lambda = vector::inner(&v, &w).re;
            if lambda <= 0.0 {
                return Some((0.0, it, 0.0));
            }
            let r: Vec<C64> = w.iter().zip(&v).map(|(a, b)| a - b * lambda).collect();
            residual = vector::norm(&r) / lambda;
            v = vector::normalized(&w);
            if residual <= tol {
                return Some((vector::norm(&self.mul_r(&v)), it, residual));
            }
        }
        let _ = residual;
        None
    }

    /// Smallest singular value of `R` and its right singular vector by
    /// inverse iteration on `R*R`.
    fn inverse(&self, tol: f64) -> Option<(f64, Vec<C64>, usize, f64)> {
        if self.numerically_singular() {
            return None;
        }
        let mut v = vector::normalized(&start_vector(self.k));
        for it in 1..=MAX_INVERSE_ITERS {
            let w = self.solve_r(&self.solve_r_adj(&v));
            let nu = vector::inner(&v, &w).re;
            if !(nu.is_finite() && nu > 0.0) {
                return None;
            }
            let r: Vec<C64> = w.iter().zip(&v).map(|(a, b)| a - b * nu).collect();
            let residual = vector::norm(&r) / nu;
            v = vector::normalized(&w);
            if residual <= tol {
                let sigma = vector::norm(&self.mul_r(&v));
                return Some((sigma, v, it, residual));
            }
        }
        None
    }

    /// Maps a right singular vector of `R` back to the original columns.
    fn unpermute(&self, v: &[C64]) -> Vec<C64> {
        let mut x = vec![C64::new(0.0, 0.0); self.k];
        for (j, &orig) in self.perm.iter().enumerate() {
            x[orig] = v[j];
        }
        x
    }
}

fn start_vector(k: usize) -> Vec<C64> {
    (0..k)
        .map(|j| {
            let a = ((j * 7919) % 97) as f64 / 97.0;
            let b = ((j * 104_729) % 89) as f64 / 89.0;
            C64::new(1.0 + a, 0.5 * b - 0.25)
        })
        .collect()
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::param("tol", format!("{tol} must be positive")))
    }
}

/// Factor the tall orientation of `a` (itself, or its adjoint when wide).
fn factor_tall(a: &DenseMatrix) -> PivotedQr {
    if a.rows() >= a.cols() {
        PivotedQr::factor(a.columns())
    } else {
        PivotedQr::factor(a.adjoint().columns())
    }
}

struct SvdResult {
    values: Vec<f64>,
    /// Right singular vectors as rows, present when requested.
    right: Option<Vec<Vec<C64>>>,
}

fn full_svd(a: &DenseMatrix, want_right: bool) -> Result<SvdResult> {
    let tall = if a.rows() >= a.cols() {
        a.clone()
    } else {
        a.adjoint()
    };
    let svd = tall
        .to_nalgebra()
        .try_svd(false, want_right, f64::EPSILON, 10_000)
        .ok_or(Error::NonConvergence {
            residual: f64::NAN,
            iterations: 10_000,
        })?;
    let values: Vec<f64> = svd.singular_values.iter().copied().collect();
    let right = svd.v_t.map(|vt| {
        (0..vt.nrows())
            .map(|i| (0..vt.ncols()).map(|j| vt[(i, j)].conj()).collect())
            .collect()
    });
    Ok(SvdResult { values, right })
}

fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |b, (i, &v)| if v < b.1 { (i, v) } else { b })
        .0
}

/// Largest and smallest singular values. For a wide `(n-1) × n` matrix the
/// smallest is the least of its `n-1` singular values.
pub fn singular_extremes(a: &DenseMatrix, tol: f64) -> Result<SingularTriple> {
    check_tol(tol)?;
    let qr = factor_tall(a);
    if qr.r(0, 0).norm() == 0.0 {
        return Ok(SingularTriple {
            sigma_max: 0.0,
            sigma_min: 0.0,
            iterations: 0,
            residual: 0.0,
            method: SolveMethod::Iterative,
        });
    }
    match (qr.power(tol), qr.inverse(tol)) {
        (Some((smax, it1, r1)), Some((smin, _, it2, r2))) if smin <= smax * (1.0 + tol) => {
            Ok(SingularTriple {
                sigma_max: smax,
                sigma_min: smin.min(smax),
                iterations: it1 + it2,
                residual: r1.max(r2),
                method: SolveMethod::Iterative,
            })
        }
        _ => {
            let svd = full_svd(a, false)?;
            let smax = svd.values.iter().copied().fold(0.0, f64::max);
            let smin = svd.values.iter().copied().fold(f64::INFINITY, f64::min);
            Ok(SingularTriple {
                sigma_max: smax,
                sigma_min: smin,
                iterations: 0,
                residual: 0.0,
                method: SolveMethod::FullSvd,
            })
        }
    }
}

/// Smallest singular value and right singular vector of a tall or square
/// matrix, so that `‖A x‖₂ = σ_min` with `‖x‖₂ = 1`.
pub fn least_singular(a: &DenseMatrix, tol: f64) -> Result<LeastSingular> {
    check_tol(tol)?;
    if a.rows() < a.cols() {
        return Err(Error::Dimension(format!(
            "least_singular needs rows >= cols, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let qr = PivotedQr::factor(a.columns());
    if let Some((sigma, v, iterations, residual)) = qr.inverse(tol) {
        return Ok(LeastSingular {
            sigma,
            vector: qr.unpermute(&v),
            iterations,
            residual,
            method: SolveMethod::Iterative,
        });
    }
    let svd = full_svd(a, true)?;
    let i = argmin(&svd.values);
    let vector = svd.right.expect("requested right singular vectors")[i].clone();
    Ok(LeastSingular {
        sigma: svd.values[i],
        vector,
        iterations: 0,
        residual: 0.0,
        method: SolveMethod::FullSvd,
    })
}

/// Operator norm by power iteration on `A*A`, with SVD fallback.
pub fn operator_norm(a: &DenseMatrix, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    let ah = a.adjoint();
    let mut v = vector::normalized(&start_vector(a.cols()));
    for _ in 0..MAX_POWER_ITERS {
        let w = ah.mul_vec(&a.mul_vec(&v));
        let lambda = vector::inner(&v, &w).re;
        if lambda <= 0.0 {
            return Ok(0.0);
        }
        let r: Vec<C64> = w.iter().zip(&v).map(|(x, y)| x - y * lambda).collect();
        let residual = vector::norm(&r) / lambda;
        v = vector::normalized(&w);
        if residual <= tol {
            return Ok(vector::norm(&a.mul_vec(&v)));
        }
    }
    let svd = full_svd(a, false)?;
    Ok(svd.values.iter().copied().fold(0.0, f64::max))
}

/// All singular values, descending. Diagnostic only.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    let mut v = full_svd(a, false)?.values;
    v.sort_by(|x, y| y.total_cmp(x));
    Ok(v)
}

/// Hilbert-Schmidt (Frobenius) norm.
pub fn hs_norm(a: &DenseMatrix) -> f64 {
    vector::norm(a.as_slice())
}

/// Unit vector in the kernel of a wide matrix.
///
/// The null direction is the last column of `Q` in the QR factorization of
/// `B*`; `degenerate` is set when the `(rows)` singular values of `B` include
/// one below `tol · σ_max`.
pub fn kernel_unit_vector(b: &DenseMatrix, tol: f64) -> Result<KernelVector> {
    check_tol(tol)?;
    if b.rows() >= b.cols() {
        return Err(Error::Dimension(format!(
            "kernel_unit_vector needs more columns than rows, got {}x{}",
            b.rows(),
            b.cols()
        )));
    }
    let qr = PivotedQr::factor(b.adjoint().columns());
    let eta = qr.last_q_column();
    let ext = singular_extremes(b, tol)?;
    let residual = if ext.sigma_max > 0.0 {
        vector::norm(&b.mul_vec(&eta)) / ext.sigma_max
    } else {
        0.0
    };
    Ok(KernelVector {
        vector: eta,
        residual,
        degenerate: ext.sigma_min < tol * ext.sigma_max,
    })
}

/// Relative threshold below which a Gram-Schmidt remainder counts as
/// linearly dependent.
const SPAN_DROP_TOL: f64 = 1e-10;

/// Orthonormal basis of `span(w)` by modified Gram-Schmidt with one full
/// re-orthogonalization pass.
pub fn orthonormal_basis(w: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(w.len());
    for v in w {
        let scale = vector::norm(v);
        if scale == 0.0 {
            continue;
        }
        let mut u = v.clone();
        project_out(&basis, &mut u);
        project_out(&basis, &mut u);
        let nu = vector::norm(&u);
        if nu > SPAN_DROP_TOL * scale {
            u.iter_mut().for_each(|z| *z /= nu);
            basis.push(u);
        }
    }
    basis
}

fn project_out(basis: &[Vec<C64>], u: &mut [C64]) {
    for q in basis {
        let c = vector::inner(q, u);
        u.iter_mut().zip(q).for_each(|(x, qi)| *x -= qi * c);
    }
}

/// Euclidean distance from `y` to `span(w)`; `‖y‖₂` when `w` is empty.
pub fn distance_to_span(y: &[C64], w: &[Vec<C64>]) -> Result<f64> {
    if w.iter().any(|v| v.len() != y.len()) {
        return Err(Error::Dimension("span vectors differ in length from y".into()));
    }
    let basis = orthonormal_basis(w);
    let mut r = y.to_vec();
    project_out(&basis, &mut r);
    project_out(&basis, &mut r);
    Ok(vector::norm(&r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{assemble_sparse_matrix, EnsembleSpec, Field};
    use crate::rng::SeedPath;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random(n: usize, m: usize, seed: u64) -> DenseMatrix {
        let mut s = SeedPath::new(seed, 0, "dense").stream();
        DenseMatrix::from_fn(n, m, |_, _| s.complex_normal())
    }

    #[test]
    fn identity_and_permuted_diagonal() {
        let t = singular_extremes(&DenseMatrix::identity(5), DEFAULT_TOL).unwrap();
        assert_relative_eq!(t.sigma_max, 1.0, max_relative = 1e-10);
        assert_relative_eq!(t.sigma_min, 1.0, max_relative = 1e-10);

        let a = DenseMatrix::from_real_rows(&[&[0.0, 2.0], &[1.0, 0.0]]);
        let t = singular_extremes(&a, DEFAULT_TOL).unwrap();
        assert_relative_eq!(t.sigma_max, 2.0, max_relative = 1e-10);
        assert_relative_eq!(t.sigma_min, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn zero_matrix_has_zero_extremes() {
        let t = singular_extremes(&DenseMatrix::zeros(3, 3), DEFAULT_TOL).unwrap();
        assert_eq!((t.sigma_max, t.sigma_min), (0.0, 0.0));
    }

    #[test]
    fn structurally_singular_falls_back_to_svd() {
        let mut a = random(6, 6, 3);
        for i in 0..6 {
            a[(i, 2)] = c(0.0, 0.0);
        }
        let t = singular_extremes(&a, DEFAULT_TOL).unwrap();
        assert_eq!(t.method, SolveMethod::FullSvd);
        assert!(t.sigma_min < 1e-12 * t.sigma_max);
        let ls = least_singular(&a, DEFAULT_TOL).unwrap();
        assert!(ls.sigma < 1e-12);
        assert!(vector::norm(&a.mul_vec(&ls.vector)) < 1e-12);
    }

    #[test]
    fn iterative_route_matches_full_svd() {
        for seed in 0..20 {
            let a = random(12, 12, seed);
            let t = singular_extremes(&a, DEFAULT_TOL).unwrap();
            let sv = singular_values(&a).unwrap();
            assert_relative_eq!(t.sigma_max, sv[0], max_relative = 1e-8);
            assert_relative_eq!(t.sigma_min, *sv.last().unwrap(), max_relative = 1e-8);
        }
    }

    #[test]
    fn least_singular_vector_attains_sigma() {
        let spec = EnsembleSpec::new(40, 0.6, Field::Complex).unwrap();
        for t in 0..10 {
            let a = assemble_sparse_matrix(&spec, &SeedPath::new(8, t, "a"));
            let ls = least_singular(&a, DEFAULT_TOL).unwrap();
            assert_relative_eq!(vector::norm(&ls.vector), 1.0, max_relative = 1e-12);
            let ax = vector::norm(&a.mul_vec(&ls.vector));
            assert!((ax - ls.sigma).abs() <= 1e-9 * (1.0 + ls.sigma), "{ax} vs {}", ls.sigma);
        }
    }

    #[test]
    fn wide_matrix_uses_its_row_count_singular_values() {
        let b = random(5, 6, 11);
        let t = singular_extremes(&b, DEFAULT_TOL).unwrap();
        let sv = singular_values(&b).unwrap();
        assert_eq!(sv.len(), 5);
        assert_relative_eq!(t.sigma_min, sv[4], max_relative = 1e-8);
        assert_relative_eq!(t.sigma_max, sv[0], max_relative = 1e-8);
    }

    #[test]
    fn hs_norm_examples() {
        assert_relative_eq!(hs_norm(&DenseMatrix::identity(4)), 2.0);
        assert_eq!(hs_norm(&DenseMatrix::zeros(3, 2)), 0.0);
        for seed in 0..10 {
            let a = random(7, 7, 100 + seed);
            let t = singular_extremes(&a, DEFAULT_TOL).unwrap();
            assert!(t.sigma_max <= hs_norm(&a) + DEFAULT_TOL);
        }
    }

    #[test]
    fn operator_norm_matches_extremes() {
        let a = random(9, 9, 5);
        let t = singular_extremes(&a, DEFAULT_TOL).unwrap();
        assert_relative_eq!(operator_norm(&a, DEFAULT_TOL).unwrap(), t.sigma_max, max_relative = 1e-8);
    }

    #[test]
    fn coordinate_kernel() {
        let b = DenseMatrix::from_real_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let k = kernel_unit_vector(&b, DEFAULT_TOL).unwrap();
        assert!(!k.degenerate);
        assert_relative_eq!(k.vector[2].norm(), 1.0, max_relative = 1e-12);
        assert!(k.vector[0].norm() < 1e-12 && k.vector[1].norm() < 1e-12);
    }

    #[test]
    fn duplicated_rows_flag_degenerate_kernel() {
        let b = DenseMatrix::from_real_rows(&[&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]]);
        let k = kernel_unit_vector(&b, DEFAULT_TOL).unwrap();
        assert!(k.degenerate);
        assert!(vector::norm(&b.mul_vec(&k.vector)) < 1e-12);
        assert_relative_eq!(vector::norm(&k.vector), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn random_kernel_residual() {
        for n in [3usize, 10, 50, 200] {
            let b = random(n - 1, n, n as u64);
            let k = kernel_unit_vector(&b, DEFAULT_TOL).unwrap();
            assert!(k.residual <= 1e-8, "n={n} residual {}", k.residual);
        }
    }

    #[test]
    fn distance_examples() {
        let y = vector::from_real(&[1.0, 1.0]);
        let d = distance_to_span(&y, &[vector::from_real(&[1.0, 0.0])]).unwrap();
        assert_relative_eq!(d, 1.0, max_relative = 1e-14);
        assert_relative_eq!(distance_to_span(&y, &[]).unwrap(), 2f64.sqrt());

        let w = vec![vector::from_real(&[1.0, 2.0, 0.0]), vector::from_real(&[0.0, 1.0, 1.0])];
        let inside: Vec<C64> = w[0].iter().zip(&w[1]).map(|(a, b)| a * 2.0 - b * 3.0).collect();
        assert!(distance_to_span(&inside, &w).unwrap() < 1e-10);
        assert!(distance_to_span(&y, &[vector::from_real(&[1.0])]).is_err());
    }

    #[test]
    fn distance_equals_kernel_inner_product() {
        for seed in 0..5 {
            let a = random(8, 8, 300 + seed);
            let cols = a.columns();
            let y = &cols[0];
            let w = &cols[1..];
            // B has rows Y_j^*, so ker(B) = W^⊥.
            let b = DenseMatrix::from_rows(&w.iter().map(|v| v.iter().map(|z| z.conj()).collect()).collect::<Vec<_>>()).unwrap();
            let eta = kernel_unit_vector(&b, DEFAULT_TOL).unwrap().vector;
            let dist = distance_to_span(y, w).unwrap();
            assert_relative_eq!(dist, vector::inner(y, &eta).norm(), max_relative = 1e-9);
        }
    }
}
