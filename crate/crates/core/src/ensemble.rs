//! Sampling of the random objects: Bernoulli masks, Gaussian matrices, the
//! sparse product ensemble `A_ij = ξ_ij δ_ij` with `p = n^(δ-1)`, and the
//! corner-zeroed shift `M` together with its witness vector.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::rng::SeedPath;
use crate::{DenseMatrix, Error, Result, C64};

pub use crate::rng::Stream;

/// Scalar field of the Gaussian layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Real => "real",
            Field::Complex => "complex",
        })
    }
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "real" | "r" => Ok(Field::Real),
            "complex" | "c" => Ok(Field::Complex),
            other => Err(Error::param("field", format!("unknown field `{other}`"))),
        }
    }
}

/// Law of the sparse matrix: dimension, sparsity exponent and field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    n: usize,
    delta: f64,
    field: Field,
    p: f64,
}

impl EnsembleSpec {
    pub fn new(n: usize, delta: f64, field: Field) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::param("delta", format!("{delta} not in (0, 1)")));
        }
        Ok(Self {
            n,
            delta,
            field,
            p: sparsity(n, delta),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Probability that an entry survives the mask.
    pub fn p(&self) -> f64 {
        self.p
    }
}

/// `n^(δ-1)`.
pub fn sparsity(n: usize, delta: f64) -> f64 {
    (n as f64).powf(delta - 1.0)
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::param("p", format!("{p} not in [0, 1]")))
    }
}

/// `n × n` matrix of independent Bernoulli(p) entries.
pub fn sample_bernoulli_mask(n: usize, p: f64, seed: &SeedPath) -> Result<DenseMatrix> {
    check_probability(p)?;
    let mut s = seed.stream();
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    Ok(DenseMatrix::from_fn(n, n, |_, _| if s.bernoulli(p) { one } else { zero }))
}

/// `n × n` i.i.d. standard Gaussian matrix; `E|ξ|² = 1` in both fields.
pub fn sample_gaussian_matrix(n: usize, field: Field, seed: &SeedPath) -> DenseMatrix {
    let mut s = seed.stream();
    match field {
        Field::Complex => DenseMatrix::from_fn(n, n, |_, _| s.complex_normal()),
        Field::Real => DenseMatrix::from_fn(n, n, |_, _| C64::new(s.normal(), 0.0)),
    }
}

/// Sparse ensemble: Gaussian layer (label `gauss`) times mask (label `mask`).
pub fn assemble_sparse_matrix(spec: &EnsembleSpec, seed: &SeedPath) -> DenseMatrix {
    let mask = sample_bernoulli_mask(spec.n, spec.p, &seed.child("mask"))
        .expect("spec probability is always in [0, 1]");
    let gauss = sample_gaussian_matrix(spec.n, spec.field, &seed.child("gauss"));
    gauss.hadamard(&mask)
}

/// A single sparse column `(ξ_i δ_i)`, used for inner-product experiments.
pub fn sample_sparse_column(spec: &EnsembleSpec, seed: &SeedPath) -> Vec<C64> {
    let mut mask = seed.child("mask").stream();
    let mut gauss = seed.child("gauss").stream();
    (0..spec.n)
        .map(|_| {
            let keep = mask.bernoulli(spec.p);
            let g = match spec.field {
                Field::Complex => gauss.complex_normal(),
                Field::Real => C64::new(gauss.normal(), 0.0),
            };
            if keep {
                g
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect()
}

/// `t · Id` with the lower-right entry zeroed.
pub fn build_shift_matrix(n: usize, t: f64) -> Result<DenseMatrix> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    if !(t > 0.0) {
        return Err(Error::param("t", format!("{t} must be positive")));
    }
    let mut diag = vec![C64::new(t, 0.0); n];
    diag[n - 1] = C64::new(0.0, 0.0);
    Ok(DenseMatrix::from_diagonal(&diag))
}

/// Witness `x` with `x_i = -(λ/t) A_in` for `i < n` and `x_n = 1`.
pub fn build_shift_witness(a: &DenseMatrix, t: f64, lambda: f64) -> Result<Vec<C64>> {
    if !a.is_square() {
        return Err(Error::Dimension("shift witness needs a square matrix".into()));
    }
    if !(t > 0.0) {
        return Err(Error::param("t", format!("{t} must be positive")));
    }
    let n = a.rows();
    let mut x: Vec<C64> = (0..n - 1).map(|i| a[(i, n - 1)] * (-lambda / t)).collect();
    x.push(C64::new(1.0, 0.0));
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector;

    fn seed(label: &str) -> SeedPath {
        SeedPath::new(2024, 0, label)
    }

    #[test]
    fn spec_validates_and_derives_p() {
        assert!(EnsembleSpec::new(0, 0.5, Field::Complex).is_err());
        assert!(EnsembleSpec::new(4, 1.0, Field::Complex).is_err());
        assert!(EnsembleSpec::new(4, 0.0, Field::Complex).is_err());
        let s = EnsembleSpec::new(100, 0.5, Field::Complex).unwrap();
        assert_eq!(s.p(), 100f64.powf(-0.5));
        assert_eq!(EnsembleSpec::new(1, 0.3, Field::Real).unwrap().p(), 1.0);
    }

    #[test]
    fn degenerate_masks() {
        let zero = sample_bernoulli_mask(3, 0.0, &seed("m")).unwrap();
        assert_eq!(zero.count_nonzero(), 0);
        let ones = sample_bernoulli_mask(3, 1.0, &seed("m")).unwrap();
        assert!(ones.as_slice().iter().all(|z| *z == C64::new(1.0, 0.0)));
        assert!(sample_bernoulli_mask(3, 1.5, &seed("m")).is_err());
        assert!(sample_bernoulli_mask(3, -0.1, &seed("m")).is_err());
    }

    #[test]
    fn real_field_has_zero_imaginary_parts() {
        let g = sample_gaussian_matrix(6, Field::Real, &seed("g"));
        assert!(g.as_slice().iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn one_by_one_is_never_masked() {
        let spec = EnsembleSpec::new(1, 0.5, Field::Complex).unwrap();
        for t in 0..50 {
            let a = assemble_sparse_matrix(&spec, &SeedPath::new(5, t, "a"));
            assert_ne!(a[(0, 0)], C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn mask_layer_is_independent_of_gaussian_layer() {
        // Same mask stream, so the zero pattern of the product matches the mask.
        let spec = EnsembleSpec::new(12, 0.4, Field::Complex).unwrap();
        let s = SeedPath::new(77, 3, "a");
        let a = assemble_sparse_matrix(&spec, &s);
        let mask = sample_bernoulli_mask(12, spec.p(), &s.child("mask")).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                assert_eq!(a[(i, j)] == C64::new(0.0, 0.0), mask[(i, j)].re == 0.0);
            }
        }
    }

    #[test]
    fn shift_matrix_examples() {
        let m = build_shift_matrix(2, 5.0).unwrap();
        assert_eq!(m, DenseMatrix::from_real_rows(&[&[5.0, 0.0], &[0.0, 0.0]]));
        let m1 = build_shift_matrix(1, 3.0).unwrap();
        assert_eq!(m1, DenseMatrix::from_real_rows(&[&[0.0]]));
        assert!(build_shift_matrix(3, 0.0).is_err());
    }

    #[test]
    fn shift_witness_examples() {
        let x = build_shift_witness(&DenseMatrix::zeros(4, 4), 2.0, 1.0).unwrap();
        assert_eq!(x, vector::unit(4, 3));

        let mut a = DenseMatrix::zeros(2, 2);
        a[(0, 1)] = C64::new(2.0, 0.0);
        let x = build_shift_witness(&a, 4.0, 1.0).unwrap();
        assert_eq!(x, vector::from_real(&[-0.5, 1.0]));
    }

    #[test]
    fn shift_witness_has_unit_last_entry_and_norm_at_least_one() {
        let spec = EnsembleSpec::new(9, 0.5, Field::Complex).unwrap();
        for t in 0..20 {
            let a = assemble_sparse_matrix(&spec, &SeedPath::new(1, t, "a"));
            let x = build_shift_witness(&a, 3.0, 0.7).unwrap();
            assert_eq!(x[8], C64::new(1.0, 0.0));
            assert!(vector::norm(&x) >= 1.0);
        }
    }
}
