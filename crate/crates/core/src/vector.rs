//! Small helpers for complex vectors stored as plain slices.

use crate::C64;

pub fn norm(x: &[C64]) -> f64 {
    norm_sqr(x).sqrt()
}

pub fn norm_sqr(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

/// `Σ conj(x_i) y_i`.
pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn sub(x: &[C64], y: &[C64]) -> Vec<C64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn scale(x: &[C64], s: f64) -> Vec<C64> {
    x.iter().map(|z| z * s).collect()
}

pub fn normalized(x: &[C64]) -> Vec<C64> {
    let nrm = norm(x);
    scale(x, 1.0 / nrm)
}

pub fn unit(n: usize, i: usize) -> Vec<C64> {
    let mut e = vec![C64::new(0.0, 0.0); n];
    e[i] = C64::new(1.0, 0.0);
    e
}

pub fn from_real(xs: &[f64]) -> Vec<C64> {
    xs.iter().map(|&x| C64::new(x, 0.0)).collect()
}

/// Largest squared modulus.
pub fn max_abs_sqr(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max)
}
