//! Keyed random streams.
//!
//! Every random object is drawn from a [`Stream`] addressed by a [`SeedPath`]
//! `(master_seed, trial_index, stream_label)`. The path is hashed with SHA-256
//! into a ChaCha8 key, so streams for different trials or labels are
//! independent and any trial can be regenerated without replaying the ones
//! before it. Parallel and serial runs therefore produce identical samples.
//!
//! Gaussians use the Marsaglia polar method. It only needs `ln` and `sqrt`
//! on uniform draws, and each accepted pair maps directly onto the real and
//! imaginary parts of one complex sample.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};

use crate::C64;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SeedPath {
    pub master_seed: u64,
    pub trial_index: u64,
    pub stream_label: String,
}

impl SeedPath {
    pub fn new(master_seed: u64, trial_index: u64, stream_label: impl Into<String>) -> Self {
        Self {
            master_seed,
            trial_index,
            stream_label: stream_label.into(),
        }
    }

    /// Same master seed and trial, nested label `"{label}/{child}"`.
    pub fn child(&self, child: &str) -> Self {
        Self {
            master_seed: self.master_seed,
            trial_index: self.trial_index,
            stream_label: format!("{}/{}", self.stream_label, child),
        }
    }

    fn key(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"svtail.seedpath.v1");
        h.update(self.master_seed.to_le_bytes());
        h.update(self.trial_index.to_le_bytes());
        h.update((self.stream_label.len() as u64).to_le_bytes());
        h.update(self.stream_label.as_bytes());
        let digest = h.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        key
    }

    pub fn stream(&self) -> Stream {
        Stream {
            rng: ChaCha8Rng::from_seed(self.key()),
        }
    }
}

pub struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range_inclusive(&mut self, lo: usize, hi: usize) -> usize {
        assert!(lo <= hi);
        let span = (hi - lo + 1) as u64;
        // Lemire-style rejection keeps the draw unbiased.
        let zone = u64::MAX - (u64::MAX - span + 1) % span;
        loop {
            let v = self.rng.next_u64();
            if v <= zone {
                return lo + (v % span) as usize;
            }
        }
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Two independent standard normals.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                return (u * f, v * f);
            }
        }
    }

    /// Standard real normal; the second value of the polar pair is discarded
    /// so that each call consumes a self-contained block of the stream.
    pub fn normal(&mut self) -> f64 {
        self.normal_pair().0
    }

    /// `N_C(0, 1)`: independent real and imaginary parts of variance 1/2.
    pub fn complex_normal(&mut self) -> C64 {
        let (a, b) = self.normal_pair();
        C64::new(a * std::f64::consts::FRAC_1_SQRT_2, b * std::f64::consts::FRAC_1_SQRT_2)
    }

    /// Uniform point on the unit circle.
    pub fn phase(&mut self) -> C64 {
        let z = self.complex_normal();
        z / z.norm()
    }

    /// Uniform point on the probability simplex of dimension `k`.
    pub fn simplex(&mut self, k: usize) -> Vec<f64> {
        let mut w: Vec<f64> = (0..k).map(|_| -(1.0 - self.uniform()).ln()).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        w
    }

    /// Fisher-Yates sample of `k` distinct indices from `0..n`.
    pub fn choose_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = self.range_inclusive(i, n - 1);
            idx.swap(i, j);
        }
        idx.truncate(k);
        idx
    }
}
