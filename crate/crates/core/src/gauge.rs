//! Reproducible random smooth gauges `v(t) = exp(iK(t))`.
//!
//! `K` is a Fourier series in `s = (t − t₀)/(t₁ − t₀)`,
//! `K(s) = Σ_{m=0}^{M} (A_m cos 2πms + B_m sin 2πms)`, whose coefficients are
//! Hermitian matrices with entries drawn uniformly from
//! `[−a/(1+m), a/(1+m)]` (real and imaginary parts) by a ChaCha8 stream. The
//! gauge is periodic in `s`, so it stays single-valued on cyclic curves.

use std::f64::consts::TAU;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::curve::GaugeField;
use crate::linalg::{c64, expm_skew_raw, hermitize, CMatrix, C64};

pub const DEFAULT_HARMONICS: usize = 2;
pub const DEFAULT_AMPLITUDE: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct SmoothGauge {
    dim: usize,
    t0: f64,
    t1: f64,
    cos: Vec<CMatrix>,
    sin: Vec<CMatrix>,
}

fn random_hermitian(dim: usize, scale: f64, rng: &mut impl Rng) -> CMatrix {
    let m = CMatrix::from_fn(dim, dim, |_, _| c64(rng.random_range(-scale..=scale), rng.random_range(-scale..=scale)));
    hermitize(&m)
}

impl SmoothGauge {
    pub fn random(dim: usize, t0: f64, t1: f64, harmonics: usize, amplitude: f64, rng: &mut impl Rng) -> Self {
        let mut cos = Vec::with_capacity(harmonics + 1);
        let mut sin = Vec::with_capacity(harmonics + 1);
        for m in 0..=harmonics {
            let scale = amplitude / (1.0 + m as f64);
            cos.push(random_hermitian(dim, scale, rng));
            sin.push(if m == 0 { CMatrix::zeros(dim, dim) } else { random_hermitian(dim, scale, rng) });
        }
        Self { dim, t0, t1, cos, sin }
    }

    /// Gauge number `trial` of the family generated from `seed`; each trial
    /// reads its own ChaCha8 stream, so trials are independent of evaluation order.
    pub fn seeded(dim: usize, t0: f64, t1: f64, seed: u64, trial: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        Self::random(dim, t0, t1, DEFAULT_HARMONICS, DEFAULT_AMPLITUDE, &mut rng)
    }

    fn s(&self, t: f64) -> f64 {
        (t - self.t0) / (self.t1 - self.t0)
    }

    /// `K(t)` and `dK/dt`.
    pub fn generator(&self, t: f64) -> (CMatrix, CMatrix) {
        let s = self.s(t);
        let rate = 1.0 / (self.t1 - self.t0);
        let mut k = CMatrix::zeros(self.dim, self.dim);
        let mut dk = CMatrix::zeros(self.dim, self.dim);
        for (m, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let w = TAU * m as f64;
            let (sn, cs) = (w * s).sin_cos();
            k += a.scale(cs) + b.scale(sn);
            dk += (b.scale(cs) - a.scale(sn)).scale(w * rate);
        }
        (k, dk)
    }
}

impl GaugeField for SmoothGauge {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, t: f64) -> CMatrix {
        expm_skew_raw(&self.generator(t).0, -1.0)
    }

    /// Exact derivative of `exp(iK)` through the eigenbasis of `K`:
    /// `(Q† dv Q)_{ab} = (Q† K̇ Q)_{ab} · (e^{iλ_a} − e^{iλ_b})/(λ_a − λ_b)`.
    fn derivative(&self, t: f64) -> CMatrix {
        let (k, dk) = self.generator(t);
        let eig = hermitize(&k).symmetric_eigen();
        let q = &eig.eigenvectors;
        let lam = &eig.eigenvalues;
        let rotated = q.adjoint() * dk * q;
        let n = self.dim;
        let divided = CMatrix::from_fn(n, n, |a, b| {
            let (la, lb) = (lam[a], lam[b]);
            let ea = C64::from_polar(1.0, la);
            let weight = if (la - lb).abs() < 1e-8 {
                // the divided difference tends to i e^{iλ}
                c64(0.0, 1.0) * C64::from_polar(1.0, 0.5 * (la + lb))
            } else {
                (ea - C64::from_polar(1.0, lb)) / (la - lb)
            };
            rotated[(a, b)] * weight
        });
        q * divided * q.adjoint()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, unitarity_defect};

    #[test]
    fn unitary_periodic_and_reproducible() {
        let g = SmoothGauge::seeded(2, 0.0, 3.0, 7, 4);
        let h = SmoothGauge::seeded(2, 0.0, 3.0, 7, 4);
        for t in [0.0, 0.4, 1.9, 3.0] {
            assert!(unitarity_defect(&g.value(t)).unwrap() < 1e-13);
            assert_eq!(g.value(t), h.value(t));
        }
        assert!(max_abs(&(g.value(0.0) - g.value(3.0))) < 1e-13);
        assert_ne!(g.value(0.5), SmoothGauge::seeded(2, 0.0, 3.0, 7, 5).value(0.5));
    }

    #[test]
    fn derivative_matches_finite_differences() {
        for dim in 1..4 {
            let g = SmoothGauge::seeded(dim, -1.0, 2.0, 11, dim as u64);
            for t in [-0.7, 0.1, 1.3] {
                let h = 1e-4;
                let fd = (g.value(t - 2.0 * h) - g.value(t + 2.0 * h) + (g.value(t + h) - g.value(t - h)).scale(8.0)).scale(1.0 / (12.0 * h));
                assert!(max_abs(&(fd - g.derivative(t))) < 1e-9, "dim {dim} t {t}");
            }
        }
    }
}
