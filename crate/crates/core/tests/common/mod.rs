#![allow(dead_code)]

use misslevel::HermitianMatrix;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random Hermitian matrix with independent normal entries and an imaginary
/// part scaled by `scale`.
pub fn random_hermitian(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> HermitianMatrix {
    let mut re = DMatrix::zeros(n, n);
    let mut im = DMatrix::zeros(n, n);
    for i in 0..n {
        re[(i, i)] = rng.sample::<f64, _>(StandardNormal);
        for j in 0..i {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample::<f64, _>(StandardNormal) * scale;
            re[(i, j)] = a;
            re[(j, i)] = a;
            im[(i, j)] = b;
            im[(j, i)] = -b;
        }
    }
    HermitianMatrix::new(re, im).unwrap()
}

/// Cyclic complex Jacobi eigenvalues of a Hermitian matrix, ascending.
///
/// Each rotation first removes the phase of the pivot, then applies the real
/// Jacobi rotation that annihilates it.
pub fn jacobi_eigenvalues(h: &HermitianMatrix) -> Vec<f64> {
    let n = h.dim();
    let mut m: Vec<Complex64> = (0..n * n)
        .map(|k| Complex64::new(h.re()[(k / n, k % n)], h.im()[(k / n, k % n)]))
        .collect();
    let norm: f64 = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * norm.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                let phase = apq / r;
                let tau = (m[q * n + q].re - m[p * n + p].re) / (2.0 * r);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mp, mq) = (m[k * n + p], m[k * n + q]);
                    m[k * n + p] = mp * c - mq * phase.conj() * s;
                    m[k * n + q] = mp * s + mq * phase.conj() * c;
                }
                for k in 0..n {
                    let (mp, mq) = (m[p * n + k], m[q * n + k]);
                    m[p * n + k] = mp * c - mq * phase * s;
                    m[q * n + k] = mp * s + mq * phase * c;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i * n + i].re).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Ascending eigenvalues of the 2n×2n real embedding.
pub fn embedding_eigenvalues(h: &HermitianMatrix) -> Vec<f64> {
    let mut e: Vec<f64> = h
        .real_embedding()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Unit-density Poisson sequence of `n` levels.
pub fn poisson_levels(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x = 0.0;
    (0..n)
        .map(|_| {
            x += -(1.0 - rng.random::<f64>()).ln();
            x
        })
        .collect()
}
