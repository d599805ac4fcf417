//! Random matrices interpolating between the GOE and the GUE,
//! H = H^(S) + iλ H^(A) with λ = πξ/√N, and reproducible ensembles of
//! unfolded spectra drawn from them.

use crate::error::{domain, Error, Result};
use crate::spectra::{
    decimate, unfold_polynomial, LevelSequence, LevelUnit, Provenance, UnfoldedSpectrum,
};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Crossover strength ξ (in units of the mean spacing) and matrix size N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverParams {
    xi: f64,
    n: usize,
}

impl CrossoverParams {
    pub fn new(xi: f64, n: usize) -> Result<Self> {
        if !(xi >= 0.0 && xi.is_finite()) {
            return domain(format!(
                "crossover strength must be finite and >= 0, got {xi}"
            ));
        }
        if n < 1 {
            return domain("matrix dimension must be at least 1");
        }
        Ok(Self { xi, n })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Coupling of the antisymmetric part, λ = πξ/√N.
    pub fn lambda(&self) -> f64 {
        PI * self.xi / (self.n as f64).sqrt()
    }
}

/// Hermitian matrix stored as a symmetric real part and an antisymmetric
/// imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

impl HermitianMatrix {
    /// Checks H = H† exactly.
    pub fn new(re: DMatrix<f64>, im: DMatrix<f64>) -> Result<Self> {
        let n = re.nrows();
        if re.ncols() != n || im.nrows() != n || im.ncols() != n {
            return domain("real and imaginary parts must be square and of equal size");
        }
        for i in 0..n {
            if im[(i, i)] != 0.0 {
                return domain(format!("imaginary diagonal entry {i} is nonzero"));
            }
            for j in 0..i {
                if re[(i, j)] != re[(j, i)] || im[(i, j)] != -im[(j, i)] {
                    return domain(format!("entry ({i}, {j}) breaks hermiticity"));
                }
            }
        }
        if re.iter().chain(im.iter()).any(|v| !v.is_finite()) {
            return domain("matrix has non-finite entries");
        }
        Ok(Self { re, im })
    }

    pub fn dim(&self) -> usize {
        self.re.nrows()
    }

    pub fn re(&self) -> &DMatrix<f64> {
        &self.re
    }

    pub fn im(&self) -> &DMatrix<f64> {
        &self.im
    }

    pub fn trace(&self) -> f64 {
        self.re.trace()
    }

    /// Real-symmetric 2n×2n embedding [[A, −B], [B, A]] of H = A + iB.
    pub fn real_embedding(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.re);
        m.view_mut((n, n), (n, n)).copy_from(&self.re);
        m.view_mut((n, 0), (n, n)).copy_from(&self.im);
        m.view_mut((0, n), (n, n)).copy_from(&(-&self.im));
        m
    }
}

/// Draws H^(S) + iλH^(A): unit-variance off-diagonal entries, diagonal of
/// H^(S) with variance 2, zero diagonal of H^(A).
pub fn sample_crossover_matrix<R: Rng + ?Sized>(
    params: &CrossoverParams,
    rng: &mut R,
) -> HermitianMatrix {
    let n = params.n();
    let lambda = params.lambda();
    let mut re = DMatrix::<f64>::zeros(n, n);
    let mut im = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let d: f64 = rng.sample(StandardNormal);
        re[(i, i)] = std::f64::consts::SQRT_2 * d;
        for j in 0..i {
            let s: f64 = rng.sample(StandardNormal);
            re[(i, j)] = s;
            re[(j, i)] = s;
        }
    }
    if lambda > 0.0 {
        for i in 0..n {
            for j in 0..i {
                let a: f64 = rng.sample(StandardNormal);
                im[(i, j)] = lambda * a;
                im[(j, i)] = -lambda * a;
            }
        }
    }
    HermitianMatrix { re, im }
}

/// All eigenvalues of `h` in ascending order.
///
/// Diagonalizes the real embedding, whose spectrum is that of `h` with every
/// eigenvalue doubled, and collapses the pairs.
pub fn hermitian_eigenvalues(h: &HermitianMatrix) -> Result<Vec<f64>> {
    let n = h.dim();
    if h.im.iter().all(|&v| v == 0.0) {
        let mut eig: Vec<f64> =
            h.re.clone()
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .collect();
        eig.sort_by(f64::total_cmp);
        return Ok(eig);
    }
    let mut doubled: Vec<f64> = h
        .real_embedding()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    doubled.sort_by(f64::total_cmp);
    collapse_pairs(&doubled, n)
}

/// Collapses a sorted list in which every value appears twice.
pub(crate) fn collapse_pairs(doubled: &[f64], n: usize) -> Result<Vec<f64>> {
    let radius = doubled
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let tol = 1e-8 * radius;
    let mut out = Vec::with_capacity(n);
    for (k, pair) in doubled.chunks_exact(2).enumerate() {
        if (pair[1] - pair[0]).abs() > tol {
            return Err(Error::Numerical(format!(
                "embedded eigenvalues {} and {} do not pair ({} vs {}, tolerance {tol:e})",
                2 * k,
                2 * k + 1,
                pair[0],
                pair[1]
            )));
        }
        out.push(0.5 * (pair[0] + pair[1]));
    }
    Ok(out)
}

/// Central ⌈fraction·n⌉ values, centred on the median index.
pub fn bulk_select(eigs: &[f64], bulk_fraction: f64) -> Result<&[f64]> {
    if !(bulk_fraction > 0.0 && bulk_fraction <= 1.0) {
        return domain(format!(
            "bulk fraction must lie in (0, 1], got {bulk_fraction}"
        ));
    }
    let n = eigs.len();
    let keep = ((bulk_fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let keep = keep.min(n);
    if keep == 0 {
        return Err(Error::Degenerate("bulk selection is empty".into()));
    }
    let start = (n - keep) / 2;
    Ok(&eigs[start..start + keep])
}

/// How simulated eigenvalues are unfolded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Unfolding {
    /// Per-realization least-squares polynomial of the given degree.
    Polynomial { degree: usize },
    /// Analytic semicircle staircase for the matrix variance convention.
    Semicircle,
}

impl Default for Unfolding {
    fn default() -> Self {
        Unfolding::Polynomial { degree: 3 }
    }
}

/// Unfolds bulk eigenvalues of an N×N crossover matrix with the semicircle
/// law of radius 2√(N(1+λ²)).
pub fn unfold_semicircle(bulk: &[f64], params: &CrossoverParams) -> Result<UnfoldedSpectrum> {
    let n = params.n() as f64;
    let radius = 2.0 * (n * (1.0 + params.lambda().powi(2))).sqrt();
    let values: Vec<f64> = bulk
        .iter()
        .map(|&e| {
            let x = (e / radius).clamp(-1.0, 1.0);
            n * (0.5 + (x * (1.0 - x * x).sqrt() + x.asin()) / PI)
        })
        .collect();
    UnfoldedSpectrum::new(values, Provenance::Semicircle, bulk.len())
}

/// Everything needed to reproduce an ensemble of unfolded spectra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n: usize,
    pub count: usize,
    pub xi: f64,
    pub phi: f64,
    pub bulk_fraction: f64,
    pub seed: u64,
    pub unfolding: Unfolding,
}

pub const DEFAULT_BULK_FRACTION: f64 = 0.6;

impl EnsembleConfig {
    /// Config with the default bulk fraction and polynomial unfolding.
    pub fn new(n: usize, count: usize, xi: f64, phi: f64, seed: u64) -> Self {
        Self {
            n,
            count,
            xi,
            phi,
            bulk_fraction: DEFAULT_BULK_FRACTION,
            seed,
            unfolding: Unfolding::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 1 {
            return domain("ensemble needs at least one realization");
        }
        if self.n < 2 {
            return domain(format!(
                "matrix dimension must be at least 2, got {}",
                self.n
            ));
        }
        CrossoverParams::new(self.xi, self.n)?;
        if !(self.phi > 0.0 && self.phi <= 1.0) {
            return domain(format!(
                "observed fraction must lie in (0, 1], got {}",
                self.phi
            ));
        }
        if !(self.bulk_fraction > 0.0 && self.bulk_fraction <= 1.0) {
            return domain(format!(
                "bulk fraction must lie in (0, 1], got {}",
                self.bulk_fraction
            ));
        }
        if let Unfolding::Polynomial { degree } = self.unfolding {
            let bulk = (self.bulk_fraction * self.n as f64).ceil() as usize;
            if bulk <= 2 * degree {
                return domain(format!(
                    "bulk of {bulk} levels is too small for a degree-{degree} unfolding"
                ));
            }
        }
        Ok(())
    }

    /// Bulk levels per realization before decimation.
    pub fn bulk_len(&self) -> usize {
        ((self.bulk_fraction * self.n as f64) - 1e-9).ceil() as usize
    }
}

/// Random stream of one realization: ChaCha8 keyed by the master seed with the
/// realization index as stream id, so the result does not depend on the
/// order in which realizations are processed.
pub fn realization_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// One realization: sample, diagonalize, select the bulk, unfold, decimate.
pub fn generate_realization(config: &EnsembleConfig, index: usize) -> Result<UnfoldedSpectrum> {
    let params = CrossoverParams::new(config.xi, config.n)?;
    let mut rng = realization_rng(config.seed, index);
    let h = sample_crossover_matrix(&params, &mut rng);
    let eigs = hermitian_eigenvalues(&h)?;
    let bulk = bulk_select(&eigs, config.bulk_fraction)?;
    let unfolded = match config.unfolding {
        Unfolding::Polynomial { degree } => {
            let levels = LevelSequence::new(bulk.to_vec(), LevelUnit::RawEigenvalue)?;
            unfold_polynomial(&levels, degree)?
        }
        Unfolding::Semicircle => unfold_semicircle(bulk, &params)?,
    };
    decimate(&unfolded, config.phi, &mut rng)
}

/// All realizations of `config`, in realization order.
pub fn generate_ensemble(config: &EnsembleConfig) -> Result<Vec<UnfoldedSpectrum>> {
    config.validate()?;
    (0..config.count)
        .into_par_iter()
        .map(|index| {
            generate_realization(config, index).map_err(|e| Error::Realization {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}
