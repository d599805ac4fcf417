//! Distributions of the (n+1)-st nearest-neighbour spacing of a complete
//! spectrum: exact for n = 0, fitted γ s^μ e^{−χs²} forms for n = 1, 2, and
//! Gaussians of mean n + 1 and variance Σ²(n) − 1/6 beyond.

use super::{check_xi, crossover_spacing_pdf, sigma2_theory};
use crate::error::{domain, Error, Result};
use crate::estimators::{ensemble_spacings, spacing_histogram};
use crate::fitting::{fit_ptilde, PTildeConstraint};
use crate::rmt::{generate_ensemble, EnsembleConfig};
use crate::special::ln_gamma;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

/// First neighbour index described by a Gaussian.
pub const GAUSSIAN_FROM: usize = 3;

const HISTOGRAM_BIN: f64 = 0.1;
const NORMALIZATION_TOL: f64 = 1e-6;
const MEAN_TOL: f64 = 0.02;

/// P̃(s) = γ s^μ e^{−χs²}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PTilde {
    pub gamma: f64,
    pub mu: f64,
    pub chi: f64,
}

impl PTilde {
    /// The unit-mass member with exponents (μ, χ).
    pub fn normalized(mu: f64, chi: f64) -> Result<Self> {
        if !(mu > -1.0 && mu.is_finite() && chi > 0.0 && chi.is_finite()) {
            return domain(format!(
                "P~ needs mu > -1 and chi > 0, got mu={mu} chi={chi}"
            ));
        }
        let a = 0.5 * (mu + 1.0);
        let gamma = (2f64.ln() + a * chi.ln() - ln_gamma(a)).exp();
        Ok(Self { gamma, mu, chi })
    }

    /// The unit-mass member with exponent μ and the given mean.
    pub fn with_mean(mu: f64, mean: f64) -> Result<Self> {
        if !(mean > 0.0) {
            return domain(format!("mean must be positive, got {mean}"));
        }
        let ratio = (ln_gamma(0.5 * (mu + 2.0)) - ln_gamma(0.5 * (mu + 1.0))).exp();
        Self::normalized(mu, (ratio / mean).powi(2))
    }

    pub fn pdf(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return if s == 0.0 && self.mu == 0.0 {
                self.gamma
            } else {
                0.0
            };
        }
        self.gamma * (self.mu * s.ln() - self.chi * s * s).exp()
    }

    /// ∫₀^∞ s^k P̃ ds in closed form.
    fn moment(&self, k: f64) -> f64 {
        let a = 0.5 * (self.mu + k + 1.0);
        self.gamma * 0.5 * (ln_gamma(a) - a * self.chi.ln()).exp()
    }

    pub fn mass(&self) -> f64 {
        self.moment(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.moment(1.0)
    }
}

/// Fitted neighbour distributions for one crossover strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NthNeighborModel {
    xi: f64,
    fitted: [PTilde; 2],
}

impl NthNeighborModel {
    /// Checks unit mass and a mean within 2% of n + 1 for both fitted forms.
    pub fn from_parts(xi: f64, fitted: [PTilde; 2]) -> Result<Self> {
        check_xi(xi)?;
        for (i, p) in fitted.iter().enumerate() {
            let n = i + 1;
            if (p.mass() - 1.0).abs() > NORMALIZATION_TOL {
                return domain(format!("component {n} has mass {}", p.mass()));
            }
            let target = (n + 1) as f64;
            if (p.mean() - target).abs() > MEAN_TOL * target {
                return domain(format!(
                    "component {n} has mean {}, expected {target}",
                    p.mean()
                ));
            }
        }
        Ok(Self { xi, fitted })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// Fitted form for n ∈ {1, 2}.
    pub fn fitted(&self, n: usize) -> Option<&PTilde> {
        match n {
            1 | 2 => Some(&self.fitted[n - 1]),
            _ => None,
        }
    }

    /// V²(n) = Σ²(n) − 1/6.
    pub fn gaussian_variance(&self, n: usize) -> Result<f64> {
        Ok(sigma2_theory(n as f64, self.xi)? - 1.0 / 6.0)
    }

    /// Density of the (n+1)-st nearest-neighbour spacing.
    pub fn neighbor_pdf(&self, n: usize, s: f64) -> Result<f64> {
        match n {
            0 => crossover_spacing_pdf(s.max(0.0), self.xi),
            1 | 2 => Ok(self.fitted[n - 1].pdf(s)),
            _ => {
                let v2 = self.gaussian_variance(n)?;
                let d = s - (n + 1) as f64;
                Ok((-0.5 * d * d / v2).exp() / (2.0 * PI * v2).sqrt())
            }
        }
    }
}

/// Ensemble of 500 complete 500×500 spectra, as used for the published fits.
pub fn default_model_config(xi: f64, seed: u64) -> EnsembleConfig {
    EnsembleConfig::new(500, 500, xi, 1.0, seed)
}

/// Simulates complete spectra at `xi` and fits the next and second-next
/// nearest-neighbour spacing histograms.
pub fn build_nth_neighbor_model(xi: f64, config: &EnsembleConfig) -> Result<NthNeighborModel> {
    check_xi(xi)?;
    if config.xi != xi {
        return domain(format!(
            "ensemble xi {} differs from model xi {xi}",
            config.xi
        ));
    }
    if config.phi != 1.0 {
        return domain("neighbour fits need complete spectra (phi = 1)");
    }
    let spectra = generate_ensemble(config)?;
    let mut fitted = Vec::with_capacity(2);
    for n in 1..GAUSSIAN_FROM {
        let sample = ensemble_spacings(&spectra, n + 1)?;
        let histogram = spacing_histogram(&sample, HISTOGRAM_BIN)?;
        let fit = fit_ptilde(&histogram, PTildeConstraint::Mean((n + 1) as f64)).map_err(|e| {
            Error::HistogramFit {
                order: n,
                histogram: Box::new(histogram.clone()),
                source: Box::new(e),
            }
        })?;
        fitted.push(fit);
    }
    NthNeighborModel::from_parts(xi, [fitted[0], fitted[1]])
}

/// [`build_nth_neighbor_model`] memoized on the full configuration.
pub fn cached_nth_neighbor_model(
    xi: f64,
    config: &EnsembleConfig,
) -> Result<Arc<NthNeighborModel>> {
    static CACHE: OnceLock<RwLock<HashMap<String, Arc<NthNeighborModel>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = format!("{xi:?}|{config:?}");
    if let Some(m) = cache.read().expect("model cache poisoned").get(&key) {
        return Ok(m.clone());
    }
    let model = Arc::new(build_nth_neighbor_model(xi, config)?);
    Ok(cache
        .write()
        .expect("model cache poisoned")
        .entry(key)
        .or_insert(model)
        .clone())
}
