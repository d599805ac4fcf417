//! Statistics of a spectrum from which each level was kept independently
//! with probability Φ and the survivors rescaled to unit mean spacing.

use super::{check_phi, check_xi, delta3_theory, form_factor_k, sigma2_theory, NthNeighborModel};
use crate::error::{domain, Error, Result};
use std::f64::consts::PI;

/// Terms with weight (1 − Φ)^n below this are dropped.
pub const WEIGHT_CUTOFF: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
enum Component {
    Exact,
    Fitted(usize),
    Gaussian { mean: f64, var: f64 },
}

/// Nearest-neighbour spacing density of the thinned spectrum,
/// p(s) = Σ_n (1 − Φ)^n P(n; s/Φ), prepared for repeated evaluation.
#[derive(Debug, Clone)]
pub struct MissingSpacing<'a> {
    phi: f64,
    model: &'a NthNeighborModel,
    terms: Vec<(f64, Component)>,
    norm: f64,
}

impl<'a> MissingSpacing<'a> {
    pub fn new(xi: f64, phi: f64, model: &'a NthNeighborModel) -> Result<Self> {
        check_xi(xi)?;
        check_phi(phi)?;
        if model.xi() != xi {
            return domain(format!("model was built for xi = {}, not {xi}", model.xi()));
        }
        let q = 1.0 - phi;
        let mut terms = Vec::new();
        let mut weight = 1.0;
        let mut n = 0;
        while weight >= WEIGHT_CUTOFF {
            let c = match n {
                0 => Component::Exact,
                1 | 2 => Component::Fitted(n),
                _ => Component::Gaussian {
                    mean: (n + 1) as f64,
                    var: model.gaussian_variance(n)?,
                },
            };
            terms.push((weight, c));
            weight *= q;
            n += 1;
        }
        // each term carries mass Φ·weight
        let norm = phi * terms.iter().map(|t| t.0).sum::<f64>();
        Ok(Self {
            phi,
            model,
            terms,
            norm,
        })
    }

    /// Number of retained terms.
    pub fn terms(&self) -> usize {
        self.terms.len()
    }

    pub fn pdf(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return domain(format!("spacing must be non-negative, got {s}"));
        }
        let x = s / self.phi;
        let mut total = 0.0;
        for &(w, c) in &self.terms {
            let p = match c {
                Component::Exact => self.model.neighbor_pdf(0, x)?,
                Component::Fitted(n) => self.model.neighbor_pdf(n, x)?,
                Component::Gaussian { mean, var } => {
                    let d = x - mean;
                    (-0.5 * d * d / var).exp() / (2.0 * PI * var).sqrt()
                }
            };
            total += w * p;
        }
        Ok(total / self.norm)
    }
}

/// One-shot p(s); prefer [`MissingSpacing`] for many points.
pub fn missing_spacing_pdf(s: f64, xi: f64, phi: f64, model: &NthNeighborModel) -> Result<f64> {
    MissingSpacing::new(xi, phi, model)?.pdf(s)
}

/// σ²(L) = (1 − Φ)L + Φ²Σ²(L/Φ).
pub fn missing_sigma2(l: f64, xi: f64, phi: f64) -> Result<f64> {
    check_phi(phi)?;
    Ok((1.0 - phi) * l + phi * phi * sigma2_theory(l / phi, xi)?)
}

/// δ₃(L) = (1 − Φ)L/15 + Φ²Δ₃(L/Φ).
pub fn missing_delta3(l: f64, xi: f64, phi: f64) -> Result<f64> {
    check_phi(phi)?;
    Ok((1.0 - phi) * l / 15.0 + phi * phi * delta3_theory(l / phi, xi)?)
}

/// Ensemble power spectrum ⟨s(t)⟩ of the thinned spectrum for 0 < t < 1.
pub fn missing_power_spectrum(t: f64, xi: f64, phi: f64) -> Result<f64> {
    check_phi(phi)?;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Undefined(format!(
            "power spectrum is singular at t = {t}; need 0 < t < 1"
        )));
    }
    let u = 1.0 - t;
    let k1 = form_factor_k(phi * t, xi)?;
    let k2 = form_factor_k(phi * u, xi)?;
    let sin = (PI * t).sin();
    Ok(
        phi / (4.0 * PI * PI) * ((k1 - 1.0) / (t * t) + (k2 - 1.0) / (u * u)) + 0.25 / (sin * sin)
            - phi * phi / 12.0,
    )
}
