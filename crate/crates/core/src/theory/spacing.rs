//! Wigner-like nearest-neighbour spacing law across the GOE→GUE crossover.

use crate::error::{domain, Result};
use crate::special::erf;
use std::f64::consts::{PI, SQRT_2};

/// Scale c(λ) of the crossover spacing law.
pub fn c_of_lambda(lambda: f64) -> f64 {
    let l2 = lambda * lambda;
    let bracket = 1.0 - 2.0 / PI * ((lambda / SQRT_2).atan() - SQRT_2 * lambda / (2.0 + l2));
    (PI * (2.0 + l2) / 4.0).sqrt() * bracket
}

/// Spacing density for the two-level coupling λ (λ = 2ξ). Valid for any
/// λ ≥ 0; λ = 0 gives the GOE surmise.
pub fn spacing_pdf_lambda(s: f64, lambda: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let c = c_of_lambda(lambda);
    let e = if lambda == 0.0 {
        1.0
    } else {
        erf(s * c / lambda)
    };
    s * ((2.0 + lambda * lambda) / 2.0).sqrt() * c * c * e * (-0.5 * s * s * c * c).exp()
}

/// Crossover spacing density P(s; ξ).
///
/// Any finite ξ ≥ 0 is accepted: unlike the cluster function, this closed
/// form stays well conditioned deep in the GUE regime.
pub fn crossover_spacing_pdf(s: f64, xi: f64) -> Result<f64> {
    if !(xi >= 0.0 && xi.is_finite()) {
        return domain(format!("xi must be finite and non-negative, got {xi}"));
    }
    if !(s >= 0.0) {
        return domain(format!("spacing must be non-negative, got {s}"));
    }
    Ok(spacing_pdf_lambda(s, 2.0 * xi))
}

/// GOE Wigner surmise (π/2) s e^{−πs²/4}.
pub fn wigner_goe(s: f64) -> f64 {
    0.5 * PI * s * (-0.25 * PI * s * s).exp()
}

/// GUE Wigner surmise (32/π²) s² e^{−4s²/π}.
pub fn wigner_gue(s: f64) -> f64 {
    32.0 / (PI * PI) * s * s * (-4.0 * s * s / PI).exp()
}
