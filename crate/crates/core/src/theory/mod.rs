//! Analytic and quadrature evaluation of the theory curves.
//!
//! The crossover strength ξ enters through the two-point cluster function
//! Y₂(L; ξ) and the Wigner-like spacing law; the observed fraction Φ enters
//! through the random-missing transforms in [`missing`].

mod cluster;
mod longrange;
pub mod missing;
mod neighbor;
mod spacing;

pub use cluster::{cluster_y2, sinc_pi};
pub use longrange::{
    delta3_theory, form_factor_b, form_factor_k, form_factor_numeric, goe_form_factor_b,
    gue_form_factor_b, sigma2_theory, R_MAX,
};
pub use missing::{
    missing_delta3, missing_power_spectrum, missing_sigma2, missing_spacing_pdf, MissingSpacing,
};
pub use neighbor::{
    build_nth_neighbor_model, cached_nth_neighbor_model, default_model_config, NthNeighborModel,
    PTilde, GAUSSIAN_FROM,
};
pub use spacing::{c_of_lambda, crossover_spacing_pdf, spacing_pdf_lambda, wigner_goe, wigner_gue};

use crate::curve::{CurveMeta, CurvePoint, StatCurve, StatKind};
use crate::error::{domain, Error, Result};
use std::fmt;
use std::str::FromStr;

/// Largest crossover strength accepted by the cluster function. Beyond it the
/// e^{2ξ²x²} weight makes D·J meaningless in double precision, and the
/// spectrum is GUE-like long before.
pub const XI_MAX: f64 = 1.5;

pub(crate) fn check_xi(xi: f64) -> Result<()> {
    if !(0.0..=XI_MAX).contains(&xi) {
        return domain(format!("xi must lie in [0, {XI_MAX}], got {xi}"));
    }
    Ok(())
}

pub(crate) fn check_phi(phi: f64) -> Result<()> {
    if !(phi > 0.0 && phi <= 1.0) {
        return domain(format!("phi must lie in (0, 1], got {phi}"));
    }
    Ok(())
}

/// Validated (ξ, Φ) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryParams {
    xi: f64,
    phi: f64,
}

impl TheoryParams {
    pub fn new(xi: f64, phi: f64) -> Result<Self> {
        check_xi(xi)?;
        check_phi(phi)?;
        Ok(Self { xi, phi })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// Curves the command-line front end can tabulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoryCurve {
    Spacing,
    Sigma2,
    Delta3,
    Power,
    Y2,
    FormFactor,
}

impl FromStr for TheoryCurve {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ps" => Self::Spacing,
            "sigma2" => Self::Sigma2,
            "delta3" => Self::Delta3,
            "power" => Self::Power,
            "y2" => Self::Y2,
            "K" => Self::FormFactor,
            other => return domain(format!("unknown theory curve '{other}'")),
        })
    }
}

impl fmt::Display for TheoryCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Spacing => "ps",
            Self::Sigma2 => "sigma2",
            Self::Delta3 => "delta3",
            Self::Power => "power",
            Self::Y2 => "y2",
            Self::FormFactor => "K",
        })
    }
}

/// Tabulates `curve` on `grid`. The spacing law at Φ < 1 needs an n-th
/// neighbour model; power-spectrum points outside (0, 1) are skipped.
pub fn theory_curve(
    curve: TheoryCurve,
    params: TheoryParams,
    grid: &[f64],
    model: Option<&NthNeighborModel>,
) -> Result<StatCurve> {
    let (xi, phi) = (params.xi, params.phi);
    let mut meta = CurveMeta {
        xi: Some(xi),
        phi: Some(phi),
        ..CurveMeta::default()
    };
    let (kind, points): (StatKind, Vec<CurvePoint>) = match curve {
        TheoryCurve::Spacing => {
            let points = if phi < 1.0 {
                let model = model.ok_or_else(|| {
                    Error::Domain("the spacing law at phi < 1 needs an n-th neighbour model".into())
                })?;
                let m = MissingSpacing::new(xi, phi, model)?;
                grid.iter()
                    .map(|&s| Ok(CurvePoint::new(s, m.pdf(s)?)))
                    .collect::<Result<_>>()?
            } else {
                grid.iter()
                    .map(|&s| Ok(CurvePoint::new(s, crossover_spacing_pdf(s, xi)?)))
                    .collect::<Result<_>>()?
            };
            (StatKind::TheorySpacing, points)
        }
        TheoryCurve::Sigma2 => (
            StatKind::TheorySigma2,
            grid.iter()
                .map(|&l| Ok(CurvePoint::new(l, missing_sigma2(l, xi, phi)?)))
                .collect::<Result<_>>()?,
        ),
        TheoryCurve::Delta3 => (
            StatKind::TheoryDelta3,
            grid.iter()
                .map(|&l| Ok(CurvePoint::new(l, missing_delta3(l, xi, phi)?)))
                .collect::<Result<_>>()?,
        ),
        TheoryCurve::Power => {
            let mut points = Vec::with_capacity(grid.len());
            for &t in grid {
                if !(t > 0.0 && t < 1.0) {
                    log::warn!("skipping singular power-spectrum point t = {t}");
                    continue;
                }
                points.push(CurvePoint::new(t, missing_power_spectrum(t, xi, phi)?));
            }
            (StatKind::TheoryPower, points)
        }
        TheoryCurve::Y2 => {
            meta.phi = None;
            (
                StatKind::TheoryY2,
                grid.iter()
                    .map(|&l| Ok(CurvePoint::new(l, cluster_y2(l, xi)?)))
                    .collect::<Result<_>>()?,
            )
        }
        TheoryCurve::FormFactor => {
            meta.phi = None;
            (
                StatKind::TheoryFormFactor,
                grid.iter()
                    .map(|&t| Ok(CurvePoint::new(t, form_factor_k(t, xi)?)))
                    .collect::<Result<_>>()?,
            )
        }
    };
    StatCurve::new(kind, points, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validate() {
        assert!(TheoryParams::new(0.35, 0.81).is_ok());
        assert!(TheoryParams::new(1.6, 0.81).is_err());
        assert!(TheoryParams::new(-0.1, 0.81).is_err());
        assert!(TheoryParams::new(0.3, 0.0).is_err());
        assert!(TheoryParams::new(0.3, 1.01).is_err());
    }

    #[test]
    fn curve_names_round_trip() {
        for c in ["ps", "sigma2", "delta3", "power", "y2", "K"] {
            assert_eq!(c.parse::<TheoryCurve>().unwrap().to_string(), c);
        }
        assert!("k".parse::<TheoryCurve>().is_err());
    }

    #[test]
    fn power_curve_skips_singular_points() {
        let p = TheoryParams::new(1.0, 1.0).unwrap();
        let c = theory_curve(TheoryCurve::Power, p, &[0.0, 0.25, 0.5, 1.0], None).unwrap();
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn spacing_curve_needs_model_below_one() {
        let p = TheoryParams::new(0.2, 0.8).unwrap();
        assert!(theory_curve(TheoryCurve::Spacing, p, &[1.0], None).is_err());
        let p = TheoryParams::new(0.2, 1.0).unwrap();
        assert!(theory_curve(TheoryCurve::Spacing, p, &[1.0], None).is_ok());
    }
}
