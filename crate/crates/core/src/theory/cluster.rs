//! Two-point cluster function Y₂(L; ξ) = s(L)² − D(L; ξ)·J(L; ξ).
//!
//! D carries the growing weight e^{2ξ²x²} on [0, π] and J the decaying
//! weight e^{−2ξ²x²} on [π, ∞). Both are evaluated with the common factor
//! e^{±2ξ²π²} divided out, so the product never overflows.
//!
//! J is computed in one of three ways:
//! - ξ = 0: J = 1/2 − Si(πL)/π.
//! - 0 < ξ ≤ 0.3: J = erf(L/(2√2 ξ))/2 − (1/π)∫₀^π e^{−2ξ²x²} sin(Lx)/x dx,
//!   which avoids the slowly decaying tail of the defining integral.
//! - ξ > 0.3: the defining integral, truncated where the weight drops below
//!   e^{−37} of its value at π.

use super::check_xi;
use crate::error::{domain, Result};
use crate::numeric::GaussLegendre;
use crate::special::{erf, sine_integral};
use std::f64::consts::{PI, SQRT_2};
use std::sync::OnceLock;

const ERF_ROUTE_MAX_XI: f64 = 0.3;
const TAIL_LOG_CUTOFF: f64 = 37.0;

fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// Panels for an integrand oscillating like sin(Lx): at most half a period
/// and at most 1/4 wide.
fn panel_count(a: f64, b: f64, l: f64) -> usize {
    let width = if l > 0.0 { (PI / l).min(0.25) } else { 0.25 };
    ((b - a) / width).ceil().max(1.0) as usize
}

/// s(L) = sin(πL)/(πL), with s(0) = 1.
pub fn sinc_pi(l: f64) -> f64 {
    let x = PI * l;
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// e^{−2ξ²π²}·D and e^{2ξ²π²}·J for L ≥ 0.
fn scaled_d_j(l: f64, xi: f64) -> (f64, f64) {
    let gl = gl16();
    let a = 2.0 * xi * xi;
    let shift = a * PI * PI;
    let n = panel_count(0.0, PI, l);
    let d = gl.integrate_panels(0.0, PI, n, |x| {
        (a * x * x - shift).exp() * x * (l * x).sin()
    }) / PI;
    let j = if xi == 0.0 {
        0.5 - sine_integral(PI * l) / PI
    } else if xi <= ERF_ROUTE_MAX_XI {
        let head = gl.integrate_panels(0.0, PI, n, |x| (-a * x * x).exp() * (l * x).sin() / x) / PI;
        (0.5 * erf(l / (2.0 * SQRT_2 * xi)) - head) * shift.exp()
    } else {
        let x_max = (PI * PI + TAIL_LOG_CUTOFF / a).sqrt();
        gl.integrate_panels(PI, x_max, panel_count(PI, x_max, l), |x| {
            (-a * (x * x - PI * PI)).exp() * (l * x).sin() / x
        }) / PI
    };
    (d, j)
}

/// Y₂(L; ξ) for 0 ≤ ξ ≤ 1.5; even in L.
pub fn cluster_y2(l: f64, xi: f64) -> Result<f64> {
    check_xi(xi)?;
    if !l.is_finite() {
        return domain(format!("L must be finite, got {l}"));
    }
    let l = l.abs();
    if l == 0.0 {
        return Ok(1.0);
    }
    let s = sinc_pi(l);
    let (d, j) = scaled_d_j(l, xi);
    Ok(s * s - d * j)
}
