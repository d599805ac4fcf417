//! Special functions. The sine integral is implemented here; erf, Γ and the
//! χ² distribution come from `statrs`.

use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

pub use statrs::function::erf::erf;
pub use statrs::function::gamma::{gamma, ln_gamma};

const SERIES_LIMIT: f64 = 4.0;

/// Sine integral Si(x) = ∫₀ˣ sin t / t dt.
///
/// Power series for |x| ≤ 4, Lentz continued fraction for E₁(ix) beyond.
pub fn sine_integral(x: f64) -> f64 {
    if x < 0.0 {
        return -sine_integral(-x);
    }
    if x == 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return FRAC_PI_2;
    }
    if x <= SERIES_LIMIT {
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut k = 0.0;
        loop {
            term *= -x2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
            let add = term / (2.0 * k + 3.0);
            sum += add;
            k += 1.0;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        let h = e1_imaginary_fraction(x);
        let h = Complex64::new(x.cos(), -x.sin()) * h;
        FRAC_PI_2 + h.im
    }
}

/// Continued fraction for e^{ix} E₁(ix); valid for x ≳ 2.
fn e1_imaginary_fraction(x: f64) -> Complex64 {
    const TINY: f64 = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 2..10_000 {
        let a = -((i - 1) as f64).powi(2);
        b += 2.0;
        d = (d * a + b).inv();
        c = b + c.inv() * a;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h
}

/// Upper tail probability of the χ² distribution with `dof` degrees of freedom.
pub fn chi_squared_sf(stat: f64, dof: f64) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    statrs::function::gamma::gamma_ur(0.5 * dof, 0.5 * stat)
}
