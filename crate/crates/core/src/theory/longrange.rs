//! Σ², Δ₃ and the form factor, all as integrals of Y₂ against a kernel.
//!
//! Y₂ is tabulated per ξ at 40 Gauss–Legendre nodes on each unit panel
//! [k, k+1] up to r = [`R_MAX`], filled lazily and shared by every caller.
//! Beyond R_MAX the cluster function is replaced by its asymptote 1/(π²r²),
//! whose kernel integrals are done analytically.

use super::{check_xi, cluster_y2};
use crate::error::{domain, Result};
use crate::numeric::{GaussLegendre, NeumaierSum};
use crate::special::sine_integral;
use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

/// Extent of the tabulated cluster function.
pub const R_MAX: f64 = 200.0;
const NODES_PER_UNIT: usize = 40;
const FORM_FACTOR_GRID: usize = 2000;

type Panels = Vec<Arc<[f64]>>;

fn gl40() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NODES_PER_UNIT))
}

fn panel_cache() -> &'static RwLock<HashMap<u64, Panels>> {
    static CACHE: OnceLock<RwLock<HashMap<u64, Panels>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// The first `count` unit panels of tabulated Y₂ for `xi`.
fn y2_panels(xi: f64, count: usize) -> Result<Panels> {
    let key = xi.to_bits();
    let have = {
        let cache = panel_cache().read().expect("cluster cache poisoned");
        match cache.get(&key) {
            Some(p) if p.len() >= count => return Ok(p[..count].to_vec()),
            Some(p) => p.len(),
            None => 0,
        }
    };
    let gl = gl40();
    let fresh: Vec<Arc<[f64]>> = (have..count)
        .into_par_iter()
        .map(|k| {
            gl.mapped(k as f64, (k + 1) as f64)
                .map(|(r, _)| cluster_y2(r, xi))
                .collect::<Result<Vec<f64>>>()
                .map(Arc::from)
        })
        .collect::<Result<_>>()?;
    let mut cache = panel_cache().write().expect("cluster cache poisoned");
    let entry = cache.entry(key).or_default();
    // another writer may have got here first; values are identical
    if entry.len() == have {
        entry.extend(fresh);
    }
    Ok(entry[..count].to_vec())
}

/// Barycentric weights for the 40 Gauss–Legendre nodes of a unit panel.
fn barycentric_weights() -> &'static [f64] {
    static WEIGHTS: OnceLock<Vec<f64>> = OnceLock::new();
    WEIGHTS.get_or_init(|| {
        gl40()
            .mapped(0.0, 1.0)
            .enumerate()
            .map(|(j, (r, w))| {
                let x = 2.0 * r - 1.0;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * ((1.0 - x * x) * 2.0 * w).sqrt()
            })
            .collect()
    })
}

/// Degree-39 interpolant of one tabulated panel [k, k+1] at r.
fn interpolate_panel(ys: &[f64], k: usize, r: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (((node, _), y), w) in gl40()
        .mapped(k as f64, (k + 1) as f64)
        .zip(ys)
        .zip(barycentric_weights())
    {
        let d = r - node;
        if d == 0.0 {
            return *y;
        }
        num += w * y / d;
        den += w / d;
    }
    num / den
}

/// ∫₀^{min(L, R_MAX)} g(r) Y₂(r; ξ) dr.
fn integrate_y2(xi: f64, l: f64, g: impl Fn(f64) -> f64) -> Result<f64> {
    let top = l.min(R_MAX);
    let full = top.floor() as usize;
    let rest = top - full as f64;
    let needed = if rest > 0.0 { full + 1 } else { full };
    let panels = y2_panels(xi, needed)?;
    let gl = gl40();
    let mut acc = NeumaierSum::default();
    for (k, ys) in panels.iter().take(full).enumerate() {
        for ((r, w), y) in gl.mapped(k as f64, (k + 1) as f64).zip(ys.iter()) {
            acc.add(w * g(r) * y);
        }
    }
    if rest > 0.0 {
        let ys = &panels[full];
        acc.add(gl.integrate(full as f64, top, |r| g(r) * interpolate_panel(ys, full, r)));
    }
    Ok(acc.total())
}

fn check_length(l: f64) -> Result<()> {
    if !(l >= 0.0 && l.is_finite()) {
        return domain(format!("L must be finite and non-negative, got {l}"));
    }
    Ok(())
}

/// Number variance Σ²(L; ξ) = L − 2∫₀^L (L − r) Y₂(r) dr.
pub fn sigma2_theory(l: f64, xi: f64) -> Result<f64> {
    check_xi(xi)?;
    check_length(l)?;
    let mut inner = integrate_y2(xi, l, |r| l - r)?;
    if l > R_MAX {
        inner += (l * (1.0 / R_MAX - 1.0 / l) - (l / R_MAX).ln()) / (PI * PI);
    }
    Ok(l - 2.0 * inner)
}

fn delta3_kernel(l: f64, r: f64) -> f64 {
    let d = l - r;
    d * d * d * (2.0 * l * l - 9.0 * r * l - 3.0 * r * r)
}

/// Rigidity Δ₃(L; ξ) = L/15 − (1/15L⁴)∫₀^L (L−r)³(2L² − 9rL − 3r²) Y₂(r) dr.
pub fn delta3_theory(l: f64, xi: f64) -> Result<f64> {
    check_xi(xi)?;
    check_length(l)?;
    if l == 0.0 {
        return Ok(0.0);
    }
    let mut inner = integrate_y2(xi, l, |r| delta3_kernel(l, r))?;
    if l > R_MAX {
        let panels = ((l - R_MAX) / 50.0).ceil() as usize;
        inner += gl40().integrate_panels(R_MAX, l, panels, |r| {
            delta3_kernel(l, r) / (PI * PI * r * r)
        });
    }
    Ok(l / 15.0 - inner / (15.0 * l.powi(4)))
}

/// GOE form factor b(t) = 1 − 2t + t ln(1 + 2t), 0 ≤ t ≤ 1.
pub fn goe_form_factor_b(t: f64) -> f64 {
    1.0 - 2.0 * t + t * (2.0 * t).ln_1p()
}

/// GUE form factor b(t) = 1 − t, 0 ≤ t ≤ 1.
pub fn gue_form_factor_b(t: f64) -> f64 {
    1.0 - t
}

fn check_time(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return domain(format!("t must lie in [0, 1], got {t}"));
    }
    Ok(())
}

/// b(t) = ∫ Y₂(r) e^{−2πirt} dr by quadrature up to R_MAX plus the
/// analytic transform of the 1/(π²r²) tail.
pub fn form_factor_numeric(t: f64, xi: f64) -> Result<f64> {
    check_xi(xi)?;
    check_time(t)?;
    let w = 2.0 * PI * t;
    let body = integrate_y2(xi, R_MAX, |r| (w * r).cos())?;
    let tail = if w == 0.0 {
        1.0 / R_MAX
    } else {
        (w * R_MAX).cos() / R_MAX - w * (0.5 * PI - sine_integral(w * R_MAX))
    };
    Ok(2.0 * body + 2.0 * tail / (PI * PI))
}

fn form_factor_table(xi: f64) -> Result<Arc<[f64]>> {
    static CACHE: OnceLock<RwLock<HashMap<u64, Arc<[f64]>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = xi.to_bits();
    if let Some(t) = cache.read().expect("form factor cache poisoned").get(&key) {
        return Ok(t.clone());
    }
    let table: Arc<[f64]> = (0..=FORM_FACTOR_GRID)
        .into_par_iter()
        .map(|i| form_factor_numeric(i as f64 / FORM_FACTOR_GRID as f64, xi))
        .collect::<Result<Vec<_>>>()?
        .into();
    cache
        .write()
        .expect("form factor cache poisoned")
        .entry(key)
        .or_insert(table.clone());
    Ok(table)
}

/// Four-point Lagrange interpolation on the uniform table over [0, 1].
fn interpolate(table: &[f64], t: f64) -> f64 {
    let n = table.len() - 1;
    let x = t * n as f64;
    let i = (x.floor() as usize).clamp(1, n - 2);
    let u = x - i as f64;
    let (y0, y1, y2, y3) = (table[i - 1], table[i], table[i + 1], table[i + 2]);
    -u * (u - 1.0) * (u - 2.0) / 6.0 * y0 + (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0 * y1
        - (u + 1.0) * u * (u - 2.0) / 2.0 * y2
        + (u + 1.0) * u * (u - 1.0) / 6.0 * y3
}

/// Form factor b(t; ξ): closed forms at ξ = 0 and ξ ≥ 1, otherwise the
/// numeric transform, tabulated once per ξ and interpolated.
pub fn form_factor_b(t: f64, xi: f64) -> Result<f64> {
    check_xi(xi)?;
    check_time(t)?;
    if xi == 0.0 {
        Ok(goe_form_factor_b(t))
    } else if xi >= 1.0 {
        Ok(gue_form_factor_b(t))
    } else {
        Ok(interpolate(&form_factor_table(xi)?, t))
    }
}

/// K(t; ξ) = 1 − b(t; ξ).
pub fn form_factor_k(t: f64, xi: f64) -> Result<f64> {
    Ok(1.0 - form_factor_b(t, xi)?)
}
