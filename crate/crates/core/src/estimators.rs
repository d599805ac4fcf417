//! Empirical fluctuation statistics of unfolded spectra.
//!
//! Every estimator first reduces each spectrum to a few partial sums, then
//! combines the partial sums in spectrum order, so results do not depend on
//! how the per-spectrum work is scheduled.

use crate::curve::{CurveMeta, CurvePoint, StatCurve, StatKind};
use crate::error::{domain, Error, Result};
use crate::numeric::{mean_and_stderr, GaussLegendre, NeumaierSum};
use crate::special::chi_squared_sf;
use crate::spectra::UnfoldedSpectrum;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Default histogram bin width for spacing distributions.
pub const DEFAULT_BIN_WIDTH: f64 = 0.2;

/// Spacings ε_{i+k} − ε_i of order k (k = 1: nearest neighbours).
#[derive(Debug, Clone, PartialEq)]
pub struct SpacingSample {
    spacings: Vec<f64>,
    order: usize,
}

impl SpacingSample {
    pub fn new(spacings: Vec<f64>, order: usize) -> Result<Self> {
        if order < 1 {
            return domain("spacing order must be at least 1");
        }
        if let Some(i) = spacings.iter().position(|&s| !(s > 0.0 && s.is_finite())) {
            return domain(format!("spacing {i} is not positive and finite"));
        }
        Ok(Self { spacings, order })
    }

    /// Pools samples of the same order.
    pub fn pooled<'a>(samples: impl IntoIterator<Item = &'a SpacingSample>) -> Result<Self> {
        let mut spacings = Vec::new();
        let mut order = None;
        for s in samples {
            match order {
                None => order = Some(s.order),
                Some(o) if o != s.order => {
                    return domain(format!("cannot pool spacing orders {o} and {}", s.order))
                }
                _ => {}
            }
            spacings.extend_from_slice(&s.spacings);
        }
        Self::new(spacings, order.unwrap_or(1))
    }

    pub fn spacings(&self) -> &[f64] {
        &self.spacings
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.spacings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spacings.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.spacings
            .iter()
            .copied()
            .collect::<NeumaierSum>()
            .total()
            / self.len() as f64
    }
}

/// Spacings between levels k apart.
pub fn kth_neighbor_spacings(spectrum: &UnfoldedSpectrum, k: usize) -> Result<SpacingSample> {
    let v = spectrum.values();
    if k < 1 || k >= v.len() {
        return domain(format!(
            "neighbor order {k} needs 1 <= k < spectrum length {}",
            v.len()
        ));
    }
    SpacingSample::new(v.windows(k + 1).map(|w| w[k] - w[0]).collect(), k)
}

/// Pooled k-th neighbour spacings of an ensemble.
pub fn ensemble_spacings(spectra: &[UnfoldedSpectrum], k: usize) -> Result<SpacingSample> {
    let samples = spectra
        .iter()
        .map(|s| kth_neighbor_spacings(s, k))
        .collect::<Result<Vec<_>>>()?;
    SpacingSample::pooled(&samples)
}

/// Density-normalized histogram with bins [j·w, (j+1)·w), x at bin centres.
pub fn spacing_histogram(sample: &SpacingSample, bin_width: f64) -> Result<StatCurve> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return domain(format!("bin width must be positive, got {bin_width}"));
    }
    if sample.is_empty() {
        return Err(Error::Degenerate(
            "histogram of an empty spacing sample".into(),
        ));
    }
    let max = sample.spacings.iter().copied().fold(0.0, f64::max);
    let nbins = (max / bin_width).floor() as usize + 1;
    let mut counts = vec![0usize; nbins];
    for &s in &sample.spacings {
        counts[((s / bin_width).floor() as usize).min(nbins - 1)] += 1;
    }
    let norm = 1.0 / (sample.len() as f64 * bin_width);
    let points = counts
        .iter()
        .enumerate()
        .map(|(j, &c)| CurvePoint::new((j as f64 + 0.5) * bin_width, c as f64 * norm))
        .collect();
    let kind = if sample.order == 1 {
        StatKind::NnPdf
    } else {
        StatKind::KthPdf(sample.order)
    };
    StatCurve::new(
        kind,
        points,
        CurveMeta {
            bin_width: Some(bin_width),
            ..CurveMeta::default()
        },
    )
}

/// Empirical cumulative distribution I(s) on `grid`.
pub fn spacing_cumulant(sample: &SpacingSample, grid: &[f64]) -> Result<StatCurve> {
    if sample.is_empty() {
        return Err(Error::Degenerate(
            "cumulant of an empty spacing sample".into(),
        ));
    }
    let mut sorted = sample.spacings.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let points = grid
        .iter()
        .map(|&s| CurvePoint::new(s, sorted.partition_point(|&v| v <= s) as f64 / n))
        .collect();
    StatCurve::new(StatKind::NnCdf, points, CurveMeta::default())
}

/// Result of a χ² goodness-of-fit test of a spacing sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// χ² test of `sample` against the density `pdf`, with bins of `bin_width`
/// merged until every expected count is at least 5 and an open tail bin.
pub fn chi_square_test<F: Fn(f64) -> f64>(
    sample: &SpacingSample,
    bin_width: f64,
    pdf: F,
) -> Result<ChiSquareTest> {
    if !(bin_width > 0.0) {
        return domain("bin width must be positive");
    }
    if sample.len() < 10 {
        return Err(Error::Degenerate(
            "chi-square test needs at least 10 spacings".into(),
        ));
    }
    let n = sample.len() as f64;
    let gl = GaussLegendre::new(12);
    let max = sample.spacings.iter().copied().fold(0.0, f64::max);
    let nbins = (max / bin_width).floor() as usize + 1;
    let mut observed = vec![0.0; nbins];
    for &s in &sample.spacings {
        observed[((s / bin_width).floor() as usize).min(nbins - 1)] += 1.0;
    }
    let expected: Vec<f64> = (0..nbins)
        .map(|j| n * gl.integrate(j as f64 * bin_width, (j + 1) as f64 * bin_width, &pdf))
        .collect();
    // merge left to right until each group expects >= 5; the remainder and
    // the open tail go into the last group
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (ob, ex) in observed.iter().zip(&expected) {
        o += ob;
        e += ex;
        if e >= 5.0 {
            groups.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    e += (n - expected.iter().sum::<f64>()).max(0.0);
    match groups.last_mut() {
        Some(last) if e < 5.0 => {
            last.0 += o;
            last.1 += e;
        }
        _ => groups.push((o, e)),
    }
    if groups.len() < 2 {
        return Err(Error::Degenerate(
            "too few populated bins for a chi-square test".into(),
        ));
    }
    let statistic: f64 = groups
        .iter()
        .filter(|g| g.1 > 0.0)
        .map(|&(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = groups.len() - 1;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: chi_squared_sf(statistic, dof as f64),
    })
}

/// Per-spectrum offset of the first window, as a fraction of the step.
fn dither(index: usize) -> f64 {
    const GOLDEN: f64 = 0.618_033_988_749_894_9;
    ((index + 1) as f64 * GOLDEN).fract()
}

/// Window start positions of length `l` with step l/4 over `values`.
fn window_starts(values: &[f64], l: f64, index: usize) -> impl Iterator<Item = f64> {
    let first = values[0];
    let last = values[values.len() - 1];
    let step = 0.25 * l;
    let offset = dither(index) * step;
    (0..)
        .map(move |j| first + offset + j as f64 * step)
        .take_while(move |a| a + l <= last)
}

fn count_in(values: &[f64], a: f64, b: f64) -> usize {
    values.partition_point(|&v| v < b) - values.partition_point(|&v| v < a)
}

fn check_long_enough(spectra: &[UnfoldedSpectrum], l: f64, what: &str) -> bool {
    if let Some((i, s)) = spectra
        .iter()
        .enumerate()
        .find(|(_, s)| s.span() < 10.0 * l)
    {
        log::warn!(
            "{what}: omitting L = {l}; spectrum {i} spans {:.1} < 10 L",
            s.span()
        );
        return false;
    }
    true
}

fn check_grid(spectra: &[UnfoldedSpectrum], l_grid: &[f64]) -> Result<()> {
    if spectra.is_empty() {
        return domain("no spectra supplied");
    }
    if let Some(l) = l_grid.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
        return domain(format!("interval lengths must be positive, got {l}"));
    }
    if l_grid.windows(2).any(|w| w[1] <= w[0]) {
        return domain("interval lengths must be increasing");
    }
    Ok(())
}

/// Number variance Σ²(L): windows of length L stepped by L/4 across each
/// spectrum, counts pooled over windows and spectra around the pooled mean;
/// the error is the standard error over spectra.
pub fn number_variance(spectra: &[UnfoldedSpectrum], l_grid: &[f64]) -> Result<StatCurve> {
    check_grid(spectra, l_grid)?;
    let mut points = Vec::new();
    for &l in l_grid {
        if !check_long_enough(spectra, l, "number variance") {
            continue;
        }
        // (windows, Σc, Σc²) per spectrum
        let sums: Vec<(f64, f64, f64)> = spectra
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let v = s.values();
                window_starts(v, l, i).fold((0.0, 0.0, 0.0), |(n, c1, c2), a| {
                    let c = count_in(v, a, a + l) as f64;
                    (n + 1.0, c1 + c, c2 + c * c)
                })
            })
            .collect();
        let total: f64 = sums.iter().map(|s| s.0).sum();
        if total == 0.0 {
            continue;
        }
        let mean = sums.iter().map(|s| s.1).sum::<f64>() / total;
        let dev = |&(n, c1, c2): &(f64, f64, f64)| c2 - 2.0 * mean * c1 + mean * mean * n;
        let pooled = sums.iter().map(dev).collect::<NeumaierSum>().total() / total;
        let per: Vec<f64> = sums
            .iter()
            .filter(|s| s.0 > 0.0)
            .map(|s| dev(s) / s.0)
            .collect();
        let (_, err) = mean_and_stderr(&per);
        points.push(CurvePoint::with_err(l, pooled.max(0.0), err));
    }
    StatCurve::new(
        StatKind::Sigma2,
        points,
        CurveMeta {
            n_spectra: Some(spectra.len()),
            ..CurveMeta::default()
        },
    )
}

/// Least-squares deviation of the staircase from a straight line over
/// [a, a + l], divided by l. Exact piecewise moments of the step function.
pub fn window_rigidity(values: &[f64], a: f64, l: f64) -> f64 {
    let h = 0.5 * l;
    let centre = a + h;
    let lo = values.partition_point(|&v| v < a);
    let hi = values.partition_point(|&v| v <= a + l);
    let inside = &values[lo..hi];
    // centre the staircase height to limit cancellation
    let shift = 0.5 * inside.len() as f64;
    let (mut i0, mut i1, mut i2) = (0.0, 0.0, 0.0);
    let mut x_prev = -h;
    let mut k = -shift;
    for x in inside.iter().map(|v| v - centre).chain(std::iter::once(h)) {
        let dx = x - x_prev;
        i0 += k * dx;
        i1 += k * 0.5 * (x * x - x_prev * x_prev);
        i2 += k * k * dx;
        x_prev = x;
        k += 1.0;
    }
    let resid = i2 - i0 * i0 / l - i1 * i1 * 12.0 / (l * l * l);
    (resid / l).max(0.0)
}

/// Spectral rigidity Δ₃(L) on the same windows as [`number_variance`],
/// averaged over windows and spectra.
pub fn rigidity(spectra: &[UnfoldedSpectrum], l_grid: &[f64]) -> Result<StatCurve> {
    check_grid(spectra, l_grid)?;
    let mut points = Vec::new();
    for &l in l_grid {
        if !check_long_enough(spectra, l, "rigidity") {
            continue;
        }
        let sums: Vec<(f64, f64)> = spectra
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let v = s.values();
                let mut acc = NeumaierSum::default();
                let mut n = 0.0;
                for a in window_starts(v, l, i) {
                    acc.add(window_rigidity(v, a, l));
                    n += 1.0;
                }
                (n, acc.total())
            })
            .collect();
        let total: f64 = sums.iter().map(|s| s.0).sum();
        if total == 0.0 {
            continue;
        }
        let mean = sums.iter().map(|s| s.1).collect::<NeumaierSum>().total() / total;
        let per: Vec<f64> = sums
            .iter()
            .filter(|s| s.0 > 0.0)
            .map(|s| s.1 / s.0)
            .collect();
        let (_, err) = mean_and_stderr(&per);
        points.push(CurvePoint::with_err(l, mean, err));
    }
    StatCurve::new(
        StatKind::Delta3,
        points,
        CurveMeta {
            n_spectra: Some(spectra.len()),
            ..CurveMeta::default()
        },
    )
}

/// How the deviation series δ_q = ε_{q+1} − ε_1 − q is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaConvention {
    /// δ_q exactly as defined.
    Literal,
    /// δ_q − q·δ_{N−1}/(N−1): the segment's own mean spacing is removed so
    /// the series starts and ends at zero, as for a stationary spectrum.
    #[default]
    Detrended,
}

/// Deviation series of the first `n` levels.
pub fn delta_series(values: &[f64], n: usize, convention: DeltaConvention) -> Vec<f64> {
    let mut d: Vec<f64> = (0..n).map(|q| values[q] - values[0] - q as f64).collect();
    if convention == DeltaConvention::Detrended && n > 1 {
        let slope = d[n - 1] / (n - 1) as f64;
        for (q, v) in d.iter_mut().enumerate() {
            *v -= q as f64 * slope;
        }
    }
    d
}

/// Ensemble-averaged power spectrum ⟨|N^{-1/2} Σ_q δ_q e^{−2πiτq/N}|²⟩ of the
/// first `n_common` levels of each spectrum, reported at τ̃ = τ/N ∈ (0, ½].
pub fn power_spectrum(
    spectra: &[UnfoldedSpectrum],
    n_common: usize,
    convention: DeltaConvention,
) -> Result<StatCurve> {
    if spectra.is_empty() {
        return domain("no spectra supplied");
    }
    if n_common < 4 {
        return domain(format!("common length must be at least 4, got {n_common}"));
    }
    if let Some((i, s)) = spectra.iter().enumerate().find(|(_, s)| s.len() < n_common) {
        return domain(format!(
            "spectrum {i} has {} levels, fewer than the common length {n_common}",
            s.len()
        ));
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_common);
    let half = n_common / 2;
    let per: Vec<Vec<f64>> = spectra
        .par_iter()
        .map(|s| {
            let mut buf: Vec<Complex64> = delta_series(s.values(), n_common, convention)
                .into_iter()
                .map(|d| Complex64::new(d, 0.0))
                .collect();
            fft.process(&mut buf);
            buf[1..=half]
                .iter()
                .map(|z| z.norm_sqr() / n_common as f64)
                .collect()
        })
        .collect();
    let points = (0..half)
        .map(|j| {
            let column: Vec<f64> = per.iter().map(|p| p[j]).collect();
            let (mean, err) = mean_and_stderr(&column);
            CurvePoint::with_err((j + 1) as f64 / n_common as f64, mean, err)
        })
        .collect();
    StatCurve::new(
        StatKind::PowerSpectrum,
        points,
        CurveMeta {
            n_spectra: Some(spectra.len()),
            ..CurveMeta::default()
        },
    )
}

/// Length of the shortest spectrum.
pub fn min_length(spectra: &[UnfoldedSpectrum]) -> usize {
    spectra.iter().map(|s| s.len()).min().unwrap_or(0)
}
