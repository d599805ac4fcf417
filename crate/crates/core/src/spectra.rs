//! Level sequences, unfolding, random decimation and the S-parameter
//! cross-correlation coefficient.

use crate::error::{domain, Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const GHZ: f64 = 1e9;

/// Physical meaning of the numbers in a [`LevelSequence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelUnit {
    FrequencyGhz,
    RawEigenvalue,
    Unfolded,
}

pub(crate) fn check_levels(values: &[f64]) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::InvalidLevels(format!(
            "need at least 2 levels, got {}",
            values.len()
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidLevels(format!("level {i} is not finite")));
    }
    if let Some(i) = values.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidLevels(format!(
            "levels {} and {} are not strictly increasing ({} >= {})",
            i,
            i + 1,
            values[i],
            values[i + 1]
        )));
    }
    Ok(())
}

/// Strictly increasing list of raw levels.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSequence {
    values: Vec<f64>,
    unit: LevelUnit,
}

impl LevelSequence {
    pub fn new(values: Vec<f64>, unit: LevelUnit) -> Result<Self> {
        check_levels(&values)?;
        Ok(Self { values, unit })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn unit(&self) -> LevelUnit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Sign in front of the perimeter term of Weyl's law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerimeterSign {
    /// Dirichlet boundary conditions.
    #[default]
    Minus,
    Plus,
}

impl PerimeterSign {
    fn factor(self) -> f64 {
        match self {
            PerimeterSign::Minus => -1.0,
            PerimeterSign::Plus => 1.0,
        }
    }
}

/// Billiard shape data entering Weyl's law. Lengths in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilliardGeometry {
    pub area: f64,
    pub perimeter: f64,
    pub perimeter_sign: PerimeterSign,
    pub constant_offset: f64,
}

impl BilliardGeometry {
    pub fn new(area: f64, perimeter: f64, perimeter_sign: PerimeterSign) -> Result<Self> {
        if !(area > 0.0 && area.is_finite()) {
            return domain(format!("billiard area must be positive, got {area}"));
        }
        if !(perimeter > 0.0 && perimeter.is_finite()) {
            return domain(format!(
                "billiard perimeter must be positive, got {perimeter}"
            ));
        }
        Ok(Self {
            area,
            perimeter,
            perimeter_sign,
            constant_offset: 0.0,
        })
    }

    pub fn with_offset(mut self, constant_offset: f64) -> Self {
        self.constant_offset = constant_offset;
        self
    }

    /// Geometry whose additive constant maps `lowest_ghz` to count 1/2.
    pub fn calibrated_to(self, lowest_ghz: f64) -> Result<Self> {
        let raw = self.with_offset(0.0);
        let n = weyl_count(&raw, lowest_ghz)?;
        Ok(raw.with_offset(0.5 - n))
    }

    fn coefficients(&self) -> (f64, f64) {
        let quad = self.area * PI / (SPEED_OF_LIGHT * SPEED_OF_LIGHT) * GHZ * GHZ;
        let lin = self.perimeter_sign.factor() * self.perimeter / (2.0 * SPEED_OF_LIGHT) * GHZ;
        (quad, lin)
    }

    /// Frequency (GHz) below which the minus-sign Weyl count decreases.
    pub fn turning_point(&self) -> f64 {
        let (quad, lin) = self.coefficients();
        (-lin / (2.0 * quad)).max(0.0)
    }
}

/// Smooth level count 𝒜π/c²·ν² ± ℒ/(2c)·ν + const at `nu_ghz`.
pub fn weyl_count(geometry: &BilliardGeometry, nu_ghz: f64) -> Result<f64> {
    if !(nu_ghz >= 0.0) {
        return domain(format!("frequency must be non-negative, got {nu_ghz}"));
    }
    let (quad, lin) = geometry.coefficients();
    Ok(quad * nu_ghz * nu_ghz + lin * nu_ghz + geometry.constant_offset)
}

/// Frequency (GHz) at which the Weyl count reaches `count`, on the increasing branch.
pub fn weyl_inverse(geometry: &BilliardGeometry, count: f64) -> Result<f64> {
    let (quad, lin) = geometry.coefficients();
    let c = geometry.constant_offset - count;
    let disc = lin * lin - 4.0 * quad * c;
    if disc < 0.0 {
        return domain(format!(
            "count {count} lies below the minimum of the Weyl curve"
        ));
    }
    // numerically stable root of quad·ν² + lin·ν + c = 0 (larger root)
    let sq = disc.sqrt();
    let nu = if lin >= 0.0 {
        2.0 * (-c) / (lin + sq)
    } else {
        (-lin + sq) / (2.0 * quad)
    };
    Ok(nu)
}

/// How an [`UnfoldedSpectrum`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Provenance {
    Weyl,
    Polynomial { degree: usize },
    Semicircle,
    Decimated { phi: f64 },
}

/// Levels rescaled to (nominally) unit mean spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedSpectrum {
    values: Vec<f64>,
    provenance: Provenance,
    source_count: usize,
}

impl UnfoldedSpectrum {
    pub fn new(values: Vec<f64>, provenance: Provenance, source_count: usize) -> Result<Self> {
        check_levels(&values)?;
        Ok(Self {
            values,
            provenance,
            source_count,
        })
    }

    /// Wraps already-unfolded levels, e.g. read from a file.
    pub fn from_unfolded(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(values, Provenance::Weyl, n)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn source_count(&self) -> usize {
        self.source_count
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// (last − first) / (len − 1).
    pub fn mean_spacing(&self) -> f64 {
        let n = self.values.len();
        (self.values[n - 1] - self.values[0]) / (n - 1) as f64
    }

    pub fn span(&self) -> f64 {
        self.values[self.values.len() - 1] - self.values[0]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Unfolds measured eigenfrequencies with Weyl's law, ε_i = N^Weyl(ν_i).
pub fn unfold_weyl(
    levels: &LevelSequence,
    geometry: &BilliardGeometry,
) -> Result<UnfoldedSpectrum> {
    if levels.unit() != LevelUnit::FrequencyGhz {
        return domain(format!(
            "Weyl unfolding expects frequencies in GHz, got {:?}",
            levels.unit()
        ));
    }
    let values = levels
        .values()
        .iter()
        .map(|&nu| weyl_count(geometry, nu))
        .collect::<Result<Vec<_>>>()?;
    if let Some(i) = values.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::Numerical(format!(
            "Weyl unfolding is not monotone at level {i} ({} GHz, turning point {} GHz)",
            levels.values()[i],
            geometry.turning_point()
        )));
    }
    UnfoldedSpectrum::new(values, Provenance::Weyl, levels.len())
}

pub const MIN_POLY_DEGREE: usize = 3;
pub const MAX_POLY_DEGREE: usize = 15;

/// Unfolds by a least-squares polynomial fit of the staircase N(ε_i) = i − ½.
///
/// The polynomial is expanded in Chebyshev polynomials of the levels mapped
/// onto [−1, 1], which keeps the normal equations well conditioned up to
/// degree 15.
pub fn unfold_polynomial(levels: &LevelSequence, degree: usize) -> Result<UnfoldedSpectrum> {
    if !(MIN_POLY_DEGREE..=MAX_POLY_DEGREE).contains(&degree) {
        return domain(format!(
            "polynomial degree must lie in [{MIN_POLY_DEGREE}, {MAX_POLY_DEGREE}], got {degree}"
        ));
    }
    let x = levels.values();
    let m = x.len();
    if m <= 2 * degree {
        return domain(format!(
            "polynomial unfolding of degree {degree} needs more than {} levels, got {m}",
            2 * degree
        ));
    }
    let (lo, hi) = (x[0], x[m - 1]);
    let scale = |v: f64| (2.0 * v - lo - hi) / (hi - lo);
    let cols = degree + 1;
    let mut design = DMatrix::<f64>::zeros(m, cols);
    for (i, &v) in x.iter().enumerate() {
        let t = scale(v);
        for (j, c) in chebyshev_row(t, cols).into_iter().enumerate() {
            design[(i, j)] = c;
        }
    }
    let target = DVector::from_iterator(m, (0..m).map(|i| i as f64 + 0.5));
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::Numerical(format!(
            "polynomial unfolding is rank deficient (singular values {smin:e} / {smax:e}, degree {degree}, {m} levels)"
        )));
    }
    let coeffs = svd
        .solve(&target, 0.0)
        .map_err(|e| Error::Numerical(format!("least-squares solve failed: {e}")))?;
    let values: Vec<f64> = x
        .iter()
        .map(|&v| {
            chebyshev_row(scale(v), cols)
                .into_iter()
                .zip(coeffs.iter())
                .map(|(b, c)| b * c)
                .sum()
        })
        .collect();
    if let Some(i) = values.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::Numerical(format!(
            "fitted staircase is not monotone near level {i} (degree {degree})"
        )));
    }
    UnfoldedSpectrum::new(values, Provenance::Polynomial { degree }, m)
}

fn chebyshev_row(t: f64, cols: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(cols);
    row.push(1.0);
    if cols > 1 {
        row.push(t);
    }
    for j in 2..cols {
        let next = 2.0 * t * row[j - 1] - row[j - 2];
        row.push(next);
    }
    row
}

/// Removes each level independently with probability 1 − Φ and rescales the
/// survivors by Φ so the mean spacing returns to one.
pub fn decimate<R: Rng + ?Sized>(
    spectrum: &UnfoldedSpectrum,
    phi: f64,
    rng: &mut R,
) -> Result<UnfoldedSpectrum> {
    if !(phi > 0.0 && phi <= 1.0) {
        return domain(format!("observed fraction must lie in (0, 1], got {phi}"));
    }
    if phi == 1.0 {
        return Ok(spectrum.clone());
    }
    let kept: Vec<f64> = spectrum
        .values()
        .iter()
        .filter(|_| rng.random::<f64>() < phi)
        .map(|&v| v * phi)
        .collect();
    if kept.len() < 2 {
        return Err(Error::Degenerate(format!(
            "only {} of {} levels survived decimation at phi = {phi}",
            kept.len(),
            spectrum.len()
        )));
    }
    UnfoldedSpectrum::new(kept, Provenance::Decimated { phi }, spectrum.source_count())
}

/// Two-port transmission measurement on a uniform frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SParameterTrace {
    freq_ghz: Vec<f64>,
    s12: Vec<Complex64>,
    s21: Vec<Complex64>,
}

impl SParameterTrace {
    pub fn new(freq_ghz: Vec<f64>, s12: Vec<Complex64>, s21: Vec<Complex64>) -> Result<Self> {
        if freq_ghz.len() != s12.len() || freq_ghz.len() != s21.len() {
            return domain(format!(
                "trace channels differ in length: {} frequencies, {} S12, {} S21",
                freq_ghz.len(),
                s12.len(),
                s21.len()
            ));
        }
        check_levels(&freq_ghz)?;
        let n = freq_ghz.len();
        let step = (freq_ghz[n - 1] - freq_ghz[0]) / (n - 1) as f64;
        if let Some(i) = freq_ghz
            .windows(2)
            .position(|w| ((w[1] - w[0]) - step).abs() > 1e-6 * step)
        {
            return domain(format!("frequency grid is not uniform at point {i}"));
        }
        Ok(Self { freq_ghz, s12, s21 })
    }

    pub fn freq_ghz(&self) -> &[f64] {
        &self.freq_ghz
    }

    pub fn s12(&self) -> &[Complex64] {
        &self.s12
    }

    pub fn s21(&self) -> &[Complex64] {
        &self.s21
    }

    pub fn len(&self) -> usize {
        self.freq_ghz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq_ghz.is_empty()
    }

    pub fn step_ghz(&self) -> f64 {
        let n = self.freq_ghz.len();
        (self.freq_ghz[n - 1] - self.freq_ghz[0]) / (n - 1) as f64
    }
}

/// Cross-correlation coefficient Re⟨S^fl₁₂ S^fl*₂₁⟩ / √(⟨|S^fl₁₂|²⟩⟨|S^fl₂₁|²⟩)
/// over paired samples, with the arithmetic mean removed from each channel.
pub fn correlation_coefficient(s12: &[Complex64], s21: &[Complex64]) -> Result<f64> {
    let n = s12.len();
    if n == 0 || n != s21.len() {
        return domain("cross-correlation needs two non-empty channels of equal length");
    }
    let inv = 1.0 / n as f64;
    let m12: Complex64 = s12.iter().sum::<Complex64>() * inv;
    let m21: Complex64 = s21.iter().sum::<Complex64>() * inv;
    let (mut cross, mut p12, mut p21) = (0.0, 0.0, 0.0);
    for (a, b) in s12.iter().zip(s21) {
        let a = a - m12;
        let b = b - m21;
        cross += (a * b.conj()).re;
        p12 += a.norm_sqr();
        p21 += b.norm_sqr();
    }
    if p12 <= 0.0 || p21 <= 0.0 {
        return Err(Error::Undefined(
            "cross-correlation coefficient with a zero-variance channel".into(),
        ));
    }
    Ok((cross / (p12 * p21).sqrt()).clamp(-1.0, 1.0))
}

/// Minimum number of grid points a correlation window must cover.
pub const MIN_WINDOW_POINTS: usize = 20;

/// Coefficient of one analysis window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowCorrelation {
    pub start_ghz: f64,
    pub end_ghz: f64,
    pub points: usize,
    pub coefficient: f64,
}

/// Cross-correlation coefficients in consecutive windows of `window_ghz`,
/// each with its own mean removed. A trailing window shorter than
/// [`MIN_WINDOW_POINTS`] is dropped.
pub fn cross_correlation(
    trace: &SParameterTrace,
    window_ghz: f64,
) -> Result<Vec<WindowCorrelation>> {
    if !(window_ghz > 0.0) {
        return domain(format!("window must be positive, got {window_ghz}"));
    }
    let per_window = (window_ghz / trace.step_ghz()).round() as usize;
    if per_window < MIN_WINDOW_POINTS || per_window > trace.len() {
        return domain(format!(
            "a {window_ghz} GHz window covers {per_window} grid points; need between {MIN_WINDOW_POINTS} and {}",
            trace.len()
        ));
    }
    let f = trace.freq_ghz();
    let mut out = Vec::new();
    let mut start = 0;
    while start < trace.len() {
        // window [f0, f0 + w)
        let end =
            f[start..].partition_point(|&v| v < f[start] + window_ghz - 1e-9 * window_ghz) + start;
        let points = end - start;
        if points < MIN_WINDOW_POINTS {
            log::warn!(
                "dropping trailing window at {} GHz with {points} points",
                f[start]
            );
            break;
        }
        let coefficient = correlation_coefficient(&trace.s12[start..end], &trace.s21[start..end])?;
        out.push(WindowCorrelation {
            start_ghz: f[start],
            end_ghz: f[end - 1],
            points,
            coefficient,
        });
        start = end;
    }
    Ok(out)
}
