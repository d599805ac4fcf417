//! Sampled statistic curves and their CSV representation.
//!
//! ```text
//! # kind=sigma2, xi=0.35, phi=0.81, n_spectra=300
//! x,y,yerr
//! 0.5,0.4012,0.0031
//! ```
//!
//! Unknown metadata values are written as `?`; a missing error is an empty
//! field.

use crate::error::{Error, Result};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

/// Which statistic a [`StatCurve`] samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StatKind {
    NnPdf,
    NnCdf,
    KthPdf(usize),
    Sigma2,
    Delta3,
    PowerSpectrum,
    FormFactor,
    TheorySpacing,
    TheorySigma2,
    TheoryDelta3,
    TheoryPower,
    TheoryY2,
    TheoryFormFactor,
}

impl StatKind {
    /// Densities and variances must be non-negative.
    pub fn is_nonnegative(&self) -> bool {
        !matches!(self, StatKind::TheoryY2)
    }
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StatKind::NnPdf => "nn_pdf",
            StatKind::NnCdf => "nn_cdf",
            StatKind::KthPdf(k) => return write!(f, "kth_pdf({k})"),
            StatKind::Sigma2 => "sigma2",
            StatKind::Delta3 => "delta3",
            StatKind::PowerSpectrum => "power_spectrum",
            StatKind::FormFactor => "form_factor",
            StatKind::TheorySpacing => "theory_ps",
            StatKind::TheorySigma2 => "theory_sigma2",
            StatKind::TheoryDelta3 => "theory_delta3",
            StatKind::TheoryPower => "theory_power",
            StatKind::TheoryY2 => "theory_y2",
            StatKind::TheoryFormFactor => "theory_K",
        };
        f.write_str(s)
    }
}

impl FromStr for StatKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "nn_pdf" => StatKind::NnPdf,
            "nn_cdf" => StatKind::NnCdf,
            "sigma2" => StatKind::Sigma2,
            "delta3" => StatKind::Delta3,
            "power_spectrum" => StatKind::PowerSpectrum,
            "form_factor" => StatKind::FormFactor,
            "theory_ps" => StatKind::TheorySpacing,
            "theory_sigma2" => StatKind::TheorySigma2,
            "theory_delta3" => StatKind::TheoryDelta3,
            "theory_power" => StatKind::TheoryPower,
            "theory_y2" => StatKind::TheoryY2,
            "theory_K" => StatKind::TheoryFormFactor,
            other => {
                let k = other
                    .strip_prefix("kth_pdf(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|k| k.parse().ok())
                    .ok_or_else(|| Error::Domain(format!("unknown statistic kind '{other}'")))?;
                StatKind::KthPdf(k)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
    pub y_err: Option<f64>,
}

impl CurvePoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y, y_err: None }
    }

    pub fn with_err(x: f64, y: f64, y_err: Option<f64>) -> Self {
        Self { x, y, y_err }
    }
}

/// Parameters a curve was produced with; `None` means unknown.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CurveMeta {
    pub xi: Option<f64>,
    pub phi: Option<f64>,
    pub n_spectra: Option<usize>,
    pub bin_width: Option<f64>,
}

/// A sampled statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct StatCurve {
    kind: StatKind,
    points: Vec<CurvePoint>,
    pub meta: CurveMeta,
}

impl StatCurve {
    /// Validates increasing x, finite y and non-negativity where required.
    pub fn new(kind: StatKind, points: Vec<CurvePoint>, meta: CurveMeta) -> Result<Self> {
        if let Some(i) = points.windows(2).position(|w| w[1].x <= w[0].x) {
            return Err(Error::Domain(format!(
                "curve x values not increasing at point {}",
                i + 1
            )));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::Domain(format!("curve point {i} is not finite")));
            }
            if kind.is_nonnegative() && p.y < 0.0 {
                return Err(Error::Domain(format!(
                    "curve point {i} of kind {kind} is negative ({})",
                    p.y
                )));
            }
        }
        Ok(Self { kind, points, meta })
    }

    pub fn kind(&self) -> StatKind {
        self.kind
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.x)
    }

    pub fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.y)
    }

    /// Points with `lo <= x <= hi`.
    pub fn in_range(&self, lo: f64, hi: f64) -> impl Iterator<Item = &CurvePoint> {
        self.points.iter().filter(move |p| p.x >= lo && p.x <= hi)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let opt = |v: Option<f64>| v.map_or_else(|| "?".to_string(), |v| format!("{v}"));
        write!(
            w,
            "# kind={}, xi={}, phi={}, n_spectra={}",
            self.kind,
            opt(self.meta.xi),
            opt(self.meta.phi),
            self.meta
                .n_spectra
                .map_or_else(|| "?".to_string(), |n| n.to_string())
        )?;
        if let Some(b) = self.meta.bin_width {
            write!(w, ", bin_width={b}")?;
        }
        writeln!(w)?;
        writeln!(w, "x,y,yerr")?;
        for p in &self.points {
            match p.y_err {
                Some(e) => writeln!(w, "{},{},{}", p.x, p.y, e)?,
                None => writeln!(w, "{},{},", p.x, p.y)?,
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty curve file".into(),
        })?;
        let header = header?;
        let body = header.strip_prefix('#').ok_or(Error::Parse {
            line: 1,
            message: "missing '# kind=...' header".into(),
        })?;
        let mut kind = None;
        let mut meta = CurveMeta::default();
        for field in body.split(',') {
            let Some((key, value)) = field.trim().split_once('=') else {
                continue;
            };
            let value = value.trim();
            let num = |v: &str| -> Result<Option<f64>> {
                if v == "?" {
                    Ok(None)
                } else {
                    v.parse().map(Some).map_err(|_| Error::Parse {
                        line: 1,
                        message: format!("bad value '{v}' for {key}"),
                    })
                }
            };
            match key.trim() {
                "kind" => kind = Some(value.parse::<StatKind>()?),
                "xi" => meta.xi = num(value)?,
                "phi" => meta.phi = num(value)?,
                "bin_width" => meta.bin_width = num(value)?,
                "n_spectra" => meta.n_spectra = num(value)?.map(|v| v as usize),
                _ => {}
            }
        }
        let kind = kind.ok_or(Error::Parse {
            line: 1,
            message: "header lacks kind=".into(),
        })?;
        let mut points = Vec::new();
        for (i, line) in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("x,") {
                continue;
            }
            let bad = |m: &str| Error::Parse {
                line: i + 1,
                message: format!("{m}: '{line}'"),
            };
            let mut fields = line.split(',');
            let x: f64 = fields
                .next()
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(|| bad("bad x"))?;
            let y: f64 = fields
                .next()
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(|| bad("bad y"))?;
            let y_err = match fields.next().map(str::trim) {
                None | Some("") => None,
                Some(f) => Some(f.parse().map_err(|_| bad("bad yerr"))?),
            };
            points.push(CurvePoint { x, y, y_err });
        }
        Self::new(kind, points, meta)
    }
}
