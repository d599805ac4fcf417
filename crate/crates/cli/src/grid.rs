//! `a:b:h` grids and `lo:hi` ranges on the command line.

use std::str::FromStr;

/// Inclusive uniform grid a, a + h, ..., up to b.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.start + i as f64 * self.step)
            .collect()
    }
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, h] = parts[..] else {
            return Err(format!("expected start:stop:step, got '{s}'"));
        };
        let (start, stop, step) = (number(a)?, number(b)?, number(h)?);
        if step <= 0.0 {
            return Err(format!("grid step must be positive, got {step}"));
        }
        if stop < start {
            return Err(format!("grid stop {stop} lies below start {start}"));
        }
        if (stop - start) / step > 1e6 {
            return Err("grid has more than a million points".into());
        }
        Ok(Self { start, stop, step })
    }
}

/// Closed interval lo:hi with lo < hi.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Range(pub f64, pub f64);

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let Some((lo, hi)) = s.split_once(':') else {
            return Err(format!("expected lo:hi, got '{s}'"));
        };
        let (lo, hi) = (number(lo)?, number(hi)?);
        if lo >= hi {
            return Err(format!("range {lo}:{hi} is empty"));
        }
        Ok(Self(lo, hi))
    }
}
