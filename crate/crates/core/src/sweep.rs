//! Exact KL and the moment bound along one-parameter families, as plot data.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bound::kl_lower_bound;
use crate::dist::{moment_summary, Distribution, FoI};
use crate::divergence::kl_exact;
use crate::error::{invalid, Error, Result};
use crate::quad::QuadratureSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepFamily {
    /// `N(0, 1)` vs `N(β, 1)` with `f(x) = x`.
    NormalMeanShift,
    /// `N(0, 1)` vs `N(0, β²)` with `f(x) = x²`.
    NormalScale,
    /// Exponential means 1 vs β with `f(x) = x`.
    ExponentialScale,
}

impl SweepFamily {
    pub const ALL: [SweepFamily; 3] = [
        SweepFamily::NormalMeanShift,
        SweepFamily::NormalScale,
        SweepFamily::ExponentialScale,
    ];

    pub fn foi(&self) -> FoI {
        match self {
            Self::NormalMeanShift | Self::ExponentialScale => FoI::Identity,
            Self::NormalScale => FoI::Square,
        }
    }

    pub fn pair(&self, beta: f64) -> Result<(Distribution, Distribution)> {
        match self {
            Self::NormalMeanShift => Ok((
                Distribution::normal(0.0, 1.0)?,
                Distribution::normal(beta, 1.0)?,
            )),
            Self::NormalScale => Ok((
                Distribution::normal(0.0, 1.0)?,
                Distribution::normal(0.0, beta)?,
            )),
            Self::ExponentialScale => Ok((
                Distribution::exponential(1.0)?,
                Distribution::exponential(beta)?,
            )),
        }
    }

    pub fn requires_positive_beta(&self) -> bool {
        !matches!(self, Self::NormalMeanShift)
    }

    /// Default `(start, stop, steps)`.
    pub fn default_range(&self) -> (f64, f64, usize) {
        match self {
            Self::NormalMeanShift => (0.0, 5.0, 200),
            Self::NormalScale | Self::ExponentialScale => (0.2, 5.0, 200),
        }
    }
}

impl fmt::Display for SweepFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NormalMeanShift => "normal-mean-shift",
            Self::NormalScale => "normal-scale",
            Self::ExponentialScale => "exponential-scale",
        })
    }
}

impl FromStr for SweepFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| invalid("family", format!("unknown sweep family `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub family: SweepFamily,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepSpec {
    pub fn new(family: SweepFamily, start: f64, stop: f64, steps: usize) -> Result<Self> {
        let spec = Self {
            family,
            start,
            stop,
            steps,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_defaults(family: SweepFamily) -> Self {
        let (start, stop, steps) = family.default_range();
        Self {
            family,
            start,
            stop,
            steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(invalid("start", "range endpoints must be finite"));
        }
        if self.start >= self.stop {
            return Err(invalid(
                "stop",
                format!("stop {} must exceed start {}", self.stop, self.start),
            ));
        }
        if self.steps < 2 {
            return Err(invalid("steps", "need at least 2 steps"));
        }
        if self.family.requires_positive_beta() && self.start <= 0.0 {
            return Err(invalid("start", format!("{} needs beta > 0", self.family)));
        }
        Ok(())
    }

    pub fn betas(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.steps - 1;
        let width = self.stop - self.start;
        (0..self.steps).map(move |i| {
            if i == n {
                self.stop
            } else {
                self.start + width * i as f64 / n as f64
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    pub kl: f64,
    pub bound: f64,
    /// `bound / kl`; absent where the KL is zero.
    pub ratio: Option<f64>,
}

pub fn sweep_row(family: SweepFamily, beta: f64, quad: &QuadratureSpec) -> Result<SweepRow> {
    let (p, q) = family.pair(beta)?;
    let kl = kl_exact(&p, &q, quad)?;
    let m = moment_summary(&p, &q, &family.foi(), quad)?;
    let bound = kl_lower_bound(&m)?.value;
    let ratio = (kl != 0.0).then(|| bound / kl);
    Ok(SweepRow {
        beta,
        kl,
        bound,
        ratio,
    })
}

/// Rows for every β of `spec`.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let quad = QuadratureSpec::default();
    spec.betas()
        .map(|beta| sweep_row(spec.family, beta, &quad))
        .collect()
}

/// Writes rows as `beta,kl,bound,ratio` with a header line.
pub fn write_table<W: Write>(rows: &[SweepRow], mut w: W) -> io::Result<()> {
    writeln!(w, "beta,kl,bound,ratio")?;
    for r in rows {
        match r.ratio {
            Some(ratio) => writeln!(w, "{},{},{},{}", r.beta, r.kl, r.bound, ratio)?,
            None => writeln!(w, "{},{},{},", r.beta, r.kl, r.bound)?,
        }
    }
    Ok(())
}
