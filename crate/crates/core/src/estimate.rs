//! Plug-in bounds from raw samples.
//!
//! Two datasets are reduced to one-pass moment summaries of each FoI in a
//! bank and fed to [`kl_lower_bound`]. The bound holds for the true moments;
//! at finite sample sizes the plug-in value is an estimate, so every entry
//! also carries a delta-method standard error.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bound::{kl_lower_bound, BoundResult};
use crate::dist::{FoI, MomentSummary};
use crate::error::{invalid, Error, Result};

/// Streaming accumulator for mean and the second to fourth central sums.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MomentAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        let n1 = self.count as f64;
        self.count += 1;
        let n = self.count as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2
            - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn finish(&self) -> SampleMoments {
        SampleMoments {
            count: self.count,
            mean: self.mean,
            m2: self.m2,
            m3: self.m3,
            m4: self.m4,
        }
    }
}

/// Moments of `f(x_i)` over a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub count: u64,
    pub mean: f64,
    /// Sum of squared deviations from the mean.
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

impl SampleMoments {
    /// `m2 / N`.
    pub fn population_variance(&self) -> f64 {
        self.m2 / self.count as f64
    }

    /// `m2 / (N − 1)`.
    pub fn sample_variance(&self) -> f64 {
        self.m2 / (self.count as f64 - 1.0)
    }

    pub fn variance(&self, convention: VarianceConvention) -> f64 {
        match convention {
            VarianceConvention::Population => self.population_variance(),
            VarianceConvention::Sample => self.sample_variance(),
        }
    }

    pub fn mean_standard_error(&self) -> f64 {
        (self.population_variance() / self.count as f64).sqrt()
    }

    /// Large-sample standard error of the variance, `√((μ₄ − σ⁴) / N)`.
    pub fn variance_standard_error(&self) -> f64 {
        let n = self.count as f64;
        let var = self.population_variance();
        ((self.m4 / n - var * var).max(0.0) / n).sqrt()
    }

    /// Covariance matrix of (mean, variance) estimates: `[[σ²/N, μ₃/N], [μ₃/N, (μ₄−σ⁴)/N]]`.
    fn estimate_covariance(&self) -> [[f64; 2]; 2] {
        let n = self.count as f64;
        let var = self.population_variance();
        let mu3 = self.m3 / n;
        let mu4 = self.m4 / n;
        [
            [var / n, mu3 / n],
            [mu3 / n, (mu4 - var * var).max(0.0) / n],
        ]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarianceConvention {
    /// Divide by N.
    #[default]
    Population,
    /// Divide by N − 1.
    Sample,
}

/// One-pass moments of `f` over `values`.
///
/// Errors on fewer than two values, on a non-finite value or image under
/// `f` (reported with its 1-based row), and on zero variance.
pub fn stream_moments<I>(values: I, f: &FoI) -> Result<SampleMoments>
where
    I: IntoIterator<Item = f64>,
{
    f.validate()?;
    let mut acc = MomentAccumulator::new();
    for (i, x) in values.into_iter().enumerate() {
        let y = f.eval(x);
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::NonFiniteRow { row: i + 1 });
        }
        acc.push(y);
    }
    if acc.count() < 2 {
        return Err(Error::TooFewValues(acc.count() as usize));
    }
    let m = acc.finish();
    if !(m.m2 > 0.0) {
        return Err(Error::ZeroVariance { foi: f.to_string() });
    }
    Ok(m)
}

/// Ordered, non-empty list of non-constant FoIs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoIBank(Vec<FoI>);

impl FoIBank {
    pub fn new(fois: Vec<FoI>) -> Result<Self> {
        if fois.is_empty() {
            return Err(invalid("foi", "the bank needs at least one function"));
        }
        for f in &fois {
            f.validate()?;
        }
        Ok(Self(fois))
    }

    pub fn fois(&self) -> &[FoI] {
        &self.0
    }
}

impl Default for FoIBank {
    fn default() -> Self {
        Self(vec![FoI::Identity, FoI::Square])
    }
}

impl FromStr for FoIBank {
    type Err = Error;

    /// Comma-separated FoIs, e.g. `identity,square,poly:0:1:1`.
    fn from_str(s: &str) -> Result<Self> {
        let fois = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<FoI>>>()?;
        Self::new(fois)
    }
}

impl fmt::Display for FoIBank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, foi) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{foi}")?;
        }
        Ok(())
    }
}

/// Successful bound for one FoI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoIBound {
    pub summary: MomentSummary,
    pub bound: BoundResult,
    /// Delta-method standard error of `bound.value` from moment sampling
    /// noise, treating the two samples as independent.
    pub standard_error: f64,
    pub p_moments: SampleMoments,
    pub q_moments: SampleMoments,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoIOutcome {
    pub foi: FoI,
    pub result: Result<FoIBound>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBoundReport {
    pub outcomes: Vec<FoIOutcome>,
    /// Index into `outcomes` of the largest bound.
    pub best: usize,
    pub max_bound: f64,
}

impl SampleBoundReport {
    pub fn best_foi(&self) -> &FoI {
        &self.outcomes[self.best].foi
    }

    pub fn get(&self, foi: &FoI) -> Option<&FoIOutcome> {
        self.outcomes.iter().find(|o| &o.foi == foi)
    }
}

/// Gradient of the bound in `(e_p, e_q, v_p, v_q)` by central differences.
fn bound_gradient(m: &MomentSummary) -> Result<[f64; 4]> {
    let base = [m.e_p, m.e_q, m.v_p, m.v_q];
    let scale = m.v_p.sqrt().max(m.v_q.sqrt());
    let mut grad = [0.0; 4];
    for i in 0..4 {
        let h = 1e-6
            * if i < 2 {
                scale.max(base[i].abs())
            } else {
                base[i]
            };
        let mut up = base;
        let mut down = base;
        up[i] += h;
        down[i] -= h;
        let f = |v: [f64; 4]| -> Result<f64> {
            Ok(kl_lower_bound(&MomentSummary::new(v[0], v[1], v[2], v[3])?)?.value)
        };
        grad[i] = (f(up)? - f(down)?) / (2.0 * h);
    }
    Ok(grad)
}

/// Delta-method standard error of the plug-in bound.
pub fn bound_standard_error(
    m: &MomentSummary,
    p_moments: &SampleMoments,
    q_moments: &SampleMoments,
) -> Result<f64> {
    let g = bound_gradient(m)?;
    let cp = p_moments.estimate_covariance();
    let cq = q_moments.estimate_covariance();
    // Coordinates: (e_p, v_p) from P, (e_q, v_q) from Q.
    let gp = [g[0], g[2]];
    let gq = [g[1], g[3]];
    let quad = |c: [[f64; 2]; 2], v: [f64; 2]| {
        v[0] * v[0] * c[0][0] + 2.0 * v[0] * v[1] * c[0][1] + v[1] * v[1] * c[1][1]
    };
    Ok((quad(cp, gp) + quad(cq, gq)).max(0.0).sqrt())
}

fn bound_for(xs: &[f64], ys: &[f64], f: &FoI, convention: VarianceConvention) -> Result<FoIBound> {
    let p_moments = stream_moments(xs.iter().copied(), f)?;
    let q_moments = stream_moments(ys.iter().copied(), f)?;
    let summary = MomentSummary::new(
        p_moments.mean,
        q_moments.mean,
        p_moments.variance(convention),
        q_moments.variance(convention),
    )?;
    let bound = kl_lower_bound(&summary)?;
    let standard_error = bound_standard_error(&summary, &p_moments, &q_moments)?;
    Ok(FoIBound {
        summary,
        bound,
        standard_error,
        p_moments,
        q_moments,
    })
}

/// Plug-in KL lower bounds for every FoI of `bank`, with `xs` drawn from P
/// and `ys` from Q, using the 1/N variance.
pub fn bound_from_samples(xs: &[f64], ys: &[f64], bank: &FoIBank) -> Result<SampleBoundReport> {
    bound_from_samples_with(xs, ys, bank, VarianceConvention::Population)
}

pub fn bound_from_samples_with(
    xs: &[f64],
    ys: &[f64],
    bank: &FoIBank,
    convention: VarianceConvention,
) -> Result<SampleBoundReport> {
    let outcomes: Vec<FoIOutcome> = bank
        .fois()
        .iter()
        .map(|f| FoIOutcome {
            foi: f.clone(),
            result: bound_for(xs, ys, f, convention),
        })
        .collect();
    let (best, max_bound) = outcomes
        .iter()
        .enumerate()
        .filter_map(|(i, o)| o.result.as_ref().ok().map(|b| (i, b.bound.value)))
        .fold(None, |acc: Option<(usize, f64)>, (i, v)| match acc {
            Some((_, best)) if best >= v => acc,
            _ => Some((i, v)),
        })
        .ok_or(Error::NoApplicableFoI)?;
    Ok(SampleBoundReport {
        outcomes,
        best,
        max_bound,
    })
}

/// Layout of a numeric input source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputFormat {
    /// One value per line.
    #[default]
    Lines,
    /// Column `column` (1-based) of lines split on `delimiter`.
    Delimited { delimiter: char, column: usize },
}

/// Reads values from `reader`, skipping blank lines.
pub fn ingest<R: BufRead>(reader: R, format: InputFormat) -> Result<Vec<f64>> {
    if let InputFormat::Delimited { column: 0, .. } = format {
        return Err(invalid("column", "columns are numbered from 1"));
    }
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let field = match format {
            InputFormat::Lines => Some(line.trim()),
            InputFormat::Delimited { delimiter, column } => {
                line.split(delimiter).nth(column - 1).map(str::trim)
            }
        };
        let value = field.and_then(|s| s.parse::<f64>().ok());
        match value {
            Some(v) => out.push(v),
            None => {
                return Err(Error::MalformedRow {
                    row,
                    content: line.clone(),
                })
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(out)
}

/// [`ingest`] from a file.
pub fn ingest_path(path: impl AsRef<Path>, format: InputFormat) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ingest(BufReader::new(file), format)
}
