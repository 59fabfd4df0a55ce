//! Distribution families, functions of interest, and their moments.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad::{integrate, Frame, QuadratureSpec};

/// Tolerance on the total mass of a finite pmf.
pub const PMF_SUM_TOL: f64 = 1e-12;

/// Variances in `(-VARIANCE_CLAMP, 0)` are round-off and are reported as 0.
pub const VARIANCE_CLAMP: f64 = 1e-14;

/// Finite pmf on distinct real atoms, every atom with positive mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Discrete {
    support: Vec<f64>,
    probs: Vec<f64>,
}

impl Discrete {
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if support.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} support points but {} probabilities",
                support.len(),
                probs.len()
            )));
        }
        if let Some(x) = support.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "support point {x} is not finite"
            )));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.is_finite() && **p > 0.0))
        {
            return Err(Error::InvalidDistribution(format!(
                "probability {p} at atom {i} must be positive; zero-mass atoms break the shared support"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let mut sorted = support.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidDistribution(
                "support points must be distinct".into(),
            ));
        }
        Ok(Self { support, probs })
    }

    /// Uniform pmf on `support`.
    pub fn uniform(support: Vec<f64>) -> Result<Self> {
        let n = support.len();
        Self::new(support, vec![1.0 / n as f64; n])
    }

    pub(crate) fn new_unchecked(support: Vec<f64>, probs: Vec<f64>) -> Self {
        Self { support, probs }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bernoulli {
    p: f64,
}

impl Bernoulli {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidDistribution(format!(
                "Bernoulli parameter {p} must lie strictly inside (0, 1)"
            )));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normal {
    mu: f64,
    sigma: f64,
}

impl Normal {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "mean {mu} is not finite"
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "standard deviation {sigma} must be positive"
            )));
        }
        Ok(Self { mu, sigma })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        -0.5 * z * z - self.sigma.ln() - 0.5 * (2.0 * PI).ln()
    }
}

/// Exponential distribution parameterized by its mean `nu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponential {
    nu: f64,
}

impl Exponential {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "exponential mean {nu} must be positive"
            )));
        }
        Ok(Self { nu })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            f64::NEG_INFINITY
        } else {
            -self.nu.ln() - x / self.nu
        }
    }
}

pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied density on an interval of the real line.
#[derive(Clone)]
pub struct Density {
    pdf: DensityFn,
    ln_pdf: Option<DensityFn>,
    frame: Frame,
}

impl Density {
    /// Wraps `pdf` on `[lo, hi]`, checking that it integrates to one.
    pub fn new(pdf: DensityFn, lo: f64, hi: f64, quad: &QuadratureSpec) -> Result<Self> {
        Self::with_hint(pdf, Frame::new(lo, hi), quad)
    }

    /// Like [`Density::new`], with the location/scale hint of `frame` used by
    /// the quadrature transform.
    pub fn with_hint(pdf: DensityFn, frame: Frame, quad: &QuadratureSpec) -> Result<Self> {
        let mass = integrate(|x| pdf(x), frame, quad)?;
        let slack = quad.abs_tol.max(quad.rel_tol) + mass.error;
        if (mass.value - 1.0).abs() > slack {
            return Err(Error::InvalidDistribution(format!(
                "density integrates to {} over [{}, {}]",
                mass.value, frame.lo, frame.hi
            )));
        }
        Ok(Self {
            pdf,
            ln_pdf: None,
            frame,
        })
    }

    /// Skips the normalization check; `ln_pdf` must agree with `pdf`.
    pub(crate) fn new_unchecked(pdf: DensityFn, ln_pdf: Option<DensityFn>, frame: Frame) -> Self {
        Self { pdf, ln_pdf, frame }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.frame.lo || x > self.frame.hi {
            0.0
        } else {
            (self.pdf)(x)
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x < self.frame.lo || x > self.frame.hi {
            return f64::NEG_INFINITY;
        }
        match &self.ln_pdf {
            Some(l) => l(x),
            None => (self.pdf)(x).ln(),
        }
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Density")
            .field("frame", &self.frame)
            .finish_non_exhaustive()
    }
}

/// Probability distribution on a subset of the real line.
#[derive(Debug, Clone)]
pub enum Distribution {
    Discrete(Discrete),
    Bernoulli(Bernoulli),
    Normal(Normal),
    Exponential(Exponential),
    Density(Density),
}

/// Support of a distribution, used to check the shared-support hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    Atoms(Vec<f64>),
    Interval(f64, f64),
}

impl Distribution {
    pub fn discrete(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        Discrete::new(support, probs).map(Self::Discrete)
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        Bernoulli::new(p).map(Self::Bernoulli)
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        Normal::new(mu, sigma).map(Self::Normal)
    }

    pub fn exponential(nu: f64) -> Result<Self> {
        Exponential::new(nu).map(Self::Exponential)
    }

    pub fn density(pdf: DensityFn, lo: f64, hi: f64, quad: &QuadratureSpec) -> Result<Self> {
        Density::new(pdf, lo, hi, quad).map(Self::Density)
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Self::Discrete(_) | Self::Bernoulli(_))
    }

    /// `(atom, mass)` pairs for discrete distributions, `None` otherwise.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            Self::Discrete(d) => Some(
                d.support
                    .iter()
                    .copied()
                    .zip(d.probs.iter().copied())
                    .collect(),
            ),
            Self::Bernoulli(b) => Some(vec![(0.0, 1.0 - b.p), (1.0, b.p)]),
            _ => None,
        }
    }

    pub fn support(&self) -> Support {
        match self {
            Self::Discrete(d) => {
                let mut s = d.support.clone();
                s.sort_by(f64::total_cmp);
                Support::Atoms(s)
            }
            Self::Bernoulli(_) => Support::Atoms(vec![0.0, 1.0]),
            Self::Normal(_) => Support::Interval(f64::NEG_INFINITY, f64::INFINITY),
            Self::Exponential(_) => Support::Interval(0.0, f64::INFINITY),
            Self::Density(d) => Support::Interval(d.frame.lo, d.frame.hi),
        }
    }

    /// Quadrature frame for continuous distributions.
    pub fn frame(&self) -> Option<Frame> {
        match self {
            Self::Normal(n) => {
                Some(Frame::new(f64::NEG_INFINITY, f64::INFINITY).with_hint(n.mu, n.sigma))
            }
            Self::Exponential(e) => Some(Frame::new(0.0, f64::INFINITY).with_hint(0.0, e.nu)),
            Self::Density(d) => Some(d.frame),
            _ => None,
        }
    }

    /// Log density of a continuous distribution.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        match self {
            Self::Normal(n) => n.ln_pdf(x),
            Self::Exponential(e) => e.ln_pdf(x),
            Self::Density(d) => d.ln_pdf(x),
            _ => f64::NAN,
        }
    }

    /// Density of a continuous distribution.
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Self::Density(d) => d.pdf(x),
            _ => self.ln_pdf(x).exp(),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Self::Discrete(_) => "discrete",
            Self::Bernoulli(_) => "bernoulli",
            Self::Normal(_) => "normal",
            Self::Exponential(_) => "exponential",
            Self::Density(_) => "density",
        }
    }
}

/// Aligns two discrete distributions atom by atom.
///
/// Returns `(x, p(x), q(x))` triples sorted by `x`.
pub fn aligned_atoms(p: &Distribution, q: &Distribution) -> Result<Vec<(f64, f64, f64)>> {
    let (Some(mut pa), Some(mut qa)) = (p.atoms(), q.atoms()) else {
        return Err(Error::SupportMismatch(format!(
            "{} and {} are not both discrete",
            p.family_name(),
            q.family_name()
        )));
    };
    pa.sort_by(|a, b| a.0.total_cmp(&b.0));
    qa.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pa.len() != qa.len() || pa.iter().zip(&qa).any(|(a, b)| a.0 != b.0) {
        return Err(Error::SupportMismatch(
            "discrete distributions must share the same atoms".into(),
        ));
    }
    Ok(pa
        .into_iter()
        .zip(qa)
        .map(|((x, px), (_, qx))| (x, px, qx))
        .collect())
}

/// Frame shared by two continuous distributions, with a hint covering both.
pub fn shared_frame(p: &Distribution, q: &Distribution) -> Result<Frame> {
    let (Some(fp), Some(fq)) = (p.frame(), q.frame()) else {
        return Err(Error::SupportMismatch(format!(
            "{} and {} are not both continuous",
            p.family_name(),
            q.family_name()
        )));
    };
    if fp.lo != fq.lo || fp.hi != fq.hi {
        return Err(Error::SupportMismatch(format!(
            "domains [{}, {}] and [{}, {}] differ",
            fp.lo, fp.hi, fq.lo, fq.hi
        )));
    }
    let center = 0.5 * (fp.center + fq.center);
    let spread = 0.5 * (fp.center - fq.center).abs();
    let scale = fp.scale.max(fq.scale).max(spread);
    Ok(Frame::new(fp.lo, fp.hi).with_hint(center, scale))
}

/// Function of interest whose moments under P and Q feed the bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FoI {
    Identity,
    Square,
    /// Coefficients in ascending degree.
    Polynomial(Vec<f64>),
}

impl FoI {
    /// Polynomial FoI; constant polynomials are rejected because they have
    /// zero variance under every distribution.
    pub fn polynomial(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidFoI("coefficients must be finite".into()));
        }
        if coefficients.iter().skip(1).all(|&c| c == 0.0) {
            return Err(Error::InvalidFoI(
                "polynomial is constant, so its variance is zero".into(),
            ));
        }
        Ok(Self::Polynomial(coefficients))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Polynomial(c) => Self::polynomial(c.clone()).map(|_| ()),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Identity => x,
            Self::Square => x * x,
            Self::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &a| acc * x + a),
        }
    }
}

impl fmt::Display for FoI {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => write!(f, "identity"),
            Self::Square => write!(f, "square"),
            Self::Polynomial(c) => {
                write!(f, "poly")?;
                for a in c {
                    write!(f, ":{a}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for FoI {
    type Err = Error;

    /// Accepts `identity`, `square`, or `poly:c0:c1:...` (ascending degree).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "identity" | "x" => Ok(Self::Identity),
            "square" | "x2" | "x^2" => Ok(Self::Square),
            other => {
                let Some(rest) = other.strip_prefix("poly:") else {
                    return Err(Error::InvalidFoI(format!(
                        "unknown function of interest `{s}`"
                    )));
                };
                let coeffs = rest
                    .split(':')
                    .map(|c| {
                        c.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidFoI(format!("bad coefficient `{c}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::polynomial(coeffs)
            }
        }
    }
}

/// First two moments of a FoI under P and Q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub e_p: f64,
    pub e_q: f64,
    pub v_p: f64,
    pub v_q: f64,
}

impl MomentSummary {
    pub fn new(e_p: f64, e_q: f64, v_p: f64, v_q: f64) -> Result<Self> {
        let m = Self { e_p, e_q, v_p, v_q };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("e_p", self.e_p),
            ("e_q", self.e_q),
            ("v_p", self.v_p),
            ("v_q", self.v_q),
        ] {
            if !v.is_finite() {
                return Err(invalid(field, format!("{v} is not finite")));
            }
        }
        if self.v_p <= 0.0 {
            return Err(invalid("v_p", format!("{} must be positive", self.v_p)));
        }
        if self.v_q <= 0.0 {
            return Err(invalid("v_q", format!("{} must be positive", self.v_q)));
        }
        Ok(())
    }

    /// Squared gap between the two means.
    pub fn gap_sq(&self) -> f64 {
        let d = self.e_q - self.e_p;
        d * d
    }
}

fn clamp_variance(v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("variance {v}")));
    }
    if v < 0.0 {
        if v > -VARIANCE_CLAMP {
            return Ok(0.0);
        }
        return Err(Error::NonFinite(format!("negative variance {v}")));
    }
    Ok(v)
}

fn closed_form_moments(dist: &Distribution, f: &FoI) -> Option<(f64, f64)> {
    match (dist, f) {
        (Distribution::Normal(n), FoI::Identity) => Some((n.mu, n.sigma * n.sigma)),
        (Distribution::Normal(n), FoI::Square) => {
            let (m2, s2) = (n.mu * n.mu, n.sigma * n.sigma);
            Some((m2 + s2, 4.0 * m2 * s2 + 2.0 * s2 * s2))
        }
        (Distribution::Exponential(e), FoI::Identity) => Some((e.nu, e.nu * e.nu)),
        (Distribution::Exponential(e), FoI::Square) => {
            let n2 = e.nu * e.nu;
            Some((2.0 * n2, 20.0 * n2 * n2))
        }
        _ => None,
    }
}

/// Mean and variance of `f` under `dist` by quadrature, skipping closed forms.
pub fn moments_by_quadrature(
    dist: &Distribution,
    f: &FoI,
    quad: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let frame = dist.frame().ok_or_else(|| {
        Error::Unsupported("quadrature moments need a continuous distribution".into())
    })?;
    let mean = integrate(|x| weighted(dist, x, f.eval(x)), frame, quad)?.value;
    let second = integrate(
        |x| {
            let d = f.eval(x) - mean;
            weighted(dist, x, d * d)
        },
        frame,
        quad,
    )?
    .value;
    if !mean.is_finite() {
        return Err(Error::NonFinite(format!("mean {mean}")));
    }
    Ok((mean, clamp_variance(second)?))
}

fn weighted(dist: &Distribution, x: f64, g: f64) -> f64 {
    let p = dist.pdf(x);
    if p == 0.0 {
        0.0
    } else {
        p * g
    }
}

/// Mean and variance of `f(X)` for `X ~ dist`.
///
/// Finite sums for discrete distributions, closed forms for normal and
/// exponential distributions with the identity or square FoI, adaptive
/// quadrature otherwise. The variance is the second central moment.
pub fn moments(dist: &Distribution, f: &FoI, quad: &QuadratureSpec) -> Result<(f64, f64)> {
    f.validate()?;
    if let Some(atoms) = dist.atoms() {
        let mean: f64 = atoms.iter().map(|&(x, p)| p * f.eval(x)).sum();
        let var: f64 = atoms
            .iter()
            .map(|&(x, p)| {
                let d = f.eval(x) - mean;
                p * d * d
            })
            .sum();
        if !mean.is_finite() {
            return Err(Error::NonFinite(format!("mean {mean}")));
        }
        return Ok((mean, clamp_variance(var)?));
    }
    if let Some(m) = closed_form_moments(dist, f) {
        return Ok(m);
    }
    moments_by_quadrature(dist, f, quad)
}

/// Moments of `f` under `p` and `q`, packed as a validated summary.
pub fn moment_summary(
    p: &Distribution,
    q: &Distribution,
    f: &FoI,
    quad: &QuadratureSpec,
) -> Result<MomentSummary> {
    let (e_p, v_p) = moments(p, f, quad)?;
    let (e_q, v_q) = moments(q, f, quad)?;
    MomentSummary::new(e_p, e_q, v_p, v_q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn uniform4() -> Distribution {
        Distribution::Discrete(Discrete::uniform(vec![1.0, 2.0, 3.0, 4.0]).unwrap())
    }

    #[test]
    fn standard_normal_identity() {
        let n = Distribution::normal(0.0, 1.0).unwrap();
        assert_eq!(moments(&n, &FoI::Identity, &quad()).unwrap(), (0.0, 1.0));
    }

    #[test]
    fn uniform_four_atoms() {
        let (m, v) = moments(&uniform4(), &FoI::Identity, &quad()).unwrap();
        assert_eq!(m, 2.5);
        assert!((v - 1.25).abs() < 1e-15);
    }

    #[test]
    fn exponential_identity_matches_quadrature() {
        let e = Distribution::exponential(2.0).unwrap();
        assert_eq!(moments(&e, &FoI::Identity, &quad()).unwrap(), (2.0, 4.0));
        let (m, v) = moments_by_quadrature(&e, &FoI::Identity, &quad()).unwrap();
        assert!((m - 2.0).abs() < 1e-9 * 2.0);
        assert!((v - 4.0).abs() < 1e-9 * 4.0);
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let dists = [
            Distribution::normal(0.7, 1.3).unwrap(),
            Distribution::normal(-2.0, 0.4).unwrap(),
            Distribution::exponential(0.5).unwrap(),
            Distribution::exponential(3.0).unwrap(),
        ];
        for d in &dists {
            for f in [FoI::Identity, FoI::Square] {
                let (m, v) = moments(d, &f, &quad()).unwrap();
                let (mq, vq) = moments_by_quadrature(d, &f, &quad()).unwrap();
                assert!(
                    (m - mq).abs() <= 1e-9 * m.abs().max(1e-300),
                    "{d:?} {f} mean {m} {mq}"
                );
                assert!((v - vq).abs() <= 1e-9 * v, "{d:?} {f} var {v} {vq}");
            }
        }
    }

    #[test]
    fn polynomial_moments_by_quadrature() {
        // f(x) = 1 + 2x under N(0,1): mean 1, variance 4.
        let f = FoI::polynomial(vec![1.0, 2.0]).unwrap();
        let n = Distribution::normal(0.0, 1.0).unwrap();
        let (m, v) = moments(&n, &f, &quad()).unwrap();
        assert!((m - 1.0).abs() < 1e-10);
        assert!((v - 4.0).abs() < 1e-9);
    }

    #[test]
    fn bernoulli_moments() {
        let b = Distribution::bernoulli(0.7).unwrap();
        let (m, v) = moments(&b, &FoI::Identity, &quad()).unwrap();
        assert!((m - 0.7).abs() < 1e-15);
        assert!((v - 0.21).abs() < 1e-15);
    }

    #[test]
    fn discrete_invariants() {
        assert!(Discrete::new(vec![1.0, 2.0], vec![0.5, 0.6]).is_err());
        assert!(Discrete::new(vec![1.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(Discrete::new(vec![1.0, 2.0], vec![1.0, 0.0]).is_err());
        assert!(Discrete::new(vec![1.0, 2.0], vec![-0.5, 1.5]).is_err());
        assert!(Discrete::new(vec![1.0], vec![0.5, 0.5]).is_err());
        assert!(Discrete::new(vec![], vec![]).is_err());
        assert!(Discrete::new(vec![1.0, 2.0, 3.0, 4.0], vec![0.1, 0.2, 0.3, 0.4]).is_ok());
    }

    #[test]
    fn family_parameter_checks() {
        assert!(Distribution::bernoulli(0.0).is_err());
        assert!(Distribution::bernoulli(1.0).is_err());
        assert!(Distribution::normal(0.0, 0.0).is_err());
        assert!(Distribution::normal(f64::NAN, 1.0).is_err());
        assert!(Distribution::exponential(-1.0).is_err());
    }

    #[test]
    fn density_must_be_normalized() {
        let ok: DensityFn = Arc::new(|x: f64| 2.0 * x);
        assert!(Distribution::density(ok, 0.0, 1.0, &quad()).is_ok());
        let bad: DensityFn = Arc::new(|x: f64| x);
        assert!(matches!(
            Distribution::density(bad, 0.0, 1.0, &quad()),
            Err(Error::InvalidDistribution(_))
        ));
    }

    #[test]
    fn density_moments() {
        let tri: DensityFn = Arc::new(|x: f64| 2.0 * x);
        let d = Distribution::density(tri, 0.0, 1.0, &quad()).unwrap();
        let (m, v) = moments(&d, &FoI::Identity, &quad()).unwrap();
        assert!((m - 2.0 / 3.0).abs() < 1e-12);
        assert!((v - 1.0 / 18.0).abs() < 1e-12);
    }

    #[test]
    fn foi_parsing_and_constants() {
        assert_eq!("identity".parse::<FoI>().unwrap(), FoI::Identity);
        assert_eq!("Square".parse::<FoI>().unwrap(), FoI::Square);
        assert_eq!(
            "poly:1:0:2".parse::<FoI>().unwrap(),
            FoI::Polynomial(vec![1.0, 0.0, 2.0])
        );
        assert!("poly:0:0".parse::<FoI>().is_err());
        assert!("poly:3".parse::<FoI>().is_err());
        assert!("cube".parse::<FoI>().is_err());
        assert!(FoI::polynomial(vec![0.0, 0.0, 0.0]).is_err());
        let f = FoI::polynomial(vec![1.0, -2.0, 0.5]).unwrap();
        assert_eq!(f.eval(2.0), 1.0 - 4.0 + 2.0);
        assert_eq!(f.to_string().parse::<FoI>().unwrap(), f);
    }

    #[test]
    fn constant_foi_fails_summary() {
        // x^2 on {-1, 1} is constant.
        let p = Distribution::discrete(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let q = Distribution::discrete(vec![-1.0, 1.0], vec![0.2, 0.8]).unwrap();
        let err = moment_summary(&p, &q, &FoI::Square, &quad()).unwrap_err();
        assert!(matches!(err, Error::InvalidInput { field: "v_p", .. }));
    }

    #[test]
    fn summary_validation_names_field() {
        let err = MomentSummary::new(0.0, 1.0, 1.0, -1.0).unwrap_err();
        assert!(matches!(err, Error::InvalidInput { field: "v_q", .. }));
        let err = MomentSummary::new(f64::NAN, 1.0, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::InvalidInput { field: "e_p", .. }));
    }

    #[test]
    fn variance_clamp() {
        assert_eq!(clamp_variance(-1e-15).unwrap(), 0.0);
        assert!(clamp_variance(-1e-10).is_err());
    }

    #[test]
    fn alignment_ignores_atom_order() {
        let p = Distribution::discrete(vec![2.0, 1.0], vec![0.3, 0.7]).unwrap();
        let q = Distribution::discrete(vec![1.0, 2.0], vec![0.4, 0.6]).unwrap();
        let a = aligned_atoms(&p, &q).unwrap();
        assert_eq!(a, vec![(1.0, 0.7, 0.4), (2.0, 0.3, 0.6)]);
        let r = Distribution::discrete(vec![1.0, 3.0], vec![0.4, 0.6]).unwrap();
        assert!(aligned_atoms(&p, &r).is_err());
    }
}
