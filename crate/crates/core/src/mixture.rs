//! The mixture path `r(x; t) = p(x) + t (q(x) − p(x))` and the identities
//! that hold along it.
//!
//! Along the path, `d/dt D_α(P‖R(t)) = ((1−α) D_α + (1+α) D_{α+1}) / t`.
//! At α = 1 this reads `d/dt KL(P‖R(t)) = χ²(P‖R(t)) / t = t I(t)`, where
//! `I(t) = ∫ (q − p)² / r` is the Fisher information of the path. The checks
//! here compare central finite differences against those right-hand sides.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bound::kl_lower_bound;
use crate::dist::{
    aligned_atoms, moments, shared_frame, Density, Discrete, Distribution, FoI, MomentSummary,
};
use crate::divergence::{alpha_divergence, chi_sq};
use crate::error::{invalid, Error, Result};
use crate::quad::{integrate, QuadratureSpec};

/// Default central-difference step in `t`.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Step used to differentiate `E_θ[f]` in θ.
pub const PSI_STEP: f64 = 1e-6;

/// Two distributions on a common support, joined by linear interpolation.
#[derive(Debug, Clone)]
pub struct MixturePath {
    p: Distribution,
    q: Distribution,
}

fn check_t(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(invalid("t", format!("{t} lies outside [0, 1]")));
    }
    Ok(())
}

impl MixturePath {
    pub fn new(p: Distribution, q: Distribution) -> Result<Self> {
        if p.is_discrete() || q.is_discrete() {
            aligned_atoms(&p, &q)?;
        } else {
            shared_frame(&p, &q)?;
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> &Distribution {
        &self.p
    }

    pub fn q(&self) -> &Distribution {
        &self.q
    }

    /// `R(t)`. Endpoints return clones of `P` and `Q`.
    pub fn at(&self, t: f64) -> Result<Distribution> {
        check_t(t)?;
        if t == 0.0 {
            return Ok(self.p.clone());
        }
        if t == 1.0 {
            return Ok(self.q.clone());
        }
        if let (Distribution::Bernoulli(a), Distribution::Bernoulli(b)) = (&self.p, &self.q) {
            return Distribution::bernoulli(a.p() + t * (b.p() - a.p()));
        }
        if self.p.is_discrete() {
            let (support, probs) = aligned_atoms(&self.p, &self.q)?
                .into_iter()
                .map(|(x, px, qx)| (x, px + t * (qx - px)))
                .unzip();
            return Ok(Distribution::Discrete(Discrete::new_unchecked(
                support, probs,
            )));
        }
        let frame = shared_frame(&self.p, &self.q)?;
        let (p, q) = (self.p.clone(), self.q.clone());
        let pdf = Arc::new(move |x: f64| {
            let px = p.pdf(x);
            px + t * (q.pdf(x) - px)
        });
        let (p, q) = (self.p.clone(), self.q.clone());
        let (wp, wq) = ((1.0 - t).ln(), t.ln());
        let ln_pdf = Arc::new(move |x: f64| {
            let a = wp + p.ln_pdf(x);
            let b = wq + q.ln_pdf(x);
            let hi = a.max(b);
            if hi == f64::NEG_INFINITY {
                hi
            } else {
                hi + ((a - hi).exp() + (b - hi).exp()).ln()
            }
        });
        Ok(Distribution::Density(Density::new_unchecked(
            pdf,
            Some(ln_pdf),
            frame,
        )))
    }

    /// Fisher information of the path at `t`, `∫ (q − p)² / r(·; t)`.
    ///
    /// Equals `χ²(P‖R(t)) / t²` for `t > 0`. `t = 0` is accepted and gives
    /// `χ²(Q‖P)`.
    pub fn fisher_info(&self, t: f64, quad: &QuadratureSpec) -> Result<f64> {
        check_t(t)?;
        if self.p.is_discrete() {
            return Ok(aligned_atoms(&self.p, &self.q)?
                .into_iter()
                .map(|(_, px, qx)| {
                    let d = qx - px;
                    d * d / (px + t * d)
                })
                .sum());
        }
        let frame = shared_frame(&self.p, &self.q)?;
        let r = integrate(
            |x| {
                let px = self.p.pdf(x);
                let qx = self.q.pdf(x);
                let d = qx - px;
                let rx = px + t * d;
                if rx == 0.0 {
                    0.0
                } else {
                    d * d / rx
                }
            },
            frame,
            quad,
        )?;
        Ok(r.value)
    }

    fn divergence_at(&self, alpha: f64, t: f64, quad: &QuadratureSpec) -> Result<f64> {
        alpha_divergence(alpha, &self.p, &self.at(t)?, quad)
    }

    /// Central difference of `t ↦ D_α(P‖R(t))`.
    pub fn divergence_derivative(
        &self,
        alpha: f64,
        t: f64,
        h: f64,
        quad: &QuadratureSpec,
    ) -> Result<f64> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid("h", format!("{h} must be positive")));
        }
        if !(t - h > 0.0 && t + h < 1.0) {
            return Err(invalid(
                "t",
                format!("t = {t} with h = {h} must satisfy h < t < 1 - h"),
            ));
        }
        let up = self.divergence_at(alpha, t + h, quad)?;
        let down = self.divergence_at(alpha, t - h, quad)?;
        Ok((up - down) / (2.0 * h))
    }
}

/// `R(t)` on `path`.
pub fn mixture_at(path: &MixturePath, t: f64) -> Result<Distribution> {
    path.at(t)
}

/// Mean and variance of the FoI under `R(t)`, from the endpoint moments.
pub fn mixture_moments(m: &MomentSummary, t: f64) -> Result<(f64, f64)> {
    check_t(t)?;
    let gap = m.e_q - m.e_p;
    let mean = m.e_p + t * gap;
    let var = t * m.v_q + (1.0 - t) * m.v_p + t * (1.0 - t) * gap * gap;
    Ok((mean, var))
}

/// Fisher information of `path` at `t`.
pub fn fisher_info_along_path(path: &MixturePath, t: f64, quad: &QuadratureSpec) -> Result<f64> {
    path.fisher_info(t, quad)
}

/// Right-hand side of the α-recurrence, `((1−α) D_α + (1+α) D_{α+1}) / t`.
pub fn lemma1_rhs(path: &MixturePath, alpha: f64, t: f64, quad: &QuadratureSpec) -> Result<f64> {
    check_t(t)?;
    if t == 0.0 {
        return Err(invalid("t", "the recurrence is singular at t = 0"));
    }
    let r = path.at(t)?;
    let p = path.p();
    if alpha == 1.0 {
        Ok(chi_sq(p, &r, quad)? / t)
    } else if alpha == 0.0 {
        let d0 = alpha_divergence(0.0, p, &r, quad)?;
        let d1 = alpha_divergence(1.0, p, &r, quad)?;
        Ok((d0 + d1) / t)
    } else {
        let da = alpha_divergence(alpha, p, &r, quad)?;
        let db = alpha_divergence(alpha + 1.0, p, &r, quad)?;
        Ok(((1.0 - alpha) * da + (1.0 + alpha) * db) / t)
    }
}

/// `|ΔD_α/Δt − RHS|` at `t`, with a central difference of step `h`.
pub fn check_lemma1(
    path: &MixturePath,
    alpha: f64,
    t: f64,
    h: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let lhs = path.divergence_derivative(alpha, t, h, quad)?;
    let rhs = lemma1_rhs(path, alpha, t, quad)?;
    Ok((lhs - rhs).abs())
}

/// `|ΔKL/Δt − t I(t)|` at `t`.
pub fn check_fisher_identity(
    path: &MixturePath,
    t: f64,
    h: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let lhs = path.divergence_derivative(1.0, t, h, quad)?;
    let rhs = t * path.fisher_info(t, quad)?;
    Ok((lhs - rhs).abs())
}

/// One-parameter families used for the small-perturbation limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ParametricFamily {
    /// `N(θ, σ²)` with σ fixed.
    NormalMean { sigma: f64 },
    /// Exponential with mean θ.
    ExponentialMean,
    /// Bernoulli with success probability θ.
    BernoulliProbability,
}

impl ParametricFamily {
    pub fn at(&self, theta: f64) -> Result<Distribution> {
        match *self {
            Self::NormalMean { sigma } => Distribution::normal(theta, sigma),
            Self::ExponentialMean => Distribution::exponential(theta),
            Self::BernoulliProbability => Distribution::bernoulli(theta),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::NormalMean { .. } => "normal-mean",
            Self::ExponentialMean => "exponential-mean",
            Self::BernoulliProbability => "bernoulli-p",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CramerRaoRow {
    pub delta: f64,
    /// `bound(θ, θ + δ) / δ²`.
    pub scaled_bound: f64,
    /// `scaled_bound / target`; tends to 1 as δ → 0.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CramerRaoTable {
    pub theta: f64,
    /// Central-difference estimate of `d/dθ E_θ[f]`.
    pub psi_prime: f64,
    pub variance: f64,
    /// `ψ′² / (2 Var_θ(f))`.
    pub target: f64,
    pub rows: Vec<CramerRaoRow>,
}

impl CramerRaoTable {
    /// Observed convergence orders of `|ratio − 1|` between consecutive rows.
    pub fn convergence_orders(&self) -> Vec<f64> {
        self.rows
            .windows(2)
            .map(|w| {
                let e0 = (w[0].ratio - 1.0).abs();
                let e1 = (w[1].ratio - 1.0).abs();
                (e0 / e1).ln() / (w[0].delta / w[1].delta).ln()
            })
            .collect()
    }

    /// True when `|ratio − 1|` shrinks with every smaller δ.
    pub fn monotone(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| (w[1].ratio - 1.0).abs() < (w[0].ratio - 1.0).abs())
    }
}

/// Tabulates `bound(θ, θ+δ)/δ²` against `ψ′(θ)² / (2 Var_θ f)` over a
/// decreasing sequence of positive δ.
pub fn cramer_rao_limit_check(
    family: ParametricFamily,
    f: &FoI,
    theta: f64,
    deltas: &[f64],
    quad: &QuadratureSpec,
) -> Result<CramerRaoTable> {
    if deltas.is_empty() {
        return Err(invalid("deltas", "empty"));
    }
    if let Some(d) = deltas.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
        return Err(invalid("deltas", format!("{d} must be positive")));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("deltas", "must be strictly decreasing"));
    }
    let base = family.at(theta)?;
    let (e_p, v_p) = moments(&base, f, quad)?;
    let (e_up, _) = moments(&family.at(theta + PSI_STEP)?, f, quad)?;
    let (e_down, _) = moments(&family.at(theta - PSI_STEP)?, f, quad)?;
    let psi_prime = (e_up - e_down) / (2.0 * PSI_STEP);
    if v_p <= 0.0 {
        return Err(Error::ZeroVariance { foi: f.to_string() });
    }
    let target = psi_prime * psi_prime / (2.0 * v_p);

    let rows = deltas
        .iter()
        .map(|&delta| {
            let (e_q, v_q) = moments(&family.at(theta + delta)?, f, quad)?;
            let m = MomentSummary::new(e_p, e_q, v_p, v_q)?;
            let scaled_bound = kl_lower_bound(&m)?.value / (delta * delta);
            Ok(CramerRaoRow {
                delta,
                scaled_bound,
                ratio: scaled_bound / target,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CramerRaoTable {
        theta,
        psi_prime,
        variance: v_p,
        target,
        rows,
    })
}
