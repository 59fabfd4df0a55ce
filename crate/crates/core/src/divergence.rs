//! Exact alpha-divergences and their KL, squared-Hellinger, and chi-square
//! special cases.
//!
//! | name | definition | relation |
//! |------|------------|----------|
//! | `D_α`, α ∉ {0,1} | (∫ p^α q^(1-α) − 1) / (α(α−1)) | |
//! | `D_0` | ∫ q log(q/p) | reverse KL |
//! | `D_1` | ∫ p log(p/q) | KL |
//! | Hel² | ∫ (√q − √p)² | ½ D_½ |
//! | χ² | ∫ (q − p)² / q | 2 D_2 |
//!
//! Discrete pairs are summed atom by atom; continuous pairs are integrated
//! with [`crate::quad`]. All integrands are written so they vanish
//! identically when `p == q`.

use crate::dist::{aligned_atoms, shared_frame, Distribution};
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadratureSpec};

/// Round-off allowance below zero for a divergence value.
pub const NEGATIVE_SLACK: f64 = 1e-12;

/// `∫ p^α q^(1-α) - 1` contribution of one point, from `p` and `ln(q/p)`.
fn power_term(alpha: f64, p: f64, ln_ratio: f64) -> f64 {
    if p == 0.0 {
        return 0.0;
    }
    let d = (1.0 - alpha) * ln_ratio;
    if d < 1.0 {
        p * d.exp_m1()
    } else {
        (p.ln() + d).exp() - p
    }
}

/// `p log(p/q) - p + q` from `ln p` and `ln(q/p)`; integrates to KL and is
/// pointwise nonnegative.
fn kl_term(ln_p: f64, ln_ratio: f64) -> f64 {
    let p = ln_p.exp();
    if p == 0.0 {
        return (ln_p + ln_ratio).exp();
    }
    if ln_ratio < 1.0 {
        // p (w - ln(1 + w)) with w = q/p - 1
        p * (ln_ratio.exp_m1() - ln_ratio)
    } else {
        (ln_p + ln_ratio).exp() - p * (1.0 + ln_ratio)
    }
}

fn check_alpha_finite(alpha: f64, p: &Distribution, q: &Distribution) -> Result<()> {
    // ∫ p^α q^(1-α) over the real line or half line has a closed-form
    // convergence condition for these families.
    let ok = match (p, q) {
        (Distribution::Normal(a), Distribution::Normal(b)) => {
            alpha / (a.sigma() * a.sigma()) + (1.0 - alpha) / (b.sigma() * b.sigma()) > 0.0
        }
        (Distribution::Exponential(a), Distribution::Exponential(b)) => {
            alpha / a.nu() + (1.0 - alpha) / b.nu() > 0.0
        }
        _ => true,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::DivergentIntegral(format!(
            "∫ p^α q^(1-α) diverges for α = {alpha} between these {} distributions",
            p.family_name()
        )))
    }
}

fn check_result(v: f64, what: &str) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::DivergentIntegral(format!("{what} evaluated to {v}")));
    }
    Ok(v)
}

/// Alpha-divergence `D_α(P‖Q)`; α = 0 and α = 1 use their logarithmic
/// branches exactly.
pub fn alpha_divergence(
    alpha: f64,
    p: &Distribution,
    q: &Distribution,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if !alpha.is_finite() {
        return Err(Error::InvalidInput {
            field: "alpha",
            reason: format!("{alpha} is not finite"),
        });
    }
    if p.is_discrete() || q.is_discrete() {
        let atoms = aligned_atoms(p, q)?;
        let sum: f64 = atoms
            .iter()
            .map(|&(_, px, qx)| {
                let lr = (qx / px).ln();
                if alpha == 1.0 {
                    kl_term(px.ln(), lr)
                } else if alpha == 0.0 {
                    kl_term(qx.ln(), -lr)
                } else {
                    power_term(alpha, px, lr)
                }
            })
            .sum();
        let v = if alpha == 0.0 || alpha == 1.0 {
            sum
        } else {
            sum / (alpha * (alpha - 1.0))
        };
        return check_result(v, "alpha-divergence");
    }

    let frame = shared_frame(p, q)?;
    check_alpha_finite(alpha, p, q)?;
    let integral = if alpha == 1.0 {
        integrate(
            |x| {
                let (lp, lq) = (p.ln_pdf(x), q.ln_pdf(x));
                if lp == f64::NEG_INFINITY {
                    return lq.exp();
                }
                kl_term(lp, lq - lp)
            },
            frame,
            quad,
        )?
    } else if alpha == 0.0 {
        integrate(
            |x| {
                let (lp, lq) = (p.ln_pdf(x), q.ln_pdf(x));
                if lq == f64::NEG_INFINITY {
                    return lp.exp();
                }
                kl_term(lq, lp - lq)
            },
            frame,
            quad,
        )?
    } else {
        integrate(
            |x| {
                let (lp, lq) = (p.ln_pdf(x), q.ln_pdf(x));
                if lp == f64::NEG_INFINITY {
                    // p^α q^(1-α) - p with p = 0
                    return if alpha > 0.0 || lq == f64::NEG_INFINITY {
                        0.0
                    } else {
                        f64::INFINITY
                    };
                }
                power_term(alpha, lp.exp(), lq - lp)
            },
            frame,
            quad,
        )?
    };
    let v = if alpha == 0.0 || alpha == 1.0 {
        integral.value
    } else {
        integral.value / (alpha * (alpha - 1.0))
    };
    check_result(v, "alpha-divergence")
}

/// Closed-form KL when one exists for the pair.
pub fn kl_closed_form(p: &Distribution, q: &Distribution) -> Option<f64> {
    match (p, q) {
        (Distribution::Normal(a), Distribution::Normal(b)) => {
            let dm = b.mu() - a.mu();
            let s2q = b.sigma() * b.sigma();
            let r = a.sigma() / b.sigma();
            Some(dm * dm / (2.0 * s2q) + 0.5 * (r * r - 1.0) - r.ln())
        }
        (Distribution::Exponential(a), Distribution::Exponential(b)) => {
            let r = a.nu() / b.nu();
            Some(r - 1.0 - r.ln())
        }
        (Distribution::Bernoulli(a), Distribution::Bernoulli(b)) => {
            let (p, q) = (a.p(), b.p());
            Some(p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln())
        }
        _ => None,
    }
}

/// `KL(P‖Q)` in nats, by closed form where available and otherwise by
/// [`alpha_divergence`] at α = 1.
pub fn kl_exact(p: &Distribution, q: &Distribution, quad: &QuadratureSpec) -> Result<f64> {
    if let Some(v) = kl_closed_form(p, q) {
        return Ok(v);
    }
    alpha_divergence(1.0, p, q, quad)
}

/// Squared Hellinger distance `∫ (√q − √p)²`.
pub fn hellinger_sq(p: &Distribution, q: &Distribution, quad: &QuadratureSpec) -> Result<f64> {
    if p.is_discrete() || q.is_discrete() {
        let atoms = aligned_atoms(p, q)?;
        let v = atoms
            .iter()
            .map(|&(_, px, qx)| {
                let d = qx.sqrt() - px.sqrt();
                d * d
            })
            .sum();
        return check_result(v, "squared Hellinger distance");
    }
    let frame = shared_frame(p, q)?;
    let r = integrate(
        |x| {
            let d = (0.5 * q.ln_pdf(x)).exp() - (0.5 * p.ln_pdf(x)).exp();
            d * d
        },
        frame,
        quad,
    )?;
    check_result(r.value, "squared Hellinger distance")
}

/// Chi-square divergence `∫ (q − p)² / q`.
pub fn chi_sq(p: &Distribution, q: &Distribution, quad: &QuadratureSpec) -> Result<f64> {
    if p.is_discrete() || q.is_discrete() {
        let atoms = aligned_atoms(p, q)?;
        let v = atoms
            .iter()
            .map(|&(_, px, qx)| {
                let d = qx - px;
                d * d / qx
            })
            .sum();
        return check_result(v, "chi-square divergence");
    }
    let frame = shared_frame(p, q)?;
    check_alpha_finite(2.0, p, q)?;
    let r = integrate(
        |x| {
            let (lp, lq) = (p.ln_pdf(x), q.ln_pdf(x));
            if lp == f64::NEG_INFINITY {
                return lq.exp();
            }
            if lq == f64::NEG_INFINITY {
                return f64::INFINITY;
            }
            let d = lp - lq;
            if d < 1.0 {
                // q (p/q - 1)^2
                let w = d.exp_m1();
                lq.exp() * w * w
            } else {
                (2.0 * lp - lq).exp() - 2.0 * lp.exp() + lq.exp()
            }
        },
        frame,
        quad,
    )
    .map_err(|e| match e {
        // (p/q)² p can exceed f64::MAX far out in the tails even when the
        // integral converges analytically.
        Error::NonFinite(_) => Error::DivergentIntegral(
            "chi-square divergence overflows the floating-point range".into(),
        ),
        e => e,
    })?;
    check_result(r.value, "chi-square divergence")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{DensityFn, Discrete};
    use std::sync::Arc;

    const ALPHAS: [f64; 7] = [-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0];

    fn quad() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn golden_pair() -> (Distribution, Distribution) {
        let s = vec![1.0, 2.0, 3.0, 4.0];
        (
            Distribution::Discrete(Discrete::uniform(s.clone()).unwrap()),
            Distribution::discrete(s, vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
        )
    }

    // Direct textbook sums, independent of the log-space forms above.
    fn brute(alpha: f64, p: &[f64], q: &[f64]) -> f64 {
        let it = p.iter().zip(q);
        if alpha == 1.0 {
            it.map(|(a, b)| a * (a / b).ln()).sum()
        } else if alpha == 0.0 {
            it.map(|(a, b)| b * (b / a).ln()).sum()
        } else {
            let s: f64 = it.map(|(a, b)| a.powf(alpha) * b.powf(1.0 - alpha)).sum();
            (s - 1.0) / (alpha * (alpha - 1.0))
        }
    }

    #[test]
    fn golden_kl() {
        let (p, q) = golden_pair();
        let kl = alpha_divergence(1.0, &p, &q, &quad()).unwrap();
        assert!((kl - 0.121777274287).abs() < 1e-12, "{kl}");
        assert_eq!(kl_exact(&p, &q, &quad()).unwrap(), kl);
    }

    #[test]
    fn golden_chi_square() {
        let (p, q) = golden_pair();
        let oracle = 0.0225 / 0.1 + 0.0025 / 0.2 + 0.0025 / 0.3 + 0.0225 / 0.4;
        let chi = chi_sq(&p, &q, &quad()).unwrap();
        assert!((chi - oracle).abs() < 1e-15);
        assert!((chi - 0.302_083_333_333_333).abs() < 1e-12);
        let d2 = alpha_divergence(2.0, &p, &q, &quad()).unwrap();
        assert!((2.0 * d2 - chi).abs() < 1e-10);
    }

    #[test]
    fn golden_hellinger() {
        let (p, q) = golden_pair();
        let oracle: f64 = [0.1f64, 0.2, 0.3, 0.4]
            .iter()
            .map(|q| (q.sqrt() - 0.5).powi(2))
            .sum();
        let h = hellinger_sq(&p, &q, &quad()).unwrap();
        assert!((h - oracle).abs() < 1e-15);
        let d_half = alpha_divergence(0.5, &p, &q, &quad()).unwrap();
        assert!((0.5 * d_half - h).abs() < 1e-10);
    }

    #[test]
    fn discrete_matches_brute_force_on_alpha_grid() {
        let p = [0.25, 0.25, 0.25, 0.25];
        let q = [0.1, 0.2, 0.3, 0.4];
        let (dp, dq) = golden_pair();
        for a in ALPHAS {
            let v = alpha_divergence(a, &dp, &dq, &quad()).unwrap();
            assert!((v - brute(a, &p, &q)).abs() < 1e-13, "alpha {a}");
            assert!(v >= -NEGATIVE_SLACK);
        }
    }

    #[test]
    fn self_divergence_is_zero() {
        let dists = [
            golden_pair().0,
            Distribution::bernoulli(0.3).unwrap(),
            Distribution::normal(1.0, 2.0).unwrap(),
            Distribution::exponential(0.5).unwrap(),
        ];
        for d in &dists {
            for a in ALPHAS {
                let v = alpha_divergence(a, d, d, &quad()).unwrap();
                assert!(v.abs() <= 1e-12, "{d:?} alpha {a}: {v}");
            }
            assert!(hellinger_sq(d, d, &quad()).unwrap().abs() <= 1e-12);
            assert!(chi_sq(d, d, &quad()).unwrap().abs() <= 1e-12);
        }
    }

    #[test]
    fn continuous_alpha_grid_nonnegative_and_consistent() {
        let pairs = [
            (
                Distribution::normal(0.0, 1.0).unwrap(),
                Distribution::normal(1.0, 1.2).unwrap(),
            ),
            (
                Distribution::exponential(1.0).unwrap(),
                Distribution::exponential(1.5).unwrap(),
            ),
        ];
        for (p, q) in &pairs {
            for a in ALPHAS {
                let v = alpha_divergence(a, p, q, &quad()).unwrap();
                assert!(v >= -NEGATIVE_SLACK, "alpha {a}: {v}");
            }
            let h = hellinger_sq(p, q, &quad()).unwrap();
            let d_half = alpha_divergence(0.5, p, q, &quad()).unwrap();
            assert!((h - 0.5 * d_half).abs() < 1e-10);
            let c = chi_sq(p, q, &quad()).unwrap();
            let d2 = alpha_divergence(2.0, p, q, &quad()).unwrap();
            assert!((c - 2.0 * d2).abs() < 1e-10);
        }
    }

    #[test]
    fn normal_kl_closed_form_matches_quadrature() {
        for &(mp, sp, mq, sq) in &[
            (0.0, 1.0, 1.0, 1.0),
            (0.0, 1.0, 0.0, 2.0),
            (-1.0, 0.5, 2.0, 3.0),
            (3.0, 2.0, 0.0, 0.7),
        ] {
            let p = Distribution::normal(mp, sp).unwrap();
            let q = Distribution::normal(mq, sq).unwrap();
            let closed = kl_exact(&p, &q, &quad()).unwrap();
            let numeric = alpha_divergence(1.0, &p, &q, &quad()).unwrap();
            assert!(
                (closed - numeric).abs() <= 1e-8 * closed.max(1e-300),
                "{closed} {numeric}"
            );
        }
    }

    #[test]
    fn mean_shift_normal_kl() {
        let sigma = 1.7;
        for beta in [0.0, 0.5, 1.0, 3.0] {
            let p = Distribution::normal(0.0, sigma).unwrap();
            let q = Distribution::normal(beta * sigma, sigma).unwrap();
            let kl = kl_exact(&p, &q, &quad()).unwrap();
            assert!((kl - beta * beta / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn exponential_kl() {
        let e = Distribution::exponential(1.3).unwrap();
        assert_eq!(kl_exact(&e, &e, &quad()).unwrap(), 0.0);
        let p = Distribution::exponential(1.0).unwrap();
        let q = Distribution::exponential(2.0).unwrap();
        let kl = kl_exact(&p, &q, &quad()).unwrap();
        assert!((kl - (0.5 - 1.0 + 2f64.ln())).abs() < 1e-15);
        let numeric = alpha_divergence(1.0, &p, &q, &quad()).unwrap();
        assert!((kl - numeric).abs() < 1e-8 * kl);
    }

    #[test]
    fn bernoulli_kl_and_chi_square() {
        let p = Distribution::bernoulli(0.3).unwrap();
        let q = Distribution::bernoulli(0.7).unwrap();
        let kl = kl_exact(&p, &q, &quad()).unwrap();
        assert!((kl - 0.4 * (7.0f64 / 3.0).ln()).abs() < 1e-15);
        let by_sum = alpha_divergence(1.0, &p, &q, &quad()).unwrap();
        assert!((kl - by_sum).abs() < 1e-15);
        let chi = chi_sq(&p, &q, &quad()).unwrap();
        assert!((chi - 0.16 / 0.21).abs() < 1e-14);
        let same = Distribution::bernoulli(0.5).unwrap();
        assert_eq!(hellinger_sq(&same, &same, &quad()).unwrap(), 0.0);
    }

    #[test]
    fn bernoulli_matches_two_atom_discrete() {
        let b = Distribution::bernoulli(0.2).unwrap();
        let d = Distribution::discrete(vec![0.0, 1.0], vec![0.6, 0.4]).unwrap();
        let kl = alpha_divergence(1.0, &b, &d, &quad()).unwrap();
        let oracle = 0.8 * (0.8f64 / 0.6).ln() + 0.2 * (0.2f64 / 0.4).ln();
        assert!((kl - oracle).abs() < 1e-15);
    }

    #[test]
    fn support_mismatch() {
        let (p, _) = golden_pair();
        let n = Distribution::normal(0.0, 1.0).unwrap();
        let e = Distribution::exponential(1.0).unwrap();
        assert!(matches!(
            alpha_divergence(1.0, &p, &n, &quad()),
            Err(Error::SupportMismatch(_))
        ));
        assert!(matches!(
            kl_exact(&n, &e, &quad()),
            Err(Error::SupportMismatch(_))
        ));
        let b = Distribution::bernoulli(0.5).unwrap();
        assert!(matches!(
            chi_sq(&p, &b, &quad()),
            Err(Error::SupportMismatch(_))
        ));
    }

    #[test]
    fn divergent_chi_square_is_reported() {
        // chi^2 between normals needs sigma_q^2 > sigma_p^2 / 2.
        let p = Distribution::normal(0.0, 2.0).unwrap();
        let q = Distribution::normal(0.0, 1.0).unwrap();
        assert!(matches!(
            chi_sq(&p, &q, &quad()),
            Err(Error::DivergentIntegral(_))
        ));
        let p = Distribution::exponential(3.0).unwrap();
        let q = Distribution::exponential(1.0).unwrap();
        assert!(matches!(
            alpha_divergence(2.0, &p, &q, &quad()),
            Err(Error::DivergentIntegral(_))
        ));
    }

    #[test]
    fn generic_densities() {
        let quad = quad();
        let fp: DensityFn = Arc::new(|x: f64| 2.0 * x);
        let fq: DensityFn = Arc::new(|_| 1.0);
        let p = Distribution::density(fp, 0.0, 1.0, &quad).unwrap();
        let q = Distribution::density(fq, 0.0, 1.0, &quad).unwrap();
        // ∫ 2x ln(2x) dx on [0,1] = ln 2 - 1/2
        let kl = kl_exact(&p, &q, &quad).unwrap();
        assert!((kl - (2f64.ln() - 0.5)).abs() < 1e-9);
        // chi^2(P‖U) = ∫ (1 - 2x)^2 = 1/3
        let chi = chi_sq(&p, &q, &quad).unwrap();
        assert!((chi - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn non_finite_alpha_rejected() {
        let (p, q) = golden_pair();
        assert!(alpha_divergence(f64::NAN, &p, &q, &quad()).is_err());
    }
}
