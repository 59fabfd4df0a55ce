//! Moment-based lower bounds on KL, chi-square, and squared Hellinger.
//!
//! With `a = (E_Q − E_P)²`, `A = a + V_P + V_Q` and `D = √(A² − 4 V_P V_Q)`,
//!
//! ```text
//! KL(P‖Q) ≥ (A − 2 V_P) / D · atanh(D / A) + ½ log(V_P / V_Q)
//!         = ∫₀¹ t a / (t(1−t) a + (1−t) V_P + t V_Q) dt
//! ```
//!
//! The integral form follows from integrating the chi-square bound along the
//! mixture path `p + t(q − p)`. [`kl_lower_bound_integral`] evaluates it
//! numerically and serves as an independent check on the closed form.

use serde::{Deserialize, Serialize};

use crate::dist::{aligned_atoms, Distribution, FoI, MomentSummary};
use crate::error::{invalid, Error, Result};
use crate::quad::{integrate_interval, QuadratureSpec};

/// Below this value of `D / A` the factor `atanh(D/A) / D` is evaluated by
/// its Taylor series. The first omitted term is `x⁶/7`, under 1e-36 here.
pub const SERIES_THRESHOLD: f64 = 1e-6;

/// Numerical route used for `atanh(D/A) / D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    ClosedForm,
    SeriesSmallD,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::ClosedForm => "ClosedForm",
            Regime::SeriesSmallD => "SeriesSmallD",
        })
    }
}

/// The KL lower bound with the intermediate quantities used to compute it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    /// Bound value in nats.
    pub value: f64,
    pub a_term: f64,
    pub d_term: f64,
    /// `D / A`, always in `[0, 1)`.
    pub ratio: f64,
    pub regime: Regime,
    /// `½ log(V_P / V_Q)`.
    pub log_term: f64,
}

/// `atanh(x) / x` for `x = D / A`, switching to the series near zero.
///
/// Near `x = 1` the difference `1 − x` is lost to rounding, so there the
/// identity `atanh(D/A) = log((A + D) / (2√(V_P V_Q)))` is used instead.
fn atanh_over_x(x: f64, a_plus_d: f64, v_p: f64, v_q: f64) -> (f64, Regime) {
    if x < SERIES_THRESHOLD {
        let x2 = x * x;
        (1.0 + x2 / 3.0 + x2 * x2 / 5.0, Regime::SeriesSmallD)
    } else if x <= 0.5 {
        (x.atanh() / x, Regime::ClosedForm)
    } else {
        let at = (0.5 * a_plus_d).ln() - 0.5 * (v_p.ln() + v_q.ln());
        (at / x, Regime::ClosedForm)
    }
}

/// Closed-form KL lower bound from the first two moments of a FoI under P
/// and Q.
pub fn kl_lower_bound(m: &MomentSummary) -> Result<BoundResult> {
    m.validate()?;
    let MomentSummary { v_p, v_q, .. } = *m;
    let a = m.gap_sq();
    let big_a = a + v_p + v_q;
    // A² − 4 V_P V_Q expanded into nonnegative terms, so no cancellation.
    let dv = v_p - v_q;
    let d_sq = (a * a + 2.0 * a * (v_p + v_q) + dv * dv).max(0.0);
    let d = d_sq.sqrt();
    let ratio = d / big_a;
    if !(ratio.is_finite() && big_a.is_finite()) {
        return Err(Error::NonFinite(format!(
            "bound intermediates overflowed (A = {big_a}, D = {d})"
        )));
    }
    let (factor, regime) = atanh_over_x(ratio, big_a + d, v_p, v_q);
    // (A − 2V_P) · atanh(D/A) / D == (a + V_Q − V_P) · factor / A
    let log_term = 0.5 * (v_p / v_q).ln();
    let value = (a - dv) * factor / big_a + log_term;
    Ok(BoundResult {
        value,
        a_term: big_a,
        d_term: d,
        ratio,
        regime,
        log_term,
    })
}

/// The bound as an integral over the mixture parameter, evaluated by
/// quadrature.
pub fn kl_lower_bound_integral(m: &MomentSummary, quad: &QuadratureSpec) -> Result<f64> {
    m.validate()?;
    let a = m.gap_sq();
    if a == 0.0 {
        return Ok(0.0);
    }
    let MomentSummary { v_p, v_q, .. } = *m;
    let r = integrate_interval(
        |t| t * a / (t * (1.0 - t) * a + (1.0 - t) * v_p + t * v_q),
        0.0,
        1.0,
        quad,
    )?;
    Ok(r.value)
}

/// `χ²(P‖Q) ≥ (E_Q − E_P)² / V_Q`.
pub fn hcrb_chi2_lower_bound(m: &MomentSummary) -> Result<f64> {
    if !(m.v_q > 0.0 && m.v_q.is_finite()) {
        return Err(invalid("v_q", format!("{} must be positive", m.v_q)));
    }
    if !(m.e_p.is_finite() && m.e_q.is_finite()) {
        return Err(invalid("e_q", "means must be finite"));
    }
    Ok(m.gap_sq() / m.v_q)
}

/// `Hel²(P, Q) ≥ (E_Q − E_P)² / (2 (V_P + V_Q + ½ (E_Q − E_P)²))`.
pub fn hellinger_lower_bound(m: &MomentSummary) -> Result<f64> {
    if !(m.e_p.is_finite() && m.e_q.is_finite()) {
        return Err(invalid("e_q", "means must be finite"));
    }
    let a = m.gap_sq();
    let denom = 2.0 * (m.v_p + m.v_q + 0.5 * a);
    if !(m.v_p + m.v_q > 0.0 && denom.is_finite()) {
        return Err(invalid(
            "v_p",
            format!("V_P + V_Q = {} must be positive", m.v_p + m.v_q),
        ));
    }
    Ok(a / denom)
}

/// Spread of the equality-condition ratio at one mixture parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualitySample {
    pub t: f64,
    /// Max minus min of the per-atom ratio (infinite when an atom with a
    /// vanishing FoI factor has a non-vanishing numerator).
    pub spread: f64,
    /// Mean ratio, the witness for `C(t)`.
    pub constant: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualityReport {
    pub holds: bool,
    pub tol: f64,
    pub samples: Vec<EqualitySample>,
}

impl EqualityReport {
    pub fn max_spread(&self) -> f64 {
        self.samples.iter().map(|s| s.spread).fold(0.0, f64::max)
    }
}

/// FoI factors this close to zero are treated as zero.
const ZERO_FACTOR: f64 = 1e-12;

/// Tests whether `(q − p)/r(·;t) = C(t) (f − E_P − t(E_Q − E_P))` holds
/// atom-wise on every `t` of `t_grid`, which is when the KL bound is tight.
///
/// Only finite-support pairs are supported; the grid used is reported back.
pub fn equality_condition_check(
    p: &Distribution,
    q: &Distribution,
    f: &FoI,
    t_grid: &[f64],
    tol: f64,
) -> Result<EqualityReport> {
    f.validate()?;
    if !(p.is_discrete() && q.is_discrete()) {
        return Err(Error::Unsupported(
            "the equality condition is only checked for finite-support pairs".into(),
        ));
    }
    let atoms = aligned_atoms(p, q)?;
    if atoms.len() < 2 {
        return Err(Error::SupportMismatch("need at least two atoms".into()));
    }
    if t_grid.is_empty() {
        return Err(invalid("t_grid", "empty"));
    }
    if let Some(t) = t_grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(invalid("t_grid", format!("{t} lies outside [0, 1]")));
    }
    if !(tol >= 0.0) {
        return Err(invalid("tol", "must be nonnegative"));
    }
    let e_p: f64 = atoms.iter().map(|&(x, px, _)| px * f.eval(x)).sum();
    let e_q: f64 = atoms.iter().map(|&(x, _, qx)| qx * f.eval(x)).sum();

    let samples: Vec<EqualitySample> = t_grid
        .iter()
        .map(|&t| {
            let center = e_p + t * (e_q - e_p);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut sum = 0.0;
            let mut n = 0usize;
            let mut consistent = true;
            for &(x, px, qx) in &atoms {
                let num = (qx - px) / (px + t * (qx - px));
                let factor = f.eval(x) - center;
                if factor.abs() <= ZERO_FACTOR {
                    consistent &= num.abs() <= tol;
                    continue;
                }
                let r = num / factor;
                lo = lo.min(r);
                hi = hi.max(r);
                sum += r;
                n += 1;
            }
            let spread = if !consistent {
                f64::INFINITY
            } else if n == 0 {
                0.0
            } else {
                hi - lo
            };
            let constant = if n == 0 { 0.0 } else { sum / n as f64 };
            EqualitySample {
                t,
                spread,
                constant,
                holds: spread <= tol,
            }
        })
        .collect();
    Ok(EqualityReport {
        holds: samples.iter().all(|s| s.holds),
        tol,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Discrete;

    const GOLDEN: MomentSummary = MomentSummary {
        e_p: 2.5,
        e_q: 3.0,
        v_p: 1.25,
        v_q: 1.0,
    };

    #[test]
    fn golden_bound() {
        let r = kl_lower_bound(&GOLDEN).unwrap();
        assert!((r.value - 0.111571775657).abs() < 1e-12, "{}", r.value);
        assert_eq!(r.regime, Regime::ClosedForm);
        assert_eq!(r.a_term, 2.5);
        assert!((r.d_term - (2.5f64 * 2.5 - 5.0).sqrt()).abs() < 1e-15);
        assert!((r.log_term - 0.5 * 1.25f64.ln()).abs() < 1e-16);
    }

    #[test]
    fn golden_integral_oracle() {
        let v = kl_lower_bound_integral(&GOLDEN, &QuadratureSpec::default()).unwrap();
        assert!((v - 0.111571775657).abs() < 1e-9);
    }

    #[test]
    fn degenerate_symmetric_case() {
        let m = MomentSummary::new(1.0, 1.0, 2.0, 2.0).unwrap();
        let r = kl_lower_bound(&m).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.d_term, 0.0);
        assert_eq!(r.regime, Regime::SeriesSmallD);
        assert_eq!(
            kl_lower_bound_integral(&m, &QuadratureSpec::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn unit_mean_shift() {
        // Frozen from the quadrature of the mixture-path integrand.
        let m = MomentSummary::new(0.0, 1.0, 1.0, 1.0).unwrap();
        let closed = kl_lower_bound(&m).unwrap().value;
        let oracle = kl_lower_bound_integral(&m, &QuadratureSpec::default()).unwrap();
        assert!((closed - oracle).abs() < 1e-9);
        assert!((closed - 0.430_408_940_964_004_1).abs() < 1e-12, "{closed}");
    }

    #[test]
    fn series_switch_is_continuous() {
        let below = SERIES_THRESHOLD * (1.0 - 1e-9);
        let above = SERIES_THRESHOLD * (1.0 + 1e-9);
        let (fb, rb) = atanh_over_x(below, 2.0, 1.0, 1.0);
        let (fa, ra) = atanh_over_x(above, 2.0, 1.0, 1.0);
        assert_eq!((rb, ra), (Regime::SeriesSmallD, Regime::ClosedForm));
        assert!((fb - fa).abs() <= 1e-12 * fa);
        for k in [0.1, 0.5, 0.99] {
            let x = k * SERIES_THRESHOLD;
            let (series, _) = atanh_over_x(x, 2.0, 1.0, 1.0);
            assert!((series - x.atanh() / x).abs() <= 1e-12);
        }
        // With E_P = E_Q, D/A = |V_P − V_Q| / (V_P + V_Q) and the bound is 0.
        for k in [0.5, 0.999, 1.001, 2.0] {
            let x = k * SERIES_THRESHOLD;
            let m = MomentSummary::new(0.0, 0.0, 1.0, (1.0 - x) / (1.0 + x)).unwrap();
            let b = kl_lower_bound(&m).unwrap();
            assert!(b.value.abs() < 1e-15, "{}", b.value);
        }
    }

    #[test]
    fn large_gap_keeps_precision() {
        // D/A ≈ 1 − 1e-7; the direct atanh loses about half the digits here.
        let m = MomentSummary::new(
            3.372405970152837,
            12.371924022822231,
            0.0010664654542217684,
            0.0021147773686212177,
        )
        .unwrap();
        let closed = kl_lower_bound(&m).unwrap().value;
        let tight = QuadratureSpec::new(1e-13, 1e-15, 100_000).unwrap();
        let oracle = kl_lower_bound_integral(&m, &tight).unwrap();
        assert!(
            (closed - oracle).abs() <= 1e-12 * oracle,
            "{closed} vs {oracle}"
        );

        // Both branches agree on either side of the switch at D/A = 1/2.
        for x in [0.5f64 - 1e-12, 0.5 + 1e-12] {
            let (v_p, v_q) = (1.0, 1.0);
            let big_a = 2.0 / (1.0 - x * x).sqrt();
            let (f, _) = atanh_over_x(x, big_a * (1.0 + x), v_p, v_q);
            assert!((f - x.atanh() / x).abs() < 1e-14);
        }
    }

    #[test]
    fn invalid_summaries_are_rejected() {
        let bad = MomentSummary {
            e_p: 0.0,
            e_q: 1.0,
            v_p: 0.0,
            v_q: 1.0,
        };
        assert!(matches!(
            kl_lower_bound(&bad),
            Err(Error::InvalidInput { field: "v_p", .. })
        ));
        let inf = MomentSummary {
            e_q: f64::INFINITY,
            ..GOLDEN
        };
        assert!(matches!(
            kl_lower_bound(&inf),
            Err(Error::InvalidInput { field: "e_q", .. })
        ));
    }

    #[test]
    fn hcrb_values() {
        assert_eq!(hcrb_chi2_lower_bound(&GOLDEN).unwrap(), 0.25);
        let same = MomentSummary { e_q: 2.5, ..GOLDEN };
        assert_eq!(hcrb_chi2_lower_bound(&same).unwrap(), 0.0);
        let zero_vq = MomentSummary { v_q: 0.0, ..GOLDEN };
        assert!(hcrb_chi2_lower_bound(&zero_vq).is_err());
    }

    #[test]
    fn hellinger_values() {
        let v = hellinger_lower_bound(&GOLDEN).unwrap();
        assert!((v - 0.25 / (2.0 * (2.25 + 0.125))).abs() < 1e-16);
        assert!((v - 0.052_631_578_947_368_42).abs() < 1e-15);
        let m = MomentSummary::new(0.0, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(hellinger_lower_bound(&m).unwrap(), 0.5);
        let same = MomentSummary { e_q: 2.5, ..GOLDEN };
        assert_eq!(hellinger_lower_bound(&same).unwrap(), 0.0);
    }

    #[test]
    fn equality_holds_for_bernoulli() {
        let p = Distribution::bernoulli(0.3).unwrap();
        let q = Distribution::bernoulli(0.7).unwrap();
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        let r = equality_condition_check(&p, &q, &FoI::Identity, &grid, 1e-9).unwrap();
        assert!(r.holds, "{r:?}");
        assert_eq!(r.samples.len(), 5);
    }

    #[test]
    fn equality_trivial_for_identical() {
        let p = Distribution::Discrete(Discrete::uniform(vec![1.0, 2.0, 3.0]).unwrap());
        let r = equality_condition_check(&p, &p, &FoI::Identity, &[0.0, 0.5, 1.0], 1e-12).unwrap();
        assert!(r.holds);
        assert!(r.samples.iter().all(|s| s.constant == 0.0));
    }

    #[test]
    fn equality_fails_for_golden_pair() {
        let s = vec![1.0, 2.0, 3.0, 4.0];
        let p = Distribution::Discrete(Discrete::uniform(s.clone()).unwrap());
        let q = Distribution::discrete(s, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let r = equality_condition_check(&p, &q, &FoI::Identity, &[0.0, 0.5, 1.0], 1e-9).unwrap();
        assert!(!r.holds);
        assert!(r.max_spread() > 1e-3);
    }

    #[test]
    fn equality_check_preconditions() {
        let b = Distribution::bernoulli(0.3).unwrap();
        let n = Distribution::normal(0.0, 1.0).unwrap();
        assert!(equality_condition_check(&b, &b, &FoI::Identity, &[], 1e-9).is_err());
        assert!(equality_condition_check(&b, &b, &FoI::Identity, &[1.5], 1e-9).is_err());
        assert!(matches!(
            equality_condition_check(&n, &n, &FoI::Identity, &[0.5], 1e-9),
            Err(Error::Unsupported(_))
        ));
        let d3 = Distribution::Discrete(Discrete::uniform(vec![0.0, 1.0, 2.0]).unwrap());
        assert!(matches!(
            equality_condition_check(&b, &d3, &FoI::Identity, &[0.5], 1e-9),
            Err(Error::SupportMismatch(_))
        ));
    }
}
