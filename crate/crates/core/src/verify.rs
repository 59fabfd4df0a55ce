//! Seeded verification suites: closed form against quadrature, the path
//! identities, tightness for Bernoulli pairs, the Cramér–Rao limit, and
//! soundness of the moment bounds on random distribution pairs.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bound::{
    hcrb_chi2_lower_bound, hellinger_lower_bound, kl_lower_bound, kl_lower_bound_integral,
};
use crate::dist::{moment_summary, Discrete, Distribution, FoI, MomentSummary};
use crate::divergence::{chi_sq, hellinger_sq, kl_exact};
use crate::error::{invalid, Error, Result};
use crate::mixture::{
    check_fisher_identity, check_lemma1, cramer_rao_limit_check, MixturePath, ParametricFamily,
    DEFAULT_STEP,
};
use crate::quad::QuadratureSpec;

pub const SEED: u64 = 0x006b_6c62_6f75_6e64;

pub const ORACLE_TOL: f64 = 1e-8;
pub const PATH_TOL: f64 = 1e-6;
pub const BERNOULLI_TOL: f64 = 1e-10;
pub const CRAMER_RAO_TOL: f64 = 0.01;
pub const SOUNDNESS_SLACK: f64 = 1e-10;
pub const HCRB_EQUALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Suite {
    BoundOracle,
    Lemma1,
    Fisher,
    Bernoulli,
    CramerRao,
    Hcrb,
    Soundness,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::BoundOracle,
        Suite::Lemma1,
        Suite::Fisher,
        Suite::Bernoulli,
        Suite::CramerRao,
        Suite::Hcrb,
        Suite::Soundness,
    ];

    pub fn run(&self) -> SuiteReport {
        let result = match self {
            Suite::BoundOracle => bound_oracle(1000, SEED),
            Suite::Lemma1 => lemma1(),
            Suite::Fisher => fisher(),
            Suite::Bernoulli => bernoulli(50),
            Suite::CramerRao => cramer_rao(),
            Suite::Hcrb => hcrb(1000, SEED),
            Suite::Soundness => soundness(1000, SEED),
        };
        result.unwrap_or_else(|e| SuiteReport {
            suite: *self,
            passed: false,
            worst: f64::NAN,
            tolerance: f64::NAN,
            cases: 0,
            detail: format!("error: {e}"),
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::BoundOracle => "bound-oracle",
            Suite::Lemma1 => "lemma1",
            Suite::Fisher => "fisher",
            Suite::Bernoulli => "bernoulli",
            Suite::CramerRao => "cramer-rao",
            Suite::Hcrb => "hcrb",
            Suite::Soundness => "soundness",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.to_string() == s)
            .ok_or_else(|| invalid("suite", format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    /// Worst residual or violation observed.
    pub worst: f64,
    pub tolerance: f64,
    pub cases: usize,
    pub detail: String,
}

fn report(suite: Suite, worst: f64, tolerance: f64, cases: usize, detail: String) -> SuiteReport {
    SuiteReport {
        suite,
        passed: worst <= tolerance,
        worst,
        tolerance,
        cases,
        detail,
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

/// Random moment summaries: variances log-uniform on `[1e-3, 1e3]`, mean gap
/// uniform on `[0, 10]`.
pub fn random_summaries(n: usize, seed: u64) -> Vec<MomentSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let e_p = rng.gen_range(-5.0..5.0);
            let gap = rng.gen_range(0.0..10.0);
            let v_p = log_uniform(&mut rng, 1e-3, 1e3);
            let v_q = log_uniform(&mut rng, 1e-3, 1e3);
            MomentSummary {
                e_p,
                e_q: e_p + gap,
                v_p,
                v_q,
            }
        })
        .collect()
}

fn random_discrete(rng: &mut ChaCha8Rng, atoms: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut support: Vec<f64> = Vec::with_capacity(atoms);
    while support.len() < atoms {
        let x = (rng.gen_range(-5.0f64..5.0) * 100.0).round() / 100.0;
        if !support.contains(&x) {
            support.push(x);
        }
    }
    let weights = |rng: &mut ChaCha8Rng| {
        let w: Vec<f64> = (0..atoms).map(|_| rng.gen_range(0.02..1.0)).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect::<Vec<f64>>()
    };
    let p = weights(rng);
    let q = weights(rng);
    (support, p, q)
}

/// Random same-family pairs: a third discrete (2 to 8 atoms), a third
/// normal, a third exponential.
pub fn random_pairs(n: usize, seed: u64) -> Vec<(Distribution, Distribution)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| match i % 3 {
            0 => {
                let atoms = rng.gen_range(2..=8);
                let (s, p, q) = random_discrete(&mut rng, atoms);
                (
                    Distribution::discrete(s.clone(), p).expect("normalized weights"),
                    Distribution::discrete(s, q).expect("normalized weights"),
                )
            }
            1 => {
                let p =
                    Distribution::normal(rng.gen_range(-3.0..3.0), log_uniform(&mut rng, 0.3, 3.0));
                let q =
                    Distribution::normal(rng.gen_range(-3.0..3.0), log_uniform(&mut rng, 0.3, 3.0));
                (p.expect("valid"), q.expect("valid"))
            }
            _ => {
                let p = Distribution::exponential(log_uniform(&mut rng, 0.2, 5.0));
                let q = Distribution::exponential(log_uniform(&mut rng, 0.2, 5.0));
                (p.expect("valid"), q.expect("valid"))
            }
        })
        .collect()
}

/// `(p, q)` grid with `k` points per axis on `[0.01, 0.99]`, diagonal removed.
pub fn bernoulli_grid(k: usize) -> Vec<(f64, f64)> {
    let pts: Vec<f64> = (0..k)
        .map(|i| 0.01 + 0.98 * i as f64 / (k - 1) as f64)
        .collect();
    pts.iter()
        .flat_map(|&p| pts.iter().map(move |&q| (p, q)))
        .filter(|(p, q)| p != q)
        .collect()
}

/// The 4-atom path used by the identity checks.
pub fn golden_path() -> MixturePath {
    let s = vec![1.0, 2.0, 3.0, 4.0];
    MixturePath::new(
        Distribution::Discrete(Discrete::uniform(s.clone()).expect("valid")),
        Distribution::discrete(s, vec![0.1, 0.2, 0.3, 0.4]).expect("valid"),
    )
    .expect("common support")
}

pub fn t_grid() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

pub fn bound_oracle(n: usize, seed: u64) -> Result<SuiteReport> {
    let quad = QuadratureSpec::default();
    let mut worst = 0.0f64;
    for m in random_summaries(n, seed) {
        let closed = kl_lower_bound(&m)?.value;
        let numeric = kl_lower_bound_integral(&m, &quad)?;
        worst = worst.max((closed - numeric).abs() / closed.abs().max(1.0));
    }
    Ok(report(
        Suite::BoundOracle,
        worst,
        ORACLE_TOL,
        n,
        format!("max |closed - quadrature| / max(1, value) = {worst:.3e}"),
    ))
}

pub const LEMMA1_ALPHAS: [f64; 5] = [0.0, 0.5, 1.0, 1.5, 2.0];

pub fn lemma1() -> Result<SuiteReport> {
    let quad = QuadratureSpec::default();
    let path = golden_path();
    let mut worst = 0.0f64;
    let mut cases = 0;
    for alpha in LEMMA1_ALPHAS {
        for t in t_grid() {
            worst = worst.max(check_lemma1(&path, alpha, t, DEFAULT_STEP, &quad)?);
            cases += 1;
        }
    }
    Ok(report(
        Suite::Lemma1,
        worst,
        PATH_TOL,
        cases,
        format!("max derivative residual = {worst:.3e}"),
    ))
}

pub fn fisher() -> Result<SuiteReport> {
    let quad = QuadratureSpec::default();
    let path = golden_path();
    let mut worst = 0.0f64;
    for t in t_grid() {
        worst = worst.max(check_fisher_identity(&path, t, DEFAULT_STEP, &quad)?);
    }
    Ok(report(
        Suite::Fisher,
        worst,
        PATH_TOL,
        t_grid().len(),
        format!("max |dKL/dt - t I(t)| = {worst:.3e}"),
    ))
}

pub fn bernoulli(k: usize) -> Result<SuiteReport> {
    let quad = QuadratureSpec::default();
    let grid = bernoulli_grid(k);
    let mut worst = 0.0f64;
    for &(a, b) in &grid {
        let p = Distribution::bernoulli(a)?;
        let q = Distribution::bernoulli(b)?;
        let kl = kl_exact(&p, &q, &quad)?;
        let m = moment_summary(&p, &q, &FoI::Identity, &quad)?;
        worst = worst.max((kl - kl_lower_bound(&m)?.value).abs());
    }
    Ok(report(
        Suite::Bernoulli,
        worst,
        BERNOULLI_TOL,
        grid.len(),
        format!("max |KL - bound| = {worst:.3e}"),
    ))
}

pub const CRAMER_RAO_DELTAS: [f64; 3] = [1e-1, 1e-2, 1e-3];

pub fn cramer_rao_cases() -> [(ParametricFamily, f64); 3] {
    [
        (ParametricFamily::NormalMean { sigma: 1.0 }, 0.0),
        (ParametricFamily::ExponentialMean, 1.0),
        (ParametricFamily::BernoulliProbability, 0.3),
    ]
}

pub fn cramer_rao() -> Result<SuiteReport> {
    let quad = QuadratureSpec::default();
    let mut worst = 0.0f64;
    let mut monotone = true;
    let mut parts = Vec::new();
    for (family, theta) in cramer_rao_cases() {
        let table =
            cramer_rao_limit_check(family, &FoI::Identity, theta, &CRAMER_RAO_DELTAS, &quad)?;
        let last = table.rows.last().expect("non-empty").ratio;
        worst = worst.max((last - 1.0).abs());
        monotone &= table.monotone();
        parts.push(format!("{}: ratio {last:.6}", family.name()));
    }
    let mut r = report(
        Suite::CramerRao,
        worst,
        CRAMER_RAO_TOL,
        3,
        format!("{}; monotone = {monotone}", parts.join(", ")),
    );
    r.passed &= monotone;
    Ok(r)
}

/// Value of a divergence, with divergent integrals counted as `+∞`.
fn or_infinite(r: Result<f64>) -> Result<f64> {
    match r {
        Err(Error::DivergentIntegral(_)) => Ok(f64::INFINITY),
        other => other,
    }
}

pub fn hcrb(n: usize, seed: u64) -> Result<SuiteReport> {
    let quad = QuadratureSpec::default();
    let mut worst = f64::NEG_INFINITY;
    let mut cases = 0;
    for (p, q) in random_pairs(n, seed) {
        let chi = or_infinite(chi_sq(&p, &q, &quad))?;
        let hel = hellinger_sq(&p, &q, &quad)?;
        for f in [FoI::Identity, FoI::Square] {
            let m = moment_summary(&p, &q, &f, &quad)?;
            worst = worst.max(hcrb_chi2_lower_bound(&m)? - chi);
            worst = worst.max(hellinger_lower_bound(&m)? - hel);
            cases += 1;
        }
    }
    let mut eq_worst = 0.0f64;
    for (a, b) in bernoulli_grid(50) {
        let p = Distribution::bernoulli(a)?;
        let q = Distribution::bernoulli(b)?;
        let m = moment_summary(&p, &q, &FoI::Identity, &quad)?;
        eq_worst = eq_worst.max((hcrb_chi2_lower_bound(&m)? - chi_sq(&p, &q, &quad)?).abs());
    }
    let mut r = report(
        Suite::Hcrb,
        worst,
        SOUNDNESS_SLACK,
        cases,
        format!(
            "max (bound - divergence) = {worst:.3e}; Bernoulli chi-square equality gap = {eq_worst:.3e}"
        ),
    );
    r.passed &= eq_worst <= HCRB_EQUALITY_TOL;
    Ok(r)
}

pub fn soundness(n: usize, seed: u64) -> Result<SuiteReport> {
    let quad = QuadratureSpec::default();
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    let mut cases = 0;
    for (p, q) in random_pairs(n, seed) {
        let kl = kl_exact(&p, &q, &quad)?;
        for f in [FoI::Identity, FoI::Square] {
            let m = moment_summary(&p, &q, &f, &quad)?;
            let excess = kl_lower_bound(&m)?.value - kl;
            if excess > SOUNDNESS_SLACK {
                violations += 1;
            }
            worst = worst.max(excess);
            cases += 1;
        }
    }
    Ok(report(
        Suite::Soundness,
        worst,
        SOUNDNESS_SLACK,
        cases,
        format!("max (bound - KL) = {worst:.3e}; violations = {violations}"),
    ))
}
