//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use klbound::dist::Discrete;
use klbound::sweep::sweep_row;
use klbound::verify::{self, SEED};
use klbound::{
    bound_from_samples, kl_exact, kl_lower_bound, moment_summary, Distribution, FoI, FoIBank,
    MomentSummary, QuadratureSpec, SweepFamily, SweepSpec,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};

const GOLDEN_KL: f64 = 0.121777274287;
const GOLDEN_BOUND: f64 = 0.111571775657;
const UNIT_SHIFT_BOUND: f64 = 0.430_408_940_964_004_1;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn golden_pair() -> (Distribution, Distribution) {
    let s = vec![1.0, 2.0, 3.0, 4.0];
    (
        Distribution::Discrete(Discrete::uniform(s.clone()).unwrap()),
        Distribution::discrete(s, vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
    )
}

fn golden() -> Outcome {
    let quad = QuadratureSpec::default();
    let (p, q) = golden_pair();
    let kl = kl_exact(&p, &q, &quad).unwrap();
    let m = moment_summary(&p, &q, &FoI::Identity, &quad).unwrap();
    let bound = kl_lower_bound(&m).unwrap().value;
    let err = (kl - GOLDEN_KL).abs().max((bound - GOLDEN_BOUND).abs());
    outcome(
        err <= 1e-9,
        format!("KL = {kl:.12}, bound = {bound:.12}, max error = {err:.2e}"),
    )
}

fn bernoulli_kl(a: f64, b: f64) -> f64 {
    a * (a / b).ln() + (1.0 - a) * ((1.0 - a) / (1.0 - b)).ln()
}

fn tightness() -> Outcome {
    let mut worst = 0.0f64;
    let grid = verify::bernoulli_grid(50);
    for &(a, b) in &grid {
        let m = MomentSummary::new(a, b, a * (1.0 - a), b * (1.0 - b)).unwrap();
        worst = worst.max((bernoulli_kl(a, b) - kl_lower_bound(&m).unwrap().value).abs());
    }
    outcome(
        worst <= 1e-10 && grid.len() == 2450,
        format!("{} pairs, max |KL - bound| = {worst:.2e}", grid.len()),
    )
}

fn suite(s: verify::Suite) -> Outcome {
    let r = s.run();
    outcome(r.passed, format!("{} cases, {}", r.cases, r.detail))
}

fn sweeps() -> Outcome {
    let quad = QuadratureSpec::default();
    let mut worst_excess = f64::NEG_INFINITY;
    let mut near_one = 0.0f64;
    let mut monotone = true;
    for family in SweepFamily::ALL {
        let rows = klbound::sweep(&SweepSpec::with_defaults(family)).unwrap();
        for r in &rows {
            worst_excess = worst_excess.max(r.bound - r.kl);
        }
        if family == SweepFamily::NormalMeanShift {
            continue;
        }
        // Ratios on each side of β = 1 should climb toward 1.
        let below: Vec<f64> = rows
            .iter()
            .filter(|r| r.beta < 1.0 && r.beta > 0.8)
            .filter_map(|r| r.ratio)
            .collect();
        let above: Vec<f64> = rows
            .iter()
            .filter(|r| r.beta > 1.0 && r.beta < 1.2)
            .filter_map(|r| r.ratio)
            .collect();
        monotone &= below.windows(2).all(|w| w[1] >= w[0]);
        monotone &= above.windows(2).all(|w| w[1] <= w[0]);
        for beta in [1.0 - 1e-3, 1.0 + 1e-3] {
            let r = sweep_row(family, beta, &quad).unwrap();
            near_one = near_one.max((r.ratio.unwrap() - 1.0).abs());
        }
    }
    let unit = sweep_row(SweepFamily::NormalMeanShift, 1.0, &quad).unwrap();
    let unit_ok = (unit.kl - 0.5).abs() < 1e-15 && (unit.bound - UNIT_SHIFT_BOUND).abs() < 1e-12;
    outcome(
        worst_excess <= 1e-10 && near_one < 0.01 && monotone && unit_ok,
        format!(
            "max (bound - KL) = {worst_excess:.2e}, |ratio - 1| at β = 1 ± 1e-3: {near_one:.2e}, \
             monotone = {monotone}, mean-shift β = 1: KL = {}, bound = {:.12}",
            unit.kl, unit.bound
        ),
    )
}

fn samples() -> Outcome {
    let bank = FoIBank::new(vec![FoI::Identity]).unwrap();
    let xs = [1.0, 2.0, 3.0, 4.0];
    let ys = [1.0, 2.0, 2.0, 3.0, 3.0, 3.0, 4.0, 4.0, 4.0, 4.0];
    let exact = kl_lower_bound(&MomentSummary::new(2.5, 3.0, 1.25, 1.0).unwrap())
        .unwrap()
        .value;
    let hist = bound_from_samples(&xs, &ys, &bank).unwrap().max_bound;
    let hist_err = (hist - exact).abs();

    let n = 100_000;
    let trials = 100;
    let mut hits = 0;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ trial);
        let p = Normal::new(0.0, 1.0).unwrap();
        let q = Normal::new(1.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..n).map(|_| p.sample(&mut rng)).collect();
        let ys: Vec<f64> = (0..n).map(|_| q.sample(&mut rng)).collect();
        let r = bound_from_samples(&xs, &ys, &bank).unwrap();
        let b = r.outcomes[0].result.as_ref().unwrap();
        if (b.bound.value - UNIT_SHIFT_BOUND).abs() <= 4.0 * b.standard_error {
            hits += 1;
        }
    }
    outcome(
        hist_err <= 1e-12 && hits * 100 >= 95 * trials,
        format!("histogram error = {hist_err:.2e}, Monte Carlo within 4 SE: {hits}/{trials}"),
    )
}

fn main() -> ExitCode {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Duration, Check); 10] = [
        ("golden pair", Duration::from_millis(1), golden),
        ("bernoulli tightness", Duration::from_secs(1), tightness),
        ("soundness", Duration::from_secs(10), || {
            suite(verify::Suite::Soundness)
        }),
        ("integral oracle", Duration::from_secs(5), || {
            suite(verify::Suite::BoundOracle)
        }),
        ("alpha recurrence", Duration::from_secs(1), || {
            suite(verify::Suite::Lemma1)
        }),
        ("fisher identity", Duration::from_secs(1), || {
            suite(verify::Suite::Fisher)
        }),
        ("cramer-rao limit", Duration::from_secs(1), || {
            suite(verify::Suite::CramerRao)
        }),
        ("chi-square and hellinger", Duration::from_secs(5), || {
            suite(verify::Suite::Hcrb)
        }),
        ("sweep tables", Duration::from_secs(2), sweeps),
        ("sample pipeline", Duration::from_secs(30), samples),
    ];
    let mut failures = 0;
    for (i, (name, budget, check)) in criteria.into_iter().enumerate() {
        // Sub-millisecond budgets are judged on the best of a few runs.
        let repeats = if budget < Duration::from_millis(10) {
            5
        } else {
            1
        };
        let mut elapsed = Duration::MAX;
        let mut result = None;
        for _ in 0..repeats {
            let start = Instant::now();
            let r = check();
            elapsed = elapsed.min(start.elapsed());
            result = Some(r);
        }
        let r = result.unwrap();
        let in_time = elapsed <= budget;
        let passed = r.passed && in_time;
        if !passed {
            failures += 1;
        }
        println!(
            "[{}] {:>2}. {name}: {} ({:.3?} of {:?})",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            r.detail,
            elapsed,
            budget,
        );
    }
    println!("{} of 10 criteria passed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
