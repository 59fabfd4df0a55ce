//! # klbound
//!
//! Lower bounds on the Kullback–Leibler divergence from the first two
//! moments of a function of interest, together with the exact divergences
//! and numerical oracles used to check them.
//!
//! For distributions `P`, `Q` on a common support and a statistic `f` with
//! means `E_P`, `E_Q` and variances `V_P`, `V_Q > 0`:
//!
//! ```text
//! KL(P‖Q) ≥ (A − 2V_P)/D · atanh(D/A) + ½ log(V_P/V_Q),
//! A = (E_Q − E_P)² + V_P + V_Q,   D = √(A² − 4 V_P V_Q).
//! ```
//!
//! The bound is tight for Bernoulli pairs with `f(x) = x` and reduces to the
//! Cramér–Rao inequality for infinitesimally close distributions.
//!
//! ```
//! use klbound::{kl_lower_bound, MomentSummary};
//!
//! let m = MomentSummary::new(2.5, 3.0, 1.25, 1.0).unwrap();
//! let b = kl_lower_bound(&m).unwrap();
//! assert!((b.value - 0.111571775657).abs() < 1e-12);
//! ```
//!
//! ## Modules
//!
//! - [`dist`]: distribution families, functions of interest, moments
//! - [`divergence`]: α-divergences, KL, squared Hellinger, χ²
//! - [`bound`]: the KL bound, its integral form, and the χ² / Hellinger bounds
//! - [`mixture`]: the mixture path and the derivative identities along it
//! - [`estimate`]: plug-in bounds from samples
//! - [`sweep`]: exact-vs-bound tables over one-parameter families
//! - [`verify`]: seeded verification suites
//! - [`quad`]: adaptive Gauss–Kronrod quadrature

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bound;
pub mod dist;
pub mod divergence;
pub mod error;
pub mod estimate;
pub mod mixture;
pub mod quad;
pub mod sweep;
pub mod verify;

pub use bound::{
    equality_condition_check, hcrb_chi2_lower_bound, hellinger_lower_bound, kl_lower_bound,
    kl_lower_bound_integral, BoundResult, EqualityReport, Regime,
};
pub use dist::{moment_summary, moments, Distribution, FoI, MomentSummary};
pub use divergence::{alpha_divergence, chi_sq, hellinger_sq, kl_exact};
pub use error::{Error, Result};
pub use estimate::{
    bound_from_samples, ingest, ingest_path, stream_moments, FoIBank, InputFormat,
    SampleBoundReport, SampleMoments, VarianceConvention,
};
pub use mixture::{
    check_fisher_identity, check_lemma1, cramer_rao_limit_check, fisher_info_along_path,
    mixture_at, mixture_moments, MixturePath, ParametricFamily,
};
pub use quad::QuadratureSpec;
pub use sweep::{sweep, SweepFamily, SweepRow, SweepSpec};
