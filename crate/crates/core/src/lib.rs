//! Transient analysis of the slowing birth process with rates
//! lambda_k = 1/(1+k), together with its embedded discrete chain
//! X_n (one Bernoulli trial per step, success probability 1/(1+Z)).
//!
//! Everything is computed at least twice, by independent routes:
//!
//! * [`chain`]: the exact rational step recurrence (the oracle every other
//!   method is judged against), the alternating closed form for p_{n,k},
//!   and a compensated float recurrence for large n.
//! * [`ctime`]: the continuous-time law p(k,t) as an exponential mixture
//!   from the Laplace transform, plus uniformization over the discrete rows.
//! * [`ode`]: a Dormand-Prince integration of the truncated master equation.
//! * [`genfunc`]: the bivariate generating function as an exact series,
//!   its defining PDE residual, and the coefficient identities.
//! * [`bounds`]: exact moments with certified mean, second-moment,
//!   variance, Chebyshev, bounded-difference and MGF bounds.
//! * [`sim`]: reproducible Monte Carlo by two constructions, with
//!   goodness-of-fit tooling.
//! * [`verify`]: named cross-validation suites wiring all of the above
//!   together, reporting the first counterexample on any failure.
//!
//! Exact arithmetic uses `num-rational`; row-shaped values are kept over a
//! shared unreduced denominator because reducing them (a gcd on integers
//! with millions of bits) costs more than every sweep in this crate.

pub mod bounds;
pub mod chain;
pub mod ctime;
pub mod error;
pub mod genfunc;
pub mod numeric;
pub mod ode;
pub mod sim;
pub mod verify;

pub use bounds::{
    chebyshev_report, chebyshev_report_at, general_mgf_bound, mcdiarmid_tail_reports,
    mcdiarmid_tail_reports_at, mean_approx, mgf_report, mgf_report_at, moments, moments_float,
    per_step_means, variance_upper_bound, BoundKind, BoundReport, FloatMoments, MomentSet,
};
pub use chain::{
    coeff_aik, coeff_aik_product, dist_recurrence, float_row, pnk_closed_exact,
    pnk_closed_float, transition_probs, Cancellation, CoeffAik, ExactDist, RowIter,
    CANCELLATION_BUDGET, DEFAULT_STEP_LIMIT,
};
pub use ctime::{
    default_truncation, laplace_coeffs, pkt_closed, pkt_uniformization, ExpMixture, LaplaceCoeff,
    MixtureEval,
};
pub use error::{Error, Result};
pub use genfunc::{f_series, ode_residual, SeriesGrid};
pub use ode::{pkt_ode, OdeOptions};
pub use sim::{
    chi_square_two_sample, expected_trials, histogram_export, sample_path, simulate, ChiSquare,
    SimConfig, SimMethod, SimSummary,
};
pub use verify::{all_passed, run_suite, CheckOutcome, Suite, VerifyOptions};
