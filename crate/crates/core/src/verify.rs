//! Cross-validation suites: every computation path checked against the
//! exact recurrence oracle or an exact identity, with the first
//! counterexample reported on failure.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::bounds;
use crate::chain::{self, RowIter};
use crate::ctime;
use crate::error::Result;
use crate::genfunc;
use crate::numeric::big_ratio_f64;
use crate::ode;
use crate::sim::{self, SimConfig, SimMethod};

/// One named check with a human-readable outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// What was checked, or the first counterexample on failure.
    pub detail: String,
}

impl CheckOutcome {
    fn pass(name: &'static str, detail: impl Into<String>) -> Self {
        CheckOutcome {
            name,
            passed: true,
            detail: detail.into(),
        }
    }

    fn fail(name: &'static str, detail: impl Into<String>) -> Self {
        CheckOutcome {
            name,
            passed: false,
            detail: detail.into(),
        }
    }

    fn from_result(name: &'static str, r: Result<std::result::Result<String, String>>) -> Self {
        match r {
            Ok(Ok(detail)) => Self::pass(name, detail),
            Ok(Err(detail)) => Self::fail(name, detail),
            Err(e) => Self::fail(name, format!("errored: {e}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    ClosedForm,
    GenFunc,
    Uniformization,
    Bounds,
    Simulation,
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Depth of the exact sweeps; checks pick sensible per-check caps.
    pub max_n: Option<usize>,
    /// Float comparison tolerance for the continuous-time cross-checks.
    pub tol: f64,
    /// Exact step ceiling passed through to the library.
    pub limit: usize,
    pub reps: Option<u64>,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            max_n: None,
            tol: 1e-9,
            limit: chain::DEFAULT_STEP_LIMIT,
            reps: None,
            seed: 42,
        }
    }
}

impl VerifyOptions {
    fn depth(&self, default: usize) -> usize {
        self.max_n.unwrap_or(default).min(self.limit)
    }

    fn reps(&self) -> u64 {
        self.reps.unwrap_or(100_000)
    }
}

/// Run one suite (or all of them) and collect the outcomes.
pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    if matches!(suite, Suite::All | Suite::ClosedForm) {
        out.push(closed_equals_recurrence(opts));
        out.push(rows_normalized(opts));
        out.push(aik_product_equals_closed(opts));
    }
    if matches!(suite, Suite::All | Suite::GenFunc) {
        out.push(series_matches_recurrence(opts));
        out.push(residual_decreases(opts));
        out.push(partial_fraction_sums_to_one(opts));
        out.push(aik_bracket_vanishes(opts));
    }
    if matches!(suite, Suite::All | Suite::Uniformization) {
        out.push(closed_matches_uniformization(opts));
        out.push(closed_matches_ode(opts));
        out.push(uniformization_identity_at_zero_state(opts));
        out.push(sub_normalization(opts));
        out.push(zero_at_origin_coefficients(opts));
        out.push(laplace_product_equals_binomial(opts));
    }
    if matches!(suite, Suite::All | Suite::Bounds) {
        out.push(second_moment_bound(opts));
        out.push(variance_bound(opts));
        out.push(mean_ratio_monotone(opts));
        out.push(chebyshev_holds(opts));
        out.push(mcdiarmid_holds(opts));
        out.push(mgf_holds(opts));
        out.push(general_bound_reduces(opts));
        out.push(general_bound_dominates_mgf(opts));
        out.push(centering_nonincreasing(opts));
    }
    if matches!(suite, Suite::All | Suite::Simulation) {
        out.push(calibration_within_4se(opts));
        out.push(methods_agree_chisq(opts));
        out.push(reproducible_bitwise(opts));
        out.push(monotone_unit_increment_paths(opts));
        out.push(expected_trials_formula(opts));
    }
    out
}

pub fn all_passed(outcomes: &[CheckOutcome]) -> bool {
    outcomes.iter().all(|c| c.passed)
}

fn sorted_grid(ns: &[usize]) -> Vec<usize> {
    let mut v = ns.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

// --- closed-form suite -----------------------------------------------------

fn closed_equals_recurrence(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "closed-equals-recurrence";
    let cap = opts.depth(40);
    let mut row = RowIter::new();
    for n in 1..=cap {
        row.advance();
        for k in 1..=n {
            let closed = chain::pnk_closed_exact(n, k);
            let (num, den) = row.raw(k).expect("k <= n");
            if closed != BigRational::new_raw(num.clone(), den.clone()) {
                return CheckOutcome::fail(NAME, format!("first mismatch at n={n}, k={k}"));
            }
        }
    }
    CheckOutcome::pass(NAME, format!("all rows equal for n <= {cap}"))
}

fn rows_normalized(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "rows-normalized";
    let cap = opts.depth(120);
    let mut row = RowIter::new();
    for n in 1..=cap {
        row.advance();
        if !row.is_normalized() {
            return CheckOutcome::fail(NAME, format!("row {n} does not sum to 1"));
        }
    }
    CheckOutcome::pass(NAME, format!("exact unit mass for n <= {cap}"))
}

fn aik_product_equals_closed(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "aik-product-equals-closed";
    let cap = opts.depth(20);
    let run = || -> Result<std::result::Result<String, String>> {
        for k in 1..=cap {
            for i in 1..=k {
                let direct = BigRational::from(chain::coeff_aik(i, k)?.value);
                if direct != chain::coeff_aik_product(i, k)? {
                    return Ok(Err(format!("routes disagree at i={i}, k={k}")));
                }
            }
        }
        Ok(Ok(format!("both coefficient routes agree for k <= {cap}")))
    };
    CheckOutcome::from_result(NAME, run())
}

// --- generating-function suite ----------------------------------------------

fn series_matches_recurrence(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "series-matches-recurrence";
    let cap = opts.depth(25).min(40);
    let run = || -> Result<std::result::Result<String, String>> {
        let grid = genfunc::f_series(cap, opts.limit)?;
        let mut row = RowIter::new();
        for n in 1..=cap {
            row.advance();
            for k in 0..=n {
                let (num, den) = row.raw(k).expect("k <= n");
                if grid.coeff(n, k) != BigRational::new_raw(num.clone(), den.clone()) {
                    return Ok(Err(format!("coefficient (n={n}, k={k}) differs")));
                }
            }
        }
        Ok(Ok(format!("series grid equals oracle rows for n <= {cap}")))
    };
    CheckOutcome::from_result(NAME, run())
}

fn residual_decreases(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "residual-decreases";
    let run = || -> Result<std::result::Result<String, String>> {
        let x = BigRational::new(BigInt::from(1), BigInt::from(5));
        let y = BigRational::new(BigInt::from(3), BigInt::from(10));
        let mut prev = f64::INFINITY;
        let mut last = f64::INFINITY;
        for order in [20usize, 30, 40] {
            let r = genfunc::ode_residual(&x, &y, order, opts.limit)?.abs();
            if r >= prev {
                return Ok(Err(format!("residual {r} at order {order} not below {prev}")));
            }
            prev = r;
            last = r;
        }
        Ok(Ok(format!("truncation residual shrinks to {last:.3e} at order 40")))
    };
    CheckOutcome::from_result(NAME, run())
}

fn partial_fraction_sums_to_one(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "partial-fraction-sums-to-one";
    let cap = opts.depth(30);
    let run = || -> Result<std::result::Result<String, String>> {
        for k in 1..=cap {
            if !genfunc::partial_fraction_check(k)? {
                return Ok(Err(format!("identity fails at k={k}")));
            }
        }
        Ok(Ok(format!("exact partial-fraction identity for k <= {cap}")))
    };
    CheckOutcome::from_result(NAME, run())
}

fn aik_bracket_vanishes(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "aik-bracket-vanishes";
    let cap = opts.depth(30).max(2);
    let run = || -> Result<std::result::Result<String, String>> {
        for k in 2..=cap {
            if !genfunc::verify_identity_aik(k)? {
                return Ok(Err(format!("recurrence bracket nonzero at k={k}")));
            }
        }
        Ok(Ok(format!("coefficient recurrence bracket vanishes for k <= {cap}")))
    };
    CheckOutcome::from_result(NAME, run())
}

// --- continuous-time suite ---------------------------------------------------

const T_GRID: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];

fn closed_matches_uniformization(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "closed-matches-uniformization";
    let tol = opts.tol.max(1e-12);
    let run = || -> Result<std::result::Result<String, String>> {
        let mut worst = 0.0f64;
        for k in 0..=8usize {
            for t in T_GRID {
                let closed = ctime::pkt_closed(k, t)?.value;
                let unif = ctime::pkt_uniformization(k, t, tol / 10.0, 10_000)?;
                let gap = (closed - unif).abs();
                worst = worst.max(gap);
                if gap > tol {
                    return Ok(Err(format!("gap {gap:.3e} at k={k}, t={t} exceeds {tol:.0e}")));
                }
            }
        }
        Ok(Ok(format!("max gap {worst:.3e} on the k <= 8 grid")))
    };
    CheckOutcome::from_result(NAME, run())
}

fn closed_matches_ode(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "closed-matches-ode";
    let tol = (opts.tol * 100.0).max(1e-8);
    let run = || -> Result<std::result::Result<String, String>> {
        let mut worst = 0.0f64;
        for t in T_GRID {
            let k_max = ctime::default_truncation(t).max(8);
            let probs = ode::pkt_ode(k_max, t, opts.tol)?;
            for k in 0..=8usize {
                let closed = ctime::pkt_closed(k, t)?.value;
                let gap = (closed - probs[k]).abs();
                worst = worst.max(gap);
                if gap > tol {
                    return Ok(Err(format!("gap {gap:.3e} at k={k}, t={t} exceeds {tol:.0e}")));
                }
            }
        }
        Ok(Ok(format!("max gap {worst:.3e} on the k <= 8 grid")))
    };
    CheckOutcome::from_result(NAME, run())
}

fn uniformization_identity_at_zero_state(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "uniformization-identity-at-zero-state";
    let run = || -> Result<std::result::Result<String, String>> {
        for t in T_GRID {
            let got = ctime::pkt_uniformization(0, t, opts.tol.max(1e-12), 10_000)?;
            let want = (-t).exp();
            if got != want {
                return Ok(Err(format!("p(0,{t}) = {got:e}, expected exp(-t) = {want:e}")));
            }
        }
        Ok(Ok("p(0,t) collapses to exp(-t) exactly on the t grid".to_string()))
    };
    CheckOutcome::from_result(NAME, run())
}

fn sub_normalization(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "sub-normalization";
    let run = || -> Result<std::result::Result<String, String>> {
        // cap small enough that mixture noise stays below the slack
        let cap = 12usize;
        let slack = 1e-9;
        for t in [0.5, 1.0, 2.0] {
            let mut mass = 0.0;
            for k in 0..=cap {
                mass += ctime::pkt_closed(k, t)?.value;
                if mass > 1.0 + slack {
                    return Ok(Err(format!(
                        "partial mass {mass} at t={t} k<={k} exceeds 1"
                    )));
                }
            }
        }
        let _ = opts;
        Ok(Ok(format!("partial sums stay below 1 for k <= {cap}")))
    };
    CheckOutcome::from_result(NAME, run())
}

fn zero_at_origin_coefficients(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "zero-at-origin-coefficients";
    let cap = opts.depth(30);
    let run = || -> Result<std::result::Result<String, String>> {
        for k in 1..=cap {
            let mix = ctime::ExpMixture::for_state(k);
            if !mix.coeff_sum().is_zero() {
                return Ok(Err(format!(
                    "mixture coefficients of state {k} sum to {}",
                    mix.coeff_sum()
                )));
            }
        }
        Ok(Ok(format!("alternating coefficient sums vanish for k <= {cap}")))
    };
    CheckOutcome::from_result(NAME, run())
}

fn laplace_product_equals_binomial(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "laplace-product-equals-binomial";
    let cap = opts.depth(25);
    let run = || -> Result<std::result::Result<String, String>> {
        for k in 1..=cap {
            let coeffs = ctime::laplace_coeffs(k)?;
            for c in coeffs {
                if ctime::laplace_coeff_product(k, c.j)? != BigRational::from(c.a) {
                    return Ok(Err(format!("A_{} differs at k={k}", c.j)));
                }
                if ctime::q_factor_product(k, c.j)? != BigRational::from(c.q) {
                    return Ok(Err(format!("Q_{} differs at k={k}", c.j)));
                }
            }
        }
        Ok(Ok(format!("product forms equal binomial forms for k <= {cap}")))
    };
    CheckOutcome::from_result(NAME, run())
}

// --- bounds suite -------------------------------------------------------------

fn second_moment_bound(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "second-moment-bound";
    let cap = opts.depth(120);
    let mut row = RowIter::new();
    for n in 1..=cap {
        row.advance();
        if row.second_moment() > BigRational::from(BigInt::from(2 * n)) {
            return CheckOutcome::fail(NAME, format!("E(X^2) exceeds 2n at n={n}"));
        }
    }
    CheckOutcome::pass(NAME, format!("E(X^2) <= 2n exactly for n <= {cap}"))
}

fn variance_bound(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "variance-bound";
    let cap = opts.depth(120);
    let mut row = RowIter::new();
    for n in 1..=cap {
        row.advance();
        let var = row.variance();
        let v = big_ratio_f64(var.numer(), var.denom());
        let bound = bounds::variance_upper_bound(n);
        if v > bound + 1e-9 {
            return CheckOutcome::fail(NAME, format!("variance {v} above bound {bound} at n={n}"));
        }
    }
    CheckOutcome::pass(
        NAME,
        format!("variance below -1/2 + sqrt(1+8n) for n <= {cap}"),
    )
}

fn mean_ratio_monotone(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "mean-ratio-monotone";
    let mut grid = vec![10usize, 100];
    if opts.max_n.is_some_and(|m| m >= 1000) && opts.limit >= 1000 {
        grid.push(1000);
    }
    let mut row = RowIter::new();
    let mut prev_gap = f64::INFINITY;
    let mut ratios = Vec::new();
    for &n in &grid {
        row.advance_to(n);
        let mean = row.mean();
        let ratio = big_ratio_f64(mean.numer(), mean.denom()) / bounds::mean_approx(n);
        let gap = (1.0 - ratio).abs();
        if gap >= prev_gap {
            return CheckOutcome::fail(
                NAME,
                format!("|1 - ratio| grew from {prev_gap} to {gap} at n={n}"),
            );
        }
        prev_gap = gap;
        ratios.push(format!("{ratio:.6}"));
    }
    CheckOutcome::pass(
        NAME,
        format!("exact/approx mean ratio climbs toward 1: {}", ratios.join(" -> ")),
    )
}

fn chebyshev_holds(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "chebyshev-holds";
    let cap = opts.depth(200).max(10);
    let run = || -> Result<std::result::Result<String, String>> {
        let mut row = RowIter::new();
        for n in sorted_grid(&[10, 50, cap]) {
            row.advance_to(n);
            for eps in [0.25, 0.5, 0.75] {
                let r = bounds::chebyshev_report_at(&row, eps)?;
                if !r.holds {
                    return Ok(Err(format!(
                        "tail {} above bound {} at n={n}, eps={eps}",
                        r.exact_value, r.bound_value
                    )));
                }
            }
        }
        Ok(Ok(format!("exact tails below Var/(eps E)^2 up to n={cap}")))
    };
    CheckOutcome::from_result(NAME, run())
}

fn mcdiarmid_holds(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "mcdiarmid-holds";
    let cap = opts.depth(200).max(10);
    let run = || -> Result<std::result::Result<String, String>> {
        let mut row = RowIter::new();
        for n in sorted_grid(&[10, 50, cap]) {
            row.advance_to(n);
            for eps in [0.25, 0.5, 0.75] {
                let (up, lo) = bounds::mcdiarmid_tail_reports_at(&row, eps)?;
                for r in [&up, &lo] {
                    if !r.holds {
                        return Ok(Err(format!(
                            "{} tail {} above bound {} at n={n}, eps={eps}",
                            r.kind, r.exact_value, r.bound_value
                        )));
                    }
                }
            }
        }
        Ok(Ok(format!("both tails below exp(-eps^2 E/3) up to n={cap}")))
    };
    CheckOutcome::from_result(NAME, run())
}

fn mgf_holds(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "mgf-holds";
    let cap = opts.depth(100).max(10);
    let run = || -> Result<std::result::Result<String, String>> {
        let one = bounds::mgf_report(1, 1.0, opts.limit)?;
        if one.exact_value != one.bound_value {
            return Ok(Err(format!(
                "n=1 should be an equality: {} vs {}",
                one.exact_value, one.bound_value
            )));
        }
        let mut row = RowIter::new();
        for n in sorted_grid(&[10, 50, cap]) {
            row.advance_to(n);
            for h in [0.1, 0.5, 1.0, 2.0] {
                let r = bounds::mgf_report_at(&row, h)?;
                if !r.holds {
                    return Ok(Err(format!(
                        "MGF {} above bound {} at n={n}, h={h}",
                        r.exact_value, r.bound_value
                    )));
                }
            }
        }
        Ok(Ok(format!(
            "exact MGF below the averaged product bound up to n={cap}, equality at n=1"
        )))
    };
    CheckOutcome::from_result(NAME, run())
}

fn general_bound_reduces(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "general-bound-reduces";
    let run = || -> Result<std::result::Result<String, String>> {
        for (n, h) in [(10usize, 1.0f64), (20, 0.5)] {
            let report = bounds::mgf_report(n, h, opts.limit)?;
            let m = bounds::moments(n, opts.limit)?;
            let alpha = m.mean_exact / BigRational::from(BigInt::from(n));
            let product =
                bounds::general_mgf_bound(&vec![alpha; n], &vec![0.0; n], &vec![1.0; n], h)?;
            if product != report.bound_value {
                return Ok(Err(format!(
                    "constant-mean product {product:e} differs from bound {:e} at n={n}, h={h}",
                    report.bound_value
                )));
            }
        }
        Ok(Ok("flat per-step means reproduce the averaged bound bitwise".to_string()))
    };
    CheckOutcome::from_result(NAME, run())
}

fn general_bound_dominates_mgf(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "general-bound-dominates-mgf";
    let run = || -> Result<std::result::Result<String, String>> {
        let (n, h) = (20usize, 0.5f64);
        let mu = bounds::per_step_means(n, opts.limit)?;
        let product = bounds::general_mgf_bound(&mu, &vec![0.0; n], &vec![1.0; n], h)?;
        let report = bounds::mgf_report(n, h, opts.limit)?;
        if report.exact_value > product * (1.0 + 1e-12) {
            return Ok(Err(format!(
                "exact MGF {} above per-step product {product}",
                report.exact_value
            )));
        }
        if product > report.bound_value * (1.0 + 1e-12) {
            return Ok(Err(format!(
                "per-step product {product} above averaged bound {}",
                report.bound_value
            )));
        }
        Ok(Ok(format!(
            "exact {:.6} <= per-step product {product:.6} <= averaged bound {:.6}",
            report.exact_value, report.bound_value
        )))
    };
    CheckOutcome::from_result(NAME, run())
}

fn centering_nonincreasing(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "centering-nonincreasing";
    let cap = opts.depth(1000);
    if bounds::centering_check(cap) {
        CheckOutcome::pass(NAME, format!("1/(1+x) non-increasing on x <= {cap}"))
    } else {
        CheckOutcome::fail(NAME, "conditional increment mean increased somewhere".to_string())
    }
}

// --- simulation suite -----------------------------------------------------------

fn calibration_within_4se(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "calibration-within-4se";
    let reps = opts.reps();
    let run = || -> Result<std::result::Result<String, String>> {
        let exact = chain::dist_recurrence(3, opts.limit)?;
        for method in [SimMethod::BernoulliScheme, SimMethod::GeometricWaits] {
            let s = sim::simulate(&SimConfig {
                n: 3,
                reps,
                seed: opts.seed,
                method,
            })?;
            for k in 1..=3usize {
                let p = exact.prob_f64(k);
                let se = (p * (1.0 - p) / reps as f64).sqrt();
                let got = s.empirical.get(&k).copied().unwrap_or(0.0);
                if (got - p).abs() > 4.0 * se {
                    return Ok(Err(format!(
                        "{method}: frequency {got} of state {k} is {:.1} se from {p}",
                        (got - p).abs() / se
                    )));
                }
            }
        }
        Ok(Ok(format!(
            "both methods within 4 standard errors of the exact row at {reps} reps"
        )))
    };
    CheckOutcome::from_result(NAME, run())
}

fn methods_agree_chisq(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "methods-agree-chisq";
    let reps = opts.reps();
    let run = || -> Result<std::result::Result<String, String>> {
        let mut p_values = Vec::new();
        for n in [5usize, 20] {
            let a = sim::simulate(&SimConfig {
                n,
                reps,
                seed: opts.seed,
                method: SimMethod::BernoulliScheme,
            })?;
            let b = sim::simulate(&SimConfig {
                n,
                reps,
                seed: opts.seed.wrapping_add(1),
                method: SimMethod::GeometricWaits,
            })?;
            let t = sim::chi_square_two_sample(&a, &b)?;
            if t.p_value <= 0.001 {
                return Ok(Err(format!(
                    "rejected at n={n}: chi2 = {:.2}, df = {}, p = {:.2e}",
                    t.statistic, t.df, t.p_value
                )));
            }
            p_values.push(format!("{:.3}", t.p_value));
        }
        Ok(Ok(format!("construction laws agree, p values {}", p_values.join(", "))))
    };
    CheckOutcome::from_result(NAME, run())
}

fn reproducible_bitwise(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "reproducible-bitwise";
    let cfg = SimConfig {
        n: 10,
        reps: (opts.reps() / 10).max(1),
        seed: opts.seed,
        method: SimMethod::BernoulliScheme,
    };
    match (sim::simulate(&cfg), sim::simulate(&cfg)) {
        (Ok(a), Ok(b)) if a == b => {
            CheckOutcome::pass(NAME, "repeated runs produce identical summaries".to_string())
        }
        (Ok(_), Ok(_)) => CheckOutcome::fail(NAME, "two identical configs disagreed".to_string()),
        (Err(e), _) | (_, Err(e)) => CheckOutcome::fail(NAME, format!("errored: {e}")),
    }
}

fn monotone_unit_increment_paths(opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "monotone-unit-increment-paths";
    for method in [SimMethod::BernoulliScheme, SimMethod::GeometricWaits] {
        for rep in 0..500u64 {
            let path = sim::sample_path(25, opts.seed, rep, method);
            if path[0] != 0 {
                return CheckOutcome::fail(NAME, format!("{method} path {rep} starts off 0"));
            }
            for (m, w) in path.windows(2).enumerate() {
                if w[1] != w[0] && w[1] != w[0] + 1 {
                    return CheckOutcome::fail(
                        NAME,
                        format!("{method} path {rep} jumps {} -> {} at trial {}", w[0], w[1], m + 1),
                    );
                }
            }
        }
    }
    CheckOutcome::pass(NAME, "1000 sampled paths are nondecreasing with unit steps".to_string())
}

fn expected_trials_formula(_opts: &VerifyOptions) -> CheckOutcome {
    const NAME: &str = "expected-trials-formula";
    let mut acc = 0u64;
    for k in 1..=1000u64 {
        acc += k;
        match sim::expected_trials(k) {
            Ok(v) if v == acc => {}
            Ok(v) => {
                return CheckOutcome::fail(NAME, format!("k={k}: got {v}, series sum {acc}"))
            }
            Err(e) => return CheckOutcome::fail(NAME, format!("errored at k={k}: {e}")),
        }
    }
    CheckOutcome::pass(NAME, "k(k+1)/2 equals the accumulated series for k <= 1000".to_string())
}

// === tests =================================================================
