//! Exact moments of the chain and certification of its concentration
//! bounds.
//!
//! The approximate mean (-1+sqrt(1+8n))/2 comes from solving E(T) = n for
//! the waiting-time mean E(T) = k(k+1)/2; the variance bound is
//! -1/2 + sqrt(1+8n). Certified against the exact row:
//!
//!   Chebyshev:  P(|X - E| >= eps E) <= Var/(eps^2 E^2)
//!   tails:      P(X >= (1+eps)E), P(X <= (1-eps)E) <= exp(-eps^2 E / 3)
//!   MGF:        E(exp(h X_n)) <= (1 - a + a e^h)^n,  a = E(X_n)/n
//!
//! with the general per-step product bound
//! prod_k ((b_k-mu_k)/(b_k-a_k) e^{h a_k} + (mu_k-a_k)/(b_k-a_k) e^{h b_k})
//! reducing bitwise to the MGF bound at (a,b,mu) = (0,1,a).
//!
//! Every certification uses the exact mean; the closed-form approximations
//! are reported alongside in the asymptotic slots.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::chain::{float_row, RowIter};
use crate::error::{Error, Result};
use crate::numeric::{big_ratio_f64, ln_big_ratio, NeumaierSum};

/// Exact moments of one row next to the paper's closed-form approximations.
/// The rationals are exact but unreduced (see RowIter::mean).
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    pub n: usize,
    pub mean_exact: BigRational,
    pub second_moment_exact: BigRational,
    pub variance_exact: BigRational,
    /// (-1 + sqrt(1+8n)) / 2, from solving the waiting-time identity.
    pub mean_approx: f64,
    /// -1/2 + sqrt(1+8n), the closed-form variance bound.
    pub variance_upper: f64,
}

pub fn mean_approx(n: usize) -> f64 {
    (-1.0 + (1.0 + 8.0 * n as f64).sqrt()) / 2.0
}

pub fn variance_upper_bound(n: usize) -> f64 {
    -0.5 + (1.0 + 8.0 * n as f64).sqrt()
}

impl MomentSet {
    pub fn from_row(row: &RowIter) -> MomentSet {
        MomentSet {
            n: row.step(),
            mean_exact: row.mean(),
            second_moment_exact: row.second_moment(),
            variance_exact: row.variance(),
            mean_approx: mean_approx(row.step()),
            variance_upper: variance_upper_bound(row.step()),
        }
    }
}

/// Exact moments after n steps.
pub fn moments(n: usize, limit: usize) -> Result<MomentSet> {
    if n > limit {
        return Err(Error::StepLimit { n, limit });
    }
    let mut row = RowIter::new();
    row.advance_to(n);
    Ok(MomentSet::from_row(&row))
}

/// Moments from the f64 recurrence, for past-the-limit fallback use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloatMoments {
    pub n: usize,
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
}

pub fn moments_float(n: usize) -> FloatMoments {
    let probs = float_row(n);
    let mut mean = NeumaierSum::new();
    let mut m2 = NeumaierSum::new();
    for (k, p) in probs.iter().enumerate() {
        mean.add(k as f64 * p);
        m2.add((k * k) as f64 * p);
    }
    let (mean, m2) = (mean.total(), m2.total());
    FloatMoments {
        n,
        mean,
        second_moment: m2,
        variance: (m2 - mean * mean).max(0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Chebyshev,
    TailUpper,
    TailLower,
    Mgf,
}

impl std::fmt::Display for BoundKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundKind::Chebyshev => write!(f, "chebyshev"),
            BoundKind::TailUpper => write!(f, "tail_upper"),
            BoundKind::TailLower => write!(f, "tail_lower"),
            BoundKind::Mgf => write!(f, "mgf"),
        }
    }
}

/// One certified inequality: the exact quantity, the bound evaluated with
/// the exact mean, and the paper's asymptotic version of the same bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub kind: BoundKind,
    /// eps for tail kinds, h for the MGF kind.
    pub parameter: f64,
    pub exact_value: f64,
    pub bound_value: f64,
    pub asymptotic_value: f64,
    pub holds: bool,
}

/// Exact rational form of a float parameter (every finite f64 is rational).
fn eps_parts(eps: f64) -> Result<(BigInt, BigInt)> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let r = BigRational::from_float(eps).expect("finite float");
    Ok(r.into())
}

/// Chebyshev certificate on a row already advanced to the wanted step.
/// The holds flag comes from an exact integer comparison:
/// tail/D <= (V/D^2) (e_d/e_n)^2 (D/M)^2  <=>  tail M^2 e_n^2 <= V e_d^2 D.
pub fn chebyshev_report_at(row: &RowIter, eps: f64) -> Result<BoundReport> {
    let (eps_num, eps_den) = eps_parts(eps)?;
    let n = row.step();
    let mean = row.mean();
    let (m, d) = (mean.numer().clone(), mean.denom().clone());
    if m.is_zero() {
        return Err(Error::Domain("chebyshev needs n >= 1 (zero mean)".into()));
    }
    // event |k - M/D| >= eps M/D  <=>  |k D - M| e_d >= e_n M
    let rhs = &eps_num * &m;
    let tail = row.prob_where(|k| (BigInt::from(k) * &d - &m).abs() * &eps_den >= rhs);
    let var = row.variance();
    let v = var.numer();
    let lhs_exact = tail.numer() * &m * &m * &eps_num * &eps_num;
    let rhs_exact = v * &eps_den * &eps_den * &d;
    let bound_num = v * &eps_den * &eps_den;
    let bound_den = &m * &m * &eps_num * &eps_num;
    Ok(BoundReport {
        n,
        kind: BoundKind::Chebyshev,
        parameter: eps,
        exact_value: big_ratio_f64(tail.numer(), tail.denom()),
        bound_value: big_ratio_f64(&bound_num, &bound_den),
        asymptotic_value: std::f64::consts::SQRT_2 / (eps * eps * (n as f64).sqrt()),
        holds: lhs_exact <= rhs_exact,
    })
}

/// Chebyshev certificate after n steps.
pub fn chebyshev_report(n: usize, eps: f64, limit: usize) -> Result<BoundReport> {
    if n > limit {
        return Err(Error::StepLimit { n, limit });
    }
    let mut row = RowIter::new();
    row.advance_to(n);
    chebyshev_report_at(&row, eps)
}

/// Two-sided centering tail certificates on an advanced row. Exact tails
/// against exp(-eps^2 E / 3); the bound is transcendental, so the holds
/// flags compare floats (the margins are many orders of magnitude).
pub fn mcdiarmid_tail_reports_at(row: &RowIter, eps: f64) -> Result<(BoundReport, BoundReport)> {
    if !(eps.is_finite() && 0.0 < eps && eps < 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0,1), got {eps}")));
    }
    let n = row.step();
    if n == 0 {
        return Err(Error::Domain("tail bounds need n >= 1".into()));
    }
    let (eps_num, eps_den) = eps_parts(eps)?;
    let mean = row.mean();
    let (m, d) = (mean.numer().clone(), mean.denom().clone());
    // upper event: k D e_d >= M (e_d + e_n); lower: k D e_d <= M (e_d - e_n)
    let hi = &m * (&eps_den + &eps_num);
    let lo = &m * (&eps_den - &eps_num);
    let upper_tail = row.prob_where(|k| BigInt::from(k) * &d * &eps_den >= hi);
    let lower_tail = row.prob_where(|k| BigInt::from(k) * &d * &eps_den <= lo);
    let mean_f = big_ratio_f64(&m, &d);
    let bound = (-eps * eps * mean_f / 3.0).exp();
    let asymptotic = (-eps * eps * (2.0 * n as f64).sqrt() / 3.0).exp();
    let report = |kind, tail: &BigRational| {
        let exact = big_ratio_f64(tail.numer(), tail.denom());
        BoundReport {
            n,
            kind,
            parameter: eps,
            exact_value: exact,
            bound_value: bound,
            asymptotic_value: asymptotic,
            holds: exact <= bound,
        }
    };
    Ok((
        report(BoundKind::TailUpper, &upper_tail),
        report(BoundKind::TailLower, &lower_tail),
    ))
}

/// Two-sided centering tail certificates after n steps.
pub fn mcdiarmid_tail_reports(
    n: usize,
    eps: f64,
    limit: usize,
) -> Result<(BoundReport, BoundReport)> {
    if n > limit {
        return Err(Error::StepLimit { n, limit });
    }
    let mut row = RowIter::new();
    row.advance_to(n);
    mcdiarmid_tail_reports_at(&row, eps)
}

/// The centering property behind the tail bounds: the conditional increment
/// mean mu(x) = 1/(1+x) is non-increasing in x. Checked exactly on
/// x in {0, ..., n}.
pub fn centering_check(n: usize) -> bool {
    (0..n).all(|x| {
        BigRational::new(BigInt::from(1), BigInt::from(x + 1))
            >= BigRational::new(BigInt::from(1), BigInt::from(x + 2))
    })
}

/// MGF certificate on an advanced row. The exact side sums
/// exp(h k + ln p_{n,k}) so subnormal row entries cannot underflow the
/// terms; if any term's exponent nears the float ceiling the whole sum is
/// assembled in log domain instead.
pub fn mgf_report_at(row: &RowIter, h: f64) -> Result<BoundReport> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Domain(format!("h must be positive, got {h}")));
    }
    let n = row.step();
    if n == 0 {
        return Err(Error::Domain("mgf bound needs n >= 1".into()));
    }
    let mut term_logs = Vec::with_capacity(n + 1);
    for k in 0..=n {
        if let Some((num, den)) = row.raw(k) {
            if !num.is_zero() {
                term_logs.push(h * k as f64 + ln_big_ratio(num, den));
            }
        }
    }
    let top = term_logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exact_value = if top < 700.0 {
        let mut sum = NeumaierSum::new();
        for t in &term_logs {
            sum.add(t.exp());
        }
        sum.total()
    } else {
        // log-sum-exp against the dominant term
        let mut sum = NeumaierSum::new();
        for t in &term_logs {
            sum.add((t - top).exp());
        }
        (top + sum.total().ln()).exp()
    };
    let mean = row.mean();
    let alpha = big_ratio_f64(mean.numer(), mean.denom()) / n as f64;
    let eh = h.exp();
    let mut bound_value = 1.0;
    for _ in 0..n {
        bound_value *= 1.0 - alpha + alpha * eh;
    }
    Ok(BoundReport {
        n,
        kind: BoundKind::Mgf,
        parameter: h,
        exact_value,
        bound_value,
        asymptotic_value: ((2.0 * n as f64).sqrt() * (eh - 1.0)).exp(),
        holds: exact_value <= bound_value,
    })
}

/// MGF certificate after n steps.
pub fn mgf_report(n: usize, h: f64, limit: usize) -> Result<BoundReport> {
    if n > limit {
        return Err(Error::StepLimit { n, limit });
    }
    let mut row = RowIter::new();
    row.advance_to(n);
    mgf_report_at(&row, h)
}

/// Product bound over per-step increment ranges [a_k, b_k] and means mu_k.
/// With a == 0, b == 1 and constant mu the factors are computed with the
/// same float operations as mgf_report's bound, so the reduction is bitwise.
pub fn general_mgf_bound(mu: &[BigRational], a: &[f64], b: &[f64], h: f64) -> Result<f64> {
    if mu.len() != a.len() || mu.len() != b.len() {
        return Err(Error::Domain(format!(
            "length mismatch: {} means, {} lower ends, {} upper ends",
            mu.len(),
            a.len(),
            b.len()
        )));
    }
    if !h.is_finite() {
        return Err(Error::Domain(format!("h must be finite, got {h}")));
    }
    let mut product = 1.0;
    for (k, ((m, &ak), &bk)) in mu.iter().zip(a).zip(b).enumerate() {
        if !(ak < bk) {
            return Err(Error::Domain(format!(
                "step {}: range [{ak}, {bk}] is empty",
                k + 1
            )));
        }
        let mk = big_ratio_f64(m.numer(), m.denom());
        if !(ak <= mk && mk <= bk) {
            return Err(Error::Domain(format!(
                "step {}: mean {mk} outside [{ak}, {bk}]",
                k + 1
            )));
        }
        product *= (bk - mk) / (bk - ak) * (h * ak).exp() + (mk - ak) / (bk - ak) * (h * bk).exp();
    }
    Ok(product)
}

/// Exact per-step increment means E(Y_k) = E(X_k) - E(X_{k-1}) for
/// k = 1..=n, by telescoping the row means. Intended for small n; the
/// subtractions reduce their results.
pub fn per_step_means(n: usize, limit: usize) -> Result<Vec<BigRational>> {
    if n > limit {
        return Err(Error::StepLimit { n, limit });
    }
    let mut row = RowIter::new();
    let mut prev = BigRational::zero();
    let mut means = Vec::with_capacity(n);
    for _ in 0..n {
        row.advance();
        let cur = row.mean();
        means.push(&cur - &prev);
        prev = cur;
    }
    Ok(means)
}

// === tests =================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::DEFAULT_STEP_LIMIT;
    use num_traits::One;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn moments_at_one_and_three() {
        let m1 = moments(1, DEFAULT_STEP_LIMIT).unwrap();
        assert!(m1.mean_exact.is_one());
        assert_eq!(m1.mean_approx, 1.0);
        assert!(m1.variance_exact.is_zero());

        let m3 = moments(3, DEFAULT_STEP_LIMIT).unwrap();
        assert_eq!(m3.mean_exact, ratio(23, 12));
        assert_eq!(m3.second_moment_exact, ratio(49, 12));
        assert_eq!(m3.variance_exact, ratio(59, 144));
        assert_eq!(m3.mean_approx, 2.0);
        assert_eq!(m3.variance_upper, 4.5);
    }

    #[test]
    fn moments_invariants_on_small_sweep() {
        let mut row = RowIter::new();
        for n in 1..=40usize {
            row.advance();
            let m = MomentSet::from_row(&row);
            assert!(m.variance_exact >= BigRational::zero(), "n = {n}");
            assert!(
                m.second_moment_exact <= BigRational::from(BigInt::from(2 * n)),
                "n = {n}"
            );
            let v = big_ratio_f64(m.variance_exact.numer(), m.variance_exact.denom());
            assert!(v <= m.variance_upper, "n = {n}: {v} vs {}", m.variance_upper);
        }
    }

    #[test]
    fn moments_respect_limit() {
        assert!(moments(501, 500).is_err());
    }

    #[test]
    fn float_moments_track_exact() {
        let exact = moments(50, DEFAULT_STEP_LIMIT).unwrap();
        let float = moments_float(50);
        let me = big_ratio_f64(exact.mean_exact.numer(), exact.mean_exact.denom());
        let ve = big_ratio_f64(exact.variance_exact.numer(), exact.variance_exact.denom());
        assert!((float.mean - me).abs() < 1e-12 * me);
        assert!((float.variance - ve).abs() < 1e-10 * ve);
    }

    #[test]
    fn chebyshev_is_exact_zero_for_deterministic_step() {
        let r = chebyshev_report(1, 0.5, DEFAULT_STEP_LIMIT).unwrap();
        assert_eq!(r.exact_value, 0.0);
        assert!(r.holds);
        assert_eq!(r.kind, BoundKind::Chebyshev);
    }

    #[test]
    fn chebyshev_holds_at_hundred_steps() {
        let r = chebyshev_report(100, 0.5, DEFAULT_STEP_LIMIT).unwrap();
        assert!(r.holds);
        assert!(r.exact_value <= r.bound_value);
        assert!(r.bound_value < 1.0);
        assert!(r.asymptotic_value > 0.0);
    }

    #[test]
    fn chebyshev_rejects_bad_eps_and_zero_steps() {
        assert!(chebyshev_report(10, 0.0, DEFAULT_STEP_LIMIT).is_err());
        assert!(chebyshev_report(10, -1.0, DEFAULT_STEP_LIMIT).is_err());
        assert!(chebyshev_report(0, 0.5, DEFAULT_STEP_LIMIT).is_err());
    }

    #[test]
    fn tail_reports_are_zero_for_deterministic_step() {
        let (up, lo) = mcdiarmid_tail_reports(1, 0.5, DEFAULT_STEP_LIMIT).unwrap();
        assert_eq!(up.exact_value, 0.0);
        assert_eq!(lo.exact_value, 0.0);
        assert!(up.holds && lo.holds);
        assert_eq!(up.kind, BoundKind::TailUpper);
        assert_eq!(lo.kind, BoundKind::TailLower);
    }

    #[test]
    fn tail_reports_hold_at_fifty_steps() {
        for eps in [0.25, 0.5, 0.75] {
            let (up, lo) = mcdiarmid_tail_reports(50, eps, DEFAULT_STEP_LIMIT).unwrap();
            assert!(up.holds, "upper eps {eps}");
            assert!(lo.holds, "lower eps {eps}");
            assert!(up.bound_value < 1.0);
        }
    }

    #[test]
    fn tail_reports_reject_eps_outside_unit_interval() {
        assert!(mcdiarmid_tail_reports(10, 1.0, DEFAULT_STEP_LIMIT).is_err());
        assert!(mcdiarmid_tail_reports(10, 0.0, DEFAULT_STEP_LIMIT).is_err());
    }

    #[test]
    fn centering_is_nonincreasing() {
        assert!(centering_check(1));
        assert!(centering_check(1000));
    }

    #[test]
    fn mgf_equality_at_one_step_is_bitwise() {
        for h in [0.1, 0.5, 1.0, 2.0] {
            let r = mgf_report(1, h, DEFAULT_STEP_LIMIT).unwrap();
            assert_eq!(r.exact_value, h.exp(), "h = {h}");
            assert_eq!(r.bound_value, h.exp(), "h = {h}");
            assert!(r.holds);
        }
    }

    #[test]
    fn mgf_bound_holds_at_fifty_steps() {
        let r = mgf_report(50, 0.5, DEFAULT_STEP_LIMIT).unwrap();
        assert!(r.holds);
        assert!(r.exact_value > 1.0);
        assert!(r.exact_value <= r.bound_value);
    }

    #[test]
    fn mgf_rejects_nonpositive_h() {
        assert!(mgf_report(10, 0.0, DEFAULT_STEP_LIMIT).is_err());
        assert!(mgf_report(10, -0.5, DEFAULT_STEP_LIMIT).is_err());
    }

    #[test]
    fn general_bound_reduces_to_mgf_bound_bitwise() {
        for (n, h) in [(10usize, 1.0), (20, 0.5), (1, 0.1)] {
            let report = mgf_report(n, h, DEFAULT_STEP_LIMIT).unwrap();
            let m = moments(n, DEFAULT_STEP_LIMIT).unwrap();
            let alpha_exact =
                &m.mean_exact / BigRational::from(BigInt::from(n as i64));
            let mu = vec![alpha_exact; n];
            let got = general_mgf_bound(&mu, &vec![0.0; n], &vec![1.0; n], h).unwrap();
            assert_eq!(got, report.bound_value, "n = {n}, h = {h}");
        }
    }

    #[test]
    fn general_bound_single_flat_factor_is_one() {
        let got = general_mgf_bound(&[ratio(1, 1)], &[0.0], &[2.0], 0.0).unwrap();
        assert_eq!(got, 1.0);
    }

    #[test]
    fn general_bound_with_step_means_brackets_the_mgf() {
        let n = 20;
        let h = 0.5;
        let mu = per_step_means(n, DEFAULT_STEP_LIMIT).unwrap();
        let product = general_mgf_bound(&mu, &vec![0.0; n], &vec![1.0; n], h).unwrap();
        let report = mgf_report(n, h, DEFAULT_STEP_LIMIT).unwrap();
        // per-step factors are tighter than the averaged factor (AM-GM)
        assert!(report.exact_value <= product * (1.0 + 1e-12));
        assert!(product <= report.bound_value * (1.0 + 1e-12));
    }

    #[test]
    fn general_bound_rejects_bad_inputs() {
        assert!(general_mgf_bound(&[ratio(1, 2)], &[0.0], &[1.0], f64::NAN).is_err());
        assert!(general_mgf_bound(&[ratio(3, 2)], &[0.0], &[1.0], 1.0).is_err());
        assert!(general_mgf_bound(&[ratio(1, 2)], &[1.0], &[1.0], 1.0).is_err());
        assert!(general_mgf_bound(&[ratio(1, 2)], &[0.0], &[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn per_step_means_match_conditional_expectation() {
        // E(Y_k) = E(1/(1+X_{k-1})) by the tower property; compare the
        // telescoped means against the direct conditional sum
        let means = per_step_means(8, DEFAULT_STEP_LIMIT).unwrap();
        let mut row = RowIter::new();
        for (idx, got) in means.iter().enumerate() {
            // row sits at step idx = k-1 here
            let mut direct = BigRational::zero();
            for j in 0..=row.step() {
                if let Some((num, den)) = row.raw(j) {
                    if !num.is_zero() {
                        direct += BigRational::new_raw(num.clone(), den * BigInt::from(j + 1));
                    }
                }
            }
            assert_eq!(got, &direct, "k = {}", idx + 1);
            row.advance();
        }
    }

    #[test]
    fn per_step_means_sum_to_the_mean() {
        let n = 12;
        let means = per_step_means(n, DEFAULT_STEP_LIMIT).unwrap();
        let total: BigRational = means.iter().sum();
        let m = moments(n, DEFAULT_STEP_LIMIT).unwrap();
        assert_eq!(total, m.mean_exact);
    }
}
