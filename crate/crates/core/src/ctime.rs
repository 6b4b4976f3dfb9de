//! Transient distribution of the continuous-time process.
//!
//! State k is left at rate 1/(1+k), so the state-k probability is a mixture
//! of exponentials with inverse rates 1..k+1:
//!
//!   p(0,t) = e^-t
//!   p(k,t) = 1/k! * sum_{j=1..k+1} (-1)^(k+1-j) j^k C(k+1, j) e^(-t/j)
//!
//! The mixture coefficients come out of a partial-fraction split of the
//! Laplace transform; both the binomial closed form and the defining product
//! are implemented so they can be checked against each other. A second,
//! derivation-free route is subordination: p(k,t) equals the Poisson(t)
//! average of the exact chain rows. The two must agree to stated tolerances,
//! and a Runge-Kutta integration of the truncated master equation gives a
//! third, fully independent oracle (see `ode`).

use num_bigint::BigInt;
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::chain::RowIter;
use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

/// Partial-fraction data for state k: the coefficient of e^(-t/j) before the
/// 1/k! normalization, plus the positive combinatorial factor Q_j = C(k+1, j)
/// that carries its magnitude.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaplaceCoeff {
    pub j: usize,
    /// (-1)^(k+1-j) j^k C(k+1, j)
    pub a: BigInt,
    /// C(k+1, j)
    pub q: BigInt,
}

/// Coefficients for state k >= 1, j = 1..=k+1, from the binomial closed form.
pub fn laplace_coeffs(k: usize) -> Result<Vec<LaplaceCoeff>> {
    if k == 0 {
        return Err(Error::Domain(
            "state 0 is a single exponential, not a mixture".into(),
        ));
    }
    Ok((1..=k + 1)
        .map(|j| {
            let q = binomial(BigInt::from(k + 1), BigInt::from(j));
            let mut a = BigInt::from(j).pow(k as u32) * &q;
            if (k + 1 - j) % 2 == 1 {
                a = -a;
            }
            LaplaceCoeff { j, a, q }
        })
        .collect())
}

/// The same coefficient from its defining product,
/// A_j = 1 / prod_{i != j, 1 <= i <= k+1} (-1/j + 1/i).
pub fn laplace_coeff_product(k: usize, j: usize) -> Result<BigRational> {
    if k == 0 || j == 0 || j > k + 1 {
        return Err(Error::Domain(format!(
            "A_j needs k >= 1 and 1 <= j <= k+1, got k = {k}, j = {j}"
        )));
    }
    let mut prod = BigRational::one();
    let minus_inv_j = BigRational::new(BigInt::from(-1), BigInt::from(j));
    for i in 1..=k + 1 {
        if i == j {
            continue;
        }
        prod *= &minus_inv_j + BigRational::new(BigInt::one(), BigInt::from(i));
    }
    Ok(prod.recip())
}

/// The magnitude factor from its defining product,
/// Q_j = prod_{i != j, 1 <= i <= k+1} i / |j - i|.
pub fn q_factor_product(k: usize, j: usize) -> Result<BigRational> {
    if k == 0 || j == 0 || j > k + 1 {
        return Err(Error::Domain(format!(
            "Q_j needs k >= 1 and 1 <= j <= k+1, got k = {k}, j = {j}"
        )));
    }
    let mut prod = BigRational::one();
    for i in 1..=k + 1 {
        if i == j {
            continue;
        }
        prod *= BigRational::new(BigInt::from(i), BigInt::from(j.abs_diff(i)));
    }
    Ok(prod)
}

/// Evaluation result of an exponential mixture, with the cancellation ledger.
#[derive(Debug, Clone, Copy)]
pub struct MixtureEval {
    pub value: f64,
    /// log10(max |summand| / |value|); the absolute noise floor of the value
    /// is roughly max |summand| * 1e-16 regardless of this ratio.
    pub cancellation_digits: f64,
}

/// State-k probability as a ready-to-evaluate mixture of exponentials.
/// Coefficients are exact rationals (the 1/k! is folded in) converted to
/// float once; evaluation adds summands smallest-coefficient first under
/// compensated summation.
#[derive(Debug, Clone)]
pub struct ExpMixture {
    k: usize,
    /// (coefficient, inverse rate j), sorted by |coefficient| ascending
    terms: Vec<(f64, f64)>,
    coeff_sum: BigRational,
}

impl ExpMixture {
    pub fn for_state(k: usize) -> ExpMixture {
        if k == 0 {
            return ExpMixture {
                k,
                terms: vec![(1.0, 1.0)],
                coeff_sum: BigRational::one(),
            };
        }
        let mut fact = BigInt::one();
        for i in 2..=k {
            fact *= BigInt::from(i);
        }
        let mut coeff_sum = BigRational::zero();
        let mut terms: Vec<(f64, f64)> = laplace_coeffs(k)
            .expect("k >= 1")
            .into_iter()
            .map(|c| {
                let exact = BigRational::new(c.a, fact.clone());
                coeff_sum += &exact;
                (exact.to_f64().unwrap_or(f64::NAN), c.j as f64)
            })
            .collect();
        terms.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
        ExpMixture { k, terms, coeff_sum }
    }

    pub fn state(&self) -> usize {
        self.k
    }

    /// Exact sum of the mixture coefficients. Zero for every k >= 1, which is
    /// p(k, 0) = 0; equivalently the alternating binomial identity at the
    /// origin.
    pub fn coeff_sum(&self) -> &BigRational {
        &self.coeff_sum
    }

    /// Value at time t >= 0.
    pub fn eval(&self, t: f64) -> MixtureEval {
        if t == 0.0 {
            // the float coefficients only sum to ~1e-13 of zero; the exact
            // coefficient sum gives the initial condition exactly
            return MixtureEval {
                value: self.coeff_sum.to_f64().unwrap_or(f64::NAN),
                cancellation_digits: 0.0,
            };
        }
        let mut acc = NeumaierSum::new();
        let mut max_abs = 0.0f64;
        for &(c, j) in &self.terms {
            let s = c * (-t / j).exp();
            max_abs = max_abs.max(s.abs());
            acc.add(s);
        }
        let value = acc.total();
        let cancellation_digits = if value == 0.0 {
            f64::INFINITY
        } else {
            (max_abs / value.abs()).log10().max(0.0)
        };
        MixtureEval {
            value,
            cancellation_digits,
        }
    }
}

/// p(k, t) by the closed-form mixture. Total for t >= 0; the cancellation
/// field tells the caller how much of the value double precision kept.
pub fn pkt_closed(k: usize, t: f64) -> Result<MixtureEval> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(ExpMixture::for_state(k).eval(t))
}

/// p(k, t) by subordination: sum_n e^-t t^n/n! p[n][k] over exact chain rows.
/// The Poisson weight tail is driven below tol/2 and the weighted sum is
/// compensated, so the result is within tol of the true value. Errors with
/// the step-limit guard when the Poisson horizon needs more rows than limit.
pub fn pkt_uniformization(k: usize, t: f64, tol: f64, limit: usize) -> Result<f64> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut row = RowIter::new();
    let mut weight = (-t).exp();
    let mut weight_mass = NeumaierSum::new();
    let mut acc = NeumaierSum::new();
    let mut n = 0usize;
    loop {
        weight_mass.add(weight);
        if k <= n {
            let p = row.prob_f64(k);
            if p != 0.0 {
                acc.add(weight * p);
            }
        }
        if 1.0 - weight_mass.total() < 0.5 * tol {
            return Ok(acc.total());
        }
        if n >= limit {
            return Err(Error::StepLimit { n: n + 1, limit });
        }
        row.advance();
        n += 1;
        weight *= t / n as f64;
    }
}

/// Truncation level that keeps the mass above it negligible for sane
/// tolerances: three times the sqrt(2t) mean scale plus a flat margin.
pub fn default_truncation(t: f64) -> usize {
    (3.0 * (2.0 * t).sqrt()).ceil() as usize + 10
}

// === tests =================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::DEFAULT_STEP_LIMIT;

    #[test]
    fn coeffs_for_state_one() {
        // A_1 = -2, A_2 = 2; Q_1 = 2, Q_2 = 1
        let cs = laplace_coeffs(1).unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[0].a, BigInt::from(-2));
        assert_eq!(cs[1].a, BigInt::from(2));
        assert_eq!(cs[0].q, BigInt::from(2));
        assert_eq!(cs[1].q, BigInt::from(1));
    }

    #[test]
    fn product_routes_agree_with_closed_forms() {
        for k in 1..=20 {
            let cs = laplace_coeffs(k).unwrap();
            for c in cs {
                assert_eq!(
                    laplace_coeff_product(k, c.j).unwrap(),
                    BigRational::from(c.a.clone()),
                    "A_{} at k = {k}",
                    c.j
                );
                assert_eq!(
                    q_factor_product(k, c.j).unwrap(),
                    BigRational::from(c.q.clone()),
                    "Q_{} at k = {k}",
                    c.j
                );
            }
        }
    }

    #[test]
    fn coeff_domain_guards() {
        assert!(laplace_coeffs(0).is_err());
        assert!(laplace_coeff_product(3, 0).is_err());
        assert!(laplace_coeff_product(3, 5).is_err());
        assert!(q_factor_product(0, 1).is_err());
    }

    #[test]
    fn mixture_coefficients_sum_to_zero() {
        for k in 1..=30 {
            assert!(
                ExpMixture::for_state(k).coeff_sum().is_zero(),
                "sum of coefficients at k = {k}"
            );
        }
    }

    #[test]
    fn evaluation_at_time_zero_is_exact() {
        assert_eq!(pkt_closed(0, 0.0).unwrap().value, 1.0);
        for k in 1..=20 {
            let e = pkt_closed(k, 0.0).unwrap();
            assert_eq!(e.value, 0.0, "p({k}, 0) must vanish exactly");
            assert_eq!(e.cancellation_digits, 0.0);
        }
    }

    #[test]
    fn state_zero_is_plain_exponential() {
        let m = ExpMixture::for_state(0);
        assert!(m.coeff_sum().is_one());
        let e = m.eval(2.0);
        assert_eq!(e.value, (-2.0f64).exp());
    }

    #[test]
    fn state_one_closed_value() {
        // p(1, t) = 2 (e^(-t/2) - e^(-t))
        let got = pkt_closed(1, 1.0).unwrap().value;
        let want = 2.0 * ((-0.5f64).exp() - (-1.0f64).exp());
        assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        assert!((got - 0.47730243708238216).abs() < 1e-15);
    }

    #[test]
    fn closed_rejects_negative_time() {
        assert!(pkt_closed(2, -1.0).is_err());
        assert!(pkt_uniformization(2, f64::NAN, 1e-9, 100).is_err());
    }

    #[test]
    fn uniformization_at_origin_state_is_exact_exponential() {
        // only row 0 charges state 0, so the sum collapses to e^-t exactly
        let got = pkt_uniformization(0, 1.0, 1e-12, DEFAULT_STEP_LIMIT).unwrap();
        assert_eq!(got, (-1.0f64).exp());
    }

    #[test]
    fn uniformization_matches_closed_form() {
        for k in [0usize, 1, 2, 5] {
            for t in [0.1, 1.0, 3.0] {
                let u = pkt_uniformization(k, t, 1e-11, DEFAULT_STEP_LIMIT).unwrap();
                let c = pkt_closed(k, t).unwrap().value;
                assert!((u - c).abs() < 1e-9, "k = {k}, t = {t}: {u} vs {c}");
            }
        }
    }

    #[test]
    fn uniformization_respects_step_limit() {
        match pkt_uniformization(1, 40.0, 1e-10, 30) {
            Err(Error::StepLimit { limit: 30, .. }) => {}
            other => panic!("expected step-limit error, got {other:?}"),
        }
    }

    #[test]
    fn mixture_sub_normalization() {
        // partial sums over k approach 1 from below; caps stay inside the
        // regime where the float mixture noise (max coeff * 1e-16) is far
        // below the asserted slack
        for t in [0.5, 2.0, 5.0] {
            let mut last_deficit = f64::NAN;
            let mut prev_deficit = 1.0;
            for cap in [6usize, 9, 12] {
                let mut s = NeumaierSum::new();
                for k in 0..=cap {
                    s.add(pkt_closed(k, t).unwrap().value);
                }
                let deficit = 1.0 - s.total();
                assert!(deficit > -1e-9, "t = {t}, cap = {cap}: sum exceeds 1");
                assert!(
                    deficit <= prev_deficit + 1e-9,
                    "t = {t}: deficit grew from {prev_deficit} to {deficit}"
                );
                prev_deficit = deficit;
                last_deficit = deficit;
            }
            assert!(last_deficit < 1e-7, "t = {t}: deficit {last_deficit}");
        }
    }

    #[test]
    fn cancellation_ledger_grows_with_state() {
        let small = pkt_closed(3, 1.0).unwrap().cancellation_digits;
        let large = pkt_closed(10, 0.1).unwrap().cancellation_digits;
        assert!(small < 6.0, "k = 3 ledger {small}");
        assert!(large > 12.0, "k = 10 at tiny t should be past the budget, got {large}");
    }

    #[test]
    fn default_truncation_scales_with_time() {
        assert_eq!(default_truncation(0.0), 10);
        assert_eq!(default_truncation(5.0), 20);
        assert!(default_truncation(50.0) > default_truncation(5.0));
    }

    #[test]
    fn laplace_state_three_q_is_binomial_row() {
        let cs = laplace_coeffs(3).unwrap();
        let qs: Vec<i64> = cs.iter().map(|c| c.q.to_i64().unwrap()).collect();
        assert_eq!(qs, vec![4, 6, 4, 1]);
    }
}
