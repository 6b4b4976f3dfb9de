//! Transient distribution of the embedded jump chain.
//!
//! The chain starts at 0 and from state k moves up by one with probability
//! 1/(1+k), otherwise stays. Row n of the distribution obeys
//!
//!   p[n+1][k] = k/(k+1) * p[n][k] + 1/k * p[n][k-1]
//!
//! with p[0][0] = 1, p[n][0] = 0 for n >= 1, and p[n][k] = 0 for k > n.
//! The same row has the closed form
//!
//!   p[n][k] = 1/k! * sum_{i=1..k} (-1)^(k-i) C(k+1, i+1) i^k (i/(i+1))^(n-k)
//!
//! whose terms grow like k^k while the sum stays below 1, so the float
//! evaluation carries an explicit cancellation ledger. The recurrence only
//! adds nonnegative quantities and is the numerically stable float path.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::{binomial, Integer};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{big_ratio_f64, NeumaierSum};

/// Default ceiling for exact-arithmetic step counts. Overridable per call;
/// the CLI maps the BIRTHCHAIN_EXACT_LIMIT environment variable onto it.
pub const DEFAULT_STEP_LIMIT: usize = 500;

/// Maximum tolerated decimal digits of cancellation before the float closed
/// form refuses to return a value.
pub const CANCELLATION_BUDGET: f64 = 12.0;

/// Decimal digits a double carries; used by the stability contract
/// |float - exact|/exact < 10^(digits - PRECISION_DIGITS + SAFETY_DIGITS).
pub const PRECISION_DIGITS: f64 = 15.95;
pub const SAFETY_DIGITS: f64 = 2.0;

/// Rows switch to parallel updates above this step count.
const PAR_THRESHOLD: usize = 64;

/// (up, stay) probabilities out of state k: (1/(1+k), k/(1+k)).
pub fn transition_probs(k: usize) -> (BigRational, BigRational) {
    let denom = BigInt::from(k + 1);
    (
        BigRational::new(BigInt::one(), denom.clone()),
        BigRational::new(BigInt::from(k), denom),
    )
}

/// One exact row of the chain: the distribution of the state after n steps.
/// Entries are reduced rationals; absent keys carry probability zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactDist {
    n: usize,
    probs: BTreeMap<usize, BigRational>,
}

impl ExactDist {
    pub fn step(&self) -> usize {
        self.n
    }

    /// Probability of state k; zero off the support.
    pub fn prob(&self, k: usize) -> BigRational {
        self.probs.get(&k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn prob_f64(&self, k: usize) -> f64 {
        self.probs.get(&k).and_then(|r| r.to_f64()).unwrap_or(0.0)
    }

    /// States with nonzero probability, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &BigRational)> {
        self.probs.iter().map(|(k, p)| (*k, p))
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> BigRational {
        self.probs.values().sum()
    }
}

/// Exact row engine. Numerators sit over one shared denominator and are not
/// reduced; the denominator gains a factor lcm(1..=n+2) per step so that both
/// recurrence coefficients scale to integers. Equality of represented
/// rationals is unaffected, and normalization is the integer identity
/// sum(nums) == den.
#[derive(Debug, Clone)]
pub struct RowIter {
    n: usize,
    nums: Vec<BigInt>,
    den: BigInt,
    lcm: BigInt,
}

impl Default for RowIter {
    fn default() -> Self {
        Self::new()
    }
}

impl RowIter {
    /// Row 0: point mass at state 0.
    pub fn new() -> Self {
        RowIter {
            n: 0,
            nums: vec![BigInt::one()],
            den: BigInt::one(),
            lcm: BigInt::one(),
        }
    }

    pub fn step(&self) -> usize {
        self.n
    }

    /// Advance one step: row n -> row n+1.
    pub fn advance(&mut self) {
        // multiplier L = lcm(1..=n+2) clears both 1/(k+1) and 1/k below
        self.lcm = self.lcm.lcm(&BigInt::from(self.n + 2));
        let l = self.lcm.clone();
        let old = &self.nums;
        let build = |k: usize| -> BigInt {
            // p'[k] = k/(k+1) p[k] + 1/k p[k-1], scaled by L
            let mut acc = &old[k - 1] * (&l / BigInt::from(k));
            if k < old.len() {
                acc += &old[k] * BigInt::from(k) * (&l / BigInt::from(k + 1));
            }
            acc
        };
        let mut nums: Vec<BigInt> = Vec::with_capacity(self.n + 2);
        nums.push(BigInt::zero());
        if self.n >= PAR_THRESHOLD {
            nums.par_extend((1..=self.n + 1).into_par_iter().map(build));
        } else {
            nums.extend((1..=self.n + 1).map(build));
        }
        self.nums = nums;
        self.den *= l;
        self.n += 1;
    }

    pub fn advance_to(&mut self, n: usize) {
        while self.n < n {
            self.advance();
        }
    }

    /// Exact normalization check: does the row sum to exactly one?
    pub fn is_normalized(&self) -> bool {
        self.nums.iter().sum::<BigInt>() == self.den
    }

    pub fn prob_f64(&self, k: usize) -> f64 {
        match self.nums.get(k) {
            Some(num) if !num.is_zero() => big_ratio_f64(num, &self.den),
            _ => 0.0,
        }
    }

    /// Unreduced numerator of state k and the shared denominator.
    /// ln(num/den) stays computable when the reduced value underflows f64.
    pub fn raw(&self, k: usize) -> Option<(&BigInt, &BigInt)> {
        self.nums.get(k).map(|num| (num, &self.den))
    }

    /// Materialize the row with reduced entries.
    pub fn to_dist(&self) -> ExactDist {
        let reduce = |(k, num): (usize, &BigInt)| -> Option<(usize, BigRational)> {
            if num.is_zero() {
                None
            } else {
                Some((k, BigRational::new(num.clone(), self.den.clone())))
            }
        };
        let entries: Vec<(usize, BigRational)> = if self.n >= PAR_THRESHOLD {
            self.nums
                .par_iter()
                .enumerate()
                .filter_map(reduce)
                .collect()
        } else {
            self.nums.iter().enumerate().filter_map(reduce).collect()
        };
        ExactDist {
            n: self.n,
            probs: entries.into_iter().collect(),
        }
    }

    /// Exact mean of the row. The ratio is exact but left unreduced: a gcd
    /// on the shared denominator (about 0.72 n^2 bits) would dwarf the whole
    /// sweep. Comparisons still work (Ratio equality is value based); for a
    /// float use numeric::big_ratio_f64 or reduce explicitly.
    pub fn mean(&self) -> BigRational {
        BigRational::new_raw(self.weighted_sum(|k| BigInt::from(k)), self.den.clone())
    }

    /// Exact second moment of the row, unreduced like mean.
    pub fn second_moment(&self) -> BigRational {
        BigRational::new_raw(self.weighted_sum(|k| BigInt::from(k * k)), self.den.clone())
    }

    /// Exact variance of the row, unreduced. Built from integer cross
    /// products so no reduction happens on the way.
    pub fn variance(&self) -> BigRational {
        let m1 = self.weighted_sum(|k| BigInt::from(k));
        let m2 = self.weighted_sum(|k| BigInt::from(k * k));
        BigRational::new_raw(m2 * &self.den - &m1 * &m1, &self.den * &self.den)
    }

    fn weighted_sum(&self, weight: impl Fn(usize) -> BigInt) -> BigInt {
        self.nums
            .iter()
            .enumerate()
            .map(|(k, v)| v * weight(k))
            .sum()
    }

    /// Exact probability of the event {k : pred(k)}, unreduced like mean.
    pub fn prob_where(&self, pred: impl Fn(usize) -> bool) -> BigRational {
        let num: BigInt = self
            .nums
            .iter()
            .enumerate()
            .filter(|(k, _)| pred(*k))
            .map(|(_, v)| v.clone())
            .sum();
        BigRational::new_raw(num, self.den.clone())
    }
}

/// Exact distribution after n steps via the forward recurrence.
/// This is the reference oracle every other method is compared against.
pub fn dist_recurrence(n: usize, limit: usize) -> Result<ExactDist> {
    if n > limit {
        return Err(Error::StepLimit { n, limit });
    }
    let mut row = RowIter::new();
    row.advance_to(n);
    Ok(row.to_dist())
}

fn factorial_big(k: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=k {
        acc *= BigInt::from(i);
    }
    acc
}

/// Exact closed form for p[n][k]. Total: off-triangle arguments give the
/// correct degenerate values (p[0][0] = 1, zero elsewhere).
pub fn pnk_closed_exact(n: usize, k: usize) -> BigRational {
    if k > n {
        return BigRational::zero();
    }
    if k == 0 {
        return if n == 0 {
            BigRational::one()
        } else {
            BigRational::zero()
        };
    }
    let mut sum = BigRational::zero();
    for i in 1..=k {
        // i^k (i/(i+1))^(n-k) = i^n / (i+1)^(n-k); consecutive bases are
        // coprime so the raw ratio is already reduced
        let num = BigInt::from(i).pow(n as u32);
        let den = BigInt::from(i + 1).pow((n - k) as u32);
        let mut term = BigRational::new_raw(num, den);
        term *= BigRational::from(binomial(BigInt::from(k + 1), BigInt::from(i + 1)));
        if (k - i) % 2 == 1 {
            term = -term;
        }
        sum += term;
    }
    sum / BigRational::from(factorial_big(k))
}

/// Float closed-form evaluation with its cancellation ledger.
#[derive(Debug, Clone, Copy)]
pub struct Cancellation {
    pub value: f64,
    /// log10(max |term| / |sum|): decimal digits destroyed by cancellation.
    pub cancellation_digits: f64,
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    let mut acc = 1.0;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc
}

/// Closed form in double precision. Returns the value together with the
/// digits lost to cancellation, or refuses when the loss exceeds
/// [`CANCELLATION_BUDGET`] and the result would be noise dressed as a number.
pub fn pnk_closed_float(n: usize, k: usize) -> Result<Cancellation> {
    if k > n || (k == 0 && n > 0) {
        return Ok(Cancellation {
            value: 0.0,
            cancellation_digits: 0.0,
        });
    }
    if k == 0 {
        return Ok(Cancellation {
            value: 1.0,
            cancellation_digits: 0.0,
        });
    }
    let mut acc = NeumaierSum::new();
    let mut max_abs = 0.0f64;
    for i in 1..=k {
        let magnitude = binomial_f64(k + 1, i + 1)
            * (i as f64).powi(k as i32)
            * (i as f64 / (i + 1) as f64).powi((n - k) as i32);
        if !magnitude.is_finite() {
            return Err(Error::PrecisionExhausted {
                cancellation_digits: f64::INFINITY,
            });
        }
        max_abs = max_abs.max(magnitude);
        acc.add(if (k - i) % 2 == 1 { -magnitude } else { magnitude });
    }
    let sum = acc.total();
    if sum == 0.0 {
        return Err(Error::PrecisionExhausted {
            cancellation_digits: f64::INFINITY,
        });
    }
    let cancellation_digits = (max_abs / sum.abs()).log10();
    if cancellation_digits > CANCELLATION_BUDGET {
        return Err(Error::PrecisionExhausted {
            cancellation_digits,
        });
    }
    let mut fact = 1.0f64;
    for i in 2..=k {
        fact *= i as f64;
    }
    let value = sum / fact;
    if !value.is_finite() {
        return Err(Error::PrecisionExhausted {
            cancellation_digits: f64::INFINITY,
        });
    }
    Ok(Cancellation {
        value,
        cancellation_digits,
    })
}

/// Row n of the chain in pure double precision via the forward recurrence.
/// All coefficients are nonnegative, so relative error grows only linearly
/// in n for entries inside the normal f64 range. Index k holds p[n][k].
pub fn float_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0f64];
    for _ in 0..n {
        row.push(0.0);
        for k in (1..row.len()).rev() {
            let stay = k as f64 / (k + 1) as f64;
            row[k] = stay * row[k] + row[k - 1] / k as f64;
        }
        row[0] = 0.0;
    }
    row
}

/// Coefficient A[i][k] of the discrete spectral decomposition,
/// (-1)^(k-i) C(k+1, i+1) i^k. Always an integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffAik {
    pub i: usize,
    pub k: usize,
    pub value: BigInt,
}

pub fn coeff_aik(i: usize, k: usize) -> Result<CoeffAik> {
    if i == 0 || k == 0 || i > k {
        return Err(Error::Domain(format!(
            "A[i][k] needs 1 <= i <= k, got i = {i}, k = {k}"
        )));
    }
    let mut value = binomial(BigInt::from(k + 1), BigInt::from(i + 1)) * BigInt::from(i).pow(k as u32);
    if (k - i) % 2 == 1 {
        value = -value;
    }
    Ok(CoeffAik { i, k, value })
}

/// Same coefficient from its product definition
/// 1 / prod_{h != i, 1 <= h <= k} (1 - h/(h+1) * (i+1)/i).
/// Agrees exactly with [`coeff_aik`]; kept separate so tests can cross the
/// two routes.
pub fn coeff_aik_product(i: usize, k: usize) -> Result<BigRational> {
    if i == 0 || k == 0 || i > k {
        return Err(Error::Domain(format!(
            "A[i][k] needs 1 <= i <= k, got i = {i}, k = {k}"
        )));
    }
    let mut prod = BigRational::one();
    let shift = BigRational::new(BigInt::from(i + 1), BigInt::from(i));
    for h in 1..=k {
        if h == i {
            continue;
        }
        let ratio = BigRational::new(BigInt::from(h), BigInt::from(h + 1));
        prod *= BigRational::one() - ratio * &shift;
    }
    Ok(prod.recip())
}

// === tests =================================================================


#[cfg(test)]
mod proptests {
    use super::*;
    use num_traits::Signed;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// Closed form and recurrence are the same function of (n, k).
        #[test]
        fn closed_form_equals_recurrence(n in 1usize..40, pick in 0u64..u64::MAX) {
            let k = 1 + (pick as usize) % n.max(1);
            let d = dist_recurrence(n, DEFAULT_STEP_LIMIT).unwrap();
            prop_assert_eq!(pnk_closed_exact(n, k), d.prob(k));
        }

        /// Rows sum to exactly one at every step.
        #[test]
        fn rows_normalized(n in 0usize..80) {
            let mut row = RowIter::new();
            row.advance_to(n);
            prop_assert!(row.is_normalized());
        }

        /// Support is contained in 1..=n for n >= 1 and probabilities are positive.
        #[test]
        fn support_shape(n in 1usize..60) {
            let d = dist_recurrence(n, DEFAULT_STEP_LIMIT).unwrap();
            for (k, p) in d.iter() {
                prop_assert!(k >= 1 && k <= n);
                prop_assert!(p.is_positive());
            }
        }
    }
}
