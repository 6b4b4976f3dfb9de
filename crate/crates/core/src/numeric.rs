//! Floating-point helpers used across modules: compensated summation and
//! conversions from big integers and rationals that stay accurate far outside
//! the range where a naive `num as f64 / den as f64` would overflow.

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Neumaier's variant of Kahan summation. The compensation term also captures
/// the case where the incoming value is larger than the running sum, so the
/// result is accurate to a couple of ulps even for strongly cancelling input.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sum an iterator of f64 values with compensation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = NeumaierSum::new();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

/// num/den as f64, correct for operands of any size. den must be nonzero.
/// The pair does not need to be in lowest terms.
pub fn big_ratio_f64(num: &BigInt, den: &BigInt) -> f64 {
    debug_assert!(!den.is_zero());
    BigRational::new_raw(num.clone(), den.clone())
        .to_f64()
        .unwrap_or(f64::NAN)
}

/// Natural log of a positive big integer, accurate to ~1 ulp of the result.
/// Works far beyond the f64 overflow threshold by splitting off the exponent.
pub fn ln_bigint(x: &BigInt) -> f64 {
    assert!(x.sign() == Sign::Plus, "ln of non-positive integer");
    let bits = x.bits();
    if bits <= 1023 {
        return x.to_f64().expect("fits in f64 range").ln();
    }
    // keep the top 64 bits as the mantissa, account for the shift
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit value");
    top.ln() + (shift as f64) * std::f64::consts::LN_2
}

/// Natural log of num/den for positive num, den of any magnitude.
pub fn ln_big_ratio(num: &BigInt, den: &BigInt) -> f64 {
    ln_bigint(num) - ln_bigint(den)
}

/// Natural log of a positive rational.
pub fn ln_rational(r: &BigRational) -> f64 {
    assert!(r.is_positive(), "ln of non-positive rational");
    ln_big_ratio(r.numer(), r.denom())
}
