//! Bivariate generating function of the chain rows and its consistency
//! checks.
//!
//! F(x, y) = sum_{n,k} p[n][k] x^n y^k collapses to the diagonal sum
//!
//!   F(x, y) = 1 + sum_{k>=1} x^k y^k / (k! * prod_{h=1..k} (1 - h/(h+1) x))
//!
//! so the coefficient grid is built by expanding one geometric factor per
//! diagonal, all in exact rationals. F satisfies
//!
//!   y (1-x)/x F_yy + ((2-x)/x - y) F_y - 2 F = 0,
//!
//! which a truncated grid satisfies up to a tail that dies off like x^N.
//! Two exact algebraic identities behind the closed forms live here too:
//! the partial-fraction sum and the coefficient recurrence bracket.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::chain::coeff_aik;
use crate::error::{Error, Result};

/// Truncated coefficient grid of F: all p[n][k] with n <= order.
/// Stored by diagonal: diag[k][m] is the coefficient of x^(k+m) y^k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesGrid {
    order: usize,
    diag: Vec<Vec<BigRational>>,
}

impl SeriesGrid {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficient of x^n y^k; zero outside the triangle k <= n <= order.
    pub fn coeff(&self, n: usize, k: usize) -> BigRational {
        if n > self.order || k > n {
            return BigRational::zero();
        }
        self.diag[k][n - k].clone()
    }

    /// Exact residual of the generating-function ODE at a rational point,
    /// converted to float once at the end. Pre: 0 < x < 1, 0 <= y <= 1.
    pub fn ode_residual(&self, x: &BigRational, y: &BigRational) -> Result<f64> {
        use num_traits::ToPrimitive;
        if !(x > &BigRational::zero() && x < &BigRational::one()) {
            return Err(Error::Domain(format!("x must lie in (0,1), got {x}")));
        }
        if !(y >= &BigRational::zero() && y <= &BigRational::one()) {
            return Err(Error::Domain(format!("y must lie in [0,1], got {y}")));
        }
        // inner polynomial values P_k(x) = sum_m diag[k][m] x^(k+m)
        let mut f = BigRational::zero();
        let mut f_y = BigRational::zero();
        let mut f_yy = BigRational::zero();
        let mut y_pow = BigRational::one(); // y^(k-2) tracking is folded below
        // evaluate P_k by Horner, then accumulate the y expansion directly
        let mut x_pow_k = BigRational::one();
        for (k, diagk) in self.diag.iter().enumerate() {
            let mut inner = BigRational::zero();
            for c in diagk.iter().rev() {
                inner = inner * x + c;
            }
            let p_k = &x_pow_k * inner;
            // F   += P_k y^k
            // F_y += k P_k y^(k-1),  F_yy += k (k-1) P_k y^(k-2)
            if k == 0 {
                f += &p_k;
            } else if k == 1 {
                f += &p_k * y;
                f_y += &p_k;
            } else {
                // y_pow = y^(k-2) here
                let kq = BigRational::from(BigInt::from(k));
                let kq1 = BigRational::from(BigInt::from(k - 1));
                f_yy += &kq * &kq1 * &p_k * &y_pow;
                f_y += kq * &p_k * &y_pow * y;
                f += &p_k * &y_pow * y * y;
                y_pow *= y;
            }
            x_pow_k *= x;
        }
        let one = BigRational::one();
        let two = BigRational::from(BigInt::from(2));
        let residual = y * (&one - x) / x * f_yy + ((&two - x) / x - y) * f_y - two * f;
        residual
            .to_f64()
            .ok_or_else(|| Error::Domain("residual out of f64 range".into()))
    }
}

/// Expand F to the given order in exact arithmetic. Each diagonal comes from
/// the previous one by one shift, one scalar division, and one geometric
/// division, so the grid costs O(order^2) rational operations.
pub fn f_series(order: usize, limit: usize) -> Result<SeriesGrid> {
    if order > limit {
        return Err(Error::StepLimit { n: order, limit });
    }
    let mut diag: Vec<Vec<BigRational>> = Vec::with_capacity(order + 1);
    // k = 0 diagonal: coefficient 1 at x^0, zero beyond (p[n][0] = 0, n >= 1)
    let mut d0 = vec![BigRational::zero(); order + 1];
    d0[0] = BigRational::one();
    diag.push(d0);
    let mut prev: Vec<BigRational> = vec![BigRational::one()]; // series 1
    for k in 1..=order {
        // term_k(x)/x^k = term_{k-1}(x)/x^(k-1) * (1/k) / (1 - k/(k+1) x)
        let len = order - k + 1;
        let inv_k = BigRational::new(BigInt::one(), BigInt::from(k));
        let ratio = BigRational::new(BigInt::from(k), BigInt::from(k + 1));
        let mut cur = vec![BigRational::zero(); len];
        for m in 0..len {
            let mut v = if m < prev.len() {
                &prev[m] * &inv_k
            } else {
                BigRational::zero()
            };
            if m > 0 {
                v += &ratio * &cur[m - 1];
            }
            cur[m] = v;
        }
        diag.push(cur.clone());
        prev = cur;
    }
    Ok(SeriesGrid { order, diag })
}

/// Residual of the generating-function ODE on the order-N truncation.
pub fn ode_residual(x: &BigRational, y: &BigRational, order: usize, limit: usize) -> Result<f64> {
    f_series(order, limit)?.ode_residual(x, y)
}

/// Exact partial-fraction identity behind the closed form:
/// sum_{i=1..k} A[i][k] prod_{h != i} (1 - h/(h+1) x) == 1 as a polynomial.
pub fn partial_fraction_check(k: usize) -> Result<bool> {
    if k == 0 {
        return Err(Error::Domain("identity needs k >= 1".into()));
    }
    let mut acc = vec![BigRational::zero(); k];
    for i in 1..=k {
        // prod_{h != i} (1 - h/(h+1) x), degree k-1
        let mut poly = vec![BigRational::zero(); k];
        poly[0] = BigRational::one();
        let mut deg = 0usize;
        for h in 1..=k {
            if h == i {
                continue;
            }
            let r = BigRational::new(BigInt::from(h), BigInt::from(h + 1));
            deg += 1;
            for m in (1..=deg).rev() {
                let shift = &r * &poly[m - 1];
                poly[m] -= shift;
            }
        }
        let a = BigRational::from(coeff_aik(i, k)?.value);
        for (accm, polym) in acc.iter_mut().zip(poly.iter()) {
            *accm += &a * polym;
        }
    }
    Ok(acc[0].is_one() && acc[1..].iter().all(|c| c.is_zero()))
}

/// Exact recurrence bracket on the coefficients: for 1 <= i <= k-1,
/// A[i][k] i/(i+1) - k/(k+1) A[i][k] - A[i][k-1] i/(i+1) == 0.
pub fn verify_identity_aik(k: usize) -> Result<bool> {
    if k < 2 {
        return Err(Error::Domain("bracket needs k >= 2".into()));
    }
    for i in 1..=k - 1 {
        let a_ik = BigRational::from(coeff_aik(i, k)?.value);
        let a_ik1 = BigRational::from(coeff_aik(i, k - 1)?.value);
        let decay = BigRational::new(BigInt::from(i), BigInt::from(i + 1));
        let stay = BigRational::new(BigInt::from(k), BigInt::from(k + 1));
        let bracket = &a_ik * &decay - &stay * &a_ik - &a_ik1 * &decay;
        if !bracket.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

// === tests =================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{dist_recurrence, DEFAULT_STEP_LIMIT};
    use num_traits::ToPrimitive;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn grid_matches_recurrence_rows() {
        let g = f_series(20, DEFAULT_STEP_LIMIT).unwrap();
        for n in 0..=20 {
            let d = dist_recurrence(n, DEFAULT_STEP_LIMIT).unwrap();
            for k in 0..=n {
                assert_eq!(g.coeff(n, k), d.prob(k), "({n}, {k})");
            }
        }
    }

    #[test]
    fn grid_is_zero_off_triangle() {
        let g = f_series(6, DEFAULT_STEP_LIMIT).unwrap();
        assert!(g.coeff(3, 4).is_zero());
        assert!(g.coeff(9, 1).is_zero());
    }

    #[test]
    fn grid_respects_limit() {
        assert!(f_series(501, 500).is_err());
    }

    #[test]
    fn residual_at_y_zero_matches_exact_tail_formula() {
        // residual(x, 0, N) = -2 (x/2)^N, derived independently by summing
        // the k = 1 geometric tail; frozen here as the oracle
        for order in [5usize, 12, 25] {
            for x in [ratio(1, 10), ratio(1, 2)] {
                let g = f_series(order, DEFAULT_STEP_LIMIT).unwrap();
                let got = g.ode_residual(&x, &BigRational::zero()).unwrap();
                let half_x = &x / BigRational::from(BigInt::from(2));
                let mut pow = BigRational::one();
                for _ in 0..order {
                    pow *= &half_x;
                }
                let want = (-BigRational::from(BigInt::from(2)) * pow)
                    .to_f64()
                    .unwrap();
                assert!(
                    (got - want).abs() <= want.abs() * 1e-12 + 1e-300,
                    "order {order}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn residual_shrinks_with_order() {
        let x = ratio(1, 5);
        let y = ratio(3, 10);
        let mut prev = f64::INFINITY;
        for order in [10usize, 20, 30] {
            let r = ode_residual(&x, &y, order, DEFAULT_STEP_LIMIT)
                .unwrap()
                .abs();
            assert!(r < prev, "order {order}: {r} !< {prev}");
            prev = r;
        }
        assert!(prev < 1e-12);
    }

    #[test]
    fn residual_rejects_out_of_range_points() {
        let g = f_series(5, DEFAULT_STEP_LIMIT).unwrap();
        assert!(g.ode_residual(&BigRational::zero(), &ratio(1, 2)).is_err());
        assert!(g.ode_residual(&ratio(3, 2), &ratio(1, 2)).is_err());
        assert!(g.ode_residual(&ratio(1, 2), &ratio(-1, 2)).is_err());
    }

    #[test]
    fn partial_fractions_sum_to_one() {
        for k in 1..=25 {
            assert!(partial_fraction_check(k).unwrap(), "k = {k}");
        }
        assert!(partial_fraction_check(0).is_err());
    }

    #[test]
    fn coefficient_bracket_vanishes() {
        for k in 2..=25 {
            assert!(verify_identity_aik(k).unwrap(), "k = {k}");
        }
        assert!(verify_identity_aik(1).is_err());
    }
}
