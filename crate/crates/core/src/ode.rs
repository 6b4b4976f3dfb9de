//! Independent oracle for the continuous-time distribution: integrate the
//! truncated master equation
//!
//!   p'(0) = -p(0),   p'(k) = p(k-1)/k - p(k)/(k+1)
//!
//! with an adaptive Dormand-Prince 5(4) pair. The flow only moves mass
//! upward, so truncating at k_max leaves the retained components exact; the
//! only question a caller must settle is whether the window holds the whole
//! distribution, which is checked a posteriori against the tolerance.

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Dormand-Prince 5(4) Butcher tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// 5th-order weights (same as the last A row; FSAL pair).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Embedded 4th-order weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

/// Integrate y' = f(t, y) from t0 to t1 (t1 >= t0) with error control
/// err_k <= atol + rtol * |y_k| per step.
pub fn integrate<F>(f: F, t0: f64, t1: f64, y0: &[f64], opts: &OdeOptions) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    assert!(t1 >= t0, "backward integration not supported");
    let dim = y0.len();
    let mut y = y0.to_vec();
    if t1 == t0 || dim == 0 {
        return Ok(y);
    }
    let span = t1 - t0;
    let mut t = t0;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; dim]; 7];
    let mut stage = vec![0.0; dim];
    f(t, &y, &mut k[0]);
    // conservative first step from the explicit scale of the system
    let mut h = (span / 100.0).min(0.1).max(1e-6);
    let mut steps = 0usize;
    while t < t1 {
        if steps >= opts.max_steps {
            return Err(Error::ToleranceNotMet {
                requested: opts.rtol,
                achieved: f64::NAN,
            });
        }
        steps += 1;
        h = h.min(t1 - t);
        for s in 1..=6 {
            for i in 0..dim {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s - 1][j];
                    if a != 0.0 {
                        acc += h * a * kj[i];
                    }
                }
                stage[i] = acc;
            }
            let (_done, rest) = k.split_at_mut(s);
            f(t + h * c_node(s), &stage, &mut rest[0]);
        }
        // error estimate from the embedded pair
        let mut err_ratio = 0.0f64;
        for i in 0..dim {
            let mut y5 = y[i];
            let mut e = 0.0f64;
            for s in 0..7 {
                y5 += h * B5[s] * k[s][i];
                e += h * (B5[s] - B4[s]) * k[s][i];
            }
            let scale = opts.atol + opts.rtol * y[i].abs().max(y5.abs());
            err_ratio = err_ratio.max((e / scale).abs());
            stage[i] = y5;
        }
        if err_ratio <= 1.0 {
            t += h;
            if t1 - t <= span * 1e-13 {
                t = t1;
            }
            y.copy_from_slice(&stage);
            // FSAL: k[6] already holds f(t_new, y_new), the last stage node
            // sits at c = 1 with the 5th-order weights as its A row
            k.swap(0, 6);
        }
        let factor = if err_ratio > 0.0 {
            (0.9 * err_ratio.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
        if !(h > span * 1e-14) {
            return Err(Error::ToleranceNotMet {
                requested: opts.rtol,
                achieved: err_ratio,
            });
        }
    }
    Ok(y)
}

fn c_node(s: usize) -> f64 {
    match s {
        1 => 0.2,
        2 => 0.3,
        3 => 0.8,
        4 => 8.0 / 9.0,
        5 => 1.0,
        6 => 1.0,
        _ => unreachable!(),
    }
}

/// Master-equation right-hand side truncated to states 0..=k_max.
fn master_rhs(y: &[f64], dy: &mut [f64]) {
    dy[0] = -y[0];
    for k in 1..y.len() {
        dy[k] = y[k - 1] / k as f64 - y[k] / (k + 1) as f64;
    }
}

/// p(k, t) for k = 0..=k_max by integrating the truncated master equation.
/// Pre: k_max is large enough that the mass above it is below tol; the
/// function verifies this a posteriori via 1 - sum(returned entries) and
/// errors when the window missed too much of the distribution.
pub fn pkt_ode(k_max: usize, t: f64, tol: f64) -> Result<Vec<f64>> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Domain(format!("tolerance must be in (0, 1), got {tol}")));
    }
    let mut y0 = vec![0.0; k_max + 1];
    y0[0] = 1.0;
    if t == 0.0 {
        return Ok(y0);
    }
    let opts = OdeOptions {
        rtol: tol / 10.0,
        atol: tol * 1e-4,
        max_steps: 1_000_000,
    };
    let y = integrate(|_, y, dy| master_rhs(y, dy), 0.0, t, &y0, &opts)?;
    let mass_gap = 1.0 - compensated_sum(y.iter().copied());
    if mass_gap > tol {
        return Err(Error::ToleranceNotMet {
            requested: tol,
            achieved: mass_gap,
        });
    }
    Ok(y)
}

// === tests =================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctime::{default_truncation, pkt_closed};

    #[test]
    fn scalar_decay_hits_reference() {
        // y' = -y from 1: y(2) = e^-2; global error scales with rtol
        let want = (-2.0f64).exp();
        let y = integrate(
            |_, y, dy| dy[0] = -y[0],
            0.0,
            2.0,
            &[1.0],
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((y[0] - want).abs() < 1e-9, "{}", y[0]);
        let tight = OdeOptions {
            rtol: 1e-12,
            atol: 1e-14,
            max_steps: 1_000_000,
        };
        let y = integrate(|_, y, dy| dy[0] = -y[0], 0.0, 2.0, &[1.0], &tight).unwrap();
        assert!((y[0] - want).abs() < 1e-12, "{}", y[0]);
    }

    #[test]
    fn zero_span_returns_initial_state() {
        let y = integrate(|_, y, dy| dy[0] = -y[0], 0.0, 0.0, &[0.7], &OdeOptions::default())
            .unwrap();
        assert_eq!(y, vec![0.7]);
    }

    #[test]
    fn ode_state_zero_is_exponential() {
        let y = pkt_ode(default_truncation(2.0), 2.0, 1e-9).unwrap();
        assert!((y[0] - (-2.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn ode_at_time_zero_is_point_mass() {
        let y = pkt_ode(5, 0.0, 1e-9).unwrap();
        assert_eq!(y, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn ode_matches_closed_form_grid() {
        for t in [0.1, 1.0, 5.0] {
            let y = pkt_ode(default_truncation(t), t, 1e-9).unwrap();
            for k in 0..=8usize {
                let c = pkt_closed(k, t).unwrap().value;
                assert!(
                    (y[k] - c).abs() < 1e-8,
                    "k = {k}, t = {t}: ode {} closed {c}",
                    y[k]
                );
            }
        }
    }

    #[test]
    fn ode_mass_check_rejects_narrow_window() {
        // two states cannot hold the t = 5 distribution
        match pkt_ode(1, 5.0, 1e-6) {
            Err(Error::ToleranceNotMet { achieved, .. }) => {
                assert!(achieved > 0.5, "gap {achieved}");
            }
            other => panic!("expected tolerance error, got {other:?}"),
        }
    }

    #[test]
    fn ode_rejects_bad_arguments() {
        assert!(pkt_ode(5, -1.0, 1e-9).is_err());
        assert!(pkt_ode(5, 1.0, 0.0).is_err());
        assert!(pkt_ode(5, 1.0, 2.0).is_err());
    }
}
