//! Deep simulation calibration: at a million replications, every empirical
//! frequency must sit within four standard errors of the exact row, for
//! every horizon up to 20 and both construction methods. Fixed seeds make
//! the outcome deterministic.

use birthchain::{chain, sim, SimConfig, SimMethod, DEFAULT_STEP_LIMIT};

#[test]
fn both_methods_calibrated_to_the_exact_rows_up_to_horizon_20() {
    let reps = 1_000_000u64;
    let mut worst = 0.0f64;
    let mut at = (0usize, 0usize, SimMethod::BernoulliScheme);
    for n in 1..=20usize {
        let exact = chain::dist_recurrence(n, DEFAULT_STEP_LIMIT).expect("small n");
        for method in [SimMethod::BernoulliScheme, SimMethod::GeometricWaits] {
            let s = sim::simulate(&SimConfig {
                n,
                reps,
                seed: 1729,
                method,
            })
            .expect("valid config");
            for k in exact.support() {
                let p = exact.prob_f64(k);
                let se = (p * (1.0 - p) / reps as f64).sqrt();
                let got = s.empirical.get(&k).copied().unwrap_or(0.0);
                if se == 0.0 {
                    // a point mass has no sampling noise to hide behind
                    assert_eq!(got, p, "{method}: deterministic state {k} at horizon {n}");
                    continue;
                }
                let dev = (got - p).abs() / se;
                assert!(
                    dev <= 4.0,
                    "{method}: state {k} at horizon {n} is {dev:.2} standard errors off \
                     ({got} vs {p})"
                );
                if dev > worst {
                    worst = dev;
                    at = (n, k, method);
                }
            }
            // nothing may land outside the exact support
            for (&k, &c) in &s.counts {
                assert!(
                    exact.prob_f64(k) > 0.0 || c == 0,
                    "{method}: impossible state {k} hit {c} times at horizon {n}"
                );
            }
        }
    }
    println!(
        "PASS deep-calibration: worst deviation {worst:.2} standard errors at \
         (n, k, method) = ({}, {}, {})",
        at.0, at.1, at.2
    );
}
