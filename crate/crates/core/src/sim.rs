//! Monte Carlo simulation of the chain by two equivalent constructions.
//!
//! Bernoulli scheme (the degenerate urn): Y_0 = 0 and, given the running
//! sum z = Y_1 + ... + Y_{m-1}, trial m succeeds with probability
//! 1/(1+z). The state after n trials is Z_n = sum_{i=1..n} Y_i.
//!
//! Geometric waits: tau_i ~ Geometric(1/i) on {1,2,...} is the number of
//! trials from the (i-1)-th success up to and including the i-th; the state
//! after n trials is max{k : tau_1 + ... + tau_k <= n}. Both constructions
//! have the law of the embedded chain, and the chi-square check below
//! compares them empirically.
//!
//! Every replication r draws from its own RNG stream keyed by (seed, r), so
//! results are bit-identical however the replications are scheduled.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::chain::ExactDist;
use crate::error::{Error, Result};

/// How a replication is generated. Both methods sample the same law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMethod {
    BernoulliScheme,
    GeometricWaits,
}

impl std::fmt::Display for SimMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimMethod::BernoulliScheme => write!(f, "bernoulli_scheme"),
            SimMethod::GeometricWaits => write!(f, "geometric_waits"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    /// Number of trials per replication.
    pub n: usize,
    pub reps: u64,
    pub seed: u64,
    pub method: SimMethod,
}

/// Merged tallies and derived statistics. Equal configs produce equal
/// summaries, bit for bit, regardless of thread count.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub n: usize,
    pub method: SimMethod,
    pub seed: u64,
    pub reps: u64,
    /// Visit counts per final state; only visited states appear.
    pub counts: BTreeMap<usize, u64>,
    /// counts / reps.
    pub empirical: BTreeMap<usize, f64>,
    pub mean: f64,
    pub variance: f64,
    pub stderr_mean: f64,
}

fn rep_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

fn run_bernoulli(n: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut z = 0usize;
    for _ in 0..n {
        if rng.gen::<f64>() * (1.0 + z as f64) < 1.0 {
            z += 1;
        }
    }
    z
}

/// One geometric wait with success probability 1/i, on {1,2,...}.
fn geometric_wait(i: u64, rng: &mut ChaCha8Rng) -> u64 {
    if i == 1 {
        // Geometric(1) is identically 1; no draw needed
        return 1;
    }
    let p = 1.0 / i as f64;
    let u: f64 = rng.gen();
    // P(tau > m) = (1-p)^m, inverted at u in [0,1)
    let g = ((1.0 - u).ln() / (1.0 - p).ln()).floor() as u64 + 1;
    g.max(1)
}

fn run_geometric(n: usize, rng: &mut ChaCha8Rng) -> usize {
    let n = n as u64;
    let mut total = 0u64;
    let mut i = 1u64;
    loop {
        total += geometric_wait(i, rng);
        if total > n {
            return (i - 1) as usize;
        }
        i += 1;
    }
}

fn run_one(cfg: &SimConfig, rep: u64) -> usize {
    let mut rng = rep_rng(cfg.seed, rep);
    match cfg.method {
        SimMethod::BernoulliScheme => run_bernoulli(cfg.n, &mut rng),
        SimMethod::GeometricWaits => run_geometric(cfg.n, &mut rng),
    }
}

/// Run all replications in parallel and merge the tallies. Merging adds
/// u64 counts, which is associative and commutative, so the summary does
/// not depend on scheduling; the statistics are derived afterwards in a
/// fixed order.
pub fn simulate(cfg: &SimConfig) -> Result<SimSummary> {
    if cfg.reps == 0 {
        return Err(Error::Domain("reps must be at least 1".into()));
    }
    let tally = (0..cfg.reps)
        .into_par_iter()
        .fold(
            || vec![0u64; cfg.n + 1],
            |mut acc, rep| {
                acc[run_one(cfg, rep)] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; cfg.n + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    let counts: BTreeMap<usize, u64> = tally
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c > 0)
        .collect();
    let reps_f = cfg.reps as f64;
    let empirical: BTreeMap<usize, f64> =
        counts.iter().map(|(&k, &c)| (k, c as f64 / reps_f)).collect();
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (&k, &c) in &counts {
        let w = c as f64 / reps_f;
        mean += k as f64 * w;
        m2 += (k * k) as f64 * w;
    }
    let variance = (m2 - mean * mean).max(0.0);
    Ok(SimSummary {
        n: cfg.n,
        method: cfg.method,
        seed: cfg.seed,
        reps: cfg.reps,
        counts,
        empirical,
        mean,
        variance,
        stderr_mean: (variance / reps_f).sqrt(),
    })
}

/// Full trajectory of one replication: states after trials 0..=n.
pub fn sample_path(n: usize, seed: u64, rep: u64, method: SimMethod) -> Vec<usize> {
    let mut rng = rep_rng(seed, rep);
    let mut path = vec![0usize; n + 1];
    match method {
        SimMethod::BernoulliScheme => {
            let mut z = 0usize;
            for m in 1..=n {
                if rng.gen::<f64>() * (1.0 + z as f64) < 1.0 {
                    z += 1;
                }
                path[m] = z;
            }
        }
        SimMethod::GeometricWaits => {
            let mut total = 0u64;
            let mut i = 1u64;
            loop {
                total += geometric_wait(i, &mut rng);
                if total > n as u64 {
                    break;
                }
                // the i-th success lands exactly on trial `total`
                for m in total as usize..=n {
                    path[m] = i as usize;
                }
                i += 1;
            }
        }
    }
    path
}

/// Expected number of trials to reach state k: sum_{i=1..k} E(tau_i)
/// = sum_{i=1..k} i = k(k+1)/2.
pub fn expected_trials(k: u64) -> Result<u64> {
    if k == 0 {
        return Err(Error::Domain("expected_trials needs k >= 1".into()));
    }
    k.checked_add(1)
        .and_then(|k1| k.checked_mul(k1))
        .map(|m| m / 2)
        .ok_or_else(|| Error::Domain(format!("expected_trials overflows u64 at k = {k}")))
}

/// Two-sample chi-square comparison of final-state tallies.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Bin count after pooling sparse states.
    pub pooled_bins: usize,
}

/// Chi-square homogeneity test between two tallies of the same horizon.
/// Adjacent states are pooled until every expected count is at least 5,
/// the usual validity rule for the chi-square approximation.
pub fn chi_square_two_sample(a: &SimSummary, b: &SimSummary) -> Result<ChiSquare> {
    if a.n != b.n {
        return Err(Error::Domain(format!(
            "cannot compare horizons {} and {}",
            a.n, b.n
        )));
    }
    let na = a.reps as f64;
    let nb = b.reps as f64;
    let total = na + nb;
    // pooled (observed_a, observed_b) bins over ascending states
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut cur = (0.0f64, 0.0f64);
    for k in 0..=a.n {
        cur.0 += a.counts.get(&k).copied().unwrap_or(0) as f64;
        cur.1 += b.counts.get(&k).copied().unwrap_or(0) as f64;
        let row = cur.0 + cur.1;
        if na * row / total >= 5.0 && nb * row / total >= 5.0 {
            bins.push(cur);
            cur = (0.0, 0.0);
        }
    }
    if cur.0 + cur.1 > 0.0 {
        // fold the sparse tail into the last full bin
        if let Some(last) = bins.last_mut() {
            last.0 += cur.0;
            last.1 += cur.1;
        } else {
            bins.push(cur);
        }
    }
    let pooled_bins = bins.len();
    if pooled_bins <= 1 {
        return Ok(ChiSquare {
            statistic: 0.0,
            df: 0,
            p_value: 1.0,
            pooled_bins,
        });
    }
    let mut statistic = 0.0;
    for (oa, ob) in &bins {
        let row = oa + ob;
        let ea = na * row / total;
        let eb = nb * row / total;
        statistic += (oa - ea).powi(2) / ea + (ob - eb).powi(2) / eb;
    }
    let df = pooled_bins - 1;
    let dist = ChiSquared::new(df as f64)
        .map_err(|e| Error::Domain(format!("chi-square with df = {df}: {e}")))?;
    Ok(ChiSquare {
        statistic,
        df,
        p_value: 1.0 - dist.cdf(statistic),
        pooled_bins,
    })
}

/// Write the summary as CSV `k,frequency,exact` (LF endings). Rows cover
/// the union of the visited states and the exact support; the exact column
/// is empty when no exact distribution is supplied. The file appears
/// atomically: the content goes to a temporary file in the same directory
/// which is then renamed over the destination.
pub fn histogram_export(
    summary: &SimSummary,
    exact: Option<&ExactDist>,
    path: &Path,
) -> Result<()> {
    let io_err = |source: std::io::Error| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut body = String::from("k,frequency,exact\n");
    let mut keys: Vec<usize> = summary.counts.keys().copied().collect();
    if let Some(d) = exact {
        keys.extend(d.support());
        keys.sort_unstable();
        keys.dedup();
    }
    for k in keys {
        let freq = summary.empirical.get(&k).copied().unwrap_or(0.0);
        match exact {
            Some(d) => body.push_str(&format!("{k},{freq},{}\n", d.prob_f64(k))),
            None => body.push_str(&format!("{k},{freq},\n")),
        }
    }
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = dir.unwrap_or_else(|| Path::new(".")).join(format!(
        ".{}.tmp.{}",
        path.file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "histogram".into()),
        std::process::id()
    ));
    let mut file = fs::File::create(&tmp).map_err(io_err)?;
    file.write_all(body.as_bytes()).map_err(io_err)?;
    file.sync_all().map_err(io_err)?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(e)
    })
}

// === tests =================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{dist_recurrence, DEFAULT_STEP_LIMIT};

    fn cfg(n: usize, reps: u64, seed: u64, method: SimMethod) -> SimConfig {
        SimConfig {
            n,
            reps,
            seed,
            method,
        }
    }

    #[test]
    fn expected_trials_matches_arithmetic_series() {
        assert_eq!(expected_trials(1).unwrap(), 1);
        assert_eq!(expected_trials(4).unwrap(), 10);
        assert_eq!(expected_trials(100).unwrap(), 5050);
        assert!(expected_trials(0).is_err());
        assert!(expected_trials(u64::MAX).is_err());
    }

    #[test]
    fn horizon_one_is_deterministic() {
        for method in [SimMethod::BernoulliScheme, SimMethod::GeometricWaits] {
            let s = simulate(&cfg(1, 100, 7, method)).unwrap();
            assert_eq!(s.counts, BTreeMap::from([(1usize, 100u64)]));
            assert_eq!(s.empirical[&1], 1.0);
            assert_eq!(s.mean, 1.0);
            assert_eq!(s.variance, 0.0);
        }
    }

    #[test]
    fn zero_reps_is_rejected() {
        assert!(simulate(&cfg(3, 0, 1, SimMethod::BernoulliScheme)).is_err());
    }

    #[test]
    fn frequencies_sum_to_one() {
        let s = simulate(&cfg(12, 50_000, 3, SimMethod::GeometricWaits)).unwrap();
        let total: f64 = s.empirical.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(s.variance >= 0.0);
    }

    #[test]
    fn both_methods_calibrate_at_three_steps() {
        let exact = dist_recurrence(3, DEFAULT_STEP_LIMIT).unwrap();
        let reps = 200_000u64;
        for method in [SimMethod::BernoulliScheme, SimMethod::GeometricWaits] {
            let s = simulate(&cfg(3, reps, 42, method)).unwrap();
            for k in 1..=3usize {
                let p = exact.prob_f64(k);
                let se = (p * (1.0 - p) / reps as f64).sqrt();
                let got = s.empirical.get(&k).copied().unwrap_or(0.0);
                assert!(
                    (got - p).abs() <= 4.0 * se,
                    "{method} k={k}: {got} vs {p} (se {se})"
                );
            }
        }
    }

    #[test]
    fn identical_configs_give_identical_summaries() {
        let c = cfg(10, 30_000, 99, SimMethod::BernoulliScheme);
        assert_eq!(simulate(&c).unwrap(), simulate(&c).unwrap());
    }

    #[test]
    fn summary_is_thread_count_independent() {
        let c = cfg(8, 20_000, 5, SimMethod::GeometricWaits);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| simulate(&c).unwrap());
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| simulate(&c).unwrap());
        assert_eq!(single, multi);
    }

    #[test]
    fn paths_are_monotone_with_unit_increments() {
        for method in [SimMethod::BernoulliScheme, SimMethod::GeometricWaits] {
            for rep in 0..200u64 {
                let path = sample_path(25, 17, rep, method);
                assert_eq!(path[0], 0);
                assert_eq!(path.len(), 26);
                for w in path.windows(2) {
                    assert!(w[1] == w[0] || w[1] == w[0] + 1, "{method} rep {rep}");
                }
                // trial 1 always succeeds
                assert_eq!(path[1], 1);
            }
        }
    }

    #[test]
    fn path_endpoint_has_the_simulated_law() {
        // the path generator and the tally generator share each stream
        for method in [SimMethod::BernoulliScheme, SimMethod::GeometricWaits] {
            let c = cfg(6, 50, 123, method);
            let s = simulate(&c).unwrap();
            let mut counts = BTreeMap::new();
            for rep in 0..50u64 {
                *counts
                    .entry(*sample_path(6, 123, rep, method).last().unwrap())
                    .or_insert(0u64) += 1;
            }
            assert_eq!(counts, s.counts);
        }
    }

    #[test]
    fn methods_agree_by_chi_square() {
        let a = simulate(&cfg(5, 20_000, 11, SimMethod::BernoulliScheme)).unwrap();
        let b = simulate(&cfg(5, 20_000, 12, SimMethod::GeometricWaits)).unwrap();
        let t = chi_square_two_sample(&a, &b).unwrap();
        assert!(t.df >= 1);
        assert!(t.p_value > 0.001, "stat {} p {}", t.statistic, t.p_value);
    }

    #[test]
    fn chi_square_rejects_mismatched_horizons() {
        let a = simulate(&cfg(3, 100, 1, SimMethod::BernoulliScheme)).unwrap();
        let b = simulate(&cfg(4, 100, 1, SimMethod::BernoulliScheme)).unwrap();
        assert!(chi_square_two_sample(&a, &b).is_err());
    }

    #[test]
    fn chi_square_detects_different_laws() {
        let a = simulate(&cfg(20, 50_000, 1, SimMethod::BernoulliScheme)).unwrap();
        let b = simulate(&cfg(20, 50_000, 2, SimMethod::BernoulliScheme)).unwrap();
        let same = chi_square_two_sample(&a, &b).unwrap();
        assert!(same.p_value > 0.001);
        // shift one tally by one state: a genuinely different law
        let mut shifted = b.clone();
        shifted.counts = b.counts.iter().map(|(&k, &c)| (k + 1, c)).collect();
        shifted.n += 1;
        let mut a_padded = a.clone();
        a_padded.n += 1;
        let diff = chi_square_two_sample(&a_padded, &shifted).unwrap();
        assert!(diff.p_value < 1e-6, "p {}", diff.p_value);
    }

    #[test]
    fn histogram_csv_has_exact_column_and_lf_endings() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("hist.csv");
        let s = simulate(&cfg(3, 10_000, 42, SimMethod::BernoulliScheme)).unwrap();
        let exact = dist_recurrence(3, DEFAULT_STEP_LIMIT).unwrap();
        histogram_export(&s, Some(&exact), &out).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(!text.contains('\r'));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,frequency,exact");
        assert_eq!(lines.len(), 4, "{text}");
        let k2 = lines.iter().find(|l| l.starts_with("2,")).unwrap();
        assert!(k2.ends_with(",0.5833333333333334"), "{k2}");
    }

    #[test]
    fn histogram_without_exact_leaves_column_empty() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("hist.csv");
        let s = simulate(&cfg(0, 10, 1, SimMethod::GeometricWaits)).unwrap();
        histogram_export(&s, None, &out).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        assert_eq!(text, "k,frequency,exact\n0,1,\n");
    }

    #[test]
    fn histogram_surfaces_io_errors_with_path() {
        let s = simulate(&cfg(1, 10, 1, SimMethod::BernoulliScheme)).unwrap();
        let bad = Path::new("/nonexistent-dir-for-sure/out.csv");
        match histogram_export(&s, None, bad) {
            Err(Error::Io { path, .. }) => assert_eq!(path, bad),
            other => panic!("expected io error, got {other:?}"),
        }
    }
}
