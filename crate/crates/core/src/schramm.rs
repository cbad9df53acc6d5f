//! Large-`n` statistics: PD(1) samples, the giant component of the
//! transposition graph, growth of `s` under the coupling, and the step
//! schedule used to grow `s` from `n^{1/3}` to order `n`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::CoupledChain;
use crate::error::{Error, Result};
use crate::experiment::{salted_rng, trial_rng, Proportion};
use crate::partition::Partition;
use crate::walk::{graph_track, TranspositionProcess};

/// Sticks below this are treated as exhausted.
const NEGLIGIBLE: f64 = 1e-16;

/// The `k` largest coordinates of a stick-breaking sample, non-increasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pd1Sample {
    pub coords: Vec<f64>,
    pub k: usize,
    /// Upper bound on every coordinate not in `coords`: the larger of the
    /// unbroken remainder and the largest dropped stick.
    pub tail_bound: f64,
}

/// Breaks sticks until the remainder is negligible or `4k` sticks are
/// drawn, and keeps the `k` largest.
pub fn pd1_sample<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Pd1Sample {
    assert!(k >= 1, "need at least one coordinate");
    let mut rest = 1.0f64;
    let mut sticks = Vec::with_capacity(4 * k);
    while sticks.len() < 4 * k && rest >= NEGLIGIBLE {
        let u: f64 = rng.random();
        sticks.push(u * rest);
        rest *= 1.0 - u;
    }
    sticks.sort_unstable_by(|a, b| b.total_cmp(a));
    let dropped = sticks.get(k).copied().unwrap_or(0.0);
    sticks.truncate(k);
    Pd1Sample {
        coords: sticks,
        k,
        tail_bound: rest.max(dropped),
    }
}

/// `G(x)`, the total of the coordinates that are at least `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GValue {
    pub value: f64,
    /// False when an omitted coordinate could reach `x`.
    pub exact: bool,
}

pub fn g_statistic(sample: &Pd1Sample, x: f64) -> Result<GValue> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidInput(format!("x = {x} must lie in (0, 1)")));
    }
    Ok(GValue {
        value: sample.coords.iter().filter(|&&c| c >= x).sum(),
        exact: x > sample.tail_bound,
    })
}

/// The positive root of `1 - z = exp(-z s)`.
pub fn z_solver(s: f64) -> Result<f64> {
    if s.is_nan() || s <= 1.0 || !s.is_finite() {
        return Err(Error::NoPositiveRoot(s));
    }
    let f = |z: f64| -z - (-z * s).exp_m1();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut best) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}

/// Per-coordinate comparison of scaled large cycles against PD(1).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pd1Comparison {
    pub n: usize,
    pub t: usize,
    pub trials: usize,
    /// KS distance for each of the top `k` coordinates.
    pub ks: Vec<f64>,
    pub walk_mean: Vec<f64>,
    pub pd1_mean: Vec<f64>,
}

const PD1_SALT: u64 = 0x5044_3100;

/// Runs the walk `t` steps from the identity and compares the `k` largest
/// cycles over `|W_t|` with `reference` PD(1) samples.
pub fn pd1_comparison(n: usize, t: usize, trials: usize, k: usize, reference: usize, seed: u64) -> Result<Pd1Comparison> {
    if n < 2 || trials == 0 || k == 0 || reference == 0 {
        return Err(Error::InvalidInput("need n >= 2 and positive trials, k, reference".into()));
    }
    if t < n {
        return Err(Error::InvalidInput(format!("t = {t} must be at least n = {n}")));
    }
    let walk: Vec<Vec<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let mut proc = TranspositionProcess::new(n);
            for _ in 0..t {
                proc.step(&mut rng);
            }
            let w = proc.graph.largest() as f64;
            let mut top: Vec<f64> = proc.perm.largest_cycles(k).iter().map(|&c| c as f64 / w).collect();
            top.resize(k, 0.0);
            top
        })
        .collect();
    let pd1: Vec<Vec<f64>> = (0..reference as u64)
        .into_par_iter()
        .map(|i| {
            let mut s = pd1_sample(&mut salted_rng(seed, PD1_SALT, i), k);
            s.coords.resize(k, 0.0);
            s.coords
        })
        .collect();
    let column = |rows: &[Vec<f64>], c: usize| rows.iter().map(|r| r[c]).collect::<Vec<f64>>();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut out = Pd1Comparison {
        n,
        t,
        trials,
        ks: Vec::with_capacity(k),
        walk_mean: Vec::with_capacity(k),
        pd1_mean: Vec::with_capacity(k),
    };
    for c in 0..k {
        let (a, b) = (column(&walk, c), column(&pd1, c));
        out.ks.push(ks_statistic(&a, &b));
        out.walk_mean.push(mean(&a));
        out.pd1_mean.push(mean(&b));
    }
    Ok(out)
}

/// Mean and standard error of `|W_t| / n` at `t = round(c n)`.
pub fn giant_fraction(n: usize, c: f64, trials: usize, seed: u64) -> (f64, f64) {
    let t = (c * n as f64).round() as usize;
    let fractions: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| *graph_track(n, t, &mut trial_rng(seed, i)).last().unwrap() as f64 / n as f64)
        .collect();
    crate::experiment::mean_stderr(&fractions)
}

/// The step schedule for growing `s` from `2^{j+1}` to `ε δ n`.
///
/// Indices run `r = j, j + 1, ...` below `K`, so `j` need not be an
/// integer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthSchedule {
    pub n: usize,
    pub j: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// `K = ceil(log2(ε δ n))`.
    pub k: i64,
    /// The indices `r` with `j <= r <= K - 1`.
    pub r: Vec<f64>,
    /// `a_r = ceil(2 δ⁻¹ 2^{-r} n (log2 n - r))`, one per index.
    pub a: Vec<u64>,
    /// `τ_r` for `r = j, j + 1, ...`, one more than `a`; starts at 0.
    pub tau: Vec<u64>,
    /// `n^{2/3} log2 n`, the order of `τ_K` when `2^{j+1} = n^{1/3}`.
    pub magnitude: f64,
}

impl GrowthSchedule {
    pub fn tau_k(&self) -> u64 {
        *self.tau.last().unwrap()
    }
}

pub fn make_schedule(n: usize, j: f64, epsilon: f64, delta: f64) -> Result<GrowthSchedule> {
    if !(epsilon > 0.0 && epsilon < 1.0 / 32.0) {
        return Err(Error::InvalidInput(format!("epsilon = {epsilon} must lie in (0, 1/32)")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidInput(format!("delta = {delta} must lie in (0, 1]")));
    }
    if !j.is_finite() || (j + 1.0).exp2() > n as f64 {
        return Err(Error::InvalidInput(format!("2^(j+1) must not exceed n = {n}")));
    }
    let nf = n as f64;
    let log_n = nf.log2();
    let k = (epsilon * delta * nf).log2().ceil() as i64;
    let mut out = GrowthSchedule {
        n,
        j,
        epsilon,
        delta,
        k,
        r: Vec::new(),
        a: Vec::new(),
        tau: vec![0],
        magnitude: nf.powf(2.0 / 3.0) * log_n,
    };
    let mut r = j;
    while r <= (k - 1) as f64 {
        let a = (2.0 / delta * (-r).exp2() * nf * (log_n - r)).ceil() as u64;
        out.r.push(r);
        out.a.push(a);
        out.tau.push(out.tau.last().unwrap() + a);
        r += 1.0;
    }
    Ok(out)
}

/// `j` with `2^{j+1} = n^{1/3}`.
pub fn rootn_j(n: usize) -> f64 {
    (n as f64).cbrt().log2() - 1.0
}

/// The worst-case start `((1^n), (2, 1^{n-2}))`.
pub fn default_start(n: usize) -> (Partition, Partition) {
    assert!(n >= 2);
    let mut y = vec![1; n - 1];
    y[0] = 2;
    (Partition::ones(n), Partition::new(y).expect("positive parts"))
}

/// Per-step means of `s(X_t, Y_t)` over independent coupled runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct STrajectory {
    pub n: usize,
    pub trials: usize,
    pub mean_s: Vec<f64>,
    pub stderr_s: Vec<f64>,
    pub meet_fraction: Vec<f64>,
}

#[derive(Clone)]
struct Sums {
    s2: Vec<u64>,
    s2_sq: Vec<u128>,
    met: Vec<u64>,
}

impl Sums {
    fn new(len: usize) -> Self {
        Sums {
            s2: vec![0; len],
            s2_sq: vec![0; len],
            met: vec![0; len],
        }
    }

    fn merge(mut self, other: Sums) -> Sums {
        for i in 0..self.s2.len() {
            self.s2[i] += other.s2[i];
            self.s2_sq[i] += other.s2_sq[i];
            self.met[i] += other.met[i];
        }
        self
    }
}

/// Runs `trials` coupled chains for `t_max` steps from `(x0, y0)`. Sums are
/// integers (of `2s`), so the result does not depend on scheduling.
pub fn expected_s_trajectory(
    x0: &Partition,
    y0: &Partition,
    t_max: usize,
    trials: usize,
    seed: u64,
) -> Result<STrajectory> {
    let start = CoupledChain::new(x0, y0)?;
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be positive".into()));
    }
    let len = t_max + 1;
    let sums = (0..trials as u64)
        .into_par_iter()
        .fold(
            || Sums::new(len),
            |mut acc, i| {
                let mut rng = trial_rng(seed, i);
                let mut chain = start.clone();
                for t in 0..len {
                    if t > 0 {
                        chain.step(&mut rng);
                    }
                    let s2 = chain.s_twice();
                    acc.s2[t] += s2;
                    acc.s2_sq[t] += (s2 as u128) * (s2 as u128);
                    acc.met[t] += chain.is_met() as u64;
                }
                acc
            },
        )
        .reduce(|| Sums::new(len), Sums::merge);
    let nt = trials as f64;
    let mut out = STrajectory {
        n: start.n(),
        trials,
        mean_s: Vec::with_capacity(len),
        stderr_s: Vec::with_capacity(len),
        meet_fraction: Vec::with_capacity(len),
    };
    for t in 0..len {
        let sum = sums.s2[t] as f64 / 2.0;
        let mean = sum / nt;
        let var = if trials > 1 {
            // Integer variance numerator of 2s, exact before the division.
            let num = trials as u128 * sums.s2_sq[t] - (sums.s2[t] as u128).pow(2);
            num as f64 / 4.0 / (nt * (nt - 1.0))
        } else {
            f64::NAN
        };
        out.mean_s.push(mean);
        out.stderr_s.push((var / nt).sqrt());
        out.meet_fraction.push(sums.met[t] as f64 / nt);
    }
    Ok(out)
}

/// Whether a coupled state has `s >= x` and `V(x) >= mass` on X.
fn in_growth_event(chain: &CoupledChain, x: f64, mass: f64) -> bool {
    chain.stats().s_f64() >= x && chain.x_mass_at_least(x) as f64 >= mass
}

/// `P{s(X_t, Y_t) >= n^{1/3}, V_t(n^{1/3}) >= n/2}` from the default start,
/// with a 95% Wilson interval. The threshold `n^{1/3}` is not rounded.
pub fn rootn_check(n: usize, t: usize, trials: usize, seed: u64) -> Result<Proportion> {
    if n < 2 || trials == 0 {
        return Err(Error::InvalidInput("need n >= 2 and trials > 0".into()));
    }
    let (x0, y0) = default_start(n);
    let start = CoupledChain::new(&x0, &y0)?;
    let thr = (n as f64).cbrt();
    let hits: Vec<bool> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let mut chain = start.clone();
            for _ in 0..t {
                chain.step(&mut rng);
            }
            in_growth_event(&chain, thr, n as f64 / 2.0)
        })
        .collect();
    Ok(Proportion::wilson(hits.iter().filter(|&&h| h).count(), trials, 1.96))
}

/// `9n`, the time at which the `n^{1/3}` event is checked.
pub fn rootn_time(n: usize) -> usize {
    9 * n
}

/// Outcome of [`sbig_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SbigEstimate {
    pub schedule: GrowthSchedule,
    /// Fraction of accepted starts with `s < ε δ n` after `τ_K` more steps.
    pub failure: Proportion,
    /// Start attempts made, including rejected ones.
    pub attempts: usize,
    /// Trials that found no accepted start within the attempt cap.
    pub abandoned: usize,
    /// `δ⁻¹ ε |ln(ε δ)|`, the shape the failure rate is compared against.
    pub shape: f64,
}

/// Start attempts per trial before giving up.
pub const SBIG_MAX_ATTEMPTS: usize = 64;

/// Estimates `P{s(X_{τ_K}, Y_{τ_K}) < ε δ n}` from starts satisfying
/// `s >= 2^{j+1}` and `V(2^{j+1}) >= δ n`, obtained by running the coupling
/// `9n` steps from the default start and rejecting the rest.
pub fn sbig_check(n: usize, j: f64, epsilon: f64, delta: f64, trials: usize, seed: u64) -> Result<SbigEstimate> {
    let schedule = make_schedule(n, j, epsilon, delta)?;
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be positive".into()));
    }
    let (x0, y0) = default_start(n);
    let start = CoupledChain::new(&x0, &y0)?;
    let thr = (j + 1.0).exp2();
    let target = epsilon * delta * n as f64;
    let run = schedule.tau_k();
    let burn = rootn_time(n);
    // (accepted, failed, attempts)
    let results: Vec<(bool, bool, usize)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            for attempt in 1..=SBIG_MAX_ATTEMPTS {
                let mut chain = start.clone();
                for _ in 0..burn {
                    chain.step(&mut rng);
                }
                if !in_growth_event(&chain, thr, delta * n as f64) {
                    continue;
                }
                for _ in 0..run {
                    chain.step(&mut rng);
                }
                return (true, chain.stats().s_f64() < target, attempt);
            }
            (false, false, SBIG_MAX_ATTEMPTS)
        })
        .collect();
    let accepted = results.iter().filter(|r| r.0).count();
    if accepted == 0 {
        return Err(Error::InvalidInput("no start satisfied the precondition".into()));
    }
    Ok(SbigEstimate {
        schedule,
        failure: Proportion::wilson(results.iter().filter(|r| r.1).count(), accepted, 1.96),
        attempts: results.iter().map(|r| r.2).sum(),
        abandoned: trials - accepted,
        shape: epsilon / delta * (epsilon * delta).ln().abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::trial_rng;
    use proptest::prelude::*;

    #[test]
    fn pd1_samples_are_sorted_sub_stochastic() {
        let mut rng = trial_rng(1, 0);
        for k in [1, 3, 10, 40] {
            for _ in 0..2_000 {
                let s = pd1_sample(&mut rng, k);
                assert!(s.coords.len() <= k);
                assert!(s.coords.windows(2).all(|w| w[0] >= w[1]));
                assert!(s.coords.iter().all(|&c| c > 0.0));
                assert!(s.coords.iter().sum::<f64>() <= 1.0 + 1e-12);
                assert!(s.tail_bound >= 0.0 && s.tail_bound <= 1.0 - s.coords.iter().sum::<f64>() + 1e-12);
            }
        }
    }

    #[test]
    fn pd1_first_stick_and_g_identity() {
        // The largest coordinate dominates the first stick, which is uniform.
        let mut rng = trial_rng(2, 0);
        let samples = 100_000;
        let mut first = 0.0;
        let mut g = 0.0;
        for _ in 0..samples {
            let u: f64 = rand::Rng::random(&mut rng.clone());
            first += u;
            let s = pd1_sample(&mut rng, 20);
            g += g_statistic(&s, 0.25).unwrap().value;
        }
        assert!((first / samples as f64 - 0.5).abs() < 0.005);
        assert!((g / samples as f64 - 0.75).abs() < 0.01);
    }

    #[test]
    fn g_statistic_examples() {
        let s = Pd1Sample {
            coords: vec![0.5, 0.3, 0.2],
            k: 3,
            tail_bound: 0.0,
        };
        let g = g_statistic(&s, 0.25).unwrap();
        assert!((g.value - 0.8).abs() < 1e-15 && g.exact);
        assert_eq!(g_statistic(&s, 0.6).unwrap().value, 0.0);
        assert!(g_statistic(&s, 1.0).is_err());
        let coarse = Pd1Sample {
            coords: vec![0.5],
            k: 1,
            tail_bound: 0.3,
        };
        assert!(!g_statistic(&coarse, 0.1).unwrap().exact);
    }

    #[test]
    fn z_solver_examples() {
        assert!((z_solver(2.0).unwrap() - 0.7968).abs() < 1e-4);
        let z4 = z_solver(4.0).unwrap();
        assert!(z4 > 0.97 && z4 < 1.0);
        assert!(z_solver(1.0 + 1e-6).unwrap() < 1e-5);
        assert!(matches!(z_solver(1.0), Err(Error::NoPositiveRoot(_))));
        assert!(z_solver(0.5).is_err());
    }

    proptest! {
        #[test]
        fn z_solver_residual(s in 1.0001f64..50.0) {
            let z = z_solver(s).unwrap();
            prop_assert!(z > 0.0 && z <= 1.0);
            prop_assert!((1.0 - z - (-z * s).exp()).abs() <= 1e-12);
        }

        #[test]
        fn schedule_invariants(
            log_n in 6.0f64..24.0,
            j_frac in 0.0f64..1.0,
            eps in 0.001f64..0.031,
            delta in 0.05f64..1.0,
        ) {
            let n = log_n.exp2() as usize;
            let j = j_frac * ((n as f64).log2() - 1.0);
            let s = make_schedule(n, j, eps, delta).unwrap();
            let nf = n as f64;
            prop_assert_eq!(s.k, (eps * delta * nf).log2().ceil() as i64);
            prop_assert_eq!(s.tau[0], 0);
            prop_assert_eq!(s.tau.len(), s.a.len() + 1);
            for (i, (&r, &a)) in s.r.iter().zip(&s.a).enumerate() {
                prop_assert_eq!(a, (2.0 / delta * (-r).exp2() * nf * (nf.log2() - r)).ceil() as u64);
                prop_assert!(r <= (s.k - 1) as f64);
                prop_assert!(s.tau[i + 1] > s.tau[i]);
            }
        }
    }

    #[test]
    fn schedule_examples() {
        let n = 1 << 20;
        let s = make_schedule(n, 3.0, 1.0 / 64.0, 0.5).unwrap();
        assert_eq!(s.k, 13);
        assert_eq!(s.tau[0], 0);
        assert!(make_schedule(n, 3.0, 1.0 / 16.0, 0.5).is_err());
        assert!(make_schedule(n, 3.0, 1.0 / 64.0, 0.0).is_err());
        assert!(make_schedule(100, 6.0, 1.0 / 64.0, 0.5).is_err());
    }

    #[test]
    fn ks_statistic_basics() {
        assert_eq!(ks_statistic(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_statistic(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert!((ks_statistic(&[1.0, 3.0], &[2.0, 4.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn trajectory_starts_at_one_and_stays_in_range() {
        let n = 60;
        let (x0, y0) = default_start(n);
        let tr = expected_s_trajectory(&x0, &y0, 400, 200, 4).unwrap();
        assert_eq!(tr.mean_s[0], 1.0);
        assert_eq!(tr.stderr_s[0], 0.0);
        assert!(tr.mean_s.iter().all(|&m| (0.0..=n as f64 / 2.0).contains(&m)));
        assert!(tr.meet_fraction.windows(2).all(|w| w[0] <= w[1]));
        let again = expected_s_trajectory(&x0, &y0, 400, 200, 4).unwrap();
        assert_eq!(tr, again);
    }

    #[test]
    fn giant_fraction_small() {
        let (mean, _) = giant_fraction(20_000, 1.0, 10, 3);
        assert!((mean - z_solver(2.0).unwrap()).abs() < 0.03);
    }

    #[test]
    fn rootn_and_sbig_are_probabilities() {
        let p = rootn_check(1000, rootn_time(1000), 40, 6).unwrap();
        assert!(p.lower <= p.estimate && p.estimate <= p.upper);
        let s = sbig_check(1000, rootn_j(1000), 1.0 / 64.0, 0.5, 20, 6).unwrap();
        assert!((0.0..=1.0).contains(&s.failure.estimate));
        assert!(s.attempts >= 20);
    }

    #[test]
    fn pd1_comparison_is_deterministic() {
        let a = pd1_comparison(500, 500, 20, 2, 200, 9).unwrap();
        let b = pd1_comparison(500, 500, 20, 2, 200, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.ks.iter().all(|&d| (0.0..=1.0).contains(&d)));
        assert!(pd1_comparison(500, 100, 20, 2, 200, 9).is_err());
    }
}
