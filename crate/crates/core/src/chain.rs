//! The split-merge chain: exact kernel, exact distance to stationarity for
//! small `n`, and samplers for large `n`.
//!
//! Every one-step probability of the chain is a multiple of `1/n²`, so the
//! kernel is stored as integer weights over the common denominator `n²`.
//! A move is driven by an ordered pair of card positions `(R, L)`: if both
//! land in the same part at cyclic offset `d`, that part splits into
//! `{d, a - d}` (or the walk stays when `d = 0`); otherwise the two parts
//! merge.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;

use crate::bag::PartBag;
use crate::error::{guard, Error, Result};
use crate::experiment::trial_rng;
use crate::partition::{partitions_of, perm_count, Partition};

/// State-count guard for [`build_matrix`].
pub const MAX_MATRIX_N: usize = 30;
/// Guard for rational-mode distance computations.
pub const MAX_EXACT_N: usize = 12;

/// A one-step law with probabilities `weight / denom`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseDistribution {
    weights: BTreeMap<Partition, u64>,
    denom: u64,
}

impl SparseDistribution {
    pub fn new(weights: BTreeMap<Partition, u64>, denom: u64) -> Self {
        SparseDistribution { weights, denom }
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    pub fn weight(&self, p: &Partition) -> u64 {
        self.weights.get(p).copied().unwrap_or(0)
    }

    pub fn prob(&self, p: &Partition) -> Ratio<u64> {
        Ratio::new(self.weight(p), self.denom)
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.values().sum()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Partition, u64)> {
        self.weights.iter().map(|(p, &w)| (p, w))
    }

    pub fn support(&self) -> impl Iterator<Item = &Partition> {
        self.weights.keys()
    }
}

/// Exact one-step law of the chain from `p`, over denominator `n²`.
pub fn transition_distribution(p: &Partition) -> SparseDistribution {
    let n = p.n() as u64;
    let parts = p.parts();
    let mut weights = BTreeMap::new();
    let mut add = |q: Partition, w: u64| *weights.entry(q).or_insert(0) += w;
    add(p.clone(), n);
    for (i, &a) in parts.iter().enumerate() {
        for r in 1..=a / 2 {
            let w = if 2 * r == a { a } else { 2 * a };
            add(p.split(i, r), w as u64);
        }
        for (j, &b) in parts.iter().enumerate().skip(i + 1) {
            add(p.merge(i, j), 2 * (a * b) as u64);
        }
    }
    SparseDistribution::new(weights, n * n)
}

/// The move selected by card positions `r_pos`, `l_pos` in `0..n`, reading
/// positions along the parts of `p` in their stored order.
pub fn move_from_positions(p: &Partition, r_pos: usize, l_pos: usize) -> Partition {
    let locate = |pos: usize| {
        let mut rest = pos;
        for (i, &a) in p.parts().iter().enumerate() {
            if rest < a {
                return (i, rest);
            }
            rest -= a;
        }
        panic!("position {pos} out of range for {p}");
    };
    let (i, oi) = locate(r_pos);
    let (j, oj) = locate(l_pos);
    if i != j {
        return p.merge(i, j);
    }
    let a = p.parts()[i];
    let d = (oj + a - oi) % a;
    if d == 0 {
        p.clone()
    } else {
        p.split(i, d)
    }
}

/// One step of the chain from `p`.
pub fn step<R: Rng + ?Sized>(p: &Partition, rng: &mut R) -> Partition {
    let n = p.n();
    let r = rng.random_range(0..n);
    let l = rng.random_range(0..n);
    move_from_positions(p, r, l)
}

/// The chain on a size-class multiset, for large `n`.
#[derive(Debug, Clone)]
pub struct PartitionWalk {
    bag: PartBag,
}

impl PartitionWalk {
    pub fn new(start: &Partition) -> Self {
        PartitionWalk {
            bag: PartBag::from_partition(start),
        }
    }

    pub fn n(&self) -> usize {
        self.bag.mass()
    }

    pub fn bag(&self) -> &PartBag {
        &self.bag
    }

    pub fn partition(&self) -> Partition {
        self.bag.to_partition().expect("walk is never empty")
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n = self.bag.mass();
        let r_pos = rng.random_range(0..n);
        let l_pos = rng.random_range(0..n);
        apply_positions(&mut self.bag, r_pos, l_pos);
    }
}

/// Applies the move selected by two positions to a bag in place.
pub(crate) fn apply_positions(bag: &mut PartBag, r_pos: usize, l_pos: usize) {
    let r = bag.locate(r_pos);
    let l = bag.locate(l_pos);
    if r.size == l.size && r.index == l.index {
        let d = (l.offset + r.size - r.offset) % r.size;
        if d != 0 {
            bag.remove(r.size);
            bag.insert(d);
            bag.insert(r.size - d);
        }
    } else {
        bag.remove(r.size);
        bag.remove(l.size);
        bag.insert(r.size + l.size);
    }
}

/// The full kernel on partitions of `n` in reverse lexicographic order.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    n: usize,
    states: Vec<Partition>,
    index: HashMap<Partition, usize>,
    rows: Vec<Vec<(usize, u64)>>,
}

impl TransitionMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn states(&self) -> &[Partition] {
        &self.states
    }

    pub fn index_of(&self, p: &Partition) -> Option<usize> {
        self.index.get(p).copied()
    }

    /// Row `i` as `(column, weight)` pairs over [`Self::denom`].
    pub fn row(&self, i: usize) -> &[(usize, u64)] {
        &self.rows[i]
    }

    pub fn denom(&self) -> u64 {
        (self.n * self.n) as u64
    }

    /// One step of an exact integer-weighted vector: `out = v · W` where
    /// `W = n² P`.
    fn push_forward_big(&self, v: &[BigInt]) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); self.states.len()];
        for (i, vi) in v.iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            for &(j, w) in &self.rows[i] {
                out[j] += vi * BigInt::from(w);
            }
        }
        out
    }

    pub fn push_forward(&self, v: &[f64]) -> Vec<f64> {
        let denom = self.denom() as f64;
        let mut out = vec![0.0; self.states.len()];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for &(j, w) in &self.rows[i] {
                out[j] += vi * w as f64 / denom;
            }
        }
        out
    }
}

pub fn build_matrix(n: usize) -> Result<TransitionMatrix> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    guard("n", n, MAX_MATRIX_N)?;
    let states = partitions_of(n);
    let index: HashMap<Partition, usize> =
        states.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let rows = states
        .iter()
        .map(|p| {
            transition_distribution(p)
                .iter()
                .map(|(q, w)| (index[q], w))
                .collect()
        })
        .collect();
    Ok(TransitionMatrix {
        n,
        states,
        index,
        rows,
    })
}

fn factorial(n: usize) -> BigUint {
    (1..=n).map(BigUint::from).product()
}

/// Exact `d(t)` for `t = 0..=t_max`, started from `(1, ..., 1)`.
pub fn exact_d_curve(n: usize, t_max: usize) -> Result<Vec<BigRational>> {
    guard("n", n, MAX_EXACT_N)?;
    let matrix = build_matrix(n)?;
    let nfact = BigInt::from(factorial(n));
    let counts: Vec<BigInt> = matrix.states.iter().map(|p| BigInt::from(perm_count(p))).collect();
    let start = matrix.index[&Partition::ones(n)];
    let mut v = vec![BigInt::zero(); matrix.states.len()];
    v[start] = BigInt::from(1);
    let n2 = BigInt::from(matrix.denom());
    let mut scale = BigInt::from(1);
    let mut out = Vec::with_capacity(t_max + 1);
    for t in 0..=t_max {
        if t > 0 {
            v = matrix.push_forward_big(&v);
            scale *= &n2;
        }
        // P^t(σ0, σ) = v / n^{2t}; π(σ) = count / n!.
        let l1: BigInt = v
            .iter()
            .zip(&counts)
            .map(|(vi, ci)| (vi * &nfact - ci * &scale).abs())
            .sum();
        out.push(BigRational::new(l1, BigInt::from(2) * &nfact * &scale));
    }
    Ok(out)
}

/// `‖P^t((1,...,1), ·) − π‖_TV`, exactly.
pub fn exact_d(n: usize, t: usize) -> Result<BigRational> {
    Ok(exact_d_curve(n, t)?.pop().unwrap())
}

/// Double-precision `d(t)` curve for `n` up to [`MAX_MATRIX_N`].
pub fn float_d_curve(n: usize, t_max: usize) -> Result<Vec<f64>> {
    let matrix = build_matrix(n)?;
    let nfact: f64 = (1..=n).map(|k| k as f64).product();
    let pi: Vec<f64> = matrix
        .states
        .iter()
        .map(|p| perm_count(p).to_f64().unwrap() / nfact)
        .collect();
    let mut v = vec![0.0; matrix.states.len()];
    v[matrix.index[&Partition::ones(n)]] = 1.0;
    let mut out = Vec::with_capacity(t_max + 1);
    for t in 0..=t_max {
        if t > 0 {
            v = matrix.push_forward(&v);
        }
        out.push(0.5 * v.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum::<f64>());
    }
    Ok(out)
}

/// Smallest `t` with `d(t) <= eps`. Each scanned value is checked to be no
/// larger than its predecessor.
pub fn mixing_time_exact(n: usize, eps: &BigRational) -> Result<usize> {
    guard("n", n, MAX_EXACT_N)?;
    let matrix = build_matrix(n)?;
    let nfact = BigInt::from(factorial(n));
    let counts: Vec<BigInt> = matrix.states.iter().map(|p| BigInt::from(perm_count(p))).collect();
    let mut v = vec![BigInt::zero(); matrix.states.len()];
    v[matrix.index[&Partition::ones(n)]] = BigInt::from(1);
    let n2 = BigInt::from(matrix.denom());
    let mut scale = BigInt::from(1);
    let mut prev: Option<BigRational> = None;
    for t in 0.. {
        if t > 0 {
            v = matrix.push_forward_big(&v);
            scale *= &n2;
        }
        let l1: BigInt = v
            .iter()
            .zip(&counts)
            .map(|(vi, ci)| (vi * &nfact - ci * &scale).abs())
            .sum();
        let d = BigRational::new(l1, BigInt::from(2) * &nfact * &scale);
        if let Some(p) = &prev {
            if d > *p {
                return Err(Error::NonMonotone(t));
            }
        }
        if d <= *eps {
            return Ok(t);
        }
        prev = Some(d);
    }
    unreachable!()
}

/// Law of the number of cycles of a uniform permutation of `n`, indexed by
/// cycle count.
pub fn cycle_count_law(n: usize) -> Vec<f64> {
    let mut p = vec![0.0; n + 1];
    p[1] = 1.0;
    for m in 2..=n {
        let mf = m as f64;
        for k in (1..=m).rev() {
            p[k] = p[k] * (mf - 1.0) / mf + p[k - 1] / mf;
        }
    }
    p
}

/// Monte Carlo estimate of the total variation distance between the number
/// of parts of `X_t` (started at `(1, ..., 1)`) and its stationary law.
///
/// The number of parts is a function of the state, so this is a lower
/// bound on `d(t)` up to sampling noise. Trials are split into `batches`
/// equal groups; the estimate is the mean of the per-batch distances and
/// the standard error is taken across batches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvEstimate {
    pub value: f64,
    pub stderr: f64,
}

pub fn estimate_d_cycle_count(
    n: usize,
    t: usize,
    trials: usize,
    batches: usize,
    seed: u64,
) -> TvEstimate {
    assert!(batches >= 2 && trials >= batches);
    let law = cycle_count_law(n);
    let counts: Vec<usize> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial as u64);
            let mut walk = PartitionWalk::new(&Partition::ones(n));
            for _ in 0..t {
                walk.step(&mut rng);
            }
            walk.bag().num_parts()
        })
        .collect();
    let per_batch = trials / batches;
    let tvs: Vec<f64> = counts
        .chunks_exact(per_batch)
        .take(batches)
        .map(|chunk| {
            let mut hist = vec![0.0; n + 1];
            for &k in chunk {
                hist[k] += 1.0 / chunk.len() as f64;
            }
            0.5 * hist.iter().zip(&law).map(|(a, b)| (a - b).abs()).sum::<f64>()
        })
        .collect();
    let mean = tvs.iter().sum::<f64>() / batches as f64;
    let var = tvs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    TvEstimate {
        value: mean,
        stderr: (var / batches as f64).sqrt(),
    }
}
