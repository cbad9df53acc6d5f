//! A one-step coupling of the split-merge chain for neighbor pairs.
//!
//! Write the finer partition as `σ = A ∪ {b, c}` and the coarser as
//! `τ = A ∪ {b + c}` with `b <= c`. The coupling
//!
//! 1. mirrors every move that touches only parts of `A`;
//! 2. pairs a merge of `b` (or `c`) with `a_i` with the merge of `b + c`
//!    with `a_i`;
//! 3. pairs a split of `b` at `r <= b/2` (likewise `c`) with the split of
//!    `b + c` into `{r, b + c - r}`;
//! 4. pairs `σ` staying put with `τ` splitting into `{b, c}` for as much
//!    mass as that split has left over, capped at `1/n`, and the rest of
//!    the stay mass with `τ` staying;
//! 5. pairs the merge of `b` and `c` with whatever `τ` has left: first the
//!    leftover stay mass, then leftover splits in increasing `r`.
//!
//! Weights are integers over `n²`. The same construction is available as a
//! deterministic map from the card positions `(R, L)` that drive `σ`'s move
//! ([`CoupledChain::apply_positions`]), which is what the large-`n`
//! sampler uses.

use std::collections::BTreeMap;

use num_rational::Ratio;
use rand::Rng;

use crate::bag::PartBag;
use crate::chain::{apply_positions, SparseDistribution};
use crate::error::{Error, Result};
use crate::partition::{neighbor_split, partitions_of, neighbors, PairStats, Partition};

/// Weight of splitting a part of size `a` into `{r, a - r}`, over `n²`.
fn split_weight(a: usize, r: usize) -> u64 {
    if r == 0 || 2 * r > a {
        0
    } else if 2 * r == a {
        a as u64
    } else {
        2 * a as u64
    }
}

/// Mass of the coarse split `{r, b + c - r}` not used by clause 3.
fn split_residual(b: usize, c: usize, r: usize) -> u64 {
    split_weight(b + c, r) - split_weight(b, r) - split_weight(c, r)
}

/// Residual mass `p` (over `n²`) of the coarse split into `{b, c}`.
pub fn stay_split_residual(b: usize, c: usize) -> u64 {
    split_residual(b.min(c), b.max(c), b.min(c))
}

/// Mass (over `n²`) that the stay clause sends to the diagonal:
/// `min(p, n)`. The merge clause sends the same amount.
pub fn stay_meet_weight(n: usize, b: usize, c: usize) -> u64 {
    stay_split_residual(b, c).min(n as u64)
}

/// Piecewise-constant segments `(lo, hi, weight)` of the residual coarse
/// splits left for clause 5, covering `r` in `1..=(b + c) / 2`.
fn residual_segments(n: usize, b: usize, c: usize) -> Vec<(usize, usize, u64)> {
    let half = (b + c) / 2;
    let mut cuts = vec![1, half + 1];
    for x in [b / 2, c / 2, b, half] {
        cuts.push(x);
        cuts.push(x + 1);
    }
    cuts.retain(|&x| (1..=half + 1).contains(&x));
    cuts.sort_unstable();
    cuts.dedup();
    let taken = stay_meet_weight(n, b, c);
    cuts.windows(2)
        .map(|w| {
            let mut v = split_residual(b, c, w[0]);
            if w[0] == b {
                v -= taken;
            }
            (w[0], w[1], v)
        })
        .collect()
}

/// An exact joint one-step law over pairs, with weights over `n²`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointDistribution {
    entries: BTreeMap<(Partition, Partition), u64>,
    denom: u64,
}

impl JointDistribution {
    pub fn denom(&self) -> u64 {
        self.denom
    }

    pub fn weight(&self, x: &Partition, y: &Partition) -> u64 {
        self.entries.get(&(x.clone(), y.clone())).copied().unwrap_or(0)
    }

    pub fn prob(&self, x: &Partition, y: &Partition) -> Ratio<u64> {
        Ratio::new(self.weight(x, y), self.denom)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_weight(&self) -> u64 {
        self.entries.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Partition, &Partition, u64)> {
        self.entries.iter().map(|((x, y), &w)| (x, y, w))
    }

    fn marginal(&self, pick: impl Fn(&(Partition, Partition)) -> &Partition) -> SparseDistribution {
        let mut out = BTreeMap::new();
        for (k, &w) in &self.entries {
            *out.entry(pick(k).clone()).or_insert(0) += w;
        }
        SparseDistribution::new(out, self.denom)
    }

    pub fn marginal_x(&self) -> SparseDistribution {
        self.marginal(|k| &k.0)
    }

    pub fn marginal_y(&self) -> SparseDistribution {
        self.marginal(|k| &k.1)
    }

    /// Weight on pairs with equal coordinates.
    pub fn diagonal_weight(&self) -> u64 {
        self.entries.iter().filter(|((x, y), _)| x == y).map(|(_, &w)| w).sum()
    }

    pub fn transposed(&self) -> JointDistribution {
        JointDistribution {
            entries: self.entries.iter().map(|((x, y), &w)| ((y.clone(), x.clone()), w)).collect(),
            denom: self.denom,
        }
    }
}

/// `A ∪ extra` as a partition.
fn with_parts(shared: &[usize], extra: &[usize]) -> Partition {
    let mut v = shared.to_vec();
    v.extend_from_slice(extra);
    Partition::new(v).expect("parts are positive")
}

/// Removes one `b` and one `c` from the parts of `fine`.
fn shared_parts(fine: &Partition, b: usize, c: usize) -> Vec<usize> {
    let mut shared = fine.parts().to_vec();
    for x in [b, c] {
        let i = shared.iter().position(|&a| a == x).expect("part present");
        shared.remove(i);
    }
    shared
}

/// The exact coupled one-step law from a neighbor pair `(x, y)`. A pair of
/// equal partitions moves together.
pub fn coupled_joint(x: &Partition, y: &Partition) -> Result<JointDistribution> {
    if x.n() != y.n() {
        return Err(Error::InvalidInput(format!("{x} and {y} partition different integers")));
    }
    let n = x.n();
    let denom = (n * n) as u64;
    if x == y {
        let entries = crate::chain::transition_distribution(x)
            .iter()
            .map(|(q, w)| ((q.clone(), q.clone()), w))
            .collect();
        return Ok(JointDistribution { entries, denom });
    }
    let (b, c) = neighbor_split(x, y).ok_or_else(|| Error::NotNeighbors(x.to_string(), y.to_string()))?;
    let fine_is_x = x.len() > y.len();
    let fine = if fine_is_x { x } else { y };
    let a = shared_parts(fine, b, c);

    let mut entries: BTreeMap<(Partition, Partition), u64> = BTreeMap::new();
    let mut add = |sigma: Partition, tau: Partition, w: u64| {
        if w > 0 {
            let key = if fine_is_x { (sigma, tau) } else { (tau, sigma) };
            *entries.entry(key).or_insert(0) += w;
        }
    };

    // Moves among the shared parts.
    for (i, &ai) in a.iter().enumerate() {
        for r in 1..=ai / 2 {
            let mut moved = a.clone();
            moved[i] = ai - r;
            moved.push(r);
            add(with_parts(&moved, &[b, c]), with_parts(&moved, &[b + c]), split_weight(ai, r));
        }
        for (j, &aj) in a.iter().enumerate().skip(i + 1) {
            let mut moved = a.clone();
            moved[i] = ai + aj;
            moved.remove(j);
            add(with_parts(&moved, &[b, c]), with_parts(&moved, &[b + c]), 2 * (ai * aj) as u64);
        }
    }
    // Merging b or c with a shared part.
    for (i, &ai) in a.iter().enumerate() {
        let mut rest = a.clone();
        rest.remove(i);
        let tau = with_parts(&rest, &[b + c + ai]);
        add(with_parts(&rest, &[b + ai, c]), tau.clone(), 2 * (b * ai) as u64);
        add(with_parts(&rest, &[b, c + ai]), tau, 2 * (c * ai) as u64);
    }
    // Splitting b or c, paired with the same piece cut from b + c.
    for r in 1..=b / 2 {
        add(with_parts(&a, &[r, b - r, c]), with_parts(&a, &[r, b + c - r]), split_weight(b, r));
    }
    for r in 1..=c / 2 {
        add(with_parts(&a, &[b, r, c - r]), with_parts(&a, &[r, b + c - r]), split_weight(c, r));
    }
    // Stay against the leftover {b, c} split.
    let sigma = with_parts(&a, &[b, c]);
    let tau = with_parts(&a, &[b + c]);
    let meet = stay_meet_weight(n, b, c);
    add(sigma.clone(), sigma.clone(), meet);
    add(sigma.clone(), tau.clone(), n as u64 - meet);
    // Merge b, c against everything the coarse side has left.
    add(tau.clone(), tau.clone(), meet);
    let mut merge_left = 2 * (b * c) as u64 - meet;
    for r in 1..=(b + c) / 2 {
        let mut left = split_residual(b, c, r);
        if r == b {
            left -= meet;
        }
        let w = left.min(merge_left);
        add(tau.clone(), with_parts(&a, &[r, b + c - r]), w);
        merge_left -= w;
    }
    debug_assert_eq!(merge_left, 0);
    Ok(JointDistribution { entries, denom })
}

/// Probability that the coupled pair coincides after one step.
pub fn meet_probability(x: &Partition, y: &Partition) -> Result<Ratio<u64>> {
    let joint = coupled_joint(x, y)?;
    Ok(Ratio::new(joint.diagonal_weight(), joint.denom()))
}

/// Coordinates that differ in one merge: fine side `A ∪ {b, c}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Apart {
    b: usize,
    c: usize,
    fine_is_x: bool,
}

impl Apart {
    fn new(p: usize, q: usize, fine_is_x: bool) -> Self {
        Apart {
            b: p.min(q),
            c: p.max(q),
            fine_is_x,
        }
    }
}

/// The coupled pair held as shared parts plus the differing pieces, so a
/// step costs `O(log n)`.
#[derive(Debug, Clone)]
pub struct CoupledChain {
    shared: PartBag,
    apart: Option<Apart>,
}

impl CoupledChain {
    pub fn new(x: &Partition, y: &Partition) -> Result<Self> {
        if x.n() != y.n() {
            return Err(Error::InvalidInput(format!("{x} and {y} partition different integers")));
        }
        if x == y {
            return Ok(CoupledChain {
                shared: PartBag::from_partition(x),
                apart: None,
            });
        }
        let (b, c) = neighbor_split(x, y).ok_or_else(|| Error::NotNeighbors(x.to_string(), y.to_string()))?;
        let fine_is_x = x.len() > y.len();
        let fine = if fine_is_x { x } else { y };
        Ok(CoupledChain {
            shared: PartBag::from_parts(x.n(), &shared_parts(fine, b, c)),
            apart: Some(Apart::new(b, c, fine_is_x)),
        })
    }

    pub fn n(&self) -> usize {
        self.shared.mass() + self.apart.map_or(0, |d| d.b + d.c)
    }

    pub fn is_met(&self) -> bool {
        self.apart.is_none()
    }

    pub fn stats(&self) -> PairStats {
        match self.apart {
            None => PairStats::for_met(self.n()),
            Some(d) => PairStats::for_split(d.b, d.c),
        }
    }

    /// `2 s(X, Y)` as an integer.
    pub fn s_twice(&self) -> u64 {
        match self.apart {
            None => self.n() as u64,
            Some(d) => 2 * d.b as u64,
        }
    }

    fn side(&self, fine: bool) -> Partition {
        let mut parts = self.shared.parts_desc();
        match self.apart {
            None => {}
            Some(d) if fine => parts.extend([d.b, d.c]),
            Some(d) => parts.push(d.b + d.c),
        }
        Partition::new(parts).expect("chain is never empty")
    }

    pub fn x(&self) -> Partition {
        self.side(self.apart.is_none_or(|d| d.fine_is_x))
    }

    pub fn y(&self) -> Partition {
        self.side(self.apart.is_none_or(|d| !d.fine_is_x))
    }

    /// `V(x)` of the X coordinate: total size of its parts `>= x`.
    pub fn x_mass_at_least(&self, x: f64) -> usize {
        let own = match self.apart {
            None => 0,
            Some(d) if d.fine_is_x => [d.b, d.c].iter().filter(|&&a| a as f64 >= x).sum(),
            Some(d) if (d.b + d.c) as f64 >= x => d.b + d.c,
            Some(_) => 0,
        };
        self.shared.mass_at_least(x) + own
    }

    /// Applies the coupled move selected by the card positions driving the
    /// fine coordinate. Positions `0..b` lie in `b`, `b..b+c` in `c`, the
    /// rest in the shared parts. Every pair of positions in `0..n` is
    /// equally likely, and the induced law is that of [`coupled_joint`].
    pub fn apply_positions(&mut self, r_pos: usize, l_pos: usize) {
        let n = self.n();
        assert!(r_pos < n && l_pos < n, "positions out of range");
        let Some(d) = self.apart else {
            apply_positions(&mut self.shared, r_pos, l_pos);
            return;
        };
        let (b, c) = (d.b, d.c);
        if r_pos == l_pos {
            // The fine side stays; R is uniform on 0..n given a stay.
            if (r_pos as u64) < stay_meet_weight(n, b, c) {
                self.meet(&[b, c]);
            }
            return;
        }
        let block = |pos: usize| {
            if pos < b {
                0
            } else if pos < b + c {
                1
            } else {
                2
            }
        };
        match (block(r_pos), block(l_pos)) {
            (2, 2) => apply_positions(&mut self.shared, r_pos - b - c, l_pos - b - c),
            (0, 2) | (2, 0) | (1, 2) | (2, 1) => {
                let (own, other) = if block(r_pos) == 2 { (l_pos, r_pos) } else { (r_pos, l_pos) };
                let k = self.shared.locate(other - b - c).size;
                self.shared.remove(k);
                self.apart = Some(if own < b {
                    Apart::new(b + k, c, d.fine_is_x)
                } else {
                    Apart::new(b, c + k, d.fine_is_x)
                });
            }
            (0, 0) | (1, 1) => {
                let (a, start) = if r_pos < b { (b, 0) } else { (c, b) };
                let off = (l_pos - start + a - (r_pos - start)) % a;
                let r = off.min(a - off);
                self.shared.insert(r);
                self.apart = Some(if a == b && start == 0 {
                    Apart::new(b - r, c, d.fine_is_x)
                } else {
                    Apart::new(b, c - r, d.fine_is_x)
                });
            }
            _ => {
                // Merge of b and c; index the 2bc position pairs uniformly.
                let k = if r_pos < b {
                    (r_pos * c + (l_pos - b)) as u64
                } else {
                    (b * c + (r_pos - b) * b + l_pos) as u64
                };
                let taken = stay_meet_weight(n, b, c);
                if k < taken {
                    self.meet(&[b + c]);
                    return;
                }
                let mut k = k - taken;
                for (lo, hi, w) in residual_segments(n, b, c) {
                    let mass = w * (hi - lo) as u64;
                    if k < mass {
                        let r = lo + (k / w) as usize;
                        self.apart = Some(Apart::new(r, b + c - r, !d.fine_is_x));
                        return;
                    }
                    k -= mass;
                }
                unreachable!("residual splits carry exactly the leftover merge mass");
            }
        }
    }

    fn meet(&mut self, parts: &[usize]) {
        for &p in parts {
            self.shared.insert(p);
        }
        self.apart = None;
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n = self.n();
        let r_pos = rng.random_range(0..n);
        let l_pos = rng.random_range(0..n);
        self.apply_positions(r_pos, l_pos);
    }
}

/// Joint law obtained by running the position map over all `n²` pairs.
pub fn joint_by_positions(x: &Partition, y: &Partition) -> Result<JointDistribution> {
    let start = CoupledChain::new(x, y)?;
    let n = start.n();
    let mut entries = BTreeMap::new();
    for r in 0..n {
        for l in 0..n {
            let mut chain = start.clone();
            chain.apply_positions(r, l);
            *entries.entry((chain.x(), chain.y())).or_insert(0) += 1;
        }
    }
    Ok(JointDistribution {
        entries,
        denom: (n * n) as u64,
    })
}

/// A coupled state with cached statistics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoupledPair {
    pub x: Partition,
    pub y: Partition,
    pub stats: PairStats,
    pub met: bool,
}

impl CoupledPair {
    pub fn new(x: Partition, y: Partition) -> Result<Self> {
        let stats = crate::partition::pair_stats(&x, &y)?;
        let met = x == y;
        Ok(CoupledPair { x, y, stats, met })
    }

    fn from_chain(chain: &CoupledChain) -> Self {
        CoupledPair {
            x: chain.x(),
            y: chain.y(),
            stats: chain.stats(),
            met: chain.is_met(),
        }
    }
}

/// One coupled step.
pub fn coupled_step<R: Rng + ?Sized>(state: &CoupledPair, rng: &mut R) -> CoupledPair {
    let mut chain = CoupledChain::new(&state.x, &state.y).expect("coupled pairs are neighbors");
    chain.step(rng);
    CoupledPair::from_chain(&chain)
}

/// Per-step record of one coupled run.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTrajectory {
    /// `2 s(X_t, Y_t)` for `t = 0..=t_max`.
    pub s_twice: Vec<u64>,
    /// `m(X_t, Y_t)` for `t = 0..=t_max`, with `m = n` once met.
    pub m: Vec<usize>,
    /// `V_t(x)` of the X coordinate, one row per threshold.
    pub v: Vec<Vec<usize>>,
    pub meet_time: Option<usize>,
}

/// Runs the coupling from `(x0, y0)` for `t_max` steps, stopping the
/// recorded series early only if `t_max` is reached.
pub fn run_coupling<R: Rng + ?Sized>(
    x0: &Partition,
    y0: &Partition,
    t_max: usize,
    thresholds: &[f64],
    rng: &mut R,
) -> Result<CouplingTrajectory> {
    let mut chain = CoupledChain::new(x0, y0)?;
    let mut out = CouplingTrajectory {
        s_twice: Vec::with_capacity(t_max + 1),
        m: Vec::with_capacity(t_max + 1),
        v: vec![Vec::with_capacity(t_max + 1); thresholds.len()],
        meet_time: None,
    };
    for t in 0..=t_max {
        if t > 0 {
            chain.step(rng);
        }
        if out.meet_time.is_none() && chain.is_met() {
            out.meet_time = Some(t);
        }
        out.s_twice.push(chain.s_twice());
        out.m.push(chain.apart.map_or(chain.n(), |d| d.c));
        for (row, &x) in out.v.iter_mut().zip(thresholds) {
            row.push(chain.x_mass_at_least(x));
        }
    }
    Ok(out)
}

/// Outcome of the soundness checks for one neighbor pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCheck {
    pub x: Partition,
    pub y: Partition,
    pub marginals_exact: bool,
    pub support_within_one: bool,
    /// Meet weight and the lower bound `4 s`, both over `n²`.
    pub meet_weight: u64,
    pub meet_bound: u64,
    /// Residual `p` of the `{b, c}` split and the bound `2 b`, over `n²`.
    pub residual: u64,
    pub residual_bound: u64,
    /// The position map reproduces the joint exactly.
    pub sampler_agrees: bool,
}

impl PairCheck {
    pub fn holds(&self) -> bool {
        self.marginals_exact
            && self.support_within_one
            && self.meet_weight >= self.meet_bound
            && self.residual >= self.residual_bound
            && self.sampler_agrees
    }
}

pub fn check_pair(x: &Partition, y: &Partition) -> Result<PairCheck> {
    let (b, c) = neighbor_split(x, y).ok_or_else(|| Error::NotNeighbors(x.to_string(), y.to_string()))?;
    let joint = coupled_joint(x, y)?;
    let residual = stay_split_residual(b, c);
    let support_within_one = joint.iter().all(|(p, q, _)| p == q || neighbor_split(p, q).is_some());
    let sampler_agrees = joint_by_positions(x, y)? == joint;
    Ok(PairCheck {
        x: x.clone(),
        y: y.clone(),
        marginals_exact: joint.marginal_x() == crate::chain::transition_distribution(x)
            && joint.marginal_y() == crate::chain::transition_distribution(y),
        support_within_one,
        meet_weight: joint.diagonal_weight(),
        meet_bound: 4 * b as u64,
        residual,
        residual_bound: 2 * b as u64,
        sampler_agrees,
    })
}

/// Every ordered neighbor pair `(x, y)` of partitions of `n`.
pub fn neighbor_pairs(n: usize) -> Vec<(Partition, Partition)> {
    partitions_of(n)
        .into_iter()
        .flat_map(|p| neighbors(&p).into_iter().map(move |q| (p.clone(), q)))
        .collect()
}

/// Checks every ordered neighbor pair of every `n` in `2..=max_n`.
pub fn check_all(max_n: usize) -> Result<Vec<PairCheck>> {
    use rayon::prelude::*;
    crate::error::guard("max_n", max_n, crate::chain::MAX_EXACT_N)?;
    let pairs: Vec<_> = (2..=max_n).flat_map(neighbor_pairs).collect();
    pairs.par_iter().map(|(x, y)| check_pair(x, y)).collect()
}
