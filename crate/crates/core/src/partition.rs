//! Integer partitions as states of the split-merge chain.
//!
//! A [`Partition`] is kept in canonical form: parts sorted non-increasing,
//! every part positive. Two partitions of `n` are *neighbors* when one is
//! obtained from the other by merging two parts (equivalently, the other is
//! obtained by splitting one part). The path metric on that graph is
//! [`rho`].

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use num_bigint::BigUint;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{guard, Error, Result};

/// Largest `n` for which breadth-first distance queries are allowed.
pub const MAX_BFS_N: usize = 40;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "Vec<usize>", try_from = "Vec<usize>")]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    /// Sorts `raw` into canonical non-increasing order.
    pub fn new(raw: impl Into<Vec<usize>>) -> Result<Self> {
        let mut parts = raw.into();
        if parts.is_empty() {
            return Err(Error::InvalidInput("a partition needs at least one part".into()));
        }
        if parts.contains(&0) {
            return Err(Error::InvalidInput("parts must be positive".into()));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Partition { parts })
    }

    /// `(1, 1, ..., 1)`, the cycle type of the identity.
    pub fn ones(n: usize) -> Self {
        assert!(n > 0);
        Partition { parts: vec![1; n] }
    }

    /// `(n)`, a single part.
    pub fn single(n: usize) -> Self {
        assert!(n > 0);
        Partition { parts: vec![n] }
    }

    /// Caller guarantees canonical order.
    pub(crate) fn from_sorted(parts: Vec<usize>) -> Self {
        debug_assert!(parts.windows(2).all(|w| w[0] >= w[1]));
        debug_assert!(!parts.is_empty() && parts.iter().all(|&p| p > 0));
        Partition { parts }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn n(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Merges the parts at positions `i != j`.
    pub fn merge(&self, i: usize, j: usize) -> Partition {
        assert_ne!(i, j);
        let mut parts: Vec<usize> = self
            .parts
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i && k != j)
            .map(|(_, &p)| p)
            .collect();
        insert_sorted(&mut parts, self.parts[i] + self.parts[j]);
        Partition { parts }
    }

    /// Splits the part at position `i` into `r` and `parts[i] - r`.
    pub fn split(&self, i: usize, r: usize) -> Partition {
        let a = self.parts[i];
        assert!(r >= 1 && r < a);
        let mut parts = self.parts.clone();
        parts.remove(i);
        insert_sorted(&mut parts, r);
        insert_sorted(&mut parts, a - r);
        Partition { parts }
    }

    /// Multiplicity of each part value.
    pub fn multiplicities(&self) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for &p in &self.parts {
            *counts.entry(p).or_insert(0) += 1;
        }
        counts
    }
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Partition::new(v)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.parts
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn insert_sorted(parts: &mut Vec<usize>, value: usize) {
    let at = parts.partition_point(|&p| p > value);
    parts.insert(at, value);
}

pub fn canonicalize(raw: &[usize]) -> Result<Partition> {
    Partition::new(raw.to_vec())
}

/// All partitions of `n` in reverse lexicographic order, starting at `(n)`
/// and ending at `(1, ..., 1)`.
pub fn partitions_of(n: usize) -> Vec<Partition> {
    fn rec(rest: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if rest == 0 {
            out.push(Partition { parts: prefix.clone() });
            return;
        }
        for first in (1..=rest.min(max)).rev() {
            prefix.push(first);
            rec(rest - first, first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(n, n, &mut Vec::new(), &mut out);
    }
    out
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

/// Number of permutations of `n` whose cycle type is `p`:
/// `n! / (prod parts * prod multiplicity!)`.
pub fn perm_count(p: &Partition) -> BigUint {
    let mut denom = BigUint::one();
    for &a in &p.parts {
        denom *= BigUint::from(a);
    }
    for &mult in p.multiplicities().values() {
        denom *= factorial(mult);
    }
    factorial(p.n()) / denom
}

/// Stationary probability of `p`: the uniform measure on `S_n` pushed
/// forward to cycle types.
pub fn stationary(p: &Partition) -> BigRational {
    BigRational::new(perm_count(p).into(), factorial(p.n()).into())
}

/// Parts of `p` not matched in `q`, and parts of `q` not matched in `p`.
pub fn multiset_difference(p: &Partition, q: &Partition) -> (Vec<usize>, Vec<usize>) {
    let (a, b) = (&p.parts, &q.parts);
    let (mut i, mut j) = (0, 0);
    let (mut only_p, mut only_q) = (Vec::new(), Vec::new());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Greater => {
                only_p.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Less => {
                only_q.push(b[j]);
                j += 1;
            }
        }
    }
    only_p.extend_from_slice(&a[i..]);
    only_q.extend_from_slice(&b[j..]);
    (only_p, only_q)
}

/// If `p` and `q` differ by exactly one merge, returns `(b, c)` with `b <= c`
/// where the finer partition carries `{b, c}` and the coarser `b + c`.
pub fn neighbor_split(p: &Partition, q: &Partition) -> Option<(usize, usize)> {
    let (only_p, only_q) = multiset_difference(p, q);
    let (fine, coarse) = match (only_p.len(), only_q.len()) {
        (2, 1) => (only_p, only_q),
        (1, 2) => (only_q, only_p),
        _ => return None,
    };
    if fine[0] + fine[1] != coarse[0] {
        return None;
    }
    // `fine` came out of a non-increasing walk.
    Some((fine[1], fine[0]))
}

/// The smallest and medium parts in which two neighbor partitions differ.
/// For a partition paired with itself, `s = n / 2` and `m = n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairStats {
    pub s: Ratio<u64>,
    pub m: Ratio<u64>,
}

impl PairStats {
    pub fn for_met(n: usize) -> Self {
        PairStats {
            s: Ratio::new(n as u64, 2),
            m: Ratio::from_integer(n as u64),
        }
    }

    pub fn for_split(b: usize, c: usize) -> Self {
        PairStats {
            s: Ratio::from_integer(b.min(c) as u64),
            m: Ratio::from_integer(b.max(c) as u64),
        }
    }

    pub fn s_f64(&self) -> f64 {
        self.s.to_f64().unwrap()
    }

    pub fn m_f64(&self) -> f64 {
        self.m.to_f64().unwrap()
    }
}

pub fn pair_stats(p: &Partition, q: &Partition) -> Result<PairStats> {
    if p.n() != q.n() {
        return Err(Error::InvalidInput(format!("{p} and {q} partition different integers")));
    }
    if p == q {
        return Ok(PairStats::for_met(p.n()));
    }
    neighbor_split(p, q)
        .map(|(b, c)| PairStats::for_split(b, c))
        .ok_or_else(|| Error::NotNeighbors(p.to_string(), q.to_string()))
}

/// Every partition one split or one merge away from `p`.
pub fn neighbors(p: &Partition) -> BTreeSet<Partition> {
    let mut out = BTreeSet::new();
    let parts = p.parts();
    for i in 0..parts.len() {
        if i > 0 && parts[i] == parts[i - 1] {
            continue;
        }
        for r in 1..=parts[i] / 2 {
            out.insert(p.split(i, r));
        }
        for j in i + 1..parts.len() {
            out.insert(p.merge(i, j));
        }
    }
    out
}

/// Split-merge distance between two partitions of the same integer.
pub fn rho(p: &Partition, q: &Partition) -> Result<usize> {
    if p.n() != q.n() {
        return Err(Error::InvalidInput(format!("{p} and {q} partition different integers")));
    }
    if p == q {
        return Ok(0);
    }
    if neighbor_split(p, q).is_some() {
        return Ok(1);
    }
    guard("n", p.n(), MAX_BFS_N)?;
    let mut seen: HashMap<Partition, usize> = HashMap::from([(p.clone(), 0)]);
    let mut queue = VecDeque::from([p.clone()]);
    while let Some(cur) = queue.pop_front() {
        let d = seen[&cur];
        for next in neighbors(&cur) {
            if next == *q {
                return Ok(d + 1);
            }
            if !seen.contains_key(&next) {
                seen.insert(next.clone(), d + 1);
                queue.push_back(next);
            }
        }
    }
    unreachable!("the split-merge graph is connected")
}

/// The neighbor graph on all partitions of `n`, as adjacency lists over
/// indices into [`partitions_of`].
pub fn neighbor_graph(n: usize) -> (Vec<Partition>, Vec<Vec<usize>>) {
    let states = partitions_of(n);
    let index: HashMap<&Partition, usize> = states.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let adj = states
        .iter()
        .map(|p| neighbors(p).iter().map(|q| index[q]).collect())
        .collect();
    (states, adj)
}

/// Largest split-merge distance between two partitions of `n`.
pub fn diameter(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    guard("n", n, MAX_BFS_N)?;
    let (states, adj) = neighbor_graph(n);
    let mut best = 0;
    let mut dist = vec![usize::MAX; states.len()];
    let mut queue = VecDeque::new();
    for src in 0..states.len() {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[src] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            best = best.max(dist[u]);
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    Ok(best)
}

/// Total size of the parts of `p` that are at least `x`.
pub fn v_stat(p: &Partition, x: f64) -> usize {
    p.parts.iter().filter(|&&a| a as f64 >= x).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn part(v: &[usize]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    /// Cycle type of every permutation of `0..n`, by brute force.
    fn cycle_type_census(n: usize) -> BTreeMap<Partition, usize> {
        fn perms(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in perms(n - 1) {
                for at in 0..=p.len() {
                    let mut q = p.clone();
                    q.insert(at, n - 1);
                    out.push(q);
                }
            }
            out
        }
        let mut census = BTreeMap::new();
        for perm in perms(n) {
            let mut seen = vec![false; n];
            let mut lens = Vec::new();
            for s in 0..n {
                if seen[s] {
                    continue;
                }
                let (mut x, mut len) = (s, 0);
                while !seen[x] {
                    seen[x] = true;
                    x = perm[x];
                    len += 1;
                }
                lens.push(len);
            }
            *census.entry(Partition::new(lens).unwrap()).or_insert(0) += 1;
        }
        census
    }

    #[test]
    fn canonicalize_sorts() {
        assert_eq!(canonicalize(&[1, 4]).unwrap().parts(), &[4, 1]);
        assert_eq!(canonicalize(&[2, 2, 1]).unwrap().parts(), &[2, 2, 1]);
        assert_eq!(canonicalize(&[3, 1, 1, 3]).unwrap().parts(), &[3, 3, 1, 1]);
        assert!(matches!(canonicalize(&[]), Err(Error::InvalidInput(_))));
        assert!(matches!(canonicalize(&[2, 0]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn partition_counts() {
        let counts: Vec<usize> = (1..=12).map(|n| partitions_of(n).len()).collect();
        assert_eq!(counts, vec![1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77]);
        let five: Vec<String> = partitions_of(5).iter().map(|p| p.to_string()).collect();
        assert_eq!(
            five,
            ["(5)", "(4,1)", "(3,2)", "(3,1,1)", "(2,2,1)", "(2,1,1,1)", "(1,1,1,1,1)"]
        );
    }

    #[test]
    fn perm_count_matches_enumeration() {
        assert_eq!(perm_count(&part(&[1, 1, 1])), BigUint::from(1u32));
        assert_eq!(perm_count(&part(&[2, 1])), BigUint::from(3u32));
        assert_eq!(perm_count(&part(&[3])), BigUint::from(2u32));
        for n in 1..=7 {
            for (p, count) in cycle_type_census(n) {
                assert_eq!(perm_count(&p), BigUint::from(count), "{p}");
            }
        }
    }

    #[test]
    fn stationary_values() {
        let r = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        assert_eq!(stationary(&part(&[1, 1, 1])), r(1, 6));
        assert_eq!(stationary(&part(&[2, 1])), r(1, 2));
        assert_eq!(stationary(&part(&[3])), r(1, 3));
        for n in 1..=20 {
            let total = partitions_of(n)
                .iter()
                .map(stationary)
                .fold(BigRational::zero(), |a, b| a + b);
            assert!(total.is_one(), "n = {n}");
        }
    }

    #[test]
    fn pair_stats_examples() {
        let st = pair_stats(&part(&[4, 1]), &part(&[5])).unwrap();
        assert_eq!((st.s, st.m), (Ratio::from(1), Ratio::from(4)));
        let st = pair_stats(&part(&[2, 3]), &part(&[5])).unwrap();
        assert_eq!((st.s, st.m), (Ratio::from(2), Ratio::from(3)));
        let st = pair_stats(&part(&[2, 1]), &part(&[2, 1])).unwrap();
        assert_eq!((st.s, st.m), (Ratio::new(3, 2), Ratio::from(3)));
        assert!(matches!(
            pair_stats(&part(&[3]), &part(&[1, 1, 1])),
            Err(Error::NotNeighbors(..))
        ));
    }

    #[test]
    fn pair_stats_with_repeated_values() {
        // {1, 2} against {3}; the shared part 1 must not confuse the difference.
        let st = pair_stats(&part(&[2, 1, 1]), &part(&[3, 1])).unwrap();
        assert_eq!((st.s, st.m), (Ratio::from(1), Ratio::from(2)));
        let st = pair_stats(&part(&[2, 2]), &part(&[4])).unwrap();
        assert_eq!((st.s, st.m), (Ratio::from(2), Ratio::from(2)));
    }

    #[test]
    fn neighbor_examples() {
        let got: BTreeSet<Partition> = neighbors(&part(&[4, 1]));
        let want: BTreeSet<Partition> =
            [part(&[5]), part(&[3, 1, 1]), part(&[2, 2, 1])].into_iter().collect();
        assert_eq!(got, want);
        assert_eq!(neighbors(&part(&[1, 1])), [part(&[2])].into_iter().collect());
        assert_eq!(neighbors(&part(&[2])), [part(&[1, 1])].into_iter().collect());
    }

    #[test]
    fn neighbors_are_symmetric() {
        for n in 1..=12 {
            for p in partitions_of(n) {
                for q in neighbors(&p) {
                    assert!(neighbors(&q).contains(&p), "{p} -> {q}");
                    assert!(neighbor_split(&p, &q).is_some());
                }
            }
        }
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho(&part(&[3]), &part(&[3])).unwrap(), 0);
        assert_eq!(rho(&part(&[4, 1]), &part(&[5])).unwrap(), 1);
        assert_eq!(rho(&part(&[3]), &part(&[1, 1, 1])).unwrap(), 2);
        assert!(rho(&part(&[3]), &part(&[2, 2])).is_err());
        assert!(matches!(
            rho(&Partition::ones(41), &Partition::single(41)),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn rho_is_a_metric() {
        for n in 1..=10 {
            let states = partitions_of(n);
            let d: Vec<Vec<usize>> = states
                .iter()
                .map(|p| states.iter().map(|q| rho(p, q).unwrap()).collect())
                .collect();
            for i in 0..states.len() {
                assert_eq!(d[i][i], 0);
                for j in 0..states.len() {
                    assert_eq!(d[i][j], d[j][i]);
                    assert_eq!(d[i][j] == 0, i == j);
                    for k in 0..states.len() {
                        assert!(d[i][k] <= d[i][j] + d[j][k]);
                    }
                }
            }
        }
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(diameter(2).unwrap(), 1);
        assert_eq!(diameter(3).unwrap(), 2);
        assert!(diameter(6).unwrap() <= 6);
        assert!(matches!(diameter(41), Err(Error::TooLarge { .. })));
        for n in 1..=14 {
            assert!(diameter(n).unwrap() <= n);
        }
    }

    #[test]
    fn v_stat_examples() {
        assert_eq!(v_stat(&part(&[4, 1]), 2.0), 4);
        assert_eq!(v_stat(&part(&[4, 1]), 1.0), 5);
        assert_eq!(v_stat(&part(&[2, 2, 1]), 5.0), 0);
        assert_eq!(v_stat(&part(&[3, 2]), 2.5), 3);
    }

    #[test]
    fn serde_round_trip_canonicalizes() {
        let p: Partition = serde_json::from_str("[1,3,2]").unwrap();
        assert_eq!(p, part(&[3, 2, 1]));
        assert_eq!(serde_json::to_string(&p).unwrap(), "[3,2,1]");
        assert!(serde_json::from_str::<Partition>("[0]").is_err());
    }

    proptest::proptest! {
        #[test]
        fn canonical_form_is_sorted_and_preserves_sum(raw in proptest::collection::vec(1usize..20, 1..12)) {
            let p = canonicalize(&raw).unwrap();
            proptest::prop_assert!(p.parts().windows(2).all(|w| w[0] >= w[1]));
            proptest::prop_assert_eq!(p.n(), raw.iter().sum::<usize>());
            let mut sorted = raw.clone();
            sorted.sort_unstable_by(|a, b| b.cmp(a));
            proptest::prop_assert_eq!(p.parts(), &sorted[..]);
        }

        #[test]
        fn rho_one_pairs_have_integer_stats(n in 2usize..=10, i in 0usize..1000, j in 0usize..1000) {
            let states = partitions_of(n);
            let p = &states[i % states.len()];
            let nb: Vec<Partition> = neighbors(p).into_iter().collect();
            let q = &nb[j % nb.len()];
            let st = pair_stats(p, q).unwrap();
            proptest::prop_assert!(st.s.is_integer() && st.m.is_integer());
            proptest::prop_assert!(st.s <= st.m);
            let total = (st.s + st.m).to_integer() as usize;
            let in_p = p.parts().contains(&total) as usize;
            let in_q = q.parts().contains(&total) as usize;
            let (only_p, only_q) = multiset_difference(p, q);
            proptest::prop_assert_eq!(only_p.contains(&total) as usize + only_q.contains(&total) as usize, 1);
            proptest::prop_assert!(in_p + in_q >= 1);
        }
    }
}
