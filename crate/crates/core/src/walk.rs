//! The random transposition walk on `S_n`.
//!
//! Each step picks two labels `u`, `v` independently and uniformly (possibly
//! equal) and multiplies the current permutation by the transposition
//! `(u v)`. A [`CyclePermutation`] keeps per-element cycle ids so that the
//! cycle type can be read without a full decomposition, and a
//! [`GraphState`] tracks the components of the graph whose edges are the
//! transpositions applied so far.

use std::collections::{BTreeMap, HashMap};

use num_rational::Ratio;
use rand::Rng;

use crate::error::{guard, Error, Result};
use crate::partition::Partition;

/// Largest `n` for which `S_n` is enumerated.
pub const MAX_SN_N: usize = 6;

/// A permutation of `0..n` stored as a successor array with cycle ids.
#[derive(Debug, Clone)]
pub struct CyclePermutation {
    next: Vec<u32>,
    cycle_of: Vec<u32>,
    sizes: Vec<usize>,
    free: Vec<u32>,
    num_cycles: usize,
}

impl CyclePermutation {
    pub fn identity(n: usize) -> Self {
        CyclePermutation {
            next: (0..n as u32).collect(),
            cycle_of: (0..n as u32).collect(),
            sizes: vec![1; n],
            free: Vec::new(),
            num_cycles: n,
        }
    }

    /// Builds a permutation from its successor array.
    pub fn from_mapping(mapping: &[usize]) -> Result<Self> {
        let n = mapping.len();
        let mut hit = vec![false; n];
        for &m in mapping {
            if m >= n || std::mem::replace(&mut hit[m], true) {
                return Err(Error::InvalidInput("mapping is not a bijection".into()));
            }
        }
        let next: Vec<u32> = mapping.iter().map(|&m| m as u32).collect();
        let mut cycle_of = vec![u32::MAX; n];
        let mut sizes = vec![0; n];
        let mut free = Vec::new();
        let mut num_cycles = 0;
        for start in 0..n {
            if cycle_of[start] != u32::MAX {
                continue;
            }
            let id = start as u32;
            let mut x = start;
            loop {
                cycle_of[x] = id;
                sizes[start] += 1;
                x = next[x] as usize;
                if x == start {
                    break;
                }
            }
            num_cycles += 1;
        }
        for (id, &s) in sizes.iter().enumerate() {
            if s == 0 {
                free.push(id as u32);
            }
        }
        Ok(CyclePermutation {
            next,
            cycle_of,
            sizes,
            free,
            num_cycles,
        })
    }

    /// A permutation of cycle type `p` whose cycles are runs of consecutive
    /// labels, in the order of `p`'s parts. Label `x` then sits at position
    /// `x` of the concatenated parts, with successors following offsets.
    pub fn with_cycle_type(p: &Partition) -> Self {
        let mut mapping = Vec::with_capacity(p.n());
        let mut base = 0;
        for &a in p.parts() {
            for k in 0..a {
                mapping.push(base + (k + 1) % a);
            }
            base += a;
        }
        CyclePermutation::from_mapping(&mapping).expect("cycles of a partition form a bijection")
    }

    pub fn n(&self) -> usize {
        self.next.len()
    }

    pub fn mapping(&self) -> Vec<usize> {
        self.next.iter().map(|&x| x as usize).collect()
    }

    pub fn num_cycles(&self) -> usize {
        self.num_cycles
    }

    pub fn cycle_size_of(&self, v: usize) -> usize {
        self.sizes[self.cycle_of[v] as usize]
    }

    pub fn same_cycle(&self, u: usize, v: usize) -> bool {
        self.cycle_of[u] == self.cycle_of[v]
    }

    /// Cycle type from the maintained sizes.
    pub fn cycle_type(&self) -> Partition {
        let sizes: Vec<usize> = self.sizes.iter().copied().filter(|&s| s > 0).collect();
        Partition::new(sizes).expect("a permutation has at least one cycle")
    }

    /// Cycle type recomputed from the successor array alone.
    pub fn cycle_type_from_scratch(&self) -> Partition {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut lens = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            let (mut x, mut len) = (s, 0);
            while !seen[x] {
                seen[x] = true;
                x = self.next[x] as usize;
                len += 1;
            }
            lens.push(len);
        }
        Partition::new(lens).expect("a permutation has at least one cycle")
    }

    /// The `k` largest cycle sizes, non-increasing.
    pub fn largest_cycles(&self, k: usize) -> Vec<usize> {
        let mut sizes: Vec<usize> = self.sizes.iter().copied().filter(|&s| s > 0).collect();
        let k = k.min(sizes.len());
        if k == 0 {
            return Vec::new();
        }
        sizes.select_nth_unstable_by(k - 1, |a, b| b.cmp(a));
        sizes.truncate(k);
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }

    /// Multiplies by the transposition `(u v)`: a cycle through both labels
    /// splits, two distinct cycles merge, and `u == v` changes nothing.
    pub fn apply_transposition(&mut self, u: usize, v: usize) -> Result<()> {
        let n = self.n();
        if u >= n || v >= n {
            return Err(Error::InvalidInput(format!("labels ({u}, {v}) out of range for n = {n}")));
        }
        if u == v {
            return Ok(());
        }
        let (cu, cv) = (self.cycle_of[u], self.cycle_of[v]);
        if cu != cv {
            // Relabel the smaller cycle before the two are joined.
            let (keep, gone, start) = if self.sizes[cu as usize] >= self.sizes[cv as usize] {
                (cu, cv, v)
            } else {
                (cv, cu, u)
            };
            let mut x = start;
            loop {
                self.cycle_of[x] = keep;
                x = self.next[x] as usize;
                if x == start {
                    break;
                }
            }
            self.sizes[keep as usize] += self.sizes[gone as usize];
            self.sizes[gone as usize] = 0;
            self.free.push(gone);
            self.num_cycles -= 1;
            self.next.swap(u, v);
        } else {
            self.next.swap(u, v);
            // Walk both new cycles in lockstep; relabel whichever closes first.
            let (mut x, mut y) = (self.next[u] as usize, self.next[v] as usize);
            let mut len = 1;
            let (start, short) = loop {
                if x == u {
                    break (u, len);
                }
                if y == v {
                    break (v, len);
                }
                x = self.next[x] as usize;
                y = self.next[y] as usize;
                len += 1;
            };
            let id = self.free.pop().expect("a split always has a free id");
            let mut z = start;
            loop {
                self.cycle_of[z] = id;
                z = self.next[z] as usize;
                if z == start {
                    break;
                }
            }
            self.sizes[cu as usize] -= short;
            self.sizes[id as usize] = short;
            self.num_cycles += 1;
        }
        Ok(())
    }

    /// One step of the walk; returns the pair that was applied.
    pub fn walk_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> (usize, usize) {
        let n = self.n();
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        self.apply_transposition(u, v).expect("labels drawn in range");
        (u, v)
    }
}

/// Union-find over `0..n` for the transposition graph.
#[derive(Debug, Clone)]
pub struct GraphState {
    parent: Vec<u32>,
    size: Vec<u32>,
    largest: usize,
}

impl GraphState {
    pub fn new(n: usize) -> Self {
        GraphState {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            largest: usize::from(n > 0),
        }
    }

    pub fn find(&mut self, v: usize) -> usize {
        let mut root = v;
        while self.parent[root] as usize != root {
            root = self.parent[root] as usize;
        }
        let mut x = v;
        while self.parent[x] as usize != root {
            let up = self.parent[x] as usize;
            self.parent[x] = root as u32;
            x = up;
        }
        root
    }

    /// Adds the edge `{u, v}`; a self-pair adds nothing.
    pub fn add_edge(&mut self, u: usize, v: usize) {
        let (a, b) = (self.find(u), self.find(v));
        if a == b {
            return;
        }
        let (big, small) = if self.size[a] >= self.size[b] { (a, b) } else { (b, a) };
        self.parent[small] = big as u32;
        self.size[big] += self.size[small];
        self.largest = self.largest.max(self.size[big] as usize);
    }

    /// `|W_t|`, the size of the largest component.
    pub fn largest(&self) -> usize {
        self.largest
    }

    pub fn component_size(&mut self, v: usize) -> usize {
        let r = self.find(v);
        self.size[r] as usize
    }

    pub fn component_sizes(&mut self) -> Vec<usize> {
        let roots: Vec<usize> = (0..self.parent.len()).filter(|&v| self.find(v) == v).collect();
        roots.into_iter().map(|v| self.size[v] as usize).collect()
    }
}

/// The walk together with its transposition graph, driven by one pair
/// stream.
#[derive(Debug, Clone)]
pub struct TranspositionProcess {
    pub perm: CyclePermutation,
    pub graph: GraphState,
}

impl TranspositionProcess {
    pub fn new(n: usize) -> Self {
        TranspositionProcess {
            perm: CyclePermutation::identity(n),
            graph: GraphState::new(n),
        }
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let (u, v) = self.perm.walk_step(rng);
        self.graph.add_edge(u, v);
    }
}

/// Largest component size `|W_t|` for `t = 0..=t_max`.
pub fn graph_track<R: Rng + ?Sized>(n: usize, t_max: usize, rng: &mut R) -> Vec<usize> {
    let mut graph = GraphState::new(n);
    let mut out = Vec::with_capacity(t_max + 1);
    out.push(graph.largest());
    for _ in 0..t_max {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        graph.add_edge(u, v);
        out.push(graph.largest());
    }
    out
}

/// All permutations of `0..n` as one-line arrays, with an index.
fn symmetric_group(n: usize) -> (Vec<Vec<u8>>, HashMap<Vec<u8>, usize>) {
    fn rec(prefix: &mut Vec<u8>, used: &mut Vec<bool>, out: &mut Vec<Vec<u8>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for x in 0..used.len() {
            if !used[x] {
                used[x] = true;
                prefix.push(x as u8);
                rec(prefix, used, out);
                prefix.pop();
                used[x] = false;
            }
        }
    }
    let mut perms = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut perms);
    let index = perms.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    (perms, index)
}

type SparseRow = Vec<(usize, u64)>;

/// Sparse rows of the walk's kernel over `S_n`, weights over `n²`.
fn sn_rows(n: usize) -> (Vec<Vec<u8>>, Vec<SparseRow>) {
    let (perms, index) = symmetric_group(n);
    let rows = perms
        .iter()
        .map(|alpha| {
            let mut row: BTreeMap<usize, u64> = BTreeMap::new();
            for u in 0..n {
                for v in 0..n {
                    let mut beta = alpha.clone();
                    beta.swap(u, v);
                    *row.entry(index[&beta]).or_insert(0) += 1;
                }
            }
            row.into_iter().collect()
        })
        .collect();
    (perms, rows)
}

/// `‖P̄^t(id, ·) − uniform‖_TV` by propagating over all of `S_n`.
pub fn exact_d_sn(n: usize, t: usize) -> Result<f64> {
    Ok(*exact_d_sn_curve(n, t)?.last().unwrap())
}

pub fn exact_d_sn_curve(n: usize, t_max: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    guard("n", n, MAX_SN_N)?;
    let (perms, rows) = sn_rows(n);
    let size = perms.len();
    let uniform = 1.0 / size as f64;
    let denom = (n * n) as f64;
    let identity: Vec<u8> = (0..n as u8).collect();
    let mut v = vec![0.0; size];
    v[perms.iter().position(|p| *p == identity).unwrap()] = 1.0;
    let mut out = Vec::with_capacity(t_max + 1);
    for t in 0..=t_max {
        if t > 0 {
            let mut next = vec![0.0; size];
            for (i, &vi) in v.iter().enumerate() {
                if vi != 0.0 {
                    for &(j, w) in &rows[i] {
                        next[j] += vi * w as f64 / denom;
                    }
                }
            }
            v = next;
        }
        out.push(0.5 * v.iter().map(|x| (x - uniform).abs()).sum::<f64>());
    }
    Ok(out)
}

/// One-step overlap `Σ_γ min(P̄(α,γ), P̄(β,γ)) = 1 − TV(P̄(α,·), P̄(β,·))`.
pub fn row_overlap(a: &[(usize, u64)], b: &[(usize, u64)]) -> u64 {
    let (mut i, mut j, mut acc) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a[i].1.min(b[j].1);
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// Largest one-step meeting probability any Markovian coupling of the walk
/// can achieve from two distinct permutations: the maximum over `α ≠ β` of
/// the overlap of their transition rows.
pub fn markovian_one_step_bound(n: usize) -> Result<Ratio<u64>> {
    if n < 2 {
        return Err(Error::InvalidInput("need n >= 2 for distinct permutations".into()));
    }
    guard("n", n, MAX_SN_N)?;
    let (_, rows) = sn_rows(n);
    let mut best = 0;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            best = best.max(row_overlap(&rows[i], &rows[j]));
        }
    }
    Ok(Ratio::new(best, (n * n) as u64))
}
