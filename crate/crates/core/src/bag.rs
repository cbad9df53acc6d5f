//! A multiset of part sizes supporting size-biased lookup.
//!
//! Positions `0..mass` are laid out by size class (smallest class first),
//! each class holding its parts back to back. [`PartBag::locate`] maps a
//! position to the part that covers it, which is how a uniform card pick
//! `R` in `{1..n}` selects a part with probability proportional to its size.
//! Class weights `k * count[k]` live in a Fenwick tree, so lookups and
//! updates cost `O(log n)`.

use crate::partition::Partition;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartBag {
    counts: Vec<usize>,
    tree: Vec<u64>,
    mass: usize,
    parts: usize,
    top_bit: usize,
}

/// A position resolved to a specific part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Located {
    /// Size of the part.
    pub size: usize,
    /// Which of the parts of this size (0-based).
    pub index: usize,
    /// Offset within the part, in `0..size`.
    pub offset: usize,
}

impl PartBag {
    /// An empty bag able to hold parts up to `max_part`.
    pub fn new(max_part: usize) -> Self {
        let cap = max_part.max(1);
        let mut top_bit = 1;
        while top_bit * 2 <= cap {
            top_bit *= 2;
        }
        PartBag {
            counts: vec![0; cap + 1],
            tree: vec![0; cap + 1],
            mass: 0,
            parts: 0,
            top_bit,
        }
    }

    pub fn from_parts(max_part: usize, parts: &[usize]) -> Self {
        let mut bag = PartBag::new(max_part);
        for &p in parts {
            bag.insert(p);
        }
        bag
    }

    pub fn from_partition(p: &Partition) -> Self {
        PartBag::from_parts(p.n(), p.parts())
    }

    pub fn capacity(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn mass(&self) -> usize {
        self.mass
    }

    pub fn num_parts(&self) -> usize {
        self.parts
    }

    pub fn count(&self, size: usize) -> usize {
        self.counts.get(size).copied().unwrap_or(0)
    }

    fn add(&mut self, size: usize, delta: i64) {
        let mut i = size;
        while i < self.tree.len() {
            self.tree[i] = (self.tree[i] as i64 + delta) as u64;
            i += i & i.wrapping_neg();
        }
    }

    pub fn insert(&mut self, size: usize) {
        assert!(size >= 1 && size <= self.capacity(), "part {size} out of range");
        self.counts[size] += 1;
        self.mass += size;
        self.parts += 1;
        self.add(size, size as i64);
    }

    pub fn remove(&mut self, size: usize) {
        assert!(self.count(size) > 0, "no part of size {size}");
        self.counts[size] -= 1;
        self.mass -= size;
        self.parts -= 1;
        self.add(size, -(size as i64));
    }

    /// Mass carried by parts of size at most `size`.
    fn prefix(&self, size: usize) -> u64 {
        let mut i = size.min(self.capacity());
        let mut acc = 0;
        while i > 0 {
            acc += self.tree[i];
            i &= i - 1;
        }
        acc
    }

    /// Total size of parts that are at least `x`.
    pub fn mass_at_least(&self, x: f64) -> usize {
        if x <= 1.0 {
            return self.mass;
        }
        let below = x.ceil() as usize - 1;
        self.mass - self.prefix(below) as usize
    }

    /// The part covering position `pos` in `0..mass`.
    pub fn locate(&self, pos: usize) -> Located {
        assert!(pos < self.mass, "position {pos} beyond mass {}", self.mass);
        let mut idx = 0;
        let mut rem = pos as u64;
        let mut step = self.top_bit;
        while step > 0 {
            let next = idx + step;
            if next < self.tree.len() && self.tree[next] <= rem {
                idx = next;
                rem -= self.tree[next];
            }
            step /= 2;
        }
        let size = idx + 1;
        let rem = rem as usize;
        Located {
            size,
            index: rem / size,
            offset: rem % size,
        }
    }

    /// Parts in non-increasing order.
    pub fn parts_desc(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.parts);
        for size in (1..self.counts.len()).rev() {
            out.extend(std::iter::repeat_n(size, self.counts[size]));
        }
        out
    }

    /// The `k` largest parts, non-increasing.
    pub fn largest(&self, k: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(k);
        for size in (1..self.counts.len()).rev() {
            for _ in 0..self.counts[size] {
                if out.len() == k {
                    return out;
                }
                out.push(size);
            }
        }
        out
    }

    pub fn to_partition(&self) -> Option<Partition> {
        if self.parts == 0 {
            None
        } else {
            Some(Partition::from_sorted(self.parts_desc()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locate_walks_classes_in_size_order() {
        let bag = PartBag::from_parts(10, &[3, 1, 3, 2]);
        assert_eq!(bag.mass(), 9);
        let located: Vec<(usize, usize, usize)> =
            (0..9).map(|p| bag.locate(p)).map(|l| (l.size, l.index, l.offset)).collect();
        assert_eq!(
            located,
            vec![
                (1, 0, 0),
                (2, 0, 0),
                (2, 0, 1),
                (3, 0, 0),
                (3, 0, 1),
                (3, 0, 2),
                (3, 1, 0),
                (3, 1, 1),
                (3, 1, 2)
            ]
        );
    }

    #[test]
    fn mass_at_least_matches_v_stat() {
        let p = Partition::new(vec![7, 4, 4, 2, 1, 1]).unwrap();
        let bag = PartBag::from_partition(&p);
        for x in [0.5, 1.0, 1.5, 2.0, 3.9, 4.0, 4.1, 7.0, 7.5, 100.0] {
            assert_eq!(bag.mass_at_least(x), crate::partition::v_stat(&p, x), "x = {x}");
        }
    }

    #[test]
    fn insert_remove_round_trip() {
        let mut bag = PartBag::new(16);
        for s in [5, 5, 1, 16, 3] {
            bag.insert(s);
        }
        bag.remove(5);
        bag.remove(16);
        assert_eq!(bag.parts_desc(), vec![5, 3, 1]);
        assert_eq!(bag.largest(2), vec![5, 3]);
        assert_eq!(bag.mass(), 9);
        assert_eq!(bag.num_parts(), 3);
    }

    proptest::proptest! {
        #[test]
        fn locate_agrees_with_concatenation(parts in proptest::collection::vec(1usize..30, 1..20)) {
            let bag = PartBag::from_parts(30, &parts);
            let mut sorted = parts.clone();
            sorted.sort_unstable();
            let mut pos = 0;
            let mut seen_of_size = std::collections::HashMap::new();
            for &s in &sorted {
                let idx = *seen_of_size.entry(s).and_modify(|c| *c += 1).or_insert(0usize);
                for off in 0..s {
                    let l = bag.locate(pos);
                    proptest::prop_assert_eq!((l.size, l.index, l.offset), (s, idx, off));
                    pos += 1;
                }
            }
        }
    }
}
