//! Exact checks of the one-step growth and shrink bounds for the coupling
//! and for the walk's cycle sizes.
//!
//! For a neighbor pair with `s = b` and `m = c`:
//!
//! | lemma       | event after one step | bound                    | requires                      |
//! |-------------|----------------------|--------------------------|-------------------------------|
//! | `m_shrink`  | `m < x`              | `<= 2x²/n²`              | `x <= c`                      |
//! | `m_growth`  | `m >= x + y`         | `>= 2c(R - 2c)/n²`       | `x <= c`, `V_0(y) >= R`       |
//! | `s_shrink`  | `s < x`              | `<= 4x²/n²`              | `x <= b`                      |
//! | `s_growth`  | `s >= x + y`         | `>= 2b(R - 3x - 3y)/n²`  | `x <= b < x + y <= c`, `V_0(y) >= R` |
//!
//! `V_0(y)` is read on the first coordinate and `R` is taken equal to it,
//! the strongest admissible choice. A met pair has `s = n/2`, `m = n`.
//! All comparisons are exact.

use std::collections::BTreeMap;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::coupling::{coupled_joint, neighbor_pairs, JointDistribution};
use crate::error::{guard, Error, Result};
use crate::partition::{pair_stats, partitions_of, v_stat, PairStats, Partition};

/// Largest `n` accepted by [`run_grid`].
pub const MAX_GRID_N: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma {
    CycleShrink,
    MShrink,
    MGrowth,
    SShrink,
    SGrowth,
}

impl Lemma {
    pub const ALL: [Lemma; 5] = [Lemma::CycleShrink, Lemma::MShrink, Lemma::MGrowth, Lemma::SShrink, Lemma::SGrowth];

    pub fn name(self) -> &'static str {
        match self {
            Lemma::CycleShrink => "cycle_shrink",
            Lemma::MShrink => "m_shrink",
            Lemma::MGrowth => "m_growth",
            Lemma::SShrink => "s_shrink",
            Lemma::SGrowth => "s_growth",
        }
    }

    /// Whether the left side must be at most (rather than at least) the bound.
    pub fn is_upper_bound(self) -> bool {
        matches!(self, Lemma::CycleShrink | Lemma::MShrink | Lemma::SShrink)
    }
}

fn ratio_str<S: Serializer>(r: &Ratio<i64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

fn opt_partition<S: Serializer>(p: &Option<Partition>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match p {
        Some(p) => s.serialize_some(&p.to_string()),
        None => s.serialize_none(),
    }
}

fn partition_str<S: Serializer>(p: &Partition, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&p.to_string())
}

/// One evaluated instance of a bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LemmaReport {
    pub lemma: Lemma,
    pub n: usize,
    #[serde(serialize_with = "partition_str")]
    pub x_part: Partition,
    #[serde(serialize_with = "opt_partition")]
    pub y_part: Option<Partition>,
    pub x: usize,
    pub y: Option<usize>,
    pub r: Option<usize>,
    #[serde(serialize_with = "ratio_str")]
    pub lhs: Ratio<i64>,
    #[serde(serialize_with = "ratio_str")]
    pub rhs: Ratio<i64>,
    pub holds: bool,
}

impl LemmaReport {
    #[allow(clippy::too_many_arguments)]
    fn new(
        lemma: Lemma,
        x_part: &Partition,
        y_part: Option<&Partition>,
        x: usize,
        y: Option<usize>,
        r: Option<usize>,
        lhs_weight: i64,
        rhs_weight: i64,
    ) -> Self {
        let n = x_part.n();
        let denom = (n * n) as i64;
        let holds = if lemma.is_upper_bound() {
            lhs_weight <= rhs_weight
        } else {
            lhs_weight >= rhs_weight
        };
        LemmaReport {
            lemma,
            n,
            x_part: x_part.clone(),
            y_part: y_part.cloned(),
            x,
            y,
            r,
            lhs: Ratio::new(lhs_weight, denom),
            rhs: Ratio::new(rhs_weight, denom),
            holds,
        }
    }
}

/// Expected number of labels whose cycle shrinks to below `x` in one step,
/// as a weight over `n²`.
pub fn cycle_shrink_weight(p: &Partition, x: usize) -> u64 {
    let mut acc = 0;
    for &a in p.parts() {
        // Split point d has probability a/n² and leaves pieces d and a - d.
        for d in 1..a {
            let small = |k: usize| if k < x { k } else { 0 };
            acc += (a * (small(d) + small(a - d))) as u64;
        }
    }
    acc
}

/// Checks that the expected count is at most `x²/n`.
pub fn verify_cycle_shrink(p: &Partition, x: usize) -> Result<LemmaReport> {
    if x == 0 {
        return Err(Error::InvalidInput("x must be positive".into()));
    }
    let n = p.n();
    let lhs = cycle_shrink_weight(p, x) as i64;
    Ok(LemmaReport::new(Lemma::CycleShrink, p, None, x, None, None, lhs, (x * x * n) as i64))
}

/// Post-step pair statistics with their weights over `n²`.
fn outcome_stats(joint: &JointDistribution) -> Vec<(PairStats, u64)> {
    let mut out: BTreeMap<(Ratio<u64>, Ratio<u64>), u64> = BTreeMap::new();
    for (p, q, w) in joint.iter() {
        let st = pair_stats(p, q).expect("coupled pairs are neighbors");
        *out.entry((st.s, st.m)).or_insert(0) += w;
    }
    out.into_iter().map(|((s, m), w)| (PairStats { s, m }, w)).collect()
}

fn weight_where(outcomes: &[(PairStats, u64)], pred: impl Fn(&PairStats) -> bool) -> i64 {
    outcomes.iter().filter(|(st, _)| pred(st)).map(|&(_, w)| w as i64).sum()
}

fn int(v: usize) -> Ratio<u64> {
    Ratio::from_integer(v as u64)
}

/// A neighbor pair with its one-step outcome statistics.
struct PairCase<'a> {
    x_part: &'a Partition,
    y_part: &'a Partition,
    b: usize,
    c: usize,
    outcomes: Vec<(PairStats, u64)>,
}

impl<'a> PairCase<'a> {
    fn new(x_part: &'a Partition, y_part: &'a Partition, joint: &JointDistribution) -> Result<Self> {
        let st = pair_stats(x_part, y_part)?;
        if x_part == y_part {
            return Err(Error::NotNeighbors(x_part.to_string(), y_part.to_string()));
        }
        Ok(PairCase {
            x_part,
            y_part,
            b: *st.s.numer() as usize,
            c: *st.m.numer() as usize,
            outcomes: outcome_stats(joint),
        })
    }

    fn n(&self) -> usize {
        self.x_part.n()
    }

    fn m_shrink(&self, x: usize) -> Option<LemmaReport> {
        if x == 0 || x > self.c {
            return None;
        }
        let lhs = weight_where(&self.outcomes, |st| st.m < int(x));
        Some(LemmaReport::new(Lemma::MShrink, self.x_part, Some(self.y_part), x, None, None, lhs, (2 * x * x) as i64))
    }

    fn m_growth(&self, x: usize, y: usize) -> Option<LemmaReport> {
        if x == 0 || y == 0 || x > self.c {
            return None;
        }
        let r = v_stat(self.x_part, y as f64);
        let lhs = weight_where(&self.outcomes, |st| st.m >= int(x + y));
        let rhs = 2 * self.c as i64 * (r as i64 - 2 * self.c as i64);
        Some(LemmaReport::new(Lemma::MGrowth, self.x_part, Some(self.y_part), x, Some(y), Some(r), lhs, rhs))
    }

    fn s_shrink(&self, x: usize) -> Option<LemmaReport> {
        if x == 0 || x > self.b {
            return None;
        }
        let lhs = weight_where(&self.outcomes, |st| st.s < int(x));
        Some(LemmaReport::new(Lemma::SShrink, self.x_part, Some(self.y_part), x, None, None, lhs, (4 * x * x) as i64))
    }

    fn s_growth(&self, x: usize, y: usize) -> Option<LemmaReport> {
        if x == 0 || y == 0 || x > self.b || self.b >= x + y || x + y > self.c {
            return None;
        }
        let r = v_stat(self.x_part, y as f64);
        let lhs = weight_where(&self.outcomes, |st| st.s >= int(x + y));
        let rhs = 2 * self.b as i64 * (r as i64 - 3 * x as i64 - 3 * y as i64);
        Some(LemmaReport::new(Lemma::SGrowth, self.x_part, Some(self.y_part), x, Some(y), Some(r), lhs, rhs))
    }

    /// Every admissible instance for this pair.
    fn all(&self) -> Vec<LemmaReport> {
        let n = self.n();
        let mut out = Vec::new();
        for x in 1..=n {
            out.extend(self.m_shrink(x));
            out.extend(self.s_shrink(x));
            for y in 1..=n {
                out.extend(self.m_growth(x, y));
                out.extend(self.s_growth(x, y));
            }
        }
        out
    }
}

fn case_for<'a>(x_part: &'a Partition, y_part: &'a Partition) -> Result<PairCase<'a>> {
    PairCase::new(x_part, y_part, &coupled_joint(x_part, y_part)?)
}

/// `P{m(X_1, Y_1) < x} <= 2x²/n²`; `None` when `x` is not admissible.
pub fn verify_m_shrink(x_part: &Partition, y_part: &Partition, x: usize) -> Result<Option<LemmaReport>> {
    Ok(case_for(x_part, y_part)?.m_shrink(x))
}

/// `P{m(X_1, Y_1) >= x + y} >= 2c(R - 2c)/n²` with `R = V_0(y)` of `x_part`.
pub fn verify_m_growth(x_part: &Partition, y_part: &Partition, x: usize, y: usize) -> Result<Option<LemmaReport>> {
    Ok(case_for(x_part, y_part)?.m_growth(x, y))
}

/// `P{s(X_1, Y_1) < x} <= 4x²/n²`.
pub fn verify_s_shrink(x_part: &Partition, y_part: &Partition, x: usize) -> Result<Option<LemmaReport>> {
    Ok(case_for(x_part, y_part)?.s_shrink(x))
}

/// `P{s(X_1, Y_1) >= x + y} >= 2b(R - 3x - 3y)/n²` with `R = V_0(y)`.
pub fn verify_s_growth(x_part: &Partition, y_part: &Partition, x: usize, y: usize) -> Result<Option<LemmaReport>> {
    Ok(case_for(x_part, y_part)?.s_growth(x, y))
}

/// All admissible pair-lemma instances for one neighbor pair, evaluated on
/// the given joint law.
pub fn pair_reports(x_part: &Partition, y_part: &Partition, joint: &JointDistribution) -> Result<Vec<LemmaReport>> {
    Ok(PairCase::new(x_part, y_part, joint)?.all())
}

/// Counts and violations from a full grid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GridSummary {
    pub n_max: usize,
    /// Instances checked, per lemma.
    pub checked: BTreeMap<&'static str, usize>,
    /// Instances whose bound is vacuous (a non-positive lower bound).
    pub vacuous: BTreeMap<&'static str, usize>,
    pub violations: Vec<LemmaReport>,
}

impl GridSummary {
    fn record(&mut self, rep: LemmaReport) {
        *self.checked.entry(rep.lemma.name()).or_insert(0) += 1;
        if !rep.lemma.is_upper_bound() && rep.rhs <= Ratio::from_integer(0) {
            *self.vacuous.entry(rep.lemma.name()).or_insert(0) += 1;
        }
        if !rep.holds {
            self.violations.push(rep);
        }
    }

    pub fn total_checked(&self) -> usize {
        self.checked.values().sum()
    }
}

/// Checks every lemma on every admissible input for `n <= n_max`.
pub fn run_grid(n_max: usize) -> Result<GridSummary> {
    guard("n_max", n_max, MAX_GRID_N)?;
    let mut summary = GridSummary {
        n_max,
        ..GridSummary::default()
    };
    for n in 1..=n_max {
        for p in partitions_of(n) {
            for x in 1..=n {
                summary.record(verify_cycle_shrink(&p, x)?);
            }
        }
    }
    let pairs: Vec<_> = (2..=n_max).flat_map(neighbor_pairs).collect();
    let per_pair: Vec<Vec<LemmaReport>> = pairs
        .par_iter()
        .map(|(x, y)| Ok(case_for(x, y)?.all()))
        .collect::<Result<_>>()?;
    for rep in per_pair.into_iter().flatten() {
        summary.record(rep);
    }
    Ok(summary)
}

/// One JSON object per line.
pub fn to_json_lines(reports: &[LemmaReport]) -> String {
    reports
        .iter()
        .map(|r| serde_json::to_string(r).expect("reports serialize") + "\n")
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::joint_by_positions;
    use crate::walk::CyclePermutation;

    fn part(v: &[usize]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    #[test]
    fn cycle_shrink_examples() {
        for x in 1..=6 {
            let rep = verify_cycle_shrink(&Partition::ones(6), x).unwrap();
            assert_eq!(rep.lhs, Ratio::from_integer(0));
            assert!(rep.holds);
        }
        for n in 2..=12 {
            let rep = verify_cycle_shrink(&Partition::single(n), 2).unwrap();
            assert_eq!(rep.lhs, Ratio::new(2, n as i64));
            assert_eq!(rep.rhs, Ratio::new(4, n as i64));
        }
        assert!(verify_cycle_shrink(&Partition::single(3), 0).is_err());
    }

    /// Count labels whose cycle shrinks below `x` over all `n²` pairs.
    fn cycle_shrink_by_labels(p: &Partition, x: usize) -> u64 {
        let n = p.n();
        let base = CyclePermutation::with_cycle_type(p);
        let mut acc = 0;
        for u in 0..n {
            for v in 0..n {
                let mut perm = base.clone();
                perm.apply_transposition(u, v).unwrap();
                acc += (0..n)
                    .filter(|&w| {
                        let after = perm.cycle_size_of(w);
                        after < base.cycle_size_of(w) && after < x
                    })
                    .count() as u64;
            }
        }
        acc
    }

    #[test]
    fn cycle_shrink_two_routes() {
        for n in 1..=8 {
            for p in partitions_of(n) {
                for x in 1..=n + 1 {
                    assert_eq!(cycle_shrink_weight(&p, x), cycle_shrink_by_labels(&p, x), "{p} x={x}");
                }
            }
        }
    }

    #[test]
    fn s_shrink_on_first_example() {
        let (x, y) = (part(&[2, 3]), part(&[5]));
        let rep = verify_s_shrink(&x, &y, 2).unwrap().unwrap();
        // s = 1 after ((3,1,1),(4,1)) and ((5),(4,1)), 2/25 each.
        assert_eq!(rep.lhs, Ratio::new(4, 25));
        assert_eq!(rep.rhs, Ratio::new(16, 25));
        assert!(rep.holds);
        assert!(verify_s_shrink(&x, &y, 3).unwrap().is_none());
    }

    #[test]
    fn vacuous_and_skipped() {
        let (x, y) = (part(&[2, 3]), part(&[5]));
        let rep = verify_m_growth(&x, &y, 1, 5).unwrap().unwrap();
        assert_eq!(rep.r, Some(0));
        assert!(rep.rhs < Ratio::from_integer(0));
        assert!(rep.holds);
        assert!(verify_m_growth(&x, &y, 4, 1).unwrap().is_none());
        assert!(verify_s_growth(&x, &y, 2, 3).unwrap().is_none());
        assert!(verify_s_growth(&x, &y, 1, 2).unwrap().is_some());
        assert!(matches!(verify_m_shrink(&x, &x, 1), Err(Error::NotNeighbors(..))));
    }

    #[test]
    fn grid_two_routes_agree() {
        for n in 2..=8 {
            for (x, y) in neighbor_pairs(n) {
                let a = pair_reports(&x, &y, &coupled_joint(&x, &y).unwrap()).unwrap();
                let b = pair_reports(&x, &y, &joint_by_positions(&x, &y).unwrap()).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn grid_small_has_no_violations() {
        let summary = run_grid(9).unwrap();
        assert!(summary.violations.is_empty(), "{}", to_json_lines(&summary.violations));
        for lemma in Lemma::ALL {
            assert!(summary.checked[lemma.name()] > 0, "{}", lemma.name());
        }
        assert!(matches!(run_grid(15), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn reports_serialize_as_lines() {
        let rep = verify_s_shrink(&part(&[2, 3]), &part(&[5]), 1).unwrap().unwrap();
        let text = to_json_lines(&[rep.clone(), rep]);
        assert_eq!(text.lines().count(), 2);
        let v: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(v["lemma"], "s_shrink");
        assert_eq!(v["x_part"], "(3,2)");
        assert_eq!(v["lhs"], "0");
    }
}
