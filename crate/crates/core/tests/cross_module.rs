use num_rational::Ratio;
use proptest::prelude::*;

use rtcouple::chain::{move_from_positions, transition_distribution};
use rtcouple::coupling::{coupled_joint, joint_by_positions, neighbor_pairs};
use rtcouple::partition::{partitions_of, rho};
use rtcouple::schramm::{make_schedule, rootn_j};
use rtcouple::{trial_rng, CoupledChain, CyclePermutation, Partition};

#[test]
fn growth_schedule_fixture() {
    let s = make_schedule(10_000, rootn_j(10_000), 1.0 / 64.0, 0.5).unwrap();
    assert_eq!(s.k, 7);
    assert_eq!(s.tau_k(), 60_351);
    // Same schedule with 2^{j+1} rounded up to 22.
    let s = make_schedule(10_000, 22f64.log2() - 1.0, 1.0 / 64.0, 0.5).unwrap();
    assert_eq!((s.k, s.tau_k()), (7, 58_909));
    assert!(s.tau_k() > 10_000);
    // τ_K / n shrinks with n but only drops below 1 around n = 1e8.
    let ratio = |n: usize| {
        let s = make_schedule(n, rootn_j(n), 1.0 / 64.0, 0.5).unwrap();
        s.tau_k() as f64 / n as f64
    };
    let ratios: Vec<f64> = [10_000, 100_000, 1_000_000, 10_000_000, 100_000_000].map(ratio).to_vec();
    assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
    assert!(ratios[4] < 1.0);
}

#[test]
fn kernel_rows_follow_card_positions() {
    for n in 1..=9 {
        for p in partitions_of(n) {
            let row = transition_distribution(&p);
            let mut counts = std::collections::BTreeMap::new();
            for r in 0..n {
                for l in 0..n {
                    *counts.entry(move_from_positions(&p, r, l)).or_insert(0u64) += 1;
                }
            }
            assert_eq!(row.denom(), (n * n) as u64);
            for (q, w) in row.iter() {
                assert_eq!(counts[q], w, "{p} -> {q}");
            }
            assert_eq!(counts.len(), row.len());
        }
    }
}

#[test]
fn coupled_joint_matches_position_sampler() {
    for n in 2..=9 {
        for (x, y) in neighbor_pairs(n) {
            assert_eq!(coupled_joint(&x, &y).unwrap(), joint_by_positions(&x, &y).unwrap(), "{x} {y}");
        }
    }
}

fn partition_strategy() -> impl Strategy<Value = Partition> {
    prop::collection::vec(1usize..12, 1..10).prop_map(|v| Partition::new(v).unwrap())
}

proptest! {
    #[test]
    fn walk_projects_to_the_chain(p in partition_strategy(), seed in any::<u64>()) {
        let mut perm = CyclePermutation::with_cycle_type(&p);
        let mut rng = trial_rng(seed, 0);
        for _ in 0..50 {
            let before = perm.cycle_type();
            perm.walk_step(&mut rng);
            let after = perm.cycle_type();
            prop_assert!(transition_distribution(&before).weight(&after) > 0);
            prop_assert_eq!(&after, &perm.cycle_type_from_scratch());
        }
    }

    #[test]
    fn coupled_chain_stays_within_one_move(p in partition_strategy(), seed in any::<u64>()) {
        prop_assume!(p.parts()[0] >= 2);
        let q = p.split(0, 1);
        let mut chain = CoupledChain::new(&q, &p).unwrap();
        let mut rng = trial_rng(seed, 1);
        for _ in 0..200 {
            chain.step(&mut rng);
            let (x, y) = (chain.x(), chain.y());
            prop_assert_eq!(x.n(), p.n());
            if chain.is_met() {
                prop_assert_eq!(&x, &y);
            } else {
                prop_assert_eq!(rho(&x, &y).unwrap(), 1);
            }
        }
    }

    #[test]
    fn meet_probability_bound(p in partition_strategy()) {
        prop_assume!(p.parts()[0] >= 2 && p.n() <= 30);
        let q = p.split(0, 1);
        let joint = coupled_joint(&q, &p).unwrap();
        let n2 = (p.n() * p.n()) as u64;
        // The smaller differing part is 1 here, so the bound is 4/n².
        prop_assert!(Ratio::new(joint.diagonal_weight(), n2) >= Ratio::new(4, n2));
    }
}

