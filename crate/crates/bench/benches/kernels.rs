use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use rtcouple::chain::{transition_distribution, PartitionWalk};
use rtcouple::coupling::coupled_joint;
use rtcouple::schramm::default_start;
use rtcouple::{trial_rng, CoupledChain, CyclePermutation, Partition};

fn kernel(c: &mut Criterion) {
    let p = Partition::new(vec![5, 4, 3, 3, 2, 1, 1, 1]).unwrap();
    c.bench_function("transition_distribution n=20", |b| {
        b.iter(|| transition_distribution(black_box(&p)))
    });

    let x = Partition::new(vec![6, 3, 2, 1]).unwrap();
    let y = Partition::new(vec![6, 5, 1]).unwrap();
    c.bench_function("coupled_joint n=12", |b| b.iter(|| coupled_joint(black_box(&x), black_box(&y)).unwrap()));
}

fn steps(c: &mut Criterion) {
    const STEPS: usize = 1000;
    let n = 10_000;

    c.bench_function("partition walk 1000 steps n=1e4", |b| {
        b.iter_batched(
            || (PartitionWalk::new(&Partition::ones(n)), trial_rng(1, 0)),
            |(mut walk, mut rng)| {
                for _ in 0..STEPS {
                    walk.step(&mut rng);
                }
                walk
            },
            BatchSize::SmallInput,
        )
    });

    let (x0, y0) = default_start(n);
    c.bench_function("coupled chain 1000 steps n=1e4", |b| {
        b.iter_batched(
            || (CoupledChain::new(&x0, &y0).unwrap(), trial_rng(2, 0)),
            |(mut chain, mut rng)| {
                for _ in 0..STEPS {
                    chain.step(&mut rng);
                }
                chain
            },
            BatchSize::SmallInput,
        )
    });

    c.bench_function("transposition walk 1000 steps n=1e4", |b| {
        b.iter_batched(
            || (CyclePermutation::identity(n), trial_rng(3, 0)),
            |(mut perm, mut rng)| {
                for _ in 0..STEPS {
                    perm.walk_step(&mut rng);
                }
                perm
            },
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, kernel, steps);
criterion_main!(benches);
