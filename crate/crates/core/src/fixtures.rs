//! Small reference instances and the random instance generator used by the
//! experiment harness and the test suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::Instance;

/// The 4-item, 2-objective instance used throughout the tests.
/// Its exact front is `{(8,6), (4,9)}`.
pub fn t1() -> Instance {
    Instance::new("T1", 6, vec![2, 3, 4, 5], vec![vec![3, 5, 1, 4], vec![4, 2, 5, 3]]).expect("T1 is valid")
}

/// Random instance in the style of the classic `KP` benchmarks: costs and
/// profits uniform in `[1, 100]`, capacity `ceil(sum(c) / 2)`.
pub fn random_instance(items: usize, objectives: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_instance_with(&mut rng, items, objectives, format!("rand{items}-{objectives}-{seed}"))
}

pub fn random_instance_with<R: Rng + ?Sized>(rng: &mut R, items: usize, objectives: usize, name: String) -> Instance {
    let costs: Vec<i64> = (0..items).map(|_| rng.gen_range(1..=100)).collect();
    let profits: Vec<Vec<i64>> = (0..objectives)
        .map(|_| (0..items).map(|_| rng.gen_range(1..=100)).collect())
        .collect();
    let total: i64 = costs.iter().sum();
    let capacity = (total + 1) / 2;
    Instance::new(name, capacity, costs, profits).expect("generated instance is valid")
}
