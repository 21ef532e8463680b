//! Fixtures shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stoflp::{Department, FlowModel, Matrix, ProblemInstance};

/// Square facility with `n` departments of random area and interval flows.
pub fn fixture(n: usize, seed: u64) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let areas: Vec<f64> = (0..n).map(|_| rng.random_range(10.0..100.0)).collect();
    let side = areas.iter().sum::<f64>().sqrt();
    let lo = Matrix::from_fn(n, |i, j| if i == j { 0.0 } else { rng.random_range(0.0..20.0) });
    let hi = lo.map(|x| if x == 0.0 { 0.0 } else { x * 1.5 });
    let departments =
        areas.iter().enumerate().map(|(k, &area)| Department { id: k + 1, area, max_ratio: 4.0 }).collect();
    ProblemInstance::new(side, side, departments, FlowModel::new(lo, hi).expect("valid bounds"))
        .expect("areas tile the facility")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
