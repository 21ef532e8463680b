#![allow(dead_code)]

use rand::Rng;
use stoflp::{Department, FlowModel, Matrix, ProblemInstance};

/// Random instance with areas in `[1, 10)`, a facility of aspect `[0.5, 2)`
/// and flows with lower bounds in `[0, 10)` and widths in `[0, width)`.
pub fn random_instance<R: Rng>(n: usize, max_ratio: f64, width: f64, rng: &mut R) -> ProblemInstance {
    let areas: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..10.0)).collect();
    let total: f64 = areas.iter().sum();
    let aspect = rng.random_range(0.5..2.0);
    let w = (total * aspect).sqrt();
    let h = total / w;
    let lo = Matrix::from_fn(n, |i, j| if i == j { 0.0 } else { rng.random_range(0.0..10.0f64).floor() });
    let hi = Matrix::from_fn(n, |i, j| if i == j { 0.0 } else { lo[(i, j)] + rng.random_range(0.0..=width) });
    let departments = areas.iter().enumerate().map(|(k, &a)| Department { id: k + 1, area: a, max_ratio }).collect();
    ProblemInstance::new(w, h, departments, FlowModel::new(lo, hi).unwrap()).unwrap()
}

/// Every chromosome for `n` departments, in a fixed order.
pub fn all_chromosomes(n: usize) -> Vec<stoflp::Chromosome> {
    let depts = permutations(&(1..=n).collect::<Vec<_>>());
    let slices = permutations(&(1..n).collect::<Vec<_>>());
    let mut out = Vec::new();
    for d in &depts {
        for s in &slices {
            for mask in 0..(1u32 << (n - 1)) {
                let orient: Vec<u8> = (0..n - 1).map(|b| ((mask >> b) & 1) as u8).collect();
                out.push(stoflp::Chromosome::from_rows(d, s, &orient).unwrap());
            }
        }
    }
    out
}

pub fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}
