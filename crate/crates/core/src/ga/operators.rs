//! Seeding, crossover and mutation on slicing-tree chromosomes.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::matrix::Matrix;
use crate::slicing::Chromosome;

/// The two disjoint department pairs with the largest undirected flow
/// `f_ij + f_ji` (ties go to the lower indices). 0-based.
pub fn top_flow_pairs(flow: &Matrix) -> ((usize, usize), (usize, usize)) {
    let n = flow.n();
    let pair_flow = |i: usize, j: usize| flow[(i, j)] + flow[(j, i)];
    let best_pair = |exclude: &[usize]| {
        let mut best: Option<((usize, usize), f64)> = None;
        for i in 0..n {
            for j in i + 1..n {
                if exclude.contains(&i) || exclude.contains(&j) {
                    continue;
                }
                let f = pair_flow(i, j);
                if best.is_none_or(|(_, b)| f > b) {
                    best = Some(((i, j), f));
                }
            }
        }
        best.map(|(p, _)| p).expect("n >= 4 leaves a disjoint pair")
    };
    let first = best_pair(&[]);
    let second = best_pair(&[first.0, first.1]);
    (first, second)
}

/// Heuristic initial chromosome: the heaviest-flow pair closes the
/// department sequence and is cut last (slice `n-1` at the end), the next
/// pair opens it and is cut by slice 2 immediately followed by slice 1.
/// Both pairs therefore end up sharing an edge. Falls back to a random
/// chromosome for `n < 5`.
pub fn seed_chromosome<R: Rng + ?Sized>(n: usize, flow: &Matrix, rng: &mut R) -> Chromosome {
    if n < 5 {
        log::debug!("seeding needs n >= 5, drawing a random chromosome for n = {n}");
        return Chromosome::random(n, rng);
    }
    let ((a, b), (c, d)) = top_flow_pairs(flow);
    let mut first = [a + 1, b + 1];
    first.shuffle(rng);
    let mut second = [c + 1, d + 1];
    second.shuffle(rng);
    let used = [a, b, c, d];
    let mut middle: Vec<usize> = (0..n).filter(|i| !used.contains(i)).map(|i| i + 1).collect();
    middle.shuffle(rng);
    let mut dept_seq = Vec::with_capacity(n);
    dept_seq.extend_from_slice(&second);
    dept_seq.extend(middle);
    dept_seq.extend_from_slice(&first);

    // slicing sequence, 1-based positions 1..=n-1
    let m = n - 1;
    let mut slice_seq = vec![0usize; m];
    slice_seq[m - 1] = n - 1;
    let n_hat = rng.random_range(1..=n - 2);
    let pos2 = if n_hat != n - 2 {
        n_hat
    } else if rng.random::<bool>() {
        n - 3
    } else {
        1
    };
    slice_seq[pos2 - 1] = 2;
    slice_seq[pos2] = 1;
    let mut rest: Vec<usize> = (3..n - 1).collect();
    rest.shuffle(rng);
    let mut rest = rest.into_iter();
    for s in slice_seq.iter_mut() {
        if *s == 0 {
            *s = rest.next().expect("remaining slice numbers fill remaining slots");
        }
    }
    let orient = (0..m).map(|_| rng.random::<bool>()).collect();
    Chromosome::from_parts_unchecked(dept_seq, slice_seq, orient)
}

/// One-point repair: `head[..cut]`, then the genes found in neither the head
/// nor the deduplicated tail (ordered as in `tail`), then `tail[cut..]`
/// without genes already in the head.
pub fn one_point_perm(head: &[usize], tail: &[usize], cut: usize) -> Vec<usize> {
    let len = head.len();
    let mut in_child = vec![false; len + 1];
    let mut child: Vec<usize> = head[..cut].to_vec();
    for &g in &child {
        in_child[g] = true;
    }
    let rest: Vec<usize> = tail[cut..].iter().copied().filter(|&g| !in_child[g]).collect();
    for &g in &rest {
        in_child[g] = true;
    }
    child.extend(tail.iter().copied().filter(|&g| !in_child[g]));
    child.extend(rest);
    child
}

/// Two-point repair: positions `lo..hi` come from `middle`, the others are
/// filled left to right with `outer`'s genes not in that segment.
pub fn two_point_perm(outer: &[usize], middle: &[usize], lo: usize, hi: usize) -> Vec<usize> {
    let len = outer.len();
    let mut in_middle = vec![false; len + 1];
    for &g in &middle[lo..hi] {
        in_middle[g] = true;
    }
    let mut fill = outer.iter().copied().filter(|&g| !in_middle[g]);
    (0..len).map(|k| if (lo..hi).contains(&k) { middle[k] } else { fill.next().expect("sizes match") }).collect()
}

/// One-point crossover keeping the first `cut` department genes of each
/// parent (`1 <= cut <= n-1`). The slicing row uses the same repair with the
/// cut clamped to `n-2`; orientation bits are exchanged at that point.
pub fn one_point_crossover_at(p1: &Chromosome, p2: &Chromosome, cut: usize) -> (Chromosome, Chromosome) {
    let n = p1.n();
    assert_eq!(n, p2.n(), "parents differ in size");
    assert!((1..n).contains(&cut), "cut {cut} outside 1..{n}");
    let sc = cut.min(n.saturating_sub(2));
    let child = |a: &Chromosome, b: &Chromosome| {
        let dept = one_point_perm(a.dept_seq(), b.dept_seq(), cut);
        let slice = one_point_perm(a.slice_seq(), b.slice_seq(), sc);
        let orient = a.orient()[..sc].iter().chain(&b.orient()[sc..]).copied().collect();
        Chromosome::from_parts_unchecked(dept, slice, orient)
    };
    (child(p1, p2), child(p2, p1))
}

/// Two-point crossover: department positions `lo..hi` (0-based, i.e. the
/// 1-based positions `lo+1..=hi`) are swapped between parents and the rest
/// repaired in parent order. Slicing and orientation rows use the same cuts
/// clamped to their length.
pub fn two_point_crossover_at(p1: &Chromosome, p2: &Chromosome, lo: usize, hi: usize) -> (Chromosome, Chromosome) {
    let n = p1.n();
    assert_eq!(n, p2.n(), "parents differ in size");
    assert!(lo <= hi && hi <= n, "bad segment {lo}..{hi} for n = {n}");
    let shi = hi.min(n - 1);
    let slo = lo.min(shi);
    let child = |a: &Chromosome, b: &Chromosome| {
        let dept = two_point_perm(a.dept_seq(), b.dept_seq(), lo, hi);
        let slice = two_point_perm(a.slice_seq(), b.slice_seq(), slo, shi);
        let orient = (0..n - 1).map(|k| if (slo..shi).contains(&k) { b.orient()[k] } else { a.orient()[k] }).collect();
        Chromosome::from_parts_unchecked(dept, slice, orient)
    };
    (child(p1, p2), child(p2, p1))
}

pub fn one_point_crossover<R: Rng + ?Sized>(p1: &Chromosome, p2: &Chromosome, rng: &mut R) -> (Chromosome, Chromosome) {
    let cut = rng.random_range(1..p1.n());
    one_point_crossover_at(p1, p2, cut)
}

pub fn two_point_crossover<R: Rng + ?Sized>(p1: &Chromosome, p2: &Chromosome, rng: &mut R) -> (Chromosome, Chromosome) {
    let n = p1.n();
    if n < 3 {
        return one_point_crossover(p1, p2, rng);
    }
    let a = rng.random_range(1..n);
    let mut b = rng.random_range(1..n - 1);
    if b >= a {
        b += 1;
    }
    two_point_crossover_at(p1, p2, a.min(b), a.max(b))
}

/// 1-based inclusive range of department positions that mutation may swap:
/// `2 < N1 < N2 < n-1`, widened to `2..=n-1` and then `1..=n` when too small.
pub fn mutation_positions(n: usize) -> (usize, usize) {
    if n >= 6 {
        (3, n - 2)
    } else if n >= 4 {
        (2, n - 1)
    } else {
        (1, n)
    }
}

/// Swaps department positions `n1` and `n2` (1-based) and optionally flips
/// orientation bit `flip` (0-based).
pub fn mutate_at(parent: &Chromosome, n1: usize, n2: usize, flip: Option<usize>) -> Chromosome {
    let mut child = parent.clone();
    let (dept, _, orient) = child.parts_mut();
    dept.swap(n1 - 1, n2 - 1);
    if let Some(k) = flip {
        orient[k] = !orient[k];
    }
    child
}

pub fn mutate<R: Rng + ?Sized>(parent: &Chromosome, flip_orient: bool, rng: &mut R) -> Chromosome {
    let (lo, hi) = mutation_positions(parent.n());
    let a = rng.random_range(lo..=hi);
    let mut b = rng.random_range(lo..hi);
    if b >= a {
        b += 1;
    }
    let flip = if flip_orient && rng.random::<bool>() { Some(rng.random_range(0..parent.n() - 1)) } else { None };
    mutate_at(parent, a.min(b), a.max(b), flip)
}
