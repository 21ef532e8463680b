//! Slicing-tree chromosomes and their decoding into rectangle partitions.
//!
//! A chromosome has three rows: a department sequence (permutation of
//! `1..=n`), a slicing sequence (permutation of `1..=n-1`) and one
//! orientation bit per slicing-sequence column. Slice number `k` cuts between
//! department-sequence positions `k` and `k + 1`; slices are applied in
//! slicing-sequence order, each one splitting the block that still spans
//! that boundary in proportion to the areas on either side.

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chromosome {
    dept_seq: Vec<usize>,
    slice_seq: Vec<usize>,
    /// `true` = vertical cut, `false` = horizontal cut.
    orient: Vec<bool>,
}

fn is_permutation(seq: &[usize], len: usize) -> bool {
    if seq.len() != len {
        return false;
    }
    let mut seen = vec![false; len];
    for &g in seq {
        if g == 0 || g > len || seen[g - 1] {
            return false;
        }
        seen[g - 1] = true;
    }
    true
}

impl Chromosome {
    /// Validates and builds a chromosome. Genes are 1-based as in the usual
    /// matrix notation.
    pub fn new(dept_seq: Vec<usize>, slice_seq: Vec<usize>, orient: Vec<bool>) -> Result<Self> {
        let n = dept_seq.len();
        if n < 2 {
            return Err(Error::Codec(format!("need at least 2 departments, got {n}")));
        }
        if !is_permutation(&dept_seq, n) {
            return Err(Error::Codec(format!("department sequence {dept_seq:?} is not a permutation of 1..={n}")));
        }
        if !is_permutation(&slice_seq, n - 1) {
            return Err(Error::Codec(format!("slicing sequence {slice_seq:?} is not a permutation of 1..={}", n - 1)));
        }
        if orient.len() != n - 1 {
            return Err(Error::Codec(format!("expected {} orientation bits, got {}", n - 1, orient.len())));
        }
        Ok(Self { dept_seq, slice_seq, orient })
    }

    /// Builds from 0/1 orientation integers, as written in tables.
    pub fn from_rows(dept_seq: &[usize], slice_seq: &[usize], orient: &[u8]) -> Result<Self> {
        if let Some(b) = orient.iter().find(|&&b| b > 1) {
            return Err(Error::Codec(format!("orientation bit {b} is not 0 or 1")));
        }
        Self::new(dept_seq.to_vec(), slice_seq.to_vec(), orient.iter().map(|&b| b == 1).collect())
    }

    pub(crate) fn from_parts_unchecked(dept_seq: Vec<usize>, slice_seq: Vec<usize>, orient: Vec<bool>) -> Self {
        debug_assert!(Self::new(dept_seq.clone(), slice_seq.clone(), orient.clone()).is_ok());
        Self { dept_seq, slice_seq, orient }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut dept_seq: Vec<usize> = (1..=n).collect();
        dept_seq.shuffle(rng);
        let mut slice_seq: Vec<usize> = (1..n).collect();
        slice_seq.shuffle(rng);
        let orient = (1..n).map(|_| rng.random::<bool>()).collect();
        Self { dept_seq, slice_seq, orient }
    }

    pub fn n(&self) -> usize {
        self.dept_seq.len()
    }

    pub fn dept_seq(&self) -> &[usize] {
        &self.dept_seq
    }

    pub fn slice_seq(&self) -> &[usize] {
        &self.slice_seq
    }

    pub fn orient(&self) -> &[bool] {
        &self.orient
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut Vec<usize>, &mut Vec<usize>, &mut Vec<bool>) {
        (&mut self.dept_seq, &mut self.slice_seq, &mut self.orient)
    }

    pub fn is_valid(&self) -> bool {
        let n = self.n();
        n >= 2
            && is_permutation(&self.dept_seq, n)
            && is_permutation(&self.slice_seq, n - 1)
            && self.orient.len() == n - 1
    }
}

impl std::fmt::Display for Chromosome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let join = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(" ");
        writeln!(f, "{}", join(&mut self.dept_seq.iter().map(|g| g.to_string())))?;
        writeln!(f, "{}", join(&mut self.slice_seq.iter().map(|g| g.to_string())))?;
        write!(f, "{}", join(&mut self.orient.iter().map(|&b| u8::from(b).to_string())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn center(&self) -> (f64, f64) {
        (self.x + 0.5 * self.w, self.y + 0.5 * self.h)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Orientation-free aspect ratio `max(w, h) / min(w, h)`.
    pub fn aspect(&self) -> f64 {
        self.w.max(self.h) / self.w.min(self.h)
    }

    pub fn overlap_area(&self, o: &Rect) -> f64 {
        let dx = (self.x + self.w).min(o.x + o.w) - self.x.max(o.x);
        let dy = (self.y + self.h).min(o.y + o.h) - self.y.max(o.y);
        dx.max(0.0) * dy.max(0.0)
    }

    /// Length of the boundary segment shared by two rectangles (0 if they
    /// only touch at a corner or not at all).
    pub fn shared_edge_length(&self, o: &Rect, tol: f64) -> f64 {
        let overlap = |a0: f64, a1: f64, b0: f64, b1: f64| (a1.min(b1) - a0.max(b0)).max(0.0);
        let touches_x = (self.x + self.w - o.x).abs() <= tol || (o.x + o.w - self.x).abs() <= tol;
        let touches_y = (self.y + self.h - o.y).abs() <= tol || (o.y + o.h - self.y).abs() <= tol;
        let mut len: f64 = 0.0;
        if touches_x {
            len = len.max(overlap(self.y, self.y + self.h, o.y, o.y + o.h));
        }
        if touches_y {
            len = len.max(overlap(self.x, self.x + self.w, o.x, o.x + o.w));
        }
        len
    }
}

/// One rectangle per department (index = id - 1) plus aspect-ratio flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub rects: Vec<Rect>,
    pub feasible: Vec<bool>,
    pub p_inf: usize,
}

impl Layout {
    pub fn new(rects: Vec<Rect>, max_ratios: &[f64]) -> Self {
        let feasible: Vec<bool> = rects.iter().zip(max_ratios).map(|(r, &cap)| r.aspect() <= cap).collect();
        let p_inf = feasible.iter().filter(|&&f| !f).count();
        Self { rects, feasible, p_inf }
    }

    pub fn n(&self) -> usize {
        self.rects.len()
    }

    pub fn centers(&self) -> Vec<(f64, f64)> {
        self.rects.iter().map(Rect::center).collect()
    }

    pub fn is_feasible(&self) -> bool {
        self.p_inf == 0
    }
}

/// Decodes a chromosome into a layout of the instance's facility.
pub fn decode(chromosome: &Chromosome, instance: &ProblemInstance) -> Result<Layout> {
    let n = instance.n();
    if chromosome.n() != n {
        return Err(Error::Codec(format!("chromosome has {} departments, instance has {n}", chromosome.n())));
    }
    if !chromosome.is_valid() {
        return Err(Error::Codec("chromosome rows are not valid permutations".into()));
    }
    let areas = instance.areas();
    let facility = Rect { x: 0.0, y: 0.0, w: instance.width, h: instance.height };
    let rects = decode_rects(chromosome, &areas, facility);
    Ok(Layout::new(rects, &instance.max_ratios()))
}

/// Core of [`decode`]; `chromosome` must already be valid for `areas.len()`.
pub(crate) fn decode_rects(chromosome: &Chromosome, areas: &[f64], facility: Rect) -> Vec<Rect> {
    let n = areas.len();
    // prefix[k] = total area of departments at positions 0..k
    let mut prefix = vec![0.0; n + 1];
    for (k, &d) in chromosome.dept_seq.iter().enumerate() {
        prefix[k + 1] = prefix[k] + areas[d - 1];
    }
    // Block (p, q, rect) spans 0-based positions p..=q.
    let mut blocks: Vec<(usize, usize, Rect)> = Vec::with_capacity(n);
    blocks.push((0, n - 1, facility));
    for (&slice, &vertical) in chromosome.slice_seq.iter().zip(&chromosome.orient) {
        // cut between 0-based positions k and k + 1
        let k = slice - 1;
        let idx = blocks
            .iter()
            .position(|&(p, q, _)| p <= k && k < q)
            .expect("every unapplied slice lies inside exactly one block");
        let (p, q, r) = blocks[idx];
        let left = prefix[k + 1] - prefix[p];
        let right = prefix[q + 1] - prefix[k + 1];
        let frac = left / (left + right);
        let (lo, hi) = if vertical {
            let w = r.w * frac;
            (Rect { x: r.x, y: r.y, w, h: r.h }, Rect { x: r.x + w, y: r.y, w: r.w - w, h: r.h })
        } else {
            let h = r.h * frac;
            (Rect { x: r.x, y: r.y, w: r.w, h }, Rect { x: r.x, y: r.y + h, w: r.w, h: r.h - h })
        };
        blocks[idx] = (p, k, lo);
        blocks.push((k + 1, q, hi));
    }
    let mut rects = vec![facility; n];
    for (p, q, r) in blocks {
        debug_assert_eq!(p, q);
        rects[chromosome.dept_seq[p] - 1] = r;
    }
    rects
}

/// Rectilinear center-to-center distances.
pub fn rectilinear_distances(layout: &Layout) -> Matrix {
    let c = layout.centers();
    Matrix::from_fn(c.len(), |i, j| (c[i].0 - c[j].0).abs() + (c[i].1 - c[j].1).abs())
}

/// Recovers a chromosome whose slicing structure reproduces `rects`, if the
/// rectangles form a guillotine partition of `facility`. Edges closer than
/// `tol` are treated as equal. Parent cuts precede their children in the
/// returned slice order.
pub fn encode(rects: &[Rect], facility: Rect, tol: f64) -> Option<Chromosome> {
    let n = rects.len();
    if n == 0 {
        return None;
    }
    let mut dept_seq = Vec::with_capacity(n);
    let mut cuts = Vec::with_capacity(n.saturating_sub(1));
    let ids: Vec<usize> = (0..n).collect();
    split_block(rects, &ids, facility, tol, &mut dept_seq, &mut cuts)?;
    let (slice_seq, orient) = cuts.into_iter().unzip();
    let c = Chromosome { dept_seq, slice_seq, orient };
    c.is_valid().then_some(c)
}

fn split_block(
    rects: &[Rect],
    ids: &[usize],
    block: Rect,
    tol: f64,
    dept_seq: &mut Vec<usize>,
    cuts: &mut Vec<(usize, bool)>,
) -> Option<()> {
    if let [only] = ids {
        dept_seq.push(only + 1);
        return Some(());
    }
    for vertical in [true, false] {
        let (start, end) = if vertical { (block.x, block.x + block.w) } else { (block.y, block.y + block.h) };
        let lo = |r: &Rect| if vertical { r.x } else { r.y };
        let hi = |r: &Rect| if vertical { r.x + r.w } else { r.y + r.h };
        let mut candidates: Vec<f64> =
            ids.iter().map(|&i| hi(&rects[i])).filter(|&c| c > start + tol && c < end - tol).collect();
        candidates.sort_by(f64::total_cmp);
        for c in candidates {
            let (first, second): (Vec<usize>, Vec<usize>) = ids.iter().partition(|&&i| hi(&rects[i]) <= c + tol);
            if second.iter().any(|&i| lo(&rects[i]) < c - tol) || first.is_empty() || second.is_empty() {
                continue;
            }
            let (a, b) = if vertical {
                (Rect { w: c - block.x, ..block }, Rect { x: c, w: block.x + block.w - c, ..block })
            } else {
                (Rect { h: c - block.y, ..block }, Rect { y: c, h: block.y + block.h - c, ..block })
            };
            cuts.push((dept_seq.len() + first.len(), vertical));
            split_block(rects, &first, a, tol, dept_seq, cuts)?;
            return split_block(rects, &second, b, tol, dept_seq, cuts);
        }
    }
    None
}

fn factorial(k: usize) -> BigUint {
    (1..=k).fold(BigUint::from(1u32), |acc, i| acc * i)
}

/// Size of the slicing-tree search space: `2^(n-1) n! (n-1)!`, or with the
/// four-department heuristic seeding `2^(n-1) ((n-4)!)^2 (n-1)`.
pub fn count_solutions(n: usize, seeded: bool) -> Result<BigUint> {
    if n < 1 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let pow = BigUint::from(1u32) << (n - 1);
    if seeded {
        if n < 5 {
            return Err(Error::Domain(format!("seeded counting fixes 4 departments and needs n >= 5, got {n}")));
        }
        let f = factorial(n - 4);
        Ok(pow * &f * &f * (n - 1))
    } else {
        Ok(pow * factorial(n) * factorial(n - 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Department, FlowModel};

    fn inst(w: f64, h: f64, areas: &[f64]) -> ProblemInstance {
        let departments =
            areas.iter().enumerate().map(|(k, &a)| Department { id: k + 1, area: a, max_ratio: 4.0 }).collect();
        let flows = FlowModel::deterministic(Matrix::zeros(areas.len())).unwrap();
        ProblemInstance::new(w, h, departments, flows).unwrap()
    }

    fn assert_rect(r: Rect, x: f64, y: f64, w: f64, h: f64) {
        for (a, b) in [(r.x, x), (r.y, y), (r.w, w), (r.h, h)] {
            assert!((a - b).abs() < 1e-12, "{r:?} != ({x}, {y}, {w}, {h})");
        }
    }

    #[test]
    fn two_departments_split_vertically() {
        let c = Chromosome::from_rows(&[1, 2], &[1], &[1]).unwrap();
        let l = decode(&c, &inst(2.0, 1.0, &[1.0, 1.0])).unwrap();
        assert_rect(l.rects[0], 0.0, 0.0, 1.0, 1.0);
        assert_rect(l.rects[1], 1.0, 0.0, 1.0, 1.0);
        let d = rectilinear_distances(&l);
        assert_eq!(d[(0, 1)], 1.0);
        assert_eq!(d[(0, 0)], 0.0);
    }

    #[test]
    fn three_departments_hand_executed() {
        // slice 2 (vertical): {1,2} vs {3}, A_L = 3, A_R = 1 -> width 1.5
        // slice 1 (horizontal) on {1,2}: bottom height 2 * 2/3
        let c = Chromosome::from_rows(&[1, 2, 3], &[2, 1], &[1, 0]).unwrap();
        let l = decode(&c, &inst(2.0, 2.0, &[2.0, 1.0, 1.0])).unwrap();
        assert_rect(l.rects[0], 0.0, 0.0, 1.5, 4.0 / 3.0);
        assert_rect(l.rects[1], 0.0, 4.0 / 3.0, 1.5, 2.0 / 3.0);
        assert_rect(l.rects[2], 1.5, 0.0, 0.5, 2.0);
        assert_eq!(l.feasible, vec![true, true, true]);
        assert_eq!(l.p_inf, 0);
    }

    #[test]
    fn aspect_flags_follow_caps() {
        let c = Chromosome::from_rows(&[1, 2, 3], &[2, 1], &[1, 0]).unwrap();
        let mut i = inst(2.0, 2.0, &[2.0, 1.0, 1.0]);
        i.departments[1].max_ratio = 2.0; // 1.5 x 2/3 -> 2.25
        i.departments[2].max_ratio = 4.0; // 0.5 x 2 -> 4 exactly
        let l = decode(&c, &i).unwrap();
        assert_eq!(l.feasible, vec![true, false, true]);
        assert_eq!(l.p_inf, 1);
    }

    #[test]
    fn invalid_chromosomes_are_rejected() {
        assert!(Chromosome::from_rows(&[1, 1, 3], &[2, 1], &[1, 0]).is_err());
        assert!(Chromosome::from_rows(&[1, 2, 3], &[2, 3], &[1, 0]).is_err());
        assert!(Chromosome::from_rows(&[1, 2, 3], &[2, 1], &[1]).is_err());
        assert!(Chromosome::from_rows(&[1, 2, 3], &[2, 1], &[1, 2]).is_err());
        let c = Chromosome::from_rows(&[1, 2], &[1], &[1]).unwrap();
        assert!(matches!(decode(&c, &inst(2.0, 2.0, &[2.0, 1.0, 1.0])), Err(Error::Codec(_))));
    }

    #[test]
    fn tabulated_counts() {
        assert_eq!(count_solutions(7, false).unwrap(), BigUint::from(232_243_200u64));
        assert_eq!(count_solutions(7, true).unwrap(), BigUint::from(13_824u64));
        assert_eq!(count_solutions(8, false).unwrap(), BigUint::from(26_011_238_400u64));
        assert_eq!(count_solutions(8, true).unwrap(), BigUint::from(516_096u64));
        assert!(matches!(count_solutions(4, true), Err(Error::Domain(_))));
    }

    #[test]
    fn shared_edge() {
        let a = Rect { x: 0.0, y: 0.0, w: 1.0, h: 1.0 };
        let b = Rect { x: 1.0, y: 0.5, w: 1.0, h: 1.0 };
        let c = Rect { x: 1.0, y: 1.0, w: 1.0, h: 1.0 };
        assert!((a.shared_edge_length(&b, 1e-12) - 0.5).abs() < 1e-12);
        assert_eq!(a.shared_edge_length(&c, 1e-12), 0.0);
    }
}
