//! Penalized material-handling objective.
//!
//! `sum f_ij d_ij + p_inf * (V_feas - V_all) + sum Re_i * ReCost_i`, where the
//! gap `V_feas - V_all` adapts as better layouts are seen.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::slicing::Layout;

/// Sum over ordered pairs `i != j` of `flow_ij * d_ij`.
pub fn handling_cost(layout: &Layout, flow: &Matrix) -> Result<f64> {
    let n = layout.n();
    if flow.n() != n {
        return Err(Error::Dimension { expected: n, got: flow.n() });
    }
    Ok(handling_cost_unchecked(layout, flow))
}

pub(crate) fn handling_cost_unchecked(layout: &Layout, flow: &Matrix) -> f64 {
    let c = layout.centers();
    let n = c.len();
    let mut total = 0.0;
    for i in 0..n {
        let row = flow.row(i);
        for j in 0..n {
            if i != j && row[j] != 0.0 {
                total += row[j] * ((c[i].0 - c[j].0).abs() + (c[i].1 - c[j].1).abs());
            }
        }
    }
    total
}

/// Same as [`handling_cost`] but against a precomputed distance matrix.
pub fn handling_cost_from_distances(dist: &Matrix, flow: &Matrix) -> f64 {
    let n = dist.n();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                total += flow[(i, j)] * dist[(i, j)];
            }
        }
    }
    total
}

/// Best handling costs seen so far: `v_feas` over fully feasible layouts,
/// `v_all` over every layout.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PenaltyState {
    v_feas: Option<f64>,
    v_all: Option<f64>,
}

impl PenaltyState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn v_feas(&self) -> Option<f64> {
        self.v_feas
    }

    pub fn v_all(&self) -> Option<f64> {
        self.v_all
    }

    pub fn is_initialized(&self) -> bool {
        self.v_all.is_some()
    }

    /// Records a layout's handling cost.
    pub fn observe(&mut self, handling: f64, p_inf: usize) {
        self.v_all = Some(self.v_all.map_or(handling, |v| v.min(handling)));
        if p_inf == 0 {
            self.v_feas = Some(self.v_feas.map_or(handling, |v| v.min(handling)));
        }
    }

    /// Folds another state in; the result is independent of merge order.
    pub fn merge(&mut self, other: &PenaltyState) {
        let min = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, None) => x,
            (None, y) => y,
        };
        self.v_all = min(self.v_all, other.v_all);
        self.v_feas = min(self.v_feas, other.v_feas);
    }

    /// `max(0, V_feas - V_all)`, or 0 while no feasible layout has been seen.
    pub fn gap(&self) -> f64 {
        match (self.v_feas, self.v_all) {
            (Some(f), Some(a)) => (f - a).max(0.0),
            _ => 0.0,
        }
    }

    pub fn penalty(&self, p_inf: usize) -> f64 {
        p_inf as f64 * self.gap()
    }
}

/// Per-department rearrangement flags and the cost charged when set.
#[derive(Debug, Clone, PartialEq)]
pub struct RearrangementAssessment {
    pub re_flags: Vec<bool>,
    pub costs: Vec<f64>,
}

impl RearrangementAssessment {
    /// Static mode: nothing is ever rearranged.
    pub fn none(n: usize) -> Self {
        Self { re_flags: vec![false; n], costs: vec![0.0; n] }
    }

    pub fn with_uniform_cost(mut self, cost: f64) -> Self {
        self.costs = vec![cost; self.re_flags.len()];
        self
    }

    pub fn moved(&self) -> usize {
        self.re_flags.iter().filter(|&&f| f).count()
    }

    pub fn total(&self) -> f64 {
        self.re_flags.iter().zip(&self.costs).filter(|(&f, _)| f).map(|(_, &c)| c).sum()
    }
}

/// A department is rearranged when its center moves (rectilinear) or either
/// dimension changes by more than `eps`. Costs are left at zero.
pub fn assess_rearrangement(layout: &Layout, initial: &Layout, eps: f64) -> Result<RearrangementAssessment> {
    if layout.n() != initial.n() {
        return Err(Error::Dimension { expected: initial.n(), got: layout.n() });
    }
    let re_flags = layout
        .rects
        .iter()
        .zip(&initial.rects)
        .map(|(a, b)| {
            let (ax, ay) = a.center();
            let (bx, by) = b.center();
            (ax - bx).abs() + (ay - by).abs() > eps || (a.w - b.w).abs() > eps || (a.h - b.h).abs() > eps
        })
        .collect();
    Ok(RearrangementAssessment { re_flags, costs: vec![0.0; layout.n()] })
}

/// Updates `state` with this layout and returns the penalized objective.
pub fn penalized_objective(
    layout: &Layout,
    flow: &Matrix,
    state: &mut PenaltyState,
    rearr: &RearrangementAssessment,
) -> Result<f64> {
    if rearr.re_flags.len() != layout.n() {
        return Err(Error::Dimension { expected: layout.n(), got: rearr.re_flags.len() });
    }
    let handling = handling_cost(layout, flow)?;
    state.observe(handling, layout.p_inf);
    Ok(handling + state.penalty(layout.p_inf) + rearr.total())
}
