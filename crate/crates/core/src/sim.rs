//! Monte Carlo cost evaluation of fixed layouts under uniform random flows.
//!
//! Every replication draws one flow matrix and applies it to all layouts in
//! the batch (common random numbers). Rearrangement costs are drawn per
//! layout for departments that moved. Replication `r` always uses counter
//! `r` of the flow stream, so results do not depend on how replications are
//! split across threads.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::matrix::Matrix;
use crate::objective::RearrangementAssessment;
use crate::rng::{derive_seed, stream};
use crate::slicing::{rectilinear_distances, Layout};

const FLOW_STREAM: u64 = 0xF10;
const REARRANGE_STREAM: u64 = 0x2EA0_0000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub replications: usize,
    pub rng_seed: u64,
    pub life_cycle_scale: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { replications: 10_000, rng_seed: 0, life_cycle_scale: 1.0 }
    }
}

impl SimConfig {
    /// Default replication count with the instance's life-cycle scale.
    pub fn for_instance(instance: &ProblemInstance, rng_seed: u64) -> Self {
        Self { rng_seed, life_cycle_scale: instance.life_cycle_scale, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub counts: Vec<usize>,
    /// `samples[layout][replication]`
    pub samples: Vec<Vec<f64>>,
}

impl SimSummary {
    pub fn argmin_mean(&self) -> usize {
        self.means.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).expect("non-empty batch")
    }

    pub fn samples_csv(&self) -> String {
        let mut out = String::from("layout,replication,cost\n");
        for (l, s) in self.samples.iter().enumerate() {
            for (r, c) in s.iter().enumerate() {
                let _ = writeln!(out, "{l},{r},{c}");
            }
        }
        out
    }
}

fn draw_flows<R: Rng>(lower: &Matrix, upper: &Matrix, rng: &mut R) -> Matrix {
    let n = lower.n();
    let mut f = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (lo, hi) = (lower[(i, j)], upper[(i, j)]);
            f[(i, j)] = if lo == hi { lo } else { lo + (hi - lo) * rng.random::<f64>() };
        }
    }
    f
}

/// Simulates `replications` cost samples for every layout.
pub fn simulate_batch(
    layouts: &[Layout],
    instance: &ProblemInstance,
    rearr: &[RearrangementAssessment],
    config: &SimConfig,
) -> Result<SimSummary> {
    let n = instance.n();
    if layouts.is_empty() {
        return Err(Error::Simulation("no layouts to simulate".into()));
    }
    if config.replications < 2 {
        return Err(Error::Simulation(format!("need at least 2 replications, got {}", config.replications)));
    }
    if rearr.len() != layouts.len() {
        return Err(Error::Dimension { expected: layouts.len(), got: rearr.len() });
    }
    for (l, a) in layouts.iter().zip(rearr) {
        if l.n() != n {
            return Err(Error::Dimension { expected: n, got: l.n() });
        }
        if a.re_flags.len() != n {
            return Err(Error::Dimension { expected: n, got: a.re_flags.len() });
        }
    }
    let rc = instance.rearrange_cost;
    if rc.is_none() && rearr.iter().any(|a| a.moved() > 0) {
        return Err(Error::Simulation("rearrangement flags set but the instance has no rearrange_cost".into()));
    }
    let dists: Vec<Matrix> = layouts.iter().map(rectilinear_distances).collect();
    let (lower, upper) = (instance.flows.lower(), instance.flows.upper());
    let scale = config.life_cycle_scale;
    let flow_key = derive_seed(config.rng_seed, FLOW_STREAM);
    let rearr_keys: Vec<u64> =
        (0..layouts.len()).map(|l| derive_seed(config.rng_seed, REARRANGE_STREAM + l as u64)).collect();

    let per_rep: Vec<Vec<f64>> = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            let flows = draw_flows(lower, upper, &mut stream(flow_key, r as u64));
            dists
                .iter()
                .zip(rearr)
                .zip(&rearr_keys)
                .map(|((d, a), &key)| {
                    let mut cost = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            if i != j {
                                cost += flows[(i, j)] * d[(i, j)];
                            }
                        }
                    }
                    cost *= scale;
                    if let (Some(rc), true) = (rc, a.moved() > 0) {
                        let mut rng = stream(key, r as u64);
                        for &moved in &a.re_flags {
                            if moved {
                                cost +=
                                    if rc.lo == rc.hi { rc.lo } else { rc.lo + (rc.hi - rc.lo) * rng.random::<f64>() };
                            }
                        }
                    }
                    cost
                })
                .collect()
        })
        .collect();

    let mut samples = vec![Vec::with_capacity(config.replications); layouts.len()];
    for rep in per_rep {
        for (l, c) in rep.into_iter().enumerate() {
            samples[l].push(c);
        }
    }
    let reps = config.replications as f64;
    // shifted by the first sample so constant samples give exactly zero variance
    let (means, variances): (Vec<f64>, Vec<f64>) = samples
        .iter()
        .map(|s| {
            let k = s[0];
            let (sum, sq) = s.iter().fold((0.0, 0.0), |(a, b), &x| (a + (x - k), b + (x - k) * (x - k)));
            (k + sum / reps, ((sq - sum * sum / reps) / (reps - 1.0)).max(0.0))
        })
        .unzip();
    Ok(SimSummary { means, variances, counts: vec![config.replications; layouts.len()], samples })
}
