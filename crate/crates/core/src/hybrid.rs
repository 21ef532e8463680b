//! Outer search over flow parameterizations `mu + b * sigma`.
//!
//! Each candidate `b` gets a GA-optimized layout for its deterministic flow
//! matrix. All candidate layouts are then simulated against the same random
//! flows and compared with a one-way ANOVA. While the ANOVA rejects equality,
//! the candidate with the highest mean cost is dropped and replaced by the
//! average `b` of the two cheapest candidates.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ga::{run_ga, GaConfig, GaResult};
use crate::instance::{candidate_flows, ProblemInstance};
use crate::objective::{assess_rearrangement, RearrangementAssessment};
use crate::rng::derive_seed;
use crate::sim::{simulate_batch, SimConfig, SimSummary};
use crate::slicing::{Chromosome, Layout};
use crate::stats::{one_way_anova, tukey_from_summary, AnovaTable, TukeyReport};

/// Shift applied to an averaged `b` that collides with a current or removed candidate.
pub const COLLISION_STEP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct HybridConfig {
    pub initial_b: Vec<f64>,
    /// Wall-clock budget checked after each elimination step.
    pub time_limit: Option<Duration>,
    /// Hard cap on ANOVA rounds.
    pub max_iterations: usize,
    pub alpha: f64,
    pub ga: GaConfig,
    pub replications: usize,
    pub rng_seed: u64,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            initial_b: vec![-1.0, 0.0, 1.0, 1.5, 2.0],
            time_limit: None,
            max_iterations: 50,
            alpha: 0.05,
            ga: GaConfig::default(),
            replications: 10_000,
            rng_seed: 0,
        }
    }
}

impl HybridConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bs = self.initial_b.clone();
        bs.sort_by(f64::total_cmp);
        bs.dedup();
        if bs.len() < 3 || bs.len() != self.initial_b.len() {
            return Err(Error::Domain("initial b set needs at least 3 distinct values".into()));
        }
        if bs.iter().any(|b| !b.is_finite()) {
            return Err(Error::Domain("b values must be finite".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Domain("max_iterations must be positive".into()));
        }
        self.ga.validate()
    }
}

/// Outcome of one elimination step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Elimination {
    pub removed_index: usize,
    pub removed_b: f64,
    pub inserted_b: f64,
    /// The plain average collided and was shifted by [`COLLISION_STEP`].
    pub perturbed: bool,
}

/// Removes the highest-mean candidate and proposes the average of the two
/// lowest-mean ones. `retired` lists every `b` removed earlier.
pub fn eliminate(bs: &[f64], means: &[f64], retired: &[f64]) -> Elimination {
    assert!(bs.len() >= 3 && bs.len() == means.len(), "need >= 3 candidates with means");
    let mut order: Vec<usize> = (0..bs.len()).collect();
    order.sort_by(|&a, &b| means[a].total_cmp(&means[b]));
    let (best, second, worst) = (order[0], order[1], order[order.len() - 1]);
    let removed_b = bs[worst];
    let mut inserted_b = 0.5 * (bs[best] + bs[second]);
    let step = COLLISION_STEP * (bs[second] - bs[best]).signum();
    let taken = |b: f64| bs.contains(&b) || retired.contains(&b);
    let mut perturbed = false;
    while taken(inserted_b) {
        inserted_b += step;
        perturbed = true;
    }
    Elimination { removed_index: worst, removed_b, inserted_b, perturbed }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub bs: Vec<f64>,
    pub means: Vec<f64>,
    pub anova_p: f64,
    pub removed_b: Option<f64>,
    pub inserted_b: Option<f64>,
}

pub const TRACE_HEADER: &str = "iteration,candidates,means,anova_p,removed_b,inserted_b";

pub fn trace_csv(trace: &[IterationRecord]) -> String {
    let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in trace {
        let _ = writeln!(
            out,
            "{},{},{},{:e},{},{}",
            r.iteration,
            join(&r.bs),
            join(&r.means),
            r.anova_p,
            opt(r.removed_b),
            opt(r.inserted_b)
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The ANOVA could not reject equal mean costs.
    NotRejected,
    TimeLimit,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct CandidateResult {
    pub b: f64,
    pub ga: GaResult,
    pub rearrangement: RearrangementAssessment,
    pub sim_mean: f64,
}

#[derive(Debug, Clone)]
pub struct HybridOutcome {
    pub winning_b: f64,
    pub best_layout: Layout,
    pub best_chromosome: Chromosome,
    pub stop: StopReason,
    pub trace: Vec<IterationRecord>,
    /// Candidates of the last simulated batch, in batch order.
    pub final_candidates: Vec<CandidateResult>,
    pub final_summary: SimSummary,
    pub final_anova: AnovaTable,
    pub final_tukey: TukeyReport,
}

fn rearrangement_for(instance: &ProblemInstance, layout: &Layout) -> RearrangementAssessment {
    match (&instance.initial_layout, instance.rearrange_cost) {
        (Some(init), Some(rc)) => assess_rearrangement(layout, init, instance.rearrange_eps())
            .expect("layout sizes validated")
            .with_uniform_cost(rc.midpoint()),
        _ => RearrangementAssessment::none(instance.n()),
    }
}

/// Runs the candidate-elimination loop until equality cannot be rejected,
/// the time budget is exhausted or `max_iterations` ANOVA rounds have run.
pub fn run_hybrid(instance: &ProblemInstance, config: &HybridConfig) -> Result<HybridOutcome> {
    instance.validate()?;
    config.validate()?;
    let start = Instant::now();
    let sim_cfg = SimConfig {
        replications: config.replications,
        rng_seed: derive_seed(config.rng_seed, 0x5151),
        life_cycle_scale: instance.life_cycle_scale,
    };

    let mut bs = config.initial_b.clone();
    let mut retired: Vec<f64> = Vec::new();
    let mut cache: HashMap<u64, GaResult> = HashMap::new();
    let mut trace = Vec::new();
    let mut iteration = 0;

    loop {
        iteration += 1;
        let missing: Vec<f64> = bs.iter().copied().filter(|b| !cache.contains_key(&b.to_bits())).collect();
        let fresh: Vec<(f64, Result<GaResult>)> = missing
            .par_iter()
            .map(|&b| {
                let flow = candidate_flows(&instance.flows, b);
                let ga = GaConfig { rng_seed: derive_seed(config.rng_seed, b.to_bits()), ..config.ga.clone() };
                (b, run_ga(instance, &flow, &ga))
            })
            .collect();
        for (b, res) in fresh {
            cache.insert(b.to_bits(), res?);
        }

        let ga_results: Vec<&GaResult> = bs.iter().map(|b| &cache[&b.to_bits()]).collect();
        let layouts: Vec<Layout> = ga_results.iter().map(|g| g.layout.clone()).collect();
        let rearr: Vec<RearrangementAssessment> = layouts.iter().map(|l| rearrangement_for(instance, l)).collect();
        let summary = simulate_batch(&layouts, instance, &rearr, &sim_cfg)?;
        let anova = one_way_anova(&summary.samples)?;
        let tukey = tukey_from_summary(&summary.means, &summary.counts, anova.mse, anova.df_error, config.alpha)?;
        let p = anova.p_value();
        log::info!("iteration {iteration}: b = {bs:?}, means = {:?}, p = {p}", summary.means);

        let stop = if p >= config.alpha {
            Some(StopReason::NotRejected)
        } else if iteration >= config.max_iterations {
            Some(StopReason::IterationLimit)
        } else {
            None
        };
        let mut record = IterationRecord {
            iteration,
            bs: bs.clone(),
            means: summary.means.clone(),
            anova_p: p,
            removed_b: None,
            inserted_b: None,
        };

        let time_up = |elapsed: Duration| config.time_limit.is_some_and(|t| elapsed > t);
        let stop = match stop {
            Some(s) => Some(s),
            None => {
                let e = eliminate(&bs, &summary.means, &retired);
                if e.perturbed {
                    log::warn!("averaged b collided with an earlier candidate, shifted to {}", e.inserted_b);
                }
                record.removed_b = Some(e.removed_b);
                record.inserted_b = Some(e.inserted_b);
                if time_up(start.elapsed()) {
                    Some(StopReason::TimeLimit)
                } else {
                    retired.push(e.removed_b);
                    bs[e.removed_index] = e.inserted_b;
                    None
                }
            }
        };
        trace.push(record);

        if let Some(stop) = stop {
            let batch_bs = trace.last().expect("just pushed").bs.clone();
            let final_candidates: Vec<CandidateResult> = batch_bs
                .iter()
                .zip(rearr)
                .zip(&summary.means)
                .map(|((&b, rearrangement), &sim_mean)| CandidateResult {
                    b,
                    ga: cache[&b.to_bits()].clone(),
                    rearrangement,
                    sim_mean,
                })
                .collect();
            let w = summary.argmin_mean();
            let winner = &final_candidates[w];
            return Ok(HybridOutcome {
                winning_b: winner.b,
                best_layout: winner.ga.layout.clone(),
                best_chromosome: winner.ga.best.clone(),
                stop,
                trace,
                final_candidates,
                final_summary: summary,
                final_anova: anova,
                final_tukey: tukey,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_elimination_step() {
        let bs = [-1.0, 0.0, 1.0, 1.5, 2.0];
        let means = [3_316_002.0, 3_370_616.0, 3_461_362.0, 3_424_912.0, 3_443_006.0];
        let e = eliminate(&bs, &means, &[]);
        assert_eq!(e.removed_b, 1.0);
        assert_eq!(e.inserted_b, -0.5);
        assert!(!e.perturbed);
    }

    #[test]
    fn collisions_are_shifted() {
        let e = eliminate(&[0.0, 1.0, 5.0], &[1.0, 2.0, 3.0], &[0.5]);
        assert_eq!(e.inserted_b, 0.51);
        assert!(e.perturbed);
    }

    #[test]
    fn config_requires_three_distinct_b() {
        let c = HybridConfig { initial_b: vec![0.0, 1.0, 1.0], ..HybridConfig::default() };
        assert!(c.validate().is_err());
    }
}
