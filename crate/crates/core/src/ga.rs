//! Island-model genetic algorithm over slicing-tree chromosomes.
//!
//! Each island breeds its next population from tournament-selected parents,
//! splitting offspring between crossover and mutation according to the
//! recent improvement rate, then the best individuals of every island are
//! copied to its ring successor. Islands run in parallel; each owns an RNG
//! stream derived from the master seed, so results do not depend on the
//! number of worker threads.

mod operators;

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use operators::{
    mutate, mutate_at, mutation_positions, one_point_crossover, one_point_crossover_at, one_point_perm,
    seed_chromosome, top_flow_pairs, two_point_crossover, two_point_crossover_at, two_point_perm,
};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::matrix::Matrix;
use crate::objective::{assess_rearrangement, handling_cost_unchecked, PenaltyState};
use crate::rng::{derive_seed, stream};
use crate::slicing::{decode_rects, encode, Chromosome, Layout, Rect};

/// One row of the operator-rate table. The row applies to improvement
/// values above `min_impr` (or equal to it when `inclusive`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub min_impr: f64,
    pub inclusive: bool,
    pub crossover: f64,
    pub mutation: f64,
    pub migration: f64,
}

impl RateRow {
    const fn new(min_impr: f64, inclusive: bool, crossover: f64, mutation: f64, migration: f64) -> Self {
        Self { min_impr, inclusive, crossover, mutation, migration }
    }

    fn admits(&self, impr: f64) -> bool {
        impr > self.min_impr || (self.inclusive && impr == self.min_impr)
    }

    pub fn shares(&self) -> (f64, f64, f64) {
        (self.crossover, self.mutation, self.migration)
    }
}

/// Slack allowed when checking that a rate row sums to one. Mutation takes
/// whatever crossover leaves, so the shares only need to be roughly consistent.
pub const RATE_SUM_TOL: f64 = 0.015;

/// Offspring shares by average improvement percentage.
pub fn default_rate_table() -> Vec<RateRow> {
    vec![
        RateRow::new(0.0, true, 0.61, 0.31, 0.08),
        RateRow::new(0.0, false, 0.67, 0.27, 0.06),
        RateRow::new(1.0, true, 0.77, 0.19, 0.04),
        RateRow::new(2.0, true, 0.80, 0.15, 0.05),
        RateRow::new(4.0, true, 0.87, 0.10, 0.03),
        RateRow::new(6.0, true, 0.89, 0.08, 0.03),
        RateRow::new(8.0, true, 0.92, 0.05, 0.02),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub islands: usize,
    /// Stop after this many consecutive generations without a new global best.
    pub stall_limit: usize,
    pub max_generations: usize,
    pub rate_table: Vec<RateRow>,
    pub rng_seed: u64,
    pub tournament_size: usize,
    /// Mutation also flips one orientation bit with probability 1/2.
    pub flip_orient_in_mutation: bool,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 70,
            islands: 4,
            stall_limit: 300,
            max_generations: 1000,
            rate_table: default_rate_table(),
            rng_seed: 0,
            tournament_size: 2,
            flip_orient_in_mutation: true,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Domain(m));
        if self.population_size < 2 {
            return bad(format!("population_size must be at least 2, got {}", self.population_size));
        }
        if self.islands == 0 || self.tournament_size == 0 || self.max_generations == 0 {
            return bad("islands, tournament_size and max_generations must be positive".into());
        }
        let t = &self.rate_table;
        match t.first() {
            Some(r) if r.min_impr == 0.0 && r.inclusive => {}
            _ => return bad("rate table must start with a row covering Impr = 0".into()),
        }
        for w in t.windows(2) {
            let ordered =
                w[0].min_impr < w[1].min_impr || (w[0].min_impr == w[1].min_impr && w[0].inclusive && !w[1].inclusive);
            if !ordered {
                return bad("rate table rows must have increasing lower bounds".into());
            }
        }
        for r in t {
            let sum = r.crossover + r.mutation + r.migration;
            // printed shares are rounded to two decimals, one row sums to 0.99
            if (sum - 1.0).abs() > RATE_SUM_TOL || r.crossover < 0.0 || r.mutation < 0.0 || r.migration < 0.0 {
                return bad(format!("rate row {r:?} does not sum to 1"));
            }
        }
        Ok(())
    }
}

/// Per-generation improvement percentages of the last five generations.
#[derive(Debug, Clone, Default)]
pub struct ImprovementHistory {
    window: VecDeque<f64>,
}

impl ImprovementHistory {
    pub const WINDOW: usize = 5;

    pub fn new() -> Self {
        Self::default()
    }

    /// `100 * (prev - new) / prev`, floored at 0.
    pub fn improvement(prev_best: f64, new_best: f64) -> f64 {
        if prev_best > 0.0 && new_best < prev_best {
            100.0 * (prev_best - new_best) / prev_best
        } else {
            0.0
        }
    }

    pub fn push(&mut self, prev_best: f64, new_best: f64) {
        self.push_percent(Self::improvement(prev_best, new_best));
    }

    pub fn push_percent(&mut self, pct: f64) {
        if self.window.len() == Self::WINDOW {
            self.window.pop_front();
        }
        self.window.push_back(pct.max(0.0));
    }

    /// Average over the recorded generations (0 when empty).
    pub fn impr(&self) -> f64 {
        if self.window.is_empty() {
            0.0
        } else {
            self.window.iter().sum::<f64>() / self.window.len() as f64
        }
    }
}

/// (crossover, mutation, migration) shares for the history's average improvement.
pub fn operator_shares(history: &ImprovementHistory, table: &[RateRow]) -> (f64, f64, f64) {
    shares_for(history.impr(), table)
}

pub fn shares_for(impr: f64, table: &[RateRow]) -> (f64, f64, f64) {
    table
        .iter()
        .rev()
        .find(|r| r.admits(impr))
        .or_else(|| table.first())
        .map(RateRow::shares)
        .expect("rate table is not empty")
}

/// Number of migrants for a migration share: `ceil(share * population_size)`.
pub fn migrant_count(share: f64, population_size: usize) -> usize {
    // guard against products such as 0.1 * 70 = 7.000000000000001
    ((share * population_size as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Ring migration: the `counts[k]` best of island `k` (lowest `key`) replace
/// the `counts[k]` worst of island `k + 1`. Emigrants are chosen before any
/// island is modified.
pub fn migrate<T: Clone>(islands: &mut [Vec<T>], counts: &[usize], key: impl Fn(&T) -> f64) {
    let k = islands.len();
    if k < 2 {
        return;
    }
    let order = |pop: &[T]| {
        let mut idx: Vec<usize> = (0..pop.len()).collect();
        idx.sort_by(|&a, &b| key(&pop[a]).total_cmp(&key(&pop[b])));
        idx
    };
    let emigrants: Vec<Vec<T>> = islands
        .iter()
        .zip(counts)
        .map(|(pop, &m)| order(pop).into_iter().take(m.min(pop.len())).map(|i| pop[i].clone()).collect())
        .collect();
    for (src, group) in emigrants.into_iter().enumerate() {
        let dst = &mut islands[(src + 1) % k];
        let worst: Vec<usize> = order(dst).into_iter().rev().take(group.len()).collect();
        for (slot, ind) in worst.into_iter().zip(group) {
            dst[slot] = ind;
        }
    }
}

/// A chromosome with the raw parts of its objective. The penalty is applied
/// on demand because the penalty gap changes during the run.
#[derive(Debug, Clone)]
pub struct Individual {
    pub chromosome: Chromosome,
    pub handling: f64,
    pub p_inf: usize,
    pub rearrangement: f64,
}

impl Individual {
    pub fn fitness(&self, state: &PenaltyState) -> f64 {
        self.handling + state.penalty(self.p_inf) + self.rearrangement
    }

    fn beats(&self, other: &Individual, state: &PenaltyState) -> bool {
        match (self.p_inf == 0, other.p_inf == 0) {
            (true, false) => true,
            (false, true) => false,
            _ => self.fitness(state) < other.fitness(state),
        }
    }
}

/// Decodes and scores chromosomes against one deterministic flow matrix.
pub struct Evaluator<'a> {
    areas: Vec<f64>,
    max_ratios: Vec<f64>,
    facility: Rect,
    flow: &'a Matrix,
    initial: Option<&'a Layout>,
    rearrange_cost: f64,
    eps: f64,
}

impl<'a> Evaluator<'a> {
    /// In dynamic mode each moved department costs the midpoint of the
    /// rearrangement interval.
    pub fn new(instance: &'a ProblemInstance, flow: &'a Matrix) -> Self {
        Self {
            areas: instance.areas(),
            max_ratios: instance.max_ratios(),
            facility: Rect { x: 0.0, y: 0.0, w: instance.width, h: instance.height },
            flow,
            initial: instance.initial_layout.as_ref(),
            rearrange_cost: instance.rearrange_cost.map_or(0.0, |rc| rc.midpoint()),
            eps: instance.rearrange_eps(),
        }
    }

    pub fn layout(&self, c: &Chromosome) -> Layout {
        Layout::new(decode_rects(c, &self.areas, self.facility), &self.max_ratios)
    }

    pub fn evaluate(&self, chromosome: Chromosome) -> Individual {
        let layout = self.layout(&chromosome);
        let handling = handling_cost_unchecked(&layout, self.flow);
        let rearrangement = match self.initial {
            Some(init) => {
                let a = assess_rearrangement(&layout, init, self.eps).expect("sizes validated");
                a.moved() as f64 * self.rearrange_cost
            }
            None => 0.0,
        };
        Individual { chromosome, handling, p_inf: layout.p_inf, rearrangement }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    pub island: usize,
    pub best: f64,
    pub mean: f64,
    pub impr: f64,
    pub shares: (f64, f64, f64),
}

pub const LOG_HEADER: &str = "generation,island,best,mean,impr,crossover,mutation,migration";

pub fn log_csv(log: &[GenerationRecord]) -> String {
    let mut out = String::from(LOG_HEADER);
    out.push('\n');
    for r in log {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.generation, r.island, r.best, r.mean, r.impr, r.shares.0, r.shares.1, r.shares.2
        );
    }
    out
}

#[derive(Debug, Clone)]
pub struct GaResult {
    pub best: Chromosome,
    pub layout: Layout,
    /// Penalized objective of `best` under the final penalty state.
    pub objective: f64,
    pub handling_cost: f64,
    pub rearrangement_cost: f64,
    pub generations: usize,
    pub log: Vec<GenerationRecord>,
}

struct Island {
    pop: Vec<Individual>,
    rng: ChaCha8Rng,
    history: ImprovementHistory,
    prev_best: f64,
    shares: (f64, f64, f64),
}

fn tournament<'p, R: Rng>(pop: &'p [Individual], size: usize, state: &PenaltyState, rng: &mut R) -> &'p Individual {
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..size {
        let c = &pop[rng.random_range(0..pop.len())];
        if c.fitness(state) < best.fitness(state) {
            best = c;
        }
    }
    best
}

fn island_best<'p>(pop: &'p [Individual], state: &PenaltyState) -> &'p Individual {
    pop.iter()
        .reduce(|a, b| if b.fitness(state) < a.fitness(state) { b } else { a })
        .expect("populations are non-empty")
}

/// Breeds the next population: elite + crossover pairs + mutants.
fn breed(island: &mut Island, snapshot: &PenaltyState, eval: &Evaluator<'_>, config: &GaConfig) -> PenaltyState {
    let p = config.population_size;
    let (cross_share, _, _) = island.shares;
    let mut n_cross = ((cross_share * (p - 1) as f64) + 1e-9).floor() as usize;
    n_cross -= n_cross % 2;
    let n_mut = p - 1 - n_cross;

    let elite = island_best(&island.pop, snapshot).clone();
    let mut next = Vec::with_capacity(p);
    next.push(elite);
    let mut local = PenaltyState::new();
    let rng = &mut island.rng;
    for _ in 0..n_cross / 2 {
        let a = tournament(&island.pop, config.tournament_size, snapshot, rng);
        let b = tournament(&island.pop, config.tournament_size, snapshot, rng);
        let (c1, c2) = if rng.random::<bool>() {
            one_point_crossover(&a.chromosome, &b.chromosome, rng)
        } else {
            two_point_crossover(&a.chromosome, &b.chromosome, rng)
        };
        next.push(eval.evaluate(c1));
        next.push(eval.evaluate(c2));
    }
    for _ in 0..n_mut {
        let a = tournament(&island.pop, config.tournament_size, snapshot, rng);
        let c = mutate(&a.chromosome, config.flip_orient_in_mutation, rng);
        next.push(eval.evaluate(c));
    }
    for ind in &next[1..] {
        local.observe(ind.handling, ind.p_inf);
    }
    island.pop = next;
    local
}

/// Runs the island GA on one deterministic flow matrix.
///
/// Populations start from heuristic seeds. In dynamic mode the chromosome
/// of the current layout (recovered with [`encode`]) replaces one seed per
/// island, so "move nothing" is always among the candidates.
pub fn run_ga(instance: &ProblemInstance, flow: &Matrix, config: &GaConfig) -> Result<GaResult> {
    instance.validate()?;
    config.validate()?;
    let n = instance.n();
    if flow.n() != n {
        return Err(Error::Dimension { expected: n, got: flow.n() });
    }
    let eval = Evaluator::new(instance, flow);
    let table = &config.rate_table;
    let initial_shares = shares_for(0.0, table);

    // dynamic mode: the current layout joins every island when it is a slicing layout
    let facility = Rect { x: 0.0, y: 0.0, w: instance.width, h: instance.height };
    let warm_start =
        instance.initial_layout.as_ref().and_then(|l| encode(&l.rects, facility, instance.rearrange_eps()));
    if instance.initial_layout.is_some() && warm_start.is_none() {
        log::warn!("initial layout is not a guillotine partition, GA starts from seeded chromosomes only");
    }

    let mut islands: Vec<Island> = (0..config.islands)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(derive_seed(config.rng_seed, 0x15_1A_2D), k as u64);
            let mut pop: Vec<Individual> =
                (0..config.population_size).map(|_| eval.evaluate(seed_chromosome(n, flow, &mut rng))).collect();
            if let Some(c) = &warm_start {
                pop[0] = eval.evaluate(c.clone());
            }
            Island { pop, rng, history: ImprovementHistory::new(), prev_best: 0.0, shares: initial_shares }
        })
        .collect();

    let mut state = PenaltyState::new();
    for ind in islands.iter().flat_map(|i| &i.pop) {
        state.observe(ind.handling, ind.p_inf);
    }
    let mut incumbent = islands
        .iter()
        .map(|i| island_best(&i.pop, &state))
        .reduce(|a, b| if b.beats(a, &state) { b } else { a })
        .expect("at least one island")
        .clone();
    let mut log = Vec::new();
    for (k, isl) in islands.iter_mut().enumerate() {
        isl.prev_best = island_best(&isl.pop, &state).fitness(&state);
        log.push(record(0, k, isl, &state));
    }

    let mut stall = 0usize;
    let mut generation = 0usize;
    while generation < config.max_generations && stall < config.stall_limit {
        generation += 1;
        let snapshot = state;
        let locals: Vec<PenaltyState> =
            islands.par_iter_mut().map(|isl| breed(isl, &snapshot, &eval, config)).collect();
        for l in &locals {
            state.merge(l);
        }

        if islands.len() > 1 {
            let counts: Vec<usize> =
                islands.iter().map(|i| migrant_count(i.shares.2, config.population_size)).collect();
            let mut pops: Vec<Vec<Individual>> = islands.iter_mut().map(|i| std::mem::take(&mut i.pop)).collect();
            migrate(&mut pops, &counts, |ind| ind.fitness(&state));
            for (isl, pop) in islands.iter_mut().zip(pops) {
                isl.pop = pop;
            }
        }

        let mut improved = false;
        for (k, isl) in islands.iter_mut().enumerate() {
            let best = island_best(&isl.pop, &state);
            let value = best.fitness(&state);
            if best.beats(&incumbent, &state) {
                incumbent = best.clone();
                improved = true;
            }
            isl.history.push(isl.prev_best, value);
            isl.prev_best = value;
            isl.shares = operator_shares(&isl.history, table);
            log.push(record(generation, k, isl, &state));
        }
        stall = if improved { 0 } else { stall + 1 };
    }

    let layout = eval.layout(&incumbent.chromosome);
    Ok(GaResult {
        objective: incumbent.fitness(&state),
        handling_cost: incumbent.handling,
        rearrangement_cost: incumbent.rearrangement,
        best: incumbent.chromosome,
        layout,
        generations: generation,
        log,
    })
}

fn record(generation: usize, island: usize, isl: &Island, state: &PenaltyState) -> GenerationRecord {
    let fits: Vec<f64> = isl.pop.iter().map(|i| i.fitness(state)).collect();
    GenerationRecord {
        generation,
        island,
        best: fits.iter().copied().fold(f64::INFINITY, f64::min),
        mean: fits.iter().sum::<f64>() / fits.len() as f64,
        impr: isl.history.impr(),
        shares: isl.shares,
    }
}
