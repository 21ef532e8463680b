//! Solver toolkit for the stochastic unequal-area facility layout problem.
//!
//! Layouts are encoded as three-row slicing-tree chromosomes ([`slicing`]),
//! optimized by an island-model genetic algorithm ([`ga`]) against a penalized
//! material-handling objective ([`objective`]), and compared under random
//! flows with a Monte Carlo evaluator ([`sim`]) plus ANOVA / Tukey HSD
//! ([`stats`]). The [`hybrid`] loop ties these together into a search over
//! flow parameterizations `mu + b * sigma`.

pub mod error;
pub mod ga;
pub mod hybrid;
pub mod instance;
pub mod layout_io;
pub mod matrix;
pub mod objective;
pub mod rng;
pub mod sim;
pub mod slicing;
pub mod stats;
pub mod svg;

pub use error::{Error, Result};
pub use ga::{run_ga, GaConfig, GaResult, GenerationRecord, RateRow};
pub use hybrid::{run_hybrid, HybridConfig, HybridOutcome, IterationRecord, StopReason};
pub use instance::{candidate_flows, Department, FlowModel, ProblemInstance, RearrangeCost};
pub use layout_io::{parse_layout_file, render_layout_file, SavedLayout};
pub use matrix::Matrix;
pub use objective::{assess_rearrangement, handling_cost, penalized_objective, PenaltyState, RearrangementAssessment};
pub use sim::{simulate_batch, SimConfig, SimSummary};
pub use slicing::{count_solutions, decode, encode, rectilinear_distances, Chromosome, Layout, Rect};
pub use stats::{main_effects_anova, one_way_anova, studentized_range_q, tukey_hsd, AnovaTable, TukeyReport};
pub use svg::render_svg;
