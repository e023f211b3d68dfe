//! Closed-loop, trace-driven simulation.
//!
//! The attacker scans the stocked shelf once before the first step. After
//! that each trace step is one scan of the shelf, in this order:
//!
//! 1. apply the step's real sales (oldest tags leave first) and restocks;
//! 2. age every tag by one step;
//! 3. let the quantifier plan reprograms, deactivations and activations;
//! 4. program the honeytokens, logging one write per deactivation or
//!    activation and two per reprogram;
//! 5. scan the shelf through the lossy channel;
//! 6. hand the scan to the attacker.
//!
//! Randomness comes from four ChaCha8 streams of the run seed (programmer,
//! goals, channel, tie-breaks), so a run is a pure function of trace and
//! config, and runs that differ only in budget draw the same goal jitter.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{
    autocorrelation_counts, default_max_lag, flatness_counts, mean_abs_acf, overhead_summary,
    Correlogram, FlatnessReport, OverheadEvent, OverheadKind, OverheadReport,
};
use crate::attacker::{build_series_after, filter_observation, ObservedInventory, TrendSeries};
use crate::channel::{sample_write_latency, scan, ChannelError, ChannelParams};
use crate::programmer::{
    activate_token, deactivate_token, reprogram_token, IdRegistry, ProgrammerError,
};
use crate::quantifier::{GoalMode, GoalPolicy, PolicyError, Quantifier, StepObservation};
use crate::tag::{ShelfError, ShelfState, Tag, TagId};
use crate::trace::{Trace, TraceError};

const PROGRAMMER_STREAM: u64 = 0;
const QUANTIFIER_STREAM: u64 = 1;
const CHANNEL_STREAM: u64 = 2;
const TIE_STREAM: u64 = 3;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("config.{field}: {reason}")]
    Config { field: &'static str, reason: String },
    #[error("step {step}: {source}")]
    Programmer {
        step: usize,
        #[source]
        source: ProgrammerError,
    },
    #[error("shelf invariant broken after step {step}: {source}")]
    Invariant {
        step: usize,
        #[source]
        source: ShelfError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Honeytokens placed on the shelf.
    pub budget: usize,
    pub goal: GoalPolicy,
    pub channel: ChannelParams,
    pub seed: u64,
    /// Average real-tag age assumed before any history exists.
    pub av_default: f64,
    /// Item codes of other products; deactivated tokens never show them.
    pub other_item_types: Vec<u32>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            budget: 0,
            goal: GoalPolicy::default(),
            channel: ChannelParams::default(),
            seed: 0,
            av_default: 10.0,
            other_item_types: Vec::new(),
        }
    }
}

impl SimConfig {
    pub fn new(budget: usize, mode: GoalMode, seed: u64) -> Self {
        Self {
            budget,
            goal: GoalPolicy::new(mode),
            seed,
            ..Self::default()
        }
    }

    pub fn with_channel(mut self, channel: ChannelParams) -> Self {
        self.channel = channel;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.goal.validate()?;
        self.channel.validate()?;
        if !(self.av_default > 0.0 && self.av_default.is_finite()) {
            return Err(SimError::Config {
                field: "av_default",
                reason: "must be a positive number".into(),
            });
        }
        Ok(())
    }
}

/// Per-step bookkeeping of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub goal_sales: usize,
    pub goal_restock: usize,
    pub sales_shortfall: usize,
    pub restock_shortfall: usize,
    pub cold_start: bool,
    pub average_age: f64,
    pub reprogrammed: usize,
    pub deactivated: usize,
    pub activated: usize,
    pub physical_tags: usize,
    pub active_tokens: usize,
    pub read_success: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub mode: GoalMode,
    pub budget: usize,
    pub seed: u64,
    pub ground_truth: TrendSeries,
    pub attacker_view: TrendSeries,
    /// Correlograms of the disguised series; `None` when it is too short.
    pub raw_correlogram: Option<Correlogram>,
    pub mirage_correlogram: Option<Correlogram>,
    pub raw_flatness: Option<FlatnessReport>,
    pub mirage_flatness: Option<FlatnessReport>,
    pub overhead: OverheadReport,
    pub events: Vec<OverheadEvent>,
    pub steps: Vec<StepRecord>,
}

impl SimulationReport {
    pub fn raw_series(&self) -> &[usize] {
        self.ground_truth.column(self.mode.target())
    }

    pub fn mirage_series(&self) -> &[usize] {
        self.attacker_view.column(self.mode.target())
    }

    pub fn read_success(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.read_success).collect()
    }

    pub fn mean_read_success(&self) -> f64 {
        if self.steps.is_empty() {
            return 1.0;
        }
        self.steps.iter().map(|s| s.read_success).sum::<f64>() / self.steps.len() as f64
    }

    /// Steps where either goal was missed.
    pub fn shortfalls(&self) -> impl Iterator<Item = &StepRecord> {
        self.steps
            .iter()
            .filter(|s| s.sales_shortfall > 0 || s.restock_shortfall > 0)
    }

    pub fn raw_mean_abs_acf(&self) -> Option<f64> {
        self.raw_correlogram.as_ref().map(mean_abs_acf)
    }

    pub fn mirage_mean_abs_acf(&self) -> Option<f64> {
        self.mirage_correlogram.as_ref().map(mean_abs_acf)
    }

    pub fn write_latencies(&self) -> impl Iterator<Item = f64> + '_ {
        self.events
            .iter()
            .filter(|e| e.kind == OverheadKind::Write)
            .map(|e| e.latency_ms)
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Seed of run `index` in a batch: the first output of a ChaCha8 generator
/// seeded with `master + index`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    ChaCha8Rng::seed_from_u64(master.wrapping_add(index)).next_u64()
}

struct Engine<'a> {
    trace: &'a Trace,
    config: &'a SimConfig,
    shelf: ShelfState,
    registry: IdRegistry,
    quantifier: Quantifier,
    prog_rng: ChaCha8Rng,
    goal_rng: ChaCha8Rng,
    tie_rng: ChaCha8Rng,
    chan_rng: ChaCha8Rng,
    baseline: BTreeSet<TagId>,
    observations: Vec<ObservedInventory>,
    events: Vec<OverheadEvent>,
    steps: Vec<StepRecord>,
}

impl<'a> Engine<'a> {
    fn new(trace: &'a Trace, config: &'a SimConfig) -> Result<Self, SimError> {
        let mut prog_rng = stream(config.seed, PROGRAMMER_STREAM);
        let epc = trace.item_type.epc_type;
        let mut registry = IdRegistry::new(epc);
        registry.exclude_epcs(config.other_item_types.iter().copied());
        let mut shelf = ShelfState::new(trace.item_type.clone());
        let setup = |e| SimError::Programmer { step: 0, source: e };
        for _ in 0..trace.initial_stock {
            let tag = registry.new_real_tag(&mut prog_rng).map_err(setup)?;
            shelf.real_tags.push_back(tag);
        }
        for _ in 0..config.budget {
            let tag = registry.new_dormant_token(&mut prog_rng).map_err(setup)?;
            shelf.inactive_pool.push(tag);
        }
        let mut chan_rng = stream(config.seed, CHANNEL_STREAM);
        let first = scan(0, &shelf, &config.channel, &mut chan_rng);
        let baseline = filter_observation(&first, &shelf.item_type).ids;
        Ok(Self {
            trace,
            config,
            shelf,
            registry,
            quantifier: Quantifier::new(config.goal.clone(), config.budget, config.av_default),
            prog_rng,
            goal_rng: stream(config.seed, QUANTIFIER_STREAM),
            tie_rng: stream(config.seed, TIE_STREAM),
            chan_rng,
            baseline,
            observations: Vec::with_capacity(trace.len()),
            events: Vec::new(),
            steps: Vec::with_capacity(trace.len()),
        })
    }

    fn write(&mut self, step: usize) {
        let ms = sample_write_latency(&self.config.channel, &mut self.prog_rng);
        self.events.push(OverheadEvent {
            step,
            kind: OverheadKind::Write,
            latency_ms: ms,
        });
    }

    fn step(&mut self, idx: usize) -> Result<(), SimError> {
        let ev = self.trace.steps[idx];
        let t = ev.t;
        let perr = |source| SimError::Programmer { step: t, source };

        for _ in 0..ev.sales {
            let sold = self
                .shelf
                .real_tags
                .pop_front()
                .ok_or(TraceError::StockUnderflow { step: t })?;
            self.registry.release(sold.id.serial);
        }
        for _ in 0..ev.restock {
            let tag = self
                .registry
                .new_real_tag(&mut self.prog_rng)
                .map_err(perr)?;
            self.shelf.real_tags.push_back(tag);
        }

        self.shelf.age_all();

        let obs = StepObservation {
            t,
            actual_sales: ev.sales,
            actual_restock: ev.restock,
        };
        let decision =
            self.quantifier
                .decide(&self.shelf, &obs, &mut self.goal_rng, &mut self.tie_rng);
        let plan = &decision.plan;

        for serial in &plan.reprogram {
            let pos = self.active_position(*serial);
            let fresh = reprogram_token(
                &self.shelf.active_tokens[pos],
                &mut self.registry,
                &mut self.prog_rng,
            )
            .map_err(perr)?;
            self.shelf.active_tokens[pos] = fresh;
            self.write(t);
            self.write(t);
        }

        let mut picked = index::sample(
            &mut self.prog_rng,
            self.shelf.inactive_pool.len(),
            plan.activate_count,
        )
        .into_vec();
        picked.sort_unstable_by(|a, b| b.cmp(a));
        let mut activated: Vec<Tag> = Vec::with_capacity(picked.len());
        for i in picked {
            let dormant = self.shelf.inactive_pool.remove(i);
            activated.push(
                activate_token(&dormant, &mut self.registry, &mut self.prog_rng).map_err(perr)?,
            );
            self.write(t);
        }

        for serial in &plan.deactivate {
            let pos = self.active_position(*serial);
            let token = self.shelf.active_tokens.remove(pos);
            let dormant =
                deactivate_token(&token, &self.registry, &mut self.prog_rng).map_err(perr)?;
            self.shelf.inactive_pool.push(dormant);
            self.write(t);
        }
        self.shelf.active_tokens.extend(activated);

        let result = scan(t, &self.shelf, &self.config.channel, &mut self.chan_rng);
        for &ms in &result.honeytoken_latencies_ms {
            self.events.push(OverheadEvent {
                step: t,
                kind: OverheadKind::Read,
                latency_ms: ms,
            });
        }
        self.observations
            .push(filter_observation(&result, &self.shelf.item_type));

        self.shelf
            .check_invariants(self.config.budget)
            .map_err(|source| SimError::Invariant { step: t, source })?;

        self.steps.push(StepRecord {
            t,
            goal_sales: plan.goal_sales,
            goal_restock: plan.goal_restock,
            sales_shortfall: plan.sales_shortfall,
            restock_shortfall: plan.restock_shortfall,
            cold_start: decision.cold_start,
            average_age: decision.average_age,
            reprogrammed: plan.reprogram.len(),
            deactivated: plan.deactivate.len(),
            activated: plan.activate_count,
            physical_tags: self.shelf.physical_tag_count(),
            active_tokens: self.shelf.active_tokens.len(),
            read_success: result.read_success(),
        });
        Ok(())
    }

    fn active_position(&self, serial: u32) -> usize {
        self.shelf
            .active_tokens
            .iter()
            .position(|t| t.id.serial == serial)
            .expect("planned token is on the shelf")
    }

    fn finish(self) -> SimulationReport {
        let mode = self.config.goal.mode;
        let ground_truth = self.trace.ground_truth();
        let attacker_view = build_series_after(&self.baseline, &self.observations);
        let target = mode.target();
        let correlogram = |xs: &[usize]| {
            let lag = default_max_lag(xs.len());
            (lag >= 1)
                .then(|| autocorrelation_counts(xs, lag).ok())
                .flatten()
        };
        let overhead = overhead_summary(&self.events, self.trace.len());
        SimulationReport {
            mode,
            budget: self.config.budget,
            seed: self.config.seed,
            raw_correlogram: correlogram(ground_truth.column(target)),
            mirage_correlogram: correlogram(attacker_view.column(target)),
            raw_flatness: flatness_counts(ground_truth.column(target)).ok(),
            mirage_flatness: flatness_counts(attacker_view.column(target)).ok(),
            ground_truth,
            attacker_view,
            overhead,
            events: self.events,
            steps: self.steps,
        }
    }
}

/// Runs one simulation. Deterministic in `(trace, config)`.
pub fn run(trace: &Trace, config: &SimConfig) -> Result<SimulationReport, SimError> {
    trace.validate()?;
    config.validate()?;
    let mut engine = Engine::new(trace, config)?;
    for idx in 0..trace.len() {
        engine.step(idx)?;
    }
    Ok(engine.finish())
}

/// Runs `runs` independent simulations in parallel, run `i` seeded with
/// [`derive_seed`]`(config.seed, i)`. Results come back in run order.
pub fn run_batch(
    trace: &Trace,
    config: &SimConfig,
    runs: usize,
) -> Vec<Result<SimulationReport, SimError>> {
    (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let cfg = SimConfig {
                seed: derive_seed(config.seed, i),
                ..config.clone()
            };
            run(trace, &cfg)
        })
        .collect()
}

/// Aggregate of one budget in a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffRow {
    pub budget_multiplier: f64,
    pub budget: usize,
    pub mean_abs_acf_mean: f64,
    pub mean_abs_acf_std: f64,
    pub mean_read_success: f64,
    pub mean_step_overhead_ms: f64,
}

/// Budget for a multiple of the trace's item count, rounded to the nearest tag.
pub fn budget_for(trace: &Trace, multiplier: f64) -> usize {
    (trace.item_count() as f64 * multiplier).round() as usize
}

/// Runs `seeds` batch runs per budget multiplier and averages them.
/// Every budget sees the same derived seeds. Runs whose series are too short
/// for a correlogram count as 0 in the ACF statistics.
pub fn sweep(
    trace: &Trace,
    config: &SimConfig,
    multipliers: &[f64],
    seeds: usize,
) -> Result<Vec<TradeoffRow>, SimError> {
    multipliers
        .iter()
        .map(|&m| {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(SimError::Config {
                    field: "budgets",
                    reason: format!("multiplier {m} must be a non-negative number"),
                });
            }
            let cfg = SimConfig {
                budget: budget_for(trace, m),
                ..config.clone()
            };
            let reports = run_batch(trace, &cfg, seeds)
                .into_iter()
                .collect::<Result<Vec<_>, _>>()?;
            let n = reports.len().max(1) as f64;
            let acf: Vec<f64> = reports
                .iter()
                .map(|r| r.mirage_mean_abs_acf().unwrap_or(0.0))
                .collect();
            let acf_mean = acf.iter().sum::<f64>() / n;
            let acf_var = acf.iter().map(|a| (a - acf_mean).powi(2)).sum::<f64>() / n;
            Ok(TradeoffRow {
                budget_multiplier: m,
                budget: cfg.budget,
                mean_abs_acf_mean: acf_mean,
                mean_abs_acf_std: acf_var.sqrt(),
                mean_read_success: reports.iter().map(|r| r.mean_read_success()).sum::<f64>() / n,
                mean_step_overhead_ms: reports
                    .iter()
                    .map(|r| r.overhead.mean_step_overhead_ms())
                    .sum::<f64>()
                    / n,
            })
        })
        .collect()
}
