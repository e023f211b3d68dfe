//! Mirage: honeytoken defense against illicit RFID inventorying.
//!
//! A retailer's shelf carries real item tags plus a fixed budget of
//! programmable honeytokens. Each step the honeytokens are activated,
//! deactivated or re-serialized so that the inventory trend visible to an
//! eavesdropping reader follows a chosen goal instead of the real one.
//!
//! The crate is organised bottom-up:
//!
//! - [`tag`]: tag identifiers and the shelf state;
//! - [`programmer`]: serial allocation and the token write operations;
//! - [`channel`]: the lossy reader channel and its latencies;
//! - [`quantifier`]: goal computation and per-step honeytoken planning;
//! - [`attacker`]: the eavesdropper's view of a sequence of scans;
//! - [`analysis`]: correlograms, flatness and overhead summaries;
//! - [`trace`]: ground-truth traces, their CSV form and generators;
//! - [`engine`]: the closed-loop simulation;
//! - [`report`]: CSV output of runs and sweeps;
//! - [`cli`]: the `mirage` command line.

pub mod analysis;
pub mod attacker;
pub mod channel;
pub mod cli;
pub mod engine;
pub mod programmer;
pub mod quantifier;
pub mod report;
pub mod tag;
pub mod trace;

pub use analysis::{
    autocorrelation, flatness, mean_abs_acf, Correlogram, FlatnessReport, OverheadReport,
};
pub use attacker::TrendSeries;
pub use channel::{read_probability, ChannelParams};
pub use engine::{derive_seed, run, run_batch, SimConfig, SimError, SimulationReport};
pub use quantifier::{GoalMode, GoalPolicy};
pub use tag::{ItemType, ShelfState, Tag, TagId};
pub use trace::{CompetingProducts, DiscountCycle, ThresholdRestock, Trace};
