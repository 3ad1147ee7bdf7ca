//! Seeded Monte-Carlo experiments and their CSV output.
//!
//! An [`ExperimentSpec`] names one experiment kind, a base configuration,
//! the swept values and the methods to run. Every trial draws its channels
//! from a seed derived from the master seed and the trial index only, so
//! the same channels are reused across sweep values and reruns reproduce
//! the output exactly (with timing disabled).

mod output;
mod run;
mod spec;

pub use output::{emit_csv, write_csv, CSV_HEADER};
pub use run::{run_experiment, run_trial, trial_seed};
pub use spec::{BaseConfig, ExperimentKind, ExperimentSpec, Method, Overrides, PointConfig, SweepSection};
