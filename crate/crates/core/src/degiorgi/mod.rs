//! Level-set truncation machinery: level and radius schedules, level energies,
//! the measure bound for super-level sets, the superlinear recursion and two
//! diagnostics comparing solver output with the local energy and local maximum
//! estimates.
//!
//! The gradient and embedding bounds for truncations are not separate operations:
//! both enter through the energy norm that `energy_estimate_diagnostic` evaluates
//! on the inner cylinder. The time cutoff `1_{(-inf, t]}` is a sharp indicator on
//! the sample times.

mod energy;
mod levels;
mod local_max;
mod recursion;
mod schedule;

pub use energy::{energy_estimate_diagnostic, energy_pairs, Centre, EnergyDiagnostic, EnergyFit};
pub use levels::{
    cut_after, level_energy, level_truncate, lk1_check, support_indicator, Lk1Report,
};
pub use local_max::{local_max_diagnostic, LocalMaxReport};
pub use recursion::{recursion_simulate, RecursionParams, RecursionReport, DECAY_SLACK};
pub use schedule::{schedule, schedule_violation, LevelSchedule, LevelStep};
