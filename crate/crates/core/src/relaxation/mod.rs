//! Relaxed energy on the finiteness domain, recovery sequences and the
//! block counterexample.

pub mod counterexample;
pub mod functional;
pub mod recovery;

pub use counterexample::{counterexample_diagnostics, counterexample_weight, CounterexampleDiagnostics};
pub use functional::{compactness_demo, energy, lsc_probe, relaxed_functional, CompactnessReport, LscReport, RelaxedValue};
pub use recovery::{bar_weight, build_primitive, build_recovery, mollify_derivative, recovery_schedule, BarWeight, Mollified, RecoveryStep, DEFAULT_SCHEDULE};
