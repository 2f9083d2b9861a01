//! DSPDC and its variants, the SPDC and SDCA baselines, step-size rules and
//! theoretical envelopes.

mod baselines;
mod engine;
mod params;
mod state;
pub mod theory;
mod trace;

pub use baselines::{sdca_run, spdc_run};
pub use engine::{
    bdspdc_run, dspdc_factorized_run, dspdc_run, dspdc_run_maintaining, dspdc_step, DspdcSolver,
    DRIFT_TOLERANCE,
};
pub use params::{compute_params, Mode, RunSettings, SolverParams, BALANCE_TOLERANCE, PRODUCT_TOLERANCE};
pub use state::{IterateState, Maintained, MaintainedKind};
pub use trace::{Checkpoints, Clock, NoClock, RunOptions, RunOutput, SolverStats, TraceRecord};
