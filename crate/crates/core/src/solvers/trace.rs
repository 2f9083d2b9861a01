use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::IterateState;
use crate::error::{invalid, Result};
use crate::metrics::ReferenceSolution;

/// Metrics recorded at one checkpoint.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TraceRecord {
    pub iteration: u64,
    /// Seconds since the run started, from the caller's clock.
    pub elapsed: f64,
    pub primal: f64,
    pub dual: Option<f64>,
    pub gap: Option<f64>,
    /// `‖x − x*‖² + ‖y − y*‖²` when a reference is known.
    pub dist_sq: Option<f64>,
    pub dist_x_sq: Option<f64>,
    pub dist_y_sq: Option<f64>,
}

/// Iterations (besides 0, which is always recorded) at which to record.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Checkpoints(Vec<u64>);

impl Checkpoints {
    pub fn new(iterations: Vec<u64>) -> Result<Self> {
        if iterations.first() == Some(&0) {
            return Err(invalid("checkpoint 0 is always recorded; list only later iterations"));
        }
        if iterations.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("checkpoints must be strictly increasing"));
        }
        Ok(Checkpoints(iterations))
    }

    pub fn none() -> Self {
        Checkpoints(Vec::new())
    }

    /// `every, 2·every, …` up to `max`.
    pub fn linear(every: u64, max: u64) -> Result<Self> {
        if every == 0 {
            return Err(invalid("linear checkpoint spacing must be positive"));
        }
        Ok(Checkpoints((1..=max / every).map(|k| k * every).collect()))
    }

    /// `first, first·factor, …` (rounded, deduplicated) up to `max`.
    pub fn geometric(first: u64, factor: f64, max: u64) -> Result<Self> {
        if first == 0 || !(factor > 1.0) {
            return Err(invalid("geometric checkpoints need first ≥ 1 and factor > 1"));
        }
        let mut out: Vec<u64> = Vec::new();
        let mut v = first as f64;
        while v <= max as f64 {
            let k = libm::round(v) as u64;
            if out.last().is_none_or(|&l| k > l) {
                out.push(k);
            }
            v *= factor;
        }
        Ok(Checkpoints(out))
    }

    pub fn iterations(&self) -> &[u64] {
        &self.0
    }
}

/// Monotonic time source; the core crate has none of its own.
pub trait Clock: Sync {
    fn now(&self) -> f64;
}

/// Reports zero elapsed time.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> f64 {
        0.0
    }
}

static NO_CLOCK: NoClock = NoClock;

/// Per-run options that are not step-size parameters.
#[derive(Clone)]
pub struct RunOptions<'a> {
    pub checkpoints: Checkpoints,
    pub reference: Option<&'a ReferenceSolution>,
    pub clock: &'a dyn Clock,
    pub x0: Option<&'a [f64]>,
    pub y0: Option<&'a [f64]>,
    /// Recompute maintained products every this many iterations; 0 disables.
    pub drift_check_every: u64,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        RunOptions {
            checkpoints: Checkpoints::none(),
            reference: None,
            clock: &NO_CLOCK,
            x0: None,
            y0: None,
            drift_check_every: 1000,
        }
    }
}

impl<'a> RunOptions<'a> {
    pub fn with_checkpoints(mut self, c: Checkpoints) -> Self {
        self.checkpoints = c;
        self
    }

    pub fn with_reference(mut self, r: &'a ReferenceSolution) -> Self {
        self.reference = Some(r);
        self
    }

    pub fn with_clock(mut self, c: &'a dyn Clock) -> Self {
        self.clock = c;
        self
    }
}

/// Work counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SolverStats {
    pub iterations: u64,
    pub primal_coordinate_updates: u64,
    pub dual_coordinate_updates: u64,
    pub eigendecompositions: u64,
    /// Multiply-adds spent in matrix-vector products and maintained updates.
    pub flops: u64,
    pub drift_checks: u64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: IterateState,
    pub trace: Vec<TraceRecord>,
    pub stats: SolverStats,
    pub warnings: Vec<String>,
}

impl RunOutput {
    pub fn last_record(&self) -> Option<&TraceRecord> {
        self.trace.last()
    }
}

pub(crate) fn describe_divergence(iteration: u64, omega: f64, omega0: f64) -> String {
    format!(
        "weighted distance grew to {omega:e} at iteration {iteration}, over 10x its initial {omega0:e}; \
         the scale constant may be below the true value"
    )
}
