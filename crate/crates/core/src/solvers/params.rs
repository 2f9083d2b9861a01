use alloc::format;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::data::LambdaPolicy;
use crate::error::{invalid, Result};
use crate::math::sqrt;
use crate::problem::Problem;

/// Which guarantee the extrapolation weight targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Mode {
    /// Linear convergence of the distance to the saddle point.
    #[default]
    Distance,
    /// Linear convergence of the primal-dual gap (larger `θ`).
    Gap,
}

/// Step sizes and sampling sizes for one DSPDC run, together with the problem
/// constants they were derived from.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SolverParams {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub m: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub scale_constant: f64,
    pub theta: f64,
    pub tau: f64,
    pub sigma: f64,
    pub mode: Mode,
    pub max_iters: u64,
    /// Early stop once the gap at a checkpoint is at most this; 0 disables.
    pub gap_tolerance: f64,
    pub seed: u64,
}

/// Solver-independent run settings; `Λ` is resolved per problem.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RunSettings {
    pub max_iters: u64,
    pub gap_tolerance: f64,
    pub seed: u64,
    pub mode: Mode,
    pub lambda: LambdaPolicy,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            max_iters: 1000,
            gap_tolerance: 0.0,
            seed: 0,
            mode: Mode::Distance,
            lambda: LambdaPolicy::Auto,
        }
    }
}

/// `√(Λ/(λγn)) · np/(mq)` and `max{n/m, p/q}`.
fn rate_terms(n: f64, p: f64, q: f64, m: f64, lambda: f64, gamma: f64, big: f64) -> (f64, f64) {
    let coupling = sqrt(big / (lambda * gamma * n)) * (n * p) / (m * q);
    let balance = (n / m).max(p / q);
    (coupling, balance)
}

pub(crate) fn theta_for(mode: Mode, coupling: f64, balance: f64, p_over_q: f64) -> f64 {
    let denom = match mode {
        Mode::Distance => coupling + balance,
        Mode::Gap => 2.0 * coupling + 2.0 * balance,
    };
    p_over_q - p_over_q / denom
}

/// Derives `θ`, `τ`, `σ` so that `τσ = nmq/(4pΛ)` and
/// `p/(2qλτ) + p/q = n²/(2mγσ) + n/m`.
#[allow(clippy::too_many_arguments)]
pub fn compute_params(
    n: usize,
    p: usize,
    q: usize,
    m: usize,
    lambda: f64,
    gamma: f64,
    scale_constant: f64,
    mode: Mode,
) -> Result<SolverParams> {
    if n == 0 || p == 0 || q == 0 || m == 0 {
        return Err(invalid(format!("dimensions must be positive (n={n}, p={p}, q={q}, m={m})")));
    }
    if q > p || m > n {
        return Err(invalid(format!("need q ≤ p and m ≤ n (n={n}, p={p}, q={q}, m={m})")));
    }
    for (name, v) in [("lambda", lambda), ("gamma", gamma), ("scale constant", scale_constant)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(format!("{name} must be positive and finite, got {v}")));
        }
    }
    let (nf, pf, qf, mf) = (n as f64, p as f64, q as f64, m as f64);
    let (coupling, balance) = rate_terms(nf, pf, qf, mf, lambda, gamma, scale_constant);
    let a = nf / mf - pf / qf;
    let four_c2 = 4.0 * coupling * coupling;
    let s = sqrt(a * a + four_c2);
    // a + s and s − a, each computed without cancellation
    let (plus, minus) = if a >= 0.0 {
        (a + s, four_c2 / (a + s))
    } else {
        (four_c2 / (s - a), s - a)
    };
    let tau = (pf / (qf * lambda)) / plus;
    let sigma = (nf * nf / (mf * gamma)) / minus;
    let theta = theta_for(mode, coupling, balance, pf / qf);
    let params = SolverParams {
        n,
        p,
        q,
        m,
        lambda,
        gamma,
        scale_constant,
        theta,
        tau,
        sigma,
        mode,
        max_iters: 0,
        gap_tolerance: 0.0,
        seed: 0,
    };
    params.validate()?;
    Ok(params)
}

pub const PRODUCT_TOLERANCE: f64 = 1e-12;
pub const BALANCE_TOLERANCE: f64 = 1e-10;

impl SolverParams {
    /// Resolves `Λ` for `problem` and derives the step sizes.
    pub fn for_problem(problem: &Problem, q: usize, m: usize, settings: &RunSettings) -> Result<Self> {
        let big = settings
            .lambda
            .resolve(problem.matrix(), problem.partition(), q, m)?;
        let mut params = compute_params(
            problem.n(),
            problem.p(),
            q,
            m,
            problem.lambda(),
            problem.gamma(),
            big,
            settings.mode,
        )?;
        params.max_iters = settings.max_iters;
        params.gap_tolerance = settings.gap_tolerance;
        params.seed = settings.seed;
        Ok(params)
    }

    pub fn with_budget(mut self, max_iters: u64, gap_tolerance: f64) -> Self {
        self.max_iters = max_iters;
        self.gap_tolerance = gap_tolerance;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Relative residual of `τσ = nmq/(4pΛ)`.
    pub fn product_residual(&self) -> f64 {
        let (n, p, q, m) = (self.n as f64, self.p as f64, self.q as f64, self.m as f64);
        (self.tau * self.sigma * 4.0 * p * self.scale_constant / (n * m * q) - 1.0).abs()
    }

    /// Relative residual of `p/(2qλτ) + p/q = n²/(2mγσ) + n/m`.
    pub fn balance_residual(&self) -> f64 {
        let (n, p, q, m) = (self.n as f64, self.p as f64, self.q as f64, self.m as f64);
        let lhs = p / (2.0 * q * self.lambda * self.tau) + p / q;
        let rhs = n * n / (2.0 * m * self.gamma * self.sigma) + n / m;
        (lhs - rhs).abs() / lhs.abs().max(rhs.abs())
    }

    /// `θ` prescribed for the current mode and constants.
    pub fn prescribed_theta(&self) -> f64 {
        let (n, p, q, m) = (self.n as f64, self.p as f64, self.q as f64, self.m as f64);
        let (coupling, balance) = rate_terms(n, p, q, m, self.lambda, self.gamma, self.scale_constant);
        theta_for(self.mode, coupling, balance, p / q)
    }

    /// Checks the step-size relations and the extrapolation weight.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 || self.q == 0 || self.m == 0 || self.q > self.p || self.m > self.n {
            return Err(invalid(format!(
                "inconsistent sampling sizes (n={}, p={}, q={}, m={})",
                self.n, self.p, self.q, self.m
            )));
        }
        for (name, v) in [
            ("lambda", self.lambda),
            ("gamma", self.gamma),
            ("scale constant", self.scale_constant),
            ("tau", self.tau),
            ("sigma", self.sigma),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.gap_tolerance >= 0.0) {
            return Err(invalid("gap tolerance must be nonnegative"));
        }
        let pq = self.p as f64 / self.q as f64;
        if !(self.theta > 0.0 && self.theta < pq) {
            return Err(invalid(format!(
                "theta = {} outside (0, p/q = {pq})",
                self.theta
            )));
        }
        let want = self.prescribed_theta();
        if (self.theta - want).abs() > 1e-12 * want {
            return Err(invalid(format!(
                "theta = {} differs from the prescribed {want} for {:?} mode",
                self.theta, self.mode
            )));
        }
        let r = self.product_residual();
        if r > PRODUCT_TOLERANCE {
            return Err(invalid(format!("tau*sigma relation violated (relative residual {r:e})")));
        }
        let r = self.balance_residual();
        if r > BALANCE_TOLERANCE {
            return Err(invalid(format!("step-size balance violated (relative residual {r:e})")));
        }
        Ok(())
    }

    /// Validation plus agreement with the problem's dimensions and moduli.
    pub fn validate_for(&self, problem: &Problem) -> Result<()> {
        self.validate()?;
        if self.n != problem.n() || self.p != problem.p() {
            return Err(invalid(format!(
                "parameters are for n={}, p={} but the problem has n={}, p={}",
                self.n,
                self.p,
                problem.n(),
                problem.p()
            )));
        }
        let slack = 1.0 + 1e-12;
        if self.lambda > problem.lambda() * slack || self.gamma > problem.gamma() * slack {
            return Err(invalid(format!(
                "parameters assume lambda={}, gamma={} but the problem only guarantees {}, {}",
                self.lambda,
                self.gamma,
                problem.lambda(),
                problem.gamma()
            )));
        }
        Ok(())
    }
}
