//! Rate constants and envelopes of the convergence guarantees.

use super::{Mode, SolverParams};
use crate::math::sqrt;

fn terms(p: &SolverParams) -> (f64, f64, f64, f64, f64, f64) {
    let (n, pp, q, m) = (p.n as f64, p.p as f64, p.q as f64, p.m as f64);
    let coupling = sqrt(p.scale_constant / (p.lambda * p.gamma * n)) * n * pp / (m * q);
    let balance = (n / m).max(pp / q);
    (n, pp, q, m, coupling, balance)
}

/// `1 − 1/(max{p/q, n/m} + √(Λ/(λγn))·np/(mq))`.
pub fn distance_rate(p: &SolverParams) -> f64 {
    let (.., coupling, balance) = terms(p);
    1.0 - 1.0 / (balance + coupling)
}

/// `1 − 1/(2√(Λ/(λγn))·np/(mq) + 2 max{n/m, p/q})`.
pub fn gap_rate(p: &SolverParams) -> f64 {
    let (.., coupling, balance) = terms(p);
    1.0 - 1.0 / (2.0 * coupling + 2.0 * balance)
}

/// Rate matching the parameters' mode.
pub fn rate(p: &SolverParams) -> f64 {
    match p.mode {
        Mode::Distance => distance_rate(p),
        Mode::Gap => gap_rate(p),
    }
}

/// `(p/(2qτ) + pλ/q)‖x − x*‖² + (n/(4mσ) + γ/m)‖y − y*‖²`.
pub fn omega(p: &SolverParams, dist_x_sq: f64, dist_y_sq: f64) -> f64 {
    let (n, pp, q, m, ..) = terms(p);
    (pp / (2.0 * q * p.tau) + pp * p.lambda / q) * dist_x_sq + (n / (4.0 * m * p.sigma) + p.gamma / m) * dist_y_sq
}

/// Right-hand side weight at `t = 0`: the dual coefficient uses `n/(2mσ)`.
pub fn omega_initial(p: &SolverParams, dist_x_sq: f64, dist_y_sq: f64) -> f64 {
    let (n, pp, q, m, ..) = terms(p);
    (pp / (2.0 * q * p.tau) + pp * p.lambda / q) * dist_x_sq + (n / (2.0 * m * p.sigma) + p.gamma / m) * dist_y_sq
}

/// Distance envelope `ρᵗ Ω₀`.
pub fn distance_bound(p: &SolverParams, omega0: f64, t: u64) -> f64 {
    libm::pow(distance_rate(p), t as f64) * omega0
}

/// Gap envelope at iteration `t`, given `‖A‖²` and the initial distances and gap.
pub fn gap_bound(p: &SolverParams, norm_a_sq: f64, dist_x0_sq: f64, dist_y0_sq: f64, gap0: f64, t: u64) -> f64 {
    let (n, pp, q, m, _, balance) = terms(p);
    let (lam, gam) = (p.lambda, p.gamma);
    let factor = 1.0 / (pp / q).min(n / m)
        + (norm_a_sq / (n * gam)).max(norm_a_sq / (lam * n * n)) / (lam * pp / q).min(gam / m);
    let initial = (pp / (2.0 * q * p.tau) + pp * lam / (2.0 * q)) * dist_x0_sq
        + (n / (2.0 * m * p.sigma) + gam / (2.0 * m)) * dist_y0_sq
        + balance * gap0;
    libm::pow(gap_rate(p), t as f64) * factor * initial
}
