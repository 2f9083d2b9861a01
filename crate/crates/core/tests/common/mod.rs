//! Straight-line reference implementations used as oracles. They share no
//! code with the library beyond its data types.
#![allow(dead_code)]

use dspdc_core::{DataMatrix, LossKind, Problem, Regularizer, SmoothLoss};

pub fn dense_rows(a: &DataMatrix) -> Vec<Vec<f64>> {
    (0..a.rows())
        .map(|i| (0..a.cols()).map(|j| a.entry(i, j)).collect())
        .collect()
}

fn logistic_conj_slope(b: f64, beta: f64) -> f64 {
    // d/dβ of w ln w + (1−w) ln(1−w) with w = −bβ
    let w = -b * beta;
    -b * (w / (1.0 - w)).ln()
}

/// argmax_β (uβ − φ*(β))/n − (β − y)²/(2σ), written from the definitions.
pub fn dual_prox(loss: &SmoothLoss, u: f64, y: f64, sigma: f64, n: f64) -> f64 {
    let b = loss.label();
    match loss.kind() {
        LossKind::Square => {
            // φ*(β) = bβ + γβ²/2
            let g = loss.gamma();
            (u / n - b / n + y / sigma) / (g / n + 1.0 / sigma)
        }
        LossKind::SmoothedHinge => {
            let free = (u / n - b / n + y / sigma) / (1.0 / n + 1.0 / sigma);
            // feasible set bβ ∈ [−1, 0], i.e. β between 0 and −b
            let (lo, hi) = if b > 0.0 { (-1.0, 0.0) } else { (0.0, 1.0) };
            free.max(lo).min(hi)
        }
        LossKind::Logistic => {
            // the derivative is decreasing on the open interval; bisect in w
            let deriv = |beta: f64| (u - logistic_conj_slope(b, beta)) / n - (beta - y) / sigma;
            let (mut w_lo, mut w_hi) = (0.0f64, 1.0f64);
            for _ in 0..2000 {
                let w = 0.5 * (w_lo + w_hi);
                if w <= w_lo || w >= w_hi {
                    break;
                }
                // β = −b w; increasing w moves β in direction −b
                let d = deriv(-b * w) * (-b);
                if d > 0.0 {
                    w_lo = w;
                } else {
                    w_hi = w;
                }
            }
            -b * 0.5 * (w_lo + w_hi)
        }
    }
}

/// argmin_α vα/n + g(α) + (α − c)²/(2τ).
pub fn primal_prox(reg: &Regularizer, v: f64, c: f64, tau: f64, n: f64) -> f64 {
    match *reg {
        Regularizer::L2 { lambda } => (c / tau - v / n) / (lambda + 1.0 / tau),
        Regularizer::ElasticNet { l2, l1 } => {
            let z = c / tau - v / n;
            let shrunk = z.signum() * (z.abs() - l1).max(0.0);
            shrunk / (l2 + 1.0 / tau)
        }
        Regularizer::PsdFrobenius { .. } => panic!("scalar oracle only"),
    }
}

/// One iterate of the textbook algorithm: `x`, `x̄`, `y`.
#[derive(Clone, Debug)]
pub struct PlainState {
    pub x: Vec<f64>,
    pub x_bar: Vec<f64>,
    pub y: Vec<f64>,
    pub y_bar: Vec<f64>,
}

impl PlainState {
    pub fn zeros(p: usize, n: usize) -> Self {
        PlainState {
            x: vec![0.0; p],
            x_bar: vec![0.0; p],
            y: vec![0.0; n],
            y_bar: vec![0.0; n],
        }
    }
}

/// One iteration updating dual blocks `dual` and primal blocks `primal`,
/// recomputing every inner product from scratch. Losses and regularizers are
/// separable, so block proximal steps act coordinate by coordinate.
#[allow(clippy::too_many_arguments)]
pub fn plain_step(
    problem: &Problem,
    rows: &[Vec<f64>],
    theta: f64,
    tau: f64,
    sigma: f64,
    dual: &[usize],
    primal: &[usize],
    s: &PlainState,
) -> PlainState {
    let part = problem.partition();
    let nf = part.n() as f64;
    let m = dual.len() as f64;
    let (nbar, pbar) = (rows.len(), rows[0].len());
    let mut y_new = s.y.clone();
    for &blk in dual {
        for i in part.dual_range(blk) {
            let u: f64 = (0..pbar).map(|j| rows[i][j] * s.x_bar[j]).sum();
            y_new[i] = dual_prox(&problem.losses()[i], u, s.y[i], sigma, nf);
        }
    }
    let y_bar: Vec<f64> = (0..nbar).map(|i| s.y[i] + nf / m * (y_new[i] - s.y[i])).collect();
    let mut x_new = s.x.clone();
    for &blk in primal {
        for j in part.primal_range(blk) {
            let v: f64 = (0..nbar).map(|i| rows[i][j] * y_bar[i]).sum();
            x_new[j] = primal_prox(problem.regularizer(), v, s.x[j], tau, nf);
        }
    }
    let x_bar: Vec<f64> = (0..pbar).map(|j| s.x[j] + (theta + 1.0) * (x_new[j] - s.x[j])).collect();
    PlainState {
        x: x_new,
        x_bar,
        y: y_new,
        y_bar,
    }
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
