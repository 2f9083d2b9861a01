use alloc::format;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math::{ln, sigmoid, softplus, xlogx};

/// Newton tolerance on the logit of the logistic dual variable.
pub const LOGISTIC_TOLERANCE: f64 = 1e-12;
pub const LOGISTIC_MAX_ITERS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LossKind {
    /// `φ(z) = (z − b)² / (2γ)`; the default `γ = 1/2` gives `(z − b)²`.
    Square,
    /// `φ(z) = log(1 + exp(−bz))`, `γ = 4`.
    Logistic,
    /// Quadratically smoothed hinge, `γ = 1`.
    SmoothedHinge,
}

/// A `(1/γ)`-smooth loss `φ_i` attached to one dual coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "LossRepr", into = "LossRepr"))]
pub struct SmoothLoss {
    kind: LossKind,
    label: f64,
    gamma: f64,
}

#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[allow(dead_code)]
struct LossRepr {
    kind: LossKind,
    label: f64,
    gamma: f64,
}

impl From<SmoothLoss> for LossRepr {
    fn from(l: SmoothLoss) -> Self {
        LossRepr {
            kind: l.kind,
            label: l.label,
            gamma: l.gamma,
        }
    }
}

impl TryFrom<LossRepr> for SmoothLoss {
    type Error = Error;
    fn try_from(r: LossRepr) -> Result<Self> {
        match r.kind {
            LossKind::Square => SmoothLoss::square_scaled(r.label, r.gamma),
            kind => {
                let l = SmoothLoss::classification(kind, r.label)?;
                if l.gamma != r.gamma {
                    return Err(invalid(format!(
                        "{kind:?} loss has fixed gamma {}, got {}",
                        l.gamma, r.gamma
                    )));
                }
                Ok(l)
            }
        }
    }
}

fn check_sign_label(b: f64) -> Result<()> {
    if b == 1.0 || b == -1.0 {
        Ok(())
    } else {
        Err(invalid(format!("classification labels must be ±1, got {b}")))
    }
}

impl SmoothLoss {
    pub fn square(label: f64) -> Result<Self> {
        Self::square_scaled(label, 0.5)
    }

    /// `(z − b)² / (2γ)` for any `γ > 0`.
    pub fn square_scaled(label: f64, gamma: f64) -> Result<Self> {
        if !label.is_finite() {
            return Err(invalid("label must be finite"));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid(format!("gamma must be positive, got {gamma}")));
        }
        Ok(SmoothLoss {
            kind: LossKind::Square,
            label,
            gamma,
        })
    }

    pub fn logistic(label: f64) -> Result<Self> {
        check_sign_label(label)?;
        Ok(SmoothLoss {
            kind: LossKind::Logistic,
            label,
            gamma: 4.0,
        })
    }

    pub fn smoothed_hinge(label: f64) -> Result<Self> {
        check_sign_label(label)?;
        Ok(SmoothLoss {
            kind: LossKind::SmoothedHinge,
            label,
            gamma: 1.0,
        })
    }

    pub fn classification(kind: LossKind, label: f64) -> Result<Self> {
        match kind {
            LossKind::Square => Self::square(label),
            LossKind::Logistic => Self::logistic(label),
            LossKind::SmoothedHinge => Self::smoothed_hinge(label),
        }
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn label(&self) -> f64 {
        self.label
    }

    /// Strong-convexity modulus of the conjugate.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn value(&self, z: f64) -> f64 {
        let b = self.label;
        match self.kind {
            LossKind::Square => (z - b) * (z - b) / (2.0 * self.gamma),
            LossKind::Logistic => softplus(-b * z),
            LossKind::SmoothedHinge => {
                let bz = b * z;
                if bz >= 1.0 {
                    0.0
                } else if bz <= 0.0 {
                    0.5 - bz
                } else {
                    0.5 * (1.0 - bz) * (1.0 - bz)
                }
            }
        }
    }

    pub fn grad(&self, z: f64) -> f64 {
        let b = self.label;
        match self.kind {
            LossKind::Square => (z - b) / self.gamma,
            LossKind::Logistic => -b * sigmoid(-b * z),
            LossKind::SmoothedHinge => {
                let bz = b * z;
                if bz >= 1.0 {
                    0.0
                } else if bz <= 0.0 {
                    -b
                } else {
                    -b * (1.0 - bz)
                }
            }
        }
    }

    /// Whether `β` lies in the domain of `φ*`.
    pub fn in_domain(&self, beta: f64) -> bool {
        match self.kind {
            LossKind::Square => beta.is_finite(),
            LossKind::Logistic | LossKind::SmoothedHinge => {
                let bb = self.label * beta;
                (-1.0..=0.0).contains(&bb)
            }
        }
    }

    /// `φ*(β)`, or `+∞` outside the domain.
    pub fn conjugate(&self, beta: f64) -> f64 {
        if !self.in_domain(beta) {
            return f64::INFINITY;
        }
        let b = self.label;
        match self.kind {
            LossKind::Square => b * beta + 0.5 * self.gamma * beta * beta,
            LossKind::SmoothedHinge => b * beta + 0.5 * beta * beta,
            LossKind::Logistic => {
                let w = -b * beta;
                xlogx(w) + xlogx(1.0 - w)
            }
        }
    }

    /// `(φ*)'(β)` on the interior of the domain.
    pub fn conjugate_grad(&self, beta: f64) -> f64 {
        let b = self.label;
        match self.kind {
            LossKind::Square => b + self.gamma * beta,
            LossKind::SmoothedHinge => b + beta,
            LossKind::Logistic => {
                let w = -b * beta;
                -b * (ln(w) - ln(1.0 - w))
            }
        }
    }

    /// Maximizer over `β` of `(u β − φ*(β)) / n − (β − y)² / (2σ)`.
    pub fn dual_prox(&self, u: f64, y: f64, sigma: f64, n: f64) -> Result<f64> {
        let b = self.label;
        match self.kind {
            LossKind::Square => Ok(quadratic_prox(u, y, sigma, n, b, self.gamma)),
            LossKind::SmoothedHinge => {
                let beta = quadratic_prox(u, y, sigma, n, b, 1.0);
                Ok(b * (b * beta).clamp(-1.0, 0.0))
            }
            LossKind::Logistic => logistic_prox(u, y, sigma, n, b),
        }
    }
}

#[inline]
fn quadratic_prox(u: f64, y: f64, sigma: f64, n: f64, b: f64, gamma: f64) -> f64 {
    (sigma * (u - b) / n + y) / (sigma * gamma / n + 1.0)
}

/// Solves the stationarity condition in logit coordinates. With
/// `β = −b·sigmoid(t)` it reads `F(t) = bu/n + t/n + (sigmoid(t) + by)/σ = 0`,
/// and `F` is strictly increasing, so the root is unique and bracketed by
/// replacing `sigmoid(t)` with its bounds 0 and 1.
fn logistic_prox(u: f64, y: f64, sigma: f64, n: f64, b: f64) -> Result<f64> {
    let (bu, by) = (b * u, b * y);
    let f = |t: f64| bu / n + t / n + (sigmoid(t) + by) / sigma;
    let mut lo = -n * (bu / n + (1.0 + by) / sigma);
    let mut hi = -n * (bu / n + by / sigma);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Numerical {
            context: "logistic dual prox",
            detail: format!("non-finite bracket for u={u}, y={y}, sigma={sigma}, n={n}"),
        });
    }
    // F is convex for t < 0 and concave for t > 0, so Newton started at the
    // clamped inflection point approaches the root monotonically.
    let mut t = 0.0f64.clamp(lo, hi);
    for _ in 0..LOGISTIC_MAX_ITERS {
        let ft = f(t);
        if ft == 0.0 {
            return Ok(-b * sigmoid(t));
        }
        if ft > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let s = sigmoid(t);
        let slope = 1.0 / n + s * (1.0 - s) / sigma;
        let newton = t - ft / slope;
        if (newton - t).abs() <= LOGISTIC_TOLERANCE * (1.0 + t.abs()) {
            return Ok(-b * sigmoid(newton.clamp(lo, hi)));
        }
        t = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= LOGISTIC_TOLERANCE * (1.0 + t.abs()) {
            return Ok(-b * sigmoid(t));
        }
    }
    Err(Error::Numerical {
        context: "logistic dual prox",
        detail: format!(
            "no convergence in {LOGISTIC_MAX_ITERS} iterations (u={u}, y={y}, sigma={sigma}, n={n}, bracket=[{lo}, {hi}])"
        ),
    })
}
