use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{invalid, Error, Result};
use crate::math::{dot, max_abs};
use crate::problem::Problem;

/// The matrix-vector products kept up to date between iterations.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Maintained {
    /// `Aᵀy`. `Aᵀȳ` differs from it only through the last dual update.
    DualProduct { aty: Vec<f64> },
    /// `Ax` and `Ax̄`.
    PrimalProduct { ax: Vec<f64>, ax_bar: Vec<f64> },
    /// `u = Uᵀy`, `ū = Uᵀȳ`, `v = Vx`, `v̄ = Vx̄` for `A = UV`.
    Factorized {
        u: Vec<f64>,
        u_bar: Vec<f64>,
        v: Vec<f64>,
        v_bar: Vec<f64>,
    },
}

/// Which product to maintain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaintainedKind {
    DualProduct,
    PrimalProduct,
    Factorized,
}

impl MaintainedKind {
    /// `Aᵀy` when `n/m ≥ p/q` (ties included), otherwise `Ax`.
    pub fn by_rule(n: usize, p: usize, q: usize, m: usize) -> Self {
        // n/m ≥ p/q  ⇔  n·q ≥ p·m
        if (n as u128) * (q as u128) >= (p as u128) * (m as u128) {
            MaintainedKind::DualProduct
        } else {
            MaintainedKind::PrimalProduct
        }
    }
}

impl Maintained {
    pub fn kind(&self) -> MaintainedKind {
        match self {
            Maintained::DualProduct { .. } => MaintainedKind::DualProduct,
            Maintained::PrimalProduct { .. } => MaintainedKind::PrimalProduct,
            Maintained::Factorized { .. } => MaintainedKind::Factorized,
        }
    }

    pub(crate) fn compute(
        kind: MaintainedKind,
        a: &DataMatrix,
        x: &[f64],
        x_bar: &[f64],
        y: &[f64],
        y_bar: &[f64],
    ) -> Result<Self> {
        Ok(match kind {
            MaintainedKind::DualProduct => Maintained::DualProduct {
                aty: a.apply_transpose(y)?,
            },
            MaintainedKind::PrimalProduct => Maintained::PrimalProduct {
                ax: a.apply(x)?,
                ax_bar: a.apply(x_bar)?,
            },
            MaintainedKind::Factorized => {
                let f = a
                    .as_factorized()
                    .ok_or_else(|| invalid("factorized products need factorized storage"))?;
                let d = f.rank();
                let ut = |w: &[f64]| {
                    let mut out = vec![0.0; d];
                    for (i, &wi) in w.iter().enumerate() {
                        crate::math::axpy(wi, f.u_row(i), &mut out);
                    }
                    out
                };
                let vx = |w: &[f64]| (0..d).map(|k| dot(f.v().row(k), w)).collect::<Vec<f64>>();
                Maintained::Factorized {
                    u: ut(y),
                    u_bar: ut(y_bar),
                    v: vx(x),
                    v_bar: vx(x_bar),
                }
            }
        })
    }
}

/// Primal and dual iterates with their extrapolations.
///
/// `x̄ = x_prev + (θ+1)(x − x_prev)` and `ȳ = y_prev + (n/m)(y − y_prev)` hold
/// for every coordinate after every step.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct IterateState {
    pub(crate) x: Vec<f64>,
    pub(crate) y: Vec<f64>,
    pub(crate) x_prev: Vec<f64>,
    pub(crate) x_bar: Vec<f64>,
    pub(crate) y_bar: Vec<f64>,
    pub(crate) maintained: Maintained,
    pub(crate) iteration: u64,
    /// Blocks touched by the previous step, whose extrapolations still differ
    /// from the iterates.
    pub(crate) last_dual: Vec<usize>,
    pub(crate) last_primal: Vec<usize>,
}

impl IterateState {
    pub fn new(problem: &Problem, kind: MaintainedKind, x0: Option<&[f64]>, y0: Option<&[f64]>) -> Result<Self> {
        let x = match x0 {
            Some(v) if v.len() != problem.primal_dim() => {
                return Err(invalid(format!(
                    "initial x has length {}, expected {}",
                    v.len(),
                    problem.primal_dim()
                )))
            }
            Some(v) => v.to_vec(),
            None => vec![0.0; problem.primal_dim()],
        };
        let y = match y0 {
            Some(v) if v.len() != problem.dual_dim() => {
                return Err(invalid(format!(
                    "initial y has length {}, expected {}",
                    v.len(),
                    problem.dual_dim()
                )))
            }
            Some(v) => v.to_vec(),
            None => vec![0.0; problem.dual_dim()],
        };
        if let Some(k) = problem
            .losses()
            .iter()
            .zip(&y)
            .position(|(l, &b)| !l.in_domain(b))
        {
            return Err(invalid(format!("initial y[{k}] is outside the conjugate domain")));
        }
        let maintained = Maintained::compute(kind, problem.matrix(), &x, &x, &y, &y)?;
        Ok(IterateState {
            x_prev: x.clone(),
            x_bar: x.clone(),
            y_bar: y.clone(),
            x,
            y,
            maintained,
            iteration: 0,
            last_dual: Vec::new(),
            last_primal: Vec::new(),
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x_prev(&self) -> &[f64] {
        &self.x_prev
    }

    pub fn x_bar(&self) -> &[f64] {
        &self.x_bar
    }

    pub fn y_bar(&self) -> &[f64] {
        &self.y_bar
    }

    pub fn maintained(&self) -> &Maintained {
        &self.maintained
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.x, self.y)
    }

    /// Largest relative discrepancy between the maintained products and their
    /// recomputation, as `(name, error)`. Errors are measured against
    /// `max(1, ‖fresh‖∞)` so that products near zero are compared absolutely.
    pub fn drift(&self, a: &DataMatrix) -> Result<(&'static str, f64)> {
        let fresh = Maintained::compute(
            self.maintained.kind(),
            a,
            &self.x,
            &self.x_bar,
            &self.y,
            &self.y_bar,
        )?;
        let rel = |got: &[f64], want: &[f64]| {
            let scale = max_abs(want).max(1.0);
            got.iter()
                .zip(want)
                .fold(0.0f64, |m, (g, w)| m.max((g - w).abs()))
                / scale
        };
        let pairs: Vec<(&'static str, f64)> = match (&self.maintained, &fresh) {
            (Maintained::DualProduct { aty }, Maintained::DualProduct { aty: f }) => {
                vec![("A^T y", rel(aty, f))]
            }
            (Maintained::PrimalProduct { ax, ax_bar }, Maintained::PrimalProduct { ax: f, ax_bar: fb }) => {
                vec![("A x", rel(ax, f)), ("A x_bar", rel(ax_bar, fb))]
            }
            (
                Maintained::Factorized { u, u_bar, v, v_bar },
                Maintained::Factorized {
                    u: fu,
                    u_bar: fub,
                    v: fv,
                    v_bar: fvb,
                },
            ) => vec![
                ("U^T y", rel(u, fu)),
                ("U^T y_bar", rel(u_bar, fub)),
                ("V x", rel(v, fv)),
                ("V x_bar", rel(v_bar, fvb)),
            ],
            _ => unreachable!("recomputation keeps the kind"),
        };
        Ok(pairs
            .into_iter()
            .fold(("", 0.0), |acc, p| if p.1 > acc.1 { p } else { acc }))
    }

    pub(crate) fn check_drift(&self, a: &DataMatrix, tolerance: f64) -> Result<()> {
        let (product, relative_error) = self.drift(a)?;
        if !(relative_error <= tolerance) {
            return Err(Error::Consistency {
                product,
                iteration: self.iteration,
                relative_error,
            });
        }
        Ok(())
    }
}
