use crate::error::{Error, Result};
use crate::function::FeFunction;
use crate::operator::{P1Operator, SweepDirection};

use super::LinearOperator;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SmootherKind {
    /// Damped Jacobi with weight `omega` in `(0, 1]`.
    Jacobi { omega: f64 },
    /// Hybrid Gauss-Seidel: forward before, backward after the coarse
    /// correction.
    GaussSeidel,
    /// Chebyshev acceleration of Jacobi on `[lo * λ, hi * λ]`, where `λ`
    /// is the estimated largest eigenvalue of `D^-1 A`.
    Chebyshev { order: usize, lo: f64, hi: f64 },
}

impl SmootherKind {
    pub fn chebyshev() -> Self {
        SmootherKind::Chebyshev {
            order: 2,
            lo: 0.25,
            hi: 1.1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SmootherKind::Jacobi { .. } => "jacobi",
            SmootherKind::GaussSeidel => "gs",
            SmootherKind::Chebyshev { .. } => "chebyshev",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmootherConfig {
    pub kind: SmootherKind,
    pub pre: usize,
    pub post: usize,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        Self {
            kind: SmootherKind::GaussSeidel,
            pre: 1,
            post: 1,
        }
    }
}

impl SmootherConfig {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            SmootherKind::Jacobi { omega } if !(omega > 0.0 && omega <= 1.0) => {
                Err(Error::Unsupported(format!("Jacobi weight {omega} outside (0, 1]")))
            }
            SmootherKind::Chebyshev { order, lo, hi } if order == 0 || !(0.0 < lo && lo < hi) => Err(
                Error::Unsupported(format!("Chebyshev order {order} on [{lo}, {hi}] is invalid")),
            ),
            _ => Ok(()),
        }
    }
}

/// Applies `sweeps` smoothing steps for `A x = b` on `level`.
///
/// `inv_diag` is the reciprocal of the operator diagonal; `lambda` is the
/// spectral estimate for Chebyshev and ignored otherwise. `direction`
/// picks the Gauss-Seidel ordering.
#[allow(clippy::too_many_arguments)]
pub fn smooth(
    kind: SmootherKind,
    sweeps: usize,
    op: &P1Operator,
    inv_diag: &FeFunction,
    lambda: Option<f64>,
    b: &FeFunction,
    x: &mut FeFunction,
    level: u32,
    direction: SweepDirection,
) -> Result<()> {
    if sweeps == 0 {
        return Ok(());
    }
    let mut r = b.zeros_like("smooth_r");
    let residual = |x: &FeFunction, r: &mut FeFunction| -> Result<()> {
        op.apply_to(x, r, level)?;
        r.axpby(1.0, b, -1.0, level)?;
        r.multiply(inv_diag, level)
    };
    match kind {
        SmootherKind::GaussSeidel => {
            for _ in 0..sweeps {
                op.gauss_seidel(b, x, level, direction)?;
            }
        }
        SmootherKind::Jacobi { omega } => {
            for _ in 0..sweeps {
                residual(x, &mut r)?;
                x.axpy(omega, &r, level)?;
            }
        }
        SmootherKind::Chebyshev { order, lo, hi } => {
            let lambda = lambda.ok_or_else(|| {
                Error::Unsupported("Chebyshev smoothing needs an eigenvalue estimate".into())
            })?;
            let (a, b_) = (lo * lambda, hi * lambda);
            let theta = 0.5 * (b_ + a);
            let delta = 0.5 * (b_ - a);
            let sigma = theta / delta;
            let mut d = r.zeros_like("smooth_d");
            for _ in 0..sweeps {
                let mut rho = 1.0 / sigma;
                residual(x, &mut r)?;
                d.assign(1.0 / theta, &r, 0.0, &r, level)?;
                x.axpy(1.0, &d, level)?;
                for _ in 1..order {
                    let rho_next = 1.0 / (2.0 * sigma - rho);
                    residual(x, &mut r)?;
                    d.axpby(2.0 * rho_next / delta, &r, rho_next * rho, level)?;
                    x.axpy(1.0, &d, level)?;
                    rho = rho_next;
                }
            }
        }
    }
    Ok(())
}
