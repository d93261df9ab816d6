//! Krylov and geometric multigrid solvers on top of the matrix-free
//! operators.
//!
//! Dirichlet DoFs are handled by identity rows: solvers copy boundary
//! values from the right-hand side and then work on the constrained
//! subspace, where the operators act symmetrically.

mod multigrid;
mod smoother;
mod transfer;


pub use multigrid::{
    interpolate_rhs, l2_error, CycleType, FmgReport, GridHierarchy, LevelReport, MultigridConfig,
};
pub use smoother::{smooth, SmootherConfig, SmootherKind};
pub use transfer::{coarse_parents, prolongate_p1, restrict_p1};

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::function::{FeFunction, FunctionSpace};
use crate::operator::{ApplyMode, BoundaryMode, P1Operator};

/// Number of power iterations behind [`estimate_lambda_max`].
pub const POWER_ITERATIONS: usize = 25;

/// Safety factor applied to the final Rayleigh quotient.
pub const LAMBDA_SAFETY: f64 = 1.1;

/// Something that maps a function to a function on one level.
pub trait LinearOperator {
    fn space(&self) -> &Arc<FunctionSpace>;
    fn apply_to(&self, x: &FeFunction, y: &mut FeFunction, level: u32) -> Result<()>;
}

/// The operator with Dirichlet rows replaced by the identity.
impl LinearOperator for P1Operator {
    fn space(&self) -> &Arc<FunctionSpace> {
        P1Operator::space(self)
    }

    fn apply_to(&self, x: &FeFunction, y: &mut FeFunction, level: u32) -> Result<()> {
        self.apply(x, y, level, ApplyMode::Replace, BoundaryMode::DirichletIdentity)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    /// Final `‖b - A x‖ / ‖b‖`.
    pub residual: f64,
    pub converged: bool,
}

/// Conjugate gradients for `A x = b`, starting from `x`.
///
/// Boundary values are copied from `b` into `x` first, so the iteration
/// only ever touches the constrained subspace.
pub fn cg(
    op: &dyn LinearOperator,
    b: &FeFunction,
    x: &mut FeFunction,
    level: u32,
    tol: f64,
    max_iterations: usize,
) -> Result<CgReport> {
    x.copy_dirichlet_from(b, level)?;
    let b_norm = b.norm(level)?;
    if b_norm == 0.0 {
        x.fill(level, 0.0)?;
        return Ok(CgReport {
            iterations: 0,
            residual: 0.0,
            converged: true,
        });
    }
    let mut r = b.zeros_like("cg_r");
    let mut p = b.zeros_like("cg_p");
    let mut ap = b.zeros_like("cg_ap");
    op.apply_to(x, &mut r, level)?;
    r.axpby(1.0, b, -1.0, level)?;
    p.copy_from(&r, level)?;
    let mut rr = r.dot(&r, level)?;
    let mut iterations = 0;
    while rr.sqrt() / b_norm > tol && iterations < max_iterations {
        op.apply_to(&p, &mut ap, level)?;
        let pap = p.dot(&ap, level)?;
        if !(pap > 0.0) {
            return Err(Error::Breakdown(pap));
        }
        let alpha = rr / pap;
        x.axpy(alpha, &p, level)?;
        r.axpy(-alpha, &ap, level)?;
        let rr_new = r.dot(&r, level)?;
        p.axpby(1.0, &r, rr_new / rr, level)?;
        rr = rr_new;
        iterations += 1;
    }
    let residual = rr.sqrt() / b_norm;
    if !residual.is_finite() {
        return Err(Error::Divergence(format!("CG residual became {residual}")));
    }
    Ok(CgReport {
        iterations,
        residual,
        converged: residual <= tol,
    })
}

/// Fills `f` on `level` with uniform values in `[-1, 1)`, drawn per cell
/// in logical DoF order and then made replica-consistent.
pub fn random_fill(f: &mut FeFunction, level: u32, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = Arc::clone(f.space());
    let plan = space.level(level)?;
    let layout = space.descriptor().layout;
    for cell in f.cells_mut(level)? {
        for blk in &plan.blocks {
            for t in 0..crate::index::n_tet(blk.width) {
                for d in 0..blk.m {
                    cell[blk.base + layout.offset(blk.width, blk.m, t, d)] = rng.random_range(-1.0..1.0);
                }
            }
        }
    }
    f.sync_broadcast(level)
}

/// Entrywise reciprocal of a diagonal.
pub fn reciprocal(diag: &FeFunction, level: u32) -> Result<FeFunction> {
    let mut inv = diag.clone();
    for cell in inv.cells_mut(level)? {
        for v in cell.iter_mut() {
            if *v == 0.0 {
                return Err(Error::ZeroDiagonal);
            }
            *v = 1.0 / *v;
        }
    }
    Ok(inv)
}

/// Upper estimate of the largest eigenvalue of `D^-1 A` on the constrained
/// subspace: power iteration from a seeded random start, then the
/// Rayleigh quotient scaled by [`LAMBDA_SAFETY`].
pub fn estimate_lambda_max(op: &dyn LinearOperator, diag: &FeFunction, level: u32, seed: u64) -> Result<f64> {
    let inv = reciprocal(diag, level)?;
    let mut v = diag.zeros_like("power_v");
    let mut w = diag.zeros_like("power_w");
    random_fill(&mut v, level, seed)?;
    v.fill_dirichlet(level, 0.0)?;
    for _ in 0..POWER_ITERATIONS {
        op.apply_to(&v, &mut w, level)?;
        w.multiply(&inv, level)?;
        w.fill_dirichlet(level, 0.0)?;
        let n = w.norm(level)?;
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Divergence(format!("power iteration norm {n}")));
        }
        v.assign(1.0 / n, &w, 0.0, &w, level)?;
    }
    op.apply_to(&v, &mut w, level)?;
    let vav = v.dot(&w, level)?;
    let mut dv = v.clone();
    dv.multiply(diag, level)?;
    let vdv = v.dot(&dv, level)?;
    Ok(LAMBDA_SAFETY * vav / vdv)
}
