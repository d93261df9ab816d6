use std::io::Write;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::function::FeFunction;
use crate::index::{index_set, intervals, micro_primitive_vertices, tet_offset, width, CellType, SubgroupId};
use crate::mesh::Point;
use crate::operator::{
    p1_gradients, quad4_points, ApplyMode, BoundaryMode, P1Operator, SweepDirection,
};

use super::{cg, estimate_lambda_max, prolongate_p1, reciprocal, restrict_p1, smooth, SmootherConfig, SmootherKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CycleType {
    V,
    Fmg,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultigridConfig {
    pub coarse_level: u32,
    pub cycle: CycleType,
    /// V-cycles per level in FMG.
    pub cycles_per_level: usize,
    pub coarse_tol: f64,
    pub coarse_max_iterations: usize,
    pub smoother: SmootherConfig,
    /// Seed of the power iteration behind the Chebyshev interval.
    pub seed: u64,
}

impl Default for MultigridConfig {
    fn default() -> Self {
        Self {
            coarse_level: 2,
            cycle: CycleType::Fmg,
            cycles_per_level: 5,
            coarse_tol: 1e-12,
            coarse_max_iterations: 10_000,
            smoother: SmootherConfig::default(),
            seed: 0,
        }
    }
}

/// One line of a solver report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelReport {
    pub level: u32,
    /// Cycle number on this level; 0 is the state before any V-cycle.
    pub cycle: usize,
    /// `‖b - A x‖ / ‖b‖`
    pub residual: f64,
    pub error: Option<f64>,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FmgReport {
    pub rows: Vec<LevelReport>,
    pub v_cycles: usize,
}

impl FmgReport {
    /// Last row of every level.
    pub fn final_rows(&self) -> Vec<LevelReport> {
        let mut out: Vec<LevelReport> = Vec::new();
        for row in &self.rows {
            match out.last_mut() {
                Some(last) if last.level == row.level => *last = *row,
                _ => out.push(*row),
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "level,cycle,residual,error,seconds")?;
        for r in &self.rows {
            let error = r.error.map(|e| format!("{e:e}")).unwrap_or_default();
            writeln!(out, "{},{},{:e},{},{:.6}", r.level, r.cycle, r.residual, error, r.seconds)?;
        }
        Ok(())
    }
}

/// Operators, smoother data and scratch functions on a range of levels.
pub struct GridHierarchy {
    op: P1Operator,
    config: MultigridConfig,
    inv_diag: FeFunction,
    lambda: Vec<Option<f64>>,
    rhs: FeFunction,
    sol: FeFunction,
    res: FeFunction,
    tmp: FeFunction,
    v_cycles: usize,
}

impl GridHierarchy {
    /// Coarse problems use the same form rediscretized on each level.
    pub fn new(op: P1Operator, config: MultigridConfig) -> Result<Self> {
        config.smoother.validate()?;
        let space = op.space().clone();
        if config.coarse_level < space.min_level().max(2) || config.coarse_level > space.max_level() {
            return Err(Error::LevelRange {
                level: config.coarse_level,
                min: space.min_level().max(2),
                max: space.max_level(),
            });
        }
        if config.cycles_per_level == 0 {
            return Err(Error::Unsupported("cycles per level must be at least 1".into()));
        }
        let mut inv_diag = op.diagonal().clone();
        let mut lambda = Vec::new();
        for level in space.min_level()..=space.max_level() {
            let inv = reciprocal(op.diagonal(), level)?;
            inv_diag.copy_from(&inv, level)?;
            lambda.push(match config.smoother.kind {
                SmootherKind::Chebyshev { .. } if level > config.coarse_level => {
                    Some(estimate_lambda_max(&op, op.diagonal(), level, config.seed)?)
                }
                _ => None,
            });
        }
        let rhs = FeFunction::new(&space, "mg_rhs");
        Ok(Self {
            sol: rhs.zeros_like("mg_sol"),
            res: rhs.zeros_like("mg_res"),
            tmp: rhs.zeros_like("mg_tmp"),
            rhs,
            op,
            config,
            inv_diag,
            lambda,
            v_cycles: 0,
        })
    }

    pub fn operator(&self) -> &P1Operator {
        &self.op
    }

    pub fn config(&self) -> &MultigridConfig {
        &self.config
    }

    /// Spectral estimate used by the Chebyshev smoother on `level`.
    pub fn lambda(&self, level: u32) -> Option<f64> {
        self.lambda[(level - self.op.space().min_level()) as usize]
    }

    /// V-cycles run so far.
    pub fn v_cycle_count(&self) -> usize {
        self.v_cycles
    }

    /// Relative residual `‖b - A x‖ / ‖b‖`.
    pub fn relative_residual(&self, b: &FeFunction, x: &FeFunction, level: u32) -> Result<f64> {
        let mut r = b.zeros_like("residual");
        self.op.residual(b, x, &mut r, level)?;
        let bn = b.norm(level)?;
        let rn = r.norm(level)?;
        Ok(if bn == 0.0 { rn } else { rn / bn })
    }

    /// One V-cycle for `A x = b` on `level`; boundary values of `x` are
    /// taken from `b`.
    pub fn v_cycle(&mut self, b: &FeFunction, x: &mut FeFunction, level: u32) -> Result<()> {
        if level <= self.config.coarse_level {
            return Err(Error::LevelRange {
                level,
                min: self.config.coarse_level + 1,
                max: self.op.space().max_level(),
            });
        }
        self.rhs.copy_from(b, level)?;
        self.sol.copy_from(x, level)?;
        self.sol.copy_dirichlet_from(b, level)?;
        self.cycle(level)?;
        x.copy_from(&self.sol, level)?;
        self.v_cycles += 1;
        Ok(())
    }

    fn coarse_solve(&mut self) -> Result<()> {
        let level = self.config.coarse_level;
        let report = cg(
            &self.op,
            &self.rhs,
            &mut self.sol,
            level,
            self.config.coarse_tol,
            self.config.coarse_max_iterations,
        )?;
        if !report.converged {
            log::warn!(
                "coarse CG stopped at residual {:e} after {} iterations",
                report.residual,
                report.iterations
            );
        }
        Ok(())
    }

    fn smooth(&mut self, level: u32, sweeps: usize, direction: SweepDirection) -> Result<()> {
        smooth(
            self.config.smoother.kind,
            sweeps,
            &self.op,
            &self.inv_diag,
            self.lambda(level),
            &self.rhs,
            &mut self.sol,
            level,
            direction,
        )
    }

    fn cycle(&mut self, level: u32) -> Result<()> {
        if level == self.config.coarse_level {
            return self.coarse_solve();
        }
        let SmootherConfig { pre, post, .. } = self.config.smoother;
        self.smooth(level, pre, SweepDirection::Forward)?;
        self.op.residual(&self.rhs, &self.sol, &mut self.res, level)?;
        self.res.fill_dirichlet(level, 0.0)?;
        restrict_p1(&self.res, &mut self.rhs, level)?;
        self.rhs.fill_dirichlet(level - 1, 0.0)?;
        self.sol.fill(level - 1, 0.0)?;
        self.cycle(level - 1)?;
        prolongate_p1(&self.sol, &mut self.tmp, level)?;
        self.sol.axpy(1.0, &self.tmp, level)?;
        self.smooth(level, post, SweepDirection::Backward)
    }

    /// Runs V-cycles until the relative residual drops below `tol` or
    /// `max_cycles` is reached.
    pub fn solve(
        &mut self,
        b: &FeFunction,
        x: &mut FeFunction,
        level: u32,
        tol: f64,
        max_cycles: usize,
        exact: Option<&(dyn Fn(Point) -> f64 + Sync)>,
    ) -> Result<FmgReport> {
        let start = Instant::now();
        let mut report = FmgReport::default();
        x.copy_dirichlet_from(b, level)?;
        let row = |x: &FeFunction, cycle: usize, me: &Self| -> Result<LevelReport> {
            Ok(LevelReport {
                level,
                cycle,
                residual: me.relative_residual(b, x, level)?,
                error: exact.map(|u| l2_error(x, level, u)).transpose()?,
                seconds: start.elapsed().as_secs_f64(),
            })
        };
        report.rows.push(row(x, 0, self)?);
        let first = report.rows[0].residual;
        for cycle in 1..=max_cycles {
            if report.rows.last().expect("row").residual <= tol {
                break;
            }
            self.v_cycle(b, x, level)?;
            report.v_cycles += 1;
            let r = row(x, cycle, self)?;
            if !r.residual.is_finite() || r.residual > 1e6 * first.max(1.0) {
                return Err(Error::Divergence(format!("V-cycle residual {:e}", r.residual)));
            }
            report.rows.push(r);
        }
        Ok(report)
    }

    /// Full multigrid: exact solve on the coarse level, then on each finer
    /// level prolongate and run the configured number of V-cycles. `b` must
    /// hold the right-hand side on every level up to `finest`.
    pub fn fmg(
        &mut self,
        b: &FeFunction,
        x: &mut FeFunction,
        finest: u32,
        exact: Option<&(dyn Fn(Point) -> f64 + Sync)>,
    ) -> Result<FmgReport> {
        let coarse = self.config.coarse_level;
        let space = self.op.space().clone();
        if finest < coarse || finest > space.max_level() {
            return Err(Error::LevelRange {
                level: finest,
                min: coarse,
                max: space.max_level(),
            });
        }
        let start = Instant::now();
        let mut report = FmgReport::default();
        let row = |me: &Self, x: &FeFunction, level: u32, cycle: usize| -> Result<LevelReport> {
            Ok(LevelReport {
                level,
                cycle,
                residual: me.relative_residual(b, x, level)?,
                error: exact.map(|u| l2_error(x, level, u)).transpose()?,
                seconds: start.elapsed().as_secs_f64(),
            })
        };
        self.rhs.copy_from(b, coarse)?;
        self.sol.fill(coarse, 0.0)?;
        self.coarse_solve()?;
        x.copy_from(&self.sol, coarse)?;
        report.rows.push(row(self, x, coarse, 0)?);
        for level in coarse + 1..=finest {
            prolongate_p1(x, &mut self.tmp, level)?;
            x.copy_from(&self.tmp, level)?;
            x.copy_dirichlet_from(b, level)?;
            report.rows.push(row(self, x, level, 0)?);
            for cycle in 1..=self.config.cycles_per_level {
                self.v_cycle(b, x, level)?;
                report.v_cycles += 1;
                let r = row(self, x, level, cycle)?;
                if !r.residual.is_finite() {
                    return Err(Error::Divergence(format!("FMG residual {:e} on level {level}", r.residual)));
                }
                report.rows.push(r);
            }
        }
        Ok(report)
    }
}

/// Right-hand side `M I(f)` with Dirichlet rows set to `g`.
pub fn interpolate_rhs(
    mass: &P1Operator,
    f: impl Fn(Point) -> f64 + Sync,
    g: impl Fn(Point) -> f64 + Sync,
    b: &mut FeFunction,
    level: u32,
) -> Result<()> {
    let mut tmp = b.zeros_like("rhs_tmp");
    tmp.interpolate(level, f)?;
    mass.apply(&tmp, b, level, ApplyMode::Replace, BoundaryMode::None)?;
    tmp.interpolate(level, g)?;
    b.copy_dirichlet_from(&tmp, level)
}

/// `‖u_h - u‖` in L2, integrated micro-cell by micro-cell with the
/// symmetric 4-point rule.
pub fn l2_error(uh: &FeFunction, level: u32, exact: &(dyn Fn(Point) -> f64 + Sync)) -> Result<f64> {
    if !uh.space().descriptor().is_p1() {
        return Err(Error::Unsupported("L2 error needs a P1 function".into()));
    }
    let mesh = uh.mesh();
    let n1 = intervals(level) + 1;
    let h = 1.0 / intervals(level) as f64;
    let data = uh.cells(level)?;
    let bary = quad4_points();
    let mut total = 0.0;
    for (c, values) in data.iter().enumerate() {
        let map = mesh.macro_cell_map(c)?;
        let mut cell_sum = 0.0;
        for cell_type in CellType::ALL {
            let subgroup = SubgroupId::Cell(cell_type);
            for q in index_set(width(subgroup, level)?) {
                let verts = micro_primitive_vertices(subgroup, q, level)?;
                let pts: [Point; 4] = std::array::from_fn(|v| {
                    map.apply([verts[v].i as f64 * h, verts[v].j as f64 * h, verts[v].k as f64 * h])
                });
                let u: [f64; 4] = std::array::from_fn(|v| values[tet_offset(n1, verts[v].i, verts[v].j, verts[v].k)]);
                let (_, vol) = p1_gradients(&pts)?;
                let mut s = 0.0;
                for l in &bary {
                    let mut x = [0.0; 3];
                    let mut uq = 0.0;
                    for v in 0..4 {
                        uq += l[v] * u[v];
                        for d in 0..3 {
                            x[d] += l[v] * pts[v][d];
                        }
                    }
                    let e = uq - exact(x);
                    s += 0.25 * e * e;
                }
                cell_sum += vol * s;
            }
        }
        total += cell_sum;
    }
    Ok(total.sqrt())
}
