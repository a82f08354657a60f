//! Simultaneous implicit trapezoidal integration of semi-explicit DAEs
//! `ẋ = f(x, y)`, `0 = g(x, y)`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{norm_inf, Lu, Matrix};
use crate::{Error, Result};

pub trait Dae {
    fn n_states(&self) -> usize;
    fn n_algebraic(&self) -> usize;
    fn eval(&self, x: &[f64], y: &[f64], f: &mut [f64], g: &mut [f64]);
    /// Human-readable name of equation `k` (states first, then algebraic).
    fn equation_name(&self, k: usize) -> String {
        format!("equation {k}")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub steps: usize,
    pub iterations: usize,
    pub jacobians: usize,
}

/// Newton settings shared by the step and the algebraic re-solve.
#[derive(Debug, Clone, Copy)]
pub struct NewtonSettings {
    pub tol: f64,
    pub max_iters: usize,
}

/// Trapezoidal stepper. The Newton Jacobian is formed by finite differences
/// and reused across steps until convergence slows or the step changes.
#[derive(Debug, Default)]
pub struct Trapezoidal {
    lu: Option<(Lu<f64>, f64)>,
    pub stats: SolverStats,
}

fn fd_increment(z: f64) -> f64 {
    1e-7 * (1.0 + z.abs())
}

impl Trapezoidal {
    pub fn new() -> Self {
        Self::default()
    }

    /// Forces a fresh Jacobian on the next step.
    pub fn invalidate(&mut self) {
        self.lu = None;
    }

    fn residual<D: Dae>(dae: &D, h: f64, x0: &[f64], f0: &[f64], z: &[f64], f: &mut [f64], r: &mut [f64]) {
        let nx = dae.n_states();
        let (x, y) = z.split_at(nx);
        let (rx, ry) = r.split_at_mut(nx);
        dae.eval(x, y, f, ry);
        for i in 0..nx {
            rx[i] = x[i] - x0[i] - 0.5 * h * (f[i] + f0[i]);
        }
    }

    fn jacobian<D: Dae>(dae: &D, h: f64, x0: &[f64], f0: &[f64], z: &[f64], r: &[f64]) -> Result<Lu<f64>> {
        let n = z.len();
        let mut jac = Matrix::<f64>::zeros(n, n);
        let mut zp = z.to_vec();
        let mut fp = vec![0.0; dae.n_states()];
        let mut rp = vec![0.0; n];
        for j in 0..n {
            let dz = fd_increment(z[j]);
            zp[j] = z[j] + dz;
            Self::residual(dae, h, x0, f0, &zp, &mut fp, &mut rp);
            for i in 0..n {
                jac[(i, j)] = (rp[i] - r[i]) / dz;
            }
            zp[j] = z[j];
        }
        Lu::factor(&jac).map_err(|e| match e {
            Error::Singular { index, .. } => Error::Singular {
                index,
                context: Some(dae.equation_name(index)),
            },
            other => other,
        })
    }

    /// Advances `(x, y)` by `h`. On entry `f` holds `f(x, y)`; on success it
    /// holds the derivatives at the new point. `t_end` is only used for
    /// error reporting. Returns the number of Newton iterations.
    #[allow(clippy::too_many_arguments)]
    pub fn step<D: Dae>(
        &mut self,
        dae: &D,
        t_end: f64,
        h: f64,
        x: &mut [f64],
        y: &mut [f64],
        f: &mut [f64],
        newton: NewtonSettings,
    ) -> Result<usize> {
        let nx = dae.n_states();
        let x0 = x.to_vec();
        let f0 = f.to_vec();
        let mut z: Vec<f64> = x.iter().chain(y.iter()).copied().collect();
        let mut r = vec![0.0; z.len()];
        if matches!(self.lu, Some((_, hj)) if hj != h) {
            self.lu = None;
        }

        let mut fresh = false;
        let mut prev = f64::INFINITY;
        let mut iters = 0;
        loop {
            Self::residual(dae, h, &x0, &f0, &z, f, &mut r);
            let norm = norm_inf(&r);
            if norm <= newton.tol {
                break;
            }
            if !norm.is_finite() || iters == newton.max_iters {
                return Err(self.failure(dae, t_end, iters, &r));
            }
            if !fresh && (self.lu.is_none() || norm > 0.25 * prev || iters >= 4) {
                let lu = Self::jacobian(dae, h, &x0, &f0, &z, &r)?;
                self.lu = Some((lu, h));
                self.stats.jacobians += 1;
                fresh = true;
            }
            let (lu, _) = self.lu.as_ref().expect("jacobian present");
            let neg: Vec<f64> = r.iter().map(|v| -v).collect();
            let dz = lu.solve(&neg);
            z.iter_mut().zip(&dz).for_each(|(zi, d)| *zi += d);
            prev = norm;
            iters += 1;
        }
        x.copy_from_slice(&z[..nx]);
        y.copy_from_slice(&z[nx..]);
        self.stats.steps += 1;
        self.stats.iterations += iters;
        Ok(iters)
    }

    /// Solves `g(x, y) = 0` for `y` with `x` held fixed, e.g. after a
    /// network event.
    pub fn solve_algebraic<D: Dae>(&mut self, dae: &D, t: f64, x: &[f64], y: &mut [f64], newton: NewtonSettings) -> Result<()> {
        let (nx, ny) = (dae.n_states(), dae.n_algebraic());
        let mut f = vec![0.0; nx];
        let mut g = vec![0.0; ny];
        let mut gp = vec![0.0; ny];
        let mut lu: Option<Lu<f64>> = None;
        let mut prev = f64::INFINITY;
        for iters in 0..=newton.max_iters {
            dae.eval(x, y, &mut f, &mut g);
            let norm = norm_inf(&g);
            if norm <= newton.tol {
                return Ok(());
            }
            if !norm.is_finite() || iters == newton.max_iters {
                let mut r = vec![0.0; nx];
                r.extend_from_slice(&g);
                return Err(self.failure(dae, t, iters, &r));
            }
            if lu.is_none() || norm > 0.25 * prev {
                let mut jac = Matrix::<f64>::zeros(ny, ny);
                let mut yp = y.to_vec();
                for j in 0..ny {
                    let d = fd_increment(y[j]);
                    yp[j] = y[j] + d;
                    dae.eval(x, &yp, &mut f, &mut gp);
                    for i in 0..ny {
                        jac[(i, j)] = (gp[i] - g[i]) / d;
                    }
                    yp[j] = y[j];
                }
                lu = Some(Lu::factor(&jac)?);
                self.stats.jacobians += 1;
            }
            let neg: Vec<f64> = g.iter().map(|v| -v).collect();
            let dy = lu.as_ref().expect("jacobian present").solve(&neg);
            y.iter_mut().zip(&dy).for_each(|(yi, d)| *yi += d);
            prev = norm;
        }
        unreachable!()
    }

    fn failure<D: Dae>(&self, dae: &D, time: f64, iterations: usize, r: &[f64]) -> Error {
        let (k, residual) = r
            .iter()
            .enumerate()
            .map(|(k, v)| (k, if v.is_finite() { v.abs() } else { f64::INFINITY }))
            .fold((0, -1.0), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
        Error::Newton {
            time,
            iterations,
            residual,
            equation: dae.equation_name(k),
        }
    }
}

/// One trapezoidal step from a consistent point, with a fresh solver.
pub fn step_trapezoidal<D: Dae>(dae: &D, x: &mut [f64], y: &mut [f64], h: f64, newton: NewtonSettings) -> Result<()> {
    let mut f = vec![0.0; dae.n_states()];
    let mut g = vec![0.0; dae.n_algebraic()];
    dae.eval(x, y, &mut f, &mut g);
    Trapezoidal::new().step(dae, h, h, x, y, &mut f, newton).map(|_| ())
}
