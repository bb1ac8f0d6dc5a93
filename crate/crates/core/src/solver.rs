//! Damped Newton solver for the scalar Tzitzéica equation in conformal
//! coordinates, `laplacian(u) - 4 e^u + 4 |q|^2 e^{-2u} = f`, whose solution supplies the Hermitian coefficient h = e^u of the unique
//! harmonic metric. The linearization has a strictly negative zeroth-order
//! coefficient, so the inner solve runs conjugate gradient on -J.

use thiserror::Error;

use crate::grid::{ComplexField, ScalarField};

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Sup-norm residual target.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial line-search step in (0, 1]; backtracking halves down to 1/64.
    pub damping: f64,
    /// Relative tolerance of the inner conjugate-gradient solve.
    pub linear_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-10,
            max_iter: 50,
            damping: 1.0,
            linear_tol: 1e-12,
        }
    }
}

const MIN_STEP: f64 = 1.0 / 64.0;
const MAX_LINESEARCH_FAILURES: usize = 10;
/// Mean-of-u drop (relative to the initial iterate) treated as iterate
/// divergence; on the torus this signals the q = 0 obstruction where the
/// conformal factor degenerates instead of converging.
const DIVERGENCE_DRIFT: f64 = 12.0;
/// Regularizer inside the default initial guess (1/3) log(mean|q|^2 + EPS0).
pub const EPS0: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("Dirichlet boundary data required on a disk chart")]
    MissingBoundaryData,
    #[error("boundary data not accepted on a torus chart")]
    UnexpectedBoundaryData,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub obstruction_detected: bool,
    pub final_u: ScalarField,
}

/// PDE residual R(u) = laplacian(u) - 4 e^u + 4 |q|^2 e^{-2u} - f, evaluated
/// at interior nodes (zero on the ring). The constants are pinned by the
/// identity 4 S_g + 16 - |C0|^2 = -4 e^{-u} R(u).
pub fn pde_residual(u: &ScalarField, q: &ComplexField, f: Option<&ScalarField>) -> ScalarField {
    let chart = u.chart().clone();
    let lap = u.laplacian();
    let q2 = q.norm_sqr_field();
    let mut out = ScalarField::zeros(&chart);
    for k in 0..chart.len() {
        if !chart.is_interior(k) {
            continue;
        }
        let uv = u.at(k);
        let mut r = lap.at(k) - 4.0 * uv.exp() + 4.0 * q2.at(k) * (-2.0 * uv).exp();
        if let Some(f) = f {
            r -= f.at(k);
        }
        out.values_mut()[k] = r;
    }
    out
}

/// Directional derivative J(u)[delta] = laplacian(delta)
/// - (4 e^u + 8 |q|^2 e^{-2u}) delta, interior nodes only.
pub fn jacobian_apply(u: &ScalarField, q: &ComplexField, delta: &ScalarField) -> ScalarField {
    let chart = u.chart().clone();
    let lap = delta.laplacian();
    let q2 = q.norm_sqr_field();
    let mut out = ScalarField::zeros(&chart);
    for k in 0..chart.len() {
        if !chart.is_interior(k) {
            continue;
        }
        let uv = u.at(k);
        let c = 4.0 * uv.exp() + 8.0 * q2.at(k) * (-2.0 * uv).exp();
        out.values_mut()[k] = lap.at(k) - c * delta.at(k);
    }
    out
}

/// Conjugate gradient for a matrix-free SPD operator over interior nodes.
/// Returns the solution and the iteration count.
pub fn cg_solve(
    apply: impl Fn(&ScalarField) -> ScalarField,
    rhs: &ScalarField,
    rel_tol: f64,
    max_iter: usize,
) -> (ScalarField, usize) {
    let chart = rhs.chart().clone();
    let mut x = ScalarField::zeros(&chart);
    let mut r = rhs.clone();
    let mut p = r.clone();
    let rhs_norm = rhs.dot_interior(rhs).sqrt();
    if rhs_norm == 0.0 {
        return (x, 0);
    }
    let target = rel_tol * rhs_norm;
    let mut rr = r.dot_interior(&r);
    for it in 0..max_iter {
        if rr.sqrt() <= target {
            return (x, it);
        }
        let ap = apply(&p);
        let alpha = rr / p.dot_interior(&ap);
        for k in 0..chart.len() {
            if chart.is_interior(k) {
                x.values_mut()[k] += alpha * p.at(k);
                r.values_mut()[k] -= alpha * ap.at(k);
            }
        }
        let rr_new = r.dot_interior(&r);
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..chart.len() {
            if chart.is_interior(k) {
                let v = r.at(k) + beta * p.at(k);
                p.values_mut()[k] = v;
            }
        }
    }
    (x, max_iter)
}

fn default_initial_guess(q: &ComplexField) -> f64 {
    (q.norm_sqr_field().mean() + EPS0).ln() / 3.0
}

/// Damped Newton iteration for the Tzitzéica equation. On disk charts `bc`
/// supplies the Dirichlet values read on the boundary ring; on the torus no
/// boundary data is accepted. `forcing`, when present, is subtracted from
/// the residual (manufactured-solution harness).
pub fn newton_solve(
    q: &ComplexField,
    cfg: &SolverConfig,
    u0: Option<&ScalarField>,
    forcing: Option<&ScalarField>,
    bc: Option<&ScalarField>,
) -> Result<SolveReport, SolverError> {
    let chart = q.chart().clone();
    if chart.is_torus() {
        if bc.is_some() {
            return Err(SolverError::UnexpectedBoundaryData);
        }
    } else if bc.is_none() {
        return Err(SolverError::MissingBoundaryData);
    }

    let mut u = match u0 {
        Some(u0) => u0.clone(),
        None => ScalarField::constant(&chart, default_initial_guess(q)),
    };
    if let Some(bc) = bc {
        for k in 0..chart.len() {
            if chart.is_domain(k) && !chart.is_interior(k) {
                u.values_mut()[k] = bc.at(k);
            }
        }
    }
    let mean0 = u.mean();

    let mut residual = pde_residual(&u, q, forcing);
    let mut res_sup = residual.sup_norm_interior();
    let mut history = vec![res_sup];
    let mut linesearch_failures = 0usize;
    let mut obstruction = false;
    let mut converged = res_sup <= cfg.tol;
    let mut iterations = 0usize;

    let n_interior = (0..chart.len()).filter(|&k| chart.is_interior(k)).count();
    let cg_cap = 10 * n_interior;

    while !converged && iterations < cfg.max_iter {
        iterations += 1;
        // Solve (-J) z = R; the Newton step is u <- u - s J^{-1} R = u + s z.
        let apply = |d: &ScalarField| jacobian_apply(&u, q, d).scale(-1.0);
        let (z, _) = cg_solve(apply, &residual, cfg.linear_tol, cg_cap);

        let mut step = cfg.damping;
        let mut accepted = false;
        while step >= MIN_STEP {
            let trial = u.add(&z.scale(step));
            let trial_res = pde_residual(&trial, q, forcing);
            let trial_sup = trial_res.sup_norm_interior();
            if trial_sup < res_sup {
                u = trial;
                residual = trial_res;
                res_sup = trial_sup;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        history.push(res_sup);

        if !accepted {
            linesearch_failures += 1;
            if linesearch_failures > MAX_LINESEARCH_FAILURES {
                obstruction = chart.is_torus();
                break;
            }
            continue;
        }

        if chart.is_torus() && u.mean() - mean0 < -DIVERGENCE_DRIFT {
            // conformal factor collapsing toward zero: no periodic solution
            obstruction = true;
            break;
        }
        converged = res_sup <= cfg.tol;
    }

    Ok(SolveReport {
        converged,
        iterations,
        residual_history: history,
        obstruction_detected: obstruction,
        final_u: u,
    })
}

/// Manufactured-solution harness: forces the discrete problem so that
/// `u_star` is its exact solution, solves, and reports alongside the
/// recovery error.
pub fn manufactured_solve(
    u_star: &ScalarField,
    q: &ComplexField,
    cfg: &SolverConfig,
) -> Result<(SolveReport, f64), SolverError> {
    let f = pde_residual(u_star, q, None);
    let bc = if u_star.chart().is_torus() {
        None
    } else {
        Some(u_star)
    };
    let report = newton_solve(q, cfg, None, Some(&f), bc)?;
    let mut err = 0.0f64;
    let chart = u_star.chart();
    for k in 0..chart.len() {
        if chart.is_interior(k) {
            err = err.max((report.final_u.at(k) - u_star.at(k)).abs());
        }
    }
    Ok((report, err))
}
