//! Levenberg–Marquardt on the C^ℓ2 residuals.

use nalgebra::{DMatrix, DVector};

use crate::ansatz::Ansatz;
use crate::cost::{code_basis, cost_l1, residuals_and_jacobian};
use crate::error::Result;
use crate::error_model::ErrorSet;
use crate::state::StateVector;

#[derive(Clone, Debug)]
pub struct LmOutcome {
    pub theta: Vec<f64>,
    /// C^ℓ1 at `theta`.
    pub l1: f64,
    /// (C^ℓ2, C^ℓ1) after each accepted step.
    pub history: Vec<(f64, f64)>,
}

fn residuals(a: &Ansatz, theta: &[f64], errors: &ErrorSet, k: usize, with_jac: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    let basis = code_basis(a, theta, k)?;
    if !with_jac {
        return residuals_and_jacobian(&basis, None, errors);
    }
    let tangents: Vec<Vec<StateVector>> = (0..k).map(|j| a.tangents(theta, j)).collect::<Result<_>>()?;
    residuals_and_jacobian(&basis, Some(&tangents), errors)
}

/// Accepts only steps that lower C^ℓ2 and keeps the point with the lowest
/// C^ℓ1 seen. Stops at C^ℓ1 ≤ `c_tol`, after `max_iters` Jacobians, or when
/// the damping blows up.
pub fn polish(a: &Ansatz, theta0: &[f64], errors: &ErrorSet, k: usize, c_tol: f64, max_iters: usize) -> Result<LmOutcome> {
    let np = theta0.len();
    let mut theta = theta0.to_vec();
    let mut best_l1 = cost_l1(a, &theta, errors, k)?.total;
    let mut best = theta.clone();
    let mut history = Vec::new();
    if best_l1 <= c_tol || np == 0 {
        return Ok(LmOutcome { theta: best, l1: best_l1, history });
    }
    let mut mu: Option<f64> = None;
    'outer: for _ in 0..max_iters {
        let (r, jac) = residuals(a, &theta, errors, k, true)?;
        let cost: f64 = r.iter().map(|x| x * x).sum();
        let j = DMatrix::from_row_slice(r.len(), np, &jac);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * DVector::from_vec(r);
        let diag: Vec<f64> = (0..np).map(|i| jtj[(i, i)].max(1e-12)).collect();
        let m = mu.get_or_insert_with(|| 1e-3 * diag.iter().cloned().fold(0.0, f64::max));
        loop {
            if *m > 1e12 {
                break 'outer;
            }
            let mut lhs = jtj.clone();
            for i in 0..np {
                lhs[(i, i)] += *m * diag[i];
            }
            let Some(ch) = lhs.cholesky() else {
                *m *= 4.0;
                continue;
            };
            let delta = ch.solve(&(-&g));
            let trial: Vec<f64> = theta.iter().zip(delta.iter()).map(|(t, d)| t + d).collect();
            let (rt, _) = residuals(a, &trial, errors, k, false)?;
            let ct: f64 = rt.iter().map(|x| x * x).sum();
            if ct < cost {
                theta = trial;
                *m /= 3.0;
                let l1 = cost_l1(a, &theta, errors, k)?.total;
                history.push((ct, l1));
                if l1 < best_l1 {
                    best_l1 = l1;
                    best = theta.clone();
                }
                if best_l1 <= c_tol || cost - ct <= 1e-16 * cost {
                    break 'outer;
                }
                break;
            }
            *m *= 4.0;
        }
    }
    Ok(LmOutcome { theta: best, l1: best_l1, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::cost_l2;
    use crate::error_model::pauli_below_weight;
    use crate::graph::ConnectivityGraph;

    #[test]
    fn polish_never_gets_worse() {
        let g = ConnectivityGraph::star(4).unwrap();
        let a = Ansatz::layered(&g, &[0], 2).unwrap();
        let e = pauli_below_weight(4, 2).unwrap();
        let th: Vec<f64> = (0..a.n_params()).map(|i| (i as f64 * 1.3).sin()).collect();
        let c0 = cost_l1(&a, &th, &e, 2).unwrap().total;
        let out = polish(&a, &th, &e, 2, 1e-9, 30).unwrap();
        assert!(out.l1 <= c0);
        assert!(out.history.windows(2).all(|w| w[1].0 < w[0].0));
        let l2_end = cost_l2(&a, &out.theta, &e, 2).unwrap().total;
        assert!(l2_end.is_finite());
    }
}
