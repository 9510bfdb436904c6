//! Knill–Laflamme detection costs evaluated from exact amplitudes.

use serde::{Deserialize, Serialize};

use crate::ansatz::Ansatz;
use crate::error::{Error, Result};
use crate::error_model::ErrorSet;
use crate::state::{inner, Operator, StateVector, C64, ZERO};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub total: f64,
    pub offdiag_sum: f64,
    pub diag_sum: f64,
    pub per_error: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Norm {
    L1,
    L2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum GradientMethod {
    CentralDiff { h: f64 },
    ParameterShift,
    /// Reverse-mode sweep through the gate program.
    Adjoint,
}

/// Which part of the cost to differentiate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostPart {
    All,
    OffDiagonal,
    Diagonal,
}

/// Images `E ψ_j` and, for non-Hermitian E, `E† ψ_j`.
pub(crate) struct Images {
    pub fwd: Vec<Vec<C64>>,
    pub adj: Option<Vec<Vec<C64>>>,
}

impl Images {
    pub fn compute(basis: &[StateVector], op: &Operator) -> Images {
        let n = basis[0].n();
        let dim = basis[0].dim();
        let apply = |o: &Operator| -> Vec<Vec<C64>> {
            basis
                .iter()
                .map(|s| {
                    let mut out = vec![ZERO; dim];
                    o.apply_into(n, s.amplitudes(), &mut out);
                    out
                })
                .collect()
        };
        let fwd = apply(op);
        let adj = if op.is_hermitian() { None } else { Some(apply(&op.adjoint())) };
        Images { fwd, adj }
    }

    pub fn adj(&self) -> &[Vec<C64>] {
        self.adj.as_deref().unwrap_or(&self.fwd)
    }
}

/// K x K matrix ⟨ψ_i|E|ψ_j⟩, row-major.
pub fn matrix_elements(basis: &[StateVector], op: &Operator) -> Vec<C64> {
    let k = basis.len();
    let im = Images::compute(basis, op);
    let mut m = vec![ZERO; k * k];
    for i in 0..k {
        for j in 0..k {
            m[i * k + j] = inner(basis[i].amplitudes(), &im.fwd[j]);
        }
    }
    m
}

/// (off-diagonal part, diagonal part) of one error's contribution.
pub fn error_contribution(m: &[C64], k: usize, norm: Norm) -> (f64, f64) {
    let mean = (0..k).map(|j| m[j * k + j]).sum::<C64>() / k as f64;
    let mut off = 0.0;
    let mut diag = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            off += match norm {
                Norm::L1 => m[i * k + j].norm(),
                Norm::L2 => m[i * k + j].norm_sqr(),
            };
        }
        let dev = m[i * k + i] - mean;
        diag += match norm {
            Norm::L1 => dev.norm() / 2.0,
            Norm::L2 => dev.norm_sqr() / 4.0,
        };
    }
    (off, diag)
}

pub fn cost_from_basis(basis: &[StateVector], errors: &ErrorSet, norm: Norm) -> Result<CostBreakdown> {
    check_inputs(basis, errors)?;
    let k = basis.len();
    let mut per_error = Vec::with_capacity(errors.len());
    let (mut off, mut diag) = (0.0, 0.0);
    for t in &errors.terms {
        let m = upper_elements(basis, &t.op);
        let (o, d) = error_contribution(&m, k, norm);
        off += o;
        diag += d;
        per_error.push(o + d);
    }
    Ok(CostBreakdown { total: off + diag, offdiag_sum: off, diag_sum: diag, per_error })
}

/// Only the upper triangle (with diagonal) is filled; the rest is zero.
fn upper_elements(basis: &[StateVector], op: &Operator) -> Vec<C64> {
    let k = basis.len();
    let n = basis[0].n();
    let mut m = vec![ZERO; k * k];
    if let Operator::Pauli(p) = op {
        for j in 0..k {
            for i in 0..=j {
                m[i * k + j] = p.sandwich(basis[i].amplitudes(), basis[j].amplitudes());
            }
        }
        return m;
    }
    let mut buf = vec![ZERO; basis[0].dim()];
    for j in 0..k {
        op.apply_into(n, basis[j].amplitudes(), &mut buf);
        for i in 0..=j {
            m[i * k + j] = inner(basis[i].amplitudes(), &buf);
        }
    }
    m
}

fn check_inputs(basis: &[StateVector], errors: &ErrorSet) -> Result<()> {
    if errors.is_empty() {
        return Err(Error::Invalid("empty error set".into()));
    }
    if basis.is_empty() {
        return Err(Error::Invalid("empty code basis".into()));
    }
    if basis.iter().any(|s| s.n() != errors.n) {
        return Err(Error::DimensionMismatch(format!(
            "{}-qubit code against a {}-qubit error set",
            basis[0].n(),
            errors.n
        )));
    }
    Ok(())
}

fn check_k(a: &Ansatz, k: usize) -> Result<()> {
    if k == 0 || (a.k() < usize::BITS as usize && k > 1usize << a.k()) {
        return Err(Error::Invalid(format!("K = {k} with {} logical qubits", a.k())));
    }
    Ok(())
}

pub fn code_basis(a: &Ansatz, theta: &[f64], k: usize) -> Result<Vec<StateVector>> {
    check_k(a, k)?;
    a.evaluate_basis(theta, k)
}

pub fn matrix_element(a: &Ansatz, theta: &[f64], op: &Operator, i: usize, j: usize) -> Result<C64> {
    let bra = a.evaluate(theta, i)?;
    let ket = op.apply(&a.evaluate(theta, j)?)?;
    bra.overlap(&ket)
}

pub fn cost_l1(a: &Ansatz, theta: &[f64], errors: &ErrorSet, k: usize) -> Result<CostBreakdown> {
    cost_from_basis(&code_basis(a, theta, k)?, errors, Norm::L1)
}

pub fn cost_l2(a: &Ansatz, theta: &[f64], errors: &ErrorSet, k: usize) -> Result<CostBreakdown> {
    cost_from_basis(&code_basis(a, theta, k)?, errors, Norm::L2)
}

pub fn cost_l2_batch(a: &Ansatz, theta: &[f64], errors: &ErrorSet, batch: &[usize], k: usize) -> Result<CostBreakdown> {
    if batch.is_empty() {
        return Err(Error::Invalid("empty batch".into()));
    }
    if let Some(&b) = batch.iter().find(|&&b| b >= errors.len()) {
        return Err(Error::OutOfRange(format!("batch index {b} of {}", errors.len())));
    }
    cost_l2(a, theta, &errors.subset(batch), k)
}

/// C^ℓ2 and its cotangents ∂C/∂conj(ψ_a) for the chosen part.
pub fn l2_cotangents(basis: &[StateVector], errors: &ErrorSet, part: CostPart) -> Result<(f64, Vec<Vec<C64>>)> {
    check_inputs(basis, errors)?;
    let k = basis.len();
    let dim = basis[0].dim();
    let mut g = vec![vec![ZERO; dim]; k];
    let mut total = 0.0;
    let want_off = part != CostPart::Diagonal;
    let want_diag = part != CostPart::OffDiagonal;
    for t in &errors.terms {
        let im = Images::compute(basis, &t.op);
        let adj = im.adj();
        let mut m = vec![ZERO; k * k];
        for i in 0..k {
            for j in i..k {
                m[i * k + j] = inner(basis[i].amplitudes(), &im.fwd[j]);
            }
        }
        let mean = (0..k).map(|j| m[j * k + j]).sum::<C64>() / k as f64;
        for a in 0..k {
            let ga = &mut g[a];
            if want_off {
                for j in a + 1..k {
                    let c = m[a * k + j].conj();
                    total += m[a * k + j].norm_sqr();
                    axpy(ga, c, &im.fwd[j]);
                }
                for i in 0..a {
                    axpy(ga, m[i * k + a], &adj[i]);
                }
            }
            if want_diag {
                let d = m[a * k + a] - mean;
                total += d.norm_sqr() / 4.0;
                axpy(ga, d.conj() / 4.0, &im.fwd[a]);
                axpy(ga, d / 4.0, &adj[a]);
            }
        }
    }
    Ok((total, g))
}

#[inline]
fn axpy(y: &mut [C64], c: C64, x: &[C64]) {
    if c == ZERO {
        return;
    }
    for (a, b) in y.iter_mut().zip(x) {
        *a += c * b;
    }
}

/// (C^ℓ2, ∇C^ℓ2) by the reverse-mode sweep.
pub fn value_and_gradient(a: &Ansatz, theta: &[f64], errors: &ErrorSet, k: usize, part: CostPart) -> Result<(f64, Vec<f64>)> {
    let basis = code_basis(a, theta, k)?;
    let (c, g) = l2_cotangents(&basis, errors, part)?;
    Ok((c, a.backprop(theta, &basis, &g)?))
}

pub fn gradient(a: &Ansatz, theta: &[f64], errors: &ErrorSet, k: usize, method: GradientMethod) -> Result<Vec<f64>> {
    match method {
        GradientMethod::Adjoint => Ok(value_and_gradient(a, theta, errors, k, CostPart::All)?.1),
        GradientMethod::CentralDiff { h } => {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::Invalid(format!("finite-difference step {h}")));
            }
            let mut th = theta.to_vec();
            let mut g = vec![0.0; theta.len()];
            for p in 0..theta.len() {
                th[p] = theta[p] + h;
                let up = cost_l2(a, &th, errors, k)?.total;
                th[p] = theta[p] - h;
                let dn = cost_l2(a, &th, errors, k)?.total;
                th[p] = theta[p];
                g[p] = (up - dn) / (2.0 * h);
            }
            Ok(g)
        }
        GradientMethod::ParameterShift => parameter_shift(a, theta, errors, k),
    }
}

/// Two-point shift rule on every matrix element, then the chain rule for
/// |M_ij|² and |D_j|²/4.
fn parameter_shift(a: &Ansatz, theta: &[f64], errors: &ErrorSet, k: usize) -> Result<Vec<f64>> {
    let basis = code_basis(a, theta, k)?;
    check_inputs(&basis, errors)?;
    let half = std::f64::consts::FRAC_PI_2;
    let plus: Vec<Vec<StateVector>> = (0..k).map(|j| a.shifted_states(theta, j, half)).collect::<Result<_>>()?;
    let minus: Vec<Vec<StateVector>> = (0..k).map(|j| a.shifted_states(theta, j, -half)).collect::<Result<_>>()?;
    let mut grad = vec![0.0; a.n_params()];
    for t in &errors.terms {
        let m = upper_elements(&basis, &t.op);
        let mean = (0..k).map(|j| m[j * k + j]).sum::<C64>() / k as f64;
        for (p, gp) in grad.iter_mut().enumerate() {
            let bp: Vec<StateVector> = (0..k).map(|j| plus[j][p].clone()).collect();
            let bm: Vec<StateVector> = (0..k).map(|j| minus[j][p].clone()).collect();
            let mp = upper_elements(&bp, &t.op);
            let mm = upper_elements(&bm, &t.op);
            let dm: Vec<C64> = mp.iter().zip(&mm).map(|(x, y)| (x - y) / 2.0).collect();
            let dmean = (0..k).map(|j| dm[j * k + j]).sum::<C64>() / k as f64;
            let mut acc = 0.0;
            for i in 0..k {
                for j in i + 1..k {
                    acc += 2.0 * (m[i * k + j].conj() * dm[i * k + j]).re;
                }
                let d = m[i * k + i] - mean;
                let dd = dm[i * k + i] - dmean;
                acc += 2.0 * (d.conj() * dd).re / 4.0;
            }
            *gp += acc;
        }
    }
    Ok(grad)
}

/// Real residual vector r with ‖r‖² = C^ℓ2.
pub fn l2_residuals(basis: &[StateVector], errors: &ErrorSet) -> Result<Vec<f64>> {
    Ok(residuals_and_jacobian(basis, None, errors)?.0)
}

/// Residuals and, given tangents[j][p] = ∂ψ_j/∂θ_p, the Jacobian (row-major,
/// rows = residuals, columns = parameters).
pub fn residuals_and_jacobian(
    basis: &[StateVector],
    tangents: Option<&[Vec<StateVector>]>,
    errors: &ErrorSet,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_inputs(basis, errors)?;
    let k = basis.len();
    let np = tangents.map_or(0, |t| t[0].len());
    let per = k * (k - 1) + 2 * k;
    let mut r = Vec::with_capacity(errors.len() * per);
    let mut jac = Vec::with_capacity(errors.len() * per * np);
    let mut dm = vec![ZERO; k * k * np];
    for t in &errors.terms {
        let im = Images::compute(basis, &t.op);
        let adj = im.adj();
        let mut m = vec![ZERO; k * k];
        for i in 0..k {
            for j in i..k {
                m[i * k + j] = inner(basis[i].amplitudes(), &im.fwd[j]);
            }
        }
        if let Some(tg) = tangents {
            for i in 0..k {
                for j in i..k {
                    for p in 0..np {
                        dm[(i * k + j) * np + p] =
                            inner(tg[i][p].amplitudes(), &im.fwd[j]) + inner(&adj[i], tg[j][p].amplitudes());
                    }
                }
            }
        }
        let mean = (0..k).map(|j| m[j * k + j]).sum::<C64>() / k as f64;
        for i in 0..k {
            for j in i + 1..k {
                r.push(m[i * k + j].re);
                r.push(m[i * k + j].im);
                if np > 0 {
                    jac.extend((0..np).map(|p| dm[(i * k + j) * np + p].re));
                    jac.extend((0..np).map(|p| dm[(i * k + j) * np + p].im));
                }
            }
        }
        for j in 0..k {
            let d = (m[j * k + j] - mean) / 2.0;
            r.push(d.re);
            r.push(d.im);
            if np > 0 {
                let dd: Vec<C64> = (0..np)
                    .map(|p| {
                        let dmean = (0..k).map(|l| dm[(l * k + l) * np + p]).sum::<C64>() / k as f64;
                        (dm[(j * k + j) * np + p] - dmean) / 2.0
                    })
                    .collect();
                jac.extend(dd.iter().map(|c| c.re));
                jac.extend(dd.iter().map(|c| c.im));
            }
        }
    }
    Ok((r, jac))
}
