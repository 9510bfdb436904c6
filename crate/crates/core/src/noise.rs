//! Density-matrix simulation of noisy circuits, the depolarizing-resilience
//! check, the λ split of a noisy output and gradient scans.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{Ansatz, AnsatzKind, Gate, GateKind};
use crate::cost::{cost_l1, cost_l2, value_and_gradient, CostPart, Norm};
use crate::error::{Error, Result};
use crate::error_model::{pauli_below_weight, ErrorSet};
use crate::graph::ConnectivityGraph;
use crate::optimize::attempt_seed;
use crate::state::{qubit_mask, rx_inplace, rz_inplace, rzz_inplace, Operator, StateVector, C64, ZERO};

/// Largest n simulated as a density matrix unless overridden.
pub const DENSITY_GUARD: usize = 10;

/// ρ as a row-major 2^n × 2^n matrix. Internally the same buffer is a
/// 2n-qubit vector (row qubits first), so gate kernels are reused.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn from_pure(psi: &StateVector) -> Result<Self> {
        guard(psi.n(), false)?;
        let a = psi.amplitudes();
        let d = a.len();
        let mut data = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                data[r * d + c] = a[r] * a[c].conj();
            }
        }
        Ok(Self { n: psi.n(), data })
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        guard(n, false)?;
        let d = 1usize << n;
        let mut data = vec![ZERO; d * d];
        for i in 0..d {
            data[i * d + i] = C64::new(1.0 / d as f64, 0.0);
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim() + c]
    }

    pub fn trace(&self) -> C64 {
        let d = self.dim();
        (0..d).map(|i| self.data[i * d + i]).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.data[r * d + c] - self.data[c * d + r].conj()).norm());
            }
        }
        worst
    }

    /// Ascending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let d = self.dim();
        let m = DMatrix::from_fn(d, d, |r, c| (self.data[r * d + c] + self.data[c * d + r].conj()) * 0.5);
        let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().cloned().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Hermitian to 1e−10, unit trace to 1e−10, eigenvalues ≥ −1e−8.
    pub fn check(&self) -> Result<()> {
        let h = self.hermiticity_error();
        if h > 1e-10 {
            return Err(Error::Invariant(format!("density matrix not Hermitian ({h:e})")));
        }
        let t = self.trace();
        if (t - 1.0).norm() > 1e-10 {
            return Err(Error::Invariant(format!("trace {t}")));
        }
        let low = self.eigenvalues()[0];
        if low < -1e-8 {
            return Err(Error::Invariant(format!("negative eigenvalue {low:e}")));
        }
        Ok(())
    }

    /// ⟨ψ|ρ|ψ⟩.
    pub fn fidelity(&self, psi: &StateVector) -> Result<f64> {
        self.same_n(psi.n())?;
        let a = psi.amplitudes();
        let d = self.dim();
        let mut acc = ZERO;
        for r in 0..d {
            let mut row = ZERO;
            for c in 0..d {
                row += self.data[r * d + c] * a[c];
            }
            acc += a[r].conj() * row;
        }
        Ok(acc.re)
    }

    /// Tr(ρ O).
    pub fn expectation(&self, op: &Operator) -> C64 {
        let d = self.dim();
        if let Operator::Pauli(p) = op {
            let (x, z) = (p.x_mask(), p.z_mask());
            let mut acc = ZERO;
            for a in 0..d {
                let v = self.data[a * d + (a ^ x)];
                if (a & z).count_ones() & 1 == 0 {
                    acc += v;
                } else {
                    acc -= v;
                }
            }
            return pauli_base(p) * acc;
        }
        let prod = left_mul(op, self.n, &self.data);
        (0..d).map(|i| prod[i * d + i]).sum()
    }

    /// Tr(self · other) for Hermitian arguments.
    pub fn hs_overlap(&self, other: &DensityMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// O ρ O†.
    pub fn sandwich(&self, op: &Operator) -> DensityMatrix {
        let left = left_mul(op, self.n, &self.data);
        let back = left_mul(op, self.n, &dagger(&left, self.dim()));
        DensityMatrix { n: self.n, data: dagger(&back, self.dim()) }
    }

    /// Tr(self · O other O†).
    pub fn transition(&self, other: &DensityMatrix, op: &Operator) -> f64 {
        let Operator::Pauli(p) = op else {
            return self.hs_overlap(&other.sandwich(op));
        };
        let d = self.dim();
        let (x, z) = (p.x_mask(), p.z_mask());
        let mut acc = 0.0;
        for c in 0..d {
            let sc = (c & z).count_ones();
            let r = c ^ x;
            let row = &self.data[r * d..(r + 1) * d];
            let src = &other.data[c * d..(c + 1) * d];
            for (dd, v) in src.iter().enumerate() {
                let t = row[dd ^ x].re * v.re + row[dd ^ x].im * v.im;
                if (sc + (dd & z).count_ones()) & 1 == 0 {
                    acc += t;
                } else {
                    acc -= t;
                }
            }
        }
        // Tr(ρ_i P ρ_j P†) = Σ conj(ρ_i[c^x][d^x]) s(c) s(d) ρ_j[c][d], Hermitian ρ_i
        acc * p.coefficient().norm_sqr()
    }

    fn same_n(&self, n: usize) -> Result<()> {
        if n != self.n {
            return Err(Error::DimensionMismatch(format!("{n}-qubit object against {}-qubit ρ", self.n)));
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &Gate, angle: f64) {
        let n2 = 2 * self.n;
        let t = &gate.targets;
        // U on the row index, conj(U) = U(−θ) on the column index
        match gate.kind {
            GateKind::Rx => {
                rx_inplace(&mut self.data, n2, t[0], angle);
                rx_inplace(&mut self.data, n2, self.n + t[0], -angle);
            }
            GateKind::Rz => {
                rz_inplace(&mut self.data, n2, t[0], angle);
                rz_inplace(&mut self.data, n2, self.n + t[0], -angle);
            }
            GateKind::Rzz => {
                rzz_inplace(&mut self.data, n2, t[0], t[1], angle);
                rzz_inplace(&mut self.data, n2, self.n + t[0], self.n + t[1], -angle);
            }
        }
    }

    /// (1 − 3p/4)ρ + p/4 (XρX + YρY + ZρZ) on qubit q.
    pub fn depolarize(&mut self, q: usize, p: f64) {
        let n2 = 2 * self.n;
        let mr = qubit_mask(n2, q);
        let mc = qubit_mask(n2, self.n + q);
        for i in 0..self.data.len() {
            if i & mr != 0 || i & mc != 0 {
                continue;
            }
            let (i00, i01, i10, i11) = (i, i | mc, i | mr, i | mr | mc);
            let (a, b) = (self.data[i00], self.data[i11]);
            self.data[i00] = a * (1.0 - p / 2.0) + b * (p / 2.0);
            self.data[i11] = b * (1.0 - p / 2.0) + a * (p / 2.0);
            self.data[i01] *= 1.0 - p;
            self.data[i10] *= 1.0 - p;
        }
    }

    /// (1 − p)ρ + p Z_aZ_b ρ Z_aZ_b.
    pub fn zz_flip(&mut self, a: usize, b: usize, p: f64) {
        let n2 = 2 * self.n;
        let rows = qubit_mask(n2, a) | qubit_mask(n2, b);
        let cols = qubit_mask(n2, self.n + a) | qubit_mask(n2, self.n + b);
        let f = 1.0 - 2.0 * p;
        for (i, v) in self.data.iter_mut().enumerate() {
            if ((i & rows).count_ones() + (i & cols).count_ones()) & 1 == 1 {
                *v *= f;
            }
        }
    }

    /// (1 − p)ρ + p I/2^n.
    pub fn global_depolarize(&mut self, p: f64) {
        let d = self.dim();
        let tr = self.trace();
        for v in self.data.iter_mut() {
            *v *= 1.0 - p;
        }
        for i in 0..d {
            self.data[i * d + i] += tr * (p / d as f64);
        }
    }
}

fn guard(n: usize, allow_large: bool) -> Result<()> {
    if n > DENSITY_GUARD && !allow_large {
        return Err(Error::Guard(format!("density matrix on {n} qubits exceeds the {DENSITY_GUARD}-qubit guard")));
    }
    if n > 12 {
        return Err(Error::Guard(format!("density matrix on {n} qubits")));
    }
    Ok(())
}

fn dagger(m: &[C64], d: usize) -> Vec<C64> {
    let mut out = vec![ZERO; d * d];
    for r in 0..d {
        for c in 0..d {
            out[c * d + r] = m[r * d + c].conj();
        }
    }
    out
}

/// coeff · i^{#Y}, the phase shared by every column of a Pauli.
fn pauli_base(p: &crate::state::PauliString) -> C64 {
    let ny = (p.x_mask() & p.z_mask()).count_ones();
    p.coefficient() * [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)][ny as usize % 4]
}

/// O·M column by column.
fn left_mul(op: &Operator, n: usize, m: &[C64]) -> Vec<C64> {
    let d = 1usize << n;
    let mut out = vec![ZERO; d * d];
    let mut col = vec![ZERO; d];
    let mut img = vec![ZERO; d];
    for c in 0..d {
        for r in 0..d {
            col[r] = m[r * d + c];
        }
        op.apply_into(n, &col, &mut img);
        for r in 0..d {
            out[r * d + c] = img[r];
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GateNoiseModel {
    #[default]
    None,
    /// One depolarizing channel of strength `eps` after the whole circuit.
    GlobalCircuit { eps: f64 },
    /// Depolarizing channel of strength `rate` after every layer (the
    /// trailing rotation block counts as a layer).
    GlobalDepolarizing { rate: f64 },
    /// Every Rzz sandwiched as N_ZZ(p/8), N_DP⊗N_DP(p/2), Rzz, N_DP⊗N_DP(p/2), N_ZZ(p/8).
    LocalDpZz { p_gate: f64 },
}

impl GateNoiseModel {
    pub fn validate(&self) -> Result<()> {
        let r = match *self {
            GateNoiseModel::None => 0.0,
            GateNoiseModel::GlobalCircuit { eps } => eps,
            GateNoiseModel::GlobalDepolarizing { rate } => rate,
            GateNoiseModel::LocalDpZz { p_gate } => p_gate,
        };
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Config(format!("noise rate {r} outside [0, 1]")));
        }
        Ok(())
    }

    /// Prepared-state depolarizing weight ε1 and the weight ε2 seen by the
    /// off-diagonal estimator, for the global models.
    pub fn effective_rates(&self, a: &Ansatz) -> Option<(f64, f64)> {
        let e1 = match *self {
            GateNoiseModel::None => 0.0,
            GateNoiseModel::GlobalCircuit { eps } => eps,
            GateNoiseModel::GlobalDepolarizing { rate } => 1.0 - (1.0 - rate).powi(layer_ends(a).len() as i32),
            GateNoiseModel::LocalDpZz { .. } => return None,
        };
        Some((e1, 1.0 - (1.0 - e1).powi(2)))
    }
}

/// Gate indices after which a layer ends.
fn layer_ends(a: &Ansatz) -> Vec<usize> {
    let g = a.gates.len();
    if a.kind != AnsatzKind::Layered || a.layers == 0 {
        return vec![g - 1];
    }
    let per = 2 * a.n() + a.graph.edge_count();
    let mut ends: Vec<usize> = (1..=a.layers).map(|l| l * per - 1).collect();
    ends.push(g - 1);
    ends
}

/// Runs the circuit on |j⟩⟨j| with the noise model applied.
pub fn noisy_evaluate(a: &Ansatz, theta: &[f64], model: &GateNoiseModel, j: usize) -> Result<DensityMatrix> {
    model.validate()?;
    if theta.len() != a.n_params() {
        return Err(Error::DimensionMismatch(format!("{} angles for {} parameters", theta.len(), a.n_params())));
    }
    let mut rho = DensityMatrix::from_pure(&StateVector::basis(a.n(), a.input_index(j)?)?)?;
    let ends = layer_ends(a);
    let mut next_end = 0;
    for (idx, g) in a.gates.iter().enumerate() {
        let wrap = match *model {
            GateNoiseModel::LocalDpZz { p_gate } if g.kind == GateKind::Rzz && p_gate > 0.0 => Some(p_gate),
            _ => None,
        };
        if let Some(p) = wrap {
            let (x, y) = (g.targets[0], g.targets[1]);
            rho.zz_flip(x, y, p / 8.0);
            rho.depolarize(x, p / 2.0);
            rho.depolarize(y, p / 2.0);
            rho.apply_gate(g, theta[g.param]);
            rho.depolarize(x, p / 2.0);
            rho.depolarize(y, p / 2.0);
            rho.zz_flip(x, y, p / 8.0);
        } else {
            rho.apply_gate(g, theta[g.param]);
        }
        if let GateNoiseModel::GlobalDepolarizing { rate } = *model {
            if next_end < ends.len() && ends[next_end] == idx {
                rho.global_depolarize(rate);
                next_end += 1;
            }
        }
    }
    if let GateNoiseModel::GlobalCircuit { eps } = *model {
        rho.global_depolarize(eps);
    }
    Ok(rho)
}

pub fn noisy_basis(a: &Ansatz, theta: &[f64], model: &GateNoiseModel, k: usize) -> Result<Vec<DensityMatrix>> {
    (0..k).into_par_iter().map(|j| noisy_evaluate(a, theta, model, j)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisyCost {
    pub total: f64,
    pub offdiag: f64,
    pub diag: f64,
}

/// Cost estimated from noisy states. Diagonal terms use Tr(ρ_j E). The
/// off-diagonal population of |i⟩ after E and the mirrored noisy inverse
/// circuit equals Tr(ρ_i E ρ_j E†), because the adjoint of that inverse is
/// the forward noisy circuit (all noise channels here are self-adjoint).
pub fn noisy_cost_from_states(rhos: &[DensityMatrix], errors: &ErrorSet, norm: Norm) -> Result<NoisyCost> {
    let k = rhos.len();
    if k == 0 || errors.is_empty() {
        return Err(Error::Invalid("empty basis or error set".into()));
    }
    if rhos[0].n() != errors.n {
        return Err(Error::DimensionMismatch(format!("{}-qubit states, {}-qubit errors", rhos[0].n(), errors.n)));
    }
    let parts: Vec<(f64, f64)> = errors
        .terms
        .par_iter()
        .map(|t| {
            let diag: Vec<C64> = rhos.iter().map(|r| r.expectation(&t.op)).collect();
            let mean = diag.iter().sum::<C64>() / k as f64;
            let d: f64 = diag
                .iter()
                .map(|v| match norm {
                    Norm::L1 => (v - mean).norm() / 2.0,
                    Norm::L2 => (v - mean).norm_sqr() / 4.0,
                })
                .sum();
            let mut o = 0.0;
            for j in 1..k {
                for rho_i in &rhos[..j] {
                    let p = rho_i.transition(&rhos[j], &t.op).max(0.0);
                    o += match norm {
                        Norm::L1 => p.sqrt(),
                        Norm::L2 => p,
                    };
                }
            }
            (o, d)
        })
        .collect();
    let offdiag: f64 = parts.iter().map(|p| p.0).sum();
    let diag: f64 = parts.iter().map(|p| p.1).sum();
    Ok(NoisyCost { total: offdiag + diag, offdiag, diag })
}

pub fn noisy_cost(a: &Ansatz, theta: &[f64], model: &GateNoiseModel, errors: &ErrorSet, k: usize, norm: Norm) -> Result<NoisyCost> {
    noisy_cost_from_states(&noisy_basis(a, theta, model, k)?, errors, norm)
}

/// Costs at a zero-cost θ under global depolarizing weight ε2, for Pauli
/// error sets: every off-diagonal population is |c|²ε2/2^n.
pub fn analytic_floor(errors: &ErrorSet, k: usize, eps2: f64) -> Result<(f64, f64)> {
    let d = (1usize << errors.n) as f64;
    let pairs = (k * (k - 1) / 2) as f64;
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    for t in &errors.terms {
        let Operator::Pauli(p) = &t.op else {
            return Err(Error::Invalid("analytic floor needs a Pauli error set".into()));
        };
        let c2 = p.coefficient().norm_sqr();
        l1 += pairs * (c2 * eps2 / d).sqrt();
        l2 += pairs * c2 * eps2 / d;
    }
    Ok((l1, l2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResilienceReport {
    pub eps: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub ideal_l1: f64,
    pub noisy_l1: f64,
    pub noisy_l2: f64,
    pub floor_l1: f64,
    pub floor_l2: f64,
    /// ‖∇ noisy C^ℓ2‖∞ by central differences.
    pub grad_inf: f64,
    /// Noisy C^ℓ1 after moving θ_0 by 0.1.
    pub perturbed_l1: f64,
    /// Random θ tried, and how many of them gave a noisy C^ℓ1 above the floor.
    pub random_trials: usize,
    pub random_above_floor: usize,
    pub passes: bool,
}

/// Checks that a noiselessly optimal θ stays optimal under a global
/// depolarizing channel of strength ε, and that `random_trials` uniform θ
/// (drawn from `seed`) all sit above the floor.
pub fn resilience_check(
    a: &Ansatz,
    theta: &[f64],
    errors: &ErrorSet,
    k: usize,
    eps: f64,
    random_trials: usize,
    seed: u64,
) -> Result<ResilienceReport> {
    let model = GateNoiseModel::GlobalCircuit { eps };
    let (eps1, eps2) = model.effective_rates(a).unwrap_or((0.0, 0.0));
    let ideal_l1 = cost_l1(a, theta, errors, k)?.total;
    let noisy_l1 = noisy_cost(a, theta, &model, errors, k, Norm::L1)?.total;
    let noisy_l2 = noisy_cost(a, theta, &model, errors, k, Norm::L2)?.total;
    let (floor_l1, floor_l2) = analytic_floor(errors, k, eps2)?;
    let h = 1e-5;
    let grad: Vec<f64> = (0..theta.len())
        .map(|p| {
            let mut tp = theta.to_vec();
            let mut tm = theta.to_vec();
            tp[p] += h;
            tm[p] -= h;
            let f = |t: &[f64]| noisy_cost(a, t, &model, errors, k, Norm::L2).map(|c| c.total);
            Ok((f(&tp)? - f(&tm)?) / (2.0 * h))
        })
        .collect::<Result<_>>()?;
    let grad_inf = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let mut tp = theta.to_vec();
    tp[0] += 0.1;
    let perturbed_l1 = noisy_cost(a, &tp, &model, errors, k, Norm::L1)?.total;
    let above: Vec<bool> = (0..random_trials)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(attempt_seed(seed, 0, s));
            let t: Vec<f64> = (0..a.n_params()).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
            Ok(noisy_cost(a, &t, &model, errors, k, Norm::L1)?.total > floor_l1)
        })
        .collect::<Result<_>>()?;
    let random_above_floor = above.iter().filter(|&&b| b).count();
    let passes = (noisy_l1 - floor_l1).abs() <= 1e-8
        && (noisy_l2 - floor_l2).abs() <= 1e-8
        && grad_inf < 1e-6
        && perturbed_l1 > floor_l1
        && random_above_floor == random_trials;
    Ok(ResilienceReport {
        eps,
        eps1,
        eps2,
        ideal_l1,
        noisy_l1,
        noisy_l2,
        floor_l1,
        floor_l2,
        grad_inf,
        perturbed_l1,
        random_trials,
        random_above_floor,
        passes,
    })
}

/// (λ0, λ1, λ2) with ρ = λ0|ψ⟩⟨ψ| + λ1 I/2^n + λ2 ρ_2, ρ_2 ⟂ ψ.
pub fn lambda_split(rho: &DensityMatrix, psi: &StateVector) -> Result<(f64, f64, f64)> {
    rho.same_n(psi.n())?;
    if (rho.trace() - 1.0).norm() > 1e-9 || (psi.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid("lambda_split needs normalized inputs".into()));
    }
    let d = rho.dim() as f64;
    let l1 = d * rho.eigenvalues()[0];
    let l0 = rho.fidelity(psi)? - l1 / d;
    Ok((l0, l1, 1.0 - l0 - l1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "layers", rename_all = "kebab-case")]
pub enum LayerRule {
    Const(usize),
    /// ⌈log2 n⌉
    CeilLog,
    /// L = n
    Linear,
}

impl LayerRule {
    pub fn layers(&self, n: usize) -> usize {
        match *self {
            LayerRule::Const(l) => l,
            LayerRule::CeilLog => (usize::BITS - (n - 1).leading_zeros()) as usize,
            LayerRule::Linear => n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BpRow {
    pub n: usize,
    pub layers: usize,
    pub p_gate: f64,
    pub samples: usize,
    pub mean_abs: f64,
    pub var: f64,
    pub mean_abs_offdiag: f64,
    pub mean_abs_diag: f64,
}

/// ∂C^ℓ2/∂θ_p split into (off-diagonal, diagonal), on the star graph with
/// K = 2 and all Pauli errors of weight < 3.
fn sample_derivative(a: &Ansatz, theta: &[f64], p: usize, errors: &ErrorSet, p_gate: f64) -> Result<(f64, f64)> {
    if p_gate == 0.0 {
        let (_, go) = value_and_gradient(a, theta, errors, 2, CostPart::OffDiagonal)?;
        let (_, gd) = value_and_gradient(a, theta, errors, 2, CostPart::Diagonal)?;
        return Ok((go[p], gd[p]));
    }
    let model = GateNoiseModel::LocalDpZz { p_gate };
    let h = 1e-4;
    let mut tp = theta.to_vec();
    let mut tm = theta.to_vec();
    tp[p] += h;
    tm[p] -= h;
    let cp = noisy_cost(a, &tp, &model, errors, 2, Norm::L2)?;
    let cm = noisy_cost(a, &tm, &model, errors, 2, Norm::L2)?;
    Ok(((cp.offdiag - cm.offdiag) / (2.0 * h), (cp.diag - cm.diag) / (2.0 * h)))
}

/// One row of a gradient-magnitude scan for each n (and the layer count the
/// rule assigns to it). Seed-deterministic.
pub fn bp_scan(n_list: &[usize], rule: LayerRule, p_gate: f64, samples: usize, seed: u64) -> Result<Vec<BpRow>> {
    let pairs: Vec<(usize, usize)> = n_list.iter().map(|&n| (n, rule.layers(n))).collect();
    bp_scan_points(&pairs, p_gate, samples, seed)
}

/// Same as [`bp_scan`] for explicit (n, L) points.
pub fn bp_scan_points(points: &[(usize, usize)], p_gate: f64, samples: usize, seed: u64) -> Result<Vec<BpRow>> {
    if samples == 0 {
        return Err(Error::Invalid("samples must be positive".into()));
    }
    GateNoiseModel::LocalDpZz { p_gate }.validate()?;
    let mut rows = Vec::new();
    for &(n, layers) in points {
        if p_gate > 0.0 {
            guard(n, false)?;
        }
        let g = ConnectivityGraph::star(n)?;
        let a = Ansatz::layered(&g, &[0], layers)?;
        let errors = pauli_below_weight(n, 3)?;
        let vals: Vec<(f64, f64)> = (0..samples)
            .into_par_iter()
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(attempt_seed(seed, n * 1000 + layers, s));
                let theta: Vec<f64> = (0..a.n_params()).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
                let p = rng.gen_range(0..a.n_params());
                sample_derivative(&a, &theta, p, &errors, p_gate)
            })
            .collect::<Result<_>>()?;
        let m = samples as f64;
        let all: Vec<f64> = vals.iter().map(|(o, d)| o + d).collect();
        let mean = all.iter().sum::<f64>() / m;
        rows.push(BpRow {
            n,
            layers,
            p_gate,
            samples,
            mean_abs: all.iter().map(|v| v.abs()).sum::<f64>() / m,
            var: all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m,
            mean_abs_offdiag: vals.iter().map(|v| v.0.abs()).sum::<f64>() / m,
            mean_abs_diag: vals.iter().map(|v| v.1.abs()).sum::<f64>() / m,
        });
    }
    Ok(rows)
}

pub fn write_bp_csv<W: Write>(rows: &[BpRow], mut w: W) -> Result<()> {
    writeln!(w, "n,layers,p_gate,samples,mean_abs,var,mean_abs_offdiag,mean_abs_diag")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{:e},{:e},{:e},{:e}",
            r.n, r.layers, r.p_gate, r.samples, r.mean_abs, r.var, r.mean_abs_offdiag, r.mean_abs_diag
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaRow {
    pub layers: usize,
    pub p_gate: f64,
    pub samples: usize,
    /// Means and standard deviations of (λ0, λ1, λ2).
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

/// Average λ split of the first noisy basis state under the local model,
/// over random θ, for each depth.
pub fn lambda_scan(graph: &ConnectivityGraph, layers: &[usize], p_gate: f64, samples: usize, seed: u64) -> Result<Vec<LambdaRow>> {
    if samples == 0 {
        return Err(Error::Invalid("samples must be positive".into()));
    }
    guard(graph.n(), false)?;
    let model = GateNoiseModel::LocalDpZz { p_gate };
    model.validate()?;
    let mut rows = Vec::new();
    for &l in layers {
        let a = Ansatz::layered(graph, &[0], l)?;
        let vals: Vec<[f64; 3]> = (0..samples)
            .into_par_iter()
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(attempt_seed(seed, l, s));
                let theta: Vec<f64> = (0..a.n_params()).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
                let rho = noisy_evaluate(&a, &theta, &model, 0)?;
                let (x, y, z) = lambda_split(&rho, &a.evaluate(&theta, 0)?)?;
                Ok([x, y, z])
            })
            .collect::<Result<_>>()?;
        let m = samples as f64;
        let mut mean = [0.0; 3];
        let mut std = [0.0; 3];
        for c in 0..3 {
            mean[c] = vals.iter().map(|v| v[c]).sum::<f64>() / m;
            std[c] = (vals.iter().map(|v| (v[c] - mean[c]).powi(2)).sum::<f64>() / m).sqrt();
        }
        rows.push(LambdaRow { layers: l, p_gate, samples, mean, std });
    }
    Ok(rows)
}

pub fn write_lambda_csv<W: Write>(rows: &[LambdaRow], mut w: W) -> Result<()> {
    writeln!(w, "layers,p_gate,samples,lambda0,lambda1,lambda2,std0,std1,std2")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.layers, r.p_gate, r.samples, r.mean[0], r.mean[1], r.mean[2], r.std[0], r.std[1], r.std[2]
        )?;
    }
    Ok(())
}

/// Ideal C^ℓ1 and C^ℓ2 at θ, for comparing with noisy estimates.
pub fn ideal_costs(a: &Ansatz, theta: &[f64], errors: &ErrorSet, k: usize) -> Result<(f64, f64)> {
    Ok((cost_l1(a, theta, errors, k)?.total, cost_l2(a, theta, errors, k)?.total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::cost_from_basis;

    fn setup() -> (Ansatz, Vec<f64>, ErrorSet) {
        let g = ConnectivityGraph::ring(4).unwrap();
        let a = Ansatz::layered(&g, &[0], 2).unwrap();
        let th = (0..a.n_params()).map(|i| (i as f64 * 0.77).sin() * 3.0).collect();
        (a, th, pauli_below_weight(4, 2).unwrap())
    }

    #[test]
    fn noiseless_matches_pure_state() {
        let (a, th, _) = setup();
        let psi = a.evaluate(&th, 1).unwrap();
        let rho = noisy_evaluate(&a, &th, &GateNoiseModel::LocalDpZz { p_gate: 0.0 }, 1).unwrap();
        let want = DensityMatrix::from_pure(&psi).unwrap();
        let diff = rho.data.iter().zip(&want.data).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-10);
    }

    #[test]
    fn global_circuit_noise_is_exact_mixture() {
        let (a, th, _) = setup();
        let eps = 0.2;
        let psi = a.evaluate(&th, 0).unwrap();
        let rho = noisy_evaluate(&a, &th, &GateNoiseModel::GlobalCircuit { eps }, 0).unwrap();
        let mut want = DensityMatrix::from_pure(&psi).unwrap();
        want.global_depolarize(eps);
        assert!(rho.data.iter().zip(&want.data).all(|(x, y)| (x - y).norm() < 1e-12));
        // per-layer model agrees with its composed weight
        let m = GateNoiseModel::GlobalDepolarizing { rate: 0.05 };
        let (e1, _) = m.effective_rates(&a).unwrap();
        let rho = noisy_evaluate(&a, &th, &m, 0).unwrap();
        let mut want = DensityMatrix::from_pure(&psi).unwrap();
        want.global_depolarize(e1);
        assert!(rho.data.iter().zip(&want.data).all(|(x, y)| (x - y).norm() < 1e-12));
    }

    #[test]
    fn cptp_for_local_noise() {
        let (a, th, _) = setup();
        for p in [0.01, 0.1, 0.5, 1.0] {
            let rho = noisy_evaluate(&a, &th, &GateNoiseModel::LocalDpZz { p_gate: p }, 1).unwrap();
            rho.check().unwrap();
        }
    }

    #[test]
    fn depolarize_matches_kraus_form() {
        let (a, th, _) = setup();
        let rho = DensityMatrix::from_pure(&a.evaluate(&th, 0).unwrap()).unwrap();
        let p = 0.3;
        let mut fast = rho.clone();
        fast.depolarize(2, p);
        let mut want: Vec<C64> = rho.data.iter().map(|v| v * (1.0 - 3.0 * p / 4.0)).collect();
        for s in ["IIXI", "IIYI", "IIZI"] {
            let op = Operator::Pauli(crate::state::PauliString::parse(s).unwrap());
            for (w, v) in want.iter_mut().zip(&rho.sandwich(&op).data) {
                *w += v * (p / 4.0);
            }
        }
        assert!(fast.data.iter().zip(&want).all(|(x, y)| (x - y).norm() < 1e-12));
        let mut fast = rho.clone();
        fast.zz_flip(0, 3, p);
        let op = Operator::Pauli(crate::state::PauliString::parse("ZIIZ").unwrap());
        let flipped = rho.sandwich(&op);
        for ((x, y), z) in fast.data.iter().zip(&rho.data).zip(&flipped.data) {
            assert!((x - (y * (1.0 - p) + z * p)).norm() < 1e-12);
        }
    }

    #[test]
    fn pauli_kernels_match_generic_path() {
        let (a, th, _) = setup();
        let model = GateNoiseModel::LocalDpZz { p_gate: 0.2 };
        let r0 = noisy_evaluate(&a, &th, &model, 0).unwrap();
        let r1 = noisy_evaluate(&a, &th, &model, 1).unwrap();
        for s in ["XIYZ", "-iZZII", "IYYI", "IIII"] {
            let p = crate::state::PauliString::parse(s).unwrap();
            let sparse = Operator::Sparse(p.to_sparse());
            let pauli = Operator::Pauli(p);
            assert!((r0.expectation(&pauli) - r0.expectation(&sparse)).norm() < 1e-12, "{s}");
            assert!((r0.transition(&r1, &pauli) - r0.transition(&r1, &sparse)).abs() < 1e-12, "{s}");
        }
    }

    #[test]
    fn no_noise_cost_equals_engine() {
        let (a, th, e) = setup();
        let rhos = noisy_basis(&a, &th, &GateNoiseModel::None, 2).unwrap();
        let basis = a.evaluate_basis(&th, 2).unwrap();
        // ℓ1 takes square roots of populations, so rounding near zero shows up at ~1e-8
        for (norm, tol) in [(Norm::L2, 1e-10), (Norm::L1, 1e-6)] {
            let got = noisy_cost_from_states(&rhos, &e, norm).unwrap().total;
            let want = cost_from_basis(&basis, &e, norm).unwrap().total;
            assert!((got - want).abs() < tol, "{got} vs {want}");
        }
    }

    #[test]
    fn diagonal_deviation_scales_by_one_minus_eps() {
        let (a, th, e) = setup();
        let clean = noisy_cost(&a, &th, &GateNoiseModel::None, &e, 2, Norm::L1).unwrap();
        let noisy = noisy_cost(&a, &th, &GateNoiseModel::GlobalCircuit { eps: 0.3 }, &e, 2, Norm::L1).unwrap();
        assert!((noisy.diag - 0.7 * clean.diag).abs() < 1e-10);
    }

    #[test]
    fn lambda_split_limits() {
        let (a, th, _) = setup();
        let psi = a.evaluate(&th, 0).unwrap();
        let (l0, l1, l2) = lambda_split(&DensityMatrix::from_pure(&psi).unwrap(), &psi).unwrap();
        assert!((l0 - 1.0).abs() < 1e-9 && l1.abs() < 1e-9 && l2.abs() < 1e-9);
        let (l0, l1, l2) = lambda_split(&DensityMatrix::maximally_mixed(4).unwrap(), &psi).unwrap();
        assert!(l0.abs() < 1e-9 && (l1 - 1.0).abs() < 1e-9 && l2.abs() < 1e-9);
        let rho = noisy_evaluate(&a, &th, &GateNoiseModel::LocalDpZz { p_gate: 0.05 }, 0).unwrap();
        let (l0, l1, l2) = lambda_split(&rho, &psi).unwrap();
        assert!((l0 + l1 + l2 - 1.0).abs() < 1e-15);
        assert!(l1 >= 0.0 && (-1e-9..=1.0).contains(&l0));
    }

    #[test]
    fn lambda_scan_rows_sum_to_one() {
        let g = ConnectivityGraph::ring(4).unwrap();
        let rows = lambda_scan(&g, &[1, 3], 0.02, 3, 1).unwrap();
        for r in &rows {
            assert!((r.mean.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        // deeper circuits are noisier
        assert!(rows[1].mean[0] < rows[0].mean[0]);
    }

    #[test]
    fn guard_rejects_large() {
        assert!(DensityMatrix::maximally_mixed(11).is_err());
        assert!(GateNoiseModel::GlobalCircuit { eps: 1.5 }.validate().is_err());
    }

    #[test]
    fn layer_rules() {
        assert_eq!(LayerRule::CeilLog.layers(8), 3);
        assert_eq!(LayerRule::CeilLog.layers(5), 3);
        assert_eq!(LayerRule::Linear.layers(6), 6);
        assert_eq!(LayerRule::Const(3).layers(9), 3);
    }

    #[test]
    fn bp_scan_is_deterministic() {
        let a = bp_scan(&[4], LayerRule::Const(2), 0.0, 8, 3).unwrap();
        let b = bp_scan(&[4], LayerRule::Const(2), 0.0, 8, 3).unwrap();
        assert_eq!(a, b);
        let noisy = bp_scan(&[3], LayerRule::Const(1), 1e-9, 4, 3).unwrap();
        let clean = bp_scan(&[3], LayerRule::Const(1), 0.0, 4, 3).unwrap();
        assert!((noisy[0].mean_abs - clean[0].mean_abs).abs() < 1e-5);
    }
}
