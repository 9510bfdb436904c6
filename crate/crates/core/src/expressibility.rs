//! Quantum Fisher information of the code-projector family and the
//! parameter dimension it implies.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::Ansatz;
use crate::cost::code_basis;
use crate::error::{Error, Result};
use crate::state::StateVector;

/// Relative eigenvalue cutoff. With a (nearly) square Jacobian the smallest
/// genuine eigenvalues reach ~1e-10 of the largest; null ones stay near 1e-16.
pub const DEFAULT_SV_TOL: f64 = 1e-12;
pub const DEFAULT_SAMPLES: usize = 5;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QfimResult {
    pub n_params: usize,
    /// Row-major N×N.
    pub matrix: Vec<f64>,
    pub rank: usize,
    pub sv_threshold: f64,
}

impl QfimResult {
    pub fn get(&self, l: usize, m: usize) -> f64 {
        self.matrix[l * self.n_params + m]
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Tangents with the code-space component removed, one block per input.
fn projected_tangents(a: &Ansatz, theta: &[f64], k: usize) -> Result<(Vec<StateVector>, Vec<Vec<Vec<C64>>>)> {
    let basis = code_basis(a, theta, k)?;
    let blocks: Vec<Vec<Vec<C64>>> = (0..k)
        .into_par_iter()
        .map(|j| {
            let t = a.tangents(theta, j)?;
            Ok(t.into_iter()
                .map(|v| {
                    let mut q = v.into_amplitudes();
                    for b in &basis {
                        let c = dot(b.amplitudes(), &q);
                        for (qi, bi) in q.iter_mut().zip(b.amplitudes()) {
                            *qi -= c * bi;
                        }
                    }
                    q
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok((basis, blocks))
}

fn eigen_rank(f: &DMatrix<f64>, rel_tol: f64) -> usize {
    let ev = SymmetricEigen::new(f.clone()).eigenvalues;
    let max = ev.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return 0;
    }
    ev.iter().filter(|&&e| e > rel_tol * max).count()
}

/// QFIM of P/K at θ, the SLD metric -2∂²Dist_K:
/// F_lm = (4/K) Σ_j Re⟨∂_l ψ_j|(1 - P)|∂_m ψ_j⟩.
pub fn qfim(a: &Ansatz, theta: &[f64], k: usize, sv_rel_tol: f64) -> Result<QfimResult> {
    if theta.len() != a.n_params() {
        return Err(Error::DimensionMismatch(format!("{} angles for {} parameters", theta.len(), a.n_params())));
    }
    let np = theta.len();
    let (_, blocks) = projected_tangents(a, theta, k)?;
    let dim = 1usize << a.n();
    let mut m = DMatrix::<f64>::zeros(2 * k * dim, np);
    for (j, block) in blocks.iter().enumerate() {
        for (p, q) in block.iter().enumerate() {
            for (i, z) in q.iter().enumerate() {
                m[(2 * (j * dim + i), p)] = z.re;
                m[(2 * (j * dim + i) + 1, p)] = z.im;
            }
        }
    }
    let mut f = m.transpose() * &m;
    f *= 4.0 / k as f64;
    f = (&f + f.transpose()) * 0.5;
    let rank = eigen_rank(&f, sv_rel_tol);
    let matrix = (0..np).flat_map(|l| (0..np).map(move |c| (l, c))).map(|(l, c)| f[(l, c)]).collect();
    Ok(QfimResult { n_params: np, matrix, rank, sv_threshold: sv_rel_tol })
}

/// Fidelity (Tr√(√ρ σ √ρ))² between P_a/K and P_b/K given orthonormal bases.
pub fn projector_fidelity(a: &[StateVector], b: &[StateVector]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Invalid("bases of different sizes".into()));
    }
    let k = a.len();
    let mut o = DMatrix::<C64>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            o[(i, j)] = a[i].overlap(&b[j])?;
        }
    }
    let s: f64 = o.svd(false, false).singular_values.iter().sum();
    Ok((s / k as f64).powi(2))
}

/// Largest sampled QFIM rank over `samples` random θ ∈ [0, 2π)^N.
pub fn parameter_dimension(a: &Ansatz, k: usize, samples: usize, sv_rel_tol: f64, seed: u64) -> Result<usize> {
    if samples == 0 {
        return Err(Error::Invalid("samples must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0;
    for _ in 0..samples {
        let theta: Vec<f64> = (0..a.n_params()).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        best = best.max(qfim(a, &theta, k, sv_rel_tol)?.rank);
    }
    Ok(best)
}

/// Real dimension 2K(2^n − K) of the Grassmannian of K-planes.
pub fn dc_max(n: usize, k: usize) -> usize {
    let d = 1usize << n;
    2 * k * (d - k.min(d))
}

/// Smallest L with L(2n + |E|) + 2n ≥ dc_max.
pub fn l_crit(n: usize, k: usize, edge_count: usize) -> usize {
    let need = dc_max(n, k).saturating_sub(2 * n);
    need.div_ceil(2 * n + edge_count)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub layers: usize,
    pub n_params: usize,
    pub rank: usize,
    pub dc_max: usize,
}

pub fn write_rank_csv<W: Write>(rows: &[RankRow], mut w: W) -> Result<()> {
    writeln!(w, "layers,n_params,rank,dc_max")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.layers, r.n_params, r.rank, r.dc_max)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ConnectivityGraph;

    fn small(n: usize, layers: usize, logical: &[usize]) -> (Ansatz, Vec<f64>) {
        let g = ConnectivityGraph::ring(n).unwrap();
        let a = Ansatz::layered(&g, logical, layers).unwrap();
        let th = (0..a.n_params()).map(|i| 0.7 + (i as f64 * 1.91).sin() * 2.0).collect();
        (a, th)
    }

    #[test]
    fn closed_forms() {
        assert_eq!(dc_max(7, 3), 750);
        assert_eq!(l_crit(7, 3, 10), 31);
        assert_eq!(dc_max(7, 1), 254);
        assert_eq!(l_crit(7, 1, 10), 10);
        assert_eq!(l_crit(7, 2, 10), 21);
        assert_eq!(l_crit(7, 4, 10), 41);
        assert_eq!(dc_max(3, 8), 0);
    }

    #[test]
    fn pure_state_reduction() {
        let (a, th) = small(3, 2, &[0]);
        let f = qfim(&a, &th, 1, DEFAULT_SV_TOL).unwrap();
        let psi = a.evaluate(&th, 0).unwrap();
        let t = a.tangents(&th, 0).unwrap();
        for l in 0..a.n_params() {
            for m in 0..a.n_params() {
                let want = 4.0
                    * (t[l].overlap(&t[m]).unwrap() - t[l].overlap(&psi).unwrap() * psi.overlap(&t[m]).unwrap()).re;
                assert!((f.get(l, m) - want).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn symmetric_psd() {
        let (a, th) = small(3, 2, &[0, 1]);
        let f = qfim(&a, &th, 3, DEFAULT_SV_TOL).unwrap();
        let n = f.n_params;
        let m = DMatrix::from_row_slice(n, n, &f.matrix);
        assert!((&m - m.transpose()).abs().max() < 1e-9);
        let ev = SymmetricEigen::new(m).eigenvalues;
        assert!(ev.iter().all(|&e| e > -1e-8));
        assert!(f.rank <= n.min(dc_max(3, 3)));
    }

    #[test]
    fn hessian_oracle() {
        let (a, th) = small(3, 1, &[0]);
        let k = 2;
        let f = qfim(&a, &th, k, DEFAULT_SV_TOL).unwrap();
        let b0 = code_basis(&a, &th, k).unwrap();
        let dist = |d: &[f64]| {
            let t: Vec<f64> = th.iter().zip(d).map(|(x, y)| x + y).collect();
            projector_fidelity(&b0, &code_basis(&a, &t, k).unwrap()).unwrap()
        };
        let h = 1e-4;
        let np = a.n_params();
        for (l, m) in [(0, 0), (1, 3), (2, 7), (5, 5), (4, 9)] {
            let e = |i: usize, s: f64| {
                let mut v = vec![0.0; np];
                v[i] += s;
                v
            };
            let add = |x: Vec<f64>, y: Vec<f64>| x.iter().zip(&y).map(|(p, q)| p + q).collect::<Vec<f64>>();
            let d2 = (dist(&add(e(l, h), e(m, h))) - dist(&add(e(l, h), e(m, -h))) - dist(&add(e(l, -h), e(m, h)))
                + dist(&add(e(l, -h), e(m, -h))))
                / (4.0 * h * h);
            let want = -2.0 * d2;
            let got = f.get(l, m);
            assert!((got - want).abs() <= 1e-5 * got.abs().max(1.0), "({l},{m}): {got} vs {want}");
        }
    }

    #[test]
    fn idle_parameter_has_zero_row() {
        // Rz on a qubit that stays in |0> is a global phase
        use crate::ansatz::Gate;
        let gates = vec![Gate::rx(0, 0), Gate::rzz(0, 1, 1), Gate::rz(2, 2)];
        let a = Ansatz::custom(3, &[0], gates).unwrap();
        let f = qfim(&a, &[0.4, 0.9, 1.3], 1, DEFAULT_SV_TOL).unwrap();
        for m in 0..3 {
            assert!(f.get(2, m).abs() < 1e-12);
        }
        assert!(f.get(1, 1) > 1e-3);
    }
}
