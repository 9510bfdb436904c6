//! Exact certification of code candidates.

pub mod bounds;
pub mod equivalence;
pub mod spectrum;
pub mod stabilizer;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ansatz::Ansatz;
use crate::cost::{error_contribution, matrix_elements, Norm};
use crate::error::{Error, Result};
use crate::error_model::{effective_weight, paulis_of_weight, ErrorSet, WEIGHT_EPS};
use crate::state::{inner, Operator, StateVector, C64, ZERO};

pub use bounds::{concat_bound, hamming_check, inaccuracy_bound, BoundVariant};
pub use equivalence::{local_equivalence, EquivalenceOptions, EquivalenceOutcome};
pub use stabilizer::{extend_non_cws, stabilizer_basis, stabilizer_enumerators};

/// Violation threshold for detection checks.
pub const DETECT_TOL: f64 = 1e-7;

/// Largest n for the full 4^n sweep without an explicit override.
pub const SWEEP_GUARD: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct Provenance {
    pub ansatz: Option<Ansatz>,
    pub theta: Option<Vec<f64>>,
    pub error_set: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeCandidate {
    pub n: usize,
    pub k: usize,
    pub basis: Vec<StateVector>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl CodeCandidate {
    /// Checks orthonormality to 1e-10.
    pub fn new(basis: Vec<StateVector>) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::Invalid("empty code basis".into()));
        }
        let n = basis[0].n();
        if basis.iter().any(|s| s.n() != n) {
            return Err(Error::DimensionMismatch("basis states of different sizes".into()));
        }
        for (i, a) in basis.iter().enumerate() {
            if (a.norm() - 1.0).abs() > 1e-10 {
                return Err(Error::Invariant(format!("basis state {i} has norm {}", a.norm())));
            }
            for (j, b) in basis.iter().enumerate().take(i) {
                let o = a.overlap(b)?.norm();
                if o > 1e-10 {
                    return Err(Error::Invariant(format!("basis states {j} and {i} overlap by {o:e}")));
                }
            }
        }
        Ok(Self { n, k: basis.len(), basis, provenance: Provenance::default() })
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = p;
        self
    }

    /// Code from explicit (possibly unnormalized) vectors, normalized first.
    pub fn from_vectors(n: usize, vecs: Vec<Vec<C64>>) -> Result<Self> {
        let basis = vecs
            .into_iter()
            .map(|v| {
                let mut s = StateVector::from_amplitudes(n, v)?;
                s.normalize()?;
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(basis)
    }
}

/// Complex number stored as [re, im].
pub type Cplx = [f64; 2];

fn cplx(c: C64) -> Cplx {
    [c.re, c.im]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct VerificationReport {
    pub n: usize,
    pub k: usize,
    /// λ_μ (diagonal mean) per detection error, in set order.
    pub lambda_diag: Vec<Cplx>,
    /// λ_{αβ} over a single-error set, row-major, when assembled.
    pub lambda_matrix: Option<Vec<Vec<Cplx>>>,
    pub max_offdiag_violation: f64,
    pub max_diag_violation: f64,
    pub cost_l1: f64,
    pub cost_l2: f64,
    pub passes: bool,
    pub distance: Option<usize>,
    /// (c_Z, effective distance) pairs; None when no Pauli violates.
    pub effective_distance: Vec<(f64, Option<f64>)>,
    pub degenerate: Option<bool>,
    pub pure: Option<bool>,
    pub enumerator_a: Option<Vec<f64>>,
    pub enumerator_b: Option<Vec<f64>>,
    pub epsilon_bounds: BTreeMap<String, f64>,
}

/// Per-error detection check. Off-diagonal violation is max |⟨ψ_i|E|ψ_j⟩|
/// over i ≠ j, diagonal violation max_j |⟨ψ_j|E|ψ_j⟩ − mean|.
pub fn kl_report(code: &CodeCandidate, errors: &ErrorSet, tol: f64) -> Result<VerificationReport> {
    if errors.n != code.n {
        return Err(Error::DimensionMismatch(format!("{}-qubit errors for a {}-qubit code", errors.n, code.n)));
    }
    let k = code.k;
    let mut rep = VerificationReport { n: code.n, k, ..Default::default() };
    for t in &errors.terms {
        let m = matrix_elements(&code.basis, &t.op);
        let mean = (0..k).map(|j| m[j * k + j]).sum::<C64>() / k as f64;
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    rep.max_offdiag_violation = rep.max_offdiag_violation.max(m[i * k + j].norm());
                }
            }
            rep.max_diag_violation = rep.max_diag_violation.max((m[i * k + i] - mean).norm());
        }
        let (o1, d1) = error_contribution(&m, k, Norm::L1);
        let (o2, d2) = error_contribution(&m, k, Norm::L2);
        rep.cost_l1 += o1 + d1;
        rep.cost_l2 += o2 + d2;
        rep.lambda_diag.push(cplx(mean));
    }
    rep.passes = rep.max_offdiag_violation <= tol && rep.max_diag_violation <= tol;
    Ok(rep)
}

/// λ_{ab} = mean_j ⟨ψ_j|E_a†E_b|ψ_j⟩ over a single-error set, together with
/// the largest KL violation over all pairs.
pub fn lambda_matrix(code: &CodeCandidate, singles: &[Operator]) -> Result<(Vec<C64>, f64)> {
    if singles.is_empty() {
        return Err(Error::Invalid("empty single-error set".into()));
    }
    let k = code.k;
    let m = singles.len();
    let images: Vec<Vec<StateVector>> = singles
        .iter()
        .map(|e| code.basis.iter().map(|s| e.apply(s)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut lam = vec![ZERO; m * m];
    let mut worst = 0.0f64;
    let mut g = vec![ZERO; k * k];
    for a in 0..m {
        for b in 0..m {
            for i in 0..k {
                for j in 0..k {
                    g[i * k + j] = inner(images[a][i].amplitudes(), images[b][j].amplitudes());
                }
            }
            let mean = (0..k).map(|j| g[j * k + j]).sum::<C64>() / k as f64;
            lam[a * m + b] = mean;
            for i in 0..k {
                for j in 0..k {
                    let want = if i == j { mean } else { ZERO };
                    worst = worst.max((g[i * k + j] - want).norm());
                }
            }
        }
    }
    Ok((lam, worst))
}

/// Report for correction of a single-error set: products E_a†E_b are
/// checked and λ is stored.
pub fn correction_report(code: &CodeCandidate, singles: &[Operator], tol: f64) -> Result<VerificationReport> {
    let (lam, worst) = lambda_matrix(code, singles)?;
    let m = singles.len();
    let mut rep = VerificationReport { n: code.n, k: code.k, ..Default::default() };
    rep.lambda_matrix = Some((0..m).map(|a| (0..m).map(|b| cplx(lam[a * m + b])).collect()).collect());
    rep.max_offdiag_violation = worst;
    rep.passes = worst <= tol;
    Ok(rep)
}

/// Rank of a complex matrix with a relative singular-value threshold.
pub fn numeric_rank(m: &DMatrix<C64>, rel_tol: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Degenerate ⇔ λ is rank deficient. Requires an assembled λ matrix.
pub fn degeneracy(report: &VerificationReport, rank_tol: f64) -> Result<bool> {
    let lam = report
        .lambda_matrix
        .as_ref()
        .ok_or_else(|| Error::Invalid("degeneracy needs a lambda matrix over a product-closed set".into()))?;
    let m = lam.len();
    if m == 0 {
        return Err(Error::Invalid("empty lambda matrix".into()));
    }
    let mat = DMatrix::from_fn(m, m, |r, c| C64::new(lam[r][c][0], lam[r][c][1]));
    Ok(numeric_rank(&mat, rank_tol) < m)
}

/// Pure ⇔ ⟨ψ_i|E_a†E_b|ψ_j⟩ vanishes for a ≠ b and equals c_a δ_ij for a = b.
pub fn purity(code: &CodeCandidate, singles: &[Operator], tol: f64) -> Result<bool> {
    let k = code.k;
    let images: Vec<Vec<StateVector>> = singles
        .iter()
        .map(|e| code.basis.iter().map(|s| e.apply(s)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    for a in 0..singles.len() {
        for b in 0..singles.len() {
            let mut diag = Vec::with_capacity(k);
            for i in 0..k {
                for j in 0..k {
                    let v = inner(images[a][i].amplitudes(), images[b][j].amplitudes());
                    if i == j {
                        diag.push(v);
                    } else if v.norm() > tol {
                        return Ok(false);
                    }
                }
            }
            if a != b && diag.iter().any(|d| d.norm() > tol) {
                return Ok(false);
            }
            if a == b && diag.iter().any(|d| (d - diag[0]).norm() > tol) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Smallest weight of a Pauli that violates detection; n + 1 when none does.
pub fn code_distance(code: &CodeCandidate) -> usize {
    if code.n <= SWEEP_GUARD {
        return spectrum::scan(&code.basis, DETECT_TOL).min_violating_weight().unwrap_or(code.n + 1);
    }
    for w in 1..=code.n {
        for p in paulis_of_weight(code.n, w) {
            if spectrum::pauli_moments(&code.basis, &p).2 > DETECT_TOL {
                return w;
            }
        }
    }
    code.n + 1
}

/// Smallest c_Z-effective weight among violating Paulis (real valued).
/// See [`integer_effective_distance`] for the integer d_e.
pub fn effective_distance(code: &CodeCandidate, c_z: f64) -> Result<f64> {
    if !(c_z > 0.0) {
        return Err(Error::Invalid(format!("c_Z must be positive, got {c_z}")));
    }
    guard(code.n, false)?;
    let sc = spectrum::scan(&code.basis, DETECT_TOL);
    Ok(sc.min_violating_effective(c_z).unwrap_or(f64::INFINITY))
}

/// Largest integer d_e such that every Pauli of effective weight < d_e is
/// detected.
pub fn integer_effective_distance(value: f64) -> f64 {
    (value + WEIGHT_EPS).floor()
}

fn guard(n: usize, allow_large: bool) -> Result<()> {
    if n > SWEEP_GUARD && !(allow_large && n <= 14) {
        return Err(Error::Guard(format!("full Pauli sweep on {n} qubits needs an explicit override")));
    }
    Ok(())
}

/// (A_j, B_j) for j = 0..=n.
pub fn weight_enumerators(code: &CodeCandidate, allow_large: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    guard(code.n, allow_large)?;
    let sc = spectrum::scan(&code.basis, DETECT_TOL);
    Ok((sc.a, sc.b))
}

/// Distance, enumerators and selected effective distances in one sweep.
pub fn full_report(code: &CodeCandidate, errors: Option<&ErrorSet>, c_z: &[f64]) -> Result<VerificationReport> {
    let mut rep = match errors {
        Some(e) => kl_report(code, e, DETECT_TOL)?,
        None => VerificationReport { n: code.n, k: code.k, passes: true, ..Default::default() },
    };
    guard(code.n, false)?;
    let sc = spectrum::scan(&code.basis, DETECT_TOL);
    rep.distance = Some(sc.min_violating_weight().unwrap_or(code.n + 1));
    for &c in c_z {
        rep.effective_distance.push((c, sc.min_violating_effective(c)));
    }
    rep.enumerator_a = Some(sc.a);
    rep.enumerator_b = Some(sc.b);
    Ok(rep)
}

/// Brute-force minimum effective weight of a violating Pauli, by direct
/// evaluation of every string. Slow reference for tests.
pub fn effective_distance_bruteforce(code: &CodeCandidate, c_z: f64) -> f64 {
    let mut best = f64::INFINITY;
    for w in 1..=code.n {
        for p in paulis_of_weight(code.n, w) {
            if spectrum::pauli_moments(&code.basis, &p).2 > DETECT_TOL {
                best = best.min(effective_weight(&p, c_z).unwrap());
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::error_model::pauli_below_weight;

    #[test]
    fn perfect_code_passes() {
        let code = catalog::perfect_code();
        let e = pauli_below_weight(5, 3).unwrap();
        let rep = kl_report(&code, &e, 1e-9).unwrap();
        assert!(rep.passes);
        assert!(rep.cost_l1 < 1e-9);
        assert_eq!(code_distance(&code), 3);
    }

    #[test]
    fn product_basis_fails() {
        let code = CodeCandidate::new(vec![StateVector::basis(5, 0).unwrap(), StateVector::basis(5, 16).unwrap()]).unwrap();
        let e = pauli_below_weight(5, 3).unwrap();
        let rep = kl_report(&code, &e, 1e-9).unwrap();
        assert!(rep.max_diag_violation >= 0.5);
        assert_eq!(code_distance(&code), 1);
        let id = e.subset(&[0]);
        assert!(kl_report(&code, &id, 1e-12).unwrap().passes);
    }

    #[test]
    fn non_orthonormal_rejected() {
        let s = StateVector::basis(2, 0).unwrap();
        let err = CodeCandidate::new(vec![s.clone(), s]).unwrap_err();
        assert!(err.to_string().contains("invariant violated"));
    }

    #[test]
    fn perfect_code_is_nondegenerate_and_pure() {
        let code = catalog::perfect_code();
        let singles: Vec<Operator> = pauli_below_weight(5, 2).unwrap().terms.into_iter().map(|t| t.op).collect();
        assert_eq!(singles.len(), 16);
        let rep = correction_report(&code, &singles, 1e-9).unwrap();
        assert!(rep.passes);
        assert!(!degeneracy(&rep, 1e-8).unwrap());
        assert!(purity(&code, &singles, 1e-7).unwrap());
        assert!(purity(&code, &singles[..1], 1e-7).unwrap());
    }

    #[test]
    fn identity_lambda_nondegenerate() {
        let rep = VerificationReport {
            lambda_matrix: Some(vec![vec![[1.0, 0.0], [0.0, 0.0]], vec![[0.0, 0.0], [1.0, 0.0]]]),
            ..Default::default()
        };
        assert!(!degeneracy(&rep, 1e-8).unwrap());
        assert!(degeneracy(&VerificationReport::default(), 1e-8).is_err());
    }

    #[test]
    fn effective_distance_matches_bruteforce() {
        let code = catalog::perfect_code();
        for &c in &[0.5, 1.0, 2.0, 3.0] {
            let fast = effective_distance(&code, c).unwrap();
            let slow = effective_distance_bruteforce(&code, c);
            assert!((fast - slow).abs() < 1e-12, "c_Z = {c}");
        }
        assert_eq!(effective_distance(&code, 1.0).unwrap(), 3.0);
        assert!(effective_distance(&code, 0.0).is_err());
    }
}
