//! Local (and qubit-permutation) equivalence of two codes.
//!
//! With V = ⊗_q Rz(φ_3q+2) Rx(φ_3q+1) Rz(φ_3q) and a qubit relabelling Π,
//! C_LE = (K − Σ_ab |⟨ψ'_a|VΠ|ψ_b⟩|²)², which vanishes exactly when VΠ maps
//! one code space onto the other.

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::powell::{powell, PowellOptions};
use crate::state::{inner, StateVector};

use super::{spectrum, CodeCandidate, DETECT_TOL, SWEEP_GUARD};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquivalenceOptions {
    /// Random φ starts per permutation (the first start is φ = 0).
    pub restarts: usize,
    pub gd_steps: usize,
    pub learning_rate: f64,
    /// Random permutations tried when n > 7.
    pub permutation_budget: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for EquivalenceOptions {
    fn default() -> Self {
        Self { restarts: 50, gd_steps: 200, learning_rate: 0.1, permutation_budget: 200, threshold: 1e-10, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceOutcome {
    pub equivalent: bool,
    /// Set when the enumerators already differ.
    pub enumerators_differ: bool,
    pub permutation: Option<Vec<usize>>,
    pub angles: Option<Vec<f64>>,
    pub best_cost: f64,
    pub permutations_tried: usize,
}

struct Problem<'a> {
    n: usize,
    k: f64,
    source: Vec<StateVector>,
    target: &'a [StateVector],
}

impl Problem<'_> {
    fn overlap_sum(&self, phi: &[f64]) -> f64 {
        let mut s = 0.0;
        for b in &self.source {
            let mut v = b.clone();
            for q in 0..self.n {
                v.rz(q, phi[3 * q]);
                v.rx(q, phi[3 * q + 1]);
                v.rz(q, phi[3 * q + 2]);
            }
            for a in self.target {
                s += inner(a.amplitudes(), v.amplitudes()).norm_sqr();
            }
        }
        s
    }

    fn cost(&self, phi: &[f64]) -> f64 {
        (self.k - self.overlap_sum(phi)).powi(2)
    }

    /// Value and exact gradient; the overlap sum is an expectation in φ, so
    /// each derivative is a ±π/2 shift difference.
    fn value_and_gradient(&self, phi: &[f64]) -> (f64, Vec<f64>) {
        let s = self.overlap_sum(phi);
        let mut g = vec![0.0; phi.len()];
        let mut p = phi.to_vec();
        for i in 0..phi.len() {
            p[i] = phi[i] + FRAC_PI_2;
            let plus = self.overlap_sum(&p);
            p[i] = phi[i] - FRAC_PI_2;
            let minus = self.overlap_sum(&p);
            p[i] = phi[i];
            g[i] = -2.0 * (self.k - s) * 0.5 * (plus - minus);
        }
        ((self.k - s).powi(2), g)
    }
}

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    // Heap's algorithm, identity first.
    let mut p: Vec<usize> = (0..n).collect();
    let mut out = vec![p.clone()];
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            out.push(p.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

fn enumerators_match(a: &CodeCandidate, b: &CodeCandidate) -> bool {
    if a.n > SWEEP_GUARD {
        return true;
    }
    let sa = spectrum::scan(&a.basis, DETECT_TOL);
    let sb = spectrum::scan(&b.basis, DETECT_TOL);
    sa.a.iter().zip(&sb.a).chain(sa.b.iter().zip(&sb.b)).all(|(x, y)| (x - y).abs() <= 1e-6)
}

/// Searches for a permutation Π and local angles φ with C_LE below the
/// threshold. Codes with different enumerators are rejected up front.
pub fn local_equivalence(a: &CodeCandidate, b: &CodeCandidate, opts: &EquivalenceOptions) -> Result<EquivalenceOutcome> {
    if a.n != b.n || a.k != b.k {
        return Err(Error::DimensionMismatch(format!("(({}, {})) against (({}, {}))", a.n, a.k, b.n, b.k)));
    }
    let mut out = EquivalenceOutcome {
        equivalent: false,
        enumerators_differ: false,
        permutation: None,
        angles: None,
        best_cost: f64::INFINITY,
        permutations_tried: 0,
    };
    if !enumerators_match(a, b) {
        out.enumerators_differ = true;
        return Ok(out);
    }
    let n = a.n;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let perms = if n <= 7 {
        all_permutations(n)
    } else {
        let mut v = vec![(0..n).collect::<Vec<_>>()];
        for _ in 0..opts.permutation_budget {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(&mut rng);
            v.push(p);
        }
        v
    };
    let powell_opts = PowellOptions { target: opts.threshold * 1e-2, ..Default::default() };
    for perm in perms {
        out.permutations_tried += 1;
        let source = a.basis.iter().map(|s| s.permute_qubits(&perm)).collect::<Result<Vec<_>>>()?;
        let prob = Problem { n, k: a.k as f64, source, target: &b.basis };
        for start in 0..opts.restarts.max(1) {
            let mut phi: Vec<f64> =
                if start == 0 { vec![0.0; 3 * n] } else { (0..3 * n).map(|_| rng.gen_range(0.0..TAU)).collect() };
            let mut c = prob.cost(&phi);
            for _ in 0..opts.gd_steps {
                if c < opts.threshold {
                    break;
                }
                let (v, g) = prob.value_and_gradient(&phi);
                c = v;
                for (p, gi) in phi.iter_mut().zip(&g) {
                    *p -= opts.learning_rate * gi;
                }
            }
            c = prob.cost(&phi);
            if c >= opts.threshold {
                let res = powell(|x| prob.cost(x), &phi, &powell_opts);
                if res.f < c {
                    phi = res.x;
                    c = res.f;
                }
            }
            if c < out.best_cost {
                out.best_cost = c;
                out.permutation = Some(perm.clone());
                out.angles = Some(phi.clone());
            }
            if c < opts.threshold {
                out.equivalent = true;
                return Ok(out);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn heap_enumerates_all() {
        let p = all_permutations(4);
        assert_eq!(p.len(), 24);
        assert_eq!(p[0], vec![0, 1, 2, 3]);
        let mut s = p.clone();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), 24);
    }

    #[test]
    fn code_equivalent_to_itself() {
        let c = catalog::perfect_code();
        let out = local_equivalence(&c, &c, &EquivalenceOptions::default()).unwrap();
        assert!(out.equivalent);
        assert_eq!(out.permutation, Some(vec![0, 1, 2, 3, 4]));
        assert_eq!(out.angles, Some(vec![0.0; 15]));
        assert!(out.best_cost < 1e-20);
    }

    #[test]
    fn rotated_and_permuted_copy_is_found() {
        let c = catalog::perfect_code();
        let basis = c
            .basis
            .iter()
            .map(|s| {
                let mut v = s.permute_qubits(&[1, 0, 2, 3, 4]).unwrap();
                v.rx(2, 0.4);
                v.rz(4, 1.1);
                v
            })
            .collect();
        let d = CodeCandidate::new(basis).unwrap();
        let opts = EquivalenceOptions { restarts: 4, gd_steps: 300, ..Default::default() };
        let out = local_equivalence(&c, &d, &opts).unwrap();
        assert!(out.equivalent, "{out:?}");
    }

    #[test]
    fn different_enumerators_short_circuit() {
        let steane = catalog::steane_code();
        let zz = catalog::zz_adapted_723();
        let out = local_equivalence(&zz, &steane, &EquivalenceOptions::default()).unwrap();
        assert!(!out.equivalent);
        assert!(out.enumerators_differ);
        assert_eq!(out.permutations_tried, 0);
    }

    #[test]
    fn shape_mismatch() {
        let c = catalog::perfect_code();
        let s = catalog::steane_code();
        assert!(local_equivalence(&c, &s, &EquivalenceOptions::default()).is_err());
    }
}
