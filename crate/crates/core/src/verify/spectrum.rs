//! Full Pauli sweep of a code: all 4^n matrices ⟨ψ_i|P|ψ_l⟩ up to a common
//! phase, computed with one Walsh–Hadamard transform per X-mask and pair.

use crate::state::{inner, StateVector, C64, ZERO};

/// Summary of one sweep.
#[derive(Clone, Debug)]
pub struct Scan {
    pub n: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// violating[(wx + wy) * (n + 1) + wz] is set when some Pauli with those
    /// typed weights violates detection.
    violating: Vec<bool>,
}

impl Scan {
    pub fn min_violating_weight(&self) -> Option<usize> {
        let n = self.n;
        let mut best = None;
        for xy in 0..=n {
            for z in 0..=n - xy {
                if self.violating[xy * (n + 1) + z] {
                    let w = xy + z;
                    if best.map_or(true, |b| w < b) {
                        best = Some(w);
                    }
                }
            }
        }
        best
    }

    pub fn min_violating_effective(&self, c_z: f64) -> Option<f64> {
        let n = self.n;
        let mut best: Option<f64> = None;
        for xy in 0..=n {
            for z in 0..=n - xy {
                if self.violating[xy * (n + 1) + z] {
                    let w = xy as f64 + c_z * z as f64;
                    if best.map_or(true, |b| w < b) {
                        best = Some(w);
                    }
                }
            }
        }
        best
    }
}

fn wht(v: &mut [C64]) {
    let mut h = 1;
    while h < v.len() {
        for start in (0..v.len()).step_by(2 * h) {
            for i in start..start + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Sweeps every Pauli string. `tol` is the detection violation threshold.
pub fn scan(basis: &[StateVector], tol: f64) -> Scan {
    let n = basis[0].n();
    let k = basis.len();
    let dim = 1usize << n;
    let kf = k as f64;
    let mut a = vec![0.0; n + 1];
    let mut b = vec![0.0; n + 1];
    let mut violating = vec![false; (n + 1) * (n + 1)];
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i..k).map(move |l| (i, l))).collect();
    let mut spec = vec![vec![ZERO; dim]; pairs.len()];
    let mut diag = vec![ZERO; k];
    for x in 0..dim {
        for (s, &(i, l)) in spec.iter_mut().zip(&pairs) {
            let bi = basis[i].amplitudes();
            let bl = basis[l].amplitudes();
            for (kk, v) in s.iter_mut().enumerate() {
                *v = bi[kk ^ x].conj() * bl[kk];
            }
            wht(s);
        }
        for z in 0..dim {
            let wxy = (x).count_ones() as usize;
            let wz = (z & !x).count_ones() as usize;
            let w = wxy + wz;
            let mut off_max = 0.0f64;
            let mut frob = 0.0;
            for (s, &(i, l)) in spec.iter().zip(&pairs) {
                let v = s[z];
                if i == l {
                    diag[i] = v;
                    frob += v.norm_sqr();
                } else {
                    off_max = off_max.max(v.norm());
                    frob += 2.0 * v.norm_sqr();
                }
            }
            let tr: C64 = diag.iter().sum();
            let mean = tr / kf;
            let spread = diag.iter().map(|d| (d - mean).norm()).fold(0.0, f64::max);
            a[w] += tr.norm_sqr() / (kf * kf);
            b[w] += frob / kf;
            if off_max > tol || spread > tol {
                violating[wxy * (n + 1) + wz] = true;
            }
        }
    }
    Scan { n, a, b, violating }
}

/// Direct evaluation of Tr(P P_c) and ‖M(P)‖_F² for one Pauli, used as the
/// slow reference in tests and for n beyond the sweep guard.
pub fn pauli_moments(basis: &[StateVector], p: &crate::state::PauliString) -> (C64, f64, f64) {
    let k = basis.len();
    let mut tr = ZERO;
    let mut frob = 0.0;
    let mut diag = Vec::with_capacity(k);
    let mut off_max = 0.0f64;
    let mut buf = vec![ZERO; basis[0].dim()];
    for l in 0..k {
        p.apply_into(basis[l].amplitudes(), &mut buf);
        for (i, bi) in basis.iter().enumerate() {
            let m = inner(bi.amplitudes(), &buf);
            frob += m.norm_sqr();
            if i == l {
                tr += m;
                diag.push(m);
            } else {
                off_max = off_max.max(m.norm());
            }
        }
    }
    let mean = tr / k as f64;
    let spread = diag.iter().map(|d| (d - mean).norm()).fold(0.0, f64::max);
    (tr, frob, off_max.max(spread))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error_model::paulis_of_weight;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_code(n: usize, k: usize, seed: u64) -> Vec<StateVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out: Vec<StateVector> = Vec::new();
        while out.len() < k {
            let v: Vec<C64> = (0..1 << n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let mut s = StateVector::from_amplitudes(n, v).unwrap();
            for o in &out {
                let c = o.overlap(&s).unwrap();
                s.axpy(-c, o);
            }
            s.normalize().unwrap();
            out.push(s);
        }
        out
    }

    #[test]
    fn sweep_matches_direct_enumeration() {
        let basis = random_code(4, 3, 7);
        let sc = scan(&basis, 1e-7);
        for w in 0..=4 {
            let (mut a, mut b) = (0.0, 0.0);
            for p in paulis_of_weight(4, w) {
                let (tr, frob, _) = pauli_moments(&basis, &p);
                a += tr.norm_sqr() / 9.0;
                b += frob / 3.0;
            }
            assert!((a - sc.a[w]).abs() < 1e-10, "A_{w}");
            assert!((b - sc.b[w]).abs() < 1e-10, "B_{w}");
        }
        assert_eq!(sc.min_violating_weight(), Some(1));
    }
}
