//! Stabilizer codes from generator tables, and the controlled-unitary
//! extension that leaves the stabilizer family.

use crate::error::{Error, Result};
use crate::state::{qubit_mask, PauliString, StateVector, C64, ZERO};

use super::CodeCandidate;

/// Rank over GF(2) of the symplectic vectors (x | z).
fn symplectic_rank(gens: &[PauliString]) -> usize {
    let n = gens[0].n();
    let mut rows: Vec<u64> = gens.iter().map(|g| ((g.x_mask() as u64) << n) | g.z_mask() as u64).collect();
    let mut rank = 0;
    for bit in (0..2 * n).rev() {
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r] >> bit & 1 == 1) else {
            continue;
        };
        rows.swap(rank, pivot);
        for r in 0..rows.len() {
            if r != rank && rows[r] >> bit & 1 == 1 {
                rows[r] ^= rows[rank];
            }
        }
        rank += 1;
    }
    rank
}

fn check_generators(gens: &[PauliString]) -> Result<usize> {
    let Some(first) = gens.first() else {
        return Err(Error::Invalid("no stabilizer generators".into()));
    };
    let n = first.n();
    if n > 20 {
        return Err(Error::OutOfRange("too many qubits".into()));
    }
    for g in gens {
        if g.n() != n {
            return Err(Error::DimensionMismatch("generators of different length".into()));
        }
        let c = g.coefficient();
        if c.im != 0.0 || (c.re.abs() - 1.0).abs() > 0.0 {
            return Err(Error::Invalid(format!("generator {g} is not Hermitian with sign ±1")));
        }
    }
    for (i, a) in gens.iter().enumerate() {
        for b in &gens[..i] {
            if !a.commutes_with(b) {
                return Err(Error::Invalid(format!("generators {b} and {a} anticommute")));
            }
        }
    }
    if symplectic_rank(gens) != gens.len() {
        return Err(Error::Invalid("dependent stabilizer generators".into()));
    }
    Ok(n)
}

/// Orthonormal basis of the joint +1 eigenspace: project computational
/// seeds |0⟩, |1⟩, ... with Π (I+g)/2 and orthonormalize in index order.
pub fn stabilizer_basis(gens: &[PauliString]) -> Result<CodeCandidate> {
    let n = check_generators(gens)?;
    let k = 1usize << (n - gens.len());
    let mut basis: Vec<StateVector> = Vec::with_capacity(k);
    let mut tmp = vec![ZERO; 1 << n];
    for seed in 0..1usize << n {
        let mut v = StateVector::basis(n, seed)?;
        for g in gens {
            g.apply_into(v.amplitudes(), &mut tmp);
            for (a, b) in v.amplitudes_mut().iter_mut().zip(&tmp) {
                *a = (*a + b) * 0.5;
            }
        }
        for b in &basis {
            let c = b.overlap(&v)?;
            v.axpy(-c, b);
        }
        if v.norm() > 1e-8 {
            v.normalize()?;
            basis.push(v);
            if basis.len() == k {
                break;
            }
        }
    }
    CodeCandidate::new(basis)
}

/// Enumerators by counting: A_j = stabilizer-group elements of weight j,
/// B_j = Pauli strings of weight j commuting with every generator.
pub fn stabilizer_enumerators(gens: &[PauliString]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = check_generators(gens)?;
    let r = gens.len();
    let mut a = vec![0.0; n + 1];
    for subset in 0..1usize << r {
        let (mut x, mut z) = (0usize, 0usize);
        for (i, g) in gens.iter().enumerate() {
            if subset >> i & 1 == 1 {
                x ^= g.x_mask();
                z ^= g.z_mask();
            }
        }
        a[(x | z).count_ones() as usize] += 1.0;
    }
    let mut b = vec![0.0; n + 1];
    for x in 0..1usize << n {
        for z in 0..1usize << n {
            let commutes = gens
                .iter()
                .all(|g| ((x & g.z_mask()).count_ones() + (z & g.x_mask()).count_ones()) % 2 == 0);
            if commutes {
                b[(x | z).count_ones() as usize] += 1.0;
            }
        }
    }
    Ok((a, b))
}

/// Appends a qubit in |0⟩ as the new last qubit and applies U to it,
/// controlled by `control`.
pub fn extend_non_cws(code: &CodeCandidate, control: usize, u: [C64; 4]) -> Result<CodeCandidate> {
    if control >= code.n {
        return Err(Error::OutOfRange(format!("control qubit {control} of {}", code.n)));
    }
    // U†U = I
    let (a, b, c, d) = (u[0], u[1], u[2], u[3]);
    let prod = [
        a.norm_sqr() + c.norm_sqr(),
        b.norm_sqr() + d.norm_sqr(),
        (a.conj() * b + c.conj() * d).norm(),
    ];
    if (prod[0] - 1.0).abs() > 1e-10 || (prod[1] - 1.0).abs() > 1e-10 || prod[2] > 1e-10 {
        return Err(Error::Invalid("controlled operation is not unitary".into()));
    }
    let cm = qubit_mask(code.n, control);
    let basis = code
        .basis
        .iter()
        .map(|s| {
            let zero = StateVector::zero(1)?;
            let mut out = s.tensor(&zero)?;
            let amps = out.amplitudes_mut();
            for (idx, &amp) in s.amplitudes().iter().enumerate() {
                if idx & cm != 0 {
                    amps[idx << 1] = amp * u[0];
                    amps[(idx << 1) | 1] = amp * u[2];
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    CodeCandidate::new(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::ONE;

    #[test]
    fn single_z_stabilizes_zero() {
        let code = stabilizer_basis(&[PauliString::parse("Z").unwrap()]).unwrap();
        assert_eq!(code.k, 1);
        assert_eq!(code.basis[0], StateVector::zero(1).unwrap());
    }

    #[test]
    fn rejects_bad_tables() {
        let x = PauliString::parse("XI").unwrap();
        let z = PauliString::parse("ZI").unwrap();
        assert!(stabilizer_basis(&[x.clone(), z]).is_err());
        let xx = PauliString::parse("XX").unwrap();
        assert!(stabilizer_basis(&[xx.clone(), xx.clone()]).is_err());
        assert!(stabilizer_basis(&[]).is_err());
        assert!(stabilizer_basis(&[xx.with_coefficient(C64::new(0.0, 1.0))]).is_err());
    }

    #[test]
    fn bell_pair() {
        let gens = [PauliString::parse("XX").unwrap(), PauliString::parse("ZZ").unwrap()];
        let code = stabilizer_basis(&gens).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((code.basis[0].amplitudes()[0].re - h).abs() < 1e-12);
        assert!((code.basis[0].amplitudes()[3].re - h).abs() < 1e-12);
        let (a, b) = stabilizer_enumerators(&gens).unwrap();
        assert_eq!(a, vec![1.0, 0.0, 3.0]);
        assert_eq!(a, b);
    }

    #[test]
    fn non_unitary_rejected() {
        let code = stabilizer_basis(&[PauliString::parse("ZZ").unwrap()]).unwrap();
        assert!(extend_non_cws(&code, 0, [ONE, ONE, ZERO, ONE]).is_err());
        assert!(extend_non_cws(&code, 5, [ONE, ZERO, ZERO, ONE]).is_err());
    }
}
