//! Dense statevectors, Pauli strings and small sparse operators.
//!
//! Basis ordering: qubit 0 is the most significant bit of the amplitude
//! index, so the string `|q0 q1 ... q(n-1)>` is read left to right.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Hard cap on statevector size.
pub const MAX_QUBITS: usize = 20;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Bit mask of qubit `q` in an `n`-qubit index.
#[inline]
pub fn qubit_mask(n: usize, q: usize) -> usize {
    1usize << (n - 1 - q)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_qubits(n)?;
        let dim = 1usize << n;
        if index >= dim {
            return Err(Error::OutOfRange(format!("basis index {index} for {n} qubits")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { n, amps })
    }

    pub fn from_amplitudes(n: usize, amps: Vec<C64>) -> Result<Self> {
        check_qubits(n)?;
        if amps.len() != 1usize << n {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for {n} qubits",
                amps.len()
            )));
        }
        Ok(Self { n, amps })
    }

    pub(crate) fn from_raw(n: usize, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), 1usize << n);
        Self { n, amps }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let nrm = self.norm();
        if nrm == 0.0 {
            return Err(Error::Invalid("cannot normalize the zero vector".into()));
        }
        let s = 1.0 / nrm;
        self.amps.iter_mut().for_each(|a| *a *= s);
        Ok(())
    }

    pub fn scale(&mut self, c: C64) {
        self.amps.iter_mut().for_each(|a| *a *= c);
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: C64, other: &StateVector) {
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += c * b;
        }
    }

    /// Σ conj(self_a) other_a.
    pub fn overlap(&self, other: &StateVector) -> Result<C64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "overlap of {}-qubit and {}-qubit states",
                self.n, other.n
            )));
        }
        Ok(inner(&self.amps, &other.amps))
    }

    pub fn apply_gate(&self, gate: &SparseOperator) -> Result<StateVector> {
        let mut out = self.clone();
        gate.apply_inplace(&mut out)?;
        Ok(out)
    }

    /// Applies a (possibly non-unitary) operator; the result is not renormalized.
    pub fn apply_kraus(&self, k: &SparseOperator) -> Result<StateVector> {
        self.apply_gate(k)
    }

    pub fn apply_pauli(&self, p: &PauliString) -> Result<StateVector> {
        if p.n() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "{}-qubit Pauli on {}-qubit state",
                p.n(),
                self.n
            )));
        }
        let mut out = vec![ZERO; self.dim()];
        p.apply_into(&self.amps, &mut out);
        Ok(StateVector::from_raw(self.n, out))
    }

    /// Tensor product `self ⊗ other`, with `self` on the leading qubits.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let n = self.n + other.n;
        check_qubits(n)?;
        let mut amps = Vec::with_capacity(1 << n);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(StateVector::from_raw(n, amps))
    }

    /// Relabels qubits: qubit `q` of the result carries qubit `perm[q]` of self.
    pub fn permute_qubits(&self, perm: &[usize]) -> Result<StateVector> {
        let n = self.n;
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Invalid(format!("{perm:?} is not a permutation of {n} qubits")));
        }
        let mut out = vec![ZERO; self.dim()];
        for (idx, &a) in self.amps.iter().enumerate() {
            let mut j = 0;
            for (q, &p) in perm.iter().enumerate() {
                if idx & qubit_mask(n, p) != 0 {
                    j |= qubit_mask(n, q);
                }
            }
            out[j] = a;
        }
        Ok(StateVector::from_raw(n, out))
    }

    pub fn rx(&mut self, q: usize, theta: f64) {
        rx_inplace(&mut self.amps, self.n, q, theta);
    }

    pub fn rz(&mut self, q: usize, theta: f64) {
        rz_inplace(&mut self.amps, self.n, q, theta);
    }

    pub fn rzz(&mut self, a: usize, b: usize, theta: f64) {
        rzz_inplace(&mut self.amps, self.n, a, b, theta);
    }
}

pub(crate) fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::OutOfRange(format!(
            "qubit count {n} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    C64::new(re, im)
}

// Rotation kernels on raw amplitude slices; `n` may exceed the statevector
// cap when the slice is a vectorized density matrix.

pub(crate) fn rx_inplace(amps: &mut [C64], n: usize, q: usize, theta: f64) {
    let (s, c) = (theta / 2.0).sin_cos();
    let m = qubit_mask(n, q);
    let ms = C64::new(0.0, -s);
    for i in 0..amps.len() {
        if i & m == 0 {
            let a = amps[i];
            let b = amps[i | m];
            amps[i] = a * c + b * ms;
            amps[i | m] = a * ms + b * c;
        }
    }
}

pub(crate) fn rz_inplace(amps: &mut [C64], n: usize, q: usize, theta: f64) {
    let (s, c) = (theta / 2.0).sin_cos();
    let lo = C64::new(c, -s);
    let hi = C64::new(c, s);
    let m = qubit_mask(n, q);
    for (i, a) in amps.iter_mut().enumerate() {
        *a *= if i & m == 0 { lo } else { hi };
    }
}

pub(crate) fn rzz_inplace(amps: &mut [C64], n: usize, qa: usize, qb: usize, theta: f64) {
    let (s, c) = (theta / 2.0).sin_cos();
    let even = C64::new(c, -s);
    let odd = C64::new(c, s);
    let ma = qubit_mask(n, qa);
    let mb = qubit_mask(n, qb);
    for (i, a) in amps.iter_mut().enumerate() {
        let parity = ((i & ma) != 0) ^ ((i & mb) != 0);
        *a *= if parity { odd } else { even };
    }
}

/// Applies a dense `2^s x 2^s` matrix on the listed qubits of `amps`.
/// `support[0]` is the most significant bit of the local index.
pub(crate) fn apply_matrix_inplace(amps: &mut [C64], n: usize, support: &[usize], matrix: &[C64]) {
    let s = support.len();
    let d = 1usize << s;
    let mut offsets = vec![0usize; d];
    let mut mask = 0usize;
    for (t, &q) in support.iter().enumerate() {
        let bit = qubit_mask(n, q);
        mask |= bit;
        for (l, off) in offsets.iter_mut().enumerate() {
            if (l >> (s - 1 - t)) & 1 == 1 {
                *off |= bit;
            }
        }
    }
    let mut buf = vec![ZERO; d];
    for base in 0..amps.len() {
        if base & mask != 0 {
            continue;
        }
        for (l, off) in offsets.iter().enumerate() {
            buf[l] = amps[base | off];
        }
        for r in 0..d {
            let row = &matrix[r * d..(r + 1) * d];
            let mut acc = ZERO;
            for (m, b) in row.iter().zip(&buf) {
                acc += m * b;
            }
            amps[base | offsets[r]] = acc;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' | 'i' | '_' => Some(Pauli::I),
            'X' | 'x' => Some(Pauli::X),
            'Y' | 'y' => Some(Pauli::Y),
            'Z' | 'z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    /// Product `self * other` as (phase, letter).
    pub fn mul(self, other: Pauli) -> (C64, Pauli) {
        use Pauli::*;
        let phase = match (self, other) {
            (X, Y) | (Y, Z) | (Z, X) => I_UNIT,
            (Y, X) | (Z, Y) | (X, Z) => -I_UNIT,
            _ => ONE,
        };
        let (x1, z1) = self.bits();
        let (x2, z2) = other.bits();
        (phase, Pauli::from_bits(x1 ^ x2, z1 ^ z2))
    }

    pub fn matrix(self) -> [C64; 4] {
        match self {
            Pauli::I => [ONE, ZERO, ZERO, ONE],
            Pauli::X => [ZERO, ONE, ONE, ZERO],
            Pauli::Y => [ZERO, -I, I, ZERO],
            Pauli::Z => [ONE, ZERO, ZERO, -ONE],
        }
    }
}

const I_UNIT: C64 = C64::new(0.0, 1.0);

/// n-qubit Pauli tensor product with a complex prefactor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "PauliRepr")]
pub struct PauliString {
    letters: Vec<Pauli>,
    coeff: C64,
    #[serde(skip)]
    x_mask: usize,
    #[serde(skip)]
    z_mask: usize,
}

#[derive(Deserialize)]
struct PauliRepr {
    letters: Vec<Pauli>,
    coeff: C64,
}

impl From<PauliRepr> for PauliString {
    fn from(r: PauliRepr) -> Self {
        PauliString::new(r.letters, r.coeff)
    }
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>, coeff: C64) -> Self {
        let mut p = Self { letters, coeff, x_mask: 0, z_mask: 0 };
        p.refresh_masks();
        p
    }

    pub fn identity(n: usize) -> Self {
        Self::new(vec![Pauli::I; n], ONE)
    }

    /// Single non-identity letter on qubit `q`.
    pub fn single(n: usize, q: usize, p: Pauli) -> Self {
        let mut letters = vec![Pauli::I; n];
        letters[q] = p;
        Self::new(letters, ONE)
    }

    pub fn from_sites(n: usize, sites: &[(usize, Pauli)]) -> Self {
        let mut letters = vec![Pauli::I; n];
        for &(q, p) in sites {
            letters[q] = p;
        }
        Self::new(letters, ONE)
    }

    /// Parses strings like `XIZY`, with an optional leading `+`, `-`, `i`, `-i`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (coeff, body) = if let Some(rest) = s.strip_prefix("-i") {
            (-I, rest)
        } else if let Some(rest) = s.strip_prefix("+i") {
            (I, rest)
        } else if let Some(rest) = s.strip_prefix('-') {
            (-ONE, rest)
        } else if let Some(rest) = s.strip_prefix('+') {
            (ONE, rest)
        } else {
            (ONE, s)
        };
        let letters = body
            .chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| Error::Parse(format!("bad Pauli letter {c:?} in {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if letters.is_empty() {
            return Err(Error::Parse("empty Pauli string".into()));
        }
        Ok(Self::new(letters, coeff))
    }

    fn refresh_masks(&mut self) {
        let n = self.letters.len();
        self.x_mask = 0;
        self.z_mask = 0;
        for (q, p) in self.letters.iter().enumerate() {
            let (x, z) = p.bits();
            if x {
                self.x_mask |= qubit_mask(n, q);
            }
            if z {
                self.z_mask |= qubit_mask(n, q);
            }
        }
    }

    pub fn n(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn coefficient(&self) -> C64 {
        self.coeff
    }

    pub fn with_coefficient(mut self, c: C64) -> Self {
        self.coeff = c;
        self
    }

    pub fn x_mask(&self) -> usize {
        self.x_mask
    }

    pub fn z_mask(&self) -> usize {
        self.z_mask
    }

    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&p| p != Pauli::I).count()
    }

    /// (wt_X, wt_Y, wt_Z).
    pub fn typed_weights(&self) -> (usize, usize, usize) {
        let mut w = (0, 0, 0);
        for p in &self.letters {
            match p {
                Pauli::X => w.0 += 1,
                Pauli::Y => w.1 += 1,
                Pauli::Z => w.2 += 1,
                Pauli::I => {}
            }
        }
        w
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n()).filter(|&q| self.letters[q] != Pauli::I).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let a = (self.x_mask & other.z_mask).count_ones() + (self.z_mask & other.x_mask).count_ones();
        a % 2 == 0
    }

    pub fn mul(&self, other: &PauliString) -> PauliString {
        assert_eq!(self.n(), other.n(), "Pauli width mismatch");
        let mut coeff = self.coeff * other.coeff;
        let letters = self
            .letters
            .iter()
            .zip(&other.letters)
            .map(|(&a, &b)| {
                let (ph, p) = a.mul(b);
                coeff *= ph;
                p
            })
            .collect();
        PauliString::new(letters, coeff)
    }

    pub fn adjoint(&self) -> PauliString {
        PauliString::new(self.letters.clone(), self.coeff.conj())
    }

    /// `out = P input`, `out` fully overwritten.
    pub(crate) fn apply_into(&self, input: &[C64], out: &mut [C64]) {
        let ny = (self.x_mask & self.z_mask).count_ones();
        let base = self.coeff
            * match ny % 4 {
                0 => ONE,
                1 => I,
                2 => -ONE,
                _ => -I,
            };
        let neg = -base;
        let (x, z) = (self.x_mask, self.z_mask);
        for (i, a) in input.iter().enumerate() {
            let ph = if (i & z).count_ones() & 1 == 0 { base } else { neg };
            out[i ^ x] = ph * a;
        }
    }

    /// ⟨bra| P |ket⟩ without allocating.
    pub(crate) fn sandwich(&self, bra: &[C64], ket: &[C64]) -> C64 {
        let (x, z) = (self.x_mask, self.z_mask);
        let mut re = 0.0;
        let mut im = 0.0;
        for (i, k) in ket.iter().enumerate() {
            let b = bra[i ^ x];
            let (r, m) = (b.re * k.re + b.im * k.im, b.re * k.im - b.im * k.re);
            if (i & z).count_ones() & 1 == 0 {
                re += r;
                im += m;
            } else {
                re -= r;
                im -= m;
            }
        }
        let ny = (x & z).count_ones();
        let ip = match ny % 4 {
            0 => ONE,
            1 => I,
            2 => -ONE,
            _ => -I,
        };
        self.coeff * ip * C64::new(re, im)
    }

    pub fn to_sparse(&self) -> SparseOperator {
        let support = self.support();
        if support.is_empty() {
            return SparseOperator::scalar_identity(self.coeff);
        }
        let mut m = vec![self.coeff];
        for &q in &support {
            m = kron(&m, &self.letters[q].matrix());
        }
        SparseOperator { support, matrix: m }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeff != ONE {
            write!(f, "({}{:+}i)", self.coeff.re, self.coeff.im)?;
        }
        for p in &self.letters {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

/// Dense complex matrix on an ordered subset of qubits. An empty support
/// denotes a scalar multiple of the identity (matrix of size 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseOperator {
    support: Vec<usize>,
    matrix: Vec<C64>,
}

impl SparseOperator {
    pub fn new(support: Vec<usize>, matrix: Vec<C64>) -> Result<Self> {
        let d = 1usize << support.len();
        if matrix.len() != d * d {
            return Err(Error::DimensionMismatch(format!(
                "matrix of {} entries for support of size {}",
                matrix.len(),
                support.len()
            )));
        }
        let mut seen = support.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != support.len() {
            return Err(Error::Invalid("repeated qubit in operator support".into()));
        }
        Ok(Self { support, matrix })
    }

    pub fn scalar_identity(c: C64) -> Self {
        Self { support: vec![], matrix: vec![c] }
    }

    pub fn single(q: usize, m: [C64; 4]) -> Self {
        Self { support: vec![q], matrix: m.to_vec() }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn matrix(&self) -> &[C64] {
        &self.matrix
    }

    pub fn local_dim(&self) -> usize {
        1usize << self.support.len()
    }

    pub fn entry(&self, r: usize, c: usize) -> C64 {
        self.matrix[r * self.local_dim() + c]
    }

    pub fn check_support(&self, n: usize) -> Result<()> {
        if let Some(&q) = self.support.iter().find(|&&q| q >= n) {
            return Err(Error::OutOfRange(format!("operator acts on qubit {q} of {n}")));
        }
        Ok(())
    }

    pub fn apply_inplace(&self, state: &mut StateVector) -> Result<()> {
        self.check_support(state.n())?;
        let n = state.n();
        self.apply_slice(state.amplitudes_mut(), n);
        Ok(())
    }

    pub(crate) fn apply_slice(&self, amps: &mut [C64], n: usize) {
        if self.support.is_empty() {
            let c = self.matrix[0];
            amps.iter_mut().for_each(|a| *a *= c);
        } else {
            apply_matrix_inplace(amps, n, &self.support, &self.matrix);
        }
    }

    pub fn adjoint(&self) -> SparseOperator {
        let d = self.local_dim();
        let mut m = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                m[c * d + r] = self.matrix[r * d + c].conj();
            }
        }
        SparseOperator { support: self.support.clone(), matrix: m }
    }

    pub fn scaled(&self, c: C64) -> SparseOperator {
        SparseOperator {
            support: self.support.clone(),
            matrix: self.matrix.iter().map(|a| a * c).collect(),
        }
    }

    /// Squared Hilbert–Schmidt norm of the local matrix.
    pub fn hs_norm_sqr(&self) -> f64 {
        self.matrix.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.matrix.iter().all(|a| a.norm() <= tol)
    }

    /// Re-expresses the operator on a larger ordered support.
    pub fn embed(&self, support: &[usize]) -> SparseOperator {
        let s = support.len();
        let d = 1usize << s;
        let pos: Vec<usize> = self
            .support
            .iter()
            .map(|q| support.iter().position(|p| p == q).expect("support not contained"))
            .collect();
        let t = self.support.len();
        let sub = |l: usize| -> (usize, usize) {
            // (index within own support, mask of remaining bits)
            let mut own = 0;
            for (k, &p) in pos.iter().enumerate() {
                if (l >> (s - 1 - p)) & 1 == 1 {
                    own |= 1 << (t - 1 - k);
                }
            }
            let mut rest = l;
            for &p in &pos {
                rest &= !(1 << (s - 1 - p));
            }
            (own, rest)
        };
        let mut m = vec![ZERO; d * d];
        let dl = self.local_dim();
        for r in 0..d {
            let (ro, rr) = sub(r);
            for c in 0..d {
                let (co, cr) = sub(c);
                if rr == cr {
                    m[r * d + c] = self.matrix[ro * dl + co];
                }
            }
        }
        SparseOperator { support: support.to_vec(), matrix: m }
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &SparseOperator) -> SparseOperator {
        let mut support = self.support.clone();
        for &q in &other.support {
            if !support.contains(&q) {
                support.push(q);
            }
        }
        support.sort_unstable();
        let a = self.embed(&support);
        let b = other.embed(&support);
        let d = 1usize << support.len();
        let mut m = vec![ZERO; d * d];
        for r in 0..d {
            for k in 0..d {
                let x = a.matrix[r * d + k];
                if x == ZERO {
                    continue;
                }
                for c in 0..d {
                    m[r * d + c] += x * b.matrix[k * d + c];
                }
            }
        }
        SparseOperator { support, matrix: m }
    }

    /// Drops qubits on which the operator acts as the identity.
    pub fn compact(&self) -> SparseOperator {
        let mut op = self.clone();
        loop {
            let s = op.support.len();
            let d = op.local_dim();
            let mut removed = false;
            for t in 0..s {
                let bit = 1usize << (s - 1 - t);
                let mut factor = true;
                'outer: for r in 0..d {
                    for c in 0..d {
                        let v = op.matrix[r * d + c];
                        let same = (r & bit) == (c & bit);
                        if !same {
                            if v.norm() > 1e-14 {
                                factor = false;
                                break 'outer;
                            }
                        } else if r & bit == 0 {
                            let w = op.matrix[(r | bit) * d + (c | bit)];
                            if (v - w).norm() > 1e-14 {
                                factor = false;
                                break 'outer;
                            }
                        }
                    }
                }
                if factor {
                    let nd = d / 2;
                    let squash = |l: usize| -> usize {
                        let hi = l >> (s - t);
                        let lo = l & (bit - 1);
                        (hi << (s - 1 - t)) | lo
                    };
                    let mut m = vec![ZERO; nd * nd];
                    for r in 0..d {
                        if r & bit != 0 {
                            continue;
                        }
                        for c in 0..d {
                            if c & bit != 0 {
                                continue;
                            }
                            m[squash(r) * nd + squash(c)] = op.matrix[r * d + c];
                        }
                    }
                    let mut sup = op.support.clone();
                    sup.remove(t);
                    op = SparseOperator { support: sup, matrix: m };
                    removed = true;
                    break;
                }
            }
            if !removed {
                return op;
            }
        }
    }

    /// If `self = c * other` for some scalar c, returns c.
    pub fn proportionality(&self, other: &SparseOperator, tol: f64) -> Option<C64> {
        let mut support: Vec<usize> = self.support.clone();
        for &q in &other.support {
            if !support.contains(&q) {
                support.push(q);
            }
        }
        support.sort_unstable();
        let a = self.embed(&support);
        let b = other.embed(&support);
        let (k, bmax) = b
            .matrix
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))?;
        if bmax.norm() <= tol {
            return None;
        }
        let c = a.matrix[k] / bmax;
        let ok = a
            .matrix
            .iter()
            .zip(&b.matrix)
            .all(|(x, y)| (x - c * y).norm() <= tol);
        ok.then_some(c)
    }
}

pub(crate) fn kron(a: &[C64], b: &[C64]) -> Vec<C64> {
    let da = (a.len() as f64).sqrt() as usize;
    let db = (b.len() as f64).sqrt() as usize;
    let d = da * db;
    let mut m = vec![ZERO; d * d];
    for ar in 0..da {
        for ac in 0..da {
            let x = a[ar * da + ac];
            for br in 0..db {
                for bc in 0..db {
                    m[(ar * db + br) * d + ac * db + bc] = x * b[br * db + bc];
                }
            }
        }
    }
    m
}

/// An error atom: either a Pauli string or a dense operator on a few qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Operator {
    Pauli(PauliString),
    Sparse(SparseOperator),
}

impl Operator {
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        match self {
            Operator::Pauli(p) => state.apply_pauli(p),
            Operator::Sparse(s) => state.apply_kraus(s),
        }
    }

    /// `out = O input` on raw amplitudes.
    pub(crate) fn apply_into(&self, n: usize, input: &[C64], out: &mut [C64]) {
        match self {
            Operator::Pauli(p) => p.apply_into(input, out),
            Operator::Sparse(s) => {
                out.copy_from_slice(input);
                s.apply_slice(out, n);
            }
        }
    }

    pub fn adjoint(&self) -> Operator {
        match self {
            Operator::Pauli(p) => Operator::Pauli(p.adjoint()),
            Operator::Sparse(s) => Operator::Sparse(s.adjoint()),
        }
    }

    /// True when O† = O exactly as stored.
    pub fn is_hermitian(&self) -> bool {
        match self {
            Operator::Pauli(p) => p.coefficient().im == 0.0,
            Operator::Sparse(s) => s.adjoint().matrix == s.matrix,
        }
    }

    pub fn to_sparse(&self) -> SparseOperator {
        match self {
            Operator::Pauli(p) => p.to_sparse(),
            Operator::Sparse(s) => s.clone(),
        }
    }

    pub fn mul(&self, other: &Operator) -> Operator {
        match (self, other) {
            (Operator::Pauli(a), Operator::Pauli(b)) => Operator::Pauli(a.mul(b)),
            _ => Operator::Sparse(self.to_sparse().mul(&other.to_sparse()).compact()),
        }
    }

    pub fn max_qubit(&self) -> Option<usize> {
        match self {
            Operator::Pauli(p) => Some(p.n() - 1),
            Operator::Sparse(s) => s.support().iter().copied().max(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Operator::Pauli(p) => p.to_string(),
            Operator::Sparse(s) => {
                let entries: Vec<String> = s
                    .matrix()
                    .iter()
                    .map(|c| format!("{:.6}{:+.6}i", c.re, c.im))
                    .collect();
                format!("on {:?}: [{}]", s.support(), entries.join(", "))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn close(a: &StateVector, b: &StateVector, tol: f64) -> bool {
        a.amplitudes().iter().zip(b.amplitudes()).all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn pauli_serde_rebuilds_masks() {
        let p = PauliString::parse("-XYZI").unwrap();
        let back: PauliString = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.x_mask(), p.x_mask());
    }

    #[test]
    fn permute_qubits_moves_bits() {
        let s = StateVector::basis(3, 0b100).unwrap();
        assert_eq!(s.permute_qubits(&[1, 0, 2]).unwrap(), StateVector::basis(3, 0b010).unwrap());
        assert_eq!(s.permute_qubits(&[2, 1, 0]).unwrap(), StateVector::basis(3, 0b001).unwrap());
        assert!(s.permute_qubits(&[0, 0, 1]).is_err());
    }

    #[test]
    fn x_flips_qubit_zero() {
        let s = StateVector::zero(1).unwrap();
        let x = PauliString::parse("X").unwrap().to_sparse();
        let out = s.apply_gate(&x).unwrap();
        assert_eq!(out, StateVector::basis(1, 1).unwrap());
    }

    #[test]
    fn qubit_zero_is_msb() {
        let s = StateVector::zero(3).unwrap();
        let out = s.apply_pauli(&PauliString::parse("XII").unwrap()).unwrap();
        assert_eq!(out.amplitudes()[4], ONE);
    }

    #[test]
    fn identity_gate_is_exact() {
        let amps: Vec<C64> = (0..8).map(|k| C64::new(k as f64 * 0.1, -0.3)).collect();
        let s = StateVector::from_amplitudes(3, amps).unwrap();
        let id = SparseOperator::new(vec![1], vec![ONE, ZERO, ZERO, ONE]).unwrap();
        assert_eq!(s.apply_gate(&id).unwrap(), s);
    }

    #[test]
    fn rzz_pi_on_00() {
        let mut s = StateVector::zero(2).unwrap();
        s.rzz(0, 1, std::f64::consts::PI);
        assert_abs_diff_eq!(s.amplitudes()[0].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[0].im, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn rzz_kernel_matches_matrix_exponential() {
        // exp(-i t ZZ/2) is diagonal with entries e^{∓it/2}
        let t: f64 = 0.731;
        let (s, c) = (t / 2.0).sin_cos();
        let e = C64::new(c, -s);
        let o = C64::new(c, s);
        let m = vec![e, ZERO, ZERO, ZERO, ZERO, o, ZERO, ZERO, ZERO, ZERO, o, ZERO, ZERO, ZERO, ZERO, e];
        let g = SparseOperator::new(vec![0, 2], m).unwrap();
        let amps: Vec<C64> = (0..8).map(|k| C64::new((k as f64).cos(), (k as f64 * 0.7).sin())).collect();
        let st = StateVector::from_amplitudes(3, amps).unwrap();
        let mut a = st.clone();
        a.rzz(0, 2, t);
        assert!(close(&a, &st.apply_gate(&g).unwrap(), 1e-14));
    }

    #[test]
    fn z_on_plus_like_state() {
        let h = 1.0 / 2f64.sqrt();
        let mut v = vec![ZERO; 4];
        v[0] = C64::new(h, 0.0);
        v[2] = C64::new(h, 0.0);
        let s = StateVector::from_amplitudes(2, v).unwrap();
        let out = s.apply_pauli(&PauliString::parse("ZI").unwrap()).unwrap();
        assert_abs_diff_eq!(out.amplitudes()[0].re, h);
        assert_abs_diff_eq!(out.amplitudes()[2].re, -h);
    }

    #[test]
    fn y_on_zero() {
        let s = StateVector::zero(1).unwrap();
        let out = s.apply_pauli(&PauliString::parse("Y").unwrap()).unwrap();
        assert_eq!(out.amplitudes()[1], I);
        assert_eq!(out.amplitudes()[0], ZERO);
    }

    #[test]
    fn pauli_fast_path_matches_dense() {
        let amps: Vec<C64> = (0..16).map(|k| C64::new((k as f64).sin(), (k as f64 * 1.3).cos())).collect();
        let s = StateVector::from_amplitudes(4, amps).unwrap();
        for txt in ["XYZI", "YYII", "IZYX", "-iZXXY"] {
            let p = PauliString::parse(txt).unwrap();
            let a = s.apply_pauli(&p).unwrap();
            let b = s.apply_gate(&p.to_sparse()).unwrap();
            assert!(close(&a, &b, 1e-14), "{txt}");
            let sw = p.sandwich(s.amplitudes(), s.amplitudes());
            assert!((sw - s.overlap(&a).unwrap()).norm() < 1e-13);
        }
    }

    #[test]
    fn overlaps() {
        let h = 1.0 / 2f64.sqrt();
        let plus = StateVector::from_amplitudes(1, vec![C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap();
        let zero = StateVector::zero(1).unwrap();
        let one = StateVector::basis(1, 1).unwrap();
        assert_abs_diff_eq!(plus.overlap(&zero).unwrap().re, h);
        assert_eq!(zero.overlap(&one).unwrap(), ZERO);
        assert_abs_diff_eq!(plus.overlap(&plus).unwrap().re, 1.0, epsilon = 1e-12);
        assert!(zero.overlap(&StateVector::zero(2).unwrap()).is_err());
    }

    #[test]
    fn kraus_collective_decay() {
        // |00><11| on two qubits
        let mut m = vec![ZERO; 16];
        m[3] = ONE;
        let k = SparseOperator::new(vec![0, 1], m).unwrap();
        let out = StateVector::basis(2, 3).unwrap().apply_kraus(&k).unwrap();
        assert_eq!(out, StateVector::basis(2, 0).unwrap());
        let out = StateVector::basis(2, 0).unwrap().apply_kraus(&k).unwrap();
        assert_eq!(out.norm(), 0.0);
    }

    #[test]
    fn full_damping_sends_one_to_zero() {
        let a1 = SparseOperator::single(0, [ZERO, ONE, ZERO, ZERO]);
        let out = StateVector::basis(1, 1).unwrap().apply_kraus(&a1).unwrap();
        assert_eq!(out, StateVector::zero(1).unwrap());
    }

    #[test]
    fn support_errors() {
        let x = SparseOperator::single(3, Pauli::X.matrix());
        assert!(StateVector::zero(2).unwrap().apply_gate(&x).is_err());
        assert!(SparseOperator::new(vec![0, 1], vec![ONE; 4]).is_err());
        assert!(StateVector::zero(MAX_QUBITS + 1).is_err());
        assert!(StateVector::zero(2).unwrap().apply_pauli(&PauliString::identity(3)).is_err());
    }

    #[test]
    fn pauli_products() {
        let x = PauliString::parse("X").unwrap();
        let y = PauliString::parse("Y").unwrap();
        let xy = x.mul(&y);
        assert_eq!(xy.letters(), &[Pauli::Z]);
        assert_eq!(xy.coefficient(), I);
        let a = PauliString::parse("XZ").unwrap();
        let b = PauliString::parse("ZX").unwrap();
        assert!(a.commutes_with(&b));
        assert!(!a.commutes_with(&PauliString::parse("ZI").unwrap()));
    }

    #[test]
    fn sparse_product_matches_sequential_application() {
        let a = PauliString::parse("XIY").unwrap().to_sparse();
        let b = SparseOperator::new(
            vec![1, 2],
            (0..16).map(|k| C64::new(k as f64, 1.0 - k as f64)).collect(),
        )
        .unwrap();
        let ab = a.mul(&b);
        let s = StateVector::from_amplitudes(3, (0..8).map(|k| C64::new(1.0, k as f64)).collect()).unwrap();
        let seq = s.apply_gate(&b).unwrap().apply_gate(&a).unwrap();
        assert!(close(&seq, &s.apply_gate(&ab).unwrap(), 1e-12));
    }

    #[test]
    fn compact_removes_identity_factor() {
        let z = PauliString::parse("ZIII").unwrap().to_sparse();
        let wide = z.embed(&[0, 2, 3]);
        let c = wide.compact();
        assert_eq!(c.support(), &[0]);
        assert_eq!(c.matrix(), z.matrix());
        let p = wide.scaled(C64::new(0.0, 2.0)).proportionality(&z, 1e-12).unwrap();
        assert!((p - C64::new(0.0, 2.0)).norm() < 1e-14);
    }
}
