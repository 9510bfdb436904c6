//! Reference codes, generator tables and enumerator polynomials used as
//! golden data.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::Result;
use crate::graph::ConnectivityGraph;
use crate::state::{PauliString, StateVector, C64, ZERO};
use crate::verify::{stabilizer_basis, CodeCandidate};

/// ((8,8,3)) additive code.
pub const TABLE_883: [&str; 5] = ["XXXXXXXX", "ZZZZZZZZ", "IXYZZYXI", "ZYZYXIXI", "XYYXIZZI"];

/// ((6,2,3)) additive code with d_e(2) = 4.
pub const TABLE_623_BIASED: [&str; 5] = ["XIXYZX", "ZIIIIZ", "IXXXXI", "IZIYXZ", "IIZXYZ"];

/// ((7,2,3)) code correcting single-qubit errors and every Z_iZ_j.
pub const TABLE_723_ZZ: [&str; 6] = ["XIZXXIX", "ZIIXXXZ", "IXZXZZZ", "IZZIZYZ", "IIYXZIX", "IIIZYYX"];

/// ((6,2,3)) additive code related to the non-CWS family.
pub const TABLE_623_ADDITIVE: [&str; 5] = ["YIZXXY", "ZXIXIZ", "IZXXXX", "IIIIZZ", "ZZZZII"];

pub const TABLE_STEANE: [&str; 6] = ["IIIXXXX", "IXXIIXX", "XIXIXIX", "IIIZZZZ", "IZZIIZZ", "ZIZIZIZ"];

/// Enumerator coefficients (A_j, B_j), j = 0..=n.
#[derive(Clone, Debug)]
pub struct Enumerators {
    pub name: &'static str,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

pub fn enumerators_523() -> Enumerators {
    Enumerators { name: "((5,2,3))", a: vec![1.0, 0.0, 0.0, 0.0, 15.0, 0.0], b: vec![1.0, 0.0, 0.0, 30.0, 15.0, 18.0] }
}

pub fn enumerators_883() -> Enumerators {
    Enumerators {
        name: "((8,8,3))",
        a: vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 28.0, 0.0, 3.0],
        b: vec![1.0, 0.0, 0.0, 56.0, 210.0, 336.0, 728.0, 504.0, 213.0],
    }
}

pub fn enumerators_623_biased() -> Enumerators {
    Enumerators {
        name: "((6,2,d_e(2)=4))",
        a: vec![1.0, 0.0, 1.0, 0.0, 11.0, 16.0, 3.0],
        b: vec![1.0, 0.0, 1.0, 24.0, 35.0, 40.0, 27.0],
    }
}

pub fn enumerators_723_zz() -> Enumerators {
    Enumerators {
        name: "((7,2,3)) ZZ",
        a: vec![1.0, 0.0, 0.0, 2.0, 9.0, 24.0, 22.0, 6.0],
        b: vec![1.0, 0.0, 0.0, 17.0, 45.0, 78.0, 82.0, 33.0],
    }
}

pub fn enumerators_steane() -> Enumerators {
    Enumerators {
        name: "Steane",
        a: vec![1.0, 0.0, 0.0, 0.0, 21.0, 0.0, 42.0, 0.0],
        b: vec![1.0, 0.0, 0.0, 21.0, 21.0, 126.0, 42.0, 45.0],
    }
}

pub fn enumerators_623_non_cws() -> Enumerators {
    let f = |x: f64| x / 25.0;
    Enumerators {
        name: "((6,2,3)) non-CWS",
        a: vec![1.0, f(9.0), f(16.0), 0.0, f(311.0), f(391.0), f(48.0)],
        b: vec![1.0, f(9.0), f(16.0), f(654.0), 193.0 / 5.0, f(937.0), f(594.0)],
    }
}

pub fn enumerators_723_omega() -> Enumerators {
    let f = |x: f64| x / 125.0;
    Enumerators {
        name: "((7,2,3)) impure",
        a: vec![1.0, f(106.0), 1.0, f(144.0), f(1299.0), f(3318.0), f(2451.0), f(432.0)],
        b: vec![1.0, f(106.0), 1.0, 606.0 / 25.0, f(7071.0), f(9318.0), f(8679.0), f(3546.0)],
    }
}

pub fn generators(table: &[&str]) -> Result<Vec<PauliString>> {
    table.iter().map(|s| PauliString::parse(s)).collect()
}

fn from_table(table: &[&str]) -> CodeCandidate {
    stabilizer_basis(&generators(table).expect("static table parses")).expect("static table is a valid stabilizer")
}

pub fn code_883() -> CodeCandidate {
    from_table(&TABLE_883)
}

pub fn code_623_biased() -> CodeCandidate {
    from_table(&TABLE_623_BIASED)
}

pub fn zz_adapted_723() -> CodeCandidate {
    from_table(&TABLE_723_ZZ)
}

pub fn code_623_additive() -> CodeCandidate {
    from_table(&TABLE_623_ADDITIVE)
}

pub fn steane_code() -> CodeCandidate {
    from_table(&TABLE_STEANE)
}

fn sparse_state(n: usize, terms: &[(usize, C64)]) -> StateVector {
    let mut v = vec![ZERO; 1 << n];
    for &(i, c) in terms {
        v[i] = c;
    }
    let mut s = StateVector::from_amplitudes(n, v).expect("static state");
    s.normalize().expect("non-zero state");
    s
}

/// The ((5,2,3)) perfect code.
pub fn perfect_code() -> CodeCandidate {
    let (p, m, mi) = (C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0));
    let psi1 = [
        (0b00000, p),
        (0b00110, mi),
        (0b01001, mi),
        (0b01111, p),
        (0b10011, m),
        (0b10101, mi),
        (0b11010, mi),
        (0b11100, m),
    ];
    let psi2 = [
        (0b00011, p),
        (0b00101, mi),
        (0b01010, mi),
        (0b01100, p),
        (0b10000, p),
        (0b10110, -mi),
        (0b11001, -mi),
        (0b11111, p),
    ];
    CodeCandidate::new(vec![sparse_state(5, &psi1), sparse_state(5, &psi2)]).expect("perfect code is orthonormal")
}

/// Controlled rotation used to leave the stabilizer family: (1/5)[[3,4],[-4,3]].
pub fn non_cws_rotation() -> [C64; 4] {
    [C64::new(0.6, 0.0), C64::new(0.8, 0.0), C64::new(-0.8, 0.0), C64::new(0.6, 0.0)]
}

/// Printed ((6,2,3)) non-CWS basis (the perfect code extended on qubit 4).
pub fn non_cws_623_printed() -> CodeCandidate {
    let r = |x: f64| C64::new(x, 0.0);
    let i = |x: f64| C64::new(0.0, x);
    let psi1 = [
        (0b000000, r(5.0)),
        (0b001100, i(-5.0)),
        (0b010010, i(-3.0)),
        (0b010011, i(4.0)),
        (0b011110, r(3.0)),
        (0b011111, r(-4.0)),
        (0b100110, r(-3.0)),
        (0b100111, r(4.0)),
        (0b101010, i(-3.0)),
        (0b101011, i(4.0)),
        (0b110100, i(-5.0)),
        (0b111000, r(-5.0)),
    ];
    let psi2 = [
        (0b000110, r(3.0)),
        (0b000111, r(-4.0)),
        (0b001010, i(-3.0)),
        (0b001011, i(4.0)),
        (0b010100, i(-5.0)),
        (0b011000, r(5.0)),
        (0b100000, r(5.0)),
        (0b101100, i(5.0)),
        (0b110010, i(3.0)),
        (0b110011, i(-4.0)),
        (0b111110, r(3.0)),
        (0b111111, r(-4.0)),
    ];
    CodeCandidate::new(vec![sparse_state(6, &psi1), sparse_state(6, &psi2)]).expect("printed basis is orthonormal")
}

// (integer coefficient, power of ω = e^{iπ/4}, basis index)
const OMEGA_PSI1: [(i8, u8, usize); 32] = [
    (-4, 3, 0b0000011),
    (3, 2, 0b0000100),
    (-3, 1, 0b0001110),
    (-4, 1, 0b0001111),
    (3, 3, 0b0010110),
    (4, 3, 0b0010111),
    (-4, 1, 0b0011011),
    (3, 0, 0b0011100),
    (3, 3, 0b0100110),
    (4, 3, 0b0100111),
    (-4, 1, 0b0101011),
    (3, 1, 0b0101100),
    (-4, 3, 0b0110011),
    (3, 2, 0b0110100),
    (-3, 1, 0b0111110),
    (-4, 1, 0b0111111),
    (-4, 3, 0b1000011),
    (3, 2, 0b1000100),
    (3, 1, 0b1001110),
    (4, 1, 0b1001111),
    (3, 3, 0b1010110),
    (-4, 3, 0b1010111),
    (-4, 1, 0b1011011),
    (-3, 0, 0b1011100),
    (-3, 3, 0b1100110),
    (-4, 3, 0b1100111),
    (-4, 1, 0b1101011),
    (3, 0, 0b1101100),
    (4, 3, 0b1110011),
    (-3, 2, 0b1110100),
    (-3, 1, 0b1111110),
    (-4, 1, 0b1111111),
];

const OMEGA_PSI2: [(i8, u8, usize); 32] = [
    (4, 1, 0b0000011),
    (-3, 0, 0b0000100),
    (3, 3, 0b0001110),
    (4, 3, 0b0001111),
    (3, 1, 0b0010110),
    (4, 1, 0b0010111),
    (-4, 3, 0b0011011),
    (3, 2, 0b0011100),
    (-3, 1, 0b0100110),
    (-4, 1, 0b0100111),
    (4, 3, 0b0101011),
    (-3, 2, 0b0101100),
    (-4, 1, 0b0110011),
    (3, 0, 0b0110100),
    (-3, 3, 0b0111110),
    (-4, 3, 0b0111111),
    (-4, 1, 0b1000011),
    (3, 0, 0b1000100),
    (3, 3, 0b1001110),
    (4, 3, 0b1001111),
    (-3, 1, 0b1010110),
    (-4, 1, 0b1010111),
    (-4, 3, 0b1011011),
    (3, 2, 0b1011100),
    (-3, 1, 0b1100110),
    (-4, 1, 0b1100111),
    (-4, 3, 0b1101011),
    (3, 2, 0b1101100),
    (-4, 1, 0b1110011),
    (3, 0, 0b1110100),
    (3, 3, 0b1111110),
    (-4, 3, 0b1111111),
];

fn omega_terms(t: &[(i8, u8, usize)]) -> Vec<(usize, C64)> {
    let omega = |p: u8| match p % 8 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        2 => C64::new(0.0, 1.0),
        3 => C64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        p => C64::from_polar(1.0, p as f64 * std::f64::consts::FRAC_PI_4),
    };
    t.iter().map(|&(c, p, i)| (i, omega(p) * (c as f64 / 20.0))).collect()
}

/// The two printed states of the non-degenerate, impure ((7,2,3)) example,
/// as transcribed.
pub fn omega_723_states() -> [StateVector; 2] {
    [sparse_state(7, &omega_terms(&OMEGA_PSI1)), sparse_state(7, &omega_terms(&OMEGA_PSI2))]
}

/// The printed ((7,2,3)) example as a code. The transcribed states are not
/// orthogonal (|⟨ψ1|ψ2⟩| ≈ 0.088), so this returns the invariant error.
pub fn omega_723() -> Result<CodeCandidate> {
    CodeCandidate::new(omega_723_states().to_vec())
}

/// Seven-qubit graph with edges {0,1} × {2,…,6} used for the QFIM study.
pub fn qfim_graph() -> ConnectivityGraph {
    ConnectivityGraph::bipartite(2, 7).expect("static graph")
}
