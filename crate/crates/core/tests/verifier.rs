use qecsearch::catalog::{self, Enumerators};
use qecsearch::error_model::pauli_below_weight;
use qecsearch::state::{Operator, PauliString, StateVector, C64};
use qecsearch::verify::{
    code_distance, correction_report, degeneracy, effective_distance, extend_non_cws, purity, stabilizer_enumerators,
    weight_enumerators, CodeCandidate,
};

fn assert_close(got: &[f64], want: &[f64], what: &str) {
    assert_eq!(got.len(), want.len(), "{what}: length");
    for (j, (g, w)) in got.iter().zip(want).enumerate() {
        assert!((g - w).abs() < 1e-6, "{what}: coefficient {j}: {g} vs {w}");
    }
}

fn check_table(table: &[&str], code: &CodeCandidate, reference: Option<Enumerators>) {
    let gens = catalog::generators(table).unwrap();
    let (a_count, b_count) = stabilizer_enumerators(&gens).unwrap();
    let (a, b) = weight_enumerators(code, false).unwrap();
    assert_close(&a, &a_count, "A vs counting");
    assert_close(&b, &b_count, "B vs counting");
    if let Some(r) = reference {
        assert_close(&a, &r.a, r.name);
        assert_close(&b, &r.b, r.name);
    }
    sanity(&a, &b, code);
}

fn sanity(a: &[f64], b: &[f64], code: &CodeCandidate) {
    assert!((a[0] - 1.0).abs() < 1e-9 && (b[0] - 1.0).abs() < 1e-9);
    for (x, y) in a.iter().zip(b) {
        assert!(*x >= -1e-9 && *y >= x - 1e-9);
    }
    let from_enum = (1..a.len()).find(|&j| (b[j] - a[j]).abs() > 1e-7).unwrap_or(code.n + 1);
    assert_eq!(code_distance(code), from_enum);
}

#[test]
fn table_883() {
    let code = catalog::code_883();
    check_table(&catalog::TABLE_883, &code, Some(catalog::enumerators_883()));
    assert_eq!(code_distance(&code), 3);
}

#[test]
fn table_623_biased() {
    let code = catalog::code_623_biased();
    check_table(&catalog::TABLE_623_BIASED, &code, Some(catalog::enumerators_623_biased()));
    assert_eq!(code_distance(&code), 3);
    assert_eq!(effective_distance(&code, 2.0).unwrap().floor(), 4.0);
}

#[test]
fn table_623_biased_is_degenerate() {
    let code = catalog::code_623_biased();
    let singles: Vec<Operator> = pauli_below_weight(6, 2).unwrap().terms.into_iter().map(|t| t.op).collect();
    let rep = correction_report(&code, &singles, 1e-9).unwrap();
    assert!(rep.passes);
    assert!(degeneracy(&rep, 1e-8).unwrap());
    // degenerate codes are never pure
    assert!(!purity(&code, &singles, 1e-7).unwrap());
}

#[test]
fn table_723_zz() {
    let code = catalog::zz_adapted_723();
    check_table(&catalog::TABLE_723_ZZ, &code, Some(catalog::enumerators_723_zz()));
    assert_eq!(code_distance(&code), 3);
    // every Z_i Z_j is detected
    let k = code.k;
    for i in 0..7 {
        for j in i + 1..7 {
            let mut s = vec!['I'; 7];
            s[i] = 'Z';
            s[j] = 'Z';
            let p = PauliString::parse(&s.iter().collect::<String>()).unwrap();
            let imgs: Vec<StateVector> = code.basis.iter().map(|b| b.apply_pauli(&p).unwrap()).collect();
            let m: Vec<C64> = (0..k).flat_map(|r| (0..k).map(move |c| (r, c))).map(|(r, c)| code.basis[r].overlap(&imgs[c]).unwrap()).collect();
            assert!(m[1].norm() < 1e-9 && (m[0] - m[3]).norm() < 1e-9);
        }
    }
}

#[test]
fn table_623_additive() {
    let code = catalog::code_623_additive();
    check_table(&catalog::TABLE_623_ADDITIVE, &code, None);
    assert_eq!(code_distance(&code), 3);
}

#[test]
fn steane() {
    let code = catalog::steane_code();
    check_table(&catalog::TABLE_STEANE, &code, Some(catalog::enumerators_steane()));
    assert_eq!(code_distance(&code), 3);
}

#[test]
fn perfect_code_enumerators() {
    let code = catalog::perfect_code();
    let (a, b) = weight_enumerators(&code, false).unwrap();
    let r = catalog::enumerators_523();
    assert_close(&a, &r.a, r.name);
    assert_close(&b, &r.b, r.name);
    sanity(&a, &b, &code);
}

#[test]
fn non_cws_extension_matches_printed() {
    let code = extend_non_cws(&catalog::perfect_code(), 4, catalog::non_cws_rotation()).unwrap();
    let (a, b) = weight_enumerators(&code, false).unwrap();
    let r = catalog::enumerators_623_non_cws();
    assert_close(&a, &r.a, r.name);
    assert_close(&b, &r.b, r.name);
    sanity(&a, &b, &code);
    assert_eq!(code_distance(&code), 3);
    // same code space as the printed basis
    let printed = catalog::non_cws_623_printed();
    let captured: f64 = printed
        .basis
        .iter()
        .flat_map(|p| code.basis.iter().map(move |c| p.overlap(c).unwrap().norm_sqr()))
        .sum();
    assert!((captured - 2.0).abs() < 1e-12);
}

#[test]
fn extension_with_identity_keeps_distance() {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let code = extend_non_cws(&catalog::perfect_code(), 4, [one, zero, zero, one]).unwrap();
    // the fresh qubit stays |0>: its Z acts as the identity on the code and
    // its X leaves the code space, so detection is unchanged
    let (a, b) = weight_enumerators(&code, false).unwrap();
    sanity(&a, &b, &code);
    assert_eq!(code_distance(&code), 3);
    // enumerators of a product with |0> pick up a factor (1 + z)
    assert_close(&a, &[1.0, 1.0, 0.0, 0.0, 15.0, 15.0, 0.0], "A");
    assert_close(&b, &[1.0, 1.0, 0.0, 30.0, 45.0, 33.0, 18.0], "B");
}

#[test]
fn printed_omega_basis_is_not_orthonormal() {
    let [a, b] = catalog::omega_723_states();
    let o = a.overlap(&b).unwrap().norm();
    assert!(o > 0.05, "overlap {o}");
    match catalog::omega_723() {
        Err(qecsearch::Error::Invariant(_)) => {}
        other => panic!("expected an invariant error, got {other:?}"),
    }
}
