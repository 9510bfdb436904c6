//! Error sets: symmetric and c_Z-effective Pauli sets, channel Kraus lists
//! and their order-truncated products.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ConnectivityGraph;
use crate::state::{Operator, Pauli, PauliString, SparseOperator, C64, ONE, ZERO};

/// Non-negative rational exponent of the small parameter τ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Order {
    pub num: u32,
    pub den: u32,
}

impl Order {
    pub const ZERO: Order = Order { num: 0, den: 1 };
    pub const HALF: Order = Order { num: 1, den: 2 };
    pub const ONE: Order = Order { num: 1, den: 1 };
    pub const THREE_HALVES: Order = Order { num: 3, den: 2 };

    pub fn new(num: u32, den: u32) -> Self {
        assert!(den > 0, "zero denominator");
        let g = gcd(num, den);
        Order { num: num / g, den: den / g }
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

impl std::ops::Add for Order {
    type Output = Order;
    fn add(self, o: Order) -> Order {
        Order::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }
}

impl PartialOrd for Order {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Order {
    fn cmp(&self, o: &Self) -> Ordering {
        (self.num as u64 * o.den as u64).cmp(&(o.num as u64 * self.den as u64))
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorTerm {
    pub op: Operator,
    pub tau_order: Order,
    pub label: String,
}

impl ErrorTerm {
    pub fn pauli(p: PauliString) -> Self {
        let label = p.to_string();
        Self { op: Operator::Pauli(p), tau_order: Order::ZERO, label }
    }

    pub fn is_identity(&self) -> bool {
        match &self.op {
            Operator::Pauli(p) => p.is_identity(),
            Operator::Sparse(s) => s.support().is_empty(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorMode {
    Symmetric,
    Effective,
    KrausProduct,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSet {
    pub n: usize,
    pub mode: ErrorMode,
    pub terms: Vec<ErrorTerm>,
}

impl ErrorSet {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when every term is a Pauli string.
    pub fn all_pauli(&self) -> bool {
        self.terms.iter().all(|t| matches!(t.op, Operator::Pauli(_)))
    }

    pub fn subset(&self, indices: &[usize]) -> ErrorSet {
        ErrorSet {
            n: self.n,
            mode: self.mode,
            terms: indices.iter().map(|&i| self.terms[i].clone()).collect(),
        }
    }

    /// One line per term, in set order.
    pub fn describe(&self) -> Vec<String> {
        self.terms
            .iter()
            .map(|t| format!("{}\torder={}\t{}", t.label, t.tau_order, t.op.describe()))
            .collect()
    }
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u64 = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Closed form Σ_{j<d} C(n,j) 3^j.
pub fn pauli_count_below_weight(n: usize, d: usize) -> u64 {
    (0..d.min(n + 1)).map(|j| binomial(n as u64, j as u64) * 3u64.pow(j as u32)).sum()
}

/// Calls `f` on every weight-`w` string in canonical order: support tuples
/// lexicographic, then letters with X < Y < Z.
fn for_each_weight(n: usize, w: usize, f: &mut dyn FnMut(PauliString)) {
    const LETTERS: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];
    if w > n {
        return;
    }
    let mut idx: Vec<usize> = (0..w).collect();
    loop {
        for code in 0..3usize.pow(w as u32) {
            let sites: Vec<(usize, Pauli)> = idx
                .iter()
                .enumerate()
                .map(|(t, &q)| (q, LETTERS[(code / 3usize.pow((w - 1 - t) as u32)) % 3]))
                .collect();
            f(PauliString::from_sites(n, &sites));
        }
        // advance to the next combination
        let Some(i) = (0..w).rev().find(|&i| idx[i] < n - w + i) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..w {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// All Pauli strings of weight exactly `w`, canonical order.
pub fn paulis_of_weight(n: usize, w: usize) -> Vec<PauliString> {
    let mut v = Vec::new();
    if w <= n {
        for_each_weight(n, w, &mut |p| v.push(p));
    }
    v
}

pub fn pauli_below_weight(n: usize, d: usize) -> Result<ErrorSet> {
    if d < 1 {
        return Err(Error::Invalid("distance must be at least 1".into()));
    }
    crate::state::check_qubits(n)?;
    let mut terms = Vec::new();
    for w in 0..d.min(n + 1) {
        for_each_weight(n, w, &mut |p| terms.push(ErrorTerm::pauli(p)));
    }
    Ok(ErrorSet { n, mode: ErrorMode::Symmetric, terms })
}

pub fn effective_weight(p: &PauliString, c_z: f64) -> Result<f64> {
    if !(c_z > 0.0) {
        return Err(Error::Invalid(format!("c_Z must be positive, got {c_z}")));
    }
    let (x, y, z) = p.typed_weights();
    Ok((x + y) as f64 + c_z * z as f64)
}

/// Slack used when comparing effective weights against a threshold.
pub const WEIGHT_EPS: f64 = 1e-9;

pub fn pauli_below_effective(n: usize, c_z: f64, d_e: f64) -> Result<ErrorSet> {
    if !(c_z > 0.0) || !(d_e > 0.0) {
        return Err(Error::Invalid("c_Z and d_e must be positive".into()));
    }
    crate::state::check_qubits(n)?;
    let mut terms = Vec::new();
    for w in 0..=n {
        if (w as f64) * c_z.min(1.0) >= d_e - WEIGHT_EPS {
            break;
        }
        for_each_weight(n, w, &mut |p| {
            let (x, y, z) = p.typed_weights();
            if ((x + y) as f64 + c_z * z as f64) < d_e - WEIGHT_EPS {
                terms.push(ErrorTerm::pauli(p));
            }
        });
    }
    Ok(ErrorSet { n, mode: ErrorMode::Effective, terms })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChannelSpec {
    AmplitudeDamping { n: usize, gamma: f64 },
    GeneralizedAmplitudeDamping { n: usize, gamma: f64, p: f64 },
    /// Exact collective decay on every edge of a ring.
    CollectiveAd { n: usize, gamma01: f64, gamma02: f64, gamma12: f64 },
    CollectiveAdTruncated { n: usize },
    DepolarizingZz { graph: ConnectivityGraph, p: f64, p_zz: f64 },
    SingleAdOrderSet { n: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrausOperator {
    pub op: Operator,
    pub tau_order: Order,
    /// Qubits (or edge) the channel instance lives on.
    pub site: Vec<usize>,
    pub label: String,
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Invalid(format!("{name} = {v} outside [0,1]")));
    }
    Ok(())
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn sparse(support: Vec<usize>, m: Vec<C64>) -> Operator {
    Operator::Sparse(SparseOperator::new(support, m).expect("well-formed channel matrix"))
}

/// Two-qubit matrix from a list of (row, col, value) entries.
fn mat4(entries: &[(usize, usize, f64)]) -> Vec<C64> {
    let mut m = vec![ZERO; 16];
    for &(r, col, v) in entries {
        m[r * 4 + col] += c(v);
    }
    m
}

fn ring_edges(n: usize) -> Result<Vec<(usize, usize)>> {
    Ok(ConnectivityGraph::ring(n)?.edges().to_vec())
}

/// Kraus operators exactly as printed for each channel family. Zero
/// operators are dropped.
pub fn build_channel(spec: &ChannelSpec) -> Result<Vec<KrausOperator>> {
    let mut out = Vec::new();
    let mut push = |op: Operator, order: Order, site: Vec<usize>, label: String| {
        let zero = match &op {
            Operator::Sparse(s) => s.is_zero(0.0),
            Operator::Pauli(p) => p.coefficient() == ZERO,
        };
        if !zero {
            out.push(KrausOperator { op, tau_order: order, site, label });
        }
    };
    match spec {
        ChannelSpec::AmplitudeDamping { n, gamma } => {
            check_rate("gamma", *gamma)?;
            for q in 0..*n {
                let g = *gamma;
                push(sparse(vec![q], vec![ONE, ZERO, ZERO, c((1.0 - g).sqrt())]), Order::ZERO, vec![q], format!("A0_{q}"));
                push(sparse(vec![q], vec![ZERO, c(g.sqrt()), ZERO, ZERO]), Order::HALF, vec![q], format!("A1_{q}"));
            }
        }
        ChannelSpec::GeneralizedAmplitudeDamping { n, gamma, p } => {
            check_rate("gamma", *gamma)?;
            check_rate("p", *p)?;
            let (g, p) = (*gamma, *p);
            let (sp, sq) = (p.sqrt(), (1.0 - p).sqrt());
            for q in 0..*n {
                push(sparse(vec![q], vec![c(sp), ZERO, ZERO, c(sp * (1.0 - g).sqrt())]), Order::ZERO, vec![q], format!("A0_{q}"));
                push(sparse(vec![q], vec![ZERO, c(sp * g.sqrt()), ZERO, ZERO]), Order::HALF, vec![q], format!("A1_{q}"));
                push(sparse(vec![q], vec![c(sq * (1.0 - g).sqrt()), ZERO, ZERO, c(sq)]), Order::ZERO, vec![q], format!("A2_{q}"));
                push(sparse(vec![q], vec![ZERO, ZERO, c(sq * g.sqrt()), ZERO]), Order::HALF, vec![q], format!("A3_{q}"));
            }
        }
        ChannelSpec::CollectiveAd { n, gamma01, gamma02, gamma12 } => {
            for (name, v) in [("gamma01", gamma01), ("gamma02", gamma02), ("gamma12", gamma12)] {
                check_rate(name, *v)?;
            }
            if gamma02 + gamma12 > 1.0 {
                return Err(Error::Invalid("gamma02 + gamma12 exceeds 1".into()));
            }
            let (g01, g02, g12) = (*gamma01, *gamma02, *gamma12);
            for (a, b) in ring_edges(*n)? {
                let h01 = (g01 / 2.0).sqrt();
                let h12 = (g12 / 2.0).sqrt();
                let k0 = mat4(&[(0, 1, h01), (0, 2, h01), (1, 3, h12), (2, 3, h12)]);
                let k1 = mat4(&[(0, 3, g02.sqrt())]);
                let t = (1.0 - g01).sqrt() / 2.0;
                let k2 = mat4(&[
                    (0, 0, 1.0),
                    (1, 1, t + 0.5),
                    (1, 2, t - 0.5),
                    (2, 1, t - 0.5),
                    (2, 2, t + 0.5),
                    (3, 3, (1.0 - g02 - g12).sqrt()),
                ]);
                push(sparse(vec![a, b], k0), Order::HALF, vec![a, b], format!("K0_{a}{b}"));
                push(sparse(vec![a, b], k1), Order::ONE, vec![a, b], format!("K1_{a}{b}"));
                push(sparse(vec![a, b], k2), Order::ZERO, vec![a, b], format!("K2_{a}{b}"));
            }
        }
        ChannelSpec::CollectiveAdTruncated { n } => {
            let h = 1.0 / 2f64.sqrt();
            for (a, b) in ring_edges(*n)? {
                let k0 = mat4(&[(0, 1, h), (0, 2, h), (1, 3, h), (2, 3, h)]);
                let k1 = mat4(&[(0, 3, 1.0)]);
                let k2 = mat4(&[(1, 1, 0.5), (1, 2, 0.5), (2, 1, 0.5), (2, 2, 0.5), (3, 3, 1.0)]);
                push(sparse(vec![a, b], k0), Order::HALF, vec![a, b], format!("K'0_{a}{b}"));
                push(sparse(vec![a, b], k1), Order::ONE, vec![a, b], format!("K'1_{a}{b}"));
                push(sparse(vec![a, b], k2), Order::ONE, vec![a, b], format!("K'2_{a}{b}"));
            }
        }
        ChannelSpec::DepolarizingZz { graph, p, p_zz } => {
            check_rate("p", *p)?;
            check_rate("p_zz", *p_zz)?;
            let n = graph.n();
            let rest = 1.0 - 3.0 * p / 4.0 * n as f64 - p_zz * graph.edge_count() as f64;
            if rest < 0.0 {
                return Err(Error::Invalid("total error probability exceeds 1".into()));
            }
            push(Operator::Pauli(PauliString::identity(n).with_coefficient(c(rest.sqrt()))), Order::ZERO, vec![], "I".into());
            let s = (p / 4.0).sqrt();
            for q in 0..n {
                for l in [Pauli::X, Pauli::Y, Pauli::Z] {
                    let ps = PauliString::single(n, q, l).with_coefficient(c(s));
                    push(Operator::Pauli(ps), Order::HALF, vec![q], format!("{}_{q}", l.as_char()));
                }
            }
            for &(a, b) in graph.edges() {
                let ps = PauliString::from_sites(n, &[(a, Pauli::Z), (b, Pauli::Z)]).with_coefficient(c(p_zz.sqrt()));
                push(Operator::Pauli(ps), Order::HALF, vec![a, b], format!("Z{a}Z{b}"));
            }
        }
        ChannelSpec::SingleAdOrderSet { n } => {
            let n = *n;
            push(Operator::Pauli(PauliString::identity(n)), Order::ZERO, vec![], "I".into());
            for q in 0..n {
                push(sparse(vec![q], vec![ZERO, c(2.0), ZERO, ZERO]), Order::HALF, vec![q], format!("X{q}+iY{q}"));
                push(sparse(vec![q], vec![ZERO, ZERO, c(2.0), ZERO]), Order::HALF, vec![q], format!("X{q}-iY{q}"));
            }
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        // (X_i - iY_i)(X_j + iY_j) = 4 |1><0|_i |0><1|_j
                        let (lo, hi) = (i.min(j), i.max(j));
                        let m = if i < j { mat4(&[(2, 1, 4.0)]) } else { mat4(&[(1, 2, 4.0)]) };
                        push(sparse(vec![lo, hi], m), Order::ONE, vec![i, j], format!("(X{i}-iY{i})(X{j}+iY{j})"));
                    }
                }
            }
            for q in 0..n {
                push(sparse(vec![q], vec![ZERO, ZERO, ZERO, c(2.0)]), Order::ONE, vec![q], format!("I{q}-Z{q}"));
            }
        }
    }
    Ok(out)
}

/// τ-expansion factors of single-qubit amplitude damping: |0⟩⟨1| at order
/// 1/2 and the first-order part |1⟩⟨1| of A0.
pub fn amplitude_damping_expansion(n: usize) -> Vec<KrausOperator> {
    (0..n)
        .flat_map(|q| {
            [
                KrausOperator {
                    op: sparse(vec![q], vec![ZERO, ONE, ZERO, ZERO]),
                    tau_order: Order::HALF,
                    site: vec![q],
                    label: format!("a_{q}"),
                },
                KrausOperator {
                    op: sparse(vec![q], vec![ZERO, ZERO, ZERO, ONE]),
                    tau_order: Order::ONE,
                    site: vec![q],
                    label: format!("n_{q}"),
                },
            ]
        })
        .collect()
}

/// Squared Hilbert–Schmidt norm divided by the full dimension 2^n.
fn normalized_hs(op: &Operator) -> f64 {
    match op {
        Operator::Pauli(p) => p.coefficient().norm_sqr(),
        Operator::Sparse(s) => s.hs_norm_sqr() / s.local_dim() as f64,
    }
}

fn is_identity_like(op: &Operator) -> bool {
    match op {
        Operator::Pauli(p) => p.is_identity(),
        Operator::Sparse(s) => s.compact().support().is_empty(),
    }
}

/// Rescales so that Tr(E†E)/2^n = 1; Pauli strings get coefficient 1.
fn normalize_op(op: Operator) -> Operator {
    match op {
        Operator::Pauli(p) => Operator::Pauli(p.with_coefficient(ONE)),
        Operator::Sparse(s) => {
            let s = s.compact();
            if s.support().is_empty() {
                return Operator::Sparse(SparseOperator::scalar_identity(ONE));
            }
            let nrm = (s.hs_norm_sqr() / s.local_dim() as f64).sqrt();
            // fix the phase of the largest entry to be real positive
            let big = s
                .matrix()
                .iter()
                .copied()
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .unwrap_or(ONE);
            let phase = if big.norm() > 0.0 { big.conj() / big.norm() } else { ONE };
            Operator::Sparse(s.scaled(phase / nrm))
        }
    }
}

/// Identity on n qubits in the representation matching the list.
fn identity_for(n: usize, pauli: bool) -> Operator {
    if pauli {
        Operator::Pauli(PauliString::identity(n))
    } else {
        Operator::Sparse(SparseOperator::scalar_identity(ONE))
    }
}

fn proportional(a: &Operator, b: &Operator) -> bool {
    match (a, b) {
        (Operator::Pauli(x), Operator::Pauli(y)) => x.letters() == y.letters(),
        _ => a.to_sparse().proportionality(&b.to_sparse(), 1e-12).is_some(),
    }
}

/// Products E_α†E_β over words α, β ∈ {I} ∪ {single Kraus factor}, kept when
/// the summed τ-order is below `cutoff` (all pairs when `cutoff` is None).
/// Identity-proportional factors merge into I. Proportional duplicates are
/// removed, keeping the first in canonical order.
pub fn error_products(n: usize, kraus: &[KrausOperator], cutoff: Option<Order>) -> Result<ErrorSet> {
    if kraus.is_empty() {
        return Err(Error::Invalid("empty Kraus list".into()));
    }
    let all_pauli = kraus.iter().all(|k| matches!(k.op, Operator::Pauli(_)));
    struct Word {
        op: Operator,
        order: Order,
        site: Vec<usize>,
        kind: usize,
        label: String,
    }
    let mut words = vec![Word { op: identity_for(n, all_pauli), order: Order::ZERO, site: vec![], kind: 0, label: "I".into() }];
    for (i, k) in kraus.iter().enumerate() {
        if let Some(q) = k.op.max_qubit() {
            if q >= n {
                return Err(Error::OutOfRange(format!("Kraus operator {} beyond {n} qubits", k.label)));
            }
        }
        if is_identity_like(&k.op) {
            continue;
        }
        words.push(Word { op: k.op.clone(), order: k.tau_order, site: k.site.clone(), kind: i + 1, label: k.label.clone() });
    }
    struct Cand {
        key: (Order, Vec<usize>, (usize, usize)),
        op: Operator,
        label: String,
    }
    let mut cands = Vec::new();
    for a in &words {
        for b in &words {
            let order = a.order + b.order;
            if let Some(cut) = cutoff {
                if order >= cut {
                    continue;
                }
            }
            let prod = a.op.adjoint().mul(&b.op);
            if normalized_hs(&prod) < 1e-24 {
                continue;
            }
            let mut site = a.site.clone();
            site.extend(&b.site);
            let label = match (a.kind, b.kind) {
                (0, 0) => "I".to_string(),
                (0, _) => b.label.clone(),
                (_, 0) => format!("{}^dag", a.label),
                _ => format!("{}^dag {}", a.label, b.label),
            };
            cands.push(Cand { key: (order, site, (a.kind, b.kind)), op: normalize_op(prod), label });
        }
    }
    cands.sort_by(|x, y| x.key.cmp(&y.key));
    let mut terms: Vec<ErrorTerm> = Vec::new();
    for cand in cands {
        let op = if is_identity_like(&cand.op) { identity_for(n, all_pauli) } else { cand.op };
        if terms.iter().any(|t| proportional(&t.op, &op)) {
            continue;
        }
        terms.push(ErrorTerm { op, tau_order: cand.key.0, label: cand.label });
    }
    Ok(ErrorSet { n, mode: ErrorMode::KrausProduct, terms })
}

/// Detection set for a Kraus-type channel: the operators themselves,
/// normalized and deduplicated, with the identity first.
pub fn kraus_detection_set(n: usize, kraus: &[KrausOperator]) -> Result<ErrorSet> {
    if kraus.is_empty() {
        return Err(Error::Invalid("empty Kraus list".into()));
    }
    let all_pauli = kraus.iter().all(|k| matches!(k.op, Operator::Pauli(_)));
    let mut terms = vec![ErrorTerm { op: identity_for(n, all_pauli), tau_order: Order::ZERO, label: "I".into() }];
    for k in kraus {
        if is_identity_like(&k.op) {
            continue;
        }
        let op = normalize_op(k.op.clone());
        if terms.iter().any(|t| proportional(&t.op, &op)) {
            continue;
        }
        terms.push(ErrorTerm { op, tau_order: k.tau_order, label: k.label.clone() });
    }
    Ok(ErrorSet { n, mode: ErrorMode::KrausProduct, terms })
}

/// Parameters of the depolarizing + collective-dephasing channel used for
/// channel-adaptive searches: p_zz = 0.99/(3n+|E|), p = 4 p_zz.
pub fn depolarizing_zz_rates(graph: &ConnectivityGraph) -> (f64, f64) {
    let p_zz = 0.99 / (3 * graph.n() + graph.edge_count()) as f64;
    (4.0 * p_zz, p_zz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_counts() {
        assert_eq!(pauli_below_weight(5, 3).unwrap().len(), 106);
        assert_eq!(pauli_below_weight(7, 3).unwrap().len(), 211);
        assert_eq!(pauli_below_weight(4, 1).unwrap().len(), 1);
        assert!(pauli_below_weight(4, 0).is_err());
        assert_eq!(pauli_below_weight(3, 9).unwrap().len(), 64);
    }

    #[test]
    fn canonical_order() {
        let s = pauli_below_weight(2, 3).unwrap();
        let labels: Vec<String> = s.terms.iter().map(|t| t.label.clone()).collect();
        assert_eq!(&labels[..7], &["II", "XI", "YI", "ZI", "IX", "IY", "IZ"]);
        assert_eq!(&labels[7..10], &["XX", "XY", "XZ"]);
        assert_eq!(labels.last().unwrap(), "ZZ");
    }

    #[test]
    fn effective_weights() {
        let xz = PauliString::parse("XZ").unwrap();
        assert_eq!(effective_weight(&xz, 0.5).unwrap(), 1.5);
        assert_eq!(effective_weight(&PauliString::parse("ZZZ").unwrap(), 0.5).unwrap(), 1.5);
        assert!(effective_weight(&xz, 0.0).is_err());
    }

    #[test]
    fn biased_sets() {
        let n = 4;
        let s = pauli_below_effective(n, 2.0, 3.0).unwrap();
        // I, 3n singles, C(n,2) * (XX, XY, YX, YY)
        assert_eq!(s.len(), 1 + 3 * n + 6 * 4);
        for t in &s.terms {
            if let Operator::Pauli(p) = &t.op {
                let (x, y, z) = p.typed_weights();
                assert!(z == 0 || x + y + z == 1);
            }
        }
        let big = pauli_below_effective(n, 2.0, 4.0).unwrap();
        assert!(big.terms.iter().any(|t| t.label == "XZII"));
        assert!(big.terms.iter().any(|t| t.label == "XXYI"));
        assert!(!big.terms.iter().any(|t| t.label == "ZZII"));
        let half = pauli_below_effective(n, 0.5, 2.0).unwrap();
        assert!(half.terms.iter().any(|t| t.label == "ZZZI"));
        let sym = pauli_below_effective(5, 1.0, 3.0).unwrap();
        assert_eq!(sym.terms, pauli_below_weight(5, 3).unwrap().terms);
    }

    #[test]
    fn gad_completeness() {
        for &(g, p) in &[(0.0, 0.3), (0.2, 0.7), (1.0, 1.0), (0.45, 0.0)] {
            let ks = build_channel(&ChannelSpec::GeneralizedAmplitudeDamping { n: 1, gamma: g, p }).unwrap();
            let mut acc = SparseOperator::scalar_identity(ZERO).embed(&[0]);
            for k in &ks {
                let s = k.op.to_sparse();
                let prod = s.adjoint().mul(&s);
                let m: Vec<C64> = acc.matrix().iter().zip(prod.matrix()).map(|(a, b)| a + b).collect();
                acc = SparseOperator::new(vec![0], m).unwrap();
            }
            let want = [ONE, ZERO, ZERO, ONE];
            for (a, b) in acc.matrix().iter().zip(&want) {
                assert!((a - b).norm() < 1e-12);
            }
        }
        assert!(build_channel(&ChannelSpec::AmplitudeDamping { n: 1, gamma: 1.5 }).is_err());
    }

    #[test]
    fn collective_ad_completeness() {
        let ks = build_channel(&ChannelSpec::CollectiveAd { n: 3, gamma01: 0.3, gamma02: 0.2, gamma12: 0.1 }).unwrap();
        let on_edge: Vec<_> = ks.iter().filter(|k| k.site == vec![0, 1]).collect();
        assert_eq!(on_edge.len(), 3);
        let mut acc = vec![ZERO; 16];
        for k in on_edge {
            let s = k.op.to_sparse();
            let prod = s.adjoint().mul(&s);
            for (a, b) in acc.iter_mut().zip(prod.matrix()) {
                *a += b;
            }
        }
        for r in 0..4 {
            for col in 0..4 {
                let want = if r == col { 1.0 } else { 0.0 };
                assert!((acc[r * 4 + col] - c(want)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_damping_drops_operator() {
        let ks = build_channel(&ChannelSpec::AmplitudeDamping { n: 2, gamma: 0.0 }).unwrap();
        assert_eq!(ks.len(), 2);
        assert!(ks.iter().all(|k| k.label.starts_with("A0")));
    }

    #[test]
    fn depolarizing_zz_count() {
        let g = ConnectivityGraph::ring(6).unwrap();
        let (p, pzz) = depolarizing_zz_rates(&g);
        let ks = build_channel(&ChannelSpec::DepolarizingZz { graph: g, p, p_zz: pzz }).unwrap();
        assert_eq!(ks.len(), 25);
        let total: f64 = ks.iter().map(|k| normalized_hs(&k.op)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncated_collective_products() {
        let ks = build_channel(&ChannelSpec::CollectiveAdTruncated { n: 4 }).unwrap();
        let set = error_products(4, &ks, Some(Order::THREE_HALVES)).unwrap();
        assert!(set.terms[0].is_identity());
        let has = |a: &str| set.terms.iter().any(|t| t.label == a);
        assert!(has("K'0_01") && has("K'1_01") && has("K'0_01^dag K'0_12"));
        // order 3/2 products are excluded
        assert!(!set.terms.iter().any(|t| t.label.contains("K'0_01^dag K'1")));
        assert!(set.terms.iter().all(|t| t.tau_order < Order::THREE_HALVES));
        let none = error_products(4, &ks, Some(Order::ZERO)).unwrap();
        assert!(none.is_empty());
        assert!(error_products(4, &[], None).is_err());
    }

    #[test]
    fn products_closed_under_adjoint() {
        let ks = build_channel(&ChannelSpec::CollectiveAdTruncated { n: 4 }).unwrap();
        let set = error_products(4, &ks, Some(Order::THREE_HALVES)).unwrap();
        for t in &set.terms {
            let adj = t.op.adjoint();
            assert!(set.terms.iter().any(|u| proportional(&u.op, &adj) && u.tau_order == t.tau_order), "{}", t.label);
        }
    }

    #[test]
    fn ad_expansion_reproduces_order_set() {
        let n = 3;
        let printed = build_channel(&ChannelSpec::SingleAdOrderSet { n }).unwrap();
        let printed = kraus_detection_set(n, &printed).unwrap();
        let derived = error_products(n, &amplitude_damping_expansion(n), Some(Order::THREE_HALVES)).unwrap();
        assert_eq!(printed.len(), 1 + 2 * n + n * (n - 1) + n);
        assert_eq!(derived.len(), printed.len());
        for t in &derived.terms {
            assert!(printed.terms.iter().any(|u| proportional(&u.op, &t.op)), "{}", t.label);
        }
    }

    #[test]
    fn pauli_products_stay_pauli() {
        let g = ConnectivityGraph::ring(4).unwrap();
        let (p, pzz) = depolarizing_zz_rates(&g);
        let ks = build_channel(&ChannelSpec::DepolarizingZz { graph: g, p, p_zz: pzz }).unwrap();
        let set = error_products(4, &ks, None).unwrap();
        assert!(set.all_pauli());
        assert!(set.terms[0].is_identity());
        // every weight <= 2 Pauli appears, as products of singles
        for w in pauli_below_weight(4, 3).unwrap().terms {
            assert!(set.terms.iter().any(|t| proportional(&t.op, &w.op)), "{}", w.label);
        }
    }
}
