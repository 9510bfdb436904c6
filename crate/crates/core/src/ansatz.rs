//! Layered and staged (AC) rotation circuits over a connectivity graph.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ConnectivityGraph;
use crate::state::{qubit_mask, rx_inplace, rz_inplace, rzz_inplace, StateVector, C64, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    Rx,
    Rz,
    Rzz,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub param: usize,
}

impl Gate {
    pub fn rx(q: usize, param: usize) -> Self {
        Self { kind: GateKind::Rx, targets: vec![q], param }
    }

    pub fn rz(q: usize, param: usize) -> Self {
        Self { kind: GateKind::Rz, targets: vec![q], param }
    }

    pub fn rzz(a: usize, b: usize, param: usize) -> Self {
        Self { kind: GateKind::Rzz, targets: vec![a, b], param }
    }

    #[inline]
    pub(crate) fn apply(&self, amps: &mut [C64], n: usize, angle: f64) {
        match self.kind {
            GateKind::Rx => rx_inplace(amps, n, self.targets[0], angle),
            GateKind::Rz => rz_inplace(amps, n, self.targets[0], angle),
            GateKind::Rzz => rzz_inplace(amps, n, self.targets[0], self.targets[1], angle),
        }
    }

    /// ⟨a| H |b⟩ for the gate generator H (X, Z or ZZ).
    pub(crate) fn generator_sandwich(&self, n: usize, a: &[C64], b: &[C64]) -> C64 {
        let mut re = 0.0;
        let mut im = 0.0;
        match self.kind {
            GateKind::Rx => {
                let m = qubit_mask(n, self.targets[0]);
                for (i, x) in a.iter().enumerate() {
                    let y = b[i ^ m];
                    re += x.re * y.re + x.im * y.im;
                    im += x.re * y.im - x.im * y.re;
                }
            }
            GateKind::Rz | GateKind::Rzz => {
                let mut m = qubit_mask(n, self.targets[0]);
                if self.kind == GateKind::Rzz {
                    m |= qubit_mask(n, self.targets[1]);
                }
                for (i, (x, y)) in a.iter().zip(b).enumerate() {
                    let (r, s) = (x.re * y.re + x.im * y.im, x.re * y.im - x.im * y.re);
                    if (i & m).count_ones() & 1 == 0 {
                        re += r;
                        im += s;
                    } else {
                        re -= r;
                        im -= s;
                    }
                }
            }
        }
        C64::new(re, im)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnsatzKind {
    Layered,
    Ac,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ansatz {
    pub kind: AnsatzKind,
    pub graph: ConnectivityGraph,
    pub layers: usize,
    pub logical: Vec<usize>,
    pub gates: Vec<Gate>,
    pub n_params: usize,
}

impl Ansatz {
    /// Per layer: Rx, Rz on each qubit (ascending), then Rzz on each edge
    /// (lexicographic). A trailing Rx, Rz block on every qubit closes the circuit.
    pub fn layered(graph: &ConnectivityGraph, logical: &[usize], layers: usize) -> Result<Self> {
        if layers == 0 {
            return Err(Error::Invalid("layered ansatz needs L >= 1".into()));
        }
        if graph.edge_count() == 0 {
            return Err(Error::Invalid("layered ansatz on an edgeless graph".into()));
        }
        let n = graph.n();
        let mut gates = Vec::new();
        let mut p = 0;
        let mut next = || {
            p += 1;
            p - 1
        };
        for _ in 0..layers {
            for q in 0..n {
                gates.push(Gate::rx(q, next()));
                gates.push(Gate::rz(q, next()));
            }
            for &(a, b) in graph.edges() {
                gates.push(Gate::rzz(a, b, next()));
            }
        }
        for q in 0..n {
            gates.push(Gate::rx(q, next()));
            gates.push(Gate::rz(q, next()));
        }
        Self::assemble(AnsatzKind::Layered, graph.clone(), layers, logical, gates)
    }

    /// Parameters for `self` reproducing `prev(θ_prev)`: the extra layers are
    /// inserted before the trailing block with zero angles.
    pub fn warm_start(&self, prev: &Ansatz, theta_prev: &[f64]) -> Result<Vec<f64>> {
        if self.kind != AnsatzKind::Layered || prev.kind != AnsatzKind::Layered || self.graph != prev.graph {
            return Err(Error::Invalid("warm start needs two layered circuits on the same graph".into()));
        }
        if prev.layers > self.layers || theta_prev.len() != prev.n_params {
            return Err(Error::DimensionMismatch("warm start from a deeper or mismatched circuit".into()));
        }
        let trailing = 2 * self.n();
        let body = theta_prev.len() - trailing;
        let mut theta = theta_prev[..body].to_vec();
        theta.resize(self.n_params - trailing, 0.0);
        theta.extend_from_slice(&theta_prev[body..]);
        Ok(theta)
    }

    /// Staged all-to-all circuit: blocks U(s,t) for t = 1..n, s = 0..t, each
    /// Rx Rz on both qubits followed by Rzz; trailing Rz, Rx on every qubit.
    pub fn ac(n: usize, k: usize) -> Result<Self> {
        if k < 1 || k >= n {
            return Err(Error::Invalid(format!("AC ansatz needs 1 <= k < n, got k={k}, n={n}")));
        }
        let graph = ConnectivityGraph::complete(n)?;
        let mut gates = Vec::new();
        let mut p = 0;
        let mut next = || {
            p += 1;
            p - 1
        };
        for t in 1..n {
            for s in 0..t {
                gates.push(Gate::rx(s, next()));
                gates.push(Gate::rz(s, next()));
                gates.push(Gate::rx(t, next()));
                gates.push(Gate::rz(t, next()));
                gates.push(Gate::rzz(s, t, next()));
            }
        }
        for q in 0..n {
            gates.push(Gate::rz(q, next()));
            gates.push(Gate::rx(q, next()));
        }
        let logical: Vec<usize> = (0..k).collect();
        Self::assemble(AnsatzKind::Ac, graph, 1, &logical, gates)
    }

    /// Arbitrary gate program; each parameter index must be used exactly once.
    pub fn custom(n: usize, logical: &[usize], gates: Vec<Gate>) -> Result<Self> {
        let mut pairs: Vec<(usize, usize)> = gates
            .iter()
            .filter(|g| g.kind == GateKind::Rzz)
            .map(|g| (g.targets[0].min(g.targets[1]), g.targets[0].max(g.targets[1])))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        let graph = ConnectivityGraph::new(n, &pairs)?;
        Self::assemble(AnsatzKind::Custom, graph, 1, logical, gates)
    }

    fn assemble(
        kind: AnsatzKind,
        graph: ConnectivityGraph,
        layers: usize,
        logical: &[usize],
        gates: Vec<Gate>,
    ) -> Result<Self> {
        let n = graph.n();
        crate::state::check_qubits(n)?;
        if let Some(&q) = logical.iter().find(|&&q| q >= n) {
            return Err(Error::OutOfRange(format!("logical qubit {q} on {n} qubits")));
        }
        let mut sorted = logical.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != logical.len() {
            return Err(Error::Invalid("repeated logical qubit".into()));
        }
        let n_params = gates.len();
        let mut used = vec![false; n_params];
        for g in &gates {
            let arity = if g.kind == GateKind::Rzz { 2 } else { 1 };
            if g.targets.len() != arity || g.targets.iter().any(|&q| q >= n) {
                return Err(Error::Invalid(format!("malformed gate {g:?}")));
            }
            if arity == 2 && g.targets[0] == g.targets[1] {
                return Err(Error::Invalid("Rzz on a single qubit".into()));
            }
            if g.param >= n_params || used[g.param] {
                return Err(Error::Invalid(format!("parameter index {} reused or out of range", g.param)));
            }
            used[g.param] = true;
        }
        Ok(Self { kind, graph, layers, logical: logical.to_vec(), gates, n_params })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn k(&self) -> usize {
        self.logical.len()
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    /// Basis index with binary(j) on the logical qubits (MSB on `logical[0]`).
    pub fn input_index(&self, j: usize) -> Result<usize> {
        let k = self.k();
        if k < usize::BITS as usize && j >= 1usize << k {
            return Err(Error::OutOfRange(format!("input {j} with {k} logical qubits")));
        }
        let n = self.n();
        let mut idx = 0;
        for (t, &q) in self.logical.iter().enumerate() {
            if (j >> (k - 1 - t)) & 1 == 1 {
                idx |= qubit_mask(n, q);
            }
        }
        Ok(idx)
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters for an ansatz with {}",
                theta.len(),
                self.n_params
            )));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Invalid("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn evaluate(&self, theta: &[f64], j: usize) -> Result<StateVector> {
        self.check_theta(theta)?;
        let mut s = StateVector::basis(self.n(), self.input_index(j)?)?;
        self.run_forward(theta, s.amplitudes_mut());
        Ok(s)
    }

    /// Code basis `U(θ)|j⟩` for j in 0..k_dim.
    pub fn evaluate_basis(&self, theta: &[f64], k_dim: usize) -> Result<Vec<StateVector>> {
        (0..k_dim).map(|j| self.evaluate(theta, j)).collect()
    }

    pub fn apply(&self, theta: &[f64], state: &StateVector) -> Result<StateVector> {
        self.check_theta(theta)?;
        self.check_state(state)?;
        let mut s = state.clone();
        self.run_forward(theta, s.amplitudes_mut());
        Ok(s)
    }

    pub fn evaluate_adjoint(&self, theta: &[f64], state: &StateVector) -> Result<StateVector> {
        self.check_theta(theta)?;
        self.check_state(state)?;
        let mut s = state.clone();
        self.run_adjoint(theta, s.amplitudes_mut());
        Ok(s)
    }

    fn check_state(&self, state: &StateVector) -> Result<()> {
        if state.n() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "{}-qubit state for {}-qubit ansatz",
                state.n(),
                self.n()
            )));
        }
        Ok(())
    }

    pub(crate) fn run_forward(&self, theta: &[f64], amps: &mut [C64]) {
        let n = self.n();
        for g in &self.gates {
            g.apply(amps, n, theta[g.param]);
        }
    }

    pub(crate) fn run_adjoint(&self, theta: &[f64], amps: &mut [C64]) {
        let n = self.n();
        for g in self.gates.iter().rev() {
            g.apply(amps, n, -theta[g.param]);
        }
    }

    /// States with parameter p shifted by `shift`, for every p, from input `j`.
    /// Entry p of the result corresponds to parameter index p.
    pub fn shifted_states(&self, theta: &[f64], j: usize, shift: f64) -> Result<Vec<StateVector>> {
        self.check_theta(theta)?;
        let n = self.n();
        let mut prefix = StateVector::basis(n, self.input_index(j)?)?;
        let mut out: Vec<Option<StateVector>> = vec![None; self.n_params];
        for (gi, g) in self.gates.iter().enumerate() {
            let mut w = prefix.clone();
            g.apply(w.amplitudes_mut(), n, theta[g.param] + shift);
            for h in &self.gates[gi + 1..] {
                h.apply(w.amplitudes_mut(), n, theta[h.param]);
            }
            out[g.param] = Some(w);
            g.apply(prefix.amplitudes_mut(), n, theta[g.param]);
        }
        Ok(out.into_iter().map(|s| s.expect("every parameter used")).collect())
    }

    /// Exact tangents ∂ψ_j/∂θ_p, using U(θ_p + π) = -iH U(θ_p).
    pub fn tangents(&self, theta: &[f64], j: usize) -> Result<Vec<StateVector>> {
        let mut t = self.shifted_states(theta, j, std::f64::consts::PI)?;
        for s in &mut t {
            s.scale(C64::new(0.5, 0.0));
        }
        Ok(t)
    }

    /// Reverse-mode gradient of a real function f(ψ_0..ψ_{K-1}) given its
    /// cotangents g_a = ∂f/∂conj(ψ_a), so that df = 2 Re Σ_a ⟨g_a|dψ_a⟩.
    pub fn backprop(&self, theta: &[f64], outputs: &[StateVector], cotangents: &[Vec<C64>]) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        if outputs.len() != cotangents.len() {
            return Err(Error::DimensionMismatch("outputs and cotangents differ in count".into()));
        }
        let n = self.n();
        let mut grad = vec![0.0; self.n_params];
        for (psi, g) in outputs.iter().zip(cotangents) {
            if g.len() != psi.dim() {
                return Err(Error::DimensionMismatch("cotangent length".into()));
            }
            if g.iter().all(|c| *c == ZERO) {
                continue;
            }
            let mut phi = psi.amplitudes().to_vec();
            let mut lam = g.clone();
            for gate in self.gates.iter().rev() {
                grad[gate.param] += gate.generator_sandwich(n, &lam, &phi).im;
                let a = -theta[gate.param];
                gate.apply(&mut phi, n, a);
                gate.apply(&mut lam, n, a);
            }
        }
        Ok(grad)
    }
}
