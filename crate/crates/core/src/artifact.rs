//! On-disk record of a discovered code: problem, circuit with final angles,
//! basis amplitudes and the verification report.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ansatz::{Ansatz, AnsatzKind, Gate, GateKind};
use crate::config::{ErrorSpec, GraphSpec};
use crate::error::{Error, Result};
use crate::error_model::ErrorMode;
use crate::graph::ConnectivityGraph;
use crate::optimize::{SearchConfig, SearchResult};
use crate::state::{StateVector, C64};
use crate::verify::{CodeCandidate, VerificationReport};

pub const FORMAT_VERSION: u32 = 1;

/// Largest amplitude deviation tolerated when replaying a stored circuit.
pub const REPLAY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    /// RFC 3339, UTC.
    pub timestamp: String,
    pub seed: u64,
    pub tool_version: String,
}

impl Metadata {
    pub fn now(seed: u64) -> Self {
        Self {
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub n: usize,
    pub k: usize,
    pub mode: ErrorMode,
    pub errors: ErrorSpec,
    pub graph: GraphSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub param: usize,
    pub angle: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitRecord {
    pub kind: AnsatzKind,
    pub layers: usize,
    pub logical: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub gates: Vec<GateRecord>,
}

impl CircuitRecord {
    pub fn new(a: &Ansatz, theta: &[f64]) -> Result<Self> {
        if theta.len() != a.n_params() {
            return Err(Error::DimensionMismatch(format!("{} angles for {} parameters", theta.len(), a.n_params())));
        }
        let gates = a
            .gates
            .iter()
            .map(|g| GateRecord { kind: g.kind, targets: g.targets.clone(), param: g.param, angle: theta[g.param] })
            .collect();
        Ok(Self { kind: a.kind, layers: a.layers, logical: a.logical.clone(), edges: a.graph.edges().to_vec(), gates })
    }

    /// Rebuilds the ansatz and its angle vector.
    pub fn ansatz(&self, n: usize) -> Result<(Ansatz, Vec<f64>)> {
        let gates: Vec<Gate> =
            self.gates.iter().map(|g| Gate { kind: g.kind, targets: g.targets.clone(), param: g.param }).collect();
        let mut a = Ansatz::custom(n, &self.logical, gates)?;
        a.kind = self.kind;
        a.layers = self.layers;
        a.graph = ConnectivityGraph::new(n, &self.edges)?;
        let mut theta = vec![0.0; a.n_params()];
        for g in &self.gates {
            theta[g.param] = g.angle;
        }
        Ok((a, theta))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeArtifact {
    pub format_version: u32,
    pub metadata: Metadata,
    pub problem: Option<Problem>,
    pub circuit: Option<CircuitRecord>,
    /// K states, each 2^n [re, im] pairs. Written with shortest round-trip
    /// formatting, so values read back bit-identical.
    pub basis_states: Vec<Vec<[f64; 2]>>,
    pub verification: Option<VerificationReport>,
}

fn encode(basis: &[StateVector]) -> Vec<Vec<[f64; 2]>> {
    basis.iter().map(|s| s.amplitudes().iter().map(|c| [c.re, c.im]).collect()).collect()
}

impl CodeArtifact {
    pub fn from_code(code: &CodeCandidate, seed: u64) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            metadata: Metadata::now(seed),
            problem: None,
            circuit: None,
            basis_states: encode(&code.basis),
            verification: None,
        }
    }

    pub fn from_search(cfg: &SearchConfig, result: &SearchResult) -> Result<Self> {
        let mode = cfg.errors.build(cfg.n)?.mode;
        Ok(Self {
            format_version: FORMAT_VERSION,
            metadata: Metadata::now(cfg.seed),
            problem: Some(Problem { n: cfg.n, k: cfg.k, mode, errors: cfg.errors.clone(), graph: cfg.graph.clone() }),
            circuit: Some(CircuitRecord::new(&result.ansatz, &result.theta)?),
            basis_states: encode(&result.code.basis),
            verification: None,
        })
    }

    pub fn n(&self) -> Result<usize> {
        let len = self.basis_states.first().map(|s| s.len()).unwrap_or(0);
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Parse(format!("basis state of length {len}")));
        }
        Ok(len.trailing_zeros() as usize)
    }

    /// The stored basis as a code; fails with an invariant error when it is
    /// not orthonormal.
    pub fn code(&self) -> Result<CodeCandidate> {
        let n = self.n()?;
        let vecs = self
            .basis_states
            .iter()
            .map(|s| s.iter().map(|&[re, im]| C64::new(re, im)).collect())
            .collect();
        CodeCandidate::from_vectors(n, vecs)
    }

    /// Largest |amplitude| difference between the stored basis and a replay of
    /// the stored circuit, or None without a circuit.
    pub fn replay_deviation(&self) -> Result<Option<f64>> {
        let Some(c) = &self.circuit else { return Ok(None) };
        let n = self.n()?;
        let (a, theta) = c.ansatz(n)?;
        let replay = a.evaluate_basis(&theta, self.basis_states.len())?;
        let mut worst: f64 = 0.0;
        for (s, stored) in replay.iter().zip(&self.basis_states) {
            for (x, &[re, im]) in s.amplitudes().iter().zip(stored) {
                worst = worst.max((x - C64::new(re, im)).norm());
            }
        }
        Ok(Some(worst))
    }

    /// Version, orthonormality and replay checks.
    pub fn check(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Parse(format!("artifact format {} (expected {FORMAT_VERSION})", self.format_version)));
        }
        let code = self.code()?;
        if let Some(p) = &self.problem {
            if p.n != code.n || p.k != code.k {
                return Err(Error::Invariant(format!("problem says (n, K) = ({}, {}), basis is ({}, {})", p.n, p.k, code.n, code.k)));
            }
        }
        if let Some(dev) = self.replay_deviation()? {
            if dev > REPLAY_TOL {
                return Err(Error::Invariant(format!("circuit replay deviates by {dev:e}")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let a: Self = serde_json::from_str(text)?;
        a.check()?;
        Ok(a)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::graph::ConnectivityGraph;

    fn circuit_artifact() -> CodeArtifact {
        let g = ConnectivityGraph::bipartite(1, 4).unwrap();
        let a = Ansatz::layered(&g, &[0], 2).unwrap();
        let theta: Vec<f64> = (0..a.n_params()).map(|i| (i as f64).cos() * 2.9 + 1e-3 / 3.0).collect();
        let code = CodeCandidate::new(a.evaluate_basis(&theta, 2).unwrap()).unwrap();
        let mut art = CodeArtifact::from_code(&code, 11);
        art.circuit = Some(CircuitRecord::new(&a, &theta).unwrap());
        art
    }

    #[test]
    fn json_round_trip_is_exact() {
        let art = circuit_artifact();
        let back = CodeArtifact::from_json(&art.to_json().unwrap()).unwrap();
        assert_eq!(back, art);
        assert!(back.replay_deviation().unwrap().unwrap() < 1e-12);
    }

    #[test]
    fn layered_circuit_is_rebuilt() {
        let art = circuit_artifact();
        let (a, _) = art.circuit.as_ref().unwrap().ansatz(4).unwrap();
        assert_eq!(a.kind, AnsatzKind::Layered);
        assert_eq!(a.layers, 2);
        assert_eq!(a.graph.edge_count(), 3);
    }

    #[test]
    fn tampered_angle_fails_replay() {
        let mut art = circuit_artifact();
        art.circuit.as_mut().unwrap().gates[3].angle += 1e-3;
        let err = CodeArtifact::from_json(&art.to_json().unwrap()).unwrap_err();
        assert!(err.to_string().contains("invariant violated"), "{err}");
    }

    #[test]
    fn non_orthonormal_basis_is_rejected() {
        let mut art = CodeArtifact::from_code(&catalog::perfect_code(), 0);
        art.basis_states[1] = art.basis_states[0].clone();
        let err = art.check().unwrap_err();
        assert!(err.to_string().contains("invariant violated"), "{err}");
        art.format_version = 99;
        assert!(matches!(art.check(), Err(Error::Parse(_))));
    }
}
