//! Declarative problem descriptions (graph, circuit family, error set) and
//! TOML loading.

use serde::{Deserialize, Serialize};

use crate::ansatz::Ansatz;
use crate::error::{Error, Result};
use crate::error_model::{
    build_channel, error_products, kraus_detection_set, pauli_below_effective, pauli_below_weight, ChannelSpec, ErrorSet,
    Order,
};
use crate::graph::ConnectivityGraph;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphSpec {
    /// Complete bipartite graph between the first k qubits and the rest.
    Bipartite { n: usize, k: usize },
    Ring { n: usize },
    Path { n: usize },
    Star { n: usize },
    Complete { n: usize },
    Edges { n: usize, edges: Vec<(usize, usize)> },
}

impl GraphSpec {
    pub fn build(&self) -> Result<ConnectivityGraph> {
        match self {
            GraphSpec::Bipartite { n, k } => ConnectivityGraph::bipartite(*k, *n),
            GraphSpec::Ring { n } => ConnectivityGraph::ring(*n),
            GraphSpec::Path { n } => ConnectivityGraph::path(*n),
            GraphSpec::Star { n } => ConnectivityGraph::star(*n),
            GraphSpec::Complete { n } => ConnectivityGraph::complete(*n),
            GraphSpec::Edges { n, edges } => ConnectivityGraph::new(*n, edges),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            GraphSpec::Bipartite { n, .. }
            | GraphSpec::Ring { n }
            | GraphSpec::Path { n }
            | GraphSpec::Star { n }
            | GraphSpec::Complete { n }
            | GraphSpec::Edges { n, .. } => *n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CircuitFamily {
    #[default]
    Layered,
    Ac,
}

/// Number of logical qubits ⌈log2 K⌉ (at least 1).
pub fn logical_qubits(k_dim: usize) -> usize {
    let mut k = 0;
    while (1usize << k) < k_dim {
        k += 1;
    }
    k.max(1)
}

/// Builds the circuit for depth `layers`; the AC circuit ignores the depth.
pub fn build_ansatz(family: CircuitFamily, graph: &ConnectivityGraph, k_dim: usize, layers: usize) -> Result<Ansatz> {
    let k = logical_qubits(k_dim);
    match family {
        CircuitFamily::Layered => {
            let logical = graph.select_logical_qubits(k)?;
            Ansatz::layered(graph, &logical, layers)
        }
        CircuitFamily::Ac => Ansatz::ac(graph.n(), k),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ErrorSpec {
    /// All Pauli strings of weight < d.
    PauliWeight { d: usize },
    /// All Pauli strings of c_Z-effective weight < d_e.
    Effective { c_z: f64, d_e: f64 },
    /// E_α†E_β over the channel's Kraus words, summed order below `cutoff`.
    KrausProducts {
        channel: ChannelSpec,
        #[serde(default)]
        cutoff: Option<Order>,
    },
    /// The Kraus operators themselves (detection form).
    KrausDetection { channel: ChannelSpec },
}

impl ErrorSpec {
    pub fn build(&self, n: usize) -> Result<ErrorSet> {
        if let ErrorSpec::KrausProducts { channel, .. } | ErrorSpec::KrausDetection { channel } = self {
            let m = channel_qubits(channel);
            if m != n {
                return Err(Error::Config(format!("{m}-qubit channel for an {n}-qubit problem")));
            }
        }
        let set = match self {
            ErrorSpec::PauliWeight { d } => pauli_below_weight(n, *d)?,
            ErrorSpec::Effective { c_z, d_e } => pauli_below_effective(n, *c_z, *d_e)?,
            ErrorSpec::KrausProducts { channel, cutoff } => error_products(n, &build_channel(channel)?, *cutoff)?,
            ErrorSpec::KrausDetection { channel } => kraus_detection_set(n, &build_channel(channel)?)?,
        };
        if set.is_empty() {
            return Err(Error::Config("error set is empty".into()));
        }
        Ok(set)
    }

    /// Short identifier recorded in artifacts.
    pub fn id(&self) -> String {
        match self {
            ErrorSpec::PauliWeight { d } => format!("pauli-weight<{d}"),
            ErrorSpec::Effective { c_z, d_e } => format!("effective(cZ={c_z})<{d_e}"),
            ErrorSpec::KrausProducts { channel, cutoff } => match cutoff {
                Some(c) => format!("kraus-products({})<{c}", channel_name(channel)),
                None => format!("kraus-products({})", channel_name(channel)),
            },
            ErrorSpec::KrausDetection { channel } => format!("kraus-detection({})", channel_name(channel)),
        }
    }
}

pub fn channel_qubits(c: &ChannelSpec) -> usize {
    match c {
        ChannelSpec::AmplitudeDamping { n, .. }
        | ChannelSpec::GeneralizedAmplitudeDamping { n, .. }
        | ChannelSpec::CollectiveAd { n, .. }
        | ChannelSpec::CollectiveAdTruncated { n }
        | ChannelSpec::SingleAdOrderSet { n } => *n,
        ChannelSpec::DepolarizingZz { graph, .. } => graph.n(),
    }
}

fn channel_name(c: &ChannelSpec) -> &'static str {
    match c {
        ChannelSpec::AmplitudeDamping { .. } => "amplitude-damping",
        ChannelSpec::GeneralizedAmplitudeDamping { .. } => "generalized-amplitude-damping",
        ChannelSpec::CollectiveAd { .. } => "collective-ad",
        ChannelSpec::CollectiveAdTruncated { .. } => "collective-ad-truncated",
        ChannelSpec::DepolarizingZz { .. } => "depolarizing-zz",
        ChannelSpec::SingleAdOrderSet { .. } => "single-ad-order-set",
    }
}

/// Parses TOML into `T`, mapping syntax and schema problems to a config
/// error that carries the parser's line/field diagnostic.
pub fn from_toml<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))
}
