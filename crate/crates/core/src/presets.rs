//! Named search configurations, one per code family. `preset("5-2-3")` etc.

use crate::config::{logical_qubits, CircuitFamily, ErrorSpec, GraphSpec};
use crate::error::{Error, Result};
use crate::error_model::{depolarizing_zz_rates, ChannelSpec, Order};
use crate::graph::ConnectivityGraph;
use crate::optimize::SearchConfig;

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    /// Expected outcome under the shipped budget.
    pub expect_found: bool,
}

macro_rules! p {
    ($n:expr, $s:expr, $f:expr) => {
        Preset { name: $n, summary: $s, expect_found: $f }
    };
}

pub const PRESETS: &[Preset] = &[
    p!("5-2-3", "((5,2,3)) on the star, L up to 5", true),
    p!("4-4-2", "((4,4,2)) on K_{2,2}", true),
    p!("5-6-2", "((5,6,2)) on K_{3,2}", true),
    p!("6-2-3", "((6,2,3)) on the star", true),
    p!("7-2-3", "((7,2,3)) on the star, L up to 3", true),
    p!("8-8-3", "((8,8,3)) on K_{3,5}", true),
    p!("9-8-3", "((9,8,3)) on K_{3,6}", true),
    p!("10-16-3", "((10,16,3)) on K_{4,6}", true),
    p!("11-32-3", "((11,32,3)) on K_{5,6}", true),
    p!("12-64-3", "((12,64,3)) on K_{6,6}", true),
    p!("13-128-3", "((13,128,3)) on K_{7,6}", true),
    p!("14-256-3", "((14,256,3)) on K_{8,6}", true),
    p!("10-4-4", "((10,4,4)) with the all-to-all circuit", true),
    p!("4-2-3", "((4,2,3)), overparameterized L = 6", false),
    p!("7-3-3", "((7,3,3)) on K_{2,5}, overparameterized L = 31", false),
    p!("9-16-3", "((9,16,3)), not reached", false),
    p!("10-32-3", "((10,32,3)), not reached", false),
    p!("11-64-3", "((11,64,3)), not reached", false),
    p!("12-128-3", "((12,128,3)), not reached", false),
    p!("13-256-3", "((13,256,3)), not reached", false),
    p!("6-2-de0.5-2", "c_Z = 1/2, effective distance 2", true),
    p!("7-3-de0.5-2", "c_Z = 1/2, effective distance 2", true),
    p!("5-2-de2-3", "c_Z = 2, effective distance 3", true),
    p!("6-4-de2-3", "c_Z = 2, effective distance 3", true),
    p!("7-8-de2-3", "c_Z = 2, effective distance 3", true),
    p!("6-2-de2-4", "c_Z = 2, effective distance 4", true),
    p!("8-3-de2-4", "c_Z = 2, effective distance 4", true),
    p!("cad-4-3", "collective amplitude damping on C_4, K = 3, order < 3/2", true),
    p!("cad-5-2", "collective amplitude damping on C_5, K = 2", true),
    p!("cad-6-5", "collective amplitude damping on C_6, K = 5", true),
    p!("cad-7-8", "collective amplitude damping on C_7, K = 8", true),
    p!("cad-8-9", "collective amplitude damping on C_8, K = 9", true),
    p!("cad-9-16", "collective amplitude damping on C_9, K = 16", true),
    p!("dpzz-ring7", "depolarizing + ZZ on the ring C_7, K = 2, L up to 2", true),
    p!("dpzz-complete7", "depolarizing + ZZ on K_7, K = 2, L up to 2", true),
];

fn symmetric(n: usize, k: usize, d: usize, l_min: usize, l_max: usize) -> SearchConfig {
    let graph = GraphSpec::Bipartite { n, k: logical_qubits(k) };
    let mut c = SearchConfig::new(n, k, graph, ErrorSpec::PauliWeight { d }, l_max);
    c.layers_min = l_min;
    c
}

fn asymmetric(n: usize, k: usize, c_z: f64, d_e: f64, l_max: usize) -> SearchConfig {
    let graph = GraphSpec::Bipartite { n, k: logical_qubits(k) };
    SearchConfig::new(n, k, graph, ErrorSpec::Effective { c_z, d_e }, l_max)
}

fn collective_ad(n: usize, k: usize, l_max: usize) -> SearchConfig {
    let errors = ErrorSpec::KrausProducts {
        channel: ChannelSpec::CollectiveAdTruncated { n },
        cutoff: Some(Order::THREE_HALVES),
    };
    let mut c = SearchConfig::new(n, k, GraphSpec::Ring { n }, errors, l_max);
    // SGD stalls on these sets; every start goes straight to the least-squares polish
    c.l2_gate = 1e6;
    c.lm_max_iters = 200;
    c
}

fn depolarizing_zz(graph: GraphSpec) -> Result<SearchConfig> {
    let g: ConnectivityGraph = graph.build()?;
    let (p, p_zz) = depolarizing_zz_rates(&g);
    let errors = ErrorSpec::KrausProducts { channel: ChannelSpec::DepolarizingZz { graph: g, p, p_zz }, cutoff: None };
    let mut c = SearchConfig::new(graph.n(), 2, graph, errors, 2);
    c.restarts = 20;
    Ok(c)
}

/// Looks a preset up by name.
pub fn preset(name: &str) -> Result<SearchConfig> {
    let c = match name {
        "5-2-3" => symmetric(5, 2, 3, 1, 5),
        "4-4-2" => symmetric(4, 4, 2, 1, 4),
        "5-6-2" => symmetric(5, 6, 2, 1, 6),
        "6-2-3" => symmetric(6, 2, 3, 1, 6),
        "7-2-3" => symmetric(7, 2, 3, 1, 3),
        "8-8-3" => symmetric(8, 8, 3, 1, 8),
        "9-8-3" => symmetric(9, 8, 3, 1, 8),
        "10-16-3" => symmetric(10, 16, 3, 1, 8),
        "11-32-3" => symmetric(11, 32, 3, 1, 8),
        "12-64-3" => symmetric(12, 64, 3, 1, 8),
        "13-128-3" => symmetric(13, 128, 3, 1, 8),
        "14-256-3" => symmetric(14, 256, 3, 1, 8),
        "10-4-4" => {
            let mut c = symmetric(10, 4, 4, 1, 1);
            c.graph = GraphSpec::Complete { n: 10 };
            c.ansatz = CircuitFamily::Ac;
            c.restarts = 100;
            c
        }
        "4-2-3" => {
            let mut c = symmetric(4, 2, 3, 6, 6);
            c.restarts = 10;
            c
        }
        "7-3-3" => {
            let mut c = symmetric(7, 3, 3, 31, 31);
            c.restarts = 100;
            c
        }
        "9-16-3" => symmetric(9, 16, 3, 1, 8),
        "10-32-3" => symmetric(10, 32, 3, 1, 8),
        "11-64-3" => symmetric(11, 64, 3, 1, 8),
        "12-128-3" => symmetric(12, 128, 3, 1, 8),
        "13-256-3" => symmetric(13, 256, 3, 1, 8),
        "6-2-de0.5-2" => asymmetric(6, 2, 0.5, 2.0, 6),
        "7-3-de0.5-2" => asymmetric(7, 3, 0.5, 2.0, 6),
        "5-2-de2-3" => asymmetric(5, 2, 2.0, 3.0, 6),
        "6-4-de2-3" => asymmetric(6, 4, 2.0, 3.0, 6),
        "7-8-de2-3" => asymmetric(7, 8, 2.0, 3.0, 8),
        "6-2-de2-4" => asymmetric(6, 2, 2.0, 4.0, 8),
        "8-3-de2-4" => asymmetric(8, 3, 2.0, 4.0, 8),
        "cad-4-3" => collective_ad(4, 3, 4),
        "cad-5-2" => collective_ad(5, 2, 4),
        "cad-6-5" => collective_ad(6, 5, 6),
        "cad-7-8" => collective_ad(7, 8, 6),
        "cad-8-9" => collective_ad(8, 9, 8),
        "cad-9-16" => collective_ad(9, 16, 8),
        "dpzz-ring7" => depolarizing_zz(GraphSpec::Ring { n: 7 })?,
        "dpzz-complete7" => depolarizing_zz(GraphSpec::Complete { n: 7 })?,
        _ => {
            let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
            return Err(Error::Config(format!("unknown preset {name:?}; known: {}", names.join(", "))));
        }
    };
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_preset_resolves_and_validates() {
        for p in PRESETS {
            let c = preset(p.name).unwrap();
            c.validate().unwrap_or_else(|e| panic!("{}: {e}", p.name));
            if c.n <= 8 {
                assert!(!c.errors.build(c.n).unwrap().is_empty(), "{}", p.name);
            }
        }
        assert!(preset("3-3-3").is_err());
    }

    #[test]
    fn overparameterized_presets() {
        // 7-3-3 sits at the saturation depth of its graph
        let c = preset("7-3-3").unwrap();
        let g = c.graph.build().unwrap();
        let n_params = c.layers_max * (2 * c.n + g.edge_count()) + 2 * c.n;
        assert_eq!(n_params, 758);
        assert!(n_params >= 2 * 3 * (128 - 3));
    }
}
