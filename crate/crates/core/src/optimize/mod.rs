//! The layer-growing search loop: mini-batch SGD on C^ℓ2, then (once C^ℓ2
//! is below the gate) a least-squares polish and Powell on C^ℓ1.

pub mod lm;
pub mod powell;

use std::f64::consts::TAU;
use std::io::Write;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::Ansatz;
use crate::config::{build_ansatz, CircuitFamily, ErrorSpec, GraphSpec};
use crate::cost::{code_basis, cost_l1, cost_l2, value_and_gradient, CostPart};
use crate::error::{Error, Result};
use crate::error_model::ErrorSet;
use crate::verify::{CodeCandidate, Provenance};

use powell::{powell, PowellOptions};

fn default_c_tol() -> f64 {
    1e-6
}
fn default_batch_fraction() -> f64 {
    0.2
}
fn default_learning_rate() -> f64 {
    1e-2
}
fn default_max_sgd_iters() -> usize {
    10_000
}
fn default_eval_every() -> usize {
    50
}
fn default_window() -> usize {
    200
}
fn default_threshold() -> f64 {
    1e-4
}
fn default_restarts() -> usize {
    20
}
fn default_l2_gate() -> f64 {
    0.01
}
fn default_true() -> bool {
    true
}
fn default_one() -> usize {
    1
}
fn default_lm_iters() -> usize {
    60
}
fn default_powell_sweeps() -> usize {
    20
}

/// Every tunable of a search. Field names double as TOML keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub n: usize,
    /// Code dimension K.
    pub k: usize,
    pub graph: GraphSpec,
    #[serde(default)]
    pub ansatz: CircuitFamily,
    pub errors: ErrorSpec,
    #[serde(default = "default_one")]
    pub layers_min: usize,
    pub layers_max: usize,
    #[serde(default = "default_c_tol")]
    pub c_tol: f64,
    #[serde(default = "default_batch_fraction")]
    pub batch_fraction: f64,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_max_sgd_iters")]
    pub max_sgd_iters: usize,
    /// Full-set C^ℓ2 is evaluated every `eval_every` iterations.
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
    #[serde(default = "default_window")]
    pub convergence_window: usize,
    #[serde(default = "default_threshold")]
    pub convergence_threshold: f64,
    /// Random starts per depth.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_l2_gate")]
    pub l2_gate: f64,
    /// Damped Gauss–Newton on the residuals before Powell.
    #[serde(default = "default_true")]
    pub least_squares_polish: bool,
    #[serde(default = "default_lm_iters")]
    pub lm_max_iters: usize,
    #[serde(default = "default_powell_sweeps")]
    pub powell_max_sweeps: usize,
    /// Alternate odd restarts from the previous depth's result (zero-angle
    /// new layer) instead of a fresh random draw.
    #[serde(default = "default_true")]
    pub warm_start: bool,
    /// Restarts evaluated together; the result depends on this value but
    /// not on the thread count.
    #[serde(default = "default_one")]
    pub parallel_batch: usize,
}

impl SearchConfig {
    /// Defaults for everything but the problem definition.
    pub fn new(n: usize, k: usize, graph: GraphSpec, errors: ErrorSpec, layers_max: usize) -> Self {
        Self {
            n,
            k,
            graph,
            ansatz: CircuitFamily::Layered,
            errors,
            layers_min: 1,
            layers_max,
            c_tol: default_c_tol(),
            batch_fraction: default_batch_fraction(),
            learning_rate: default_learning_rate(),
            max_sgd_iters: default_max_sgd_iters(),
            eval_every: default_eval_every(),
            convergence_window: default_window(),
            convergence_threshold: default_threshold(),
            restarts: default_restarts(),
            seed: 0,
            l2_gate: default_l2_gate(),
            least_squares_polish: true,
            lm_max_iters: default_lm_iters(),
            powell_max_sweeps: default_powell_sweeps(),
            warm_start: true,
            parallel_batch: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.batch_fraction > 0.0 && self.batch_fraction <= 1.0) {
            return bad(format!("batch_fraction = {} outside (0, 1]", self.batch_fraction));
        }
        if !(self.c_tol > 0.0) {
            return bad(format!("c_tol = {} must be positive", self.c_tol));
        }
        if self.learning_rate < 0.0 || !self.learning_rate.is_finite() {
            return bad(format!("learning_rate = {} must be finite and non-negative", self.learning_rate));
        }
        if self.graph.n() != self.n {
            return bad(format!("graph has {} vertices but n = {}", self.graph.n(), self.n));
        }
        if self.k < 1 || self.k > 1usize << self.n.min(20) {
            return bad(format!("K = {} impossible on {} qubits", self.k, self.n));
        }
        if self.layers_min < 1 || self.layers_min > self.layers_max {
            return bad(format!("layer range {}..={}", self.layers_min, self.layers_max));
        }
        if self.restarts == 0 || self.parallel_batch == 0 {
            return bad("restarts and parallel_batch must be positive".into());
        }
        if self.eval_every == 0 || self.convergence_window < self.eval_every {
            return bad("eval_every must be positive and not exceed convergence_window".into());
        }
        self.graph.build().map_err(|e| Error::Config(format!("graph: {e}")))?;
        Ok(())
    }

    fn sgd_options(&self) -> SgdOptions {
        SgdOptions {
            batch_fraction: self.batch_fraction,
            learning_rate: self.learning_rate,
            max_iters: self.max_sgd_iters,
            eval_every: self.eval_every,
            window: self.convergence_window,
            threshold: self.convergence_threshold,
            stop_below: self.l2_gate,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Sgd,
    LeastSquares,
    Powell,
}

/// One row of the iteration trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub stage: Stage,
    pub batch_l2: Option<f64>,
    pub full_l2: Option<f64>,
    pub l1: Option<f64>,
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], mut w: W) -> Result<()> {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    writeln!(w, "iteration,stage,batch_l2,full_l2,l1")?;
    for r in rows {
        let stage = match r.stage {
            Stage::Sgd => "sgd",
            Stage::LeastSquares => "least-squares",
            Stage::Powell => "powell",
        };
        writeln!(w, "{},{},{},{},{}", r.iteration, stage, opt(r.batch_l2), opt(r.full_l2), opt(r.l1))?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SgdOptions {
    pub batch_fraction: f64,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub eval_every: usize,
    pub window: usize,
    pub threshold: f64,
    /// Hand over as soon as full C^ℓ2 falls below this.
    pub stop_below: f64,
}

impl Default for SgdOptions {
    fn default() -> Self {
        Self {
            batch_fraction: default_batch_fraction(),
            learning_rate: default_learning_rate(),
            max_iters: default_max_sgd_iters(),
            eval_every: default_eval_every(),
            window: default_window(),
            threshold: default_threshold(),
            stop_below: 0.0,
        }
    }
}

pub fn batch_size(fraction: f64, len: usize) -> usize {
    ((fraction * len as f64).ceil() as usize).clamp(1, len)
}

/// Mini-batch gradient descent on C^ℓ2. Returns the best θ seen by full-set
/// evaluation together with its C^ℓ2.
pub fn sgd_minibatch(
    a: &Ansatz,
    theta0: &[f64],
    errors: &ErrorSet,
    k: usize,
    opts: &SgdOptions,
    rng: &mut ChaCha8Rng,
    trace: &mut Vec<TraceRow>,
) -> Result<(Vec<f64>, f64)> {
    let m = errors.len();
    let bs = batch_size(opts.batch_fraction, m);
    let mut theta = theta0.to_vec();
    let full0 = cost_l2(a, &theta, errors, k)?.total;
    trace.push(TraceRow { iteration: 0, stage: Stage::Sgd, batch_l2: None, full_l2: Some(full0), l1: None });
    let mut best = (theta.clone(), full0);
    if full0 < opts.stop_below {
        return Ok(best);
    }
    let mut history = vec![full0];
    let w = (opts.window / opts.eval_every).max(1);
    for it in 1..=opts.max_iters {
        let batch_cost;
        let grad;
        if bs == m {
            (batch_cost, grad) = value_and_gradient(a, &theta, errors, k, CostPart::All)?;
        } else {
            let mut idx = sample(rng, m, bs).into_vec();
            idx.sort_unstable();
            (batch_cost, grad) = value_and_gradient(a, &theta, &errors.subset(&idx), k, CostPart::All)?;
        }
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= opts.learning_rate * g;
        }
        let mut row = TraceRow { iteration: it, stage: Stage::Sgd, batch_l2: Some(batch_cost), full_l2: None, l1: None };
        if it % opts.eval_every == 0 || it == opts.max_iters {
            let full = cost_l2(a, &theta, errors, k)?.total;
            row.full_l2 = Some(full);
            trace.push(row);
            if full < best.1 {
                best = (theta.clone(), full);
            }
            if full < opts.stop_below {
                break;
            }
            history.push(full);
            if history.len() >= 2 * w {
                let h = history.len();
                let now: f64 = history[h - w..].iter().sum::<f64>() / w as f64;
                let before: f64 = history[h - 2 * w..h - w].iter().sum::<f64>() / w as f64;
                if before <= 0.0 || (before - now) / before < opts.threshold {
                    break;
                }
            }
        } else {
            trace.push(row);
        }
    }
    Ok(best)
}

/// Powell on C^ℓ1; never returns a worse point.
pub fn powell_refine(
    a: &Ansatz,
    theta: &[f64],
    errors: &ErrorSet,
    k: usize,
    c_tol: f64,
    max_sweeps: usize,
) -> Result<(Vec<f64>, f64)> {
    let c0 = cost_l1(a, theta, errors, k)?.total;
    if c0 <= c_tol {
        return Ok((theta.to_vec(), c0));
    }
    let f = |x: &[f64]| cost_l1(a, x, errors, k).map(|c| c.total).unwrap_or(f64::INFINITY);
    let opts = PowellOptions { target: c_tol, max_sweeps, ..Default::default() };
    let out = powell(f, theta, &opts);
    if out.f < c0 {
        Ok((out.x, out.f))
    } else {
        Ok((theta.to_vec(), c0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchStatus {
    Found,
    Exhausted,
}

/// Outcome of one (depth, restart) attempt.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttemptSummary {
    pub layers: usize,
    pub restart: usize,
    pub warm: bool,
    pub sgd_l2: f64,
    pub final_l1: f64,
    pub final_l2: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub status: SearchStatus,
    pub theta: Vec<f64>,
    pub cost_l1: f64,
    pub cost_l2: f64,
    pub layers: usize,
    pub restart: usize,
    pub ansatz: Ansatz,
    /// Full trace of the returned attempt.
    pub trace: Vec<TraceRow>,
    pub attempts: Vec<AttemptSummary>,
    pub code: CodeCandidate,
}

impl SearchResult {
    /// Best C^ℓ1 after each attempt, in run order.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.attempts
            .iter()
            .map(|a| {
                best = best.min(a.final_l1);
                best
            })
            .collect()
    }
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream for (master seed, depth, restart).
pub fn attempt_seed(seed: u64, layers: usize, restart: usize) -> u64 {
    mix(mix(mix(seed) ^ layers as u64) ^ restart as u64)
}

struct Attempt {
    summary: AttemptSummary,
    theta: Vec<f64>,
    trace: Vec<TraceRow>,
}

fn run_attempt(cfg: &SearchConfig, a: &Ansatz, errors: &ErrorSet, restart: usize, warm: Option<Vec<f64>>) -> Result<Attempt> {
    let mut rng = ChaCha8Rng::seed_from_u64(attempt_seed(cfg.seed, a.layers, restart));
    let is_warm = warm.is_some();
    let theta0 = match warm {
        Some(t) => t,
        None => (0..a.n_params()).map(|_| rng.gen_range(0.0..TAU)).collect(),
    };
    let mut trace = Vec::new();
    let (mut theta, sgd_l2) = sgd_minibatch(a, &theta0, errors, cfg.k, &cfg.sgd_options(), &mut rng, &mut trace)?;
    let mut it = trace.last().map_or(0, |r| r.iteration);
    let mut l1 = cost_l1(a, &theta, errors, cfg.k)?.total;
    if sgd_l2 < cfg.l2_gate && l1 > cfg.c_tol {
        if cfg.least_squares_polish {
            let out = lm::polish(a, &theta, errors, cfg.k, cfg.c_tol, cfg.lm_max_iters)?;
            for (i, (l2, c1)) in out.history.iter().enumerate() {
                trace.push(TraceRow { iteration: it + i + 1, stage: Stage::LeastSquares, batch_l2: None, full_l2: Some(*l2), l1: Some(*c1) });
            }
            it += out.history.len();
            if out.l1 < l1 {
                theta = out.theta;
                l1 = out.l1;
            }
        }
        if l1 > cfg.c_tol {
            let (t, c) = powell_refine(a, &theta, errors, cfg.k, cfg.c_tol, cfg.powell_max_sweeps)?;
            theta = t;
            l1 = c;
            it += 1;
            trace.push(TraceRow { iteration: it, stage: Stage::Powell, batch_l2: None, full_l2: None, l1: Some(l1) });
        }
    }
    let l2 = cost_l2(a, &theta, errors, cfg.k)?.total;
    Ok(Attempt {
        summary: AttemptSummary { layers: a.layers, restart, warm: is_warm, sgd_l2, final_l1: l1, final_l2: l2, iterations: it },
        theta,
        trace,
    })
}

/// Runs the full search described by `cfg`. Deterministic given the config.
pub fn varqec_search(cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let graph = cfg.graph.build()?;
    let errors = cfg.errors.build(cfg.n)?;
    let layer_range: Vec<usize> = if cfg.ansatz == CircuitFamily::Ac { vec![1] } else { (cfg.layers_min..=cfg.layers_max).collect() };
    let mut attempts = Vec::new();
    let mut best: Option<(Attempt, Ansatz)> = None;
    let mut prev: Option<(Ansatz, Vec<Option<Vec<f64>>>)> = None;
    for &layers in &layer_range {
        let a = build_ansatz(cfg.ansatz, &graph, cfg.k, layers)?;
        let mut finals: Vec<Option<Vec<f64>>> = vec![None; cfg.restarts];
        let mut found = false;
        let mut r0 = 0;
        while r0 < cfg.restarts && !found {
            let r1 = (r0 + cfg.parallel_batch).min(cfg.restarts);
            let jobs: Vec<(usize, Option<Vec<f64>>)> = (r0..r1)
                .map(|r| {
                    let warm = match (&prev, cfg.warm_start && r % 2 == 1) {
                        (Some((pa, thetas)), true) => thetas[r].as_ref().and_then(|t| a.warm_start(pa, t).ok()),
                        _ => None,
                    };
                    (r, warm)
                })
                .collect();
            let results: Vec<Result<Attempt>> =
                jobs.into_par_iter().map(|(r, warm)| run_attempt(cfg, &a, &errors, r, warm)).collect();
            for res in results {
                let att = res?;
                attempts.push(att.summary.clone());
                finals[att.summary.restart] = Some(att.theta.clone());
                if att.summary.final_l1 <= cfg.c_tol {
                    found = true;
                }
                let better = best.as_ref().map_or(true, |(b, _)| att.summary.final_l1 < b.summary.final_l1);
                if better {
                    best = Some((att, a.clone()));
                }
            }
            r0 = r1;
        }
        if found {
            break;
        }
        prev = Some((a, finals));
    }
    let (att, ansatz) = best.ok_or_else(|| Error::Invariant("search ran no attempts".into()))?;
    let basis = code_basis(&ansatz, &att.theta, cfg.k)?;
    let code = CodeCandidate::new(basis)?.with_provenance(Provenance {
        ansatz: Some(ansatz.clone()),
        theta: Some(att.theta.clone()),
        error_set: Some(cfg.errors.id()),
    });
    let status = if att.summary.final_l1 <= cfg.c_tol { SearchStatus::Found } else { SearchStatus::Exhausted };
    Ok(SearchResult {
        status,
        cost_l1: att.summary.final_l1,
        cost_l2: att.summary.final_l2,
        layers: att.summary.layers,
        restart: att.summary.restart,
        theta: att.theta,
        ansatz,
        trace: att.trace,
        attempts,
        code,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::logical_qubits;
    use crate::error_model::pauli_below_weight;
    use crate::graph::ConnectivityGraph;

    fn small() -> (Ansatz, ErrorSet) {
        let g = ConnectivityGraph::star(4).unwrap();
        (Ansatz::layered(&g, &[0], 2).unwrap(), pauli_below_weight(4, 2).unwrap())
    }

    #[test]
    fn zero_learning_rate_keeps_theta() {
        let (a, e) = small();
        let th: Vec<f64> = (0..a.n_params()).map(|i| i as f64 * 0.1).collect();
        let opts = SgdOptions { learning_rate: 0.0, max_iters: 20, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (out, _) = sgd_minibatch(&a, &th, &e, 2, &opts, &mut rng, &mut Vec::new()).unwrap();
        assert_eq!(out, th);
    }

    #[test]
    fn full_batch_is_plain_gradient_descent() {
        let (a, e) = small();
        let th: Vec<f64> = (0..a.n_params()).map(|i| (i as f64 * 0.37).sin()).collect();
        let opts = SgdOptions { batch_fraction: 1.0, max_iters: 5, eval_every: 5, window: 5, threshold: -1.0, ..Default::default() };
        let mut t1 = Vec::new();
        let mut r1 = ChaCha8Rng::seed_from_u64(1);
        sgd_minibatch(&a, &th, &e, 2, &opts, &mut r1, &mut t1).unwrap();
        let mut t2 = Vec::new();
        let mut r2 = ChaCha8Rng::seed_from_u64(99);
        sgd_minibatch(&a, &th, &e, 2, &opts, &mut r2, &mut t2).unwrap();
        assert_eq!(t1, t2);
        // manual descent
        let mut x = th.clone();
        for _ in 0..5 {
            let (_, g) = value_and_gradient(&a, &x, &e, 2, CostPart::All).unwrap();
            for (xi, gi) in x.iter_mut().zip(&g) {
                *xi -= opts.learning_rate * gi;
            }
        }
        let want = cost_l2(&a, &x, &e, 2).unwrap().total;
        assert_eq!(t1.last().unwrap().full_l2, Some(want));
    }

    #[test]
    fn powell_refine_is_monotone() {
        let (a, e) = small();
        let th: Vec<f64> = (0..a.n_params()).map(|i| (i as f64).cos()).collect();
        let c0 = cost_l1(&a, &th, &e, 2).unwrap().total;
        let (_, c1) = powell_refine(&a, &th, &e, 2, 1e-6, 1).unwrap();
        assert!(c1 <= c0);
        // already optimal: K = 1 has zero cost everywhere
        let (t, c) = powell_refine(&a, &th, &e, 1, 1e-6, 5).unwrap();
        assert_eq!(t, th);
        assert!(c <= 1e-12);
    }

    #[test]
    fn batch_sizes() {
        assert_eq!(batch_size(0.2, 106), 22);
        assert_eq!(batch_size(1.0, 7), 7);
        assert_eq!(batch_size(1e-9, 7), 1);
        assert_eq!(logical_qubits(2), 1);
    }

    #[test]
    fn config_validation() {
        let mut c = SearchConfig::new(4, 2, GraphSpec::Star { n: 4 }, ErrorSpec::PauliWeight { d: 2 }, 2);
        assert!(c.validate().is_ok());
        c.batch_fraction = 0.0;
        assert!(c.validate().is_err());
        c.batch_fraction = 0.2;
        c.graph = GraphSpec::Edges { n: 4, edges: vec![(0, 9)] };
        assert!(c.validate().is_err());
    }

    #[test]
    fn tiny_search_is_deterministic_and_finds_detection_code() {
        // ((4,2,2)) detecting single-qubit errors exists
        let mut c = SearchConfig::new(4, 2, GraphSpec::Complete { n: 4 }, ErrorSpec::PauliWeight { d: 2 }, 3);
        c.restarts = 4;
        c.max_sgd_iters = 3000;
        c.seed = 5;
        let r1 = varqec_search(&c).unwrap();
        let r2 = varqec_search(&c).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.status, SearchStatus::Found);
        assert!(r1.cost_l1 <= 1e-6);
        let bsf = r1.best_so_far();
        assert!(bsf.windows(2).all(|w| w[1] <= w[0]));
    }
}
