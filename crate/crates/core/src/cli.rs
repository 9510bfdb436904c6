//! The `qecsearch` command line.
//!
//! Exit codes: 0 found / all checks pass, 1 usage or configuration error,
//! 2 search exhausted or a requested check failed.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::artifact::CodeArtifact;
use crate::catalog;
use crate::config::{build_ansatz, from_toml, CircuitFamily, GraphSpec};
use crate::error::{Error, Result};
use crate::expressibility::{dc_max, parameter_dimension, write_rank_csv, RankRow, DEFAULT_SV_TOL};
use crate::graph::ConnectivityGraph;
use crate::noise::{bp_scan, lambda_scan, write_bp_csv, write_lambda_csv, LayerRule};
use crate::optimize::{varqec_search, write_trace_csv, SearchConfig, SearchStatus};
use crate::presets::{preset, PRESETS};
use crate::verify::{
    full_report, kl_report, local_equivalence, stabilizer_basis, CodeCandidate, EquivalenceOptions,
    EquivalenceOutcome, VerificationReport, DETECT_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "qecsearch", version, about = "Variational search and verification of quantum error-correcting codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the layer-growing search and write a code artifact.
    Search(SearchArgs),
    /// Verify an artifact, a stabilizer table or a built-in code.
    Verify(VerifyArgs),
    /// QFIM rank against depth.
    Qfim(QfimArgs),
    /// Gradient-magnitude scans, or λ splits of noisy outputs with --lambda.
    NoiseScan(NoiseArgs),
    /// Lower bound on the effective distance of a concatenated code.
    Concat(ConcatArgs),
}

#[derive(Args, Debug)]
struct SearchArgs {
    /// Named preset (see --list-presets).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// TOML search configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    list_presets: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    layers_min: Option<usize>,
    #[arg(long)]
    layers_max: Option<usize>,
    #[arg(long)]
    c_tol: Option<f64>,
    #[arg(long)]
    max_sgd_iters: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_fraction: Option<f64>,
    /// Artifact path (default: <preset or config stem>.json).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Iteration trace CSV (default: next to the artifact).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Artifact JSON or a stabilizer table (one generator per line).
    input: Option<PathBuf>,
    /// Built-in code instead of a file.
    #[arg(long, conflicts_with = "input")]
    builtin: Option<String>,
    /// Require at least this distance.
    #[arg(long)]
    distance: Option<usize>,
    /// Compute weight enumerators.
    #[arg(long)]
    enumerators: bool,
    /// Require A(z) to match these comma-separated coefficients to 1e-6.
    #[arg(long, value_delimiter = ',')]
    expect_a: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    expect_b: Option<Vec<f64>>,
    /// c_Z values for effective distances.
    #[arg(long = "effective")]
    effective: Vec<f64>,
    /// Check local equivalence with another code file or built-in name.
    #[arg(long)]
    equivalence: Option<String>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Allow the full Pauli sweep above 10 qubits.
    #[arg(long)]
    allow_large: bool,
}

#[derive(Args, Debug)]
struct QfimArgs {
    /// k2-5 (the seven-qubit K_{2,5}), ring, star, complete, path or bipartite.
    #[arg(long, default_value = "k2-5")]
    graph: String,
    /// Qubit count for graphs other than k2-5.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "K", default_value_t = 1)]
    k: usize,
    /// Depth range a:b (inclusive).
    #[arg(long = "L-sweep", default_value = "1:10")]
    l_sweep: String,
    #[arg(long, default_value_t = 5)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_SV_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NoiseArgs {
    /// star for gradient scans; ring or complete for --lambda.
    #[arg(long, default_value = "star")]
    graph: String,
    /// Qubit counts a:b.
    #[arg(long, default_value = "4:8")]
    n: String,
    /// const:<L>, ceil-log or linear; with --lambda a depth range a:b.
    #[arg(long = "L", default_value = "linear")]
    layers: String,
    /// Gate error rate of the local model.
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    lambda: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConcatArgs {
    /// Inner-code effective distances.
    #[arg(required = true)]
    deltas: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    cz: f64,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let out = match cli.command {
        Command::Search(a) => cmd_search(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Qfim(a) => cmd_qfim(a),
        Command::NoiseScan(a) => cmd_noise(a),
        Command::Concat(a) => cmd_concat(a),
    };
    match out {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn range(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("expected a range a:b, got {s:?}"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok((a, b))
}

fn search_config(a: &SearchArgs) -> Result<(SearchConfig, String)> {
    let (mut c, stem) = match (&a.preset, &a.config) {
        (Some(p), None) => (preset(p)?, p.clone()),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            let c: SearchConfig = from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "search".into());
            (c, stem)
        }
        _ => return Err(Error::Config("give exactly one of --preset or --config".into())),
    };
    if let Some(v) = a.seed {
        c.seed = v;
    }
    if let Some(v) = a.restarts {
        c.restarts = v;
    }
    if let Some(v) = a.layers_min {
        c.layers_min = v;
    }
    if let Some(v) = a.layers_max {
        c.layers_max = v;
    }
    if let Some(v) = a.c_tol {
        c.c_tol = v;
    }
    if let Some(v) = a.max_sgd_iters {
        c.max_sgd_iters = v;
    }
    if let Some(v) = a.learning_rate {
        c.learning_rate = v;
    }
    if let Some(v) = a.batch_fraction {
        c.batch_fraction = v;
    }
    c.validate()?;
    Ok((c, stem))
}

fn cmd_search(a: SearchArgs) -> Result<i32> {
    if a.list_presets {
        for p in PRESETS {
            println!("{:<16} {}", p.name, p.summary);
        }
        return Ok(EXIT_OK);
    }
    let (cfg, stem) = search_config(&a)?;
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from(format!("{stem}.json")));
    let trace = a.trace.clone().unwrap_or_else(|| out.with_extension("trace.csv"));
    let result = varqec_search(&cfg)?;
    write_trace_csv(&result.trace, BufWriter::new(File::create(&trace)?))?;
    println!(
        "{:?}: L = {}, restart {}, C_l1 = {:e}, C_l2 = {:e}, {} attempts",
        result.status,
        result.layers,
        result.restart,
        result.cost_l1,
        result.cost_l2,
        result.attempts.len()
    );
    if result.status == SearchStatus::Exhausted {
        println!("best C_l1 over the budget: {:e}", result.cost_l1);
        return Ok(EXIT_FAILED);
    }
    let errors = cfg.errors.build(cfg.n)?;
    let rep = if cfg.n <= crate::verify::SWEEP_GUARD {
        full_report(&result.code, Some(&errors), &[])?
    } else {
        kl_report(&result.code, &errors, DETECT_TOL)?
    };
    if let Some(d) = rep.distance {
        println!("distance {d}");
    }
    let mut art = CodeArtifact::from_search(&cfg, &result)?;
    art.verification = Some(rep);
    art.write(&out)?;
    println!("wrote {} and {}", out.display(), trace.display());
    Ok(EXIT_OK)
}

/// Built-in codes by name.
pub fn builtin(name: &str) -> Result<CodeCandidate> {
    Ok(match name {
        "5-2-3" | "perfect" => catalog::perfect_code(),
        "steane" => catalog::steane_code(),
        "8-8-3" => catalog::code_883(),
        "6-2-3-biased" => catalog::code_623_biased(),
        "6-2-3-additive" => catalog::code_623_additive(),
        "6-2-3-non-cws" => catalog::non_cws_623_printed(),
        "7-2-3-zz" => catalog::zz_adapted_723(),
        "7-2-3-omega" => catalog::omega_723()?,
        _ => {
            return Err(Error::Config(format!(
                "unknown built-in code {name:?}; known: 5-2-3, steane, 8-8-3, 6-2-3-biased, 6-2-3-additive, \
                 6-2-3-non-cws, 7-2-3-zz, 7-2-3-omega"
            )))
        }
    })
}

/// Reads an artifact (JSON) or a stabilizer table.
pub fn load_code(path: &Path) -> Result<CodeCandidate> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        return CodeArtifact::from_json(&text)?.code();
    }
    let rows: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect();
    stabilizer_basis(&catalog::generators(&rows)?)
}

fn resolve(spec: &str) -> Result<CodeCandidate> {
    let p = Path::new(spec);
    if p.exists() {
        load_code(p)
    } else {
        builtin(spec)
    }
}

#[derive(Serialize)]
struct VerifyOutput {
    report: VerificationReport,
    equivalence: Option<EquivalenceOutcome>,
    failures: Vec<String>,
}

fn compare(name: &str, got: &[f64], want: &[f64], failures: &mut Vec<String>) {
    let ok = got.len() == want.len() && got.iter().zip(want).all(|(g, w)| (g - w).abs() <= 1e-6);
    if !ok {
        failures.push(format!("{name} = {got:?}, expected {want:?}"));
    }
}

fn cmd_verify(a: VerifyArgs) -> Result<i32> {
    let code = match (&a.input, &a.builtin) {
        (Some(p), None) => load_code(p)?,
        (None, Some(b)) => builtin(b)?,
        _ => return Err(Error::Config("give a file or --builtin".into())),
    };
    let wants_sweep =
        a.distance.is_some() || a.enumerators || a.expect_a.is_some() || a.expect_b.is_some() || !a.effective.is_empty();
    let mut report = VerificationReport { n: code.n, k: code.k, passes: true, ..Default::default() };
    if wants_sweep {
        if code.n > crate::verify::SWEEP_GUARD && !a.allow_large {
            return Err(Error::Guard(format!("{}-qubit sweep needs --allow-large", code.n)));
        }
        let sc = crate::verify::spectrum::scan(&code.basis, DETECT_TOL);
        report.distance = Some(sc.min_violating_weight().unwrap_or(code.n + 1));
        report.effective_distance = a.effective.iter().map(|&c| (c, sc.min_violating_effective(c))).collect();
        report.enumerator_a = Some(sc.a);
        report.enumerator_b = Some(sc.b);
    }
    let mut failures = Vec::new();
    if let (Some(want), Some(got)) = (a.distance, report.distance) {
        if got < want {
            failures.push(format!("distance {got} < {want}"));
        }
    }
    if let (Some(want), Some(got)) = (&a.expect_a, &report.enumerator_a) {
        compare("A", got, want, &mut failures);
    }
    if let (Some(want), Some(got)) = (&a.expect_b, &report.enumerator_b) {
        compare("B", got, want, &mut failures);
    }
    let equivalence = match &a.equivalence {
        Some(other) => {
            let b = resolve(other)?;
            let o = local_equivalence(&code, &b, &EquivalenceOptions::default())?;
            if !o.equivalent {
                failures.push(format!("not shown locally equivalent to {other} (best cost {:e})", o.best_cost));
            }
            Some(o)
        }
        None => None,
    };
    report.passes = failures.is_empty();
    let doc = VerifyOutput { report, equivalence, failures };
    let mut w = sink(&a.report)?;
    writeln!(w, "{}", serde_json::to_string_pretty(&doc)?)?;
    for f in &doc.failures {
        eprintln!("check failed: {f}");
    }
    Ok(if doc.failures.is_empty() { EXIT_OK } else { EXIT_FAILED })
}

fn named_graph(name: &str, n: Option<usize>) -> Result<ConnectivityGraph> {
    if name == "k2-5" || name == "fig12" {
        return Ok(catalog::qfim_graph());
    }
    let n = n.ok_or_else(|| Error::Config(format!("--n is required for the {name} graph")))?;
    let spec = match name {
        "ring" => GraphSpec::Ring { n },
        "star" => GraphSpec::Star { n },
        "complete" => GraphSpec::Complete { n },
        "path" => GraphSpec::Path { n },
        "bipartite" => GraphSpec::Bipartite { n, k: 1 },
        _ => return Err(Error::Config(format!("unknown graph {name:?}"))),
    };
    spec.build()
}

fn cmd_qfim(a: QfimArgs) -> Result<i32> {
    let g = named_graph(&a.graph, a.n)?;
    let (lo, hi) = range(&a.l_sweep)?;
    let mut rows = Vec::new();
    for l in lo..=hi {
        let ans = build_ansatz(CircuitFamily::Layered, &g, a.k, l)?;
        let rank = parameter_dimension(&ans, a.k, a.samples, a.tol, a.seed)?;
        rows.push(RankRow { layers: l, n_params: ans.n_params(), rank, dc_max: dc_max(g.n(), a.k) });
    }
    write_rank_csv(&rows, sink(&a.out)?)?;
    Ok(EXIT_OK)
}

fn layer_rule(s: &str) -> Result<LayerRule> {
    Ok(match s {
        "linear" => LayerRule::Linear,
        "ceil-log" => LayerRule::CeilLog,
        _ => match s.strip_prefix("const:").map(str::parse) {
            Some(Ok(l)) => LayerRule::Const(l),
            _ => return Err(Error::Config(format!("unknown layer rule {s:?}"))),
        },
    })
}

fn cmd_noise(a: NoiseArgs) -> Result<i32> {
    if a.lambda {
        let (n_lo, n_hi) = range(&a.n)?;
        if n_lo != n_hi {
            return Err(Error::Config("--lambda takes a single n (e.g. --n 7:7)".into()));
        }
        let g = named_graph(&a.graph, Some(n_lo))?;
        let (lo, hi) = range(&a.layers)?;
        let layers: Vec<usize> = (lo..=hi).collect();
        write_lambda_csv(&lambda_scan(&g, &layers, a.p, a.samples, a.seed)?, sink(&a.out)?)?;
        return Ok(EXIT_OK);
    }
    if a.graph != "star" {
        return Err(Error::Config("gradient scans use the star graph".into()));
    }
    let (lo, hi) = range(&a.n)?;
    let ns: Vec<usize> = (lo..=hi).collect();
    let rows = bp_scan(&ns, layer_rule(&a.layers)?, a.p, a.samples, a.seed)?;
    write_bp_csv(&rows, sink(&a.out)?)?;
    Ok(EXIT_OK)
}

fn cmd_concat(a: ConcatArgs) -> Result<i32> {
    println!("{}", crate::verify::concat_bound(&a.deltas, a.cz)?);
    Ok(EXIT_OK)
}
