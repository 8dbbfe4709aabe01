//! Command-line orchestration. Every subcommand reads and writes the JSON
//! formats of the library; all randomness flows from `--seed` through
//! per-stage derived streams, so equal invocations produce byte-identical
//! output.
//!
//! Exit codes: 0 success (or accept), 1 reject, 2 usage or input error,
//! 3 capacity error, 4 stage failure.

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::generators;
use crate::graphs::{ColorAlphabet, EdgeSet};
use crate::io;
use crate::metrics::SizeBudget;
use crate::rat::{format_rat, parse_rat, rat, Rat};
use crate::rng::stream_rng;
use crate::rounding::{feasible_roundings, round_two, Multipartition};
use crate::scheme::{desk_scheme, DeskConfig, RamseyTable, RegularityScheme};
use crate::tester::{
    self, sample_test, DistanceMethod, PipelineConfig, Verdict,
};

#[derive(Parser)]
#[command(name = "ordrem", version, about = "Removal-lemma machinery for vertex-ordered colored graphs and matrices")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Master seed; every randomized result is a pure function of it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for trial-level parallelism (output is identical
    /// regardless).
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Output format (only json).
    #[arg(long, global = true, default_value = "json")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance (graph, matrix, chart or counterexample).
    Gen(GenArgs),
    /// Count induced ordered copies of a pattern.
    Count {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        family: String,
    },
    /// Distance to family-freeness.
    Distance {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        family: String,
        #[arg(long, default_value = "greedy")]
        method: String,
    },
    /// One-sided sampling tester for graphs.
    Test {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        family: String,
        #[arg(long)]
        q: usize,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },
    /// One-sided sampling tester for matrices.
    MatrixTest {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        family: String,
        #[arg(long)]
        alphabet: Option<String>,
        #[arg(long)]
        q: usize,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },
    /// Build the desk-scale regularity scheme and audit it.
    Scheme {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        cfg: String,
    },
    /// Quantitative Ramsey extraction on a chart.
    Ramsey {
        #[arg(long)]
        chart: String,
        #[arg(long)]
        undesirable: Option<String>,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value = "1")]
        alpha: String,
        #[arg(long, default_value_t = 100)]
        max_tries: usize,
    },
    /// Round a rational vector under two multipartitions.
    Round {
        #[arg(long)]
        input: String,
        /// Check against the brute-force oracle as well.
        #[arg(long, default_value_t = false)]
        oracle: bool,
    },
    /// Run the pipeline up to the cleaned graph and emit it with the audit.
    Clean {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        family: String,
        #[arg(long)]
        cfg: String,
    },
    /// Check embeddability of a pattern into a looped interval graph
    /// produced by a pipeline run on the same inputs.
    Embed {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        family: String,
        #[arg(long)]
        cfg: String,
        #[arg(long)]
        pattern: usize,
    },
    /// Compute d_star of a family at (m, t).
    Dstar {
        #[arg(long)]
        family: String,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        t: usize,
    },
    /// Full removal pipeline with witness extraction.
    Pipeline {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        family: String,
        #[arg(long)]
        cfg: String,
    },
}

#[derive(Args)]
struct GenArgs {
    /// graph | matrix | chart | counterexample
    #[arg(long)]
    kind: String,
    /// graph models: uniform | planted | two-block
    #[arg(long, default_value = "uniform")]
    model: String,
    #[arg(long, default_value_t = 24)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    rows: usize,
    #[arg(long, default_value_t = 8)]
    cols: usize,
    /// Comma-separated alphabet symbols.
    #[arg(long, default_value = "a,b")]
    alphabet: String,
    /// Pattern file for the planted model.
    #[arg(long)]
    pattern: Option<String>,
    /// Noise probability for the planted model.
    #[arg(long, default_value = "1/10")]
    density: String,
    /// Classes for chart generation.
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long, default_value_t = 12)]
    class_size: usize,
    /// Counterexample parameters (m cliques per part, k parts).
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
}

/// Scheme / pipeline configuration file.
#[derive(serde::Deserialize)]
struct CfgJson {
    #[serde(default = "default_k")]
    k: usize,
    #[serde(default = "default_gamma")]
    gamma: String,
    #[serde(default = "default_m0")]
    m0: usize,
    #[serde(default = "default_delta")]
    delta: String,
    t: Option<usize>,
    b: Option<usize>,
    #[serde(default)]
    r_default: Option<usize>,
    #[serde(default)]
    r_entries: Vec<(usize, usize, usize)>,
    #[serde(default)]
    f_entries: Vec<(usize, usize)>,
    #[serde(default)]
    f_default_factor: Option<usize>,
    #[serde(default = "default_budget")]
    search_budget: u64,
    epsilon: Option<String>,
    rho: Option<String>,
    eta: Option<String>,
    d: Option<usize>,
    #[serde(default)]
    use_dstar: bool,
    #[serde(default)]
    rep_budget: usize,
    #[serde(default = "default_tries")]
    max_tries: usize,
}

fn default_k() -> usize {
    2
}
fn default_gamma() -> String {
    "1/10".into()
}
fn default_m0() -> usize {
    2
}
fn default_delta() -> String {
    "1/2".into()
}
fn default_budget() -> u64 {
    2000
}
fn default_tries() -> usize {
    200
}

fn desk_config(cfg: &CfgJson) -> Result<DeskConfig> {
    let mut f_table = SizeBudget::from_entries(cfg.f_entries.iter().copied());
    if let Some(factor) = cfg.f_default_factor {
        f_table = f_table.with_default_factor(factor);
    }
    Ok(DeskConfig {
        k: cfg.k,
        gamma: parse_rat(&cfg.gamma)?,
        m0: cfg.m0,
        delta: parse_rat(&cfg.delta)?,
        t_override: cfg.t,
        b_override: cfg.b,
        r_table: RamseyTable::with_entries(
            cfg.r_default.unwrap_or(2),
            cfg.r_entries.iter().map(|&(m, t, b)| ((m, t), b)),
        ),
        f_table,
        search_budget: cfg.search_budget,
    })
}

fn pipeline_config(cfg: &CfgJson, seed: u64) -> Result<PipelineConfig> {
    Ok(PipelineConfig {
        desk: desk_config(cfg)?,
        epsilon: cfg.epsilon.as_deref().map(parse_rat).transpose()?.unwrap_or(rat(1, 2)),
        rho: cfg.rho.as_deref().map(parse_rat).transpose()?,
        eta: cfg.eta.as_deref().map(parse_rat).transpose()?,
        d: cfg.d,
        use_dstar: cfg.use_dstar,
        rep_budget: cfg.rep_budget,
        max_tries: cfg.max_tries,
        seed,
    })
}

fn read_cfg(path: &str) -> Result<CfgJson> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn emit(out: &Option<String>, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct SchemeJson {
    params: crate::scheme::SchemeParams,
    interval_boundaries: Vec<usize>,
    subinterval_boundaries: Vec<usize>,
    base_assignment: Vec<usize>,
    mid_assignment: Vec<usize>,
    cell_assignment: Vec<usize>,
    slot_class: Vec<usize>,
    k_sets: Vec<Vec<(usize, usize)>>,
    achieved_closeness: String,
}

fn scheme_json(s: &RegularityScheme) -> SchemeJson {
    SchemeJson {
        params: s.params,
        interval_boundaries: s.intervals.boundaries().to_vec(),
        subinterval_boundaries: s.subintervals.boundaries().to_vec(),
        base_assignment: s.base.assignment().to_vec(),
        mid_assignment: s.mid.assignment().to_vec(),
        cell_assignment: s.cells.assignment().to_vec(),
        slot_class: s.slot_class.clone(),
        k_sets: s.k_sets(),
        achieved_closeness: format_rat(&s.achieved_closeness),
    }
}

fn parse_alphabet(spec: &str) -> Result<ColorAlphabet> {
    ColorAlphabet::new(spec.split(',').map(str::trim).map(String::from))
}

/// Parses argv and runs; returns the process exit code.
pub fn run_from<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version by "erroring" with success
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            let obj = json!({"error": e.to_string()});
            eprintln!("{}", serde_json::to_string(&obj).expect("error json"));
            e.exit_code()
        }
    }
}

pub fn run() -> i32 {
    run_from(std::env::args_os())
}

fn dispatch(cli: &Cli) -> Result<i32> {
    if cli.format != "json" {
        return Err(Error::input("only --format json is supported"));
    }
    let seed = cli.seed;
    match &cli.command {
        Command::Gen(args) => {
            let value = generate(args, seed)?;
            emit(&cli.out, &value)?;
            Ok(0)
        }
        Command::Count { graph, family } => {
            let g = io::read_graph(graph)?;
            let fam = io::read_family(family)?;
            let counts: Vec<String> = fam
                .patterns()
                .iter()
                .map(|p| tester::count_induced_ordered(&g, p).map(|c| c.to_string()))
                .collect::<Result<_>>()?;
            emit(&cli.out, &json!({"counts": counts}))?;
            Ok(0)
        }
        Command::Distance { graph, family, method } => {
            let g = io::read_graph(graph)?;
            let fam = io::read_family(family)?;
            let method = match method.as_str() {
                "exact" => DistanceMethod::Exact,
                "greedy" => DistanceMethod::Greedy,
                other => return Err(Error::input(format!("unknown method `{other}`"))),
            };
            let report = tester::distance_to_freeness(&g, &fam, method)?;
            emit(&cli.out, &serde_json::to_value(&report)?)?;
            Ok(0)
        }
        Command::Test { graph, family, q, trials } => {
            let g = io::read_graph(graph)?;
            let fam = io::read_family(family)?;
            let report = run_trials_graph(&g, &fam, *q, *trials, seed, cli.jobs)?;
            let code = i32::from(report.verdict == Verdict::Reject);
            emit(&cli.out, &serde_json::to_value(&report)?)?;
            Ok(code)
        }
        Command::MatrixTest { matrix, family, alphabet, q, trials } => {
            let m = io::read_matrix(matrix, alphabet.as_deref())?;
            let fam = io::read_matrix_family(family)?;
            let report = tester::matrix_test(&m, &fam, *q, *trials, seed)?;
            let code = i32::from(report.verdict == Verdict::Reject);
            emit(&cli.out, &serde_json::to_value(&report)?)?;
            Ok(code)
        }
        Command::Scheme { graph, cfg } => {
            let g = io::read_graph(graph)?;
            let cfg = read_cfg(cfg)?;
            let desk = desk_config(&cfg)?;
            let mut rng = stream_rng(seed, "cli.scheme", 0);
            let (scheme, report) = desk_scheme(&g, &desk, &mut rng)?;
            emit(
                &cli.out,
                &json!({
                    "scheme": scheme_json(&scheme),
                    "audit": report.audit,
                    "base_trace": report.base_trace,
                    "interval_trace": report.interval_trace,
                    "mid_improvement_found": report.mid_improvement_found,
                }),
            )?;
            Ok(0)
        }
        Command::Ramsey { chart, undesirable, t, alpha, max_tries } => {
            let chart = io::read_chart(chart)?;
            let b_edges: EdgeSet = match undesirable {
                Some(path) => io::read_edge_set(path)?,
                None => EdgeSet::new(),
            };
            let b = crate::ramsey::UndesirableSet::new(&chart, b_edges)?;
            let alpha: Rat = parse_rat(alpha)?;
            let mut rng = stream_rng(seed, "cli.ramsey", 0);
            let q = crate::ramsey::quantitative_ramsey(&chart, &b, *t, &alpha, &mut rng, *max_tries)?;
            let result = q.result.as_ref().map(|sub| {
                json!({
                    "picks": sub.picks,
                    "certified": sub.certified,
                })
            });
            emit(
                &cli.out,
                &json!({
                    "success": q.result.is_some(),
                    "tries": q.tries,
                    "retained": q.retained,
                    "bound": format_rat(&q.bound),
                    "result": result,
                }),
            )?;
            if q.result.is_some() {
                Ok(0)
            } else {
                Ok(4)
            }
        }
        Command::Round { input, oracle } => {
            let inst = io::read_rounding(input)?;
            let ground = inst.lambda.len();
            let m = Multipartition::from_groups(ground, inst.m.clone())?;
            let n = Multipartition::from_groups(ground, inst.n.clone())?;
            let res = round_two(&inst.lambda, &m, &n)?;
            let mut value = json!({
                "ell": res.values,
                "feasible": true,
            });
            if *oracle {
                let fams = vec![m.sets().to_vec(), n.sets().to_vec()];
                let all = feasible_roundings(&inst.lambda, &fams)?;
                value["oracle_contains_result"] = json!(all.contains(&res.values));
                value["oracle_count"] = json!(all.len());
            }
            emit(&cli.out, &value)?;
            Ok(0)
        }
        Command::Clean { graph, family, cfg } => {
            let g = io::read_graph(graph)?;
            let fam = io::read_family(family)?;
            let cfg = read_cfg(cfg)?;
            let pconf = pipeline_config(&cfg, seed)?;
            let report = tester::pipeline_demo(&g, &fam, &pconf)?;
            emit(
                &cli.out,
                &json!({
                    "audit": report.audit,
                    "cleaned_closeness": format_rat(&report.cleaned_closeness),
                    "cleaned_free": report.cleaned_free,
                }),
            )?;
            Ok(0)
        }
        Command::Embed { graph, family, cfg, pattern } => {
            let g = io::read_graph(graph)?;
            let fam = io::read_family(family)?;
            let cfg = read_cfg(cfg)?;
            let pconf = pipeline_config(&cfg, seed)?;
            let looped = pipeline_looped_graph(&g, &fam, &pconf)?;
            let f = fam
                .patterns()
                .get(*pattern)
                .ok_or_else(|| Error::input(format!("no pattern {pattern}")))?;
            let witness = crate::embed::embeddable(f, &looped)?;
            emit(
                &cli.out,
                &json!({
                    "embeddable": witness.is_some(),
                    "map": witness.as_ref().map(|w| w.map.clone()),
                    "slots": witness.as_ref().map(|w| w.slots.clone()),
                }),
            )?;
            Ok(0)
        }
        Command::Dstar { family, m, t } => {
            let fam = io::read_family(family)?;
            let d = crate::embed::d_star(&fam, *m, *t)?;
            emit(&cli.out, &json!({"d_star": d}))?;
            Ok(0)
        }
        Command::Pipeline { graph, family, cfg } => {
            let g = io::read_graph(graph)?;
            let fam = io::read_family(family)?;
            let cfg = read_cfg(cfg)?;
            let pconf = pipeline_config(&cfg, seed)?;
            let report = tester::pipeline_demo(&g, &fam, &pconf)?;
            let witnesses = report.witnesses.as_ref().map(|w| {
                json!({
                    "pattern": w.pattern,
                    "cells": w.cells,
                    "densities": w.densities.iter().map(format_rat).collect::<Vec<_>>(),
                })
            });
            emit(
                &cli.out,
                &json!({
                    "params": report.params,
                    "scheme_closeness": format_rat(&report.scheme_closeness),
                    "desirability": report.desirability,
                    "d": report.d,
                    "retained_undesirable": report.retained_undesirable,
                    "audit": report.audit,
                    "cleaned_closeness": format_rat(&report.cleaned_closeness),
                    "cleaned_free": report.cleaned_free,
                    "witnesses": witnesses,
                }),
            )?;
            Ok(0)
        }
    }
}

/// The looped interval graph a pipeline run induces (scheme through the
/// nicely colored subgraph), for the embed subcommand.
fn pipeline_looped_graph(
    g: &crate::graphs::OrderedGraph,
    fam: &crate::graphs::ForbiddenFamily,
    cfg: &PipelineConfig,
) -> Result<crate::graphs::LoopedGraph> {
    let art = tester::pipeline_stages(g, fam, cfg)?;
    crate::embed::loops_from_d(&art.nice)
}

/// Trial-parallel graph tester: chunks of derived-seed trials merged in
/// trial order, so the report is identical for any `jobs`.
fn run_trials_graph(
    g: &crate::graphs::OrderedGraph,
    fam: &crate::graphs::ForbiddenFamily,
    q: usize,
    trials: u64,
    seed: u64,
    jobs: usize,
) -> Result<crate::tester::TestReport> {
    if jobs <= 1 || trials < 2 {
        return sample_test(g, fam, q, trials, seed);
    }
    let jobs = jobs.min(trials as usize);
    let chunk = trials.div_ceil(jobs as u64);
    let results: Vec<Result<u64>> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for w in 0..jobs as u64 {
            let lo = w * chunk;
            let hi = ((w + 1) * chunk).min(trials);
            handles.push(scope.spawn(move || -> Result<u64> {
                let mut rejections = 0;
                for trial in lo..hi {
                    let mut rng = stream_rng(seed, "sample_test", trial);
                    let mut idx: Vec<usize> = (0..g.n()).collect();
                    use rand::Rng;
                    for i in 0..q {
                        let j = rng.gen_range(i..g.n());
                        idx.swap(i, j);
                    }
                    let mut sample = idx[..q].to_vec();
                    sample.sort_unstable();
                    let sub = g.induced_subgraph(&sample)?;
                    if tester::contains_any(&sub, fam)?.is_some() {
                        rejections += 1;
                    }
                }
                Ok(rejections)
            }));
        }
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut rejections = 0u64;
    for r in results {
        rejections += r?;
    }
    Ok(crate::tester::TestReport {
        verdict: if rejections > 0 { Verdict::Reject } else { Verdict::Accept },
        trials,
        rejections,
        seed,
        q,
    })
}

fn generate(args: &GenArgs, seed: u64) -> Result<serde_json::Value> {
    match args.kind.as_str() {
        "graph" => {
            let alphabet = parse_alphabet(&args.alphabet)?;
            let g = match args.model.as_str() {
                "uniform" => generators::uniform_graph(args.n, alphabet, seed)?,
                "two-block" => generators::two_block_graph(args.n, alphabet)?,
                "planted" => {
                    let path = args
                        .pattern
                        .as_ref()
                        .ok_or_else(|| Error::input("planted model needs --pattern"))?;
                    let fam = io::read_family(path)?;
                    let noise = parse_rat(&args.density)?;
                    generators::planted_pattern_graph(args.n, &fam.patterns()[0], &noise, seed)?
                }
                other => return Err(Error::input(format!("unknown graph model `{other}`"))),
            };
            Ok(serde_json::to_value(io::graph_to_json(&g))?)
        }
        "matrix" => {
            let alphabet = parse_alphabet(&args.alphabet)?;
            let m = generators::uniform_matrix(args.rows, args.cols, alphabet, seed)?;
            Ok(json!({"csv": io::matrix_to_csv(&m)}))
        }
        "chart" => {
            let alphabet = parse_alphabet(&args.alphabet)?;
            let sigma = alphabet.size();
            let mut rng = stream_rng(seed, "gen.chart", 0);
            use rand::Rng;
            let parts: Vec<Vec<usize>> = (0..args.classes)
                .map(|i| (i * args.class_size..(i + 1) * args.class_size).collect())
                .collect();
            let chart = crate::graphs::KPartiteChart::from_fn(parts, alphabet, |_, _| {
                crate::graphs::Color(rng.gen_range(0..sigma))
            })?;
            Ok(serde_json::to_value(io::chart_to_json(&chart))?)
        }
        "counterexample" => {
            let (g, b) = crate::ramsey::gen_counterexample(args.n, args.m, args.k)?;
            Ok(json!({
                "graph": io::graph_to_json(&g),
                "undesirable": b.into_iter().collect::<Vec<_>>(),
            }))
        }
        other => Err(Error::input(format!("unknown gen kind `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_rejects_unknown_format() {
        let code = run_from(["ordrem", "--format", "yaml", "dstar", "--family", "x", "--m", "1", "--t", "1"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn gen_graph_is_deterministic_per_seed() {
        let args = GenArgs {
            kind: "graph".into(),
            model: "uniform".into(),
            n: 10,
            rows: 4,
            cols: 4,
            alphabet: "a,b".into(),
            pattern: None,
            density: "1/10".into(),
            classes: 2,
            class_size: 4,
            m: 2,
            k: 2,
        };
        let a = generate(&args, 9).unwrap();
        let b = generate(&args, 9).unwrap();
        assert_eq!(a, b);
    }
}
