//! Exact copy counting, sampling testers for graphs and matrices, distance
//! to freeness, and the end-to-end removal-lemma pipeline demo.

use serde::Serialize;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graphs::{pair_count, Color, ColorAlphabet, ForbiddenFamily, MatrixGrid, OrderedGraph};
use crate::rat::{rat_usize, rat_zero, Rat};
use crate::rng::stream_rng;
use crate::scheme::{desk_scheme, DeskConfig, SchemeParams};
use crate::threshold::{
    check_desirable, clean, extract_witnesses, nicely_colored, representatives, threshold_graph,
    CleanAudit, DesirabilityVerdict, RepParams, RepStrategy, WitnessCells,
};

/// Cap on the enumeration size of the exact counter.
pub const COUNT_CAP: u128 = 100_000_000;
/// Caps for the exact distance search.
pub const DISTANCE_N_CAP: usize = 8;
pub const DISTANCE_SIGMA_CAP: usize = 3;

fn binomial(n: usize, q: usize) -> u128 {
    if q > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..q {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Exact number of strictly increasing `q`-tuples whose induced subgraph
/// equals the pattern, by pruned depth-first search.
pub fn count_induced_ordered(g: &OrderedGraph, f: &OrderedGraph) -> Result<u128> {
    if f.alphabet() != g.alphabet() {
        return Err(Error::input("pattern alphabet mismatch"));
    }
    let q = f.n();
    if q == 0 {
        return Err(Error::input("empty pattern"));
    }
    if binomial(g.n(), q) > COUNT_CAP {
        return Err(Error::capacity(format!(
            "C({}, {q}) exceeds the enumeration cap",
            g.n()
        )));
    }
    let mut chosen = Vec::with_capacity(q);
    let mut count = 0u128;
    count_rec(g, f, 0, &mut chosen, &mut count);
    Ok(count)
}

fn count_rec(g: &OrderedGraph, f: &OrderedGraph, start: usize, chosen: &mut Vec<usize>, count: &mut u128) {
    let i = chosen.len();
    if i == f.n() {
        *count += 1;
        return;
    }
    let remaining = f.n() - i;
    for v in start..=g.n().saturating_sub(remaining) {
        if (0..i).all(|ip| g.color(chosen[ip], v) == f.color(ip, i)) {
            chosen.push(v);
            count_rec(g, f, v + 1, chosen, count);
            chosen.pop();
        }
    }
}

/// First witness of any family member: patterns are scanned in family
/// order, tuples in lexicographic order. None iff the graph is family-free.
pub fn contains_any(g: &OrderedGraph, fam: &ForbiddenFamily) -> Result<Option<(usize, Vec<usize>)>> {
    if fam.alphabet() != g.alphabet() {
        return Err(Error::input("family alphabet mismatch"));
    }
    for (pid, f) in fam.patterns().iter().enumerate() {
        if f.n() > g.n() {
            continue;
        }
        if binomial(g.n(), f.n()) > COUNT_CAP {
            return Err(Error::capacity("containment search above the enumeration cap"));
        }
        let mut chosen = Vec::with_capacity(f.n());
        if first_rec(g, f, 0, &mut chosen) {
            return Ok(Some((pid, chosen)));
        }
    }
    Ok(None)
}

fn first_rec(g: &OrderedGraph, f: &OrderedGraph, start: usize, chosen: &mut Vec<usize>) -> bool {
    let i = chosen.len();
    if i == f.n() {
        return true;
    }
    let remaining = f.n() - i;
    for v in start..=g.n().saturating_sub(remaining) {
        if (0..i).all(|ip| g.color(chosen[ip], v) == f.color(ip, i)) {
            chosen.push(v);
            if first_rec(g, f, v + 1, chosen) {
                return true;
            }
            chosen.pop();
        }
    }
    false
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

#[derive(Clone, Debug, Serialize)]
pub struct TestReport {
    pub verdict: Verdict,
    pub trials: u64,
    pub rejections: u64,
    pub seed: u64,
    pub q: usize,
}

/// One-sided sampling tester: each trial samples `q` vertices uniformly
/// without replacement and rejects iff the induced subgraph contains a
/// family member. Trials draw from per-trial derived streams, so the
/// outcome is independent of any parallel schedule.
pub fn sample_test(
    g: &OrderedGraph,
    fam: &ForbiddenFamily,
    q: usize,
    trials: u64,
    seed: u64,
) -> Result<TestReport> {
    if q > g.n() {
        return Err(Error::input("q exceeds the vertex count"));
    }
    if q < fam.max_pattern_size() {
        return Err(Error::input("q below the largest pattern size"));
    }
    let mut rejections = 0u64;
    for trial in 0..trials {
        let mut rng = stream_rng(seed, "sample_test", trial);
        let sample = sample_sorted(g.n(), q, &mut rng);
        let sub = g.induced_subgraph(&sample)?;
        if contains_any(&sub, fam)?.is_some() {
            rejections += 1;
        }
    }
    Ok(TestReport {
        verdict: if rejections > 0 { Verdict::Reject } else { Verdict::Accept },
        trials,
        rejections,
        seed,
        q,
    })
}

fn sample_sorted(n: usize, q: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<usize> {
    use rand::Rng;
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..q {
        let j = rng.gen_range(i..n);
        idx.swap(i, j);
    }
    let mut out = idx[..q].to_vec();
    out.sort_unstable();
    out
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DistanceMethod {
    Exact,
    Greedy,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceReport {
    /// Fraction of `C(n,2)`.
    #[serde(serialize_with = "crate::metrics::serialize_rat")]
    pub distance: Rat,
    pub recolorings: usize,
    /// Greedy results are upper bounds, not exact distances.
    pub exact: bool,
}

/// Minimum (or greedily bounded) number of edge recolorings to reach
/// family-freeness, normalized by `C(n,2)`.
pub fn distance_to_freeness(
    g: &OrderedGraph,
    fam: &ForbiddenFamily,
    method: DistanceMethod,
) -> Result<DistanceReport> {
    let total = pair_count(g.n());
    match method {
        DistanceMethod::Exact => {
            if g.n() > DISTANCE_N_CAP || g.alphabet().size() > DISTANCE_SIGMA_CAP {
                return Err(Error::capacity(format!(
                    "exact distance capped at n = {DISTANCE_N_CAP}, |Sigma| = {DISTANCE_SIGMA_CAP}"
                )));
            }
            let best = exact_distance(g, fam)?.ok_or_else(|| {
                Error::stage("distance", "freeness is unreachable by recoloring")
            })?;
            Ok(DistanceReport {
                distance: if total == 0 { rat_zero() } else { rat_usize(best) / rat_usize(total) },
                recolorings: best,
                exact: true,
            })
        }
        DistanceMethod::Greedy => {
            let changes = greedy_free(g, fam)?.1;
            Ok(DistanceReport {
                distance: if total == 0 { rat_zero() } else { rat_usize(changes) / rat_usize(total) },
                recolorings: changes,
                exact: false,
            })
        }
    }
}

/// Iterative deepening over recoloring depth, branching only on the pairs
/// of the first witness copy (a copy dies only by changing one of its own
/// pairs). Visited colorings are memoized with the deepest budget that
/// already failed.
fn exact_distance(g: &OrderedGraph, fam: &ForbiddenFamily) -> Result<Option<usize>> {
    let max_budget = pair_count(g.n());
    let mut memo: HashMap<Vec<u8>, usize> = HashMap::new();
    for budget in 0..=max_budget {
        if can_free(g, fam, budget, &mut memo)? {
            return Ok(Some(budget));
        }
    }
    Ok(None)
}

fn coloring_key(g: &OrderedGraph) -> Vec<u8> {
    g.pairs().map(|(u, v)| g.color(u, v).0 as u8).collect()
}

fn can_free(
    g: &OrderedGraph,
    fam: &ForbiddenFamily,
    budget: usize,
    memo: &mut HashMap<Vec<u8>, usize>,
) -> Result<bool> {
    let Some((_, tuple)) = contains_any(g, fam)? else {
        return Ok(true);
    };
    if budget == 0 {
        return Ok(false);
    }
    let key = coloring_key(g);
    if let Some(&failed_at) = memo.get(&key) {
        if failed_at >= budget {
            return Ok(false);
        }
    }
    for i in 0..tuple.len() {
        for j in (i + 1)..tuple.len() {
            let (u, v) = (tuple[i], tuple[j]);
            let current = g.color(u, v);
            for c in g.alphabet().colors() {
                if c == current {
                    continue;
                }
                let next = g.recolored(u, v, c)?;
                if can_free(&next, fam, budget - 1, memo)? {
                    return Ok(true);
                }
            }
        }
    }
    memo.insert(key, budget);
    Ok(false)
}

/// Iterated witness-breaking: recolor one pair of the current first
/// witness, choosing the (pair, color) that minimizes the surviving total
/// copy count. Returns the freed graph and the number of recolorings.
pub fn greedy_free(g: &OrderedGraph, fam: &ForbiddenFamily) -> Result<(OrderedGraph, usize)> {
    let mut current = g.clone();
    let mut changes = 0usize;
    let guard = pair_count(g.n()) * g.alphabet().size() + 1;
    while let Some((_, tuple)) = contains_any(&current, fam)? {
        if changes > guard {
            return Err(Error::stage("greedy_distance", "witness breaking did not converge"));
        }
        let mut best: Option<(usize, usize, Color, u128)> = None;
        for i in 0..tuple.len() {
            for j in (i + 1)..tuple.len() {
                let (u, v) = (tuple[i], tuple[j]);
                let cur = current.color(u, v);
                for c in current.alphabet().colors() {
                    if c == cur {
                        continue;
                    }
                    let cand = current.recolored(u, v, c)?;
                    let mut copies = 0u128;
                    for f in fam.patterns() {
                        copies += count_induced_ordered(&cand, f)?;
                    }
                    if best.as_ref().map_or(true, |&(_, _, _, b)| copies < b) {
                        best = Some((u, v, c, copies));
                    }
                }
            }
        }
        let (u, v, c, _) = best.ok_or_else(|| {
            Error::stage("greedy_distance", "witness with no recolorable pair")
        })?;
        current = current.recolored(u, v, c)?;
        changes += 1;
    }
    Ok((current, changes))
}

/// A non-empty family of forbidden submatrices over one alphabet.
#[derive(Clone, Debug)]
pub struct MatrixFamily {
    alphabet: ColorAlphabet,
    patterns: Vec<MatrixGrid>,
}

impl MatrixFamily {
    pub fn new(alphabet: ColorAlphabet, patterns: Vec<MatrixGrid>) -> Result<Self> {
        if patterns.is_empty() {
            return Err(Error::input("matrix family must be non-empty"));
        }
        for p in &patterns {
            if p.alphabet() != &alphabet {
                return Err(Error::input("matrix pattern alphabet mismatch"));
            }
        }
        Ok(MatrixFamily { alphabet, patterns })
    }

    pub fn alphabet(&self) -> &ColorAlphabet {
        &self.alphabet
    }

    pub fn patterns(&self) -> &[MatrixGrid] {
        &self.patterns
    }

    pub fn max_rows(&self) -> usize {
        self.patterns.iter().map(MatrixGrid::rows).max().unwrap_or(0)
    }

    pub fn max_cols(&self) -> usize {
        self.patterns.iter().map(MatrixGrid::cols).max().unwrap_or(0)
    }

    /// The graph reduction of every pattern, over the extended alphabet.
    pub fn reduced(&self) -> Result<(ForbiddenFamily, Color)> {
        let mut sigma0 = None;
        let mut graphs = Vec::with_capacity(self.patterns.len());
        for p in &self.patterns {
            let (g, s0) = crate::graphs::matrix_to_graph(p)?;
            sigma0 = Some(s0);
            graphs.push(g);
        }
        let s0 = sigma0.expect("non-empty family");
        let alphabet = graphs[0].alphabet().clone();
        Ok((ForbiddenFamily::new(alphabet, graphs)?, s0))
    }
}

/// First occurrence of a pattern as an ordered submatrix.
pub fn matrix_contains_any(
    m: &MatrixGrid,
    fam: &MatrixFamily,
) -> Result<Option<(usize, Vec<usize>, Vec<usize>)>> {
    if fam.alphabet() != m.alphabet() {
        return Err(Error::input("matrix family alphabet mismatch"));
    }
    for (pid, p) in fam.patterns().iter().enumerate() {
        if p.rows() > m.rows() || p.cols() > m.cols() {
            continue;
        }
        let mut rows = Vec::with_capacity(p.rows());
        if matrix_rows_rec(m, p, 0, &mut rows)? {
            // rows fixed; find the witness columns again for the report
            let mut cols = Vec::with_capacity(p.cols());
            if matrix_cols_rec(m, p, &rows, 0, &mut cols) {
                return Ok(Some((pid, rows, cols)));
            }
            return Err(Error::internal("row witness lost its columns"));
        }
    }
    Ok(None)
}

fn matrix_rows_rec(m: &MatrixGrid, p: &MatrixGrid, start: usize, rows: &mut Vec<usize>) -> Result<bool> {
    if rows.len() == p.rows() {
        let mut cols = Vec::with_capacity(p.cols());
        return Ok(matrix_cols_rec(m, p, rows, 0, &mut cols));
    }
    let remaining = p.rows() - rows.len();
    for r in start..=m.rows().saturating_sub(remaining) {
        rows.push(r);
        if matrix_rows_rec(m, p, r + 1, rows)? {
            return Ok(true);
        }
        rows.pop();
    }
    Ok(false)
}

fn matrix_cols_rec(
    m: &MatrixGrid,
    p: &MatrixGrid,
    rows: &[usize],
    start: usize,
    cols: &mut Vec<usize>,
) -> bool {
    let j = cols.len();
    if j == p.cols() {
        return true;
    }
    let remaining = p.cols() - j;
    for c in start..=m.cols().saturating_sub(remaining) {
        if (0..p.rows()).all(|i| m.cell(rows[i], c) == p.cell(i, j)) {
            cols.push(c);
            if matrix_cols_rec(m, p, rows, c + 1, cols) {
                return true;
            }
            cols.pop();
        }
    }
    false
}

/// One-sided matrix tester: samples `q` rows and `q` columns per trial and
/// checks the submatrix directly. The row/column sampling is shared with
/// the graph-reduction path so matched seeds give matched verdicts.
pub fn matrix_test(
    m: &MatrixGrid,
    fam: &MatrixFamily,
    q: usize,
    trials: u64,
    seed: u64,
) -> Result<TestReport> {
    if q > m.rows() || q > m.cols() {
        return Err(Error::input("q exceeds the matrix dimensions"));
    }
    if q < fam.max_rows() || q < fam.max_cols() {
        return Err(Error::input("q below the largest pattern dimension"));
    }
    let mut rejections = 0u64;
    for trial in 0..trials {
        let (rows, cols) = matrix_trial_sample(m, q, seed, trial);
        let sub = m.submatrix(&rows, &cols)?;
        if matrix_contains_any(&sub, fam)?.is_some() {
            rejections += 1;
        }
    }
    Ok(TestReport {
        verdict: if rejections > 0 { Verdict::Reject } else { Verdict::Accept },
        trials,
        rejections,
        seed,
        q,
    })
}

/// The shared per-trial row/column sample of the matrix testers.
pub fn matrix_trial_sample(m: &MatrixGrid, q: usize, seed: u64, trial: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = stream_rng(seed, "matrix_test", trial);
    let rows = sample_sorted(m.rows(), q, &mut rng);
    let cols = sample_sorted(m.cols(), q, &mut rng);
    (rows, cols)
}

/// The graph-reduction path of the matrix tester, consuming identical
/// samples: the induced reduction subgraph on the chosen rows and columns
/// is checked against the reduced family.
pub fn matrix_test_via_graph(
    m: &MatrixGrid,
    fam: &MatrixFamily,
    q: usize,
    trials: u64,
    seed: u64,
) -> Result<(TestReport, bool)> {
    let (g, s0) = crate::graphs::matrix_to_graph(m)?;
    let (reduced, _s0f) = fam.reduced()?;
    let mut rejections = 0u64;
    let mut sigma0_clean = true;
    for trial in 0..trials {
        let (rows, cols) = matrix_trial_sample(m, q, seed, trial);
        let mut vertices = rows.clone();
        vertices.extend(cols.iter().map(|&c| m.rows() + c));
        let sub = g.induced_subgraph(&vertices)?;
        if let Some((pid, tuple)) = contains_any(&sub, &reduced)? {
            rejections += 1;
            // sigma0 never appears inside a witness: the matched tuple
            // must split rows-then-columns at the pattern boundary
            let p_rows = fam.patterns()[pid].rows();
            let boundary_ok = tuple[..p_rows].iter().all(|&v| v < q)
                && tuple[p_rows..].iter().all(|&v| v >= q);
            if !boundary_ok {
                sigma0_clean = false;
            }
        }
    }
    let _ = s0;
    Ok((
        TestReport {
            verdict: if rejections > 0 { Verdict::Reject } else { Verdict::Accept },
            trials,
            rejections,
            seed,
            q,
        },
        sigma0_clean,
    ))
}

/// Pipeline configuration; rho defaults to `epsilon / (8 |Sigma|)` and eta
/// to `rho / 2`.
#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub desk: DeskConfig,
    pub epsilon: Rat,
    pub rho: Option<Rat>,
    pub eta: Option<Rat>,
    /// Override for the nicely-colored width; defaults to the family's
    /// largest pattern, or to d_star at the scheme's (m, t) when set.
    pub d: Option<usize>,
    pub use_dstar: bool,
    pub rep_budget: usize,
    pub max_tries: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct PipelineReport {
    pub params: SchemeParams,
    pub scheme_closeness: Rat,
    pub desirability: DesirabilityVerdict,
    pub d: usize,
    pub retained_undesirable: usize,
    pub audit: CleanAudit,
    /// `audit.total / C(n,2)`; how close the cleaned graph stays.
    pub cleaned_closeness: Rat,
    pub cleaned_free: bool,
    pub witnesses: Option<WitnessCells>,
}

/// Every intermediate object of a pipeline run, for audits and the embed
/// cross-checks.
pub struct PipelineArtifacts {
    pub scheme: crate::scheme::RegularityScheme,
    pub representatives: crate::threshold::RepresentativeTuple,
    pub threshold: crate::threshold::ThresholdGraph,
    pub nice: crate::threshold::NicelyColoredSubgraph,
    pub cleaned: OrderedGraph,
    pub audit: CleanAudit,
    pub eta: Rat,
    pub rho: Rat,
    pub d: usize,
}

/// Runs the pipeline stages up to the cleaned graph.
pub fn pipeline_stages(
    g: &OrderedGraph,
    fam: &ForbiddenFamily,
    cfg: &PipelineConfig,
) -> Result<PipelineArtifacts> {
    let sigma = g.alphabet().size();
    let rho = cfg
        .rho
        .clone()
        .unwrap_or_else(|| cfg.epsilon.clone() / rat_usize(8 * sigma));
    let eta = cfg.eta.clone().unwrap_or_else(|| rho.clone() / rat_usize(2));
    let mut rng = stream_rng(cfg.seed, "pipeline.scheme", 0);
    let (scheme, _desk_report) = desk_scheme(g, &cfg.desk, &mut rng)?;

    let mut rng = stream_rng(cfg.seed, "pipeline.representatives", 0);
    let w = representatives(
        g,
        &scheme,
        if cfg.rep_budget == 0 {
            RepStrategy::Full
        } else {
            RepStrategy::RandomSearch { budget: cfg.rep_budget, regularity_tries: 16 }
        },
        &RepParams { alpha: rat_usize(1) / rat_usize(scheme.cells.k() * 4), beta: rho.clone() },
        &mut rng,
    )
    .map_err(|e| Error::stage("representatives", e))?;

    let h = threshold_graph(g, &scheme, &w, &eta, &rho)
        .map_err(|e| Error::stage("threshold_graph", e))?;

    let d = match cfg.d {
        Some(d) => d,
        None if cfg.use_dstar => {
            crate::embed::d_star(fam, scheme.params.m, scheme.params.t)
                .map_err(|e| Error::stage("d_star", e))?
                .max(fam.max_pattern_size())
        }
        None => fam.max_pattern_size(),
    };
    let mut rng = stream_rng(cfg.seed, "pipeline.nicely_colored", 0);
    let nice = nicely_colored(&h, sigma, d, &mut rng, cfg.max_tries)?;

    let (cleaned, audit) = clean(g, &scheme, &nice, &h)?;
    Ok(PipelineArtifacts {
        scheme,
        representatives: w,
        threshold: h,
        nice,
        cleaned,
        audit,
        eta,
        rho,
        d,
    })
}

/// Runs the full removal pipeline: scheme, representatives, threshold
/// graph, desirability, nicely colored subgraph, cleaning, and witness
/// extraction from the cleaned graph.
pub fn pipeline_demo(
    g: &OrderedGraph,
    fam: &ForbiddenFamily,
    cfg: &PipelineConfig,
) -> Result<PipelineReport> {
    let art = pipeline_stages(g, fam, cfg)?;
    let desirability = check_desirable(&art.threshold, &art.rho);
    let total_pairs = pair_count(g.n());
    let cleaned_closeness = if total_pairs == 0 {
        rat_zero()
    } else {
        rat_usize(art.audit.total as usize) / rat_usize(total_pairs)
    };
    let witnesses = extract_witnesses(
        g,
        &art.cleaned,
        &art.scheme,
        &art.nice,
        &art.representatives,
        fam,
        &art.eta,
    )?;
    Ok(PipelineReport {
        params: art.scheme.params,
        scheme_closeness: art.scheme.achieved_closeness.clone(),
        desirability,
        d: art.d,
        retained_undesirable: art.nice.retained_undesirable,
        audit: art.audit,
        cleaned_closeness,
        cleaned_free: witnesses.is_none(),
        witnesses,
    })
}
