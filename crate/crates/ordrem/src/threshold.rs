//! Threshold matrices over representative tuples, the threshold graph on
//! small intervals with its undesirability accounting, nicely colored
//! subgraph extraction, graph cleaning with the four-case audit, and
//! witness-cell extraction from a cleaned graph.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graphs::{
    normalize_edge, Color, ColorAlphabet, EdgeSet, ForbiddenFamily, OrderedGraph,
};
use crate::metrics::{eps_regular, RegularityMode};
use crate::ramsey::orderly_ramsey;
use crate::rat::{rat_usize, rat_zero, Rat};
use crate::scheme::RegularityScheme;

/// A set of colors as a bitmask over alphabet indices (alphabets are capped
/// at 64 symbols).
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct ColorSet(pub u64);

impl ColorSet {
    pub fn empty() -> Self {
        ColorSet(0)
    }

    pub fn full(sigma: usize) -> Self {
        debug_assert!(sigma <= 64);
        if sigma == 64 {
            ColorSet(u64::MAX)
        } else {
            ColorSet((1u64 << sigma) - 1)
        }
    }

    pub fn insert(&mut self, c: Color) {
        self.0 |= 1 << c.0;
    }

    pub fn contains(&self, c: Color) -> bool {
        self.0 >> c.0 & 1 == 1
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(&self, other: &ColorSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Smallest member in alphabet order.
    pub fn min_color(&self) -> Option<Color> {
        if self.is_empty() {
            None
        } else {
            Some(Color(self.0.trailing_zeros() as usize))
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Color> + '_ {
        (0..64).filter(|i| self.0 >> i & 1 == 1).map(Color)
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }
}

/// A `t x t` grid of non-empty color subsets; entry `(s, s')` lists the
/// colors dense between the s-th set of the first tuple and the s'-th set
/// of the second.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ThresholdMatrix {
    t: usize,
    entries: Vec<ColorSet>,
}

impl ThresholdMatrix {
    pub fn from_entries(t: usize, entries: Vec<ColorSet>) -> Result<Self> {
        if entries.len() != t * t {
            return Err(Error::input("threshold matrix entry count mismatch"));
        }
        Ok(ThresholdMatrix { t, entries })
    }

    /// All entries the full color set; the vacuous matrix.
    pub fn full(t: usize, sigma: usize) -> Self {
        ThresholdMatrix { t, entries: vec![ColorSet::full(sigma); t * t] }
    }

    pub fn dim(&self) -> usize {
        self.t
    }

    pub fn entry(&self, s: usize, sp: usize) -> ColorSet {
        self.entries[s * self.t + sp]
    }

    pub fn entries(&self) -> &[ColorSet] {
        &self.entries
    }

    pub fn has_empty_entry(&self) -> bool {
        self.entries.iter().any(ColorSet::is_empty)
    }
}

/// `M(A, B, eta)`: entry `(s, s')` collects the colors with density at
/// least `eta` between `A_s` and `B_{s'}`. Requires `eta < 1/|Sigma|`, so
/// no entry can be empty.
pub fn threshold_matrix(
    g: &OrderedGraph,
    a: &[Vec<usize>],
    b: &[Vec<usize>],
    eta: &Rat,
) -> Result<ThresholdMatrix> {
    let t = a.len();
    if t == 0 || b.len() != t {
        return Err(Error::input("threshold matrix needs equal-length tuples"));
    }
    let sigma = g.alphabet().size();
    if eta <= &rat_zero() || *eta >= rat_usize(1) / rat_usize(sigma) {
        return Err(Error::input("eta must lie in (0, 1/|Sigma|)"));
    }
    for sa in a {
        for sb in b {
            if sa.iter().any(|v| sb.contains(v)) {
                return Err(Error::input("tuples must be disjoint across sides"));
            }
        }
    }
    let mut entries = Vec::with_capacity(t * t);
    for sa in a {
        for sb in b {
            entries.push(dense_colors(g, sa, sb, eta, sigma)?);
        }
    }
    let matrix = ThresholdMatrix { t, entries };
    if matrix.has_empty_entry() {
        return Err(Error::internal("empty threshold entry despite eta < 1/|Sigma|"));
    }
    Ok(matrix)
}

fn dense_colors(
    g: &OrderedGraph,
    a: &[usize],
    b: &[usize],
    eta: &Rat,
    sigma: usize,
) -> Result<ColorSet> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::input("empty set in threshold tuple"));
    }
    let mut counts = vec![0u64; sigma];
    for &u in a {
        for &v in b {
            counts[g.color(u, v).0] += 1;
        }
    }
    let total = rat_usize(a.len() * b.len());
    let mut set = ColorSet::empty();
    for (c, &cnt) in counts.iter().enumerate() {
        if Rat::new(cnt.into(), 1.into()) >= eta.clone() * total.clone() {
            set.insert(Color(c));
        }
    }
    Ok(set)
}

#[derive(Clone, Debug, Serialize)]
pub struct RepQuality {
    #[serde(serialize_with = "crate::metrics::serialize_rat")]
    pub alpha: Rat,
    /// Deviation sum against the cell densities; zero by construction for
    /// the full strategy.
    #[serde(serialize_with = "serialize_opt_rat")]
    pub mu_cells: Option<Rat>,
    /// Deviation sum against the parent mid-partition densities.
    #[serde(serialize_with = "serialize_opt_rat")]
    pub mu_mid: Option<Rat>,
    /// Sampled-regularity spot check: how many violating witnesses were
    /// found (measured, never proven).
    pub regularity_witnesses: Option<usize>,
}

fn serialize_opt_rat<S: serde::Serializer>(
    x: &Option<Rat>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(r) => s.serialize_some(&crate::rat::format_rat(r)),
        None => s.serialize_none(),
    }
}

/// One representative subset per scheme cell, with measured quality.
#[derive(Clone, Debug)]
pub struct RepresentativeTuple {
    /// Indexed like the scheme cells: `(i * b + j) * t + s`.
    pub cells: Vec<Vec<usize>>,
    pub quality: RepQuality,
}

impl RepresentativeTuple {
    pub fn cell(&self, scheme: &RegularityScheme, i: usize, j: usize, s: usize) -> &[usize] {
        &self.cells[scheme.cell_label(i, j, s)]
    }

    /// The tuple `W_{jr} = (W_{jr1}, ..., W_{jrt})` of one small interval.
    pub fn tuple(&self, scheme: &RegularityScheme, j: usize, r: usize) -> Vec<Vec<usize>> {
        (0..scheme.params.t)
            .map(|s| self.cells[scheme.cell_label(j, r, s)].clone())
            .collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub enum RepStrategy {
    /// Entire cells: the cell-density deviation is zero by construction;
    /// regularity is left unmeasured.
    Full,
    /// Seeded subset search scored by density deviation and a sampled
    /// regularity probe.
    RandomSearch { budget: usize, regularity_tries: u32 },
}

#[derive(Clone, Debug)]
pub struct RepParams {
    /// Required size fraction of n per representative.
    pub alpha: Rat,
    /// Regularity parameter for the sampled probe.
    pub beta: Rat,
}

/// Picks a representative tuple for the scheme cells.
pub fn representatives(
    g: &OrderedGraph,
    scheme: &RegularityScheme,
    strategy: RepStrategy,
    params: &RepParams,
    rng: &mut ChaCha8Rng,
) -> Result<RepresentativeTuple> {
    let n = scheme.n();
    let t = scheme.params.t;
    let all_cells: Vec<Vec<usize>> = (0..scheme.params.m)
        .flat_map(|i| {
            (0..scheme.params.b).flat_map(move |j| (0..t).map(move |s| (i, j, s)))
        })
        .map(|(i, j, s)| scheme.cell_members(i, j, s))
        .collect();
    match strategy {
        RepStrategy::Full => {
            let min_size = all_cells.iter().map(Vec::len).min().unwrap_or(0);
            Ok(RepresentativeTuple {
                cells: all_cells,
                quality: RepQuality {
                    alpha: rat_usize(min_size) / rat_usize(n),
                    mu_cells: Some(rat_zero()),
                    mu_mid: None,
                    regularity_witnesses: None,
                },
            })
        }
        RepStrategy::RandomSearch { budget, regularity_tries } => {
            let target = crate::rat::ceil_usize(&(params.alpha.clone() * rat_usize(n))).max(1);
            let min_cell = all_cells.iter().map(Vec::len).min().unwrap_or(0);
            if target > min_cell {
                return Err(Error::input(format!(
                    "alpha demands {target} vertices but the smallest cell has {min_cell}"
                )));
            }
            let mut best: Option<(Vec<Vec<usize>>, Rat, usize)> = None;
            for _ in 0..budget.max(1) {
                let candidate: Vec<Vec<usize>> = all_cells
                    .iter()
                    .map(|cell| crate::metrics::sample_subset(cell, target, rng))
                    .collect();
                let score = deviation_sum_cells(g, scheme, &candidate)?;
                let witnesses =
                    regularity_probe(g, scheme, &candidate, &params.beta, regularity_tries, rng)?;
                let total = score.clone() + rat_usize(witnesses);
                if best.as_ref().map_or(true, |(_, s, _)| total < *s) {
                    best = Some((candidate, total, witnesses));
                }
            }
            let (cells, _, witnesses) = best.expect("budget >= 1");
            let mu_cells = deviation_sum_cells(g, scheme, &cells)?;
            let mu_mid = deviation_sum_mid(g, scheme, &cells)?;
            Ok(RepresentativeTuple {
                cells,
                quality: RepQuality {
                    alpha: params.alpha.clone(),
                    mu_cells: Some(mu_cells),
                    mu_mid: Some(mu_mid),
                    regularity_witnesses: Some(witnesses),
                },
            })
        }
    }
}

/// Average total color-density deviation between representative pairs and
/// their cell pairs.
pub fn deviation_sum_cells(
    g: &OrderedGraph,
    scheme: &RegularityScheme,
    cells: &[Vec<usize>],
) -> Result<Rat> {
    let count = cells.len();
    let full: Vec<Vec<usize>> = scheme.cells.parts();
    let mut acc = rat_zero();
    let mut pairs = 0usize;
    for i in 0..count {
        for j in (i + 1)..count {
            acc += density_gap(g, &cells[i], &cells[j], &full[i], &full[j])?;
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Ok(rat_zero());
    }
    Ok(acc / rat_usize(pairs))
}

/// Average deviation between representative pairs and the mid parts that
/// contain them (the two-level comparison).
pub fn deviation_sum_mid(
    g: &OrderedGraph,
    scheme: &RegularityScheme,
    cells: &[Vec<usize>],
) -> Result<Rat> {
    let t = scheme.params.t;
    let b = scheme.params.b;
    let count = cells.len();
    let mut acc = rat_zero();
    let mut pairs = 0usize;
    for i in 0..count {
        for j in (i + 1)..count {
            let (ii, _, si) = split_label(b, t, i);
            let (ij, _, sj) = split_label(b, t, j);
            let mid_i = scheme.mid_members(ii, si);
            let mid_j = scheme.mid_members(ij, sj);
            if mid_i == mid_j {
                continue;
            }
            acc += density_gap(g, &cells[i], &cells[j], &mid_i, &mid_j)?;
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Ok(rat_zero());
    }
    Ok(acc / rat_usize(pairs))
}

fn split_label(b: usize, t: usize, label: usize) -> (usize, usize, usize) {
    let s = label % t;
    let ij = label / t;
    (ij / b, ij % b, s)
}

fn density_gap(
    g: &OrderedGraph,
    sub_a: &[usize],
    sub_b: &[usize],
    full_a: &[usize],
    full_b: &[usize],
) -> Result<Rat> {
    let sigma = g.alphabet().size();
    let mut acc = rat_zero();
    for c in 0..sigma {
        let d_sub = crate::metrics::color_density(g, sub_a, sub_b, Color(c))?;
        let d_full = crate::metrics::color_density(g, full_a, full_b, Color(c))?;
        acc += if d_sub > d_full { d_sub - d_full } else { d_full - d_sub };
    }
    Ok(acc)
}

/// All color densities of one disjoint pair in a single pass.
fn densities_of(g: &OrderedGraph, a: &[usize], b: &[usize], sigma: usize) -> Vec<Rat> {
    let mut counts = vec![0u64; sigma];
    for &u in a {
        for &v in b {
            counts[g.color(u, v).0] += 1;
        }
    }
    let total = (a.len() * b.len()) as u64;
    counts
        .into_iter()
        .map(|c| Rat::new(c.into(), total.into()))
        .collect()
}

fn regularity_probe(
    g: &OrderedGraph,
    scheme: &RegularityScheme,
    cells: &[Vec<usize>],
    beta: &Rat,
    tries: u32,
    rng: &mut ChaCha8Rng,
) -> Result<usize> {
    if tries == 0 || cells.len() < 2 {
        return Ok(0);
    }
    let _ = scheme;
    let mut witnesses = 0usize;
    for _ in 0..4 {
        let i = rng.gen_range(0..cells.len());
        let j = rng.gen_range(0..cells.len());
        if i == j {
            continue;
        }
        let verdict = eps_regular(
            g,
            &cells[i],
            &cells[j],
            beta,
            RegularityMode::Sampled { tries },
            Some(rng),
        )?;
        if !verdict.regular {
            witnesses += 1;
        }
    }
    Ok(witnesses)
}


/// The threshold graph: vertices are the small intervals, colored by the
/// representative threshold matrices, with the undesirable edge set and
/// the density-deviation diagnostic computed at construction.
#[derive(Clone, Debug)]
pub struct ThresholdGraph {
    pub m: usize,
    pub b: usize,
    pub t: usize,
    pub eta: Rat,
    pub rho: Rat,
    /// Matrix per small-interval pair `(jr) < (j'r')`, packed like graph
    /// pairs on `mb` vertices.
    pub colors: Vec<ThresholdMatrix>,
    /// `M(X_j, X_{j'}, rho)` per large-interval pair `j < j'`.
    pub large: Vec<ThresholdMatrix>,
    /// Undesirable small-interval pairs (cross-large-interval only).
    pub undesirable: EdgeSet,
    /// The left-hand side of the desirability inequality: the average
    /// density deviation between representative cells and mid parts.
    pub deviation_sum: Rat,
}

impl ThresholdGraph {
    pub fn vertex(&self, j: usize, r: usize) -> usize {
        j * self.b + r
    }

    pub fn color_of(&self, u: usize, v: usize) -> &ThresholdMatrix {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        &self.colors[crate::graphs::pair_index(self.m * self.b, a, b)]
    }

    pub fn large_of(&self, j: usize, jp: usize) -> &ThresholdMatrix {
        debug_assert!(j < jp);
        &self.large[crate::graphs::pair_index(self.m, j, jp)]
    }

    pub fn is_undesirable(&self, u: usize, v: usize) -> bool {
        self.undesirable.contains(&normalize_edge(u, v))
    }
}

/// Builds the threshold graph of a representative tuple. Requires
/// `0 < eta < rho < 1/|Sigma|`. The undesirable set is orderly by
/// construction, which is re-asserted by a full per-pair scan.
pub fn threshold_graph(
    g: &OrderedGraph,
    scheme: &RegularityScheme,
    w: &RepresentativeTuple,
    eta: &Rat,
    rho: &Rat,
) -> Result<ThresholdGraph> {
    let sigma = g.alphabet().size();
    if !(eta > &rat_zero()
        && eta < rho
        && *rho < rat_usize(1) / rat_usize(sigma))
    {
        return Err(Error::input("need 0 < eta < rho < 1/|Sigma|"));
    }
    let m = scheme.params.m;
    let b = scheme.params.b;
    let t = scheme.params.t;
    let mb = m * b;

    let tuples: Vec<Vec<Vec<usize>>> = (0..m)
        .flat_map(|j| (0..b).map(move |r| (j, r)))
        .map(|(j, r)| w.tuple(scheme, j, r))
        .collect();
    let mut colors = Vec::with_capacity(crate::graphs::pair_count(mb));
    for u in 0..mb {
        for v in (u + 1)..mb {
            colors.push(threshold_matrix(g, &tuples[u], &tuples[v], eta)?);
        }
    }
    let x_tuples: Vec<Vec<Vec<usize>>> = (0..m)
        .map(|j| (0..t).map(|s| scheme.mid_members(j, s)).collect())
        .collect();
    let mut large = Vec::with_capacity(crate::graphs::pair_count(m));
    for j in 0..m {
        for jp in (j + 1)..m {
            large.push(threshold_matrix(g, &x_tuples[j], &x_tuples[jp], rho)?);
        }
    }

    // rho-undesirable: at least rho t^2 entry pairs where the large matrix
    // is not contained in the small one
    let mut undesirable = EdgeSet::new();
    for j in 0..m {
        for jp in (j + 1)..m {
            let big = &large[crate::graphs::pair_index(m, j, jp)];
            for r in 0..b {
                for rp in 0..b {
                    let u = j * b + r;
                    let v = jp * b + rp;
                    let small = &colors[crate::graphs::pair_index(mb, u, v)];
                    let mut bad_pairs = 0usize;
                    for s in 0..t {
                        for sp in 0..t {
                            if !big.entry(s, sp).is_subset_of(&small.entry(s, sp)) {
                                bad_pairs += 1;
                            }
                        }
                    }
                    if rat_usize(bad_pairs) >= rho.clone() * rat_usize(t * t) {
                        undesirable.insert((u, v));
                    }
                }
            }
        }
    }

    // the deviation sum of the desirability bound, exact; mid-level
    // densities are shared across all (r, r') terms of a (s, s') pair
    let sigma_n = g.alphabet().size();
    let mut deviation = rat_zero();
    for j in 0..m {
        for jp in (j + 1)..m {
            for s in 0..t {
                for sp in 0..t {
                    let mid_dens =
                        densities_of(g, &x_tuples[j][s], &x_tuples[jp][sp], sigma_n);
                    for r in 0..b {
                        for rp in 0..b {
                            let wa = w.cell(scheme, j, r, s);
                            let wb = w.cell(scheme, jp, rp, sp);
                            let cell_dens = densities_of(g, wa, wb, sigma_n);
                            for c in 0..sigma_n {
                                let d = &cell_dens[c];
                                let e = &mid_dens[c];
                                deviation +=
                                    if d > e { d.clone() - e.clone() } else { e.clone() - d.clone() };
                            }
                        }
                    }
                }
            }
        }
    }
    let norm = rat_usize(m * (m - 1) / 2) * rat_usize(t * t) * rat_usize(b * b);
    let deviation_sum = if m >= 2 { deviation / norm } else { rat_zero() };

    let out = ThresholdGraph {
        m,
        b,
        t,
        eta: eta.clone(),
        rho: rho.clone(),
        colors,
        large,
        undesirable,
        deviation_sum,
    };
    assert_orderly(&out)?;
    Ok(out)
}

/// Undesirability must depend only on the large-interval pair and the edge
/// color; exhaustive per-pair scan.
fn assert_orderly(h: &ThresholdGraph) -> Result<()> {
    use std::collections::BTreeMap;
    let mut seen: BTreeMap<(usize, usize, &ThresholdMatrix), bool> = BTreeMap::new();
    for j in 0..h.m {
        for jp in (j + 1)..h.m {
            for r in 0..h.b {
                for rp in 0..h.b {
                    let u = h.vertex(j, r);
                    let v = h.vertex(jp, rp);
                    let color = h.color_of(u, v);
                    let in_b = h.is_undesirable(u, v);
                    match seen.get(&(j, jp, color)) {
                        Some(&prev) if prev != in_b => {
                            return Err(Error::internal(
                                "undesirable set is not orderly",
                            ));
                        }
                        _ => {
                            seen.insert((j, jp, color), in_b);
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct DesirabilityVerdict {
    pub desirable: bool,
    pub undesirable_count: usize,
    #[serde(serialize_with = "crate::metrics::serialize_rat")]
    pub threshold: Rat,
    #[serde(serialize_with = "crate::metrics::serialize_rat")]
    pub deviation_sum: Rat,
}

/// Desirable means fewer than `rho C(m,2) b^2` undesirable edges; the
/// deviation sum is returned for diagnostics.
pub fn check_desirable(h: &ThresholdGraph, rho: &Rat) -> DesirabilityVerdict {
    let threshold =
        rho.clone() * rat_usize(h.m * (h.m - 1) / 2) * rat_usize(h.b * h.b);
    DesirabilityVerdict {
        desirable: rat_usize(h.undesirable.len()) < threshold,
        undesirable_count: h.undesirable.len(),
        threshold,
        deviation_sum: h.deviation_sum.clone(),
    }
}

/// `d` small intervals per large interval with uniform colors within and
/// across, and few retained undesirable edges.
#[derive(Clone, Debug)]
pub struct NicelyColoredSubgraph {
    pub d: usize,
    /// `D_j`: the chosen subinterval indices `r` per large interval.
    pub picks: Vec<Vec<usize>>,
    /// `C_{jj'}` for `j <= j'`, packed with loops.
    colors: Vec<ThresholdMatrix>,
    pub retained_undesirable: usize,
    pub tries: usize,
}

impl NicelyColoredSubgraph {
    pub fn color(&self, j: usize, jp: usize) -> &ThresholdMatrix {
        let (a, b) = if j <= jp { (j, jp) } else { (jp, j) };
        &self.colors[crate::graphs::looped_pair_index(self.picks.len(), a, b)]
    }
}

/// Extracts a nicely colored subgraph by running the orderly Ramsey step
/// on the threshold graph, with the small intervals of each large interval
/// as one class. With `d = 1` the within-interval color is vacuous and set
/// to the full matrix, so same-interval cleaning keeps every edge.
pub fn nicely_colored(
    h: &ThresholdGraph,
    sigma: usize,
    d: usize,
    rng: &mut ChaCha8Rng,
    max_tries: usize,
) -> Result<NicelyColoredSubgraph> {
    if d == 0 {
        return Err(Error::input("d must be positive"));
    }
    if d > h.b {
        return Err(Error::stage("nicely_colored", format!(
            "d = {d} exceeds the {} subintervals per interval",
            h.b
        )));
    }
    let m = h.m;
    let mb = m * h.b;
    // palette of distinct matrices, canonical order
    let mut palette: Vec<&ThresholdMatrix> = h.colors.iter().collect();
    palette.sort();
    palette.dedup();
    let palette_index = |mat: &ThresholdMatrix| -> usize {
        palette.binary_search(&mat).expect("palette covers all colors")
    };
    let mut symbols: Vec<String> = (0..palette.len()).map(|i| format!("M{i}")).collect();
    while symbols.len() < 2 {
        symbols.push(format!("_pad{}", symbols.len()));
    }
    let alphabet = ColorAlphabet::new(symbols)?;
    let gamma_graph = OrderedGraph::from_fn(mb, alphabet, |u, v| {
        Color(palette_index(h.color_of(u, v)))
    })?;
    let classes: Vec<Vec<usize>> =
        (0..m).map(|j| (j * h.b..(j + 1) * h.b).collect()).collect();
    let outcome = orderly_ramsey(&gamma_graph, classes, &h.undesirable, d, rng, max_tries)?;

    let picks: Vec<Vec<usize>> = outcome
        .picks
        .iter()
        .map(|class| class.iter().map(|&v| v % h.b).collect())
        .collect();
    // colors from the actual matrices (not the palette) re-checked below
    let mut colors = Vec::with_capacity(crate::graphs::looped_pair_count(m));
    for j in 0..m {
        for jp in j..m {
            let mat = if j == jp {
                if d >= 2 {
                    let u = h.vertex(j, picks[j][0]);
                    let v = h.vertex(j, picks[j][1]);
                    h.color_of(u, v).clone()
                } else {
                    ThresholdMatrix::full(h.t, sigma)
                }
            } else {
                let u = h.vertex(j, picks[j][0]);
                let v = h.vertex(jp, picks[jp][0]);
                h.color_of(u, v).clone()
            };
            colors.push(mat);
        }
    }
    let out = NicelyColoredSubgraph {
        d,
        picks,
        colors,
        retained_undesirable: outcome.retained,
        tries: outcome.tries,
    };
    // re-verify uniformity against the threshold graph
    for j in 0..m {
        for (ai, &r) in out.picks[j].iter().enumerate() {
            for &rp in out.picks[j].iter().skip(ai + 1) {
                if d >= 2
                    && h.color_of(h.vertex(j, r), h.vertex(j, rp)) != out.color(j, j)
                {
                    return Err(Error::internal("within-interval color not uniform"));
                }
            }
            for jp in (j + 1)..m {
                for &rp in &out.picks[jp] {
                    if h.color_of(h.vertex(j, r), h.vertex(jp, rp)) != out.color(j, jp) {
                        return Err(Error::internal("cross-interval color not uniform"));
                    }
                }
            }
        }
    }
    // retained bound: 2 rho C(m,2) d^2
    let bound = rat_usize(2)
        * h.rho.clone()
        * rat_usize(m * (m - 1) / 2)
        * rat_usize(d * d);
    if rat_usize(out.retained_undesirable) > bound {
        return Err(Error::internal("retained undesirable exceeds the bound"));
    }
    Ok(out)
}

/// Per-case counts of the cleaning audit; the cases partition the changed
/// edges, so they sum to the total.
#[derive(Clone, Debug, Default, Serialize)]
pub struct CleanAudit {
    pub inside_interval: u64,
    pub undesirable_pair: u64,
    pub threshold_mismatch: u64,
    pub low_density: u64,
    pub total: u64,
}

impl CleanAudit {
    pub fn cases_sum_to_total(&self) -> bool {
        self.inside_interval + self.undesirable_pair + self.threshold_mismatch
            + self.low_density
            == self.total
    }
}

/// Recolors every pair whose color is outside the allowed set dictated by
/// the nicely colored subgraph, into the lexicographically smallest allowed
/// color. The audit attributes each change to the first matching proof
/// case: same interval, retained-undesirable interval pair, threshold
/// mismatch, or low density.
pub fn clean(
    g: &OrderedGraph,
    scheme: &RegularityScheme,
    d: &NicelyColoredSubgraph,
    h: &ThresholdGraph,
) -> Result<(OrderedGraph, CleanAudit)> {
    if d.picks.len() != scheme.params.m {
        return Err(Error::input("subgraph interval count mismatch"));
    }
    let m = scheme.params.m;
    // J: large-interval pairs whose D x D retains an undesirable edge
    let mut bad_pairs = vec![false; crate::graphs::pair_count(m.max(2))];
    for j in 0..m {
        for jp in (j + 1)..m {
            let any = d.picks[j].iter().any(|&r| {
                d.picks[jp]
                    .iter()
                    .any(|&rp| h.is_undesirable(h.vertex(j, r), h.vertex(jp, rp)))
            });
            if any {
                bad_pairs[crate::graphs::pair_index(m, j, jp)] = true;
            }
        }
    }

    let mut audit = CleanAudit::default();
    let mid_count = scheme.mid.k();
    let mid_members: Vec<Vec<usize>> = (0..mid_count)
        .map(|label| scheme.mid_members(label / scheme.params.t, label % scheme.params.t))
        .collect();
    // lazy per-(mid pair) density tables for the low-density case
    let mut density_cache: HashMap<(usize, usize), Vec<Rat>> = HashMap::new();

    let cleaned = OrderedGraph::from_fn(g.n(), g.alphabet().clone(), |u, v| {
        let (ju, su) = scheme.mid_coords(u);
        let (jv, sv) = scheme.mid_coords(v);
        let allowed = d.color(ju, jv).entry(su, sv);
        let c = g.color(u, v);
        if allowed.contains(c) {
            c
        } else {
            allowed.min_color().expect("threshold entries are non-empty")
        }
    })?;

    let sigma_n = g.alphabet().size();
    for (u, v) in g.pairs() {
        if cleaned.color(u, v) == g.color(u, v) {
            continue;
        }
        audit.total += 1;
        let (ju, su) = scheme.mid_coords(u);
        let (jv, sv) = scheme.mid_coords(v);
        if ju == jv {
            audit.inside_interval += 1;
            continue;
        }
        debug_assert!(ju < jv);
        if bad_pairs[crate::graphs::pair_index(m, ju, jv)] {
            audit.undesirable_pair += 1;
            continue;
        }
        let big = h.large_of(ju, jv).entry(su, sv);
        let allowed = d.color(ju, jv).entry(su, sv);
        if !big.is_subset_of(&allowed) {
            audit.threshold_mismatch += 1;
            continue;
        }
        // remaining case: the old color was sparse at the mid level
        let key = (scheme.mid_label(ju, su), scheme.mid_label(jv, sv));
        let dens = density_cache.entry(key).or_insert_with(|| {
            densities_of(g, &mid_members[key.0], &mid_members[key.1], sigma_n)
        });
        if dens[g.color(u, v).0] < h.rho {
            audit.low_density += 1;
        } else {
            return Err(Error::internal(
                "changed edge fits no cleaning case; this is a bug",
            ));
        }
    }
    Ok((cleaned, audit))
}

/// Witness cells extracted from a forbidden copy in the cleaned graph.
#[derive(Clone, Debug)]
pub struct WitnessCells {
    pub pattern: usize,
    /// `(j, r, s)` coordinates, strictly increasing in `(j, r)`.
    pub cells: Vec<(usize, usize, usize)>,
    /// Verified pairwise densities of the pattern colors.
    pub densities: Vec<Rat>,
}

/// Maps a forbidden copy in the cleaned graph to representative cells whose
/// pairwise densities in the original graph certify many copies. When the
/// found copy is larger than `d` (possible with a `d_star`-driven `d`), the
/// embeddability route of the looped interval graph picks a smaller family
/// member first. Returns None iff the cleaned graph is family-free.
pub fn extract_witnesses(
    g_original: &OrderedGraph,
    g_clean: &OrderedGraph,
    scheme: &RegularityScheme,
    d: &NicelyColoredSubgraph,
    w: &RepresentativeTuple,
    fam: &ForbiddenFamily,
    eta: &Rat,
) -> Result<Option<WitnessCells>> {
    let Some((pattern_id, tuple)) = crate::tester::contains_any(g_clean, fam)? else {
        return Ok(None);
    };
    let n_f = fam.patterns()[pattern_id].n();
    let (pattern, coords) = if n_f <= d.d {
        // direct route: vertex i sits in mid part (j_i, s_i); take the
        // i-th subinterval of D_{j_i}
        let mut coords = Vec::with_capacity(n_f);
        for (i, &v) in tuple.iter().enumerate() {
            let (j, s) = scheme.mid_coords(v);
            let r = d.picks[j][i];
            coords.push((j, r, s));
        }
        (pattern_id, coords)
    } else {
        // embeddability route through the looped interval graph
        let looped = crate::embed::loops_from_d(d)?;
        let mut choice = None;
        let mut by_size: Vec<usize> = (0..fam.patterns().len()).collect();
        by_size.sort_by_key(|&i| fam.patterns()[i].n());
        for pid in by_size {
            let f = &fam.patterns()[pid];
            if f.n() > d.d {
                continue;
            }
            if let Some(witness) = crate::embed::embeddable(f, &looped)? {
                choice = Some((pid, witness));
                break;
            }
        }
        let Some((pid, emb)) = choice else {
            return Err(Error::internal(
                "cleaned copy exists but no small family member embeds",
            ));
        };
        let mut coords = Vec::with_capacity(fam.patterns()[pid].n());
        for (i, &j) in emb.map.iter().enumerate() {
            let r = d.picks[j][i];
            coords.push((j, r, emb.slots[i]));
        }
        (pid, coords)
    };

    // re-verify both conditions before returning
    for pair in coords.windows(2) {
        let (j0, r0, _) = pair[0];
        let (j1, r1, _) = pair[1];
        if !(j1 > j0 || (j1 == j0 && r1 > r0)) {
            return Err(Error::internal("witness cells not in increasing order"));
        }
    }
    let f = &fam.patterns()[pattern];
    let mut densities = Vec::new();
    for i in 0..coords.len() {
        for ip in (i + 1)..coords.len() {
            let (j0, r0, s0) = coords[i];
            let (j1, r1, s1) = coords[ip];
            let a = w.cell(scheme, j0, r0, s0);
            let b = w.cell(scheme, j1, r1, s1);
            let dens = crate::metrics::color_density(g_original, a, b, f.color(i, ip))?;
            if dens < *eta {
                return Err(Error::internal(format!(
                    "witness density below eta for pattern pair ({i},{ip})"
                )));
            }
            densities.push(dens);
        }
    }
    Ok(Some(WitnessCells { pattern, cells: coords, densities }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::ColorAlphabet;
    use crate::partition::{Equipartition, IntervalPartition};
    use crate::rat::rat;
    use crate::rng::stream_rng;
    use crate::scheme::build_scheme;

    fn ab() -> ColorAlphabet {
        ColorAlphabet::new(["a", "b"]).unwrap()
    }

    fn mono_scheme(n: usize) -> (OrderedGraph, RegularityScheme) {
        let g = OrderedGraph::constant(n, ab(), Color(0)).unwrap();
        let p = Equipartition::canonical(n, 2).unwrap();
        let j = IntervalPartition::canonical(n, 2).unwrap();
        let scheme = build_scheme(&g, &p, &j, 2, &rat(1, 2), Some(2)).unwrap();
        (g, scheme)
    }

    #[test]
    fn threshold_matrix_monochromatic() {
        let g = OrderedGraph::constant(8, ab(), Color(1)).unwrap();
        let a = vec![vec![0, 1], vec![2, 3]];
        let b = vec![vec![4, 5], vec![6, 7]];
        let m = threshold_matrix(&g, &a, &b, &rat(1, 4)).unwrap();
        for s in 0..2 {
            for sp in 0..2 {
                assert_eq!(m.entry(s, sp).len(), 1);
                assert!(m.entry(s, sp).contains(Color(1)));
            }
        }
    }

    #[test]
    fn threshold_matrix_tiny_eta_collects_present_colors() {
        let mut rng = stream_rng(50, "threshold.tiny", 0);
        let g = OrderedGraph::from_fn(10, ab(), |_, _| Color(rng.gen_range(0..2))).unwrap();
        let a = vec![vec![0, 1, 2]];
        let b = vec![vec![5, 6, 7, 8]];
        let m = threshold_matrix(&g, &a, &b, &rat(1, 1000)).unwrap();
        // eta near zero: entry = colors with at least one occurrence
        let mut present = ColorSet::empty();
        for &u in &a[0] {
            for &v in &b[0] {
                present.insert(g.color(u, v));
            }
        }
        assert_eq!(m.entry(0, 0), present);
    }

    #[test]
    fn threshold_matrix_matches_density_oracle() {
        let mut rng = stream_rng(51, "threshold.oracle", 0);
        let g = OrderedGraph::from_fn(12, ab(), |_, _| Color(rng.gen_range(0..2))).unwrap();
        let a = vec![vec![0, 1], vec![2, 3, 4]];
        let b = vec![vec![6, 7, 8], vec![9, 10]];
        let eta = rat(1, 3);
        let m = threshold_matrix(&g, &a, &b, &eta).unwrap();
        for s in 0..2 {
            for sp in 0..2 {
                for c in g.alphabet().colors() {
                    let dens =
                        crate::metrics::color_density(&g, &a[s], &b[sp], c).unwrap();
                    assert_eq!(m.entry(s, sp).contains(c), dens >= eta);
                }
            }
        }
    }

    #[test]
    fn threshold_matrix_rejects_large_eta() {
        let g = OrderedGraph::constant(4, ab(), Color(0)).unwrap();
        let a = vec![vec![0]];
        let b = vec![vec![1]];
        assert!(threshold_matrix(&g, &a, &b, &rat(1, 2)).is_err());
    }

    #[test]
    fn full_representatives_on_monochromatic_scheme() {
        let (g, scheme) = mono_scheme(32);
        let mut rng = stream_rng(52, "threshold.full", 0);
        let w = representatives(
            &g,
            &scheme,
            RepStrategy::Full,
            &RepParams { alpha: rat(1, 100), beta: rat(1, 4) },
            &mut rng,
        )
        .unwrap();
        assert_eq!(w.quality.mu_cells, Some(rat_zero()));
        let h = threshold_graph(&g, &scheme, &w, &rat(1, 8), &rat(1, 4)).unwrap();
        assert!(h.undesirable.is_empty());
        // all colors identical: matrix {a} everywhere
        for mat in &h.colors {
            for e in mat.entries() {
                assert_eq!(e.len(), 1);
            }
        }
        let verdict = check_desirable(&h, &rat(1, 4));
        assert!(verdict.desirable);
        assert_eq!(verdict.undesirable_count, 0);
    }

    #[test]
    fn desirability_deviation_bound_on_random_instances() {
        // if the deviation sum is below rho^3 / 2, the graph is
        // rho-desirable
        let mut rng = stream_rng(53, "threshold.dev", 0);
        for trial in 0..5 {
            let n = 48;
            let g =
                OrderedGraph::from_fn(n, ab(), |_, _| Color(rng.gen_range(0..2))).unwrap();
            let p = Equipartition::canonical(n, 2).unwrap();
            let j = IntervalPartition::canonical(n, 2).unwrap();
            let scheme = build_scheme(&g, &p, &j, 2, &rat(1, 2), Some(2)).unwrap();
            let w = representatives(
                &g,
                &scheme,
                RepStrategy::Full,
                &RepParams { alpha: rat(1, 100), beta: rat(1, 4) },
                &mut rng,
            )
            .unwrap();
            let rho = rat(1, 4);
            let h = threshold_graph(&g, &scheme, &w, &rat(1, 8), &rho).unwrap();
            let verdict = check_desirable(&h, &rho);
            let rho_cubed_half = rho.clone() * rho.clone() * rho.clone() / rat(2, 1);
            if verdict.deviation_sum < rho_cubed_half {
                assert!(verdict.desirable, "trial {trial}");
            }
        }
    }

    #[test]
    fn planted_shift_makes_exactly_one_pair_undesirable() {
        // two large intervals; colors uniform except between subinterval
        // r=0 of interval 0 and r=0 of interval 1, where color b vanishes
        let n = 64;
        let quarter = n / 4; // subinterval size with m=2, b=2
        let g = OrderedGraph::from_fn(n, ab(), |i, j| {
            let sub_i = i / quarter;
            let sub_j = j / quarter;
            if (sub_i, sub_j) == (0, 2) {
                Color(0)
            } else {
                // alternate colors densely so both are everywhere dense
                Color((i + j) % 2)
            }
        })
        .unwrap();
        let p = Equipartition::canonical(n, 2).unwrap();
        let j = IntervalPartition::canonical(n, 2).unwrap();
        let scheme = build_scheme(&g, &p, &j, 2, &rat(1, 2), Some(2)).unwrap();
        let mut rng = stream_rng(54, "threshold.plant", 0);
        let w = representatives(
            &g,
            &scheme,
            RepStrategy::Full,
            &RepParams { alpha: rat(1, 100), beta: rat(1, 4) },
            &mut rng,
        )
        .unwrap();
        let h = threshold_graph(&g, &scheme, &w, &rat(1, 8), &rat(1, 4)).unwrap();
        // subintervals 0 and 2 form the planted pair
        assert!(h.is_undesirable(0, 2));
        assert_eq!(h.undesirable.len(), 1);
    }

    #[test]
    fn nicely_colored_uniform_palette_succeeds() {
        let (g, scheme) = mono_scheme(32);
        let mut rng = stream_rng(55, "threshold.nice", 0);
        let w = representatives(
            &g,
            &scheme,
            RepStrategy::Full,
            &RepParams { alpha: rat(1, 100), beta: rat(1, 4) },
            &mut rng,
        )
        .unwrap();
        let h = threshold_graph(&g, &scheme, &w, &rat(1, 8), &rat(1, 4)).unwrap();
        let nice = nicely_colored(&h, 2, 2, &mut rng, 50).unwrap();
        assert_eq!(nice.picks.len(), 2);
        assert!(nice.picks.iter().all(|p| p.len() == 2));
        assert_eq!(nice.retained_undesirable, 0);
    }

    #[test]
    fn clean_identity_when_everything_allowed() {
        let (g, scheme) = mono_scheme(32);
        let mut rng = stream_rng(56, "threshold.cleanid", 0);
        let w = representatives(
            &g,
            &scheme,
            RepStrategy::Full,
            &RepParams { alpha: rat(1, 100), beta: rat(1, 4) },
            &mut rng,
        )
        .unwrap();
        let h = threshold_graph(&g, &scheme, &w, &rat(1, 8), &rat(1, 4)).unwrap();
        let nice = nicely_colored(&h, 2, 2, &mut rng, 50).unwrap();
        let (cleaned, audit) = clean(&g, &scheme, &nice, &h).unwrap();
        assert_eq!(cleaned, g);
        assert_eq!(audit.total, 0);
        assert!(audit.cases_sum_to_total());
    }

    #[test]
    fn clean_recolors_planted_disallowed_color() {
        // colors alternate densely except a handful of planted edges of
        // color b inside a mid-part pair where b is otherwise absent
        let n = 64;
        let g0 = OrderedGraph::from_fn(n, ab(), |i, j| {
            if i / 32 == j / 32 {
                Color((i + j) % 2)
            } else {
                Color(0)
            }
        })
        .unwrap();
        // plant 3 isolated b-edges across the halves
        let mut g = g0.clone();
        let planted = [(0usize, 40usize), (5, 50), (10, 60)];
        for &(u, v) in &planted {
            g = g.recolored(u, v, Color(1)).unwrap();
        }
        let p = Equipartition::canonical(n, 2).unwrap();
        let j = IntervalPartition::canonical(n, 2).unwrap();
        let scheme = build_scheme(&g, &p, &j, 2, &rat(1, 2), Some(2)).unwrap();
        let mut rng = stream_rng(57, "threshold.cleanplant", 0);
        let w = representatives(
            &g,
            &scheme,
            RepStrategy::Full,
            &RepParams { alpha: rat(1, 100), beta: rat(1, 4) },
            &mut rng,
        )
        .unwrap();
        let h = threshold_graph(&g, &scheme, &w, &rat(1, 16), &rat(1, 4)).unwrap();
        let nice = nicely_colored(&h, 2, 2, &mut rng, 200).unwrap();
        let (cleaned, audit) = clean(&g, &scheme, &nice, &h).unwrap();
        assert!(audit.cases_sum_to_total());
        // every changed edge was recolored to the smallest allowed color
        for (u, v) in g.pairs() {
            if cleaned.color(u, v) != g.color(u, v) {
                let (ju, su) = scheme.mid_coords(u);
                let (jv, sv) = scheme.mid_coords(v);
                let allowed = nice.color(ju, jv).entry(su, sv);
                assert!(!allowed.contains(g.color(u, v)));
                assert_eq!(cleaned.color(u, v), allowed.min_color().unwrap());
            }
        }
        // the planted b-edges sit in cross-half positions where b has
        // density ~3/1024 < eta, so they must be recolored
        for &(u, v) in &planted {
            assert_eq!(cleaned.color(u, v), Color(0));
        }
    }
}
