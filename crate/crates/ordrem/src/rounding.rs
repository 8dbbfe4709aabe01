//! Laminar multipartitions and simultaneous integer rounding under two
//! multipartition constraint systems, via a feasible circulation with lower
//! bounds.
//!
//! Given reals `lambda_i` and multipartitions `M`, `N` of the same ground
//! set, there are integers `ell_i in {floor(lambda_i), ceil(lambda_i)}`
//! whose sums over every member set of `M` and of `N` (and the total) are
//! floor/ceil of the corresponding real sums. Two constraint systems are
//! the most this can support: with three it already fails, which
//! [`feasible_roundings`] can demonstrate by brute force.

use num::bigint::BigInt;
use num::Integer;
use num::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rat::Rat;

/// A laminar family over `0..ground` containing the ground set and every
/// singleton. Stored deduplicated in a canonical order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Multipartition {
    ground: usize,
    sets: Vec<Vec<usize>>,
}

/// Outcome of [`validate_multipartition`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum MultipartitionCheck {
    Ok,
    MissingGround,
    MissingSingleton(usize),
    /// Two member sets that are neither disjoint nor nested.
    Crossing(Vec<usize>, Vec<usize>),
    OutOfRange(usize),
}

/// Checks laminarity plus the ground-set and singleton requirements; the
/// report names the first offending pair instead of erroring.
pub fn validate_multipartition(ground: usize, sets: &[Vec<usize>]) -> MultipartitionCheck {
    let canon = canonical_sets(ground, sets);
    for set in &canon {
        if let Some(&bad) = set.iter().find(|&&e| e >= ground) {
            return MultipartitionCheck::OutOfRange(bad);
        }
    }
    let full: Vec<usize> = (0..ground).collect();
    if !canon.contains(&full) {
        return MultipartitionCheck::MissingGround;
    }
    for i in 0..ground {
        if !canon.contains(&vec![i]) {
            return MultipartitionCheck::MissingSingleton(i);
        }
    }
    for i in 0..canon.len() {
        for j in (i + 1)..canon.len() {
            if crosses(&canon[i], &canon[j]) {
                return MultipartitionCheck::Crossing(canon[i].clone(), canon[j].clone());
            }
        }
    }
    MultipartitionCheck::Ok
}

/// Whether two sorted sets intersect without either containing the other.
fn crosses(a: &[usize], b: &[usize]) -> bool {
    let inter = intersection_size(a, b);
    inter > 0 && inter < a.len() && inter < b.len()
}

fn intersection_size(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    intersection_size(a, b) == a.len()
}

fn canonical_sets(_ground: usize, sets: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut canon: Vec<Vec<usize>> = sets
        .iter()
        .map(|s| {
            let mut s = s.clone();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    canon.sort_by(|a, b| {
        b.len()
            .cmp(&a.len())
            .then_with(|| a.cmp(b))
    });
    canon.dedup();
    canon
}

impl Multipartition {
    /// The full family, explicitly given; must already satisfy the
    /// multipartition requirements.
    pub fn with_sets(ground: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        if ground == 0 {
            return Err(Error::input("empty ground set"));
        }
        match validate_multipartition(ground, &sets) {
            MultipartitionCheck::Ok => Ok(Multipartition {
                ground,
                sets: canonical_sets(ground, &sets),
            }),
            bad => Err(Error::input(format!("not a multipartition: {bad:?}"))),
        }
    }

    /// Group sets plus the ground set and the singletons.
    pub fn from_groups(ground: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        let mut sets = groups;
        sets.push((0..ground).collect());
        for i in 0..ground {
            sets.push(vec![i]);
        }
        Multipartition::with_sets(ground, sets)
    }

    /// Ground set and singletons only.
    pub fn trivial(ground: usize) -> Result<Self> {
        Multipartition::from_groups(ground, Vec::new())
    }

    pub fn ground(&self) -> usize {
        self.ground
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    /// Index of the minimal proper superset of `sets[idx]` (unique by
    /// laminarity); None for the ground set.
    fn parent(&self, idx: usize) -> Option<usize> {
        let me = &self.sets[idx];
        let mut best: Option<usize> = None;
        for (j, other) in self.sets.iter().enumerate() {
            if j == idx || other.len() < me.len() {
                continue;
            }
            if other.len() == me.len() && other == me {
                continue;
            }
            if is_subset(me, other) {
                match best {
                    Some(b) if self.sets[b].len() <= other.len() => {}
                    _ => best = Some(j),
                }
            }
        }
        best
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeFlow {
    pub label: String,
    pub lo: i64,
    pub hi: i64,
    pub flow: i64,
}

/// Integer rounding plus the full per-edge flow certificate of the network
/// that produced it.
#[derive(Clone, Debug, Serialize)]
pub struct RoundingResult {
    pub values: Vec<i64>,
    pub flow_certificate: Vec<EdgeFlow>,
}

impl RoundingResult {
    /// Every certificate flow within its bounds.
    pub fn certificate_ok(&self) -> bool {
        self.flow_certificate
            .iter()
            .all(|e| e.lo <= e.flow && e.flow <= e.hi)
    }
}

/// Exact floor/ceil of a sum of rationals sharing denominator `den`.
fn bounds_of(nums: &[BigInt], den: &BigInt, idxs: &[usize]) -> (BigInt, BigInt) {
    let mut sum = BigInt::zero();
    for &i in idxs {
        sum += &nums[i];
    }
    (sum.div_floor(den), sum.div_ceil(den))
}

fn to_i64(x: &BigInt, what: &str) -> Result<i64> {
    i64::try_from(x.clone())
        .map_err(|_| Error::capacity(format!("{what} exceeds i64 range")))
}

/// Rounds `lambda` under the two multipartition constraint systems. The
/// construction mirrors the feasibility proof: one node per member set of
/// `M` and of `N`, covering-pair edges down the `M` order and up the `N`
/// order, an element edge per singleton, and a return edge closing the
/// circulation; every edge is bounded by floor/ceil of its partial sum.
/// Valid inputs always succeed; an infeasible network signals a bug.
pub fn round_two(
    lambda: &[Rat],
    m: &Multipartition,
    n: &Multipartition,
) -> Result<RoundingResult> {
    let ground = lambda.len();
    if ground == 0 {
        return Err(Error::input("empty lambda"));
    }
    if m.ground() != ground || n.ground() != ground {
        return Err(Error::input("multipartition ground size mismatch"));
    }

    // common denominator so every partial sum floors exactly
    let mut den = BigInt::one();
    for l in lambda {
        den = den.lcm(l.denom());
    }
    let nums: Vec<BigInt> = lambda
        .iter()
        .map(|l| l.numer() * (&den / l.denom()))
        .collect();

    // node layout: u-nodes for M sets, then w-nodes for N sets
    let m_count = m.sets().len();
    let n_count = n.sets().len();
    let u_node = |i: usize| i;
    let w_node = |i: usize| m_count + i;
    let node_count = m_count + n_count;

    let m_singleton: Vec<usize> = singleton_index(m)?;
    let n_singleton: Vec<usize> = singleton_index(n)?;
    let m_root = root_index(m)?;
    let n_root = root_index(n)?;

    let mut net = LowerBoundNetwork::new(node_count);
    // M covering pairs: u_parent -> u_child with the child's bounds
    for (idx, set) in m.sets().iter().enumerate() {
        if let Some(parent) = m.parent(idx) {
            let (lo, hi) = bounds_of(&nums, &den, set);
            net.add_edge(
                u_node(parent),
                u_node(idx),
                to_i64(&lo, "flow bound")?,
                to_i64(&hi, "flow bound")?,
                format!("M:{set:?}"),
            );
        }
    }
    // N covering pairs: w_child -> w_parent
    for (idx, set) in n.sets().iter().enumerate() {
        if let Some(parent) = n.parent(idx) {
            let (lo, hi) = bounds_of(&nums, &den, set);
            net.add_edge(
                w_node(idx),
                w_node(parent),
                to_i64(&lo, "flow bound")?,
                to_i64(&hi, "flow bound")?,
                format!("N:{set:?}"),
            );
        }
    }
    // element edges u_i -> w_i
    let mut element_edges = Vec::with_capacity(ground);
    for i in 0..ground {
        let (lo, hi) = bounds_of(&nums, &den, &[i]);
        let e = net.add_edge(
            u_node(m_singleton[i]),
            w_node(n_singleton[i]),
            to_i64(&lo, "flow bound")?,
            to_i64(&hi, "flow bound")?,
            format!("elem:{i}"),
        );
        element_edges.push(e);
    }
    // close the circulation with the total-flow bounds
    let all: Vec<usize> = (0..ground).collect();
    let (lo, hi) = bounds_of(&nums, &den, &all);
    net.add_edge(
        w_node(n_root),
        u_node(m_root),
        to_i64(&lo, "flow bound")?,
        to_i64(&hi, "flow bound")?,
        "total".to_string(),
    );

    let flows = net.solve().ok_or_else(|| {
        Error::internal("rounding network infeasible; this is a bug")
    })?;
    let values: Vec<i64> = element_edges.iter().map(|&e| flows[e]).collect();
    let flow_certificate = net
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| EdgeFlow { label: e.label.clone(), lo: e.lo, hi: e.hi, flow: flows[i] })
        .collect();
    Ok(RoundingResult { values, flow_certificate })
}

fn singleton_index(m: &Multipartition) -> Result<Vec<usize>> {
    let mut idx = vec![usize::MAX; m.ground()];
    for (i, set) in m.sets().iter().enumerate() {
        if set.len() == 1 {
            idx[set[0]] = i;
        }
    }
    if idx.iter().any(|&i| i == usize::MAX) {
        return Err(Error::internal("multipartition lost a singleton"));
    }
    Ok(idx)
}

fn root_index(m: &Multipartition) -> Result<usize> {
    m.sets()
        .iter()
        .position(|s| s.len() == m.ground())
        .ok_or_else(|| Error::internal("multipartition lost the ground set"))
}

/// Feasible circulation with lower bounds via the excess-demand reduction
/// to max flow; deterministic BFS augmentation in edge insertion order.
struct LowerBoundNetwork {
    node_count: usize,
    edges: Vec<BoundedEdge>,
}

struct BoundedEdge {
    from: usize,
    to: usize,
    lo: i64,
    hi: i64,
    label: String,
}

impl LowerBoundNetwork {
    fn new(node_count: usize) -> Self {
        LowerBoundNetwork { node_count, edges: Vec::new() }
    }

    fn add_edge(&mut self, from: usize, to: usize, lo: i64, hi: i64, label: String) -> usize {
        debug_assert!(lo <= hi);
        self.edges.push(BoundedEdge { from, to, lo, hi, label });
        self.edges.len() - 1
    }

    /// Per-edge flows within bounds satisfying conservation, or None.
    fn solve(&self) -> Option<Vec<i64>> {
        let s = self.node_count;
        let t = self.node_count + 1;
        let mut mf = MaxFlow::new(self.node_count + 2);
        let mut excess = vec![0i64; self.node_count];
        let mut arc_of_edge = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            excess[e.to] += e.lo;
            excess[e.from] -= e.lo;
            arc_of_edge.push(mf.add_edge(e.from, e.to, e.hi - e.lo));
        }
        let mut need = 0i64;
        for (v, &x) in excess.iter().enumerate() {
            match x.cmp(&0) {
                std::cmp::Ordering::Greater => {
                    mf.add_edge(s, v, x);
                    need += x;
                }
                std::cmp::Ordering::Less => {
                    mf.add_edge(v, t, -x);
                }
                std::cmp::Ordering::Equal => {}
            }
        }
        let pushed = mf.run(s, t);
        if pushed != need {
            return None;
        }
        Some(
            self.edges
                .iter()
                .zip(&arc_of_edge)
                .map(|(e, &a)| e.lo + mf.flow_on(a))
                .collect(),
        )
    }
}

/// Plain BFS augmenting-path max flow; adjacency kept in insertion order so
/// the chosen flow (and therefore every rounding) is deterministic.
struct MaxFlow {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
}

impl MaxFlow {
    fn new(nodes: usize) -> Self {
        MaxFlow { adj: vec![Vec::new(); nodes], to: Vec::new(), cap: Vec::new() }
    }

    /// Returns the arc id of the forward edge.
    fn add_edge(&mut self, from: usize, to: usize, cap: i64) -> usize {
        let id = self.to.len();
        self.adj[from].push(id);
        self.to.push(to);
        self.cap.push(cap);
        self.adj[to].push(id + 1);
        self.to.push(from);
        self.cap.push(0);
        id
    }

    fn flow_on(&self, arc: usize) -> i64 {
        // flow equals the residual accumulated on the reverse arc
        self.cap[arc ^ 1]
    }

    fn run(&mut self, s: usize, t: usize) -> i64 {
        let mut total = 0i64;
        loop {
            let mut prev_arc = vec![usize::MAX; self.adj.len()];
            let mut seen = vec![false; self.adj.len()];
            let mut queue = std::collections::VecDeque::new();
            seen[s] = true;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for &a in &self.adj[u] {
                    let v = self.to[a];
                    if !seen[v] && self.cap[a] > 0 {
                        seen[v] = true;
                        prev_arc[v] = a;
                        queue.push_back(v);
                    }
                }
            }
            if !seen[t] {
                return total;
            }
            // bottleneck
            let mut bottleneck = i64::MAX;
            let mut v = t;
            while v != s {
                let a = prev_arc[v];
                bottleneck = bottleneck.min(self.cap[a]);
                v = self.to[a ^ 1];
            }
            let mut v = t;
            while v != s {
                let a = prev_arc[v];
                self.cap[a] -= bottleneck;
                self.cap[a ^ 1] += bottleneck;
                v = self.to[a ^ 1];
            }
            total += bottleneck;
        }
    }
}

/// Hard cap for the brute-force rounding oracle.
pub const FEASIBLE_ROUNDINGS_CAP: usize = 16;

/// Exhaustively lists every integer sequence with `ell_i` in
/// floor/ceil of `lambda_i` satisfying the floor/ceil sum constraint for
/// every set of every supplied family, plus the total. The families here
/// are arbitrary set lists, which is exactly what the three-multipartition
/// counterexample needs.
pub fn feasible_roundings(
    lambda: &[Rat],
    families: &[Vec<Vec<usize>>],
) -> Result<Vec<Vec<i64>>> {
    let ground = lambda.len();
    if ground == 0 {
        return Err(Error::input("empty lambda"));
    }
    if ground > FEASIBLE_ROUNDINGS_CAP {
        return Err(Error::capacity(format!(
            "brute-force rounding capped at ground size {FEASIBLE_ROUNDINGS_CAP}"
        )));
    }
    for fam in families {
        for set in fam {
            if set.iter().any(|&e| e >= ground) {
                return Err(Error::input("family set element out of range"));
            }
        }
    }
    let mut den = BigInt::one();
    for l in lambda {
        den = den.lcm(l.denom());
    }
    let nums: Vec<BigInt> = lambda
        .iter()
        .map(|l| l.numer() * (&den / l.denom()))
        .collect();
    let floors: Vec<i64> = (0..ground)
        .map(|i| to_i64(&nums[i].div_floor(&den), "floor"))
        .collect::<Result<_>>()?;
    let ceils: Vec<i64> = (0..ground)
        .map(|i| to_i64(&nums[i].div_ceil(&den), "ceil"))
        .collect::<Result<_>>()?;
    // constraints: (indices, lo, hi)
    let mut constraints: Vec<(Vec<usize>, i64, i64)> = Vec::new();
    for fam in families {
        for set in fam {
            let mut idx = set.clone();
            idx.sort_unstable();
            idx.dedup();
            let (lo, hi) = bounds_of(&nums, &den, &idx);
            constraints.push((idx, to_i64(&lo, "bound")?, to_i64(&hi, "bound")?));
        }
    }
    let all: Vec<usize> = (0..ground).collect();
    let (lo, hi) = bounds_of(&nums, &den, &all);
    constraints.push((all, to_i64(&lo, "bound")?, to_i64(&hi, "bound")?));

    let fractional: Vec<usize> = (0..ground).filter(|&i| floors[i] != ceils[i]).collect();
    let mut out = Vec::new();
    let mut values = floors.clone();
    let combos = 1usize << fractional.len();
    for mask in 0..combos {
        for (b, &i) in fractional.iter().enumerate() {
            values[i] = if mask >> b & 1 == 1 { ceils[i] } else { floors[i] };
        }
        let ok = constraints.iter().all(|(idx, lo, hi)| {
            let sum: i64 = idx.iter().map(|&i| values[i]).sum();
            *lo <= sum && sum <= *hi
        });
        if ok {
            out.push(values.clone());
        }
    }
    Ok(out)
}
