//! Embeddability of ordered patterns into color-set-matrix colored looped
//! graphs, and the worst-case minimum witness size `d_star` over all
//! candidate looped graphs.

use crate::error::{Error, Result};
use crate::graphs::{looped_pair_count, ForbiddenFamily, LoopedGraph, OrderedGraph};
use crate::threshold::{ColorSet, NicelyColoredSubgraph, ThresholdMatrix};

/// Hard cap on the pattern size for the backtracking search.
pub const EMBED_CAP: usize = 8;

/// A verified embedding: the weakly monotone vertex map and the per-vertex
/// slot indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbedWitness {
    pub map: Vec<usize>,
    pub slots: Vec<usize>,
}

/// Backtracking search for a weakly order-preserving map `h(1) <= ... <=
/// h(n_F)` and slots `s_i` with `c_F(i i') ∈ c_H(h(i), h(i'))[s_i, s_{i'}]`
/// for all pattern pairs. Vertex collisions are allowed (loops carry the
/// matrix). Deterministic lexicographic search; the witness is re-verified
/// before returning.
pub fn embeddable(f: &OrderedGraph, h: &LoopedGraph) -> Result<Option<EmbedWitness>> {
    let nf = f.n();
    if nf > EMBED_CAP {
        return Err(Error::capacity(format!(
            "embeddability backtracking capped at pattern size {EMBED_CAP}"
        )));
    }
    if nf == 0 {
        return Err(Error::input("empty pattern"));
    }
    let t = h.t();
    let mut map = Vec::with_capacity(nf);
    let mut slots = Vec::with_capacity(nf);
    if !search(f, h, t, &mut map, &mut slots) {
        return Ok(None);
    }
    let witness = EmbedWitness { map, slots };
    if !verify(f, h, &witness) {
        return Err(Error::internal("embed witness failed re-verification"));
    }
    Ok(Some(witness))
}

fn search(
    f: &OrderedGraph,
    h: &LoopedGraph,
    t: usize,
    map: &mut Vec<usize>,
    slots: &mut Vec<usize>,
) -> bool {
    let i = map.len();
    if i == f.n() {
        return true;
    }
    let start = map.last().copied().unwrap_or(0);
    for node in start..h.m() {
        for slot in 0..t {
            let ok = (0..i).all(|ip| {
                h.entry(map[ip], node)
                    .entry(slots[ip], slot)
                    .contains(f.color(ip, i))
            });
            if !ok {
                continue;
            }
            map.push(node);
            slots.push(slot);
            if search(f, h, t, map, slots) {
                return true;
            }
            map.pop();
            slots.pop();
        }
    }
    false
}

fn verify(f: &OrderedGraph, h: &LoopedGraph, w: &EmbedWitness) -> bool {
    if w.map.len() != f.n() || w.slots.len() != f.n() {
        return false;
    }
    if w.map.windows(2).any(|p| p[0] > p[1]) {
        return false;
    }
    for i in 0..f.n() {
        for ip in (i + 1)..f.n() {
            if !h
                .entry(w.map[i], w.map[ip])
                .entry(w.slots[i], w.slots[ip])
                .contains(f.color(i, ip))
            {
                return false;
            }
        }
    }
    true
}

/// The looped interval graph of a nicely colored subgraph: vertex per
/// large interval, pair `{j, j'}` (loops included) colored `C_{jj'}`.
pub fn loops_from_d(d: &NicelyColoredSubgraph) -> Result<LoopedGraph> {
    let m = d.picks.len();
    let t = d.color(0, 0).dim();
    LoopedGraph::from_fn(m, t, |i, j| d.color(i, j).clone())
}

/// Number of candidate matrices for one pair: `(2^sigma - 1)^(t^2)`.
fn gamma_size(sigma: usize, t: usize) -> Option<u64> {
    let per_entry = 1u64.checked_shl(sigma as u32)?.checked_sub(1)?;
    let mut acc = 1u64;
    for _ in 0..t * t {
        acc = acc.checked_mul(per_entry)?;
    }
    Some(acc)
}

/// `d_star(fam, m, t)`: enumerate every looped graph on `m` vertices
/// colored by `t x t` non-empty color-set matrices; for each that embeds
/// some family member record the minimum member size; return the maximum
/// of those minima (0 when no candidate embeds anything). Enumeration is
/// lexicographic with early termination once the running maximum reaches
/// the family's largest member.
pub fn d_star(fam: &ForbiddenFamily, m: usize, t: usize) -> Result<usize> {
    if m == 0 || t == 0 {
        return Err(Error::input("m and t must be positive"));
    }
    let sigma = fam.alphabet().size();
    let pairs = looped_pair_count(m);
    // spec cap: 2^(sigma t^2 m(m+1)/2) candidate graphs at most 2^24
    let exponent = sigma
        .checked_mul(t * t)
        .and_then(|x| x.checked_mul(pairs))
        .ok_or_else(|| Error::capacity("d_star exponent overflow"))?;
    if exponent > 24 {
        return Err(Error::capacity(format!(
            "d_star enumeration needs 2^{exponent} candidates, cap is 2^24"
        )));
    }
    gamma_size(sigma, t).ok_or_else(|| Error::capacity("d_star candidate count overflow"))?;

    // patterns ordered by size so the first embeddable member is minimal
    let mut by_size: Vec<usize> = (0..fam.patterns().len()).collect();
    by_size.sort_by_key(|&i| fam.patterns()[i].n());
    let max_size = fam.max_pattern_size();

    // mixed-radix counter: one digit per (pair, entry); digit d encodes
    // the non-empty subset with mask d + 1
    let radix = (1u64 << sigma) - 1;
    let digits = pairs * t * t;
    let mut counter = vec![0u64; digits];
    let mut best = 0usize;
    loop {
        let looped = LoopedGraph::from_fn(m, t, |i, j| {
            let pair = crate::graphs::looped_pair_index(m, i, j);
            let entries: Vec<ColorSet> = (0..t * t)
                .map(|e| ColorSet(counter[pair * t * t + e] + 1))
                .collect();
            ThresholdMatrix::from_entries(t, entries).expect("entry count")
        })?;
        let mut min_embedded: Option<usize> = None;
        for &pid in &by_size {
            if embeddable(&fam.patterns()[pid], &looped)?.is_some() {
                min_embedded = Some(fam.patterns()[pid].n());
                break;
            }
        }
        if let Some(v) = min_embedded {
            best = best.max(v);
            if best == max_size {
                return Ok(best);
            }
        }
        // little-endian increment; overflow means the sweep is complete
        let mut at = 0;
        loop {
            if at == digits {
                return Ok(best);
            }
            counter[at] += 1;
            if counter[at] < radix {
                break;
            }
            counter[at] = 0;
            at += 1;
        }
    }
}
