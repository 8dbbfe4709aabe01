//! Seeded instance generators: uniform graphs and matrices, two-block
//! graphs, planted-pattern blow-ups with noise, and certified-free
//! ensembles for one-sidedness experiments.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graphs::{Color, ColorAlphabet, ForbiddenFamily, MatrixGrid, OrderedGraph};
use crate::rat::{to_f64, Rat};
use crate::rng::stream_rng;
use crate::tester::{contains_any, greedy_free};

pub fn uniform_graph(n: usize, alphabet: ColorAlphabet, seed: u64) -> Result<OrderedGraph> {
    let mut rng = stream_rng(seed, "gen.uniform", 0);
    let sigma = alphabet.size();
    OrderedGraph::from_fn(n, alphabet, |_, _| Color(rng.gen_range(0..sigma)))
}

pub fn uniform_matrix(
    rows: usize,
    cols: usize,
    alphabet: ColorAlphabet,
    seed: u64,
) -> Result<MatrixGrid> {
    let mut rng = stream_rng(seed, "gen.uniform_matrix", 0);
    let sigma = alphabet.size();
    MatrixGrid::from_fn(rows, cols, alphabet, |_, _| Color(rng.gen_range(0..sigma)))
}

/// Colors split by the vertex-order halves: cross-half pairs get color 1,
/// within-half pairs color 0.
pub fn two_block_graph(n: usize, alphabet: ColorAlphabet) -> Result<OrderedGraph> {
    OrderedGraph::from_fn(n, alphabet, |i, j| {
        Color(usize::from(i < n / 2 && j >= n / 2))
    })
}

/// A k-partite chart whose colors depend only on the group pair of the
/// endpoints (each class is cut into `groups` equal runs). Group structure
/// keeps the Ramsey classification stages coarse, so desk-scale runs
/// rarely come up empty.
pub fn grouped_chart(
    k: usize,
    class_size: usize,
    groups: usize,
    alphabet: ColorAlphabet,
    seed: u64,
) -> Result<crate::graphs::KPartiteChart> {
    if groups == 0 || class_size % groups != 0 {
        return Err(Error::input("groups must divide the class size"));
    }
    let mut rng = stream_rng(seed, "gen.grouped_chart", 0);
    let sigma = alphabet.size();
    let mut pair_color = std::collections::BTreeMap::new();
    let parts: Vec<Vec<usize>> = (0..k)
        .map(|i| (i * class_size..(i + 1) * class_size).collect())
        .collect();
    crate::graphs::KPartiteChart::from_fn(parts, alphabet, |u, v| {
        let gu = (u % class_size) * groups / class_size;
        let gv = (v % class_size) * groups / class_size;
        let (cu, cv) = (u / class_size, v / class_size);
        *pair_color
            .entry((cu, cv, gu, gv))
            .or_insert_with(|| Color(rng.gen_range(0..sigma)))
    })
}

/// Blow-up of a pattern across consecutive vertex blocks with recoloring
/// noise: block pair `(bi, bj)` inherits the pattern color of `(bi, bj)`,
/// within-block pairs take the alphabet's first color, and every pair is
/// independently re-randomized with the given probability. With low noise
/// the instance is far from freeness of that pattern.
pub fn planted_pattern_graph(
    n: usize,
    pattern: &OrderedGraph,
    noise: &Rat,
    seed: u64,
) -> Result<OrderedGraph> {
    let q = pattern.n();
    if q == 0 || q > n {
        return Err(Error::input("pattern size must lie in 1..=n"));
    }
    let mut rng = stream_rng(seed, "gen.planted", 0);
    let noise_f = to_f64(noise).clamp(0.0, 1.0);
    let alphabet = pattern.alphabet().clone();
    let sigma = alphabet.size();
    let block = |v: usize| (v * q / n).min(q - 1);
    OrderedGraph::from_fn(n, alphabet, |i, j| {
        let (bi, bj) = (block(i), block(j));
        let planted = if bi == bj { Color(0) } else { pattern.color(bi, bj) };
        if noise_f > 0.0 && rng.gen_bool(noise_f) {
            Color(rng.gen_range(0..sigma))
        } else {
            planted
        }
    })
}

/// A certified family-free graph: uniform start, greedy witness-breaking,
/// final certification by the exhaustive containment search. The family
/// should be chosen so that witness-breaking converges (single-color
/// patterns always do).
pub fn certified_free_graph(
    n: usize,
    fam: &ForbiddenFamily,
    seed: u64,
) -> Result<OrderedGraph> {
    let g = uniform_graph(n, fam.alphabet().clone(), seed)?;
    let (free, _changes) = greedy_free(&g, fam)?;
    if contains_any(&free, fam)?.is_some() {
        return Err(Error::internal("greedy repair left a witness"));
    }
    Ok(free)
}

/// A certified pattern-free matrix: uniform start, then each witness is
/// broken by flipping one of its cells away from the pattern value.
pub fn certified_free_matrix(
    rows: usize,
    cols: usize,
    fam: &crate::tester::MatrixFamily,
    seed: u64,
) -> Result<MatrixGrid> {
    let mut m = uniform_matrix(rows, cols, fam.alphabet().clone(), seed)?;
    let sigma = fam.alphabet().size();
    let mut guard = rows * cols * sigma + 1;
    while let Some((pid, rws, cls)) = crate::tester::matrix_contains_any(&m, fam)? {
        if guard == 0 {
            return Err(Error::stage("gen.free_matrix", "witness breaking did not converge"));
        }
        guard -= 1;
        let p = &fam.patterns()[pid];
        let (r, c) = (rws[0], cls[0]);
        let bad = p.cell(0, 0);
        let replacement = Color((bad.0 + 1) % sigma);
        m = MatrixGrid::from_fn(rows, cols, m.alphabet().clone(), |i, j| {
            if (i, j) == (r, c) {
                replacement
            } else {
                m.cell(i, j)
            }
        })?;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn ab() -> ColorAlphabet {
        ColorAlphabet::new(["a", "b"]).unwrap()
    }

    #[test]
    fn generators_are_seed_deterministic() {
        let a = uniform_graph(10, ab(), 7).unwrap();
        let b = uniform_graph(10, ab(), 7).unwrap();
        let c = uniform_graph(10, ab(), 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn planted_blowup_contains_many_copies() {
        let pattern = OrderedGraph::from_fn(2, ab(), |_, _| Color(1)).unwrap();
        let g = planted_pattern_graph(20, &pattern, &rat(0, 1), 3).unwrap();
        let count = crate::tester::count_induced_ordered(&g, &pattern).unwrap();
        // all cross-block pairs are copies: 10 * 10
        assert_eq!(count, 100);
    }

    #[test]
    fn certified_free_graph_is_free() {
        let tri = OrderedGraph::constant(3, ab(), Color(1)).unwrap();
        let fam = ForbiddenFamily::new(ab(), vec![tri]).unwrap();
        let g = certified_free_graph(14, &fam, 5).unwrap();
        assert!(contains_any(&g, &fam).unwrap().is_none());
    }

    #[test]
    fn certified_free_matrix_is_free() {
        let pat = MatrixGrid::from_fn(2, 2, ab(), |_, _| Color(1)).unwrap();
        let fam = crate::tester::MatrixFamily::new(ab(), vec![pat]).unwrap();
        let m = certified_free_matrix(10, 10, &fam, 6).unwrap();
        assert!(crate::tester::matrix_contains_any(&m, &fam).unwrap().is_none());
    }
}
