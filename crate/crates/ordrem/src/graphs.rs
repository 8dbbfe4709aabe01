//! Fundamental ordered combinatorial objects: colored complete graphs on
//! ordered vertex sets, looped graphs over color-set matrices, k-partite
//! charts, forbidden families and matrices over a finite alphabet.
//!
//! Vertices are `0..n` in their natural order. Colors are indices into the
//! alphabet; unordered pairs are stored with `i < j` normalized. All values
//! are immutable after construction.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::threshold::ThresholdMatrix;

/// Index into a [`ColorAlphabet`].
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Color(pub usize);

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A finite, ordered set of at least two distinct color names. The fixed
/// ordering is the lexicographic tie-break source everywhere in the crate.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ColorAlphabet {
    symbols: Vec<String>,
}

impl ColorAlphabet {
    /// At least two distinct symbols, at most 64 (color sets are bitmasks).
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.len() < 2 {
            return Err(Error::input("alphabet needs at least two symbols"));
        }
        if symbols.len() > 64 {
            return Err(Error::capacity("alphabet larger than 64 symbols"));
        }
        let distinct: BTreeSet<&String> = symbols.iter().collect();
        if distinct.len() != symbols.len() {
            return Err(Error::input("alphabet has duplicate symbols"));
        }
        Ok(ColorAlphabet { symbols })
    }

    pub fn binary() -> Self {
        ColorAlphabet::new(["0", "1"]).unwrap()
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbol(&self, c: Color) -> &str {
        &self.symbols[c.0]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn index_of(&self, symbol: &str) -> Option<Color> {
        self.symbols.iter().position(|s| s == symbol).map(Color)
    }

    pub fn colors(&self) -> impl Iterator<Item = Color> {
        (0..self.symbols.len()).map(Color)
    }

    /// The alphabet extended by a fresh symbol; returns the new alphabet and
    /// the color index of the added symbol.
    pub fn with_extra(&self, symbol: &str) -> Result<(ColorAlphabet, Color)> {
        if self.index_of(symbol).is_some() {
            return Err(Error::input(format!("symbol `{symbol}` already present")));
        }
        let mut symbols = self.symbols.clone();
        symbols.push(symbol.to_string());
        let idx = Color(symbols.len() - 1);
        Ok((ColorAlphabet { symbols }, idx))
    }
}

/// Offset of pair `{i, j}` (`i < j`) in a row-major upper-triangular layout.
#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

pub fn pair_count(n: usize) -> usize {
    n.saturating_sub(1) * n / 2
}

/// A complete vertex-ordered graph with every pair colored from a finite
/// alphabet. This is the universal input object of the crate.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OrderedGraph {
    n: usize,
    alphabet: ColorAlphabet,
    colors: Vec<Color>,
}

impl OrderedGraph {
    /// Builds the graph from a color function on normalized pairs `i < j`.
    pub fn from_fn(
        n: usize,
        alphabet: ColorAlphabet,
        mut color: impl FnMut(usize, usize) -> Color,
    ) -> Result<Self> {
        let mut colors = Vec::with_capacity(pair_count(n));
        for i in 0..n {
            for j in (i + 1)..n {
                let c = color(i, j);
                if c.0 >= alphabet.size() {
                    return Err(Error::input(format!(
                        "color index {} out of range for pair ({i},{j})",
                        c.0
                    )));
                }
                colors.push(c);
            }
        }
        Ok(OrderedGraph { n, alphabet, colors })
    }

    pub fn constant(n: usize, alphabet: ColorAlphabet, c: Color) -> Result<Self> {
        OrderedGraph::from_fn(n, alphabet, |_, _| c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphabet(&self) -> &ColorAlphabet {
        &self.alphabet
    }

    /// Color of the unordered pair `{u, v}`, `u != v`.
    pub fn color(&self, u: usize, v: usize) -> Color {
        let (i, j) = if u < v { (u, v) } else { (v, u) };
        self.colors[pair_index(self.n, i, j)]
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| ((i + 1)..self.n).map(move |j| (i, j)))
    }

    /// Induced ordered subgraph on a strictly increasing vertex list.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Result<OrderedGraph> {
        for w in vertices.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::input("vertex list not strictly increasing"));
            }
        }
        if let Some(&last) = vertices.last() {
            if last >= self.n {
                return Err(Error::input(format!("vertex {last} out of range")));
            }
        }
        OrderedGraph::from_fn(vertices.len(), self.alphabet.clone(), |i, j| {
            self.color(vertices[i], vertices[j])
        })
    }

    /// Copy with one pair recolored (used by cleaning and generators).
    pub fn recolored(&self, u: usize, v: usize, c: Color) -> Result<OrderedGraph> {
        if u == v || u >= self.n || v >= self.n {
            return Err(Error::input("bad pair in recolored"));
        }
        if c.0 >= self.alphabet.size() {
            return Err(Error::input("color out of range in recolored"));
        }
        let (i, j) = if u < v { (u, v) } else { (v, u) };
        let mut colors = self.colors.clone();
        colors[pair_index(self.n, i, j)] = c;
        Ok(OrderedGraph { n: self.n, alphabet: self.alphabet.clone(), colors })
    }

    /// Number of pairs where the two graphs differ; both must share `n` and
    /// alphabet.
    pub fn edge_differences(&self, other: &OrderedGraph) -> Result<usize> {
        if self.n != other.n || self.alphabet != other.alphabet {
            return Err(Error::input("graphs not comparable"));
        }
        Ok(self
            .colors
            .iter()
            .zip(&other.colors)
            .filter(|(a, b)| a != b)
            .count())
    }
}

/// A `Gamma`-colored complete graph with loops: every pair `{i, j}` with
/// `i <= j` carries a [`ThresholdMatrix`]. This is the simplified picture a
/// nicely colored subgraph induces on the large intervals.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LoopedGraph {
    m: usize,
    t: usize,
    entries: Vec<ThresholdMatrix>,
}

/// Offset of pair `{i, j}` (`i <= j`) including loops.
#[inline]
pub fn looped_pair_index(m: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < m);
    i * (2 * m - i + 1) / 2 + (j - i)
}

pub fn looped_pair_count(m: usize) -> usize {
    m * (m + 1) / 2
}

impl LoopedGraph {
    pub fn from_fn(
        m: usize,
        t: usize,
        mut entry: impl FnMut(usize, usize) -> ThresholdMatrix,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::input("looped graph needs at least one vertex"));
        }
        let mut entries = Vec::with_capacity(looped_pair_count(m));
        for i in 0..m {
            for j in i..m {
                let e = entry(i, j);
                if e.dim() != t {
                    return Err(Error::input("threshold matrix dimension mismatch"));
                }
                entries.push(e);
            }
        }
        Ok(LoopedGraph { m, t, entries })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Matrix of pair `{i, j}`; order of arguments is irrelevant.
    pub fn entry(&self, i: usize, j: usize) -> &ThresholdMatrix {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        &self.entries[looped_pair_index(self.m, a, b)]
    }
}

/// Normalized edge set over global vertex ids.
pub type EdgeSet = BTreeSet<(usize, usize)>;

pub fn normalize_edge(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// An edge-colored complete k-partite graph: k disjoint ordered vertex
/// classes with colors on all cross-class pairs only.
#[derive(Clone, Debug)]
pub struct KPartiteChart {
    parts: Vec<Vec<usize>>,
    alphabet: ColorAlphabet,
    /// Dense vertex-id lookup: `loc[v] = (class, position)`, sentinel
    /// `(u32::MAX, 0)` for ids outside the chart.
    loc: Vec<(u32, u32)>,
    /// Row-major `|V_i| x |V_j|` color matrix per class pair `i < j`.
    cross: Vec<Vec<Color>>,
}

/// Largest accepted vertex id; charts use dense id lookup tables.
pub const CHART_MAX_ID: usize = 1 << 22;

fn class_pair_index(k: usize, i: usize, j: usize) -> usize {
    pair_index(k, i, j)
}

impl KPartiteChart {
    /// Builds a chart from disjoint classes and a color function on global
    /// vertex ids.
    pub fn from_fn(
        parts: Vec<Vec<usize>>,
        alphabet: ColorAlphabet,
        mut color: impl FnMut(usize, usize) -> Color,
    ) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::input("chart needs at least one class"));
        }
        let max_id = parts.iter().flatten().max().copied().unwrap_or(0);
        if max_id >= CHART_MAX_ID {
            return Err(Error::capacity(format!(
                "chart vertex ids capped at {CHART_MAX_ID}"
            )));
        }
        let mut loc = vec![(u32::MAX, 0u32); max_id + 1];
        for (ci, part) in parts.iter().enumerate() {
            for (vi, &v) in part.iter().enumerate() {
                if loc[v].0 != u32::MAX {
                    return Err(Error::input(format!("vertex {v} in two classes")));
                }
                loc[v] = (ci as u32, vi as u32);
            }
        }
        let k = parts.len();
        let mut cross = Vec::with_capacity(pair_count(k));
        for i in 0..k {
            for j in (i + 1)..k {
                let mut mat = Vec::with_capacity(parts[i].len() * parts[j].len());
                for &u in &parts[i] {
                    for &v in &parts[j] {
                        let c = color(u, v);
                        if c.0 >= alphabet.size() {
                            return Err(Error::input("chart color out of range"));
                        }
                        mat.push(c);
                    }
                }
                cross.push(mat);
            }
        }
        Ok(KPartiteChart { parts, alphabet, loc, cross })
    }

    /// Chart induced by disjoint vertex classes of an ordered graph.
    pub fn from_graph(g: &OrderedGraph, classes: Vec<Vec<usize>>) -> Result<Self> {
        for part in &classes {
            for &v in part {
                if v >= g.n() {
                    return Err(Error::input(format!("class vertex {v} out of range")));
                }
            }
        }
        KPartiteChart::from_fn(classes, g.alphabet().clone(), |u, v| g.color(u, v))
    }

    pub fn k(&self) -> usize {
        self.parts.len()
    }

    pub fn parts(&self) -> &[Vec<usize>] {
        &self.parts
    }

    pub fn alphabet(&self) -> &ColorAlphabet {
        &self.alphabet
    }

    pub fn class_of(&self, v: usize) -> Option<usize> {
        match self.loc.get(v) {
            Some(&(c, _)) if c != u32::MAX => Some(c as usize),
            _ => None,
        }
    }

    /// Color of a cross-class pair; errors on same-class or unknown ids.
    pub fn color(&self, u: usize, v: usize) -> Result<Color> {
        let (cu, iu) = *self
            .loc
            .get(u)
            .filter(|&&(c, _)| c != u32::MAX)
            .ok_or_else(|| Error::input(format!("vertex {u} not in chart")))?;
        let (cv, iv) = *self
            .loc
            .get(v)
            .filter(|&&(c, _)| c != u32::MAX)
            .ok_or_else(|| Error::input(format!("vertex {v} not in chart")))?;
        if cu == cv {
            return Err(Error::input("same-class pair has no color"));
        }
        let (ci, ii, cj, ij) =
            if cu < cv { (cu, iu, cv, iv) } else { (cv, iv, cu, iu) };
        let (ci, ii, cj, ij) = (ci as usize, ii as usize, cj as usize, ij as usize);
        let mat = &self.cross[class_pair_index(self.k(), ci, cj)];
        Ok(mat[ii * self.parts[cj].len() + ij])
    }

    /// Chart induced on subsets of the classes (given as global ids).
    pub fn induced(&self, picks: &[Vec<usize>]) -> Result<KPartiteChart> {
        if picks.len() != self.k() {
            return Err(Error::input("induced chart needs one pick per class"));
        }
        for (ci, pick) in picks.iter().enumerate() {
            for &v in pick {
                if self.class_of(v) != Some(ci) {
                    return Err(Error::input("pick outside its class"));
                }
            }
        }
        let parts: Vec<Vec<usize>> = picks.to_vec();
        KPartiteChart::from_fn(parts, self.alphabet.clone(), |u, v| {
            self.color(u, v).expect("cross pair")
        })
    }

    pub fn cross_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let k = self.k();
        (0..k)
            .flat_map(move |i| ((i + 1)..k).map(move |j| (i, j)))
            .flat_map(move |(i, j)| {
                self.parts[i]
                    .iter()
                    .flat_map(move |&u| self.parts[j].iter().map(move |&v| (u, v)))
            })
    }

    pub fn total_cross_pairs(&self) -> usize {
        let k = self.k();
        let mut total = 0;
        for i in 0..k {
            for j in (i + 1)..k {
                total += self.parts[i].len() * self.parts[j].len();
            }
        }
        total
    }
}

/// A non-empty finite family of forbidden patterns over one alphabet.
#[derive(Clone, Debug)]
pub struct ForbiddenFamily {
    alphabet: ColorAlphabet,
    patterns: Vec<OrderedGraph>,
}

impl ForbiddenFamily {
    pub fn new(alphabet: ColorAlphabet, patterns: Vec<OrderedGraph>) -> Result<Self> {
        if patterns.is_empty() {
            return Err(Error::input("forbidden family must be non-empty"));
        }
        for p in &patterns {
            if p.n() == 0 {
                return Err(Error::input("pattern with zero vertices"));
            }
            if p.alphabet() != &alphabet {
                return Err(Error::input("pattern alphabet mismatch"));
            }
        }
        Ok(ForbiddenFamily { alphabet, patterns })
    }

    pub fn alphabet(&self) -> &ColorAlphabet {
        &self.alphabet
    }

    pub fn patterns(&self) -> &[OrderedGraph] {
        &self.patterns
    }

    /// `d_F`: the largest number of vertices in a family member.
    pub fn max_pattern_size(&self) -> usize {
        self.patterns.iter().map(|p| p.n()).max().unwrap_or(0)
    }
}

/// A matrix over a finite alphabet; rows and columns keep their order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MatrixGrid {
    rows: usize,
    cols: usize,
    alphabet: ColorAlphabet,
    cells: Vec<Color>,
}

impl MatrixGrid {
    pub fn from_fn(
        rows: usize,
        cols: usize,
        alphabet: ColorAlphabet,
        mut cell: impl FnMut(usize, usize) -> Color,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::input("matrix needs at least one row and column"));
        }
        let mut cells = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let col = cell(r, c);
                if col.0 >= alphabet.size() {
                    return Err(Error::input("matrix cell color out of range"));
                }
                cells.push(col);
            }
        }
        Ok(MatrixGrid { rows, cols, alphabet, cells })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn alphabet(&self) -> &ColorAlphabet {
        &self.alphabet
    }

    pub fn cell(&self, r: usize, c: usize) -> Color {
        self.cells[r * self.cols + c]
    }

    /// Ordered submatrix on strictly increasing row and column lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<MatrixGrid> {
        for w in rows.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::input("row list not strictly increasing"));
            }
        }
        for w in cols.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::input("column list not strictly increasing"));
            }
        }
        if rows.iter().any(|&r| r >= self.rows) || cols.iter().any(|&c| c >= self.cols) {
            return Err(Error::input("submatrix index out of range"));
        }
        MatrixGrid::from_fn(rows.len(), cols.len(), self.alphabet.clone(), |r, c| {
            self.cell(rows[r], cols[c])
        })
    }
}

/// The matrix-to-graph reduction: rows become the first `rows` vertices,
/// columns the rest, cross pairs carry the cell color and both within-side
/// pair sets are colored by a fresh `sigma_0`.
pub fn matrix_to_graph(m: &MatrixGrid) -> Result<(OrderedGraph, Color)> {
    let (alphabet, sigma0) = fresh_sigma0(m.alphabet())?;
    let rows = m.rows();
    let g = OrderedGraph::from_fn(rows + m.cols(), alphabet, |i, j| {
        if i < rows && j >= rows {
            m.cell(i, j - rows)
        } else {
            sigma0
        }
    })?;
    Ok((g, sigma0))
}

/// Extends the alphabet by a reserved marker that cannot collide with user
/// symbols.
pub fn fresh_sigma0(alphabet: &ColorAlphabet) -> Result<(ColorAlphabet, Color)> {
    let mut name = "_s0".to_string();
    while alphabet.index_of(&name).is_some() {
        name.push('_');
    }
    alphabet.with_extra(&name)
}
