//! Wire formats: graph/family/chart JSON, matrix CSV with an optional
//! alphabet sidecar, and the rounding instance format.
//!
//! Graph JSON: `{"n": int, "alphabet": [str], "default": str?, "edges":
//! [[i, j, str], ...]}` — unlisted pairs take the default color; omitting
//! the default with unlisted pairs is an error. Serialization picks the
//! most frequent color (ties broken by alphabet order) as the default, so
//! equal inputs produce byte-identical output.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graphs::{
    Color, ColorAlphabet, EdgeSet, ForbiddenFamily, KPartiteChart, MatrixGrid, OrderedGraph,
};
use crate::rat::{parse_rat, Rat};

#[derive(Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub alphabet: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub default: Option<String>,
    pub edges: Vec<(usize, usize, String)>,
}

pub fn graph_to_json(g: &OrderedGraph) -> GraphJson {
    let mut frequency = vec![0u64; g.alphabet().size()];
    for (u, v) in g.pairs() {
        frequency[g.color(u, v).0] += 1;
    }
    let default = (0..frequency.len()).max_by_key(|&c| (frequency[c], usize::MAX - c));
    let default = default.unwrap_or(0);
    let mut edges = Vec::new();
    for (u, v) in g.pairs() {
        let c = g.color(u, v);
        if c.0 != default {
            edges.push((u, v, g.alphabet().symbol(c).to_string()));
        }
    }
    GraphJson {
        n: g.n(),
        alphabet: g.alphabet().symbols().to_vec(),
        default: Some(g.alphabet().symbol(Color(default)).to_string()),
        edges,
    }
}

pub fn graph_from_json(json: &GraphJson) -> Result<OrderedGraph> {
    let alphabet = ColorAlphabet::new(json.alphabet.clone())?;
    let default = json
        .default
        .as_ref()
        .map(|s| {
            alphabet
                .index_of(s)
                .ok_or_else(|| Error::input(format!("default color `{s}` not in alphabet")))
        })
        .transpose()?;
    let mut colors: BTreeMap<(usize, usize), Color> = BTreeMap::new();
    for (u, v, sym) in &json.edges {
        if u == v || *u >= json.n || *v >= json.n {
            return Err(Error::input(format!("bad edge ({u}, {v})")));
        }
        let c = alphabet
            .index_of(sym)
            .ok_or_else(|| Error::input(format!("edge color `{sym}` not in alphabet")))?;
        let key = crate::graphs::normalize_edge(*u, *v);
        if colors.insert(key, c).is_some() {
            return Err(Error::input(format!("duplicate edge ({u}, {v})")));
        }
    }
    let fallback = match default {
        Some(d) => d,
        None => {
            if colors.len() != crate::graphs::pair_count(json.n) {
                return Err(Error::input("unlisted pairs but no default color given"));
            }
            Color(0)
        }
    };
    OrderedGraph::from_fn(json.n, alphabet, |i, j| {
        colors.get(&(i, j)).copied().unwrap_or(fallback)
    })
}

pub fn read_graph(path: &str) -> Result<OrderedGraph> {
    let text = std::fs::read_to_string(path)?;
    let json: GraphJson = serde_json::from_str(&text)?;
    graph_from_json(&json)
}

pub fn write_graph(g: &OrderedGraph) -> Result<String> {
    Ok(serde_json::to_string_pretty(&graph_to_json(g))?)
}

#[derive(Serialize, Deserialize)]
pub struct PatternJson {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub default: Option<String>,
    pub edges: Vec<(usize, usize, String)>,
}

#[derive(Serialize, Deserialize)]
pub struct FamilyJson {
    pub alphabet: Vec<String>,
    pub patterns: Vec<PatternJson>,
}

pub fn family_from_json(json: &FamilyJson) -> Result<ForbiddenFamily> {
    let alphabet = ColorAlphabet::new(json.alphabet.clone())?;
    let mut patterns = Vec::with_capacity(json.patterns.len());
    for p in &json.patterns {
        let graph_json = GraphJson {
            n: p.n,
            alphabet: json.alphabet.clone(),
            default: p.default.clone(),
            edges: p.edges.clone(),
        };
        patterns.push(graph_from_json(&graph_json)?);
    }
    ForbiddenFamily::new(alphabet, patterns)
}

pub fn family_to_json(fam: &ForbiddenFamily) -> FamilyJson {
    FamilyJson {
        alphabet: fam.alphabet().symbols().to_vec(),
        patterns: fam
            .patterns()
            .iter()
            .map(|p| {
                let g = graph_to_json(p);
                PatternJson { n: g.n, default: g.default, edges: g.edges }
            })
            .collect(),
    }
}

pub fn read_family(path: &str) -> Result<ForbiddenFamily> {
    let text = std::fs::read_to_string(path)?;
    let json: FamilyJson = serde_json::from_str(&text)?;
    family_from_json(&json)
}

#[derive(Serialize, Deserialize)]
pub struct MatrixFamilyJson {
    pub alphabet: Vec<String>,
    pub patterns: Vec<Vec<Vec<String>>>,
}

pub fn matrix_family_from_json(json: &MatrixFamilyJson) -> Result<crate::tester::MatrixFamily> {
    let alphabet = ColorAlphabet::new(json.alphabet.clone())?;
    let mut patterns = Vec::new();
    for rows in &json.patterns {
        patterns.push(matrix_from_rows(rows, &alphabet)?);
    }
    crate::tester::MatrixFamily::new(alphabet, patterns)
}

pub fn read_matrix_family(path: &str) -> Result<crate::tester::MatrixFamily> {
    let text = std::fs::read_to_string(path)?;
    let json: MatrixFamilyJson = serde_json::from_str(&text)?;
    matrix_family_from_json(&json)
}

fn matrix_from_rows(rows: &[Vec<String>], alphabet: &ColorAlphabet) -> Result<MatrixGrid> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::input("matrix must have at least one cell"));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::input("ragged matrix rows"));
    }
    let mut cells = Vec::with_capacity(rows.len() * cols);
    for row in rows {
        for sym in row {
            let c = alphabet
                .index_of(sym)
                .ok_or_else(|| Error::input(format!("cell `{sym}` not in alphabet")))?;
            cells.push(c);
        }
    }
    let rows_n = rows.len();
    MatrixGrid::from_fn(rows_n, cols, alphabet.clone(), |r, c| cells[r * cols + c])
}

#[derive(Serialize, Deserialize)]
pub struct AlphabetSidecar {
    pub alphabet: Vec<String>,
}

/// CSV matrix: one row per line, cells are symbol strings. The alphabet
/// comes from the sidecar when given, otherwise it is inferred as the
/// sorted set of distinct symbols.
pub fn matrix_from_csv(text: &str, sidecar: Option<&AlphabetSidecar>) -> Result<MatrixGrid> {
    let rows: Vec<Vec<String>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(|c| c.trim().to_string()).collect())
        .collect();
    if rows.is_empty() {
        return Err(Error::input("empty matrix csv"));
    }
    let alphabet = match sidecar {
        Some(s) => ColorAlphabet::new(s.alphabet.clone())?,
        None => {
            let mut symbols: Vec<String> = rows.iter().flatten().cloned().collect();
            symbols.sort();
            symbols.dedup();
            if symbols.len() < 2 {
                symbols.push(format!("{}_", symbols[0]));
            }
            ColorAlphabet::new(symbols)?
        }
    };
    matrix_from_rows(&rows, &alphabet)
}

pub fn read_matrix(path: &str, sidecar_path: Option<&str>) -> Result<MatrixGrid> {
    let text = std::fs::read_to_string(path)?;
    let sidecar = sidecar_path
        .map(|p| -> Result<AlphabetSidecar> {
            let s = std::fs::read_to_string(p)?;
            Ok(serde_json::from_str(&s)?)
        })
        .transpose()?;
    matrix_from_csv(&text, sidecar.as_ref())
}

pub fn matrix_to_csv(m: &MatrixGrid) -> String {
    let mut out = String::new();
    for r in 0..m.rows() {
        let row: Vec<&str> = (0..m.cols()).map(|c| m.alphabet().symbol(m.cell(r, c))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[derive(Serialize, Deserialize)]
pub struct ChartJson {
    pub alphabet: Vec<String>,
    pub classes: Vec<Vec<usize>>,
    pub colors: Vec<(usize, usize, String)>,
}

pub fn chart_from_json(json: &ChartJson) -> Result<KPartiteChart> {
    let alphabet = ColorAlphabet::new(json.alphabet.clone())?;
    let mut colors: BTreeMap<(usize, usize), Color> = BTreeMap::new();
    for (u, v, sym) in &json.colors {
        let c = alphabet
            .index_of(sym)
            .ok_or_else(|| Error::input(format!("chart color `{sym}` not in alphabet")))?;
        colors.insert(crate::graphs::normalize_edge(*u, *v), c);
    }
    let classes = json.classes.clone();
    // ensure totality before constructing
    for (i, class_i) in classes.iter().enumerate() {
        for class_j in classes.iter().skip(i + 1) {
            for &u in class_i {
                for &v in class_j {
                    if !colors.contains_key(&crate::graphs::normalize_edge(u, v)) {
                        return Err(Error::input(format!(
                            "missing chart color for pair ({u}, {v})"
                        )));
                    }
                }
            }
        }
    }
    KPartiteChart::from_fn(classes, alphabet, |u, v| {
        colors[&crate::graphs::normalize_edge(u, v)]
    })
}

pub fn read_chart(path: &str) -> Result<KPartiteChart> {
    let text = std::fs::read_to_string(path)?;
    let json: ChartJson = serde_json::from_str(&text)?;
    chart_from_json(&json)
}

pub fn chart_to_json(chart: &KPartiteChart) -> ChartJson {
    let mut colors = Vec::new();
    for (u, v) in chart.cross_pairs() {
        let c = chart.color(u, v).expect("cross pair");
        colors.push((u, v, chart.alphabet().symbol(c).to_string()));
    }
    ChartJson {
        alphabet: chart.alphabet().symbols().to_vec(),
        classes: chart.parts().to_vec(),
        colors,
    }
}

#[derive(Serialize, Deserialize)]
pub struct EdgeListJson {
    pub edges: Vec<(usize, usize)>,
}

pub fn read_edge_set(path: &str) -> Result<EdgeSet> {
    let text = std::fs::read_to_string(path)?;
    let json: EdgeListJson = serde_json::from_str(&text)?;
    Ok(json
        .edges
        .into_iter()
        .map(|(u, v)| crate::graphs::normalize_edge(u, v))
        .collect())
}

#[derive(Serialize, Deserialize)]
pub struct RoundingJson {
    pub lambda: Vec<String>,
    #[serde(rename = "M")]
    pub m: Vec<Vec<usize>>,
    #[serde(rename = "N")]
    pub n: Vec<Vec<usize>>,
}

pub struct RoundingInstance {
    pub lambda: Vec<Rat>,
    pub m: Vec<Vec<usize>>,
    pub n: Vec<Vec<usize>>,
}

pub fn rounding_from_json(json: &RoundingJson) -> Result<RoundingInstance> {
    let lambda = json
        .lambda
        .iter()
        .map(|s| parse_rat(s))
        .collect::<Result<Vec<_>>>()?;
    Ok(RoundingInstance { lambda, m: json.m.clone(), n: json.n.clone() })
}

pub fn read_rounding(path: &str) -> Result<RoundingInstance> {
    let text = std::fs::read_to_string(path)?;
    let json: RoundingJson = serde_json::from_str(&text)?;
    rounding_from_json(&json)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn ab() -> ColorAlphabet {
        ColorAlphabet::new(["a", "b"]).unwrap()
    }

    #[test]
    fn graph_json_round_trip() {
        let mut rng = stream_rng(60, "io.graph", 0);
        let g = OrderedGraph::from_fn(7, ab(), |_, _| Color(rng.gen_range(0..2))).unwrap();
        let text = write_graph(&g).unwrap();
        let back: GraphJson = serde_json::from_str(&text).unwrap();
        assert_eq!(graph_from_json(&back).unwrap(), g);
    }

    #[test]
    fn graph_json_missing_default_rejected() {
        let json = GraphJson {
            n: 3,
            alphabet: vec!["a".into(), "b".into()],
            default: None,
            edges: vec![(0, 1, "a".into())],
        };
        assert!(graph_from_json(&json).is_err());
    }

    #[test]
    fn graph_json_serialization_is_deterministic() {
        let g = OrderedGraph::from_fn(6, ab(), |i, j| Color((i * j) % 2)).unwrap();
        assert_eq!(write_graph(&g).unwrap(), write_graph(&g).unwrap());
    }

    #[test]
    fn matrix_csv_with_inferred_alphabet() {
        let text = "a,b,a\nb,b,a\n";
        let m = matrix_from_csv(text, None).unwrap();
        assert_eq!(m.rows(), 2);
        assert_eq!(m.cols(), 3);
        assert_eq!(m.alphabet().symbols(), &["a".to_string(), "b".to_string()]);
        assert_eq!(matrix_to_csv(&m), text);
    }

    #[test]
    fn chart_json_round_trip() {
        let g = OrderedGraph::from_fn(6, ab(), |i, j| Color((i + j) % 2)).unwrap();
        let chart =
            KPartiteChart::from_graph(&g, vec![vec![0, 1], vec![2, 3], vec![4, 5]]).unwrap();
        let json = chart_to_json(&chart);
        let back = chart_from_json(&json).unwrap();
        for (u, v) in chart.cross_pairs() {
            assert_eq!(chart.color(u, v).unwrap(), back.color(u, v).unwrap());
        }
    }

    #[test]
    fn rounding_json_parses_rationals() {
        let json = RoundingJson {
            lambda: vec!["1/2".into(), "3".into()],
            m: vec![vec![0, 1]],
            n: vec![],
        };
        let inst = rounding_from_json(&json).unwrap();
        assert_eq!(inst.lambda[0], crate::rat::rat(1, 2));
    }
}
