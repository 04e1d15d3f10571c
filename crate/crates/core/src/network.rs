//! Directed information-flow network built from the DAI matrix.
//!
//! Each unordered sector pair contributes at most one edge, pointing in the
//! direction of positive net information flow and weighted by `|dai|`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::entropy::DaiMatrix;
use crate::error::{Error, Result};
use crate::timeseries::SectorMeta;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(source: usize, target: usize, weight: f64) -> Self {
        Self {
            source,
            target,
            weight,
        }
    }

    pub fn reversed(self) -> Self {
        Self {
            source: self.target,
            target: self.source,
            weight: self.weight,
        }
    }
}

/// A sector pair whose DAI is exactly zero and which therefore has no edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TieWarning {
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoFlowNetwork {
    pub nodes: Vec<SectorMeta>,
    pub edges: Vec<Edge>,
    pub ties: Vec<TieWarning>,
}

impl InfoFlowNetwork {
    /// Builds a network from explicit edges, checking the structural invariants.
    pub fn from_edges(nodes: Vec<SectorMeta>, mut edges: Vec<Edge>) -> Result<Self> {
        let n = nodes.len();
        let mut seen = vec![false; n * n];
        for e in &edges {
            if e.source >= n || e.target >= n {
                return Err(Error::InvalidNetwork(format!(
                    "edge {}->{} references a node outside 0..{n}",
                    e.source, e.target
                )));
            }
            if e.source == e.target {
                return Err(Error::InvalidNetwork(format!("self-edge on node {}", e.source)));
            }
            if !(e.weight > 0.0) || !e.weight.is_finite() {
                return Err(Error::InvalidNetwork(format!(
                    "edge {}->{} has non-positive weight {}",
                    e.source, e.target, e.weight
                )));
            }
            let (a, b) = (e.source.min(e.target), e.source.max(e.target));
            if std::mem::replace(&mut seen[a * n + b], true) {
                return Err(Error::InvalidNetwork(format!(
                    "more than one edge between {a} and {b}"
                )));
            }
        }
        edges.sort_by_key(|e| (e.source, e.target));
        Ok(Self {
            nodes,
            edges,
            ties: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// The same network with every edge direction flipped.
    pub fn reversed(&self) -> Self {
        let mut edges: Vec<Edge> = self.edges.iter().map(|e| e.reversed()).collect();
        edges.sort_by_key(|e| (e.source, e.target));
        Self {
            nodes: self.nodes.clone(),
            edges,
            ties: self.ties.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&NetworkJson::from(self))?)
    }

    /// Graphviz rendering; edge labels carry the weight to four decimals.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph info_flow {\n");
        for s in &self.nodes {
            let _ = writeln!(out, "    \"{}\" [label=\"{}\"];", s.code, s.short_code);
        }
        for e in &self.edges {
            let _ = writeln!(
                out,
                "    \"{}\" -> \"{}\" [label=\"{:.4}\"];",
                self.nodes[e.source].code, self.nodes[e.target].code, e.weight
            );
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Serialize)]
struct NetworkJson<'a> {
    nodes: &'a [SectorMeta],
    edges: Vec<EdgeJson<'a>>,
    ties: Vec<[&'a str; 2]>,
}

#[derive(Serialize)]
struct EdgeJson<'a> {
    source: &'a str,
    target: &'a str,
    weight: f64,
}

impl<'a> From<&'a InfoFlowNetwork> for NetworkJson<'a> {
    fn from(g: &'a InfoFlowNetwork) -> Self {
        let code = |i: usize| g.nodes[i].code.as_str();
        Self {
            nodes: &g.nodes,
            edges: g
                .edges
                .iter()
                .map(|e| EdgeJson {
                    source: code(e.source),
                    target: code(e.target),
                    weight: e.weight,
                })
                .collect(),
            ties: g.ties.iter().map(|t| [code(t.a), code(t.b)]).collect(),
        }
    }
}

pub fn build_network(dai: &DaiMatrix) -> InfoFlowNetwork {
    let n = dai.n();
    let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    let mut ties = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let d = dai.get(i, j);
            if d > 0.0 {
                edges.push(Edge::new(i, j, d));
            } else if d < 0.0 {
                edges.push(Edge::new(j, i, -d));
            } else {
                log::warn!(
                    "zero net information flow between {} and {}; no edge",
                    dai.sectors()[i].code,
                    dai.sectors()[j].code
                );
                ties.push(TieWarning { a: i, b: j });
            }
        }
    }
    edges.sort_by_key(|e| (e.source, e.target));
    InfoFlowNetwork {
        nodes: dai.sectors().to_vec(),
        edges,
        ties,
    }
}
