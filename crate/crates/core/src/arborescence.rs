//! Maximum spanning arborescences (Chu-Liu/Edmonds) and maximal flow paths.
//!
//! The solver maximises by negating weights into a minimum-arborescence core.
//! The root is not fixed in advance: a virtual super-root is connected to every
//! node and costs are compared lexicographically as
//! `(virtual edges used, -total weight, rank of chosen root)`, so a single
//! Edmonds run yields the best arborescence over all roots, preferring the
//! smaller sector code when two roots give the same weight. Incoming
//! arborescences are solved on the reversed network and reversed back.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::ops::Sub;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Edge, InfoFlowNetwork};
use crate::timeseries::SectorMeta;

/// Largest network accepted by [`enumerate_arborescences`].
pub const MAX_ENUMERATION_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Root is a source; every other node has exactly one incoming edge.
    Outgoing,
    /// Root is a sink; every other node has exactly one outgoing edge.
    Incoming,
}

impl Orientation {
    pub fn short(self) -> &'static str {
        match self {
            Orientation::Outgoing => "out",
            Orientation::Incoming => "in",
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Orientation::Outgoing => Orientation::Incoming,
            Orientation::Incoming => Orientation::Outgoing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arborescence {
    pub orientation: Orientation,
    pub nodes: Vec<SectorMeta>,
    pub root: usize,
    /// Sorted by `(source, target)`.
    pub edges: Vec<Edge>,
    /// Sum of edge weights, accumulated in edge order.
    pub total_weight: f64,
}

impl Arborescence {
    pub fn new(
        orientation: Orientation,
        nodes: Vec<SectorMeta>,
        root: usize,
        mut edges: Vec<Edge>,
    ) -> Result<Self> {
        edges.sort_by_key(|e| (e.source, e.target));
        let total_weight = edges.iter().map(|e| e.weight).sum();
        let a = Self {
            orientation,
            nodes,
            root,
            edges,
            total_weight,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// Checks edge count, degree constraints for the orientation and acyclicity.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let bad = |msg: String| Err(Error::InvalidArborescence(msg));
        if n == 0 || self.root >= n {
            return bad(format!("root {} outside 0..{n}", self.root));
        }
        if self.edges.len() != n - 1 {
            return bad(format!("{} edges for {n} nodes", self.edges.len()));
        }
        // parent pointer along the direction towards the root
        let mut toward_root = vec![None; n];
        for e in &self.edges {
            if e.source >= n || e.target >= n || e.source == e.target {
                return bad(format!("edge {}->{} is invalid", e.source, e.target));
            }
            let (child, parent) = match self.orientation {
                Orientation::Outgoing => (e.target, e.source),
                Orientation::Incoming => (e.source, e.target),
            };
            if child == self.root {
                return bad(format!("root {} has a {} edge", self.root, self.orientation.short()));
            }
            if toward_root[child].replace(parent).is_some() {
                return bad(format!("node {child} has more than one tree parent"));
            }
        }
        for start in 0..n {
            let mut v = start;
            let mut steps = 0;
            while v != self.root {
                v = match toward_root[v] {
                    Some(p) => p,
                    None => return bad(format!("node {v} is not connected to the root")),
                };
                steps += 1;
                if steps > n {
                    return bad("directed cycle".into());
                }
            }
        }
        Ok(())
    }

    /// Every edge flipped; an outgoing arborescence becomes an incoming one.
    pub fn reversed(&self) -> Self {
        let mut edges: Vec<Edge> = self.edges.iter().map(|e| e.reversed()).collect();
        edges.sort_by_key(|e| (e.source, e.target));
        let total_weight = edges.iter().map(|e| e.weight).sum();
        Self {
            orientation: self.orientation.flipped(),
            nodes: self.nodes.clone(),
            root: self.root,
            edges,
            total_weight,
        }
    }

    pub fn root_sector(&self) -> &SectorMeta {
        &self.nodes[self.root]
    }
}

fn code_ranks(nodes: &[SectorMeta]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| nodes[a].code.cmp(&nodes[b].code));
    let mut rank = vec![0; nodes.len()];
    for (r, i) in order.into_iter().enumerate() {
        rank[i] = r;
    }
    rank
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cost {
    virtual_edges: i64,
    neg_weight: f64,
    root_rank: i64,
}

impl Sub for Cost {
    type Output = Cost;
    fn sub(self, rhs: Cost) -> Cost {
        Cost {
            virtual_edges: self.virtual_edges - rhs.virtual_edges,
            neg_weight: self.neg_weight - rhs.neg_weight,
            root_rank: self.root_rank - rhs.root_rank,
        }
    }
}

impl Cost {
    fn cmp(&self, other: &Cost) -> Ordering {
        self.virtual_edges
            .cmp(&other.virtual_edges)
            .then(self.neg_weight.total_cmp(&other.neg_weight))
            .then(self.root_rank.cmp(&other.root_rank))
    }
}

#[derive(Debug, Clone, Copy)]
struct Arc {
    from: usize,
    to: usize,
    cost: Cost,
    /// Code ranks of the original endpoints; breaks equal-cost choices.
    tie: (usize, usize),
}

impl Arc {
    fn better_than(&self, other: &Arc) -> bool {
        self.cost.cmp(&other.cost).then(self.tie.cmp(&other.tie)) == Ordering::Less
    }
}

/// Minimum-cost arborescence rooted at `root`; every non-root node must have
/// an incoming arc. Returns indices into `arcs`.
fn min_arborescence(n: usize, root: usize, arcs: &[Arc]) -> Vec<usize> {
    let mut best: Vec<Option<usize>> = vec![None; n];
    for (k, a) in arcs.iter().enumerate() {
        if a.to == root || a.from == a.to {
            continue;
        }
        match best[a.to] {
            Some(b) if !a.better_than(&arcs[b]) => {}
            _ => best[a.to] = Some(k),
        }
    }
    let parent = |v: usize| arcs[best[v].expect("every non-root node has an in-arc")].from;

    let mut walk = vec![usize::MAX; n];
    let mut cycles: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        let mut v = start;
        while v != root && walk[v] == usize::MAX {
            walk[v] = start;
            v = parent(v);
        }
        if v != root && walk[v] == start {
            let mut cycle = vec![v];
            let mut u = parent(v);
            while u != v {
                cycle.push(u);
                u = parent(u);
            }
            cycles.push(cycle);
        }
    }
    if cycles.is_empty() {
        return best.into_iter().flatten().collect();
    }

    let mut new_id = vec![usize::MAX; n];
    let mut cycle_of = vec![usize::MAX; n];
    let mut next = 0;
    for (c, cycle) in cycles.iter().enumerate() {
        for &v in cycle {
            new_id[v] = next;
            cycle_of[v] = c;
        }
        next += 1;
    }
    for id in new_id.iter_mut().filter(|id| **id == usize::MAX) {
        *id = next;
        next += 1;
    }

    let mut contracted = Vec::with_capacity(arcs.len());
    let mut origin = Vec::with_capacity(arcs.len());
    for (k, a) in arcs.iter().enumerate() {
        let (u, v) = (new_id[a.from], new_id[a.to]);
        if u == v {
            continue;
        }
        let cost = if cycle_of[a.to] != usize::MAX {
            a.cost - arcs[best[a.to].unwrap()].cost
        } else {
            a.cost
        };
        contracted.push(Arc {
            from: u,
            to: v,
            cost,
            tie: a.tie,
        });
        origin.push(k);
    }

    let chosen: Vec<usize> = min_arborescence(next, new_id[root], &contracted)
        .into_iter()
        .map(|k| origin[k])
        .collect();

    let mut entry = vec![usize::MAX; cycles.len()];
    for &k in &chosen {
        let c = cycle_of[arcs[k].to];
        if c != usize::MAX {
            entry[c] = arcs[k].to;
        }
    }
    let mut result = chosen;
    for (c, cycle) in cycles.iter().enumerate() {
        for &v in cycle {
            if v != entry[c] {
                result.push(best[v].unwrap());
            }
        }
    }
    result
}

/// Maximum spanning arborescence over all candidate roots.
pub fn max_spanning_arborescence(
    g: &InfoFlowNetwork,
    orientation: Orientation,
) -> Result<Arborescence> {
    match orientation {
        Orientation::Outgoing => max_outgoing(g),
        Orientation::Incoming => Ok(max_outgoing(&g.reversed())?.reversed()),
    }
}

fn max_outgoing(g: &InfoFlowNetwork) -> Result<Arborescence> {
    let n = g.n();
    if n == 0 {
        return Err(Error::InvalidNetwork("network has no nodes".into()));
    }
    if n == 1 {
        return Arborescence::new(Orientation::Outgoing, g.nodes.clone(), 0, Vec::new());
    }
    let rank = code_ranks(&g.nodes);
    let super_root = n;
    let mut arcs: Vec<Arc> = g
        .edges
        .iter()
        .map(|e| Arc {
            from: e.source,
            to: e.target,
            cost: Cost {
                virtual_edges: 0,
                neg_weight: -e.weight,
                root_rank: 0,
            },
            tie: (rank[e.source], rank[e.target]),
        })
        .collect();
    let real = arcs.len();
    arcs.extend((0..n).map(|v| Arc {
        from: super_root,
        to: v,
        cost: Cost {
            virtual_edges: 1,
            neg_weight: 0.0,
            root_rank: rank[v] as i64,
        },
        tie: (usize::MAX, rank[v]),
    }));

    let chosen = min_arborescence(n + 1, super_root, &arcs);
    let roots: Vec<usize> = chosen
        .iter()
        .filter(|&&k| k >= real)
        .map(|&k| arcs[k].to)
        .collect();
    if roots.len() != 1 {
        return Err(Error::NoSpanningRoot);
    }
    let edges = chosen
        .into_iter()
        .filter(|&k| k < real)
        .map(|k| g.edges[k])
        .collect();
    Arborescence::new(Orientation::Outgoing, g.nodes.clone(), roots[0], edges)
}

/// Exhaustive search over every root and every spanning arborescence.
///
/// Ties on total weight go to the smaller root code, then to the
/// lexicographically smallest list of `(source code, target code)` edges.
pub fn enumerate_arborescences(
    g: &InfoFlowNetwork,
    orientation: Orientation,
) -> Result<Arborescence> {
    let n = g.n();
    if n > MAX_ENUMERATION_NODES {
        return Err(Error::TooManyNodes {
            max: MAX_ENUMERATION_NODES,
            got: n,
        });
    }
    if n == 0 {
        return Err(Error::InvalidNetwork("network has no nodes".into()));
    }
    let rank = code_ranks(&g.nodes);
    // candidate tree edges per node: the edge linking it towards the root
    let mut candidates: Vec<Vec<Edge>> = vec![Vec::new(); n];
    for e in &g.edges {
        match orientation {
            Orientation::Outgoing => candidates[e.target].push(*e),
            Orientation::Incoming => candidates[e.source].push(*e),
        }
    }

    struct Best {
        total: f64,
        root_rank: usize,
        key: Vec<(usize, usize)>,
        root: usize,
        edges: Vec<Edge>,
    }
    let mut best: Option<Best> = None;

    for root in 0..n {
        let others: Vec<usize> = (0..n).filter(|&v| v != root).collect();
        if others.iter().any(|&v| candidates[v].is_empty()) {
            continue;
        }
        let mut choice = vec![0usize; others.len()];
        loop {
            let mut toward_root = vec![usize::MAX; n];
            let mut edges = Vec::with_capacity(others.len());
            for (slot, &v) in others.iter().enumerate() {
                let e = candidates[v][choice[slot]];
                toward_root[v] = match orientation {
                    Orientation::Outgoing => e.source,
                    Orientation::Incoming => e.target,
                };
                edges.push(e);
            }
            let acyclic = others.iter().all(|&start| {
                let mut v = start;
                for _ in 0..n {
                    if v == root {
                        return true;
                    }
                    v = toward_root[v];
                }
                v == root
            });
            if acyclic {
                edges.sort_by_key(|e| (e.source, e.target));
                let total: f64 = edges.iter().map(|e| e.weight).sum();
                let mut key: Vec<(usize, usize)> =
                    edges.iter().map(|e| (rank[e.source], rank[e.target])).collect();
                key.sort_unstable();
                let wins = match &best {
                    None => true,
                    Some(b) => {
                        total > b.total
                            || (total == b.total
                                && (rank[root], &key) < (b.root_rank, &b.key))
                    }
                };
                if wins {
                    best = Some(Best {
                        total,
                        root_rank: rank[root],
                        key,
                        root,
                        edges,
                    });
                }
            }
            // advance the mixed-radix counter
            let mut slot = 0;
            while slot < others.len() {
                choice[slot] += 1;
                if choice[slot] < candidates[others[slot]].len() {
                    break;
                }
                choice[slot] = 0;
                slot += 1;
            }
            if slot == others.len() {
                break;
            }
        }
    }
    let best = best.ok_or(Error::NoSpanningRoot)?;
    Arborescence::new(orientation, g.nodes.clone(), best.root, best.edges)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoFlowPath {
    /// Node indices in flow direction.
    pub nodes: Vec<usize>,
    pub sectors: Vec<SectorMeta>,
    pub total_weight: f64,
    pub length: usize,
}

/// Heaviest root-to-leaf (outgoing) or leaf-to-root (incoming) path.
///
/// Path weights are summed in flow order; equal weights go to the
/// lexicographically smallest sequence of sector codes.
pub fn maximal_information_flow_path(a: &Arborescence) -> InfoFlowPath {
    let n = a.n();
    let mut children: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in &a.edges {
        match a.orientation {
            Orientation::Outgoing => children[e.source].push((e.target, e.weight)),
            Orientation::Incoming => children[e.target].push((e.source, e.weight)),
        }
    }

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut stack: Vec<usize> = vec![a.root];
    let mut weights: Vec<f64> = Vec::new();
    // explicit DFS; `cursor[v]` is the next child of v to visit
    let mut cursor = vec![0usize; n];
    while let Some(&v) = stack.last() {
        if children[v].is_empty() && cursor[v] == 0 {
            cursor[v] = 1;
            let (flow, flow_weights): (Vec<usize>, Vec<f64>) = match a.orientation {
                Orientation::Outgoing => (stack.clone(), weights.clone()),
                Orientation::Incoming => (
                    stack.iter().rev().copied().collect(),
                    weights.iter().rev().copied().collect(),
                ),
            };
            let total: f64 = flow_weights.iter().sum();
            let wins = match &best {
                None => true,
                Some((w, p)) => {
                    total > *w
                        || (total == *w
                            && flow
                                .iter()
                                .map(|&i| &a.nodes[i].code)
                                .lt(p.iter().map(|&i| &a.nodes[i].code)))
                }
            };
            if wins {
                best = Some((total, flow));
            }
        }
        if cursor[v] < children[v].len() {
            let (child, w) = children[v][cursor[v]];
            cursor[v] += 1;
            stack.push(child);
            weights.push(w);
        } else {
            stack.pop();
            weights.pop();
        }
    }
    let (total_weight, nodes) = best.expect("the root is always reached");
    InfoFlowPath {
        sectors: nodes.iter().map(|&i| a.nodes[i].clone()).collect(),
        length: nodes.len(),
        nodes,
        total_weight,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDegree {
    pub in_degree: usize,
    pub out_degree: usize,
    pub total: usize,
}

/// Per-node degrees within the arborescence, indexed like `a.nodes`.
pub fn degrees(a: &Arborescence) -> Vec<NodeDegree> {
    let mut d = vec![NodeDegree::default(); a.n()];
    for e in &a.edges {
        d[e.source].out_degree += 1;
        d[e.target].in_degree += 1;
    }
    for x in &mut d {
        x.total = x.in_degree + x.out_degree;
    }
    d
}

fn on_path(path: &InfoFlowPath, e: &Edge) -> bool {
    path.nodes
        .windows(2)
        .any(|w| w[0] == e.source && w[1] == e.target)
}

#[derive(Serialize)]
struct ArborescenceJson<'a> {
    orientation: Orientation,
    root: &'a str,
    total_weight: f64,
    nodes: &'a [SectorMeta],
    edges: Vec<TreeEdgeJson<'a>>,
    path: PathJson<'a>,
}

#[derive(Serialize)]
struct TreeEdgeJson<'a> {
    source: &'a str,
    target: &'a str,
    weight: f64,
    on_path: bool,
}

#[derive(Serialize)]
struct PathJson<'a> {
    nodes: Vec<&'a str>,
    total_weight: f64,
    length: usize,
}

/// JSON document with root, edges, maximal path and weights at full precision.
pub fn to_json(a: &Arborescence, path: &InfoFlowPath) -> Result<String> {
    let code = |i: usize| a.nodes[i].code.as_str();
    let doc = ArborescenceJson {
        orientation: a.orientation,
        root: code(a.root),
        total_weight: a.total_weight,
        nodes: &a.nodes,
        edges: a
            .edges
            .iter()
            .map(|e| TreeEdgeJson {
                source: code(e.source),
                target: code(e.target),
                weight: e.weight,
                on_path: on_path(path, e),
            })
            .collect(),
        path: PathJson {
            nodes: path.nodes.iter().map(|&i| code(i)).collect(),
            total_weight: path.total_weight,
            length: path.length,
        },
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Graphviz rendering. Maximal-path edges are red and thick, path nodes are
/// yellow squares and the root is drawn as a double circle.
pub fn to_dot(a: &Arborescence, path: &InfoFlowPath) -> String {
    let mut out = format!(
        "digraph msa_{} {{\n    node [shape=circle];\n",
        a.orientation.short()
    );
    for (i, s) in a.nodes.iter().enumerate() {
        let mut attrs = format!("label=\"{}\"", s.short_code);
        if i == a.root {
            attrs.push_str(", shape=doublecircle");
        } else if path.nodes.contains(&i) {
            attrs.push_str(", shape=square");
        }
        if path.nodes.contains(&i) {
            attrs.push_str(", style=filled, fillcolor=yellow");
        }
        let _ = writeln!(out, "    \"{}\" [{attrs}];", s.code);
    }
    for e in &a.edges {
        let extra = if on_path(path, e) {
            ", color=red, penwidth=2.5"
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "    \"{}\" -> \"{}\" [label=\"{:.4}\"{extra}];",
            a.nodes[e.source].code, a.nodes[e.target].code, e.weight
        );
    }
    out.push_str("}\n");
    out
}
