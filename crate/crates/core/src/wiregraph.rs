//! Wireframe graph model, document ingestion and Eulerian path extraction.
//!
//! A design is an undirected simple graph over 3D vertices in millimetres.
//! Fabrication from one continuous wire requires a walk that uses every edge
//! exactly once, so the graph must be connected (ignoring isolated vertices)
//! with zero or two odd-degree vertices.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("edge {edge} references vertex {vertex}, but only {count} vertices exist")]
    IndexOutOfRange {
        edge: usize,
        vertex: usize,
        count: usize,
    },
    #[error("edge {edge} is a self-loop on vertex {vertex}")]
    SelfLoop { edge: usize, vertex: usize },
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("graph is not Eulerian ({0} odd-degree vertices, connected: {1})")]
    NotEulerian(usize, bool),
}

/// Identifier assigned to each edge, stable for a given graph value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub usize);

/// An undirected edge stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub id: EdgeId,
    pub a: usize,
    pub b: usize,
}

impl Edge {
    pub fn other(&self, v: usize) -> usize {
        if v == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireframeGraph {
    vertices: Vec<Vec3>,
    edges: Vec<Edge>,
}

/// Non-fatal observations made while ingesting or analysing a graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning(pub String);

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Graph plus whatever the ingest step wanted to warn about.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub graph: WireframeGraph,
    pub warnings: Vec<Warning>,
}

impl WireframeGraph {
    /// Builds a normalized graph. Edge pairs are sorted, duplicates collapsed
    /// (first occurrence keeps its position), and ids assigned in order.
    pub fn new(vertices: Vec<Vec3>, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if let Some(i) = vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(GraphError::NonFinite(i));
        }
        let count = vertices.len();
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(edges.len());
        for (k, &(i, j)) in edges.iter().enumerate() {
            for v in [i, j] {
                if v >= count {
                    return Err(GraphError::IndexOutOfRange {
                        edge: k,
                        vertex: v,
                        count,
                    });
                }
            }
            if i == j {
                return Err(GraphError::SelfLoop { edge: k, vertex: i });
            }
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            if seen.insert((a, b)) {
                out.push(Edge {
                    id: EdgeId(out.len()),
                    a,
                    b,
                });
            }
        }
        Ok(Self {
            vertices,
            edges: out,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex(&self, i: usize) -> Vec3 {
        self.vertices[i]
    }

    pub fn edge_length(&self, e: &Edge) -> f64 {
        (self.vertices[e.b] - self.vertices[e.a]).norm()
    }

    /// Looks up the edge joining `i` and `j`, in either order.
    pub fn find_edge(&self, i: usize, j: usize) -> Option<&Edge> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.edges.iter().find(|e| e.a == a && e.b == b)
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertices.len()];
        for e in &self.edges {
            deg[e.a] += 1;
            deg[e.b] += 1;
        }
        deg
    }

    /// Adjacency lists of `(neighbour, edge id)`, sorted by neighbour index.
    pub fn adjacency(&self) -> Vec<Vec<(usize, EdgeId)>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for e in &self.edges {
            adj[e.a].push((e.b, e.id));
            adj[e.b].push((e.a, e.id));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Vertices that no edge touches.
    pub fn isolated_vertices(&self) -> Vec<usize> {
        self.degrees()
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Graph with the given edges removed; vertex indices are preserved.
    pub fn without_edges(&self, remove: &[EdgeId]) -> Self {
        let pairs: Vec<_> = self
            .edges
            .iter()
            .filter(|e| !remove.contains(&e.id))
            .map(|e| (e.a, e.b))
            .collect();
        Self::new(self.vertices.clone(), &pairs).expect("subgraph of a valid graph is valid")
    }

    /// SHA-256 over the canonical JSON form, hex encoded.
    pub fn content_hash(&self) -> String {
        let doc = serde_json::to_vec(&self.to_document()).expect("graph document serializes");
        let digest = Sha256::digest(&doc);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            vertices: self.vertices.iter().map(|v| [v.x, v.y, v.z]).collect(),
            edges: self.edges.iter().map(|e| [e.a, e.b]).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("graph document serializes")
    }
}

/// The JSON interchange form: `{"vertices": [[x,y,z], ...], "edges": [[i,j], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub vertices: Vec<[f64; 3]>,
    pub edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphDocument> for WireframeGraph {
    type Error = GraphError;

    fn try_from(doc: GraphDocument) -> Result<Self, GraphError> {
        let vertices = doc
            .vertices
            .iter()
            .map(|&[x, y, z]| Vec3::new(x, y, z))
            .collect();
        let pairs: Vec<_> = doc.edges.iter().map(|&[i, j]| (i, j)).collect();
        WireframeGraph::new(vertices, &pairs)
    }
}

impl Serialize for WireframeGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_document().serialize(s)
    }
}

impl<'de> Deserialize<'de> for WireframeGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = GraphDocument::deserialize(d)?;
        WireframeGraph::try_from(doc).map_err(serde::de::Error::custom)
    }
}

/// Parses a JSON graph document.
pub fn parse_json(text: &str) -> Result<WireframeGraph, GraphError> {
    let doc: GraphDocument =
        serde_json::from_str(text).map_err(|e| GraphError::Malformed(e.to_string()))?;
    WireframeGraph::try_from(doc)
}

/// Parses the OBJ subset: `v x y z` and `l i j [k ...]` (1-based, negative
/// indices count back from the last vertex). Other records are skipped with
/// a warning.
pub fn parse_obj(text: &str) -> Result<Ingested, GraphError> {
    let mut vertices = Vec::new();
    let mut pairs = Vec::new();
    let mut warnings = Vec::new();
    let mut skipped: Vec<(String, usize)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let tag = fields.next().unwrap_or_default();
        match tag {
            "v" => {
                let coords: Vec<f64> = fields
                    .take(3)
                    .map(|f| f.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| GraphError::Malformed(format!("line {}: {e}", lineno + 1)))?;
                if coords.len() != 3 {
                    return Err(GraphError::Malformed(format!(
                        "line {}: vertex needs 3 coordinates",
                        lineno + 1
                    )));
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            "l" => {
                let idx = fields
                    .map(|f| resolve_obj_index(f, vertices.len(), lineno + 1))
                    .collect::<Result<Vec<_>, _>>()?;
                if idx.len() < 2 {
                    return Err(GraphError::Malformed(format!(
                        "line {}: line record needs at least 2 indices",
                        lineno + 1
                    )));
                }
                pairs.extend(idx.windows(2).map(|w| (w[0], w[1])));
            }
            other => match skipped.iter_mut().find(|(t, _)| t == other) {
                Some((_, n)) => *n += 1,
                None => skipped.push((other.to_string(), 1)),
            },
        }
    }
    for (tag, n) in skipped {
        warnings.push(Warning(format!("ignored {n} OBJ record(s) of type '{tag}'")));
    }
    let graph = WireframeGraph::new(vertices, &pairs)?;
    warnings.extend(duplicate_warning(pairs.len(), &graph));
    warnings.extend(isolated_warning(&graph));
    Ok(Ingested { graph, warnings })
}

fn resolve_obj_index(field: &str, count: usize, lineno: usize) -> Result<usize, GraphError> {
    // Only the vertex part of `v/vt` style references matters.
    let head = field.split('/').next().unwrap_or(field);
    let raw: i64 = head
        .parse()
        .map_err(|_| GraphError::Malformed(format!("line {lineno}: bad index '{field}'")))?;
    let resolved = match raw {
        0 => None,
        r if r > 0 => Some(r as usize - 1),
        r => (count as i64 + r).try_into().ok(),
    };
    resolved.ok_or_else(|| GraphError::Malformed(format!("line {lineno}: bad index '{field}'")))
}

fn duplicate_warning(given: usize, graph: &WireframeGraph) -> Option<Warning> {
    let dropped = given - graph.edges().len();
    (dropped > 0).then(|| Warning(format!("{dropped} duplicate edge(s) merged")))
}

fn isolated_warning(graph: &WireframeGraph) -> Option<Warning> {
    let iso = graph.isolated_vertices();
    (!iso.is_empty() && !graph.edges().is_empty())
        .then(|| Warning(format!("isolated vertices ignored: {iso:?}")))
}

/// Detects JSON (leading `{`) or falls back to the OBJ subset.
pub fn ingest(document: &str) -> Result<Ingested, GraphError> {
    if document.trim_start().starts_with('{') {
        let doc: GraphDocument =
            serde_json::from_str(document).map_err(|e| GraphError::Malformed(e.to_string()))?;
        let given = doc.edges.len();
        let graph = WireframeGraph::try_from(doc)?;
        let warnings = duplicate_warning(given, &graph)
            .into_iter()
            .chain(isolated_warning(&graph))
            .collect();
        Ok(Ingested { graph, warnings })
    } else {
        parse_obj(document)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EulerClass {
    Circuit,
    Trail,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EulerStatus {
    pub classification: EulerClass,
    pub odd_vertices: Vec<usize>,
    pub connected: bool,
}

impl EulerStatus {
    pub fn is_fabricable(&self) -> bool {
        matches!(self.classification, EulerClass::Circuit | EulerClass::Trail)
    }
}

/// Connectivity over vertices that have at least one edge. False for an
/// edgeless graph.
pub fn is_connected(g: &WireframeGraph) -> bool {
    let adj = g.adjacency();
    let Some(start) = adj.iter().position(|a| !a.is_empty()) else {
        return false;
    };
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(v) = stack.pop() {
        for &(w, _) in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    adj.iter()
        .zip(&seen)
        .all(|(list, &s)| list.is_empty() || s)
}

pub fn euler_status(g: &WireframeGraph) -> EulerStatus {
    let odd_vertices: Vec<usize> = g
        .degrees()
        .iter()
        .enumerate()
        .filter(|(_, &d)| d % 2 == 1)
        .map(|(i, _)| i)
        .collect();
    let connected = is_connected(g);
    let classification = match (connected, odd_vertices.len()) {
        (true, 0) => EulerClass::Circuit,
        (true, 2) => EulerClass::Trail,
        _ => EulerClass::None,
    };
    EulerStatus {
        classification,
        odd_vertices,
        connected,
    }
}

/// Vertex sequence of an Euler trail or circuit (Hierholzer).
///
/// Trails start at the lower odd vertex, circuits at the lowest-index vertex
/// with an edge. Neighbours are always tried lowest index first, so the
/// output is a pure function of the graph.
pub fn euler_path(g: &WireframeGraph) -> Result<Vec<usize>, GraphError> {
    euler_walk(g).map(|walk| walk.into_iter().map(|(v, _)| v).collect())
}

/// Like [`euler_path`] but also returns the edge used to reach each vertex
/// (`None` for the start vertex).
pub fn euler_walk(g: &WireframeGraph) -> Result<Vec<(usize, Option<EdgeId>)>, GraphError> {
    let status = euler_status(g);
    let start = match status.classification {
        EulerClass::Trail => status.odd_vertices[0],
        EulerClass::Circuit => g
            .degrees()
            .iter()
            .position(|&d| d > 0)
            .expect("circuit has an edge"),
        EulerClass::None => {
            return Err(GraphError::NotEulerian(
                status.odd_vertices.len(),
                status.connected,
            ))
        }
    };

    let adj = g.adjacency();
    let mut next = vec![0usize; adj.len()];
    let mut used = vec![false; g.edges().len()];
    let mut stack: Vec<(usize, Option<EdgeId>)> = vec![(start, None)];
    let mut out = Vec::with_capacity(g.edges().len() + 1);

    while let Some(&(v, _)) = stack.last() {
        let list = &adj[v];
        while next[v] < list.len() && used[list[next[v]].1 .0] {
            next[v] += 1;
        }
        if let Some(&(w, id)) = list.get(next[v]) {
            used[id.0] = true;
            stack.push((w, Some(id)));
        } else {
            out.push(stack.pop().expect("stack is non-empty"));
        }
    }
    // Pop order is the walk reversed; each entry's edge joins it to the
    // entry popped after it, i.e. the previous vertex of the forward walk.
    out.reverse();
    let walk = out;
    Ok(walk)
}
