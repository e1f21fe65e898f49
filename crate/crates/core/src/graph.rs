//! Metric-graph data model and structural validation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coupling imposed at a vertex. Derivatives are taken in the outgoing
/// direction on every incident edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VertexCondition {
    /// Continuity and vanishing sum of outgoing derivatives.
    NeumannKirchhoff,
    /// Continuity and `Σ ∂ψ_e(v) = α ψ(v)`.
    Delta(f64),
    /// Equal outgoing derivatives `d` and `Σ ψ_e(v) = β d`.
    DeltaPrime(f64),
    /// `α_e ψ_e(v)` equal across ends and `Σ ∂ψ_e(v) / α_e = 0`.
    /// Weights follow the order of [`MetricGraph::incidences`].
    GeneralizedKirchhoff(Vec<f64>),
}

impl VertexCondition {
    /// True for couplings that share a single value at the vertex.
    pub fn is_continuous(&self) -> bool {
        matches!(self, VertexCondition::NeumannKirchhoff | VertexCondition::Delta(_))
    }

    /// δ strength, zero for Neumann–Kirchhoff.
    pub fn delta_strength(&self) -> Option<f64> {
        match self {
            VertexCondition::NeumannKirchhoff => Some(0.0),
            VertexCondition::Delta(a) => Some(*a),
            _ => None,
        }
    }
}

/// Real potential sampled along an edge coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Potential {
    Constant(f64),
    /// Samples at `x = i * step`, linearly interpolated and held constant
    /// beyond the last sample.
    Sampled { step: f64, values: Vec<f64> },
}

impl Potential {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Potential::Constant(c) => *c,
            Potential::Sampled { step, values } => {
                if values.is_empty() {
                    return 0.0;
                }
                let s = (x / step).max(0.0);
                let i = s.floor() as usize;
                if i + 1 >= values.len() {
                    return *values.last().unwrap();
                }
                let t = s - i as f64;
                values[i] * (1.0 - t) + values[i + 1] * t
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: String,
    pub condition: VertexCondition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub from: String,
    /// `None` for an unbounded edge, parameterized `[0, ∞)` from `from`.
    pub to: Option<String>,
    /// Positive length, `f64::INFINITY` for unbounded edges.
    pub length: f64,
    /// Whether the focusing nonlinearity acts on this edge.
    pub nonlinear: bool,
    pub potential: Option<Potential>,
}

impl Edge {
    pub fn bounded(id: &str, from: &str, to: &str, length: f64) -> Self {
        Edge {
            id: id.into(),
            from: from.into(),
            to: Some(to.into()),
            length,
            nonlinear: true,
            potential: None,
        }
    }

    pub fn half_line(id: &str, from: &str) -> Self {
        Edge {
            id: id.into(),
            from: from.into(),
            to: None,
            length: f64::INFINITY,
            nonlinear: true,
            potential: None,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.to.is_none()
    }

    pub fn is_loop(&self) -> bool {
        self.to.as_deref() == Some(self.from.as_str())
    }

    pub fn with_nonlinear(mut self, on: bool) -> Self {
        self.nonlinear = on;
        self
    }

    pub fn with_potential(mut self, v: Potential) -> Self {
        self.potential = Some(v);
        self
    }
}

/// Which end of an edge touches a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum End {
    /// Coordinate 0.
    Start,
    /// Coordinate ℓ_e.
    Finish,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeEnd {
    pub edge: usize,
    pub end: End,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricGraph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Error>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl MetricGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, id: &str, condition: VertexCondition) -> &mut Self {
        self.vertices.push(Vertex { id: id.into(), condition });
        self
    }

    pub fn add_edge(&mut self, edge: Edge) -> &mut Self {
        self.edges.push(edge);
        self
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.id == id)
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    /// Endpoint vertex indices of edge `e`. Panics on dangling references;
    /// call [`MetricGraph::validate`] first.
    pub fn endpoints(&self, e: usize) -> (usize, Option<usize>) {
        let edge = &self.edges[e];
        let a = self.vertex_index(&edge.from).expect("dangling vertex");
        let b = edge.to.as_ref().map(|t| self.vertex_index(t).expect("dangling vertex"));
        (a, b)
    }

    /// Edge ends touching vertex `v`, ordered by edge index, start before finish.
    pub fn incidences(&self, v: usize) -> Vec<EdgeEnd> {
        let id = &self.vertices[v].id;
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if &e.from == id {
                out.push(EdgeEnd { edge: i, end: End::Start });
            }
            if e.to.as_ref() == Some(id) {
                out.push(EdgeEnd { edge: i, end: End::Finish });
            }
        }
        out
    }

    pub fn degree(&self, v: usize) -> usize {
        self.incidences(v).len()
    }

    pub fn is_compact(&self) -> bool {
        self.edges.iter().all(|e| !e.is_unbounded())
    }

    pub fn half_line_count(&self) -> usize {
        self.edges.iter().filter(|e| e.is_unbounded()).count()
    }

    /// Total length of bounded edges.
    pub fn bounded_length(&self) -> f64 {
        self.edges.iter().filter(|e| !e.is_unbounded()).map(|e| e.length).sum()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut seen = BTreeSet::new();
        for v in &self.vertices {
            if !seen.insert(format!("v:{}", v.id)) {
                violations.push(Error::DuplicateId(v.id.clone()));
            }
        }
        for e in &self.edges {
            if !seen.insert(format!("e:{}", e.id)) {
                violations.push(Error::DuplicateId(e.id.clone()));
            }
        }
        let mut dangling = false;
        for e in &self.edges {
            for id in std::iter::once(&e.from).chain(e.to.iter()) {
                if self.vertex_index(id).is_none() {
                    dangling = true;
                    violations.push(Error::DanglingVertex {
                        edge: e.id.clone(),
                        vertex: id.clone(),
                    });
                }
            }
            if e.is_unbounded() {
                if e.length != f64::INFINITY {
                    violations.push(Error::InvalidGraph(format!(
                        "unbounded edge `{}` must have infinite length",
                        e.id
                    )));
                }
            } else if !(e.length > 0.0) || !e.length.is_finite() {
                violations.push(Error::NonPositiveLength {
                    edge: e.id.clone(),
                    length: e.length,
                });
            }
        }
        if self.vertices.is_empty() {
            violations.push(Error::InvalidGraph("graph has no vertices".into()));
        }
        if !dangling {
            for (vi, v) in self.vertices.iter().enumerate() {
                let deg = self.degree(vi);
                match &v.condition {
                    VertexCondition::GeneralizedKirchhoff(w) => {
                        if w.len() != deg {
                            violations.push(Error::InvalidGraph(format!(
                                "vertex `{}` has {} weights for {} edge ends",
                                v.id,
                                w.len(),
                                deg
                            )));
                        }
                        if w.iter().any(|x| !(*x > 0.0)) {
                            violations.push(Error::Domain(format!(
                                "generalized Kirchhoff weights at `{}` must be positive",
                                v.id
                            )));
                        }
                    }
                    VertexCondition::DeltaPrime(b) if *b == 0.0 => {
                        violations.push(Error::Domain(format!(
                            "δ′ strength at `{}` must be nonzero",
                            v.id
                        )));
                    }
                    _ => {}
                }
            }
            let comps = self.components();
            if comps > 1 {
                violations.push(Error::Disconnected { components: comps });
            }
        }
        ValidationReport { violations }
    }

    /// Validate and return the first violation as an error.
    pub fn check(&self) -> Result<()> {
        match self.validate().violations.into_iter().next() {
            None => Ok(()),
            Some(e) => Err(e),
        }
    }

    fn components(&self) -> usize {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let nx = p[y];
                p[y] = r;
                y = nx;
            }
            r
        }
        for i in 0..self.edges.len() {
            let (a, b) = self.endpoints(i);
            if let Some(b) = b {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
        let roots: BTreeSet<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
        roots.len()
    }

    /// Adjacency as a map from vertex to (neighbor, edge index) pairs over
    /// bounded edges.
    pub fn adjacency(&self) -> BTreeMap<usize, Vec<(usize, usize)>> {
        let mut adj: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        for v in 0..self.vertices.len() {
            adj.entry(v).or_default();
        }
        for i in 0..self.edges.len() {
            let (a, b) = self.endpoints(i);
            if let Some(b) = b {
                adj.entry(a).or_default().push((b, i));
                if a != b {
                    adj.entry(b).or_default().push((a, i));
                }
            }
        }
        adj
    }
}
