//! Reference graphs used throughout the test suites and the CLI.

use crate::graph::{Edge, MetricGraph, VertexCondition};

use VertexCondition::NeumannKirchhoff as NK;

/// Bounded edge `[0, length]` with Neumann ends.
pub fn interval(length: f64) -> MetricGraph {
    let mut g = MetricGraph::new();
    g.add_vertex("a", NK).add_vertex("b", NK);
    g.add_edge(Edge::bounded("e", "a", "b", length));
    g
}

/// Real line as two half-lines glued at `o` with the given coupling.
pub fn line(condition: VertexCondition) -> MetricGraph {
    star(2, condition)
}

/// Half-line `[0, ∞)` with a Neumann end.
pub fn half_line() -> MetricGraph {
    star(1, NK)
}

/// `n` half-lines joined at `o`.
pub fn star(n: usize, condition: VertexCondition) -> MetricGraph {
    let mut g = MetricGraph::new();
    g.add_vertex("o", condition);
    for i in 0..n {
        g.add_edge(Edge::half_line(&format!("h{i}"), "o"));
    }
    g
}

/// Loop of length `loop_length` attached to one half-line.
pub fn tadpole(loop_length: f64) -> MetricGraph {
    flower(&[loop_length])
}

/// Loops of the given lengths plus one half-line at a single vertex.
pub fn flower(loop_lengths: &[f64]) -> MetricGraph {
    let mut g = MetricGraph::new();
    g.add_vertex("v", NK);
    for (i, l) in loop_lengths.iter().enumerate() {
        g.add_edge(Edge::bounded(&format!("loop{i}"), "v", "v", *l));
    }
    g.add_edge(Edge::half_line("tail", "v"));
    g
}

/// Two loops of lengths `2 l_minus`, `2 l_plus` joined by an edge of length `2 l_zero`.
pub fn dumbbell(l_minus: f64, l_zero: f64, l_plus: f64) -> MetricGraph {
    let mut g = MetricGraph::new();
    g.add_vertex("vm", NK).add_vertex("vp", NK);
    g.add_edge(Edge::bounded("loopm", "vm", "vm", 2.0 * l_minus));
    g.add_edge(Edge::bounded("mid", "vm", "vp", 2.0 * l_zero));
    g.add_edge(Edge::bounded("loopp", "vp", "vp", 2.0 * l_plus));
    g
}

/// Circle made of two arcs between `a` and `b`, each carrying a half-line.
pub fn double_bridge(arc1: f64, arc2: f64) -> MetricGraph {
    let mut g = MetricGraph::new();
    g.add_vertex("a", NK).add_vertex("b", NK);
    g.add_edge(Edge::bounded("arc1", "a", "b", arc1));
    g.add_edge(Edge::bounded("arc2", "a", "b", arc2));
    g.add_edge(Edge::half_line("ha", "a"));
    g.add_edge(Edge::half_line("hb", "b"));
    g
}

/// Two half-lines at `v0` with a stack of circles of the given circumferences.
/// Every circle but the last is split into two equal arcs; the last is a loop.
pub fn bubble_tower(circumferences: &[f64]) -> MetricGraph {
    let mut g = MetricGraph::new();
    g.add_vertex("v0", NK);
    g.add_edge(Edge::half_line("h0", "v0"));
    g.add_edge(Edge::half_line("h1", "v0"));
    let n = circumferences.len();
    for (k, c) in circumferences.iter().enumerate() {
        let here = format!("v{k}");
        if k + 1 == n {
            g.add_edge(Edge::bounded(&format!("top{k}"), &here, &here, *c));
        } else {
            let next = format!("v{}", k + 1);
            g.add_vertex(&next, NK);
            g.add_edge(Edge::bounded(&format!("arc{k}a"), &here, &next, c / 2.0));
            g.add_edge(Edge::bounded(&format!("arc{k}b"), &here, &next, c / 2.0));
        }
    }
    g
}

/// Compact circle of the given length.
pub fn circle(length: f64) -> MetricGraph {
    let mut g = MetricGraph::new();
    g.add_vertex("v", NK);
    g.add_edge(Edge::bounded("loop", "v", "v", length));
    g
}
