//! Large-mass multi-pulse states of the cubic equation through
//! Dirichlet-to-Neumann matching.
//!
//! Everything here works in normalized variables `z = εx`, `u = Φ/ε` with
//! `ε = √|ω|`, where the stationary equation reads `−u″ + u − 2u³ = 0`. Pulse
//! edges carry one large bump each; on the remainder of the graph the state is
//! small and fixed by its Dirichlet data at the boundary vertices.

use std::collections::{BTreeMap, BinaryHeap};

use crate::analytic::constant_state;
use crate::discrete::GridOptions;
use crate::error::{Error, Result};
use crate::graph::{End, MetricGraph, VertexCondition};
use crate::period::{period_t, LevelProfile, PeriodQuery};
use crate::quad::bisect;
use crate::solver::{wave_discretization, Provenance, StandingWave};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseKind {
    /// Bounded edge with a free end; the bump sits at the free end.
    Pendant,
    Loop,
    /// Bounded edge between two distinct vertices; the bump starts at the midpoint.
    Internal,
}

#[derive(Debug, Clone)]
pub struct PulseEdge {
    pub edge: usize,
    pub kind: PulseKind,
    /// Distance from the bump to the vertices: half the length for loops and
    /// internal edges, the full length for pendants.
    pub reach: f64,
    /// Free end of a pendant.
    pub free_end: Option<End>,
}

/// A vertex touched by pulse edges.
#[derive(Debug, Clone)]
pub struct JunctionVertex {
    pub vertex: usize,
    /// `Z_j`: all incident edge ends.
    pub total_degree: usize,
    /// `D_j`: incident ends of remainder edges.
    pub remainder_degree: usize,
    /// `(edge, reach)` for every pulse edge end at the vertex.
    pub pulse_ends: Vec<(usize, f64)>,
    /// Smallest reach among the pulse ends.
    pub reach_min: f64,
}

impl JunctionVertex {
    pub fn is_boundary(&self) -> bool {
        self.remainder_degree > 0
    }
}

#[derive(Debug, Clone)]
pub struct PulsePlacement {
    pub edges: Vec<PulseEdge>,
    pub vertices: Vec<JunctionVertex>,
    /// Length of the shortest bounded edge outside the placement (∞ if none).
    pub remainder_min_length: f64,
}

impl PulsePlacement {
    /// Place one pulse on each of the listed edges.
    pub fn new(g: &MetricGraph, edge_ids: &[&str]) -> Result<Self> {
        g.check()?;
        if edge_ids.is_empty() {
            return Err(Error::Domain("placement needs at least one edge".into()));
        }
        let mut chosen = Vec::new();
        for id in edge_ids {
            let e = g.edge_index(id).ok_or_else(|| Error::Domain(format!("unknown edge `{id}`")))?;
            if g.edges[e].is_unbounded() {
                return Err(Error::Domain(format!("edge `{id}` is unbounded")));
            }
            if chosen.contains(&e) {
                return Err(Error::DuplicateId(id.to_string()));
            }
            chosen.push(e);
        }
        let mut edges = Vec::new();
        for &e in &chosen {
            let (a, b) = g.endpoints(e);
            let b = b.unwrap();
            let len = g.edges[e].length;
            let pe = if a == b {
                PulseEdge { edge: e, kind: PulseKind::Loop, reach: 0.5 * len, free_end: None }
            } else {
                match (g.degree(a), g.degree(b)) {
                    (1, 1) => return Err(Error::Domain(format!("edge `{}` is an isolated interval", g.edges[e].id))),
                    (1, _) => PulseEdge { edge: e, kind: PulseKind::Pendant, reach: len, free_end: Some(End::Start) },
                    (_, 1) => PulseEdge { edge: e, kind: PulseKind::Pendant, reach: len, free_end: Some(End::Finish) },
                    _ => PulseEdge { edge: e, kind: PulseKind::Internal, reach: 0.5 * len, free_end: None },
                }
            };
            edges.push(pe);
        }
        // internal pulse edges may not share vertices
        let internal: Vec<usize> = edges.iter().filter(|p| p.kind == PulseKind::Internal).map(|p| p.edge).collect();
        for (i, &e1) in internal.iter().enumerate() {
            for &e2 in &internal[i + 1..] {
                let (a1, b1) = g.endpoints(e1);
                let (a2, b2) = g.endpoints(e2);
                let s1 = [a1, b1.unwrap()];
                if s1.contains(&a2) || s1.contains(&b2.unwrap()) {
                    return Err(Error::Domain(format!(
                        "internal pulse edges `{}` and `{}` share a vertex",
                        g.edges[e1].id, g.edges[e2].id
                    )));
                }
            }
        }
        let mut vertices = Vec::new();
        for v in 0..g.vertices.len() {
            let inc = g.incidences(v);
            let mut pulse_ends = Vec::new();
            let mut remainder = 0;
            for ee in &inc {
                match edges.iter().find(|p| p.edge == ee.edge) {
                    Some(p) if p.free_end == Some(ee.end) => {}
                    Some(p) => pulse_ends.push((p.edge, p.reach)),
                    None => remainder += 1,
                }
            }
            if pulse_ends.is_empty() {
                continue;
            }
            if g.vertices[v].condition != VertexCondition::NeumannKirchhoff {
                return Err(Error::InvalidGraph(format!(
                    "vertex `{}` next to a pulse must carry Kirchhoff conditions",
                    g.vertices[v].id
                )));
            }
            let reach_min = pulse_ends.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
            vertices.push(JunctionVertex {
                vertex: v,
                total_degree: inc.len(),
                remainder_degree: remainder,
                pulse_ends,
                reach_min,
            });
        }
        for p in &edges {
            if let Some(end) = p.free_end {
                let (a, b) = g.endpoints(p.edge);
                let free = if end == End::Start { a } else { b.unwrap() };
                if g.vertices[free].condition != VertexCondition::NeumannKirchhoff {
                    return Err(Error::InvalidGraph("pendant free end must be a Neumann vertex".into()));
                }
            }
        }
        let remainder_min_length = g
            .edges
            .iter()
            .enumerate()
            .filter(|(i, e)| !e.is_unbounded() && !chosen.contains(i))
            .map(|(_, e)| e.length)
            .fold(f64::INFINITY, f64::min);
        Ok(PulsePlacement { edges, vertices, remainder_min_length })
    }

    pub fn boundary(&self) -> impl Iterator<Item = &JunctionVertex> {
        self.vertices.iter().filter(|v| v.is_boundary())
    }

    pub fn contains(&self, edge: usize) -> bool {
        self.edges.iter().any(|p| p.edge == edge)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ConsistencyReport {
    pub violations: Vec<String>,
}

impl ConsistencyReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Length restrictions under which the boundary vertices decouple at leading
/// order, plus the requirement that an internal pulse edge be shorter than
/// the pulse loops next to it.
pub fn consistency_check(placement: &PulsePlacement, g: &MetricGraph) -> ConsistencyReport {
    let mut violations = Vec::new();
    let mins: Vec<f64> = placement.boundary().map(|v| v.reach_min).collect();
    if mins.len() >= 2 {
        let hi = mins.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = mins.iter().cloned().fold(f64::INFINITY, f64::min);
        if hi > lo {
            if !(hi - lo < placement.remainder_min_length) {
                violations.push(format!(
                    "reach spread {} is not below the shortest remainder edge {}",
                    hi - lo,
                    placement.remainder_min_length
                ));
            }
            if !(hi < 3.0 * lo) {
                violations.push(format!("largest reach {hi} is not below three times the smallest {lo}"));
            }
        }
    }
    for p in placement.edges.iter().filter(|p| p.kind == PulseKind::Internal) {
        let (a, b) = g.endpoints(p.edge);
        for v in [a, b.unwrap()] {
            for other in placement.edges.iter().filter(|o| o.kind == PulseKind::Loop) {
                if g.endpoints(other.edge).0 == v && !(p.reach < other.reach) {
                    violations.push(format!(
                        "internal edge `{}` is not shorter than the adjacent pulse loop `{}`",
                        g.edges[p.edge].id, g.edges[other.edge].id
                    ));
                }
            }
        }
    }
    ConsistencyReport { violations }
}

#[derive(Debug, Clone, Copy)]
pub struct DtnOptions {
    /// Smallest admissible `ε`.
    pub eps0: f64,
    /// Largest admissible norm of the Dirichlet data.
    pub p0: f64,
}

impl Default for DtnOptions {
    fn default() -> Self {
        DtnOptions { eps0: 2.5, p0: 0.2 }
    }
}

/// Leading-order vertex value `(4/Z_j) Σ e^{−ε ℓ}` over the pulse ends at
/// each junction vertex (a loop contributes both of its ends).
pub fn dirichlet_guess(
    placement: &PulsePlacement,
    g: &MetricGraph,
    eps: f64,
    opts: DtnOptions,
) -> Result<Vec<(usize, f64)>> {
    if !(eps > opts.eps0) {
        return Err(Error::Domain(format!("ε = {eps} must exceed ε₀ = {}", opts.eps0)));
    }
    let report = consistency_check(placement, g);
    if !report.is_ok() {
        return Err(Error::Domain(format!("inconsistent placement: {}", report.violations.join("; "))));
    }
    let data: Vec<(usize, f64)> = placement
        .vertices
        .iter()
        .map(|v| {
            let s: f64 = v.pulse_ends.iter().map(|(_, l)| (-eps * l).exp()).sum();
            (v.vertex, 4.0 / v.total_degree as f64 * s)
        })
        .collect();
    let norm = data.iter().map(|(_, p)| p * p).sum::<f64>().sqrt();
    if norm > opts.p0 {
        return Err(Error::Domain(format!("Dirichlet data norm {norm:.3e} exceeds p₀ = {}; increase ε", opts.p0)));
    }
    Ok(data)
}

/// Decreasing bump of `−u″ + u − 2u³ = 0` on `[0, length]` with `u′(0) = 0`
/// and `u(length) = value`: the level curve through `(value, −slope)`.
pub fn bump_profile(value: f64, length: f64) -> Result<LevelProfile> {
    if !(value > 0.0 && value < constant_state(1.0)) || !(length > 0.0) {
        return Err(Error::Domain(format!("bump needs 0 < value < 1/√2 and length > 0 (value {value})")));
    }
    let f = |y: f64| period_t(PeriodQuery::new(value, y.exp(), 1.0)).map(|t| t - length).unwrap_or(f64::NAN);
    let y = bisect(f, (1e-100f64).ln(), (1e3f64).ln(), 1e-15)
        .ok_or_else(|| Error::NoConvergence(format!("no bump of length {length} through {value}")))?;
    LevelProfile::new(PeriodQuery::new(value, y.exp(), 1.0).level(), 1.0)
}

/// Shortest remainder-graph distances from the boundary vertices.
fn remainder_distances(g: &MetricGraph, placement: &PulsePlacement, from: usize) -> Vec<f64> {
    #[derive(PartialEq)]
    struct Item(f64, usize);
    impl Eq for Item {}
    impl PartialOrd for Item {
        fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for Item {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            o.0.total_cmp(&self.0)
        }
    }
    let mut dist = vec![f64::INFINITY; g.vertices.len()];
    dist[from] = 0.0;
    let mut heap = BinaryHeap::from([Item(0.0, from)]);
    while let Some(Item(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for ee in g.incidences(v) {
            if placement.contains(ee.edge) || g.edges[ee.edge].is_unbounded() {
                continue;
            }
            let (a, b) = g.endpoints(ee.edge);
            let w = if ee.end == End::Start { b.unwrap() } else { a };
            let nd = d + g.edges[ee.edge].length;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Item(nd, w));
            }
        }
    }
    dist
}

/// Multi-pulse seed at `ω = −ε²` for Newton: bumps from the period function
/// with the Dirichlet guess at the junctions, decaying exponentials on the
/// remainder. A bump whose vertex value exceeds what a monotone pulse of its
/// length can reach is seeded by a sech plus an exponential correction.
pub fn dtn_seed(
    g: &MetricGraph,
    placement: &PulsePlacement,
    eps: f64,
    grid: GridOptions,
    opts: DtnOptions,
) -> Result<StandingWave> {
    let data: BTreeMap<usize, f64> = dirichlet_guess(placement, g, eps, opts)?.into_iter().collect();
    // remainder vertex values from exponential decay away from the boundary
    let mut vertex_value = vec![0.0; g.vertices.len()];
    for jv in placement.boundary() {
        let d = remainder_distances(g, placement, jv.vertex);
        for (w, dw) in d.iter().enumerate() {
            if dw.is_finite() && !data.contains_key(&w) {
                vertex_value[w] += data[&jv.vertex] * (-eps * dw).exp();
            }
        }
    }
    for (&v, &p) in &data {
        vertex_value[v] = p;
    }
    let mut bumps = BTreeMap::new();
    for pe in &placement.edges {
        let (a, b) = g.endpoints(pe.edge);
        let b = b.unwrap();
        let value = match pe.free_end {
            Some(End::Start) => data[&b],
            Some(End::Finish) => data[&a],
            None => (data[&a] * data[&b]).sqrt(),
        };
        bumps.insert(pe.edge, (value, bump_profile(value, eps * pe.reach).ok()));
    }
    let omega = -eps * eps;
    let disc = wave_discretization(g, omega, grid)?;
    let u = disc.sample(|e, x| {
        let edge = &g.edges[e];
        if let Some(pe) = placement.edges.iter().find(|p| p.edge == e) {
            let (value, prof) = &bumps[&e];
            let len = eps * pe.reach;
            let z = match pe.free_end {
                Some(End::Start) => eps * x,
                Some(End::Finish) => eps * (edge.length - x),
                None => eps * (x - pe.reach).abs(),
            }
            .min(len);
            return eps
                * match prof {
                    Some(prof) => prof.eval(z, *value).0,
                    // vertex value above the monotone range: the state dips
                    // before the vertex; seed with a sech bump and a rising
                    // exponential that meets the vertex value
                    None => 1.0 / z.cosh() + (value - 1.0 / len.cosh()) * (z - len).exp(),
                };
        }
        let (a, b) = g.endpoints(e);
        let start = vertex_value[a] * (-eps * x).exp();
        let end = match b {
            Some(b) => vertex_value[b] * (-eps * (edge.length - x)).exp(),
            None => 0.0,
        };
        eps * (start + end)
    });
    Ok(StandingWave::from_profile(&disc, u, omega, 1.0, Provenance::DtnSeeded))
}

/// Result of the single-bump Neumann estimate.
#[derive(Debug, Clone, Copy)]
pub struct BumpCheck {
    /// `|u′(L) − u(L) + 4e^{−L}|`.
    pub deficit: f64,
    /// Shape `ε e^{−3L}` of the bound on the deficit.
    pub bound_shape: f64,
}

/// Deficit of the leading-order Neumann value at the end `z = L` of a
/// decreasing bump sampled as `(z, u, u′)`.
pub fn single_bump_neumann_check(z: &[f64], u: &[f64], v: &[f64], eps: f64) -> Result<BumpCheck> {
    if z.len() < 2 || z.len() != u.len() || u.len() != v.len() {
        return Err(Error::Domain("bump samples must have matching lengths ≥ 2".into()));
    }
    if u.windows(2).any(|w| w[1] > w[0]) || u.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Domain("bump must be positive and decreasing".into()));
    }
    let n = z.len() - 1;
    let len = z[n] - z[0];
    Ok(BumpCheck { deficit: (v[n] - u[n] + 4.0 * (-len).exp()).abs(), bound_shape: eps * (-3.0 * len).exp() })
}

/// `‖Φ‖_{L²(edges)} / ‖Φ‖_{L²(G)}`.
pub fn concentration_ratio(wave: &StandingWave, edges: &[usize]) -> Result<f64> {
    let f = wave.profile();
    let per_edge: Vec<f64> = f
        .edges
        .iter()
        .map(|e| e.values.iter().enumerate().map(|(i, z)| e.weight(i) * z.norm_sqr()).sum())
        .collect();
    let total: f64 = per_edge.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Domain("concentration of the zero wave".into()));
    }
    if edges.iter().any(|&e| e >= per_edge.len()) {
        return Err(Error::Domain("edge index out of range".into()));
    }
    let part: f64 = edges.iter().map(|&e| per_edge[e]).sum();
    Ok((part / total).sqrt())
}

/// Normalized Neumann data at one junction vertex of a solved wave.
#[derive(Debug, Clone, Copy)]
pub struct NeumannBalance {
    pub vertex: usize,
    /// Normalized vertex value `p_j`.
    pub value: f64,
    /// Remainder-side flux `q⁽¹⁾`, derivatives taken toward the vertex.
    pub remainder_flux: f64,
    /// Pulse-side flux `q⁽²⁾`.
    pub pulse_flux: f64,
    /// Leading orders `D_j p_j` and `n_j p_j − 4 Σ e^{−εℓ}`.
    pub remainder_predicted: f64,
    pub pulse_predicted: f64,
}

pub fn neumann_balance(wave: &StandingWave, g: &MetricGraph, placement: &PulsePlacement) -> Result<Vec<NeumannBalance>> {
    if !(wave.omega < 0.0) {
        return Err(Error::Domain("needs ω < 0".into()));
    }
    let eps = (-wave.omega).sqrt();
    let f = wave.profile();
    let mut out = Vec::new();
    for jv in &placement.vertices {
        let mut q1 = 0.0;
        let mut q2 = 0.0;
        let mut value = 0.0;
        let inc = g.incidences(jv.vertex);
        for ee in &inc {
            let s = &f.edges[ee.edge];
            let d = s.derivative();
            let (val, toward) = match ee.end {
                End::Start => (s.values[0].re, -d[0].re),
                End::Finish => (s.values[s.values.len() - 1].re, d[d.len() - 1].re),
            };
            value += val / inc.len() as f64;
            if placement.contains(ee.edge) {
                q2 += toward;
            } else {
                q1 += toward;
            }
        }
        let p = value / eps;
        let tail: f64 = jv.pulse_ends.iter().map(|(_, l)| (-eps * l).exp()).sum();
        out.push(NeumannBalance {
            vertex: jv.vertex,
            value: p,
            remainder_flux: q1 / (eps * eps),
            pulse_flux: q2 / (eps * eps),
            remainder_predicted: jv.remainder_degree as f64 * p,
            pulse_predicted: jv.pulse_ends.len() as f64 * p - 4.0 * tail,
        });
    }
    Ok(out)
}
