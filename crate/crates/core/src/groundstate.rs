//! Energy minimization at fixed mass by a normalized gradient flow, the
//! half-line/line energy bracket, and a topological screen for graphs on
//! which minimizing sequences escape to infinity.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::analytic::{half_line_energy_at_mass, line_energy_at_mass, soliton_mass, SolitonParams};
use crate::discrete::{Closure, Discretization, GridOptions};
use crate::error::{Error, Result};
use crate::graph::{MetricGraph, VertexCondition};
use crate::operators::{assemble_laplacian, lowest_eigenvalues};
use crate::solver::{Provenance, StandingWave};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    Runaway,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct MinimizeOptions {
    pub max_iter: usize,
    /// Stop when the constrained gradient `‖M⁻¹(Hu − N(u)) − ωu‖_M` drops below this.
    pub tol: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    /// Consecutive outward steps needed to declare a runaway.
    pub runaway_window: usize,
    /// Mass fraction a single unbounded edge must carry during those steps.
    pub runaway_fraction: f64,
    /// Allow `p = 2` with mass above the critical value.
    pub allow_supercritical_mass: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            max_iter: 20_000,
            tol: 1e-8,
            tau_min: 1e-4,
            tau_max: 0.1,
            runaway_window: 200,
            runaway_fraction: 0.9,
            allow_supercritical_mass: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IterRecord {
    pub iter: usize,
    pub energy: f64,
    pub omega: f64,
    pub grad_norm: f64,
    /// Accepted flow step.
    pub tau: f64,
    /// Mass centroid `∫ x|u|² / ∫ |u|²` on each unbounded edge, in edge order.
    pub centroids: Vec<f64>,
    /// Fraction of the mass carried by each unbounded edge.
    pub fractions: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MinimizationRun {
    pub mu: f64,
    pub p: f64,
    pub disc: Arc<Discretization>,
    pub u: Vec<f64>,
    pub energy: f64,
    pub omega: f64,
    pub termination: Termination,
    pub history: Vec<IterRecord>,
    /// Ids of the unbounded edges, matching the centroid columns.
    pub unbounded: Vec<String>,
}

impl MinimizationRun {
    pub fn grad_norm(&self) -> f64 {
        self.history.last().map(|r| r.grad_norm).unwrap_or(f64::NAN)
    }

    /// True when the flow has reached an energy at or below the line-soliton
    /// level of the same mass.
    pub fn beats_line_level(&self) -> Result<bool> {
        Ok(self.energy <= line_energy_at_mass(self.mu, self.p)?)
    }

    /// The final iterate as a standing wave with the Rayleigh frequency.
    pub fn wave(&self) -> StandingWave {
        StandingWave::from_profile(&self.disc, self.u.clone(), self.omega, self.p, Provenance::GradientFlow)
    }

    /// Rows `iter,energy,centroid_<edge>…,grad_norm`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,energy");
        for id in &self.unbounded {
            let _ = write!(s, ",centroid_{id}");
        }
        s.push_str(",grad_norm\n");
        for r in &self.history {
            let _ = write!(s, "{},{:.15e}", r.iter, r.energy);
            for c in &r.centroids {
                let _ = write!(s, ",{c:.9e}");
            }
            let _ = writeln!(s, ",{:.6e}", r.grad_norm);
        }
        s
    }
}

/// Dirichlet-truncated grid used by the flow.
pub fn minimization_discretization(g: &MetricGraph, grid: GridOptions) -> Result<Arc<Discretization>> {
    Ok(Arc::new(Discretization::new(g, grid, Closure::Dirichlet)?))
}

fn check_power_and_mass(mu: f64, p: f64, allow: bool) -> Result<()> {
    if p > 2.0 {
        return Err(Error::Domain(format!("p = {p} > 2: the energy is unbounded below at fixed mass")));
    }
    if !(p > 0.0) {
        return Err(Error::Domain(format!("nonlinearity power {p} must be positive")));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Domain(format!("mass {mu} must be positive")));
    }
    if p == 2.0 && !allow {
        let critical = soliton_mass(SolitonParams::new(-1.0, 2.0)?);
        if mu > critical {
            return Err(Error::Domain(format!("mass {mu} above the critical mass {critical}")));
        }
    }
    Ok(())
}

struct Flow<'a> {
    disc: &'a Discretization,
    w: Vec<f64>,
    p: f64,
    mu: f64,
    /// Shift making `H + βM` positive definite.
    beta: f64,
    unbounded: Vec<usize>,
}

impl Flow<'_> {
    fn nonlinear(&self, u: &[f64]) -> Vec<f64> {
        let p = self.p;
        u.iter().zip(&self.w).map(|(x, w)| (p + 1.0) * w * x.abs().powf(2.0 * p) * x).collect()
    }

    fn normalize(&self, mut u: Vec<f64>) -> Result<Vec<f64>> {
        let m = self.disc.mass_of(&u);
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Domain("iterate lost all mass".into()));
        }
        let c = (self.mu / m).sqrt();
        u.iter_mut().for_each(|x| *x *= c);
        Ok(u)
    }

    /// Energy, Rayleigh frequency and strong constrained gradient.
    fn state(&self, u: &[f64]) -> (f64, f64, Vec<f64>) {
        let hu = self.disc.kinetic.matvec(u);
        let nl = self.nonlinear(u);
        let mut r = hu;
        for a in 0..u.len() {
            r[a] += self.disc.potential[a] * u[a] - nl[a];
        }
        let omega = r.iter().zip(u).map(|(a, b)| a * b).sum::<f64>() / self.mu;
        let g: Vec<f64> = r.iter().zip(u).zip(&self.disc.mass).map(|((r, x), m)| r / m - omega * x).collect();
        (self.disc.energy_of(u, self.p), omega, g)
    }

    /// `(M + τ(H − G + βM))⁻¹ (1 + τβ) M u`, renormalized, with the frozen
    /// nonlinear potential `G = (p+1) W |u|^{2p}`. Fixed points are exactly the
    /// constrained critical points; `β` keeps the matrix positive definite.
    fn advance(&self, u: &[f64], tau: f64) -> Result<Vec<f64>> {
        let p = self.p;
        let gpot: Vec<f64> = u.iter().zip(&self.w).map(|(x, w)| (p + 1.0) * w * x.abs().powf(2.0 * p)).collect();
        let beta = self.beta + gpot.iter().zip(&self.disc.mass).fold(0.0f64, |m, (g, ms)| m.max(g / ms));
        let mut a = self.disc.hamiltonian(0.0).map(|x: f64| tau * x);
        let d: Vec<f64> =
            self.disc.mass.iter().zip(&gpot).map(|(m, g)| m * (1.0 + tau * beta) - tau * g).collect();
        a.add_diagonal(&d);
        let rhs: Vec<f64> = u.iter().zip(&self.disc.mass).map(|(x, m)| (1.0 + tau * beta) * m * x).collect();
        self.normalize(a.solve(&rhs)?)
    }

    fn edge_stats(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut cs = Vec::new();
        let mut fs = Vec::new();
        for &k in &self.unbounded {
            let g = &self.disc.grids[k];
            let (mut m0, mut m1) = (0.0, 0.0);
            for (i, m) in self.disc.node_map[k].iter().enumerate() {
                if let Some((a, s)) = m {
                    let v = u[*a] * s;
                    let wt = g.weight(i) * v * v;
                    m0 += wt;
                    m1 += wt * i as f64 * g.h;
                }
            }
            cs.push(if m0 > 0.0 { m1 / m0 } else { 0.0 });
            fs.push(m0 / self.mu);
        }
        (cs, fs)
    }
}

/// Minimize the energy at mass `mu` starting from `seed` (any nonzero profile
/// on `disc`; it is rescaled to mass `mu`).
///
/// Each step is a backward Euler step of the normalized gradient flow with
/// the nonlinear potential frozen at the current iterate, Barzilai–Borwein
/// step size, clipped and backtracked so the energy never
/// increases. A run is declared a runaway when a single unbounded edge carries
/// most of the mass, its centroid has moved outward for `runaway_window`
/// consecutive steps and the energy is still above the line-soliton level.
pub fn minimize_at_mass(
    disc: &Arc<Discretization>,
    mu: f64,
    p: f64,
    seed: &[f64],
    opts: &MinimizeOptions,
) -> Result<MinimizationRun> {
    check_power_and_mass(mu, p, opts.allow_supercritical_mass)?;
    if seed.len() != disc.dim() {
        return Err(Error::GridMismatch);
    }
    if !(opts.tau_min > 0.0 && opts.tau_min <= opts.tau_max) {
        return Err(Error::Domain("step bounds must satisfy 0 < τ_min ≤ τ_max".into()));
    }
    let lowest = lowest_eigenvalues(&assemble_laplacian(disc, 0.0), 1, None)?.eigenvalues[0];
    let unbounded: Vec<usize> = (0..disc.graph.edges.len()).filter(|&k| disc.graph.edges[k].is_unbounded()).collect();
    let flow = Flow { disc, w: disc.nl_weights(p), p, mu, beta: (1.0 - lowest).max(1.0), unbounded };
    let line_level = line_energy_at_mass(mu, p).ok();

    let mut u = flow.normalize(seed.to_vec())?;
    let (mut e, mut omega, mut g) = flow.state(&u);
    let mut tau = opts.tau_max;
    let mut history = Vec::new();
    let (mut cs, mut fs) = flow.edge_stats(&u);
    let gnorm = |g: &[f64]| disc.dot_m(g, g).sqrt();
    history.push(IterRecord { iter: 0, energy: e, omega, grad_norm: gnorm(&g), tau: 0.0, centroids: cs.clone(), fractions: fs.clone() });
    let mut outward = 0usize;
    let mut termination = Termination::MaxIter;

    for iter in 1..=opts.max_iter {
        if gnorm(&g) < opts.tol {
            termination = Termination::Converged;
            break;
        }
        let slack = 1e-12 * e.abs().max(1.0);
        // backtrack until the energy does not increase
        let mut t = tau;
        let (next, e_next) = loop {
            let v = flow.advance(&u, t)?;
            let ev = disc.energy_of(&v, p);
            if ev <= e + slack {
                break (v, ev);
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::NoConvergence(format!("no descent step at iteration {iter}")));
            }
        };
        let (_, om_next, g_next) = flow.state(&next);
        let s: Vec<f64> = next.iter().zip(&u).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = disc.dot_m(&s, &y);
        let ss = disc.dot_m(&s, &s);
        tau = if sy > 0.0 { (ss / sy).clamp(opts.tau_min, opts.tau_max) } else { opts.tau_max };

        let (cs_next, fs_next) = flow.edge_stats(&next);
        let escaping = (0..cs.len()).any(|j| fs_next[j] >= opts.runaway_fraction && cs_next[j] > cs[j]);
        let above_line = line_level.map_or(true, |l| e_next > l - 1e-3 * l.abs());
        outward = if escaping && above_line { outward + 1 } else { 0 };

        u = next;
        e = e_next;
        omega = om_next;
        g = g_next;
        cs = cs_next;
        fs = fs_next;
        history.push(IterRecord { iter, energy: e, omega, grad_norm: gnorm(&g), tau: t, centroids: cs.clone(), fractions: fs.clone() });
        if outward >= opts.runaway_window {
            termination = Termination::Runaway;
            break;
        }
    }
    if termination == Termination::MaxIter && gnorm(&g) < opts.tol {
        termination = Termination::Converged;
    }
    // global sign normalization
    let sum: f64 = u.iter().zip(&disc.mass).map(|(x, m)| x * m).sum();
    if sum < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(MinimizationRun {
        mu,
        p,
        disc: disc.clone(),
        u,
        energy: e,
        omega,
        termination,
        history,
        unbounded: flow.unbounded.iter().map(|&k| disc.graph.edges[k].id.clone()).collect(),
    })
}

/// `(lower, upper)`: the half-line state and the line soliton of mass `mu`.
pub fn energy_bracket(mu: f64, p: f64) -> Result<(f64, f64)> {
    if !(p > 0.0 && p < 2.0) {
        return Err(Error::Domain(format!("energy bracket needs p in (0, 2), got {p}")));
    }
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("mass {mu} must be positive")));
    }
    Ok((half_line_energy_at_mass(mu, p)?, line_energy_at_mass(mu, p)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScreenVerdict {
    /// Every point lies on a trail through two half-lines and the graph is
    /// not a bubble tower: no ground state.
    Escapes,
    TrappedCandidate,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScreenReport {
    pub verdict: ScreenVerdict,
    /// Edges whose points lie on no trail through two distinct half-lines.
    pub uncovered: Vec<String>,
    pub bubble_tower: bool,
}

/// Unit-capacity max flow on an undirected multigraph (Edmonds–Karp).
struct FlowNet {
    head: Vec<usize>,
    cap: Vec<i32>,
    adj: Vec<Vec<usize>>,
}

impl FlowNet {
    fn new(n: usize) -> Self {
        FlowNet { head: Vec::new(), cap: Vec::new(), adj: vec![Vec::new(); n] }
    }

    fn arc(&mut self, a: usize, b: usize, c_ab: i32, c_ba: i32) {
        self.adj[a].push(self.head.len());
        self.head.push(b);
        self.cap.push(c_ab);
        self.adj[b].push(self.head.len());
        self.head.push(a);
        self.cap.push(c_ba);
    }

    fn max_flow(&mut self, s: usize, t: usize, limit: i32) -> i32 {
        let mut flow = 0;
        while flow < limit {
            let mut prev: Vec<Option<usize>> = vec![None; self.adj.len()];
            let mut seen = vec![false; self.adj.len()];
            seen[s] = true;
            let mut q = VecDeque::from([s]);
            while let Some(x) = q.pop_front() {
                for &e in &self.adj[x] {
                    let y = self.head[e];
                    if self.cap[e] > 0 && !seen[y] {
                        seen[y] = true;
                        prev[y] = Some(e);
                        q.push_back(y);
                    }
                }
            }
            if !seen[t] {
                break;
            }
            let mut y = t;
            while let Some(e) = prev[y] {
                self.cap[e] -= 1;
                self.cap[e ^ 1] += 1;
                y = self.head[e ^ 1];
            }
            flow += 1;
        }
        flow
    }
}

/// Number of edge-disjoint routes to infinity through distinct half-lines,
/// starting `starts[v]` times from vertex `v`, with edge `skip` removed.
fn routes_to_infinity(g: &MetricGraph, starts: &[(usize, i32)], skip: usize) -> i32 {
    let n = g.vertices.len();
    let (src, sink) = (n, n + 1);
    let mut net = FlowNet::new(n + 2);
    for (k, _) in g.edges.iter().enumerate() {
        if k == skip {
            continue;
        }
        match g.endpoints(k) {
            (a, Some(b)) if a != b => net.arc(a, b, 1, 1),
            (_, Some(_)) => {}
            (a, None) => net.arc(a, sink, 1, 0),
        }
    }
    let mut need = 0;
    for &(v, c) in starts {
        net.arc(src, v, c, 0);
        need += c;
    }
    net.max_flow(src, sink, need)
}

/// Edge list after merging through degree-two vertices: `(a, b, length)` with
/// `b = None` for half-lines.
fn reduced_edges(g: &MetricGraph) -> Vec<(usize, Option<usize>, f64)> {
    let mut edges: Vec<Option<(usize, Option<usize>, f64)>> =
        (0..g.edges.len()).map(|k| Some((g.endpoints(k).0, g.endpoints(k).1, g.edges[k].length))).collect();
    loop {
        let mut merged = false;
        for v in 0..g.vertices.len() {
            let inc: Vec<usize> = edges
                .iter()
                .enumerate()
                .filter_map(|(i, e)| e.filter(|(a, b, _)| *a == v || *b == Some(v)).map(|_| i))
                .collect();
            if inc.len() != 2 {
                continue;
            }
            let (i, j) = (inc[0], inc[1]);
            let (ei, ej) = (edges[i].unwrap(), edges[j].unwrap());
            if ei.0 == ei.1.unwrap_or(usize::MAX) || ej.0 == ej.1.unwrap_or(usize::MAX) {
                continue;
            }
            let other = |e: (usize, Option<usize>, f64)| if e.0 == v { e.1 } else { Some(e.0) };
            let (oi, oj) = (other(ei), other(ej));
            let new = match (oi, oj) {
                (Some(x), Some(y)) => (x, Some(y), ei.2 + ej.2),
                (Some(x), None) | (None, Some(x)) => (x, None, f64::INFINITY),
                (None, None) => continue,
            };
            edges[i] = Some(new);
            edges[j] = None;
            merged = true;
        }
        if !merged {
            break;
        }
    }
    edges.into_iter().flatten().collect()
}

/// Two half-lines at one vertex carrying a chain of circles, each attached at
/// the point antipodal to the previous attachment; the bare line included.
pub fn is_bubble_tower(g: &MetricGraph) -> bool {
    let edges = reduced_edges(g);
    let halves: Vec<usize> = edges.iter().filter(|e| e.1.is_none()).map(|e| e.0).collect();
    if halves.len() != 2 || halves[0] != halves[1] {
        return false;
    }
    let mut rest: Vec<(usize, usize, f64)> = edges.iter().filter_map(|e| e.1.map(|b| (e.0, b, e.2))).collect();
    let mut at = halves[0];
    while !rest.is_empty() {
        let here: Vec<usize> = (0..rest.len()).filter(|&i| rest[i].0 == at || rest[i].1 == at).collect();
        match here.as_slice() {
            [i] if rest[*i].0 == rest[*i].1 => {
                rest.remove(*i);
            }
            [i, j] => {
                let (a, b) = (rest[*i], rest[*j]);
                let next_a = if a.0 == at { a.1 } else { a.0 };
                let next_b = if b.0 == at { b.1 } else { b.0 };
                if next_a == at || next_a != next_b || (a.2 - b.2).abs() > 1e-9 * a.2.max(b.2) {
                    return false;
                }
                let (hi, lo) = (*i.max(j), *i.min(j));
                rest.remove(hi);
                rest.remove(lo);
                at = next_a;
            }
            _ => return false,
        }
    }
    true
}

/// Topological non-existence test for Neumann–Kirchhoff graphs without
/// potentials. Each edge is checked by a unit-capacity max flow counting
/// edge-disjoint routes from its points to distinct half-lines.
pub fn nonexistence_screen(g: &MetricGraph) -> Result<ScreenReport> {
    g.check()?;
    if g.vertices.iter().any(|v| v.condition != VertexCondition::NeumannKirchhoff) {
        return Err(Error::Domain("screen applies to Neumann–Kirchhoff vertices only".into()));
    }
    if g.edges.iter().any(|e| e.potential.is_some()) {
        return Err(Error::Domain("screen applies to graphs without potentials".into()));
    }
    let mut uncovered = Vec::new();
    for (k, e) in g.edges.iter().enumerate() {
        let ok = match g.endpoints(k) {
            (a, None) => routes_to_infinity(g, &[(a, 1)], k) >= 1,
            (a, Some(b)) if a == b => routes_to_infinity(g, &[(a, 2)], k) >= 2,
            (a, Some(b)) => routes_to_infinity(g, &[(a, 1), (b, 1)], k) >= 2,
        };
        if !ok {
            uncovered.push(e.id.clone());
        }
    }
    let bubble_tower = is_bubble_tower(g);
    let verdict =
        if uncovered.is_empty() && !bubble_tower { ScreenVerdict::Escapes } else { ScreenVerdict::TrappedCandidate };
    Ok(ScreenReport { verdict, uncovered, bubble_tower })
}
