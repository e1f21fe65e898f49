//! Newton's method for standing waves, pseudo-arclength continuation in the
//! frequency, and slope estimates of the mass curve.
//!
//! The discrete residual is `F(u, ω) = H(κ) u − (p+1) W |u|^{2p} u − ω M u`
//! where `H(κ)` is the stiffness of `−Δ + V` with Robin closure `κ = √|ω|`
//! at truncation points and `W` the nonlinearity weights.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::analytic::{nls_soliton, SolitonParams};
use crate::discrete::{Closure, Discretization, GridOptions};
use crate::error::{Error, Result};
use crate::function::GraphFunction;
use crate::graph::{MetricGraph, VertexCondition};
use crate::arrow::StableLu;
use crate::operators::{assemble_laplacian, assemble_linearization, linearization_scale, robin_kappa, CHAIN_GAP};

/// Relative width of the band in which a Jacobian mode may be a symmetry mode.
const SOFT_BAND: f64 = 1e-8;
use crate::period::TadpoleProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    PeriodFunction,
    Elliptic,
    Newton,
    DtnSeeded,
    Continuation,
    GradientFlow,
}

#[derive(Debug, Clone)]
pub struct StandingWave {
    pub omega: f64,
    pub p: f64,
    pub disc: Arc<Discretization>,
    /// Profile in unknown coordinates.
    pub u: Vec<f64>,
    pub mass: f64,
    pub energy: f64,
    /// `‖M^{-1} F‖_M`.
    pub residual: f64,
    pub provenance: Provenance,
    /// Residual after each Newton iteration (empty for unsolved seeds).
    pub history: Vec<f64>,
}

impl StandingWave {
    /// Wrap a profile without solving; the residual is measured.
    pub fn from_profile(disc: &Arc<Discretization>, u: Vec<f64>, omega: f64, p: f64, provenance: Provenance) -> Self {
        let f = residual_vector(disc, &u, omega, p);
        let residual = strong_norm(disc, &f);
        StandingWave {
            omega,
            p,
            disc: disc.clone(),
            mass: disc.mass_of(&u),
            energy: disc.energy_of(&u, p),
            u,
            residual,
            provenance,
            history: Vec::new(),
        }
    }

    pub fn profile(&self) -> GraphFunction {
        self.disc.to_function_real(&self.u)
    }

    pub fn sup_norm(&self) -> f64 {
        self.u.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Newton iterations used to produce the wave.
    pub fn iterations(&self) -> usize {
        self.history.len().saturating_sub(1)
    }
}

/// Grid for a wave at frequency `omega`, with Robin truncation.
pub fn wave_discretization(g: &MetricGraph, omega: f64, opts: GridOptions) -> Result<Arc<Discretization>> {
    let opts = if opts.trunc < crate::truncation_length(Some(omega)) { opts.for_omega(omega) } else { opts };
    Ok(Arc::new(Discretization::new(g, opts, Closure::Robin)?))
}

pub fn residual_vector(disc: &Discretization, u: &[f64], omega: f64, p: f64) -> Vec<f64> {
    let h = disc.hamiltonian(robin_kappa(omega));
    let w = disc.nl_weights(p);
    let mut f = h.matvec(u);
    for a in 0..u.len() {
        f[a] -= (p + 1.0) * w[a] * u[a].abs().powf(2.0 * p) * u[a] + omega * disc.mass[a] * u[a];
    }
    f
}

/// `‖M^{-1} f‖_M`.
pub fn strong_norm(disc: &Discretization, f: &[f64]) -> f64 {
    f.iter().zip(&disc.mass).map(|(x, m)| x * x / m).sum::<f64>().sqrt()
}

/// `∂F/∂ω`, including the frequency dependence of the Robin closure.
fn residual_omega(disc: &Discretization, u: &[f64], omega: f64) -> Vec<f64> {
    let mut d: Vec<f64> = u.iter().zip(&disc.mass).map(|(x, m)| -m * x).collect();
    let kappa = robin_kappa(omega);
    if kappa > 0.0 {
        for &r in &disc.robin_nodes {
            d[r] += -0.5 / kappa * u[r];
        }
    }
    d
}

/// Factored Jacobian `∂F/∂u` with its symmetry modes: eigenvectors of `L₊` in
/// the zero band that are `M`-orthogonal to `∂F/∂ω`. Such modes come from
/// continuous symmetries (translation on the line) broken only by the grid;
/// solves are projected off them so roundoff is not amplified along the
/// family. Near-zero modes coupled to `∂F/∂ω` (folds) are kept.
struct Jacobian {
    op: crate::arrow::ArrowMatrix<f64>,
    lu: StableLu,
    soft: Vec<Vec<f64>>,
    disc: Arc<Discretization>,
}

/// Modified Gram–Schmidt in the `M` inner product, applied twice; vectors
/// that collapse are dropped.
fn m_orthonormalize(disc: &Discretization, vs: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for mut x in vs {
        let before = disc.dot_m(&x, &x).sqrt();
        for _ in 0..2 {
            for q in &out {
                let c = disc.dot_m(&x, q);
                x.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let nrm = disc.dot_m(&x, &x).sqrt();
        if nrm > 1e-10 * before {
            x.iter_mut().for_each(|a| *a /= nrm);
            out.push(x);
        }
    }
    out
}

impl Jacobian {
    fn new(disc: &Arc<Discretization>, u: &[f64], omega: f64, p: f64) -> Result<Self> {
        let (lp, _) = assemble_linearization(disc, u, omega, p)?;
        let lu = lp
            .stiffness
            .factor_stable(&disc.mass, CHAIN_GAP)
            .map_err(|_| Error::Singular(format!("Jacobian singular at ω = {omega}")))?;
        let band = SOFT_BAND * linearization_scale(u, omega, p);
        let m = lp.count_below(band)? - lp.count_below(-band)?;
        let mut soft = Vec::new();
        if m > 0 {
            // subspace inverse iteration with J itself: the band modes dominate
            let n = u.len();
            let mut basis: Vec<Vec<f64>> =
                (0..m).map(|j| (0..n).map(|i| 1.0 + ((i * 7919 + j * 104729) % 1013) as f64 / 1013.0).collect()).collect();
            for _ in 0..4 {
                for x in basis.iter_mut() {
                    let rhs: Vec<f64> = x.iter().zip(&disc.mass).map(|(a, w)| a * w).collect();
                    *x = lu.solve(&rhs);
                }
                basis = m_orthonormalize(disc, basis);
            }
            // drop the direction coupled to ∂F/∂ω
            let fw = residual_omega(disc, u, omega);
            let fw_norm = strong_norm(disc, &fw);
            let c: Vec<f64> = basis.iter().map(|v| v.iter().zip(&fw).map(|(a, b)| a * b).sum()).collect();
            let cn = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            if cn > 1e-6 * fw_norm {
                let coupled: Vec<f64> =
                    (0..n).map(|i| basis.iter().zip(&c).map(|(v, ci)| ci * v[i]).sum::<f64>() / cn).collect();
                let mut rest = vec![coupled];
                rest.extend(basis);
                basis = m_orthonormalize(disc, rest);
                basis.remove(0);
            }
            soft = basis;
        }
        Ok(Jacobian { op: lp.stiffness, lu, soft, disc: disc.clone() })
    }

    fn project(&self, x: &mut [f64]) {
        for v in &self.soft {
            let c = self.disc.dot_m(x, v);
            x.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
        }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = self.lu.solve(rhs);
        self.project(&mut x);
        if !self.soft.is_empty() {
            // the projection leaves errors of the size of the discarded
            // component times the eigenvector error; refine them away
            for _ in 0..3 {
                let jx = self.op.matvec(&x);
                let r: Vec<f64> = rhs.iter().zip(&jx).map(|(a, b)| a - b).collect();
                let mut dx = self.lu.solve(&r);
                self.project(&mut dx);
                x.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
            }
        }
        x
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    /// Relative residual tolerance (scaled by `1 + ‖u‖∞`).
    pub tol: f64,
    pub max_iter: usize,
    /// Refuse frequencies that are eigenvalues of the linear operator.
    pub check_spectrum: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-10, max_iter: 50, check_spectrum: true }
    }
}

/// Error unless `omega` is off the discrete linear spectrum.
pub fn check_off_spectrum(disc: &Arc<Discretization>, omega: f64) -> Result<()> {
    let op = assemble_laplacian(disc, robin_kappa(omega));
    let d = 1e-8 * (1.0 + omega.abs());
    if op.count_below(omega - d)? != op.count_below(omega + d)? {
        return Err(Error::Domain(format!("ω = {omega} is an eigenvalue of the linear operator")));
    }
    Ok(())
}

/// Damped Newton iteration for `F(u, ω) = 0` at fixed `ω`.
pub fn newton_solve(
    disc: &Arc<Discretization>,
    p: f64,
    omega: f64,
    guess: &[f64],
    opts: NewtonOptions,
) -> Result<StandingWave> {
    if !(p > 0.0 && p <= 2.0) {
        return Err(Error::Domain(format!("nonlinearity power {p} outside (0, 2]")));
    }
    if !(omega < 0.0) {
        return Err(Error::Domain("standing waves need ω < 0".into()));
    }
    if guess.len() != disc.dim() || guess.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("guess must be finite and on the discretization".into()));
    }
    if opts.check_spectrum {
        check_off_spectrum(disc, omega)?;
    }
    let mut u = guess.to_vec();
    let mut f = residual_vector(disc, &u, omega, p);
    let mut r = strong_norm(disc, &f);
    let mut history = vec![r];
    let sup = |u: &[f64]| u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for _ in 0..opts.max_iter {
        if r <= opts.tol * (1.0 + sup(&u)) {
            let mut w = StandingWave::from_profile(disc, u, omega, p, Provenance::Newton);
            w.history = history;
            return Ok(w);
        }
        let lu = Jacobian::new(disc, &u, omega, p)?;
        let rhs: Vec<f64> = f.iter().map(|x| -x).collect();
        let du = lu.solve(&rhs);
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + alpha * b).collect();
            let ft = residual_vector(disc, &trial, omega, p);
            let rt = strong_norm(disc, &ft);
            if rt <= (1.0 - 1e-4 * alpha) * r || alpha < 1e-4 {
                u = trial;
                f = ft;
                r = rt;
                break;
            }
            alpha *= 0.5;
        }
        history.push(r);
        if !r.is_finite() {
            break;
        }
    }
    if r <= opts.tol * (1.0 + sup(&u)) {
        let mut w = StandingWave::from_profile(disc, u, omega, p, Provenance::Newton);
        w.history = history;
        return Ok(w);
    }
    Err(Error::NoConvergence(format!("Newton at ω = {omega}: residual {r:.3e} after {} iterations", opts.max_iter)))
}

/// Newton from a sampled guess on a fresh grid for `g`.
pub fn newton_solve_graph(
    g: &MetricGraph,
    p: f64,
    omega: f64,
    guess: &GraphFunction,
    grid: GridOptions,
    opts: NewtonOptions,
) -> Result<StandingWave> {
    let disc = wave_discretization(g, omega, grid)?;
    let u = disc.restrict_real(guess)?;
    newton_solve(&disc, p, omega, &u, opts)
}

/// Polish an existing wave with Newton, keeping its grid.
pub fn refine(wave: &StandingWave, opts: NewtonOptions) -> Result<StandingWave> {
    let mut w = newton_solve(&wave.disc, wave.p, wave.omega, &wave.u, opts)?;
    if wave.provenance != Provenance::Newton {
        w.provenance = wave.provenance;
    }
    Ok(w)
}

/// `du/dω` along the solution curve through `wave`.
pub fn frequency_derivative(wave: &StandingWave) -> Result<Vec<f64>> {
    let lu = Jacobian::new(&wave.disc, &wave.u, wave.omega, wave.p)?;
    let fw = residual_omega(&wave.disc, &wave.u, wave.omega);
    let rhs: Vec<f64> = fw.iter().map(|x| -x).collect();
    Ok(lu.solve(&rhs))
}

/// `dμ/dω = 2⟨u, M du/dω⟩` from the linearized equation.
pub fn tangent_slope(wave: &StandingWave) -> Result<f64> {
    let z = frequency_derivative(wave)?;
    Ok(2.0 * wave.disc.dot_m(&wave.u, &z))
}

// ---- seeds ------------------------------------------------------------------

/// Sample `f(edge, x)` on the grid of `disc`.
pub fn seed_from_fn(disc: &Arc<Discretization>, f: impl Fn(usize, f64) -> f64) -> Vec<f64> {
    disc.sample(f)
}

/// Line soliton centered at the vertex of a two-edge line graph (or a half
/// soliton on every edge of a star).
pub fn soliton_seed(disc: &Arc<Discretization>, omega: f64, p: f64) -> Result<Vec<f64>> {
    let s = SolitonParams::new(omega, p)?;
    Ok(disc.sample(|_, x| nls_soliton(s, x)))
}

/// Shift `a` of the star bound state with `j` bumps:
/// `tanh(p √|ω| a) = −α / ((N − 2j) √|ω|)`.
pub fn star_shift(n: usize, alpha: f64, j: usize, omega: f64, p: f64) -> Result<f64> {
    if 2 * j >= n {
        return Err(Error::Domain(format!("bump count {j} must be below N/2 = {}", n as f64 / 2.0)));
    }
    if !(omega < 0.0) {
        return Err(Error::Domain("ω must be negative".into()));
    }
    let e = (-omega).sqrt();
    let t = -alpha / ((n - 2 * j) as f64 * e);
    if t.abs() >= 1.0 {
        return Err(Error::Domain(format!("ω = {omega} above the existence threshold −α²/(N−2j)²")));
    }
    Ok(t.atanh() / (p * e))
}

/// Soliton pieces glued at the center of a δ star: the first `j` edges carry
/// `φ(x − a)`, the rest `φ(x + a)`.
pub fn star_state(g: &MetricGraph, j: usize, omega: f64, p: f64, grid: GridOptions) -> Result<StandingWave> {
    let n = g.edges.len();
    let alpha = match g.vertices.first().map(|v| &v.condition) {
        Some(VertexCondition::Delta(a)) => *a,
        Some(VertexCondition::NeumannKirchhoff) => 0.0,
        _ => return Err(Error::InvalidGraph("star state needs a δ or Kirchhoff center".into())),
    };
    if g.vertices.len() != 1 || g.edges.iter().any(|e| !e.is_unbounded()) {
        return Err(Error::InvalidGraph("star state needs a star of half-lines".into()));
    }
    let a = star_shift(n, alpha, j, omega, p)?;
    let disc = wave_discretization(g, omega, grid)?;
    let s = SolitonParams::new(omega, p)?;
    let u = disc.sample(|e, x| if e < j { nls_soliton(s, x - a) } else { nls_soliton(s, x + a) });
    Ok(StandingWave::from_profile(&disc, u, omega, p, Provenance::Analytic))
}

/// Single-pulse tadpole state built from the period function, sampled on the
/// grid of `g` (loop edge `loop0`, half-line `tail`).
pub fn assemble_tadpole_wave(eps: f64, p: f64, half_length: f64, grid: GridOptions) -> Result<StandingWave> {
    let tp = TadpoleProfile::new(eps, p, half_length)?;
    let g = crate::builders::tadpole(2.0 * half_length);
    let omega = -eps * eps;
    let disc = wave_discretization(&g, omega, grid)?;
    let u = disc.sample(|e, x| if e == 0 { tp.loop_phi(x) } else { tp.tail_phi(x) });
    Ok(StandingWave::from_profile(&disc, u, omega, p, Provenance::PeriodFunction))
}

// ---- continuation -------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub wave: StandingWave,
    /// ω-component of the unit tangent.
    pub tangent_omega: f64,
    /// `dμ/dω` from the tangent (infinite at folds).
    pub tangent_slope: f64,
    /// Set on the point after which the ω-direction reverses.
    pub fold: bool,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    /// Reason the continuation stopped early, if it did.
    pub truncated: Option<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct ContinuationOptions {
    pub ds: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub max_points: usize,
    /// Stop once ω leaves `[omega_min, omega_max]`.
    pub omega_min: f64,
    pub omega_max: f64,
    /// Initial direction in ω (+1 or −1).
    pub direction: f64,
    pub newton: NewtonOptions,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            ds: 0.05,
            ds_min: 1e-6,
            ds_max: 0.5,
            max_points: 400,
            omega_min: -f64::INFINITY,
            omega_max: -1e-3,
            direction: 1.0,
            newton: NewtonOptions { check_spectrum: false, ..Default::default() },
        }
    }
}

struct Tangent {
    u: Vec<f64>,
    w: f64,
}

fn tangent_at(wave: &StandingWave, prev: Option<&Tangent>, direction: f64) -> Result<Tangent> {
    let z = frequency_derivative(wave)?;
    let nrm = (wave.disc.dot_m(&z, &z) + 1.0).sqrt();
    let mut t = Tangent { u: z.iter().map(|x| x / nrm).collect(), w: 1.0 / nrm };
    let sign = match prev {
        Some(pt) => (wave.disc.dot_m(&t.u, &pt.u) + t.w * pt.w).signum(),
        None => direction.signum(),
    };
    if sign < 0.0 {
        t.u.iter_mut().for_each(|x| *x = -*x);
        t.w = -t.w;
    }
    Ok(t)
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Corrector on the augmented system `F = 0`, `⟨t, (u, ω) − pred⟩ = 0`.
fn correct(
    disc: &Arc<Discretization>,
    p: f64,
    t: &Tangent,
    pred_u: &[f64],
    pred_w: f64,
    opts: &NewtonOptions,
) -> Option<(Vec<f64>, f64, usize)> {
    let mut u = pred_u.to_vec();
    let mut w = pred_w;
    for it in 0..opts.max_iter.min(12) {
        if !(w < 0.0) {
            return None;
        }
        let f = residual_vector(disc, &u, w, p);
        let r = strong_norm(disc, &f);
        let sup = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let du: Vec<f64> = u.iter().zip(pred_u).map(|(a, b)| a - b).collect();
        let n = disc.dot_m(&t.u, &du) + t.w * (w - pred_w);
        if r <= opts.tol * (1.0 + sup) && n.abs() <= 1e-10 {
            return Some((u, w, it));
        }
        let lu = Jacobian::new(disc, &u, w, p).ok()?;
        let a = lu.solve(&f.iter().map(|x| -x).collect::<Vec<_>>());
        let fw = residual_omega(disc, &u, w);
        let b = lu.solve(&fw.iter().map(|x| -x).collect::<Vec<_>>());
        let den = disc.dot_m(&t.u, &b) + t.w;
        if den.abs() < 1e-14 {
            return None;
        }
        let dw = (-n - disc.dot_m(&t.u, &a)) / den;
        for k in 0..u.len() {
            u[k] += a[k] + dw * b[k];
        }
        w += dw;
        if u.iter().any(|x| !x.is_finite()) {
            return None;
        }
    }
    None
}

/// Pseudo-arclength continuation of `seed` (which must be converged).
pub fn continue_branch(seed: &StandingWave, opts: ContinuationOptions) -> Result<Branch> {
    let disc = seed.disc.clone();
    let p = seed.p;
    let tol = opts.newton.tol * (1.0 + seed.sup_norm());
    if seed.residual > 10.0 * tol {
        return Err(Error::Domain(format!("seed residual {:.3e} is not converged", seed.residual)));
    }
    let mut t = tangent_at(seed, None, opts.direction)?;
    let mut points = vec![BranchPoint {
        wave: seed.clone(),
        tangent_omega: t.w,
        tangent_slope: tangent_slope(seed)?,
        fold: false,
    }];
    let mut ds = opts.ds;
    let mut truncated = None;
    while points.len() < opts.max_points {
        let last = &points.last().unwrap().wave;
        let pred_u: Vec<f64> = last.u.iter().zip(&t.u).map(|(a, b)| a + ds * b).collect();
        let pred_w = last.omega + ds * t.w;
        let pred_dist = sup_dist(&pred_u, &last.u).max(1e-14);
        match correct(&disc, p, &t, &pred_u, pred_w, &opts.newton) {
            Some((u, w, iters)) if sup_dist(&u, &last.u) <= 5.0 * pred_dist + 1e-12 => {
                if w < opts.omega_min || w > opts.omega_max {
                    // land the last point on the boundary by a fixed-ω solve
                    let edge = if w < opts.omega_min { opts.omega_min } else { opts.omega_max };
                    let frac = (edge - last.omega) / (w - last.omega);
                    if frac > 1e-6 {
                        let guess: Vec<f64> = last.u.iter().zip(&u).map(|(a, b)| a + frac * (b - a)).collect();
                        let nopts = NewtonOptions { check_spectrum: false, ..opts.newton };
                        if let Ok(mut wave) = newton_solve(&disc, p, edge, &guess, nopts) {
                            wave.provenance = Provenance::Continuation;
                            let nt = tangent_at(&wave, Some(&t), opts.direction)?;
                            let slope = if nt.w.abs() > 1e-12 { 2.0 * disc.dot_m(&wave.u, &nt.u) / nt.w } else { f64::INFINITY };
                            points.push(BranchPoint { wave, tangent_omega: nt.w, tangent_slope: slope, fold: false });
                        }
                    }
                    break;
                }
                let mut wave = StandingWave::from_profile(&disc, u, w, p, Provenance::Continuation);
                wave.history = vec![wave.residual];
                let nt = tangent_at(&wave, Some(&t), opts.direction)?;
                let fold = nt.w.signum() != t.w.signum();
                if fold {
                    points.last_mut().unwrap().fold = true;
                }
                let slope = if nt.w.abs() > 1e-12 {
                    2.0 * disc.dot_m(&wave.u, &nt.u) / nt.w
                } else {
                    f64::INFINITY
                };
                points.push(BranchPoint { wave, tangent_omega: nt.w, tangent_slope: slope, fold: false });
                t = nt;
                if iters <= 3 {
                    ds = (ds * 1.5).min(opts.ds_max);
                }
            }
            _ => {
                ds *= 0.5;
                if ds < opts.ds_min {
                    truncated = Some(format!("step underflow near ω = {:.6}", pred_w));
                    break;
                }
            }
        }
    }
    Ok(Branch { points, truncated })
}

/// Slope estimate with an error bound from a wider stencil.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeEstimate {
    pub value: f64,
    pub error: f64,
    /// True when the estimate could not be centered.
    pub one_sided: bool,
}

/// Derivative at `x[i]` of the quadratic through three points.
fn three_point(x: [f64; 3], y: [f64; 3], at: f64) -> f64 {
    let [x0, x1, x2] = x;
    let [y0, y1, y2] = y;
    y0 * (2.0 * at - x1 - x2) / ((x0 - x1) * (x0 - x2))
        + y1 * (2.0 * at - x0 - x2) / ((x1 - x0) * (x1 - x2))
        + y2 * (2.0 * at - x0 - x1) / ((x2 - x0) * (x2 - x1))
}

impl Branch {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.wave.omega).collect()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.wave.mass).collect()
    }

    pub fn has_fold(&self) -> bool {
        self.points.iter().any(|p| p.fold)
    }

    /// Index of the point closest to `omega`.
    pub fn nearest(&self, omega: f64) -> Option<usize> {
        (0..self.points.len()).min_by(|&a, &b| {
            let da = (self.points[a].wave.omega - omega).abs();
            let db = (self.points[b].wave.omega - omega).abs();
            da.total_cmp(&db)
        })
    }

    /// `dμ/dω` at the branch point nearest `omega` by finite differences of
    /// neighboring points; error from the stencil of second neighbors.
    pub fn slope(&self, omega: f64) -> Result<SlopeEstimate> {
        let n = self.points.len();
        if n < 3 {
            return Err(Error::Domain("slope needs at least three branch points".into()));
        }
        let i = self.nearest(omega).unwrap();
        let w = |k: usize| self.points[k].wave.omega;
        let m = |k: usize| self.points[k].wave.mass;
        let at = w(i);
        let (idx, one_sided) = if i == 0 {
            ([0, 1, 2], true)
        } else if i == n - 1 {
            ([n - 3, n - 2, n - 1], true)
        } else {
            ([i - 1, i, i + 1], false)
        };
        let value = three_point(idx.map(w), idx.map(m), at);
        let wide = if i >= 2 && i + 2 < n {
            Some([i - 2, i, i + 2])
        } else {
            None
        };
        let error = match wide {
            Some(ix) => (three_point(ix.map(w), ix.map(m), at) - value).abs(),
            None => (self.points[i].tangent_slope - value).abs(),
        };
        Ok(SlopeEstimate { value, error, one_sided })
    }

    /// Rows `omega,mass,energy,residual,fold`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("omega,mass,energy,residual,fold\n");
        for pt in &self.points {
            let w = &pt.wave;
            let _ = writeln!(s, "{:.12e},{:.12e},{:.12e},{:.3e},{}", w.omega, w.mass, w.energy, w.residual, pt.fold as u8);
        }
        s
    }
}

/// Centered slope at a converged wave from Newton solves at `ω ± d`, with
/// the `ω ± 2d` stencil as error estimate.
pub fn slope_at(wave: &StandingWave, d: f64) -> Result<SlopeEstimate> {
    let z = frequency_derivative(wave)?;
    let opts = NewtonOptions { check_spectrum: false, ..Default::default() };
    let mass_at = |k: f64| -> Result<f64> {
        let w = wave.omega + k * d;
        if !(w < 0.0) {
            return Err(Error::Domain("slope stencil crosses ω = 0".into()));
        }
        let guess: Vec<f64> = wave.u.iter().zip(&z).map(|(a, b)| a + k * d * b).collect();
        Ok(newton_solve(&wave.disc, wave.p, w, &guess, opts)?.mass)
    };
    let (m1, m_1) = (mass_at(1.0)?, mass_at(-1.0)?);
    let (m2, m_2) = (mass_at(2.0)?, mass_at(-2.0)?);
    let value = (m1 - m_1) / (2.0 * d);
    let wide = (m2 - m_2) / (4.0 * d);
    Ok(SlopeEstimate { value, error: (wide - value).abs(), one_sided: false })
}
