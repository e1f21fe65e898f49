//! Time integration of `i Ψ_t = −ΔΨ + VΨ − (p+1)|Ψ|^{2p}Ψ` on the graph grid.
//!
//! The semi-discrete flow `i M u' = H u − (p+1) W |u|^{2p} u` is advanced by a
//! Crank–Nicolson step: the linear part acts on the midpoint `(uⁿ + uⁿ⁺¹)/2`,
//! which is solved for exactly with a complex arrow factorization, and the
//! nonlinearity is found by fixed-point iteration with vector Aitken
//! extrapolation. Two nonlinear closures are offered. [`Scheme::Conservative`]
//! uses the divided difference of the potential between the two time levels
//! and conserves mass and energy to solver tolerance; [`Scheme::Midpoint`]
//! evaluates the nonlinearity at the midpoint and conserves mass only.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;

use crate::analytic::{soliton_mass, SolitonParams};
use crate::arrow::{ArrowLu, ArrowMatrix};
use crate::discrete::Discretization;
use crate::error::{Error, Result};
use crate::function::GraphFunction;
use crate::operators::robin_kappa;
use crate::solver::StandingWave;

type C = Complex64;

const FIXED_POINT_TOL: f64 = 1e-12;
const FIXED_POINT_MAX: usize = 25;
const MAX_HALVINGS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Conservative,
    Midpoint,
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub dt: f64,
    pub t_final: f64,
    /// Record mass, energy and distance every this many steps.
    pub record_every: usize,
    /// Keep a snapshot every this many records (0 keeps none).
    pub snapshot_every: usize,
    /// Robin coefficient at truncation points.
    pub kappa: f64,
    /// Switch the nonlinear term off.
    pub linear: bool,
    /// Allow `p = 2` data with mass above the line-soliton mass.
    pub allow_supercritical_mass: bool,
    pub scheme: Scheme,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            dt: 1e-3,
            t_final: 1.0,
            record_every: 10,
            snapshot_every: 0,
            kappa: 0.0,
            linear: false,
            allow_supercritical_mass: false,
            scheme: Scheme::Conservative,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub disc: Arc<Discretization>,
    pub p: f64,
    pub kappa: f64,
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    /// Orbital distances to the reference wave, when one was given.
    pub distance: Vec<f64>,
    pub snapshots: Vec<(f64, GraphFunction)>,
    /// Final state in unknown coordinates.
    pub state: Vec<C>,
    /// Steps that had to be retried with a halved time step.
    pub retries: usize,
}

impl Trajectory {
    /// `max |M(t) − M(0)| / M(0)` divided by the elapsed time.
    pub fn mass_drift_rate(&self) -> f64 {
        drift_rate(&self.times, &self.mass)
    }

    pub fn energy_drift_rate(&self) -> f64 {
        drift_rate(&self.times, &self.energy)
    }

    pub fn max_distance(&self) -> f64 {
        self.distance.iter().fold(0.0, |m, &d| m.max(d))
    }

    /// Rows `t,mass,energy,orbital_distance` (the last column empty without a reference).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,mass,energy,orbital_distance\n");
        for i in 0..self.times.len() {
            let d = self.distance.get(i).map(|d| format!("{d:.12e}")).unwrap_or_default();
            let _ = writeln!(s, "{:.6},{:.15e},{:.15e},{}", self.times[i], self.mass[i], self.energy[i], d);
        }
        s
    }
}

fn drift_rate(t: &[f64], q: &[f64]) -> f64 {
    let (Some(&t0), Some(&t1), Some(&q0)) = (t.first(), t.last(), q.first()) else { return 0.0 };
    if t1 <= t0 {
        return 0.0;
    }
    let scale = q0.abs().max(f64::MIN_POSITIVE);
    q.iter().fold(0.0f64, |m, x| m.max((x - q0).abs())) / scale / (t1 - t0)
}

/// Conserved energy `⟨H(κ)u, u⟩ − Σ W |u|^{2p+2}`, the closure term included.
pub fn flow_energy(disc: &Discretization, kappa: f64, u: &[C], p: f64, linear: bool) -> f64 {
    let h = disc.hamiltonian(kappa);
    let re: Vec<f64> = u.iter().map(|z| z.re).collect();
    let im: Vec<f64> = u.iter().map(|z| z.im).collect();
    let q = |x: &[f64]| -> f64 { h.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum() };
    let mut e = q(&re) + q(&im);
    if !linear {
        let w = disc.nl_weights(p);
        e -= u.iter().zip(&w).map(|(z, w)| w * z.norm_sqr().powf(p + 1.0)).sum::<f64>();
    }
    e
}

/// One-step map of the implicit midpoint rule; factorizations are cached per step size.
pub struct Stepper {
    disc: Arc<Discretization>,
    h: ArrowMatrix<f64>,
    w: Vec<f64>,
    p: f64,
    linear: bool,
    scheme: Scheme,
    cache: HashMap<u64, ArrowLu<C>>,
    pub last_iterations: usize,
}

impl Stepper {
    pub fn new(disc: Arc<Discretization>, p: f64, kappa: f64, linear: bool, scheme: Scheme) -> Result<Self> {
        if !(p > 0.0 && p <= 2.0) {
            return Err(Error::Domain(format!("nonlinearity power {p} outside (0, 2]")));
        }
        let h = disc.hamiltonian(kappa);
        let w = disc.nl_weights(p);
        Ok(Stepper { disc, h, w, p, linear, scheme, cache: HashMap::new(), last_iterations: 0 })
    }

    fn lu(&mut self, dt: f64) -> Result<&ArrowLu<C>> {
        let key = dt.to_bits();
        if !self.cache.contains_key(&key) {
            // M + i (dt/2) H
            let mut a = self.h.map(|x: f64| C::new(0.0, 0.5 * dt * x));
            let m: Vec<C> = self.disc.mass.iter().map(|&m| C::new(m, 0.0)).collect();
            a.add_diagonal(&m);
            let lu = a.factor()?;
            self.cache.insert(key, lu);
        }
        Ok(&self.cache[&key])
    }

    /// Advance `u` by `dt` (negative steps run the flow backward).
    pub fn step(&mut self, u: &[C], dt: f64) -> Result<Vec<C>> {
        if u.len() != self.disc.dim() {
            return Err(Error::GridMismatch);
        }
        let mu: Vec<C> = u.iter().zip(&self.disc.mass).map(|(z, m)| *z * *m).collect();
        let half = C::new(0.0, 0.5 * dt);
        let linear = self.linear;
        let nl_w = self.w.clone();
        let p = self.p;
        let scheme = self.scheme;
        let lu = self.lu(dt)?;
        // v = A⁻¹ (M u + i dt/2 g v), midpoint v = (u + u_next)/2
        let map = |v: &[C]| -> Vec<C> {
            let mut rhs = mu.clone();
            if !linear {
                for (((r, z), w), z0) in rhs.iter_mut().zip(v).zip(&nl_w).zip(u) {
                    let g = match scheme {
                        Scheme::Midpoint => (p + 1.0) * z.norm_sqr().powf(p),
                        Scheme::Conservative => divided_power(z0.norm_sqr(), (*z * 2.0 - z0).norm_sqr(), p),
                    };
                    *r += half * *z * (w * g);
                }
            }
            lu.solve(&rhs)
        };
        let norm = |v: &[C]| v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let mut v = map(u);
        let mut iters = 1;
        if !linear {
            let mut hist: Vec<Vec<C>> = vec![v.clone()];
            let mut converged = false;
            while iters < FIXED_POINT_MAX {
                let next = map(&v);
                iters += 1;
                let diff = next.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
                v = next;
                if diff <= FIXED_POINT_TOL * norm(&v).max(1.0) {
                    converged = true;
                    break;
                }
                hist.push(v.clone());
                if hist.len() == 3 {
                    // Irons–Tuck form of vector Aitken extrapolation
                    let d1: Vec<C> = hist[1].iter().zip(&hist[0]).map(|(a, b)| a - b).collect();
                    let d2: Vec<C> = hist[2].iter().zip(&hist[1]).map(|(a, b)| a - b).collect();
                    let dd: Vec<C> = d2.iter().zip(&d1).map(|(a, b)| a - b).collect();
                    let den: f64 = dd.iter().map(|z| z.norm_sqr()).sum();
                    if den > 0.0 {
                        let c: f64 = d2.iter().zip(&dd).map(|(a, b)| (a.conj() * b).re).sum::<f64>() / den;
                        v = hist[2].iter().zip(&d2).map(|(a, b)| a - b * c).collect();
                    }
                    hist.clear();
                    hist.push(v.clone());
                }
            }
            if !converged {
                return Err(Error::NoConvergence(format!("midpoint iteration at dt = {dt}")));
            }
        }
        self.last_iterations = iters;
        Ok(v.iter().zip(u).map(|(a, b)| *a * 2.0 - b).collect())
    }

    /// Advance by `dt`, halving the step on fixed-point failure. Returns the
    /// new state and the number of halvings performed.
    pub fn step_adaptive(&mut self, u: &[C], dt: f64) -> Result<(Vec<C>, usize)> {
        self.step_rec(u, dt, 0)
    }

    fn step_rec(&mut self, u: &[C], dt: f64, depth: u32) -> Result<(Vec<C>, usize)> {
        match self.step(u, dt) {
            Ok(v) => Ok((v, 0)),
            Err(Error::NoConvergence(_)) if depth < MAX_HALVINGS => {
                let (a, r1) = self.step_rec(u, 0.5 * dt, depth + 1)?;
                let (b, r2) = self.step_rec(&a, 0.5 * dt, depth + 1)?;
                Ok((b, 1 + r1 + r2))
            }
            Err(e) => Err(e),
        }
    }
}

/// `(b^{p+1} − a^{p+1}) / (b − a)`, continuous across `a = b`.
fn divided_power(a: f64, b: f64, p: f64) -> f64 {
    if p == 1.0 {
        return a + b;
    }
    if a <= 0.0 || b <= 0.0 {
        return a.max(b).powf(p);
    }
    let d = b.ln() - a.ln();
    if d == 0.0 {
        return (p + 1.0) * a.powf(p);
    }
    a.powf(p) * ((p + 1.0) * d).exp_m1() / d.exp_m1()
}

/// `H¹` inner product `Σ conj(b)ᵀ (K + M) a` on unknown vectors.
fn h1_inner(disc: &Discretization, a: &[C], b: &[C]) -> C {
    let (ar, ai): (Vec<f64>, Vec<f64>) = a.iter().map(|z| (z.re, z.im)).unzip();
    let kr = disc.kinetic.matvec(&ar);
    let ki = disc.kinetic.matvec(&ai);
    let mut s = C::new(0.0, 0.0);
    for i in 0..a.len() {
        let ka = C::new(kr[i] + disc.mass[i] * ar[i], ki[i] + disc.mass[i] * ai[i]);
        s += ka * b[i].conj();
    }
    s
}

/// `min_θ ‖ψ − e^{−iθ} φ‖_{H¹}` on unknown vectors. The norm is quadratic in
/// `e^{−iθ}`, so the optimal phase is `arg ⟨ψ, φ⟩`.
pub fn orbital_distance(disc: &Discretization, psi: &[C], phi: &[C]) -> Result<f64> {
    if psi.len() != disc.dim() || phi.len() != disc.dim() {
        return Err(Error::GridMismatch);
    }
    let c = h1_inner(disc, psi, phi);
    let rot = if c.norm() > 0.0 { c / c.norm() } else { C::new(1.0, 0.0) };
    let d: Vec<C> = psi.iter().zip(phi).map(|(a, b)| a - rot * b).collect();
    Ok(h1_inner(disc, &d, &d).re.max(0.0).sqrt())
}

/// Same on sampled functions over a shared grid, with trapezoid weights and
/// piecewise-linear derivatives.
pub fn orbital_distance_fn(psi: &GraphFunction, phi: &GraphFunction) -> Result<f64> {
    psi.check_grid(phi)?;
    let inner = |a: &GraphFunction, b: &GraphFunction| -> C {
        let mut s = C::new(0.0, 0.0);
        for (ea, eb) in a.edges.iter().zip(&b.edges) {
            for i in 0..ea.values.len() {
                s += ea.values[i] * eb.values[i].conj() * ea.weight(i);
            }
            for i in 1..ea.values.len() {
                let da = ea.values[i] - ea.values[i - 1];
                let db = eb.values[i] - eb.values[i - 1];
                s += da * db.conj() / ea.h;
            }
        }
        s
    };
    let c = inner(psi, phi);
    let rot = if c.norm() > 0.0 { c / c.norm() } else { C::new(1.0, 0.0) };
    let d = psi.zip_with(phi, |a, b| a - rot * b)?;
    Ok(inner(&d, &d).re.max(0.0).sqrt())
}

/// Integrate from `u0` on `disc` up to `opts.t_final`, tracking the distance
/// to the orbit of `reference` when given.
pub fn evolve(
    disc: &Arc<Discretization>,
    u0: &[C],
    p: f64,
    reference: Option<&[C]>,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    if !(opts.dt > 0.0 && opts.t_final > 0.0) {
        return Err(Error::Domain("dt and T must be positive".into()));
    }
    if u0.len() != disc.dim() || reference.is_some_and(|r| r.len() != disc.dim()) {
        return Err(Error::GridMismatch);
    }
    if opts.record_every == 0 {
        return Err(Error::Domain("record_every must be at least 1".into()));
    }
    let m0 = disc.mass_of_c(u0);
    if p == 2.0 && !opts.linear && !opts.allow_supercritical_mass {
        let critical = soliton_mass(SolitonParams::new(-1.0, 2.0)?);
        if m0 > critical {
            return Err(Error::Domain(format!(
                "initial mass {m0} exceeds the critical mass {critical}; collapse possible"
            )));
        }
    }
    let mut stepper = Stepper::new(disc.clone(), p, opts.kappa, opts.linear, opts.scheme)?;
    let steps = (opts.t_final / opts.dt).round().max(1.0) as usize;
    let dt = opts.t_final / steps as f64;

    let mut tr = Trajectory {
        disc: disc.clone(),
        p,
        kappa: opts.kappa,
        times: Vec::new(),
        mass: Vec::new(),
        energy: Vec::new(),
        distance: Vec::new(),
        snapshots: Vec::new(),
        state: u0.to_vec(),
        retries: 0,
    };
    let record = |tr: &mut Trajectory, t: f64, u: &[C]| -> Result<()> {
        tr.times.push(t);
        tr.mass.push(disc.mass_of_c(u));
        tr.energy.push(flow_energy(disc, opts.kappa, u, p, opts.linear));
        if let Some(r) = reference {
            tr.distance.push(orbital_distance(disc, u, r)?);
        }
        if opts.snapshot_every > 0 && (tr.times.len() - 1) % opts.snapshot_every == 0 {
            tr.snapshots.push((t, disc.to_function(u)));
        }
        Ok(())
    };
    let mut u = u0.to_vec();
    record(&mut tr, 0.0, &u)?;
    for n in 1..=steps {
        let (next, r) = stepper.step_adaptive(&u, dt)?;
        tr.retries += r;
        u = next;
        if n % opts.record_every == 0 || n == steps {
            record(&mut tr, n as f64 * dt, &u)?;
        }
    }
    tr.state = u;
    Ok(tr)
}

/// Evolve a standing wave (optionally perturbed) on its own grid with the
/// wave's Robin closure, measuring the distance to the wave's orbit.
pub fn evolve_from_wave(wave: &StandingWave, perturbed: Option<&[C]>, opts: &EvolveOptions) -> Result<Trajectory> {
    let phi: Vec<C> = wave.u.iter().map(|&x| C::new(x, 0.0)).collect();
    let u0 = perturbed.map(|v| v.to_vec()).unwrap_or_else(|| phi.clone());
    let opts = EvolveOptions { kappa: robin_kappa(wave.omega), ..opts.clone() };
    evolve(&wave.disc, &u0, wave.p, Some(&phi), &opts)
}

/// `c (φ + δ η)` rescaled to the mass of `φ`.
pub fn mass_preserving_perturbation(disc: &Discretization, phi: &[f64], eta: &[f64], delta: f64) -> Result<Vec<C>> {
    if phi.len() != disc.dim() || eta.len() != disc.dim() {
        return Err(Error::GridMismatch);
    }
    let v: Vec<f64> = phi.iter().zip(eta).map(|(a, b)| a + delta * b).collect();
    let m = disc.mass_of(&v);
    if !(m > 0.0) {
        return Err(Error::Domain("perturbed state has zero mass".into()));
    }
    let c = (disc.mass_of(phi) / m).sqrt();
    Ok(v.iter().map(|x| C::new(c * x, 0.0)).collect())
}
