//! Discrete Schrödinger operators on a graph grid and their low-lying spectra.
//!
//! An operator is stored in stiffness form `K` and paired with the lumped mass
//! `M` of its discretization; its eigenvalues are those of the pencil
//! `K v = λ M v`, i.e. of the symmetric matrix `M^{-1/2} K M^{-1/2}`.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::arrow::{ArrowMatrix, StableLu};
use crate::discrete::{Closure, Discretization, GridOptions};
use crate::error::{Error, Result};
use crate::function::GraphFunction;
use crate::graph::MetricGraph;

/// Relative width of the zero band used for eigenvalue classification.
pub const ZERO_BAND: f64 = 1e-6;

/// Minimum distance, in eigenvalue units, kept between a shift and the
/// spectrum of any edge-interior block during factorization.
pub const CHAIN_GAP: f64 = 0.02;

#[derive(Debug, Clone)]
pub struct SymmetricOperator {
    pub disc: Arc<Discretization>,
    pub stiffness: ArrowMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct SpectrumSlice {
    pub eigenvalues: Vec<f64>,
    /// `‖M^{-1/2}(K v − λ M v)‖` for `M`-normalized `v`.
    pub residuals: Vec<f64>,
    /// Eigenvectors in unknown coordinates, `M`-orthonormal.
    pub vectors: Vec<Vec<f64>>,
    /// Eigenvalues below `−tol` over the whole spectrum.
    pub negative_count: usize,
    /// Eigenvalues in `[−tol, tol]` over the whole spectrum.
    pub zero_count: usize,
    pub tol: f64,
}

impl SpectrumSlice {
    pub fn eigenfunction(&self, op: &SymmetricOperator, i: usize) -> GraphFunction {
        op.disc.to_function_real(&self.vectors[i])
    }

    /// Rows `index,eigenvalue,residual`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,eigenvalue,residual\n");
        for (i, (l, r)) in self.eigenvalues.iter().zip(&self.residuals).enumerate() {
            let _ = writeln!(s, "{i},{l:.15e},{r:.3e}");
        }
        s
    }
}

impl SymmetricOperator {
    pub fn new(disc: Arc<Discretization>, stiffness: ArrowMatrix<f64>) -> Self {
        SymmetricOperator { disc, stiffness }
    }

    pub fn dim(&self) -> usize {
        self.disc.dim()
    }

    /// `‖M^{-1/2} K M^{-1/2}‖_∞`.
    pub fn norm_inf(&self) -> f64 {
        let m = &self.disc.mass;
        let isq: Vec<f64> = m.iter().map(|x| 1.0 / x.sqrt()).collect();
        let abs = self.stiffness.map(|x: f64| x.abs());
        let y = abs.matvec(&isq);
        y.iter().zip(&isq).map(|(a, b)| a * b).fold(0.0, f64::max)
    }

    /// Default classification tolerance.
    pub fn default_tol(&self) -> f64 {
        ZERO_BAND * self.norm_inf()
    }

    /// `K − σ M`.
    pub fn shifted(&self, sigma: f64) -> ArrowMatrix<f64> {
        let mut a = self.stiffness.clone();
        let d: Vec<f64> = self.disc.mass.iter().map(|m| -sigma * m).collect();
        a.add_diagonal(&d);
        a
    }

    /// Number of eigenvalues strictly below `sigma`.
    pub fn count_below(&self, sigma: f64) -> Result<usize> {
        self.shifted(sigma).negative_count_stable(&self.disc.mass, CHAIN_GAP)
    }

    /// Factorization of `K − σ M`.
    pub fn factor_shifted(&self, sigma: f64) -> Result<StableLu> {
        self.shifted(sigma).factor_stable(&self.disc.mass, CHAIN_GAP)
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        // strong form M^{-1} K v
        self.stiffness.matvec(v).iter().zip(&self.disc.mass).map(|(x, m)| x / m).collect()
    }

    /// `max |K_ij − K_ji|` over the dense form; intended for small operators.
    pub fn asymmetry(&self) -> f64 {
        let d = self.stiffness.to_dense();
        (&d - d.transpose()).amax()
    }
}

/// Dirichlet-truncated grid for linear problems where no frequency is in play.
pub fn laplacian_discretization(g: &MetricGraph, opts: GridOptions) -> Result<Arc<Discretization>> {
    Ok(Arc::new(Discretization::new(g, opts, Closure::Dirichlet)?))
}

/// `−Δ + V`; `kappa` is the Robin coefficient at truncation points (ignored for Dirichlet closures).
pub fn assemble_laplacian(disc: &Arc<Discretization>, kappa: f64) -> SymmetricOperator {
    SymmetricOperator::new(disc.clone(), disc.hamiltonian(kappa))
}

/// Robin coefficient matching decay at frequency `omega`.
pub fn robin_kappa(omega: f64) -> f64 {
    (-omega).max(0.0).sqrt()
}

/// `(L₊, L₋)` at the real profile `u` (unknown coordinates) and frequency `omega`:
/// `L₊ = −Δ + V − (p+1)(2p+1)|u|^{2p} − ω`, `L₋ = −Δ + V − (p+1)|u|^{2p} − ω`.
pub fn assemble_linearization(
    disc: &Arc<Discretization>,
    u: &[f64],
    omega: f64,
    p: f64,
) -> Result<(SymmetricOperator, SymmetricOperator)> {
    if u.len() != disc.dim() {
        return Err(Error::GridMismatch);
    }
    if !(omega < 0.0) {
        return Err(Error::Domain("linearization needs ω < 0".into()));
    }
    let h = disc.hamiltonian(robin_kappa(omega));
    let w = disc.nl_weights(p);
    let mut dp = vec![0.0; u.len()];
    let mut dm = vec![0.0; u.len()];
    for a in 0..u.len() {
        let nl = (p + 1.0) * w[a] * u[a].abs().powf(2.0 * p);
        dm[a] = -nl - omega * disc.mass[a];
        dp[a] = -(2.0 * p + 1.0) * nl - omega * disc.mass[a];
    }
    let mut lp = h.clone();
    lp.add_diagonal(&dp);
    let mut lm = h;
    lm.add_diagonal(&dm);
    Ok((SymmetricOperator::new(disc.clone(), lp), SymmetricOperator::new(disc.clone(), lm)))
}

/// Natural size of the low spectrum of `L±` at `u`: `|ω| + (2p+1)(p+1)‖u‖∞^{2p}`.
/// Zero bands for linearizations are measured against this rather than the
/// grid-dependent operator norm.
pub fn linearization_scale(u: &[f64], omega: f64, p: f64) -> f64 {
    let sup = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    omega.abs() + (2.0 * p + 1.0) * (p + 1.0) * sup.powf(2.0 * p)
}

/// Same as [`assemble_linearization`] for a sampled real profile.
pub fn linearization_at(
    disc: &Arc<Discretization>,
    profile: &GraphFunction,
    omega: f64,
    p: f64,
) -> Result<(SymmetricOperator, SymmetricOperator)> {
    if !profile.is_real(1e-12 * profile.sup_norm().max(1.0)) {
        return Err(Error::Domain("linearization needs a real profile".into()));
    }
    let u = disc.restrict_real(profile)?;
    assemble_linearization(disc, &u, omega, p)
}

fn count_with_retry(op: &SymmetricOperator, sigma: f64, scale: f64) -> Result<usize> {
    match op.count_below(sigma) {
        Ok(c) => Ok(c),
        Err(_) => op.count_below(sigma + 1e-13 * scale),
    }
}

/// The `k` lowest eigenpairs by inertia bisection and inverse iteration.
pub fn lowest_eigenvalues(op: &SymmetricOperator, k: usize, tol: Option<f64>) -> Result<SpectrumSlice> {
    if k == 0 {
        return Err(Error::Domain("need at least one eigenvalue".into()));
    }
    let n = op.dim();
    let k = k.min(n);
    let scale = op.norm_inf().max(1e-300);
    let tol = tol.unwrap_or(ZERO_BAND * scale);
    let mut lo = vec![-scale * 1.01 - 1.0; k];
    let mut hi = vec![scale * 1.01 + 1.0; k];
    let update = |lo: &mut [f64], hi: &mut [f64], sigma: f64, c: usize| {
        for j in 0..k {
            if j < c {
                hi[j] = hi[j].min(sigma);
            } else {
                lo[j] = lo[j].max(sigma);
            }
        }
    };
    let eps = 4.0 * f64::EPSILON * scale;
    for j in 0..k {
        while hi[j] - lo[j] > eps.max(1e-15 * (lo[j].abs() + hi[j].abs())) {
            let mid = 0.5 * (lo[j] + hi[j]);
            if mid <= lo[j] || mid >= hi[j] {
                break;
            }
            let c = count_with_retry(op, mid, scale)?;
            update(&mut lo, &mut hi, mid, c);
        }
    }
    let eigenvalues: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();

    let mass = &op.disc.mass;
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let cluster = 1e-9 * scale;
    for (j, &lam) in eigenvalues.iter().enumerate() {
        let mut sigma = lam + 1e-12 * scale;
        let lu = loop {
            match op.factor_shifted(sigma) {
                Ok(lu) => break lu,
                Err(_) => sigma += 1e-11 * scale,
            }
        };
        // deterministic start vector
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919 + j * 104729) % 1013) as f64 / 1013.0).collect();
        for _ in 0..4 {
            let rhs: Vec<f64> = x.iter().zip(mass).map(|(a, m)| a * m).collect();
            x = lu.solve(&rhs);
            for (v, &l2) in vectors.iter().zip(&eigenvalues) {
                if (l2 - lam).abs() <= cluster {
                    let c = op.disc.dot_m(&x, v);
                    for (a, b) in x.iter_mut().zip(v) {
                        *a -= c * b;
                    }
                }
            }
            let nrm = op.disc.dot_m(&x, &x).sqrt();
            if !(nrm > 0.0) {
                return Err(Error::Singular("inverse iteration collapsed".into()));
            }
            for a in x.iter_mut() {
                *a /= nrm;
            }
        }
        let kx = op.stiffness.matvec(&x);
        let r: f64 = kx.iter().zip(&x).zip(mass).map(|((a, b), m)| (a - lam * m * b).powi(2) / m).sum::<f64>().sqrt();
        residuals.push(r);
        vectors.push(x);
    }
    let below_neg = count_with_retry(op, -tol, scale)?;
    let below_pos = count_with_retry(op, tol, scale)?;
    Ok(SpectrumSlice {
        eigenvalues,
        residuals,
        vectors,
        negative_count: below_neg,
        zero_count: below_pos - below_neg,
        tol,
    })
}

/// Eigenvalues below `−tol`.
pub fn morse_index(op: &SymmetricOperator, tol: Option<f64>) -> Result<usize> {
    let scale = op.norm_inf();
    count_with_retry(op, -tol.unwrap_or(ZERO_BAND * scale), scale)
}

/// Eigenvalues in `[−tol, tol]`.
pub fn kernel_dim(op: &SymmetricOperator, tol: Option<f64>) -> Result<usize> {
    let scale = op.norm_inf();
    let t = tol.unwrap_or(ZERO_BAND * scale);
    Ok(count_with_retry(op, t, scale)? - count_with_retry(op, -t, scale)?)
}
