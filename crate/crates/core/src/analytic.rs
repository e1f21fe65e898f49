//! Closed-form objects: NLS solitons and their mass law, dnoidal and cnoidal
//! profiles, and the level-curve algebra of the normalized stationary equation
//! `−u″ + u − (p+1) u^{2p+1} = 0`.

use std::sync::Mutex;

use crate::elliptic::jacobi;
use crate::error::{Error, Result};
use crate::quad::integrate;

fn sech(x: f64) -> f64 {
    if x.abs() > 700.0 {
        0.0
    } else {
        1.0 / x.cosh()
    }
}

fn check_power(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 2.0) {
        return Err(Error::Domain(format!("nonlinearity power {p} outside (0, 2]")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonParams {
    pub omega: f64,
    pub p: f64,
}

impl SolitonParams {
    pub fn new(omega: f64, p: f64) -> Result<Self> {
        if !(omega < 0.0) {
            return Err(Error::Domain(format!("soliton frequency {omega} must be negative")));
        }
        check_power(p)?;
        Ok(SolitonParams { omega, p })
    }

    fn decay(&self) -> f64 {
        (-self.omega).sqrt()
    }
}

/// `φ_ω(x) = |ω|^{1/(2p)} sech^{1/p}(p √|ω| x)`.
pub fn nls_soliton(s: SolitonParams, x: f64) -> f64 {
    let e = s.decay();
    (-s.omega).powf(0.5 / s.p) * sech(s.p * e * x).powf(1.0 / s.p)
}

pub fn nls_soliton_prime(s: SolitonParams, x: f64) -> f64 {
    let e = s.decay();
    let y = s.p * e * x;
    -(-s.omega).powf(0.5 / s.p) * e * sech(y).powf(1.0 / s.p) * y.tanh()
}

pub fn nls_soliton_second(s: SolitonParams, x: f64) -> f64 {
    // φ″ = |ω| φ − (p+1) φ^{2p+1}
    let f = nls_soliton(s, x);
    -s.omega * f - (s.p + 1.0) * f.powf(2.0 * s.p + 1.0)
}

static CP_CACHE: Mutex<Vec<(u64, f64)>> = Mutex::new(Vec::new());

/// `C_p = ∫_ℝ sech^{2/p}(p x) dx`.
pub fn c_p(p: f64) -> f64 {
    let key = p.to_bits();
    if let Some(&(_, v)) = CP_CACHE.lock().unwrap().iter().find(|(k, _)| *k == key) {
        return v;
    }
    let (half, _) = integrate(|x| sech(p * x).powf(2.0 / p), 0.0, 50.0 / p, 1e-15, 1e-14);
    let v = 2.0 * half;
    CP_CACHE.lock().unwrap().push((key, v));
    v
}

/// Soliton mass `μ = C_p |ω|^{1/p − 1/2}`.
pub fn soliton_mass(s: SolitonParams) -> f64 {
    c_p(s.p) * (-s.omega).powf(1.0 / s.p - 0.5)
}

/// Frequency of the line soliton with mass `mu` (subcritical powers only).
pub fn soliton_omega_for_mass(mu: f64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 2.0) {
        return Err(Error::Domain("mass determines ω only for p < 2".into()));
    }
    if !(mu > 0.0) {
        return Err(Error::Domain("mass must be positive".into()));
    }
    Ok(-(mu / c_p(p)).powf(1.0 / (1.0 / p - 0.5)))
}

/// Energy `∫φ′² − ∫φ^{2p+2}` of the line soliton.
pub fn soliton_energy(s: SolitonParams) -> f64 {
    let x_max = 50.0 / (s.p * s.decay());
    let (kin, _) = integrate(|x| nls_soliton_prime(s, x).powi(2), 0.0, x_max, 1e-16, 1e-14);
    let (pot, _) = integrate(|x| nls_soliton(s, x).powf(2.0 * s.p + 2.0), 0.0, x_max, 1e-16, 1e-14);
    2.0 * (kin - pot)
}

/// Line-soliton energy at mass `mu`.
pub fn line_energy_at_mass(mu: f64, p: f64) -> Result<f64> {
    let omega = soliton_omega_for_mass(mu, p)?;
    Ok(soliton_energy(SolitonParams::new(omega, p)?))
}

/// Energy of the half-line state of mass `mu` (half of a line soliton of mass `2 mu`).
pub fn half_line_energy_at_mass(mu: f64, p: f64) -> Result<f64> {
    Ok(0.5 * line_energy_at_mass(2.0 * mu, p)?)
}

// ---- elliptic profiles (cubic case) -----------------------------------------

fn check_dn(k: f64) -> Result<()> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::Domain(format!("dnoidal modulus {k} outside (0, 1)")));
    }
    Ok(())
}

fn check_cn(k: f64) -> Result<()> {
    if !(k > std::f64::consts::FRAC_1_SQRT_2 && k <= 1.0) {
        return Err(Error::Domain(format!("cnoidal modulus {k} outside (1/√2, 1]")));
    }
    Ok(())
}

/// `u = (2−k²)^{−1/2} dn(z/√(2−k²); k)`.
pub fn dnoidal(k: f64, z: f64) -> Result<f64> {
    check_dn(k)?;
    let s = (2.0 - k * k).sqrt();
    Ok(jacobi(z / s, k)?.2 / s)
}

pub fn dnoidal_prime(k: f64, z: f64) -> Result<f64> {
    check_dn(k)?;
    let s = (2.0 - k * k).sqrt();
    let (sn, cn, _) = jacobi(z / s, k)?;
    Ok(-k * k * sn * cn / (s * s))
}

/// Level `(k²−1)/(2−k²)²` of the dnoidal wave.
pub fn dnoidal_beta(k: f64) -> Result<f64> {
    check_dn(k)?;
    let d = 2.0 - k * k;
    Ok((k * k - 1.0) / (d * d))
}

/// `u = k (2k²−1)^{−1/2} cn(z/√(2k²−1); k)`.
pub fn cnoidal(k: f64, z: f64) -> Result<f64> {
    check_cn(k)?;
    let s = (2.0 * k * k - 1.0).sqrt();
    Ok(k * jacobi(z / s, k)?.1 / s)
}

pub fn cnoidal_prime(k: f64, z: f64) -> Result<f64> {
    check_cn(k)?;
    let s = (2.0 * k * k - 1.0).sqrt();
    let (sn, _, dn) = jacobi(z / s, k)?;
    Ok(-k * sn * dn / (s * s))
}

/// Level `(1−k²)k²/(2k²−1)²` of the cnoidal wave.
pub fn cnoidal_beta(k: f64) -> Result<f64> {
    check_cn(k)?;
    let d = 2.0 * k * k - 1.0;
    Ok((1.0 - k * k) * k * k / (d * d))
}

// ---- level curves --------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelCurve {
    pub beta: f64,
    pub p: f64,
}

impl LevelCurve {
    pub fn new(beta: f64, p: f64) -> Result<Self> {
        check_power(p)?;
        if beta < beta_min(p) {
            return Err(Error::Domain(format!("level {beta} below minimum {}", beta_min(p))));
        }
        Ok(LevelCurve { beta, p })
    }

    /// `v² − u² + u^{2p+2}`.
    pub fn invariant(p: f64, u: f64, v: f64) -> f64 {
        v * v - a_fn(u, p)
    }
}

/// `A(u) = u² − u^{2p+2}`.
pub fn a_fn(u: f64, p: f64) -> f64 {
    u * u - u.abs().powf(2.0 * p + 2.0)
}

/// `((1+t)^m − 1)/t`, accurate near `t = 0`.
pub(crate) fn pow_quotient(t: f64, m: f64) -> f64 {
    if t.abs() < 1e-8 {
        m * (1.0 + 0.5 * (m - 1.0) * t)
    } else {
        (m * t.ln_1p()).exp_m1() / t
    }
}

/// Divided difference `(A(u) − A(w)) / (u − w)` for positive `u, w`.
pub fn a_divided(u: f64, w: f64, p: f64) -> f64 {
    let m = 2.0 * p + 2.0;
    let t = (u - w) / w;
    (u + w) - w.powf(m - 1.0) * pow_quotient(t, m)
}

/// `β_p = −p/(p+1)^{(p+1)/p}`, the minimum of `−A`.
pub fn beta_min(p: f64) -> f64 {
    -p / (p + 1.0).powf((p + 1.0) / p)
}

/// Positive constant solution `u_p = (p+1)^{−1/(2p)}`.
pub fn constant_state(p: f64) -> f64 {
    (p + 1.0).powf(-0.5 / p)
}

/// Largest root of `β + A(u) = 0`.
pub fn turning_point(c: LevelCurve) -> Result<f64> {
    let (beta, p) = (c.beta, c.p);
    if beta < beta_min(p) {
        return Err(Error::Domain(format!("level {beta} below minimum {}", beta_min(p))));
    }
    if p == 1.0 {
        let disc = (1.0 + 4.0 * beta).max(0.0).sqrt();
        return Ok((0.5 * (1.0 + disc)).sqrt());
    }
    let up = constant_state(p);
    let f = |u: f64| beta + a_fn(u, p);
    let mut hi = if beta < 0.0 { 1.0 } else { 2.0 };
    while f(hi) >= 0.0 {
        hi *= 2.0;
    }
    let mut lo = up;
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if f(m) >= 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(0.5 * (lo + hi))
}
