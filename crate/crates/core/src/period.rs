//! The period function of the normalized stationary equation, its root
//! problems, and reconstruction of pulse profiles along level curves.
//!
//! A pulse on `[0, L]` has its maximum `𝔭₊` at `z = 0` and endpoint data
//! `(u, u′) = (𝔭, −𝔮)` at `z = L`, with `L = T₊(𝔭, 𝔮)`.

use crate::analytic::{a_divided, a_fn, beta_min, turning_point, LevelCurve};
use crate::error::{Error, Result};
use crate::quad::{bisect, golden_max, integrate};

const QUAD_REL: f64 = 1e-13;
const QUAD_ABS: f64 = 1e-15;

/// Endpoint data of a pulse: value `𝔭 > 0` and slope magnitude `𝔮 ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodQuery {
    pub value: f64,
    pub slope: f64,
    pub p: f64,
}

impl PeriodQuery {
    pub fn new(value: f64, slope: f64, p: f64) -> Self {
        PeriodQuery { value, slope, p }
    }

    /// Level `β = 𝔮² − A(𝔭)`.
    pub fn level(&self) -> f64 {
        self.slope * self.slope - a_fn(self.value, self.p)
    }

    pub fn turning_point(&self) -> Result<f64> {
        turning_point(LevelCurve { beta: self.level(), p: self.p })
    }
}

/// ε > 0 relating `ω = −ε²` and `φ(x) = ε^{1/p} u(ε x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFrame {
    pub eps: f64,
    pub p: f64,
}

impl ScalingFrame {
    pub fn new(eps: f64, p: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("scaling parameter {eps} must be positive")));
        }
        Ok(ScalingFrame { eps, p })
    }

    pub fn from_omega(omega: f64, p: f64) -> Result<Self> {
        if !(omega < 0.0) {
            return Err(Error::Domain("ω must be negative".into()));
        }
        Self::new((-omega).sqrt(), p)
    }

    pub fn omega(&self) -> f64 {
        -self.eps * self.eps
    }

    pub fn amplitude(&self) -> f64 {
        self.eps.powf(1.0 / self.p)
    }

    /// Normalized samples `(z, u)` to physical samples `(x, φ)`.
    pub fn scale(&self, z: &[f64], u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let a = self.amplitude();
        (z.iter().map(|z| z / self.eps).collect(), u.iter().map(|u| a * u).collect())
    }

    /// Physical samples `(x, φ)` to normalized samples `(z, u)`.
    pub fn unscale(&self, x: &[f64], phi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let a = self.amplitude();
        (x.iter().map(|x| x * self.eps).collect(), phi.iter().map(|f| f / a).collect())
    }
}

/// Arclength in `z` along the level `β` from `u` up to the turning point `top`,
/// given `slope² = β + A(u)`.
fn arc(u: f64, slope: f64, top: f64, p: f64) -> f64 {
    if u >= top {
        return 0.0;
    }
    let mid = u + 0.5 * (top - u);
    // upper piece: u = top − (top − mid) s²
    let d = top - mid;
    let upper = integrate(
        |s| {
            let x = top - d * s * s;
            let g = -a_divided(x, top, p);
            2.0 * d.sqrt() / g.max(f64::MIN_POSITIVE).sqrt()
        },
        0.0,
        1.0,
        QUAD_ABS,
        QUAD_REL,
    )
    .0;
    // lower piece: x = u e^{t²}
    let t_max = (mid / u).ln().sqrt();
    let q2 = slope * slope;
    let lower = integrate(
        |t| {
            let em = (t * t).exp_m1();
            let x = u * (1.0 + em);
            let den = q2 + u * em * a_divided(x, u, p);
            2.0 * t * x / den.max(f64::MIN_POSITIVE).sqrt()
        },
        0.0,
        t_max,
        QUAD_ABS,
        QUAD_REL,
    )
    .0;
    upper + lower
}

fn check_query(q: &PeriodQuery) -> Result<f64> {
    if !(q.value > 0.0) || !(q.slope >= 0.0) {
        return Err(Error::Domain("period query needs 𝔭 > 0 and 𝔮 ≥ 0".into()));
    }
    if !(q.p > 0.0 && q.p <= 2.0) {
        return Err(Error::Domain(format!("power {} outside (0, 2]", q.p)));
    }
    let beta = q.level();
    if beta <= beta_min(q.p) {
        return Err(Error::Domain(format!("level {beta} not above β_p")));
    }
    let mut top = q.turning_point()?;
    if top - q.value < 1e-2 * q.value && q.slope > 0.0 {
        // resolve a thin gap from q² = (top − u)(−A[top, u]) instead of by subtraction
        let mut gap = (top - q.value).max(0.0);
        for _ in 0..60 {
            let next = q.slope * q.slope / (-a_divided(q.value + gap, q.value, q.p));
            if !(next > 0.0) || (next - gap).abs() <= 1e-16 * next {
                gap = next;
                break;
            }
            gap = next;
        }
        if gap > 0.0 {
            top = q.value + gap;
        }
    }
    if q.value >= top {
        return Err(Error::Domain(format!("endpoint {} not below turning point {top}", q.value)));
    }
    Ok(top)
}

/// `T₊(𝔭, 𝔮) = ∫_𝔭^{𝔭₊} du / √(β + A(u))`.
pub fn period_t(q: PeriodQuery) -> Result<f64> {
    let top = check_query(&q)?;
    // turning point within rounding distance: linearize β + A about 𝔭
    let m = 2.0 * q.p + 2.0;
    let c = (m * q.value.powf(m - 1.0)) - 2.0 * q.value;
    if c > 0.0 && q.slope * q.slope / c < 1e-10 * q.value {
        return Ok(2.0 * q.slope / c);
    }
    Ok(arc(q.value, q.slope, top, q.p))
}

/// Maximizer of `𝔮 ↦ T₊(𝔭, 𝔮)` inside the homoclinic orbit, `0 < 𝔮 < √A(𝔭)`,
/// for the cubic case and `𝔭 ∈ (1/√2, 1)`. `None` when the period increases
/// on the whole range.
pub fn qmax(value: f64) -> Result<Option<f64>> {
    if !(value > std::f64::consts::FRAC_1_SQRT_2 && value < 1.0) {
        return Err(Error::Domain(format!("qmax needs 𝔭 in (1/√2, 1), got {value}")));
    }
    let qh = a_fn(value, 1.0).sqrt();
    let t = |s: f64| period_t(PeriodQuery::new(value, s, 1.0)).unwrap_or(f64::NAN);
    let dq = 1e-6 * qh;
    if t(qh) - t(qh - dq) >= 0.0 {
        return Ok(None);
    }
    let (arg, _) = golden_max(t, 1e-9 * qh, qh, 1e-10);
    Ok(Some(arg))
}

/// `∂T₊/∂𝔮` on the homoclinic orbit `𝔮 = √A(𝔭)` (cubic case).
pub fn homoclinic_slope_derivative(value: f64) -> f64 {
    let qh = a_fn(value, 1.0).sqrt();
    let d = 1e-5;
    let t = |s: f64| period_t(PeriodQuery::new(value, s, 1.0)).unwrap_or(f64::NAN);
    (t(qh + d) - t(qh - d)) / (2.0 * d)
}

/// Value `𝔭_{**}` where the period maximizer crosses the homoclinic orbit.
pub fn homoclinic_crossing() -> Result<f64> {
    bisect(homoclinic_slope_derivative, 0.72, 0.95, 1e-9)
        .ok_or_else(|| Error::NoConvergence("no sign change of ∂T/∂𝔮 on the homoclinic orbit".into()))
}

/// Tadpole map `𝔭 ↦ T₊(𝔭, ½√A(𝔭))`.
pub fn tadpole_map(value: f64, p: f64) -> Result<f64> {
    period_t(PeriodQuery::new(value, 0.5 * a_fn(value, p).sqrt(), p))
}

/// Unique `𝔭 ∈ (0, 1)` with `T₊(𝔭, ½√A(𝔭)) = ε ℓ` (loop of half-length `ℓ`).
/// Bisection runs in `ln 𝔭` so that roots far below `10⁻⁹` stay resolved.
pub fn tadpole_root(eps: f64, p: f64, half_length: f64) -> Result<f64> {
    if !(eps > 0.0) || !(half_length > 0.0) {
        return Err(Error::Domain("tadpole root needs ε > 0 and ℓ > 0".into()));
    }
    let target = eps * half_length;
    let f = |y: f64| tadpole_map(y.exp(), p).map(|t| t - target).unwrap_or(f64::NAN);
    let lo = (1e-200f64).ln();
    let hi = (-1e-12f64).ln_1p();
    let y = bisect(f, lo, hi, 1e-14)
        .ok_or_else(|| Error::NoConvergence(format!("tadpole root not bracketed for ε = {eps}")))?;
    Ok(y.exp())
}

/// Profile along a level curve, parameterized by the distance `z` from the turning point.
#[derive(Debug, Clone, Copy)]
pub struct LevelProfile {
    pub beta: f64,
    pub p: f64,
    pub top: f64,
}

impl LevelProfile {
    pub fn new(beta: f64, p: f64) -> Result<Self> {
        let top = turning_point(LevelCurve::new(beta, p)?)?;
        Ok(LevelProfile { beta, p, top })
    }

    fn slope_at(&self, u: f64) -> f64 {
        if u < 0.5 * self.top {
            // far from the top the direct form keeps relative accuracy for tiny β
            return (self.beta + a_fn(u, self.p)).max(0.0).sqrt();
        }
        // β + A(u) = A(u) − A(top) = (top − u)(−A[u, top])
        ((self.top - u) * (-a_divided(u, self.top, self.p))).max(0.0).sqrt()
    }

    /// Arclength from the turning point down to value `u`.
    pub fn arc_to(&self, u: f64) -> f64 {
        arc(u, self.slope_at(u), self.top, self.p)
    }

    /// `(u, u′)` at distance `z ≥ 0` from the turning point, assuming the
    /// profile is still decreasing there and stays above `floor`.
    pub fn eval(&self, z: f64, floor: f64) -> (f64, f64) {
        if z <= 0.0 {
            return (self.top, 0.0);
        }
        let d = self.top - floor;
        let u_of = |s: f64| self.top - d * s * s;
        let g = |s: f64| self.arc_to(u_of(s)) - z;
        // Newton in s with bisection safeguard; z(s) is increasing.
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut s = 0.5;
        for _ in 0..100 {
            let gs = g(s);
            if gs.abs() <= 1e-15 * z.max(1.0) {
                break;
            }
            if gs > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let x = u_of(s);
            let dz = 2.0 * d.sqrt() / (-a_divided(x, self.top, self.p)).max(f64::MIN_POSITIVE).sqrt();
            let mut next = s - gs / dz;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() <= 1e-16 {
                s = next;
                break;
            }
            s = next;
        }
        let u = u_of(s);
        (u, -self.slope_at(u))
    }
}

/// Sampled pulse on `[0, L]`.
#[derive(Debug, Clone)]
pub struct PulseProfile {
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub p: f64,
    pub beta: f64,
}

/// Rebuild the monotone pulse with endpoint data `q` on `[0, length]`.
pub fn reconstruct_pulse(q: PeriodQuery, length: f64, samples: usize) -> Result<PulseProfile> {
    let t = period_t(q)?;
    if (t - length).abs() > 1e-8 * length.max(1.0) {
        return Err(Error::Domain(format!("period {t} does not match length {length}")));
    }
    let prof = LevelProfile::new(q.level(), q.p)?;
    let n = samples.max(2);
    let mut z = Vec::with_capacity(n + 1);
    let mut u = Vec::with_capacity(n + 1);
    let mut v = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let zi = length * i as f64 / n as f64;
        let (ui, vi) = if i == 0 {
            (prof.top, 0.0)
        } else if i == n {
            (q.value, -q.slope)
        } else {
            prof.eval(zi, q.value)
        };
        z.push(zi);
        u.push(ui);
        v.push(vi);
    }
    Ok(PulseProfile { z, u, v, p: q.p, beta: q.level() })
}

/// Single-pulse state of the tadpole in normalized variables: a symmetric
/// pulse on the loop `[−εℓ, εℓ]` and the tail `sech^{1/p}(p(z + a))`.
#[derive(Debug, Clone, Copy)]
pub struct TadpoleProfile {
    pub eps: f64,
    pub p: f64,
    pub half_length: f64,
    pub vertex_value: f64,
    pub shift: f64,
    pub loop_profile: LevelProfile,
}

impl TadpoleProfile {
    pub fn new(eps: f64, p: f64, half_length: f64) -> Result<Self> {
        let val = tadpole_root(eps, p, half_length)?;
        let q = PeriodQuery::new(val, 0.5 * a_fn(val, p).sqrt(), p);
        let loop_profile = LevelProfile::new(q.level(), p)?;
        // sech(p a) = 𝔭^p
        let shift = (1.0 / val.powf(p)).acosh() / p;
        Ok(TadpoleProfile { eps, p, half_length, vertex_value: val, shift, loop_profile })
    }

    /// Normalized loop value at signed distance `z` from the loop midpoint.
    pub fn loop_u(&self, z: f64) -> (f64, f64) {
        let (u, v) = self.loop_profile.eval(z.abs(), self.vertex_value);
        (u, if z < 0.0 { -v } else { v })
    }

    /// Normalized tail value at `z ≥ 0`.
    pub fn tail_u(&self, z: f64) -> (f64, f64) {
        let y = self.p * (z + self.shift);
        let s = 1.0 / y.cosh();
        let u = s.powf(1.0 / self.p);
        (u, -u * y.tanh())
    }

    /// Flux residual `u₁′(εℓ) − u₁′(−εℓ) − u₀′(0)`.
    pub fn flux_residual(&self) -> f64 {
        let right = -self.loop_profile.slope_at(self.vertex_value);
        let left = -right;
        let (_, tail) = self.tail_u(0.0);
        right - left - tail
    }

    /// Physical profile on a loop coordinate `x ∈ [0, 2ℓ]`.
    pub fn loop_phi(&self, x: f64) -> f64 {
        self.eps.powf(1.0 / self.p) * self.loop_u(self.eps * (x - self.half_length)).0
    }

    /// Physical profile on the half-line.
    pub fn tail_phi(&self, x: f64) -> f64 {
        self.eps.powf(1.0 / self.p) * self.tail_u(self.eps * x).0
    }
}
