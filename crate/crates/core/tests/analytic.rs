use std::f64::consts::{FRAC_1_SQRT_2, PI};

use graphwave::analytic::*;
use graphwave::elliptic::{elliptic_k, jacobi};
use proptest::prelude::*;

/// Sixth-order central second difference.
fn d2(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let c = [-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
    let mut s = c[0] * f(x);
    for (j, cj) in c.iter().enumerate().skip(1) {
        let jh = j as f64 * h;
        s += cj * (f(x + jh) + f(x - jh));
    }
    s / (h * h)
}

/// Trapezoid rule on a wide uniform grid; spectrally accurate for sech-type integrands.
fn trapezoid_line(f: impl Fn(f64) -> f64, half_width: f64, n: usize) -> f64 {
    let h = 2.0 * half_width / n as f64;
    (0..=n)
        .map(|i| {
            let x = -half_width + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * f(x)
        })
        .sum::<f64>()
        * h
}

#[test]
fn soliton_formula_values() {
    let s = SolitonParams::new(-1.0, 1.0).unwrap();
    assert_eq!(nls_soliton(s, 0.0), 1.0);
    let s = SolitonParams::new(-4.0, 1.0).unwrap();
    assert!((nls_soliton(s, 0.0) - 2.0).abs() < 1e-15);
    assert!(SolitonParams::new(1.0, 1.0).is_err());
}

#[test]
fn soliton_solves_stationary_equation() {
    for &(omega, p) in &[(-1.0, 1.0), (-2.5, 1.0), (-1.0, 2.0), (-0.7, 0.5), (-3.0, 1.5)] {
        let s = SolitonParams::new(omega, p).unwrap();
        let e = (-omega).sqrt();
        let amp = (-omega).powf(0.5 / p);
        // hand-differentiated A sech^{1/p}(p e x)
        let second = |x: f64| {
            let y = p * e * x;
            let sh = 1.0 / y.cosh();
            amp * e * e * sh.powf(1.0 / p) * (y.tanh().powi(2) - p * sh * sh)
        };
        let mut worst = 0.0f64;
        for i in -60..=60 {
            let x = i as f64 * 0.1;
            let phi = nls_soliton(s, x);
            let r = -second(x) - (p + 1.0) * phi.powf(2.0 * p + 1.0) - omega * phi;
            let fd = -d2(&|x| nls_soliton(s, x), x, 1e-2) - (p + 1.0) * phi.powf(2.0 * p + 1.0) - omega * phi;
            assert!(fd.abs() < 1e-8);
            assert!((nls_soliton_second(s, x) - second(x)).abs() < 1e-10);
            worst = worst.max(r.abs());
        }
        assert!(worst <= 1e-10, "ω={omega} p={p}: residual {worst}");
    }
}

#[test]
fn soliton_mass_matches_quadrature_oracle() {
    // ∫ sech² = 2 and ∫ sech(2x) dx = π/2.
    let c1 = trapezoid_line(|x| 1.0 / x.cosh().powi(2), 40.0, 8000);
    let c2 = trapezoid_line(|x| 1.0 / (2.0 * x).cosh(), 40.0, 8000);
    assert!((c1 - 2.0).abs() < 1e-12);
    assert!((c2 - PI / 2.0).abs() < 1e-12);
    assert!((c_p(1.0) - c1).abs() < 1e-12);
    assert!((c_p(2.0) - c2).abs() < 1e-12);
    let s = SolitonParams::new(-1.0, 1.0).unwrap();
    assert!((soliton_mass(s) - 2.0).abs() < 1e-12);
    for omega in [-0.3, -1.0, -7.0] {
        let s = SolitonParams::new(omega, 2.0).unwrap();
        assert!((soliton_mass(s) - PI / 2.0).abs() < 1e-12);
        let direct = trapezoid_line(|x| nls_soliton(s, x).powi(2), 60.0 / (-omega).sqrt(), 20000);
        assert!((direct - PI / 2.0).abs() < 1e-10);
    }
    // general p against direct quadrature of φ²
    let s = SolitonParams::new(-2.0, 0.75).unwrap();
    let direct = trapezoid_line(|x| nls_soliton(s, x).powi(2), 60.0, 40000);
    assert!((soliton_mass(s) - direct).abs() < 1e-10 * direct);
}

#[test]
fn soliton_energy_matches_quadrature_oracle() {
    let s = SolitonParams::new(-1.0, 1.0).unwrap();
    let h = 1e-3;
    let kin = trapezoid_line(
        |x| ((nls_soliton(s, x + h) - nls_soliton(s, x - h)) / (2.0 * h)).powi(2),
        30.0,
        60000,
    );
    let pot = trapezoid_line(|x| nls_soliton(s, x).powi(4), 30.0, 60000);
    let oracle = kin - pot;
    assert!((soliton_energy(s) - oracle).abs() < 1e-6);
    // exact: −(2/3)|ω|^{3/2}
    assert!((soliton_energy(s) + 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn half_line_critical_mass() {
    let s = SolitonParams::new(-1.3, 2.0).unwrap();
    let half = 0.5 * trapezoid_line(|x| nls_soliton(s, x).powi(2), 60.0, 40000);
    assert!((half - PI / 4.0).abs() < 1e-6);
}

#[test]
fn mass_decreasing_in_omega_iff_subcritical() {
    for &p in &[0.5, 1.0, 1.5, 2.0] {
        let m = |w: f64| soliton_mass(SolitonParams::new(w, p).unwrap());
        for &w in &[-4.0, -1.0, -0.25] {
            let d = (m(w + 1e-4) - m(w - 1e-4)) / 2e-4;
            if p < 2.0 {
                assert!(d < 0.0, "p={p} ω={w} slope {d}");
            } else {
                assert!(d.abs() < 1e-8);
            }
        }
    }
}

#[test]
fn jacobi_degenerate_moduli() {
    for &z in &[-2.0, -0.3, 0.0, 0.7, 3.1] {
        let (sn, cn, dn) = jacobi(z, 0.0).unwrap();
        assert!((sn - f64::sin(z)).abs() < 1e-15 && (cn - f64::cos(z)).abs() < 1e-15 && dn == 1.0);
        let (sn, cn, dn) = jacobi(z, 1.0).unwrap();
        let s = 1.0 / f64::cosh(z);
        assert!((sn - f64::tanh(z)).abs() < 1e-15 && (cn - s).abs() < 1e-15 && (dn - s).abs() < 1e-15);
    }
    assert!(jacobi(0.1, 1.2).is_err());
    assert!(jacobi(0.1, -0.1).is_err());
}

#[test]
fn jacobi_quarter_period() {
    let k = 0.5;
    let kk = elliptic_k(k).unwrap();
    let (sn, cn, dn) = jacobi(kk, k).unwrap();
    assert!((sn - 1.0).abs() < 1e-12);
    assert!(cn.abs() < 1e-12);
    assert!((dn - (1.0f64 - k * k).sqrt()).abs() < 1e-12);
    // K(0) = π/2
    assert!((elliptic_k(0.0).unwrap() - PI / 2.0).abs() < 1e-15);
}

/// Jacobi functions for any real modulus by RK4 integration of
/// sn′ = cn dn, cn′ = −sn dn, dn′ = −m sn cn.
fn jacobi_ode(z: f64, m: f64) -> (f64, f64, f64) {
    let steps = ((z.abs() / 1e-3).ceil() as usize).max(1);
    let h = z / steps as f64;
    let f = |y: [f64; 3]| [y[1] * y[2], -y[0] * y[2], -m * y[0] * y[1]];
    let mut y = [0.0, 1.0, 1.0];
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1], y[2] + 0.5 * h * k1[2]]);
        let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1], y[2] + 0.5 * h * k2[2]]);
        let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1], y[2] + h * k3[2]]);
        for i in 0..3 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    (y[0], y[1], y[2])
}

#[test]
fn jacobi_real_transformation() {
    for &k in &[0.3, 0.6, 0.9, 0.99] {
        for &x in &[0.2, 1.0, 2.5, 4.0] {
            let (_, _, dn) = jacobi(x, k).unwrap();
            let (_, cn_recip, _) = jacobi_ode(k * x, 1.0 / (k * k));
            assert!((dn - cn_recip).abs() < 1e-10, "k={k} x={x}: {dn} vs {cn_recip}");
            let (sn, cn, dn2) = jacobi_ode(x, k * k);
            let (a, b, c) = jacobi(x, k).unwrap();
            assert!((a - sn).abs() < 1e-10 && (b - cn).abs() < 1e-10 && (c - dn2).abs() < 1e-10);
        }
    }
}

proptest! {
    #[test]
    fn jacobi_identities(z in -20.0f64..20.0, k in 0.0f64..1.0) {
        let (sn, cn, dn) = jacobi(z, k).unwrap();
        prop_assert!((sn * sn + cn * cn - 1.0).abs() < 1e-12);
        prop_assert!((dn * dn + k * k * sn * sn - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dnoidal_level_is_conserved(k in 0.05f64..0.999, z in 0.0f64..10.0) {
        let u = dnoidal(k, z).unwrap();
        let v = dnoidal_prime(k, z).unwrap();
        let beta = dnoidal_beta(k).unwrap();
        prop_assert!((LevelCurve::invariant(1.0, u, v) - beta).abs() < 1e-10);
    }

    #[test]
    fn cnoidal_level_is_conserved(k in 0.71f64..1.0, z in 0.0f64..10.0) {
        let u = cnoidal(k, z).unwrap();
        let v = cnoidal_prime(k, z).unwrap();
        let beta = cnoidal_beta(k).unwrap();
        prop_assert!((LevelCurve::invariant(1.0, u, v) - beta).abs() < 1e-10);
    }
}

#[test]
fn elliptic_profiles_solve_normalized_ode() {
    for &k in &[0.2, 0.5, 0.8, 0.95] {
        let f = |z: f64| dnoidal(k, z).unwrap();
        for i in 0..50 {
            let z = i as f64 * 0.2;
            let u = f(z);
            let r = -d2(&f, z, 1e-2) + u - 2.0 * u * u * u;
            assert!(r.abs() <= 1e-8, "dnoidal k={k} z={z}: {r}");
        }
    }
    for &k in &[0.75, 0.85, 0.95, 1.0] {
        let f = |z: f64| cnoidal(k, z).unwrap();
        for i in 0..50 {
            let z = i as f64 * 0.2;
            let u = f(z);
            let r = -d2(&f, z, 1e-2) + u - 2.0 * u * u * u;
            assert!(r.abs() <= 1e-8, "cnoidal k={k} z={z}: {r}");
        }
    }
}

#[test]
fn elliptic_levels() {
    for i in 1..100 {
        let k = i as f64 / 100.0;
        let b = dnoidal_beta(k).unwrap();
        assert!(b > -0.25 && b < 0.0);
        let d = 2.0 - k * k;
        assert!((b - (k * k - 1.0) / (d * d)).abs() < 1e-12);
    }
    for i in 1..30 {
        let k = FRAC_1_SQRT_2 + i as f64 * (1.0 - FRAC_1_SQRT_2) / 30.0;
        let b = cnoidal_beta(k).unwrap();
        assert!(b >= 0.0);
    }
    assert!(dnoidal(1.0, 0.0).is_err());
    assert!(cnoidal(0.7, 0.0).is_err());
}

#[test]
fn elliptic_profiles_reduce_to_sech() {
    // convergence is pointwise: the gap grows like (1−k²)e^{2z}
    let k = 1.0 - 1e-9;
    for &z in &[0.0, 0.5, 1.0, 1.5, 2.0] {
        let s = 1.0 / f64::cosh(z);
        assert!((dnoidal(k, z).unwrap() - s).abs() <= 1e-8);
        assert!((cnoidal(k, z).unwrap() - s).abs() <= 1e-8);
    }
}

#[test]
fn level_curve_algebra() {
    assert!((beta_min(1.0) + 0.25).abs() < 1e-15);
    assert!((constant_state(1.0) - FRAC_1_SQRT_2).abs() < 1e-15);
    let tp = |b: f64, p: f64| turning_point(LevelCurve::new(b, p).unwrap()).unwrap();
    assert!((tp(0.0, 1.0) - 1.0).abs() < 1e-15);
    assert!((tp(-0.25, 1.0) - FRAC_1_SQRT_2).abs() < 1e-12);
    assert!((tp(-3.0 / 16.0, 1.0) - 3f64.sqrt() / 2.0).abs() < 1e-15);
    assert!(LevelCurve::new(-0.3, 1.0).is_err());
    // general p: root of β + A
    for &p in &[0.5, 1.5, 2.0] {
        for &b in &[beta_min(p) * 0.5, 0.0, 0.7] {
            let u = tp(b, p);
            assert!((b + a_fn(u, p)).abs() < 1e-13, "p={p} β={b}");
            assert!(u >= constant_state(p));
        }
    }
}
