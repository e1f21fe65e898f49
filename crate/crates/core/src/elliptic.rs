//! Jacobi elliptic functions and the complete integral of the first kind,
//! by the arithmetic-geometric mean with descending Landen transformations.

use crate::error::{Error, Result};

/// Below this complementary distance `1 − k` the hyperbolic expansion is used.
const NEAR_ONE: f64 = 1e-12;

fn check_modulus(k: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::Domain(format!("elliptic modulus {k} outside [0, 1]")));
    }
    Ok(())
}

/// `(sn, cn, dn)` of argument `z` and modulus `k ∈ [0, 1]`.
pub fn jacobi(z: f64, k: f64) -> Result<(f64, f64, f64)> {
    check_modulus(k)?;
    if k == 0.0 {
        return Ok((z.sin(), z.cos(), 1.0));
    }
    if 1.0 - k < NEAR_ONE {
        let kp2 = (1.0 - k) * (1.0 + k);
        let (t, s) = (z.tanh(), 1.0 / z.cosh());
        let sc = z.sinh() * z.cosh();
        let sn = t + 0.25 * kp2 * (sc - z) * s * s;
        let cn = s - 0.25 * kp2 * (sc - z) * t * s;
        let dn = s + 0.25 * kp2 * (sc + z) * t * s;
        return Ok((sn, cn, dn));
    }
    let kp2 = (1.0 - k) * (1.0 + k);
    let kp = kp2.sqrt();
    // sn and cn have real period 4K; reducing keeps the Landen angles small
    let period = 4.0 * elliptic_k(k)?;
    let z = z - period * (z / period).round();
    let mut a = vec![1.0f64];
    let mut c = vec![k];
    let mut b = kp;
    while c.last().unwrap().abs() > f64::EPSILON * a.last().unwrap() && a.len() < 40 {
        let an = *a.last().unwrap();
        let a1 = 0.5 * (an + b);
        let c1 = 0.5 * (an - b);
        b = (an * b).sqrt();
        a.push(a1);
        c.push(c1);
    }
    let n = a.len() - 1;
    let mut phi = 2f64.powi(n as i32) * a[n] * z;
    let mut prev = phi;
    for j in (1..=n).rev() {
        prev = phi;
        phi = 0.5 * (phi + (c[j] / a[j] * phi.sin()).asin());
    }
    let sn = phi.sin();
    let cn = phi.cos();
    let dn = if kp2 >= 0.25 {
        (1.0 - k * k * sn * sn).sqrt()
    } else if n >= 1 {
        let r = (prev - phi).cos();
        if r.abs() > 1e-3 {
            cn / r
        } else {
            (1.0 - k * k * sn * sn).max(0.0).sqrt()
        }
    } else {
        (1.0 - k * k * sn * sn).sqrt()
    };
    Ok((sn, cn, dn))
}

/// Complete elliptic integral `K(k) = π / (2 AGM(1, √(1−k²)))`.
pub fn elliptic_k(k: f64) -> Result<f64> {
    check_modulus(k)?;
    if k == 1.0 {
        return Ok(f64::INFINITY);
    }
    let mut a = 1.0f64;
    let mut b = ((1.0 - k) * (1.0 + k)).sqrt();
    for _ in 0..60 {
        if (a - b).abs() <= f64::EPSILON * a {
            break;
        }
        let a1 = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = a1;
    }
    Ok(std::f64::consts::FRAC_PI_2 / a)
}
