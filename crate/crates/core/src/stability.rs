//! Orbital stability verdicts from the Morse index of `L₊`, the kernel of
//! `L₋` and the sign of the slope `dμ/dω`, plus the closed-form table for
//! bound states of the δ star.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{
    assemble_linearization, kernel_dim, linearization_scale, lowest_eigenvalues, morse_index, SymmetricOperator, ZERO_BAND,
};
use crate::solver::{check_off_spectrum, slope_at, Branch, SlopeEstimate, StandingWave};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SlopeSign {
    Negative,
    Zero,
    Positive,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub omega: f64,
    pub mass: f64,
    pub n_lplus: usize,
    pub z_lplus: usize,
    pub n_lminus: usize,
    pub z_lminus: usize,
    pub slope: SlopeEstimate,
    pub slope_sign: SlopeSign,
    pub verdict: Verdict,
    /// `⟨L₊Φ, Φ⟩`, negative for every positive wave.
    pub lplus_form: f64,
    /// Lowest eigenvalues of `L₊` and `L₋`.
    pub lplus_head: Vec<f64>,
    pub lminus_head: Vec<f64>,
    /// Zero-band half-width used for the counts, relative to the scale
    /// `|ω| + (2p+1)(p+1)‖Φ‖∞^{2p}` of the low spectrum.
    pub tol: f64,
    pub notes: Vec<String>,
}

impl StabilityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Where the slope comes from.
#[derive(Debug, Clone, Copy)]
pub enum SlopeSource<'a> {
    /// Finite differences along a continuation through the wave.
    Branch(&'a Branch),
    /// A precomputed estimate.
    Given(SlopeEstimate),
    /// Centered Newton solves at `ω ± d`, `ω ± 2d` with `d = 1e−3 (1 + |ω|)`.
    Local,
}

fn head(op: &SymmetricOperator, k: usize, tol: f64) -> Result<Vec<f64>> {
    Ok(lowest_eigenvalues(op, k, Some(tol))?.eigenvalues)
}

/// Classify `wave`, which must be a converged positive standing wave with
/// frequency off the linear spectrum.
pub fn stability_report(wave: &StandingWave, source: SlopeSource<'_>) -> Result<StabilityReport> {
    let sup = wave.sup_norm();
    if !(sup > 0.0) {
        return Err(Error::Domain("stability of the zero state is not defined".into()));
    }
    if wave.u.iter().any(|&x| x < -1e-8 * sup) {
        return Err(Error::Domain("stability criterion needs a positive wave".into()));
    }
    if wave.residual > 1e-8 * (1.0 + sup) {
        return Err(Error::Domain(format!("wave residual {:.3e} is not converged", wave.residual)));
    }
    check_off_spectrum(&wave.disc, wave.omega)?;

    let (lp, lm) = assemble_linearization(&wave.disc, &wave.u, wave.omega, wave.p)?;
    let tol = ZERO_BAND * linearization_scale(&wave.u, wave.omega, wave.p);
    let n_lplus = morse_index(&lp, Some(tol))?;
    let z_lplus = kernel_dim(&lp, Some(tol))?;
    let n_lminus = morse_index(&lm, Some(tol))?;
    let z_lminus = kernel_dim(&lm, Some(tol))?;
    let lplus_form: f64 = lp.stiffness.matvec(&wave.u).iter().zip(&wave.u).map(|(a, b)| a * b).sum();
    let mut notes = Vec::new();

    let slope = match source {
        SlopeSource::Given(s) => s,
        SlopeSource::Local => slope_at(wave, 1e-3 * (1.0 + wave.omega.abs()))?,
        SlopeSource::Branch(br) => {
            let s = br.slope(wave.omega)?;
            let at = br.points[br.nearest(wave.omega).unwrap()].wave.omega;
            if (at - wave.omega).abs() > 1e-6 * (1.0 + wave.omega.abs()) {
                notes.push(format!("slope read at branch point ω = {at}, not at the wave"));
            }
            s
        }
    };
    if slope.one_sided {
        notes.push("slope estimate is one-sided (branch end)".into());
    }
    let band = 1e-3 * wave.mass / wave.omega.abs();
    let slope_sign = if slope.value.abs() < band || slope.value.abs() <= slope.error {
        SlopeSign::Zero
    } else if slope.value < 0.0 {
        SlopeSign::Negative
    } else {
        SlopeSign::Positive
    };

    if lplus_form >= 0.0 {
        notes.push(format!("⟨L₊Φ, Φ⟩ = {lplus_form:.3e} is not negative"));
    }
    if z_lplus > 0 {
        notes.push(format!("L₊ has {z_lplus} eigenvalue(s) in the zero band |λ| ≤ {tol:.3e}"));
    }
    if z_lminus != 1 {
        notes.push(format!("L₋ kernel dimension {z_lminus}, expected 1"));
    }
    if n_lminus > 0 {
        notes.push(format!("L₋ has {n_lminus} negative eigenvalue(s)"));
    }
    let regular = z_lplus == 0 && z_lminus == 1 && n_lminus == 0;
    let verdict = if n_lplus >= 2 {
        Verdict::Unstable
    } else if n_lplus == 1 && regular {
        match slope_sign {
            SlopeSign::Negative => Verdict::Stable,
            SlopeSign::Positive => Verdict::Unstable,
            SlopeSign::Zero => {
                notes.push("slope within the zero band".into());
                Verdict::Inconclusive
            }
        }
    } else {
        if n_lplus == 0 {
            notes.push("L₊ has no negative eigenvalue".into());
        }
        Verdict::Inconclusive
    };

    Ok(StabilityReport {
        omega: wave.omega,
        mass: wave.mass,
        n_lplus,
        z_lplus,
        n_lminus,
        z_lminus,
        slope,
        slope_sign,
        verdict,
        lplus_form,
        lplus_head: head(&lp, n_lplus + z_lplus + 2, tol)?,
        lminus_head: head(&lm, n_lminus + z_lminus + 1, tol)?,
        tol,
        notes,
    })
}

/// Closed-form spectral data of the δ-star bound state with `j` bumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StarReference {
    pub n_lplus: usize,
    pub z_lplus: usize,
    pub n_lminus: usize,
    pub z_lminus: usize,
    pub verdict: Verdict,
}

/// Reference counts for the star with `n` half-lines and a δ vertex of
/// strength `alpha ≠ 0`. With `α < 0` the state has `j` bumps, with `α > 0`
/// it has `j` tails.
pub fn star_reference(n: usize, alpha: f64, j: usize, omega: f64) -> Result<StarReference> {
    if n < 2 {
        return Err(Error::Domain("star needs at least two edges".into()));
    }
    if 2 * j + 1 > n {
        return Err(Error::Domain(format!("j = {j} exceeds (N−1)/2")));
    }
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::Domain("reference table needs a finite nonzero α".into()));
    }
    let threshold = -alpha * alpha / ((n - 2 * j) * (n - 2 * j)) as f64;
    if !(omega < threshold) {
        return Err(Error::Domain(format!("ω = {omega} must lie below {threshold}")));
    }
    let n_lplus = if alpha < 0.0 { j + 1 } else { n - j };
    let verdict = if alpha < 0.0 && j == 0 { Verdict::Stable } else { Verdict::Unstable };
    Ok(StarReference { n_lplus, z_lplus: 0, n_lminus: 0, z_lminus: 1, verdict })
}
