//! Norms, mass, energy and Gagliardo–Nirenberg quotients of sampled graph functions.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::function::GraphFunction;
use crate::graph::{End, MetricGraph, VertexCondition};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    Lp(f64),
    Linf,
    H1,
}

fn check_power(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 2.0) {
        return Err(Error::Domain(format!("nonlinearity power {p} outside (0, 2]")));
    }
    Ok(())
}

/// `Σ_e ∫ |f_e|^q` by the composite trapezoid rule.
fn lp_sum(f: &GraphFunction, q: f64) -> f64 {
    f.edges
        .iter()
        .map(|e| e.values.iter().enumerate().map(|(i, z)| e.weight(i) * z.norm().powf(q)).sum::<f64>())
        .sum()
}

fn kinetic(f: &GraphFunction) -> f64 {
    f.edges
        .iter()
        .map(|e| e.derivative().iter().enumerate().map(|(i, z)| e.weight(i) * z.norm_sqr()).sum::<f64>())
        .sum()
}

pub fn norm(f: &GraphFunction, kind: NormKind) -> Result<f64> {
    match kind {
        NormKind::Lp(q) => {
            if !(q >= 1.0) {
                return Err(Error::Domain(format!("Lp exponent {q} below 1")));
            }
            Ok(lp_sum(f, q).powf(1.0 / q))
        }
        NormKind::Linf => Ok(f.sup_norm()),
        NormKind::H1 => Ok((lp_sum(f, 2.0) + kinetic(f)).sqrt()),
    }
}

pub fn mass(f: &GraphFunction) -> f64 {
    lp_sum(f, 2.0)
}

fn check_layout(f: &GraphFunction, g: &MetricGraph) -> Result<()> {
    if f.edges.len() != g.edges.len() || f.edges.iter().zip(&g.edges).any(|(s, e)| s.edge_id != e.id) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

fn end_value(f: &GraphFunction, edge: usize, end: End) -> Complex64 {
    let v = &f.edges[edge].values;
    match end {
        End::Start => v[0],
        End::Finish => v[v.len() - 1],
    }
}

/// `‖f′‖² + ⟨f, V f⟩ + Σ α_v |f(v)|² + Σ β_v⁻¹ |Σ_e f_e(v)|² − ∫_{nonlinear edges} |f|^{2p+2}`.
///
/// Vertex values at continuous vertices are averaged over the incident ends.
pub fn energy(f: &GraphFunction, g: &MetricGraph, p: f64) -> Result<f64> {
    check_power(p)?;
    check_layout(f, g)?;
    let mut e = kinetic(f);
    for (s, edge) in f.edges.iter().zip(&g.edges) {
        if let Some(v) = &edge.potential {
            e += s.values.iter().enumerate().map(|(i, z)| s.weight(i) * v.eval(s.x(i)) * z.norm_sqr()).sum::<f64>();
        }
        if edge.nonlinear {
            e -= s.values.iter().enumerate().map(|(i, z)| s.weight(i) * z.norm().powf(2.0 * p + 2.0)).sum::<f64>();
        }
    }
    for (v, vert) in g.vertices.iter().enumerate() {
        let inc = g.incidences(v);
        match &vert.condition {
            VertexCondition::Delta(alpha) if *alpha != 0.0 => {
                let avg = inc.iter().map(|ee| end_value(f, ee.edge, ee.end)).sum::<Complex64>() / inc.len() as f64;
                e += alpha * avg.norm_sqr();
            }
            VertexCondition::DeltaPrime(beta) => {
                let sum: Complex64 = inc.iter().map(|ee| end_value(f, ee.edge, ee.end)).sum();
                e += sum.norm_sqr() / beta;
            }
            _ => {}
        }
    }
    Ok(e)
}

/// Which Gagliardo–Nirenberg right side to divide by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GnForm {
    /// `‖f‖₂^{1/2+1/q} ‖f′‖₂^{1/2−1/q}`, valid only on non-compact graphs.
    Derivative,
    /// `‖f‖₂^{1/2+1/q} ‖f‖_{H¹}^{1/2−1/q}`, valid on every graph.
    Full,
}

/// Quotient `‖f‖_q / RHS`; its supremum over test functions estimates `C_q`.
pub fn gn_check(f: &GraphFunction, g: &MetricGraph, q: f64, form: GnForm) -> Result<f64> {
    if !(q >= 2.0) {
        return Err(Error::Domain(format!("GN exponent {q} below 2")));
    }
    if form == GnForm::Derivative && g.is_compact() {
        return Err(Error::Domain("derivative form of the GN inequality fails on compact graphs".into()));
    }
    let l2 = norm(f, NormKind::Lp(2.0))?;
    if l2 == 0.0 {
        return Err(Error::Domain("GN quotient of the zero function".into()));
    }
    let lq = norm(f, NormKind::Lp(q))?;
    let second = match form {
        GnForm::Derivative => kinetic(f).sqrt(),
        GnForm::Full => norm(f, NormKind::H1)?,
    };
    if second == 0.0 {
        return Err(Error::Domain("GN quotient undefined for a constant function".into()));
    }
    Ok(lq / (l2.powf(0.5 + 1.0 / q) * second.powf(0.5 - 1.0 / q)))
}
