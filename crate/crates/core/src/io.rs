//! Line-oriented text format for graphs.
//!
//! ```text
//! # tadpole
//! vertex v nk
//! edge loop0 v v 6.283185307179586
//! edge tail v inf inf nonlinear=1
//! ```
//!
//! Vertex conditions: `nk`, `delta <α>`, `delta-prime <β>`, `gk <w…>` (one
//! weight per incident edge end). Edge options: `nonlinear=0|1`,
//! `potential=<constant>`. Blank lines and text after `#` are ignored.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Edge, MetricGraph, Potential, VertexCondition};

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn number(line: usize, tok: &str, what: &str) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| err(line, format!("{what}: `{tok}` is not a number")))?;
    if !v.is_finite() {
        return Err(err(line, format!("{what}: `{tok}` is not finite")));
    }
    Ok(v)
}

fn condition(line: usize, kind: &str, params: &[&str]) -> Result<VertexCondition> {
    let one = |what: &str| -> Result<f64> {
        match params {
            [x] => number(line, x, what),
            _ => Err(err(line, format!("`{kind}` takes exactly one parameter"))),
        }
    };
    match kind {
        "nk" | "kirchhoff" => {
            if !params.is_empty() {
                return Err(err(line, "`nk` takes no parameters"));
            }
            Ok(VertexCondition::NeumannKirchhoff)
        }
        "delta" => Ok(VertexCondition::Delta(one("δ strength")?)),
        "delta-prime" => Ok(VertexCondition::DeltaPrime(one("δ′ strength")?)),
        "gk" => {
            if params.is_empty() {
                return Err(err(line, "`gk` needs one weight per incident edge end"));
            }
            let w = params.iter().map(|t| number(line, t, "weight")).collect::<Result<Vec<_>>>()?;
            Ok(VertexCondition::GeneralizedKirchhoff(w))
        }
        other => Err(err(line, format!("unknown vertex condition `{other}`"))),
    }
}

/// Parse the text format. Structural checks (dangling references,
/// connectivity) are left to [`MetricGraph::validate`].
pub fn parse_graph(text: &str) -> Result<MetricGraph> {
    let mut g = MetricGraph::new();
    let mut vids = HashSet::new();
    let mut eids = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = content.split_whitespace().collect();
        match toks.as_slice() {
            [] => {}
            ["vertex", id, kind, params @ ..] => {
                if !vids.insert(id.to_string()) {
                    return Err(err(line, format!("duplicate vertex id `{id}`")));
                }
                g.add_vertex(id, condition(line, kind, params)?);
            }
            ["vertex", ..] => return Err(err(line, "expected `vertex <id> <condition> [param…]`")),
            ["edge", id, from, to, length, opts @ ..] => {
                if !eids.insert(id.to_string()) {
                    return Err(err(line, format!("duplicate edge id `{id}`")));
                }
                let mut e = match (*to, *length) {
                    ("inf", "inf") => Edge::half_line(id, from),
                    ("inf", _) | (_, "inf") => {
                        return Err(err(line, "an edge is unbounded exactly when both target and length are `inf`"))
                    }
                    (to, l) => Edge::bounded(id, from, to, number(line, l, "length")?),
                };
                for opt in opts {
                    match opt.split_once('=') {
                        Some(("nonlinear", "0")) => e.nonlinear = false,
                        Some(("nonlinear", "1")) => e.nonlinear = true,
                        Some(("potential", v)) => e.potential = Some(Potential::Constant(number(line, v, "potential")?)),
                        _ => return Err(err(line, format!("unknown edge option `{opt}`"))),
                    }
                }
                g.add_edge(e);
            }
            ["edge", ..] => return Err(err(line, "expected `edge <id> <from> <to|inf> <length|inf> [option…]`")),
            [other, ..] => return Err(err(line, format!("unknown record `{other}`"))),
        }
    }
    Ok(g)
}

pub fn parse_graph_file(path: impl AsRef<Path>) -> Result<MetricGraph> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_graph(&text)
}

/// Serialize in the text format; parsing the output gives back an equal graph.
/// Sampled potentials have no text form and are rejected.
pub fn emit_graph(g: &MetricGraph) -> Result<String> {
    let mut s = String::new();
    for v in &g.vertices {
        let _ = match &v.condition {
            VertexCondition::NeumannKirchhoff => writeln!(s, "vertex {} nk", v.id),
            VertexCondition::Delta(a) => writeln!(s, "vertex {} delta {a:?}", v.id),
            VertexCondition::DeltaPrime(b) => writeln!(s, "vertex {} delta-prime {b:?}", v.id),
            VertexCondition::GeneralizedKirchhoff(w) => {
                let ws: Vec<String> = w.iter().map(|x| format!("{x:?}")).collect();
                writeln!(s, "vertex {} gk {}", v.id, ws.join(" "))
            }
        };
    }
    for e in &g.edges {
        match &e.to {
            Some(to) => {
                let _ = write!(s, "edge {} {} {} {:?}", e.id, e.from, to, e.length);
            }
            None => {
                let _ = write!(s, "edge {} {} inf inf", e.id, e.from);
            }
        }
        let _ = write!(s, " nonlinear={}", u8::from(e.nonlinear));
        match &e.potential {
            None => {}
            Some(Potential::Constant(c)) => {
                let _ = write!(s, " potential={c:?}");
            }
            Some(Potential::Sampled { .. }) => {
                return Err(Error::Domain(format!("edge `{}` has a sampled potential with no text form", e.id)))
            }
        }
        s.push('\n');
    }
    Ok(s)
}
