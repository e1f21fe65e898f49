//! Functions sampled on per-edge uniform grids.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSamples {
    pub edge_id: String,
    /// Grid spacing.
    pub h: f64,
    /// Values at `x_i = i h`, `i = 0..=n`; the last node sits on the far
    /// vertex, or on the truncation point for unbounded edges.
    pub values: Vec<Complex64>,
    /// Set for unbounded edges cut at `h * n`.
    pub truncated: bool,
}

impl EdgeSamples {
    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    pub fn length(&self) -> f64 {
        self.h * self.intervals() as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.h * i as f64
    }

    /// Trapezoid weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.intervals() {
            0.5 * self.h
        } else {
            self.h
        }
    }

    /// Second-order derivative samples: centered inside, one-sided at the ends.
    pub fn derivative(&self) -> Vec<Complex64> {
        let v = &self.values;
        let n = v.len();
        let h = self.h;
        let mut d = vec![Complex64::new(0.0, 0.0); n];
        if n < 3 {
            if n == 2 {
                let s = (v[1] - v[0]) / h;
                d[0] = s;
                d[1] = s;
            }
            return d;
        }
        for i in 1..n - 1 {
            d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
        }
        d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
        d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphFunction {
    pub edges: Vec<EdgeSamples>,
}

impl GraphFunction {
    pub fn same_grid(&self, other: &GraphFunction) -> bool {
        self.edges.len() == other.edges.len()
            && self
                .edges
                .iter()
                .zip(&other.edges)
                .all(|(a, b)| a.values.len() == b.values.len() && (a.h - b.h).abs() <= 1e-14 * a.h)
    }

    pub fn check_grid(&self, other: &GraphFunction) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn zeros_like(&self) -> GraphFunction {
        self.map(|_| Complex64::new(0.0, 0.0))
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> GraphFunction {
        GraphFunction {
            edges: self
                .edges
                .iter()
                .map(|e| EdgeSamples { values: e.values.iter().map(|&z| f(z)).collect(), ..e.clone() })
                .collect(),
        }
    }

    /// Pointwise map with access to (edge index, coordinate).
    pub fn map_with_coords(&self, f: impl Fn(usize, f64, Complex64) -> Complex64) -> GraphFunction {
        GraphFunction {
            edges: self
                .edges
                .iter()
                .enumerate()
                .map(|(k, e)| EdgeSamples {
                    values: e.values.iter().enumerate().map(|(i, &z)| f(k, e.x(i), z)).collect(),
                    ..e.clone()
                })
                .collect(),
        }
    }

    pub fn zip_with(
        &self,
        other: &GraphFunction,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<GraphFunction> {
        self.check_grid(other)?;
        Ok(GraphFunction {
            edges: self
                .edges
                .iter()
                .zip(&other.edges)
                .map(|(a, b)| EdgeSamples {
                    values: a.values.iter().zip(&b.values).map(|(&x, &y)| f(x, y)).collect(),
                    ..a.clone()
                })
                .collect(),
        })
    }

    pub fn scale(&self, c: Complex64) -> GraphFunction {
        self.map(|z| z * c)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.edges.iter().all(|e| e.values.iter().all(|z| z.im.abs() <= tol))
    }

    pub fn sup_norm(&self) -> f64 {
        self.edges
            .iter()
            .flat_map(|e| e.values.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Real parts per edge.
    pub fn real_parts(&self) -> Vec<Vec<f64>> {
        self.edges.iter().map(|e| e.values.iter().map(|z| z.re).collect()).collect()
    }

    /// CSV with columns `edge,x,re,im`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("edge,x,re,im\n");
        for e in &self.edges {
            for (i, z) in e.values.iter().enumerate() {
                let _ = writeln!(s, "{},{:.12e},{:.16e},{:.16e}", e.edge_id, e.x(i), z.re, z.im);
            }
        }
        s
    }
}
