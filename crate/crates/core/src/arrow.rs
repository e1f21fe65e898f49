//! Symmetric "arrowhead" matrices: independent tridiagonal chains (edge
//! interiors) coupled through a small dense border (vertex unknowns).
//!
//! Unknowns are ordered chain by chain, then the border. Each chain couples
//! to the border only through its first and last entries.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Scalars the block solver works with.
pub trait Scalar: ComplexField<RealField = f64> + Copy {
    fn from_f64(x: f64) -> Self;
    fn abs1(self) -> f64 {
        self.modulus()
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
}

impl Scalar for Complex64 {
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain<T> {
    pub start: usize,
    pub diag: Vec<T>,
    /// `off[i]` couples entries `i` and `i + 1`.
    pub off: Vec<T>,
    /// Coupling of the first entry to a border unknown.
    pub left: Option<(usize, T)>,
    /// Coupling of the last entry to a border unknown.
    pub right: Option<(usize, T)>,
}

impl<T: Scalar> Chain<T> {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrowMatrix<T> {
    pub chains: Vec<Chain<T>>,
    pub n_chain: usize,
    pub nb: usize,
    /// Dense border block, row-major `nb × nb`.
    pub border: Vec<T>,
}

impl<T: Scalar> ArrowMatrix<T> {
    /// Zero matrix with the given chain lengths and border size.
    pub fn zeros(chain_lens: &[usize], nb: usize) -> Self {
        let mut start = 0;
        let chains = chain_lens
            .iter()
            .map(|&n| {
                let c = Chain {
                    start,
                    diag: vec![T::zero(); n],
                    off: vec![T::zero(); n.saturating_sub(1)],
                    left: None,
                    right: None,
                };
                start += n;
                c
            })
            .collect();
        ArrowMatrix { chains, n_chain: start, nb, border: vec![T::zero(); nb * nb] }
    }

    pub fn dim(&self) -> usize {
        self.n_chain + self.nb
    }

    fn locate(&self, i: usize) -> Loc {
        if i >= self.n_chain {
            return Loc::Border(i - self.n_chain);
        }
        let c = self.chains.partition_point(|c| c.start + c.len() <= i);
        Loc::Chain(c, i - self.chains[c].start)
    }

    /// Add `v` to entries `(i, j)` and `(j, i)` (once when `i == j`).
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        match (self.locate(i), self.locate(j)) {
            (Loc::Border(a), Loc::Border(b)) => {
                self.border[a * self.nb + b] += v;
                if a != b {
                    self.border[b * self.nb + a] += v;
                }
            }
            (Loc::Chain(c, k), Loc::Chain(c2, k2)) => {
                assert_eq!(c, c2, "entries of different chains are not coupled");
                let ch = &mut self.chains[c];
                if k == k2 {
                    ch.diag[k] += v;
                } else {
                    assert_eq!(k.abs_diff(k2), 1, "chain entries must be adjacent");
                    ch.off[k.min(k2)] += v;
                }
            }
            (Loc::Chain(c, k), Loc::Border(b)) | (Loc::Border(b), Loc::Chain(c, k)) => {
                let ch = &mut self.chains[c];
                let last = ch.len() - 1;
                let slot = if k == 0 && ch.left.map_or(true, |(bb, _)| bb == b) {
                    &mut ch.left
                } else if k == last {
                    &mut ch.right
                } else {
                    panic!("border couples only to chain ends");
                };
                match slot {
                    Some((bb, val)) => {
                        assert_eq!(*bb, b, "chain end already coupled to another border entry");
                        *val += v;
                    }
                    None => *slot = Some((b, v)),
                }
            }
        }
    }

    pub fn add_diagonal(&mut self, d: &[T]) {
        assert_eq!(d.len(), self.dim());
        for ch in &mut self.chains {
            for (k, x) in ch.diag.iter_mut().enumerate() {
                *x += d[ch.start + k];
            }
        }
        for b in 0..self.nb {
            self.border[b * self.nb + b] += d[self.n_chain + b];
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        let mut d = Vec::with_capacity(self.dim());
        for ch in &self.chains {
            d.extend_from_slice(&ch.diag);
        }
        for b in 0..self.nb {
            d.push(self.border[b * self.nb + b]);
        }
        d
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> ArrowMatrix<U> {
        ArrowMatrix {
            chains: self
                .chains
                .iter()
                .map(|c| Chain {
                    start: c.start,
                    diag: c.diag.iter().map(|&x| f(x)).collect(),
                    off: c.off.iter().map(|&x| f(x)).collect(),
                    left: c.left.map(|(b, v)| (b, f(v))),
                    right: c.right.map(|(b, v)| (b, f(v))),
                })
                .collect(),
            n_chain: self.n_chain,
            nb: self.nb,
            border: self.border.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.dim()];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[T], y: &mut [T]) {
        let nc = self.n_chain;
        for v in y.iter_mut() {
            *v = T::zero();
        }
        for ch in &self.chains {
            let s = ch.start;
            let n = ch.len();
            for k in 0..n {
                let mut acc = ch.diag[k] * x[s + k];
                if k > 0 {
                    acc += ch.off[k - 1] * x[s + k - 1];
                }
                if k + 1 < n {
                    acc += ch.off[k] * x[s + k + 1];
                }
                y[s + k] = acc;
            }
            if let Some((b, v)) = ch.left {
                y[s] += v * x[nc + b];
                y[nc + b] += v * x[s];
            }
            if let Some((b, v)) = ch.right {
                y[s + n - 1] += v * x[nc + b];
                y[nc + b] += v * x[s + n - 1];
            }
        }
        for a in 0..self.nb {
            let mut acc = T::zero();
            for b in 0..self.nb {
                acc += self.border[a * self.nb + b] * x[nc + b];
            }
            y[nc + a] += acc;
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let d = self.dim();
        let mut rows = vec![0.0; d];
        let nc = self.n_chain;
        for ch in &self.chains {
            let s = ch.start;
            for k in 0..ch.len() {
                rows[s + k] += ch.diag[k].abs1();
                if k + 1 < ch.len() {
                    rows[s + k] += ch.off[k].abs1();
                    rows[s + k + 1] += ch.off[k].abs1();
                }
            }
            if let Some((b, v)) = ch.left {
                rows[s] += v.abs1();
                rows[nc + b] += v.abs1();
            }
            if let Some((b, v)) = ch.right {
                rows[s + ch.len() - 1] += v.abs1();
                rows[nc + b] += v.abs1();
            }
        }
        for a in 0..self.nb {
            for b in 0..self.nb {
                rows[nc + a] += self.border[a * self.nb + b].abs1();
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Dense copy, for tests and small problems.
    pub fn to_dense(&self) -> DMatrix<T> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        let mut e = vec![T::zero(); d];
        for j in 0..d {
            e[j] = T::one();
            let col = self.matvec(&e);
            for i in 0..d {
                m[(i, j)] = col[i];
            }
            e[j] = T::zero();
        }
        m
    }

    pub fn factor(&self) -> Result<ArrowLu<T>> {
        ArrowLu::new(self)
    }

    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        Ok(self.factor()?.solve(rhs))
    }
}

impl<T: Scalar> ArrowMatrix<T> {
    /// Move the chain entries `cuts` (chain, local index) into the border.
    /// Returns the reordered matrix and the map `perm[new] = old`.
    pub fn promote(&self, cuts: &[(usize, usize)]) -> (ArrowMatrix<T>, Vec<usize>) {
        let dim = self.dim();
        let mut new_of = vec![usize::MAX; dim];
        let mut lens = Vec::new();
        let mut next = 0usize;
        let mut promoted = Vec::new();
        for (c, ch) in self.chains.iter().enumerate() {
            let mut ks: Vec<usize> = cuts.iter().filter(|x| x.0 == c).map(|x| x.1).collect();
            ks.sort_unstable();
            ks.dedup();
            let mut seg = 0usize;
            for k in 0..ch.len() {
                if ks.binary_search(&k).is_ok() {
                    promoted.push(ch.start + k);
                    if seg > 0 {
                        lens.push(seg);
                    }
                    seg = 0;
                } else {
                    new_of[ch.start + k] = next;
                    next += 1;
                    seg += 1;
                }
            }
            if seg > 0 {
                lens.push(seg);
            }
        }
        let n_chain = next;
        for old in promoted.iter().copied().chain(self.n_chain..dim) {
            new_of[old] = next;
            next += 1;
        }
        // border order: promoted nodes, then the original border
        let nb = dim - n_chain;
        let mut out = ArrowMatrix::zeros(&lens, nb);
        let nc = self.n_chain;
        for ch in &self.chains {
            let s = ch.start;
            for k in 0..ch.len() {
                out.add(new_of[s + k], new_of[s + k], ch.diag[k]);
                if k + 1 < ch.len() {
                    out.add(new_of[s + k], new_of[s + k + 1], ch.off[k]);
                }
            }
            if let Some((b, v)) = ch.left {
                out.add(new_of[s], new_of[nc + b], v);
            }
            if let Some((b, v)) = ch.right {
                out.add(new_of[s + ch.len() - 1], new_of[nc + b], v);
            }
        }
        for a in 0..self.nb {
            for b in a..self.nb {
                let v = self.border[a * self.nb + b];
                if v != T::zero() {
                    out.add(new_of[nc + a], new_of[nc + b], v);
                }
            }
        }
        let mut perm = vec![0; dim];
        for (old, &new) in new_of.iter().enumerate() {
            perm[new] = old;
        }
        (out, perm)
    }
}

/// Negative count of the tridiagonal `diag + shift·w` with off-diagonal `off`.
fn sturm_count(diag: &[f64], off: &[f64], w: &[f64], shift: f64) -> usize {
    let mut neg = 0;
    let mut prev = 1.0f64;
    for k in 0..diag.len() {
        let mut d = diag[k] + shift * w[k];
        if k > 0 {
            d -= off[k - 1] * off[k - 1] / prev;
        }
        if d == 0.0 {
            d = -f64::MIN_POSITIVE;
        }
        if d < 0.0 {
            neg += 1;
        }
        prev = d;
    }
    neg
}

/// Fractions tried when splitting a chain.
const SPLITS: [f64; 7] = [0.381966, 0.618034, 0.276393, 0.723607, 0.145898, 0.854102, 0.5];

impl ArrowMatrix<f64> {
    /// Reorder so that no chain block has an eigenvalue of the pencil
    /// `(chain, diag(weight))` inside `(−delta, delta)`: a nearly singular
    /// chain is split by promoting one interior entry into the border.
    /// Without this the Schur complement loses all accuracy whenever an
    /// eigenvalue of the whole matrix coincides with one of an edge interior.
    pub fn stabilized(&self, weight: &[f64], delta: f64) -> (ArrowMatrix<f64>, Vec<usize>) {
        let near_singular = |d: &[f64], o: &[f64], w: &[f64]| -> bool {
            !d.is_empty() && sturm_count(d, o, w, delta) != sturm_count(d, o, w, -delta)
        };
        let mut cuts = Vec::new();
        for (c, ch) in self.chains.iter().enumerate() {
            let n = ch.len();
            let w = &weight[ch.start..ch.start + n];
            if n < 3 || !near_singular(&ch.diag, &ch.off, w) {
                continue;
            }
            for f in SPLITS {
                let k = ((f * n as f64) as usize).clamp(1, n - 2);
                let left = near_singular(&ch.diag[..k], &ch.off[..k - 1], &w[..k]);
                let right = near_singular(&ch.diag[k + 1..], &ch.off[k + 1..], &w[k + 1..]);
                if !left && !right {
                    cuts.push((c, k));
                    break;
                }
            }
        }
        if cuts.is_empty() {
            let perm = (0..self.dim()).collect();
            return (self.clone(), perm);
        }
        self.promote(&cuts)
    }

    /// Factorization of [`Self::stabilized`], solving in the original ordering.
    pub fn factor_stable(&self, weight: &[f64], delta: f64) -> Result<StableLu> {
        let (m, perm) = self.stabilized(weight, delta);
        Ok(StableLu { lu: m.factor()?, perm })
    }

    /// Negative count after [`Self::stabilized`].
    pub fn negative_count_stable(&self, weight: &[f64], delta: f64) -> Result<usize> {
        self.stabilized(weight, delta).0.negative_count()
    }
}

#[derive(Debug, Clone)]
pub struct StableLu {
    lu: ArrowLu<f64>,
    perm: Vec<usize>,
}

impl StableLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let r: Vec<f64> = self.perm.iter().map(|&o| rhs[o]).collect();
        let y = self.lu.solve(&r);
        let mut x = vec![0.0; rhs.len()];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

enum Loc {
    Chain(usize, usize),
    Border(usize),
}

/// Tridiagonal LU with partial pivoting (LAPACK `gttrf` layout).
#[derive(Debug, Clone)]
struct TriLu<T> {
    dl: Vec<T>,
    d: Vec<T>,
    du: Vec<T>,
    du2: Vec<T>,
    swap: Vec<bool>,
}

impl<T: Scalar> TriLu<T> {
    fn new(diag: &[T], off: &[T]) -> Result<Self> {
        let n = diag.len();
        let mut dl = off.to_vec();
        let mut d = diag.to_vec();
        let mut du = off.to_vec();
        let mut du2 = vec![T::zero(); n.saturating_sub(2)];
        let mut swap = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs1() >= dl[i].abs1() {
                if d[i] != T::zero() {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swap[i] = true;
            }
        }
        if d.iter().any(|x| *x == T::zero()) {
            return Err(Error::Singular("zero pivot in edge block".into()));
        }
        Ok(TriLu { dl, d, du, du2, swap })
    }

    fn solve_in_place(&self, b: &mut [T]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if !self.swap[i] {
                let t = self.dl[i] * b[i];
                b[i + 1] -= t;
            } else {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            }
        }
        if n == 0 {
            return;
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

/// Block factorization: chain LU factors plus the LU of the border Schur complement.
#[derive(Debug, Clone)]
pub struct ArrowLu<T: Scalar> {
    chains: Vec<(Chain<T>, TriLu<T>, Vec<T>, Vec<T>)>,
    n_chain: usize,
    nb: usize,
    schur: nalgebra::LU<T, nalgebra::Dyn, nalgebra::Dyn>,
    schur_dense: DMatrix<T>,
}

impl<T: Scalar> ArrowLu<T> {
    fn new(a: &ArrowMatrix<T>) -> Result<Self> {
        let nb = a.nb;
        let mut s = DMatrix::from_row_slice(nb, nb, &a.border);
        let mut chains = Vec::with_capacity(a.chains.len());
        for ch in &a.chains {
            let n = ch.len();
            let lu = TriLu::new(&ch.diag, &ch.off)?;
            let mut yl = vec![T::zero(); n];
            let mut yr = vec![T::zero(); n];
            if let Some((_, v)) = ch.left {
                yl[0] = v;
                lu.solve_in_place(&mut yl);
            }
            if let Some((_, v)) = ch.right {
                yr[n - 1] = v;
                lu.solve_in_place(&mut yr);
            }
            if let Some((bl, vl)) = ch.left {
                s[(bl, bl)] -= vl * yl[0];
                if let Some((br, vr)) = ch.right {
                    s[(bl, br)] -= vl * yr[0];
                    s[(br, bl)] -= vr * yl[n - 1];
                }
            }
            if let Some((br, vr)) = ch.right {
                s[(br, br)] -= vr * yr[n - 1];
            }
            chains.push((ch.clone(), lu, yl, yr));
        }
        let schur = s.clone().lu();
        if nb > 0 && !schur.is_invertible() {
            return Err(Error::Singular("vertex Schur complement".into()));
        }
        Ok(ArrowLu { chains, n_chain: a.n_chain, nb, schur, schur_dense: s })
    }

    pub fn dim(&self) -> usize {
        self.n_chain + self.nb
    }

    /// Border Schur complement `B − Cᵀ T⁻¹ C`.
    pub fn schur_complement(&self) -> &DMatrix<T> {
        &self.schur_dense
    }

    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let nc = self.n_chain;
        let mut x = rhs.to_vec();
        let mut rb = DVector::from_column_slice(&rhs[nc..]);
        for (ch, lu, _, _) in &self.chains {
            let s = ch.start;
            let n = ch.len();
            lu.solve_in_place(&mut x[s..s + n]);
            if let Some((b, v)) = ch.left {
                rb[b] -= v * x[s];
            }
            if let Some((b, v)) = ch.right {
                rb[b] -= v * x[s + n - 1];
            }
        }
        let zb = if self.nb > 0 { self.schur.solve(&rb).expect("invertible Schur complement") } else { rb };
        for (ch, _, yl, yr) in &self.chains {
            let s = ch.start;
            if let Some((b, _)) = ch.left {
                let z = zb[b];
                for (k, y) in yl.iter().enumerate() {
                    x[s + k] -= *y * z;
                }
            }
            if let Some((b, _)) = ch.right {
                let z = zb[b];
                for (k, y) in yr.iter().enumerate() {
                    x[s + k] -= *y * z;
                }
            }
        }
        x[nc..].copy_from_slice(zb.as_slice());
        x
    }
}

impl ArrowMatrix<f64> {
    /// Number of negative eigenvalues of this real symmetric matrix, by
    /// Sylvester inertia of the chain blocks plus the border Schur complement.
    pub fn negative_count(&self) -> Result<usize> {
        let mut neg = 0;
        let tiny = f64::EPSILON * self.norm_inf().max(1.0);
        for ch in &self.chains {
            let mut prev = 0.0f64;
            for k in 0..ch.len() {
                let mut d = ch.diag[k];
                if k > 0 {
                    d -= ch.off[k - 1] * ch.off[k - 1] / prev;
                }
                if d == 0.0 {
                    d = -tiny;
                }
                if d < 0.0 {
                    neg += 1;
                }
                prev = d;
            }
        }
        if self.nb > 0 {
            let lu = match ArrowLu::new(self) {
                Ok(lu) => lu,
                Err(_) => {
                    let mut shifted = self.clone();
                    let d = vec![tiny * 16.0; self.dim()];
                    shifted.add_diagonal(&d);
                    ArrowLu::new(&shifted)?
                }
            };
            let s = lu.schur_complement();
            let sym = (s + s.transpose()) * 0.5;
            let eig = sym.symmetric_eigenvalues();
            neg += eig.iter().filter(|&&l| l < 0.0).count();
        }
        Ok(neg)
    }
}
