//! Orthonormal Legendre polynomials on `[-1,1]` w.r.t. `μ`, tensorized over
//! finitely supported multi-indices, and sparse expansions in that basis.
//!
//! `L_n = √(2n+1)·P_n` where `P_n` is the classical Legendre polynomial, so
//! `∫ L_n L_m dμ = δ_{nm}` and `‖L_n‖_∞ = L_n(1) = √(2n+1)`.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::quadrature::TensorGrid;
use crate::{Error, Real, Result};

/// A finitely supported multi-index `ν ∈ ℕ₀^ℕ`, stored without trailing
/// zeros. Ordered graded-lexicographically (total degree first).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<u32>", into = "Vec<u32>")]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(mut exponents: Vec<u32>) -> Self {
        while exponents.last() == Some(&0) {
            exponents.pop();
        }
        Self(exponents)
    }

    pub fn zero() -> Self {
        Self(Vec::new())
    }

    /// Unit multi-index `e_j` (0-based `j`).
    pub fn unit(j: usize) -> Self {
        let mut v = vec![0; j + 1];
        v[j] = 1;
        Self(v)
    }

    /// `ν_j` (0-based), zero beyond the support.
    #[inline]
    pub fn get(&self, j: usize) -> u32 {
        self.0.get(j).copied().unwrap_or(0)
    }

    /// Length of the trimmed exponent list (one past the last nonzero).
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Same as [`is_zero`](Self::is_zero).
    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// `|ν| = Σ ν_j`.
    pub fn order(&self) -> u64 {
        self.0.iter().map(|&v| u64::from(v)).sum()
    }

    /// Exponents padded with zeros to length `k`.
    pub fn padded(&self, k: usize) -> Vec<u32> {
        let mut v = self.0.clone();
        v.resize(k.max(v.len()), 0);
        v
    }

    /// Copy with `ν_j` replaced by `value`.
    pub fn with(&self, j: usize, value: u32) -> Self {
        let mut v = self.padded(j + 1);
        v[j] = value;
        Self::new(v)
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &Self) -> bool {
        self.0.iter().enumerate().all(|(j, &v)| v <= other.get(j))
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        Self::new(v)
    }
}

impl From<MultiIndex> for Vec<u32> {
    fn from(m: MultiIndex) -> Self {
        m.0
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        // Lexicographic comparison of trimmed vectors agrees with comparing
        // the zero-padded ones.
        self.order().cmp(&other.order()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Orthonormal Legendre polynomial `L_n(x)`.
pub fn legendre_1d<T: Real>(n: usize, x: T) -> T {
    let mut p0 = T::one();
    if n == 0 {
        return p0;
    }
    let mut p1 = x;
    for j in 2..=n {
        let jf = T::of_usize(j);
        let p2 = ((T::lit(2.0) * jf - T::one()) * x * p1 - (jf - T::one()) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    (T::of_usize(2 * n + 1)).sqrt() * p1
}

/// Fills `out[n] = L_n(x)` for `n = 0..out.len()`.
pub fn legendre_table<T: Real>(x: T, out: &mut [T]) {
    if out.is_empty() {
        return;
    }
    // Classical values first, then scale.
    out[0] = T::one();
    if out.len() > 1 {
        out[1] = x;
    }
    for j in 2..out.len() {
        let jf = T::of_usize(j);
        out[j] = ((T::lit(2.0) * jf - T::one()) * x * out[j - 1] - (jf - T::one()) * out[j - 2]) / jf;
    }
    for (n, v) in out.iter_mut().enumerate().skip(1) {
        *v = *v * T::of_usize(2 * n + 1).sqrt();
    }
}

/// `Σ_n coeffs[n]·L_n(x)` by the three-term recurrence.
pub fn legendre_series<T: Real>(coeffs: &[T], x: T) -> T {
    let mut acc = T::zero();
    let mut p0 = T::one();
    let mut p1 = x;
    for (n, c) in coeffs.iter().enumerate() {
        let p = match n {
            0 => p0,
            1 => p1,
            _ => {
                let jf = T::of_usize(n);
                let p2 = ((T::lit(2.0) * jf - T::one()) * x * p1 - (jf - T::one()) * p0) / jf;
                p0 = p1;
                p1 = p2;
                p2
            }
        };
        acc = acc + *c * T::of_usize(2 * n + 1).sqrt() * p;
    }
    acc
}

/// `Π_j (1+2ν_j)^{1/2}`, the sup norm of `L_ν` on the cube.
pub fn sup_norm_bound<T: Real>(nu: &MultiIndex) -> T {
    nu.as_slice()
        .iter()
        .fold(T::one(), |acc, &v| acc * T::of_usize(1 + 2 * v as usize).sqrt())
}

/// `Σ_{ν} l_ν L_ν` on `[-1,1]^dim`; terms iterate in graded-lex order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "PolyRepr<T>", try_from = "PolyRepr<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct SparsePolynomial<T: Real> {
    dim: usize,
    terms: BTreeMap<MultiIndex, T>,
    max_deg: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct TermRepr<T> {
    nu: MultiIndex,
    coeff: T,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr<T> {
    dim: usize,
    terms: Vec<TermRepr<T>>,
}

impl<T: Real> From<SparsePolynomial<T>> for PolyRepr<T> {
    fn from(p: SparsePolynomial<T>) -> Self {
        Self {
            dim: p.dim,
            terms: p.terms.into_iter().map(|(nu, coeff)| TermRepr { nu, coeff }).collect(),
        }
    }
}

impl<T: Real> TryFrom<PolyRepr<T>> for SparsePolynomial<T> {
    type Error = Error;
    fn try_from(r: PolyRepr<T>) -> Result<Self> {
        Self::from_terms(r.dim, r.terms.into_iter().map(|t| (t.nu, t.coeff)))
    }
}

impl<T: Real> SparsePolynomial<T> {
    /// The zero polynomial in `dim` variables.
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new(), max_deg: vec![0; dim] }
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (MultiIndex, T)>) -> Result<Self> {
        let mut p = Self::zero(dim);
        for (nu, c) in terms {
            p.insert(nu, c)?;
        }
        Ok(p)
    }

    /// Sets the coefficient of `L_ν` (replacing any previous value).
    pub fn insert(&mut self, nu: MultiIndex, coeff: T) -> Result<()> {
        if nu.len() > self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: nu.len() });
        }
        for (j, &v) in nu.as_slice().iter().enumerate() {
            self.max_deg[j] = self.max_deg[j].max(v as usize);
        }
        self.terms.insert(nu, coeff);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, nu: &MultiIndex) -> T {
        self.terms.get(nu).copied().unwrap_or_else(T::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &T)> {
        self.terms.iter()
    }

    /// Largest exponent per coordinate over all stored terms.
    pub fn max_degrees(&self) -> &[usize] {
        &self.max_deg
    }

    pub fn eval(&self, x: &[T]) -> Result<T> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if self.terms.is_empty() {
            return Ok(T::zero());
        }
        let tables: Vec<Vec<T>> = x
            .iter()
            .zip(&self.max_deg)
            .map(|(&xj, &m)| {
                let mut t = vec![T::zero(); m + 1];
                legendre_table(xj, &mut t);
                t
            })
            .collect();
        Ok(self
            .terms
            .iter()
            .map(|(nu, c)| {
                nu.as_slice()
                    .iter()
                    .enumerate()
                    .fold(*c, |acc, (j, &v)| acc * tables[j][v as usize])
            })
            .sum())
    }

    /// Restricts to the slice `x_{[k-1]} = head` and returns the Legendre
    /// coefficients of the resulting univariate polynomial in the last
    /// variable `x_k`.
    pub fn slice_last(&self, head: &[T]) -> Result<Vec<T>> {
        if self.dim == 0 || head.len() + 1 != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim.saturating_sub(1), got: head.len() });
        }
        let last = self.dim - 1;
        let tables: Vec<Vec<T>> = head
            .iter()
            .zip(&self.max_deg)
            .map(|(&xj, &m)| {
                let mut t = vec![T::zero(); m + 1];
                legendre_table(xj, &mut t);
                t
            })
            .collect();
        let mut out = vec![T::zero(); if self.terms.is_empty() { 0 } else { self.max_deg[last] + 1 }];
        for (nu, c) in &self.terms {
            let v = (0..last).fold(*c, |acc, j| acc * tables[j][nu.get(j) as usize]);
            let m = nu.get(last) as usize;
            out[m] = out[m] + v;
        }
        Ok(out)
    }

    /// `q` with `∂_{x_k} q = p` and `q(·, -1) = 0`, where `x_k` is the last
    /// variable. Uses `∫_{-1}^x P_m = (P_{m+1} - P_{m-1})/(2m+1)` for
    /// `m ≥ 1` and `∫_{-1}^x P_0 = P_0 + P_1`.
    pub fn antiderivative_in_last(&self) -> Result<Self> {
        if self.dim == 0 {
            return Err(Error::InvalidArgument("antiderivative of a polynomial in zero variables".into()));
        }
        let last = self.dim - 1;
        let mut acc: BTreeMap<MultiIndex, T> = BTreeMap::new();
        let mut add = |nu: MultiIndex, v: T| {
            let e = acc.entry(nu).or_insert_with(T::zero);
            *e = *e + v;
        };
        for (nu, &c) in &self.terms {
            let m = nu.get(last) as usize;
            let s = |n: usize| T::of_usize(2 * n + 1).sqrt();
            if m == 0 {
                add(nu.with(last, 0), c);
                add(nu.with(last, 1), c / s(1));
            } else {
                add(nu.with(last, (m + 1) as u32), c / (s(m) * s(m + 1)));
                add(nu.with(last, (m - 1) as u32), -c / (s(m) * s(m - 1)));
            }
        }
        Self::from_terms(self.dim, acc)
    }
}

/// Grid orders required to project onto `members`: `max_deg_j + margin` in
/// every coordinate that appears in the set, and at least one node elsewhere.
pub fn required_orders(members: &[MultiIndex], dim: usize, margin: usize) -> Vec<usize> {
    let mut max_deg = vec![None; dim];
    for nu in members {
        for (j, slot) in max_deg.iter_mut().enumerate() {
            let v = nu.get(j) as usize;
            *slot = Some(slot.map_or(v, |m: usize| m.max(v)));
        }
    }
    max_deg
        .into_iter()
        .map(|m| match m {
            Some(d) if d > 0 => d + margin,
            _ => 1,
        })
        .collect()
}

/// Orthogonal projection of `f` onto `span{L_ν : ν ∈ members}` with
/// coefficients `l_ν = ∫ f L_ν dμ` computed on `grid`.
pub fn project<T, F>(f: F, members: &[MultiIndex], grid: &TensorGrid<T>, margin: usize) -> Result<SparsePolynomial<T>>
where
    T: Real,
    F: Fn(&[T]) -> T + Sync,
{
    try_project(|x| Ok(f(x)), members, grid, margin)
}

/// [`project`] for fallible integrands. The first error encountered (in
/// node order) is returned.
pub fn try_project<T, F>(f: F, members: &[MultiIndex], grid: &TensorGrid<T>, margin: usize) -> Result<SparsePolynomial<T>>
where
    T: Real,
    F: Fn(&[T]) -> Result<T> + Sync,
{
    let dim = grid.dim();
    for (j, (&have, need)) in grid.orders().iter().zip(required_orders(members, dim, margin)).enumerate() {
        if have < need {
            return Err(Error::InsufficientOrder { dim: j, order: have, required: need });
        }
    }
    if let Some(nu) = members.iter().find(|nu| nu.len() > dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: nu.len() });
    }
    let values: Vec<T> = grid.map_nodes(|x| f(x)).into_iter().collect::<Result<_>>()?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("projection integrand"));
    }
    values_to_coefficients(&values, members, grid)
}

/// Projection from precomputed integrand values at the grid nodes (node
/// order as in [`TensorGrid::node`]).
pub fn values_to_coefficients<T: Real>(
    values: &[T],
    members: &[MultiIndex],
    grid: &TensorGrid<T>,
) -> Result<SparsePolynomial<T>> {
    let dim = grid.dim();
    let orders = grid.orders();
    let max_deg: Vec<usize> = (0..dim)
        .map(|j| members.iter().map(|nu| nu.get(j) as usize).max().unwrap_or(0))
        .collect();
    // tables[j][i][n] = L_n(node_i of rule j)
    let tables: Vec<Vec<Vec<T>>> = (0..dim)
        .map(|j| {
            grid.rule(j)
                .nodes()
                .iter()
                .map(|&x| {
                    let mut t = vec![T::zero(); max_deg[j] + 1];
                    legendre_table(x, &mut t);
                    t
                })
                .collect()
        })
        .collect();
    let wv: Vec<T> = grid.weights().iter().zip(values).map(|(w, v)| *w * *v).collect();
    // Parallel over ν only; every coefficient is a sequential sum in node
    // order so results do not depend on the thread count.
    let coeffs: Vec<T> = members
        .par_iter()
        .map(|nu| {
            let mut acc = T::zero();
            let mut digits = vec![0usize; dim];
            for (idx, &w) in wv.iter().enumerate() {
                let mut r = idx;
                for j in (0..dim).rev() {
                    digits[j] = r % orders[j];
                    r /= orders[j];
                }
                let basis = (0..nu.len()).fold(T::one(), |a, j| a * tables[j][digits[j]][nu.get(j) as usize]);
                acc = acc + w * basis;
            }
            acc
        })
        .collect();
    SparsePolynomial::from_terms(dim, members.iter().cloned().zip(coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::QuadratureRule;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn multi_index_trims_and_orders() {
        let a = MultiIndex::new(vec![1, 0, 0]);
        assert_eq!(a.as_slice(), &[1]);
        assert_eq!(a, MultiIndex::from(vec![1]));
        let mut v = vec![
            MultiIndex::new(vec![1, 1]),
            MultiIndex::new(vec![2]),
            MultiIndex::zero(),
            MultiIndex::new(vec![0, 1]),
            MultiIndex::new(vec![1]),
        ];
        v.sort();
        let got: Vec<Vec<u32>> = v.into_iter().map(Into::into).collect();
        assert_eq!(got, vec![vec![], vec![0, 1], vec![1], vec![1, 1], vec![2]]);
        assert!(MultiIndex::new(vec![0, 1]).le(&MultiIndex::new(vec![1, 1])));
        assert!(!MultiIndex::new(vec![0, 2]).le(&MultiIndex::new(vec![1, 1])));
    }

    #[test]
    fn legendre_values() {
        assert_eq!(legendre_1d(0, 0.37f64), 1.0);
        assert_abs_diff_eq!(legendre_1d(1, 0.5f64), 3f64.sqrt() * 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(legendre_1d(2, 1.0f64), 5f64.sqrt(), epsilon = 1e-14);
        let mut t = [0.0; 8];
        legendre_table(0.3, &mut t);
        for (n, v) in t.iter().enumerate() {
            assert_abs_diff_eq!(*v, legendre_1d(n, 0.3), epsilon = 1e-14);
        }
        let c = [0.5, -0.25, 0.125, 2.0];
        let direct: f64 = c.iter().enumerate().map(|(n, cn)| cn * legendre_1d(n, -0.7)).sum();
        assert_abs_diff_eq!(legendre_series(&c, -0.7), direct, epsilon = 1e-14);
    }

    #[test]
    fn sup_norm_bounds() {
        assert_eq!(sup_norm_bound::<f64>(&MultiIndex::zero()), 1.0);
        assert_abs_diff_eq!(sup_norm_bound::<f64>(&MultiIndex::new(vec![1, 2])), 15f64.sqrt(), epsilon = 1e-14);
        let b: f64 = sup_norm_bound(&MultiIndex::new(vec![3]));
        assert_abs_diff_eq!(b, 7f64.sqrt(), epsilon = 1e-14);
        let sampled = (0..=1000)
            .map(|i| legendre_1d(3, -1.0 + 2.0 * i as f64 / 1000.0).abs())
            .fold(0.0, f64::max);
        assert!(sampled <= b + 1e-14);
    }

    #[test]
    fn eval_examples() {
        let one = SparsePolynomial::from_terms(1, [(MultiIndex::zero(), 1.0)]).unwrap();
        assert_eq!(one.eval(&[0.3]).unwrap(), 1.0);
        let p = SparsePolynomial::from_terms(2, [(MultiIndex::new(vec![1, 0]), 2.0)]).unwrap();
        assert_abs_diff_eq!(p.eval(&[0.5, -0.3]).unwrap(), 3f64.sqrt(), epsilon = 1e-14);
        assert_eq!(SparsePolynomial::<f64>::zero(3).eval(&[0.1, 0.2, 0.3]).unwrap(), 0.0);
        assert!(matches!(p.eval(&[0.1]), Err(Error::DimensionMismatch { .. })));
        assert!(SparsePolynomial::from_terms(1, [(MultiIndex::new(vec![0, 1]), 1.0)]).is_err());
    }

    #[test]
    fn projection_examples() {
        let members: Vec<MultiIndex> = (0..4).map(|n| MultiIndex::new(vec![n])).collect();
        let grid = TensorGrid::uniform(1, 8);
        let p = project(|x: &[f64]| legendre_1d(2, x[0]), &members, &grid, 4).unwrap();
        for nu in &members {
            let expect = if nu.get(0) == 2 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(p.coeff(nu), expect, epsilon = 1e-13);
        }
        let p = project(|_: &[f64]| 1.0, &members, &grid, 4).unwrap();
        assert_abs_diff_eq!(p.coeff(&MultiIndex::zero()), 1.0, epsilon = 1e-14);
        let p = project(|x: &[f64]| x[0], &members, &grid, 4).unwrap();
        assert_abs_diff_eq!(p.coeff(&MultiIndex::new(vec![1])), 1.0 / 3f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn projection_rejects_coarse_grid() {
        let members = vec![MultiIndex::new(vec![5])];
        let grid = TensorGrid::<f64>::uniform(1, 8);
        let err = project(|x: &[f64]| x[0], &members, &grid, 10).unwrap_err();
        assert!(matches!(err, Error::InsufficientOrder { required: 15, .. }));
    }

    #[test]
    fn gram_matrix_is_identity() {
        let members: Vec<MultiIndex> = (0..=6u32)
            .flat_map(|a| (0..=6 - a).flat_map(move |b| (0..=6 - a - b).map(move |c| MultiIndex::new(vec![a, b, c]))))
            .collect();
        let grid = TensorGrid::<f64>::uniform(3, 8);
        for nu in members.iter().step_by(7) {
            let nu_row = nu.clone();
            let nu = nu.clone();
            let p = project(
                move |x: &[f64]| (0..3).map(|j| legendre_1d(nu.get(j) as usize, x[j])).product(),
                &members,
                &grid,
                1,
            )
            .unwrap();
            for (mu, c) in p.terms() {
                let want = if *mu == nu_row { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(*c, want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn antiderivative_examples() {
        let zero = SparsePolynomial::<f64>::zero(1);
        assert!(zero.antiderivative_in_last().unwrap().is_empty());
        let one = SparsePolynomial::from_terms(1, [(MultiIndex::zero(), 1.0)]).unwrap();
        let q = one.antiderivative_in_last().unwrap();
        assert_abs_diff_eq!(q.coeff(&MultiIndex::zero()), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.coeff(&MultiIndex::new(vec![1])), 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(q.eval(&[0.25]).unwrap(), 1.25, epsilon = 1e-14);
    }

    #[test]
    fn antiderivative_matches_finite_differences() {
        let p = SparsePolynomial::from_terms(
            2,
            [
                (MultiIndex::zero(), 0.3),
                (MultiIndex::new(vec![1, 2]), -0.7),
                (MultiIndex::new(vec![0, 5]), 0.2),
                (MultiIndex::new(vec![2, 1]), 1.1),
            ],
        )
        .unwrap();
        let q = p.antiderivative_in_last().unwrap();
        let h = 1e-5;
        for i in 0..100 {
            let x0 = -0.9 + 1.8 * (i as f64 * 0.37).fract();
            let x1 = -0.95 + 1.9 * i as f64 / 99.0;
            let fd = (q.eval(&[x0, x1 + h]).unwrap() - q.eval(&[x0, x1 - h]).unwrap()) / (2.0 * h);
            assert_abs_diff_eq!(fd, p.eval(&[x0, x1]).unwrap(), epsilon = 1e-9);
            assert_abs_diff_eq!(q.eval(&[x0, -1.0]).unwrap(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn slice_last_agrees_with_eval() {
        let p = SparsePolynomial::from_terms(
            3,
            [
                (MultiIndex::new(vec![1, 0, 2]), 0.5),
                (MultiIndex::new(vec![0, 3]), -0.2),
                (MultiIndex::new(vec![0, 0, 1]), 0.9),
            ],
        )
        .unwrap();
        let head = [0.2, -0.6];
        let c = p.slice_last(&head).unwrap();
        for t in [-1.0, -0.3, 0.0, 0.8] {
            assert_abs_diff_eq!(legendre_series(&c, t), p.eval(&[head[0], head[1], t]).unwrap(), epsilon = 1e-14);
        }
    }

    #[test]
    fn json_shape() {
        let p = SparsePolynomial::from_terms(2, [(MultiIndex::new(vec![0, 1]), 0.5), (MultiIndex::zero(), 1.0)]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"dim":2,"terms":[{"nu":[],"coeff":1.0},{"nu":[0,1],"coeff":0.5}]}"#);
        let back: SparsePolynomial<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn high_degree_eval_is_stable() {
        let p = SparsePolynomial::from_terms(1, [(MultiIndex::new(vec![60]), 1.0)]).unwrap();
        let r = QuadratureRule::<f64>::gauss_legendre(70);
        let norm = r.integrate(|x| p.eval(&[x]).unwrap().powi(2));
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn project_inverts_eval(coeffs in proptest::collection::vec(-2.0f64..2.0, 10)) {
            let members: Vec<MultiIndex> = (0..=3u32)
                .flat_map(|a| (0..=3 - a).map(move |b| MultiIndex::new(vec![a, b])))
                .collect();
            let p = SparsePolynomial::from_terms(2, members.iter().cloned().zip(coeffs.iter().copied())).unwrap();
            let grid = TensorGrid::uniform(2, 6);
            let q = project(|x: &[f64]| p.eval(x).unwrap(), &members, &grid, 2).unwrap();
            for nu in &members {
                prop_assert!((q.coeff(nu) - p.coeff(nu)).abs() < 1e-12);
            }
        }

        #[test]
        fn sampled_sup_within_bound(a in 0u32..12, b in 0u32..12, x in -1.0f64..1.0, y in -1.0f64..1.0) {
            let nu = MultiIndex::new(vec![a, b]);
            let v = legendre_1d(a as usize, x) * legendre_1d(b as usize, y);
            prop_assert!(v.abs() <= sup_norm_bound::<f64>(&nu) * (1.0 + 1e-13));
        }
    }
}
