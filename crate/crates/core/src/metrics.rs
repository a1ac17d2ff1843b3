//! Distances between probability densities on `[-1,1]^d` (w.r.t. `μ`),
//! evaluated by tensor Gauss–Legendre quadrature, and the determinant
//! stability diagnostics.

use serde::{Deserialize, Serialize};

use crate::density::{Density, MAX_QUADRATURE_DIM};
use crate::quadrature::{QuadratureRule, TensorGrid};
use crate::transport::{pullback_density, TriangularMap};
use crate::{Error, Real, Result};

/// Default nodes per coordinate for distance grids.
pub fn default_distance_order(d: usize) -> Result<usize> {
    match d {
        0 => Err(Error::InvalidArgument("distances need at least one dimension".into())),
        1..=3 => Ok(30),
        4 => Ok(15),
        5 => Ok(10),
        _ => Err(Error::DimensionTooLarge { dim: d, limit: MAX_QUADRATURE_DIM }),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistanceOptions {
    /// Nodes per coordinate; `None` picks [`default_distance_order`].
    pub order: Option<usize>,
    /// Also integrate `|f − g|` on a composite grid with four pieces per
    /// coordinate. `None` enables it for `d ≤ 2`.
    pub oversample_tv: Option<bool>,
}

impl DistanceOptions {
    pub fn order_for(&self, d: usize) -> Result<usize> {
        match self.order {
            Some(0) => Err(Error::InvalidArgument("distance grid order must be positive".into())),
            Some(n) => Ok(n),
            None => default_distance_order(d),
        }
    }

    fn oversample_for(&self, d: usize) -> bool {
        self.oversample_tv.unwrap_or(d <= 2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridInfo {
    pub dim: usize,
    pub order: usize,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport<T> {
    pub hellinger: T,
    pub tv: T,
    pub kl: T,
    /// Exact for `d = 1`, otherwise the bound `2√d · tv`.
    pub w1: T,
    pub w1_exact: bool,
    /// `2√d · tv`, reported in every dimension.
    pub w1_bound: T,
    pub tv_oversampled: Option<T>,
    pub grid: GridInfo,
}

fn values_on<T, F>(f: &F, grid: &TensorGrid<T>) -> Result<Vec<T>>
where
    T: Real,
    F: Fn(&[T]) -> Result<T> + Sync,
{
    let v: Vec<T> = grid.map_nodes(f).into_iter().collect::<Result<_>>()?;
    if let Some(bad) = v.iter().find(|x| !(**x >= T::zero())) {
        return Err(if bad.is_nan() { Error::NonFinite("density value") } else { Error::NonPositiveDensity(bad.as_f64()) });
    }
    Ok(v)
}

fn weighted_sum<T: Real>(w: &[T], mut term: impl FnMut(usize) -> T) -> T {
    w.iter().enumerate().fold(T::zero(), |acc, (i, &wi)| acc + wi * term(i))
}

fn hellinger_from<T: Real>(w: &[T], f: &[T], g: &[T]) -> T {
    let s = weighted_sum(w, |i| {
        let d = f[i].sqrt() - g[i].sqrt();
        d * d
    });
    (T::lit(0.5) * s).sqrt()
}

fn tv_from<T: Real>(w: &[T], f: &[T], g: &[T]) -> T {
    T::lit(0.5) * weighted_sum(w, |i| (f[i] - g[i]).abs())
}

fn kl_from<T: Real>(w: &[T], f: &[T], g: &[T]) -> T {
    weighted_sum(w, |i| {
        if f[i] == T::zero() {
            T::zero()
        } else if !(g[i] > T::zero()) {
            T::infinity()
        } else {
            f[i] * (f[i] / g[i]).ln()
        }
    })
}

/// `((1/2) ∫ (√f − √g)² dμ)^{1/2}`.
pub fn hellinger<T, F, G>(f: F, g: G, grid: &TensorGrid<T>) -> Result<T>
where
    T: Real,
    F: Fn(&[T]) -> Result<T> + Sync,
    G: Fn(&[T]) -> Result<T> + Sync,
{
    let (fv, gv) = (values_on(&f, grid)?, values_on(&g, grid)?);
    Ok(hellinger_from(&grid.weights(), &fv, &gv))
}

/// `(1/2) ∫ |f − g| dμ`.
pub fn total_variation<T, F, G>(f: F, g: G, grid: &TensorGrid<T>) -> Result<T>
where
    T: Real,
    F: Fn(&[T]) -> Result<T> + Sync,
    G: Fn(&[T]) -> Result<T> + Sync,
{
    let (fv, gv) = (values_on(&f, grid)?, values_on(&g, grid)?);
    Ok(tv_from(&grid.weights(), &fv, &gv))
}

/// `∫ f log(f/g) dμ`; `+∞` if `g` vanishes where `f` does not.
pub fn kl_divergence<T, F, G>(f: F, g: G, grid: &TensorGrid<T>) -> Result<T>
where
    T: Real,
    F: Fn(&[T]) -> Result<T> + Sync,
    G: Fn(&[T]) -> Result<T> + Sync,
{
    let (fv, gv) = (values_on(&f, grid)?, values_on(&g, grid)?);
    Ok(kl_from(&grid.weights(), &fv, &gv))
}

/// Pieces of the composite rule used for the 1d CDF gap.
const W1_PIECES: usize = 64;

/// `∫_{-1}^{1} |F_f(x) − F_g(x)| dx` for `d = 1`, where `F` is the CDF of
/// the measure `f dμ`. The CDF gap is accumulated piece by piece.
fn wasserstein1_exact<T, F, G>(f: &F, g: &G, order: usize) -> Result<T>
where
    T: Real,
    F: Fn(&[T]) -> Result<T> + Sync,
    G: Fn(&[T]) -> Result<T> + Sync,
{
    let outer = QuadratureRule::<T>::gauss_legendre(8);
    let inner = QuadratureRule::<T>::gauss_legendre(order.max(8));
    let half = T::lit(0.5);
    let gap_density = |t: T| -> Result<T> { Ok(half * (f(&[t])? - g(&[t])?)) };
    let integrate = |a: T, b: T| -> Result<T> {
        let mut acc = T::zero();
        for i in 0..inner.len() {
            acc = acc + inner.weights()[i] * gap_density(inner.mapped_node(i, a, b))?;
        }
        Ok(acc * (b - a))
    };
    let pf = T::of_usize(W1_PIECES);
    let mut h_left = T::zero();
    let mut total = T::zero();
    for p in 0..W1_PIECES {
        let a = -T::one() + T::lit(2.0) * T::of_usize(p) / pf;
        let b = -T::one() + T::lit(2.0) * T::of_usize(p + 1) / pf;
        let mut piece = T::zero();
        for i in 0..outer.len() {
            let x = outer.mapped_node(i, a, b);
            piece = piece + outer.weights()[i] * (h_left + integrate(a, x)?).abs();
        }
        total = total + piece * (b - a);
        h_left = h_left + integrate(a, b)?;
    }
    Ok(total)
}

/// `W1` for `d = 1` (exact, flag `true`) or the bound `2√d · d_TV` (flag
/// `false`). The cube has diameter `2√d`, which is what the bound uses.
pub fn wasserstein1<T, F, G>(f: F, g: G, d: usize, grid: &TensorGrid<T>) -> Result<(T, bool)>
where
    T: Real,
    F: Fn(&[T]) -> Result<T> + Sync,
    G: Fn(&[T]) -> Result<T> + Sync,
{
    if grid.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: grid.dim() });
    }
    if d == 1 {
        let order = grid.rule(0).len();
        return Ok((wasserstein1_exact(&f, &g, order)?, true));
    }
    let tv = total_variation(f, g, grid)?;
    Ok((w1_bound(tv, d), false))
}

fn w1_bound<T: Real>(tv: T, d: usize) -> T {
    T::lit(2.0) * T::of_usize(d).sqrt() * tv
}

/// All distances between `f` and `g` on one shared grid.
pub fn distance_report<T, F, G>(f: F, g: G, d: usize, options: &DistanceOptions) -> Result<DistanceReport<T>>
where
    T: Real,
    F: Fn(&[T]) -> Result<T> + Sync,
    G: Fn(&[T]) -> Result<T> + Sync,
{
    let order = options.order_for(d)?;
    let grid = TensorGrid::uniform(d, order);
    let points = grid.checked_len().ok_or(Error::GridTooLarge { points: usize::MAX, budget: usize::MAX })?;
    let w = grid.weights();
    let (fv, gv) = (values_on(&f, &grid)?, values_on(&g, &grid)?);
    let tv = tv_from(&w, &fv, &gv);
    let (w1, w1_exact) = if d == 1 { (wasserstein1_exact(&f, &g, order)?, true) } else { (w1_bound(tv, d), false) };
    let tv_oversampled = if options.oversample_for(d) {
        let fine = TensorGrid::new(vec![QuadratureRule::composite(order, 4); d]);
        let (fo, go) = (values_on(&f, &fine)?, values_on(&g, &fine)?);
        Some(tv_from(&fine.weights(), &fo, &go))
    } else {
        None
    };
    Ok(DistanceReport {
        hellinger: hellinger_from(&w, &fv, &gv),
        tv,
        kl: kl_from(&w, &fv, &gv),
        w1,
        w1_exact,
        w1_bound: w1_bound(tv, d),
        tv_oversampled,
        grid: GridInfo { dim: d, order, points },
    })
}

/// Distances between the pullback `S^♯ρ` (density `f_ρ(S(x))·det dS(x)`) and `π`.
pub fn pullback_distance<T, M>(map: &M, reference: &Density<T>, target: &Density<T>, options: &DistanceOptions) -> Result<DistanceReport<T>>
where
    T: Real,
    M: TriangularMap<T>,
{
    let d = map.dim();
    if reference.dim() != d || target.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: target.dim().max(reference.dim()) });
    }
    distance_report(|x: &[T]| pullback_density(map, reference, x), |x: &[T]| Ok(target.evaluate(x)), d, options)
}

/// `(|Π a − Π b|, exp(Σ|a_j−b_j|/a_min) · Π a / min(a_min, b_min) · Σ|a_j−b_j|)`.
pub fn det_product_bound<T: Real>(a: &[T], b: &[T]) -> Result<(T, T)> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    if let Some(bad) = a.iter().chain(b).find(|v| !(**v > T::zero()) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("sequence entries must be positive and finite, got {bad}")));
    }
    let prod_a = a.iter().fold(T::one(), |p, &v| p * v);
    let prod_b = b.iter().fold(T::one(), |p, &v| p * v);
    let a_min = a.iter().copied().fold(T::infinity(), T::min);
    let b_min = b.iter().copied().fold(T::infinity(), T::min);
    let diff: T = a.iter().zip(b).map(|(&x, &y)| (x - y).abs()).sum();
    if a.is_empty() {
        return Ok((T::zero(), T::zero()));
    }
    let rhs = (diff / a_min).exp() * prod_a / a_min.min(b_min) * diff;
    Ok(((prod_a - prod_b).abs(), rhs))
}

/// `(|∫ h dρ − ∫ h dπ|, √2 · d_H(ρ, π) · (‖h‖_{L²(ρ)} + ‖h‖_{L²(π)}))` for a
/// test function `h`, all integrals on `grid`.
pub fn integral_difference_bound<T, H, F, G>(h: H, f_rho: F, f_pi: G, grid: &TensorGrid<T>) -> Result<(T, T)>
where
    T: Real,
    H: Fn(&[T]) -> T + Sync,
    F: Fn(&[T]) -> Result<T> + Sync,
    G: Fn(&[T]) -> Result<T> + Sync,
{
    let w = grid.weights();
    let (fv, gv) = (values_on(&f_rho, grid)?, values_on(&f_pi, grid)?);
    let hv: Vec<T> = grid.map_nodes(&h);
    let lhs = weighted_sum(&w, |i| hv[i] * (fv[i] - gv[i])).abs();
    let norm_rho = weighted_sum(&w, |i| hv[i] * hv[i] * fv[i]).sqrt();
    let norm_pi = weighted_sum(&w, |i| hv[i] * hv[i] * gv[i]).sqrt();
    let rhs = T::lit(2.0).sqrt() * hellinger_from(&w, &fv, &gv) * (norm_rho + norm_pi);
    Ok((lhs, rhs))
}
