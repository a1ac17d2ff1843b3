//! The Knothe–Rosenblatt transport `T` pushing `ρ` to `π`:
//!
//! ```text
//! T_k(x_{[k-1]}, ·) = F_{π;k}(T_1(x_1), …, T_{k-1}(x_{[k-1]}), ·)^{-1} ∘ F_{ρ;k}(x_{[k-1]}, ·)
//! ```
//!
//! evaluated coordinate by coordinate with conditional CDFs obtained by
//! quadrature and inverted by safeguarded Newton iteration. The diagonal
//! derivative is `∂_{x_k} T_k = f_{ρ;k}(x_{[k]}) / f_{π;k}(T_{[k]}(x))`.

use crate::density::{Density, MarginalSlice};
use crate::quadrature::QuadratureRule;
use crate::roots::{solve_increasing, RootSettings};
use crate::{Error, Real, Result};

/// Default number of Gauss–Legendre nodes used for conditional CDFs of
/// densities without polynomial marginals.
pub const DEFAULT_CDF_ORDER: usize = 40;

/// Smallest diagonal derivative accepted by push-forward densities.
pub const DERIVATIVE_FLOOR: f64 = 1e-14;

/// A monotone triangular map of `[-1,1]^d` onto itself.
///
/// Triangularity means component `k` reads only `x_{[k]}`, so every method
/// operates on prefixes: an input of length `m ≤ d` yields the first `m`
/// components.
pub trait TriangularMap<T: Real>: Sync {
    fn dim(&self) -> usize;

    /// `(T_{[m]}(x), (∂_{x_k} T_k(x_{[k]}))_{k≤m})` for `x ∈ [-1,1]^m`.
    fn apply_prefix_with_diag(&self, x: &[T]) -> Result<(Vec<T>, Vec<T>)>;

    /// `T_{[m]}^{-1}(y)` for `y ∈ [-1,1]^m`.
    fn invert_prefix(&self, y: &[T]) -> Result<Vec<T>>;

    fn apply_prefix(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(self.apply_prefix_with_diag(x)?.0)
    }

    fn apply_with_diag(&self, x: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        self.check_full(x)?;
        self.apply_prefix_with_diag(x)
    }

    fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(self.apply_with_diag(x)?.0)
    }

    fn invert(&self, y: &[T]) -> Result<Vec<T>> {
        self.check_full(y)?;
        self.invert_prefix(y)
    }

    /// `T_k(x_{[k]})`, `k` 1-based, `x.len() == k`.
    fn component(&self, k: usize, x: &[T]) -> Result<T> {
        check_component(self.dim(), k, x)?;
        Ok(self.apply_prefix(x)?[k - 1])
    }

    /// `∂_{x_k} T_k(x_{[k]})`.
    fn component_derivative(&self, k: usize, x: &[T]) -> Result<T> {
        check_component(self.dim(), k, x)?;
        Ok(self.apply_prefix_with_diag(x)?.1[k - 1])
    }

    #[doc(hidden)]
    fn check_full(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }
}

fn check_component<T: Real>(d: usize, k: usize, x: &[T]) -> Result<()> {
    if k == 0 || k > d {
        return Err(Error::InvalidArgument(format!("component index {k} outside 1..={d}")));
    }
    if x.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: x.len() });
    }
    Ok(())
}

/// The identity map of `[-1,1]^d`.
#[derive(Clone, Copy, Debug)]
pub struct IdentityMap {
    pub dim: usize,
}

impl<T: Real> TriangularMap<T> for IdentityMap {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_prefix_with_diag(&self, x: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        Ok((x.to_vec(), vec![T::one(); x.len()]))
    }

    fn invert_prefix(&self, y: &[T]) -> Result<Vec<T>> {
        Ok(y.to_vec())
    }
}

/// `M^{-1}` viewed as a triangular map; `∂_{y_k} S_k(y) = 1/∂_{x_k} M_k(S(y))`.
#[derive(Clone, Copy, Debug)]
pub struct Inverse<'a, M>(pub &'a M);

impl<T: Real, M: TriangularMap<T>> TriangularMap<T> for Inverse<'_, M> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply_prefix_with_diag(&self, y: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let x = self.0.invert_prefix(y)?;
        let (_, diag) = self.0.apply_prefix_with_diag(&x)?;
        Ok((x, diag.into_iter().map(|d| T::one() / d).collect()))
    }

    fn invert_prefix(&self, x: &[T]) -> Result<Vec<T>> {
        self.0.apply_prefix(x)
    }
}

/// `F_k(head, ·)` for one density and one conditioning prefix.
///
/// `F(t) = ∫_{-1}^t f̂_k(head, s) ds / ∫_{-1}^1 f̂_k(head, s) ds`, which equals
/// `∫_{-1}^t f_k(head, s) ds/2` and is exactly `0` and `1` at the endpoints.
pub struct ConditionalCdf<'a, T: Real> {
    slice: MarginalSlice<'a, T>,
    rule: &'a QuadratureRule<T>,
    norm: T,
}

impl<'a, T: Real> ConditionalCdf<'a, T> {
    pub fn new(density: &'a Density<T>, k: usize, head: &[T], rule: &'a QuadratureRule<T>) -> Result<Self> {
        let slice = density.slice(k, head)?;
        let mut cdf = Self { slice, rule, norm: T::one() };
        let norm = cdf.mass_up_to(T::one())?;
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::NonPositiveDensity(norm.as_f64()));
        }
        cdf.norm = norm;
        Ok(cdf)
    }

    fn mass_up_to(&self, t: T) -> Result<T> {
        let a = -T::one();
        let mut acc = T::zero();
        for i in 0..self.rule.len() {
            acc = acc + self.rule.weights()[i] * self.slice.eval(self.rule.mapped_node(i, a, t))?;
        }
        Ok(acc * (t - a))
    }

    pub fn cdf(&self, t: T) -> Result<T> {
        if t <= -T::one() {
            return Ok(T::zero());
        }
        if t >= T::one() {
            return Ok(T::one());
        }
        Ok(self.mass_up_to(t)? / self.norm)
    }

    /// `dF/dt`, i.e. half the conditional density w.r.t. `μ`.
    pub fn pdf(&self, t: T) -> Result<T> {
        Ok(self.slice.eval(t)? / self.norm)
    }

    /// Conditional density `f_k(head, t)` w.r.t. `μ`.
    pub fn conditional_density(&self, t: T) -> Result<T> {
        Ok(T::lit(2.0) * self.pdf(t)?)
    }

    /// `F^{-1}(y)` for `y ∈ [0,1]`.
    pub fn quantile(&self, y: T, settings: &RootSettings<T>) -> Result<T> {
        let one = T::one();
        invert_cdf(
            |t| Ok((self.cdf(t)?, self.pdf(t)?)),
            y,
            Some(T::lit(2.0) * y - one),
            settings,
        )
    }
}

/// `F_k(x_{[k-1]}, t)` of `f` with the given rule mapped onto `[-1, t]`.
pub fn conditional_cdf<T: Real>(f: &Density<T>, k: usize, head: &[T], t: T, rule: &QuadratureRule<T>) -> Result<T> {
    ConditionalCdf::new(f, k, head, rule)?.cdf(t)
}

/// Inverts a strictly increasing CDF on `[-1,1]` (`F(-1) = 0`, `F(1) = 1`).
/// `cdf_and_pdf` returns `(F(t), F'(t))`.
pub fn invert_cdf<T, F>(cdf_and_pdf: F, y: T, guess: Option<T>, settings: &RootSettings<T>) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> Result<(T, T)>,
{
    let one = T::one();
    solve_increasing(cdf_and_pdf, y, (-one, one), (T::zero(), one), guess, settings)
}

#[derive(Clone, Debug)]
pub struct TransportSettings<T> {
    pub cdf_order: usize,
    pub root: RootSettings<T>,
}

impl<T: Real> Default for TransportSettings<T> {
    fn default() -> Self {
        Self { cdf_order: DEFAULT_CDF_ORDER, root: RootSettings::default() }
    }
}

/// The exact KR transport from `reference` (ρ) to `target` (π).
#[derive(Clone, Debug)]
pub struct ExactTransport<T: Real> {
    reference: Density<T>,
    target: Density<T>,
    settings: TransportSettings<T>,
    cdf_rule: QuadratureRule<T>,
    /// Exact for CDFs of affine slices.
    midpoint: QuadratureRule<T>,
}

impl<T: Real> ExactTransport<T> {
    pub fn new(reference: Density<T>, target: Density<T>) -> Result<Self> {
        Self::with_settings(reference, target, TransportSettings::default())
    }

    pub fn with_settings(reference: Density<T>, target: Density<T>, settings: TransportSettings<T>) -> Result<Self> {
        if reference.dim() != target.dim() {
            return Err(Error::DimensionMismatch { expected: reference.dim(), got: target.dim() });
        }
        if settings.cdf_order == 0 {
            return Err(Error::InvalidArgument("cdf_order must be positive".into()));
        }
        let cdf_rule = QuadratureRule::gauss_legendre(settings.cdf_order);
        Ok(Self { reference, target, settings, cdf_rule, midpoint: QuadratureRule::gauss_legendre(1) })
    }

    pub fn reference(&self) -> &Density<T> {
        &self.reference
    }

    pub fn target(&self) -> &Density<T> {
        &self.target
    }

    pub fn settings(&self) -> &TransportSettings<T> {
        &self.settings
    }

    /// The transport from `π` back to `ρ` (roles swapped); its forward map is
    /// the inverse `S = T^{-1}`.
    pub fn inverse(&self) -> Self {
        Self {
            reference: self.target.clone(),
            target: self.reference.clone(),
            settings: self.settings.clone(),
            cdf_rule: self.cdf_rule.clone(),
            midpoint: self.midpoint.clone(),
        }
    }

    fn cdf_for<'a>(&'a self, density: &'a Density<T>, k: usize, head: &[T]) -> Result<ConditionalCdf<'a, T>> {
        let slice_is_affine = density.slice(k, head)?.degree().is_some_and(|d| d <= 1);
        let rule = if slice_is_affine { &self.midpoint } else { &self.cdf_rule };
        ConditionalCdf::new(density, k, head, rule)
    }

    /// Conditional CDF of the reference (`which = Reference`) or target.
    pub fn conditional_cdf(&self, which: Side, k: usize, head: &[T], t: T) -> Result<T> {
        self.cdf_for(self.side(which), k, head)?.cdf(t)
    }

    fn side(&self, which: Side) -> &Density<T> {
        match which {
            Side::Reference => &self.reference,
            Side::Target => &self.target,
        }
    }

    fn transport_prefix(&self, src: &Density<T>, dst: &Density<T>, x: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        if x.len() > src.dim() {
            return Err(Error::DimensionMismatch { expected: src.dim(), got: x.len() });
        }
        let one = T::one();
        let mut y = Vec::with_capacity(x.len());
        let mut diag = Vec::with_capacity(x.len());
        for k in 1..=x.len() {
            let xk = x[k - 1].max(-one).min(one);
            let from = self.cdf_for(src, k, &x[..k - 1])?;
            let to = self.cdf_for(dst, k, &y)?;
            let u = from.cdf(xk)?;
            let yk = to.quantile(u, &self.settings.root)?;
            let d = from.pdf(xk)? / to.pdf(yk)?;
            y.push(yk);
            diag.push(d);
        }
        Ok((y, diag))
    }

    /// `∂_{x_k} T_k(x_{[k]})`.
    pub fn diag_derivative(&self, k: usize, x: &[T]) -> Result<T> {
        self.component_derivative(k, x)
    }

    /// Inverse through coordinatewise root finding on `T` itself:
    /// `S_k(y) = T_k(S_{[k-1]}(y), ·)^{-1}(y_k)`. Independent of the
    /// role-swapping route used by [`TriangularMap::invert`].
    pub fn invert_by_root_finding(&self, y: &[T]) -> Result<Vec<T>> {
        self.check_full(y)?;
        let one = T::one();
        let mut x: Vec<T> = Vec::with_capacity(y.len());
        let mut tx: Vec<T> = Vec::with_capacity(y.len());
        for k in 1..=y.len() {
            let from = self.cdf_for(&self.reference, k, &x)?;
            let to = self.cdf_for(&self.target, k, &tx)?;
            let tk = |t: T| -> Result<(T, T)> {
                let v = to.quantile(from.cdf(t)?, &self.settings.root)?;
                Ok((v, from.pdf(t)? / to.pdf(v)?))
            };
            let xk = solve_increasing(tk, y[k - 1], (-one, one), (-one, one), Some(y[k - 1]), &self.settings.root)?;
            x.push(xk);
            // T_{[k]}(S_{[k]}(y)) = y_{[k]} up to solver tolerance.
            tx.push(y[k - 1]);
        }
        Ok(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Reference,
    Target,
}

impl<T: Real> TriangularMap<T> for ExactTransport<T> {
    fn dim(&self) -> usize {
        self.reference.dim()
    }

    fn apply_prefix_with_diag(&self, x: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        self.transport_prefix(&self.reference, &self.target, x)
    }

    fn invert_prefix(&self, y: &[T]) -> Result<Vec<T>> {
        Ok(self.transport_prefix(&self.target, &self.reference, y)?.0)
    }
}

/// Density of `T_♯ρ` at `y`: `f_ρ(T^{-1}(y)) / det dT(T^{-1}(y))`.
pub fn pushforward_density<T: Real, M: TriangularMap<T>>(map: &M, reference: &Density<T>, y: &[T]) -> Result<T> {
    let x = map.invert(y)?;
    let (_, diag) = map.apply_with_diag(&x)?;
    let floor = T::lit(DERIVATIVE_FLOOR);
    let mut det = T::one();
    for d in diag {
        if !(d > floor) {
            return Err(Error::DerivativeUnderflow(d.as_f64()));
        }
        det = det * d;
    }
    Ok(reference.evaluate(&x) / det)
}

/// Density of `S^♯ρ` at `x`: `f_ρ(S(x)) · Π_k ∂_{x_k} S_k(x_{[k]})`.
pub fn pullback_density<T: Real, M: TriangularMap<T>>(map: &M, reference: &Density<T>, x: &[T]) -> Result<T> {
    let (s, diag) = map.apply_with_diag(x)?;
    Ok(diag.into_iter().fold(reference.evaluate(&s), |a, d| a * d))
}

/// `log` of [`pullback_density`], accumulated as a sum of logs.
pub fn log_pullback_density<T: Real, M: TriangularMap<T>>(map: &M, reference: &Density<T>, x: &[T]) -> Result<T> {
    let (s, diag) = map.apply_with_diag(x)?;
    Ok(diag.into_iter().fold(reference.evaluate(&s).ln(), |a, d| a + d.ln()))
}
