//! Probability densities on `[-1,1]^d` w.r.t. `μ`, with the marginals
//!
//! ```text
//! f̂_k(x_{[k]}) = ∫ f(x_{[k]}, y) μ^{d-k}(dy),   f_k = f̂_k / f̂_{k-1}
//! ```
//!
//! computed either in closed form (uniform, linear) or by tensor quadrature
//! over the trailing coordinates (everything else, `d ≤ 5`).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::quadrature::TensorGrid;
use crate::{Error, Real, Result};

/// Largest dimension for which marginals are computed by tensor quadrature.
pub const MAX_QUADRATURE_DIM: usize = 5;

/// Per-dimension order of the grid used to normalize the Gaussian posterior.
pub const NORMALIZATION_ORDER: usize = 40;

/// Default per-dimension order for quadrature marginals in dimension `d`.
pub fn default_marginal_order(d: usize) -> usize {
    match d {
        0..=2 => 40,
        3 => 24,
        4 => 16,
        _ => 12,
    }
}

pub type DensityFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

#[derive(Clone)]
pub enum Family<T> {
    Uniform,
    /// `f(y) = 1 + Σ c_j y_j`.
    Linear { c: Vec<T> },
    /// `f(y) ∝ exp(-‖A y - data‖² / (2σ²))`, rows of `forward` are rows of `A`.
    GaussianPosterior { forward: Vec<Vec<T>>, data: Vec<T>, sigma: T, log_norm: T },
    /// Caller-supplied normalized density.
    Custom { name: String, f: DensityFn<T> },
}

impl<T: Real> fmt::Debug for Family<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Uniform => write!(f, "Uniform"),
            Family::Linear { c } => f.debug_struct("Linear").field("c", c).finish(),
            Family::GaussianPosterior { forward, data, sigma, log_norm } => f
                .debug_struct("GaussianPosterior")
                .field("forward", forward)
                .field("data", data)
                .field("sigma", sigma)
                .field("log_norm", log_norm)
                .finish(),
            Family::Custom { name, .. } => f.debug_struct("Custom").field("name", name).finish(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Density<T: Real> {
    dim: usize,
    family: Family<T>,
    anisotropy: Option<Vec<T>>,
    /// `trailing_grids[m]` integrates over the last `m` coordinates.
    trailing_grids: Vec<TensorGrid<T>>,
}

impl<T: Real> Density<T> {
    fn with_family(dim: usize, family: Family<T>, anisotropy: Option<Vec<T>>) -> Self {
        Self { dim, family, anisotropy, trailing_grids: Vec::new() }
    }

    pub fn uniform(dim: usize) -> Self {
        assert!(dim >= 1, "density dimension must be positive");
        // No variable influences the density, so every weight is zero.
        Self::with_family(dim, Family::Uniform, Some(vec![T::zero(); dim]))
    }

    /// `f(y) = 1 + Σ c_j y_j`; requires `Σ|c_j| < 1`.
    pub fn linear(c: Vec<T>) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::InvalidArgument("linear density needs at least one coefficient".into()));
        }
        let l1 = c.iter().fold(T::zero(), |a, v| a + v.abs());
        if !(l1 < T::one()) {
            return Err(Error::InvalidArgument(format!(
                "linear density requires sum |c_j| < 1 for positivity, got {l1}"
            )));
        }
        let b = c.iter().map(|v| v.abs()).collect();
        Ok(Self::with_family(c.len(), Family::Linear { c }, Some(b)))
    }

    /// Linear density with `c_j = amplitude · j^{-decay}`, `j = 1..=dim`.
    pub fn linear_decay(amplitude: T, decay: T, dim: usize) -> Result<Self> {
        let c = (1..=dim).map(|j| amplitude * T::of_usize(j).powf(-decay)).collect();
        Self::linear(c)
    }

    /// Posterior under a linear forward map with Gaussian noise and a uniform
    /// prior. Normalized on a `40^d` tensor grid; marginals by quadrature.
    pub fn gaussian_posterior(forward: Vec<Vec<T>>, data: Vec<T>, sigma: T) -> Result<Self> {
        if !(sigma > T::zero()) {
            return Err(Error::InvalidArgument(format!("noise level must be positive, got {sigma}")));
        }
        if forward.is_empty() || forward.len() != data.len() {
            return Err(Error::InvalidArgument("forward map rows must match data length".into()));
        }
        let dim = forward[0].len();
        if dim == 0 || forward.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidArgument("forward map rows must have a common positive length".into()));
        }
        if dim > MAX_QUADRATURE_DIM {
            return Err(Error::DimensionTooLarge { dim, limit: MAX_QUADRATURE_DIM });
        }
        let b: Vec<T> = (0..dim)
            .map(|j| forward.iter().fold(T::zero(), |a, r| a + r[j] * r[j]).sqrt())
            .collect();
        let grid = TensorGrid::uniform(dim, NORMALIZATION_ORDER);
        let z = grid.integrate(|y| (-misfit(&forward, &data, sigma, y)).exp())?;
        if !(z > T::zero()) || !z.is_finite() {
            return Err(Error::NonFinite("posterior normalization constant"));
        }
        let family = Family::GaussianPosterior { forward, data, sigma, log_norm: z.ln() };
        let mut d = Self::with_family(dim, family, Some(b));
        d.set_marginal_order(default_marginal_order(dim));
        Ok(d)
    }

    /// A normalized density given by a closure; marginals by quadrature.
    pub fn custom(dim: usize, name: impl Into<String>, f: DensityFn<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("density dimension must be positive".into()));
        }
        if dim > MAX_QUADRATURE_DIM {
            return Err(Error::DimensionTooLarge { dim, limit: MAX_QUADRATURE_DIM });
        }
        let mut d = Self::with_family(dim, Family::Custom { name: name.into(), f }, None);
        d.set_marginal_order(default_marginal_order(dim));
        Ok(d)
    }

    pub fn with_anisotropy(mut self, b: Vec<T>) -> Result<Self> {
        if b.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: b.len() });
        }
        self.anisotropy = Some(b);
        Ok(self)
    }

    /// Per-dimension order of the quadrature used for marginals. Ignored by
    /// families with closed-form marginals.
    pub fn with_marginal_order(mut self, n: usize) -> Self {
        if !self.has_marginal_oracle() {
            self.set_marginal_order(n);
        }
        self
    }

    fn set_marginal_order(&mut self, n: usize) {
        self.trailing_grids = (0..=self.dim).map(|m| TensorGrid::uniform(m, n.max(1))).collect();
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &Family<T> {
        &self.family
    }

    pub fn family_name(&self) -> &str {
        match &self.family {
            Family::Uniform => "uniform",
            Family::Linear { .. } => "linear",
            Family::GaussianPosterior { .. } => "gaussian_posterior",
            Family::Custom { name, .. } => name,
        }
    }

    /// Anisotropy weights `b_j`, when the family provides them.
    pub fn anisotropy(&self) -> Option<&[T]> {
        self.anisotropy.as_deref()
    }

    /// For the linear family, `α = (1 − Σ|c_j|)/d`: the largest `α` for which
    /// `1 + Σ c_j z_j` stays nonzero when every `z_j` ranges over the complex
    /// `α/|c_j|`-neighbourhood of `[-1,1]`. `None` for other families.
    pub fn holomorphy_alpha(&self) -> Option<T> {
        match &self.family {
            Family::Linear { c } => {
                let l1 = c.iter().fold(T::zero(), |a, v| a + v.abs());
                Some((T::one() - l1) / T::of_usize(c.len()))
            }
            _ => None,
        }
    }

    pub fn has_marginal_oracle(&self) -> bool {
        matches!(self.family, Family::Uniform | Family::Linear { .. })
    }

    pub fn marginal_order(&self) -> Option<usize> {
        self.trailing_grids.get(1).map(|g| g.rule(0).len())
    }

    /// `f(x)`; `x` must have length `dim`.
    pub fn evaluate(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.dim);
        match &self.family {
            Family::Uniform => T::one(),
            Family::Linear { c } => c.iter().zip(x).fold(T::one(), |a, (cj, xj)| a + *cj * *xj),
            Family::GaussianPosterior { forward, data, sigma, log_norm } => {
                (-misfit(forward, data, *sigma, x) - *log_norm).exp()
            }
            Family::Custom { f, .. } => f(x),
        }
    }

    /// `f̂_k(x)` for `x ∈ [-1,1]^k`, `0 ≤ k ≤ d`.
    pub fn marginal_hat(&self, k: usize, x: &[T]) -> Result<T> {
        self.check_prefix(k, x)?;
        match &self.family {
            Family::Uniform => Ok(T::one()),
            Family::Linear { c } => Ok(c[..k].iter().zip(x).fold(T::one(), |a, (cj, xj)| a + *cj * *xj)),
            _ => self.marginal_by_quadrature(k, x, &self.trailing_grids[self.dim - k]),
        }
    }

    /// `f̂_k(x)` by tensor quadrature of order `order` in each trailing
    /// coordinate, regardless of whether a closed form exists.
    pub fn marginal_hat_quadrature(&self, k: usize, x: &[T], order: usize) -> Result<T> {
        self.check_prefix(k, x)?;
        if self.dim > MAX_QUADRATURE_DIM {
            return Err(Error::DimensionTooLarge { dim: self.dim, limit: MAX_QUADRATURE_DIM });
        }
        let grid = TensorGrid::uniform(self.dim - k, order);
        self.marginal_by_quadrature(k, x, &grid)
    }

    fn marginal_by_quadrature(&self, k: usize, x: &[T], grid: &TensorGrid<T>) -> Result<T> {
        if k == self.dim {
            return Ok(self.evaluate(x));
        }
        let mut full = vec![T::zero(); self.dim];
        full[..k].copy_from_slice(x);
        grid.integrate(|tail| {
            full[k..].copy_from_slice(tail);
            self.evaluate(&full)
        })
    }

    /// Conditional density `f_k(x) = f̂_k(x) / f̂_{k-1}(x_{[k-1]})`, `1 ≤ k ≤ d`.
    pub fn conditional(&self, k: usize, x: &[T]) -> Result<T> {
        if k == 0 {
            return Err(Error::InvalidArgument("conditional densities are indexed from 1".into()));
        }
        let den = self.marginal_hat(k - 1, &x[..k - 1])?;
        if !(den > T::zero()) {
            return Err(Error::NonPositiveDensity(den.as_f64()));
        }
        Ok(self.marginal_hat(k, x)? / den)
    }

    fn check_prefix(&self, k: usize, x: &[T]) -> Result<()> {
        if k > self.dim {
            return Err(Error::InvalidArgument(format!("marginal index {k} exceeds dimension {}", self.dim)));
        }
        if x.len() != k {
            return Err(Error::DimensionMismatch { expected: k, got: x.len() });
        }
        Ok(())
    }
}

/// `t ↦ f̂_k(head, t)` for a fixed head `x_{[k-1]}`.
#[derive(Clone, Debug)]
pub enum MarginalSlice<'a, T: Real> {
    /// `base + slope·t`, exact for closed-form families.
    Affine { base: T, slope: T },
    Quadrature { density: &'a Density<T>, k: usize, head: Vec<T> },
}

impl<T: Real> MarginalSlice<'_, T> {
    pub fn eval(&self, t: T) -> Result<T> {
        match self {
            MarginalSlice::Affine { base, slope } => Ok(*base + *slope * t),
            MarginalSlice::Quadrature { density, k, head } => {
                let mut x = head.clone();
                x.push(t);
                density.marginal_hat(*k, &x)
            }
        }
    }

    /// Polynomial degree in `t`, when the slice is known to be polynomial.
    pub fn degree(&self) -> Option<usize> {
        match self {
            MarginalSlice::Affine { .. } => Some(1),
            MarginalSlice::Quadrature { .. } => None,
        }
    }
}

impl<T: Real> Density<T> {
    /// The slice `t ↦ f̂_k(head, t)`, `1 ≤ k ≤ d`, `head ∈ [-1,1]^{k-1}`.
    pub fn slice(&self, k: usize, head: &[T]) -> Result<MarginalSlice<'_, T>> {
        if k == 0 || k > self.dim {
            return Err(Error::InvalidArgument(format!("slice index {k} outside 1..={}", self.dim)));
        }
        if head.len() + 1 != k {
            return Err(Error::DimensionMismatch { expected: k - 1, got: head.len() });
        }
        Ok(match &self.family {
            Family::Uniform => MarginalSlice::Affine { base: T::one(), slope: T::zero() },
            Family::Linear { c } => MarginalSlice::Affine {
                base: c[..k - 1].iter().zip(head).fold(T::one(), |a, (cj, xj)| a + *cj * *xj),
                slope: c[k - 1],
            },
            _ => MarginalSlice::Quadrature { density: self, k, head: head.to_vec() },
        })
    }
}

fn misfit<T: Real>(forward: &[Vec<T>], data: &[T], sigma: T, y: &[T]) -> T {
    let ss = forward.iter().zip(data).fold(T::zero(), |acc, (row, d)| {
        let r = row.iter().zip(y).fold(-*d, |a, (aij, yj)| a + *aij * *yj);
        acc + r * r
    });
    ss / (T::lit(2.0) * sigma * sigma)
}

/// Serializable density description used in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Uniform {
        dim: usize,
    },
    Linear {
        c: Vec<f64>,
    },
    /// `c_j = amplitude · j^{-decay}` for `j = 1..=dim`.
    LinearDecay {
        amplitude: f64,
        decay: f64,
        dim: usize,
    },
    GaussianPosterior {
        forward: Vec<Vec<f64>>,
        data: Vec<f64>,
        sigma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        marginal_order: Option<usize>,
    },
}

impl DensitySpec {
    pub fn build<T: Real>(&self) -> Result<Density<T>> {
        let cast = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
        match self {
            DensitySpec::Uniform { dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidArgument("uniform density needs dim >= 1".into()));
                }
                Ok(Density::uniform(*dim))
            }
            DensitySpec::Linear { c } => Density::linear(cast(c)),
            DensitySpec::LinearDecay { amplitude, decay, dim } => {
                Density::linear_decay(T::lit(*amplitude), T::lit(*decay), *dim)
            }
            DensitySpec::GaussianPosterior { forward, data, sigma, marginal_order } => {
                let d = Density::gaussian_posterior(forward.iter().map(|r| cast(r)).collect(), cast(data), T::lit(*sigma))?;
                Ok(match marginal_order {
                    Some(n) => d.with_marginal_order(*n),
                    None => d,
                })
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DensitySpec::Uniform { dim } | DensitySpec::LinearDecay { dim, .. } => *dim,
            DensitySpec::Linear { c } => c.len(),
            DensitySpec::GaussianPosterior { forward, .. } => forward.first().map_or(0, Vec::len),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::QuadratureRule;
    use crate::rng::SeededRng;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_is_one() {
        let u = Density::<f64>::uniform(3);
        assert_eq!(u.evaluate(&[0.1, -0.4, 0.9]), 1.0);
        assert_eq!(u.marginal_hat(2, &[0.3, 0.2]).unwrap(), 1.0);
        assert_eq!(u.conditional(3, &[0.3, 0.2, -0.1]).unwrap(), 1.0);
        let total = TensorGrid::uniform(3, 2).integrate(|x| u.evaluate(x)).unwrap();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn linear_examples() {
        let f = Density::linear(vec![0.3, 0.2]).unwrap();
        assert_abs_diff_eq!(f.evaluate(&[1.0, 1.0]), 1.5);
        assert_abs_diff_eq!(f.marginal_hat(1, &[0.5]).unwrap(), 1.15);
        assert_abs_diff_eq!(f.marginal_hat(0, &[]).unwrap(), 1.0);
        assert_abs_diff_eq!(f.conditional(2, &[0.5, -1.0]).unwrap(), 0.95 / 1.15, epsilon = 1e-15);
        assert_abs_diff_eq!(f.conditional(2, &[0.5, -1.0]).unwrap(), 0.826_087_0, epsilon = 1e-7);
        let total = TensorGrid::uniform(2, 2).integrate(|x| f.evaluate(x)).unwrap();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
        assert_eq!(f.anisotropy().unwrap(), &[0.3, 0.2]);
        assert_abs_diff_eq!(f.holomorphy_alpha().unwrap(), 0.25, epsilon = 1e-15);
        assert!(Density::<f64>::uniform(2).holomorphy_alpha().is_none());
    }

    #[test]
    fn linear_rejects_nonpositive() {
        assert!(Density::linear(vec![0.6, -0.4]).is_err());
        assert!(Density::<f64>::linear(vec![]).is_err());
    }

    #[test]
    fn gaussian_posterior_flat_and_1d() {
        let flat = Density::gaussian_posterior(vec![vec![0.0, 0.0]], vec![0.3], 1.0).unwrap();
        assert_abs_diff_eq!(flat.evaluate(&[0.2, -0.7]), 1.0, epsilon = 1e-14);

        let g = Density::gaussian_posterior(vec![vec![1.0]], vec![0.0], 1.0).unwrap();
        let Family::GaussianPosterior { log_norm, .. } = g.family() else { unreachable!() };
        let log_norm: f64 = *log_norm;
        // Z = (1/2)∫_{-1}^1 e^{-t²/2} dt = √(π/2)·erf(1/√2)
        let erf_inv_sqrt2 = 0.682_689_492_137_085_9;
        let z = (std::f64::consts::PI / 2.0).sqrt() * erf_inv_sqrt2;
        assert_abs_diff_eq!(log_norm.exp(), z, epsilon = 1e-14);
        assert_abs_diff_eq!(log_norm.exp(), 0.855_624_3, epsilon = 1e-7);
        assert_abs_diff_eq!(g.evaluate(&[0.4]), (-0.08f64).exp() / z, epsilon = 1e-14);
    }

    #[test]
    fn gaussian_posterior_symmetry_and_mass() {
        let g = Density::gaussian_posterior(vec![vec![1.0, 0.5], vec![-0.3, 2.0]], vec![0.0, 0.0], 0.8).unwrap();
        let mut rng = SeededRng::new(3);
        for _ in 0..100 {
            let x = rng.cube_point(2);
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            assert_abs_diff_eq!(g.evaluate(&x), g.evaluate(&neg), epsilon = 1e-14);
            assert!(g.evaluate(&x) > 0.0);
        }
        assert_abs_diff_eq!(g.marginal_hat(0, &[]).unwrap(), 1.0, epsilon = 1e-10);
        assert_eq!(g.anisotropy().unwrap().len(), 2);
        assert_abs_diff_eq!(g.anisotropy().unwrap()[0], (1.09f64).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn conditional_integrates_to_one() {
        let rule = QuadratureRule::<f64>::gauss_legendre(40);
        let lin = Density::linear(vec![0.3, -0.2, 0.25]).unwrap();
        let post = Density::gaussian_posterior(vec![vec![1.0, 0.5, 0.2], vec![0.0, 1.0, -0.7]], vec![0.2, -0.1], 0.7).unwrap();
        let mut rng = SeededRng::new(11);
        for _ in 0..50 {
            for (f, tol) in [(&lin, 1e-10), (&post, 1e-7)] {
                for k in 1..=3 {
                    let head = rng.cube_point(k - 1);
                    let mass = rule.integrate(|t| {
                        let mut x = head.clone();
                        x.push(t);
                        f.conditional(k, &x).unwrap()
                    });
                    assert_abs_diff_eq!(mass, 1.0, epsilon = tol);
                }
            }
        }
    }

    #[test]
    fn oracle_matches_quadrature() {
        let f = Density::linear(vec![0.3, -0.2, 0.1, 0.25]).unwrap();
        let mut rng = SeededRng::new(5);
        for k in 0..=4 {
            let x = rng.cube_point(k);
            let a = f.marginal_hat(k, &x).unwrap();
            let b = f.marginal_hat_quadrature(k, &x, 3).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn custom_dimension_cap() {
        let f: DensityFn<f64> = Arc::new(|_| 1.0);
        assert!(matches!(Density::custom(6, "flat", f.clone()), Err(Error::DimensionTooLarge { .. })));
        let d = Density::custom(2, "flat", f).unwrap();
        assert_abs_diff_eq!(d.conditional(2, &[0.1, 0.2]).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn spec_round_trip() {
        let json = r#"{"family":"linear","c":[0.3,0.2]}"#;
        let spec: DensitySpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.dim(), 2);
        let d: Density<f64> = spec.build().unwrap();
        assert_eq!(d.family_name(), "linear");
        assert!(serde_json::from_str::<DensitySpec>(r#"{"family":"linear","c":[0.1],"x":1}"#).is_err());
        let decay: Density<f64> = DensitySpec::LinearDecay { amplitude: 0.3, decay: 3.0, dim: 4 }.build().unwrap();
        assert_abs_diff_eq!(decay.anisotropy().unwrap()[1], 0.3 / 8.0, epsilon = 1e-16);
    }
}
