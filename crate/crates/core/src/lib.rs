//! # krmap
//!
//! Knothe–Rosenblatt (KR) transports between positive densities on the
//! hypercube `[-1,1]^d`, and their approximation by monotone rational maps
//! built from sparse Legendre expansions over anisotropic, downward-closed
//! index sets.
//!
//! All integrals are taken against the uniform probability measure
//! `μ = λ/2` per coordinate, so densities are densities w.r.t. `μ`
//! (the uniform density is the constant `1`).
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`quadrature`] | Gauss–Legendre rules and tensor grids normalized to `μ` |
//! | [`polybasis`] | Orthonormal Legendre polynomials, multi-indices, sparse expansions |
//! | [`indexsets`] | Anisotropic weight `γ(ξ, ν)`, enumeration of `Λ_{k,ε}`, cardinality bounds |
//! | [`density`] | Density families with optional closed-form marginals |
//! | [`transport`] | Exact KR map, its inverse, diagonal derivatives, push/pull densities |
//! | [`approx`] | Monotone rational components `T̃_k` fitted by projection |
//! | [`metrics`] | Hellinger, TV, KL, W1 and determinant-stability diagnostics |
//! | [`studies`] | Convergence, truncation and posterior experiment drivers |
//!
//! The numerical core is generic over the scalar type through [`Real`]
//! (implemented for `f32` and `f64`). The aliases at the crate root fix the
//! scalar to `f64`, which is what the studies and the CLI use.
//!
//! ```
//! use krmap::density::Density;
//! use krmap::transport::{ExactTransport, TriangularMap};
//!
//! let reference = Density::<f64>::uniform(1);
//! let target = Density::linear(vec![0.5]).unwrap();
//! let map = ExactTransport::new(reference, target).unwrap();
//! let y = map.apply(&[0.0]).unwrap();
//! assert!((y[0] - (5f64.sqrt() - 2.0)).abs() < 1e-12);
//! ```

// Negated comparisons such as `!(x > 0)` are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod density;
pub mod indexsets;
pub mod metrics;
pub mod polybasis;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod studies;
pub mod transport;

mod error;
mod real;

pub use error::{Error, Result};
pub use real::Real;

pub type QuadratureRule1D = quadrature::QuadratureRule<f64>;
pub type TensorGrid = quadrature::TensorGrid<f64>;
pub type SparsePolynomial = polybasis::SparsePolynomial<f64>;
pub type WeightVector = indexsets::WeightVector<f64>;
pub type IndexSet = indexsets::IndexSet<f64>;
pub type Density = density::Density<f64>;
pub type ExactTransport = transport::ExactTransport<f64>;
pub type RationalComponent = approx::RationalComponent<f64>;
pub type ApproxTransport = approx::ApproxTransport<f64>;
pub type DistanceReport = metrics::DistanceReport<f64>;
