//! Anisotropic multi-index sets `Λ_{k,ε} = {ν ∈ ℕ₀^k : γ(ξ, ν) ≥ ε}` with
//!
//! ```text
//! γ(ξ, ν) = ξ_k^{-max(1, ν_k)} · Π_{j<k} ξ_j^{-ν_j}
//! ```
//!
//! `γ` is nonincreasing in every `ν_j`, so the sets are downward closed and
//! can be enumerated by a pruned depth-first search.

use serde::{Deserialize, Serialize};

use crate::polybasis::MultiIndex;
use crate::{Error, Real, Result};

/// Per-coordinate weights `ξ_j > 1`. `ξ_j = +∞` is allowed and marks a
/// variable with no influence (it never enters any index set).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector<T>(Vec<T>);

impl<T: Real> WeightVector<T> {
    pub fn new(xi: Vec<T>) -> Result<Self> {
        if let Some(bad) = xi.iter().find(|v| !(**v > T::one())) {
            return Err(Error::InvalidArgument(format!("weights must exceed 1, got {bad}")));
        }
        Ok(Self(xi))
    }

    /// `ξ_j = 1 + α/b_j`. A zero `b_j` gives `ξ_j = ∞`.
    pub fn from_anisotropy(b: &[T], alpha: T) -> Result<Self> {
        if !(alpha > T::zero()) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        if let Some(bad) = b.iter().find(|v| !(**v >= T::zero())) {
            return Err(Error::InvalidArgument(format!("anisotropy weights must be nonnegative, got {bad}")));
        }
        Self::new(b.iter().map(|&bj| T::one() + alpha / bj).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    /// The leading `k` weights `ξ_{[k]}`.
    pub fn head(&self, k: usize) -> Self {
        Self(self.0[..k].to_vec())
    }
}

/// Free-function form of [`WeightVector::from_anisotropy`].
pub fn xi_from_anisotropy<T: Real>(b: &[T], alpha: T) -> Result<WeightVector<T>> {
    WeightVector::from_anisotropy(b, alpha)
}

/// `γ(ξ, ν)` with `k = ξ.len()`; `ν` may be shorter than `k`.
pub fn gamma<T: Real>(xi: &WeightVector<T>, nu: &MultiIndex) -> T {
    let k = xi.len();
    debug_assert!(nu.len() <= k);
    if k == 0 {
        return T::one();
    }
    let xi = xi.as_slice();
    let mut g = xi[k - 1].powi(-(nu.get(k - 1).max(1) as i32));
    for (j, x) in xi[..k - 1].iter().enumerate() {
        let v = nu.get(j);
        if v > 0 {
            g = g * x.powi(-(v as i32));
        }
    }
    g
}

/// The members of `Λ_{k,ε}`, graded-lex ordered.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexSet<T> {
    pub k: usize,
    pub epsilon: T,
    #[serde(rename = "nus")]
    members: Vec<MultiIndex>,
}

impl<T: Real> IndexSet<T> {
    /// Wraps an explicit list of members (sorted and deduplicated).
    pub fn from_members(k: usize, epsilon: T, mut members: Vec<MultiIndex>) -> Result<Self> {
        if let Some(nu) = members.iter().find(|nu| nu.len() > k) {
            return Err(Error::DimensionMismatch { expected: k, got: nu.len() });
        }
        members.sort();
        members.dedup();
        Ok(Self { k, epsilon, members })
    }

    pub fn members(&self) -> &[MultiIndex] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, nu: &MultiIndex) -> bool {
        self.members.binary_search(nu).is_ok()
    }

    /// Largest `ν_j` over the set, per coordinate.
    pub fn max_degrees(&self) -> Vec<usize> {
        (0..self.k)
            .map(|j| self.members.iter().map(|nu| nu.get(j) as usize).max().unwrap_or(0))
            .collect()
    }

    /// Every `η ≤ ν` of every member is a member.
    pub fn is_downward_closed(&self) -> bool {
        self.members.iter().all(|nu| {
            (0..nu.len()).all(|j| nu.get(j) == 0 || self.contains(&nu.with(j, nu.get(j) - 1)))
        })
    }
}

/// Enumerates `Λ_{k,ε}` for `k = ξ.len()` by depth-first search over
/// coordinates, pruning as soon as `γ` of the partial index drops below `ε`.
pub fn enumerate_lambda<T: Real>(xi: &WeightVector<T>, epsilon: T) -> Result<IndexSet<T>> {
    if !(epsilon > T::zero() && epsilon < T::one()) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    let k = xi.len();
    let mut members = Vec::new();
    if k > 0 {
        let mut nu = vec![0u32; k];
        descend(xi, epsilon, 0, &mut nu, &mut members);
    }
    IndexSet::from_members(k, epsilon, members)
}

fn descend<T: Real>(xi: &WeightVector<T>, eps: T, j: usize, nu: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    let k = nu.len();
    loop {
        let candidate = MultiIndex::new(nu.clone());
        if gamma(xi, &candidate) < eps {
            break;
        }
        if j + 1 == k {
            out.push(candidate);
        } else {
            descend(xi, eps, j + 1, nu, out);
        }
        nu[j] += 1;
    }
    nu[j] = 0;
}

/// `(1 - log ε / log ξ_min)^k`.
pub fn cardinality_bound_simple<T: Real>(xi: &WeightVector<T>, epsilon: T) -> T {
    let xi_min = xi.as_slice().iter().copied().fold(T::infinity(), T::min);
    (T::one() - epsilon.ln() / xi_min.ln()).powi(xi.len() as i32)
}

/// `(1/k!)·(-log ε + Σ_j log ξ_j)^k · Π_j 1/log ξ_j`.
pub fn cardinality_bound_sharp<T: Real>(xi: &WeightVector<T>, epsilon: T) -> T {
    let k = xi.len();
    let logs: Vec<T> = xi.as_slice().iter().map(|x| x.ln()).collect();
    let s = logs.iter().fold(-epsilon.ln(), |a, l| a + *l);
    // Accumulate s^k / (k! Π log ξ_j) factor by factor to avoid overflow.
    (0..k).fold(T::one(), |acc, j| acc * s / (T::of_usize(j + 1) * logs[j]))
}
