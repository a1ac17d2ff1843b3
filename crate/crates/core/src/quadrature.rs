//! Gauss–Legendre rules and tensor-product grids.
//!
//! Weights are normalized to the probability measure `μ = λ/2` on `[-1,1]`,
//! i.e. they are the textbook Gauss–Legendre weights divided by two and sum
//! to one. Integrals against Lebesgue measure on a subinterval go through
//! [`QuadratureRule::integrate_interval`].

use rayon::prelude::*;

use crate::{Error, Real, Result};

/// An `n`-point rule on `[-1,1]` for the measure `μ`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> QuadratureRule<T> {
    /// Gauss–Legendre rule with `n` nodes, exact for polynomials of degree
    /// `≤ 2n-1`.
    ///
    /// Nodes are found by Newton's method on the three-term recurrence,
    /// started from the cosine approximation of the roots.
    ///
    /// # Panics
    /// If `n == 0`.
    pub fn gauss_legendre(n: usize) -> Self {
        assert!(n > 0, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = T::of_usize(n);
        let tol = T::solver_eps();
        let pi = T::lit(std::f64::consts::PI);
        for i in 0..n.div_ceil(2) {
            // i = 0 is the largest root.
            let mut x = (pi * (T::of_usize(i) + T::lit(0.75)) / (nf + T::lit(0.5))).cos();
            let mut dp = T::one();
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x = x - dx;
                if dx.abs() <= tol {
                    break;
                }
            }
            let (_, d) = legendre_and_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = T::one() / ((T::one() - x * x) * dp * dp);
            if 2 * i + 1 == n {
                nodes[i] = T::zero();
                weights[i] = w;
            } else {
                nodes[i] = -x;
                nodes[n - 1 - i] = x;
                weights[i] = w;
                weights[n - 1 - i] = w;
            }
        }
        Self { nodes, weights }
    }

    /// Composite rule: `[-1,1]` split into `pieces` equal subintervals, each
    /// carrying an `n`-point Gauss–Legendre rule. Used for integrands with
    /// kinks (absolute values) where a single global rule is biased.
    pub fn composite(n: usize, pieces: usize) -> Self {
        assert!(pieces > 0, "composite rule needs at least one piece");
        let base = Self::gauss_legendre(n);
        let pf = T::of_usize(pieces);
        let mut nodes = Vec::with_capacity(n * pieces);
        let mut weights = Vec::with_capacity(n * pieces);
        for p in 0..pieces {
            let a = -T::one() + T::lit(2.0) * T::of_usize(p) / pf;
            let b = -T::one() + T::lit(2.0) * T::of_usize(p + 1) / pf;
            for (x, w) in base.nodes.iter().zip(&base.weights) {
                nodes.push(a + (b - a) * (*x + T::one()) / T::lit(2.0));
                weights.push(*w / pf);
            }
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// `∫ f dμ` over `[-1,1]`.
    pub fn integrate(&self, mut f: impl FnMut(T) -> T) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (x, w)| acc + *w * f(*x))
    }

    /// Node `i` mapped affinely from `[-1,1]` onto `[a,b]`.
    #[inline]
    pub fn mapped_node(&self, i: usize, a: T, b: T) -> T {
        a + (b - a) * (self.nodes[i] + T::one()) / T::lit(2.0)
    }

    /// `∫_a^b f(t) dt` against Lebesgue measure.
    pub fn integrate_interval(&self, a: T, b: T, mut f: impl FnMut(T) -> T) -> T {
        let mut acc = T::zero();
        for i in 0..self.len() {
            acc = acc + self.weights[i] * f(self.mapped_node(i, a, b));
        }
        acc * (b - a)
    }
}

/// `(P_n(x), P_n'(x))` for the classical Legendre polynomial, `|x| < 1`.
fn legendre_and_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if n == 0 {
        return (T::one(), T::zero());
    }
    for j in 2..=n {
        let jf = T::of_usize(j);
        let p2 = ((T::lit(2.0) * jf - T::one()) * x * p1 - (jf - T::one()) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::of_usize(n);
    let dp = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, dp)
}

/// Tensor product of one-dimensional rules. A zero-dimensional grid has a
/// single (empty) node of weight one.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorGrid<T> {
    rules: Vec<QuadratureRule<T>>,
}

impl<T: Real> TensorGrid<T> {
    pub fn new(rules: Vec<QuadratureRule<T>>) -> Self {
        Self { rules }
    }

    /// `d` copies of the `n`-point Gauss–Legendre rule.
    pub fn uniform(d: usize, n: usize) -> Self {
        let rule = QuadratureRule::gauss_legendre(n);
        Self { rules: vec![rule; d] }
    }

    /// Gauss–Legendre grid with per-dimension orders.
    pub fn with_orders(orders: &[usize]) -> Self {
        Self { rules: orders.iter().map(|&n| QuadratureRule::gauss_legendre(n)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.rules.len()
    }

    pub fn rules(&self) -> &[QuadratureRule<T>] {
        &self.rules
    }

    pub fn rule(&self, j: usize) -> &QuadratureRule<T> {
        &self.rules[j]
    }

    pub fn orders(&self) -> Vec<usize> {
        self.rules.iter().map(QuadratureRule::len).collect()
    }

    /// Number of nodes, or `None` on overflow.
    pub fn checked_len(&self) -> Option<usize> {
        self.rules.iter().try_fold(1usize, |acc, r| acc.checked_mul(r.len()))
    }

    pub fn len(&self) -> usize {
        self.checked_len().expect("tensor grid size overflows usize")
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes node `idx` into `out` (first dimension varies slowest) and
    /// returns its weight.
    pub fn node(&self, mut idx: usize, out: &mut [T]) -> T {
        let mut w = T::one();
        for j in (0..self.rules.len()).rev() {
            let r = &self.rules[j];
            let i = idx % r.len();
            idx /= r.len();
            out[j] = r.nodes[i];
            w = w * r.weights[i];
        }
        w
    }

    /// Tensor-product quadrature of `f` against `μ^d`. Non-finite values
    /// of `f` are reported as an error rather than summed.
    pub fn integrate(&self, mut f: impl FnMut(&[T]) -> T) -> Result<T> {
        let mut x = vec![T::zero(); self.dim()];
        let mut acc = T::zero();
        for idx in 0..self.len() {
            let w = self.node(idx, &mut x);
            let v = f(&x);
            if !v.is_finite() {
                return Err(Error::NonFinite("tensor quadrature integrand"));
            }
            acc = acc + w * v;
        }
        Ok(acc)
    }

    /// Evaluates `f` at every node in parallel; results are in node order.
    pub fn map_nodes<R, F>(&self, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(&[T]) -> R + Sync,
    {
        let d = self.dim();
        (0..self.len())
            .into_par_iter()
            .map_init(
                || vec![T::zero(); d],
                |x, idx| {
                    self.node(idx, x);
                    f(x)
                },
            )
            .collect()
    }

    /// All node weights in node order.
    pub fn weights(&self) -> Vec<T> {
        let mut x = vec![T::zero(); self.dim()];
        (0..self.len()).map(|i| self.node(i, &mut x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn one_point_rule_is_midpoint() {
        let r = QuadratureRule::<f64>::gauss_legendre(1);
        assert_eq!(r.nodes(), &[0.0]);
        assert_abs_diff_eq!(r.weights()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn two_point_rule() {
        let r = QuadratureRule::<f64>::gauss_legendre(2);
        let s = 1.0 / 3f64.sqrt();
        assert_abs_diff_eq!(r.nodes()[0], -s, epsilon = 1e-15);
        assert_abs_diff_eq!(r.nodes()[1], s, epsilon = 1e-15);
        assert_abs_diff_eq!(r.weights()[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r.integrate(|x| x * x), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn five_point_eighth_moment() {
        let r = QuadratureRule::<f64>::gauss_legendre(5);
        assert_abs_diff_eq!(r.integrate(|x| x.powi(8)), 1.0 / 9.0, epsilon = 1e-14);
    }

    #[test]
    fn exact_up_to_degree_2n_minus_1() {
        for n in 1..=40 {
            let r = QuadratureRule::<f64>::gauss_legendre(n);
            let total: f64 = r.weights().iter().sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-14);
            assert!(r.weights().iter().all(|w| *w > 0.0));
            assert!(r.nodes().windows(2).all(|p| p[0] < p[1]));
            for p in 0..2 * n {
                let exact = if p % 2 == 1 { 0.0 } else { 1.0 / (p as f64 + 1.0) };
                assert_abs_diff_eq!(r.integrate(|x| x.powi(p as i32)), exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn high_order_rule_is_stable() {
        let r = QuadratureRule::<f64>::gauss_legendre(200);
        let total: f64 = r.weights().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(r.integrate(|x| x.powi(100)), 1.0 / 101.0, epsilon = 1e-14);
    }

    #[test]
    fn single_precision_rule() {
        let r = QuadratureRule::<f32>::gauss_legendre(6);
        let total: f32 = r.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-6);
        assert!((r.integrate(|x| x.powi(4)) - 0.2).abs() < 1e-6);
    }

    #[test]
    fn interval_integration() {
        let r = QuadratureRule::<f64>::gauss_legendre(4);
        // ∫_{-1}^{0.5} (1 + x/2) dx = 1.5 + (0.25 - 1)/4
        let v = r.integrate_interval(-1.0, 0.5, |t| 1.0 + t / 2.0);
        assert_abs_diff_eq!(v, 1.5 - 0.1875, epsilon = 1e-15);
    }

    #[test]
    fn composite_rule_weights_and_kink() {
        let r = QuadratureRule::<f64>::composite(5, 4);
        assert_eq!(r.len(), 20);
        let total: f64 = r.weights().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-14);
        // |x| has its kink on a piece boundary, so the composite rule is exact.
        assert_abs_diff_eq!(r.integrate(f64::abs), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn tensor_integrals() {
        let g = TensorGrid::<f64>::uniform(2, 4);
        assert_abs_diff_eq!(g.integrate(|_| 1.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.integrate(|x| x[0] * x[1]).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.integrate(|x| x[0] * x[0]).unwrap(), 1.0 / 3.0, epsilon = 1e-14);
        let total: f64 = g.weights().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tensor_mixed_orders_and_node_layout() {
        let g = TensorGrid::<f64>::with_orders(&[2, 3, 1]);
        assert_eq!(g.len(), 6);
        let mut x = [0.0; 3];
        g.node(0, &mut x);
        assert_eq!(x[2], 0.0);
        assert!(x[0] < 0.0 && x[1] < 0.0);
        let vals = g.map_nodes(|x| x[1]);
        assert_eq!(vals.len(), 6);
        assert_abs_diff_eq!(g.integrate(|x| x[1].powi(4) * x[0].powi(2)).unwrap(), 0.2 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_dimensional_grid() {
        let g = TensorGrid::<f64>::new(vec![]);
        assert_eq!(g.len(), 1);
        assert_eq!(g.integrate(|x| x.len() as f64 + 2.0).unwrap(), 2.0);
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let g = TensorGrid::<f64>::uniform(1, 3);
        assert!(matches!(g.integrate(|_| f64::NAN), Err(Error::NonFinite(_))));
    }

    proptest! {
        /// An `n`-point rule integrates every polynomial of degree `≤ 2n−1`.
        #[test]
        fn gauss_rule_exact_for_polynomials(n in 1usize..25, coeffs in prop::collection::vec(-1.0f64..1.0, 1..50)) {
            let coeffs = &coeffs[..coeffs.len().min(2 * n)];
            let r = QuadratureRule::<f64>::gauss_legendre(n);
            let approx = r.integrate(|x| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c));
            // ∫ x^k dμ = 1/(k+1) for even k, 0 for odd k.
            let exact: f64 = coeffs.iter().enumerate().filter(|(k, _)| k % 2 == 0).map(|(k, c)| c / (k + 1) as f64).sum();
            prop_assert!((approx - exact).abs() <= 1e-13, "n={} err={}", n, approx - exact);
        }
    }
}
