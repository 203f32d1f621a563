//! Gauss–Legendre rules on [-1, 1] with weights normalised to the uniform
//! probability measure, so `rule.expect(f)` is `E[f(U)]`, `U ~ Unif[-1, 1]`.

use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct Rule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1] (weights sum to 2).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

impl<T: Real> Rule<T> {
    /// Composite rule: `panels` equal panels, `order`-point Gauss–Legendre on each.
    pub fn composite(panels: usize, order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let h = 2.0 / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let a = -1.0 + p as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(T::lit(a + 0.5 * h * (xi + 1.0)));
                // half-width times panel jacobian; divide by 2 for the uniform density
                weights.push(T::lit(0.25 * h * wi));
            }
        }
        Self { nodes, weights }
    }

    /// Composite rule with `total` nodes split into 4-point panels.
    pub fn with_nodes(total: usize) -> Self {
        assert!(total >= 4 && total.is_multiple_of(4), "node count must be a positive multiple of 4");
        Self::composite(total / 4, 4)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn expect(&self, mut f: impl FnMut(T) -> T) -> T {
        self.nodes.iter().zip(&self.weights).fold(T::zero(), |acc, (&x, &w)| acc + w * f(x))
    }

    pub fn expect2(&self, mut f: impl FnMut(T, T) -> T) -> T {
        let mut acc = T::zero();
        for (&x, &wx) in self.nodes.iter().zip(&self.weights) {
            let inner = self.expect(|y| f(x, y));
            acc = acc + wx * inner;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_degree_2n_minus_1() {
        let (x, w) = gauss_legendre(5);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // ∫ x^8 = 2/9
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((i - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn composite_rule_expectations() {
        let r = Rule::<f64>::with_nodes(64);
        assert_eq!(r.len(), 64);
        assert!((r.expect(|x| -3.0 * x * x) + 1.0).abs() < 1e-14);
        let e = r.expect(|x| (std::f64::consts::PI * x).cos().powi(2));
        assert!((e - 0.5).abs() < 1e-12);
        assert!(r.expect2(|x, y| x * y).abs() < 1e-15);
    }
}
