//! Gauss–Legendre rules and adaptive integration on intervals.

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Newton iteration on P_n from the Chebyshev-like initial guess
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            // map [-1, 1] -> [0, 1]
            nodes[i] = 0.5 * (1.0 - z);
            nodes[n - 1 - i] = 0.5 * (1.0 + z);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫_a^b f`.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let h = b - a;
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(a + h * t)).sum::<f64>() * h
    }

    /// `∫_0^1 f`.
    pub fn integrate_unit(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let dp = n * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

/// Adaptive bisection with a 7-point rule, stopping when the two-panel
/// estimate agrees with the one-panel estimate to within `tol`.
pub fn adaptive_integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let rule = GaussLegendre::new(7);
    let whole = rule.integrate(a, b, f);
    adaptive_step(&rule, f, a, b, whole, tol, 48)
}

fn adaptive_step(rule: &GaussLegendre, f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = rule.integrate(a, m, f);
    let right = rule.integrate(m, b, f);
    if depth == 0 || (left + right - whole).abs() <= tol {
        return left + right;
    }
    adaptive_step(rule, f, a, m, left, 0.5 * tol, depth - 1) + adaptive_step(rule, f, m, b, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        for n in 1..=12 {
            let g = GaussLegendre::new(n);
            let s: f64 = g.weights().iter().sum();
            assert!((s - 1.0).abs() < 1e-14, "n = {n}: {s}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        for n in 1..=8 {
            let g = GaussLegendre::new(n);
            for deg in 0..(2 * n) {
                let v = g.integrate(0.0, 2.0, |x| x.powi(deg as i32));
                let exact = 2f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
                assert!((v - exact).abs() < 1e-12 * exact.max(1.0), "n = {n} deg = {deg}");
            }
        }
    }

    #[test]
    fn two_point_nodes() {
        let g = GaussLegendre::new(2);
        let r = 0.5 / 3f64.sqrt();
        assert!((g.nodes()[0] - (0.5 - r)).abs() < 1e-15);
        assert!((g.nodes()[1] - (0.5 + r)).abs() < 1e-15);
    }

    #[test]
    fn adaptive_matches_arctan() {
        let v = adaptive_integrate(&|t| t * t / (1.0 + t * t), 0.0, 2.0, 1e-12);
        assert!((v - (2.0 - 2f64.atan())).abs() < 1e-11);
        let kink = adaptive_integrate(&|t: f64| t.abs(), -1.0, 3.0, 1e-12);
        assert!((kink - 5.0).abs() < 1e-10);
    }
}
