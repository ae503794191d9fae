//! Quadrature toolbox: Gauss-Legendre rules, affine maps, and composite
//! rules geometrically graded toward endpoint singularities.

use num_complex::Complex64;

/// Nodes and weights of a quadrature rule on some interval.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn integrate_complex<F: FnMut(f64) -> Complex64>(&self, mut f: F) -> Complex64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(Complex64::new(0.0, 0.0), |acc, (&x, &w)| acc + w * f(x))
    }

    /// Concatenate another rule's nodes and weights.
    pub fn extend(&mut self, other: QuadRule) {
        self.nodes.extend(other.nodes);
        self.weights.extend(other.weights);
    }
}

/// Gauss-Legendre rule with `n` nodes on (-1, 1).
///
/// Newton iteration on the Legendre recurrence; weights from the derivative
/// identity w_i = 2 / ((1 - x_i^2) P_n'(x_i)^2).
pub fn gauss_legendre(n: usize) -> QuadRule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Chebyshev-based initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_and_deriv(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    QuadRule { nodes, weights }
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped affinely to [a, b].
pub fn gauss_on(a: f64, b: f64, n: usize) -> QuadRule {
    let base = gauss_legendre(n);
    map_affine(&base, a, b)
}

fn map_affine(rule: &QuadRule, a: f64, b: f64) -> QuadRule {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    QuadRule {
        nodes: rule.nodes.iter().map(|&t| mid + half * t).collect(),
        weights: rule.weights.iter().map(|&w| w * half).collect(),
    }
}

/// Composite rule on [a, b] with panels shrinking geometrically toward `a`.
///
/// Handles integrands with an algebraic singularity x^alpha at the left
/// endpoint: each panel spans a fixed ratio in distance, so the integrand is
/// analytic-after-rescaling on every panel but the innermost sliver. The
/// grading depth is capped at 2^-40 of the span; distances below that are
/// not resolvable in the x variable without cancellation. For alpha >= 0 the
/// sliver carries negligible mass; for alpha < 0 prefer
/// [`integrate_endpoint_singular`], which completes the tail by ratio
/// extrapolation.
pub fn graded_toward(singular_end: f64, other_end: f64, panels: usize, per_panel: usize) -> QuadRule {
    let panels = panels.min(40);
    let base = gauss_legendre(per_panel);
    let ratio = 0.5f64;
    let mut rule = QuadRule {
        nodes: Vec::with_capacity(panels * per_panel + per_panel),
        weights: Vec::with_capacity(panels * per_panel + per_panel),
    };
    let span = other_end - singular_end; // signed
    let mut outer = 1.0;
    for _ in 0..panels {
        let inner = outer * ratio;
        let (lo, hi) = if span > 0.0 {
            (singular_end + span * inner, singular_end + span * outer)
        } else {
            (singular_end + span * outer, singular_end + span * inner)
        };
        rule.extend(map_affine(&base, lo, hi));
        outer = inner;
    }
    // innermost sliver, still open toward the singular end
    let (lo, hi) = if span > 0.0 {
        (singular_end, singular_end + span * outer)
    } else {
        (singular_end + span * outer, singular_end)
    };
    rule.extend(map_affine(&base, lo, hi));
    rule
}

/// Like [`graded_toward`] but without the closing sliver panel: the rule
/// stops at distance ratio^panels from the singular end. Callers complete
/// the remaining tail analytically.
pub fn graded_toward_open(
    singular_end: f64,
    other_end: f64,
    panels: usize,
    per_panel: usize,
) -> (QuadRule, f64) {
    let panels = panels.min(40);
    let base = gauss_legendre(per_panel);
    let ratio = 0.5f64;
    let mut rule = QuadRule {
        nodes: Vec::with_capacity(panels * per_panel),
        weights: Vec::with_capacity(panels * per_panel),
    };
    let span = other_end - singular_end;
    let mut outer = 1.0;
    for _ in 0..panels {
        let inner = outer * ratio;
        let (lo, hi) = if span > 0.0 {
            (singular_end + span * inner, singular_end + span * outer)
        } else {
            (singular_end + span * outer, singular_end + span * inner)
        };
        rule.extend(map_affine(&base, lo, hi));
        outer = inner;
    }
    (rule, span.abs() * outer)
}

/// Integrate f over the interval between the two endpoints (positive
/// orientation) where f has an algebraic singularity of unknown exponent
/// alpha > -1 at `singular_end`.
///
/// Geometric panels run down to 2^-26 of the span; the remaining tail is
/// completed by extrapolating the measured panel-to-panel ratio, which is
/// exact for pure powers and leaves only the O(distance) correction of the
/// integrand's deviation from its leading power at the cut depth.
pub fn integrate_endpoint_singular<F: FnMut(f64) -> f64>(
    singular_end: f64,
    other_end: f64,
    per_panel: usize,
    f: F,
) -> f64 {
    integrate_endpoint_singular_depth(singular_end, other_end, per_panel, 26, f)
}

/// [`integrate_endpoint_singular`] with explicit grading depth. Integrands
/// whose evaluation loses relative precision toward the endpoint (e.g.
/// symmetric differences against hypersingular kernels) need a shallower
/// depth; the measured-ratio tail still completes the remainder.
pub fn integrate_endpoint_singular_depth<F: FnMut(f64) -> f64>(
    singular_end: f64,
    other_end: f64,
    per_panel: usize,
    depth: usize,
    mut f: F,
) -> f64 {
    let base = gauss_legendre(per_panel);
    let span = other_end - singular_end;
    let ratio = 0.5f64;
    let mut outer = 1.0f64;
    let mut total = 0.0;
    let mut last_panels = [0.0f64; 2];
    for _ in 0..depth {
        let inner = outer * ratio;
        let (lo, hi) = (singular_end + span * inner, singular_end + span * outer);
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let mut panel = 0.0;
        for (&t, &w) in base.nodes.iter().zip(&base.weights) {
            panel += w * half * f(mid + half * t);
        }
        total += panel;
        last_panels = [last_panels[1], panel];
        outer = inner;
    }
    // tail completion from the measured geometric decay
    let (v0, v1) = (last_panels[0], last_panels[1]);
    if v0 != 0.0 && v1 != 0.0 {
        let rho = v1 / v0;
        if rho > 0.0 && rho < 0.999 {
            total += v1 * rho / (1.0 - rho);
        }
    }
    total
}

/// Composite rule on [a, b] graded toward both endpoints (split at the midpoint).
pub fn graded_both_ends(a: f64, b: f64, panels: usize, per_panel: usize) -> QuadRule {
    let mid = 0.5 * (a + b);
    let mut rule = graded_toward(a, mid, panels, per_panel);
    rule.extend(graded_toward(b, mid, panels, per_panel));
    rule
}

/// Complex-valued variant of [`integrate_endpoint_singular`].
pub fn integrate_endpoint_singular_complex<F: FnMut(f64) -> Complex64>(
    singular_end: f64,
    other_end: f64,
    per_panel: usize,
    f: F,
) -> Complex64 {
    integrate_endpoint_singular_complex_depth(singular_end, other_end, per_panel, 26, f)
}

/// Complex-valued variant with explicit grading depth.
pub fn integrate_endpoint_singular_complex_depth<F: FnMut(f64) -> Complex64>(
    singular_end: f64,
    other_end: f64,
    per_panel: usize,
    depth: usize,
    mut f: F,
) -> Complex64 {
    let base = gauss_legendre(per_panel);
    let span = other_end - singular_end;
    let ratio = 0.5f64;
    let mut outer = 1.0f64;
    let mut total = Complex64::new(0.0, 0.0);
    let mut last_panels = [Complex64::new(0.0, 0.0); 2];
    for _ in 0..depth {
        let inner = outer * ratio;
        let (lo, hi) = (singular_end + span * inner, singular_end + span * outer);
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let mut panel = Complex64::new(0.0, 0.0);
        for (&t, &w) in base.nodes.iter().zip(&base.weights) {
            panel += w * half * f(mid + half * t);
        }
        total += panel;
        last_panels = [last_panels[1], panel];
        outer = inner;
    }
    let (v0, v1) = (last_panels[0], last_panels[1]);
    if v0.norm() > 0.0 && v1.norm() > 0.0 {
        let rho = v1 / v0;
        if rho.norm() < 0.999 {
            // geometric tail: v1 * rho / (1 - rho)
            total += v1 * rho / (Complex64::new(1.0, 0.0) - rho);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(8);
        // degree up to 2n-1 = 15
        for k in (0..=14).step_by(2) {
            let exact = 2.0 / (k as f64 + 1.0);
            let got = rule.integrate(|x| x.powi(k));
            assert!((got - exact).abs() < 1e-13, "k={k}: {got} vs {exact}");
        }
        let odd = rule.integrate(|x| x.powi(7));
        assert!(odd.abs() < 1e-15);
    }

    #[test]
    fn gauss_weights_sum_to_length() {
        for n in [2, 5, 16, 64, 200] {
            let rule = gauss_legendre(n);
            let sum: f64 = rule.weights.iter().sum();
            assert!((sum - 2.0).abs() < 1e-12, "n={n}: {sum}");
            assert!(rule.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn endpoint_singular_integrator_handles_negative_exponents() {
        // integral of x^alpha over [0,1] = 1/(alpha+1)
        for alpha in [-0.85f64, -0.75, -0.5, -0.25, 0.3] {
            let got = integrate_endpoint_singular(0.0, 1.0, 12, |x| x.powf(alpha));
            let exact = 1.0 / (alpha + 1.0);
            assert!(
                (got - exact).abs() / exact.abs() < 1e-11,
                "alpha={alpha}: rel err {}",
                (got - exact).abs() / exact.abs()
            );
        }
        // non-pure-power integrand: x^(-1/2) (1 + x); exact = 2 + 2/3
        let got = integrate_endpoint_singular(0.0, 1.0, 12, |x| x.powf(-0.5) * (1.0 + x));
        assert!((got - (2.0 + 2.0 / 3.0)).abs() < 1e-9, "{got}");
    }

    #[test]
    fn endpoint_singular_integrator_right_endpoint() {
        // integral of (1-x)^(-1/2) over [0,1] = 2, singular end on the right;
        // the result is always in positive orientation
        let got = integrate_endpoint_singular(1.0, 0.0, 10, |x| (1.0 - x).powf(-0.5));
        assert!((got - 2.0).abs() < 1e-9, "{got}");
    }

    #[test]
    fn graded_rule_mild_singularity() {
        // alpha >= 0 kinks are fully resolved by the capped static rule
        let rule = graded_toward(1.0, 0.0, 40, 12);
        let got = rule.integrate(|x| (1.0 - x).powf(0.25));
        assert!((got - 0.8).abs() < 1e-12, "{got}");
    }
}
