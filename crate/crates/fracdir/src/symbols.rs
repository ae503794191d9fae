//! Symbols of order 2a on the line: coefficient field A(x), angular factor
//! g on {-1, +1}, strong-ellipticity and evenness certification, and the
//! low-frequency smoothing split.

use num_complex::Complex64;

use crate::domain::Grid;
use crate::error::{FracError, Result};

/// The scalar parameter bundle governing every space index.
#[derive(Debug, Clone, Copy)]
pub struct FracParams {
    /// Order parameter, a in (0,1); the operator has order 2a.
    pub a: f64,
    /// Integral exponent, q in (1, infinity).
    pub q: f64,
    /// Coefficient smoothness; tau > 2a, and tau > 2a+1 when a nonhomogeneous
    /// boundary condition enters. f64::INFINITY encodes smooth coefficients.
    pub tau: f64,
    /// Regularity index.
    pub s: f64,
    /// Weight exponent, mu > -1.
    pub mu: f64,
    /// Small index backoff wherever an "-eps" enters a space index.
    pub eps: f64,
}

impl FracParams {
    pub fn new(a: f64, q: f64, tau: f64, s: f64, mu: f64, eps: f64) -> Result<Self> {
        if !(0.0 < a && a < 1.0) {
            return Err(FracError::InvalidParameter(format!("a must be in (0,1), got {a}")));
        }
        if !(q > 1.0) {
            return Err(FracError::InvalidParameter(format!("q must be in (1,inf), got {q}")));
        }
        if !(tau > 2.0 * a) {
            return Err(FracError::InvalidParameter(format!(
                "tau must exceed 2a = {}, got {tau}",
                2.0 * a
            )));
        }
        if !(mu > -1.0) {
            return Err(FracError::InvalidParameter(format!("mu must exceed -1, got {mu}")));
        }
        if !(eps > 0.0) {
            return Err(FracError::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        Ok(FracParams { a, q, tau, s, mu, eps })
    }

    /// Convenience bundle with the defaults used across the crate.
    pub fn with_defaults(a: f64) -> Result<Self> {
        Self::new(a, 2.0, f64::INFINITY, 2.0 * a, a, 0.01)
    }

    /// Gate for nonhomogeneous problems: tau > 2a + 1.
    pub fn require_nonhomogeneous_gate(&self) -> Result<()> {
        if self.tau > 2.0 * self.a + 1.0 {
            Ok(())
        } else {
            Err(FracError::InvalidParameter(format!(
                "nonhomogeneous problems require tau > 2a + 1 = {}, got tau = {}",
                2.0 * self.a + 1.0,
                self.tau
            )))
        }
    }
}

/// Coefficient field A(x) of the symbol.
#[derive(Debug, Clone)]
pub enum CoefficientField {
    Constant(Complex64),
    /// base + amp * sin(freq * x)
    SinePerturbed {
        base: Complex64,
        amp: Complex64,
        freq: f64,
    },
    HolderSeries(HolderCoefficient),
}

/// Random trigonometric series with prescribed Holder regularity:
/// A(x) = base + sum_k k^(-tau - 1/2) cos(k pi x + theta_k), theta_k seeded.
/// With random phases the sum has Holder exponent tau (up to logarithms) and
/// no better, which realizes a coefficient of class C^tau with finite tau.
#[derive(Debug, Clone)]
pub struct HolderCoefficient {
    pub base: f64,
    pub tau: f64,
    phases: Vec<f64>,
}

impl HolderCoefficient {
    pub fn generate(seed: u64, tau: f64, terms: usize, base: f64) -> Self {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let phases = (0..terms)
            .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
            .collect();
        HolderCoefficient { base, tau, phases }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = self.base;
        for (i, &theta) in self.phases.iter().enumerate() {
            let k = (i + 1) as f64;
            acc += k.powf(-self.tau - 0.5) * (k * std::f64::consts::PI * x + theta).cos();
        }
        acc
    }

    /// A smoothed companion: same base and leading phases, series truncated.
    pub fn smoothed(&self, keep: usize) -> Self {
        HolderCoefficient {
            base: self.base,
            tau: self.tau,
            phases: self.phases.iter().copied().take(keep).collect(),
        }
    }
}

/// Symbol p(x, xi) = A(x) g(xi/|xi|) |xi|^(2a), with a low-frequency
/// smoothing cutoff available for the classical-symbol split.
#[derive(Debug, Clone)]
pub struct Symbol {
    pub a: f64,
    pub coeff: CoefficientField,
    /// Angular factor on the 1-D unit sphere {+1, -1}.
    pub g_plus: f64,
    pub g_minus: f64,
}

impl Symbol {
    pub fn new(a: f64, coeff: CoefficientField, g_plus: f64, g_minus: f64) -> Result<Self> {
        if !(0.0 < a && a < 1.0) {
            return Err(FracError::InvalidParameter(format!("a must be in (0,1), got {a}")));
        }
        if g_plus <= 0.0 || g_minus <= 0.0 {
            return Err(FracError::InvalidParameter(
                "angular factor must be positive".into(),
            ));
        }
        Ok(Symbol { a, coeff, g_plus, g_minus })
    }

    /// The fractional Laplacian (-Delta)^a: A = 1, g = 1.
    pub fn fractional_laplacian(a: f64) -> Self {
        Symbol {
            a,
            coeff: CoefficientField::Constant(Complex64::new(1.0, 0.0)),
            g_plus: 1.0,
            g_minus: 1.0,
        }
    }

    pub fn order(&self) -> f64 {
        2.0 * self.a
    }

    pub fn coeff_at(&self, x: f64) -> Complex64 {
        match &self.coeff {
            CoefficientField::Constant(c) => *c,
            CoefficientField::SinePerturbed { base, amp, freq } => base + amp * (freq * x).sin(),
            CoefficientField::HolderSeries(h) => Complex64::new(h.eval(x), 0.0),
        }
    }

    pub fn angular(&self, xi: f64) -> f64 {
        if xi >= 0.0 {
            self.g_plus
        } else {
            self.g_minus
        }
    }

    /// Principal symbol p0(x, xi) = A(x) g(xi/|xi|) |xi|^(2a).
    pub fn principal(&self, x: f64, xi: f64) -> Complex64 {
        self.coeff_at(x) * self.angular(xi) * xi.abs().powf(2.0 * self.a)
    }

    /// x-independent part of the multiplier: g(xi/|xi|) |xi|^(2a).
    pub fn multiplier(&self, xi: f64) -> f64 {
        self.angular(xi) * xi.abs().powf(2.0 * self.a)
    }

    /// Multiplier with the low-frequency part removed by the smooth cutoff
    /// (equal to the full multiplier for |xi| >= 1; 0 for |xi| <= 1/2).
    /// The difference is a smoothing operator.
    pub fn multiplier_smoothed(&self, xi: f64) -> f64 {
        (1.0 - cutoff_eta(xi.abs())) * self.multiplier(xi)
    }

    pub fn is_constant_coefficient(&self) -> bool {
        matches!(self.coeff, CoefficientField::Constant(_))
    }

    /// Whether the coefficient field is real-valued.
    pub fn is_real(&self) -> bool {
        match &self.coeff {
            CoefficientField::Constant(c) => c.im == 0.0,
            CoefficientField::SinePerturbed { base, amp, .. } => base.im == 0.0 && amp.im == 0.0,
            CoefficientField::HolderSeries(_) => true,
        }
    }
}

/// Smooth cutoff eta(r): 1 for r <= 1/2, 0 for r >= 1, C-infinity in between.
pub fn cutoff_eta(r: f64) -> f64 {
    if r <= 0.5 {
        1.0
    } else if r >= 1.0 {
        0.0
    } else {
        let u = (r - 0.5) / 0.5; // in (0,1), 0 near the kept band
        let f = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
        f(1.0 - u) / (f(1.0 - u) + f(u))
    }
}

/// Evenness in 1-D: the angular factor takes equal values at +-1.
pub fn check_evenness(sym: &Symbol) -> bool {
    sym.g_plus == sym.g_minus
}

/// Certified strong-ellipticity lower bound: min over grid nodes and the two
/// directions of Re(A(x) g(eta)). Non-positive return means the symbol is
/// rejected for a Dirichlet realization.
pub fn check_strong_ellipticity(sym: &Symbol, grid: &Grid) -> Result<f64> {
    if grid.is_empty() {
        return Err(FracError::InvalidParameter("empty grid".into()));
    }
    let mut c0 = f64::INFINITY;
    for &x in &grid.nodes {
        let a = sym.coeff_at(x);
        for g in [sym.g_plus, sym.g_minus] {
            c0 = c0.min((a * g).re);
        }
    }
    Ok(c0)
}
