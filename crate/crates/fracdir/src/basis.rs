//! The boundary-weighted polynomial basis on (-1, 1):
//! phi_k(x) = (1-x^2)^a Q_k(x), with Q_k the orthonormal polynomials for
//! the weight (1-x^2)^a. Functions represented here vanish outside the
//! closed interval by construction and carry the d^a boundary factor, so
//! u/d^a extends continuously to the closure.

use num_complex::Complex64;
use statrs::function::gamma::{gamma, ln_gamma};

/// Recurrence coefficient b_k of the orthonormal symmetric-weight family:
/// x Q_k = b_{k+1} Q_{k+1} + b_k Q_{k-1}.
pub fn recurrence_b(a: f64, k: usize) -> f64 {
    let kf = k as f64;
    (kf * (kf + 2.0 * a) / ((2.0 * kf + 2.0 * a - 1.0) * (2.0 * kf + 2.0 * a + 1.0))).sqrt()
}

/// Norm of the constant: integral of (1-x^2)^a over (-1,1).
pub fn weight_mass(a: f64) -> f64 {
    // 2^(2a+1) Gamma(a+1)^2 / Gamma(2a+2)
    (2.0f64).powf(2.0 * a + 1.0) * (2.0 * ln_gamma(a + 1.0) - ln_gamma(2.0 * a + 2.0)).exp()
}

/// Values Q_0(x) .. Q_{K-1}(x) by the three-term recurrence.
pub fn eval_orthonormal(a: f64, k_max: usize, x: f64, out: &mut [f64]) {
    debug_assert!(out.len() >= k_max);
    if k_max == 0 {
        return;
    }
    let q0 = 1.0 / weight_mass(a).sqrt();
    out[0] = q0;
    if k_max == 1 {
        return;
    }
    let b1 = recurrence_b(a, 1);
    out[1] = x * q0 / b1;
    for k in 1..(k_max - 1) {
        let bk = recurrence_b(a, k);
        let bk1 = recurrence_b(a, k + 1);
        out[k + 1] = (x * out[k] - bk * out[k - 1]) / bk1;
    }
}

/// Coefficients in the weighted basis; the represented function is
/// u(x) = (1-x^2)^a sum_k c_k Q_k(x) on (-1,1), zero outside.
#[derive(Debug, Clone)]
pub struct SpectralFunction {
    pub a: f64,
    pub coeffs: Vec<Complex64>,
}

impl SpectralFunction {
    pub fn new(a: f64, coeffs: Vec<Complex64>) -> Self {
        SpectralFunction { a, coeffs }
    }

    pub fn zero(a: f64, k: usize) -> Self {
        SpectralFunction {
            a,
            coeffs: vec![Complex64::new(0.0, 0.0); k],
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Polynomial part sum c_k Q_k(x) (the function over the d^a weight).
    pub fn eval_polynomial(&self, x: f64) -> Complex64 {
        let k = self.len();
        let mut q = vec![0.0; k];
        eval_orthonormal(self.a, k, x, &mut q);
        self.coeffs
            .iter()
            .zip(&q)
            .map(|(c, &qk)| c * qk)
            .sum()
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        if x.abs() >= 1.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.eval_polynomial(x) * (1.0 - x * x).powf(self.a)
    }

    /// Weighted boundary value of u/d^a at the endpoint +-1:
    /// (1 -+ x)^a has limit 2^a there, so the limit is 2^a sum c_k Q_k(e).
    pub fn weighted_endpoint_value(&self, endpoint: f64) -> Complex64 {
        self.eval_polynomial(endpoint) * (2.0f64).powf(self.a)
    }

    /// Closure form for the operator routes.
    pub fn as_closure(&self) -> impl Fn(f64) -> Complex64 + '_ {
        move |x| self.eval(x)
    }

    pub fn scale(&self, factor: Complex64) -> SpectralFunction {
        SpectralFunction {
            a: self.a,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add(&self, other: &SpectralFunction) -> SpectralFunction {
        assert_eq!(self.len(), other.len());
        SpectralFunction {
            a: self.a,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

/// Eigenvalue of the weighted family under the pure fractional operator for
/// reference in conditioning diagnostics: Gamma(2a+k+1)/k!.
pub fn weighted_eigenvalue_scale(a: f64, k: usize) -> f64 {
    (ln_gamma(2.0 * a + k as f64 + 1.0) - ln_gamma(k as f64 + 1.0)).exp()
}

/// Convenience: Gamma function re-export used across the solver modules.
pub fn gamma_fn(x: f64) -> f64 {
    gamma(x)
}
