//! Nonhomogeneous local Dirichlet solves: prescribe the weighted boundary
//! trace of weight a-1, subtract a lifting of the data, solve the remaining
//! homogeneous problem, and reassemble. Solutions with nonzero data blow up
//! like d^(a-1) at the boundary.

use num_complex::Complex64;

use crate::basis::SpectralFunction;
use crate::error::{FracError, Result};
use crate::fracop::Route;
use crate::params::admissible_q_for_large_solutions;
use crate::solver::{DirichletRealization, FredholmOutcome};
use crate::symbols::FracParams;
use crate::traces::{lift, weighted_trace, Lifting};

/// Apply r+ P to a lifting of weight a-1, stably at every distance from
/// the boundary.
///
/// Near the endpoint carrying the profile the plain principal-value
/// quadrature loses all its digits: the pieces grow like d^(-2a) while the
/// value stays O(1), because the half-line profile d^(a-1) is annihilated
/// by the operator. There the profile is subtracted analytically, and only
/// the cutoff deficit and the beyond-the-far-endpoint tail are integrated
/// (both regular). Away from the profile's endpoint the direct route is
/// well conditioned and is used as is.
pub fn apply_to_lifting(
    real: &DirichletRealization,
    lifting: &Lifting,
    eval: &[f64],
) -> Result<Vec<Complex64>> {
    let a = real.a();
    let op = &real.op;
    let g0 = op.symbol.g_plus;
    let c = op.kernel_constant;
    let w = lifting.cutoff_width;
    let gamma_a = crate::basis::gamma_fn(a);
    let mut out = vec![Complex64::new(0.0, 0.0); eval.len()];
    for (slot, endpoint) in [-1.0f64, 1.0].iter().enumerate() {
        let endpoint = *endpoint;
        let phi_e = lifting.phi[slot];
        if phi_e.norm() == 0.0 {
            continue;
        }
        // the one-endpoint part of the lifting as a closure
        let part = {
            let lifting = lifting.clone();
            move |y: f64| -> Complex64 {
                if y.abs() >= 1.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let t = if endpoint < 0.0 { 1.0 + y } else { 1.0 - y };
                phi_e / gamma_a * t.powf(a - 1.0) * lifting.chi(t)
            }
        };
        for (i, &x) in eval.iter().enumerate() {
            let s = if endpoint < 0.0 { 1.0 + x } else { 1.0 - x };
            let value = if s < 0.5 * w {
                // profile-subtracted path: Op(part) = c * integral over the
                // deficit r(t) = t^(a-1) (1 - chi(t) [t<2]) of the kernel
                phi_e / gamma_a * c * deficit_integral(a, lifting, w, s)
            } else {
                c * op.pv_integral(&part, 1.0, x)
            };
            out[i] += op.symbol.coeff_at(x) * g0 * value;
        }
    }
    Ok(out)
}

/// integral over t in [w, infinity) of t^(a-1) (1 - chi(t) 1_{t<2})
/// |t - s|^(-1-2a) dt, for s < w/2 (so the kernel is regular throughout).
fn deficit_integral(a: f64, lifting: &Lifting, w: f64, s: f64) -> f64 {
    let a2 = 2.0 * a;
    let base = crate::quad::gauss_legendre(16);
    let mut acc = 0.0;
    // [w, 2]: cutoff deficit against the kernel
    {
        let panels = 24;
        for p in 0..panels {
            let lo = w + (2.0 - w) * p as f64 / panels as f64;
            let hi = w + (2.0 - w) * (p + 1) as f64 / panels as f64;
            for (&tt, &wt) in base.nodes.iter().zip(&base.weights) {
                let t = 0.5 * (lo + hi) + 0.5 * (hi - lo) * tt;
                let q = 0.5 * (hi - lo) * wt;
                acc += q * t.powf(a - 1.0) * (1.0 - lifting.chi(t)) * (t - s).powf(-1.0 - a2);
            }
        }
    }
    // [2, Y]: the profile continues past the far endpoint
    let big_y = 20.0f64;
    let mut lo = 2.0f64;
    while lo < big_y {
        let hi = (2.0 * lo).min(big_y);
        for (&tt, &wt) in base.nodes.iter().zip(&base.weights) {
            let t = 0.5 * (lo + hi) + 0.5 * (hi - lo) * tt;
            let q = 0.5 * (hi - lo) * wt;
            acc += q * t.powf(a - 1.0) * (t - s).powf(-1.0 - a2);
        }
        lo = hi;
    }
    // tail by the binomial series of (1 - s/t)^(-1-2a)
    let mut coef = 1.0; // C(2a+k, k) s^k
    for k in 0..40 {
        let kf = k as f64;
        let term = coef * big_y.powf(-a - 1.0 - kf) / (a + 1.0 + kf);
        acc += term;
        if term.abs() < 1e-17 {
            break;
        }
        coef *= (a2 + 1.0 + kf) / (kf + 1.0) * s;
    }
    acc
}

/// A nonhomogeneous solution u = lifting + homogeneous remainder.
#[derive(Debug, Clone)]
pub struct NonhomSolution {
    pub lifting: Lifting,
    pub remainder: SpectralFunction,
    /// Relative residual of the remainder equation r+(P-lambda) w = f',
    /// measured through the multiplier route (independent of assembly).
    pub oracle_residual: f64,
    /// Max error of trace(u, a-1) against the prescribed data.
    pub trace_roundtrip_error: f64,
    /// Dimension of the solution's nonuniqueness (0 off the spectrum).
    pub nonuniqueness_dim: usize,
}

impl NonhomSolution {
    pub fn eval(&self, x: f64) -> Complex64 {
        self.lifting.eval(x) + self.remainder.eval(x)
    }

    pub fn as_closure(&self) -> impl Fn(f64) -> Complex64 + '_ {
        move |x| self.eval(x)
    }
}

/// Solve Pu = f, u = 0 outside, trace_(a-1) u = phi, by the lifting
/// reduction u = K^(a-1) phi + w. Requires tau > 2a + 1.
pub fn solve_nonhomogeneous(
    real: &DirichletRealization,
    params: &FracParams,
    f: &dyn Fn(f64) -> Complex64,
    phi: [Complex64; 2],
) -> Result<NonhomSolution> {
    params.require_nonhomogeneous_gate()?;
    solve_with_shift(real, Complex64::new(0.0, 0.0), f, phi)
}

/// Solve (P - lambda) u = f with the same boundary condition. The L2
/// framing requires a > 1/2 (the blow-up profile must be square-integrable
/// for lambda u to live beside f).
pub fn solve_nonhomogeneous_resolvent(
    real: &DirichletRealization,
    params: &FracParams,
    lambda: Complex64,
    f: &dyn Fn(f64) -> Complex64,
    phi: [Complex64; 2],
) -> Result<NonhomSolution> {
    params.require_nonhomogeneous_gate()?;
    let a = real.a();
    if !admissible_q_for_large_solutions(a, 2.0) {
        return Err(FracError::LargeSolutionInadmissible { a });
    }
    solve_with_shift(real, lambda, f, phi)
}

fn solve_with_shift(
    real: &DirichletRealization,
    lambda: Complex64,
    f: &dyn Fn(f64) -> Complex64,
    phi: [Complex64; 2],
) -> Result<NonhomSolution> {
    let a = real.a();
    let lifting = lift(a - 1.0, phi)?;

    // f' = f - (r+P - lambda) v on the assembly grid, with Pv evaluated
    // through the profile-subtracted kernel route
    let pv = apply_to_lifting(real, &lifting, &real.grid.nodes)?;
    let f_prime_vals: Vec<Complex64> = real
        .grid
        .nodes
        .iter()
        .zip(&pv)
        .map(|(&x, pvx)| f(x) - (pvx - lambda * lifting.eval(x)))
        .collect();
    let rhs = moments_from_values(real, &f_prime_vals);

    let (remainder, nonuniqueness_dim) = if real.on_spectrum(lambda) {
        // Fredholm branch on f'
        let fp = |x: f64| {
            // re-evaluate pointwise: f - (P - lambda) v
            f(x) - (apply_to_lifting(real, &lifting, &[x])
                .map(|v| v[0])
                .unwrap_or(Complex64::new(0.0, 0.0))
                - lambda * lifting.eval(x))
        };
        match real.solve_fredholm(lambda, &fp)? {
            FredholmOutcome::Solvable {
                solution,
                nonuniqueness_dim,
                ..
            } => (solution, nonuniqueness_dim),
            FredholmOutcome::Obstructed { defects, .. } => {
                return Err(FracError::SpectrumHit(format!(
                    "lambda on spectrum and shifted data not orthogonal to the \
                     cokernel: defects {defects:?}"
                )));
            }
        }
    } else {
        (real.resolvent_from_moments(lambda, &rhs)?, 0)
    };

    // residual of the remainder equation through the multiplier route,
    // against the already-fixed f' values (interior window)
    let oracle_residual = remainder_residual(real, &remainder, &f_prime_vals, lambda)?;

    // trace round trip on the assembled solution
    let solution_probe = {
        let lifting = lifting.clone();
        let remainder = remainder.clone();
        move |x: f64| lifting.eval(x) + remainder.eval(x)
    };
    let t = weighted_trace(&solution_probe, a - 1.0)?;
    let trace_roundtrip_error = t
        .values
        .iter()
        .zip(&phi)
        .map(|(got, want)| (got - want).norm())
        .fold(0.0, f64::max);

    Ok(NonhomSolution {
        lifting,
        remainder,
        oracle_residual,
        trace_roundtrip_error,
        nonuniqueness_dim,
    })
}

pub(crate) fn moments_from_values(
    real: &DirichletRealization,
    values: &[Complex64],
) -> Vec<Complex64> {
    let a = real.a();
    let k_basis = real.basis_size;
    let mut out = vec![Complex64::new(0.0, 0.0); k_basis];
    let mut q = vec![0.0f64; k_basis];
    for i in 0..real.grid.len() {
        let x = real.grid.nodes[i];
        crate::basis::eval_orthonormal(a, k_basis, x, &mut q);
        let w = real.grid.weights[i] * (1.0 - x * x).powf(a);
        for k in 0..k_basis {
            out[k] += w * q[k] * values[i];
        }
    }
    out
}

fn remainder_residual(
    real: &DirichletRealization,
    w: &SpectralFunction,
    f_prime_vals: &[Complex64],
    lambda: Complex64,
) -> Result<f64> {
    let mut eval = Vec::new();
    let mut weights = Vec::new();
    let mut fvals = Vec::new();
    for i in 0..real.grid.len() {
        let x = real.grid.nodes[i];
        if 1.0 - x.abs() >= 0.1 {
            eval.push(x);
            weights.push(real.grid.weights[i]);
            fvals.push(f_prime_vals[i]);
        }
    }
    let wc = w.as_closure();
    let pw = real.op.apply_fn(Route::Multiplier, &wc, 1.0, &eval)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..eval.len() {
        let r = pw[i] - lambda * w.eval(eval[i]) - fvals[i];
        num += weights[i] * r.norm_sqr();
        den += weights[i] * fvals[i].norm_sqr();
    }
    Ok((num / den.max(1e-300)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_grid, Domain1D};
    use crate::fracop::OperatorApplication;
    use crate::solver::assemble;
    use crate::verify::boundary_exponent_fit;

    fn realization(a: f64, k: usize) -> DirichletRealization {
        let op = OperatorApplication::fractional_laplacian(a).unwrap();
        let grid = make_grid(Domain1D::Interval, 400, 1.0).unwrap();
        assemble(op, k, &grid).unwrap()
    }

    fn nonhom_params(a: f64) -> FracParams {
        FracParams::new(a, 2.0, 2.0 * a + 1.5, 2.0 * a, a - 1.0, 0.01).unwrap()
    }

    #[test]
    fn zero_data_reduces_to_homogeneous() {
        let a = 0.75;
        let r = realization(a, 20);
        let params = nonhom_params(a);
        let f = |x: f64| Complex64::new(1.0 + 0.2 * x, 0.0);
        let hom = r.solve_homogeneous(&f).unwrap();
        let non = solve_nonhomogeneous(
            &r,
            &params,
            &f,
            [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
        )
        .unwrap();
        for (x, y) in hom.solution.coeffs.iter().zip(&non.remainder.coeffs) {
            assert!((x - y).norm() < 1e-8, "{x} vs {y}");
        }
        assert_eq!(non.nonuniqueness_dim, 0);
    }

    #[test]
    fn tau_gate_enforced() {
        let a = 0.75;
        let r = realization(a, 12);
        // tau = 2a + 0.5 violates the nonhomogeneous hypothesis
        let params = FracParams::new(a, 2.0, 2.0 * a + 0.5, 2.0 * a, a - 1.0, 0.01).unwrap();
        let f = |_: f64| Complex64::new(0.0, 0.0);
        let out = solve_nonhomogeneous(&r, &params, &f, [Complex64::new(1.0, 0.0); 2]);
        assert!(out.is_err());
    }

    #[test]
    fn pure_boundary_data_blows_up_at_rate_a_minus_one() {
        let a = 0.75;
        let r = realization(a, 24);
        let params = nonhom_params(a);
        let f = |_: f64| Complex64::new(0.0, 0.0);
        let phi = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        let sol = solve_nonhomogeneous(&r, &params, &f, phi).unwrap();
        assert!(sol.trace_roundtrip_error <= 1e-3, "{}", sol.trace_roundtrip_error);
        for endpoint in [-1.0, 1.0] {
            let fit =
                boundary_exponent_fit(|x| sol.eval(x).norm(), endpoint, 1e-5, 0.01).unwrap();
            assert!(
                (fit.exponent - (a - 1.0)).abs() < 0.05,
                "endpoint {endpoint}: {}",
                fit.exponent
            );
        }
    }

    #[test]
    fn resolvent_gate_rejects_small_a() {
        let a = 0.4;
        let r = realization(a, 12);
        let params = nonhom_params(a);
        let f = |_: f64| Complex64::new(0.0, 0.0);
        let out = solve_nonhomogeneous_resolvent(
            &r,
            &params,
            Complex64::new(-1.0, 0.0),
            &f,
            [Complex64::new(1.0, 0.0); 2],
        );
        assert!(matches!(
            out,
            Err(FracError::LargeSolutionInadmissible { .. })
        ));
    }

    #[test]
    fn resolvent_solution_tracks_trace_and_exponent() {
        let a = 0.75;
        let r = realization(a, 24);
        let params = nonhom_params(a);
        let f = |_: f64| Complex64::new(0.0, 0.0);
        let phi = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let sol = solve_nonhomogeneous_resolvent(
            &r,
            &params,
            Complex64::new(-5.0, 0.0),
            &f,
            phi,
        )
        .unwrap();
        assert!(sol.trace_roundtrip_error <= 1e-3, "{}", sol.trace_roundtrip_error);
        // exponent a-1 at the endpoint carrying data; at the other endpoint
        // the solution lies over d^a (the quotient stays bounded and the
        // (a-1)-weighted quotient dies); a slope fit is useless there since
        // the remainder may cross zero inside any window
        let fit = boundary_exponent_fit(|x| sol.eval(x).norm(), -1.0, 1e-5, 0.01).unwrap();
        assert!((fit.exponent - (a - 1.0)).abs() < 0.05, "{}", fit.exponent);
        let mut sup_quot = 0.0f64;
        for k in 2..=6 {
            let d = 10f64.powi(-k);
            sup_quot = sup_quot.max(sol.eval(1.0 - d).norm() / d.powf(a));
        }
        assert!(sup_quot < 10.0, "quotient blew up: {sup_quot}");
        let low_quot = sol.eval(1.0 - 1e-6).norm() / 1e-6f64.powf(a - 1.0);
        assert!(low_quot < 1e-4, "blow-up trace leaked: {low_quot}");
        // lambda = 0 through the resolvent equals the direct nonhomogeneous solve
        let s0 = solve_nonhomogeneous_resolvent(
            &r,
            &params,
            Complex64::new(0.0, 0.0),
            &f,
            phi,
        )
        .unwrap();
        let s1 = solve_nonhomogeneous(&r, &params, &f, phi).unwrap();
        for (x, y) in s0.remainder.coeffs.iter().zip(&s1.remainder.coeffs) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn linearity_in_data() {
        let a = 0.75;
        let r = realization(a, 20);
        let params = nonhom_params(a);
        let f1 = |x: f64| Complex64::new(x, 0.0);
        let f0 = |_: f64| Complex64::new(0.0, 0.0);
        let phi1 = [Complex64::new(0.7, 0.0), Complex64::new(-0.2, 0.0)];
        let phi0 = [Complex64::new(0.0, 0.0); 2];
        let s_f = solve_nonhomogeneous(&r, &params, &f1, phi0).unwrap();
        let s_phi = solve_nonhomogeneous(&r, &params, &f0, phi1).unwrap();
        let s_both = solve_nonhomogeneous(&r, &params, &f1, phi1).unwrap();
        for x in [-0.8, -0.3, 0.4, 0.9] {
            let lin = s_f.eval(x) + s_phi.eval(x);
            assert!(
                (lin - s_both.eval(x)).norm() < 1e-8 * (1.0 + lin.norm()),
                "x={x}"
            );
        }
    }

    #[test]
    fn universality_of_the_blowup_class_across_symbols() {
        // two admissible symbols, same data: identical boundary exponents
        use crate::symbols::{CoefficientField, Symbol};
        let a = 0.75;
        let params = nonhom_params(a);
        let grid = make_grid(Domain1D::Interval, 400, 1.0).unwrap();
        let phi = [Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)];
        let f = |_: f64| Complex64::new(0.0, 0.0);
        let mut exps = Vec::new();
        let sym2 = Symbol::new(
            a,
            CoefficientField::SinePerturbed {
                base: Complex64::new(1.5, 0.0),
                amp: Complex64::new(0.2, 0.0),
                freq: 2.0,
            },
            1.0,
            1.0,
        )
        .unwrap();
        for sym in [Symbol::fractional_laplacian(a), sym2] {
            let op = OperatorApplication::new(sym).unwrap();
            let r = assemble(op, 20, &grid).unwrap();
            let sol = solve_nonhomogeneous(&r, &params, &f, phi).unwrap();
            let fit =
                boundary_exponent_fit(|x| sol.eval(x).norm(), 1.0, 1e-5, 0.01).unwrap();
            exps.push(fit.exponent);
        }
        for e in &exps {
            assert!((e - (a - 1.0)).abs() < 0.05, "{exps:?}");
        }
    }

    #[test]
    fn subtracting_the_lifting_reproduces_the_remainder() {
        // the w = u - v decomposition: resolve the homogeneous problem with
        // the shifted data and land on the same remainder
        let a = 0.8;
        let r = realization(a, 20);
        let params = nonhom_params(a);
        let f = |x: f64| Complex64::new((1.5 * x).cos(), 0.0);
        let phi = [Complex64::new(0.4, 0.0), Complex64::new(-0.6, 0.0)];
        let sol = solve_nonhomogeneous(&r, &params, &f, phi).unwrap();
        let pv = apply_to_lifting(&r, &sol.lifting, &r.grid.nodes).unwrap();
        let vals: Vec<Complex64> = r
            .grid
            .nodes
            .iter()
            .zip(&pv)
            .map(|(&x, p)| f(x) - p)
            .collect();
        let rhs = moments_from_values(&r, &vals);
        let w2 = crate::linalg::solve(&r.stiffness, &rhs).unwrap();
        for (x, y) in sol.remainder.coeffs.iter().zip(&w2) {
            assert!((x - y).norm() < 1e-6 * (1.0 + y.norm()));
        }
    }
}
