//! Restricted application r+ P e+ for P = A(x) Op(g |xi|^2a) on functions
//! supported in the closed interval, by two independent routes:
//!
//! * a Fourier multiplier on a periodized box, corrected exactly for
//!   periodization by summing the kernel images analytically, and
//! * direct principal-value quadrature of the hypersingular kernel
//!   c(a) |x-y|^(-1-2a), with the near part written as a symmetric
//!   difference (no Taylor truncation) and graded panels into every kink.
//!
//! The kernel constant c(a) linking the two is calibrated on Gaussians at
//! construction, never assumed, and the routes are cross-validated there.

use num_complex::Complex64;

use crate::domain::Grid;
use crate::error::{FracError, Result};
use crate::halfline::{apply_multiplier, frequency, SampledFunction};
use crate::quad::{
    gauss_legendre, graded_toward, integrate_endpoint_singular,
    integrate_endpoint_singular_complex, integrate_endpoint_singular_complex_depth,
    integrate_endpoint_singular_depth, QuadRule,
};

/// Grading depth for symmetric-difference integrands against the kernel
/// r^(-1-2a): noise eps * (2^-k delta)^(-2a) stays below ~1e-9 when
/// 2^-k delta >= 10^(-7/(2a)).
fn near_grading_depth(a2: f64, delta: f64) -> usize {
    let r_min = 10f64.powf(-7.0 / a2);
    let k = (delta / r_min).log2().ceil();
    k.clamp(6.0, 26.0) as usize
}
use crate::symbols::{check_evenness, Symbol};

/// Which evaluation route to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Multiplier,
    SingularIntegral,
}

/// Operator values on a set of interval nodes; `flagged` marks nodes too
/// close to the boundary for the requested route's resolution.
#[derive(Debug, Clone)]
pub struct FieldOnGrid {
    pub nodes: Vec<f64>,
    pub values: Vec<Complex64>,
    pub flagged: Vec<bool>,
}

/// Default periodization box half-length for the multiplier route.
pub const BOX_HALF_LENGTH: f64 = 8.0;
/// Default sample count on the box.
pub const BOX_SAMPLES: usize = 1 << 19;
/// Kernel images summed exactly; the rest is an analytic remainder.
const PERIOD_IMAGES: i64 = 64;
/// Nodes of the Chebyshev interpolant for the periodization correction.
const TAIL_CHEB_NODES: usize = 24;

/// A prepared application of r+ P e+ with both routes available.
#[derive(Debug, Clone)]
pub struct OperatorApplication {
    pub symbol: Symbol,
    /// Calibrated constant c(a): Op(|xi|^2a) = c(a) * PV-kernel.
    pub kernel_constant: f64,
    /// Drift of c(a) between the two calibration truncation radii.
    pub calibration_drift: f64,
    /// Measured relative route disagreement on smooth supported inputs.
    pub route_agreement: f64,
    pub box_half_length: f64,
    pub box_samples: usize,
    /// Precomputed sum over the analytic remainder of kernel images.
    far_image_sum: f64,
}

impl OperatorApplication {
    /// Build and calibrate. Requires an even symbol (the kernel route exists
    /// only for even symbols).
    pub fn new(symbol: Symbol) -> Result<Self> {
        Self::with_box(symbol, BOX_HALF_LENGTH, BOX_SAMPLES)
    }

    pub fn fractional_laplacian(a: f64) -> Result<Self> {
        Self::new(Symbol::fractional_laplacian(a))
    }

    pub fn with_box(symbol: Symbol, box_half_length: f64, box_samples: usize) -> Result<Self> {
        let mut op = Self::with_box_unvalidated(symbol, box_half_length, box_samples)?;
        op.calibrate()?;
        op.cross_validate()?;
        Ok(op)
    }

    /// Construction without calibration or cross-validation; diagnostics only.
    #[doc(hidden)]
    pub fn with_box_unvalidated(
        symbol: Symbol,
        box_half_length: f64,
        box_samples: usize,
    ) -> Result<Self> {
        if !check_evenness(&symbol) {
            return Err(FracError::InvalidParameter(
                "kernel route requires an even symbol".into(),
            ));
        }
        let a = symbol.a;
        // remainder of sum over |m| > PERIOD_IMAGES of (2 L m)^(-1-2a)
        let two_l = 2.0 * box_half_length;
        let mut tail = 0.0;
        for m in (PERIOD_IMAGES + 1)..200_000 {
            tail += (two_l * m as f64).powf(-1.0 - 2.0 * a);
        }
        // integral bound for the rest
        tail += (two_l * 2e5).powf(-2.0 * a) / (2.0 * a * two_l);
        Ok(OperatorApplication {
            symbol,
            kernel_constant: f64::NAN,
            calibration_drift: f64::NAN,
            route_agreement: f64::NAN,
            box_half_length,
            box_samples,
            far_image_sum: 2.0 * tail,
        })
    }

    /// Set the kernel constant directly (diagnostics only).
    #[doc(hidden)]
    pub fn set_kernel_constant(&mut self, c: f64) {
        self.kernel_constant = c;
    }

    /// Apply Op(g |xi|^2a) on the periodized box by FFT; returns box samples.
    fn multiplier_on_box(&self, u: &dyn Fn(f64) -> Complex64) -> Vec<Complex64> {
        let n = self.box_samples;
        let l = self.box_half_length;
        let h = 2.0 * l / n as f64;
        let samples: Vec<Complex64> = (0..n).map(|j| u(-l + j as f64 * h)).collect();
        let a2 = 2.0 * self.symbol.a;
        let mult: Vec<Complex64> = (0..n)
            .map(|k| {
                let xi = frequency(k, n, l);
                Complex64::new(self.symbol.angular(xi) * xi.abs().powf(a2), 0.0)
            })
            .collect();
        apply_multiplier(&samples, &mult)
    }

    /// Periodization correction at x: sum over image shifts of
    /// integral u(y) |x - y + 2Lm|^(-1-2a) dy (without the c(a) g factor);
    /// `u_samples` holds the input on `u_rule`'s nodes, `u_mass` its integral.
    fn periodization_correction(
        &self,
        x: f64,
        u_rule: &QuadRule,
        u_samples: &[Complex64],
        u_mass: Complex64,
    ) -> Complex64 {
        let a2 = 2.0 * self.symbol.a;
        let two_l = 2.0 * self.box_half_length;
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 1..=PERIOD_IMAGES {
            for shift in [two_l * m as f64, -two_l * m as f64] {
                let mut s = Complex64::new(0.0, 0.0);
                for (i, &y) in u_rule.nodes.iter().enumerate() {
                    let w = u_rule.weights[i];
                    s += u_samples[i] * w * (x - y + shift).abs().powf(-1.0 - a2);
                }
                acc += s;
            }
        }
        acc + u_mass * self.far_image_sum
    }

    /// Outside mass: integral of |x-y|^(-1-2a) over |y| > support.
    fn outside_mass(&self, x: f64, support: f64) -> f64 {
        let a2 = 2.0 * self.symbol.a;
        ((support - x).powf(-a2) + (support + x).powf(-a2)) / a2
    }

    /// Uncalibrated principal-value integral at x for a function supported
    /// in [-support, support]: PV integral (u(x)-u(y)) |x-y|^(-1-2a) dy.
    /// Kinks at the support endpoints are resolved with tail-completing
    /// graded quadrature, so d^(a-1)-type blow-up profiles are admissible.
    pub fn pv_integral(&self, u: &dyn Fn(f64) -> Complex64, support: f64, x: f64) -> Complex64 {
        let a2 = 2.0 * self.symbol.a;
        let d = (support - x).min(support + x);
        debug_assert!(d > 0.0, "eval point on or outside the boundary");
        let delta = (0.1f64).min(0.5 * d);
        let ux = u(x);

        // symmetric near part over r in (0, delta]. The symmetric difference
        // loses all relative precision once u'' r^2 drops under the rounding
        // floor, and the kernel amplifies that noise by r^(-1-2a); the
        // grading depth is capped so the noise stays below ~1e-9 and the
        // measured-ratio tail carries the remainder.
        let near = integrate_endpoint_singular_complex_depth(
            0.0,
            delta,
            10,
            near_grading_depth(a2, delta),
            |r| (2.0 * ux - u(x + r) - u(x - r)) * r.powf(-1.0 - a2),
        );

        // far parts up to the support endpoints, graded into both the
        // kernel peak at distance delta and the kink at the endpoint
        let right = {
            let mid = 0.5 * (x + delta + support);
            integrate_endpoint_singular_complex(x + delta, mid, 12, |y| {
                (ux - u(y)) * (y - x).powf(-1.0 - a2)
            }) + integrate_endpoint_singular_complex(support, mid, 12, |y| {
                (ux - u(y)) * (y - x).powf(-1.0 - a2)
            })
        };
        let left = {
            let mid = 0.5 * (x - delta - support);
            integrate_endpoint_singular_complex(x - delta, mid, 12, |y| {
                (ux - u(y)) * (x - y).powf(-1.0 - a2)
            }) + integrate_endpoint_singular_complex(-support, mid, 12, |y| {
                (ux - u(y)) * (x - y).powf(-1.0 - a2)
            })
        };

        near + right + left + ux * self.outside_mass(x, support)
    }

    /// Apply the operator to a closure supported in [-support, support],
    /// evaluated at the given interior nodes.
    pub fn apply_fn(
        &self,
        route: Route,
        u: &dyn Fn(f64) -> Complex64,
        support: f64,
        eval: &[f64],
    ) -> Result<Vec<Complex64>> {
        match route {
            Route::SingularIntegral => {
                let g0 = self.symbol.g_plus;
                let c = self.kernel_constant;
                Ok(eval
                    .iter()
                    .map(|&x| self.symbol.coeff_at(x) * g0 * c * self.pv_integral(u, support, x))
                    .collect())
            }
            Route::Multiplier => {
                let boxed = self.multiplier_on_box(u);
                let g0 = self.symbol.g_plus;
                let c = self.kernel_constant;
                // periodization correction, interpolated from Chebyshev nodes
                let u_rule = support_rule(support);
                let u_samples: Vec<Complex64> = u_rule.nodes.iter().map(|&y| u(y)).collect();
                let u_mass: Complex64 = u_rule
                    .nodes
                    .iter()
                    .enumerate()
                    .map(|(i, _)| u_samples[i] * u_rule.weights[i])
                    .sum();
                let cheb = chebyshev_nodes(TAIL_CHEB_NODES, support);
                let tails: Vec<Complex64> = cheb
                    .iter()
                    .map(|&xc| {
                        self.periodization_correction(xc, &u_rule, &u_samples, u_mass)
                    })
                    .collect();
                Ok(eval
                    .iter()
                    .map(|&x| {
                        let per = self.interp_box(&boxed, x);
                        let tail = barycentric_cheb(&cheb, &tails, x);
                        self.symbol.coeff_at(x) * (per + g0 * c * tail)
                    })
                    .collect())
            }
        }
    }

    /// Spec-shaped entry point: apply to box samples with interval support,
    /// evaluated on a grid. Nodes within two minimal cells of the boundary
    /// are flagged (the quadrature floor).
    pub fn apply_restricted(&self, u: &SampledFunction, eval_grid: &Grid) -> Result<FieldOnGrid> {
        let n = u.len();
        let l = u.half_length;
        // multiplier on the sample's own box
        let a2 = 2.0 * self.symbol.a;
        let mult: Vec<Complex64> = (0..n)
            .map(|k| {
                let xi = frequency(k, n, l);
                Complex64::new(self.symbol.angular(xi) * xi.abs().powf(a2), 0.0)
            })
            .collect();
        let per = apply_multiplier(&u.values, &mult);
        // closure view of the samples for the correction integrals
        let uc = |y: f64| -> Complex64 {
            if y.abs() >= 1.0 {
                Complex64::new(0.0, 0.0)
            } else {
                interp_uniform(&u.values, l, y)
            }
        };
        let g0 = self.symbol.g_plus;
        let c = self.kernel_constant;
        let u_rule = support_rule(1.0);
        let u_samples: Vec<Complex64> = u_rule.nodes.iter().map(|&y| uc(y)).collect();
        let u_mass: Complex64 = u_samples
            .iter()
            .zip(&u_rule.weights)
            .map(|(s, &w)| s * w)
            .sum();
        // image sum for the sample's own box length
        let two_l = 2.0 * l;
        let mut far = 0.0;
        for m in (PERIOD_IMAGES + 1)..200_000 {
            far += (two_l * m as f64).powf(-1.0 - a2);
        }
        far += (two_l * 2e5).powf(-a2) / (a2 * two_l);
        let far = 2.0 * far;

        let cheb = chebyshev_nodes(TAIL_CHEB_NODES, 1.0);
        let tails: Vec<Complex64> = cheb
            .iter()
            .map(|&xc| {
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 1..=PERIOD_IMAGES {
                    for shift in [two_l * m as f64, -two_l * m as f64] {
                        let mut s = Complex64::new(0.0, 0.0);
                        for (i, &y) in u_rule.nodes.iter().enumerate() {
                            s += u_samples[i]
                                * u_rule.weights[i]
                                * (xc - y + shift).abs().powf(-1.0 - a2);
                        }
                        acc += s;
                    }
                }
                acc + u_mass * far
            })
            .collect();

        let floor = 2.0 * min_cell(eval_grid);
        let mut values = Vec::with_capacity(eval_grid.len());
        let mut flagged = Vec::with_capacity(eval_grid.len());
        for i in 0..eval_grid.len() {
            let x = eval_grid.nodes[i];
            let pv = interp_uniform(&per, l, x);
            let tail = barycentric_cheb(&cheb, &tails, x);
            values.push(self.symbol.coeff_at(x) * (pv + g0 * c * tail));
            flagged.push(eval_grid.node_distance(i) < floor);
        }
        Ok(FieldOnGrid {
            nodes: eval_grid.nodes.clone(),
            values,
            flagged,
        })
    }

    /// Interpolate box samples at x (6-point Lagrange on the uniform grid).
    fn interp_box(&self, boxed: &[Complex64], x: f64) -> Complex64 {
        interp_uniform(boxed, self.box_half_length, x)
    }

    /// A reusable quadrature plan for the singular route at one eval point;
    /// static graded rules, valid for inputs whose endpoint kinks have
    /// nonnegative exponents (the weighted basis functions).
    pub fn singular_plan(&self, x: f64, support: f64) -> SingularPlan {
        let a2 = 2.0 * self.symbol.a;
        let d = (support - x).min(support + x);
        let delta = (0.1f64).min(0.5 * d);
        let depth = near_grading_depth(a2, delta);
        let (near_rule, r_min) = crate::quad::graded_toward_open(0.0, delta, depth, 10);
        let near: Vec<(f64, f64)> = near_rule
            .nodes
            .iter()
            .zip(&near_rule.weights)
            .map(|(&r, &w)| (r, w * r.powf(-1.0 - a2)))
            .collect();
        // the open tail r in (0, r_min] is the second-difference completion
        // integral of -u'' r^(1-2a), evaluated with a step wide enough to
        // stay above the rounding floor
        let near_tail_factor = r_min.powf(2.0 - a2) / (2.0 - a2);
        let second_diff_step = (2.0 * r_min).max(1e-5).min(0.5 * delta);
        let mut far: Vec<(f64, f64)> = Vec::new();
        {
            let mid = 0.5 * (x + delta + support);
            let mut rule = graded_toward(x + delta, mid, 40, 10);
            rule.extend(graded_toward(support, mid, 40, 10));
            for (&y, &w) in rule.nodes.iter().zip(&rule.weights) {
                far.push((y, w * (y - x).abs().powf(-1.0 - a2)));
            }
            let mid = 0.5 * (x - delta - support);
            let mut rule = graded_toward(x - delta, mid, 40, 10);
            rule.extend(graded_toward(-support, mid, 40, 10));
            for (&y, &w) in rule.nodes.iter().zip(&rule.weights) {
                far.push((y, w * (y - x).abs().powf(-1.0 - a2)));
            }
        }
        let far_weight_sum: f64 = far.iter().map(|(_, w)| w).sum();
        SingularPlan {
            x,
            scale: self.symbol.g_plus * self.kernel_constant,
            coeff: self.symbol.coeff_at(x),
            near,
            near_tail_factor,
            second_diff_step,
            far,
            constant_mass: far_weight_sum + self.outside_mass(x, support),
        }
    }

    fn calibrate(&mut self) -> Result<()> {
        let a = self.symbol.a;
        let sigma = [0.15, 0.12];
        let centers = [0.0, -0.1];
        let eval: Vec<f64> = (0..40).map(|i| -0.8 + 1.6 * i as f64 / 39.0).collect();
        let mut cs = Vec::new();
        for radius in [1.0, 1.3] {
            let mut num = 0.0;
            let mut den = 0.0;
            for (s, c0) in sigma.iter().zip(&centers) {
                let u = move |y: f64| -> Complex64 {
                    if y.abs() >= radius {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::new((-0.5 * (y - c0) * (y - c0) / (s * s)).exp(), 0.0)
                    }
                };
                let boxed = self.multiplier_on_box(&u);
                let u_rule = support_rule(radius);
                let u_samples: Vec<Complex64> = u_rule.nodes.iter().map(|&y| u(y)).collect();
                let u_mass: Complex64 = u_samples
                    .iter()
                    .zip(&u_rule.weights)
                    .map(|(v, &w)| v * w)
                    .sum();
                for &x in &eval {
                    let m_per = self.interp_box(&boxed, x).re / self.symbol.g_plus;
                    let pv = self.pv_integral(&u, radius, x).re;
                    let tail = self
                        .periodization_correction(x, &u_rule, &u_samples, u_mass)
                        .re;
                    let rhs = pv - tail;
                    num += m_per * rhs;
                    den += rhs * rhs;
                }
            }
            if den <= 0.0 {
                return Err(FracError::Calibration(format!(
                    "degenerate calibration system at a = {a}"
                )));
            }
            cs.push(num / den);
        }
        let c = cs[0];
        let drift = (cs[0] - cs[1]).abs() / c.abs();
        if !(c.is_finite() && c > 0.0) || drift > 1e-5 {
            return Err(FracError::Calibration(format!(
                "c = {c:.6e}, drift {drift:.3e} between truncation radii"
            )));
        }
        self.kernel_constant = c;
        self.calibration_drift = drift;
        Ok(())
    }

    fn cross_validate(&mut self) -> Result<()> {
        let eval: Vec<f64> = (0..17).map(|i| -0.8 + 1.6 * i as f64 / 16.0).collect();
        let mut worst = 0.0f64;
        for k in 0..3 {
            let p = k as f64;
            let u = move |y: f64| -> Complex64 {
                if y.abs() >= 1.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    let bump = (-1.0 / (1.0 - y * y)).exp();
                    Complex64::new(bump * (1.0 + 0.5 * p * y + 0.3 * p * y * y), 0.0)
                }
            };
            let mv = self.apply_fn(Route::Multiplier, &u, 1.0, &eval)?;
            let sv = self.apply_fn(Route::SingularIntegral, &u, 1.0, &eval)?;
            let scale = mv.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
            for (m, s) in mv.iter().zip(&sv) {
                worst = worst.max((m - s).norm() / scale);
            }
        }
        self.route_agreement = worst;
        if worst > 1e-5 {
            return Err(FracError::Calibration(format!(
                "route disagreement {worst:.3e} on smooth inputs"
            )));
        }
        Ok(())
    }
}

/// Static per-point plan for the singular route; apply to many functions
/// (e.g. a whole basis) sharing the nodes and kernel weights.
#[derive(Debug, Clone)]
pub struct SingularPlan {
    pub x: f64,
    scale: f64,
    coeff: Complex64,
    near: Vec<(f64, f64)>,
    near_tail_factor: f64,
    second_diff_step: f64,
    far: Vec<(f64, f64)>,
    constant_mass: f64,
}

impl SingularPlan {
    /// Full operator value A(x) g c(a) PV(u; x).
    pub fn apply(&self, u: &dyn Fn(f64) -> Complex64) -> Complex64 {
        self.coeff * self.scale * self.pv(u)
    }

    /// g c(a) (no coefficient field A).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// The PV functional as explicit point-weight pairs:
    /// pv(u) = sum w_i u(p_i). Lets a whole basis share one plan with a
    /// single recurrence pass per point.
    pub fn functional(&self) -> Vec<(f64, f64)> {
        let mut pairs = Vec::with_capacity(2 * self.near.len() + self.far.len() + 3);
        let s = self.second_diff_step;
        let sd = self.near_tail_factor / (s * s);
        let near_sum: f64 = self.near.iter().map(|(_, w)| w).sum();
        pairs.push((self.x, self.constant_mass + 2.0 * near_sum + 2.0 * sd));
        for &(r, w) in &self.near {
            pairs.push((self.x + r, -w));
            pairs.push((self.x - r, -w));
        }
        pairs.push((self.x + s, -sd));
        pairs.push((self.x - s, -sd));
        for &(y, w) in &self.far {
            pairs.push((y, -w));
        }
        pairs
    }

    /// PV part only (no coefficient, no angular factor, no c(a)).
    pub fn pv(&self, u: &dyn Fn(f64) -> Complex64) -> Complex64 {
        let ux = u(self.x);
        let mut acc = ux * self.constant_mass;
        for &(r, w) in &self.near {
            acc += (2.0 * ux - u(self.x + r) - u(self.x - r)) * w;
        }
        // open near tail: leading second-difference term
        let s = self.second_diff_step;
        acc += (2.0 * ux - u(self.x + s) - u(self.x - s)) / (s * s) * self.near_tail_factor;
        for &(y, w) in &self.far {
            acc -= u(y) * w;
        }
        acc
    }
}

/// Quadrature rule over the support interval graded into both endpoints,
/// used for the smooth periodization-correction integrals.
fn support_rule(support: f64) -> QuadRule {
    let mut rule = graded_toward(-support, 0.0, 24, 10);
    rule.extend(graded_toward(support, 0.0, 24, 10));
    rule
}

fn min_cell(grid: &Grid) -> f64 {
    (0..grid.len())
        .map(|i| grid.local_spacing(i))
        .fold(f64::INFINITY, f64::min)
}

/// Chebyshev points on [-w, w].
fn chebyshev_nodes(n: usize, w: f64) -> Vec<f64> {
    (0..n)
        .map(|i| w * (std::f64::consts::PI * (2.0 * i as f64 + 1.0) / (2.0 * n as f64)).cos())
        .collect()
}

/// Barycentric interpolation on Chebyshev points (first kind weights).
fn barycentric_cheb(nodes: &[f64], values: &[Complex64], x: f64) -> Complex64 {
    let n = nodes.len();
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for i in 0..n {
        let diff = x - nodes[i];
        if diff.abs() < 1e-14 {
            return values[i];
        }
        let theta = std::f64::consts::PI * (2.0 * i as f64 + 1.0) / (2.0 * n as f64);
        let w = if i % 2 == 0 { 1.0 } else { -1.0 } * theta.sin();
        num += values[i] * (w / diff);
        den += w / diff;
    }
    num / den
}

/// 6-point Lagrange interpolation on a uniform box grid [-L, L).
pub(crate) fn interp_uniform(values: &[Complex64], half_length: f64, x: f64) -> Complex64 {
    let n = values.len();
    let h = 2.0 * half_length / n as f64;
    let pos = (x + half_length) / h;
    let j0 = (pos.floor() as isize - 2).clamp(0, n as isize - 6) as usize;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..6 {
        let xi = j0 + i;
        let mut w = 1.0;
        for k in 0..6 {
            if k != i {
                let xk = j0 + k;
                w *= (pos - xk as f64) / (xi as f64 - xk as f64);
            }
        }
        acc += values[xi] * w;
    }
    acc
}

/// Calibrate c(a) for the pure fractional Laplacian and return it.
pub fn calibrate_kernel_constant(a: f64) -> Result<f64> {
    let op = OperatorApplication::fractional_laplacian(a)?;
    Ok(op.kernel_constant)
}

/// Value of c(a) (-Delta)^a applied to the one-sided profile y_+^b on the
/// half-line, at x > 0, with the far field beyond Y = 2x + 4 summed by the
/// binomial expansion of the kernel. The profiles b = a and b = a - 1 are
/// annihilated; any other exponent is not.
pub fn halfline_profile_value(a: f64, kernel_constant: f64, b: f64, x: f64) -> f64 {
    let a2 = 2.0 * a;
    let u = |y: f64| if y > 0.0 { y.powf(b) } else { 0.0 };
    let ux = u(x);
    let delta = 0.5 * x;
    let big_y = 2.0 * x + 4.0;

    // symmetric near part, depth-capped against rounding noise
    let near = integrate_endpoint_singular_depth(0.0, delta, 12, near_grading_depth(a2, delta), |r| {
        (2.0 * ux - u(x + r) - u(x - r)) * r.powf(-1.0 - a2)
    });
    // left: y in (0, x - delta), kink of y^b at 0
    let left = integrate_endpoint_singular(0.0, x - delta, 12, |y| {
        (ux - u(y)) * (x - y).powf(-1.0 - a2)
    });
    // y < 0: u = 0
    let left_out = ux * x.powf(-a2) / a2;
    // right: [x + delta, Y] on geometrically growing panels
    let base = gauss_legendre(12);
    let mut right = 0.0;
    let mut lo = x + delta;
    while lo < big_y {
        let hi = (2.0 * lo).min(big_y);
        for (&t, &w) in base.nodes.iter().zip(&base.weights) {
            let y = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t;
            right += 0.5 * (hi - lo) * w * (ux - u(y)) * (y - x).powf(-1.0 - a2);
        }
        lo = hi;
    }
    // far tail y > Y: u(x) part analytic, u(y) part by binomial series of
    // (y-x)^(-1-2a) = y^(-1-2a) sum_k C(2a+k, k) (x/y)^k
    let u_x_part = ux * (big_y - x).powf(-a2) / a2;
    let mut series = 0.0;
    let mut coef = 1.0; // C(2a+k, k) x^k, k = 0
    for k in 0..40 {
        let kf = k as f64;
        series += coef * big_y.powf(b - a2 - kf) / (a2 + kf - b);
        coef *= (a2 + 1.0 + kf) / (kf + 1.0) * x;
        
        if (coef * big_y.powf(b - a2 - kf - 1.0)).abs() < 1e-16 {
            break;
        }
    }

    kernel_constant * (near + left + left_out + right + u_x_part - series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;

    fn getoor_profile(a: f64) -> impl Fn(f64) -> Complex64 {
        move |x: f64| {
            if x.abs() >= 1.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new((1.0 - x * x).powf(a), 0.0)
            }
        }
    }

    #[test]
    fn kernel_constant_at_half_matches_closed_form() {
        // c(1/2) = 1/pi in one dimension
        let c = calibrate_kernel_constant(0.5).unwrap();
        assert!(
            (c - 1.0 / std::f64::consts::PI).abs() < 1e-5,
            "c(0.5) = {c}"
        );
    }

    #[test]
    fn getoor_identity_established_by_quadrature_oracle() {
        // (-Delta)^a (1-x^2)_+^a is constant on the interval; the constant
        // agrees with Gamma(2a+1). Established here via the singular route.
        for a in [0.25, 0.5, 0.75] {
            let op = OperatorApplication::fractional_laplacian(a).unwrap();
            let u = getoor_profile(a);
            let eval = [-0.9, -0.5, -0.2, 0.0, 0.3, 0.6, 0.85];
            let vals = op
                .apply_fn(Route::SingularIntegral, &u, 1.0, &eval)
                .unwrap();
            let expected = gamma(2.0 * a + 1.0);
            for (x, v) in eval.iter().zip(&vals) {
                assert!(
                    (v.re - expected).abs() / expected < 1e-5,
                    "a={a} x={x}: {} vs {expected}",
                    v.re
                );
                assert!(v.im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn routes_agree_on_smooth_inputs() {
        use rand::Rng;
        use rand::SeedableRng;
        let op = OperatorApplication::fractional_laplacian(0.4).unwrap();
        assert!(op.route_agreement <= 1e-5);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let eval: Vec<f64> = (0..15).map(|i| -0.85 + 1.7 * i as f64 / 14.0).collect();
        for _ in 0..20 {
            let c1: f64 = rng.gen_range(-1.0..1.0);
            let c2: f64 = rng.gen_range(-1.0..1.0);
            let c3: f64 = rng.gen_range(-1.0..1.0);
            let u = move |y: f64| -> Complex64 {
                if y.abs() >= 1.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    let bump = (-1.0 / (1.0 - y * y)).exp();
                    Complex64::new(bump * (c1 + c2 * y + c3 * y * y), 0.0)
                }
            };
            let mv = op.apply_fn(Route::Multiplier, &u, 1.0, &eval).unwrap();
            let sv = op.apply_fn(Route::SingularIntegral, &u, 1.0, &eval).unwrap();
            let scale = mv.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for (m, s) in mv.iter().zip(&sv) {
                assert!((m - s).norm() / scale <= 1e-5, "{:e}", (m - s).norm() / scale);
            }
        }
    }

    #[test]
    fn real_even_symbol_gives_real_output() {
        let op = OperatorApplication::fractional_laplacian(0.6).unwrap();
        let u = getoor_profile(0.6);
        let eval = [-0.7, 0.1, 0.5];
        for route in [Route::Multiplier, Route::SingularIntegral] {
            let vals = op.apply_fn(route, &u, 1.0, &eval).unwrap();
            let scale = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for v in &vals {
                assert!(v.im.abs() <= 1e-10 * scale, "{route:?}: im {}", v.im);
            }
        }
    }

    #[test]
    fn halfline_profiles_are_annihilated() {
        for a in [0.25, 0.5, 0.75] {
            let c = calibrate_kernel_constant(a).unwrap();
            for b in [a, a - 1.0] {
                for x in [1.0, 2.0, 4.0] {
                    let v = halfline_profile_value(a, c, b, x);
                    assert!(
                        v.abs() < 1e-3,
                        "a={a} b={b} x={x}: {v}"
                    );
                }
            }
            // a mismatched exponent is NOT annihilated
            let v = halfline_profile_value(a, c, 1.6 * a, 2.0);
            assert!(v.abs() > 1e-2, "a={a}: {v}");
        }
    }

    #[test]
    fn forward_mapping_distinguishes_the_weight_exponent() {
        // u = d^a * poly stays bounded under r+P toward the boundary;
        // u = d^(2a - 0.3a-ish) * poly grows
        let a = 0.5;
        let op = OperatorApplication::fractional_laplacian(a).unwrap();
        let matched = move |y: f64| -> Complex64 {
            if y.abs() >= 1.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new((1.0 - y * y).powf(a) * (1.0 + 0.3 * y), 0.0)
            }
        };
        let b = 2.0 * a - 0.3;
        let mismatched = move |y: f64| -> Complex64 {
            if y.abs() >= 1.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new((1.0 - y * y).powf(b) * (1.0 + 0.3 * y), 0.0)
            }
        };
        let eval: Vec<f64> = (1..=10).map(|k| 1.0 - 0.3 * 0.5f64.powi(k)).collect();
        let vm = op
            .apply_fn(Route::SingularIntegral, &matched, 1.0, &eval)
            .unwrap();
        let vmis = op
            .apply_fn(Route::SingularIntegral, &mismatched, 1.0, &eval)
            .unwrap();
        let bounded: Vec<f64> = vm.iter().map(|v| v.norm()).collect();
        let growing: Vec<f64> = vmis.iter().map(|v| v.norm()).collect();
        // matched: flat within a factor 2 over three decades of d
        let flat_ratio = bounded.last().unwrap() / bounded.first().unwrap();
        assert!(flat_ratio < 2.0, "matched profile grew by {flat_ratio}");
        // mismatched: grows like d^(b - 2a) = d^-0.3: factor ~ 8 over 3 decades
        let grow_ratio = growing.last().unwrap() / growing.first().unwrap();
        assert!(grow_ratio > 4.0, "mismatched profile grew only by {grow_ratio}");
    }

    #[test]
    fn apply_restricted_flags_boundary_layer() {
        use crate::domain::{make_grid, Domain1D};
        let a = 0.5;
        let op = OperatorApplication::fractional_laplacian(a).unwrap();
        let n = 1 << 15;
        let u = SampledFunction::from_fn(4.0, n, crate::halfline::SupportTag::Interval, |x| {
            getoor_profile(a)(x)
        });
        let grid = make_grid(Domain1D::Interval, 64, 1.0).unwrap();
        let field = op.apply_restricted(&u, &grid).unwrap();
        assert!(field.flagged.iter().any(|&f| f));
        assert!(!field.flagged[grid.len() / 2]);
        // interior values near Gamma(2a+1)
        let expected = gamma(2.0 * a + 1.0);
        for i in 0..grid.len() {
            if grid.node_distance(i) > 0.2 {
                assert!(
                    (field.values[i].re - expected).abs() < 2e-2 * expected,
                    "node {i}: {}",
                    field.values[i].re
                );
            }
        }
    }
}
