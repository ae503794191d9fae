//! Independent verifiers: boundary-exponent fitting, Holder seminorms, the
//! embedding of weighted Holder classes, and the halfways Green constant.

use statrs::function::gamma::gamma;

use crate::domain::DistanceFn;
use crate::error::{FracError, Result};
use crate::quad::integrate_endpoint_singular;

/// Least-squares slope of log(v) against log(d). Returns (slope, r2).
pub fn log_log_fit(ds: &[f64], vals: &[f64]) -> Result<(f64, f64)> {
    let mut xs = Vec::with_capacity(ds.len());
    let mut ys = Vec::with_capacity(ds.len());
    for (&d, &v) in ds.iter().zip(vals) {
        if d > 0.0 && v > 0.0 && v.is_finite() {
            xs.push(d.ln());
            ys.push(v.ln());
        }
    }
    if xs.len() < 6 {
        return Err(FracError::InvalidParameter(format!(
            "exponent fit needs at least 6 usable nodes, got {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let p = intercept + slope * x;
            (y - p) * (y - p)
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok((slope, r2))
}

/// Outcome of a boundary exponent fit.
#[derive(Debug, Clone, Copy)]
pub struct ExponentFit {
    pub exponent: f64,
    pub r2: f64,
}

impl ExponentFit {
    /// A fit is confident when r2 >= 0.99.
    pub fn confident(&self) -> bool {
        self.r2 >= 0.99
    }
}

/// Fit the boundary exponent of |u| at one endpoint by sampling the closure
/// at log-spaced distances d in [d_lo, d_hi]. `endpoint` is -1 or +1 for the
/// interval (the sample point is endpoint - sign(endpoint) * d).
pub fn boundary_exponent_fit<F: Fn(f64) -> f64>(
    u: F,
    endpoint: f64,
    d_lo: f64,
    d_hi: f64,
) -> Result<ExponentFit> {
    if !(d_lo > 0.0 && d_hi > d_lo) {
        return Err(FracError::InvalidParameter(format!(
            "bad fit window [{d_lo}, {d_hi}]"
        )));
    }
    let m = 48;
    let mut ds = Vec::with_capacity(m);
    let mut vs = Vec::with_capacity(m);
    for i in 0..m {
        let frac = i as f64 / (m - 1) as f64;
        let d = d_lo * (d_hi / d_lo).powf(frac);
        let x = endpoint - endpoint.signum() * d;
        ds.push(d);
        vs.push(u(x).abs());
    }
    let (slope, r2) = log_log_fit(&ds, &vs)?;
    Ok(ExponentFit { exponent: slope, r2 })
}

/// Same fit from grid samples: nodes with distance-to-endpoint in
/// [d_lo, d_hi] enter the regression.
pub fn boundary_exponent_fit_grid(
    nodes: &[f64],
    values: &[f64],
    endpoint: f64,
    d_lo: f64,
    d_hi: f64,
) -> Result<ExponentFit> {
    let mut ds = Vec::new();
    let mut vs = Vec::new();
    for (&x, &v) in nodes.iter().zip(values) {
        let d = (endpoint - x).abs();
        if d >= d_lo && d <= d_hi {
            ds.push(d);
            vs.push(v.abs());
        }
    }
    let (slope, r2) = log_log_fit(&ds, &vs)?;
    Ok(ExponentFit { exponent: slope, r2 })
}

/// Holder-b seminorm estimate: max over all sample pairs of
/// |u(x)-u(y)| / |x-y|^b. Requires 0 < b < 1.
pub fn holder_seminorm(xs: &[f64], vs: &[f64], b: f64) -> Result<f64> {
    if !(0.0 < b && b < 1.0) {
        return Err(FracError::InvalidParameter(format!(
            "holder exponent must be in (0,1), got {b}"
        )));
    }
    assert_eq!(xs.len(), vs.len());
    let mut sup = 0.0f64;
    for i in 0..xs.len() {
        for j in (i + 1)..xs.len() {
            let dx = (xs[i] - xs[j]).abs();
            if dx == 0.0 {
                continue;
            }
            let dv = (vs[i] - vs[j]).abs();
            sup = sup.max(dv / dx.powf(b));
        }
    }
    Ok(sup)
}

/// Report of one embedding check run.
#[derive(Debug, Clone)]
pub struct EmbeddingReport {
    pub pass: bool,
    /// Seminorm of u/d^a at each refinement level.
    pub seminorms: Vec<f64>,
    /// Successive ratios; bounded (<= 1.1) means the quotient stays in C^b.
    pub ratios: Vec<f64>,
    /// Far pairs (|x-y| > d(y)/3) obey the direct two-term bound.
    pub far_pair_bound_ok: bool,
    /// Near pairs obey r = 1 - d(x)/d(y) <= 1/3 and the two-piece split bound.
    pub near_pair_split_ok: bool,
    /// A pair witnessing failure, when any.
    pub witness: Option<(f64, f64)>,
}

/// Check that u in C^(a+b) with u = O(d^(a+b)) has u/d^a in C^b: the
/// seminorm of u/d^a must stay bounded under grid refinement, and the two
/// case families (far pairs and near pairs) must obey their respective
/// bounds. `dist` supplies the distance function (exact or equivalent).
pub fn embedding_check<F: Fn(f64) -> f64>(
    a: f64,
    b: f64,
    u: F,
    dist: &DistanceFn,
    levels: usize,
) -> Result<EmbeddingReport> {
    if !(a > 0.0 && b > 0.0 && a + b < 1.0) {
        return Err(FracError::InvalidParameter(format!(
            "need a, b > 0 with a + b < 1, got a={a}, b={b}"
        )));
    }
    let domain = dist.domain;
    let mut seminorms = Vec::new();
    let mut witness = None;

    let mut finest: Option<(Vec<f64>, Vec<f64>)> = None;
    for level in 0..levels {
        let n = 80 * (1usize << level);
        let grid = crate::domain::make_grid(domain, n, 1.0)?;
        let mut quots = Vec::with_capacity(grid.len());
        for &x in &grid.nodes {
            let d = dist.eval(x)?;
            quots.push(u(x) / d.powf(a));
        }
        let s = holder_seminorm(&grid.nodes, &quots, b)?;
        seminorms.push(s);
        finest = Some((grid.nodes.clone(), quots));
    }
    let ratios: Vec<f64> = seminorms.windows(2).map(|w| w[1] / w[0]).collect();
    let growth_ok = ratios.iter().all(|&r| r <= 1.1) && seminorms.iter().all(|s| s.is_finite());
    if !growth_ok {
        // locate a near-boundary pair on the finest grid as the witness
        if let Some((nodes, quots)) = &finest {
            let mut worst = (0usize, 1usize, 0.0f64);
            for i in 0..nodes.len() {
                for j in (i + 1)..nodes.len() {
                    let dx = (nodes[i] - nodes[j]).abs();
                    if dx == 0.0 {
                        continue;
                    }
                    let v = (quots[i] - quots[j]).abs() / dx.powf(b);
                    if v > worst.2 {
                        worst = (i, j, v);
                    }
                }
            }
            witness = Some((nodes[worst.0], nodes[worst.1]));
        }
    }

    // case analysis on the finest grid
    let (nodes, quots) = finest.expect("at least one level");
    let mut sup_env = 0.0f64; // sup |u| / d^(a+b)
    let mut us = Vec::with_capacity(nodes.len());
    let mut dsv = Vec::with_capacity(nodes.len());
    for &x in &nodes {
        let d = dist.eval(x)?;
        let ux = u(x);
        us.push(ux);
        dsv.push(d);
        sup_env = sup_env.max(ux.abs() / d.powf(a + b));
    }
    let holder_u = holder_seminorm(&nodes, &us, a + b)?;
    let slack = 1.0 + 1e-9;
    // constants of the case partition; an equivalent distance widens them
    // by its ratio and Lipschitz bounds (the replacement lemma's "other
    // constants")
    let rho = dist.ratio_bound();
    let lip = dist.lipschitz_bound();
    // pair classification runs on the exact distance; r = 1 - d(x)/d(y)
    // measured with the supplied d can reach 1 - (2/3)/rho^2
    let r_bound = 1.0 - (2.0 / 3.0) / (rho * rho);
    let r_bound = r_bound.max(1.0 / 3.0);

    let mut far_ok = true;
    let mut near_ok = true;
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            let (xi, xj) = (nodes[i], nodes[j]);
            let dx = (xi - xj).abs();
            if dx == 0.0 {
                continue;
            }
            let d0i = crate::domain::distance(domain, xi)?;
            let d0j = crate::domain::distance(domain, xj)?;
            // order by the exact distance: s at the closer point, t farther
            let (s0, t0, s, t, u_near, u_far) = if d0i <= d0j {
                (d0i, d0j, dsv[i], dsv[j], us[i], us[j])
            } else {
                (d0j, d0i, dsv[j], dsv[i], us[j], us[i])
            };
            let ratio = (quots[i] - quots[j]).abs() / dx.powf(b);
            if dx > t0 / 3.0 {
                // far pairs: two-term direct bound 2 * 3^b * sup(|u|/d^(a+b)),
                // scaled by rho^(a+b) for an equivalent distance
                let bound = 2.0 * 3.0f64.powf(b) * sup_env * rho.powf(a + b);
                if ratio > bound * slack + 1e-12 {
                    far_ok = false;
                    witness.get_or_insert((xi, xj));
                }
            } else {
                // near pairs: exact distances are comparable and dominate the gap
                let r0 = 1.0 - s0 / t0;
                if !(r0 >= -1e-12 && r0 <= 1.0 / 3.0 + 1e-9 && dx <= s0 / 2.0 + 1e-12) {
                    near_ok = false;
                    witness.get_or_insert((xi, xj));
                }
                let r = 1.0 - s / t;
                if r > r_bound + 1e-9 {
                    near_ok = false;
                    witness.get_or_insert((xi, xj));
                }
                // piece I: |u(x)-u(y)| / (d(x)^a |x-y|^b) <= [u]_(a+b) (rho/2)^a
                let piece_i = (u_near - u_far).abs() / (s.powf(a) * dx.powf(b));
                if piece_i > holder_u * (rho / 2.0).powf(a) * slack + 1e-12 {
                    near_ok = false;
                    witness.get_or_insert((xi, xj));
                }
                // piece II: |u(y)| |d(x)^-a - d(y)^-a| / |x-y|^b: through the
                // Taylor control of (1-r)^-a - 1 and |d(x)-d(y)| <= lip |x-y|
                if r > 0.0 {
                    let piece_ii = u_far.abs() * (s.powf(-a) - t.powf(-a)).abs() / dx.powf(b);
                    let taylor = ((1.0 - r).powf(-a) - 1.0) / r.powf(b);
                    let bound = sup_env * rho.powf(a + b) * taylor * lip.powf(b);
                    if piece_ii > bound * slack + 1e-12 {
                        near_ok = false;
                        witness.get_or_insert((xi, xj));
                    }
                }
            }
        }
    }

    Ok(EmbeddingReport {
        pass: growth_ok && far_ok && near_ok,
        seminorms,
        ratios,
        far_pair_bound_ok: far_ok,
        near_pair_split_ok: near_ok,
        witness,
    })
}

/// Report of the halfways Green constant measurement.
#[derive(Debug, Clone)]
pub struct GreensReport {
    pub a: f64,
    /// Interior pairing integral(u * Pv) - integral(Pu * v).
    pub lhs: f64,
    /// Sum over endpoints of raw trace products.
    pub trace_products: f64,
    /// Measured constant lhs / trace_products.
    pub measured: f64,
    /// Gamma(a) * Gamma(a+1).
    pub expected: f64,
    /// Gamma(a+1)^2, the disputed value; must be rejected.
    pub disputed: f64,
    /// Error estimate on the measured constant.
    pub sigma: f64,
    pub raw_trace_u: [f64; 2],
    pub raw_trace_v: [f64; 2],
}

impl GreensReport {
    pub fn relative_error(&self) -> f64 {
        (self.measured - self.expected).abs() / self.expected
    }

    /// Separation from the disputed constant in units of sigma.
    pub fn disputed_separation(&self) -> f64 {
        (self.measured - self.disputed).abs() / self.sigma.max(1e-300)
    }
}

/// Measure the halfways Green constant on the interval for P = (-Delta)^a:
/// integral(u Pv - Pu v) over the interval against the sum of endpoint
/// products of the raw weighted limits u/d^(a-1) and v/d^a.
///
/// `u` must carry the d^(a-1) profile (nonzero raw trace), `v` the d^a
/// profile; `pu`, `pv` are the restricted operator applications, supplied by
/// the caller through an independent route.
pub fn greens_defect(
    a: f64,
    u: &dyn Fn(f64) -> f64,
    pu: &dyn Fn(f64) -> f64,
    v: &dyn Fn(f64) -> f64,
    pv: &dyn Fn(f64) -> f64,
) -> Result<GreensReport> {
    let integrand = |x: f64| u(x) * pv(x) - pu(x) * v(x);
    // the integrand carries d^(a-1)-type endpoint behavior; split at 0 and
    // grade into each endpoint
    let lhs_fine = integrate_endpoint_singular(-1.0, 0.0, 14, integrand)
        + integrate_endpoint_singular(1.0, 0.0, 14, integrand);
    let lhs_coarse = integrate_endpoint_singular(-1.0, 0.0, 8, integrand)
        + integrate_endpoint_singular(1.0, 0.0, 8, integrand);
    let quad_err = (lhs_fine - lhs_coarse).abs();

    // raw weighted limits by linear-in-d extrapolation over a near window
    let raw_limit = |f: &dyn Fn(f64) -> f64, endpoint: f64, w: f64| -> (f64, f64) {
        let m = 24;
        let d_lo = 1e-6f64;
        let d_hi = 0.02f64;
        let mut sx = 0.0;
        let mut sxx = 0.0;
        let mut sy = 0.0;
        let mut sxy = 0.0;
        let mut ys = Vec::with_capacity(m);
        let mut ds = Vec::with_capacity(m);
        for i in 0..m {
            let frac = i as f64 / (m - 1) as f64;
            let d = d_lo * (d_hi / d_lo).powf(frac);
            let x = endpoint - endpoint.signum() * d;
            let y = f(x) / d.powf(w);
            sx += d;
            sxx += d * d;
            sy += y;
            sxy += d * y;
            ys.push(y);
            ds.push(d);
        }
        let n = m as f64;
        let det = n * sxx - sx * sx;
        let t0 = (sy * sxx - sxy * sx) / det;
        let t1 = (sxy * n - sy * sx) / det;
        let res = ds
            .iter()
            .zip(&ys)
            .map(|(&d, &y)| (y - t0 - t1 * d).powi(2))
            .sum::<f64>()
            .sqrt();
        (t0, res)
    };

    let (tu_m, eu_m) = raw_limit(&u, -1.0, a - 1.0);
    let (tu_p, eu_p) = raw_limit(&u, 1.0, a - 1.0);
    let (tv_m, ev_m) = raw_limit(&v, -1.0, a);
    let (tv_p, ev_p) = raw_limit(&v, 1.0, a);

    let trace_products = tu_m * tv_m + tu_p * tv_p;
    if trace_products.abs() < 1e-12 {
        return Err(FracError::Numerical(
            "trace products below noise floor; Green measurement inconclusive".into(),
        ));
    }
    let measured = lhs_fine / trace_products;
    // propagate quadrature difference and fit residuals
    let trace_err = (eu_m.abs() * tv_m.abs()
        + eu_p.abs() * tv_p.abs()
        + ev_m.abs() * tu_m.abs()
        + ev_p.abs() * tu_p.abs())
        / trace_products.abs();
    let sigma = (quad_err / trace_products.abs()) + measured.abs() * trace_err + 1e-9;

    Ok(GreensReport {
        a,
        lhs: lhs_fine,
        trace_products,
        measured,
        expected: gamma(a) * gamma(a + 1.0),
        disputed: gamma(a + 1.0).powi(2),
        sigma,
        raw_trace_u: [tu_m, tu_p],
        raw_trace_v: [tv_m, tv_p],
    })
}
