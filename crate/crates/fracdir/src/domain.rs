//! 1-D domains, boundary distance functions, and boundary-clustered grids.
//!
//! The two domains in play are the open interval (-1, 1) and a truncation
//! window [0, L] of the half-line, whose only true boundary point is 0.

use crate::error::{FracError, Result};
use crate::quad::{gauss_legendre, QuadRule};

/// A 1-D computational domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain1D {
    /// The open interval (-1, 1) with boundary points {-1, +1}.
    Interval,
    /// A window [0, L] on the half-line; the boundary is the single point 0
    /// (L is an artificial truncation edge, not a boundary).
    HalflineWindow { length: f64 },
}

impl Domain1D {
    pub fn halfline(length: f64) -> Result<Self> {
        if length <= 0.0 {
            return Err(FracError::InvalidParameter(format!(
                "half-line window length must be positive, got {length}"
            )));
        }
        Ok(Domain1D::HalflineWindow { length })
    }

    pub fn boundary_points(&self) -> Vec<f64> {
        match self {
            Domain1D::Interval => vec![-1.0, 1.0],
            Domain1D::HalflineWindow { .. } => vec![0.0],
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            Domain1D::Interval => 2.0,
            Domain1D::HalflineWindow { length } => *length,
        }
    }

    pub fn endpoints(&self) -> (f64, f64) {
        match self {
            Domain1D::Interval => (-1.0, 1.0),
            Domain1D::HalflineWindow { length } => (0.0, *length),
        }
    }

    pub fn contains_closed(&self, x: f64) -> bool {
        let (lo, hi) = self.endpoints();
        x >= lo && x <= hi
    }
}

/// Exact boundary distance for a domain.
///
/// Interval: min(1-x, 1+x). Half-line window: x.
pub fn distance(domain: Domain1D, x: f64) -> Result<f64> {
    if !domain.contains_closed(x) {
        return Err(FracError::OutsideDomain { x });
    }
    Ok(match domain {
        Domain1D::Interval => (1.0 - x).min(1.0 + x),
        Domain1D::HalflineWindow { .. } => x,
    })
}

/// A boundary distance function: either the exact distance d0, or an
/// equivalent distance d = d0 * (offset + amplitude*sin(frequency*x)),
/// bounded above and below by constant multiples of d0.
#[derive(Debug, Clone)]
pub struct DistanceFn {
    pub domain: Domain1D,
    flavor: DistanceFlavor,
}

#[derive(Debug, Clone)]
enum DistanceFlavor {
    Exact,
    Equivalent {
        offset: f64,
        amplitude: f64,
        frequency: f64,
    },
}

impl DistanceFn {
    pub fn exact(domain: Domain1D) -> Self {
        DistanceFn {
            domain,
            flavor: DistanceFlavor::Exact,
        }
    }

    /// d(x) = d0(x) * (offset + amplitude*sin(frequency*x)); requires
    /// offset > |amplitude| so the factor stays positive.
    pub fn equivalent(domain: Domain1D, offset: f64, amplitude: f64, frequency: f64) -> Result<Self> {
        if offset <= amplitude.abs() {
            return Err(FracError::InvalidParameter(format!(
                "equivalent distance needs offset > |amplitude|, got {offset} vs {amplitude}"
            )));
        }
        Ok(DistanceFn {
            domain,
            flavor: DistanceFlavor::Equivalent {
                offset,
                amplitude,
                frequency,
            },
        })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let d0 = distance(self.domain, x)?;
        Ok(match &self.flavor {
            DistanceFlavor::Exact => d0,
            DistanceFlavor::Equivalent {
                offset,
                amplitude,
                frequency,
            } => d0 * (offset + amplitude * (frequency * x).sin()),
        })
    }

    /// Equivalence constant C with C^-1 d0 <= d <= C d0.
    pub fn equivalence_constant(&self) -> f64 {
        match &self.flavor {
            DistanceFlavor::Exact => 1.0,
            DistanceFlavor::Equivalent {
                offset, amplitude, ..
            } => {
                let hi = offset + amplitude.abs();
                let lo = offset - amplitude.abs();
                hi.max(1.0 / lo)
            }
        }
    }

    /// Bound on max(d)/min(d) over points with equal exact distance.
    pub fn ratio_bound(&self) -> f64 {
        match &self.flavor {
            DistanceFlavor::Exact => 1.0,
            DistanceFlavor::Equivalent {
                offset, amplitude, ..
            } => (offset + amplitude.abs()) / (offset - amplitude.abs()),
        }
    }

    /// Lipschitz bound of the distance function on the closed domain.
    pub fn lipschitz_bound(&self) -> f64 {
        match &self.flavor {
            DistanceFlavor::Exact => 1.0,
            DistanceFlavor::Equivalent {
                offset,
                amplitude,
                frequency,
            } => {
                // d = d0 * f(x): |d'| <= |f|_inf + d0_max * |f'|_inf
                let d0_max = match self.domain {
                    Domain1D::Interval => 1.0,
                    Domain1D::HalflineWindow { length } => length,
                };
                offset + amplitude.abs() + d0_max * amplitude.abs() * frequency.abs()
            }
        }
    }
}

/// Quadrature grid over a domain: strictly increasing interior nodes with
/// positive weights summing to the domain length.
#[derive(Debug, Clone)]
pub struct Grid {
    pub domain: Domain1D,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub refinement_level: u32,
    pub clustering: u32,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn as_rule(&self) -> QuadRule {
        QuadRule {
            nodes: self.nodes.clone(),
            weights: self.weights.clone(),
        }
    }

    /// Distance from node i to the nearest boundary point.
    pub fn node_distance(&self, i: usize) -> f64 {
        distance(self.domain, self.nodes[i]).expect("grid nodes are interior")
    }

    /// Smallest boundary distance over all nodes (the boundary-layer floor scale).
    pub fn min_distance(&self) -> f64 {
        (0..self.len())
            .map(|i| self.node_distance(i))
            .fold(f64::INFINITY, f64::min)
    }

    /// Local spacing near node i (distance to the nearest neighbor node).
    pub fn local_spacing(&self, i: usize) -> f64 {
        let n = self.len();
        if n < 2 {
            return self.domain.length();
        }
        if i == 0 {
            self.nodes[1] - self.nodes[0]
        } else if i == n - 1 {
            self.nodes[n - 1] - self.nodes[n - 2]
        } else {
            (self.nodes[i + 1] - self.nodes[i]).min(self.nodes[i] - self.nodes[i - 1])
        }
    }
}

/// Build a Gauss-type grid on the domain with nodes clustered toward the
/// boundary. `clustering` = 0 gives a plain Gauss-Legendre rule; clustering
/// gamma >= 1 pushes node spacing to O(d^gamma)-type accumulation near the
/// boundary, which is what resolves d^(a-1) data.
pub fn make_grid(domain: Domain1D, n: usize, clustering: f64) -> Result<Grid> {
    if n < 8 {
        return Err(FracError::GridTooSmall { need: 8, got: n });
    }
    if clustering < 0.0 {
        return Err(FracError::InvalidParameter(format!(
            "clustering exponent must be >= 0, got {clustering}"
        )));
    }
    let gamma = clustering.round();
    if (clustering - gamma).abs() > 1e-9 {
        return Err(FracError::InvalidParameter(format!(
            "clustering exponent must be an integer, got {clustering}"
        )));
    }
    let gamma = gamma as u32;
    let base = gauss_legendre(n);

    let (nodes, weights) = match domain {
        Domain1D::Interval => {
            // odd polynomial map psi with psi' proportional to (1-t^2)^gamma,
            // normalized so psi(+-1) = +-1; the map and its derivative are
            // polynomials, so the mapped weights still sum to the length exactly
            let coeffs = clustering_map_coeffs(gamma);
            let mut nodes = Vec::with_capacity(n);
            let mut weights = Vec::with_capacity(n);
            for (&t, &w) in base.nodes.iter().zip(&base.weights) {
                nodes.push(eval_odd_poly(&coeffs, t));
                weights.push(w * eval_odd_poly_deriv(&coeffs, t));
            }
            (nodes, weights)
        }
        Domain1D::HalflineWindow { length } => {
            // psi(t) = L ((1+t)/2)^(gamma+1) clusters toward the boundary x = 0
            let p = gamma as i32 + 1;
            let mut nodes = Vec::with_capacity(n);
            let mut weights = Vec::with_capacity(n);
            for (&t, &w) in base.nodes.iter().zip(&base.weights) {
                let u = 0.5 * (1.0 + t);
                nodes.push(length * u.powi(p));
                weights.push(w * length * p as f64 * u.powi(p - 1) * 0.5);
            }
            (nodes, weights)
        }
    };

    Ok(Grid {
        domain,
        nodes,
        weights,
        refinement_level: 0,
        clustering: gamma,
    })
}

/// Coefficients c_k of psi(t) = sum_k c_k t^(2k+1) with psi' = C (1-t^2)^gamma
/// and psi(1) = 1.
fn clustering_map_coeffs(gamma: u32) -> Vec<f64> {
    // (1-s^2)^gamma = sum_j binom(gamma, j) (-1)^j s^(2j); integrate term-wise
    let g = gamma as i64;
    let mut raw = Vec::with_capacity(gamma as usize + 1);
    let mut binom = 1.0f64;
    for j in 0..=g {
        if j > 0 {
            binom *= (g - j + 1) as f64 / j as f64;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        raw.push(sign * binom / (2 * j + 1) as f64);
    }
    let norm: f64 = raw.iter().sum();
    raw.iter().map(|c| c / norm).collect()
}

fn eval_odd_poly(coeffs: &[f64], t: f64) -> f64 {
    let t2 = t * t;
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * t2 + c;
    }
    acc * t
}

fn eval_odd_poly_deriv(coeffs: &[f64], t: f64) -> f64 {
    let t2 = t * t;
    let mut acc = 0.0;
    for (k, &c) in coeffs.iter().enumerate().rev() {
        let deg = (2 * k + 1) as f64;
        acc = acc * t2 + c * deg;
    }
    acc
}
