//! Scalar index bookkeeping: the regularity-lifting exponent m(p), the
//! bootstrap sequence, the resolvent index r_q, sector membership, and
//! transmission-space regime classification.

use crate::error::{FracError, Result};

/// Sector in the complex plane containing spectrum and numerical range:
/// { Re(lambda) >= c - beta, |Im(lambda)| <= C/c * (Re(lambda) + beta) }.
#[derive(Debug, Clone, Copy)]
pub struct SectorParams {
    /// Coercivity constant, > 0.
    pub c: f64,
    /// Real shift.
    pub beta: f64,
    /// Form-boundedness constant, >= 0.
    pub big_c: f64,
}

impl SectorParams {
    pub fn new(c: f64, beta: f64, big_c: f64) -> Result<Self> {
        if c <= 0.0 {
            return Err(FracError::InvalidParameter(format!(
                "sector coercivity must be positive, got {c}"
            )));
        }
        if big_c < 0.0 {
            return Err(FracError::InvalidParameter(format!(
                "form bound must be nonnegative, got {big_c}"
            )));
        }
        Ok(SectorParams { c, beta, big_c })
    }
}

/// Which structural regime a transmission-space index (mu, s, q) falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceRegime {
    /// s < mu + 1/q: the space coincides with the plain supported space.
    Supported,
    /// s - mu - 1/q is a nonnegative integer: an epsilon is lost.
    EpsilonLoss,
    /// otherwise: the space splits off an explicit d^mu factor.
    SplitWithWeight,
}

/// m(p) = min(a*p, 1).
pub fn m_of_p(a: f64, p: f64) -> f64 {
    (a * p).min(1.0)
}

/// Strictly increasing exponent sequence from q_start to p_target.
///
/// Each step obeys the strict bound q_{j+1} < n/(n - m(q_j)) * q_j; the
/// safety factor eta in (0,1) backs the iterate off the open bound. When
/// the discounted bound fails to advance, the midpoint between the current
/// iterate and the bound is used instead, which always advances. If
/// m(q_j) >= n the sequence jumps straight to the target.
pub fn bootstrap_sequence(n: u32, a: f64, q_start: f64, p_target: f64, eta: f64) -> Result<Vec<f64>> {
    if !(0.0 < a && a < 1.0) {
        return Err(FracError::InvalidParameter(format!("a must be in (0,1), got {a}")));
    }
    if !(1.0 < q_start && q_start <= p_target) {
        return Err(FracError::InvalidParameter(format!(
            "need 1 < q_start <= p_target, got {q_start}, {p_target}"
        )));
    }
    if !(0.0 < eta && eta < 1.0) {
        return Err(FracError::InvalidParameter(format!("eta must be in (0,1), got {eta}")));
    }
    if n == 0 {
        return Err(FracError::InvalidParameter("dimension must be >= 1".into()));
    }
    let nf = n as f64;
    let mut seq = vec![q_start];
    let mut q = q_start;
    while q < p_target {
        let m = m_of_p(a, q);
        if m >= nf {
            seq.push(p_target);
            break;
        }
        let bound = nf * q / (nf - m);
        // the discounted bound can stall when (1-eta) n/(n-m) hovers near 1;
        // the midpoint toward the open bound always advances geometrically,
        // and both candidates respect the strict step inequality
        let next = ((1.0 - eta) * bound).max(0.5 * (q + bound)).min(p_target);
        seq.push(next);
        q = next;
    }
    Ok(seq)
}

/// r_q = min(2a, a + 1/q - eps).
pub fn r_q(a: f64, q: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < a + 1.0 / q) {
        return Err(FracError::InvalidParameter(format!(
            "eps must lie in (0, a + 1/q), got {eps}"
        )));
    }
    Ok((2.0 * a).min(a + 1.0 / q - eps))
}

/// Membership test for the sector region.
pub fn in_sector(lambda: num_complex::Complex64, sector: &SectorParams) -> bool {
    let re = lambda.re;
    let im = lambda.im;
    re >= sector.c - sector.beta && im.abs() <= sector.big_c / sector.c * (re + sector.beta)
}

/// Classify the transmission-space regime for indices (mu, s, q).
pub fn classify_regime(mu: f64, s: f64, q: f64) -> Result<SpaceRegime> {
    if mu <= -1.0 {
        return Err(FracError::InvalidParameter(format!("mu must exceed -1, got {mu}")));
    }
    if !(q > 1.0) {
        return Err(FracError::InvalidParameter(format!("q must exceed 1, got {q}")));
    }
    let q_dual = q / (q - 1.0);
    if s <= mu - 1.0 / q_dual {
        return Err(FracError::InvalidParameter(format!(
            "s = {s} out of range: need s > mu - 1/q' = {}",
            mu - 1.0 / q_dual
        )));
    }
    let gap = s - mu - 1.0 / q;
    const INT_TOL: f64 = 1e-9;
    if gap < -INT_TOL {
        Ok(SpaceRegime::Supported)
    } else if (gap - gap.round()).abs() <= INT_TOL && gap.round() >= 0.0 {
        Ok(SpaceRegime::EpsilonLoss)
    } else {
        Ok(SpaceRegime::SplitWithWeight)
    }
}

/// Whether the large-solution problem fits in L_q: q < 1/(1-a), strictly.
pub fn admissible_q_for_large_solutions(a: f64, q: f64) -> bool {
    q < 1.0 / (1.0 - a)
}
