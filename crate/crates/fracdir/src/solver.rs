//! The discrete Dirichlet realization: Galerkin assembly in the weighted
//! basis, coercivity and sector certificates, eigenpairs with their adjoint
//! structure, direct and resolvent solves, and the Fredholm alternative.

use num_complex::Complex64;

use crate::basis::{eval_orthonormal, SpectralFunction};
use crate::domain::Grid;
use crate::error::{FracError, Result};
use crate::fracop::{OperatorApplication, Route};
use crate::linalg::{
    self, mat_vec, weighted_inner, weighted_norm, CMat, EigenPair,
};
use crate::params::SectorParams;
use crate::symbols::check_strong_ellipticity;

/// Eigenvalues with kernel and cokernel bases in coefficient space.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Distinct eigenvalues (cluster representatives), sorted by real part.
    pub eigenvalues: Vec<Complex64>,
    /// Kernel basis per eigenvalue (M-normalized coefficient vectors).
    pub kernels: Vec<Vec<Vec<Complex64>>>,
    /// Cokernel basis per eigenvalue: eigenvectors of the adjoint pencil at
    /// the conjugate eigenvalue.
    pub cokernels: Vec<Vec<Vec<Complex64>>>,
}

impl Spectrum {
    pub fn kernel_dim(&self, idx: usize) -> usize {
        self.kernels[idx].len()
    }

    pub fn cokernel_dim(&self, idx: usize) -> usize {
        self.cokernels[idx].len()
    }

    /// Index of the eigenvalue within relative tolerance of lambda, if any.
    pub fn locate(&self, lambda: Complex64, rel_tol: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, ev) in self.eigenvalues.iter().enumerate() {
            let d = (lambda - ev).norm() / (1.0 + ev.norm());
            if d <= rel_tol && best.map_or(true, |(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Assembled discrete Dirichlet realization.
#[derive(Debug, Clone)]
pub struct DirichletRealization {
    pub op: OperatorApplication,
    pub basis_size: usize,
    pub grid: Grid,
    /// stiffness[k][j] = <P phi_j, phi_k>.
    pub stiffness: CMat,
    /// mass[k][j] = <phi_j, phi_k>, real symmetric positive definite.
    pub mass: CMat,
    /// Reference Hermitian form of the unit-coefficient fractional energy.
    pub h_ref: CMat,
    /// Certified coercivity pair (c, beta): Re(Su,u) >= c (H_ref u,u) - beta (Mu,u).
    pub garding: (f64, f64),
    /// Sector containing spectrum and numerical range.
    pub sector: SectorParams,
    /// Smallest eigenvalue of (H_ref, M): the discrete Poincare constant.
    pub poincare: f64,
    /// Form-boundedness constant: |s(u,u)| <= C (H_ref u, u).
    pub form_bound: f64,
    /// Hermitian defect of the stiffness (zero for selfadjoint symbols).
    pub hermitian_defect: f64,
    /// Mass-matrix symmetry defect.
    pub mass_symmetry_defect: f64,
    pub spectrum: Spectrum,
}

/// Relative tolerance routing lambda into the Fredholm branch.
pub const SPECTRUM_TOL: f64 = 1e-6;

/// Assemble the realization: quadrature of the form <P phi_j, phi_k> on the
/// grid, coercivity pair with c = 0.9 c0, sector certificate, and the eigen
/// and adjoint-eigen structure of the pencil (S, M).
pub fn assemble(op: OperatorApplication, k_basis: usize, grid: &Grid) -> Result<DirichletRealization> {
    if k_basis < 4 {
        return Err(FracError::InvalidParameter(format!(
            "basis size must be at least 4, got {k_basis}"
        )));
    }
    let c0 = check_strong_ellipticity(&op.symbol, grid)?;
    if c0 <= 0.0 {
        return Err(FracError::NotStronglyElliptic { c0 });
    }
    let a = op.symbol.a;
    let n = grid.len();

    // basis values on the grid
    let mut phi = vec![vec![0.0f64; k_basis]; n];
    let mut q = vec![0.0f64; k_basis];
    for i in 0..n {
        let x = grid.nodes[i];
        eval_orthonormal(a, k_basis, x, &mut q);
        let w = (1.0 - x * x).powf(a);
        for j in 0..k_basis {
            phi[i][j] = w * q[j];
        }
    }

    // mass matrix
    let mass = CMat::from_fn(k_basis, k_basis, |k, j| {
        let mut acc = 0.0;
        for i in 0..n {
            acc += grid.weights[i] * phi[i][k] * phi[i][j];
        }
        Complex64::new(acc, 0.0)
    });

    // operator values Op(|xi|^2a) phi_j on the grid through shared plans
    let mut opphi = vec![vec![Complex64::new(0.0, 0.0); k_basis]; n];
    let mut qy = vec![0.0f64; k_basis];
    for i in 0..n {
        let x = grid.nodes[i];
        let plan = op.singular_plan(x, 1.0);
        let pairs = plan.functional();
        let c = op.kernel_constant;
        for (p, w) in pairs {
            if p.abs() >= 1.0 {
                continue;
            }
            eval_orthonormal(a, k_basis, p, &mut qy);
            let wt = w * c * (1.0 - p * p).powf(a);
            for j in 0..k_basis {
                opphi[i][j] += wt * qy[j];
            }
        }
    }

    // stiffness with the coefficient field and angular factor; reference
    // Hermitian form without them
    let g0 = op.symbol.g_plus;
    let stiffness = CMat::from_fn(k_basis, k_basis, |k, j| {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let coeff = op.symbol.coeff_at(grid.nodes[i]);
            acc += grid.weights[i] * coeff * g0 * opphi[i][j] * phi[i][k];
        }
        acc
    });
    let s_ref = CMat::from_fn(k_basis, k_basis, |k, j| {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            acc += grid.weights[i] * opphi[i][j] * phi[i][k];
        }
        acc
    });
    let h_ref = linalg::hermitian_part(&s_ref);

    let mass_symmetry_defect = {
        let mt = linalg::adjoint(&mass);
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for k in 0..k_basis {
            for j in 0..k_basis {
                num = num.max((mass[(k, j)] - mt[(k, j)]).norm());
                den = den.max(mass[(k, j)].norm());
            }
        }
        num / den
    };
    if mass_symmetry_defect > 1e-8 {
        return Err(FracError::Numerical(format!(
            "mass-matrix symmetry defect {mass_symmetry_defect:.3e} exceeds 1e-8"
        )));
    }
    let hermitian_defect = {
        let sh = linalg::adjoint(&stiffness);
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for k in 0..k_basis {
            for j in 0..k_basis {
                num = num.max((stiffness[(k, j)] - sh[(k, j)]).norm());
                den = den.max(stiffness[(k, j)].norm());
            }
        }
        num / den
    };

    // coercivity: the largest c we certify is 0.9 c0; beta is the smallest
    // shift making Re(Su,u) >= c (H_ref u,u) - beta (Mu,u) hold, found as a
    // minimal eigenvalue of the Hermitian pencil
    let c_cert = 0.9 * c0;
    let h_s = linalg::hermitian_part(&stiffness);
    let shifted = CMat::from_fn(k_basis, k_basis, |k, j| {
        h_s[(k, j)] - c_cert * h_ref[(k, j)]
    });
    let lam_min = linalg::min_hermitian_pencil_eigenvalue(&shifted, &mass)?;
    let beta = (-lam_min).max(0.0) * (1.0 + 1e-9);

    let poincare = linalg::min_hermitian_pencil_eigenvalue(&h_ref, &mass)?;
    if poincare <= 0.0 {
        return Err(FracError::Numerical(format!(
            "reference form not positive: poincare constant {poincare:.3e}"
        )));
    }

    // form bound: |s(u,u)| <= C (Href u, u) via the largest generalized
    // singular value of (S^H Href^-1 S, Href)
    let href_inv_s = solve_columns(&h_ref, &stiffness)?;
    let gram = {
        let sh = linalg::adjoint(&stiffness);
        mat_mul(&sh, &href_inv_s)
    };
    let form_bound = linalg::hermitian_pencil_range(&gram, &h_ref)?
        .1
        .max(0.0)
        .sqrt();

    // sector in the L2 metric: Re >= c_cert * poincare - beta, slope C/c
    let sector = SectorParams::new(
        c_cert * poincare,
        beta,
        form_bound * poincare,
    )?;

    // eigen structure of (S, M) and its adjoint pencil
    let pairs = linalg::pencil_eigen_spd(&stiffness, &mass)?;
    let adj_pairs = linalg::pencil_eigen_spd(&linalg::adjoint(&stiffness), &mass)?;
    // residual sanity on the computed pairs
    for p in pairs.iter().chain(&adj_pairs) {
        let sv = mat_vec(&stiffness, &p.vector);
        let sav = mat_vec(&linalg::adjoint(&stiffness), &p.vector);
        let mv = mat_vec(&mass, &p.vector);
        let res_direct: f64 = sv
            .iter()
            .zip(&mv)
            .map(|(s, m)| (s - p.lambda * m).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let res_adj: f64 = sav
            .iter()
            .zip(&mv)
            .map(|(s, m)| (s - p.lambda * m).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let scale = (1.0 + p.lambda.norm()) * (1.0 + mv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
        if res_direct.min(res_adj) > 1e-7 * scale {
            return Err(FracError::EigenSolver(format!(
                "pencil eigenpair residual {:.3e} at lambda = {}",
                res_direct.min(res_adj),
                p.lambda
            )));
        }
    }
    let spectrum = build_spectrum(&pairs, &adj_pairs, &mass);

    Ok(DirichletRealization {
        op,
        basis_size: k_basis,
        grid: grid.clone(),
        stiffness,
        mass,
        h_ref,
        garding: (c_cert, beta),
        sector,
        poincare,
        form_bound,
        hermitian_defect,
        mass_symmetry_defect,
        spectrum,
    })
}

fn mat_mul(a: &CMat, b: &CMat) -> CMat {
    let n = a.nrows();
    let m = b.ncols();
    let inner = a.ncols();
    CMat::from_fn(n, m, |i, j| {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..inner {
            acc += a[(i, k)] * b[(k, j)];
        }
        acc
    })
}

fn solve_columns(a: &CMat, b: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let m = b.ncols();
    let mut out = CMat::zeros(n, m);
    for j in 0..m {
        let col: Vec<Complex64> = (0..n).map(|i| b[(i, j)]).collect();
        let x = linalg::solve(a, &col)?;
        for i in 0..n {
            out[(i, j)] = x[i];
        }
    }
    Ok(out)
}

fn m_normalize(mass: &CMat, v: &[Complex64]) -> Vec<Complex64> {
    let nrm = weighted_norm(mass, v);
    v.iter().map(|z| z / nrm).collect()
}

fn build_spectrum(pairs: &[EigenPair], adj_pairs: &[EigenPair], mass: &CMat) -> Spectrum {
    // cluster the eigenvalues
    let mut eigenvalues: Vec<Complex64> = Vec::new();
    let mut kernels: Vec<Vec<Vec<Complex64>>> = Vec::new();
    for p in pairs {
        let v = m_normalize(mass, &p.vector);
        if let Some(i) = eigenvalues
            .iter()
            .position(|ev| (p.lambda - ev).norm() <= SPECTRUM_TOL * (1.0 + ev.norm()))
        {
            kernels[i].push(v);
        } else {
            eigenvalues.push(p.lambda);
            kernels.push(vec![v]);
        }
    }
    // cokernels: adjoint eigenvectors at the conjugate eigenvalue
    let mut cokernels: Vec<Vec<Vec<Complex64>>> = vec![Vec::new(); eigenvalues.len()];
    for p in adj_pairs {
        let v = m_normalize(mass, &p.vector);
        if let Some(i) = eigenvalues
            .iter()
            .position(|ev| (p.lambda.conj() - ev).norm() <= SPECTRUM_TOL * (1.0 + ev.norm()))
        {
            cokernels[i].push(v);
        }
    }
    Spectrum {
        eigenvalues,
        kernels,
        cokernels,
    }
}

/// Reported residual分析 of a homogeneous solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: SpectralFunction,
    /// Relative L2 residual of r+Pu - f, measured through the route not used
    /// to assemble (the multiplier route), on the interior window d >= 0.1.
    pub oracle_residual: f64,
}

impl DirichletRealization {
    pub fn a(&self) -> f64 {
        self.op.symbol.a
    }

    /// Moment vector F_k = <f, phi_k> on the assembly grid.
    pub fn moments(&self, f: &dyn Fn(f64) -> Complex64) -> Vec<Complex64> {
        let a = self.a();
        let n = self.grid.len();
        let mut out = vec![Complex64::new(0.0, 0.0); self.basis_size];
        let mut q = vec![0.0f64; self.basis_size];
        for i in 0..n {
            let x = self.grid.nodes[i];
            eval_orthonormal(a, self.basis_size, x, &mut q);
            let w = self.grid.weights[i] * (1.0 - x * x).powf(a);
            let fv = f(x);
            for k in 0..self.basis_size {
                out[k] += w * q[k] * fv;
            }
        }
        out
    }

    /// Whether lambda sits on the discrete spectrum (within the routing tolerance).
    pub fn on_spectrum(&self, lambda: Complex64) -> bool {
        self.spectrum.locate(lambda, SPECTRUM_TOL).is_some()
    }

    /// Galerkin solve of r+P u = f with u = 0 outside; fails over to the
    /// Fredholm branch when 0 is an eigenvalue. The residual is measured
    /// with the multiplier route, which took no part in the assembly.
    pub fn solve_homogeneous(&self, f: &dyn Fn(f64) -> Complex64) -> Result<SolveReport> {
        if self.on_spectrum(Complex64::new(0.0, 0.0)) {
            return Err(FracError::SpectrumHit(
                "0 lies in the discrete spectrum".into(),
            ));
        }
        let rhs = self.moments(f);
        let coeffs = linalg::solve(&self.stiffness, &rhs)?;
        let solution = SpectralFunction::new(self.a(), coeffs);
        let oracle_residual = self.oracle_residual(&solution, f, Complex64::new(0.0, 0.0))?;
        Ok(SolveReport {
            solution,
            oracle_residual,
        })
    }

    /// Relative L2 residual of r+(P - lambda) u = f via the multiplier route
    /// over the interior window d >= 0.1.
    pub fn oracle_residual(
        &self,
        u: &SpectralFunction,
        f: &dyn Fn(f64) -> Complex64,
        lambda: Complex64,
    ) -> Result<f64> {
        let eval: Vec<f64> = self
            .grid
            .nodes
            .iter()
            .copied()
            .filter(|&x| (1.0 - x.abs()) >= 0.1)
            .collect();
        let weights: Vec<f64> = self
            .grid
            .nodes
            .iter()
            .zip(&self.grid.weights)
            .filter(|(&x, _)| (1.0 - x.abs()) >= 0.1)
            .map(|(_, &w)| w)
            .collect();
        let uc = u.as_closure();
        let pu = self.op.apply_fn(Route::Multiplier, &uc, 1.0, &eval)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&x, &w), puv) in eval.iter().zip(&weights).zip(&pu) {
            let r = puv - lambda * u.eval(x) - f(x);
            num += w * r.norm_sqr();
            den += w * f(x).norm_sqr();
        }
        Ok((num / den.max(1e-300)).sqrt())
    }

    /// Resolvent solve (P_D - lambda) u = f for lambda off the spectrum.
    pub fn resolvent(
        &self,
        lambda: Complex64,
        f: &dyn Fn(f64) -> Complex64,
    ) -> Result<SpectralFunction> {
        if self.on_spectrum(lambda) {
            return Err(FracError::SpectrumHit(format!(
                "lambda = {lambda} is within tolerance of the spectrum"
            )));
        }
        let rhs = self.moments(f);
        self.resolvent_from_moments(lambda, &rhs)
    }

    pub fn resolvent_from_moments(
        &self,
        lambda: Complex64,
        rhs: &[Complex64],
    ) -> Result<SpectralFunction> {
        let k = self.basis_size;
        let shifted = CMat::from_fn(k, k, |r, c| {
            self.stiffness[(r, c)] - lambda * self.mass[(r, c)]
        });
        let coeffs = linalg::solve(&shifted, rhs)?;
        Ok(SpectralFunction::new(self.a(), coeffs))
    }

    /// Operator norm of the resolvent in the discrete L2 metric.
    pub fn resolvent_norm(&self, lambda: Complex64) -> Result<f64> {
        let k = self.basis_size;
        let shifted = CMat::from_fn(k, k, |r, c| {
            self.stiffness[(r, c)] - lambda * self.mass[(r, c)]
        });
        // X = (S - lambda M)^-1 M; ||R||^2 = lambda_max(X^H M X, M)
        let _ = k;
        let x = solve_columns(&shifted, &self.mass)?;
        let mx = mat_mul(&self.mass, &x);
        let gram = mat_mul(&linalg::adjoint(&x), &mx);
        let (_, lam_max) = linalg::hermitian_pencil_range(&gram, &self.mass)?;
        Ok(lam_max.max(0.0).sqrt())
    }

    /// Coefficient-space L2 norm sqrt(u^H M u).
    pub fn l2_norm(&self, u: &[Complex64]) -> f64 {
        weighted_norm(&self.mass, u)
    }

    /// L2 inner product of coefficient vectors.
    pub fn l2_inner(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        weighted_inner(&self.mass, u, v)
    }

    /// Rayleigh quotient (Su, u)/(Mu, u).
    pub fn rayleigh(&self, u: &[Complex64]) -> Complex64 {
        let s = linalg::sesquilinear(&self.stiffness, u, u);
        let m = linalg::sesquilinear(&self.mass, u, u);
        s / m
    }

    /// Outcome of the Fredholm alternative at an eigenvalue.
    pub fn solve_fredholm(
        &self,
        lambda: Complex64,
        f: &dyn Fn(f64) -> Complex64,
    ) -> Result<FredholmOutcome> {
        let idx = self
            .spectrum
            .locate(lambda, SPECTRUM_TOL)
            .ok_or_else(|| {
                FracError::InvalidParameter(format!(
                    "lambda = {lambda} is not within tolerance of an eigenvalue"
                ))
            })?;
        let lambda = self.spectrum.eigenvalues[idx];
        let rhs = self.moments(f);
        let f_norm = {
            // ||f|| from its moments: f_h = M^-1 rhs, norm = sqrt(rhs^H M^-1 rhs)
            let finv = linalg::solve(&self.mass, &rhs)?;
            weighted_norm(&self.mass, &finv)
        };
        let cokernel = &self.spectrum.cokernels[idx];
        // orthogonality defects <f, psi_i> computed exactly from moments
        let defects: Vec<Complex64> = cokernel
            .iter()
            .map(|psi| {
                psi.iter()
                    .zip(&rhs)
                    .map(|(p, r)| p.conj() * r)
                    .sum::<Complex64>()
            })
            .collect();
        let defect_norm = defects.iter().map(|d| d.norm_sqr()).sum::<f64>().sqrt();
        if defect_norm > 1e-6 * f_norm.max(1e-300) {
            return Ok(FredholmOutcome::Obstructed {
                defects,
                kernel_dim: self.spectrum.kernel_dim(idx),
            });
        }
        // minimal-norm particular solution via SVD with relative cutoff,
        // then projected off the kernel in the M metric
        let k = self.basis_size;
        let shifted = CMat::from_fn(k, k, |r, c| {
            self.stiffness[(r, c)] - lambda * self.mass[(r, c)]
        });
        let mut coeffs = linalg::pinv_solve(&shifted, &rhs, 1e-9)?;
        for ker in &self.spectrum.kernels[idx] {
            let proj = weighted_inner(&self.mass, &coeffs, ker)
                / weighted_inner(&self.mass, ker, ker);
            for (c, kv) in coeffs.iter_mut().zip(ker) {
                *c -= proj * kv;
            }
        }
        let res = {
            let av = mat_vec(&shifted, &coeffs);
            let num = av
                .iter()
                .zip(&rhs)
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let den = rhs.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
            num / den.max(1e-300)
        };
        if res > 1e-5 {
            return Err(FracError::Numerical(format!(
                "Fredholm particular solution residual {res:.3e} exceeds 1e-5"
            )));
        }
        Ok(FredholmOutcome::Solvable {
            solution: SpectralFunction::new(self.a(), coeffs),
            nonuniqueness_dim: self.spectrum.kernel_dim(idx),
            residual: res,
        })
    }

    /// Defect of the adjoint action recovered through the independent route:
    /// compares <P phi_j, phi_k> with <phi_j, Op(conj(A) phi_k)> where the
    /// second form applies the multiplier after multiplying by conj(A).
    pub fn adjoint_action_defect(&self) -> Result<f64> {
        let a = self.a();
        let k_basis = self.basis_size;
        let n = self.grid.len();
        let g0 = self.op.symbol.g_plus;
        // W_k = Op(m)(conj(A) phi_k) on the grid via fresh plans
        let mut w = vec![vec![Complex64::new(0.0, 0.0); k_basis]; n];
        let mut qy = vec![0.0f64; k_basis];
        for i in 0..n {
            let x = self.grid.nodes[i];
            let plan = self.op.singular_plan(x, 1.0);
            let pairs = plan.functional();
            let c = self.op.kernel_constant;
            for (p, wgt) in pairs {
                if p.abs() >= 1.0 {
                    continue;
                }
                eval_orthonormal(a, k_basis, p, &mut qy);
                let coeff = self.op.symbol.coeff_at(p).conj();
                let wt = wgt * c * g0 * (1.0 - p * p).powf(a);
                for k in 0..k_basis {
                    w[i][k] += wt * coeff * qy[k];
                }
            }
        }
        // D[k][j] = <phi_j, W_k> = sum w_i phi_j conj(W_k)
        let mut phi = vec![vec![0.0f64; k_basis]; n];
        let mut q = vec![0.0f64; k_basis];
        for i in 0..n {
            let x = self.grid.nodes[i];
            eval_orthonormal(a, k_basis, x, &mut q);
            let wt = (1.0 - x * x).powf(a);
            for j in 0..k_basis {
                phi[i][j] = wt * q[j];
            }
        }
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for k in 0..k_basis {
            for j in 0..k_basis {
                let mut d = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    d += self.grid.weights[i] * phi[i][j] * w[i][k].conj();
                }
                num = num.max((d - self.stiffness[(k, j)]).norm());
                den = den.max(self.stiffness[(k, j)].norm());
            }
        }
        Ok(num / den)
    }
}

/// Result of the Fredholm alternative.
#[derive(Debug, Clone)]
pub enum FredholmOutcome {
    Solvable {
        solution: SpectralFunction,
        nonuniqueness_dim: usize,
        residual: f64,
    },
    Obstructed {
        defects: Vec<Complex64>,
        kernel_dim: usize,
    },
}

/// Independent discretization for eigenvalue cross-checks: kernel-route
/// collocation on its own clustered grid, projected in the grid's weighted
/// inner product. Returns eigenvalues sorted by real part.
pub fn collocation_eigenvalues(
    op: &OperatorApplication,
    k_basis: usize,
    colloc_grid: &Grid,
) -> Result<Vec<Complex64>> {
    let a = op.symbol.a;
    let n = colloc_grid.len();
    let g0 = op.symbol.g_plus;
    let mut b = vec![vec![Complex64::new(0.0, 0.0); k_basis]; n];
    let mut phi = vec![vec![0.0f64; k_basis]; n];
    let mut q = vec![0.0f64; k_basis];
    for i in 0..n {
        let x = colloc_grid.nodes[i];
        eval_orthonormal(a, k_basis, x, &mut q);
        let wt = (1.0 - x * x).powf(a);
        for j in 0..k_basis {
            phi[i][j] = wt * q[j];
        }
        let plan = op.singular_plan(x, 1.0);
        let pairs = plan.functional();
        let coeff = op.symbol.coeff_at(x);
        for (p, wgt) in pairs {
            if p.abs() >= 1.0 {
                continue;
            }
            eval_orthonormal(a, k_basis, p, &mut q);
            let wt = wgt * op.kernel_constant * g0 * (1.0 - p * p).powf(a);
            for j in 0..k_basis {
                b[i][j] += coeff * wt * q[j];
            }
        }
    }
    // weighted normal equations: (Phi^H W B) c = lambda (Phi^H W Phi) c
    let sb = CMat::from_fn(k_basis, k_basis, |k, j| {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            acc += colloc_grid.weights[i] * phi[i][k] * b[i][j];
        }
        acc
    });
    let sm = CMat::from_fn(k_basis, k_basis, |k, j| {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            acc += colloc_grid.weights[i] * phi[i][k] * phi[i][j];
        }
        acc
    });
    let pairs = linalg::pencil_eigen_spd(&sb, &sm)?;
    Ok(pairs.into_iter().map(|p| p.lambda).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_grid, Domain1D};
    use crate::symbols::{CoefficientField, Symbol};
    use rand::Rng;
    use rand::SeedableRng;
    use statrs::function::gamma::gamma;

    fn frac_realization(a: f64, k: usize) -> DirichletRealization {
        let op = OperatorApplication::fractional_laplacian(a).unwrap();
        let grid = make_grid(Domain1D::Interval, 400, 1.0).unwrap();
        assemble(op, k, &grid).unwrap()
    }

    #[test]
    fn stiffness_is_diagonal_for_fractional_laplacian() {
        let r = frac_realization(0.5, 12);
        let mut off = 0.0f64;
        let mut diag_min = f64::INFINITY;
        for k in 0..12 {
            for j in 0..12 {
                if k == j {
                    diag_min = diag_min.min(r.stiffness[(k, j)].norm());
                } else {
                    off = off.max(r.stiffness[(k, j)].norm());
                }
            }
        }
        assert!(off / diag_min < 1e-7, "off/diag = {:.3e}", off / diag_min);
        assert!(r.hermitian_defect < 1e-8, "{}", r.hermitian_defect);
        assert!(r.mass_symmetry_defect < 1e-8);
    }

    #[test]
    fn lowest_eigenvalue_of_half_laplacian() {
        // cross-checked against kernel-route collocation on a finer grid;
        // the value itself is pinned to the interval this machinery fixes
        let r = frac_realization(0.5, 32);
        let lam1 = r.spectrum.eigenvalues[0];
        assert!(lam1.im.abs() < 1e-9);
        assert!(
            (lam1.re - 1.1578).abs() < 2e-3,
            "lambda_1 = {}",
            lam1.re
        );
        let colloc = make_grid(Domain1D::Interval, 520, 1.0).unwrap();
        let cev = collocation_eigenvalues(&r.op, 36, &colloc).unwrap();
        for i in 0..5 {
            let rel = (cev[i] - r.spectrum.eigenvalues[i]).norm()
                / r.spectrum.eigenvalues[i].norm();
            assert!(rel < 1e-3, "eig {i}: galerkin {} colloc {} rel {rel}", r.spectrum.eigenvalues[i], cev[i]);
        }
    }

    #[test]
    fn homogeneous_solve_recovers_weighted_profile() {
        // f = 1 for the half Laplacian: u = (1-x^2)^(1/2) / Gamma(2)
        let r = frac_realization(0.5, 24);
        let one = |_: f64| Complex64::new(1.0, 0.0);
        let rep = r.solve_homogeneous(&one).unwrap();
        assert!(rep.oracle_residual < 1e-3, "residual {}", rep.oracle_residual);
        let g = gamma(2.0);
        let mut sup = 0.0f64;
        for i in 0..200 {
            let x = -0.999 + 1.998 * i as f64 / 199.0;
            let want = (1.0 - x * x).powf(0.5) / g;
            sup = sup.max((rep.solution.eval(x).re - want).abs());
            sup = sup.max(rep.solution.eval(x).im.abs());
        }
        assert!(sup < 1e-4, "sup error {sup}");
    }

    #[test]
    fn eigenfunction_consistency() {
        let r = frac_realization(0.6, 20);
        let lam1 = r.spectrum.eigenvalues[0];
        let u1 = &r.spectrum.kernels[0][0];
        // f = lam1 * u1 solves back to u1
        let u1f = SpectralFunction::new(0.6, u1.clone());
        let f = move |x: f64| u1f.eval(x) * lam1;
        let rep = r.solve_homogeneous(&f).unwrap();
        // compare up to normalization in coefficient space
        let got = &rep.solution.coeffs;
        let ratio = got[0] / u1[0];
        for (g, u) in got.iter().zip(u1) {
            assert!((g - ratio * u).norm() < 1e-6 * ratio.norm());
        }
    }

    #[test]
    fn rayleigh_quotients_inside_sector() {
        let sym = Symbol::new(
            0.6,
            CoefficientField::SinePerturbed {
                base: Complex64::new(2.0, 0.0),
                amp: Complex64::new(0.0, 0.3),
                freq: std::f64::consts::PI,
            },
            1.0,
            1.0,
        )
        .unwrap();
        let op = OperatorApplication::new(sym).unwrap();
        let grid = make_grid(Domain1D::Interval, 320, 1.0).unwrap();
        let r = assemble(op, 16, &grid).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let v: Vec<Complex64> = (0..16)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let q = r.rayleigh(&v);
            assert!(
                crate::params::in_sector(q, &r.sector),
                "rayleigh {q} outside sector {:?}",
                r.sector
            );
        }
        // spectrum also inside
        for ev in &r.spectrum.eigenvalues {
            assert!(crate::params::in_sector(*ev, &r.sector), "{ev}");
        }
    }

    #[test]
    fn garding_certificate_holds_on_random_vectors() {
        let r = frac_realization(0.4, 16);
        let (c, beta) = r.garding;
        assert!(c >= 0.9 * 1.0 - 1e-12); // c0 = 1 for the fractional Laplacian
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let v: Vec<Complex64> = (0..16)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let s = linalg::sesquilinear(&r.stiffness, &v, &v).re;
            let h = linalg::sesquilinear(&r.h_ref, &v, &v).re;
            let m = linalg::sesquilinear(&r.mass, &v, &v).re;
            assert!(s >= c * h - beta * m - 1e-9 * (s.abs() + h + m));
        }
    }

    #[test]
    fn resolvent_decay_on_the_negative_ray() {
        let r = frac_realization(0.5, 24);
        let mut products = Vec::new();
        for k in 0..=4 {
            let lam = Complex64::new(-(10.0f64.powi(k)), 0.0);
            let norm = r.resolvent_norm(lam).unwrap();
            let weight = (1.0 + lam.norm_sqr()).sqrt();
            products.push(weight * norm);
        }
        let max = products.iter().cloned().fold(0.0, f64::max);
        let min = products.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min < 3.0, "products {:?}", products);
        // lambda = 0 off the spectrum reproduces the plain solve
        let one = |_: f64| Complex64::new(1.0, 0.0);
        let direct = r.solve_homogeneous(&one).unwrap().solution;
        let via_res = r.resolvent(Complex64::new(0.0, 0.0), &one).unwrap();
        for (x, y) in direct.coeffs.iter().zip(&via_res.coeffs) {
            assert!((x - y).norm() < 1e-10);
        }
        // spectral-gap law for the Hermitian pencil: ||R|| ~ 1/dist
        let l1 = r.spectrum.eigenvalues[0].re;
        let l2 = r.spectrum.eigenvalues[1].re;
        let mid = Complex64::new(0.5 * (l1 + l2), 0.0);
        let dist = (0.5 * (l2 - l1)).abs();
        let norm = r.resolvent_norm(mid).unwrap();
        assert!((norm * dist - 1.0).abs() < 1e-2, "norm*dist = {}", norm * dist);
    }

    #[test]
    fn resolvent_rejects_spectrum_hits() {
        let r = frac_realization(0.5, 16);
        let lam = r.spectrum.eigenvalues[0];
        let one = |_: f64| Complex64::new(1.0, 0.0);
        assert!(matches!(
            r.resolvent(lam, &one),
            Err(FracError::SpectrumHit(_))
        ));
    }

    #[test]
    fn fredholm_alternative_at_the_first_eigenvalue() {
        let r = frac_realization(0.5, 20);
        let lam1 = r.spectrum.eigenvalues[0];
        let psi1 = SpectralFunction::new(0.5, r.spectrum.cokernels[0][0].clone());
        // f = psi1 is obstructed with defect = ||psi1||^2
        let fc = psi1.clone();
        let f = move |x: f64| fc.eval(x);
        match r.solve_fredholm(lam1, &f).unwrap() {
            FredholmOutcome::Obstructed { defects, kernel_dim } => {
                assert_eq!(kernel_dim, 1);
                // psi1 is M-normalized, so the self-pairing defect is 1
                assert!((defects[0].norm() - 1.0).abs() < 1e-6, "{:?}", defects);
            }
            other => panic!("expected obstruction, got {other:?}"),
        }
        // f orthogonal to psi1 solves with small residual
        let fc = psi1.clone();
        let cok = r.spectrum.cokernels[0][0].clone();
        let mass = r.mass.clone();
        let f0 = |x: f64| Complex64::new((0.7 * x).cos(), 0.0);
        let m0 = r.moments(&f0);
        let pairing: Complex64 = cok.iter().zip(&m0).map(|(p, m)| p.conj() * m).sum();
        let f_perp = move |x: f64| f0(x) - pairing * fc.eval(x);
        let _ = (&mass,);
        match r.solve_fredholm(lam1, &f_perp).unwrap() {
            FredholmOutcome::Solvable {
                nonuniqueness_dim,
                residual,
                ..
            } => {
                assert_eq!(nonuniqueness_dim, 1);
                assert!(residual <= 1e-5, "{residual}");
            }
            other => panic!("expected solvable, got {other:?}"),
        }
        // kernel and cokernel dimensions match at every eigenvalue
        for i in 0..r.spectrum.eigenvalues.len() {
            assert_eq!(r.spectrum.kernel_dim(i), r.spectrum.cokernel_dim(i));
        }
    }

    #[test]
    fn adjoint_defect_shrinks_under_coefficient_smoothing() {
        use crate::symbols::HolderCoefficient;
        let grid = make_grid(Domain1D::Interval, 280, 1.0).unwrap();
        let rough = HolderCoefficient::generate(9, 1.4, 96, 2.0);
        let smooth = rough.smoothed(6);
        let mut defects = Vec::new();
        for coeff in [rough, smooth] {
            let sym = Symbol::new(0.4, CoefficientField::HolderSeries(coeff), 1.0, 1.0).unwrap();
            let op = OperatorApplication::new(sym).unwrap();
            let r = assemble(op, 12, &grid).unwrap();
            defects.push(r.adjoint_action_defect().unwrap());
        }
        assert!(defects[0] < 1e-5, "rough defect {}", defects[0]);
        assert!(defects[1] <= defects[0], "{:?}", defects);
    }

    #[test]
    fn biorthogonality_of_adjoint_eigenvectors() {
        let sym = Symbol::new(
            0.6,
            CoefficientField::SinePerturbed {
                base: Complex64::new(2.0, 0.0),
                amp: Complex64::new(0.0, 0.3),
                freq: std::f64::consts::PI,
            },
            1.0,
            1.0,
        )
        .unwrap();
        let op = OperatorApplication::new(sym).unwrap();
        let grid = make_grid(Domain1D::Interval, 320, 1.0).unwrap();
        let r = assemble(op, 14, &grid).unwrap();
        // <u_i, psi_j>_M vanishes when lambda_i != lambda_j
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    continue;
                }
                let ui = &r.spectrum.kernels[i][0];
                let pj = &r.spectrum.cokernels[j][0];
                let pairing = r.l2_inner(ui, pj).norm();
                assert!(pairing < 1e-7, "({i},{j}): {pairing}");
            }
        }
    }
}
