//! Reduction of `inf_{A⪰0} ‖AX − B‖_F²` to an r×r problem with diagonal
//! positive `X`, and reassembly of full-size solutions.
//!
//! With `X = [U₁ U₂]·diag(Σ₁, 0)·[V₁ V₂]ᵀ` and `r = rank(X)`, writing
//! `A` in the basis `U` as `[[A₁₁, A₂₁ᵀ], [A₂₁, A₂₂]]` gives
//!
//! ```text
//! ‖AX − B‖_F² = ‖A₁₁Σ₁ − B̃‖_F² + ‖A₂₁Σ₁ − U₂ᵀBV₁‖_F² + ‖BV₂‖_F²,   B̃ = U₁ᵀBV₁.
//! ```
//!
//! The middle term vanishes at `A₂₁ = Z = U₂ᵀBV₁Σ₁⁻¹`, so the infimum is
//! `min_{A₁₁⪰0} ‖A₁₁Σ₁ − B̃‖_F² + ‖BV₂‖_F²`. Whether a PSD completion of
//! `[[Â₁₁, Zᵀ], [Z, ·]]` exists depends on `ker(Â₁₁) ⊆ ker(Z)`; when it does
//! not, lifting the null eigenvalues of `Â₁₁` to `ε/β` gives feasible
//! matrices within `ε` of the infimum.

use nalgebra::{DMatrix, DVector};

use crate::error::{PsdpError, Result};
use crate::matcore::{
    check_finite, default_rank_tol, numerical_rank, pinv_psd, svd, sym_eig, symmetrize,
    DenseMatrix, SymEig,
};
use crate::solution::{objective, PsdpSolution};

/// Default relative threshold for numerical kernels of `Â₁₁` and for the
/// kernel-containment test.
pub const DEFAULT_KERNEL_TOL: f64 = 1e-8;

/// SVD factors of `X` split at its numerical rank, plus the derived blocks.
#[derive(Debug, Clone)]
pub struct ReducedProblem {
    pub u1: DenseMatrix,
    pub u2: DenseMatrix,
    pub v1: DenseMatrix,
    pub v2: DenseMatrix,
    /// Positive singular values of `X`, nonincreasing.
    pub sigma1: DVector<f64>,
    /// `U₁ᵀBV₁` (r×r).
    pub btilde: DenseMatrix,
    /// `U₂ᵀBV₁Σ₁⁻¹` ((n−r)×r).
    pub z: DenseMatrix,
    /// `‖BV₂‖_F²`.
    pub offset: f64,
    pub n: usize,
    pub m: usize,
    pub r: usize,
    x: DenseMatrix,
    b: DenseMatrix,
}

impl ReducedProblem {
    pub fn x(&self) -> &DenseMatrix {
        &self.x
    }

    pub fn b(&self) -> &DenseMatrix {
        &self.b
    }

    /// `Σ₁` as an r×r diagonal matrix.
    pub fn sigma1_matrix(&self) -> DenseMatrix {
        DMatrix::from_diagonal(&self.sigma1)
    }

    /// Full orthogonal `U = [U₁ U₂]`.
    pub fn u(&self) -> DenseMatrix {
        let mut u = DMatrix::zeros(self.n, self.n);
        u.columns_mut(0, self.r).copy_from(&self.u1);
        if self.r < self.n {
            u.columns_mut(self.r, self.n - self.r).copy_from(&self.u2);
        }
        u
    }

    /// `‖A₁₁Σ₁ − B̃‖_F²`.
    pub fn sub_objective(&self, a11: &DenseMatrix) -> f64 {
        (a11 * self.sigma1_matrix() - &self.btilde).norm_squared()
    }

    /// The three terms `(‖A₁₁Σ₁ − B̃‖², ‖A₂₁Σ₁ − U₂ᵀBV₁‖², ‖BV₂‖²)` for a
    /// full n×n matrix `A`; they sum to `‖AX − B‖_F²`.
    pub fn split_objective(&self, a: &DenseMatrix) -> (f64, f64, f64) {
        let a11 = self.u1.transpose() * a * &self.u1;
        let t1 = self.sub_objective(&a11);
        let t2 = if self.r < self.n {
            let a21 = self.u2.transpose() * a * &self.u1;
            let sig = self.sigma1_matrix();
            (&a21 * &sig - &self.z * &sig).norm_squared()
        } else {
            0.0
        };
        (t1, t2, self.offset)
    }

    /// Builds `U·[[A₁₁, Zᵀ], [Z, K]]·Uᵀ`.
    pub fn assemble(&self, a11: &DenseMatrix, k: &DenseMatrix) -> DenseMatrix {
        let mut a = &self.u1 * a11 * self.u1.transpose();
        if self.r < self.n {
            let cross = &self.u2 * &self.z * self.u1.transpose();
            a += &cross + cross.transpose();
            a += &self.u2 * k * self.u2.transpose();
        }
        symmetrize(&a)
    }
}

/// Computes the SVD of `X` and the blocks of the reduced problem.
///
/// `rank_tol` defaults to `max(n, m)·ε·σ₁`.
pub fn reduce(x: &DenseMatrix, b: &DenseMatrix, rank_tol: Option<f64>) -> Result<ReducedProblem> {
    if x.shape() != b.shape() {
        return Err(PsdpError::Dimension(format!(
            "X is {}x{} but B is {}x{}",
            x.nrows(),
            x.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    check_finite(x)?;
    check_finite(b)?;
    let (n, m) = x.shape();
    let f = svd(x)?;
    let tol = rank_tol.unwrap_or_else(|| default_rank_tol(n, m, f.sigma_max()));
    let r = numerical_rank(f.s.as_slice(), tol);
    if r == 0 {
        return Err(PsdpError::Degenerate {
            infimum: b.norm_squared(),
        });
    }

    let u1 = f.u.columns(0, r).into_owned();
    let u2 = f.u.columns(r, n - r).into_owned();
    let v1 = f.v.columns(0, r).into_owned();
    let v2 = f.v.columns(r, m - r).into_owned();
    let sigma1 = DVector::from_iterator(r, f.s.iter().take(r).copied());

    let bv1 = b * &v1;
    let btilde = u1.transpose() * &bv1;
    let mut z = u2.transpose() * &bv1;
    for (j, mut col) in z.column_iter_mut().enumerate() {
        col /= sigma1[j];
    }
    let offset = (b * &v2).norm_squared();

    Ok(ReducedProblem {
        u1,
        u2,
        v1,
        v2,
        sigma1,
        btilde,
        z,
        offset,
        n,
        m,
        r,
        x: x.clone(),
        b: b.clone(),
    })
}

/// A (numerical) minimizer `Â₁₁` of the reduced problem.
#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    pub a11hat: DenseMatrix,
    /// `‖Â₁₁Σ₁ − B̃‖_F`.
    pub residual: f64,
    /// Numerical rank `s` of `Â₁₁`.
    pub rank_s: usize,
}

impl SubproblemSolution {
    /// Wraps an r×r PSD matrix, symmetrizing it and computing its residual
    /// and rank (eigenvalues above `tol·λ_max`).
    pub fn new(red: &ReducedProblem, a11hat: DenseMatrix, tol: f64) -> Result<Self> {
        if a11hat.shape() != (red.r, red.r) {
            return Err(PsdpError::Dimension(format!(
                "A11 must be {r}x{r}, got {}x{}",
                a11hat.nrows(),
                a11hat.ncols(),
                r = red.r
            )));
        }
        let a11hat = symmetrize(&a11hat);
        let eig = sym_eig(&a11hat)?;
        let cutoff = tol * eig.max_eigenvalue().max(0.0);
        let rank_s = eig
            .lambda
            .iter()
            .filter(|&&l| l > cutoff && l > 0.0)
            .count();
        let residual = red.sub_objective(&a11hat).sqrt();
        Ok(SubproblemSolution {
            a11hat,
            residual,
            rank_s,
        })
    }
}

/// Orthonormal basis of the numerical kernel of a symmetric PSD matrix:
/// eigenvectors whose eigenvalues are at most `tol·λ_max`.
fn kernel_basis(eig: &SymEig, tol: f64) -> DenseMatrix {
    let cutoff = tol * eig.max_eigenvalue().max(0.0);
    let idx: Vec<usize> = (0..eig.lambda.len())
        .filter(|&i| eig.lambda[i] <= cutoff || eig.lambda[i] <= 0.0)
        .collect();
    DMatrix::from_fn(eig.q.nrows(), idx.len(), |i, j| eig.q[(i, idx[j])])
}

/// Tests `ker(Â₁₁) ⊆ ker(Z)`: with `N` an orthonormal basis of the numerical
/// kernel of `Â₁₁`, checks `‖Z·N‖_F ≤ tol·max(1, ‖Z‖_F)`.
pub fn kernel_contained(sub: &SubproblemSolution, red: &ReducedProblem, tol: f64) -> Result<bool> {
    if red.r == red.n {
        return Ok(true);
    }
    let eig = sym_eig(&sub.a11hat)?;
    let basis = kernel_basis(&eig, tol);
    if basis.ncols() == 0 {
        return Ok(true);
    }
    Ok((&red.z * basis).norm() <= tol * red.z.norm().max(1.0))
}

/// Checks `K − K_min ⪰ 0` up to a scale-aware tolerance.
fn validate_completion(k: &DenseMatrix, kmin: &DenseMatrix) -> Result<()> {
    if k.shape() != kmin.shape() {
        return Err(PsdpError::Dimension(format!(
            "K must be {}x{}, got {}x{}",
            kmin.nrows(),
            kmin.ncols(),
            k.nrows(),
            k.ncols()
        )));
    }
    let gap = sym_eig(&(k - kmin))?.min_eigenvalue();
    let tol = 1e-9 * kmin.norm().max(k.norm()).max(1.0);
    if gap < -tol {
        return Err(PsdpError::ConstraintViolation(format!(
            "K - Z A11^+ Z^T has eigenvalue {gap:.3e} < 0"
        )));
    }
    Ok(())
}

/// Minimizer of `‖A₁₁Σ₁ − B̃‖² + ‖BV₂‖²`, i.e. the infimum of the full problem.
pub fn infimum_value(red: &ReducedProblem, sub: &SubproblemSolution) -> f64 {
    sub.residual * sub.residual + red.offset
}

/// Assembles an exact minimizer `U·[[Â₁₁, Zᵀ], [Z, K]]·Uᵀ`. `K` defaults to
/// `Z·Â₁₁†·Zᵀ`, the minimal-rank and minimal-norm completion.
pub fn assemble_optimal(
    red: &ReducedProblem,
    sub: &SubproblemSolution,
    k: Option<&DenseMatrix>,
) -> Result<PsdpSolution> {
    if !kernel_contained(sub, red, DEFAULT_KERNEL_TOL)? {
        return Err(PsdpError::NotAttained);
    }
    let nr = red.n - red.r;
    let kmin = if nr > 0 {
        let pinv = pinv_psd(&sub.a11hat, DEFAULT_KERNEL_TOL)?;
        symmetrize(&(&red.z * pinv * red.z.transpose()))
    } else {
        DMatrix::zeros(0, 0)
    };
    let k = match k {
        Some(k) => {
            validate_completion(k, &kmin)?;
            symmetrize(k)
        }
        None => kmin,
    };
    let a = red.assemble(&sub.a11hat, &k);
    let obj = objective(&a, red.x(), red.b());
    Ok(PsdpSolution::exact(a, obj, infimum_value(red, sub)))
}

/// Upper bound on admissible ε given the subproblem residual `‖Â₁₁Σ₁ − B̃‖_F`.
pub fn epsilon_upper_bound(residual: f64) -> f64 {
    if residual != 0.0 {
        (residual * residual).min(1.0)
    } else {
        1.0
    }
}

/// `max(1e−8, 1e−6·infimum)`, pulled inside `(0, epsilon_upper_bound)`.
pub fn default_epsilon(infimum: f64, residual: f64) -> f64 {
    let eps = (1e-6 * infimum).max(1e-8);
    let upper = epsilon_upper_bound(residual);
    if eps < upper {
        eps
    } else {
        0.5 * upper
    }
}

fn check_epsilon(eps: f64, residual: f64) -> Result<()> {
    let upper = epsilon_upper_bound(residual);
    if !(eps > 0.0 && eps < upper) {
        return Err(PsdpError::Parameter(format!(
            "epsilon must lie in (0, {upper:.6e}), got {eps:e}"
        )));
    }
    Ok(())
}

/// Assembles an ε-approximant `A_ε` whose objective is below
/// `infimum + eps`. The null eigenvalues of `Â₁₁` are raised to `eps/β` with
/// `β = 4·√(r−s)·‖Σ₁‖_F·‖Â₁₁Σ₁ − B̃‖_F` (the residual factor is dropped when
/// it is zero). `K_ε` defaults to `Z·(Â₁₁^ε)⁻¹·Zᵀ`.
pub fn assemble_epsilon(
    red: &ReducedProblem,
    sub: &SubproblemSolution,
    eps: f64,
    k_eps: Option<&DenseMatrix>,
) -> Result<PsdpSolution> {
    check_epsilon(eps, sub.residual)?;
    let r = red.r;
    let eig = sym_eig(&sub.a11hat)?;
    let cutoff = DEFAULT_KERNEL_TOL * eig.max_eigenvalue().max(0.0);
    let s = eig
        .lambda
        .iter()
        .filter(|&&l| l > cutoff && l > 0.0)
        .count();

    let sigma_fro = red.sigma1.norm();
    let lifted = if s < r {
        let root = ((r - s) as f64).sqrt();
        let beta = if sub.residual != 0.0 {
            4.0 * root * sigma_fro * sub.residual
        } else {
            4.0 * root * sigma_fro
        };
        eps / beta
    } else {
        0.0
    };
    let lifted_eig = SymEig {
        q: eig.q.clone(),
        lambda: eig
            .lambda
            .map(|l| if l > cutoff && l > 0.0 { l } else { lifted }),
    };
    let a11_eps = lifted_eig.reassemble_with(|l| l);

    let nr = red.n - r;
    let kmin = if nr > 0 {
        let inv = lifted_eig.reassemble_with(|l| 1.0 / l);
        symmetrize(&(&red.z * inv * red.z.transpose()))
    } else {
        DMatrix::zeros(0, 0)
    };
    let k = match k_eps {
        Some(k) => {
            validate_completion(k, &kmin)?;
            symmetrize(k)
        }
        None => kmin,
    };
    let a = red.assemble(&a11_eps, &k);
    let obj = objective(&a, red.x(), red.b());
    Ok(PsdpSolution::approximate(
        a,
        obj,
        infimum_value(red, sub),
        eps,
    ))
}

/// Minimal-rank, minimal-Frobenius-norm completion `K̂ = C·B†·Cᵀ` of the
/// block matrix `[[B, Cᵀ], [C, K]]`. Requires `ker(B) ⊆ ker(C)`.
pub fn minimal_norm_completion(bblk: &DenseMatrix, cblk: &DenseMatrix) -> Result<DenseMatrix> {
    if bblk.nrows() != bblk.ncols() || cblk.ncols() != bblk.nrows() {
        return Err(PsdpError::Dimension(format!(
            "B must be square with as many columns as C; got B {}x{}, C {}x{}",
            bblk.nrows(),
            bblk.ncols(),
            cblk.nrows(),
            cblk.ncols()
        )));
    }
    let eig = sym_eig(bblk)?;
    let basis = kernel_basis(&eig, DEFAULT_KERNEL_TOL);
    if basis.ncols() > 0 && (cblk * &basis).norm() > DEFAULT_KERNEL_TOL * cblk.norm().max(1.0) {
        return Err(PsdpError::Precondition(
            "ker(B) is not contained in ker(C)".into(),
        ));
    }
    let pinv = pinv_psd(bblk, DEFAULT_KERNEL_TOL)?;
    Ok(symmetrize(&(cblk * pinv * cblk.transpose())))
}

/// Closed form when `U₁ᵀ(BXᵀ + XBᵀ)U₁ ⪯ 0` and `r < n`: the reduced minimizer
/// is `Â₁₁ = 0`, the infimum is `‖U₁ᵀBV₁‖_F² + ‖BV₂‖_F²`, and
/// `A₁₁^ε = (ε/α)·I` with `α = 4·√n·‖Σ₁‖_F·‖U₁ᵀBV₁‖_F` gives an
/// ε-approximant. Returns `None` when the condition does not hold.
pub fn negative_case_solution(
    red: &ReducedProblem,
    eps: Option<f64>,
) -> Result<Option<PsdpSolution>> {
    if red.r == red.n {
        return Err(PsdpError::Inapplicable(
            "the negative-semidefinite closed form needs rank(X) < n".into(),
        ));
    }
    if !negative_condition_holds(red)? {
        return Ok(None);
    }
    let bt_norm = red.btilde.norm();
    let infimum = bt_norm * bt_norm + red.offset;
    let r = red.r;

    // With Z = 0 the zero matrix already attains the infimum.
    if red.z.norm() <= DEFAULT_KERNEL_TOL * red.btilde.norm().max(1.0) {
        let a = DMatrix::zeros(red.n, red.n);
        let obj = objective(&a, red.x(), red.b());
        return Ok(Some(PsdpSolution::exact(a, obj, infimum)));
    }

    let eps = eps.unwrap_or_else(|| default_epsilon(infimum, bt_norm));
    check_epsilon(eps, bt_norm)?;
    let sigma_fro = red.sigma1.norm();
    let root_n = (red.n as f64).sqrt();
    let alpha = if bt_norm != 0.0 {
        4.0 * root_n * sigma_fro * bt_norm
    } else {
        4.0 * root_n * sigma_fro
    };
    let scale = eps / alpha;
    let a11 = DMatrix::identity(r, r) * scale;
    let k = symmetrize(&(&red.z * red.z.transpose() / scale));
    let a = red.assemble(&a11, &k);
    let obj = objective(&a, red.x(), red.b());
    Ok(Some(PsdpSolution::approximate(a, obj, infimum, eps)))
}

/// Whether `U₁ᵀ(BXᵀ + XBᵀ)U₁ = B̃Σ₁ + Σ₁B̃ᵀ` is negative semidefinite.
pub fn negative_condition_holds(red: &ReducedProblem) -> Result<bool> {
    let sig = red.sigma1_matrix();
    let bs = &red.btilde * &sig;
    let m = &bs + bs.transpose();
    let scale = m.norm();
    Ok(sym_eig(&m)?.max_eigenvalue() <= 1e-12 * scale)
}

/// Closed-form solution when `rank(X) = 1`, `X = σ·u·vᵀ`.
///
/// With `c = uᵀBv` and `p = (I − uuᵀ)Bv`:
/// * `c > 0`: attained by the rank-one `(cu + p)(cu + p)ᵀ/(σc)`;
/// * `c ≤ 0`, `p = 0`: attained by `A = 0`;
/// * `c ≤ 0`, `p ≠ 0`: not attained; returns `(u + (n₀/σ)p)(u + (n₀/σ)p)ᵀ/n₀`
///   with `n₀` the smallest integer such that `σ²/n₀² − 2σc/n₀ < ε`.
pub fn rank1_solve(
    x: &DenseMatrix,
    b: &DenseMatrix,
    eps: Option<f64>,
    rank_tol: Option<f64>,
) -> Result<PsdpSolution> {
    if x.shape() != b.shape() {
        return Err(PsdpError::Dimension(format!(
            "X is {}x{} but B is {}x{}",
            x.nrows(),
            x.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let (n, m) = x.shape();
    let f = svd(x)?;
    let rank = f.rank(rank_tol);
    if rank != 1 {
        return Err(PsdpError::Inapplicable(format!(
            "rank-one closed form needs rank(X) = 1, got {rank}"
        )));
    }
    let sigma = f.s[0];
    let u = f.u.column(0).into_owned();
    let v = f.v.column(0).into_owned();
    let bv = b * &v;
    let c = u.dot(&bv);
    let p = &bv - &u * c;
    let rest = if m > 1 {
        (b * f.v.columns(1, m - 1)).norm_squared()
    } else {
        0.0
    };

    if c > 0.0 {
        let w = &u * c + &p;
        let a = symmetrize(&(&w * w.transpose() / (sigma * c)));
        let obj = objective(&a, x, b);
        return Ok(PsdpSolution::exact(a, obj, rest));
    }

    let infimum = c * c + rest;
    if p.norm() <= 1e-12 * bv.norm().max(1.0) {
        let a = DMatrix::zeros(n, n);
        let obj = objective(&a, x, b);
        return Ok(PsdpSolution::exact(a, obj, infimum));
    }

    let eps = eps.unwrap_or_else(|| (1e-6 * infimum).max(1e-8));
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(PsdpError::Parameter(format!(
            "epsilon must be positive, got {eps:e}"
        )));
    }
    let n0 = smallest_n0(sigma, c, eps);
    let w = &u + &p * (n0 / sigma);
    let a = symmetrize(&(&w * w.transpose() / n0));
    let obj = objective(&a, x, b);
    Ok(PsdpSolution::approximate(a, obj, infimum, eps))
}

/// Smallest positive integer `n₀` with `σ²/n₀² − 2σc/n₀ < ε`, for `c ≤ 0`.
fn smallest_n0(sigma: f64, c: f64, eps: f64) -> f64 {
    let g = |k: f64| sigma * sigma / (k * k) - 2.0 * sigma * c / k;
    // g(1/t) < ε  ⇔  t < (√(c² + ε) − |c|)/σ
    let t = ((c * c + eps).sqrt() - c.abs()) / sigma;
    let mut n0 = (1.0 / t).floor().max(1.0);
    while n0 > 1.0 && g(n0 - 1.0) < eps {
        n0 -= 1.0;
    }
    while g(n0) >= eps {
        n0 += 1.0;
    }
    n0
}
