//! Dense matrix primitives and spectral kernels.
//!
//! Every other module works on [`DenseMatrix`], a plain `nalgebra` dynamic
//! matrix of `f64`. The eigen- and singular-value decompositions are delegated
//! to `nalgebra`; the wrappers here sort the spectra, complete the singular
//! bases to full orthogonal matrices and re-symmetrize results that are
//! symmetric in exact arithmetic.

use nalgebra::{DMatrix, DVector, Dyn};

use crate::error::{PsdpError, Result};

/// Dense real matrix. The universal carrier for `X`, `B` and `A`.
pub type DenseMatrix = DMatrix<f64>;

const EIG_MAX_SWEEPS_PER_DIM: usize = 200;

/// Builds a matrix from row-major entries, rejecting non-finite values.
pub fn from_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<DenseMatrix> {
    if rows == 0 || cols == 0 {
        return Err(PsdpError::Dimension(format!(
            "matrix must have positive dimensions, got {rows}x{cols}"
        )));
    }
    if entries.len() != rows * cols {
        return Err(PsdpError::Dimension(format!(
            "expected {} entries for a {rows}x{cols} matrix, got {}",
            rows * cols,
            entries.len()
        )));
    }
    let m = DMatrix::from_row_slice(rows, cols, entries);
    check_finite(&m)?;
    Ok(m)
}

pub fn check_finite(m: &DenseMatrix) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(PsdpError::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

pub(crate) fn require_square(m: &DenseMatrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(PsdpError::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Symmetric part `(M + Mᵀ)/2`.
pub fn sym_part(m: &DenseMatrix) -> Result<DenseMatrix> {
    require_square(m, "sym_part input")?;
    Ok(symmetrize(m))
}

/// Unchecked symmetrization for callers that already know `m` is square.
pub(crate) fn symmetrize(m: &DenseMatrix) -> DenseMatrix {
    (m + m.transpose()) * 0.5
}

/// Eigendecomposition `S = Q·diag(λ)·Qᵀ` of a symmetric matrix, with `λ`
/// sorted in nonincreasing order.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub q: DenseMatrix,
    pub lambda: DVector<f64>,
}

impl SymEig {
    /// Reassembles `Q·diag(f(λ))·Qᵀ`.
    pub fn reassemble_with(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let n = self.q.nrows();
        let mut scaled = self.q.clone();
        for (j, &l) in self.lambda.iter().enumerate() {
            let w = f(l);
            scaled.column_mut(j).scale_mut(w);
        }
        let out = &scaled * self.q.transpose();
        debug_assert_eq!(out.nrows(), n);
        symmetrize(&out)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.lambda.get(0).copied().unwrap_or(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.lambda.iter().copied().last().unwrap_or(0.0)
    }
}

/// Eigendecomposition of the symmetric part of `m`.
pub fn sym_eig(m: &DenseMatrix) -> Result<SymEig> {
    require_square(m, "eigendecomposition input")?;
    let n = m.nrows();
    let s = symmetrize(m);
    let eig = s
        .clone()
        .try_symmetric_eigen(f64::EPSILON, EIG_MAX_SWEEPS_PER_DIM * n.max(1))
        .ok_or_else(|| {
            PsdpError::Numeric(format!(
                "symmetric eigensolver did not converge (n = {n}, ||S||_F = {:.3e})",
                s.norm()
            ))
        })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lambda = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let q = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(SymEig { q, lambda })
}

/// Frobenius-nearest positive semidefinite matrix: clip the negative
/// eigenvalues of the symmetric part to zero.
pub fn psd_project(m: &DenseMatrix) -> Result<DenseMatrix> {
    let eig = sym_eig(m)?;
    Ok(eig.reassemble_with(|l| l.max(0.0)))
}

/// Pseudoinverse of a symmetric PSD matrix. Eigenvalues at or below
/// `tol·λ_max` are treated as zero.
pub fn pinv_psd(s: &DenseMatrix, tol: f64) -> Result<DenseMatrix> {
    let eig = sym_eig(s)?;
    let cutoff = tol * eig.max_eigenvalue().max(0.0);
    Ok(eig.reassemble_with(|l| if l > cutoff && l > 0.0 { 1.0 / l } else { 0.0 }))
}

/// Full singular value decomposition `M = U·Σ·Vᵀ` with `U` (n×n) and `V`
/// (m×m) orthogonal and `s` nonincreasing.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub s: DVector<f64>,
    pub v: DenseMatrix,
}

impl SvdFactors {
    /// `U·Σ·Vᵀ` with `Σ` the n×m embedding of `s`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let (n, m) = (self.u.nrows(), self.v.nrows());
        let mut sigma = DMatrix::zeros(n, m);
        for (i, &si) in self.s.iter().enumerate() {
            sigma[(i, i)] = si;
        }
        &self.u * sigma * self.v.transpose()
    }

    pub fn rank(&self, rank_tol: Option<f64>) -> usize {
        let (n, m) = (self.u.nrows(), self.v.nrows());
        let tol = rank_tol.unwrap_or_else(|| default_rank_tol(n, m, self.sigma_max()));
        numerical_rank(self.s.as_slice(), tol)
    }

    pub fn sigma_max(&self) -> f64 {
        self.s.get(0).copied().unwrap_or(0.0)
    }
}

/// Full SVD with validated postconditions.
pub fn svd(m: &DenseMatrix) -> Result<SvdFactors> {
    check_finite(m)?;
    let (n, cols) = (m.nrows(), m.ncols());
    let p = n.min(cols);
    // nalgebra's bidiagonal iteration occasionally converges to a wrong
    // factorization on rank-deficient input, depending on the tolerance and
    // orientation. Candidates are tried in turn until one checks out.
    let thin = svd_attempts(m).ok_or_else(|| {
        PsdpError::Numeric(format!(
            "SVD did not converge ({n}x{cols}, ||M||_F = {:.3e})",
            m.norm()
        ))
    })?;
    let (u_thin, v_t) = match (thin.u, thin.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(PsdpError::Numeric("SVD factors were not computed".into())),
    };

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| thin.singular_values[b].total_cmp(&thin.singular_values[a]));
    let s = DVector::from_iterator(p, order.iter().map(|&i| thin.singular_values[i].max(0.0)));
    // Singular vectors of (numerically) zero singular values are not reliably
    // orthonormal, so only the leading ones are kept and the rest is completed.
    let r = numerical_rank(
        s.as_slice(),
        default_rank_tol(n, cols, s.get(0).copied().unwrap_or(0.0)),
    );
    let u1 = gram_schmidt(DMatrix::from_fn(n, r, |i, j| u_thin[(i, order[j])]));
    let v1 = gram_schmidt(DMatrix::from_fn(cols, r, |i, j| v_t[(order[j], i)]));

    let u = complete_basis(&u1);
    let v = complete_basis(&v1);
    Ok(SvdFactors { u, s, v })
}

type ThinSvd = nalgebra::SVD<f64, Dyn, Dyn>;

fn svd_attempts(m: &DenseMatrix) -> Option<ThinSvd> {
    let (n, cols) = m.shape();
    let max_iter = EIG_MAX_SWEEPS_PER_DIM * (n + cols);
    let tol = 1e2 * f64::EPSILON * (n + cols) as f64 * m.norm();
    let ok = |t: &ThinSvd, target: &DenseMatrix| {
        let (Some(u), Some(v_t)) = (&t.u, &t.v_t) else {
            return false;
        };
        let k = t.singular_values.len();
        let eye = DMatrix::<f64>::identity(k, k);
        let rec = u * DMatrix::from_diagonal(&t.singular_values) * v_t;
        (rec - target).norm() <= tol
            && (u.transpose() * u - &eye).norm() <= 1e-10 * k as f64
            && (v_t * v_t.transpose() - &eye).norm() <= 1e-10 * k as f64
    };
    let mt = m.transpose();
    for eps in [f64::EPSILON, 5.0 * f64::EPSILON, 1e-14] {
        if let Some(t) = m.clone().try_svd(true, true, eps, max_iter) {
            if ok(&t, m) {
                return Some(t);
            }
        }
        if let Some(t) = mt.clone().try_svd(true, true, eps, max_iter) {
            if ok(&t, &mt) {
                return Some(ThinSvd {
                    u: t.v_t.map(|v| v.transpose()),
                    v_t: t.u.map(|u| u.transpose()),
                    singular_values: t.singular_values,
                });
            }
        }
    }
    None
}

/// Modified Gram-Schmidt, twice, keeping the direction of each column.
fn gram_schmidt(mut q: DenseMatrix) -> DenseMatrix {
    for _ in 0..2 {
        for j in 0..q.ncols() {
            for i in 0..j {
                let d = q.column(i).dot(&q.column(j));
                let qi = q.column(i).into_owned();
                q.column_mut(j).axpy(-d, &qi, 1.0);
            }
            let nrm = q.column(j).norm();
            if nrm > 0.0 {
                q.column_mut(j).unscale_mut(nrm);
            }
        }
    }
    q
}

/// Extends orthonormal columns `q` (n×k) to a full n×n orthogonal matrix
/// whose first k columns are exactly `q`.
pub fn complete_basis(q: &DenseMatrix) -> DenseMatrix {
    let (n, k) = (q.nrows(), q.ncols());
    if k >= n {
        return q.columns(0, n).into_owned();
    }
    let complement = orthonormal_complement(q);
    let mut full = DMatrix::zeros(n, n);
    full.columns_mut(0, k).copy_from(q);
    full.columns_mut(k, n - k).copy_from(&complement);
    full
}

/// Orthonormal basis (n×(n−k)) of the orthogonal complement of the span of
/// the orthonormal columns `q` (n×k).
pub fn orthonormal_complement(q: &DenseMatrix) -> DenseMatrix {
    let (n, k) = (q.nrows(), q.ncols());
    if k >= n {
        return DMatrix::zeros(n, 0);
    }
    if k == 0 {
        return DMatrix::identity(n, n);
    }
    let mut aug = DMatrix::zeros(n, k + n);
    aug.columns_mut(0, k).copy_from(q);
    aug.columns_mut(k, n).fill_with_identity();
    let qfull = aug.qr().q();
    let mut c = qfull.columns(k, n - k).into_owned();
    // One Gram-Schmidt pass against q to remove the QR roundoff.
    let proj = q * (q.transpose() * &c);
    c -= proj;
    for mut col in c.column_iter_mut() {
        let nrm = col.norm();
        if nrm > 0.0 {
            col /= nrm;
        }
    }
    c
}

/// Default numerical rank threshold `max(n, m)·ε·σ₁`.
pub fn default_rank_tol(n: usize, m: usize, sigma_max: f64) -> f64 {
    n.max(m) as f64 * f64::EPSILON * sigma_max
}

/// Number of singular values strictly above `tol`.
pub fn numerical_rank(s: &[f64], tol: f64) -> usize {
    s.iter().filter(|&&x| x > tol).count()
}

/// Moore-Penrose pseudoinverse through the SVD.
pub fn pinv(m: &DenseMatrix, rank_tol: Option<f64>) -> Result<DenseMatrix> {
    let f = svd(m)?;
    let r = f.rank(rank_tol);
    let (n, cols) = (m.nrows(), m.ncols());
    let mut out = DMatrix::zeros(cols, n);
    for i in 0..r {
        let vi = f.v.column(i);
        let ui = f.u.column(i);
        out += (vi * ui.transpose()) / f.s[i];
    }
    Ok(out)
}

pub fn fro_norm(m: &DenseMatrix) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn spectral_norm(m: &DenseMatrix) -> Result<f64> {
    Ok(svd(m)?.sigma_max())
}

/// Smallest singular value above the numerical-rank threshold, `σ_r`.
/// Returns 0 for a numerically zero matrix.
pub fn min_nonzero_singular(m: &DenseMatrix, rank_tol: Option<f64>) -> Result<f64> {
    let f = svd(m)?;
    let r = f.rank(rank_tol);
    Ok(if r == 0 { 0.0 } else { f.s[r - 1] })
}

/// Whether the symmetric part of `m` has all eigenvalues `≥ −tol`.
pub fn is_psd(m: &DenseMatrix, tol: f64) -> Result<bool> {
    Ok(sym_eig(m)?.min_eigenvalue() >= -tol)
}

/// Frobenius inner product `⟨P, Q⟩ = trace(PᵀQ)`.
pub fn inner(p: &DenseMatrix, q: &DenseMatrix) -> f64 {
    p.iter().zip(q.iter()).map(|(a, b)| a * b).sum()
}

/// Block matrix `[[b, cᵀ], [c, d]]`.
pub fn assemble_blocks(b: &DenseMatrix, c: &DenseMatrix, d: &DenseMatrix) -> DenseMatrix {
    let s = b.nrows();
    let t = d.nrows();
    let mut r = DMatrix::zeros(s + t, s + t);
    r.view_mut((0, 0), (s, s)).copy_from(b);
    r.view_mut((s, 0), (t, s)).copy_from(c);
    r.view_mut((0, s), (s, t)).copy_from(&c.transpose());
    r.view_mut((s, s), (t, t)).copy_from(d);
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m(rows: usize, cols: usize, e: &[f64]) -> DenseMatrix {
        from_row_major(rows, cols, e).unwrap()
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(matches!(
            from_row_major(2, 2, &[1.0, 2.0, 3.0]),
            Err(PsdpError::Dimension(_))
        ));
        assert!(matches!(
            from_row_major(1, 2, &[1.0, f64::NAN]),
            Err(PsdpError::NonFinite { row: 0, col: 1 })
        ));
        assert!(from_row_major(0, 2, &[]).is_err());
    }

    #[test]
    fn sym_part_examples() {
        let skew = m(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert_eq!(sym_part(&skew).unwrap(), DMatrix::zeros(2, 2));
        let i3 = DMatrix::identity(3, 3);
        assert_eq!(sym_part(&i3).unwrap(), i3);
        let a = m(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert_eq!(sym_part(&a).unwrap(), m(2, 2, &[1.0, 1.0, 1.0, 1.0]));
        assert!(matches!(
            sym_part(&DMatrix::zeros(2, 3)),
            Err(PsdpError::Dimension(_))
        ));
    }

    #[test]
    fn psd_project_examples() {
        let d = m(2, 2, &[1.0, 0.0, 0.0, -2.0]);
        assert_close(
            &psd_project(&d).unwrap(),
            &m(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            1e-14,
        );
        let skew = m(2, 2, &[0.0, -3.0, 3.0, 0.0]);
        assert_close(&psd_project(&skew).unwrap(), &DMatrix::zeros(2, 2), 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_psd(&mut rng, 6, 6);
        assert_close(&psd_project(&p).unwrap(), &p, 1e-12 * p.norm());
    }

    #[test]
    fn psd_project_output_is_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let a = gaussian(&mut rng, 7, 7);
            let p = psd_project(&a).unwrap();
            assert_eq!(p, p.transpose());
            assert!(sym_eig(&p).unwrap().min_eigenvalue() >= -1e-10 * a.norm());
        }
    }

    #[test]
    fn pinv_psd_examples() {
        let d = m(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        assert_close(
            &pinv_psd(&d, 1e-12).unwrap(),
            &m(2, 2, &[0.5, 0.0, 0.0, 0.0]),
            1e-15,
        );
        let i4 = DMatrix::<f64>::identity(4, 4);
        assert_close(&pinv_psd(&i4, 1e-12).unwrap(), &i4, 1e-14);
        // (vvᵀ)† = vvᵀ/‖v‖⁴ with ‖v‖ = 2
        let v = DVector::from_column_slice(&[1.0, 1.0, 1.0, -1.0]);
        let vvt = &v * v.transpose();
        assert_close(&pinv_psd(&vvt, 1e-12).unwrap(), &(&vvt / 16.0), 1e-14);
    }

    #[test]
    fn pinv_psd_reproduces_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_psd_rank(&mut rng, 6, 3);
        let sp = pinv_psd(&s, 1e-10).unwrap();
        assert_close(&(&s * &sp * &s), &s, 1e-10 * s.norm());
    }

    #[test]
    fn svd_examples() {
        let d = m(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        assert_close_vec(svd(&d).unwrap().s.as_slice(), &[3.0, 1.0], 1e-14);
        let z = DMatrix::<f64>::zeros(3, 2);
        assert_close_vec(svd(&z).unwrap().s.as_slice(), &[0.0, 0.0], 0.0);
        let p = m(2, 2, &[0.0, 2.0, 1.0, 0.0]);
        assert_close_vec(svd(&p).unwrap().s.as_slice(), &[2.0, 1.0], 1e-14);
    }

    #[test]
    fn svd_invariants_on_rectangular_and_deficient_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, mm, r) in &[
            (6, 4, 4),
            (4, 6, 4),
            (6, 4, 2),
            (5, 5, 1),
            (3, 7, 3),
            (5, 3, 1),
            (4, 6, 1),
            (5, 7, 1),
            (7, 2, 1),
        ] {
            let a = gaussian_rank(&mut rng, n, mm, r);
            let f = svd(&a).unwrap();
            assert_orthogonal(&f.u, 1e-10 * n as f64);
            assert_orthogonal(&f.v, 1e-10 * mm as f64);
            assert!((f.reconstruct() - &a).norm() <= 1e-10 * a.norm().max(1.0));
            assert!(f.s.iter().all(|&x| x >= 0.0));
            assert!(f.s.as_slice().windows(2).all(|w| w[0] >= w[1]));
            assert_eq!(f.rank(None), r);
        }
    }

    #[test]
    fn sym_eig_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = gaussian(&mut rng, 8, 8);
        let s = symmetrize(&a);
        let e = sym_eig(&s).unwrap();
        assert_orthogonal(&e.q, 1e-10 * 8.0);
        assert!(e.lambda.as_slice().windows(2).all(|w| w[0] >= w[1]));
        assert!((e.reassemble_with(|l| l) - &s).norm() <= 1e-10 * s.norm());
    }

    #[test]
    fn norms_examples() {
        let i3 = DMatrix::<f64>::identity(3, 3);
        assert!((fro_norm(&i3) - 3f64.sqrt()).abs() < 1e-15);
        assert!((spectral_norm(&i3).unwrap() - 1.0).abs() < 1e-14);
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&[4.0, 0.0, 3.0]));
        assert!((fro_norm(&d) - 5.0).abs() < 1e-15);
        assert!((spectral_norm(&d).unwrap() - 4.0).abs() < 1e-14);
        assert!((min_nonzero_singular(&d, None).unwrap() - 3.0).abs() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = gaussian(&mut rng, 5, 5);
        let s = svd(&a).unwrap().s;
        let sum_sq: f64 = s.iter().map(|x| x * x).sum();
        assert!((fro_norm(&a).powi(2) - sum_sq).abs() <= 1e-12 * sum_sq);
    }

    #[test]
    fn pinv_general_matches_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = gaussian_rank(&mut rng, 5, 7, 3);
        let ap = pinv(&a, None).unwrap();
        assert_close(&(&a * &ap * &a), &a, 1e-10 * a.norm());
        assert_close(&(&ap * &a * &ap), &ap, 1e-10 * ap.norm());
    }

    #[test]
    fn complement_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = svd(&gaussian(&mut rng, 6, 2))
            .unwrap()
            .u
            .columns(0, 2)
            .into_owned();
        let c = orthonormal_complement(&q);
        assert_eq!(c.ncols(), 4);
        assert!((q.transpose() * &c).norm() < 1e-12);
        assert_orthogonal(&complete_basis(&q), 1e-12);
    }

    #[test]
    fn block_assembly_layout() {
        let b = m(1, 1, &[1.0]);
        let c = m(2, 1, &[2.0, 3.0]);
        let d = m(2, 2, &[4.0, 5.0, 5.0, 6.0]);
        let r = assemble_blocks(&b, &c, &d);
        assert_eq!(r, m(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]));
    }
}
