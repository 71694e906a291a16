//! The manifold of symmetric positive definite matrices with the
//! affine-invariant metric.
//!
//! Points are SPD matrices `X`; tangent vectors at `X` are symmetric
//! matrices. With `<U, V>_X = tr(X^-1 U X^-1 V)` the space is Hadamard
//! (complete, nonpositively curved) and all primitives have spectral
//! closed forms:
//!
//! * `Exp_X(U) = X^{1/2} exp(X^{-1/2} U X^{-1/2}) X^{1/2}`
//! * `Log_X(Y) = X^{1/2} log(X^{-1/2} Y X^{-1/2}) X^{1/2}`
//! * `d(X, Y) = ||log(X^{-1/2} Y X^{-1/2})||_F`
//! * geodesic `gamma(t) = X^{1/2} (X^{-1/2} Y X^{-1/2})^t X^{1/2}`
//!
//! Numerical policy: every operation re-symmetrizes its result as
//! `(A + A^T)/2` before returning, and eigenvalues at or below the
//! relative positivity floor are reported as [`Error::EigenvalueFloor`],
//! never clamped — silent clamping would mask genuine drift in the
//! optimizer loop.

use std::io::{self, BufRead, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::manifold::HadamardManifold;

/// Relative tolerance for symmetry validation: `max |A_ij - A_ji|` must not
/// exceed this multiple of the largest entry magnitude.
pub const SYM_REL_TOL: f64 = 1e-12;

/// Relative positivity floor: eigenvalues at or below
/// `EIG_REL_FLOOR * lambda_max` fail definiteness checks.
pub const EIG_REL_FLOOR: f64 = 1e-12;

fn ensure_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

fn ensure_finite(m: &DMatrix<f64>, context: &'static str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { context })
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let tol = SYM_REL_TOL * max_abs(m);
    let mut max_asym = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            max_asym = max_asym.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if max_asym > tol {
        return Err(Error::NotSymmetric { max_asym, tol });
    }
    Ok(())
}

/// `(A + A^T) / 2`, applied to every computed matrix before it is returned.
pub fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let mt = m.transpose();
    (m + mt) * 0.5
}

/// Eigendecomposition of a symmetric matrix.
///
/// Returns `(values, vectors)` with eigenvalues sorted in descending order
/// and `vectors` carrying the matching orthonormal eigenvectors as columns,
/// so that `A = Q diag(values) Q^T`.
pub fn sym_eig(a: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    ensure_square(a)?;
    ensure_finite(a, "sym_eig input")?;
    check_symmetric(a)?;
    let n = a.nrows();
    let eig = a.clone().symmetric_eigen();
    if !eig.eigenvalues.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite {
            context: "sym_eig eigenvalues",
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .expect("finite eigenvalues are comparable")
    });
    let values = DVector::from_fn(n, |k, _| eig.eigenvalues[order[k]]);
    let vectors = DMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
    Ok((values, vectors))
}

/// Spectral matrix functions used by the manifold primitives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatrixFn {
    /// Principal square root; requires positive spectrum.
    Sqrt,
    /// Inverse square root; requires positive spectrum.
    InvSqrt,
    /// Matrix logarithm; requires positive spectrum.
    Log,
    /// Matrix exponential; defined for any symmetric argument.
    Exp,
    /// Real power `A^p`; requires positive spectrum.
    Power(f64),
}

fn check_positive_floor(values: &DVector<f64>) -> Result<()> {
    let lambda_max = values[0];
    let floor = EIG_REL_FLOOR * lambda_max.max(0.0);
    let lambda_min = values[values.len() - 1];
    if lambda_min <= floor {
        return Err(Error::EigenvalueFloor {
            eigenvalue: lambda_min,
            floor,
        });
    }
    Ok(())
}

/// Apply a spectral function to a symmetric matrix: eigendecompose, map the
/// eigenvalues, recompose, re-symmetrize.
///
/// Functions needing a positive spectrum (`Sqrt`, `InvSqrt`, `Log`,
/// `Power`) report [`Error::EigenvalueFloor`] when the smallest eigenvalue
/// sits at or below the relative floor. Overflow (e.g. `Exp` of a huge
/// argument) is reported as [`Error::NonFinite`].
pub fn matrix_fn(a: &DMatrix<f64>, f: MatrixFn) -> Result<DMatrix<f64>> {
    let (values, q) = sym_eig(a)?;
    let needs_positive = matches!(
        f,
        MatrixFn::Sqrt | MatrixFn::InvSqrt | MatrixFn::Log | MatrixFn::Power(_)
    );
    if needs_positive {
        check_positive_floor(&values)?;
    }
    if let MatrixFn::Power(p) = f {
        if !p.is_finite() {
            return Err(Error::ParamOutOfRange {
                name: "power exponent",
                value: p,
                range: "finite reals",
            });
        }
    }
    let mapped = values.map(|l| match f {
        MatrixFn::Sqrt => l.sqrt(),
        MatrixFn::InvSqrt => 1.0 / l.sqrt(),
        MatrixFn::Log => l.ln(),
        MatrixFn::Exp => l.exp(),
        MatrixFn::Power(p) => l.powf(p),
    });
    let result = symmetrize(&q * DMatrix::from_diagonal(&mapped) * q.transpose());
    ensure_finite(&result, "matrix_fn result")?;
    Ok(result)
}

/// A validated point on the SPD manifold.
///
/// Construction checks that the matrix is square, finite, symmetric within
/// [`SYM_REL_TOL`] and positive definite with smallest eigenvalue strictly
/// above the relative floor [`EIG_REL_FLOOR`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpdPoint {
    mat: DMatrix<f64>,
}

impl SpdPoint {
    /// Validate and wrap a matrix.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        ensure_square(&mat)?;
        ensure_finite(&mat, "point entries")?;
        check_symmetric(&mat)?;
        let (values, _) = sym_eig(&mat)?;
        check_positive_floor(&values)?;
        Ok(SpdPoint { mat })
    }

    /// The identity matrix, the default initial iterate of the optimizer.
    pub fn identity(n: usize) -> Self {
        SpdPoint {
            mat: DMatrix::identity(n, n),
        }
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Borrow the underlying matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// Consume and return the underlying matrix.
    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    /// `log det X`, computed from a Cholesky factorization.
    pub fn log_det(&self) -> Result<f64> {
        let chol = nalgebra::Cholesky::new(self.mat.clone()).ok_or(Error::FactorizationFailed {
            context: "log_det",
        })?;
        Ok(chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum())
    }

    /// Serialize in the plain-text matrix format (see
    /// [`write_matrix_text`]).
    pub fn write_text<W: Write>(&self, w: &mut W) -> io::Result<()> {
        write_matrix_text(w, &self.mat)
    }

    /// Read a point from the plain-text matrix format, validating it.
    pub fn read_text<R: BufRead>(r: &mut R) -> io::Result<Self> {
        let mat = read_matrix_text(r)?;
        SpdPoint::new(mat).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))
    }
}

/// A tangent vector: a symmetric matrix attached to its base point.
#[derive(Debug, Clone)]
pub struct TangentVec {
    mat: DMatrix<f64>,
    base: SpdPoint,
}

impl TangentVec {
    /// Validate and wrap a symmetric matrix as a tangent vector at `base`.
    pub fn new(base: SpdPoint, mat: DMatrix<f64>) -> Result<Self> {
        ensure_square(&mat)?;
        if mat.nrows() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                got: mat.nrows(),
            });
        }
        ensure_finite(&mat, "tangent entries")?;
        check_symmetric(&mat)?;
        Ok(TangentVec { mat, base })
    }

    /// The zero vector at `base`.
    pub fn zero(base: SpdPoint) -> Self {
        let n = base.dim();
        TangentVec {
            mat: DMatrix::zeros(n, n),
            base,
        }
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Borrow the component matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// Borrow the base point.
    pub fn base(&self) -> &SpdPoint {
        &self.base
    }

    /// Scalar multiple, keeping the base point.
    pub fn scaled(&self, c: f64) -> Self {
        TangentVec {
            mat: &self.mat * c,
            base: self.base.clone(),
        }
    }

    /// Riemannian norm at the base point,
    /// `sqrt(tr(X^-1 U X^-1 U))` with `X` the base.
    pub fn norm(&self) -> Result<f64> {
        let chol =
            nalgebra::Cholesky::new(self.base.mat.clone()).ok_or(Error::FactorizationFailed {
                context: "tangent norm",
            })?;
        let a = chol.solve(&self.mat);
        let mut sq = 0.0;
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                sq += a[(i, j)] * a[(j, i)];
            }
        }
        Ok(sq.max(0.0).sqrt())
    }
}

/// The SPD manifold of a fixed ambient dimension, with the
/// affine-invariant metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdManifold {
    n: usize,
}

impl SpdManifold {
    /// Manifold of `n x n` SPD matrices; `n >= 1`.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ParamOutOfRange {
                name: "n",
                value: 0.0,
                range: "[1, inf)",
            });
        }
        Ok(SpdManifold { n })
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.n
    }

    fn check_point(&self, x: &SpdPoint) -> Result<()> {
        if x.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.dim(),
            });
        }
        Ok(())
    }

    fn check_tangent(&self, u: &TangentVec) -> Result<()> {
        if u.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: u.dim(),
            });
        }
        Ok(())
    }

    /// `X^{1/2}` and `X^{-1/2}` from a single eigendecomposition.
    fn sqrt_pair(&self, x: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let (values, q) = sym_eig(x)?;
        check_positive_floor(&values)?;
        let sqrt_vals = values.map(|l| l.sqrt());
        let inv_sqrt_vals = values.map(|l| 1.0 / l.sqrt());
        let s = symmetrize(&q * DMatrix::from_diagonal(&sqrt_vals) * q.transpose());
        let si = symmetrize(&q * DMatrix::from_diagonal(&inv_sqrt_vals) * q.transpose());
        Ok((s, si))
    }

    /// Eigenvalues (descending) of `X^{-1/2} Y X^{-1/2}`, the relative
    /// spectrum underlying `log`, `dist` and `geodesic_point`.
    fn relative_spectrum(
        &self,
        x: &SpdPoint,
        y: &SpdPoint,
    ) -> Result<(DVector<f64>, DMatrix<f64>, DMatrix<f64>)> {
        let (s, si) = self.sqrt_pair(&x.mat)?;
        let arg = symmetrize(&si * &y.mat * &si);
        let (values, q) = sym_eig(&arg)?;
        check_positive_floor(&values)?;
        // Returns (relative eigenvalues, X^{1/2}, basis of the whitened arg).
        Ok((values, s, q))
    }
}

impl HadamardManifold for SpdManifold {
    type Point = SpdPoint;
    type Tangent = TangentVec;

    /// `<U, V>_X = tr(X^-1 U X^-1 V)`.
    fn inner(&self, x: &SpdPoint, u: &TangentVec, v: &TangentVec) -> Result<f64> {
        self.check_point(x)?;
        self.check_tangent(u)?;
        self.check_tangent(v)?;
        let chol = nalgebra::Cholesky::new(x.mat.clone()).ok_or(Error::FactorizationFailed {
            context: "inner product",
        })?;
        let a = chol.solve(&u.mat);
        let b = chol.solve(&v.mat);
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                acc += a[(i, j)] * b[(j, i)];
            }
        }
        Ok(acc)
    }

    fn exp(&self, x: &SpdPoint, u: &TangentVec) -> Result<SpdPoint> {
        self.check_point(x)?;
        self.check_tangent(u)?;
        let (s, si) = self.sqrt_pair(&x.mat)?;
        let arg = symmetrize(&si * &u.mat * &si);
        let e = matrix_fn(&arg, MatrixFn::Exp)?;
        SpdPoint::new(symmetrize(&s * e * &s))
    }

    fn log(&self, x: &SpdPoint, y: &SpdPoint) -> Result<TangentVec> {
        self.check_point(x)?;
        self.check_point(y)?;
        let (s, si) = self.sqrt_pair(&x.mat)?;
        let arg = symmetrize(&si * &y.mat * &si);
        let l = matrix_fn(&arg, MatrixFn::Log)?;
        TangentVec::new(x.clone(), symmetrize(&s * l * &s))
    }

    /// `d(X, Y) = sqrt(sum_i ln^2 lambda_i(X^{-1/2} Y X^{-1/2}))`.
    fn dist(&self, x: &SpdPoint, y: &SpdPoint) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        let (values, _, _) = self.relative_spectrum(x, y)?;
        Ok(values.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt())
    }

    /// `gamma(t) = X^{1/2} (X^{-1/2} Y X^{-1/2})^t X^{1/2}`, computed
    /// spectrally.
    fn geodesic_point(&self, x: &SpdPoint, y: &SpdPoint, t: f64) -> Result<SpdPoint> {
        self.check_point(x)?;
        self.check_point(y)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::ParamOutOfRange {
                name: "t",
                value: t,
                range: "[0, 1]",
            });
        }
        let (values, s, q) = self.relative_spectrum(x, y)?;
        let powered = values.map(|l| l.powf(t));
        let inner = symmetrize(&q * DMatrix::from_diagonal(&powered) * q.transpose());
        SpdPoint::new(symmetrize(&s * inner * &s))
    }

    fn scale_tangent(&self, u: &TangentVec, c: f64) -> TangentVec {
        u.scaled(c)
    }

    /// Distance from `x` to the ray point `Exp_p(-t dir/|dir|)`, computed in
    /// the log-eigenvalue domain.
    ///
    /// Materializing the ray point fails for large `t`: its eigenvalues
    /// scale like `exp(±t)`, which overflows f64 near `t ~ 700` and violates
    /// the relative positivity floor far earlier. Instead, after whitening
    /// by `p^{-1/2}` and rotating into the eigenbasis of the direction, the
    /// needed quantities are the log-eigenvalues `mu_i` of
    /// `e^S G e^S` with `S = diag(t d_i / 2)` and `G` moderate SPD; each
    /// `mu_i` is found by bisection on the inertia of the congruent matrix
    /// `G - diag(e^{m - 2 s_i})` (Sylvester's law), rebalanced so its norm
    /// stays O(1). The distance is `sqrt(sum mu_i^2)`. This stays exact in
    /// the eigenvalue count for arbitrarily large `t` and never forms a
    /// matrix with entries outside f64 range.
    fn ray_distance(&self, p: &SpdPoint, dir: &TangentVec, t: f64, x: &SpdPoint) -> Result<f64> {
        self.check_point(p)?;
        self.check_point(x)?;
        self.check_tangent(dir)?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::ParamOutOfRange {
                name: "t",
                value: t,
                range: "[0, inf)",
            });
        }
        let speed = self.norm(p, dir)?;
        if speed <= 0.0 {
            return Err(Error::ZeroDirection);
        }
        let (_, psi) = self.sqrt_pair(&p.mat)?;
        // Unit-speed whitened direction and whitened target.
        let w = symmetrize(&psi * dir.matrix() * &psi) / speed;
        let xt = symmetrize(&psi * x.matrix() * &psi);
        let (d_vals, r) = sym_eig(&w)?;
        let g = symmetrize(r.transpose() * xt * &r);
        let (g_vals, _) = sym_eig(&g)?;
        let n = self.n;
        let g_max = g_vals[0];
        let g_min = g_vals[n - 1];
        if g_min <= 0.0 {
            return Err(Error::EigenvalueFloor {
                eigenvalue: g_min,
                floor: 0.0,
            });
        }
        // Exponents of the diagonal scaling e^S; d_vals descending.
        let s: Vec<f64> = d_vals.iter().map(|d| 0.5 * t * d).collect();
        let s_max = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s_min = s.iter().cloned().fold(f64::INFINITY, f64::min);
        // Ostrowski bounds: every log-eigenvalue lies in this bracket.
        let lo_global = 2.0 * s_min + g_min.ln() - 1e-9;
        let hi_global = 2.0 * s_max + g_max.ln() + 1e-9;
        let atol = 1e-12 * (1.0 + t);

        // Number of eigenvalues of e^S G e^S strictly below e^m, via the
        // inertia of D (G - diag(w)) D with w_i = e^{m - 2 s_i} and
        // D_i = (1 + w_i)^{-1/2}.
        let count_below = |m: f64| -> usize {
            let mut h = DMatrix::zeros(n, n);
            let mut dscale = vec![0.0_f64; n];
            let mut wdd = vec![0.0_f64; n];
            for i in 0..n {
                let e = m - 2.0 * s[i];
                let w_i = if e < -700.0 { 0.0 } else { e.min(690.0).exp() };
                dscale[i] = 1.0 / (1.0 + w_i).sqrt();
                wdd[i] = w_i / (1.0 + w_i);
            }
            for i in 0..n {
                for j in 0..n {
                    let mut v = g[(i, j)] * dscale[i] * dscale[j];
                    if i == j {
                        v -= wdd[i];
                    }
                    h[(i, j)] = v;
                }
            }
            let eig = h.symmetric_eigen();
            eig.eigenvalues.iter().filter(|&&l| l < 0.0).count()
        };

        let mut sum_sq = 0.0;
        for k in 1..=n {
            let mut lo = lo_global;
            let mut hi = hi_global;
            while hi - lo > atol {
                let mid = 0.5 * (lo + hi);
                if count_below(mid) >= k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let mu = 0.5 * (lo + hi);
            sum_sq += mu * mu;
        }
        Ok(sum_sq.sqrt())
    }
}

/// Write a matrix in the plain-text checkpoint format: a line with the
/// dimension `n`, then `n` rows of `n` values at 17 significant digits,
/// space-separated, LF line endings.
pub fn write_matrix_text<W: Write>(w: &mut W, m: &DMatrix<f64>) -> io::Result<()> {
    writeln!(w, "{}", m.nrows())?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        w.write_all(row.join(" ").as_bytes())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Read a matrix in the plain-text checkpoint format written by
/// [`write_matrix_text`].
pub fn read_matrix_text<R: BufRead>(r: &mut R) -> io::Result<DMatrix<f64>> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let n: usize = line
        .trim()
        .parse()
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("bad dimension line: {e}")))?;
    let mut mat = DMatrix::zeros(n, n);
    for i in 0..n {
        line.clear();
        r.read_line(&mut line)?;
        let row: Vec<&str> = line.split_whitespace().collect();
        if row.len() != n {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("row {i} has {} values, expected {n}", row.len()),
            ));
        }
        for (j, tok) in row.iter().enumerate() {
            mat[(i, j)] = tok.parse().map_err(|e| {
                io::Error::new(io::ErrorKind::InvalidData, format!("row {i} col {j}: {e}"))
            })?;
        }
    }
    Ok(mat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{random_invertible, random_spd, random_sym, random_tangent, rng};
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    #[test]
    fn sym_eig_of_hand_worked_two_by_two() {
        // [[2,1],[1,2]] has eigenpairs (3, (1,1)/sqrt2) and (1, (1,-1)/sqrt2).
        let a = dmatrix![2.0, 1.0; 1.0, 2.0];
        let (vals, q) = sym_eig(&a).unwrap();
        assert_relative_eq!(vals[0], 3.0, max_relative = 1e-14);
        assert_relative_eq!(vals[1], 1.0, max_relative = 1e-14);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        // Eigenvectors are defined up to sign.
        let dot0 = q[(0, 0)] * inv_sqrt2 + q[(1, 0)] * inv_sqrt2;
        let dot1 = q[(0, 1)] * inv_sqrt2 - q[(1, 1)] * inv_sqrt2;
        assert!(dot0.abs() > 1.0 - 1e-12, "first eigenvector off: {dot0}");
        assert!(dot1.abs() > 1.0 - 1e-12, "second eigenvector off: {dot1}");
    }

    #[test]
    fn sym_eig_reconstructs_and_is_orthonormal() {
        let mut r = rng(11);
        for n in [2usize, 4, 8, 16] {
            let a = random_sym(n, &mut r, 1.5);
            let (vals, q) = sym_eig(&a).unwrap();
            let recon = &q * DMatrix::from_diagonal(&vals) * q.transpose();
            let scale = max_abs(&a).max(1.0);
            assert!(max_abs(&(recon - &a)) <= 1e-12 * scale);
            let qtq = q.transpose() * &q;
            assert!(max_abs(&(qtq - DMatrix::identity(n, n))) <= 1e-12);
            for k in 1..n {
                assert!(vals[k - 1] >= vals[k], "eigenvalues not descending");
            }
        }
    }

    #[test]
    fn sym_eig_rejects_bad_inputs() {
        let rect = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(sym_eig(&rect), Err(Error::NotSquare { .. })));
        let asym = dmatrix![1.0, 2.0; 0.0, 1.0];
        assert!(matches!(sym_eig(&asym), Err(Error::NotSymmetric { .. })));
        let nan = dmatrix![f64::NAN, 0.0; 0.0, 1.0];
        assert!(matches!(sym_eig(&nan), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn matrix_fn_closed_forms_on_diagonals() {
        let a = dmatrix![4.0, 0.0; 0.0, 9.0];
        let s = matrix_fn(&a, MatrixFn::Sqrt).unwrap();
        assert_relative_eq!(s[(0, 0)], 2.0, max_relative = 1e-14);
        assert_relative_eq!(s[(1, 1)], 3.0, max_relative = 1e-14);
        let p = matrix_fn(&a, MatrixFn::Power(0.5)).unwrap();
        assert!(max_abs(&(p - s)) <= 1e-13);
        let l = matrix_fn(&a, MatrixFn::Log).unwrap();
        assert_relative_eq!(l[(0, 0)], 4.0_f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn matrix_fn_log_exp_roundtrip() {
        let mut r = rng(23);
        for n in [2usize, 4, 8] {
            let a = random_sym(n, &mut r, 1.0);
            let back = matrix_fn(&matrix_fn(&a, MatrixFn::Exp).unwrap(), MatrixFn::Log).unwrap();
            let scale = max_abs(&a).max(1.0);
            assert!(
                max_abs(&(back - &a)) <= 1e-10 * scale,
                "log(exp(A)) drifted at n={n}"
            );
        }
    }

    #[test]
    fn matrix_fn_reports_floor_violation_instead_of_clamping() {
        // Eigenvalues (1, 1e-13): relative floor is 1e-12, so the small one fails.
        let a = dmatrix![1.0, 0.0; 0.0, 1e-13];
        let err = matrix_fn(&a, MatrixFn::Log).unwrap_err();
        match err {
            Error::EigenvalueFloor { eigenvalue, floor } => {
                assert!(eigenvalue < floor + 1e-15);
                assert_relative_eq!(floor, 1e-12, max_relative = 1e-6);
            }
            other => panic!("expected EigenvalueFloor, got {other:?}"),
        }
        // Exp has no positivity requirement.
        assert!(matrix_fn(&a, MatrixFn::Exp).is_ok());
    }

    #[test]
    fn matrix_fn_exp_overflow_is_nonfinite() {
        let a = dmatrix![800.0, 0.0; 0.0, 0.0];
        assert!(matches!(
            matrix_fn(&a, MatrixFn::Exp),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn spd_point_validation() {
        assert!(SpdPoint::new(dmatrix![2.0, 1.0; 1.0, 2.0]).is_ok());
        assert!(matches!(
            SpdPoint::new(dmatrix![1.0, 0.9; 0.2, 1.0]),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(matches!(
            SpdPoint::new(dmatrix![1.0, 0.0; 0.0, -2.0]),
            Err(Error::EigenvalueFloor { .. })
        ));
        // Condition number beyond the relative floor is rejected, not clamped.
        assert!(matches!(
            SpdPoint::new(dmatrix![1.0, 0.0; 0.0, 5e-13]),
            Err(Error::EigenvalueFloor { .. })
        ));
        assert!(matches!(
            SpdPoint::new(dmatrix![f64::INFINITY, 0.0; 0.0, 1.0]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn inner_product_hand_values() {
        // At the identity with U = V = I the inner product is tr(I) = n.
        let m = SpdManifold::new(2).unwrap();
        let x = SpdPoint::identity(2);
        let u = TangentVec::new(x.clone(), DMatrix::identity(2, 2)).unwrap();
        assert_relative_eq!(m.inner(&x, &u, &u).unwrap(), 2.0, max_relative = 1e-14);
        // At X = 2I with U = V = I: tr((X^-1)^2) = tr(I/4) = 1/2.
        let x2 = SpdPoint::new(dmatrix![2.0, 0.0; 0.0, 2.0]).unwrap();
        let u2 = TangentVec::new(x2.clone(), DMatrix::identity(2, 2)).unwrap();
        assert_relative_eq!(m.inner(&x2, &u2, &u2).unwrap(), 0.5, max_relative = 1e-14);
        assert_relative_eq!(
            m.norm(&x2, &u2).unwrap(),
            0.5_f64.sqrt(),
            max_relative = 1e-14
        );
        assert_relative_eq!(u2.norm().unwrap(), 0.5_f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn dist_hand_value_on_commuting_pair() {
        // d(I, diag(e^2, 1)) = ||diag(2, 0)||_F = 2.
        let m = SpdManifold::new(2).unwrap();
        let x = SpdPoint::identity(2);
        let y = SpdPoint::new(dmatrix![2.0_f64.exp(), 0.0; 0.0, 1.0]).unwrap();
        assert_relative_eq!(m.dist(&x, &y).unwrap(), 2.0, max_relative = 1e-13);
        // d(I, diag(e, e)) = ||diag(1, 1)||_F = sqrt(2).
        let z = SpdPoint::new(dmatrix![1.0_f64.exp(), 0.0; 0.0, 1.0_f64.exp()]).unwrap();
        assert_relative_eq!(
            m.dist(&x, &z).unwrap(),
            2.0_f64.sqrt(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn exp_log_inverse_on_random_instances() {
        let mut r = rng(37);
        for n in [2usize, 4, 8] {
            let m = SpdManifold::new(n).unwrap();
            for _ in 0..40 {
                let x = random_spd(n, &mut r, 0.8);
                let u = random_tangent(&x, &mut r, 1.2);
                let y = m.exp(&x, &u).unwrap();
                let back = m.log(&x, &y).unwrap();
                let scale = max_abs(u.matrix()).max(1.0);
                assert!(
                    max_abs(&(back.matrix() - u.matrix())) <= 1e-9 * scale,
                    "log(exp) drift at n={n}"
                );
                // Other direction: exp(log(x, y)) = y.
                let y2 = m.exp(&x, &back).unwrap();
                let yscale = max_abs(y.matrix()).max(1.0);
                assert!(max_abs(&(y2.matrix() - y.matrix())) <= 1e-9 * yscale);
                // Norm of the log equals the distance.
                assert_relative_eq!(
                    back.norm().unwrap(),
                    m.dist(&x, &y).unwrap(),
                    max_relative = 1e-9
                );
            }
        }
    }

    #[test]
    fn distance_is_a_metric_and_affine_invariant() {
        let mut r = rng(41);
        let n = 4;
        let m = SpdManifold::new(n).unwrap();
        for _ in 0..40 {
            let x = random_spd(n, &mut r, 0.9);
            let y = random_spd(n, &mut r, 0.9);
            let z = random_spd(n, &mut r, 0.9);
            let dxy = m.dist(&x, &y).unwrap();
            let dyx = m.dist(&y, &x).unwrap();
            assert_relative_eq!(dxy, dyx, max_relative = 1e-10);
            assert!(m.dist(&x, &x).unwrap() <= 1e-9);
            let dxz = m.dist(&x, &z).unwrap();
            let dzy = m.dist(&z, &y).unwrap();
            assert!(dxy <= dxz + dzy + 1e-9, "triangle inequality violated");

            // Congruence invariance: d(AXA^T, AYA^T) = d(X, Y).
            let a = random_invertible(n, &mut r, 1e3);
            let xa = SpdPoint::new(symmetrize(&a * x.matrix() * a.transpose())).unwrap();
            let ya = SpdPoint::new(symmetrize(&a * y.matrix() * a.transpose())).unwrap();
            let da = m.dist(&xa, &ya).unwrap();
            assert_relative_eq!(da, dxy, max_relative = 1e-8);
        }
    }

    #[test]
    fn geodesic_matches_exp_of_scaled_log() {
        let mut r = rng(43);
        let n = 3;
        let m = SpdManifold::new(n).unwrap();
        for _ in 0..30 {
            let x = random_spd(n, &mut r, 0.8);
            let y = random_spd(n, &mut r, 0.8);
            let full = m.dist(&x, &y).unwrap();
            for t in [0.0, 0.25, 0.5, 0.9, 1.0] {
                let gp = m.geodesic_point(&x, &y, t).unwrap();
                let via_log = m
                    .exp(&x, &m.log(&x, &y).unwrap().scaled(t))
                    .unwrap();
                let scale = max_abs(gp.matrix()).max(1.0);
                assert!(
                    max_abs(&(gp.matrix() - via_log.matrix())) <= 1e-9 * scale,
                    "two routes disagree at t={t}"
                );
                assert_relative_eq!(
                    m.dist(&x, &gp).unwrap(),
                    t * full,
                    epsilon = 1e-9,
                    max_relative = 1e-9
                );
            }
            let g0 = m.geodesic_point(&x, &y, 0.0).unwrap();
            let g1 = m.geodesic_point(&x, &y, 1.0).unwrap();
            assert!(max_abs(&(g0.matrix() - x.matrix())) <= 1e-10 * max_abs(x.matrix()));
            assert!(max_abs(&(g1.matrix() - y.matrix())) <= 1e-9 * max_abs(y.matrix()));
            assert!(matches!(
                m.geodesic_point(&x, &y, 1.5),
                Err(Error::ParamOutOfRange { .. })
            ));
        }
    }

    #[test]
    fn ray_distance_agrees_with_direct_route_at_small_horizons() {
        let mut r = rng(47);
        for n in [2usize, 4, 6] {
            let m = SpdManifold::new(n).unwrap();
            for _ in 0..15 {
                let p = random_spd(n, &mut r, 0.7);
                let x = random_spd(n, &mut r, 0.7);
                let v = random_tangent(&p, &mut r, 1.0);
                for t in [0.0, 0.4, 1.3, 3.0, 6.0] {
                    let fast = m.ray_distance(&p, &v, t, &x).unwrap();
                    // Default trait route: materialize the ray point.
                    let speed = m.norm(&p, &v).unwrap();
                    let gamma = m.exp(&p, &v.scaled(-t / speed)).unwrap();
                    let direct = m.dist(&gamma, &x).unwrap();
                    assert!(
                        (fast - direct).abs() <= 1e-8 * (1.0 + direct),
                        "n={n} t={t}: bisection {fast} vs direct {direct}"
                    );
                }
            }
        }
    }

    #[test]
    fn ray_distance_survives_horizons_far_beyond_overflow() {
        let mut r = rng(53);
        let n = 3;
        let m = SpdManifold::new(n).unwrap();
        let p = random_spd(n, &mut r, 0.6);
        let x = random_spd(n, &mut r, 0.6);
        let v = random_tangent(&p, &mut r, 1.0);
        // Partial Busemann values b(t) = d(gamma(t), x) - t are nonincreasing.
        let mut prev = f64::INFINITY;
        for t in [1.0, 16.0, 256.0, 4096.0, 65536.0, 1048576.0, 1e9] {
            let d = m.ray_distance(&p, &v, t, &x).unwrap();
            assert!(d.is_finite());
            let b = d - t;
            assert!(
                b <= prev + 1e-7,
                "partial value increased at t={t}: {b} > {prev}"
            );
            prev = b;
        }
    }

    #[test]
    fn serialization_roundtrip_is_bit_exact() {
        let mut r = rng(59);
        let x = random_spd(5, &mut r, 1.0);
        let mut buf = Vec::new();
        x.write_text(&mut buf).unwrap();
        let back = SpdPoint::read_text(&mut buf.as_slice()).unwrap();
        assert_eq!(x.matrix(), back.matrix(), "roundtrip must be bit exact");
        // Format check on a tiny frozen matrix.
        let small = SpdPoint::new(dmatrix![1.0, 0.5; 0.5, 2.0]).unwrap();
        let mut out = Vec::new();
        small.write_text(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "2\n1.0000000000000000e0 5.0000000000000000e-1\n5.0000000000000000e-1 2.0000000000000000e0\n"
        );
    }

    #[test]
    fn serialization_rejects_malformed_input() {
        let bad = "2\n1.0 0.0\n0.0\n";
        assert!(SpdPoint::read_text(&mut bad.as_bytes()).is_err());
        let not_spd = "2\n1.0 2.0\n2.0 1.0\n";
        assert!(SpdPoint::read_text(&mut not_spd.as_bytes()).is_err());
    }

    #[test]
    fn log_det_matches_spectral_sum() {
        let mut r = rng(61);
        let x = random_spd(6, &mut r, 1.0);
        let (vals, _) = sym_eig(x.matrix()).unwrap();
        let expected: f64 = vals.iter().map(|l| l.ln()).sum();
        assert_relative_eq!(x.log_det().unwrap(), expected, max_relative = 1e-10);
    }
}
