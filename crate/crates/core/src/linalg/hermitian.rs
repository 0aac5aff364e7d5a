use std::ops::Deref;

use super::complex::{ComplexMatrix, C64, ZERO};
use super::real::RealMatrix;
use crate::error::{Error, Result};

/// Relative asymmetry above which construction is rejected.
pub const HERMITIAN_REJECT_TOL: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_OFF_DIAG_TOL: f64 = 1e-13;

/// Complex square matrix with `a = a^H`.
///
/// Construction symmetrises `(a + a^H)/2` and zeroes the imaginary part of
/// the diagonal, so downstream code can rely on exact symmetry.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    pub fn new(a: ComplexMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!(
                "Hermitian matrix must be square, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let asym = a.asymmetry();
        let tol = HERMITIAN_REJECT_TOL * a.frobenius_norm().max(f64::MIN_POSITIVE);
        if asym > tol && asym > 1e-300 {
            return Err(Error::NotHermitian {
                asymmetry: asym,
                tolerance: tol,
            });
        }
        Ok(Self::symmetrize(&a))
    }

    /// Symmetrises without any asymmetry check. Intended for matrices that
    /// are Hermitian by construction (e.g. `X A X^H`).
    pub fn symmetrize(a: &ComplexMatrix) -> Self {
        let n = a.rows();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = C64::new(a[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let v = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
                out[(i, j)] = v;
                out[(j, i)] = v.conj();
            }
        }
        Self(out)
    }

    pub fn zeros(n: usize) -> Self {
        Self(ComplexMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexMatrix::identity(n))
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        Self(ComplexMatrix::identity(n).scale_real(s))
    }

    pub fn real_diag(d: &[f64]) -> Self {
        Self(ComplexMatrix::real_diag(d))
    }

    /// `v v^H` for a column vector `v`.
    pub fn outer(v: &ComplexMatrix) -> Self {
        assert_eq!(v.cols(), 1, "outer product needs a column vector");
        Self::symmetrize(&v.matmul(&v.adjoint()))
    }

    /// `x a x^H`.
    pub fn congruence(&self, x: &ComplexMatrix) -> Self {
        Self::symmetrize(&x.matmul(&self.0).matmul(&x.adjoint()))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace_re(&self) -> f64 {
        self.0.trace().re
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale_real(s))
    }

    /// `x^H a x`, real for Hermitian `a`.
    pub fn quad(&self, x: &ComplexMatrix) -> f64 {
        self.0.quad_form(x).re
    }

    /// Real part of `tr(self * other)`; exact for two Hermitian matrices.
    pub fn trace_product(&self, other: &Self) -> f64 {
        // tr(AB) = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij)
        self.0
            .as_slice()
            .iter()
            .zip(other.0.as_slice())
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    pub fn eig(&self) -> Result<Eigen> {
        eig_hermitian(self)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eig()?.values[0])
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(*self.eig()?.values.last().expect("non-empty spectrum"))
    }

    pub fn cholesky(&self) -> Result<ComplexCholesky> {
        ComplexCholesky::new(self)
    }

    pub fn logdet(&self) -> Result<f64> {
        logdet_psd(self)
    }

    pub fn inverse(&self) -> Result<HermitianMatrix> {
        Ok(self.cholesky()?.inverse())
    }

    pub fn embed_real(&self) -> RealMatrix {
        embed_real(self)
    }
}

impl Deref for HermitianMatrix {
    type Target = ComplexMatrix;
    fn deref(&self) -> &ComplexMatrix {
        &self.0
    }
}

/// Eigendecomposition `a = V diag(values) V^H` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the eigenvectors.
    pub vectors: ComplexMatrix,
}

impl Eigen {
    pub fn vector(&self, k: usize) -> ComplexMatrix {
        self.vectors.col(k)
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = ComplexMatrix::real_diag(&self.values);
        self.vectors.matmul(&d).matmul(&self.vectors.adjoint())
    }
}

/// Cyclic complex Jacobi eigensolver for Hermitian matrices.
pub fn eig_hermitian(a: &HermitianMatrix) -> Result<Eigen> {
    let n = a.dim();
    let mut m = a.as_matrix().clone();
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm();
    let off = |m: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off_norm = off(&m);
        if off_norm <= JACOBI_OFF_DIAG_TOL * scale || off_norm == 0.0 {
            break;
        }
        if sweeps >= JACOBI_MAX_SWEEPS {
            return Err(Error::EigenNoConvergence {
                sweeps,
                off_diagonal: off_norm,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag <= f64::MIN_POSITIVE {
                    continue;
                }
                // phase so that the (p, q) entry becomes real and positive
                let phase = apq / mag;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // U restricted to (p, q): [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
                let upp = C64::new(c, 0.0);
                let upq = C64::new(s, 0.0);
                let uqp = -phase.conj() * s;
                let uqq = phase.conj() * c;
                // columns: M <- M U
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * upp + mkq * uqp;
                    m[(k, q)] = mkp * upq + mkq * uqq;
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * upp + vkq * uqp;
                    v[(k, q)] = vkp * upq + vkq * uqq;
                }
                // rows: M <- U^H M
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = upp.conj() * mpk + uqp.conj() * mqk;
                    m[(q, k)] = upq.conj() * mpk + uqq.conj() * mqk;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

/// Lower Cholesky factor `a = L L^H` of a Hermitian positive definite matrix.
#[derive(Clone, Debug)]
pub struct ComplexCholesky {
    l: ComplexMatrix,
}

impl ComplexCholesky {
    pub fn new(a: &HermitianMatrix) -> Result<Self> {
        let n = a.dim();
        let mut l = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j, value: d });
            }
            let djj = d.sqrt();
            l[(j, j)] = C64::new(djj, 0.0);
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &ComplexMatrix {
        &self.l
    }

    pub fn logdet(&self) -> f64 {
        let n = self.l.rows();
        2.0 * (0..n).map(|i| self.l[(i, i)].re.ln()).sum::<f64>()
    }

    /// Solves `a x = b` for a matrix right-hand side.
    pub fn solve(&self, b: &ComplexMatrix) -> ComplexMatrix {
        let n = self.l.rows();
        assert_eq!(b.rows(), n);
        let mut x = b.clone();
        for c in 0..b.cols() {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= self.l[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / self.l[(i, i)];
            }
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in (i + 1)..n {
                    s -= self.l[(k, i)].conj() * x[(k, c)];
                }
                x[(i, c)] = s / self.l[(i, i)];
            }
        }
        x
    }

    pub fn inverse(&self) -> HermitianMatrix {
        let n = self.l.rows();
        HermitianMatrix::symmetrize(&self.solve(&ComplexMatrix::identity(n)))
    }
}

/// `ln det(a)` for positive definite `a` via Cholesky.
pub fn logdet_psd(a: &HermitianMatrix) -> Result<f64> {
    Ok(ComplexCholesky::new(a)?.logdet())
}

/// Real symmetric embedding `[[Re a, -Im a], [Im a, Re a]]`.
pub fn embed_real(a: &HermitianMatrix) -> RealMatrix {
    let n = a.dim();
    let mut out = RealMatrix::zeros(2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)];
            out.set(i, j, z.re);
            out.set(i, j + n, -z.im);
            out.set(i + n, j, z.im);
            out.set(i + n, j + n, z.re);
        }
    }
    out
}

/// Principal eigenpair (largest eigenvalue).
pub fn principal_eigenpair(a: &HermitianMatrix) -> Result<(f64, ComplexMatrix)> {
    let e = a.eig()?;
    let k = e.values.len() - 1;
    Ok((e.values[k], e.vector(k)))
}

/// Orthonormal basis (columns) of the numerical null space of `a^H a`,
/// i.e. eigenvectors with eigenvalue at most `rel_tol * lambda_max`.
pub fn null_space(a: &ComplexMatrix, rel_tol: f64) -> Result<Option<ComplexMatrix>> {
    let gram = HermitianMatrix::symmetrize(&a.adjoint().matmul(a));
    let e = gram.eig()?;
    let lmax = e.values.last().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..e.values.len())
        .filter(|&k| e.values[k] <= rel_tol * lmax || lmax == 0.0)
        .collect();
    if keep.is_empty() {
        return Ok(None);
    }
    let n = gram.dim();
    Ok(Some(ComplexMatrix::from_fn(n, keep.len(), |r, c| {
        e.vectors[(r, keep[c])]
    })))
}

/// Rotates a vector's global phase so that its first non-negligible
/// component is real and positive.
pub fn fix_phase(v: &ComplexMatrix) -> ComplexMatrix {
    let tol = 1e-12 * v.max_abs().max(f64::MIN_POSITIVE);
    for z in v.as_slice() {
        if z.norm() > tol {
            let rot = z.conj() / z.norm();
            return v.scale(rot);
        }
    }
    v.clone()
}
