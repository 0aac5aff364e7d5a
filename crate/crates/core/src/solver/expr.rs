use super::layout::Var;
use crate::linalg::{ComplexMatrix, HermitianMatrix, C64};

/// Affine real scalar `c + Σ a_p x_p`.
#[derive(Clone, Debug, Default)]
pub struct ScalarExpr {
    pub(crate) constant: f64,
    pub(crate) coeffs: Vec<(usize, f64)>,
}

impl ScalarExpr {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            coeffs: Vec::new(),
        }
    }

    pub fn var(v: Var) -> Self {
        Self::constant(0.0).plus_var(v, 1.0)
    }

    pub fn plus_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    /// Adds `coeff * v` for a scalar variable.
    pub fn plus_var(mut self, v: Var, coeff: f64) -> Self {
        assert!(v.kind.hermitian_dim().is_none(), "plus_var needs a scalar variable");
        self.coeffs.push((v.offset, coeff));
        self
    }

    /// Adds `f(X)` for a real linear functional `f` of a Hermitian variable.
    pub fn plus_map(mut self, v: Var, mut f: impl FnMut(&ComplexMatrix) -> f64) -> Self {
        for (p, b) in v.basis() {
            let c = f(&b);
            if c != 0.0 {
                self.coeffs.push((p, c));
            }
        }
        self
    }

    /// Adds `coeff * tr(X)`.
    pub fn plus_trace(self, v: Var, coeff: f64) -> Self {
        let n = v.kind.hermitian_dim().expect("plus_trace needs a Hermitian variable");
        let mut s = self;
        for k in 0..n {
            s.coeffs.push((v.offset + k, coeff));
        }
        s
    }

    /// Adds `coeff * x^H X x`.
    pub fn plus_quad(self, v: Var, x: &ComplexMatrix, coeff: f64) -> Self {
        self.plus_map(v, |b| coeff * b.quad_form(x).re)
    }

    /// Adds `coeff * tr(H X)` for Hermitian `H`.
    pub fn plus_trace_with(self, v: Var, h: &HermitianMatrix, coeff: f64) -> Self {
        self.plus_map(v, |b| coeff * h.as_matrix().matmul(b).trace().re)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().map(|&(p, a)| a * x[p]).sum::<f64>()
    }
}

/// How a matrix expression's blocks are handed to the barrier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    /// Complex Hermitian; embedded as a real block of twice the dimension.
    Complex,
    /// Real symmetric; imaginary parts must vanish.
    Real,
}

/// Affine Hermitian matrix `C + Σ x_p B_p`.
#[derive(Clone, Debug)]
pub struct MatrixExpr {
    pub(crate) dim: usize,
    pub(crate) field: Field,
    pub(crate) constant: ComplexMatrix,
    pub(crate) terms: Vec<(usize, ComplexMatrix)>,
}

impl MatrixExpr {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            field: Field::Complex,
            constant: ComplexMatrix::zeros(dim, dim),
            terms: Vec::new(),
        }
    }

    pub fn real(dim: usize) -> Self {
        Self {
            field: Field::Real,
            ..Self::new(dim)
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn plus_constant(mut self, c: &ComplexMatrix) -> Self {
        self.constant += c;
        self
    }

    pub fn plus_identity(self, s: f64) -> Self {
        let n = self.dim;
        self.plus_constant(&ComplexMatrix::identity(n).scale_real(s))
    }

    /// Adds `v * m` for a scalar variable.
    pub fn plus_scalar(mut self, v: Var, m: &ComplexMatrix) -> Self {
        assert!(v.kind.hermitian_dim().is_none(), "plus_scalar needs a scalar variable");
        self.terms.push((v.offset, m.clone()));
        self
    }

    /// Adds `v * s * I` for a scalar variable.
    pub fn plus_scalar_identity(self, v: Var, s: f64) -> Self {
        let n = self.dim;
        self.plus_scalar(v, &ComplexMatrix::identity(n).scale_real(s))
    }

    /// Adds `f(X)` for a real-linear map `f` from the Hermitian variable
    /// to `dim x dim` Hermitian matrices.
    pub fn plus_map(mut self, v: Var, mut f: impl FnMut(&ComplexMatrix) -> ComplexMatrix) -> Self {
        for (p, b) in v.basis() {
            let m = f(&b);
            if m.max_abs() != 0.0 {
                self.terms.push((p, m));
            }
        }
        self
    }

    /// Places a Hermitian variable as the diagonal block starting at `at`,
    /// scaled by `s`.
    pub fn plus_var_block(self, v: Var, at: usize, s: f64) -> Self {
        let dim = self.dim;
        self.plus_map(v, |b| {
            let mut m = ComplexMatrix::zeros(dim, dim);
            m.set_block(at, at, &b.scale_real(s));
            m
        })
    }

    pub fn eval(&self, x: &[f64]) -> ComplexMatrix {
        let mut out = self.constant.clone();
        for (p, b) in &self.terms {
            if x[*p] != 0.0 {
                out += &b.scale(C64::new(x[*p], 0.0));
            }
        }
        out
    }

    pub fn eval_hermitian(&self, x: &[f64]) -> HermitianMatrix {
        HermitianMatrix::symmetrize(&self.eval(x))
    }
}
