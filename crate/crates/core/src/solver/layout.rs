use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianMatrix, C64, I, ONE};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    /// Real scalar constrained to be nonnegative.
    NonNeg,
    /// Unconstrained real scalar.
    Free,
    /// Hermitian matrix of the given dimension constrained to be PSD.
    HermitianPsd(usize),
    /// Unconstrained Hermitian matrix of the given dimension.
    HermitianFree(usize),
}

impl VarKind {
    pub fn n_params(self) -> usize {
        match self {
            VarKind::NonNeg | VarKind::Free => 1,
            VarKind::HermitianPsd(n) | VarKind::HermitianFree(n) => n * n,
        }
    }

    pub fn hermitian_dim(self) -> Option<usize> {
        match self {
            VarKind::HermitianPsd(n) | VarKind::HermitianFree(n) => Some(n),
            _ => None,
        }
    }
}

/// Handle to a variable of a [`VariableLayout`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var {
    pub(crate) index: usize,
    pub(crate) offset: usize,
    pub(crate) kind: VarKind,
}

impl Var {
    pub fn kind(&self) -> VarKind {
        self.kind
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    /// Parameter indices and basis matrices of a Hermitian variable.
    pub fn basis(&self) -> Vec<(usize, ComplexMatrix)> {
        let n = self
            .kind
            .hermitian_dim()
            .expect("basis() called on a scalar variable");
        hermitian_basis(n)
            .into_iter()
            .enumerate()
            .map(|(k, b)| (self.offset + k, b))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct VarEntry {
    pub name: String,
    pub kind: VarKind,
    pub offset: usize,
}

/// Flat real parameterisation of all decision variables.
///
/// A Hermitian variable of dimension `n` takes `n²` consecutive slots:
/// the `n` diagonal entries first, then `(Re, Im)` of each upper
/// off-diagonal entry in row order.
#[derive(Clone, Debug, Default)]
pub struct VariableLayout {
    vars: Vec<VarEntry>,
    n_params: usize,
}

impl VariableLayout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, kind: VarKind) -> Var {
        let var = Var {
            index: self.vars.len(),
            offset: self.n_params,
            kind,
        };
        if let Some(0) = kind.hermitian_dim() {
            panic!("Hermitian variable {name} must have dimension >= 1");
        }
        self.vars.push(VarEntry {
            name: name.to_string(),
            kind,
            offset: self.n_params,
        });
        self.n_params += kind.n_params();
        var
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn vars(&self) -> &[VarEntry] {
        &self.vars
    }

    pub fn handle(&self, index: usize) -> Var {
        let e = &self.vars[index];
        Var {
            index,
            offset: e.offset,
            kind: e.kind,
        }
    }

    pub fn find(&self, name: &str) -> Option<Var> {
        self.vars.iter().position(|e| e.name == name).map(|i| self.handle(i))
    }

    pub(crate) fn check_param(&self, p: usize) -> Result<()> {
        if p >= self.n_params {
            return Err(Error::Problem(format!(
                "parameter index {p} out of range ({} parameters)",
                self.n_params
            )));
        }
        Ok(())
    }

    pub fn scalar(&self, x: &[f64], var: Var) -> f64 {
        assert!(var.kind.hermitian_dim().is_none(), "scalar() on a matrix variable");
        x[var.offset]
    }

    pub fn hermitian(&self, x: &[f64], var: Var) -> HermitianMatrix {
        let n = var.kind.hermitian_dim().expect("hermitian() on a scalar variable");
        hermitian_from_params(&x[var.offset..var.offset + n * n], n)
    }

    /// Writes a Hermitian matrix into the parameter slots of `var`.
    pub fn set_hermitian(&self, x: &mut [f64], var: Var, value: &HermitianMatrix) {
        let n = var.kind.hermitian_dim().expect("set_hermitian() on a scalar variable");
        assert_eq!(value.dim(), n);
        hermitian_to_params(value, &mut x[var.offset..var.offset + n * n]);
    }

    pub fn set_scalar(&self, x: &mut [f64], var: Var, value: f64) {
        assert!(var.kind.hermitian_dim().is_none(), "set_scalar() on a matrix variable");
        x[var.offset] = value;
    }
}

/// Basis matrices in parameter order.
pub fn hermitian_basis(n: usize) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(n * n);
    for k in 0..n {
        let mut e = ComplexMatrix::zeros(n, n);
        e[(k, k)] = ONE;
        out.push(e);
    }
    for j in 0..n {
        for k in (j + 1)..n {
            let mut re = ComplexMatrix::zeros(n, n);
            re[(j, k)] = ONE;
            re[(k, j)] = ONE;
            out.push(re);
            let mut im = ComplexMatrix::zeros(n, n);
            im[(j, k)] = I;
            im[(k, j)] = -I;
            out.push(im);
        }
    }
    out
}

pub fn hermitian_from_params(p: &[f64], n: usize) -> HermitianMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        m[(k, k)] = C64::new(p[k], 0.0);
    }
    let mut idx = n;
    for j in 0..n {
        for k in (j + 1)..n {
            let z = C64::new(p[idx], p[idx + 1]);
            m[(j, k)] = z;
            m[(k, j)] = z.conj();
            idx += 2;
        }
    }
    HermitianMatrix::symmetrize(&m)
}

pub fn hermitian_to_params(h: &HermitianMatrix, out: &mut [f64]) {
    let n = h.dim();
    for k in 0..n {
        out[k] = h[(k, k)].re;
    }
    let mut idx = n;
    for j in 0..n {
        for k in (j + 1)..n {
            out[idx] = h[(j, k)].re;
            out[idx + 1] = h[(j, k)].im;
            idx += 2;
        }
    }
}
