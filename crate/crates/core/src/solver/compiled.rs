//! Real-valued compiled form of a problem and the barrier function.

use std::collections::HashMap;

use super::expr::{Field, MatrixExpr, ScalarExpr};
use crate::linalg::dot;
use crate::linalg::{embed_real, HermitianMatrix, RealMatrix};

/// Affine scalar with merged sparse coefficients.
#[derive(Clone, Debug)]
pub(crate) struct Affine {
    pub c: f64,
    pub a: Vec<(usize, f64)>,
}

impl Affine {
    pub fn from_expr(e: &ScalarExpr, n: usize) -> Self {
        let mut dense = vec![0.0; n];
        for &(p, v) in &e.coeffs {
            dense[p] += v;
        }
        Self {
            c: e.constant,
            a: sparsify(&dense),
        }
    }

    #[inline]
    pub fn eval(&self, z: &[f64]) -> f64 {
        self.c + self.a.iter().map(|&(p, v)| v * z[p]).sum::<f64>()
    }

    fn substitute(&self, x0: &[f64], basis: &[Vec<f64>]) -> Self {
        let c = self.eval(x0);
        let dense: Vec<f64> = basis
            .iter()
            .map(|col| self.a.iter().map(|&(p, v)| v * col[p]).sum())
            .collect();
        Self { c, a: sparsify(&dense) }
    }
}

fn sparsify(dense: &[f64]) -> Vec<(usize, f64)> {
    dense
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i, *v))
        .collect()
}

/// Upper-triangle nonzeros `(i, j, v)` of a symmetric coefficient matrix.
type SymEntries = Vec<(usize, usize, f64)>;

/// Real symmetric affine block `G(z) = C + Σ z_p B_p`.
#[derive(Clone, Debug)]
pub(crate) struct SymBlock {
    pub dim: usize,
    pub constant: RealMatrix,
    pub terms: Vec<(usize, SymEntries)>,
    groups: Vec<Group>,
}

fn to_real(m: &crate::linalg::ComplexMatrix, field: Field) -> RealMatrix {
    let h = HermitianMatrix::symmetrize(m);
    match field {
        Field::Complex => embed_real(&h),
        Field::Real => {
            let n = h.dim();
            let mut r = RealMatrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    r.set(i, j, h[(i, j)].re);
                }
            }
            r
        }
    }
}

fn upper_entries(m: &RealMatrix) -> SymEntries {
    let d = m.dim();
    let mut out = Vec::new();
    for i in 0..d {
        for j in i..d {
            let v = m.get(i, j);
            if v != 0.0 {
                out.push((i, j, v));
            }
        }
    }
    out
}

impl SymBlock {
    fn new(constant: RealMatrix, terms: Vec<(usize, SymEntries)>) -> Self {
        let groups = group_terms(&terms);
        Self {
            dim: constant.dim(),
            constant,
            terms,
            groups,
        }
    }

    /// Returns the block and its barrier weight (½ for embedded complex
    /// blocks, whose log-determinant doubles).
    pub fn from_expr(e: &MatrixExpr, n: usize) -> (Self, f64) {
        let constant = to_real(&e.constant, e.field);
        let mut dense: Vec<Option<RealMatrix>> = vec![None; n];
        for (p, b) in &e.terms {
            let r = to_real(b, e.field);
            match &mut dense[*p] {
                Some(acc) => acc.axpy(1.0, &r),
                slot @ None => *slot = Some(r),
            }
        }
        let terms = dense
            .into_iter()
            .enumerate()
            .filter_map(|(p, m)| {
                let entries = upper_entries(&m?);
                (!entries.is_empty()).then_some((p, entries))
            })
            .collect();
        let weight = match e.field {
            Field::Complex => 0.5,
            Field::Real => 1.0,
        };
        (Self::new(constant, terms), weight)
    }

    pub fn assemble(&self, z: &[f64]) -> RealMatrix {
        let mut g = self.constant.clone();
        for (p, entries) in &self.terms {
            let zp = z[*p];
            if zp == 0.0 {
                continue;
            }
            for &(i, j, v) in entries {
                g.add_to(i, j, v * zp);
                if i != j {
                    g.add_to(j, i, v * zp);
                }
            }
        }
        g
    }

    fn substitute(&self, x0: &[f64], basis: &[Vec<f64>]) -> Self {
        let constant = self.assemble(x0);
        let d = self.dim;
        let terms = basis
            .iter()
            .enumerate()
            .filter_map(|(k, col)| {
                let mut m = RealMatrix::zeros(d);
                let mut any = false;
                for (p, entries) in &self.terms {
                    let w = col[*p];
                    if w == 0.0 {
                        continue;
                    }
                    any = true;
                    for &(i, j, v) in entries {
                        m.add_to(i, j, w * v);
                    }
                }
                if !any {
                    return None;
                }
                let entries: SymEntries = (0..d)
                    .flat_map(|i| (i..d).map(move |j| (i, j)))
                    .filter_map(|(i, j)| {
                        let v = m.get(i, j);
                        (v != 0.0).then_some((i, j, v))
                    })
                    .collect();
                (!entries.is_empty()).then_some((k, entries))
            })
            .collect();
        Self::new(constant, terms)
    }

    /// Adds `s·I` with `s` the parameter `p`.
    fn with_identity_param(&self, p: usize) -> Self {
        let mut terms = self.terms.clone();
        terms.push((p, (0..self.dim).map(|i| (i, i, 1.0)).collect()));
        Self::new(self.constant.clone(), terms)
    }

    /// `ln det G(z)`, or `None` when `G(z)` is not positive definite.
    pub fn logdet(&self, z: &[f64]) -> Option<f64> {
        self.assemble(z).cholesky().ok().map(|c| c.logdet())
    }

    /// Adds the derivatives of `-coef · ln det G(z)` to `grad` (and
    /// `hess`); returns `ln det G(z)`.
    pub fn accumulate(
        &self,
        z: &[f64],
        coef: f64,
        grad: &mut [f64],
        hess: Option<&mut RealMatrix>,
    ) -> Option<f64> {
        let chol = self.assemble(z).cholesky().ok()?;
        let logdet = chol.logdet();
        let r = chol.inverse();
        let d = self.dim;
        let rs = r.as_slice();
        match hess {
            None => {
                for (p, entries) in &self.terms {
                    grad[*p] -= coef * trace_rb(rs, d, entries);
                }
            }
            Some(h) => {
                // C_u = R U for each distinct coefficient matrix U, so that
                // tr(R B_p R B_q) is a dot product computed once per pair of
                // distinct matrices.
                let groups = &self.groups;
                let dd = d * d;
                let n = groups.len();
                // ct holds (R U)^T row-major; c holds R U row-major.
                let mut ct = vec![0.0; n * dd];
                let mut c = Vec::with_capacity(n * dd);
                for (k, g) in groups.iter().enumerate() {
                    let ctk = &mut ct[k * dd..(k + 1) * dd];
                    for &(i, j, v) in &self.terms[g.term].1 {
                        axpy(&mut ctk[j * d..(j + 1) * d], v, &rs[i * d..(i + 1) * d]);
                        if i != j {
                            axpy(&mut ctk[i * d..(i + 1) * d], v, &rs[j * d..(j + 1) * d]);
                        }
                    }
                    let mut tr = 0.0;
                    for a in 0..d {
                        tr += ctk[a * d + a];
                        c.extend((0..d).map(|b| ctk[b * d + a]));
                    }
                    for &(p, sp) in &g.members {
                        grad[p] -= coef * sp * tr;
                    }
                }
                for u in 0..n {
                    let cu = &c[u * dd..(u + 1) * dd];
                    for w in u..n {
                        let val = dot(cu, &ct[w * dd..(w + 1) * dd]);
                        for &(p, sp) in &groups[u].members {
                            for &(q, sq) in &groups[w].members {
                                let x = coef * sp * sq * val;
                                h.add_to(p, q, x);
                                if u != w {
                                    h.add_to(q, p, x);
                                }
                            }
                        }
                    }
                }
            }
        }
        Some(logdet)
    }
}

/// Parameters sharing one coefficient matrix up to scale:
/// `B_p = s_p · B_term`.
#[derive(Clone, Debug)]
struct Group {
    term: usize,
    members: Vec<(usize, f64)>,
}

fn group_terms(terms: &[(usize, SymEntries)]) -> Vec<Group> {
    let mut index: HashMap<Vec<(usize, usize, u64)>, usize> = HashMap::new();
    let mut out: Vec<Group> = Vec::new();
    for (k, (p, entries)) in terms.iter().enumerate() {
        let lead = entries[0].2;
        let key: Vec<(usize, usize, u64)> = entries.iter().map(|&(i, j, v)| (i, j, (v / lead).to_bits())).collect();
        match index.get(&key) {
            Some(&g) => {
                let s = lead / terms[out[g].term].1[0].2;
                out[g].members.push((*p, s));
            }
            None => {
                index.insert(key, out.len());
                out.push(Group {
                    term: k,
                    members: vec![(*p, 1.0)],
                });
            }
        }
    }
    out
}

fn trace_rb(rs: &[f64], d: usize, entries: &SymEntries) -> f64 {
    entries
        .iter()
        .map(|&(i, j, v)| if i == j { v * rs[i * d + i] } else { 2.0 * v * rs[i * d + j] })
        .sum()
}

/// A problem in real parameters `z`: maximise
/// `lin·z + c + Σ w ln a(z) + Σ w ln det L(z)` over `G_b(z) ≻ 0`, `s_l(z) > 0`.
#[derive(Clone, Debug)]
pub(crate) struct Compiled {
    pub n: usize,
    pub lin: Vec<f64>,
    pub lin_c: f64,
    pub logs: Vec<(f64, Affine)>,
    /// Objective log-determinants with the block weight folded in.
    pub logdets: Vec<(f64, SymBlock)>,
    /// Constraint blocks with their barrier weights.
    pub cones: Vec<(f64, SymBlock)>,
    pub ineqs: Vec<Affine>,
}

pub(crate) struct Eval {
    pub phi: f64,
    pub grad: Vec<f64>,
    pub hess: Option<RealMatrix>,
}

impl Compiled {
    /// Barrier degree: total cone dimension.
    pub fn degree(&self) -> f64 {
        self.cones.iter().map(|(w, b)| w * b.dim as f64).sum::<f64>() + self.ineqs.len() as f64
    }

    /// Objective value, `None` outside its domain.
    pub fn objective(&self, z: &[f64]) -> Option<f64> {
        let mut f = self.lin_c + self.lin.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        for (w, a) in &self.logs {
            let v = a.eval(z);
            if !(v > 0.0) {
                return None;
            }
            f += w * v.ln();
        }
        for (w, b) in &self.logdets {
            f += w * b.logdet(z)?;
        }
        Some(f)
    }

    /// Barrier log-sum `Σ w ln det G_b + Σ ln s_l`.
    pub fn barrier_sum(&self, z: &[f64]) -> Option<f64> {
        let mut acc = 0.0;
        for a in &self.ineqs {
            let v = a.eval(z);
            if !(v > 0.0) {
                return None;
            }
            acc += v.ln();
        }
        for (w, b) in &self.cones {
            acc += w * b.logdet(z)?;
        }
        Some(acc)
    }

    /// `φ_t(z) = -f0(z) - (1/t)·barrier(z)`.
    pub fn phi(&self, z: &[f64], t: f64) -> Option<f64> {
        let f = self.objective(z)?;
        let b = self.barrier_sum(z)?;
        let phi = -f - b / t;
        phi.is_finite().then_some(phi)
    }

    /// Value, gradient and optionally Hessian of `φ_t`.
    pub fn eval(&self, z: &[f64], t: f64, with_hess: bool) -> Option<Eval> {
        let n = self.n;
        let mut grad: Vec<f64> = self.lin.iter().map(|a| -a).collect();
        let mut hess = with_hess.then(|| RealMatrix::zeros(n));
        let mut f = self.lin_c + self.lin.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        let mut bsum = 0.0;

        let scalar_log = |coef: f64, a: &Affine, hess: &mut Option<RealMatrix>, grad: &mut [f64]| -> Option<f64> {
            let v = a.eval(z);
            if !(v > 0.0) {
                return None;
            }
            for &(p, ap) in &a.a {
                grad[p] -= coef * ap / v;
            }
            if let Some(h) = hess.as_mut() {
                let s = coef / (v * v);
                for &(p, ap) in &a.a {
                    for &(q, aq) in &a.a {
                        h.add_to(p, q, s * ap * aq);
                    }
                }
            }
            Some(v.ln())
        };
        for (w, a) in &self.logs {
            f += w * scalar_log(*w, a, &mut hess, &mut grad)?;
        }
        for a in &self.ineqs {
            bsum += scalar_log(1.0 / t, a, &mut hess, &mut grad)?;
        }
        for (w, b) in &self.logdets {
            f += w * b.accumulate(z, *w, &mut grad, hess.as_mut())?;
        }
        for (w, b) in &self.cones {
            bsum += w * b.accumulate(z, w / t, &mut grad, hess.as_mut())?;
        }
        let phi = -f - bsum / t;
        phi.is_finite().then_some(Eval { phi, grad, hess })
    }

    /// Reparameterises `x = x0 + Σ_k z_k basis_k`.
    pub fn substitute(&self, x0: &[f64], basis: &[Vec<f64>]) -> Self {
        let lin = basis
            .iter()
            .map(|col| self.lin.iter().zip(col).map(|(a, b)| a * b).sum())
            .collect();
        let lin_c = self.lin_c + self.lin.iter().zip(x0).map(|(a, b)| a * b).sum::<f64>();
        Self {
            n: basis.len(),
            lin,
            lin_c,
            logs: self.logs.iter().map(|(w, a)| (*w, a.substitute(x0, basis))).collect(),
            logdets: self.logdets.iter().map(|(w, b)| (*w, b.substitute(x0, basis))).collect(),
            cones: self.cones.iter().map(|(w, b)| (*w, b.substitute(x0, basis))).collect(),
            ineqs: self.ineqs.iter().map(|a| a.substitute(x0, basis)).collect(),
        }
    }

    /// Phase I problem in `(z, s)`: maximise `-s` subject to every cone,
    /// inequality and objective-domain constraint shifted by `s`, inside
    /// the box `|z_p| <= bound`.
    pub fn phase_one(&self, bound: f64) -> Self {
        let s = self.n;
        let mut cones: Vec<(f64, SymBlock)> = self
            .cones
            .iter()
            .map(|(w, b)| (*w, b.with_identity_param(s)))
            .collect();
        // Objective log-determinants only need a positive definite argument.
        cones.extend(self.logdets.iter().map(|(_, b)| (1.0, b.with_identity_param(s))));
        let mut ineqs: Vec<Affine> = self.ineqs.clone();
        ineqs.extend(self.logs.iter().map(|(_, a)| a.clone()));
        for a in &mut ineqs {
            a.a.push((s, 1.0));
        }
        // The box keeps the analytic centre of the phase I barrier finite
        // when the feasible set is unbounded.
        for p in 0..s {
            ineqs.push(Affine {
                c: bound,
                a: vec![(p, 1.0)],
            });
            ineqs.push(Affine {
                c: bound,
                a: vec![(p, -1.0)],
            });
        }
        let mut lin = vec![0.0; s + 1];
        lin[s] = -1.0;
        Self {
            n: s + 1,
            lin,
            lin_c: 0.0,
            logs: Vec::new(),
            logdets: Vec::new(),
            cones,
            ineqs,
        }
    }

    /// A slack that makes every shifted constraint of [`Self::phase_one`]
    /// strictly satisfied at `z`.
    pub fn phase_one_start(&self, z: &[f64]) -> f64 {
        let mut s: f64 = 0.0;
        for (_, b) in self.cones.iter().chain(&self.logdets) {
            let g = b.assemble(z);
            // -λ_min(G) ≤ ||G||_F
            s = s.max(g.dot(&g).sqrt());
        }
        for a in self.ineqs.iter().chain(self.logs.iter().map(|(_, a)| a)) {
            s = s.max(-a.eval(z));
        }
        s + 1.0
    }
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

