use super::expr::{Field, MatrixExpr, ScalarExpr};
use super::layout::{Var, VarKind, VariableLayout};
use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    /// `expr >= 0`
    NonNeg,
    /// `expr = 0`
    Zero,
}

/// Concave objective: linear part plus positively weighted logs and
/// log-determinants of affine expressions.
#[derive(Clone, Debug, Default)]
pub struct Objective {
    pub(crate) linear: ScalarExpr,
    pub(crate) logs: Vec<(f64, ScalarExpr)>,
    pub(crate) logdets: Vec<(f64, MatrixExpr)>,
}

/// Maximisation problem over a [`VariableLayout`].
#[derive(Clone, Debug)]
pub struct LmiProblem {
    pub(crate) layout: VariableLayout,
    pub(crate) objective: Objective,
    pub(crate) lmis: Vec<MatrixExpr>,
    pub(crate) linear: Vec<(ScalarExpr, Relation)>,
}

impl LmiProblem {
    pub fn new(layout: VariableLayout) -> Self {
        Self {
            layout,
            objective: Objective::default(),
            lmis: Vec::new(),
            linear: Vec::new(),
        }
    }

    pub fn layout(&self) -> &VariableLayout {
        &self.layout
    }

    /// Adds `expr` to the objective.
    pub fn maximize_linear(&mut self, expr: ScalarExpr) -> &mut Self {
        let lin = &mut self.objective.linear;
        lin.constant += expr.constant;
        lin.coeffs.extend(expr.coeffs);
        self
    }

    /// Adds `weight * ln(expr)` to the objective.
    pub fn add_log(&mut self, weight: f64, expr: ScalarExpr) -> &mut Self {
        self.objective.logs.push((weight, expr));
        self
    }

    /// Adds `weight * ln det(expr)` to the objective.
    pub fn add_logdet(&mut self, weight: f64, expr: MatrixExpr) -> &mut Self {
        self.objective.logdets.push((weight, expr));
        self
    }

    /// Requires `expr ⪰ 0`.
    pub fn add_lmi(&mut self, expr: MatrixExpr) -> &mut Self {
        self.lmis.push(expr);
        self
    }

    /// Requires `expr >= 0`.
    pub fn add_nonneg(&mut self, expr: ScalarExpr) -> &mut Self {
        self.linear.push((expr, Relation::NonNeg));
        self
    }

    /// Requires `expr = 0`.
    pub fn add_zero(&mut self, expr: ScalarExpr) -> &mut Self {
        self.linear.push((expr, Relation::Zero));
        self
    }

    pub fn lmis(&self) -> &[MatrixExpr] {
        &self.lmis
    }

    pub fn linear_constraints(&self) -> &[(ScalarExpr, Relation)] {
        &self.linear
    }

    /// Objective value at `x`; `None` outside the objective's domain.
    pub fn objective_value(&self, x: &[f64]) -> Option<f64> {
        let mut f = self.objective.linear.eval(x);
        for (w, e) in &self.objective.logs {
            let a = e.eval(x);
            if !(a > 0.0) {
                return None;
            }
            f += w * a.ln();
        }
        for (w, e) in &self.objective.logdets {
            f += w * e.eval_hermitian(x).logdet().ok()?;
        }
        Some(f)
    }

    /// Largest violation of any constraint at `x` (0 when feasible):
    /// negative minimum eigenvalues of LMIs and variable cones, negative
    /// inequality slacks, absolute equality residuals.
    pub fn max_violation(&self, x: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for m in self.all_lmis() {
            let lo = m.eval_hermitian(x).min_eigenvalue()?;
            worst = worst.max(-lo);
        }
        for (e, rel) in self.all_linear() {
            let v = e.eval(x);
            worst = worst.max(match rel {
                Relation::NonNeg => -v,
                Relation::Zero => v.abs(),
            });
        }
        Ok(worst)
    }

    /// User LMIs plus the implicit `X ⪰ 0` of PSD variables.
    pub(crate) fn all_lmis(&self) -> Vec<MatrixExpr> {
        let mut out = self.lmis.clone();
        for i in 0..self.layout.vars().len() {
            let v = self.layout.handle(i);
            if let VarKind::HermitianPsd(n) = v.kind {
                out.push(MatrixExpr::new(n).plus_var_block(v, 0, 1.0));
            }
        }
        out
    }

    /// User linear constraints plus the implicit `x >= 0` of nonnegative
    /// scalars.
    pub(crate) fn all_linear(&self) -> Vec<(ScalarExpr, Relation)> {
        let mut out = self.linear.clone();
        for i in 0..self.layout.vars().len() {
            let v = self.layout.handle(i);
            if v.kind == VarKind::NonNeg {
                out.push((ScalarExpr::var(v), Relation::NonNeg));
            }
        }
        out
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let check_scalar = |e: &ScalarExpr| -> Result<()> {
            for &(p, a) in &e.coeffs {
                self.layout.check_param(p)?;
                if !a.is_finite() {
                    return Err(Error::Problem(format!("non-finite coefficient {a}")));
                }
            }
            if !e.constant.is_finite() {
                return Err(Error::Problem("non-finite constant".into()));
            }
            Ok(())
        };
        let check_matrix = |m: &MatrixExpr| -> Result<()> {
            let dims_ok = m.constant.rows() == m.dim && m.constant.cols() == m.dim;
            if !dims_ok {
                return Err(Error::Problem(format!(
                    "constant of a {}-dimensional expression is {}x{}",
                    m.dim,
                    m.constant.rows(),
                    m.constant.cols()
                )));
            }
            let mut mats = vec![&m.constant];
            for (p, b) in &m.terms {
                self.layout.check_param(*p)?;
                if (b.rows(), b.cols()) != (m.dim, m.dim) {
                    return Err(Error::Problem(format!(
                        "coefficient of parameter {p} is {}x{}, expected {}x{}",
                        b.rows(),
                        b.cols(),
                        m.dim,
                        m.dim
                    )));
                }
                mats.push(b);
            }
            for b in mats {
                let scale = b.frobenius_norm();
                if !scale.is_finite() {
                    return Err(Error::Problem("non-finite matrix coefficient".into()));
                }
                if b.asymmetry() > 1e-12 * scale.max(1.0) {
                    return Err(Error::Problem("matrix coefficient is not Hermitian".into()));
                }
                if m.field == Field::Real && b.as_slice().iter().any(|z| z.im.abs() > 1e-14 * scale.max(1.0)) {
                    return Err(Error::Problem("real-field expression has imaginary entries".into()));
                }
            }
            Ok(())
        };
        check_scalar(&self.objective.linear)?;
        for (w, e) in &self.objective.logs {
            if !(*w > 0.0) {
                return Err(Error::Problem(format!("log term weight {w} must be positive")));
            }
            check_scalar(e)?;
        }
        for (w, m) in &self.objective.logdets {
            if !(*w > 0.0) {
                return Err(Error::Problem(format!("logdet term weight {w} must be positive")));
            }
            check_matrix(m)?;
        }
        for m in &self.lmis {
            check_matrix(m)?;
        }
        for (e, _) in &self.linear {
            check_scalar(e)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Stop when (barrier degree)/t falls below this.
    pub gap_tol: f64,
    /// Stop Newton when decrement²/2 falls below this.
    pub newton_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub t0: f64,
    pub t_factor: f64,
    /// Strictly feasible starting point; phase I runs when absent or
    /// not strictly feasible.
    pub initial: Option<Vec<f64>>,
    /// Phase I stops once its slack reaches `-phase1_margin`.
    pub phase1_margin: f64,
    /// Phase I minima above this certify infeasibility.
    pub infeasible_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-7,
            newton_tol: 1e-10,
            max_outer: 60,
            max_inner: 100,
            t0: 1.0,
            t_factor: 10.0,
            initial: None,
            phase1_margin: 1e-6,
            infeasible_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Full parameter vector (the phase I point when infeasible).
    pub x: Vec<f64>,
    /// Objective value; NaN when infeasible.
    pub objective: f64,
    /// Barrier parameter at exit.
    pub t: f64,
    pub newton_iters: usize,
    /// Objective at the end of every barrier stage.
    pub stage_objectives: Vec<f64>,
    /// Minimised phase I slack, when phase I ran.
    pub phase1_slack: Option<f64>,
    layout: VariableLayout,
}

impl SolveResult {
    pub(crate) fn new(
        status: SolveStatus,
        x: Vec<f64>,
        objective: f64,
        t: f64,
        newton_iters: usize,
        stage_objectives: Vec<f64>,
        phase1_slack: Option<f64>,
        layout: VariableLayout,
    ) -> Self {
        Self {
            status,
            x,
            objective,
            t,
            newton_iters,
            stage_objectives,
            phase1_slack,
            layout,
        }
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.layout.scalar(&self.x, v)
    }

    pub fn hermitian(&self, v: Var) -> HermitianMatrix {
        self.layout.hermitian(&self.x, v)
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}
