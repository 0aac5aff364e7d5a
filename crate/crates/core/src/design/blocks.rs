use super::AuxiliaryBlock;
use crate::channel::{ChannelSet, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::{kronecker, vec, ComplexMatrix, HermitianMatrix};
use crate::solver::{
    solve, LmiProblem, MatrixExpr, ScalarExpr, SolveOptions, SolveResult, SolveStatus, Var, VarKind, VariableLayout,
};

/// `[[a, a x0], [x0^H a, x0^H a x0]]`.
fn lift(a: &ComplexMatrix, x0: &ComplexMatrix) -> ComplexMatrix {
    let ax = a.matmul(x0);
    let xax = x0.adjoint().matmul(&ax);
    ComplexMatrix::from_blocks(&[&[a, &ax], &[&ax.adjoint(), &xax]])
}

/// Constraint `bound >= (x0 + d)^H A (x0 + d)` for all `||d|| <= delta`,
/// with `A = A_c + Σ f_v(V)` affine in the listed Hermitian variables.
///
/// For `delta > 0` this is the S-lemma LMI
/// `[[λI - A, -A x0], [-x0^H A, bound - x0^H A x0 - λ δ²]] ⪰ 0`;
/// at zero radius it is the scalar inequality at the nominal point.
struct RobustBound<'a> {
    x0: &'a ComplexMatrix,
    delta: f64,
    bound: Var,
    lambda: Option<Var>,
}

type LinearMap<'a> = (Var, &'a dyn Fn(&ComplexMatrix) -> ComplexMatrix);

impl RobustBound<'_> {
    fn add_to(&self, p: &mut LmiProblem, a_const: Option<&ComplexMatrix>, maps: &[LinearMap<'_>]) {
        let k = self.x0.rows();
        match self.lambda {
            Some(lambda) => {
                let mut e = MatrixExpr::new(k + 1);
                if let Some(a) = a_const {
                    e = e.plus_constant(&lift(a, self.x0).scale_real(-1.0));
                }
                for (v, f) in maps {
                    e = e.plus_map(*v, |b| lift(&f(b), self.x0).scale_real(-1.0));
                }
                let mut d = vec![1.0; k + 1];
                d[k] = -self.delta * self.delta;
                let mut corner = ComplexMatrix::zeros(k + 1, k + 1);
                corner[(k, k)] = crate::linalg::ONE;
                p.add_lmi(
                    e.plus_scalar(lambda, &ComplexMatrix::real_diag(&d))
                        .plus_scalar(self.bound, &corner),
                );
            }
            None => {
                let mut s = ScalarExpr::var(self.bound);
                if let Some(a) = a_const {
                    s = s.plus_constant(-a.quad_form(self.x0).re);
                }
                for (v, f) in maps {
                    s = s.plus_map(*v, |b| -f(b).quad_form(self.x0).re);
                }
                p.add_nonneg(s);
            }
        }
    }
}

/// A strictly feasible `(bound, λ)` for a fixed `A ⪰ 0`.
fn robust_bound_start(a: &HermitianMatrix, x0: &ComplexMatrix, delta: f64) -> Result<(f64, f64)> {
    let nominal = a.quad(x0);
    if delta == 0.0 {
        return Ok((nominal + 1.0, 0.0));
    }
    let lambda = a.frobenius_norm() + 1.0;
    let shifted = HermitianMatrix::scaled_identity(a.dim(), lambda).sub(a);
    let y = a.matmul(x0);
    let z = shifted.cholesky()?.solve(&y);
    let schur = y.adjoint().matmul(&z)[(0, 0)].re;
    Ok((nominal + lambda * delta * delta + schur + 1.0, lambda))
}

#[derive(Clone, Copy, Debug)]
pub struct Block1Vars {
    pub q: Var,
    pub omega: Var,
    pub alpha: Var,
    pub beta: Var,
    pub gamma: Var,
    pub m: Var,
    pub lambda_beta: Option<Var>,
    pub lambda_gamma: Option<Var>,
    pub lambda_m: Option<Var>,
}

/// The covariance block with `(a1, a2, W_E)` held fixed.
pub struct Block1 {
    pub problem: LmiProblem,
    pub vars: Block1Vars,
}

impl Block1 {
    /// Parameter vector for a given iterate (used as a warm start).
    pub fn point(&self, q: &HermitianMatrix, omega: &HermitianMatrix, aux: &AuxiliaryBlock) -> Vec<f64> {
        let layout = self.problem.layout();
        let v = &self.vars;
        let mut x = vec![0.0; layout.n_params()];
        layout.set_hermitian(&mut x, v.q, q);
        layout.set_hermitian(&mut x, v.omega, omega);
        layout.set_scalar(&mut x, v.alpha, aux.alpha);
        layout.set_scalar(&mut x, v.beta, aux.beta);
        layout.set_scalar(&mut x, v.gamma, aux.gamma);
        layout.set_hermitian(&mut x, v.m, &aux.m);
        for (var, val) in [
            (v.lambda_beta, aux.lambda_beta),
            (v.lambda_gamma, aux.lambda_gamma),
            (v.lambda_m, aux.lambda_m),
        ] {
            if let Some(var) = var {
                layout.set_scalar(&mut x, var, val);
            }
        }
        x
    }

    /// Splits a solution into `(q, omega)` and the updated auxiliaries;
    /// `a1`, `a2`, `W_E` are copied from `fixed`.
    pub fn read(&self, r: &SolveResult, fixed: &AuxiliaryBlock) -> (HermitianMatrix, HermitianMatrix, AuxiliaryBlock) {
        let v = &self.vars;
        let opt = |var: Option<Var>| var.map_or(0.0, |x| r.scalar(x));
        let aux = AuxiliaryBlock {
            a1: fixed.a1,
            a2: fixed.a2,
            w_e: fixed.w_e.clone(),
            alpha: r.scalar(v.alpha),
            beta: r.scalar(v.beta),
            gamma: r.scalar(v.gamma),
            m: r.hermitian(v.m),
            lambda_beta: opt(v.lambda_beta),
            lambda_gamma: opt(v.lambda_gamma),
            lambda_m: opt(v.lambda_m),
        };
        (r.hermitian(v.q), r.hermitian(v.omega), aux)
    }
}

fn check_dims(channels: &ChannelSet, config: &SystemConfig) -> Result<()> {
    config.validate()?;
    channels.check_shapes(config)
}

/// Builds the block-1 problem: maximise the objective over
/// `(Q, Ω, α, β, γ, M, λ_β, λ_γ, λ_M)` for fixed `(a1, a2, W_E)`.
/// The objective value equals the full BCD objective.
pub fn build_block1_problem(
    a1: f64,
    a2: f64,
    w_e: &HermitianMatrix,
    channels: &ChannelSet,
    config: &SystemConfig,
) -> Result<Block1> {
    check_dims(channels, config)?;
    let (nt, ne) = (config.n_t, config.n_e);
    if w_e.dim() != ne {
        return Err(Error::Dimension(format!("W_E is {0}x{0}, expected {ne}x{ne}", w_e.dim())));
    }
    if !(a1 > 0.0 && a2 > 0.0) {
        return Err(Error::Domain("a1 and a2 must be positive".into()));
    }
    let pt = config.p_t();
    let g2 = channels.g.norm_sqr();
    let gb2 = channels.g_b.norm().powi(2);
    let h = &channels.h_b;
    let (d_l, d_h, d_g) = (config.delta_hl, config.delta_he, config.delta_ge);

    let mut layout = VariableLayout::new();
    let q = layout.add("q", VarKind::HermitianPsd(nt));
    let omega = layout.add("omega", VarKind::HermitianPsd(nt));
    let alpha = layout.add("alpha", VarKind::NonNeg);
    let beta = layout.add("beta", VarKind::Free);
    let gamma = layout.add("gamma", VarKind::Free);
    let m = layout.add("m", VarKind::HermitianFree(ne));
    let lambda_beta = (d_h > 0.0).then(|| layout.add("lambda_beta", VarKind::NonNeg));
    let lambda_gamma = (d_g > 0.0).then(|| layout.add("lambda_gamma", VarKind::NonNeg));
    let lambda_m = (d_h > 0.0).then(|| layout.add("lambda_m", VarKind::NonNeg));
    let vars = Block1Vars {
        q,
        omega,
        alpha,
        beta,
        gamma,
        m,
        lambda_beta,
        lambda_gamma,
        lambda_m,
    };

    let mut p = LmiProblem::new(layout);
    let constant = -a1 * (pt * g2 + 1.0) + a1.ln() + 1.0 - a2 + a2.ln() + 1.0 + w_e.logdet()? - w_e.trace_re();
    p.add_log(
        1.0,
        ScalarExpr::constant(1.0 + pt * g2)
            .plus_quad(q, h, 1.0)
            .plus_quad(omega, h, 1.0),
    );
    p.add_log(1.0, ScalarExpr::constant(1.0 + pt * gb2).plus_var(alpha, 1.0));
    p.add_logdet(1.0, MatrixExpr::new(ne).plus_identity(1.0).plus_var_block(m, 0, 1.0));
    p.maximize_linear(
        ScalarExpr::constant(constant)
            .plus_quad(omega, h, -a1)
            .plus_var(alpha, -a2)
            .plus_var(beta, -1.0)
            .plus_var(gamma, -pt),
    );

    // Self-interference: α I ⪰ δ²(Q + Ω).
    if d_l > 0.0 {
        p.add_lmi(
            MatrixExpr::new(nt)
                .plus_scalar_identity(alpha, 1.0)
                .plus_var_block(q, 0, -d_l * d_l)
                .plus_var_block(omega, 0, -d_l * d_l),
        );
    }

    // β bounds tr(W H_E (Q+Ω) H_E^H) over the ΔH_E ball.
    let x0 = vec(&channels.h_e_bar);
    let w = w_e.as_matrix();
    let kron_w = |b: &ComplexMatrix| kronecker(&b.transpose(), w);
    RobustBound {
        x0: &x0,
        delta: d_h,
        bound: beta,
        lambda: lambda_beta,
    }
    .add_to(&mut p, None, &[(q, &kron_w), (omega, &kron_w)]);

    // γ bounds g_E^H W g_E over the Δg_E ball.
    RobustBound {
        x0: &channels.g_e_bar,
        delta: d_g,
        bound: gamma,
        lambda: lambda_gamma,
    }
    .add_to(&mut p, Some(w), &[]);

    // M ⪯ H_E Ω H_E^H over the ΔH_E ball.
    let hb = &channels.h_e_bar;
    match lambda_m {
        Some(lm) => {
            let dim = ne + nt;
            let mut diag = vec![-1.0; ne];
            diag.extend(std::iter::repeat(1.0 / (d_h * d_h)).take(nt));
            p.add_lmi(
                MatrixExpr::new(dim)
                    .plus_map(omega, |b| {
                        let hbm = hb.matmul(b);
                        let top = hbm.matmul(&hb.adjoint());
                        ComplexMatrix::from_blocks(&[&[&top, &hbm], &[&hbm.adjoint(), b]])
                    })
                    .plus_var_block(m, 0, -1.0)
                    .plus_scalar(lm, &ComplexMatrix::real_diag(&diag)),
            );
        }
        None => {
            p.add_lmi(
                MatrixExpr::new(ne)
                    .plus_map(omega, |b| hb.matmul(b).matmul(&hb.adjoint()))
                    .plus_var_block(m, 0, -1.0),
            );
        }
    }

    p.add_nonneg(
        ScalarExpr::constant(config.p_tot())
            .plus_trace(q, -1.0)
            .plus_trace(omega, -1.0),
    );
    Ok(Block1 { problem: p, vars })
}

/// `a1 = 1/(P_t|g|² + h^H Ω h + 1)`, `a2 = 1/(1 + α)`.
pub fn block2_closed_forms(
    omega: &HermitianMatrix,
    alpha: f64,
    channels: &ChannelSet,
    config: &SystemConfig,
) -> (f64, f64) {
    let a1 = 1.0 / (config.p_t() * channels.g.norm_sqr() + omega.quad(&channels.h_b) + 1.0);
    let a2 = 1.0 / (1.0 + alpha);
    (a1, a2)
}

#[derive(Clone, Debug)]
pub struct Block2Solution {
    pub a1: f64,
    pub a2: f64,
    pub w_e: HermitianMatrix,
    pub beta: f64,
    pub gamma: f64,
    pub lambda_beta: f64,
    pub lambda_gamma: f64,
    pub status: SolveStatus,
}

/// Weight block: closed-form `a1`, `a2`, then the max-det problem
/// `max ln det W - tr W - β - P_t γ` over `(W, β, γ, λ_β, λ_γ)` with
/// `(Q, Ω)` fixed. `w_start` seeds the strictly feasible starting point.
pub fn solve_block2(
    q: &HermitianMatrix,
    omega: &HermitianMatrix,
    alpha: f64,
    w_start: Option<&HermitianMatrix>,
    channels: &ChannelSet,
    config: &SystemConfig,
    opts: &SolveOptions,
) -> Result<Block2Solution> {
    check_dims(channels, config)?;
    if !(alpha >= 0.0) {
        return Err(Error::Domain(format!("alpha must be >= 0, got {alpha}")));
    }
    let (a1, a2) = block2_closed_forms(omega, alpha, channels, config);
    let (nt, ne) = (config.n_t, config.n_e);
    if q.dim() != nt || omega.dim() != nt {
        return Err(Error::Dimension("q and omega must be n_t x n_t".into()));
    }
    let pt = config.p_t();
    let (d_h, d_g) = (config.delta_he, config.delta_ge);
    let s = q.add(omega);
    let st = s.transpose();
    let x0 = vec(&channels.h_e_bar);

    let mut layout = VariableLayout::new();
    let w = layout.add("w", VarKind::HermitianPsd(ne));
    let beta = layout.add("beta", VarKind::Free);
    let gamma = layout.add("gamma", VarKind::Free);
    let lambda_beta = (d_h > 0.0).then(|| layout.add("lambda_beta", VarKind::NonNeg));
    let lambda_gamma = (d_g > 0.0).then(|| layout.add("lambda_gamma", VarKind::NonNeg));

    let mut p = LmiProblem::new(layout);
    p.add_logdet(1.0, MatrixExpr::new(ne).plus_var_block(w, 0, 1.0));
    p.maximize_linear(
        ScalarExpr::constant(0.0)
            .plus_trace(w, -1.0)
            .plus_var(beta, -1.0)
            .plus_var(gamma, -pt),
    );
    let kron_s = |b: &ComplexMatrix| kronecker(&st, b);
    RobustBound {
        x0: &x0,
        delta: d_h,
        bound: beta,
        lambda: lambda_beta,
    }
    .add_to(&mut p, None, &[(w, &kron_s)]);
    let ident = |b: &ComplexMatrix| b.clone();
    RobustBound {
        x0: &channels.g_e_bar,
        delta: d_g,
        bound: gamma,
        lambda: lambda_gamma,
    }
    .add_to(&mut p, None, &[(w, &ident)]);

    // Strictly feasible start built around the previous W.
    let w0 = match w_start {
        Some(w) if w.dim() == ne && w.min_eigenvalue()? > 0.0 => w.clone(),
        _ => HermitianMatrix::identity(ne),
    };
    let a_beta = HermitianMatrix::symmetrize(&kronecker(&st, w0.as_matrix()));
    let (b0, lb0) = robust_bound_start(&a_beta, &x0, d_h)?;
    let (g0, lg0) = robust_bound_start(&w0, &channels.g_e_bar, d_g)?;
    let layout = p.layout();
    let mut start = vec![0.0; layout.n_params()];
    layout.set_hermitian(&mut start, w, &w0);
    layout.set_scalar(&mut start, beta, b0);
    layout.set_scalar(&mut start, gamma, g0);
    if let Some(v) = lambda_beta {
        layout.set_scalar(&mut start, v, lb0);
    }
    if let Some(v) = lambda_gamma {
        layout.set_scalar(&mut start, v, lg0);
    }
    let opts = SolveOptions {
        initial: Some(start),
        ..opts.clone()
    };
    let r = solve(&p, &opts)?;
    if r.status == SolveStatus::Infeasible {
        return Err(Error::Solver("weight block reported infeasible".into()));
    }
    Ok(Block2Solution {
        a1,
        a2,
        w_e: r.hermitian(w),
        beta: r.scalar(beta),
        gamma: r.scalar(gamma),
        lambda_beta: lambda_beta.map_or(0.0, |v| r.scalar(v)),
        lambda_gamma: lambda_gamma.map_or(0.0, |v| r.scalar(v)),
        status: r.status,
    })
}
