//! Brute-force and sampling oracles, runnable as one suite.
//!
//! Every check returns an [`OracleReport`] holding the largest violation
//! seen (negative values are slack) so tolerances can be tuned from the
//! output even when everything passes.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baseline::projection_design;
use crate::channel::{complex_gaussian_matrix, sample_ball, sample_channels, ChannelSet, Realization, SystemConfig};
use crate::design::{
    bcd_optimize, evaluate_f, extract_rank1, robust_design, AuxiliaryBlock, BcdOptions,
    TransmitDesign,
};
use crate::error::Result;
use crate::linalg::{
    embed_real, kronecker, logdet_psd, null_space, vec, ComplexMatrix, HermitianMatrix, C64, I,
};
use crate::secrecy::{
    eta1, eta2_min, realized_rate, sampled_worst_rate, theta1_star, theta2_star, worst_case_rate,
};
use crate::solver::{
    barrier_gradient, barrier_value, phase_one_point, solve, LmiProblem, MatrixExpr, ScalarExpr, SolveOptions,
    VarKind, VariableLayout,
};

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub name: String,
    pub checks: usize,
    /// Largest violation; the check passes while this stays at or below
    /// `tolerance`.
    pub max_violation: f64,
    pub tolerance: f64,
    /// Accuracy the underlying solves are run to, reported alongside.
    pub solver_tolerance: f64,
    /// Description of the inputs behind `max_violation`.
    pub worst_case: String,
}

impl OracleReport {
    pub fn new(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            checks: 0,
            max_violation: f64::NEG_INFINITY,
            tolerance,
            solver_tolerance: SolveOptions::default().gap_tol,
            worst_case: String::new(),
        }
    }

    /// Records one check; `case` is only rendered for a new maximum.
    pub fn record(&mut self, violation: f64, case: impl FnOnce() -> String) {
        self.checks += 1;
        let v = if violation.is_nan() { f64::INFINITY } else { violation };
        if v > self.max_violation {
            self.max_violation = v;
            self.worst_case = case();
        }
    }

    pub fn merge(&mut self, other: OracleReport) {
        self.checks += other.checks;
        if other.max_violation > self.max_violation {
            self.max_violation = other.max_violation;
            self.worst_case = other.worst_case;
        }
    }

    pub fn passed(&self) -> bool {
        self.checks > 0 && self.max_violation <= self.tolerance
    }

    pub fn summary(&self) -> String {
        format!(
            "{} {}: {} checks, max violation {:.3e} (tolerance {:.1e}, solver {:.1e}){}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.checks,
            self.max_violation,
            self.tolerance,
            self.solver_tolerance,
            if self.passed() {
                String::new()
            } else {
                format!("; worst case: {}", self.worst_case)
            }
        )
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_hermitian(r: &mut ChaCha8Rng, n: usize) -> HermitianMatrix {
    let a = complex_gaussian_matrix(r, n, n);
    HermitianMatrix::symmetrize(&(&a + &a.adjoint()))
}

fn random_pd(r: &mut ChaCha8Rng, n: usize) -> HermitianMatrix {
    let a = complex_gaussian_matrix(r, n, n);
    HermitianMatrix::symmetrize(&a.matmul(&a.adjoint())).add(&HermitianMatrix::scaled_identity(n, 0.1))
}

/// Uniform sample from the complex Frobenius ball of the given radius.
pub fn sample_ball_uniform(rows: usize, cols: usize, radius: f64, seed: u64) -> ComplexMatrix {
    sample_ball(&mut rng(seed), rows, cols, radius)
}

/// Kolmogorov–Smirnov distance of a sample from Uniform(0, 1).
pub fn ks_uniform(mut u: Vec<f64>) -> f64 {
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}

/// Uniform-ball sampling: norms stay inside, and `(||x||/r)^(2·dim)` is
/// uniform at the 5% Kolmogorov–Smirnov level.
pub fn check_ball_sampling(samples: usize, seed: u64) -> OracleReport {
    let mut rep = OracleReport::new("ball_sampling_ks", 0.0);
    let mut r = rng(seed);
    for (rows, cols, radius) in [(2, 3, 0.05), (2, 1, 0.1), (1, 1, 1.0)] {
        let dim = (2 * rows * cols) as f64;
        let mut u = Vec::with_capacity(samples);
        for _ in 0..samples {
            let x = sample_ball(&mut r, rows, cols, radius);
            let nrm = x.frobenius_norm();
            rep.record(nrm / radius - 1.0 - 1e-12, || format!("{rows}x{cols} radius {radius} norm {nrm}"));
            u.push((nrm / radius).powf(dim));
        }
        let d = ks_uniform(u);
        let critical = 1.358 / (samples as f64).sqrt();
        rep.record(d - critical, || format!("{rows}x{cols}: KS distance {d:.4} vs {critical:.4}"));
    }
    let zero = sample_ball_uniform(2, 2, 0.0, seed);
    rep.record(zero.max_abs(), || "radius 0 gives a nonzero sample".into());
    let again = sample_ball_uniform(2, 3, 0.5, seed) == sample_ball_uniform(2, 3, 0.5, seed);
    rep.record(if again { -1.0 } else { 1.0 }, || "same seed, different sample".into());
    rep
}

/// CN(0, 1) moments of a sampled channel entry.
pub fn check_gaussian_moments(samples: usize, seed: u64) -> Result<OracleReport> {
    let mut rep = OracleReport::new("channel_entry_moments", 0.05);
    let config = SystemConfig::default();
    let mut var = 0.0;
    let mut mag = 0.0;
    for k in 0..samples {
        let ch = sample_channels(&config, seed.wrapping_add(k as u64))?;
        let z = ch.h_b[(0, 0)];
        var += z.norm_sqr();
        mag += z.norm();
    }
    let n = samples as f64;
    let var = var / n;
    let mag = mag / n;
    let want = PI.sqrt() / 2.0;
    rep.record((var - 1.0).abs(), || format!("variance {var}"));
    rep.record((mag - want).abs() / want, || format!("mean magnitude {mag} vs {want}"));
    Ok(rep)
}

/// Kronecker identities against dense products.
pub fn check_kronecker(seed: u64, cases: usize) -> OracleReport {
    let mut rep = OracleReport::new("kronecker_identities", 1e-12);
    let mut r = rng(seed);
    for _ in 0..cases {
        let a = complex_gaussian_matrix(&mut r, 2, 2);
        let b = complex_gaussian_matrix(&mut r, 2, 2);
        let c = complex_gaussian_matrix(&mut r, 2, 2);
        let d = complex_gaussian_matrix(&mut r, 2, 2);
        let x = complex_gaussian_matrix(&mut r, 2, 1);
        let y = complex_gaussian_matrix(&mut r, 2, 1);
        let lhs = kronecker(&a, &b).matmul(&kronecker(&x, &y));
        let rhs = kronecker(&a.matmul(&x), &b.matmul(&y));
        rep.record((&lhs - &rhs).max_abs() / rhs.max_abs().max(1.0), || "mixed product".into());

        let direct = a.matmul(&b).matmul(&c).matmul(&d).trace();
        let via = vec(&d.transpose())
            .transpose()
            .matmul(&kronecker(&c.transpose(), &a))
            .matmul(&vec(&b))[(0, 0)];
        rep.record((direct - via).norm() / direct.norm().max(1.0), || "trace identity".into());
    }
    rep
}

/// Eigen-reconstruction, log-det and real embedding checks.
pub fn check_hermitian_tools(seed: u64, cases: usize) -> Result<OracleReport> {
    let mut rep = OracleReport::new("hermitian_decompositions", 1e-10);
    let mut r = rng(seed);
    for _ in 0..cases {
        let a = random_hermitian(&mut r, 4);
        let e = a.eig()?;
        let res = (&e.reconstruct() - a.as_matrix()).max_abs() / a.max_abs();
        rep.record(res, || "eigen reconstruction".into());

        let p = random_pd(&mut r, 3);
        let ld = p.logdet()?;
        let prod: f64 = p.eig()?.values.iter().map(|v| v.ln()).sum();
        rep.record((ld - prod).abs() / ld.abs().max(1.0), || "logdet vs eigenvalues".into());
        let emb = embed_real(&p);
        let ld_real = emb.cholesky()?.logdet();
        rep.record((ld_real - 2.0 * logdet_psd(&p)?).abs() / ld.abs().max(1.0), || "embedded logdet".into());
    }
    let j = HermitianMatrix::new(ComplexMatrix::from_rows(&[vec![C64::new(0.0, 0.0), I], vec![-I, C64::new(0.0, 0.0)]])?)?;
    let emb = embed_real(&j);
    let as_complex = HermitianMatrix::new(ComplexMatrix::from_fn(4, 4, |i, k| C64::new(emb.get(i, k), 0.0)))?;
    let ev = as_complex.eig()?.values;
    for (got, want) in ev.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
        rep.record((got - want).abs(), || format!("embedding eigenvalues {ev:?}"));
    }
    Ok(rep)
}

/// `min t s.t. tI ⪰ A` against the largest eigenvalue.
pub fn check_lambda_max_sdp(matrices: usize, seed: u64) -> Result<OracleReport> {
    let mut rep = OracleReport::new("lambda_max_sdp", 1e-6);
    let mut r = rng(seed);
    for k in 0..matrices {
        let n = 1 + k % 6;
        let a = random_hermitian(&mut r, n);
        let mut layout = VariableLayout::new();
        let t = layout.add("t", VarKind::Free);
        let mut p = LmiProblem::new(layout);
        p.maximize_linear(ScalarExpr::constant(0.0).plus_var(t, -1.0));
        p.add_lmi(MatrixExpr::new(n).plus_scalar_identity(t, 1.0).plus_constant(&a.scale(-1.0)));
        let res = solve(&p, &SolveOptions::default())?;
        let want = a.max_eigenvalue()?;
        let got = res.scalar(t);
        rep.record((got - want).abs() / want.abs().max(1.0), || format!("n={n}: {got} vs {want}"));
    }
    Ok(rep)
}

/// `max ln det W - tr W` returns the identity.
pub fn check_logdet_trace(dims: &[usize]) -> Result<OracleReport> {
    let mut rep = OracleReport::new("logdet_trace_maximizer", 1e-6);
    for &n in dims {
        let mut layout = VariableLayout::new();
        let w = layout.add("w", VarKind::HermitianPsd(n));
        let mut p = LmiProblem::new(layout);
        p.add_logdet(1.0, MatrixExpr::new(n).plus_var_block(w, 0, 1.0));
        p.maximize_linear(ScalarExpr::constant(0.0).plus_trace(w, -1.0));
        let res = solve(&p, &SolveOptions::default())?;
        let dev = res.hermitian(w).sub(&HermitianMatrix::identity(n)).max_abs();
        rep.record(dev, || format!("n={n}"));
        rep.record((res.objective + n as f64).abs(), || format!("n={n}: objective {}", res.objective));
    }
    Ok(rep)
}

/// Random problem with a known strictly feasible point.
pub fn random_lmi_problem(seed: u64) -> (LmiProblem, Vec<f64>) {
    let mut g = rng(seed);
    let mut layout = VariableLayout::new();
    let x = layout.add("x", VarKind::HermitianPsd(2));
    let y = layout.add("y", VarKind::Free);
    let z = layout.add("z", VarKind::NonNeg);
    let mut point = vec![0.0; layout.n_params()];
    let x0 = random_pd(&mut g, 2);
    layout.set_hermitian(&mut point, x, &x0);
    layout.set_scalar(&mut point, y, 0.3);
    layout.set_scalar(&mut point, z, 0.7);

    let mut p = LmiProblem::new(layout);
    let h = random_hermitian(&mut g, 3);
    let v = complex_gaussian_matrix(&mut g, 2, 1);
    let a = complex_gaussian_matrix(&mut g, 3, 2);
    p.add_logdet(
        1.0,
        MatrixExpr::new(3)
            .plus_identity(1.0)
            .plus_map(x, |b| a.matmul(b).matmul(&a.adjoint())),
    );
    p.add_log(0.5, ScalarExpr::constant(1.0).plus_var(y, 1.0).plus_var(z, 1.0));
    p.maximize_linear(
        ScalarExpr::constant(0.0)
            .plus_trace(x, -1.0)
            .plus_quad(x, &v, -0.1)
            .plus_var(y, -1.0)
            .plus_var(z, -2.0),
    );
    let shift = h.max_eigenvalue().unwrap_or(0.0) + 2.0 * x0.max_eigenvalue().unwrap_or(0.0) + 1.0;
    p.add_lmi(
        MatrixExpr::new(3)
            .plus_identity(shift)
            .plus_constant(&h.scale(-1.0))
            .plus_scalar_identity(y, 1.0)
            .plus_map(x, |b| {
                let mut m = ComplexMatrix::zeros(3, 3);
                m.set_block(0, 0, &b.scale_real(-1.0));
                m
            }),
    );
    p.add_nonneg(ScalarExpr::constant(10.0).plus_trace(x, -1.0).plus_var(z, -1.0));
    (p, point)
}

/// Analytic barrier gradient against central differences.
pub fn check_barrier_gradient(problems: usize, seed: u64) -> OracleReport {
    let mut rep = OracleReport::new("barrier_gradient_fd", 1e-5);
    for k in 0..problems {
        let (p, x) = random_lmi_problem(seed.wrapping_add(k as u64));
        for &t in &[1.0, 37.0] {
            let Some(g) = barrier_gradient(&p, &x, t) else {
                rep.record(f64::INFINITY, || format!("problem {k}: start outside the domain"));
                continue;
            };
            for i in 0..x.len() {
                let step = 1e-6 * x[i].abs().max(1.0);
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += step;
                xm[i] -= step;
                let fd = match (barrier_value(&p, &xp, t), barrier_value(&p, &xm, t)) {
                    (Some(a), Some(b)) => (a - b) / (2.0 * step),
                    _ => f64::NAN,
                };
                let rel = (fd - g[i]).abs() / g[i].abs().max(1.0);
                rep.record(rel, || format!("problem {k}, t={t}, param {i}: {fd} vs {}", g[i]));
            }
        }
    }
    rep
}

/// Phase I finds an interior point of sets built around a known one.
pub fn check_phase_one(problems: usize, seed: u64) -> Result<OracleReport> {
    let mut rep = OracleReport::new("phase_one_interior", 0.0);
    for k in 0..problems {
        let (p, _) = random_lmi_problem(seed.wrapping_add(k as u64));
        let res = phase_one_point(&p)?;
        let inside = res.is_optimal() && barrier_value(&p, &res.x, 1.0).is_some();
        rep.record(if inside { -1.0 } else { 1.0 }, || format!("problem {k}: {:?}", res.status));
    }
    Ok(rep)
}

/// Term-by-term transcription of the BCD objective.
fn f_reference(q: &HermitianMatrix, omega: &HermitianMatrix, aux: &AuxiliaryBlock, ch: &ChannelSet, pt: f64) -> Result<f64> {
    let h = &ch.h_b;
    let hh = h.adjoint();
    let s = q.as_matrix() + omega.as_matrix();
    let hsh = hh.matmul(&s).matmul(h)[(0, 0)].re;
    let hoh = hh.matmul(omega.as_matrix()).matmul(h)[(0, 0)].re;
    let g2 = ch.g.norm_sqr();
    let gb2: f64 = (0..ch.g_b.rows()).map(|i| ch.g_b[(i, 0)].norm_sqr()).sum();
    let ne = aux.m.dim();
    let ipm = HermitianMatrix::new(&ComplexMatrix::identity(ne) + aux.m.as_matrix())?;
    let ld = |m: &HermitianMatrix| -> Result<f64> { Ok(m.eig()?.values.iter().map(|x| x.ln()).sum()) };
    let tr_w: f64 = (0..ne).map(|i| aux.w_e[(i, i)].re).sum();
    Ok((1.0 + pt * g2 + hsh).ln() - aux.a1 * (pt * g2 + hoh + 1.0) + aux.a1.ln() + 1.0 - aux.a2 * (1.0 + aux.alpha)
        + aux.a2.ln()
        + 1.0
        + (1.0 + pt * gb2 + aux.alpha).ln()
        + ld(&aux.w_e)?
        - tr_w
        - aux.beta
        - pt * aux.gamma
        + ld(&ipm)?)
}

/// `evaluate_f` and `eta1` against independent transcriptions.
pub fn check_objective_paths(seed: u64, cases: usize) -> Result<OracleReport> {
    let mut rep = OracleReport::new("objective_duplicate_paths", 1e-10);
    let config = SystemConfig::default();
    let mut r = rng(seed);
    for k in 0..cases {
        let ch = sample_channels(&config, seed.wrapping_add(k as u64))?;
        let aux = AuxiliaryBlock {
            a1: r.random_range(0.05..1.0),
            a2: r.random_range(0.05..1.0),
            w_e: random_pd(&mut r, 2),
            alpha: r.random_range(0.0..1.0),
            beta: r.random_range(0.0..3.0),
            gamma: r.random_range(0.0..0.1),
            m: random_pd(&mut r, 2).scale(0.1),
            lambda_beta: 0.0,
            lambda_gamma: 0.0,
            lambda_m: 0.0,
        };
        let q = random_pd(&mut r, 3);
        let omega = random_pd(&mut r, 3);
        let a = evaluate_f(&q, &omega, &aux, &ch, &config)?;
        let b = f_reference(&q, &omega, &aux, &ch, config.p_t())?;
        rep.record((a - b).abs() / b.abs().max(1.0), || format!("F, seed {k}: {a} vs {b}"));

        let d = TransmitDesign::from_beam(complex_gaussian_matrix(&mut r, 3, 1), omega.clone());
        let h = &ch.h_b;
        let num = h.adjoint().matmul(&d.v)[(0, 0)].norm_sqr();
        let den = config.p_t() * ch.g.norm_sqr() + h.adjoint().matmul(omega.as_matrix()).matmul(h)[(0, 0)].re + 1.0;
        let e = eta1(&d, &ch, &config);
        rep.record((e - num / den).abs() / (num / den).max(1.0), || format!("eta1, seed {k}"));
    }
    Ok(rep)
}

/// `η2^min` against the eigenvalues of the explicit Kronecker product.
pub fn check_eta2_kronecker(seed: u64, cases: usize) -> Result<OracleReport> {
    let mut rep = OracleReport::new("eta2_min_kronecker", 1e-9);
    let config = SystemConfig::default().with_epsilon(0.3);
    let mut r = rng(seed);
    for k in 0..cases {
        let ch = sample_channels(&config, seed.wrapping_add(k as u64))?;
        let d = TransmitDesign::from_beam(complex_gaussian_matrix(&mut r, 3, 1), random_pd(&mut r, 3));
        let rr = HermitianMatrix::outer(&ch.mrc()?);
        let s = d.q.add(&d.omega);
        let big = HermitianMatrix::symmetrize(&kronecker(&s.transpose(), rr.as_matrix()));
        let want = config.p_t() * ch.g_b.norm().powi(2) / (config.delta_hl.powi(2) * big.max_eigenvalue()? + 1.0);
        let got = eta2_min(&d, &ch, &config)?;
        rep.record((got - want).abs() / want, || format!("seed {k}: {got} vs {want}"));
    }
    Ok(rep)
}

/// Rank-one extraction keeps `h^H q h`, never adds power, and
/// `q - q̂ ⪰ 0`.
pub fn check_extraction(seed: u64, cases: usize) -> Result<OracleReport> {
    let mut rep = OracleReport::new("rank1_extraction", 1e-10);
    let mut r = rng(seed);
    for k in 0..cases {
        let n = 2 + k % 3;
        let q = random_pd(&mut r, n);
        let h = complex_gaussian_matrix(&mut r, n, 1);
        let out = extract_rank1(&q, &h)?;
        let scale = q.max_eigenvalue()?;
        let lo = q.sub(&out.q_hat).min_eigenvalue()?;
        rep.record(-lo / scale, || format!("case {k}: min eig of q - q_hat {lo}"));
        let g = q.quad(&h);
        rep.record((out.q_hat.quad(&h) - g).abs() / g, || format!("case {k}: gain changed"));
        rep.record((out.q_hat.trace_re() - q.trace_re()) / scale, || format!("case {k}: power grew"));
    }
    Ok(rep)
}

fn nominal_theta1(d: &TransmitDesign, he: &ComplexMatrix) -> Result<f64> {
    let n = d.omega.congruence(he).add(&HermitianMatrix::identity(he.rows()));
    Ok(d.q.congruence(he).trace_product(&n.inverse()?))
}

fn nominal_theta2(d: &TransmitDesign, he: &ComplexMatrix, ge: &ComplexMatrix, pt: f64) -> Result<f64> {
    let n = d.q.add(&d.omega).congruence(he).add(&HermitianMatrix::identity(he.rows()));
    Ok(pt * n.inverse()?.quad(ge))
}

/// Random rank-one design on the full budget.
fn random_design(r: &mut ChaCha8Rng, config: &SystemConfig) -> TransmitDesign {
    let nt = config.n_t;
    let v = complex_gaussian_matrix(r, nt, 1);
    let split: f64 = r.random_range(0.2..0.8);
    let v = v.scale_real((split * config.p_tot()).sqrt() / v.norm());
    let o = random_pd(r, nt);
    let o = o.scale((1.0 - split) * config.p_tot() / o.trace_re());
    TransmitDesign::from_beam(v, o)
}

/// θ programs: tight at zero radius, upper bounds under sampling.
pub fn check_theta_bounds(seed: u64, trials: usize, samples: usize) -> Result<(OracleReport, OracleReport)> {
    let mut tight = OracleReport::new("theta_zero_radius", 1e-5);
    let mut bound = OracleReport::new("theta_sampled_bound", 1e-6);
    let mut r = rng(seed);
    let point = SystemConfig::default().with_epsilon(0.0);
    let ball = SystemConfig::default().with_epsilon(0.1);
    for k in 0..trials {
        let ch = sample_channels(&point, seed.wrapping_add(k as u64))?;
        let d = random_design(&mut r, &point);
        let t1 = theta1_star(&d, &ch, &point)?;
        let w1 = nominal_theta1(&d, &ch.h_e_bar)?;
        tight.record((t1 - w1).abs() / w1.max(1.0), || format!("theta1, trial {k}: {t1} vs {w1}"));
        let t2 = theta2_star(&d, &ch, &point)?;
        let w2 = nominal_theta2(&d, &ch.h_e_bar, &ch.g_e_bar, point.p_t())?;
        tight.record((t2 - w2).abs() / w2.max(1.0), || format!("theta2, trial {k}: {t2} vs {w2}"));

        let t1 = theta1_star(&d, &ch, &ball)?;
        let t2 = theta2_star(&d, &ch, &ball)?;
        for _ in 0..samples {
            let real = Realization::sample(&mut r, &ball);
            let he = &ch.h_e_bar + &real.delta_h_e;
            let ge = &ch.g_e_bar + &real.delta_g_e;
            let s1 = nominal_theta1(&d, &he)?;
            bound.record(s1 - t1, || format!("theta1, trial {k}: sample {s1} above {t1}"));
            let s2 = nominal_theta2(&d, &he, &ge, ball.p_t())?;
            bound.record(s2 - t2, || format!("theta2, trial {k}: sample {s2} above {t2}"));
        }
    }
    Ok((tight, bound))
}

/// With point balls the worst-case rate equals the nominal realised rate.
pub fn check_zero_radius_rate(seed: u64, trials: usize) -> Result<OracleReport> {
    let mut rep = OracleReport::new("zero_radius_rate", 1e-6);
    let config = SystemConfig::default().with_epsilon(0.0);
    let mut r = rng(seed);
    for k in 0..trials {
        let ch = sample_channels(&config, seed.wrapping_add(k as u64))?;
        let d = random_design(&mut r, &config);
        let w = worst_case_rate(&d, &ch, &config)?;
        let n = realized_rate(&d, &ch, &config, &Realization::zero(&config))?;
        rep.record((w.r_w_raw - n).abs(), || format!("trial {k}: {} vs {n}", w.r_w_raw));
    }
    Ok(rep)
}

/// Sampled realised rates never fall below the worst-case rate, for the
/// robust design and the projection baseline.
pub fn check_worst_case_soundness(
    config: &SystemConfig,
    seeds: std::ops::Range<u64>,
    samples: usize,
    opts: &BcdOptions,
) -> Result<(OracleReport, OracleReport)> {
    let mut robust = OracleReport::new("worst_case_soundness_robust", 1e-6);
    let mut proj = OracleReport::new("worst_case_soundness_projection", 1e-6);
    for seed in seeds {
        let ch = sample_channels(config, seed)?;
        let designs = [
            (&mut robust, robust_design(&ch, config, opts)?.design),
            (&mut proj, projection_design(&ch, config)?.design),
        ];
        for (rep, d) in designs {
            let w = worst_case_rate(&d, &ch, config)?;
            let s = sampled_worst_rate(&d, &ch, config, samples, seed ^ 0x5eed)?;
            rep.record(w.r_w_raw - s.min_rate, || {
                format!("seed {seed}: sampled {} below bound {}", s.min_rate, w.r_w_raw)
            });
        }
    }
    Ok((robust, proj))
}

/// The robust constraints behind β, γ, α and M hold at converged BCD
/// solutions for sampled channel errors.
pub fn check_lmi_soundness(
    config: &SystemConfig,
    seeds: std::ops::Range<u64>,
    samples: usize,
    opts: &BcdOptions,
) -> Result<OracleReport> {
    let mut rep = OracleReport::new("s_procedure_soundness", 1e-6);
    for seed in seeds {
        let ch = sample_channels(config, seed)?;
        let res = bcd_optimize(&ch, config, opts)?;
        let (q, omega, aux) = (&res.design.q, &res.design.omega, &res.aux);
        let s = q.add(omega);
        let w = aux.w_e.as_matrix();
        let ld_m = HermitianMatrix::identity(config.n_e).add(&aux.m).logdet()?;
        let r_mrc = ch.mrc()?;
        let mut g = rng(seed ^ 0xba11);
        for _ in 0..samples {
            let real = Realization::sample(&mut g, config);
            let he = &ch.h_e_bar + &real.delta_h_e;
            let ge = &ch.g_e_bar + &real.delta_g_e;
            let leak = s.quad(&real.h_l.adjoint().matmul(&r_mrc));
            rep.record(leak - aux.alpha, || format!("seed {seed}: alpha {} < {leak}", aux.alpha));
            let tr = w.matmul(&s.congruence(&he)).trace().re;
            rep.record(tr - aux.beta, || format!("seed {seed}: beta {} < {tr}", aux.beta));
            let gw = w.quad_form(&ge).re;
            rep.record(gw - aux.gamma, || format!("seed {seed}: gamma {} < {gw}", aux.gamma));
            let eve = HermitianMatrix::identity(config.n_e).add(&omega.congruence(&he)).logdet()?;
            rep.record(ld_m - eve, || format!("seed {seed}: ln det(I+M) {ld_m} > {eve}"));
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug)]
pub struct GridOptimum {
    pub rate: f64,
    pub rho: f64,
    pub mix: f64,
    pub design: TransmitDesign,
}

/// Exhaustive search for `n_t = 2`, `n_e = 1` at zero uncertainty:
/// power split `ρ` on a 0.02 grid, beam mixing between the `h_B` and
/// `null(H̄_E)` directions on 101 points, noise in `null(h_B^H)`.
pub fn grid_oracle_small(channels: &ChannelSet, config: &SystemConfig) -> Result<GridOptimum> {
    if config.n_t != 2 || config.n_e != 1 {
        return Err(crate::Error::Config("grid oracle needs n_t = 2 and n_e = 1".into()));
    }
    let p = config.p_tot();
    let unit = |m: &ComplexMatrix| m.scale_real(1.0 / m.norm());
    let a = unit(&channels.h_b);
    let mut b = null_space(&channels.h_e_bar, 1e-10)?
        .ok_or_else(|| crate::Error::Domain("H̄_E has no null space".into()))?
        .col(0);
    // Align the phase of b with a so the mixture interpolates the angle.
    let ip = b.adjoint().matmul(&a)[(0, 0)];
    if ip.norm() > 0.0 {
        b = b.scale(ip / ip.norm());
    }
    let u_h = null_space(&channels.h_b.adjoint(), 1e-10)?
        .ok_or_else(|| crate::Error::Domain("h_B has no orthogonal complement".into()))?;
    let an = HermitianMatrix::symmetrize(&u_h.matmul(&u_h.adjoint()));
    let zero = Realization::zero(config);
    let mut best: Option<GridOptimum> = None;
    for i in 0..=50 {
        let rho = i as f64 / 50.0;
        for j in 0..=100 {
            let mix = j as f64 / 100.0;
            let dir = &a.scale_real(1.0 - mix) + &b.scale_real(mix);
            let n = dir.norm();
            let dir = if n > 1e-12 { dir.scale_real(1.0 / n) } else { b.clone() };
            let d = TransmitDesign::from_beam(dir.scale_real((rho * p).sqrt()), an.scale((1.0 - rho) * p));
            let rate = realized_rate(&d, channels, config, &zero)?;
            if best.as_ref().is_none_or(|g| rate > g.rate) {
                best = Some(GridOptimum { rate, rho, mix, design: d });
            }
        }
    }
    Ok(best.expect("grid is non-empty"))
}

pub fn tiny_config() -> SystemConfig {
    SystemConfig {
        n_t: 2,
        n_r: 1,
        n_e: 1,
        ..SystemConfig::default().with_epsilon(0.0)
    }
}

/// The BCD design is within 0.05 nats of the grid optimum (or better).
pub fn check_grid_oracle(seeds: std::ops::Range<u64>, opts: &BcdOptions) -> Result<OracleReport> {
    let mut rep = OracleReport::new("tiny_instance_grid", 0.05);
    let config = tiny_config();
    for seed in seeds {
        let ch = sample_channels(&config, seed)?;
        let grid = grid_oracle_small(&ch, &config)?;
        let ours = worst_case_rate(&robust_design(&ch, &config, opts)?.design, &ch, &config)?;
        rep.record(grid.rate - ours.r_w_raw, || {
            format!("seed {seed}: bcd {} vs grid {} (rho {}, mix {})", ours.r_w_raw, grid.rate, grid.rho, grid.mix)
        });
    }
    Ok(rep)
}

/// BCD traces are monotone; doubling the power never lowers the final
/// objective.
pub fn check_bcd_monotone(seeds: std::ops::Range<u64>, opts: &BcdOptions) -> Result<OracleReport> {
    let mut rep = OracleReport::new("bcd_monotone", 1e-6);
    let config = SystemConfig::default();
    let doubled = SystemConfig {
        p_tot_dbm: config.p_tot_dbm + 10.0 * 2f64.log10(),
        ..config.clone()
    };
    for seed in seeds {
        let ch = sample_channels(&config, seed)?;
        let a = bcd_optimize(&ch, &config, opts)?;
        rep.record(a.trace.max_decrease(), || format!("seed {seed}: trace {:?}", a.trace.values()));
        let b = bcd_optimize(&ch, &doubled, opts)?;
        rep.record(a.final_f() - b.final_f() - opts.phi, || {
            format!("seed {seed}: doubled power F {} < {}", b.final_f(), a.final_f())
        });
    }
    Ok(rep)
}

/// Shrinking every radius from 0.1 to 0.05 raises the robust rate.
pub fn check_radius_ordering(seeds: std::ops::Range<u64>, opts: &BcdOptions) -> Result<OracleReport> {
    let mut rep = OracleReport::new("robust_rate_radius_ordering", 1e-6);
    let small = SystemConfig::default().with_epsilon(0.05);
    let large = SystemConfig::default().with_epsilon(0.1);
    for seed in seeds {
        let ch = sample_channels(&small, seed)?;
        let a = worst_case_rate(&robust_design(&ch, &small, opts)?.design, &ch, &small)?;
        let b = worst_case_rate(&robust_design(&ch, &large, opts)?.design, &ch, &large)?;
        rep.record(b.r_w - a.r_w, || format!("seed {seed}: eps 0.1 gives {} > {}", b.r_w, a.r_w));
    }
    Ok(rep)
}

pub type CheckFn = fn(u64) -> Result<Vec<OracleReport>>;

/// Named suite entries with default sizes.
pub fn suite() -> Vec<(&'static str, CheckFn)> {
    vec![
        ("ball_sampling", |s| Ok(vec![check_ball_sampling(10_000, s)])),
        ("channel_moments", |s| Ok(vec![check_gaussian_moments(10_000, s)?])),
        ("kronecker", |s| Ok(vec![check_kronecker(s, 50)])),
        ("hermitian", |s| Ok(vec![check_hermitian_tools(s, 50)?])),
        ("lambda_max", |s| Ok(vec![check_lambda_max_sdp(100, s)?])),
        ("logdet_trace", |_| Ok(vec![check_logdet_trace(&[1, 2, 3, 4])?])),
        ("barrier_gradient", |s| Ok(vec![check_barrier_gradient(20, s)])),
        ("phase_one", |s| Ok(vec![check_phase_one(20, s)?])),
        ("objective", |s| Ok(vec![check_objective_paths(s, 20)?])),
        ("eta2_kronecker", |s| Ok(vec![check_eta2_kronecker(s, 20)?])),
        ("extraction", |s| Ok(vec![check_extraction(s, 200)?])),
        ("theta", |s| {
            let (a, b) = check_theta_bounds(s, 5, 1000)?;
            Ok(vec![a, b])
        }),
        ("zero_radius", |s| Ok(vec![check_zero_radius_rate(s, 10)?])),
        ("bcd_monotone", |s| Ok(vec![check_bcd_monotone(s..s + 5, &BcdOptions::default())?])),
        ("s_procedure", |s| {
            Ok(vec![check_lmi_soundness(&SystemConfig::default(), s..s + 5, 1000, &BcdOptions::default())?])
        }),
        ("worst_case", |s| {
            let (a, b) = check_worst_case_soundness(&SystemConfig::default(), s..s + 5, 1000, &BcdOptions::default())?;
            Ok(vec![a, b])
        }),
        ("radius_ordering", |s| Ok(vec![check_radius_ordering(s..s + 5, &BcdOptions::default())?])),
        ("grid", |s| Ok(vec![check_grid_oracle(s..s + 5, &BcdOptions::default())?])),
    ]
}

/// Runs every suite entry whose name contains `filter`.
pub fn run_suite(filter: Option<&str>, seed: u64) -> Result<Vec<OracleReport>> {
    let mut out = Vec::new();
    for (name, f) in suite() {
        if filter.is_some_and(|p| !name.contains(p)) {
            continue;
        }
        out.extend(f(seed)?);
    }
    Ok(out)
}

/// One line per report.
pub fn render(reports: &[OracleReport]) -> String {
    let mut s = String::new();
    for r in reports {
        let _ = writeln!(s, "{}", r.summary());
    }
    s
}
