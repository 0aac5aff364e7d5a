//! Worst-case and realised sum secrecy rates of a transmit design.
//!
//! All rates are in nats. The eavesdropper term is bounded by two small
//! SDPs, one for the downlink signal and one for the uplink signal seen
//! through the remaining interference.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{ChannelSet, Realization, SystemConfig};
use crate::design::TransmitDesign;
use crate::error::{Error, Result};
use crate::linalg::{principal_eigenpair, ComplexMatrix, HermitianMatrix, C64};
use crate::solver::{solve, LmiProblem, MatrixExpr, ScalarExpr, SolveOptions, SolveStatus, VarKind, VariableLayout};

/// Duality-gap target of the θ programs.
const THETA_GAP: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecrecyReport {
    pub eta1: f64,
    pub eta2_min: f64,
    pub theta1_star: f64,
    pub theta2_star: f64,
    pub r_w_raw: f64,
    /// `max(r_w_raw, 0)`.
    pub r_w: f64,
}

fn check(design: &TransmitDesign, channels: &ChannelSet, config: &SystemConfig) -> Result<()> {
    channels.check_shapes(config)?;
    if design.q.dim() != config.n_t || design.omega.dim() != config.n_t {
        return Err(Error::Dimension(format!(
            "design is {}x{}, expected n_t = {}",
            design.q.dim(),
            design.q.dim(),
            config.n_t
        )));
    }
    Ok(())
}

/// Downlink SINR `h^H Q h / (P_t|g|² + h^H Ω h + 1)`.
pub fn eta1(design: &TransmitDesign, channels: &ChannelSet, config: &SystemConfig) -> f64 {
    let h = &channels.h_b;
    design.q.quad(h) / (config.p_t() * channels.g.norm_sqr() + design.omega.quad(h) + 1.0)
}

/// Uplink SINR after MRC for a given self-interference channel.
pub fn eta2(design: &TransmitDesign, channels: &ChannelSet, config: &SystemConfig, h_l: &ComplexMatrix) -> Result<f64> {
    let gb2 = channels.g_b.norm().powi(2);
    if gb2 == 0.0 {
        return Ok(0.0);
    }
    let r = channels.mrc()?;
    let s = design.q.add(&design.omega);
    let leak = s.quad(&h_l.adjoint().matmul(&r));
    Ok(config.p_t() * gb2 / (leak + 1.0))
}

/// Uplink SINR under the worst self-interference channel,
/// `P_t ||g_B||² / (δ² λ_max(Q + Ω) + 1)`.
pub fn eta2_min(design: &TransmitDesign, channels: &ChannelSet, config: &SystemConfig) -> Result<f64> {
    let gb2 = channels.g_b.norm().powi(2);
    let lmax = design.q.add(&design.omega).max_eigenvalue()?.max(0.0);
    Ok(config.p_t() * gb2 / (config.delta_hl.powi(2) * lmax + 1.0))
}

fn solve_theta(p: &LmiProblem, theta: crate::solver::Var, what: &str) -> Result<f64> {
    let opts = SolveOptions {
        gap_tol: THETA_GAP,
        ..SolveOptions::default()
    };
    let r = solve(p, &opts)?;
    match r.status {
        SolveStatus::Optimal => Ok(r.scalar(theta)),
        SolveStatus::IterationLimit => {
            log::warn!("{what}: iteration limit, using the last feasible value");
            Ok(r.scalar(theta))
        }
        SolveStatus::Infeasible => Err(Error::Solver(format!("{what} program is infeasible"))),
    }
}

/// `[[H A H^H, H A], [A H^H, A]]`.
fn lifted(h: &ComplexMatrix, a: &ComplexMatrix) -> ComplexMatrix {
    let ha = h.matmul(a);
    ComplexMatrix::from_blocks(&[&[&ha.matmul(&h.adjoint()), &ha], &[&ha.adjoint(), a]])
}

/// Smallest `θ1` with `θ1 ≥ tr(H Q H^H (H Ω H^H + I)^{-1})` for every
/// `H = H̄_E + Δ`, `||Δ|| ≤ δ_{H_E}`.
///
/// With `X = θ1 Ω - Q` the constraint is `H X H^H + θ1 I ⪰ 0` for all
/// `H`, which the S-lemma turns into
/// `[[H̄XH̄^H + (θ1-τ)I, H̄X], [XH̄^H, X + (τ/δ²)I]] ⪰ 0`, `τ ≥ 0`.
/// The bound is exact for rank-one `Q`.
pub fn theta1_star(design: &TransmitDesign, channels: &ChannelSet, config: &SystemConfig) -> Result<f64> {
    check(design, channels, config)?;
    let (nt, ne) = (config.n_t, config.n_e);
    let hb = &channels.h_e_bar;
    let delta = config.delta_he;
    let mut layout = VariableLayout::new();
    let theta = layout.add("theta", VarKind::NonNeg);
    let tau = (delta > 0.0).then(|| layout.add("tau", VarKind::NonNeg));
    let mut p = LmiProblem::new(layout);
    p.maximize_linear(ScalarExpr::constant(0.0).plus_var(theta, -1.0));
    let q = design.q.as_matrix();
    let omega = design.omega.as_matrix();
    match tau {
        Some(tau) => {
            let mut om = lifted(hb, omega);
            for i in 0..ne {
                om[(i, i)] += 1.0;
            }
            let mut d = vec![-1.0; ne];
            d.extend(std::iter::repeat(1.0 / (delta * delta)).take(nt));
            p.add_lmi(
                MatrixExpr::new(ne + nt)
                    .plus_constant(&lifted(hb, q).scale_real(-1.0))
                    .plus_scalar(theta, &om)
                    .plus_scalar(tau, &ComplexMatrix::real_diag(&d)),
            );
        }
        None => {
            let om = &design.omega.congruence(hb).add(&HermitianMatrix::identity(ne));
            p.add_lmi(
                MatrixExpr::new(ne)
                    .plus_constant(&design.q.congruence(hb).scale(-1.0))
                    .plus_scalar(theta, om),
            );
        }
    }
    solve_theta(&p, theta, "theta1")
}

/// Smallest `θ2` with `θ2 ≥ P_t g^H (H (Ω+Q) H^H + I)^{-1} g` for every
/// `g = ḡ_E + Δg`, `H = H̄_E + Δ` in their balls.
///
/// The Schur form `[[θ2, √P_t g^H], [√P_t g, H S H^H + I]] ⪰ 0` is made
/// robust in `Δg` with a multiplier `μ` and then in `Δ` with `τ`.
pub fn theta2_star(design: &TransmitDesign, channels: &ChannelSet, config: &SystemConfig) -> Result<f64> {
    check(design, channels, config)?;
    let (nt, ne) = (config.n_t, config.n_e);
    let hb = &channels.h_e_bar;
    let (d_h, d_g) = (config.delta_he, config.delta_ge);
    let sp = config.p_t().sqrt();
    let s = design.q.add(&design.omega);

    let mut layout = VariableLayout::new();
    let theta = layout.add("theta", VarKind::NonNeg);
    let mu = (d_g > 0.0).then(|| layout.add("mu", VarKind::NonNeg));
    let tau = (d_h > 0.0).then(|| layout.add("tau", VarKind::NonNeg));
    let mut p = LmiProblem::new(layout);
    p.maximize_linear(ScalarExpr::constant(0.0).plus_var(theta, -1.0));

    let k = 1 + ne + if mu.is_some() { ne } else { 0 };
    let dim = k + if tau.is_some() { nt } else { 0 };
    let mut c = ComplexMatrix::zeros(dim, dim);
    let sg = channels.g_e_bar.scale_real(sp);
    c.set_block(1, 0, &sg);
    c.set_block(0, 1, &sg.adjoint());
    c.set_block(1, 1, &s.congruence(hb).add(&HermitianMatrix::identity(ne)));
    let mut e00 = ComplexMatrix::zeros(dim, dim);
    e00[(0, 0)] = C64::new(1.0, 0.0);
    let mut expr = MatrixExpr::new(dim).plus_scalar(theta, &e00);
    if let Some(mu) = mu {
        let off = ComplexMatrix::identity(ne).scale_real(sp * d_g);
        c.set_block(1, 1 + ne, &off);
        c.set_block(1 + ne, 1, &off);
        let mut cm = e00.scale_real(-1.0);
        for i in 0..ne {
            cm[(1 + ne + i, 1 + ne + i)] = C64::new(1.0, 0.0);
        }
        expr = expr.plus_scalar(mu, &cm);
    }
    if let Some(tau) = tau {
        let hs = hb.matmul(s.as_matrix());
        c.set_block(1, k, &hs);
        c.set_block(k, 1, &hs.adjoint());
        c.set_block(k, k, &s);
        let mut d = vec![0.0; dim];
        for x in d.iter_mut().skip(1).take(ne) {
            *x = -1.0;
        }
        for x in d.iter_mut().skip(k) {
            *x = 1.0 / (d_h * d_h);
        }
        expr = expr.plus_scalar(tau, &ComplexMatrix::real_diag(&d));
    }
    p.add_lmi(expr.plus_constant(&c));
    solve_theta(&p, theta, "theta2")
}

/// Achievable worst-case sum secrecy rate.
///
/// The eavesdropper split is exact only for rank-one `q`; for higher
/// rank the value is a heuristic.
pub fn worst_case_rate(design: &TransmitDesign, channels: &ChannelSet, config: &SystemConfig) -> Result<SecrecyReport> {
    check(design, channels, config)?;
    let eta1 = eta1(design, channels, config);
    let eta2_min = eta2_min(design, channels, config)?;
    let theta1_star = theta1_star(design, channels, config)?;
    let theta2_star = theta2_star(design, channels, config)?;
    let r_w_raw = (1.0 + eta1).ln() + (1.0 + eta2_min).ln() - ((1.0 + theta1_star) * (1.0 + theta2_star)).ln();
    Ok(SecrecyReport {
        eta1,
        eta2_min,
        theta1_star,
        theta2_star,
        r_w_raw,
        r_w: r_w_raw.max(0.0),
    })
}

/// Sum secrecy rate for one concrete channel realisation:
/// `ln(1+η1) + ln(1+η2) - ln det(I + Z N^{-1})` with
/// `N = H_E Ω H_E^H + I` and `Z = H_E Q H_E^H + P_t g_E g_E^H`.
pub fn realized_rate(
    design: &TransmitDesign,
    channels: &ChannelSet,
    config: &SystemConfig,
    realization: &Realization,
) -> Result<f64> {
    check(design, channels, config)?;
    realization.check_inside(config)?;
    let he = &channels.h_e_bar + &realization.delta_h_e;
    let ge = &channels.g_e_bar + &realization.delta_g_e;
    let ne = config.n_e;
    let n = design.omega.congruence(&he).add(&HermitianMatrix::identity(ne));
    let z = design
        .q
        .congruence(&he)
        .add(&HermitianMatrix::outer(&ge).scale(config.p_t()));
    let eve = n.add(&z).logdet()? - n.logdet()?;
    let e1 = eta1(design, channels, config);
    let e2 = eta2(design, channels, config, &realization.h_l)?;
    Ok((1.0 + e1).ln() + (1.0 + e2).ln() - eve)
}

/// Boundary realisations that often attain the worst case: `±δ` along
/// the nominal Eve channels, with the self-interference channel aligned
/// to the dominant transmit direction.
pub fn boundary_realizations(design: &TransmitDesign, channels: &ChannelSet, config: &SystemConfig) -> Result<Vec<Realization>> {
    let unit = |m: &ComplexMatrix| {
        let n = m.frobenius_norm();
        if n > 0.0 {
            m.scale_real(1.0 / n)
        } else {
            let mut e = ComplexMatrix::zeros(m.rows(), m.cols());
            e[(0, 0)] = C64::new(1.0, 0.0);
            e
        }
    };
    let dh = unit(&channels.h_e_bar).scale_real(config.delta_he);
    let dg = unit(&channels.g_e_bar).scale_real(config.delta_ge);
    let (_, u) = principal_eigenpair(&design.q.add(&design.omega))?;
    let r = if channels.g_b.norm() > 0.0 {
        channels.mrc()?
    } else {
        unit(&channels.g_b)
    };
    let h_l = r.matmul(&u.adjoint()).scale_real(config.delta_hl);
    let mut out = Vec::with_capacity(4);
    for sh in [1.0, -1.0] {
        for sg in [1.0, -1.0] {
            out.push(Realization {
                delta_h_e: dh.scale_real(sh),
                delta_g_e: dg.scale_real(sg),
                h_l: h_l.clone(),
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct SampledWorst {
    pub min_rate: f64,
    pub worst: Realization,
    pub evaluated: usize,
}

/// Minimum realised rate over the boundary points and `samples` uniform
/// draws from the uncertainty balls.
pub fn sampled_worst_rate(
    design: &TransmitDesign,
    channels: &ChannelSet,
    config: &SystemConfig,
    samples: usize,
    seed: u64,
) -> Result<SampledWorst> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Realization)> = None;
    let mut evaluated = 0;
    let draws = (0..samples).map(|_| Realization::sample(&mut rng, config)).collect::<Vec<_>>();
    for real in boundary_realizations(design, channels, config)?.into_iter().chain(draws) {
        let rate = realized_rate(design, channels, config, &real)?;
        evaluated += 1;
        if best.as_ref().is_none_or(|(b, _)| rate < *b) {
            best = Some((rate, real));
        }
    }
    let (min_rate, worst) = best.ok_or_else(|| Error::Domain("no realisation evaluated".into()))?;
    Ok(SampledWorst {
        min_rate,
        worst,
        evaluated,
    })
}
