use std::time::{Duration, Instant};

use super::blocks::{build_block1_problem, solve_block2, Block2Solution};
use super::{evaluate_f, extract_rank1, AuxiliaryBlock, Rank1, TransmitDesign};
use crate::channel::{ChannelSet, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::solver::{solve, SolveOptions, SolveStatus};

#[derive(Clone, Debug)]
pub struct BcdOptions {
    /// Stop once successive objective values differ by less than this.
    pub phi: f64,
    pub max_iters: usize,
    pub solver: SolveOptions,
}

impl Default for BcdOptions {
    fn default() -> Self {
        Self {
            phi: 1e-4,
            max_iters: 50,
            solver: SolveOptions::default(),
        }
    }
}

/// One trace entry. Entry 0 is the initial point and carries no block-1
/// status.
#[derive(Clone, Debug, PartialEq)]
pub struct BcdStep {
    pub f: f64,
    pub block1: Option<SolveStatus>,
    pub block2: SolveStatus,
    pub wall: Duration,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BcdTrace {
    pub steps: Vec<BcdStep>,
}

impl BcdTrace {
    pub fn values(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.f).collect()
    }

    /// Number of completed BCD iterations (the initial point excluded).
    pub fn iterations(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    /// Largest decrease between consecutive entries (0 if monotone).
    pub fn max_decrease(&self) -> f64 {
        self.steps
            .windows(2)
            .map(|w| (w[0].f - w[1].f).max(0.0))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BcdStatus {
    Converged,
    IterationLimit,
    /// A block solve failed after the first iteration; the result holds
    /// the last accepted iterate.
    SolverFailure(String),
}

#[derive(Clone, Debug)]
pub struct BcdResult {
    /// Relaxed (possibly high-rank) covariances at the final iterate.
    pub design: TransmitDesign,
    pub aux: AuxiliaryBlock,
    pub trace: BcdTrace,
    pub status: BcdStatus,
}

impl BcdResult {
    pub fn converged(&self) -> bool {
        self.status == BcdStatus::Converged
    }

    pub fn final_f(&self) -> f64 {
        self.trace.steps.last().map_or(f64::NAN, |s| s.f)
    }
}

/// The documented starting point: half the power on the matched beam,
/// half spread isotropically as artificial noise.
fn initial_point(channels: &ChannelSet, config: &SystemConfig) -> Result<(HermitianMatrix, HermitianMatrix, f64)> {
    let nt = config.n_t;
    let half = config.p_tot() / 2.0;
    let h = &channels.h_b;
    let hn2 = h.norm().powi(2);
    let q = if hn2 > 0.0 {
        HermitianMatrix::outer(h).scale(half / hn2)
    } else {
        HermitianMatrix::scaled_identity(nt, half / nt as f64)
    };
    let omega = HermitianMatrix::scaled_identity(nt, half / nt as f64);
    let alpha = config.delta_hl.powi(2) * q.add(&omega).max_eigenvalue()?.max(0.0);
    Ok((q, omega, alpha))
}

fn weight_value(b: &Block2Solution, pt: f64) -> Result<f64> {
    Ok(b.w_e.logdet()? - b.w_e.trace_re() - b.beta - pt * b.gamma)
}

fn apply_block2(aux: &mut AuxiliaryBlock, b: &Block2Solution) {
    aux.a1 = b.a1;
    aux.a2 = b.a2;
    aux.w_e = b.w_e.clone();
    aux.beta = b.beta;
    aux.gamma = b.gamma;
    aux.lambda_beta = b.lambda_beta;
    aux.lambda_gamma = b.lambda_gamma;
}

/// Alternates the covariance block and the weight block until the
/// objective settles.
///
/// A block update that would lower the objective (possible only through
/// solver round-off) is rejected and the previous block values kept, so
/// the trace is monotone by construction.
pub fn bcd_optimize(channels: &ChannelSet, config: &SystemConfig, opts: &BcdOptions) -> Result<BcdResult> {
    config.validate()?;
    channels.check_shapes(config)?;
    if !(opts.phi > 0.0) || opts.max_iters == 0 {
        return Err(Error::Config("BCD needs phi > 0 and max_iters >= 1".into()));
    }
    let pt = config.p_t();
    let clock = Instant::now();

    let (mut q, mut omega, alpha0) = initial_point(channels, config)?;
    let b2 = solve_block2(&q, &omega, alpha0, None, channels, config, &opts.solver)
        .map_err(|e| Error::Solver(format!("initial weight block: {e}")))?;
    let ne = config.n_e;
    let mut aux = AuxiliaryBlock {
        a1: b2.a1,
        a2: b2.a2,
        w_e: b2.w_e.clone(),
        alpha: alpha0,
        beta: b2.beta,
        gamma: b2.gamma,
        m: HermitianMatrix::zeros(ne),
        lambda_beta: b2.lambda_beta,
        lambda_gamma: b2.lambda_gamma,
        lambda_m: 0.0,
    };
    let mut f = evaluate_f(&q, &omega, &aux, channels, config)?;
    let mut trace = BcdTrace {
        steps: vec![BcdStep {
            f,
            block1: None,
            block2: b2.status,
            wall: clock.elapsed(),
        }],
    };

    let mut status = BcdStatus::IterationLimit;
    for iter in 1..=opts.max_iters {
        let f_prev = f;

        let block1 = build_block1_problem(aux.a1, aux.a2, &aux.w_e, channels, config)?;
        let initial = (iter > 1).then(|| block1.point(&q, &omega, &aux));
        let solver = SolveOptions {
            initial,
            ..opts.solver.clone()
        };
        let r1 = match solve(&block1.problem, &solver) {
            Ok(r) if r.status != SolveStatus::Infeasible => r,
            Ok(_) if iter == 1 => {
                return Err(Error::Config(
                    "covariance block infeasible at the first iteration".into(),
                ))
            }
            Ok(_) => {
                status = BcdStatus::SolverFailure(format!("iteration {iter}: covariance block infeasible"));
                break;
            }
            Err(e) if iter == 1 => return Err(Error::Solver(format!("iteration 1, covariance block: {e}"))),
            Err(e) => {
                status = BcdStatus::SolverFailure(format!("iteration {iter}, covariance block: {e}"));
                break;
            }
        };
        let (q1, omega1, aux1) = block1.read(&r1, &aux);
        match evaluate_f(&q1, &omega1, &aux1, channels, config) {
            Ok(f1) if f1 >= f => {
                q = q1;
                omega = omega1;
                aux = aux1;
                f = f1;
            }
            Ok(f1) => log::debug!("iteration {iter}: covariance block rejected ({f1} < {f})"),
            Err(e) => log::debug!("iteration {iter}: covariance block rejected ({e})"),
        }

        let b2 = match solve_block2(&q, &omega, aux.alpha, Some(&aux.w_e), channels, config, &opts.solver) {
            Ok(b) => b,
            Err(e) if iter == 1 => return Err(Error::Solver(format!("iteration 1, weight block: {e}"))),
            Err(e) => {
                status = BcdStatus::SolverFailure(format!("iteration {iter}, weight block: {e}"));
                break;
            }
        };
        let mut cand = aux.clone();
        apply_block2(&mut cand, &b2);
        let old_weights = aux.w_e.logdet()? - aux.w_e.trace_re() - aux.beta - pt * aux.gamma;
        if weight_value(&b2, pt)? < old_weights {
            // Keep the previous W_E, β, γ; the closed forms alone never hurt.
            cand = aux.clone();
            cand.a1 = b2.a1;
            cand.a2 = b2.a2;
        }
        if let Ok(f2) = evaluate_f(&q, &omega, &cand, channels, config) {
            if f2 >= f {
                aux = cand;
                f = f2;
            }
        }
        trace.steps.push(BcdStep {
            f,
            block1: Some(r1.status),
            block2: b2.status,
            wall: clock.elapsed(),
        });
        log::debug!("BCD iteration {iter}: F = {f:.10}");
        if (f - f_prev).abs() < opts.phi {
            status = BcdStatus::Converged;
            break;
        }
    }
    if status != BcdStatus::Converged {
        log::warn!("BCD stopped without converging: {status:?}");
    }
    Ok(BcdResult {
        design: TransmitDesign::relaxed(q, omega)?,
        aux,
        trace,
        status,
    })
}

#[derive(Clone, Debug)]
pub struct RobustDesign {
    /// Extracted rank-one design.
    pub design: TransmitDesign,
    pub rank1: Rank1,
    pub bcd: BcdResult,
}

/// BCD followed by rank-one extraction of the signal covariance.
pub fn robust_design(channels: &ChannelSet, config: &SystemConfig, opts: &BcdOptions) -> Result<RobustDesign> {
    let bcd = bcd_optimize(channels, config, opts)?;
    let rank1 = extract_rank1(&bcd.design.q, &channels.h_b)?;
    let design = TransmitDesign {
        v: rank1.v.clone(),
        q: rank1.q_hat.clone(),
        omega: bcd.design.omega.clone(),
    };
    Ok(RobustDesign { design, rank1, bcd })
}
