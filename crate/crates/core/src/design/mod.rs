//! Robust joint beamforming and artificial-noise design.
//!
//! The non-convex worst-case problem is handled by block coordinate
//! descent over two convex blocks: the transmit covariances together
//! with the robust-constraint auxiliaries, and the weights `a1`, `a2`,
//! `W_E`. The relaxed signal covariance is turned into a beamformer by
//! a rank-one extraction that never loses secrecy rate.

mod bcd;
mod blocks;

pub use bcd::{bcd_optimize, robust_design, BcdOptions, BcdResult, BcdStatus, BcdStep, BcdTrace, RobustDesign};
pub use blocks::{block2_closed_forms, build_block1_problem, solve_block2, Block1, Block1Vars, Block2Solution};

use crate::channel::{ChannelSet, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::{fix_phase, principal_eigenpair, ComplexMatrix, HermitianMatrix};

/// Below this `h^H q h` the extraction has no direction to keep.
pub const EXTRACTION_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct TransmitDesign {
    /// Beamformer, `n_t x 1`.
    pub v: ComplexMatrix,
    /// Signal covariance (`v v^H` once extracted).
    pub q: HermitianMatrix,
    /// Artificial-noise covariance.
    pub omega: HermitianMatrix,
}

impl TransmitDesign {
    /// Rank-one design `q = v v^H`.
    pub fn from_beam(v: ComplexMatrix, omega: HermitianMatrix) -> Self {
        let q = HermitianMatrix::outer(&v);
        Self { v, q, omega }
    }

    /// Design with a possibly high-rank `q`; `v` is its best rank-one
    /// factor.
    pub fn relaxed(q: HermitianMatrix, omega: HermitianMatrix) -> Result<Self> {
        let (lmax, u) = principal_eigenpair(&q)?;
        let v = fix_phase(&u).scale_real(lmax.max(0.0).sqrt());
        Ok(Self { v, q, omega })
    }

    pub fn n_t(&self) -> usize {
        self.q.dim()
    }

    pub fn total_power(&self) -> f64 {
        self.q.trace_re() + self.omega.trace_re()
    }

    /// Checks PSD-ness (to -1e-8) and the power budget (to 1e-8 relative).
    pub fn check(&self, p_tot: f64) -> Result<()> {
        for (name, m) in [("q", &self.q), ("omega", &self.omega)] {
            let lo = m.min_eigenvalue()?;
            if lo < -1e-8 {
                return Err(Error::Domain(format!("{name} has eigenvalue {lo:e}")));
            }
        }
        let p = self.total_power();
        if p > p_tot * (1.0 + 1e-8) {
            return Err(Error::Domain(format!("power {p} exceeds budget {p_tot}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuxiliaryBlock {
    pub a1: f64,
    pub a2: f64,
    pub w_e: HermitianMatrix,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub m: HermitianMatrix,
    pub lambda_beta: f64,
    pub lambda_gamma: f64,
    pub lambda_m: f64,
}

/// The BCD objective
///
/// `ln(1+P_t|g|²+h^H(Q+Ω)h) - a1(P_t|g|²+h^HΩh+1) + ln a1 + 1
///  - a2(1+α) + ln a2 + 1 + ln(1+P_t||g_B||²+α)
///  + ln det W - tr W - β - P_t γ + ln det(I+M)`.
pub fn evaluate_f(
    q: &HermitianMatrix,
    omega: &HermitianMatrix,
    aux: &AuxiliaryBlock,
    channels: &ChannelSet,
    config: &SystemConfig,
) -> Result<f64> {
    let pt = config.p_t();
    let h = &channels.h_b;
    let g2 = channels.g.norm_sqr();
    let gb2 = channels.g_b.norm().powi(2);
    let s = q.add(omega);
    if !(aux.a1 > 0.0 && aux.a2 > 0.0) {
        return Err(Error::Domain("a1 and a2 must be positive".into()));
    }
    let i_plus_m = HermitianMatrix::identity(aux.m.dim()).add(&aux.m);
    let ldm = i_plus_m
        .logdet()
        .map_err(|_| Error::Domain("I + M is not positive definite".into()))?;
    let ldw = aux
        .w_e
        .logdet()
        .map_err(|_| Error::Domain("W_E is not positive definite".into()))?;
    Ok((1.0 + pt * g2 + s.quad(h)).ln() - aux.a1 * (pt * g2 + omega.quad(h) + 1.0)
        + aux.a1.ln()
        + 1.0
        - aux.a2 * (1.0 + aux.alpha)
        + aux.a2.ln()
        + 1.0
        + (1.0 + pt * gb2 + aux.alpha).ln()
        + ldw
        - aux.w_e.trace_re()
        - aux.beta
        - pt * aux.gamma
        + ldm)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rank1 {
    pub q_hat: HermitianMatrix,
    pub v: ComplexMatrix,
    /// `h^H q h` was too small to define a direction; `v = 0`.
    pub degenerate: bool,
}

/// `q̂ = q h h^H q / (h^H q h)` and its factor `v`, phase-fixed so the
/// first non-negligible entry is real positive.
pub fn extract_rank1(q: &HermitianMatrix, h_b: &ComplexMatrix) -> Result<Rank1> {
    if h_b.rows() != q.dim() || h_b.cols() != 1 {
        return Err(Error::Dimension(format!(
            "h_b is {}x{}, q is {}x{}",
            h_b.rows(),
            h_b.cols(),
            q.dim(),
            q.dim()
        )));
    }
    let n = q.dim();
    let qh = q.matmul(h_b);
    let gain = q.quad(h_b);
    if !(gain > EXTRACTION_FLOOR) {
        log::warn!("rank-one extraction: h^H q h = {gain:e}, returning a zero beamformer");
        return Ok(Rank1 {
            q_hat: HermitianMatrix::zeros(n),
            v: ComplexMatrix::zeros(n, 1),
            degenerate: true,
        });
    }
    let v = fix_phase(&qh.scale_real(1.0 / gain.sqrt()));
    Ok(Rank1 {
        q_hat: HermitianMatrix::outer(&v),
        v,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests;
