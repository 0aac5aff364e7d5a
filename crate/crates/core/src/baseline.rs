//! Projection benchmark: the beam is `h_B` projected onto the null space
//! of the estimated Eve channel, and the artificial noise is spread
//! evenly over the null space of `h_B^H`, with the power split 50/50.

use crate::channel::{ChannelSet, SystemConfig};
use crate::design::TransmitDesign;
use crate::error::{Error, Result};
use crate::linalg::{fix_phase, null_space, ComplexMatrix, HermitianMatrix};

/// Relative eigenvalue threshold for the null spaces.
const NULL_TOL: f64 = 1e-10;
/// Below this the projected beam is treated as zero.
const PROJECTION_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionDesign {
    pub design: TransmitDesign,
    /// `h_B` has no component in the Eve null space; all power went to
    /// artificial noise.
    pub degenerate: bool,
}

fn projector(basis: &ComplexMatrix) -> ComplexMatrix {
    basis.matmul(&basis.adjoint())
}

pub fn projection_design(channels: &ChannelSet, config: &SystemConfig) -> Result<ProjectionDesign> {
    config.validate()?;
    channels.check_shapes(config)?;
    let nt = config.n_t;
    if nt < 2 {
        return Err(Error::Config("the projection baseline needs n_t >= 2".into()));
    }
    let p = config.p_tot();
    let u_e = null_space(&channels.h_e_bar, NULL_TOL)?
        .ok_or_else(|| Error::Domain("estimated Eve channel has full column rank".into()))?;
    let u_h = null_space(&channels.h_b.adjoint(), NULL_TOL)?
        .ok_or_else(|| Error::Domain("h_B has no orthogonal complement".into()))?;
    let an = HermitianMatrix::symmetrize(&projector(&u_h)).scale(1.0 / u_h.cols() as f64);

    let proj = projector(&u_e).matmul(&channels.h_b);
    let norm = proj.frobenius_norm();
    if norm <= PROJECTION_FLOOR {
        log::warn!("projection baseline: h_B is orthogonal to the Eve null space, all power to noise");
        return Ok(ProjectionDesign {
            design: TransmitDesign::from_beam(ComplexMatrix::zeros(nt, 1), an.scale(p)),
            degenerate: true,
        });
    }
    let v = fix_phase(&proj.scale_real((p / 2.0).sqrt() / norm));
    Ok(ProjectionDesign {
        design: TransmitDesign::from_beam(v, an.scale(p / 2.0)),
        degenerate: false,
    })
}
