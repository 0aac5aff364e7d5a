//! System configuration and random channel realisations.
//!
//! The designer only ever sees the nominal channels and the uncertainty
//! radii; the sampled perturbations and the residual self-interference
//! channel are kept alongside as the "true" realisation used when
//! scoring a design after the fact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

/// Relative slack allowed when checking that a perturbation lies inside
/// its ball (sampling rounds the radius).
const BALL_SLACK: f64 = 1e-12;

const NOMINAL_STREAM: u64 = 0;
const PERTURBATION_STREAM: u64 = 1;

/// `10^((x - noise)/10)`.
pub fn dbm_to_linear(x_dbm: f64, noise_dbm: f64) -> f64 {
    10f64.powf((x_dbm - noise_dbm) / 10.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    /// BS transmit antennas.
    pub n_t: usize,
    /// BS receive antennas.
    pub n_r: usize,
    /// Eavesdropper antennas.
    pub n_e: usize,
    pub p_tot_dbm: f64,
    /// Uplink transmit power of the UT.
    pub p_t_dbm: f64,
    pub noise_dbm: f64,
    /// Frobenius radius of the residual self-interference channel.
    pub delta_hl: f64,
    /// Frobenius radius of the BS-to-Eve channel error.
    pub delta_he: f64,
    /// Frobenius radius of the UT-to-Eve channel error.
    pub delta_ge: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n_t: 3,
            n_r: 2,
            n_e: 2,
            p_tot_dbm: 10.0,
            p_t_dbm: 20.0,
            noise_dbm: 0.0,
            delta_hl: 0.05,
            delta_he: 0.05,
            delta_ge: 0.05,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_t == 0 || self.n_r == 0 || self.n_e == 0 {
            return Err(Error::Config("antenna counts must be at least 1".into()));
        }
        if self.n_t < self.n_e + 1 {
            return Err(Error::Config(format!(
                "need n_t >= n_e + 1 (n_t = {}, n_e = {})",
                self.n_t, self.n_e
            )));
        }
        for (name, v) in [
            ("delta_hl", self.delta_hl),
            ("delta_he", self.delta_he),
            ("delta_ge", self.delta_ge),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be a finite value >= 0, got {v}")));
            }
        }
        for (name, v) in [
            ("p_tot_dbm", self.p_tot_dbm),
            ("p_t_dbm", self.p_t_dbm),
            ("noise_dbm", self.noise_dbm),
        ] {
            if v.is_nan() || v == f64::INFINITY {
                return Err(Error::Config(format!("{name} must be a number, got {v}")));
            }
        }
        Ok(())
    }

    /// Total BS power as a linear ratio to the noise power.
    pub fn p_tot(&self) -> f64 {
        dbm_to_linear(self.p_tot_dbm, self.noise_dbm)
    }

    /// UT power as a linear ratio to the noise power.
    pub fn p_t(&self) -> f64 {
        dbm_to_linear(self.p_t_dbm, self.noise_dbm)
    }

    /// Sets all three uncertainty radii to `eps`.
    pub fn with_epsilon(mut self, eps: f64) -> Self {
        self.delta_hl = eps;
        self.delta_he = eps;
        self.delta_ge = eps;
        self
    }
}

/// One realisation of the uncertain channels.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    /// `n_e x n_t` error on the BS-to-Eve channel.
    pub delta_h_e: ComplexMatrix,
    /// `n_e x 1` error on the UT-to-Eve channel.
    pub delta_g_e: ComplexMatrix,
    /// `n_r x n_t` residual self-interference channel.
    pub h_l: ComplexMatrix,
}

impl Realization {
    pub fn zero(config: &SystemConfig) -> Self {
        Self {
            delta_h_e: ComplexMatrix::zeros(config.n_e, config.n_t),
            delta_g_e: ComplexMatrix::zeros(config.n_e, 1),
            h_l: ComplexMatrix::zeros(config.n_r, config.n_t),
        }
    }

    /// Independent uniform draws from the three uncertainty balls.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, config: &SystemConfig) -> Self {
        Self {
            delta_h_e: sample_ball(rng, config.n_e, config.n_t, config.delta_he),
            delta_g_e: sample_ball(rng, config.n_e, 1, config.delta_ge),
            h_l: sample_ball(rng, config.n_r, config.n_t, config.delta_hl),
        }
    }

    pub fn check_inside(&self, config: &SystemConfig) -> Result<()> {
        check_shape("delta_h_e", &self.delta_h_e, config.n_e, config.n_t)?;
        check_shape("delta_g_e", &self.delta_g_e, config.n_e, 1)?;
        check_shape("h_l", &self.h_l, config.n_r, config.n_t)?;
        for (name, m, radius) in [
            ("delta_h_e", &self.delta_h_e, config.delta_he),
            ("delta_g_e", &self.delta_g_e, config.delta_ge),
            ("h_l", &self.h_l, config.delta_hl),
        ] {
            let norm = m.frobenius_norm();
            if norm > radius * (1.0 + BALL_SLACK) + 1e-300 {
                return Err(Error::Domain(format!(
                    "{name} has norm {norm} outside its ball of radius {radius}"
                )));
            }
        }
        Ok(())
    }
}

/// All channels of one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    /// BS to downlink receiver, `n_t x 1` (the DR sees `h_b^H x`).
    pub h_b: ComplexMatrix,
    /// UT to BS, `n_r x 1`.
    pub g_b: ComplexMatrix,
    /// UT to downlink receiver.
    pub g: C64,
    /// Estimated BS-to-Eve channel, `n_e x n_t`.
    pub h_e_bar: ComplexMatrix,
    /// Estimated UT-to-Eve channel, `n_e x 1`.
    pub g_e_bar: ComplexMatrix,
    /// The realisation actually in effect during the trial.
    pub truth: Realization,
}

impl ChannelSet {
    /// Validating constructor.
    pub fn new(
        h_b: ComplexMatrix,
        g_b: ComplexMatrix,
        g: C64,
        h_e_bar: ComplexMatrix,
        g_e_bar: ComplexMatrix,
        truth: Realization,
        config: &SystemConfig,
    ) -> Result<Self> {
        let set = Self {
            h_b,
            g_b,
            g,
            h_e_bar,
            g_e_bar,
            truth,
        };
        set.validate(config)?;
        Ok(set)
    }

    pub fn validate(&self, config: &SystemConfig) -> Result<()> {
        self.check_shapes(config)?;
        self.truth.check_inside(config)
    }

    /// Dimension checks only; the stored realisation is not consulted.
    pub fn check_shapes(&self, config: &SystemConfig) -> Result<()> {
        check_shape("h_b", &self.h_b, config.n_t, 1)?;
        check_shape("g_b", &self.g_b, config.n_r, 1)?;
        check_shape("h_e_bar", &self.h_e_bar, config.n_e, config.n_t)?;
        check_shape("g_e_bar", &self.g_e_bar, config.n_e, 1)
    }

    /// True BS-to-Eve channel `H̄_E + ΔH_E`.
    pub fn h_e_true(&self) -> ComplexMatrix {
        &self.h_e_bar + &self.truth.delta_h_e
    }

    /// True UT-to-Eve channel `ḡ_E + Δg_E`.
    pub fn g_e_true(&self) -> ComplexMatrix {
        &self.g_e_bar + &self.truth.delta_g_e
    }

    /// MRC combiner of the BS uplink receiver.
    pub fn mrc(&self) -> Result<ComplexMatrix> {
        mrc_receiver(&self.g_b)
    }
}

fn check_shape(name: &str, m: &ComplexMatrix, rows: usize, cols: usize) -> Result<()> {
    if (m.rows(), m.cols()) != (rows, cols) {
        return Err(Error::Dimension(format!(
            "{name} is {}x{}, expected {rows}x{cols}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

/// `g_b / ||g_b||`.
pub fn mrc_receiver(g_b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = g_b.norm();
    if !(n > 0.0) {
        return Err(Error::Domain("MRC receiver needs a nonzero uplink channel".into()));
    }
    Ok(g_b.scale_real(1.0 / n))
}

/// Entry-wise i.i.d. CN(0, 1).
pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(s * re, s * im)
    })
}

/// Uniform sample from the complex Frobenius ball of the given radius.
///
/// The direction is a normalised Gaussian in `2·rows·cols` real
/// dimensions and the radius is `radius · u^{1/(2·rows·cols)}`.
pub fn sample_ball<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, radius: f64) -> ComplexMatrix {
    let g = complex_gaussian_matrix(rng, rows, cols);
    let u: f64 = rng.random();
    let n = g.frobenius_norm();
    if radius == 0.0 || n == 0.0 {
        return ComplexMatrix::zeros(rows, cols);
    }
    let real_dim = (2 * rows * cols) as f64;
    let r = radius * u.powf(1.0 / real_dim);
    g.scale_real(r / n)
}

/// Deterministic random realisation for one trial.
///
/// Nominal channels and perturbations come from independent ChaCha
/// streams of the same seed, so changing the radii keeps the nominal
/// channels fixed and only rescales the perturbations.
pub fn sample_channels(config: &SystemConfig, seed: u64) -> Result<ChannelSet> {
    config.validate()?;
    let mut nominal = ChaCha8Rng::seed_from_u64(seed);
    nominal.set_stream(NOMINAL_STREAM);
    let h_b = complex_gaussian_matrix(&mut nominal, config.n_t, 1);
    let g_b = complex_gaussian_matrix(&mut nominal, config.n_r, 1);
    let g = complex_gaussian_matrix(&mut nominal, 1, 1)[(0, 0)];
    let h_e_bar = complex_gaussian_matrix(&mut nominal, config.n_e, config.n_t);
    let g_e_bar = complex_gaussian_matrix(&mut nominal, config.n_e, 1);

    let mut pert = ChaCha8Rng::seed_from_u64(seed);
    pert.set_stream(PERTURBATION_STREAM);
    let delta_h_e = sample_ball(&mut pert, config.n_e, config.n_t, 1.0).scale_real(config.delta_he);
    let delta_g_e = sample_ball(&mut pert, config.n_e, 1, 1.0).scale_real(config.delta_ge);
    let h_l = sample_ball(&mut pert, config.n_r, config.n_t, 1.0).scale_real(config.delta_hl);

    ChannelSet::new(
        h_b,
        g_b,
        g,
        h_e_bar,
        g_e_bar,
        Realization {
            delta_h_e,
            delta_g_e,
            h_l,
        },
        config,
    )
}
