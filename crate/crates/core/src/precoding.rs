//! Linear RSMA precoders and the SINR/rate expressions of a SIC receiver.
//!
//! Precoder optimization is out of scope; the receivers are agnostic to where
//! `P` comes from, so two closed-form constructions are provided behind
//! [`PrecoderStrategy`]. Both split the budget as `t_c·Pt` for the common
//! stream and `(1 − t_c)·Pt / K` per private stream, and place the private
//! streams with regularized zero forcing on the transmitter estimate.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// `P = [p_c, p_1, …, p_K]`, `Nt × (K+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderMatrix {
    pub p: DMatrix<C64>,
    pub common_fraction: f64,
}

impl PrecoderMatrix {
    pub fn common(&self) -> DVector<C64> {
        self.p.column(0).into_owned()
    }

    /// Private precoder of user `k` (0-based).
    pub fn private(&self, k: usize) -> DVector<C64> {
        self.p.column(k + 1).into_owned()
    }

    pub fn users(&self) -> usize {
        self.p.ncols() - 1
    }

    /// `tr(P Pᴴ)`.
    pub fn power(&self) -> f64 {
        self.p.iter().map(|z| z.norm_sqr()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PrecoderStrategy {
    /// Common precoder along the dominant left singular vector of `Ĥ`.
    #[default]
    #[serde(rename = "svd_rzf")]
    SvdRzf,
    /// Common precoder along the sum of normalized user channels.
    #[serde(rename = "mrt_rzf")]
    MrtRzf,
}

impl FromStr for PrecoderStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svd_rzf" => Ok(PrecoderStrategy::SvdRzf),
            "mrt_rzf" => Ok(PrecoderStrategy::MrtRzf),
            other => Err(Error::config("precoder.strategy", format!("unknown strategy `{other}`"))),
        }
    }
}

/// Builds `P` from the transmitter's channel estimate, meeting
/// `tr(P Pᴴ) = Pt`. `noise_power` sets the RZF regularization `K·σ²_n / Pt`.
pub fn build_precoder(
    h_hat: &DMatrix<C64>,
    pt: f64,
    common_fraction: f64,
    noise_power: f64,
    strategy: PrecoderStrategy,
) -> Result<PrecoderMatrix> {
    if !(0.0..=1.0).contains(&common_fraction) {
        return Err(Error::config(
            "precoder.common_fraction",
            format!("{common_fraction} outside [0, 1]"),
        ));
    }
    if !(pt > 0.0) {
        return Err(Error::Domain(format!("transmit power {pt} must be positive")));
    }
    let (nt, k) = h_hat.shape();
    if k == 0 || h_hat.iter().all(|z| z.norm_sqr() == 0.0) {
        return Err(Error::DegenerateChannel("channel estimate is zero".into()));
    }

    let mut p = DMatrix::zeros(nt, k + 1);

    let pc_power = common_fraction * pt;
    if pc_power > 0.0 {
        let dir = match strategy {
            PrecoderStrategy::SvdRzf => dominant_left_singular_vector(h_hat)?,
            PrecoderStrategy::MrtRzf => {
                let mut sum = DVector::zeros(nt);
                for col in h_hat.column_iter() {
                    let n = col.norm();
                    if n > 0.0 {
                        sum += col / C64::new(n, 0.0);
                    }
                }
                // Users whose directions cancel fall back to the SVD choice.
                if sum.norm() < 1e-12 {
                    dominant_left_singular_vector(h_hat)?
                } else {
                    sum
                }
            }
        };
        let scale = pc_power.sqrt() / dir.norm();
        p.set_column(0, &(dir * C64::new(scale, 0.0)));
    }

    let private_power = (1.0 - common_fraction) * pt;
    if private_power > 0.0 {
        let w = regularized_zf(h_hat, k as f64 * noise_power / pt)?;
        let per_user = (private_power / k as f64).sqrt();
        for (user, col) in w.column_iter().enumerate() {
            let n = col.norm();
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::DegenerateChannel(format!(
                    "zero-forcing direction for user {user} vanishes"
                )));
            }
            p.set_column(user + 1, &(col * C64::new(per_user / n, 0.0)));
        }
    }

    Ok(PrecoderMatrix { p, common_fraction })
}

/// `Ĥ (Ĥᴴ Ĥ + λ I)⁻¹`, columns unnormalized.
pub fn regularized_zf(h_hat: &DMatrix<C64>, lambda: f64) -> Result<DMatrix<C64>> {
    let k = h_hat.ncols();
    let gram = h_hat.adjoint() * h_hat + DMatrix::<C64>::identity(k, k) * C64::new(lambda, 0.0);
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::DegenerateChannel("regularized Gram matrix is singular".into()))?;
    Ok(h_hat * inv)
}

fn dominant_left_singular_vector(h: &DMatrix<C64>) -> Result<DVector<C64>> {
    let svd = h.clone().svd(true, false);
    let u = svd
        .u
        .ok_or_else(|| Error::DegenerateChannel("SVD did not converge".into()))?;
    let best = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::DegenerateChannel("empty channel".into()))?;
    Ok(u.column(best).into_owned())
}

fn check_noise(noise_power: f64) -> Result<()> {
    if !(noise_power > 0.0) {
        return Err(Error::Domain(format!("noise power {noise_power} must be positive")));
    }
    Ok(())
}

fn gain(h_k: &DVector<C64>, p: &PrecoderMatrix, col: usize) -> Result<f64> {
    if h_k.len() != p.p.nrows() {
        return Err(Error::Contract(format!(
            "channel has {} antennas, precoder {}",
            h_k.len(),
            p.p.nrows()
        )));
    }
    Ok(h_k.dotc(&p.p.column(col)).norm_sqr())
}

/// SINR of the common stream at a user with channel `h_k`, treating every
/// private stream as noise.
///
/// The interference term sums `|h_kᴴ p_j|²` over all `K` private precoders
/// evaluated at user `k`'s own channel.
pub fn sinr_common(h_k: &DVector<C64>, p: &PrecoderMatrix, noise_power: f64) -> Result<f64> {
    check_noise(noise_power)?;
    let signal = gain(h_k, p, 0)?;
    let mut interference = 0.0;
    for j in 1..p.p.ncols() {
        interference += gain(h_k, p, j)?;
    }
    Ok(signal / (interference + noise_power))
}

/// SINR of private stream `k` after perfect cancellation of the common stream.
pub fn sinr_private(h_k: &DVector<C64>, p: &PrecoderMatrix, k: usize, noise_power: f64) -> Result<f64> {
    check_noise(noise_power)?;
    if k >= p.users() {
        return Err(Error::Contract(format!("user {k} out of range")));
    }
    let signal = gain(h_k, p, k + 1)?;
    let mut interference = 0.0;
    for j in (0..p.users()).filter(|&j| j != k) {
        interference += gain(h_k, p, j + 1)?;
    }
    Ok(signal / (interference + noise_power))
}

/// Achievable rates in bit/s/Hz.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub sinr_common: Vec<f64>,
    pub sinr_private: Vec<f64>,
    pub rate_common: Vec<f64>,
    pub rate_private: Vec<f64>,
    /// `min_k R_c,k`, the largest rate every user can decode the common stream at.
    pub common_rate: f64,
}

impl RateReport {
    pub fn sum_rate(&self) -> f64 {
        self.common_rate + self.rate_private.iter().sum::<f64>()
    }
}

pub fn rates(sinr_common: &[f64], sinr_private: &[f64]) -> RateReport {
    let shannon = |g: &f64| (1.0 + g).log2();
    let rate_common: Vec<f64> = sinr_common.iter().map(shannon).collect();
    let common_rate = rate_common.iter().cloned().fold(f64::INFINITY, f64::min);
    RateReport {
        sinr_common: sinr_common.to_vec(),
        sinr_private: sinr_private.to_vec(),
        rate_private: sinr_private.iter().map(shannon).collect(),
        common_rate: if rate_common.is_empty() { 0.0 } else { common_rate },
        rate_common,
    }
}

/// SINRs and rates of every user for true channel `h`.
pub fn rate_report(h: &DMatrix<C64>, p: &PrecoderMatrix, noise_power: &[f64]) -> Result<RateReport> {
    let k = h.ncols();
    if noise_power.len() != k {
        return Err(Error::Contract("one noise power per user".into()));
    }
    let mut gc = Vec::with_capacity(k);
    let mut gp = Vec::with_capacity(k);
    for user in 0..k {
        let hk = h.column(user).into_owned();
        gc.push(sinr_common(&hk, p, noise_power[user])?);
        gp.push(sinr_private(&hk, p, user, noise_power[user])?);
    }
    Ok(rates(&gc, &gp))
}
