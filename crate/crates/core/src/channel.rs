//! Rayleigh block fading with an additive CSI error model, and synthesis of
//! the superposed downlink signal.
//!
//! The true channel is the sum of an estimate and an independent error,
//! `H = Ĥ + H̃`, with `ĥ_k ~ CN(0, σ²_k − σ²_e,k)` and `h̃_k ~ CN(0, σ²_e,k)`.
//! The transmitter always precodes with `Ĥ`. The receiver-side estimate is a
//! second, conditionally independent draw with the same joint statistics
//! unless [`SystemConfig::independent_csir`] is off.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::modem::{Constellation, Modulation};
use crate::precoding::PrecoderMatrix;
use crate::{Error, Result, C64};

/// Static link parameters for one simulated operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub nt: usize,
    pub k: usize,
    /// Transmit power budget (linear).
    pub pt: f64,
    /// Receiver noise power per user (linear).
    pub noise_power: Vec<f64>,
    /// Channel amplitude power `σ²_k` per user.
    pub channel_power: Vec<f64>,
    /// CSI quality exponent: `σ²_e = Pt^(−α)`.
    pub alpha: f64,
    /// Force `σ²_e = 0`.
    pub perfect_csi: bool,
    /// Draw the receiver estimate independently of the transmitter estimate.
    pub independent_csir: bool,
    pub common: Modulation,
    /// One modulation per private stream.
    pub private: Vec<Modulation>,
    pub seed: u64,
}

impl SystemConfig {
    /// Homogeneous users with the default parameters (`σ²_k = σ²_n = 1`,
    /// `α = 0.6`).
    pub fn new(nt: usize, k: usize, pt: f64, common: Modulation, private: Modulation) -> Self {
        SystemConfig {
            nt,
            k,
            pt,
            noise_power: vec![1.0; k],
            channel_power: vec![1.0; k],
            alpha: 0.6,
            perfect_csi: false,
            independent_csir: true,
            common,
            private: vec![private; k],
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nt == 0 {
            return Err(Error::config("nt", "must be at least 1"));
        }
        if self.k == 0 {
            return Err(Error::config("k", "must be at least 1"));
        }
        if !(self.pt > 0.0 && self.pt.is_finite()) {
            return Err(Error::config("pt", "must be positive"));
        }
        if self.noise_power.len() != self.k || self.noise_power.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::config("noise_power", "need one positive value per user"));
        }
        if self.channel_power.len() != self.k || self.channel_power.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::config("sigma_k", "need one positive value per user"));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::config("alpha", "must be non-negative"));
        }
        if self.private.len() != self.k {
            return Err(Error::config("private_modulation", "need one modulation per user"));
        }
        Ok(())
    }

    /// `σ²_e,k` for every user, capped at `σ²_k`.
    pub fn error_powers(&self) -> Result<Vec<f64>> {
        if self.perfect_csi {
            return Ok(vec![0.0; self.k]);
        }
        let e = csi_error_power(self.pt, self.alpha)?;
        Ok(self.channel_power.iter().map(|&s| e.min(s)).collect())
    }

    pub fn common_constellation(&self) -> Constellation {
        Constellation::new(self.common)
    }

    pub fn private_constellations(&self) -> Vec<Constellation> {
        self.private.iter().map(|&m| Constellation::new(m)).collect()
    }
}

/// `Pt^(−α)`.
pub fn csi_error_power(pt: f64, alpha: f64) -> Result<f64> {
    if !(pt > 0.0) {
        return Err(Error::Domain(format!("transmit power {pt} must be positive")));
    }
    Ok(pt.powf(-alpha))
}

/// One block-fading realization. Columns are users.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: DMatrix<C64>,
    /// Transmitter-side estimate.
    pub h_hat: DMatrix<C64>,
    pub h_tilde: DMatrix<C64>,
    /// Receiver-side estimate.
    pub h_hat_rx: DMatrix<C64>,
    pub error_power: Vec<f64>,
}

impl ChannelRealization {
    pub fn user(&self, k: usize) -> DVector<C64> {
        self.h.column(k).into_owned()
    }

    pub fn user_estimate_rx(&self, k: usize) -> DVector<C64> {
        self.h_hat_rx.column(k).into_owned()
    }
}

/// A `CN(0, variance)` sample.
pub fn cscg<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

pub fn draw_channel<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<ChannelRealization> {
    cfg.validate()?;
    let err = cfg.error_powers()?;
    draw_channel_with(cfg.nt, &cfg.channel_power, &err, cfg.independent_csir, rng)
}

/// Draws `Ĥ` and `H̃` with explicit per-user error powers.
pub fn draw_channel_with<R: Rng + ?Sized>(
    nt: usize,
    channel_power: &[f64],
    error_power: &[f64],
    independent_csir: bool,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let k = channel_power.len();
    if error_power.len() != k {
        return Err(Error::Contract("one error power per user".into()));
    }
    for (user, (&s, &e)) in channel_power.iter().zip(error_power).enumerate() {
        if !(0.0..=s).contains(&e) {
            return Err(Error::config(
                "alpha",
                format!("user {user}: error power {e} outside [0, {s}]"),
            ));
        }
    }
    let mut h_hat = DMatrix::zeros(nt, k);
    let mut h_tilde = DMatrix::zeros(nt, k);
    for user in 0..k {
        let est_var = channel_power[user] - error_power[user];
        for a in 0..nt {
            h_hat[(a, user)] = cscg(est_var, rng);
        }
        if error_power[user] > 0.0 {
            for a in 0..nt {
                h_tilde[(a, user)] = cscg(error_power[user], rng);
            }
        }
    }
    let h = &h_hat + &h_tilde;

    let h_hat_rx = if independent_csir {
        let mut est = DMatrix::zeros(nt, k);
        for user in 0..k {
            let s = channel_power[user];
            let e = error_power[user];
            let gain = (s - e) / s;
            let resid = (s - e) * e / s;
            for a in 0..nt {
                est[(a, user)] = h[(a, user)] * gain
                    + if resid > 0.0 { cscg(resid, rng) } else { C64::new(0.0, 0.0) };
            }
        }
        est
    } else {
        h_hat.clone()
    };

    Ok(ChannelRealization {
        h,
        h_hat,
        h_tilde,
        h_hat_rx,
        error_power: error_power.to_vec(),
    })
}

#[derive(Debug, Clone, Copy)]
pub enum Noise<'a> {
    Off,
    /// Noise power per user.
    Awgn(&'a [f64]),
}

/// `G[k, j] = h_kᴴ p_j`, the scalar gain of stream `j` (0 = common) at user `k`.
pub fn effective_gains(h: &DMatrix<C64>, p: &PrecoderMatrix) -> Result<DMatrix<C64>> {
    if h.nrows() != p.p.nrows() || p.p.ncols() != h.ncols() + 1 {
        return Err(Error::Contract(format!(
            "channel is {}x{}, precoder is {}x{}",
            h.nrows(),
            h.ncols(),
            p.p.nrows(),
            p.p.ncols()
        )));
    }
    Ok(h.adjoint() * &p.p)
}

/// Received sample of every user for one transmitted vector `s = [s_c, s_1..s_K]`.
pub fn synthesize_received<R: Rng + ?Sized>(
    h: &DMatrix<C64>,
    p: &PrecoderMatrix,
    s: &[C64],
    noise: Noise<'_>,
    rng: &mut R,
) -> Result<Vec<C64>> {
    let k = h.ncols();
    if s.len() != k + 1 {
        return Err(Error::Contract(format!("expected {} symbols, got {}", k + 1, s.len())));
    }
    let gains = effective_gains(h, p)?;
    let s = DVector::from_column_slice(s);
    let clean = gains * s;
    add_noise(clean.iter().copied().collect(), noise, rng)
}

/// Received samples at every user for whole symbol streams;
/// `streams[j][t]` is stream `j` at time `t`. Returns `y[k][t]`.
pub fn synthesize_block<R: Rng + ?Sized>(
    h: &DMatrix<C64>,
    p: &PrecoderMatrix,
    streams: &[Vec<C64>],
    noise: Noise<'_>,
    rng: &mut R,
) -> Result<Vec<Vec<C64>>> {
    let k = h.ncols();
    if streams.len() != k + 1 {
        return Err(Error::Contract(format!("expected {} streams, got {}", k + 1, streams.len())));
    }
    let n = streams[0].len();
    if streams.iter().any(|s| s.len() != n) {
        return Err(Error::Contract("streams differ in length".into()));
    }
    if let Noise::Awgn(pw) = noise {
        if pw.len() != k {
            return Err(Error::Contract("one noise power per user".into()));
        }
    }
    let gains = effective_gains(h, p)?;
    let mut out = Vec::with_capacity(k);
    for user in 0..k {
        let mut y = vec![C64::new(0.0, 0.0); n];
        for (j, stream) in streams.iter().enumerate() {
            let g = gains[(user, j)];
            for (yt, st) in y.iter_mut().zip(stream) {
                *yt += g * st;
            }
        }
        if let Noise::Awgn(pw) = noise {
            for yt in y.iter_mut() {
                *yt += cscg(pw[user], rng);
            }
        }
        out.push(y);
    }
    Ok(out)
}

fn add_noise<R: Rng + ?Sized>(mut y: Vec<C64>, noise: Noise<'_>, rng: &mut R) -> Result<Vec<C64>> {
    if let Noise::Awgn(pw) = noise {
        if pw.len() != y.len() {
            return Err(Error::Contract("one noise power per user".into()));
        }
        for (v, &p) in y.iter_mut().zip(pw) {
            *v += cscg(p, rng);
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precoding::PrecoderMatrix;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn error_power_formula() {
        assert_eq!(csi_error_power(37.0, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(csi_error_power(100.0, 0.6).unwrap(), 0.063_095_734, epsilon = 1e-8);
        assert!(csi_error_power(0.0, 0.6).is_err());
        assert!(csi_error_power(-1.0, 0.6).is_err());
    }

    #[test]
    fn perfect_csi_override() {
        let mut cfg = SystemConfig::new(4, 2, 10.0, Modulation::Qpsk, Modulation::Qpsk);
        cfg.perfect_csi = true;
        let ch = draw_channel(&cfg, &mut rng(1)).unwrap();
        assert!(ch.h_tilde.iter().all(|z| *z == C64::new(0.0, 0.0)));
        assert_eq!(ch.h, ch.h_hat);
        assert_eq!(ch.h_hat_rx, ch.h);
    }

    #[test]
    fn error_power_is_capped() {
        let cfg = SystemConfig::new(2, 1, 0.5, Modulation::Qpsk, Modulation::Qpsk);
        // 0.5^-0.6 > 1
        assert_eq!(cfg.error_powers().unwrap(), vec![1.0]);
        assert!(draw_channel_with(2, &[1.0], &[1.5], true, &mut rng(0)).is_err());
    }

    #[test]
    fn additivity_is_exact() {
        let cfg = SystemConfig::new(4, 3, 20.0, Modulation::Qpsk, Modulation::Qpsk);
        let mut r = rng(3);
        for _ in 0..50 {
            let ch = draw_channel(&cfg, &mut r).unwrap();
            assert_eq!(ch.h, &ch.h_hat + &ch.h_tilde);
        }
    }

    #[test]
    fn seeded_draws_reproduce() {
        let cfg = SystemConfig::new(4, 2, 20.0, Modulation::Qpsk, Modulation::Qpsk);
        let a = draw_channel(&cfg, &mut rng(9)).unwrap();
        let b = draw_channel(&cfg, &mut rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = SystemConfig::new(4, 2, 20.0, Modulation::Qpsk, Modulation::Qpsk);
        cfg.k = 0;
        assert!(matches!(cfg.validate(), Err(Error::Config { key, .. }) if key == "k"));
        let mut cfg = SystemConfig::new(4, 2, 20.0, Modulation::Qpsk, Modulation::Qpsk);
        cfg.pt = 0.0;
        assert!(cfg.validate().is_err());
    }

    fn single_user_precoder(pc: DVector<C64>, p1: DVector<C64>) -> PrecoderMatrix {
        let mut p = DMatrix::zeros(pc.len(), 2);
        p.set_column(0, &pc);
        p.set_column(1, &p1);
        PrecoderMatrix { p, common_fraction: 1.0 }
    }

    #[test]
    fn aligned_common_precoder_reduces_to_one_term() {
        let h = DMatrix::from_column_slice(2, 1, &[C64::new(0.3, -1.0), C64::new(0.5, 0.2)]);
        let pc = h.column(0).into_owned();
        let p = single_user_precoder(pc.clone(), DVector::zeros(2));
        let sc = C64::new(0.7, -0.7);
        let y = synthesize_received(&h, &p, &[sc, C64::new(1.0, 0.0)], Noise::Off, &mut rng(0)).unwrap();
        let expect = (h.column(0).adjoint() * pc)[(0, 0)] * sc;
        assert_abs_diff_eq!(y[0].re, expect.re, epsilon = 1e-15);
        assert_abs_diff_eq!(y[0].im, expect.im, epsilon = 1e-15);
    }

    #[test]
    fn zero_precoder_gives_pure_noise() {
        let h = DMatrix::from_element(3, 2, C64::new(1.0, 1.0));
        let p = PrecoderMatrix { p: DMatrix::zeros(3, 3), common_fraction: 0.5 };
        let s = [C64::new(1.0, 0.0); 3];
        let y = synthesize_received(&h, &p, &s, Noise::Awgn(&[1.0, 2.0]), &mut rng(4)).unwrap();
        let mut r = rng(4);
        let n0 = cscg(1.0, &mut r);
        let n1 = cscg(2.0, &mut r);
        assert_eq!(y, vec![n0, n1]);
        let y = synthesize_received(&h, &p, &s, Noise::Off, &mut rng(4)).unwrap();
        assert!(y.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn matches_term_by_term_summation() {
        let mut r = rng(17);
        for _ in 0..20 {
            let (nt, k) = (3, 2);
            let h = DMatrix::from_fn(nt, k, |_, _| cscg(1.0, &mut r));
            let p = PrecoderMatrix {
                p: DMatrix::from_fn(nt, k + 1, |_, _| cscg(1.0, &mut r)),
                common_fraction: 0.5,
            };
            let s: Vec<C64> = (0..=k).map(|_| cscg(1.0, &mut r)).collect();
            let y = synthesize_received(&h, &p, &s, Noise::Off, &mut r).unwrap();
            for user in 0..k {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..=k {
                    for a in 0..nt {
                        acc += h[(a, user)].conj() * p.p[(a, j)] * s[j];
                    }
                }
                assert!((acc - y[user]).norm() < 1e-12);
            }
            let streams: Vec<Vec<C64>> = s.iter().map(|&x| vec![x, x]).collect();
            let yb = synthesize_block(&h, &p, &streams, Noise::Off, &mut r).unwrap();
            for user in 0..k {
                assert!((yb[user][1] - y[user]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let h = DMatrix::zeros(3, 2);
        let p = PrecoderMatrix { p: DMatrix::zeros(3, 2), common_fraction: 0.5 };
        assert!(synthesize_received(&h, &p, &[C64::new(0.0, 0.0); 3], Noise::Off, &mut rng(0)).is_err());
    }
}
