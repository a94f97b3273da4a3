//! Scenario description and its TOML form.
//!
//! ```toml
//! nt = 4
//! k = 2
//! snr_db = [12, 15, 18]
//! receivers = ["map", "sic_imperfect", "mbdl"]
//!
//! [training]
//! pattern = "minimal"
//! blocks = 20
//! ```
//!
//! Everything except `nt`, `k` and `snr_db` has a default.

use serde::{Deserialize, Serialize};

use crate::channel::SystemConfig;
use crate::modem::Modulation;
use crate::precoding::PrecoderStrategy;
use crate::receivers::ReceiverKind;
use crate::training::Pattern;
use crate::{Error, Result};

/// One modulation for every private stream, or one per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PrivateModulation {
    Shared(Modulation),
    PerUser(Vec<Modulation>),
}

impl Default for PrivateModulation {
    fn default() -> Self {
        PrivateModulation::Shared(Modulation::Qpsk)
    }
}

impl PrivateModulation {
    pub fn expand(&self, k: usize) -> Result<Vec<Modulation>> {
        match self {
            PrivateModulation::Shared(m) => Ok(vec![*m; k]),
            PrivateModulation::PerUser(v) if v.len() == k => Ok(v.clone()),
            PrivateModulation::PerUser(v) if v.len() == 1 => Ok(vec![v[0]; k]),
            PrivateModulation::PerUser(v) => Err(Error::config(
                "private_modulation",
                format!("{} entries for {k} users", v.len()),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrecoderSection {
    pub strategy: PrecoderStrategy,
    pub common_fraction: f64,
}

impl Default for PrecoderSection {
    fn default() -> Self {
        PrecoderSection {
            strategy: PrecoderStrategy::SvdRzf,
            common_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub pattern: Pattern,
    pub blocks: usize,
    /// Jittered copies per interpolated point; 0 disables jitter.
    pub jitter_replicas: usize,
}

impl Default for TrainingSection {
    fn default() -> Self {
        TrainingSection {
            pattern: Pattern::Minimal,
            blocks: 20,
            jitter_replicas: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NnSection {
    pub learning_rate: f64,
    pub normalize_inputs: bool,
    /// Mini-batch size; absent means `max(T, 25·|S_1|)`, i.e. the full set.
    pub batch_size: Option<usize>,
}

impl Default for NnSection {
    fn default() -> Self {
        NnSection {
            learning_rate: 0.01,
            normalize_inputs: false,
            batch_size: None,
        }
    }
}

fn default_alpha() -> f64 {
    0.6
}
fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_receivers() -> Vec<ReceiverKind> {
    ReceiverKind::ALL.to_vec()
}
fn default_trials() -> usize {
    100
}
fn default_data_symbols() -> usize {
    256
}

/// A complete experiment: link parameters, sweep, receivers and training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub nt: usize,
    pub k: usize,
    /// SNR points in dB; `Pt = σ²_n · 10^(SNR/10)`.
    pub snr_db: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub noise_power: f64,
    #[serde(default = "one")]
    pub sigma_k: f64,
    #[serde(default)]
    pub perfect_csi: bool,
    #[serde(default = "yes")]
    pub independent_csir: bool,
    #[serde(default = "common_default")]
    pub common_modulation: Modulation,
    #[serde(default)]
    pub private_modulation: PrivateModulation,
    #[serde(default = "default_receivers")]
    pub receivers: Vec<ReceiverKind>,
    /// 1-based users to evaluate; empty means all.
    #[serde(default)]
    pub users: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Data symbols per stream and trial.
    #[serde(default = "default_data_symbols")]
    pub data_symbols: usize,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub precoder: PrecoderSection,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub nn: NnSection,
}

fn common_default() -> Modulation {
    Modulation::Qpsk
}

impl Scenario {
    /// Defaults for everything but the three required keys.
    pub fn new(nt: usize, k: usize, snr_db: Vec<f64>) -> Self {
        Scenario {
            nt,
            k,
            snr_db,
            alpha: default_alpha(),
            noise_power: 1.0,
            sigma_k: 1.0,
            perfect_csi: false,
            independent_csir: true,
            common_modulation: Modulation::Qpsk,
            private_modulation: PrivateModulation::default(),
            receivers: default_receivers(),
            users: Vec::new(),
            trials: default_trials(),
            data_symbols: default_data_symbols(),
            seed: 0,
            workers: 0,
            precoder: PrecoderSection::default(),
            training: TrainingSection::default(),
            nn: NnSection::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nt == 0 {
            return Err(Error::config("nt", "must be at least 1"));
        }
        if self.k == 0 {
            return Err(Error::config("k", "must be at least 1"));
        }
        if self.snr_db.is_empty() {
            return Err(Error::config("snr_db", "needs at least one point"));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::config("snr_db", "points must be finite"));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::config("alpha", "must be non-negative"));
        }
        if !(self.noise_power > 0.0) {
            return Err(Error::config("noise_power", "must be positive"));
        }
        if !(self.sigma_k > 0.0) {
            return Err(Error::config("sigma_k", "must be positive"));
        }
        self.private_modulation.expand(self.k)?;
        if self.receivers.is_empty() {
            return Err(Error::config("receivers", "select at least one receiver"));
        }
        if let Some(&u) = self.users.iter().find(|&&u| u == 0 || u > self.k) {
            return Err(Error::config("users", format!("user {u} outside 1..={}", self.k)));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.data_symbols == 0 {
            return Err(Error::config("data_symbols", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.precoder.common_fraction) {
            return Err(Error::config("precoder.common_fraction", "must lie in [0, 1]"));
        }
        if self.training.blocks == 0 {
            return Err(Error::config("training.blocks", "must be at least 1"));
        }
        if !(self.nn.learning_rate > 0.0) {
            return Err(Error::config("nn.learning_rate", "must be positive"));
        }
        Ok(())
    }

    pub fn private_modulations(&self) -> Result<Vec<Modulation>> {
        self.private_modulation.expand(self.k)
    }

    /// All stream modulations, common first.
    pub fn stream_modulations(&self) -> Result<Vec<Modulation>> {
        let mut mods = vec![self.common_modulation];
        mods.extend(self.private_modulations()?);
        Ok(mods)
    }

    /// 0-based users to evaluate.
    pub fn evaluated_users(&self) -> Vec<usize> {
        if self.users.is_empty() {
            (0..self.k).collect()
        } else {
            self.users.iter().map(|u| u - 1).collect()
        }
    }

    /// Transmit power for an SNR point.
    pub fn pt_for(&self, snr_db: f64) -> f64 {
        self.noise_power * 10f64.powf(snr_db / 10.0)
    }

    pub fn system_config(&self, snr_db: f64) -> Result<SystemConfig> {
        let cfg = SystemConfig {
            nt: self.nt,
            k: self.k,
            pt: self.pt_for(snr_db),
            noise_power: vec![self.noise_power; self.k],
            channel_power: vec![self.sigma_k; self.k],
            alpha: self.alpha,
            perfect_csi: self.perfect_csi,
            independent_csir: self.independent_csir,
            common: self.common_modulation,
            private: self.private_modulations()?,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses and validates a TOML scenario.
pub fn parse_config(text: &str) -> Result<Scenario> {
    let sc: Scenario = toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        let key = e
            .span()
            .and_then(|s| text.get(s))
            .map(|s| s.trim().to_string())
            .unwrap_or_default();
        Error::config(key, msg)
    })?;
    sc.validate()?;
    Ok(sc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let sc = parse_config("nt = 4\nk = 2\nsnr_db = [0, 10]\n").unwrap();
        assert_eq!(sc.alpha, 0.6);
        assert_eq!(sc.noise_power, 1.0);
        assert_eq!(sc.sigma_k, 1.0);
        assert_eq!(sc.nn.learning_rate, 0.01);
        assert_eq!(sc.training.pattern, Pattern::Minimal);
        assert_eq!(sc.training.blocks, 20);
        assert_eq!(sc.data_symbols, 256);
        assert_eq!(sc.precoder.common_fraction, 0.5);
        assert_eq!(sc, Scenario::new(4, 2, vec![0.0, 10.0]));
    }

    #[test]
    fn full_config() {
        let text = r#"
            nt = 8
            k = 3
            snr_db = [5.5]
            alpha = 0.8
            common_modulation = "16qam"
            private_modulation = ["qpsk", "64qam", "256qam"]
            receivers = ["map", "mbdl"]
            users = [1, 3]
            seed = 99
            [precoder]
            strategy = "mrt_rzf"
            common_fraction = 0.3
            [training]
            pattern = "interpolating"
            blocks = 5
            jitter_replicas = 0
            [nn]
            learning_rate = 0.02
        "#;
        let sc = parse_config(text).unwrap();
        assert_eq!(sc.private_modulations().unwrap()[2], Modulation::Qam256);
        assert_eq!(sc.evaluated_users(), vec![0, 2]);
        assert_eq!(sc.precoder.strategy, PrecoderStrategy::MrtRzf);
        assert_eq!(sc.training.pattern, Pattern::Interpolating);
    }

    fn key_of(err: Error) -> String {
        match err {
            Error::Config { key, msg } => format!("{key}: {msg}"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn constraint_errors_name_the_key() {
        let e = parse_config("nt = 4\nk = 0\nsnr_db = [0]\n").unwrap_err();
        assert!(key_of(e).starts_with("k:"));
        let e = parse_config("nt = 4\nk = 2\nsnr_db = []\n").unwrap_err();
        assert!(key_of(e).starts_with("snr_db:"));
        let e = parse_config("nt = 4\nk = 2\nsnr_db = [1]\n[precoder]\ncommon_fraction = 2.0\n").unwrap_err();
        assert!(key_of(e).starts_with("precoder.common_fraction"));
    }

    #[test]
    fn parse_errors_name_the_key() {
        let e = parse_config("nt = 4\nk = 2\nsnr_db = [0]\nbogus = 1\n").unwrap_err();
        assert!(key_of(e).contains("bogus"));
        let e = parse_config("nt = \"four\"\nk = 2\nsnr_db = [0]\n").unwrap_err();
        assert!(key_of(e).contains("four"));
        let e = parse_config("nt = 4\nk = 2\nk = 3\nsnr_db = [0]\n").unwrap_err();
        assert!(key_of(e).contains('k'));
        let e = parse_config("nt = 4\nk = 2\nsnr_db = [0]\n[training]\nblockz = 3\n").unwrap_err();
        assert!(key_of(e).contains("blockz"));
        let e = parse_config("nt = 4\nk = 2\nsnr_db = [0]\nreceivers = [\"zf\"]\n").unwrap_err();
        assert!(key_of(e).contains("zf"));
    }

    #[test]
    fn private_modulation_count_must_match() {
        let e = parse_config("nt = 4\nk = 3\nsnr_db = [0]\nprivate_modulation = [\"qpsk\", \"16qam\"]\n").unwrap_err();
        assert!(key_of(e).starts_with("private_modulation"));
    }
}
