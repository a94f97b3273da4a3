//! Per-user detectors of the (common, private) symbol pair.
//!
//! All three receivers work on scalar received samples `y_k`. MAP and SIC
//! are model based and need a channel vector; the learned receiver only
//! needs the labeled training prefix.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::modem::{Constellation, Modulation, SoftBits};
use crate::nn::{argmax, build_arch, Dataset, DetectorPurpose, Mlp, TrainSpec};
use crate::precoding::PrecoderMatrix;
use crate::training::LabeledTrainingSet;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverKind {
    Map,
    SicPerfect,
    SicImperfect,
    Mbdl,
}

impl ReceiverKind {
    pub const ALL: [ReceiverKind; 4] = [
        ReceiverKind::Map,
        ReceiverKind::SicPerfect,
        ReceiverKind::SicImperfect,
        ReceiverKind::Mbdl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReceiverKind::Map => "map",
            ReceiverKind::SicPerfect => "sic_perfect",
            ReceiverKind::SicImperfect => "sic_imperfect",
            ReceiverKind::Mbdl => "mbdl",
        }
    }
}

impl fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReceiverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ReceiverKind::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::config("receivers", format!("unknown receiver `{s}`")))
    }
}

/// Which channel vector the SIC receiver equalizes with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsirMode {
    Perfect,
    Imperfect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub common_index: usize,
    pub common_bits: Vec<u8>,
    pub private_index: usize,
    pub private_bits: Vec<u8>,
    pub common_soft: SoftBits,
    pub private_soft: SoftBits,
}

impl DetectionResult {
    fn hard(sc: &Constellation, sk: &Constellation, common: usize, private: usize) -> Self {
        let common_bits = sc.bits_of(common);
        let private_bits = sk.bits_of(private);
        DetectionResult {
            common_index: common,
            common_soft: SoftBits::from_hard(&common_bits),
            common_bits,
            private_index: private,
            private_soft: SoftBits::from_hard(&private_bits),
            private_bits,
        }
    }

    pub fn common_lprs(&self) -> Vec<f64> {
        self.common_soft.lprs()
    }

    pub fn private_lprs(&self) -> Vec<f64> {
        self.private_soft.lprs()
    }
}

fn stream_gains(h: &DVector<C64>, p: &PrecoderMatrix, k: usize) -> Result<(C64, C64)> {
    if h.len() != p.p.nrows() || k >= p.users() {
        return Err(Error::Contract(format!(
            "channel of length {} / user {k} inconsistent with a {}x{} precoder",
            h.len(),
            p.p.nrows(),
            p.p.ncols()
        )));
    }
    Ok((h.dotc(&p.p.column(0)), h.dotc(&p.p.column(k + 1))))
}

/// Joint minimum-distance detection over all `|S_c|·|S_k|` superpositions.
#[derive(Debug, Clone)]
pub struct MapDetector {
    sc: Constellation,
    sk: Constellation,
    /// `a·s_c + b·s_k`, common-major.
    candidates: Vec<C64>,
}

impl MapDetector {
    /// `common_gain = h_kᴴ p_c`, `private_gain = h_kᴴ p_k`.
    pub fn from_gains(common_gain: C64, private_gain: C64, sc: Constellation, sk: Constellation) -> Self {
        let mut candidates = Vec::with_capacity(sc.len() * sk.len());
        for &c in sc.points() {
            for &s in sk.points() {
                candidates.push(common_gain * c + private_gain * s);
            }
        }
        MapDetector { sc, sk, candidates }
    }

    pub fn new(h_k: &DVector<C64>, p: &PrecoderMatrix, k: usize, sc: Constellation, sk: Constellation) -> Result<Self> {
        let (a, b) = stream_gains(h_k, p, k)?;
        Ok(Self::from_gains(a, b, sc, sk))
    }

    /// Ties go to the lowest (common, private) index pair.
    pub fn detect(&self, y: C64) -> DetectionResult {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &x) in self.candidates.iter().enumerate() {
            let d = (y - x).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        let n = self.sk.len();
        DetectionResult::hard(&self.sc, &self.sk, best / n, best % n)
    }
}

pub fn map_detect(
    y: C64,
    h_k: &DVector<C64>,
    p: &PrecoderMatrix,
    k: usize,
    sc: &Constellation,
    sk: &Constellation,
) -> Result<DetectionResult> {
    Ok(MapDetector::new(h_k, p, k, sc.clone(), sk.clone())?.detect(y))
}

/// Two-stage successive interference cancellation with single-tap
/// matched equalizers built from `h_used`.
#[derive(Debug, Clone)]
pub struct SicDetector {
    sc: Constellation,
    sk: Constellation,
    common_gain: C64,
    private_gain: C64,
}

impl SicDetector {
    pub fn from_gains(common_gain: C64, private_gain: C64, sc: Constellation, sk: Constellation) -> Result<Self> {
        if common_gain.norm_sqr() == 0.0 {
            return Err(Error::EqualizerSingular("common stream gain is zero"));
        }
        if private_gain.norm_sqr() == 0.0 {
            return Err(Error::EqualizerSingular("private stream gain is zero"));
        }
        Ok(SicDetector {
            sc,
            sk,
            common_gain,
            private_gain,
        })
    }

    pub fn new(h_used: &DVector<C64>, p: &PrecoderMatrix, k: usize, sc: Constellation, sk: Constellation) -> Result<Self> {
        let (a, b) = stream_gains(h_used, p, k)?;
        Self::from_gains(a, b, sc, sk)
    }

    /// Picks the true channel or the receiver estimate of user `k`.
    pub fn for_user(
        ch: &ChannelRealization,
        p: &PrecoderMatrix,
        k: usize,
        mode: CsirMode,
        sc: Constellation,
        sk: Constellation,
    ) -> Result<Self> {
        let h = match mode {
            CsirMode::Perfect => ch.user(k),
            CsirMode::Imperfect => ch.user_estimate_rx(k),
        };
        Self::new(&h, p, k, sc, sk)
    }

    /// `y − (h_usedᴴ p_c)·ŝ_c`.
    pub fn cancel(&self, y: C64, common_index: usize) -> C64 {
        y - self.common_gain * self.sc.point(common_index)
    }

    pub fn detect(&self, y: C64) -> DetectionResult {
        let eq_c = self.common_gain.conj() / self.common_gain.norm_sqr();
        let common = self.sc.nearest_unchecked(y * eq_c);
        let r = self.cancel(y, common);
        let eq_k = self.private_gain.conj() / self.private_gain.norm_sqr();
        let private = self.sk.nearest_unchecked(r * eq_k);
        DetectionResult::hard(&self.sc, &self.sk, common, private)
    }
}

pub fn sic_detect(
    y: C64,
    h_used: &DVector<C64>,
    p: &PrecoderMatrix,
    k: usize,
    sc: &Constellation,
    sk: &Constellation,
) -> Result<DetectionResult> {
    if !(y.re.is_finite() && y.im.is_finite()) {
        return Err(Error::NonFinite("received sample"));
    }
    Ok(SicDetector::new(h_used, p, k, sc.clone(), sk.clone())?.detect(y))
}

/// Row and column classifiers for one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct DnnBank {
    pub row: Mlp,
    pub col: Mlp,
    pub constellation: Constellation,
}

impl DnnBank {
    pub fn new(purpose: DetectorPurpose, target: Modulation, common_bits: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(DnnBank {
            row: build_arch(purpose, target, common_bits, rng)?,
            col: build_arch(purpose, target, common_bits, rng)?,
            constellation: Constellation::new(target),
        })
    }

    pub fn count_params(&self) -> usize {
        self.row.count_params() + self.col.count_params()
    }

    /// Argmax symbol and soft bits for one feature vector.
    pub fn classify(&self, x: &[f64]) -> Result<(usize, SoftBits)> {
        let rp = self.row.forward(x)?;
        let cp = self.col.forward(x)?;
        let index = self.constellation.index_of(argmax(&rp), argmax(&cp));
        let soft = self.constellation.soft_bits(&rp, &cp)?;
        Ok((index, soft))
    }

    fn train(&mut self, features: &Dataset, labels: &[usize], spec_row: &TrainSpec, spec_col: &TrainSpec) -> Result<(f64, f64)> {
        let c = &self.constellation;
        let mut rows = features.clone();
        rows.labels = labels.iter().map(|&s| c.row_of(s)).collect();
        let mut cols = features.clone();
        cols.labels = labels.iter().map(|&s| c.col_of(s)).collect();
        self.row.train(&rows, spec_row)?;
        self.col.train(&cols, spec_col)?;
        Ok((
            self.row.accuracy(&rows.features, &rows.labels)?,
            self.col.accuracy(&cols.features, &cols.labels)?,
        ))
    }
}

/// Training knobs for [`MbdlReceiver::train`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MbdlTrainConfig {
    pub learning_rate: f64,
    /// Modulation of the highest-order private stream (sets the batch size).
    pub top_private: Modulation,
    /// Scale received samples to unit mean power before they enter the nets.
    pub normalize_inputs: bool,
    /// Overrides the default mini-batch size `max(T, 25·|S_1|)`, which is
    /// always the full set.
    pub batch_size: Option<usize>,
    pub seed: u64,
}

/// Training-set accuracy of the four networks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MbdlTrainReport {
    pub common_row: f64,
    pub common_col: f64,
    pub private_row: f64,
    pub private_col: f64,
}

impl MbdlTrainReport {
    pub fn min(&self) -> f64 {
        self.common_row.min(self.common_col).min(self.private_row).min(self.private_col)
    }
}

/// Learned receiver of one user: a common bank fed `[Re y, Im y]` and a
/// private bank fed `[Re y, Im y, b̂_c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MbdlReceiver {
    pub common: DnnBank,
    pub private: DnnBank,
    pub user: usize,
    input_scale: f64,
    trained: bool,
}

impl MbdlReceiver {
    pub fn build(user: usize, common: Modulation, private: Modulation, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mc = common.bits_per_symbol();
        Ok(MbdlReceiver {
            common: DnnBank::new(DetectorPurpose::CommonDetect, common, mc, &mut rng)?,
            private: DnnBank::new(DetectorPurpose::IcPrivateDetect, private, mc, &mut rng)?,
            user,
            input_scale: 1.0,
            trained: false,
        })
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn count_params(&self) -> usize {
        self.common.count_params() + self.private.count_params()
    }

    fn common_features(&self, y: C64) -> [f64; 2] {
        [y.re * self.input_scale, y.im * self.input_scale]
    }

    fn private_features(&self, y: C64, common_bits: &[u8], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.common_features(y));
        out.extend(common_bits.iter().map(|&b| f64::from(b)));
    }

    /// Trains all four networks. The private bank sees the true common bits
    /// (teacher forcing); at detection time it gets the detected ones.
    pub fn train(&mut self, set: &LabeledTrainingSet, cfg: &MbdlTrainConfig) -> Result<MbdlTrainReport> {
        if set.is_empty() {
            return Err(Error::Empty("training set"));
        }
        let sc = self.common.constellation.clone();
        let sk = self.private.constellation.clone();
        set.check_labels(&sc, &sk)?;

        self.input_scale = if cfg.normalize_inputs {
            let power = set.received.iter().map(|y| y.norm_sqr()).sum::<f64>() / set.len() as f64;
            if power > 0.0 {
                power.sqrt().recip()
            } else {
                1.0
            }
        } else {
            1.0
        };

        let mut common_x = Dataset::new(2);
        let mut private_x = Dataset::new(2 + sc.bits_per_symbol());
        let mut buf = Vec::new();
        for (&y, &c) in set.received.iter().zip(&set.common) {
            common_x.push(&self.common_features(y), 0);
            self.private_features(y, &sc.bits_of(c), &mut buf);
            private_x.push(&buf, 0);
        }

        let t = set.len();
        let spec = |target: Modulation, salt: u64| {
            let mut spec = TrainSpec::for_stream(target, t, cfg.top_private, cfg.seed.wrapping_add(salt))
                .with_learning_rate(cfg.learning_rate);
            if let Some(b) = cfg.batch_size {
                spec.batch_size = b;
            }
            spec
        };
        let (common_row, common_col) = self.common.train(
            &common_x,
            &set.common,
            &spec(sc.modulation(), 1),
            &spec(sc.modulation(), 2),
        )?;
        let (private_row, private_col) = self.private.train(
            &private_x,
            &set.private,
            &spec(sk.modulation(), 3),
            &spec(sk.modulation(), 4),
        )?;
        self.trained = true;
        Ok(MbdlTrainReport {
            common_row,
            common_col,
            private_row,
            private_col,
        })
    }

    pub fn detect(&self, y: C64) -> Result<DetectionResult> {
        if !self.trained {
            return Err(Error::Untrained);
        }
        if !(y.re.is_finite() && y.im.is_finite()) {
            return Err(Error::NonFinite("received sample"));
        }
        let sc = &self.common.constellation;
        let (common_index, common_soft) = self.common.classify(&self.common_features(y))?;
        let common_bits = sc.bits_of(common_index);
        let mut x = Vec::with_capacity(2 + common_bits.len());
        self.private_features(y, &common_bits, &mut x);
        let (private_index, private_soft) = self.private.classify(&x)?;
        Ok(DetectionResult {
            common_index,
            common_bits,
            private_bits: self.private.constellation.bits_of(private_index),
            private_index,
            common_soft,
            private_soft,
        })
    }
}
