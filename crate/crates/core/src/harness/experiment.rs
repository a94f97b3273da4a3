//! Monte Carlo SER and overhead sweeps.
//!
//! Every (SNR point, trial) pair owns its own ChaCha8 stream, so results do
//! not depend on how trials are spread over worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_channel, synthesize_block, ChannelRealization, Noise};
use crate::error::Error;
use crate::modem::{Constellation, Modulation};
use crate::precoding::{build_precoder, PrecoderMatrix};
use crate::receivers::{CsirMode, MapDetector, MbdlReceiver, MbdlTrainConfig, ReceiverKind, SicDetector};
use crate::training::{self, interpolate_at_receiver, LabeledTrainingSet, Pattern};
use crate::{Result, C64};

use super::Scenario;

/// RNG of one trial at one SNR point.
pub fn trial_rng(seed: u64, snr_index: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((snr_index as u64) << 32) | trial as u64);
    rng
}

/// Error count of one stream at one receiver in one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Count {
    common: u64,
    private: u64,
}

#[derive(Debug, Clone)]
enum Outcome {
    Counted(Count),
    /// The receiver could not run on this realization (zero equalizer gain
    /// or no usable channel estimate).
    Excluded,
}

struct TrialResult {
    /// `outcomes[receiver][user]`, in scenario order.
    outcomes: Vec<Vec<Outcome>>,
    training_symbols: usize,
    /// Lowest MBDL training accuracy over the trial's users, if trained.
    train_accuracy: Option<f64>,
}

/// One line of the SER table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerRow {
    pub receiver: ReceiverKind,
    pub snr_db: f64,
    /// `common_k` or `private_k`, with `k` the 1-based user.
    pub stream: String,
    pub ser: f64,
    /// Trials that contributed symbols.
    pub trials: usize,
    /// Trials skipped because the receiver could not operate.
    pub excluded: usize,
    pub errors: u64,
    pub symbols: u64,
    pub overhead_pct: f64,
    pub seed: u64,
    /// `sqrt(ser(1-ser)/symbols)`.
    pub binomial_std_err: f64,
    /// Standard error of the per-trial SER mean.
    pub trial_std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerReport {
    pub rows: Vec<SerRow>,
    /// Lowest MBDL training-set accuracy seen, per SNR point.
    pub min_train_accuracy: Vec<Option<f64>>,
}

impl SerReport {
    pub fn find(&self, receiver: ReceiverKind, snr_db: f64, stream: &str) -> Option<&SerRow> {
        self.rows
            .iter()
            .find(|r| r.receiver == receiver && r.snr_db == snr_db && r.stream == stream)
    }
}

/// Training symbols sent per trial and the resulting overhead, per SNR point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadRow {
    pub snr_db: f64,
    pub pattern: Pattern,
    pub mean_training_symbols: f64,
    pub data_symbols: usize,
    pub overhead_pct: f64,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Contract(format!("thread pool: {e}")))
}

fn random_indices(order: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..order)).collect()
}

fn count_errors<F>(y: &[C64], common: &[usize], private: &[usize], mut detect: F) -> Result<Count>
where
    F: FnMut(C64) -> Result<(usize, usize)>,
{
    let mut count = Count::default();
    for ((&y, &c), &p) in y.iter().zip(common).zip(private) {
        let (ch, ph) = detect(y)?;
        count.common += u64::from(ch != c);
        count.private += u64::from(ph != p);
    }
    Ok(count)
}

struct TrialContext<'a> {
    sc: &'a Scenario,
    mods: Vec<Modulation>,
    constellations: Vec<Constellation>,
    users: Vec<usize>,
}

impl TrialContext<'_> {
    fn run(&self, snr_index: usize, trial: usize) -> Result<TrialResult> {
        let sc = self.sc;
        let snr_db = sc.snr_db[snr_index];
        let sys = sc.system_config(snr_db)?;
        let mut rng = trial_rng(sc.seed, snr_index, trial);

        let ch = draw_channel(&sys, &mut rng)?;
        let nn_seed: u64 = rng.random();
        let p = match build_precoder(
            &ch.h_hat,
            sys.pt,
            sc.precoder.common_fraction,
            sc.noise_power,
            sc.precoder.strategy,
        ) {
            Ok(p) => p,
            // e.g. an all-zero estimate once σ²_e reaches σ²_k
            Err(Error::DegenerateChannel(_)) => {
                let per_user = vec![Outcome::Excluded; self.users.len()];
                return Ok(TrialResult {
                    outcomes: vec![per_user; sc.receivers.len()],
                    training_symbols: sc.training.blocks * training::block_size(sc.training.pattern, &self.mods)?,
                    train_accuracy: None,
                });
            }
            Err(e) => return Err(e),
        };

        let blocks = training::generate(sc.training.pattern, &self.mods, sc.training.blocks, &mut rng)?;
        let train_idx = training::concat(&blocks);
        let t = train_idx[0].len();
        let data_idx: Vec<Vec<usize>> = self
            .mods
            .iter()
            .map(|m| random_indices(m.order(), sc.data_symbols, &mut rng))
            .collect();

        let streams: Vec<Vec<C64>> = self
            .constellations
            .iter()
            .zip(train_idx.iter().zip(&data_idx))
            .map(|(c, (tr, da))| tr.iter().chain(da).map(|&i| c.point(i)).collect())
            .collect();
        let noise = vec![sc.noise_power; sc.k];
        let y = synthesize_block(&ch.h, &p, &streams, Noise::Awgn(&noise), &mut rng)?;

        let mut outcomes = Vec::with_capacity(sc.receivers.len());
        let mut train_accuracy: Option<f64> = None;
        for &kind in &sc.receivers {
            let mut per_user = Vec::with_capacity(self.users.len());
            for &u in &self.users {
                let out = self.evaluate(
                    kind,
                    u,
                    &ch,
                    &p,
                    &y[u],
                    t,
                    &train_idx,
                    &data_idx,
                    nn_seed,
                    &mut train_accuracy,
                    &mut rng,
                )?;
                per_user.push(out);
            }
            outcomes.push(per_user);
        }
        Ok(TrialResult {
            outcomes,
            training_symbols: t,
            train_accuracy,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn evaluate(
        &self,
        kind: ReceiverKind,
        u: usize,
        ch: &ChannelRealization,
        p: &PrecoderMatrix,
        y: &[C64],
        t: usize,
        train_idx: &[Vec<usize>],
        data_idx: &[Vec<usize>],
        nn_seed: u64,
        train_accuracy: &mut Option<f64>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Outcome> {
        let scon = &self.constellations[0];
        let kcon = &self.constellations[u + 1];
        let (y_train, y_data) = y.split_at(t);
        let (dc, dp) = (&data_idx[0], &data_idx[u + 1]);
        let count = match kind {
            ReceiverKind::Map => {
                let det = MapDetector::new(&ch.user(u), p, u, scon.clone(), kcon.clone())?;
                count_errors(y_data, dc, dp, |y| {
                    let r = det.detect(y);
                    Ok((r.common_index, r.private_index))
                })?
            }
            ReceiverKind::SicPerfect | ReceiverKind::SicImperfect => {
                let mode = if kind == ReceiverKind::SicPerfect {
                    CsirMode::Perfect
                } else {
                    CsirMode::Imperfect
                };
                let det = match SicDetector::for_user(ch, p, u, mode, scon.clone(), kcon.clone()) {
                    Ok(d) => d,
                    Err(Error::EqualizerSingular(_)) => return Ok(Outcome::Excluded),
                    Err(e) => return Err(e),
                };
                count_errors(y_data, dc, dp, |y| {
                    let r = det.detect(y);
                    Ok((r.common_index, r.private_index))
                })?
            }
            ReceiverKind::Mbdl => {
                let sc = self.sc;
                let mut set = LabeledTrainingSet::new(
                    y_train.to_vec(),
                    train_idx[0].clone(),
                    train_idx[u + 1].clone(),
                )?;
                if sc.training.pattern == Pattern::Interpolating {
                    set = interpolate_at_receiver(&set, scon, kcon, sc.training.jitter_replicas, rng)?;
                }
                let seed = nn_seed.wrapping_add(16 * u as u64);
                let mut rx = MbdlReceiver::build(u, scon.modulation(), kcon.modulation(), seed)?;
                let cfg = MbdlTrainConfig {
                    learning_rate: sc.nn.learning_rate,
                    top_private: self.mods[training::top_private_stream(&self.mods)],
                    normalize_inputs: sc.nn.normalize_inputs,
                    batch_size: sc.nn.batch_size,
                    seed,
                };
                let report = rx.train(&set, &cfg)?;
                let acc = report.min();
                *train_accuracy = Some(train_accuracy.map_or(acc, |a| a.min(acc)));
                count_errors(y_data, dc, dp, |y| {
                    let r = rx.detect(y)?;
                    Ok((r.common_index, r.private_index))
                })?
            }
        };
        Ok(Outcome::Counted(count))
    }
}

fn std_err(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Runs the SER sweep described by `sc`.
pub fn run_ser_experiment(sc: &Scenario) -> Result<SerReport> {
    sc.validate()?;
    let mods = sc.stream_modulations()?;
    let ctx = TrialContext {
        sc,
        constellations: mods.iter().map(|&m| Constellation::new(m)).collect(),
        mods,
        users: sc.evaluated_users(),
    };
    let pool = pool(sc.workers)?;

    let mut rows = Vec::new();
    let mut min_train_accuracy = Vec::with_capacity(sc.snr_db.len());
    for (si, &snr_db) in sc.snr_db.iter().enumerate() {
        let results: Vec<TrialResult> = pool.install(|| {
            (0..sc.trials)
                .into_par_iter()
                .map(|trial| ctx.run(si, trial))
                .collect::<Result<Vec<_>>>()
        })?;

        min_train_accuracy.push(
            results
                .iter()
                .filter_map(|r| r.train_accuracy)
                .fold(None, |acc: Option<f64>, a| Some(acc.map_or(a, |b| b.min(a)))),
        );
        let t = results[0].training_symbols;
        let mbdl_overhead = training::overhead(t, t + sc.data_symbols)?;

        for (ri, &kind) in sc.receivers.iter().enumerate() {
            let overhead_pct = if kind == ReceiverKind::Mbdl { mbdl_overhead } else { 0.0 };
            for (ui, &u) in ctx.users.iter().enumerate() {
                for common in [true, false] {
                    let mut errors = 0u64;
                    let mut per_trial = Vec::new();
                    let mut excluded = 0;
                    for r in &results {
                        match &r.outcomes[ri][ui] {
                            Outcome::Counted(c) => {
                                let e = if common { c.common } else { c.private };
                                errors += e;
                                per_trial.push(e as f64 / sc.data_symbols as f64);
                            }
                            Outcome::Excluded => excluded += 1,
                        }
                    }
                    let trials = per_trial.len();
                    let symbols = (trials * sc.data_symbols) as u64;
                    let ser = if symbols > 0 { errors as f64 / symbols as f64 } else { f64::NAN };
                    let binomial_std_err = if symbols > 0 {
                        (ser * (1.0 - ser) / symbols as f64).sqrt()
                    } else {
                        f64::NAN
                    };
                    rows.push(SerRow {
                        receiver: kind,
                        snr_db,
                        stream: format!("{}_{}", if common { "common" } else { "private" }, u + 1),
                        ser,
                        trials,
                        excluded,
                        errors,
                        symbols,
                        overhead_pct,
                        seed: sc.seed,
                        binomial_std_err,
                        trial_std_err: std_err(&per_trial),
                    });
                }
            }
        }
    }
    Ok(SerReport {
        rows,
        min_train_accuracy,
    })
}

/// Mean training length per trial and the pilot overhead against
/// `sc.data_symbols` data symbols, for every SNR point.
pub fn run_overhead_experiment(sc: &Scenario) -> Result<Vec<OverheadRow>> {
    sc.validate()?;
    let mods = sc.stream_modulations()?;
    sc.snr_db
        .iter()
        .enumerate()
        .map(|(si, &snr_db)| {
            let mut total = 0usize;
            for trial in 0..sc.trials {
                let mut rng = trial_rng(sc.seed, si, trial);
                let blocks = training::generate(sc.training.pattern, &mods, sc.training.blocks, &mut rng)?;
                total += blocks.iter().map(|b| b.len()).sum::<usize>();
            }
            let mean = total as f64 / sc.trials as f64;
            Ok(OverheadRow {
                snr_db,
                pattern: sc.training.pattern,
                mean_training_symbols: mean,
                data_symbols: sc.data_symbols,
                overhead_pct: 100.0 * mean / (mean + sc.data_symbols as f64),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Scenario {
        let mut sc = Scenario::new(4, 2, vec![10.0]);
        sc.trials = 4;
        sc.data_symbols = 64;
        sc.seed = 5;
        sc
    }

    #[test]
    fn report_shape() {
        let sc = small();
        let rep = run_ser_experiment(&sc).unwrap();
        // 4 receivers x 2 users x 2 streams
        assert_eq!(rep.rows.len(), 16);
        let r = rep.find(ReceiverKind::Mbdl, 10.0, "private_2").unwrap();
        assert_eq!(r.symbols + 64 * r.excluded as u64, 4 * 64);
        // minimal QPSK/QPSK: 16 symbols per block, 20 blocks
        assert!((r.overhead_pct - 100.0 * 320.0 / 384.0).abs() < 1e-9);
        assert_eq!(rep.find(ReceiverKind::Map, 10.0, "common_1").unwrap().overhead_pct, 0.0);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut a = small();
        a.workers = 1;
        let mut b = small();
        b.workers = 3;
        assert_eq!(run_ser_experiment(&a).unwrap(), run_ser_experiment(&b).unwrap());
    }

    #[test]
    fn overhead_rows() {
        let mut sc = small();
        sc.training.pattern = Pattern::Interpolating;
        sc.training.blocks = 4;
        sc.data_symbols = 256;
        let rows = run_overhead_experiment(&sc).unwrap();
        assert_eq!(rows[0].mean_training_symbols, 16.0);
        assert!((rows[0].overhead_pct - 100.0 * 16.0 / 272.0).abs() < 1e-12);
    }

    #[test]
    fn zero_estimate_trials_are_excluded() {
        // Pt = 1 gives σ²_e = σ²_k, so Ĥ is identically zero
        let mut sc = small();
        sc.snr_db = vec![0.0, 10.0];
        let rep = run_ser_experiment(&sc).unwrap();
        let r = rep.find(ReceiverKind::Map, 0.0, "common_1").unwrap();
        assert_eq!((r.trials, r.excluded), (0, 4));
        assert!(r.ser.is_nan());
        assert_eq!(rep.find(ReceiverKind::Map, 10.0, "common_1").unwrap().trials, 4);
    }

    #[test]
    fn trial_streams_differ() {
        let a: u64 = trial_rng(1, 0, 0).random();
        let b: u64 = trial_rng(1, 0, 1).random();
        let c: u64 = trial_rng(1, 1, 0).random();
        assert!(a != b && a != c && b != c);
        assert_eq!(a, trial_rng(1, 0, 0).random::<u64>());
    }
}
