//! One fading block seen by user 1: MAP, SIC and the learned receiver side by
//! side on the same received samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rsma_mbdl::channel::{draw_channel, synthesize_block, Noise, SystemConfig};
use rsma_mbdl::modem::{Constellation, Modulation};
use rsma_mbdl::precoding::{build_precoder, PrecoderStrategy};
use rsma_mbdl::receivers::{CsirMode, MapDetector, MbdlReceiver, MbdlTrainConfig, SicDetector};
use rsma_mbdl::training::{self, LabeledTrainingSet, Pattern};
use rsma_mbdl::C64;

fn main() -> rsma_mbdl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pt = 10f64.powf(18.0 / 10.0);
    let cfg = SystemConfig::new(4, 2, pt, Modulation::Qpsk, Modulation::Qpsk);
    let ch = draw_channel(&cfg, &mut rng)?;
    let p = build_precoder(&ch.h_hat, pt, 0.5, 1.0, PrecoderStrategy::SvdRzf)?;

    let mods = [Modulation::Qpsk; 3];
    let q = Constellation::new(Modulation::Qpsk);
    let blocks = training::generate(Pattern::Minimal, &mods, 20, &mut rng)?;
    let train = training::concat(&blocks);
    let t = train[0].len();
    let n = 5000;
    let data: Vec<Vec<usize>> = (0..3).map(|_| (0..n).map(|_| rng.random_range(0..4)).collect()).collect();
    let streams: Vec<Vec<C64>> = train
        .iter()
        .zip(&data)
        .map(|(tr, da)| tr.iter().chain(da).map(|&i| q.point(i)).collect())
        .collect();
    let y = synthesize_block(&ch.h, &p, &streams, Noise::Awgn(&cfg.noise_power), &mut rng)?;
    let (y_train, y_data) = y[0].split_at(t);

    let map = MapDetector::new(&ch.user(0), &p, 0, q.clone(), q.clone())?;
    let sic_p = SicDetector::for_user(&ch, &p, 0, CsirMode::Perfect, q.clone(), q.clone())?;
    let sic_i = SicDetector::for_user(&ch, &p, 0, CsirMode::Imperfect, q.clone(), q.clone())?;

    // the default schedule (one full-set step per epoch) and a mini-batch variant
    let set = LabeledTrainingSet::new(y_train.to_vec(), train[0].clone(), train[1].clone())?;
    let mut mbdl = Vec::new();
    for batch_size in [None, Some(64)] {
        let mut rx = MbdlReceiver::build(0, Modulation::Qpsk, Modulation::Qpsk, 3)?;
        let report = rx.train(
            &set,
            &MbdlTrainConfig {
                learning_rate: 0.01,
                top_private: Modulation::Qpsk,
                normalize_inputs: false,
                batch_size,
                seed: 3,
            },
        )?;
        println!("MBDL batch {batch_size:?}: {t} pilots, lowest training accuracy {:.3}", report.min());
        mbdl.push(rx);
    }

    let mut errors = [[0usize; 2]; 5];
    for (i, &y) in y_data.iter().enumerate() {
        let truth = (data[0][i], data[1][i]);
        let results = [
            map.detect(y),
            sic_p.detect(y),
            sic_i.detect(y),
            mbdl[0].detect(y)?,
            mbdl[1].detect(y)?,
        ];
        for (e, r) in errors.iter_mut().zip(&results) {
            e[0] += usize::from(r.common_index != truth.0);
            e[1] += usize::from(r.private_index != truth.1);
        }
    }
    for (name, e) in [
        "MAP",
        "SIC (perfect CSIR)",
        "SIC (imperfect CSIR)",
        "MBDL (full batch)",
        "MBDL (batch 64)",
    ].iter().zip(errors) {
        println!(
            "{name:22} SER common {:.4}  private {:.4}",
            e[0] as f64 / n as f64,
            e[1] as f64 / n as f64
        );
    }
    Ok(())
}
