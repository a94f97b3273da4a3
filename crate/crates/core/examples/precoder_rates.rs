//! Channel draws with imperfect CSIT, the rate-splitting precoder, and the
//! resulting per-stream rates across SNR.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rsma_mbdl::channel::{draw_channel, SystemConfig};
use rsma_mbdl::modem::Modulation;
use rsma_mbdl::precoding::{build_precoder, rate_report, PrecoderStrategy};

fn main() -> rsma_mbdl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    println!("snr_db  sigma_e2  common  private_1  private_2  sum");
    // at 0 dB σ²_e reaches σ²_k and the estimate carries no information
    for snr_db in [3.0, 6.0, 10.0, 15.0, 20.0, 25.0] {
        let pt = 10f64.powf(snr_db / 10.0);
        let cfg = SystemConfig::new(4, 2, pt, Modulation::Qpsk, Modulation::Qpsk);
        let draws = 200;
        let mut acc = [0.0; 4];
        for _ in 0..draws {
            let ch = draw_channel(&cfg, &mut rng)?;
            let p = build_precoder(&ch.h_hat, pt, 0.5, 1.0, PrecoderStrategy::SvdRzf)?;
            let r = rate_report(&ch.h, &p, &cfg.noise_power)?;
            acc[0] += r.common_rate;
            acc[1] += r.rate_private[0];
            acc[2] += r.rate_private[1];
            acc[3] += r.sum_rate();
        }
        let [c, p1, p2, s] = acc.map(|v| v / draws as f64);
        println!(
            "{snr_db:6.1}  {:8.4}  {c:6.3}  {p1:9.3}  {p2:9.3}  {s:5.3}",
            cfg.error_powers()?[0]
        );
    }
    Ok(())
}
