//! Scoring decode outcomes: credited bits over modulated symbols, summed
//! over blocks. A block that fails to decode credits nothing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rsma_mbdl::harness::{compute_throughput, BlockOutcome};
use rsma_mbdl::training::overhead;

fn main() -> rsma_mbdl::Result<()> {
    let s = 256u64;
    // two users with QPSK private streams; user 1 also owns the QPSK common
    // stream's message. Each block decodes with the given probability.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for success in [1.0, 0.9, 0.5, 0.1] {
        let blocks: Vec<BlockOutcome> = (0..1000)
            .map(|_| BlockOutcome {
                credited_bits: vec![
                    if rng.random_bool(success) { 4 * s } else { 0 },
                    if rng.random_bool(success) { 2 * s } else { 0 },
                ],
                symbols: s,
            })
            .collect();
        println!("block success {success:.1}: {:.3} bit/s/Hz", compute_throughput(&blocks)?);
    }

    // pilots are not part of S; their cost shows up as overhead instead
    for t in [20, 40, 80] {
        println!("T = {t:2} pilots: overhead {:.2}%", overhead(t, t + s as usize)?);
    }
    Ok(())
}
