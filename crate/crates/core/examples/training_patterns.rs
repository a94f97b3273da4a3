//! Pilot patterns, their overhead, and receiver-side interpolation from
//! corner-only pilots.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rsma_mbdl::modem::{Constellation, Modulation};
use rsma_mbdl::training::{self, interpolate_at_receiver, LabeledTrainingSet, Pattern};
use rsma_mbdl::C64;

fn main() -> rsma_mbdl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let data = 256;
    for mods in [
        vec![Modulation::Qpsk; 3],
        vec![Modulation::Qpsk, Modulation::Qam16, Modulation::Qam16],
    ] {
        println!("streams {mods:?}");
        for pattern in [Pattern::Extensive, Pattern::Minimal, Pattern::Interpolating] {
            for blocks in [5, 10, 20] {
                let b = training::generate(pattern, &mods, blocks, &mut rng)?;
                let t: usize = b.iter().map(|b| b.len()).sum();
                println!(
                    "  {pattern:13} x{blocks:2}: T = {t:5}, overhead {:6.2}%",
                    training::overhead(t, t + data)?
                );
            }
        }
    }

    // corner pilots through an unknown gain pair, then interpolated to the full grid
    let sc = Constellation::new(Modulation::Qpsk);
    let sk = Constellation::new(Modulation::Qam16);
    let (a, b) = (C64::new(1.6, 0.4), C64::new(0.3, -0.5));
    let mut pilots = LabeledTrainingSet::default();
    for c in 0..sc.len() {
        for &k in &sk.corners() {
            pilots.received.push(a * sc.point(c) + b * sk.point(k));
            pilots.common.push(c);
            pilots.private.push(k);
        }
    }
    let full = interpolate_at_receiver(&pilots, &sc, &sk, 0, &mut rng)?;
    let worst = full
        .received
        .iter()
        .zip(full.common.iter().zip(&full.private))
        .map(|(y, (&c, &k))| (y - (a * sc.point(c) + b * sk.point(k))).norm())
        .fold(0.0, f64::max);
    println!(
        "{} corner pilots -> {} synthetic points, max error {worst:.1e}",
        pilots.len(),
        full.len()
    );
    Ok(())
}
