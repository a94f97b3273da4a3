//! Gray-mapped square QAM: mapping, hard decisions and soft bits.

use rsma_mbdl::modem::{Constellation, Modulation};
use rsma_mbdl::C64;

fn main() -> rsma_mbdl::Result<()> {
    let qam = Constellation::new(Modulation::Qam16);
    let bits = [1, 0, 1, 1, 0, 0, 1, 0];
    let symbols = qam.modulate(&bits)?;
    println!("{bits:?} -> {symbols:.3?}");

    let noisy: Vec<C64> = symbols.iter().map(|s| s + C64::new(0.08, -0.05)).collect();
    println!("hard decisions: {:?}", qam.demodulate(&noisy)?);

    // row/column class probabilities, as a DNN bank would output them
    let rows = [0.05, 0.80, 0.10, 0.05];
    let cols = [0.70, 0.20, 0.05, 0.05];
    let soft = qam.soft_bits(&rows, &cols)?;
    println!("P(bit = 1): {:.3?}", soft.probs);
    println!("LPR:        {:.3?}", soft.lprs());
    println!("hard:       {:?}", soft.hard_bits());
    Ok(())
}
