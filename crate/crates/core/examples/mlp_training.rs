//! The network engine on its own: train a small classifier, check it, and
//! round-trip it through the text format.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rsma_mbdl::nn::{Activation, Dataset, Mlp, TrainSpec};

fn main() -> rsma_mbdl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    // three noisy clusters on a circle
    let mut data = Dataset::new(2);
    for i in 0..300 {
        let label = i % 3;
        let angle = label as f64 * 2.0 * std::f64::consts::PI / 3.0;
        let x = [
            2.0 * angle.cos() + rng.random_range(-0.4..0.4),
            2.0 * angle.sin() + rng.random_range(-0.4..0.4),
        ];
        data.push(&x, label);
    }

    let acts = [Activation::Sigmoid, Activation::Relu, Activation::Softmax];
    let mut net = Mlp::new(&[2, 12, 12, 3], &acts, &mut rng)?;
    let mut spec = TrainSpec::for_stream(rsma_mbdl::modem::Modulation::Qam16, data.len(), rsma_mbdl::modem::Modulation::Qpsk, 1);
    spec.batch_size = 32;
    let log = net.train(&data, &spec)?;
    println!(
        "{} epochs, {} Adam steps, loss {:.4} -> {:.4}",
        spec.epochs,
        log.steps,
        log.epoch_loss[0],
        log.epoch_loss.last().copied().unwrap_or(f64::NAN)
    );
    println!("training accuracy {:.3}", net.accuracy(&data.features, &data.labels)?);

    let text = net.to_text();
    let back = Mlp::from_text(&text)?;
    assert_eq!(back, net);
    println!("{} parameters, {} bytes as text", net.count_params(), text.len());
    Ok(())
}
