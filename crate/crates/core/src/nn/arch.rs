use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Activation, Mlp};
use crate::modem::Modulation;
use crate::Result;

/// Role of a network inside a receiver bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorPurpose {
    /// Row or column of the common symbol from `[Re y, Im y]`.
    CommonDetect,
    /// Row or column of the private symbol from `[Re y, Im y, b̂_c]`.
    IcPrivateDetect,
}

/// Layer widths and activations for a detector of `target`.
///
/// Hidden widths grow by 5 per modulation step, starting at 10 (common) or
/// 20 (private). 256QAM gets a third hidden layer. The first hidden layer is
/// sigmoid, later hidden layers ReLU.
pub fn layout(purpose: DetectorPurpose, target: Modulation, common_bits: usize) -> (Vec<usize>, Vec<Activation>) {
    let step = target.bits_per_symbol() / 2 - 1;
    let (input, width) = match purpose {
        DetectorPurpose::CommonDetect => (2, 10 + 5 * step),
        DetectorPurpose::IcPrivateDetect => (2 + common_bits, 20 + 5 * step),
    };
    let hidden = if target == Modulation::Qam256 { 3 } else { 2 };
    let mut sizes = vec![input];
    sizes.extend(std::iter::repeat_n(width, hidden));
    sizes.push(target.side());
    let mut acts = vec![Activation::Sigmoid];
    acts.extend(std::iter::repeat_n(Activation::Relu, hidden - 1));
    acts.push(Activation::Softmax);
    (sizes, acts)
}

/// A freshly initialized detector network.
pub fn build_arch<R: Rng + ?Sized>(
    purpose: DetectorPurpose,
    target: Modulation,
    common_bits: usize,
    rng: &mut R,
) -> Result<Mlp> {
    let (sizes, acts) = layout(purpose, target, common_bits);
    Mlp::new(&sizes, &acts, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn net(p: DetectorPurpose, m: Modulation, mc: usize) -> Mlp {
        build_arch(p, m, mc, &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
    }

    #[test]
    fn common_layouts() {
        let m = net(DetectorPurpose::CommonDetect, Modulation::Qpsk, 2);
        assert_eq!(m.layer_sizes(), vec![2, 10, 10, 2]);
        assert_eq!(m.count_params(), 162);
        let m = net(DetectorPurpose::CommonDetect, Modulation::Qam256, 2);
        assert_eq!(m.layer_sizes(), vec![2, 25, 25, 25, 16]);
        assert_eq!(m.count_params(), 1791);
        assert_eq!(m.count_rmps(), 1700);
    }

    #[test]
    fn private_layouts() {
        let m = net(DetectorPurpose::IcPrivateDetect, Modulation::Qpsk, 2);
        assert_eq!(m.count_params(), 522 + 20 * 2);
        let m = net(DetectorPurpose::IcPrivateDetect, Modulation::Qam16, 2);
        assert_eq!(m.layer_sizes(), vec![4, 25, 25, 4]);
        let m = net(DetectorPurpose::IcPrivateDetect, Modulation::Qam64, 6);
        assert_eq!(m.count_params(), 1268 + 30 * 6);
        assert_eq!(m.count_rmps(), 1200 + 30 * 6);
        let acts: Vec<_> = net(DetectorPurpose::IcPrivateDetect, Modulation::Qam256, 4)
            .layers()
            .iter()
            .map(|l| l.activation)
            .collect();
        assert_eq!(
            acts,
            [Activation::Sigmoid, Activation::Relu, Activation::Relu, Activation::Softmax]
        );
    }
}
