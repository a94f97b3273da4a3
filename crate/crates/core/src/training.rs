//! Known-symbol training patterns for the learned receiver, receiver-side
//! interpolation of the corner-only pattern, and overhead accounting.
//!
//! Streams are indexed `0` (common) and `1..=K` (private). A block stores,
//! per stream, the sequence of symbol indices transmitted during that block.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::modem::{Constellation, Modulation};
use crate::{Error, Result, C64};

/// Largest extensive block accepted.
pub const EXTENSIVE_LIMIT: u128 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    /// Every joint combination of all `K+1` streams.
    Extensive,
    /// Every (common, top private) pair; other private streams random.
    Minimal,
    /// Four symbols, private streams on constellation corners.
    Interpolating,
}

impl Pattern {
    pub fn name(self) -> &'static str {
        match self {
            Pattern::Extensive => "extensive",
            Pattern::Minimal => "minimal",
            Pattern::Interpolating => "interpolating",
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "extensive" => Ok(Pattern::Extensive),
            "minimal" => Ok(Pattern::Minimal),
            "interpolating" => Ok(Pattern::Interpolating),
            other => Err(Error::config("training.pattern", format!("unknown pattern `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingBlock {
    pub pattern: Pattern,
    /// `symbols[stream][t]`.
    pub symbols: Vec<Vec<usize>>,
}

impl TrainingBlock {
    pub fn len(&self) -> usize {
        self.symbols.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The symbol vector `[s_c, s_1, …, s_K]` sent at time `t`.
    pub fn column(&self, t: usize) -> Vec<usize> {
        self.symbols.iter().map(|s| s[t]).collect()
    }
}

fn check_streams(mods: &[Modulation]) -> Result<()> {
    if mods.len() < 2 {
        return Err(Error::Contract("need a common and at least one private stream".into()));
    }
    Ok(())
}

/// Stream index (`1..=K`) of the private stream with the highest order;
/// ties go to the lowest user index.
pub fn top_private_stream(mods: &[Modulation]) -> usize {
    let mut best = 1;
    for (j, m) in mods.iter().enumerate().skip(2) {
        if m.order() > mods[best].order() {
            best = j;
        }
    }
    best
}

/// Full Cartesian product in mixed-radix order, last stream fastest.
pub fn gen_extensive(mods: &[Modulation]) -> Result<TrainingBlock> {
    check_streams(mods)?;
    let mut size: u128 = 1;
    for m in mods {
        size = size.saturating_mul(m.order() as u128);
        if size > EXTENSIVE_LIMIT {
            return Err(Error::PatternTooLarge(
                mods.iter().map(|m| m.order() as u128).product(),
            ));
        }
    }
    let size = size as usize;
    let mut symbols = vec![Vec::with_capacity(size); mods.len()];
    for idx in 0..size {
        let mut rest = idx;
        for (j, m) in mods.iter().enumerate().rev() {
            symbols[j].push(rest % m.order());
            rest /= m.order();
        }
    }
    Ok(TrainingBlock {
        pattern: Pattern::Extensive,
        symbols,
    })
}

/// Every (common, top private) pair once, common-major; remaining private
/// streams uniformly random.
pub fn gen_minimal<R: Rng + ?Sized>(mods: &[Modulation], rng: &mut R) -> Result<TrainingBlock> {
    check_streams(mods)?;
    let top = top_private_stream(mods);
    let (nc, n1) = (mods[0].order(), mods[top].order());
    let size = nc * n1;
    let mut symbols: Vec<Vec<usize>> = vec![Vec::with_capacity(size); mods.len()];
    for c in 0..nc {
        for s1 in 0..n1 {
            symbols[0].push(c);
            symbols[top].push(s1);
        }
    }
    for (j, m) in mods.iter().enumerate().skip(1) {
        if j != top {
            symbols[j] = (0..size).map(|_| rng.random_range(0..m.order())).collect();
        }
    }
    Ok(TrainingBlock {
        pattern: Pattern::Minimal,
        symbols,
    })
}

/// Four symbols. The common stream holds symbol `block_index mod |S_c|`
/// throughout the block, so `|S_c|` consecutive blocks cover every common
/// symbol; each private stream sends its four corners in random order.
pub fn gen_interpolating<R: Rng + ?Sized>(
    mods: &[Modulation],
    block_index: usize,
    rng: &mut R,
) -> Result<TrainingBlock> {
    check_streams(mods)?;
    let mut symbols = Vec::with_capacity(mods.len());
    symbols.push(vec![block_index % mods[0].order(); 4]);
    for &m in &mods[1..] {
        let mut corners = Constellation::new(m).corners().to_vec();
        corners.shuffle(rng);
        symbols.push(corners);
    }
    Ok(TrainingBlock {
        pattern: Pattern::Interpolating,
        symbols,
    })
}

/// `blocks` consecutive training blocks of one pattern.
pub fn generate<R: Rng + ?Sized>(
    pattern: Pattern,
    mods: &[Modulation],
    blocks: usize,
    rng: &mut R,
) -> Result<Vec<TrainingBlock>> {
    (0..blocks)
        .map(|b| match pattern {
            Pattern::Extensive => gen_extensive(mods),
            Pattern::Minimal => gen_minimal(mods, rng),
            Pattern::Interpolating => gen_interpolating(mods, b, rng),
        })
        .collect()
}

/// Symbols per block of `pattern` for the given streams.
pub fn block_size(pattern: Pattern, mods: &[Modulation]) -> Result<usize> {
    check_streams(mods)?;
    match pattern {
        Pattern::Extensive => {
            let size: u128 = mods.iter().map(|m| m.order() as u128).product();
            if size > EXTENSIVE_LIMIT {
                Err(Error::PatternTooLarge(size))
            } else {
                Ok(size as usize)
            }
        }
        Pattern::Minimal => Ok(mods[0].order() * mods[top_private_stream(mods)].order()),
        Pattern::Interpolating => Ok(4),
    }
}

/// Concatenates blocks stream by stream.
pub fn concat(blocks: &[TrainingBlock]) -> Vec<Vec<usize>> {
    let streams = blocks.first().map_or(0, |b| b.symbols.len());
    let mut out = vec![Vec::new(); streams];
    for b in blocks {
        for (o, s) in out.iter_mut().zip(&b.symbols) {
            o.extend_from_slice(s);
        }
    }
    out
}

/// Received training samples at one user, with the true common and own
/// private symbol of each.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledTrainingSet {
    pub received: Vec<C64>,
    pub common: Vec<usize>,
    pub private: Vec<usize>,
}

impl LabeledTrainingSet {
    pub fn new(received: Vec<C64>, common: Vec<usize>, private: Vec<usize>) -> Result<Self> {
        if received.len() != common.len() || received.len() != private.len() {
            return Err(Error::Contract("samples and labels differ in length".into()));
        }
        Ok(LabeledTrainingSet {
            received,
            common,
            private,
        })
    }

    pub fn len(&self) -> usize {
        self.received.len()
    }

    pub fn is_empty(&self) -> bool {
        self.received.is_empty()
    }

    pub fn check_labels(&self, sc: &Constellation, sk: &Constellation) -> Result<()> {
        if let Some(&bad) = self.common.iter().find(|&&c| c >= sc.len()) {
            return Err(Error::LabelOutOfRange { label: bad, classes: sc.len() });
        }
        if let Some(&bad) = self.private.iter().find(|&&p| p >= sk.len()) {
            return Err(Error::LabelOutOfRange { label: bad, classes: sk.len() });
        }
        Ok(())
    }
}

/// Completes a corner-only training set into the full private grid.
///
/// For every common symbol the four corner clusters are averaged; each grid
/// point of the private constellation is then placed by bilinear
/// interpolation between those centroids, which is exact whenever the
/// channel maps the corner lattice affinely. With `replicas > 0`, every
/// synthetic point is emitted `replicas` times with isotropic Gaussian jitter
/// whose spread is the pooled within-cluster deviation; with `replicas == 0`
/// each point appears once, unjittered.
pub fn interpolate_at_receiver<R: Rng + ?Sized>(
    corners: &LabeledTrainingSet,
    sc: &Constellation,
    sk: &Constellation,
    replicas: usize,
    rng: &mut R,
) -> Result<LabeledTrainingSet> {
    corners.check_labels(sc, sk)?;
    let corner_ids = sk.corners();
    let slot = |p: usize| corner_ids.iter().position(|&c| c == p);

    let mut sums = vec![[C64::new(0.0, 0.0); 4]; sc.len()];
    let mut counts = vec![[0usize; 4]; sc.len()];
    for ((&y, &c), &p) in corners.received.iter().zip(&corners.common).zip(&corners.private) {
        let s = slot(p).ok_or_else(|| {
            Error::Contract(format!("private symbol {p} is not a corner of {}", sk.modulation()))
        })?;
        sums[c][s] += y;
        counts[c][s] += 1;
    }
    for c in 0..sc.len() {
        for s in 0..4 {
            if counts[c][s] == 0 {
                return Err(Error::InsufficientCoverage {
                    common: c,
                    corner: corner_ids[s],
                });
            }
        }
    }
    let centroids: Vec<[C64; 4]> = sums
        .iter()
        .zip(&counts)
        .map(|(s, n)| std::array::from_fn(|i| s[i] / n[i] as f64))
        .collect();

    let mut spread = 0.0;
    for ((&y, &c), &p) in corners.received.iter().zip(&corners.common).zip(&corners.private) {
        let s = slot(p).expect("checked above");
        spread += (y - centroids[c][s]).norm_sqr();
    }
    let sigma = (spread / corners.len() as f64 / 2.0).sqrt();

    let hi = (sk.side() - 1) as f64;
    let copies = replicas.max(1);
    let mut out = LabeledTrainingSet::default();
    for (c, cent) in centroids.iter().enumerate() {
        for p in 0..sk.len() {
            let (i, q) = sk.grid_position(p);
            let (u, v) = (i as f64 / hi, q as f64 / hi);
            let base = cent[0] * ((1.0 - u) * (1.0 - v))
                + cent[1] * (u * (1.0 - v))
                + cent[2] * ((1.0 - u) * v)
                + cent[3] * (u * v);
            for _ in 0..copies {
                let y = if replicas > 0 && sigma > 0.0 {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    base + C64::new(sigma * re, sigma * im)
                } else {
                    base
                };
                out.received.push(y);
                out.common.push(c);
                out.private.push(p);
            }
        }
    }
    Ok(out)
}

/// Training overhead in percent, `100·T/L`.
pub fn overhead(training_symbols: usize, total_symbols: usize) -> Result<f64> {
    if total_symbols == 0 {
        return Err(Error::Domain("total symbol count is zero".into()));
    }
    if training_symbols > total_symbols {
        return Err(Error::Domain(format!(
            "{training_symbols} training symbols exceed the {total_symbols} transmitted"
        )));
    }
    Ok(100.0 * training_symbols as f64 / total_symbols as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    use Modulation::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(42)
    }

    #[test]
    fn extensive_sizes() {
        let b = gen_extensive(&[Qpsk, Qpsk, Qpsk]).unwrap();
        assert_eq!(b.len(), 64);
        let combos: HashSet<Vec<usize>> = (0..b.len()).map(|t| b.column(t)).collect();
        assert_eq!(combos.len(), 64);
        let b = gen_extensive(&[Qpsk, Qam16]).unwrap();
        assert_eq!(b.len(), 64);
        assert!(matches!(
            gen_extensive(&[Qam256, Qam256, Qam256, Qam256]),
            Err(Error::PatternTooLarge(_))
        ));
    }

    #[test]
    fn minimal_covers_every_pair_once() {
        let mods = [Qpsk, Qam16, Qpsk, Qam16];
        let b = gen_minimal(&mods, &mut rng()).unwrap();
        assert_eq!(top_private_stream(&mods), 1);
        assert_eq!(b.len(), 64);
        let pairs: HashSet<(usize, usize)> = (0..64).map(|t| (b.symbols[0][t], b.symbols[1][t])).collect();
        assert_eq!(pairs.len(), 64);
        assert!(b.symbols[2].iter().all(|&s| s < 4));
        assert!(b.symbols[3].iter().all(|&s| s < 16));
    }

    #[test]
    fn minimal_top_stream_tie_and_order() {
        assert_eq!(top_private_stream(&[Qpsk, Qpsk, Qam64, Qam64]), 2);
        let b = gen_minimal(&[Qpsk, Qpsk, Qam64], &mut rng()).unwrap();
        assert_eq!(b.len(), 4 * 64);
    }

    #[test]
    fn minimal_qpsk_twenty_blocks() {
        let blocks = generate(Pattern::Minimal, &[Qpsk, Qpsk, Qpsk], 20, &mut rng()).unwrap();
        assert_eq!(concat(&blocks)[0].len(), 320);
    }

    #[test]
    fn interpolating_blocks() {
        let mods = [Qpsk, Qam16, Qam256];
        let blocks = generate(Pattern::Interpolating, &mods, 20, &mut rng()).unwrap();
        assert!(blocks.iter().all(|b| b.len() == 4));
        assert_eq!(concat(&blocks)[0].len(), 80);
        for b in &blocks {
            for (j, &m) in mods.iter().enumerate().skip(1) {
                let c = Constellation::new(m);
                assert!(b.symbols[j].iter().all(|&s| c.is_corner(s)));
                let set: HashSet<usize> = b.symbols[j].iter().copied().collect();
                assert_eq!(set.len(), 4);
            }
        }
        // |S_c| blocks cover all (common, corner) pairs for every user
        for j in 1..mods.len() {
            let pairs: HashSet<(usize, usize)> = blocks[..4]
                .iter()
                .flat_map(|b| (0..4).map(move |t| (b.symbols[0][t], b.symbols[j][t])))
                .collect();
            assert_eq!(pairs.len(), 16);
        }
    }

    #[test]
    fn block_sizes() {
        assert_eq!(block_size(Pattern::Extensive, &[Qpsk, Qpsk, Qpsk]).unwrap(), 64);
        assert_eq!(block_size(Pattern::Minimal, &[Qpsk, Qpsk, Qam16]).unwrap(), 64);
        assert_eq!(block_size(Pattern::Interpolating, &[Qam64, Qam256]).unwrap(), 4);
        for &m in &Modulation::ALL {
            for &p in &Modulation::ALL {
                let mods = [m, p, Qpsk];
                for pat in [Pattern::Minimal, Pattern::Interpolating] {
                    let b = generate(pat, &mods, 1, &mut rng()).unwrap();
                    assert_eq!(b[0].len(), block_size(pat, &mods).unwrap());
                }
            }
        }
    }

    fn corner_set(sc: &Constellation, sk: &Constellation, map: impl Fn(usize, C64) -> C64) -> LabeledTrainingSet {
        let mut set = LabeledTrainingSet::default();
        for c in 0..sc.len() {
            for &p in &sk.corners() {
                set.received.push(map(c, sk.point(p)));
                set.common.push(c);
                set.private.push(p);
            }
        }
        set
    }

    #[test]
    fn interpolation_is_exact_for_affine_maps() {
        let sc = Constellation::new(Qpsk);
        let sk = Constellation::new(Qam16);
        let a = C64::new(0.8, -0.3);
        let b = C64::new(0.1, 0.25);
        // real-affine: gain, conjugate leakage and a common-dependent offset
        let map = |c: usize, s: C64| a * s + b * s.conj() + sc.point(c) * C64::new(1.3, 0.4);
        let set = corner_set(&sc, &sk, map);
        let out = interpolate_at_receiver(&set, &sc, &sk, 0, &mut rng()).unwrap();
        assert_eq!(out.len(), 4 * 16);
        for ((&y, &c), &p) in out.received.iter().zip(&out.common).zip(&out.private) {
            assert!((y - map(c, sk.point(p))).norm() < 1e-12);
        }
    }

    #[test]
    fn qpsk_interpolation_is_identity_on_centroids() {
        let sc = Constellation::new(Qpsk);
        let sk = Constellation::new(Qpsk);
        let set = corner_set(&sc, &sk, |c, s| s * 2.0 + sc.point(c));
        let out = interpolate_at_receiver(&set, &sc, &sk, 0, &mut rng()).unwrap();
        assert_eq!(out.len(), 16);
        for ((&y, &c), &p) in out.received.iter().zip(&out.common).zip(&out.private) {
            assert!((y - (sk.point(p) * 2.0 + sc.point(c))).norm() < 1e-15);
        }
    }

    #[test]
    fn interpolation_grid_size_and_jitter() {
        let sc = Constellation::new(Qpsk);
        let sk = Constellation::new(Qam256);
        let mut set = corner_set(&sc, &sk, |_, s| s);
        let extra = corner_set(&sc, &sk, |_, s| s + C64::new(0.01, -0.01));
        set.received.extend(extra.received);
        set.common.extend(extra.common);
        set.private.extend(extra.private);
        let out = interpolate_at_receiver(&set, &sc, &sk, 0, &mut rng()).unwrap();
        assert_eq!(out.len(), 4 * 256);
        let jittered = interpolate_at_receiver(&set, &sc, &sk, 3, &mut rng()).unwrap();
        assert_eq!(jittered.len(), 3 * 4 * 256);
        assert!(jittered.received.iter().zip(out.received.iter().flat_map(|y| [y, y, y])).any(|(a, b)| a != b));
    }

    #[test]
    fn interpolation_reports_gaps() {
        let sc = Constellation::new(Qpsk);
        let sk = Constellation::new(Qam16);
        let mut set = corner_set(&sc, &sk, |_, s| s);
        set.received.pop();
        set.common.pop();
        let missing = set.private.pop().unwrap();
        match interpolate_at_receiver(&set, &sc, &sk, 0, &mut rng()) {
            Err(Error::InsufficientCoverage { common, corner }) => {
                assert_eq!((common, corner), (3, missing));
            }
            other => panic!("unexpected {other:?}"),
        }
        let mut set = corner_set(&sc, &sk, |_, s| s);
        set.private[0] = 5; // interior point
        assert!(interpolate_at_receiver(&set, &sc, &sk, 0, &mut rng()).is_err());
    }

    #[test]
    fn overhead_values() {
        assert_eq!(overhead(0, 100).unwrap(), 0.0);
        assert_abs_diff_eq!(overhead(80, 336).unwrap(), 23.8095, epsilon = 1e-4);
        assert_eq!(overhead(7, 7).unwrap(), 100.0);
        assert!(overhead(1, 0).is_err());
        assert!(overhead(5, 4).is_err());
        assert_abs_diff_eq!(overhead(240, 1008).unwrap(), overhead(80, 336).unwrap(), epsilon = 1e-12);
    }
}
