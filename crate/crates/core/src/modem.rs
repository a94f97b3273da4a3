//! Gray-mapped square QAM.
//!
//! Symbol index and bit label coincide: the point with index `i` carries the
//! `M`-bit label `i`, most significant bit first. The upper `M/2` bits select
//! the constellation column (in-phase level), the lower `M/2` bits the row
//! (quadrature level). Each half is a reflected Gray code of the level
//! position, so neighbours along a row or column differ in exactly one bit.
//!
//! The row and column classes used by the detection networks are the `M/2`-bit
//! half-labels themselves, which makes the soft-bit aggregation a plain sum
//! over classes whose half-label has the bit set.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Lower clamp applied to soft bits before taking log-probability ratios.
pub const LPR_CLAMP: f64 = 1e-12;

/// Supported square QAM orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "qpsk")]
    Qpsk,
    #[serde(rename = "16qam")]
    Qam16,
    #[serde(rename = "64qam")]
    Qam64,
    #[serde(rename = "256qam")]
    Qam256,
}

impl Modulation {
    pub const ALL: [Modulation; 4] = [
        Modulation::Qpsk,
        Modulation::Qam16,
        Modulation::Qam64,
        Modulation::Qam256,
    ];

    pub fn from_bits(bits_per_symbol: usize) -> Result<Self> {
        match bits_per_symbol {
            2 => Ok(Modulation::Qpsk),
            4 => Ok(Modulation::Qam16),
            6 => Ok(Modulation::Qam64),
            8 => Ok(Modulation::Qam256),
            m => Err(Error::InvalidModulation(format!(
                "{m} bits per symbol (expected 2, 4, 6 or 8)"
            ))),
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
            Modulation::Qam256 => 8,
        }
    }

    /// Alphabet size `2^M`.
    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }

    /// Number of rows (equivalently columns), `2^(M/2)`.
    pub fn side(self) -> usize {
        1 << (self.bits_per_symbol() / 2)
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "16qam",
            Modulation::Qam64 => "64qam",
            Modulation::Qam256 => "256qam",
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" | "4qam" => Ok(Modulation::Qpsk),
            "16qam" => Ok(Modulation::Qam16),
            "64qam" => Ok(Modulation::Qam64),
            "256qam" => Ok(Modulation::Qam256),
            other => Err(Error::InvalidModulation(other.to_string())),
        }
    }
}

fn gray(n: usize) -> usize {
    n ^ (n >> 1)
}

fn gray_inverse(mut g: usize) -> usize {
    let mut n = 0;
    while g != 0 {
        n ^= g;
        g >>= 1;
    }
    n
}

/// A unit-energy Gray-mapped square QAM alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    modulation: Modulation,
    points: Vec<C64>,
}

impl Constellation {
    pub fn new(modulation: Modulation) -> Self {
        let side = modulation.side();
        let half = modulation.bits_per_symbol() / 2;
        let scale = (2.0 * ((side * side - 1) as f64) / 3.0).sqrt().recip();
        let level = |pos: usize| (2 * pos) as f64 - (side - 1) as f64;
        let points = (0..modulation.order())
            .map(|label| {
                let col = label >> half;
                let row = label & (side - 1);
                C64::new(
                    level(gray_inverse(col)) * scale,
                    level(gray_inverse(row)) * scale,
                )
            })
            .collect();
        Constellation { modulation, points }
    }

    /// Builds the constellation carrying `bits_per_symbol` bits.
    pub fn with_bits(bits_per_symbol: usize) -> Result<Self> {
        Modulation::from_bits(bits_per_symbol).map(Self::new)
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.modulation.bits_per_symbol()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of row (and column) classes.
    pub fn side(&self) -> usize {
        self.modulation.side()
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> C64 {
        self.points[index]
    }

    /// Column class, the left-most `M/2` label bits.
    pub fn col_of(&self, index: usize) -> usize {
        index >> (self.bits_per_symbol() / 2)
    }

    /// Row class, the right-most `M/2` label bits.
    pub fn row_of(&self, index: usize) -> usize {
        index & (self.side() - 1)
    }

    /// Inverse of (`row_of`, `col_of`).
    pub fn index_of(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.side() && col < self.side());
        (col << (self.bits_per_symbol() / 2)) | row
    }

    /// Position of the point on the in-phase and quadrature level grids,
    /// `0..side` from the most negative level.
    pub fn grid_position(&self, index: usize) -> (usize, usize) {
        (
            gray_inverse(self.col_of(index)),
            gray_inverse(self.row_of(index)),
        )
    }

    /// Symbol index at an in-phase/quadrature grid position.
    pub fn index_at_grid(&self, i_pos: usize, q_pos: usize) -> usize {
        self.index_of(gray(q_pos), gray(i_pos))
    }

    /// Indices of the four corner points, ordered
    /// (low I, low Q), (high I, low Q), (low I, high Q), (high I, high Q).
    pub fn corners(&self) -> [usize; 4] {
        let hi = self.side() - 1;
        [
            self.index_at_grid(0, 0),
            self.index_at_grid(hi, 0),
            self.index_at_grid(0, hi),
            self.index_at_grid(hi, hi),
        ]
    }

    pub fn is_corner(&self, index: usize) -> bool {
        let hi = self.side() - 1;
        let (i, q) = self.grid_position(index);
        (i == 0 || i == hi) && (q == 0 || q == hi)
    }

    /// Label bits of a symbol, MSB first.
    pub fn bits_of(&self, index: usize) -> Vec<u8> {
        let m = self.bits_per_symbol();
        (0..m).map(|b| ((index >> (m - 1 - b)) & 1) as u8).collect()
    }

    pub fn index_from_bits(&self, bits: &[u8]) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b & 1))
    }

    /// Maps each `M`-bit group to its symbol.
    pub fn modulate(&self, bits: &[u8]) -> Result<Vec<C64>> {
        let m = self.bits_per_symbol();
        if !bits.len().is_multiple_of(m) {
            return Err(Error::Framing {
                len: bits.len(),
                bits_per_symbol: m,
            });
        }
        Ok(bits
            .chunks(m)
            .map(|chunk| self.points[self.index_from_bits(chunk)])
            .collect())
    }

    /// Hard minimum-distance demapping back to label bits.
    pub fn demodulate(&self, symbols: &[C64]) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(symbols.len() * self.bits_per_symbol());
        for &y in symbols {
            out.extend(self.bits_of(self.nearest_symbol(y)?));
        }
        Ok(out)
    }

    /// Index of the closest point; ties go to the lowest index.
    pub fn nearest_symbol(&self, y: C64) -> Result<usize> {
        if !(y.re.is_finite() && y.im.is_finite()) {
            return Err(Error::NonFinite("received sample"));
        }
        Ok(self.nearest_unchecked(y))
    }

    pub(crate) fn nearest_unchecked(&self, y: C64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, s) in self.points.iter().enumerate() {
            let d = (y - s).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Aggregates row and column class probabilities into per-bit
    /// probabilities of a `1`.
    pub fn soft_bits(&self, row_probs: &[f64], col_probs: &[f64]) -> Result<SoftBits> {
        let side = self.side();
        for (name, probs) in [("row", row_probs), ("column", col_probs)] {
            if probs.len() != side {
                return Err(Error::Contract(format!(
                    "{name} probabilities have length {}, expected {side}",
                    probs.len()
                )));
            }
            if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::Contract(format!("{name} probabilities must be non-negative")));
            }
            let total: f64 = probs.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Contract(format!(
                    "{name} probabilities sum to {total}, not 1"
                )));
            }
        }
        let half = self.bits_per_symbol() / 2;
        let axis = |probs: &[f64], out: &mut Vec<f64>| {
            for b in 0..half {
                let shift = half - 1 - b;
                let p: f64 = probs
                    .iter()
                    .enumerate()
                    .filter(|(class, _)| (class >> shift) & 1 == 1)
                    .map(|(_, p)| p)
                    .sum();
                out.push(p.clamp(0.0, 1.0));
            }
        };
        let mut probs = Vec::with_capacity(2 * half);
        axis(col_probs, &mut probs);
        axis(row_probs, &mut probs);
        Ok(SoftBits { probs })
    }
}

/// Probability that each label bit is `1`, MSB first.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftBits {
    pub probs: Vec<f64>,
}

impl SoftBits {
    /// Degenerate soft bits for a hard decision.
    pub fn from_hard(bits: &[u8]) -> Self {
        SoftBits {
            probs: bits.iter().map(|&b| f64::from(b)).collect(),
        }
    }

    /// Bits thresholded at 0.5; a tie decides `0`.
    pub fn hard_bits(&self) -> Vec<u8> {
        self.probs.iter().map(|&p| u8::from(p > 0.5)).collect()
    }

    pub fn lprs(&self) -> Vec<f64> {
        self.probs.iter().map(|&p| lpr(p)).collect()
    }
}

/// Bit log-probability ratio `ln((1 - p) / p)`, with `p` clamped to
/// `[LPR_CLAMP, 1 - LPR_CLAMP]`.
pub fn lpr(p: f64) -> f64 {
    let p = p.clamp(LPR_CLAMP, 1.0 - LPR_CLAMP);
    ((1.0 - p) / p).ln()
}
