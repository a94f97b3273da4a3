//! Experiment driver: scenarios, sweeps, throughput and reports.

mod config;
mod experiment;
mod report;

pub use config::{parse_config, NnSection, PrecoderSection, PrivateModulation, Scenario, TrainingSection};
pub use experiment::{run_overhead_experiment, run_ser_experiment, trial_rng, OverheadRow, SerReport, SerRow};
pub use report::{emit_report, fmt_g6, manifest_path, to_csv, BinomialCheck, Format, Manifest, CSV_HEADER};

use serde::Serialize;

use crate::modem::Modulation;
use crate::nn::{layout, DetectorPurpose};
use crate::{Error, Result};

/// Outcome of one transmitted block: bits credited to each user (zero when
/// the block failed to decode) and the modulated block length in symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockOutcome {
    pub credited_bits: Vec<u64>,
    pub symbols: u64,
}

/// Delivered bits per channel use, `Σ bits / Σ symbols` over all blocks.
pub fn compute_throughput(blocks: &[BlockOutcome]) -> Result<f64> {
    let symbols: u64 = blocks.iter().map(|b| b.symbols).sum();
    if symbols == 0 {
        return Err(Error::Empty("blocks"));
    }
    let bits: u64 = blocks.iter().flat_map(|b| &b.credited_bits).sum();
    Ok(bits as f64 / symbols as f64)
}

/// Size of one detector network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComplexityRow {
    pub purpose: DetectorPurpose,
    pub modulation: Modulation,
    pub hidden: Vec<usize>,
    /// Parameters and real multiplications, as `base + slope·M_c`; the slope
    /// is zero for common detectors.
    pub params_base: usize,
    pub params_slope: usize,
    pub rmps_base: usize,
    pub rmps_slope: usize,
}

impl ComplexityRow {
    pub fn params(&self, common_bits: usize) -> usize {
        self.params_base + self.params_slope * common_bits
    }

    pub fn rmps(&self, common_bits: usize) -> usize {
        self.rmps_base + self.rmps_slope * common_bits
    }
}

fn counts(sizes: &[usize]) -> (usize, usize) {
    sizes.windows(2).fold((0, 0), |(p, r), w| (p + w[0] * w[1] + w[1], r + w[0] * w[1]))
}

/// Every detector network size, common and interference-cancelling.
pub fn complexity_table() -> Vec<ComplexityRow> {
    let mut rows = Vec::new();
    for purpose in [DetectorPurpose::CommonDetect, DetectorPurpose::IcPrivateDetect] {
        for m in Modulation::ALL {
            let (s0, _) = layout(purpose, m, 0);
            let (s1, _) = layout(purpose, m, 1);
            let (p0, r0) = counts(&s0);
            let (p1, r1) = counts(&s1);
            rows.push(ComplexityRow {
                purpose,
                modulation: m,
                hidden: s0[1..s0.len() - 1].to_vec(),
                params_base: p0,
                params_slope: p1 - p0,
                rmps_base: r0,
                rmps_slope: r1 - r0,
            });
        }
    }
    rows
}
