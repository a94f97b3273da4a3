//! A small SER sweep driven by a TOML scenario, written as CSV plus manifest.
//!
//! cargo run --release --example ser_sweep -- [out.csv]

use std::path::PathBuf;

use rsma_mbdl::harness::{emit_report, parse_config, run_ser_experiment, to_csv, Format};

const SCENARIO: &str = r#"
nt = 4
k = 2
snr_db = [6, 12, 18]
trials = 20
data_symbols = 2000
seed = 1
receivers = ["map", "sic_perfect", "sic_imperfect", "mbdl"]
users = [1]

[training]
pattern = "minimal"
blocks = 20
"#;

fn main() -> rsma_mbdl::Result<()> {
    let sc = parse_config(SCENARIO)?;
    let report = run_ser_experiment(&sc)?;
    print!("{}", to_csv(&report));
    if let Some(out) = std::env::args().nth(1) {
        for path in emit_report(&report, &sc, &PathBuf::from(out), Format::Csv)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
