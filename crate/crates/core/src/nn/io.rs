//! Plain-text network files.
//!
//! ```text
//! rsma-mlp 1
//! layers <count>
//! layer <inputs> <outputs> <activation>
//! <one line of `inputs` weights per output unit>
//! <one line of `outputs` biases>
//! ...
//! ```
//!
//! Values are written in Rust's shortest round-trip float format.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Layer, Mlp};
use crate::{Error, Result};

const MAGIC: &str = "rsma-mlp";
const VERSION: u32 = 1;

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{v:?}").expect("write to String");
    }
    s
}

fn parse_row(line: Option<&str>, expected: usize, what: &str) -> Result<Vec<f64>> {
    let line = line.ok_or_else(|| Error::Format(format!("missing {what}")))?;
    let values = line
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| Error::Format(format!("{what}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != expected {
        return Err(Error::Format(format!("{what}: {} values, expected {expected}", values.len())));
    }
    Ok(values)
}

impl Mlp {
    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC} {VERSION}\nlayers {}\n", self.layers.len());
        for l in &self.layers {
            writeln!(out, "layer {} {} {}", l.inputs, l.outputs, l.activation).expect("write to String");
            for row in l.weights.chunks_exact(l.inputs) {
                out.push_str(&join(row));
                out.push('\n');
            }
            out.push_str(&join(&l.biases));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Format("empty file".into()))?;
        match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            [MAGIC, v] if *v == VERSION.to_string() => {}
            [MAGIC, v] => return Err(Error::Format(format!("unsupported version {v}"))),
            _ => return Err(Error::Format("missing `rsma-mlp` header".into())),
        }
        let count: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("layers "))
            .and_then(|n| n.trim().parse().ok())
            .ok_or_else(|| Error::Format("missing layer count".into()))?;
        let mut layers = Vec::with_capacity(count);
        for i in 0..count {
            let head = lines
                .next()
                .ok_or_else(|| Error::Format(format!("missing layer {i}")))?;
            let parts: Vec<&str> = head.split_whitespace().collect();
            let (inputs, outputs, act) = match parts.as_slice() {
                ["layer", a, b, c] => (
                    a.parse::<usize>().map_err(|e| Error::Format(e.to_string()))?,
                    b.parse::<usize>().map_err(|e| Error::Format(e.to_string()))?,
                    c.parse()?,
                ),
                _ => return Err(Error::Format(format!("bad layer header `{head}`"))),
            };
            let mut weights = Vec::with_capacity(inputs * outputs);
            for o in 0..outputs {
                weights.extend(parse_row(lines.next(), inputs, &format!("layer {i} weights row {o}"))?);
            }
            let biases = parse_row(lines.next(), outputs, &format!("layer {i} biases"))?;
            layers.push(Layer {
                inputs,
                outputs,
                activation: act,
                weights,
                biases,
            });
        }
        if lines.next().is_some() {
            return Err(Error::Format("trailing data after last layer".into()));
        }
        Mlp::from_layers(layers)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}
