//! Experiment records and their CSV form.
//!
//! Columns are `k, u_1..u_m, z, y` with a mandatory header row. Lines
//! starting with `#` are comments; `# sample_time=<s>` is recognised.
//! Floats are written with 17 significant digits so that reading a file
//! back reproduces every value bit for bit.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentData {
    pub inputs: Vec<Vec<f64>>,
    pub true_outputs: Vec<f64>,
    pub measured_outputs: Vec<f64>,
    pub sample_time: f64,
}

impl ExperimentData {
    pub fn new(
        inputs: Vec<Vec<f64>>,
        true_outputs: Vec<f64>,
        measured_outputs: Vec<f64>,
        sample_time: f64,
    ) -> Result<Self> {
        if inputs.len() != true_outputs.len() || inputs.len() != measured_outputs.len() {
            return Err(Error::InvalidInput(format!(
                "sequence lengths differ: {} inputs, {} true outputs, {} measurements",
                inputs.len(),
                true_outputs.len(),
                measured_outputs.len()
            )));
        }
        let m = inputs.first().map_or(0, Vec::len);
        if inputs.iter().any(|u| u.len() != m) {
            return Err(Error::InvalidInput("inputs have inconsistent dimension".into()));
        }
        Ok(Self {
            inputs,
            true_outputs,
            measured_outputs,
            sample_time,
        })
    }

    pub fn len(&self) -> usize {
        self.measured_outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measured_outputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    /// Samples `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            inputs: self.inputs[start..end].to_vec(),
            true_outputs: self.true_outputs[start..end].to_vec(),
            measured_outputs: self.measured_outputs[start..end].to_vec(),
            sample_time: self.sample_time,
        }
    }

    /// Identification/validation split; the first `fraction` of the
    /// samples (rounded down) goes to identification.
    pub fn split(&self, fraction: f64) -> Result<(Self, Self)> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::InvalidInput(format!("split fraction must lie in (0, 1), got {fraction}")));
        }
        let cut = (self.len() as f64 * fraction).floor() as usize;
        Ok((self.slice(0, cut), self.slice(cut, self.len())))
    }

    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> Result<()> {
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "# sample_time={}", fmt_f64(self.sample_time))?;
        let mut w = csv::Writer::from_writer(out);
        let m = self.input_dim();
        let mut header = vec!["k".to_string()];
        header.extend((1..=m).map(|j| format!("u_{j}")));
        header.push("z".into());
        header.push("y".into());
        w.write_record(&header)?;
        for k in 0..self.len() {
            let mut rec = Vec::with_capacity(m + 3);
            rec.push(k.to_string());
            rec.extend(self.inputs[k].iter().map(|&v| fmt_f64(v)));
            rec.push(fmt_f64(self.true_outputs[k]));
            rec.push(fmt_f64(self.measured_outputs[k]));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let mut sample_time = 1.0;
        for line in text.lines().filter(|l| l.starts_with('#')) {
            if let Some(v) = line.trim_start_matches('#').trim().strip_prefix("sample_time=") {
                sample_time = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad sample_time `{v}`")))?;
            }
        }
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = r.headers()?.clone();
        let cols: Vec<&str> = header.iter().collect();
        let m = cols.len().checked_sub(3).ok_or_else(|| {
            Error::InvalidInput("header must be `k, u_1..u_m, z, y`".into())
        })?;
        let expected: Vec<String> = std::iter::once("k".to_string())
            .chain((1..=m).map(|j| format!("u_{j}")))
            .chain(["z".to_string(), "y".to_string()])
            .collect();
        if cols != expected {
            return Err(Error::InvalidInput(format!(
                "unexpected header {cols:?}, expected {expected:?}"
            )));
        }
        let (mut inputs, mut z, mut y) = (Vec::new(), Vec::new(), Vec::new());
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec[i].parse::<f64>().map_err(|_| {
                    Error::InvalidInput(format!("record {line}: cannot parse `{}`", &rec[i]))
                })
            };
            inputs.push((1..=m).map(parse).collect::<Result<Vec<_>>>()?);
            z.push(parse(m + 1)?);
            y.push(parse(m + 2)?);
        }
        Self::new(inputs, z, y, sample_time)
    }

    pub fn save(&self, path: &Path, comments: &[String]) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f), comments)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
