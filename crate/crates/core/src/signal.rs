//! PRPD data model and the dataset CSV format.
//!
//! A dataset file has the header `id,label,v0,...,v{P*C-1}` followed by one
//! row per signal. Values are stored phase-major: column `v{i*C + j}` holds
//! phase `i`, cycle `j`. The label column may be empty for unlabeled samples.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationError};

pub const NUM_CLASSES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PdLabel {
    Corona = 0,
    Floating = 1,
    Particle = 2,
    Void = 3,
}

impl PdLabel {
    pub const ALL: [PdLabel; NUM_CLASSES] = [PdLabel::Corona, PdLabel::Floating, PdLabel::Particle, PdLabel::Void];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<PdLabel> {
        Self::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            PdLabel::Corona => "corona",
            PdLabel::Floating => "floating",
            PdLabel::Particle => "particle",
            PdLabel::Void => "void",
        }
    }
}

impl fmt::Display for PdLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PdLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| s.to_string())
    }
}

/// Matrix shape: phases per cycle and number of cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub phases: usize,
    pub cycles: usize,
}

impl Dims {
    pub const fn new(phases: usize, cycles: usize) -> Self {
        Dims { phases, cycles }
    }

    pub fn len(&self) -> usize {
        self.phases * self.cycles
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for Dims {
    fn default() -> Self {
        Dims::new(64, 60)
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}×{}", self.phases, self.cycles)
    }
}

/// Checks shape and entries of a phase-major magnitude buffer.
pub fn validate_values(dims: Dims, values: &[f64]) -> Result<(), ValidationError> {
    if dims.phases < 2 || dims.cycles < 1 {
        return Err(ValidationError::TooSmall {
            phases: dims.phases,
            cycles: dims.cycles,
        });
    }
    if values.len() != dims.len() {
        return Err(ValidationError::ValueCount {
            found: values.len(),
            expected: dims.len(),
        });
    }
    for (k, &v) in values.iter().enumerate() {
        let (phase, cycle) = (k / dims.cycles, k % dims.cycles);
        if !v.is_finite() {
            return Err(ValidationError::NonFinite { phase, cycle });
        }
        if v < 0.0 {
            return Err(ValidationError::Negative { phase, cycle });
        }
    }
    Ok(())
}

/// One PD measurement. Immutable once constructed; construction validates.
#[derive(Debug, Clone, PartialEq)]
pub struct PrpdSignal {
    id: String,
    label: Option<PdLabel>,
    dims: Dims,
    values: Vec<f64>,
}

impl PrpdSignal {
    pub fn new(
        id: impl Into<String>,
        label: Option<PdLabel>,
        dims: Dims,
        values: Vec<f64>,
    ) -> Result<Self, ValidationError> {
        validate_values(dims, &values)?;
        Ok(PrpdSignal {
            id: id.into(),
            label,
            dims,
            values,
        })
    }

    /// Builds a signal from `f(phase, cycle)`.
    pub fn from_fn(
        id: impl Into<String>,
        label: Option<PdLabel>,
        dims: Dims,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, ValidationError> {
        let mut values = Vec::with_capacity(dims.len());
        for p in 0..dims.phases {
            for c in 0..dims.cycles {
                values.push(f(p, c));
            }
        }
        Self::new(id, label, dims, values)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn label(&self) -> Option<PdLabel> {
        self.label
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Phase-major magnitudes.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, phase: usize, cycle: usize) -> f64 {
        self.values[phase * self.dims.cycles + cycle]
    }

    /// All cycles of one phase.
    pub fn phase_row(&self, phase: usize) -> &[f64] {
        let c = self.dims.cycles;
        &self.values[phase * c..(phase + 1) * c]
    }

    pub fn with_label(mut self, label: Option<PdLabel>) -> Self {
        self.label = label;
        self
    }

    /// Cyclic rotation of the phase axis: output phase `i` is input phase
    /// `(i + shift) mod P`.
    pub fn rotate_phases(&self, shift: usize) -> PrpdSignal {
        let p = self.dims.phases;
        let shift = shift % p;
        let c = self.dims.cycles;
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..p {
            let src = (i + shift) % p;
            values.extend_from_slice(&self.values[src * c..(src + 1) * c]);
        }
        PrpdSignal {
            id: self.id.clone(),
            label: self.label,
            dims: self.dims,
            values,
        }
    }
}

/// Checks a signal against the expected dimensions.
pub fn validate_signal(signal: &PrpdSignal, expected: Dims) -> Result<(), ValidationError> {
    let dims = signal.dims();
    if dims.phases != expected.phases {
        return Err(ValidationError::PhaseCount {
            found: dims.phases,
            expected: expected.phases,
        });
    }
    if dims.cycles != expected.cycles {
        return Err(ValidationError::CycleCount {
            found: dims.cycles,
            expected: expected.cycles,
        });
    }
    validate_values(dims, signal.values())
}

/// Ordered collection of signals sharing one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dims: Dims,
    samples: Vec<PrpdSignal>,
}

impl Dataset {
    pub fn new(dims: Dims) -> Self {
        Dataset {
            dims,
            samples: Vec::new(),
        }
    }

    pub fn from_samples(dims: Dims, samples: Vec<PrpdSignal>) -> Result<Self> {
        let mut ds = Dataset::new(dims);
        for s in samples {
            ds.push(s)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, sample: PrpdSignal) -> Result<()> {
        if sample.dims() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims.to_string(),
                found: sample.dims().to_string(),
            });
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn samples(&self) -> &[PrpdSignal] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn find(&self, id: &str) -> Option<&PrpdSignal> {
        self.samples.iter().find(|s| s.id() == id)
    }

    /// Labels of every sample; fails on the first unlabeled one.
    pub fn labels(&self) -> Result<Vec<PdLabel>> {
        self.samples
            .iter()
            .map(|s| s.label().ok_or_else(|| Error::MissingLabels { id: s.id().to_string() }))
            .collect()
    }

    /// Per-class sample counts in label-code order; unlabeled samples are skipped.
    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for l in self.samples.iter().filter_map(|s| s.label()) {
            counts[l.code()] += 1;
        }
        counts
    }

    pub fn map_samples(&self, f: impl Fn(&PrpdSignal) -> PrpdSignal) -> Dataset {
        Dataset {
            dims: self.dims,
            samples: self.samples.iter().map(f).collect(),
        }
    }
}

/// Loads a dataset assuming the default 64×60 shape.
pub fn load_dataset(path: impl AsRef<Path>, expect_labels: bool) -> Result<Dataset> {
    load_dataset_with_dims(path, expect_labels, Dims::default())
}

pub fn load_dataset_with_dims(path: impl AsRef<Path>, expect_labels: bool, dims: Dims) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, expect_labels, dims)
}

pub fn read_dataset(reader: impl std::io::Read, expect_labels: bool, dims: Dims) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    check_header(rdr.headers()?, dims)?;
    let width = dims.len() + 2;
    let mut dataset = Dataset::new(dims);
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record?;
        if record.len() != width {
            return Err(Error::MalformedRow {
                row,
                message: format!("expected {} columns, found {}", width, record.len()),
            });
        }
        let id = record[0].to_string();
        let token = record[1].trim();
        let label = if token.is_empty() {
            None
        } else {
            Some(
                token
                    .parse::<PdLabel>()
                    .map_err(|token| Error::UnknownLabel { row, token })?,
            )
        };
        if expect_labels && label.is_none() {
            return Err(Error::MissingLabels { id });
        }
        let values = record
            .iter()
            .skip(2)
            .enumerate()
            .map(|(k, field)| {
                field.trim().parse::<f64>().map_err(|_| Error::MalformedRow {
                    row,
                    message: format!("column v{k}: cannot parse {field:?} as a number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let signal = PrpdSignal::new(id, label, dims, values).map_err(|source| Error::InvalidRow { row, source })?;
        dataset.samples.push(signal);
    }
    Ok(dataset)
}

fn check_header(header: &csv::StringRecord, dims: Dims) -> Result<()> {
    if header.len() != dims.len() + 2 {
        return Err(Error::MalformedHeader(format!(
            "expected {} columns for {} signals, found {}",
            dims.len() + 2,
            dims,
            header.len()
        )));
    }
    if &header[0] != "id" || &header[1] != "label" {
        return Err(Error::MalformedHeader("first two columns must be `id,label`".into()));
    }
    for (k, name) in header.iter().skip(2).enumerate() {
        if name != format!("v{k}") {
            return Err(Error::MalformedHeader(format!(
                "column {} should be v{k}, found {name:?}",
                k + 2
            )));
        }
    }
    Ok(())
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_dataset(dataset, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Writes the dataset CSV. Floats use the shortest representation that
/// parses back to the same `f64`.
pub fn write_dataset(dataset: &Dataset, out: &mut impl Write) -> std::io::Result<()> {
    let n = dataset.dims().len();
    let mut line = String::from("id,label");
    for k in 0..n {
        line.push_str(&format!(",v{k}"));
    }
    writeln!(out, "{line}")?;
    for s in dataset.samples() {
        line.clear();
        line.push_str(&csv_field(s.id()));
        line.push(',');
        if let Some(l) = s.label() {
            line.push_str(l.name());
        }
        for v in s.values() {
            line.push(',');
            line.push_str(&v.to_string());
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Quotes a CSV field when it contains a delimiter, quote or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
