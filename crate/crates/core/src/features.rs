//! Feature extraction.
//!
//! Two families are provided. The phase magnitude is the per-phase sum of
//! magnitudes over all cycles, optionally computed after rotating the phase
//! axis so the strongest phase comes first. The meta-features summarise the
//! whole matrix in three numbers: total magnitude, the mean of the three
//! largest point magnitudes, and the longest run of phases containing no
//! significant point.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{csv_field, Dataset, PdLabel, PrpdSignal};

/// Fraction of the sample maximum a point must exceed to count as significant.
pub const DEFAULT_THRESHOLD: f64 = 0.4;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMagnitudeVector(pub Vec<f64>);

impl PhaseMagnitudeVector {
    /// Index of the largest entry, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.0.iter().enumerate() {
            if v > self.0[best] {
                best = i;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaFeatures {
    pub total_magnitude: f64,
    pub max_magnitude: f64,
    pub longest_empty_band: usize,
}

impl MetaFeatures {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.total_magnitude, self.max_magnitude, self.longest_empty_band as f64]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    PhaseMagnitude,
    AlignedPhaseMagnitude,
    Meta,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 3] = [
        FeatureKind::PhaseMagnitude,
        FeatureKind::AlignedPhaseMagnitude,
        FeatureKind::Meta,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            FeatureKind::PhaseMagnitude => "phase",
            FeatureKind::AlignedPhaseMagnitude => "aligned",
            FeatureKind::Meta => "meta",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::PhaseMagnitude => "Phase Magnitude",
            FeatureKind::AlignedPhaseMagnitude => "Aligned Phase Magnitude",
            FeatureKind::Meta => "Meta Features",
        })
    }
}

impl FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "phase" | "phase_magnitude" => Ok(FeatureKind::PhaseMagnitude),
            "aligned" | "aligned_phase_magnitude" => Ok(FeatureKind::AlignedPhaseMagnitude),
            "meta" => Ok(FeatureKind::Meta),
            other => Err(format!(
                "unknown feature set {other:?} (expected phase, aligned or meta)"
            )),
        }
    }
}

pub fn phase_magnitude(signal: &PrpdSignal) -> PhaseMagnitudeVector {
    let phases = signal.dims().phases;
    PhaseMagnitudeVector((0..phases).map(|i| signal.phase_row(i).iter().sum()).collect())
}

/// Rotates the phase axis so the phase with the largest phase magnitude
/// becomes phase 0. All-zero signals come back unchanged.
pub fn align_phases(signal: &PrpdSignal) -> PrpdSignal {
    let shift = phase_magnitude(signal).argmax();
    if shift == 0 {
        return signal.clone();
    }
    signal.rotate_phases(shift)
}

pub fn total_magnitude(signal: &PrpdSignal) -> f64 {
    signal.values().iter().sum()
}

/// Mean of the three largest point magnitudes, counted with multiplicity.
pub fn max_magnitude(signal: &PrpdSignal) -> Result<f64> {
    let values = signal.values();
    if values.len() < 3 {
        return Err(Error::TooFewPoints(values.len()));
    }
    let mut top = [f64::NEG_INFINITY; 3];
    for &v in values {
        if v > top[2] {
            top[2] = v;
            if top[2] > top[1] {
                top.swap(1, 2);
                if top[1] > top[0] {
                    top.swap(0, 1);
                }
            }
        }
    }
    // offsets from the largest keep the mean exact for equal values
    Ok(top[0] + ((top[1] - top[0]) + (top[2] - top[0])) / 3.0)
}

fn max_point(signal: &PrpdSignal) -> f64 {
    signal.values().iter().copied().fold(0.0, f64::max)
}

/// Per phase of the aligned signal, the number of cycles whose magnitude
/// strictly exceeds `threshold_ratio` times the signal's largest point.
pub fn significant_phase_counts(signal: &PrpdSignal, threshold_ratio: f64) -> Vec<usize> {
    let cutoff = threshold_ratio * max_point(signal);
    let aligned = align_phases(signal);
    (0..aligned.dims().phases)
        .map(|i| aligned.phase_row(i).iter().filter(|&&v| v > cutoff).count())
        .collect()
}

/// Length of the longest run of consecutive empty phases (no significant
/// cycle), scanned linearly over the aligned phase axis. An all-zero signal
/// has every phase empty and yields the phase count.
pub fn longest_empty_band(signal: &PrpdSignal, threshold_ratio: f64) -> usize {
    let counts = significant_phase_counts(signal, threshold_ratio);
    let mut best = 0;
    let mut run = 0;
    for c in counts {
        if c == 0 {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

fn check_threshold(threshold_ratio: f64) -> Result<()> {
    if threshold_ratio > 0.0 && threshold_ratio < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidThreshold(threshold_ratio))
    }
}

pub fn extract_meta(signal: &PrpdSignal, threshold_ratio: f64) -> Result<MetaFeatures> {
    check_threshold(threshold_ratio)?;
    Ok(MetaFeatures {
        total_magnitude: total_magnitude(signal),
        max_magnitude: max_magnitude(signal)?,
        longest_empty_band: longest_empty_band(signal, threshold_ratio),
    })
}

pub fn feature_vector(signal: &PrpdSignal, kind: FeatureKind, threshold_ratio: f64) -> Result<Vec<f64>> {
    Ok(match kind {
        FeatureKind::PhaseMagnitude => phase_magnitude(signal).0,
        FeatureKind::AlignedPhaseMagnitude => phase_magnitude(&align_phases(signal)).0,
        FeatureKind::Meta => extract_meta(signal, threshold_ratio)?.to_vec(),
    })
}

/// One feature row per sample, with ids and (possibly missing) labels kept
/// alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub kind: FeatureKind,
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Option<PdLabel>>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn labels(&self) -> Result<Vec<PdLabel>> {
        self.labels
            .iter()
            .zip(&self.ids)
            .map(|(l, id)| l.ok_or_else(|| Error::MissingLabels { id: id.clone() }))
            .collect()
    }

    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        let mut line = String::from("id,label");
        for k in 0..self.width() {
            line.push_str(&format!(",f{k}"));
        }
        writeln!(out, "{line}")?;
        for ((id, label), row) in self.ids.iter().zip(&self.labels).zip(&self.rows) {
            line.clear();
            line.push_str(&csv_field(id));
            line.push(',');
            if let Some(l) = label {
                line.push_str(l.name());
            }
            for v in row {
                line.push(',');
                line.push_str(&v.to_string());
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_csv(&mut out).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }
}

pub fn extract_features(dataset: &Dataset, kind: FeatureKind, threshold_ratio: f64) -> Result<FeatureMatrix> {
    check_threshold(threshold_ratio)?;
    let rows = dataset
        .samples()
        .iter()
        .map(|s| feature_vector(s, kind, threshold_ratio))
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureMatrix {
        kind,
        ids: dataset.samples().iter().map(|s| s.id().to_string()).collect(),
        rows,
        labels: dataset.samples().iter().map(|s| s.label()).collect(),
    })
}
