//! Seeded generator of labelled PRPD corpora.
//!
//! Each class is described by a [`ClassProfile`]: zero or more discharge
//! bands along the phase axis that fire in a fraction of cycles, uniform
//! out-of-band scatter, and a weak background noise floor shared by every
//! class. Per-sample jitter of gain, fill rate and band position spreads each
//! class into a cluster, and a random cyclic phase offset reproduces the
//! acquisition misalignment seen in field recordings.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed, stream};
use crate::signal::{Dataset, Dims, PdLabel, PrpdSignal, NUM_CLASSES};

/// Generated magnitudes are rounded to this step.
const QUANTUM: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassProfile {
    /// Band centres as fractions of the phase count.
    pub band_centers: Vec<f64>,
    /// Band spread either side of the centre, as fractions of the phase
    /// count, one per centre.
    pub band_widths: Vec<f64>,
    /// Probability that a band fires in a given cycle.
    pub cycle_fill: f64,
    /// Uniform amplitude range of band and scatter points.
    pub amplitude_range: (f64, f64),
    /// Probability that any cell receives an out-of-band scatter point.
    pub scatter_fraction: f64,
    /// Probability that any cell receives background noise.
    pub noise_fraction: f64,
    /// Upper bound of background noise amplitude.
    pub noise_amplitude: f64,
    /// Per-sample multiplicative gain drawn from `1 ± gain_jitter`.
    pub gain_jitter: f64,
    /// Per-band multiplicative change of `cycle_fill`, `1 ± fill_jitter`.
    pub fill_jitter: f64,
    /// Per-band shift of the centre, in fractions of the phase count.
    pub center_jitter: f64,
    /// Per-band multiplicative change of the band spread, `1 ± width_jitter`.
    pub width_jitter: f64,
    /// Probability that a band other than the first stays silent in a sample.
    pub band_dropout: f64,
    /// Rotate each sample by a uniformly random phase offset.
    pub random_offset: bool,
}

impl ClassProfile {
    fn base(centers: &[f64], widths: &[f64], fill: f64, amplitude: (f64, f64), scatter: f64) -> Self {
        ClassProfile {
            band_centers: centers.to_vec(),
            band_widths: widths.to_vec(),
            cycle_fill: fill,
            amplitude_range: amplitude,
            scatter_fraction: scatter,
            noise_fraction: 0.1,
            noise_amplitude: 0.05,
            gain_jitter: 0.1,
            fill_jitter: 0.3,
            center_jitter: 0.02,
            width_jitter: 0.3,
            band_dropout: 0.0,
            random_offset: true,
        }
    }

    /// Single thick band.
    pub fn corona() -> Self {
        ClassProfile {
            fill_jitter: 0.5,
            ..Self::base(&[0.25], &[0.09], 0.9, (0.6, 1.0), 0.0)
        }
    }

    /// Two strong, densely filled bands half a cycle apart.
    pub fn floating() -> Self {
        ClassProfile {
            fill_jitter: 0.2,
            ..Self::base(&[0.2, 0.7], &[0.08, 0.08], 0.95, (0.7, 1.0), 0.0)
        }
    }

    /// Light scatter across all phases, no dominant band.
    pub fn particle() -> Self {
        Self::base(&[], &[], 0.0, (0.2, 0.6), 0.25)
    }

    /// Two symmetric, sparsely filled bands; either half-cycle may be
    /// nearly idle and the second band is sometimes absent.
    pub fn void() -> Self {
        ClassProfile {
            fill_jitter: 0.9,
            band_dropout: 0.2,
            ..Self::base(&[0.25, 0.75], &[0.06, 0.06], 0.5, (0.3, 0.7), 0.0)
        }
    }

    pub fn default_for(label: PdLabel) -> Self {
        match label {
            PdLabel::Corona => Self::corona(),
            PdLabel::Floating => Self::floating(),
            PdLabel::Particle => Self::particle(),
            PdLabel::Void => Self::void(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        prob("cycle_fill", self.cycle_fill)?;
        prob("scatter_fraction", self.scatter_fraction)?;
        prob("noise_fraction", self.noise_fraction)?;
        prob("gain_jitter", self.gain_jitter)?;
        prob("fill_jitter", self.fill_jitter)?;
        prob("band_dropout", self.band_dropout)?;
        if !(0.0..1.0).contains(&self.width_jitter) {
            return Err(Error::Config(format!(
                "width_jitter must lie in [0, 1), got {}",
                self.width_jitter
            )));
        }
        let (lo, hi) = self.amplitude_range;
        if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Config(format!("invalid amplitude_range ({lo}, {hi})")));
        }
        if !(self.noise_amplitude >= 0.0 && self.noise_amplitude.is_finite()) {
            return Err(Error::Config("noise_amplitude must be a nonnegative number".into()));
        }
        if !(self.center_jitter >= 0.0 && self.center_jitter.is_finite()) {
            return Err(Error::Config("center_jitter must be a nonnegative number".into()));
        }
        if self.band_centers.len() != self.band_widths.len() {
            return Err(Error::Config("band_centers and band_widths differ in length".into()));
        }
        if self.band_widths.iter().any(|w| !(*w > 0.0 && *w <= 1.0)) {
            return Err(Error::Config("band widths must lie in (0, 1]".into()));
        }
        if self.band_centers.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("band centres must be finite".into()));
        }
        if self.band_centers.is_empty() && self.scatter_fraction == 0.0 {
            return Err(Error::Config("profile has neither bands nor scatter".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassProfiles {
    pub corona: ClassProfile,
    pub floating: ClassProfile,
    pub particle: ClassProfile,
    pub void: ClassProfile,
}

impl ClassProfiles {
    pub fn get(&self, label: PdLabel) -> &ClassProfile {
        match label {
            PdLabel::Corona => &self.corona,
            PdLabel::Floating => &self.floating,
            PdLabel::Particle => &self.particle,
            PdLabel::Void => &self.void,
        }
    }

    pub fn get_mut(&mut self, label: PdLabel) -> &mut ClassProfile {
        match label {
            PdLabel::Corona => &mut self.corona,
            PdLabel::Floating => &mut self.floating,
            PdLabel::Particle => &mut self.particle,
            PdLabel::Void => &mut self.void,
        }
    }
}

impl Default for ClassProfiles {
    fn default() -> Self {
        ClassProfiles {
            corona: ClassProfile::corona(),
            floating: ClassProfile::floating(),
            particle: ClassProfile::particle(),
            void: ClassProfile::void(),
        }
    }
}

/// Class counts of the reference corpus: corona, floating, particle, void.
pub const DEFAULT_COUNTS: [usize; NUM_CLASSES] = [85, 99, 80, 64];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub counts: [usize; NUM_CLASSES],
    pub profiles: ClassProfiles,
    pub dims: Dims,
    pub master_seed: u64,
}

impl SyntheticSpec {
    pub fn new(master_seed: u64) -> Self {
        SyntheticSpec {
            counts: DEFAULT_COUNTS,
            profiles: ClassProfiles::default(),
            dims: Dims::default(),
            master_seed,
        }
    }
}

/// Generated sample plus the layout used to draw it.
#[derive(Debug, Clone)]
pub struct Trace {
    pub signal: PrpdSignal,
    /// Applied rotation: output phase `i` is drawn phase `(i + offset) mod P`.
    pub offset: usize,
    /// Band centres and half-widths in (unrotated) phase units.
    pub bands: Vec<(f64, f64)>,
}

impl Trace {
    /// Whether output phase `phase` lies inside one of the drawn bands.
    pub fn in_band(&self, phase: usize) -> bool {
        let p = self.signal.dims().phases;
        let drawn = (phase + self.offset) % p;
        self.bands
            .iter()
            .any(|&(c, h)| circular_distance(drawn as f64, c, p) <= h)
    }
}

fn circular_distance(a: f64, b: f64, period: usize) -> f64 {
    let p = period as f64;
    let d = (a - b).rem_euclid(p);
    d.min(p - d)
}

fn quantize(v: f64) -> f64 {
    (v / QUANTUM).round() * QUANTUM
}

pub fn generate_sample(label: PdLabel, profile: &ClassProfile, dims: Dims, seed: u64) -> Result<PrpdSignal> {
    Ok(generate_traced(label, profile, dims, seed, format!("{}-{seed:016x}", label.name()))?.signal)
}

pub fn generate_traced(label: PdLabel, profile: &ClassProfile, dims: Dims, seed: u64, id: String) -> Result<Trace> {
    profile.validate()?;
    let (phases, cycles) = (dims.phases, dims.cycles);
    let mut rng = rng_from_seed(seed);
    let jitter = |rng: &mut rand_chacha::ChaCha8Rng, j: f64| if j > 0.0 { rng.gen_range(-j..=j) } else { 0.0 };

    let gain = 1.0 + jitter(&mut rng, profile.gain_jitter);
    let bands: Vec<(f64, f64)> = profile
        .band_centers
        .iter()
        .zip(&profile.band_widths)
        .map(|(&c, &w)| {
            let centre = (c + jitter(&mut rng, profile.center_jitter)) * phases as f64;
            let spread = w * (1.0 + jitter(&mut rng, profile.width_jitter)) * phases as f64;
            (centre.rem_euclid(phases as f64), spread)
        })
        .collect();
    let (lo, hi) = profile.amplitude_range;
    let amplitude = |rng: &mut rand_chacha::ChaCha8Rng| if hi > lo { rng.gen_range(lo..hi) } else { lo } * gain;

    let fills: Vec<f64> = (0..bands.len())
        .map(|b| {
            let fill = (profile.cycle_fill * (1.0 + jitter(&mut rng, profile.fill_jitter))).clamp(0.0, 1.0);
            if b > 0 && profile.band_dropout > 0.0 && rng.gen_bool(profile.band_dropout) {
                0.0
            } else {
                fill
            }
        })
        .collect();

    let mut values = vec![0.0f64; dims.len()];
    for (&(centre, half), &fill) in bands.iter().zip(&fills) {
        let reach = half.ceil() as isize;
        let base = centre.round() as isize;
        for cycle in 0..cycles {
            if !rng.gen_bool(fill) {
                continue;
            }
            for d in -reach..=reach {
                let phase = (base + d).rem_euclid(phases as isize) as usize;
                let dist = circular_distance(phase as f64, centre, phases);
                if dist > half {
                    continue;
                }
                let taper = 1.0 - 0.3 * (dist / half).powi(2);
                let v = amplitude(&mut rng) * taper;
                let cell = &mut values[phase * cycles + cycle];
                *cell = cell.max(v);
            }
        }
    }
    if profile.scatter_fraction > 0.0 {
        for cell in values.iter_mut() {
            if rng.gen_bool(profile.scatter_fraction) {
                *cell = cell.max(amplitude(&mut rng));
            }
        }
    }
    if profile.noise_fraction > 0.0 && profile.noise_amplitude > 0.0 {
        for cell in values.iter_mut() {
            if rng.gen_bool(profile.noise_fraction) {
                *cell = cell.max(rng.gen_range(0.0..=profile.noise_amplitude));
            }
        }
    }
    for v in values.iter_mut() {
        *v = quantize(*v);
    }
    let offset = if profile.random_offset {
        rng.gen_range(0..phases)
    } else {
        0
    };
    let signal = PrpdSignal::new(id, Some(label), dims, values)?.rotate_phases(offset);
    Ok(Trace { signal, offset, bands })
}

/// Generates `counts[k]` samples of each class, grouped by class in label-code
/// order. Sample `n` (global index) is seeded from `(master_seed, n)`.
pub fn generate_corpus(spec: &SyntheticSpec) -> Result<Dataset> {
    use rayon::prelude::*;

    for label in PdLabel::ALL {
        spec.profiles.get(label).validate()?;
    }
    let jobs: Vec<(PdLabel, usize, usize)> = PdLabel::ALL
        .iter()
        .flat_map(|&l| (0..spec.counts[l.code()]).map(move |k| (l, k)))
        .enumerate()
        .map(|(n, (l, k))| (l, k, n))
        .collect();
    let samples = jobs
        .par_iter()
        .map(|&(label, k, n)| {
            let seed = derive_seed(spec.master_seed, stream::SAMPLE, n as u64);
            let id = format!("{}-{k:03}", label.name());
            generate_traced(label, spec.profiles.get(label), spec.dims, seed, id).map(|t| t.signal)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::from_samples(spec.dims, samples)
}
