//! Gaussian kernel density over the minute-of-day grid.
//!
//! A profile stores the density at each of the 1440 integer minutes. Training
//! minutes are integers, so fitting bins them and convolves the bin counts
//! with a kernel table indexed by minute distance. That is `O(bins * 1440)`
//! instead of `O(samples * 1440)` and evaluates exactly the same terms as the
//! direct sum.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::{EventsByWeek, MinuteOfDay, Period, MINUTES_PER_DAY};

/// Lower bound on any selected bandwidth, in minutes.
pub const MIN_BANDWIDTH: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KdeError {
    #[error("cannot fit a density to an empty sample")]
    EmptySample,
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("profile must hold {MINUTES_PER_DAY} densities, got {0}")]
    GridLength(usize),
    #[error("density at minute {0} is negative or not finite")]
    InvalidDensity(usize),
    #[error("profile sample_count must be at least 1")]
    NoSamples,
}

/// How kernel distance is measured on the minute axis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Plain distance on `[0, 1439]`; mass near midnight leaks off the grid.
    #[default]
    Linear,
    /// Distance modulo 1440, so 23:59 and 00:00 are one minute apart.
    Circular,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", content = "value", rename_all = "lowercase")]
pub enum BandwidthPolicy {
    #[default]
    Silverman,
    Fixed(f64),
}

impl BandwidthPolicy {
    pub fn validate(&self) -> Result<(), KdeError> {
        match *self {
            BandwidthPolicy::Silverman => Ok(()),
            BandwidthPolicy::Fixed(h) if h.is_finite() && h > 0.0 => Ok(()),
            BandwidthPolicy::Fixed(h) => Err(KdeError::InvalidBandwidth(h)),
        }
    }

    pub fn select(&self, sample: &TrainingSample) -> Result<f64, KdeError> {
        match *self {
            BandwidthPolicy::Silverman => select_bandwidth(sample),
            BandwidthPolicy::Fixed(h) => {
                self.validate()?;
                if sample.is_empty() {
                    return Err(KdeError::EmptySample);
                }
                Ok(h)
            }
        }
    }
}

/// Merged training minutes, in window order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrainingSample(Vec<MinuteOfDay>);

impl TrainingSample {
    pub fn new(minutes: Vec<MinuteOfDay>) -> Self {
        TrainingSample(minutes)
    }

    pub fn minutes(&self) -> &[MinuteOfDay] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<MinuteOfDay> for TrainingSample {
    fn from_iter<I: IntoIterator<Item = MinuteOfDay>>(iter: I) -> Self {
        TrainingSample(iter.into_iter().collect())
    }
}

/// Concatenates the minutes recorded for `used_periods`, in that order.
pub fn fuse_samples(events_by_week: &EventsByWeek, used_periods: &[Period]) -> TrainingSample {
    used_periods
        .iter()
        .filter_map(|p| events_by_week.get(p))
        .flatten()
        .copied()
        .collect()
}

/// Silverman's rule of thumb, floored at [`MIN_BANDWIDTH`].
pub fn select_bandwidth(sample: &TrainingSample) -> Result<f64, KdeError> {
    if sample.is_empty() {
        return Err(KdeError::EmptySample);
    }
    let mut values: Vec<f64> = sample.0.iter().map(|m| f64::from(m.get())).collect();
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let sigma = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    values.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&values, 0.75) - quantile_sorted(&values, 0.25);
    Ok(silverman_bandwidth(sigma, iqr, values.len()))
}

/// `0.9 * min(sigma, iqr / 1.34) * m^(-1/5)`, floored at [`MIN_BANDWIDTH`].
pub fn silverman_bandwidth(sigma: f64, iqr: f64, m: usize) -> f64 {
    let spread = sigma.min(iqr / 1.34);
    let h = 0.9 * spread * (m as f64).powf(-0.2);
    if h.is_finite() {
        h.max(MIN_BANDWIDTH)
    } else {
        MIN_BANDWIDTH
    }
}

// Linear interpolation between closest ranks.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Standard normal density.
#[inline]
pub fn gaussian(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Normal,
    Anomalous,
}

/// A fitted activity density, one value per minute of the day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile")]
pub struct KdeProfile {
    densities: Vec<f64>,
    bandwidth: f64,
    sample_count: usize,
}

#[derive(Deserialize)]
struct RawProfile {
    densities: Vec<f64>,
    bandwidth: f64,
    sample_count: usize,
}

impl TryFrom<RawProfile> for KdeProfile {
    type Error = KdeError;

    fn try_from(raw: RawProfile) -> Result<Self, Self::Error> {
        KdeProfile::from_parts(raw.densities, raw.bandwidth, raw.sample_count)
    }
}

impl KdeProfile {
    pub fn from_parts(
        densities: Vec<f64>,
        bandwidth: f64,
        sample_count: usize,
    ) -> Result<Self, KdeError> {
        if densities.len() != MINUTES_PER_DAY {
            return Err(KdeError::GridLength(densities.len()));
        }
        if let Some(bad) = densities.iter().position(|d| !d.is_finite() || *d < 0.0) {
            return Err(KdeError::InvalidDensity(bad));
        }
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(KdeError::InvalidBandwidth(bandwidth));
        }
        if sample_count == 0 {
            return Err(KdeError::NoSamples);
        }
        Ok(KdeProfile {
            densities,
            bandwidth,
            sample_count,
        })
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn density_at(&self, minute: MinuteOfDay) -> f64 {
        self.densities[minute.index()]
    }

    pub fn classify(&self, minute: MinuteOfDay, threshold: f64) -> Verdict {
        classify_minute(self, minute, threshold)
    }

    /// Grid minute with the highest density (first one on ties).
    pub fn peak(&self) -> MinuteOfDay {
        let mut best = 0;
        for (i, d) in self.densities.iter().enumerate() {
            if *d > self.densities[best] {
                best = i;
            }
        }
        MinuteOfDay::new(best as u32).expect("grid index")
    }

    /// Riemann sum of the grid at unit spacing.
    pub fn mass(&self) -> f64 {
        self.densities.iter().sum()
    }
}

/// Evaluates the kernel density of `sample` at every grid minute.
pub fn fit_profile(
    sample: &TrainingSample,
    bandwidth: f64,
    boundary: Boundary,
) -> Result<KdeProfile, KdeError> {
    if sample.is_empty() {
        return Err(KdeError::EmptySample);
    }
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(KdeError::InvalidBandwidth(bandwidth));
    }

    let mut counts = [0u32; MINUTES_PER_DAY];
    for m in sample.minutes() {
        counts[m.index()] += 1;
    }

    // kernel[d] = phi(d / h) for the distance d between two grid minutes
    let kernel: Vec<f64> = (0..MINUTES_PER_DAY)
        .map(|d| {
            let d = match boundary {
                Boundary::Linear => d,
                Boundary::Circular => d.min(MINUTES_PER_DAY - d),
            };
            gaussian(d as f64 / bandwidth)
        })
        .collect();

    let mut densities = vec![0.0f64; MINUTES_PER_DAY];
    for (at, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let weight = f64::from(count);
        match boundary {
            Boundary::Linear => {
                for (g, dens) in densities.iter_mut().enumerate() {
                    *dens += weight * kernel[g.abs_diff(at)];
                }
            }
            Boundary::Circular => {
                for (g, dens) in densities.iter_mut().enumerate() {
                    *dens += weight * kernel[(g + MINUTES_PER_DAY - at) % MINUTES_PER_DAY];
                }
            }
        }
    }

    let scale = 1.0 / (sample.len() as f64 * bandwidth);
    for dens in &mut densities {
        *dens *= scale;
    }

    Ok(KdeProfile {
        densities,
        bandwidth,
        sample_count: sample.len(),
    })
}

pub fn density_at(profile: &KdeProfile, minute: MinuteOfDay) -> f64 {
    profile.density_at(minute)
}

/// A minute is anomalous when its density is at or below `threshold`.
pub fn classify_minute(profile: &KdeProfile, minute: MinuteOfDay, threshold: f64) -> Verdict {
    if profile.density_at(minute) <= threshold {
        Verdict::Anomalous
    } else {
        Verdict::Normal
    }
}
