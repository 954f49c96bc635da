use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::DEFAULT_MAX_GAP_WEEKS;
use crate::kde::{BandwidthPolicy, Boundary};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("n must be at least 1")]
    ZeroPeriods,
    #[error("k must be at least 1")]
    ZeroEvents,
    #[error("threshold must be positive and finite, got {0}")]
    Threshold(f64),
    #[error("fixed bandwidth must be positive and finite, got {0}")]
    Bandwidth(f64),
    #[error("unsupported kernel {0:?}; only \"gaussian\" is available")]
    Kernel(String),
    #[error("bandwidth.method {0:?} requires bandwidth.value")]
    MissingBandwidthValue(String),
    #[error("unknown bandwidth.method {0:?}")]
    BandwidthMethod(String),
    #[error("cannot parse config: {0}")]
    Parse(String),
}

/// Parameters shared by every per-user detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Minimum number of periods in the training window.
    pub n: usize,
    /// Minimum number of events in the training window.
    pub k: usize,
    /// Densities at or below this are alerts.
    pub threshold: f64,
    pub max_gap_weeks: u32,
    pub bandwidth: BandwidthPolicy,
    pub boundary: Boundary,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            n: 3,
            k: 10,
            threshold: 0.001,
            max_gap_weeks: DEFAULT_MAX_GAP_WEEKS,
            bandwidth: BandwidthPolicy::Silverman,
            boundary: Boundary::Linear,
        }
    }
}

impl DetectorConfig {
    pub fn new(n: usize, k: usize, threshold: f64) -> Self {
        DetectorConfig {
            n,
            k,
            threshold,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return Err(ConfigError::ZeroPeriods);
        }
        if self.k == 0 {
            return Err(ConfigError::ZeroEvents);
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(ConfigError::Threshold(self.threshold));
        }
        if let BandwidthPolicy::Fixed(h) = self.bandwidth {
            if !(h.is_finite() && h > 0.0) {
                return Err(ConfigError::Bandwidth(h));
            }
        }
        Ok(())
    }

    /// True when the alert threshold sits above the density of a perfectly
    /// flat profile, so even evenly spread activity can raise alerts.
    pub fn threshold_exceeds_uniform(&self) -> bool {
        self.threshold >= 1.0 / crate::calendar::MINUTES_PER_DAY as f64
    }
}

/// The on-disk configuration: flat keys, every one optional.
///
/// ```toml
/// n = 3
/// k = 10
/// threshold = 0.001
/// max_gap_weeks = 3
/// bandwidth.method = "silverman"   # or "fixed"
/// bandwidth.value = 15.0           # minutes, for "fixed"
/// kernel = "gaussian"
/// circular = false
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub threshold: Option<f64>,
    pub max_gap_weeks: Option<u32>,
    pub bandwidth: Option<BandwidthSection>,
    pub kernel: Option<String>,
    pub circular: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandwidthSection {
    pub method: Option<String>,
    pub value: Option<f64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Values set in `other` win.
    pub fn merge(mut self, other: ConfigFile) -> Self {
        self.n = other.n.or(self.n);
        self.k = other.k.or(self.k);
        self.threshold = other.threshold.or(self.threshold);
        self.max_gap_weeks = other.max_gap_weeks.or(self.max_gap_weeks);
        self.kernel = other.kernel.or(self.kernel);
        self.circular = other.circular.or(self.circular);
        self.bandwidth = match (self.bandwidth, other.bandwidth) {
            (Some(base), Some(over)) => Some(BandwidthSection {
                method: over.method.or(base.method),
                value: over.value.or(base.value),
            }),
            (base, over) => over.or(base),
        };
        self
    }

    /// Applies the file over the defaults and validates the result.
    pub fn resolve(&self) -> Result<DetectorConfig, ConfigError> {
        let defaults = DetectorConfig::default();
        if let Some(kernel) = &self.kernel {
            if !kernel.eq_ignore_ascii_case("gaussian") {
                return Err(ConfigError::Kernel(kernel.clone()));
            }
        }
        let section = self.bandwidth.clone().unwrap_or_default();
        let bandwidth = match section.method.as_deref().unwrap_or("silverman") {
            "silverman" => BandwidthPolicy::Silverman,
            "fixed" => BandwidthPolicy::Fixed(
                section
                    .value
                    .ok_or_else(|| ConfigError::MissingBandwidthValue("fixed".into()))?,
            ),
            other => return Err(ConfigError::BandwidthMethod(other.to_owned())),
        };
        let config = DetectorConfig {
            n: self.n.unwrap_or(defaults.n),
            k: self.k.unwrap_or(defaults.k),
            threshold: self.threshold.unwrap_or(defaults.threshold),
            max_gap_weeks: self.max_gap_weeks.unwrap_or(defaults.max_gap_weeks),
            bandwidth,
            boundary: if self.circular.unwrap_or(false) {
                Boundary::Circular
            } else {
                Boundary::Linear
            },
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_parameters() {
        let config = DetectorConfig::default();
        assert_eq!((config.n, config.k, config.threshold), (3, 10, 0.001));
        assert!(config.validate().is_ok());
        assert!(config.threshold_exceeds_uniform());
    }

    #[test]
    fn validation() {
        assert_eq!(
            DetectorConfig::new(0, 10, 0.001).validate(),
            Err(ConfigError::ZeroPeriods)
        );
        assert_eq!(
            DetectorConfig::new(3, 0, 0.001).validate(),
            Err(ConfigError::ZeroEvents)
        );
        assert!(DetectorConfig::new(3, 10, 0.0).validate().is_err());
        assert!(DetectorConfig::new(3, 10, f64::NAN).validate().is_err());
    }

    #[test]
    fn parses_flat_file() {
        let file = ConfigFile::parse(
            "n = 4\nk = 20\nthreshold = 0.0005\nmax_gap_weeks = 2\n\
             bandwidth.method = \"fixed\"\nbandwidth.value = 12.5\n\
             kernel = \"gaussian\"\ncircular = true\n",
        )
        .unwrap();
        let config = file.resolve().unwrap();
        assert_eq!(config.n, 4);
        assert_eq!(config.k, 20);
        assert_eq!(config.max_gap_weeks, 2);
        assert_eq!(config.bandwidth, BandwidthPolicy::Fixed(12.5));
        assert_eq!(config.boundary, Boundary::Circular);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(
            ConfigFile::parse("n = "),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(
            ConfigFile::parse("bogus = 1"),
            Err(ConfigError::Parse(_))
        ));
        let file = ConfigFile::parse("kernel = \"epanechnikov\"").unwrap();
        assert!(matches!(file.resolve(), Err(ConfigError::Kernel(_))));
        let file = ConfigFile::parse("bandwidth.method = \"fixed\"").unwrap();
        assert!(matches!(
            file.resolve(),
            Err(ConfigError::MissingBandwidthValue(_))
        ));
        let file = ConfigFile::parse("n = 0").unwrap();
        assert_eq!(file.resolve(), Err(ConfigError::ZeroPeriods));
    }

    #[test]
    fn overrides_win() {
        let base = ConfigFile::parse("n = 4\nbandwidth.method = \"fixed\"\nbandwidth.value = 3.0")
            .unwrap();
        let over = ConfigFile {
            n: Some(5),
            bandwidth: Some(BandwidthSection {
                method: None,
                value: Some(9.0),
            }),
            ..ConfigFile::default()
        };
        let config = base.merge(over).resolve().unwrap();
        assert_eq!(config.n, 5);
        assert_eq!(config.bandwidth, BandwidthPolicy::Fixed(9.0));
    }
}
